//! Diagonal states of `n` computation qubits plus one reset system.
//!
//! The joint probability vector is indexed as `i * k + m`, where `i` is the
//! computation basis index (qubit 1 is the most significant bit) and `m` is
//! the reset level. Reset levels are ordered from most to least populated.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::error::{Error, Result};
use crate::scalar::{is_one, pow2, sum, Scalar};

/// Upper limit on the number of computation qubits a state may carry.
pub const MAX_QUBITS: usize = 30;

/// First problem found while checking a raw probability vector.
#[derive(Debug, Clone, PartialEq, Error, Serialize)]
pub enum Violation {
    #[error("length {found} does not match 2^n * k = {expected}")]
    Length { expected: usize, found: usize },

    #[error("entry {index} is negative ({value})")]
    Negative { index: usize, value: f64 },

    #[error("entry {index} is not finite")]
    NonFinite { index: usize },

    #[error("entries sum to {sum}, not 1")]
    Normalization { sum: f64 },
}

/// Checks length, non-negativity and normalization of a joint vector.
///
/// Violations are reported, not raised; the first one found wins.
pub fn validate<T: Scalar>(
    n: usize,
    reset_dim: usize,
    probs: &[T],
) -> std::result::Result<(), Violation> {
    let expected = joint_len(n, reset_dim).unwrap_or(usize::MAX);
    if probs.len() != expected {
        return Err(Violation::Length {
            expected,
            found: probs.len(),
        });
    }
    check_entries(probs)
}

fn check_entries<T: Scalar>(probs: &[T]) -> std::result::Result<(), Violation> {
    for (index, p) in probs.iter().enumerate() {
        let value = p.to_f64();
        if !value.is_finite() {
            return Err(Violation::NonFinite { index });
        }
        if *p < T::zero() {
            return Err(Violation::Negative { index, value });
        }
    }
    let total = sum(probs);
    if !is_one(&total) {
        return Err(Violation::Normalization {
            sum: total.to_f64(),
        });
    }
    Ok(())
}

fn joint_len(n: usize, reset_dim: usize) -> Option<usize> {
    if n > MAX_QUBITS {
        return None;
    }
    (1usize << n).checked_mul(reset_dim)
}

/// Equilibrium populations `a_1 >= ... >= a_k > 0` of the reset system.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = ""))]
pub struct ResetDistribution<T: Scalar = f64> {
    #[serde(serialize_with = "serialize_as_f64")]
    probs: Vec<T>,
}

impl<T: Scalar> ResetDistribution<T> {
    pub fn new(probs: Vec<T>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::invalid(format!(
                "reset system needs at least 2 levels, got {}",
                probs.len()
            )));
        }
        check_entries(&probs)?;
        if probs.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::invalid(
                "reset populations must be sorted decreasing",
            ));
        }
        if !(probs[probs.len() - 1] > T::zero()) {
            return Err(Error::invalid(
                "smallest reset population must be strictly positive",
            ));
        }
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    /// Number of reset levels `k`.
    pub fn dim(&self) -> usize {
        self.probs.len()
    }

    pub fn largest(&self) -> &T {
        &self.probs[0]
    }

    pub fn smallest(&self) -> &T {
        &self.probs[self.probs.len() - 1]
    }

    /// The "large gap" `ln(a_1 / a_k)`.
    pub fn log_gap(&self) -> f64 {
        log_ratio(self.largest(), self.smallest())
    }

    /// Half the large gap: the polarization of a qubit reset with the same
    /// extreme populations.
    pub fn effective_polarization(&self) -> f64 {
        0.5 * self.log_gap()
    }

    pub fn to_f64(&self) -> ResetDistribution<f64> {
        ResetDistribution {
            probs: self.probs.iter().map(Scalar::to_f64).collect(),
        }
    }
}

/// Reduced state `p_0 ... p_{2^n - 1}` of the computation qubits.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = ""))]
pub struct ComputationMarginal<T: Scalar = f64> {
    #[serde(serialize_with = "serialize_as_f64")]
    probs: Vec<T>,
}

impl<T: Scalar> ComputationMarginal<T> {
    pub fn new(probs: Vec<T>) -> Result<Self> {
        if probs.is_empty() || !probs.len().is_power_of_two() || probs.len() < 2 {
            return Err(Error::invalid(format!(
                "marginal length {} is not 2^n with n >= 1",
                probs.len()
            )));
        }
        check_entries(&probs)?;
        Ok(Self { probs })
    }

    /// Rescales `probs` to unit sum before validating.
    pub fn normalized(probs: Vec<T>) -> Result<Self> {
        let total = sum(&probs);
        if !(total > T::zero()) {
            return Err(Error::invalid(
                "cannot normalize a vector with non-positive sum",
            ));
        }
        Self::new(probs.into_iter().map(|p| p / total.clone()).collect())
    }

    pub(crate) fn from_vec_unchecked(probs: Vec<T>) -> Self {
        Self { probs }
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn into_vec(self) -> Vec<T> {
        self.probs
    }

    pub fn num_qubits(&self) -> usize {
        self.probs.len().trailing_zeros() as usize
    }

    pub fn is_sorted_decreasing(&self) -> bool {
        self.probs.windows(2).all(|w| w[0] >= w[1])
    }

    /// Joint state `self ⊗ reset`.
    pub fn tensor(&self, reset: &ResetDistribution<T>) -> DiagonalState<T> {
        let k = reset.dim();
        let mut probs = Vec::with_capacity(self.probs.len() * k);
        for p in &self.probs {
            probs.extend(reset.probs.iter().map(|a| p.clone() * a.clone()));
        }
        DiagonalState {
            n: self.num_qubits(),
            reset_dim: k,
            probs,
        }
    }

    /// Polarization of qubit 1 from the upper and lower halves of the marginal.
    ///
    /// This does not go through the joint state, so it serves as a cross-check
    /// on [`qubit_polarization`].
    pub fn leading_qubit_polarization(&self) -> Result<f64> {
        let half = self.probs.len() / 2;
        let upper = sum(&self.probs[..half]);
        let lower = sum(&self.probs[half..]);
        polarization_from(1, &upper, &lower)
    }

    pub fn to_f64(&self) -> ComputationMarginal<f64> {
        ComputationMarginal {
            probs: self.probs.iter().map(Scalar::to_f64).collect(),
        }
    }
}

/// Diagonal of the joint density matrix of `n` computation qubits and one
/// `k`-level reset system.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = ""))]
pub struct DiagonalState<T: Scalar = f64> {
    n: usize,
    reset_dim: usize,
    #[serde(serialize_with = "serialize_as_f64")]
    probs: Vec<T>,
}

impl<T: Scalar> DiagonalState<T> {
    pub fn new(n: usize, reset_dim: usize, probs: Vec<T>) -> Result<Self> {
        check_dims(n, reset_dim)?;
        validate(n, reset_dim, &probs)?;
        Ok(Self {
            n,
            reset_dim,
            probs,
        })
    }

    /// Rescales `probs` to unit sum before validating.
    pub fn normalized(n: usize, reset_dim: usize, probs: Vec<T>) -> Result<Self> {
        let total = sum(&probs);
        if !(total > T::zero()) {
            return Err(Error::invalid(
                "cannot normalize a vector with non-positive sum",
            ));
        }
        Self::new(
            n,
            reset_dim,
            probs.into_iter().map(|p| p / total.clone()).collect(),
        )
    }

    pub(crate) fn from_parts_unchecked(n: usize, reset_dim: usize, probs: Vec<T>) -> Self {
        debug_assert_eq!(probs.len(), (1 << n) * reset_dim);
        Self {
            n,
            reset_dim,
            probs,
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn reset_dim(&self) -> usize {
        self.reset_dim
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn into_vec(self) -> Vec<T> {
        self.probs
    }

    /// Joint entries belonging to computation basis index `i`.
    pub fn block(&self, i: usize) -> &[T] {
        &self.probs[i * self.reset_dim..(i + 1) * self.reset_dim]
    }

    pub fn to_f64(&self) -> DiagonalState<f64> {
        DiagonalState {
            n: self.n,
            reset_dim: self.reset_dim,
            probs: self.probs.iter().map(Scalar::to_f64).collect(),
        }
    }
}

impl<T: Scalar> fmt::Display for DiagonalState<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={} k={} {{", self.n, self.reset_dim)?;
        for (i, p) in self.probs.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", p.to_f64())?;
        }
        write!(f, "}}")
    }
}

fn check_dims(n: usize, reset_dim: usize) -> Result<()> {
    if !(1..=MAX_QUBITS).contains(&n) {
        return Err(Error::invalid(format!(
            "qubit count {n} outside 1..={MAX_QUBITS}"
        )));
    }
    if reset_dim < 2 {
        return Err(Error::invalid(format!("reset dimension {reset_dim} < 2")));
    }
    Ok(())
}

fn serialize_as_f64<T: Scalar, S: serde::Serializer>(
    values: &[T],
    serializer: S,
) -> std::result::Result<S::Ok, S::Error> {
    serializer.collect_seq(values.iter().map(Scalar::to_f64))
}

fn log_ratio<T: Scalar>(num: &T, den: &T) -> f64 {
    (num.clone() / den.clone()).to_f64().ln()
}

fn polarization_from<T: Scalar>(qubit: usize, upper: &T, lower: &T) -> Result<f64> {
    if *upper <= T::zero() || *lower <= T::zero() {
        return Err(Error::SingularPolarization {
            qubit,
            p0: upper.to_f64(),
            p1: lower.to_f64(),
        });
    }
    Ok(0.5 * log_ratio(upper, lower))
}

/// Thermal qubit reset `{e^ε, e^-ε} / (e^ε + e^-ε)`.
pub fn make_thermal_reset(epsilon: f64) -> Result<ResetDistribution<f64>> {
    if !epsilon.is_finite() || epsilon < 0.0 {
        return Err(Error::invalid(format!(
            "polarization must be finite and >= 0, got {epsilon}"
        )));
    }
    // Both entries are formed from e^{-2ε} so the lower level keeps full
    // relative precision at large ε.
    let boltzmann = (-2.0 * epsilon).exp();
    let z = 1.0 + boltzmann;
    let reset = ResetDistribution::new(vec![1.0 / z, boltzmann / z])?;
    Ok(reset)
}

/// Reset system built from several independent reset systems, with its
/// joint populations sorted decreasing.
pub fn make_tensor_reset<T: Scalar>(
    parts: &[ResetDistribution<T>],
) -> Result<ResetDistribution<T>> {
    let (first, rest) = parts
        .split_first()
        .ok_or_else(|| Error::invalid("tensor reset needs at least one part"))?;
    let mut probs = first.probs.clone();
    for part in rest {
        probs = probs
            .iter()
            .flat_map(|p| part.probs.iter().map(move |a| p.clone() * a.clone()))
            .collect();
    }
    sort_decreasing(&mut probs);
    ResetDistribution::new(probs)
}

/// Uniform computation marginal tensored with the reset populations.
pub fn maximally_mixed<T: Scalar>(
    n: usize,
    reset: &ResetDistribution<T>,
) -> Result<DiagonalState<T>> {
    check_dims(n, reset.dim())?;
    let weight = T::one() / pow2::<T>(n);
    let block: Vec<T> = reset
        .probs
        .iter()
        .map(|a| a.clone() * weight.clone())
        .collect();
    let probs = block
        .iter()
        .cloned()
        .cycle()
        .take(block.len() << n)
        .collect();
    Ok(DiagonalState::from_parts_unchecked(n, reset.dim(), probs))
}

/// Partial trace over the reset system: `p_i = Σ_m λ_{i·k+m}`.
pub fn computation_marginal<T: Scalar>(state: &DiagonalState<T>) -> ComputationMarginal<T> {
    let probs = state.probs.chunks_exact(state.reset_dim).map(sum).collect();
    ComputationMarginal::from_vec_unchecked(probs)
}

/// `½ ln(P_0 / P_1)` for computation qubit `qubit` (1-based, qubit 1 most
/// significant), summing joint entries by the qubit's bit value.
pub fn qubit_polarization<T: Scalar>(state: &DiagonalState<T>, qubit: usize) -> Result<f64> {
    if qubit < 1 || qubit > state.n {
        return Err(Error::invalid(format!(
            "qubit index {qubit} outside 1..={}",
            state.n
        )));
    }
    let shift = state.n - qubit;
    let mut upper = T::zero();
    let mut lower = T::zero();
    for (index, p) in state.probs.iter().enumerate() {
        let basis = index / state.reset_dim;
        if (basis >> shift) & 1 == 0 {
            upper = upper + p.clone();
        } else {
            lower = lower + p.clone();
        }
    }
    polarization_from(qubit, &upper, &lower)
}

/// Consecutive log-ratios `d_i = ln(p_i / p_{i+1})`.
pub fn pairwise_distances<T: Scalar>(marginal: &ComputationMarginal<T>) -> Result<Vec<f64>> {
    if let Some(index) = marginal.probs.iter().position(|p| *p <= T::zero()) {
        return Err(Error::SingularDistance { index });
    }
    Ok(marginal
        .probs
        .windows(2)
        .map(|w| log_ratio(&w[0], &w[1]))
        .collect())
}

/// Stable sort into non-increasing order; ties keep their original order.
pub(crate) fn sort_decreasing<T: Scalar>(values: &mut [T]) {
    values.sort_by(|a, b| b.partial_cmp(a).expect("probabilities are never NaN"));
}
