//! Closed-form cooling limits.
//!
//! Starting from any state whose consecutive marginal distances never exceed
//! the reset's large gap `L = ln(a_1 / a_k)` (the maximally mixed state in
//! particular), the computation marginal converges to the geometric sequence
//! `p_i = p_0 q^i` with `q = a_k / a_1 = e^{-L}`. Everything here follows from
//! that sequence. For other starts, [`block_predict`] groups the marginal into
//! blocks that saturate and merge independently.

use std::ops::Range;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::state::{qubit_polarization, ComputationMarginal, ResetDistribution};

/// Limit of `p_0`: `(q - 1) / (q^{2^n} - 1)` with `q = a_k / a_1`, or `2^-n`
/// when the reset is uniform.
pub fn asymptotic_p0(n: usize, reset: &ResetDistribution) -> f64 {
    let gap = reset.log_gap();
    if gap == 0.0 {
        return (-(n as f64)).exp2();
    }
    // expm1 keeps the ratio accurate when the gap is tiny.
    (-gap).exp_m1() / (-gap * (n as f64).exp2()).exp_m1()
}

/// The asymptotic computation marginal `p_i = p_0 e^{-iL}`.
pub fn asymptotic_state(n: usize, reset: &ResetDistribution) -> ComputationMarginal {
    let gap = reset.log_gap();
    let p0 = asymptotic_p0(n, reset);
    let probs = (0..1usize << n)
        .map(|i| p0 * (-(i as f64) * gap).exp())
        .collect();
    ComputationMarginal::from_vec_unchecked(probs)
}

/// `2^{n-1} · ½ ln(a_1 / a_k)`.
pub fn qubit1_polarization_limit(n: usize, reset: &ResetDistribution) -> f64 {
    (n as f64 - 1.0).exp2() * reset.effective_polarization()
}

/// Largest joint entry in the limit, `a_1 · p_0^∞`.
pub fn lambda1_limit(n: usize, reset: &ResetDistribution) -> f64 {
    reset.largest() * asymptotic_p0(n, reset)
}

/// The earlier bound `e^{2^n ε} / 2^n` on the largest joint entry.
pub fn schulman_upper_bound(n: usize, epsilon: f64) -> f64 {
    let dim = (n as f64).exp2();
    (dim * epsilon).exp() / dim
}

/// Energies and bath temperature that set the effective temperature of
/// qubit 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TemperatureSpec {
    /// Gap of a computation qubit.
    pub delta: f64,
    /// Large gap of the reset system (sum of its level spacings).
    pub delta_total: f64,
    /// Heat-bath temperature in kelvin.
    pub t_bath: f64,
}

impl TemperatureSpec {
    pub fn new(delta: f64, delta_total: f64, t_bath: f64) -> Result<Self> {
        for (name, value) in [
            ("delta", delta),
            ("delta_total", delta_total),
            ("t_bath", t_bath),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::invalid(format!(
                    "{name} must be finite and > 0, got {value}"
                )));
            }
        }
        Ok(Self {
            delta,
            delta_total,
            t_bath,
        })
    }

    /// Spec from the ratio `δ / Δ_total` alone.
    pub fn from_ratio(gap_ratio: f64, t_bath: f64) -> Result<Self> {
        Self::new(gap_ratio, 1.0, t_bath)
    }
}

/// Asymptotic temperature of qubit 1: `(δ / Δ_total) · T_B / 2^{n-1}`.
pub fn effective_temperature(n: usize, spec: &TemperatureSpec) -> Result<f64> {
    if n < 1 {
        return Err(Error::invalid("qubit count must be >= 1"));
    }
    let spec = TemperatureSpec::new(spec.delta, spec.delta_total, spec.t_bath)?;
    Ok(spec.delta / spec.delta_total * spec.t_bath / (n as f64 - 1.0).exp2())
}

/// Everything the closed form says about one `(n, reset)` pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticPrediction {
    pub n: usize,
    pub reset: ResetDistribution,
    pub effective_polarization: f64,
    pub p_infinity: ComputationMarginal,
    pub qubit1_polarization_limit: f64,
    pub lambda1_limit: f64,
    /// Only defined for a two-level reset.
    pub schulman_bound: Option<f64>,
    /// Limit polarization of qubits `1..=n`.
    pub per_qubit_polarizations: Vec<f64>,
}

pub fn predict(n: usize, reset: &ResetDistribution) -> Result<AsymptoticPrediction> {
    if !(1..=crate::state::MAX_QUBITS).contains(&n) {
        return Err(Error::invalid(format!("qubit count {n} out of range")));
    }
    let p_infinity = asymptotic_state(n, reset);
    let joint = p_infinity.tensor(reset);
    let per_qubit_polarizations = (1..=n)
        .map(|j| qubit_polarization(&joint, j).unwrap_or(f64::INFINITY))
        .collect();
    let epsilon = reset.effective_polarization();
    Ok(AsymptoticPrediction {
        n,
        reset: reset.clone(),
        effective_polarization: epsilon,
        qubit1_polarization_limit: qubit1_polarization_limit(n, reset),
        lambda1_limit: lambda1_limit(n, reset),
        schulman_bound: (reset.dim() == 2).then(|| schulman_upper_bound(n, epsilon)),
        per_qubit_polarizations,
        p_infinity,
    })
}

/// Partition of the marginal into independently saturating blocks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockStructure {
    /// Half-open index ranges, in order, covering `0..2^n`.
    pub boundaries: Vec<Range<usize>>,
    pub block_masses: Vec<f64>,
    pub predicted_marginal: ComputationMarginal,
}

/// Predicts the long-run marginal from a sorted initial marginal.
///
/// Consecutive entries with distance at most `L` start in the same block.
/// Each block keeps its mass and spreads it geometrically with ratio
/// `e^{-L}`. When the spread pulls two neighbouring blocks closer than `L`
/// they merge, and the prediction is redone until no boundary moves.
pub fn block_predict(
    initial: &ComputationMarginal,
    reset: &ResetDistribution,
) -> Result<BlockStructure> {
    let p = initial.probs();
    if !initial.is_sorted_decreasing() {
        return Err(Error::invalid("initial marginal must be sorted decreasing"));
    }
    if p.iter().any(|&x| x <= 0.0) {
        return Err(Error::invalid("initial marginal must be strictly positive"));
    }
    let gap = reset.log_gap();

    let mut blocks: Vec<Range<usize>> = Vec::new();
    let mut start = 0;
    for i in 0..p.len() - 1 {
        if (p[i] / p[i + 1]).ln() > gap {
            blocks.push(start..i + 1);
            start = i + 1;
        }
    }
    blocks.push(start..p.len());

    loop {
        let masses: Vec<f64> = blocks.iter().map(|b| p[b.clone()].iter().sum()).collect();
        let predicted = spread(&blocks, &masses, gap, p.len());

        let mut merged: Vec<Range<usize>> = Vec::with_capacity(blocks.len());
        for block in &blocks {
            match merged.last_mut() {
                Some(prev) if (predicted[prev.end - 1] / predicted[block.start]).ln() < gap => {
                    prev.end = block.end;
                }
                _ => merged.push(block.clone()),
            }
        }
        if merged.len() == blocks.len() {
            return Ok(BlockStructure {
                boundaries: blocks,
                block_masses: masses,
                predicted_marginal: ComputationMarginal::from_vec_unchecked(predicted),
            });
        }
        blocks = merged;
    }
}

fn spread(blocks: &[Range<usize>], masses: &[f64], gap: f64, len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for (block, &mass) in blocks.iter().zip(masses) {
        let size = block.len() as f64;
        let head = if gap == 0.0 {
            mass / size
        } else {
            mass * (-gap).exp_m1() / (-gap * size).exp_m1()
        };
        for (j, slot) in out[block.clone()].iter_mut().enumerate() {
            *slot = head * (-(j as f64) * gap).exp();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run, InitialState, RunConfig};
    use crate::state::{make_tensor_reset, make_thermal_reset, pairwise_distances};

    fn reset(probs: &[f64]) -> ResetDistribution {
        ResetDistribution::new(probs.to_vec()).unwrap()
    }

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn p0_examples() {
        let r = make_thermal_reset(0.2).unwrap();
        let expected = ((-0.4f64).exp() - 1.0) / ((-1.6f64).exp() - 1.0);
        assert!((asymptotic_p0(2, &r) - expected).abs() < 1e-15);
        assert!((asymptotic_p0(2, &r) - 0.413079).abs() < 1e-6);

        let flat = make_thermal_reset(0.0).unwrap();
        for n in 1..=8 {
            assert_eq!(asymptotic_p0(n, &flat), 1.0 / (1 << n) as f64);
        }
        assert!((asymptotic_p0(1, &reset(&[0.6, 0.4])) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn p0_tiny_gap_approaches_uniform() {
        let r = make_thermal_reset(1e-12).unwrap();
        assert!((asymptotic_p0(3, &r) - 0.125).abs() < 1e-11);
    }

    #[test]
    fn state_examples() {
        let hot = reset(&[0.6, 0.4]);
        assert_close(asymptotic_state(1, &hot).probs(), &[0.6, 0.4], 1e-15);
        let flat = make_thermal_reset(0.0).unwrap();
        assert_close(asymptotic_state(2, &flat).probs(), &[0.25; 4], 0.0);
        assert_close(
            asymptotic_state(2, &hot).probs(),
            &[0.41538, 0.27692, 0.18462, 0.12308],
            1e-5,
        );
    }

    #[test]
    fn asymptotic_distances_saturate() {
        for eps in [0.01, 0.3, 1.7] {
            let r = make_thermal_reset(eps).unwrap();
            // Beyond ~700 nats the tail underflows f64.
            for n in (1..=8).filter(|&n| (1 << n) as f64 * 2.0 * eps < 700.0) {
                let d = pairwise_distances(&asymptotic_state(n, &r)).unwrap();
                assert!(d.iter().all(|x| (x - 2.0 * eps).abs() < 1e-12));
            }
        }
    }

    #[test]
    fn polarization_limit_examples() {
        let r = make_thermal_reset(0.1).unwrap();
        assert!((qubit1_polarization_limit(3, &r) - 0.4).abs() < 1e-12);
        let r = reset(&[0.7, 0.3]);
        assert!((qubit1_polarization_limit(1, &r) - r.effective_polarization()).abs() < 1e-15);
        let two = reset(&[0.36, 0.24, 0.24, 0.16]);
        assert!((qubit1_polarization_limit(2, &two) - 2.0 * 1.5f64.ln()).abs() < 1e-12);
        assert!((qubit1_polarization_limit(2, &two) - 0.81093).abs() < 1e-5);
    }

    #[test]
    fn effective_temperature_examples() {
        let spec = TemperatureSpec::from_ratio(1.0, 300.0).unwrap();
        assert!((effective_temperature(3, &spec).unwrap() - 75.0).abs() < 1e-12);
        let spec = TemperatureSpec::new(2.5, 2.5, 4.2).unwrap();
        assert_eq!(effective_temperature(1, &spec).unwrap(), 4.2);

        let electron = TemperatureSpec::from_ratio(1.0 / 660.0, 300.0).unwrap();
        let ratio = effective_temperature(4, &spec_ratio_one()).unwrap()
            / effective_temperature(4, &electron).unwrap();
        assert!((ratio - 660.0).abs() < 1e-9);

        assert!(TemperatureSpec::new(0.0, 1.0, 1.0).is_err());
        assert!(TemperatureSpec::new(1.0, -1.0, 1.0).is_err());
        let bad = TemperatureSpec {
            delta: 1.0,
            delta_total: 1.0,
            t_bath: 0.0,
        };
        assert!(effective_temperature(2, &bad).is_err());
    }

    fn spec_ratio_one() -> TemperatureSpec {
        TemperatureSpec::from_ratio(1.0, 300.0).unwrap()
    }

    #[test]
    fn schulman_examples() {
        let bound = schulman_upper_bound(2, 0.2);
        assert!((bound - 0.8f64.exp() / 4.0).abs() < 1e-15);
        assert!((bound - 0.556385).abs() < 1e-5);
        let lambda1 = lambda1_limit(2, &make_thermal_reset(0.2).unwrap());
        assert!((lambda1 - 0.24731).abs() < 1e-4);
        assert!(lambda1 <= bound);

        // At zero polarization the bound equals p_0^∞ = 2^-n; the largest
        // joint entry sits a factor a_1 = 1/2 below it.
        let flat = make_thermal_reset(0.0).unwrap();
        for n in 1..=5 {
            let uniform = 1.0 / (1 << n) as f64;
            assert_eq!(schulman_upper_bound(n, 0.0), uniform);
            assert_eq!(asymptotic_p0(n, &flat), uniform);
            assert_eq!(lambda1_limit(n, &flat), 0.5 * uniform);
        }
        assert!((schulman_upper_bound(2, 1.0) - 13.6495).abs() < 1e-3);
    }

    #[test]
    fn prediction_bundle() {
        let r = make_thermal_reset(0.1).unwrap();
        let pred = predict(3, &r).unwrap();
        assert!((pred.qubit1_polarization_limit - 0.4).abs() < 1e-12);
        assert!((pred.per_qubit_polarizations[0] - 0.4).abs() < 1e-12);
        assert!((pred.per_qubit_polarizations[1] - 0.2).abs() < 1e-12);
        assert!((pred.per_qubit_polarizations[2] - 0.1).abs() < 1e-12);
        assert!(pred.schulman_bound.is_some());

        let qutrit = reset(&[0.5, 0.3, 0.2]);
        assert!(predict(2, &qutrit).unwrap().schulman_bound.is_none());
        assert!(predict(0, &qutrit).is_err());
    }

    #[test]
    fn large_gap_is_the_only_reset_parameter() {
        let qubit = make_thermal_reset(0.3).unwrap();
        let (a1, a2) = (qubit.probs()[0], qubit.probs()[1]);
        // Same a_1 / a_k, different interior level and normalization.
        let mid = 0.5 * (a1 + a2);
        let z = a1 + mid + a2;
        let qutrit = reset(&[a1 / z, mid / z, a2 / z]);
        for n in 1..=6 {
            assert_close(
                asymptotic_state(n, &qubit).probs(),
                asymptotic_state(n, &qutrit).probs(),
                1e-14,
            );
            let diff = qubit1_polarization_limit(n, &qubit) - qubit1_polarization_limit(n, &qutrit);
            assert!(diff.abs() < 1e-12);
        }
    }

    #[test]
    fn block_examples() {
        let hot = reset(&[0.6, 0.4]);
        let m = ComputationMarginal::new(vec![0.75, 0.25]).unwrap();
        let b = block_predict(&m, &hot).unwrap();
        assert_eq!(b.boundaries, vec![0..1, 1..2]);
        assert_close(b.predicted_marginal.probs(), &[0.75, 0.25], 1e-15);

        let m = ComputationMarginal::new(vec![0.125; 8]).unwrap();
        let b = block_predict(&m, &hot).unwrap();
        assert_eq!(b.boundaries, vec![0..8]);
        assert_close(
            b.predicted_marginal.probs(),
            asymptotic_state(3, &hot).probs(),
            1e-15,
        );

        let l02 = make_thermal_reset(0.1).unwrap();
        let m = ComputationMarginal::new(vec![0.35, 0.30, 0.25, 0.10]).unwrap();
        let b = block_predict(&m, &l02).unwrap();
        assert_eq!(b.boundaries, vec![0..3, 3..4]);
        assert_close(
            b.predicted_marginal.probs(),
            &[0.36159, 0.29606, 0.24240, 0.10],
            1e-4,
        );
        assert_close(&b.block_masses, &[0.9, 0.1], 1e-15);
    }

    #[test]
    fn block_predict_rejects_bad_input() {
        let hot = reset(&[0.6, 0.4]);
        let unsorted = ComputationMarginal::new(vec![0.25, 0.75]).unwrap();
        assert!(matches!(
            block_predict(&unsorted, &hot),
            Err(Error::InvalidParameter(_))
        ));
        let zero = ComputationMarginal::new(vec![1.0, 0.0]).unwrap();
        assert!(block_predict(&zero, &hot).is_err());
    }

    #[test]
    fn block_example_matches_simulation() {
        let r = make_thermal_reset(0.1).unwrap();
        let m = ComputationMarginal::new(vec![0.35, 0.30, 0.25, 0.10]).unwrap();
        let predicted = block_predict(&m, &r).unwrap().predicted_marginal;
        let traj = run(&RunConfig::new(2, r).with_initial(InitialState::Marginal(m))).unwrap();
        assert!(traj.converged);
        assert_close(traj.final_marginal().probs(), predicted.probs(), 1e-9);
    }

    #[test]
    fn tensor_reset_doubles_the_limit() {
        let eps = 0.15;
        let single = make_thermal_reset(eps).unwrap();
        let double = make_tensor_reset(&[single.clone(), single.clone()]).unwrap();
        for n in 1..=5 {
            let ratio =
                qubit1_polarization_limit(n, &double) / qubit1_polarization_limit(n, &single);
            assert!((ratio - 2.0).abs() < 1e-12);
        }
    }
}
