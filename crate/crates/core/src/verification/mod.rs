//! Executable checks of the properties of partner-pairing dynamics.
//!
//! Each checker returns a [`VerificationReport`] rather than panicking, so the
//! same code backs unit tests, the acceptance suite and the `verify` command.

pub mod random;
pub mod suites;

use serde::{Deserialize, Serialize};

use crate::engine::{ppa_iteration, run, InitialState, RunConfig, Trajectory};
use crate::error::{Error, Result};
use crate::scalar::{Rational, Scalar};
use crate::state::{computation_marginal, pairwise_distances, DiagonalState, ResetDistribution};

/// Maximum number of witnesses kept per report.
pub const WITNESS_CAP: usize = 10;

/// Slack on the distance bound for float trajectories.
pub const MAX_DISTANCE_SLACK: f64 = 1e-9;
/// Allowed decrease of `p_0` between iterations for float trajectories.
pub const MONOTONE_SLACK: f64 = 1e-14;
/// Residual allowed in the `Δp_0` recurrence near convergence.
pub const RECURRENCE_TOL: f64 = 1e-8;
/// Per-entry agreement required between float and rational runs.
pub const ORACLE_TOL: f64 = 1e-10;
/// Largest qubit count the rational oracle accepts.
pub const ORACLE_MAX_QUBITS: usize = 8;
/// Largest iteration count the rational oracle accepts.
pub const ORACLE_MAX_ITERATIONS: usize = 10_000;

/// One violated comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub input: String,
    pub iteration: usize,
    pub index: usize,
    pub observed: f64,
    pub bound: f64,
}

/// Outcome of checking one invariant over one or more trials.
///
/// A comparison fails when `observed - bound > tolerance`. `worst_margin` is
/// the largest `observed - bound` seen, failing or not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub invariant_name: String,
    pub trials: usize,
    pub checks: usize,
    pub failures: usize,
    pub witnesses: Vec<Witness>,
    pub tolerance: f64,
    pub worst_margin: f64,
}

impl VerificationReport {
    pub fn new(invariant_name: impl Into<String>, tolerance: f64) -> Self {
        Self {
            invariant_name: invariant_name.into(),
            trials: 0,
            checks: 0,
            failures: 0,
            witnesses: Vec::new(),
            tolerance,
            worst_margin: f64::NEG_INFINITY,
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    /// Records one comparison. `input` is only evaluated on failure.
    pub fn observe(
        &mut self,
        input: impl FnOnce() -> String,
        iteration: usize,
        index: usize,
        observed: f64,
        bound: f64,
    ) {
        self.checks += 1;
        let margin = observed - bound;
        if margin > self.worst_margin || margin.is_nan() {
            self.worst_margin = margin;
        }
        if !(margin <= self.tolerance) {
            self.failures += 1;
            if self.witnesses.len() < WITNESS_CAP {
                self.witnesses.push(Witness {
                    input: input(),
                    iteration,
                    index,
                    observed,
                    bound,
                });
            }
        }
    }

    /// Combines two reports for the same invariant. Associative; witnesses
    /// keep the order of `self` then `other`.
    pub fn merge(mut self, other: VerificationReport) -> VerificationReport {
        self.trials += other.trials;
        self.checks += other.checks;
        self.failures += other.failures;
        self.worst_margin = self.worst_margin.max(other.worst_margin);
        let room = WITNESS_CAP.saturating_sub(self.witnesses.len());
        self.witnesses
            .extend(other.witnesses.into_iter().take(room));
        self
    }

    /// Prefixes every witness input with `context`.
    pub fn with_context(mut self, context: &str) -> Self {
        for w in &mut self.witnesses {
            w.input = format!("{context}; {}", w.input);
        }
        self
    }
}

fn describe<T: Scalar>(traj: &Trajectory<T>) -> String {
    let reset: Vec<f64> = traj
        .config
        .reset
        .probs()
        .iter()
        .map(Scalar::to_f64)
        .collect();
    format!(
        "n={} reset={:?} backend={}",
        traj.config.n,
        reset,
        T::BACKEND
    )
}

/// Checks `d_i^t <= max{d_i^0, ln(a_1/a_k)}` at every recorded iteration.
///
/// Float trajectories use [`MAX_DISTANCE_SLACK`]; rational trajectories are
/// compared exactly by cross-multiplication.
pub fn check_max_distance<T: Scalar>(traj: &Trajectory<T>) -> Result<VerificationReport> {
    let marginals = traj.marginals()?;
    let reset = &traj.config.reset;
    let tolerance = if T::EXACT { 0.0 } else { MAX_DISTANCE_SLACK };
    let mut report = VerificationReport::new("max-distance", tolerance);
    report.trials = 1;
    let gap = reset.log_gap();
    let initial = &marginals[0];

    if T::EXACT {
        let (a1, ak) = (reset.largest(), reset.smallest());
        let p0 = initial.probs();
        for (t, m) in marginals.iter().enumerate().skip(1) {
            let p = m.probs();
            for i in 0..p.len() - 1 {
                // Violation iff p_i/p_{i+1} exceeds both p0_i/p0_{i+1} and a_1/a_k.
                let above_initial =
                    p[i].clone() * p0[i + 1].clone() > p0[i].clone() * p[i + 1].clone();
                let above_gap = p[i].clone() * ak.clone() > p[i + 1].clone() * a1.clone();
                let (observed, bound) = if above_initial && above_gap {
                    (1.0, 0.0)
                } else {
                    (0.0, 0.0)
                };
                report.observe(|| describe(traj), t, i, observed, bound);
            }
        }
        return Ok(report);
    }

    let d0 = pairwise_distances(initial)?;
    for (t, m) in marginals.iter().enumerate().skip(1) {
        let d = pairwise_distances(m)?;
        for (i, (&dt, &di0)) in d.iter().zip(&d0).enumerate() {
            report.observe(|| describe(traj), t, i, dt, di0.max(gap));
        }
    }
    Ok(report)
}

/// Checks that `p_0` never decreases along the trajectory.
pub fn check_p0_monotone<T: Scalar>(traj: &Trajectory<T>) -> VerificationReport {
    let tolerance = if T::EXACT { 0.0 } else { MONOTONE_SLACK };
    let mut report = VerificationReport::new("p0-monotone", tolerance);
    report.trials = 1;
    for r in &traj.records {
        report.observe(|| describe(traj), r.t, 0, -r.delta_p0, 0.0);
    }
    report
}

/// For a fixed point of the iteration, asserts one iteration leaves it
/// unchanged; for anything else, asserts the iteration moves it.
pub fn check_steady_invariance<T: Scalar>(
    state: &DiagonalState<T>,
    reset: &ResetDistribution<T>,
) -> Result<VerificationReport> {
    let tol = T::tolerance();
    let invariant = crate::engine::is_fixed_point(state, reset);
    let next = ppa_iteration(state, reset)?;
    let deviation = state
        .probs()
        .iter()
        .zip(next.probs())
        .map(|(a, b)| (a.clone() - b.clone()).abs())
        .fold(T::zero(), |acc, d| if d > acc { d } else { acc });
    let moved = deviation > tol;

    let mut report = VerificationReport::new("steady-invariance", 0.0);
    report.trials = 1;
    // observed = 1 when the outcome contradicts the prediction.
    let contradiction = if invariant == moved { 1.0 } else { 0.0 };
    report.observe(
        || {
            format!(
                "{state}; fixed_point={invariant}; deviation={}",
                deviation.to_f64()
            )
        },
        1,
        0,
        contradiction,
        0.0,
    );
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrossingKind {
    FromAbove,
    FromBelow,
}

/// A pair of joint entries that the next sort will reorder.
///
/// `FromBelow`: `i < j`, `m_i > m_j` and `p_i a_{m_i} < p_j a_{m_j}`, so block
/// `i` gains weight from below. `FromAbove` is the same pair seen from block
/// `j`, which loses weight upward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingEvent {
    pub kind: CrossingKind,
    pub i: usize,
    pub j: usize,
    pub m_i: usize,
    pub m_j: usize,
    pub value_i: f64,
    pub value_j: f64,
}

/// Lists every crossing in a post-reset (product form) state.
///
/// Each reordered pair is reported twice, once per block. Equal products are
/// not crossings. The list is empty iff the state is a fixed point.
pub fn classify_crossings<T: Scalar>(
    state: &DiagonalState<T>,
    reset: &ResetDistribution<T>,
) -> Result<Vec<CrossingEvent>> {
    if state.reset_dim() != reset.dim() {
        return Err(Error::invalid("state and reset dimensions differ"));
    }
    let tol = T::tolerance();
    let marginal = computation_marginal(state);
    let product = marginal.tensor(reset);
    let is_product = state
        .probs()
        .iter()
        .zip(product.probs())
        .all(|(a, b)| (a.clone() - b.clone()).abs() <= tol);
    if !is_product {
        return Err(Error::invalid("state is not of the form marginal ⊗ reset"));
    }

    let p = marginal.probs();
    let a = reset.probs();
    let k = a.len();
    let mut below = Vec::new();
    let mut above = Vec::new();
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            for m_i in 1..k {
                for m_j in 0..m_i {
                    let upper = p[i].clone() * a[m_i].clone();
                    let lower = p[j].clone() * a[m_j].clone();
                    if lower.clone() - upper.clone() > tol {
                        let (value_i, value_j) = (upper.to_f64(), lower.to_f64());
                        below.push(CrossingEvent {
                            kind: CrossingKind::FromBelow,
                            i,
                            j,
                            m_i,
                            m_j,
                            value_i,
                            value_j,
                        });
                        above.push(CrossingEvent {
                            kind: CrossingKind::FromAbove,
                            i: j,
                            j: i,
                            m_i: m_j,
                            m_j: m_i,
                            value_i: value_j,
                            value_j: value_i,
                        });
                    }
                }
            }
        }
    }
    below.extend(above);
    Ok(below)
}

/// Checks `Δp_0^t → p_1^t a_1 - p_0^t a_k` over the last quarter of a
/// converged trajectory.
pub fn check_delta_p0_recurrence<T: Scalar>(traj: &Trajectory<T>) -> Result<VerificationReport> {
    if !traj.converged {
        return Err(Error::Precondition("trajectory did not converge".into()));
    }
    let marginals = traj.marginals()?;
    let (a1, ak) = (
        traj.config.reset.largest().clone(),
        traj.config.reset.smallest().clone(),
    );
    let mut report = VerificationReport::new("delta-p0-recurrence", RECURRENCE_TOL);
    report.trials = 1;
    let steps = marginals.len() - 1;
    for t in (steps * 3 / 4)..steps {
        let now = marginals[t].probs();
        let next = marginals[t + 1].probs();
        if now.len() < 2 {
            break;
        }
        let change = next[0].clone() - now[0].clone();
        let predicted = now[1].clone() * a1.clone() - now[0].clone() * ak.clone();
        let residual = (change - predicted).abs().to_f64();
        report.observe(|| describe(traj), t, 0, residual, 0.0);
    }
    Ok(report)
}

/// Runs the same configuration in exact and float arithmetic and compares
/// every entry after every sort and every reset.
pub fn rational_oracle_compare(
    config: &RunConfig<Rational>,
    iterations: usize,
) -> Result<VerificationReport> {
    if config.n > ORACLE_MAX_QUBITS {
        return Err(Error::invalid(format!(
            "oracle limited to n <= {ORACLE_MAX_QUBITS}"
        )));
    }
    if iterations > ORACLE_MAX_ITERATIONS {
        return Err(Error::invalid(format!(
            "oracle limited to {ORACLE_MAX_ITERATIONS} iterations"
        )));
    }
    if matches!(config.initial, InitialState::Thermal(_)) {
        return Err(Error::invalid(
            "thermal presets are irrational; give explicit probabilities",
        ));
    }
    let mut exact = config.initial_state()?;
    let mut float = exact.to_f64();
    let reset_f = config.reset.to_f64();

    let mut report = VerificationReport::new("rational-oracle", ORACLE_TOL);
    report.trials = 1;
    let label = || {
        format!(
            "n={} reset={:?}",
            config.n,
            config
                .reset
                .probs()
                .iter()
                .map(Scalar::to_f64)
                .collect::<Vec<_>>()
        )
    };
    for t in 1..=iterations {
        exact = ppa_iteration(&exact, &config.reset)?;
        float = ppa_iteration(&float, &reset_f)?;
        for (index, (e, f)) in exact.probs().iter().zip(float.probs()).enumerate() {
            report.observe(label, t, index, (e.to_f64() - f).abs(), 0.0);
        }
    }
    Ok(report)
}

/// Compares [`crate::asymptotics::block_predict`] with a long simulation
/// started from `initial ⊗ reset`.
pub fn check_block_prediction(
    initial: &crate::state::ComputationMarginal,
    reset: &ResetDistribution,
    tolerance: f64,
) -> Result<VerificationReport> {
    let predicted = crate::asymptotics::block_predict(initial, reset)?;
    let config = RunConfig::new(initial.num_qubits(), reset.clone())
        .with_initial(InitialState::Marginal(initial.clone()))
        .with_tolerance(1e-14);
    let traj = run(&config)?;
    let mut report = VerificationReport::new("block-prediction", tolerance);
    report.trials = 1;
    let simulated = traj.final_marginal();
    for (i, (s, p)) in simulated
        .probs()
        .iter()
        .zip(predicted.predicted_marginal.probs())
        .enumerate()
    {
        report.observe(
            || {
                format!(
                    "initial={:?} reset={:?} blocks={:?}",
                    initial.probs(),
                    reset.probs(),
                    predicted.boundaries
                )
            },
            traj.iterations(),
            i,
            (s - p).abs(),
            0.0,
        );
    }
    if !traj.converged {
        report.observe(
            || "simulation did not converge".into(),
            traj.iterations(),
            0,
            f64::INFINITY,
            0.0,
        );
    }
    Ok(report)
}
