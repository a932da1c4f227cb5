//! The partner-pairing iteration: sort the joint diagonal, then re-thermalize
//! the reset system.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{sum, Scalar};
use crate::state::{
    computation_marginal, maximally_mixed, sort_decreasing, ComputationMarginal, DiagonalState,
    ResetDistribution,
};

pub const DEFAULT_MAX_ITERATIONS: usize = 1_000_000;
pub const DEFAULT_CONVERGENCE_TOL: f64 = 1e-12;
pub const DEFAULT_CONVERGENCE_WINDOW: usize = 10;

/// Where a run starts.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialState<T: Scalar = f64> {
    /// Uniform computation marginal tensored with the reset populations.
    MaximallyMixed,
    /// Every computation qubit thermal at the given polarization (float
    /// backend only).
    Thermal(f64),
    /// Explicit computation marginal, tensored with the reset populations.
    Marginal(ComputationMarginal<T>),
    /// Explicit joint diagonal.
    Joint(DiagonalState<T>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordMode {
    /// Keep post-sort and post-reset snapshots for every iteration.
    FullSnapshots,
    /// Keep only the scalar summary of each iteration.
    SummaryOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig<T: Scalar = f64> {
    pub n: usize,
    pub reset: ResetDistribution<T>,
    pub initial: InitialState<T>,
    pub max_iterations: usize,
    /// Relative tolerance on successive changes of `p_0`.
    pub convergence_tol: f64,
    /// Number of consecutive iterations that must satisfy the tolerance.
    pub convergence_window: usize,
    pub record_mode: RecordMode,
}

impl<T: Scalar> RunConfig<T> {
    /// Maximally mixed start with default limits and summary-only recording.
    pub fn new(n: usize, reset: ResetDistribution<T>) -> Self {
        Self {
            n,
            reset,
            initial: InitialState::MaximallyMixed,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            convergence_tol: DEFAULT_CONVERGENCE_TOL,
            convergence_window: DEFAULT_CONVERGENCE_WINDOW,
            record_mode: RecordMode::SummaryOnly,
        }
    }

    pub fn with_initial(mut self, initial: InitialState<T>) -> Self {
        self.initial = initial;
        self
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.convergence_tol = tol;
        self
    }

    pub fn with_window(mut self, window: usize) -> Self {
        self.convergence_window = window;
        self
    }

    pub fn with_record_mode(mut self, mode: RecordMode) -> Self {
        self.record_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(Error::invalid("max_iterations must be >= 1"));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(Error::invalid("convergence_tol must be > 0"));
        }
        if self.convergence_window < 1 {
            return Err(Error::invalid("convergence_window must be >= 1"));
        }
        Ok(())
    }

    /// Resolves the initial-state preset into a joint diagonal.
    pub fn initial_state(&self) -> Result<DiagonalState<T>> {
        self.validate()?;
        let k = self.reset.dim();
        let state = match &self.initial {
            InitialState::MaximallyMixed => maximally_mixed(self.n, &self.reset)?,
            InitialState::Thermal(eps) => thermal_marginal::<T>(self.n, *eps)?.tensor(&self.reset),
            InitialState::Marginal(m) => {
                if m.num_qubits() != self.n {
                    return Err(Error::invalid(format!(
                        "initial marginal has {} qubits, config has {}",
                        m.num_qubits(),
                        self.n
                    )));
                }
                m.tensor(&self.reset)
            }
            InitialState::Joint(s) => {
                if s.num_qubits() != self.n || s.reset_dim() != k {
                    return Err(Error::invalid(format!(
                        "initial state is n={} k={}, config is n={} k={}",
                        s.num_qubits(),
                        s.reset_dim(),
                        self.n,
                        k
                    )));
                }
                s.clone()
            }
        };
        Ok(state)
    }
}

/// Product of `n` thermal qubits at polarization `epsilon`, in lexicographic
/// basis order.
pub fn thermal_marginal<T: Scalar>(n: usize, epsilon: f64) -> Result<ComputationMarginal<T>> {
    let qubit = crate::state::make_thermal_reset(epsilon)?;
    let levels = qubit
        .probs()
        .iter()
        .map(|&p| {
            T::from_f64(p).ok_or_else(|| {
                Error::invalid(format!(
                    "{} backend cannot represent a thermal state",
                    T::BACKEND
                ))
            })
        })
        .collect::<Result<Vec<T>>>()?;
    if !(1..=crate::state::MAX_QUBITS).contains(&n) {
        return Err(Error::invalid(format!("qubit count {n} out of range")));
    }
    let probs = (0..1usize << n)
        .map(|i| (0..n).fold(T::one(), |acc, bit| acc * levels[(i >> bit) & 1].clone()))
        .collect();
    ComputationMarginal::new(probs)
}

/// One recorded iteration. `t` counts completed iterations, starting at 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = ""))]
pub struct IterationRecord<T: Scalar = f64> {
    pub t: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub post_sort: Option<DiagonalState<T>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub post_reset: Option<DiagonalState<T>>,
    pub p0: f64,
    /// `p_0^t - p_0^{t-1}`, computed in the backend's arithmetic.
    pub delta_p0: f64,
    pub max_distance: f64,
    pub qubit1_polarization: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T: Scalar = f64> {
    pub config: RunConfig<T>,
    pub initial: DiagonalState<T>,
    pub records: Vec<IterationRecord<T>>,
    pub converged: bool,
    /// First iteration of the window that satisfied the stopping rule.
    pub converged_at: Option<usize>,
    pub final_state: DiagonalState<T>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn final_marginal(&self) -> ComputationMarginal<T> {
        computation_marginal(&self.final_state)
    }

    pub fn has_snapshots(&self) -> bool {
        self.records.iter().all(|r| r.post_reset.is_some())
    }

    /// Post-reset marginals `p^0, p^1, ...`, starting with the initial state.
    ///
    /// Fails unless the run kept full snapshots.
    pub fn marginals(&self) -> Result<Vec<ComputationMarginal<T>>> {
        if !self.has_snapshots() {
            return Err(Error::Precondition(
                "trajectory was recorded without snapshots".into(),
            ));
        }
        let mut out = Vec::with_capacity(self.records.len() + 1);
        out.push(computation_marginal(&self.initial));
        out.extend(
            self.records
                .iter()
                .filter_map(|r| r.post_reset.as_ref())
                .map(computation_marginal),
        );
        Ok(out)
    }
}

/// Permutes the joint entries into non-increasing order.
///
/// Ties keep their original relative order.
pub fn sort_step<T: Scalar>(state: &DiagonalState<T>) -> DiagonalState<T> {
    let mut probs = state.probs().to_vec();
    sort_decreasing(&mut probs);
    DiagonalState::from_parts_unchecked(state.num_qubits(), state.reset_dim(), probs)
}

/// Replaces the reset system with its equilibrium: `Tr_R(ρ) ⊗ ρ_R`.
pub fn reset_step<T: Scalar>(
    state: &DiagonalState<T>,
    reset: &ResetDistribution<T>,
) -> Result<DiagonalState<T>> {
    check_reset_dim(state, reset)?;
    let mut probs = state.probs().to_vec();
    reset_in_place(&mut probs, reset.probs());
    Ok(DiagonalState::from_parts_unchecked(
        state.num_qubits(),
        state.reset_dim(),
        probs,
    ))
}

/// One full iteration: [`sort_step`] followed by [`reset_step`].
pub fn ppa_iteration<T: Scalar>(
    state: &DiagonalState<T>,
    reset: &ResetDistribution<T>,
) -> Result<DiagonalState<T>> {
    check_reset_dim(state, reset)?;
    reset_step(&sort_step(state), reset)
}

/// `true` iff `state` is `marginal ⊗ reset` and that product is already
/// sorted, i.e. `p_i a_k >= p_{i+1} a_1` for every `i`.
pub fn is_fixed_point<T: Scalar>(state: &DiagonalState<T>, reset: &ResetDistribution<T>) -> bool {
    if state.reset_dim() != reset.dim() {
        return false;
    }
    let tol = T::tolerance();
    let marginal = computation_marginal(state);
    let product = marginal.tensor(reset);
    let is_product = state
        .probs()
        .iter()
        .zip(product.probs())
        .all(|(a, b)| (a.clone() - b.clone()).abs() <= tol);
    is_product && is_saturated_sorted(marginal.probs(), reset, &tol)
}

pub(crate) fn is_saturated_sorted<T: Scalar>(
    p: &[T],
    reset: &ResetDistribution<T>,
    tol: &T,
) -> bool {
    let (a1, ak) = (reset.largest(), reset.smallest());
    p.windows(2)
        .all(|w| w[0].clone() * ak.clone() >= w[1].clone() * a1.clone() - tol.clone())
}

fn check_reset_dim<T: Scalar>(
    state: &DiagonalState<T>,
    reset: &ResetDistribution<T>,
) -> Result<()> {
    if state.reset_dim() != reset.dim() {
        return Err(Error::invalid(format!(
            "state has reset dimension {}, reset distribution has {}",
            state.reset_dim(),
            reset.dim()
        )));
    }
    Ok(())
}

fn reset_in_place<T: Scalar>(probs: &mut [T], levels: &[T]) {
    for block in probs.chunks_exact_mut(levels.len()) {
        let mass = sum(block);
        for (slot, a) in block.iter_mut().zip(levels) {
            *slot = mass.clone() * a.clone();
        }
    }
}

struct Summary {
    p0: f64,
    max_distance: f64,
    qubit1_polarization: f64,
}

fn summarize<T: Scalar>(marginal: &[T]) -> Summary {
    let half = marginal.len() / 2;
    let upper = sum(&marginal[..half]);
    let lower = sum(&marginal[half..]);
    let max_distance = marginal
        .windows(2)
        .map(|w| (w[0].clone() / w[1].clone()).to_f64().ln())
        .fold(f64::NEG_INFINITY, f64::max);
    Summary {
        p0: marginal[0].to_f64(),
        max_distance,
        qubit1_polarization: 0.5 * (upper / lower).to_f64().ln(),
    }
}

/// Iterates until the marginal stops moving or `max_iterations` is reached.
///
/// Convergence is declared once `max_i |p_i^{t} - p_i^{t-1}| / p_i^{t} <= tol`
/// holds for `convergence_window` consecutive iterations.
pub fn run<T: Scalar>(config: &RunConfig<T>) -> Result<Trajectory<T>> {
    run_for(config, config.max_iterations, true)
}

/// Runs exactly `iterations` iterations, ignoring the stopping rule.
pub fn run_fixed<T: Scalar>(config: &RunConfig<T>, iterations: usize) -> Result<Trajectory<T>> {
    run_for(config, iterations, false)
}

fn run_for<T: Scalar>(
    config: &RunConfig<T>,
    limit: usize,
    stop_early: bool,
) -> Result<Trajectory<T>> {
    let initial = config.initial_state()?;
    let (n, k) = (initial.num_qubits(), initial.reset_dim());
    let full = config.record_mode == RecordMode::FullSnapshots;
    let levels = config.reset.probs();

    let mut probs = initial.probs().to_vec();
    let mut marginal: Vec<T> = probs.chunks_exact(k).map(sum).collect();
    let mut records = Vec::with_capacity(if full {
        limit.min(1 << 16)
    } else {
        limit.min(1 << 20)
    });
    let mut streak = 0usize;
    let mut converged_at = None;

    for t in 1..=limit {
        // The permutation depends on the current values and is recomputed
        // every iteration.
        sort_decreasing(&mut probs);
        let post_sort = full.then(|| DiagonalState::from_parts_unchecked(n, k, probs.clone()));
        reset_in_place(&mut probs, levels);

        let next: Vec<T> = probs.chunks_exact(k).map(|b| sum(b)).collect();
        let delta = (next[0].clone() - marginal[0].clone()).to_f64();
        let largest_move = next
            .iter()
            .zip(&marginal)
            .map(|(a, b)| {
                (a.clone() - b.clone()).abs().to_f64() / a.to_f64().abs().max(f64::MIN_POSITIVE)
            })
            .fold(0.0, f64::max);
        marginal = next;
        let summary = summarize(&marginal);

        records.push(IterationRecord {
            t,
            post_sort,
            post_reset: full.then(|| DiagonalState::from_parts_unchecked(n, k, probs.clone())),
            p0: summary.p0,
            delta_p0: delta,
            max_distance: summary.max_distance,
            qubit1_polarization: summary.qubit1_polarization,
        });

        if largest_move <= config.convergence_tol {
            streak += 1;
        } else {
            streak = 0;
        }
        if stop_early && streak >= config.convergence_window {
            converged_at = Some(t + 1 - config.convergence_window);
            break;
        }
    }

    Ok(Trajectory {
        config: config.clone(),
        initial,
        records,
        converged: converged_at.is_some(),
        converged_at,
        final_state: DiagonalState::from_parts_unchecked(n, k, probs),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{ratio, Rational};
    use crate::state::make_thermal_reset;

    fn state(n: usize, k: usize, probs: &[f64]) -> DiagonalState {
        DiagonalState::new(n, k, probs.to_vec()).unwrap()
    }

    fn reset64() -> ResetDistribution {
        ResetDistribution::new(vec![0.6, 0.4]).unwrap()
    }

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn sort_step_examples() {
        let s = sort_step(&state(1, 2, &[0.45, 0.15, 0.3, 0.1]));
        assert_eq!(s.probs(), &[0.45, 0.3, 0.15, 0.1]);
        assert_eq!(sort_step(&s), s);
        let s = sort_step(&state(1, 2, &[0.1, 0.2, 0.3, 0.4]));
        assert_eq!(s.probs(), &[0.4, 0.3, 0.2, 0.1]);
    }

    #[test]
    fn reset_step_examples() {
        let s = reset_step(&state(1, 2, &[0.45, 0.3, 0.15, 0.1]), &reset64()).unwrap();
        assert_close(s.probs(), &[0.45, 0.30, 0.15, 0.10], 1e-15);

        let s = reset_step(&state(1, 2, &[0.25; 4]), &reset64()).unwrap();
        assert_close(s.probs(), &[0.3, 0.2, 0.3, 0.2], 1e-15);

        let s = reset_step(&state(1, 2, &[0.3, 0.3, 0.2, 0.2]), &reset64()).unwrap();
        assert_close(s.probs(), &[0.36, 0.24, 0.24, 0.16], 1e-15);
    }

    #[test]
    fn reset_step_dimension_mismatch() {
        let qutrit = ResetDistribution::new(vec![0.5, 0.3, 0.2]).unwrap();
        let err = reset_step(&state(1, 2, &[0.25; 4]), &qutrit).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
        assert!(ppa_iteration(&state(1, 2, &[0.25; 4]), &qutrit).is_err());
    }

    #[test]
    fn iteration_examples() {
        let s = ppa_iteration(&state(1, 2, &[0.3, 0.2, 0.3, 0.2]), &reset64()).unwrap();
        assert_close(s.probs(), &[0.36, 0.24, 0.24, 0.16], 1e-15);

        let fixed = state(1, 2, &[0.36, 0.24, 0.24, 0.16]);
        let s = ppa_iteration(&fixed, &reset64()).unwrap();
        assert_close(s.probs(), fixed.probs(), 1e-15);
    }

    #[test]
    fn exact_iteration_hits_fixed_point() {
        let reset = ResetDistribution::new(vec![ratio(3, 5), ratio(2, 5)]).unwrap();
        let mixed = maximally_mixed(1, &reset).unwrap();
        let once = ppa_iteration(&mixed, &reset).unwrap();
        let expected: Vec<Rational> = vec![ratio(9, 25), ratio(6, 25), ratio(6, 25), ratio(4, 25)];
        assert_eq!(once.probs(), expected.as_slice());
        assert_eq!(ppa_iteration(&once, &reset).unwrap(), once);
    }

    #[test]
    fn fixed_point_examples() {
        assert!(is_fixed_point(
            &state(1, 2, &[0.45, 0.30, 0.15, 0.10]),
            &reset64()
        ));
        assert!(is_fixed_point(
            &state(1, 2, &[0.36, 0.24, 0.24, 0.16]),
            &reset64()
        ));
        let r = make_thermal_reset(0.3).unwrap();
        assert!(!is_fixed_point(&maximally_mixed(2, &r).unwrap(), &r));
        // Product form but not sorted after reset.
        assert!(!is_fixed_point(
            &state(1, 2, &[0.3, 0.2, 0.3, 0.2]),
            &reset64()
        ));
        // Sorted but not product form.
        assert!(!is_fixed_point(
            &state(1, 2, &[0.5, 0.2, 0.2, 0.1]),
            &reset64()
        ));
    }

    #[test]
    fn run_hand_example() {
        let traj = run(&RunConfig::new(1, reset64())).unwrap();
        assert!(traj.converged);
        assert_eq!(traj.converged_at, Some(2));
        assert_close(traj.final_state.probs(), &[0.36, 0.24, 0.24, 0.16], 1e-15);
        assert!((traj.records[0].delta_p0 - 0.1).abs() < 1e-15);
    }

    #[test]
    fn run_zero_polarization_converges_immediately() {
        for n in 1..=4 {
            let r = make_thermal_reset(0.0).unwrap();
            let traj = run(&RunConfig::new(n, r)).unwrap();
            assert_eq!(traj.converged_at, Some(1));
            let uniform = 1.0 / (1 << n) as f64;
            assert!(traj.final_marginal().probs().iter().all(|&p| p == uniform));
        }
    }

    #[test]
    fn run_two_qubits_reaches_closed_form() {
        let r = make_thermal_reset(0.2).unwrap();
        let traj = run(&RunConfig::new(2, r)).unwrap();
        assert!(traj.converged);
        assert!((traj.final_marginal().probs()[0] - 0.413079).abs() < 1e-6);
    }

    #[test]
    fn run_reports_non_convergence() {
        let r = make_thermal_reset(0.05).unwrap();
        let traj = run(&RunConfig::new(5, r).with_max_iterations(3)).unwrap();
        assert!(!traj.converged);
        assert_eq!(traj.iterations(), 3);
        assert!(traj.converged_at.is_none());
    }

    #[test]
    fn run_rejects_bad_config() {
        let base = RunConfig::new(2, reset64());
        assert!(run(&base.clone().with_max_iterations(0)).is_err());
        assert!(run(&base.clone().with_tolerance(0.0)).is_err());
        assert!(run(&base.clone().with_window(0)).is_err());
        let wrong = ComputationMarginal::new(vec![0.5, 0.5]).unwrap();
        assert!(run(&base.with_initial(InitialState::Marginal(wrong))).is_err());
    }

    #[test]
    fn full_snapshots_match_summary() {
        let r = make_thermal_reset(0.3).unwrap();
        let cfg = RunConfig::new(3, r).with_record_mode(RecordMode::FullSnapshots);
        let traj = run(&cfg).unwrap();
        let last = traj.records.last().unwrap();
        assert_eq!(last.post_reset.as_ref().unwrap(), &traj.final_state);
        let sorted = last.post_sort.as_ref().unwrap();
        assert!(sorted.probs().windows(2).all(|w| w[0] >= w[1]));
        assert_eq!(traj.marginals().unwrap().len(), traj.iterations() + 1);

        let summary = run(&cfg.clone().with_record_mode(RecordMode::SummaryOnly)).unwrap();
        assert!(summary.marginals().is_err());
        assert_eq!(summary.final_state, traj.final_state);
    }

    #[test]
    fn thermal_initial_state() {
        let m: ComputationMarginal = thermal_marginal(2, 0.5 * 1.5f64.ln()).unwrap();
        assert_close(m.probs(), &[0.36, 0.24, 0.24, 0.16], 1e-15);
        assert!(thermal_marginal::<Rational>(2, 0.1).is_err());
    }
}
