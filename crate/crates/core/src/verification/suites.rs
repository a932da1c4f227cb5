//! Randomized, seeded verification suites.
//!
//! Trial `i` of a suite draws everything from [`trial_rng`]`(seed, i)`, runs
//! independently (in parallel), and the per-trial reports are merged in trial
//! order, so a seed fully determines the report.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::random::{
    random_rational_reset, random_reset, random_saturated_marginal, random_sorted_marginal,
    random_straddling_marginal, trial_rng,
};
use super::{
    check_block_prediction, check_delta_p0_recurrence, check_max_distance, check_p0_monotone,
    check_steady_invariance, rational_oracle_compare, VerificationReport,
};
use crate::engine::{run, InitialState, RecordMode, RunConfig};
use crate::error::{Error, Result};
use crate::state::{make_thermal_reset, ResetDistribution};

/// Tolerance for block predictions against long simulations.
pub const BLOCK_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    MaxDist,
    Monotone,
    Steady,
    Recurrence,
    Oracle,
    Blocks,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::MaxDist,
        Suite::Monotone,
        Suite::Steady,
        Suite::Recurrence,
        Suite::Oracle,
        Suite::Blocks,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::MaxDist => "maxdist",
            Suite::Monotone => "monotone",
            Suite::Steady => "steady",
            Suite::Recurrence => "recurrence",
            Suite::Oracle => "oracle",
            Suite::Blocks => "blocks",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown suite '{s}'")))
    }
}

/// Knobs shared by every suite. `n` and `reset` pin the corresponding
/// random choice when set.
#[derive(Debug, Clone)]
pub struct SuiteOptions {
    pub trials: usize,
    pub seed: u64,
    pub n: Option<usize>,
    pub reset: Option<ResetDistribution>,
    /// Iteration cap for snapshot-recording runs.
    pub max_iterations: usize,
}

impl SuiteOptions {
    pub fn new(trials: usize, seed: u64) -> Self {
        Self {
            trials,
            seed,
            n: None,
            reset: None,
            max_iterations: 2_000,
        }
    }

    fn pick_n<R: Rng>(&self, rng: &mut R, max: usize) -> usize {
        self.n.unwrap_or_else(|| rng.random_range(1..=max))
    }

    fn pick_reset<R: Rng>(&self, rng: &mut R, k_max: usize, max_gap: f64) -> ResetDistribution {
        self.reset.clone().unwrap_or_else(|| {
            let k = rng.random_range(2..=k_max);
            random_reset(rng, k, max_gap)
        })
    }
}

pub fn run_suite(suite: Suite, opts: &SuiteOptions) -> Result<VerificationReport> {
    match suite {
        Suite::MaxDist => maxdist_suite(opts),
        Suite::Monotone => monotone_suite(opts),
        Suite::Steady => steady_suite(opts),
        Suite::Recurrence => recurrence_suite(opts),
        Suite::Oracle => oracle_suite(opts),
        Suite::Blocks => blocks_suite(opts),
    }
}

fn merge_trials<F>(
    name: &str,
    tolerance: f64,
    opts: &SuiteOptions,
    trial: F,
) -> Result<VerificationReport>
where
    F: Fn(usize) -> Result<VerificationReport> + Sync,
{
    let reports = (0..opts.trials)
        .into_par_iter()
        .map(|i| trial(i).map(|r| r.with_context(&format!("seed={} trial={i}", opts.seed))))
        .collect::<Result<Vec<_>>>()?;
    let empty = VerificationReport::new(name, tolerance);
    Ok(reports.into_iter().fold(empty, VerificationReport::merge))
}

/// Random trajectory for the distance and monotonicity suites. Even trials
/// start inside the gap, odd trials anywhere.
fn random_trajectory(opts: &SuiteOptions, trial: usize) -> Result<crate::engine::Trajectory> {
    let mut rng = trial_rng(opts.seed, trial);
    let n = opts.pick_n(&mut rng, 6);
    let reset = opts.pick_reset(&mut rng, 4, 2.0);
    let clamp = trial.is_multiple_of(2).then(|| reset.log_gap());
    let initial = random_sorted_marginal(&mut rng, n, clamp);
    let config = RunConfig::new(n, reset)
        .with_initial(InitialState::Marginal(initial))
        .with_max_iterations(opts.max_iterations)
        .with_record_mode(RecordMode::FullSnapshots);
    run(&config)
}

pub fn maxdist_suite(opts: &SuiteOptions) -> Result<VerificationReport> {
    merge_trials("max-distance", super::MAX_DISTANCE_SLACK, opts, |i| {
        check_max_distance(&random_trajectory(opts, i)?)
    })
}

pub fn monotone_suite(opts: &SuiteOptions) -> Result<VerificationReport> {
    merge_trials("p0-monotone", super::MONOTONE_SLACK, opts, |i| {
        Ok(check_p0_monotone(&random_trajectory(opts, i)?))
    })
}

/// Even trials use a saturated fixed point, odd trials an arbitrary sorted
/// product state.
pub fn steady_suite(opts: &SuiteOptions) -> Result<VerificationReport> {
    merge_trials("steady-invariance", 0.0, opts, |i| {
        let mut rng = trial_rng(opts.seed, i);
        let n = opts.pick_n(&mut rng, 5);
        let reset = opts.pick_reset(&mut rng, 4, 2.0);
        let marginal = if i.is_multiple_of(2) {
            random_saturated_marginal(&mut rng, n, &reset)
        } else {
            random_sorted_marginal(&mut rng, n, None)
        };
        check_steady_invariance(&marginal.tensor(&reset), &reset)
    })
}

/// Thermal qubit reset, maximally mixed start, run to convergence.
pub fn recurrence_suite(opts: &SuiteOptions) -> Result<VerificationReport> {
    merge_trials("delta-p0-recurrence", super::RECURRENCE_TOL, opts, |i| {
        let mut rng = trial_rng(opts.seed, i);
        let n = opts.pick_n(&mut rng, 4);
        let reset = match &opts.reset {
            Some(r) => r.clone(),
            None => make_thermal_reset(rng.random_range(0.05..1.0))?,
        };
        let config = RunConfig::new(n, reset).with_record_mode(RecordMode::FullSnapshots);
        check_delta_p0_recurrence(&run(&config)?)
    })
}

/// Small exact resets from a maximally mixed start, 200 iterations each.
pub fn oracle_suite(opts: &SuiteOptions) -> Result<VerificationReport> {
    merge_trials("rational-oracle", super::ORACLE_TOL, opts, |i| {
        let mut rng = trial_rng(opts.seed, i);
        let n = opts.n.unwrap_or_else(|| rng.random_range(1..=4));
        let k = rng.random_range(2..=3);
        let reset = random_rational_reset(&mut rng, k);
        rational_oracle_compare(&RunConfig::new(n, reset), 200)
    })
}

/// Block predictions against long simulations, from starts whose distances
/// straddle the large gap.
pub fn blocks_suite(opts: &SuiteOptions) -> Result<VerificationReport> {
    merge_trials("block-prediction", BLOCK_TOL, opts, |i| {
        let mut rng = trial_rng(opts.seed, i);
        let n = opts.pick_n(&mut rng, 5);
        let reset = opts.pick_reset(&mut rng, 3, 1.0);
        let initial = random_straddling_marginal(&mut rng, n, reset.log_gap(), 2.5);
        check_block_prediction(&initial, &reset, BLOCK_TOL)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for suite in Suite::ALL {
            assert_eq!(suite.name().parse::<Suite>().unwrap(), suite);
        }
        assert!("bogus".parse::<Suite>().is_err());
    }

    #[test]
    fn suites_pass_and_are_deterministic() {
        let opts = SuiteOptions::new(12, 42);
        for suite in Suite::ALL {
            let first = run_suite(suite, &opts).unwrap();
            assert!(first.passed(), "{suite}: {first:?}");
            assert_eq!(first.trials, 12);
            let second = run_suite(suite, &opts).unwrap();
            assert_eq!(first, second);
        }
    }

    #[test]
    fn pinned_zero_polarization() {
        let mut opts = SuiteOptions::new(1, 0);
        opts.reset = Some(make_thermal_reset(0.0).unwrap());
        let report = monotone_suite(&opts).unwrap();
        assert!(report.passed());
    }
}
