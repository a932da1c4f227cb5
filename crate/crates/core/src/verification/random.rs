//! Seeded generators for randomized trials.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::scalar::{ratio, Rational};
use crate::state::{ComputationMarginal, ResetDistribution};

/// Independent generator for trial `trial` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn positive_exp<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let x: f64 = Exp1.sample(rng);
        if x > 0.0 {
            return x;
        }
    }
}

/// `k` reset populations with large gap `ln(a_1/a_k)` drawn from `(0, max_gap]`.
///
/// Interior levels are uniform in log-space between the extremes.
pub fn random_reset<R: Rng + ?Sized>(rng: &mut R, k: usize, max_gap: f64) -> ResetDistribution {
    let gap = max_gap * (1.0 - rng.random::<f64>());
    let mut logs: Vec<f64> = (0..k)
        .map(|m| match m {
            0 => 0.0,
            m if m == k - 1 => -gap,
            _ => -gap * rng.random::<f64>(),
        })
        .collect();
    logs.sort_by(|a, b| b.total_cmp(a));
    let weights: Vec<f64> = logs.iter().map(|l| l.exp()).collect();
    let z: f64 = weights.iter().sum();
    ResetDistribution::new(weights.iter().map(|w| w / z).collect())
        .expect("normalized decreasing weights")
}

/// Sorted marginal from `2^n` exponential variates.
///
/// With `clamp = Some(L)` every consecutive log-ratio is capped at `L`, which
/// keeps the start inside the basin of the closed-form limit.
pub fn random_sorted_marginal<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    clamp: Option<f64>,
) -> ComputationMarginal {
    let mut p: Vec<f64> = (0..1usize << n).map(|_| positive_exp(rng)).collect();
    p.sort_by(|a, b| b.total_cmp(a));
    if let Some(cap) = clamp {
        let mut log_p = 0.0;
        let mut rebuilt = Vec::with_capacity(p.len());
        rebuilt.push(1.0);
        for w in p.windows(2) {
            log_p -= (w[0] / w[1]).ln().min(cap);
            rebuilt.push(log_p.exp());
        }
        p = rebuilt;
    }
    ComputationMarginal::normalized(p).expect("positive weights")
}

/// Sorted marginal whose consecutive log-ratios are drawn uniformly from
/// `[0, spread · L]`, so with `spread > 1` some fall on each side of `L`.
pub fn random_straddling_marginal<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    gap: f64,
    spread: f64,
) -> ComputationMarginal {
    let mut log_p = 0.0;
    let mut p = Vec::with_capacity(1 << n);
    p.push(1.0);
    for _ in 1..1usize << n {
        log_p -= spread * gap * rng.random::<f64>();
        p.push(log_p.exp());
    }
    ComputationMarginal::normalized(p).expect("positive weights")
}

/// Marginal that is a fixed point of the iteration for `reset`: every
/// distance is at least the large gap.
pub fn random_saturated_marginal<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    reset: &ResetDistribution,
) -> ComputationMarginal {
    let gap = reset.log_gap();
    let mut log_p = 0.0;
    let mut p = Vec::with_capacity(1 << n);
    p.push(1.0);
    for _ in 1..1usize << n {
        let extra = if rng.random_bool(0.3) {
            0.0
        } else {
            0.5 * positive_exp(rng)
        };
        log_p -= gap + extra;
        p.push(log_p.exp());
    }
    ComputationMarginal::normalized(p).expect("positive weights")
}

/// Exact reset populations with small integer weights in `1..=9`.
pub fn random_rational_reset<R: Rng + ?Sized>(
    rng: &mut R,
    k: usize,
) -> ResetDistribution<Rational> {
    let mut weights: Vec<i64> = (0..k).map(|_| rng.random_range(1..=9)).collect();
    weights.sort_unstable_by(|a, b| b.cmp(a));
    let total: i64 = weights.iter().sum();
    ResetDistribution::new(weights.iter().map(|&w| ratio(w, total)).collect())
        .expect("exact normalized weights")
}
