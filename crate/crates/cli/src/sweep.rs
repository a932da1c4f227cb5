use clap::Args;
use hbac_core::asymptotics::{
    asymptotic_p0, effective_temperature, lambda1_limit, qubit1_polarization_limit,
    schulman_upper_bound, TemperatureSpec,
};
use hbac_core::state::MAX_QUBITS;
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{parse_range, Format, OutputArgs, ResetArgs};
use crate::output::{fmt_f64, fmt_opt, sink, write_csv, write_json, Metadata};
use crate::{exit, CliError, Result};

/// Grid of closed-form evaluations. Rows are ordered by `n`, then
/// `epsilon`, then gap ratio, whatever order the points finish in.
#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long = "n-values", value_delimiter = ',', required = true, num_args = 1..)]
    pub n_values: Vec<usize>,
    /// Reset-qubit polarizations.
    #[arg(long = "epsilon-values", value_delimiter = ',', num_args = 1.., conflicts_with = "epsilon_range")]
    pub epsilon_values: Option<Vec<f64>>,
    /// Polarization grid as start:stop:step, inclusive.
    #[arg(long = "epsilon-range")]
    pub epsilon_range: Option<String>,
    /// Reset made of this many thermal qubits at each epsilon.
    #[arg(long, default_value_t = 1)]
    pub tensor_qubits: usize,
    /// Ratios of the computation-qubit gap to the reset's large gap.
    #[arg(long = "gap-ratios", value_delimiter = ',', num_args = 1.., default_value = "1")]
    pub gap_ratios: Vec<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub epsilon: f64,
    pub reset_levels: usize,
    pub gap_ratio: f64,
    pub p0_infinity: f64,
    pub lambda1_limit: f64,
    /// Defined for a single reset qubit only.
    pub schulman_bound: Option<f64>,
    pub polarization_limit: f64,
    pub t_eff_over_tb: f64,
}

pub const CSV_HEADER: [&str; 9] = [
    "n",
    "epsilon",
    "reset_levels",
    "gap_ratio",
    "p0_infinity",
    "lambda1_limit",
    "schulman_bound",
    "polarization_limit",
    "t_eff_over_tb",
];

pub fn grid_rows(
    n_values: &[usize],
    epsilons: &[f64],
    tensor_qubits: usize,
    gap_ratios: &[f64],
) -> Result<Vec<SweepRow>> {
    if n_values.is_empty() || epsilons.is_empty() || gap_ratios.is_empty() {
        return Err(CliError::usage("sweep value lists must be non-empty"));
    }
    if let Some(&n) = n_values.iter().find(|&&n| n == 0 || n > MAX_QUBITS) {
        return Err(CliError::usage(format!("n = {n} outside 1..={MAX_QUBITS}")));
    }
    if let Some(r) = gap_ratios.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
        return Err(CliError::usage(format!(
            "gap ratios must be positive, got {r}"
        )));
    }
    let points: Vec<(usize, f64, f64)> = n_values
        .iter()
        .flat_map(|&n| {
            epsilons
                .iter()
                .flat_map(move |&e| gap_ratios.iter().map(move |&r| (n, e, r)))
        })
        .collect();
    points
        .into_par_iter()
        .map(|(n, epsilon, gap_ratio)| {
            let reset = ResetArgs {
                epsilon: Some(epsilon),
                reset_probs: None,
                tensor_qubits: Some(tensor_qubits),
            }
            .float()?;
            let spec = TemperatureSpec::from_ratio(gap_ratio, 1.0)?;
            Ok(SweepRow {
                n,
                epsilon,
                reset_levels: reset.dim(),
                gap_ratio,
                p0_infinity: asymptotic_p0(n, &reset),
                lambda1_limit: lambda1_limit(n, &reset),
                schulman_bound: (reset.dim() == 2).then(|| schulman_upper_bound(n, epsilon)),
                polarization_limit: qubit1_polarization_limit(n, &reset),
                t_eff_over_tb: effective_temperature(n, &spec)?,
            })
        })
        .collect()
}

pub fn run(args: &SweepArgs) -> Result<i32> {
    let epsilons = match (&args.epsilon_values, &args.epsilon_range) {
        (Some(values), _) => values.clone(),
        (None, Some(range)) => parse_range(range)?,
        (None, None) => return Err(CliError::usage("give --epsilon-values or --epsilon-range")),
    };
    let rows = grid_rows(
        &args.n_values,
        &epsilons,
        args.tensor_qubits,
        &args.gap_ratios,
    )?;

    let metadata = Metadata::new("sweep", "f64")
        .param("n_values", &args.n_values)
        .param("epsilon_values", &epsilons)
        .param("tensor_qubits", args.tensor_qubits)
        .param("gap_ratios", &args.gap_ratios);
    let mut out = sink(args.output.out.as_deref())?;
    match args.output.format {
        Format::Json => write_json(&mut *out, &metadata, None, &rows)?,
        Format::Csv => {
            let header = CSV_HEADER.map(String::from);
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.n.to_string(),
                        fmt_f64(r.epsilon),
                        r.reset_levels.to_string(),
                        fmt_f64(r.gap_ratio),
                        fmt_f64(r.p0_infinity),
                        fmt_f64(r.lambda1_limit),
                        fmt_opt(r.schulman_bound),
                        fmt_f64(r.polarization_limit),
                        fmt_f64(r.t_eff_over_tb),
                    ]
                })
                .collect();
            write_csv(&mut *out, &header, &body)?;
        }
    }
    eprintln!("{} rows", rows.len());
    Ok(exit::SUCCESS)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cooling_ratio_halves_per_qubit() {
        let n: Vec<usize> = (1..=8).collect();
        let rows = grid_rows(&n, &[0.1], 1, &[1.0]).unwrap();
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.n, i + 1);
            assert_eq!(r.t_eff_over_tb, 1.0 / (1u64 << i) as f64);
        }
    }

    #[test]
    fn bound_dominates_for_two_qubits() {
        let eps: Vec<f64> = (0..=100).map(|i| i as f64 * 0.01).collect();
        let rows = grid_rows(&[2], &eps, 1, &[1.0]).unwrap();
        let gaps: Vec<f64> = rows
            .iter()
            .map(|r| r.schulman_bound.unwrap() - r.lambda1_limit)
            .collect();
        assert!(gaps.iter().all(|&g| g >= 0.0));
        assert!(gaps.windows(2).all(|w| w[1] > w[0]));
        assert!((rows[0].p0_infinity - 0.25).abs() < 1e-15);
        assert!((rows[0].schulman_bound.unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn rows_follow_grid_order() {
        let rows = grid_rows(&[3, 1], &[0.2, 0.1], 2, &[1.0, 0.5]).unwrap();
        let keys: Vec<(usize, f64, f64)> =
            rows.iter().map(|r| (r.n, r.epsilon, r.gap_ratio)).collect();
        assert_eq!(keys[0], (3, 0.2, 1.0));
        assert_eq!(keys[1], (3, 0.2, 0.5));
        assert_eq!(keys[7], (1, 0.1, 0.5));
        assert!(rows
            .iter()
            .all(|r| r.reset_levels == 4 && r.schulman_bound.is_none()));
    }

    #[test]
    fn empty_lists_are_rejected() {
        assert!(grid_rows(&[], &[0.1], 1, &[1.0]).is_err());
        assert!(grid_rows(&[1], &[0.1], 1, &[-1.0]).is_err());
    }
}
