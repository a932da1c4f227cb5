use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use clap::Args;
use hbac_core::asymptotics::asymptotic_state;
use hbac_core::engine::{
    DEFAULT_CONVERGENCE_TOL, DEFAULT_CONVERGENCE_WINDOW, DEFAULT_MAX_ITERATIONS,
};
use hbac_core::{run as run_ppa, RecordMode, ResetDistribution, RunConfig, Scalar, Trajectory};
use serde::Serialize;

use crate::args::{
    check_qubits, parse_f64, parse_rational, Backend, Format, InitSpec, OutputArgs, ResetArgs,
};
use crate::output::{sink, write_csv, write_json, Metadata};
use crate::trajectory_io::{csv_table, rows_from, TrajectorySummary};
use crate::{exit, Result};

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Number of computation qubits.
    #[arg(long)]
    pub n: usize,
    #[command(flatten)]
    pub reset: ResetArgs,
    /// maximally-mixed, thermal:<eps>, or a file of probabilities.
    #[arg(long, default_value = "maximally-mixed")]
    pub init: InitSpec,
    #[arg(long, value_enum, default_value = "float")]
    pub backend: Backend,
    #[arg(long = "max-iters", default_value_t = DEFAULT_MAX_ITERATIONS)]
    pub max_iters: usize,
    /// Relative per-entry change below which an iteration counts as settled.
    #[arg(long, default_value_t = DEFAULT_CONVERGENCE_TOL)]
    pub tol: f64,
    /// Consecutive settled iterations required to stop.
    #[arg(long, default_value_t = DEFAULT_CONVERGENCE_WINDOW)]
    pub window: usize,
    /// Record the post-reset marginal of every iteration.
    #[arg(long)]
    pub snapshots: bool,
    /// Also write the summary record as JSON to this file.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Recorded in the metadata; the dynamics are deterministic.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationSummary {
    pub converged: bool,
    pub converged_at: Option<usize>,
    pub iterations: usize,
    pub final_marginal: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_marginal_exact: Option<Vec<String>>,
    pub asymptotic_marginal: Vec<f64>,
    pub max_deviation_from_asymptotic: f64,
    pub metrics: Option<TrajectorySummary>,
}

pub fn run(args: &SimulateArgs) -> Result<i32> {
    check_qubits(args.n)?;
    match args.backend {
        Backend::Float => {
            let reset = args.reset.float()?;
            let initial = args.init.resolve(args.n, reset.dim(), parse_f64)?;
            finish(args, configure(args, reset).with_initial(initial))
        }
        Backend::Rational => {
            let reset = args.reset.rational()?;
            let initial = args.init.resolve(args.n, reset.dim(), parse_rational)?;
            finish(args, configure(args, reset).with_initial(initial))
        }
    }
}

fn configure<T: Scalar>(args: &SimulateArgs, reset: ResetDistribution<T>) -> RunConfig<T> {
    let mode = if args.snapshots {
        RecordMode::FullSnapshots
    } else {
        RecordMode::SummaryOnly
    };
    RunConfig::new(args.n, reset)
        .with_max_iterations(args.max_iters)
        .with_tolerance(args.tol)
        .with_window(args.window)
        .with_record_mode(mode)
}

fn finish<T: Scalar>(args: &SimulateArgs, config: RunConfig<T>) -> Result<i32> {
    let traj = run_ppa(&config)?;
    let summary = summarize(&traj);
    let rows = rows_from(&traj);

    let metadata = Metadata::new("simulate", args.backend.name())
        .tolerance("convergence_tol", args.tol)
        .param("n", args.n)
        .param("reset", config.reset.to_f64().probs())
        .param("init", args.init.label())
        .param("max_iterations", args.max_iters)
        .param("convergence_window", args.window)
        .param("snapshots", args.snapshots);
    let metadata = Metadata {
        seed: args.seed,
        ..metadata
    };

    let mut out = sink(args.output.out.as_deref())?;
    match args.output.format {
        Format::Json => write_json(
            &mut *out,
            &metadata,
            Some(("summary", serde_json::to_value(&summary)?)),
            &rows,
        )?,
        Format::Csv => {
            let (header, body) = csv_table(&rows);
            write_csv(&mut *out, &header, &body)?;
        }
    }
    if let Some(path) = &args.summary {
        let mut file = BufWriter::new(File::create(path)?);
        write_json(&mut file, &metadata, None, &summary)?;
    }

    let last = traj.records.last();
    eprintln!(
        "{} after {} iterations; p0 = {:.9}; qubit-1 polarization = {:.9}",
        match summary.converged_at {
            Some(t) => format!("converged at t={t}"),
            None => "did not converge".into(),
        },
        summary.iterations,
        last.map_or(f64::NAN, |r| r.p0),
        last.map_or(f64::NAN, |r| r.qubit1_polarization),
    );
    Ok(if traj.converged {
        exit::SUCCESS
    } else {
        exit::NOT_CONVERGED
    })
}

pub fn summarize<T: Scalar>(traj: &Trajectory<T>) -> SimulationSummary {
    let final_marginal = traj.final_marginal();
    let final_f64: Vec<f64> = final_marginal.probs().iter().map(Scalar::to_f64).collect();
    let asymptotic = asymptotic_state(traj.config.n, &traj.config.reset.to_f64());
    let max_deviation = final_f64
        .iter()
        .zip(asymptotic.probs())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    SimulationSummary {
        converged: traj.converged,
        converged_at: traj.converged_at,
        iterations: traj.iterations(),
        final_marginal_exact: T::EXACT.then(|| {
            final_marginal
                .probs()
                .iter()
                .map(|p| p.to_string())
                .collect()
        }),
        final_marginal: final_f64,
        asymptotic_marginal: asymptotic.into_vec(),
        max_deviation_from_asymptotic: max_deviation,
        metrics: TrajectorySummary::from_rows(&rows_from(traj)),
    }
}
