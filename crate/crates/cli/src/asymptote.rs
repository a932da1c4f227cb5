use clap::Args;
use hbac_core::asymptotics::{
    block_predict, effective_temperature, predict, AsymptoticPrediction, BlockStructure,
    TemperatureSpec,
};
use hbac_core::InitialState;
use serde::Serialize;

use crate::args::{check_qubits, parse_f64, Format, InitSpec, OutputArgs, ResetArgs};
use crate::output::{fmt_f64, sink, write_csv, write_json, Metadata};
use crate::{exit, CliError, Result};

#[derive(Debug, Clone, Args)]
pub struct AsymptoteArgs {
    #[arg(long)]
    pub n: usize,
    #[command(flatten)]
    pub reset: ResetArgs,
    /// Ratio of the computation-qubit gap to the reset's large gap.
    #[arg(long, conflicts_with_all = ["delta", "delta_total"])]
    pub delta_ratio: Option<f64>,
    /// Computation-qubit gap (any energy unit).
    #[arg(long, requires = "delta_total")]
    pub delta: Option<f64>,
    /// Large gap of the reset system (same unit as --delta).
    #[arg(long, requires = "delta")]
    pub delta_total: Option<f64>,
    /// Heat-bath temperature in kelvin.
    #[arg(long)]
    pub t_bath: Option<f64>,
    /// Sorted initial marginal file; adds the block prediction for it.
    #[arg(long)]
    pub init: Option<InitSpec>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymptoteRecord {
    #[serde(flatten)]
    pub prediction: AsymptoticPrediction,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temperature: Option<TemperatureSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub effective_temperature: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blocks: Option<BlockStructure>,
}

fn temperature(args: &AsymptoteArgs) -> Result<Option<TemperatureSpec>> {
    let has_gap = args.delta_ratio.is_some() || args.delta.is_some();
    match (has_gap, args.t_bath) {
        (false, None) => Ok(None),
        (true, None) => Err(CliError::usage(
            "--t-bath is required with --delta-ratio or --delta",
        )),
        (false, Some(_)) => Err(CliError::usage(
            "--t-bath needs --delta-ratio or --delta/--delta-total",
        )),
        (true, Some(t_bath)) => Ok(Some(match args.delta_ratio {
            Some(r) => TemperatureSpec::from_ratio(r, t_bath)?,
            None => TemperatureSpec::new(args.delta.unwrap(), args.delta_total.unwrap(), t_bath)?,
        })),
    }
}

pub fn run(args: &AsymptoteArgs) -> Result<i32> {
    let n = check_qubits(args.n)?;
    let reset = args.reset.float()?;
    let spec = temperature(args)?;
    let blocks = match &args.init {
        None | Some(InitSpec::MaximallyMixed) => None,
        Some(init) => match init.resolve(n, reset.dim(), parse_f64)? {
            InitialState::Marginal(m) => Some(block_predict(&m, &reset)?),
            _ => {
                return Err(CliError::usage(
                    "block prediction needs a file holding a sorted marginal",
                ))
            }
        },
    };
    let record = AsymptoteRecord {
        prediction: predict(n, &reset)?,
        effective_temperature: spec.map(|s| effective_temperature(n, &s)).transpose()?,
        temperature: spec,
        blocks,
    };

    let mut metadata = Metadata::new("asymptote", "f64")
        .param("n", n)
        .param("reset", reset.probs());
    if let Some(init) = &args.init {
        metadata = metadata.param("init", init.label());
    }
    let mut out = sink(args.output.out.as_deref())?;
    match args.output.format {
        Format::Json => write_json(&mut *out, &metadata, None, &[&record])?,
        Format::Csv => {
            let header = ["quantity", "index", "value"].map(String::from);
            write_csv(&mut *out, &header, &long_rows(&record))?;
        }
    }
    eprintln!(
        "qubit-1 polarization limit = {:.9}; p0 limit = {:.9}",
        record.prediction.qubit1_polarization_limit,
        record.prediction.p_infinity.probs()[0]
    );
    Ok(exit::SUCCESS)
}

/// `quantity,index,value` rows; scalars leave `index` empty.
fn long_rows(record: &AsymptoteRecord) -> Vec<Vec<String>> {
    let p = &record.prediction;
    let mut rows = Vec::new();
    let mut scalar =
        |name: &str, value: f64| rows.push(vec![name.to_string(), String::new(), fmt_f64(value)]);
    scalar("n", p.n as f64);
    scalar("reset_levels", p.reset.dim() as f64);
    scalar("effective_polarization", p.effective_polarization);
    scalar("log_gap", p.reset.log_gap());
    scalar("qubit1_polarization_limit", p.qubit1_polarization_limit);
    scalar("lambda1_limit", p.lambda1_limit);
    if let Some(bound) = p.schulman_bound {
        scalar("schulman_bound", bound);
    }
    if let Some(t) = record.effective_temperature {
        scalar("effective_temperature", t);
    }
    let mut vector = |name: &str, first: usize, values: &[f64]| {
        rows.extend(
            values
                .iter()
                .enumerate()
                .map(|(i, v)| vec![name.to_string(), (first + i).to_string(), fmt_f64(*v)]),
        )
    };
    vector("reset", 0, p.reset.probs());
    vector("p_infinity", 0, p.p_infinity.probs());
    // Qubits are numbered from 1.
    vector("qubit_polarization", 1, &p.per_qubit_polarizations);
    if let Some(blocks) = &record.blocks {
        let starts: Vec<f64> = blocks.boundaries.iter().map(|r| r.start as f64).collect();
        vector("block_start", 0, &starts);
        vector("block_mass", 0, &blocks.block_masses);
        vector("block_marginal", 0, blocks.predicted_marginal.probs());
    }
    rows
}
