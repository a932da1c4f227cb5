use clap::Args;
use hbac_core::verification::suites::{run_suite, Suite, SuiteOptions};
use hbac_core::verification::VerificationReport;

use crate::args::{check_qubits, Format, OutputArgs, ResetArgs};
use crate::output::{fmt_f64, sink, write_csv, write_json, Metadata};
use crate::{exit, CliError, Result};

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(
        long,
        value_parser = ["maxdist", "monotone", "steady", "recurrence", "oracle", "blocks", "all"]
    )]
    pub suite: String,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Pin the qubit count instead of drawing it per trial.
    #[arg(long)]
    pub n: Option<usize>,
    /// Pin the reset system (ignored by the oracle suite, which draws exact
    /// resets of its own).
    #[command(flatten)]
    pub reset: ResetArgs,
    /// Iteration cap for trajectories that record every snapshot.
    #[arg(long = "max-iters", default_value_t = 2_000)]
    pub max_iters: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

pub fn run(args: &VerifyArgs) -> Result<i32> {
    let suites: Vec<Suite> = match args.suite.as_str() {
        "all" => Suite::ALL.to_vec(),
        name => vec![name.parse()?],
    };
    if args.trials == 0 {
        return Err(CliError::usage("--trials must be at least 1"));
    }
    let mut opts = SuiteOptions::new(args.trials, args.seed);
    opts.n = args.n.map(check_qubits).transpose()?;
    if !args.reset.is_empty() {
        opts.reset = Some(args.reset.float()?);
    }
    opts.max_iterations = args.max_iters;

    let reports = suites
        .iter()
        .map(|&s| run_suite(s, &opts))
        .collect::<hbac_core::Result<Vec<VerificationReport>>>()?;

    let mut metadata = Metadata::new("verify", "f64")
        .param("suite", &args.suite)
        .param("trials", args.trials)
        .param("max_iterations", args.max_iters);
    metadata.seed = Some(args.seed);
    if let Some(n) = opts.n {
        metadata = metadata.param("n", n);
    }
    if let Some(reset) = &opts.reset {
        metadata = metadata.param("reset", reset.probs());
    }
    for r in &reports {
        metadata = metadata.tolerance(&r.invariant_name, r.tolerance);
    }

    let mut out = sink(args.output.out.as_deref())?;
    match args.output.format {
        Format::Json => write_json(&mut *out, &metadata, None, &reports)?,
        Format::Csv => {
            let header = [
                "invariant",
                "trials",
                "checks",
                "failures",
                "tolerance",
                "worst_margin",
            ]
            .map(String::from);
            let rows: Vec<Vec<String>> = reports
                .iter()
                .map(|r| {
                    vec![
                        r.invariant_name.clone(),
                        r.trials.to_string(),
                        r.checks.to_string(),
                        r.failures.to_string(),
                        fmt_f64(r.tolerance),
                        fmt_f64(r.worst_margin),
                    ]
                })
                .collect();
            write_csv(&mut *out, &header, &rows)?;
        }
    }

    for r in &reports {
        eprintln!(
            "{}: {} ({} trials, {} checks, {} failures, worst margin {:.3e})",
            r.invariant_name,
            if r.passed() { "PASS" } else { "FAIL" },
            r.trials,
            r.checks,
            r.failures,
            r.worst_margin
        );
        for w in &r.witnesses {
            eprintln!("  witness: {w:?}");
        }
    }
    Ok(verdict(&reports))
}

pub fn verdict(reports: &[VerificationReport]) -> i32 {
    if reports.iter().all(VerificationReport::passed) {
        exit::SUCCESS
    } else {
        exit::VERIFICATION_FAILED
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn any_failure_fails_the_run() {
        let ok = VerificationReport::new("a", 0.0);
        let mut bad = VerificationReport::new("b", 0.0);
        bad.observe(|| "doctored".into(), 1, 0, 1.0, 0.0);
        assert_eq!(verdict(std::slice::from_ref(&ok)), exit::SUCCESS);
        assert_eq!(verdict(&[ok, bad]), exit::VERIFICATION_FAILED);
    }
}
