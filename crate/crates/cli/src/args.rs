//! Flag groups shared by several subcommands and their parsers.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use hbac_core::{
    make_tensor_reset, make_thermal_reset, ComputationMarginal, DiagonalState, InitialState,
    Rational, ResetDistribution, Scalar,
};
use num_bigint::BigInt;

use crate::{CliError, Result};

/// Largest qubit count accepted on the command line.
pub const MAX_CLI_QUBITS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Backend {
    Float,
    Rational,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Float => "f64",
            Backend::Rational => "rational",
        }
    }
}

/// Reset system selection. `--reset-probs` wins over `--epsilon`;
/// `--tensor-qubits k` composes `k` thermal qubits at `--epsilon`.
#[derive(Debug, Clone, Default, Args)]
pub struct ResetArgs {
    /// Polarization of a thermal reset qubit.
    #[arg(long, allow_negative_numbers = true)]
    pub epsilon: Option<f64>,
    /// Explicit reset populations, decreasing (e.g. 0.6,0.4 or 3/5,2/5).
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub reset_probs: Option<Vec<String>>,
    /// Use this many thermal qubits at --epsilon as the reset system.
    #[arg(long)]
    pub tensor_qubits: Option<usize>,
}

impl ResetArgs {
    pub fn is_empty(&self) -> bool {
        self.epsilon.is_none() && self.reset_probs.is_none()
    }

    pub fn float(&self) -> Result<ResetDistribution> {
        if let Some(probs) = &self.reset_probs {
            let values = probs
                .iter()
                .map(|s| parse_f64(s))
                .collect::<Result<Vec<_>>>()?;
            return Ok(ResetDistribution::new(values)?);
        }
        let eps = self.epsilon.ok_or_else(|| {
            CliError::usage("a reset is required: give --epsilon or --reset-probs")
        })?;
        let qubit = make_thermal_reset(eps)?;
        match self.tensor_qubits {
            None | Some(1) => Ok(qubit),
            Some(0) => Err(CliError::usage("--tensor-qubits must be at least 1")),
            Some(k) if k > 8 => Err(CliError::usage("--tensor-qubits is limited to 8")),
            Some(k) => Ok(make_tensor_reset(&vec![qubit; k])?),
        }
    }

    pub fn rational(&self) -> Result<ResetDistribution<Rational>> {
        let probs = self.reset_probs.as_ref().ok_or_else(|| {
            CliError::usage(
                "the rational backend needs exact --reset-probs (thermal resets are irrational)",
            )
        })?;
        let values = probs
            .iter()
            .map(|s| parse_rational(s))
            .collect::<Result<Vec<_>>>()?;
        Ok(ResetDistribution::new(values)?)
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

pub fn check_qubits(n: usize) -> Result<usize> {
    if (1..=MAX_CLI_QUBITS).contains(&n) {
        Ok(n)
    } else {
        Err(CliError::usage(format!(
            "--n must be in 1..={MAX_CLI_QUBITS}, got {n}"
        )))
    }
}

pub fn parse_f64(s: &str) -> Result<f64> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let (num, den) = (parse_f64(num)?, parse_f64(den)?);
        return Ok(num / den);
    }
    f64::from_str(s).map_err(|_| CliError::usage(format!("not a number: '{s}'")))
}

/// Exact value of a fraction `a/b`, an integer or a plain decimal.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || CliError::usage(format!("not an exact number: '{s}'"));
    if let Some((num, den)) = s.split_once('/') {
        let num = BigInt::from_str(num.trim()).map_err(|_| bad())?;
        let den = BigInt::from_str(den.trim()).map_err(|_| bad())?;
        if den == BigInt::from(0) {
            return Err(bad());
        }
        return Ok(Rational::new(num, den));
    }
    let (negative, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    let digits = format!("{int}{frac}");
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let num = BigInt::from_str(&digits).map_err(|_| bad())?;
    let den = BigInt::from(10).pow(frac.len() as u32);
    let value = Rational::new(num, den);
    Ok(if negative { -value } else { value })
}

/// Initial state preset: `maximally-mixed`, `thermal:<eps>`, or a path to a
/// file of probabilities (length `2^n` for a marginal, `2^n k` for a joint
/// state), separated by commas or whitespace; `#` starts a comment.
#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    MaximallyMixed,
    Thermal(f64),
    File(PathBuf),
}

impl FromStr for InitSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "maximally-mixed" {
            return Ok(InitSpec::MaximallyMixed);
        }
        if let Some(eps) = s.strip_prefix("thermal:") {
            return eps
                .parse()
                .map(InitSpec::Thermal)
                .map_err(|_| format!("bad thermal polarization '{eps}'"));
        }
        Ok(InitSpec::File(PathBuf::from(s)))
    }
}

impl InitSpec {
    pub fn label(&self) -> String {
        match self {
            InitSpec::MaximallyMixed => "maximally-mixed".into(),
            InitSpec::Thermal(eps) => format!("thermal:{eps}"),
            InitSpec::File(path) => path.display().to_string(),
        }
    }

    pub fn resolve<T: Scalar>(
        &self,
        n: usize,
        reset_dim: usize,
        parse: fn(&str) -> Result<T>,
    ) -> Result<InitialState<T>> {
        match self {
            InitSpec::MaximallyMixed => Ok(InitialState::MaximallyMixed),
            InitSpec::Thermal(eps) => Ok(InitialState::Thermal(*eps)),
            InitSpec::File(path) => {
                let values = read_numbers(path, parse)?;
                if values.len() == 1 << n {
                    Ok(InitialState::Marginal(ComputationMarginal::new(values)?))
                } else if values.len() == (1 << n) * reset_dim {
                    Ok(InitialState::Joint(DiagonalState::new(
                        n, reset_dim, values,
                    )?))
                } else {
                    Err(CliError::usage(format!(
                        "{} holds {} values; expected {} (marginal) or {} (joint)",
                        path.display(),
                        values.len(),
                        1usize << n,
                        (1usize << n) * reset_dim
                    )))
                }
            }
        }
    }
}

fn read_numbers<T>(path: &Path, parse: fn(&str) -> Result<T>) -> Result<Vec<T>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    text.lines()
        .map(|line| line.split('#').next().unwrap_or(""))
        .flat_map(|line| line.split(|c: char| c == ',' || c.is_whitespace()))
        .filter(|tok| !tok.is_empty())
        .map(parse)
        .collect()
}

/// `start:stop:step`, inclusive of `stop` up to rounding.
pub fn parse_range(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [start, stop, step] = parts[..] else {
        return Err(CliError::usage(format!(
            "range must be start:stop:step, got '{spec}'"
        )));
    };
    let (start, stop, step) = (parse_f64(start)?, parse_f64(stop)?, parse_f64(step)?);
    if !(step > 0.0) || stop < start {
        return Err(CliError::usage(format!("empty or invalid range '{spec}'")));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}
