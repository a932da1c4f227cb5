//! Artifact writing: CSV with a header row, or JSON with a metadata object
//! and a data array.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::Result;

pub const GIT_DESCRIBE: &str = env!("HBAC_GIT_DESCRIBE");

#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub git_describe: &'static str,
    pub command: &'static str,
    pub backend: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub tolerances: Map<String, Value>,
    pub parameters: Map<String, Value>,
}

impl Metadata {
    pub fn new(command: &'static str, backend: &'static str) -> Self {
        Self {
            tool: "hbac",
            version: env!("CARGO_PKG_VERSION"),
            git_describe: GIT_DESCRIBE,
            command,
            backend,
            seed: None,
            tolerances: Map::new(),
            parameters: Map::new(),
        }
    }

    pub fn tolerance(mut self, name: &str, value: f64) -> Self {
        self.tolerances.insert(name.into(), Value::from(value));
        self
    }

    pub fn param(mut self, name: &str, value: impl Serialize) -> Self {
        let value = serde_json::to_value(value).unwrap_or(Value::Null);
        self.parameters.insert(name.into(), value);
        self
    }
}

/// Opens `path`, or stdout when `None`.
pub fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

/// Full-precision decimal (17 significant digits) for CSV cells.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// `{"metadata": ..., <extra>..., "data": [...]}`.
pub fn write_json<D: Serialize>(
    out: &mut dyn Write,
    metadata: &Metadata,
    extra: Option<(&str, Value)>,
    data: &D,
) -> Result<()> {
    let mut doc = Map::new();
    doc.insert("metadata".into(), serde_json::to_value(metadata)?);
    if let Some((key, value)) = extra {
        doc.insert(key.into(), value);
    }
    doc.insert("data".into(), serde_json::to_value(data)?);
    serde_json::to_writer_pretty(&mut *out, &Value::Object(doc))?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

pub fn write_csv(out: &mut dyn Write, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(&mut *out);
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(row)?;
    }
    writer.flush()?;
    drop(writer);
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 0.41307920433443, 1e-300, 5e-324, -2.5, 0.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(0.4), "4.0000000000000002e-1");
    }

    #[test]
    fn json_layout() {
        let mut buf = Vec::new();
        let meta = Metadata::new("test", "f64")
            .tolerance("tol", 1e-12)
            .param("n", 3);
        write_json(&mut buf, &meta, None, &vec![1, 2]).unwrap();
        let v: Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["metadata"]["command"], "test");
        assert_eq!(v["metadata"]["parameters"]["n"], 3);
        assert_eq!(v["data"], serde_json::json!([1, 2]));
    }
}
