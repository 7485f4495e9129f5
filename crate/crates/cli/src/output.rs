use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Serialize;

use crate::error::{CliResult, Failure};

pub const VERSION: &str = concat!("schrostab ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

/// Files written by one command. Sidecars share the stem of the CSV path.
#[derive(Debug, Clone)]
pub struct Outputs {
    csv: PathBuf,
    formats: Vec<Format>,
}

impl Outputs {
    pub fn new(out_dir: &Path, out: &Path, formats: &[Format]) -> CliResult<Self> {
        if formats.is_empty() {
            return Err(Failure::Usage("at least one output format is required".into()));
        }
        let csv = if out.is_absolute() { out.to_path_buf() } else { out_dir.join(out) };
        if let Some(parent) = csv.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent)?;
            }
        }
        Ok(Self {
            csv,
            formats: formats.to_vec(),
        })
    }

    pub fn wants(&self, format: Format) -> bool {
        self.formats.contains(&format)
    }

    pub fn csv(&self) -> &Path {
        &self.csv
    }

    pub fn json(&self) -> PathBuf {
        self.csv.with_extension("json")
    }

    pub fn svg(&self) -> PathBuf {
        self.csv.with_extension("svg")
    }

    /// `<stem>_<suffix>.csv` next to the main CSV.
    pub fn sibling_csv(&self, suffix: &str) -> PathBuf {
        let stem = self
            .csv
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        self.csv.with_file_name(format!("{stem}_{suffix}.csv"))
    }
}

#[derive(Debug, Serialize)]
pub struct Report<'a, C: Serialize, R: Serialize> {
    pub tool: &'static str,
    pub config: &'a C,
    #[serde(flatten)]
    pub body: R,
}

/// Shortest round-trip form; exponent notation outside `[1e-4, 1e9)`.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e9).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn num_round_trips() {
        for v in [0.0, 1.0, -2.5, 1e-3, 4453.0133, 1.234e-15, 6.02e23, -1e-300] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(num(0.001), "0.001");
        assert_eq!(num(2e-7), "2e-7");
    }

    #[test]
    fn sidecar_paths() {
        let dir = tempfile::tempdir().unwrap();
        let o = Outputs::new(dir.path(), Path::new("sub/fig.csv"), &[Format::Csv]).unwrap();
        assert_eq!(o.json(), dir.path().join("sub/fig.json"));
        assert_eq!(o.sibling_csv("summary"), dir.path().join("sub/fig_summary.csv"));
        assert!(dir.path().join("sub").is_dir());
        let abs_path = dir.path().join("a.csv");
        let abs = Outputs::new(Path::new("/nonexistent"), &abs_path, &[Format::Csv]).unwrap();
        assert_eq!(abs.csv(), abs_path);
    }
}
