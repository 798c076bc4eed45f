//! Result records: one text line or one JSON object per line.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
}

/// Non-finite values are written as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Record {
    Verdict {
        point: Vec<f64>,
        notion: String,
        verdict: String,
        window_relative: bool,
        steps: Option<usize>,
        witness_file: Option<String>,
        notes: String,
    },
    Chain {
        source: String,
        points: usize,
        closed: bool,
        max_jump: Option<f64>,
        total_jump: Option<f64>,
        file: Option<String>,
    },
    ChainCheck {
        notion: String,
        valid: bool,
        first_violation: Option<usize>,
        max_jump: Option<f64>,
        total_jump: Option<f64>,
    },
    Condition {
        index: u8,
        name: String,
        ok: bool,
        worst_margin: Option<f64>,
        worst_disk: Option<usize>,
    },
    Certificate {
        disks: usize,
        summary: String,
        resolutions: Vec<String>,
        file: Option<String>,
    },
    FixedPoint {
        found: bool,
        point: Option<Vec<f64>>,
        boundary_winding: Option<i64>,
    },
    Plot {
        file: String,
        bytes: usize,
    },
}

pub fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn coords(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("({})", parts.join(", "))
}

fn num(x: &Option<f64>) -> String {
    x.map_or_else(|| "n/a".to_string(), |v| format!("{v:.6e}"))
}

impl fmt::Display for Record {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Record::Verdict { point, notion, verdict, window_relative, steps, witness_file, .. } => {
                write!(f, "{} {notion}: {verdict}", coords(point))?;
                if *window_relative {
                    f.write_str(" (window-relative)")?;
                }
                if let Some(n) = steps {
                    write!(f, " [witness: {n} steps")?;
                    if let Some(file) = witness_file {
                        write!(f, ", {file}")?;
                    }
                    f.write_str("]")?;
                }
                Ok(())
            }
            Record::Chain { source, points, closed, max_jump, total_jump, file } => {
                write!(
                    f,
                    "chain ({source}): {points} points, {}, max jump {}, total jump {}",
                    if *closed { "closed" } else { "open" },
                    num(max_jump),
                    num(total_jump)
                )?;
                if let Some(file) = file {
                    write!(f, " -> {file}")?;
                }
                Ok(())
            }
            Record::ChainCheck { notion, valid, first_violation, max_jump, total_jump } => {
                match (valid, first_violation) {
                    (true, _) => write!(f, "{notion}: valid")?,
                    (false, Some(i)) => write!(f, "{notion}: invalid at step {i}")?,
                    (false, None) => write!(f, "{notion}: invalid")?,
                }
                write!(f, " (max jump {}, total jump {})", num(max_jump), num(total_jump))
            }
            Record::Condition { index, name, ok, worst_margin, worst_disk } => {
                write!(
                    f,
                    "condition ({index}) {name}: {}, worst margin {}",
                    if *ok { "ok" } else { "FAILED" },
                    num(worst_margin)
                )?;
                if let Some(k) = worst_disk {
                    write!(f, " at disk {k}")?;
                }
                Ok(())
            }
            Record::Certificate { disks, summary, file, .. } => {
                write!(f, "{summary} ({disks} disks")?;
                if let Some(file) = file {
                    write!(f, ", {file}")?;
                }
                f.write_str(")")
            }
            Record::FixedPoint { found, point, boundary_winding } => {
                match (found, point) {
                    (true, Some(p)) => write!(f, "fixed point near {}", coords(p))?,
                    _ => f.write_str("no fixed point found in the window (window-relative)")?,
                }
                if let Some(w) = boundary_winding {
                    write!(f, "; winding number of the window boundary {w}")?;
                }
                Ok(())
            }
            Record::Plot { file, bytes } => write!(f, "wrote {file} ({bytes} bytes)"),
        }
    }
}

pub struct Reporter<'a> {
    out: &'a mut dyn Write,
    format: Format,
}

impl<'a> Reporter<'a> {
    pub fn new(out: &'a mut dyn Write, format: Format) -> Self {
        Reporter { out, format }
    }

    pub fn format(&self) -> Format {
        self.format
    }

    pub fn emit(&mut self, record: &Record) -> std::io::Result<()> {
        match self.format {
            Format::Text => writeln!(self.out, "{record}"),
            Format::Json => {
                let line = serde_json::to_string(record).map_err(std::io::Error::other)?;
                writeln!(self.out, "{line}")
            }
        }
    }

    /// Free text, shown in text mode only.
    pub fn note(&mut self, text: &str) -> std::io::Result<()> {
        if self.format == Format::Text {
            self.out.write_all(text.as_bytes())?;
        }
        Ok(())
    }
}
