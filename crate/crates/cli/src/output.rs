//! Report rendering. Every report starts with the tool version and the
//! resolved configuration; CSV carries them as `#` comment lines.

use serde::Serialize;
use serde_json::Value;

use crate::args::Format;
use crate::error::CliError;

pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: &'static str,
    pub config: Value,
    pub result: Value,
    pub table: Table,
    pub warnings: Vec<String>,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: &'a Value,
    warnings: &'a [String],
    result: &'a Value,
}

impl Report {
    pub fn new(command: &'static str, config: impl Serialize, result: impl Serialize, table: Table) -> Result<Self, CliError> {
        Ok(Self {
            command,
            config: serde_json::to_value(config)?,
            result: serde_json::to_value(result)?,
            table,
            warnings: Vec::new(),
        })
    }

    pub fn render(&self, format: Format) -> Result<Vec<u8>, CliError> {
        match format {
            Format::Json => {
                let mut out = serde_json::to_vec_pretty(&JsonReport {
                    tool: TOOL,
                    version: VERSION,
                    command: self.command,
                    config: &self.config,
                    warnings: &self.warnings,
                    result: &self.result,
                })?;
                out.push(b'\n');
                Ok(out)
            }
            Format::Csv => {
                let mut out = Vec::new();
                out.extend_from_slice(format!("# {TOOL} {VERSION}\n").as_bytes());
                out.extend_from_slice(format!("# command: {}\n", self.command).as_bytes());
                out.extend_from_slice(format!("# config: {}\n", serde_json::to_string(&self.config)?).as_bytes());
                for w in &self.warnings {
                    out.extend_from_slice(format!("# warning: {w}\n").as_bytes());
                }
                let mut w = csv::Writer::from_writer(&mut out);
                w.write_record(&self.table.header)?;
                for row in &self.table.rows {
                    w.write_record(row)?;
                }
                w.flush()?;
                drop(w);
                Ok(out)
            }
        }
    }
}
