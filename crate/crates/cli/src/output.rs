//! Table output. CSV files start with the effective configuration as `#`
//! comment lines; JSON carries the same information as an object.

use std::io::Write;

use fbrelay::{Backend, LinConvention, ProtocolKind, TopologyConfig};
use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::error::CliResult;

pub const SCHEMA_VERSION: u32 = 1;

/// One output row; field order is the CSV header.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub schema_version: u32,
    pub protocol: ProtocolKind,
    pub backend: &'static str,
    pub convention: &'static str,
    pub snr_db: f64,
    pub eta: f64,
    pub beta: f64,
    pub alpha: f64,
    pub n_s: u32,
    pub n_r: u32,
    pub k: u32,
    pub rate: f64,
    pub outage: Option<f64>,
    pub std_error: Option<f64>,
    pub error: Option<String>,
}

impl Record {
    /// `snr_db` is passed separately so the value the user typed is echoed
    /// verbatim rather than recomputed from the linear SNR.
    pub fn new(
        protocol: ProtocolKind,
        backend: &Backend,
        conv: LinConvention,
        snr_db: f64,
        cfg: &TopologyConfig,
        result: Result<(f64, Option<f64>), String>,
    ) -> Self {
        let (outage, std_error, error) = match result {
            Ok((v, se)) => (Some(v), se, None),
            Err(e) => (None, None, Some(e)),
        };
        Record {
            schema_version: SCHEMA_VERSION,
            protocol,
            backend: backend.as_str(),
            convention: conv.as_str(),
            snr_db,
            eta: cfg.eta,
            beta: cfg.beta,
            alpha: cfg.path_loss_exp,
            n_s: cfg.n_s,
            n_r: cfg.n_r,
            k: cfg.k,
            rate: cfg.source_rate(),
            outage,
            std_error,
            error,
        }
    }
}

#[derive(Serialize)]
struct JsonTable<'a> {
    schema_version: u32,
    config: &'a RunConfig,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    notes: Vec<String>,
    records: &'a [Record],
    #[serde(skip_serializing_if = "Option::is_none")]
    summary: Option<&'a [Record]>,
}

pub struct Table {
    pub records: Vec<Record>,
    /// Rows written after a `# summary` marker.
    pub summary: Option<Vec<Record>>,
    /// Extra comment lines (e.g. sweep axis).
    pub notes: Vec<String>,
}

impl Table {
    pub fn new(records: Vec<Record>) -> Self {
        Table {
            records,
            summary: None,
            notes: Vec::new(),
        }
    }

    pub fn rows(&self) -> usize {
        self.records.len() + self.summary.as_ref().map_or(0, Vec::len)
    }

    pub fn failed(&self) -> usize {
        self.records
            .iter()
            .chain(self.summary.iter().flatten())
            .filter(|r| r.error.is_some())
            .count()
    }

    pub fn render(&self, cfg: &RunConfig) -> CliResult<Vec<u8>> {
        match cfg.format {
            Format::Csv => self.render_csv(cfg),
            Format::Json => {
                let t = JsonTable {
                    schema_version: SCHEMA_VERSION,
                    config: cfg,
                    notes: self.notes.clone(),
                    records: &self.records,
                    summary: self.summary.as_deref(),
                };
                let mut out = serde_json::to_vec_pretty(&t)?;
                out.push(b'\n');
                Ok(out)
            }
        }
    }

    fn render_csv(&self, cfg: &RunConfig) -> CliResult<Vec<u8>> {
        let mut out = Vec::new();
        for line in cfg.echo().iter().chain(&self.notes) {
            writeln!(out, "# {line}")?;
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.records {
            w.serialize(r)?;
        }
        if self.records.is_empty() {
            w.write_record(HEADER)?;
        }
        out.extend(w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?);
        if let Some(summary) = &self.summary {
            writeln!(out, "# summary")?;
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
            for r in summary {
                w.serialize(r)?;
            }
            out.extend(w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?);
        }
        Ok(out)
    }

    /// Writes to `--output` (announcing path and row count) or to stdout.
    pub fn emit(&self, cfg: &RunConfig) -> CliResult<()> {
        let bytes = self.render(cfg)?;
        match &cfg.output {
            Some(path) => {
                std::fs::write(path, &bytes)?;
                println!("wrote {} rows to {}", self.rows(), path.display());
            }
            None => std::io::stdout().lock().write_all(&bytes)?,
        }
        Ok(())
    }
}

pub const HEADER: [&str; 15] = [
    "schema_version",
    "protocol",
    "backend",
    "convention",
    "snr_db",
    "eta",
    "beta",
    "alpha",
    "n_s",
    "n_r",
    "k",
    "rate",
    "outage",
    "std_error",
    "error",
];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::CommonArgs;

    fn sample(outage: Result<(f64, Option<f64>), String>) -> Record {
        let cfg = TopologyConfig::default();
        Record::new(ProtocolKind::Mrc, &Backend::ClosedForm, LinConvention::PaperVerbatim, 10.0, &cfg, outage)
    }

    #[test]
    fn csv_header_is_stable() {
        let cfg = RunConfig::resolve(&CommonArgs::default()).unwrap();
        let t = Table::new(vec![sample(Ok((0.1, None)))]);
        let text = String::from_utf8(t.render(&cfg).unwrap()).unwrap();
        let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
        assert_eq!(header, HEADER.join(","));
        assert!(text.lines().any(|l| l == "1,mrc,closed,paper,10.0,0.5,0.5,0.0,500,500,250,0.5,0.1,,"));
    }

    #[test]
    fn floats_round_trip() {
        let cfg = RunConfig::resolve(&CommonArgs::default()).unwrap();
        let x = 0.040_566_582_975_615_732_06_f64;
        let t = Table::new(vec![sample(Ok((x, Some(1.0 / 3.0))))]);
        let text = String::from_utf8(t.render(&cfg).unwrap()).unwrap();
        let row = text.lines().last().unwrap();
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields[12].parse::<f64>().unwrap().to_bits(), x.to_bits());
        assert_eq!(fields[13].parse::<f64>().unwrap().to_bits(), (1.0f64 / 3.0).to_bits());
    }

    #[test]
    fn error_cells_leave_outage_empty() {
        let cfg = RunConfig::resolve(&CommonArgs::default()).unwrap();
        let t = Table::new(vec![sample(Err("domain error in eta: bad".into()))]);
        let text = String::from_utf8(t.render(&cfg).unwrap()).unwrap();
        assert!(text.lines().last().unwrap().ends_with(",,,domain error in eta: bad"));
        assert_eq!(t.failed(), 1);
    }
}
