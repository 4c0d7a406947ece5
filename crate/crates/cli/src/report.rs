use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use semigroup_core::spectral::{ContourPath, ContourSpec};
use semigroup_core::verification::{
    C13Check, C1Estimate, C2Estimate, ConstantsLedger, DecayReport, DolgopyatScan,
    OscillatoryCheck, RapidScan, TailBoundCheck,
};
use semigroup_core::C64;

use crate::config::RunConfig;
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub subcommand: String,
    pub config: RunConfig,
    pub model: ModelSummary,
    pub scans: ScanSection,
    pub ledger: Option<ConstantsLedger>,
    pub decomposition: Option<DecompositionSection>,
    pub reconstruction: Vec<BromwichRow>,
    pub decay: Vec<DecayEntry>,
    pub tail_bounds: Vec<TailBoundCheck>,
    pub checks: Vec<CheckOutcome>,
    /// Stage failures that stopped part of the pipeline.
    pub errors: Vec<StageError>,
    pub pass: bool,
    pub timing: Timing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub dimension: usize,
    pub generator_norm: f64,
    pub spectral_abscissa: f64,
    pub eigenvector_condition: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScanSection {
    pub c1: Option<C1Estimate>,
    pub c2: Option<C2Estimate>,
    pub dolgopyat: Option<DolgopyatScan>,
    pub oscillatory: Option<OscillatoryCheck>,
    pub rapid: Option<RapidScan>,
    pub c13: Option<C13Check>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleRow {
    pub value: C64,
    pub multiplicity: usize,
    pub order: usize,
    pub trace: C64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedValue {
    pub t: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionSection {
    pub contour: ContourSpec,
    pub path: ContourPath,
    pub poles: Vec<PoleRow>,
    pub violations: Vec<C64>,
    /// False when some pole needs `t^k N^k` terms.
    pub projector_form_holds: bool,
    pub idempotence_defect: f64,
    pub annihilation_defect: f64,
    pub trace_defect: f64,
    pub path_agreement: Vec<TimedValue>,
    pub reconstruction_residual: Vec<TimedValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BromwichRow {
    pub t: f64,
    pub a: f64,
    pub b_cut: f64,
    pub step: f64,
    /// `‖approximation − T_t‖_2`.
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayEntry {
    pub probe: usize,
    pub report: DecayReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub pass: bool,
    /// Informational checks are reported but do not affect the exit code.
    pub gating: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageError {
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Timing {
    pub total_seconds: f64,
    pub stages: BTreeMap<String, f64>,
}

impl RunReport {
    pub fn to_json(&self) -> Result<String, CliError> {
        serde_json::to_string_pretty(self).map_err(|e| CliError::Report(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Report(e.to_string()))
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join(REPORT_FILE);
        write_file(&path, &self.to_json()?)?;
        Ok(path)
    }
}

/// A plot-ready series written as `<stage>_<quantity>.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub stage: String,
    pub quantity: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    pub fn new(stage: &str, quantity: &str, columns: &[&str]) -> Self {
        Self {
            stage: stage.into(),
            quantity: quantity.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}_{}.csv", self.stage, self.quantity)
    }

    /// Header row, then one line per row with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{v:.16e}");
            }
            out.push('\n');
        }
        out
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join(self.file_name());
        write_file(&path, &self.to_csv())?;
        Ok(path)
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}
