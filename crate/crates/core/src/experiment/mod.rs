//! Configuration-driven scenarios that regenerate the standard figure data
//! sets, and their CSV/JSON/SVG output.

mod config;
mod output;
mod scenarios;
mod table;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use config::{
    linspace, Ats, BackgroundConfig, Config, Crosstalk, DetunedQubit, DeviceConfig, Fano, Format, FrequencyGrid,
    LinewidthScaling, ModelConfig, OutputConfig, ProbeConfig, Range, ResonantStack, Saturation, ScenarioConfigs,
};
pub use output::{emit_outputs, read_table_csv, CsvTable, EmitReport};
pub use table::{heatmap, line, PlotSpec, Table, SPECTRUM_COLUMNS};

use crate::error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    ResonantStack,
    DetunedQubit,
    Saturation,
    Ats,
    Fano,
    LinewidthScaling,
    Crosstalk,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::ResonantStack,
        Scenario::DetunedQubit,
        Scenario::Saturation,
        Scenario::Ats,
        Scenario::Fano,
        Scenario::LinewidthScaling,
        Scenario::Crosstalk,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::ResonantStack => "resonant_stack",
            Scenario::DetunedQubit => "detuned_qubit",
            Scenario::Saturation => "saturation",
            Scenario::Ats => "ats",
            Scenario::Fano => "fano",
            Scenario::LinewidthScaling => "linewidth_scaling",
            Scenario::Crosstalk => "crosstalk",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Scenario::ResonantStack => "|S21| for N = 1..n_max resonant qubits, eigenfrequencies, stop bands, noisy single-qubit fit",
            Scenario::DetunedQubit => "|S22| map while one qubit is tuned through the others, with eigenfrequency traces",
            Scenario::Saturation => "on-resonance transmission versus probe strength, P50 per N, power map",
            Scenario::Ats => "three-level array transmission versus control Rabi rate, branch splitting",
            Scenario::Fano => "three-qubit reflection with one detuned qubit, Fano approximation, skewness",
            Scenario::LinewidthScaling => "brightest subradiant decay rate versus N, power-law fit",
            Scenario::Crosstalk => "flux crosstalk matrix from slope traces, compensation currents, residuals",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scenario `{s}`")))
    }
}

/// Identifies the code and configuration that produced a result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub scenario: Scenario,
    pub version: String,
    pub config_sha256: String,
    pub config: Config,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub provenance: Provenance,
    pub tables: Vec<Table>,
    /// Scalar results (fits, extracted widths) keyed by name.
    pub summary: serde_json::Map<String, serde_json::Value>,
}

impl RunResult {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

/// Validates the scenario section, then computes every table. Nothing is
/// written to disk.
pub fn run_scenario(scenario: Scenario, cfg: &Config) -> Result<RunResult> {
    cfg.validate()?;
    cfg.validate_scenario(scenario)?;
    let mut out = scenarios::Output::default();
    match scenario {
        Scenario::ResonantStack => scenarios::resonant_stack(cfg, &mut out)?,
        Scenario::DetunedQubit => scenarios::detuned_qubit(cfg, &mut out)?,
        Scenario::Saturation => scenarios::saturation(cfg, &mut out)?,
        Scenario::Ats => scenarios::ats(cfg, &mut out)?,
        Scenario::Fano => scenarios::fano(cfg, &mut out)?,
        Scenario::LinewidthScaling => scenarios::linewidth_scaling(cfg, &mut out)?,
        Scenario::Crosstalk => scenarios::crosstalk(cfg, &mut out)?,
    }
    for t in &out.tables {
        t.validate()?;
    }
    Ok(RunResult {
        provenance: Provenance {
            scenario,
            version: VERSION.to_string(),
            config_sha256: cfg.hash(),
            config: cfg.clone(),
        },
        tables: out.tables,
        summary: out.summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_names_round_trip() {
        for s in Scenario::ALL {
            assert_eq!(s.name().parse::<Scenario>().unwrap(), s);
            assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{}\"", s.name()));
        }
        assert!(matches!("fig2".parse::<Scenario>(), Err(Error::Config(_))));
    }
}
