//! Run configuration: a JSON document with device, model and per-scenario
//! sections. Every key is optional; omitted keys take the sample defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hamiltonian::ArrayConfig;
use crate::preset;
use crate::qubit::{QubitParams, ResponseModel};
use crate::transfer::{BackgroundModel, ChainOptions, PhaseMode, ProbeCalibration};
use crate::units::{ghz, mhz};

use super::Scenario;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub device: DeviceConfig,
    pub background: BackgroundConfig,
    pub model: ModelConfig,
    pub probe: ProbeConfig,
    /// Seed for every random draw (synthetic noise, calibration perturbations).
    pub seed: u64,
    pub output: OutputConfig,
    pub scenarios: ScenarioConfigs,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            device: DeviceConfig::default(),
            background: BackgroundConfig::default(),
            model: ModelConfig::default(),
            probe: ProbeConfig::default(),
            seed: 1234,
            output: OutputConfig::default(),
            scenarios: ScenarioConfigs::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceConfig {
    pub omega_r_ghz: f64,
    pub gamma_rad_mhz: f64,
    /// Non-radiative rate Gamma_nr / 2pi. Omitted: mean of the measured 1/T_phi.
    pub gamma_nr_mhz: Option<f64>,
    pub spacing_m: f64,
    pub phase_velocity_m_per_s: f64,
    /// Use each qubit's measured T1/T2 instead of identical nominal qubits.
    pub measured_qubits: bool,
}

impl Default for DeviceConfig {
    fn default() -> Self {
        Self {
            omega_r_ghz: 7.898,
            gamma_rad_mhz: 6.4,
            gamma_nr_mhz: None,
            spacing_m: preset::SPACING_M,
            phase_velocity_m_per_s: preset::PHASE_VELOCITY_M_PER_S,
            measured_qubits: false,
        }
    }
}

impl DeviceConfig {
    pub fn omega_r(&self) -> f64 {
        ghz(self.omega_r_ghz)
    }

    pub fn gamma_rad(&self) -> f64 {
        mhz(self.gamma_rad_mhz)
    }

    pub fn gamma_nr(&self) -> f64 {
        self.gamma_nr_mhz.map(mhz).unwrap_or_else(preset::mean_gamma_nr)
    }

    pub fn phi(&self) -> f64 {
        self.omega_r() * self.spacing_m / self.phase_velocity_m_per_s
    }

    /// Qubit `index` (0-based) of the device at `omega10`.
    pub fn qubit(&self, index: usize, omega10: f64) -> Result<QubitParams> {
        if self.measured_qubits {
            let m = preset::MEASURED_QUBITS
                .get(index)
                .ok_or_else(|| Error::Config(format!("measured_qubits only covers 8 qubits, asked for qubit {}", index + 1)))?;
            m.to_params(omega10)
        } else {
            QubitParams::new(omega10, self.gamma_rad(), self.gamma_nr())
        }
    }

    /// `n` qubits at the given frequencies in the device geometry.
    pub fn array(&self, omegas: &[f64]) -> Result<ArrayConfig> {
        let qubits = omegas
            .iter()
            .enumerate()
            .map(|(i, &w)| self.qubit(i, w))
            .collect::<Result<Vec<_>>>()?;
        ArrayConfig::new(qubits, self.spacing_m, self.phase_velocity_m_per_s, self.omega_r())
    }

    pub fn resonant_array(&self, n: usize) -> Result<ArrayConfig> {
        self.array(&vec![self.omega_r(); n])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackgroundConfig {
    pub l1_nh: f64,
    pub l2_nh: f64,
    pub z0_ohm: f64,
    pub lead1_mm: f64,
    pub lead2_mm: f64,
}

impl Default for BackgroundConfig {
    fn default() -> Self {
        Self {
            l1_nh: 0.0,
            l2_nh: 0.0,
            z0_ohm: crate::units::Z0_OHM,
            lead1_mm: 0.0,
            lead2_mm: 0.0,
        }
    }
}

impl BackgroundConfig {
    pub fn model(&self) -> BackgroundModel {
        BackgroundModel {
            l1: self.l1_nh * 1e-9,
            l2: self.l2_nh * 1e-9,
            z0: self.z0_ohm,
            lead1: self.lead1_mm * 1e-3,
            lead2: self.lead2_mm * 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub phase_mode: PhaseMode,
    pub response_model: ResponseModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    /// `Omega_p^2 = kappa * P` with P in mW. Omitted: powers are reported in
    /// units where P = 1 half-saturates a single qubit.
    pub kappa_rad2_per_s2_per_mw: Option<f64>,
}

impl ProbeConfig {
    pub fn calibration(&self, gamma_rad: f64) -> ProbeCalibration {
        match self.kappa_rad2_per_s2_per_mw {
            Some(kappa) => ProbeCalibration { kappa },
            None => ProbeCalibration::reference(gamma_rad),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            other => Err(Error::Config(format!("unknown output format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            formats: vec![Format::Csv, Format::Json, Format::Svg],
        }
    }
}

/// Frequency window around a center, in MHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyGrid {
    pub half_span_mhz: f64,
    pub points: usize,
    #[serde(default)]
    pub offset_mhz: f64,
}

impl FrequencyGrid {
    pub fn new(half_span_mhz: f64, points: usize) -> Self {
        Self {
            half_span_mhz,
            points,
            offset_mhz: 0.0,
        }
    }

    pub fn omegas(&self, center: f64) -> Vec<f64> {
        let c = center + mhz(self.offset_mhz);
        linspace(c - mhz(self.half_span_mhz), c + mhz(self.half_span_mhz), self.points)
    }

    fn validate(&self, what: &str) -> Result<()> {
        if !(self.half_span_mhz.is_finite() && self.half_span_mhz > 0.0) || !self.offset_mhz.is_finite() {
            return Err(Error::Config(format!("{what}: half_span_mhz must be positive and finite")));
        }
        if self.points < 2 || self.points > 200_000 {
            return Err(Error::Config(format!("{what}: points must lie in 2..=200000")));
        }
        Ok(())
    }
}

/// Inclusive parameter range sampled at `points` values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    #[serde(default)]
    pub log: bool,
}

impl Range {
    pub fn new(start: f64, stop: f64, points: usize) -> Self {
        Self {
            start,
            stop,
            points,
            log: false,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.log {
            linspace(self.start.ln(), self.stop.ln(), self.points).into_iter().map(f64::exp).collect()
        } else {
            linspace(self.start, self.stop, self.points)
        }
    }

    fn validate(&self, what: &str) -> Result<()> {
        if !self.start.is_finite() || !self.stop.is_finite() {
            return Err(Error::Config(format!("{what}: bounds must be finite")));
        }
        if self.points == 0 || self.points > 100_000 {
            return Err(Error::Config(format!("{what}: points must lie in 1..=100000")));
        }
        if self.points > 1 && self.stop <= self.start {
            return Err(Error::Config(format!("{what}: range must be increasing")));
        }
        if self.log && self.start <= 0.0 {
            return Err(Error::Config(format!("{what}: logarithmic range needs positive bounds")));
        }
        Ok(())
    }
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfigs {
    pub resonant_stack: ResonantStack,
    pub detuned_qubit: DetunedQubit,
    pub saturation: Saturation,
    pub ats: Ats,
    pub fano: Fano,
    pub linewidth_scaling: LinewidthScaling,
    pub crosstalk: Crosstalk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResonantStack {
    pub n_max: usize,
    pub grid: FrequencyGrid,
    pub stop_band_db: f64,
    /// Standard deviation of the complex noise added to the single-qubit
    /// spectrum before the resonance fit.
    pub fit_noise: f64,
}

impl Default for ResonantStack {
    fn default() -> Self {
        Self {
            n_max: 8,
            grid: FrequencyGrid::new(60.0, 1201),
            stop_band_db: -25.0,
            fit_noise: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetunedQubit {
    pub n: usize,
    /// 1-based index of the swept qubit; the others stay at omega_r.
    pub swept_qubit: usize,
    pub detuning_mhz: Range,
    pub grid: FrequencyGrid,
}

impl Default for DetunedQubit {
    fn default() -> Self {
        Self {
            n: 8,
            swept_qubit: 8,
            detuning_mhz: Range::new(-40.0, 40.0, 81),
            grid: FrequencyGrid::new(40.0, 801),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Saturation {
    pub n_max: usize,
    /// Probe Rabi rate in units of Gamma_10.
    pub rabi_over_gamma: Range,
    /// Array size of the (power, frequency) transmission map.
    pub map_n: usize,
    pub grid: FrequencyGrid,
}

impl Default for Saturation {
    fn default() -> Self {
        Self {
            n_max: 8,
            rabi_over_gamma: Range {
                start: 0.01,
                stop: 100.0,
                points: 161,
                log: true,
            },
            map_n: 8,
            grid: FrequencyGrid::new(40.0, 401),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Ats {
    pub n: usize,
    pub omega_c_ghz: f64,
    /// 1 -> 2 transition frequency; omitted means resonant with the control.
    pub omega21_ghz: Option<f64>,
    pub gamma10_mhz: f64,
    pub gamma20_mhz: f64,
    pub rabi_c_mhz: Range,
    pub grid: FrequencyGrid,
}

impl Default for Ats {
    fn default() -> Self {
        Self {
            n: 8,
            omega_c_ghz: 7.623,
            omega21_ghz: None,
            gamma10_mhz: 3.4,
            gamma20_mhz: 11.1,
            rabi_c_mhz: Range::new(0.0, 80.0, 41),
            grid: FrequencyGrid::new(80.0, 1601),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fano {
    pub phi: f64,
    /// Detunings 2 Delta / Gamma_10 of the third qubit for line spectra.
    pub two_delta_over_gamma: Vec<f64>,
    /// Detuning axis of the reflection map, in units of Gamma_10 / 2.
    pub map: Range,
    /// Half span of the frequency axis in units of Gamma_10.
    pub half_span_over_gamma: f64,
    pub points: usize,
}

impl Default for Fano {
    fn default() -> Self {
        Self {
            phi: 0.15,
            two_delta_over_gamma: vec![-0.75, 0.0, 0.75],
            map: Range::new(-1.5, 1.5, 61),
            half_span_over_gamma: 1.0,
            points: 801,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinewidthScaling {
    pub phi: f64,
    pub n_min: usize,
    pub n_max: usize,
}

impl Default for LinewidthScaling {
    fn default() -> Self {
        Self {
            phi: 0.165,
            n_min: 3,
            n_max: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Crosstalk {
    pub n: usize,
    /// Synthetic nearest-neighbour crosstalk ratio.
    pub nearest: f64,
    /// Synthetic crosstalk ratio of all other pairs.
    pub other: f64,
    /// Slope records (`x,y,slope_xy,slope_yx`, 1-based coils) to use instead
    /// of the synthetic matrix. Relative paths resolve against the config file.
    pub slopes_csv: Option<PathBuf>,
    /// Relative error of each calibrated off-diagonal entry in the
    /// residual-crosstalk estimate.
    pub perturbation: f64,
    pub tuned_current_ma: f64,
}

impl Default for Crosstalk {
    fn default() -> Self {
        Self {
            n: 8,
            nearest: 0.15,
            other: 0.01,
            slopes_csv: None,
            perturbation: 0.01,
            tuned_current_ma: 1.0,
        }
    }
}

fn positive(what: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} must be positive and finite, got {v}")))
    }
}

fn array_size(what: &str, n: usize) -> Result<()> {
    if (1..=64).contains(&n) {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} must lie in 1..=64, got {n}")))
    }
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Config = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file. Relative data paths inside it resolve against
    /// the file's directory. Unreadable files are configuration errors.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("reading {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        if let (Some(p), Some(base)) = (&cfg.scenarios.crosstalk.slopes_csv, path.parent()) {
            if p.is_relative() {
                cfg.scenarios.crosstalk.slopes_csv = Some(base.join(p));
            }
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON form of the resolved configuration.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn chain_options(&self) -> ChainOptions {
        ChainOptions {
            background: self.background.model(),
            response: self.model.response_model,
            phase_mode: self.model.phase_mode,
        }
    }

    /// Checks every section that does not depend on the scenario.
    pub fn validate(&self) -> Result<()> {
        let d = &self.device;
        positive("device.omega_r_ghz", d.omega_r_ghz)?;
        positive("device.gamma_rad_mhz", d.gamma_rad_mhz)?;
        if let Some(g) = d.gamma_nr_mhz {
            if !(g.is_finite() && g >= 0.0) {
                return Err(Error::Config("device.gamma_nr_mhz must be non-negative".into()));
            }
        }
        positive("device.spacing_m", d.spacing_m)?;
        positive("device.phase_velocity_m_per_s", d.phase_velocity_m_per_s)?;
        let phi = d.phi();
        if phi >= std::f64::consts::PI {
            return Err(Error::Config(format!("device phase omega_r d / c = {phi} must stay below pi")));
        }
        self.background.model().validate().map_err(|e| Error::Config(format!("background: {e}")))?;
        if let Some(k) = self.probe.kappa_rad2_per_s2_per_mw {
            positive("probe.kappa_rad2_per_s2_per_mw", k)?;
        }
        if self.output.formats.is_empty() {
            return Err(Error::Config("output.formats is empty".into()));
        }
        for s in Scenario::ALL {
            self.validate_scenario(s)?;
        }
        Ok(())
    }

    pub fn validate_scenario(&self, scenario: Scenario) -> Result<()> {
        let s = &self.scenarios;
        match scenario {
            Scenario::ResonantStack => {
                let c = &s.resonant_stack;
                array_size("resonant_stack.n_max", c.n_max)?;
                c.grid.validate("resonant_stack.grid")?;
                if !(c.stop_band_db.is_finite() && c.stop_band_db < 0.0) {
                    return Err(Error::Config("resonant_stack.stop_band_db must be negative".into()));
                }
                if !(c.fit_noise.is_finite() && c.fit_noise >= 0.0) {
                    return Err(Error::Config("resonant_stack.fit_noise must be non-negative".into()));
                }
            }
            Scenario::DetunedQubit => {
                let c = &s.detuned_qubit;
                array_size("detuned_qubit.n", c.n)?;
                if c.swept_qubit == 0 || c.swept_qubit > c.n {
                    return Err(Error::Config(format!(
                        "detuned_qubit.swept_qubit must lie in 1..={}, got {}",
                        c.n, c.swept_qubit
                    )));
                }
                c.detuning_mhz.validate("detuned_qubit.detuning_mhz")?;
                c.grid.validate("detuned_qubit.grid")?;
            }
            Scenario::Saturation => {
                let c = &s.saturation;
                array_size("saturation.n_max", c.n_max)?;
                array_size("saturation.map_n", c.map_n)?;
                c.rabi_over_gamma.validate("saturation.rabi_over_gamma")?;
                if c.rabi_over_gamma.start <= 0.0 {
                    return Err(Error::Config("saturation.rabi_over_gamma must be positive".into()));
                }
                c.grid.validate("saturation.grid")?;
            }
            Scenario::Ats => {
                let c = &s.ats;
                array_size("ats.n", c.n)?;
                positive("ats.omega_c_ghz", c.omega_c_ghz)?;
                if let Some(w) = c.omega21_ghz {
                    positive("ats.omega21_ghz", w)?;
                }
                positive("ats.gamma20_mhz", c.gamma20_mhz)?;
                if !(c.gamma10_mhz.is_finite() && c.gamma10_mhz >= self.device.gamma_rad_mhz / 2.0) {
                    return Err(Error::Config("ats.gamma10_mhz must be at least gamma_rad_mhz / 2".into()));
                }
                c.rabi_c_mhz.validate("ats.rabi_c_mhz")?;
                if c.rabi_c_mhz.start < 0.0 {
                    return Err(Error::Config("ats.rabi_c_mhz must be non-negative".into()));
                }
                c.grid.validate("ats.grid")?;
            }
            Scenario::Fano => {
                let c = &s.fano;
                if !(c.phi.is_finite() && c.phi > 0.0 && c.phi < std::f64::consts::PI) {
                    return Err(Error::Config("fano.phi must lie in (0, pi)".into()));
                }
                if c.two_delta_over_gamma.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Config("fano.two_delta_over_gamma must be finite".into()));
                }
                c.map.validate("fano.map")?;
                positive("fano.half_span_over_gamma", c.half_span_over_gamma)?;
                if c.points < 2 || c.points > 200_000 {
                    return Err(Error::Config("fano.points must lie in 2..=200000".into()));
                }
            }
            Scenario::LinewidthScaling => {
                let c = &s.linewidth_scaling;
                if !(c.phi.is_finite() && c.phi > 0.0 && c.phi < std::f64::consts::PI) {
                    return Err(Error::Config("linewidth_scaling.phi must lie in (0, pi)".into()));
                }
                if c.n_min < 2 || c.n_max > 64 || c.n_max < c.n_min + 1 {
                    return Err(Error::Config("linewidth_scaling needs 2 <= n_min < n_max <= 64".into()));
                }
            }
            Scenario::Crosstalk => {
                let c = &s.crosstalk;
                if !(2..=64).contains(&c.n) {
                    return Err(Error::Config("crosstalk.n must lie in 2..=64".into()));
                }
                for (what, v) in [("crosstalk.nearest", c.nearest), ("crosstalk.other", c.other)] {
                    if !(v.is_finite() && v.abs() < 1.0) {
                        return Err(Error::Config(format!("{what} must be finite with magnitude below 1")));
                    }
                }
                if !(c.perturbation.is_finite() && (0.0..1.0).contains(&c.perturbation)) {
                    return Err(Error::Config("crosstalk.perturbation must lie in [0, 1)".into()));
                }
                if !(c.tuned_current_ma.is_finite() && c.tuned_current_ma != 0.0) {
                    return Err(Error::Config("crosstalk.tuned_current_ma must be finite and nonzero".into()));
                }
            }
        }
        Ok(())
    }
}
