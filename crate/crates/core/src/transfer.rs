//! 2x2 transfer matrices relating right- and left-moving amplitudes,
//! `(V2R, V2L) = T (V1R, V1L)`, and chains of qubits, line segments and
//! lumped inductors.

use std::ops::Mul;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::hamiltonian::ArrayConfig;
use crate::qubit::{DriveParams, ResponseModel};
use crate::units::{power_db, Z0_OHM};

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferMatrix {
    pub t11: Complex64,
    pub t12: Complex64,
    pub t21: Complex64,
    pub t22: Complex64,
}

impl TransferMatrix {
    pub const IDENTITY: TransferMatrix = TransferMatrix {
        t11: ONE,
        t12: ZERO,
        t21: ZERO,
        t22: ONE,
    };

    pub fn new(t11: Complex64, t12: Complex64, t21: Complex64, t22: Complex64) -> Self {
        Self { t11, t12, t21, t22 }
    }

    pub fn det(&self) -> Complex64 {
        self.t11 * self.t22 - self.t12 * self.t21
    }

    pub fn max_abs_diff(&self, other: &TransferMatrix) -> f64 {
        [
            self.t11 - other.t11,
            self.t12 - other.t12,
            self.t21 - other.t21,
            self.t22 - other.t22,
        ]
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
    }

    /// S-parameters of the two-port; `omega` only labels errors.
    ///
    /// With `(V2R, V2L) = T (V1R, V1L)` a wave incident from port 2
    /// (`V1R = 0`) gives `S22 = T12 / T22`; this equals `r` for a single
    /// qubit block.
    pub fn sparams(&self, omega: f64) -> Result<SParams> {
        if self.t22.norm() == 0.0 {
            return Err(Error::SingularAt { what: "T22", omega });
        }
        Ok(SParams {
            s21: 1.0 / self.t22,
            s22: self.t12 / self.t22,
            s11: -self.t21 / self.t22,
        })
    }
}

impl Mul for TransferMatrix {
    type Output = TransferMatrix;

    fn mul(self, b: TransferMatrix) -> TransferMatrix {
        TransferMatrix {
            t11: self.t11 * b.t11 + self.t12 * b.t21,
            t12: self.t11 * b.t12 + self.t12 * b.t22,
            t21: self.t21 * b.t11 + self.t22 * b.t21,
            t22: self.t21 * b.t12 + self.t22 * b.t22,
        }
    }
}

/// Scattering parameters of a chain. Port 1 is where the chain starts
/// (first qubit side), port 2 the far end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SParams {
    pub s21: Complex64,
    pub s22: Complex64,
    pub s11: Complex64,
}

/// Block of a single qubit with amplitude reflection `r`.
pub fn qubit_tmatrix(r: Complex64) -> Result<TransferMatrix> {
    if !r.re.is_finite() || !r.im.is_finite() {
        return Err(Error::NonFinite("r"));
    }
    let d = 1.0 + r;
    if d.norm() == 0.0 {
        return Err(Error::PerfectMirror);
    }
    Ok(TransferMatrix::new((1.0 + 2.0 * r) / d, r / d, -r / d, 1.0 / d))
}

/// Free propagation over a segment with phase `phi`.
pub fn propagation_tmatrix(phi: f64) -> TransferMatrix {
    let z = ZERO;
    TransferMatrix::new(Complex64::from_polar(1.0, -phi), z, z, Complex64::from_polar(1.0, phi))
}

/// Series inductance `l` (H) in a line of impedance `z0` (ohm).
pub fn inductance_tmatrix(omega: f64, l: f64, z0: f64) -> Result<TransferMatrix> {
    ensure_finite("omega", omega)?;
    ensure_finite("l", l)?;
    ensure_finite("z0", z0)?;
    if z0 <= 0.0 {
        return Err(Error::invalid("z0", "line impedance must be positive"));
    }
    let x = omega * l / (2.0 * z0);
    Ok(TransferMatrix::new(
        Complex64::new(1.0, -x),
        Complex64::new(0.0, -x),
        Complex64::new(0.0, x),
        Complex64::new(1.0, x),
    ))
}

/// Semi-transparent inductive mirrors and lead lines at the array edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackgroundModel {
    /// Inductance before the first qubit (H).
    pub l1: f64,
    /// Inductance after the last qubit (H).
    pub l2: f64,
    /// Line impedance (ohm).
    pub z0: f64,
    /// Line length between the first mirror and the first qubit (m).
    pub lead1: f64,
    /// Line length between the last qubit and the second mirror (m).
    pub lead2: f64,
}

impl Default for BackgroundModel {
    fn default() -> Self {
        Self {
            l1: 0.0,
            l2: 0.0,
            z0: Z0_OHM,
            lead1: 0.0,
            lead2: 0.0,
        }
    }
}

impl BackgroundModel {
    pub fn mirrors(l1: f64, l2: f64) -> Self {
        Self {
            l1,
            l2,
            ..Self::default()
        }
    }

    pub fn with_leads(mut self, lead1: f64, lead2: f64) -> Self {
        self.lead1 = lead1;
        self.lead2 = lead2;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("l1", self.l1), ("l2", self.l2), ("lead1", self.lead1), ("lead2", self.lead2)] {
            ensure_finite(name, v)?;
            if v < 0.0 {
                return Err(Error::invalid(name, "must be non-negative"));
            }
        }
        ensure_finite("z0", self.z0)?;
        if self.z0 <= 0.0 {
            return Err(Error::invalid("z0", "line impedance must be positive"));
        }
        Ok(())
    }
}

/// How the inter-qubit phase depends on frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseMode {
    /// Phase frozen at the reference frequency of the array.
    Markov,
    /// `phi(omega) = omega d / c`.
    #[default]
    Dispersive,
}

/// Everything besides the array and the drive that defines a chain.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ChainOptions {
    pub background: BackgroundModel,
    pub response: ResponseModel,
    pub phase_mode: PhaseMode,
}

impl ChainOptions {
    pub fn markov() -> Self {
        Self {
            phase_mode: PhaseMode::Markov,
            ..Self::default()
        }
    }

    pub fn with_background(mut self, background: BackgroundModel) -> Self {
        self.background = background;
        self
    }

    pub fn with_response(mut self, response: ResponseModel) -> Self {
        self.response = response;
        self
    }
}

/// Total transfer matrix
/// `T^{L2} T^{lead2} T^{Q_N} T^phi ... T^phi T^{Q_1} T^{lead1} T^{L1}`
/// at the probe frequency of `drive`.
pub fn chain_tmatrix(cfg: &ArrayConfig, opts: &ChainOptions, drive: &DriveParams) -> Result<TransferMatrix> {
    cfg.validate()?;
    opts.background.validate()?;
    drive.validate()?;
    let omega = drive.omega_p;
    let bg = &opts.background;
    let phase_omega = match opts.phase_mode {
        PhaseMode::Markov => cfg.omega_ref,
        PhaseMode::Dispersive => omega,
    };
    let k = phase_omega / cfg.phase_velocity;
    let segment = propagation_tmatrix(cfg.phi_at(phase_omega));

    let mut t = inductance_tmatrix(omega, bg.l1, bg.z0)?;
    t = propagation_tmatrix(k * bg.lead1) * t;
    for (idx, q) in cfg.qubits.iter().enumerate() {
        if idx > 0 {
            t = segment * t;
        }
        let r = opts.response.reflection(q, drive)?;
        let block = qubit_tmatrix(r).map_err(|e| match e {
            Error::PerfectMirror => Error::SingularAt {
                what: "qubit block (r = -1)",
                omega,
            },
            other => other,
        })?;
        t = block * t;
    }
    t = propagation_tmatrix(k * bg.lead2) * t;
    t = inductance_tmatrix(omega, bg.l2, bg.z0)? * t;
    Ok(t)
}

pub fn chain_sparams(cfg: &ArrayConfig, opts: &ChainOptions, drive: &DriveParams) -> Result<SParams> {
    chain_tmatrix(cfg, opts, drive)?.sparams(drive.omega_p)
}

/// `chain_sparams` over a frequency grid, evaluated in parallel and returned
/// in grid order. `drive.omega_p` is replaced by each grid point.
pub fn sweep(cfg: &ArrayConfig, opts: &ChainOptions, drive: &DriveParams, omegas: &[f64]) -> Result<Vec<SParams>> {
    omegas
        .par_iter()
        .map(|&w| chain_sparams(cfg, opts, &drive.at(w)))
        .collect()
}

/// Maps drive power to probe Rabi rate through `Omega_p^2 = kappa P`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeCalibration {
    /// rad^2 s^-2 per power unit.
    pub kappa: f64,
}

/// Saturation parameter `s = 2 Omega_p^2 / Gamma_10^2` at which a lossless
/// qubit transmits half the power on resonance: `1 / (sqrt 2 - 1)`.
pub fn half_transmission_saturation() -> f64 {
    1.0 / (std::f64::consts::SQRT_2 - 1.0)
}

impl ProbeCalibration {
    /// Calibration in which unit power saturates a single lossless qubit of
    /// radiative rate `gamma_rad` to 50 % transmission.
    pub fn reference(gamma_rad: f64) -> Self {
        Self {
            kappa: half_transmission_saturation() / 2.0 * gamma_rad * gamma_rad,
        }
    }

    pub fn rabi(&self, power: f64) -> f64 {
        (self.kappa * power.max(0.0)).sqrt()
    }

    pub fn power(&self, rabi: f64) -> f64 {
        rabi * rabi / self.kappa
    }
}

/// `|S21|^2` on a (power, frequency) grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationMap {
    pub omegas: Vec<f64>,
    pub rabis: Vec<f64>,
    /// `transmission[power index][frequency index]`.
    pub transmission: Vec<Vec<f64>>,
}

/// Power transmission for each probe Rabi rate, with every qubit seeing the
/// same probe amplitude.
pub fn saturation_sweep(
    cfg: &ArrayConfig,
    opts: &ChainOptions,
    omegas: &[f64],
    rabis: &[f64],
) -> Result<SaturationMap> {
    let transmission = rabis
        .par_iter()
        .map(|&rabi| {
            let drive = DriveParams::probe(cfg.omega_ref).with_probe_rabi(rabi);
            omegas
                .iter()
                .map(|&w| chain_sparams(cfg, opts, &drive.at(w)).map(|s| s.s21.norm_sqr()))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SaturationMap {
        omegas: omegas.to_vec(),
        rabis: rabis.to_vec(),
        transmission,
    })
}

/// Contiguous region where a power spectrum lies below a dB threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopBand {
    pub lower: f64,
    pub upper: f64,
}

impl StopBand {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Finds the contiguous sub-threshold region containing the grid point
/// closest to `center`. Edges are located by linear interpolation of the
/// dB values between neighbouring grid points.
pub fn stop_band(omegas: &[f64], abs2: &[f64], threshold_db: f64, center: f64) -> Result<StopBand> {
    if omegas.len() != abs2.len() || omegas.len() < 2 {
        return Err(Error::invalid("omegas/abs2", "need equal-length grids with at least two points"));
    }
    if omegas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("omegas", "grid must be strictly increasing"));
    }
    let db: Vec<f64> = abs2.iter().map(|&p| power_db(p)).collect();
    let start = omegas
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - center).abs().total_cmp(&(b.1 - center).abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    if db[start] >= threshold_db {
        return Err(Error::AmbiguousWindow(format!(
            "spectrum at the center frequency is {:.2} dB, above the {threshold_db} dB threshold",
            db[start]
        )));
    }
    let mut lo = start;
    while lo > 0 && db[lo - 1] < threshold_db {
        lo -= 1;
    }
    let mut hi = start;
    while hi + 1 < db.len() && db[hi + 1] < threshold_db {
        hi += 1;
    }
    if lo == 0 || hi + 1 == db.len() {
        return Err(Error::AmbiguousWindow("stop band extends past the frequency grid".into()));
    }
    let edge = |a: usize, b: usize| {
        let f = (threshold_db - db[a]) / (db[b] - db[a]);
        omegas[a] + f * (omegas[b] - omegas[a])
    };
    Ok(StopBand {
        lower: edge(lo - 1, lo),
        upper: edge(hi, hi + 1),
    })
}
