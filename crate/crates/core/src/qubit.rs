//! Closed-form response of a single emitter side-coupled to the waveguide.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Rates and frequencies of one transmon, all angular (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitParams {
    /// 0 -> 1 transition frequency.
    pub omega10: f64,
    /// Radiative decay into the waveguide, Gamma_10.
    pub gamma_rad: f64,
    /// Non-radiative rate Gamma_nr = Gamma_phi + Gamma_l / 2.
    pub gamma_nr: f64,
    /// Non-radiative relaxation Gamma_l (enters the saturation term).
    pub gamma_loss: f64,
    /// Anharmonicity chi, so that omega21 = omega10 + chi.
    pub anharmonicity: f64,
    /// Decoherence rate of the 0 -> 2 transition.
    pub gamma20: f64,
}

impl QubitParams {
    /// Lossless-relaxation qubit: `gamma_loss = 0`, no anharmonicity, no 0-2 decoherence.
    pub fn new(omega10: f64, gamma_rad: f64, gamma_nr: f64) -> Result<Self> {
        let q = Self {
            omega10,
            gamma_rad,
            gamma_nr,
            gamma_loss: 0.0,
            anharmonicity: 0.0,
            gamma20: 0.0,
        };
        q.validate()?;
        Ok(q)
    }

    /// Builds the rates from coherence times, `T1 = 1/Gamma_10` and
    /// `T2 = 1/gamma_10`, attributing all non-radiative decay to dephasing.
    pub fn from_coherence_times(omega10: f64, t1: f64, t2: f64) -> Result<Self> {
        ensure_finite("t1", t1)?;
        ensure_finite("t2", t2)?;
        if t1 <= 0.0 || t2 <= 0.0 {
            return Err(Error::invalid("t1/t2", "coherence times must be positive"));
        }
        let gamma_rad = 1.0 / t1;
        let gamma_nr = 1.0 / t2 - gamma_rad / 2.0;
        if gamma_nr < 0.0 {
            return Err(Error::invalid("t2", format!("T2 = {t2:e} exceeds 2 T1")));
        }
        Self::new(omega10, gamma_rad, gamma_nr)
    }

    pub fn with_anharmonicity(mut self, chi: f64) -> Self {
        self.anharmonicity = chi;
        self
    }

    pub fn with_gamma20(mut self, gamma20: f64) -> Self {
        self.gamma20 = gamma20;
        self
    }

    pub fn with_gamma_loss(mut self, gamma_loss: f64) -> Self {
        self.gamma_loss = gamma_loss;
        self
    }

    pub fn with_omega10(mut self, omega10: f64) -> Self {
        self.omega10 = omega10;
        self
    }

    /// Total decoherence rate gamma_10 = Gamma_10 / 2 + Gamma_nr.
    pub fn gamma10(&self) -> f64 {
        self.gamma_rad / 2.0 + self.gamma_nr
    }

    pub fn omega21(&self) -> f64 {
        self.omega10 + self.anharmonicity
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("omega10", self.omega10)?;
        ensure_finite("gamma_rad", self.gamma_rad)?;
        ensure_finite("gamma_nr", self.gamma_nr)?;
        ensure_finite("gamma_loss", self.gamma_loss)?;
        ensure_finite("anharmonicity", self.anharmonicity)?;
        ensure_finite("gamma20", self.gamma20)?;
        if self.gamma_rad <= 0.0 {
            return Err(Error::invalid("gamma_rad", "must be positive"));
        }
        if self.gamma_nr < 0.0 || self.gamma_loss < 0.0 || self.gamma20 < 0.0 {
            return Err(Error::invalid(
                "gamma_nr/gamma_loss/gamma20",
                "rates must be non-negative",
            ));
        }
        Ok(())
    }
}

/// Probe and control tones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveParams {
    pub omega_p: f64,
    pub rabi_p: f64,
    pub omega_c: f64,
    pub rabi_c: f64,
}

impl DriveParams {
    /// Vanishingly weak probe at `omega_p`, no control tone.
    pub fn probe(omega_p: f64) -> Self {
        Self {
            omega_p,
            rabi_p: 0.0,
            omega_c: 0.0,
            rabi_c: 0.0,
        }
    }

    pub fn with_probe_rabi(mut self, rabi_p: f64) -> Self {
        self.rabi_p = rabi_p;
        self
    }

    pub fn with_control(mut self, omega_c: f64, rabi_c: f64) -> Self {
        self.omega_c = omega_c;
        self.rabi_c = rabi_c;
        self
    }

    pub fn at(mut self, omega_p: f64) -> Self {
        self.omega_p = omega_p;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("omega_p", self.omega_p)?;
        ensure_finite("rabi_p", self.rabi_p)?;
        ensure_finite("omega_c", self.omega_c)?;
        ensure_finite("rabi_c", self.rabi_c)?;
        if self.rabi_p < 0.0 || self.rabi_c < 0.0 {
            return Err(Error::invalid("rabi", "Rabi rates must be non-negative"));
        }
        Ok(())
    }
}

/// Which closed-form reflection a qubit block uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseModel {
    #[default]
    TwoLevel,
    ThreeLevel,
}

impl ResponseModel {
    pub fn reflection(self, q: &QubitParams, drive: &DriveParams) -> Result<Complex64> {
        match self {
            ResponseModel::TwoLevel => two_level_response(q, drive).map(|(r, _)| r),
            ResponseModel::ThreeLevel => three_level_reflection(q, drive),
        }
    }
}

/// Amplitude reflection of a driven two-level emitter, unchecked.
///
/// `r = -(G/2g) (1 - i D/g) / (1 + (D/g)^2 + W^2 / ((G + G_l) g))` with
/// `D = omega - omega10`, `g = gamma_10` and `W` the probe Rabi rate.
pub(crate) fn two_level_reflection(q: &QubitParams, omega: f64, rabi_p: f64) -> Complex64 {
    let g = q.gamma10();
    let x = (omega - q.omega10) / g;
    let saturation = rabi_p * rabi_p / ((q.gamma_rad + q.gamma_loss) * g);
    let amplitude = q.gamma_rad / (2.0 * g);
    -amplitude * Complex64::new(1.0, -x) / (1.0 + x * x + saturation)
}

/// Reflection `r` and transmission `t = 1 + r` of a single driven two-level
/// emitter at the probe frequency.
pub fn two_level_response(q: &QubitParams, drive: &DriveParams) -> Result<(Complex64, Complex64)> {
    q.validate()?;
    drive.validate()?;
    let r = two_level_reflection(q, drive.omega_p, drive.rabi_p);
    Ok((r, 1.0 + r))
}

/// Fraction of low-power transmitted power removed on resonance,
/// `1 - (1 - Gamma_10 / (2 gamma_10))^2`.
pub fn extinction_coefficient(q: &QubitParams) -> Result<f64> {
    q.validate()?;
    let ratio = q.gamma_rad / (2.0 * q.gamma10());
    Ok(1.0 - (1.0 - ratio).powi(2))
}

/// Reflection of a ladder three-level emitter whose 1 -> 2 transition is
/// dressed by a control tone.
///
/// The probe is assumed weak: `rabi_p` is ignored, so probe saturation is
/// not modelled here.
pub fn three_level_reflection(q: &QubitParams, drive: &DriveParams) -> Result<Complex64> {
    q.validate()?;
    drive.validate()?;
    let detuning = drive.omega_p - q.omega10;
    let two_photon = detuning + drive.omega_c - q.omega21();
    let inner = Complex64::new(2.0 * q.gamma20, 2.0 * two_photon);
    let dressing = if drive.rabi_c == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        if inner.norm() == 0.0 {
            return Err(Error::SingularAt {
                what: "three-level denominator (gamma20 = 0 at two-photon resonance)",
                omega: drive.omega_p,
            });
        }
        drive.rabi_c * drive.rabi_c / inner
    };
    let denom = 2.0 * Complex64::new(q.gamma10(), detuning) + dressing;
    Ok(-q.gamma_rad / denom)
}
