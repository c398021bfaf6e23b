//! Device parameters of the eight-qubit sample used as defaults throughout.

use crate::error::Result;
use crate::hamiltonian::ArrayConfig;
use crate::qubit::QubitParams;
use crate::units::{ghz, mhz};

/// Radiative rate of each qubit, Gamma_10 / 2pi = 6.4 MHz.
pub fn gamma_rad() -> f64 {
    mhz(6.4)
}

/// Common operating frequency, 7.898 GHz.
pub fn omega_r() -> f64 {
    ghz(7.898)
}

pub const SPACING_M: f64 = 400e-6;
pub const PHASE_VELOCITY_M_PER_S: f64 = 1.2e8;

/// Measured per-qubit properties around 7.9 GHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasuredQubit {
    pub t1_ns: f64,
    pub t2_ns: f64,
    pub t_phi_ns: f64,
    /// Quoted extinction coefficient in percent.
    pub extinction_pct: f64,
    /// |chi| / 2pi in MHz.
    pub anharmonicity_mhz: f64,
    pub f_max_ghz: f64,
    pub f_min_ghz: f64,
}

const fn mq(t1: f64, t2: f64, tp: f64, ext: f64, chi: f64, fmax: f64, fmin: f64) -> MeasuredQubit {
    MeasuredQubit {
        t1_ns: t1,
        t2_ns: t2,
        t_phi_ns: tp,
        extinction_pct: ext,
        anharmonicity_mhz: chi,
        f_max_ghz: fmax,
        f_min_ghz: fmin,
    }
}

pub const MEASURED_QUBITS: [MeasuredQubit; 8] = [
    mq(27.6, 51.0, 665.1, 99.4, 283.0, 8.097, 3.029),
    mq(22.5, 41.4, 520.0, 99.4, 279.0, 7.900, 3.091),
    mq(22.4, 41.4, 557.6, 99.4, 273.0, 8.088, 2.912),
    mq(20.0, 35.7, 334.6, 98.7, 275.0, 8.114, 2.986),
    mq(22.0, 39.9, 422.9, 99.1, 267.0, 8.115, 2.970),
    mq(27.6, 47.7, 351.1, 98.2, 281.0, 7.95, 2.936),
    mq(28.0, 47.9, 329.0, 97.9, 273.0, 8.066, 2.588),
    mq(34.3, 55.3, 284.0, 96.2, 276.0, 8.136, 2.484),
];

impl MeasuredQubit {
    /// Qubit at `omega10` with `Gamma_10 = 1/T1`, `gamma_10 = 1/T2` and a
    /// negative anharmonicity of the measured magnitude.
    pub fn to_params(&self, omega10: f64) -> Result<QubitParams> {
        Ok(QubitParams::from_coherence_times(omega10, self.t1_ns * 1e-9, self.t2_ns * 1e-9)?
            .with_anharmonicity(-mhz(self.anharmonicity_mhz)))
    }

    /// `1 / T_phi` in rad/s.
    pub fn gamma_phi(&self) -> f64 {
        1.0 / (self.t_phi_ns * 1e-9)
    }
}

/// Mean non-radiative rate of the eight qubits, taken as `<1 / T_phi>`.
pub fn mean_gamma_nr() -> f64 {
    MEASURED_QUBITS.iter().map(MeasuredQubit::gamma_phi).sum::<f64>() / MEASURED_QUBITS.len() as f64
}

/// Identical qubit at the operating point: nominal radiative rate and the
/// mean non-radiative rate.
pub fn nominal_qubit() -> QubitParams {
    QubitParams {
        omega10: omega_r(),
        gamma_rad: gamma_rad(),
        gamma_nr: mean_gamma_nr(),
        gamma_loss: 0.0,
        anharmonicity: -mhz(275.0),
        gamma20: 0.0,
    }
}

/// `n` resonant nominal qubits in the sample geometry, phase frozen at 7.898 GHz.
pub fn resonant_array(n: usize) -> Result<ArrayConfig> {
    ArrayConfig::new(vec![nominal_qubit(); n], SPACING_M, PHASE_VELOCITY_M_PER_S, omega_r())
}

/// Autler-Townes parameters: control tone frequency and the three-level qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtsPreset {
    pub omega_c: f64,
    pub qubit: QubitParams,
}

/// omega10/2pi = 7.898 GHz, omega_c/2pi = omega21/2pi = 7.623 GHz,
/// Gamma_10/2pi = 6.4 MHz, gamma_10/2pi = 3.4 MHz, gamma_20/2pi = 11.1 MHz.
pub fn ats() -> AtsPreset {
    let omega_c = ghz(7.623);
    let qubit = QubitParams {
        omega10: omega_r(),
        gamma_rad: gamma_rad(),
        gamma_nr: mhz(3.4) - gamma_rad() / 2.0,
        gamma_loss: 0.0,
        anharmonicity: omega_c - omega_r(),
        gamma20: mhz(11.1),
    };
    AtsPreset { omega_c, qubit }
}

/// Inter-qubit phase of the sample geometry at `omega`.
pub fn phase_at(omega: f64) -> f64 {
    omega * SPACING_M / PHASE_VELOCITY_M_PER_S
}

/// Phase-dependent bandgap scale `Gamma_10 / phi` expected for long arrays.
pub fn infinite_array_gap() -> f64 {
    gamma_rad() / phase_at(omega_r())
}
