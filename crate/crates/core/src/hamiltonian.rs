//! Single-excitation effective Hamiltonian of the qubit array.
//!
//! With the `exp(+i omega t)` convention the matrix is
//! `H[r][s] = omega_s delta_rs + i (Gamma_10 / 2) exp(-i phi |r - s|)`.
//! The diagonal radiative term `i Gamma_10 / 2` is kept so that every
//! eigenvalue satisfies `Gamma_xi = 2 Im(omega_xi)`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::qubit::QubitParams;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Geometry and emitters of the array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig {
    /// Emitters in array order; qubit 0 sits at x = 0.
    pub qubits: Vec<QubitParams>,
    /// Qubit spacing d (m).
    pub spacing: f64,
    /// Phase velocity c (m/s).
    pub phase_velocity: f64,
    /// Reference frequency at which the Markovian phase is frozen (rad/s).
    pub omega_ref: f64,
}

impl ArrayConfig {
    pub fn new(qubits: Vec<QubitParams>, spacing: f64, phase_velocity: f64, omega_ref: f64) -> Result<Self> {
        let cfg = Self {
            qubits,
            spacing,
            phase_velocity,
            omega_ref,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `n` identical qubits with inter-qubit phase `phi` at `qubit.omega10`.
    pub fn uniform(n: usize, qubit: QubitParams, phi: f64) -> Result<Self> {
        let c = 1.2e8;
        Self::new(vec![qubit; n], phi * c / qubit.omega10, c, qubit.omega10)
    }

    pub fn validate(&self) -> Result<()> {
        if self.qubits.is_empty() {
            return Err(Error::invalid("qubits", "array needs at least one qubit"));
        }
        for q in &self.qubits {
            q.validate()?;
        }
        ensure_finite("spacing", self.spacing)?;
        ensure_finite("phase_velocity", self.phase_velocity)?;
        ensure_finite("omega_ref", self.omega_ref)?;
        if self.spacing <= 0.0 || self.phase_velocity <= 0.0 {
            return Err(Error::invalid("spacing/phase_velocity", "must be positive"));
        }
        let phi = self.phi();
        if !(phi > 0.0 && phi < PI) {
            return Err(Error::invalid("phi", format!("phase {phi} outside (0, pi)")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.qubits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qubits.is_empty()
    }

    /// Inter-qubit phase evaluated at the reference frequency.
    pub fn phi(&self) -> f64 {
        self.omega_ref * self.spacing / self.phase_velocity
    }

    /// Inter-qubit phase at an arbitrary frequency.
    pub fn phi_at(&self, omega: f64) -> f64 {
        omega * self.spacing / self.phase_velocity
    }

    /// Shared waveguide coupling used for the photon-mediated interaction:
    /// the mean radiative rate of the array.
    pub fn coupling_rate(&self) -> f64 {
        self.qubits.iter().map(|q| q.gamma_rad).sum::<f64>() / self.qubits.len() as f64
    }
}

/// Dense square complex matrix, indexed `(row, column)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<Complex64>);

impl ComplexMatrix {
    pub fn from_fn(n: usize, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        Self(DMatrix::from_fn(n, n, f))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, r: usize, s: usize) -> Complex64 {
        self.0[(r, s)]
    }

    pub fn inner(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn mul(&self, other: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &other.0)
    }

    /// Largest entry-wise deviation from `other`.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }
}

impl From<DMatrix<Complex64>> for ComplexMatrix {
    fn from(m: DMatrix<Complex64>) -> Self {
        assert!(m.is_square(), "ComplexMatrix must be square");
        Self(m)
    }
}

/// Options for assembling the effective Hamiltonian.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HamiltonianOptions {
    /// Add `+i Gamma_nr` of each qubit on the diagonal.
    pub include_nonradiative: bool,
}

/// `H[r][s] = omega_s delta_rs + i (gamma/2) exp(-i phi |r-s|)` for the given
/// transition frequencies (plus optional diagonal loss rates).
pub fn effective_hamiltonian(omegas: &[f64], gamma_rad: f64, phi: f64, extra_loss: Option<&[f64]>) -> ComplexMatrix {
    let n = omegas.len();
    ComplexMatrix::from_fn(n, |r, s| {
        let dist = r.abs_diff(s) as f64;
        let mut h = I * (gamma_rad / 2.0) * Complex64::from_polar(1.0, -phi * dist);
        if r == s {
            h += omegas[r];
            if let Some(loss) = extra_loss {
                h += I * loss[r];
            }
        }
        h
    })
}

pub fn build_effective_hamiltonian(cfg: &ArrayConfig, opts: HamiltonianOptions) -> Result<ComplexMatrix> {
    cfg.validate()?;
    let omegas: Vec<f64> = cfg.qubits.iter().map(|q| q.omega10).collect();
    let loss: Vec<f64> = cfg.qubits.iter().map(|q| q.gamma_nr).collect();
    let extra = opts.include_nonradiative.then_some(loss.as_slice());
    Ok(effective_hamiltonian(&omegas, cfg.coupling_rate(), cfg.phi(), extra))
}

/// Interaction part only (`omega_s = 0`), the matrix whose inverse is tridiagonal.
pub fn interaction_matrix(n: usize, phi: f64, gamma_rad: f64) -> ComplexMatrix {
    effective_hamiltonian(&vec![0.0; n], gamma_rad, phi, None)
}

/// One collective eigenmode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenMode {
    pub omega_xi: Complex64,
    /// Decay rate `2 Im(omega_xi)`.
    pub gamma_xi: f64,
    /// Unit-norm mode amplitudes.
    pub vector: Vec<Complex64>,
    /// Position in the brightness ordering. Rank 0 is the brightest
    /// (superradiant) mode; ranks 1.. are the subradiant modes from
    /// brightest to darkest.
    pub rank: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    pub max_dim: usize,
    pub max_iterations: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            max_dim: 64,
            max_iterations: 100_000,
        }
    }
}

/// Full eigendecomposition, sorted by descending `Im(omega_xi)`.
///
/// Ties in the imaginary part (within 1e-10 of the spectral scale) are broken
/// by ascending real part, then by Schur order.
pub fn eigenmodes(h: &ComplexMatrix, opts: EigenOptions) -> Result<Vec<EigenMode>> {
    let n = h.n();
    if n == 0 {
        return Err(Error::invalid("h", "empty matrix"));
    }
    if n > opts.max_dim {
        return Err(Error::DimensionCap { n, cap: opts.max_dim });
    }
    if h.0.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("hamiltonian entry"));
    }

    let schur = Schur::try_new(h.0.clone(), f64::EPSILON, opts.max_iterations).ok_or_else(|| {
        let svd = h.0.clone().svd(false, false);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        Error::EigenNonConvergence {
            n,
            norm: h.0.norm(),
            condition: smax / smin,
        }
    })?;
    let (q, t) = schur.unpack();
    let scale = h.0.norm().max(f64::MIN_POSITIVE);

    let mut modes: Vec<(Complex64, Vec<Complex64>)> = (0..n)
        .map(|k| {
            let lambda = t[(k, k)];
            let y = triangular_eigenvector(&t, k, scale);
            let mut v: Vec<Complex64> = (0..n).map(|i| (0..=k).map(|j| q[(i, j)] * y[j]).sum()).collect();
            normalize_phase(&mut v);
            (lambda, v)
        })
        .collect();

    let quantum = 1e-10 * scale;
    let key = |z: &Complex64| (z.im / quantum).round() as i64;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let (la, lb) = (&modes[a].0, &modes[b].0);
        key(lb)
            .cmp(&key(la))
            .then(la.re.total_cmp(&lb.re))
            .then(a.cmp(&b))
    });

    let mut sorted = Vec::with_capacity(n);
    for (rank, idx) in order.into_iter().enumerate() {
        let (lambda, vector) = std::mem::take(&mut modes[idx]);
        sorted.push(EigenMode {
            omega_xi: lambda,
            gamma_xi: 2.0 * lambda.im,
            vector,
            rank,
        });
    }
    Ok(sorted)
}

/// Eigenvector of the upper-triangular `t` for the eigenvalue `t[k][k]`, by
/// back substitution with a perturbed pivot for (near-)degenerate eigenvalues.
fn triangular_eigenvector(t: &DMatrix<Complex64>, k: usize, scale: f64) -> Vec<Complex64> {
    let lambda = t[(k, k)];
    let smin = (f64::EPSILON * scale).max(f64::MIN_POSITIVE);
    let mut y = vec![Complex64::new(0.0, 0.0); k + 1];
    y[k] = Complex64::new(1.0, 0.0);
    for i in (0..k).rev() {
        let rhs: Complex64 = ((i + 1)..=k).map(|j| t[(i, j)] * y[j]).sum();
        let mut pivot = t[(i, i)] - lambda;
        if pivot.norm() < smin {
            pivot = Complex64::new(smin, 0.0);
        }
        y[i] = -rhs / pivot;
    }
    y
}

/// Unit 2-norm with the largest component real and positive.
fn normalize_phase(v: &mut [Complex64]) {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let pivot = v
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap_or(Complex64::new(1.0, 0.0));
    let phase = if pivot.norm() > 0.0 { pivot.conj() / pivot.norm() } else { Complex64::new(1.0, 0.0) };
    for z in v.iter_mut() {
        *z = *z * phase / norm;
    }
}

/// Exact inverse of the interaction matrix, which is tridiagonal:
/// bulk diagonal `-cot phi`, edge diagonal `-cot(phi)/2 - i/2`,
/// off-diagonals `1 / (2 sin phi)`, all scaled by `2 / Gamma_10`.
pub fn inverse_hamiltonian_tridiagonal(n: usize, phi: f64, gamma_rad: f64) -> Result<ComplexMatrix> {
    ensure_finite("phi", phi)?;
    ensure_finite("gamma_rad", gamma_rad)?;
    if n < 2 {
        return Err(Error::invalid("n", "tridiagonal inverse needs n >= 2"));
    }
    if gamma_rad <= 0.0 {
        return Err(Error::invalid("gamma_rad", "must be positive"));
    }
    if !(phi > 0.0 && phi < PI) || phi.sin().abs() < 1e-300 {
        return Err(Error::Singular("inverse Hamiltonian: sin(phi) = 0"));
    }
    let pref = 2.0 / gamma_rad;
    let cot = phi.cos() / phi.sin();
    let off = Complex64::new(pref / (2.0 * phi.sin()), 0.0);
    let bulk = Complex64::new(-pref * cot, 0.0);
    let edge = pref * Complex64::new(-0.5 * cot, -0.5);
    Ok(ComplexMatrix::from_fn(n, |r, s| match r.abs_diff(s) {
        0 if r == 0 || r == n - 1 => edge,
        0 => bulk,
        1 => off,
        _ => Complex64::new(0.0, 0.0),
    }))
}

fn check_mode_index(n: usize, xi: usize, phi: f64, gamma_rad: f64) -> Result<()> {
    ensure_finite("phi", phi)?;
    ensure_finite("gamma_rad", gamma_rad)?;
    if xi == 0 || xi >= n {
        return Err(Error::invalid("xi", format!("mode index {xi} outside 1..={}", n.saturating_sub(1))));
    }
    if phi <= 0.0 {
        return Err(Error::invalid("phi", "must be positive"));
    }
    if phi >= 0.3 {
        log::warn!("phi = {phi} is outside the small-phase regime of the subradiant estimate");
    }
    Ok(())
}

/// Leading-order radiative rate of subradiant mode `xi` of a dense array,
/// `Gamma_10 * 8 N^3 phi^2 / (pi^4 xi^4)`. Valid for `phi << 1` and `xi << N`.
pub fn perturbative_subradiant_rate(n: usize, xi: usize, phi: f64, gamma_rad: f64) -> Result<f64> {
    check_mode_index(n, xi, phi, gamma_rad)?;
    let (n, xi) = (n as f64, xi as f64);
    Ok(gamma_rad * 8.0 * n.powi(3) * phi * phi / (PI.powi(4) * xi.powi(4)))
}

/// Lower-polariton eigenfrequency (relative to the bare qubit frequency)
/// from the tight-binding form of the inverse Hamiltonian:
/// `(Gamma_10/2) / omega = -(2/phi) sin^2(k/2) - (2i/N) cos^2(k/2)`, `k = xi pi / N`.
pub fn dispersion_estimate(n: usize, xi: usize, phi: f64, gamma_rad: f64) -> Result<Complex64> {
    check_mode_index(n, xi, phi, gamma_rad)?;
    let k = xi as f64 * PI / n as f64;
    let half = k / 2.0;
    let rhs = Complex64::new(-(2.0 / phi) * half.sin().powi(2), -(2.0 / n as f64) * half.cos().powi(2));
    Ok((gamma_rad / 2.0) / rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn modes_of(n: usize, phi: f64) -> Vec<EigenMode> {
        eigenmodes(&interaction_matrix(n, phi, 1.0), EigenOptions::default()).unwrap()
    }

    #[test]
    fn single_emitter() {
        let h = effective_hamiltonian(&[3.0], 2.0, 0.1, None);
        assert_eq!(h.get(0, 0), Complex64::new(3.0, 1.0));
        let modes = eigenmodes(&h, EigenOptions::default()).unwrap();
        assert_eq!(modes.len(), 1);
        assert_relative_eq!(modes[0].gamma_xi, 2.0, epsilon = 1e-14);
        assert_relative_eq!(modes[0].vector[0].re, 1.0, epsilon = 1e-14);
        assert_eq!(modes[0].rank, 0);
    }

    #[test]
    fn dimer_matches_analytic_pair() {
        let phi: f64 = 0.15;
        let modes = modes_of(2, phi);
        let e = Complex64::from_polar(1.0, -phi);
        let plus = I * 0.5 * (1.0 + e);
        let minus = I * 0.5 * (1.0 - e);
        assert!((modes[0].omega_xi - plus).norm() < 1e-10 * plus.norm());
        assert!((modes[1].omega_xi - minus).norm() < 1e-10 * minus.norm());
        assert_relative_eq!(modes[0].gamma_xi, 1.0 + phi.cos(), max_relative = 1e-10);
        assert!((modes[0].gamma_xi - 1.9888).abs() < 1e-4);
    }

    #[test]
    fn zero_phase_gives_one_superradiant_mode() {
        let n = 6;
        let h = effective_hamiltonian(&vec![2.0; n], 1.0, 0.0, None);
        let modes = eigenmodes(&h, EigenOptions::default()).unwrap();
        assert!((modes[0].omega_xi - Complex64::new(2.0, n as f64 / 2.0)).norm() < 1e-10);
        for m in &modes[1..] {
            assert!((m.omega_xi - Complex64::new(2.0, 0.0)).norm() < 1e-8, "{:?}", m.omega_xi);
        }
        // Deterministic tie-break: ascending real part among degenerate modes.
        for w in modes[1..].windows(2) {
            let same_im = ((w[0].omega_xi.im - w[1].omega_xi.im) / 1e-9).abs() < 1.0;
            if same_im {
                assert!(w[0].omega_xi.re <= w[1].omega_xi.re + 1e-9);
            }
        }
    }

    #[test]
    fn eight_qubit_brightest_subradiant_near_perturbative() {
        let phi = 0.165;
        let modes = modes_of(8, phi);
        let pert = perturbative_subradiant_rate(8, 1, phi, 1.0).unwrap();
        assert!((pert - 1.145).abs() < 1e-3);
        let exact = modes[1].gamma_xi;
        assert!(((exact - pert) / pert).abs() < 0.25, "{exact} vs {pert}");
    }

    #[test]
    fn reference_geometry_phase() {
        let omega = crate::units::ghz(7.898);
        let q = QubitParams::new(omega, crate::units::mhz(6.4), 0.0).unwrap();
        let cfg = ArrayConfig::new(vec![q; 8], 400e-6, 1.2e8, omega).unwrap();
        assert!((cfg.phi() - 0.1654).abs() < 1e-3);
    }

    #[test]
    fn nonradiative_flag_adds_positive_imaginary_diagonal() {
        let q = QubitParams::new(10.0, 1.0, 0.25).unwrap();
        let cfg = ArrayConfig::uniform(3, q, 0.1).unwrap();
        let base = build_effective_hamiltonian(&cfg, HamiltonianOptions::default()).unwrap();
        let lossy = build_effective_hamiltonian(&cfg, HamiltonianOptions { include_nonradiative: true }).unwrap();
        for r in 0..3 {
            assert_relative_eq!((lossy.get(r, r) - base.get(r, r)).im, 0.25, epsilon = 1e-14);
        }
    }

    #[test]
    fn empty_array_rejected() {
        let cfg = ArrayConfig {
            qubits: vec![],
            spacing: 1.0,
            phase_velocity: 1.0,
            omega_ref: 0.1,
        };
        assert!(build_effective_hamiltonian(&cfg, HamiltonianOptions::default()).is_err());
    }

    #[test]
    fn dimension_cap() {
        let h = interaction_matrix(5, 0.1, 1.0);
        let opts = EigenOptions { max_dim: 4, ..Default::default() };
        assert!(matches!(eigenmodes(&h, opts), Err(Error::DimensionCap { n: 5, cap: 4 })));
    }

    #[test]
    fn tridiagonal_inverse_of_four_site_chain() {
        let (n, phi, gamma) = (4, 0.15, 2.5);
        let h = interaction_matrix(n, phi, gamma);
        let inv = inverse_hamiltonian_tridiagonal(n, phi, gamma).unwrap();
        assert!(h.mul(&inv).max_abs_diff(&ComplexMatrix::identity(n)) < 1e-10);
        let off = (2.0 / gamma) / (2.0 * phi.sin());
        for r in 0..n - 1 {
            assert_relative_eq!(inv.get(r, r + 1).re, off, epsilon = 1e-14);
            assert_relative_eq!(inv.get(r + 1, r).re, off, epsilon = 1e-14);
        }
    }

    #[test]
    fn tridiagonal_inverse_at_quarter_wave() {
        let inv = inverse_hamiltonian_tridiagonal(5, PI / 2.0, 1.0).unwrap();
        assert!(inv.get(2, 2).norm() < 1e-15);
        assert_relative_eq!(inv.get(1, 2).re, 1.0, epsilon = 1e-15);
        assert!(inverse_hamiltonian_tridiagonal(5, 0.0, 1.0).is_err());
        assert!(inverse_hamiltonian_tridiagonal(5, PI, 1.0).is_err());
        assert!(inverse_hamiltonian_tridiagonal(1, 0.1, 1.0).is_err());
    }

    #[test]
    fn perturbative_rate_examples() {
        let r1 = perturbative_subradiant_rate(8, 1, 0.165, 1.0).unwrap();
        let r2 = perturbative_subradiant_rate(8, 2, 0.165, 1.0).unwrap();
        assert_relative_eq!(r2 / r1, 1.0 / 16.0, epsilon = 1e-15);
        let r = perturbative_subradiant_rate(4, 1, 0.1, 1.0).unwrap();
        assert!((r - 0.0526).abs() < 5e-5, "{r}");
        assert!(perturbative_subradiant_rate(8, 0, 0.1, 1.0).is_err());
        assert!(perturbative_subradiant_rate(8, 8, 0.1, 1.0).is_err());
    }

    #[test]
    fn dispersion_estimate_converges_to_perturbative_law() {
        let (n, phi) = (100, 1e-3);
        let est = dispersion_estimate(n, 1, phi, 1.0).unwrap();
        let pert = perturbative_subradiant_rate(n, 1, phi, 1.0).unwrap();
        assert!((2.0 * est.im / pert - 1.0).abs() < 0.05);
        assert!(est.re < 0.0);
    }

    #[test]
    fn darkest_mode_estimate_is_nearly_lossless() {
        let n = 200;
        let dark = dispersion_estimate(n, n - 1, 0.05, 1.0).unwrap();
        let bright = dispersion_estimate(n, 1, 0.05, 1.0).unwrap();
        assert!(dark.im < 1e-6 * bright.im);
        assert!(dispersion_estimate(n, 0, 0.05, 1.0).is_err());
    }

    #[test]
    fn dispersion_estimate_against_eigensolver() {
        let est = dispersion_estimate(8, 1, 0.165, 1.0).unwrap();
        let exact = modes_of(8, 0.165)[1].gamma_xi;
        let dev = (2.0 * est.im - exact).abs() / exact;
        assert!(dev < 0.30, "deviation {dev}");
    }

    #[test]
    fn brightest_subradiant_power_law() {
        let (ns, rates): (Vec<f64>, Vec<f64>) =
            (3..=8).map(|n| (n as f64, modes_of(n, 0.165)[1].gamma_xi)).unzip();
        let b = crate::fitting::fit_power_law(&ns, &rates).unwrap().value("b").unwrap();
        assert!((2.7..=3.2).contains(&b), "b = {b}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn trace_sum_rule(n in 1usize..12, phi in 0.01f64..3.0) {
            let modes = modes_of(n, phi);
            let total: f64 = modes.iter().map(|m| m.omega_xi.im).sum();
            prop_assert!((total - n as f64 / 2.0).abs() < 1e-10 * n as f64);
        }

        #[test]
        fn radiative_modes_are_passive(n in 1usize..12, phi in 0.01f64..3.0) {
            for m in modes_of(n, phi) {
                prop_assert!(m.omega_xi.im > 0.0);
            }
        }

        #[test]
        fn eigenpairs_and_ordering(n in 2usize..12, phi in 0.02f64..1.5) {
            let h = interaction_matrix(n, phi, 1.0);
            let modes = eigenmodes(&h, EigenOptions::default()).unwrap();
            for w in modes.windows(2) {
                prop_assert!(w[0].omega_xi.im >= w[1].omega_xi.im - 1e-9);
            }
            for m in &modes {
                let v = nalgebra::DVector::from_column_slice(&m.vector);
                let residual = (h.inner() * &v - v.clone() * m.omega_xi).norm();
                prop_assert!(residual < 1e-9, "residual {}", residual);
                prop_assert!((v.norm() - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn complex_symmetric_orthogonality(n in 2usize..10, phi in 0.05f64..1.0) {
            let modes = modes_of(n, phi);
            for a in 0..n {
                for b in (a + 1)..n {
                    let dot: Complex64 = modes[a].vector.iter().zip(&modes[b].vector).map(|(x, y)| x * y).sum();
                    prop_assert!(dot.norm() < 1e-8, "modes {} {}: {}", a, b, dot.norm());
                }
            }
        }
    }

    #[test]
    fn inverse_oracle_grid() {
        for n in 2..=10 {
            for &phi in &[0.05, 0.15, 0.3] {
                let h = interaction_matrix(n, phi, 1.0);
                let inv = inverse_hamiltonian_tridiagonal(n, phi, 1.0).unwrap();
                let err = h.mul(&inv).max_abs_diff(&ComplexMatrix::identity(n));
                assert!(err < 1e-10, "n={n} phi={phi} err={err}");
            }
        }
    }
}
