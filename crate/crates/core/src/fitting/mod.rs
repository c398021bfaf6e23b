//! Parameter estimation: complex two-level resonance fits, Lorentzian
//! linewidths, power laws and saturation points.

mod lm;

pub use lm::{levenberg_marquardt, LmOptions, LmOutcome};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::{SParamKind, Spectrum};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitParam {
    pub name: String,
    pub value: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: Vec<FitParam>,
    /// Euclidean norm of the residual vector.
    pub residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
    #[serde(default)]
    pub diagnostics: Vec<String>,
}

impl FitResult {
    pub fn value(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|p| p.name == name).map(|p| p.value)
    }

    pub fn sigma(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|p| p.name == name).map(|p| p.sigma)
    }

    pub fn to_json(&self) -> String {
        // Infinite sigmas have no JSON representation and serialize as null.
        serde_json::to_string_pretty(self).unwrap_or_default()
    }

    fn failed(names: &[&str], diagnostic: impl Into<String>) -> Self {
        Self {
            params: names
                .iter()
                .map(|n| FitParam {
                    name: (*n).to_string(),
                    value: f64::NAN,
                    sigma: f64::INFINITY,
                })
                .collect(),
            residual_norm: f64::NAN,
            converged: false,
            iterations: 0,
            diagnostics: vec![diagnostic.into()],
        }
    }
}

fn named(names: &[&str], values: &[f64], sigmas: &[f64]) -> Vec<FitParam> {
    names
        .iter()
        .zip(values)
        .zip(sigmas)
        .map(|((n, v), s)| FitParam {
            name: (*n).to_string(),
            value: *v,
            sigma: *s,
        })
        .collect()
}

/// Reflection of a weakly driven two-level emitter, `-(G/2) / (g + i D)`.
fn two_level_r(omega: f64, omega_r: f64, gamma_rad: f64, gamma10: f64) -> Complex64 {
    -(gamma_rad / 2.0) / Complex64::new(gamma10, omega - omega_r)
}

const RESONANCE_NAMES: [&str; 3] = ["omega_r", "gamma_rad", "gamma10"];

/// Fits the weak-drive two-level response to a complex transmission (`S21`,
/// `t = 1 + r`) or reflection (`S11`/`S22`, `r`) spectrum, using real and
/// imaginary residuals jointly.
pub fn fit_two_level_resonance(spec: &Spectrum) -> Result<FitResult> {
    spec.validate()?;
    if spec.len() < 6 {
        return Err(Error::invalid("spectrum", "need at least six samples"));
    }
    let is_transmission = spec.kind == SParamKind::S21;
    // Scattered part r in every case.
    let r_data: Vec<Complex64> = spec
        .values
        .iter()
        .map(|&v| if is_transmission { v - 1.0 } else { v })
        .collect();
    let mag: Vec<f64> = r_data.iter().map(|z| z.norm()).collect();
    let (imax, &peak) = mag
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty spectrum");
    let floor = mag.iter().copied().fold(f64::INFINITY, f64::min);
    let contrast = if is_transmission {
        let p = spec.abs2();
        let hi = p.iter().copied().fold(f64::MIN, f64::max);
        let lo = p.iter().copied().fold(f64::MAX, f64::min);
        (hi - lo) / hi.max(f64::MIN_POSITIVE)
    } else {
        (peak - floor) / peak.max(f64::MIN_POSITIVE)
    };
    if contrast < 1e-3 {
        return Ok(FitResult::failed(&RESONANCE_NAMES, "no resonance feature in the spectrum"));
    }

    // |r| falls to 1/sqrt 2 of its peak at one half width gamma_10 away.
    let half = peak / std::f64::consts::SQRT_2;
    let f = &spec.frequencies;
    let mut lo = imax;
    while lo > 0 && mag[lo] > half {
        lo -= 1;
    }
    let mut hi = imax;
    while hi + 1 < mag.len() && mag[hi] > half {
        hi += 1;
    }
    let span = f[f.len() - 1] - f[0];
    let g0 = ((f[hi] - f[lo]) / 2.0).max(span / spec.len() as f64);
    let center = f[imax];

    // Work in units of the initial half width around the initial center.
    let w: Vec<f64> = f.iter().map(|v| (v - center) / g0).collect();
    let residual = |p: &[f64]| {
        let mut out = Vec::with_capacity(2 * w.len());
        for (x, d) in w.iter().zip(&r_data) {
            let m = two_level_r(*x, p[0], p[1], p[2]);
            out.push(m.re - d.re);
            out.push(m.im - d.im);
        }
        out
    };
    let out = levenberg_marquardt(residual, &[0.0, 2.0 * peak, 1.0], &[1.0, 1.0, 1.0], LmOptions::default());
    let sig = out.sigmas();
    let values = [center + out.params[0] * g0, out.params[1] * g0, out.params[2] * g0];
    let sigmas = [sig[0] * g0, sig[1] * g0, sig[2] * g0];
    let mut diagnostics = vec![out.message.clone()];
    let mut converged = out.converged;
    if !values.iter().all(|v| v.is_finite()) || values[1] <= 0.0 || values[2] <= 0.0 {
        converged = false;
        diagnostics.push("non-physical parameters".into());
    } else if values[0] < f[0] || values[0] > f[f.len() - 1] {
        converged = false;
        diagnostics.push("resonance outside the frequency span".into());
    } else if values[2] < values[1] / 2.0 * (1.0 - 1e-9) {
        diagnostics.push("gamma10 below gamma_rad / 2: negative non-radiative rate".into());
    }
    if converged && !sigmas.iter().all(|s| s.is_finite()) {
        converged = false;
        diagnostics.push("singular normal matrix".into());
    }
    Ok(FitResult {
        params: named(&RESONANCE_NAMES, &values, &sigmas),
        residual_norm: out.ssr.sqrt(),
        converged,
        iterations: out.iterations,
        diagnostics,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Extremum {
    Max,
    Min,
}

/// Local extrema that stand out by more than `h` from their surroundings.
fn prominent_extrema(y: &[f64], h: f64) -> Vec<(usize, Extremum)> {
    let mut out = Vec::new();
    let (mut hi, mut ihi) = (y[0], 0);
    let (mut lo, mut ilo) = (y[0], 0);
    let mut dir = 0i8;
    for (i, &v) in y.iter().enumerate() {
        match dir {
            0 => {
                if v > hi {
                    hi = v;
                    ihi = i;
                }
                if v < lo {
                    lo = v;
                    ilo = i;
                }
                if v > lo + h && ilo > 0 {
                    out.push((ilo, Extremum::Min));
                }
                if v > lo + h {
                    dir = 1;
                    hi = v;
                    ihi = i;
                } else if v < hi - h {
                    if ihi > 0 {
                        out.push((ihi, Extremum::Max));
                    }
                    dir = -1;
                    lo = v;
                    ilo = i;
                }
            }
            1 => {
                if v > hi {
                    hi = v;
                    ihi = i;
                } else if v < hi - h {
                    out.push((ihi, Extremum::Max));
                    dir = -1;
                    lo = v;
                    ilo = i;
                }
            }
            _ => {
                if v < lo {
                    lo = v;
                    ilo = i;
                } else if v > lo + h {
                    out.push((ilo, Extremum::Min));
                    dir = 1;
                    hi = v;
                    ihi = i;
                }
            }
        }
    }
    out
}

const LORENTZ_NAMES: [&str; 4] = ["center", "gamma_xi", "amplitude", "baseline"];

fn lorentzian(omega: f64, p: &[f64]) -> f64 {
    let hw = p[1] / 2.0;
    p[2] * hw * hw / ((omega - p[0]).powi(2) + hw * hw) + p[3]
}

/// Fits `A (G/2)^2 / ((w - w0)^2 + (G/2)^2) + B` to `|S|^2` inside
/// `window = (lo, hi)` and returns the full width `gamma_xi`. Works for both
/// peaks (`A > 0`) and dips (`A < 0`).
pub fn fit_lorentzian_linewidth(spec: &Spectrum, window: (f64, f64)) -> Result<FitResult> {
    spec.validate()?;
    let sub = spec.window(window.0, window.1);
    if sub.len() < 5 {
        return Err(Error::AmbiguousWindow(format!("only {} samples in the window", sub.len())));
    }
    let y = sub.abs2();
    let x = &sub.frequencies;
    let ymax = y.iter().copied().fold(f64::MIN, f64::max);
    let ymin = y.iter().copied().fold(f64::MAX, f64::min);
    let range = ymax - ymin;
    if range <= 1e-12 * ymax.abs().max(1.0) {
        return Err(Error::AmbiguousWindow("flat data, no extremum".into()));
    }
    let extrema = prominent_extrema(&y, 0.1 * range);
    let interior: Vec<_> = extrema.iter().filter(|(i, _)| *i > 0 && *i + 1 < y.len()).collect();
    if interior.len() != 1 {
        return Err(Error::AmbiguousWindow(format!(
            "expected one local extremum in the window, found {}",
            interior.len()
        )));
    }
    let (iext, kind) = *interior[0];
    let baseline = 0.5 * (y[0] + y[y.len() - 1]);
    let amp = y[iext] - baseline;
    let half = baseline + amp / 2.0;
    let beyond = |v: f64| match kind {
        Extremum::Max => v > half,
        Extremum::Min => v < half,
    };
    let mut lo = iext;
    while lo > 0 && beyond(y[lo]) {
        lo -= 1;
    }
    let mut hi = iext;
    while hi + 1 < y.len() && beyond(y[hi]) {
        hi += 1;
    }
    let step = (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64;
    let width = (x[hi] - x[lo]).max(step);
    let center = x[iext];

    let u: Vec<f64> = x.iter().map(|v| (v - center) / width).collect();
    let yscale = range;
    let residual = |p: &[f64]| {
        u.iter()
            .zip(&y)
            .map(|(xi, yi)| (lorentzian(*xi, p) - yi) / yscale)
            .collect::<Vec<_>>()
    };
    let p0 = [0.0, 1.0, amp, baseline];
    let out = levenberg_marquardt(residual, &p0, &[1.0, 1.0, yscale, yscale], LmOptions::default());
    let s = out.sigmas();
    let values = [
        center + out.params[0] * width,
        out.params[1].abs() * width,
        out.params[2],
        out.params[3],
    ];
    let sigmas = [s[0] * width, s[1] * width, s[2] * yscale, s[3] * yscale];
    let mut converged = out.converged && values.iter().all(|v| v.is_finite());
    let mut diagnostics = vec![out.message.clone()];
    if values[0] < window.0 || values[0] > window.1 {
        converged = false;
        diagnostics.push("fitted center outside the window".into());
    }
    Ok(FitResult {
        params: named(&LORENTZ_NAMES, &values, &sigmas),
        residual_norm: out.ssr.sqrt() * yscale,
        converged,
        iterations: out.iterations,
        diagnostics,
    })
}

/// Ordinary least-squares line `y = a + b x` with standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub sigma_intercept: f64,
    pub sigma_slope: f64,
    pub residual_norm: f64,
    pub r_squared: f64,
}

pub fn linear_regression(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::invalid("xs/ys", "need at least two paired points"));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("regression data"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("xs", "all abscissae coincide"));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let (sigma_slope, sigma_intercept) = if xs.len() > 2 {
        let s2 = ssr / (n - 2.0);
        ((s2 / sxx).sqrt(), (s2 * (1.0 / n + mx * mx / sxx)).sqrt())
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    Ok(LinearFit {
        intercept,
        slope,
        sigma_intercept,
        sigma_slope,
        residual_norm: ssr.sqrt(),
        r_squared: if syy > 0.0 { 1.0 - ssr / syy } else { 1.0 },
    })
}

/// `rate = prefactor * N^b` by regression on log-log axes. With only two
/// points the exponent is exact but its uncertainty is infinite and the fit
/// is flagged as not converged.
pub fn fit_power_law(ns: &[f64], rates: &[f64]) -> Result<FitResult> {
    if ns.iter().chain(rates).any(|&v| v.is_nan() || v <= 0.0) {
        return Err(Error::invalid("rates", "power-law data must be positive"));
    }
    let lx: Vec<f64> = ns.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = rates.iter().map(|v| v.ln()).collect();
    let fit = linear_regression(&lx, &ly)?;
    let prefactor = fit.intercept.exp();
    let mut diagnostics = Vec::new();
    if ns.len() < 3 {
        diagnostics.push("two points determine the line exactly; uncertainty undefined".into());
    }
    Ok(FitResult {
        params: named(
            &["prefactor", "b"],
            &[prefactor, fit.slope],
            &[prefactor * fit.sigma_intercept, fit.sigma_slope],
        ),
        residual_norm: fit.residual_norm,
        converged: ns.len() >= 3,
        iterations: 1,
        diagnostics,
    })
}

/// Power at which the on-resonance transmission first rises through 0.5,
/// by linear interpolation between the bracketing samples.
pub fn saturation_p50(powers: &[f64], transmission: &[f64]) -> Result<f64> {
    if powers.len() != transmission.len() || powers.len() < 2 {
        return Err(Error::invalid("powers", "need at least two paired samples"));
    }
    if powers.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("powers", "power grid must be strictly increasing"));
    }
    for k in 0..powers.len() - 1 {
        let (a, b) = (transmission[k], transmission[k + 1]);
        if a == 0.5 {
            return Ok(powers[k]);
        }
        if a < 0.5 && b >= 0.5 {
            return Ok(powers[k] + (0.5 - a) / (b - a) * (powers[k + 1] - powers[k]));
        }
    }
    Err(Error::NoCrossing)
}

/// Standardised third moment of a lineshape, treating `weights - min` as a
/// distribution over `xs`. Zero for lineshapes symmetric about their mean.
pub fn lineshape_skewness(xs: &[f64], weights: &[f64]) -> Result<f64> {
    if xs.len() != weights.len() || xs.len() < 3 {
        return Err(Error::invalid("weights", "need at least three paired samples"));
    }
    let floor = weights.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = weights.iter().map(|v| v - floor).collect();
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(Error::invalid("weights", "flat lineshape"));
    }
    let mean = xs.iter().zip(&w).map(|(x, w)| x * w).sum::<f64>() / total;
    let m2 = xs.iter().zip(&w).map(|(x, w)| (x - mean).powi(2) * w).sum::<f64>() / total;
    let m3 = xs.iter().zip(&w).map(|(x, w)| (x - mean).powi(3) * w).sum::<f64>() / total;
    Ok(m3 / m2.powf(1.5))
}
