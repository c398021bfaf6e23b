//! Flux-crosstalk calibration and normalisation of measured spectra.
//!
//! Fluxes follow `Phi = M I`. Each bias-coil pair (x, y) is characterised by
//! two traces in the (I_x, I_y) plane: the line of constant `Phi_x`, with
//! slope `dI_y/dI_x = -M_xx / M_xy`, and the line of constant `Phi_y`, with
//! slope `dI_x/dI_y = -M_yy / M_yx`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::spectrum::Spectrum;

/// Row-normalised mutual inductance matrix (unit diagonal).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutualMatrix {
    n: usize,
    /// Row-major entries `M[x][y] / M[x][x]`.
    entries: Vec<f64>,
}

impl MutualMatrix {
    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |x, y| if x == y { 1.0 } else { 0.0 })
    }

    fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut entries = Vec::with_capacity(n * n);
        for x in 0..n {
            for y in 0..n {
                entries.push(f(x, y));
            }
        }
        Self { n, entries }
    }

    /// Normalises each row of a raw matrix by its diagonal element.
    pub fn from_raw(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("rows", "mutual matrix must be square and non-empty"));
        }
        for (x, row) in rows.iter().enumerate() {
            for &v in row {
                ensure_finite("mutual inductance", v)?;
            }
            if row[x] == 0.0 {
                return Err(Error::invalid("rows", format!("zero diagonal on row {x}")));
            }
        }
        Ok(Self::from_fn(n, |x, y| rows[x][y] / rows[x][x]))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.entries[x * self.n + y]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.entries)
    }

    /// Normalised fluxes `Phi_x / M_xx` for the given coil currents.
    pub fn fluxes(&self, currents: &[f64]) -> Result<Vec<f64>> {
        if currents.len() != self.n {
            return Err(Error::invalid("currents", "length differs from the matrix size"));
        }
        let phi = self.to_dmatrix() * DVector::from_column_slice(currents);
        Ok(phi.iter().copied().collect())
    }

    /// Every entry multiplied by `1 + eps[x][y]` on the off-diagonal.
    pub fn perturbed(&self, mut eps: impl FnMut(usize, usize) -> f64) -> Self {
        Self::from_fn(self.n, |x, y| {
            let v = self.get(x, y);
            if x == y { v } else { v * (1.0 + eps(x, y)) }
        })
    }

    pub fn max_abs_diff(&self, other: &MutualMatrix) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Slopes of the two constant-flux traces of a coil pair (0-based indices).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeMeasurement {
    pub x: usize,
    pub y: usize,
    /// `dI_y/dI_x` along the constant-`Phi_x` trace.
    pub slope_xy: f64,
    /// `dI_x/dI_y` along the constant-`Phi_y` trace.
    pub slope_yx: f64,
}

fn ratio_from_slope(slope: f64) -> Result<f64> {
    if slope.is_nan() {
        return Err(Error::NonFinite("slope"));
    }
    if slope == 0.0 {
        return Err(Error::invalid("slope", "zero slope means infinite crosstalk"));
    }
    // An infinite slope (vertical trace) is a decoupled pair: -1/inf = -0.
    Ok(-1.0 / slope + 0.0)
}

/// `(M_xy / M_xx, M_yx / M_yy)` from the two trace slopes.
pub fn ratios_from_slopes(m: &SlopeMeasurement) -> Result<(f64, f64)> {
    Ok((ratio_from_slope(m.slope_xy)?, ratio_from_slope(m.slope_yx)?))
}

/// Exact trace slopes that a pair (x, y) of `m` would produce.
pub fn synthetic_slopes(m: &MutualMatrix, x: usize, y: usize) -> SlopeMeasurement {
    SlopeMeasurement {
        x,
        y,
        slope_xy: -1.0 / m.get(x, y),
        slope_yx: -1.0 / m.get(y, x),
    }
}

/// All `n (n - 1) / 2` pair measurements of `m`, in lexicographic order.
pub fn synthetic_measurements(m: &MutualMatrix) -> Vec<SlopeMeasurement> {
    let mut out = Vec::with_capacity(m.n * (m.n - 1) / 2);
    for x in 0..m.n {
        for y in x + 1..m.n {
            out.push(synthetic_slopes(m, x, y));
        }
    }
    out
}

/// Builds the row-normalised matrix from one measurement per coil pair.
pub fn assemble_mutual_matrix(measurements: &[SlopeMeasurement], n: usize) -> Result<MutualMatrix> {
    if n == 0 {
        return Err(Error::invalid("n", "need at least one coil"));
    }
    let mut pairs: BTreeMap<(usize, usize), (f64, f64)> = BTreeMap::new();
    for m in measurements {
        if m.x == m.y {
            return Err(Error::invalid("measurement", format!("coil {} paired with itself", m.x)));
        }
        if m.x >= n || m.y >= n {
            return Err(Error::invalid("measurement", format!("coil pair ({}, {}) outside 0..{n}", m.x, m.y)));
        }
        let (a, b) = ratios_from_slopes(m)?;
        let (key, val) = if m.x < m.y { ((m.x, m.y), (a, b)) } else { ((m.y, m.x), (b, a)) };
        if pairs.insert(key, val).is_some() {
            return Err(Error::invalid("measurement", format!("duplicate coil pair {key:?}")));
        }
    }
    let missing: Vec<(usize, usize)> = (0..n)
        .flat_map(|x| (x + 1..n).map(move |y| (x, y)))
        .filter(|p| !pairs.contains_key(p))
        .collect();
    if !missing.is_empty() {
        return Err(Error::IncompleteCalibration { missing });
    }
    Ok(MutualMatrix::from_fn(n, |x, y| match x.cmp(&y) {
        std::cmp::Ordering::Equal => 1.0,
        std::cmp::Ordering::Less => pairs[&(x, y)].0,
        std::cmp::Ordering::Greater => pairs[&(y, x)].1,
    }))
}

/// Currents for every coil other than `tuned` that cancel the flux in all
/// untuned SQUIDs while `i_tuned` flows in the tuned coil. The result lists
/// the untuned coils in ascending order.
pub fn compensation_currents(m: &MutualMatrix, tuned: usize, i_tuned: f64) -> Result<Vec<f64>> {
    ensure_finite("i_tuned", i_tuned)?;
    let n = m.n;
    if tuned >= n {
        return Err(Error::invalid("tuned", format!("coil {tuned} outside 0..{n}")));
    }
    let others: Vec<usize> = (0..n).filter(|&k| k != tuned).collect();
    if others.is_empty() {
        return Ok(Vec::new());
    }
    let sub = DMatrix::from_fn(others.len(), others.len(), |a, b| m.get(others[a], others[b]));
    let rhs = DVector::from_fn(others.len(), |a, _| -m.get(others[a], tuned) * i_tuned);
    let sol = sub
        .lu()
        .solve(&rhs)
        .filter(|v| v.iter().all(|x| x.is_finite()))
        .ok_or(Error::Singular("untuned sub-matrix of the mutual matrix"))?;
    Ok(sol.iter().copied().collect())
}

/// Full current vector: `i_tuned` in the tuned coil plus compensation.
pub fn compensated_currents(m: &MutualMatrix, tuned: usize, i_tuned: f64) -> Result<Vec<f64>> {
    let comp = compensation_currents(m, tuned, i_tuned)?;
    let mut out = Vec::with_capacity(m.n);
    let mut it = comp.into_iter();
    for k in 0..m.n {
        out.push(if k == tuned { i_tuned } else { it.next().unwrap_or(0.0) });
    }
    Ok(out)
}

/// Untuned flux left over relative to the tuned flux.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualCrosstalk {
    pub max: f64,
    pub rms: f64,
}

/// Applies compensation computed from `calibrated` to a device whose true
/// matrix is `actual`, and reports the residual untuned flux.
pub fn residual_crosstalk(
    actual: &MutualMatrix,
    calibrated: &MutualMatrix,
    tuned: usize,
    i_tuned: f64,
) -> Result<ResidualCrosstalk> {
    if actual.n != calibrated.n {
        return Err(Error::invalid("calibrated", "matrix sizes differ"));
    }
    let currents = compensated_currents(calibrated, tuned, i_tuned)?;
    let phi = actual.fluxes(&currents)?;
    let reference = phi[tuned].abs();
    if reference == 0.0 {
        return Err(Error::Singular("tuned flux is zero"));
    }
    let rel: Vec<f64> = phi
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != tuned)
        .map(|(_, v)| v.abs() / reference)
        .collect();
    let max = rel.iter().copied().fold(0.0, f64::max);
    let rms = if rel.is_empty() { 0.0 } else { (rel.iter().map(|v| v * v).sum::<f64>() / rel.len() as f64).sqrt() };
    Ok(ResidualCrosstalk { max, rms })
}

/// Least-squares slope `dI_y/dI_x` of user-selected trace points `(I_x, I_y)`.
/// A trace with constant `I_x` returns an infinite slope.
pub fn fit_trace_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::invalid("points", "need at least two trace points"));
    }
    for &(a, b) in points {
        ensure_finite("trace point", a)?;
        ensure_finite("trace point", b)?;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Ok(if sxy >= 0.0 { f64::INFINITY } else { f64::NEG_INFINITY });
    }
    Ok(sxy / sxx)
}

#[derive(Debug, Deserialize)]
struct SlopeRow {
    x: usize,
    y: usize,
    slope_xy: f64,
    slope_yx: f64,
}

/// Parses slope records from CSV with header `x,y,slope_xy,slope_yx`.
/// Coil indices in the file are 1-based; `inf` marks a vertical trace.
pub fn parse_slope_csv(text: &str) -> Result<Vec<SlopeMeasurement>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (line, row) in rdr.deserialize::<SlopeRow>().enumerate() {
        let row = row.map_err(|e| Error::Parse(format!("slope record {}: {e}", line + 1)))?;
        if row.x == 0 || row.y == 0 {
            return Err(Error::Parse(format!("slope record {}: coil indices are 1-based", line + 1)));
        }
        if row.slope_xy.is_nan() || row.slope_yx.is_nan() {
            return Err(Error::Parse(format!("slope record {}: NaN slope", line + 1)));
        }
        out.push(SlopeMeasurement {
            x: row.x - 1,
            y: row.y - 1,
            slope_xy: row.slope_xy,
            slope_yx: row.slope_yx,
        });
    }
    Ok(out)
}

/// How a raw spectrum is calibrated.
#[derive(Debug, Clone, Copy)]
pub enum Normalization<'a> {
    /// Divide pointwise by `gain * reference` (the saturated transmission).
    Transmission { reference: &'a Spectrum, gain: f64 },
    /// Divide by the raw value at the resonance frequency.
    Reflection { resonance: f64 },
}

pub fn normalize_spectrum(raw: &Spectrum, how: Normalization<'_>) -> Result<Spectrum> {
    raw.validate()?;
    let values: Vec<Complex64> = match how {
        Normalization::Transmission { reference, gain } => {
            ensure_finite("gain", gain)?;
            if gain <= 0.0 {
                return Err(Error::invalid("gain", "must be positive"));
            }
            if reference.frequencies != raw.frequencies {
                return Err(Error::invalid("reference", "frequency grid differs from the raw spectrum"));
            }
            raw.values
                .iter()
                .zip(&reference.values)
                .zip(&raw.frequencies)
                .map(|((v, r), &w)| {
                    if r.norm() == 0.0 {
                        Err(Error::SingularAt {
                            what: "normalization reference",
                            omega: w,
                        })
                    } else {
                        Ok(v / (gain * r))
                    }
                })
                .collect::<Result<_>>()?
        }
        Normalization::Reflection { resonance } => {
            let at = raw
                .interpolate(resonance)
                .ok_or_else(|| Error::invalid("resonance", "outside the spectrum grid"))?;
            if at.norm() == 0.0 {
                return Err(Error::SingularAt {
                    what: "raw reflection at resonance",
                    omega: resonance,
                });
            }
            raw.values.iter().map(|v| v / at).collect()
        }
    };
    Ok(Spectrum {
        frequencies: raw.frequencies.clone(),
        values,
        kind: raw.kind,
        metadata: raw.metadata.clone(),
    })
}

/// Row-normalised synthetic matrix with nearest-neighbour crosstalk `near`
/// and `far` for all other pairs.
pub fn banded_matrix(n: usize, near: f64, far: f64) -> MutualMatrix {
    MutualMatrix::from_fn(n, |x, y| match x.abs_diff(y) {
        0 => 1.0,
        1 => near,
        _ => far,
    })
}
