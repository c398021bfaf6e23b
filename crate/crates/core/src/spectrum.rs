//! Sampled complex S-parameter spectra.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SParamKind {
    S21,
    S22,
    S11,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Strictly increasing angular frequencies (rad/s).
    pub frequencies: Vec<f64>,
    pub values: Vec<Complex64>,
    pub kind: SParamKind,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

impl Spectrum {
    pub fn new(frequencies: Vec<f64>, values: Vec<Complex64>, kind: SParamKind) -> Result<Self> {
        let s = Self {
            frequencies,
            values,
            kind,
            metadata: BTreeMap::new(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.metadata.insert(key.into(), value.into());
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.frequencies.len() != self.values.len() {
            return Err(Error::invalid("values", "length differs from the frequency grid"));
        }
        if self.frequencies.is_empty() {
            return Err(Error::invalid("frequencies", "empty spectrum"));
        }
        if self.frequencies.iter().any(|w| !w.is_finite())
            || self.values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite("spectrum sample"));
        }
        if self.frequencies.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("frequencies", "grid must be strictly increasing"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn abs2(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm_sqr()).collect()
    }

    /// Linear interpolation of the complex samples; `None` outside the grid.
    pub fn interpolate(&self, omega: f64) -> Option<Complex64> {
        let f = &self.frequencies;
        if omega < f[0] || omega > f[f.len() - 1] {
            return None;
        }
        let hi = f.partition_point(|&w| w < omega);
        if f[hi] == omega {
            return Some(self.values[hi]);
        }
        let lo = hi - 1;
        let a = (omega - f[lo]) / (f[hi] - f[lo]);
        Some(self.values[lo] * (1.0 - a) + self.values[hi] * a)
    }

    /// Sub-spectrum with frequencies inside `[lo, hi]`.
    pub fn window(&self, lo: f64, hi: f64) -> Spectrum {
        let (frequencies, values) = self
            .frequencies
            .iter()
            .zip(&self.values)
            .filter(|(w, _)| **w >= lo && **w <= hi)
            .map(|(w, z)| (*w, *z))
            .unzip();
        Spectrum {
            frequencies,
            values,
            kind: self.kind,
            metadata: self.metadata.clone(),
        }
    }
}
