//! Named columnar datasets produced by scenarios.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::power_db;
use crate::Complex64;

/// How a table is drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlotSpec {
    None,
    /// One curve per `y` column against column `x`.
    Line { x: String, y: Vec<String>, title: String },
    /// Long-format grid: `z` over the distinct values of `x` and `y`. Points
    /// of `overlay` (a table with the same `x`, `y` columns) are drawn on top.
    Heatmap {
        x: String,
        y: String,
        z: String,
        title: String,
        overlay: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    /// Row-major values, `rows[i].len() == columns.len()`.
    pub rows: Vec<Vec<f64>>,
    pub plot: PlotSpec,
    pub metadata: BTreeMap<String, String>,
}

/// Columns every spectrum table carries after its grid axes.
pub const SPECTRUM_COLUMNS: [&str; 5] = ["frequency_Hz", "re", "im", "abs", "abs2_dB"];

impl Table {
    pub fn new<S: AsRef<str>>(name: impl Into<String>, columns: &[S]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.as_ref().to_string()).collect(),
            rows: Vec::new(),
            plot: PlotSpec::None,
            metadata: BTreeMap::new(),
        }
    }

    /// Empty spectrum table with the given leading grid axes.
    pub fn spectrum<S: AsRef<str>>(name: impl Into<String>, axes: &[S]) -> Self {
        let cols: Vec<&str> = axes.iter().map(AsRef::as_ref).chain(SPECTRUM_COLUMNS).collect();
        Self::new(name, &cols)
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.metadata.insert(key.into(), value.to_string());
        self
    }

    pub fn with_plot(mut self, plot: PlotSpec) -> Self {
        self.plot = plot;
        self
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width of table {}", self.name);
        self.rows.push(row);
    }

    /// Appends one spectrum sample: grid axes, then frequency and the value.
    pub fn push_sample(&mut self, axes: &[f64], omega: f64, value: Complex64) {
        let mut row = axes.to_vec();
        row.extend([omega / TAU, value.re, value.im, value.norm(), power_db(value.norm_sqr())]);
        self.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(Error::invalid("table.name", format!("`{}` is not a plain file stem", self.name)));
        }
        if self.columns.is_empty() {
            return Err(Error::invalid("table.columns", format!("table {} has no columns", self.name)));
        }
        if let Some(c) = self.columns.iter().find(|c| c.is_empty() || c.contains([',', '"', '\n', '\r']) || c.trim() != c.as_str()) {
            return Err(Error::invalid("table.columns", format!("table {} has an unusable column name {c:?}", self.name)));
        }
        if let Some(i) = self.rows.iter().position(|r| r.len() != self.columns.len()) {
            return Err(Error::invalid(
                "table.rows",
                format!("table {} row {i} has {} values for {} columns", self.name, self.rows[i].len(), self.columns.len()),
            ));
        }
        let needed: Vec<&String> = match &self.plot {
            PlotSpec::None => Vec::new(),
            PlotSpec::Line { x, y, .. } => std::iter::once(x).chain(y).collect(),
            PlotSpec::Heatmap { x, y, z, .. } => vec![x, y, z],
        };
        for c in needed {
            if self.column_index(c).is_none() {
                return Err(Error::invalid("table.plot", format!("table {} has no column `{c}`", self.name)));
            }
        }
        Ok(())
    }
}

pub fn line(x: &str, y: &[&str], title: impl Into<String>) -> PlotSpec {
    PlotSpec::Line {
        x: x.into(),
        y: y.iter().map(|s| s.to_string()).collect(),
        title: title.into(),
    }
}

pub fn heatmap(x: &str, y: &str, z: &str, title: impl Into<String>) -> PlotSpec {
    PlotSpec::Heatmap {
        x: x.into(),
        y: y.into(),
        z: z.into(),
        title: title.into(),
        overlay: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectrum_rows_follow_schema() {
        let mut t = Table::spectrum("s21", &["n"]);
        t.push_sample(&[3.0], TAU * 5.0, Complex64::new(0.0, -0.1));
        assert_eq!(t.columns, ["n", "frequency_Hz", "re", "im", "abs", "abs2_dB"]);
        let row = &t.rows[0];
        assert_eq!(row[1], 5.0);
        assert!((row[4] - 0.1).abs() < 1e-15);
        assert!((row[5] + 20.0).abs() < 1e-12);
        t.validate().unwrap();
    }

    #[test]
    fn validation_catches_bad_plots_and_names() {
        let t = Table::new("a", &["x"]).with_plot(line("x", &["y"], ""));
        assert!(t.validate().is_err());
        assert!(Table::new("../x", &["x"]).validate().is_err());
    }
}
