//! CSV, JSON and SVG emission of scenario results, and CSV re-ingest.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use plotters::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};

use super::config::Format;
use super::table::{PlotSpec, Table};
use super::RunResult;

const SVG_SIZE: (u32, u32) = (960, 640);
const MAX_HEATMAP_COLUMNS: usize = 300;
const MAX_HEATMAP_ROWS: usize = 200;

/// Files written by [`emit_outputs`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct EmitReport {
    pub files: Vec<PathBuf>,
    /// The SVG subset of `files`.
    pub figures: Vec<PathBuf>,
}

impl EmitReport {
    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    pub fn status(&self) -> String {
        if self.files.is_empty() {
            "nothing to emit".to_string()
        } else {
            format!("wrote {} files ({} figures)", self.files.len(), self.figures.len())
        }
    }
}

/// Writes every table of `result` into `dir` in each requested format, plus
/// `summary.json` when JSON is requested. Files are written atomically. A
/// result without tables writes nothing.
pub fn emit_outputs(result: &RunResult, dir: &Path, formats: &[Format]) -> Result<EmitReport> {
    let mut report = EmitReport::default();
    if result.tables.is_empty() {
        return Ok(report);
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    let mut formats = formats.to_vec();
    formats.sort();
    formats.dedup();
    for table in &result.tables {
        table.validate()?;
        for &f in &formats {
            let (ext, body) = match f {
                Format::Csv => ("csv", table_csv(result, table)),
                Format::Json => ("json", table_json(result, table)?),
                Format::Svg => match table_svg(result, table)? {
                    Some(svg) => ("svg", svg),
                    None => continue,
                },
            };
            let path = dir.join(format!("{}.{ext}", table.name));
            write_atomic(&path, body.as_bytes())?;
            if f == Format::Svg {
                report.figures.push(path.clone());
            }
            report.files.push(path);
        }
    }
    if formats.contains(&Format::Json) {
        let summary = json!({
            "provenance": result.provenance,
            "tables": result.tables.iter().map(|t| &t.name).collect::<Vec<_>>(),
            "summary": result.summary,
        });
        let path = dir.join("summary.json");
        write_atomic(&path, pretty(&summary)?.as_bytes())?;
        report.files.push(path);
    }
    Ok(report)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let ctx = |what: &str| format!("{what} {}", path.display());
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(ctx("creating temporary file for"), e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(ctx("writing"), e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(ctx("syncing"), e))?;
    tmp.persist(path).map_err(|e| Error::io(ctx("renaming into"), e.error))?;
    Ok(())
}

fn pretty(value: &impl Serialize) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn one_line(s: &str) -> String {
    s.replace(['\n', '\r'], " ")
}

fn provenance_lines(result: &RunResult, table: &Table) -> Vec<(String, String)> {
    let p = &result.provenance;
    let mut lines = vec![
        ("scenario".to_string(), p.scenario.name().to_string()),
        ("version".to_string(), p.version.clone()),
        ("config_sha256".to_string(), p.config_sha256.clone()),
        ("table".to_string(), table.name.clone()),
    ];
    for (k, v) in &table.metadata {
        lines.push((format!("meta.{}", one_line(k)), one_line(v)));
    }
    lines
}

/// `# key: value` provenance lines, a header row, then one row per sample
/// with every value printed to 17 significant digits.
fn table_csv(result: &RunResult, table: &Table) -> String {
    let mut s = String::new();
    for (k, v) in provenance_lines(result, table) {
        s.push_str(&format!("# {k}: {v}\n"));
    }
    s.push_str(&table.columns.join(","));
    s.push('\n');
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

fn table_json(result: &RunResult, table: &Table) -> Result<String> {
    let p = &result.provenance;
    pretty(&json!({
        "provenance": {
            "scenario": p.scenario,
            "version": p.version,
            "config_sha256": p.config_sha256,
        },
        "table": {
            "name": table.name,
            "columns": table.columns,
            "metadata": table.metadata,
            "rows": table.rows,
        },
    }))
}

/// A table read back from CSV together with its provenance lines.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub table: Table,
    /// `scenario`, `version`, `config_sha256` and any other non-metadata key.
    pub provenance: BTreeMap<String, String>,
}

/// Parses the CSV layout written by [`emit_outputs`].
pub fn read_table_csv(text: &str) -> Result<CsvTable> {
    let mut provenance = BTreeMap::new();
    let mut metadata = BTreeMap::new();
    let mut body_start = 0;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim_end_matches(['\n', '\r']);
        let Some(comment) = trimmed.strip_prefix('#') else { break };
        body_start += line.len();
        let comment = comment.trim_start();
        let Some((k, v)) = comment.split_once(':') else {
            return Err(Error::Parse(format!("provenance line without `key: value`: {trimmed}")));
        };
        let v = v.strip_prefix(' ').unwrap_or(v).to_string();
        match k.strip_prefix("meta.") {
            Some(meta) => metadata.insert(meta.to_string(), v),
            None => provenance.insert(k.to_string(), v),
        };
    }
    let name = provenance
        .get("table")
        .cloned()
        .ok_or_else(|| Error::Parse("missing `# table:` line".into()))?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text[body_start..].as_bytes());
    let columns: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Parse(format!("header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    if columns.is_empty() || columns.iter().any(String::is_empty) {
        return Err(Error::Parse("empty column name".into()));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(format!("row {}: {e}", i + 1)))?;
        let row = rec
            .iter()
            .map(|c| c.parse::<f64>().map_err(|e| Error::Parse(format!("row {}: `{c}`: {e}", i + 1))))
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != columns.len() {
            return Err(Error::Parse(format!("row {} has {} values for {} columns", i + 1, row.len(), columns.len())));
        }
        rows.push(row);
    }
    Ok(CsvTable {
        table: Table {
            name,
            columns,
            rows,
            plot: PlotSpec::None,
            metadata,
        },
        provenance,
    })
}

fn plot_err(e: impl std::fmt::Display) -> Error {
    Error::Io {
        context: "rendering svg".into(),
        source: std::io::Error::other(e.to_string()),
    }
}

fn finite_range(values: impl IntoIterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values
        .into_iter()
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if lo > hi {
        return None;
    }
    if lo == hi {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 1e-3 };
        return Some((lo - pad, hi + pad));
    }
    Some((lo, hi))
}

fn table_svg(result: &RunResult, table: &Table) -> Result<Option<String>> {
    let body = match &table.plot {
        PlotSpec::None => return Ok(None),
        _ if table.is_empty() => return Ok(None),
        PlotSpec::Line { x, y, title } => line_svg(table, x, y, title)?,
        PlotSpec::Heatmap {
            x,
            y,
            z,
            title,
            overlay,
        } => {
            let overlay = overlay.as_ref().and_then(|name| result.table(name));
            heatmap_svg(table, x, y, z, title, overlay)?
        }
    };
    let header: Vec<String> = provenance_lines(result, table)
        .into_iter()
        .map(|(k, v)| format!("{k}: {}", v.replace("--", "- -")))
        .collect();
    Ok(Some(format!("<!--\n{}\n-->\n{body}", header.join("\n"))))
}

fn line_svg(table: &Table, x: &str, ys: &[String], title: &str) -> Result<String> {
    let xs = table.column(x).unwrap_or_default();
    let curves: Vec<(String, Vec<f64>)> = ys.iter().map(|c| (c.clone(), table.column(c).unwrap_or_default())).collect();
    let Some(xr) = finite_range(xs.iter().copied()) else {
        return Ok(String::new());
    };
    let yr = finite_range(curves.iter().flat_map(|(_, v)| v.iter().copied())).unwrap_or((0.0, 1.0));
    let pad = 0.05 * (yr.1 - yr.0);
    let mut buf = String::new();
    {
        let root = SVGBackend::with_string(&mut buf, SVG_SIZE).into_drawing_area();
        root.fill(&WHITE).map_err(plot_err)?;
        let mut chart = ChartBuilder::on(&root)
            .caption(title, ("sans-serif", 20))
            .margin(15)
            .x_label_area_size(45)
            .y_label_area_size(75)
            .build_cartesian_2d(xr.0..xr.1, (yr.0 - pad)..(yr.1 + pad))
            .map_err(plot_err)?;
        chart
            .configure_mesh()
            .x_label_formatter(&tick)
            .y_label_formatter(&tick)
            .x_desc(x)
            .y_desc(ys.join(", "))
            .draw()
            .map_err(plot_err)?;
        for (i, (name, v)) in curves.iter().enumerate() {
            let color = Palette99::pick(i).to_rgba();
            // Non-finite samples split the curve into separate segments.
            let mut segment = Vec::new();
            let mut segments = Vec::new();
            for (&a, &b) in xs.iter().zip(v) {
                if a.is_finite() && b.is_finite() {
                    segment.push((a, b));
                } else if !segment.is_empty() {
                    segments.push(std::mem::take(&mut segment));
                }
            }
            segments.push(segment);
            for (k, seg) in segments.into_iter().enumerate() {
                let series = chart.draw_series(LineSeries::new(seg, color.stroke_width(2))).map_err(plot_err)?;
                if k == 0 {
                    series
                        .label(name.as_str())
                        .legend(move |(px, py)| PathElement::new(vec![(px, py), (px + 20, py)], color));
                }
            }
        }
        if curves.len() > 1 {
            chart
                .configure_series_labels()
                .background_style(WHITE.mix(0.8))
                .border_style(BLACK)
                .draw()
                .map_err(plot_err)?;
        }
        root.present().map_err(plot_err)?;
    }
    Ok(buf)
}

/// 1st and 99th percentile of the finite values, so isolated deep zeros do
/// not compress the colour scale.
fn color_limits(values: impl IntoIterator<Item = f64>) -> Option<(f64, f64)> {
    let mut v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let at = |q: f64| v[((v.len() - 1) as f64 * q).round() as usize];
    finite_range([at(0.01), at(0.99)])
}

fn tick(v: &f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e4).contains(&a) {
        format!("{v:.3e}")
    } else {
        format!("{v:.3}")
    }
}

/// Sorted distinct values.
fn axis_values(v: &[f64]) -> Vec<f64> {
    let mut u: Vec<f64> = v.iter().copied().filter(|x| x.is_finite()).collect();
    u.sort_by(f64::total_cmp);
    u.dedup();
    u
}

/// Every `stride`-th value, always keeping the last.
fn thin(values: &[f64], max: usize) -> Vec<f64> {
    let stride = values.len().div_ceil(max).max(1);
    let mut out: Vec<f64> = values.iter().step_by(stride).copied().collect();
    if let (Some(&last), Some(&kept)) = (values.last(), out.last()) {
        if kept != last {
            out.push(last);
        }
    }
    out
}

/// Cell boundaries halfway between neighbouring axis values.
fn cell_edges(values: &[f64]) -> Vec<f64> {
    if values.len() == 1 {
        return vec![values[0] - 0.5, values[0] + 0.5];
    }
    let n = values.len();
    let mut edges = Vec::with_capacity(n + 1);
    edges.push(values[0] - (values[1] - values[0]) / 2.0);
    for w in values.windows(2) {
        edges.push((w[0] + w[1]) / 2.0);
    }
    edges.push(values[n - 1] + (values[n - 1] - values[n - 2]) / 2.0);
    edges
}

/// Viridis heatmap, dark purple at the 1st percentile of `z`, yellow at the
/// 99th; values beyond are clamped.
fn heatmap_svg(table: &Table, x: &str, y: &str, z: &str, title: &str, overlay: Option<&Table>) -> Result<String> {
    let (ix, iy, iz) = match (table.column_index(x), table.column_index(y), table.column_index(z)) {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        _ => return Err(Error::invalid("plot", "heatmap columns missing")),
    };
    let xs = thin(&axis_values(&table.column(x).unwrap_or_default()), MAX_HEATMAP_COLUMNS);
    let ys = thin(&axis_values(&table.column(y).unwrap_or_default()), MAX_HEATMAP_ROWS);
    if xs.is_empty() || ys.is_empty() {
        return Ok(String::new());
    }
    let mut grid: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for row in &table.rows {
        let (Ok(a), Ok(b)) = (
            xs.binary_search_by(|v| v.total_cmp(&row[ix])),
            ys.binary_search_by(|v| v.total_cmp(&row[iy])),
        ) else {
            continue;
        };
        grid.insert((a, b), row[iz]);
    }
    let (zmin, zmax) = color_limits(grid.values().copied()).unwrap_or((0.0, 1.0));
    let xe = cell_edges(&xs);
    let ye = cell_edges(&ys);
    let caption = format!("{title}  [{z}: {zmin:.3e} .. {zmax:.3e}]");
    let mut buf = String::new();
    {
        let root = SVGBackend::with_string(&mut buf, SVG_SIZE).into_drawing_area();
        root.fill(&WHITE).map_err(plot_err)?;
        let mut chart = ChartBuilder::on(&root)
            .caption(caption, ("sans-serif", 18))
            .margin(15)
            .x_label_area_size(45)
            .y_label_area_size(75)
            .build_cartesian_2d(xe[0]..xe[xe.len() - 1], ye[0]..ye[ye.len() - 1])
            .map_err(plot_err)?;
        chart
            .configure_mesh()
            .disable_mesh()
            .x_label_formatter(&tick)
            .y_label_formatter(&tick)
            .x_desc(x)
            .y_desc(y)
            .draw()
            .map_err(plot_err)?;
        chart
            .draw_series(grid.iter().map(|(&(a, b), &v)| {
                // Non-finite cells (e.g. -inf dB at a perfect zero) take the low end.
                let v = if v.is_finite() { v.clamp(zmin, zmax) } else { zmin };
                let color = ViridisRGB::get_color_normalized(v, zmin, zmax);
                Rectangle::new([(xe[a], ye[b]), (xe[a + 1], ye[b + 1])], color.filled())
            }))
            .map_err(plot_err)?;
        if let Some(o) = overlay {
            if let (Some(ox), Some(oy)) = (o.column(x), o.column(y)) {
                let (x0, x1, y0, y1) = (xe[0], xe[xe.len() - 1], ye[0], ye[ye.len() - 1]);
                chart
                    .draw_series(
                        ox.into_iter()
                            .zip(oy)
                            .filter(|&(a, b)| a >= x0 && a <= x1 && b >= y0 && b <= y1)
                            .map(|p| Circle::new(p, 2, WHITE.filled())),
                    )
                    .map_err(plot_err)?;
            }
        }
        root.present().map_err(plot_err)?;
    }
    Ok(buf)
}
