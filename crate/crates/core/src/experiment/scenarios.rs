//! The scenario implementations. Each one fills an [`Output`] with tables
//! and scalar summary values.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::calibration::{
    assemble_mutual_matrix, banded_matrix, compensated_currents, parse_slope_csv, residual_crosstalk,
    synthetic_measurements, MutualMatrix,
};
use crate::error::{Error, Result};
use crate::fitting::{fit_power_law, fit_two_level_resonance, linear_regression, lineshape_skewness, saturation_p50};
use crate::hamiltonian::{
    dispersion_estimate, effective_hamiltonian, eigenmodes, perturbative_subradiant_rate, ArrayConfig, EigenMode,
    EigenOptions,
};
use crate::input_output::{blind_spot_detuning, fano_reflection_approx, fano_resonance, io_scattering};
use crate::qubit::{DriveParams, QubitParams, ResponseModel};
use crate::spectrum::{SParamKind, Spectrum};
use crate::transfer::{chain_sparams, stop_band, sweep};
use crate::units::{ghz, mhz, power_db};
use crate::Complex64;

use super::config::{linspace, Config};
use super::table::{heatmap, line, PlotSpec, Table};

#[derive(Debug, Default)]
pub(super) struct Output {
    pub tables: Vec<Table>,
    pub summary: Map<String, Value>,
}

impl Output {
    fn put(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.summary.insert(key.to_string(), v);
    }
}

fn hz(omega: f64) -> f64 {
    omega / TAU
}

/// Eigenmodes of `H_eff` for qubits at `omegas`, computed on frequencies
/// relative to `center` so the eigensolver works at the scale of the rates.
fn modes_around(omegas: &[f64], center: f64, gamma: f64, phi: f64) -> Result<Vec<EigenMode>> {
    let offsets: Vec<f64> = omegas.iter().map(|w| w - center).collect();
    let h = effective_hamiltonian(&offsets, gamma, phi, None);
    let mut modes = eigenmodes(&h, EigenOptions::default())?;
    for m in &mut modes {
        m.omega_xi += center;
    }
    Ok(modes)
}

pub(super) fn resonant_stack(cfg: &Config, out: &mut Output) -> Result<()> {
    let c = &cfg.scenarios.resonant_stack;
    let dev = &cfg.device;
    let w0 = dev.omega_r();
    let gamma = dev.gamma_rad();
    let omegas = c.grid.omegas(w0);
    let opts = cfg.chain_options();
    let drive = DriveParams::probe(w0);

    let stack_cols: Vec<String> = std::iter::once("frequency_Hz".to_string())
        .chain((1..=c.n_max).map(|n| format!("abs2_dB_n{n}")))
        .collect();
    let stack_y: Vec<&str> = stack_cols[1..].iter().map(String::as_str).collect();
    let mut stack = Table::new("s21_stack", &stack_cols)
        .with_plot(line("frequency_Hz", &stack_y, "|S21|^2 (dB) for N resonant qubits"));
    for &w in &omegas {
        let mut row = vec![hz(w)];
        row.resize(stack_cols.len(), 0.0);
        stack.push(row);
    }
    let mut modes_table = Table::new(
        "eigenmodes",
        &["n", "rank", "frequency_Hz", "decay_rate_Hz", "decay_over_gamma10"],
    );
    let mut bands = Table::new("stop_bands", &["n", "lower_Hz", "upper_Hz", "width_over_gamma10"])
        .with_meta("threshold_dB", c.stop_band_db);
    let mut band_summary = Map::new();
    let mut single = Vec::new();

    for n in 1..=c.n_max {
        let arr = dev.resonant_array(n)?;
        let values: Vec<Complex64> = sweep(&arr, &opts, &drive, &omegas)?.into_iter().map(|s| s.s21).collect();
        let mut t = Table::spectrum::<&str>(format!("s21_n{n}"), &[])
            .with_meta("n", n)
            .with_meta("parameter", "S21")
            .with_plot(line("frequency_Hz", &["abs2_dB"], format!("|S21|^2, N = {n}")));
        for (k, (&w, &v)) in omegas.iter().zip(&values).enumerate() {
            t.push_sample(&[], w, v);
            stack.rows[k][n] = power_db(v.norm_sqr());
        }
        out.tables.push(t);

        for m in modes_around(&vec![w0; n], w0, arr.coupling_rate(), arr.phi())? {
            modes_table.push(vec![n as f64, m.rank as f64, hz(m.omega_xi.re), hz(m.gamma_xi), m.gamma_xi / gamma]);
        }

        let abs2: Vec<f64> = values.iter().map(|v| v.norm_sqr()).collect();
        match stop_band(&omegas, &abs2, c.stop_band_db, w0) {
            Ok(b) => {
                let width = b.width() / gamma;
                bands.push(vec![n as f64, hz(b.lower), hz(b.upper), width]);
                band_summary.insert(n.to_string(), json!(width));
            }
            Err(e) => {
                log::info!("N = {n}: no {} dB stop band ({e})", c.stop_band_db);
                band_summary.insert(n.to_string(), Value::Null);
            }
        }
        if n == 1 {
            single = values;
        }
    }
    out.tables.insert(0, stack);
    out.tables.push(modes_table);
    out.tables.push(bands);
    out.put("stop_band_width_over_gamma10", band_summary);

    // Noisy single-qubit spectrum and its resonance fit.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, c.fit_noise).map_err(|e| Error::Config(format!("fit_noise: {e}")))?;
    let noisy: Vec<Complex64> = single
        .iter()
        .map(|v| v + Complex64::new(noise.sample(&mut rng), noise.sample(&mut rng)))
        .collect();
    let spec = Spectrum::new(omegas.clone(), noisy.clone(), SParamKind::S21)?;
    let fit = fit_two_level_resonance(&spec)?;
    let mut fit_table = Table::new("single_qubit_fit", &["frequency_Hz", "re", "im", "abs2_dB", "fit_abs2_dB"])
        .with_meta("noise_sigma", c.fit_noise)
        .with_meta("seed", cfg.seed)
        .with_plot(line("frequency_Hz", &["abs2_dB", "fit_abs2_dB"], "noisy single-qubit |S21|^2 and fit"));
    if let (Some(wr), Some(g), Some(g10)) = (fit.value("omega_r"), fit.value("gamma_rad"), fit.value("gamma10")) {
        for (&w, v) in omegas.iter().zip(&noisy) {
            let model = 1.0 - (g / 2.0) / Complex64::new(g10, w - wr);
            fit_table.push(vec![hz(w), v.re, v.im, power_db(v.norm_sqr()), power_db(model.norm_sqr())]);
        }
    }
    let q = dev.qubit(0, w0)?;
    out.put(
        "single_qubit_truth",
        json!({"omega_r": w0, "gamma_rad": q.gamma_rad, "gamma10": q.gamma10()}),
    );
    out.put("single_qubit_fit", &fit);
    out.tables.push(fit_table);
    Ok(())
}

pub(super) fn detuned_qubit(cfg: &Config, out: &mut Output) -> Result<()> {
    let c = &cfg.scenarios.detuned_qubit;
    let dev = &cfg.device;
    let w0 = dev.omega_r();
    let omegas = c.grid.omegas(w0);
    let detunings = c.detuning_mhz.values();
    let opts = cfg.chain_options();
    let k = c.swept_qubit - 1;

    let rows: Vec<(Vec<Vec<f64>>, Vec<Vec<f64>>)> = detunings
        .par_iter()
        .map(|&d| {
            let mut qs = vec![w0; c.n];
            qs[k] = w0 + mhz(d);
            let arr = dev.array(&qs)?;
            let s = sweep(&arr, &opts, &DriveParams::probe(w0), &omegas)?;
            let mut map = Table::spectrum("row", &["detuning_Hz"]);
            for (&w, p) in omegas.iter().zip(&s) {
                map.push_sample(&[d * 1e6], w, p.s22);
            }
            let traces = modes_around(&qs, w0, arr.coupling_rate(), arr.phi())?
                .into_iter()
                .map(|m| vec![d * 1e6, m.rank as f64, hz(m.omega_xi.re), hz(m.gamma_xi)])
                .collect();
            Ok((map.rows, traces))
        })
        .collect::<Result<_>>()?;

    let mut map = Table::spectrum("s22_map", &["detuning_Hz"])
        .with_meta("swept_qubit", c.swept_qubit)
        .with_meta("n", c.n)
        .with_meta("parameter", "S22")
        .with_plot(PlotSpec::Heatmap {
            x: "frequency_Hz".into(),
            y: "detuning_Hz".into(),
            z: "abs2_dB".into(),
            title: format!("|S22|^2 (dB), qubit {} detuned", c.swept_qubit),
            overlay: Some("eigen_traces".into()),
        });
    let mut traces = Table::new("eigen_traces", &["detuning_Hz", "rank", "frequency_Hz", "decay_rate_Hz"]);
    for (m, t) in rows {
        map.rows.extend(m);
        traces.rows.extend(t);
    }
    out.tables.push(map);
    out.tables.push(traces);
    Ok(())
}

pub(super) fn saturation(cfg: &Config, out: &mut Output) -> Result<()> {
    let c = &cfg.scenarios.saturation;
    let dev = &cfg.device;
    let w0 = dev.omega_r();
    let gamma = dev.gamma_rad();
    let opts = cfg.chain_options();
    let cal = cfg.probe.calibration(gamma);
    let in_dbm = cfg.probe.kappa_rad2_per_s2_per_mw.is_some();
    let ratios = c.rabi_over_gamma.values();
    let rabis: Vec<f64> = ratios.iter().map(|r| r * gamma).collect();
    let powers: Vec<f64> = rabis.iter().map(|&r| cal.power(r)).collect();

    let mut axes = vec!["rabi_over_gamma10".to_string(), "log10_rabi_over_gamma10".to_string()];
    if in_dbm {
        axes.push("power_dBm".into());
    }
    let axis_row = |k: usize| {
        let mut row = vec![ratios[k], ratios[k].log10()];
        if in_dbm {
            row.push(10.0 * powers[k].log10());
        }
        row
    };

    let curves: Vec<Vec<f64>> = (1..=c.n_max)
        .into_par_iter()
        .map(|n| {
            let arr = dev.resonant_array(n)?;
            rabis
                .iter()
                .map(|&r| chain_sparams(&arr, &opts, &DriveParams::probe(w0).with_probe_rabi(r)).map(|s| s.s21.norm_sqr()))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;

    let ys: Vec<String> = (1..=c.n_max).map(|n| format!("abs2_n{n}")).collect();
    let cols: Vec<String> = axes.iter().chain(&ys).cloned().collect();
    let y_refs: Vec<&str> = ys.iter().map(String::as_str).collect();
    let mut resonance = Table::new("resonance_transmission", &cols)
        .with_meta("power_unit", if in_dbm { "dBm" } else { "Omega_p / Gamma_10" })
        .with_plot(line("log10_rabi_over_gamma10", &y_refs, "on-resonance |S21|^2 versus probe strength"));
    for k in 0..rabis.len() {
        let mut row = axis_row(k);
        row.extend(curves.iter().map(|curve| curve[k]));
        resonance.push(row);
    }
    out.tables.push(resonance);

    let p50_cols: &[&str] = if in_dbm {
        &["n", "rabi50_over_gamma10", "p50_dBm"]
    } else {
        &["n", "rabi50_over_gamma10"]
    };
    let mut p50 = Table::new("p50", p50_cols).with_plot(line("n", &["rabi50_over_gamma10"], "half-transmission probe strength"));
    let mut missing = Vec::new();
    let (mut ln_n, mut p50_vals) = (Vec::new(), Vec::new());
    for (i, curve) in curves.iter().enumerate() {
        let n = i + 1;
        match saturation_p50(&powers, curve) {
            Ok(p) => {
                let mut row = vec![n as f64, cal.rabi(p) / gamma];
                if in_dbm {
                    row.push(10.0 * p.log10());
                }
                p50.push(row);
                ln_n.push((n as f64).ln());
                p50_vals.push(p);
            }
            Err(Error::NoCrossing) => missing.push(n),
            Err(e) => return Err(e),
        }
    }
    let increasing = p50_vals.windows(2).all(|w| w[1] > w[0]);
    out.put("p50", p50_vals.clone());
    out.put("p50_unit", if in_dbm { "mW" } else { "single-qubit half-transmission power" });
    out.put("p50_strictly_increasing", increasing);
    out.put("p50_no_crossing_n", missing);
    if ln_n.len() >= 2 {
        out.put("p50_vs_ln_n", linear_regression(&ln_n, &p50_vals)?);
    }
    out.tables.push(p50);

    // (power, frequency) map for one array size.
    let arr = dev.resonant_array(c.map_n)?;
    let omegas = c.grid.omegas(w0);
    let rows: Vec<Vec<Vec<f64>>> = rabis
        .par_iter()
        .enumerate()
        .map(|(k, &r)| {
            let s = sweep(&arr, &opts, &DriveParams::probe(w0).with_probe_rabi(r), &omegas)?;
            let mut t = Table::spectrum("row", &axes);
            let a = axis_row(k);
            for (&w, p) in omegas.iter().zip(&s) {
                t.push_sample(&a, w, p.s21);
            }
            Ok(t.rows)
        })
        .collect::<Result<_>>()?;
    let axis_refs: Vec<&str> = axes.iter().map(String::as_str).collect();
    let mut map = Table::spectrum("s21_power_map", &axis_refs)
        .with_meta("n", c.map_n)
        .with_meta("parameter", "S21")
        .with_plot(heatmap(
            "frequency_Hz",
            "log10_rabi_over_gamma10",
            "abs2_dB",
            format!("|S21|^2 (dB), N = {}", c.map_n),
        ));
    map.rows = rows.into_iter().flatten().collect();
    out.tables.push(map);
    Ok(())
}

pub(super) fn ats(cfg: &Config, out: &mut Output) -> Result<()> {
    let c = &cfg.scenarios.ats;
    let dev = &cfg.device;
    let w0 = dev.omega_r();
    let gamma = dev.gamma_rad();
    let wc = ghz(c.omega_c_ghz);
    let w21 = c.omega21_ghz.map(ghz).unwrap_or(wc);
    let q = QubitParams::new(w0, gamma, mhz(c.gamma10_mhz) - gamma / 2.0)?
        .with_anharmonicity(w21 - w0)
        .with_gamma20(mhz(c.gamma20_mhz));
    let arr = ArrayConfig::new(vec![q; c.n], dev.spacing_m, dev.phase_velocity_m_per_s, w0)?;
    let opts = cfg.chain_options().with_response(ResponseModel::ThreeLevel);
    let omegas = c.grid.omegas(w0);
    let controls: Vec<f64> = c.rabi_c_mhz.values().into_iter().map(mhz).collect();

    let results: Vec<(Vec<Vec<f64>>, Vec<f64>)> = controls
        .par_iter()
        .map(|&rc| {
            let drive = DriveParams::probe(w0).with_control(wc, rc);
            let s = sweep(&arr, &opts, &drive, &omegas)?;
            let mut t = Table::spectrum("row", &["rabi_c_Hz"]);
            for (&w, p) in omegas.iter().zip(&s) {
                t.push_sample(&[hz(rc)], w, p.s21);
            }
            let abs2: Vec<f64> = s.iter().map(|p| p.s21.norm_sqr()).collect();
            let argmin = |keep: &dyn Fn(f64) -> bool| {
                omegas
                    .iter()
                    .zip(&abs2)
                    .filter(|(w, _)| keep(**w))
                    .min_by(|a, b| a.1.total_cmp(b.1))
                    .map(|(w, _)| *w)
                    .ok_or_else(|| Error::AmbiguousWindow("frequency grid does not straddle omega10".into()))
            };
            let lower = argmin(&|w| w < w0)?;
            let upper = argmin(&|w| w > w0)?;
            let on = chain_sparams(&arr, &opts, &drive)?.s21.norm_sqr();
            Ok((t.rows, vec![hz(rc), hz(lower), hz(upper), hz(upper - lower), on]))
        })
        .collect::<Result<_>>()?;

    let mut map = Table::spectrum("s21_control_map", &["rabi_c_Hz"])
        .with_meta("n", c.n)
        .with_meta("parameter", "S21")
        .with_meta("omega_c_Hz", hz(wc))
        .with_plot(heatmap("frequency_Hz", "rabi_c_Hz", "abs2_dB", format!("|S21|^2 (dB), N = {}, control on", c.n)));
    let mut branches = Table::new(
        "ats_branches",
        &["rabi_c_Hz", "lower_Hz", "upper_Hz", "splitting_Hz", "transparency"],
    )
    .with_plot(line("rabi_c_Hz", &["lower_Hz", "upper_Hz"], "transmission-minimum branches"));
    for (m, b) in results {
        map.rows.extend(m);
        branches.push(b);
    }

    let rc = branches.column("rabi_c_Hz").unwrap_or_default();
    let split = branches.column("splitting_Hz").unwrap_or_default();
    let transparency = branches.column("transparency").unwrap_or_default();
    let mid = (rc[0] + rc[rc.len() - 1]) / 2.0;
    let (xs, ys): (Vec<f64>, Vec<f64>) = rc.iter().zip(&split).filter(|(x, _)| **x >= mid).map(|(x, y)| (*x, *y)).unzip();
    if xs.len() >= 2 {
        out.put("splitting_fit_upper_half", linear_regression(&xs, &ys)?);
    }
    out.put("transparency_monotone", transparency.windows(2).all(|w| w[1] >= w[0]));
    out.put("transparency_min", transparency.iter().copied().fold(f64::INFINITY, f64::min));
    out.put("transparency_max", transparency.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    out.tables.push(map);
    out.tables.push(branches);
    Ok(())
}

/// Three lossless qubits at `omega0, omega0, omega0 + delta` with a fixed
/// inter-qubit phase.
fn fano_array(cfg: &Config, omega0: f64, delta: f64, phi: f64) -> Result<ArrayConfig> {
    let dev = &cfg.device;
    let q = QubitParams::new(omega0, dev.gamma_rad(), 0.0)?;
    let c = dev.phase_velocity_m_per_s;
    ArrayConfig::new(
        vec![q, q, q.with_omega10(omega0 + delta)],
        phi * c / omega0,
        c,
        omega0,
    )
}

pub(super) fn fano(cfg: &Config, out: &mut Output) -> Result<()> {
    let c = &cfg.scenarios.fano;
    let w0 = cfg.device.omega_r();
    let gamma = cfg.device.gamma_rad();
    let xs = linspace(-c.half_span_over_gamma, c.half_span_over_gamma, c.points);
    let r_exact = |arr: &ArrayConfig, w: f64| io_scattering(arr, w).map(|(r, _)| r);

    let mut per_detuning = Vec::new();
    for (i, &y) in c.two_delta_over_gamma.iter().enumerate() {
        let delta = y * gamma / 2.0;
        let arr = fano_array(cfg, w0, delta, c.phi)?;
        let mut t = Table::spectrum(format!("reflection_{}", i + 1), &["offset_over_gamma10"]);
        t.columns.extend(["approx_abs".to_string(), "in_window".to_string()]);
        t = t
            .with_meta("two_delta_over_gamma10", y)
            .with_meta("phi", c.phi)
            .with_meta("parameter", "S11")
            .with_plot(line("offset_over_gamma10", &["abs", "approx_abs"], format!("|r|, 2 Delta / Gamma_10 = {y}")));
        for &x in &xs {
            let w = w0 + x * gamma;
            let r = r_exact(&arr, w)?;
            let approx = fano_reflection_approx(w, w0, delta, gamma, c.phi)?;
            let mut row = vec![x, hz(w), r.re, r.im, r.norm(), power_db(r.norm_sqr())];
            row.extend([approx.r.norm(), if approx.in_window { 1.0 } else { 0.0 }]);
            t.push(row);
        }
        out.tables.push(t);

        // Lineshape asymmetry around the narrow resonance and the accuracy
        // of the approximation where it is meant to hold.
        let res = fano_resonance(delta, gamma, c.phi);
        let centre = w0 + res.offset;
        let offsets = linspace(-res.half_width, res.half_width, 801);
        let f = offsets
            .iter()
            .map(|o| r_exact(&arr, centre + o).map(|r| r.norm_sqr()))
            .collect::<Result<Vec<f64>>>()?;
        let skew = lineshape_skewness(&offsets, &f)?;
        let mut max_dev: f64 = 0.0;
        for o in &offsets {
            let w = w0 + delta + o;
            let exact = r_exact(&arr, w)?.norm_sqr();
            let approx = fano_reflection_approx(w, w0, delta, gamma, c.phi)?.r.norm_sqr();
            max_dev = max_dev.max((exact - approx).abs());
        }
        per_detuning.push(json!({
            "two_delta_over_gamma10": y,
            "resonance_offset_over_gamma10": res.offset / gamma,
            "resonance_half_width_over_gamma10": res.half_width / gamma,
            "skewness": skew,
            "approx_max_abs2_deviation": max_dev,
        }));
    }
    out.put("lines", per_detuning);
    out.put("blind_spot_two_delta_over_gamma10", 2.0 * blind_spot_detuning(c.phi, gamma)? / gamma);

    let ys = c.map.values();
    let rows: Vec<Vec<Vec<f64>>> = ys
        .par_iter()
        .map(|&y| {
            let arr = fano_array(cfg, w0, y * gamma / 2.0, c.phi)?;
            let mut t = Table::spectrum("row", &["two_delta_over_gamma10", "offset_over_gamma10"]);
            for &x in &xs {
                let w = w0 + x * gamma;
                t.push_sample(&[y, x], w, r_exact(&arr, w)?);
            }
            Ok(t.rows)
        })
        .collect::<Result<_>>()?;
    let mut map = Table::spectrum("reflection_map", &["two_delta_over_gamma10", "offset_over_gamma10"])
        .with_meta("phi", c.phi)
        .with_meta("parameter", "S11")
        .with_plot(heatmap("offset_over_gamma10", "two_delta_over_gamma10", "abs", "|r| of three qubits, third detuned"));
    map.rows = rows.into_iter().flatten().collect();
    out.tables.push(map);
    Ok(())
}

pub(super) fn linewidth_scaling(cfg: &Config, out: &mut Output) -> Result<()> {
    let c = &cfg.scenarios.linewidth_scaling;
    let gamma = cfg.device.gamma_rad();
    let mut rates = Table::new(
        "subradiant_rates",
        &[
            "n",
            "exact_over_gamma10",
            "perturbative_over_gamma10",
            "dispersion_over_gamma10",
            "relative_deviation",
        ],
    )
    .with_meta("phi", c.phi)
    .with_meta("xi", 1)
    .with_plot(line("n", &["exact_over_gamma10", "perturbative_over_gamma10"], "brightest subradiant decay rate"));
    let mut modes_table = Table::new("eigenmodes", &["n", "rank", "re_over_gamma10", "decay_over_gamma10"]).with_meta("phi", c.phi);
    let (mut ns, mut exact) = (Vec::new(), Vec::new());
    for n in c.n_min..=c.n_max {
        let h = effective_hamiltonian(&vec![0.0; n], gamma, c.phi, None);
        let modes = eigenmodes(&h, EigenOptions::default())?;
        for m in &modes {
            modes_table.push(vec![n as f64, m.rank as f64, m.omega_xi.re / gamma, m.gamma_xi / gamma]);
        }
        let g1 = modes
            .iter()
            .find(|m| m.rank == 1)
            .map(|m| m.gamma_xi)
            .ok_or_else(|| Error::invalid("n", "need at least two qubits for a subradiant mode"))?;
        let pert = perturbative_subradiant_rate(n, 1, c.phi, gamma)?;
        let disp = 2.0 * dispersion_estimate(n, 1, c.phi, gamma)?.im;
        rates.push(vec![n as f64, g1 / gamma, pert / gamma, disp / gamma, (pert - g1).abs() / g1]);
        ns.push(n as f64);
        exact.push(g1 / gamma);
    }
    out.put("power_law_fit", fit_power_law(&ns, &exact)?);
    out.tables.push(rates);
    out.tables.push(modes_table);
    Ok(())
}

fn residual_row(actual: &MutualMatrix, calibrated: &MutualMatrix, tuned: usize, i: f64) -> Result<Vec<f64>> {
    let r = residual_crosstalk(actual, calibrated, tuned, i)?;
    Ok(vec![(tuned + 1) as f64, r.max, r.rms])
}

pub(super) fn crosstalk(cfg: &Config, out: &mut Output) -> Result<()> {
    let c = &cfg.scenarios.crosstalk;
    let (measurements, truth) = match &c.slopes_csv {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
            (parse_slope_csv(&text)?, None)
        }
        None => {
            let m = banded_matrix(c.n, c.nearest, c.other);
            (synthetic_measurements(&m), Some(m))
        }
    };
    let calibrated = assemble_mutual_matrix(&measurements, c.n)?;
    if let Some(t) = &truth {
        out.put("reconstruction_max_error", t.max_abs_diff(&calibrated));
    }
    out.put("source", if truth.is_some() { "synthetic" } else { "slopes_csv" });

    let mut slopes = Table::new("slopes", &["x", "y", "slope_xy", "slope_yx"]).with_meta("indexing", "1-based coils");
    for m in &measurements {
        slopes.push(vec![(m.x + 1) as f64, (m.y + 1) as f64, m.slope_xy, m.slope_yx]);
    }
    let mut matrix = Table::new("mutual_matrix", &["x", "y", "m_xy"])
        .with_meta("indexing", "1-based coils")
        .with_plot(heatmap("y", "x", "m_xy", "normalised mutual inductance M_xy / M_xx"));
    for (x, row) in calibrated.rows().iter().enumerate() {
        for (y, v) in row.iter().enumerate() {
            matrix.push(vec![(x + 1) as f64, (y + 1) as f64, *v]);
        }
    }

    let i = c.tuned_current_ma;
    let mut currents = Table::new("compensation_currents", &["tuned", "coil", "current_mA"])
        .with_meta("tuned_current_mA", i);
    let mut nulling: f64 = 0.0;
    for tuned in 0..c.n {
        let cur = compensated_currents(&calibrated, tuned, i)?;
        let flux = calibrated.fluxes(&cur)?;
        for (k, v) in cur.iter().enumerate() {
            currents.push(vec![(tuned + 1) as f64, (k + 1) as f64, *v]);
        }
        for (k, f) in flux.iter().enumerate() {
            if k != tuned {
                nulling = nulling.max(f.abs() / flux[tuned].abs());
            }
        }
    }
    out.put("nulling_max_untuned_over_tuned", nulling);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let p = c.perturbation;
    let actual = calibrated.perturbed(|_, _| if p > 0.0 { rng.random_range(-p..=p) } else { 0.0 });
    let mut residual = Table::new("residual_crosstalk", &["tuned", "max", "rms"])
        .with_meta("perturbation", p)
        .with_meta("seed", cfg.seed)
        .with_plot(line("tuned", &["max", "rms"], "residual untuned flux / tuned flux"));
    for tuned in 0..c.n {
        residual.push(residual_row(&actual, &calibrated, tuned, i)?);
    }
    let maxes = residual.column("max").unwrap_or_default();
    let rms = residual.column("rms").unwrap_or_default();
    out.put("residual_max", maxes.iter().copied().fold(0.0, f64::max));
    out.put(
        "residual_rms",
        (rms.iter().map(|v| v * v).sum::<f64>() / rms.len().max(1) as f64).sqrt(),
    );
    out.tables.extend([slopes, matrix, currents, residual]);
    Ok(())
}
