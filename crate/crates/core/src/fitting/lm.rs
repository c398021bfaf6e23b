//! Damped least squares (Levenberg-Marquardt) with finite-difference
//! Jacobians and Marquardt diagonal scaling.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop when the relative cost decrease of an accepted step is below this.
    pub ftol: f64,
    /// Stop when the relative parameter step is below this.
    pub xtol: f64,
    pub initial_lambda: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            ftol: 1e-15,
            xtol: 1e-13,
            initial_lambda: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmOutcome {
    pub params: Vec<f64>,
    /// Sum of squared residuals at `params`.
    pub ssr: f64,
    pub residual_count: usize,
    pub iterations: usize,
    pub converged: bool,
    /// `(J^T J)^-1` at the solution, if invertible.
    pub inverse_normal: Option<DMatrix<f64>>,
    pub message: String,
}

impl LmOutcome {
    /// Standard errors from the residual variance and the normal matrix.
    /// Infinite when there are no residual degrees of freedom.
    pub fn sigmas(&self) -> Vec<f64> {
        let p = self.params.len();
        let dof = self.residual_count.saturating_sub(p);
        match (&self.inverse_normal, dof) {
            (Some(inv), d) if d > 0 => {
                let s2 = self.ssr / d as f64;
                (0..p).map(|j| (s2 * inv[(j, j)]).max(0.0).sqrt()).collect()
            }
            _ => vec![f64::INFINITY; p],
        }
    }
}

fn ssr(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Central-difference Jacobian; `scale` sets the minimum step magnitude per
/// parameter.
fn jacobian(f: &impl Fn(&[f64]) -> Vec<f64>, x: &[f64], m: usize, scale: &[f64]) -> DMatrix<f64> {
    let mut jac = DMatrix::zeros(m, x.len());
    let mut xp = x.to_vec();
    for j in 0..x.len() {
        let h = f64::EPSILON.cbrt() * x[j].abs().max(scale[j]);
        xp[j] = x[j] + h;
        let fp = f(&xp);
        xp[j] = x[j] - h;
        let fm = f(&xp);
        xp[j] = x[j];
        for i in 0..m {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    jac
}

/// Minimises `sum f(x)_i^2` from `x0`. The cost never increases between
/// accepted iterates. `scale` gives typical parameter magnitudes.
pub fn levenberg_marquardt(
    f: impl Fn(&[f64]) -> Vec<f64>,
    x0: &[f64],
    scale: &[f64],
    opts: LmOptions,
) -> LmOutcome {
    let p = x0.len();
    let mut x = x0.to_vec();
    let mut r = f(&x);
    let m = r.len();
    let mut cost = ssr(&r);
    let mut lambda = opts.initial_lambda;
    let mut converged = false;
    let mut message = String::from("iteration limit reached");
    let mut iterations = 0;

    if !cost.is_finite() {
        return LmOutcome {
            params: x,
            ssr: cost,
            residual_count: m,
            iterations: 0,
            converged: false,
            inverse_normal: None,
            message: "non-finite residuals at the initial guess".into(),
        };
    }

    'outer: while iterations < opts.max_iterations {
        iterations += 1;
        if cost == 0.0 {
            converged = true;
            message = "exact fit".into();
            break;
        }
        let jac = jacobian(&f, &x, m, scale);
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * DVector::from_column_slice(&r);
        if g.amax() <= f64::EPSILON * cost.sqrt() * jtj.diagonal().amax().sqrt() {
            converged = true;
            message = "gradient vanished".into();
            break;
        }
        loop {
            let mut a = jtj.clone();
            for j in 0..p {
                a[(j, j)] += lambda * jtj[(j, j)].max(1e-300);
            }
            let step = match a.cholesky() {
                Some(ch) => ch.solve(&(-&g)),
                None => {
                    lambda *= 10.0;
                    if lambda > 1e16 {
                        message = "damped normal matrix not positive definite".into();
                        break 'outer;
                    }
                    continue;
                }
            };
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let rt = f(&trial);
            let ct = ssr(&rt);
            if ct.is_finite() && ct <= cost {
                let rel_drop = (cost - ct) / cost.max(f64::MIN_POSITIVE);
                let rel_step = step
                    .iter()
                    .zip(&x)
                    .zip(scale)
                    .map(|((s, xi), sc)| s.abs() / xi.abs().max(*sc))
                    .fold(0.0, f64::max);
                x = trial;
                r = rt;
                cost = ct;
                lambda = (lambda / 3.0).max(1e-12);
                if rel_drop < opts.ftol || rel_step < opts.xtol {
                    converged = true;
                    message = "converged".into();
                    break 'outer;
                }
                break;
            }
            lambda *= 4.0;
            if lambda > 1e16 {
                converged = true;
                message = "no further decrease possible".into();
                break 'outer;
            }
        }
    }

    let jac = jacobian(&f, &x, m, scale);
    let inverse_normal = (jac.transpose() * &jac).try_inverse();
    LmOutcome {
        params: x,
        ssr: cost,
        residual_count: m,
        iterations,
        converged,
        inverse_normal,
        message,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| vec![10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0]];
        let out = levenberg_marquardt(f, &[-1.2, 1.0], &[1.0, 1.0], LmOptions::default());
        assert!(out.converged, "{}", out.message);
        assert!((out.params[0] - 1.0).abs() < 1e-8 && (out.params[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn cost_is_monotone() {
        use std::cell::RefCell;
        let costs = RefCell::new(Vec::new());
        let xs: Vec<f64> = (0..50).map(|i| i as f64 / 10.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * (-0.7 * x).exp() + 0.3).collect();
        let f = |p: &[f64]| xs.iter().zip(&ys).map(|(x, y)| p[0] * (-p[1] * x).exp() + p[2] - y).collect::<Vec<_>>();
        let out = levenberg_marquardt(
            |p| {
                let r = f(p);
                costs.borrow_mut().push(ssr(&r));
                r
            },
            &[1.0, 0.1, 0.0],
            &[1.0, 1.0, 1.0],
            LmOptions::default(),
        );
        assert!(out.converged);
        assert!((out.params[1] - 0.7).abs() < 1e-8);
        assert!(out.ssr <= costs.borrow()[0]);
    }
}
