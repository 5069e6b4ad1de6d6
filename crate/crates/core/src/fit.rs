//! Least-squares fit of the canonical Fano form
//! `A (X + q)² / ((1 + q²)(1 + X²))`, `X = (Δ − center)/Γ − q`.
//!
//! With this parameterization the zero sits at `Δ = center` and the maximum,
//! of height `A`, at `Δ = center + Γ(q + 1/q)`.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

pub const MAX_ITERATIONS: usize = 200;
const STEP_TOLERANCE: f64 = 1e-10;
/// Above this |q| the line is treated as a symmetric Lorentzian.
const SYMMETRIC_Q: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FanoFit {
    /// Asymmetry parameter; infinite in the symmetric limit.
    pub q: f64,
    pub gamma: f64,
    pub center: f64,
    pub amplitude: f64,
    /// Root-mean-square misfit over the window.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// No interior zero: the data were fitted as `A / (1 + ((Δ − center)/Γ)²)`.
    pub symmetric_limit: bool,
}

impl FanoFit {
    /// Model value at `delta`.
    pub fn eval(&self, delta: f64) -> f64 {
        if self.symmetric_limit {
            let w = (delta - self.center) / self.gamma;
            return self.amplitude / (1.0 + w * w);
        }
        fano_shape(self.amplitude, self.q, (delta - self.center) / self.gamma)
    }

    /// Location of the fitted maximum.
    pub fn peak_location(&self) -> f64 {
        if self.symmetric_limit {
            self.center
        } else {
            self.center + self.gamma * (self.q + 1.0 / self.q)
        }
    }
}

/// `A w² / ((1 + q²)(1 + (w − q)²))` with `w = X + q`.
fn fano_shape(a: f64, q: f64, w: f64) -> f64 {
    let x = w - q;
    a * w * w / ((1.0 + q * q) * (1.0 + x * x))
}

trait Model {
    /// Value and gradient with respect to the parameters at abscissa `u`.
    fn eval(&self, theta: &[f64], u: f64, grad: &mut [f64]) -> f64;
    fn n_params(&self) -> usize;
}

/// Parameters `(A, q, c, ln g)`.
struct FanoModel;

impl Model for FanoModel {
    fn n_params(&self) -> usize {
        4
    }

    fn eval(&self, t: &[f64], u: f64, grad: &mut [f64]) -> f64 {
        let (a, q, c, g) = (t[0], t[1], t[2], t[3].exp());
        let w = (u - c) / g;
        let x = w - q;
        let dq = 1.0 + q * q;
        let dx = 1.0 + x * x;
        let base = w * w / (dq * dx);
        let f = a * base;
        let df_dw = a / dq * (2.0 * w * dx - 2.0 * w * w * x) / (dx * dx);
        grad[0] = base;
        grad[1] = f * (-2.0 * q / dq + 2.0 * x / dx);
        grad[2] = -df_dw / g;
        grad[3] = -df_dw * w;
        f
    }
}

/// Parameters `(A, c, ln g)`.
struct LorentzModel;

impl Model for LorentzModel {
    fn n_params(&self) -> usize {
        3
    }

    fn eval(&self, t: &[f64], u: f64, grad: &mut [f64]) -> f64 {
        let (a, c, g) = (t[0], t[1], t[2].exp());
        let w = (u - c) / g;
        let d = 1.0 + w * w;
        let f = a / d;
        let df_dw = -2.0 * a * w / (d * d);
        grad[0] = 1.0 / d;
        grad[1] = -df_dw / g;
        grad[2] = -df_dw * w;
        f
    }
}

struct Outcome {
    theta: Vec<f64>,
    cost: f64,
    iterations: usize,
    converged: bool,
}

fn cost(model: &dyn Model, theta: &[f64], u: &[f64], y: &[f64]) -> f64 {
    let mut g = vec![0.0; model.n_params()];
    u.iter()
        .zip(y)
        .map(|(&ui, &yi)| {
            let r = model.eval(theta, ui, &mut g) - yi;
            r * r
        })
        .sum()
}

/// Levenberg–Marquardt with Marquardt diagonal scaling.
fn levenberg_marquardt(model: &dyn Model, init: Vec<f64>, u: &[f64], y: &[f64]) -> Outcome {
    let np = model.n_params();
    let m = u.len();
    let mut theta = init;
    let mut current = cost(model, &theta, u, y);
    let mut lambda = 1e-3;
    let mut grad = vec![0.0; np];
    let mut j = DMatrix::<f64>::zeros(m, np);
    let mut r = DVector::<f64>::zeros(m);

    for iter in 1..=MAX_ITERATIONS {
        if current == 0.0 {
            return Outcome {
                theta,
                cost: current,
                iterations: iter - 1,
                converged: true,
            };
        }
        for i in 0..m {
            r[i] = model.eval(&theta, u[i], &mut grad) - y[i];
            for k in 0..np {
                j[(i, k)] = grad[k];
            }
        }
        let jtj = j.transpose() * &j;
        let jtr = j.transpose() * &r;

        let mut accepted = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for k in 0..np {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-300);
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&(-&jtr))) else {
                lambda *= 10.0;
                continue;
            };
            let cand: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t + s).collect();
            let c = cost(model, &cand, u, y);
            if c.is_finite() && c <= current {
                let norm_step = step.norm();
                let norm_theta = theta.iter().map(|t| t * t).sum::<f64>().sqrt();
                theta = cand;
                current = c;
                lambda = (lambda / 10.0).max(1e-12);
                accepted = true;
                if norm_step <= STEP_TOLERANCE * (norm_theta + STEP_TOLERANCE) {
                    return Outcome {
                        theta,
                        cost: current,
                        iterations: iter,
                        converged: true,
                    };
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // No descent direction left: at a minimum to working precision.
            return Outcome {
                theta,
                cost: current,
                iterations: iter,
                converged: true,
            };
        }
    }
    Outcome {
        theta,
        cost: current,
        iterations: MAX_ITERATIONS,
        converged: false,
    }
}

/// Fits the Fano form to `spectrum.absorption[window]`.
///
/// Without `init`, the zero is taken from the window's interior minimum and
/// the peak from its maximum; `|q|` comes from the ratio of peak height to
/// the window-edge baseline, which the model approaches as `A/(1 + q²)`.
/// A window without an interior minimum, or an initial `|q|` above 1e3, is
/// fitted as a Lorentzian and reported with `symmetric_limit`.
pub fn fit_fano(
    spectrum: &Spectrum,
    window: Range<usize>,
    init: Option<FanoFit>,
) -> Result<FanoFit> {
    if window.end > spectrum.len() || window.start >= window.end {
        return Err(Error::InvalidWindow(format!(
            "window {}..{} outside spectrum of {} points",
            window.start,
            window.end,
            spectrum.len()
        )));
    }
    if window.len() < 8 {
        return Err(Error::InvalidWindow(format!(
            "window has {} points, need at least 8",
            window.len()
        )));
    }
    let x = &spectrum.grid[window.clone()];
    let y = &spectrum.absorption[window.clone()];
    let n = x.len();

    // Work in coordinates of order one.
    let origin = x[0];
    let scale = x[n - 1] - x[0];
    let u: Vec<f64> = x.iter().map(|v| (v - origin) / scale).collect();
    let to_u = |v: f64| (v - origin) / scale;

    let (i_min, _) =
        y.iter().enumerate().fold(
            (0, f64::INFINITY),
            |b, (i, &v)| if v < b.1 { (i, v) } else { b },
        );
    let (i_max, &peak) =
        y.iter().enumerate().fold(
            (0, &f64::NEG_INFINITY),
            |b, (i, v)| if v > b.1 { (i, v) } else { b },
        );

    let (theta0, symmetric) = match init {
        Some(f) if f.symmetric_limit || !f.q.is_finite() => (
            vec![f.amplitude, to_u(f.center), (f.gamma / scale).ln()],
            true,
        ),
        Some(f) => (
            vec![f.amplitude, f.q, to_u(f.center), (f.gamma / scale).ln()],
            false,
        ),
        None => {
            let interior_zero = i_min > 0 && i_min < n - 1;
            let baseline = 0.5 * (y[0] + y[n - 1]);
            let ratio = peak / baseline - 1.0;
            let q_abs = if ratio > 0.0 {
                ratio.sqrt().max(1e-3)
            } else {
                1e-3
            };
            if !interior_zero || q_abs > SYMMETRIC_Q || !baseline.is_finite() || baseline <= 0.0 {
                let half = lorentz_half_width(&u, y, i_max);
                (vec![peak, u[i_max], half.ln()], true)
            } else {
                let q = if u[i_max] >= u[i_min] { q_abs } else { -q_abs };
                let sep = (u[i_max] - u[i_min]).abs().max(u[1] - u[0]);
                let g = sep / (q_abs + 1.0 / q_abs);
                (vec![peak, q, u[i_min], g.ln()], false)
            }
        }
    };

    let out = if symmetric {
        levenberg_marquardt(&LorentzModel, theta0, &u, y)
    } else {
        levenberg_marquardt(&FanoModel, theta0, &u, y)
    };
    let t = &out.theta;
    let fit = if symmetric {
        FanoFit {
            q: f64::INFINITY,
            gamma: scale * t[2].exp(),
            center: origin + scale * t[1],
            amplitude: t[0],
            residual: (out.cost / n as f64).sqrt(),
            iterations: out.iterations,
            converged: out.converged,
            symmetric_limit: true,
        }
    } else {
        FanoFit {
            q: t[1],
            gamma: scale * t[3].exp(),
            center: origin + scale * t[2],
            amplitude: t[0],
            residual: (out.cost / n as f64).sqrt(),
            iterations: out.iterations,
            converged: out.converged,
            symmetric_limit: t[1].abs() > SYMMETRIC_Q,
        }
    };
    if fit.converged {
        Ok(fit)
    } else {
        Err(Error::NoConvergence {
            best: Box::new(fit),
        })
    }
}

fn lorentz_half_width(u: &[f64], y: &[f64], i_max: usize) -> f64 {
    let half = 0.5 * y[i_max];
    let right = (i_max..u.len())
        .find(|&i| y[i] < half)
        .map(|i| u[i] - u[i_max]);
    let left = (0..=i_max)
        .rev()
        .find(|&i| y[i] < half)
        .map(|i| u[i_max] - u[i]);
    match (left, right) {
        (Some(l), Some(r)) => 0.5 * (l + r),
        (Some(w), None) | (None, Some(w)) => w,
        (None, None) => 0.5,
    }
    .max(u[1] - u[0])
}
