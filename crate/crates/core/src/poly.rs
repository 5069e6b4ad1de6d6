//! Polynomial root finding: closed-form real cubics and an Aberth iteration
//! for small complex polynomials.

use num_complex::Complex64;

/// Real roots of `a x³ + b x² + c x + d`, ascending.
///
/// Roots come from the depressed-cubic closed form (trigonometric branch when
/// all three are real) and are then polished by Newton's method on the
/// original coefficients.
pub fn real_cubic_roots(a: f64, b: f64, c: f64, d: f64) -> Vec<f64> {
    if a == 0.0 {
        return real_quadratic_roots(b, c, d);
    }
    let (b, c, d) = (b / a, c / a, d / a);
    let shift = b / 3.0;
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let disc = 0.25 * q * q + p * p * p / 27.0;

    let mut roots = if p == 0.0 && q == 0.0 {
        vec![-shift]
    } else if disc > 0.0 {
        // One real root; pick the cube-root branch that avoids cancellation.
        let u = (-0.5 * q - q.signum() * disc.sqrt()).cbrt();
        let t = if u != 0.0 { u - p / (3.0 * u) } else { 0.0 };
        vec![t - shift]
    } else {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        (0..3)
            .map(|k| m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() - shift)
            .collect()
    };

    for r in roots.iter_mut() {
        *r = newton_polish(*r, |x| {
            let f = ((x + b) * x + c) * x + d;
            let df = (3.0 * x + 2.0 * b) * x + c;
            (f, df)
        });
    }
    roots.sort_by(|x, y| x.total_cmp(y));
    roots
}

fn real_quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        return if b == 0.0 { Vec::new() } else { vec![-c / b] };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let s = -0.5 * (b + b.signum() * disc.sqrt());
    let mut roots = if s == 0.0 {
        vec![0.0]
    } else {
        vec![s / a, c / s]
    };
    roots.sort_by(|x, y| x.total_cmp(y));
    roots
}

fn newton_polish(mut x: f64, f: impl Fn(f64) -> (f64, f64)) -> f64 {
    let (mut fx, _) = f(x);
    for _ in 0..4 {
        let (_, dfx) = f(x);
        if dfx == 0.0 || fx == 0.0 {
            break;
        }
        let cand = x - fx / dfx;
        let (fc, _) = f(cand);
        if fc.abs() >= fx.abs() {
            break;
        }
        x = cand;
        fx = fc;
    }
    x
}

/// Evaluates `Σ coeffs[k] x^k`.
pub fn eval_complex(coeffs: &[Complex64], x: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
}

fn derivative(coeffs: &[Complex64]) -> Vec<Complex64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| c * k as f64)
        .collect()
}

/// All complex roots of `Σ coeffs[k] x^k` (ascending order), by the
/// Aberth–Ehrlich simultaneous iteration. Leading zero coefficients are
/// ignored.
pub fn complex_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut len = coeffs.len();
    while len > 0 && coeffs[len - 1] == Complex64::new(0.0, 0.0) {
        len -= 1;
    }
    if len <= 1 {
        return Vec::new();
    }
    let coeffs = &coeffs[..len];
    let degree = len - 1;
    let lead = coeffs[degree];
    let monic: Vec<Complex64> = coeffs.iter().map(|&c| c / lead).collect();
    let dmonic = derivative(&monic);

    // Cauchy bound for the initial circle.
    let radius = 1.0 + monic[..degree].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut z: Vec<Complex64> = (0..degree)
        .map(|k| {
            let angle = 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / degree as f64 + 0.4;
            Complex64::from_polar(0.5 * radius, angle)
        })
        .collect();

    for _ in 0..500 {
        let mut max_step: f64 = 0.0;
        for i in 0..degree {
            let p = eval_complex(&monic, z[i]);
            let dp = eval_complex(&dmonic, z[i]);
            if p == Complex64::new(0.0, 0.0) {
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 = (0..degree)
                .filter(|&j| j != i)
                .map(|j| {
                    let diff = z[i] - z[j];
                    if diff == Complex64::new(0.0, 0.0) {
                        Complex64::new(0.0, 0.0)
                    } else {
                        diff.inv()
                    }
                })
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if step.is_finite() {
                z[i] -= step;
                max_step = max_step.max(step.norm() / z[i].norm().max(1e-300));
            }
        }
        if max_step < 1e-15 {
            break;
        }
    }

    for zi in z.iter_mut() {
        for _ in 0..3 {
            let p = eval_complex(&monic, *zi);
            let dp = eval_complex(&dmonic, *zi);
            if dp == Complex64::new(0.0, 0.0) {
                break;
            }
            let cand = *zi - p / dp;
            if eval_complex(&monic, cand).norm() < p.norm() {
                *zi = cand;
            } else {
                break;
            }
        }
    }
    z.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    z
}
