//! Pump-only operating point: the self-consistent photon number, the static
//! mirror displacement and atomic coherence, and the stability of each branch.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{DriveParams, SystemParams};
use crate::poly::real_cubic_roots;

/// Roots below `-NEGATIVE_TOL * scale` are an algebra failure, anything
/// between that and zero is clamped.
const NEGATIVE_TOL: f64 = 1e-12;
const RESIDUAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BranchPolicy {
    /// Lowest stable root; the lowest root if none is stable.
    #[default]
    Lowest,
    /// Highest stable root; the highest root if none is stable.
    Highest,
    /// The k-th root in ascending order.
    Index(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub c_s: Complex64,
    /// Intracavity photon number |c_s|².
    pub n: f64,
    /// Static mirror displacement (zero-point units).
    pub q_s: f64,
    /// Static atomic coherence ⟨σ₋⟩.
    pub a_s: Complex64,
    /// Δ̃ = Δ_c − χ·n.
    pub delta_tilde: f64,
    /// Every real non-negative photon-number root, ascending.
    pub all_roots: Vec<f64>,
    /// Index of `n` in `all_roots`.
    pub branch: usize,
    pub stable: bool,
    /// Largest real part among the drift-matrix eigenvalues (rad/s).
    pub growth_rate: f64,
}

impl SteadyState {
    /// Turns the warning-grade instability into an error.
    pub fn require_stable(self) -> Result<Self> {
        if self.stable {
            Ok(self)
        } else {
            Err(Error::UnstableBranch {
                index: self.branch,
                growth_rate: self.growth_rate,
            })
        }
    }
}

fn check_dressing(params: &SystemParams) -> Result<()> {
    if params.g_ac > 0.0 && params.gamma_a == 0.0 && params.delta_a == 0.0 {
        return Err(Error::InvalidParameter {
            field: "gamma_a",
            reason: "γ_a and Δ_a cannot both vanish when g_ac > 0".into(),
        });
    }
    let kappa_eff = params.effective_kappa();
    if kappa_eff <= 0.0 {
        return Err(Error::NonPositiveEffectiveDamping { kappa_eff });
    }
    Ok(())
}

/// Real non-negative solutions `n` of `Ω_l² = n·|κ + iΔ̃(n) − g_ac²σ_z/(γ_a + iΔ_a)|²`,
/// ascending.
pub fn photon_number_roots(params: &SystemParams, drive: &DriveParams) -> Result<Vec<f64>> {
    params.validate()?;
    drive.validate()?;
    check_dressing(params)?;

    let omega2 = drive.omega_l_amp * drive.omega_l_amp;
    if omega2 == 0.0 {
        return Ok(vec![0.0]);
    }
    let kappa_eff = params.effective_kappa();
    let d0 = params.effective_detuning();
    let chi = params.frequency_pull();

    if chi == 0.0 {
        return Ok(vec![omega2 / (kappa_eff * kappa_eff + d0 * d0)]);
    }

    // Rescale to u = χ n / r so that u³ − 2d u² + (d² + k²) u − P = 0 has O(1)
    // coefficients.
    let r = d0.abs().max(kappa_eff);
    let (d, k) = (d0 / r, kappa_eff / r);
    let p = omega2 * chi / (r * r * r);
    let us = real_cubic_roots(1.0, -2.0 * d, d * d + k * k, -p);

    let mut roots = Vec::with_capacity(us.len());
    for u in us {
        let n = u * r / chi;
        let n = if n < 0.0 {
            if u < -NEGATIVE_TOL * (1.0 + d.abs()) {
                return Err(Error::NonPhysical(format!(
                    "negative photon-number root n = {n:e}"
                )));
            }
            0.0
        } else {
            n
        };
        let residual = cubic_residual(n, chi, d0, kappa_eff, omega2);
        if residual > RESIDUAL_TOL {
            return Err(Error::NonPhysical(format!(
                "photon-number root n = {n:e} has relative residual {residual:e}"
            )));
        }
        roots.push(n);
    }
    roots.dedup();
    Ok(roots)
}

/// Relative residual of `χ²n³ − 2χD₀n² + (κ_eff² + D₀²)n − Ω²`.
fn cubic_residual(n: f64, chi: f64, d0: f64, kappa_eff: f64, omega2: f64) -> f64 {
    let terms = [
        chi * chi * n * n * n,
        -2.0 * chi * d0 * n * n,
        (kappa_eff * kappa_eff + d0 * d0) * n,
        -omega2,
    ];
    let sum: f64 = terms.iter().sum();
    let scale: f64 = terms.iter().map(|t| t.abs()).sum();
    sum.abs() / scale
}

/// Field amplitude, displacement and coherence for a given photon number.
fn operating_point(
    params: &SystemParams,
    drive: &DriveParams,
    n: f64,
) -> (Complex64, f64, Complex64, f64) {
    let delta_tilde = params.delta_c - params.frequency_pull() * n;
    let den = Complex64::new(params.kappa, delta_tilde) - params.atom_dressing();
    let c_s = Complex64::new(drive.omega_l_amp, 0.0) / den;
    let m = params.mirror_mass();
    let q_s = params.g_mc * n / (m * params.omega_m * params.omega_m);
    let a_s = if params.g_ac == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        Complex64::new(0.0, params.g_ac * params.sigma_z_ss) * c_s
            / Complex64::new(params.gamma_a, params.delta_a)
    };
    (c_s, q_s, a_s, delta_tilde)
}

pub fn steady_state(
    params: &SystemParams,
    drive: &DriveParams,
    policy: BranchPolicy,
) -> Result<SteadyState> {
    let roots = photon_number_roots(params, drive)?;
    let rates: Vec<f64> = roots
        .iter()
        .map(|&n| {
            let (c_s, _, _, delta_tilde) = operating_point(params, drive, n);
            max_growth_rate(params, c_s, delta_tilde)
        })
        .collect();
    let stable = |i: usize| rates[i] < 0.0;

    let branch = match policy {
        BranchPolicy::Lowest => (0..roots.len()).find(|&i| stable(i)).unwrap_or(0),
        BranchPolicy::Highest => (0..roots.len())
            .rev()
            .find(|&i| stable(i))
            .unwrap_or(roots.len() - 1),
        BranchPolicy::Index(k) => {
            if k >= roots.len() {
                return Err(Error::BranchOutOfRange {
                    index: k,
                    count: roots.len(),
                });
            }
            k
        }
    };

    let n = roots[branch];
    let (c_s, q_s, a_s, delta_tilde) = operating_point(params, drive, n);
    let ss = SteadyState {
        c_s,
        n,
        q_s,
        a_s,
        delta_tilde,
        all_roots: roots.clone(),
        branch,
        stable: stable(branch),
        growth_rate: rates[branch],
    };
    if !ss.stable {
        log::warn!(
            "steady-state branch {} (n = {:.6e}) is unstable, growth rate {:.3e} rad/s",
            branch,
            n,
            ss.growth_rate
        );
    }
    Ok(ss)
}

/// Real drift matrix of the linearized fluctuations around `(c_s, Δ̃)`.
///
/// Variable order is `(δq, δp, Re δc, Im δc, Re δσ, Im δσ)`. The mechanical
/// pair is dropped when `g_mc = 0` and the atomic pair when `g_ac = 0`, since
/// a decoupled undamped mode would otherwise read as marginally unstable.
pub fn drift_matrix(params: &SystemParams, c_s: Complex64, delta_tilde: f64) -> DMatrix<f64> {
    let with_mech = params.g_mc > 0.0;
    let with_atom = params.g_ac > 0.0;
    let mech = if with_mech { 0 } else { usize::MAX };
    let cav = if with_mech { 2 } else { 0 };
    let atom = cav + 2;
    let dim = cav + 2 + if with_atom { 2 } else { 0 };
    let mut m = DMatrix::<f64>::zeros(dim, dim);

    // Writes the real 2×2 block of multiplication by `z` from complex slot `col`
    // into complex slot `row`.
    let put = |m: &mut DMatrix<f64>, row: usize, col: usize, z: Complex64| {
        m[(row, col)] += z.re;
        m[(row, col + 1)] -= z.im;
        m[(row + 1, col)] += z.im;
        m[(row + 1, col + 1)] += z.re;
    };

    put(&mut m, cav, cav, -Complex64::new(params.kappa, delta_tilde));
    if with_mech {
        let mass = params.mirror_mass();
        m[(mech, mech + 1)] = 1.0 / mass;
        m[(mech + 1, mech)] = -mass * params.omega_m * params.omega_m;
        m[(mech + 1, mech + 1)] = -params.gamma_m;
        // δp' ∋ g (c_s* δc + c_s δc*) = 2g (Re c_s Re δc + Im c_s Im δc)
        m[(mech + 1, cav)] = 2.0 * params.g_mc * c_s.re;
        m[(mech + 1, cav + 1)] = 2.0 * params.g_mc * c_s.im;
        // δc' ∋ i g c_s δq
        let z = Complex64::new(0.0, params.g_mc) * c_s;
        m[(cav, mech)] = z.re;
        m[(cav + 1, mech)] = z.im;
    }
    if with_atom {
        put(&mut m, cav, atom, Complex64::new(0.0, -params.g_ac));
        put(
            &mut m,
            atom,
            atom,
            -Complex64::new(params.gamma_a, params.delta_a),
        );
        put(
            &mut m,
            atom,
            cav,
            Complex64::new(0.0, params.g_ac * params.sigma_z_ss),
        );
    }
    m
}

/// Largest real part of the drift-matrix spectrum.
pub fn max_growth_rate(params: &SystemParams, c_s: Complex64, delta_tilde: f64) -> f64 {
    drift_matrix(params, c_s, delta_tilde)
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::mhz;
    use crate::presets;

    fn bare(omega_l: f64) -> (SystemParams, DriveParams) {
        let p = SystemParams {
            g_mc: 0.0,
            g_ac: 0.0,
            ..SystemParams::default()
        };
        (p, DriveParams::new(mhz(omega_l), 0.0))
    }

    #[test]
    fn linear_cavity_closed_form() {
        let (p, d) = bare(10.0);
        let roots = photon_number_roots(&p, &d).unwrap();
        assert_eq!(roots.len(), 1);
        let expected = 100.0 / 10016.0;
        assert!(
            (roots[0] - expected).abs() / expected < 1e-13,
            "{}",
            roots[0]
        );
    }

    #[test]
    fn undriven_cavity_has_zero_root() {
        let mut p = presets::preset("fig3").unwrap().params;
        let d = DriveParams::new(0.0, 0.0);
        assert_eq!(photon_number_roots(&p, &d).unwrap(), vec![0.0]);
        p.sigma_z_ss = -1.0;
        let ss = steady_state(&p, &d, BranchPolicy::Lowest).unwrap();
        assert_eq!(ss.c_s, Complex64::new(0.0, 0.0));
        assert_eq!(ss.q_s, 0.0);
        assert_eq!(ss.a_s, Complex64::new(0.0, 0.0));
        assert_eq!(ss.delta_tilde, p.delta_c);
        assert!(ss.stable);
    }

    /// Bisection on n ↦ n|κ + iΔ̃(n)|² − Ω² over [0, Ω²/κ²], independent of
    /// the cubic expansion.
    fn bisect_photon_number(p: &SystemParams, omega_l: f64) -> f64 {
        let chi = 2.0 * p.g_mc * p.g_mc / p.omega_m;
        let f = |n: f64| {
            let dt = p.delta_c - chi * n;
            n * (p.kappa * p.kappa + dt * dt) - omega_l * omega_l
        };
        let (mut lo, mut hi) = (0.0, omega_l * omega_l / (p.kappa * p.kappa));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn fig2_root_matches_bisection_oracle() {
        let pre = presets::preset("fig2").unwrap();
        let oracle = bisect_photon_number(&pre.params, pre.drive.omega_l_amp);
        // Frozen from the bisection oracle: 9.984184797999965e-3
        assert!((oracle - 9.984_184_797_999_965e-3).abs() < 1e-14);
        let roots = photon_number_roots(&pre.params, &pre.drive).unwrap();
        assert_eq!(roots.len(), 1);
        assert!((roots[0] - oracle).abs() / oracle < 1e-12);
    }

    #[test]
    fn steady_state_is_self_consistent() {
        for name in ["fig2", "fig3", "fig4a", "fig6b", "fig7c"] {
            let pre = presets::preset(name).unwrap();
            let ss = steady_state(&pre.params, &pre.drive, BranchPolicy::Lowest).unwrap();
            let den = Complex64::new(pre.params.kappa, ss.delta_tilde) - pre.params.atom_dressing();
            let c = Complex64::new(pre.drive.omega_l_amp, 0.0) / den;
            assert!((c - ss.c_s).norm() / ss.c_s.norm() < 1e-10, "{name}");
            assert!(ss.all_roots.contains(&ss.all_roots[ss.branch]));
            assert_eq!(ss.n, ss.all_roots[ss.branch]);
            assert!((ss.c_s.norm_sqr() - ss.n).abs() <= 1e-10 * ss.n);
        }
    }

    #[test]
    fn decoupled_atom_has_zero_coherence() {
        let pre = presets::preset("fig2").unwrap();
        let ss = steady_state(&pre.params, &pre.drive, BranchPolicy::Lowest).unwrap();
        assert_eq!(ss.a_s, Complex64::new(0.0, 0.0));
        assert!(ss.stable);
    }

    #[test]
    fn weak_drive_limit() {
        let mut p = presets::preset("fig3").unwrap().params;
        p.sigma_z_ss = -1.0;
        let d = DriveParams::new(mhz(1e-3), 0.0);
        let n = photon_number_roots(&p, &d).unwrap()[0];
        assert!(p.frequency_pull() * n < 1e-6 * p.delta_c);
        let k = p.effective_kappa();
        let de = p.effective_detuning();
        let linear = d.omega_l_amp.powi(2) / (k * k + de * de);
        assert!((n - linear).abs() / n < 1e-4);
    }

    #[test]
    fn linear_regime_scaling() {
        let p = presets::preset("fig2").unwrap().params;
        let small = DriveParams::new(mhz(1e-4), 0.0);
        let big = DriveParams::new(mhz(3e-4), 0.0);
        let a = steady_state(&p, &small, BranchPolicy::Lowest).unwrap();
        let b = steady_state(&p, &big, BranchPolicy::Lowest).unwrap();
        assert!(p.frequency_pull() * b.n / p.delta_c < 1e-8);
        let ra = a.c_s / small.omega_l_amp;
        let rb = b.c_s / big.omega_l_amp;
        assert!((ra - rb).norm() / ra.norm() < 1e-6);
    }

    #[test]
    fn bistable_middle_branch_is_unstable() {
        // Strongly driven, blue-of-cavity pump in arbitrary units.
        let p = SystemParams {
            omega_m: 10.0,
            kappa: 0.1,
            gamma_m: 0.01,
            gamma_a: 0.0,
            delta_c: 1.0,
            delta_a: 0.0,
            g_mc: 1.0,
            g_ac: 0.0,
            sigma_z_ss: 1.0,
        };
        let d = DriveParams::new(0.45, 0.0);
        let roots = photon_number_roots(&p, &d).unwrap();
        assert_eq!(roots.len(), 3, "{roots:?}");
        let mid = steady_state(&p, &d, BranchPolicy::Index(1)).unwrap();
        assert!(!mid.stable);
        assert!(matches!(
            mid.require_stable(),
            Err(Error::UnstableBranch { index: 1, .. })
        ));
        let low = steady_state(&p, &d, BranchPolicy::Lowest).unwrap();
        assert_eq!(low.branch, 0);
        assert!(low.stable);
        assert!(matches!(
            steady_state(&p, &d, BranchPolicy::Index(3)),
            Err(Error::BranchOutOfRange { index: 3, count: 3 })
        ));
    }

    #[test]
    fn gain_beyond_cavity_loss_is_rejected() {
        let p = presets::preset("gain-unstable").unwrap();
        assert!(matches!(
            steady_state(&p.params, &p.drive, BranchPolicy::Lowest),
            Err(Error::NonPositiveEffectiveDamping { .. })
        ));
    }

    #[test]
    fn inverted_atom_presets_are_flagged_unstable() {
        let pre = presets::preset("fig3").unwrap();
        let ss = steady_state(&pre.params, &pre.drive, BranchPolicy::Lowest).unwrap();
        assert!(!ss.stable);
        let mut p = pre.params;
        p.sigma_z_ss = -1.0;
        assert!(
            steady_state(&p, &pre.drive, BranchPolicy::Lowest)
                .unwrap()
                .stable
        );
    }
}
