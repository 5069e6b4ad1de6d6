//! Closed-form Fano approximants for the mechanical and atomic channels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::response::beta;
use crate::steady::SteadyState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FanoChannelParams {
    pub q: f64,
    pub gamma: f64,
    /// ω_m(Δ_c − Δ̃)/2; mechanical channel only.
    pub beta: Option<f64>,
    /// Ω = Δ_c − ω_m; mechanical channel only.
    pub omega_offset: Option<f64>,
}

impl FanoChannelParams {
    /// Analytic zero of the profile, `Δ = ω_m`.
    pub fn zero_location(&self, omega_m: f64) -> f64 {
        omega_m
    }

    /// Analytic maximum, `Δ = ω_m + Γ(q + 1/q)`.
    pub fn peak_location(&self, omega_m: f64) -> f64 {
        omega_m + self.gamma * (self.q + 1.0 / self.q)
    }
}

/// `Γ₁ = κβ/(κ² + Ω²)`, `q₁ = −Ω/κ`.
pub fn mech_channel(params: &SystemParams, ss: &SteadyState) -> Result<FanoChannelParams> {
    if params.g_mc == 0.0 {
        return Err(Error::ZeroCoupling("g_mc"));
    }
    if ss.n == 0.0 {
        return Err(Error::ZeroCoupling("intracavity photon number"));
    }
    let b = beta(params, ss);
    let omega = params.delta_c - params.omega_m;
    let k = params.kappa;
    Ok(FanoChannelParams {
        q: -omega / k,
        gamma: k * b / (k * k + omega * omega),
        beta: Some(b),
        omega_offset: Some(omega),
    })
}

/// `Γ₂ = γ_a g_ac²/(γ_a² + Δ_a²)`, `q₂ = −Δ_a/γ_a`.
pub fn atom_channel(params: &SystemParams) -> Result<FanoChannelParams> {
    if params.g_ac == 0.0 {
        return Err(Error::ZeroCoupling("g_ac"));
    }
    let (ga, da) = (params.gamma_a, params.delta_a);
    Ok(FanoChannelParams {
        q: -da / ga,
        gamma: ga * params.g_ac * params.g_ac / (ga * ga + da * da),
        beta: None,
        omega_offset: None,
    })
}

/// `2/(1 + q²) · (x + q)²/(1 + x²)` at reduced detuning `x`.
pub fn profile_at(q: f64, x: f64) -> f64 {
    let w = x + q;
    2.0 / (1.0 + q * q) * w * w / (1.0 + x * x)
}

/// The channel's Fano profile at probe detuning `delta`,
/// with `x = (Δ − ω_m)/Γ − q`.
pub fn fano_profile(channel: &FanoChannelParams, delta: f64, omega_m: f64) -> f64 {
    profile_at(channel.q, (delta - omega_m) / channel.gamma - channel.q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{mhz, DriveParams};
    use crate::presets::preset;
    use crate::response::single_eit_closed_form;
    use crate::steady::{steady_state, BranchPolicy};
    use proptest::prelude::*;

    #[test]
    fn resonant_mech_channel_is_symmetric() {
        let p = preset("fig2").unwrap();
        let ss = steady_state(&p.params, &p.drive, BranchPolicy::Lowest).unwrap();
        let ch = mech_channel(&p.params, &ss).unwrap();
        assert_eq!(ch.q, 0.0);
        assert!(ch.gamma > 0.0);
        assert_eq!(ch.omega_offset, Some(0.0));
    }

    #[test]
    fn fig4_asymmetry_parameter() {
        let p = preset("fig4a").unwrap();
        let ss = steady_state(&p.params, &p.drive, BranchPolicy::Lowest).unwrap();
        let ch = mech_channel(&p.params, &ss).unwrap();
        assert!((ch.q - 5.0).abs() < 1e-12);
    }

    #[test]
    fn zero_coupling_rejected() {
        let p = preset("bare-cavity").unwrap();
        let ss = steady_state(&p.params, &p.drive, BranchPolicy::Lowest).unwrap();
        assert!(matches!(
            mech_channel(&p.params, &ss),
            Err(Error::ZeroCoupling("g_mc"))
        ));
        assert!(matches!(
            atom_channel(&p.params),
            Err(Error::ZeroCoupling("g_ac"))
        ));
        let p = preset("fig2").unwrap();
        let ss =
            steady_state(&p.params, &DriveParams::new(0.0, 1.0), BranchPolicy::Lowest).unwrap();
        assert!(mech_channel(&p.params, &ss).is_err());
    }

    #[test]
    fn atom_channel_on_resonance() {
        let mut p = preset("fig5b").unwrap().params;
        p.delta_a = 0.0;
        let ch = atom_channel(&p).unwrap();
        assert_eq!(ch.q, 0.0);
        assert!((ch.gamma - p.g_ac * p.g_ac / p.gamma_a).abs() < 1e-9 * ch.gamma);
    }

    #[test]
    fn atom_channel_matches_independent_arithmetic() {
        let p = SystemParams {
            gamma_a: mhz(0.01),
            delta_a: mhz(10.0),
            g_ac: mhz(2.0),
            ..SystemParams::default()
        };
        let ch = atom_channel(&p).unwrap();
        // Evaluated separately: 2π·0.01e6 · (2π·2e6)² / ((2π·0.01e6)² + (2π·10e6)²).
        assert!((ch.gamma - 2513.271609600225).abs() < 1e-9 * 2513.27);
        assert!((ch.q + 1000.0).abs() < 1e-9);
    }

    #[test]
    fn fig5_eit_curve_has_large_q() {
        let p = preset("fig5a").unwrap();
        let ch = atom_channel(&p.params).unwrap();
        assert!((ch.q + 1500.0).abs() < 1e-9);
    }

    #[test]
    fn profile_special_points() {
        let ch = FanoChannelParams {
            q: 0.0,
            gamma: 1.0,
            beta: None,
            omega_offset: None,
        };
        assert_eq!(fano_profile(&ch, 10.0, 10.0), 0.0);
        assert!((fano_profile(&ch, 11.3, 10.0) - fano_profile(&ch, 8.7, 10.0)).abs() < 1e-15);
    }

    #[test]
    fn resonant_profile_tracks_single_eit_form() {
        let p = preset("fig2").unwrap();
        let ss = steady_state(&p.params, &p.drive, BranchPolicy::Lowest).unwrap();
        let ch = mech_channel(&p.params, &ss).unwrap();
        let at = |x: f64| {
            let delta = p.params.omega_m + x * ch.gamma;
            let cf = single_eit_closed_form(&p.params, &ss, delta).unwrap().re;
            (cf - fano_profile(&ch, delta, p.params.omega_m)).abs()
        };
        for k in 5..=40 {
            let x = 0.1 * k as f64;
            assert!(at(x) < 5e-2 && at(-x) < 5e-2, "x = ±{x}");
        }
        // The profile neglects γ_m/2 against Γ₁, so the closed form's finite
        // dip floor 2κ/(κ + 2β/γ_m) is missing at the centre.
        let floor =
            2.0 * p.params.kappa / (p.params.kappa + 2.0 * ch.beta.unwrap() / p.params.gamma_m);
        assert!((at(0.0) - floor).abs() < 1e-12);
        assert!(floor > 5e-2);
    }

    proptest! {
        #[test]
        fn profile_is_bounded(q in -20.0f64..20.0, x in -1e3f64..1e3) {
            let v = profile_at(q, x);
            prop_assert!((0.0..=2.0 + 1e-12).contains(&v));
        }

        #[test]
        fn profile_mirror_symmetry(q in -20.0f64..20.0, x in -50.0f64..50.0) {
            let a = profile_at(q, x);
            let b = profile_at(-q, -x);
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }

        #[test]
        fn profile_extremes(q in prop_oneof![-10.0f64..-1e-3, 1e-3f64..10.0]) {
            prop_assert!(profile_at(q, -q).abs() < 1e-12);
            prop_assert!((profile_at(q, 1.0 / q) - 2.0).abs() < 1e-12);
        }
    }
}
