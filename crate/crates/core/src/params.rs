//! Static parameters of the cavity, mirror and atom, plus the pump/probe drive.
//!
//! Every rate and detuning is an angular frequency in rad/s. Use [`mhz`] to
//! convert the cyclic-MHz values quoted in experiments.
//!
//! The mirror coordinate is measured in zero-point units: the oscillator mass
//! is fixed at `1 / (2 ω_m)` with ħ = 1, so `g_mc` is the single-photon
//! optomechanical coupling and the static frequency pull per photon is
//! `χ = 2 g_mc² / ω_m`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Radians per second in one cyclic megahertz.
pub const RAD_PER_MHZ: f64 = 2.0 * std::f64::consts::PI * 1.0e6;

/// Converts a cyclic frequency in MHz to an angular frequency in rad/s.
#[inline]
pub fn mhz(f: f64) -> f64 {
    f * RAD_PER_MHZ
}

/// Converts rad/s back to cyclic MHz.
#[inline]
pub fn to_mhz(omega: f64) -> f64 {
    omega / RAD_PER_MHZ
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Mechanical frequency ω_m.
    pub omega_m: f64,
    /// Cavity decay κ.
    pub kappa: f64,
    /// Mechanical damping γ_m.
    pub gamma_m: f64,
    /// Atomic decay γ_a.
    pub gamma_a: f64,
    /// Cavity–pump detuning Δ_c = ω_c − ω_l.
    pub delta_c: f64,
    /// Atom–pump detuning Δ_a = ω_a − ω_l.
    pub delta_a: f64,
    /// Optomechanical coupling.
    pub g_mc: f64,
    /// Jaynes–Cummings coupling.
    pub g_ac: f64,
    /// Frozen atomic inversion ⟨σ_z⟩.
    pub sigma_z_ss: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            omega_m: mhz(100.0),
            kappa: mhz(4.0),
            gamma_m: mhz(1.0e-3),
            gamma_a: mhz(0.01),
            delta_c: mhz(100.0),
            delta_a: mhz(30.0),
            g_mc: 0.0,
            g_ac: 0.0,
            sigma_z_ss: 1.0,
        }
    }
}

fn check(field: &'static str, ok: bool, reason: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            field,
            reason: reason(),
        })
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("omega_m", self.omega_m),
            ("kappa", self.kappa),
            ("gamma_m", self.gamma_m),
            ("gamma_a", self.gamma_a),
            ("delta_c", self.delta_c),
            ("delta_a", self.delta_a),
            ("g_mc", self.g_mc),
            ("g_ac", self.g_ac),
            ("sigma_z_ss", self.sigma_z_ss),
        ];
        for (name, v) in fields {
            check(name, v.is_finite(), || format!("must be finite, got {v}"))?;
        }
        check("omega_m", self.omega_m > 0.0, || {
            format!("must be > 0, got {}", self.omega_m)
        })?;
        check("kappa", self.kappa > 0.0, || {
            format!("must be > 0, got {}", self.kappa)
        })?;
        check("gamma_m", self.gamma_m >= 0.0, || {
            format!("must be ≥ 0, got {}", self.gamma_m)
        })?;
        check("gamma_a", self.gamma_a >= 0.0, || {
            format!("must be ≥ 0, got {}", self.gamma_a)
        })?;
        check("g_mc", self.g_mc >= 0.0, || {
            format!("must be ≥ 0, got {}", self.g_mc)
        })?;
        check("g_ac", self.g_ac >= 0.0, || {
            format!("must be ≥ 0, got {}", self.g_ac)
        })?;
        check("sigma_z_ss", self.sigma_z_ss.abs() <= 1.0, || {
            format!("must lie in [-1, 1], got {}", self.sigma_z_ss)
        })?;
        if !self.is_sideband_resolved() {
            log::warn!(
                "ω_m = {:.3e} rad/s does not exceed κ = {:.3e} rad/s; outside the sideband-resolved regime",
                self.omega_m,
                self.kappa
            );
        }
        Ok(())
    }

    pub fn is_sideband_resolved(&self) -> bool {
        self.omega_m > self.kappa
    }

    /// Oscillator mass in zero-point units, `1 / (2 ω_m)`.
    #[inline]
    pub fn mirror_mass(&self) -> f64 {
        0.5 / self.omega_m
    }

    /// Static cavity frequency pull per intracavity photon, `g² / (m ω_m²)`.
    #[inline]
    pub fn frequency_pull(&self) -> f64 {
        self.g_mc * self.g_mc / (self.mirror_mass() * self.omega_m * self.omega_m)
    }

    /// The atomic self-energy seen by the pumped cavity, `g_ac² σ_z / (γ_a + iΔ_a)`.
    pub fn atom_dressing(&self) -> Complex64 {
        let g2 = self.g_ac * self.g_ac * self.sigma_z_ss;
        if g2 == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::new(g2, 0.0) / Complex64::new(self.gamma_a, self.delta_a)
    }

    /// Cavity damping including the atomic dressing, `κ − g_ac² γ_a σ_z / (γ_a² + Δ_a²)`.
    pub fn effective_kappa(&self) -> f64 {
        self.kappa - self.atom_dressing().re
    }

    /// Pump detuning including the atomic dressing shift (no radiation pressure).
    pub fn effective_detuning(&self) -> f64 {
        self.delta_c - self.atom_dressing().im
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveParams {
    /// Pump amplitude Ω_l (real, non-negative).
    pub omega_l_amp: f64,
    /// Probe amplitude ε_p (real, non-negative).
    pub eps_p: f64,
}

impl DriveParams {
    pub fn new(omega_l_amp: f64, eps_p: f64) -> Self {
        Self { omega_l_amp, eps_p }
    }

    /// Pump `omega_l_amp` with the default probe `ε_p = 10⁻³ Ω_l`, or
    /// `2π · 1 kHz` when the pump is off.
    pub fn weak_probe(omega_l_amp: f64) -> Self {
        let eps_p = if omega_l_amp > 0.0 {
            1.0e-3 * omega_l_amp
        } else {
            mhz(1.0e-3)
        };
        Self::new(omega_l_amp, eps_p)
    }

    pub fn validate(&self) -> Result<()> {
        check(
            "omega_l_amp",
            self.omega_l_amp.is_finite() && self.omega_l_amp >= 0.0,
            || format!("must be finite and ≥ 0, got {}", self.omega_l_amp),
        )?;
        check("eps_p", self.eps_p.is_finite() && self.eps_p >= 0.0, || {
            format!("must be finite and ≥ 0, got {}", self.eps_p)
        })?;
        if self.omega_l_amp > 0.0 && self.eps_p > 1.0e-2 * self.omega_l_amp {
            log::warn!(
                "probe ε_p = {:.3e} is not much weaker than the pump Ω_l = {:.3e}",
                self.eps_p,
                self.omega_l_amp
            );
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mhz_round_trip() {
        assert!((to_mhz(mhz(12.5)) - 12.5).abs() < 1e-12);
        assert!((mhz(1.0) - 6.283185307179586e6).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_fields() {
        let p = SystemParams {
            kappa: 0.0,
            ..Default::default()
        };
        assert!(matches!(
            p.validate(),
            Err(Error::InvalidParameter { field: "kappa", .. })
        ));
        let p = SystemParams {
            sigma_z_ss: 1.5,
            ..Default::default()
        };
        assert!(matches!(
            p.validate(),
            Err(Error::InvalidParameter {
                field: "sigma_z_ss",
                ..
            })
        ));
        let p = SystemParams {
            g_ac: -1.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        let p = SystemParams {
            gamma_m: f64::NAN,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        assert!(DriveParams::new(-1.0, 0.0).validate().is_err());
        assert!(DriveParams::new(1.0, f64::INFINITY).validate().is_err());
    }

    #[test]
    fn frequency_pull_is_unit_independent() {
        let p = SystemParams {
            g_mc: mhz(2.0),
            ..SystemParams::default()
        };
        // χ / (2π MHz) must not depend on whether we work in rad/s or rad/µs.
        let chi_mhz = to_mhz(p.frequency_pull());
        assert!((chi_mhz - 2.0 * 4.0 / 100.0).abs() < 1e-12);
    }

    #[test]
    fn dressing_vanishes_without_atom() {
        let p = SystemParams::default();
        assert_eq!(p.effective_kappa(), p.kappa);
        assert_eq!(p.effective_detuning(), p.delta_c);
    }
}
