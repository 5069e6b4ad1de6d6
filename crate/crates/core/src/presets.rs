//! Named parameter sets for the published spectra, with a few constructed
//! limits used for checks.

use serde::Serialize;

use crate::params::{mhz, DriveParams, SystemParams};
use crate::spectrum::NormalizedGrid;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub params: SystemParams,
    pub drive: DriveParams,
    /// Default sweep grid in units of ω_m.
    pub grid: NormalizedGrid,
}

/// Every preset name accepted by [`preset`], canonical names first.
pub const PRESET_NAMES: &[&str] = &[
    "fig2",
    "fig2-text",
    "fig3",
    "fig4a",
    "fig4b",
    "fig5a",
    "fig5b",
    "fig5c",
    "fig6a",
    "fig6b",
    "fig7a",
    "fig7b",
    "fig7c",
    "bare-cavity",
    "undriven",
    "gain-unstable",
];

const EIT_GRID: NormalizedGrid = NormalizedGrid {
    start: 0.5,
    stop: 1.5,
    count: 2001,
};

const FANO_GRID: NormalizedGrid = NormalizedGrid {
    start: 0.2,
    stop: 1.8,
    count: 2001,
};

/// Cyclic-MHz description of a parameter set.
#[derive(Clone, Copy)]
struct Mhz {
    omega_m: f64,
    kappa: f64,
    gamma_m: f64,
    gamma_a: f64,
    delta_c: f64,
    delta_a: f64,
    g_mc: f64,
    g_ac: f64,
    omega_l: f64,
}

const FIG2: Mhz = Mhz {
    omega_m: 100.0,
    kappa: 4.0,
    gamma_m: 1.0e-3,
    gamma_a: 0.01,
    delta_c: 100.0,
    delta_a: 30.0,
    g_mc: 2.0,
    g_ac: 0.0,
    omega_l: 10.0,
};

impl Mhz {
    fn build(self, name: &'static str, description: &'static str, grid: NormalizedGrid) -> Preset {
        let params = SystemParams {
            omega_m: mhz(self.omega_m),
            kappa: mhz(self.kappa),
            gamma_m: mhz(self.gamma_m),
            gamma_a: mhz(self.gamma_a),
            delta_c: mhz(self.delta_c),
            delta_a: mhz(self.delta_a),
            g_mc: mhz(self.g_mc),
            g_ac: mhz(self.g_ac),
            sigma_z_ss: 1.0,
        };
        Preset {
            name,
            description,
            params,
            drive: DriveParams::weak_probe(mhz(self.omega_l)),
            grid,
        }
    }
}

/// Looks up a preset. `fig4`, `fig5`, `fig6` and `fig7` alias their first
/// variant.
pub fn preset(name: &str) -> Option<Preset> {
    let fig5 = Mhz {
        omega_m: 10.0,
        g_mc: 0.0,
        g_ac: 2.0,
        omega_l: 2.0,
        ..FIG2
    };
    let fig6 = Mhz {
        omega_m: 20.0,
        g_ac: 2.0,
        delta_a: 10.0,
        omega_l: 2.0,
        ..FIG2
    };
    let fig7 = Mhz {
        omega_m: 10.0,
        g_mc: 0.5,
        delta_c: 15.0,
        delta_a: 15.0,
        ..FIG2
    };
    let p = match name {
        "fig2" => FIG2.build("fig2", "single EIT window, g_ac = 0", EIT_GRID),
        "fig2-text" => Mhz {
            omega_l: 20.0,
            ..FIG2
        }
        .build(
            "fig2-text",
            "single EIT window with the stronger pump quoted in the text",
            EIT_GRID,
        ),
        "fig3" => Mhz {
            g_ac: 10.0,
            omega_l: 20.0,
            delta_a: 40.0,
            ..FIG2
        }
        .build(
            "fig3",
            "both couplings on (double-EIT configuration)",
            EIT_GRID,
        ),
        "fig4" | "fig4a" => Mhz {
            omega_l: 20.0,
            delta_c: 80.0,
            ..FIG2
        }
        .build(
            "fig4a",
            "mechanical Fano resonance, g_mc/2π = 2 MHz",
            EIT_GRID,
        ),
        "fig4b" => Mhz {
            omega_l: 20.0,
            delta_c: 80.0,
            g_mc: 4.0,
            ..FIG2
        }
        .build(
            "fig4b",
            "mechanical Fano resonance, g_mc/2π = 4 MHz",
            EIT_GRID,
        ),
        "fig5" | "fig5a" => Mhz {
            delta_a: 15.0,
            delta_c: 15.0,
            ..fig5
        }
        .build("fig5a", "atomic channel, Δ_a = Δ_c = 15 MHz", FANO_GRID),
        "fig5b" => Mhz {
            delta_a: 10.0,
            delta_c: 12.0,
            ..fig5
        }
        .build(
            "fig5b",
            "atomic Fano resonance, Δ_a = 10, Δ_c = 12 MHz",
            FANO_GRID,
        ),
        "fig5c" => Mhz {
            delta_a: 12.0,
            delta_c: 15.0,
            ..fig5
        }
        .build(
            "fig5c",
            "atomic Fano resonance, Δ_a = 12, Δ_c = 15 MHz",
            FANO_GRID,
        ),
        "fig6" | "fig6a" => Mhz {
            g_mc: 0.5,
            delta_c: 25.0,
            ..fig6
        }
        .build("fig6a", "double Fano, g_mc = 0.5, Δ_c = 25 MHz", FANO_GRID),
        "fig6b" => Mhz {
            g_mc: 1.0,
            delta_c: 15.0,
            ..fig6
        }
        .build("fig6b", "double Fano, g_mc = 1, Δ_c = 15 MHz", FANO_GRID),
        "fig7" | "fig7a" => {
            Mhz { g_ac: 1.0, ..fig7 }.build("fig7a", "double Fano, g_ac = 1 MHz", FANO_GRID)
        }
        "fig7b" => {
            Mhz { g_ac: 1.5, ..fig7 }.build("fig7b", "double Fano, g_ac = 1.5 MHz", FANO_GRID)
        }
        "fig7c" => Mhz { g_ac: 2.0, ..fig7 }.build("fig7c", "double Fano, g_ac = 2 MHz", FANO_GRID),
        "bare-cavity" => {
            Mhz { g_mc: 0.0, ..FIG2 }.build("bare-cavity", "both couplings off", EIT_GRID)
        }
        "undriven" => Mhz {
            omega_l: 0.0,
            ..FIG2
        }
        .build("undriven", "pump off, atom decoupled", EIT_GRID),
        "gain-unstable" => Mhz {
            g_mc: 0.0,
            g_ac: 10.0,
            gamma_a: 1.0,
            delta_a: 0.0,
            delta_c: 0.0,
            ..FIG2
        }
        .build(
            "gain-unstable",
            "inverted atom resonant with the cavity, gain exceeds cavity loss (κ_eff < 0)",
            EIT_GRID,
        ),
        _ => return None,
    };
    Some(p)
}
