//! Shared fixtures for the benchmarks in `benches/`.

use optomech_core::{preset, steady_state, BranchPolicy, Preset, SteadyState};

pub struct Fixture {
    pub preset: Preset,
    pub steady: SteadyState,
}

/// A named preset with its lowest-branch steady state.
pub fn fixture(name: &str) -> Fixture {
    let preset = preset(name).unwrap_or_else(|| panic!("unknown preset {name}"));
    let steady =
        steady_state(&preset.params, &preset.drive, BranchPolicy::Lowest).expect("steady state");
    Fixture { preset, steady }
}
