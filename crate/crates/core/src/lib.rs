//! Weak-probe response of a hybrid atom–cavity optomechanical system.
//!
//! A pumped cavity couples to a mechanical mirror through radiation pressure
//! and to a two-level atom with frozen inversion. [`steady`] finds the
//! pump-only operating point, [`response`] the first-order probe sidebands,
//! [`spectrum`] and [`features`] sweep and analyse the absorption, [`fit`]
//! and [`fano`] deal with Fano line shapes and [`oracle`] integrates the
//! equations of motion directly as an independent check.
//!
//! All rates are angular frequencies in rad/s.

pub mod error;
pub mod fano;
pub mod features;
pub mod fit;
pub mod oracle;
pub mod params;
pub mod poly;
pub mod presets;
pub mod response;
pub mod spectrum;
pub mod steady;

pub use error::{Error, Result};
pub use fano::{atom_channel, fano_profile, mech_channel, FanoChannelParams};
pub use features::{extract_features, SpectralFeatures, Thresholds};
pub use fit::{fit_fano, FanoFit};
pub use oracle::{
    compare_with_solver, HarmonicDecomposition, IntegrationPlan, OracleComparison, Trajectory,
};
pub use params::{mhz, to_mhz, DriveParams, SystemParams};
pub use presets::{preset, Preset, PRESET_NAMES};
pub use response::{harmonic_balance_solve, ProbeResponse, ResponseCoefficients};
pub use spectrum::{sweep, sweep_from, NormalizedGrid, Provenance, Spectrum};
pub use steady::{steady_state, BranchPolicy, SteadyState};
