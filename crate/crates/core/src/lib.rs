//! Simulators for contextual measurement in two settings: the zero-gravity
//! coin-toss game, where clapping hands discretize a continuous coin
//! orientation, and the silver-atom beam experiment, where the magnet
//! discretizes a continuous spin orientation. The quantum side carries the
//! full stack: Pauli spinor wavepackets, a split-operator grid check of the
//! closed-form post-field state, guided trajectories, and ensemble
//! statistics against the measurement postulates.

pub mod bohm;
pub mod coin;
pub mod config;
pub mod error;
pub mod grid;
pub mod parallel;
pub mod pauli;
pub mod stats;
pub mod two_state;

pub use bohm::{
    guidance_velocity, integrate_trajectory, run_ensemble, sample_initial_positions, spin_vector,
    EnsembleSource, ParticleState, SpinVector, Trajectory,
};
pub use coin::{
    clap, classical_agreement_curve, run_protocol, ClapAxis, ClapLabel, ClapOutcome, CoinState,
    ProtocolResult, UnitVec3,
};
pub use config::{derive_beam_params, load_config, DerivedBeamParams, PhysicalConfig};
pub use error::{Error, Result};
pub use grid::{
    evolve_in_field, validate_field, validate_field_with_state, FieldValidation, GradientGauge,
    GridSpec, GridState,
};
pub use pauli::{mixture_density, Spinor, SpinorField};
pub use stats::{
    classify_impact, crossing_check, spot_statistics, CrossingReport, EnsembleResult, ImpactClass,
    Outcome, SpotSummary,
};
pub use two_state::{
    born_up_probability, mixture_up_probability, quantum_agreement_curve, BlochAngles,
    MIXTURE_UP_PROBABILITY,
};
