use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config field `{field}` must be {requirement}, got {value}")]
    InvalidConfig {
        field: &'static str,
        requirement: &'static str,
        value: f64,
    },

    #[error("failed to read file: {0}")]
    Io(#[from] std::io::Error),

    #[error("failed to parse JSON: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("vector is not unit length: |v| = {norm}")]
    NotUnitNorm { norm: f64 },

    #[error("protocol needs at least one clap axis")]
    EmptyAxisList,

    #[error("angle {angle} rad outside [0, pi]")]
    AngleOutOfRange { angle: f64 },

    #[error("Bloch angle {name} = {value} rad outside [0, {max}]")]
    BlochAngleOutOfRange {
        name: &'static str,
        value: f64,
        max: f64,
    },

    #[error("grid resolves sigma0 with {nodes_per_sigma:.2} nodes, need >= {required}")]
    GridTooCoarse {
        nodes_per_sigma: f64,
        required: f64,
    },

    #[error("unstable step: {detail}")]
    UnstableStep { detail: String },

    #[error("norm drifted by {drift:.3e} in one grid step (bound {bound:.1e})")]
    NormDrift { drift: f64, bound: f64 },

    #[error("mass {mass:.3e} within one sigma0 of the grid boundary (bound {bound:.1e})")]
    BoundaryLeak { mass: f64, bound: f64 },

    #[error(
        "density {rho:.3e} below the node floor {floor:.3e} at (x={x:.3e}, z={z:.3e}, t={t:.3e})"
    )]
    NodeRegion {
        x: f64,
        z: f64,
        t: f64,
        rho: f64,
        floor: f64,
    },

    #[error("step-halving check failed: final z moved by {delta:.3e} m (bound {bound:.1e})")]
    NonConverged { delta: f64, bound: f64 },

    #[error(
        "packets not separated at the screen: {separation_sigmas:.3} sigma0, need >= {required}"
    )]
    PacketsNotSeparated {
        separation_sigmas: f64,
        required: f64,
    },

    #[error("trajectories do not share a sample time grid")]
    MismatchedTimeGrids,

    #[error("trajectory {index} failed: {source}")]
    TrajectoryFailed {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}
