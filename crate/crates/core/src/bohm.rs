//! The particle layer: positions guided by the spinor.
//!
//! The particle always has a position; the wave guides it. The guidance law
//! `v = (hbar / (m rho)) Im(psi^dag grad psi)` reduces, for the two-packet
//! states of [`crate::pauli`], to
//!
//! ```text
//! v_z(z, t) = v_packet(t) * (w+ - w-) / (w+ + w-)
//! ```
//!
//! with `w+/-` the local packet weights: a weighted average of the two packet
//! velocities. The weight ratio is evaluated in log space so the formula
//! stays exact deep inside one packet, where the other weight underflows.
//! Transverse motion vanishes identically (no x-dependent phase), so
//! trajectories are integrated in z alone while x rides along.
//!
//! Ensembles draw initial positions from the entry packet density, integrate
//! every trajectory through the field and the free flight, and classify the
//! impacts; their up/down statistics are what reproduce the measurement
//! postulate.

use crate::config::PhysicalConfig;
use crate::error::{Error, Result};
use crate::parallel;
use crate::pauli::SpinorField;
use crate::stats::{classify_impact, EnsembleResult, Outcome};
use crate::two_state::{born_up_probability, BlochAngles};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// Density floor relative to the field's density ceiling; below it the
/// particle sits in a numerical node and the integrator step is rejected.
/// The two packets never fully cancel off the symmetry axis in this
/// geometry, so hitting the floor indicates a bug or a pathological input.
pub const DENSITY_FLOOR_SCALE: f64 = 1e-300;

/// Step-halving acceptance bound on the final z, in meters.
pub const STEP_HALVING_BOUND: f64 = 1e-8;

const LN_FLOOR: f64 = -690.775527898214; // ln(1e-300)

/// Particle position at a moment of the field's local clock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleState {
    pub x: f64,
    pub z: f64,
    pub t: f64,
}

/// The spin vector carried by the wave at a point, magnitude hbar/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinVector {
    pub sx: f64,
    pub sy: f64,
    pub sz: f64,
    /// Polar angle recovered as arccos(2 sz / hbar), in [0, pi].
    pub theta: f64,
    /// Azimuth in [0, 2 pi); equals phi0 at t = 0.
    pub phi: f64,
}

/// One recorded point of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub x: f64,
    pub z: f64,
    pub vz: f64,
    pub theta_spin: f64,
}

/// A Bohmian trajectory: time-ordered samples plus its provenance.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub x0: f64,
    pub z0: f64,
    pub angles: BlochAngles,
    pub samples: Vec<TrajectorySample>,
    /// Set by ensemble classification.
    pub outcome: Option<crate::stats::ImpactClass>,
}

impl Trajectory {
    pub fn final_sample(&self) -> &TrajectorySample {
        self.samples.last().expect("trajectory has samples")
    }
}

/// What prepared the trajectories of an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EnsembleSource {
    Pure { theta0: f64, phi0: f64 },
    Mixture,
}

impl EnsembleSource {
    pub fn pure(angles: BlochAngles) -> Self {
        Self::Pure {
            theta0: angles.theta0,
            phi0: angles.phi0,
        }
    }
}

fn node_check(field: &SpinorField, state: &ParticleState) -> Result<(f64, f64)> {
    let (lw_plus, lw_minus) = field.log_weights(state.z, state.t);
    // ln(rho / ceiling) up to a factor 2: the x envelope plus the larger
    // packet weight
    let ln_rho = -state.x * state.x / (2.0 * field.sigma_squared()) + lw_plus.max(lw_minus);
    if ln_rho.is_nan() || ln_rho <= LN_FLOOR {
        return Err(Error::NodeRegion {
            x: state.x,
            z: state.z,
            t: state.t,
            rho: ln_rho.exp() * field.density_ceiling(),
            floor: DENSITY_FLOOR_SCALE * field.density_ceiling(),
        });
    }
    Ok((lw_plus, lw_minus))
}

/// Guidance velocity `(v_x, v_z)` at the particle position.
///
/// `v_x` is identically zero: the x envelope carries no phase. `v_z` is the
/// packet velocity weighted by `tanh` of half the log-weight gap, which
/// equals `(w+ - w-) / (w+ + w-)` exactly.
pub fn guidance_velocity(field: &SpinorField, state: &ParticleState) -> Result<[f64; 2]> {
    let (lw_plus, lw_minus) = node_check(field, state)?;
    let balance = ((lw_plus - lw_minus) / 2.0).tanh();
    Ok([0.0, field.packet_velocity(state.t) * balance])
}

/// Spin vector at the particle position.
///
/// The polar angle comes from the amplitude ratio, `theta = 2 atan2(|psi-|,
/// |psi+|)`, which is exact where one amplitude underflows; the azimuth from
/// the relative phase of the components.
pub fn spin_vector(field: &SpinorField, state: &ParticleState) -> Result<SpinVector> {
    let (lw_plus, lw_minus) = node_check(field, state)?;
    let reference = lw_plus.max(lw_minus);
    let amp_plus = ((lw_plus - reference) / 2.0).exp();
    let amp_minus = ((lw_minus - reference) / 2.0).exp();
    let theta = 2.0 * amp_minus.atan2(amp_plus);
    let delta = field.phase_difference(state.z, state.t);
    let half_hbar = field.config().hbar / 2.0;
    let (sin_theta, cos_theta) = theta.sin_cos();
    let sx = half_hbar * sin_theta * delta.cos();
    let sy = half_hbar * sin_theta * delta.sin();
    let sz = half_hbar * cos_theta;
    let phi = (-sy).atan2(sx).rem_euclid(TAU);
    Ok(SpinVector {
        sx,
        sy,
        sz,
        theta,
        phi,
    })
}

/// Integrates the guidance equation with fixed-step classical fourth-order
/// Runge-Kutta from `initial.t` to `t_end`.
///
/// Samples are recorded densely enough that consecutive z values differ by
/// less than sigma0/10 at the packet speed. After the main pass the whole
/// integration is repeated at half the step; if the final z moves by more
/// than [`STEP_HALVING_BOUND`] the result is rejected as unconverged.
pub fn integrate_trajectory(
    field: &SpinorField,
    initial: &ParticleState,
    dt: f64,
    t_end: f64,
) -> Result<Trajectory> {
    assert!(dt > 0.0, "dt must be positive");
    assert!(t_end > initial.t, "t_end must exceed the initial time");

    let span = t_end - initial.t;
    let n_steps = ((span / dt) - 1e-9).ceil().max(1.0) as usize;
    let sample_every = sample_cadence(field, dt);

    let mut samples = Vec::with_capacity(n_steps / sample_every + 2);
    let mut record = |state: &ParticleState| -> Result<()> {
        let v = guidance_velocity(field, state)?;
        let spin = spin_vector(field, state)?;
        samples.push(TrajectorySample {
            t: state.t,
            x: state.x,
            z: state.z,
            vz: v[1],
            theta_spin: spin.theta,
        });
        Ok(())
    };

    let mut state = *initial;
    record(&state)?;
    let z_final = {
        let step = span / n_steps as f64;
        for k in 0..n_steps {
            state.z = rk4_step(field, &state, step)?;
            state.t = initial.t + (k + 1) as f64 * step;
            if (k + 1) % sample_every == 0 || k + 1 == n_steps {
                state.t = if k + 1 == n_steps { t_end } else { state.t };
                record(&state)?;
            }
        }
        state.z
    };

    // self-check: rerun at half the step and compare the endpoint
    let mut check = *initial;
    let half_step = span / (2 * n_steps) as f64;
    for k in 0..2 * n_steps {
        check.z = rk4_step(field, &check, half_step)?;
        check.t = initial.t + (k + 1) as f64 * half_step;
    }
    let delta = (check.z - z_final).abs();
    if delta >= STEP_HALVING_BOUND {
        return Err(Error::NonConverged {
            delta,
            bound: STEP_HALVING_BOUND,
        });
    }

    Ok(Trajectory {
        x0: initial.x,
        z0: initial.z,
        angles: field.angles(),
        samples,
        outcome: None,
    })
}

/// Recording cadence in steps: |dz| between samples stays under sigma0/10
/// with a factor-2 margin. Coarser external steps record every step.
fn sample_cadence(field: &SpinorField, dt: f64) -> usize {
    let top_speed = field.beam_params().u;
    if top_speed <= 0.0 {
        return 50;
    }
    let budget = field.config().sigma0 / 10.0;
    ((budget / (top_speed * dt) / 2.0) as usize).max(1)
}

fn rk4_step(field: &SpinorField, state: &ParticleState, dt: f64) -> Result<f64> {
    let v = |z: f64, t: f64| -> Result<f64> {
        guidance_velocity(
            field,
            &ParticleState {
                x: state.x,
                z,
                t,
            },
        )
        .map(|v| v[1])
    };
    let half = dt / 2.0;
    let k1 = v(state.z, state.t)?;
    let k2 = v(state.z + half * k1, state.t + half)?;
    let k3 = v(state.z + half * k2, state.t + half)?;
    let k4 = v(state.z + dt * k3, state.t + dt)?;
    Ok(state.z + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
}

/// Per-trajectory RNG substream for `(seed, index)`.
fn trajectory_rng(seed: u64, index: usize) -> rand_chacha::ChaCha12Rng {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Draws `n` initial positions from the entry packet density |psi_0|^2:
/// independent Gaussians with standard deviation sigma0 in x and z.
pub fn sample_initial_positions(
    n: usize,
    config: &PhysicalConfig,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    config.validate()?;
    assert!(n >= 1, "need at least one sample");
    let normal = Normal::new(0.0, config.sigma0).expect("sigma0 validated positive");
    Ok(parallel::indexed_map(n, |index| {
        let mut rng = trajectory_rng(seed, index);
        let x0 = normal.sample(&mut rng);
        let z0 = normal.sample(&mut rng);
        (x0, z0)
    }))
}

/// Default integrator step: the free-flight time split into 4000 steps.
pub fn default_integrator_dt(config: &PhysicalConfig) -> Result<f64> {
    let params = crate::config::derive_beam_params(config)?;
    Ok(params.t_screen / 4000.0)
}

/// Runs an ensemble of `n` trajectories from entry to screen and classifies
/// every impact. Deterministic given `seed`; trajectory `index` draws the
/// substream `(seed, index)`, so results do not depend on scheduling.
///
/// For a mixture source each trajectory first draws its own preparation,
/// theta0 uniform on [0, pi] and phi0 uniform on [0, 2 pi), then its initial
/// position.
pub fn run_ensemble(
    source: EnsembleSource,
    n: usize,
    config: &PhysicalConfig,
    seed: u64,
) -> Result<EnsembleResult> {
    run_ensemble_with_dt(source, n, config, seed, default_integrator_dt(config)?)
}

/// [`run_ensemble`] with an explicit integrator step.
pub fn run_ensemble_with_dt(
    source: EnsembleSource,
    n: usize,
    config: &PhysicalConfig,
    seed: u64,
    dt: f64,
) -> Result<EnsembleResult> {
    assert!(n >= 1, "need at least one trajectory");
    let params = crate::config::derive_beam_params(config)?;
    // fail before integrating anything if the screen statistics would be
    // meaningless
    classify_impact(config.sigma0, &params, config)?;

    let shared_field = match source {
        EnsembleSource::Pure { theta0, phi0 } => Some(SpinorField::beam(
            BlochAngles::new(theta0, phi0)?,
            config,
        )?),
        EnsembleSource::Mixture => None,
    };
    let normal = Normal::new(0.0, config.sigma0).expect("sigma0 validated positive");
    let t_total = params.dt_field + params.t_screen;

    let runs: Vec<Result<Trajectory>> = parallel::indexed_map(n, |index| {
        let mut rng = trajectory_rng(seed, index);
        let local_field;
        let field = match &shared_field {
            Some(shared) => shared,
            None => {
                let theta0 = rng.random_range(0.0..=PI);
                let phi0 = rng.random_range(0.0..TAU);
                local_field = SpinorField::beam(BlochAngles::new(theta0, phi0)?, config)?;
                &local_field
            }
        };
        let x0 = normal.sample(&mut rng);
        let z0 = normal.sample(&mut rng);
        let start = ParticleState {
            x: x0,
            z: z0,
            t: 0.0,
        };
        let mut trajectory = integrate_trajectory(field, &start, dt, t_total)?;
        let impact = classify_impact(trajectory.final_sample().z, &params, config)?;
        trajectory.outcome = Some(impact);
        Ok(trajectory)
    });

    let mut trajectories = Vec::with_capacity(n);
    for (index, run) in runs.into_iter().enumerate() {
        match run {
            Ok(trajectory) => trajectories.push(trajectory),
            Err(source) => {
                return Err(Error::TrajectoryFailed {
                    index,
                    source: Box::new(source),
                })
            }
        }
    }

    let n_up = trajectories
        .iter()
        .filter(|t| t.outcome.map(|o| o.outcome) == Some(Outcome::Up))
        .count();
    let born_expected = match source {
        EnsembleSource::Pure { theta0, phi0 } => {
            Some(born_up_probability(&BlochAngles::new(theta0, phi0)?))
        }
        EnsembleSource::Mixture => None,
    };

    Ok(EnsembleResult {
        n,
        n_up,
        n_down: n - n_up,
        fraction_up: n_up as f64 / n as f64,
        born_expected,
        source,
        seed,
        trajectories,
    })
}
