//! Measurement-postulate predictions for a two-state system.
//!
//! Everything here is closed-form probability theory on the Bloch sphere:
//! the up/down probabilities of a pure spinor, the 50/50 average over an
//! unknown preparation, and the agreement probability between two sequential
//! measurements whose apparatuses differ by an angle. These are the numbers
//! the trajectory ensembles in [`crate::bohm`] have to reproduce.

use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Polar angles of a pure spin state on the Bloch sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochAngles {
    /// Polar angle in [0, pi].
    pub theta0: f64,
    /// Azimuthal angle in [0, 2*pi).
    pub phi0: f64,
}

impl BlochAngles {
    pub fn new(theta0: f64, phi0: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&theta0) || !theta0.is_finite() {
            return Err(Error::BlochAngleOutOfRange {
                name: "theta0",
                value: theta0,
                max: PI,
            });
        }
        if !(0.0..2.0 * PI).contains(&phi0) || !phi0.is_finite() {
            return Err(Error::BlochAngleOutOfRange {
                name: "phi0",
                value: phi0,
                max: 2.0 * PI,
            });
        }
        Ok(Self { theta0, phi0 })
    }
}

/// Probability of measuring spin +hbar/2 along z: cos^2(theta0/2).
///
/// Computed as `(1 + cos(theta0)) / 2`, which keeps
/// `born_up + born_down == 1` exact in floating point and lands on 0.5
/// exactly at theta0 = pi/2. Independent of phi0.
pub fn born_up_probability(angles: &BlochAngles) -> f64 {
    (1.0 + angles.theta0.cos()) / 2.0
}

/// Probability of measuring spin -hbar/2 along z, defined as the exact
/// complement of [`born_up_probability`].
pub fn born_down_probability(angles: &BlochAngles) -> f64 {
    1.0 - born_up_probability(angles)
}

/// Closed-form up-probability when theta0 is uniform on [0, pi]:
/// (1/pi) * integral of cos^2(theta/2) = 1/2.
pub const MIXTURE_UP_PROBABILITY: f64 = 0.5;

/// Monte Carlo estimate of the up-probability for an unknown preparation,
/// averaging cos^2(theta0/2) over theta0 uniform on [0, pi].
///
/// Converges to [`MIXTURE_UP_PROBABILITY`]. Samples are accumulated in fixed
/// 4096-sample blocks so the sum is independent of any outer parallelism.
pub fn mixture_up_probability<R: Rng>(theta_samples: usize, rng: &mut R) -> f64 {
    assert!(theta_samples >= 1, "need at least one sample");
    const BLOCK: usize = 4096;
    let mut total = 0.0;
    let mut remaining = theta_samples;
    while remaining > 0 {
        let take = remaining.min(BLOCK);
        let mut block = 0.0;
        for _ in 0..take {
            let theta = rng.random_range(0.0..=PI);
            block += (1.0 + theta.cos()) / 2.0;
        }
        total += block;
        remaining -= take;
    }
    total / theta_samples as f64
}

/// Probability that a second apparatus, rotated by `beta` from the first,
/// repeats the first measurement's outcome: cos^2(beta/2).
pub fn quantum_agreement(beta: f64) -> Result<f64> {
    if !(0.0..=PI).contains(&beta) || !beta.is_finite() {
        return Err(Error::AngleOutOfRange { angle: beta });
    }
    Ok((1.0 + beta.cos()) / 2.0)
}

/// Evaluates [`quantum_agreement`] over a list of angles.
pub fn quantum_agreement_curve(angles: &[f64]) -> Result<Vec<(f64, f64)>> {
    angles
        .iter()
        .map(|&beta| quantum_agreement(beta).map(|p| (beta, p)))
        .collect()
}
