//! Screen statistics: impact classification, spot fractions against the
//! Born prediction, and trajectory-geometry checks.

use crate::bohm::{EnsembleSource, Trajectory};
use crate::config::{DerivedBeamParams, PhysicalConfig};
use crate::error::{Error, Result};
use serde::Serialize;

/// Minimum packet separation at the screen, in units of sigma0, for the
/// sign-of-z classification to be meaningful. At 3 sigma the mass landing on
/// the wrong side of z = 0 is below 0.15%.
pub const MIN_SEPARATION_SIGMAS: f64 = 3.0;

/// Spot a trajectory ends in. `Up` corresponds to the +hbar/2 eigenvalue of
/// the z spin operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Outcome {
    Up,
    Down,
}

/// Classification of one impact; `tie` flags the measure-zero z = 0 case,
/// which goes Up by convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImpactClass {
    pub outcome: Outcome,
    pub tie: bool,
}

/// All trajectories of one ensemble run plus its headline counts.
#[derive(Debug, Clone)]
pub struct EnsembleResult {
    pub n: usize,
    pub n_up: usize,
    pub n_down: usize,
    pub fraction_up: f64,
    /// cos^2(theta0/2) for a pure source; absent for a mixture.
    pub born_expected: Option<f64>,
    pub source: EnsembleSource,
    pub seed: u64,
    pub trajectories: Vec<Trajectory>,
}

/// Classifies an impact at the screen by the sign of z.
///
/// Requires the packet centers to sit at least [`MIN_SEPARATION_SIGMAS`]
/// sigma0 apart at screen time; below that the two spots overlap and the
/// sign carries no spin information.
pub fn classify_impact(
    z_screen: f64,
    params: &DerivedBeamParams,
    config: &PhysicalConfig,
) -> Result<ImpactClass> {
    let separation = (params.z_delta + params.u * params.t_screen) / config.sigma0;
    if separation < MIN_SEPARATION_SIGMAS {
        return Err(Error::PacketsNotSeparated {
            separation_sigmas: separation,
            required: MIN_SEPARATION_SIGMAS,
        });
    }
    if z_screen > 0.0 {
        Ok(ImpactClass {
            outcome: Outcome::Up,
            tie: false,
        })
    } else if z_screen < 0.0 {
        Ok(ImpactClass {
            outcome: Outcome::Down,
            tie: false,
        })
    } else {
        Ok(ImpactClass {
            outcome: Outcome::Up,
            tie: true,
        })
    }
}

/// Spot fractions with a binomial error bar and, when the source is pure, a
/// z-score against the Born expectation.
#[derive(Debug, Clone, Serialize)]
pub struct SpotSummary {
    pub n: usize,
    pub n_up: usize,
    pub n_down: usize,
    pub fraction_up: f64,
    pub fraction_down: f64,
    /// sqrt(p(1-p)/n) at the observed fraction.
    pub binomial_stderr: f64,
    pub born_expected: Option<f64>,
    /// (observed - expected) / sqrt(p_born (1 - p_born) / n).
    pub born_z_score: Option<f64>,
    /// |z| <= 4 when present.
    pub consistent_with_born: Option<bool>,
    /// Too few counts for a meaningful error bar.
    pub degenerate_stderr: bool,
}

/// Consistency threshold on the Born z-score, in standard errors.
pub const BORN_Z_THRESHOLD: f64 = 4.0;

pub fn spot_statistics(result: &EnsembleResult) -> SpotSummary {
    let n = result.n as f64;
    let p = result.fraction_up;
    let stderr = (p * (1.0 - p) / n).sqrt();
    let born_z_score = result.born_expected.map(|expected| {
        let spread = (expected * (1.0 - expected) / n).sqrt();
        (p - expected) / spread
    });
    SpotSummary {
        n: result.n,
        n_up: result.n_up,
        n_down: result.n_down,
        fraction_up: p,
        fraction_down: 1.0 - p,
        binomial_stderr: stderr,
        born_expected: result.born_expected,
        born_z_score,
        consistent_with_born: born_z_score.map(|z| z.abs() <= BORN_Z_THRESHOLD),
        degenerate_stderr: result.n < 2 || stderr == 0.0,
    }
}

/// Outcome of a pairwise trajectory-crossing scan.
#[derive(Debug, Clone, Serialize)]
pub struct CrossingReport {
    pub pairs_checked: usize,
    /// Total z-order sign flips across consecutive shared sample times,
    /// summed over all pairs.
    pub crossings: usize,
    /// True when crossings occur although every trajectory came from one
    /// pure state, which a single-valued velocity field forbids.
    pub pure_state_violation: bool,
}

/// Counts z-order crossings between all trajectory pairs at their shared
/// sample times. Trajectories must share the time grid (ensembles built by
/// [`crate::bohm::run_ensemble`] do).
///
/// The ensemble counts as pure when all trajectories carry identical
/// preparation angles.
pub fn crossing_check(trajectories: &[Trajectory]) -> Result<CrossingReport> {
    if let Some(first) = trajectories.first() {
        let reference: Vec<f64> = first.samples.iter().map(|s| s.t).collect();
        for trajectory in trajectories.iter().skip(1) {
            if trajectory.samples.len() != reference.len()
                || trajectory
                    .samples
                    .iter()
                    .zip(&reference)
                    .any(|(s, &t)| s.t != t)
            {
                return Err(Error::MismatchedTimeGrids);
            }
        }
    }

    let mut crossings = 0usize;
    let mut pairs_checked = 0usize;
    for i in 0..trajectories.len() {
        for j in (i + 1)..trajectories.len() {
            pairs_checked += 1;
            let a = &trajectories[i].samples;
            let b = &trajectories[j].samples;
            let mut previous = 0.0f64;
            for (sa, sb) in a.iter().zip(b.iter()) {
                let gap = sa.z - sb.z;
                if gap * previous < 0.0 {
                    crossings += 1;
                }
                if gap != 0.0 {
                    previous = gap;
                }
            }
        }
    }

    let pure = trajectories
        .windows(2)
        .all(|pair| pair[0].angles == pair[1].angles);
    Ok(CrossingReport {
        pairs_checked,
        crossings,
        pure_state_violation: pure && crossings > 0,
    })
}
