//! The zero-gravity coin game.
//!
//! A tossed coin in weightlessness keeps twirling until the tosser claps it
//! between two palms; the palm orientation is the measurement context. The
//! clap cannot flip the coin, only straighten it onto the clap axis, so the
//! continuous orientation variable is discretized to heads or tails by the
//! device. Sequential claps along different axes reproduce the textbook
//! sequential spin-measurement patterns, except that the classical agreement
//! probability is a step function of the angle between the axes instead of
//! cos^2(beta/2).

use crate::error::{Error, Result};
use crate::parallel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// |orientation . axis| at or below this counts as "coin on its side":
/// exact orthogonality is measure-zero under floating point, and the
/// 90-degree protocols must land on the random branch robustly.
pub const TIE_EPSILON: f64 = 1e-9;

/// Unit-norm tolerance for stored orientations.
const UNIT_TOLERANCE: f64 = 1e-12;

/// A 3-vector constrained to unit length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitVec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl UnitVec3 {
    /// Accepts a vector already normalized to within 1e-12.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (x * x + y * y + z * z).sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::NotUnitNorm { norm });
        }
        Ok(Self { x, y, z })
    }

    /// Rescales a roughly-unit vector (within 1e-6) to exact unit length.
    /// Intended for vectors read from JSON with truncated digits.
    pub fn normalized(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (x * x + y * y + z * z).sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-6 {
            return Err(Error::NotUnitNorm { norm });
        }
        Ok(Self {
            x: x / norm,
            y: y / norm,
            z: z / norm,
        })
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn negated(&self) -> Self {
        Self {
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    /// Angle to another unit vector, in [0, pi].
    pub fn angle_to(&self, other: &Self) -> f64 {
        self.dot(other).clamp(-1.0, 1.0).acos()
    }
}

/// The coin: still twirling, or straightened onto a definite axis.
///
/// A spinning coin carries no orientation at all; its heads/tails value is
/// not determined before a clap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CoinState {
    Spinning,
    /// Outward normal of the heads face.
    Oriented(UnitVec3),
}

/// The clap context: the outward normal of the tosser's right palm, which is
/// the side that designates heads.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClapAxis {
    pub heads_direction: UnitVec3,
}

impl ClapAxis {
    pub fn new(heads_direction: UnitVec3) -> Self {
        Self { heads_direction }
    }

    pub fn x() -> Self {
        Self::new(UnitVec3 {
            x: 1.0,
            y: 0.0,
            z: 0.0,
        })
    }

    pub fn y() -> Self {
        Self::new(UnitVec3 {
            x: 0.0,
            y: 1.0,
            z: 0.0,
        })
    }

    pub fn z() -> Self {
        Self::new(UnitVec3 {
            x: 0.0,
            y: 0.0,
            z: 1.0,
        })
    }

    /// Axis tilted by `beta` from z in the x-z plane.
    pub fn tilted_from_z(beta: f64) -> Self {
        Self::new(UnitVec3 {
            x: beta.sin(),
            y: 0.0,
            z: beta.cos(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClapLabel {
    Heads,
    Tails,
}

impl ClapLabel {
    fn letter(self) -> char {
        match self {
            ClapLabel::Heads => 'H',
            ClapLabel::Tails => 'T',
        }
    }
}

/// Result of one clap: the announced label and the straightened coin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClapOutcome {
    pub label: ClapLabel,
    pub new_state: CoinState,
}

/// Claps the coin between palms oriented along `axis`.
///
/// A spinning coin lands heads or tails with probability 1/2 each. An
/// oriented coin is straightened, never flipped: the label is decided by the
/// sign of `orientation . heads_direction`, with the on-its-side case
/// (|dot| <= [`TIE_EPSILON`]) resolved by a fair draw. The outgoing
/// orientation is exactly +/- the clap axis.
pub fn clap<R: Rng>(state: &CoinState, axis: &ClapAxis, rng: &mut R) -> ClapOutcome {
    let heads = match state {
        CoinState::Spinning => rng.random_bool(0.5),
        CoinState::Oriented(orientation) => {
            let alignment = orientation.dot(&axis.heads_direction);
            if alignment.abs() <= TIE_EPSILON {
                rng.random_bool(0.5)
            } else {
                alignment > 0.0
            }
        }
    };
    if heads {
        ClapOutcome {
            label: ClapLabel::Heads,
            new_state: CoinState::Oriented(axis.heads_direction),
        }
    } else {
        ClapOutcome {
            label: ClapLabel::Tails,
            new_state: CoinState::Oriented(axis.heads_direction.negated()),
        }
    }
}

/// Per-step frequencies from a repeated clap protocol.
#[derive(Debug, Clone, Serialize)]
pub struct ProtocolStep {
    /// 1-based measurement index.
    pub step: usize,
    /// Angle to the previous clap axis, radians. Absent for the first step.
    pub angle_to_prev: Option<f64>,
    /// Empirical P(Heads) at this step.
    pub p_heads: f64,
    /// Empirical P(label == previous step's label). Absent for the first step.
    pub p_agree_prev: Option<f64>,
}

/// Aggregated outcome of [`run_protocol`].
#[derive(Debug, Clone, Serialize)]
pub struct ProtocolResult {
    pub trials: usize,
    pub seed: u64,
    pub steps: Vec<ProtocolStep>,
    /// Counts of full outcome sequences, keyed like "HTH".
    pub joint_counts: BTreeMap<String, u64>,
}

impl ProtocolResult {
    /// Empirical P(label at step `i` == label at step `j`), 0-based indices,
    /// reconstructed from the joint sequence counts.
    pub fn agreement_between(&self, i: usize, j: usize) -> f64 {
        let agree: u64 = self
            .joint_counts
            .iter()
            .filter(|(seq, _)| seq.as_bytes()[i] == seq.as_bytes()[j])
            .map(|(_, count)| count)
            .sum();
        agree as f64 / self.trials as f64
    }
}

/// Derives the per-trial RNG substream for `(seed, index)`. Trials are
/// independent of each other and of execution order.
pub(crate) fn trial_rng(seed: u64, index: usize) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Runs `trials` independent repetitions of the clap sequence `axes`, the
/// coin starting spinning in each trial. Deterministic given `seed`.
pub fn run_protocol(axes: &[ClapAxis], trials: usize, seed: u64) -> Result<ProtocolResult> {
    if axes.is_empty() {
        return Err(Error::EmptyAxisList);
    }
    assert!(trials >= 1, "need at least one trial");

    let labels: Vec<Vec<ClapLabel>> = parallel::indexed_map(trials, |trial| {
        let mut rng = trial_rng(seed, trial);
        let mut state = CoinState::Spinning;
        axes.iter()
            .map(|axis| {
                let outcome = clap(&state, axis, &mut rng);
                state = outcome.new_state;
                outcome.label
            })
            .collect()
    });

    let mut heads_counts = vec![0u64; axes.len()];
    let mut agree_counts = vec![0u64; axes.len()];
    let mut joint_counts: BTreeMap<String, u64> = BTreeMap::new();
    for sequence in &labels {
        for (step, label) in sequence.iter().enumerate() {
            if *label == ClapLabel::Heads {
                heads_counts[step] += 1;
            }
            if step > 0 && *label == sequence[step - 1] {
                agree_counts[step] += 1;
            }
        }
        let key: String = sequence.iter().map(|l| l.letter()).collect();
        *joint_counts.entry(key).or_insert(0) += 1;
    }

    let n = trials as f64;
    let steps = axes
        .iter()
        .enumerate()
        .map(|(i, axis)| ProtocolStep {
            step: i + 1,
            angle_to_prev: (i > 0)
                .then(|| axes[i - 1].heads_direction.angle_to(&axis.heads_direction)),
            p_heads: heads_counts[i] as f64 / n,
            p_agree_prev: (i > 0).then(|| agree_counts[i] as f64 / n),
        })
        .collect();

    Ok(ProtocolResult {
        trials,
        seed,
        steps,
        joint_counts,
    })
}

/// Analytic agreement probability between two successive claps once the
/// first has oriented the coin: 1 if the axes are less than 90 degrees
/// apart, 0 beyond, 1/2 on the tie band around 90 degrees.
pub fn classical_agreement(beta: f64) -> Result<f64> {
    if !(0.0..=PI).contains(&beta) || !beta.is_finite() {
        return Err(Error::AngleOutOfRange { angle: beta });
    }
    let alignment = beta.cos();
    Ok(if alignment.abs() <= TIE_EPSILON {
        0.5
    } else if alignment > 0.0 {
        1.0
    } else {
        0.0
    })
}

/// Evaluates [`classical_agreement`] over a list of angles.
pub fn classical_agreement_curve(angles: &[f64]) -> Result<Vec<(f64, f64)>> {
    angles
        .iter()
        .map(|&beta| classical_agreement(beta).map(|p| (beta, p)))
        .collect()
}
