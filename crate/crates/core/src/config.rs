//! Experimental constants and the beam parameters derived from them.
//!
//! All quantities are SI. Defaults describe a silver-atom beam crossing a
//! strongly inhomogeneous magnet (1 cm long, 10^3 T/m gradient) followed by
//! 20 cm of free flight to the detection screen.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Bohr magneton in J/T, stored as a literal rather than computed from
/// e*hbar/(2*m_e) so the config does not have to carry the electron constants.
pub const MU_BOHR: f64 = 9.274e-24;

/// Reduced Planck constant in J*s.
pub const HBAR: f64 = 1.054571817e-34;

/// Silver atom mass in kg.
pub const SILVER_MASS: f64 = 1.8e-25;

/// Apparatus constants, immutable once validated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalConfig {
    /// Atom mass, kg.
    #[serde(default = "defaults::mass")]
    pub mass: f64,
    /// Reduced Planck constant, J*s.
    #[serde(default = "defaults::hbar")]
    pub hbar: f64,
    /// Bohr magneton, J/T.
    #[serde(default = "defaults::mu_bohr")]
    pub mu_bohr: f64,
    /// Uniform field component B0, T.
    #[serde(default = "defaults::b0")]
    pub b0: f64,
    /// Field gradient B'0, T/m.
    #[serde(default = "defaults::b0_grad")]
    pub b0_grad: f64,
    /// Initial wavepacket standard deviation, m.
    #[serde(default = "defaults::sigma0")]
    pub sigma0: f64,
    /// Magnet length along the beam, m.
    #[serde(default = "defaults::magnet_length")]
    pub magnet_length: f64,
    /// Free path from magnet exit to the screen, m.
    #[serde(default = "defaults::free_path")]
    pub free_path: f64,
    /// Classical beam speed along the propagation axis, m/s.
    #[serde(default = "defaults::v_beam")]
    pub v_beam: f64,
}

mod defaults {
    pub fn mass() -> f64 {
        super::SILVER_MASS
    }
    pub fn hbar() -> f64 {
        super::HBAR
    }
    pub fn mu_bohr() -> f64 {
        super::MU_BOHR
    }
    pub fn b0() -> f64 {
        5.0
    }
    pub fn b0_grad() -> f64 {
        1.0e3
    }
    pub fn sigma0() -> f64 {
        1.0e-4
    }
    pub fn magnet_length() -> f64 {
        1.0e-2
    }
    pub fn free_path() -> f64 {
        0.2
    }
    pub fn v_beam() -> f64 {
        500.0
    }
}

impl Default for PhysicalConfig {
    fn default() -> Self {
        Self {
            mass: defaults::mass(),
            hbar: defaults::hbar(),
            mu_bohr: defaults::mu_bohr(),
            b0: defaults::b0(),
            b0_grad: defaults::b0_grad(),
            sigma0: defaults::sigma0(),
            magnet_length: defaults::magnet_length(),
            free_path: defaults::free_path(),
            v_beam: defaults::v_beam(),
        }
    }
}

impl PhysicalConfig {
    /// Checks the field invariants. The field components `b0` and `b0_grad`
    /// may be zero (switched-off magnet); everything else must be strictly
    /// positive.
    pub fn validate(&self) -> Result<()> {
        let strictly_positive: [(&'static str, f64); 7] = [
            ("mass", self.mass),
            ("hbar", self.hbar),
            ("mu_bohr", self.mu_bohr),
            ("sigma0", self.sigma0),
            ("magnet_length", self.magnet_length),
            ("free_path", self.free_path),
            ("v_beam", self.v_beam),
        ];
        for (field, value) in strictly_positive {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::InvalidConfig {
                    field,
                    requirement: "strictly positive and finite",
                    value,
                });
            }
        }
        for (field, value) in [("b0", self.b0), ("b0_grad", self.b0_grad)] {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::InvalidConfig {
                    field,
                    requirement: "non-negative and finite",
                    value,
                });
            }
        }
        Ok(())
    }
}

/// Kinematics acquired while crossing the magnet, plus the free-flight time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedBeamParams {
    /// Field-crossing time, s.
    pub dt_field: f64,
    /// Packet-center offset at the magnet exit, m.
    pub z_delta: f64,
    /// Packet separation speed at the magnet exit, m/s.
    pub u: f64,
    /// Free-flight time from magnet exit to the screen, s.
    pub t_screen: f64,
}

/// Computes the beam parameters from the apparatus constants:
/// `dt_field = magnet_length / v_beam`, `u = mu_bohr * b0_grad * dt_field / mass`,
/// `z_delta = u * dt_field / 2`, `t_screen = free_path / v_beam`.
///
/// `z_delta = u * dt_field / 2` then holds bit-exactly by construction.
pub fn derive_beam_params(config: &PhysicalConfig) -> Result<DerivedBeamParams> {
    config.validate()?;
    let dt_field = config.magnet_length / config.v_beam;
    let u = config.mu_bohr * config.b0_grad * dt_field / config.mass;
    let z_delta = u * dt_field / 2.0;
    let t_screen = config.free_path / config.v_beam;
    Ok(DerivedBeamParams {
        dt_field,
        z_delta,
        u,
        t_screen,
    })
}

/// Loads a config from a flat JSON object; missing fields take the defaults.
pub fn load_config<P: AsRef<Path>>(path: P) -> Result<PhysicalConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

/// Parses a config from JSON text. Split out of [`load_config`] so in-memory
/// specs (tests, CLI echo) share the validation path.
pub fn parse_config(text: &str) -> Result<PhysicalConfig> {
    let config: PhysicalConfig = serde_json::from_str(text)?;
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn paper_defaults_give_rounded_beam_values() {
        let params = derive_beam_params(&PhysicalConfig::default()).unwrap();
        // magnet_length / v_beam is exactly representable here
        assert_eq!(params.dt_field, 2.0e-5);
        assert_eq!(params.t_screen, 4.0e-4);
        // exact evaluation gives 1.0304...; the textbook values 1 m/s and
        // 1e-5 m are rounded
        assert_relative_eq!(params.u, 1.0304444444444445, max_relative = 1e-14);
        assert_relative_eq!(params.z_delta, 1.0304444444444446e-5, max_relative = 1e-14);
        assert!((params.u - 1.0).abs() / 1.0 < 0.05);
        assert!((params.z_delta - 1.0e-5).abs() / 1.0e-5 < 0.05);
    }

    #[test]
    fn zero_gradient_means_no_splitting() {
        let config = PhysicalConfig {
            b0_grad: 0.0,
            ..Default::default()
        };
        let params = derive_beam_params(&config).unwrap();
        assert_eq!(params.u, 0.0);
        assert_eq!(params.z_delta, 0.0);
    }

    #[test]
    fn halving_magnet_length_quarters_offset() {
        let base = derive_beam_params(&PhysicalConfig::default()).unwrap();
        let config = PhysicalConfig {
            magnet_length: 0.5e-2,
            ..Default::default()
        };
        let half = derive_beam_params(&config).unwrap();
        assert_relative_eq!(half.dt_field, base.dt_field / 2.0, max_relative = 1e-15);
        assert_relative_eq!(half.u, base.u / 2.0, max_relative = 1e-15);
        assert_relative_eq!(half.z_delta, base.z_delta / 4.0, max_relative = 1e-15);
    }

    #[test]
    fn consistency_z_delta_is_half_u_dt() {
        for grad in [1.0, 37.5, 1.0e3, 2.0e4] {
            let config = PhysicalConfig {
                b0_grad: grad,
                ..Default::default()
            };
            let p = derive_beam_params(&config).unwrap();
            assert_eq!(p.z_delta, p.u * p.dt_field / 2.0);
        }
    }

    #[test]
    fn gradient_scaling_is_exact_for_binary_factors() {
        let base = derive_beam_params(&PhysicalConfig::default()).unwrap();
        for k in [2.0, 4.0, 0.5, 1024.0] {
            let config = PhysicalConfig {
                b0_grad: 1.0e3 * k,
                ..Default::default()
            };
            let scaled = derive_beam_params(&config).unwrap();
            assert_eq!(scaled.u, base.u * k);
            assert_eq!(scaled.z_delta, base.z_delta * k);
        }
    }

    #[test]
    fn rejects_nonpositive_fields_by_name() {
        let config = PhysicalConfig {
            sigma0: -1.0,
            ..Default::default()
        };
        match derive_beam_params(&config) {
            Err(Error::InvalidConfig { field, .. }) => assert_eq!(field, "sigma0"),
            other => panic!("expected InvalidConfig, got {other:?}"),
        }
    }

    #[test]
    fn empty_json_object_is_the_default_config() {
        let config = parse_config("{}").unwrap();
        assert_eq!(config, PhysicalConfig::default());
    }

    #[test]
    fn json_overrides_single_field() {
        let config = parse_config(r#"{"b0_grad": 2000}"#).unwrap();
        assert_eq!(config.b0_grad, 2000.0);
        assert_eq!(
            PhysicalConfig {
                b0_grad: 1.0e3,
                ..config
            },
            PhysicalConfig::default()
        );
    }

    #[test]
    fn json_sign_violation_names_the_field() {
        match parse_config(r#"{"sigma0": -1}"#) {
            Err(Error::InvalidConfig { field, .. }) => assert_eq!(field, "sigma0"),
            other => panic!("expected InvalidConfig, got {other:?}"),
        }
    }

    #[test]
    fn json_unknown_field_is_rejected() {
        assert!(parse_config(r#"{"sigma_0": 1e-4}"#).is_err());
    }
}
