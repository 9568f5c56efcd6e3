//! Spinor wavepackets: the initial two-component Gaussian, its closed-form
//! state after crossing the field gradient, and the associated densities.
//!
//! The apparatus splits the spinor into an up packet and a down packet whose
//! centers separate at speed `2u` around `+/-(z_delta + u t)`. Amplitude
//! envelopes keep the initial width `sigma0`: free spreading changes sigma by
//! a relative 1e-13 during the crossing and 1e-10 by screen time at these
//! masses, far below every tolerance used here (the grid solver in
//! [`crate::grid`] checks that estimate). Densities are phase-blind, so the
//! overall phase constants and the Larmor precession accumulated under the
//! uniform field component never show up in them.

use crate::config::{derive_beam_params, DerivedBeamParams, PhysicalConfig};
use crate::error::Result;
use crate::two_state::{born_up_probability, BlochAngles};
use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, PI};

/// Two complex amplitudes at one spacetime point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spinor {
    pub plus: Complex64,
    pub minus: Complex64,
}

impl Spinor {
    /// Local probability density |psi+|^2 + |psi-|^2.
    pub fn density(&self) -> f64 {
        self.plus.norm_sqr() + self.minus.norm_sqr()
    }
}

/// Which closed-form solution the field evaluates, and what its time
/// argument means.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// The state at the magnet entrance; valid at t = 0.
    Initial,
    /// The state after the field, on the post-exit clock (t = 0 at the
    /// magnet exit, packet centers at +/-(z_delta + u t)).
    PostField,
    /// Entry-to-screen description on the entry clock: inside the field
    /// (t <= dt_field) the packet centers follow the constant-force arc
    /// +/- a t^2 / 2 and the packet speed grows as a t; past the exit it
    /// continues into the post-field form. This is the field trajectories
    /// are integrated in.
    Beam,
}

/// A spinor wavepacket evaluated from closed form.
#[derive(Debug, Clone)]
pub struct SpinorField {
    regime: Regime,
    angles: BlochAngles,
    config: PhysicalConfig,
    params: DerivedBeamParams,
    /// Post-field phase constants; they cancel from every density and
    /// velocity difference.
    phi_plus: f64,
    phi_minus: f64,
    amp_plus: f64,
    amp_minus: f64,
    weight_plus: f64,
    weight_minus: f64,
    ln_weight_plus: f64,
    ln_weight_minus: f64,
    /// (2 pi sigma0^2)^(-1/2)
    norm: f64,
    /// mu_B * b0_grad / mass: packet acceleration inside the field.
    accel: f64,
    /// mu_B * b0 / hbar: per-component phase rate under the uniform field.
    larmor: f64,
}

impl SpinorField {
    fn build(
        regime: Regime,
        angles: BlochAngles,
        config: &PhysicalConfig,
        params: DerivedBeamParams,
    ) -> Result<Self> {
        config.validate()?;
        let half = angles.theta0 / 2.0;
        let weight_plus = born_up_probability(&angles);
        let weight_minus = 1.0 - weight_plus;
        Ok(Self {
            regime,
            angles,
            config: *config,
            params,
            phi_plus: 0.0,
            phi_minus: 0.0,
            amp_plus: half.cos(),
            amp_minus: half.sin(),
            weight_plus,
            weight_minus,
            ln_weight_plus: weight_plus.ln(),
            ln_weight_minus: weight_minus.ln(),
            norm: 1.0 / (2.0 * PI * config.sigma0 * config.sigma0).sqrt(),
            accel: config.mu_bohr * config.b0_grad / config.mass,
            larmor: config.mu_bohr * config.b0 / config.hbar,
        })
    }

    /// The normalized two-component Gaussian at the magnet entrance.
    pub fn initial(angles: BlochAngles, config: &PhysicalConfig) -> Result<Self> {
        let params = derive_beam_params(config)?;
        Self::build(Regime::Initial, angles, config, params)
    }

    /// The closed-form state after the field, on the post-exit clock.
    pub fn post_field(
        angles: BlochAngles,
        config: &PhysicalConfig,
        params: DerivedBeamParams,
    ) -> Result<Self> {
        Self::build(Regime::PostField, angles, config, params)
    }

    /// Entry-clock description covering the field crossing and the free
    /// flight, for trajectory integration.
    pub fn beam(angles: BlochAngles, config: &PhysicalConfig) -> Result<Self> {
        let params = derive_beam_params(config)?;
        Self::build(Regime::Beam, angles, config, params)
    }

    /// Replaces the post-field phase constants (they default to zero).
    pub fn with_phase_constants(mut self, phi_plus: f64, phi_minus: f64) -> Self {
        self.phi_plus = phi_plus;
        self.phi_minus = phi_minus;
        self
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn angles(&self) -> BlochAngles {
        self.angles
    }

    pub fn config(&self) -> &PhysicalConfig {
        &self.config
    }

    pub fn beam_params(&self) -> DerivedBeamParams {
        self.params
    }

    /// Total entry-to-screen duration on the Beam clock.
    pub fn t_total(&self) -> f64 {
        self.params.dt_field + self.params.t_screen
    }

    /// Packet-center position of the plus component at local time `t`
    /// (the minus component mirrors it).
    pub fn packet_center(&self, t: f64) -> f64 {
        match self.regime {
            Regime::Initial => 0.0,
            Regime::PostField => self.params.z_delta + self.params.u * t,
            Regime::Beam => {
                if t <= self.params.dt_field {
                    0.5 * self.accel * t * t
                } else {
                    self.params.z_delta + self.params.u * (t - self.params.dt_field)
                }
            }
        }
    }

    /// Packet-center speed of the plus component at local time `t`.
    pub fn packet_velocity(&self, t: f64) -> f64 {
        match self.regime {
            Regime::Initial => 0.0,
            Regime::PostField => self.params.u,
            Regime::Beam => {
                if t <= self.params.dt_field {
                    self.accel * t
                } else {
                    self.params.u
                }
            }
        }
    }

    /// Component phases (alpha+, alpha-) at (z, t). Only their z-gradient
    /// and difference are observable.
    fn phases(&self, z: f64, t: f64) -> (f64, f64) {
        match self.regime {
            Regime::Initial => (self.angles.phi0 / 2.0, -self.angles.phi0 / 2.0),
            Regime::PostField => {
                let kinetic = self.config.mass * self.params.u * z / self.config.hbar;
                (
                    kinetic + self.phi_plus,
                    -kinetic + self.phi_minus + FRAC_PI_2,
                )
            }
            Regime::Beam => {
                let tau = t.min(self.params.dt_field);
                let kinetic = self.config.mass * self.packet_velocity(t) * z / self.config.hbar;
                // Larmor angle stops growing at the exit, where the field ends
                let precession = self.larmor * tau;
                let half_phi = self.angles.phi0 / 2.0;
                (kinetic - precession + half_phi, -kinetic + precession - half_phi)
            }
        }
    }

    /// Log of the component density weights at (z, t), x-envelope excluded:
    /// `ln(w+/-) - (z -/+ zc)^2 / (2 sigma0^2)`. Safe in the far tails where
    /// the weights themselves underflow; `ln(0) = -inf` for a pole state.
    pub(crate) fn log_weights(&self, z: f64, t: f64) -> (f64, f64) {
        let sigma2 = self.config.sigma0 * self.config.sigma0;
        let zc = self.packet_center(t);
        let up = self.ln_weight_plus - (z - zc) * (z - zc) / (2.0 * sigma2);
        let down = self.ln_weight_minus - (z + zc) * (z + zc) / (2.0 * sigma2);
        (up, down)
    }

    /// sigma0^2, cached for the guidance hot path.
    pub(crate) fn sigma_squared(&self) -> f64 {
        self.config.sigma0 * self.config.sigma0
    }

    /// alpha- minus alpha+ at (z, t): the relative phase that sets the spin
    /// azimuth.
    pub(crate) fn phase_difference(&self, z: f64, t: f64) -> f64 {
        let (plus, minus) = self.phases(z, t);
        minus - plus
    }

    /// Upper bound on the density anywhere, used to scale the node floor.
    pub(crate) fn density_ceiling(&self) -> f64 {
        self.norm * self.norm
    }

    /// Full spinor at (x, z, t).
    pub fn spinor(&self, x: f64, z: f64, t: f64) -> Spinor {
        let sigma2 = self.config.sigma0 * self.config.sigma0;
        let envelope_x = (-x * x / (4.0 * sigma2)).exp();
        let zc = self.packet_center(t);
        let env_plus = (-(z - zc) * (z - zc) / (4.0 * sigma2)).exp();
        let env_minus = (-(z + zc) * (z + zc) / (4.0 * sigma2)).exp();
        let (alpha_plus, alpha_minus) = self.phases(z, t);
        let scale = self.norm * envelope_x;
        Spinor {
            plus: Complex64::from_polar(scale * self.amp_plus * env_plus, alpha_plus),
            minus: Complex64::from_polar(scale * self.amp_minus * env_minus, alpha_minus),
        }
    }

    /// Probability density at (x, z, t).
    pub fn density(&self, x: f64, z: f64, t: f64) -> f64 {
        self.spinor(x, z, t).density()
    }

    /// Density with the x direction integrated out (the x-Gaussian carries
    /// unit mass), per meter of z:
    /// `(2 pi sigma0^2)^(-1/2) [w+ e^{-(z-zc)^2/2s^2} + w- e^{-(z+zc)^2/2s^2}]`.
    pub fn pure_density(&self, z: f64, t: f64) -> f64 {
        let sigma2 = self.config.sigma0 * self.config.sigma0;
        let zc = self.packet_center(t);
        let lobe_up = (-(z - zc) * (z - zc) / (2.0 * sigma2)).exp();
        let lobe_down = (-(z + zc) * (z + zc) / (2.0 * sigma2)).exp();
        self.norm * (self.weight_plus * lobe_up + self.weight_minus * lobe_down)
    }
}

/// Beam density for a statistical mixture of pure states, on the post-exit
/// clock: two equal-weight lobes regardless of any single preparation.
pub fn mixture_density(
    config: &PhysicalConfig,
    params: &DerivedBeamParams,
    z: f64,
    t: f64,
) -> f64 {
    let sigma2 = config.sigma0 * config.sigma0;
    let zc = params.z_delta + params.u * t;
    let norm = 1.0 / (2.0 * PI * sigma2).sqrt();
    let lobe_up = (-(z - zc) * (z - zc) / (2.0 * sigma2)).exp();
    let lobe_down = (-(z + zc) * (z + zc) / (2.0 * sigma2)).exp();
    norm * 0.5 * (lobe_up + lobe_down)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn defaults() -> (PhysicalConfig, DerivedBeamParams) {
        let config = PhysicalConfig::default();
        let params = derive_beam_params(&config).unwrap();
        (config, params)
    }

    /// Midpoint quadrature over [-half, half]; boundary truncation is
    /// negligible for the Gaussians probed here.
    fn quad_1d(mut f: impl FnMut(f64) -> f64, center: f64, half: f64, n: usize) -> f64 {
        let h = 2.0 * half / n as f64;
        (0..n)
            .map(|i| f(center - half + (i as f64 + 0.5) * h))
            .sum::<f64>()
            * h
    }

    fn quad_2d(f: impl Fn(f64, f64) -> f64, half: f64, n: usize) -> f64 {
        quad_1d(
            |x| quad_1d(|z| f(x, z), 0.0, half, n),
            0.0,
            half,
            n,
        )
    }

    #[test]
    fn initial_pole_state_has_single_component() {
        let (config, _) = defaults();
        let field =
            SpinorField::initial(BlochAngles::new(0.0, 0.0).unwrap(), &config).unwrap();
        for z in [-2.0e-4, 0.0, 1.3e-4] {
            let s = field.spinor(0.5e-4, z, 0.0);
            assert_eq!(s.minus, Complex64::new(0.0, 0.0));
            assert!(s.plus.norm() > 0.0);
        }
    }

    #[test]
    fn initial_amplitude_ratio_is_cot_half_theta() {
        let (config, _) = defaults();
        let field =
            SpinorField::initial(BlochAngles::new(PI / 3.0, 0.0).unwrap(), &config).unwrap();
        let s = field.spinor(0.0, 0.0, 0.0);
        let ratio = s.plus.norm() / s.minus.norm();
        assert_relative_eq!(ratio, 3.0f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn initial_state_is_normalized_over_the_plane() {
        let (config, _) = defaults();
        for (theta, phi) in [(0.0, 0.0), (PI / 3.0, 1.0), (PI / 2.0, 4.0), (2.9, 0.3)] {
            let field =
                SpinorField::initial(BlochAngles::new(theta, phi).unwrap(), &config).unwrap();
            let total = quad_2d(|x, z| field.density(x, z, 0.0), 6.0 * config.sigma0, 400);
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn post_field_pole_state_rides_one_packet() {
        let (config, params) = defaults();
        let field = SpinorField::post_field(
            BlochAngles::new(0.0, 0.0).unwrap(),
            &config,
            params,
        )
        .unwrap();
        for t in [0.0, 1.0e-4, params.t_screen] {
            let expected = params.z_delta + params.u * t;
            let centroid = quad_1d(
                |z| z * field.pure_density(z, t),
                expected,
                8.0 * config.sigma0,
                4000,
            );
            assert_relative_eq!(centroid, expected, max_relative = 1e-9);
        }
    }

    #[test]
    fn post_field_equatorial_state_has_two_peaks_at_screen() {
        let (config, params) = defaults();
        let field = SpinorField::post_field(
            BlochAngles::new(PI / 2.0, 0.0).unwrap(),
            &config,
            params,
        )
        .unwrap();
        let t = params.t_screen;
        let expected = params.z_delta + params.u * t;
        // paper-default numbers: packets around +/-4.22e-4 m
        assert_relative_eq!(expected, 4.2248222222222224e-4, max_relative = 1e-12);
        let peak = (0..=800)
            .map(|i| {
                let z = i as f64 / 800.0 * 8.0e-4;
                (z, field.pure_density(z, t))
            })
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        assert_abs_diff_eq!(peak.0, expected, epsilon = 2.0e-6);
        // the density is exactly mirror symmetric for equal weights
        for i in 0..=100 {
            let z = i as f64 / 100.0 * 6.0e-4;
            assert_eq!(field.pure_density(z, t), field.pure_density(-z, t));
        }
    }

    #[test]
    fn packet_centers_separate_at_speed_two_u() {
        let (config, params) = defaults();
        let field = SpinorField::post_field(
            BlochAngles::new(PI / 3.0, 0.0).unwrap(),
            &config,
            params,
        )
        .unwrap();
        let (t1, t2) = (1.0e-4, 3.0e-4);
        let sep = |t: f64| 2.0 * field.packet_center(t);
        assert_relative_eq!(
            (sep(t2) - sep(t1)) / (t2 - t1),
            2.0 * params.u,
            max_relative = 1e-12
        );
    }

    #[test]
    fn pure_density_keeps_unit_mass() {
        let (config, params) = defaults();
        for theta in [0.0, PI / 3.0, PI / 2.0, 2.0 * PI / 3.0] {
            let field = SpinorField::post_field(
                BlochAngles::new(theta, 0.0).unwrap(),
                &config,
                params,
            )
            .unwrap();
            for t in [0.0, params.t_screen] {
                let half = params.z_delta + params.u * t + 8.0 * config.sigma0;
                let total = quad_1d(|z| field.pure_density(z, t), 0.0, half, 40_000);
                assert_abs_diff_eq!(total, 1.0, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn lobe_mass_ratio_matches_born_weights() {
        let (config, params) = defaults();
        let field = SpinorField::post_field(
            BlochAngles::new(PI / 3.0, 0.0).unwrap(),
            &config,
            params,
        )
        .unwrap();
        let t = params.t_screen;
        let half = params.z_delta + params.u * t + 8.0 * config.sigma0;
        let up = quad_1d(
            |z| field.pure_density(z.abs(), t),
            half / 2.0,
            half / 2.0,
            40_000,
        );
        let down = quad_1d(
            |z| field.pure_density(-z.abs(), t),
            half / 2.0,
            half / 2.0,
            40_000,
        );
        assert_relative_eq!(up / down, 3.0, max_relative = 1e-3);
    }

    #[test]
    fn spinor_and_reduced_density_are_consistent() {
        let (config, params) = defaults();
        let field = SpinorField::post_field(
            BlochAngles::new(1.1, 2.4).unwrap(),
            &config,
            params,
        )
        .unwrap()
        .with_phase_constants(0.7, -1.9);
        let t = 2.0e-4;
        for z in [-3.0e-4, -0.8e-4, 0.0, 1.9e-4] {
            let by_quadrature = quad_1d(
                |x| field.density(x, z, t),
                0.0,
                6.0 * config.sigma0,
                4000,
            );
            assert_relative_eq!(by_quadrature, field.pure_density(z, t), max_relative = 1e-6);
        }
    }

    #[test]
    fn densities_are_phase_blind() {
        let (config, params) = defaults();
        let reference = SpinorField::post_field(
            BlochAngles::new(1.3, 0.0).unwrap(),
            &config,
            params,
        )
        .unwrap();
        let probe = (0.4e-4, 1.2e-4, 1.5e-4);
        let expected = reference.density(probe.0, probe.1, probe.2);
        for phi0 in [0.0, 1.0, 3.0, 6.0] {
            for (pp, pm) in [(0.0, 0.0), (1.0, -2.0), (0.3, 4.0)] {
                let field = SpinorField::post_field(
                    BlochAngles::new(1.3, phi0).unwrap(),
                    &config,
                    params,
                )
                .unwrap()
                .with_phase_constants(pp, pm);
                assert_relative_eq!(
                    field.density(probe.0, probe.1, probe.2),
                    expected,
                    max_relative = 1e-12
                );
            }
        }
    }

    #[test]
    fn mixture_density_matches_frozen_value_and_symmetry() {
        let (config, params) = defaults();
        // (2 pi sigma0^2)^(-1/2) * exp(-z_delta^2 / (2 sigma0^2))
        assert_relative_eq!(
            mixture_density(&config, &params, 0.0, 0.0),
            3968.2987683212477,
            max_relative = 1e-12
        );
        for t in [0.0, 1.5e-4, params.t_screen] {
            for i in 0..=200 {
                let z = (i as f64 / 200.0 - 0.5) * 1.6e-3;
                assert_eq!(
                    mixture_density(&config, &params, z, t),
                    mixture_density(&config, &params, -z, t)
                );
            }
        }
    }

    #[test]
    fn mixture_density_keeps_unit_mass() {
        let (config, params) = defaults();
        for t in [0.0, params.t_screen] {
            let half = params.z_delta + params.u * t + 8.0 * config.sigma0;
            let total = quad_1d(
                |z| mixture_density(&config, &params, z, t),
                0.0,
                half,
                40_000,
            );
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn beam_regime_is_continuous_at_the_exit() {
        let (config, params) = defaults();
        let field =
            SpinorField::beam(BlochAngles::new(PI / 3.0, 0.0).unwrap(), &config).unwrap();
        let eps = 1e-12;
        let before = field.packet_center(params.dt_field - eps);
        let after = field.packet_center(params.dt_field + eps);
        assert_relative_eq!(before, after, max_relative = 1e-6);
        assert_relative_eq!(before, params.z_delta, max_relative = 1e-6);
        assert_relative_eq!(
            field.packet_velocity(params.dt_field),
            params.u,
            max_relative = 1e-12
        );
        // entry state matches the initial state
        let initial =
            SpinorField::initial(BlochAngles::new(PI / 3.0, 0.0).unwrap(), &config).unwrap();
        for (x, z) in [(0.0, 0.0), (0.5e-4, -1.0e-4)] {
            let a = field.spinor(x, z, 0.0);
            let b = initial.spinor(x, z, 0.0);
            assert_relative_eq!(a.plus.re, b.plus.re, max_relative = 1e-12);
            assert_relative_eq!(a.plus.im, b.plus.im, epsilon = 1e-15);
            assert_relative_eq!(a.minus.re, b.minus.re, max_relative = 1e-12);
            assert_relative_eq!(a.minus.im, b.minus.im, epsilon = 1e-15);
        }
    }
}
