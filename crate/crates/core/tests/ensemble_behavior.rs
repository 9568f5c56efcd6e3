//! Cross-module behavior of trajectory ensembles: the up/down statistics
//! must reproduce the measurement postulate, pure-state flows must not
//! cross, mixtures must, and every trajectory must end with its spin
//! rectified onto the field axis.

use contextsim::bohm::{run_ensemble, EnsembleSource};
use contextsim::stats::{crossing_check, spot_statistics, Outcome};
use contextsim::{BlochAngles, PhysicalConfig};
use std::f64::consts::PI;

fn pure(theta0: f64) -> EnsembleSource {
    EnsembleSource::pure(BlochAngles::new(theta0, 0.0).unwrap())
}

#[test]
fn born_statistics_emerge_from_initial_positions() {
    let config = PhysicalConfig::default();
    let n = 2000;
    for (theta0, expected) in [(PI / 3.0, 0.75), (PI / 2.0, 0.5)] {
        let result = run_ensemble(pure(theta0), n, &config, 2).unwrap();
        let bound = 4.0 * (expected * (1.0 - expected) / n as f64).sqrt();
        assert!(
            (result.fraction_up - expected).abs() < bound,
            "theta0 {theta0}: fraction {} vs {expected} (bound {bound})",
            result.fraction_up
        );
        let summary = spot_statistics(&result);
        assert_eq!(summary.consistent_with_born, Some(true));
    }
}

#[test]
fn mixture_splits_evenly() {
    let config = PhysicalConfig::default();
    let result = run_ensemble(EnsembleSource::Mixture, 2000, &config, 3).unwrap();
    assert!(
        (result.fraction_up - 0.5).abs() < 4.0 * (0.25f64 / 2000.0).sqrt(),
        "fraction {}",
        result.fraction_up
    );
    assert_eq!(result.born_expected, None);
}

#[test]
fn pure_state_trajectories_never_cross() {
    let config = PhysicalConfig::default();
    let result = run_ensemble(pure(PI / 2.0), 100, &config, 12).unwrap();
    let report = crossing_check(&result.trajectories).unwrap();
    assert_eq!(report.pairs_checked, 100 * 99 / 2);
    assert_eq!(report.crossings, 0);
    assert!(!report.pure_state_violation);
}

#[test]
fn pure_state_flow_preserves_initial_ordering() {
    let config = PhysicalConfig::default();
    let result = run_ensemble(pure(PI / 3.0), 100, &config, 8).unwrap();
    let mut trajectories = result.trajectories;
    trajectories.sort_by(|a, b| a.z0.total_cmp(&b.z0));
    for pair in trajectories.windows(2) {
        for (sa, sb) in pair[0].samples.iter().zip(&pair[1].samples) {
            assert!(
                sa.z < sb.z,
                "ordering broken at t = {}: {} !< {}",
                sa.t,
                sa.z,
                sb.z
            );
        }
    }
}

#[test]
fn mixture_trajectories_do_cross() {
    let config = PhysicalConfig::default();
    let result = run_ensemble(EnsembleSource::Mixture, 100, &config, 12).unwrap();
    let report = crossing_check(&result.trajectories).unwrap();
    assert!(report.crossings >= 1, "no crossings found");
    // crossings between different preparations are not a violation
    assert!(!report.pure_state_violation);
}

#[test]
fn spins_are_rectified_at_the_screen() {
    let config = PhysicalConfig::default();
    for theta0 in [PI / 6.0, PI / 3.0, PI / 2.0, 2.0 * PI / 3.0] {
        let result = run_ensemble(pure(theta0), 100, &config, 5).unwrap();
        for trajectory in &result.trajectories {
            let theta = trajectory.final_sample().theta_spin;
            match trajectory.outcome.unwrap().outcome {
                Outcome::Up => assert!(
                    theta < 0.05,
                    "theta0 {theta0}: up trajectory ended with theta {theta}"
                ),
                Outcome::Down => assert!(
                    theta > PI - 0.05,
                    "theta0 {theta0}: down trajectory ended with theta {theta}"
                ),
            }
        }
    }
}

#[test]
fn ensembles_are_reproducible_across_runs() {
    let config = PhysicalConfig::default();
    let a = run_ensemble(pure(1.1), 16, &config, 77).unwrap();
    let b = run_ensemble(pure(1.1), 16, &config, 77).unwrap();
    assert_eq!(a.n_up, b.n_up);
    for (ta, tb) in a.trajectories.iter().zip(&b.trajectories) {
        assert_eq!(ta.samples, tb.samples);
    }
}
