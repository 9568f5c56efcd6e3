//! The four experiment commands.

use crate::io::{fmt_f64, write_csv, write_json, RunManifest};
use crate::protocol::{load_protocol, parse_inline_axis, resolve_axis};
use crate::{CoinArgs, CoinPreset, CurvesArgs, GaugeArg, SgArgs, SgPreset, ValidateFieldArgs};
use anyhow::{bail, Context, Result};
use contextsim::bohm::{run_ensemble, EnsembleSource};
use contextsim::grid::{validate_field_with_state, GradientGauge, GridSpec};
use contextsim::pauli::SpinorField;
use contextsim::stats::{crossing_check, spot_statistics};
use contextsim::{
    classical_agreement_curve, derive_beam_params, load_config, quantum_agreement_curve,
    run_protocol, BlochAngles, ClapAxis, PhysicalConfig,
};
use serde::Serialize;
use serde_json::json;
use std::f64::consts::{PI, TAU};
use std::path::Path;

fn deg_to_rad(degrees: f64) -> f64 {
    degrees * PI / 180.0
}

fn rad_to_deg(radians: f64) -> f64 {
    radians * 180.0 / PI
}

fn load_config_or_default(path: Option<&Path>) -> Result<PhysicalConfig> {
    match path {
        Some(path) => {
            load_config(path).with_context(|| format!("loading config {}", path.display()))
        }
        None => Ok(PhysicalConfig::default()),
    }
}

pub fn cmd_coin(args: &CoinArgs) -> Result<()> {
    let mut trials = 10_000usize;
    let mut seed = 0u64;

    let (axes, source_echo): (Vec<ClapAxis>, serde_json::Value) = if let Some(preset) =
        args.preset
    {
        let axes = match preset {
            CoinPreset::Fig2 => vec![ClapAxis::z()],
            CoinPreset::Fig3 => vec![ClapAxis::z(), ClapAxis::z()],
            CoinPreset::Fig4 => vec![ClapAxis::z(), ClapAxis::y()],
            CoinPreset::Fig5 => vec![ClapAxis::z(), ClapAxis::y(), ClapAxis::z()],
        };
        (axes, json!({ "preset": format!("{preset:?}").to_lowercase() }))
    } else if let Some(path) = &args.protocol {
        let spec = load_protocol(path)?;
        if let Some(t) = spec.trials {
            trials = t;
        }
        if let Some(s) = spec.seed {
            seed = s;
        }
        let axes = spec
            .axes
            .iter()
            .map(resolve_axis)
            .collect::<Result<Vec<_>>>()?;
        (axes, json!({ "protocol": path.display().to_string() }))
    } else if let Some(inline) = &args.axes {
        let axes = inline
            .iter()
            .map(|text| parse_inline_axis(text))
            .collect::<Result<Vec<_>>>()?;
        (axes, json!({ "axes_inline": inline }))
    } else {
        bail!("no protocol given: pass --preset, --protocol or --axes");
    };

    if let Some(t) = args.trials {
        trials = t;
    }
    if let Some(s) = args.seed {
        seed = s;
    }
    if trials == 0 {
        bail!("--trials must be at least 1");
    }

    let axes_echo: Vec<[f64; 3]> = axes
        .iter()
        .map(|a| [a.heads_direction.x, a.heads_direction.y, a.heads_direction.z])
        .collect();
    let mut parameters = json!({
        "axes": axes_echo,
        "trials": trials,
        "seed": seed,
    });
    parameters["source"] = source_echo;
    RunManifest::new("coin", parameters, Some(seed), None, &args.out).write(&args.out)?;

    let result = run_protocol(&axes, trials, seed)?;

    let rows: Vec<String> = result
        .steps
        .iter()
        .map(|step| {
            let angle = step
                .angle_to_prev
                .map(|a| fmt_f64(rad_to_deg(a)))
                .unwrap_or_default();
            let agree = step.p_agree_prev.map(fmt_f64).unwrap_or_default();
            format!(
                "{},{},{},{}",
                step.step,
                angle,
                fmt_f64(step.p_heads),
                agree
            )
        })
        .collect();
    write_csv(
        &args.out.join("frequencies.csv"),
        "step,angle_to_prev_deg,p_heads,p_agree_prev",
        &rows,
    )?;

    #[derive(Serialize)]
    struct JointCounts<'a> {
        trials: usize,
        seed: u64,
        counts: &'a std::collections::BTreeMap<String, u64>,
    }
    write_json(
        &args.out.join("joint_counts.json"),
        &JointCounts {
            trials,
            seed,
            counts: &result.joint_counts,
        },
    )?;

    for step in &result.steps {
        println!(
            "step {}: P(heads) = {:.4}{}",
            step.step,
            step.p_heads,
            step.p_agree_prev
                .map(|p| format!(", agreement with previous = {p:.4}"))
                .unwrap_or_default()
        );
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

pub fn cmd_curves(args: &CurvesArgs) -> Result<()> {
    if args.angles < 2 {
        bail!("--angles must be at least 2");
    }
    RunManifest::new(
        "curves",
        json!({ "angles": args.angles }),
        None,
        None,
        &args.out,
    )
    .write(&args.out)?;

    let betas_deg: Vec<f64> = (0..args.angles)
        .map(|i| 180.0 * i as f64 / (args.angles - 1) as f64)
        .collect();
    let betas_rad: Vec<f64> = betas_deg.iter().map(|&d| deg_to_rad(d)).collect();
    let classical = classical_agreement_curve(&betas_rad)?;
    let quantum = quantum_agreement_curve(&betas_rad)?;

    let rows: Vec<String> = betas_deg
        .iter()
        .zip(classical.iter().zip(&quantum))
        .map(|(&deg, ((_, pc), (_, pq)))| {
            format!("{},{},{}", fmt_f64(deg), fmt_f64(*pc), fmt_f64(*pq))
        })
        .collect();
    write_csv(
        &args.out.join("curves.csv"),
        "beta_deg,p_same_classical,p_same_quantum",
        &rows,
    )?;
    println!(
        "wrote {} agreement rows to {}",
        args.angles,
        args.out.display()
    );
    Ok(())
}

fn resolve_source(args: &SgArgs) -> Result<(EnsembleSource, usize, serde_json::Value)> {
    if let Some(preset) = args.preset {
        let (source, n, name) = match preset {
            SgPreset::Fig7 => (
                EnsembleSource::pure(BlochAngles::new(PI / 3.0, 0.0).expect("valid")),
                6,
                "fig7",
            ),
            SgPreset::Fig8 => (
                EnsembleSource::pure(BlochAngles::new(PI / 2.0, 0.0).expect("valid")),
                6,
                "fig8",
            ),
            SgPreset::Fig9 => (EnsembleSource::Mixture, 6, "fig9"),
        };
        return Ok((source, args.n.unwrap_or(n), json!({ "preset": name })));
    }
    if let Some(pure) = &args.pure {
        let theta_deg = pure[0];
        let phi_deg = pure[1];
        let mut theta = deg_to_rad(theta_deg);
        if theta > PI && theta < PI + 1e-9 {
            theta = PI;
        }
        let phi = deg_to_rad(phi_deg).rem_euclid(TAU);
        let angles = BlochAngles::new(theta, phi)
            .with_context(|| format!("--pure {theta_deg} {phi_deg}"))?;
        return Ok((
            EnsembleSource::pure(angles),
            args.n.unwrap_or(100),
            json!({ "pure_deg": [theta_deg, phi_deg] }),
        ));
    }
    if args.mixture {
        return Ok((
            EnsembleSource::Mixture,
            args.n.unwrap_or(100),
            json!({ "mixture": true }),
        ));
    }
    bail!("no source given: pass --preset, --pure THETA_DEG PHI_DEG or --mixture");
}

#[derive(Serialize)]
struct EnsembleSummary {
    n: usize,
    source: EnsembleSource,
    n_up: usize,
    n_down: usize,
    fraction_up: f64,
    born_expected: Option<f64>,
    binomial_stderr: f64,
    born_z_score: Option<f64>,
    consistent_with_born: Option<bool>,
    seed: u64,
    config: PhysicalConfig,
}

pub fn cmd_stern_gerlach(args: &SgArgs) -> Result<()> {
    let config = load_config_or_default(args.config.as_deref())?;
    let params = derive_beam_params(&config)?;
    let (source, n, source_echo) = resolve_source(args)?;
    if n == 0 {
        bail!("--n must be at least 1");
    }
    let t_total = params.dt_field + params.t_screen;
    let snapshots: Vec<f64> = match &args.snapshots {
        Some(times) => {
            for &t in times {
                if !(0.0..=t_total).contains(&t) {
                    bail!("snapshot time {t} outside [0, {t_total}]");
                }
            }
            times.clone()
        }
        None => vec![
            0.0,
            params.dt_field,
            params.dt_field + params.t_screen / 3.0,
            params.dt_field + 2.0 * params.t_screen / 3.0,
            t_total,
        ],
    };

    let mut parameters = json!({
        "n": n,
        "seed": args.seed,
        "snapshots_s": snapshots,
        "config": config,
    });
    parameters["source"] = source_echo;
    RunManifest::new(
        "stern-gerlach",
        parameters,
        Some(args.seed),
        args.config.as_deref(),
        &args.out,
    )
    .write(&args.out)?;

    let result = run_ensemble(source, n, &config, args.seed)?;

    let mut rows = Vec::new();
    for (id, trajectory) in result.trajectories.iter().enumerate() {
        for sample in &trajectory.samples {
            rows.push(format!(
                "{},{},{},{},{},{},{}",
                id,
                fmt_f64(sample.t),
                fmt_f64(config.v_beam * sample.t),
                fmt_f64(sample.x),
                fmt_f64(sample.z),
                fmt_f64(sample.vz),
                fmt_f64(sample.theta_spin)
            ));
        }
    }
    write_csv(
        &args.out.join("trajectories.csv"),
        "traj_id,t,y,x,z,vz,theta_spin",
        &rows,
    )?;

    let spots = spot_statistics(&result);
    let summary = EnsembleSummary {
        n: result.n,
        source,
        n_up: result.n_up,
        n_down: result.n_down,
        fraction_up: result.fraction_up,
        born_expected: result.born_expected,
        binomial_stderr: spots.binomial_stderr,
        born_z_score: spots.born_z_score,
        consistent_with_born: spots.consistent_with_born,
        seed: args.seed,
        config,
    };
    write_json(&args.out.join("ensemble_summary.json"), &summary)?;

    let report = crossing_check(&result.trajectories)?;
    write_json(&args.out.join("crossing_report.json"), &report)?;

    // density profiles on the beam clock; the theta-averaged mixture density
    // coincides with the equatorial pure state's z-density
    let density_field = match source {
        EnsembleSource::Pure { theta0, phi0 } => {
            SpinorField::beam(BlochAngles::new(theta0, phi0)?, &config)?
        }
        EnsembleSource::Mixture => {
            SpinorField::beam(BlochAngles::new(PI / 2.0, 0.0).expect("valid"), &config)?
        }
    };
    let z_half = params.z_delta + params.u * params.t_screen + 6.0 * config.sigma0;
    for (index, &t) in snapshots.iter().enumerate() {
        let rows: Vec<String> = (0..=800)
            .map(|i| {
                let z = -z_half + 2.0 * z_half * i as f64 / 800.0;
                format!(
                    "{},{},{}",
                    fmt_f64(t),
                    fmt_f64(z),
                    fmt_f64(density_field.pure_density(z, t))
                )
            })
            .collect();
        write_csv(&args.out.join(format!("density_{index}.csv")), "t,z,rho", &rows)?;
    }

    println!(
        "{} trajectories: {} up / {} down (fraction up {:.4}{})",
        result.n,
        result.n_up,
        result.n_down,
        result.fraction_up,
        result
            .born_expected
            .map(|b| format!(", Born expectation {b:.4}"))
            .unwrap_or_default()
    );
    println!(
        "crossings: {} over {} pairs{}",
        report.crossings,
        report.pairs_checked,
        if report.pure_state_violation {
            " (PURE-STATE VIOLATION)"
        } else {
            ""
        }
    );
    println!("wrote {}", args.out.display());
    Ok(())
}

pub fn cmd_validate_field(args: &ValidateFieldArgs) -> Result<()> {
    let config = load_config_or_default(args.config.as_deref())?;
    let spec = GridSpec {
        nx: args.nodes,
        nz: args.nodes,
        box_sigmas: args.box_sigmas,
        steps: args.steps,
        gauge: match args.gauge {
            GaugeArg::SpectralOffset => GradientGauge::SpectralOffset,
            GaugeArg::Pointwise => GradientGauge::Pointwise,
        },
    };
    RunManifest::new(
        "validate-field",
        json!({ "grid": spec, "config": config, "dump_state": args.dump_state }),
        None,
        args.config.as_deref(),
        &args.out,
    )
    .write(&args.out)?;

    let (report, state) = validate_field_with_state(&config, &spec)?;
    write_json(&args.out.join("field_validation.json"), &report)?;

    if args.dump_state {
        let (nx, nz) = state.shape();
        let mut rows = Vec::with_capacity(nx * nz);
        for ix in 0..nx {
            for iz in 0..nz {
                let (x, z) = state.node_coord(ix, iz);
                let (plus, minus) = state.spinor_at(ix, iz);
                rows.push(format!(
                    "{},{},{},{},{},{}",
                    fmt_f64(x),
                    fmt_f64(z),
                    fmt_f64(plus.re),
                    fmt_f64(plus.im),
                    fmt_f64(minus.re),
                    fmt_f64(minus.im)
                ));
            }
        }
        write_csv(
            &args.out.join("grid_state.csv"),
            "x,z,re_plus,im_plus,re_minus,im_minus",
            &rows,
        )?;
    }

    println!(
        "offset:   measured {:+.6e} / {:+.6e} m, expected ±{:.6e} m (error {:.3e})",
        report.measured_offset_plus,
        report.measured_offset_minus,
        report.expected_z_delta,
        report.offset_error
    );
    println!(
        "velocity: measured {:+.6e} / {:+.6e} m/s, expected ±{:.6e} m/s (error {:.3e})",
        report.measured_velocity_plus,
        report.measured_velocity_minus,
        report.expected_u,
        report.velocity_error
    );
    println!(
        "norm drift {:.3e}, boundary mass {:.3e}",
        report.norm_drift, report.max_margin_mass
    );
    if report.pass {
        println!("PASS");
        Ok(())
    } else {
        println!("FAIL");
        bail!("field validation failed (tolerance 5%)");
    }
}
