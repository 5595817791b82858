//! The four subcommands. Each loads the config, runs the pipeline, and
//! writes machine-readable reports plus a manifest echoing the resolved
//! configuration.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use simop_core::assignment::spectrum_distance;
use simop_core::blockspace::BlockMatrix;
use simop_core::evolution::{
    group_apply_with, growth_rate, solve_inhomogeneous, tail_bound, EvolutionState, GroupBlocks,
};
use simop_core::oracle;
use simop_core::potential::{PotentialSpec, Sufficiency};
use simop_core::similarity::{similarity_transform, Similarity};
use simop_core::spectral::{equiconvergence_gap, similarity_residual, spectrum, SpectrumReport};
use simop_core::C64;

use crate::config::{PotentialConfig, RunConfig};
use crate::error::CliError;
use crate::output;

/// Tolerances pinned by the validation gate.
mod gate {
    /// Matching distance between method and oracle spectra on interior
    /// modes.
    pub const SPECTRUM_MATCH: f64 = 1e-6;
    /// l2 error between the method group orbit and the dense exponential.
    pub const EVOLUTION: f64 = 1e-6;
    /// Interior intertwining residual, relative to `1 + |V|`.
    pub const INTERTWINING_REL: f64 = 1e-8;
    /// Transform times its inverse against the identity.
    pub const INVERSE_COMPOSITION: f64 = 1e-10;
    /// Golden closed-form suite for the constant potential.
    pub const GOLDEN_SPECTRUM: f64 = 1e-10;
    pub const GOLDEN_FIXED_POINT: f64 = 1e-10;
    pub const GOLDEN_INVERSE_FACTOR: f64 = 1e-12;
    /// Default probe times for oracle evolution checks.
    pub const TIMES: [f64; 4] = [-1.0, -0.5, 0.5, 1.0];
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config: &'a RunConfig,
}

#[derive(Serialize)]
struct AdmissibilityJson {
    sum_sq: f64,
    l1_sum: f64,
    cond4_norm: f64,
    sufficiency: &'static str,
}

#[derive(Serialize)]
struct Diagnostics {
    m: i32,
    k: i32,
    potential_hs_norm: f64,
    potential_band: i32,
    gamma_v_norm: f64,
    v_tilde_norm: f64,
    v_tilde_weighted_norm: f64,
    contraction_certificate: f64,
    fixed_point_tol: f64,
    fixed_point_iterations: usize,
    fixed_point_residuals: Vec<f64>,
    ball_radius: f64,
    max_ball_distance: f64,
    transform_perturbation_norm: f64,
    intertwining_residual_interior: f64,
    admissibility: AdmissibilityJson,
}

#[derive(Serialize)]
struct SpectrumJson {
    k: i32,
    central: Vec<[f64; 2]>,
    outer: BTreeMap<i32, Vec<[f64; 2]>>,
}

struct Pipeline {
    spec: PotentialSpec,
    v: BlockMatrix,
    sim: Similarity,
}

fn run_pipeline(config: &RunConfig, base_dir: &Path) -> Result<Pipeline, CliError> {
    let spec = config.potential_spec(base_dir)?;
    let v = spec.v_matrix();
    let sim = similarity_transform(&spec, &config.similarity_options())
        .map_err(|e| CliError::from(e).with_stage("similarity"))?;
    Ok(Pipeline { spec, v, sim })
}

fn diagnostics(p: &Pipeline) -> Result<Diagnostics, CliError> {
    let report = p.spec.admissibility();
    let sufficiency = match report.sufficiency {
        Sufficiency::AbsolutelySummable => "absolutely_summable",
        Sufficiency::HsValued => "hs_valued",
        Sufficiency::Neither => "neither",
    };
    let residual = similarity_residual(&p.v, &p.sim, p.spec.band())
        .map_err(|e| CliError::from(e).with_stage("spectral"))?;
    Ok(Diagnostics {
        m: p.sim.m,
        k: p.sim.k,
        potential_hs_norm: p.v.hs_norm_fine(),
        potential_band: p.spec.band(),
        gamma_v_norm: p.sim.log.gamma_v_norm,
        v_tilde_norm: p.sim.log.v_tilde_norm,
        v_tilde_weighted_norm: p.sim.log.v_tilde_weighted_norm,
        contraction_certificate: p.sim.log.contraction_certificate,
        fixed_point_tol: p.sim.log.fixed_point_tol_abs,
        fixed_point_iterations: p.sim.log.fixed_point.residuals.len(),
        fixed_point_residuals: p.sim.log.fixed_point.residuals.clone(),
        ball_radius: p.sim.log.fixed_point.ball_radius,
        max_ball_distance: p.sim.log.fixed_point.max_ball_distance,
        transform_perturbation_norm: p.sim.log.transform_perturbation_norm,
        intertwining_residual_interior: residual,
        admissibility: AdmissibilityJson {
            sum_sq: report.sum_sq,
            l1_sum: report.l1_sum,
            cond4_norm: report.cond4_norm,
            sufficiency,
        },
    })
}

fn spectrum_json(report: &SpectrumReport) -> SpectrumJson {
    SpectrumJson {
        k: report.k,
        central: report.central.iter().map(|z| output::pair(*z)).collect(),
        outer: report
            .outer
            .iter()
            .map(|(l, evs)| (*l, evs.iter().map(|z| output::pair(*z)).collect()))
            .collect(),
    }
}

fn write_manifest(out_dir: &Path, command: &str, config: &RunConfig) -> Result<(), CliError> {
    output::write_json(&out_dir.join("run_manifest.json"), &Manifest { command, config })
}

/// Deterministic default probe state: every fiber component of mode `l`
/// carries `1 / (1 + l^2)`.
fn default_state(config: &RunConfig) -> Result<EvolutionState, CliError> {
    let window = config.window()?;
    let mut state = EvolutionState::zeros(window);
    for l in window.modes() {
        let off = window.offset(l);
        for c in 0..window.dim() {
            state.coeffs_mut()[off + c] = C64::new(1.0 / (1.0 + (l * l) as f64), 0.0);
        }
    }
    Ok(state)
}

// ---------------------------------------------------------------- spectrum

pub fn cmd_spectrum(config: &RunConfig, base_dir: &Path, out_dir: &Path) -> Result<(), CliError> {
    let p = run_pipeline(config, base_dir)?;
    let report = spectrum(&p.sim).map_err(|e| CliError::from(e).with_stage("spectral"))?;
    output::ensure_dir(out_dir)?;
    write_manifest(out_dir, "spectrum", config)?;
    output::write_json(&out_dir.join("spectrum.json"), &spectrum_json(&report))?;
    output::atomic_write(&out_dir.join("spectrum.csv"), &output::spectrum_csv(&report))?;
    output::write_json(&out_dir.join("diagnostics.json"), &diagnostics(&p)?)?;
    println!(
        "spectrum: m={} k={} eigenvalues={} -> {}",
        p.sim.m,
        p.sim.k,
        report.all().len(),
        out_dir.display()
    );
    Ok(())
}

// ------------------------------------------------------------------ evolve

pub fn cmd_evolve(config: &RunConfig, base_dir: &Path, out_dir: &Path) -> Result<(), CliError> {
    let Some(initial_cfg) = &config.initial else {
        return Err(CliError::config("evolve requires an initial condition".into()));
    };
    let times = config
        .times
        .clone()
        .ok_or_else(|| CliError::config("evolve requires times".into()))?;
    let p = run_pipeline(config, base_dir)?;
    let phi = config.state(initial_cfg, base_dir)?;
    let forcing = config.forcing_profile(base_dir)?;

    let blocks = GroupBlocks::of(&p.sim);
    let states: Vec<EvolutionState> = times
        .par_iter()
        .map(|&t| -> Result<EvolutionState, CliError> {
            match &forcing {
                None => group_apply_with(&p.sim, &blocks, t, &phi)
                    .map_err(|e| CliError::from(e).with_stage("evolution")),
                Some((profile, nu)) => {
                    let profile = profile.clone();
                    let nu = *nu;
                    let f = move |tau: f64| profile.scale(C64::new(0.0, nu * tau).exp());
                    let traj = solve_inhomogeneous(&p.sim, &phi, &f, &[t])
                        .map_err(|e| CliError::from(e).with_stage("evolution"))?;
                    Ok(traj.into_iter().next().expect("one state per time"))
                }
            }
        })
        .collect::<Result<_, _>>()?;

    output::ensure_dir(out_dir)?;
    write_manifest(out_dir, "evolve", config)?;
    output::atomic_write(
        &out_dir.join("trajectory.csv"),
        &output::trajectory_csv(&times, &states),
    )?;
    output::atomic_write(
        &out_dir.join("trajectory_grid.csv"),
        &output::trajectory_grid_csv(&times, &states, config.grid_points),
    )?;
    if let Some(n) = config.tail_cutoff {
        let mut csv = String::from("t,n,bound,true_error\n");
        for &t in &times {
            let est = tail_bound(&p.sim, &phi, n, t)
                .map_err(|e| CliError::from(e).with_stage("evolution"))?;
            csv.push_str(&format!("{t},{n},{},{}\n", est.bound, est.true_error));
        }
        output::atomic_write(&out_dir.join("tail.csv"), &csv)?;
    }
    output::write_json(&out_dir.join("diagnostics.json"), &diagnostics(&p)?)?;
    println!(
        "evolve: {} time points, {} modes -> {}",
        times.len(),
        p.sim.window().mode_count(),
        out_dir.display()
    );
    Ok(())
}

// ---------------------------------------------------------------- validate

#[derive(Serialize)]
struct Check {
    name: &'static str,
    value: f64,
    tolerance: f64,
    pass: bool,
}

impl Check {
    fn upper(name: &'static str, value: f64, tolerance: f64) -> Self {
        Self {
            name,
            value,
            tolerance,
            pass: value <= tolerance,
        }
    }
}

#[derive(Serialize)]
struct ValidationReport {
    golden_suite: bool,
    checks: Vec<Check>,
    all_pass: bool,
}

pub fn cmd_validate(config: &RunConfig, base_dir: &Path, out_dir: &Path) -> Result<(), CliError> {
    let p = run_pipeline(config, base_dir)?;
    let report = spectrum(&p.sim).map_err(|e| CliError::from(e).with_stage("spectral"))?;
    let dense = oracle::dense_truncation(&p.spec);
    let oracle_evs = oracle::spectrum(&dense).map_err(|e| CliError::from(e).with_stage("oracle"))?;

    let mut checks = Vec::new();

    // spectrum agreement on interior modes
    let interior = report.up_to_mode(config.half_width / 2);
    let dist = spectrum_distance(&interior, &oracle_evs);
    checks.push(Check::upper("spectrum_match_interior", dist.max, gate::SPECTRUM_MATCH));

    // evolution against the dense exponential
    let phi = default_state(config)?;
    let blocks = GroupBlocks::of(&p.sim);
    let times = config
        .times
        .clone()
        .unwrap_or_else(|| gate::TIMES.to_vec());
    let mut evolution_err = 0.0_f64;
    for &t in &times {
        let method = group_apply_with(&p.sim, &blocks, t, &phi)
            .map_err(|e| CliError::from(e).with_stage("evolution"))?;
        let reference = oracle::evolve(&dense, &phi, t)
            .map_err(|e| CliError::from(e).with_stage("oracle"))?;
        evolution_err = evolution_err.max(method.sub(&reference).l2_norm());
    }
    checks.push(Check::upper("evolution_vs_oracle", evolution_err, gate::EVOLUTION));

    // intertwining residual
    let residual = similarity_residual(&p.v, &p.sim, p.spec.band())
        .map_err(|e| CliError::from(e).with_stage("spectral"))?;
    checks.push(Check::upper(
        "intertwining_residual",
        residual,
        gate::INTERTWINING_REL * (1.0 + p.v.hs_norm_fine()),
    ));

    // fixed-point contract
    let residuals = &p.sim.log.fixed_point.residuals;
    if !p.sim.v_tilde.is_zero() {
        checks.push(Check::upper(
            "fixed_point_final_residual",
            residuals.last().copied().unwrap_or(0.0),
            p.sim.log.fixed_point_tol_abs,
        ));
        let max_increment = residuals
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max);
        checks.push(Check {
            name: "fixed_point_strictly_decreasing",
            value: max_increment,
            tolerance: 0.0,
            pass: residuals.len() <= 1 || max_increment < 0.0,
        });
        checks.push(Check::upper(
            "fixed_point_ball",
            p.sim.log.fixed_point.max_ball_distance,
            p.sim.log.fixed_point.ball_radius,
        ));
    }

    // transform composed with its inverse
    let id = BlockMatrix::identity(*p.sim.window());
    let composition = p
        .sim
        .transform
        .mul(&p.sim.transform_inv)
        .and_then(|prod| prod.sub(&id))
        .map_err(|e| CliError::from(e).with_stage("spectral"))?
        .hs_norm_fine();
    checks.push(Check::upper(
        "inverse_composition",
        composition,
        gate::INVERSE_COMPOSITION,
    ));

    // golden closed-form suite for the builtin constant potential
    let golden = matches!(config.potential, PotentialConfig::Constant { .. })
        && config.dim == 1
        && (config.omega - 2.0 * std::f64::consts::PI).abs() < 1e-12;
    if golden {
        let PotentialConfig::Constant { c } = config.potential else {
            unreachable!()
        };
        let reference = oracle::closed_form_example(c, *p.sim.window())
            .map_err(|e| CliError::from(e).with_stage("oracle"))?;
        let dist = spectrum_distance(&report.all(), &reference.spectrum());
        checks.push(Check::upper("golden_spectrum", dist.max, gate::GOLDEN_SPECTRUM));

        let mut diag_err = 0.0_f64;
        let mut anti_err = 0.0_f64;
        for j in p.sim.window().modes() {
            let got = p.sim.x_star.block_or_zero(j, j)[(0, 0)];
            diag_err = diag_err.max((got - reference.fixed_point_diag(j)).norm());
            if j != 0 {
                let got = p.sim.x_star.block_or_zero(j, -j)[(0, 0)];
                anti_err = anti_err.max((got - reference.fixed_point_anti(j)).norm());
            }
        }
        checks.push(Check::upper("golden_fixed_point_diag", diag_err, gate::GOLDEN_FIXED_POINT));
        checks.push(Check::upper("golden_fixed_point_anti", anti_err, gate::GOLDEN_FIXED_POINT));

        // inverse of the stage-one factor against its closed form
        let gv = simop_core::transforms::solve_commutator(&p.v, 0);
        let inv = gv
            .invert_i_plus()
            .map_err(|e| CliError::from(e).with_stage("similarity"))?;
        let mut factor_err = 0.0_f64;
        for j in p.sim.window().modes() {
            for l in p.sim.window().modes() {
                let mut got = inv.block_or_zero(j, l)[(0, 0)];
                if j == l {
                    got += C64::new(1.0, 0.0);
                }
                factor_err = factor_err.max((got - reference.inverse_factor_entry(j, l)).norm());
            }
        }
        checks.push(Check::upper(
            "golden_inverse_factor",
            factor_err,
            gate::GOLDEN_INVERSE_FACTOR,
        ));
    }

    let all_pass = checks.iter().all(|c| c.pass);
    let validation = ValidationReport {
        golden_suite: golden,
        checks,
        all_pass,
    };
    output::ensure_dir(out_dir)?;
    write_manifest(out_dir, "validate", config)?;
    output::write_json(&out_dir.join("validation.json"), &validation)?;
    output::write_json(&out_dir.join("diagnostics.json"), &diagnostics(&p)?)?;
    for check in &validation.checks {
        println!(
            "{} {}: {:e} (tolerance {:e})",
            if check.pass { "pass" } else { "FAIL" },
            check.name,
            check.value,
            check.tolerance
        );
    }
    if all_pass {
        println!("validate: all checks passed");
        Ok(())
    } else {
        Err(CliError {
            exit_code: 1,
            kind: "ToleranceBreach".into(),
            message: "one or more validation checks failed; see validation.json".into(),
            stage: "validate".into(),
        })
    }
}

// ---------------------------------------------------------------- diagnose

pub fn cmd_diagnose(config: &RunConfig, base_dir: &Path, out_dir: &Path) -> Result<(), CliError> {
    let p = run_pipeline(config, base_dir)?;
    let n_max = config.half_width;
    let k = p.sim.k;

    // equiconvergence sweep with the envelope fitted at the first cutoff
    let gaps: Vec<_> = ((k + 1)..=n_max)
        .into_par_iter()
        .map(|n| {
            equiconvergence_gap(&p.sim, &p.v, n)
                .map_err(|e| CliError::from(e).with_stage("spectral"))
        })
        .collect::<Result<_, _>>()?;
    let fitted_constant = gaps
        .first()
        .filter(|g| g.bound_factor > 0.0)
        .map(|g| g.gap / g.bound_factor)
        .unwrap_or(0.0);
    let mut csv = String::from("n,gap,bound_factor,fitted_bound\n");
    for g in &gaps {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            g.n,
            g.gap,
            g.bound_factor,
            fitted_constant * g.bound_factor
        ));
    }
    output::ensure_dir(out_dir)?;
    output::atomic_write(&out_dir.join("equiconvergence.csv"), &csv)?;

    // tail-bound sweep
    let psi = match &config.initial {
        Some(s) => config.state(s, base_dir)?,
        None => default_state(config)?,
    };
    let times = config
        .times
        .clone()
        .unwrap_or_else(|| vec![-1.0, 0.0, 1.0]);
    let mut csv = String::from("t,n,bound,true_error\n");
    for n in (k + 1)..n_max {
        for &t in &times {
            let est = tail_bound(&p.sim, &psi, n, t)
                .map_err(|e| CliError::from(e).with_stage("evolution"))?;
            csv.push_str(&format!("{t},{n},{},{}\n", est.bound, est.true_error));
        }
    }
    output::atomic_write(&out_dir.join("tail.csv"), &csv)?;
    write_manifest(out_dir, "diagnose", config)?;

    // spectral abscissa vs measured group growth (reported, not gated)
    let report = spectrum(&p.sim).map_err(|e| CliError::from(e).with_stage("spectral"))?;
    let abscissa = report
        .all()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let rate = growth_rate(&p.sim, 10.0).map_err(|e| CliError::from(e).with_stage("evolution"))?;

    #[derive(Serialize)]
    struct DiagnoseJson {
        #[serde(flatten)]
        base: Diagnostics,
        spectral_abscissa: f64,
        growth_rate_measured: f64,
        equiconvergence_fitted_constant: f64,
    }
    output::write_json(
        &out_dir.join("diagnostics.json"),
        &DiagnoseJson {
            base: diagnostics(&p)?,
            spectral_abscissa: abscissa,
            growth_rate_measured: rate,
            equiconvergence_fitted_constant: fitted_constant,
        },
    )?;
    println!(
        "diagnose: {} equiconvergence cutoffs, tail sweep over {} times -> {}",
        gaps.len(),
        times.len(),
        out_dir.display()
    );
    Ok(())
}

/// Resolved copy of the config with command-level defaults made explicit
/// for the manifest. A null `initial` under `diagnose` stays null: it
/// denotes the built-in probe state with coefficients `1/(1 + l^2)`.
pub fn resolve_defaults(config: &RunConfig, command: &str) -> RunConfig {
    let mut resolved = config.clone();
    match command {
        "validate" => {
            resolved.times.get_or_insert_with(|| gate::TIMES.to_vec());
        }
        "diagnose" => {
            resolved.times.get_or_insert_with(|| vec![-1.0, 0.0, 1.0]);
        }
        _ => {}
    }
    resolved
}
