//! Subcommand implementations. Each command runs its experiment, writes a
//! deterministic output bundle (CSV artifacts, `summary.json`,
//! `plotdata/*.csv`, `manifest.json`), and returns the summary document.

use std::path::Path;

use dualist_core::dynamics::{fp_evolve, FpDrift};
use dualist_core::ensemble::run_ensemble;
use dualist_core::grw::{apply_hit, sample_hit_center, GridWavefunction, HitConfig};
use dualist_core::macro_limit::{
    build_gaussian_packet, com_reduce, mean_drift_closed, mean_drift_mc, mean_drift_weighted_sum,
    mean_step, spread_between_events, spread_is_negligible,
};
use dualist_core::rng::stream;
use dualist_core::stats::{
    chi_square_test, chi_square_uniform_circle, ks_p_value, ks_statistic, ks_threshold_95,
    Estimate,
};
use dualist_core::ste::{
    apply_ste_to_ensemble, dqe_marginal, make_dqe, transition_kernel, SteSampler,
};
use dualist_core::{DensityField, Grid1d};
use num_complex::Complex64;
use serde_json::json;

use crate::config::{build_experiment, OracleInit, SimConfig};
use crate::output::{columns_csv, events_csv, histogram, trajectories_csv, OutputWriter};
use crate::CliError;

fn summary_value(cfg: &SimConfig, command: &str, results: serde_json::Value) -> serde_json::Value {
    json!({
        "command": command,
        "seed": cfg.seed,
        "config": serde_json::to_value(cfg).expect("config serialization"),
        "results": results,
    })
}

/// `run`: simulate the configured ensemble and emit the trajectory bundle.
pub fn cmd_run(cfg: &SimConfig, out: &Path) -> Result<serde_json::Value, CliError> {
    let exp = build_experiment(cfg)?;
    let sys = &exp.system;
    let result = run_ensemble(sys, &exp.ensemble, cfg.seed)?;

    let mut writer = OutputWriter::new(out);
    writer.add("trajectories.csv", trajectories_csv(sys, &result));
    writer.add("events.csv", events_csv(sys, &result));

    // Model density at the final time (initial phases) plus the empirical
    // final histogram for plotting.
    let horizon = exp.ensemble.horizon;
    let field = sys.density_field(&exp.theta0, horizon)?;
    let xs: Vec<f64> = field.grid.points().collect();
    writer.add(
        "plotdata/model_density.csv",
        columns_csv(&[("x", &xs), ("density", &field.values)]),
    );
    let finals = result.final_positions();
    let (lo, hi) = sys.domain.bounds[0];
    let (centers, density) = histogram(&finals, lo, hi, 32);
    writer.add(
        "plotdata/final_histogram.csv",
        columns_csv(&[("x", &centers), ("density", &density)]),
    );

    let mean = Estimate::from_samples(&finals);
    let results = json!({
        "members": result.records.len(),
        "total_events": result.total_events(),
        "rate": exp.rate,
        "final_mean": mean.value,
        "final_mean_std_error": mean.std_error,
    });
    let summary = summary_value(cfg, "run", results);
    writer.add_json("summary.json", &summary);
    writer.finish()?;
    Ok(summary)
}

/// `oracle`: evolve a density with the grid-based Fokker-Planck solver and
/// report its distance to the model density.
pub fn cmd_oracle(cfg: &SimConfig, out: &Path) -> Result<serde_json::Value, CliError> {
    let section = cfg
        .oracle
        .clone()
        .ok_or_else(|| CliError::Validation(vec!["oracle: section missing".into()]))?;
    if !(section.t1 > 0.0) || section.steps == 0 {
        return Err(CliError::Validation(vec![
            "oracle: t1 must be > 0 and steps >= 1".into(),
        ]));
    }
    let exp = build_experiment(cfg)?;
    let sys = &exp.system;
    let rho0 = match section.init {
        OracleInit::Uniform => DensityField::uniform(sys.grid(), 0.0),
        OracleInit::Equilibrium => sys.density_field(&exp.theta0, 0.0)?,
    };
    let diffusion = sys.hbar / sys.masses[0];
    let rho1 = fp_evolve(
        FpDrift::System(sys, &exp.theta0),
        diffusion,
        &rho0,
        section.t1,
        section.steps,
    )?;
    let born = sys.density_field(&exp.theta0, section.t1)?;

    let mut writer = OutputWriter::new(out);
    let xs: Vec<f64> = rho0.grid.points().collect();
    writer.add(
        "plotdata/oracle_density.csv",
        columns_csv(&[
            ("x", &xs),
            ("initial", &rho0.values),
            ("final", &rho1.values),
            ("model_final", &born.values),
        ]),
    );
    let results = json!({
        "t1": section.t1,
        "steps": section.steps,
        "l1_to_model": rho1.l1_distance(&born),
        "mass_drift": (rho1.mass() - 1.0).abs(),
    });
    let summary = summary_value(cfg, "oracle", results);
    writer.add_json("summary.json", &summary);
    writer.finish()?;
    Ok(summary)
}

/// `ste-test`: chi-square goodness of fit of the transition-event phase
/// sampler against the tabulated conditional density at seeded points.
pub fn cmd_ste_test(cfg: &SimConfig, out: &Path) -> Result<serde_json::Value, CliError> {
    let section = cfg.ste_test.clone().unwrap_or_default();
    if section.points == 0 || section.draws == 0 || section.bins < 2 {
        return Err(CliError::Validation(vec![
            "ste_test: needs points >= 1, draws >= 1, bins >= 2".into(),
        ]));
    }
    let exp = build_experiment(cfg)?;
    let sys = &exp.system;
    let k = sys.k();
    if k == 0 || k > 2 {
        return Err(CliError::Validation(vec![format!(
            "ste_test: tabulated reference requires 1 <= K <= 2, model has K = {k}"
        )]));
    }
    let marginal = dqe_marginal(sys)?;
    let cdf = marginal.cdf();
    let mut rng = stream(cfg.seed, 0);
    let tau = std::f64::consts::TAU;
    let cell = (tau / section.bins as f64).powi(k as i32);
    let cells = section.bins.pow(k as u32);
    let mut point_reports = Vec::new();
    let mut failures = 0usize;
    for p in 0..section.points {
        // Representative positions: drawn from the position marginal, so
        // low-density regions are visited rarely, as in a simulation.
        let q = vec![marginal.inverse_cdf(&cdf, rand::Rng::random::<f64>(&mut rng))];
        let t = 0.1 + 0.2 * p as f64;
        let kernel = transition_kernel(sys, &q, t, section.bins)?;
        let expected: Vec<f64> = kernel
            .iter()
            .map(|f| f * cell * section.draws as f64)
            .collect();
        let sampler = SteSampler::at_point(sys, t, &q)?;
        let mut observed = vec![0u64; cells];
        for _ in 0..section.draws {
            let theta = sampler.sample(&mut rng)?;
            let mut c = 0usize;
            for d in 0..k {
                let frac = theta.0[d].rem_euclid(tau) / tau;
                let b = ((frac * section.bins as f64) as usize).min(section.bins - 1);
                c += b * section.bins.pow(d as u32);
            }
            observed[c] += 1;
        }
        let test = chi_square_test(&observed, &expected, 5.0)?;
        let pass = test.p_value > cfg.significance();
        if !pass {
            failures += 1;
        }
        point_reports.push(json!({
            "q": q,
            "t": t,
            "statistic": test.statistic,
            "dof": test.dof,
            "p_value": test.p_value,
            "pass": pass,
        }));
    }

    let mut writer = OutputWriter::new(out);
    let results = json!({
        "points": point_reports,
        "failures": failures,
        "allowed_failures": section.allowed_failures,
        "significance": cfg.significance(),
    });
    let summary = summary_value(cfg, "ste-test", results);
    writer.add_json("summary.json", &summary);
    writer.finish()?;
    if failures > section.allowed_failures {
        return Err(CliError::Stats(format!(
            "{failures} of {} sampler points failed at significance {}",
            section.points,
            cfg.significance()
        )));
    }
    Ok(summary)
}

/// `dqe`: build a phase-decohered equilibrium ensemble, apply one
/// transition event to every member, and verify stationarity.
pub fn cmd_dqe(cfg: &SimConfig, out: &Path) -> Result<serde_json::Value, CliError> {
    let section = cfg.dqe.clone().unwrap_or_default();
    if section.members < 100 || section.phase_bins < 2 {
        return Err(CliError::Validation(vec![
            "dqe: needs members >= 100 and phase_bins >= 2".into(),
        ]));
    }
    let exp = build_experiment(cfg)?;
    let sys = &exp.system;
    if sys.k() == 0 {
        return Err(CliError::Validation(vec![
            "dqe: model must have at least one free phase (K >= 1)".into(),
        ]));
    }
    let mut rng = stream(cfg.seed, 0);
    let mut members = make_dqe(sys, section.members, &mut rng)?;
    apply_ste_to_ensemble(sys, &mut members, section.time, &mut rng)?;

    let marginal = dqe_marginal(sys)?;
    let xs: Vec<f64> = members.iter().map(|m| m.q[0]).collect();
    let ks = ks_statistic(&xs, &marginal)?;
    let ks_p = ks_p_value(ks, xs.len());
    let ks_pass = ks < ks_threshold_95(xs.len());
    let mut phase_reports = Vec::new();
    let mut pass = ks_pass;
    for j in 0..sys.k() {
        let phases: Vec<f64> = members.iter().map(|m| m.theta.0[j]).collect();
        let test = chi_square_uniform_circle(&phases, section.phase_bins)?;
        let ok = test.p_value > cfg.significance();
        pass &= ok;
        phase_reports.push(json!({
            "phase": j + 1,
            "statistic": test.statistic,
            "p_value": test.p_value,
            "pass": ok,
        }));
    }

    let mut writer = OutputWriter::new(out);
    let grid_x: Vec<f64> = marginal.grid.points().collect();
    let (lo, hi) = sys.domain.bounds[0];
    let (centers, density) = histogram(&xs, lo, hi, 32);
    writer.add(
        "plotdata/dqe_marginal.csv",
        columns_csv(&[("x", &grid_x), ("density", &marginal.values)]),
    );
    writer.add(
        "plotdata/dqe_positions.csv",
        columns_csv(&[("x", &centers), ("density", &density)]),
    );
    let results = json!({
        "members": section.members,
        "event_time": section.time,
        "position_ks": ks,
        "position_ks_p": ks_p,
        "position_pass": ks_pass,
        "phase_uniformity": phase_reports,
        "pass": pass,
    });
    let summary = summary_value(cfg, "dqe", results);
    writer.add_json("summary.json", &summary);
    writer.finish()?;
    if !pass {
        return Err(CliError::Stats(
            "decohered-equilibrium stationarity check failed".into(),
        ));
    }
    Ok(summary)
}

/// `grw`: spontaneous-localization comparison model. Applies a sequence of
/// sampled Gaussian hits to an initial Gaussian state and records the
/// collapse of its spatial variance.
pub fn cmd_grw(cfg: &SimConfig, out: &Path) -> Result<serde_json::Value, CliError> {
    let section = cfg
        .grw
        .clone()
        .ok_or_else(|| CliError::Validation(vec!["grw: section missing".into()]))?;
    let hit_cfg = HitConfig { alpha: section.alpha, rate: section.rate };
    hit_cfg.validate()?;
    let grid = Grid1d::new(section.grid_lo, section.grid_hi, section.grid_n);
    let s2 = section.sigma0 * section.sigma0;
    let mut psi = GridWavefunction::from_fn(grid, |x| {
        Complex64::new((-x * x / (4.0 * s2)).exp(), 0.0)
    })?;
    psi.normalize()?;

    let mut rng = stream(cfg.seed, 0);
    let mut rows: Vec<(f64, f64, f64, f64)> = Vec::new();
    let (m0, v0) = psi.moments();
    rows.push((f64::NAN, m0, v0, psi.kinetic_energy(1.0, 1.0)));
    for _ in 0..section.hits {
        let z = sample_hit_center(&psi, &hit_cfg, &mut rng)?;
        psi = apply_hit(&psi, &hit_cfg, z)?;
        let (m, v) = psi.moments();
        rows.push((z, m, v, psi.kinetic_energy(1.0, 1.0)));
    }

    let mut writer = OutputWriter::new(out);
    let zs: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let means: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let vars: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let kin: Vec<f64> = rows.iter().map(|r| r.3).collect();
    writer.add(
        "plotdata/hits.csv",
        columns_csv(&[("center", &zs), ("mean", &means), ("variance", &vars), ("kinetic", &kin)]),
    );
    let final_density = psi.density()?;
    let xs: Vec<f64> = final_density.grid.points().collect();
    writer.add(
        "plotdata/final_density.csv",
        columns_csv(&[("x", &xs), ("density", &final_density.values)]),
    );
    // Variance of a pure Gaussian after one hit: 1/(1/s^2 + 2 alpha).
    let one_hit_variance = 1.0 / (1.0 / s2 + 2.0 * section.alpha);
    let results = json!({
        "hits": section.hits,
        "initial_variance": v0,
        "final_variance": vars.last().copied().unwrap_or(v0),
        "one_hit_posterior_variance": one_hit_variance,
        "final_kinetic": kin.last().copied().unwrap_or(f64::NAN),
    });
    let summary = summary_value(cfg, "grw", results);
    writer.add_json("summary.json", &summary);
    writer.finish()?;
    Ok(summary)
}

/// `macro`: center-of-mass reduction of an N-particle object and the
/// phase-averaged drift scan of its Gaussian packet.
pub fn cmd_macro(cfg: &SimConfig, out: &Path) -> Result<serde_json::Value, CliError> {
    let section = cfg
        .macro_scan
        .clone()
        .ok_or_else(|| CliError::Validation(vec!["macro: section missing".into()]))?;
    let com = com_reduce(
        section.n_particles,
        section.particle_mass,
        &section.packet,
        section.lambda,
    )?;
    let sys = build_gaussian_packet(&section.packet)?;
    let mut rng = stream(cfg.seed, 0);

    let mut r_col = Vec::with_capacity(section.r_count);
    let mut closed_col = Vec::with_capacity(section.r_count);
    let mut weighted_col = Vec::with_capacity(section.r_count);
    let mut mc_col = Vec::with_capacity(section.r_count);
    let mut mc_se_col = Vec::with_capacity(section.r_count);
    let mut max_gap = 0.0f64;
    let mut max_dev_from_u = 0.0f64;
    for i in 0..section.r_count {
        let r = section.r_min
            + (section.r_max - section.r_min) * i as f64 / (section.r_count - 1) as f64;
        let closed = mean_drift_closed(&section.packet, r);
        let weighted = mean_drift_weighted_sum(&sys, r);
        max_gap = max_gap.max((weighted - closed).abs());
        max_dev_from_u = max_dev_from_u.max((closed - section.packet.mean_velocity).abs());
        r_col.push(r);
        closed_col.push(closed);
        weighted_col.push(weighted);
        if section.mc_draws > 0 {
            let est = mean_drift_mc(&sys, r, section.mc_draws, &mut rng)?;
            mc_col.push(est.value);
            mc_se_col.push(est.std_error);
        } else {
            mc_col.push(f64::NAN);
            mc_se_col.push(f64::NAN);
        }
    }

    let mut writer = OutputWriter::new(out);
    writer.add(
        "plotdata/drift_scan.csv",
        columns_csv(&[
            ("r", &r_col),
            ("closed_form", &closed_col),
            ("weighted_sum", &weighted_col),
            ("monte_carlo", &mc_col),
            ("monte_carlo_std_error", &mc_se_col),
        ]),
    );
    let spec = &section.packet;
    let drift_bound = spec.hbar / (2.0 * spec.mass * spec.sigma);
    let spread = spread_between_events(
        section.n_particles,
        section.particle_mass,
        section.lambda,
        spec.hbar,
    );
    let results = json!({
        "n_particles": section.n_particles,
        "total_mass": com.total_mass,
        "event_rate": com.rate,
        "diffusion": com.diffusion,
        "drift_bound": drift_bound,
        "max_closed_weighted_gap": max_gap,
        "max_deviation_from_mean_velocity": max_dev_from_u,
        "mean_step_from_origin": mean_step(
            0.0,
            spec.mean_velocity,
            section.n_particles,
            section.lambda
        ),
        "spread_between_events": spread,
        "spread_negligible": spread_is_negligible(spread, spec.sigma, section.n_particles),
    });
    let summary = summary_value(cfg, "macro", results);
    writer.add_json("summary.json", &summary);
    writer.finish()?;
    if max_dev_from_u > drift_bound * (1.0 + 1e-12) {
        return Err(CliError::Stats(format!(
            "phase-averaged drift deviates from the mean velocity by {max_dev_from_u}, above the bound {drift_bound}"
        )));
    }
    Ok(summary)
}

/// `validate`: parse/validate only; reports the assembled model shape.
pub fn cmd_validate(cfg: &SimConfig) -> Result<serde_json::Value, CliError> {
    let exp = build_experiment(cfg)?;
    Ok(json!({
        "command": "validate",
        "ok": true,
        "levels": exp.system.levels.len(),
        "free_phases": exp.system.k(),
        "dimension": exp.system.dim(),
        "mean_energy": exp.system.h_mean(),
        "rate": exp.rate,
    }))
}
