//! Acceptance suite: one test per release criterion, each printing a single
//! PASS line on success (run with --nocapture to see them).
//!
//! Statistical criteria run on fixed seeds so the suite is deterministic.

use dualist_core::catalog::{
    equal_three_level_box, equal_two_level_box, ground_box, uneven_two_level_box,
};
use dualist_core::dynamics::{fp_evolve, simulate_path, FpDrift, IntegratorConfig, ParticleState};
use dualist_core::ensemble::{run_ensemble, EnsembleInit, EnsembleSpec};
use dualist_core::grid::{DensityField, Grid1d};
use dualist_core::grw::{apply_hit, hit_density, hit_weight, GridWavefunction, HitConfig};
use dualist_core::macro_limit::{
    com_reduce, constants, mean_drift_closed, mean_drift_mc, mean_drift_weighted_sum, tau,
    GaussianPacketSpec,
};
use dualist_core::rng::stream;
use dualist_core::spectral::{MomentTable, NodePolicy, PhaseVector};
use dualist_core::stats::{
    chi_square_test, chi_square_uniform_circle, histogram_l1, ks_statistic, ks_threshold_95,
    Estimate,
};
use dualist_core::ste::{
    apply_ste_to_ensemble, dqe_marginal, make_dqe, sample_ste, SteSampler,
};
use num_complex::Complex64;
use rand::Rng;

const TAU_CIRCLE: f64 = std::f64::consts::TAU;

/// Criterion 1: strict conservation across transition events. Over a run
/// with >= 100 events, level magnitudes, member coefficients and the energy
/// moments are bit-identical; K = 0 systems are state-invariant.
#[test]
fn criterion_01_strict_conservation() {
    let sys = equal_three_level_box();
    let snapshot = serde_json::to_vec(&sys.levels).unwrap();
    let h0 = sys.h_mean();
    let de0 = sys.delta_e();
    let cfg = IntegratorConfig::new(1e-3);
    let start = ParticleState { q: vec![0.5], theta: PhaseVector::zeros(2), t: 0.0 };
    let mut rng = stream(1001, 0);
    let rec = simulate_path(&sys, start, 12.0, 10.0, &cfg, 1000, &mut rng).unwrap();
    assert!(rec.events.len() >= 100, "only {} events", rec.events.len());
    for e in &rec.events {
        assert_ne!(e.theta_before, e.theta_after);
        // Conserved quantities recomputed after the event, compared bit-wise.
        assert_eq!(h0.to_bits(), sys.h_mean().to_bits());
        assert_eq!(de0.to_bits(), sys.delta_e().to_bits());
    }
    assert_eq!(snapshot, serde_json::to_vec(&sys.levels).unwrap());

    // K = 0: events fire but carry no phase state at all.
    let g = ground_box();
    let mut rng = stream(1001, 1);
    let rec = simulate_path(
        &g,
        ParticleState { q: vec![0.5], theta: PhaseVector::zeros(0), t: 0.0 },
        2.0,
        10.0,
        &cfg,
        1000,
        &mut rng,
    )
    .unwrap();
    assert!(!rec.events.is_empty());
    for e in &rec.events {
        assert!(e.theta_before.is_empty() && e.theta_after.is_empty());
    }
    println!("criterion 01 strict conservation across events: PASS");
}

/// Criterion 2: transition sampler vs quadrature density; 1e5 draws at 5
/// seeded (q, t) points on three catalog systems, chi-square p > 0.01 with
/// at most one failure allowed across the 15 tests.
#[test]
fn criterion_02_sampler_fidelity() {
    let systems = vec![
        ("two-level equal", equal_two_level_box()),
        ("two-level uneven", uneven_two_level_box()),
        ("three-level equal", equal_three_level_box()),
    ];
    let mut failures = 0;
    let mut total = 0;
    let mut point_rng = stream(2002, 0);
    for (name, sys) in &systems {
        let k = sys.k();
        for rep in 0..5 {
            let q = 0.1 + 0.8 * point_rng.random::<f64>();
            let t = 2.0 * point_rng.random::<f64>();
            let sampler = SteSampler::at_point(sys, t, &[q]).unwrap();
            let n = 100_000usize;
            let mut rng = stream(2002, 1 + rep as u64 + 10 * total as u64);
            let (bins_per_dim, cells) = if k == 1 { (32, 32) } else { (16, 256) };
            let mut counts = vec![0u64; cells];
            for _ in 0..n {
                let th = sampler.sample(&mut rng).unwrap();
                let mut cell = 0usize;
                for d in 0..k {
                    let b = ((th.0[d] / TAU_CIRCLE * bins_per_dim as f64) as usize)
                        .min(bins_per_dim - 1);
                    cell = cell * bins_per_dim + b;
                }
                counts[cell] += 1;
            }
            // Expected counts by sub-cell quadrature of the density.
            let total_sq = sampler_norm(&sampler, k);
            let w = TAU_CIRCLE / bins_per_dim as f64;
            let sub = 4;
            let expected: Vec<f64> = (0..cells)
                .map(|c| {
                    let mut idx = vec![0usize; k];
                    let mut cc = c;
                    for d in (0..k).rev() {
                        idx[d] = cc % bins_per_dim;
                        cc /= bins_per_dim;
                    }
                    let mut acc = 0.0;
                    let subcells = sub_pow(sub, k);
                    for s in 0..subcells {
                        let mut ss = s;
                        let mut th = PhaseVector(vec![0.0; k]);
                        for d in 0..k {
                            let j = ss % sub;
                            ss /= sub;
                            th.0[d] = (idx[d] as f64 + (j as f64 + 0.5) / sub as f64) * w;
                        }
                        acc += sampler.psi_sq(&th);
                    }
                    acc / subcells as f64 * w.powi(k as i32) / (TAU_CIRCLE.powi(k as i32) * total_sq)
                        * n as f64
                })
                .collect();
            let res = chi_square_test(&counts, &expected, 5.0).unwrap();
            total += 1;
            if res.p_value <= 0.01 {
                failures += 1;
                eprintln!("  {name} rep {rep}: p = {:.4}", res.p_value);
            }
        }
    }
    assert_eq!(total, 15);
    assert!(failures <= 1, "{failures} of {total} sampler tests failed");
    println!("criterion 02 sampler fidelity ({}/{} passed): PASS", total - failures, total);
}

fn sampler_norm(sampler: &SteSampler, k: usize) -> f64 {
    // sum |a_i|^2 recovered from the flat-phase average of |psi|^2 over a
    // coarse grid (exact by orthogonality of the phase factors in the mean).
    let m = 64usize;
    let mut acc = 0.0;
    let cells = sub_pow(m, k);
    for c in 0..cells {
        let mut cc = c;
        let mut th = PhaseVector(vec![0.0; k]);
        for d in 0..k {
            th.0[d] = ((cc % m) as f64 + 0.5) / m as f64 * TAU_CIRCLE;
            cc /= m;
        }
        acc += sampler.psi_sq(&th);
    }
    acc / cells as f64
}

fn sub_pow(base: usize, exp: usize) -> usize {
    base.pow(exp as u32)
}

/// Criterion 3: decoherent-equilibrium stationarity. A 1e4-member ensemble
/// with uniform phases and per-member Born positions receives one event
/// each; phases stay uniform (chi-square) and the position distribution
/// conditioned on the new phase stays in the KS 95% band per phase bin.
#[test]
fn criterion_03_dqe_stationarity() {
    let sys = uneven_two_level_box();
    let mut rng = stream(3003, 0);
    let n = 10_000;
    let t = 0.3;
    let mut members = make_dqe(&sys, n, &mut rng).unwrap();
    apply_ste_to_ensemble(&sys, &mut members, t, &mut rng).unwrap();

    let phases: Vec<f64> = members.iter().map(|m| m.theta.0[0]).collect();
    let chi = chi_square_uniform_circle(&phases, 24).unwrap();
    assert!(chi.p_value > 0.01, "phase uniformity p = {}", chi.p_value);

    // Marginal positions unchanged.
    let xs: Vec<f64> = members.iter().map(|m| m.q[0]).collect();
    let marg = dqe_marginal(&sys).unwrap();
    let d = ks_statistic(&xs, &marg).unwrap();
    assert!(d < ks_threshold_95(n), "marginal ks {d}");

    // Conditional positions per phase bin against the bin-averaged density.
    let bins = 6;
    let grid = sys.grid();
    for b in 0..bins {
        let (lo, hi) = (
            b as f64 / bins as f64 * TAU_CIRCLE,
            (b + 1) as f64 / bins as f64 * TAU_CIRCLE,
        );
        let xs_bin: Vec<f64> = members
            .iter()
            .filter(|m| m.theta.0[0] >= lo && m.theta.0[0] < hi)
            .map(|m| m.q[0])
            .collect();
        let nsub = 17;
        let values = grid.sample(|x| {
            (0..nsub)
                .map(|j| {
                    let th = lo + (j as f64 + 0.5) / nsub as f64 * (hi - lo);
                    sys.eval(&PhaseVector(vec![th]), t, &[x]).psi.norm_sqr()
                })
                .sum::<f64>()
        });
        let reference = DensityField::from_samples(grid.clone(), values, t).unwrap();
        let d = ks_statistic(&xs_bin, &reference).unwrap();
        assert!(
            d < ks_threshold_95(xs_bin.len()),
            "bin {b}: ks {d} with {} members",
            xs_bin.len()
        );
    }
    println!("criterion 03 decoherent-equilibrium stationarity: PASS");
}

/// Criterion 4: Born-statistics preservation and relaxation against the
/// grid solver, 1e4 paths, dt = 1e-3 tau.
#[test]
fn criterion_04_equilibrium_and_relaxation() {
    let tau_box = 1.0; // m L^2 / hbar for the unit box
    let dt = 1e-3 * tau_box;
    let members = 10_000;
    let stride = 500; // checkpoint every 0.5 tau

    // (a) Equilibrium ensemble stays in the KS 95% band over [0, 3 tau].
    let sys = equal_two_level_box();
    let theta0 = PhaseVector::zeros(1);
    let spec = EnsembleSpec {
        members,
        horizon: 3.0 * tau_box,
        rate: 0.0,
        integrator: IntegratorConfig::new(dt),
        stride,
        init: EnsembleInit::Equilibrium,
        theta0: theta0.clone(),
    };
    let res = run_ensemble(&sys, &spec, 4004).unwrap();
    let times = res.records[0].times.clone();
    for (idx, &t) in times.iter().enumerate() {
        let xs = res.positions_at(idx);
        let field = sys.density_field(&theta0, t).unwrap();
        let d = ks_statistic(&xs, &field).unwrap();
        assert!(d < ks_threshold_95(members), "t = {t}: ks {d}");
    }

    // (b) Uniform start relaxes to |psi|^2 and tracks the independent
    // Fokker-Planck oracle throughout.
    let g = ground_box();
    let theta = PhaseVector::zeros(0);
    let spec = EnsembleSpec {
        members,
        horizon: 3.0 * tau_box,
        rate: 0.0,
        integrator: IntegratorConfig::new(dt),
        stride,
        init: EnsembleInit::Uniform,
        theta0: theta.clone(),
    };
    let res = run_ensemble(&g, &spec, 4007).unwrap();
    let times = res.records[0].times.clone();
    let mut fp = DensityField::uniform(g.grid(), 0.0);
    // 4 bins keep the pure-sampling L1 floor (~0.014 at n = 1e4) clear of
    // the 0.02 gate while still resolving the |psi|^2 profile.
    let bins = 4;
    for (idx, &t) in times.iter().enumerate().skip(1) {
        fp = fp_evolve(FpDrift::System(&g, &theta), g.hbar / g.masses[0], &fp, t, 100).unwrap();
        let xs = res.positions_at(idx);
        let l1 = histogram_l1(&xs, &fp, bins).unwrap();
        assert!(l1 < 0.02, "t = {t}: ensemble vs oracle L1 {l1}");
    }
    let xs = res.final_positions();
    let born = g.density_field(&theta, 3.0).unwrap();
    let l1 = histogram_l1(&xs, &born, bins).unwrap();
    assert!(l1 < 0.02, "final L1 to |psi|^2: {l1}");
    let oracle_l1 = fp.l1_distance(&born);
    assert!(oracle_l1 < 1e-3, "oracle itself off equilibrium by {oracle_l1}");
    println!("criterion 04 equilibrium preservation and relaxation: PASS");
}

/// Criterion 5: centroid mean-evolution law. The ensemble-mean centroid
/// obeys d{mu}/dt = {<p>/m} + lambda ({mu}_p - {mu}). The unitary term is
/// removed exactly (Ehrenfest via the moment table), and the event-driven
/// centroid increment per checkpoint interval is regressed against the
/// independently estimated integral of sum({mu}_p - {mu}) dt; the slope
/// recovers lambda within 10%.
#[test]
fn criterion_05_mean_evolution_law() {
    let sys = equal_two_level_box();
    let table = MomentTable::build(&sys).unwrap();
    let lambda = 0.5;
    let members = 10_000;
    let theta0 = PhaseVector::zeros(1);
    let spec = EnsembleSpec {
        members,
        horizon: 4.0,
        rate: lambda,
        integrator: IntegratorConfig::new(1e-3),
        stride: 20,
        init: EnsembleInit::Equilibrium,
        theta0: theta0.clone(),
    };
    let res = run_ensemble(&sys, &spec, 5005).unwrap();

    // Independent estimate of the integrand sum_members ({mu}_p - {mu}) at
    // each checkpoint: draw a post-event phase at every member's current
    // position and accumulate the centroid difference.
    let times = res.records[0].times.clone();
    let mut integrand = Vec::with_capacity(times.len());
    let mut rng = stream(5006, 0);
    for (idx, &t) in times.iter().enumerate() {
        let mut acc = 0.0;
        for r in &res.records {
            let x = r.positions[idx][0];
            let theta_p = sample_ste(&sys, &[x], t, &mut rng).unwrap();
            acc += table.mu(&theta_p, t) - table.mu(&r.thetas[idx], t);
        }
        integrand.push(acc);
    }

    // Per-interval regression: the jump sum y_k in (t_k, t_{k+1}] has
    // expectation lambda * x_k with x_k the trapezoid integral of the
    // integrand over the interval. Slope through the origin recovers
    // lambda; the fast beat oscillation supplies the regression signal
    // instead of cancelling it.
    let h = times[1] - times[0];
    let mut jumps = vec![0.0f64; times.len() - 1];
    for r in &res.records {
        for e in &r.events {
            let k = ((e.time / h).ceil() as usize).clamp(1, times.len() - 1) - 1;
            jumps[k] += table.mu(&e.theta_after, e.time) - table.mu(&e.theta_before, e.time);
        }
    }
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for k in 0..jumps.len() {
        let x = 0.5 * h * (integrand[k] + integrand[k + 1]);
        sxy += x * jumps[k];
        sxx += x * x;
    }
    let lambda_hat = sxy / sxx;
    assert!(
        (lambda_hat - lambda).abs() <= 0.1 * lambda,
        "lambda_hat {lambda_hat} vs {lambda}"
    );

    // Rate-0 control: no events, so the fitted coefficient is exactly zero.
    let mut control = spec.clone();
    control.rate = 0.0;
    let res0 = run_ensemble(&sys, &control, 5005).unwrap();
    assert_eq!(res0.total_events(), 0);
    println!(
        "criterion 05 mean-evolution coefficient {lambda_hat:.4} (target {lambda}): PASS"
    );
}

/// Criterion 6: phase-averaged packet drift. Monte Carlo over the transition
/// law matches the closed form at R_p/sigma in {0,+-1,+-3} for
/// sigma M U / hbar in {0,1,3}, within 3 standard errors plus the measured
/// discretization gap; deviations from U respect hbar/(2 M sigma).
#[test]
fn criterion_06_macroscopic_mean_drift() {
    let bound = 0.5; // hbar / (2 M sigma) for unit parameters
    let mut seed = 0u64;
    for &u in &[0.0, 1.0, 3.0] {
        let spec = GaussianPacketSpec::new(1.0, u, 1.0);
        let sys = dualist_core::macro_limit::build_gaussian_packet(&spec).unwrap();
        for &r in &[0.0, 1.0, -1.0, 3.0, -3.0] {
            seed += 1;
            let mut rng = stream(6006, seed);
            let closed = mean_drift_closed(&spec, r);
            let det = mean_drift_weighted_sum(&sys, r);
            let gap = (det - closed).abs();
            let mc = mean_drift_mc(&sys, r, 10_000, &mut rng).unwrap();
            let tol = 3.0 * mc.std_error + gap;
            assert!(
                (mc.value - closed).abs() <= tol,
                "u {u} r {r}: mc {} +- {} vs closed {closed} (gap {gap})",
                mc.value,
                mc.std_error
            );
            assert!(
                (mc.value - u).abs() <= bound + 3.0 * mc.std_error,
                "u {u} r {r}: |mc - U| = {} above bound {bound}",
                (mc.value - u).abs()
            );
        }
    }
    println!("criterion 06 macroscopic mean drift scan (15 points): PASS");
}

/// Criterion 7: large-N step law. For the reduced center of mass with
/// N lambda tau >> 1, the mean inter-event displacement is U / (N lambda)
/// within 3 standard errors over >= 1e4 intervals.
#[test]
fn criterion_07_large_n_step_law() {
    let n_particles = 100;
    let lambda = 0.1;
    let u = 1.0;
    let packet = GaussianPacketSpec::new(1.0, u, 1.0);
    let com = com_reduce(n_particles, 1.0, &packet, lambda).unwrap();
    assert!((com.rate - 10.0).abs() < 1e-12);
    let (lo, hi) = com.system.domain.bounds[0];
    let period = hi - lo;

    let spec = EnsembleSpec {
        members: 25,
        horizon: 44.0,
        rate: com.rate,
        integrator: IntegratorConfig {
            node: NodePolicy { eps_node: 1e-12, b_max: 50.0 },
            ..IntegratorConfig::new(0.01)
        },
        stride: 4400,
        init: EnsembleInit::Point { q: vec![0.0] },
        theta0: PhaseVector::zeros(com.system.k()),
    };
    let res = run_ensemble(&com.system, &spec, 7007).unwrap();

    let mut displacements = Vec::new();
    for r in &res.records {
        for w in r.events.windows(2) {
            let mut d = w[1].position[0] - w[0].position[0];
            // Undo the periodic wrap of the quadrature window.
            d -= period * (d / period).round();
            displacements.push(d);
        }
    }
    assert!(displacements.len() >= 10_000, "only {} intervals", displacements.len());
    let est = Estimate::from_samples(&displacements);
    let target = u / com.rate;
    assert!(
        est.within_sigmas(target, 3.0),
        "mean step {} +- {} vs {target}",
        est.value,
        est.std_error
    );
    println!(
        "criterion 07 large-N step law ({} intervals, {:.5} +- {:.5} vs {target}): PASS",
        est.n, est.value, est.std_error
    );
}

/// Criterion 8: localization-model checks. Hit-center density normalizes to
/// 1e-6 on randomized states; Gaussian posterior variance matches the
/// precision sum to 1e-6; sampled hit-center variance matches
/// s^2 + 1/(2 alpha) within 3 standard errors over 1e5 draws.
#[test]
fn criterion_08_localization_model() {
    // Randomized states: superpositions of random Gaussians with phases.
    let g = Grid1d::new(-24.0, 24.0, 4001);
    let cfg = HitConfig { alpha: 0.9, rate: 1.0 };
    let mut rng = stream(8008, 0);
    for _ in 0..3 {
        let lobes: Vec<(f64, f64, f64, f64)> = (0..3)
            .map(|_| {
                (
                    rng.random::<f64>() * 8.0 - 4.0,     // center
                    0.7 + rng.random::<f64>() * 1.5,     // width
                    0.3 + rng.random::<f64>(),           // amplitude
                    rng.random::<f64>() * TAU_CIRCLE,    // phase
                )
            })
            .collect();
        let psi = GridWavefunction::from_fn(g.clone(), |x| {
            lobes
                .iter()
                .map(|&(c, w, a, ph)| {
                    Complex64::from_polar(a * (-(x - c) * (x - c) / (4.0 * w * w)).exp(), ph)
                })
                .sum()
        })
        .unwrap();
        let raw: f64 = (0..g.n)
            .map(|i| g.weight(i) * hit_weight(&psi, &cfg, g.x(i)))
            .sum();
        assert!((raw - 1.0).abs() < 1e-6, "hit-center mass {raw}");
    }

    // Gaussian posterior variance: precision sum, 1e-6.
    let gg = Grid1d::new(-30.0, 30.0, 24_001);
    let s = 1.2;
    let alpha = 0.8;
    let z = 0.5;
    let psi = GridWavefunction::from_fn(gg, |x| {
        Complex64::new((-x * x / (4.0 * s * s)).exp(), 0.0)
    })
    .unwrap();
    let hc = HitConfig { alpha, rate: 1.0 };
    let hit = apply_hit(&psi, &hc, z).unwrap();
    let (_, var) = hit.moments();
    let expect = 1.0 / (1.0 / (s * s) + 2.0 * alpha);
    assert!((var - expect).abs() < 1e-6, "posterior var {var} vs {expect}");

    // Hit-center sampling variance: s^2 + 1/(2 alpha), 1e5 draws, 3 SE.
    let f = hit_density(&psi, &hc).unwrap();
    let cdf = f.cdf();
    let mut rng = stream(8008, 1);
    let n = 100_000;
    let zs: Vec<f64> = (0..n).map(|_| f.inverse_cdf(&cdf, rng.random::<f64>())).collect();
    let mean = zs.iter().sum::<f64>() / n as f64;
    let sq: Vec<f64> = zs.iter().map(|z| (z - mean) * (z - mean)).collect();
    let var_est = Estimate::from_samples(&sq);
    let target = s * s + 1.0 / (2.0 * alpha);
    assert!(
        var_est.within_sigmas(target, 3.0),
        "hit-center variance {} +- {} vs {target}",
        var_est.value,
        var_est.std_error
    );
    println!("criterion 08 localization model checks: PASS");
}

/// Criterion 9: order-of-magnitude arithmetic with physical constants.
#[test]
fn criterion_09_physical_arithmetic() {
    let within_factor_10 = |value: f64, target: f64| value / target > 0.1 && value / target < 10.0;
    // N lambda ~ 1e7 / s at N = 1e23 with the quoted localization rate.
    assert!(within_factor_10(1e23 * constants::GRW_LAMBDA_PER_S, 1e7));
    // tau(1) ~ 1e-7 s (proton) and ~ 1e-11 s (electron) at L = 1e-5 cm.
    let tp = tau(1, constants::PROTON_MASS, constants::L1, constants::HBAR);
    let te = tau(1, constants::ELECTRON_MASS, constants::L1, constants::HBAR);
    assert!(within_factor_10(tp, 1e-7), "tau proton {tp}");
    assert!(within_factor_10(te, 1e-11), "tau electron {te}");
    // lambda tau(1) ~ 1e-23 for a proton.
    assert!(within_factor_10(constants::GRW_LAMBDA_PER_S * tp, 1e-23));
    // N lambda T ~ 1e-15 for N = 1e3 over T = 10 ms.
    assert!(within_factor_10(1e3 * constants::GRW_LAMBDA_PER_S * 0.01, 1e-15));
    println!("criterion 09 physical-constant arithmetic: PASS");
}

/// Criterion 10: bit-reproducibility across worker counts. The same seed and
/// configuration yield byte-identical serialized results on 1, 2 and 8
/// threads.
#[test]
fn criterion_10_reproducibility_across_workers() {
    let sys = equal_two_level_box();
    let spec = EnsembleSpec {
        members: 64,
        horizon: 0.5,
        rate: 1.0,
        integrator: IntegratorConfig::new(1e-3),
        stride: 50,
        init: EnsembleInit::Equilibrium,
        theta0: PhaseVector::zeros(1),
    };
    let run_with = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        let res = pool.install(|| run_ensemble(&sys, &spec, 1010)).unwrap();
        serde_json::to_vec(&res.records).unwrap()
    };
    let one = run_with(1);
    let two = run_with(2);
    let eight = run_with(8);
    assert_eq!(one, two);
    assert_eq!(one, eight);
    println!("criterion 10 reproducibility across worker counts: PASS");
}
