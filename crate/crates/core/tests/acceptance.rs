//! Acceptance gate: one test per criterion, each printing a PASS/FAIL
//! line with the measured numbers before asserting. The suite is
//! serialized behind a mutex so the stated runtime budgets are
//! measured without cross-test contention.

use channel_stab_core::evolution::{evolve, measure_decay_rate, verify_prop41, ForcingSlots};
use channel_stab_core::linop::{assemble, pseudospectral_gap, spectrum, Toggles};
use channel_stab_core::nonlinear::{
    bootstrap_min_inequality, classify_outcome, init_state, nonlinear_term, run_simulation,
    InitFamily, ModalState, Outcome, SimConfig,
};
use channel_stab_core::resolvent::{sweep_and_fit, SweepPlan, ALL_INEQUALITIES};
use channel_stab_core::scan::{
    fit_gamma, run_campaign_with, AmplitudeProbe, BoundKind, ScanPlan, SyntheticDetector,
};
use channel_stab_core::spectral::{
    build_grid, random_smooth_profile, solve_helmholtz, velocity_from_vorticity, ChebGrid,
    ComplexProfile, HelmholtzSolver,
};
use channel_stab_core::util::{fit_powerlaw, par_map};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

fn gate() -> std::sync::MutexGuard<'static, ()> {
    static LOCK: OnceLock<Mutex<()>> = OnceLock::new();
    match LOCK.get_or_init(|| Mutex::new(())).lock() {
        Ok(g) => g,
        Err(poisoned) => poisoned.into_inner(),
    }
}

struct Criterion {
    name: &'static str,
    checks: Vec<(String, bool)>,
    started: Instant,
}

impl Criterion {
    fn new(name: &'static str) -> Self {
        Criterion {
            name,
            checks: Vec::new(),
            started: Instant::now(),
        }
    }

    fn check(&mut self, label: impl Into<String>, ok: bool) {
        self.checks.push((label.into(), ok));
    }

    fn finish(self, budget_secs: Option<f64>) {
        let elapsed = self.started.elapsed().as_secs_f64();
        let mut all_ok = true;
        let mut detail = String::new();
        for (label, ok) in &self.checks {
            all_ok &= ok;
            detail.push_str(&format!("\n    [{}] {label}", if *ok { "ok" } else { "FAIL" }));
        }
        let mut budget_ok = true;
        if let Some(b) = budget_secs {
            budget_ok = elapsed <= b;
            detail.push_str(&format!(
                "\n    [{}] runtime {elapsed:.1} s (budget {b:.0} s)",
                if budget_ok { "ok" } else { "FAIL" }
            ));
        }
        let verdict = if all_ok && budget_ok { "PASS" } else { "FAIL" };
        println!("ACCEPTANCE {}: {verdict}{detail}", self.name);
        assert!(
            all_ok && budget_ok,
            "ACCEPTANCE {}: {verdict}{detail}",
            self.name
        );
    }
}

#[test]
fn criterion_1_spectral_correctness() {
    let _g = gate();
    let mut c = Criterion::new("1 (spectral correctness)");
    let grid = Arc::new(build_grid(64).unwrap());

    // Helmholtz closed forms at n = 64.
    let w = grid.sample_real(|y| (PI * y).sin());
    let phi = solve_helmholtz(&grid, 1, &w.view()).unwrap();
    let mut err = 0.0f64;
    for j in 0..grid.n {
        let want = -(PI * grid.nodes[j]).sin() / (PI * PI + 1.0);
        err = err.max((phi[j] - Complex64::new(want, 0.0)).norm());
    }
    c.check(format!("helmholtz sine err {err:.2e} <= 1e-10"), err <= 1e-10);

    let w2 = grid.sample_real(|y| y * y - 1.0);
    let phi2 = solve_helmholtz(&grid, 2, &w2.view()).unwrap();
    let cosh2 = 2.0f64.cosh();
    let mut err2 = 0.0f64;
    for j in 0..grid.n {
        let y = grid.nodes[j];
        let want = -y * y / 4.0 + 0.125 + (2.0 * y).cosh() / (8.0 * cosh2);
        err2 = err2.max((phi2[j] - Complex64::new(want, 0.0)).norm());
    }
    c.check(format!("helmholtz parabola err {err2:.2e} <= 1e-9"), err2 <= 1e-9);

    // Velocity closed form.
    let (u1, u2) = velocity_from_vorticity(&grid, 1, &w.view()).unwrap();
    let mut verr = 0.0f64;
    for j in 0..grid.n {
        let y = grid.nodes[j];
        let want1 = -PI * (PI * y).cos() / (PI * PI + 1.0);
        let want2 = (PI * y).sin() / (PI * PI + 1.0);
        verr = verr.max((u1[j] - Complex64::new(want1, 0.0)).norm());
        verr = verr.max((u2[j] - Complex64::new(0.0, want2)).norm());
    }
    c.check(format!("velocity err {verr:.2e} <= 1e-9"), verr <= 1e-9);

    // Heat-mode examples: eigenvalue and evolution factor.
    let op = assemble(grid.clone(), 1.0, 1, Toggles::diffusion_only()).unwrap();
    let eigs = spectrum(&op).unwrap();
    let want0 = PI * PI / 4.0 + 1.0;
    let eerr = (eigs[0].re - want0).abs() / want0;
    c.check(format!("heat eigenvalue rel err {eerr:.2e} <= 1e-6"), eerr <= 1e-6);

    let w0 = grid.sample_real(|y| (PI * (y + 1.0) / 2.0).sin());
    let (traj, _) = evolve(&op, &w0, &ForcingSlots::none(), 1.0, 1e-3, 0.0).unwrap();
    let last = traj.states.last().unwrap();
    let t_end = *traj.times.last().unwrap();
    let mut herr = 0.0f64;
    for j in 0..grid.n {
        let want = (-want0 * t_end).exp() * w0[j].re;
        herr = herr.max((last[j] - Complex64::new(want, 0.0)).norm());
    }
    c.check(format!("heat evolution err {herr:.2e} <= 1e-6"), herr <= 1e-6);

    // Spectral convergence: error drops >= 10x from n=24 to n=48.
    let err_at = |n: usize| -> f64 {
        let g = build_grid(n).unwrap();
        let w = g.sample_real(|y| (6.0 * PI * y).sin());
        let phi = solve_helmholtz(&g, 1, &w.view()).unwrap();
        let denom = 36.0 * PI * PI + 1.0;
        let mut e = 0.0f64;
        for j in 0..g.n {
            let want = -(6.0 * PI * g.nodes[j]).sin() / denom;
            e = e.max((phi[j] - Complex64::new(want, 0.0)).norm());
        }
        e
    };
    let (e24, e48) = (err_at(24), err_at(48));
    c.check(
        format!("convergence e24/e48 = {:.1} >= 10", e24 / e48),
        e48 * 10.0 <= e24,
    );

    c.finish(Some(10.0));
}

#[test]
fn criterion_2_enhanced_dissipation_scaling() {
    let _g = gate();
    let mut c = Criterion::new("2 (enhanced-dissipation scaling)");
    let n = 192;
    let grid = Arc::new(build_grid(n).unwrap());
    let nus = [1e-2, 1e-3, 1e-4];

    let mut gap_pts = Vec::new();
    for &nu in nus.iter() {
        let op = assemble(grid.clone(), nu, 1, Toggles::default()).unwrap();
        let r = pseudospectral_gap(&op);
        gap_pts.push((nu, r.gap));

        // Homogeneous decay with random smooth data.
        let w0 = random_smooth_profile(&grid, 7);
        let horizon = (20.0 / nu.sqrt()).min(2e3);
        let dt = 0.125;
        let (traj, _) = evolve(&op, &w0, &ForcingSlots::none(), horizon, dt, 0.0).unwrap();
        let rate = measure_decay_rate(&op, &traj).unwrap();
        let floor = 0.1 * nu.sqrt();
        c.check(
            format!(
                "nu={nu:.0e}: decay rate {:.4e} >= 0.1 (nu k)^1/2 = {floor:.4e}",
                rate.rate
            ),
            rate.rate >= floor,
        );
    }
    let (slope, _, _) = fit_powerlaw(&gap_pts);
    c.check(
        format!(
            "gap slope {slope:.3} in [0.45, 0.60] (gaps: {:?})",
            gap_pts
                .iter()
                .map(|p| format!("{:.3e}", p.1))
                .collect::<Vec<_>>()
        ),
        (0.45..=0.60).contains(&slope),
    );
    c.finish(Some(600.0));
}

#[test]
fn criterion_3_resolvent_inequality_uniformity() {
    let _g = gate();
    let mut c = Criterion::new("3 (resolvent inequality uniformity)");
    let plan = SweepPlan::default();
    for id in ALL_INEQUALITIES {
        let rep = sweep_and_fit(&plan, id).unwrap();
        let slope = rep.fitted_exponent_vs_nu.unwrap_or(f64::NAN);
        let ratios: Vec<f64> = rep.per_nu_worst.iter().map(|p| p.1).collect();
        let hi = ratios.iter().copied().fold(0.0, f64::max);
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let spread = hi / lo;
        c.check(
            format!(
                "{id}: |slope| = {:.3} <= 0.1, spread {spread:.2}x <= 3x (worst {:.3e}, excluded {})",
                slope.abs(),
                rep.worst_ratio,
                rep.excluded
            ),
            slope.abs() <= 0.1 && spread <= 3.0 && rep.worst_ratio.is_finite(),
        );
    }
    c.finish(Some(1800.0));
}

/// Resonant critical-layer forcing profile for one slot: a Gaussian of
/// width (nu/k)^(1/4) on the layer of the gap-minimizing shift,
/// modulated at the resonant phase speed.
fn resonant_slot(
    grid: &Arc<ChebGrid>,
    nu: f64,
    k: i64,
    lambda_star: f64,
    slot: &str,
) -> ForcingSlots {
    let yc = (1.0 - lambda_star).max(0.0).sqrt();
    let width = (nu / k.abs() as f64).powf(0.25);
    let prof = grid.sample(|y| {
        let g = (-((y - yc) / width).powi(2)).exp() + (-((y + yc) / width).powi(2)).exp();
        Complex64::new(g * (1.0 - y * y), 0.0)
    });
    let l2 = grid.norm_l2(&prof.view());
    let prof = prof.mapv(|z| z / l2);
    let om = k as f64 * lambda_star;
    let mk = move |p: ComplexProfile| -> Box<dyn Fn(f64) -> ComplexProfile + Sync + Send> {
        Box::new(move |t: f64| {
            let ph = Complex64::new(0.0, -om * t).exp();
            p.mapv(|z| z * ph)
        })
    };
    match slot {
        "f1" => ForcingSlots {
            f1: Some(mk(prof)),
            ..Default::default()
        },
        "f2" => ForcingSlots {
            f2: Some(mk(prof)),
            ..Default::default()
        },
        "f3" => ForcingSlots {
            f3: Some(mk(prof)),
            ..Default::default()
        },
        _ => ForcingSlots {
            f4: Some(mk(prof)),
            ..Default::default()
        },
    }
}

/// Smooth broadband forcing: a fixed wall-vanishing profile with a
/// three-tone time modulation.
fn smooth_slot(grid: &Arc<ChebGrid>, slot: &str) -> ForcingSlots {
    let prof = random_smooth_profile(grid, 43);
    let l2 = grid.norm_l2(&prof.view());
    let prof = prof.mapv(|z| z / l2);
    let mk = move |p: ComplexProfile| -> Box<dyn Fn(f64) -> ComplexProfile + Sync + Send> {
        Box::new(move |t: f64| {
            let m = ((0.7 * t).cos() + (1.9 * t + 1.0).cos() + (4.3 * t + 2.0).cos()) / 3.0;
            p.mapv(|z| z * m)
        })
    };
    match slot {
        "f1" => ForcingSlots {
            f1: Some(mk(prof)),
            ..Default::default()
        },
        "f2" => ForcingSlots {
            f2: Some(mk(prof)),
            ..Default::default()
        },
        "f3" => ForcingSlots {
            f3: Some(mk(prof)),
            ..Default::default()
        },
        _ => ForcingSlots {
            f4: Some(mk(prof)),
            ..Default::default()
        },
    }
}

#[test]
fn criterion_4_spacetime_estimate_uniformity() {
    let _g = gate();
    let mut c = Criterion::new("4 (space-time estimate uniformity)");
    let n = 96;
    let grid = Arc::new(build_grid(n).unwrap());
    let nus = [1e-2, 1e-3, 1e-4];
    let ks = [1i64, 4];

    // Gap minimizers once per (nu, k) for the resonant forcing.
    let combos: Vec<(f64, i64)> = nus.iter().flat_map(|&nu| ks.map(|k| (nu, k))).collect();
    let lambda_stars: Vec<((f64, i64), f64)> = par_map(combos.clone(), {
        let grid = grid.clone();
        move |(nu, k)| {
            let op = assemble(grid.clone(), nu, k, Toggles::default()).unwrap();
            ((nu, k), pseudospectral_gap(&op).lambda)
        }
    });

    for class in ["homogeneous", "f1", "f2", "f3", "f4"] {
        for &k in ks.iter() {
            let mut pts = Vec::new();
            let mut invd_pts = Vec::new();
            for &nu in nus.iter() {
                let op = assemble(grid.clone(), nu, k, Toggles::default()).unwrap();
                let lambda_star = lambda_stars
                    .iter()
                    .find(|(key, _)| *key == (nu, k))
                    .unwrap()
                    .1;
                let w0 = random_smooth_profile(&grid, 42);
                let horizon = (20.0 / (nu * k.abs() as f64).sqrt()).min(2e3);
                let dt = 0.1 / k.abs() as f64;
                // Probe each slot with both forcing families (smooth
                // broadband and resonant critical-layer) and keep the
                // larger measured ratio: the best available lower
                // bound on the worst case.
                let ratio = if class == "homogeneous" {
                    let rep =
                        verify_prop41(&op, &w0, &ForcingSlots::none(), horizon, dt, 0.05).unwrap();
                    assert!(!rep.violation);
                    if k == 1 {
                        invd_pts.push((nu, rep.term_ratios["inviscid_damping"]));
                    }
                    rep.combined_ratio
                } else {
                    let mut best = 0.0f64;
                    for family in ["smooth", "resonant"] {
                        let slots = match family {
                            "smooth" => smooth_slot(&grid, class),
                            _ => resonant_slot(&grid, nu, k, lambda_star, class),
                        };
                        let rep = verify_prop41(&op, &w0, &slots, horizon, dt, 0.05).unwrap();
                        assert!(!rep.violation);
                        best = best.max(rep.forced_combined_ratio.unwrap());
                    }
                    best
                };
                assert!(ratio.is_finite() && ratio > 0.0);
                pts.push((nu, ratio));
            }
            let (slope, _, _) = fit_powerlaw(&pts);
            c.check(
                format!(
                    "{class} k={k}: |slope| = {:.3} <= 0.1 (ratios {:?})",
                    slope.abs(),
                    pts.iter().map(|p| format!("{:.3e}", p.1)).collect::<Vec<_>>()
                ),
                slope.abs() <= 0.1,
            );
            if !invd_pts.is_empty() {
                let (si, _, _) = fit_powerlaw(&invd_pts);
                let hi = invd_pts.iter().map(|p| p.1).fold(0.0, f64::max);
                let lo = invd_pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
                c.check(
                    format!(
                        "inviscid-damping term vs ||Delta w0||^2: |slope| = {:.3} <= 0.1, spread {:.2}x <= 3x",
                        si.abs(),
                        hi / lo
                    ),
                    si.abs() <= 0.1 && hi / lo <= 3.0,
                );
            }
        }
    }
    c.finish(None);
}

#[test]
fn criterion_5_nonlinear_oracle_equivalence() {
    let _g = gate();
    let mut c = Criterion::new("5 (nonlinear oracle equivalence)");
    let grid = Arc::new(build_grid(96).unwrap());

    // Dealiased pseudo-spectral products == direct convolution, K <= 8.
    let k_max = 8i64;
    let mut state = ModalState::zero(&grid, k_max);
    for k in 1..=k_max as usize {
        state.omega[k] = random_smooth_profile(&grid, 100 + k as u64);
    }
    state.zero_mode_u1 = grid.sample_real(|y| 0.2 * (PI * (y + 1.0) / 2.0).cos());
    state.omega[0] = grid.deriv(&state.zero_mode_u1.view());
    let helm: Vec<HelmholtzSolver> = (1..=k_max)
        .map(|k| HelmholtzSolver::new(&grid, k).unwrap())
        .collect();
    let fast = nonlinear_term(&grid, &state, &helm, true);
    let slow = nonlinear_term(&grid, &state, &helm, false);
    let mut prod_err = 0.0f64;
    let mut scale = 0.0f64;
    for k in 0..=k_max as usize {
        for j in 0..grid.n {
            prod_err = prod_err
                .max((fast.f1[k][j] - slow.f1[k][j]).norm())
                .max((fast.f2[k][j] - slow.f2[k][j]).norm());
            scale = scale.max(slow.f1[k][j].norm()).max(slow.f2[k][j].norm());
        }
    }
    c.check(
        format!("dealiased vs direct convolution rel err {:.2e} <= 1e-12", prod_err / scale),
        prod_err <= 1e-12 * scale,
    );

    // Tiny-amplitude nonlinear run vs linear propagation at T = 10.
    let nu = 1e-3;
    let cfg = SimConfig {
        nu,
        truncation: 4,
        n: 96,
        dt: 1e-3,
        horizon: 10.0,
        weight_rate: 0.0,
        dealias: true,
        seed: 5,
        family: InitFamily::RandomSobolev,
        amplitude: 1e-8,
        sobolev_s: 3.5,
    };
    let state0 = init_state(&grid, &cfg).unwrap();
    let mut stepper =
        channel_stab_core::nonlinear::NonlinearStepper::new(grid.clone(), &cfg).unwrap();
    let steps = (cfg.horizon / stepper.dt()).round() as usize;
    let mut s = state0.clone();
    for _ in 0..steps {
        let (next, _, _) = stepper.step(&s).unwrap();
        s = next;
    }
    let mut worst_rel = 0.0f64;
    for k in 1..=cfg.truncation {
        let w0k = state0.omega[k as usize].clone();
        if grid.norm_l2(&w0k.view()) < 1e-14 * cfg.amplitude {
            continue;
        }
        let op = assemble(grid.clone(), nu, k, Toggles::default()).unwrap();
        let (traj, _) = evolve(&op, &w0k, &ForcingSlots::none(), cfg.horizon, cfg.dt, 0.0).unwrap();
        let lin = traj.states.last().unwrap();
        let nl = &s.omega[k as usize];
        let mut diff = 0.0f64;
        for j in 0..grid.n {
            diff = diff.max((lin[j] - nl[j]).norm());
        }
        let rel = diff / grid.norm_linf(&lin.view());
        worst_rel = worst_rel.max(rel);
    }
    c.check(
        format!("tiny-amplitude nonlinear vs linear rel err {worst_rel:.2e} <= 1e-4"),
        worst_rel <= 1e-4,
    );
    c.finish(Some(600.0));
}

#[test]
fn criterion_6_desk_scale_stability() {
    let _g = gate();
    let mut c = Criterion::new("6 (desk-scale stability at A = 0.01 nu^(2/3))");
    let make_cfg = |nu: f64, amplitude: f64, seed: u64| SimConfig {
        nu,
        truncation: 32,
        n: 128,
        dt: 0.0,
        horizon: 0.0,
        weight_rate: 0.05,
        dealias: true,
        seed,
        family: InitFamily::RandomSobolev,
        amplitude,
        sobolev_s: 3.5,
    };

    // 3 seeds per viscosity, plus one half-amplitude consistency run.
    let mut jobs: Vec<(f64, f64, u64)> = Vec::new();
    for &nu in [5e-3f64, 1e-3].iter() {
        let amp = 0.01 * nu.powf(2.0 / 3.0);
        for seed in 0..3u64 {
            jobs.push((nu, amp, seed));
        }
    }
    let amp_small = 0.5 * 0.01 * (1e-3f64).powf(2.0 / 3.0);
    jobs.push((1e-3, amp_small, 0));

    let records = par_map(jobs.clone(), |(nu, amp, seed)| {
        let rec = run_simulation(&make_cfg(nu, amp, seed)).unwrap();
        let outcome = classify_outcome(&rec);
        let total: f64 = rec.energy.iter().map(|e| e.total).sum();
        (nu, amp, seed, outcome, total)
    });

    let mut total_full = 0.0f64;
    let mut total_half = 0.0f64;
    for (nu, amp, seed, outcome, total) in records.iter() {
        let is_half = *amp == amp_small && *nu == 1e-3 && *seed == 0 && jobs.len() == 7;
        if is_half && total_half == 0.0 {
            total_half = *total;
            continue;
        }
        c.check(
            format!(
                "nu={nu:.0e} A={amp:.3e} seed={seed}: {outcome:?}, sum E_k = {total:.3e} (E/nu^(2/3) = {:.3})",
                total / nu.powf(2.0 / 3.0)
            ),
            *outcome == Outcome::Stable,
        );
        if *nu == 1e-3 && *seed == 0 {
            total_full = *total;
        }
    }
    // Monotone-in-amplitude consistency at the smaller viscosity.
    c.check(
        format!(
            "monotone in A: E(A) = {total_full:.3e} within [1, 10] x E(A/2) = {total_half:.3e}"
        ),
        total_full >= total_half && total_full <= 10.0 * total_half,
    );
    c.finish(Some(7200.0));
}

#[test]
fn criterion_7_threshold_machinery() {
    let _g = gate();
    let mut c = Criterion::new("7 (threshold machinery)");
    let tmp = tempfile::tempdir().unwrap();
    let plan = ScanPlan {
        campaign: "acceptance".into(),
        nus: vec![1e-2, 3e-3, 1e-3, 3e-4, 1e-4],
        probe: AmplitudeProbe::PowerLaw {
            eps_lo: 1e-3,
            eps_hi: 10.0,
            gamma: 2.0 / 3.0,
        },
        sim: SimConfig {
            nu: 1e-3,
            truncation: 2,
            n: 32,
            dt: 0.0,
            horizon: 1.0,
            weight_rate: 0.05,
            dealias: true,
            seed: 0,
            family: InitFamily::RandomSobolev,
            amplitude: 0.0,
            sobolev_s: 3.5,
        },
        tolerance: 0.05,
        max_runs_per_nu: 60,
        workers: 1,
        seeds: vec![0],
    };
    let det = SyntheticDetector {
        eps: 0.7,
        gamma: 2.0 / 3.0,
    };

    // Synthetic-oracle recovery within bisection tolerance.
    let dir1 = tmp.path().join("w1");
    let rep1 = run_campaign_with(&plan, &dir1, &det).unwrap();
    let mut recovered = true;
    for p in rep1.points.iter() {
        let want = 0.7 * p.nu.powf(2.0 / 3.0);
        recovered &= p.bound == BoundKind::TwoSided && (p.a_star / want - 1.0).abs() <= plan.tolerance;
    }
    let fit = fit_gamma(&rep1.points).unwrap();
    c.check(
        format!(
            "synthetic oracle: A* within tolerance at all nu, gamma_hat = {:.4}",
            fit.gamma_hat
        ),
        recovered && (fit.gamma_hat - 2.0 / 3.0).abs() <= 0.05,
    );

    // Worker-count determinism: byte-identical reports.
    let mut plan4 = plan.clone();
    plan4.workers = 4;
    let dir4 = tmp.path().join("w4");
    let rep4 = run_campaign_with(&plan4, &dir4, &det).unwrap();
    let j1 = serde_json::to_string(&(rep1.points.clone(), rep1.fit.clone())).unwrap();
    let j4 = serde_json::to_string(&(rep4.points.clone(), rep4.fit.clone())).unwrap();
    c.check("worker counts {1, 4} give byte-identical results", j1 == j4);

    // Kill-and-resume: truncate the log after 3 runs, resume, count.
    let log = channel_stab_core::scan::checkpoint_path(&plan, &dir1);
    let content = std::fs::read_to_string(&log).unwrap();
    let total_runs = content.lines().count();
    let kept: Vec<&str> = content.lines().take(3).collect();
    std::fs::write(&log, kept.join("\n") + "\n").unwrap();
    let resumed = run_campaign_with(&plan, &dir1, &det).unwrap();
    c.check(
        format!(
            "resume after kill: replayed {} + executed {} == {total_runs}, no duplicates",
            resumed.runs_replayed, resumed.runs_executed
        ),
        resumed.runs_replayed == 3 && resumed.runs_executed == total_runs - 3,
    );
    let log_after = std::fs::read_to_string(&log).unwrap();
    let keys: Vec<String> = log_after
        .lines()
        .map(|l| {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            format!("{}|{}|{}", v["nu"], v["amplitude"], v["seed"])
        })
        .collect();
    let mut dedup = keys.clone();
    dedup.sort();
    dedup.dedup();
    c.check("checkpoint log has no duplicate run keys", dedup.len() == keys.len());

    c.finish(Some(300.0));
}

#[test]
fn criterion_8_bootstrap_arithmetic() {
    let _g = gate();
    let mut c = Criterion::new("8 (bootstrap arithmetic)");
    let (holds, margin) = bootstrap_min_inequality();
    c.check(
        format!("|k| min{{(nu k)^-1/4, (nu k^2)^-1/2}} <= nu^-3/8 k^3/8 exhaustively (worst margin {margin:.3e})"),
        holds,
    );
    c.finish(Some(10.0));
}
