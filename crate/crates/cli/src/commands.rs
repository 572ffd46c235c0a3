//! Subcommand implementations. Artifacts follow a fixed layout:
//! `<output-dir>/<campaign>/<subcommand>/...`, with the effective
//! configuration echoed as `effective_config.json` in each directory.

use crate::Cli;
use channel_stab_core::error::{Error, Result};
use channel_stab_core::evolution::{evolve, measure_decay_rate, verify_prop41, ForcingSlots};
use channel_stab_core::linop::{assemble, pseudospectral_gap, Toggles};
use channel_stab_core::nonlinear::{
    classify_outcome, run_simulation, verify_bootstrap, InitFamily, Outcome, SimConfig,
};
use channel_stab_core::report::{self, Reference, Series};
use channel_stab_core::resolvent::{
    sweep_and_fit, InequalityId, InequalityReport, SweepPlan, ALL_INEQUALITIES,
};
use channel_stab_core::scan::{
    fit_gamma, run_campaign_with, CampaignReport, ScanPlan, SimDetector, SyntheticDetector,
    ThresholdPoint,
};
use channel_stab_core::spectral::{build_grid, random_smooth_profile};
use clap::Args;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::sync::Arc;

pub fn dispatch(cli: &Cli) -> Result<u8> {
    match &cli.command {
        crate::Command::Resolvent(a) => cmd_resolvent(cli, a),
        crate::Command::Evolve(a) => cmd_evolve(cli, a),
        crate::Command::Simulate(a) => cmd_simulate(cli, a),
        crate::Command::Scan(a) => cmd_scan(cli, a),
        crate::Command::Fit(a) => cmd_fit(cli, a),
        crate::Command::Report(a) => cmd_report(cli, a),
    }
}

fn out_dir(cli: &Cli, sub: &str) -> PathBuf {
    cli.output_dir.join(&cli.campaign).join(sub)
}

fn load_config<T: for<'de> Deserialize<'de>>(path: &Option<PathBuf>) -> Result<Option<T>> {
    match path {
        None => Ok(None),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::invalid(format!("cannot read config {}: {e}", p.display())))?;
            let v = serde_json::from_str(&text)
                .map_err(|e| Error::invalid(format!("malformed config {}: {e}", p.display())))?;
            Ok(Some(v))
        }
    }
}

fn echo_config<T: Serialize>(dir: &Path, cfg: &T) -> Result<()> {
    report::write_json(&dir.join("effective_config.json"), cfg, true)
}

// ---------------------------------------------------------------------------
// resolvent
// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct ResolventArgs {
    /// Single viscosity (omits the default sweep).
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub k: Option<i64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// a | b | c | lambda_a | lambda_b (default: all five).
    #[arg(long)]
    pub ineq: Option<String>,
    /// Grid points in y.
    #[arg(long)]
    pub n: Option<usize>,
}

fn cmd_resolvent(cli: &Cli, args: &ResolventArgs) -> Result<u8> {
    let mut plan: SweepPlan = load_config(&cli.config)?.unwrap_or_default();
    if let Some(nu) = args.nu {
        plan.nus = vec![nu];
    }
    if let Some(k) = args.k {
        plan.ks = vec![k];
    }
    if let Some(lambda) = args.lambda {
        plan.lambdas = vec![lambda];
    }
    if let Some(n) = args.n {
        plan.n = n;
    }
    let ineqs: Vec<InequalityId> = match &args.ineq {
        Some(s) => vec![s.parse()?],
        None => ALL_INEQUALITIES.to_vec(),
    };

    let dir = out_dir(cli, "resolvent");
    std::fs::create_dir_all(&dir)?;

    let mut total = 0usize;
    let mut flagged = 0usize;
    let mut ratio_series = Vec::new();
    for id in ineqs.iter() {
        log::info!("sweeping inequality {id} over {} points", plan.nus.len() * plan.ks.len() * plan.lambdas.len());
        let rep = sweep_and_fit(&plan, *id)?;
        total += rep.samples.len();
        flagged += rep.excluded;
        report::write_text(&dir.join(format!("{id}.csv")), &report::inequality_csv(&rep), cli.force)?;
        report::write_json(&dir.join(format!("{id}.json")), &rep, cli.force)?;
        ratio_series.push(Series {
            label: id.to_string(),
            points: rep.per_nu_worst.clone(),
        });
    }
    let svg = report::svg_line_plot(
        "worst inequality ratio vs viscosity",
        "nu",
        "worst LHS/RHS ratio",
        true,
        true,
        &ratio_series,
        None,
    );
    report::write_text(&dir.join("ratios.svg"), &svg, cli.force)?;
    echo_config(&dir, &plan)?;

    if total > 0 && (flagged as f64) > 0.10 * total as f64 {
        log::warn!("{flagged} of {total} samples flagged for conditioning");
        return Ok(2);
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// evolve
// ---------------------------------------------------------------------------

#[derive(Args, Debug, Serialize, Deserialize, Clone)]
pub struct EvolveArgs {
    #[arg(long, default_value_t = 1e-3)]
    pub nu: f64,
    #[arg(long, default_value_t = 1)]
    pub k: i64,
    #[arg(long, default_value_t = 96)]
    pub n: usize,
    /// Horizon; 0 = 20 (nu |k|)^{-1/2} capped at 2e3.
    #[arg(long, default_value_t = 0.0)]
    pub t: f64,
    /// Step; 0 = quarter of the advection bound.
    #[arg(long, default_value_t = 0.0)]
    pub dt: f64,
    /// Weight rate in e^{c sqrt(nu) t}.
    #[arg(long, default_value_t = 0.05)]
    pub c: f64,
    /// none | f1 | f2 | f3 | f4
    #[arg(long, default_value = "none")]
    pub forcing: String,
    /// Also compute the pseudospectral gap at this (nu, k).
    #[arg(long, default_value_t = true)]
    pub gap: bool,
}

fn broadband(t: f64) -> f64 {
    ((0.7 * t).cos() + (1.9 * t + 1.0).cos() + (4.3 * t + 2.0).cos()) / 3.0
}

fn cmd_evolve(cli: &Cli, args: &EvolveArgs) -> Result<u8> {
    let mut cfg: EvolveArgs = load_config(&cli.config)?.unwrap_or_else(|| args.clone());
    // Flags always win where they differ from the built-in defaults.
    if args.nu != 1e-3 {
        cfg.nu = args.nu;
    }
    if args.k != 1 {
        cfg.k = args.k;
    }
    if args.n != 96 {
        cfg.n = args.n;
    }
    if args.t != 0.0 {
        cfg.t = args.t;
    }
    if args.dt != 0.0 {
        cfg.dt = args.dt;
    }
    if args.forcing != "none" {
        cfg.forcing = args.forcing.clone();
    }

    let grid = Arc::new(build_grid(cfg.n)?);
    let op = assemble(grid.clone(), cfg.nu, cfg.k, Toggles::default())?;
    let horizon = if cfg.t > 0.0 {
        cfg.t
    } else {
        (20.0 / (cfg.nu * cfg.k.abs() as f64).sqrt()).min(2e3)
    };
    let dt = if cfg.dt > 0.0 {
        cfg.dt
    } else {
        0.25 * channel_stab_core::evolution::cfl_limit(&op)
    };

    let p = random_smooth_profile(&grid, cli.seed.wrapping_add(1));
    let slots = match cfg.forcing.as_str() {
        "none" => ForcingSlots::none(),
        "f1" => ForcingSlots {
            f1: Some(Box::new(move |t| p.mapv(|z| z * broadband(t)))),
            ..Default::default()
        },
        "f2" => ForcingSlots {
            f2: Some(Box::new(move |t| p.mapv(|z| z * broadband(t)))),
            ..Default::default()
        },
        "f3" => ForcingSlots {
            f3: Some(Box::new(move |t| p.mapv(|z| z * broadband(t)))),
            ..Default::default()
        },
        "f4" => ForcingSlots {
            f4: Some(Box::new(move |t| p.mapv(|z| z * broadband(t)))),
            ..Default::default()
        },
        other => {
            return Err(Error::invalid(format!(
                "unknown forcing slot '{other}'; valid: none, f1, f2, f3, f4"
            )))
        }
    };

    let w0 = random_smooth_profile(&grid, cli.seed);
    let dir = out_dir(cli, "evolve");
    std::fs::create_dir_all(&dir)?;

    log::info!("evolving nu={} k={} to T={horizon} with dt={dt}", cfg.nu, cfg.k);
    let spacetime = verify_prop41(&op, &w0, &slots, horizon, dt, cfg.c)?;
    let (traj, _) = evolve(&op, &w0, &slots, horizon, dt, cfg.c)?;
    // A decay fit needs a long enough trajectory; short runs skip it.
    let decay = measure_decay_rate(&op, &traj).ok();

    let gap = if cfg.gap {
        let g = pseudospectral_gap(&op);
        Some((g.gap, g.lambda))
    } else {
        None
    };

    #[derive(Serialize)]
    struct EvolveSummary<'a> {
        nu: f64,
        k: i64,
        n: usize,
        horizon: f64,
        dt: f64,
        spacetime: &'a channel_stab_core::evolution::SpaceTimeReport,
        decay_rate: Option<f64>,
        decay_window: Option<(f64, f64)>,
        decay_low_confidence: Option<bool>,
        gap: Option<(f64, f64)>,
    }
    let summary = EvolveSummary {
        nu: cfg.nu,
        k: cfg.k,
        n: cfg.n,
        horizon,
        dt,
        spacetime: &spacetime,
        decay_rate: decay.as_ref().map(|d| d.rate),
        decay_window: decay.as_ref().map(|d| d.window),
        decay_low_confidence: decay.as_ref().map(|d| d.low_confidence),
        gap,
    };
    report::write_text(&dir.join("trajectory.csv"), &report::trajectory_csv(&op, &traj), cli.force)?;
    report::write_snapshot(&dir.join("trajectory.cstb"), &traj, cli.force)?;
    report::write_json(&dir.join("spacetime.json"), &summary, cli.force)?;
    echo_config(&dir, &cfg)?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub nu: Option<f64>,
    /// Initial amplitude of the Sobolev proxy norm.
    #[arg(long)]
    pub amp: Option<f64>,
    #[arg(long)]
    pub t: Option<f64>,
    /// Mode truncation K.
    #[arg(long)]
    pub k_max: Option<i64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// random_sobolev | critical_layer | optimal_linear
    #[arg(long)]
    pub family: Option<String>,
}

fn parse_family(s: &str) -> Result<InitFamily> {
    match s {
        "random_sobolev" => Ok(InitFamily::RandomSobolev),
        "critical_layer" => Ok(InitFamily::CriticalLayer),
        "optimal_linear" => Ok(InitFamily::OptimalLinear),
        other => Err(Error::invalid(format!(
            "unknown family '{other}'; valid: random_sobolev, critical_layer, optimal_linear"
        ))),
    }
}

fn cmd_simulate(cli: &Cli, args: &SimulateArgs) -> Result<u8> {
    let mut cfg: SimConfig = load_config(&cli.config)?.unwrap_or(SimConfig {
        nu: 1e-3,
        truncation: 32,
        n: 128,
        dt: 0.0,
        horizon: 0.0,
        weight_rate: 0.05,
        dealias: true,
        seed: cli.seed,
        family: InitFamily::RandomSobolev,
        amplitude: 1e-8,
        sobolev_s: 3.5,
    });
    if let Some(nu) = args.nu {
        cfg.nu = nu;
    }
    if let Some(a) = args.amp {
        cfg.amplitude = a;
    }
    if let Some(t) = args.t {
        cfg.horizon = t;
    }
    if let Some(k) = args.k_max {
        cfg.truncation = k;
    }
    if let Some(n) = args.n {
        cfg.n = n;
    }
    if let Some(dt) = args.dt {
        cfg.dt = dt;
    }
    if let Some(f) = &args.family {
        cfg.family = parse_family(f)?;
    }
    if cli.seed != 0 {
        cfg.seed = cli.seed;
    }

    let dir = out_dir(cli, "simulate");
    std::fs::create_dir_all(&dir)?;
    log::info!(
        "simulating nu={} K={} n={} A={:.3e} to T={}",
        cfg.nu,
        cfg.truncation,
        cfg.n,
        cfg.amplitude,
        cfg.effective_horizon()
    );
    let record = run_simulation(&cfg)?;
    let outcome = classify_outcome(&record);
    let boot = verify_bootstrap(&record);
    let total_energy: f64 = record.energy.iter().map(|e| e.total).sum();

    #[derive(Serialize)]
    struct SimSummary<'a> {
        outcome: Outcome,
        total_energy: f64,
        energy_over_nu_twothirds: f64,
        initial_offmode_energy: f64,
        sup_offmode_energy: f64,
        final_offmode_energy: f64,
        diverged: bool,
        steps_completed: usize,
        bootstrap: &'a channel_stab_core::nonlinear::BootstrapReport,
    }
    let summary = SimSummary {
        outcome,
        total_energy,
        energy_over_nu_twothirds: total_energy / cfg.nu.powf(2.0 / 3.0),
        initial_offmode_energy: record.initial_offmode_energy,
        sup_offmode_energy: record.sup_offmode_energy,
        final_offmode_energy: record.final_offmode_energy,
        diverged: record.diverged,
        steps_completed: record.steps_completed,
        bootstrap: &boot,
    };

    report::write_text(&dir.join("series.csv"), &report::run_series_csv(&record), cli.force)?;
    report::write_text(&dir.join("energy.csv"), &report::energy_csv(&record), cli.force)?;
    report::write_json(&dir.join("summary.json"), &summary, cli.force)?;
    echo_config(&dir, &cfg)?;
    log::info!("outcome: {outcome:?}");
    Ok(0)
}

// ---------------------------------------------------------------------------
// scan
// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct ScanArgs {
    /// Use the synthetic stability oracle instead of simulations
    /// (machinery checks and fixtures).
    #[arg(long)]
    pub synthetic: bool,
    #[arg(long, default_value_t = 1.0)]
    pub synthetic_eps: f64,
    #[arg(long, default_value_t = 2.0 / 3.0)]
    pub synthetic_gamma: f64,
    /// Worker count override.
    #[arg(long)]
    pub workers: Option<usize>,
}

fn default_scan_plan(cli: &Cli) -> ScanPlan {
    ScanPlan {
        campaign: cli.campaign.clone(),
        nus: vec![1e-2, 3e-3, 1e-3, 3e-4, 1e-4],
        probe: channel_stab_core::scan::AmplitudeProbe::PowerLaw {
            eps_lo: 1e-3,
            eps_hi: 10.0,
            gamma: 2.0 / 3.0,
        },
        sim: SimConfig {
            nu: 1e-3,
            truncation: 32,
            n: 128,
            dt: 0.0,
            horizon: 0.0,
            weight_rate: 0.05,
            dealias: true,
            seed: cli.seed,
            family: InitFamily::RandomSobolev,
            amplitude: 0.0,
            sobolev_s: 3.5,
        },
        tolerance: 0.05,
        max_runs_per_nu: 40,
        workers: 1,
        seeds: vec![cli.seed],
    }
}

fn cmd_scan(cli: &Cli, args: &ScanArgs) -> Result<u8> {
    let mut plan: ScanPlan = load_config(&cli.config)?.unwrap_or_else(|| default_scan_plan(cli));
    if let Some(w) = args.workers {
        plan.workers = w;
    }
    let dir = out_dir(cli, "scan");
    std::fs::create_dir_all(&dir)?;

    let report_data: CampaignReport = if args.synthetic {
        let det = SyntheticDetector {
            eps: args.synthetic_eps,
            gamma: args.synthetic_gamma,
        };
        run_campaign_with(&plan, &dir, &det)?
    } else {
        let det = SimDetector {
            template: plan.sim.clone(),
        };
        run_campaign_with(&plan, &dir, &det)?
    };

    write_campaign_outputs(&dir, &report_data, cli.force)?;
    echo_config(&dir, &plan)?;
    log::info!(
        "campaign '{}': {} runs executed, {} replayed",
        report_data.campaign,
        report_data.runs_executed,
        report_data.runs_replayed
    );
    Ok(0)
}

fn write_campaign_outputs(dir: &Path, rep: &CampaignReport, force: bool) -> Result<()> {
    report::write_json(&dir.join("campaign.json"), rep, force)?;
    report::write_text(&dir.join("campaign.csv"), &report::campaign_csv(rep), force)?;
    let pts: Vec<(f64, f64)> = rep
        .points
        .iter()
        .filter(|p| p.bound == channel_stab_core::scan::BoundKind::TwoSided)
        .map(|p| (p.nu, p.a_star))
        .collect();
    if !pts.is_empty() {
        let anchor = pts[pts.len() / 2];
        let svg = report::svg_line_plot(
            "threshold amplitude vs viscosity",
            "nu",
            "A*",
            true,
            true,
            &[Series {
                label: "A*(nu)".into(),
                points: pts,
            }],
            Some(Reference {
                slope: 2.0 / 3.0,
                anchor,
                label: "slope 2/3".into(),
            }),
        );
        report::write_text(&dir.join("threshold.svg"), &svg, force)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Campaign report JSON (default: <output-dir>/<campaign>/scan/campaign.json).
    #[arg(long)]
    pub input: Option<PathBuf>,
}

fn cmd_fit(cli: &Cli, args: &FitArgs) -> Result<u8> {
    let input = args
        .input
        .clone()
        .unwrap_or_else(|| out_dir(cli, "scan").join("campaign.json"));
    if !input.exists() {
        return Err(Error::MissingInput(format!("{}", input.display())));
    }
    let text = std::fs::read_to_string(&input)?;
    let rep: CampaignReport = serde_json::from_str(&text)
        .map_err(|e| Error::invalid(format!("malformed campaign report: {e}")))?;
    let fit = fit_gamma(&rep.points)?;
    let dir = out_dir(cli, "fit");
    std::fs::create_dir_all(&dir)?;
    report::write_json(&dir.join("fit.json"), &fit, cli.force)?;
    echo_config(&dir, &serde_json::json!({ "input": input }))?;
    println!(
        "gamma_hat = {:.6}  (pairwise slope range [{:.4}, {:.4}], residual {:.3e})",
        fit.gamma_hat, fit.pairwise_slope_min, fit.pairwise_slope_max, fit.residual
    );
    Ok(0)
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct ReportArgs {}

fn find_files(root: &Path, name: &str) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        let Ok(entries) = std::fs::read_dir(&dir) else {
            continue;
        };
        let mut items: Vec<PathBuf> = entries.flatten().map(|e| e.path()).collect();
        items.sort();
        for p in items {
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().map(|f| f == name).unwrap_or(false) {
                out.push(p);
            }
        }
    }
    out.sort();
    out
}

fn cmd_report(cli: &Cli, _args: &ReportArgs) -> Result<u8> {
    let root = &cli.output_dir;
    let mut md = String::from("# channel-stab summary\n\n");
    let mut found_any = false;

    // Resolvent sweeps
    let mut ratio_series: Vec<Series> = Vec::new();
    let resolvent_jsons: Vec<PathBuf> = ALL_INEQUALITIES
        .iter()
        .flat_map(|id| find_files(root, &format!("{id}.json")))
        .collect();
    if !resolvent_jsons.is_empty() {
        found_any = true;
        md.push_str("## Resolvent inequality sweeps\n\n");
        md.push_str("| inequality | worst ratio | fitted exponent vs nu | excluded |\n");
        md.push_str("|---|---|---|---|\n");
        for p in &resolvent_jsons {
            let rep: InequalityReport = serde_json::from_str(&std::fs::read_to_string(p)?)
                .map_err(|e| Error::invalid(format!("malformed {}: {e}", p.display())))?;
            md.push_str(&format!(
                "| {} | {:.4e} | {} | {} |\n",
                rep.inequality_id,
                rep.worst_ratio,
                rep.fitted_exponent_vs_nu
                    .map(|v| format!("{v:.4}"))
                    .unwrap_or_else(|| "n/a".into()),
                rep.excluded
            ));
            if rep.per_nu_worst.len() > 1 {
                ratio_series.push(Series {
                    label: rep.inequality_id.to_string(),
                    points: rep.per_nu_worst.clone(),
                });
            }
        }
        md.push('\n');
    }

    // Linear evolutions: decay and gap scaling
    let spacetime_jsons = find_files(root, "spacetime.json");
    let mut decay_pts: Vec<(f64, f64)> = Vec::new();
    let mut gap_pts: Vec<(f64, f64)> = Vec::new();
    if !spacetime_jsons.is_empty() {
        found_any = true;
        md.push_str("## Linear evolutions\n\n");
        md.push_str("| nu | k | decay rate | rate/(nu k)^1/2 | combined ratio | gap |\n");
        md.push_str("|---|---|---|---|---|---|\n");
        for p in &spacetime_jsons {
            let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(p)?)
                .map_err(|e| Error::invalid(format!("malformed {}: {e}", p.display())))?;
            let nu = v["nu"].as_f64().unwrap_or(f64::NAN);
            let k = v["k"].as_i64().unwrap_or(0);
            let rate = v["decay_rate"].as_f64().unwrap_or(f64::NAN);
            let combined = v["spacetime"]["combined_ratio"].as_f64().unwrap_or(f64::NAN);
            let gap = v["gap"][0].as_f64();
            md.push_str(&format!(
                "| {nu:.2e} | {k} | {rate:.4e} | {:.3} | {combined:.3e} | {} |\n",
                rate / (nu * k.abs() as f64).sqrt(),
                gap.map(|g| format!("{g:.4e}")).unwrap_or_else(|| "n/a".into())
            ));
            decay_pts.push((nu, rate));
            if let Some(g) = gap {
                gap_pts.push((nu, g));
            }
        }
        md.push('\n');
    }

    // Nonlinear runs
    let sim_jsons = find_files(root, "summary.json");
    let mut energy_series: Vec<Series> = Vec::new();
    if !sim_jsons.is_empty() {
        found_any = true;
        md.push_str("## Nonlinear runs\n\n");
        md.push_str("| run | outcome | sum E_k | E / nu^(2/3) | sup/initial |\n");
        md.push_str("|---|---|---|---|---|\n");
        for p in &sim_jsons {
            let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(p)?)
                .map_err(|e| Error::invalid(format!("malformed {}: {e}", p.display())))?;
            let init = v["initial_offmode_energy"].as_f64().unwrap_or(f64::NAN);
            let sup = v["sup_offmode_energy"].as_f64().unwrap_or(f64::NAN);
            md.push_str(&format!(
                "| {} | {} | {:.4e} | {:.3} | {:.3} |\n",
                p.parent()
                    .and_then(|d| d.parent())
                    .and_then(|d| d.file_name())
                    .map(|s| s.to_string_lossy().to_string())
                    .unwrap_or_default(),
                v["outcome"].as_str().unwrap_or("?"),
                v["total_energy"].as_f64().unwrap_or(f64::NAN),
                v["energy_over_nu_twothirds"].as_f64().unwrap_or(f64::NAN),
                sup / init.max(1e-300),
            ));
        }
        md.push('\n');
        // Energy stacks from energy.csv
        for p in find_files(root, "energy.csv") {
            let text = std::fs::read_to_string(&p)?;
            let mut parts: [Vec<(f64, f64)>; 4] = Default::default();
            for line in text.lines().skip(1) {
                let cols: Vec<&str> = line.split(',').collect();
                if cols.len() < 6 {
                    continue;
                }
                let k: f64 = cols[0].parse().unwrap_or(f64::NAN);
                if k < 1.0 {
                    continue;
                }
                for (i, part) in parts.iter_mut().enumerate() {
                    part.push((k, cols[i + 1].parse().unwrap_or(f64::NAN)));
                }
            }
            if !parts[0].is_empty() && energy_series.is_empty() {
                for (name, pts) in ["amp", "heat", "enh", "invd"].iter().zip(parts.into_iter()) {
                    energy_series.push(Series {
                        label: name.to_string(),
                        points: pts,
                    });
                }
            }
        }
    }

    // Threshold campaigns
    let campaign_jsons = find_files(root, "campaign.json");
    let mut threshold_pts: Vec<ThresholdPoint> = Vec::new();
    if !campaign_jsons.is_empty() {
        found_any = true;
        md.push_str("## Threshold campaigns\n\n");
        md.push_str("| campaign | points | gamma_hat | slope range |\n|---|---|---|---|\n");
        for p in &campaign_jsons {
            let rep: CampaignReport = serde_json::from_str(&std::fs::read_to_string(p)?)
                .map_err(|e| Error::invalid(format!("malformed {}: {e}", p.display())))?;
            md.push_str(&format!(
                "| {} | {} | {} | {} |\n",
                rep.campaign,
                rep.points.len(),
                rep.fit
                    .as_ref()
                    .map(|f| format!("{:.4}", f.gamma_hat))
                    .unwrap_or_else(|| "n/a".into()),
                rep.fit
                    .as_ref()
                    .map(|f| format!("[{:.3}, {:.3}]", f.pairwise_slope_min, f.pairwise_slope_max))
                    .unwrap_or_else(|| "n/a".into()),
            ));
            threshold_pts.extend(rep.points.clone());
        }
        md.push('\n');
    }

    if !found_any {
        return Err(Error::MissingInput(format!(
            "no artifacts found under {}; expected any of: <campaign>/resolvent/<ineq>.json, \
             <campaign>/evolve/spacetime.json, <campaign>/simulate/summary.json, \
             <campaign>/scan/campaign.json",
            root.display()
        )));
    }

    let dir = root.join("report");
    std::fs::create_dir_all(&dir)?;
    if !ratio_series.is_empty() {
        let svg = report::svg_line_plot(
            "worst inequality ratio vs viscosity",
            "nu",
            "ratio",
            true,
            true,
            &ratio_series,
            None,
        );
        report::write_text(&dir.join("ratios.svg"), &svg, cli.force)?;
    }
    if decay_pts.len() > 1 {
        decay_pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let anchor = decay_pts[decay_pts.len() / 2];
        let svg = report::svg_line_plot(
            "homogeneous decay rate vs viscosity",
            "nu",
            "rate",
            true,
            true,
            &[Series {
                label: "measured rate".into(),
                points: decay_pts.clone(),
            }],
            Some(Reference {
                slope: 0.5,
                anchor,
                label: "slope 1/2".into(),
            }),
        );
        report::write_text(&dir.join("decay.svg"), &svg, cli.force)?;
    }
    if gap_pts.len() > 1 {
        gap_pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let anchor = gap_pts[gap_pts.len() / 2];
        let svg = report::svg_line_plot(
            "pseudospectral gap vs viscosity",
            "nu",
            "gap",
            true,
            true,
            &[Series {
                label: "gap".into(),
                points: gap_pts.clone(),
            }],
            Some(Reference {
                slope: 0.5,
                anchor,
                label: "slope 1/2".into(),
            }),
        );
        report::write_text(&dir.join("gap.svg"), &svg, cli.force)?;
    }
    if !energy_series.is_empty() {
        let svg = report::svg_line_plot(
            "energy functional parts per mode",
            "k",
            "E_k part",
            false,
            true,
            &energy_series,
            None,
        );
        report::write_text(&dir.join("energy.svg"), &svg, cli.force)?;
    }
    let two_sided: Vec<(f64, f64)> = threshold_pts
        .iter()
        .filter(|p| p.bound == channel_stab_core::scan::BoundKind::TwoSided)
        .map(|p| (p.nu, p.a_star))
        .collect();
    if two_sided.len() > 1 {
        let anchor = two_sided[two_sided.len() / 2];
        let svg = report::svg_line_plot(
            "threshold amplitude vs viscosity",
            "nu",
            "A*",
            true,
            true,
            &[Series {
                label: "A*(nu)".into(),
                points: two_sided,
            }],
            Some(Reference {
                slope: 2.0 / 3.0,
                anchor,
                label: "slope 2/3".into(),
            }),
        );
        report::write_text(&dir.join("threshold.svg"), &svg, cli.force)?;
    }

    report::write_text(&dir.join("summary.md"), &md, cli.force)?;
    println!("{md}");
    Ok(0)
}
