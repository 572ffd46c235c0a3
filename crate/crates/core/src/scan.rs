//! Amplitude-threshold campaigns: bisection of the stability boundary
//! per viscosity, power-law fit of the threshold exponent, and
//! persistent, resumable, deterministic campaign execution.
//!
//! Determinism contract: campaign outputs are a pure function of
//! `(plan, seeds)`. Each `(nu, amplitude, seed)` run is keyed and
//! persisted to an append-only NDJSON checkpoint before the next run
//! of its task starts; resume replays completed runs from the log.

use crate::error::{Error, Result};
use crate::nonlinear::{classify_outcome, run_simulation, Outcome, SimConfig};
use crate::util::par_map;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

/// How probe amplitudes are generated for each viscosity.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeProbe {
    /// Bracket `A in [eps_lo nu^gamma, eps_hi nu^gamma]`.
    PowerLaw { eps_lo: f64, eps_hi: f64, gamma: f64 },
    /// Absolute bracket, the same for every viscosity.
    Absolute { lo: f64, hi: f64 },
}

impl AmplitudeProbe {
    pub fn bracket(&self, nu: f64) -> (f64, f64) {
        match self {
            AmplitudeProbe::PowerLaw { eps_lo, eps_hi, gamma } => {
                (eps_lo * nu.powf(*gamma), eps_hi * nu.powf(*gamma))
            }
            AmplitudeProbe::Absolute { lo, hi } => (*lo, *hi),
        }
    }
}

/// Campaign plan; ingested as JSON by the CLI.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanPlan {
    pub campaign: String,
    pub nus: Vec<f64>,
    pub probe: AmplitudeProbe,
    /// Template simulation configuration; `nu`, `amplitude` and `seed`
    /// are overridden per run.
    pub sim: SimConfig,
    /// Relative bisection tolerance on the amplitude (default 0.05).
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_max_runs")]
    pub max_runs_per_nu: usize,
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// Every `(nu, amplitude)` point is run once per seed; the most
    /// dangerous outcome across seeds wins (conservative threshold).
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
}

fn default_tolerance() -> f64 {
    0.05
}
fn default_max_runs() -> usize {
    40
}
fn default_workers() -> usize {
    1
}
fn default_seeds() -> Vec<u64> {
    vec![0]
}

impl ScanPlan {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance < 0.5) {
            return Err(Error::invalid(format!(
                "bisection tolerance must lie in (0, 0.5), got {}",
                self.tolerance
            )));
        }
        if self.nus.is_empty() {
            return Err(Error::invalid("plan needs at least one viscosity"));
        }
        if self.seeds.is_empty() {
            return Err(Error::invalid("plan needs at least one seed"));
        }
        for (lo, hi) in self.nus.iter().map(|&nu| self.probe.bracket(nu)) {
            if !(lo > 0.0 && hi > lo) {
                return Err(Error::invalid("amplitude bracket must satisfy 0 < lo < hi"));
            }
        }
        Ok(())
    }

    /// Spans at least two decades of viscosity (needed for the fit).
    pub fn spans_two_decades(&self) -> bool {
        let lo = self.nus.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.nus.iter().copied().fold(0.0, f64::max);
        hi / lo >= 99.0
    }
}

/// Summary metrics of one run kept in the checkpoint log.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RunMetrics {
    pub sup_over_initial: f64,
    pub final_over_initial: f64,
    pub steps: usize,
}

/// A detector maps `(nu, amplitude, seed)` to an outcome. The
/// production detector runs the nonlinear solver; tests substitute
/// synthetic ones.
pub trait Detector: Sync {
    fn classify(&self, nu: f64, amplitude: f64, seed: u64) -> Result<(Outcome, RunMetrics)>;
}

/// Production detector: full nonlinear run + outcome classification.
pub struct SimDetector {
    pub template: SimConfig,
}

impl Detector for SimDetector {
    fn classify(&self, nu: f64, amplitude: f64, seed: u64) -> Result<(Outcome, RunMetrics)> {
        let cfg = SimConfig {
            nu,
            amplitude,
            seed,
            ..self.template.clone()
        };
        let rec = run_simulation(&cfg)?;
        let init = rec.initial_offmode_energy.max(1e-300);
        Ok((
            classify_outcome(&rec),
            RunMetrics {
                sup_over_initial: rec.sup_offmode_energy / init,
                final_over_initial: rec.final_offmode_energy / init,
                steps: rec.steps_completed,
            },
        ))
    }
}

/// Synthetic oracle: stable iff `A <= eps nu^gamma`. Exercises the
/// scan machinery without simulations.
pub struct SyntheticDetector {
    pub eps: f64,
    pub gamma: f64,
}

impl Detector for SyntheticDetector {
    fn classify(&self, nu: f64, amplitude: f64, _seed: u64) -> Result<(Outcome, RunMetrics)> {
        let threshold = self.eps * nu.powf(self.gamma);
        let outcome = if amplitude <= threshold {
            Outcome::Stable
        } else {
            Outcome::Transitioned
        };
        Ok((
            outcome,
            RunMetrics {
                sup_over_initial: if amplitude <= threshold { 1.0 } else { 1e4 },
                final_over_initial: if amplitude <= threshold { 1e-4 } else { 1e4 },
                steps: 0,
            },
        ))
    }
}

/// One line of the append-only checkpoint log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointRecord {
    pub campaign: String,
    pub nu: f64,
    pub amplitude: f64,
    pub seed: u64,
    pub outcome: Outcome,
    pub metrics: RunMetrics,
    pub config_hash: String,
}

/// FNV-1a over the canonical plan JSON; stable across processes.
pub fn plan_hash(plan: &ScanPlan) -> String {
    let bytes = serde_json::to_vec(plan).unwrap_or_default();
    let mut h: u64 = 0xcbf29ce484222325;
    for b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

/// Whether the threshold was pinched from both sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundKind {
    TwoSided,
    /// Never saw a transition up to the bracket cap: `A* >= cap`
    /// (the expected desk-scale result for well-resolved small nu).
    LowerOnly,
    /// The lower bracket already transitioned: `A* <= lo`.
    UpperOnly,
}

/// Bisection result at one viscosity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdPoint {
    pub nu: f64,
    pub a_star: f64,
    pub bound: BoundKind,
    pub runs: usize,
    pub inconclusive: usize,
    /// Stable outcome observed at an amplitude above a transitioned
    /// one (detector non-monotone); reported, never silently fixed.
    pub nonmonotone_warning: bool,
}

/// Book-keeps executed vs replayed runs behind the detector.
struct RunLedger<'a> {
    detector: &'a dyn Detector,
    seeds: &'a [u64],
    campaign: String,
    config_hash: String,
    completed: HashMap<(u64, u64, u64), (Outcome, RunMetrics)>,
    writer: Option<Mutex<std::fs::File>>,
    executed: Mutex<usize>,
    replayed: Mutex<usize>,
}

fn key(nu: f64, amplitude: f64, seed: u64) -> (u64, u64, u64) {
    (nu.to_bits(), amplitude.to_bits(), seed)
}

impl<'a> RunLedger<'a> {
    /// Worst outcome across seeds at one `(nu, A)`; each individual
    /// run is persisted before this returns.
    fn outcome_at(&self, nu: f64, amplitude: f64) -> Result<(Outcome, usize)> {
        let mut worst = Outcome::Stable;
        let mut inconclusive = 0usize;
        for &seed in self.seeds {
            let k = key(nu, amplitude, seed);
            let (outcome, metrics) = match self.completed.get(&k) {
                Some(v) => {
                    *self.replayed.lock().unwrap() += 1;
                    *v
                }
                None => {
                    let v = self.detector.classify(nu, amplitude, seed)?;
                    *self.executed.lock().unwrap() += 1;
                    if let Some(w) = &self.writer {
                        let rec = CheckpointRecord {
                            campaign: self.campaign.clone(),
                            nu,
                            amplitude,
                            seed,
                            outcome: v.0,
                            metrics: v.1,
                            config_hash: self.config_hash.clone(),
                        };
                        let line = serde_json::to_string(&rec)?;
                        let mut f = w.lock().unwrap();
                        writeln!(f, "{line}")?;
                        f.flush()?;
                    }
                    v
                }
            };
            let _ = metrics;
            match outcome {
                Outcome::Transitioned => worst = Outcome::Transitioned,
                Outcome::Inconclusive => {
                    inconclusive += 1;
                    if worst == Outcome::Stable {
                        worst = Outcome::Inconclusive;
                    }
                }
                Outcome::Stable => {}
            }
        }
        Ok((worst, inconclusive))
    }
}

/// Bisect the stability boundary at one viscosity on `log A`.
/// Inconclusive outcomes shrink toward the stable side (conservative
/// threshold) and are tallied.
fn bisect_with_ledger(
    nu: f64,
    plan: &ScanPlan,
    ledger: &RunLedger<'_>,
) -> Result<ThresholdPoint> {
    let (a_lo0, a_hi0) = plan.probe.bracket(nu);
    let mut runs = 0usize;
    let mut inconclusive_total = 0usize;
    let mut nonmonotone = false;

    let (lo_outcome, inc) = ledger.outcome_at(nu, a_lo0)?;
    runs += 1;
    inconclusive_total += inc;
    if lo_outcome == Outcome::Transitioned {
        return Ok(ThresholdPoint {
            nu,
            a_star: a_lo0,
            bound: BoundKind::UpperOnly,
            runs,
            inconclusive: inconclusive_total,
            nonmonotone_warning: false,
        });
    }
    let (hi_outcome, inc) = ledger.outcome_at(nu, a_hi0)?;
    runs += 1;
    inconclusive_total += inc;
    if hi_outcome != Outcome::Transitioned {
        return Ok(ThresholdPoint {
            nu,
            a_star: a_hi0,
            bound: BoundKind::LowerOnly,
            runs,
            inconclusive: inconclusive_total,
            nonmonotone_warning: false,
        });
    }

    let mut lo = a_lo0; // stable side
    let mut hi = a_hi0; // transitioned side
    let mut sampled: Vec<(f64, Outcome)> =
        vec![(a_lo0, Outcome::Stable), (a_hi0, Outcome::Transitioned)];
    while hi / lo > 1.0 + plan.tolerance && runs < plan.max_runs_per_nu {
        let mid = (lo.ln() + hi.ln()).mul_add(0.5, 0.0).exp();
        let (outcome, inc) = ledger.outcome_at(nu, mid)?;
        runs += 1;
        inconclusive_total += inc;
        sampled.push((mid, outcome));
        match outcome {
            Outcome::Stable => lo = mid,
            // Conservative: anything unclear moves the boundary down.
            Outcome::Transitioned | Outcome::Inconclusive => hi = mid,
        }
    }
    nonmonotone |= !samples_are_monotone(&sampled);

    Ok(ThresholdPoint {
        nu,
        a_star: lo,
        bound: BoundKind::TwoSided,
        runs,
        inconclusive: inconclusive_total,
        nonmonotone_warning: nonmonotone,
    })
}

/// Monotonicity audit over one viscosity's sampled points: no Stable
/// outcome may sit above a Transitioned one.
pub fn samples_are_monotone(samples: &[(f64, Outcome)]) -> bool {
    let min_transitioned = samples
        .iter()
        .filter(|(_, o)| *o == Outcome::Transitioned)
        .map(|(a, _)| *a)
        .fold(f64::INFINITY, f64::min);
    let max_stable = samples
        .iter()
        .filter(|(_, o)| *o == Outcome::Stable)
        .map(|(a, _)| *a)
        .fold(0.0f64, f64::max);
    max_stable <= min_transitioned
}

/// Standalone bisection with an explicit detector (no persistence).
pub fn bisect_threshold(nu: f64, detector: &dyn Detector, plan: &ScanPlan) -> Result<ThresholdPoint> {
    plan.validate()?;
    let ledger = RunLedger {
        detector,
        seeds: &plan.seeds,
        campaign: plan.campaign.clone(),
        config_hash: plan_hash(plan),
        completed: HashMap::new(),
        writer: None,
        executed: Mutex::new(0),
        replayed: Mutex::new(0),
    };
    bisect_with_ledger(nu, plan, &ledger)
}

/// Threshold exponent fit over the two-sided points.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdFit {
    pub pairs: Vec<(f64, f64)>,
    pub gamma_hat: f64,
    /// `log eps_1`: the intercept of the fit.
    pub intercept: f64,
    pub residual: f64,
    /// Spread of pairwise slopes as the confidence proxy.
    pub pairwise_slope_min: f64,
    pub pairwise_slope_max: f64,
    /// Viscosities excluded because their threshold was one-sided.
    pub excluded_one_sided: Vec<f64>,
}

pub fn fit_gamma(points: &[ThresholdPoint]) -> Result<ThresholdFit> {
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    let mut excluded = Vec::new();
    for p in points {
        if p.bound == BoundKind::TwoSided && p.a_star > 0.0 {
            pairs.push((p.nu, p.a_star));
        } else {
            excluded.push(p.nu);
        }
    }
    if pairs.len() < 3 {
        return Err(Error::invalid(format!(
            "threshold fit needs >= 3 two-sided points, have {}; one-sided at nu = {:?}",
            pairs.len(),
            excluded
        )));
    }
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let (gamma_hat, intercept, residual) = crate::util::fit_powerlaw(&pairs);
    let mut smin = f64::INFINITY;
    let mut smax = f64::NEG_INFINITY;
    for i in 0..pairs.len() {
        for j in i + 1..pairs.len() {
            let s = (pairs[j].1.ln() - pairs[i].1.ln()) / (pairs[j].0.ln() - pairs[i].0.ln());
            smin = smin.min(s);
            smax = smax.max(s);
        }
    }
    Ok(ThresholdFit {
        pairs,
        gamma_hat,
        intercept,
        residual,
        pairwise_slope_min: smin,
        pairwise_slope_max: smax,
        excluded_one_sided: excluded,
    })
}

/// Campaign report: thresholds per viscosity plus the fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignReport {
    pub campaign: String,
    pub config_hash: String,
    pub points: Vec<ThresholdPoint>,
    pub fit: Option<ThresholdFit>,
    pub fit_skipped_reason: Option<String>,
    pub runs_executed: usize,
    pub runs_replayed: usize,
}

/// Read a checkpoint log; a corrupt line aborts the resume with its
/// line number.
pub fn read_checkpoint_log(path: &Path) -> Result<Vec<CheckpointRecord>> {
    let mut out = Vec::new();
    if !path.exists() {
        return Ok(out);
    }
    let file = std::fs::File::open(path)?;
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<CheckpointRecord>(&line) {
            Ok(rec) => out.push(rec),
            Err(e) => {
                return Err(Error::CorruptCheckpoint {
                    line: i + 1,
                    reason: e.to_string(),
                })
            }
        }
    }
    Ok(out)
}

/// Run (or resume) a campaign with the production detector.
pub fn run_campaign(plan: &ScanPlan, dir: &Path) -> Result<CampaignReport> {
    let detector = SimDetector {
        template: plan.sim.clone(),
    };
    run_campaign_with(plan, dir, &detector)
}

/// Checkpoint log path for a plan inside a campaign directory.
pub fn checkpoint_path(plan: &ScanPlan, dir: &Path) -> PathBuf {
    dir.join(format!("{}.checkpoint.ndjson", plan.campaign))
}

/// Campaign driver with an injectable detector. Completed runs found
/// in the checkpoint log are replayed, not re-executed; every new run
/// is appended to the log as soon as it finishes.
pub fn run_campaign_with(
    plan: &ScanPlan,
    dir: &Path,
    detector: &dyn Detector,
) -> Result<CampaignReport> {
    plan.validate()?;
    std::fs::create_dir_all(dir)?;
    let log_path = checkpoint_path(plan, dir);
    let hash = plan_hash(plan);

    let mut completed = HashMap::new();
    for rec in read_checkpoint_log(&log_path)? {
        if rec.campaign != plan.campaign {
            continue;
        }
        if rec.config_hash != hash {
            return Err(Error::CorruptCheckpoint {
                line: 0,
                reason: format!(
                    "checkpoint belongs to a different plan (hash {} vs {})",
                    rec.config_hash, hash
                ),
            });
        }
        completed.insert(
            key(rec.nu, rec.amplitude, rec.seed),
            (rec.outcome, rec.metrics),
        );
    }

    let file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&log_path)?;
    let ledger = RunLedger {
        detector,
        seeds: &plan.seeds,
        campaign: plan.campaign.clone(),
        config_hash: hash.clone(),
        completed,
        writer: Some(Mutex::new(file)),
        executed: Mutex::new(0),
        replayed: Mutex::new(0),
    };

    // One task per viscosity; tasks are independent, results are
    // merged in plan order, so the report does not depend on the
    // worker count.
    let nus = plan.nus.clone();
    let results: Vec<Result<ThresholdPoint>> = if plan.workers <= 1 {
        nus.iter().map(|&nu| bisect_with_ledger(nu, plan, &ledger)).collect()
    } else {
        par_map(nus, |nu| bisect_with_ledger(nu, plan, &ledger))
    };
    let mut points = Vec::with_capacity(results.len());
    for r in results {
        points.push(r?);
    }

    let (fit, fit_skipped_reason) = if !plan.spans_two_decades() {
        (None, Some("viscosity grid spans fewer than two decades".to_string()))
    } else {
        match fit_gamma(&points) {
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        }
    };

    let runs_executed = *ledger.executed.lock().unwrap();
    let runs_replayed = *ledger.replayed.lock().unwrap();
    Ok(CampaignReport {
        campaign: plan.campaign.clone(),
        config_hash: hash,
        points,
        fit,
        fit_skipped_reason,
        runs_executed,
        runs_replayed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinear::InitFamily;

    fn test_plan(dirless_seed: u64) -> ScanPlan {
        ScanPlan {
            campaign: format!("test-{dirless_seed}"),
            nus: vec![1e-2, 1e-3, 1e-4],
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
        }
    }

    #[test]
    fn synthetic_oracle_recovers_threshold() {
        let plan = test_plan(1);
        let det = SyntheticDetector {
            eps: 1.0,
            gamma: 2.0 / 3.0,
        };
        for &nu in plan.nus.iter() {
            let p = bisect_threshold(nu, &det, &plan).unwrap();
            assert_eq!(p.bound, BoundKind::TwoSided);
            let want: f64 = nu.powf(2.0 / 3.0);
            assert!(
                (p.a_star / want - 1.0).abs() <= plan.tolerance,
                "nu={nu}: a*={} want {want}",
                p.a_star
            );
            assert!(!p.nonmonotone_warning);
        }
    }

    #[test]
    fn constant_stable_detector_gives_lower_bound() {
        struct AlwaysStable;
        impl Detector for AlwaysStable {
            fn classify(&self, _: f64, _: f64, _: u64) -> Result<(Outcome, RunMetrics)> {
                Ok((
                    Outcome::Stable,
                    RunMetrics {
                        sup_over_initial: 1.0,
                        final_over_initial: 0.0,
                        steps: 0,
                    },
                ))
            }
        }
        let plan = test_plan(2);
        let p = bisect_threshold(1e-3, &AlwaysStable, &plan).unwrap();
        assert_eq!(p.bound, BoundKind::LowerOnly);
        let (_, hi) = plan.probe.bracket(1e-3);
        assert_eq!(p.a_star, hi);
    }

    #[test]
    fn bisection_run_count_obeys_arithmetic_bound() {
        let plan = test_plan(3);
        let det = SyntheticDetector {
            eps: 0.7,
            gamma: 2.0 / 3.0,
        };
        let nu = 1e-3;
        let p = bisect_threshold(nu, &det, &plan).unwrap();
        let (lo, hi) = plan.probe.bracket(nu);
        let bound = ((hi / lo).ln() / (1.0 + plan.tolerance).ln()).log2().ceil() as usize + 2;
        assert!(
            p.runs <= bound + 2, // +2 for the bracket probes
            "runs {} vs bound {}",
            p.runs,
            bound + 2
        );
    }

    #[test]
    fn fit_gamma_recovers_exact_power_law() {
        let points: Vec<ThresholdPoint> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&nu: &f64| ThresholdPoint {
                nu,
                a_star: 0.2 * nu.powf(2.0 / 3.0),
                bound: BoundKind::TwoSided,
                runs: 0,
                inconclusive: 0,
                nonmonotone_warning: false,
            })
            .collect();
        let fit = fit_gamma(&points).unwrap();
        assert!((fit.gamma_hat - 2.0 / 3.0).abs() < 1e-12);
        assert!((fit.intercept - 0.2f64.ln()).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
        assert!((fit.pairwise_slope_min - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn fit_gamma_rejects_sparse_points() {
        let one = vec![ThresholdPoint {
            nu: 1e-3,
            a_star: 0.01,
            bound: BoundKind::TwoSided,
            runs: 0,
            inconclusive: 0,
            nonmonotone_warning: false,
        }];
        assert!(fit_gamma(&one).is_err());
    }

    #[test]
    fn noisy_fit_recovers_exponent_within_tolerance() {
        // 5% multiplicative noise over >= 2 decades keeps the fitted
        // exponent within 0.05 (checked across many draws).
        use rand::Rng;
        let nus = [1e-2f64, 3e-3, 1e-3, 3e-4, 1e-4];
        let mut worst: f64 = 0.0;
        for draw in 0..300u64 {
            let mut rng = crate::util::rng_for(draw, &[99]);
            let points: Vec<ThresholdPoint> = nus
                .iter()
                .map(|&nu| ThresholdPoint {
                    nu,
                    a_star: 0.2 * nu.powf(2.0 / 3.0) * (1.0 + rng.gen_range(-0.05..0.05)),
                    bound: BoundKind::TwoSided,
                    runs: 0,
                    inconclusive: 0,
                    nonmonotone_warning: false,
                })
                .collect();
            let fit = fit_gamma(&points).unwrap();
            worst = worst.max((fit.gamma_hat - 2.0 / 3.0).abs());
        }
        assert!(worst <= 0.05, "worst exponent error {worst}");
    }

    #[test]
    fn campaign_is_deterministic_across_worker_counts() {
        let tmp = tempfile::tempdir().unwrap();
        let det = SyntheticDetector {
            eps: 0.8,
            gamma: 2.0 / 3.0,
        };
        let mut plan1 = test_plan(4);
        plan1.workers = 1;
        let mut plan4 = plan1.clone();
        plan4.workers = 4;
        // Distinct campaigns so the logs stay separate, but identical
        // physics inputs -> reports must be byte-identical apart from
        // the campaign name, so compare the points and fit.
        plan4.campaign = plan1.campaign.clone();
        let dir1 = tmp.path().join("w1");
        let dir4 = tmp.path().join("w4");
        let r1 = run_campaign_with(&plan1, &dir1, &det).unwrap();
        let r4 = run_campaign_with(&plan4, &dir4, &det).unwrap();
        let j1 = serde_json::to_string(&r1.points).unwrap();
        let j4 = serde_json::to_string(&r4.points).unwrap();
        assert_eq!(j1, j4);
        assert_eq!(
            serde_json::to_string(&r1.fit).unwrap(),
            serde_json::to_string(&r4.fit).unwrap()
        );
    }

    #[test]
    fn resume_after_completion_executes_nothing() {
        let tmp = tempfile::tempdir().unwrap();
        let det = SyntheticDetector {
            eps: 1.0,
            gamma: 0.5,
        };
        let plan = test_plan(5);
        let dir = tmp.path();
        let first = run_campaign_with(&plan, dir, &det).unwrap();
        assert!(first.runs_executed > 0);
        assert_eq!(first.runs_replayed, 0);
        let second = run_campaign_with(&plan, dir, &det).unwrap();
        assert_eq!(second.runs_executed, 0);
        assert!(second.runs_replayed > 0);
        assert_eq!(
            serde_json::to_string(&first.points).unwrap(),
            serde_json::to_string(&second.points).unwrap()
        );
    }

    #[test]
    fn kill_and_resume_completes_without_duplicates() {
        let tmp = tempfile::tempdir().unwrap();
        let det = SyntheticDetector {
            eps: 1.0,
            gamma: 0.5,
        };
        let plan = test_plan(6);
        let dir = tmp.path();
        let full = run_campaign_with(&plan, dir, &det).unwrap();
        let total = full.runs_executed;
        let log = checkpoint_path(&plan, dir);

        // Simulate a kill after 3 completed runs by truncating the log.
        let content = std::fs::read_to_string(&log).unwrap();
        let kept: Vec<&str> = content.lines().take(3).collect();
        std::fs::write(&log, kept.join("\n") + "\n").unwrap();

        let resumed = run_campaign_with(&plan, dir, &det).unwrap();
        assert_eq!(resumed.runs_replayed, 3);
        assert_eq!(resumed.runs_executed, total - 3, "exactly the missing runs");
        assert_eq!(
            serde_json::to_string(&full.points).unwrap(),
            serde_json::to_string(&resumed.points).unwrap()
        );
    }

    #[test]
    fn corrupt_checkpoint_refuses_resume() {
        let tmp = tempfile::tempdir().unwrap();
        let det = SyntheticDetector {
            eps: 1.0,
            gamma: 0.5,
        };
        let plan = test_plan(7);
        let dir = tmp.path();
        run_campaign_with(&plan, dir, &det).unwrap();
        let log = checkpoint_path(&plan, dir);
        let mut content = std::fs::read_to_string(&log).unwrap();
        content.push_str("{not json\n");
        std::fs::write(&log, content).unwrap();
        match run_campaign_with(&plan, dir, &det) {
            Err(Error::CorruptCheckpoint { line, .. }) => assert!(line > 0),
            other => panic!("expected corrupt-checkpoint error, got {other:?}"),
        }
    }

    #[test]
    fn monotonicity_audit_flags_inversions() {
        use Outcome::*;
        let ok = vec![(0.1, Stable), (0.2, Stable), (0.4, Transitioned)];
        assert!(samples_are_monotone(&ok));
        let inverted = vec![(0.1, Stable), (0.2, Transitioned), (0.3, Stable)];
        assert!(!samples_are_monotone(&inverted));
        // Inconclusive outcomes do not participate in the audit.
        let with_inc = vec![(0.1, Stable), (0.2, Inconclusive), (0.4, Transitioned)];
        assert!(samples_are_monotone(&with_inc));
    }

    #[test]
    fn plan_validation() {
        let mut plan = test_plan(8);
        plan.tolerance = 0.7;
        assert!(plan.validate().is_err());
        let mut plan = test_plan(9);
        plan.nus.clear();
        assert!(plan.validate().is_err());
    }
}
