//! Sweep `(nu, k, lambda)` and measure every group of the stationary
//! resolvent estimates as a ratio of measured norms, with scaling
//! exponents fitted across viscosities. Quadratic terms use the exact
//! discrete operator norms from [`crate::linop`]; the `L1` and
//! `L-infinity` terms are lower-bounded over an adversarial bank of
//! critical-layer profiles.

use crate::error::{Error, Result};
use crate::linop::{
    assemble, min_singular_value, resolvent_inverse, weighted_operator_norm_cached, GramSet,
    LhsNorm, OperatorLk, ResolventSample, RhsNorm, Toggles,
};
use crate::spectral::{build_grid, compute_norms, velocity_l2, ChebGrid, ComplexProfile};
use crate::util::{fit_powerlaw, par_map};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

/// The five inequality groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InequalityId {
    ResolSlipA,
    ResolSlipB,
    ResolSlipC,
    ResolLambdaA,
    ResolLambdaB,
}

pub const ALL_INEQUALITIES: [InequalityId; 5] = [
    InequalityId::ResolSlipA,
    InequalityId::ResolSlipB,
    InequalityId::ResolSlipC,
    InequalityId::ResolLambdaA,
    InequalityId::ResolLambdaB,
];

impl fmt::Display for InequalityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            InequalityId::ResolSlipA => "resol_slip_a",
            InequalityId::ResolSlipB => "resol_slip_b",
            InequalityId::ResolSlipC => "resol_slip_c",
            InequalityId::ResolLambdaA => "resol_lambda_a",
            InequalityId::ResolLambdaB => "resol_lambda_b",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for InequalityId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a" | "resol_slip_a" => Ok(InequalityId::ResolSlipA),
            "b" | "resol_slip_b" => Ok(InequalityId::ResolSlipB),
            "c" | "resol_slip_c" => Ok(InequalityId::ResolSlipC),
            "lambda_a" | "resol_lambda_a" => Ok(InequalityId::ResolLambdaA),
            "lambda_b" | "resol_lambda_b" => Ok(InequalityId::ResolLambdaB),
            other => Err(Error::invalid(format!(
                "unknown inequality id '{other}'; valid: a, b, c, lambda_a, lambda_b \
                 (or resol_slip_a, resol_slip_b, resol_slip_c, resol_lambda_a, resol_lambda_b)"
            ))),
        }
    }
}

/// One profile of the adversarial forcing bank.
#[derive(Debug, Clone)]
pub struct BankProfile {
    pub profile: ComplexProfile,
    pub label: String,
    /// Fewer than 4 grid points across the layer width.
    pub underresolved: bool,
}

/// Adversarial forcings: Gaussians on the critical layer `1-y^2 =
/// lambda` at three widths, killed at the walls by `(1-y^2)`, plus the
/// first sine modes; everything L2-normalized. For `lambda` outside
/// `[0,1]` only the global sine profiles are returned.
pub fn critical_layer_testbank(
    grid: &ChebGrid,
    nu: f64,
    k: i64,
    lambda: f64,
    count: usize,
) -> Vec<BankProfile> {
    let mut bank = Vec::new();
    let ka = (k as f64).abs();
    if (0.0..=1.0).contains(&lambda) {
        let yc = (1.0 - lambda).sqrt();
        let centers: Vec<f64> = if yc < 1e-12 { vec![0.0] } else { vec![yc, -yc] };
        let widths = [(nu / ka).powf(0.25), (nu / ka).powf(1.0 / 3.0), 0.1];
        for (wi, &sigma) in widths.iter().enumerate() {
            for &c in centers.iter() {
                let prof = grid.sample(|y| {
                    let g = (-((y - c) / sigma).powi(2)).exp();
                    Complex64::new(g * (1.0 - y * y), 0.0)
                });
                let inside = grid
                    .nodes
                    .iter()
                    .filter(|&&y| (y - c).abs() <= sigma)
                    .count();
                bank.push(BankProfile {
                    profile: prof,
                    label: format!("gauss_w{wi}_c{c:+.3}"),
                    underresolved: inside < 4,
                });
            }
        }
    }
    let mut m = 1;
    while bank.len() < count {
        let prof = grid.sample_real(|y| (m as f64 * PI * y).sin());
        bank.push(BankProfile {
            profile: prof,
            label: format!("sine_m{m}"),
            underresolved: false,
        });
        m += 1;
    }
    bank.truncate(count.max(1));
    for b in bank.iter_mut() {
        let l2 = grid.norm_l2(&b.profile.view());
        if l2 > 0.0 {
            b.profile.mapv_inplace(|z| z / l2);
        }
    }
    bank
}

enum TermKind {
    /// Exact discrete operator norm.
    Quadratic(LhsNorm),
    /// `||w||_{L1}`, bank lower bound only.
    BankL1,
    /// `||u||_{L-inf}`, bank lower bound only.
    BankULinf,
}

struct Term {
    name: &'static str,
    coeff: f64,
    kind: TermKind,
}

fn inequality_terms(id: InequalityId, nu: f64, k: i64, lambda: f64) -> (Vec<Term>, RhsNorm) {
    let ka = (k as f64).abs();
    let mu = (lambda - 1.0).abs().sqrt() + (nu / ka).powf(0.25);
    match id {
        InequalityId::ResolSlipA => (
            vec![
                Term {
                    name: "w_l1",
                    coeff: nu.powf(0.375) * ka.powf(0.625),
                    kind: TermKind::BankL1,
                },
                Term {
                    name: "u_l2",
                    coeff: nu.powf(0.375) * ka.powf(1.125),
                    kind: TermKind::Quadratic(LhsNorm::UL2),
                },
                Term {
                    name: "w_l2",
                    coeff: (nu * ka).sqrt(),
                    kind: TermKind::Quadratic(LhsNorm::WL2),
                },
                Term {
                    name: "w_h1k",
                    coeff: nu.powf(0.75) * ka.powf(0.25),
                    kind: TermKind::Quadratic(LhsNorm::WH1k),
                },
            ],
            RhsNorm::FL2,
        ),
        InequalityId::ResolSlipB => (
            vec![
                Term {
                    name: "w_l2",
                    coeff: nu.powf(0.75) * ka.powf(0.25),
                    kind: TermKind::Quadratic(LhsNorm::WL2),
                },
                Term {
                    name: "w_h1k",
                    coeff: nu,
                    kind: TermKind::Quadratic(LhsNorm::WH1k),
                },
                Term {
                    name: "u_l2",
                    coeff: (nu * ka).sqrt(),
                    kind: TermKind::Quadratic(LhsNorm::UL2),
                },
            ],
            RhsNorm::FHm1k,
        ),
        InequalityId::ResolSlipC => (
            vec![
                Term {
                    name: "w_h1k",
                    coeff: (nu / ka).sqrt(),
                    kind: TermKind::Quadratic(LhsNorm::WH1k),
                },
                Term {
                    name: "w_l2",
                    coeff: (nu / ka).powf(0.25),
                    kind: TermKind::Quadratic(LhsNorm::WL2),
                },
                Term {
                    name: "u_linf",
                    coeff: (nu / ka).powf(0.125),
                    kind: TermKind::BankULinf,
                },
                Term {
                    name: "u_l2",
                    coeff: 1.0,
                    kind: TermKind::Quadratic(LhsNorm::UL2),
                },
            ],
            RhsNorm::FH1k,
        ),
        InequalityId::ResolLambdaA => (
            vec![
                Term {
                    name: "u_l2",
                    coeff: nu.powf(1.0 / 6.0) * ka.powf(5.0 / 6.0) * mu.powf(1.0 / 3.0),
                    kind: TermKind::Quadratic(LhsNorm::UL2),
                },
                Term {
                    name: "w_h1k",
                    coeff: nu.powf(2.0 / 3.0) * ka.powf(1.0 / 3.0) * mu.powf(1.0 / 3.0),
                    kind: TermKind::Quadratic(LhsNorm::WH1k),
                },
                Term {
                    name: "w_l2",
                    coeff: nu.powf(1.0 / 3.0) * ka.powf(2.0 / 3.0) * mu.powf(2.0 / 3.0),
                    kind: TermKind::Quadratic(LhsNorm::WL2),
                },
            ],
            RhsNorm::FL2,
        ),
        InequalityId::ResolLambdaB => (
            vec![Term {
                name: "w_l2",
                coeff: nu.powf(2.0 / 3.0) * ka.powf(1.0 / 3.0) * mu.powf(1.0 / 3.0),
                kind: TermKind::Quadratic(LhsNorm::WL2),
            }],
            RhsNorm::FHm1k,
        ),
    }
}

fn rhs_norm_of(grid: &ChebGrid, k: i64, rhs: RhsNorm, f: &ComplexProfile) -> Result<f64> {
    match rhs {
        RhsNorm::FL2 => Ok(grid.norm_l2(&f.view())),
        RhsNorm::FHm1k => crate::spectral::norm_hm1k(grid, k, &f.view()),
        RhsNorm::FH1k => Ok(grid.norm_h1k(k, &f.view()) / (k as f64).abs()),
    }
}

/// Evaluate one inequality at one `(operator, lambda)` point.
///
/// Quadratic terms get their exact operator norm; the combined ratio
/// is maximized over the bank plus each term's worst-case forcing.
/// `term_ratios` also records `combined_bank` (wall-vanishing bank
/// members only) next to `combined_all`.
pub fn evaluate_inequality(
    op: &OperatorLk,
    lambda: f64,
    id: InequalityId,
    bank: &[BankProfile],
) -> Result<ResolventSample> {
    let grams = GramSet::new(op)?;
    evaluate_inequality_cached(op, &grams, lambda, id, bank)
}

/// Sweep-friendly variant with the shift-independent Gram factors
/// precomputed once per operator.
pub fn evaluate_inequality_cached(
    op: &OperatorLk,
    grams: &GramSet,
    lambda: f64,
    id: InequalityId,
    bank: &[BankProfile],
) -> Result<ResolventSample> {
    let needs_bank = matches!(id, InequalityId::ResolSlipA | InequalityId::ResolSlipC);
    if needs_bank && bank.is_empty() {
        return Err(Error::invalid(format!(
            "inequality {id} has non-quadratic terms and needs a forcing bank"
        )));
    }
    let grid = &op.grid;
    let (terms, rhs_kind) = inequality_terms(id, op.nu, op.k, lambda);

    let mut term_ratios: BTreeMap<String, f64> = BTreeMap::new();
    let mut candidates: Vec<(ComplexProfile, bool)> = Vec::new(); // (profile, from_bank)
    let mut flagged = false;

    // One factorization and explicit inverse per shift, shared by every
    // term and candidate evaluation.
    let t_inv = match resolvent_inverse(op, lambda) {
        Ok(t) => t,
        Err(Error::Singular { .. }) | Err(Error::IllConditioned { .. }) => {
            return Ok(ResolventSample {
                nu: op.nu,
                k: op.k,
                lambda,
                sigma_min: 0.0,
                term_ratios,
                worst_ratio: 0.0,
                flagged: true,
                underresolved_bank: bank.iter().filter(|b| b.underresolved).count(),
            })
        }
        Err(e) => return Err(e),
    };

    for t in terms.iter() {
        if let TermKind::Quadratic(lhs) = t.kind {
            let (norm, worst_f) =
                weighted_operator_norm_cached(op, grams, &t_inv, lhs, rhs_kind)?;
            term_ratios.insert(t.name.to_string(), t.coeff * norm);
            candidates.push((worst_f, false));
        }
    }
    for b in bank.iter() {
        candidates.push((b.profile.clone(), true));
    }

    let mut combined_all = 0.0f64;
    let mut combined_bank = 0.0f64;
    let mut bank_term_best: BTreeMap<&'static str, f64> = BTreeMap::new();

    for (f, from_bank) in candidates.iter() {
        let rhs_val = rhs_norm_of(grid, op.k, rhs_kind, f)?;
        if rhs_val <= 1e-300 {
            continue;
        }
        let w_int = t_inv.dot(&op.restrict(&f.view()));
        let w = op.extend(&w_int.view());
        let (u1, u2) = op.velocity(&w_int.view());
        let w_norms = compute_norms(grid, op.k, &w.view())?;
        let u_l2 = velocity_l2(grid, &u1.view(), &u2.view());
        let u_linf = (0..grid.n)
            .map(|j| (u1[j].norm_sqr() + u2[j].norm_sqr()).sqrt())
            .fold(0.0, f64::max);

        let mut lhs = 0.0;
        for t in terms.iter() {
            let val = match t.kind {
                TermKind::Quadratic(LhsNorm::WL2) => w_norms.l2,
                TermKind::Quadratic(LhsNorm::WH1k) => w_norms.h1k,
                TermKind::Quadratic(LhsNorm::UL2) => u_l2,
                TermKind::BankL1 => w_norms.l1,
                TermKind::BankULinf => u_linf,
            };
            lhs += t.coeff * val;
            if matches!(t.kind, TermKind::BankL1 | TermKind::BankULinf) {
                let r = t.coeff * val / rhs_val;
                let e = bank_term_best.entry(t.name).or_insert(0.0);
                if r > *e {
                    *e = r;
                }
            }
        }
        let ratio = lhs / rhs_val;
        combined_all = combined_all.max(ratio);
        if *from_bank {
            combined_bank = combined_bank.max(ratio);
        }
    }
    for (name, v) in bank_term_best {
        term_ratios.insert(name.to_string(), v);
    }
    term_ratios.insert("combined_bank".to_string(), combined_bank);
    term_ratios.insert("combined_all".to_string(), combined_all);

    // Conditioning screen: a shift too close to the spectrum cannot be
    // trusted through the explicit inverse; flag it for exclusion.
    let sigma_min = min_singular_value(op, lambda);
    flagged |= sigma_min < 1e-14 * crate::linalg::norm_one(&op.shifted(lambda).view());

    Ok(ResolventSample {
        nu: op.nu,
        k: op.k,
        lambda,
        sigma_min,
        term_ratios,
        worst_ratio: combined_all,
        flagged,
        underresolved_bank: bank.iter().filter(|b| b.underresolved).count(),
    })
}

/// Sweep grids over `(nu, k, lambda)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPlan {
    pub nus: Vec<f64>,
    pub ks: Vec<i64>,
    pub lambdas: Vec<f64>,
    pub n: usize,
    pub bank_count: usize,
}

impl Default for SweepPlan {
    fn default() -> Self {
        SweepPlan {
            nus: vec![1e-2, 3e-3, 1e-3, 3e-4, 1e-4],
            ks: vec![1, 2, 4, 8],
            lambdas: (0..41).map(|i| -0.25 + 1.5 * i as f64 / 40.0).collect(),
            n: 128,
            bank_count: 10,
        }
    }
}

impl SweepPlan {
    /// Single-point plan (used by the CLI one-shot mode).
    pub fn single(nu: f64, k: i64, lambda: f64, n: usize) -> Self {
        SweepPlan {
            nus: vec![nu],
            ks: vec![k],
            lambdas: vec![lambda],
            n,
            bank_count: 10,
        }
    }
}

/// Sweep report for one inequality.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InequalityReport {
    pub inequality_id: InequalityId,
    pub samples: Vec<ResolventSample>,
    /// `(nu, worst combined ratio over k and lambda)` per viscosity.
    pub per_nu_worst: Vec<(f64, f64)>,
    pub worst_ratio: f64,
    /// Least-squares exponent of `log worst_ratio` vs `log nu`; present
    /// with >= 3 viscosities spanning >= 2 decades.
    pub fitted_exponent_vs_nu: Option<f64>,
    pub fit_residual: Option<f64>,
    /// Samples dropped for conditioning failures (never silently).
    pub excluded: usize,
    pub plan: SweepPlan,
}

/// Fit helper shared with the synthetic-ratio test seam.
pub fn fit_exponent(per_nu_worst: &[(f64, f64)]) -> (Option<f64>, Option<f64>) {
    let usable: Vec<(f64, f64)> = per_nu_worst
        .iter()
        .filter(|(nu, r)| *nu > 0.0 && *r > 0.0)
        .copied()
        .collect();
    if usable.len() < 3 {
        return (None, None);
    }
    let lo = usable.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = usable.iter().map(|p| p.0).fold(0.0, f64::max);
    if hi / lo < 99.0 {
        return (None, None);
    }
    let (slope, _, resid) = fit_powerlaw(&usable);
    (Some(slope), Some(resid))
}

/// Run one inequality over the whole plan, fit the exponent across
/// viscosities, and count (never hide) excluded samples.
pub fn sweep_and_fit(plan: &SweepPlan, id: InequalityId) -> Result<InequalityReport> {
    let grid = Arc::new(build_grid(plan.n)?);
    let pairs: Vec<(f64, i64)> = plan
        .nus
        .iter()
        .flat_map(|&nu| plan.ks.iter().map(move |&k| (nu, k)))
        .collect();

    let lambdas = plan.lambdas.clone();
    let bank_count = plan.bank_count;
    let results: Vec<Result<Vec<ResolventSample>>> = par_map(pairs, {
        let grid = grid.clone();
        move |(nu, k)| {
            let op = assemble(grid.clone(), nu, k, Toggles::default())?;
            let grams = GramSet::new(&op)?;
            let mut out = Vec::with_capacity(lambdas.len());
            for &lambda in lambdas.iter() {
                let bank = critical_layer_testbank(&grid, nu, k, lambda, bank_count);
                out.push(evaluate_inequality_cached(&op, &grams, lambda, id, &bank)?);
            }
            Ok(out)
        }
    });

    let mut samples = Vec::new();
    for r in results {
        samples.extend(r?);
    }
    let excluded = samples.iter().filter(|s| s.flagged).count();

    let mut per_nu_worst = Vec::new();
    for &nu in plan.nus.iter() {
        let worst = samples
            .iter()
            .filter(|s| s.nu == nu && !s.flagged)
            .map(|s| s.worst_ratio)
            .fold(0.0, f64::max);
        per_nu_worst.push((nu, worst));
    }
    let worst_ratio = per_nu_worst.iter().map(|p| p.1).fold(0.0, f64::max);
    let (fitted_exponent_vs_nu, fit_residual) = fit_exponent(&per_nu_worst);

    Ok(InequalityReport {
        inequality_id: id,
        samples,
        per_nu_worst,
        worst_ratio,
        fitted_exponent_vs_nu,
        fit_residual,
        excluded,
        plan: plan.clone(),
    })
}
