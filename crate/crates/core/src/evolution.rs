//! Time integration of the linearized system
//!
//! `d_t w + L_k w = -ik f1 - d_y f2 - f3 - f4`
//!
//! by Crank-Nicolson in the full operator, with on-line accumulation of
//! the weighted space-time norms that appear in the linear estimates,
//! decay-rate fits and transient-growth computation.

use crate::error::{Error, Result};
use crate::linalg::{expm, sigma_max_power, LuFactor};
use crate::linop::OperatorLk;
use crate::spectral::{velocity_l2, ComplexProfile};
use crate::util::{fit_line, par_map};
use ndarray::{Array1, Array2};
use num_complex::Complex64;

/// Time-dependent forcing providers for the four slots. `f3` must
/// vanish at the walls at every queried time (checked).
#[derive(Default)]
pub struct ForcingSlots {
    pub f1: Option<Box<dyn Fn(f64) -> ComplexProfile + Sync + Send>>,
    pub f2: Option<Box<dyn Fn(f64) -> ComplexProfile + Sync + Send>>,
    pub f3: Option<Box<dyn Fn(f64) -> ComplexProfile + Sync + Send>>,
    pub f4: Option<Box<dyn Fn(f64) -> ComplexProfile + Sync + Send>>,
}

impl ForcingSlots {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.f1.is_none() && self.f2.is_none() && self.f3.is_none() && self.f4.is_none()
    }
}

/// Snapshot of one slot evaluation with the norms the estimates need.
struct SlotSample {
    rhs_interior: Array1<Complex64>,
    f12_sq: f64,    // ||f1||^2 + ||f2||^2
    f3_h1k_sq: f64, // ||(d_y,|k|) f3||^2
    f4_sq: f64,     // ||f4||^2
}

fn eval_slots(op: &OperatorLk, slots: &ForcingSlots, t: f64) -> Result<SlotSample> {
    let grid = &op.grid;
    let n = grid.n;
    let kf = op.k as f64;
    let mut rhs: ComplexProfile = Array1::zeros(n);
    let mut f12_sq = 0.0;
    let mut f3_h1k_sq = 0.0;
    let mut f4_sq = 0.0;

    if let Some(f1) = &slots.f1 {
        let v = f1(t);
        f12_sq += grid.norm_l2(&v.view()).powi(2);
        for j in 0..n {
            rhs[j] -= Complex64::new(0.0, kf) * v[j];
        }
    }
    if let Some(f2) = &slots.f2 {
        let v = f2(t);
        f12_sq += grid.norm_l2(&v.view()).powi(2);
        let dv = grid.deriv(&v.view());
        for j in 0..n {
            rhs[j] -= dv[j];
        }
    }
    if let Some(f3) = &slots.f3 {
        let v = f3(t);
        let edge = v[0].norm().max(v[n - 1].norm());
        if edge > 1e-10 * (1.0 + grid.norm_linf(&v.view())) {
            return Err(Error::invalid(format!(
                "f3 must vanish at the walls; |f3(+-1)| = {edge:.3e} at t = {t:.6e}"
            )));
        }
        f3_h1k_sq += grid.norm_h1k(op.k, &v.view()).powi(2);
        for j in 0..n {
            rhs[j] -= v[j];
        }
    }
    if let Some(f4) = &slots.f4 {
        let v = f4(t);
        f4_sq += grid.norm_l2(&v.view()).powi(2);
        for j in 0..n {
            rhs[j] -= v[j];
        }
    }
    Ok(SlotSample {
        rhs_interior: Array1::from_shape_fn(n - 2, |i| rhs[i + 1]),
        f12_sq,
        f3_h1k_sq,
        f4_sq,
    })
}

/// Advection-accuracy bound on the step size (diffusion is implicit).
pub fn cfl_limit(op: &OperatorLk) -> f64 {
    (0.5 / (op.k as f64).abs()).min(0.1 * op.nu.sqrt().recip())
}

/// Crank-Nicolson stepper with the factorization cached for one
/// `(operator, dt)` pair.
pub struct LinearStepper {
    pub dt: f64,
    lu: LuFactor,
    explicit_mat: Array2<Complex64>,
}

impl LinearStepper {
    pub fn new(op: &OperatorLk, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::invalid("dt must be positive"));
        }
        let limit = cfl_limit(op);
        if dt > limit * (1.0 + 1e-12) {
            return Err(Error::invalid(format!(
                "dt = {dt:.3e} violates the advection accuracy bound {limit:.3e}"
            )));
        }
        let ni = op.interior_size();
        let a = op.matrix();
        let mut implicit = a.mapv(|z| z * (dt / 2.0));
        let mut explicit = a.mapv(|z| z * (-dt / 2.0));
        for i in 0..ni {
            implicit[[i, i]] += 1.0;
            explicit[[i, i]] += 1.0;
        }
        let lu = LuFactor::new(&implicit.view())?;
        Ok(LinearStepper {
            dt,
            lu,
            explicit_mat: explicit,
        })
    }

    /// One CN step on interior values with trapezoidal forcing.
    fn step_interior(
        &self,
        w: &Array1<Complex64>,
        rhs_now: &Array1<Complex64>,
        rhs_next: &Array1<Complex64>,
    ) -> Array1<Complex64> {
        let mut b = crate::linalg::matvec(&self.explicit_mat, &w.view());
        for i in 0..b.len() {
            b[i] += (self.dt / 2.0) * (rhs_now[i] + rhs_next[i]);
        }
        self.lu.solve(&b.view())
    }
}

/// Single CN step on a full-grid state (walls pinned to zero). Builds
/// a fresh factorization; use [`LinearStepper`] inside loops.
pub fn step_linear(
    op: &OperatorLk,
    state: &ComplexProfile,
    t: f64,
    dt: f64,
    slots: &ForcingSlots,
) -> Result<ComplexProfile> {
    let stepper = LinearStepper::new(op, dt)?;
    let w = op.restrict(&state.view());
    let now = eval_slots(op, slots, t)?;
    let next = eval_slots(op, slots, t + dt)?;
    let wn = stepper.step_interior(&w, &now.rhs_interior, &next.rhs_interior);
    for v in wn.iter() {
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::Diverged { step: 1, time: t + dt });
        }
    }
    Ok(op.extend(&wn.view()))
}

/// Weighted space-time norms of one trajectory. `w_linf_l2` stores the
/// sup of the weighted norm; the `*_l2_l2` fields store *squared*
/// weighted time integrals, matching how the estimates combine them.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct SpaceTimeNorms {
    pub c: f64,
    pub w_linf_l2: f64,
    /// Time at which the sup was attained.
    pub sup_attained_at: f64,
    pub w_l2_l2: f64,
    pub wgrad_l2_l2: f64,
    pub u_l2_l2: f64,
    /// Squared weighted forcing accumulators.
    pub f12_l2l2: f64,
    pub f3_h1k_l2l2: f64,
    pub f4_l2l2: f64,
    /// `||(d_yy - k^2) w0||_{L2}` for the right-hand side.
    pub delta_omega0_l2: f64,
    /// Set when the weight outruns the decay (sup attained after t=0
    /// on a homogeneous run), signalling a too-aggressive `c`.
    pub weight_flag: bool,
}

/// Strided state storage plus metadata.
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ComplexProfile>,
    pub nu: f64,
    pub k: i64,
    pub dt: f64,
    pub n: usize,
}

/// Integrate to horizon `T` with fixed step `dt` and weight rate `c`
/// (weight `e^{c sqrt(nu) t}`), accumulating space-time norms with the
/// trapezoid rule at every step.
pub fn evolve(
    op: &OperatorLk,
    omega0: &ComplexProfile,
    slots: &ForcingSlots,
    horizon: f64,
    dt: f64,
    c: f64,
) -> Result<(Trajectory, SpaceTimeNorms)> {
    let grid = &op.grid;
    let n = grid.n;
    if omega0.len() != n {
        return Err(Error::invalid("initial data length does not match grid"));
    }
    let edge = omega0[0].norm().max(omega0[n - 1].norm());
    if edge > 1e-10 * (1.0 + grid.norm_linf(&omega0.view())) {
        return Err(Error::invalid("initial vorticity must vanish at the walls"));
    }
    if c < 0.0 {
        return Err(Error::invalid("weight rate c must be nonnegative"));
    }
    let steps = (horizon / dt).ceil().max(1.0) as usize;
    let stepper = LinearStepper::new(op, dt)?;

    let stride = (steps / 1000).max(1);
    let mut times = Vec::with_capacity(steps / stride + 2);
    let mut states = Vec::with_capacity(steps / stride + 2);

    let rate = c * op.nu.sqrt();
    let weight = |t: f64| ((rate * t).min(700.0)).exp();

    let delta0 = grid.laplacian_k(op.k, &omega0.view());
    let delta_omega0_l2 = grid.norm_l2(&delta0.view());

    let mut w = op.restrict(&omega0.view());
    let mut norms = SpaceTimeNorms {
        c,
        w_linf_l2: 0.0,
        sup_attained_at: 0.0,
        w_l2_l2: 0.0,
        wgrad_l2_l2: 0.0,
        u_l2_l2: 0.0,
        f12_l2l2: 0.0,
        f3_h1k_l2l2: 0.0,
        f4_l2l2: 0.0,
        delta_omega0_l2,
        weight_flag: false,
    };

    // Accumulate one time level into the trapezoid sums.
    let accumulate = |w_int: &Array1<Complex64>,
                          slot: &SlotSample,
                          t: f64,
                          trap: f64,
                          norms: &mut SpaceTimeNorms| {
        let full = op.extend(&w_int.view());
        let wt = weight(t);
        let wt2 = wt * wt;
        let l2 = grid.norm_l2(&full.view());
        let h1k = grid.norm_h1k(op.k, &full.view());
        let (u1, u2) = op.velocity(&w_int.view());
        let ul2 = velocity_l2(grid, &u1.view(), &u2.view());
        let weighted_l2 = wt * l2;
        if weighted_l2 > norms.w_linf_l2 {
            norms.w_linf_l2 = weighted_l2;
            norms.sup_attained_at = t;
        }
        norms.w_l2_l2 += trap * wt2 * l2 * l2;
        norms.wgrad_l2_l2 += trap * wt2 * h1k * h1k;
        norms.u_l2_l2 += trap * wt2 * ul2 * ul2;
        norms.f12_l2l2 += trap * wt2 * slot.f12_sq;
        norms.f3_h1k_l2l2 += trap * wt2 * slot.f3_h1k_sq;
        norms.f4_l2l2 += trap * wt2 * slot.f4_sq;
    };

    let mut slot_now = eval_slots(op, slots, 0.0)?;
    accumulate(&w, &slot_now, 0.0, dt / 2.0, &mut norms);
    times.push(0.0);
    states.push(omega0.clone());

    for step in 1..=steps {
        let t_next = step as f64 * dt;
        let slot_next = eval_slots(op, slots, t_next)?;
        let w_next = stepper.step_interior(&w, &slot_now.rhs_interior, &slot_next.rhs_interior);
        if !w_next.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::Diverged {
                step,
                time: t_next,
            });
        }
        let trap = if step == steps { dt / 2.0 } else { dt };
        accumulate(&w_next, &slot_next, t_next, trap, &mut norms);
        if step % stride == 0 || step == steps {
            times.push(t_next);
            states.push(op.extend(&w_next.view()));
        }
        w = w_next;
        slot_now = slot_next;
    }

    // Weight guard: on a decaying homogeneous run the sup should sit at
    // t = 0; anything later means the weight outruns the decay.
    norms.weight_flag = slots.is_empty() && norms.sup_attained_at > 0.0;

    Ok((
        Trajectory {
            times,
            states,
            nu: op.nu,
            k: op.k,
            dt,
            n,
        },
        norms,
    ))
}

/// Which branch of `min{(nu k)^{-1/2}, (nu k^2)^{-1}}` binds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum F4Branch {
    EnhancedDissipation,
    HeatDiffusion,
}

/// The `f4` right-hand-side weight and its binding branch.
pub fn f4_weight(nu: f64, k: i64) -> (f64, F4Branch) {
    let ka = (k as f64).abs();
    let a = (nu * ka).sqrt().recip();
    let b = (nu * ka * ka).recip();
    if a <= b {
        (a, F4Branch::EnhancedDissipation)
    } else {
        (b, F4Branch::HeatDiffusion)
    }
}

/// Verification record for the weighted space-time estimate.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SpaceTimeReport {
    pub nu: f64,
    pub k: i64,
    pub c: f64,
    /// Term name -> LHS-term / RHS ratio for the full run.
    pub term_ratios: std::collections::BTreeMap<String, f64>,
    pub combined_ratio: f64,
    /// Same estimate re-run with zero initial data (isolates the
    /// inhomogeneous part).
    pub forced_combined_ratio: Option<f64>,
    pub f4_branch: F4Branch,
    /// RHS vanished while the LHS did not (impossible for a correct
    /// solver; kept as an explicit violation signal).
    pub violation: bool,
    pub norms: SpaceTimeNorms,
}

fn lhs_rhs(op: &OperatorLk, norms: &SpaceTimeNorms, include_data: bool) -> (f64, f64, [f64; 4]) {
    let nu = op.nu;
    let ka = (op.k as f64).abs();
    let term_amp = norms.w_linf_l2.powi(2);
    let term_grad = nu * norms.wgrad_l2_l2;
    let term_enh = (nu * ka).sqrt() * norms.w_l2_l2;
    let term_invd = ka * norms.u_l2_l2;
    let lhs = term_amp + term_grad + term_enh + term_invd;
    let (f4w, _) = f4_weight(nu, op.k);
    let mut rhs = nu.recip() * norms.f12_l2l2 + ka.recip() * norms.f3_h1k_l2l2 + f4w * norms.f4_l2l2;
    if include_data {
        rhs += norms.delta_omega0_l2.powi(2);
    }
    (lhs, rhs, [term_amp, term_grad, term_enh, term_invd])
}

/// Run the weighted estimate on `(omega0, slots)` and report LHS/RHS
/// ratios, including the zero-data variant when forcing is present.
pub fn verify_prop41(
    op: &OperatorLk,
    omega0: &ComplexProfile,
    slots: &ForcingSlots,
    horizon: f64,
    dt: f64,
    c: f64,
) -> Result<SpaceTimeReport> {
    let (_, norms) = evolve(op, omega0, slots, horizon, dt, c)?;
    let (lhs, rhs, terms) = lhs_rhs(op, &norms, true);
    let violation = rhs == 0.0 && lhs > 0.0;
    let combined = if rhs > 0.0 { lhs / rhs } else { 0.0 };
    let mut term_ratios = std::collections::BTreeMap::new();
    if rhs > 0.0 {
        term_ratios.insert("amplitude".to_string(), terms[0] / rhs);
        term_ratios.insert("heat_gradient".to_string(), terms[1] / rhs);
        term_ratios.insert("enhanced_dissipation".to_string(), terms[2] / rhs);
        term_ratios.insert("inviscid_damping".to_string(), terms[3] / rhs);
    }

    // Zero-data companion run isolating the forced estimate.
    let forced_combined_ratio = if slots.is_empty() {
        None
    } else {
        let zero = op.grid.zero();
        let (_, fnorms) = evolve(op, &zero, slots, horizon, dt, c)?;
        let (flhs, frhs, _) = lhs_rhs(op, &fnorms, false);
        Some(if frhs > 0.0 { flhs / frhs } else { 0.0 })
    };

    let (_, f4_branch) = f4_weight(op.nu, op.k);
    Ok(SpaceTimeReport {
        nu: op.nu,
        k: op.k,
        c,
        term_ratios,
        combined_ratio: combined,
        forced_combined_ratio,
        f4_branch,
        violation,
        norms,
    })
}

/// Decay-rate fit on `log ||w(t)||` over the window `[0.2 T, 0.8 T]`.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct DecayRate {
    /// Positive = decay.
    pub rate: f64,
    pub window: (f64, f64),
    /// Oscillation beyond the fit residual (max residual more than
    /// ten times the RMS) marks the fit as unreliable.
    pub low_confidence: bool,
}

pub fn measure_decay_rate(op: &OperatorLk, traj: &Trajectory) -> Result<DecayRate> {
    if traj.times.len() < 100 {
        return Err(Error::invalid(format!(
            "decay fit needs >= 100 samples, got {}",
            traj.times.len()
        )));
    }
    let horizon = *traj.times.last().unwrap();
    let (t0, t1) = (0.2 * horizon, 0.8 * horizon);
    let mut pts = Vec::new();
    for (t, state) in traj.times.iter().zip(traj.states.iter()) {
        if *t < t0 || *t > t1 {
            continue;
        }
        let l2 = op.grid.norm_l2(&state.view());
        if l2 > 0.0 {
            pts.push((*t, l2.ln()));
        }
    }
    if pts.len() < 10 {
        return Err(Error::invalid("trajectory norm vanished inside the fit window"));
    }
    let (slope, intercept, rms) = fit_line(&pts);
    let max_resid = pts
        .iter()
        .map(|&(t, y)| (y - (intercept + slope * t)).abs())
        .fold(0.0, f64::max);
    let low_confidence = rms > 0.0 && max_resid > 10.0 * rms;
    Ok(DecayRate {
        rate: -slope,
        window: (t0, t1),
        low_confidence,
    })
}

/// Transient growth of the semigroup in the quadrature L2 metric.
#[derive(Debug, Clone)]
pub struct TransientGrowth {
    pub per_time: Vec<(f64, f64)>,
    pub max_growth: f64,
    pub argmax_time: f64,
    /// Optimal initial vorticity on the full grid, unit L2 norm.
    pub optimal_initial: ComplexProfile,
}

/// Largest L2->L2 amplification `||e^{-T L}||` over a grid of horizons
/// via the matrix exponential of the weighted operator. The identity
/// at T=0 keeps the overall growth factor at least one.
pub fn transient_growth(op: &OperatorLk, horizons: &[f64]) -> Result<TransientGrowth> {
    if horizons.iter().any(|t| *t <= 0.0) {
        return Err(Error::invalid("growth horizons must be positive"));
    }
    let ni = op.interior_size();
    let b = weighted_matrix(op);

    let results: Vec<Result<(f64, f64, Array1<Complex64>)>> = par_map(horizons.to_vec(), |t| {
        let m = b.mapv(|z| z * (-t));
        let e = expm(&m.view())?;
        if !e.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::Diverged { step: 0, time: t });
        }
        let (sigma, v) = sigma_max_power(&e.view(), 1e-12, 6000);
        Ok((t, sigma, v))
    });

    let mut per_time = Vec::with_capacity(horizons.len());
    let mut best: (f64, f64, Option<Array1<Complex64>>) = (0.0, 1.0, None);
    for r in results {
        let (t, sigma, v) = r?;
        per_time.push((t, sigma));
        if sigma > best.1 {
            best = (t, sigma, Some(v));
        }
    }

    let optimal_initial = match best.2 {
        Some(v) => {
            // Undo the weight similarity to land back in nodal values.
            let mut w = Array1::zeros(ni);
            for i in 0..ni {
                w[i] = v[i] / op.grid.quad_weights[i + 1].sqrt();
            }
            let full = op.extend(&w.view());
            let l2 = op.grid.norm_l2(&full.view());
            full.mapv(|z| z / l2)
        }
        None => {
            // No growth above identity anywhere on the grid.
            let mut w: Array1<Complex64> = Array1::zeros(ni);
            w[ni / 2] = Complex64::new(1.0, 0.0);
            let full = op.extend(&w.view());
            let l2 = op.grid.norm_l2(&full.view());
            full.mapv(|z| z / l2)
        }
    };

    Ok(TransientGrowth {
        per_time,
        max_growth: best.1,
        argmax_time: best.0,
        optimal_initial,
    })
}

fn weighted_matrix(op: &OperatorLk) -> Array2<Complex64> {
    let ni = op.interior_size();
    let a = op.matrix();
    Array2::from_shape_fn((ni, ni), |(i, j)| {
        a[[i, j]] * (op.grid.quad_weights[i + 1] / op.grid.quad_weights[j + 1]).sqrt()
    })
}
