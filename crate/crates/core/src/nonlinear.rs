//! Nonlinear perturbation dynamics: pseudo-spectral solver for the
//! vorticity form of the perturbed channel flow,
//!
//! `d_t w - nu Lap w + (1-y^2) d_x w + 2 d_x Phi = -div(u w)`,
//!
//! with vorticity and streamfunction vanishing at the walls. Fourier
//! modes in x (k = 0..K, reality gives the negative half), Chebyshev
//! collocation in y. The linear part of every nonzero mode is advanced
//! by Crank-Nicolson in the full modal operator; the quadratic term is
//! advanced by AB2 with an Euler start and evaluated pseudo-spectrally
//! on a 3/2-dealiased x-grid (a direct convolution oracle is kept for
//! verification). The zero mode reduces to a heat equation for the
//! mean shear with Neumann walls.

use crate::error::{Error, Result};
use crate::linalg::LuFactor;
use crate::linop::{assemble, OperatorLk, Toggles};
use crate::spectral::{
    build_grid, cheb_coefficients, velocity_l2, ChebGrid, ComplexProfile, HelmholtzSolver,
};
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::Rng;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

/// Initial-data families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitFamily {
    RandomSobolev,
    CriticalLayer,
    OptimalLinear,
}

/// Simulation configuration; the JSON schema of the `simulate`
/// subcommand mirrors these field names.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    pub nu: f64,
    /// Mode truncation K (modes -K..K, k >= 0 stored).
    #[serde(rename = "K")]
    pub truncation: i64,
    pub n: usize,
    /// 0 = choose automatically from the CFL bound.
    #[serde(default)]
    pub dt: f64,
    /// 0 = default horizon min(20 (nu)^{-1/2}, 2e3).
    #[serde(default, rename = "T")]
    pub horizon: f64,
    /// Weight rate c in e^{c sqrt(nu) t}.
    #[serde(default = "default_weight_rate", rename = "c")]
    pub weight_rate: f64,
    #[serde(default = "default_true")]
    pub dealias: bool,
    #[serde(default)]
    pub seed: u64,
    pub family: InitFamily,
    pub amplitude: f64,
    /// Sobolev exponent for the proxy norm (the regularity knob).
    #[serde(default = "default_sobolev_s")]
    pub sobolev_s: f64,
}

fn default_weight_rate() -> f64 {
    0.05
}
fn default_true() -> bool {
    true
}
fn default_sobolev_s() -> f64 {
    3.5
}

impl SimConfig {
    pub fn effective_horizon(&self) -> f64 {
        if self.horizon > 0.0 {
            self.horizon
        } else {
            (20.0 / self.nu.sqrt()).min(2e3)
        }
    }

    pub fn effective_dt(&self) -> f64 {
        if self.dt > 0.0 {
            self.dt
        } else {
            let adv = 0.45 / self.truncation as f64;
            adv.min(0.1 / self.nu.sqrt())
        }
    }
}

/// Full modal snapshot: vorticity modes k = 0..K (negative modes by
/// conjugation) plus the mean streamwise velocity that carries the
/// zero mode.
#[derive(Debug, Clone)]
pub struct ModalState {
    pub truncation: i64,
    /// omega[k] for k = 0..=K; omega[0] is real-valued.
    pub omega: Vec<ComplexProfile>,
    /// Mean streamwise velocity (u1)_0; real-valued; its derivative is
    /// omega[0].
    pub zero_mode_u1: ComplexProfile,
    pub time: f64,
}

impl ModalState {
    pub fn zero(grid: &ChebGrid, truncation: i64) -> Self {
        ModalState {
            truncation,
            omega: (0..=truncation).map(|_| grid.zero()).collect(),
            zero_mode_u1: grid.zero(),
            time: 0.0,
        }
    }

    /// Sum over nonzero modes of `||w_k||^2` (both signs of k).
    pub fn offmode_energy(&self, grid: &ChebGrid) -> f64 {
        let mut s = 0.0;
        for k in 1..=self.truncation as usize {
            let l2 = grid.norm_l2(&self.omega[k].view());
            s += 2.0 * l2 * l2;
        }
        s
    }
}

/// Deterministic initial state with the Sobolev proxy rescaled to the
/// requested amplitude.
pub fn init_state(grid: &Arc<ChebGrid>, config: &SimConfig) -> Result<ModalState> {
    let k_max = config.truncation;
    if k_max < 1 {
        return Err(Error::invalid("truncation K must be >= 1"));
    }
    let mut state = ModalState::zero(grid, k_max);
    if config.amplitude == 0.0 {
        return Ok(state);
    }
    let mut rng = crate::util::rng_for(config.seed, &[0xC0FFEE]);

    match config.family {
        InitFamily::RandomSobolev => {
            let s = config.sobolev_s;
            for k in 1..=k_max as usize {
                let kdecay = (1.0 + (k * k) as f64).powf(-(s + 1.0) / 2.0);
                let modes = 8.min(grid.n / 4);
                let coef: Vec<(f64, f64)> = (0..modes)
                    .map(|m| {
                        let d = kdecay / (1.0 + (m * m) as f64).powf((s + 1.0) / 2.0);
                        (rng.gen_range(-1.0..1.0) * d, rng.gen_range(-1.0..1.0) * d)
                    })
                    .collect();
                state.omega[k] = grid.sample(|y| {
                    let mut z = Complex64::new(0.0, 0.0);
                    for (m, (a, b)) in coef.iter().enumerate() {
                        let t = (m as f64 * y.acos()).cos();
                        z += Complex64::new(a * t, b * t);
                    }
                    z * (1.0 - y * y)
                });
            }
            // Mean-shear seed: Neumann-compatible cosine modes.
            let a1: f64 = rng.gen_range(-1.0..1.0);
            let a2: f64 = rng.gen_range(-1.0..1.0);
            state.zero_mode_u1 = grid.sample_real(|y| {
                0.5 * a1 * (PI * (y + 1.0) / 2.0).cos() + 0.25 * a2 * (PI * (y + 1.0)).cos()
            });
            state.omega[0] = grid.deriv(&state.zero_mode_u1.view());
        }
        InitFamily::CriticalLayer => {
            for k in 1..=(k_max.min(4)) as usize {
                let width = (config.nu / k as f64).powf(0.25).max(0.02);
                let phase: f64 = rng.gen_range(0.0..2.0 * PI);
                let rot = Complex64::new(phase.cos(), phase.sin());
                state.omega[k] = grid.sample(|y| {
                    let g = (-(y / width).powi(2)).exp();
                    rot * g * (1.0 - y * y)
                });
            }
        }
        InitFamily::OptimalLinear => {
            let op = assemble(grid.clone(), config.nu, 1, Toggles::default())?;
            let scale = 1.0 / config.nu.sqrt();
            let tg =
                crate::evolution::transient_growth(&op, &[0.25 * scale, 0.5 * scale, scale])?;
            state.omega[1] = tg.optimal_initial;
        }
    }

    let proxy = sobolev_proxy(grid, &state, config.sobolev_s)?;
    if proxy == 0.0 {
        return Err(Error::invalid("initial family produced a zero state"));
    }
    let factor = config.amplitude / proxy;
    for w in state.omega.iter_mut() {
        w.mapv_inplace(|z| z * factor);
    }
    state.zero_mode_u1.mapv_inplace(|z| z * factor);
    Ok(state)
}

/// Velocity modes of a state: `(u1_k, u2_k)` for k = 0..=K.
pub fn modal_velocities(
    grid: &ChebGrid,
    state: &ModalState,
    helm: &[HelmholtzSolver],
) -> Vec<(ComplexProfile, ComplexProfile)> {
    let k_max = state.truncation as usize;
    let mut out = Vec::with_capacity(k_max + 1);
    out.push((state.zero_mode_u1.clone(), grid.zero()));
    for k in 1..=k_max {
        let phi = helm[k - 1].solve(&state.omega[k].view());
        let u1 = grid.deriv(&phi.view());
        let u2 = phi.mapv(|z| Complex64::new(0.0, -(k as f64)) * z);
        out.push((u1, u2));
    }
    out
}

/// Sobolev proxy norm of the velocity field:
/// `sqrt( sum_k (1+k^2)^s sum_m (1+m^2)^s (|c1_m|^2 + |c2_m|^2) )`
/// with `c` the Chebyshev coefficients of the velocity components.
pub fn sobolev_proxy(grid: &ChebGrid, state: &ModalState, s: f64) -> Result<f64> {
    let k_max = state.truncation as usize;
    let helm: Vec<HelmholtzSolver> = (1..=k_max)
        .map(|k| HelmholtzSolver::new(grid, k as i64))
        .collect::<Result<_>>()?;
    sobolev_proxy_with(grid, state, s, &helm)
}

/// [`sobolev_proxy`] with the per-mode Helmholtz factorizations
/// supplied by the caller (time loops reuse the stepper's).
pub fn sobolev_proxy_with(
    grid: &ChebGrid,
    state: &ModalState,
    s: f64,
    helm: &[HelmholtzSolver],
) -> Result<f64> {
    if s < 0.0 {
        return Err(Error::invalid("sobolev exponent must be nonnegative"));
    }
    let vel = modal_velocities(grid, state, helm);
    let mut total = 0.0f64;
    for (k, (u1, u2)) in vel.iter().enumerate() {
        let kw = (1.0 + (k * k) as f64).powf(s);
        let mult = if k == 0 { 1.0 } else { 2.0 };
        let c1 = cheb_coefficients(grid, &u1.view());
        let c2 = cheb_coefficients(grid, &u2.view());
        let mut ysum = 0.0;
        for (m, (a, b)) in c1.iter().zip(c2.iter()).enumerate() {
            let mw = (1.0 + (m * m) as f64).powf(s);
            ysum += mw * (a.norm_sqr() + b.norm_sqr());
        }
        total += mult * kw * ysum;
    }
    Ok(total.sqrt())
}

/// Modal products `(f1)_k = -(u1 w)_k`, `(f2)_k = -(u2 w)_k` for
/// k = 0..=K (the quadratic slots; the stepper applies them as
/// `+ik f1 + d_y f2`, which is `-div(u w)`).
pub struct QuadraticSlots {
    pub f1: Vec<ComplexProfile>,
    pub f2: Vec<ComplexProfile>,
}

/// Pseudo-spectral product path on an x-grid of >= 3K+1 points (alias
/// free for quadratic products), or the O(K^2) direct convolution when
/// `dealias` is false (the oracle path).
pub fn nonlinear_term(
    grid: &ChebGrid,
    state: &ModalState,
    helm: &[HelmholtzSolver],
    dealias: bool,
) -> QuadraticSlots {
    let vel = modal_velocities(grid, state, helm);
    nonlinear_term_with_velocities(grid, state, &vel, dealias)
}

pub fn nonlinear_term_with_velocities(
    grid: &ChebGrid,
    state: &ModalState,
    vel: &[(ComplexProfile, ComplexProfile)],
    dealias: bool,
) -> QuadraticSlots {
    if dealias {
        let k_max = state.truncation as usize;
        let m_phys = 3 * k_max + 2;
        let mut planner = FftPlanner::<f64>::new();
        let fwd = planner.plan_fft_forward(m_phys);
        let inv = planner.plan_fft_inverse(m_phys);
        dealiased_products(grid, state, vel, fwd.as_ref(), inv.as_ref(), m_phys)
    } else {
        direct_convolution(grid, state, vel)
    }
}

fn dealiased_products(
    grid: &ChebGrid,
    state: &ModalState,
    vel: &[(ComplexProfile, ComplexProfile)],
    fwd: &dyn Fft<f64>,
    inv: &dyn Fft<f64>,
    m_phys: usize,
) -> QuadraticSlots {
    let k_max = state.truncation as usize;
    let n = grid.n;
    let mut f1: Vec<ComplexProfile> = (0..=k_max).map(|_| grid.zero()).collect();
    let mut f2: Vec<ComplexProfile> = (0..=k_max).map(|_| grid.zero()).collect();

    let mut u1x = vec![Complex64::new(0.0, 0.0); m_phys];
    let mut u2x = vec![Complex64::new(0.0, 0.0); m_phys];
    let mut wx = vec![Complex64::new(0.0, 0.0); m_phys];
    let mut p1 = vec![Complex64::new(0.0, 0.0); m_phys];
    let mut p2 = vec![Complex64::new(0.0, 0.0); m_phys];

    for j in 0..n {
        // Load spectra at this y node (conjugate symmetry for k < 0).
        for buf in [&mut u1x, &mut u2x, &mut wx] {
            buf.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        }
        for k in 0..=k_max {
            let (u1k, u2k) = (&vel[k].0[j], &vel[k].1[j]);
            let wk = &state.omega[k][j];
            u1x[k] = *u1k;
            u2x[k] = *u2k;
            wx[k] = *wk;
            if k > 0 {
                u1x[m_phys - k] = u1k.conj();
                u2x[m_phys - k] = u2k.conj();
                wx[m_phys - k] = wk.conj();
            }
        }
        inv.process(&mut u1x);
        inv.process(&mut u2x);
        inv.process(&mut wx);
        for i in 0..m_phys {
            p1[i] = u1x[i] * wx[i];
            p2[i] = u2x[i] * wx[i];
        }
        fwd.process(&mut p1);
        fwd.process(&mut p2);
        let scale = 1.0 / m_phys as f64;
        for k in 0..=k_max {
            f1[k][j] = -p1[k] * scale;
            f2[k][j] = -p2[k] * scale;
        }
    }
    // The zero-mode products of a real field are real.
    for j in 0..n {
        f1[0][j] = Complex64::new(f1[0][j].re, 0.0);
        f2[0][j] = Complex64::new(f2[0][j].re, 0.0);
    }
    QuadraticSlots { f1, f2 }
}

fn direct_convolution(
    grid: &ChebGrid,
    state: &ModalState,
    vel: &[(ComplexProfile, ComplexProfile)],
) -> QuadraticSlots {
    let k_max = state.truncation as i64;
    let n = grid.n;
    let mut f1: Vec<ComplexProfile> = (0..=k_max).map(|_| grid.zero()).collect();
    let mut f2: Vec<ComplexProfile> = (0..=k_max).map(|_| grid.zero()).collect();

    let get_u = |l: i64, j: usize| -> (Complex64, Complex64) {
        let la = l.unsigned_abs() as usize;
        let (u1, u2) = (&vel[la].0[j], &vel[la].1[j]);
        if l >= 0 {
            (*u1, *u2)
        } else {
            (u1.conj(), u2.conj())
        }
    };
    let get_w = |l: i64, j: usize| -> Complex64 {
        let la = l.unsigned_abs() as usize;
        let w = &state.omega[la][j];
        if l >= 0 {
            *w
        } else {
            w.conj()
        }
    };

    for k in 0..=k_max {
        for l in -k_max..=k_max {
            let rem = k - l;
            if rem.abs() > k_max {
                continue;
            }
            for j in 0..n {
                let (u1, u2) = get_u(l, j);
                let w = get_w(rem, j);
                f1[k as usize][j] -= u1 * w;
                f2[k as usize][j] -= u2 * w;
            }
        }
    }
    for j in 0..n {
        f1[0][j] = Complex64::new(f1[0][j].re, 0.0);
        f2[0][j] = Complex64::new(f2[0][j].re, 0.0);
    }
    QuadraticSlots { f1, f2 }
}

/// Advance the mean shear one CN step:
/// `d_t u1 - nu d_yy u1 = -(u2 w)_0` with Neumann walls
/// (`d_y u1(+-1) = 0`, i.e. the mean vorticity vanishes there).
/// `forcing` is the x-averaged `u2 w` product (`-(f2)_0` in slot
/// convention), treated explicitly by the caller (AB2).
pub struct ZeroModeStepper {
    lu: LuFactor,
    rhs_mat: Array2<f64>,
    n: usize,
}

impl ZeroModeStepper {
    pub fn new(grid: &ChebGrid, nu: f64, dt: f64) -> Result<Self> {
        let n = grid.n;
        let mut imp = grid.d2.mapv(|x| -x * (nu * dt / 2.0));
        let mut rhs_mat = grid.d2.mapv(|x| x * (nu * dt / 2.0));
        for i in 0..n {
            imp[[i, i]] += 1.0;
            rhs_mat[[i, i]] += 1.0;
        }
        // Neumann rows at the walls: d_y u1 = 0 (mean vorticity zero).
        for j in 0..n {
            imp[[0, j]] = grid.d1[[0, j]];
            imp[[n - 1, j]] = grid.d1[[n - 1, j]];
            rhs_mat[[0, j]] = 0.0;
            rhs_mat[[n - 1, j]] = 0.0;
        }
        let lu = LuFactor::new(&imp.mapv(|x| Complex64::new(x, 0.0)).view())?;
        Ok(ZeroModeStepper { lu, rhs_mat, n })
    }

    /// `explicit_forcing` is the AB2-combined `(u2 w)_0` term; the RHS
    /// contribution is `-dt * explicit_forcing` at interior rows.
    pub fn step(&self, u1: &ComplexProfile, explicit_forcing: &ComplexProfile, dt: f64) -> ComplexProfile {
        let n = self.n;
        let mut b: ComplexProfile = crate::spectral::real_matvec(&self.rhs_mat, &u1.view());
        for i in 1..n - 1 {
            b[i] -= dt * explicit_forcing[i];
        }
        b[0] = Complex64::new(0.0, 0.0);
        b[n - 1] = Complex64::new(0.0, 0.0);
        let sol = self.lu.solve(&b.view());
        sol.mapv(|z| Complex64::new(z.re, 0.0))
    }
}

/// Spec-level convenience: one zero-mode step from a state, returning
/// the updated mean velocity and mean vorticity.
pub fn zero_mode_step(
    grid: &ChebGrid,
    state: &ModalState,
    dt: f64,
    nu: f64,
    u2w_mean: &ComplexProfile,
) -> Result<(ComplexProfile, ComplexProfile)> {
    let stepper = ZeroModeStepper::new(grid, nu, dt)?;
    let u1 = stepper.step(&state.zero_mode_u1, u2w_mean, dt);
    let omega_bar = grid.deriv(&u1.view()).mapv(|z| Complex64::new(z.re, 0.0));
    Ok((u1, omega_bar))
}

/// Per-mode weighted energy functional components (norms, not squares).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub k: i64,
    /// sup_t ||e^{c sqrt(nu) t} w_k||_{L2}
    pub amp: f64,
    /// nu^{1/2} |k| * L2-in-time norm of the weighted mode
    pub heat: f64,
    /// (nu |k|)^{1/4} * the same L2-in-time norm
    pub enh: f64,
    /// |k|^{1/2} * L2-in-time norm of the weighted velocity
    pub invd: f64,
    pub total: f64,
}

/// One stored time sample of the scalar series.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeriesSample {
    pub time: f64,
    /// Sum over nonzero modes of ||w_k||^2 (both signs).
    pub offmode_energy: f64,
    pub sobolev_proxy: f64,
    /// E_k parts for k <= 8 at this time are not stored; the series
    /// keeps the mode L2 norms instead.
    pub mode_l2: Vec<f64>,
}

/// Complete result of one nonlinear run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: SimConfig,
    pub series: Vec<SeriesSample>,
    pub energy: Vec<EnergyBreakdown>,
    /// sup over time of the off-mode energy and its initial value.
    pub initial_offmode_energy: f64,
    pub sup_offmode_energy: f64,
    pub final_offmode_energy: f64,
    /// Weighted L2-in-time squares of the quadratic slots per mode.
    pub f1_l2l2: Vec<f64>,
    pub f2_l2l2: Vec<f64>,
    /// `||(d_yy - k^2) w_k(0)||` per mode.
    pub delta_omega0: Vec<f64>,
    /// `||mean vorticity at t=0||_{L2}`.
    pub omega0_bar_l2: f64,
    pub diverged: bool,
    pub steps_completed: usize,
}

/// Outcome classification thresholds are toolkit conventions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Stable,
    Transitioned,
    Inconclusive,
}

pub fn classify_outcome(record: &RunRecord) -> Outcome {
    if record.diverged {
        return Outcome::Transitioned;
    }
    let init = record.initial_offmode_energy;
    let tiny = 1e-300;
    if record.sup_offmode_energy > 100.0 * init + tiny {
        return Outcome::Transitioned;
    }
    if record.final_offmode_energy <= 1e-2 * init + tiny
        && record.sup_offmode_energy <= 10.0 * init + tiny
    {
        return Outcome::Stable;
    }
    Outcome::Inconclusive
}

/// The nonlinear time stepper with all per-mode factorizations cached.
pub struct NonlinearStepper {
    pub grid: Arc<ChebGrid>,
    pub config: SimConfig,
    ops: Vec<OperatorLk>,
    cn_lu: Vec<LuFactor>,
    cn_rhs: Vec<Array2<Complex64>>,
    helm: Vec<HelmholtzSolver>,
    zero: ZeroModeStepper,
    fft_fwd: Arc<dyn Fft<f64>>,
    fft_inv: Arc<dyn Fft<f64>>,
    m_phys: usize,
    dt: f64,
    prev_explicit: Option<(Vec<Array1<Complex64>>, ComplexProfile)>,
}

impl NonlinearStepper {
    pub fn new(grid: Arc<ChebGrid>, config: &SimConfig) -> Result<Self> {
        let k_max = config.truncation;
        if k_max < 1 {
            return Err(Error::invalid("truncation K must be >= 1"));
        }
        let dt = config.effective_dt();
        if !(dt > 0.0) {
            return Err(Error::invalid("dt must be positive"));
        }
        // Background-advection accuracy bound; the state-dependent part
        // is re-checked each step.
        if dt > 0.5 / k_max as f64 + 1e-12 {
            return Err(Error::invalid(format!(
                "dt = {dt:.3e} violates the advection bound {:.3e} at K = {k_max}",
                0.5 / k_max as f64
            )));
        }
        if dt > 0.1 / config.nu.sqrt() {
            return Err(Error::invalid("dt exceeds the 0.1 nu^{-1/2} cap"));
        }
        let ni = grid.n - 2;
        let mut ops = Vec::with_capacity(k_max as usize);
        let mut cn_lu = Vec::with_capacity(k_max as usize);
        let mut cn_rhs = Vec::with_capacity(k_max as usize);
        let mut helm = Vec::with_capacity(k_max as usize);
        for k in 1..=k_max {
            let op = assemble(grid.clone(), config.nu, k, Toggles::default())?;
            let a = op.matrix();
            let mut imp = a.mapv(|z| z * (dt / 2.0));
            let mut rhs = a.mapv(|z| z * (-dt / 2.0));
            for i in 0..ni {
                imp[[i, i]] += 1.0;
                rhs[[i, i]] += 1.0;
            }
            cn_lu.push(LuFactor::new(&imp.view())?);
            cn_rhs.push(rhs);
            helm.push(HelmholtzSolver::new(&grid, k)?);
            ops.push(op);
        }
        let zero = ZeroModeStepper::new(&grid, config.nu, dt)?;
        let m_phys = 3 * k_max as usize + 2;
        let mut planner = FftPlanner::<f64>::new();
        let fft_fwd = planner.plan_fft_forward(m_phys);
        let fft_inv = planner.plan_fft_inverse(m_phys);
        Ok(NonlinearStepper {
            grid,
            config: config.clone(),
            ops,
            cn_lu,
            cn_rhs,
            helm,
            zero,
            fft_fwd,
            fft_inv,
            m_phys,
            dt,
            prev_explicit: None,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn helmholtz_solvers(&self) -> &[HelmholtzSolver] {
        &self.helm
    }

    /// State-dependent advection bound (background + mean shear for x,
    /// perturbation normal velocity for y).
    fn check_cfl(&self, vel: &[(ComplexProfile, ComplexProfile)]) -> Result<()> {
        let grid = &self.grid;
        let n = grid.n;
        let k_max = self.config.truncation as f64;
        let mut max_u1 = 0.0f64;
        let mut max_u2 = 0.0f64;
        for j in 0..n {
            let y = grid.nodes[j];
            let mut u1 = (1.0 - y * y) + vel[0].0[j].re;
            let mut u2 = 0.0;
            for k in 1..vel.len() {
                u1 += 2.0 * vel[k].0[j].norm();
                u2 += 2.0 * vel[k].1[j].norm();
            }
            max_u1 = max_u1.max(u1.abs());
            max_u2 = max_u2.max(u2);
        }
        let x_limit = 0.5 / (k_max * max_u1);
        let y_limit = 2.0 / (max_u2 * (n * n) as f64 + 1e-300);
        if self.dt > x_limit || self.dt > y_limit {
            return Err(Error::invalid(format!(
                "dt = {:.3e} violates the advection bound (x: {:.3e}, y: {:.3e})",
                self.dt, x_limit, y_limit
            )));
        }
        Ok(())
    }

    /// One IMEX step; returns the new state, the slot values used, and
    /// the velocities of the *input* state (for norm accumulation).
    #[allow(clippy::type_complexity)]
    pub fn step(
        &mut self,
        state: &ModalState,
    ) -> Result<(ModalState, QuadraticSlots, Vec<(ComplexProfile, ComplexProfile)>)> {
        let grid = self.grid.clone();
        let n = grid.n;
        let k_max = state.truncation as usize;
        let vel = modal_velocities(&grid, state, &self.helm);
        self.check_cfl(&vel)?;
        let slots = dealiased_or_direct(
            &grid,
            state,
            &vel,
            self.config.dealias,
            self.fft_fwd.as_ref(),
            self.fft_inv.as_ref(),
            self.m_phys,
        );

        // Explicit quadratic contribution per nonzero mode:
        // +ik f1 + d_y f2 (interior), which equals -div(u w).
        let mut explicit: Vec<Array1<Complex64>> = Vec::with_capacity(k_max);
        for k in 1..=k_max {
            let kf = k as f64;
            let df2 = grid.deriv(&slots.f2[k].view());
            let mut e = Array1::zeros(n - 2);
            for i in 0..n - 2 {
                e[i] = Complex64::new(0.0, kf) * slots.f1[k][i + 1] + df2[i + 1];
            }
            explicit.push(e);
        }
        // Zero mode: forcing (u2 w)_0 = -(f2)_0.
        let zero_forcing = slots.f2[0].mapv(|z| -z);

        let (ab2, ab2_zero): (Vec<Array1<Complex64>>, ComplexProfile) =
            match self.prev_explicit.as_ref() {
                Some((prev, prev_zero)) => {
                    let combined = explicit
                        .iter()
                        .zip(prev.iter())
                        .map(|(e, p)| {
                            let mut v = e.mapv(|z| z * 1.5);
                            v.scaled_add(Complex64::new(-0.5, 0.0), p);
                            v
                        })
                        .collect();
                    let mut z = zero_forcing.mapv(|z| z * 1.5);
                    z.scaled_add(Complex64::new(-0.5, 0.0), prev_zero);
                    (combined, z)
                }
                None => (explicit.clone(), zero_forcing.clone()),
            };

        let mut next = ModalState::zero(&grid, state.truncation);
        next.time = state.time + self.dt;
        for k in 1..=k_max {
            let w_int = self.ops[k - 1].restrict(&state.omega[k].view());
            let mut b = crate::linalg::matvec(&self.cn_rhs[k - 1], &w_int.view());
            for i in 0..n - 2 {
                b[i] += self.dt * ab2[k - 1][i];
            }
            let w_next = self.cn_lu[k - 1].solve(&b.view());
            if !w_next.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::Diverged {
                    step: 0,
                    time: next.time,
                });
            }
            next.omega[k] = self.ops[k - 1].extend(&w_next.view());
        }
        next.zero_mode_u1 = self.zero.step(&state.zero_mode_u1, &ab2_zero, self.dt);
        next.omega[0] = grid
            .deriv(&next.zero_mode_u1.view())
            .mapv(|z| Complex64::new(z.re, 0.0));
        if !next.zero_mode_u1.iter().all(|z| z.re.is_finite()) {
            return Err(Error::Diverged {
                step: 0,
                time: next.time,
            });
        }

        self.prev_explicit = Some((explicit, zero_forcing));
        Ok((next, slots, vel))
    }
}

#[allow(clippy::too_many_arguments)]
fn dealiased_or_direct(
    grid: &ChebGrid,
    state: &ModalState,
    vel: &[(ComplexProfile, ComplexProfile)],
    dealias: bool,
    fwd: &dyn Fft<f64>,
    inv: &dyn Fft<f64>,
    m_phys: usize,
) -> QuadraticSlots {
    if dealias {
        dealiased_products(grid, state, vel, fwd, inv, m_phys)
    } else {
        direct_convolution(grid, state, vel)
    }
}

/// Drive a full nonlinear run, accumulating the weighted energy
/// functional and slot norms online.
pub fn run_simulation(config: &SimConfig) -> Result<RunRecord> {
    let grid = Arc::new(build_grid(config.n)?);
    let state0 = init_state(&grid, config)?;
    run_from_state(grid, config, state0)
}

pub fn run_from_state(
    grid: Arc<ChebGrid>,
    config: &SimConfig,
    state0: ModalState,
) -> Result<RunRecord> {
    let mut stepper = NonlinearStepper::new(grid.clone(), config)?;
    let dt = stepper.dt();
    let horizon = config.effective_horizon();
    let steps = (horizon / dt).ceil().max(1.0) as usize;
    let k_max = config.truncation as usize;
    let rate = config.weight_rate * config.nu.sqrt();
    let weight = |t: f64| ((rate * t).min(700.0)).exp();

    let delta_omega0: Vec<f64> = (0..=k_max)
        .map(|k| {
            let d = grid.laplacian_k(k as i64, &state0.omega[k].view());
            grid.norm_l2(&d.view())
        })
        .collect();
    let omega0_bar_l2 = grid.norm_l2(&state0.omega[0].view());

    // Online accumulators.
    let mut amp = vec![0.0f64; k_max + 1];
    let mut w_sq = vec![0.0f64; k_max + 1]; // int |e w_k|^2
    let mut u_sq = vec![0.0f64; k_max + 1];
    let mut f1_sq = vec![0.0f64; k_max + 1];
    let mut f2_sq = vec![0.0f64; k_max + 1];
    let mut e0_amp = 0.0f64;

    let stride = (steps / 1000).max(1);
    let mut series: Vec<SeriesSample> = Vec::new();
    let mut sup_off = 0.0f64;
    let mut diverged = false;
    let mut steps_completed = 0usize;

    let mut state = state0;
    let init_off = state.offmode_energy(&grid);
    let mut final_off = init_off;

    // Accumulates state-level quantities; slot norms are added by the
    // caller below because slots lag one step behind.
    let proxy_every = (steps / 200).max(1);
    let record_sample = |state: &ModalState, proxy: f64, series: &mut Vec<SeriesSample>| {
        let off = state.offmode_energy(&grid);
        series.push(SeriesSample {
            time: state.time,
            offmode_energy: off,
            sobolev_proxy: proxy,
            mode_l2: (0..=k_max.min(8))
                .map(|k| grid.norm_l2(&state.omega[k].view()))
                .collect(),
        });
    };

    // One time level's contribution to the weighted accumulators,
    // using velocities already computed for that state.
    #[allow(clippy::too_many_arguments)]
    fn accumulate_level(
        grid: &ChebGrid,
        state: &ModalState,
        vel: &[(ComplexProfile, ComplexProfile)],
        wt: f64,
        trap: f64,
        amp: &mut [f64],
        w_sq: &mut [f64],
        u_sq: &mut [f64],
        e0_amp: &mut f64,
    ) {
        for k in 0..vel.len() {
            let l2 = grid.norm_l2(&state.omega[k].view());
            if k == 0 {
                *e0_amp = (*e0_amp).max(l2);
            } else {
                amp[k] = amp[k].max(wt * l2);
                w_sq[k] += trap * (wt * l2).powi(2);
                let ul2 = velocity_l2(grid, &vel[k].0.view(), &vel[k].1.view());
                u_sq[k] += trap * (wt * ul2).powi(2);
            }
        }
    }

    sup_off = sup_off.max(state.offmode_energy(&grid));
    {
        let p = sobolev_proxy_with(&grid, &state, config.sobolev_s, stepper.helmholtz_solvers())
            .unwrap_or(f64::NAN);
        record_sample(&state, p, &mut series);
    }

    for step in 1..=steps {
        match stepper.step(&state) {
            Ok((next, slots, vel_input)) => {
                // The step hands back the input state's velocities, so
                // its time level (and the slots evaluated there) are
                // accumulated now; the final level is handled after
                // the loop.
                let wt_in = weight(state.time);
                let trap = if step == 1 { 0.5 * dt } else { dt };
                accumulate_level(
                    &grid, &state, &vel_input, wt_in, trap, &mut amp, &mut w_sq, &mut u_sq,
                    &mut e0_amp,
                );
                for k in 0..=k_max {
                    let f1n = grid.norm_l2(&slots.f1[k].view());
                    let f2n = grid.norm_l2(&slots.f2[k].view());
                    f1_sq[k] += trap * (wt_in * f1n).powi(2);
                    f2_sq[k] += trap * (wt_in * f2n).powi(2);
                }

                let off = next.offmode_energy(&grid);
                sup_off = sup_off.max(off);
                final_off = off;
                // Cheap per-level tracking of the weighted sup norm.
                let wt_next = weight(next.time);
                for k in 1..=k_max {
                    amp[k] = amp[k].max(wt_next * grid.norm_l2(&next.omega[k].view()));
                }
                e0_amp = e0_amp.max(grid.norm_l2(&next.omega[0].view()));
                if step % stride == 0 || step == steps {
                    let p = if step % proxy_every == 0 || step == steps {
                        sobolev_proxy_with(
                            &grid,
                            &next,
                            config.sobolev_s,
                            stepper.helmholtz_solvers(),
                        )
                        .unwrap_or(f64::NAN)
                    } else {
                        f64::NAN
                    };
                    record_sample(&next, p, &mut series);
                }
                state = next;
                steps_completed = step;
            }
            Err(Error::Diverged { .. }) | Err(Error::InvalidArgument(_)) if step > 1 => {
                // Mid-run blowup (including CFL breakdown from field
                // growth) is an outcome, not an error.
                diverged = true;
                break;
            }
            Err(e) => return Err(e),
        }
    }

    // Final time level (or the last good one after a blowup).
    {
        let helm = stepper.helmholtz_solvers();
        let vel = modal_velocities(&grid, &state, helm);
        let wt = weight(state.time);
        accumulate_level(
            &grid, &state, &vel, wt, 0.5 * dt, &mut amp, &mut w_sq, &mut u_sq, &mut e0_amp,
        );
    }

    let nu = config.nu;
    let energy: Vec<EnergyBreakdown> = (0..=k_max)
        .map(|k| {
            if k == 0 {
                EnergyBreakdown {
                    k: 0,
                    amp: e0_amp,
                    heat: 0.0,
                    enh: 0.0,
                    invd: 0.0,
                    total: e0_amp,
                }
            } else {
                let kf = k as f64;
                let l2t = w_sq[k].max(0.0).sqrt();
                let ul2t = u_sq[k].max(0.0).sqrt();
                let heat = nu.sqrt() * kf * l2t;
                let enh = (nu * kf).powf(0.25) * l2t;
                let invd = kf.sqrt() * ul2t;
                EnergyBreakdown {
                    k: k as i64,
                    amp: amp[k],
                    heat,
                    enh,
                    invd,
                    total: amp[k] + heat + enh + invd,
                }
            }
        })
        .collect();

    Ok(RunRecord {
        config: config.clone(),
        series,
        energy,
        initial_offmode_energy: init_off,
        sup_offmode_energy: sup_off,
        final_offmode_energy: final_off,
        f1_l2l2: f1_sq,
        f2_l2l2: f2_sq,
        delta_omega0,
        omega0_bar_l2,
        diverged,
        steps_completed,
    })
}

/// Energy functional from a finished record (already accumulated
/// online; this recombines parts per mode and the total).
pub fn energy_functional(record: &RunRecord) -> (Vec<EnergyBreakdown>, f64) {
    let total = record.energy.iter().map(|e| e.total).sum();
    (record.energy.clone(), total)
}

/// Bootstrap-style inequality report for a finished run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BootstrapReport {
    /// Per-mode ratio of E_k against the intermediate (slot-norm) RHS.
    pub intermediate_ratios: Vec<(i64, f64)>,
    /// Per-mode ratio of E_k against the quadratic (E*E) RHS.
    pub quadratic_ratios: Vec<(i64, f64)>,
    /// Zero-mode ratio.
    pub zero_mode_ratio: f64,
    pub max_intermediate_ratio: f64,
    pub max_quadratic_ratio: f64,
    /// Exhaustive exponent inequality check over the sweep grid.
    pub min_inequality_holds: bool,
    pub min_inequality_worst_margin: f64,
}

/// `|k| min{(nu|k|)^{-1/4}, (nu k^2)^{-1/2}} <= nu^{-3/8} |k|^{3/8}`
/// checked exhaustively; returns (holds, worst rhs-lhs margin).
pub fn bootstrap_min_inequality() -> (bool, f64) {
    let mut holds = true;
    let mut worst = f64::INFINITY;
    for e in 0..=30 {
        let nu = 1e-4 * 10f64.powf(e as f64 / 10.0);
        if nu > 1e-1 * (1.0 + 1e-12) {
            break;
        }
        for k in 1..=64i64 {
            let kf = k as f64;
            let lhs = kf * (nu * kf).powf(-0.25).min((nu * kf * kf).powf(-0.5));
            let rhs = nu.powf(-0.375) * kf.powf(0.375);
            if lhs > rhs {
                holds = false;
            }
            worst = worst.min(rhs - lhs);
        }
    }
    (holds, worst)
}

pub fn verify_bootstrap(record: &RunRecord) -> BootstrapReport {
    let k_max = record.config.truncation as usize;
    let nu = record.config.nu;
    let e: Vec<f64> = record.energy.iter().map(|b| b.total).collect();

    let mut intermediate = Vec::new();
    let mut quadratic = Vec::new();
    for k in 1..=k_max {
        let kf = k as f64;
        let rhs_int = record.delta_omega0[k]
            + nu.powf(-0.375) * kf.powf(0.375) * record.f1_l2l2[k].max(0.0).sqrt()
            + nu.powf(-0.5) * record.f2_l2l2[k].max(0.0).sqrt();
        let ratio_int = if rhs_int > 0.0 { e[k] / rhs_int } else { 0.0 };
        intermediate.push((k as i64, ratio_int));

        // sum over l of E_l E_{k-l} with E_{-l} = E_l, |k-l| <= K
        let mut conv = 0.0;
        for l in -(k_max as i64)..=(k_max as i64) {
            let rem = k as i64 - l;
            if rem.unsigned_abs() as usize > k_max {
                continue;
            }
            conv += e[l.unsigned_abs() as usize] * e[rem.unsigned_abs() as usize];
        }
        let rhs_quad = record.delta_omega0[k] + nu.powf(-2.0 / 3.0) * conv;
        let ratio_quad = if rhs_quad > 0.0 { e[k] / rhs_quad } else { 0.0 };
        quadratic.push((k as i64, ratio_quad));
    }

    let mut conv0 = 0.0;
    for l in 1..=k_max {
        conv0 += 2.0 * e[l] * e[l];
    }
    let rhs0 = record.omega0_bar_l2 + nu.powf(-0.5) * conv0;
    let zero_mode_ratio = if rhs0 > 0.0 { e[0] / rhs0 } else { 0.0 };

    let max_int = intermediate.iter().map(|p| p.1).fold(0.0, f64::max);
    let max_quad = quadratic.iter().map(|p| p.1).fold(0.0, f64::max);
    let (holds, margin) = bootstrap_min_inequality();

    BootstrapReport {
        intermediate_ratios: intermediate,
        quadratic_ratios: quadratic,
        zero_mode_ratio,
        max_intermediate_ratio: max_int,
        max_quadratic_ratio: max_quad,
        min_inequality_holds: holds,
        min_inequality_worst_margin: margin,
    }
}
