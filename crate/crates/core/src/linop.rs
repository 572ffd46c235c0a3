//! The linearized operator around the parabolic profile, restricted to
//! vorticity modes vanishing at the walls:
//!
//! `L_k = -nu (d_yy - k^2) + ik (1 - y^2) + 2ik (d_yy - k^2)^{-1}`
//!
//! acting on interior nodal values, with the inverse realized by the
//! Dirichlet Helmholtz solve. Provides resolvent solves, the smallest
//! singular value of the shifted operator in the quadrature-weighted
//! metric, the pseudospectral gap over real shifts, the spectrum and
//! exact discrete operator norms between weighted norms.

use crate::error::{Error, Result};
use crate::linalg::{
    self, cholesky, eigenvalues, sigma_max_power, sigma_min_from_lu, tri_left_mul_transpose,
    tri_right_solve_transpose, LuFactor,
};
use crate::spectral::{ChebGrid, ComplexProfile, HelmholtzSolver};
use crate::util::par_map;
use ndarray::{Array1, Array2, ArrayView1};
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::sync::Arc;

/// Term toggles for test isolation; all on in production use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Toggles {
    pub diffusion: bool,
    pub transport: bool,
    pub nonlocal: bool,
}

impl Default for Toggles {
    fn default() -> Self {
        Toggles {
            diffusion: true,
            transport: true,
            nonlocal: true,
        }
    }
}

impl Toggles {
    pub fn diffusion_only() -> Self {
        Toggles {
            diffusion: true,
            transport: false,
            nonlocal: false,
        }
    }
}

/// Assembled dense operator for one `(nu, k)`.
pub struct OperatorLk {
    pub nu: f64,
    pub k: i64,
    pub grid: Arc<ChebGrid>,
    pub toggles: Toggles,
    /// Interior matrix, size (n-2)^2.
    matrix: Array2<Complex64>,
    /// Full-grid streamfunction from interior vorticity (real), n x (n-2).
    s_full: Array2<f64>,
    /// Square roots of the interior quadrature weights.
    w_sqrt: Array1<f64>,
}

pub fn assemble(grid: Arc<ChebGrid>, nu: f64, k: i64, toggles: Toggles) -> Result<OperatorLk> {
    if k == 0 {
        return Err(Error::invalid("operator needs k != 0"));
    }
    if !(nu > 0.0) {
        return Err(Error::invalid(format!("viscosity must be positive, got {nu}")));
    }
    let n = grid.n;
    let ni = n - 2;
    let kf = k as f64;
    let k2 = kf * kf;

    // Full-grid streamfunction operator: phi = S w for interior w
    // extended by zero, phi(+-1) = 0.
    let solver = HelmholtzSolver::new(&grid, k)?;
    let mut s_full = Array2::<f64>::zeros((n, ni));
    let mut rhs: ComplexProfile = Array1::zeros(n);
    for j in 0..ni {
        rhs.fill(Complex64::new(0.0, 0.0));
        rhs[j + 1] = Complex64::new(1.0, 0.0);
        let phi = solver.solve(&rhs.view());
        for i in 0..n {
            s_full[[i, j]] = phi[i].re;
        }
    }

    let mut matrix = Array2::<Complex64>::zeros((ni, ni));
    if toggles.diffusion {
        for i in 0..ni {
            for j in 0..ni {
                matrix[[i, j]] -= nu * grid.d2[[i + 1, j + 1]];
            }
            matrix[[i, i]] += nu * k2;
        }
    }
    if toggles.transport {
        for i in 0..ni {
            let y = grid.nodes[i + 1];
            matrix[[i, i]] += Complex64::new(0.0, kf * (1.0 - y * y));
        }
    }
    if toggles.nonlocal {
        for i in 0..ni {
            for j in 0..ni {
                matrix[[i, j]] += Complex64::new(0.0, 2.0 * kf) * s_full[[i + 1, j]];
            }
        }
    }

    let w_sqrt = Array1::from_shape_fn(ni, |i| grid.quad_weights[i + 1].sqrt());

    Ok(OperatorLk {
        nu,
        k,
        grid,
        toggles,
        matrix,
        s_full,
        w_sqrt,
    })
}

/// Solution of one resolvent system.
pub struct ResolventSolution {
    pub w: ComplexProfile,
    pub phi: ComplexProfile,
    pub u1: ComplexProfile,
    pub u2: ComplexProfile,
}

impl OperatorLk {
    pub fn interior_size(&self) -> usize {
        self.grid.n - 2
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.matrix
    }

    /// `L_k - ik lambda` on the interior.
    pub fn shifted(&self, lambda: f64) -> Array2<Complex64> {
        let mut m = self.matrix.clone();
        let shift = Complex64::new(0.0, self.k as f64 * lambda);
        for i in 0..self.interior_size() {
            m[[i, i]] -= shift;
        }
        m
    }

    pub fn restrict(&self, full: &ArrayView1<Complex64>) -> Array1<Complex64> {
        Array1::from_shape_fn(self.interior_size(), |i| full[i + 1])
    }

    pub fn extend(&self, interior: &ArrayView1<Complex64>) -> ComplexProfile {
        let n = self.grid.n;
        let mut out = Array1::zeros(n);
        for i in 0..n - 2 {
            out[i + 1] = interior[i];
        }
        out
    }

    /// Apply the interior operator.
    pub fn apply(&self, w: &ArrayView1<Complex64>) -> Array1<Complex64> {
        self.matrix.dot(w)
    }

    /// Full-grid streamfunction for an interior vorticity vector.
    pub fn streamfunction(&self, w: &ArrayView1<Complex64>) -> ComplexProfile {
        crate::spectral::real_matvec(&self.s_full, w)
    }

    /// Velocity components from an interior vorticity vector.
    pub fn velocity(&self, w: &ArrayView1<Complex64>) -> (ComplexProfile, ComplexProfile) {
        let phi = self.streamfunction(w);
        let u1 = self.grid.deriv(&phi.view());
        let u2 = phi.mapv(|z| Complex64::new(0.0, -(self.k as f64)) * z);
        (u1, u2)
    }

    /// Similarity by the square-rooted quadrature weights, so matrix
    /// singular values measure the quadrature L2 -> L2 operator norm.
    fn weighted(&self, m: &Array2<Complex64>) -> Array2<Complex64> {
        let ni = self.interior_size();
        Array2::from_shape_fn((ni, ni), |(i, j)| {
            m[[i, j]] * (self.w_sqrt[i] / self.w_sqrt[j])
        })
    }
}

/// Solve `(L_k - ik lambda) w = F` with `w(+-1) = 0`; returns the
/// vorticity plus the derived streamfunction and velocity, all on the
/// full grid. `F` is sampled on the full grid.
pub fn solve_resolvent(op: &OperatorLk, lambda: f64, f: &ArrayView1<Complex64>) -> Result<ResolventSolution> {
    let a = op.shifted(lambda);
    let lu = LuFactor::new(&a.view())?;
    let b = op.restrict(f);
    let bnorm = linalg::vec_norm(&b.view());
    let mut w = lu.solve(&b.view());

    if bnorm > 0.0 {
        // Iterative refinement until the discrete residual target; the
        // factorization alone can miss it when the shift is close to
        // the spectrum.
        let mut resid = f64::INFINITY;
        for _ in 0..4 {
            resid = lu.refine(&a.view(), &b.view(), &mut w);
            if resid <= 1e-10 * bnorm {
                break;
            }
        }
        if resid > 1e-10 * bnorm || !resid.is_finite() {
            let sigma_min = sigma_min_from_lu(&lu, 1e-10, 2000);
            if sigma_min < 1e-14 * linalg::norm_one(&a.view()) {
                return Err(Error::IllConditioned { sigma_min });
            }
        }
    }

    let phi = op.streamfunction(&w.view());
    let u1 = op.grid.deriv(&phi.view());
    let u2 = phi.mapv(|z| Complex64::new(0.0, -(op.k as f64)) * z);
    Ok(ResolventSolution {
        w: op.extend(&w.view()),
        phi,
        u1,
        u2,
    })
}

/// Smallest singular value of the weighted shifted operator.
pub fn min_singular_value(op: &OperatorLk, lambda: f64) -> f64 {
    let b = op.weighted(&op.shifted(lambda));
    match LuFactor::new(&b.view()) {
        Ok(lu) => sigma_min_from_lu(&lu, 1e-13, 4000),
        Err(_) => 0.0,
    }
}

/// Result of the pseudospectral-gap search.
#[derive(Debug, Clone, Copy)]
pub struct GapResult {
    pub gap: f64,
    pub lambda: f64,
    /// False when the coarse minimizer sat on the window edge and the
    /// golden-section refinement could not bracket it.
    pub refined: bool,
}

/// Window for the shift search: the symbol `1 - y^2` spans [0, 1];
/// pad by a half on both sides.
pub const LAMBDA_WINDOW: (f64, f64) = (-0.5, 1.5);

/// `inf` over real shifts of the smallest weighted singular value:
/// coarse grid over the window, then golden-section refinement around
/// the coarse minimizer.
pub fn pseudospectral_gap(op: &OperatorLk) -> GapResult {
    let (lo, hi) = LAMBDA_WINDOW;
    // sigma_min(lambda) is |k|-Lipschitz; resolve dips of depth
    // ~ sqrt(nu |k|) with margin.
    let kf = op.k as f64;
    let dip = 0.25 * (op.nu * kf.abs()).sqrt() / kf.abs();
    let h = dip.min(0.01).max(1e-4);
    let m = ((hi - lo) / h).ceil() as usize + 1;
    let lambdas: Vec<f64> = (0..m).map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64).collect();
    let sigmas: Vec<f64> = par_map(lambdas.clone(), |l| min_singular_value(op, l));

    let mut best = 0usize;
    for (i, s) in sigmas.iter().enumerate() {
        if *s < sigmas[best] {
            best = i;
        }
    }
    if best == 0 || best == m - 1 {
        return GapResult {
            gap: sigmas[best],
            lambda: lambdas[best],
            refined: false,
        };
    }

    // Golden-section on the bracketing interval.
    let gr = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut a = lambdas[best - 1];
    let mut b = lambdas[best + 1];
    let mut c = b - gr * (b - a);
    let mut d = a + gr * (b - a);
    let mut fc = min_singular_value(op, c);
    let mut fd = min_singular_value(op, d);
    for _ in 0..40 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = min_singular_value(op, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = min_singular_value(op, d);
        }
        if (b - a).abs() < 1e-7 {
            break;
        }
    }
    let (gap, lambda) = if fc < fd { (fc, c) } else { (fd, d) };
    let (gap, lambda) = if gap < sigmas[best] {
        (gap, lambda)
    } else {
        (sigmas[best], lambdas[best])
    };
    GapResult {
        gap,
        lambda,
        refined: true,
    }
}

/// Dense spectrum of the interior operator, ascending real part.
pub fn spectrum(op: &OperatorLk) -> Result<Vec<Complex64>> {
    eigenvalues(&op.matrix.view())
}

/// Numerator norms for [`weighted_operator_norm`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LhsNorm {
    /// `||w||_{L2}`
    WL2,
    /// `||(d_y, |k|) w||_{L2}`
    WH1k,
    /// `||u||_{L2}`
    UL2,
}

/// Denominator norms for [`weighted_operator_norm`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhsNorm {
    /// `||F||_{L2}`, F unconstrained on the interior
    FL2,
    /// `||F||_{H^-1_k}` via the parametrization `F = (-d_yy + k^2) G`,
    /// `G(+-1) = 0`, with `||G||_{H^1_k}` as the denominator
    FHm1k,
    /// `|k|^{-1} ||(d_y, |k|) F||_{L2}` with `F(+-1) = 0`
    FH1k,
}

/// Cholesky factors of the Gram matrices of an operator, shared across
/// shifts (they do not depend on `lambda`).
pub struct GramSet {
    l_wl2: Array2<f64>,
    l_h1k: Array2<f64>,
    l_u: Array2<f64>,
    /// `(k^2 - d_yy)` on the interior: the dual-norm parametrization.
    m_helm: Array2<Complex64>,
}

impl GramSet {
    pub fn new(op: &OperatorLk) -> Result<Self> {
        let ni = op.interior_size();
        let k2 = (op.k * op.k) as f64;
        let mut m = Array2::<Complex64>::zeros((ni, ni));
        for i in 0..ni {
            for j in 0..ni {
                m[[i, j]] = Complex64::new(-op.grid.d2[[i + 1, j + 1]], 0.0);
            }
            m[[i, i]] += k2;
        }
        Ok(GramSet {
            l_wl2: cholesky(&weight_diag(op).view())?,
            l_h1k: cholesky(&gram_h1k(op).view())?,
            l_u: cholesky(&gram_u(op).view())?,
            m_helm: m,
        })
    }
}

/// Dense inverse of the shifted operator (`w = T F` on the interior).
pub fn resolvent_inverse(op: &OperatorLk, lambda: f64) -> Result<Array2<Complex64>> {
    let a = op.shifted(lambda);
    let lu = LuFactor::new(&a.view())?;
    Ok(lu.inverse())
}

/// Exact discrete operator norm `sup_F lhs(w(F)) / rhs(F)` for the
/// resolvent at the given shift, via Cholesky factors of the Gram
/// matrices on both sides. Returns the norm and a maximizing forcing
/// profile on the full grid.
pub fn weighted_operator_norm(
    op: &OperatorLk,
    lambda: f64,
    lhs: LhsNorm,
    rhs: RhsNorm,
) -> Result<(f64, ComplexProfile)> {
    let grams = GramSet::new(op)?;
    let t = resolvent_inverse(op, lambda)?;
    weighted_operator_norm_cached(op, &grams, &t, lhs, rhs)
}

/// Same computation with the shift-independent pieces precomputed;
/// sweeps reuse `grams` per operator and `t` per shift.
pub fn weighted_operator_norm_cached(
    op: &OperatorLk,
    grams: &GramSet,
    t: &Array2<Complex64>,
    lhs: LhsNorm,
    rhs: RhsNorm,
) -> Result<(f64, ComplexProfile)> {
    let ni = op.interior_size();
    let n = op.grid.n;
    let kf = (op.k as f64).abs();

    let l_lhs = match lhs {
        LhsNorm::WL2 => &grams.l_wl2,
        LhsNorm::WH1k => &grams.l_h1k,
        LhsNorm::UL2 => &grams.l_u,
    };
    // chol(G / k^2) = chol(G) / |k| handles the FH1k scaling.
    let (l_rhs, rhs_scale, param): (&Array2<f64>, f64, bool) = match rhs {
        RhsNorm::FL2 => (&grams.l_wl2, 1.0, false),
        RhsNorm::FHm1k => (&grams.l_h1k, 1.0, true),
        RhsNorm::FH1k => (&grams.l_h1k, 1.0 / kf, false),
    };

    let k_map = if param { t.dot(&grams.m_helm) } else { t.clone() };

    let prod = tri_left_mul_transpose(&l_lhs.view(), &k_map.view());
    let mut composed = tri_right_solve_transpose(&prod.view(), &l_rhs.view());
    if rhs_scale != 1.0 {
        // rhs Gram scaled by rhs_scale^2 -> norm scales by 1/rhs_scale.
        composed.mapv_inplace(|z| z / rhs_scale);
    }
    let (sigma, v) = sigma_max_power(&composed.view(), 1e-12, 8000);

    // Recover the maximizing forcing: x = (L_rhs^T)^{-1} v in parameter
    // space, then through the parametrization if there is one.
    let x = solve_upper_t(&l_rhs.view(), &v.view());
    let f_int = if param { grams.m_helm.dot(&x) } else { x };
    let mut f_full: ComplexProfile = Array1::zeros(n);
    for i in 0..ni {
        f_full[i + 1] = f_int[i];
    }
    Ok((sigma, f_full))
}

/// Solve `L^T x = v` for real lower-triangular `L` and complex `v`.
fn solve_upper_t(l: &ndarray::ArrayView2<f64>, v: &ArrayView1<Complex64>) -> Array1<Complex64> {
    let n = l.nrows();
    let mut x = v.to_owned();
    for i in (0..n).rev() {
        let mut s = x[i];
        for j in i + 1..n {
            s -= l[[j, i]] * x[j];
        }
        x[i] = s / l[[i, i]];
    }
    x
}

fn weight_diag(op: &OperatorLk) -> Array2<f64> {
    let ni = op.interior_size();
    let mut g = Array2::<f64>::zeros((ni, ni));
    for i in 0..ni {
        g[[i, i]] = op.grid.quad_weights[i + 1];
    }
    g
}

/// Gram matrix of `||(d_y, |k|) w||^2` for interior `w` extended by
/// zero: `D_e^T W D_e + k^2 W_int`.
fn gram_h1k(op: &OperatorLk) -> Array2<f64> {
    let n = op.grid.n;
    let ni = n - 2;
    let k2 = (op.k * op.k) as f64;
    let mut g = Array2::<f64>::zeros((ni, ni));
    for a in 0..ni {
        for b in a..ni {
            let mut s = 0.0;
            for r in 0..n {
                s += op.grid.quad_weights[r] * op.grid.d1[[r, a + 1]] * op.grid.d1[[r, b + 1]];
            }
            g[[a, b]] = s;
            g[[b, a]] = s;
        }
    }
    for i in 0..ni {
        g[[i, i]] += k2 * op.grid.quad_weights[i + 1];
    }
    g
}

/// Gram matrix of `||u||^2 = ||d_y phi||^2 + k^2 ||phi||^2` as a
/// quadratic form in the interior vorticity.
fn gram_u(op: &OperatorLk) -> Array2<f64> {
    let n = op.grid.n;
    let ni = n - 2;
    let k2 = (op.k * op.k) as f64;
    // B = D1 * S (n x ni), C = S (n x ni):
    // G = B^T W B + k^2 C^T W C
    let mut b = Array2::<f64>::zeros((n, ni));
    for i in 0..n {
        for j in 0..ni {
            let mut s = 0.0;
            for r in 0..n {
                s += op.grid.d1[[i, r]] * op.s_full[[r, j]];
            }
            b[[i, j]] = s;
        }
    }
    let mut g = Array2::<f64>::zeros((ni, ni));
    for a in 0..ni {
        for c in a..ni {
            let mut s = 0.0;
            for r in 0..n {
                s += op.grid.quad_weights[r]
                    * (b[[r, a]] * b[[r, c]] + k2 * op.s_full[[r, a]] * op.s_full[[r, c]]);
            }
            g[[a, c]] = s;
            g[[c, a]] = s;
        }
    }
    g
}

/// One verification record: measured norms and ratios at a single
/// `(nu, k, lambda)` point.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ResolventSample {
    pub nu: f64,
    pub k: i64,
    pub lambda: f64,
    pub sigma_min: f64,
    /// Named term ratios plus the combined LHS/RHS ratios.
    pub term_ratios: BTreeMap<String, f64>,
    /// Combined worst ratio (max over bank and singular vectors).
    pub worst_ratio: f64,
    /// True when a constituent solve was too ill-conditioned and the
    /// sample must be excluded from fits.
    pub flagged: bool,
    /// Profiles whose critical layer is under-resolved on this grid.
    pub underresolved_bank: usize,
}
