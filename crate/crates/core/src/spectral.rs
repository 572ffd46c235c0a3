//! Chebyshev collocation calculus on `y in [-1, 1]`: grids,
//! differentiation matrices, Clenshaw-Curtis quadrature, Dirichlet
//! Helmholtz solves and the norms used throughout the estimates.

use crate::error::{Error, Result};
use crate::linalg::LuFactor;
use ndarray::{Array1, Array2, ArrayView1};
use num_complex::Complex64;
use std::f64::consts::PI;

/// One Fourier mode of vorticity, streamfunction, velocity or forcing,
/// sampled at the grid nodes.
pub type ComplexProfile = Array1<Complex64>;

/// Chebyshev-Gauss-Lobatto grid with collocation derivative matrices
/// and Clenshaw-Curtis weights.
///
/// Nodes run strictly decreasing from `+1` to `-1`; `d1` uses the
/// negative-sum trick on the diagonal and `d2 = d1 * d1`.
#[derive(Debug, Clone)]
pub struct ChebGrid {
    pub n: usize,
    pub nodes: Array1<f64>,
    pub d1: Array2<f64>,
    pub d2: Array2<f64>,
    pub quad_weights: Array1<f64>,
}

/// Build the collocation grid; `n` is the point count (min 8).
pub fn build_grid(n: usize) -> Result<ChebGrid> {
    if n < 8 {
        return Err(Error::invalid(format!("grid needs n >= 8, got {n}")));
    }
    let m = n - 1;
    let nodes = Array1::from_shape_fn(n, |j| (PI * j as f64 / m as f64).cos());

    let c = |i: usize| -> f64 {
        if i == 0 || i == m {
            2.0
        } else {
            1.0
        }
    };
    let mut d1 = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                d1[[i, j]] = (c(i) / c(j)) * sign / (nodes[i] - nodes[j]);
            }
        }
        let row_sum: f64 = (0..n).filter(|&j| j != i).map(|j| d1[[i, j]]).sum();
        d1[[i, i]] = -row_sum;
    }
    let d2 = d1.dot(&d1);

    let quad_weights = clenshaw_curtis(n);

    Ok(ChebGrid {
        n,
        nodes,
        d1,
        d2,
        quad_weights,
    })
}

/// Clenshaw-Curtis weights on the n Gauss-Lobatto nodes; exact for
/// polynomials up to degree n-1 and summing to the interval length 2.
/// Evaluated through a length-m FFT so large quadrature-only grids
/// stay cheap; equivalent to the direct cosine sums.
fn clenshaw_curtis(n: usize) -> Array1<f64> {
    use rustfft::FftPlanner;
    let m = n - 1;
    // Interior weights: w_j = (2/m) * sum_b p_b e^{2 pi i b j / m}
    // with the cosine-series coefficients placed symmetrically.
    let mut p = vec![Complex64::new(0.0, 0.0); m];
    p[0] = Complex64::new(1.0, 0.0);
    if m % 2 == 0 {
        for b in 1..m / 2 {
            let c = -1.0 / ((4 * b * b - 1) as f64);
            p[b] += c;
            p[m - b] += c;
        }
        p[m / 2] += -1.0 / ((m * m - 1) as f64);
    } else {
        for b in 1..=(m - 1) / 2 {
            let c = -1.0 / ((4 * b * b - 1) as f64);
            p[b] += c;
            p[m - b] += c;
        }
    }
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(m);
    fft.process(&mut p);

    let mut w = Array1::<f64>::zeros(n);
    let end = if m % 2 == 0 {
        1.0 / ((m * m - 1) as f64)
    } else {
        1.0 / ((m * m) as f64)
    };
    w[0] = end;
    w[m] = end;
    for j in 1..m {
        // Forward FFT computes sum_b p_b e^{-2 pi i b j / m}; the
        // coefficient layout is symmetric, so the real part is the
        // cosine sum we need.
        w[j] = 2.0 * p[j].re / m as f64;
    }
    w
}

/// Direct O(n^2) evaluation of the same weights (reference for tests).
#[allow(dead_code)]
fn clenshaw_curtis_direct(n: usize) -> Array1<f64> {
    let m = n - 1;
    let mut w = Array1::<f64>::zeros(n);
    let theta: Vec<f64> = (0..n).map(|j| PI * j as f64 / m as f64).collect();
    let end = if m % 2 == 0 {
        1.0 / ((m * m - 1) as f64)
    } else {
        1.0 / ((m * m) as f64)
    };
    w[0] = end;
    w[m] = end;
    for j in 1..m {
        let mut v = 1.0;
        if m % 2 == 0 {
            for b in 1..m / 2 {
                v -= 2.0 * (2.0 * b as f64 * theta[j]).cos() / ((4 * b * b - 1) as f64);
            }
            v -= (m as f64 * theta[j]).cos() / ((m * m - 1) as f64);
        } else {
            for b in 1..=(m - 1) / 2 {
                v -= 2.0 * (2.0 * b as f64 * theta[j]).cos() / ((4 * b * b - 1) as f64);
            }
        }
        w[j] = 2.0 * v / m as f64;
    }
    w
}

impl ChebGrid {
    /// Zero profile on this grid.
    pub fn zero(&self) -> ComplexProfile {
        Array1::zeros(self.n)
    }

    /// Sample a real function at the nodes.
    pub fn sample_real(&self, f: impl Fn(f64) -> f64) -> ComplexProfile {
        Array1::from_shape_fn(self.n, |j| Complex64::new(f(self.nodes[j]), 0.0))
    }

    /// Sample a complex function at the nodes.
    pub fn sample(&self, f: impl Fn(f64) -> Complex64) -> ComplexProfile {
        Array1::from_shape_fn(self.n, |j| f(self.nodes[j]))
    }

    /// Collocation derivative of a profile.
    pub fn deriv(&self, f: &ArrayView1<Complex64>) -> ComplexProfile {
        real_matvec(&self.d1, f)
    }

    /// `(d_yy - k^2) f` on the full grid.
    pub fn laplacian_k(&self, k: i64, f: &ArrayView1<Complex64>) -> ComplexProfile {
        let k2 = (k * k) as f64;
        let mut out = real_matvec(&self.d2, f);
        for i in 0..self.n {
            out[i] -= k2 * f[i];
        }
        out
    }

    /// Clenshaw-Curtis integral of a nodal sampling of a real function.
    pub fn integrate(&self, vals: impl Fn(usize) -> f64) -> f64 {
        (0..self.n).map(|j| self.quad_weights[j] * vals(j)).sum()
    }

    /// Quadrature L2 norm.
    pub fn norm_l2(&self, f: &ArrayView1<Complex64>) -> f64 {
        self.integrate(|j| f[j].norm_sqr()).max(0.0).sqrt()
    }

    /// Quadrature L1 norm.
    pub fn norm_l1(&self, f: &ArrayView1<Complex64>) -> f64 {
        self.integrate(|j| f[j].norm())
    }

    /// Nodal maximum modulus.
    pub fn norm_linf(&self, f: &ArrayView1<Complex64>) -> f64 {
        f.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `sqrt(||d_y f||^2 + k^2 ||f||^2)`.
    pub fn norm_h1k(&self, k: i64, f: &ArrayView1<Complex64>) -> f64 {
        let df = self.deriv(f);
        let a = self.integrate(|j| df[j].norm_sqr());
        let b = self.integrate(|j| f[j].norm_sqr());
        (a + (k * k) as f64 * b).max(0.0).sqrt()
    }

    /// Weighted inner product `<f, g> = int f conj(g)`.
    pub fn inner(&self, f: &ArrayView1<Complex64>, g: &ArrayView1<Complex64>) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for j in 0..self.n {
            s += self.quad_weights[j] * f[j] * g[j].conj();
        }
        s
    }
}

/// All norms of one profile for a given wavenumber. The dual norm
/// `hm1k` needs `k != 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormBundle {
    pub l2: f64,
    pub l1: f64,
    pub linf: f64,
    pub h1k: f64,
    pub hm1k: f64,
}

/// Real dense matrix times complex vector through contiguous rows
/// (the hot kernel of every derivative and solution-operator apply).
pub fn real_matvec(a: &Array2<f64>, f: &ArrayView1<Complex64>) -> ComplexProfile {
    let (rows, cols) = a.dim();
    assert_eq!(cols, f.len());
    let av = a.as_slice().expect("contiguous");
    let mut out = Array1::zeros(rows);
    match f.as_slice() {
        Some(fs) => {
            for i in 0..rows {
                let row = &av[i * cols..(i + 1) * cols];
                let mut s = Complex64::new(0.0, 0.0);
                for (r, z) in row.iter().zip(fs.iter()) {
                    s += *r * z;
                }
                out[i] = s;
            }
        }
        None => {
            for i in 0..rows {
                let row = &av[i * cols..(i + 1) * cols];
                let mut s = Complex64::new(0.0, 0.0);
                for (r, z) in row.iter().zip(f.iter()) {
                    s += *r * z;
                }
                out[i] = s;
            }
        }
    }
    out
}

/// Dense Helmholtz matrix `(d_yy - k^2)` with Dirichlet rows installed
/// at both walls.
pub fn helmholtz_matrix(grid: &ChebGrid, k: i64) -> Array2<f64> {
    let n = grid.n;
    let k2 = (k * k) as f64;
    let mut a = grid.d2.clone();
    for i in 0..n {
        a[[i, i]] -= k2;
    }
    for j in 0..n {
        a[[0, j]] = 0.0;
        a[[n - 1, j]] = 0.0;
    }
    a[[0, 0]] = 1.0;
    a[[n - 1, n - 1]] = 1.0;
    a
}

/// Cached factorization of the Dirichlet Helmholtz operator for one
/// `(grid, k)`; reuse it when solving repeatedly (time stepping).
pub struct HelmholtzSolver {
    lu: LuFactor,
    n: usize,
}

impl HelmholtzSolver {
    pub fn new(grid: &ChebGrid, k: i64) -> Result<Self> {
        let a = helmholtz_matrix(grid, k).mapv(|x| Complex64::new(x, 0.0));
        let lu = LuFactor::new(&a.view())?;
        Ok(HelmholtzSolver { lu, n: grid.n })
    }

    /// Solve `(d_yy - k^2) phi = w`, `phi(+-1) = 0`.
    pub fn solve(&self, rhs: &ArrayView1<Complex64>) -> ComplexProfile {
        let mut b = rhs.to_owned();
        b[0] = Complex64::new(0.0, 0.0);
        b[self.n - 1] = Complex64::new(0.0, 0.0);
        let mut phi = self.lu.solve(&b.view());
        // Dirichlet rows are exact identity rows; pin the endpoints.
        phi[0] = Complex64::new(0.0, 0.0);
        phi[self.n - 1] = Complex64::new(0.0, 0.0);
        phi
    }
}

/// Solve `(d_yy - k^2) phi = w` with `phi(+-1) = 0` (k = 0 is a plain
/// Poisson solve).
pub fn solve_helmholtz(grid: &ChebGrid, k: i64, rhs: &ArrayView1<Complex64>) -> Result<ComplexProfile> {
    if rhs.len() != grid.n {
        return Err(Error::invalid(format!(
            "rhs length {} does not match grid n {}",
            rhs.len(),
            grid.n
        )));
    }
    Ok(HelmholtzSolver::new(grid, k)?.solve(rhs))
}

/// All norms of `f`; `k = 0` is rejected because the dual norm is only
/// defined for nonzero wavenumbers here.
pub fn compute_norms(grid: &ChebGrid, k: i64, f: &ArrayView1<Complex64>) -> Result<NormBundle> {
    if k == 0 {
        return Err(Error::invalid("H^-1_k norm needs k != 0"));
    }
    let l2 = grid.norm_l2(f);
    let l1 = grid.norm_l1(f);
    let linf = grid.norm_linf(f);
    let h1k = grid.norm_h1k(k, f);
    let hm1k = norm_hm1k(grid, k, f)?;
    Ok(NormBundle {
        l2,
        l1,
        linf,
        h1k,
        hm1k,
    })
}

/// Dual norm via the Dirichlet solve: `(-d_yy + k^2) G = f`,
/// `hm1k = sqrt(Re<f, G>)` clamped at zero.
pub fn norm_hm1k(grid: &ChebGrid, k: i64, f: &ArrayView1<Complex64>) -> Result<f64> {
    if k == 0 {
        return Err(Error::invalid("H^-1_k norm needs k != 0"));
    }
    let neg_f = f.mapv(|z| -z);
    let g = solve_helmholtz(grid, k, &neg_f.view())?; // (-dyy + k^2) G = f
    let ip = grid.inner(f, &g.view());
    Ok(ip.re.max(0.0).sqrt())
}

/// Velocity mode from a vorticity mode: `phi` solves the Dirichlet
/// Helmholtz problem and `u = (d_y phi, -ik phi)`.
pub fn velocity_from_vorticity(
    grid: &ChebGrid,
    k: i64,
    omega: &ArrayView1<Complex64>,
) -> Result<(ComplexProfile, ComplexProfile)> {
    if k == 0 {
        return Err(Error::invalid(
            "modal velocity needs k != 0 (the zero mode has its own path)",
        ));
    }
    let phi = solve_helmholtz(grid, k, omega)?;
    let u1 = grid.deriv(&phi.view());
    let u2 = phi.mapv(|z| Complex64::new(0.0, -(k as f64)) * z);
    Ok((u1, u2))
}

/// `sqrt(||u1||^2 + ||u2||^2)` for a velocity pair.
pub fn velocity_l2(grid: &ChebGrid, u1: &ArrayView1<Complex64>, u2: &ArrayView1<Complex64>) -> f64 {
    let s = grid.integrate(|j| u1[j].norm_sqr() + u2[j].norm_sqr());
    s.max(0.0).sqrt()
}

/// Deterministic smooth function vanishing at the walls: a decaying
/// random Chebyshev series times `(1 - y^2)`. Analytic in `y`, so it
/// can be sampled on any grid (including independent-oracle grids).
pub fn random_smooth_fn(seed: u64) -> impl Fn(f64) -> Complex64 {
    use rand::Rng;
    let mut rng = crate::util::rng_for(seed, &[42]);
    let modes = 12;
    let coef: Vec<(f64, f64)> = (0..modes)
        .map(|m| {
            let decay = 1.0 / (1.0 + (m * m) as f64);
            (
                rng.gen_range(-1.0..1.0) * decay,
                rng.gen_range(-1.0..1.0) * decay,
            )
        })
        .collect();
    move |y: f64| {
        let mut s = Complex64::new(0.0, 0.0);
        for (m, (a, b)) in coef.iter().enumerate() {
            let t = (m as f64 * y.clamp(-1.0, 1.0).acos()).cos(); // T_m(y)
            s += Complex64::new(a * t, b * t);
        }
        s * (1.0 - y * y)
    }
}

/// [`random_smooth_fn`] sampled at the grid nodes.
pub fn random_smooth_profile(grid: &ChebGrid, seed: u64) -> ComplexProfile {
    grid.sample(random_smooth_fn(seed))
}

/// Chebyshev coefficients of a nodal profile (type-I DCT done
/// directly; n <= 512 keeps the O(n^2) transform cheap and exact).
pub fn cheb_coefficients(grid: &ChebGrid, f: &ArrayView1<Complex64>) -> Vec<Complex64> {
    let n = grid.n;
    let m = n - 1;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
    for (idx, c) in coeffs.iter_mut().enumerate() {
        let mut s = Complex64::new(0.0, 0.0);
        for j in 0..n {
            let w = if j == 0 || j == m { 0.5 } else { 1.0 };
            let angle = PI * (idx * j) as f64 / m as f64;
            s += w * f[j] * angle.cos();
        }
        let scale = if idx == 0 || idx == m { 1.0 } else { 2.0 };
        *c = s * (scale / m as f64);
    }
    coeffs
}
