//! Independent finite-difference oracle on a uniform grid: second-order
//! stencils, Thomas and banded complex solvers, Simpson quadrature.
//! Deliberately shares no discretization machinery with the library.

#![allow(dead_code)]

use num_complex::Complex64;

pub struct FdGrid {
    pub n: usize,
    pub h: f64,
    pub y: Vec<f64>,
}

/// Uniform grid on [-1, 1]; `n` should be odd so Simpson applies.
pub fn fd_grid(n: usize) -> FdGrid {
    let h = 2.0 / (n - 1) as f64;
    let y = (0..n).map(|i| -1.0 + h * i as f64).collect();
    FdGrid { n, h, y }
}

/// Composite Simpson integral of nodal values (n odd).
pub fn simpson(vals: &[f64], h: f64) -> f64 {
    let n = vals.len();
    assert!(n % 2 == 1, "Simpson needs an odd point count");
    let mut s = vals[0] + vals[n - 1];
    for (i, v) in vals.iter().enumerate().take(n - 1).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    s * h / 3.0
}

pub fn fd_l2(vals: &[Complex64], h: f64) -> f64 {
    let sq: Vec<f64> = vals.iter().map(|z| z.norm_sqr()).collect();
    simpson(&sq, h).max(0.0).sqrt()
}

/// Thomas solve of `(d_yy - k^2) phi = w`, `phi(+-1) = 0`.
pub fn fd_helmholtz(grid: &FdGrid, k: i64, w: &[Complex64]) -> Vec<Complex64> {
    let n = grid.n;
    let h2 = grid.h * grid.h;
    let m = n - 2;
    let k2 = (k * k) as f64;
    let diag = Complex64::new(-2.0 / h2 - k2, 0.0);
    let off = Complex64::new(1.0 / h2, 0.0);
    // Forward sweep
    let mut c = vec![Complex64::new(0.0, 0.0); m];
    let mut d = vec![Complex64::new(0.0, 0.0); m];
    c[0] = off / diag;
    d[0] = w[1] / diag;
    for i in 1..m {
        let denom = diag - off * c[i - 1];
        c[i] = off / denom;
        d[i] = (w[i + 1] - off * d[i - 1]) / denom;
    }
    let mut phi_int = vec![Complex64::new(0.0, 0.0); m];
    phi_int[m - 1] = d[m - 1];
    for i in (0..m - 1).rev() {
        phi_int[i] = d[i] - c[i] * phi_int[i + 1];
    }
    let mut phi = vec![Complex64::new(0.0, 0.0); n];
    phi[1..=m].copy_from_slice(&phi_int);
    phi
}

/// Central-difference derivative (one-sided second order at the walls).
pub fn fd_deriv(grid: &FdGrid, f: &[Complex64]) -> Vec<Complex64> {
    let n = grid.n;
    let h = grid.h;
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    out[0] = (-f[2] + f[1] * 4.0 - f[0] * 3.0) / (2.0 * h);
    out[n - 1] = (f[n - 3] - f[n - 2] * 4.0 + f[n - 1] * 3.0) / (2.0 * h);
    for i in 1..n - 1 {
        out[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
    }
    out
}

/// Banded complex matrix with `kl` sub- and `ku` superdiagonals,
/// solved by Gaussian elimination with partial pivoting (fill-in up to
/// `kl + ku` superdiagonals). Row `i` stores columns `i-kl ..= i+ku+kl`.
pub struct Banded {
    pub n: usize,
    pub kl: usize,
    pub ku: usize,
    width: usize,
    data: Vec<Complex64>,
}

impl Banded {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = kl + ku + kl + 1;
        Banded {
            n,
            kl,
            ku,
            width,
            data: vec![Complex64::new(0.0, 0.0); n * width],
        }
    }

    fn idx(&self, i: usize, j: usize) -> Option<usize> {
        let lo = i.saturating_sub(self.kl);
        if j < lo || j > i + self.ku + self.kl || j >= self.n {
            return None;
        }
        Some(i * self.width + (j + self.kl - i))
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        let at = self.idx(i, j).expect("entry outside band");
        self.data[at] = v;
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        match self.idx(i, j) {
            Some(at) => self.data[at],
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// In-place partial-pivot solve; consumes the matrix.
    pub fn solve(mut self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut x = b.to_vec();
        for col in 0..n {
            // pivot among rows col .. col+kl
            let hi = (col + self.kl).min(n - 1);
            let mut piv = col;
            let mut best = self.get(piv, col).norm();
            for r in col + 1..=hi {
                let v = self.get(r, col).norm();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            assert!(best > 0.0, "banded matrix singular at column {col}");
            if piv != col {
                for j in col..(col + self.ku + self.kl + 1).min(n) {
                    let a = self.get(col, j);
                    let b2 = self.get(piv, j);
                    if let Some(at) = self.idx(col, j) {
                        self.data[at] = b2;
                    }
                    if let Some(at) = self.idx(piv, j) {
                        self.data[at] = a;
                    }
                }
                x.swap(col, piv);
            }
            let pivot = self.get(col, col);
            for r in col + 1..=hi {
                let factor = self.get(r, col) / pivot;
                if factor.norm() == 0.0 {
                    continue;
                }
                for j in col..(col + self.ku + self.kl + 1).min(n) {
                    let v = self.get(col, j);
                    if let Some(at) = self.idx(r, j) {
                        self.data[at] -= factor * v;
                    }
                }
                let xc = x[col];
                x[r] -= factor * xc;
            }
        }
        // back substitution
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..(i + self.ku + self.kl + 1).min(n) {
                s -= self.get(i, j) * x[j];
            }
            x[i] = s / self.get(i, i);
        }
        x
    }
}

/// Coupled finite-difference resolvent solve:
/// `-nu (w'' - k^2 w) + ik (1 - y^2 - lambda) w + 2ik phi = F`,
/// `phi'' - k^2 phi = w`, both vanishing at the walls.
/// Unknowns interleaved as (w_i, phi_i) on interior nodes.
pub fn fd_resolvent(
    grid: &FdGrid,
    nu: f64,
    k: i64,
    lambda: f64,
    f: &[Complex64],
) -> Vec<Complex64> {
    let n = grid.n;
    let m = n - 2;
    let h2 = grid.h * grid.h;
    let kf = k as f64;
    let k2 = kf * kf;
    let big = 2 * m;
    let mut a = Banded::zeros(big, 2, 2);
    let mut b = vec![Complex64::new(0.0, 0.0); big];

    for i in 0..m {
        let y = grid.y[i + 1];
        let rw = 2 * i; // w equation row
        let rp = 2 * i + 1; // phi equation row
        // w-equation
        a.set(
            rw,
            2 * i,
            Complex64::new(2.0 * nu / h2 + nu * k2, kf * (1.0 - y * y - lambda)),
        );
        if i > 0 {
            a.set(rw, 2 * (i - 1), Complex64::new(-nu / h2, 0.0));
        }
        if i + 1 < m {
            a.set(rw, 2 * (i + 1), Complex64::new(-nu / h2, 0.0));
        }
        a.set(rw, 2 * i + 1, Complex64::new(0.0, 2.0 * kf));
        b[rw] = f[i + 1];
        // phi-equation
        a.set(rp, 2 * i + 1, Complex64::new(-2.0 / h2 - k2, 0.0));
        if i > 0 {
            a.set(rp, 2 * (i - 1) + 1, Complex64::new(1.0 / h2, 0.0));
        }
        if i + 1 < m {
            a.set(rp, 2 * (i + 1) + 1, Complex64::new(1.0 / h2, 0.0));
        }
        a.set(rp, 2 * i, Complex64::new(-1.0, 0.0));
        b[rp] = Complex64::new(0.0, 0.0);
    }

    let x = a.solve(&b);
    let mut w = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..m {
        w[i + 1] = x[2 * i];
    }
    w
}
