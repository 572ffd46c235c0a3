//! Partial-pivot LU factorization of dense complex matrices, with
//! forward/adjoint solves and iterative refinement.

use crate::error::{Error, Result};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use num_complex::Complex64;

pub struct LuFactor {
    lu: Array2<Complex64>,
    /// ipiv[k] = row swapped with row k at elimination step k.
    ipiv: Vec<usize>,
    n: usize,
    min_pivot: f64,
    max_pivot: f64,
}

impl LuFactor {
    pub fn new(a: &ArrayView2<Complex64>) -> Result<Self> {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "LU requires a square matrix");
        let mut lu = a.to_owned();
        let mut ipiv = vec![0usize; n];
        let mut min_pivot = f64::INFINITY;
        let mut max_pivot = 0.0f64;

        for k in 0..n {
            let mut p = k;
            let mut best = lu[[k, k]].norm();
            for i in k + 1..n {
                let v = lu[[i, k]].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            ipiv[k] = p;
            if p != k {
                for j in 0..n {
                    let tmp = lu[[k, j]];
                    lu[[k, j]] = lu[[p, j]];
                    lu[[p, j]] = tmp;
                }
            }
            let pivot = lu[[k, k]];
            let pn = pivot.norm();
            if pn == 0.0 {
                return Err(Error::Singular { pivot: 0.0 });
            }
            min_pivot = min_pivot.min(pn);
            max_pivot = max_pivot.max(pn);
            for i in k + 1..n {
                let m = lu[[i, k]] / pivot;
                lu[[i, k]] = m;
                if m != Complex64::new(0.0, 0.0) {
                    for j in k + 1..n {
                        let a_kj = lu[[k, j]];
                        lu[[i, j]] -= m * a_kj;
                    }
                }
            }
        }
        Ok(LuFactor {
            lu,
            ipiv,
            n,
            min_pivot,
            max_pivot,
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Crude reciprocal-condition screen: smallest/largest pivot ratio.
    pub fn pivot_ratio(&self) -> f64 {
        self.min_pivot / self.max_pivot
    }

    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    /// Solve `A x = b`.
    pub fn solve(&self, b: &ArrayView1<Complex64>) -> Array1<Complex64> {
        let n = self.n;
        let mut x = b.to_owned();
        for k in 0..n {
            let p = self.ipiv[k];
            if p != k {
                x.swap(k, p);
            }
        }
        let xs = x.as_slice_mut().expect("contiguous");
        let lu = self.lu.as_slice().expect("contiguous");
        // L y = Pb (unit lower)
        for i in 1..n {
            let row = &lu[i * n..i * n + i];
            let mut s = Complex64::new(0.0, 0.0);
            for (l, xv) in row.iter().zip(xs[..i].iter()) {
                s += l * xv;
            }
            xs[i] -= s;
        }
        // U x = y
        for i in (0..n).rev() {
            let row = &lu[i * n + i..(i + 1) * n];
            let mut s = Complex64::new(0.0, 0.0);
            for (u, xv) in row[1..].iter().zip(xs[i + 1..].iter()) {
                s += u * xv;
            }
            xs[i] = (xs[i] - s) / row[0];
        }
        x
    }

    /// Solve `A^H x = b` using the same factorization
    /// (`A^H = U^H L^H P`, so forward substitution on `U^H`, back
    /// substitution on `L^H`, then undo the row swaps in reverse).
    pub fn solve_adjoint(&self, b: &ArrayView1<Complex64>) -> Array1<Complex64> {
        let n = self.n;
        let mut x = b.to_owned();
        // U^H y = b (U^H is lower triangular with diagonal conj(U_ii))
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[[j, i]].conj() * x[j];
            }
            x[i] = s / self.lu[[i, i]].conj();
        }
        // L^H z = y (unit upper triangular)
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[[j, i]].conj() * x[j];
            }
            x[i] = s;
        }
        // x = P^T z: undo swaps in reverse order
        for k in (0..n).rev() {
            let p = self.ipiv[k];
            if p != k {
                x.swap(k, p);
            }
        }
        x
    }

    /// Dense inverse via solves against identity columns.
    pub fn inverse(&self) -> Array2<Complex64> {
        let n = self.n;
        let mut inv = Array2::zeros((n, n));
        let mut e = Array1::zeros(n);
        for j in 0..n {
            e.fill(Complex64::new(0.0, 0.0));
            e[j] = Complex64::new(1.0, 0.0);
            let col = self.solve(&e.view());
            for i in 0..n {
                inv[[i, j]] = col[i];
            }
        }
        inv
    }

    /// One step of iterative refinement against the original matrix.
    /// Returns the new residual norm.
    pub fn refine(
        &self,
        a: &ArrayView2<Complex64>,
        b: &ArrayView1<Complex64>,
        x: &mut Array1<Complex64>,
    ) -> f64 {
        let mut r = b.to_owned();
        let ax = a.dot(x);
        r -= &ax;
        let dx = self.solve(&r.view());
        *x += &dx;
        let r2 = b - &a.dot(x);
        r2.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}
