//! Dense complex linear algebra kernels.
//!
//! Everything in the toolkit works on small dense matrices (n <= 512),
//! so robustness beats asymptotics: partial-pivot LU, one-sided Jacobi
//! SVD, a complex Hessenberg-QR eigenvalue iteration and Pade
//! scaling-and-squaring for the matrix exponential.

mod chol;
mod eig;
mod expm;
mod lu;
mod svd;

pub use chol::{cholesky, solve_lower_real, tri_left_mul_transpose, tri_right_solve_transpose};
pub use eig::{eigenvalues, eigenvector};
pub use expm::expm;
pub use lu::LuFactor;
pub use svd::{jacobi_svd, sigma_max_power, sigma_min_from_lu, Svd};

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use num_complex::Complex64;

/// Conjugate transpose.
pub fn adjoint(a: &ArrayView2<Complex64>) -> Array2<Complex64> {
    let (m, n) = a.dim();
    Array2::from_shape_fn((n, m), |(i, j)| a[[j, i]].conj())
}

/// Euclidean norm of a complex vector.
pub fn vec_norm(v: &ArrayView1<Complex64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Standard inner product `sum_i a_i * conj(b_i)`.
pub fn vec_dot(a: &ArrayView1<Complex64>, b: &ArrayView1<Complex64>) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y.conj()).sum()
}

/// Complex dense matrix times vector through contiguous rows.
pub fn matvec(a: &Array2<Complex64>, x: &ArrayView1<Complex64>) -> Array1<Complex64> {
    let (rows, cols) = a.dim();
    assert_eq!(cols, x.len());
    let av = a.as_slice().expect("contiguous");
    let mut out = Array1::zeros(rows);
    match x.as_slice() {
        Some(xs) => {
            for i in 0..rows {
                let row = &av[i * cols..(i + 1) * cols];
                let mut s = Complex64::new(0.0, 0.0);
                for (m, z) in row.iter().zip(xs.iter()) {
                    s += m * z;
                }
                out[i] = s;
            }
        }
        None => {
            for i in 0..rows {
                let row = &av[i * cols..(i + 1) * cols];
                let mut s = Complex64::new(0.0, 0.0);
                for (m, z) in row.iter().zip(x.iter()) {
                    s += m * z;
                }
                out[i] = s;
            }
        }
    }
    out
}

/// Maximum column sum (operator 1-norm).
pub fn norm_one(a: &ArrayView2<Complex64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..a.ncols() {
        let s: f64 = a.column(j).iter().map(|z| z.norm()).sum();
        best = best.max(s);
    }
    best
}

/// Frobenius norm.
pub fn norm_fro(a: &ArrayView2<Complex64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Deterministic pseudo-random start vector for power iterations.
/// Mixes parities so neither the even nor the odd invariant subspace
/// of a symmetric-in-y operator is missed.
pub fn start_vector(n: usize, phase: u64) -> Array1<Complex64> {
    let mut v = Array1::from_shape_fn(n, |i| {
        let x = (i as f64) * 0.7391 + (phase as f64) * 1.3113;
        Complex64::new(1.0 + 0.5 * x.sin(), 0.25 * (1.7 * x).cos())
    });
    let nrm = vec_norm(&v.view());
    v.mapv_inplace(|z| z / nrm);
    v
}
