//! Singular values: one-sided Jacobi SVD (oracle-grade accuracy) and
//! fast iterative estimates for the extreme singular values.

use super::lu::LuFactor;
use super::{start_vector, vec_dot, vec_norm};
use ndarray::{Array1, Array2, ArrayView2};
use num_complex::Complex64;

pub struct Svd {
    /// Singular values, descending.
    pub singular: Vec<f64>,
    /// Right singular vectors as columns, same order as `singular`.
    pub v: Option<Array2<Complex64>>,
}

/// One-sided Jacobi SVD of a square (or tall) complex matrix.
///
/// Orthogonalizes column pairs with complex plane rotations until all
/// off-diagonal Gram entries vanish relative to the column norms. Slow
/// (O(n^3) per sweep) but delivers high relative accuracy even for the
/// smallest singular values, which is why it serves as the oracle for
/// the iterative estimates.
pub fn jacobi_svd(a: &ArrayView2<Complex64>, want_v: bool) -> Svd {
    let (m, n) = a.dim();
    assert!(m >= n, "jacobi_svd expects m >= n");
    let mut w = a.to_owned();
    let mut v = if want_v {
        Some(Array2::from_shape_fn((n, n), |(i, j)| {
            if i == j {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        }))
    } else {
        None
    };

    let tol = 1e-14;
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let mut alpha = 0.0f64;
                let mut beta = 0.0f64;
                let mut gamma = Complex64::new(0.0, 0.0);
                for i in 0..m {
                    let ap = w[[i, p]];
                    let aq = w[[i, q]];
                    alpha += ap.norm_sqr();
                    beta += aq.norm_sqr();
                    gamma += ap.conj() * aq;
                }
                let gn = gamma.norm();
                if gn <= tol * (alpha * beta).sqrt() || gn == 0.0 {
                    continue;
                }
                rotated = true;
                // Phase-align column q so the Gram entry is real, then
                // apply a real Jacobi rotation.
                let phase = gamma / gn;
                let tau = (beta - alpha) / (2.0 * gn);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let ap = w[[i, p]];
                    let aq = w[[i, q]] * phase.conj();
                    w[[i, p]] = ap * c - aq * s;
                    w[[i, q]] = (ap * s + aq * c) * phase;
                }
                if let Some(vm) = v.as_mut() {
                    for i in 0..n {
                        let vp = vm[[i, p]];
                        let vq = vm[[i, q]] * phase.conj();
                        vm[[i, p]] = vp * c - vq * s;
                        vm[[i, q]] = (vp * s + vq * c) * phase;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let sigmas: Vec<f64> = (0..n).map(|j| vec_norm(&w.column(j))).collect();
    order.sort_by(|&i, &j| sigmas[j].partial_cmp(&sigmas[i]).unwrap());
    let singular: Vec<f64> = order.iter().map(|&j| sigmas[j]).collect();
    let v = v.map(|vm| {
        let mut out = Array2::zeros((n, n));
        for (col, &j) in order.iter().enumerate() {
            for i in 0..n {
                out[[i, col]] = vm[[i, j]];
            }
        }
        out
    });
    Svd { singular, v }
}

/// Largest singular value of `a` by block-2 subspace iteration on
/// `a^H a`, returning `(sigma_max, right_singular_vector)`.
///
/// The two-vector block keeps convergence fast when the top singular
/// values come in near-degenerate pairs (the y-parity symmetry of the
/// channel operators produces exactly that).
pub fn sigma_max_power(a: &ArrayView2<Complex64>, tol: f64, max_iter: usize) -> (f64, Array1<Complex64>) {
    let n = a.ncols();
    let ah = super::adjoint(a);
    let mut v1 = start_vector(n, 11);
    let mut v2 = start_vector(n, 29);
    orthonormalize_pair(&mut v1, &mut v2);
    let mut sigma = 0.0f64;
    let mut top = v1.clone();
    for _ in 0..max_iter {
        let w1 = ah.dot(&a.dot(&v1));
        let w2 = ah.dot(&a.dot(&v2));
        // Rayleigh-Ritz for the Hermitian map a^H a on span{v1, v2}.
        let b11 = vec_dot(&w1.view(), &v1.view()).re;
        let b22 = vec_dot(&w2.view(), &v2.view()).re;
        let b12 = vec_dot(&w1.view(), &v2.view());
        let mid = 0.5 * (b11 + b22);
        let rad = (0.25 * (b11 - b22).powi(2) + b12.norm_sqr()).sqrt();
        let lam = (mid + rad).max(0.0);
        let new_sigma = lam.sqrt();
        // Top Ritz vector from the larger column of (B - lam2 I),
        // with B = [[b11, conj(b12)], [b12, b22]] in the {v1, v2}
        // basis (b12 = v2^H M v1).
        let lam2 = mid - rad;
        let col1 = (Complex64::new(b11 - lam2, 0.0), b12);
        let col2 = (b12.conj(), Complex64::new(b22 - lam2, 0.0));
        let (alpha, beta) = if col1.0.norm_sqr() + col1.1.norm_sqr()
            >= col2.0.norm_sqr() + col2.1.norm_sqr()
        {
            col1
        } else {
            col2
        };
        let mut t = v1.mapv(|z| z * alpha);
        for i in 0..n {
            let c = v2[i];
            t[i] += beta * c;
        }
        let tn = vec_norm(&t.view());
        if tn > 0.0 {
            top = t.mapv(|z| z / tn);
        }
        let done = (new_sigma - sigma).abs() <= tol * new_sigma.max(f64::MIN_POSITIVE);
        sigma = new_sigma;
        v1 = w1;
        v2 = w2;
        orthonormalize_pair(&mut v1, &mut v2);
        if done {
            break;
        }
        if sigma == 0.0 {
            break;
        }
    }
    (sigma, top)
}

/// Smallest singular value of the factored matrix via block-2 subspace
/// iteration on `A^{-1} A^{-H}`.
///
/// The block of two vectors covers near-degenerate pairs (the channel
/// operators commute with `y -> -y`, so even/odd singular values can
/// sit very close), where plain power iteration would stall.
pub fn sigma_min_from_lu(lu: &LuFactor, tol: f64, max_iter: usize) -> f64 {
    let n = lu.size();
    if n == 0 {
        return 0.0;
    }
    let mut v1 = start_vector(n, 3);
    let mut v2 = start_vector(n, 17);
    orthonormalize_pair(&mut v1, &mut v2);
    let mut lam = 0.0f64;
    for _ in 0..max_iter {
        // w_i = A^{-1} A^{-H} v_i
        let y1 = lu.solve_adjoint(&v1.view());
        let y2 = lu.solve_adjoint(&v2.view());
        let w1 = lu.solve(&y1.view());
        let w2 = lu.solve(&y2.view());
        // Rayleigh-Ritz in span{v1,v2}: B = V^H M V is Hermitian 2x2.
        let b11 = vec_dot(&w1.view(), &v1.view()).re;
        let b22 = vec_dot(&w2.view(), &v2.view()).re;
        let b12 = vec_dot(&w1.view(), &v2.view());
        let mid = 0.5 * (b11 + b22);
        let rad = (0.25 * (b11 - b22).powi(2) + b12.norm_sqr()).sqrt();
        let new_lam = mid + rad;
        let done = (new_lam - lam).abs() <= tol * new_lam.abs().max(f64::MIN_POSITIVE);
        lam = new_lam;
        v1 = w1;
        v2 = w2;
        orthonormalize_pair(&mut v1, &mut v2);
        if done {
            break;
        }
    }
    if lam <= 0.0 {
        0.0
    } else {
        1.0 / lam.sqrt()
    }
}

fn orthonormalize_pair(v1: &mut Array1<Complex64>, v2: &mut Array1<Complex64>) {
    let n1 = vec_norm(&v1.view());
    if n1 > 0.0 {
        v1.mapv_inplace(|z| z / n1);
    }
    let proj = vec_dot(&v2.view(), &v1.view());
    for i in 0..v2.len() {
        let c = v1[i];
        v2[i] -= proj * c;
    }
    let n2 = vec_norm(&v2.view());
    if n2 > 1e-300 {
        v2.mapv_inplace(|z| z / n2);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn matrix_with_known_singulars(n: usize, sigmas: &[f64]) -> Array2<Complex64> {
        // Build A = Q1 * diag(sigma) * Q2^H from two deterministic
        // unitary factors (Householder products).
        let q1 = unitary(n, 5);
        let q2 = unitary(n, 9);
        let mut d = Array2::zeros((n, n));
        for i in 0..n {
            d[[i, i]] = Complex64::new(sigmas[i], 0.0);
        }
        q1.dot(&d).dot(&crate::linalg::adjoint(&q2.view()).view().to_owned())
    }

    fn unitary(n: usize, phase: u64) -> Array2<Complex64> {
        // Gram-Schmidt on a deterministic full-rank matrix.
        let mut a = Array2::from_shape_fn((n, n), |(i, j)| {
            let x = (i as f64 * 1.1 + j as f64 * 2.3 + phase as f64).sin();
            let y = (i as f64 * 0.7 - j as f64 * 1.9 + phase as f64).cos();
            Complex64::new(x + if i == j { 2.0 } else { 0.0 }, y)
        });
        for j in 0..n {
            for k in 0..j {
                let col_k = a.column(k).to_owned();
                let proj = vec_dot(&a.column(j), &col_k.view());
                for i in 0..n {
                    let c = col_k[i];
                    a[[i, j]] -= proj * c;
                }
            }
            let nrm = vec_norm(&a.column(j));
            for i in 0..n {
                a[[i, j]] /= nrm;
            }
        }
        a
    }

    #[test]
    fn jacobi_recovers_prescribed_singular_values() {
        let sig: Vec<f64> = vec![10.0, 4.0, 1.0, 0.1, 1e-4, 1e-7];
        let a = matrix_with_known_singulars(6, &sig);
        let svd = jacobi_svd(&a.view(), false);
        // The unitary factors are Gram-Schmidt products, so the
        // achievable accuracy is eps * sigma_max.
        for (got, want) in svd.singular.iter().zip(sig.iter()) {
            assert!(
                (got - want).abs() < 1e-10 * want + 1e-13 * sig[0],
                "got {got}, want {want}"
            );
        }
    }

    #[test]
    fn sigma_extremes_match_jacobi() {
        let sig: Vec<f64> = vec![5.0, 4.99, 2.0, 0.5, 0.02, 0.019999];
        let a = matrix_with_known_singulars(6, &sig);
        let svd = jacobi_svd(&a.view(), false);
        let (smax, _) = sigma_max_power(&a.view(), 1e-14, 20_000);
        assert!((smax - svd.singular[0]).abs() < 1e-8 * svd.singular[0]);
        let lu = LuFactor::new(&a.view()).unwrap();
        let smin = sigma_min_from_lu(&lu, 1e-14, 20_000);
        let want = *svd.singular.last().unwrap();
        assert!((smin - want).abs() < 1e-8 * want, "got {smin}, want {want}");
    }

    #[test]
    fn right_singular_vector_attains_sigma_max() {
        let sig: Vec<f64> = vec![3.0, 1.0, 0.2, 0.05];
        let a = matrix_with_known_singulars(4, &sig);
        let (smax, v) = sigma_max_power(&a.view(), 1e-14, 10_000);
        let av = a.dot(&v);
        let attained = vec_norm(&av.view()) / vec_norm(&v.view());
        assert!((attained - smax).abs() < 1e-10 * smax);
    }
}
