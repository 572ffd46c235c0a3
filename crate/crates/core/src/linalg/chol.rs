//! Cholesky factorization of real SPD Gram matrices plus the
//! triangular products/solves used to turn weighted operator norms
//! into ordinary singular-value problems.

use crate::error::{Error, Result};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use num_complex::Complex64;

/// Lower-triangular Cholesky factor of a real symmetric positive
/// definite matrix.
pub fn cholesky(a: &ArrayView2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut d = a[[j, j]];
        for k in 0..j {
            d -= l[[j, k]] * l[[j, k]];
        }
        if d <= 0.0 {
            return Err(Error::Singular { pivot: d.max(0.0) });
        }
        let dj = d.sqrt();
        l[[j, j]] = dj;
        for i in j + 1..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / dj;
        }
    }
    Ok(l)
}

/// Solve `L y = b` for complex `b` with real lower-triangular `L`.
pub fn solve_lower_real(l: &ArrayView2<f64>, b: &ArrayView1<Complex64>) -> Array1<Complex64> {
    let n = l.nrows();
    let mut y = b.to_owned();
    for i in 0..n {
        let mut s = y[i];
        for j in 0..i {
            s -= l[[i, j]] * y[j];
        }
        y[i] = s / l[[i, i]];
    }
    y
}

/// `L^T K` for real lower-triangular `L` and complex `K`.
pub fn tri_left_mul_transpose(l: &ArrayView2<f64>, k: &ArrayView2<Complex64>) -> Array2<Complex64> {
    let n = l.nrows();
    let m = k.ncols();
    let mut out = Array2::<Complex64>::zeros((n, m));
    // (L^T)[i, t] = L[t, i], nonzero for t >= i
    for i in 0..n {
        for t in i..n {
            let lti = l[[t, i]];
            if lti == 0.0 {
                continue;
            }
            for j in 0..m {
                out[[i, j]] += lti * k[[t, j]];
            }
        }
    }
    out
}

/// `M (L^T)^{-1}` for complex `M` and real lower-triangular `L`
/// (solved as `L Z = M^T`, returning `Z^T`).
pub fn tri_right_solve_transpose(
    m: &ArrayView2<Complex64>,
    l: &ArrayView2<f64>,
) -> Array2<Complex64> {
    let rows = m.nrows();
    let n = l.nrows();
    assert_eq!(m.ncols(), n);
    let mut out = Array2::<Complex64>::zeros((rows, n));
    for r in 0..rows {
        // solve L z = m_row^T by forward substitution
        let mut z: Vec<Complex64> = m.row(r).to_vec();
        for i in 0..n {
            let mut s = z[i];
            for j in 0..i {
                s -= l[[i, j]] * z[j];
            }
            z[i] = s / l[[i, i]];
        }
        for i in 0..n {
            out[[r, i]] = z[i];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn spd(n: usize) -> Array2<f64> {
        let b = Array2::from_shape_fn((n, n), |(i, j)| ((i * j) as f64 * 0.31).sin() + 0.1);
        let mut a = b.t().dot(&b);
        for i in 0..n {
            a[[i, i]] += n as f64;
        }
        a
    }

    #[test]
    fn factor_reproduces_matrix() {
        let a = spd(12);
        let l = cholesky(&a.view()).unwrap();
        let back = l.dot(&l.t());
        for i in 0..12 {
            for j in 0..12 {
                assert!((back[[i, j]] - a[[i, j]]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn triangular_right_solve_inverts_left_multiply() {
        let a = spd(9);
        let l = cholesky(&a.view()).unwrap();
        let k = Array2::from_shape_fn((9, 9), |(i, j)| {
            Complex64::new((i as f64 - j as f64) * 0.2, (i + j) as f64 * 0.1)
        });
        let m = tri_left_mul_transpose(&l.view(), &k.view());
        let back = tri_right_solve_transpose(&m.view(), &l.view());
        // back = L^T K (L^T)^{-1}; multiply back on the right by L^T
        let lt = l.t().mapv(|x| Complex64::new(x, 0.0));
        let again = back.dot(&lt);
        for i in 0..9 {
            for j in 0..9 {
                assert!((again[[i, j]] - m[[i, j]]).norm() < 1e-9);
            }
        }
    }
}
