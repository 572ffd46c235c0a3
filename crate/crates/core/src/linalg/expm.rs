//! Matrix exponential by Pade approximation with scaling and squaring
//! (Higham 2005), for dense complex matrices.

use super::lu::LuFactor;
use super::norm_one;
use crate::error::Result;
use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;

const THETA_3: f64 = 1.495585217958292e-2;
const THETA_5: f64 = 2.539398330063230e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068;
const THETA_13: f64 = 5.371920351148152;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn eye(n: usize) -> Array2<Complex64> {
    let mut id = Array2::zeros((n, n));
    for i in 0..n {
        id[[i, i]] = Complex64::new(1.0, 0.0);
    }
    id
}

/// `exp(A)` for a square complex matrix.
pub fn expm(a: &ArrayView2<Complex64>) -> Result<Array2<Complex64>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let nrm = norm_one(a);

    if nrm <= THETA_9 {
        let coeffs: &[f64] = if nrm <= THETA_3 {
            &B3
        } else if nrm <= THETA_5 {
            &B5
        } else if nrm <= THETA_7 {
            &B7
        } else {
            &B9
        };
        let a_own = a.to_owned();
        return pade_low(&a_own, coeffs);
    }

    let s = ((nrm / THETA_13).log2().ceil()).max(0.0) as u32;
    let scale = (0.5f64).powi(s as i32);
    let a_s = a.mapv(|z| z * scale);
    let mut e = pade13(&a_s)?;
    for _ in 0..s {
        e = e.dot(&e);
    }
    Ok(e)
}

/// Pade of order 3/5/7/9: U = A * sum_odd b_k A^{k-1}, V = sum_even.
fn pade_low(a: &Array2<Complex64>, b: &[f64]) -> Result<Array2<Complex64>> {
    let n = a.nrows();
    let id = eye(n);
    let a2 = a.dot(a);
    // Powers of A^2 up to what the coefficient list needs.
    let mut even = id.mapv(|z| z * b[0]);
    let mut odd = id.mapv(|z| z * b[1]);
    let mut p = a2.clone(); // A^{2m}
    let mut k = 2;
    while k < b.len() {
        even = even + p.mapv(|z| z * b[k]);
        if k + 1 < b.len() {
            odd = odd + p.mapv(|z| z * b[k + 1]);
        }
        k += 2;
        if k < b.len() {
            p = p.dot(&a2);
        }
    }
    let u = a.dot(&odd);
    solve_pade(&even, &u)
}

fn pade13(a: &Array2<Complex64>) -> Result<Array2<Complex64>> {
    let b = &B13;
    let a2 = a.dot(a);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);
    let n = a.nrows();
    let id = eye(n);

    let u_inner = a6.mapv(|z| z * b[13]) + a4.mapv(|z| z * b[11]) + a2.mapv(|z| z * b[9]);
    let u_poly = a6.dot(&u_inner)
        + a6.mapv(|z| z * b[7])
        + a4.mapv(|z| z * b[5])
        + a2.mapv(|z| z * b[3])
        + id.mapv(|z| z * b[1]);
    let u = a.dot(&u_poly);

    let v_inner = a6.mapv(|z| z * b[12]) + a4.mapv(|z| z * b[10]) + a2.mapv(|z| z * b[8]);
    let v = a6.dot(&v_inner)
        + a6.mapv(|z| z * b[6])
        + a4.mapv(|z| z * b[4])
        + a2.mapv(|z| z * b[2])
        + id.mapv(|z| z * b[0]);

    solve_pade(&v, &u)
}

/// (V - U)^{-1} (V + U)
fn solve_pade(v: &Array2<Complex64>, u: &Array2<Complex64>) -> Result<Array2<Complex64>> {
    let n = v.nrows();
    let lhs = v - u;
    let rhs = v + u;
    let lu = LuFactor::new(&lhs.view())?;
    let mut out = Array2::zeros((n, n));
    for j in 0..n {
        let col = lu.solve(&rhs.column(j));
        for i in 0..n {
            out[[i, j]] = col[i];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn exponential_of_zero_is_identity() {
        let a = Array2::<Complex64>::zeros((5, 5));
        let e = expm(&a.view()).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((e[[i, j]] - want).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn diagonal_matrix_exponentiates_entrywise() {
        let a = array![
            [Complex64::new(-2.0, 1.0), Complex64::new(0.0, 0.0)],
            [Complex64::new(0.0, 0.0), Complex64::new(0.5, -3.0)]
        ];
        let e = expm(&a.view()).unwrap();
        assert!((e[[0, 0]] - a[[0, 0]].exp()).norm() < 1e-13);
        assert!((e[[1, 1]] - a[[1, 1]].exp()).norm() < 1e-13);
        assert!(e[[0, 1]].norm() < 1e-14);
    }

    #[test]
    fn rotation_generator_gives_sine_cosine() {
        // exp([[0, t],[-t, 0]]) = [[cos t, sin t], [-sin t, cos t]]
        let t = 7.3;
        let a = array![
            [Complex64::new(0.0, 0.0), Complex64::new(t, 0.0)],
            [Complex64::new(-t, 0.0), Complex64::new(0.0, 0.0)]
        ];
        let e = expm(&a.view()).unwrap();
        assert!((e[[0, 0]].re - t.cos()).abs() < 1e-12);
        assert!((e[[0, 1]].re - t.sin()).abs() < 1e-12);
        assert!((e[[1, 0]].re + t.sin()).abs() < 1e-12);
    }

    #[test]
    fn large_norm_path_agrees_with_squared_small_norm_path() {
        // exp(A) == exp(A/2)^2 exercises the scaling branch against
        // the direct Pade branch.
        let n = 8;
        let a = Array2::from_shape_fn((n, n), |(i, j)| {
            Complex64::new(
                ((i * 3 + j) as f64 * 0.41).sin() * 2.0,
                ((i + 2 * j) as f64 * 0.23).cos(),
            )
        });
        let e = expm(&a.view()).unwrap();
        let half = a.mapv(|z| z * 0.5);
        let eh = expm(&half.view()).unwrap();
        let e2 = eh.dot(&eh);
        let mut err = 0.0f64;
        let mut scale = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                err = err.max((e[[i, j]] - e2[[i, j]]).norm());
                scale = scale.max(e[[i, j]].norm());
            }
        }
        assert!(err < 1e-11 * scale, "err {err} scale {scale}");
    }
}
