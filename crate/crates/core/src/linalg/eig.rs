//! Eigenvalues of dense complex matrices: Osborne balancing,
//! Householder reduction to upper Hessenberg form, then a single-shift
//! QR iteration with Wilkinson shifts (the classical COMQR scheme).

use super::lu::LuFactor;
use super::{start_vector, vec_norm};
use crate::error::{Error, Result};
use ndarray::{Array1, Array2, ArrayView2};
use num_complex::Complex64;

/// All eigenvalues, sorted by ascending real part (ties by imaginary
/// part). Balancing and the QR sweep are similarity transforms, so the
/// spectrum is that of the input matrix.
pub fn eigenvalues(a: &ArrayView2<Complex64>) -> Result<Vec<Complex64>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    if n == 0 {
        return Ok(vec![]);
    }
    let mut h = a.to_owned();
    balance(&mut h);
    hessenberg(&mut h);
    let mut eigs = qr_hessenberg(h)?;
    eigs.sort_by(|x, y| {
        x.re.partial_cmp(&y.re)
            .unwrap()
            .then(x.im.partial_cmp(&y.im).unwrap())
    });
    Ok(eigs)
}

/// Eigenvector for a known (simple) eigenvalue via shifted inverse
/// iteration on the original matrix.
pub fn eigenvector(a: &ArrayView2<Complex64>, lambda: Complex64) -> Result<Array1<Complex64>> {
    let n = a.nrows();
    let scale = super::norm_fro(a) / (n as f64).sqrt();
    // Tiny complex offset keeps the shifted matrix invertible.
    let shift = lambda + Complex64::new(1e-12 * scale, 1e-12 * scale);
    let mut m = a.to_owned();
    for i in 0..n {
        m[[i, i]] -= shift;
    }
    let lu = LuFactor::new(&m.view())?;
    let mut v = start_vector(n, 23);
    for _ in 0..8 {
        let w = lu.solve(&v.view());
        let nrm = vec_norm(&w.view());
        if !nrm.is_finite() || nrm == 0.0 {
            break;
        }
        v = w / Complex64::new(nrm, 0.0);
    }
    Ok(v)
}

/// Osborne balancing in powers of two (similarity by a diagonal
/// matrix); improves eigenvalue accuracy for badly graded matrices
/// like spectral differentiation operators.
fn balance(a: &mut Array2<Complex64>) {
    let n = a.nrows();
    let radix = 2.0f64;
    for _ in 0..100 {
        let mut converged = true;
        for i in 0..n {
            let mut c: f64 = (0..n).filter(|&j| j != i).map(|j| a[[j, i]].norm()).sum();
            let mut r: f64 = (0..n).filter(|&j| j != i).map(|j| a[[i, j]].norm()).sum();
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            while c < r / radix {
                c *= radix;
                r /= radix;
                f *= radix;
            }
            while c >= r * radix {
                c /= radix;
                r *= radix;
                f /= radix;
            }
            if c + r < 0.95 * s && f != 1.0 {
                converged = false;
                let inv = 1.0 / f;
                for j in 0..n {
                    a[[i, j]] *= inv;
                }
                for j in 0..n {
                    a[[j, i]] *= f;
                }
            }
        }
        if converged {
            break;
        }
    }
}

/// In-place Householder reduction to upper Hessenberg form.
fn hessenberg(a: &mut Array2<Complex64>) {
    let n = a.nrows();
    for k in 0..n.saturating_sub(2) {
        let mut xnorm = 0.0f64;
        for i in k + 1..n {
            xnorm += a[[i, k]].norm_sqr();
        }
        let xnorm = xnorm.sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let x0 = a[[k + 1, k]];
        let phase = if x0.norm() > 0.0 {
            x0 / x0.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        // v = x + e^{i arg(x0)} |x| e1  (no cancellation)
        let mut v: Vec<Complex64> = (k + 1..n).map(|i| a[[i, k]]).collect();
        v[0] += phase * xnorm;
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm2;

        // Left: A[k+1.., k..] -= beta v (v^H A[k+1.., k..])
        for j in k..n {
            let mut s = Complex64::new(0.0, 0.0);
            for (t, vi) in v.iter().enumerate() {
                s += vi.conj() * a[[k + 1 + t, j]];
            }
            s *= beta;
            for (t, vi) in v.iter().enumerate() {
                a[[k + 1 + t, j]] -= vi * s;
            }
        }
        // Right: A[.., k+1..] -= beta (A[.., k+1..] v) v^H
        for i in 0..n {
            let mut s = Complex64::new(0.0, 0.0);
            for (t, vi) in v.iter().enumerate() {
                s += a[[i, k + 1 + t]] * vi;
            }
            s *= beta;
            for (t, vi) in v.iter().enumerate() {
                a[[i, k + 1 + t]] -= s * vi.conj();
            }
        }
        // Clean the column below the subdiagonal.
        for i in k + 2..n {
            a[[i, k]] = Complex64::new(0.0, 0.0);
        }
    }
}

/// Shifted QR iteration on an upper Hessenberg matrix; eigenvalues
/// peel off the bottom as subdiagonal entries deflate.
fn qr_hessenberg(mut h: Array2<Complex64>) -> Result<Vec<Complex64>> {
    let n = h.nrows();
    let mut eigs = Vec::with_capacity(n);
    let mut hi = n; // active block is rows/cols [lo, hi)
    let mut iter_since_deflation = 0usize;
    let mut total_iter = 0usize;
    let max_total = 50 * n + 200;
    let eps = f64::EPSILON;

    while hi > 0 {
        if total_iter > max_total {
            return Err(Error::EigenNoConvergence {
                iterations: total_iter,
            });
        }
        // Zero out negligible subdiagonals, then check for deflation.
        for i in 1..hi {
            let s = h[[i - 1, i - 1]].norm() + h[[i, i]].norm();
            let s = if s == 0.0 { 1.0 } else { s };
            if h[[i, i - 1]].norm() <= eps * s {
                h[[i, i - 1]] = Complex64::new(0.0, 0.0);
            }
        }
        if hi == 1 || h[[hi - 1, hi - 2]].norm() == 0.0 {
            eigs.push(h[[hi - 1, hi - 1]]);
            hi -= 1;
            iter_since_deflation = 0;
            continue;
        }
        // Start of the unreduced block ending at hi-1.
        let mut lo = hi - 1;
        while lo > 0 && h[[lo, lo - 1]].norm() != 0.0 {
            lo -= 1;
        }

        // Shift: Wilkinson from the trailing 2x2, with an exceptional
        // shift every 12 stalled iterations.
        let shift = if iter_since_deflation > 0 && iter_since_deflation % 12 == 0 {
            h[[hi - 1, hi - 1]] + Complex64::new(0.75 * h[[hi - 1, hi - 2]].norm(), 0.0)
        } else {
            wilkinson_shift(
                h[[hi - 2, hi - 2]],
                h[[hi - 2, hi - 1]],
                h[[hi - 1, hi - 2]],
                h[[hi - 1, hi - 1]],
            )
        };
        qr_step(&mut h, lo, hi, shift);
        iter_since_deflation += 1;
        total_iter += 1;
    }
    Ok(eigs)
}

fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    // Eigenvalue of [[a,b],[c,d]] closest to d.
    let tr = a + d;
    let det = a * d - b * c;
    let disc = (tr * tr - det * 4.0).sqrt();
    let l1 = (tr + disc) * 0.5;
    let l2 = (tr - disc) * 0.5;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// One explicit single-shift QR step on the block [lo, hi): factor
/// H - mu I = QR with Givens rotations, form RQ + mu I.
fn qr_step(h: &mut Array2<Complex64>, lo: usize, hi: usize, mu: Complex64) {
    let m = hi - lo;
    if m < 2 {
        return;
    }
    for i in lo..hi {
        h[[i, i]] -= mu;
    }
    let mut rots: Vec<(f64, Complex64)> = Vec::with_capacity(m - 1);
    // Left pass: eliminate the subdiagonal.
    for i in lo..hi - 1 {
        let a = h[[i, i]];
        let b = h[[i + 1, i]];
        let (c, s) = givens(a, b);
        rots.push((c, s));
        for j in i..hi {
            let hij = h[[i, j]];
            let h1j = h[[i + 1, j]];
            h[[i, j]] = hij * c + h1j * s;
            h[[i + 1, j]] = -hij * s.conj() + h1j * c;
        }
    }
    // Right pass: multiply by the adjoints, restoring Hessenberg form.
    for (t, &(c, s)) in rots.iter().enumerate() {
        let i = lo + t;
        let top = if i + 2 < hi { i + 2 } else { hi };
        for r in lo..top {
            let hri = h[[r, i]];
            let hri1 = h[[r, i + 1]];
            h[[r, i]] = hri * c + hri1 * s.conj();
            h[[r, i + 1]] = -hri * s + hri1 * c;
        }
    }
    for i in lo..hi {
        h[[i, i]] += mu;
    }
}

/// Complex Givens rotation: returns (c, s), c real, with
/// [c, s; -conj(s), c] [a; b] = [r; 0].
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let an = a.norm();
    let bn = b.norm();
    if bn == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    if an == 0.0 {
        return (0.0, b.conj() / bn);
    }
    let rho = (an * an + bn * bn).sqrt();
    let c = an / rho;
    let s = (a / an) * b.conj() / rho;
    (c, s)
}
