//! Householder QR for square real or complex matrices.
//!
//! The factorization is normalized so the diagonal of R is real and
//! strictly positive, which makes it unique for full-rank input. That
//! normalization is not cosmetic: mapping a Gaussian matrix through QR
//! gives group-invariant output only under this convention, because the
//! raw reflector signs bias the distribution of Q.

use crate::error::{Error, Result};
use crate::matrix::{Mat, Scalar};

pub struct QrFactors<T> {
    pub q: Mat<T>,
    pub r: Mat<T>,
    /// Smallest |r_jj| before sign normalization; a rank probe.
    pub min_pivot: f64,
}

/// Factor `a = q * r` with unitary `q` and upper-triangular `r` whose
/// diagonal is real and nonnegative.
pub fn householder_qr<T: Scalar>(a: &Mat<T>) -> QrFactors<T> {
    let n = a.dim();
    let mut r = a.clone();
    // Reflector k maps column k of the reduced matrix onto the axis; store
    // (v, 2/||v||^2) and apply H = I - c v v^H.
    let mut reflectors: Vec<Option<(Vec<T>, f64)>> = Vec::with_capacity(n);

    for k in 0..n {
        let norm = (k..n).map(|i| r[(i, k)].abs_sq()).sum::<f64>().sqrt();
        if norm == 0.0 {
            reflectors.push(None);
            continue;
        }
        let alpha = r[(k, k)];
        let phase = if alpha.abs() == 0.0 {
            T::one()
        } else {
            alpha.scale(1.0 / alpha.abs())
        };
        // v = x + phase * ||x|| * e1 avoids cancellation for any field.
        let mut v: Vec<T> = (k..n).map(|i| r[(i, k)]).collect();
        v[0] = v[0] + phase.scale(norm);
        let vnorm_sq: f64 = v.iter().map(|x| x.abs_sq()).sum();
        if vnorm_sq == 0.0 {
            reflectors.push(None);
            continue;
        }
        let c = 2.0 / vnorm_sq;
        for j in k..n {
            let mut s = T::zero();
            for (t, i) in (k..n).enumerate() {
                s = s + v[t].conj() * r[(i, j)];
            }
            let s = s.scale(c);
            for (t, i) in (k..n).enumerate() {
                r[(i, j)] = r[(i, j)] - v[t] * s;
            }
        }
        reflectors.push(Some((v, c)));
    }

    // Q = H_0 H_1 ... H_{n-1}; accumulate right-to-left onto the identity.
    // After applying H_{k+1}.., columns < k+1 of Q are still unit vectors
    // with no mass in rows >= k, so restricting to columns k.. is exact.
    let mut q = Mat::<T>::identity(n);
    for k in (0..n).rev() {
        if let Some((v, c)) = &reflectors[k] {
            for j in k..n {
                let mut s = T::zero();
                for (t, i) in (k..n).enumerate() {
                    s = s + v[t].conj() * q[(i, j)];
                }
                let s = s.scale(*c);
                for (t, i) in (k..n).enumerate() {
                    q[(i, j)] = q[(i, j)] - v[t] * s;
                }
            }
        }
    }

    // Positive-diagonal normalization: R <- D^{-1} R, Q <- Q D with
    // D = diag(r_jj / |r_jj|).
    let mut min_pivot = f64::INFINITY;
    for j in 0..n {
        let d = r[(j, j)];
        let mag = d.abs();
        min_pivot = min_pivot.min(mag);
        if mag == 0.0 {
            continue;
        }
        let lambda = d.scale(1.0 / mag);
        for jj in j..n {
            r[(j, jj)] = r[(j, jj)] * lambda.conj();
        }
        for i in 0..n {
            q[(i, j)] = q[(i, j)] * lambda;
        }
    }

    QrFactors { q, r, min_pivot }
}

/// QR with a rank check: fails if any pivot falls below
/// `1e-13 * ||a||_F`, the signature of numerically dependent columns.
pub fn householder_qr_full_rank<T: Scalar>(a: &Mat<T>) -> Result<QrFactors<T>> {
    let scale = a.frobenius_norm();
    if scale == 0.0 {
        return Err(Error::DegenerateInput("zero matrix has no QR orientation".into()));
    }
    let f = householder_qr(a);
    if f.min_pivot <= 1e-13 * scale {
        return Err(Error::DegenerateInput(format!(
            "rank-deficient input: smallest QR pivot {:.3e} vs scale {:.3e}",
            f.min_pivot, scale
        )));
    }
    Ok(f)
}
