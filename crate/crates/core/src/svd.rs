//! Singular values by one-sided Jacobi.
//!
//! Right-multiplying by plane rotations orthogonalizes the columns; the
//! singular values are the final column norms. Slow but simple, accurate to
//! high relative precision, and indifferent to repeated or zero singular
//! values — the right trade for matrices that stay small.

use crate::error::{Error, Result};
use crate::matrix::{Mat, Scalar};

/// Sweep limit. Convergence is quadratic once rotations get small; a random
/// 200x200 matrix needs well under twenty sweeps.
pub const MAX_SWEEPS: usize = 50;

const OFF_TOL: f64 = 1e-13;

/// Singular values of `a`, sorted in nonincreasing order.
pub fn singular_values<T: Scalar>(a: &Mat<T>) -> Result<Vec<f64>> {
    let n = a.dim();
    // Column-major working copy.
    let mut cols: Vec<Vec<T>> = (0..n)
        .map(|j| (0..n).map(|i| a[(i, j)]).collect())
        .collect();

    let mut converged = false;
    for _sweep in 0..MAX_SWEEPS {
        let mut worst = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = T::zero();
                for i in 0..n {
                    let cp = cols[p][i];
                    let cq = cols[q][i];
                    alpha += cp.abs_sq();
                    beta += cq.abs_sq();
                    gamma = gamma + cp.conj() * cq;
                }
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let g = gamma.abs();
                let rel = g / (alpha * beta).sqrt();
                worst = worst.max(rel);
                if rel <= OFF_TOL {
                    continue;
                }
                // Phase-align column q so the pair has a real positive inner
                // product, then apply the classic symmetric Jacobi rotation.
                let w = gamma.conj().scale(1.0 / g);
                let tau = (beta - alpha) / (2.0 * g);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..n {
                    let cp = cols[p][i];
                    let cq = cols[q][i] * w;
                    cols[p][i] = cp.scale(c) - cq.scale(s);
                    cols[q][i] = cp.scale(s) + cq.scale(c);
                }
            }
        }
        if worst <= OFF_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numerical(format!(
            "one-sided jacobi failed to converge in {MAX_SWEEPS} sweeps"
        )));
    }

    let mut sigma: Vec<f64> = cols
        .iter()
        .map(|col| col.iter().map(|x| x.abs_sq()).sum::<f64>().sqrt())
        .collect();
    sigma.sort_by(|a, b| b.total_cmp(a));
    Ok(sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use num_complex::Complex64;

    #[test]
    fn identity_and_spike() {
        let id = Mat::<f64>::identity(6);
        let s = singular_values(&id).unwrap();
        assert!(s.iter().all(|&x| (x - 1.0).abs() < 1e-14));

        let n = 9usize;
        let mut spike = Mat::<f64>::zeros(n);
        spike[(0, 0)] = (n as f64).sqrt();
        let s = singular_values(&spike).unwrap();
        assert!((s[0] - 3.0).abs() < 1e-14);
        assert!(s[1..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn known_two_by_two() {
        // A^T A = [[25,20],[20,25]] has eigenvalues 45 and 5.
        let a = Mat::from_rows(vec![vec![3.0, 0.0], vec![4.0, 5.0]]).unwrap();
        let s = singular_values(&a).unwrap();
        assert!((s[0] - 45f64.sqrt()).abs() < 1e-12);
        assert!((s[1] - 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn complex_golden_pair() {
        // [[1, i], [0, 1]] has singular values phi and 1/phi.
        let a = Mat::from_rows(vec![
            vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)],
            vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        ])
        .unwrap();
        let s = singular_values(&a).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((s[0] - phi).abs() < 1e-12);
        assert!((s[1] - 1.0 / phi).abs() < 1e-12);
    }

    #[test]
    fn repeated_and_zero_values_accepted() {
        let a = Mat::<f64>::from_diag(&[2.0, 2.0, 0.0]);
        let s = singular_values(&a).unwrap();
        assert_eq!(s, vec![2.0, 2.0, 0.0]);
    }

    #[test]
    fn squares_sum_to_frobenius() {
        let mut rng = RngStream::new(5, 0);
        for n in [3usize, 8, 20] {
            let mut rows = Vec::new();
            for _ in 0..n {
                rows.push((0..n).map(|_| rng.normal()).collect());
            }
            let a = Mat::<f64>::from_rows(rows).unwrap();
            let s = singular_values(&a).unwrap();
            let sum: f64 = s.iter().map(|x| x * x).sum();
            let fro = a.frobenius_norm().powi(2);
            assert!(
                (sum - fro).abs() <= 1e-8 * fro.max(1.0),
                "n={n}: {sum} vs {fro}"
            );
            for w in s.windows(2) {
                assert!(w[0] >= w[1]);
            }
        }
    }
}
