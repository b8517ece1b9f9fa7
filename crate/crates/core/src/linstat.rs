//! Linear trace statistics `W = tr(A M)` of a Haar matrix `M`.
//!
//! Coefficient matrices are normalized to `tr(A A^*) = n`, which fixes
//! `Var W = 1` on the orthogonal group and `E|W|^2 = 1` on the unitary
//! group. Since `tr(A M)` has the same distribution as `tr(D M)` for the
//! diagonal `D` of singular values of `A`, campaigns may reduce to the
//! diagonal case; [`CoefficientMatrix::reduced`] performs that reduction.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::haar::sample_haar;
use crate::matrix::{Group, Mat, Scalar};
use crate::rng::parallel_batch;
use crate::svd::singular_values;

/// Normalized coefficient matrix of a linear statistic.
#[derive(Debug, Clone)]
pub struct CoefficientMatrix<T: Scalar> {
    mat: Mat<T>,
    label: String,
    diagonal: bool,
    singular: Option<Vec<f64>>,
}

const NORM_RTOL: f64 = 1e-10;

impl<T: Scalar> CoefficientMatrix<T> {
    /// Scale `a` so that `tr(a a^*) = n`. Rejects zero or non-finite input.
    pub fn normalize(mut a: Mat<T>, label: impl Into<String>) -> Result<Self> {
        let n = a.dim();
        if !a.all_finite() {
            return Err(Error::Normalization("coefficient matrix has non-finite entries".into()));
        }
        // Sum |a_ij|^2 directly (no sqrt round trip) so already-normalized
        // input — the identity above all — is rescaled by exactly 1.
        let fro2: f64 = a.data().iter().map(|v| v.abs_sq()).sum();
        if fro2 == 0.0 {
            return Err(Error::Normalization("zero coefficient matrix cannot be normalized".into()));
        }
        a.scale_in_place((n as f64 / fro2).sqrt());
        let achieved: f64 = a.data().iter().map(|v| v.abs_sq()).sum();
        if ((achieved - n as f64) / n as f64).abs() > NORM_RTOL {
            return Err(Error::Normalization(format!(
                "normalization drifted: tr(AA*) = {achieved} for n = {n}"
            )));
        }
        let diagonal = is_diagonal(&a);
        Ok(CoefficientMatrix { mat: a, label: label.into(), diagonal, singular: None })
    }

    pub fn matrix(&self) -> &Mat<T> {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn group(&self) -> Group {
        match T::FIELD {
            crate::matrix::Field::Real => Group::Orthogonal,
            crate::matrix::Field::Complex => Group::Unitary,
        }
    }

    pub fn is_diagonal(&self) -> bool {
        self.diagonal
    }

    /// Singular values, nonincreasing; computed on first use and cached.
    pub fn singular_values(&mut self) -> Result<&[f64]> {
        if self.singular.is_none() {
            let s = if self.diagonal {
                let mut d: Vec<f64> = (0..self.dim()).map(|i| self.mat[(i, i)].abs()).collect();
                d.sort_by(|a, b| b.total_cmp(a));
                d
            } else {
                singular_values(&self.mat)?
            };
            self.singular = Some(s);
        }
        Ok(self.singular.as_deref().unwrap())
    }

    /// Diagonal reduction `diag(singular values)`, normalized like `self`
    /// (the squares already sum to n). `tr(A M)` and `tr(reduced(A) M)` are
    /// equal in distribution over Haar `M`.
    pub fn reduced(&mut self) -> Result<CoefficientMatrix<T>> {
        let s = self.singular_values()?.to_vec();
        CoefficientMatrix::normalize(Mat::from_diag(&s), format!("{}-reduced", self.label))
    }

    /// `W = tr(A M)`, computed as `sum_ij a_ij m_ji` without forming the
    /// product matrix.
    pub fn trace_statistic(&self, m: &Mat<T>) -> Result<T> {
        let n = self.dim();
        if m.dim() != n {
            return Err(Error::Dimension(format!(
                "statistic needs matching dimensions, got A: {n}, M: {}",
                m.dim()
            )));
        }
        let mut w = T::zero();
        if self.diagonal {
            for i in 0..n {
                w = w + self.mat[(i, i)] * m[(i, i)];
            }
        } else {
            for i in 0..n {
                for j in 0..n {
                    w = w + self.mat[(i, j)] * m[(j, i)];
                }
            }
        }
        Ok(w)
    }

    /// `tr((A M)^2)`, the quantity entering the closed-form error statistics.
    pub fn trace_statistic_squared_matrix(&self, m: &Mat<T>) -> Result<T> {
        let n = self.dim();
        if m.dim() != n {
            return Err(Error::Dimension("dimension mismatch".into()));
        }
        if self.diagonal {
            // (AM)_{ij} = a_i m_ij, so tr((AM)^2) = sum_ij a_i a_j m_ij m_ji.
            let mut t = T::zero();
            for i in 0..n {
                let ai = self.mat[(i, i)];
                for j in 0..n {
                    t = t + ai * self.mat[(j, j)] * m[(i, j)] * m[(j, i)];
                }
            }
            Ok(t)
        } else {
            let am = self.mat.mul(m);
            let mut t = T::zero();
            for i in 0..n {
                for j in 0..n {
                    t = t + am[(i, j)] * am[(j, i)];
                }
            }
            Ok(t)
        }
    }
}

fn is_diagonal<T: Scalar>(a: &Mat<T>) -> bool {
    let n = a.dim();
    for i in 0..n {
        for j in 0..n {
            if i != j && a[(i, j)] != T::zero() {
                return false;
            }
        }
    }
    true
}

/// Named coefficient presets used by campaigns and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// `A = I_n`: the raw trace.
    Identity,
    /// `A = diag(sqrt(n), 0, ..., 0)`: a single spiked direction, which makes
    /// `W` the first coordinate of a point on the radius-sqrt(n) sphere.
    Spike,
    /// Diagonal with standard normal draws, then normalized.
    RandomDiag,
}

impl std::str::FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Preset::Identity),
            "spike" => Ok(Preset::Spike),
            "random-diag" => Ok(Preset::RandomDiag),
            other => Err(Error::Parse(format!("unknown preset {other:?}"))),
        }
    }
}

impl std::fmt::Display for Preset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Preset::Identity => "identity",
            Preset::Spike => "spike",
            Preset::RandomDiag => "random-diag",
        })
    }
}

pub fn preset_matrix<T: Scalar>(preset: Preset, n: usize, seed: u64) -> Result<CoefficientMatrix<T>> {
    if n == 0 {
        return Err(Error::Dimension("preset dimension must be at least 1".into()));
    }
    match preset {
        Preset::Identity => {
            CoefficientMatrix::normalize(Mat::<T>::identity(n), "identity")
        }
        Preset::Spike => {
            let mut d = vec![0.0; n];
            d[0] = (n as f64).sqrt();
            CoefficientMatrix::normalize(Mat::<T>::from_diag(&d), "spike")
        }
        Preset::RandomDiag => {
            let mut rng = crate::rng::RngStream::new(seed, u64::MAX - 1);
            let d: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
            CoefficientMatrix::normalize(Mat::<T>::from_diag(&d), format!("random-diag-{seed}"))
        }
    }
}

/// Projection of a complex statistic onto the direction `theta`:
/// `W_theta = cos(theta) Re W + sin(theta) Im W = Re(e^{-i theta} W)`.
pub fn project_theta(w: Complex64, theta: f64) -> f64 {
    theta.cos() * w.re + theta.sin() * w.im
}

/// A batch of statistic values over independent Haar samples.
#[derive(Debug, Clone)]
pub struct StatisticSample<T> {
    pub values: Vec<T>,
    pub n: usize,
    pub label: String,
}

impl StatisticSample<Complex64> {
    pub fn project(&self, theta: f64) -> Vec<f64> {
        self.values.iter().map(|&w| project_theta(w, theta)).collect()
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|w| w.re).collect()
    }
}

/// Draw `count` Haar matrices and evaluate the statistic; deterministic in
/// `(seed, base_stream)`, independent of worker count.
pub fn sample_statistic_batch<T: Scalar>(
    a: &CoefficientMatrix<T>,
    count: usize,
    seed: u64,
    base_stream: u64,
) -> Result<StatisticSample<T>> {
    if count == 0 {
        return Err(Error::InvalidParameter("batch count must be positive".into()));
    }
    let n = a.dim();
    let values = parallel_batch(seed, base_stream, count, |rng, _| {
        let m = sample_haar::<T>(n, rng).expect("gaussian input is full rank");
        a.trace_statistic(&m).expect("dimensions agree by construction")
    });
    for v in &values {
        if !v.is_finite_num() {
            return Err(Error::Numerical("non-finite statistic value in batch".into()));
        }
    }
    Ok(StatisticSample { values, n, label: a.label().to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::mean_se;

    #[test]
    fn normalize_scales_and_validates() {
        let a = CoefficientMatrix::normalize(Mat::<f64>::identity(7), "id").unwrap();
        assert!((a.matrix().frobenius_norm().powi(2) - 7.0).abs() < 1e-12);
        let two = {
            let mut m = Mat::<f64>::identity(3);
            m.scale_in_place(2.0);
            m
        };
        let b = CoefficientMatrix::normalize(two, "2id").unwrap();
        assert!((b.matrix()[(0, 0)] - 1.0).abs() < 1e-14);
        assert!(CoefficientMatrix::normalize(Mat::<f64>::zeros(3), "zero").is_err());
    }

    #[test]
    fn preset_shapes() {
        let spike = preset_matrix::<f64>(Preset::Spike, 9, 0).unwrap();
        assert!((spike.matrix()[(0, 0)] - 3.0).abs() < 1e-14);
        let mut spike = spike;
        let sv = spike.singular_values().unwrap();
        assert!((sv[0] - 3.0).abs() < 1e-12);
        assert!(sv[1..].iter().all(|&x| x == 0.0));

        let rd = preset_matrix::<f64>(Preset::RandomDiag, 5, 11).unwrap();
        assert!(rd.is_diagonal());
        assert!((rd.matrix().frobenius_norm().powi(2) - 5.0).abs() < 1e-10);
    }

    #[test]
    fn trace_statistic_edges() {
        let a = preset_matrix::<f64>(Preset::Identity, 4, 0).unwrap();
        assert_eq!(a.trace_statistic(&Mat::identity(4)).unwrap(), 4.0);
        let spike = preset_matrix::<f64>(Preset::Spike, 4, 0).unwrap();
        assert!((spike.trace_statistic(&Mat::identity(4)).unwrap() - 2.0).abs() < 1e-14);
        assert!(a.trace_statistic(&Mat::identity(5)).is_err());
    }

    #[test]
    fn projection_phase_identity() {
        // W_theta(c w) = W_{theta - arg c}(w) up to floating rounding.
        let w = Complex64::new(0.7, -1.3);
        let c = Complex64::from_polar(1.0, 0.9);
        for k in 0..8 {
            let theta = k as f64 * 0.7853981633974483;
            let lhs = project_theta(c * w, theta);
            let rhs = project_theta(w, theta - 0.9);
            assert!((lhs - rhs).abs() <= 1e-13 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
        }
        assert_eq!(project_theta(w, 0.0), w.re);
    }

    #[test]
    fn batch_variance_is_unit() {
        // Var tr(M) = 1 on O(3); estimate over 10^6 draws with an empirical
        // standard error for the variance itself.
        let a = preset_matrix::<f64>(Preset::Identity, 3, 0).unwrap();
        let batch = sample_statistic_batch(&a, 1_000_000, 77, 0).unwrap();
        let m = mean_se(&batch.values);
        let centered_sq: Vec<f64> = batch.values.iter().map(|x| (x - m.mean).powi(2)).collect();
        let v = mean_se(&centered_sq);
        assert!(
            (v.mean - 1.0).abs() <= 4.0 * v.se,
            "variance {} +- {}",
            v.mean,
            v.se
        );
    }

    #[test]
    fn trace_mixture_on_o2() {
        // On O(2) the trace is 0 on the reflection component (probability
        // 1/2) and 2cos(theta) on rotations; check the atom's weight.
        let a = preset_matrix::<f64>(Preset::Identity, 2, 0).unwrap();
        let batch = sample_statistic_batch(&a, 100_000, 13, 0).unwrap();
        let zeros = batch.values.iter().filter(|x| x.abs() < 1e-10).count();
        let frac = zeros as f64 / batch.values.len() as f64;
        let se = 0.5 / (batch.values.len() as f64).sqrt();
        assert!((frac - 0.5).abs() <= 4.0 * se, "reflection weight {frac}");
    }

    #[test]
    fn reduction_preserves_normalization() {
        let mut rng = crate::rng::RngStream::new(3, 9);
        let mut rows = Vec::new();
        for _ in 0..6 {
            rows.push((0..6).map(|_| rng.normal()).collect());
        }
        let mut a = CoefficientMatrix::normalize(Mat::<f64>::from_rows(rows).unwrap(), "g").unwrap();
        let d = a.reduced().unwrap();
        assert!(d.is_diagonal());
        assert!((d.matrix().frobenius_norm().powi(2) - 6.0).abs() < 1e-9);
    }
}
