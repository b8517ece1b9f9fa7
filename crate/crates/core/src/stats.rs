//! Scalar statistics used by the estimation and certification code: running
//! moments, equal-count bins, weighted line fits, and the standard normal
//! distribution functions.

use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};

pub fn normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

pub fn normal_quantile(p: f64) -> f64 {
    let mut x = Normal::standard().inverse_cdf(p);
    // The library seed is only ~1e-9 accurate; two Newton corrections against
    // our own cdf/pdf pair make cdf(quantile(p)) round-trip to full precision.
    for _ in 0..2 {
        let density = normal_pdf(x);
        if !x.is_finite() || density < f64::MIN_POSITIVE {
            break;
        }
        x -= (normal_cdf(x) - p) / density;
    }
    x
}

pub fn normal_pdf(x: f64) -> f64 {
    Normal::standard().pdf(x)
}

/// Mean, standard error of the mean, and sample count in one pass.
#[derive(Debug, Clone, Copy, Default, serde::Serialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
    pub count: usize,
}

pub fn mean_se(values: &[f64]) -> MeanSe {
    let n = values.len();
    if n == 0 {
        return MeanSe::default();
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return MeanSe { mean, se: 0.0, count: 1 };
    }
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    MeanSe { mean, se: (var / n as f64).sqrt(), count: n }
}

pub fn sample_variance(values: &[f64]) -> f64 {
    let s = mean_se(values);
    if s.count < 2 {
        return 0.0;
    }
    values.iter().map(|x| (x - s.mean).powi(2)).sum::<f64>() / (s.count as f64 - 1.0)
}

/// Weighted least-squares line `y = intercept + slope * x` with per-point
/// standard deviations; returns propagated standard errors. Points with
/// zero sigma get the smallest positive sigma present.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    pub se_intercept: f64,
    pub se_slope: f64,
}

pub fn wls_line(x: &[f64], y: &[f64], sigma: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() != sigma.len() {
        return Err(Error::Dimension("wls_line inputs must have equal length".into()));
    }
    if x.len() < 2 {
        return Err(Error::Estimation("line fit needs at least two points".into()));
    }
    let floor = sigma
        .iter()
        .copied()
        .filter(|s| *s > 0.0)
        .fold(f64::INFINITY, f64::min);
    let floor = if floor.is_finite() { floor } else { 1.0 };

    let (mut s0, mut sx, mut sxx, mut sy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..x.len() {
        let s = if sigma[i] > 0.0 { sigma[i] } else { floor };
        let w = 1.0 / (s * s);
        s0 += w;
        sx += w * x[i];
        sxx += w * x[i] * x[i];
        sy += w * y[i];
        sxy += w * x[i] * y[i];
    }
    let det = s0 * sxx - sx * sx;
    if det.abs() <= 1e-300 || !det.is_finite() {
        return Err(Error::Estimation("degenerate design in line fit".into()));
    }
    Ok(LineFit {
        intercept: (sxx * sy - sx * sxy) / det,
        slope: (s0 * sxy - sx * sy) / det,
        se_intercept: (sxx / det).sqrt(),
        se_slope: (s0 / det).sqrt(),
    })
}

/// Equal-count bin edges from a sample: `bins + 1` edges at empirical
/// quantiles, with the outer edges pushed to infinity so every value lands
/// in a bin.
#[derive(Debug, Clone)]
pub struct Bins {
    edges: Vec<f64>,
}

impl Bins {
    pub fn equal_count(values: &[f64], bins: usize) -> Result<Bins> {
        if bins < 2 {
            return Err(Error::InvalidParameter("need at least two bins".into()));
        }
        if values.len() < 2 * bins {
            return Err(Error::Estimation(format!(
                "{} samples cannot fill {} bins",
                values.len(),
                bins
            )));
        }
        let mut sorted: Vec<f64> = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut edges = Vec::with_capacity(bins + 1);
        edges.push(f64::NEG_INFINITY);
        for b in 1..bins {
            let idx = (b * sorted.len()) / bins;
            edges.push(sorted[idx]);
        }
        edges.push(f64::INFINITY);
        Ok(Bins { edges })
    }

    pub fn count(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn index(&self, x: f64) -> usize {
        // edges[b] <= x < edges[b+1]
        match self.edges[1..self.edges.len() - 1]
            .binary_search_by(|e| e.total_cmp(&x))
        {
            Ok(i) => (i + 1).min(self.count() - 1),
            Err(i) => i,
        }
    }

    /// Group sample indices by bin, in input order.
    pub fn partition(&self, values: &[f64]) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.count()];
        for (k, &v) in values.iter().enumerate() {
            out[self.index(v)].push(k);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_functions_sane() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((normal_quantile(0.5)).abs() < 1e-9);
        assert!((normal_pdf(0.0) - 1.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-15);
        let x = 1.234;
        assert!((normal_cdf(normal_quantile(normal_cdf(x))) - normal_cdf(x)).abs() < 1e-12);
    }

    #[test]
    fn line_fit_recovers_exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let s = [0.1, 0.1, 0.1, 0.1];
        let fit = wls_line(&x, &y, &s).unwrap();
        assert!((fit.intercept - 1.0).abs() < 1e-12);
        assert!((fit.slope - 2.0).abs() < 1e-12);
    }

    #[test]
    fn equal_count_bins_balance() {
        let values: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.7919).sin()).collect();
        let bins = Bins::equal_count(&values, 10).unwrap();
        let parts = bins.partition(&values);
        for p in &parts {
            assert!(p.len() >= 90 && p.len() <= 110, "unbalanced bin {}", p.len());
        }
        let total: usize = parts.iter().map(Vec::len).sum();
        assert_eq!(total, values.len());
    }

    #[test]
    fn bin_index_edges() {
        let values: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let bins = Bins::equal_count(&values, 4).unwrap();
        assert_eq!(bins.index(f64::NEG_INFINITY.min(-1e300)), 0);
        assert_eq!(bins.index(1e300), 3);
    }
}
