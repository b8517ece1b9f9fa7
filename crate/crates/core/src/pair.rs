//! Exchangeable pairs of linear trace statistics under small random
//! rotations, and the three conditions of the abstract normal-approximation
//! theorem.
//!
//! A Haar matrix `M` is paired with `M_ε = H A_ε H* M`, where `H` is an
//! independent Haar matrix and `A_ε` rotates the first two coordinates by
//! the angle `arcsin ε`. Since `A_ε − I` has rank two, the perturbation sees
//! `H` only through its first two columns `K`: writing `B` for the top-left
//! 2×2 block of `A_ε − I`,
//!
//! ```text
//! M_ε = M + K B K* M,
//! W_ε − W = tr(A K B K* M) = tr(B S),   S = K* M A K  (2×2),
//! ```
//!
//! so each draw costs two matrix–vector products after the samples exist.
//! With `c = √(1−ε²)` and `C₂ = [[0,1],[−1,0]]`, `B = (c−1)I₂ + εC₂` and
//!
//! ```text
//! Δ = (c−1)(S₀₀ + S₁₁) + ε(S₁₀ − S₀₁).
//! ```
//!
//! The two terms play different roles: the `(c−1)` part carries the O(ε²)
//! conditional mean, the `ε` part the O(ε) fluctuation. Averaging `Δ` over
//! `H` and `H·diag(−1,1,…,1)` — which only flips the sign of the first
//! column of `K`, hence of `S₀₁` and `S₁₀` — cancels the fluctuation term
//! exactly and leaves `Δ_sym = (c−1)(S₀₀+S₁₁)`, whose conditional mean
//! given `M` is `(c−1)(2/n)W` with no remainder. The drift estimator uses
//! this antithetic average; the quadratic and third-moment conditions use
//! the raw `Δ`.

use crate::error::{Error, Result};
use crate::haar::{group_residual, sample_haar};
use crate::linstat::CoefficientMatrix;
use crate::matrix::{Field, Group, Mat, Scalar};
use crate::rng::{parallel_batch, RngStream};
use crate::stats::{mean_se, wls_line, Bins, MeanSe};

/// Minimum draws per (bin, ε) cell for conditional-mean estimates.
pub const MIN_BIN_COUNT: usize = 100;

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "rotation size must lie strictly between 0 and 1, got {epsilon}"
        )));
    }
    Ok(())
}

fn check_pair_dim(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Dimension(format!(
            "the pair construction needs two columns to rotate, got n = {n}"
        )));
    }
    Ok(())
}

/// An orthonormal 2-frame: the first two columns of a group element, or a
/// direct draw from the invariant distribution on such frames.
#[derive(Debug, Clone)]
pub struct Frame2<T: Scalar> {
    col0: Vec<T>,
    col1: Vec<T>,
}

fn conj_dot<T: Scalar>(x: &[T], y: &[T]) -> T {
    let mut s = T::zero();
    for (a, b) in x.iter().zip(y) {
        s = s + a.conj() * *b;
    }
    s
}

fn norm<T: Scalar>(x: &[T]) -> f64 {
    x.iter().map(|v| v.abs_sq()).sum::<f64>().sqrt()
}

impl<T: Scalar> Frame2<T> {
    /// Draw a frame from the invariant distribution: Gram–Schmidt applied
    /// to two Gaussian columns, with positive leading coefficients — the
    /// same distribution as the first two columns of a Haar matrix.
    pub fn sample(n: usize, rng: &mut RngStream) -> Result<Self> {
        check_pair_dim(n)?;
        let mut col0: Vec<T> = (0..n).map(|_| rng.gaussian_entry()).collect();
        let mut col1: Vec<T> = (0..n).map(|_| rng.gaussian_entry()).collect();
        let n0 = norm(&col0);
        if n0 < 1e-150 {
            return Err(Error::DegenerateInput("first frame column is numerically zero".into()));
        }
        for v in col0.iter_mut() {
            *v = v.scale(1.0 / n0);
        }
        // Project out col0 twice; one reorthogonalization pass is enough to
        // push the residual to rounding level.
        for _ in 0..2 {
            let p = conj_dot(&col0, &col1);
            for (u, v) in col1.iter_mut().zip(&col0) {
                *u = *u - *v * p;
            }
        }
        let n1 = norm(&col1);
        if n1 < 1e-150 {
            return Err(Error::DegenerateInput("frame columns are numerically collinear".into()));
        }
        for v in col1.iter_mut() {
            *v = v.scale(1.0 / n1);
        }
        Ok(Frame2 { col0, col1 })
    }

    /// First two columns of a group element.
    pub fn from_haar_columns(h: &Mat<T>) -> Result<Self> {
        check_pair_dim(h.dim())?;
        let n = h.dim();
        let col0: Vec<T> = (0..n).map(|i| h[(i, 0)]).collect();
        let col1: Vec<T> = (0..n).map(|i| h[(i, 1)]).collect();
        let f = Frame2 { col0, col1 };
        if f.orthonormality_residual() > 1e-12 {
            return Err(Error::DegenerateInput(format!(
                "matrix columns are not orthonormal (residual {})",
                f.orthonormality_residual()
            )));
        }
        Ok(f)
    }

    pub fn n(&self) -> usize {
        self.col0.len()
    }

    pub fn columns(&self) -> (&[T], &[T]) {
        (&self.col0, &self.col1)
    }

    /// `max |K*K − I₂|`.
    pub fn orthonormality_residual(&self) -> f64 {
        let d0 = (conj_dot(&self.col0, &self.col0) - T::one()).abs();
        let d1 = (conj_dot(&self.col1, &self.col1) - T::one()).abs();
        let x = conj_dot(&self.col0, &self.col1).abs();
        d0.max(d1).max(x)
    }
}

/// The rank-two rotation data: a conjugating group element `H`, its leading
/// 2-frame, and the rotation size.
#[derive(Debug, Clone)]
pub struct RotationPerturbation<T: Scalar> {
    pub epsilon: f64,
    h: Mat<T>,
    k: Frame2<T>,
}

impl<T: Scalar> RotationPerturbation<T> {
    pub fn new(h: Mat<T>, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        check_pair_dim(h.dim())?;
        if group_residual(&h) > 1e-10 * h.dim() as f64 {
            return Err(Error::DegenerateInput(
                "conjugating matrix is not in the group".into(),
            ));
        }
        let k = Frame2::from_haar_columns(&h)?;
        Ok(RotationPerturbation { epsilon, h, k })
    }

    pub fn n(&self) -> usize {
        self.h.dim()
    }

    pub fn conjugator(&self) -> &Mat<T> {
        &self.h
    }

    pub fn frame(&self) -> &Frame2<T> {
        &self.k
    }

    /// The plane rotation `A_ε` this perturbation conjugates.
    pub fn rotation(&self) -> Mat<T> {
        build_rotation(self.n(), self.epsilon).expect("validated at construction")
    }

    pub fn apply(&self, m: &Mat<T>) -> Result<Mat<T>> {
        apply_frame_rotation(m, &self.k, self.epsilon)
    }
}

/// The block rotation `A_ε`: identity except for the top-left block
/// `[[√(1−ε²), ε], [−ε, √(1−ε²)]]`.
pub fn build_rotation<T: Scalar>(n: usize, epsilon: f64) -> Result<Mat<T>> {
    check_epsilon(epsilon)?;
    check_pair_dim(n)?;
    let c = (1.0 - epsilon * epsilon).sqrt();
    let mut a = Mat::<T>::identity(n);
    a[(0, 0)] = T::from_re(c);
    a[(0, 1)] = T::from_re(epsilon);
    a[(1, 0)] = T::from_re(-epsilon);
    a[(1, 1)] = T::from_re(c);
    Ok(a)
}

/// `M_ε = M + K B K* M`, the rank-two form of `H A_ε H* M`.
fn apply_frame_rotation<T: Scalar>(m: &Mat<T>, k: &Frame2<T>, epsilon: f64) -> Result<Mat<T>> {
    check_epsilon(epsilon)?;
    let n = m.dim();
    if k.n() != n {
        return Err(Error::Dimension(format!(
            "frame length {} does not match matrix dimension {n}",
            k.n()
        )));
    }
    let c1 = T::from_re((1.0 - epsilon * epsilon).sqrt() - 1.0);
    let e = T::from_re(epsilon);
    let (k0, k1) = k.columns();

    // y_r = k_r* M (rows of K*M), then the B-mixed rows z_r.
    let mut y0 = vec![T::zero(); n];
    let mut y1 = vec![T::zero(); n];
    for i in 0..n {
        let a0 = k0[i].conj();
        let a1 = k1[i].conj();
        let row = m.row(i);
        for j in 0..n {
            y0[j] = y0[j] + a0 * row[j];
            y1[j] = y1[j] + a1 * row[j];
        }
    }
    let mut out = m.clone();
    for i in 0..n {
        for j in 0..n {
            let z0 = c1 * y0[j] + e * y1[j];
            let z1 = -e * y0[j] + c1 * y1[j];
            out[(i, j)] = out[(i, j)] + k0[i] * z0 + k1[i] * z1;
        }
    }
    Ok(out)
}

/// `M_ε` from the full conjugating matrix `H`.
pub fn perturb<T: Scalar>(m: &Mat<T>, h: &Mat<T>, epsilon: f64) -> Result<Mat<T>> {
    if m.dim() != h.dim() {
        return Err(Error::Dimension(format!(
            "matrix dimensions differ: {} vs {}",
            m.dim(),
            h.dim()
        )));
    }
    apply_frame_rotation(m, &Frame2::from_haar_columns(h)?, epsilon)
}

/// The 2×2 compression `S = K* M A K` that the increment is a trace of.
fn pair_compression<T: Scalar>(
    a: &CoefficientMatrix<T>,
    m: &Mat<T>,
    k: &Frame2<T>,
) -> Result<[T; 4]> {
    let n = a.dim();
    if m.dim() != n || k.n() != n {
        return Err(Error::Dimension("coefficient, sample, and frame dimensions must agree".into()));
    }
    let (k0, k1) = k.columns();
    let am = a.matrix();
    // v_r = A k_r, then u_r = M v_r, then S_qr = k_q* u_r.
    let mut v0 = vec![T::zero(); n];
    let mut v1 = vec![T::zero(); n];
    if a.is_diagonal() {
        for i in 0..n {
            v0[i] = am[(i, i)] * k0[i];
            v1[i] = am[(i, i)] * k1[i];
        }
    } else {
        for i in 0..n {
            let row = am.row(i);
            let mut s0 = T::zero();
            let mut s1 = T::zero();
            for j in 0..n {
                s0 = s0 + row[j] * k0[j];
                s1 = s1 + row[j] * k1[j];
            }
            v0[i] = s0;
            v1[i] = s1;
        }
    }
    let mut s = [T::zero(); 4];
    for i in 0..n {
        let row = m.row(i);
        let mut u0 = T::zero();
        let mut u1 = T::zero();
        for j in 0..n {
            u0 = u0 + row[j] * v0[j];
            u1 = u1 + row[j] * v1[j];
        }
        let c0 = k0[i].conj();
        let c1 = k1[i].conj();
        s[0] = s[0] + c0 * u0; // S00
        s[1] = s[1] + c0 * u1; // S01
        s[2] = s[2] + c1 * u0; // S10
        s[3] = s[3] + c1 * u1; // S11
    }
    Ok(s)
}

/// `W_ε − W` in exact rank-two form (no small-ε truncation).
pub fn delta_statistic<T: Scalar>(
    a: &CoefficientMatrix<T>,
    m: &Mat<T>,
    k: &Frame2<T>,
    epsilon: f64,
) -> Result<T> {
    check_epsilon(epsilon)?;
    let s = pair_compression(a, m, k)?;
    let c1 = (1.0 - epsilon * epsilon).sqrt() - 1.0;
    Ok((s[0] + s[3]).scale(c1) + (s[2] - s[1]).scale(epsilon))
}

/// Closed-form error statistic of the quadratic condition, orthogonal case:
/// `Ê = (2/(n(n−1)))(1 − tr((AM)²))` for normalized diagonal `A`.
pub fn e_statistic_orth(a: &CoefficientMatrix<f64>, m: &Mat<f64>) -> Result<f64> {
    e_statistic(a, m)
}

/// Closed-form error integrand of the quadratic condition, unitary case,
/// for the real-part statistic `W^r` and normalized diagonal `A`:
///
/// ```text
/// ê = (1/n)·[ 1/(2(n−1)(n+1))
///           + (n/(2(n−1)(n+1)))·Re(−tr((AM)²) + (W² − |W|²)/n) ].
/// ```
///
/// Averaging `ê` over draws conditioned on `W^r` gives the theorem's error
/// term; working with the integrand keeps every draw exactly computable,
/// and the triangle inequality `E|E[ê|W]| ≤ E|ê|` preserves all certified
/// bounds.
pub fn e_statistic_unit(
    a: &CoefficientMatrix<num_complex::Complex64>,
    m: &Mat<num_complex::Complex64>,
) -> Result<f64> {
    e_statistic(a, m)
}

fn e_statistic<T: Scalar>(a: &CoefficientMatrix<T>, m: &Mat<T>) -> Result<f64> {
    let n = a.dim();
    if n < 2 {
        return Err(Error::Dimension("error statistic needs n >= 2".into()));
    }
    if !a.is_diagonal() {
        return Err(Error::InvalidParameter(
            "error statistic needs a diagonal coefficient matrix; reduce by singular values first"
                .into(),
        ));
    }
    if m.dim() != n {
        return Err(Error::Dimension("dimension mismatch".into()));
    }
    let t2 = a.trace_statistic_squared_matrix(m)?;
    let nf = n as f64;
    match T::FIELD {
        Field::Real => Ok(2.0 / (nf * (nf - 1.0)) * (1.0 - t2.re())),
        Field::Complex => {
            let w = a.trace_statistic(m)?;
            let fluct = w * w - T::from_re(w.abs_sq());
            let re_part = (fluct.scale(1.0 / nf) - t2).re();
            let coeff = 1.0 / (2.0 * (nf - 1.0) * (nf + 1.0));
            Ok((coeff + nf * coeff * re_part) / nf)
        }
    }
}

/// One Monte Carlo campaign at a fixed rotation size.
#[derive(Debug, Clone)]
pub struct PairBatch {
    pub group: Group,
    pub n: usize,
    pub epsilon: f64,
    /// Variance of the certified real statistic: 1 orthogonal, 1/2 unitary.
    pub sigma2: f64,
    /// `W` (orthogonal) or `Re W` (unitary) per draw.
    pub w: Vec<f64>,
    /// Raw increment `Δ` (resp. `Re Δ`) per draw.
    pub delta: Vec<f64>,
    /// Antithetic average over the column-sign flip: `(c−1)(S₀₀+S₁₁)`.
    pub delta_sym: Vec<f64>,
    /// Closed-form error statistic per draw.
    pub e_hat: Vec<f64>,
}

impl PairBatch {
    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    /// z-score of the exchangeability mean diagnostic: the means of `W` and
    /// `W_ε` differ by exactly `mean(Δ)`, whose standard error is the joint
    /// one.
    pub fn mean_shift_z(&self) -> f64 {
        let m = mean_se(&self.delta);
        if m.se == 0.0 {
            0.0
        } else {
            m.mean / m.se
        }
    }
}

/// Draw `count` independent pairs `(M, K)` and record the statistic, the
/// increment, its antithetic average, and the closed-form error statistic.
pub fn sample_pair_batch<T: Scalar>(
    a: &CoefficientMatrix<T>,
    epsilon: f64,
    count: usize,
    seed: u64,
    base_stream: u64,
) -> Result<PairBatch> {
    check_epsilon(epsilon)?;
    let n = a.dim();
    check_pair_dim(n)?;
    if !a.is_diagonal() {
        return Err(Error::InvalidParameter(
            "pair campaigns need a diagonal coefficient matrix; reduce by singular values first"
                .into(),
        ));
    }
    if count == 0 {
        return Err(Error::InvalidParameter("batch count must be positive".into()));
    }
    let c1 = (1.0 - epsilon * epsilon).sqrt() - 1.0;
    let rows: Vec<(f64, f64, f64, f64)> = parallel_batch(seed, base_stream, count, |rng, _| {
        let m = sample_haar::<T>(n, rng).expect("gaussian input is full rank");
        let k = Frame2::<T>::sample(n, rng).expect("gaussian frame is full rank");
        let w = a.trace_statistic(&m).expect("dimensions agree");
        let s = pair_compression(a, &m, &k).expect("dimensions agree");
        let drift = (s[0] + s[3]).scale(c1);
        let delta = drift + (s[2] - s[1]).scale(epsilon);
        let e = e_statistic(a, &m).expect("validated diagonal");
        (w.re(), delta.re(), drift.re(), e)
    });
    let mut batch = PairBatch {
        group: a.group(),
        n,
        epsilon,
        sigma2: a.group().sigma2(),
        w: Vec::with_capacity(count),
        delta: Vec::with_capacity(count),
        delta_sym: Vec::with_capacity(count),
        e_hat: Vec::with_capacity(count),
    };
    for (w, d, ds, e) in rows {
        if !(w.is_finite() && d.is_finite() && ds.is_finite() && e.is_finite()) {
            return Err(Error::Numerical("non-finite draw in pair batch".into()));
        }
        batch.w.push(w);
        batch.delta.push(d);
        batch.delta_sym.push(ds);
        batch.e_hat.push(e);
    }
    Ok(batch)
}

/// Batches over a grid of rotation sizes, on disjoint RNG stream blocks.
pub fn sample_grid_batches<T: Scalar>(
    a: &CoefficientMatrix<T>,
    eps_grid: &[f64],
    samples: usize,
    seed: u64,
) -> Result<Vec<PairBatch>> {
    if eps_grid.is_empty() {
        return Err(Error::InvalidParameter("empty rotation-size grid".into()));
    }
    for (i, e) in eps_grid.iter().enumerate() {
        if eps_grid[..i].contains(e) {
            return Err(Error::InvalidParameter("duplicate rotation sizes in grid".into()));
        }
    }
    eps_grid
        .iter()
        .enumerate()
        .map(|(i, &e)| sample_pair_batch(a, e, samples, seed, (i as u64) << 32))
        .collect()
}

fn batch_dims(batches: &[PairBatch]) -> Result<(usize, f64)> {
    let first = batches.first().ok_or_else(|| Error::Estimation("no batches".into()))?;
    for b in batches {
        if b.n != first.n || b.group != first.group {
            return Err(Error::Dimension("batches mix dimensions or groups".into()));
        }
    }
    Ok((first.n, first.sigma2))
}

/// Equal-count bin edges over the pooled statistic values, and per-batch
/// index partitions, with a minimum occupancy guard.
fn pooled_partitions(batches: &[PairBatch], bins: usize) -> Result<Vec<Vec<Vec<usize>>>> {
    let pooled: Vec<f64> = batches.iter().flat_map(|b| b.w.iter().copied()).collect();
    let edges = Bins::equal_count(&pooled, bins)?;
    let mut out = Vec::with_capacity(batches.len());
    for b in batches {
        let part = edges.partition(&b.w);
        for (idx, members) in part.iter().enumerate() {
            if members.len() < MIN_BIN_COUNT {
                return Err(Error::Estimation(format!(
                    "bin {idx} holds {} draws at rotation size {}; need at least {MIN_BIN_COUNT}",
                    members.len(),
                    b.epsilon
                )));
            }
        }
        out.push(part);
    }
    Ok(out)
}

/// Drift estimate at one rotation size.
#[derive(Debug, Clone, serde::Serialize)]
pub struct EpsLambda {
    pub epsilon: f64,
    pub lambda: f64,
    pub se: f64,
    /// RMS of binned-mean residuals around the fitted line — the measured
    /// size of the drift condition's remainder at this rotation size.
    pub fit_residual_rms: f64,
}

/// Drift-condition estimate: `E[Δ|W] ≈ −λ ε² W`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct LambdaEstimate {
    pub lambda: f64,
    pub se: f64,
    pub n_lambda: f64,
    pub n_lambda_se: f64,
    pub per_eps: Vec<EpsLambda>,
}

/// Estimate λ from existing batches: per rotation size, regress binned
/// means of `Δ_sym/ε²` on the bin-mean statistic; then extrapolate the
/// per-size estimates to ε → 0 linearly in ε² (the drift's only
/// ε-dependence, since `(1−√(1−ε²))/ε² = 1/2 + ε²/8 + …`).
pub fn lambda_from_batches(batches: &[PairBatch], bins: usize) -> Result<LambdaEstimate> {
    if batches.len() < 2 {
        return Err(Error::Estimation("drift extrapolation needs at least two rotation sizes".into()));
    }
    let (n, _) = batch_dims(batches)?;
    let parts = pooled_partitions(batches, bins)?;

    let mut per_eps = Vec::with_capacity(batches.len());
    for (b, part) in batches.iter().zip(&parts) {
        let inv_eps2 = 1.0 / (b.epsilon * b.epsilon);
        let mut xs = Vec::with_capacity(part.len());
        let mut ys = Vec::with_capacity(part.len());
        let mut sigmas = Vec::with_capacity(part.len());
        for members in part {
            let wbar = members.iter().map(|&i| b.w[i]).sum::<f64>() / members.len() as f64;
            let vals: Vec<f64> = members.iter().map(|&i| b.delta_sym[i] * inv_eps2).collect();
            let m = mean_se(&vals);
            xs.push(wbar);
            ys.push(m.mean);
            sigmas.push(m.se);
        }
        let fit = wls_line(&xs, &ys, &sigmas)?;
        let resid: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (y - (fit.intercept + fit.slope * x)).powi(2))
            .sum::<f64>()
            / xs.len() as f64;
        per_eps.push(EpsLambda {
            epsilon: b.epsilon,
            lambda: -fit.slope,
            se: fit.se_slope,
            fit_residual_rms: resid.sqrt(),
        });
    }

    let x2: Vec<f64> = per_eps.iter().map(|p| p.epsilon * p.epsilon).collect();
    let ys: Vec<f64> = per_eps.iter().map(|p| p.lambda).collect();
    let sigmas: Vec<f64> = per_eps.iter().map(|p| p.se).collect();
    let fit = wls_line(&x2, &ys, &sigmas)?;
    Ok(LambdaEstimate {
        lambda: fit.intercept,
        se: fit.se_intercept,
        n_lambda: n as f64 * fit.intercept,
        n_lambda_se: n as f64 * fit.se_intercept,
        per_eps,
    })
}

/// Sample and estimate λ in one call.
pub fn estimate_lambda<T: Scalar>(
    a: &CoefficientMatrix<T>,
    eps_grid: &[f64],
    samples: usize,
    bins: usize,
    seed: u64,
) -> Result<LambdaEstimate> {
    lambda_from_batches(&sample_grid_batches(a, eps_grid, samples, seed)?, bins)
}

/// Per-bin outcome of the quadratic-condition check.
#[derive(Debug, Clone, serde::Serialize)]
pub struct QuadraticBin {
    pub w_mean: f64,
    pub count: usize,
    /// ε → 0 extrapolated bin mean of `Δ²/ε² − ê`.
    pub observed: f64,
    pub se: f64,
    pub z: f64,
}

/// Quadratic-condition check: `E[Δ²/ε² | W] → 2λσ² + E[ê|W]`. The closed
/// form `ê` is subtracted draw-by-draw, so every bin should match the flat
/// reference `2σ²/n`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct QuadraticCheck {
    /// `2σ²/n`, the theory value with λ = 1/n.
    pub reference: f64,
    /// Extrapolated global mean of `Δ²/ε² − ê` with standard error.
    pub global: MeanSe,
    pub global_z: f64,
    /// Raw per-size global means of `Δ²/ε²` (no subtraction): convergence
    /// diagnostic for the ε → 0 limit.
    pub per_eps_global: Vec<(f64, MeanSe)>,
    pub bins: Vec<QuadraticBin>,
    pub sup_bin_z: f64,
}

/// Check the quadratic condition from existing batches.
pub fn quadratic_from_batches(batches: &[PairBatch], bins: usize) -> Result<QuadraticCheck> {
    if batches.len() < 2 {
        return Err(Error::Estimation(
            "quadratic extrapolation needs at least two rotation sizes".into(),
        ));
    }
    let (n, sigma2) = batch_dims(batches)?;
    let reference = 2.0 * sigma2 / n as f64;
    let parts = pooled_partitions(batches, bins)?;
    let x2: Vec<f64> = batches.iter().map(|b| b.epsilon * b.epsilon).collect();

    // The even symmetry of the frame distribution kills the Δ-expansion's
    // cross term, so bin and global means of Δ²/ε² − ê depend on ε through
    // ε² alone; the weighted intercept over the grid is the limit estimate.
    let centered: Vec<Vec<f64>> = batches
        .iter()
        .map(|b| {
            let inv_eps2 = 1.0 / (b.epsilon * b.epsilon);
            (0..b.len()).map(|i| b.delta[i] * b.delta[i] * inv_eps2 - b.e_hat[i]).collect()
        })
        .collect();

    let mut per_eps_global = Vec::with_capacity(batches.len());
    let mut gm = Vec::with_capacity(batches.len());
    let mut gs = Vec::with_capacity(batches.len());
    for (b, cv) in batches.iter().zip(&centered) {
        let inv_eps2 = 1.0 / (b.epsilon * b.epsilon);
        let raw: Vec<f64> = b.delta.iter().map(|d| d * d * inv_eps2).collect();
        per_eps_global.push((b.epsilon, mean_se(&raw)));
        let m = mean_se(cv);
        gm.push(m.mean);
        gs.push(m.se);
    }
    let gfit = wls_line(&x2, &gm, &gs)?;
    let global = MeanSe {
        mean: gfit.intercept,
        se: gfit.se_intercept,
        count: batches.iter().map(|b| b.len()).sum(),
    };
    let global_z = (global.mean - reference) / global.se;

    let mut out_bins = Vec::with_capacity(bins);
    let mut sup_z = 0.0_f64;
    for bin_idx in 0..bins {
        let mut ys = Vec::with_capacity(batches.len());
        let mut sigmas = Vec::with_capacity(batches.len());
        let mut w_sum = 0.0;
        let mut count = 0usize;
        for (j, b) in batches.iter().enumerate() {
            let members = &parts[j][bin_idx];
            let vals: Vec<f64> = members.iter().map(|&i| centered[j][i]).collect();
            let m = mean_se(&vals);
            ys.push(m.mean);
            sigmas.push(m.se);
            w_sum += members.iter().map(|&i| b.w[i]).sum::<f64>();
            count += members.len();
        }
        let fit = wls_line(&x2, &ys, &sigmas)?;
        let z = (fit.intercept - reference) / fit.se_intercept;
        sup_z = sup_z.max(z.abs());
        out_bins.push(QuadraticBin {
            w_mean: w_sum / count as f64,
            count,
            observed: fit.intercept,
            se: fit.se_intercept,
            z,
        });
    }

    Ok(QuadraticCheck {
        reference,
        global,
        global_z,
        per_eps_global,
        bins: out_bins,
        sup_bin_z: sup_z,
    })
}

/// Sample and check the quadratic condition in one call.
pub fn quadratic_condition<T: Scalar>(
    a: &CoefficientMatrix<T>,
    eps_grid: &[f64],
    samples: usize,
    bins: usize,
    seed: u64,
) -> Result<QuadraticCheck> {
    quadratic_from_batches(&sample_grid_batches(a, eps_grid, samples, seed)?, bins)
}

/// Third-moment rate at one rotation size.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ThirdRate {
    pub epsilon: f64,
    pub rate: MeanSe,
}

/// Third-moment condition: `E|Δ|³/ε²` should vanish linearly in ε.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ThirdMomentReport {
    /// Rates ordered by decreasing ε.
    pub rates: Vec<ThirdRate>,
    /// Fitted exponent of rate ∝ ε^p (theory: p = 1).
    pub fitted_power: f64,
    pub power_se: f64,
    /// Consecutive rate ratios along the decreasing-ε order; for a dyadic
    /// grid the theory value is 2.
    pub ratios: Vec<f64>,
    pub decreasing_within_error: bool,
}

pub fn third_moment_rate(batches: &[PairBatch]) -> Result<ThirdMomentReport> {
    if batches.len() < 2 {
        return Err(Error::Estimation("rate fit needs at least two rotation sizes".into()));
    }
    batch_dims(batches)?;
    let mut order: Vec<usize> = (0..batches.len()).collect();
    order.sort_by(|&i, &j| batches[j].epsilon.total_cmp(&batches[i].epsilon));

    let rates: Vec<ThirdRate> = order
        .iter()
        .map(|&i| {
            let b = &batches[i];
            let inv_eps2 = 1.0 / (b.epsilon * b.epsilon);
            let vals: Vec<f64> = b.delta.iter().map(|d| d.abs().powi(3) * inv_eps2).collect();
            ThirdRate { epsilon: b.epsilon, rate: mean_se(&vals) }
        })
        .collect();

    let xs: Vec<f64> = rates.iter().map(|r| r.epsilon.ln()).collect();
    let ys: Vec<f64> = rates.iter().map(|r| r.rate.mean.ln()).collect();
    let sigmas: Vec<f64> = rates.iter().map(|r| r.rate.se / r.rate.mean).collect();
    let fit = wls_line(&xs, &ys, &sigmas)?;

    let ratios: Vec<f64> =
        rates.windows(2).map(|p| p[0].rate.mean / p[1].rate.mean).collect();
    let decreasing = rates.windows(2).all(|p| {
        p[1].rate.mean <= p[0].rate.mean + 4.0 * (p[0].rate.se + p[1].rate.se)
    });

    Ok(ThirdMomentReport {
        rates,
        fitted_power: fit.slope,
        power_se: fit.se_slope,
        ratios,
        decreasing_within_error: decreasing,
    })
}

/// Two-sample agreement between `W` and `W_ε` plus the mean-shift z-score.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ExchangeabilityReport {
    pub epsilon: f64,
    pub ks: f64,
    pub ks_threshold: f64,
    pub mean_delta: MeanSe,
    pub mean_shift_z: f64,
    pub pass: bool,
}

/// KS-compare the marginal samples of `W` and `W_ε = W + Δ` at level 10⁻³.
pub fn exchangeability_check(batch: &PairBatch) -> Result<ExchangeabilityReport> {
    if batch.is_empty() {
        return Err(Error::Estimation("empty batch".into()));
    }
    let shifted: Vec<f64> = batch.w.iter().zip(&batch.delta).map(|(w, d)| w + d).collect();
    let ks = crate::distance::ks_two_sample(&batch.w, &shifted)?;
    let nn = batch.len() as f64;
    let threshold = crate::distance::ks_two_sample_threshold(1e-3, nn, nn);
    let mean_delta = mean_se(&batch.delta);
    let z = batch.mean_shift_z();
    Ok(ExchangeabilityReport {
        epsilon: batch.epsilon,
        ks,
        ks_threshold: threshold,
        mean_delta,
        mean_shift_z: z,
        pass: ks <= threshold && z.abs() <= 4.0,
    })
}

/// Everything the conditions need, from one set of shared campaigns.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ConditionReport {
    pub group: Group,
    pub n: usize,
    pub statistic: String,
    pub sigma2: f64,
    pub samples_per_eps: usize,
    pub bins: usize,
    pub eps_grid: Vec<f64>,
    pub lambda: LambdaEstimate,
    pub quadratic: QuadraticCheck,
    pub third_moment: ThirdMomentReport,
    pub exchangeability: Vec<ExchangeabilityReport>,
    /// `n·E|ê|` with standard error: the certified total-variation bound
    /// `(1/λ)E|E|` evaluated at the structural λ = 1/n over pooled draws.
    pub abstract_tv: MeanSe,
}

/// Run all condition checks on shared batches.
pub fn condition_report<T: Scalar>(
    a: &CoefficientMatrix<T>,
    eps_grid: &[f64],
    samples: usize,
    bins: usize,
    seed: u64,
) -> Result<ConditionReport> {
    let batches = sample_grid_batches(a, eps_grid, samples, seed)?;
    condition_report_from_batches(a.label(), &batches, bins)
}

/// As [`condition_report`], reusing batches sampled elsewhere.
pub fn condition_report_from_batches(
    label: &str,
    batches: &[PairBatch],
    bins: usize,
) -> Result<ConditionReport> {
    let (n, sigma2) = batch_dims(batches)?;
    let lambda = lambda_from_batches(batches, bins)?;
    let quadratic = quadratic_from_batches(batches, bins)?;
    let third_moment = third_moment_rate(batches)?;
    let exchangeability: Vec<ExchangeabilityReport> =
        batches.iter().map(exchangeability_check).collect::<Result<_>>()?;
    let pooled_e: Vec<f64> =
        batches.iter().flat_map(|b| b.e_hat.iter().copied()).collect();
    let abstract_tv = crate::stein::abstract_bound(1.0 / n as f64, &pooled_e)?;
    let first = &batches[0];
    Ok(ConditionReport {
        group: first.group,
        n,
        statistic: label.to_string(),
        sigma2,
        samples_per_eps: first.len(),
        bins,
        eps_grid: batches.iter().map(|b| b.epsilon).collect(),
        lambda,
        quadratic,
        third_moment,
        exchangeability,
        abstract_tv,
    })
}
