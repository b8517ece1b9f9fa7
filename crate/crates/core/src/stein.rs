//! The Stein equation for the standard Gaussian and its bounded solution.
//!
//! For a test function `g` and `Z ~ N(0,1)`, the equation
//!
//! ```text
//! f'(t) - t f(t) = g(t) - E g(Z)
//! ```
//!
//! has the bounded solution
//!
//! ```text
//! f(t) = e^{t^2/2} ∫_{-∞}^{t} [g(x) - E g(Z)] e^{-x^2/2} dx
//!      = -e^{t^2/2} ∫_{t}^{∞} [g(x) - E g(Z)] e^{-x^2/2} dx,
//! ```
//!
//! the two forms agreeing because the centered integrand has total integral
//! zero. Evaluating the first form for `t > 0` multiplies a catastrophically
//! cancelled small integral by `e^{t^2/2}` (about `8·10^{13}` at `t = 8`), so
//! [`stein_transform`] accumulates panel integrals from the left for `t ≤ 0`
//! and from the right for `t > 0`, with the mean subtracted in the same panel
//! arithmetic so the two accumulations are exact negatives of each other.
//!
//! Everything operates on a fixed uniform grid over `[-8, 8]`: the Gaussian
//! mass outside is below `1.3e-15`, under every tolerance used here.

use crate::error::{Error, Result};
use crate::quad::integrate;
use crate::stats::{mean_se, normal_cdf, MeanSe};

/// Half-width of the evaluation window.
pub const GRID_HALF_WIDTH: f64 = 8.0;
/// Grid spacing.
pub const GRID_STEP: f64 = 1e-3;
/// Number of grid points (`2 * 8 / 1e-3 + 1`).
pub const GRID_POINTS: usize = 16_001;

const SQRT_TWO_PI: f64 = 2.5066282746310002;

/// `k`-th grid abscissa, symmetric about an exact zero at the midpoint.
pub fn grid_x(k: usize) -> f64 {
    (k as f64 - (GRID_POINTS / 2) as f64) * GRID_STEP
}

/// A scalar function tabulated on the standard grid, evaluated off-grid by
/// four-point cubic interpolation (exact for polynomials up to degree 3).
#[derive(Debug, Clone)]
pub struct TestFunction {
    label: String,
    values: Vec<f64>,
}

impl TestFunction {
    /// Tabulate a closure on the grid.
    pub fn tabulate(label: impl Into<String>, g: impl Fn(f64) -> f64) -> Result<Self> {
        let values: Vec<f64> = (0..GRID_POINTS).map(|k| g(grid_x(k))).collect();
        Self::from_values(label, values)
    }

    /// Wrap precomputed grid values.
    pub fn from_values(label: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if values.len() != GRID_POINTS {
            return Err(Error::Dimension(format!(
                "grid function needs {GRID_POINTS} values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("grid function has non-finite values".into()));
        }
        Ok(TestFunction { label: label.into(), values })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Cubic interpolation; clamps to the boundary value outside the window
    /// (only relevant beyond eight standard deviations).
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.values.len();
        let u = (x - grid_x(0)) / GRID_STEP;
        if u <= 0.0 {
            return self.values[0];
        }
        if u >= (n - 1) as f64 {
            return self.values[n - 1];
        }
        let i = u as usize; // floor for u >= 0
        let base = i.saturating_sub(1).min(n - 4);
        // Lagrange cubic through the four nodes base..base+3 in local
        // coordinates s = u - base ∈ [0, 3].
        let s = u - base as f64;
        let (f0, f1, f2, f3) = (
            self.values[base],
            self.values[base + 1],
            self.values[base + 2],
            self.values[base + 3],
        );
        let w0 = -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0;
        let w1 = s * (s - 2.0) * (s - 3.0) / 2.0;
        let w2 = -s * (s - 1.0) * (s - 3.0) / 2.0;
        let w3 = s * (s - 1.0) * (s - 2.0) / 6.0;
        w0 * f0 + w1 * f1 + w2 * f2 + w3 * f3
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// First derivative on the grid: five-point central differences in the
    /// interior (truncation `O(h^4)`), four-point one-sided at the edges.
    pub fn derivative_values(&self) -> Vec<f64> {
        let f = &self.values;
        let n = f.len();
        let h = GRID_STEP;
        let mut d = vec![0.0; n];
        d[0] = (-11.0 * f[0] + 18.0 * f[1] - 9.0 * f[2] + 2.0 * f[3]) / (6.0 * h);
        d[1] = (-2.0 * f[0] - 3.0 * f[1] + 6.0 * f[2] - f[3]) / (6.0 * h);
        for k in 2..n - 2 {
            d[k] = (f[k - 2] - 8.0 * f[k - 1] + 8.0 * f[k + 1] - f[k + 2]) / (12.0 * h);
        }
        d[n - 2] = (2.0 * f[n - 1] + 3.0 * f[n - 2] - 6.0 * f[n - 3] + f[n - 4]) / (6.0 * h);
        d[n - 1] = (11.0 * f[n - 1] - 18.0 * f[n - 2] + 9.0 * f[n - 3] - 2.0 * f[n - 4]) / (6.0 * h);
        d
    }

    pub fn derivative_sup_norm(&self) -> f64 {
        self.derivative_values().iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Solution bundle for one test function.
#[derive(Debug, Clone)]
pub struct SteinSolution {
    /// The solution `f` on the grid.
    pub f: TestFunction,
    /// The input `g` on the grid.
    pub g: TestFunction,
    /// `E g(Z)`, from the same panel quadrature that centers the integrand.
    pub gauss_mean_g: f64,
    /// Sup over interior grid points of `|f'(t) - t f(t) - (g(t) - E g(Z))|`.
    pub residual_sup: f64,
}

/// `E g(Z)` by adaptive quadrature over the grid window, absolute error
/// below `1e-9` (quadrature tolerance plus truncated tail mass).
pub fn gauss_expectation(g: &TestFunction) -> Result<f64> {
    let lo = grid_x(0);
    let hi = grid_x(GRID_POINTS - 1);
    let r = integrate(
        |x| g.eval(x) * (-0.5 * x * x).exp() / SQRT_TWO_PI,
        lo,
        hi,
        1e-10,
    )?;
    Ok(r.value)
}

/// Quadratic extension of the three grid values at `(x0, x1, x2)` expressed
/// in monomial coefficients `(a, b, c)` for `a + b x + c x^2`.
fn quadratic_through(x: [f64; 3], y: [f64; 3]) -> (f64, f64, f64) {
    let d1 = (y[1] - y[0]) / (x[1] - x[0]);
    let d2 = ((y[2] - y[1]) / (x[2] - x[1]) - d1) / (x[2] - x[0]);
    let c = d2;
    let b = d1 - d2 * (x[0] + x[1]);
    let a = y[0] - d1 * x[0] + d2 * x[0] * x[1];
    (a, b, c)
}

/// Solve the Stein equation for `g` on the grid.
pub fn stein_transform(g: &TestFunction) -> Result<SteinSolution> {
    let n = GRID_POINTS;
    let weight = |x: f64| (-0.5 * x * x).exp();

    // Two-point Gauss-Legendre panel integrals of g(x)·e^{-x²/2} and of
    // e^{-x²/2} alone, sharing nodes so the centered integrand below sums
    // to exactly zero over the whole line.
    let inv_sqrt3 = 1.0 / 3.0_f64.sqrt();
    let mut panel_g = vec![0.0; n - 1];
    let mut panel_one = vec![0.0; n - 1];
    for k in 0..n - 1 {
        let a = grid_x(k);
        let b = grid_x(k + 1);
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let (u1, u2) = (mid - half * inv_sqrt3, mid + half * inv_sqrt3);
        let (w1, w2) = (weight(u1), weight(u2));
        panel_g[k] = half * (g.eval(u1) * w1 + g.eval(u2) * w2);
        panel_one[k] = half * (w1 + w2);
    }

    // Tail integrals over (-∞, x_0] and [x_{n-1}, ∞), with g extended by
    // the quadratic through the three nearest grid points. The Gaussian
    // moments against 1, x, x² have closed forms; everything is of order
    // e^{-32} but kept so the low-degree polynomial cases come out exact.
    let xl = [grid_x(0), grid_x(1), grid_x(2)];
    let (la, lb, lc) = quadratic_through(xl, [g.values[0], g.values[1], g.values[2]]);
    let cl = xl[0];
    let p0 = SQRT_TWO_PI * normal_cdf(cl);
    let p1 = -weight(cl);
    let p2 = cl * p1 + p0;
    let tail_g_left = la * p0 + lb * p1 + lc * p2;
    let tail_one_left = p0;

    let xr = [grid_x(n - 3), grid_x(n - 2), grid_x(n - 1)];
    let (ra, rb, rc) =
        quadratic_through(xr, [g.values[n - 3], g.values[n - 2], g.values[n - 1]]);
    let cr = xr[2];
    let q0 = SQRT_TWO_PI * normal_cdf(-cr);
    let q1 = weight(cr);
    let q2 = cr * q1 + q0;
    let tail_g_right = ra * q0 + rb * q1 + rc * q2;
    let tail_one_right = q0;

    let total_g = tail_g_left + panel_g.iter().sum::<f64>() + tail_g_right;
    let total_one = tail_one_left + panel_one.iter().sum::<f64>() + tail_one_right;
    let mu = total_g / total_one;

    // Centered panels and tails; prefix sums from the left, suffix sums
    // from the right, spliced at t = 0.
    let centered: Vec<f64> =
        (0..n - 1).map(|k| panel_g[k] - mu * panel_one[k]).collect();
    let head = tail_g_left - mu * tail_one_left;
    let tail = tail_g_right - mu * tail_one_right;

    let mut f_vals = vec![0.0; n];
    let mut acc = head;
    for k in 0..n {
        let x = grid_x(k);
        if x <= 0.0 {
            f_vals[k] = (0.5 * x * x).exp() * acc;
        }
        if k < n - 1 {
            acc += centered[k];
        }
    }
    let mut acc = tail;
    for k in (0..n).rev() {
        let x = grid_x(k);
        if x > 0.0 {
            f_vals[k] = -(0.5 * x * x).exp() * acc;
        }
        if k > 0 {
            acc += centered[k - 1];
        }
    }

    let f = TestFunction::from_values(format!("{}-solution", g.label), f_vals)?;
    let deriv = f.derivative_values();
    let mut residual_sup = 0.0_f64;
    for k in 2..n - 2 {
        let x = grid_x(k);
        let r = deriv[k] - x * f.values[k] - (g.values[k] - mu);
        residual_sup = residual_sup.max(r.abs());
    }

    Ok(SteinSolution { f, g: g.clone(), gauss_mean_g: mu, residual_sup })
}

/// One inequality of the solution-norm lemma.
#[derive(Debug, Clone, serde::Serialize)]
pub struct BoundCheck {
    pub label: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub pass: bool,
}

/// The three solution-norm inequalities, checked on the grid.
#[derive(Debug, Clone, serde::Serialize)]
pub struct BoundsReport {
    pub function: String,
    pub checks: Vec<BoundCheck>,
    pub all_pass: bool,
}

/// Verify `‖f‖ ≤ √(π/2)·‖g - Eg‖`, `‖f'‖ ≤ 2‖g - Eg‖`, `‖f''‖ ≤ 2‖g'‖`
/// for the computed solution. These are theorems for bounded, absolutely
/// continuous `g`; a failure indicates a solver bug. A `1e-9`-scale slack
/// keeps degenerate cases (e.g. constant `g`, where both sides vanish)
/// from flipping on rounding noise.
pub fn verify_stein_bounds(g: &TestFunction) -> Result<BoundsReport> {
    let sol = stein_transform(g)?;
    let centered_sup = g
        .values
        .iter()
        .fold(0.0_f64, |m, v| m.max((v - sol.gauss_mean_g).abs()));
    let g_deriv_sup = g.derivative_sup_norm();

    let f_sup = sol.f.sup_norm();
    let f_deriv_sup = sol.f.derivative_sup_norm();
    // Second derivative by second differences of the solution grid.
    let fv = sol.f.values();
    let h2 = GRID_STEP * GRID_STEP;
    let mut f_second_sup = 0.0_f64;
    for k in 1..fv.len() - 1 {
        f_second_sup = f_second_sup.max(((fv[k - 1] - 2.0 * fv[k] + fv[k + 1]) / h2).abs());
    }

    let scale = 1e-9 * (1.0 + g.sup_norm());
    let make = |label, lhs: f64, rhs: f64| BoundCheck {
        label,
        lhs,
        rhs,
        margin: rhs - lhs,
        pass: lhs <= rhs + scale,
    };
    let checks = vec![
        make("sup|f| <= sqrt(pi/2) sup|g - Eg|", f_sup, (std::f64::consts::PI / 2.0).sqrt() * centered_sup),
        make("sup|f'| <= 2 sup|g - Eg|", f_deriv_sup, 2.0 * centered_sup),
        make("sup|f''| <= 2 sup|g'|", f_second_sup, 2.0 * g_deriv_sup),
    ];
    let all_pass = checks.iter().all(|c| c.pass);
    Ok(BoundsReport { function: g.label().to_string(), checks, all_pass })
}

/// `E[f'(Z) - Z f(Z)]` for the computed solution, by composite Simpson
/// over the grid. Integration by parts gives zero for any `C^1` function
/// with subexponential growth, so the magnitude measures solver error.
pub fn characterization_defect(sol: &SteinSolution) -> f64 {
    let deriv = sol.f.derivative_values();
    let fv = sol.f.values();
    let integrand: Vec<f64> = (0..GRID_POINTS)
        .map(|k| {
            let x = grid_x(k);
            (deriv[k] - x * fv[k]) * (-0.5 * x * x).exp() / SQRT_TWO_PI
        })
        .collect();
    simpson(&integrand, GRID_STEP)
}

fn simpson(y: &[f64], h: f64) -> f64 {
    debug_assert!(y.len() % 2 == 1, "composite Simpson needs an even panel count");
    let n = y.len();
    let mut s = y[0] + y[n - 1];
    for (k, &v) in y.iter().enumerate().take(n - 1).skip(1) {
        s += if k % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    s * h / 3.0
}

/// `(1/λ)·E|e|` with a standard error, the certified total-variation bound
/// of the abstract normal-approximation theorem.
pub fn abstract_bound(lambda: f64, e_samples: &[f64]) -> Result<MeanSe> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
    }
    if e_samples.is_empty() {
        return Err(Error::Estimation("no error-statistic samples supplied".into()));
    }
    if e_samples.iter().any(|e| !e.is_finite()) {
        return Err(Error::Numerical("non-finite error-statistic sample".into()));
    }
    let abs: Vec<f64> = e_samples.iter().map(|e| e.abs()).collect();
    let m = mean_se(&abs);
    Ok(MeanSe { mean: m.mean / lambda, se: m.se / lambda, count: m.count })
}

/// The fixed family of ten smooth test functions used by the solver
/// certification: polynomials through degree three, oscillatory, sigmoidal,
/// and bump-type members.
pub fn test_family() -> Vec<TestFunction> {
    let specs: Vec<(&str, Box<dyn Fn(f64) -> f64>)> = vec![
        ("one", Box::new(|_| 1.0)),
        ("linear", Box::new(|x| x)),
        ("square", Box::new(|x| x * x)),
        ("cube", Box::new(|x| x * x * x)),
        ("sine", Box::new(f64::sin)),
        ("cosine", Box::new(f64::cos)),
        ("tanh", Box::new(f64::tanh)),
        ("normal-cdf", Box::new(normal_cdf)),
        ("witch", Box::new(|x| 1.0 / (1.0 + x * x))),
        ("gauss-bump", Box::new(|x| (-x * x).exp())),
    ];
    specs
        .into_iter()
        .map(|(label, f)| TestFunction::tabulate(label, f).expect("family members are finite"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_symmetric_with_exact_zero() {
        assert_eq!(grid_x(GRID_POINTS / 2), 0.0);
        assert_eq!(grid_x(0), -GRID_HALF_WIDTH);
        assert_eq!(grid_x(GRID_POINTS - 1), GRID_HALF_WIDTH);
    }

    #[test]
    fn interpolation_reproduces_cubics_and_clamps() {
        let g = TestFunction::tabulate("cubic", |x| 0.5 * x * x * x - 2.0 * x + 1.0).unwrap();
        for &x in &[-7.9995, -3.14159, 0.00042, 2.71828, 7.99949] {
            let exact = 0.5 * x * x * x - 2.0 * x + 1.0;
            assert!((g.eval(x) - exact).abs() <= 1e-10 * (1.0 + exact.abs()), "x = {x}");
        }
        assert_eq!(g.eval(9.0), g.eval(8.0));
        assert_eq!(g.eval(-100.0), g.eval(-8.0));
    }

    #[test]
    fn gauss_expectation_known_values() {
        let cases: Vec<(&str, Box<dyn Fn(f64) -> f64>, f64)> = vec![
            ("one", Box::new(|_| 1.0), 1.0),
            ("square", Box::new(|x: f64| x * x), 1.0),
            ("quartic", Box::new(|x: f64| x * x * x * x), 3.0),
            ("cosine", Box::new(f64::cos), (-0.5_f64).exp()),
            ("witch", Box::new(|x: f64| 1.0 / (1.0 + x * x)), 6.5567954241879844e-1),
            ("gauss-bump", Box::new(|x: f64| (-x * x).exp()), 1.0 / 3.0_f64.sqrt()),
            ("normal-cdf", Box::new(normal_cdf), 0.5),
        ];
        for (label, f, want) in cases {
            let g = TestFunction::tabulate(label, f).unwrap();
            let got = gauss_expectation(&g).unwrap();
            assert!((got - want).abs() <= 1e-9, "{label}: {got} vs {want}");
        }
    }

    #[test]
    fn closed_form_solutions() {
        // g constant: the centered integrand vanishes, so f ≡ 0.
        let sol = stein_transform(&TestFunction::tabulate("const", |_| 2.5).unwrap()).unwrap();
        assert!(sol.f.sup_norm() <= 1e-10, "constant: sup |f| = {}", sol.f.sup_norm());

        // g(x) = x: f ≡ -1 from ∫_{-∞}^t x e^{-x²/2} dx = -e^{-t²/2}.
        let sol = stein_transform(&TestFunction::tabulate("linear", |x| x).unwrap()).unwrap();
        let worst = sol.f.values().iter().fold(0.0_f64, |m, v| m.max((v + 1.0).abs()));
        assert!(worst <= 1e-9, "linear: deviation {worst}");

        // g(x) = x²: f(t) = -t, since f' - tf = -1 + t² = g - 1.
        let sol = stein_transform(&TestFunction::tabulate("square", |x| x * x).unwrap()).unwrap();
        let worst = (0..GRID_POINTS).fold(0.0_f64, |m, k| {
            let x = grid_x(k);
            m.max((sol.f.values()[k] + x).abs() / (1.0 + x.abs()))
        });
        assert!(worst <= 1e-9, "square: relative deviation {worst}");
        assert!((sol.gauss_mean_g - 1.0).abs() <= 1e-11);
    }

    #[test]
    fn solution_is_odd_for_even_input() {
        // For even g the solution is odd; this exercises the left/right
        // splice at t = 0, where a centering mismatch would show as a jump.
        let sol = stein_transform(&TestFunction::tabulate("cosine", f64::cos).unwrap()).unwrap();
        let v = sol.f.values();
        let worst = (0..GRID_POINTS)
            .fold(0.0_f64, |m, k| m.max((v[k] + v[GRID_POINTS - 1 - k]).abs()));
        assert!(worst <= 1e-10, "odd-symmetry defect {worst}");
    }

    #[test]
    fn family_residuals_bounds_characterization() {
        for g in test_family() {
            let sol = stein_transform(&g).unwrap();
            assert!(
                sol.residual_sup <= 1e-6,
                "{}: residual {}",
                g.label(),
                sol.residual_sup
            );
            let defect = characterization_defect(&sol);
            assert!(defect.abs() <= 1e-6, "{}: characterization {defect}", g.label());
            let report = verify_stein_bounds(&g).unwrap();
            assert!(
                report.all_pass,
                "{}: {:?}",
                g.label(),
                report.checks.iter().filter(|c| !c.pass).collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn abstract_bound_arithmetic() {
        let b = abstract_bound(0.1, &[0.01, -0.01]).unwrap();
        assert!((b.mean - 0.1).abs() < 1e-15);
        assert_eq!(b.count, 2);
        let zero = abstract_bound(0.05, &[0.0; 8]).unwrap();
        assert_eq!(zero.mean, 0.0);
        assert!(abstract_bound(0.1, &[]).is_err());
        assert!(abstract_bound(-1.0, &[0.1]).is_err());
        assert!(abstract_bound(0.1, &[f64::NAN]).is_err());
    }
}
