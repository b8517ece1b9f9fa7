//! Distribution-level cross-checks between the sampler, the statistic
//! campaigns, and the distance lab. Each test compares two independent
//! routes to the same law — QR sampling vs direct sphere construction,
//! histogram vs quadrature, closed-form marginals vs empirical draws — so a
//! bug in any single route cannot certify itself.

use num_complex::Complex64;

use haartrace_core::distance::{
    dkw_radius, ks_distance, ks_two_sample, ks_two_sample_threshold, sphere_marginal_density,
    tv_histogram, tv_quadrature, AnalyticDensity, EmpiricalSample,
};
use haartrace_core::linstat::{preset_matrix, sample_statistic_batch, Preset};
use haartrace_core::rng::RngStream;

/// `sqrt(n) * (first coordinate of a uniform point on S^{n-1})` drawn
/// directly from normalized Gaussians — the law the spike statistic must
/// reproduce through the QR path.
fn direct_sphere_coordinate(n: usize, count: usize, seed: u64) -> Vec<f64> {
    let mut rng = RngStream::new(seed, 0);
    (0..count)
        .map(|_| {
            let g: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
            let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            (n as f64).sqrt() * g[0] / norm
        })
        .collect()
}

#[test]
fn qr_sampler_agrees_with_direct_sphere_construction() {
    let n = 10;
    let count = 20_000;
    let a = preset_matrix::<f64>(Preset::Spike, n, 0).unwrap();
    let via_qr = sample_statistic_batch(&a, count, 601, 0).unwrap().values;
    let direct = direct_sphere_coordinate(n, count, 602);
    let ks = ks_two_sample(&via_qr, &direct).unwrap();
    let threshold = ks_two_sample_threshold(1e-3, count as f64, count as f64);
    assert!(ks <= threshold, "ks {ks} above threshold {threshold}");
}

#[test]
fn spike_statistic_matches_marginal_density_and_quadrature() {
    let n = 10;
    let a = preset_matrix::<f64>(Preset::Spike, n, 0).unwrap();
    let draws = sample_statistic_batch(&a, 100_000, 603, 0).unwrap().values;
    let sample = EmpiricalSample::from_values("spike-10", draws).unwrap();

    // Against its own law the histogram estimate is pure binning bias.
    let marginal = sphere_marginal_density(n).unwrap();
    let own = tv_histogram(&sample, &marginal, 64, 604).unwrap();
    assert!(own.value <= 0.02, "tv against own density {0}", own.value);

    // Against the standard normal it must land on the quadrature value.
    let phi = AnalyticDensity::std_normal();
    let exact = tv_quadrature(&marginal, &phi).unwrap().value;
    let hist = tv_histogram(&sample, &phi, 64, 605).unwrap();
    assert!(
        (hist.value - exact).abs() <= 0.02,
        "histogram {} vs quadrature {exact}",
        hist.value
    );
}

#[test]
fn unitary_first_entry_magnitude_follows_the_beta_law() {
    // |m_11|^2 of a Haar unitary is Beta(1, n-1): P(|m_11|^2 <= x) =
    // 1 - (1-x)^{n-1}. The spike statistic exposes m_11 as W/sqrt(n).
    let n = 10;
    let count = 20_000;
    let a = preset_matrix::<Complex64>(Preset::Spike, n, 0).unwrap();
    let w = sample_statistic_batch(&a, count, 607, 0).unwrap().values;
    let mag2: Vec<f64> = w.iter().map(|v| v.norm_sqr() / n as f64).collect();
    let sample = EmpiricalSample::from_values("unitary-|m11|^2", mag2).unwrap();
    let beta_cdf = move |x: f64| {
        if x <= 0.0 {
            0.0
        } else if x >= 1.0 {
            1.0
        } else {
            1.0 - (1.0 - x).powi(n as i32 - 1)
        }
    };
    let ks = ks_distance(&sample, beta_cdf, "Beta(1,9)").unwrap();
    let radius = dkw_radius(1e-3, count);
    assert!(ks.value <= radius, "ks {} above DKW radius {radius}", ks.value);
}

#[test]
fn projection_direction_does_not_change_the_law() {
    // Two independent unitary campaigns, projected onto different
    // directions, must be indistinguishable by a two-sample test.
    let n = 16;
    let count = 20_000;
    let a = preset_matrix::<Complex64>(Preset::Identity, n, 0).unwrap();
    let first = sample_statistic_batch(&a, count, 608, 0).unwrap();
    let second = sample_statistic_batch(&a, count, 608, 1 << 32).unwrap();
    let x = first.project(0.0);
    let y = second.project(2.0 * std::f64::consts::PI / 5.0);
    let ks = ks_two_sample(&x, &y).unwrap();
    let threshold = ks_two_sample_threshold(1e-3, count as f64, count as f64);
    assert!(ks <= threshold, "ks {ks} above threshold {threshold}");
}
