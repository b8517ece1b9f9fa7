//! Exact mixed moments of Haar matrix entries, and certification of the
//! sampler against them.
//!
//! The catalog below collects the entry moments the trace-statistic
//! analysis rests on, each evaluated as an exact rational in `n` keyed by
//! the coincidence pattern of its indices. Three consumers:
//!
//! * [`evaluate_identity`] — the formulas themselves, in integer
//!   arithmetic, so downstream checks have a float-free reference;
//! * [`mc_estimate`] — Monte Carlo certification that the Haar sampler
//!   reproduces each moment within statistical error;
//! * [`quadrature_oracle`] — an independent brute-force oracle in the
//!   one-parameter groups: Haar on O(2) is half uniform rotations, half
//!   uniform reflections, and Haar on U(1) is a uniform phase, so any
//!   low-degree entry monomial integrates exactly by the trapezoid rule.
//!
//! The identities (normalized so `M` is Haar, `K` its first two columns,
//! `C₂ = [[0,1],[−1,0]]`):
//!
//! | key   | group | statement |
//! |-------|-------|-----------|
//! | o2    | O(n)  | `E[m_ij m_kl] = δ_ik δ_jl / n` |
//! | okk   | O(n)  | `E[KKᵗ] = (2/n)I`, `E[KC₂Kᵗ] = 0` |
//! | ow4   | O(n)  | `E[(m_i1 m_i′2 − m_i2 m_i′1)(m_j1 m_j′2 − m_j2 m_j′1)] = (2/(n(n−1)))(δ_ij δ_i′j′ − δ_ij′ δ_ji′)` for `i≠i′, j≠j′` |
//! | ot2m  | O(n)  | `E[tr((AM)²)] = 1` for normalized diagonal `A` |
//! | ot2s  | O(n)  | `E[m_ij m_ji m_kl m_lk]` fourth-moment combination (see [`evaluate_identity`]) |
//! | ukk   | U(n)  | `E[KK*] = (2/n)I`, `E[KC₂K*] = 0` |
//! | uw4s  | U(n)  | `E[(KC₂K*)_ij (KC₂K*)_kl]` |
//! | uw4m  | U(n)  | `E[(KC₂K*)_ij conj((KC₂K*)_kl)]` |
//! | uw2   | U(n)  | `E|tr(AM)|² = 1` for normalized `A` |

use std::fmt;
use std::str::FromStr;

use num::bigint::BigInt;
use num::rational::{BigRational, Ratio};
use num::{One, Zero};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::haar::sample_haar;
use crate::linstat::CoefficientMatrix;
use crate::matrix::{Group, Scalar};
use crate::pair::Frame2;
use crate::rng::parallel_batch;
use crate::stats::mean_se;

/// Catalog keys for the moment identities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum IdentityId {
    O2,
    Okk,
    Ow4,
    Ot2m,
    Ot2s,
    Ukk,
    Uw4s,
    Uw4m,
    Uw2,
}

impl IdentityId {
    pub const ALL: [IdentityId; 9] = [
        IdentityId::O2,
        IdentityId::Okk,
        IdentityId::Ow4,
        IdentityId::Ot2m,
        IdentityId::Ot2s,
        IdentityId::Ukk,
        IdentityId::Uw4s,
        IdentityId::Uw4m,
        IdentityId::Uw2,
    ];

    pub fn group(self) -> Group {
        match self {
            IdentityId::O2 | IdentityId::Okk | IdentityId::Ow4 | IdentityId::Ot2m
            | IdentityId::Ot2s => Group::Orthogonal,
            IdentityId::Ukk | IdentityId::Uw4s | IdentityId::Uw4m | IdentityId::Uw2 => {
                Group::Unitary
            }
        }
    }

    /// Number of index slots. The frame compressions (`okk`, `ukk`) take
    /// `(i, j, t)` with `t = 0` for `KK*` and `t = 1` for `KC₂K*`; the
    /// trace functionals take none.
    pub fn arity(self) -> usize {
        match self {
            IdentityId::O2 | IdentityId::Ow4 | IdentityId::Ot2s | IdentityId::Uw4s
            | IdentityId::Uw4m => 4,
            IdentityId::Okk | IdentityId::Ukk => 3,
            IdentityId::Ot2m | IdentityId::Uw2 => 0,
        }
    }

    /// Smallest dimension the formula is stated for: 2 where a fourth
    /// moment or a 2-frame is involved, 1 otherwise.
    pub fn n_min(self) -> usize {
        match self {
            IdentityId::O2 | IdentityId::Ot2m | IdentityId::Uw2 => 1,
            _ => 2,
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            IdentityId::O2 => "orthogonal second moment of entries",
            IdentityId::Okk => "orthogonal 2-frame compressions KK^t and KC2K^t",
            IdentityId::Ow4 => "orthogonal fourth moment of 2x2 column minors",
            IdentityId::Ot2m => "mean of tr((AM)^2), orthogonal",
            IdentityId::Ot2s => "fourth-moment combination E[m_ij m_ji m_kl m_lk], orthogonal",
            IdentityId::Ukk => "unitary 2-frame compressions KK* and KC2K*",
            IdentityId::Uw4s => "unitary minor product, both factors unconjugated",
            IdentityId::Uw4m => "unitary minor product, second factor conjugated",
            IdentityId::Uw2 => "mean of |tr(AM)|^2, unitary",
        }
    }
}

impl fmt::Display for IdentityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            IdentityId::O2 => "o2",
            IdentityId::Okk => "okk",
            IdentityId::Ow4 => "ow4",
            IdentityId::Ot2m => "ot2m",
            IdentityId::Ot2s => "ot2s",
            IdentityId::Ukk => "ukk",
            IdentityId::Uw4s => "uw4s",
            IdentityId::Uw4m => "uw4m",
            IdentityId::Uw2 => "uw2",
        };
        f.write_str(s)
    }
}

impl FromStr for IdentityId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "o2" => Ok(IdentityId::O2),
            "okk" => Ok(IdentityId::Okk),
            "ow4" => Ok(IdentityId::Ow4),
            "ot2m" => Ok(IdentityId::Ot2m),
            "ot2s" => Ok(IdentityId::Ot2s),
            "ukk" => Ok(IdentityId::Ukk),
            "uw4s" => Ok(IdentityId::Uw4s),
            "uw4m" => Ok(IdentityId::Uw4m),
            "uw2" => Ok(IdentityId::Uw2),
            other => Err(Error::Parse(format!(
                "unknown identity '{other}' (known: o2 okk ow4 ot2m ot2s ukk uw4s uw4m uw2)"
            ))),
        }
    }
}

/// An exactly evaluated moment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactValue {
    pub value: Ratio<i64>,
    /// True when the index pattern is outside the identity's hypotheses
    /// (e.g. `i = i′` in the minor moments) and the quantity is identically
    /// zero rather than given by the formula.
    pub excluded_pattern: bool,
}

impl ExactValue {
    fn plain(value: Ratio<i64>) -> Self {
        ExactValue { value, excluded_pattern: false }
    }

    fn excluded() -> Self {
        ExactValue { value: Ratio::zero(), excluded_pattern: true }
    }

    pub fn as_f64(&self) -> f64 {
        *self.value.numer() as f64 / *self.value.denom() as f64
    }
}

impl fmt::Display for ExactValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

fn d(a: usize, b: usize) -> i64 {
    i64::from(a == b)
}

fn validate_indices(id: IdentityId, n: usize, indices: &[usize]) -> Result<()> {
    if n < id.n_min() {
        return Err(Error::Dimension(format!(
            "identity {id} needs n >= {}, got {n}",
            id.n_min()
        )));
    }
    if indices.len() != id.arity() {
        return Err(Error::InvalidParameter(format!(
            "identity {id} takes {} indices, got {}",
            id.arity(),
            indices.len()
        )));
    }
    let positional = match id {
        IdentityId::Okk | IdentityId::Ukk => &indices[..2],
        _ => indices,
    };
    if let Some(&bad) = positional.iter().find(|&&i| i >= n) {
        return Err(Error::InvalidParameter(format!(
            "index {bad} out of range for n = {n}"
        )));
    }
    if matches!(id, IdentityId::Okk | IdentityId::Ukk) && indices[2] > 1 {
        return Err(Error::InvalidParameter(format!(
            "frame-compression selector must be 0 (KK*) or 1 (KC2K*), got {}",
            indices[2]
        )));
    }
    Ok(())
}

/// Exact value of a catalog identity at a concrete index tuple.
///
/// All results are rationals in `n` determined by the coincidence pattern
/// of the indices; no floating arithmetic is involved. For `ot2s` the value
/// is the orthogonal fourth-moment combination
///
/// ```text
/// E[m_ij m_ji m_kl m_lk]
///   = (n+1)/((n−1)n(n+2)) · [δ_ij δ_kl(1−δ_ik) + δ_ik δ_jl(1−δ_ij) + δ_il δ_jk(1−δ_ij)]
///   + 3/(n(n+2)) · 1{i=j=k=l},
/// ```
///
/// whose weighted sum over a normalized diagonal `A` is
/// [`trace_square_second_moment`].
pub fn evaluate_identity(id: IdentityId, n: usize, indices: &[usize]) -> Result<ExactValue> {
    validate_indices(id, n, indices)?;
    let ni = n as i64;
    let v = match id {
        IdentityId::O2 => {
            let [i, j, k, l] = [indices[0], indices[1], indices[2], indices[3]];
            Ratio::new(d(i, k) * d(j, l), ni)
        }
        IdentityId::Okk | IdentityId::Ukk => {
            let (i, j, t) = (indices[0], indices[1], indices[2]);
            if t == 0 {
                Ratio::new(2 * d(i, j), ni)
            } else {
                Ratio::zero()
            }
        }
        IdentityId::Ow4 => {
            let [i, ip, j, jp] = [indices[0], indices[1], indices[2], indices[3]];
            if i == ip || j == jp {
                return Ok(ExactValue::excluded());
            }
            Ratio::new(2 * (d(i, j) * d(ip, jp) - d(i, jp) * d(j, ip)), ni * (ni - 1))
        }
        IdentityId::Ot2m | IdentityId::Uw2 => Ratio::one(),
        IdentityId::Ot2s => {
            let [i, j, k, l] = [indices[0], indices[1], indices[2], indices[3]];
            let pairs = d(i, j) * d(k, l) * (1 - d(i, k))
                + d(i, k) * d(j, l) * (1 - d(i, j))
                + d(i, l) * d(j, k) * (1 - d(i, j));
            let all = d(i, j) * d(j, k) * d(k, l);
            Ratio::new(pairs * (ni + 1), (ni - 1) * ni * (ni + 2))
                + Ratio::new(3 * all, ni * (ni + 2))
        }
        IdentityId::Uw4s => {
            let [i, j, k, l] = [indices[0], indices[1], indices[2], indices[3]];
            let all = d(i, j) * d(j, k) * d(k, l);
            Ratio::new(-2 * d(i, l) * d(j, k) * (1 - d(i, j)), (ni - 1) * (ni + 1))
                + Ratio::new(2 * d(i, j) * d(k, l) * (1 - d(i, k)), (ni - 1) * ni * (ni + 1))
                - Ratio::new(2 * all, ni * (ni + 1))
        }
        IdentityId::Uw4m => {
            let [i, j, k, l] = [indices[0], indices[1], indices[2], indices[3]];
            let all = d(i, j) * d(j, k) * d(k, l);
            Ratio::new(2 * d(i, k) * d(j, l) * (1 - d(i, j)), (ni - 1) * (ni + 1))
                - Ratio::new(2 * d(i, j) * d(k, l) * (1 - d(i, k)), ni * (ni - 1) * (ni + 1))
                + Ratio::new(2 * all, ni * (ni + 1))
        }
    };
    Ok(ExactValue::plain(v))
}

/// Canonical form of an index tuple: each index relabeled by first
/// occurrence. Identities depend on their indices only through this.
pub fn coincidence_pattern(indices: &[usize]) -> Vec<usize> {
    let mut seen: Vec<usize> = Vec::new();
    indices
        .iter()
        .map(|&i| {
            if let Some(p) = seen.iter().position(|&s| s == i) {
                p
            } else {
                seen.push(i);
                seen.len() - 1
            }
        })
        .collect()
}

/// Index tuples exercising each coincidence pattern of an identity at
/// dimension `n` (used by the certification sweeps).
pub fn representative_patterns(id: IdentityId, n: usize) -> Vec<Vec<usize>> {
    let all: Vec<Vec<usize>> = match id {
        IdentityId::O2 | IdentityId::Ot2s | IdentityId::Uw4s | IdentityId::Uw4m => vec![
            vec![0, 0, 0, 0],
            vec![0, 0, 1, 1],
            vec![0, 1, 0, 1],
            vec![0, 1, 1, 0],
            vec![0, 1, 0, 0],
            vec![0, 1, 2, 2],
        ],
        IdentityId::Okk | IdentityId::Ukk => {
            vec![vec![0, 0, 0], vec![0, 1, 0], vec![0, 0, 1], vec![0, 1, 1]]
        }
        IdentityId::Ow4 => vec![
            vec![0, 1, 0, 1],
            vec![0, 1, 1, 0],
            vec![0, 1, 0, 2],
            vec![0, 0, 0, 1], // excluded pattern: identically zero
        ],
        IdentityId::Ot2m | IdentityId::Uw2 => vec![vec![]],
    };
    // Keep only tuples whose positional indices fit the dimension; the
    // trailing selector slot of the frame compressions is not an index.
    let positional = match id {
        IdentityId::Okk | IdentityId::Ukk => 2,
        other => other.arity(),
    };
    all.into_iter().filter(|ix| ix[..positional].iter().all(|&i| i < n)).collect()
}

/// Outcome of one Monte Carlo certification run.
#[derive(Debug, Clone, serde::Serialize)]
pub struct MomentCheckReport {
    pub id: IdentityId,
    pub group: Group,
    pub n: usize,
    pub indices: Vec<usize>,
    pub exact: f64,
    pub exact_rational: String,
    pub excluded_pattern: bool,
    pub estimate: f64,
    pub se: f64,
    /// Imaginary component of the estimate (identically zero over the
    /// reals; must vanish statistically over the complexes).
    pub imag_estimate: f64,
    pub imag_se: f64,
    /// Deviation in combined-uncertainty units; the rounding floor
    /// `10⁻¹³(1+|exact|)` keeps degenerate (zero-variance) cases finite.
    pub z: f64,
    pub samples: usize,
    pub pass: bool,
}

fn deviation_z(diff: f64, se: f64, scale: f64) -> f64 {
    diff.abs() / (se + 1e-13 * (1.0 + scale))
}

/// Monte Carlo estimate of a catalog identity from fresh Haar draws, with
/// a z-score against the exact value. `samples` must be at least 10⁴ so
/// the normal approximation behind the z-score is trustworthy.
pub fn mc_estimate(
    id: IdentityId,
    n: usize,
    indices: &[usize],
    samples: usize,
    seed: u64,
) -> Result<MomentCheckReport> {
    validate_indices(id, n, indices)?;
    if samples < 10_000 {
        return Err(Error::InvalidParameter(format!(
            "moment certification needs at least 10^4 samples, got {samples}"
        )));
    }
    let exact = evaluate_identity(id, n, indices)?;
    // Decorrelate stream blocks across (identity, n) so sweeps can share a
    // master seed.
    let base_stream = ((IdentityId::ALL.iter().position(|&x| x == id).unwrap() * 64 + n) as u64)
        << 32;
    let ix = indices.to_vec();
    let draws: Vec<(f64, f64)> = match id.group() {
        Group::Orthogonal => parallel_batch(seed, base_stream, samples, |rng, _| {
            (measure_real(id, n, &ix, rng), 0.0)
        }),
        Group::Unitary => parallel_batch(seed, base_stream, samples, |rng, _| {
            let z = measure_complex(id, n, &ix, rng);
            (z.re, z.im)
        }),
    };
    let re: Vec<f64> = draws.iter().map(|p| p.0).collect();
    let im: Vec<f64> = draws.iter().map(|p| p.1).collect();
    if re.iter().chain(&im).any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite draw in moment estimate".into()));
    }
    let mre = mean_se(&re);
    let mim = mean_se(&im);
    let target = exact.as_f64();
    let z = deviation_z(mre.mean - target, mre.se, target.abs())
        .max(deviation_z(mim.mean, mim.se, target.abs()));
    Ok(MomentCheckReport {
        id,
        group: id.group(),
        n,
        indices: ix,
        exact: target,
        exact_rational: exact.value.to_string(),
        excluded_pattern: exact.excluded_pattern,
        estimate: mre.mean,
        se: mre.se,
        imag_estimate: mim.mean,
        imag_se: mim.se,
        z,
        samples,
        pass: z <= 4.0,
    })
}

fn measure_real(id: IdentityId, n: usize, ix: &[usize], rng: &mut crate::rng::RngStream) -> f64 {
    match id {
        IdentityId::O2 => {
            let m = sample_haar::<f64>(n, rng).expect("gaussian input is full rank");
            m[(ix[0], ix[1])] * m[(ix[2], ix[3])]
        }
        IdentityId::Okk => {
            let k = Frame2::<f64>::sample(n, rng).expect("gaussian frame is full rank");
            let (k0, k1) = k.columns();
            let (i, j) = (ix[0], ix[1]);
            if ix[2] == 0 {
                k0[i] * k0[j] + k1[i] * k1[j]
            } else {
                k0[i] * k1[j] - k1[i] * k0[j]
            }
        }
        IdentityId::Ow4 => {
            let k = Frame2::<f64>::sample(n, rng).expect("gaussian frame is full rank");
            let (k0, k1) = k.columns();
            let minor = |a: usize, b: usize| k0[a] * k1[b] - k1[a] * k0[b];
            minor(ix[0], ix[1]) * minor(ix[2], ix[3])
        }
        IdentityId::Ot2m => {
            let m = sample_haar::<f64>(n, rng).expect("gaussian input is full rank");
            let mut t = 0.0;
            for i in 0..n {
                for j in 0..n {
                    t += m[(i, j)] * m[(j, i)];
                }
            }
            t
        }
        IdentityId::Ot2s => {
            let m = sample_haar::<f64>(n, rng).expect("gaussian input is full rank");
            m[(ix[0], ix[1])] * m[(ix[1], ix[0])] * m[(ix[2], ix[3])] * m[(ix[3], ix[2])]
        }
        _ => unreachable!("real measurement on a unitary identity"),
    }
}

fn measure_complex(
    id: IdentityId,
    n: usize,
    ix: &[usize],
    rng: &mut crate::rng::RngStream,
) -> Complex64 {
    match id {
        IdentityId::Ukk => {
            let k = Frame2::<Complex64>::sample(n, rng).expect("gaussian frame is full rank");
            let (k0, k1) = k.columns();
            let (i, j) = (ix[0], ix[1]);
            if ix[2] == 0 {
                k0[i] * k0[j].conj() + k1[i] * k1[j].conj()
            } else {
                k0[i] * k1[j].conj() - k1[i] * k0[j].conj()
            }
        }
        IdentityId::Uw4s | IdentityId::Uw4m => {
            let k = Frame2::<Complex64>::sample(n, rng).expect("gaussian frame is full rank");
            let (k0, k1) = k.columns();
            let minor = |a: usize, b: usize| k0[a] * k1[b].conj() - k1[a] * k0[b].conj();
            let first = minor(ix[0], ix[1]);
            let second = minor(ix[2], ix[3]);
            if id == IdentityId::Uw4s {
                first * second
            } else {
                first * second.conj()
            }
        }
        IdentityId::Uw2 => {
            let m = sample_haar::<Complex64>(n, rng).expect("gaussian input is full rank");
            let t = m.trace();
            Complex64::new(t.norm_sqr(), 0.0)
        }
        _ => unreachable!("complex measurement on an orthogonal identity"),
    }
}

/// Exact second moment of `tr((AM)²)` over the orthogonal group for a
/// diagonal coefficient matrix, as a big rational in the (float) entries:
///
/// ```text
/// E[(tr((AM)²))²] = 3(n+1)(s₂² − s₄)/((n−1)n(n+2)) + 3s₄/(n(n+2)),
/// ```
///
/// with `s₂ = Σa_ii²`, `s₄ = Σa_ii⁴` carried exactly (every f64 is a
/// rational). For normalized `A` this is at most [`trace_square_bound`],
/// with the gap closing as the `|a_ii|` equalize (`s₄` minimal).
pub fn trace_square_second_moment(a: &CoefficientMatrix<f64>) -> Result<BigRational> {
    if !a.is_diagonal() {
        return Err(Error::InvalidParameter(
            "second-moment expansion needs a diagonal coefficient matrix".into(),
        ));
    }
    let n = a.dim();
    if n < 2 {
        return Err(Error::Dimension("second-moment expansion needs n >= 2".into()));
    }
    let mut s2 = BigRational::zero();
    let mut s4 = BigRational::zero();
    for i in 0..n {
        let ai = BigRational::from_float(a.matrix()[(i, i)])
            .ok_or_else(|| Error::Numerical("non-finite diagonal entry".into()))?;
        let ai2 = &ai * &ai;
        s4 += &ai2 * &ai2;
        s2 += ai2;
    }
    let big = |k: usize| BigRational::from_integer(BigInt::from(k));
    let (nm1, nn, np1, np2) = (big(n - 1), big(n), big(n + 1), big(n + 2));
    Ok(big(3) * &np1 * (&s2 * &s2 - &s4) / (&nm1 * &nn * &np2) + big(3) * &s4 / (&nn * &np2))
}

/// Dimension-only bound on [`trace_square_second_moment`] for normalized
/// coefficients: `3 + 6/((n−1)(n+2))`.
pub fn trace_square_bound(n: usize) -> Result<Ratio<i64>> {
    if n < 2 {
        return Err(Error::Dimension("bound defined for n >= 2".into()));
    }
    let ni = n as i64;
    Ok(Ratio::from_integer(3) + Ratio::new(6, (ni - 1) * (ni + 2)))
}

/// Entry monomial for the brute-force oracle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MonomialSpec {
    /// `Π m_rc^e[r][c]` for Haar `M` on O(2).
    OrthogonalEntries([[u32; 2]; 2]),
    /// `E[m^p conj(m)^q]` for `m = e^{iθ}` Haar on U(1).
    UnitaryPhase(u32, u32),
}

impl MonomialSpec {
    fn degree(&self) -> u32 {
        match self {
            MonomialSpec::OrthogonalEntries(e) => e.iter().flatten().sum(),
            MonomialSpec::UnitaryPhase(p, q) => p + q,
        }
    }
}

/// Exact Haar integration in the one-parameter groups, by the trapezoid
/// rule over the angle. Haar on O(2) is an even mixture of the rotations
/// `[[c,−s],[s,c]]` and the reflections `[[c,s],[s,−c]]`; Haar on U(1) is
/// the uniform phase. A degree-`d` entry monomial is a trigonometric
/// polynomial of degree `d` in the angle, so an `N`-point trapezoid rule is
/// exact for `d < N`; with `N = 64` and degree ≤ 8 the only error left is
/// rounding, far below the 10⁻¹⁰ budget.
pub fn quadrature_oracle(spec: &MonomialSpec) -> Result<f64> {
    if spec.degree() > 8 {
        return Err(Error::InvalidParameter(format!(
            "oracle supports monomials of degree at most 8, got {}",
            spec.degree()
        )));
    }
    const N: usize = 64;
    let mut acc = 0.0;
    let mut acc_im = 0.0;
    for k in 0..N {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / N as f64;
        let (s, c) = theta.sin_cos();
        match spec {
            MonomialSpec::OrthogonalEntries(e) => {
                let rot = [[c, -s], [s, c]];
                let refl = [[c, s], [s, -c]];
                let term = |m: [[f64; 2]; 2]| -> f64 {
                    let mut p = 1.0;
                    for r in 0..2 {
                        for col in 0..2 {
                            p *= m[r][col].powi(e[r][col] as i32);
                        }
                    }
                    p
                };
                acc += 0.5 * term(rot) + 0.5 * term(refl);
            }
            MonomialSpec::UnitaryPhase(p, q) => {
                let freq = *p as f64 - *q as f64;
                acc += (freq * theta).cos();
                acc_im += (freq * theta).sin();
            }
        }
    }
    let value = acc / N as f64;
    let imag = acc_im / N as f64;
    if imag.abs() > 1e-12 {
        return Err(Error::Numerical(format!("oracle produced imaginary part {imag}")));
    }
    Ok(value)
}

/// All cross-checks between the exact formulas and the brute-force oracle
/// in the dimensions where both exist: every orthogonal identity pattern at
/// n = 2, and the unitary trace moment at n = 1. Returns
/// `(label, exact, oracle)` triples; agreement should be within 10⁻¹⁰.
pub fn exact_vs_quadrature() -> Result<Vec<(String, f64, f64)>> {
    let mut out = Vec::new();
    let n = 2;
    let entry = |i: usize, j: usize| -> [[u32; 2]; 2] {
        let mut e = [[0u32; 2]; 2];
        e[i][j] += 1;
        e
    };
    let add = |e: &mut [[u32; 2]; 2], f: [[u32; 2]; 2]| {
        for r in 0..2 {
            for c in 0..2 {
                e[r][c] += f[r][c];
            }
        }
    };
    let monomial = |factors: &[(usize, usize)]| -> Result<f64> {
        let mut e = [[0u32; 2]; 2];
        for &(i, j) in factors {
            add(&mut e, entry(i, j));
        }
        quadrature_oracle(&MonomialSpec::OrthogonalEntries(e))
    };

    // o2 and ot2s: plain entry monomials over all index tuples.
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let ix = [i, j, k, l];
                    let exact = evaluate_identity(IdentityId::O2, n, &ix)?.as_f64();
                    let oracle = monomial(&[(i, j), (k, l)])?;
                    out.push((format!("o2[{i}{j}{k}{l}]"), exact, oracle));
                    let exact = evaluate_identity(IdentityId::Ot2s, n, &ix)?.as_f64();
                    let oracle = monomial(&[(i, j), (j, i), (k, l), (l, k)])?;
                    out.push((format!("ot2s[{i}{j}{k}{l}]"), exact, oracle));
                }
            }
        }
    }

    // okk: at n = 2 the frame is the whole matrix, so the compressions are
    // short monomial sums.
    for i in 0..n {
        for j in 0..n {
            for t in 0..2 {
                let exact = evaluate_identity(IdentityId::Okk, n, &[i, j, t])?.as_f64();
                let oracle = if t == 0 {
                    monomial(&[(i, 0), (j, 0)])? + monomial(&[(i, 1), (j, 1)])?
                } else {
                    monomial(&[(i, 0), (j, 1)])? - monomial(&[(i, 1), (j, 0)])?
                };
                out.push((format!("okk[{i}{j}{t}]"), exact, oracle));
            }
        }
    }

    // ow4: expand each 2x2 column minor into its four monomials.
    for (i, ip) in [(0, 1), (1, 0)] {
        for (j, jp) in [(0, 1), (1, 0)] {
            let exact = evaluate_identity(IdentityId::Ow4, n, &[i, ip, j, jp])?.as_f64();
            let oracle = monomial(&[(i, 0), (ip, 1), (j, 0), (jp, 1)])?
                - monomial(&[(i, 0), (ip, 1), (j, 1), (jp, 0)])?
                - monomial(&[(i, 1), (ip, 0), (j, 0), (jp, 1)])?
                + monomial(&[(i, 1), (ip, 0), (j, 1), (jp, 0)])?;
            out.push((format!("ow4[{i}{ip}{j}{jp}]"), exact, oracle));
        }
    }

    // ot2m with A = I: tr(M²) termwise.
    let exact = evaluate_identity(IdentityId::Ot2m, n, &[])?.as_f64();
    let mut oracle = 0.0;
    for i in 0..n {
        for j in 0..n {
            oracle += monomial(&[(i, j), (j, i)])?;
        }
    }
    out.push(("ot2m".into(), exact, oracle));

    // uw2 at n = 1: |tr(M)|² = m m̄.
    let exact = evaluate_identity(IdentityId::Uw2, 1, &[])?.as_f64();
    let oracle = quadrature_oracle(&MonomialSpec::UnitaryPhase(1, 1))?;
    out.push(("uw2@1".into(), exact, oracle));

    Ok(out)
}
