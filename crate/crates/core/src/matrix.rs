//! Dense square matrices over `f64` or `Complex64`, just large enough for the
//! sampling and certification routines in this crate. Row-major storage, no
//! blocking — dimensions stay in the hundreds.

use std::fmt;
use std::io::{BufRead, Write};
use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Scalar field of a matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Field {
    Real,
    Complex,
}

/// Compact matrix group a sample lives on. Orthogonal matrices are real,
/// unitary ones complex; the pairing is fixed throughout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Group {
    Orthogonal,
    Unitary,
}

impl Group {
    pub fn field(self) -> Field {
        match self {
            Group::Orthogonal => Field::Real,
            Group::Unitary => Field::Complex,
        }
    }

    /// Variance of the real statistic certified against the normal law:
    /// 1 on the orthogonal group, 1/2 (real part) on the unitary group.
    pub fn sigma2(self) -> f64 {
        match self {
            Group::Orthogonal => 1.0,
            Group::Unitary => 0.5,
        }
    }
}

impl std::str::FromStr for Group {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "orthogonal" => Ok(Group::Orthogonal),
            "unitary" => Ok(Group::Unitary),
            other => Err(Error::Parse(format!("unknown group {other:?}"))),
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Group::Orthogonal => "orthogonal",
            Group::Unitary => "unitary",
        })
    }
}

/// Field elements the matrix code is generic over: `f64` and `Complex64`.
pub trait Scalar:
    Copy
    + PartialEq
    + fmt::Debug
    + Send
    + Sync
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Neg<Output = Self>
    + 'static
{
    const FIELD: Field;

    fn zero() -> Self;
    fn one() -> Self;
    fn conj(self) -> Self;
    fn re(self) -> f64;
    fn im(self) -> f64;
    fn abs(self) -> f64;
    /// |x|^2, cheaper than `abs` squared for complex values.
    fn abs_sq(self) -> f64;
    fn from_re(x: f64) -> Self;
    fn scale(self, x: f64) -> Self;
    fn is_finite_num(self) -> bool;
    /// CSV token for this entry (complex as `a+bi`).
    fn fmt_csv(self) -> String;
    fn parse_csv(token: &str) -> Result<Self>;
}

impl Scalar for f64 {
    const FIELD: Field = Field::Real;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn conj(self) -> Self {
        self
    }
    fn re(self) -> f64 {
        self
    }
    fn im(self) -> f64 {
        0.0
    }
    fn abs(self) -> f64 {
        f64::abs(self)
    }
    fn abs_sq(self) -> f64 {
        self * self
    }
    fn from_re(x: f64) -> Self {
        x
    }
    fn scale(self, x: f64) -> Self {
        self * x
    }
    fn is_finite_num(self) -> bool {
        self.is_finite()
    }
    fn fmt_csv(self) -> String {
        format!("{self:?}")
    }
    fn parse_csv(token: &str) -> Result<Self> {
        token
            .trim()
            .parse::<f64>()
            .map_err(|e| Error::Parse(format!("bad real entry {token:?}: {e}")))
    }
}

impl Scalar for Complex64 {
    const FIELD: Field = Field::Complex;

    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn re(self) -> f64 {
        self.re
    }
    fn im(self) -> f64 {
        self.im
    }
    fn abs(self) -> f64 {
        self.norm()
    }
    fn abs_sq(self) -> f64 {
        self.norm_sqr()
    }
    fn from_re(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn scale(self, x: f64) -> Self {
        self * x
    }
    fn is_finite_num(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn fmt_csv(self) -> String {
        if self.im < 0.0 || (self.im == 0.0 && self.im.is_sign_negative()) {
            format!("{:?}-{:?}i", self.re, -self.im)
        } else {
            format!("{:?}+{:?}i", self.re, self.im)
        }
    }
    fn parse_csv(token: &str) -> Result<Self> {
        parse_complex(token.trim())
    }
}

/// Split `a+bi` / `a-bi` at the sign that separates the two parts, skipping a
/// leading sign and any sign directly after an exponent marker.
fn parse_complex(token: &str) -> Result<Complex64> {
    let body = token
        .strip_suffix('i')
        .ok_or_else(|| Error::Parse(format!("complex entry {token:?} must end in 'i'")))?;
    let bytes = body.as_bytes();
    let mut split = None;
    for (pos, &b) in bytes.iter().enumerate().skip(1) {
        if (b == b'+' || b == b'-') && !matches!(bytes[pos - 1], b'e' | b'E') {
            split = Some(pos); // keep the last candidate: exponent signs come earlier
        }
    }
    let pos = split.ok_or_else(|| Error::Parse(format!("complex entry {token:?} needs a+bi form")))?;
    let re: f64 = body[..pos]
        .parse()
        .map_err(|e| Error::Parse(format!("bad real part in {token:?}: {e}")))?;
    let im_str = &body[pos..];
    let im: f64 = im_str
        .parse()
        .map_err(|e| Error::Parse(format!("bad imaginary part in {token:?}: {e}")))?;
    Ok(Complex64::new(re, im))
}

/// Square matrix with entries in `T`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(n: usize) -> Self {
        Mat { n, data: vec![T::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Dimension("matrix must have at least one row".into()));
        }
        let mut data = Vec::with_capacity(n * n);
        for (r, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::Dimension(format!(
                    "row {r} has {} entries, expected {n}",
                    row.len()
                )));
            }
            data.extend(row);
        }
        Ok(Mat { n, data })
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Mat::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = T::from_re(d);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Conjugate transpose (plain transpose over the reals).
    pub fn adjoint(&self) -> Self {
        let n = self.n;
        let mut out = Mat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.n, rhs.n, "matrix product needs equal dimensions");
        let n = self.n;
        let mut out = Mat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                let lhs_row = &mut out.data[i * n..(i + 1) * n];
                let rhs_row = &rhs.data[k * n..(k + 1) * n];
                for (o, &b) in lhs_row.iter_mut().zip(rhs_row) {
                    *o = *o + a * b;
                }
            }
        }
        out
    }

    pub fn trace(&self) -> T {
        (0..self.n).fold(T::zero(), |acc, i| acc + self[(i, i)])
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x.abs_sq()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }

    pub fn scale_in_place(&mut self, s: f64) {
        for x in &mut self.data {
            *x = x.scale(s);
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite_num())
    }

    /// Max-norm of `self * self^adj - I`; zero for a group element.
    pub fn unitarity_residual(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut s = T::zero();
                for k in 0..n {
                    s = s + self[(i, k)] * self[(j, k)].conj();
                }
                let target = if i == j { T::one() } else { T::zero() };
                worst = worst.max((s - target).abs());
            }
        }
        worst
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for i in 0..self.n {
            let line = self
                .row(i)
                .iter()
                .map(|x| x.fmt_csv())
                .collect::<Vec<_>>()
                .join(",");
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut rows = Vec::new();
        for line in r.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(T::parse_csv)
                .collect::<Result<Vec<T>>>()?;
            rows.push(row);
        }
        Mat::from_rows(rows)
    }
}

impl<T> Index<(usize, usize)> for Mat<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.n + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Mat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.n + j]
    }
}

/// Runtime-tagged square matrix, the file-format-facing type. Numeric code
/// works on `Mat<f64>` / `Mat<Complex64>` directly; this wrapper exists so
/// the CLI can defer the field choice to the input.
#[derive(Debug, Clone, PartialEq)]
pub enum SquareMatrix {
    Real(Mat<f64>),
    Complex(Mat<Complex64>),
}

impl SquareMatrix {
    pub fn field(&self) -> Field {
        match self {
            SquareMatrix::Real(_) => Field::Real,
            SquareMatrix::Complex(_) => Field::Complex,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SquareMatrix::Real(m) => m.dim(),
            SquareMatrix::Complex(m) => m.dim(),
        }
    }

    pub fn unitarity_residual(&self) -> f64 {
        match self {
            SquareMatrix::Real(m) => m.unitarity_residual(),
            SquareMatrix::Complex(m) => m.unitarity_residual(),
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        match self {
            SquareMatrix::Real(m) => m.write_csv(w),
            SquareMatrix::Complex(m) => m.write_csv(w),
        }
    }

    /// Parse a CSV matrix, taking the field from the tokens: any entry ending
    /// in `i` makes the whole matrix complex.
    pub fn read_csv(text: &str) -> Result<Self> {
        let complex = text
            .lines()
            .flat_map(|l| l.split(','))
            .any(|tok| tok.trim().ends_with('i'));
        if complex {
            Ok(SquareMatrix::Complex(Mat::read_csv(text.as_bytes())?))
        } else {
            Ok(SquareMatrix::Real(Mat::read_csv(text.as_bytes())?))
        }
    }
}
