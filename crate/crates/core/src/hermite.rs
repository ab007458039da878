//! Function model: finite multivariate Hermite series in the probabilists'
//! normalization, black-box point functions for Monte Carlo paths, and the
//! Gaussian moment oracle that closed-form expectations reduce to.
//!
//! `He_0 = 1`, `He_1 = x`, `He_{k+1}(x) = x He_k(x) - k He_{k-1}(x)`, so
//! `<He_j, He_k>_{N(0,1)} = k! delta_jk`. A series is a finitely supported
//! map from multi-indices to coefficients; conversion to and from the
//! monomial basis uses integer connection coefficients (exact in i128,
//! evaluated in f64), which caps the usable degree at
//! [`tol::MAX_DEGREE`] because those coefficients grow factorially.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss::SubspaceGaussian;
use crate::linalg::Matrix;
use crate::multi_index::{binomial, monomials_up_to, MultiIndex};
use crate::real::Real;
use crate::tol;

/// `He_k(x)` by the three-term recurrence.
pub fn he_value<T: Real>(k: u32, x: T) -> T {
    let mut prev = T::one();
    if k == 0 {
        return prev;
    }
    let mut cur = x;
    for j in 1..k {
        let next = x * cur - T::cast(f64::from(j)) * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `[He_0(x), ..., He_max(x)]` in one sweep.
pub fn he_values<T: Real>(max: u32, x: T) -> Vec<T> {
    let mut out = Vec::with_capacity(max as usize + 1);
    out.push(T::one());
    if max == 0 {
        return out;
    }
    out.push(x);
    for j in 1..max {
        let next = x * out[j as usize] - T::cast(f64::from(j)) * out[j as usize - 1];
        out.push(next);
    }
    out
}

/// Coefficient table `a[k][j]` with `He_k = sum_j a[k][j] x^j`, exact i128.
fn he_to_monomial_table(max: usize) -> Vec<Vec<i128>> {
    let mut a: Vec<Vec<i128>> = Vec::with_capacity(max + 1);
    a.push(vec![1]);
    if max == 0 {
        return a;
    }
    a.push(vec![0, 1]);
    for k in 1..max {
        let mut next = vec![0i128; k + 2];
        for j in 0..=k {
            next[j + 1] += a[k][j];
        }
        for j in 0..a[k - 1].len() {
            next[j] -= k as i128 * a[k - 1][j];
        }
        a.push(next);
    }
    a
}

/// Inverse table `b[k][j]` with `x^k = sum_j b[k][j] He_j`, exact i128
/// (from `x He_j = He_{j+1} + j He_{j-1}`).
fn monomial_to_he_table(max: usize) -> Vec<Vec<i128>> {
    let mut b: Vec<Vec<i128>> = Vec::with_capacity(max + 1);
    b.push(vec![1]);
    for k in 0..max {
        let mut next = vec![0i128; k + 2];
        for j in 0..=k {
            let c = b[k][j];
            if c == 0 {
                continue;
            }
            next[j + 1] += c;
            if j > 0 {
                next[j - 1] += j as i128 * c;
            }
        }
        b.push(next);
    }
    b
}

fn check_degree(degree: u32) -> Result<()> {
    if degree as usize > tol::MAX_DEGREE {
        return Err(Error::DegreeOverflow {
            degree: degree as usize,
            max: tol::MAX_DEGREE,
        });
    }
    Ok(())
}

/// Finitely supported Hermite expansion `f = sum_m c_m He_m`,
/// `He_m(x) = prod_i He_{m_i}(x_i)`.
///
/// No zero coefficients are stored; iteration follows the graded
/// multi-index order.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteSeries<T: Real> {
    dim: usize,
    coeffs: BTreeMap<MultiIndex, T>,
}

/// One serialized term; the on-disk format is a JSON array of these.
#[derive(Serialize, Deserialize)]
struct TermRecord {
    exponents: Vec<u32>,
    coeff: f64,
}

impl<T: Real> HermiteSeries<T> {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            coeffs: BTreeMap::new(),
        }
    }

    /// The constant function `c`.
    pub fn constant(dim: usize, c: T) -> Self {
        let mut s = Self::zero(dim);
        s.insert(MultiIndex::zero(dim), c);
        s
    }

    /// The coordinate functional `x_axis` (0-based axis), i.e. `He_1` there.
    pub fn coordinate(dim: usize, axis: usize) -> Self {
        assert!(axis < dim, "axis out of range");
        let mut s = Self::zero(dim);
        s.insert(MultiIndex::unit(dim, axis), T::one());
        s
    }

    /// Builds a series from `(multi-index, coefficient)` terms, merging
    /// duplicates and dropping zeros. Rejects indices of the wrong length
    /// and degrees beyond the cap.
    pub fn from_terms(
        dim: usize,
        terms: impl IntoIterator<Item = (MultiIndex, T)>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter {
                detail: "series dimension must be positive".into(),
            });
        }
        let mut s = Self::zero(dim);
        for (m, c) in terms {
            if m.len() != dim {
                return Err(Error::DimensionMismatch {
                    context: "series multi-index",
                    expected: dim,
                    found: m.len(),
                });
            }
            check_degree(m.degree())?;
            s.insert(m, c);
        }
        Ok(s)
    }

    /// The polynomial `x^T a x + b . x + c` re-expressed in the Hermite
    /// basis (only degrees 0..2 appear; `x_i^2 = He_2(x_i) + 1`).
    pub fn from_quadratic_form(a: &Matrix<T>, b: &[T], c: T) -> Result<Self> {
        let dim = b.len();
        if a.len() != dim || a.iter().any(|row| row.len() != dim) {
            return Err(Error::DimensionMismatch {
                context: "quadratic form matrix",
                expected: dim,
                found: a.len(),
            });
        }
        let mut s = Self::zero(dim);
        let mut constant = c;
        // triangular traversal pairing a[i][j] with a[j][i]; indices are
        // the clearest form here
        #[allow(clippy::needless_range_loop)]
        for i in 0..dim {
            constant += a[i][i];
            s.insert(MultiIndex::unit(dim, i).with_exponent(i, 2), a[i][i]);
            s.insert(MultiIndex::unit(dim, i), b[i]);
            for j in (i + 1)..dim {
                let cross = a[i][j] + a[j][i];
                s.insert(MultiIndex::unit(dim, i).with_exponent(j, 1), cross);
            }
        }
        s.insert(MultiIndex::zero(dim), constant);
        Ok(s)
    }

    /// Dense random series: every coefficient up to `max_degree` drawn
    /// standard normal. A reproducible source of test functions.
    pub fn random<R: rand::Rng + ?Sized>(dim: usize, max_degree: u32, rng: &mut R) -> Self {
        let mut s = Self::zero(dim);
        for m in monomials_up_to(dim, max_degree) {
            s.insert(m, T::standard_normal(rng));
        }
        s
    }

    fn insert(&mut self, m: MultiIndex, c: T) {
        use std::collections::btree_map::Entry;
        if c == T::zero() {
            return;
        }
        match self.coeffs.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                let v = *e.get() + c;
                if v == T::zero() {
                    e.remove();
                } else {
                    e.insert(v);
                }
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Largest stored total degree (0 for the zero series).
    pub fn degree(&self) -> u32 {
        self.coeffs
            .keys()
            .map(MultiIndex::degree)
            .max()
            .unwrap_or(0)
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.len()
    }

    /// Coefficient of `m` (zero when absent).
    pub fn coeff(&self, m: &MultiIndex) -> T {
        self.coeffs.get(m).copied().unwrap_or_else(T::zero)
    }

    /// Terms in graded order.
    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, T)> {
        self.coeffs.iter().map(|(m, &c)| (m, c))
    }

    pub fn scaled(&self, s: T) -> Self {
        let mut out = Self::zero(self.dim);
        for (m, c) in self.terms() {
            out.insert(m.clone(), c * s);
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch {
                context: "series addition",
                expected: self.dim,
                found: other.dim,
            });
        }
        let mut out = self.clone();
        for (m, c) in other.terms() {
            out.insert(m.clone(), c);
        }
        Ok(out)
    }

    /// Pointwise value `sum_m c_m prod_i He_{m_i}(x_i)`.
    pub fn evaluate(&self, x: &[T]) -> Result<T> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "series evaluation point",
                expected: self.dim,
                found: x.len(),
            });
        }
        // per-axis He tables up to the largest exponent used on that axis
        let mut axis_max = vec![0u32; self.dim];
        for m in self.coeffs.keys() {
            for (a, &e) in m.exponents().iter().enumerate() {
                axis_max[a] = axis_max[a].max(e);
            }
        }
        let tables: Vec<Vec<T>> = axis_max
            .iter()
            .zip(x)
            .map(|(&mx, &xi)| he_values(mx, xi))
            .collect();
        let mut acc = T::zero();
        for (m, c) in self.terms() {
            let mut prod = c;
            for (a, &e) in m.exponents().iter().enumerate() {
                if e > 0 {
                    prod *= tables[a][e as usize];
                }
            }
            acc += prod;
        }
        Ok(acc)
    }

    /// Squared L2 norm under the standard Gaussian:
    /// `sum_m c_m^2 prod_i m_i!`.
    pub fn l2_norm_sq(&self) -> T {
        self.terms()
            .map(|(m, c)| c * c * T::cast(m.factorial()))
            .sum()
    }

    /// Expansion into the monomial basis. Fails beyond the degree cap.
    pub fn to_monomial_map(&self) -> Result<BTreeMap<MultiIndex, T>> {
        check_degree(self.degree())?;
        let table = he_to_monomial_table(self.degree() as usize);
        let mut out: BTreeMap<MultiIndex, T> = BTreeMap::new();
        for (m, c) in self.terms() {
            // tensor expansion, one supported axis at a time
            let mut partial: Vec<(MultiIndex, T)> = vec![(m.clone(), c)];
            for axis in m.support() {
                let k = m.exponents()[axis] as usize;
                let mut next = Vec::with_capacity(partial.len() * (k / 2 + 1));
                for (idx, coeff) in &partial {
                    for (j, &a) in table[k].iter().enumerate() {
                        if a == 0 {
                            continue;
                        }
                        next.push((
                            idx.with_exponent(axis, j as u32),
                            *coeff * T::cast(a as f64),
                        ));
                    }
                }
                partial = next;
            }
            for (idx, coeff) in partial {
                let slot = out.entry(idx).or_insert_with(T::zero);
                *slot += coeff;
            }
        }
        out.retain(|_, c| *c != T::zero());
        Ok(out)
    }

    /// Inverse of [`Self::to_monomial_map`]: reads a monomial-coefficient
    /// map as a polynomial and re-expands it in the Hermite basis.
    pub fn from_monomial_map(dim: usize, mono: &BTreeMap<MultiIndex, T>) -> Result<Self> {
        let max = mono.keys().map(MultiIndex::degree).max().unwrap_or(0);
        check_degree(max)?;
        let table = monomial_to_he_table(max as usize);
        let mut terms: Vec<(MultiIndex, T)> = Vec::new();
        for (m, &c) in mono {
            let mut partial: Vec<(MultiIndex, T)> = vec![(m.clone(), c)];
            for axis in m.support() {
                let k = m.exponents()[axis] as usize;
                let mut next = Vec::with_capacity(partial.len() * (k / 2 + 1));
                for (idx, coeff) in &partial {
                    for (j, &b) in table[k].iter().enumerate() {
                        if b == 0 {
                            continue;
                        }
                        next.push((
                            idx.with_exponent(axis, j as u32),
                            *coeff * T::cast(b as f64),
                        ));
                    }
                }
                partial = next;
            }
            terms.extend(partial);
        }
        Self::from_terms(dim, terms)
    }

    /// The translated function `x -> f(x + shift)`.
    pub fn translate(&self, shift: &[T]) -> Result<Self> {
        if shift.len() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "series translation shift",
                expected: self.dim,
                found: shift.len(),
            });
        }
        let mut mono = self.to_monomial_map()?;
        for (axis, &s) in shift.iter().enumerate() {
            if s == T::zero() {
                continue;
            }
            let mut next: BTreeMap<MultiIndex, T> = BTreeMap::new();
            for (m, &c) in &mono {
                let k = m.exponents()[axis];
                // (x + s)^k expanded binomially
                let mut pw = T::one();
                for j in (0..=k).rev() {
                    let w = T::cast(binomial(u64::from(k), u64::from(j)) as f64) * pw;
                    let slot = next.entry(m.with_exponent(axis, j)).or_insert_with(T::zero);
                    *slot += c * w;
                    pw *= s;
                }
            }
            mono = next;
        }
        Self::from_monomial_map(self.dim, &mono)
    }

    /// Serializes as a JSON array of `{"exponents": [...], "coeff": n}`.
    pub fn to_json_string(&self) -> String {
        let records: Vec<TermRecord> = self
            .terms()
            .map(|(m, c)| TermRecord {
                exponents: m.exponents().to_vec(),
                coeff: c.to_f64().unwrap(),
            })
            .collect();
        serde_json::to_string_pretty(&records).expect("series serialization cannot fail")
    }

    /// Parses the JSON term-array format; the dimension is inferred from the
    /// exponent lists (which must agree, and there must be at least one).
    pub fn from_json_str(s: &str) -> Result<Self> {
        let records: Vec<TermRecord> = serde_json::from_str(s).map_err(|e| Error::Format {
            detail: format!("series JSON: {e}"),
        })?;
        let dim = records
            .first()
            .map(|r| r.exponents.len())
            .ok_or_else(|| Error::Format {
                detail: "series JSON holds no terms; dimension cannot be inferred".into(),
            })?;
        Self::from_terms(
            dim,
            records
                .into_iter()
                .map(|r| (MultiIndex::new(r.exponents), T::cast(r.coeff))),
        )
    }
}

/// Shared storage of a black-box evaluation rule.
type DynPointFn<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;

/// Black-box function of a point, for engines that only need evaluations.
#[derive(Clone)]
pub struct PointFunction<T: Real> {
    dim: usize,
    label: String,
    f: DynPointFn<T>,
}

impl<T: Real> fmt::Debug for PointFunction<T> {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.debug_struct("PointFunction")
            .field("dim", &self.dim)
            .field("label", &self.label)
            .finish()
    }
}

impl<T: Real> PointFunction<T> {
    pub fn new(
        dim: usize,
        label: impl Into<String>,
        f: impl Fn(&[T]) -> T + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            label: label.into(),
            f: Arc::new(f),
        }
    }

    /// Looks a function up by registry name:
    /// `one`, `coord:i` (1-based), `norm_sq`, `exp_linear:a1,...,ad`,
    /// `indicator_ball:r`.
    pub fn from_registry(name: &str, dim: usize) -> Result<Self> {
        let unknown = || Error::UnknownFunction { name: name.into() };
        if name == "one" {
            return Ok(Self::new(dim, name, |_x| T::one()));
        }
        if name == "norm_sq" {
            return Ok(Self::new(dim, name, |x: &[T]| {
                x.iter().map(|&v| v * v).sum()
            }));
        }
        if let Some(arg) = name.strip_prefix("coord:") {
            let i: usize = arg.parse().map_err(|_| unknown())?;
            if i == 0 || i > dim {
                return Err(Error::InvalidParameter {
                    detail: format!("coord:{i} is outside 1..={dim}"),
                });
            }
            return Ok(Self::new(dim, name, move |x: &[T]| x[i - 1]));
        }
        if let Some(arg) = name.strip_prefix("exp_linear:") {
            let coeffs: std::result::Result<Vec<f64>, _> =
                arg.split(',').map(str::parse::<f64>).collect();
            let coeffs = coeffs.map_err(|_| unknown())?;
            if coeffs.len() != dim {
                return Err(Error::DimensionMismatch {
                    context: "exp_linear coefficient list",
                    expected: dim,
                    found: coeffs.len(),
                });
            }
            let a: Vec<T> = coeffs.into_iter().map(T::cast).collect();
            return Ok(Self::new(dim, name, move |x: &[T]| {
                x.iter().zip(&a).map(|(&xi, &ai)| xi * ai).sum::<T>().exp()
            }));
        }
        if let Some(arg) = name.strip_prefix("indicator_ball:") {
            let r: f64 = arg.parse().map_err(|_| unknown())?;
            if r < 0.0 {
                return Err(Error::InvalidParameter {
                    detail: format!("indicator_ball radius {r} is negative"),
                });
            }
            let r2 = T::cast(r * r);
            return Ok(Self::new(dim, name, move |x: &[T]| {
                let n2: T = x.iter().map(|&v| v * v).sum();
                if n2 <= r2 {
                    T::one()
                } else {
                    T::zero()
                }
            }));
        }
        Err(unknown())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn evaluate(&self, x: &[T]) -> Result<T> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "point-function argument",
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok((self.f)(x))
    }
}

/// The thing the integral engines consume: a series (all engines) or a
/// black-box function (sampling/quadrature engines only).
#[derive(Debug, Clone)]
pub enum Integrand<T: Real> {
    Series(HermiteSeries<T>),
    Point(PointFunction<T>),
}

impl<T: Real> Integrand<T> {
    pub fn dim(&self) -> usize {
        match self {
            Integrand::Series(s) => s.dim(),
            Integrand::Point(p) => p.dim(),
        }
    }

    pub fn evaluate(&self, x: &[T]) -> Result<T> {
        match self {
            Integrand::Series(s) => s.evaluate(x),
            Integrand::Point(p) => p.evaluate(x),
        }
    }

    /// The series inside, if this is one.
    pub fn as_series(&self) -> Option<&HermiteSeries<T>> {
        match self {
            Integrand::Series(s) => Some(s),
            Integrand::Point(_) => None,
        }
    }
}

impl<T: Real> From<HermiteSeries<T>> for Integrand<T> {
    fn from(s: HermiteSeries<T>) -> Self {
        Integrand::Series(s)
    }
}

impl<T: Real> From<PointFunction<T>> for Integrand<T> {
    fn from(p: PointFunction<T>) -> Self {
        Integrand::Point(p)
    }
}

/// Memoizing evaluator of mixed moments `E[prod_i x_i^{m_i}]` under
/// `N(mean, cov)`.
///
/// Uses the integration-by-parts recurrence
/// `E[x_i g(x)] = mean_i E[g] + sum_j cov_ij E[d_j g]` applied to monomials:
/// with `m' = m - e_i`,
/// `M(m) = mean_i M(m') + sum_j cov_ij m'_j M(m' - e_j)`.
/// The covariance only needs to be symmetric; semidefiniteness is the
/// caller's promise and is not checked (the recurrence runs regardless).
pub struct MomentOracle<'a, T: Real> {
    mean: &'a [T],
    cov: &'a Matrix<T>,
    memo: HashMap<MultiIndex, T>,
}

impl<'a, T: Real> MomentOracle<'a, T> {
    pub fn new(mean: &'a [T], cov: &'a Matrix<T>) -> Result<Self> {
        let d = mean.len();
        if cov.len() != d || cov.iter().any(|row| row.len() != d) {
            return Err(Error::DimensionMismatch {
                context: "moment covariance",
                expected: d,
                found: cov.len(),
            });
        }
        let mut scale = 0.0f64;
        for row in cov {
            for &v in row {
                scale = scale.max(v.to_f64().unwrap().abs());
            }
        }
        // triangular traversal pairing cov[i][j] with cov[j][i]
        #[allow(clippy::needless_range_loop)]
        for i in 0..d {
            for j in (i + 1)..d {
                let asym = (cov[i][j] - cov[j][i]).to_f64().unwrap().abs();
                if asym > 1e-10 * (1.0 + scale) {
                    return Err(Error::InvalidParameter {
                        detail: format!("covariance is not symmetric at ({i},{j})"),
                    });
                }
            }
        }
        Ok(Self {
            mean,
            cov,
            memo: HashMap::new(),
        })
    }

    /// `E[x^m]`; the multi-index must have the oracle's dimension.
    pub fn moment(&mut self, m: &MultiIndex) -> Result<T> {
        if m.len() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                context: "moment multi-index",
                expected: self.mean.len(),
                found: m.len(),
            });
        }
        Ok(self.moment_inner(m))
    }

    fn moment_inner(&mut self, m: &MultiIndex) -> T {
        if m.degree() == 0 {
            return T::one();
        }
        if let Some(&v) = self.memo.get(m) {
            return v;
        }
        let i = m.support().next().expect("positive degree has support");
        let m1 = m.step_down(i).expect("supported axis steps down");
        let mut acc = self.mean[i] * self.moment_inner(&m1);
        let support: Vec<(usize, u32)> = m1.support().map(|j| (j, m1.exponents()[j])).collect();
        for (j, e) in support {
            let m2 = m1.step_down(j).expect("supported axis steps down");
            acc += self.cov[i][j] * T::cast(f64::from(e)) * self.moment_inner(&m2);
        }
        self.memo.insert(m.clone(), acc);
        acc
    }
}

/// One-shot mixed moment `E[x^m]` under `N(mean, cov)`.
pub fn gaussian_moment<T: Real>(mean: &[T], cov: &Matrix<T>, m: &MultiIndex) -> Result<T> {
    MomentOracle::new(mean, cov)?.moment(m)
}

/// Closed-form expectation of a Hermite series under a subspace Gaussian:
/// each `He_m` term is expanded into monomials whose moments the oracle
/// supplies. Exact up to rounding; the reference engine everything else is
/// tested against.
pub fn expect_under<T: Real>(f: &HermiteSeries<T>, g: &SubspaceGaussian<T>) -> Result<T> {
    if f.dim() != g.flat().dim() {
        return Err(Error::DimensionMismatch {
            context: "expectation integrand",
            expected: g.flat().dim(),
            found: f.dim(),
        });
    }
    let mono = f.to_monomial_map()?;
    let mut oracle = MomentOracle::new(g.mean(), g.covariance())?;
    let mut acc = T::zero();
    for (m, c) in &mono {
        acc += *c * oracle.moment_inner(m);
    }
    Ok(acc)
}
