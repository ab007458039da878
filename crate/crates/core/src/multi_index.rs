//! Multi-indices over a fixed number of variables, with the graded
//! lexicographic order used for every coefficient map and design matrix.
//!
//! Ordering: lower total degree first; within a degree, exponent tuples in
//! descending lexicographic order, so for two variables degree 2 enumerates
//! (2,0), (1,1), (0,2). This is the column order of design matrices and the
//! iteration order of every serialized series.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

/// Exponent tuple `m = (m_1, ..., m_d)` with `degree = m_1 + ... + m_d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex {
    exponents: Vec<u32>,
}

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        Self { exponents }
    }

    /// The zero index (constant term) in `d` variables.
    pub fn zero(d: usize) -> Self {
        Self {
            exponents: vec![0; d],
        }
    }

    /// The unit index `e_axis` (exponent 1 on one variable), 0-based axis.
    pub fn unit(d: usize, axis: usize) -> Self {
        let mut exponents = vec![0; d];
        exponents[axis] = 1;
        Self { exponents }
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    /// Number of variables.
    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    /// Total degree.
    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }

    /// Axes with nonzero exponent.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.exponents
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(i, _)| i)
    }

    /// Copy with exponent on `axis` decremented; `None` if it is zero.
    pub fn step_down(&self, axis: usize) -> Option<Self> {
        if self.exponents[axis] == 0 {
            return None;
        }
        let mut e = self.exponents.clone();
        e[axis] -= 1;
        Some(Self { exponents: e })
    }

    /// Copy with exponent on `axis` set to `value`.
    pub fn with_exponent(&self, axis: usize, value: u32) -> Self {
        let mut e = self.exponents.clone();
        e[axis] = value;
        Self { exponents: e }
    }

    /// `prod_i m_i!` evaluated in f64.
    pub fn factorial(&self) -> f64 {
        self.exponents
            .iter()
            .map(|&e| (1..=u64::from(e)).map(|k| k as f64).product::<f64>())
            .product()
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        debug_assert_eq!(self.exponents.len(), other.exponents.len());
        self.degree()
            .cmp(&other.degree())
            // descending lex within a degree: larger tuple sorts earlier
            .then_with(|| other.exponents.cmp(&self.exponents))
    }
}

/// Binomial coefficient in exact integer arithmetic (panics on overflow,
/// which the degree cap rules out).
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i).expect("binomial overflow") / (i + 1);
    }
    acc
}

/// Number of monomials of exact degree `k` in `d` variables:
/// `C(k + d - 1, d - 1)`.
pub fn monomial_count(d: usize, k: u32) -> usize {
    binomial(u64::from(k) + d as u64 - 1, d as u64 - 1) as usize
}

/// All multi-indices of exact degree `k` in `d` variables, in the canonical
/// (descending lexicographic) order.
pub fn monomials_of_degree(d: usize, k: u32) -> Vec<MultiIndex> {
    let mut out = Vec::with_capacity(monomial_count(d, k));
    let mut current = vec![0u32; d];
    fill(&mut out, &mut current, 0, k);
    out
}

fn fill(out: &mut Vec<MultiIndex>, current: &mut Vec<u32>, axis: usize, remaining: u32) {
    if axis + 1 == current.len() {
        current[axis] = remaining;
        out.push(MultiIndex::new(current.clone()));
        return;
    }
    for e in (0..=remaining).rev() {
        current[axis] = e;
        fill(out, current, axis + 1, remaining - e);
    }
    current[axis] = 0;
}

/// All multi-indices of degree at most `max_degree`, in the graded order.
pub fn monomials_up_to(d: usize, max_degree: u32) -> Vec<MultiIndex> {
    (0..=max_degree)
        .flat_map(|k| monomials_of_degree(d, k))
        .collect()
}
