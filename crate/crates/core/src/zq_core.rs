//! Cyclic-group arithmetic, roots of unity and the combinatorial index sets
//! (count vectors and Krawtchouk multi-indices) shared by the other modules.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Hard cap on the number of vectors an enumeration may produce.
pub const ENUMERATION_LIMIT: u128 = 1 << 26;

pub(crate) fn check_modulus(q: usize) -> Result<()> {
    if q < 2 {
        return Err(Error::InvalidModulus(q as u64));
    }
    Ok(())
}

/// An element of Z_q.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CyclicElement {
    value: usize,
    q: usize,
}

impl CyclicElement {
    pub fn new(value: usize, q: usize) -> Result<Self> {
        check_modulus(q)?;
        if value >= q {
            return Err(Error::Index(format!("{value} is not in Z_{q}")));
        }
        Ok(Self { value, q })
    }

    /// Reduces an arbitrary integer mod q.
    pub fn wrap(value: i64, q: usize) -> Result<Self> {
        check_modulus(q)?;
        Ok(Self {
            value: value.rem_euclid(q as i64) as usize,
            q,
        })
    }

    pub fn value(self) -> usize {
        self.value
    }

    pub fn modulus(self) -> usize {
        self.q
    }

    pub fn add(self, other: Self) -> Self {
        debug_assert_eq!(self.q, other.q);
        Self {
            value: (self.value + other.value) % self.q,
            q: self.q,
        }
    }

    pub fn sub(self, other: Self) -> Self {
        debug_assert_eq!(self.q, other.q);
        Self {
            value: (self.value + self.q - other.value) % self.q,
            q: self.q,
        }
    }

    pub fn neg(self) -> Self {
        Self {
            value: (self.q - self.value) % self.q,
            q: self.q,
        }
    }
}

/// Occupancy counts of the d coordinates over the q symbols.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CountVector {
    counts: Vec<usize>,
}

impl CountVector {
    /// Builds a count vector, checking that the entries sum to `d`.
    pub fn new(counts: Vec<usize>, d: usize) -> Result<Self> {
        check_modulus(counts.len())?;
        let total: usize = counts.iter().sum();
        if total != d {
            return Err(Error::Validation(format!(
                "count vector {counts:?} sums to {total}, expected {d}"
            )));
        }
        Ok(Self { counts })
    }

    /// Builds a count vector whose total is implied by its entries.
    pub fn from_counts(counts: Vec<usize>) -> Result<Self> {
        let d = counts.iter().sum();
        Self::new(counts, d)
    }

    /// The stationary starting point (d, 0, ..., 0).
    pub fn origin(d: usize, q: usize) -> Result<Self> {
        check_modulus(q)?;
        let mut counts = vec![0; q];
        counts[0] = d;
        Ok(Self { counts })
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn q(&self) -> usize {
        self.counts.len()
    }

    pub fn d(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Drops the zero-symbol count: m⁻ = (m[1], ..., m[q-1]).
    pub fn minus(&self) -> MultiIndex {
        MultiIndex {
            l: self.counts[1..].to_vec(),
            d: self.d(),
        }
    }
}

impl std::ops::Index<usize> for CountVector {
    type Output = usize;
    fn index(&self, i: usize) -> &usize {
        &self.counts[i]
    }
}

/// Krawtchouk index l = (l_1, ..., l_{q-1}) with |l| ≤ d.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex {
    l: Vec<usize>,
    d: usize,
}

impl MultiIndex {
    pub fn new(l: Vec<usize>, d: usize) -> Result<Self> {
        if l.is_empty() {
            return Err(Error::InvalidModulus(1));
        }
        let total: usize = l.iter().sum();
        if total > d {
            return Err(Error::Index(format!("|l| = {total} exceeds d = {d}")));
        }
        Ok(Self { l, d })
    }

    pub fn zero(d: usize, q: usize) -> Result<Self> {
        check_modulus(q)?;
        Ok(Self {
            l: vec![0; q - 1],
            d,
        })
    }

    pub fn entries(&self) -> &[usize] {
        &self.l
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn q(&self) -> usize {
        self.l.len() + 1
    }

    /// |l| = l_1 + ... + l_{q-1}.
    pub fn degree(&self) -> usize {
        self.l.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.l.iter().all(|&x| x == 0)
    }

    /// l⁺ = (d - |l|, l).
    pub fn plus(&self) -> CountVector {
        let mut counts = Vec::with_capacity(self.l.len() + 1);
        counts.push(self.d - self.degree());
        counts.extend_from_slice(&self.l);
        CountVector { counts }
    }
}

impl std::ops::Index<usize> for MultiIndex {
    type Output = usize;
    fn index(&self, i: usize) -> &usize {
        &self.l[i]
    }
}

/// e^{2πi (k mod q)/q}.
pub fn root_of_unity<T: Real>(q: usize, k: i64) -> Result<Complex<T>> {
    check_modulus(q)?;
    Ok(root_unchecked(q, k))
}

fn root_unchecked<T: Real>(q: usize, k: i64) -> Complex<T> {
    let k = k.rem_euclid(q as i64) as usize;
    // Evaluate on the upper half circle and conjugate for the lower half so
    // that θ_k·θ_{q-k} is as close to 1 as rounding allows.
    let (kk, flip) = if 2 * k > q { (q - k, true) } else { (k, false) };
    let (s, c) = if 4 * kk == q {
        (1.0, 0.0)
    } else if 2 * kk == q {
        (0.0, -1.0)
    } else if kk == 0 {
        (0.0, 1.0)
    } else {
        (2.0 * std::f64::consts::PI * kk as f64 / q as f64).sin_cos()
    };
    let s = if flip { -s } else { s };
    Complex::new(T::of(c), T::of(s))
}

/// Powers of θ_1 for a fixed modulus, computed once.
#[derive(Debug, Clone)]
pub struct RootTable<T: Real> {
    q: usize,
    roots: Vec<Complex<T>>,
}

impl<T: Real> RootTable<T> {
    pub fn new(q: usize) -> Result<Self> {
        check_modulus(q)?;
        let roots = (0..q).map(|k| root_unchecked(q, k as i64)).collect();
        Ok(Self { q, roots })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// θ_1^k = θ_k.
    #[inline]
    pub fn theta(&self, k: usize) -> Complex<T> {
        self.roots[k % self.q]
    }

    /// θ_1^{k} for a possibly negative exponent.
    #[inline]
    pub fn theta_signed(&self, k: i64) -> Complex<T> {
        self.roots[k.rem_euclid(self.q as i64) as usize]
    }

    /// θ_r^a = θ_1^{ra}.
    #[inline]
    pub fn pow(&self, r: usize, a: usize) -> Complex<T> {
        self.roots[(r % self.q) * (a % self.q) % self.q]
    }
}

/// C(n + k, k) as u128, `None` on overflow.
fn stars_and_bars(d: usize, q: usize) -> Option<u128> {
    // C(d + q - 1, q - 1)
    let k = (q - 1) as u128;
    let n = (d + q - 1) as u128;
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

/// Number of count vectors of total d over q symbols, C(d+q-1, q-1).
pub fn count_vector_cardinality(d: usize, q: usize) -> Result<u128> {
    check_modulus(q)?;
    stars_and_bars(d, q).ok_or_else(|| Error::size("count-vector space", u128::MAX, ENUMERATION_LIMIT))
}

fn guarded_cardinality(d: usize, q: usize) -> Result<usize> {
    let n = count_vector_cardinality(d, q)?;
    if n > ENUMERATION_LIMIT {
        return Err(Error::size("count-vector space", n, ENUMERATION_LIMIT));
    }
    Ok(n as usize)
}

/// All count vectors of total d over q symbols in ascending lexicographic
/// order, from (0, ..., 0, d) to (d, 0, ..., 0).
pub fn enumerate_count_vectors(d: usize, q: usize) -> Result<Vec<CountVector>> {
    let n = guarded_cardinality(d, q)?;
    let mut out = Vec::with_capacity(n);
    let mut cur = vec![0usize; q];
    fill_lex(&mut cur, 0, d, &mut out);
    debug_assert_eq!(out.len(), n);
    Ok(out)
}

fn fill_lex(cur: &mut Vec<usize>, pos: usize, remaining: usize, out: &mut Vec<CountVector>) {
    let q = cur.len();
    if pos == q - 1 {
        cur[pos] = remaining;
        out.push(CountVector {
            counts: cur.clone(),
        });
        return;
    }
    for v in 0..=remaining {
        cur[pos] = v;
        fill_lex(cur, pos + 1, remaining - v, out);
    }
}

/// All multi-indices l with |l| ≤ d, graded by |l| starting from the zero
/// index. This is the reverse of the lexicographic order of l⁺.
pub fn enumerate_multi_indices(d: usize, q: usize) -> Result<Vec<MultiIndex>> {
    let cvs = enumerate_count_vectors(d, q)?;
    Ok(cvs
        .into_iter()
        .rev()
        .map(|m| MultiIndex {
            l: m.counts[1..].to_vec(),
            d,
        })
        .collect())
}

pub fn factorial(n: usize) -> BigUint {
    (1..=n as u64).fold(BigUint::one(), |acc, k| acc * k)
}

pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}

/// Binomial coefficient as a float, exact up to rounding of the final value.
pub fn binomial_f64(n: usize, k: usize) -> f64 {
    use num_traits::ToPrimitive;
    binomial(n, k).to_f64().unwrap_or(f64::INFINITY)
}

/// d! / ∏ m[j]!, exactly.
pub fn multinomial_coeff(m: &CountVector) -> BigUint {
    multinomial_of(m.counts())
}

/// (Σ k_j)! / ∏ k_j! for an arbitrary list of counts.
pub fn multinomial_of(parts: &[usize]) -> BigUint {
    // Product of binomials avoids the full d! numerator.
    let mut acc = BigUint::one();
    let mut total = 0;
    for &p in parts {
        total += p;
        acc *= binomial(total, p);
    }
    acc
}

/// 𝔭(m) as an exact rational.
pub fn stationary_pmf_exact(m: &CountVector) -> BigRational {
    let q = BigUint::from(m.q());
    let denom = num_traits::pow(q, m.d());
    BigRational::new(multinomial_coeff(m).into(), denom.into())
}

/// 𝔭(m) = d!/∏m[j]! · q^{-d}, the uniform multinomial probability.
pub fn stationary_pmf<T: Real>(m: &CountVector, q: usize) -> Result<T> {
    check_modulus(q)?;
    if m.q() != q {
        return Err(Error::Shape(format!(
            "count vector has {} symbols, expected {q}",
            m.q()
        )));
    }
    Ok(T::of_rational(&stationary_pmf_exact(m)))
}

/// Count vectors of a fixed (d, q) together with a rank lookup.
#[derive(Debug, Clone)]
pub struct CountVectorSpace {
    d: usize,
    q: usize,
    states: Vec<CountVector>,
    rank: HashMap<Vec<usize>, usize>,
}

impl CountVectorSpace {
    pub fn new(d: usize, q: usize) -> Result<Self> {
        let states = enumerate_count_vectors(d, q)?;
        let rank = states
            .iter()
            .enumerate()
            .map(|(i, m)| (m.counts.clone(), i))
            .collect();
        Ok(Self { d, q, states, rank })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[CountVector] {
        &self.states
    }

    pub fn rank(&self, m: &CountVector) -> Result<usize> {
        self.rank_of(m.counts())
    }

    pub fn rank_of(&self, counts: &[usize]) -> Result<usize> {
        self.rank
            .get(counts)
            .copied()
            .ok_or_else(|| Error::Index(format!("{counts:?} is not a count vector of ({}, {})", self.d, self.q)))
    }
}

/// Multi-indices of a fixed (d, q) together with a rank lookup.
#[derive(Debug, Clone)]
pub struct MultiIndexSpace {
    d: usize,
    q: usize,
    indices: Vec<MultiIndex>,
    rank: HashMap<Vec<usize>, usize>,
}

impl MultiIndexSpace {
    pub fn new(d: usize, q: usize) -> Result<Self> {
        let indices = enumerate_multi_indices(d, q)?;
        let rank = indices
            .iter()
            .enumerate()
            .map(|(i, l)| (l.l.clone(), i))
            .collect();
        Ok(Self {
            d,
            q,
            indices,
            rank,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn rank_of(&self, l: &[usize]) -> Option<usize> {
        self.rank.get(l).copied()
    }

    pub fn rank(&self, l: &MultiIndex) -> Result<usize> {
        self.rank_of(l.entries())
            .ok_or_else(|| Error::Index(format!("{:?} is not a multi-index of ({}, {})", l.entries(), self.d, self.q)))
    }
}

/// Tolerance floor adapted to the precision of `T`.
pub(crate) fn tol<T: Real>(x: f64) -> T {
    T::of(x).max(T::epsilon() * T::of(64.0))
}

pub(crate) fn gcd(a: usize, b: usize) -> usize {
    num_integer::gcd(a, b)
}

pub(crate) fn is_prime(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    let mut k = 2;
    while k * k <= n {
        if n % k == 0 {
            return false;
        }
        k += 1;
    }
    true
}
