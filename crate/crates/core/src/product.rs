//! The product walk on V_{q,d} = Z_q^d.
//!
//! Eigenvectors are the characters x ↦ θ_1^{x·r}, with eigenvalues
//! ρ_r = E[θ_1^{V·r}]. The kernel is recovered by an inverse
//! d-dimensional DFT, P_xy = q^{-d} Σ_r ρ_r θ_1^{(x-y)·r}.

use std::collections::{BTreeMap, HashMap};

use ndarray::Array2;
use num_complex::Complex;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circulant::{eigenvalues_1d, validate_probabilities, IncrementLaw1D};
use crate::error::{Error, Result};
use crate::scalar::{cone, czero, Real};
use crate::zq_core::{
    check_modulus, enumerate_count_vectors, multinomial_coeff, tol, CountVector, RootTable,
};

/// Largest state space for which full kernels and eigenvalue tables are built.
pub const STATE_SPACE_LIMIT: u128 = 1 << 20;
/// Largest state space for which a dense q^d × q^d matrix is built.
pub const MATRIX_LIMIT: u128 = 1 << 12;

pub(crate) fn state_space_size(q: usize, d: usize) -> u128 {
    (q as u128).checked_pow(d as u32).unwrap_or(u128::MAX)
}

pub(crate) fn guard_states(q: usize, d: usize, limit: u128, what: &str) -> Result<usize> {
    let n = state_space_size(q, d);
    if n > limit {
        return Err(Error::size(
            format!("{what} on Z_{q}^{d} (use simulation or the grouped chain)"),
            n,
            limit,
        ));
    }
    Ok(n as usize)
}

/// A point of V_{q,d}.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StatePoint {
    x: Vec<usize>,
    q: usize,
}

impl StatePoint {
    pub fn new(x: Vec<usize>, q: usize) -> Result<Self> {
        check_modulus(q)?;
        if let Some(v) = x.iter().find(|&&v| v >= q) {
            return Err(Error::Index(format!("entry {v} is not in Z_{q}")));
        }
        Ok(Self { x, q })
    }

    pub fn zero(d: usize, q: usize) -> Result<Self> {
        Self::new(vec![0; d], q)
    }

    pub fn entries(&self) -> &[usize] {
        &self.x
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn d(&self) -> usize {
        self.x.len()
    }

    /// Rank in base q with the first coordinate most significant.
    pub fn index(&self) -> usize {
        point_index(&self.x, self.q)
    }

    pub fn from_index(mut idx: usize, d: usize, q: usize) -> Result<Self> {
        check_modulus(q)?;
        let mut x = vec![0; d];
        for k in (0..d).rev() {
            x[k] = idx % q;
            idx /= q;
        }
        Ok(Self { x, q })
    }

    /// (self + v) mod q componentwise.
    pub fn shifted(&self, v: &[usize]) -> Self {
        let q = self.q;
        Self {
            x: self.x.iter().zip(v).map(|(a, b)| (a + b) % q).collect(),
            q,
        }
    }
}

pub(crate) fn point_index(x: &[usize], q: usize) -> usize {
    x.iter().fold(0, |acc, &v| acc * q + v)
}

pub(crate) fn index_point(mut idx: usize, d: usize, q: usize) -> Vec<usize> {
    let mut x = vec![0; d];
    for k in (0..d).rev() {
        x[k] = idx % q;
        idx /= q;
    }
    x
}

/// Counts of (y - x) mod q: n[k] = #{j : y[j] - x[j] ≡ k}.
pub fn counts_of_difference(x: &StatePoint, y: &StatePoint) -> Result<CountVector> {
    if x.q != y.q || x.d() != y.d() {
        return Err(Error::Shape(format!(
            "points in Z_{}^{} and Z_{}^{}",
            x.q,
            x.d(),
            y.q,
            y.d()
        )));
    }
    let q = x.q;
    let mut n = vec![0; q];
    for (a, b) in x.x.iter().zip(&y.x) {
        n[(b + q - a) % q] += 1;
    }
    CountVector::new(n, x.d())
}

/// Number of coordinates where x and y differ.
pub fn hamming_distance(x: &StatePoint, y: &StatePoint) -> Result<usize> {
    let n = counts_of_difference(x, y)?;
    Ok(x.d() - n[0])
}

pub(crate) fn counts_of(v: &[usize], q: usize) -> Vec<usize> {
    let mut c = vec![0; q];
    for &j in v {
        c[j] += 1;
    }
    c
}

/// One atom of an explicit law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointMass<T> {
    pub x: Vec<usize>,
    pub p: T,
}

/// Probability of a count vector in an exchangeable law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountMass<T> {
    pub counts: Vec<usize>,
    pub p: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Component<T: Real> {
    pub weight: T,
    pub dist: IncrementDist<T>,
}

/// Law of the increment V on V_{q,d}.
///
/// `ExchangeableCounts` draws a count vector and then assigns the values to
/// coordinates by a uniformly random arrangement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "kind",
    rename_all = "snake_case",
    try_from = "RawDist<T>",
    bound = "T: Real"
)]
pub enum IncrementDist<T: Real> {
    Explicit {
        q: usize,
        d: usize,
        support: Vec<PointMass<T>>,
    },
    IidProduct {
        marginals: Vec<IncrementLaw1D<T>>,
    },
    ExchangeableCounts {
        q: usize,
        d: usize,
        law: Vec<CountMass<T>>,
    },
    Mixture {
        components: Vec<Component<T>>,
    },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "T: Real")]
enum RawDist<T: Real> {
    Explicit {
        q: usize,
        d: usize,
        support: Vec<PointMass<T>>,
    },
    IidProduct {
        marginals: Vec<IncrementLaw1D<T>>,
    },
    ExchangeableCounts {
        q: usize,
        d: usize,
        law: Vec<CountMass<T>>,
    },
    Mixture {
        components: Vec<Component<T>>,
    },
}

impl<T: Real> TryFrom<RawDist<T>> for IncrementDist<T> {
    type Error = Error;
    fn try_from(raw: RawDist<T>) -> Result<Self> {
        let dist = match raw {
            RawDist::Explicit { q, d, support } => IncrementDist::Explicit { q, d, support },
            RawDist::IidProduct { marginals } => IncrementDist::IidProduct { marginals },
            RawDist::ExchangeableCounts { q, d, law } => IncrementDist::ExchangeableCounts { q, d, law },
            RawDist::Mixture { components } => IncrementDist::Mixture { components },
        };
        dist.validate()?;
        Ok(dist)
    }
}

impl<T: Real> IncrementDist<T> {
    pub fn explicit(q: usize, d: usize, support: Vec<(Vec<usize>, T)>) -> Result<Self> {
        let dist = IncrementDist::Explicit {
            q,
            d,
            support: support.into_iter().map(|(x, p)| PointMass { x, p }).collect(),
        };
        dist.validate()?;
        Ok(dist)
    }

    pub fn point_mass(q: usize, v: Vec<usize>) -> Result<Self> {
        let d = v.len();
        Self::explicit(q, d, vec![(v, T::one())])
    }

    pub fn iid(marginal: IncrementLaw1D<T>, d: usize) -> Result<Self> {
        Self::iid_product(vec![marginal; d])
    }

    pub fn iid_product(marginals: Vec<IncrementLaw1D<T>>) -> Result<Self> {
        let dist = IncrementDist::IidProduct { marginals };
        dist.validate()?;
        Ok(dist)
    }

    pub fn exchangeable(q: usize, d: usize, law: Vec<(Vec<usize>, T)>) -> Result<Self> {
        let dist = IncrementDist::ExchangeableCounts {
            q,
            d,
            law: law.into_iter().map(|(counts, p)| CountMass { counts, p }).collect(),
        };
        dist.validate()?;
        Ok(dist)
    }

    pub fn mixture(components: Vec<(T, IncrementDist<T>)>) -> Result<Self> {
        let dist = IncrementDist::Mixture {
            components: components
                .into_iter()
                .map(|(weight, dist)| Component { weight, dist })
                .collect(),
        };
        dist.validate()?;
        Ok(dist)
    }

    pub fn q(&self) -> usize {
        match self {
            IncrementDist::Explicit { q, .. } | IncrementDist::ExchangeableCounts { q, .. } => *q,
            IncrementDist::IidProduct { marginals } => marginals.first().map_or(0, |m| m.q()),
            IncrementDist::Mixture { components } => components.first().map_or(0, |c| c.dist.q()),
        }
    }

    pub fn d(&self) -> usize {
        match self {
            IncrementDist::Explicit { d, .. } | IncrementDist::ExchangeableCounts { d, .. } => *d,
            IncrementDist::IidProduct { marginals } => marginals.len(),
            IncrementDist::Mixture { components } => components.first().map_or(0, |c| c.dist.d()),
        }
    }

    /// Checks probabilities, shapes and distinctness of atoms.
    pub fn validate(&self) -> Result<()> {
        match self {
            IncrementDist::Explicit { q, d, support } => {
                check_modulus(*q)?;
                if support.is_empty() {
                    return Err(Error::Validation("explicit law has empty support".into()));
                }
                let mut seen = std::collections::HashSet::new();
                for a in support {
                    if a.x.len() != *d {
                        return Err(Error::Shape(format!("support point {:?} has length != {d}", a.x)));
                    }
                    if a.x.iter().any(|&v| v >= *q) {
                        return Err(Error::Validation(format!("support point {:?} is not in Z_{q}^{d}", a.x)));
                    }
                    if !seen.insert(a.x.clone()) {
                        return Err(Error::Validation(format!("support point {:?} repeated", a.x)));
                    }
                }
                let ps: Vec<T> = support.iter().map(|a| a.p).collect();
                validate_probabilities(&ps, "explicit law")
            }
            IncrementDist::IidProduct { marginals } => {
                let Some(first) = marginals.first() else {
                    return Err(Error::Validation("product law needs at least one coordinate".into()));
                };
                for m in marginals {
                    if m.q() != first.q() {
                        return Err(Error::Shape("marginals have different moduli".into()));
                    }
                    validate_probabilities(m.probs(), "marginal law")?;
                }
                Ok(())
            }
            IncrementDist::ExchangeableCounts { q, d, law } => {
                check_modulus(*q)?;
                if law.is_empty() {
                    return Err(Error::Validation("exchangeable law is empty".into()));
                }
                let mut seen = std::collections::HashSet::new();
                for a in law {
                    if a.counts.len() != *q || a.counts.iter().sum::<usize>() != *d {
                        return Err(Error::Validation(format!(
                            "{:?} is not a count vector with q = {q}, d = {d}",
                            a.counts
                        )));
                    }
                    if !seen.insert(a.counts.clone()) {
                        return Err(Error::Validation(format!("count vector {:?} repeated", a.counts)));
                    }
                }
                let ps: Vec<T> = law.iter().map(|a| a.p).collect();
                validate_probabilities(&ps, "count law")
            }
            IncrementDist::Mixture { components } => {
                let Some(first) = components.first() else {
                    return Err(Error::Validation("mixture has no components".into()));
                };
                for c in components {
                    c.dist.validate()?;
                    if c.dist.q() != first.dist.q() || c.dist.d() != first.dist.d() {
                        return Err(Error::Shape("mixture components live on different spaces".into()));
                    }
                }
                let ws: Vec<T> = components.iter().map(|c| c.weight).collect();
                validate_probabilities(&ws, "mixture weights")
            }
        }
    }

    /// ρ_r = E[θ_1^{V·r}], computed separately for each variant.
    pub fn rho(&self, r: &[usize]) -> Result<Complex<T>> {
        if r.len() != self.d() {
            return Err(Error::Shape(format!("index of length {} for d = {}", r.len(), self.d())));
        }
        let roots = RootTable::<T>::new(self.q())?;
        Ok(self.rho_with(&roots, r))
    }

    fn rho_with(&self, roots: &RootTable<T>, r: &[usize]) -> Complex<T> {
        let q = roots.q();
        match self {
            IncrementDist::Explicit { support, .. } => support.iter().fold(czero(), |acc, a| {
                let dot = a.x.iter().zip(r).map(|(v, rk)| v * rk % q).sum::<usize>();
                acc + roots.theta(dot) * a.p
            }),
            IncrementDist::IidProduct { marginals } => {
                marginals.iter().zip(r).fold(cone(), |acc, (m, &rk)| {
                    let eta = m
                        .probs()
                        .iter()
                        .enumerate()
                        .fold(czero::<T>(), |s, (j, &p)| s + roots.pow(rk, j) * p);
                    acc * eta
                })
            }
            IncrementDist::ExchangeableCounts { law, .. } => law.iter().fold(czero(), |acc, a| {
                acc + arrangement_character(&a.counts, r, roots) * a.p
            }),
            IncrementDist::Mixture { components } => components
                .iter()
                .fold(czero(), |acc, c| acc + c.dist.rho_with(roots, r) * c.weight),
        }
    }

    /// P(V = v).
    pub fn point_probability(&self, v: &[usize]) -> T {
        match self {
            IncrementDist::Explicit { support, .. } => support
                .iter()
                .find(|a| a.x == v)
                .map_or(T::zero(), |a| a.p),
            IncrementDist::IidProduct { marginals } => marginals
                .iter()
                .zip(v)
                .fold(T::one(), |acc, (m, &j)| acc * m.prob(j)),
            IncrementDist::ExchangeableCounts { q, law, .. } => {
                let c = counts_of(v, *q);
                law.iter().find(|a| a.counts == c).map_or(T::zero(), |a| {
                    a.p / T::of_big_uint(&multinomial_coeff(&CountVector::from_counts(c.clone()).unwrap()))
                })
            }
            IncrementDist::Mixture { components } => components
                .iter()
                .fold(T::zero(), |acc, c| acc + c.weight * c.dist.point_probability(v)),
        }
    }

    /// Dense table of P(V = v) indexed by [`StatePoint::index`].
    pub fn pmf_array(&self) -> Result<Vec<T>> {
        let (q, d) = (self.q(), self.d());
        let n = guard_states(q, d, STATE_SPACE_LIMIT, "increment table")?;
        let mut out = vec![T::zero(); n];
        self.accumulate_pmf(&mut out, T::one());
        Ok(out)
    }

    fn accumulate_pmf(&self, out: &mut [T], weight: T) {
        let (q, d) = (self.q(), self.d());
        match self {
            IncrementDist::Explicit { support, .. } => {
                for a in support {
                    out[point_index(&a.x, q)] += weight * a.p;
                }
            }
            IncrementDist::Mixture { components } => {
                for c in components {
                    c.dist.accumulate_pmf(out, weight * c.weight);
                }
            }
            _ => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o += weight * self.point_probability(&index_point(i, d, q));
                }
            }
        }
    }

    /// Whether the law of V is invariant under coordinate permutations.
    pub fn is_exchangeable(&self) -> bool {
        self.count_law().is_ok()
    }

    /// Law of the count vector of V. Fails with a precondition error when V
    /// is not exchangeable, since the grouped chain is then not Markov.
    pub fn count_law(&self) -> Result<Vec<(CountVector, T)>> {
        let mut acc: BTreeMap<Vec<usize>, T> = BTreeMap::new();
        self.accumulate_count_law(&mut acc, T::one())?;
        acc.into_iter()
            .map(|(c, p)| Ok((CountVector::from_counts(c)?, p)))
            .collect()
    }

    fn accumulate_count_law(&self, acc: &mut BTreeMap<Vec<usize>, T>, weight: T) -> Result<()> {
        let (q, d) = (self.q(), self.d());
        match self {
            IncrementDist::ExchangeableCounts { law, .. } => {
                for a in law {
                    *acc.entry(a.counts.clone()).or_insert(T::zero()) += weight * a.p;
                }
            }
            IncrementDist::IidProduct { marginals } => {
                if marginals.iter().any(|m| m != &marginals[0]) {
                    return Err(Error::Precondition(
                        "product law with different marginals is not exchangeable".into(),
                    ));
                }
                let p = marginals[0].probs();
                for c in enumerate_count_vectors(d, q)? {
                    let mut prob = T::of_big_uint(&multinomial_coeff(&c));
                    for (j, &k) in c.counts().iter().enumerate() {
                        prob *= p[j].powi(k as i32);
                    }
                    if prob > T::zero() {
                        *acc.entry(c.counts().to_vec()).or_insert(T::zero()) += weight * prob;
                    }
                }
            }
            IncrementDist::Explicit { support, .. } => {
                let mut by_counts: HashMap<Vec<usize>, (T, usize)> = HashMap::new();
                for a in support {
                    let e = by_counts.entry(counts_of(&a.x, q)).or_insert((T::zero(), 0));
                    e.0 += a.p;
                    e.1 += 1;
                }
                for a in support {
                    let c = counts_of(&a.x, q);
                    let (total, _) = by_counts[&c];
                    let arrangements = T::of_big_uint(&multinomial_coeff(&CountVector::from_counts(c.clone())?));
                    if (a.p * arrangements - total).abs() > tol::<T>(1e-10) {
                        return Err(Error::Precondition(format!(
                            "explicit law is not exchangeable at {:?}",
                            a.x
                        )));
                    }
                }
                // A class must also be fully present when its mass is positive.
                for (c, (total, n)) in by_counts {
                    let arrangements = multinomial_coeff(&CountVector::from_counts(c.clone())?);
                    if total > T::zero() && num_bigint::BigUint::from(n) != arrangements {
                        return Err(Error::Precondition(format!(
                            "explicit law misses arrangements of {c:?}"
                        )));
                    }
                    *acc.entry(c).or_insert(T::zero()) += weight * total;
                }
            }
            IncrementDist::Mixture { components } => {
                for c in components {
                    c.dist.accumulate_count_law(acc, weight * c.weight)?;
                }
            }
        }
        Ok(())
    }

    /// Lists the support of V with probabilities, at most `limit` atoms.
    pub fn to_explicit(&self, limit: usize) -> Result<Vec<(Vec<usize>, T)>> {
        let (q, d) = (self.q(), self.d());
        match self {
            IncrementDist::Explicit { support, .. } => {
                Ok(support.iter().map(|a| (a.x.clone(), a.p)).collect())
            }
            IncrementDist::Mixture { components } => {
                let mut acc: BTreeMap<Vec<usize>, T> = BTreeMap::new();
                for c in components {
                    for (x, p) in c.dist.to_explicit(limit)? {
                        *acc.entry(x).or_insert(T::zero()) += c.weight * p;
                    }
                    if acc.len() > limit {
                        return Err(Error::size("explicit support", acc.len() as u128, limit as u128));
                    }
                }
                Ok(acc.into_iter().collect())
            }
            IncrementDist::IidProduct { marginals } => {
                let size = marginals
                    .iter()
                    .map(|m| m.support().len() as u128)
                    .try_fold(1u128, |a, b| a.checked_mul(b))
                    .unwrap_or(u128::MAX);
                if size > limit as u128 {
                    return Err(Error::size("explicit support", size, limit as u128));
                }
                let mut out: Vec<(Vec<usize>, T)> = vec![(Vec::new(), T::one())];
                for m in marginals {
                    let mut next = Vec::new();
                    for (x, p) in &out {
                        for j in m.support() {
                            let mut y = x.clone();
                            y.push(j);
                            next.push((y, *p * m.prob(j)));
                        }
                    }
                    out = next;
                }
                Ok(out)
            }
            IncrementDist::ExchangeableCounts { law, .. } => {
                let mut total: u128 = 0;
                for a in law.iter().filter(|a| a.p > T::zero()) {
                    let n = multinomial_coeff(&CountVector::from_counts(a.counts.clone())?);
                    total = total.saturating_add(num_traits::ToPrimitive::to_u128(&n).unwrap_or(u128::MAX));
                }
                if total > limit as u128 {
                    return Err(Error::size("explicit support", total, limit as u128));
                }
                let mut out = Vec::new();
                for a in law.iter().filter(|a| a.p > T::zero()) {
                    let c = CountVector::from_counts(a.counts.clone())?;
                    let each = a.p / T::of_big_uint(&multinomial_coeff(&c));
                    let mut cur = Vec::with_capacity(d);
                    let mut rem = a.counts.clone();
                    arrangements(&mut rem, &mut cur, q, &mut |x| out.push((x.to_vec(), each)));
                }
                Ok(out)
            }
        }
    }

    /// Prepared sampler for repeated draws.
    pub fn sampler(&self) -> Result<IncrementSampler> {
        IncrementSampler::new(self)
    }
}

fn arrangements(rem: &mut [usize], cur: &mut Vec<usize>, q: usize, f: &mut impl FnMut(&[usize])) {
    if rem.iter().all(|&c| c == 0) {
        f(cur);
        return;
    }
    for j in 0..q {
        if rem[j] > 0 {
            rem[j] -= 1;
            cur.push(j);
            arrangements(rem, cur, q, f);
            cur.pop();
            rem[j] += 1;
        }
    }
}

/// E[θ_1^{V·r}] when the multiset of values of V is fixed by `counts` and
/// the arrangement over coordinates is uniform.
///
/// Dynamic programming over the counts still unassigned: the next coordinate
/// receives value j with probability rem[j]/Σrem.
fn arrangement_character<T: Real>(counts: &[usize], r: &[usize], roots: &RootTable<T>) -> Complex<T> {
    fn go<T: Real>(
        rem: &mut Vec<usize>,
        r: &[usize],
        roots: &RootTable<T>,
        memo: &mut HashMap<Vec<usize>, Complex<T>>,
    ) -> Complex<T> {
        let left: usize = rem.iter().sum();
        if left == 0 {
            return cone();
        }
        if let Some(v) = memo.get(rem.as_slice()) {
            return *v;
        }
        let k = r.len() - left;
        let mut acc = czero::<T>();
        for j in 0..rem.len() {
            if rem[j] == 0 {
                continue;
            }
            let w = T::of_usize(rem[j]) / T::of_usize(left);
            rem[j] -= 1;
            let sub = go(rem, r, roots, memo);
            rem[j] += 1;
            acc += roots.pow(r[k], j) * sub * w;
        }
        memo.insert(rem.clone(), acc);
        acc
    }
    let mut memo = HashMap::new();
    go(&mut counts.to_vec(), r, roots, &mut memo)
}

/// Draws increments without re-validating the law.
#[derive(Debug, Clone)]
pub enum IncrementSampler {
    Atoms {
        atoms: Vec<Vec<usize>>,
        index: WeightedIndex<f64>,
    },
    Product {
        coords: Vec<WeightedIndex<f64>>,
    },
    Counts {
        counts: Vec<Vec<usize>>,
        index: WeightedIndex<f64>,
    },
    Mixture {
        parts: Vec<IncrementSampler>,
        index: WeightedIndex<f64>,
    },
}

fn weighted(w: impl Iterator<Item = f64>) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(w).map_err(|e| Error::Validation(format!("cannot sample law: {e}")))
}

impl IncrementSampler {
    pub fn new<T: Real>(dist: &IncrementDist<T>) -> Result<Self> {
        Ok(match dist {
            IncrementDist::Explicit { support, .. } => IncrementSampler::Atoms {
                atoms: support.iter().map(|a| a.x.clone()).collect(),
                index: weighted(support.iter().map(|a| a.p.to_f64_lossy()))?,
            },
            IncrementDist::IidProduct { marginals } => IncrementSampler::Product {
                coords: marginals
                    .iter()
                    .map(|m| weighted(m.probs().iter().map(|p| p.to_f64_lossy())))
                    .collect::<Result<_>>()?,
            },
            IncrementDist::ExchangeableCounts { law, .. } => IncrementSampler::Counts {
                counts: law.iter().map(|a| a.counts.clone()).collect(),
                index: weighted(law.iter().map(|a| a.p.to_f64_lossy()))?,
            },
            IncrementDist::Mixture { components } => IncrementSampler::Mixture {
                parts: components
                    .iter()
                    .map(|c| IncrementSampler::new(&c.dist))
                    .collect::<Result<_>>()?,
                index: weighted(components.iter().map(|c| c.weight.to_f64_lossy()))?,
            },
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        match self {
            IncrementSampler::Atoms { atoms, index } => atoms[index.sample(rng)].clone(),
            IncrementSampler::Product { coords } => coords.iter().map(|w| w.sample(rng)).collect(),
            IncrementSampler::Counts { counts, index } => {
                let c = &counts[index.sample(rng)];
                let mut v: Vec<usize> = c
                    .iter()
                    .enumerate()
                    .flat_map(|(j, &n)| std::iter::repeat_n(j, n))
                    .collect();
                v.shuffle(rng);
                v
            }
            IncrementSampler::Mixture { parts, index } => parts[index.sample(rng)].sample(rng),
        }
    }
}

/// One step x ↦ (x + Z) mod q with Z drawn from `incr` using a fresh
/// generator seeded by `seed`.
pub fn step_sample<T: Real>(x: &StatePoint, incr: &IncrementDist<T>, seed: u64) -> Result<StatePoint> {
    if x.q() != incr.q() || x.d() != incr.d() {
        return Err(Error::Shape("state and increment live on different spaces".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = incr.sampler()?.sample(&mut rng);
    Ok(x.shifted(&z))
}

/// In-place DFT along every axis of a q^d array stored with the first
/// coordinate most significant. `sign = 1` computes Σ_v a[v] θ_1^{v·r},
/// `sign = -1` the conjugate-kernel sum.
pub(crate) fn dft_all_axes<T: Real>(data: &mut [Complex<T>], q: usize, d: usize, sign: i64) {
    let roots = RootTable::<T>::new(q).expect("q >= 2");
    let mut line = vec![czero::<T>(); q];
    let mut stride = 1;
    for _ in 0..d {
        let block = stride * q;
        for base in (0..data.len()).step_by(block) {
            for off in 0..stride {
                for (j, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + off + j * stride];
                }
                for r in 0..q {
                    let mut acc = czero::<T>();
                    for (j, &a) in line.iter().enumerate() {
                        acc += a * roots.theta_signed(sign * (r * j) as i64);
                    }
                    data[base + off + r * stride] = acc;
                }
            }
        }
        stride = block;
    }
}

/// Full table of ρ_r for a walk on V_{q,d}.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductSpectrum<T: Real> {
    q: usize,
    d: usize,
    rho: Vec<Complex<T>>,
}

impl<T: Real> ProductSpectrum<T> {
    /// ρ_r for every r, by a d-dimensional DFT of the increment table.
    pub fn from_increment(incr: &IncrementDist<T>) -> Result<Self> {
        let (q, d) = (incr.q(), incr.d());
        let mut data: Vec<Complex<T>> = incr
            .pmf_array()?
            .into_iter()
            .map(|p| Complex::new(p, T::zero()))
            .collect();
        dft_all_axes(&mut data, q, d, 1);
        Ok(Self { q, d, rho: data })
    }

    /// Wraps an arbitrary table indexed like [`StatePoint::index`].
    pub fn from_values(q: usize, d: usize, rho: Vec<Complex<T>>) -> Result<Self> {
        check_modulus(q)?;
        let n = guard_states(q, d, STATE_SPACE_LIMIT, "eigenvalue table")?;
        if rho.len() != n {
            return Err(Error::Shape(format!("expected {n} eigenvalues, got {}", rho.len())));
        }
        Ok(Self { q, d, rho })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.rho
    }

    pub fn values_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.rho
    }

    pub fn get(&self, r: &[usize]) -> Complex<T> {
        self.rho[point_index(r, self.q)]
    }

    /// Eigenvalues of the t-step walk.
    pub fn powi(&self, t: u32) -> Self {
        Self {
            q: self.q,
            d: self.d,
            rho: self.rho.iter().map(|r| r.powu(t)).collect(),
        }
    }

    /// P_xy = q^{-d} Σ_r ρ_r θ_1^{(x-y)·r}, summed directly.
    pub fn transition_prob(&self, x: &StatePoint, y: &StatePoint) -> Result<T> {
        if x.q() != self.q || y.q() != self.q || x.d() != self.d || y.d() != self.d {
            return Err(Error::Shape("states do not match the spectrum".into()));
        }
        let q = self.q;
        let roots = RootTable::<T>::new(q)?;
        let diff: Vec<usize> = x.x.iter().zip(&y.x).map(|(a, b)| (a + q - b) % q).collect();
        let mut acc = czero::<T>();
        for (i, &rho) in self.rho.iter().enumerate() {
            let r = index_point(i, self.d, q);
            let dot: usize = diff.iter().zip(&r).map(|(a, b)| a * b % q).sum();
            acc += rho * roots.theta(dot);
        }
        let p = acc / T::of(state_space_size(q, self.d) as f64);
        if p.im.abs() > tol::<T>(1e-8) {
            return Err(Error::InconsistentEigenvalues(p.im.to_f64_lossy()));
        }
        Ok(p.re.max(T::zero()))
    }

    /// k(z) = P(x → x + z) for every z, unclamped, by an inverse DFT.
    pub fn kernel(&self) -> Result<Vec<T>> {
        let mut data = self.rho.clone();
        dft_all_axes(&mut data, self.q, self.d, -1);
        let n = T::of(data.len() as f64);
        let mut max_im = T::zero();
        let out = data
            .into_iter()
            .map(|z| {
                max_im = max_im.max(z.im.abs());
                z.re / n
            })
            .collect();
        if max_im / n > tol::<T>(1e-8) {
            return Err(Error::InconsistentEigenvalues((max_im / n).to_f64_lossy()));
        }
        Ok(out)
    }

    /// Dense transition matrix from the spectral kernel, unclamped.
    pub fn transition_matrix(&self) -> Result<Array2<T>> {
        let n = guard_states(self.q, self.d, MATRIX_LIMIT, "dense transition matrix")?;
        let k = self.kernel()?;
        Ok(kernel_matrix(&k, n, self.d, self.q))
    }
}

pub(crate) fn kernel_matrix<T: Real>(k: &[T], n: usize, d: usize, q: usize) -> Array2<T> {
    let points: Vec<Vec<usize>> = (0..n).map(|i| index_point(i, d, q)).collect();
    Array2::from_shape_fn((n, n), |(i, j)| {
        let z: Vec<usize> = points[i].iter().zip(&points[j]).map(|(a, b)| (b + q - a) % q).collect();
        k[point_index(&z, q)]
    })
}

/// Single spectral transition probability, building ρ from the law.
pub fn transition_prob<T: Real>(incr: &IncrementDist<T>, x: &StatePoint, y: &StatePoint) -> Result<T> {
    ProductSpectrum::from_increment(incr)?.transition_prob(x, y)
}

/// 1-D eigenvalue tables of the marginals of a product law.
pub fn marginal_eigenvalues<T: Real>(incr: &IncrementDist<T>) -> Option<Vec<Vec<Complex<T>>>> {
    match incr {
        IncrementDist::IidProduct { marginals } => Some(
            marginals
                .iter()
                .map(|m| eigenvalues_1d(m).values().to_vec())
                .collect(),
        ),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp(x: &[usize], q: usize) -> StatePoint {
        StatePoint::new(x.to_vec(), q).unwrap()
    }

    #[test]
    fn rho_examples() {
        let incr = IncrementDist::<f64>::point_mass(2, vec![1, 1]).unwrap();
        assert!((incr.rho(&[1, 1]).unwrap() - 1.0).norm() < 1e-15);
        assert!((incr.rho(&[0, 0]).unwrap() - 1.0).norm() < 1e-15);
        let m = crate::circulant::lazy_law(5, 0.4).unwrap();
        let eta = eigenvalues_1d(&m);
        let incr = IncrementDist::iid(m, 3).unwrap();
        let r = [1, 4, 2];
        let want = eta.get(1) * eta.get(4) * eta.get(2);
        assert!((incr.rho(&r).unwrap() - want).norm() < 1e-14);
    }

    #[test]
    fn dft_table_matches_direct_rho() {
        let incr = IncrementDist::<f64>::exchangeable(
            3,
            3,
            vec![(vec![1, 1, 1], 0.5), (vec![2, 0, 1], 0.3), (vec![3, 0, 0], 0.2)],
        )
        .unwrap();
        let spec = ProductSpectrum::from_increment(&incr).unwrap();
        for i in 0..27 {
            let r = index_point(i, 3, 3);
            assert!((spec.values()[i] - incr.rho(&r).unwrap()).norm() < 1e-12);
        }
    }

    #[test]
    fn transition_examples() {
        let zero = IncrementDist::<f64>::point_mass(3, vec![0, 0]).unwrap();
        let spec = ProductSpectrum::from_increment(&zero).unwrap();
        let m = spec.transition_matrix().unwrap();
        assert!((m - Array2::<f64>::eye(9)).iter().all(|x| x.abs() < 1e-12));
        let v = IncrementDist::<f64>::point_mass(3, vec![2, 1]).unwrap();
        let y = sp(&[1, 1], 3);
        let x = sp(&[2, 0], 3);
        assert!((transition_prob(&v, &x, &y).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn size_guard() {
        let v = IncrementDist::<f64>::iid(IncrementLaw1D::uniform(4).unwrap(), 11).unwrap();
        assert!(matches!(ProductSpectrum::from_increment(&v), Err(Error::Size { .. })));
    }

    #[test]
    fn difference_counts() {
        let x = sp(&[0, 0, 0], 3);
        let y = sp(&[1, 2, 1], 3);
        assert_eq!(counts_of_difference(&x, &y).unwrap().counts(), &[0, 2, 1]);
        assert_eq!(counts_of_difference(&x, &x).unwrap().counts(), &[3, 0, 0]);
        assert_eq!(hamming_distance(&x, &y).unwrap(), 3);
        assert!(counts_of_difference(&x, &sp(&[0, 0], 3)).is_err());
    }

    #[test]
    fn step_examples() {
        let v = IncrementDist::<f64>::point_mass(2, vec![1, 1, 1]).unwrap();
        let x = sp(&[0, 1, 0], 2);
        assert_eq!(step_sample(&x, &v, 7).unwrap().entries(), &[1, 0, 1]);
        let z = IncrementDist::<f64>::point_mass(2, vec![0, 0, 0]).unwrap();
        assert_eq!(step_sample(&x, &z, 7).unwrap(), x);
    }

    #[test]
    fn exchangeability_detection() {
        let e = IncrementDist::<f64>::explicit(2, 2, vec![(vec![1, 0], 0.5), (vec![0, 1], 0.5)]).unwrap();
        assert!(e.is_exchangeable());
        let ne = IncrementDist::<f64>::explicit(2, 2, vec![(vec![1, 0], 1.0)]).unwrap();
        assert!(matches!(ne.count_law(), Err(Error::Precondition(_))));
        let iid = IncrementDist::<f64>::iid(IncrementLaw1D::new(vec![0.2, 0.8]).unwrap(), 2).unwrap();
        let law = iid.count_law().unwrap();
        let p: Vec<f64> = law.iter().map(|(_, p)| *p).collect();
        assert!((p[0] - 0.64).abs() < 1e-12 && (p[1] - 0.32).abs() < 1e-12 && (p[2] - 0.04).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let incr = IncrementDist::<f64>::mixture(vec![
            (0.5, IncrementDist::exchangeable(3, 2, vec![(vec![1, 1, 0], 1.0)]).unwrap()),
            (0.5, IncrementDist::iid(IncrementLaw1D::uniform(3).unwrap(), 2).unwrap()),
        ])
        .unwrap();
        let s = serde_json::to_string(&incr).unwrap();
        let back: IncrementDist<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, incr);
        let bad = r#"{"kind":"explicit","q":2,"d":1,"support":[{"x":[1],"p":0.7}]}"#;
        assert!(serde_json::from_str::<IncrementDist<f64>>(bad).is_err());
    }

    #[test]
    fn explicit_enumeration_of_exchangeable_law() {
        let incr = IncrementDist::<f64>::exchangeable(3, 3, vec![(vec![1, 1, 1], 1.0)]).unwrap();
        let atoms = incr.to_explicit(100).unwrap();
        assert_eq!(atoms.len(), 6);
        for (x, p) in &atoms {
            assert!((p - 1.0 / 6.0).abs() < 1e-15);
            assert!((incr.point_probability(x) - p).abs() < 1e-15);
        }
    }
}
