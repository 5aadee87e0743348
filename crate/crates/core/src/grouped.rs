//! The grouped chain M_t of counts of each symbol in X_t.
//!
//! When the entries of the increment are exchangeable, M_t is Markov with
//! eigenvectors Q_l and eigenvalues κ_l = h_l E[Q_l(V)], and
//!
//! ```text
//! P(n | m) = 𝔭(n) {1 + Σ_{l≠0} κ_l h_l Q_l(m) conj(Q_l(n))}.
//! ```

use std::collections::HashMap;

use ndarray::Array2;
use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rayon::prelude::*;

use crate::circulant::{validate_probabilities, IncrementLaw1D};
use crate::error::{Error, Result};
use crate::krawtchouk::{mvk_build, mvk_column, norm_h_inv, scaled_krawtchouk, standard_basis};
use crate::product::IncrementDist;
use crate::scalar::{cone, czero, Real};
use crate::zq_core::{
    binomial, binomial_f64, check_modulus, enumerate_count_vectors, multinomial_coeff,
    multinomial_of, stationary_pmf, tol, CountVector, MultiIndex, MultiIndexSpace, RootTable,
};

/// Negative reconstructed probabilities beyond this are reported as errors.
pub const NEGATIVE_TOLERANCE: f64 = 1e-6;

fn h_of<T: Real>(l: &MultiIndex) -> T {
    T::of_rational(&BigRational::new(1.into(), norm_h_inv(l).into()))
}

/// Grouped chain described by its eigenvalues κ_l.
#[derive(Debug, Clone)]
pub struct GroupedChain<T: Real> {
    q: usize,
    d: usize,
    indices: MultiIndexSpace,
    kappa: Vec<Complex<T>>,
    h: Vec<T>,
    source: Option<IncrementDist<T>>,
}

impl<T: Real> GroupedChain<T> {
    /// κ_l = h_l E[Q_l(V)] for an exchangeable increment.
    pub fn from_increment(incr: &IncrementDist<T>) -> Result<Self> {
        let (q, d) = (incr.q(), incr.d());
        let law = incr.count_law()?;
        let indices = MultiIndexSpace::new(d, q)?;
        let basis = standard_basis(q);
        let columns: Vec<(T, Vec<Complex<T>>)> = law
            .par_iter()
            .map(|(c, p)| Ok((*p, mvk_column(c, &basis)?)))
            .collect::<Result<_>>()?;
        let h: Vec<T> = indices.indices().iter().map(h_of).collect();
        let kappa = (0..indices.len())
            .map(|li| {
                let e = columns.iter().fold(czero::<T>(), |acc, (p, col)| acc + col[li] * *p);
                e * h[li]
            })
            .collect();
        Ok(Self {
            q,
            d,
            indices,
            kappa,
            h,
            source: Some(incr.clone()),
        })
    }

    /// Wraps eigenvalues listed in multi-index order.
    pub fn from_kappa(q: usize, d: usize, kappa: Vec<Complex<T>>) -> Result<Self> {
        check_modulus(q)?;
        let indices = MultiIndexSpace::new(d, q)?;
        if kappa.len() != indices.len() {
            return Err(Error::Shape(format!(
                "expected {} eigenvalues, got {}",
                indices.len(),
                kappa.len()
            )));
        }
        let eps = tol::<T>(1e-10);
        if (kappa[0] - cone::<T>()).norm() > eps {
            return Err(Error::NotEigenvalueSequence(format!("kappa_0 = {}", kappa[0])));
        }
        if let Some((i, k)) = kappa.iter().enumerate().find(|(_, k)| k.norm() > T::one() + eps) {
            return Err(Error::NotEigenvalueSequence(format!(
                "|kappa| = {} > 1 at {:?}",
                k.norm(),
                indices.indices()[i].entries()
            )));
        }
        let h = indices.indices().iter().map(h_of).collect();
        Ok(Self {
            q,
            d,
            indices,
            kappa,
            h,
            source: None,
        })
    }

    /// Eigenvalues depending on |l| only, κ_l = f(|l|).
    pub fn from_degree_fn(q: usize, d: usize, f: impl Fn(usize) -> T) -> Result<Self> {
        let idx = MultiIndexSpace::new(d, q)?;
        let kappa = idx
            .indices()
            .iter()
            .map(|l| Complex::new(f(l.degree()), T::zero()))
            .collect();
        Self::from_kappa(q, d, kappa)
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn indices(&self) -> &MultiIndexSpace {
        &self.indices
    }

    pub fn kappa_values(&self) -> &[Complex<T>] {
        &self.kappa
    }

    pub fn kappa(&self, l: &MultiIndex) -> Result<Complex<T>> {
        Ok(self.kappa[self.indices.rank(l)?])
    }

    pub fn source(&self) -> Option<&IncrementDist<T>> {
        self.source.as_ref()
    }

    /// Chain of t steps, κ ↦ κ^t.
    pub fn powi(&self, t: u32) -> Self {
        Self {
            kappa: self.kappa.iter().map(|k| k.powu(t)).collect(),
            source: None,
            ..self.clone()
        }
    }

    fn column(&self, m: &CountVector) -> Result<Vec<Complex<T>>> {
        if m.q() != self.q || m.d() != self.d {
            return Err(Error::Shape(format!(
                "count vector {:?} does not belong to (q, d) = ({}, {})",
                m.counts(),
                self.q,
                self.d
            )));
        }
        mvk_column(m, &standard_basis(self.q))
    }

    fn combine(&self, qm: &[Complex<T>], qn: &[Complex<T>], pn: T) -> Result<T> {
        let mut acc = cone::<T>();
        for li in 1..self.kappa.len() {
            acc += self.kappa[li] * qm[li] * qn[li].conj() * self.h[li];
        }
        let p = acc * pn;
        if p.im.abs() > tol::<T>(1e-8) {
            return Err(Error::InconsistentEigenvalues(p.im.to_f64_lossy()));
        }
        if p.re < -tol::<T>(NEGATIVE_TOLERANCE) {
            return Err(Error::InvalidEigenvalue(p.re.to_f64_lossy()));
        }
        Ok(p.re.max(T::zero()))
    }

    /// P(n | m) from the spectral expansion, clamped at zero.
    pub fn transition(&self, m: &CountVector, n: &CountVector) -> Result<T> {
        let qm = self.column(m)?;
        let qn = self.column(n)?;
        self.combine(&qm, &qn, stationary_pmf(n, self.q)?)
    }

    /// Dense matrix over count vectors in lexicographic order.
    pub fn transition_matrix(&self) -> Result<Array2<T>> {
        let table = mvk_build::<T>(self.q, self.d)?;
        let states = table.states().states().to_vec();
        let n = states.len();
        let cols: Vec<Vec<Complex<T>>> = (0..n)
            .map(|mi| (0..self.kappa.len()).map(|li| table.at(li, mi)).collect())
            .collect();
        let pmf: Vec<T> = states
            .iter()
            .map(|s| stationary_pmf(s, self.q))
            .collect::<Result<_>>()?;
        let rows: Vec<Vec<T>> = (0..n)
            .into_par_iter()
            .map(|i| (0..n).map(|j| self.combine(&cols[i], &cols[j], pmf[j])).collect())
            .collect::<Result<_>>()?;
        Ok(Array2::from_shape_fn((n, n), |(i, j)| rows[i][j]))
    }

    /// χ²_t(m) = Σ_{l≠0} |κ_l|^{2t} h_l |Q_l(m)|².
    pub fn chi_squared(&self, m: &CountVector, t: u32) -> Result<T> {
        let qm = self.column(m)?;
        Ok(self.chi_from_column(&qm, t))
    }

    fn chi_from_column(&self, qm: &[Complex<T>], t: u32) -> T {
        (1..self.kappa.len())
            .map(|li| self.kappa[li].norm_sqr().powi(t as i32) * self.h[li] * qm[li].norm_sqr())
            .sum()
    }

    /// χ²_t(m) for several t, evaluated in parallel.
    pub fn chi_squared_series(&self, m: &CountVector, ts: &[u32]) -> Result<Vec<T>> {
        let qm = self.column(m)?;
        Ok(ts.par_iter().map(|&t| self.chi_from_column(&qm, t)).collect())
    }
}

/// Convenience wrapper: P(n | m) for a chain.
pub fn grouped_transition<T: Real>(chain: &GroupedChain<T>, m: &CountVector, n: &CountVector) -> Result<T> {
    chain.transition(m, n)
}

/// Convenience wrapper: χ²_t(m) for a chain.
pub fn chi_squared<T: Real>(chain: &GroupedChain<T>, m: &CountVector, t: u32) -> Result<T> {
    chain.chi_squared(m, t)
}

/// κ_l = h_l E[Q_l(V)] for a single index.
pub fn kappa_from_increment<T: Real>(incr: &IncrementDist<T>, l: &MultiIndex) -> Result<Complex<T>> {
    let law = incr.count_law()?;
    let (q, d) = (incr.q(), incr.d());
    if l.q() != q || l.d() != d {
        return Err(Error::Shape("index does not match the increment".into()));
    }
    let idx = MultiIndexSpace::new(d, q)?;
    let li = idx.rank(l)?;
    let basis = standard_basis(q);
    let mut acc = czero::<T>();
    for (c, p) in &law {
        acc += mvk_column::<T>(c, &basis)?[li] * *p;
    }
    Ok(acc * h_of::<T>(l))
}

/// κ_l as E[θ_1^{S_1} θ_2^{S_2} ... θ_{q-1}^{S_{q-1}}], where S_k is the sum
/// of V over the k-th block of l_k coordinates.
///
/// For a fixed count vector the values falling into each block follow a
/// multivariate hypergeometric law; blocks are allocated one at a time from
/// the counts that remain.
pub fn kappa_block_form<T: Real>(incr: &IncrementDist<T>, l: &MultiIndex) -> Result<Complex<T>> {
    let law = incr.count_law()?;
    let q = incr.q();
    let roots = RootTable::<T>::new(q)?;
    let mut acc = czero::<T>();
    for (c, p) in &law {
        let mut memo = HashMap::new();
        acc += block_allocation(&roots, l.entries(), 0, c.counts().to_vec(), &mut memo) * *p;
    }
    Ok(acc)
}

fn block_allocation<T: Real>(
    roots: &RootTable<T>,
    blocks: &[usize],
    k: usize,
    rem: Vec<usize>,
    memo: &mut HashMap<(usize, Vec<usize>), Complex<T>>,
) -> Complex<T> {
    if k == blocks.len() {
        return cone();
    }
    if let Some(v) = memo.get(&(k, rem.clone())) {
        return *v;
    }
    let size = blocks[k];
    let total: usize = rem.iter().sum();
    let denom = binomial(total, size);
    let mut acc = czero::<T>();
    let mut alloc = vec![0; rem.len()];
    allocations(&rem, size, 0, &mut alloc, &mut |a| {
        let ways = a
            .iter()
            .zip(&rem)
            .fold(num_bigint::BigUint::from(1u32), |w, (&aj, &rj)| w * binomial(rj, aj));
        let prob = T::of_rational(&BigRational::new(ways.into(), denom.clone().into()));
        let s: usize = a.iter().enumerate().map(|(j, &aj)| j * aj).sum();
        let next: Vec<usize> = rem.iter().zip(a).map(|(r, x)| r - x).collect();
        acc += roots.pow(k + 1, s) * prob * block_allocation(roots, blocks, k + 1, next, memo);
    });
    memo.insert((k, rem), acc);
    acc
}

fn allocations(rem: &[usize], left: usize, j: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    if j == rem.len() - 1 {
        if left <= rem[j] {
            cur[j] = left;
            f(cur);
        }
        return;
    }
    for a in 0..=left.min(rem[j]) {
        cur[j] = a;
        allocations(rem, left - a, j + 1, cur, f);
    }
}

/// Eigenvalue of the subset-toggle walk at |l| = L: the expectation of
/// (-1)^{#marked among chosen} when A of d coordinates are chosen uniformly
/// and L are marked, Σ_n (-1)^n C(L,n) C(d-L,A-n) / C(d,A).
pub fn subset_toggle_kappa<T: Real>(a: usize, d: usize, level: usize) -> Result<T> {
    if a > d || level > d {
        return Err(Error::Parameter(format!("need A, L ≤ d; got A = {a}, L = {level}, d = {d}")));
    }
    let mut acc = BigInt::from(0);
    for n in 0..=level.min(a) {
        if a - n > d - level {
            continue;
        }
        let term = BigInt::from(binomial(level, n) * binomial(d - level, a - n));
        if n % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    Ok(T::of_rational(&BigRational::new(acc, binomial(d, a).into())))
}

/// Subset-toggle chain with κ_l = subset_toggle_kappa(A, d, |l|).
pub fn subset_toggle_chain<T: Real>(q: usize, d: usize, a: usize) -> Result<GroupedChain<T>> {
    let ks: Vec<T> = (0..=d).map(|lv| subset_toggle_kappa(a, d, lv)).collect::<Result<_>>()?;
    GroupedChain::from_degree_fn(q, d, |lv| ks[lv])
}

/// χ²_t(m_0) for the subset-toggle walk as the level sum
/// Σ_{L=1}^{A} C(d,L) (q-1)^L κ_L^{2t}.
///
/// Levels above A are left out: this is the expansion whose terms are
/// bracketed by the cutoff bounds.
pub fn subset_toggle_chi_squared_m0<T: Real>(q: usize, d: usize, a: usize, t: u32) -> Result<T> {
    check_modulus(q)?;
    let mut acc = T::zero();
    for level in 1..=a.min(d) {
        let k: T = subset_toggle_kappa(a, d, level)?;
        acc += T::of(binomial_f64(d, level)) * T::of_usize(q - 1).powi(level as i32) * k.powi(2 * t as i32);
    }
    Ok(acc)
}

fn check_fraction<T: Real>(frac: T) -> Result<()> {
    if !(frac > T::zero() && frac <= T::of(0.5)) {
        return Err(Error::Parameter(format!("fraction {frac} must lie in (0, 1/2]")));
    }
    Ok(())
}

/// t_cutoff = log(d(q-1)) / (4𝔎) for the subset-toggle walk with 𝔎 = A/d.
pub fn cutoff_time<T: Real>(d: usize, q: usize, frac: T) -> Result<T> {
    check_modulus(q)?;
    check_fraction(frac)?;
    Ok(T::of_usize(d * (q - 1)).ln() / (T::of(4.0) * frac))
}

/// t_C = (log(d(q-1)) + C) / (4𝔎).
pub fn cutoff_time_shifted<T: Real>(d: usize, q: usize, frac: T, c: T) -> Result<T> {
    check_modulus(q)?;
    check_fraction(frac)?;
    Ok((T::of_usize(d * (q - 1)).ln() + c) / (T::of(4.0) * frac))
}

/// Upper bound e^{d(q-1)e^{-4𝔎t}} - 1 on the maximal χ² distance.
pub fn cutoff_upper_bound<T: Real>(d: usize, q: usize, frac: T, t: T) -> T {
    (T::of_usize(d * (q - 1)) * (-T::of(4.0) * frac * t).exp()).exp_m1()
}

/// Lower bound d(q-1)(1-2𝔎)^{2t} on χ²_t(m_0).
pub fn cutoff_lower_bound<T: Real>(d: usize, q: usize, frac: T, t: T) -> T {
    T::of_usize(d * (q - 1)) * (T::one() - T::of(2.0) * frac).powf(T::of(2.0) * t)
}

/// Large-d maximal χ² distance (1 + (1-2𝔎)^{2t}(q-1))^d - 1.
pub fn subset_toggle_max_chi_squared<T: Real>(d: usize, q: usize, frac: T, t: T) -> T {
    let x = (T::one() - T::of(2.0) * frac).powf(T::of(2.0) * t) * T::of_usize(q - 1);
    (T::of_usize(d) * x.ln_1p()).exp_m1()
}

/// Bracket on the mixing time of the walk whose entries jump by c with
/// limiting fraction γ[c-1]:
///
/// ```text
/// log(d(q-1)/(1+ε)) / (2(|γ|-m_*))  ≤  t_mix  ≤  log(d(q-1)/(1+ε)) / (2(|γ|-m*))
/// ```
///
/// with m* and m_* the max and min over k of Σ_c γ[c] cos(2πck/q).
pub fn mixing_bounds<T: Real>(gamma: &[T], d: usize, q: usize, eps: T) -> Result<(T, T)> {
    check_modulus(q)?;
    if gamma.len() != q - 1 {
        return Err(Error::Shape(format!("gamma needs {} entries, got {}", q - 1, gamma.len())));
    }
    if gamma.iter().any(|&g| g < T::zero()) {
        return Err(Error::Parameter("gamma entries must be nonnegative".into()));
    }
    let total: T = gamma.iter().copied().sum();
    if total > T::one() + tol::<T>(1e-12) {
        return Err(Error::Parameter(format!("|gamma| = {total} exceeds 1")));
    }
    if eps <= -T::one() {
        return Err(Error::Parameter("eps must exceed -1".into()));
    }
    let roots = RootTable::<T>::new(q)?;
    let sums: Vec<T> = (1..q)
        .map(|k| {
            gamma
                .iter()
                .enumerate()
                .map(|(c0, &g)| g * roots.pow(c0 + 1, k).re)
                .sum()
        })
        .collect();
    let m_star = sums.iter().copied().fold(T::neg_infinity(), T::max);
    let m_low = sums.iter().copied().fold(T::infinity(), T::min);
    if total - m_star <= T::zero() {
        return Err(Error::NoBound(format!(
            "spectral gap |gamma| - m* = {} is not positive",
            total - m_star
        )));
    }
    let log = (T::of_usize(d * (q - 1)) / (T::one() + eps)).ln();
    let two = T::of(2.0);
    Ok((log / (two * (total - m_low)), log / (two * (total - m_star))))
}

/// Walk whose Hamming distance from the start moves by changing h
/// coordinates with probability q_h, the changed entries uniform on the
/// nonzero values.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(bound = "T: Real")]
pub struct HammingModel<T: Real> {
    qh: Vec<T>,
}

impl<T: Real> HammingModel<T> {
    pub fn new(qh: Vec<T>) -> Result<Self> {
        if qh.is_empty() {
            return Err(Error::Validation("q_h needs d + 1 entries".into()));
        }
        validate_probabilities(&qh, "Hamming model")?;
        Ok(Self { qh })
    }

    pub fn d(&self) -> usize {
        self.qh.len() - 1
    }

    pub fn qh(&self) -> &[T] {
        &self.qh
    }

    /// κ_L = Σ_h q_h Q^K_h(L; d, 1-1/q).
    pub fn kappa(&self, level: usize, q: usize) -> Result<T> {
        let d = self.d();
        let mut acc = T::zero();
        for (h, &p) in self.qh.iter().enumerate() {
            if p > T::zero() {
                acc += p * scaled_krawtchouk::<T>(h, level, d, q)?;
            }
        }
        Ok(acc)
    }

    /// Exchangeable increment: h coordinates chosen with probability q_h,
    /// each set to a uniform nonzero value.
    pub fn to_increment(&self, q: usize) -> Result<IncrementDist<T>> {
        check_modulus(q)?;
        let d = self.d();
        let mut law = Vec::new();
        for c in enumerate_count_vectors(d, q)? {
            let h = d - c[0];
            let p = self.qh[h];
            if p == T::zero() {
                continue;
            }
            let w = BigRational::new(
                multinomial_of(&c.counts()[1..]).into(),
                num_traits::pow(BigInt::from(q - 1), h),
            );
            law.push((c.counts().to_vec(), p * T::of_rational(&w)));
        }
        IncrementDist::exchangeable(q, d, law)
    }
}

fn hamming_profile<T: Real>(d: usize, q: usize, gamma: &[T]) -> Result<Vec<T>> {
    let qf = T::of_usize(q);
    let base_change = T::one() - T::one() / qf;
    let base_stay = T::one() / qf;
    let mut out = Vec::with_capacity(d + 1);
    for dist in 0..=d {
        let base = T::of(binomial_f64(d, dist))
            * base_change.powi(dist as i32)
            * base_stay.powi((d - dist) as i32);
        let mut bracket = T::one();
        for level in 1..=d {
            bracket += gamma[level] * T::of(binomial_f64(d, level)) * scaled_krawtchouk::<T>(level, dist, d, q)?;
        }
        let p = base * bracket;
        if p < -tol::<T>(NEGATIVE_TOLERANCE) {
            return Err(Error::InvalidEigenvalue(p.to_f64_lossy()));
        }
        out.push(p.max(T::zero()));
    }
    Ok(out)
}

/// Law of the Hamming distance from the start after t steps, with
/// γ_L = (q-1)^L κ_L^t.
pub fn hamming_marginal_model<T: Real>(model: &HammingModel<T>, q: usize, t: u32) -> Result<Vec<T>> {
    check_modulus(q)?;
    let d = model.d();
    let mut gamma = vec![T::zero(); d + 1];
    for (level, g) in gamma.iter_mut().enumerate().skip(1) {
        *g = T::of_usize(q - 1).powi(level as i32) * model.kappa(level, q)?.powi(t as i32);
    }
    hamming_profile(d, q, &gamma)
}

/// Law of the Hamming distance after t steps of a grouped chain, with
/// γ_L = Σ_{|l|=L} (|l| choose l) κ_l^t.
pub fn hamming_marginal_chain<T: Real>(chain: &GroupedChain<T>, t: u32) -> Result<Vec<T>> {
    let (q, d) = (chain.q, chain.d);
    let mut gamma = vec![czero::<T>(); d + 1];
    for (li, l) in chain.indices.indices().iter().enumerate() {
        let w = T::of_big_uint(&multinomial_of(l.entries()));
        gamma[l.degree()] += chain.kappa[li].powu(t) * w;
    }
    if let Some(g) = gamma.iter().find(|g| g.im.abs() > tol::<T>(1e-8) * T::one().max(g.re.abs())) {
        return Err(Error::InconsistentEigenvalues(g.im.to_f64_lossy()));
    }
    let gamma: Vec<T> = gamma.iter().map(|g| g.re).collect();
    hamming_profile(d, q, &gamma)
}

fn nonzero_pattern(x: &[usize]) -> Vec<bool> {
    x.iter().map(|&v| v != 0).collect()
}

const ENUMERATION_CAP: usize = 1 << 20;

/// Whether the Hamming distance from the start is Markov: given which
/// coordinates of V are nonzero, the nonzero values must be uniform.
pub fn is_hamming_markovian<T: Real>(incr: &IncrementDist<T>) -> Result<bool> {
    let q = incr.q();
    let eps = tol::<T>(1e-12);
    match incr {
        IncrementDist::ExchangeableCounts { law, d, .. } => {
            // Per-point probability P(c)/(d choose c) must depend on c[0] only.
            let mut per_point: HashMap<Vec<usize>, T> = HashMap::new();
            for a in law {
                let c = CountVector::from_counts(a.counts.clone())?;
                per_point.insert(a.counts.clone(), a.p / T::of_big_uint(&multinomial_coeff(&c)));
            }
            for c0 in 0..=*d {
                let vals: Vec<T> = enumerate_count_vectors(*d - c0, q - 1)
                    .map(|v| {
                        v.iter()
                            .map(|rest| {
                                let mut c = vec![c0];
                                c.extend_from_slice(rest.counts());
                                per_point.get(&c).copied().unwrap_or(T::zero())
                            })
                            .collect()
                    })
                    .unwrap_or_else(|_| {
                        // q = 2: a single count vector per c0.
                        vec![per_point.get(&vec![c0, *d - c0]).copied().unwrap_or(T::zero())]
                    });
                if vals.iter().any(|&v| (v - vals[0]).abs() > eps) {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        IncrementDist::IidProduct { marginals } => Ok(marginals.iter().all(|m| {
            let nz: Vec<T> = m.probs()[1..].to_vec();
            nz.iter().all(|&p| (p - nz[0]).abs() <= eps)
        })),
        IncrementDist::Explicit { support, .. } => Ok(explicit_markovian(
            support.iter().map(|a| (a.x.clone(), a.p)).collect(),
            q,
            eps,
        )),
        IncrementDist::Mixture { .. } => match incr.to_explicit(ENUMERATION_CAP) {
            Ok(atoms) => Ok(explicit_markovian(atoms, q, eps)),
            Err(Error::Size { .. }) => Err(Error::Unsupported(
                "mixture support is too large to enumerate".into(),
            )),
            Err(e) => Err(e),
        },
    }
}

fn explicit_markovian<T: Real>(atoms: Vec<(Vec<usize>, T)>, q: usize, eps: T) -> bool {
    let mut groups: HashMap<Vec<bool>, Vec<T>> = HashMap::new();
    for (x, p) in atoms {
        if p > T::zero() {
            groups.entry(nonzero_pattern(&x)).or_default().push(p);
        }
    }
    groups.iter().all(|(pat, ps)| {
        let h = pat.iter().filter(|&&b| b).count() as u32;
        let full = (q as u128 - 1).checked_pow(h).unwrap_or(u128::MAX);
        ps.len() as u128 == full && ps.iter().all(|&p| (p - ps[0]).abs() <= eps)
    })
}

/// Spreads the mass of each zero pattern uniformly over its nonzero values.
pub fn uniformize_nonzero<T: Real>(incr: &IncrementDist<T>) -> Result<IncrementDist<T>> {
    let q = incr.q();
    match incr {
        IncrementDist::IidProduct { marginals } => IncrementDist::iid_product(
            marginals
                .iter()
                .map(|m| {
                    let p = m.probs();
                    let rest = (T::one() - p[0]) / T::of_usize(q - 1);
                    let mut v = vec![rest; q];
                    v[0] = p[0];
                    IncrementLaw1D::new(v)
                })
                .collect::<Result<_>>()?,
        ),
        IncrementDist::ExchangeableCounts { d, law, .. } => {
            let d = *d;
            let mut by_zero = vec![T::zero(); d + 1];
            for a in law {
                by_zero[a.counts[0]] += a.p;
            }
            let mut out = Vec::new();
            for c in enumerate_count_vectors(d, q)? {
                let mass = by_zero[c[0]];
                if mass == T::zero() {
                    continue;
                }
                let h = d - c[0];
                let w = BigRational::new(
                    multinomial_of(&c.counts()[1..]).into(),
                    num_traits::pow(BigInt::from(q - 1), h),
                );
                out.push((c.counts().to_vec(), mass * T::of_rational(&w)));
            }
            IncrementDist::exchangeable(q, d, out)
        }
        IncrementDist::Explicit { d, support, .. } => {
            let mut groups: HashMap<Vec<bool>, T> = HashMap::new();
            for a in support {
                *groups.entry(nonzero_pattern(&a.x)).or_insert(T::zero()) += a.p;
            }
            let mut total: u128 = 0;
            for pat in groups.keys() {
                let h = pat.iter().filter(|&&b| b).count() as u32;
                total = total.saturating_add((q as u128 - 1).checked_pow(h).unwrap_or(u128::MAX));
            }
            if total > ENUMERATION_CAP as u128 {
                return Err(Error::Unsupported("uniformized support is too large".into()));
            }
            let mut atoms = Vec::new();
            let mut keys: Vec<_> = groups.into_iter().filter(|(_, p)| *p > T::zero()).collect();
            keys.sort_by(|a, b| a.0.cmp(&b.0));
            for (pat, mass) in keys {
                let h = pat.iter().filter(|&&b| b).count();
                let each = mass / T::of_usize(q - 1).powi(h as i32);
                let slots: Vec<usize> = (0..*d).filter(|&k| pat[k]).collect();
                let mut vals = vec![1usize; h];
                loop {
                    let mut x = vec![0; *d];
                    for (s, &v) in slots.iter().zip(&vals) {
                        x[*s] = v;
                    }
                    atoms.push((x, each));
                    // odometer over {1..q-1}^h
                    let mut i = 0;
                    while i < h {
                        vals[i] += 1;
                        if vals[i] < q {
                            break;
                        }
                        vals[i] = 1;
                        i += 1;
                    }
                    if i == h {
                        break;
                    }
                }
            }
            IncrementDist::explicit(q, *d, atoms)
        }
        IncrementDist::Mixture { components } => IncrementDist::mixture(
            components
                .iter()
                .map(|c| Ok((c.weight, uniformize_nonzero(&c.dist)?)))
                .collect::<Result<_>>()?,
        ),
    }
}

/// κ_l = Σ_i w_i ∏_k (Σ_j θ_1^{kj} p_i[j])^{l_k} for a discrete mixture of
/// i.i.d. coordinate laws p_i.
pub fn definetti_kappa<T: Real>(mixture: &[(T, Vec<T>)], l: &MultiIndex) -> Result<Complex<T>> {
    if mixture.is_empty() {
        return Err(Error::Validation("mixture has no components".into()));
    }
    let q = l.q();
    let weights: Vec<T> = mixture.iter().map(|(w, _)| *w).collect();
    validate_probabilities(&weights, "mixture weights")?;
    let roots = RootTable::<T>::new(q)?;
    let mut acc = czero::<T>();
    for (w, p) in mixture {
        if p.len() != q {
            return Err(Error::Validation(format!("component has {} entries, expected {q}", p.len())));
        }
        validate_probabilities(p, "mixture component")?;
        let mut prod = cone::<T>();
        for (k0, &lk) in l.entries().iter().enumerate() {
            let eta = p
                .iter()
                .enumerate()
                .fold(czero::<T>(), |s, (j, &pj)| s + roots.pow(k0 + 1, j) * pj);
            prod *= eta.powu(lk as u32);
        }
        acc += prod * *w;
    }
    Ok(acc)
}

/// Fraction of the exact value h_l^{-1} carried as f64, used in reports.
pub fn h_inv_f64(l: &MultiIndex) -> f64 {
    norm_h_inv(l).to_f64().unwrap_or(f64::INFINITY)
}
