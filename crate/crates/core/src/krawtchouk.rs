//! Multivariate Krawtchouk polynomials on the uniform multinomial.
//!
//! Q_l(m) is the coefficient of w^l in
//!
//! ```text
//! G(m; w) = ∏_{j=0}^{q-1} (1 + Σ_k w_k θ_k^j)^{m[j]}
//! ```
//!
//! and the family is orthogonal under 𝔭(m) = (d choose m) q^{-d} with
//! E[|Q_l(M)|²] = h_l^{-1} = d! / ((d-|l|)! l_1! ... l_{q-1}!).

use std::io::Write;

use ndarray::Array2;
use num_bigint::{BigInt, BigUint};
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::{cone, czero, Real};
use crate::series::SeriesBasis;
use crate::zq_core::{
    binomial, check_modulus, count_vector_cardinality, enumerate_count_vectors, multinomial_coeff,
    multinomial_of, stationary_pmf_exact, tol, CountVector, CountVectorSpace, MultiIndex,
    MultiIndexSpace, RootTable,
};

/// Largest number of count vectors for which tables are built.
pub const MVK_CARDINALITY_LIMIT: u128 = 100_000;
/// Largest number of (l, m) entries held in a dense table.
pub const MVK_TABLE_LIMIT: u128 = 1 << 24;

fn guard(d: usize, q: usize) -> Result<usize> {
    check_modulus(q)?;
    let n = count_vector_cardinality(d, q)?;
    if n > MVK_CARDINALITY_LIMIT {
        return Err(Error::size("Krawtchouk index set", n, MVK_CARDINALITY_LIMIT));
    }
    Ok(n as usize)
}

/// The identity relabelling θ_k ↦ θ_k.
pub fn standard_basis(q: usize) -> Vec<usize> {
    (1..q).collect()
}

fn check_basis(q: usize, basis: &[usize]) -> Result<()> {
    let mut sorted = basis.to_vec();
    sorted.sort_unstable();
    if sorted != standard_basis(q) {
        return Err(Error::Parameter(format!(
            "{basis:?} is not a permutation of 1..{q}"
        )));
    }
    Ok(())
}

/// Q_l(m) for every l (in [`crate::zq_core::enumerate_multi_indices`] order)
/// at a single count vector, with θ_k replaced by θ_{basis[k-1]}.
pub fn mvk_column<T: Real>(m: &CountVector, basis: &[usize]) -> Result<Vec<Complex<T>>> {
    let (q, d) = (m.q(), m.d());
    guard(d, q)?;
    check_basis(q, basis)?;
    let sb = SeriesBasis::new(q - 1, d)?;
    Ok(column_with(&sb, &RootTable::new(q)?, m, basis))
}

fn column_with<T: Real>(
    sb: &SeriesBasis,
    roots: &RootTable<T>,
    m: &CountVector,
    basis: &[usize],
) -> Vec<Complex<T>> {
    let mut s = sb.one::<T>();
    let mut c = vec![czero::<T>(); basis.len()];
    for (j, &mj) in m.counts().iter().enumerate() {
        for (ck, &k) in c.iter_mut().zip(basis) {
            *ck = roots.pow(k, j);
        }
        for _ in 0..mj {
            sb.mul_linear(&mut s, cone(), &c);
        }
    }
    s
}

/// h_l = (d-|l|)! ∏ l_k! / d!, exactly.
pub fn norm_h(l: &MultiIndex) -> Result<BigRational> {
    if l.degree() > l.d() {
        return Err(Error::Index(format!("|l| = {} exceeds d = {}", l.degree(), l.d())));
    }
    Ok(BigRational::new(BigInt::one(), norm_h_inv(l).into()))
}

/// h_l^{-1} = d! / ((d-|l|)! ∏ l_k!), the multinomial coefficient of l⁺.
pub fn norm_h_inv(l: &MultiIndex) -> BigUint {
    multinomial_coeff(&l.plus())
}

/// Dense table of Q_l(m) with rows indexed by l and columns by m.
#[derive(Debug, Clone)]
pub struct MvkTable<T: Real> {
    q: usize,
    d: usize,
    basis: Vec<usize>,
    indices: MultiIndexSpace,
    states: CountVectorSpace,
    h_inv: Vec<BigUint>,
    h: Vec<T>,
    values: Array2<Complex<T>>,
}

/// Builds Q_l(m) for all l and m by expanding the generating function.
pub fn mvk_build<T: Real>(q: usize, d: usize) -> Result<MvkTable<T>> {
    mvk_build_with_basis(q, d, &standard_basis(q))
}

/// As [`mvk_build`] with the roots θ_1, ..., θ_{q-1} relabelled.
pub fn mvk_build_with_basis<T: Real>(q: usize, d: usize, basis: &[usize]) -> Result<MvkTable<T>> {
    let n = guard(d, q)?;
    if (n as u128) * (n as u128) > MVK_TABLE_LIMIT {
        return Err(Error::size("dense Krawtchouk table", (n as u128).pow(2), MVK_TABLE_LIMIT));
    }
    check_basis(q, basis)?;
    let indices = MultiIndexSpace::new(d, q)?;
    let states = CountVectorSpace::new(d, q)?;
    let sb = SeriesBasis::new(q - 1, d)?;
    let roots = RootTable::<T>::new(q)?;
    let columns: Vec<Vec<Complex<T>>> = states
        .states()
        .par_iter()
        .map(|m| column_with(&sb, &roots, m, basis))
        .collect();
    let values = Array2::from_shape_fn((n, n), |(li, mi)| columns[mi][li]);
    let h_inv: Vec<BigUint> = indices.indices().iter().map(norm_h_inv).collect();
    let h = h_inv
        .iter()
        .map(|x| T::of_rational(&BigRational::new(BigInt::one(), x.clone().into())))
        .collect();
    Ok(MvkTable {
        q,
        d,
        basis: basis.to_vec(),
        indices,
        states,
        h_inv,
        h,
        values,
    })
}

impl<T: Real> MvkTable<T> {
    pub fn q(&self) -> usize {
        self.q
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn basis(&self) -> &[usize] {
        &self.basis
    }

    pub fn indices(&self) -> &MultiIndexSpace {
        &self.indices
    }

    pub fn states(&self) -> &CountVectorSpace {
        &self.states
    }

    /// Q_l(m) by table position.
    pub fn at(&self, li: usize, mi: usize) -> Complex<T> {
        self.values[[li, mi]]
    }

    pub fn value(&self, l: &MultiIndex, m: &CountVector) -> Result<Complex<T>> {
        Ok(self.at(self.indices.rank(l)?, self.states.rank(m)?))
    }

    /// h_l as a float.
    pub fn h(&self, li: usize) -> T {
        self.h[li]
    }

    /// h_l^{-1}, exactly.
    pub fn h_inv(&self, li: usize) -> &BigUint {
        &self.h_inv[li]
    }

    pub fn values(&self) -> &Array2<Complex<T>> {
        &self.values
    }

    /// Writes `l_index,m_index,l,m,re,im` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Validation(format!("csv output failed: {e}"));
        wr.write_record(["l_index", "m_index", "l", "m", "re", "im"]).map_err(io)?;
        for (li, l) in self.indices.indices().iter().enumerate() {
            for (mi, m) in self.states.states().iter().enumerate() {
                let v = self.at(li, mi);
                wr.write_record([
                    li.to_string(),
                    mi.to_string(),
                    join(l.entries()),
                    join(m.counts()),
                    format!("{:e}", v.re),
                    format!("{:e}", v.im),
                ])
                .map_err(io)?;
            }
        }
        wr.flush().map_err(|e| Error::Validation(format!("csv output failed: {e}")))?;
        Ok(())
    }
}

fn join(x: &[usize]) -> String {
    x.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

/// Q_l(m) from the dual generating function: the coefficient of
/// (d choose m) s^m in h_l^{-1} (Σ_j s_j)^{d-|l|} ∏_k (Σ_j s_j θ_k^j)^{l_k}.
pub fn mvk_dual_eval<T: Real>(l: &MultiIndex, m: &CountVector) -> Result<Complex<T>> {
    let (q, d) = (m.q(), m.d());
    if l.q() != q || l.d() != d {
        return Err(Error::Shape("index and count vector disagree on (q, d)".into()));
    }
    guard(d, q)?;
    let sb = SeriesBasis::new(q, d)?;
    let roots = RootTable::<T>::new(q)?;
    let mut s = sb.one::<T>();
    let ones = vec![cone::<T>(); q];
    for _ in 0..(d - l.degree()) {
        sb.mul_linear(&mut s, czero(), &ones);
    }
    for (k0, &lk) in l.entries().iter().enumerate() {
        let c: Vec<Complex<T>> = (0..q).map(|j| roots.pow(k0 + 1, j)).collect();
        for _ in 0..lk {
            sb.mul_linear(&mut s, czero(), &c);
        }
    }
    let coeff = s[sb.rank(m.counts()).expect("m has total degree d")];
    let scale = T::of_rational(&BigRational::new(
        norm_h_inv(l).into(),
        multinomial_coeff(m).into(),
    ));
    Ok(coeff * scale)
}

/// K_l(m; d, q), the coefficient of w^l in (1+(q-1)w)^{d-m} (1-w)^m.
pub fn univariate_k_exact(l: usize, m: usize, d: usize, q: usize) -> Result<BigInt> {
    check_modulus(q)?;
    if l > d || m > d {
        return Err(Error::Index(format!("need l, m ≤ d; got l = {l}, m = {m}, d = {d}")));
    }
    let qm1 = BigInt::from(q - 1);
    let mut acc = BigInt::zero();
    for i in 0..=l.min(m) {
        if l - i > d - m {
            continue;
        }
        let term = BigInt::from(binomial(d - m, l - i))
            * num_traits::pow(qm1.clone(), l - i)
            * BigInt::from(binomial(m, i));
        if i % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    Ok(acc)
}

pub fn univariate_k<T: Real>(l: usize, m: usize, d: usize, q: usize) -> Result<T> {
    Ok(T::of_big_int(&univariate_k_exact(l, m, d, q)?))
}

/// Q^K_l(m) = C(d,l)^{-1} (q-1)^{-l} K_l(m; d, q), normalised so that
/// Q^K_l(0) = 1.
pub fn scaled_krawtchouk_exact(l: usize, m: usize, d: usize, q: usize) -> Result<BigRational> {
    let k = univariate_k_exact(l, m, d, q)?;
    let denom = BigInt::from(binomial(d, l)) * num_traits::pow(BigInt::from(q - 1), l);
    Ok(BigRational::new(k, denom))
}

pub fn scaled_krawtchouk<T: Real>(l: usize, m: usize, d: usize, q: usize) -> Result<T> {
    Ok(T::of_rational(&scaled_krawtchouk_exact(l, m, d, q)?))
}

/// E[Q_l(M) | M[0] = m0] = (q-1)^{-|l|} (|l| choose l) K_{|l|}(d - m0; d, q).
pub fn conditional_reduction<T: Real>(l: &MultiIndex, m0: usize, d: usize, q: usize) -> Result<T> {
    check_modulus(q)?;
    if l.q() != q || l.d() != d {
        return Err(Error::Shape("index does not match (q, d)".into()));
    }
    if m0 > d {
        return Err(Error::Index(format!("m0 = {m0} exceeds d = {d}")));
    }
    let n = l.degree();
    let k = univariate_k_exact(n, d - m0, d, q)?;
    let num = k * BigInt::from(multinomial_of(l.entries()));
    let den = num_traits::pow(BigInt::from(q - 1), n);
    Ok(T::of_rational(&BigRational::new(num, den)))
}

/// Reproducing kernel Q_L(n, m) = Σ_{|l|=L} h_l Q_l(m) conj(Q_l(n)).
pub fn rk_poly<T: Real>(table: &MvkTable<T>, level: usize, n: &CountVector, m: &CountVector) -> Result<T> {
    if level > table.d {
        return Err(Error::Index(format!("L = {level} exceeds d = {}", table.d)));
    }
    let ni = table.states.rank(n)?;
    let mi = table.states.rank(m)?;
    let mut acc = czero::<T>();
    for (li, l) in table.indices.indices().iter().enumerate() {
        if l.degree() == level {
            acc += table.at(li, mi) * table.at(li, ni).conj() * table.h(li);
        }
    }
    let scale = T::one().max(acc.re.abs());
    if acc.im.abs() > tol::<T>(1e-7) * scale {
        return Err(Error::NumericalInconsistency(format!(
            "reproducing kernel has imaginary part {}",
            acc.im
        )));
    }
    Ok(acc.re)
}

/// ζ_k(n, m) = Σ_{|w|=k} 𝔭(w) 𝔭(n-w) 𝔭(m-w) / (𝔭(n) 𝔭(m)), exactly.
pub fn overlap_zeta(k: usize, n: &CountVector, m: &CountVector) -> Result<BigRational> {
    let q = n.q();
    if m.q() != q || m.d() != n.d() {
        return Err(Error::Shape("count vectors disagree on (q, d)".into()));
    }
    let mut acc = BigRational::zero();
    for w in enumerate_count_vectors(k, q)? {
        let fits = (0..q).all(|j| w[j] <= n[j] && w[j] <= m[j]);
        if !fits {
            continue;
        }
        let nw = CountVector::from_counts((0..q).map(|j| n[j] - w[j]).collect())?;
        let mw = CountVector::from_counts((0..q).map(|j| m[j] - w[j]).collect())?;
        acc += stationary_pmf_exact(&w) * stationary_pmf_exact(&nw) * stationary_pmf_exact(&mw);
    }
    Ok(acc / (stationary_pmf_exact(n) * stationary_pmf_exact(m)))
}

/// Q_L(n, m) from the alternating overlap sum
/// Σ_k (-1)^{L-k} C(d,k) C(d-k, L-k) ζ_k(n, m).
pub fn rk_overlap_exact(level: usize, n: &CountVector, m: &CountVector) -> Result<BigRational> {
    let d = n.d();
    if level > d {
        return Err(Error::Index(format!("L = {level} exceeds d = {d}")));
    }
    let mut acc = BigRational::zero();
    for k in 0..=level {
        let c = BigInt::from(binomial(d, k) * binomial(d - k, level - k));
        let term = overlap_zeta(k, n, m)? * BigRational::from_integer(c);
        if (level - k).is_multiple_of(2) {
            acc += term;
        } else {
            acc -= term;
        }
    }
    Ok(acc)
}

pub fn rk_overlap<T: Real>(level: usize, n: &CountVector, m: &CountVector) -> Result<T> {
    Ok(T::of_rational(&rk_overlap_exact(level, n, m)?))
}

/// Linearisation coefficient c(m, n, g) = 𝔭(g) Σ_l h_l² Q_l(m) conj(Q_l(n)) Q_l(g).
pub fn hypergroup_coeff<T: Real>(
    table: &MvkTable<T>,
    m: &CountVector,
    n: &CountVector,
    g: &CountVector,
) -> Result<T> {
    let (mi, ni, gi) = (table.states.rank(m)?, table.states.rank(n)?, table.states.rank(g)?);
    let mut acc = czero::<T>();
    for li in 0..table.indices.len() {
        let h = table.h(li);
        acc += table.at(li, mi) * table.at(li, ni).conj() * table.at(li, gi) * (h * h);
    }
    let acc = acc * T::of_rational(&stationary_pmf_exact(g));
    if acc.im.abs() > tol::<T>(1e-7) {
        return Err(Error::NumericalInconsistency(format!(
            "hypergroup coefficient has imaginary part {}",
            acc.im
        )));
    }
    if acc.re < -tol::<T>(1e-6) {
        return Err(Error::HypergroupViolation(acc.re.to_f64_lossy()));
    }
    Ok(acc.re)
}

/// Absolute value of a rational, used by callers comparing exact sums.
pub fn rational_abs(x: &BigRational) -> BigRational {
    x.abs()
}
