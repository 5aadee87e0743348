//! Large-d limits of the Krawtchouk system.
//!
//! With n/d → z the normalised polynomials h_l Q_l(n) tend to a product of
//! powers, and on the CLT scale m = d/q + √d 𝔪 the rescaled polynomials
//! Q_l(m) d^{-|l|/2} tend to Q_l(𝔪; ∞), the coefficients of
//!
//! ```text
//! G(𝔪, 𝔴) = exp{-½ Σ_k 𝔴_k 𝔴_{q-k} + Σ_k 𝔴_k Σ_j 𝔪[j] θ_k^j}.
//! ```

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::krawtchouk::{mvk_column, standard_basis};
use crate::series::SeriesBasis;
use crate::scalar::Real;
use crate::zq_core::{check_modulus, enumerate_count_vectors, CountVector, MultiIndex, MultiIndexSpace, RootTable};

/// Largest |l| for which CLT coefficients are extracted.
pub const CLT_DEGREE_LIMIT: usize = 12;
/// Largest truncation level of the limiting transition density.
pub const DENSITY_LEVEL_LIMIT: usize = 8;

/// Limiting fractions z[1..q-1] of the nonzero symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionVector(Vec<f64>);

impl FractionVector {
    pub fn new(z: Vec<f64>) -> Result<Self> {
        if z.iter().any(|&x| !(x >= 0.0)) {
            return Err(Error::Validation("fractions must be nonnegative".into()));
        }
        let s: f64 = z.iter().sum();
        if s > 1.0 + 1e-12 {
            return Err(Error::Validation(format!("fractions sum to {s} > 1")));
        }
        Ok(Self(z))
    }

    pub fn zero(q: usize) -> Self {
        Self(vec![0.0; q.saturating_sub(1)])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    fn check(&self, q: usize) -> Result<()> {
        if self.0.len() + 1 != q {
            return Err(Error::Shape(format!("fraction vector needs {} entries", q - 1)));
        }
        Ok(())
    }
}

/// A point 𝔪 of the limiting Gaussian, length q with zero sum.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianCoordinate(Vec<f64>);

impl GaussianCoordinate {
    pub fn new(m: Vec<f64>) -> Result<Self> {
        let s: f64 = m.iter().sum();
        if s.abs() > 1e-12 {
            return Err(Error::Validation(format!("coordinates sum to {s}, expected 0")));
        }
        Ok(Self(m))
    }

    /// Completes 𝔪_+ = (𝔪[1], ..., 𝔪[q-1]) with 𝔪[0] = -Σ 𝔪_+.
    pub fn from_plus(plus: &[f64]) -> Self {
        let mut m = vec![-plus.iter().sum::<f64>()];
        m.extend_from_slice(plus);
        Self(m)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn plus(&self) -> &[f64] {
        &self.0[1..]
    }

    fn check(&self, q: usize) -> Result<()> {
        if self.0.len() != q {
            return Err(Error::Shape(format!("Gaussian coordinate needs {q} entries")));
        }
        Ok(())
    }
}

fn check_index(l: &[usize], q: usize) -> Result<()> {
    if l.len() + 1 != q {
        return Err(Error::Shape(format!("index needs {} entries, got {}", q - 1, l.len())));
    }
    Ok(())
}

/// 1 - |z| + Σ_j z[j] θ_k^j, the limit of h_{e_k} Q_{e_k}(n).
fn fraction_character(z: &FractionVector, k: usize, roots: &RootTable<f64>) -> Complex64 {
    let mut acc = Complex64::new(1.0 - z.total(), 0.0);
    for (j0, &zj) in z.values().iter().enumerate() {
        acc += roots.pow(k, j0 + 1) * zj;
    }
    acc
}

/// lim h_l Q_l(n) as n/d → z: ∏_k (1 - |z| + Σ_j z[j] θ_k^j)^{l_k}.
pub fn mvk_limit(z: &FractionVector, l: &[usize], q: usize) -> Result<Complex64> {
    check_modulus(q)?;
    z.check(q)?;
    check_index(l, q)?;
    let roots = RootTable::<f64>::new(q)?;
    Ok(l.iter()
        .enumerate()
        .map(|(k0, &lk)| fraction_character(z, k0 + 1, &roots).powu(lk as u32))
        .product())
}

/// lim C(d,L)^{-1} Q_L(n, m) as n/d → ξ, m/d → η:
/// (q(1-|ξ|)(1-|η|) + q Σ ξ[j]η[j] - 1)^L.
pub fn rk_limit(xi: &FractionVector, eta: &FractionVector, level: usize, q: usize) -> Result<f64> {
    check_modulus(q)?;
    xi.check(q)?;
    eta.check(q)?;
    let qf = q as f64;
    let dot: f64 = xi.values().iter().zip(eta.values()).map(|(a, b)| a * b).sum();
    let base = qf * (1.0 - xi.total()) * (1.0 - eta.total()) + qf * dot - 1.0;
    Ok(base.powi(level as i32))
}

/// H_k(x; q), orthogonal for N(0, 1/q), from
/// H_{k+1} = x H_k - (k/q) H_{k-1}.
pub fn hermite_chebycheff(k: usize, x: f64, q: usize) -> f64 {
    let v = 1.0 / q as f64;
    let (mut prev, mut cur) = (1.0, x);
    if k == 0 {
        return prev;
    }
    for j in 1..k {
        let next = x * cur - j as f64 * v * prev;
        prev = cur;
        cur = next;
    }
    cur
}

fn check_degree(degree: usize, limit: usize) -> Result<()> {
    if degree > limit {
        return Err(Error::size("series degree", degree as u128, limit as u128));
    }
    Ok(())
}

/// Q_l(𝔪; ∞) for every |l| ≤ degree, in multi-index order, from the
/// simplified generating function.
pub fn mvk_clt_all(m: &GaussianCoordinate, q: usize, degree: usize) -> Result<(SeriesBasis, Vec<Complex64>)> {
    check_modulus(q)?;
    m.check(q)?;
    check_degree(degree, CLT_DEGREE_LIMIT)?;
    let basis = SeriesBasis::new(q - 1, degree)?;
    let roots = RootTable::<f64>::new(q)?;
    let mut p = vec![Complex64::new(0.0, 0.0); basis.len()];
    let mut e = vec![0usize; q - 1];
    for k in 1..q {
        let ck: Complex64 = m.values().iter().enumerate().map(|(j, &mj)| roots.pow(k, j) * mj).sum();
        e[k - 1] = 1;
        if let Some(r) = basis.rank(&e) {
            p[r] += ck;
        }
        // -½ w_k w_{q-k}; each unordered pair is met twice over k.
        e[q - k - 1] += 1;
        if let Some(r) = basis.rank(&e) {
            p[r] -= 0.5;
        }
        e[q - k - 1] -= 1;
        e[k - 1] = 0;
    }
    let g = basis.exp(&p);
    Ok((basis, g))
}

/// Q_l(𝔪; ∞), the coefficient of 𝔴^l.
pub fn mvk_clt(m: &GaussianCoordinate, l: &[usize], q: usize) -> Result<Complex64> {
    check_index(l, q)?;
    let degree = l.iter().sum();
    let (basis, g) = mvk_clt_all(m, q, degree)?;
    Ok(g[basis.rank(l).expect("index within degree")])
}

/// Q_l(𝔪; ∞) from the unsimplified generating function
/// exp{-(1/2q) Σ_j (Σ_k 𝔴_k θ_k^j)² + Σ_j 𝔪[j] Σ_k 𝔴_k θ_k^j}.
pub fn mvk_clt_unsimplified(m: &GaussianCoordinate, l: &[usize], q: usize) -> Result<Complex64> {
    check_modulus(q)?;
    m.check(q)?;
    check_index(l, q)?;
    let degree: usize = l.iter().sum();
    check_degree(degree, CLT_DEGREE_LIMIT)?;
    let basis = SeriesBasis::new(q - 1, degree)?;
    let roots = RootTable::<f64>::new(q)?;
    let mut p = vec![Complex64::new(0.0, 0.0); basis.len()];
    for j in 0..q {
        let mut lin = vec![Complex64::new(0.0, 0.0); basis.len()];
        let mut e = vec![0usize; q - 1];
        for k in 1..q {
            e[k - 1] = 1;
            if let Some(r) = basis.rank(&e) {
                lin[r] = roots.pow(k, j);
            }
            e[k - 1] = 0;
        }
        let sq = basis.mul(&lin, &lin);
        for i in 0..basis.len() {
            p[i] += lin[i] * m.values()[j] - sq[i] / (2.0 * q as f64);
        }
    }
    let g = basis.exp(&p);
    Ok(g[basis.rank(l).expect("index within degree")])
}

/// Q_l(𝔪; ∞) as the Hermite–Chebycheff double sum
/// Σ_{|a|=|l|} ∏_j H_{a[j]}(𝔪[j]; q)/a[j]! · [𝔴^l] ∏_j (Σ_k 𝔴_k θ_k^j)^{a[j]}.
///
/// The coefficient is the top-degree Krawtchouk value Q_l(a) with d = |a|.
pub fn mvk_clt_hermite(m: &GaussianCoordinate, l: &[usize], q: usize) -> Result<Complex64> {
    check_modulus(q)?;
    m.check(q)?;
    check_index(l, q)?;
    let degree: usize = l.iter().sum();
    check_degree(degree, CLT_DEGREE_LIMIT)?;
    let basis = standard_basis(q);
    let idx = MultiIndex::new(l.to_vec(), degree)?;
    let space = MultiIndexSpace::new(degree, q)?;
    let li = space.rank(&idx)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for a in enumerate_count_vectors(degree, q)? {
        let mut weight = 1.0;
        for (j, &aj) in a.counts().iter().enumerate() {
            weight *= hermite_chebycheff(aj, m.values()[j], q) / factorial_f64(aj);
        }
        if weight == 0.0 {
            continue;
        }
        acc += mvk_column::<f64>(&a, &basis)?[li] * weight;
    }
    Ok(acc)
}

fn factorial_f64(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Q_l(m) for every |l| ≤ degree at a real point m (Σ m = d), by
/// continuing ∏_j (1 + Σ_k w_k θ_k^j)^{m[j]} to real exponents.
pub fn mvk_column_real(m: &[f64], q: usize, degree: usize) -> Result<(SeriesBasis, Vec<Complex64>)> {
    check_modulus(q)?;
    if m.len() != q {
        return Err(Error::Shape(format!("point needs {q} entries")));
    }
    check_degree(degree, CLT_DEGREE_LIMIT)?;
    let basis = SeriesBasis::new(q - 1, degree)?;
    let roots = RootTable::<f64>::new(q)?;
    let mut logsum = vec![Complex64::new(0.0, 0.0); basis.len()];
    for (j, &mj) in m.iter().enumerate() {
        let mut x = vec![Complex64::new(0.0, 0.0); basis.len()];
        let mut e = vec![0usize; q - 1];
        for k in 1..q {
            e[k - 1] = 1;
            if let Some(r) = basis.rank(&e) {
                x[r] = roots.pow(k, j);
            }
            e[k - 1] = 0;
        }
        // log(1 + x) = Σ_n (-1)^{n+1} x^n / n
        let mut pw = basis.one::<f64>();
        for n in 1..=degree {
            pw = basis.mul(&pw, &x);
            let c = if n % 2 == 1 { 1.0 } else { -1.0 } / n as f64;
            for (s, p) in logsum.iter_mut().zip(&pw) {
                *s += p * (c * mj);
            }
        }
    }
    let g = basis.exp(&logsum);
    Ok((basis, g))
}

/// Q_l(d/q + √d 𝔪) d^{-|l|/2} for every |l| ≤ degree: the finite-d
/// quantity whose limit is Q_l(𝔪; ∞).
pub fn clt_scaled_finite(d: usize, m: &GaussianCoordinate, q: usize, degree: usize) -> Result<Vec<Complex64>> {
    m.check(q)?;
    let df = d as f64;
    let point: Vec<f64> = m.values().iter().map(|&x| df / q as f64 + df.sqrt() * x).collect();
    let (basis, g) = mvk_column_real(&point, q, degree)?;
    Ok(basis
        .exponents()
        .iter()
        .zip(g)
        .map(|(e, v)| v * df.powf(-(e.iter().sum::<usize>() as f64) / 2.0))
        .collect())
}

/// Density of 𝔐_+ = (𝔐[1], ..., 𝔐[q-1]):
/// q^{q/2} (2π)^{-(q-1)/2} exp{-(q/2) Σ_{a,b} (δ_ab + 1) 𝔪[a]𝔪[b]}.
pub fn clt_phi(plus: &[f64], q: usize) -> f64 {
    let qf = q as f64;
    let sq: f64 = plus.iter().map(|x| x * x).sum();
    let s: f64 = plus.iter().sum();
    qf.powf(qf / 2.0) / (2.0 * PI).powf((qf - 1.0) / 2.0) * (-qf / 2.0 * (sq + s * s)).exp()
}

/// Limiting transition density at level cap `lmax`:
/// φ(𝔫_+) {1 + Σ_{0<|l|≤lmax} ∏_k(1-|𝔳|+Σ_j 𝔳[j]θ_k^j)^{l_k} ∏_k l_k!
/// Q_l(𝔪;∞) conj(Q_l(𝔫;∞))}.
pub fn clt_transition_density(
    m: &GaussianCoordinate,
    n: &GaussianCoordinate,
    v: &FractionVector,
    q: usize,
    lmax: usize,
) -> Result<f64> {
    check_degree(lmax, DENSITY_LEVEL_LIMIT)?;
    v.check(q)?;
    let (basis, qm) = mvk_clt_all(m, q, lmax)?;
    let (_, qn) = mvk_clt_all(n, q, lmax)?;
    let roots = RootTable::<f64>::new(q)?;
    let chars: Vec<Complex64> = (1..q).map(|k| fraction_character(v, k, &roots)).collect();
    let mut acc = Complex64::new(1.0, 0.0);
    for (i, e) in basis.exponents().iter().enumerate().skip(1) {
        let mut w = Complex64::new(1.0, 0.0);
        let mut fact = 1.0;
        for (k0, &lk) in e.iter().enumerate() {
            w *= chars[k0].powu(lk as u32);
            fact *= factorial_f64(lk);
        }
        acc += w * fact * qm[i] * qn[i].conj();
    }
    if acc.im.abs() > 1e-9 * acc.re.abs().max(1.0) {
        return Err(Error::NumericalInconsistency(format!(
            "limit density has imaginary part {}",
            acc.im
        )));
    }
    Ok(clt_phi(n.plus(), q) * acc.re)
}

/// Draws 𝔐 = Z - mean(Z) with Z_j i.i.d. N(0, 1/q), which has covariance
/// (1/q)(δ_ab - 1/q).
pub fn sample_clt_point<R: rand::Rng + ?Sized>(q: usize, rng: &mut R) -> GaussianCoordinate {
    let normal = Normal::new(0.0, (1.0 / q as f64).sqrt()).expect("positive variance");
    let z: Vec<f64> = (0..q).map(|_| normal.sample(rng)).collect();
    let mean = z.iter().sum::<f64>() / q as f64;
    GaussianCoordinate(z.iter().map(|x| x - mean).collect())
}

/// Monte Carlo check of E[Q_l(𝔐;∞) conj(Q_{l'}(𝔐;∞))] = δ_{ll'}/∏ l_k!
/// over 0 ≤ |l|, |l'| ≤ lmax, sampling 𝔐 with [`sample_clt_point`].
/// Returns the largest absolute deviation.
pub fn clt_orthogonality_check(q: usize, lmax: usize, n_mc: usize, seed: u64) -> Result<f64> {
    check_modulus(q)?;
    check_degree(lmax, CLT_DEGREE_LIMIT)?;
    let basis = SeriesBasis::new(q - 1, lmax)?;
    let n = basis.len();
    let chunks = rayon::current_num_threads().max(1) * 4;
    let per = n_mc.div_ceil(chunks);
    let sums = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(c as u64));
            let mut acc = vec![Complex64::new(0.0, 0.0); n * n];
            let count = per.min(n_mc.saturating_sub(c * per));
            for _ in 0..count {
                let m = sample_clt_point(q, &mut rng);
                let (_, vals) = mvk_clt_all(&m, q, lmax)?;
                for a in 0..n {
                    for b in 0..n {
                        acc[a * n + b] += vals[a] * vals[b].conj();
                    }
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = vec![Complex64::new(0.0, 0.0); n * n];
    for s in sums {
        for (t, x) in total.iter_mut().zip(s) {
            *t += x;
        }
    }
    let mut worst: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            let want = if a == b {
                1.0 / basis.exponents()[a].iter().map(|&x| factorial_f64(x)).product::<f64>()
            } else {
                0.0
            };
            worst = worst.max((total[a * n + b] / n_mc as f64 - want).norm());
        }
    }
    Ok(worst)
}

/// |h_l Q_l(n) - lim| at n = (d - Σ⌊d z_j⌋, ⌊d z_1⌋, ...), compared with the
/// limit at the realised fractions n/d.
pub fn mvk_limit_error(d: usize, z: &FractionVector, l: &[usize], q: usize) -> Result<f64> {
    z.check(q)?;
    check_index(l, q)?;
    let mut counts = vec![0usize; q];
    for (j0, &zj) in z.values().iter().enumerate() {
        counts[j0 + 1] = (d as f64 * zj).floor() as usize;
    }
    let rest: usize = counts.iter().sum();
    counts[0] = d.checked_sub(rest).ok_or_else(|| Error::Parameter("fractions exceed 1".into()))?;
    let n = CountVector::new(counts.clone(), d)?;
    let idx = MultiIndex::new(l.to_vec(), d)?;
    let space = MultiIndexSpace::new(d, q)?;
    let li = space.rank(&idx)?;
    let col = mvk_column::<f64>(&n, &standard_basis(q))?;
    let h = 1.0 / f64::of_big_uint(&crate::krawtchouk::norm_h_inv(&idx));
    let realised = FractionVector::new(counts[1..].iter().map(|&c| c as f64 / d as f64).collect())?;
    Ok((col[li] * h - mvk_limit(&realised, l, q)?).norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gc(plus: &[f64]) -> GaussianCoordinate {
        GaussianCoordinate::from_plus(plus)
    }

    #[test]
    fn limit_examples() {
        let z0 = FractionVector::zero(3);
        assert!((mvk_limit(&z0, &[2, 1], 3).unwrap() - 1.0).norm() < 1e-15);
        let z = FractionVector::new(vec![0.3]).unwrap();
        for l1 in 0..5 {
            let v = mvk_limit(&z, &[l1], 2).unwrap();
            assert!((v - 0.4f64.powi(l1 as i32)).norm() < 1e-14);
        }
        assert!(FractionVector::new(vec![0.7, 0.5]).is_err());
    }

    #[test]
    fn rk_limit_examples() {
        let q = 4;
        let z0 = FractionVector::zero(q);
        assert!((rk_limit(&z0, &z0, 3, q).unwrap() - 27.0).abs() < 1e-12);
        let bary = FractionVector::new(vec![0.25; 3]).unwrap();
        assert!(rk_limit(&bary, &bary, 2, q).unwrap().abs() < 1e-14);
        assert_eq!(rk_limit(&bary, &z0, 0, q).unwrap(), 1.0);
    }

    #[test]
    fn hermite_low_orders() {
        for &x in &[-1.3, 0.0, 0.7] {
            assert_eq!(hermite_chebycheff(0, x, 3), 1.0);
            assert_eq!(hermite_chebycheff(1, x, 3), x);
            assert!((hermite_chebycheff(2, x, 3) - (x * x - 1.0 / 3.0)).abs() < 1e-15);
            assert!((hermite_chebycheff(3, x, 3) - (x.powi(3) - x)).abs() < 1e-14);
        }
    }

    #[test]
    fn clt_low_orders() {
        let m = gc(&[0.3, -0.1]);
        assert!((mvk_clt(&m, &[0, 0], 3).unwrap() - 1.0).norm() < 1e-15);
        let roots = RootTable::<f64>::new(3).unwrap();
        for k in 1..3 {
            let mut l = vec![0, 0];
            l[k - 1] = 1;
            let want: Complex64 = (0..3).map(|j| roots.pow(k, j) * m.values()[j]).sum();
            assert!((mvk_clt(&m, &l, 3).unwrap() - want).norm() < 1e-14);
        }
        assert!(matches!(mvk_clt(&m, &[7, 6], 3), Err(Error::Size { .. })));
    }

    #[test]
    fn clt_forms_agree() {
        for q in [2, 3, 4] {
            let plus: Vec<f64> = (1..q).map(|j| 0.17 * j as f64 - 0.2).collect();
            let m = gc(&plus);
            for l in crate::zq_core::enumerate_multi_indices(4, q).unwrap() {
                let a = mvk_clt(&m, l.entries(), q).unwrap();
                let b = mvk_clt_unsimplified(&m, l.entries(), q).unwrap();
                let c = mvk_clt_hermite(&m, l.entries(), q).unwrap();
                assert!((a - b).norm() < 1e-9, "{q} {:?}: {a} vs {b}", l.entries());
                assert!((a - c).norm() < 1e-9, "{q} {:?}: {a} vs {c}", l.entries());
            }
        }
    }

    #[test]
    fn real_continuation_matches_integer_counts() {
        let q = 3;
        let m = CountVector::from_counts(vec![2, 1, 3]).unwrap();
        let exact = mvk_column::<f64>(&m, &standard_basis(q)).unwrap();
        let (_, cont) = mvk_column_real(&[2.0, 1.0, 3.0], q, 6).unwrap();
        for (a, b) in exact.iter().zip(&cont) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn uniform_fractions_give_phi() {
        let q = 3;
        let v = FractionVector::new(vec![1.0 / 3.0; 2]).unwrap();
        let (m, n) = (gc(&[0.1, 0.2]), gc(&[-0.3, 0.05]));
        let f = clt_transition_density(&m, &n, &v, q, 6).unwrap();
        assert!((f - clt_phi(n.plus(), q)).abs() < 1e-12);
        assert!(clt_transition_density(&m, &n, &v, q, 9).is_err());
    }
}
