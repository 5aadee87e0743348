//! One-dimensional circulant walks on Z_q.
//!
//! The walk X_{t+1} = X_t + V mod q has the circulant transition matrix with
//! first row v, eigenvectors (θ_r^a)_a and eigenvalues η_r = E[θ_r^V].

use ndarray::Array2;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{czero, Real};
use crate::zq_core::{check_modulus, gcd, is_prime, tol, CyclicElement, RootTable};

/// Law of a single increment, v_j = P(V = j).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<T>", into = "Vec<T>", bound = "T: Real")]
pub struct IncrementLaw1D<T: Real> {
    v: Vec<T>,
}

impl<T: Real> TryFrom<Vec<T>> for IncrementLaw1D<T> {
    type Error = Error;
    fn try_from(v: Vec<T>) -> Result<Self> {
        Self::new(v)
    }
}

impl<T: Real> From<IncrementLaw1D<T>> for Vec<T> {
    fn from(law: IncrementLaw1D<T>) -> Vec<T> {
        law.v
    }
}

impl<T: Real> IncrementLaw1D<T> {
    pub fn new(v: Vec<T>) -> Result<Self> {
        check_modulus(v.len())?;
        validate_probabilities(&v, "increment law")?;
        Ok(Self { v })
    }

    pub fn q(&self) -> usize {
        self.v.len()
    }

    pub fn probs(&self) -> &[T] {
        &self.v
    }

    pub fn prob(&self, j: usize) -> T {
        self.v[j % self.v.len()]
    }

    pub fn point_mass(q: usize, j: usize) -> Result<Self> {
        check_modulus(q)?;
        let mut v = vec![T::zero(); q];
        v[j % q] = T::one();
        Ok(Self { v })
    }

    pub fn uniform(q: usize) -> Result<Self> {
        check_modulus(q)?;
        Ok(Self {
            v: vec![T::one() / T::of_usize(q); q],
        })
    }

    /// Whether v_j = v_{q-j} for all j.
    pub fn is_symmetric(&self) -> bool {
        let q = self.q();
        let eps = tol::<T>(1e-12);
        (1..q).all(|j| (self.v[j] - self.v[q - j]).abs() <= eps)
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.q()).filter(|&j| self.v[j] > T::zero()).collect()
    }
}

pub(crate) fn validate_probabilities<T: Real>(p: &[T], what: &str) -> Result<()> {
    let mut sum = T::zero();
    for (j, &x) in p.iter().enumerate() {
        if !x.is_finite() || x < T::zero() {
            return Err(Error::Validation(format!("{what}: entry {j} is {x}")));
        }
        sum += x;
    }
    if (sum - T::one()).abs() > tol::<T>(1e-12) {
        return Err(Error::Validation(format!("{what}: probabilities sum to {sum}")));
    }
    Ok(())
}

/// Eigenvalues η_0, ..., η_{q-1} of a circulant walk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent, bound = "T: Real")]
pub struct EigenTable1D<T: Real> {
    eta: Vec<Complex<T>>,
}

impl<T: Real> EigenTable1D<T> {
    /// Wraps a table, checking η_0 = 1 and |η_r| ≤ 1.
    pub fn new(eta: Vec<Complex<T>>) -> Result<Self> {
        check_modulus(eta.len())?;
        let eps = tol::<T>(1e-12);
        if (eta[0] - Complex::new(T::one(), T::zero())).norm() > eps {
            return Err(Error::NotEigenvalueSequence(format!("eta_0 = {}", eta[0])));
        }
        if let Some((r, e)) = eta.iter().enumerate().find(|(_, e)| e.norm() > T::one() + eps) {
            return Err(Error::NotEigenvalueSequence(format!("|eta_{r}| = {} > 1", e.norm())));
        }
        Ok(Self { eta })
    }

    pub fn q(&self) -> usize {
        self.eta.len()
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.eta
    }

    pub fn get(&self, r: usize) -> Complex<T> {
        self.eta[r % self.eta.len()]
    }

    /// Eigenvalues of the t-step chain.
    pub fn powi(&self, t: u32) -> Self {
        Self {
            eta: self.eta.iter().map(|e| e.powu(t)).collect(),
        }
    }
}

/// Circulant transition matrix, P_ab = v_{(b-a) mod q}.
pub fn build_circulant<T: Real>(v: &IncrementLaw1D<T>) -> Array2<T> {
    let q = v.q();
    Array2::from_shape_fn((q, q), |(a, b)| v.v[(b + q - a) % q])
}

/// η_r = Σ_l v_l θ_r^l.
pub fn eigenvalues_1d<T: Real>(v: &IncrementLaw1D<T>) -> EigenTable1D<T> {
    let q = v.q();
    let roots = RootTable::<T>::new(q).expect("law has q >= 2");
    let eta = (0..q)
        .map(|r| {
            if r == 0 {
                return Complex::new(T::one(), T::zero());
            }
            v.v.iter()
                .enumerate()
                .fold(czero::<T>(), |acc, (l, &p)| acc + roots.pow(r, l) * p)
        })
        .collect();
    EigenTable1D { eta }
}

/// P_ab from the spectral expansion (1/q) Σ_r η_r θ_r^a conj(θ_r^b).
pub fn spectral_transition_1d<T: Real>(
    eta: &EigenTable1D<T>,
    a: CyclicElement,
    b: CyclicElement,
) -> Result<T> {
    let q = eta.q();
    if a.modulus() != q || b.modulus() != q {
        return Err(Error::Shape(format!(
            "states live in Z_{} and Z_{}, eigenvalues in Z_{q}",
            a.modulus(),
            b.modulus()
        )));
    }
    let roots = RootTable::<T>::new(q)?;
    // θ_r^a conj(θ_r^b) = θ_r^{a-b}
    let diff = a.sub(b).value();
    let s = eta
        .eta
        .iter()
        .enumerate()
        .fold(czero::<T>(), |acc, (r, &e)| acc + e * roots.pow(r, diff))
        / T::of_usize(q);
    if s.im.abs() > tol::<T>(1e-8) {
        return Err(Error::InconsistentEigenvalues(s.im.to_f64_lossy()));
    }
    Ok(s.re.max(T::zero()).min(T::one()))
}

/// Full transition matrix from an eigenvalue table, without clamping.
pub fn spectral_matrix_1d<T: Real>(eta: &EigenTable1D<T>) -> Result<Array2<T>> {
    let v = fourier_inverse(eta);
    let q = eta.q();
    let mut max_im = T::zero();
    for x in &v {
        max_im = max_im.max(x.im.abs());
    }
    if max_im > tol::<T>(1e-8) {
        return Err(Error::InconsistentEigenvalues(max_im.to_f64_lossy()));
    }
    Ok(Array2::from_shape_fn((q, q), |(a, b)| v[(b + q - a) % q].re))
}

fn fourier_inverse<T: Real>(eta: &EigenTable1D<T>) -> Vec<Complex<T>> {
    let q = eta.q();
    let roots = RootTable::<T>::new(q).expect("table has q >= 2");
    (0..q)
        .map(|j| {
            eta.eta
                .iter()
                .enumerate()
                .fold(czero::<T>(), |acc, (r, &e)| acc + e * roots.pow(r, j).conj())
                / T::of_usize(q)
        })
        .collect()
}

/// Inverse transform v_j = (1/q) Σ_r η_r conj(θ_r^j).
pub fn recover_increment<T: Real>(eta: &EigenTable1D<T>) -> Result<IncrementLaw1D<T>> {
    let raw = fourier_inverse(eta);
    let cut = tol::<T>(1e-8);
    let mut v = Vec::with_capacity(raw.len());
    for (j, x) in raw.iter().enumerate() {
        if x.im.abs() > cut {
            return Err(Error::NotEigenvalueSequence(format!(
                "recovered v_{j} has imaginary part {}",
                x.im
            )));
        }
        if x.re < -cut {
            return Err(Error::NotEigenvalueSequence(format!("recovered v_{j} = {} < 0", x.re)));
        }
        v.push(x.re.max(T::zero()));
    }
    let sum: T = v.iter().copied().sum();
    if (sum - T::one()).abs() > cut {
        return Err(Error::NotEigenvalueSequence(format!("recovered law sums to {sum}")));
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
    Ok(IncrementLaw1D { v })
}

/// Sufficient condition for ergodicity of a reversible walk: q prime and
/// larger than 2, or q = 2 with v_0 > 0. The degenerate walk v_0 = 1 never
/// qualifies.
pub fn is_ergodic_sufficient<T: Real>(v: &IncrementLaw1D<T>) -> Result<bool> {
    if !v.is_symmetric() {
        return Err(Error::Precondition(
            "sufficient ergodicity condition applies to symmetric laws only".into(),
        ));
    }
    let q = v.q();
    if v.v[0] >= T::one() - tol::<T>(1e-12) {
        return Ok(false);
    }
    Ok((is_prime(q) && q > 2) || (q == 2 && v.v[0] > T::zero()))
}

/// Exact ergodicity test from the support S of V.
///
/// The walk is irreducible iff S generates Z_q, i.e. gcd(S ∪ {q}) = 1. It is
/// then aperiodic iff the differences S - s_0 also generate Z_q, since the
/// t-step support is t·s_0 + (t-fold sums of differences).
pub fn is_ergodic_direct<T: Real>(v: &IncrementLaw1D<T>) -> bool {
    let q = v.q();
    let support = v.support();
    let irreducible = support.iter().fold(q, |g, &s| gcd(g, s)) == 1;
    let s0 = support[0];
    let aperiodic = support.iter().fold(q, |g, &s| gcd(g, (s + q - s0) % q)) == 1;
    irreducible && aperiodic
}

/// Ergodicity by iterating P^t until every entry is within 1e-8 of 1/q,
/// capped at 10 q² steps.
pub fn is_ergodic_matrix_power(v: &IncrementLaw1D<f64>) -> bool {
    let q = v.q();
    let p = build_circulant(v);
    let mut m = p.clone();
    let target = 1.0 / q as f64;
    for _ in 0..(10 * q * q) {
        if m.iter().all(|x| (x - target).abs() < 1e-8) {
            return true;
        }
        m = m.dot(&p);
    }
    false
}

/// Law of V - V' mod q for independent copies V, V'.
pub fn symmetrize<T: Real>(v: &IncrementLaw1D<T>) -> IncrementLaw1D<T> {
    let q = v.q();
    let mut out = vec![T::zero(); q];
    for a in 0..q {
        for b in 0..q {
            out[(a + q - b) % q] += v.v[a] * v.v[b];
        }
    }
    IncrementLaw1D { v: out }
}

/// Deterministic jump of `step` units.
pub fn shift_law<T: Real>(q: usize, step: usize) -> Result<IncrementLaw1D<T>> {
    IncrementLaw1D::point_mass(q, step)
}

/// Lazy symmetric unit jumps: v_0 = 1-γ, v_{±1} = γ/2.
pub fn lazy_law<T: Real>(q: usize, gamma: T) -> Result<IncrementLaw1D<T>> {
    check_modulus(q)?;
    check_unit(gamma, "gamma")?;
    let mut v = vec![T::zero(); q];
    v[0] += T::one() - gamma;
    let half = gamma / T::of(2.0);
    v[1 % q] += half;
    v[q - 1] += half;
    Ok(IncrementLaw1D { v })
}

/// Unit jumps with probability βγ/2 each way, otherwise a uniform draw.
pub fn mixture_law<T: Real>(q: usize, beta: T, gamma: T) -> Result<IncrementLaw1D<T>> {
    check_modulus(q)?;
    check_unit(beta, "beta")?;
    check_unit(gamma, "gamma")?;
    let bg = beta * gamma;
    let mut v = vec![(T::one() - bg) / T::of_usize(q); q];
    let half = bg / T::of(2.0);
    v[1 % q] += half;
    v[q - 1] += half;
    Ok(IncrementLaw1D { v })
}

/// Symmetric jumps from weights on 0..=⌊q/2⌋; the weight of j is split
/// evenly between j and q-j.
pub fn symmetric_law<T: Real>(q: usize, half: &[T]) -> Result<IncrementLaw1D<T>> {
    check_modulus(q)?;
    if half.len() != q / 2 + 1 {
        return Err(Error::Shape(format!(
            "symmetric law on Z_{q} takes {} weights, got {}",
            q / 2 + 1,
            half.len()
        )));
    }
    validate_probabilities(half, "symmetric weights")?;
    let mut v = vec![T::zero(); q];
    for (j, &w) in half.iter().enumerate() {
        if j == 0 || 2 * j == q {
            v[j] += w;
        } else {
            v[j] += w / T::of(2.0);
            v[q - j] += w / T::of(2.0);
        }
    }
    Ok(IncrementLaw1D { v })
}

fn check_unit<T: Real>(x: T, name: &str) -> Result<()> {
    if !(x >= T::zero() && x <= T::one()) {
        return Err(Error::Parameter(format!("{name} = {x} must lie in [0, 1]")));
    }
    Ok(())
}
