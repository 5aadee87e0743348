//! Continuous limit on the circle T = [0, 1).
//!
//! B_{t+1} = B_t + 𝔙 mod 1 has eigenfunctions e^{2πirb} with eigenvalues
//! ĝ(r) = E[e^{2πi𝔙r}], so the t-step density is
//! f_t(b | a) = Σ_r ĝ(r)^t e^{2πir(a-b)} whenever the series converges.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

type Ghat = Arc<dyn Fn(i64) -> Complex64 + Send + Sync>;
type Sampler = Arc<dyn Fn(&mut dyn RngCore) -> f64 + Send + Sync>;

/// Largest truncation radius density_series will use.
pub const MAX_RADIUS: u64 = 10_000_000;

/// Law of the torus increment 𝔙 given by its Fourier coefficients.
#[derive(Clone)]
pub struct TorusLaw {
    ghat: Ghat,
    tail_constant: Option<f64>,
    monotone: bool,
    sampler: Option<Sampler>,
}

impl fmt::Debug for TorusLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusLaw")
            .field("tail_constant", &self.tail_constant)
            .field("monotone", &self.monotone)
            .field("sampler", &self.sampler.is_some())
            .finish()
    }
}

impl TorusLaw {
    /// A law from its coefficients. `tail_constant` is C with
    /// |ĝ(r)| ≤ C/(2πr)²; without it densities cannot be truncated.
    pub fn new(
        ghat: impl Fn(i64) -> Complex64 + Send + Sync + 'static,
        tail_constant: Option<f64>,
    ) -> Result<Self> {
        let g0 = ghat(0);
        if (g0 - 1.0).norm() > 1e-12 {
            return Err(Error::Validation(format!("ghat(0) = {g0}, expected 1")));
        }
        if let Some(c) = tail_constant {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(Error::Validation(format!("tail constant {c} must be finite and ≥ 0")));
            }
        }
        Ok(Self {
            ghat: Arc::new(ghat),
            tail_constant,
            monotone: false,
            sampler: None,
        })
    }

    /// Attaches a sampler for 𝔙.
    pub fn with_sampler(mut self, sampler: impl Fn(&mut dyn RngCore) -> f64 + Send + Sync + 'static) -> Self {
        self.sampler = Some(Arc::new(sampler));
        self
    }

    /// Declares |ĝ(r)| nonincreasing in |r|, letting the density series stop
    /// once terms are negligible.
    pub fn with_monotone(mut self, monotone: bool) -> Self {
        self.monotone = monotone;
        self
    }

    /// Uniform 𝔙: ĝ(r) = δ_{r0}.
    pub fn uniform() -> Self {
        Self::new(|r| if r == 0 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }, Some(0.0))
            .expect("valid")
            .with_monotone(true)
            .with_sampler(|rng| rng.random::<f64>())
    }

    /// 𝔙 ≡ v. Its density series diverges, so no tail constant is set.
    pub fn point(v: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&v) {
            return Err(Error::Parameter(format!("point {v} must lie in [0, 1)")));
        }
        Ok(Self::new(move |r| Complex64::from_polar(1.0, 2.0 * PI * v * r as f64), None)?
            .with_sampler(move |_| v))
    }

    /// Von Mises law with density e^{k cos 2πv}/I_0(k) on [0, 1).
    pub fn von_mises(k: f64) -> Result<Self> {
        let ln_i0 = ln_bessel_i(k, 0)?;
        let tail = von_mises_tail_constant(k, ln_i0);
        Ok(Self::new(
            move |r| Complex64::new(von_mises_ghat(k, r).unwrap_or(0.0), 0.0),
            Some(tail),
        )?
        .with_monotone(true)
        .with_sampler(move |rng| sample_von_mises(k, rng)))
    }

    pub fn ghat(&self, r: i64) -> Complex64 {
        (self.ghat)(r)
    }

    pub fn tail_constant(&self) -> Option<f64> {
        self.tail_constant
    }

    pub fn has_sampler(&self) -> bool {
        self.sampler.is_some()
    }

    /// One draw of 𝔙 in [0, 1).
    pub fn sample(&self, rng: &mut dyn RngCore) -> Result<f64> {
        let s = self
            .sampler
            .as_ref()
            .ok_or_else(|| Error::Unsupported("torus law has no sampler".into()))?;
        Ok(s(rng).rem_euclid(1.0))
    }
}

fn wrap(x: f64) -> f64 {
    let y = x.rem_euclid(1.0);
    if y >= 1.0 { 0.0 } else { y }
}

/// One step (a + 𝔙) mod 1 with a seeded generator.
pub fn torus_step(a: f64, law: &TorusLaw, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(wrap(a + law.sample(&mut rng)?))
}

/// Positions after t steps from a, one per path; path i uses seed ^ i.
pub fn torus_paths(a: f64, law: &TorusLaw, t: usize, paths: usize, seed: u64) -> Result<Vec<f64>> {
    if !law.has_sampler() {
        return Err(Error::Unsupported("torus law has no sampler".into()));
    }
    (0..paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ i as u64);
            let mut b = a;
            for _ in 0..t {
                b = wrap(b + law.sample(&mut rng)?);
            }
            Ok(b)
        })
        .collect()
}

/// Fraction of paths with B_2 ∈ (a, a + ε) (mod 1) started from a.
pub fn two_step_return_frequency(a: f64, law: &TorusLaw, eps: f64, paths: usize, seed: u64) -> Result<f64> {
    let ends = torus_paths(a, law, 2, paths, seed)?;
    let hits = ends
        .iter()
        .filter(|&&b| {
            let off = (b - a).rem_euclid(1.0);
            off > 0.0 && off < eps
        })
        .count();
    Ok(hits as f64 / paths.max(1) as f64)
}

/// P(B_{t+1} ≤ b | B_t = a) = P(𝔙 ≤ b-a) + P(1-a < 𝔙 ≤ b+1-a).
pub fn transition_cdf(a: f64, b: f64, vcdf: impl Fn(f64) -> f64) -> f64 {
    let f = |x: f64| {
        if x < 0.0 {
            0.0
        } else if x >= 1.0 {
            1.0
        } else {
            vcdf(x)
        }
    };
    let below = if b >= a { f(b - a) } else { 0.0 };
    below + f(b + 1.0 - a) - f(1.0 - a)
}

/// Smallest R with 2 Σ_{r>R} (C/(2πr)²)^t < eps.
pub fn truncation_radius(c: f64, t: u32, eps: f64) -> Result<u64> {
    if t == 0 {
        return Err(Error::Parameter("t must be at least 1".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::Parameter(format!("eps = {eps} must be positive")));
    }
    if c == 0.0 {
        return Ok(0);
    }
    let a = c / (4.0 * PI * PI);
    let tt = t as f64;
    // Σ_{r>R} r^{-2t} ≤ ∫_R^∞ x^{-2t} dx = R^{1-2t}/(2t-1)
    let bound = |r: f64| 2.0 * (tt * a.ln() + (1.0 - 2.0 * tt) * r.ln()).exp() / (2.0 * tt - 1.0);
    let (mut lo, mut hi) = (1u64, 1u64);
    while bound(hi as f64) >= eps {
        if hi >= MAX_RADIUS {
            return Err(Error::CannotTruncate);
        }
        lo = hi;
        hi = (hi * 2).min(MAX_RADIUS);
    }
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if bound(mid as f64) < eps {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(hi)
}

fn series_coefficients(law: &TorusLaw, t: u32, eps: f64) -> Result<Vec<Complex64>> {
    let c = law.tail_constant.ok_or(Error::CannotTruncate)?;
    // A monotone law may stop early once its terms are negligible, so the
    // radius cap only matters if that never happens.
    let (radius, capped) = match truncation_radius(c, t, eps) {
        Ok(r) => (r, false),
        Err(Error::CannotTruncate) if law.monotone => (MAX_RADIUS, true),
        Err(e) => return Err(e),
    };
    let mut coef = vec![Complex64::new(1.0, 0.0)];
    for r in 1..=radius as i64 {
        let g = law.ghat(r).powu(t);
        if law.monotone && g.norm() < 1e-17 * eps {
            return Ok(coef);
        }
        coef.push(g);
    }
    if capped {
        return Err(Error::CannotTruncate);
    }
    Ok(coef)
}

/// f_t(b | a) from the Fourier series truncated by the tail bound.
pub fn density_series(law: &TorusLaw, t: u32, a: f64, b: f64, eps: f64) -> Result<f64> {
    let coef = series_coefficients(law, t, eps)?;
    let mut acc = 1.0;
    for (r, g) in coef.iter().enumerate().skip(1) {
        let phase = Complex64::from_polar(1.0, 2.0 * PI * r as f64 * (a - b));
        acc += 2.0 * (g * phase).re;
    }
    Ok(acc)
}

/// f_t(b_j | a) at b_j = j/n for j = 0..n, via one FFT of the truncated
/// coefficients folded modulo n.
pub fn density_grid(law: &TorusLaw, t: u32, a: f64, n: usize, eps: f64) -> Result<Vec<(f64, f64)>> {
    if n == 0 {
        return Err(Error::Parameter("grid needs at least one point".into()));
    }
    let coef = series_coefficients(law, t, eps)?;
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    buf[0] += coef[0];
    for (r, g) in coef.iter().enumerate().skip(1) {
        let phase = Complex64::from_polar(1.0, 2.0 * PI * r as f64 * a);
        buf[r % n] += g * phase;
        buf[(n - r % n) % n] += (g * phase).conj();
    }
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    Ok(buf
        .iter()
        .enumerate()
        .map(|(j, v)| (j as f64 / n as f64, v.re))
        .collect())
}

/// ln I_r(k) from the ascending series Σ_s (k/2)^{2s+|r|}/(s!(s+|r|)!),
/// accumulated on the log scale.
pub fn ln_bessel_i(k: f64, r: i64) -> Result<f64> {
    if !(k >= 0.0) {
        return Err(Error::Parameter(format!("k = {k} must be nonnegative")));
    }
    if k > 50.0 {
        return Err(Error::Range(format!("k = {k} is too large for the series (max 50)")));
    }
    let r = r.unsigned_abs();
    if k == 0.0 {
        return Ok(if r == 0 { 0.0 } else { f64::NEG_INFINITY });
    }
    let half = k / 2.0;
    let ln_fact_r: f64 = (1..=r).map(|i| (i as f64).ln()).sum();
    let first = r as f64 * half.ln() - ln_fact_r;
    // Terms relative to the first: t_{s+1}/t_s = (k/2)²/((s+1)(s+1+r)).
    let mut rel = 1.0;
    let mut sum = 1.0;
    let mut s = 0u64;
    loop {
        rel *= half * half / ((s + 1) as f64 * (s + 1 + r) as f64);
        sum += rel;
        s += 1;
        if rel < 1e-17 * sum {
            break;
        }
    }
    Ok(first + sum.ln())
}

/// ĝ(r) = I_r(k)/I_0(k) for the von Mises law.
pub fn von_mises_ghat(k: f64, r: i64) -> Result<f64> {
    if r == 0 {
        ln_bessel_i(k, 0)?;
        return Ok(1.0);
    }
    Ok((ln_bessel_i(k, r)? - ln_bessel_i(k, 0)?).exp())
}

/// Von Mises density on [0, 1).
pub fn von_mises_density(k: f64, v: f64) -> Result<f64> {
    Ok((k * (2.0 * PI * v).cos() - ln_bessel_i(k, 0)?).exp())
}

fn von_mises_tail_constant(k: f64, ln_i0: f64) -> f64 {
    // |ĝ(r)| ≤ sup|g''|/(2πr)² after two integrations by parts.
    let n = 4096;
    let sup = (0..n)
        .map(|j| {
            let x = 2.0 * PI * j as f64 / n as f64;
            let g2 = 4.0 * PI * PI * k * (k * x.cos() - ln_i0).exp() * (k * x.sin().powi(2) - x.cos());
            g2.abs()
        })
        .fold(0.0, f64::max);
    sup * 1.01
}

/// Best–Fisher rejection sampler, returned as a fraction of a turn.
fn sample_von_mises(k: f64, rng: &mut dyn RngCore) -> f64 {
    if k < 1e-8 {
        return rng.random::<f64>();
    }
    let tau = 1.0 + (1.0 + 4.0 * k * k).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * k);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    loop {
        let u1: f64 = rng.random();
        let z = (PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = k * (r - f);
        let u2: f64 = rng.random();
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let u3: f64 = rng.random();
            let theta = if u3 > 0.5 { f.acos() } else { -f.acos() };
            return wrap(theta / (2.0 * PI));
        }
    }
}

/// Eigenvalue exp{λτ(ĝ(r) - 1)} of the Poisson-embedded walk.
pub fn poisson_eigenvalue(lambda: f64, tau: f64, r: i64, law: &TorusLaw) -> Result<Complex64> {
    if lambda < 0.0 || tau < 0.0 {
        return Err(Error::Parameter("lambda and tau must be nonnegative".into()));
    }
    Ok(((law.ghat(r) - 1.0) * (lambda * tau)).exp())
}

/// ₁F₁(a, 1; iϑ) by its power series.
fn hyp1f1_imag(a: f64, vartheta: f64) -> Result<Complex64> {
    let z = Complex64::new(0.0, vartheta);
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut biggest: f64 = 1.0;
    for k in 0..10_000u32 {
        let kf = k as f64;
        term *= z * ((a + kf) / ((1.0 + kf) * (1.0 + kf)));
        sum += term;
        biggest = biggest.max(term.norm());
        if term.norm() < 1e-14 * sum.norm().max(1e-300) && kf > vartheta.abs() {
            if biggest * f64::EPSILON > 1e-9 * sum.norm() {
                return Err(Error::Range(format!(
                    "1F1 series loses too many digits at argument {vartheta}"
                )));
            }
            return Ok(sum);
        }
    }
    Err(Error::Range("1F1 series did not converge in 10^4 terms".into()))
}

/// Eigenvalue exp{τ(1-γ)^{-1}(₁F₁(1-γ, 1; 2πir) - 1)} of the walk
/// subordinated by the Beta-type process.
pub fn beta_subordinator_eigenvalue(gamma: f64, tau: f64, r: i64) -> Result<Complex64> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Parameter(format!("gamma = {gamma} must lie in (0, 1)")));
    }
    if tau < 0.0 {
        return Err(Error::Parameter("tau must be nonnegative".into()));
    }
    if r == 0 || tau == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let f = hyp1f1_imag(1.0 - gamma, 2.0 * PI * r as f64)?;
    Ok(((f - 1.0) * (tau / (1.0 - gamma))).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_wraps() {
        let law = TorusLaw::point(1.0 / 3.0).unwrap();
        let b = torus_step(0.9, &law, 1).unwrap();
        assert!((b - (0.9 + 1.0 / 3.0 - 1.0)).abs() < 1e-12);
        let no_sampler = TorusLaw::new(|_| Complex64::new(1.0, 0.0), None).unwrap();
        assert!(matches!(torus_step(0.1, &no_sampler, 0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn cdf_examples() {
        let vcdf = |x: f64| x * x;
        assert!((transition_cdf(0.0, 0.4, vcdf) - 0.16).abs() < 1e-15);
        for &(a, b) in &[(0.2, 0.7), (0.7, 0.2), (0.5, 0.5)] {
            assert!((transition_cdf(a, b, |x| x) - b).abs() < 1e-15);
        }
        assert!((transition_cdf(0.3, 1.0 - 1e-15, vcdf) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bessel_ratio_examples() {
        assert_eq!(von_mises_ghat(0.0, 0).unwrap(), 1.0);
        assert_eq!(von_mises_ghat(0.0, 3).unwrap(), 0.0);
        // I_1(1)/I_0(1)
        assert!((von_mises_ghat(1.0, 1).unwrap() - 0.4463899658965345).abs() < 1e-14);
        assert_eq!(von_mises_ghat(2.0, 4).unwrap(), von_mises_ghat(2.0, -4).unwrap());
        let mut prev = 1.0;
        for r in 1..40 {
            let g = von_mises_ghat(2.0, r).unwrap();
            assert!(g < prev && g > 0.0);
            prev = g;
        }
        assert!(matches!(von_mises_ghat(60.0, 1), Err(Error::Range(_))));
    }

    #[test]
    fn uniform_density_is_one() {
        let law = TorusLaw::uniform();
        assert_eq!(density_series(&law, 3, 0.2, 0.9, 1e-8).unwrap(), 1.0);
        let pt = TorusLaw::point(0.25).unwrap();
        assert!(matches!(density_series(&pt, 1, 0.0, 0.1, 1e-6), Err(Error::CannotTruncate)));
    }

    #[test]
    fn von_mises_density_matches() {
        let k = 2.0;
        let law = TorusLaw::von_mises(k).unwrap();
        for &(a, b) in &[(0.0, 0.1), (0.3, 0.05), (0.9, 0.4)] {
            let f = density_series(&law, 1, a, b, 1e-9).unwrap();
            let g = von_mises_density(k, (b - a).rem_euclid(1.0)).unwrap();
            assert!((f - g).abs() < 1e-6, "{f} vs {g}");
        }
        let grid = density_grid(&law, 1, 0.3, 256, 1e-9).unwrap();
        for &(b, f) in grid.iter().step_by(17) {
            assert!((f - density_series(&law, 1, 0.3, b, 1e-9).unwrap()).abs() < 1e-9);
        }
        let late = density_series(&law, 200, 0.0, 0.5, 1e-9).unwrap();
        assert!((late - 1.0).abs() < 1e-9);
    }

    #[test]
    fn radius_grows_with_accuracy() {
        let a = truncation_radius(10.0, 2, 1e-4).unwrap();
        let b = truncation_radius(10.0, 2, 1e-8).unwrap();
        assert!(a < b);
        assert_eq!(truncation_radius(0.0, 1, 1e-8).unwrap(), 0);
    }

    #[test]
    fn poisson_examples() {
        let law = TorusLaw::uniform();
        assert_eq!(poisson_eigenvalue(2.0, 0.0, 3, &law).unwrap(), Complex64::new(1.0, 0.0));
        assert_eq!(poisson_eigenvalue(2.0, 1.5, 0, &law).unwrap(), Complex64::new(1.0, 0.0));
        let v = poisson_eigenvalue(1.0, 1.0, 2, &law).unwrap();
        assert!((v - (-1f64).exp()).norm() < 1e-15);
    }

    #[test]
    fn beta_trivial_cases() {
        assert_eq!(beta_subordinator_eigenvalue(0.5, 2.0, 0).unwrap(), Complex64::new(1.0, 0.0));
        assert_eq!(beta_subordinator_eigenvalue(0.5, 0.0, 4).unwrap(), Complex64::new(1.0, 0.0));
        assert!(beta_subordinator_eigenvalue(1.5, 1.0, 1).is_err());
        let v = beta_subordinator_eigenvalue(0.5, 1.0, 1).unwrap();
        assert!(v.norm() <= 1.0);
    }
}
