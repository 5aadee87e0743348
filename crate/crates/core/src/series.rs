//! Dense truncated power series in several variables.
//!
//! Monomials w^e with |e| ≤ D are stored in the graded order of
//! [`enumerate_multi_indices`], so the coefficient of w^l sits at the rank of
//! the multi-index l.

use std::collections::HashMap;

use num_complex::Complex;

use crate::error::Result;
use crate::scalar::{cone, czero, Real};
use crate::zq_core::enumerate_multi_indices;

/// Monomial basis for series in `nvars` variables truncated at total degree
/// `degree`.
#[derive(Debug, Clone)]
pub struct SeriesBasis {
    nvars: usize,
    degree: usize,
    exps: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
    // down[i][k] = rank of exps[i] - e_k, if that exponent is nonnegative.
    down: Vec<Vec<Option<usize>>>,
}

impl SeriesBasis {
    pub fn new(nvars: usize, degree: usize) -> Result<Self> {
        let exps: Vec<Vec<usize>> = enumerate_multi_indices(degree, nvars + 1)?
            .into_iter()
            .map(|l| l.entries().to_vec())
            .collect();
        let index: HashMap<Vec<usize>, usize> =
            exps.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
        let down = exps
            .iter()
            .map(|e| {
                (0..nvars)
                    .map(|k| {
                        if e[k] == 0 {
                            None
                        } else {
                            let mut f = e.clone();
                            f[k] -= 1;
                            index.get(&f).copied()
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            nvars,
            degree,
            exps,
            index,
            down,
        })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn exponents(&self) -> &[Vec<usize>] {
        &self.exps
    }

    pub fn rank(&self, e: &[usize]) -> Option<usize> {
        self.index.get(e).copied()
    }

    pub fn one<T: Real>(&self) -> Vec<Complex<T>> {
        let mut c = vec![czero::<T>(); self.len()];
        c[0] = cone();
        c
    }

    /// Multiplies `s` in place by the linear form c0 + Σ_k c[k] w_k.
    pub fn mul_linear<T: Real>(&self, s: &mut [Complex<T>], c0: Complex<T>, c: &[Complex<T>]) {
        debug_assert_eq!(c.len(), self.nvars);
        // Walk from the top degree down so lower coefficients are still the
        // old values when they are read.
        for i in (0..self.len()).rev() {
            let mut acc = s[i] * c0;
            for (k, ck) in c.iter().enumerate() {
                if let Some(j) = self.down[i][k] {
                    acc += s[j] * ck;
                }
            }
            s[i] = acc;
        }
    }

    /// Truncated product of two series.
    pub fn mul<T: Real>(&self, a: &[Complex<T>], b: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut out = vec![czero::<T>(); self.len()];
        let mut sum = vec![0usize; self.nvars];
        for (i, ei) in self.exps.iter().enumerate() {
            if a[i] == czero() {
                continue;
            }
            let di: usize = ei.iter().sum();
            for (j, ej) in self.exps.iter().enumerate() {
                let dj: usize = ej.iter().sum();
                if di + dj > self.degree {
                    // Graded order: every later exponent has at least this degree.
                    break;
                }
                if b[j] == czero() {
                    continue;
                }
                for k in 0..self.nvars {
                    sum[k] = ei[k] + ej[k];
                }
                let r = self.index[&sum];
                out[r] += a[i] * b[j];
            }
        }
        out
    }

    /// exp(p) for a series p with zero constant term.
    pub fn exp<T: Real>(&self, p: &[Complex<T>]) -> Vec<Complex<T>> {
        debug_assert!(p[0] == czero());
        let mut out = self.one::<T>();
        let mut term = self.one::<T>();
        for n in 1..=self.degree {
            term = self.mul(&term, p);
            let inv = T::one() / T::of_usize(n);
            for t in term.iter_mut() {
                *t *= inv;
            }
            for (o, t) in out.iter_mut().zip(&term) {
                *o += t;
            }
        }
        out
    }

    /// Integer power of a series.
    pub fn pow<T: Real>(&self, p: &[Complex<T>], n: usize) -> Vec<Complex<T>> {
        let mut out = self.one::<T>();
        for _ in 0..n {
            out = self.mul(&out, p);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cf(x: f64) -> Complex<f64> {
        Complex::new(x, 0.0)
    }

    #[test]
    fn binomial_expansion_univariate() {
        let b = SeriesBasis::new(1, 5).unwrap();
        let mut s = b.one::<f64>();
        for _ in 0..5 {
            b.mul_linear(&mut s, cf(1.0), &[cf(1.0)]);
        }
        let want = [1.0, 5.0, 10.0, 10.0, 5.0, 1.0];
        for (k, w) in want.iter().enumerate() {
            assert!((s[b.rank(&[k]).unwrap()].re - w).abs() < 1e-12);
        }
    }

    #[test]
    fn general_product_matches_linear_product() {
        let b = SeriesBasis::new(2, 4).unwrap();
        let mut lin = b.one::<f64>();
        b.mul_linear(&mut lin, cf(1.0), &[cf(2.0), cf(-1.0)]);
        let sq = b.mul(&lin, &lin);
        let mut direct = b.one::<f64>();
        b.mul_linear(&mut direct, cf(1.0), &[cf(2.0), cf(-1.0)]);
        b.mul_linear(&mut direct, cf(1.0), &[cf(2.0), cf(-1.0)]);
        for (x, y) in sq.iter().zip(&direct) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn exponential_of_linear_term() {
        let b = SeriesBasis::new(1, 8).unwrap();
        let mut p = vec![cf(0.0); b.len()];
        p[b.rank(&[1]).unwrap()] = cf(1.0);
        let e = b.exp(&p);
        let mut fact = 1.0;
        for k in 0..=8 {
            if k > 0 {
                fact *= k as f64;
            }
            assert!((e[b.rank(&[k]).unwrap()].re - 1.0 / fact).abs() < 1e-14);
        }
    }
}
