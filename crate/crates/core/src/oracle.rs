//! Closed forms for multinomial vector cascades.
//!
//! For a cascade with digit weights `p^{(j)}_i` and grid-aligned balls
//! every partition sum at depth `n` is the `n`-th power of
//! `Z(q) = Σ_i Π_j (p^{(j)}_i)^{q_j}`, so `Λ(q) = log_b Z(q)`.

use crate::measure::check_weight_rows;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MultinomialOracle {
    base: usize,
    weights: Vec<Vec<f64>>,
}

impl MultinomialOracle {
    pub fn new(base: usize, weights: Vec<Vec<f64>>) -> Result<Self> {
        if base < 2 || weights.is_empty() {
            return Err(Error::InvalidMeasure("oracle needs base ≥ 2 and k ≥ 1 rows".into()));
        }
        check_weight_rows(base, &weights)?;
        Ok(MultinomialOracle { base, weights })
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    // ln of the digit-i product, or None when it is 0.
    fn log_digit_term(&self, i: usize, q: &[f64]) -> Result<Option<f64>> {
        let mut acc = 0.0;
        for (row, &qj) in self.weights.iter().zip(q) {
            let p = row[i];
            if qj == 0.0 {
                continue;
            }
            if p == 0.0 {
                if qj < 0.0 {
                    return Err(Error::Domain(format!("zero weight at digit {i} raised to {qj}")));
                }
                return Ok(None);
            }
            acc += qj * p.ln();
        }
        Ok(Some(acc))
    }

    fn check(&self, q: &[f64]) -> Result<()> {
        if q.len() != self.k() {
            return Err(Error::Domain(format!("q has length {}, oracle has k = {}", q.len(), self.k())));
        }
        Ok(())
    }

    /// `ln Z(q)`.
    pub fn log_partition(&self, q: &[f64]) -> Result<f64> {
        self.check(q)?;
        let mut terms = Vec::with_capacity(self.base);
        for i in 0..self.base {
            if let Some(t) = self.log_digit_term(i, q)? {
                terms.push(t);
            }
        }
        let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Ok(max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln())
    }

    /// `Λ(q) = log_b Σ_i Π_j (p^{(j)}_i)^{q_j}`.
    pub fn lambda(&self, q: &[f64]) -> Result<f64> {
        Ok(self.log_partition(q)? / (self.base as f64).ln())
    }

    /// `α = −∇Λ(q)` and `f = ⟨α, q⟩ + Λ(q)`.
    pub fn spectrum_point(&self, q: &[f64]) -> Result<(Vec<f64>, f64)> {
        self.check(q)?;
        if self.weights.iter().flatten().any(|&p| p == 0.0) {
            return Err(Error::Domain("gradient undefined with a zero weight".into()));
        }
        let ln_b = (self.base as f64).ln();
        let logs: Vec<f64> =
            (0..self.base).map(|i| self.log_digit_term(i, q).map(|t| t.unwrap())).collect::<Result<_>>()?;
        let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
        let z: f64 = w.iter().sum();
        let alpha: Vec<f64> = self
            .weights
            .iter()
            .map(|row| -(0..self.base).map(|i| w[i] * row[i].ln() / ln_b).sum::<f64>() / z)
            .collect();
        let f = alpha.iter().zip(q).map(|(a, b)| a * b).sum::<f64>() + self.lambda(q)?;
        Ok((alpha, f))
    }

    /// `f(α) = inf_q α·q + Λ(q)` for scalar measures; `-∞` outside the
    /// closed range of `−Λ'`.
    pub fn legendre(&self, alpha: f64) -> Result<f64> {
        if self.k() != 1 {
            return Err(Error::Domain("the oracle Legendre transform is scalar only".into()));
        }
        let slope = |q: f64| -> Result<f64> { Ok(alpha - self.spectrum_point(&[q])?.0[0]) };
        let ln_b = (self.base as f64).ln();
        let logs: Vec<f64> = self.weights[0].iter().map(|p| -p.ln() / ln_b).collect();
        let a_min = logs.iter().cloned().fold(f64::INFINITY, f64::min);
        let a_max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let eps = 1e-12;
        if alpha < a_min - eps || alpha > a_max + eps {
            return Ok(f64::NEG_INFINITY);
        }
        if (a_max - a_min).abs() <= eps {
            return self.lambda(&[0.0]);
        }
        let count = |a: f64| logs.iter().filter(|&&x| (x - a).abs() <= eps).count() as f64;
        if alpha <= a_min + eps {
            return Ok(count(a_min).ln() / ln_b);
        }
        if alpha >= a_max - eps {
            return Ok(count(a_max).ln() / ln_b);
        }
        let (mut lo, mut hi) = (-1.0, 1.0);
        while slope(lo)? > 0.0 {
            lo *= 2.0;
        }
        while slope(hi)? < 0.0 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if slope(mid)? < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let q = 0.5 * (lo + hi);
        Ok(alpha * q + self.lambda(&[q])?)
    }
}

/// `Λ(q)` for the given oracle.
pub fn oracle_lambda(o: &MultinomialOracle, q: &[f64]) -> Result<f64> {
    o.lambda(q)
}

pub fn oracle_spectrum_point(o: &MultinomialOracle, q: &[f64]) -> Result<(Vec<f64>, f64)> {
    o.spectrum_point(q)
}
