//! Dense univariate polynomials, constant term first.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Self { coeffs: vec![c] }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `x^k`, zero past the stored degree.
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn set_coeff(&mut self, k: usize, value: f64) {
        if self.coeffs.len() <= k {
            self.coeffs.resize(k + 1, 0.0);
        }
        self.coeffs[k] = value;
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Poly {
        Poly {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }
}

impl From<Vec<f64>> for Poly {
    fn from(coeffs: Vec<f64>) -> Self {
        Self::new(coeffs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horner_and_derivative() {
        let p = Poly::new(vec![1.0, -2.0, 0.0, 3.0]);
        assert_eq!(p.eval(2.0), 1.0 - 4.0 + 24.0);
        let dp = p.derivative();
        assert_eq!(dp.coeffs(), &[-2.0, 0.0, 9.0]);
        assert_eq!(dp.derivative().coeffs(), &[0.0, 18.0]);
        assert_eq!(Poly::default().eval(3.0), 0.0);
        assert_eq!(Poly::constant(2.5).derivative().eval(1.0), 0.0);
    }

    #[test]
    fn set_coeff_extends() {
        let mut p = Poly::new(vec![0.0]);
        p.set_coeff(2, 4.0);
        assert_eq!(p.coeffs(), &[0.0, 0.0, 4.0]);
        assert_eq!(p.coeff(7), 0.0);
    }
}
