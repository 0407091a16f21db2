//! Truncated Taylor series ("jets") in one variable.
//!
//! A [`Taylor`] of order `n` stores `f(x0 + h) = Σ_{k≤n} c_k h^k` with `c_k = f^(k)(x0)/k!`.
//! All operations truncate at the common order of their operands.

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, Debug, PartialEq)]
pub struct Taylor {
    coeffs: Vec<f64>,
}

impl Taylor {
    pub fn constant(c: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = c;
        Self { coeffs }
    }

    /// `a + b·h`, the jet of an affine map.
    pub fn affine(a: f64, b: f64, order: usize) -> Self {
        let mut t = Self::constant(a, order);
        if order >= 1 {
            t.coeffs[1] = b;
        }
        t
    }

    pub fn from_coeffs(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "a jet needs at least one coefficient");
        Self { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Derivatives `f^(k)(x0)`, i.e. the coefficients scaled by `k!`.
    pub fn derivatives(&self) -> Vec<f64> {
        let mut fact = 1.0;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| {
                if k > 0 {
                    fact *= k as f64;
                }
                c * fact
            })
            .collect()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn recip(&self) -> Self {
        let f = &self.coeffs;
        let mut g = vec![0.0; f.len()];
        g[0] = 1.0 / f[0];
        for k in 1..f.len() {
            let s: f64 = (1..=k).map(|i| f[i] * g[k - i]).sum();
            g[k] = -s * g[0];
        }
        Self { coeffs: g }
    }

    pub fn exp(&self) -> Self {
        let f = &self.coeffs;
        let mut e = vec![0.0; f.len()];
        e[0] = f[0].exp();
        for k in 1..f.len() {
            let s: f64 = (1..=k).map(|i| i as f64 * f[i] * e[k - i]).sum();
            e[k] = s / k as f64;
        }
        Self { coeffs: e }
    }

    /// Polynomial `Σ p_i X^i` evaluated on this jet (Horner).
    pub fn poly(&self, p: &[f64]) -> Self {
        let mut acc = Self::constant(0.0, self.order());
        for &c in p.iter().rev() {
            acc = &acc * self;
            acc.coeffs[0] += c;
        }
        acc
    }
}

fn common_len(a: &Taylor, b: &Taylor) -> usize {
    a.coeffs.len().min(b.coeffs.len())
}

impl Add for &Taylor {
    type Output = Taylor;
    fn add(self, rhs: &Taylor) -> Taylor {
        let n = common_len(self, rhs);
        Taylor { coeffs: (0..n).map(|k| self.coeffs[k] + rhs.coeffs[k]).collect() }
    }
}

impl Sub for &Taylor {
    type Output = Taylor;
    fn sub(self, rhs: &Taylor) -> Taylor {
        let n = common_len(self, rhs);
        Taylor { coeffs: (0..n).map(|k| self.coeffs[k] - rhs.coeffs[k]).collect() }
    }
}

impl Neg for &Taylor {
    type Output = Taylor;
    fn neg(self) -> Taylor {
        self.scale(-1.0)
    }
}

impl Mul for &Taylor {
    type Output = Taylor;
    fn mul(self, rhs: &Taylor) -> Taylor {
        let n = common_len(self, rhs);
        let coeffs = (0..n)
            .map(|k| (0..=k).map(|i| self.coeffs[i] * rhs.coeffs[k - i]).sum())
            .collect();
        Taylor { coeffs }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_of_identity() {
        let x = Taylor::affine(0.0, 1.0, 6);
        let e = x.exp();
        let mut fact = 1.0;
        for (k, c) in e.coeffs().iter().enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            assert!((c - 1.0 / fact).abs() < 1e-15);
        }
    }

    #[test]
    fn recip_times_self_is_one() {
        let f = Taylor::from_coeffs(vec![2.0, -1.0, 0.5, 3.0, 0.25]);
        let g = &f * &f.recip();
        assert!((g.value() - 1.0).abs() < 1e-15);
        for c in &g.coeffs()[1..] {
            assert!(c.abs() < 1e-14);
        }
    }

    #[test]
    fn polynomial_jet_derivatives() {
        // p(x) = 1 + 2x + 3x^2 at x0 = 2: p = 17, p' = 14, p'' = 6
        let x = Taylor::affine(2.0, 1.0, 3);
        let d = x.poly(&[1.0, 2.0, 3.0]).derivatives();
        assert_eq!(d, vec![17.0, 14.0, 6.0, 0.0]);
    }
}
