//! Truncated series in `μ = λ^(−1/2)`: reversion of the `b`-expansion into the
//! `c`-expansion and the power expansion producing `d_j(s)`.
//!
//! Writing `λ = λ⁰(1 + u)` with `μ = (λ⁰)^(−1/2)`, the relation
//! `λ⁰ = λ + Σ_j b_j λ^(1/2−j)` becomes the fixed point
//! `u = −Σ_j b_j μ^(2j+1) (1 + u)^(1/2−j)`, and `c_j` is the coefficient of `μ^(j+2)` in `u`.

use std::ops::{Add, Mul, Neg, Sub};

use serde::Serialize;

use crate::error::{Error, Result};

/// Formal series `Σ_{k≤trunc} a_k μ^k`; keys above `trunc` are discarded by every operation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HalfPowerSeries {
    coeffs: Vec<f64>,
}

impl HalfPowerSeries {
    pub fn zero(trunc: usize) -> Self {
        Self { coeffs: vec![0.0; trunc + 1] }
    }

    pub fn one(trunc: usize) -> Self {
        Self::monomial(1.0, 0, trunc)
    }

    /// `a · μ^k` (zero if `k > trunc`).
    pub fn monomial(a: f64, k: usize, trunc: usize) -> Self {
        let mut s = Self::zero(trunc);
        if k <= trunc {
            s.coeffs[k] = a;
        }
        s
    }

    /// Series with the given leading coefficients, padded with zeros or cut to `trunc`.
    pub fn from_coeffs(mut coeffs: Vec<f64>, trunc: usize) -> Self {
        coeffs.resize(trunc + 1, 0.0);
        Self { coeffs }
    }

    pub fn trunc(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient at key `k` (zero beyond `trunc`).
    pub fn get(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, k: usize, value: f64) {
        if k <= self.trunc() {
            self.coeffs[k] = value;
        }
    }

    pub fn retruncate(&self, trunc: usize) -> Self {
        Self::from_coeffs(self.coeffs.clone(), trunc)
    }

    pub fn scale(&self, a: f64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| a * c).collect() }
    }

    /// Multiplication by `μ^k`.
    pub fn shift(&self, k: usize) -> Self {
        let t = self.trunc();
        let mut out = Self::zero(t);
        for i in 0..=t.saturating_sub(k) {
            if i + k <= t {
                out.coeffs[i + k] = self.coeffs[i];
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// `f^a` for real `a`, requiring a nonzero constant term (J. C. P. Miller recurrence).
    pub fn powf(&self, a: f64) -> Result<Self> {
        let f0 = self.coeffs[0];
        if f0 == 0.0 {
            return Err(Error::InvalidArgument("series power needs a nonzero constant term".into()));
        }
        let t = self.trunc();
        let f: Vec<f64> = self.coeffs.iter().map(|c| c / f0).collect();
        let mut g = vec![0.0; t + 1];
        g[0] = 1.0;
        for n in 1..=t {
            let nf = n as f64;
            let s: f64 = (1..=n).map(|k| ((a + 1.0) * k as f64 - nf) * f[k] * g[n - k]).sum();
            g[n] = s / nf;
        }
        let lead = f0.powf(a);
        Ok(Self { coeffs: g.into_iter().map(|c| c * lead).collect() })
    }
}

fn zip_len(a: &HalfPowerSeries, b: &HalfPowerSeries) -> usize {
    a.coeffs.len().min(b.coeffs.len())
}

impl Add for &HalfPowerSeries {
    type Output = HalfPowerSeries;
    fn add(self, rhs: &HalfPowerSeries) -> HalfPowerSeries {
        let n = zip_len(self, rhs);
        HalfPowerSeries { coeffs: (0..n).map(|k| self.coeffs[k] + rhs.coeffs[k]).collect() }
    }
}

impl Sub for &HalfPowerSeries {
    type Output = HalfPowerSeries;
    fn sub(self, rhs: &HalfPowerSeries) -> HalfPowerSeries {
        let n = zip_len(self, rhs);
        HalfPowerSeries { coeffs: (0..n).map(|k| self.coeffs[k] - rhs.coeffs[k]).collect() }
    }
}

impl Neg for &HalfPowerSeries {
    type Output = HalfPowerSeries;
    fn neg(self) -> HalfPowerSeries {
        self.scale(-1.0)
    }
}

impl Mul for &HalfPowerSeries {
    type Output = HalfPowerSeries;
    fn mul(self, rhs: &HalfPowerSeries) -> HalfPowerSeries {
        let n = zip_len(self, rhs);
        let coeffs = (0..n)
            .map(|k| (0..=k).map(|i| self.coeffs[i] * rhs.coeffs[k - i]).sum())
            .collect();
        HalfPowerSeries { coeffs }
    }
}

/// Right-hand side of the fixed point, `−Σ_j b_j μ^(2j+1) (1 + u)^(1/2−j)`, with `b[0] = b_1`.
fn reversion_map(b: &[f64], u: &HalfPowerSeries) -> Result<HalfPowerSeries> {
    let t = u.trunc();
    let base = &HalfPowerSeries::one(t) + u;
    let mut out = HalfPowerSeries::zero(t);
    for (i, &bj) in b.iter().enumerate() {
        let j = i + 1;
        if bj == 0.0 || 2 * j + 1 > t {
            continue;
        }
        let p = base.powf(0.5 - j as f64)?;
        out = &out - &p.shift(2 * j + 1).scale(bj);
    }
    Ok(out)
}

/// `c`-series from `b_1, …, b_J` (`b[0] = b_1`): `c_j` sits at key `j` for `j = 1..trunc`.
///
/// `trunc` may reach `2J + 1`; keys above `2J` are then computed with `b_{J+1} = 0`.
pub fn invert_expansion(b: &[f64], trunc: usize) -> Result<HalfPowerSeries> {
    let available = 2 * b.len() + 1;
    if trunc > available {
        return Err(Error::TruncationTooLarge { trunc, needed: trunc.div_ceil(2), available: b.len() });
    }
    let t = trunc + 2;
    let mut u = HalfPowerSeries::zero(t);
    let mut stable = false;
    for _ in 0..=trunc + 1 {
        let next = reversion_map(b, &u)?;
        if next == u {
            stable = true;
            break;
        }
        u = next;
    }
    if !stable {
        return Err(Error::ReversionStalled(trunc));
    }
    let mut c = HalfPowerSeries::zero(trunc);
    for j in 1..=trunc {
        c.set(j, u.get(j + 2));
    }
    let residual = compose_check(b, &c, trunc)?;
    let scale = 1.0 + c.max_abs() + b.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if residual > 1e-11 * scale.powi(3) {
        return Err(Error::ReversionInconsistent(residual));
    }
    Ok(c)
}

/// Substitutes `λ = λ⁰ + Σ c_j (λ⁰)^(−j/2)` into `λ + Σ b_j λ^(1/2−j) − λ⁰` and returns
/// the largest coefficient magnitude among keys `0..=trunc` (in powers of `(λ⁰)^(−1/2)`).
pub fn compose_check(b: &[f64], c: &HalfPowerSeries, trunc: usize) -> Result<f64> {
    let t = trunc + 2;
    let mut u = HalfPowerSeries::zero(t);
    for j in 1..=trunc {
        u.set(j + 2, c.get(j));
    }
    // λ⁰ [u + Σ b_j μ^(2j+1) (1+u)^(1/2−j)]: key m of the bracket is key m−2 of the result
    let bracket = &u - &reversion_map(b, &u)?;
    Ok(bracket.coeffs().iter().fold(0.0f64, |m, x| m.max(x.abs())))
}

/// Residuals of the whole-power identities: `(c₂, c₁² + 2c₄, c₆ + c₂² + 2c₁c₃)`.
pub fn wholepower_check(c: &HalfPowerSeries) -> Result<[f64; 3]> {
    if c.trunc() < 6 {
        return Err(Error::InvalidArgument(format!(
            "whole-power identities need c through key 6, have {}",
            c.trunc()
        )));
    }
    let g = |k| c.get(k);
    Ok([g(2), g(1) * g(1) + 2.0 * g(4), g(6) + g(2) * g(2) + 2.0 * g(1) * g(3)])
}

/// `d_j(s)` for `j = 0..=trunc`: coefficients of `λ^(−s) = Σ_j d_j(s) (λ⁰)^(−s−j/2)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DTable {
    pub s: f64,
    pub values: Vec<f64>,
}

impl DTable {
    pub fn get(&self, j: usize) -> f64 {
        self.values.get(j).copied().unwrap_or(0.0)
    }

    pub fn trunc(&self) -> usize {
        self.values.len() - 1
    }
}

/// Expands `(1 + Σ_j c_j μ^(j+2))^(−s)` through `μ^trunc`.
pub fn d_table(s: f64, c: &HalfPowerSeries, trunc: usize) -> DTable {
    let mut base = HalfPowerSeries::one(trunc);
    for j in 1..=trunc.saturating_sub(2) {
        base.set(j + 2, c.get(j));
    }
    let mut values = base
        .powf(-s)
        .expect("constant term is one")
        .coeffs()
        .to_vec();
    values[0] = 1.0;
    for v in values.iter_mut().skip(1).take(2) {
        *v = 0.0;
    }
    DTable { s, values }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unperturbed_reversion() {
        let c = invert_expansion(&[0.0; 4], 9).unwrap();
        assert!(c.coeffs().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn low_order_table() {
        let (b1, b2, b3, b4) = (1.0, 2.0, 3.0, 5.0);
        let c = invert_expansion(&[b1, b2, b3, b4], 7).unwrap();
        let expected = [
            0.0,
            -b1,
            0.0,
            -b2,
            -0.5 * b1 * b1,
            -b3,
            -2.0 * b1 * b2,
            -5.0 * b1 * b1 * b1 / 8.0 - b4,
        ];
        for (k, e) in expected.iter().enumerate() {
            assert!((c.get(k) - e).abs() < 1e-13, "key {k}: {} vs {e}", c.get(k));
        }
    }

    #[test]
    fn truncation_limit() {
        assert!(invert_expansion(&[1.0, 1.0], 5).is_ok());
        assert!(matches!(invert_expansion(&[1.0, 1.0], 6), Err(Error::TruncationTooLarge { .. })));
    }

    #[test]
    fn compose_sensitivity() {
        let b = [0.3, -0.2, 0.1];
        let c = invert_expansion(&b, 7).unwrap();
        assert!(compose_check(&b, &c, 7).unwrap() < 1e-13);
        let mut bad = c.clone();
        bad.set(1, c.get(1) + 1e-3);
        assert!(compose_check(&b, &bad, 7).unwrap() >= 1e-3);
        assert_eq!(compose_check(&[], &HalfPowerSeries::zero(5), 5).unwrap(), 0.0);
    }

    #[test]
    fn d_table_low_order() {
        let c = invert_expansion(&[0.7, -0.4, 0.2], 7).unwrap();
        let s = 1.3;
        let d = d_table(s, &c, 8);
        assert_eq!(&d.values[..3], &[1.0, 0.0, 0.0]);
        assert!((d.get(3) + s * c.get(1)).abs() < 1e-15);
        assert!((d.get(4) + s * c.get(2)).abs() < 1e-15);
        assert!((d.get(5) + s * c.get(3)).abs() < 1e-15);
        let d6 = -s * c.get(4) + 0.5 * s * (s + 1.0) * c.get(1).powi(2);
        assert!((d.get(6) - d6).abs() < 1e-14);
        let zero = d_table(0.0, &c, 8);
        assert!(zero.values[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn powf_matches_square() {
        let f = HalfPowerSeries::from_coeffs(vec![2.0, 1.0, -0.5, 0.25], 5);
        let sq = f.powf(2.0).unwrap();
        let direct = &f * &f;
        for k in 0..=5 {
            assert!((sq.get(k) - direct.get(k)).abs() < 1e-14);
        }
    }
}
