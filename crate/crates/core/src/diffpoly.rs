//! Exact differential polynomials in an abstract function `v` and its derivatives.
//!
//! A [`DiffPoly`] is a finite sum of monomials `c · z^m · v^(k1) · v^(k2) · …` with
//! big-rational coefficients, where `z = y - x` is the displacement used while the
//! operator `A = -d²/dy² + v(y)` acts on `|x - y|^{2k} = z^{2k}`. Restricting to
//! `y = x` drops every monomial with a positive `z` power, which leaves the local heat
//! invariants `a_j[v]` as polynomials in `v, v', v'', …` only.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Largest invariant order handed out by the CLI and the coefficient pipeline.
pub const DEFAULT_MAX_ORDER: usize = 8;

/// One term `coeff · z^z_power · Π v^(factors[i])`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiffMono {
    pub coeff: Rational,
    pub z_power: u32,
    /// Derivative orders of the `v` factors, sorted ascending.
    pub factors: Vec<u32>,
}

impl DiffMono {
    pub fn degree(&self) -> usize {
        self.factors.len() + self.z_power as usize
    }

    /// Scaling weight with `v^(k)` counted as `k + 2`; `z` carries weight `-1`.
    pub fn weight(&self) -> i64 {
        self.factors.iter().map(|&k| k as i64 + 2).sum::<i64>() - self.z_power as i64
    }

    fn key(&self) -> (u32, Vec<u32>) {
        (self.z_power, self.factors.clone())
    }
}

fn canonical_cmp(a: &(u32, Vec<u32>), b: &(u32, Vec<u32>)) -> Ordering {
    let deg = |k: &(u32, Vec<u32>)| k.0 as usize + k.1.len();
    (Reverse(deg(a)), a.0, &a.1).cmp(&(Reverse(deg(b)), b.0, &b.1))
}

/// Canonical sum of [`DiffMono`]s: merged keys, no zero coefficients, ordered by
/// total degree (descending), then `z` power, then the factor list.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DiffPoly {
    monos: Vec<DiffMono>,
}

impl DiffPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        Self::from_terms([(c, 0, Vec::new())])
    }

    /// The single factor `v^(k)`.
    pub fn v(k: u32) -> Self {
        Self::from_terms([(Rational::one(), 0, vec![k])])
    }

    /// The displacement power `z^m`.
    pub fn z(m: u32) -> Self {
        Self::from_terms([(Rational::one(), m, Vec::new())])
    }

    /// Builds a canonical polynomial from raw `(coeff, z_power, factors)` triples.
    pub fn from_terms<I>(terms: I) -> Self
    where
        I: IntoIterator<Item = (Rational, u32, Vec<u32>)>,
    {
        let mut acc: HashMap<(u32, Vec<u32>), Rational> = HashMap::new();
        for (c, z, mut f) in terms {
            if c.is_zero() {
                continue;
            }
            f.sort_unstable();
            *acc.entry((z, f)).or_insert_with(Rational::zero) += c;
        }
        Self::from_map(acc)
    }

    fn from_map(acc: HashMap<(u32, Vec<u32>), Rational>) -> Self {
        let mut entries: Vec<_> = acc.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        entries.sort_by(|a, b| canonical_cmp(&a.0, &b.0));
        let monos = entries
            .into_iter()
            .map(|((z_power, factors), coeff)| DiffMono { coeff, z_power, factors })
            .collect();
        Self { monos }
    }

    pub fn monos(&self) -> &[DiffMono] {
        &self.monos
    }

    pub fn is_zero(&self) -> bool {
        self.monos.is_empty()
    }

    pub fn len(&self) -> usize {
        self.monos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monos.is_empty()
    }

    /// Coefficient of the monomial with the given key (zero if absent).
    pub fn coeff(&self, z_power: u32, factors: &[u32]) -> Rational {
        let mut f = factors.to_vec();
        f.sort_unstable();
        self.monos
            .iter()
            .find(|m| m.z_power == z_power && m.factors == f)
            .map(|m| m.coeff.clone())
            .unwrap_or_else(Rational::zero)
    }

    pub fn is_z_free(&self) -> bool {
        self.monos.iter().all(|m| m.z_power == 0)
    }

    /// Highest derivative order of `v` appearing anywhere, `None` for constants.
    pub fn max_derivative(&self) -> Option<u32> {
        self.monos.iter().flat_map(|m| m.factors.iter().copied()).max()
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self {
            monos: self
                .monos
                .iter()
                .map(|m| DiffMono { coeff: &m.coeff * c, ..m.clone() })
                .collect(),
        }
    }

    /// Keeps only the `z^0` part, i.e. evaluates at `y = x`.
    pub fn restrict_diagonal(&self) -> Self {
        self.filter_z(0)
    }

    fn filter_z(&self, max_z: u32) -> Self {
        Self {
            monos: self.monos.iter().filter(|m| m.z_power <= max_z).cloned().collect(),
        }
    }

    fn accumulate_into(&self, acc: &mut HashMap<(u32, Vec<u32>), Rational>, sign: bool) {
        for m in &self.monos {
            let e = acc.entry(m.key()).or_insert_with(Rational::zero);
            if sign {
                *e += &m.coeff;
            } else {
                *e -= &m.coeff;
            }
        }
    }

    /// Derivative in `y`: `z^m -> m z^(m-1)` and `v^(k) -> v^(k+1)`, product rule.
    pub fn d_dy(&self) -> Self {
        let mut acc: HashMap<(u32, Vec<u32>), Rational> = HashMap::new();
        for m in &self.monos {
            if m.z_power > 0 {
                let c = &m.coeff * BigInt::from(m.z_power);
                *acc.entry((m.z_power - 1, m.factors.clone())).or_insert_with(Rational::zero) += c;
            }
            for i in 0..m.factors.len() {
                // equal neighbours produce the same term; handle each distinct order once
                if i > 0 && m.factors[i] == m.factors[i - 1] {
                    continue;
                }
                let mult = m.factors.iter().filter(|&&k| k == m.factors[i]).count();
                let mut f = m.factors.clone();
                f[i] += 1;
                f.sort_unstable();
                let c = &m.coeff * BigInt::from(mult);
                *acc.entry((m.z_power, f)).or_insert_with(Rational::zero) += c;
            }
        }
        Self::from_map(acc)
    }

    /// One application of `A = -d²/dy² + v`.
    pub fn apply_a(&self) -> Self {
        let mut acc: HashMap<(u32, Vec<u32>), Rational> = HashMap::new();
        for m in &self.monos {
            let mut f = m.factors.clone();
            f.push(0);
            f.sort_unstable();
            *acc.entry((m.z_power, f)).or_insert_with(Rational::zero) += &m.coeff;
        }
        self.d_dy().d_dy().accumulate_into(&mut acc, false);
        Self::from_map(acc)
    }

    /// Compiles the polynomial to floating point for repeated evaluation.
    ///
    /// Fails if any monomial still carries a `z` power.
    pub fn to_numeric(&self) -> Result<NumericPoly> {
        if !self.is_z_free() {
            return Err(Error::InvalidArgument(
                "numeric evaluation needs a z-free polynomial".into(),
            ));
        }
        let terms = self
            .monos
            .iter()
            .map(|m| (m.coeff.to_f64().unwrap_or(f64::NAN), m.factors.clone()))
            .collect();
        Ok(NumericPoly { terms, jet_len: self.max_derivative().map_or(0, |k| k as usize + 1) })
    }

    pub fn render(&self, format: RenderFormat) -> String {
        if self.monos.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (i, m) in self.monos.iter().enumerate() {
            let neg = m.coeff.is_negative();
            match (i, neg) {
                (0, true) => out.push('-'),
                (0, false) => {}
                (_, true) => out.push_str(" - "),
                (_, false) => out.push_str(" + "),
            }
            let mag = m.coeff.abs();
            let body = render_factors(m, format);
            if body.is_empty() {
                out.push_str(&render_rational(&mag, format));
            } else if mag.is_one() {
                out.push_str(&body);
            } else {
                let _ = write!(out, "{} {}", render_rational(&mag, format), body);
            }
        }
        out
    }
}

fn render_rational(r: &Rational, format: RenderFormat) -> String {
    if r.is_integer() {
        return r.numer().to_string();
    }
    match format {
        RenderFormat::Plain => format!("{}/{}", r.numer(), r.denom()),
        RenderFormat::Latex => format!("\\frac{{{}}}{{{}}}", r.numer(), r.denom()),
    }
}

fn render_factors(m: &DiffMono, format: RenderFormat) -> String {
    let mut parts = Vec::new();
    if m.z_power > 0 {
        parts.push(match (m.z_power, format) {
            (1, _) => "z".to_string(),
            (p, RenderFormat::Plain) => format!("z^{p}"),
            (p, RenderFormat::Latex) => format!("z^{{{p}}}"),
        });
    }
    let mut grouped: BTreeMap<u32, u32> = BTreeMap::new();
    for &k in &m.factors {
        *grouped.entry(k).or_default() += 1;
    }
    for (k, p) in grouped {
        parts.push(render_v(k, p, format));
    }
    parts.join(" ")
}

fn render_v(k: u32, power: u32, format: RenderFormat) -> String {
    let base = match (k, format) {
        (0..=3, _) => format!("v{}", "'".repeat(k as usize)),
        (_, RenderFormat::Plain) => format!("v^({k})"),
        (_, RenderFormat::Latex) => format!("v^{{({k})}}"),
    };
    match (power, format) {
        (1, _) => base,
        (p, RenderFormat::Plain) => format!("{base}^{p}"),
        (p, RenderFormat::Latex) if k == 0 => format!("{base}^{{{p}}}"),
        (p, RenderFormat::Latex) => format!("({base})^{{{p}}}"),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RenderFormat {
    Plain,
    Latex,
}

impl std::fmt::Display for DiffPoly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.render(RenderFormat::Plain))
    }
}

impl Add for &DiffPoly {
    type Output = DiffPoly;
    fn add(self, rhs: &DiffPoly) -> DiffPoly {
        let mut acc = HashMap::new();
        self.accumulate_into(&mut acc, true);
        rhs.accumulate_into(&mut acc, true);
        DiffPoly::from_map(acc)
    }
}

impl Sub for &DiffPoly {
    type Output = DiffPoly;
    fn sub(self, rhs: &DiffPoly) -> DiffPoly {
        let mut acc = HashMap::new();
        self.accumulate_into(&mut acc, true);
        rhs.accumulate_into(&mut acc, false);
        DiffPoly::from_map(acc)
    }
}

impl Neg for &DiffPoly {
    type Output = DiffPoly;
    fn neg(self) -> DiffPoly {
        self.scale(&-Rational::one())
    }
}

impl Mul for &DiffPoly {
    type Output = DiffPoly;
    fn mul(self, rhs: &DiffPoly) -> DiffPoly {
        mono_mul(self, rhs)
    }
}

/// Ring product: `z` powers add, factor multisets merge.
pub fn mono_mul(p: &DiffPoly, q: &DiffPoly) -> DiffPoly {
    let mut acc: HashMap<(u32, Vec<u32>), Rational> = HashMap::new();
    for a in &p.monos {
        for b in &q.monos {
            let mut f = Vec::with_capacity(a.factors.len() + b.factors.len());
            f.extend_from_slice(&a.factors);
            f.extend_from_slice(&b.factors);
            f.sort_unstable();
            *acc.entry((a.z_power + b.z_power, f)).or_insert_with(Rational::zero) +=
                &a.coeff * &b.coeff;
        }
    }
    DiffPoly::from_map(acc)
}

pub fn d_dy(p: &DiffPoly) -> DiffPoly {
    p.d_dy()
}

pub fn apply_a(p: &DiffPoly) -> DiffPoly {
    p.apply_a()
}

fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// `Γ(n + 1/2) / √π = (2n)! / (4^n n!)`.
pub fn gamma_half_over_sqrt_pi(n: u64) -> Rational {
    Rational::new(factorial(2 * n), BigInt::from(4).pow(n as u32) * factorial(n))
}

/// Exact `Γ(j + 1/2) / Γ(k + 3/2)`; the `√π` factors cancel.
pub fn gamma_half_ratio(j: u64, k: u64) -> Rational {
    gamma_half_over_sqrt_pi(j) / gamma_half_over_sqrt_pi(k + 1)
}

/// `(-1)^j Γ(j + 3/2) / (4^k k! (k+j)! (j-k)! Γ(k + 3/2))`, the weight of the `k`-th summand of `a_j`.
fn invariant_weight(j: u64, k: u64) -> Rational {
    let sign = if j.is_multiple_of(2) { Rational::one() } else { -Rational::one() };
    let denom = BigInt::from(4).pow(k as u32) * factorial(k) * factorial(k + j) * factorial(j - k);
    sign * gamma_half_ratio(j + 1, k) / Rational::from_integer(denom)
}

fn compute_heat_invariant(j: usize) -> DiffPoly {
    if j == 0 {
        return DiffPoly::one();
    }
    let j = j as u64;
    let mut total = DiffPoly::zero();
    for k in 0..=j {
        let applications = (k + j) as u32;
        let mut p = DiffPoly::z(2 * k as u32);
        for done in 1..=applications {
            p = p.apply_a();
            // each remaining application lowers the z power by at most two
            let remaining = applications - done;
            p = p.filter_z(2 * remaining);
        }
        let term = p.restrict_diagonal().scale(&invariant_weight(j, k));
        total = &total + &term;
    }
    total
}

fn cache() -> &'static Mutex<HashMap<usize, DiffPoly>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, DiffPoly>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Local heat invariant `a_j[v]`, memoized.
pub fn heat_invariant(j: usize) -> DiffPoly {
    if let Some(p) = cache().lock().expect("heat invariant cache poisoned").get(&j) {
        return p.clone();
    }
    let p = compute_heat_invariant(j);
    cache()
        .lock()
        .expect("heat invariant cache poisoned")
        .insert(j, p.clone());
    p
}

/// Floating-point image of a z-free [`DiffPoly`].
#[derive(Clone, Debug)]
pub struct NumericPoly {
    terms: Vec<(f64, Vec<u32>)>,
    jet_len: usize,
}

impl NumericPoly {
    /// Minimum jet length (`max derivative + 1`) accepted by [`NumericPoly::eval`].
    pub fn jet_len(&self) -> usize {
        self.jet_len
    }

    /// Substitutes `jet[k]` for `v^(k)`.
    pub fn eval(&self, jet: &[f64]) -> Result<f64> {
        if jet.len() < self.jet_len {
            return Err(Error::InsufficientJetOrder { needed: self.jet_len, got: jet.len() });
        }
        Ok(self
            .terms
            .iter()
            .map(|(c, f)| f.iter().fold(*c, |acc, &k| acc * jet[k as usize]))
            .sum())
    }
}

pub fn eval_diffpoly(p: &DiffPoly, jet: &[f64]) -> Result<f64> {
    p.to_numeric()?.eval(jet)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn ring_examples() {
        let v = DiffPoly::v(0);
        assert_eq!(mono_mul(&v, &v), DiffPoly::from_terms([(r(1, 1), 0, vec![0, 0])]));
        assert_eq!(
            mono_mul(&DiffPoly::z(2), &DiffPoly::v(1)),
            DiffPoly::from_terms([(r(1, 1), 2, vec![1])])
        );
        let lhs = &v.scale(&r(2, 1)) + &DiffPoly::z(1);
        let prod = mono_mul(&lhs, &DiffPoly::v(1).scale(&r(3, 1)));
        let want = DiffPoly::from_terms([(r(6, 1), 0, vec![0, 1]), (r(3, 1), 1, vec![1])]);
        assert_eq!(prod, want);
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(DiffPoly::z(2).d_dy(), DiffPoly::z(1).scale(&r(2, 1)));
        assert_eq!(DiffPoly::v(0).d_dy(), DiffPoly::v(1));
        let p = mono_mul(&DiffPoly::z(1), &DiffPoly::v(2));
        let want = &DiffPoly::v(2) + &mono_mul(&DiffPoly::z(1), &DiffPoly::v(3));
        assert_eq!(p.d_dy(), want);
        // repeated factors: d(v^2) = 2 v v'
        let v2 = mono_mul(&DiffPoly::v(0), &DiffPoly::v(0));
        assert_eq!(v2.d_dy(), DiffPoly::from_terms([(r(2, 1), 0, vec![0, 1])]));
    }

    #[test]
    fn operator_examples() {
        assert_eq!(DiffPoly::one().apply_a(), DiffPoly::v(0));
        let want = DiffPoly::from_terms([(r(1, 1), 2, vec![0]), (r(-2, 1), 0, vec![])]);
        assert_eq!(DiffPoly::z(2).apply_a(), want);
        let want = DiffPoly::from_terms([(r(1, 1), 0, vec![0, 0]), (r(-1, 1), 0, vec![2])]);
        assert_eq!(DiffPoly::v(0).apply_a(), want);
    }

    #[test]
    fn gamma_ratios() {
        assert_eq!(gamma_half_ratio(1, 0), r(1, 1));
        assert_eq!(gamma_half_ratio(2, 0), r(3, 2));
        assert_eq!(gamma_half_ratio(3, 1), r(5, 2));
    }

    #[test]
    fn first_invariants() {
        assert_eq!(heat_invariant(0), DiffPoly::one());
        assert_eq!(heat_invariant(1), DiffPoly::v(0).scale(&r(-1, 1)));
        let a2 = DiffPoly::from_terms([(r(1, 2), 0, vec![0, 0]), (r(-1, 6), 0, vec![2])]);
        assert_eq!(heat_invariant(2), a2);
    }

    #[test]
    fn eval_examples() {
        assert_eq!(eval_diffpoly(&heat_invariant(1), &[3.0, 0.5]).unwrap(), -3.0);
        let a2 = eval_diffpoly(&heat_invariant(2), &[2.0, 0.0, 6.0]).unwrap();
        assert!((a2 - 1.0).abs() < 1e-15);
        let a3 = eval_diffpoly(&heat_invariant(3), &[1.0, 1.0, 1.0, 0.0, 0.0]).unwrap();
        assert!((a3 - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn eval_rejects_short_jet() {
        let err = eval_diffpoly(&heat_invariant(2), &[1.0, 2.0]).unwrap_err();
        assert_eq!(err, Error::InsufficientJetOrder { needed: 3, got: 2 });
        assert!(eval_diffpoly(&DiffPoly::z(1), &[1.0]).is_err());
    }

    #[test]
    fn render_examples() {
        assert_eq!(heat_invariant(1).render(RenderFormat::Plain), "-v");
        assert_eq!(heat_invariant(2).render(RenderFormat::Plain), "1/2 v^2 - 1/6 v''");
        assert_eq!(DiffPoly::one().render(RenderFormat::Plain), "1");
        assert_eq!(
            heat_invariant(2).render(RenderFormat::Latex),
            "\\frac{1}{2} v^{2} - \\frac{1}{6} v''"
        );
        assert_eq!(DiffPoly::zero().render(RenderFormat::Plain), "0");
    }
}
