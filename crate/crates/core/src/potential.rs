//! Compactly supported perturbations `q(x) = Σ P_i(x) · B((x - c_i) / r_i)` built from
//! the standard bump `B(u) = exp(-1/(1 - u²))` on `|u| < 1`, and their jets.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::jet::Taylor;

/// Largest derivative order served by [`Potential::eval_jet`].
pub const DEFAULT_MAX_JET_ORDER: usize = 16;

/// Below this bump exponent the term is treated as exactly zero (double underflow).
const EXP_CUTOFF: f64 = -690.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpTerm {
    /// Coefficients `a0, a1, …` of `P(x) = Σ a_i x^i` (in the global variable `x`).
    pub poly: Vec<f64>,
    pub center: f64,
    pub radius: f64,
}

impl BumpTerm {
    fn taylor(&self, x: f64, order: usize) -> Option<Taylor> {
        let u = (x - self.center) / self.radius;
        if u.abs() >= 1.0 {
            return None;
        }
        let gap = 1.0 - u * u;
        if -1.0 / gap < EXP_CUTOFF {
            return None;
        }
        let u_jet = Taylor::affine(u, 1.0 / self.radius, order);
        let gap_jet = &Taylor::constant(1.0, order) - &(&u_jet * &u_jet);
        let bump = (-&gap_jet.recip()).exp();
        let p = Taylor::affine(x, 1.0, order).poly(&self.poly);
        Some(&p * &bump)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Derivatives at a point: `values[k] = f^(k)(point)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub point: f64,
    pub values: Vec<f64>,
}

impl Jet {
    pub fn order(&self) -> usize {
        self.values.len() - 1
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub terms: Vec<BumpTerm>,
}

impl Potential {
    pub fn new(terms: Vec<BumpTerm>) -> Result<Self> {
        let p = Self { terms };
        p.validate()?;
        Ok(p)
    }

    /// The unperturbed case `q ≡ 0`.
    pub fn zero() -> Self {
        Self::default()
    }

    /// The fixed reference perturbation `q_ref(x) = 0.25 · exp(-1/(1 - x²))` on `(-1, 1)`.
    pub fn reference() -> Self {
        Self { terms: vec![BumpTerm { poly: vec![0.25], center: 0.0, radius: 1.0 }] }
    }

    /// A single bump term with polynomial `poly`, centered at `center`.
    pub fn bump(poly: Vec<f64>, center: f64, radius: f64) -> Result<Self> {
        Self::new(vec![BumpTerm { poly, center, radius }])
    }

    pub fn validate(&self) -> Result<()> {
        for (i, t) in self.terms.iter().enumerate() {
            if !(t.radius > 0.0 && t.radius.is_finite()) {
                return Err(Error::InvalidPotential(format!(
                    "term {i}: radius must be positive and finite, got {}",
                    t.radius
                )));
            }
            if !t.center.is_finite() || t.poly.iter().any(|a| !a.is_finite()) {
                return Err(Error::InvalidPotential(format!("term {i}: non-finite parameter")));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self =
            serde_json::from_str(text).map_err(|e| Error::InvalidPotential(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("potential serializes")
    }

    /// Content hash (hex SHA-256 of the canonical JSON form).
    pub fn id(&self) -> String {
        hex_digest(self.to_json().as_bytes())
    }

    /// True when every term has an identically zero polynomial (or there are no terms).
    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.poly.iter().all(|&a| a == 0.0))
    }

    /// Smallest closed interval containing every term support; `None` for no terms.
    pub fn support(&self) -> Option<Interval> {
        self.terms
            .iter()
            .map(|t| Interval { lo: t.center - t.radius, hi: t.center + t.radius })
            .reduce(|a, b| Interval { lo: a.lo.min(b.lo), hi: a.hi.max(b.hi) })
    }

    /// Taylor coefficients of `q` at `x` up to `order` (no order cap).
    pub fn taylor(&self, x: f64, order: usize) -> Taylor {
        self.terms
            .iter()
            .filter_map(|t| t.taylor(x, order))
            .fold(Taylor::constant(0.0, order), |acc, t| &acc + &t)
    }

    pub fn value(&self, x: f64) -> f64 {
        self.taylor(x, 0).value()
    }

    pub fn eval_jet(&self, x: f64, order: usize) -> Result<Jet> {
        if order > DEFAULT_MAX_JET_ORDER {
            return Err(Error::JetOrderTooLarge { requested: order, max: DEFAULT_MAX_JET_ORDER });
        }
        Ok(Jet { point: x, values: self.taylor(x, order).derivatives() })
    }

    /// Jet of the full potential `v = x² + q`.
    pub fn v_jet(&self, x: f64, order: usize) -> Result<Jet> {
        let mut jet = self.eval_jet(x, order)?;
        jet.values[0] += x * x;
        if order >= 1 {
            jet.values[1] += 2.0 * x;
        }
        if order >= 2 {
            jet.values[2] += 2.0;
        }
        Ok(jet)
    }

    /// `sup |q|`, located by dense sampling followed by golden-section refinement.
    pub fn max_abs(&self) -> f64 {
        let Some(s) = self.support() else { return 0.0 };
        let samples = 20_001;
        let h = s.width() / (samples - 1) as f64;
        let abs_q = |x: f64| self.value(x).abs();
        let (mut best_x, mut best) = (s.lo, 0.0);
        let candidates = (0..samples)
            .map(|i| s.lo + i as f64 * h)
            .chain(self.terms.iter().map(|t| t.center));
        for x in candidates {
            let v = abs_q(x);
            if v > best {
                best = v;
                best_x = x;
            }
        }
        let (mut a, mut b) = ((best_x - h).max(s.lo), (best_x + h).min(s.hi));
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..80 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if abs_q(c) > abs_q(d) {
                b = d;
            } else {
                a = c;
            }
        }
        best.max(abs_q(0.5 * (a + b)))
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
