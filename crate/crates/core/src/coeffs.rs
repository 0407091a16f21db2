//! Integrated heat invariants `I_j = ∫(a_j[x² + q] − a_j[x²]) dx` and the
//! coefficients `b_j = I_j / (√π Γ(3/2 − j))`.

use std::cell::RefCell;

use num_traits::{One, ToPrimitive};
use serde::Serialize;

use crate::diffpoly::{heat_invariant, NumericPoly, Rational};
use crate::error::{Error, Result};
use crate::potential::{Potential, DEFAULT_MAX_JET_ORDER};
use crate::quadrature::{integrate_adaptive, AdaptiveOptions, GaussLegendre};

/// Default number of retained `b_j`.
pub const DEFAULT_J: usize = 6;

/// Gauss–Legendre nodes per panel.
pub const NODES_PER_PANEL: usize = 20;

/// `a_j[x² + q] − a_j[x²]` as a function of `x`, with the invariant compiled once.
pub struct IntegrandDelta<'a> {
    j: usize,
    q: &'a Potential,
    poly: NumericPoly,
}

impl<'a> IntegrandDelta<'a> {
    pub fn new(j: usize, q: &'a Potential) -> Result<Self> {
        if j == 0 {
            return Err(Error::InvalidArgument("integrand needs j >= 1".into()));
        }
        if 2 * j > DEFAULT_MAX_JET_ORDER {
            return Err(Error::JetOrderTooLarge { requested: 2 * j, max: DEFAULT_MAX_JET_ORDER });
        }
        let poly = heat_invariant(j).to_numeric()?;
        Ok(Self { j, q, poly })
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        match self.q.support() {
            Some(s) if s.contains(x) => {}
            _ => return Ok(0.0),
        }
        let order = 2 * self.j;
        let full = self.q.v_jet(x, order)?;
        let free = Potential::zero().v_jet(x, order)?;
        Ok(self.poly.eval(&full.values)? - self.poly.eval(&free.values)?)
    }
}

pub fn integrand_delta(j: usize, q: &Potential, x: f64) -> Result<f64> {
    IntegrandDelta::new(j, q)?.eval(x)
}

/// Rational `r_j` with `Γ(3/2 − j) = √π · r_j`.
pub fn gamma_half_rational(j: usize) -> Rational {
    // Γ(x − 1) = Γ(x) / (x − 1), starting from Γ(1/2) = √π
    let mut r = Rational::one();
    for i in 1..j {
        let x_minus_one = Rational::new(1.into(), 2.into()) - Rational::from_integer((i as i64).into());
        r /= x_minus_one;
    }
    r
}

/// `(√π Γ(3/2 − j))^(−1) = 1 / (π r_j)`.
pub fn gamma_prefactor(j: usize) -> f64 {
    let r = gamma_half_rational(j).to_f64().expect("finite rational");
    1.0 / (std::f64::consts::PI * r)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntegralValue {
    pub value: f64,
    pub err: f64,
    pub panels: usize,
    pub converged: bool,
}

/// `I_j` by adaptive composite Gauss–Legendre over the support of `q`.
pub fn integral(j: usize, q: &Potential, opts: &AdaptiveOptions) -> Result<IntegralValue> {
    let Some(support) = q.support() else {
        return Ok(IntegralValue { value: 0.0, err: 0.0, panels: 0, converged: true });
    };
    let f = IntegrandDelta::new(j, q)?;
    let rule = GaussLegendre::new(NODES_PER_PANEL);
    let failure = RefCell::new(None);
    let r = integrate_adaptive(
        &rule,
        |x| match f.eval(x) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        },
        support.lo,
        support.hi,
        opts,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(IntegralValue { value: r.value, err: r.error, panels: r.panels, converged: r.converged })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BValue {
    pub j: usize,
    pub b: f64,
    pub integral: f64,
    pub err: f64,
    pub converged: bool,
}

pub fn b_coeff(j: usize, q: &Potential) -> Result<BValue> {
    let i = integral(j, q, &AdaptiveOptions::default())?;
    let pre = gamma_prefactor(j);
    Ok(BValue { j, b: pre * i.value, integral: i.value, err: pre.abs() * i.err, converged: i.converged })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuadratureMeta {
    pub panels: Vec<usize>,
    pub nodes_per_panel: usize,
    pub rel_tol: f64,
}

/// `b_1..b_J` with their integrals and quadrature error estimates (index `j − 1`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BCoeffs {
    pub values: Vec<f64>,
    pub integrals: Vec<f64>,
    pub errors: Vec<f64>,
    pub converged: Vec<bool>,
    pub j_max: usize,
    pub potential_id: String,
    pub quadrature: QuadratureMeta,
}

impl BCoeffs {
    pub fn compute(q: &Potential, j_max: usize) -> Result<Self> {
        Self::compute_with(q, j_max, &AdaptiveOptions::default())
    }

    pub fn compute_with(q: &Potential, j_max: usize, opts: &AdaptiveOptions) -> Result<Self> {
        let mut out = Self {
            values: Vec::with_capacity(j_max),
            integrals: Vec::with_capacity(j_max),
            errors: Vec::with_capacity(j_max),
            converged: Vec::with_capacity(j_max),
            j_max,
            potential_id: q.id(),
            quadrature: QuadratureMeta {
                panels: Vec::with_capacity(j_max),
                nodes_per_panel: NODES_PER_PANEL,
                rel_tol: opts.rel_tol,
            },
        };
        for j in 1..=j_max {
            let i = integral(j, q, opts)?;
            let pre = gamma_prefactor(j);
            out.values.push(pre * i.value);
            out.integrals.push(i.value);
            out.errors.push(pre.abs() * i.err);
            out.converged.push(i.converged);
            out.quadrature.panels.push(i.panels);
        }
        Ok(out)
    }

    /// `b_j` (one-based).
    pub fn b(&self, j: usize) -> f64 {
        self.values[j - 1]
    }

    /// `I_j` (one-based).
    pub fn integral(&self, j: usize) -> f64 {
        self.integrals[j - 1]
    }

    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }
}
