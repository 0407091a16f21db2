//! Real-argument special functions: Riemann ζ, Γ, the odd-integer zeta
//! `Z₀(s) = (1 − 2^(−s)) ζ(s)` and tails `Σ_{n>N} (2n−1)^(−s)`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

/// Number of terms in the accelerated alternating series.
const ETA_TERMS: usize = 30;

/// Width of the band around `s = 1` flagged as ill-conditioned.
const POLE_BAND: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ZetaValue {
    pub s: f64,
    pub value: f64,
    pub abs_err: f64,
    /// Set when `s` lies within `1e-8` of the pole.
    pub ill_conditioned: bool,
}

/// `sin(πx)` with exact zeros at integers.
pub fn sinpi(x: f64) -> f64 {
    if x == x.round() {
        return 0.0;
    }
    let r = x - 2.0 * (x / 2.0).floor();
    // r in [0, 2)
    let (r, sign) = if r >= 1.0 { (r - 1.0, -1.0) } else { (r, 1.0) };
    let r = if r > 0.5 { 1.0 - r } else { r };
    sign * (PI * r).sin()
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Γ(s) for real `s`, Lanczos approximation with reflection below 1/2.
pub fn gamma_real(s: f64) -> Result<f64> {
    if s <= 0.0 && s == s.round() {
        return Err(Error::Pole { func: "gamma", s });
    }
    if s < 0.5 {
        return Ok(PI / (sinpi(s) * gamma_real(1.0 - s)?));
    }
    if s == s.round() && s <= 171.0 {
        return Ok((1..s as u64).map(|k| k as f64).product());
    }
    let x = s - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    Ok((2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a)
}

/// Accelerated alternating series for `ζ(s)`, valid for `s ≥ 0`, `s ≠ 1`.
fn zeta_eta_series(s: f64, n: usize) -> (f64, f64) {
    // d_k = n Σ_{i≤k} (n+i−1)! 4^i / ((n−i)! (2i)!)
    let nf = n as f64;
    let mut d = Vec::with_capacity(n + 1);
    let mut term = 1.0 / nf;
    let mut acc = term;
    d.push(nf * acc);
    for i in 1..=n {
        let fi = i as f64;
        term *= (nf + fi - 1.0) * (nf - fi + 1.0) * 4.0 / ((2.0 * fi - 1.0) * (2.0 * fi));
        acc += term;
        d.push(nf * acc);
    }
    let dn = d[n];
    let mut eta = 0.0;
    let mut mag = 0.0;
    for k in 0..n {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let t = (dn - d[k]) * (k as f64 + 1.0).powf(-s);
        eta += sign * t;
        mag += t.abs();
    }
    eta /= dn;
    mag /= dn;
    let denom = 1.0 - 2f64.powf(1.0 - s);
    let trunc = 3.0 / (3.0 + 8f64.sqrt()).powi(n as i32);
    let err = (trunc + 32.0 * f64::EPSILON * mag) / denom.abs();
    (eta / denom, err)
}

fn check_pole(s: f64) -> Result<bool> {
    if s == 1.0 {
        return Err(Error::Pole { func: "zeta", s });
    }
    Ok((s - 1.0).abs() < POLE_BAND)
}

/// ζ(s) by the accelerated alternating series; requires `s ≥ 0`.
pub fn zeta_direct(s: f64) -> Result<ZetaValue> {
    let ill = check_pole(s)?;
    if s < 0.0 {
        return Err(Error::InvalidArgument(format!("direct zeta series needs s >= 0, got {s}")));
    }
    if s == 0.0 {
        return Ok(ZetaValue { s, value: -0.5, abs_err: 0.0, ill_conditioned: false });
    }
    let (value, abs_err) = zeta_eta_series(s, ETA_TERMS);
    Ok(ZetaValue { s, value, abs_err, ill_conditioned: ill })
}

/// ζ(s) through the functional equation from ζ(1 − s); requires `s ≤ 1`, `s ≠ 0`.
pub fn zeta_reflected(s: f64) -> Result<ZetaValue> {
    let ill = check_pole(s)?;
    if s > 1.0 {
        return Err(Error::InvalidArgument(format!("reflected zeta needs s <= 1, got {s}")));
    }
    let sin = sinpi(s / 2.0);
    if sin == 0.0 {
        // trivial zeros (and s = 0, handled by the direct route)
        return if s == 0.0 { zeta_direct(0.0) } else { Ok(ZetaValue { s, value: 0.0, abs_err: 0.0, ill_conditioned: ill }) };
    }
    let inner = zeta_direct(1.0 - s)?;
    let factor = 2f64.powf(s) * PI.powf(s - 1.0) * sin * gamma_real(1.0 - s)?;
    let value = factor * inner.value;
    let abs_err = factor.abs() * inner.abs_err + 1e-14 * value.abs();
    Ok(ZetaValue { s, value, abs_err, ill_conditioned: ill })
}

/// Riemann ζ(s) for real `s ≠ 1`.
pub fn riemann_zeta(s: f64) -> Result<ZetaValue> {
    if s >= 0.0 {
        zeta_direct(s)
    } else {
        zeta_reflected(s)
    }
}

/// `Z₀(s) = (1 − 2^(−s)) ζ(s) = Σ_{n≥1} (2n−1)^(−s)` (analytically continued).
pub fn z0(s: f64) -> Result<ZetaValue> {
    let z = riemann_zeta(s)?;
    let f = 1.0 - 2f64.powf(-s);
    Ok(ZetaValue { s, value: f * z.value, abs_err: f.abs() * z.abs_err, ill_conditioned: z.ill_conditioned })
}

/// Bernoulli numbers `B_2, B_4, …, B_20`.
const BERNOULLI_EVEN: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

/// Smallest cutoff at which the direct partial sum hands over to Euler–Maclaurin.
const EM_MIN_CUTOFF: usize = 64;

/// `Σ_{n>N} (2n−1)^(−s)`, continued analytically in `s` so that
/// `odd_tail(s, N) + Σ_{n≤N} (2n−1)^(−s) = Z₀(s)` for every `s ≠ 1`.
pub fn odd_tail(s: f64, n: usize) -> Result<f64> {
    if s == 1.0 {
        return Err(Error::Pole { func: "odd_tail", s });
    }
    let m = n.max(EM_MIN_CUTOFF);
    let f = |k: usize| (2.0 * k as f64 - 1.0).powf(-s);
    let direct: f64 = ((n + 1)..=m).rev().map(f).sum();
    let a = 2.0 * m as f64 - 1.0;
    // Σ_{k>m} f(k) = ∫_m^∞ f − f(m)/2 − Σ_p B_{2p}/(2p)! f^{(2p−1)}(m)
    let mut tail = a.powf(1.0 - s) / (2.0 * (s - 1.0)) - 0.5 * a.powf(-s);
    // f^{(r)}(x) = (−2)^r (s)_r (2x−1)^(−s−r), (s)_r rising factorial
    let mut rising = 1.0;
    let mut fact = 1.0;
    let mut pow2 = 1.0;
    let mut r = 0usize;
    for (p, b) in BERNOULLI_EVEN.iter().enumerate() {
        let order = 2 * p + 1;
        while r < order {
            rising *= s + r as f64;
            r += 1;
            fact *= r as f64;
            pow2 *= -2.0;
        }
        let deriv = pow2 * rising * a.powf(-s - order as f64);
        let term = b / (fact * (order as f64 + 1.0)) * deriv;
        tail -= term;
        if term.abs() <= 1e-17 * tail.abs().max(1e-300) {
            break;
        }
    }
    Ok(direct + tail)
}
