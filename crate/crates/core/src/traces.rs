//! End-to-end checks against a computed spectrum: residuals of the eigenvalue expansion,
//! the heat-trace expansion and the regularized trace identities.

use std::io::{self, Write};

use serde::Serialize;

use crate::coeffs::BCoeffs;
use crate::error::{Error, Result};
use crate::quadrature::KahanSum;
use crate::series::{d_table, HalfPowerSeries};
use crate::spectra::{unperturbed, Spectrum};
use crate::zeta::{odd_tail, z0};

/// `δ(λ⁰) = Σ_{j≤J} c_j (λ⁰)^(−j/2)`.
fn expansion(c: &HalfPowerSeries, j_max: usize, l0: f64) -> f64 {
    let mu = l0.powf(-0.5);
    let mut acc = 0.0;
    let mut p = 1.0;
    for j in 1..=j_max {
        p *= mu;
        acc += c.get(j) * p;
    }
    acc
}

/// `λ_n − λ⁰_n − Σ_{j≤J} c_j (λ⁰_n)^(−j/2)` over the reliable eigenvalues, as `(n, residual)`.
pub fn asymptotic_residual(spec: &Spectrum, c: &HalfPowerSeries, j_max: usize) -> Result<Vec<(usize, f64)>> {
    if j_max > c.trunc() {
        return Err(Error::InvalidArgument(format!(
            "expansion order {j_max} exceeds the available c keys ({})",
            c.trunc()
        )));
    }
    Ok(spec
        .reliable()
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let n = i + 1;
            let l0 = unperturbed(n);
            (n, l - l0 - expansion(c, j_max, l0))
        })
        .collect())
}

/// Writes `(n, residual)` rows as CSV with a header line.
pub fn write_residual_csv<W: Write>(mut w: W, rows: &[(usize, f64)]) -> io::Result<()> {
    writeln!(w, "n,residual")?;
    for (n, r) in rows {
        writeln!(w, "{n},{r:e}")?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitOptions {
    /// Inclusive `n` window; clipped to the available data.
    pub window: (usize, usize),
    /// Passes of the `[1, 2, 1]/4` filter applied to residuals and model alike.
    pub smoothing_passes: usize,
    /// Exponent offsets of additional nuisance terms `(λ⁰)^(−p−δ)` in the fixed-exponent fit.
    pub nuisance_offsets: Vec<f64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { window: (50, 400), smoothing_passes: 2, nuisance_offsets: vec![0.5, 1.0] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitResult {
    /// Log–log slope of the smoothed residual (negative for a decaying residual).
    pub exponent_estimate: f64,
    /// Coefficient of `(λ⁰)^(−p)` at the expected exponent `p`.
    pub coefficient_estimate: f64,
    /// Coefficient accompanying the free exponent.
    pub free_coefficient: f64,
    pub window: (usize, usize),
    pub r_squared: f64,
}

fn binomial_smooth(v: &[f64], passes: usize) -> Vec<f64> {
    let mut cur = v.to_vec();
    for _ in 0..passes {
        if cur.len() < 3 {
            return Vec::new();
        }
        cur = cur.windows(3).map(|w| 0.25 * (w[0] + 2.0 * w[1] + w[2])).collect();
    }
    cur
}

/// Least squares by modified Gram–Schmidt; returns coefficients and residual sum of squares.
fn least_squares(cols: &[Vec<f64>], y: &[f64]) -> Result<(Vec<f64>, f64)> {
    let k = cols.len();
    let mut q: Vec<Vec<f64>> = cols.to_vec();
    let mut r = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..i {
            let d: f64 = q[j].iter().zip(&q[i]).map(|(a, b)| a * b).sum();
            r[j][i] = d;
            let qj = q[j].clone();
            q[i].iter_mut().zip(&qj).for_each(|(a, b)| *a -= d * b);
        }
        let norm = q[i].iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::DegenerateFit("linearly dependent model terms".into()));
        }
        r[i][i] = norm;
        q[i].iter_mut().for_each(|a| *a /= norm);
    }
    let qty: Vec<f64> = q.iter().map(|qi| qi.iter().zip(y).map(|(a, b)| a * b).sum()).collect();
    let mut x = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = (i + 1..k).map(|j| r[i][j] * x[j]).sum();
        x[i] = (qty[i] - s) / r[i][i];
    }
    let rss = y
        .iter()
        .enumerate()
        .map(|(row, yv)| {
            let fit: f64 = cols.iter().zip(&x).map(|(c, xi)| c[row] * xi).sum();
            (yv - fit).powi(2)
        })
        .sum();
    Ok((x, rss))
}

/// Fits `residual(n) ≈ C (λ⁰_n)^(−p)` with `p = expected_exponent`, then the exponent freely.
///
/// The residuals carry a component alternating in `n`, so residuals and model terms both
/// pass through the same binomial filter before fitting. The fixed-exponent pass includes
/// the nuisance terms of [`FitOptions::nuisance_offsets`] with relative weighting; the free
/// pass is a log–log regression of the filtered residual.
pub fn fit_next_coefficient(
    residuals: &[(usize, f64)],
    expected_exponent: f64,
    opts: &FitOptions,
) -> Result<FitResult> {
    if residuals.iter().all(|&(_, r)| r == 0.0) {
        return Err(Error::DegenerateFit("all residuals are zero".into()));
    }
    if residuals.windows(2).any(|w| w[1].0 != w[0].0 + 1) {
        return Err(Error::DegenerateFit("residual indices must be consecutive".into()));
    }
    let p = expected_exponent;
    let lam: Vec<f64> = residuals.iter().map(|&(n, _)| unperturbed(n)).collect();
    let ns: Vec<usize> = residuals.iter().map(|&(n, _)| n).collect();
    let smooth_y = binomial_smooth(&residuals.iter().map(|&(_, r)| r).collect::<Vec<_>>(), opts.smoothing_passes);
    let offset = opts.smoothing_passes;
    let exponents: Vec<f64> = std::iter::once(p).chain(opts.nuisance_offsets.iter().map(|d| p + d)).collect();
    let smooth_basis: Vec<Vec<f64>> = exponents
        .iter()
        .map(|e| binomial_smooth(&lam.iter().map(|l| l.powf(-e)).collect::<Vec<_>>(), opts.smoothing_passes))
        .collect();
    let rows: Vec<usize> = (0..smooth_y.len())
        .filter(|&i| {
            let n = ns[i + offset];
            n >= opts.window.0 && n <= opts.window.1
        })
        .collect();
    if rows.len() < 20 {
        return Err(Error::DegenerateFit(format!("{} points in the fit window, need at least 20", rows.len())));
    }
    let window = (ns[rows[0] + offset], ns[rows[rows.len() - 1] + offset]);
    let weight: Vec<f64> = rows.iter().map(|&i| lam[i + offset].powf(p)).collect();
    let y: Vec<f64> = rows.iter().zip(&weight).map(|(&i, w)| smooth_y[i] * w).collect();
    let cols: Vec<Vec<f64>> = smooth_basis
        .iter()
        .map(|b| rows.iter().zip(&weight).map(|(&i, w)| b[i] * w).collect())
        .collect();
    let (coef, rss) = least_squares(&cols, &y)?;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let tss: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let r_squared = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };

    let ys: Vec<f64> = rows.iter().map(|&i| smooth_y[i]).collect();
    let sign = ys[0].signum();
    if ys.iter().any(|v| *v == 0.0 || v.signum() != sign) {
        return Err(Error::DegenerateFit("filtered residual changes sign inside the window".into()));
    }
    let log_y: Vec<f64> = ys.iter().map(|v| v.abs().ln()).collect();
    let log_l: Vec<f64> = rows.iter().map(|&i| lam[i + offset].ln()).collect();
    let ones = vec![1.0; rows.len()];
    let (line, _) = least_squares(&[ones, log_l], &log_y)?;
    Ok(FitResult {
        exponent_estimate: line[1],
        coefficient_estimate: coef[0],
        free_coefficient: sign * line[0].exp(),
        window,
        r_squared,
    })
}

/// Largest admissible estimate of the neglected heat-trace tail.
pub const HEAT_TAIL_LIMIT: f64 = 1e-10;

/// `Σ_n e^(−tλ⁰_n) = 1/(2 sinh t)`.
pub fn unperturbed_heat_trace(t: f64) -> f64 {
    0.5 / t.sinh()
}

/// Accuracy of the expansion `λ ≈ λ⁰ + δ(λ⁰)` over the last ten reliable eigenvalues.
fn expansion_accuracy(spec: &Spectrum, c: &HalfPowerSeries) -> f64 {
    let r = spec.reliable_count;
    (r.saturating_sub(10)..r)
        .map(|i| {
            let l0 = unperturbed(i + 1);
            (spec.eigenvalues[i] - l0 - expansion(c, c.trunc(), l0)).abs()
        })
        .fold(0.0, f64::max)
}

fn heat_tail_bound(t: f64, first_tail: usize, accuracy: f64) -> f64 {
    t * (-t * unperturbed(first_tail)).exp() / (1.0 - (-2.0 * t).exp()) * accuracy
}

/// `Tr(e^(−tH) − e^(−tH₀))` from the reliable eigenvalues, completed beyond them through
/// the eigenvalue expansion with coefficients `c`.
pub fn heat_trace_delta(spec: &Spectrum, c: &HalfPowerSeries, t: f64) -> Result<f64> {
    if t.is_nan() || t <= 0.0 {
        return Err(Error::InvalidArgument(format!("heat trace needs t > 0, got {t}")));
    }
    let r = spec.reliable_count;
    let accuracy = expansion_accuracy(spec, c);
    if heat_tail_bound(t, r + 1, accuracy) >= HEAT_TAIL_LIMIT {
        let (mut lo, mut hi) = (t, t.max(1e-3));
        while heat_tail_bound(hi, r + 1, accuracy) >= HEAT_TAIL_LIMIT {
            hi *= 2.0;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if heat_tail_bound(mid, r + 1, accuracy) >= HEAT_TAIL_LIMIT {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return Err(Error::TimeTooSmall { t, t_min: hi });
    }
    let mut acc = KahanSum::new();
    for (i, &l) in spec.reliable().iter().enumerate() {
        let l0 = unperturbed(i + 1);
        acc.add((-t * l0).exp() * (-t * (l - l0)).exp_m1());
    }
    let mut n = r + 1;
    loop {
        let l0 = unperturbed(n);
        let base = (-t * l0).exp();
        if base == 0.0 || base < 1e-40 {
            break;
        }
        acc.add(base * (-t * expansion(c, c.trunc(), l0)).exp_m1());
        n += 1;
    }
    Ok(acc.value())
}

/// `(4πt)^(−1/2) Σ_{j≤J} t^j I_j` with `I_j` from `b`.
pub fn heat_expansion_rhs(b: &BCoeffs, t: f64, j_max: usize) -> Result<f64> {
    if j_max > b.integrals.len() {
        return Err(Error::InvalidArgument(format!(
            "order {j_max} exceeds the {} available integrals",
            b.integrals.len()
        )));
    }
    let s: f64 = (1..=j_max).map(|j| t.powi(j as i32) * b.integral(j)).sum();
    Ok(s / (4.0 * std::f64::consts::PI * t).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Correction {
    pub j: usize,
    pub d: f64,
    pub s: f64,
    pub z0: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceTerms {
    /// `Σ_{n≤N} {λ_n^k − Σ_{j≤2k+1} d_j(−k) (λ⁰_n)^(k−j/2)}`.
    pub partial_sum: f64,
    /// `d_j(−k) Z₀(−k + j/2)` for `j = 1..=2k+1` (zero `d_j` omitted).
    pub corrections: Vec<Correction>,
    /// Expansion-based completion of the sum over `n > N`.
    pub tail: f64,
    /// `lim_{s→−k} d_{2k+2}(s) Z₀(s + k + 1) = ½ ∂_s d_{2k+2}(−k)`.
    pub pole_term: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundTerms {
    /// Size of the first tail term not included.
    pub first_omitted: f64,
    /// Amplitude of the part of the summand alternating in `n` near `n = N`.
    pub oscillation: f64,
    /// Propagated eigenvalue error and rounding.
    pub rounding: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceReport {
    pub k: usize,
    /// Partial sum plus the `Z₀` corrections for `j = 1..=2k+1`, the tail and the pole term.
    pub residual: f64,
    /// `residual − pole_term`, i.e. with the `j = 2k+2` term taken as zero.
    pub literal_residual: f64,
    pub tail_error_bound: f64,
    pub n_used: usize,
    pub tolerance: f64,
    /// Set when the bound is not below `tolerance`, in which case the residual is not conclusive.
    pub flagged: bool,
    pub terms: TraceTerms,
    pub bound_terms: BoundTerms,
}

impl TraceReport {
    pub fn within_bound(&self) -> bool {
        self.residual.abs() <= self.tail_error_bound
    }

    /// Verified: conclusive and within the bound.
    pub fn passed(&self) -> bool {
        !self.flagged && self.within_bound()
    }
}

/// Highest supported power in [`trace_identity`].
pub const MAX_TRACE_POWER: usize = 3;

/// Regularized trace identity of order `k` over the reliable part of `spec`:
///
/// `Σ_n {λ_n^k − Σ_{j≤2k+1} d_j(−k) (λ⁰_n)^(k−j/2)} + Σ_{j=1}^{2k+1} d_j(−k) Z₀(−k + j/2)
///  + ½ ∂_s d_{2k+2}(−k) = 0`.
///
/// The last term is what `d_{2k+2}(s) Z₀(s + k + 1)` tends to at `s = −k`, where `d_{2k+2}`
/// vanishes against the pole of `Z₀` at 1. It is zero for `k = 1` and `−c₁²/2` for `k = 2`.
pub fn trace_identity(k: usize, spec: &Spectrum, c: &HalfPowerSeries, tolerance: f64) -> Result<TraceReport> {
    if k == 0 || k > MAX_TRACE_POWER {
        return Err(Error::InvalidArgument(format!("trace power must be in 1..={MAX_TRACE_POWER}, got {k}")));
    }
    if c.trunc() < 2 * k + 1 {
        return Err(Error::InvalidArgument(format!("trace power {k} needs c through key {}", 2 * k + 1)));
    }
    if let Some(bad) = spec.eigenvalues.iter().find(|&&l| l <= 0.0) {
        return Err(Error::InvalidArgument(format!("non-positive eigenvalue {bad}")));
    }
    let kf = k as f64;
    let head = 2 * k + 1;
    let d_max = c.trunc() + 2;
    let d = d_table(-kf, c, d_max);
    let n_used = spec.reliable_count;

    let summand = |n: usize, l: f64| -> f64 {
        let l0 = unperturbed(n);
        let sub: f64 = (0..=head).map(|j| d.get(j) * l0.powf(kf - j as f64 / 2.0)).sum();
        l.powi(k as i32) - sub
    };
    let mut acc = KahanSum::new();
    let mut summands = Vec::with_capacity(n_used);
    let mut rounding = 0.0;
    for (i, &l) in spec.reliable().iter().enumerate() {
        let s = summand(i + 1, l);
        acc.add(s);
        summands.push(s);
        let eig_err = spec
            .convergence
            .get(i)
            .copied()
            .unwrap_or(0.0)
            .max(8.0 * f64::EPSILON * l);
        rounding += kf * l.powi(k as i32 - 1) * eig_err + 4.0 * f64::EPSILON * l.powi(k as i32);
    }
    let partial_sum = acc.value();

    let mut corrections = Vec::new();
    let mut correction_total = KahanSum::new();
    for j in 1..=head {
        let dj = d.get(j);
        if dj == 0.0 {
            continue;
        }
        let s = -kf + j as f64 / 2.0;
        let z = z0(s)?.value;
        correction_total.add(dj * z);
        corrections.push(Correction { j, d: dj, s, z0: z, value: dj * z });
    }

    let mut tail = KahanSum::new();
    let mut last_term = 0.0;
    for j in (head + 2)..=d_max {
        let dj = d.get(j);
        if dj == 0.0 {
            continue;
        }
        let term = dj * odd_tail(j as f64 / 2.0 - kf, n_used)?;
        tail.add(term);
        last_term = term;
    }
    let tail = tail.value();
    let first_omitted = if n_used == 0 { 0.0 } else { last_term.abs() * unperturbed(n_used + 1).powf(-0.5) };

    let oscillation = if summands.len() >= 8 {
        let m = summands.len();
        (m - 6..m - 1)
            .map(|i| (summands[i] - 0.25 * (summands[i - 1] + 2.0 * summands[i] + summands[i + 1])).abs())
            .fold(0.0, f64::max)
    } else {
        0.0
    };

    let pole_term = 0.5 * d_derivative(2 * k + 2, -kf, c);
    let literal_residual = partial_sum + correction_total.value() + tail;
    let residual = literal_residual + pole_term;
    let tail_error_bound = first_omitted + oscillation + rounding;
    Ok(TraceReport {
        k,
        residual,
        literal_residual,
        tail_error_bound,
        n_used,
        tolerance,
        flagged: tail_error_bound.is_nan() || tail_error_bound >= tolerance,
        terms: TraceTerms { partial_sum, corrections, tail, pole_term },
        bound_terms: BoundTerms { first_omitted, oscillation, rounding },
    })
}

/// `∂_s d_j(s)` by a five-point stencil, exact for the polynomial degrees met at `j ≤ 14`
/// up to rounding.
pub fn d_derivative(j: usize, s: f64, c: &HalfPowerSeries) -> f64 {
    let h = 1e-2;
    let at = |x: f64| d_table(x, c, j).get(j);
    (at(s - 2.0 * h) - 8.0 * at(s - h) + 8.0 * at(s + h) - at(s + 2.0 * h)) / (12.0 * h)
}

/// Largest discrepancy between the computed `d_j(−k)` and the closed forms
/// written out for `k = 1, 2, 3` (including `d_{2k+2}(−k) = 0`).
pub fn display_check(k: usize, c: &HalfPowerSeries) -> Result<f64> {
    let g = |j| c.get(j);
    let expected: Vec<(usize, f64)> = match k {
        1 => vec![(0, 1.0), (1, 0.0), (2, 0.0), (3, g(1)), (4, 0.0)],
        2 => vec![(0, 1.0), (1, 0.0), (2, 0.0), (3, 2.0 * g(1)), (4, 0.0), (5, 2.0 * g(3)), (6, 0.0)],
        3 => vec![
            (0, 1.0),
            (1, 0.0),
            (2, 0.0),
            (3, 3.0 * g(1)),
            (4, 0.0),
            (5, 3.0 * g(3)),
            (6, 3.0 * (g(4) + g(1) * g(1))),
            (7, 3.0 * g(5)),
            (8, 0.0),
        ],
        _ => return Err(Error::InvalidArgument(format!("no closed forms for k = {k}"))),
    };
    let d = d_table(-(k as f64), c, 2 * k + 2);
    Ok(expected.iter().map(|&(j, e)| (d.get(j) - e).abs()).fold(0.0, f64::max))
}
