//! Eigenvalues of `H = −d²/dx² + x² + q(x)`.
//!
//! The production route is a Galerkin projection onto the first `N` Hermite functions
//! followed by a dense symmetric eigensolve. An independent shooting solver integrates
//! the equation from both ends and matches the Prüfer angles at the origin.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::quadrature::GaussLegendre;

/// Nodes per Gauss–Legendre panel in the matrix assembly.
const ASSEMBLY_NODES: usize = 20;
/// Minimum quadrature nodes per wavelength of the fastest basis function.
const NODES_PER_WAVELENGTH: f64 = 12.0;
const MIN_PANELS: usize = 8;
const QL_MAX_SWEEPS: usize = 50;

/// `λ⁰_n = 2n − 1`, one-based.
pub fn unperturbed(n: usize) -> f64 {
    2.0 * n as f64 - 1.0
}

/// Values `ψ_0(x), …, ψ_{count−1}(x)` of the L²-normalized Hermite functions.
///
/// The recurrence runs on rescaled values so that the Gaussian factor never underflows
/// before it is applied.
pub fn hermite_fns(count: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; count];
    if count == 0 {
        return out;
    }
    let mut log_scale = -0.5 * x * x - 0.25 * PI.ln();
    let (mut prev, mut cur) = (0.0f64, 1.0f64);
    out[0] = cur;
    let mut scales = vec![0.0; count];
    scales[0] = log_scale;
    for n in 0..count - 1 {
        let nf = n as f64;
        let next = x * (2.0 / (nf + 1.0)).sqrt() * cur - (nf / (nf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > 1e150 {
            prev *= 1e-150;
            cur *= 1e-150;
            log_scale += 150.0 * 10f64.ln();
        }
        out[n + 1] = cur;
        scales[n + 1] = log_scale;
    }
    for (v, s) in out.iter_mut().zip(&scales) {
        *v *= s.exp();
    }
    out
}

/// `ψ_n(x)`, the `n`-th normalized Hermite function (zero-based).
pub fn hermite_fn(n: usize, x: f64) -> f64 {
    hermite_fns(n + 1, x)[n]
}

/// Dense symmetric matrix stored as its packed lower triangle.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    lower: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, lower: vec![0.0; dim * (dim + 1) / 2] }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        m
    }

    /// Builds from a full row-major matrix, reading only the lower triangle.
    pub fn from_lower_rows(rows: &[Vec<f64>]) -> Self {
        let mut m = Self::zeros(rows.len());
        for (i, row) in rows.iter().enumerate() {
            for j in 0..=i {
                m.set(i, j, row[j]);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn index(i: usize, j: usize) -> usize {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        r * (r + 1) / 2 + c
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.lower[Self::index(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.lower[Self::index(i, j)] = v;
    }

    /// Row `i` of the lower triangle, entries `(i, 0..=i)`.
    pub fn lower_row(&self, i: usize) -> &[f64] {
        let start = i * (i + 1) / 2;
        &self.lower[start..start + i + 1]
    }
}

/// Quadrature nodes and weights over the support of `q`, fine enough for `basis` functions.
fn assembly_points(q: &Potential, basis: usize) -> Vec<(f64, f64)> {
    let Some(s) = q.support() else { return Vec::new() };
    let wavelength = 2.0 * PI / (2.0 * basis as f64).sqrt();
    let panel_width = ASSEMBLY_NODES as f64 / NODES_PER_WAVELENGTH * wavelength;
    let panels = ((s.width() / panel_width).ceil() as usize).max(MIN_PANELS);
    GaussLegendre::new(ASSEMBLY_NODES).composite_points(s.lo, s.hi, panels)
}

/// `M[m][n] = (2n − 1) δ_mn + ∫ q ψ_{m−1} ψ_{n−1}` for `m, n = 1..=basis`.
pub fn galerkin_matrix(q: &Potential, basis: usize) -> SymMatrix {
    let points: Vec<(f64, f64, f64)> = assembly_points(q, basis)
        .into_iter()
        .map(|(x, w)| (x, w, q.value(x)))
        .filter(|&(_, _, v)| v != 0.0)
        .collect();
    // table[m][i] = ψ_m(x_i)
    let columns: Vec<Vec<f64>> = points.par_iter().map(|&(x, _, _)| hermite_fns(basis, x)).collect();
    let mut table = vec![vec![0.0; points.len()]; basis];
    for (i, col) in columns.iter().enumerate() {
        for (m, v) in col.iter().enumerate() {
            table[m][i] = *v;
        }
    }
    let wq: Vec<f64> = points.iter().map(|&(_, w, v)| w * v).collect();
    let rows: Vec<Vec<f64>> = (0..basis)
        .into_par_iter()
        .map(|m| {
            let weighted: Vec<f64> = table[m].iter().zip(&wq).map(|(p, w)| p * w).collect();
            (0..=m)
                .map(|n| {
                    let dot: f64 = weighted.iter().zip(&table[n]).map(|(a, b)| a * b).sum();
                    if n == m {
                        dot + unperturbed(m + 1)
                    } else {
                        dot
                    }
                })
                .collect()
        })
        .collect();
    let mut lower = Vec::with_capacity(basis * (basis + 1) / 2);
    for row in rows {
        lower.extend(row);
    }
    SymMatrix { dim: basis, lower }
}

/// All eigenvalues of a symmetric matrix, ascending (Householder reduction, implicit QL).
pub fn eigen_sym(m: &SymMatrix) -> Result<Vec<f64>> {
    let n = m.dim();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| m.lower_row(i).to_vec()).collect();
    let (mut d, mut e) = tridiagonalize(&mut a);
    tridiagonal_ql(&mut d, &mut e)?;
    d.sort_by(|x, y| x.total_cmp(y));
    Ok(d)
}

/// Householder reduction of the lower triangle `a` (row `i` holds `a[i][0..=i]`).
/// Returns the diagonal and the subdiagonal (`e[i]` couples `i − 1` and `i`; `e[0] = 0`).
fn tridiagonalize(a: &mut [Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = a.len();
    let mut e = vec![0.0; n];
    let mut p = vec![0.0; n];
    for i in (1..n).rev() {
        let l = i - 1;
        let scale: f64 = a[i][..=l].iter().map(|x| x.abs()).sum();
        if l == 0 || scale == 0.0 {
            e[i] = a[i][l];
            continue;
        }
        let mut u: Vec<f64> = a[i][..=l].iter().map(|x| x / scale).collect();
        let mut h: f64 = u.iter().map(|x| x * x).sum();
        let f = u[l];
        let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
        e[i] = scale * g;
        h -= f * g;
        u[l] = f - g;
        // p = A u / h on the leading (l+1)-block, touching rows only
        p[..=l].iter_mut().for_each(|x| *x = 0.0);
        for j in 0..=l {
            let row = &a[j];
            let uj = u[j];
            let mut dot = 0.0;
            for k in 0..j {
                dot += row[k] * u[k];
                p[k] += row[k] * uj;
            }
            p[j] += dot + row[j] * uj;
        }
        let inv_h = 1.0 / h;
        let mut up = 0.0;
        for j in 0..=l {
            p[j] *= inv_h;
            up += u[j] * p[j];
        }
        let kk = up / (2.0 * h);
        for j in 0..=l {
            p[j] -= kk * u[j];
        }
        for j in 0..=l {
            let (uj, qj) = (u[j], p[j]);
            let row = &mut a[j];
            for k in 0..=j {
                row[k] -= uj * p[k] + qj * u[k];
            }
        }
    }
    let d = (0..n).map(|i| a[i][i]).collect();
    (d, e)
}

/// Implicit-shift QL on a symmetric tridiagonal matrix; eigenvalues overwrite `d`.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > QL_MAX_SWEEPS {
                return Err(Error::EigenNoConvergence(l));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Galerkin,
    Shooting,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub basis_size: usize,
    /// Basis size of the convergence check (zero when none was run).
    pub check_basis_size: usize,
    pub reliable_count: usize,
    pub method: Method,
    pub potential_id: String,
    /// `|λ_n(N) − λ_n(check)|` per eigenvalue (empty when no check was run).
    pub convergence: Vec<f64>,
}

impl Spectrum {
    /// Wraps externally supplied eigenvalues, all treated as reliable.
    pub fn from_eigenvalues(eigenvalues: Vec<f64>, method: Method, potential_id: String) -> Self {
        let n = eigenvalues.len();
        Self {
            eigenvalues,
            basis_size: n,
            check_basis_size: 0,
            reliable_count: n,
            method,
            potential_id,
            convergence: Vec::new(),
        }
    }

    /// The leading reliable eigenvalues.
    pub fn reliable(&self) -> &[f64] {
        &self.eigenvalues[..self.reliable_count]
    }

    /// Copy restricted to the first `count` eigenvalues.
    pub fn truncated(&self, count: usize) -> Self {
        let count = count.min(self.eigenvalues.len());
        let mut s = self.clone();
        s.eigenvalues.truncate(count);
        s.convergence.truncate(count);
        s.reliable_count = s.reliable_count.min(count);
        s
    }

    pub fn max_deviation_from_unperturbed(&self) -> f64 {
        self.eigenvalues
            .iter()
            .enumerate()
            .map(|(i, l)| (l - unperturbed(i + 1)).abs())
            .fold(0.0, f64::max)
    }
}

/// Galerkin eigenvalues at basis size `basis`, truncated to `count`.
pub fn galerkin_eigenvalues(q: &Potential, basis: usize, count: usize) -> Result<Vec<f64>> {
    if 2 * count > basis {
        return Err(Error::InsufficientBasis { count, basis });
    }
    let mut ev = eigen_sym(&galerkin_matrix(q, basis))?;
    ev.truncate(count);
    Ok(ev)
}

/// Spectrum at basis size `basis`; reliability is judged against basis size `2·basis`.
pub fn compute_spectrum(q: &Potential, basis: usize, count: usize, tol: f64) -> Result<Spectrum> {
    compute_spectrum_with_check(q, basis, 2 * basis, count, tol)
}

/// As [`compute_spectrum`] with an explicit check basis size.
pub fn compute_spectrum_with_check(
    q: &Potential,
    basis: usize,
    check_basis: usize,
    count: usize,
    tol: f64,
) -> Result<Spectrum> {
    let ev = galerkin_eigenvalues(q, basis, count)?;
    let check = galerkin_eigenvalues(q, check_basis, count)?;
    let convergence: Vec<f64> = ev.iter().zip(&check).map(|(a, b)| (a - b).abs()).collect();
    let reliable_count = convergence.iter().take_while(|&&d| d < tol).count();
    Ok(Spectrum {
        eigenvalues: ev,
        basis_size: basis,
        check_basis_size: check_basis,
        reliable_count,
        method: Method::Galerkin,
        potential_id: q.id(),
        convergence,
    })
}

/// Taylor order of the shooting integrator.
const SHOOT_ORDER: usize = 8;
const SHOOT_TOL: f64 = 1e-15;

/// Solution state on the unit circle: `(ψ, ψ') = (sin θ, cos θ)` up to scale, with
/// the angle unwrapped along the path.
struct Shot {
    psi: f64,
    dpsi: f64,
    theta: f64,
}

/// Integrates `ψ'' = (x² + q − λ) ψ` from `x0` to `x1` with an adaptive Taylor method.
fn shoot(q: &Potential, lambda: f64, x0: f64, x1: f64, slope_ratio: f64, breaks: &[f64]) -> Shot {
    let norm = (1.0 + slope_ratio * slope_ratio).sqrt();
    let (mut psi, mut dpsi) = (1.0 / norm, slope_ratio / norm);
    let mut theta = psi.atan2(dpsi);
    let dir = (x1 - x0).signum();
    let mut x = x0;
    let k = SHOOT_ORDER;
    let mut c = vec![0.0; k + 1];
    while (x1 - x) * dir > 0.0 {
        let qt = q.taylor(x, k);
        let mut w = qt.into_coeffs();
        w[0] += x * x - lambda;
        w[1] += 2.0 * x;
        w[2] += 1.0;
        c[0] = psi;
        c[1] = dpsi;
        for m in 0..=k - 2 {
            let s: f64 = (0..=m).map(|i| w[i] * c[m - i]).sum();
            c[m + 2] = s / ((m + 2) as f64 * (m + 1) as f64);
        }
        let mut h = 0.5 / w[0].abs().max(1.0).sqrt();
        for (m, cm) in c.iter().enumerate().skip(k - 1) {
            if *cm != 0.0 {
                h = h.min(0.8 * (SHOOT_TOL / cm.abs()).powf(1.0 / m as f64));
            }
        }
        h = h.max(1e-9);
        let mut next = x + dir * h;
        if (next - x1) * dir > 0.0 {
            next = x1;
        }
        for &b in breaks {
            if (b - x) * dir > 1e-15 && (next - b) * dir > 0.0 {
                next = b;
            }
        }
        let step = next - x;
        let (mut p, mut dp) = (0.0, 0.0);
        for m in (0..=k).rev() {
            p = p * step + c[m];
        }
        for m in (1..=k).rev() {
            dp = dp * step + m as f64 * c[m];
        }
        let r = p.hypot(dp);
        psi = p / r;
        dpsi = dp / r;
        let angle = psi.atan2(dpsi);
        let mut delta = angle - theta.rem_euclid(2.0 * PI);
        delta = (delta + PI).rem_euclid(2.0 * PI) - PI;
        theta += delta;
        x = next;
    }
    Shot { psi, dpsi, theta }
}

struct Matching {
    left: Shot,
    right: Shot,
}

fn match_at_origin(q: &Potential, lambda: f64) -> Matching {
    let radius = q.support().map(|s| s.lo.abs().max(s.hi.abs())).unwrap_or(0.0);
    let l = (radius + 2.0).max(lambda.max(0.0).sqrt() + 4.0);
    let mut breaks: Vec<f64> = q
        .terms
        .iter()
        .flat_map(|t| [t.center - t.radius, t.center + t.radius])
        .filter(|b| b.abs() < l)
        .collect();
    breaks.push(0.0);
    let seed = l - (lambda - 1.0) / (2.0 * l);
    let left = shoot(q, lambda, -l, 0.0, seed, &breaks);
    let right = shoot(q, lambda, l, 0.0, -seed, &breaks);
    Matching { left, right }
}

/// Angle mismatch `D(λ) = θ₋(0) − θ₊(0)`: increasing in `λ` with `D(λ_n) = (n − 1)π`.
pub fn angle_mismatch(q: &Potential, lambda: f64) -> f64 {
    let m = match_at_origin(q, lambda);
    m.left.theta - m.right.theta
}

/// Normalized Wronskian `ψ₋′ψ₊ − ψ₋ψ₊′` at the origin for unit-norm `(ψ, ψ')` pairs.
pub fn shooting_wronskian(q: &Potential, lambda: f64) -> f64 {
    let m = match_at_origin(q, lambda);
    m.left.dpsi * m.right.psi - m.left.psi * m.right.dpsi
}

/// Number of eigenvalues not exceeding `λ` (oscillation count).
pub fn eigenvalue_count(q: &Potential, lambda: f64) -> i64 {
    (angle_mismatch(q, lambda) / PI).floor() as i64 + 1
}

/// `λ_n` (one-based) by shooting, bracketed in `[λ⁰_n − 1 − max|q|, λ⁰_n + 1 + max|q|]`.
pub fn shooting_eigenvalue(q: &Potential, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("eigenvalue index is one-based".into()));
    }
    let spread = 1.0 + q.max_abs();
    let (mut lo, mut hi) = (unperturbed(n) - spread, unperturbed(n) + spread);
    let target = (n as f64 - 1.0) * PI;
    let count_lo = eigenvalue_count(q, lo);
    let count_hi = eigenvalue_count(q, hi);
    if count_lo != n as i64 - 1 || count_hi != n as i64 {
        return Err(Error::BracketFailure { n, lo, hi, found: count_hi - count_lo });
    }
    let f = |l: f64| angle_mismatch(q, l) - target;
    let (mut f_lo, mut f_hi) = (f(lo), f(hi));
    for _ in 0..20 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm < 0.0 {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
            f_hi = fm;
        }
    }
    // safeguarded secant (regula falsi with bisection fallback)
    let mut x = lo - f_lo * (hi - lo) / (f_hi - f_lo);
    for _ in 0..60 {
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let fx = f(x);
        if fx < 0.0 {
            lo = x;
            f_lo = fx;
        } else {
            hi = x;
            f_hi = fx;
        }
        let next = lo - f_lo * (hi - lo) / (f_hi - f_lo);
        if (next - x).abs() <= 1e-13 * x.abs().max(1.0) || hi - lo <= 1e-13 * x.abs().max(1.0) {
            return Ok(next.clamp(lo, hi));
        }
        x = next;
    }
    Ok(0.5 * (lo + hi))
}
