//! Gauss–Legendre rules and composite/adaptive integration on finite intervals.

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights of the composite rule with `panels` equal panels on `[a, b]`.
    pub fn composite_points(&self, a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
        let h = (b - a) / panels as f64;
        let mut out = Vec::with_capacity(panels * self.len());
        for p in 0..panels {
            let lo = a + p as f64 * h;
            let mid = lo + 0.5 * h;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                out.push((mid + 0.5 * h * x, 0.5 * h * w));
            }
        }
        out
    }

    /// Composite rule; panel sums are combined by pairwise summation in panel order.
    pub fn composite<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64, panels: usize) -> f64 {
        self.composite_with_abs(&f, a, b, panels).0
    }

    fn composite_with_abs<F: Fn(f64) -> f64>(
        &self,
        f: &F,
        a: f64,
        b: f64,
        panels: usize,
    ) -> (f64, f64) {
        let h = (b - a) / panels as f64;
        let mut sums = Vec::with_capacity(panels);
        let mut abs_sums = Vec::with_capacity(panels);
        for p in 0..panels {
            let mid = a + (p as f64 + 0.5) * h;
            let (mut s, mut sa) = (0.0, 0.0);
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                let v = f(mid + 0.5 * h * x);
                s += w * v;
                sa += w * v.abs();
            }
            sums.push(0.5 * h * s);
            abs_sums.push(0.5 * h * sa);
        }
        (pairwise_sum(&sums), pairwise_sum(&abs_sums))
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Pairwise (cascade) summation with a fixed split order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Compensated (Kahan–Babuška/Neumaier) accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut k = Self::new();
        for x in iter {
            k.add(x);
        }
        k
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdaptiveResult {
    pub value: f64,
    /// `|S_{2P} - S_P|` for the final doubling plus a rounding allowance `64 ε ∫|f|`.
    pub error: f64,
    pub panels: usize,
    pub nodes_per_panel: usize,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct AdaptiveOptions {
    pub rel_tol: f64,
    pub start_panels: usize,
    pub max_panels: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-10, start_panels: 4, max_panels: 4096 }
    }
}

/// Doubles the panel count until two successive composite estimates agree to `rel_tol`
/// (relative to the estimate, with an absolute floor tied to `∫|f|`).
pub fn integrate_adaptive<F: Fn(f64) -> f64>(
    rule: &GaussLegendre,
    f: F,
    a: f64,
    b: f64,
    opts: &AdaptiveOptions,
) -> AdaptiveResult {
    let mut panels = opts.start_panels.max(1);
    let (mut prev, _) = rule.composite_with_abs(&f, a, b, panels);
    loop {
        let next_panels = panels * 2;
        let (cur, cur_abs) = rule.composite_with_abs(&f, a, b, next_panels);
        let err = (cur - prev).abs();
        let converged = err <= opts.rel_tol * cur.abs() || err <= 1e-15 * cur_abs;
        if converged || next_panels >= opts.max_panels {
            return AdaptiveResult {
                value: cur,
                error: err + 64.0 * f64::EPSILON * cur_abs,
                panels: next_panels,
                nodes_per_panel: rule.len(),
                converged,
            };
        }
        prev = cur;
        panels = next_panels;
    }
}
