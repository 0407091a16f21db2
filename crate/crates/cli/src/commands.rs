use std::path::Path;

use clap::ValueEnum;
use oscitrace::coeffs::BCoeffs;
use oscitrace::diffpoly::{heat_invariant, RenderFormat, DEFAULT_MAX_ORDER};
use oscitrace::series::{invert_expansion, HalfPowerSeries};
use oscitrace::spectra::Spectrum;
use oscitrace::traces::{
    asymptotic_residual, fit_next_coefficient, heat_expansion_rhs, heat_trace_delta, trace_identity,
    write_residual_csv, FitResult, TraceReport,
};
use serde::Serialize;

use crate::cache::load_or_compute;
use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::output::{write_atomic, write_json};

/// `println!` that ignores a closed stdout.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Plain,
    Latex,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Which {
    Asymptotics,
    Traces,
    HeatTrace,
    All,
}

#[derive(Serialize)]
struct InvariantRow {
    j: usize,
    plain: String,
    latex: String,
}

/// Table of `a_0..a_J`.
pub fn invariants(max_order: usize, format: Format) -> Result<String> {
    if max_order > DEFAULT_MAX_ORDER {
        return Err(CliError::OrderCap { requested: max_order, cap: DEFAULT_MAX_ORDER });
    }
    let polys: Vec<_> = (0..=max_order).map(heat_invariant).collect();
    Ok(match format {
        Format::Json => {
            let rows: Vec<InvariantRow> = polys
                .iter()
                .enumerate()
                .map(|(j, p)| InvariantRow { j, plain: p.render(RenderFormat::Plain), latex: p.render(RenderFormat::Latex) })
                .collect();
            serde_json::to_string_pretty(&rows).expect("rows serialize") + "\n"
        }
        Format::Plain => polys.iter().enumerate().map(|(j, p)| format!("a_{j} = {}\n", p.render(RenderFormat::Plain))).collect(),
        Format::Latex => polys.iter().enumerate().map(|(j, p)| format!("a_{{{j}}} = {}\n", p.render(RenderFormat::Latex))).collect(),
    })
}

#[derive(Serialize)]
struct CoeffRow {
    j: usize,
    integral: f64,
    b: f64,
    error: f64,
    converged: bool,
    panels: usize,
}

#[derive(Serialize)]
struct KeyValue {
    key: usize,
    value: f64,
}

#[derive(Serialize)]
struct CoeffsReport {
    potential_id: String,
    quadrature_rel_tol: f64,
    nodes_per_panel: usize,
    rows: Vec<CoeffRow>,
    c: Vec<KeyValue>,
}

fn coefficients(cfg: &RunConfig) -> Result<(BCoeffs, HalfPowerSeries)> {
    let b = BCoeffs::compute_with(&cfg.potential, cfg.max_j, &cfg.quadrature_options())?;
    let c = invert_expansion(&b.values, 2 * cfg.max_j)?;
    Ok((b, c))
}

/// Writes `coeffs.json` with `I_j`, `b_j` and the reverted `c` keys.
pub fn coeffs(cfg: &RunConfig, out: &Path) -> Result<()> {
    let (b, c) = coefficients(cfg)?;
    let report = CoeffsReport {
        potential_id: b.potential_id.clone(),
        quadrature_rel_tol: b.quadrature.rel_tol,
        nodes_per_panel: b.quadrature.nodes_per_panel,
        rows: (1..=b.j_max)
            .map(|j| CoeffRow {
                j,
                integral: b.integral(j),
                b: b.b(j),
                error: b.errors[j - 1],
                converged: b.converged[j - 1],
                panels: b.quadrature.panels[j - 1],
            })
            .collect(),
        c: (1..=c.trunc()).map(|key| KeyValue { key, value: c.get(key) }).collect(),
    };
    for row in &report.rows {
        say!(
            "j = {}: I = {:.15e}  b = {:.15e}  err = {:.1e}{}",
            row.j,
            row.integral,
            row.b,
            row.error,
            if row.converged { "" } else { "  (not converged)" }
        );
    }
    for kv in &report.c {
        say!("c_{} = {:.15e}", kv.key, kv.value);
    }
    write_json(&out.join("coeffs.json"), &report)
}

/// Writes `spectrum.json`, reusing the cache when possible.
pub fn spectrum(cfg: &RunConfig, out: &Path) -> Result<()> {
    let (spec, _) = load_or_compute(cfg)?;
    say!(
        "{} eigenvalues, {} reliable at tolerance {:e} (N = {}, check N = {})",
        spec.eigenvalues.len(),
        spec.reliable_count,
        cfg.tolerances.eigen,
        spec.basis_size,
        spec.check_basis_size
    );
    for (n, l) in spec.eigenvalues.iter().take(5).enumerate() {
        say!("lambda_{} = {l:.15}", n + 1);
    }
    write_json(&out.join("spectrum.json"), &spec)
}

#[derive(Serialize)]
struct AsymptoticReport {
    order: usize,
    /// First nonzero key beyond `order`; absent when the expansion stops.
    predicted_key: Option<usize>,
    predicted_exponent: Option<f64>,
    predicted_coefficient: Option<f64>,
    max_abs_residual: f64,
    fit: Option<FitResult>,
    failure: Option<String>,
    passed: bool,
}

fn asymptotics(cfg: &RunConfig, spec: &Spectrum, c: &HalfPowerSeries, order: usize, out: &Path) -> Result<AsymptoticReport> {
    let rows = asymptotic_residual(spec, c, order)?;
    let mut csv = Vec::new();
    write_residual_csv(&mut csv, &rows).expect("in-memory write");
    write_atomic(&out.join(format!("residuals_j{order}.csv")), &csv)?;
    let max_abs_residual = rows.iter().map(|&(_, r)| r.abs()).fold(0.0, f64::max);
    let key = (order + 1..=c.trunc()).find(|&k| c.get(k) != 0.0);
    let mut report = AsymptoticReport {
        order,
        predicted_key: key,
        predicted_exponent: key.map(|k| -(k as f64) / 2.0),
        predicted_coefficient: key.map(|k| c.get(k)),
        max_abs_residual,
        fit: None,
        failure: None,
        passed: false,
    };
    let Some(key) = key else {
        report.passed = max_abs_residual <= cfg.tolerances.eigen;
        if !report.passed {
            report.failure = Some(format!("residual {max_abs_residual:e} with no remaining expansion terms"));
        }
        return Ok(report);
    };
    match fit_next_coefficient(&rows, key as f64 / 2.0, &cfg.fit_options()) {
        Ok(fit) => {
            let slope_err = (fit.exponent_estimate + key as f64 / 2.0).abs();
            let coef_err = (fit.coefficient_estimate / c.get(key) - 1.0).abs();
            let mut problems = Vec::new();
            if slope_err > cfg.tolerances.fit_slope {
                problems.push(format!("slope off by {slope_err:.3}"));
            }
            if coef_err > cfg.tolerances.fit_coefficient {
                problems.push(format!("coefficient off by {:.2}%", 100.0 * coef_err));
            }
            report.passed = problems.is_empty();
            report.failure = (!problems.is_empty()).then(|| problems.join("; "));
            report.fit = Some(fit);
        }
        Err(e) => report.failure = Some(e.to_string()),
    }
    Ok(report)
}

#[derive(Serialize)]
struct HeatPoint {
    t: f64,
    trace: f64,
    expansion: f64,
    mismatch: f64,
}

#[derive(Serialize)]
struct HeatReport {
    order: usize,
    points: Vec<HeatPoint>,
    slope: Option<f64>,
    min_slope: f64,
    failure: Option<String>,
    passed: bool,
}

fn heat(cfg: &RunConfig, spec: &Spectrum, b: &BCoeffs, c: &HalfPowerSeries, out: &Path) -> Result<HeatReport> {
    let order = cfg.heat_trace.order;
    let mut points = Vec::new();
    let mut failure = None;
    for t in cfg.heat_times() {
        match heat_trace_delta(spec, c, t) {
            Ok(trace) => {
                let expansion = heat_expansion_rhs(b, t, order)?;
                points.push(HeatPoint { t, trace, expansion, mismatch: trace - expansion });
            }
            Err(e) => {
                failure = Some(e.to_string());
                break;
            }
        }
    }
    let mut csv = String::from("t,trace,expansion,mismatch\n");
    for p in &points {
        csv.push_str(&format!("{},{:e},{:e},{:e}\n", p.t, p.trace, p.expansion, p.mismatch));
    }
    write_atomic(&out.join("heat_trace.csv"), csv.as_bytes())?;
    let mut report = HeatReport { order, points, slope: None, min_slope: cfg.heat_trace.min_slope, failure, passed: false };
    if report.failure.is_some() {
        return Ok(report);
    }
    if report.points.iter().all(|p| p.mismatch == 0.0) {
        report.passed = true;
        return Ok(report);
    }
    let usable: Vec<(f64, f64)> = report
        .points
        .iter()
        .filter(|p| p.mismatch != 0.0)
        .map(|p| (p.t.ln(), p.mismatch.abs().ln()))
        .collect();
    if usable.len() < 2 {
        report.failure = Some("fewer than two nonzero mismatches".into());
        return Ok(report);
    }
    let n = usable.len() as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / n;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    report.slope = Some(slope);
    report.passed = slope >= cfg.heat_trace.min_slope;
    if !report.passed {
        report.failure = Some(format!("slope {slope:.3} below {}", cfg.heat_trace.min_slope));
    }
    Ok(report)
}

#[derive(Serialize)]
struct VerifyReport {
    which: Which,
    potential_id: String,
    reliable_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    asymptotics: Option<Vec<AsymptoticReport>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    traces: Option<Vec<TraceReport>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    heat_trace: Option<HeatReport>,
    passed: bool,
}

fn status(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Runs the selected checks, writes `verify.json` plus CSV streams, and returns overall success.
pub fn verify(cfg: &RunConfig, which: Which, out: &Path) -> Result<bool> {
    let (b, c) = coefficients(cfg)?;
    let (spec, _) = load_or_compute(cfg)?;
    let wants = |w: Which| which == Which::All || which == w;
    let mut report = VerifyReport {
        which,
        potential_id: cfg.potential.id(),
        reliable_count: spec.reliable_count,
        asymptotics: None,
        traces: None,
        heat_trace: None,
        passed: true,
    };
    say!("reliable eigenvalues: {} of {}", spec.reliable_count, spec.eigenvalues.len());

    if wants(Which::Asymptotics) {
        let mut reports = Vec::new();
        for order in [1, 3] {
            let r = asymptotics(cfg, &spec, &c, order, out)?;
            match &r.fit {
                Some(fit) => say!(
                    "asymptotics J = {order}: {} slope {:.3} (predicted {:.1}), coefficient {:.6e} (predicted {:.6e})",
                    status(r.passed),
                    fit.exponent_estimate,
                    r.predicted_exponent.unwrap_or(0.0),
                    fit.coefficient_estimate,
                    r.predicted_coefficient.unwrap_or(0.0)
                ),
                None => say!("asymptotics J = {order}: {} max |residual| {:.3e}", status(r.passed), r.max_abs_residual),
            }
            if let Some(f) = &r.failure {
                say!("    {f}");
            }
            report.passed &= r.passed;
            reports.push(r);
        }
        report.asymptotics = Some(reports);
    }

    if wants(Which::Traces) {
        let mut reports = Vec::new();
        for (i, &tol) in cfg.tolerances.trace.iter().enumerate() {
            let r = trace_identity(i + 1, &spec, &c, tol)?;
            say!(
                "trace k = {}: {} residual {:.3e}, bound {:.3e}, tolerance {:.1e}{}",
                r.k,
                status(r.passed()),
                r.residual,
                r.tail_error_bound,
                r.tolerance,
                if r.flagged { " (flagged: bound not below tolerance)" } else { "" }
            );
            report.passed &= r.passed();
            reports.push(r);
        }
        report.traces = Some(reports);
    }

    if wants(Which::HeatTrace) {
        let r = heat(cfg, &spec, &b, &c, out)?;
        match r.slope {
            Some(s) => say!("heat trace: {} mismatch slope {s:.3} (minimum {})", status(r.passed), r.min_slope),
            None => say!("heat trace: {}", status(r.passed)),
        }
        if let Some(f) = &r.failure {
            say!("    {f}");
        }
        report.passed &= r.passed;
        report.heat_trace = Some(r);
    }

    write_atomic(&out.join("config.json"), cfg.to_json().as_bytes())?;
    write_json(&out.join("verify.json"), &report)?;
    Ok(report.passed)
}
