use std::fs;
use std::path::{Path, PathBuf};

use oscitrace::coeffs::DEFAULT_J;
use oscitrace::diffpoly::DEFAULT_MAX_ORDER;
use oscitrace::potential::Potential;
use oscitrace::quadrature::AdaptiveOptions;
use oscitrace::traces::{FitOptions, MAX_TRACE_POWER};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Environment variable overriding the configured cache directory.
pub const CACHE_ENV: &str = "OSCITRACE_CACHE";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Relative tolerance of the adaptive quadrature for `I_j`.
    pub quadrature: f64,
    /// Largest `|λ(N) − λ(check)|` for an eigenvalue to count as reliable.
    pub eigen: f64,
    /// Trace-identity tolerance per power, starting at `k = 1`.
    pub trace: Vec<f64>,
    /// Allowed deviation of a fitted residual exponent from the predicted one.
    pub fit_slope: f64,
    /// Allowed relative deviation of a fitted residual coefficient from the predicted one.
    pub fit_coefficient: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatTraceConfig {
    /// First point of the dyadic grid `t_min · 2^i ≤ t_max`.
    pub t_min: f64,
    pub t_max: f64,
    /// Number of integrated invariants in the small-`t` expansion.
    pub order: usize,
    /// Smallest acceptable log–log slope of the mismatch.
    pub min_slope: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub potential: Potential,
    pub basis_size: usize,
    pub check_basis_size: usize,
    pub eigen_count: usize,
    pub max_j: usize,
    /// Inclusive `n` window of the residual fits.
    pub fit_window: (usize, usize),
    pub tolerances: Tolerances,
    pub heat_trace: HeatTraceConfig,
    pub output_dir: PathBuf,
    pub cache_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            potential: Potential::reference(),
            basis_size: 1200,
            check_basis_size: 2400,
            eigen_count: 400,
            max_j: DEFAULT_J,
            fit_window: FitOptions::default().window,
            tolerances: Tolerances {
                quadrature: AdaptiveOptions::default().rel_tol,
                eigen: 1e-8,
                trace: vec![1e-3, 1e-3, 1.0],
                fit_slope: 0.3,
                fit_coefficient: 0.01,
            },
            heat_trace: HeatTraceConfig { t_min: 0.02, t_max: 0.2, order: 4, min_slope: 4.0 },
            output_dir: PathBuf::from("out"),
            cache_dir: PathBuf::from(".oscitrace-cache"),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })?;
        Self::from_json(&text)
    }

    /// Canonical pretty form; parsing it back and re-serializing gives the same bytes.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        self.potential.validate()?;
        if self.eigen_count == 0 || 2 * self.eigen_count > self.basis_size {
            return bad(format!("eigen_count {} needs 0 < 2·count ≤ basis_size {}", self.eigen_count, self.basis_size));
        }
        if self.check_basis_size < self.basis_size {
            return bad(format!("check_basis_size {} is below basis_size {}", self.check_basis_size, self.basis_size));
        }
        if self.max_j < 4 || self.max_j > DEFAULT_MAX_ORDER {
            return bad(format!("max_j must be in 4..={DEFAULT_MAX_ORDER}, got {}", self.max_j));
        }
        let t = &self.tolerances;
        if t.trace.is_empty() || t.trace.len() > MAX_TRACE_POWER {
            return bad(format!("tolerances.trace needs 1..={MAX_TRACE_POWER} entries"));
        }
        let positive = [t.quadrature, t.eigen, t.fit_slope, t.fit_coefficient].into_iter().chain(t.trace.iter().copied());
        if positive.into_iter().any(|v| !(v > 0.0 && v.is_finite())) {
            return bad("tolerances must be positive and finite".into());
        }
        let h = &self.heat_trace;
        if !(h.t_min > 0.0 && h.t_max >= h.t_min && h.t_max.is_finite()) {
            return bad(format!("heat_trace needs 0 < t_min ≤ t_max, got [{}, {}]", h.t_min, h.t_max));
        }
        if h.order == 0 || h.order > self.max_j {
            return bad(format!("heat_trace.order must be in 1..={}, got {}", self.max_j, h.order));
        }
        if self.fit_window.0 > self.fit_window.1 {
            return bad(format!("empty fit window {:?}", self.fit_window));
        }
        Ok(())
    }

    pub fn quadrature_options(&self) -> AdaptiveOptions {
        AdaptiveOptions { rel_tol: self.tolerances.quadrature, ..AdaptiveOptions::default() }
    }

    pub fn fit_options(&self) -> FitOptions {
        FitOptions { window: self.fit_window, ..FitOptions::default() }
    }

    /// Cache directory, with [`CACHE_ENV`] taking precedence.
    pub fn resolved_cache_dir(&self) -> PathBuf {
        match std::env::var_os(CACHE_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.cache_dir.clone(),
        }
    }

    /// Dyadic grid `t_min, 2 t_min, 4 t_min, … ≤ t_max`.
    pub fn heat_times(&self) -> Vec<f64> {
        let h = &self.heat_trace;
        (0..).map(|i| h.t_min * 2f64.powi(i)).take_while(|&t| t <= h.t_max * (1.0 + 1e-12)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_byte_identical() {
        let text = RunConfig::default().to_json();
        let parsed = RunConfig::from_json(&text).unwrap();
        assert_eq!(parsed, RunConfig::default());
        assert_eq!(parsed.to_json(), text);
    }

    #[test]
    fn shipped_configs_are_canonical() {
        for name in ["q_ref.json", "zero.json"] {
            let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
            let text = fs::read_to_string(&path).unwrap();
            assert_eq!(RunConfig::from_json(&text).unwrap().to_json(), text, "{name}");
        }
    }

    #[test]
    fn reference_config_matches_defaults() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/q_ref.json");
        assert_eq!(RunConfig::load(&path).unwrap(), RunConfig::default());
    }

    #[test]
    fn invalid_configs_rejected() {
        assert!(RunConfig { eigen_count: 601, ..RunConfig::default() }.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.tolerances.trace = vec![];
        assert!(cfg.validate().is_err());
        assert!(RunConfig { max_j: 3, ..RunConfig::default() }.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.heat_trace.t_min = 0.0;
        assert!(cfg.validate().is_err());
        assert!(RunConfig::from_json("{}").is_err());
        let extra = RunConfig::default().to_json().replacen('{', "{\"surprise\": 1,", 1);
        assert!(RunConfig::from_json(&extra).is_err());
        let bad_radius = RunConfig::default().to_json().replace("\"radius\": 1.0", "\"radius\": -1.0");
        assert!(RunConfig::from_json(&bad_radius).is_err());
    }

    #[test]
    fn dyadic_grid() {
        assert_eq!(RunConfig::default().heat_times(), vec![0.02, 0.04, 0.08, 0.16]);
    }
}
