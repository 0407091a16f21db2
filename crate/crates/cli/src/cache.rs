use std::fs;
use std::path::{Path, PathBuf};

use oscitrace::potential::Potential;
use oscitrace::spectra::{compute_spectrum_with_check, Spectrum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::Result;
use crate::output::write_json;

/// Bumped whenever the Galerkin discretisation changes its numbers.
const SPECTRUM_FORMAT: &str = "galerkin-hermite-1";

#[derive(Serialize)]
struct SpectrumKey<'a> {
    format: &'static str,
    potential: &'a Potential,
    basis_size: usize,
    check_basis_size: usize,
    eigen_count: usize,
    eigen_tol: f64,
}

/// Hex SHA-256 of everything that determines a cached spectrum.
pub fn spectrum_key(cfg: &RunConfig) -> String {
    let key = SpectrumKey {
        format: SPECTRUM_FORMAT,
        potential: &cfg.potential,
        basis_size: cfg.basis_size,
        check_basis_size: cfg.check_basis_size,
        eigen_count: cfg.eigen_count,
        eigen_tol: cfg.tolerances.eigen,
    };
    let text = serde_json::to_string(&key).expect("cache key serializes");
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn spectrum_path(dir: &Path, key: &str) -> PathBuf {
    dir.join(format!("spectrum-{key}.json"))
}

/// Loads the cached spectrum for `cfg` or computes and stores it; the flag is true on a hit.
pub fn load_or_compute(cfg: &RunConfig) -> Result<(Spectrum, bool)> {
    let dir = cfg.resolved_cache_dir();
    let path = spectrum_path(&dir, &spectrum_key(cfg));
    if let Ok(text) = fs::read_to_string(&path) {
        match serde_json::from_str::<Spectrum>(&text) {
            Ok(spec) if spec.potential_id == cfg.potential.id() => {
                eprintln!("cache hit: {}", path.display());
                return Ok((spec, true));
            }
            _ => eprintln!("cache entry {} unreadable, recomputing", path.display()),
        }
    } else {
        eprintln!("cache miss: computing spectrum (N = {}, check N = {})", cfg.basis_size, cfg.check_basis_size);
    }
    let spec = compute_spectrum_with_check(
        &cfg.potential,
        cfg.basis_size,
        cfg.check_basis_size,
        cfg.eigen_count,
        cfg.tolerances.eigen,
    )?;
    write_json(&path, &spec)?;
    Ok((spec, false))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_tracks_inputs() {
        let base = RunConfig::default();
        let k = spectrum_key(&base);
        assert_eq!(k.len(), 64);
        assert_eq!(k, spectrum_key(&base.clone()));
        let mut other = base.clone();
        other.basis_size += 2;
        assert_ne!(spectrum_key(&other), k);
        let mut other = base.clone();
        other.potential = Potential::zero();
        assert_ne!(spectrum_key(&other), k);
        let mut other = base.clone();
        other.tolerances.trace[0] = 0.5;
        other.output_dir = "elsewhere".into();
        assert_eq!(spectrum_key(&other), k);
    }
}
