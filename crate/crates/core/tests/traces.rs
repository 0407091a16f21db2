use oscitrace::coeffs::BCoeffs;
use oscitrace::potential::Potential;
use oscitrace::series::{invert_expansion, HalfPowerSeries};
use oscitrace::spectra::{unperturbed, Method, Spectrum};
use oscitrace::traces::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn synthetic(c: &HalfPowerSeries, count: usize) -> Spectrum {
    let eig = (1..=count)
        .map(|n| {
            let l0 = unperturbed(n);
            l0 + (1..=c.trunc()).map(|j| c.get(j) * l0.powf(-(j as f64) / 2.0)).sum::<f64>()
        })
        .collect();
    Spectrum::from_eigenvalues(eig, Method::Galerkin, String::new())
}

#[test]
fn unperturbed_spectrum_is_null() {
    let c = HalfPowerSeries::zero(9);
    let spec = synthetic(&c, 300);
    assert!(asymptotic_residual(&spec, &c, 9).unwrap().iter().all(|&(_, r)| r == 0.0));
    assert_eq!(heat_trace_delta(&spec, &c, 0.1).unwrap(), 0.0);
    for k in 1..=3 {
        let r = trace_identity(k, &spec, &c, 1e-3).unwrap();
        assert_eq!(r.residual, 0.0, "k={k}");
        assert_eq!(r.terms.pole_term, 0.0);
    }
}

#[test]
fn synthetic_expansion_has_no_residual() {
    let c = invert_expansion(&[-0.05, 0.01, 0.02, -0.01], 7).unwrap();
    let spec = synthetic(&c, 200);
    let rows = asymptotic_residual(&spec, &c, 7).unwrap();
    assert!(rows.iter().all(|&(_, r)| r.abs() < 1e-13));
    let lower = asymptotic_residual(&spec, &c, 1).unwrap();
    let (n, r) = lower[99];
    let l0 = unperturbed(n);
    let expected: f64 = (2..=7).map(|j| c.get(j) * l0.powf(-(j as f64) / 2.0)).sum();
    assert!((r - expected).abs() < 1e-14);
    assert!(asymptotic_residual(&spec, &c, 8).is_err());
}

#[test]
fn fit_recovers_a_power_law() {
    let rows: Vec<(usize, f64)> = (1..=400).map(|n| (n, 0.3 * unperturbed(n).powf(-1.5))).collect();
    let raw = FitOptions { smoothing_passes: 0, ..FitOptions::default() };
    let fit = fit_next_coefficient(&rows, 1.5, &raw).unwrap();
    assert!((fit.exponent_estimate + 1.5).abs() < 1e-9);
    assert!((fit.coefficient_estimate - 0.3).abs() < 1e-9);
    assert!((fit.free_coefficient - 0.3).abs() < 1e-9);
    let fit = fit_next_coefficient(&rows, 1.5, &FitOptions::default()).unwrap();
    assert!((fit.coefficient_estimate - 0.3).abs() < 1e-12);
    assert!((fit.exponent_estimate + 1.5).abs() < 1e-3);
    assert_eq!(fit.window, (50, 398));
    let zero: Vec<(usize, f64)> = (1..=400).map(|n| (n, 0.0)).collect();
    assert!(fit_next_coefficient(&zero, 1.5, &FitOptions::default()).is_err());
}

#[test]
fn heat_expansion_first_order() {
    let b = BCoeffs::compute(&Potential::reference(), 3).unwrap();
    for t in [0.01, 0.1, 0.5] {
        let rhs = heat_expansion_rhs(&b, t, 1).unwrap();
        let expected = t * b.integral(1) / (4.0 * std::f64::consts::PI * t).sqrt();
        assert!((rhs - expected).abs() < 1e-16);
    }
    assert!(heat_expansion_rhs(&b, 0.1, 4).is_err());
    assert!((unperturbed_heat_trace(1.0) - 0.5 / 1f64.sinh()).abs() < 1e-16);
}

#[test]
fn residual_csv() {
    let mut out = Vec::new();
    write_residual_csv(&mut out, &[(1, 0.5), (2, -2.5e-3)]).unwrap();
    assert_eq!(String::from_utf8(out).unwrap(), "n,residual\n1,5e-1\n2,-2.5e-3\n");
}

#[test]
fn closed_forms_for_small_powers() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let b: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let c = invert_expansion(&b, 11).unwrap();
        for k in 1..=3 {
            assert!(display_check(k, &c).unwrap() < 1e-12);
        }
        assert!(d_derivative(4, -1.0, &c).abs() < 1e-10);
        assert!((d_derivative(6, -2.0, &c) + c.get(1).powi(2)).abs() < 1e-10);
    }
}

#[test]
fn invalid_inputs_rejected() {
    let c = HalfPowerSeries::zero(9);
    let spec = synthetic(&c, 50);
    assert!(trace_identity(0, &spec, &c, 1e-3).is_err());
    assert!(trace_identity(4, &spec, &c, 1e-3).is_err());
    assert!(trace_identity(3, &spec, &HalfPowerSeries::zero(5), 1e-3).is_err());
    assert!(heat_trace_delta(&spec, &c, 0.0).is_err());
    assert!(heat_trace_delta(&spec, &c, -1.0).is_err());
    assert!(display_check(4, &c).is_err());
}
