use oscitrace::series::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Plain truncated power series in `μ` for the oracles below.
fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().min(b.len());
    (0..n).map(|k| (0..=k).map(|i| a[i] * b[k - i]).sum()).collect()
}

/// `log(1 + f)` for `f(0) = 0` by the alternating power series.
fn log1p(f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    let mut p = f.to_vec();
    for k in 1..n {
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        out.iter_mut().zip(&p).for_each(|(o, x)| *o += sign * x / k as f64);
        p = mul(&p, f);
    }
    out
}

/// `exp(g)` for `g(0) = 0` by the exponential power series.
fn exp0(g: &[f64]) -> Vec<f64> {
    let n = g.len();
    let mut out = vec![0.0; n];
    out[0] = 1.0;
    let mut p = vec![0.0; n];
    p[0] = 1.0;
    for k in 1..n {
        p = mul(&p, g).iter().map(|x| x / k as f64).collect();
        out.iter_mut().zip(&p).for_each(|(o, x)| *o += x);
    }
    out
}

/// `(1 + f)^a` through log and exp.
fn pow1p(f: &[f64], a: f64) -> Vec<f64> {
    exp0(&log1p(f).iter().map(|x| a * x).collect::<Vec<_>>())
}

/// `u = Σ c_j μ^(j+2)` through `μ^(trunc+2)`.
fn u_series(c: &HalfPowerSeries, trunc: usize) -> Vec<f64> {
    let mut u = vec![0.0; trunc + 3];
    for j in 1..=trunc {
        u[j + 2] = c.get(j);
    }
    u
}

/// `λ/λ⁰ − 1 + Σ b_j λ^(1/2−j)/λ⁰` as a series in `μ`; vanishes for an exact inverse pair.
fn composition_oracle(b: &[f64], c: &HalfPowerSeries, trunc: usize) -> Vec<f64> {
    let u = u_series(c, trunc);
    let mut total = u.clone();
    for (i, &bj) in b.iter().enumerate() {
        let j = i + 1;
        let p = pow1p(&u, 0.5 - j as f64);
        for k in 0..u.len() {
            if k + 2 * j + 1 < u.len() {
                total[k + 2 * j + 1] += bj * p[k];
            }
        }
    }
    total
}

fn random_b(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

#[test]
fn integer_inputs_reproduce_the_table() {
    for b in [[1.0, 0.0, 0.0, 0.0], [2.0, -3.0, 5.0, 7.0], [-1.0, 4.0, -2.0, 3.0], [3.0, 1.0, 1.0, -6.0]] {
        let c = invert_expansion(&b, 9).unwrap();
        let (b1, b2, b3, b4) = (b[0], b[1], b[2], b[3]);
        let expected = [
            -b1,
            0.0,
            -b2,
            -0.5 * b1 * b1,
            -b3,
            -2.0 * b1 * b2,
            -0.625 * b1 * b1 * b1 - b4,
        ];
        for (k, e) in expected.iter().enumerate() {
            assert!((c.get(k + 1) - e).abs() < 1e-12, "b={b:?} c_{}: {} vs {e}", k + 1, c.get(k + 1));
        }
    }
}

#[test]
fn unperturbed_and_limits() {
    let c = invert_expansion(&[0.0; 4], 9).unwrap();
    assert_eq!(c.max_abs(), 0.0);
    assert_eq!(compose_check(&[0.0; 4], &c, 9).unwrap(), 0.0);
    assert!(invert_expansion(&[0.1; 4], 9).is_ok());
    assert!(invert_expansion(&[0.1; 4], 10).is_err());
}

#[test]
fn random_inverse_pairs_compose_to_identity() {
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = random_b(&mut rng, 6);
        for trunc in [3, 7, 9, 11] {
            let c = invert_expansion(&b, trunc).unwrap();
            assert!(compose_check(&b, &c, trunc).unwrap() < 1e-12, "seed {seed} trunc {trunc}");
            let oracle = composition_oracle(&b, &c, trunc);
            assert!(oracle.iter().all(|x| x.abs() < 1e-12), "seed {seed} trunc {trunc}: {oracle:?}");
            let w = wholepower_check(&c.retruncate(trunc.max(6))).unwrap();
            if trunc >= 6 {
                assert!(w.iter().all(|r| r.abs() < 1e-12), "seed {seed}: {w:?}");
            }
        }
    }
}

#[test]
fn compose_check_detects_perturbations() {
    let b = [0.3, -0.2, 0.1, 0.05];
    let mut c = invert_expansion(&b, 9).unwrap();
    c.set(1, c.get(1) + 1e-3);
    assert!(compose_check(&b, &c, 9).unwrap() >= 1e-3);
}

#[test]
fn wholepower_examples() {
    let mut c = HalfPowerSeries::zero(8);
    assert_eq!(wholepower_check(&c).unwrap(), [0.0; 3]);
    c.set(2, 0.1);
    assert_eq!(wholepower_check(&c).unwrap()[0], 0.1);
    assert!(wholepower_check(&HalfPowerSeries::zero(5)).is_err());
}

#[test]
fn truncation_is_consistent() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let b = random_b(&mut rng, 6);
        for trunc in [3, 5, 7, 9] {
            let lo = invert_expansion(&b, trunc).unwrap();
            let hi = invert_expansion(&b, trunc + 2).unwrap();
            for k in 1..=trunc {
                assert!((lo.get(k) - hi.get(k)).abs() < 1e-13);
            }
        }
    }
}

#[test]
fn closed_form_d_values() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let s: f64 = rng.gen_range(-4.0..4.0);
        let c = HalfPowerSeries::from_coeffs((0..=9).map(|k| if k == 0 { 0.0 } else { rng.gen_range(-1.0..1.0) }).collect(), 9);
        let d = d_table(s, &c, 9);
        let g = |k| c.get(k);
        let expected = [
            1.0,
            0.0,
            0.0,
            -s * g(1),
            -s * g(2),
            -s * g(3),
            -s * g(4) + s * (s + 1.0) / 2.0 * g(1) * g(1),
            -s * g(5) + s * (s + 1.0) * g(1) * g(2),
        ];
        for (j, e) in expected.iter().enumerate() {
            assert!((d.get(j) - e).abs() < 1e-12, "s={s} d_{j}");
        }
    }
}

#[test]
fn zero_power_gives_trivial_table() {
    let c = HalfPowerSeries::from_coeffs(vec![0.0, 0.4, 0.0, -0.3, 0.2], 6);
    let d = d_table(0.0, &c, 6);
    assert_eq!(d.get(0), 1.0);
    assert!((1..=6).all(|j| d.get(j) == 0.0));
}

#[test]
fn d_table_matches_log_exp_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..30 {
        let s: f64 = rng.gen_range(-3.0..3.0);
        let b = random_b(&mut rng, 6);
        let c = invert_expansion(&b, 12).unwrap();
        let trunc = 14;
        let mut f = vec![0.0; trunc + 1];
        for j in 1..=trunc - 2 {
            f[j + 2] = c.get(j);
        }
        let oracle = pow1p(&f, -s);
        let d = d_table(s, &c, trunc);
        for j in 0..=trunc {
            assert!((d.get(j) - oracle[j]).abs() < 1e-12, "s={s} j={j}");
        }
    }
}

#[test]
fn pole_index_coefficient_vanishes() {
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let b = random_b(&mut rng, 6);
        let c = invert_expansion(&b, 12).unwrap();
        for k in 1..=5usize {
            let d = d_table(-(k as f64), &c, 2 * k + 2);
            assert!(d.get(2 * k + 2).abs() < 1e-12, "seed {seed} k={k}: {}", d.get(2 * k + 2));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn series_products_commute_and_associate(
        a in prop::collection::vec(-2.0f64..2.0, 8),
        b in prop::collection::vec(-2.0f64..2.0, 8),
        c in prop::collection::vec(-2.0f64..2.0, 8),
    ) {
        let (a, b, c) = (
            HalfPowerSeries::from_coeffs(a, 7),
            HalfPowerSeries::from_coeffs(b, 7),
            HalfPowerSeries::from_coeffs(c, 7),
        );
        let ab = &a * &b;
        let ba = &b * &a;
        let l = &ab * &c;
        let r = &a * &(&b * &c);
        for k in 0..=7 {
            prop_assert!((ab.get(k) - ba.get(k)).abs() < 1e-13);
            prop_assert!((l.get(k) - r.get(k)).abs() < 1e-12);
        }
    }

    #[test]
    fn powers_add_exponents(
        f in prop::collection::vec(-0.5f64..0.5, 9),
        p in -3.0f64..3.0,
        q in -3.0f64..3.0,
    ) {
        let mut f = f;
        f[0] = 1.0;
        let s = HalfPowerSeries::from_coeffs(f, 8);
        let lhs = &s.powf(p).unwrap() * &s.powf(q).unwrap();
        let rhs = s.powf(p + q).unwrap();
        for k in 0..=8 {
            prop_assert!((lhs.get(k) - rhs.get(k)).abs() < 1e-9 * (1.0 + rhs.get(k).abs()));
        }
    }

    #[test]
    fn reversion_for_random_b(b in prop::collection::vec(-1.0f64..1.0, 5), trunc in 1usize..=11) {
        let c = invert_expansion(&b, trunc).unwrap();
        prop_assert!(compose_check(&b, &c, trunc).unwrap() < 1e-12);
    }
}
