use oscitrace::potential::*;
use proptest::prelude::*;

fn unit_bump() -> Potential {
    Potential::bump(vec![1.0], 0.0, 1.0).unwrap()
}

#[test]
fn bump_values() {
    let q = unit_bump();
    let jet = q.eval_jet(0.0, 1).unwrap();
    assert!((jet.values[0] - (-1.0f64).exp()).abs() < 1e-16);
    assert_eq!(jet.values[1], 0.0);
    let half = q.eval_jet(0.5, 0).unwrap();
    assert!((half.values[0] - (-4.0f64 / 3.0).exp()).abs() < 1e-16);
    assert!((half.values[0] - 0.263597).abs() < 1e-6);
}

#[test]
fn exterior_jets_vanish() {
    let q = Potential::new(vec![
        BumpTerm { poly: vec![1.0, -2.0], center: -2.0, radius: 1.0 },
        BumpTerm { poly: vec![0.5], center: 3.0, radius: 0.5 },
    ])
    .unwrap();
    for x in [-5.0, -3.0, -1.0, 0.0, 2.5, 3.5, 10.0] {
        assert!(q.eval_jet(x, 12).unwrap().values.iter().all(|&v| v == 0.0), "x = {x}");
    }
}

#[test]
fn supports() {
    let s = unit_bump().support().unwrap();
    assert_eq!((s.lo, s.hi), (-1.0, 1.0));
    let q = Potential::new(vec![
        BumpTerm { poly: vec![1.0], center: -2.0, radius: 1.0 },
        BumpTerm { poly: vec![1.0], center: 3.0, radius: 0.5 },
    ])
    .unwrap();
    let s = q.support().unwrap();
    assert_eq!((s.lo, s.hi), (-3.0, 3.5));
    assert!(Potential::zero().support().is_none());
}

#[test]
fn full_potential_jets() {
    let jet = Potential::zero().v_jet(3.0, 3).unwrap();
    assert_eq!(jet.values, vec![9.0, 6.0, 2.0, 0.0]);
    let q = unit_bump();
    let v = q.v_jet(0.0, 2).unwrap();
    let b = q.eval_jet(0.0, 2).unwrap();
    assert_eq!(v.values[0], (-1.0f64).exp());
    assert_eq!(v.values[1], 0.0);
    assert_eq!(v.values[2], 2.0 + b.values[2]);
    // B''(0) = −2/e from B = exp(−1 − u² − …)
    assert!((b.values[2] + 2.0 * (-1.0f64).exp()).abs() < 1e-14);
    assert_eq!(q.v_jet(1.5, 2).unwrap().values, vec![2.25, 3.0, 2.0]);
}

#[test]
fn order_cap() {
    assert!(unit_bump().eval_jet(0.0, DEFAULT_MAX_JET_ORDER).is_ok());
    assert!(unit_bump().eval_jet(0.0, DEFAULT_MAX_JET_ORDER + 1).is_err());
}

#[test]
fn invalid_terms_rejected() {
    assert!(Potential::bump(vec![1.0], 0.0, 0.0).is_err());
    assert!(Potential::bump(vec![1.0], 0.0, -1.0).is_err());
    assert!(Potential::bump(vec![f64::NAN], 0.0, 1.0).is_err());
    assert!(Potential::from_json(r#"{"terms":[{"poly":[1.0],"center":0.0}]}"#).is_err());
}

#[test]
fn json_round_trip() {
    let text = r#"{"terms":[{"poly":[0.25],"center":0.0,"radius":1.0}]}"#;
    let q = Potential::from_json(text).unwrap();
    assert_eq!(q, Potential::reference());
    assert_eq!(q.to_json(), text);
    assert_eq!(q.id(), Potential::reference().id());
    assert_ne!(q.id(), Potential::zero().id());
}

#[test]
fn maximum_of_reference() {
    assert!((Potential::reference().max_abs() - 0.25 * (-1.0f64).exp()).abs() < 1e-15);
    assert_eq!(Potential::zero().max_abs(), 0.0);
}

#[test]
fn boundary_decay() {
    let q = unit_bump();
    let us: Vec<f64> = (0..200).map(|i| 0.991 + 0.009 * i as f64 / 200.0).collect();
    for k in 0..=4 {
        let mags: Vec<f64> = us.iter().map(|&u| q.eval_jet(u, 4).unwrap().values[k].abs()).collect();
        assert!(mags.iter().all(|m| m.is_finite()));
        assert!(mags.windows(2).all(|w| w[1] <= w[0]), "order {k}");
    }
    for order in [8, 16] {
        for &u in &[0.99, 0.999, 0.9999, 0.99999, 1.0 - 1e-12] {
            assert!(q.eval_jet(u, order).unwrap().values.iter().all(|v| v.is_finite()));
            assert!(q.eval_jet(-u, order).unwrap().values.iter().all(|v| v.is_finite()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn derivatives_match_finite_differences(
        poly in prop::collection::vec(-2.0f64..2.0, 1..4),
        center in -1.0f64..1.0,
        radius in 0.5f64..2.0,
        u in -0.8f64..0.8,
    ) {
        let q = Potential::bump(poly, center, radius).unwrap();
        let x = center + u * radius;
        let h = 1e-5 * radius;
        let order = 6;
        let mid = q.eval_jet(x, order).unwrap().values;
        let hi = q.eval_jet(x + h, order).unwrap().values;
        let lo = q.eval_jet(x - h, order).unwrap().values;
        for k in 0..order {
            let fd = (hi[k] - lo[k]) / (2.0 * h);
            let scale = mid[k + 1].abs().max(mid[k].abs() / radius).max(1e-3);
            prop_assert!((fd - mid[k + 1]).abs() <= 1e-6 * scale, "k={} fd={} jet={}", k, fd, mid[k + 1]);
        }
    }

    #[test]
    fn even_potential_has_even_jet_at_origin(
        a0 in -2.0f64..2.0,
        a2 in -2.0f64..2.0,
        a4 in -2.0f64..2.0,
        radius in 0.5f64..2.0,
    ) {
        let q = Potential::bump(vec![a0, 0.0, a2, 0.0, a4], 0.0, radius).unwrap();
        let v = q.eval_jet(0.0, 12).unwrap().values;
        let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for k in (1..=12).step_by(2) {
            prop_assert!(v[k].abs() <= 1e-14 * max);
        }
    }
}
