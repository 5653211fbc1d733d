//! Property suites over randomly drawn models, configurations and rationals.

use proptest::prelude::*;

use depinn::config::{gcd, PeriodicConfiguration};
use depinn::flow::{energy, integrate, rhs, FlowSettings};
use depinn::model::{make_builtin, modify_band, verify_properties, BuiltinSpec, TiltedEnergy};
use depinn::rotation::{aitken, farey_neighbours, mediant_sequence, Side};

fn config(p: i64, offsets: &[f64]) -> PeriodicConfiguration {
    let q = offsets.len();
    let x = offsets.iter().enumerate().map(|(n, d)| n as f64 * p as f64 / q as f64 + d).collect();
    PeriodicConfiguration::new(p, q, x).unwrap()
}

fn offsets() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.3..0.3f64, 1..=4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Ordered initial states stay ordered under the tilted flow.
    #[test]
    fn flow_preserves_order(k in 0.2..3.0f64, force in 0.0..0.2f64, p in 0i64..3, base in offsets(), gap in 0.0..0.3f64) {
        let e = TiltedEnergy::new(make_builtin(&BuiltinSpec::StandardFk { k }).unwrap(), force).unwrap();
        let x = config(p, &base);
        let y = x.shifted(gap);
        let settings = FlowSettings::default();
        let xt = integrate(&x, &e, &settings, 2.0).unwrap().final_config();
        let yt = integrate(&y, &e, &settings, 2.0).unwrap().final_config();
        for (a, b) in xt.values().iter().zip(yt.values()) {
            prop_assert!(b - a >= -10.0 * settings.tol);
        }
    }

    /// The flow commutes with lattice translations.
    #[test]
    fn flow_commutes_with_translation(k in 0.2..3.0f64, p in 0i64..3, base in offsets(), j in -3i64..=3, m in -3i64..=3) {
        let e = TiltedEnergy::new(make_builtin(&BuiltinSpec::StandardFk { k }).unwrap(), 0.05).unwrap();
        let x = config(p, &base);
        let settings = FlowSettings::default();
        let a = integrate(&x.translate(j, m), &e, &settings, 1.5).unwrap().final_config();
        let b = integrate(&x, &e, &settings, 1.5).unwrap().final_config().translate(j, m);
        prop_assert!(a.distance(&b) < 10.0 * settings.tol);
    }

    /// Energy is invariant and the force field equivariant under `T_{j m}`.
    #[test]
    fn energy_and_force_are_translation_invariant(k in 0.2..3.0f64, b in 1.2..3.0f64, p in 0i64..3, base in offsets(), j in -3i64..=3, m in -3i64..=3) {
        let e = TiltedEnergy::untilted(make_builtin(&BuiltinSpec::DoubleWell { k, b }).unwrap());
        let x = config(p, &base);
        let y = x.translate(j, m);
        prop_assert!((energy(&x, &e) - energy(&y, &e)).abs() < 1e-10);
        let (fx, fy) = (rhs(&x, &e), rhs(&y, &e));
        let q = x.q() as i64;
        for n in 0..q {
            let moved = fx[(n - j).rem_euclid(q) as usize];
            prop_assert!((moved - fy[n as usize]).abs() < 1e-10);
        }
    }

    /// Translations compose additively.
    #[test]
    fn translations_compose(p in 0i64..3, base in offsets(), a in -4i64..=4, b in -4i64..=4, c in -4i64..=4, d in -4i64..=4) {
        let x = config(p, &base);
        let lhs = x.translate(a, b).translate(c, d);
        let rhs = x.translate(a + c, b + d);
        prop_assert!(lhs.distance(&rhs) < 1e-12);
    }

    /// Farey neighbours are unimodular and the mediants approach from the
    /// requested side, monotonically.
    #[test]
    fn farey_neighbours_and_mediants(q in 1i64..40, p_raw in 0i64..40) {
        let p = p_raw % (q + 1);
        prop_assume!(gcd(p, q) == 1);
        let pair = farey_neighbours(p, q).unwrap();
        prop_assert_eq!(pair.upper.0 * q - p * pair.upper.1, 1);
        prop_assert_eq!(p * pair.lower.1 - pair.lower.0 * q, 1);
        let omega = p as f64 / q as f64;
        for side in [Side::Plus, Side::Minus] {
            let seq = mediant_sequence(p, q, side, 6).unwrap();
            let dist: Vec<f64> = seq.iter().map(|&(a, b)| a as f64 / b as f64 - omega).collect();
            for w in dist.windows(2) {
                prop_assert!(w[1].abs() < w[0].abs());
            }
            let sign = if side == Side::Plus { 1.0 } else { -1.0 };
            prop_assert!(dist.iter().all(|d| d * sign > 0.0));
        }
    }

    /// Aitken extrapolation is exact on geometric sequences.
    #[test]
    fn aitken_exact_on_geometric(limit in -1.0..1.0f64, c in 0.1..1.0f64, r in 0.1..0.9f64) {
        let s = |n: i32| limit + c * r.powi(n);
        prop_assert!((aitken(s(1), s(2), s(3)) - limit).abs() < 1e-9);
    }

    /// The band extension leaves `h` untouched inside the band and keeps the
    /// twist bound outside it.
    #[test]
    fn band_extension_agrees_inside(k in 0.3..3.0f64, x in 0.0..1.0f64, t in 0.0..1.0f64, far in 0.0..4.0f64) {
        let h = make_builtin(&BuiltinSpec::StandardFk { k }).unwrap();
        let ext = modify_band(&h, -1, 2).unwrap();
        let inside = -1.0 + 3.0 * t;
        prop_assert!((ext.value(x, x + inside) - h.value(x, x + inside)).abs() < 1e-14);
        prop_assert!(ext.eval(x, x + 2.0 + far).h12 <= -h.c() + 1e-12);
        prop_assert!(ext.eval(x, x - 1.0 - far).h12 <= -h.c() + 1e-12);
    }
}

#[test]
fn builtin_models_satisfy_standing_assumptions() {
    let specs = [
        BuiltinSpec::StandardFk { k: 1.0 },
        BuiltinSpec::DoubleWell { k: 0.03, b: 2.0 },
        BuiltinSpec::Bistable { k: 10.0, c1: 0.01, c2: -0.02, s1: 0.0 },
        BuiltinSpec::mane_default(),
    ];
    for spec in specs {
        let report = verify_properties(&make_builtin(&spec).unwrap(), 2000);
        assert!(report.is_valid(), "{spec:?}: {report:?}");
    }
}
