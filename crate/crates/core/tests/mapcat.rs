use std::f64::consts::{FRAC_PI_2, PI};

use merolab::mapcat::{ng_critical_height, MapId, MapSpec, MeromorphicMap, Window};
use merolab::{Cx, EvalError};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Cx {
    Cx::new(re, im)
}

fn nh_family() -> Vec<MeromorphicMap> {
    vec![
        MeromorphicMap::nh_real(0.0, 1.0).unwrap(),
        MeromorphicMap::nh_real(2.0, 1.0).unwrap(),
        MeromorphicMap::nh_real(-5.0, -1.0).unwrap(),
        MeromorphicMap::nh_real(-1.0, -1.0).unwrap(),
        MeromorphicMap::nh(c(2.0, 1.0), c(-0.5, 0.3)).unwrap(),
    ]
}

fn all_maps() -> Vec<MeromorphicMap> {
    let mut v = vec![
        MeromorphicMap::nf(),
        MeromorphicMap::ng(),
        MeromorphicMap::fh(),
        MeromorphicMap::gfh(),
    ];
    v.extend(nh_family());
    v
}

/// Central difference with step `h`.
fn fd(f: impl Fn(Cx) -> Result<Cx, EvalError>, z: Cx, h: f64) -> Option<Cx> {
    let a = f(z + h).ok()?;
    let b = f(z - h).ok()?;
    Some((a - b) / (2.0 * h))
}

#[test]
fn nh_eval_anchor() {
    let m = MeromorphicMap::nh_real(0.0, 1.0).unwrap();
    let v = m.eval(c(0.0, 0.0)).unwrap();
    assert!((v - c(-0.5, 0.0)).norm() < 1e-15);
}

#[test]
fn nf_fixed_points_and_pole() {
    let m = MeromorphicMap::nf();
    for k in -10..=10 {
        let z = c(k as f64 * PI, 0.0);
        assert!((m.eval(z).unwrap() - z).norm() < 1e-14);
        assert!(m.deriv(z).unwrap().norm() < 1e-12);
        assert!(m.second_deriv(z).unwrap().norm() < 1e-10);
    }
    assert_eq!(m.eval(c(FRAC_PI_2, 0.0)), Err(EvalError::PoleHit));
    assert_eq!(m.eval(c(-3.0 * FRAC_PI_2, 0.0)), Err(EvalError::PoleHit));
}

#[test]
fn derivatives_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
    for m in all_maps() {
        let mut checked = 0;
        while checked < 200 {
            let z = c(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let h = 1e-5;
            let (Ok(d1), Ok(d2)) = (m.deriv(z), m.second_deriv(z)) else {
                continue;
            };
            // skip the neighbourhood of poles where differences are ill-conditioned
            if !m.poles_in_window(&Window::square(z, 0.05).unwrap()).is_empty() {
                continue;
            }
            let f1 = fd(|w| m.eval(w), z, h).unwrap();
            let f2 = fd(|w| m.deriv(w), z, h).unwrap();
            let s1 = d1.norm().max(1.0);
            let s2 = d2.norm().max(1.0);
            assert!((f1 - d1).norm() < 1e-6 * s1, "{:?} z={z} {f1} vs {d1}", m.id());
            assert!((f2 - d2).norm() < 1e-6 * s2, "{:?} z={z} {f2} vs {d2}", m.id());
            checked += 1;
        }
    }
}

#[test]
fn nh_second_derivative_matches_composite_formula() {
    // h''/h' + h h'''/h'^2 - 2 h h''^2/h'^3 with h'' = h''' = e^z
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for m in nh_family() {
        let p = m.nh_params().unwrap().clone();
        for _ in 0..200 {
            let z = c(rng.gen_range(-3.0..3.0), rng.gen_range(-4.0..4.0));
            let hp = p.h_prime(z);
            if hp.norm() < 0.1 {
                continue;
            }
            let (h, e) = (p.h(z), z.exp());
            let want = e / hp + h * e / (hp * hp) - 2.0 * h * e * e / (hp * hp * hp);
            let got = m.second_deriv(z).unwrap();
            assert!((got - want).norm() < 1e-9 * want.norm().max(1.0), "z={z}");
        }
    }
}

#[test]
fn nh_newton_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for m in nh_family() {
        let p = m.nh_params().unwrap().clone();
        for _ in 0..500 {
            let z = c(rng.gen_range(-6.0..6.0), rng.gen_range(-8.0..8.0));
            let hp = p.h_prime(z);
            if hp.norm() <= 1e-6 {
                continue;
            }
            let want = z - p.h(z) / hp;
            let got = m.eval(z).unwrap();
            assert!((got - want).norm() < 1e-10 * want.norm().max(1.0), "z={z}");
        }
    }
}

#[test]
fn nh_large_real_part_uses_exponential_form() {
    let m = MeromorphicMap::nh_real(0.0, 1.0).unwrap();
    let z = c(800.0, 0.3);
    let v = m.eval(z).unwrap();
    assert!((v - (z - 1.0)).norm() < 1e-12);
    let z = c(-800.0, 0.3);
    assert!((m.eval(z).unwrap() - c(0.0, 0.0)).norm() < 1e-10);
}

#[test]
fn semiconjugacy_holds_to_relative_precision() {
    let f = MeromorphicMap::fh();
    let g = MeromorphicMap::gfh();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
    for _ in 0..1000 {
        let z = c(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let lhs = f.eval(z).unwrap().exp();
        let rhs = g.eval(z.exp()).unwrap();
        assert!((lhs - rhs).norm() < 1e-12 * rhs.norm().max(1.0), "z={z}");
    }
}

#[test]
fn gfh_fixed_point_has_rotation_multiplier() {
    let g = MeromorphicMap::gfh();
    let MeromorphicMap::Gfh(k) = &g else { unreachable!() };
    assert!((g.eval(k.w0).unwrap() - k.w0).norm() < 1e-13);
    assert!((g.deriv(k.w0).unwrap() - k.lambda).norm() < 1e-13);
    assert!((k.lambda.norm() - 1.0).abs() < 1e-15);
}

#[test]
fn pole_enumerations() {
    let nf = MeromorphicMap::nf();
    let w = Window::new(-4.0, -4.0, 4.0, 4.0).unwrap();
    assert_eq!(nf.poles_in_window(&w), vec![c(-FRAC_PI_2, 0.0), c(FRAC_PI_2, 0.0)]);

    let nh = MeromorphicMap::nh_real(0.0, 1.0).unwrap();
    let w = Window::new(-5.0, -7.0, 5.0, 7.0).unwrap();
    let poles = nh.poles_in_window(&w);
    assert_eq!(poles.len(), 2);
    assert!((poles[0] - c(0.0, -PI)).norm() < 1e-10);
    assert!((poles[1] - c(0.0, PI)).norm() < 1e-10);
    for p in poles {
        assert_eq!(nh.eval(p), Err(EvalError::PoleHit));
    }

    assert!(MeromorphicMap::fh().poles_in_window(&w).is_empty());
    assert!(MeromorphicMap::gfh().poles_in_window(&w).is_empty());

    // removable case: c~ = 0 is not a pole
    let rem = MeromorphicMap::nh_real(-1.0, -1.0).unwrap();
    let poles = rem.poles_in_window(&Window::new(-3.0, -10.0, 3.0, 10.0).unwrap());
    assert!(poles.iter().all(|p| p.norm() > 1.0));
    assert_eq!(poles.len(), 2);
}

#[test]
fn singular_inventories() {
    let ng = MeromorphicMap::ng();
    let s = ng
        .singular_points(&Window::new(0.0, -3.0, PI, 3.0).unwrap())
        .unwrap();
    let y = ng_critical_height();
    assert!((y - (1.0 + 2f64.sqrt()).ln()).abs() < 1e-15);
    assert!((y - 0.8814).abs() < 5e-5);
    assert_eq!(s.critical_points, vec![c(FRAC_PI_2, -y), c(FRAC_PI_2, y)]);
    assert!(s.asymptotic_values.is_empty());

    let nh = MeromorphicMap::nh_real(2.0, 1.0).unwrap();
    let s = nh
        .singular_points(&Window::new(-5.0, -5.0, 5.0, 5.0).unwrap())
        .unwrap();
    assert_eq!(s.asymptotic_values, vec![c(-2.0, 0.0)]);

    let g = MeromorphicMap::gfh();
    let s = g
        .singular_points(&Window::new(-1.0, -2.0, 4.0, 2.0).unwrap())
        .unwrap();
    assert_eq!(s.critical_points, vec![c(0.0, 0.0), c(2.0, 0.0)]);
    assert_eq!(s.asymptotic_values, vec![c(0.0, 0.0)]);

    let f = MeromorphicMap::fh();
    let s = f
        .singular_points(&Window::new(-1.0, -7.0, 1.0, 7.0).unwrap())
        .unwrap();
    assert_eq!(s.critical_points.len(), 3);
    for z in s.critical_points {
        assert!(f.deriv(z).unwrap().norm() < 1e-14);
    }
}

/// Independent root finder: Newton on h from a dense grid of starts.
fn brute_force_zeros(p: &merolab::mapcat::NhParams, w: &Window) -> Vec<Cx> {
    let mut found: Vec<Cx> = Vec::new();
    let n = 60;
    for i in 0..=n {
        for j in 0..=n {
            let mut z = c(
                w.re_min - 2.0 + (w.width() + 4.0) * i as f64 / n as f64,
                w.im_min - 2.0 + (w.height() + 4.0) * j as f64 / n as f64,
            );
            for _ in 0..200 {
                let d = p.h_prime(z);
                if d.norm() < 1e-14 {
                    break;
                }
                z -= p.h(z) / d;
                if !z.is_finite() {
                    break;
                }
            }
            if z.is_finite()
                && p.h(z).norm() < 1e-9
                && w.contains(z)
                && !found.iter().any(|q| (*q - z).norm() < 1e-6)
            {
                found.push(z);
            }
        }
    }
    found
}

#[test]
fn nh_critical_points_complete_and_critical() {
    let w = Window::new(-6.0, -20.0, 6.0, 20.0).unwrap();
    for m in nh_family() {
        let p = m.nh_params().unwrap().clone();
        let s = m.singular_points(&w).unwrap();
        for z in &s.critical_points {
            assert!(p.h(*z).norm() < 1e-10);
            assert!(m.deriv(*z).unwrap().norm() < 1e-8, "{z}");
        }
        let mut oracle = brute_force_zeros(&p, &w);
        if p.is_removable_case() {
            oracle.retain(|z| (*z - p.c_tilde()).norm() > 1e-4);
        }
        assert_eq!(s.critical_points.len(), oracle.len(), "{:?} {:?} {:?}", p, s.critical_points, oracle);
        for z in oracle {
            assert!(s.critical_points.iter().any(|q| (*q - z).norm() < 1e-6));
        }
    }
}

#[test]
fn nh_unit_beta_real_critical_point() {
    let m = MeromorphicMap::nh_real(0.0, 1.0).unwrap();
    let s = m
        .singular_points(&Window::new(-2.0, -1.0, 2.0, 1.0).unwrap())
        .unwrap();
    assert_eq!(s.critical_points.len(), 1);
    assert!((s.critical_points[0] - c(-0.567_143_290_409_783_8, 0.0)).norm() < 1e-12);
}

#[test]
fn map_spec_json_round_trip() {
    let s: MapSpec = serde_json::from_str(r#"{"map":"nh","alpha":[2,0],"beta":[1,0]}"#).unwrap();
    assert_eq!(s.map, MapId::Nh);
    let m = s.build().unwrap();
    assert_eq!(m.spec(), s);
    assert!(serde_json::from_str::<MapSpec>(r#"{"map":"nf","gamma":1}"#).is_err());
    assert!(serde_json::from_str::<MapSpec>(r#"{"map":"xx"}"#).is_err());
    let bad: MapSpec = serde_json::from_str(r#"{"map":"nh","alpha":[0,0],"beta":[0,0]}"#).unwrap();
    assert!(bad.build().is_err());
    let bad: MapSpec = serde_json::from_str(r#"{"map":"nf","alpha":[0,0]}"#).unwrap();
    assert!(bad.build().is_err());
}

fn away_from_tan_poles(z: Cx) -> bool {
    let r = (z.re - FRAC_PI_2).rem_euclid(PI);
    r.min(PI - r) > 1e-3 || z.im.abs() > 1e-3
}

proptest! {
    #[test]
    fn tan_maps_are_pi_equivariant(x in -20.0..20.0f64, y in -20.0..20.0f64, k in -5i32..5) {
        let z = c(x, y);
        prop_assume!(away_from_tan_poles(z));
        let s = k as f64 * PI;
        for m in [MeromorphicMap::nf(), MeromorphicMap::ng()] {
            let a = m.eval(z + s).unwrap();
            let b = m.eval(z).unwrap() + s;
            prop_assert!((a - b).norm() < 1e-10 * (1.0 + z.norm()), "{a} {b}");
        }
    }

    #[test]
    fn nh_real_parameters_commute_with_conjugation(
        x in -8.0..8.0f64, y in -8.0..8.0f64, a in -6.0..6.0f64, b in 0.1..3.0f64, neg in any::<bool>()
    ) {
        let b = if neg { -b } else { b };
        let m = MeromorphicMap::nh_real(a, b).unwrap();
        let z = c(x, y);
        match (m.eval(z), m.eval(z.conj())) {
            (Ok(u), Ok(v)) => prop_assert!((u.conj() - v).norm() <= 1e-12 * u.norm().max(1.0)),
            (Err(e1), Err(e2)) => prop_assert_eq!(e1, e2),
            (u, v) => prop_assert!(false, "asymmetric {:?} {:?}", u, v),
        }
    }

    #[test]
    fn fh_is_equivariant_under_vertical_period(x in -3.0..3.0f64, y in -3.0..3.0f64, k in -4i64..4) {
        let f = MeromorphicMap::fh();
        let z = c(x, y);
        let t = c(0.0, std::f64::consts::TAU * k as f64);
        let a = f.eval(z + t).unwrap();
        let b = f.eval(z).unwrap() + 2.0 * t;
        prop_assert!((a - b).norm() < 1e-11);
    }
}
