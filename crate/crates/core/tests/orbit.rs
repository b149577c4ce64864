use std::f64::consts::{FRAC_PI_2, PI};

use merolab::orbit::{
    convergence_order, iterate, iterate_with, real_orbit, IterParams, RealNh, RealVerdict, Verdict,
    MAX_STORED,
};
use merolab::{Cx, MeromorphicMap, OrbitError};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Cx {
    Cx::new(re, im)
}

/// Bisection root of a continuous function with a sign change on [a, b].
fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (f(m) > 0.0) == (fa > 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[test]
fn fixed_seed_converges_at_step_zero() {
    let m = MeromorphicMap::nf();
    for k in [-3, 0, 2] {
        let z = c(k as f64 * PI, 0.0);
        let o = iterate(&m, z, 100, 1e8);
        assert_eq!(o.verdict, Verdict::ConvergedTo { target: o.last(), period: 1 });
        assert_eq!(o.steps, 1);
        assert_eq!(o.points[0], z);
        assert!((o.last() - z).norm() < 1e-14);
    }
}

#[test]
fn pole_seed_hits_pole_immediately() {
    let o = iterate(&MeromorphicMap::nf(), c(FRAC_PI_2, 0.0), 100, 1e8);
    assert_eq!(o.verdict, Verdict::PoleHit { at_step: 0 });
    assert_eq!(o.points, vec![c(FRAC_PI_2, 0.0)]);
}

#[test]
fn ng_halfline_drifts_down_without_reaching_the_radius() {
    // the drift per step is about 2 e^{2y}, so the orbit keeps falling
    // but never leaves the escape radius within the budget
    let m = MeromorphicMap::ng();
    let o = iterate_with(&m, c(FRAC_PI_2, -5.0), &IterParams::for_map(&m));
    assert_eq!(o.verdict, Verdict::Undecided);
    for w in o.points.windows(2) {
        assert!(w[1].im < w[0].im);
        assert!((w[1].re - FRAC_PI_2).abs() < 1e-9);
    }
}

#[test]
fn ng_upper_half_plane_escapes() {
    let m = MeromorphicMap::ng();
    let o = iterate_with(&m, c(0.3, 5.0), &IterParams::for_map(&m));
    assert!(matches!(o.verdict, Verdict::Escaped { .. }), "{:?}", o.verdict);
    assert!(o.last().im > 900.0);
}

#[test]
fn nh_converges_to_real_root() {
    let m = MeromorphicMap::nh_real(0.0, 1.0).unwrap();
    let o = iterate(&m, c(0.0, 0.0), 100, 1e8);
    let Verdict::ConvergedTo { target, period } = o.verdict else { panic!("{:?}", o.verdict) };
    assert_eq!(period, 1);
    assert!((target - c(-0.567_143_290_409_783_8, 0.0)).norm() < 1e-12);
}

#[test]
fn orders_of_convergence() {
    let nf = MeromorphicMap::nf();
    for k in [-2, 0, 1, 4] {
        let o = iterate(&nf, c(k as f64 * PI + 0.1, 0.0), 100, 1e8);
        let rho = convergence_order(&o).unwrap();
        assert!((2.7..=3.3).contains(&rho), "k={k} rho={rho}");
    }
    let nh = MeromorphicMap::nh_real(0.0, 1.0).unwrap();
    let o = iterate(&nh, c(0.5, 0.3), 100, 1e8);
    let rho = convergence_order(&o).unwrap();
    assert!((1.8..=2.6).contains(&rho), "rho={rho}");

    let fixed = iterate(&nf, c(0.0, 0.0), 10, 1e8);
    assert_eq!(convergence_order(&fixed), Err(OrbitError::InsufficientData));
    let esc = iterate(&MeromorphicMap::ng(), c(0.0, 5.0), 2000, 1e3);
    assert_eq!(convergence_order(&esc), Err(OrbitError::NotConverged));
}

#[test]
fn error_table_shows_cubic_contraction() {
    // e_{n+1} / e_n^3 should settle near |N_f'''(0)|/6 = 1/3
    let nf = MeromorphicMap::nf();
    let o = iterate(&nf, c(0.1, 0.0), 100, 1e8);
    let e: Vec<f64> = o.points.iter().map(|z| z.norm()).collect();
    let q = e[1] / e[0].powi(3);
    assert!((q - 1.0 / 3.0).abs() < 0.02, "{q}");
}

#[test]
fn long_orbits_are_thinned() {
    let m = MeromorphicMap::ng();
    let o = iterate_with(&m, c(FRAC_PI_2, -3.0), &IterParams::for_map(&m).with_max_iter(10_000));
    assert_eq!(o.verdict, Verdict::Undecided);
    assert_eq!(o.points.len(), MAX_STORED);
    let om = o.omitted.unwrap();
    assert_eq!(om.count + MAX_STORED, 10_001);
    assert_eq!(o.step_of(o.points.len() - 1), 10_000);
    // the tail is still a genuine orbit segment
    let i = om.head_end + 1;
    assert_eq!(m.eval(o.points[i]).unwrap(), o.points[i + 1]);
}

#[test]
fn csv_export() {
    let o = iterate(&MeromorphicMap::nf(), c(0.1, 0.0), 100, 1e8);
    let csv = o.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "n,re,im,abs,verdict");
    assert_eq!(lines.len(), o.points.len() + 1);
    assert!(lines[1].ends_with(','));
    assert!(lines.last().unwrap().contains("converged"));
}

#[test]
fn real_orbit_cases() {
    let m = MeromorphicMap::nh_real(0.0, 1.0).unwrap();
    let r = real_orbit(&m, 0.0, 200).unwrap();
    let c0 = bisect(|x| x.exp() + x, -1.0, 0.0);
    let RealVerdict::MonotoneTo { limit } = r.verdict else { panic!("{:?}", r.verdict) };
    assert!((limit - c0).abs() < 1e-12);

    let m = MeromorphicMap::nh_real(-1.0, -1.0).unwrap();
    let r = real_orbit(&m, -1.0, 500).unwrap();
    let RealVerdict::MonotoneTo { limit } = r.verdict else { panic!("{:?}", r.verdict) };
    assert!(limit.abs() < 1e-12, "{limit}");

    let m = MeromorphicMap::nh_real(-5.0, -1.0).unwrap();
    assert_eq!(real_orbit(&m, 0.0, 10), Err(OrbitError::RealPoleCrossing { step: 0 }));

    let m = MeromorphicMap::nh(c(0.0, 1.0), c(1.0, 0.0)).unwrap();
    assert_eq!(real_orbit(&m, 0.0, 10), Err(OrbitError::NotRealNh));
    assert_eq!(real_orbit(&MeromorphicMap::nf(), 0.0, 10), Err(OrbitError::NotRealNh));
}

proptest! {
    #[test]
    fn orbit_is_deterministic_and_prefix_closed(
        x in -6.0..6.0f64, y in -6.0..6.0f64, pick in 0usize..4, m1 in 1usize..60, extra in 1usize..60
    ) {
        let map = match pick {
            0 => MeromorphicMap::nf(),
            1 => MeromorphicMap::ng(),
            2 => MeromorphicMap::nh_real(1.0, -2.0).unwrap(),
            _ => MeromorphicMap::fh(),
        };
        let z = c(x, y);
        let a = iterate(&map, z, m1, 1e8);
        prop_assert_eq!(&a, &iterate(&map, z, m1, 1e8));
        let b = iterate(&map, z, m1 + extra, 1e8);
        if a.verdict == Verdict::Undecided {
            prop_assert_eq!(&a.points[..], &b.points[..a.points.len()]);
        } else {
            prop_assert_eq!(&a.points, &b.points);
            prop_assert_eq!(a.verdict, b.verdict);
        }
        prop_assert_eq!(a.points[0], z);
        for w in a.points.windows(2) {
            prop_assert_eq!(map.eval(w[0]).unwrap(), w[1]);
        }
    }

    #[test]
    fn converged_targets_are_fixed(x in -6.0..6.0f64, y in -2.0..2.0f64, pick in 0usize..3) {
        let map = match pick {
            0 => MeromorphicMap::nf(),
            1 => MeromorphicMap::nh_real(0.0, 1.0).unwrap(),
            _ => MeromorphicMap::nh_real(-5.0, -1.0).unwrap(),
        };
        let o = iterate(&map, c(x, y), 2000, 1e8);
        if let Verdict::ConvergedTo { target, period } = o.verdict {
            prop_assert!((o.last() - target).norm() < 1e-10);
            if period == 1 {
                prop_assert!((map.eval(target).unwrap() - target).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn ng_halflines_fall_strictly(k in -4i64..4, y in -12.0..-0.2f64) {
        let m = MeromorphicMap::ng();
        let x = FRAC_PI_2 + k as f64 * PI;
        let o = iterate_with(&m, c(x, y), &IterParams::for_map(&m).with_max_iter(300));
        prop_assert_eq!(o.verdict, Verdict::Undecided);
        for w in o.points.windows(2) {
            prop_assert!((w[1].re - x).abs() < 1e-9);
            prop_assert!(w[1].im < w[0].im);
        }
    }

    #[test]
    fn real_map_matches_complex_map(a in -6.0..6.0f64, b in 0.05..3.0f64, neg in any::<bool>(), t in -10.0..10.0f64) {
        let b = if neg { -b } else { b };
        let f = RealNh::new(a, b).unwrap();
        let m = MeromorphicMap::nh_real(a, b).unwrap();
        if let (Some(r), Ok(z)) = (f.eval(t), m.eval(c(t, 0.0))) {
            prop_assert!((r - z.re).abs() <= 1e-10 * r.abs().max(1.0));
            prop_assert!(z.im.abs() <= 1e-12 * r.abs().max(1.0));
        }
    }
}
