use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::report::{tolerances, Series, VerificationReport};
use crate::error::{OrbitError, VerifyError};
use crate::mapcat::{Cx, MeromorphicMap};
use crate::orbit::{real_orbit_of, RealNh, RealVerdict};

/// Samples of `eta(t) = z0 + it`, `t in [-3 pi, 3 pi]`.
pub const WINDING_SAMPLES: usize = 8192;

/// The curve data of the winding argument for `N_h`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindingSetup {
    pub big_r: f64,
    pub m: f64,
    pub l: i64,
    pub z0: Cx,
    pub zeta: Cx,
    pub p: f64,
    pub q: f64,
    /// Radius of the circle traced by `gamma_1`.
    pub r: f64,
}

impl WindingSetup {
    /// `z0 = R + 2 l pi i` with `l = ceil(M e^R / 2 pi)`, so `|z0| / e^R >= M`.
    /// There is no orbit point to align with, so `q = 0`.
    pub fn new(beta: Cx, m: f64, big_r: f64) -> Result<Self, VerifyError> {
        if !(m > 0.0 && big_r > 0.0) || beta == Cx::new(0.0, 0.0) {
            return Err(VerifyError::PreconditionViolated("need M > 0, R > 0, beta != 0".into()));
        }
        let lf = (m * big_r.exp() / TAU).ceil();
        // beyond 2^53 the imaginary part of z0 has no fractional resolution
        if !lf.is_finite() || lf >= 2f64.powi(53) {
            return Err(VerifyError::SetupInfeasible(format!(
                "l = ceil(M e^R / 2 pi) = {lf:e} is out of range"
            )));
        }
        let b = beta.norm();
        if big_r.exp() <= b {
            return Err(VerifyError::PreconditionViolated("need e^R > |beta|".into()));
        }
        let l = lf as i64;
        let z0 = Cx::new(big_r, TAU * l as f64);
        let zeta = z0 / ((2.0 * big_r).exp() / (b * b) - 1.0);
        let r = z0.norm() / (big_r.exp() / b - b * (-big_r).exp());
        Ok(WindingSetup {
            big_r,
            m,
            l,
            z0,
            zeta,
            p: (3.0 * b * m).ln(),
            q: 0.0,
            r,
        })
    }
}

/// Winding number of the closed polygon through `points` about `center`,
/// from the summed principal arguments of consecutive quotients.
pub fn winding_number(points: &[Cx], center: Cx) -> i64 {
    let n = points.len();
    if n < 2 {
        return 0;
    }
    let mut total = 0.0;
    for i in 0..n {
        let a = points[i] - center;
        let b = points[(i + 1) % n] - center;
        total += (b / a).arg();
    }
    (total / TAU).round() as i64
}

/// Evaluates `N_h` along `eta(t) = z0 + it` and splits
/// `N_h(eta) - z0 + 1 - zeta = gamma_1 + gamma_2 + it`.
/// Passes when `|gamma_1|` matches `r` to 1e-6 relative, `|gamma_2| < 0.01 r`
/// and `N_h(eta)` winds around `z0`.
pub fn theorem_d_winding(
    alpha: Cx,
    beta: Cx,
    m: f64,
    big_r: f64,
) -> Result<VerificationReport, VerifyError> {
    let map = MeromorphicMap::nh(alpha, beta)?;
    let s = WindingSetup::new(beta, m, big_r)?;
    let mut image = Vec::with_capacity(WINDING_SAMPLES);
    let mut dev: f64 = 0.0;
    let mut g2max: f64 = 0.0;
    for k in 0..WINDING_SAMPLES {
        let t = -3.0 * PI + 6.0 * PI * k as f64 / (WINDING_SAMPLES - 1) as f64;
        let eta = s.z0 + Cx::new(0.0, t);
        let w = map.eval(eta).map_err(|e| {
            VerifyError::PreconditionViolated(format!("N_h undefined on the curve at t = {t}: {e}"))
        })?;
        let e = Cx::new(big_r, t).exp();
        let g2 = (beta - alpha - Cx::new(0.0, t) * beta) / (beta + e);
        let g1 = w - s.z0 + 1.0 - s.zeta - g2 - Cx::new(0.0, t);
        dev = dev.max((g1.norm() - s.r).abs());
        g2max = g2max.max(g2.norm());
        image.push(w);
    }
    let winding = winding_number(&image, s.z0);
    let notes = format!(
        "l = {}, r = {}, max ||gamma_1| - r| = {dev:e}, max |gamma_2| = {g2max:e}, winding {winding}",
        s.l, s.r
    );
    VerificationReport::new(
        "theorem_d",
        &map.spec(),
        vec![
            Series::new("z0", vec![s.z0.re, s.z0.im]),
            Series::new("zeta", vec![s.zeta.re, s.zeta.im]),
            Series::new("p", vec![s.p]),
            Series::new("q", vec![s.q]),
            Series::new("r", vec![s.r]),
            Series::new("gamma1_max_dev", vec![dev]),
            Series::new("gamma2_max", vec![g2max]),
            Series::new("winding", vec![winding as f64]),
        ],
        tolerances(&[
            ("M", m),
            ("R", big_r),
            ("samples", WINDING_SAMPLES as f64),
            ("gamma1_rel_tol", 1e-6),
            ("gamma2_frac", 0.01),
        ]),
        notes,
        0,
    )
}

/// Parameter region of the real capture result.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaptureCase {
    Outside = 0,
    PositiveBeta = 1,
    Equality = 2,
    Strict = 3,
}

/// `beta (1 - ln(-beta))`, the bound on `alpha` for `beta < 0`.
pub fn capture_bound(beta: f64) -> f64 {
    beta * (1.0 - (-beta).ln())
}

pub fn classify_capture(alpha: f64, beta: f64) -> CaptureCase {
    if beta > 0.0 {
        return CaptureCase::PositiveBeta;
    }
    let bound = capture_bound(beta);
    if (alpha - bound).abs() <= 1e-12 * bound.abs().max(1.0) {
        CaptureCase::Equality
    } else if alpha < bound {
        CaptureCase::Strict
    } else {
        CaptureCase::Outside
    }
}

/// Sign-change bisection; `f(lo)` and `f(hi)` must differ in sign.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Moves `x` by doubling steps in direction `dir` until `f` has the sign `want`.
fn bracket(f: &impl Fn(f64) -> f64, from: f64, dir: f64, want_positive: bool) -> f64 {
    let mut step = 1.0;
    let mut x = from + dir * step;
    while (f(x) > 0.0) != want_positive {
        step *= 2.0;
        x = from + dir * step;
    }
    x
}

/// Classifies `(alpha, beta)` and follows the real orbit of the asymptotic
/// value `-alpha / beta`. Passes when it increases or decreases monotonically
/// to the fixed point the case predicts: the unique real root for `beta > 0`,
/// `1 - alpha / beta` on the boundary curve, and the smaller root `c_0 < pole
/// < c_1` inside the region.
pub fn corollary_e_capture(alpha: f64, beta: f64) -> Result<VerificationReport, VerifyError> {
    let f = RealNh::new(alpha, beta)
        .map_err(|_| VerifyError::PreconditionViolated("need real alpha and beta != 0".into()))?;
    let map = MeromorphicMap::nh_real(alpha, beta)?;
    let h = |x: f64| x.exp() + beta * x + alpha;
    let case = classify_capture(alpha, beta);
    let mut series = vec![Series::new("case", vec![case as u8 as f64])];
    let predicted = match case {
        CaptureCase::PositiveBeta => {
            let lo = bracket(&h, 0.0, -1.0, false);
            let hi = bracket(&h, 0.0, 1.0, true);
            Some(bisect(h, lo, hi))
        }
        CaptureCase::Equality => Some(f.c_tilde),
        CaptureCase::Strict => {
            let p = (-beta).ln();
            let lo = bracket(&h, p, -1.0, true);
            let hi = bracket(&h, p, 1.0, true);
            let c0 = bisect(h, lo, p);
            let c1 = bisect(h, p, hi);
            series.push(Series::new("c1", vec![c1]));
            Some(c0)
        }
        CaptureCase::Outside => None,
    };
    if let Some(p) = f.pole {
        series.push(Series::new("pole", vec![p]));
    }
    if let Some(c) = predicted {
        series.push(Series::new("predicted", vec![c]));
    }
    let u = f.asymptotic_value();
    let (points, monotone, limit, note) = match real_orbit_of(&f, u, 1000) {
        Ok(o) => {
            let last = *o.points.last().unwrap_or(&u);
            match o.verdict {
                RealVerdict::MonotoneTo { limit } => (o.points, 1.0, limit, "monotone".to_string()),
                RealVerdict::NotMonotone => (o.points, 0.0, last, "orbit is not monotone".into()),
                RealVerdict::Diverged => (o.points, 0.0, last, "orbit diverged".into()),
            }
        }
        Err(OrbitError::RealPoleCrossing { step }) => {
            (vec![u], 0.0, u, format!("orbit hit the pole at step {step}"))
        }
        Err(e) => return Err(e.into()),
    };
    let finite: Vec<f64> = points.into_iter().filter(|x| x.is_finite()).collect();
    series.push(Series::new("orbit", finite));
    series.push(Series::new("limit", vec![if limit.is_finite() { limit } else { 0.0 }]));
    series.push(Series::new("monotone", vec![monotone]));
    let notes = match (case, predicted) {
        (CaptureCase::Outside, _) => format!(
            "alpha = {alpha} exceeds beta (1 - ln(-beta)) = {}; outside the capture region",
            capture_bound(beta)
        ),
        (_, Some(c)) => format!("{note}; limit {limit}, predicted {c}"),
        (_, None) => note,
    };
    VerificationReport::new(
        "corollary_e",
        &map.spec(),
        series,
        tolerances(&[("target_tol", 1e-9)]),
        notes,
        0,
    )
}
