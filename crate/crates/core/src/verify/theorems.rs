use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{tolerances, Series, VerificationReport};
use crate::error::VerifyError;
use crate::fatou::{boundary_distance, distance_into_class, inscribed_disk_radius, ComponentProbe};
use crate::mapcat::{Cx, MapId, MeromorphicMap, Window};
use crate::orbit::{iterate_with, IterParams, Verdict};
use crate::psv::build_cloud;

/// Rays used for the boundary distance in `theorem_b_ratio`.
pub const RATIO_RAYS: usize = 32;
/// Windows taller than this are refused, the cloud would not fit in memory.
pub const MAX_CLOUD_EXTENT: f64 = 1e8;

/// The principal `Log(2 - lambda) + 2 pi i k`, a point of a lifted Siegel
/// component of `2 - lambda - Log(2 - lambda) + 2z - e^z`.
pub fn fh_wandering_seed(k: i64) -> Cx {
    let c = crate::mapcat::LiftConsts::new();
    c.log_w0 + Cx::new(0.0, TAU * k as f64)
}

/// Raw orbit `z_0..z_n` by plain evaluation, stopping at the first failure.
fn raw_orbit(map: &MeromorphicMap, seed: Cx, n: usize) -> Vec<Cx> {
    let mut pts = vec![seed];
    let mut z = seed;
    for _ in 0..n {
        match map.eval(z) {
            Ok(w) if w.is_finite() => {
                z = w;
                pts.push(z);
            }
            _ => break,
        }
    }
    pts
}

/// Ratio `a_n / b_n` along the orbit, where `a_n` is the distance from
/// `f^n(seed)` to the nearest postsingular point and `b_n` the distance to
/// the boundary of its class. Passes when the last-quartile median of the
/// ratio falls below the first-quartile median.
pub fn theorem_b_ratio(
    map: &MeromorphicMap,
    seed: Cx,
    n_max: usize,
    cloud_depth: usize,
) -> Result<VerificationReport, VerifyError> {
    if n_max < 2 {
        return Err(VerifyError::PreconditionViolated("n_max must be at least 2".into()));
    }
    let params = IterParams::for_map(map);
    let verdict = iterate_with(map, seed, &params.with_max_iter(n_max)).verdict;
    if let Verdict::ConvergedTo { target, period } = verdict {
        return VerificationReport::new(
            "theorem_b",
            &map.spec(),
            vec![Series::new("n", vec![]), Series::new("ratio", vec![])],
            tolerances(&[("vacuous", 1.0), ("trend_resolution", 1e-6)]),
            format!(
                "orbit converges to {} {:+}i (period {period}); check is vacuous",
                target.re, target.im
            ),
            0,
        );
    }
    if let Some(step) = verdict.terminal_step() {
        if step < n_max / 2 {
            return Err(VerifyError::OrbitTooShort { step });
        }
    }
    let orbit = raw_orbit(map, seed, n_max);
    if orbit.len() <= n_max / 2 {
        return Err(VerifyError::OrbitTooShort {
            step: orbit.len() - 1,
        });
    }
    let window = Window::bounding(&orbit[1..], TAU)
        .ok_or_else(|| VerifyError::PreconditionViolated("empty orbit".into()))?;
    if window.width().max(window.height()) > MAX_CLOUD_EXTENT {
        return Err(VerifyError::SetupInfeasible(format!(
            "orbit spans {} x {}, too large for a postsingular cloud",
            window.width(),
            window.height()
        )));
    }
    let cloud = build_cloud(map, &window, cloud_depth)?;

    let mut ns = Vec::new();
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut ratio = Vec::new();
    let mut skipped = 0usize;
    for (n, z) in orbit.iter().enumerate().skip(1) {
        let (_, an) = cloud.nearest(*z)?;
        let bn = match boundary_distance(map, *z, &params, RATIO_RAYS, TAU) {
            Ok(d) => d.radius,
            Err(crate::error::FatouError::UnlabeledSeed) => {
                skipped += 1;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        ns.push(n as f64);
        a.push(an);
        b.push(bn);
        ratio.push(an / bn);
    }
    let (head, tail) = if ratio.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        super::report::quartile_medians(&ratio)
    };
    let notes = format!(
        "cloud of {} points at depth {cloud_depth}; quartile medians {head:e} -> {tail:e}; {skipped} undecided steps skipped",
        cloud.len()
    );
    VerificationReport::new(
        "theorem_b",
        &map.spec(),
        vec![
            Series::new("n", ns),
            Series::new("a", a),
            Series::new("b", b),
            Series::new("ratio", ratio),
        ],
        tolerances(&[
            ("vacuous", 0.0),
            ("trend_resolution", 1e-6),
            ("rays", RATIO_RAYS as f64),
            ("r_max", TAU),
        ]),
        notes,
        0,
    )
}

/// Geometric radii `r0 * factor^j`, `j = 0..count`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Radii {
    pub r0: f64,
    pub factor: f64,
    pub count: usize,
}

impl Radii {
    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|j| self.r0 * self.factor.powi(j as i32)).collect()
    }
}

impl Default for Radii {
    fn default() -> Self {
        Radii {
            r0: 5.0,
            factor: 1.3,
            count: 11,
        }
    }
}

/// For each radius, the postsingular point `p` nearest the circle
/// `|z| = r` and its distance to the escaping class of `baker_seed`,
/// measured along the segment toward the seed's orbit tail.
pub fn theorem_a_scan(
    map: &MeromorphicMap,
    baker_seed: Cx,
    radii: Radii,
    cloud_depth: usize,
) -> Result<VerificationReport, VerifyError> {
    if !(radii.r0 > 0.0 && radii.factor > 1.0) || radii.count == 0 {
        return Err(VerifyError::PreconditionViolated("radii need r0 > 0, factor > 1, count >= 1".into()));
    }
    let params = IterParams::for_map(map);
    let orbit = iterate_with(map, baker_seed, &params);
    if !matches!(orbit.verdict, Verdict::Escaped { .. }) {
        return Err(VerifyError::PreconditionViolated(format!(
            "seed {} {:+}i does not escape ({})",
            baker_seed.re,
            baker_seed.im,
            orbit.verdict.short()
        )));
    }
    let tail = orbit.last();
    let rs = radii.values();
    let r_top = rs[rs.len() - 1] * radii.factor.sqrt();
    let window = Window::square(Cx::new(0.0, 0.0), 1.1 * r_top)?;
    let cloud = build_cloud(map, &window, cloud_depth)?;
    let probe = ComponentProbe::new(map, baker_seed, &params)?;

    let half = radii.factor.sqrt();
    let mut found = Vec::with_capacity(rs.len());
    for &r in &rs {
        let best = cloud
            .points
            .iter()
            .map(|p| p.z)
            .filter(|z| {
                let m = z.norm();
                m >= r / half && m <= r * half
            })
            .min_by(|x, y| (x.norm() - r).abs().total_cmp(&(y.norm() - r).abs()));
        match best {
            Some(p) => found.push(p),
            None => return Err(VerifyError::NoPointsFound { radius: r }),
        }
    }
    let dists: Vec<f64> = found
        .par_iter()
        .map(|p| distance_into_class(&probe, *p, tail).unwrap_or((tail - p).norm()))
        .collect();
    let ratio: Vec<f64> = found.iter().zip(&dists).map(|(p, d)| d / p.norm()).collect();
    let moduli: Vec<f64> = found.windows(2).map(|w| w[1].norm() / w[0].norm()).collect();
    let notes = format!(
        "cloud of {} points; largest dist/|p| {:e}",
        cloud.len(),
        ratio.iter().copied().fold(0.0, f64::max)
    );
    VerificationReport::new(
        "theorem_a",
        &map.spec(),
        vec![
            Series::new("radius", rs),
            Series::new("p_re", found.iter().map(|p| p.re).collect()),
            Series::new("p_im", found.iter().map(|p| p.im).collect()),
            Series::new("dist", dists),
            Series::new("dist_over_modulus", ratio),
            Series::new("modulus_ratio", moduli),
        ],
        tolerances(&[("max_dist_ratio", 0.2), ("max_modulus_ratio", 2.0)]),
        notes,
        0,
    )
}

/// Inscribed disk radii along the orbit. For `z - tan z` and `z + i + tan z`
/// with a non-escaping seed every radius must stay below `pi + 0.1`; an
/// escaping seed must show growing radii ending above 3.
pub fn corollary_c_disks(
    map: &MeromorphicMap,
    seed: Cx,
    n_max: usize,
) -> Result<VerificationReport, VerifyError> {
    if !matches!(map.id(), MapId::Nf | MapId::Ng) {
        return Err(VerifyError::PreconditionViolated(format!(
            "disk check is defined for nf and ng, not {}",
            map.id().name()
        )));
    }
    let params = IterParams::for_map(map);
    let fixed = map.eval(seed).is_ok_and(|w| (w - seed).norm() <= params.tol_conv);
    if fixed {
        return VerificationReport::new(
            "corollary_c",
            &map.spec(),
            vec![Series::new("radius", vec![])],
            tolerances(&[("vacuous", 1.0), ("growing_rule", 0.0), ("bound", PI + 0.1)]),
            "seed is a fixed point; radii are constant and the check is vacuous".into(),
            0,
        );
    }
    let escaping = matches!(iterate_with(map, seed, &params).verdict, Verdict::Escaped { .. });
    let r_max = if escaping { 100.0 } else { TAU };
    let orbit = raw_orbit(map, seed, n_max);
    let mut radii = Vec::with_capacity(orbit.len());
    let mut lower = 0usize;
    for z in &orbit {
        let d = inscribed_disk_radius(map, *z, &params, r_max)?;
        lower += d.lower_bound as usize;
        radii.push(d.radius);
    }
    let notes = format!(
        "{} rule over {} orbit points; {lower} radii hit r_max",
        if escaping { "growing" } else { "bounded" },
        orbit.len()
    );
    VerificationReport::new(
        "corollary_c",
        &map.spec(),
        vec![Series::new("radius", radii)],
        tolerances(&[
            ("vacuous", 0.0),
            ("growing_rule", escaping as u8 as f64),
            ("bound", PI + 0.1),
            ("min_final", 3.0),
            ("r_max", r_max),
        ]),
        notes,
        0,
    )
}
