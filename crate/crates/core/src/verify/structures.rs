use std::f64::consts::{FRAC_PI_2, FRAC_PI_8, PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::report::{tolerances, Series, VerificationReport};
use crate::error::VerifyError;
use crate::mapcat::{Cx, MapId, MapSpec, MeromorphicMap};

/// Samples `Re N_f` along `Re z = pi/2 + k pi + offset`, `|Im z| in [0.01, 20]`.
/// A nonzero `offset` gives a control line that is not invariant.
pub fn check_invariant_line_nf(
    k: i64,
    samples: usize,
    offset: f64,
) -> Result<VerificationReport, VerifyError> {
    if samples < 10 {
        return Err(VerifyError::PreconditionViolated("samples must be at least 10".into()));
    }
    let m = MeromorphicMap::nf();
    let x = FRAC_PI_2 + k as f64 * PI + offset;
    let mut ts = Vec::with_capacity(samples);
    let mut devs = Vec::with_capacity(samples);
    for i in 0..samples {
        let mut t = -20.0 + 40.0 * i as f64 / (samples - 1) as f64;
        if t.abs() < 0.01 {
            t = 0.01f64.copysign(if t == 0.0 { 1.0 } else { t });
        }
        let w = m.eval(Cx::new(x, t)).map_err(|e| {
            VerifyError::PreconditionViolated(format!("evaluation failed at t = {t}: {e}"))
        })?;
        ts.push(t);
        devs.push((w.re - x).abs());
    }
    let worst = devs.iter().copied().fold(0.0, f64::max);
    let notes = format!("line Re z = {x}; max deviation {worst:e}");
    VerificationReport::new(
        "invariant_line",
        &MapSpec::plain(MapId::Nf),
        vec![Series::new("t", ts), Series::new("deviation", devs)],
        tolerances(&[("max_deviation", 1e-9), ("k", k as f64), ("offset", offset)]),
        notes,
        0,
    )
}

/// Samples the closed strip `|Re z - pi/2 - k pi| <= half_width`,
/// `Im z <= -ln 2 / 2` and the half-line below the center, checking that
/// images land in the open strip and that the half-line moves down.
/// The strip of half-width `pi/8` is invariant; wider strips are controls.
pub fn check_strip_ng(
    k: i64,
    samples: usize,
    half_width: f64,
    seed: u64,
) -> Result<VerificationReport, VerifyError> {
    if samples < 1 || half_width.is_nan() || half_width <= 0.0 {
        return Err(VerifyError::PreconditionViolated("need samples >= 1 and half_width > 0".into()));
    }
    let m = MeromorphicMap::ng();
    let center = FRAC_PI_2 + k as f64 * PI;
    let top = -(2f64.ln()) / 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut strip_pts = vec![
        Cx::new(center - half_width, top),
        Cx::new(center + half_width, top),
        Cx::new(center, top),
    ];
    while strip_pts.len() < samples {
        let x = center + rng.gen_range(-half_width..=half_width);
        let y = top - rng.gen_range(0.0..12.0);
        strip_pts.push(Cx::new(x, y));
    }
    let mut margins = Vec::with_capacity(samples);
    let mut first_violation = None;
    for z in &strip_pts {
        let margin = match m.eval(*z) {
            Ok(w) => (half_width - (w.re - center).abs()).min(top - w.im),
            Err(_) => -1.0,
        };
        if margin <= 0.0 && first_violation.is_none() {
            first_violation = Some(*z);
        }
        margins.push(margin);
    }

    let mut decreases = Vec::with_capacity(samples);
    let mut drifts = Vec::with_capacity(samples);
    for i in 0..samples {
        let y = -0.01 - 14.99 * (i as f64 + 0.5) / samples as f64;
        let z = Cx::new(center, y);
        match m.eval(z) {
            Ok(w) => {
                decreases.push(z.im - w.im);
                drifts.push((w.re - center).abs());
            }
            Err(_) => {
                decreases.push(-1.0);
                drifts.push(f64::MAX);
            }
        }
        if decreases[i] <= 0.0 && first_violation.is_none() {
            first_violation = Some(z);
        }
    }
    let notes = match first_violation {
        Some(z) => format!("first violation at {} {:+}i", z.re, z.im),
        None => format!(
            "half-width {half_width}; min image margin {:e}",
            margins.iter().copied().fold(f64::INFINITY, f64::min)
        ),
    };
    VerificationReport::new(
        "strip",
        &MapSpec::plain(MapId::Ng),
        vec![
            Series::new("image_margin", margins),
            Series::new("halfline_decrease", decreases),
            Series::new("halfline_re_drift", drifts),
        ],
        tolerances(&[
            ("k", k as f64),
            ("half_width", half_width),
            ("max_re_drift", 1e-9),
        ]),
        notes,
        seed,
    )
}

/// The invariant half-width of the strips of `z + i + tan z`.
pub const STRIP_HALF_WIDTH: f64 = FRAC_PI_8;

/// Sample points covering the closed disk: grid points inside plus the
/// boundary circle. Returns the points and the covering mesh radius.
fn disk_samples(c: Cx, r: f64, grid_n: usize) -> (Vec<Cx>, f64) {
    let step = 2.0 * r / (grid_n - 1) as f64;
    let mut pts = Vec::new();
    for j in 0..grid_n {
        for i in 0..grid_n {
            let off = Cx::new(-r + i as f64 * step, -r + j as f64 * step);
            if off.norm() <= r {
                pts.push(c + off);
            }
        }
    }
    let ring = (TAU * r / step).ceil() as usize * 2;
    for k in 0..ring {
        pts.push(c + Cx::from_polar(r, TAU * k as f64 / ring as f64));
    }
    // every disk point lies within one grid step of a sample
    (pts, step)
}

/// Largest sampled `|N''|` on the closed disk.
pub fn sampled_second_deriv_sup(
    map: &MeromorphicMap,
    c: Cx,
    r: f64,
    grid_n: usize,
) -> Result<f64, VerifyError> {
    let (pts, _) = disk_samples(c, r, grid_n.max(2));
    let vals: Result<Vec<f64>, _> = pts
        .par_iter()
        .map(|z| map.second_deriv(*z).map(|d| d.norm()))
        .collect();
    let vals = vals.map_err(|e| VerifyError::PreconditionViolated(format!("disk meets a pole: {e}")))?;
    Ok(vals.into_iter().fold(0.0, f64::max))
}

/// Certified sup of `|N'|` on the closed disk `D(c, r)` from grid samples
/// plus a Lipschitz margin (sampled `|N''|` times the mesh radius), rounded
/// up to a multiple of 1e-6. Passes when below 1/2 for `z - tan z` and
/// below 1 otherwise.
pub fn certify_contraction_disk(
    map: &MeromorphicMap,
    c: Cx,
    r: f64,
    grid_n: usize,
) -> Result<VerificationReport, VerifyError> {
    if r.is_nan() || r <= 0.0 || grid_n < 2 {
        return Err(VerifyError::PreconditionViolated("need r > 0 and grid_n >= 2".into()));
    }
    let fixed = map.eval(c).map(|w| (w - c).norm()).unwrap_or(f64::INFINITY);
    let d0 = map.deriv(c).map(|d| d.norm()).unwrap_or(f64::INFINITY);
    if fixed > 1e-8 || d0 > 1e-8 {
        return Err(VerifyError::PreconditionViolated(format!(
            "{c} is not a superattracting fixed point"
        )));
    }
    let threshold = if map.id() == MapId::Nf { 0.5 } else { 1.0 };
    let (pts, mesh) = disk_samples(c, r, grid_n);
    let vals: Result<Vec<(f64, f64)>, _> = pts
        .par_iter()
        .map(|z| Ok((map.deriv(*z)?.norm(), map.second_deriv(*z)?.norm())))
        .collect();
    let vals = vals.map_err(|e: crate::error::EvalError| {
        VerifyError::PreconditionViolated(format!("disk meets a pole: {e}"))
    })?;
    let sampled = vals.iter().map(|v| v.0).fold(0.0, f64::max);
    let lipschitz = vals.iter().map(|v| v.1).fold(0.0, f64::max);
    let certified = ((sampled + lipschitz * mesh) * 1e6).ceil() / 1e6;
    if sampled < threshold && certified >= threshold {
        return Err(VerifyError::MarginInconclusive {
            sampled,
            certified,
            threshold,
        });
    }
    VerificationReport::new(
        "contraction",
        &map.spec(),
        vec![
            Series::new("center", vec![c.re, c.im]),
            Series::new("radius", vec![r]),
            Series::new("sampled_sup", vec![sampled]),
            Series::new("lipschitz", vec![lipschitz]),
            Series::new("mesh", vec![mesh]),
            Series::new("certified_sup", vec![certified]),
        ],
        tolerances(&[("threshold", threshold), ("grid_n", grid_n as f64)]),
        format!("{} samples; certified sup |N'| = {certified}", pts.len()),
        0,
    )
}

/// `min(1, 1/C)` with `C` the sampled sup of `|N''|` on `D(c, 1)`. On that
/// disk `|N'(z)| <= C |z - c| < 1` at a superattracting `c`.
pub fn contraction_radius(map: &MeromorphicMap, c: Cx, grid_n: usize) -> Result<f64, VerifyError> {
    let big_c = sampled_second_deriv_sup(map, c, 1.0, grid_n)?;
    Ok(if big_c > 1.0 { 1.0 / big_c } else { 1.0 })
}
