//! Pixel classification, basin boundaries and distance-to-boundary estimates.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::FatouError;
use crate::mapcat::{Cx, MeromorphicMap, Window};
use crate::orbit::{iterate_with, IterParams, Verdict};

/// Attractors closer than this are identified.
pub const ATTRACTOR_DEDUP: f64 = 1e-6;
/// Coarse samples along each ray before bisection.
pub const MARCH_STEPS: usize = 64;
/// Bisection steps per ray.
pub const BISECTION_DEPTH: usize = 40;
/// Minimum ray count of `inscribed_disk_radius`.
pub const DISK_RAYS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "index", rename_all = "snake_case")]
pub enum Label {
    Basin(usize),
    Escaped,
    PoleHit,
    Undecided,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FatouGrid {
    pub window: Window,
    pub res_x: usize,
    pub res_y: usize,
    /// Row-major, row 0 at `im_min`.
    pub labels: Vec<Label>,
    /// Sorted by real then imaginary part.
    pub attractors: Vec<Cx>,
}

impl FatouGrid {
    pub fn label(&self, i: usize, j: usize) -> Label {
        self.labels[j * self.res_x + i]
    }

    pub fn pixel_center(&self, i: usize, j: usize) -> Cx {
        pixel_center(&self.window, self.res_x, self.res_y, i, j)
    }
}

pub fn pixel_center(w: &Window, res_x: usize, res_y: usize, i: usize, j: usize) -> Cx {
    Cx::new(
        w.re_min + (i as f64 + 0.5) * w.width() / res_x as f64,
        w.im_min + (j as f64 + 0.5) * w.height() / res_y as f64,
    )
}

/// Representative of an attracting cycle: its smallest point in
/// (re, im) order.
pub fn canonical_cycle_point(map: &MeromorphicMap, target: Cx, period: usize) -> Cx {
    let mut best = target;
    let mut z = target;
    for _ in 1..period {
        match map.eval(z) {
            Ok(w) => z = w,
            Err(_) => break,
        }
        if (z.re, z.im) < (best.re, best.im) {
            best = z;
        }
    }
    best
}

pub fn classify_grid(
    map: &MeromorphicMap,
    window: &Window,
    res_x: usize,
    res_y: usize,
    params: &IterParams,
) -> Result<FatouGrid, FatouError> {
    if res_x < 2 || res_y < 2 {
        return Err(FatouError::BadResolution);
    }
    let verdicts: Vec<Verdict> = (0..res_y)
        .into_par_iter()
        .flat_map_iter(|j| {
            (0..res_x).map(move |i| {
                let z = pixel_center(window, res_x, res_y, i, j);
                match iterate_with(map, z, params).verdict {
                    Verdict::ConvergedTo { target, period } => Verdict::ConvergedTo {
                        target: canonical_cycle_point(map, target, period),
                        period,
                    },
                    v => v,
                }
            })
        })
        .collect();

    let mut targets: Vec<Cx> = verdicts
        .iter()
        .filter_map(|v| match v {
            Verdict::ConvergedTo { target, .. } => Some(*target),
            _ => None,
        })
        .collect();
    targets.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let mut attractors: Vec<Cx> = Vec::new();
    for t in targets {
        if !attractors.iter().any(|a| (a - t).norm() < ATTRACTOR_DEDUP) {
            attractors.push(t);
        }
    }

    let labels = verdicts
        .iter()
        .map(|v| match v {
            Verdict::ConvergedTo { target, .. } => {
                let k = attractors
                    .iter()
                    .position(|a| (a - target).norm() < ATTRACTOR_DEDUP)
                    .expect("target was registered");
                Label::Basin(k)
            }
            Verdict::Escaped { .. } => Label::Escaped,
            Verdict::PoleHit { .. } => Label::PoleHit,
            Verdict::Undecided => Label::Undecided,
        })
        .collect();
    Ok(FatouGrid {
        window: *window,
        res_x,
        res_y,
        labels,
        attractors,
    })
}

/// Pixels with a 4-neighbour of a different label, row-major order.
pub fn julia_pixels(grid: &FatouGrid) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for j in 0..grid.res_y {
        for i in 0..grid.res_x {
            let l = grid.label(i, j);
            let differs = (i > 0 && grid.label(i - 1, j) != l)
                || (i + 1 < grid.res_x && grid.label(i + 1, j) != l)
                || (j > 0 && grid.label(i, j - 1) != l)
                || (j + 1 < grid.res_y && grid.label(i, j + 1) != l);
            if differs {
                out.push((i, j));
            }
        }
    }
    out
}

/// 8-bit RGB for a label.
pub fn label_color(label: Label) -> [u8; 3] {
    match label {
        Label::Basin(k) => hsv_to_rgb((k as f64 * 137.507_764) % 360.0, 0.65, 0.9),
        Label::Escaped => [255, 255, 255],
        Label::PoleHit => [0, 0, 0],
        Label::Undecided => [128, 128, 128],
    }
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [u8; 3] {
    let c = v * s;
    let hp = h / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    let q = |t: f64| ((t + m) * 255.0).round() as u8;
    [q(r), q(g), q(b)]
}

/// RGB bytes with the top image row at `im_max`.
pub fn render_rgb(grid: &FatouGrid) -> Vec<u8> {
    let mut out = Vec::with_capacity(grid.res_x * grid.res_y * 3);
    for j in (0..grid.res_y).rev() {
        for i in 0..grid.res_x {
            out.extend_from_slice(&label_color(grid.label(i, j)));
        }
    }
    out
}

/// Binary PPM (P6) with the same pixel bytes as `render_rgb`.
pub fn render_ppm(grid: &FatouGrid) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", grid.res_x, grid.res_y).into_bytes();
    out.extend(render_rgb(grid));
    out
}

#[derive(Clone, Debug)]
enum ProbeClass {
    Basin { cycle: Vec<Cx> },
    /// Reference orbit and `max(1, |(f^m)'|)` along it.
    Escaped { chain: Vec<Cx>, scale: Vec<f64> },
    PoleHit,
}

/// Decides whether other points share the verdict class of an origin.
///
/// Basin points match by attractor. Escaping points must also shadow the
/// origin's orbit for `companion_steps` steps, so that distinct escaping
/// components are told apart.
#[derive(Clone, Debug)]
pub struct ComponentProbe<'a> {
    map: &'a MeromorphicMap,
    params: IterParams,
    origin: Cx,
    class: ProbeClass,
}

impl<'a> ComponentProbe<'a> {
    pub fn new(map: &'a MeromorphicMap, z: Cx, params: &IterParams) -> Result<Self, FatouError> {
        let class = match iterate_with(map, z, params).verdict {
            Verdict::Undecided => return Err(FatouError::UnlabeledSeed),
            Verdict::PoleHit { .. } => ProbeClass::PoleHit,
            Verdict::ConvergedTo { target, period } => {
                let mut cycle = vec![target];
                let mut t = target;
                for _ in 1..period {
                    match map.eval(t) {
                        Ok(w) => t = w,
                        Err(_) => break,
                    }
                    cycle.push(t);
                }
                ProbeClass::Basin { cycle }
            }
            Verdict::Escaped { .. } => {
                let (chain, scale) = companion_chain(map, z, params);
                ProbeClass::Escaped { chain, scale }
            }
        };
        Ok(ComponentProbe {
            map,
            params: *params,
            origin: z,
            class,
        })
    }

    pub fn origin(&self) -> Cx {
        self.origin
    }

    pub fn contains(&self, w: Cx) -> bool {
        let v = iterate_with(self.map, w, &self.params).verdict;
        match (&self.class, v) {
            (ProbeClass::Basin { cycle }, Verdict::ConvergedTo { target, .. }) => {
                cycle.iter().any(|c| (c - target).norm() < ATTRACTOR_DEDUP)
            }
            (ProbeClass::PoleHit, Verdict::PoleHit { .. }) => true,
            (ProbeClass::Escaped { chain, scale }, Verdict::Escaped { .. }) => {
                let sep = (w - self.origin).norm();
                let bound = self.params.companion_factor * sep;
                let mut x = w;
                for m in 1..chain.len() {
                    x = match self.map.eval(x) {
                        Ok(y) => y,
                        Err(_) => return false,
                    };
                    if (x - chain[m]).norm() > bound * scale[m] {
                        return false;
                    }
                }
                true
            }
            _ => false,
        }
    }
}

fn companion_chain(map: &MeromorphicMap, z: Cx, params: &IterParams) -> (Vec<Cx>, Vec<f64>) {
    let mut chain = vec![z];
    let mut scale = vec![1.0];
    let mut d = 1.0f64;
    let mut x = z;
    for _ in 0..params.companion_steps {
        let (Ok(y), Ok(dx)) = (map.eval(x), map.deriv(x)) else {
            break;
        };
        if !y.is_finite() || y.norm() > params.escape_radius {
            break;
        }
        d *= dx.norm();
        x = y;
        chain.push(x);
        scale.push(d.max(1.0));
    }
    (chain, scale)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceEstimate {
    pub radius: f64,
    /// No boundary was found within `r_max`; the radius is a lower bound.
    pub lower_bound: bool,
}

/// Distance along one ray to the first point of a different class.
fn ray_distance(probe: &ComponentProbe, dir: Cx, r_max: f64) -> Option<f64> {
    let z = probe.origin();
    let mut prev = 0.0;
    for s in 1..=MARCH_STEPS {
        let r = r_max * s as f64 / MARCH_STEPS as f64;
        if !probe.contains(z + dir * r) {
            let (mut lo, mut hi) = (prev, r);
            for _ in 0..BISECTION_DEPTH {
                let mid = 0.5 * (lo + hi);
                if probe.contains(z + dir * mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Some(hi);
        }
        prev = r;
    }
    None
}

/// Minimum over `ray_count` equally spaced rays of the distance to a point
/// of a different class.
pub fn boundary_distance(
    map: &MeromorphicMap,
    z: Cx,
    params: &IterParams,
    ray_count: usize,
    r_max: f64,
) -> Result<DistanceEstimate, FatouError> {
    if ray_count == 0 || !(r_max > 0.0 && r_max.is_finite()) {
        return Err(FatouError::BadRays(format!("rays {ray_count}, r_max {r_max}")));
    }
    let probe = ComponentProbe::new(map, z, params)?;
    let hits: Vec<Option<f64>> = (0..ray_count)
        .into_par_iter()
        .map(|k| {
            let dir = Cx::from_polar(1.0, TAU * k as f64 / ray_count as f64);
            ray_distance(&probe, dir, r_max)
        })
        .collect();
    let mut best: Option<f64> = None;
    for h in hits.into_iter().flatten() {
        best = Some(best.map_or(h, |b| b.min(h)));
    }
    Ok(match best {
        Some(radius) => DistanceEstimate {
            radius,
            lower_bound: false,
        },
        None => DistanceEstimate {
            radius: r_max,
            lower_bound: true,
        },
    })
}

/// Radius of the largest sampled disk about `z` inside one class, using at
/// least 64 rays. A sampling approximation, not a proof.
pub fn inscribed_disk_radius(
    map: &MeromorphicMap,
    z: Cx,
    params: &IterParams,
    r_max: f64,
) -> Result<DistanceEstimate, FatouError> {
    boundary_distance(map, z, params, DISK_RAYS, r_max)
}

/// Distance from `p` toward `target` along the segment to the first point
/// in `probe`'s class, or `None` if the segment never enters it.
pub fn distance_into_class(probe: &ComponentProbe, p: Cx, target: Cx) -> Option<f64> {
    let len = (target - p).norm();
    if probe.contains(p) {
        return Some(0.0);
    }
    if len == 0.0 {
        return None;
    }
    let dir = (target - p) / len;
    let mut prev = 0.0;
    for s in 1..=MARCH_STEPS {
        let r = len * s as f64 / MARCH_STEPS as f64;
        if probe.contains(p + dir * r) {
            let (mut lo, mut hi) = (prev, r);
            for _ in 0..BISECTION_DEPTH {
                let mid = 0.5 * (lo + hi);
                if probe.contains(p + dir * mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Some(hi);
        }
        prev = r;
    }
    None
}
