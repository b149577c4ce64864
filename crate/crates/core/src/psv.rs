//! Finite truncations of the postsingular set and nearest-point queries.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{EvalError, MapError, PsvError};
use crate::mapcat::{Cx, MapSpec, MeromorphicMap, Window};

/// Points closer than this are merged.
pub const DEDUP_RESOLUTION: f64 = 1e-9;
/// Singular points are collected in the window scaled by this factor.
pub const SEED_DILATION: f64 = 1.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CloudPoint {
    /// Index of the generating singular point in `PostsingularCloud::seeds`.
    pub s_index: usize,
    /// Number of map steps from the singular point.
    pub n: usize,
    pub z: Cx,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutReason {
    PoleHit,
    Overflow,
}

/// An orbit that stopped before `depth`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitCut {
    pub s_index: usize,
    pub at_step: usize,
    pub reason: CutReason,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PostsingularCloud {
    /// Sorted by imaginary then real part.
    pub points: Vec<CloudPoint>,
    pub depth: usize,
    pub window: Window,
    pub source: MapSpec,
    pub seeds: Vec<Cx>,
    pub cuts: Vec<OrbitCut>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CloudSummary {
    pub count: usize,
    pub depth: usize,
    pub window: Window,
}

fn dedup_key(z: Cx) -> (i128, i128) {
    (
        (z.im / DEDUP_RESOLUTION).round() as i128,
        (z.re / DEDUP_RESOLUTION).round() as i128,
    )
}

pub fn build_cloud(
    map: &MeromorphicMap,
    window: &Window,
    depth: usize,
) -> Result<PostsingularCloud, MapError> {
    window.validate()?;
    let seeds = map.singular_points(&window.dilate(SEED_DILATION))?.all();
    let per_seed: Vec<(Vec<CloudPoint>, Option<OrbitCut>)> = seeds
        .par_iter()
        .enumerate()
        .map(|(s_index, &s)| {
            let mut pts = Vec::new();
            let mut cut = None;
            let mut z = s;
            for n in 0..=depth {
                if window.contains(z) {
                    pts.push(CloudPoint { s_index, n, z });
                }
                if n == depth {
                    break;
                }
                match map.eval(z) {
                    Ok(w) => z = w,
                    Err(e) => {
                        let reason = match e {
                            EvalError::PoleHit => CutReason::PoleHit,
                            EvalError::OverflowDomain => CutReason::Overflow,
                        };
                        cut = Some(OrbitCut {
                            s_index,
                            at_step: n,
                            reason,
                        });
                        break;
                    }
                }
            }
            (pts, cut)
        })
        .collect();
    let mut points = Vec::new();
    let mut cuts = Vec::new();
    for (p, c) in per_seed {
        points.extend(p);
        cuts.extend(c);
    }
    points.sort_by(|a, b| {
        dedup_key(a.z)
            .cmp(&dedup_key(b.z))
            .then(a.s_index.cmp(&b.s_index))
            .then(a.n.cmp(&b.n))
    });
    points.dedup_by(|b, a| dedup_key(a.z) == dedup_key(b.z));
    points.sort_by(|a, b| {
        a.z.im
            .total_cmp(&b.z.im)
            .then(a.z.re.total_cmp(&b.z.re))
            .then(a.s_index.cmp(&b.s_index))
    });
    Ok(PostsingularCloud {
        points,
        depth,
        window: *window,
        source: map.spec(),
        seeds,
        cuts,
    })
}

impl PostsingularCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Nearest cloud point by band search over the sorted imaginary parts.
    /// Ties go to the earlier point in sorted order.
    pub fn nearest(&self, z: Cx) -> Result<(Cx, f64), PsvError> {
        if self.points.is_empty() {
            return Err(PsvError::EmptyCloud);
        }
        let pts = &self.points;
        let start = pts.partition_point(|p| p.z.im < z.im);
        let mut best = (f64::INFINITY, usize::MAX);
        let consider = |i: usize, best: &mut (f64, usize)| {
            let d = (pts[i].z - z).norm();
            if d < best.0 || (d == best.0 && i < best.1) {
                *best = (d, i);
            }
        };
        let mut up = start;
        let mut down = start;
        loop {
            let mut moved = false;
            if up < pts.len() && pts[up].z.im - z.im <= best.0 {
                consider(up, &mut best);
                up += 1;
                moved = true;
            }
            if down > 0 && z.im - pts[down - 1].z.im <= best.0 {
                consider(down - 1, &mut best);
                down -= 1;
                moved = true;
            }
            if !moved {
                break;
            }
        }
        Ok((pts[best.1].z, best.0))
    }

    /// Linear scan; the reference for `nearest`.
    pub fn nearest_brute(&self, z: Cx) -> Result<(Cx, f64), PsvError> {
        let mut best = (f64::INFINITY, usize::MAX);
        for (i, p) in self.points.iter().enumerate() {
            let d = (p.z - z).norm();
            if d < best.0 {
                best = (d, i);
            }
        }
        if best.1 == usize::MAX {
            return Err(PsvError::EmptyCloud);
        }
        Ok((self.points[best.1].z, best.0))
    }

    /// CSV with header `s_index,n,re,im`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("s_index,n,re,im\n");
        for p in &self.points {
            s.push_str(&format!("{},{},{},{}\n", p.s_index, p.n, p.z.re, p.z.im));
        }
        s
    }

    pub fn summary(&self) -> CloudSummary {
        CloudSummary {
            count: self.points.len(),
            depth: self.depth,
            window: self.window,
        }
    }
}
