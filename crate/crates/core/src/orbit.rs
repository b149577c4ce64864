//! Forward orbits with escape, pole and attractor detection.

use serde::{Deserialize, Serialize};

use crate::error::{EvalError, OrbitError};
use crate::mapcat::{Cx, MapId, MeromorphicMap, TOL_POLE};

/// Stored points beyond this count are thinned to head + tail.
pub const MAX_STORED: usize = 4096;
/// Longest cycle the close-return test looks for.
pub const MAX_PERIOD: usize = 8;
/// A detected cycle must contract at least this much per turn.
const CONTRACTION_MARGIN: f64 = 1e-6;

/// Shared iteration parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IterParams {
    pub max_iter: usize,
    pub escape_radius: f64,
    pub tol_conv: f64,
    /// Steps followed when comparing two escaping orbits.
    pub companion_steps: usize,
    /// Allowed growth factor of the separation of two companion orbits.
    pub companion_factor: f64,
}

impl Default for IterParams {
    fn default() -> Self {
        IterParams {
            max_iter: 2000,
            escape_radius: 1e8,
            tol_conv: 1e-10,
            companion_steps: 16,
            companion_factor: 4.0,
        }
    }
}

impl IterParams {
    /// Defaults adjusted to the map. Orbits of `z + i + tan z` in the upper
    /// half-plane climb by about `2i` per step, so a radius of 1e8 would
    /// never be reached within the default budget.
    pub fn for_map(map: &MeromorphicMap) -> Self {
        let mut p = Self::default();
        if map.id() == MapId::Ng {
            p.escape_radius = 1e3;
        }
        p
    }

    pub fn with_max_iter(mut self, n: usize) -> Self {
        self.max_iter = n;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    ConvergedTo { target: Cx, period: usize },
    Escaped { at_step: usize },
    PoleHit { at_step: usize },
    Undecided,
}

impl Verdict {
    pub fn short(&self) -> String {
        match self {
            Verdict::ConvergedTo { target, period } => {
                format!("converged({};{};{})", target.re, target.im, period)
            }
            Verdict::Escaped { at_step } => format!("escaped({at_step})"),
            Verdict::PoleHit { at_step } => format!("pole_hit({at_step})"),
            Verdict::Undecided => "undecided".into(),
        }
    }

    /// Step at which an escape or pole verdict fired.
    pub fn terminal_step(&self) -> Option<usize> {
        match self {
            Verdict::Escaped { at_step } | Verdict::PoleHit { at_step } => Some(*at_step),
            _ => None,
        }
    }
}

/// Record of steps removed from the middle of a long orbit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Omitted {
    /// Points `0..=head_end` are stored, then the tail.
    pub head_end: usize,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Orbit {
    pub seed: Cx,
    pub points: Vec<Cx>,
    pub verdict: Verdict,
    pub params_hash: u64,
    /// Present when the middle of the orbit was thinned away.
    pub omitted: Option<Omitted>,
    /// Number of map steps actually taken.
    pub steps: usize,
}

impl Orbit {
    pub fn last(&self) -> Cx {
        *self.points.last().expect("orbit holds its seed")
    }

    /// Step index of the stored point `i`.
    pub fn step_of(&self, i: usize) -> usize {
        match self.omitted {
            Some(o) if i > o.head_end => i + o.count,
            _ => i,
        }
    }

    /// CSV with header `n,re,im,abs,verdict`; the verdict is on the last row.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,re,im,abs,verdict\n");
        let last = self.points.len() - 1;
        for (i, z) in self.points.iter().enumerate() {
            let v = if i == last { self.verdict.short() } else { String::new() };
            s.push_str(&format!("{},{},{},{},{}\n", self.step_of(i), z.re, z.im, z.norm(), v));
        }
        s
    }
}

/// FNV-1a over the map's JSON form; stable across runs and platforms.
pub fn map_hash(map: &MeromorphicMap) -> u64 {
    let text = serde_json::to_string(&map.spec()).expect("map spec serializes");
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

struct Store {
    head: Vec<Cx>,
    tail: std::collections::VecDeque<Cx>,
    dropped: usize,
}

impl Store {
    fn new(seed: Cx) -> Self {
        Store {
            head: vec![seed],
            tail: Default::default(),
            dropped: 0,
        }
    }

    fn push(&mut self, z: Cx) {
        let half = MAX_STORED / 2;
        if self.head.len() < half {
            self.head.push(z);
        } else {
            self.tail.push_back(z);
            if self.tail.len() > MAX_STORED - half {
                self.tail.pop_front();
                self.dropped += 1;
            }
        }
    }

    fn finish(self) -> (Vec<Cx>, Option<Omitted>) {
        let head_end = self.head.len() - 1;
        let mut v = self.head;
        v.extend(self.tail);
        let om = (self.dropped > 0).then_some(Omitted {
            head_end,
            count: self.dropped,
        });
        (v, om)
    }
}

/// Iterate with default parameters for the map, overriding the budget and
/// escape radius.
pub fn iterate(map: &MeromorphicMap, seed: Cx, max_iter: usize, escape_radius: f64) -> Orbit {
    let p = IterParams {
        max_iter,
        escape_radius,
        ..IterParams::for_map(map)
    };
    iterate_with(map, seed, &p)
}

pub fn iterate_with(map: &MeromorphicMap, seed: Cx, p: &IterParams) -> Orbit {
    let params_hash = map_hash(map);
    let mut store = Store::new(seed);
    // the last MAX_PERIOD + 1 points, newest last
    let mut recent: Vec<Cx> = vec![seed];
    let mut verdict = Verdict::Undecided;
    let mut steps = 0;
    if !seed.is_finite() || seed.norm() > p.escape_radius {
        verdict = Verdict::Escaped { at_step: 0 };
    } else {
        let mut z = seed;
        for n in 0..p.max_iter {
            let next = match map.eval(z) {
                Ok(w) => w,
                Err(EvalError::PoleHit) => {
                    verdict = Verdict::PoleHit { at_step: n };
                    break;
                }
                Err(EvalError::OverflowDomain) => {
                    verdict = Verdict::Escaped { at_step: n + 1 };
                    break;
                }
            };
            steps = n + 1;
            store.push(next);
            if next.norm() > p.escape_radius {
                verdict = Verdict::Escaped { at_step: n + 1 };
                break;
            }
            recent.push(next);
            if recent.len() > MAX_PERIOD + 1 {
                recent.remove(0);
            }
            if let Some(period) = close_return(map, &recent, p.tol_conv) {
                verdict = Verdict::ConvergedTo {
                    target: next,
                    period,
                };
                break;
            }
            z = next;
        }
    }
    let (points, omitted) = store.finish();
    Orbit {
        seed,
        points,
        verdict,
        params_hash,
        omitted,
        steps,
    }
}

/// Smallest period `p` with `|z_last - z_{last-p}| < tol` whose cycle
/// multiplier is contracting.
fn close_return(map: &MeromorphicMap, recent: &[Cx], tol: f64) -> Option<usize> {
    let last = recent.len() - 1;
    for period in 1..=MAX_PERIOD.min(last) {
        if (recent[last] - recent[last - period]).norm() < tol {
            let mut mult = 1.0;
            for z in &recent[last - period..last] {
                match map.deriv(*z) {
                    Ok(d) => mult *= d.norm(),
                    Err(_) => return None,
                }
            }
            if mult <= 1.0 - CONTRACTION_MARGIN {
                return Some(period);
            }
        }
    }
    None
}

/// Errors below this are at the rounding floor.
const ERROR_FLOOR: f64 = 1e-14;

/// Local order of convergence from the least-squares slope of
/// `log e_{n+1}` against `log e_n`.
pub fn convergence_order(orbit: &Orbit) -> Result<f64, OrbitError> {
    let Verdict::ConvergedTo { target, .. } = orbit.verdict else {
        return Err(OrbitError::NotConverged);
    };
    if orbit.omitted.is_some() {
        return Err(OrbitError::InsufficientData);
    }
    let errs: Vec<f64> = orbit
        .points
        .iter()
        .map(|z| (z - target).norm())
        .take_while(|e| *e > ERROR_FLOOR)
        .collect();
    // ignore the pre-asymptotic transient: keep the tail where errors are below 0.5
    let start = errs.iter().position(|e| *e < 0.5).unwrap_or(errs.len());
    let usable = &errs[start..];
    if usable.len() < 3 {
        return Err(OrbitError::InsufficientData);
    }
    let xs: Vec<f64> = usable[..usable.len() - 1].iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = usable[1..].iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(OrbitError::InsufficientData);
    }
    Ok(sxy / sxx)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RealVerdict {
    MonotoneTo { limit: f64 },
    NotMonotone,
    Diverged,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealOrbit {
    pub points: Vec<f64>,
    pub verdict: RealVerdict,
}

/// The Newton map of `e^t + beta t + alpha` restricted to the real line.
#[derive(Clone, Copy, Debug)]
pub struct RealNh {
    pub alpha: f64,
    pub beta: f64,
    pub c_tilde: f64,
    /// The real pole `ln(-beta)` when `beta < 0`.
    pub pole: Option<f64>,
    pub removable: bool,
}

impl RealNh {
    pub fn new(alpha: f64, beta: f64) -> Result<Self, OrbitError> {
        if beta == 0.0 || !alpha.is_finite() || !beta.is_finite() {
            return Err(OrbitError::NotRealNh);
        }
        let c_tilde = 1.0 - alpha / beta;
        let pole = (beta < 0.0).then(|| (-beta).ln());
        let removable = pole.is_some_and(|p| (c_tilde - p).exp_m1().abs() < TOL_POLE);
        Ok(RealNh {
            alpha,
            beta,
            c_tilde,
            pole,
            removable,
        })
    }

    pub fn from_map(map: &MeromorphicMap) -> Result<Self, OrbitError> {
        let p = map.nh_params().ok_or(OrbitError::NotRealNh)?;
        if p.alpha().im != 0.0 || p.beta().im != 0.0 {
            return Err(OrbitError::NotRealNh);
        }
        Self::new(p.alpha().re, p.beta().re)
    }

    /// `None` at the pole.
    pub fn eval(&self, t: f64) -> Option<f64> {
        let d = t - self.c_tilde;
        match self.pole {
            None => {
                // beta > 0: the denominator e^t + beta never vanishes
                if t > 700.0 {
                    return Some(t - 1.0);
                }
                Some(t - 1.0 - self.beta * d / (t.exp() + self.beta))
            }
            Some(p) => {
                if self.removable {
                    let dp = t - self.c_tilde;
                    let ratio = if dp.abs() < 1e-8 { 1.0 - 0.5 * dp } else { dp / dp.exp_m1() };
                    return Some(t - 1.0 + ratio);
                }
                let em = (t - p).exp_m1();
                // |1 + beta e^{-t}| = |beta| |em| e^{-t}
                if (-self.beta).ln() + em.abs().ln() - t < TOL_POLE.ln() {
                    return None;
                }
                if em.is_infinite() {
                    return Some(t - 1.0);
                }
                Some(t - 1.0 + d / em)
            }
        }
    }

    pub fn asymptotic_value(&self) -> f64 {
        -self.alpha / self.beta
    }
}

/// Iterate the real restriction and classify the approach to the limit.
pub fn real_orbit(map: &MeromorphicMap, seed: f64, max_iter: usize) -> Result<RealOrbit, OrbitError> {
    let f = RealNh::from_map(map)?;
    real_orbit_of(&f, seed, max_iter)
}

pub fn real_orbit_of(f: &RealNh, seed: f64, max_iter: usize) -> Result<RealOrbit, OrbitError> {
    let mut pts = vec![seed];
    let mut x = seed;
    let mut settled = false;
    for n in 0..max_iter {
        let Some(y) = f.eval(x) else {
            return Err(OrbitError::RealPoleCrossing { step: n });
        };
        if !y.is_finite() || y.abs() > 1e8 {
            pts.push(y);
            return Ok(RealOrbit {
                points: pts,
                verdict: RealVerdict::Diverged,
            });
        }
        pts.push(y);
        if (y - x).abs() <= 1e-15 * x.abs().max(1.0) {
            settled = true;
            break;
        }
        x = y;
    }
    if !settled {
        return Ok(RealOrbit {
            points: pts,
            verdict: RealVerdict::Diverged,
        });
    }
    let limit = *pts.last().unwrap();
    let verdict = if is_monotone_approach(&pts, limit) {
        RealVerdict::MonotoneTo { limit }
    } else {
        RealVerdict::NotMonotone
    };
    Ok(RealOrbit {
        points: pts,
        verdict,
    })
}

/// Once within distance 1 of the limit the steps keep one sign and the
/// distance to the limit never grows.
fn is_monotone_approach(pts: &[f64], limit: f64) -> bool {
    let Some(start) = pts.iter().position(|x| (x - limit).abs() <= 1.0) else {
        return false;
    };
    let tail = &pts[start..];
    let mut sign = 0.0;
    for w in tail.windows(2) {
        let step = w[1] - w[0];
        if step == 0.0 {
            continue;
        }
        if sign == 0.0 {
            sign = step.signum();
        } else if step.signum() != sign {
            // rounding jitter at the floor is not a reversal
            if step.abs() > 1e-14 * limit.abs().max(1.0) {
                return false;
            }
        }
        if (w[1] - limit).abs() > (w[0] - limit).abs() + 1e-15 * limit.abs().max(1.0) {
            return false;
        }
    }
    true
}
