//! Catalog of meromorphic maps with closed-form derivatives, poles and
//! singular points.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{EvalError, MapError};

pub type Cx = Complex64;

/// Denominator magnitude below which evaluation reports a pole.
pub const TOL_POLE: f64 = 1e-12;

/// Exponent beyond which `exp` is treated as overflowing.
const EXP_LIMIT: f64 = 700.0;

/// Axis-aligned rectangle in the complex plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub re_min: f64,
    pub im_min: f64,
    pub re_max: f64,
    pub im_max: f64,
}

impl Window {
    pub fn new(re_min: f64, im_min: f64, re_max: f64, im_max: f64) -> Result<Self, MapError> {
        let w = Window {
            re_min,
            im_min,
            re_max,
            im_max,
        };
        w.validate()?;
        Ok(w)
    }

    /// Square of half-width `half` centered at `c`.
    pub fn square(c: Cx, half: f64) -> Result<Self, MapError> {
        Self::new(c.re - half, c.im - half, c.re + half, c.im + half)
    }

    pub fn validate(&self) -> Result<(), MapError> {
        let all = [self.re_min, self.im_min, self.re_max, self.im_max];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(MapError::InvalidWindow("non-finite bound".into()));
        }
        if self.re_min >= self.re_max || self.im_min >= self.im_max {
            return Err(MapError::InvalidWindow(format!(
                "empty rectangle [{}, {}] x [{}, {}]",
                self.re_min, self.re_max, self.im_min, self.im_max
            )));
        }
        Ok(())
    }

    pub fn contains(&self, z: Cx) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }

    pub fn width(&self) -> f64 {
        self.re_max - self.re_min
    }

    pub fn height(&self) -> f64 {
        self.im_max - self.im_min
    }

    pub fn center(&self) -> Cx {
        Cx::new(
            0.5 * (self.re_min + self.re_max),
            0.5 * (self.im_min + self.im_max),
        )
    }

    /// Scale about the center; `factor = 1.5` enlarges each side by 50%.
    pub fn dilate(&self, factor: f64) -> Window {
        let c = self.center();
        let hw = 0.5 * self.width() * factor;
        let hh = 0.5 * self.height() * factor;
        Window {
            re_min: c.re - hw,
            im_min: c.im - hh,
            re_max: c.re + hw,
            im_max: c.im + hh,
        }
    }

    /// Smallest window containing all `points`, padded by `pad` on every side.
    pub fn bounding(points: &[Cx], pad: f64) -> Option<Window> {
        let first = points.first()?;
        let mut w = Window {
            re_min: first.re,
            im_min: first.im,
            re_max: first.re,
            im_max: first.im,
        };
        for z in points {
            w.re_min = w.re_min.min(z.re);
            w.re_max = w.re_max.max(z.re);
            w.im_min = w.im_min.min(z.im);
            w.im_max = w.im_max.max(z.im);
        }
        w.re_min -= pad;
        w.im_min -= pad;
        w.re_max += pad;
        w.im_max += pad;
        Some(w)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapId {
    Nf,
    Ng,
    Nh,
    Fh,
    Gfh,
}

impl MapId {
    pub fn name(self) -> &'static str {
        match self {
            MapId::Nf => "nf",
            MapId::Ng => "ng",
            MapId::Nh => "nh",
            MapId::Fh => "fh",
            MapId::Gfh => "gfh",
        }
    }
}

impl std::str::FromStr for MapId {
    type Err = MapError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "nf" => Ok(MapId::Nf),
            "ng" => Ok(MapId::Ng),
            "nh" => Ok(MapId::Nh),
            "fh" => Ok(MapId::Fh),
            "gfh" => Ok(MapId::Gfh),
            other => Err(MapError::InvalidParams(format!("unknown map id `{other}`"))),
        }
    }
}

/// JSON form of a catalog entry: `{"map": "nh", "alpha": [re, im], "beta": [re, im]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub map: MapId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<[f64; 2]>,
}

impl MapSpec {
    pub fn plain(map: MapId) -> Self {
        MapSpec {
            map,
            alpha: None,
            beta: None,
        }
    }

    pub fn build(&self) -> Result<MeromorphicMap, MapError> {
        match self.map {
            MapId::Nh => {
                let a = self.alpha.unwrap_or([0.0, 0.0]);
                let b = self.beta.unwrap_or([1.0, 0.0]);
                MeromorphicMap::nh(Cx::new(a[0], a[1]), Cx::new(b[0], b[1]))
            }
            id => {
                if self.alpha.is_some() || self.beta.is_some() {
                    return Err(MapError::InvalidParams(format!(
                        "map `{}` takes no parameters",
                        id.name()
                    )));
                }
                Ok(match id {
                    MapId::Nf => MeromorphicMap::Nf,
                    MapId::Ng => MeromorphicMap::Ng,
                    MapId::Fh => MeromorphicMap::fh(),
                    MapId::Gfh => MeromorphicMap::gfh(),
                    MapId::Nh => unreachable!(),
                })
            }
        }
    }
}

/// Parameters of the Newton map of `h(z) = e^z + beta z + alpha`.
#[derive(Clone, Debug, PartialEq)]
pub struct NhParams {
    alpha: Cx,
    beta: Cx,
    /// `1 - alpha/beta`
    c_tilde: Cx,
    /// `ln|beta| + i arg(-beta)`; poles are `pole_base + 2k pi i`.
    pole_base: Cx,
    /// Branch index of the pole that coincides with `c_tilde`, if any.
    removable: Option<i64>,
}

impl NhParams {
    pub fn alpha(&self) -> Cx {
        self.alpha
    }
    pub fn beta(&self) -> Cx {
        self.beta
    }
    pub fn c_tilde(&self) -> Cx {
        self.c_tilde
    }
    /// The asymptotic value `-alpha/beta`.
    pub fn asymptotic_value(&self) -> Cx {
        -self.alpha / self.beta
    }
    pub fn is_removable_case(&self) -> bool {
        self.removable.is_some()
    }

    fn nearest_k(&self, z: Cx) -> i64 {
        ((z.im - self.pole_base.im) / TAU).round() as i64
    }

    fn pole(&self, k: i64) -> Cx {
        if self.removable == Some(k) {
            self.c_tilde
        } else {
            self.pole_base + Cx::new(0.0, TAU * k as f64)
        }
    }

    /// `h(z) = e^z + beta z + alpha`.
    pub fn h(&self, z: Cx) -> Cx {
        z.exp() + self.beta * z + self.alpha
    }

    pub fn h_prime(&self, z: Cx) -> Cx {
        z.exp() + self.beta
    }
}

/// Constants of the logarithmic lift pair.
#[derive(Clone, Debug, PartialEq)]
pub struct LiftConsts {
    /// `lambda = e^{2 pi i (1 - sqrt 5)/2}`
    pub lambda: Cx,
    /// `w0 = 2 - lambda`
    pub w0: Cx,
    /// principal `Log w0`
    pub log_w0: Cx,
    /// additive constant of the lift, `w0 - Log w0`
    pub fh_const: Cx,
    /// multiplicative constant of the quotient map, `e^{w0}/w0`
    pub gfh_const: Cx,
}

impl LiftConsts {
    pub fn new() -> Self {
        let theta = TAU * (1.0 - 5f64.sqrt()) / 2.0;
        let lambda = Cx::from_polar(1.0, theta);
        let w0 = Cx::new(2.0, 0.0) - lambda;
        let log_w0 = w0.ln();
        LiftConsts {
            lambda,
            w0,
            log_w0,
            fh_const: w0 - log_w0,
            gfh_const: w0.exp() / w0,
        }
    }
}

impl Default for LiftConsts {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MeromorphicMap {
    /// `z - tan z`
    Nf,
    /// `z + i + tan z`
    Ng,
    /// `(z - 1 - alpha e^{-z}) / (1 + beta e^{-z})`
    Nh(NhParams),
    /// `2 - lambda - Log(2 - lambda) + 2z - e^z`
    Fh(LiftConsts),
    /// `e^{2-lambda}/(2-lambda) * w^2 e^{-w}`
    Gfh(LiftConsts),
}

/// Critical points and asymptotic values found inside a window.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SingularPointSet {
    pub critical_points: Vec<Cx>,
    pub asymptotic_values: Vec<Cx>,
    pub window: Window,
}

impl SingularPointSet {
    /// Critical points followed by asymptotic values.
    pub fn all(&self) -> Vec<Cx> {
        let mut v = self.critical_points.clone();
        v.extend_from_slice(&self.asymptotic_values);
        v
    }
}

impl MeromorphicMap {
    pub fn nf() -> Self {
        MeromorphicMap::Nf
    }

    pub fn ng() -> Self {
        MeromorphicMap::Ng
    }

    pub fn fh() -> Self {
        MeromorphicMap::Fh(LiftConsts::new())
    }

    pub fn gfh() -> Self {
        MeromorphicMap::Gfh(LiftConsts::new())
    }

    pub fn nh(alpha: Cx, beta: Cx) -> Result<Self, MapError> {
        if !(alpha.is_finite() && beta.is_finite()) {
            return Err(MapError::InvalidParams("alpha and beta must be finite".into()));
        }
        if beta == Cx::new(0.0, 0.0) {
            return Err(MapError::InvalidParams("beta must be nonzero".into()));
        }
        let c_tilde = Cx::new(1.0, 0.0) - alpha / beta;
        let pole_base = Cx::new(beta.norm().ln(), (-beta).arg());
        let k = ((c_tilde.im - pole_base.im) / TAU).round() as i64;
        let pk = pole_base + Cx::new(0.0, TAU * k as f64);
        let removable = (cexpm1(c_tilde - pk).norm() < TOL_POLE).then_some(k);
        Ok(MeromorphicMap::Nh(NhParams {
            alpha,
            beta,
            c_tilde,
            pole_base,
            removable,
        }))
    }

    pub fn nh_real(alpha: f64, beta: f64) -> Result<Self, MapError> {
        Self::nh(Cx::new(alpha, 0.0), Cx::new(beta, 0.0))
    }

    pub fn id(&self) -> MapId {
        match self {
            MeromorphicMap::Nf => MapId::Nf,
            MeromorphicMap::Ng => MapId::Ng,
            MeromorphicMap::Nh(_) => MapId::Nh,
            MeromorphicMap::Fh(_) => MapId::Fh,
            MeromorphicMap::Gfh(_) => MapId::Gfh,
        }
    }

    pub fn nh_params(&self) -> Option<&NhParams> {
        match self {
            MeromorphicMap::Nh(p) => Some(p),
            _ => None,
        }
    }

    pub fn spec(&self) -> MapSpec {
        match self {
            MeromorphicMap::Nh(p) => MapSpec {
                map: MapId::Nh,
                alpha: Some([p.alpha.re, p.alpha.im]),
                beta: Some([p.beta.re, p.beta.im]),
            },
            m => MapSpec::plain(m.id()),
        }
    }

    pub fn eval(&self, z: Cx) -> Result<Cx, EvalError> {
        if !z.is_finite() {
            return Err(EvalError::OverflowDomain);
        }
        let w = match self {
            MeromorphicMap::Nf => {
                tan_pole_check(z)?;
                z - ctan(z)
            }
            MeromorphicMap::Ng => {
                tan_pole_check(z)?;
                z + Cx::i() + ctan(z)
            }
            MeromorphicMap::Nh(p) => nh_eval(p, z)?,
            MeromorphicMap::Fh(c) => {
                if z.re > EXP_LIMIT {
                    return Err(EvalError::OverflowDomain);
                }
                c.fh_const + 2.0 * z - z.exp()
            }
            MeromorphicMap::Gfh(c) => {
                if -z.re > EXP_LIMIT {
                    return Err(EvalError::OverflowDomain);
                }
                c.gfh_const * z * z * (-z).exp()
            }
        };
        finite(w)
    }

    pub fn deriv(&self, z: Cx) -> Result<Cx, EvalError> {
        if !z.is_finite() {
            return Err(EvalError::OverflowDomain);
        }
        let w = match self {
            MeromorphicMap::Nf => {
                tan_pole_check(z)?;
                let t = ctan(z);
                -(t * t)
            }
            MeromorphicMap::Ng => {
                tan_pole_check(z)?;
                let t = ctan(z);
                2.0 + t * t
            }
            MeromorphicMap::Nh(p) => nh_deriv(p, z)?,
            MeromorphicMap::Fh(_) => {
                if z.re > EXP_LIMIT {
                    return Err(EvalError::OverflowDomain);
                }
                2.0 - z.exp()
            }
            MeromorphicMap::Gfh(c) => {
                if -z.re > EXP_LIMIT {
                    return Err(EvalError::OverflowDomain);
                }
                c.gfh_const * z * (2.0 - z) * (-z).exp()
            }
        };
        finite(w)
    }

    pub fn second_deriv(&self, z: Cx) -> Result<Cx, EvalError> {
        if !z.is_finite() {
            return Err(EvalError::OverflowDomain);
        }
        let w = match self {
            MeromorphicMap::Nf => {
                tan_pole_check(z)?;
                let t = ctan(z);
                -2.0 * t * (1.0 + t * t)
            }
            MeromorphicMap::Ng => {
                tan_pole_check(z)?;
                let t = ctan(z);
                2.0 * t * (1.0 + t * t)
            }
            MeromorphicMap::Nh(p) => nh_second(p, z)?,
            MeromorphicMap::Fh(_) => {
                if z.re > EXP_LIMIT {
                    return Err(EvalError::OverflowDomain);
                }
                -z.exp()
            }
            MeromorphicMap::Gfh(c) => {
                if -z.re > EXP_LIMIT {
                    return Err(EvalError::OverflowDomain);
                }
                c.gfh_const * (2.0 - 4.0 * z + z * z) * (-z).exp()
            }
        };
        finite(w)
    }

    /// All poles inside `window`, sorted by imaginary then real part.
    pub fn poles_in_window(&self, window: &Window) -> Vec<Cx> {
        let mut out = Vec::new();
        match self {
            MeromorphicMap::Nf | MeromorphicMap::Ng => {
                if window.im_min <= 0.0 && 0.0 <= window.im_max {
                    let k0 = ((window.re_min - FRAC_PI_2) / PI).ceil() as i64 - 1;
                    let k1 = ((window.re_max - FRAC_PI_2) / PI).floor() as i64 + 1;
                    for k in k0..=k1 {
                        let z = Cx::new(FRAC_PI_2 + k as f64 * PI, 0.0);
                        if window.contains(z) {
                            out.push(z);
                        }
                    }
                }
            }
            MeromorphicMap::Nh(p) => {
                let k0 = ((window.im_min - p.pole_base.im) / TAU).floor() as i64 - 1;
                let k1 = ((window.im_max - p.pole_base.im) / TAU).ceil() as i64 + 1;
                for k in k0..=k1 {
                    if p.removable == Some(k) {
                        continue;
                    }
                    let z = p.pole(k);
                    if window.contains(z) {
                        out.push(z);
                    }
                }
            }
            MeromorphicMap::Fh(_) | MeromorphicMap::Gfh(_) => {}
        }
        sort_points(&mut out);
        out
    }

    /// Critical points and asymptotic values inside `window`.
    pub fn singular_points(&self, window: &Window) -> Result<SingularPointSet, MapError> {
        window.validate()?;
        let mut crit = Vec::new();
        let mut asym = Vec::new();
        match self {
            MeromorphicMap::Nf => {
                if window.im_min <= 0.0 && 0.0 <= window.im_max {
                    let k0 = (window.re_min / PI).floor() as i64 - 1;
                    let k1 = (window.re_max / PI).ceil() as i64 + 1;
                    crit.extend(
                        (k0..=k1)
                            .map(|k| Cx::new(k as f64 * PI, 0.0))
                            .filter(|z| window.contains(*z)),
                    );
                }
            }
            MeromorphicMap::Ng => {
                let y = ng_critical_height();
                let k0 = ((window.re_min - FRAC_PI_2) / PI).floor() as i64 - 1;
                let k1 = ((window.re_max - FRAC_PI_2) / PI).ceil() as i64 + 1;
                for k in k0..=k1 {
                    let x = FRAC_PI_2 + k as f64 * PI;
                    for s in [-1.0, 1.0] {
                        let z = Cx::new(x, s * y);
                        if window.contains(z) {
                            crit.push(z);
                        }
                    }
                }
            }
            MeromorphicMap::Nh(p) => {
                crit = nh_critical_points(p, window)?;
                let u = p.asymptotic_value();
                if window.contains(u) {
                    asym.push(u);
                }
            }
            MeromorphicMap::Fh(_) => {
                let ln2 = 2f64.ln();
                let k0 = (window.im_min / TAU).floor() as i64 - 1;
                let k1 = (window.im_max / TAU).ceil() as i64 + 1;
                crit.extend(
                    (k0..=k1)
                        .map(|k| Cx::new(ln2, TAU * k as f64))
                        .filter(|z| window.contains(*z)),
                );
            }
            MeromorphicMap::Gfh(_) => {
                for z in [Cx::new(0.0, 0.0), Cx::new(2.0, 0.0)] {
                    if window.contains(z) {
                        crit.push(z);
                    }
                }
                if window.contains(Cx::new(0.0, 0.0)) {
                    asym.push(Cx::new(0.0, 0.0));
                }
            }
        }
        sort_points(&mut crit);
        Ok(SingularPointSet {
            critical_points: crit,
            asymptotic_values: asym,
            window: *window,
        })
    }
}

/// `ln(1 + sqrt 2)`, the height of the critical points of `z + i + tan z`.
pub fn ng_critical_height() -> f64 {
    1f64.asinh()
}

/// Sort by imaginary part, then real part.
pub fn sort_points(v: &mut [Cx]) {
    v.sort_by(|a, b| a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re)));
}

fn finite(w: Cx) -> Result<Cx, EvalError> {
    if w.is_finite() {
        Ok(w)
    } else {
        Err(EvalError::OverflowDomain)
    }
}

/// `e^z - 1` without cancellation for small `z`.
pub fn cexpm1(z: Cx) -> Cx {
    let (x, y) = (z.re, z.im);
    let s = (0.5 * y).sin();
    Cx::new(x.exp_m1() * y.cos() - 2.0 * s * s, x.exp() * y.sin())
}

/// `|cos z|^2 = cos^2 x + sinh^2 y`
fn cos_abs_sq(z: Cx) -> f64 {
    let c = z.re.cos();
    let s = z.im.sinh();
    c * c + s * s
}

fn tan_pole_check(z: Cx) -> Result<(), EvalError> {
    if cos_abs_sq(z).sqrt() < TOL_POLE {
        Err(EvalError::PoleHit)
    } else {
        Ok(())
    }
}

/// `tan z`, accurate near poles and for large `|Im z|`.
pub fn ctan(z: Cx) -> Cx {
    let (x, y) = (z.re, z.im);
    let (s2, c2) = (2.0 * x).sin_cos();
    if y.abs() < 20.0 {
        let d = 2.0 * cos_abs_sq(z);
        Cx::new(s2 / d, (2.0 * y).sinh() / d)
    } else {
        let e = (-2.0 * y.abs()).exp();
        let sech = 2.0 * e / (1.0 + e * e);
        let den = 1.0 + c2 * sech;
        Cx::new(s2 * sech / den, (2.0 * y).tanh() / den)
    }
}

/// `sum_{n >= 3} d^n / n!`
fn exp_tail3(d: Cx) -> Cx {
    let mut term = d * d * d / 6.0;
    let mut sum = term;
    for n in 4..20 {
        term = term * d / n as f64;
        sum += term;
    }
    sum
}

struct NhLocal {
    /// `z - c_tilde`
    dz: Cx,
    /// `e^{z - p} - 1` for the nearest pole `p`
    em: Cx,
    removable: bool,
}

enum NhForm {
    /// `Re(z - p)` too large for `expm1`; carries `e^{-z}`.
    Far(Cx),
    Local(NhLocal),
}

fn nh_form(p: &NhParams, z: Cx) -> Result<NhForm, EvalError> {
    let k = p.nearest_k(z);
    let pk = p.pole(k);
    let d = z - pk;
    if d.re > EXP_LIMIT {
        return Ok(NhForm::Far((-z).exp()));
    }
    let em = cexpm1(d);
    let removable = p.removable == Some(k);
    if !removable {
        // |1 + beta e^{-z}| = |beta| |e^{z-p} - 1| e^{-Re z}
        let log_den = p.beta.norm().ln() + em.norm().ln() - z.re;
        if log_den < TOL_POLE.ln() {
            return Err(EvalError::PoleHit);
        }
    }
    Ok(NhForm::Local(NhLocal {
        dz: z - p.c_tilde,
        em,
        removable,
    }))
}

fn nh_eval(p: &NhParams, z: Cx) -> Result<Cx, EvalError> {
    match nh_form(p, z)? {
        NhForm::Far(e) => Ok((z - 1.0 - p.alpha * e) / (1.0 + p.beta * e)),
        NhForm::Local(l) => {
            let ratio = if l.removable && l.dz.norm() < 1e-8 {
                1.0 - 0.5 * l.dz
            } else {
                l.dz / l.em
            };
            Ok(z - 1.0 + ratio)
        }
    }
}

fn nh_deriv(p: &NhParams, z: Cx) -> Result<Cx, EvalError> {
    match nh_form(p, z)? {
        NhForm::Far(e) => {
            let den = 1.0 + p.beta * e;
            Ok((1.0 + (p.beta * z + p.alpha) * e) / (den * den))
        }
        NhForm::Local(l) => {
            let (d, e) = (l.dz, l.em);
            // (e - d), computed by series when d is the removable offset
            let e_minus_d = if l.removable && d.norm() < 0.1 {
                0.5 * d * d + exp_tail3(d)
            } else {
                e - d
            };
            if l.removable && d.norm() < 1e-300 {
                return Ok(Cx::new(0.5, 0.0));
            }
            Ok(e_minus_d * (1.0 + e) / (e * e))
        }
    }
}

fn nh_second(p: &NhParams, z: Cx) -> Result<Cx, EvalError> {
    match nh_form(p, z)? {
        NhForm::Far(e) => {
            let den = 1.0 + p.beta * e;
            let num = 1.0 + (p.beta * z + p.alpha) * e;
            Ok(1.0 / den + num / (den * den) - 2.0 * num / (den * den * den))
        }
        NhForm::Local(l) => {
            let (d, e) = (l.dz, l.em);
            let bracket = if l.removable && d.norm() < 0.1 {
                let r = exp_tail3(d);
                let q = 0.5 * d * d + r;
                d * q - 2.0 * r
            } else {
                d * (e + 2.0) - 2.0 * e
            };
            if l.removable && d.norm() < 1e-300 {
                return Ok(Cx::new(1.0 / 6.0, 0.0));
            }
            Ok((1.0 + e) * bracket / (e * e * e))
        }
    }
}

/// Branch `k` of the Lambert W function, solving `w e^w = x`.
pub fn lambert_w(x: Cx, k: i64) -> Result<Cx, MapError> {
    let inv_e = (-1f64).exp();
    let branch_pt = |x: Cx, sign: f64| {
        let p = sign * (2.0 * (std::f64::consts::E * x + 1.0)).sqrt();
        -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * 11.0 / 72.0))
    };
    let asy = |x: Cx, k: i64| {
        let w = x.ln() + Cx::new(0.0, TAU * k as f64);
        w - w.ln()
    };
    // a negative zero imaginary part would move the branch cut
    let x = Cx::new(x.re, x.im + 0.0);
    if x == Cx::new(0.0, 0.0) {
        return if k == 0 {
            Ok(x)
        } else {
            Err(MapError::RootSearchFailed { branch: k })
        };
    }
    let mut w = if k == 0 {
        if (x + inv_e).norm() < 0.3 {
            branch_pt(x, 1.0)
        } else if x.re > -1.0 && x.re < 1.5 && x.im.abs() < 1.0 && -2.5 * x.im.abs() - 0.2 < x.re
        {
            let num = (x * 12.851_063_829_787_234 + 12.340_425_531_914_894) * x + 1.0;
            let den = (x * 32.531_914_893_617_02 + 14.340_425_531_914_894) * x + 1.0;
            x * num / den
        } else {
            asy(x, 0)
        }
    } else if k == -1 && (x + inv_e).norm() < 0.3 && x.im == 0.0 && x.re < 0.0 {
        branch_pt(x, -1.0)
    } else {
        asy(x, k)
    };
    for _ in 0..100 {
        let ew = w.exp();
        let wew = w * ew;
        let r = wew - x;
        if r.norm() == 0.0 {
            return Ok(w);
        }
        let mut step = r / (wew + ew - (w + 2.0) * r / (2.0 * w + 2.0));
        if !step.is_finite() {
            step = r / (wew + ew);
        }
        if !step.is_finite() {
            break;
        }
        let wn = w - step;
        if (wn - w).norm() <= 1e-15 * wn.norm().max(1e-300) {
            return Ok(wn);
        }
        w = wn;
    }
    // slow linear convergence at the branch point, where the root is double
    if (w * w.exp() - x).norm() <= 1e-12 * x.norm().max(1.0) {
        return Ok(w);
    }
    Err(MapError::RootSearchFailed { branch: k })
}

/// Zeros of `h(z) = e^z + beta z + alpha` inside the window, excluding
/// the double root at `c_tilde` in the removable case.
fn nh_critical_points(p: &NhParams, window: &Window) -> Result<Vec<Cx>, MapError> {
    // z = -alpha/beta - W_k(x),  x = e^{-alpha/beta}/beta
    let shift = -p.alpha / p.beta;
    let x = shift.exp() / p.beta;
    if !x.is_finite() || x == Cx::new(0.0, 0.0) {
        return Err(MapError::RootSearchFailed { branch: 0 });
    }
    // Im W_k is within about pi of 2 pi k (plus the arg of x)
    let lo = shift.im - window.im_max;
    let hi = shift.im - window.im_min;
    let k0 = (lo / TAU).floor() as i64 - 2;
    let k1 = (hi / TAU).ceil() as i64 + 2;
    let mut out: Vec<Cx> = Vec::new();
    for k in k0..=k1 {
        let w = lambert_w(x, k)?;
        let c = newton_polish(p, shift - w, k)?;
        if p.removable.is_some() && (c - p.c_tilde).norm() < 1e-6 {
            continue;
        }
        if window.contains(c) && !out.iter().any(|q| (*q - c).norm() < 1e-9) {
            out.push(c);
        }
    }
    Ok(out)
}

fn newton_polish(p: &NhParams, mut c: Cx, branch: i64) -> Result<Cx, MapError> {
    for _ in 0..100 {
        let hv = p.h(c);
        let scale = 1.0 + c.exp().norm() + (p.beta * c).norm() + p.alpha.norm();
        if hv.norm() <= 1e-15 * scale {
            return Ok(c);
        }
        let d = p.h_prime(c);
        if d.norm() == 0.0 {
            // double root; the value is already as good as it gets
            return Ok(c);
        }
        let step = hv / d;
        let next = c - step;
        if (next - c).norm() <= 1e-15 * c.norm().max(1.0) {
            return Ok(next);
        }
        c = next;
    }
    if p.h(c).norm() < 1e-10 {
        Ok(c)
    } else {
        Err(MapError::RootSearchFailed { branch })
    }
}
