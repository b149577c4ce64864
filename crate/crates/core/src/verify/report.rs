use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::VerifyError;
use crate::mapcat::{MapId, MapSpec};

pub const DEFAULT_SEED: u64 = 0x5EED;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub label: String,
    pub values: Vec<f64>,
}

impl Series {
    pub fn new(label: &str, values: Vec<f64>) -> Self {
        Series {
            label: label.to_string(),
            values,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check: String,
    pub map: MapId,
    pub params: MapParams,
    pub pass: bool,
    pub tolerances: BTreeMap<String, f64>,
    pub series: Vec<Series>,
    pub notes: String,
    pub seed: u64,
}

impl VerificationReport {
    /// Builds the report; `pass` is computed from the series and tolerances.
    pub fn new(
        check: &str,
        spec: &MapSpec,
        series: Vec<Series>,
        tolerances: BTreeMap<String, f64>,
        notes: String,
        seed: u64,
    ) -> Result<Self, VerifyError> {
        for s in &series {
            if s.values.iter().any(|v| !v.is_finite()) {
                return Err(VerifyError::PreconditionViolated(format!(
                    "series `{}` holds a non-finite value",
                    s.label
                )));
            }
        }
        let pass = evaluate(check, &series, &tolerances)?;
        Ok(VerificationReport {
            check: check.to_string(),
            map: spec.map,
            params: MapParams {
                alpha: spec.alpha,
                beta: spec.beta,
            },
            pass,
            tolerances,
            series,
            notes,
            seed,
        })
    }

    pub fn series(&self, label: &str) -> Option<&[f64]> {
        find(&self.series, label).ok()
    }

    /// Recompute `pass` from the stored data.
    pub fn recompute_pass(&self) -> Result<bool, VerifyError> {
        evaluate(&self.check, &self.series, &self.tolerances)
    }
}

pub fn tolerances(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn find<'a>(series: &'a [Series], label: &str) -> Result<&'a [f64], VerifyError> {
    series
        .iter()
        .find(|s| s.label == label)
        .map(|s| s.values.as_slice())
        .ok_or_else(|| VerifyError::PreconditionViolated(format!("missing series `{label}`")))
}

fn tol(t: &BTreeMap<String, f64>, key: &str) -> Result<f64, VerifyError> {
    t.get(key)
        .copied()
        .ok_or_else(|| VerifyError::PreconditionViolated(format!("missing tolerance `{key}`")))
}

fn first(series: &[Series], label: &str) -> Result<f64, VerifyError> {
    find(series, label)?
        .first()
        .copied()
        .ok_or_else(|| VerifyError::PreconditionViolated(format!("empty series `{label}`")))
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Medians of the first and last quarter of `v`.
pub fn quartile_medians(v: &[f64]) -> (f64, f64) {
    let q = (v.len() / 4).max(1);
    (median(&v[..q]), median(&v[v.len() - q..]))
}

/// The pass rule of each check, as a pure function of its data.
pub fn evaluate(
    check: &str,
    series: &[Series],
    t: &BTreeMap<String, f64>,
) -> Result<bool, VerifyError> {
    match check {
        "invariant_line" => {
            let dev = find(series, "deviation")?;
            let max = tol(t, "max_deviation")?;
            Ok(!dev.is_empty() && dev.iter().all(|d| *d < max))
        }
        "strip" => {
            let m = find(series, "image_margin")?;
            let d = find(series, "halfline_decrease")?;
            let drift = find(series, "halfline_re_drift")?;
            let max_drift = tol(t, "max_re_drift")?;
            Ok(!m.is_empty()
                && !d.is_empty()
                && m.iter().all(|v| *v > 0.0)
                && d.iter().all(|v| *v > 0.0)
                && drift.iter().all(|v| *v < max_drift))
        }
        "contraction" => Ok(first(series, "certified_sup")? < tol(t, "threshold")?),
        "theorem_b" => {
            if tol(t, "vacuous")? != 0.0 {
                return Ok(true);
            }
            let ratio = find(series, "ratio")?;
            if ratio.len() < 2 {
                return Ok(false);
            }
            let (head, tail) = quartile_medians(ratio);
            Ok(tail < head * (1.0 - tol(t, "trend_resolution")?))
        }
        "theorem_a" => {
            let d = find(series, "dist_over_modulus")?;
            let q = find(series, "modulus_ratio")?;
            let (md, mq) = (tol(t, "max_dist_ratio")?, tol(t, "max_modulus_ratio")?);
            Ok(!d.is_empty() && d.iter().all(|v| *v <= md) && q.iter().all(|v| *v <= mq))
        }
        "corollary_c" => {
            if tol(t, "vacuous")? != 0.0 {
                return Ok(true);
            }
            let r = find(series, "radius")?;
            if r.is_empty() {
                return Ok(false);
            }
            if tol(t, "growing_rule")? != 0.0 {
                let (f, l) = (r[0], r[r.len() - 1]);
                Ok(l > f && l > tol(t, "min_final")?)
            } else {
                let bound = tol(t, "bound")?;
                Ok(r.iter().all(|v| *v <= bound))
            }
        }
        "theorem_d" => {
            let r = first(series, "r")?;
            let dev = first(series, "gamma1_max_dev")?;
            let g2 = first(series, "gamma2_max")?;
            let w = first(series, "winding")?;
            Ok(dev < tol(t, "gamma1_rel_tol")? * r && g2 < tol(t, "gamma2_frac")? * r && w != 0.0)
        }
        "corollary_e" => {
            let case = first(series, "case")?;
            if case == 0.0 || first(series, "monotone")? != 1.0 {
                return Ok(false);
            }
            let limit = first(series, "limit")?;
            let pred = first(series, "predicted")?;
            let ok = (limit - pred).abs() <= tol(t, "target_tol")? * pred.abs().max(1.0);
            if case == 3.0 {
                let p = first(series, "pole")?;
                let c1 = first(series, "c1")?;
                Ok(ok && pred < p && p < c1)
            } else {
                Ok(ok)
            }
        }
        other => Err(VerifyError::UnknownCheck(other.to_string())),
    }
}
