use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::Args;
use merolab::{Cx, MapId, MapSpec, Window};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::Failure;

macro_rules! options {
    ($(#[$m:meta])* $name:ident { $($(#[$fm:meta])* $f:ident : $t:ty),* $(,)? }) => {
        $(#[$m])*
        #[derive(Args, Clone, Debug, Default, PartialEq, Deserialize, Serialize)]
        #[serde(deny_unknown_fields)]
        pub struct $name {
            $(
                $(#[$fm])*
                #[arg(long, allow_hyphen_values = true)]
                #[serde(default, skip_serializing_if = "Option::is_none")]
                pub $f: Option<$t>,
            )*
        }

        impl MergeOpts for $name {
            fn merge_over(self, other: Self) -> Self {
                $name { $($f: self.$f.or(other.$f),)* }
            }
        }
    };
}

options!(RenderOpts {
    /// `x0,y0,x1,y1`
    window: String,
    /// Horizontal resolution; also the vertical one unless `--res-y` is given
    res: usize,
    res_y: usize,
    max_iter: usize,
});

options!(OrbitOpts {
    /// Seed as `re,im`
    z0: String,
    /// Number of steps
    n: usize,
});

options!(PsvOpts {
    window: String,
    depth: usize,
});

options!(DistanceOpts {
    z: String,
    rays: usize,
    rmax: f64,
});

options!(VerifyOpts {
    /// invariant_line, strip, contraction, theorem_b, theorem_a, corollary_c, theorem_d, corollary_e
    check: String,
    k: i64,
    samples: usize,
    offset: f64,
    half_width: f64,
    /// Disk center as `re,im`
    c: String,
    r: f64,
    grid_n: usize,
    /// Orbit seed as `re,im`
    z0: String,
    n_max: usize,
    cloud_depth: usize,
    r0: f64,
    factor: f64,
    count: usize,
    m: f64,
    big_r: f64,
});

/// Flags shared by every subcommand.
#[derive(Args, Clone, Debug, Default)]
pub struct Common {
    /// JSON run configuration; flags win on conflict
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub map: Option<String>,
    /// `re` or `re,im`
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    command: Option<String>,
    map: Option<MapSpec>,
    out: Option<PathBuf>,
    workers: Option<usize>,
    seed: Option<u64>,
    #[serde(default)]
    options: Map<String, Value>,
}

/// Settings after merging flags over the config file.
#[derive(Debug)]
pub struct Merged<O> {
    pub map: Option<MapSpec>,
    pub out: Option<PathBuf>,
    pub workers: usize,
    pub seed: u64,
    pub opts: O,
}

/// The configuration echoed into every output. The worker count is left
/// out, since outputs do not depend on it.
#[derive(Debug, Serialize)]
pub struct Effective<O: Serialize> {
    pub command: &'static str,
    pub map: MapSpec,
    pub seed: u64,
    pub options: O,
}

impl<O: Serialize> Effective<O> {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

pub fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(anyhow!("{e}"))
}

fn read_file(path: &Path) -> Result<FileConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::Usage)?;
    serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(Failure::Usage)
}

pub fn merge<O>(command: &str, common: &Common, flags: O) -> Result<Merged<O>, Failure>
where
    O: for<'de> Deserialize<'de> + Default,
    O: MergeOpts,
{
    let file = match &common.config {
        Some(p) => read_file(p)?,
        None => FileConfig::default(),
    };
    if let Some(c) = &file.command {
        if c != command {
            return Err(usage(format!("config is for `{c}`, not `{command}`")));
        }
    }
    let file_opts: O = serde_json::from_value(Value::Object(file.options))
        .map_err(|e| usage(format!("config options: {e}")))?;

    let mut map = file.map;
    if let Some(id) = &common.map {
        let id: MapId = id.parse().map_err(usage)?;
        if map.as_ref().map(|m| m.map) != Some(id) {
            map = Some(MapSpec::plain(id));
        }
    }
    for (flag, value) in [("alpha", &common.alpha), ("beta", &common.beta)] {
        if let Some(v) = value {
            let z = parse_cx(v).map_err(usage)?;
            let spec = map.get_or_insert(MapSpec::plain(MapId::Nh));
            let slot = if flag == "alpha" { &mut spec.alpha } else { &mut spec.beta };
            *slot = Some([z.re, z.im]);
        }
    }
    let workers = common.workers.or(file.workers).unwrap_or_else(default_workers);
    if workers == 0 {
        return Err(usage("workers must be at least 1"));
    }
    Ok(Merged {
        map,
        out: common.out.clone().or(file.out),
        workers,
        seed: common.seed.or(file.seed).unwrap_or(merolab::verify::DEFAULT_SEED),
        opts: flags.merge_over(file_opts),
    })
}

/// Field-wise `self`, falling back to `other`.
pub trait MergeOpts: Sized + Serialize {
    fn merge_over(self, other: Self) -> Self;
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Rejects options that were given but play no part in the resolved run.
pub fn reject_unused<O: Serialize>(given: &O, used: &O, context: &str) -> Result<(), Failure> {
    let g = serde_json::to_value(given).expect("options serialize");
    let u = serde_json::to_value(used).expect("options serialize");
    if let (Value::Object(g), Value::Object(u)) = (g, u) {
        if let Some(k) = g.keys().find(|k| !u.contains_key(*k)) {
            return Err(usage(format!("option `{k}` does not apply to {context}")));
        }
    }
    Ok(())
}

/// `re,im` or a bare real `re`.
pub fn parse_cx(s: &str) -> anyhow::Result<Cx> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |p: &str| -> anyhow::Result<f64> {
        let v: f64 = p.parse().with_context(|| format!("`{p}` is not a number"))?;
        if !v.is_finite() {
            bail!("`{p}` is not finite");
        }
        Ok(v)
    };
    match parts.as_slice() {
        [re] => Ok(Cx::new(num(re)?, 0.0)),
        [re, im] => Ok(Cx::new(num(re)?, num(im)?)),
        _ => bail!("expected `re,im`, got `{s}`"),
    }
}

/// `x0,y0,x1,y1`
pub fn parse_window(s: &str) -> anyhow::Result<Window> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().with_context(|| format!("`{p}` is not a number")))
        .collect::<anyhow::Result<_>>()?;
    let [x0, y0, x1, y1] = v.as_slice() else {
        bail!("expected `x0,y0,x1,y1`, got `{s}`");
    };
    Ok(Window::new(*x0, *y0, *x1, *y1)?)
}

pub fn format_window(w: &Window) -> String {
    format!("{},{},{},{}", w.re_min, w.im_min, w.re_max, w.im_max)
}

pub fn format_cx(z: Cx) -> String {
    format!("{},{}", z.re, z.im)
}

/// Views matching the catalog figures.
pub fn default_window(id: MapId) -> Window {
    let (x0, y0, x1, y1) = match id {
        MapId::Nf => (-5.0, -4.0, 5.0, 4.0),
        MapId::Ng => (-5.0, -6.0, 5.0, 6.0),
        MapId::Nh => (-6.0, -8.0, 6.0, 8.0),
        MapId::Fh => (-3.0, -7.0, 4.0, 7.0),
        MapId::Gfh => (-1.0, -2.5, 6.0, 2.5),
    };
    Window::new(x0, y0, x1, y1).expect("default windows are valid")
}
