use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use merolab::fatou::{boundary_distance, classify_grid, render_ppm, render_rgb, DistanceEstimate};
use merolab::psv::build_cloud;
use merolab::verify::{self, Radii, VerificationReport};
use merolab::{
    iterate_with, Cx, FatouError, IterParams, MapError, MapId, MapSpec, MeromorphicMap, VerifyError, Window,
};
use serde::Serialize;

use crate::config::{
    default_window, format_cx, format_window, merge, parse_cx, parse_window, reject_unused, usage, Common,
    DistanceOpts, Effective, Merged, OrbitOpts, PsvOpts, RenderOpts, VerifyOpts,
};
use crate::output::{csv_with_config, emit, json_with_config, write_png};
use crate::Failure;

fn runtime(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Runtime(e.into())
}

fn map_failure(e: MapError) -> Failure {
    match e {
        MapError::InvalidParams(_) | MapError::InvalidWindow(_) => usage(e),
        MapError::RootSearchFailed { .. } => runtime(e),
    }
}

fn fatou_failure(e: FatouError) -> Failure {
    match e {
        FatouError::BadResolution | FatouError::BadRays(_) => usage(e),
        FatouError::UnlabeledSeed => runtime(e),
    }
}

fn verify_failure(e: VerifyError) -> Failure {
    match e {
        VerifyError::PreconditionViolated(_) | VerifyError::UnknownCheck(_) => usage(e),
        VerifyError::Map(m) => map_failure(m),
        VerifyError::Fatou(f) => fatou_failure(f),
        other => runtime(other),
    }
}

fn in_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(runtime)?;
    Ok(pool.install(f))
}

fn build_map<O>(m: &Merged<O>, default: MapId) -> Result<(MeromorphicMap, MapSpec), Failure> {
    let spec = m.map.clone().unwrap_or_else(|| MapSpec::plain(default));
    let map = spec.build().map_err(map_failure)?;
    let spec = map.spec();
    Ok((map, spec))
}

fn window_or_default(s: &Option<String>, id: MapId) -> Result<Window, Failure> {
    match s {
        Some(w) => parse_window(w).map_err(usage),
        None => Ok(default_window(id)),
    }
}

fn required_cx(s: &Option<String>, flag: &str) -> Result<Cx, Failure> {
    let s = s.as_ref().ok_or_else(|| usage(format!("--{flag} is required")))?;
    parse_cx(s).map_err(usage)
}

fn is_ppm(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("ppm"))
}

pub fn render(common: &Common, flags: RenderOpts) -> Result<(), Failure> {
    let m = merge("render", common, flags)?;
    let (map, spec) = build_map(&m, MapId::Nf)?;
    let window = window_or_default(&m.opts.window, spec.map)?;
    let res = m.opts.res.unwrap_or(512);
    let res_y = m.opts.res_y.unwrap_or(res);
    let max_iter = m.opts.max_iter.unwrap_or(200);
    let out: PathBuf = m.out.clone().ok_or_else(|| usage("render needs --out"))?;
    let used = RenderOpts {
        window: Some(format_window(&window)),
        res: Some(res),
        res_y: Some(res_y),
        max_iter: Some(max_iter),
    };
    let eff = Effective {
        command: "render",
        map: spec,
        seed: m.seed,
        options: used,
    };
    let config = eff.to_json();
    let params = IterParams::for_map(&map).with_max_iter(max_iter);
    let grid = in_pool(m.workers, || classify_grid(&map, &window, res, res_y, &params))?
        .map_err(fatou_failure)?;
    if is_ppm(&out) {
        emit(Some(&out), &render_ppm(&grid)).map_err(runtime)?;
        let mut side = out.clone().into_os_string();
        side.push(".json");
        emit(Some(Path::new(&side)), format!("{config}\n").as_bytes()).map_err(runtime)?;
    } else {
        write_png(&out, res, res_y, &render_rgb(&grid), &config).map_err(runtime)?;
    }
    eprintln!(
        "rendered {}x{} pixels, {} attractors -> {}",
        res,
        res_y,
        grid.attractors.len(),
        out.display()
    );
    Ok(())
}

pub fn orbit(common: &Common, flags: OrbitOpts) -> Result<(), Failure> {
    let m = merge("orbit", common, flags)?;
    let (map, spec) = build_map(&m, MapId::Nf)?;
    let z0 = required_cx(&m.opts.z0, "z0")?;
    let n = m.opts.n.unwrap_or(100);
    let eff = Effective {
        command: "orbit",
        map: spec,
        seed: m.seed,
        options: OrbitOpts {
            z0: Some(format_cx(z0)),
            n: Some(n),
        },
    };
    let params = IterParams::for_map(&map).with_max_iter(n);
    let orbit = iterate_with(&map, z0, &params);
    emit(m.out.as_deref(), &csv_with_config(&eff.to_json(), &orbit.to_csv())).map_err(runtime)?;
    eprintln!("orbit of {} steps: {}", orbit.steps, orbit.verdict.short());
    Ok(())
}

pub fn psv(common: &Common, flags: PsvOpts) -> Result<(), Failure> {
    let m = merge("psv", common, flags)?;
    let (map, spec) = build_map(&m, MapId::Nf)?;
    let window = window_or_default(&m.opts.window, spec.map)?;
    let depth = m.opts.depth.unwrap_or(10);
    let eff = Effective {
        command: "psv",
        map: spec,
        seed: m.seed,
        options: PsvOpts {
            window: Some(format_window(&window)),
            depth: Some(depth),
        },
    };
    let cloud = in_pool(m.workers, || build_cloud(&map, &window, depth))?.map_err(map_failure)?;
    emit(m.out.as_deref(), &csv_with_config(&eff.to_json(), &cloud.to_csv())).map_err(runtime)?;
    eprintln!("{} postsingular points from {} singular points", cloud.len(), cloud.seeds.len());
    Ok(())
}

#[derive(Serialize)]
struct DistanceOutput {
    z: Cx,
    estimate: DistanceEstimate,
}

pub fn distance(common: &Common, flags: DistanceOpts) -> Result<(), Failure> {
    let m = merge("distance", common, flags)?;
    let (map, spec) = build_map(&m, MapId::Nf)?;
    let z = required_cx(&m.opts.z, "z")?;
    let rays = m.opts.rays.unwrap_or(64);
    let rmax = m.opts.rmax.unwrap_or(TAU);
    let eff = Effective {
        command: "distance",
        map: spec,
        seed: m.seed,
        options: DistanceOpts {
            z: Some(format_cx(z)),
            rays: Some(rays),
            rmax: Some(rmax),
        },
    };
    let params = IterParams::for_map(&map);
    let estimate = in_pool(m.workers, || boundary_distance(&map, z, &params, rays, rmax))?
        .map_err(fatou_failure)?;
    let body = DistanceOutput { z, estimate };
    emit(m.out.as_deref(), &json_with_config(&body, &eff.to_json())).map_err(runtime)?;
    eprintln!(
        "distance {}{}",
        estimate.radius,
        if estimate.lower_bound { " (lower bound)" } else { "" }
    );
    Ok(())
}

fn default_map(check: &str) -> Result<MapId, Failure> {
    Ok(match check {
        "invariant_line" | "contraction" | "corollary_c" => MapId::Nf,
        "strip" | "theorem_a" => MapId::Ng,
        "theorem_b" => MapId::Fh,
        "theorem_d" | "corollary_e" => MapId::Nh,
        other => return Err(verify_failure(VerifyError::UnknownCheck(other.to_string()))),
    })
}

fn require_map(check: &str, id: MapId, want: MapId) -> Result<(), Failure> {
    if id != want {
        return Err(usage(format!("check `{check}` applies to map `{}` only", want.name())));
    }
    Ok(())
}

/// Superattracting fixed point nearest the origin.
fn default_center(map: &MeromorphicMap) -> Result<Cx, Failure> {
    let win = Window::square(Cx::new(0.0, 0.0), 10.0).map_err(map_failure)?;
    let crit = map.singular_points(&win).map_err(map_failure)?.critical_points;
    crit.into_iter()
        .filter(|c| map.eval(*c).is_ok_and(|w| (w - c).norm() <= 1e-8))
        .min_by(|a, b| a.norm().total_cmp(&b.norm()))
        .ok_or_else(|| usage("no superattracting fixed point near 0; pass --c"))
}

fn run_check(
    map: &MeromorphicMap,
    spec: &MapSpec,
    o: &VerifyOpts,
    seed: u64,
) -> Result<(VerifyOpts, VerificationReport), Failure> {
    let check = o.check.clone().expect("check is set");
    let mut used = VerifyOpts {
        check: Some(check.clone()),
        ..Default::default()
    };
    let id = spec.map;
    let report = match check.as_str() {
        "invariant_line" => {
            require_map(&check, id, MapId::Nf)?;
            let k = *used.k.insert(o.k.unwrap_or(0));
            let samples = *used.samples.insert(o.samples.unwrap_or(100));
            let offset = *used.offset.insert(o.offset.unwrap_or(0.0));
            verify::check_invariant_line_nf(k, samples, offset)
        }
        "strip" => {
            require_map(&check, id, MapId::Ng)?;
            let k = *used.k.insert(o.k.unwrap_or(0));
            let samples = *used.samples.insert(o.samples.unwrap_or(500));
            let hw = *used.half_width.insert(o.half_width.unwrap_or(verify::STRIP_HALF_WIDTH));
            verify::check_strip_ng(k, samples, hw, seed)
        }
        "contraction" => {
            let c = match &o.c {
                Some(s) => parse_cx(s).map_err(usage)?,
                None => default_center(map)?,
            };
            used.c = Some(format_cx(c));
            let grid_n = *used.grid_n.insert(o.grid_n.unwrap_or(201));
            let r = match o.r {
                Some(r) => r,
                None if id == MapId::Nf => 0.5,
                None => verify::contraction_radius(map, c, grid_n).map_err(verify_failure)?,
            };
            used.r = Some(r);
            verify::certify_contraction_disk(map, c, r, grid_n)
        }
        "theorem_b" => {
            let z0 = match (&o.z0, id) {
                (Some(s), _) => parse_cx(s).map_err(usage)?,
                (None, MapId::Fh) => verify::fh_wandering_seed(1),
                (None, _) => return Err(usage("--z0 is required for this map")),
            };
            used.z0 = Some(format_cx(z0));
            let n_max = *used.n_max.insert(o.n_max.unwrap_or(20));
            let depth = *used.cloud_depth.insert(o.cloud_depth.unwrap_or(8));
            verify::theorem_b_ratio(map, z0, n_max, depth)
        }
        "theorem_a" => {
            let z0 = match (&o.z0, id) {
                (Some(s), _) => parse_cx(s).map_err(usage)?,
                (None, MapId::Ng) => Cx::new(0.0, 10.0),
                (None, _) => return Err(usage("--z0 is required for this map")),
            };
            used.z0 = Some(format_cx(z0));
            let d = Radii::default();
            let radii = Radii {
                r0: *used.r0.insert(o.r0.unwrap_or(d.r0)),
                factor: *used.factor.insert(o.factor.unwrap_or(d.factor)),
                count: *used.count.insert(o.count.unwrap_or(d.count)),
            };
            let depth = *used.cloud_depth.insert(o.cloud_depth.unwrap_or(12));
            verify::theorem_a_scan(map, z0, radii, depth)
        }
        "corollary_c" => {
            let (seed_z, n) = match id {
                MapId::Ng => (Cx::new(0.0, 5.0), 20),
                _ => (Cx::new(0.3, 0.2), 30),
            };
            let z0 = match &o.z0 {
                Some(s) => parse_cx(s).map_err(usage)?,
                None => seed_z,
            };
            used.z0 = Some(format_cx(z0));
            let n_max = *used.n_max.insert(o.n_max.unwrap_or(n));
            verify::corollary_c_disks(map, z0, n_max)
        }
        "theorem_d" => {
            let p = map
                .nh_params()
                .ok_or_else(|| usage("check `theorem_d` applies to map `nh` only"))?;
            let m = *used.m.insert(o.m.unwrap_or(100.0));
            let big_r = *used.big_r.insert(o.big_r.unwrap_or(8.0));
            verify::theorem_d_winding(p.alpha(), p.beta(), m, big_r)
        }
        "corollary_e" => {
            let p = map
                .nh_params()
                .ok_or_else(|| usage("check `corollary_e` applies to map `nh` only"))?;
            if p.alpha().im != 0.0 || p.beta().im != 0.0 {
                return Err(usage("corollary_e needs real alpha and beta"));
            }
            verify::corollary_e_capture(p.alpha().re, p.beta().re)
        }
        other => Err(VerifyError::UnknownCheck(other.to_string())),
    }
    .map_err(verify_failure)?;
    Ok((used, report))
}

pub fn verify(common: &Common, flags: VerifyOpts) -> Result<(), Failure> {
    let m = merge("verify", common, flags)?;
    let check = m.opts.check.clone().ok_or_else(|| usage("--check is required"))?;
    let (map, spec) = build_map(&m, default_map(&check)?)?;
    let (used, report) = in_pool(m.workers, || run_check(&map, &spec, &m.opts, m.seed))??;
    reject_unused(&m.opts, &used, &format!("check `{check}`"))?;
    let eff = Effective {
        command: "verify",
        map: spec,
        seed: m.seed,
        options: used,
    };
    emit(m.out.as_deref(), &json_with_config(&report, &eff.to_json())).map_err(runtime)?;
    eprintln!("{}: {} ({})", report.check, if report.pass { "PASS" } else { "FAIL" }, report.notes);
    if report.pass {
        Ok(())
    } else {
        Err(Failure::CheckFailed)
    }
}
