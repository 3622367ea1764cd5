//! Subcommand implementations.

use std::path::{Path, PathBuf};
use std::time::Instant;

use depthgeom::io::{self, fmt_sig9, Csv};
use depthgeom::rng::Stream;
use depthgeom::{
    add_noise, asn_normals, backproject, depth_metrics, fd_total_loss_grad, guidance_from_segments,
    lsq_normal, normal_metrics, pointcloud_metrics, sobel_normal, total_loss_grad, AsnConfig,
    DepthMap, GuidanceFeatureMap, LossConfig, NormalMap, PointMap, SamplerConfig, Scene,
    SegmentMap,
};

use crate::common::{
    canonical_scene, config_hash, file_stem, invocation, scene_label, CliError, CliResult,
};
use crate::{Command, EvalKind, Method, SceneKind};

const ORACLE_SEPARATION: f64 = 10.0;

pub fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Normals {
            depth,
            intrinsics,
            method,
            patch,
            k,
            seed,
            guidance,
            guidance_scale,
            segments,
            no_area,
            no_context,
            collinearity_eps,
            max_resample,
            out,
        } => cmd_normals(NormalsArgs {
            depth,
            intrinsics,
            method,
            patch,
            k,
            seed,
            guidance,
            guidance_scale,
            segments,
            no_area,
            no_context,
            collinearity_eps,
            max_resample,
            out,
        }),
        Command::Eval {
            pred,
            gt,
            intrinsics,
            kind,
            out,
        } => cmd_eval(&pred, &gt, &intrinsics, kind, &out),
        Command::Scene {
            kind,
            res,
            sigma,
            seed,
            tilt,
            no_background,
            outdir,
        } => cmd_scene(kind, res, sigma, seed, tilt, no_background, &outdir),
        Command::SweepK {
            kind,
            sigma,
            klist,
            res,
            seeds,
            patch,
            guidance,
            out,
        } => cmd_sweep_k(kind, sigma, &klist, res, seeds, patch, &guidance, &out),
        Command::SweepPatch {
            sizes,
            sigma,
            k,
            res,
            seeds,
            guidance,
            out,
        } => cmd_sweep_patch(&sizes, sigma, k, res, seeds, &guidance, &out),
        Command::NoiseExp {
            sigmas,
            modes,
            res,
            k,
            patch,
            seeds,
            out,
        } => cmd_noise_exp(&sigmas, &modes, res, k, patch, seeds, &out),
        Command::Gradcheck {
            res,
            seed,
            h,
            k,
            patch,
            out,
        } => cmd_gradcheck(res, seed, h, k, patch, &out),
        Command::Bench {
            res,
            methods,
            klist,
            lsq_patch,
            reps,
            out,
        } => cmd_bench(&res, &methods, &klist, lsq_patch, reps, &out),
    }
}

struct NormalsArgs {
    depth: PathBuf,
    intrinsics: PathBuf,
    method: Method,
    patch: usize,
    k: usize,
    seed: u64,
    guidance: String,
    guidance_scale: f64,
    segments: Option<PathBuf>,
    no_area: bool,
    no_context: bool,
    collinearity_eps: f64,
    max_resample: usize,
    out: PathBuf,
}

fn validate_patch(patch: usize) -> CliResult<()> {
    if patch < 3 || patch.is_multiple_of(2) {
        return Err(CliError::bad_args(format!(
            "patch size must be odd and >= 3, got {patch}"
        )));
    }
    Ok(())
}

fn resolve_guidance(
    provider: &str,
    scale: f64,
    segments: Option<&Path>,
    width: usize,
    height: usize,
) -> CliResult<GuidanceFeatureMap<f64>> {
    match provider {
        "constant" => Ok(GuidanceFeatureMap::constant(width, height, 0.0)),
        "oracle" => {
            let path = segments
                .ok_or_else(|| CliError::bad_args("--guidance oracle requires --segments"))?;
            let segs: SegmentMap = io::read_segments(path)?;
            Ok(guidance_from_segments(&segs, ORACLE_SEPARATION)?)
        }
        file => {
            let features: GuidanceFeatureMap<f64> = io::read_guidance(Path::new(file))?;
            if scale == 1.0 {
                return Ok(features);
            }
            Ok(GuidanceFeatureMap::new(
                features.width(),
                features.height(),
                features.channels(),
                features.features().iter().map(|f| f * scale).collect(),
            )?)
        }
    }
}

fn cmd_normals(args: NormalsArgs) -> CliResult<()> {
    validate_patch(args.patch)?;
    if args.k == 0 {
        return Err(CliError::bad_args("--k must be >= 1"));
    }
    let depth: DepthMap<f64> = io::read_depth(&args.depth)?;
    let intr = io::read_intrinsics(&args.intrinsics)?;
    let pm = backproject(&depth, &intr)?;
    let normals = match args.method {
        Method::Asn => {
            let guidance = resolve_guidance(
                &args.guidance,
                args.guidance_scale,
                args.segments.as_deref(),
                pm.width(),
                pm.height(),
            )?;
            let cfg = AsnConfig {
                sampler: SamplerConfig {
                    patch_size: args.patch,
                    triplet_count: args.k,
                    seed: args.seed,
                    collinearity_eps: args.collinearity_eps,
                    max_resample: args.max_resample,
                },
                use_area: !args.no_area,
                use_context: !args.no_context,
            };
            asn_normals(&pm, &guidance, &cfg)?
        }
        Method::Sobel => sobel_normal(&pm)?,
        Method::Lsq => lsq_normal(&pm, args.patch)?,
    };
    io::write_normals(&normals, &args.out)?;
    Ok(())
}

fn metric_csv(
    scene: &str,
    estimator: &str,
    rows: &[(&'static str, f64)],
    out: &Path,
) -> CliResult<()> {
    let inv = invocation();
    let hash = config_hash(&inv);
    let mut csv = Csv::new(&["scene", "estimator", "config-hash", "metric", "value"]);
    csv.comment(inv);
    for (metric, value) in rows {
        csv.row(vec![
            scene.into(),
            estimator.into(),
            hash.clone(),
            (*metric).into(),
            fmt_sig9(*value),
        ]);
    }
    csv.write(out)?;
    Ok(())
}

fn cmd_eval(
    pred: &Path,
    gt: &Path,
    intrinsics: &Path,
    kind: EvalKind,
    out: &Path,
) -> CliResult<()> {
    let scene = file_stem(gt);
    let estimator = file_stem(pred);
    let rows = match kind {
        EvalKind::Depth => {
            let p: DepthMap<f64> = io::read_depth(pred)?;
            let g: DepthMap<f64> = io::read_depth(gt)?;
            depth_metrics(&p, &g)?.rows()
        }
        EvalKind::Normal => {
            let p: NormalMap<f64> = io::read_normals(pred)?;
            let g: NormalMap<f64> = io::read_normals(gt)?;
            normal_metrics(&p, &g)?.rows()
        }
        EvalKind::Cloud => {
            let intr = io::read_intrinsics(intrinsics)?;
            let p: PointMap<f64> = backproject(&io::read_depth(pred)?, &intr)?;
            let g: PointMap<f64> = backproject(&io::read_depth(gt)?, &intr)?;
            pointcloud_metrics(&p, &g)?.rows()
        }
    };
    metric_csv(&scene, &estimator, &rows, out)
}

#[allow(clippy::too_many_arguments)]
fn cmd_scene(
    kind: SceneKind,
    res: usize,
    sigma: f64,
    seed: u64,
    tilt: f64,
    no_background: bool,
    outdir: &Path,
) -> CliResult<()> {
    if res < 8 {
        return Err(CliError::bad_args("--res must be at least 8"));
    }
    if no_background && kind != SceneKind::Hemisphere {
        return Err(CliError::bad_args(
            "--no-background applies only to the hemisphere scene",
        ));
    }
    if tilt != 0.0 && kind != SceneKind::Plane {
        return Err(CliError::bad_args("--tilt applies only to the plane scene"));
    }
    std::fs::create_dir_all(outdir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", outdir.display())))?;
    let scene = canonical_scene(kind, res, !no_background, tilt)?;
    let scene = if sigma != 0.0 {
        add_noise(&scene, sigma, seed)?
    } else {
        scene
    };
    io::write_depth(&scene.depth, &outdir.join("depth.asnr"))?;
    io::write_normals(&scene.normals_gt, &outdir.join("normals.asnr"))?;
    io::write_segments(&scene.segments, &outdir.join("segments.asnr"))?;
    io::write_intrinsics(&scene.intr, &outdir.join("intrinsics.txt"))?;
    Ok(())
}

/// Mean angle error of the operator on `seeds` noisy copies of a scene.
fn mean_error_over_seeds(
    base: &Scene<f64>,
    sigma: f64,
    seeds: u64,
    cfg: &AsnConfig,
    guidance: &GuidanceFeatureMap<f64>,
) -> CliResult<f64> {
    let mut total = 0.0;
    for seed in 0..seeds {
        let noisy = add_noise(base, sigma, seed)?;
        let pm = backproject(&noisy.depth, &base.intr)?;
        let mut cfg = *cfg;
        cfg.sampler.seed = seed;
        let nm = asn_normals(&pm, guidance, &cfg)?;
        total += normal_metrics(&nm, &base.normals_gt)?.mean_deg;
    }
    Ok(total / seeds.max(1) as f64)
}

fn sweep_guidance(provider: &str, scene: &Scene<f64>) -> CliResult<GuidanceFeatureMap<f64>> {
    match provider {
        "constant" => Ok(GuidanceFeatureMap::constant(
            scene.depth.width(),
            scene.depth.height(),
            0.0,
        )),
        "oracle" => Ok(depthgeom::oracle_guidance(scene, ORACLE_SEPARATION)?),
        other => Err(CliError::bad_args(format!(
            "guidance must be constant or oracle here, got {other}"
        ))),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep_k(
    kind: SceneKind,
    sigma: f64,
    klist: &[usize],
    res: usize,
    seeds: u64,
    patch: usize,
    guidance: &str,
    out: &Path,
) -> CliResult<()> {
    validate_patch(patch)?;
    if klist.is_empty() || seeds == 0 {
        return Err(CliError::bad_args("--klist and --seeds must be non-empty"));
    }
    let scene = canonical_scene(kind, res, true, 0.0)?;
    let guide = sweep_guidance(guidance, &scene)?;
    let inv = invocation();
    let hash = config_hash(&inv);
    let mut csv = Csv::new(&["scene", "estimator", "config-hash", "metric", "value"]);
    csv.comment(inv);
    let label = scene_label(kind, res, sigma);
    for &k in klist {
        let cfg = AsnConfig::full(SamplerConfig {
            patch_size: patch,
            triplet_count: k,
            ..Default::default()
        });
        let err = mean_error_over_seeds(&scene, sigma, seeds, &cfg, &guide)?;
        csv.row(vec![
            label.clone(),
            format!("asn-k{k}"),
            hash.clone(),
            "mean_angle_deg".into(),
            fmt_sig9(err),
        ]);
    }
    csv.write(out)?;
    Ok(())
}

fn cmd_sweep_patch(
    sizes: &[usize],
    sigma: f64,
    k: usize,
    res: usize,
    seeds: u64,
    guidance: &str,
    out: &Path,
) -> CliResult<()> {
    if sizes.is_empty() || seeds == 0 {
        return Err(CliError::bad_args("--sizes and --seeds must be non-empty"));
    }
    let scene = canonical_scene(SceneKind::Hemisphere, res, true, 0.0)?;
    let guide = sweep_guidance(guidance, &scene)?;
    let inv = invocation();
    let hash = config_hash(&inv);
    let mut csv = Csv::new(&["scene", "estimator", "config-hash", "metric", "value"]);
    csv.comment(inv);
    let label = scene_label(SceneKind::Hemisphere, res, sigma);
    for &patch in sizes {
        validate_patch(patch)?;
        let cfg = AsnConfig::full(SamplerConfig {
            patch_size: patch,
            triplet_count: k,
            ..Default::default()
        });
        let err = mean_error_over_seeds(&scene, sigma, seeds, &cfg, &guide)?;
        csv.row(vec![
            label.clone(),
            format!("asn-r{patch}"),
            hash.clone(),
            "mean_angle_deg".into(),
            fmt_sig9(err),
        ]);
    }
    csv.write(out)?;
    Ok(())
}

fn cmd_noise_exp(
    sigmas: &[f64],
    modes: &[String],
    res: usize,
    k: usize,
    patch: usize,
    seeds: u64,
    out: &Path,
) -> CliResult<()> {
    validate_patch(patch)?;
    if sigmas.is_empty() || modes.is_empty() || seeds == 0 {
        return Err(CliError::bad_args(
            "--sigmas, --modes, and --seeds must be non-empty",
        ));
    }
    let scene = canonical_scene(SceneKind::Hemisphere, res, true, 0.0)?;
    let guide = GuidanceFeatureMap::constant(res, res, 0.0);
    let inv = invocation();
    let hash = config_hash(&inv);
    let mut csv = Csv::new(&["scene", "estimator", "config-hash", "metric", "value"]);
    csv.comment(inv);
    for &sigma in sigmas {
        for mode in modes {
            let use_area = match mode.as_str() {
                "area" => true,
                "uniform" => false,
                other => {
                    return Err(CliError::bad_args(format!(
                        "mode must be area or uniform, got {other}"
                    )))
                }
            };
            let cfg = AsnConfig {
                sampler: SamplerConfig {
                    patch_size: patch,
                    triplet_count: k,
                    ..Default::default()
                },
                use_area,
                use_context: false,
            };
            let err = mean_error_over_seeds(&scene, sigma, seeds, &cfg, &guide)?;
            csv.row(vec![
                scene_label(SceneKind::Hemisphere, res, sigma),
                format!("asn-{mode}"),
                hash.clone(),
                "mean_angle_deg".into(),
                fmt_sig9(err),
            ]);
        }
    }
    csv.write(out)?;
    Ok(())
}

/// Bounded per-pixel depth perturbation, |delta| in [0.005, 0.02): far from
/// the L1 kink under a 1e-5 stencil while staying small against the scene.
pub fn perturb_depth(gt: &DepthMap<f64>, seed: u64) -> DepthMap<f64> {
    let mut values = gt.values().to_vec();
    for v in 0..gt.height() {
        for u in 0..gt.width() {
            let i = v * gt.width() + u;
            if gt.mask()[i] {
                let mut rng = Stream::for_pixel_tagged(seed, 0x70726564, u, v);
                let mag = 0.005 + 0.015 * rng.uniform();
                let sgn = if rng.next_u64() & 1 == 0 { 1.0 } else { -1.0 };
                values[i] += sgn * mag;
            }
        }
    }
    DepthMap::new(gt.width(), gt.height(), values, gt.mask().to_vec())
        .expect("perturbed depths stay positive")
}

fn cmd_gradcheck(
    res: usize,
    seed: u64,
    h: f64,
    k: usize,
    patch: usize,
    out: &Path,
) -> CliResult<()> {
    validate_patch(patch)?;
    if !(h > 0.0 && h < 0.1) {
        return Err(CliError::bad_args("--h must be a small positive step"));
    }
    let start = Instant::now();
    let scene = canonical_scene(SceneKind::Hemisphere, res, true, 0.0)?;
    let guidance = depthgeom::oracle_guidance(&scene, ORACLE_SEPARATION)?;
    let loss_cfg = LossConfig::default();
    let pred = perturb_depth(&scene.depth, seed);
    let preds = {
        let mut levels = vec![pred];
        for _ in 1..loss_cfg.scales {
            levels.push(depthgeom::downsample_half(levels.last().unwrap())?);
        }
        levels.reverse();
        levels
    };
    let asn_cfg = AsnConfig::full(SamplerConfig {
        patch_size: patch,
        triplet_count: k,
        seed,
        ..Default::default()
    });

    let analytic = total_loss_grad(
        &preds,
        &scene.depth,
        &guidance,
        &scene.normals_gt,
        &scene.intr,
        &asn_cfg,
        &loss_cfg,
    )?;
    let numeric = fd_total_loss_grad(
        &preds,
        &scene.depth,
        &guidance,
        &scene.normals_gt,
        &scene.intr,
        &asn_cfg,
        &loss_cfg,
        h,
    )?;

    let finest = preds.last().unwrap();
    let mut checked = 0usize;
    let mut max_rel: f64 = 0.0;
    let mut sum_rel = 0.0;
    for (i, &n) in numeric.iter().enumerate() {
        if analytic.flagged[i] || !finest.mask()[i] {
            continue;
        }
        let a = analytic.grad[i];
        let scale = a.abs().max(n.abs());
        let rel = if scale < 1e-12 {
            0.0
        } else {
            (a - n).abs() / scale
        };
        checked += 1;
        max_rel = max_rel.max(rel);
        sum_rel += rel;
    }
    if checked == 0 {
        return Err(CliError::Numerical(
            "gradcheck: every pixel was flagged".into(),
        ));
    }
    let rows = [
        ("max_rel_err", max_rel),
        ("mean_rel_err", sum_rel / checked as f64),
        ("flagged_pixels", analytic.flagged_count as f64),
        ("checked_pixels", checked as f64),
        ("seconds", start.elapsed().as_secs_f64()),
    ];
    metric_csv(
        &scene_label(SceneKind::Hemisphere, res, 0.0),
        "gradcheck",
        &rows,
        out,
    )
}

fn time_normals(
    pm: &PointMap<f64>,
    reps: usize,
    f: impl Fn() -> CliResult<NormalMap<f64>>,
) -> CliResult<(f64, f64)> {
    f()?; // warmup
    let mut best = f64::INFINITY;
    for _ in 0..reps.max(1) {
        let t = Instant::now();
        let nm = f()?;
        let elapsed = t.elapsed().as_secs_f64();
        std::hint::black_box(&nm);
        best = best.min(elapsed);
    }
    let per_pixel_ns = best * 1e9 / (pm.width() * pm.height()) as f64;
    Ok((best * 1e3, per_pixel_ns))
}

fn cmd_bench(
    res_list: &[usize],
    methods: &[String],
    klist: &[usize],
    lsq_patch: usize,
    reps: usize,
    out: &Path,
) -> CliResult<()> {
    validate_patch(lsq_patch)?;
    let inv = invocation();
    let hash = config_hash(&inv);
    let mut csv = Csv::new(&["scene", "estimator", "config-hash", "metric", "value"]);
    csv.comment(inv);
    for &res in res_list {
        // Tilted plane: fully valid, and the covariance eigensolver does
        // representative work (a fronto-parallel plane converges unrealistically
        // fast).
        let scene = canonical_scene(SceneKind::Plane, res, true, 0.3)?;
        let pm = backproject(&scene.depth, &scene.intr)?;
        let guide = GuidanceFeatureMap::constant(res, res, 0.0);
        let label = scene_label(SceneKind::Plane, res, 0.0);
        let mut push = |estimator: String, wall_ms: f64, ns_per_px: f64| {
            csv.row(vec![
                label.clone(),
                estimator.clone(),
                hash.clone(),
                "wall_ms".into(),
                fmt_sig9(wall_ms),
            ]);
            csv.row(vec![
                label.clone(),
                estimator,
                hash.clone(),
                "ns_per_pixel".into(),
                fmt_sig9(ns_per_px),
            ]);
        };
        for method in methods {
            match method.as_str() {
                "asn" => {
                    for &k in klist {
                        let cfg = AsnConfig::full(SamplerConfig {
                            triplet_count: k,
                            ..Default::default()
                        });
                        let (ms, ns) =
                            time_normals(&pm, reps, || Ok(asn_normals(&pm, &guide, &cfg)?))?;
                        push(format!("asn-k{k}"), ms, ns);
                    }
                }
                "sobel" => {
                    let (ms, ns) = time_normals(&pm, reps, || Ok(sobel_normal(&pm)?))?;
                    push("sobel".into(), ms, ns);
                }
                "lsq" => {
                    let (ms, ns) = time_normals(&pm, reps, || Ok(lsq_normal(&pm, lsq_patch)?))?;
                    push(format!("lsq-r{lsq_patch}"), ms, ns);
                }
                other => return Err(CliError::bad_args(format!("unknown method {other}"))),
            }
        }
    }
    csv.write(out)?;
    Ok(())
}
