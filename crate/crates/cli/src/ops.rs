//! Subcommand bodies. Each one converts flags, calls a single library
//! operation, and writes that operation's output unchanged; reports go to
//! stdout as one JSON object per line.

use std::fs;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use panocanon::io::{read_erp_png, read_persp_png, write_erp_png, write_persp_png, PngDepth};
use panocanon::leveling::{
    gt_leveling_flow, read_gflw, soft_argmin_solve, warp_to_canonical, write_gflw, CandidateGrid,
};
use panocanon::metrics::{equivariance_residual, flow_epe, psnr, rotation_error_deg, seam_score};
use panocanon::sampler::{canonicalize_panorama, make_training_sample};
use panocanon::sphere::{
    project_perspective_to_erp, render_perspective_from_erp, render_perspective_supersampled,
    roll_erp,
};
use panocanon::topo::{
    ddpm_schedule, latent_to_unit_erp, make_toy_dataset, make_toy_panorama, read_gtoy,
    sample_plain, sample_with_rolling, write_gtoy, ToyDenoiser,
};
use panocanon::{
    seeds, CameraPose, Error, PoseSamplerConfig, Result, SoftArgminConfig, TrainConfig,
};

use crate::args::{
    parse_list, CanonicalizeArgs, CheckEquivarianceArgs, FlowEpeArgs, GtFlowArgs, LevelArgs,
    ProjectArgs, PsnrArgs, RenderArgs, RollArgs, RotationErrorArgs, SampleDatasetArgs,
    SampleToyArgs, SeamArgs, SolverArgs, TrainToyArgs, WarpCanonicalArgs,
};

pub fn project(a: &ProjectArgs) -> Result<()> {
    let persp = read_persp_png(&a.input)?;
    let intr = a.fov.intrinsics(persp.width(), persp.height())?;
    let pose = a.pose.pose()?;
    let erp_w = a.erp_width.unwrap_or(2 * a.erp_height);
    let (erp, mask) = project_perspective_to_erp(&persp, &intr, &pose, erp_w, a.erp_height)?;
    write_erp_png(&erp, &a.out_erp, PngDepth::Eight)?;
    if let Some(mask_path) = &a.out_mask {
        write_erp_png(&mask, mask_path, PngDepth::Eight)?;
    }
    Ok(())
}

pub fn render(a: &RenderArgs) -> Result<()> {
    let erp = read_erp_png(&a.input)?;
    let intr = a.fov.intrinsics(a.width, a.height)?;
    let pose = a.pose.pose()?;
    let crop = if a.supersample == 1 {
        render_perspective_from_erp(&erp, &intr, &pose)
    } else {
        render_perspective_supersampled(&erp, &intr, &pose, a.supersample)?
    };
    write_persp_png(&crop, &a.output, PngDepth::Eight)
}

pub fn canonicalize(a: &CanonicalizeArgs) -> Result<()> {
    let erp = read_erp_png(&a.input)?;
    let pose = CameraPose::new(0.0, a.pitch_deg.to_radians(), a.roll_deg.to_radians())?;
    write_erp_png(&canonicalize_panorama(&erp, &pose), &a.output, PngDepth::Eight)
}

pub fn roll(a: &RollArgs) -> Result<()> {
    let erp = read_erp_png(&a.input)?;
    write_erp_png(&roll_erp(&erp, a.delta), &a.output, PngDepth::Eight)
}

pub fn gt_flow(a: &GtFlowArgs) -> Result<()> {
    let intr = a.fov.intrinsics(a.width, a.height)?;
    let pose = a.pose.pose()?;
    write_gflw(&gt_leveling_flow(&intr, &pose), &a.output)
}

fn solver_setup(s: &SolverArgs) -> Result<(CandidateGrid, SoftArgminConfig)> {
    let half = s.search_deg.to_radians();
    let grid = CandidateGrid::pitch_roll(-half, half, s.grid, -half, half, s.grid)?;
    Ok((
        grid,
        SoftArgminConfig {
            temperature: s.temperature,
            stages: s.stages,
            shrink: s.shrink,
        },
    ))
}

pub fn level(a: &LevelArgs) -> Result<()> {
    let flow = read_gflw(&a.flow)?;
    let intr = a.fov.intrinsics(flow.width(), flow.height())?;
    let (grid, cfg) = solver_setup(&a.solver)?;
    let est = soft_argmin_solve(&flow, &intr, &grid, &cfg)?;
    let mut report = json!({
        "pitch_deg": est.pose.pitch.to_degrees(),
        "roll_deg": est.pose.roll.to_degrees(),
        "yaw_deg": est.pose.yaw.to_degrees(),
        "final_error": est.final_error,
        "valid_fraction": flow.valid_fraction(),
    });
    if let (Some(rp), Some(rr)) = (a.ref_pitch_deg, a.ref_roll_deg) {
        let reference = CameraPose::new(0.0, rp.to_radians(), rr.to_radians())?;
        report["rotation_error_deg"] = json!(rotation_error_deg(&est.pose, &reference));
    }
    println!("{report}");
    Ok(())
}

pub fn warp_canonical(a: &WarpCanonicalArgs) -> Result<()> {
    let erp = read_erp_png(&a.input)?;
    let flow = read_gflw(&a.flow)?;
    let intr = a.fov.intrinsics(flow.width(), flow.height())?;
    let (grid, cfg) = solver_setup(&a.solver)?;
    let est = soft_argmin_solve(&flow, &intr, &grid, &cfg)?;
    write_erp_png(&warp_to_canonical(&erp, &est), &a.output, PngDepth::Eight)?;
    println!(
        "{}",
        json!({
            "pitch_deg": est.pose.pitch.to_degrees(),
            "roll_deg": est.pose.roll.to_degrees(),
            "final_error": est.final_error,
        })
    );
    Ok(())
}

/// One `manifest.jsonl` line; paths are relative to the output directory.
#[derive(Serialize)]
struct ManifestEntry {
    source_id: String,
    seed: u64,
    yaw_deg: f64,
    pitch_deg: f64,
    roll_deg: f64,
    vfov_deg: f64,
    aspect: f64,
    crop_path: String,
    mask_path: String,
    flow_path: String,
    erp_path: String,
}

pub fn sample_dataset(a: &SampleDatasetArgs) -> Result<()> {
    let (erp, source_id) = match (&a.input, a.toy_seed) {
        (Some(path), None) => {
            let id = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "erp".to_owned());
            (read_erp_png(path)?, id)
        }
        (None, Some(toy_seed)) => (
            make_toy_panorama(toy_seed, a.toy_height, 2 * a.toy_height)?,
            format!("toy-{toy_seed}"),
        ),
        _ => {
            return Err(Error::Config(
                "exactly one of --input and --toy-seed must be given".into(),
            ))
        }
    };
    if a.count == 0 {
        return Err(Error::Config("--count must be >= 1".into()));
    }
    if a.jobs == 0 {
        return Err(Error::Config("--jobs must be >= 1".into()));
    }
    let mut cfg = PoseSamplerConfig {
        crop_height: a.crop_height,
        variations: a.count,
        seed: a.seed,
        ..PoseSamplerConfig::default()
    };
    if let Some(raw) = &a.aspects {
        cfg.aspects = parse_list("aspects", raw)?;
    }
    cfg.validate()?;
    fs::create_dir_all(&a.out_dir)?;

    // Record i draws from its own stream derived from (seed, i): outputs
    // are identical for any --jobs value and any completion order.
    let worker = |i: u32| -> Result<ManifestEntry> {
        let record_seed = seeds::derive(a.seed, u64::from(i));
        let mut rng = ChaCha8Rng::seed_from_u64(record_seed);
        let rec = make_training_sample(&erp, &mut rng, &cfg, &source_id, record_seed)?;
        let names = [
            format!("crop_{i:04}.png"),
            format!("mask_{i:04}.png"),
            format!("flow_{i:04}.gflw"),
            format!("erp_{i:04}.png"),
        ];
        write_persp_png(&rec.crop, &a.out_dir.join(&names[0]), PngDepth::Eight)?;
        write_erp_png(&rec.mask, &a.out_dir.join(&names[1]), PngDepth::Eight)?;
        write_gflw(&rec.flow, &a.out_dir.join(&names[2]))?;
        write_erp_png(&rec.erp, &a.out_dir.join(&names[3]), PngDepth::Eight)?;
        let [crop_path, mask_path, flow_path, erp_path] = names;
        Ok(ManifestEntry {
            source_id: rec.source_id,
            seed: rec.seed,
            yaw_deg: rec.pose.yaw.to_degrees(),
            pitch_deg: rec.pose.pitch.to_degrees(),
            roll_deg: rec.pose.roll.to_degrees(),
            vfov_deg: rec.intrinsics.vfov.to_degrees(),
            aspect: rec.intrinsics.aspect,
            crop_path,
            mask_path,
            flow_path,
            erp_path,
        })
    };
    let entries: Vec<ManifestEntry> = if a.jobs == 1 {
        (0..a.count).map(worker).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(a.jobs)
            .build()
            .map_err(|e| Error::Config(format!("cannot build a {}-thread pool: {e}", a.jobs)))?;
        pool.install(|| (0..a.count).into_par_iter().map(worker).collect::<Result<_>>())?
    };

    let mut manifest = fs::File::create(a.out_dir.join("manifest.jsonl"))?;
    for entry in &entries {
        let line = serde_json::to_string(entry)
            .map_err(|e| Error::Format(format!("manifest serialization: {e}")))?;
        writeln!(manifest, "{line}")?;
    }
    Ok(())
}

pub fn train_toy(a: &TrainToyArgs) -> Result<()> {
    let cfg = TrainConfig {
        lambda_shift: a.lambda_shift,
        lambda_flow: a.lambda_flow,
        lr: a.lr,
        steps: a.steps,
        seed: a.seed,
        batch_size: a.batch_size,
        hidden: a.hidden,
        padding: a.padding.into(),
        pos_channel: a.pos_channel,
        log_path: a.log.clone(),
    };
    let data = make_toy_dataset(
        a.dataset_seed,
        a.dataset_size,
        a.latent_height,
        2 * a.latent_height,
    )?;
    let out = panocanon::topo::train_toy(&data, &cfg)?;
    write_gtoy(&out.net, &a.out_weights)?;
    println!(
        "{}",
        json!({
            "steps": a.steps,
            "first_loss": out.history.first().map(|r| r.total),
            "last_loss": out.history.last().map(|r| r.total),
        })
    );
    Ok(())
}

pub fn sample_toy(a: &SampleToyArgs) -> Result<()> {
    let net = read_gtoy(&a.weights)?;
    let data = make_toy_dataset(a.dataset_seed, a.item + 1, a.latent_height, 2 * a.latent_height)?;
    let item = &data[a.item];
    let schedule = ddpm_schedule(a.schedule_steps, a.beta_start, a.beta_end)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let z = if a.rolling {
        sample_with_rolling(&net, &schedule, &item.mask, &item.cond, &mut rng)?
    } else {
        sample_plain(&net, &schedule, &item.mask, &item.cond, &mut rng)?
    };
    write_erp_png(&latent_to_unit_erp(&z)?, &a.output, PngDepth::Eight)
}

pub fn check_equivariance(a: &CheckEquivarianceArgs) -> Result<()> {
    let net = ToyDenoiser::seeded(1, a.hidden, a.padding.into(), false, a.seed)?;
    let width = 2 * a.latent_height;
    let data = make_toy_dataset(a.dataset_seed, a.probes, a.latent_height, width)?;
    let probes: Vec<_> = data
        .into_iter()
        .map(|s| (s.z0, s.mask, s.cond))
        .collect();
    let deltas: Vec<i64> = match &a.deltas {
        Some(raw) => parse_list("deltas", raw)?,
        None => (1..i64::from(width)).collect(),
    };
    let timesteps: Vec<u32> = parse_list("timesteps", &a.timesteps)?;
    let residual = equivariance_residual(&net, &probes, &deltas, &timesteps)?;
    println!(
        "{}",
        json!({
            "padding": format!("{:?}", a.padding).to_lowercase(),
            "hidden": a.hidden,
            "width": width,
            "residual": residual,
        })
    );
    Ok(())
}

pub fn metrics_seam(a: &SeamArgs) -> Result<()> {
    let report = seam_score(&read_erp_png(&a.input)?);
    println!(
        "{}",
        json!({
            "seam_mad": report.seam_mad,
            "interior_mad": report.interior_mad,
            "seam_ratio": report.seam_ratio,
        })
    );
    Ok(())
}

pub fn metrics_psnr(a: &PsnrArgs) -> Result<()> {
    let value = psnr(&read_erp_png(&a.input)?, &read_erp_png(&a.reference)?)?;
    // Identical images have unbounded PSNR, which JSON renders as null.
    println!("{}", json!({ "psnr_db": value }));
    Ok(())
}

pub fn metrics_flow_epe(a: &FlowEpeArgs) -> Result<()> {
    let value = flow_epe(&read_gflw(&a.flow)?, &read_gflw(&a.reference)?)?;
    println!("{}", json!({ "epe_px": value }));
    Ok(())
}

pub fn metrics_rotation_error(a: &RotationErrorArgs) -> Result<()> {
    let estimate = CameraPose::new(0.0, a.pitch_deg.to_radians(), a.roll_deg.to_radians())?;
    let reference =
        CameraPose::new(0.0, a.ref_pitch_deg.to_radians(), a.ref_roll_deg.to_radians())?;
    println!(
        "{}",
        json!({ "rotation_error_deg": rotation_error_deg(&estimate, &reference) })
    );
    Ok(())
}
