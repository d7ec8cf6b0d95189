//! Subcommand implementations.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use seaseg_core::detector::{
    read_boxes_json, read_edge_txt, write_boxes_json, write_edge_txt, write_mask_pgm, BoundingBox,
    DetectorConfig, DetectorMode, DetectorState, FrameResult, StageTimings,
};
use seaseg_core::evaluation::{
    aggregate, evaluate_frame, EvalOptions, FrameAnnotation, GlitterMode, MatchOutcome, Metrics,
};
use seaseg_core::imaging::{load_image, read_pnm, write_ppm, Colorspace, ImageU8};
use seaseg_core::mixture::WeakPriors;
use seaseg_core::prior_learn::{learn_weak_priors, TrainingExample};
use seaseg_core::synth::{write_sequence, SceneSpec};
use seaseg_core::Error as CoreError;

use crate::DetectorFlags;

/// Error carrying the process exit code.
pub struct CliError {
    pub code: i32,
    pub message: anyhow::Error,
}

pub type CmdResult = Result<(), CliError>;

fn usage(message: anyhow::Error) -> CliError {
    CliError { code: 2, message }
}

fn processing(message: anyhow::Error) -> CliError {
    CliError { code: 1, message }
}

/// Map a core error to an exit code: malformed or missing inputs are
/// usage errors (2); numerical failures are processing errors (1).
fn core_err(e: CoreError) -> CliError {
    let code = match &e {
        CoreError::NumericalFailure(_) | CoreError::NotPositiveDefinite => 1,
        _ => 2,
    };
    CliError { code, message: anyhow::Error::new(e) }
}

fn parse_colorspace(s: &str) -> Result<Colorspace, CliError> {
    s.parse::<Colorspace>().map_err(|e| usage(anyhow::Error::new(e)))
}

fn parse_mode(s: &str) -> Result<DetectorMode, CliError> {
    s.parse::<DetectorMode>().map_err(|e| usage(anyhow::Error::new(e)))
}

fn build_state(flags: &DetectorFlags) -> Result<DetectorState<f64>, CliError> {
    let priors = WeakPriors::<f64>::load(&flags.priors).map_err(core_err)?;
    let mut config = DetectorConfig {
        working_size: flags.working_size,
        alpha: flags.alpha,
        colorspace: parse_colorspace(&flags.colorspace)?,
        mode: parse_mode(&flags.mode)?,
        merge_gap: flags.merge_gap,
        ..DetectorConfig::default()
    };
    config.em.max_iters = flags.max_iters;
    config.em.tol = flags.tol;
    DetectorState::new(priors, config).map_err(core_err)
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))
        .map_err(processing)
}

fn stem_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "frame".into())
}

fn write_frame_outputs(
    outdir: &Path,
    stem: &str,
    result: &FrameResult<f64>,
) -> Result<(), CliError> {
    write_mask_pgm(&outdir.join(format!("{stem}_mask.pgm")), &result.water_mask)
        .map_err(|e| processing(e.into()))?;
    write_edge_txt(&outdir.join(format!("{stem}_edge.txt")), &result.edge)
        .map_err(|e| processing(e.into()))?;
    write_boxes_json(&outdir.join(format!("{stem}_boxes.json")), &result.obstacles)
        .map_err(|e| processing(e.into()))
}

fn draw_overlay(frame: &ImageU8, result: &FrameResult<f64>) -> ImageU8 {
    let mut img = frame.clone();
    let (w, h) = (img.width, img.height);
    let mut put = |x: isize, y: isize, color: [u8; 3]| {
        if x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h {
            for (ch, v) in color.into_iter().enumerate() {
                img.set(x as usize, y as usize, ch, v);
            }
        }
    };
    let green = [40, 230, 60];
    for (x, &row) in result.edge.iter().enumerate() {
        for dy in -1..=1isize {
            put(x as isize, row as isize + dy, green);
        }
    }
    let yellow = [250, 220, 40];
    for b in &result.obstacles {
        let (x0, y0) = (b.x as isize, b.y as isize);
        let (x1, y1) = ((b.x + b.w) as isize - 1, (b.y + b.h) as isize - 1);
        for x in x0..=x1 {
            put(x, y0, yellow);
            put(x, y1, yellow);
        }
        for y in y0..=y1 {
            put(x0, y, yellow);
            put(x1, y, yellow);
        }
    }
    img
}

pub fn cmd_segment(
    frame_path: &Path,
    flags: &DetectorFlags,
    outdir: &Path,
    overlay: bool,
) -> CmdResult {
    let mut state = build_state(flags)?;
    let frame = load_image(frame_path).map_err(core_err)?;
    ensure_dir(outdir)?;
    let result = state.process_frame(&frame).map_err(core_err)?;
    let stem = stem_of(frame_path);
    write_frame_outputs(outdir, &stem, &result)?;
    if overlay {
        write_ppm(&outdir.join(format!("{stem}_overlay.ppm")), &draw_overlay(&frame, &result))
            .map_err(|e| processing(e.into()))?;
    }
    println!(
        "{stem}: {} obstacle(s), fit {} iteration(s){}, {:.1} ms",
        result.obstacles.len(),
        result.fit.iterations,
        if result.fit.converged { "" } else { " (not converged)" },
        result.timing.total_ms
    );
    Ok(())
}

const FRAME_EXTENSIONS: [&str; 5] = ["ppm", "pgm", "png", "jpg", "jpeg"];

fn list_frames(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries = std::fs::read_dir(dir)
        .with_context(|| format!("reading sequence directory {}", dir.display()))
        .map_err(usage)?;
    let mut frames: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let ext = p.extension().and_then(|e| e.to_str()).unwrap_or_default();
            let stem = stem_of(p);
            FRAME_EXTENSIONS.contains(&ext.to_ascii_lowercase().as_str())
                && !stem.ends_with("_labels")
                && !stem.ends_with("_mask")
                && !stem.ends_with("_overlay")
        })
        .collect();
    frames.sort();
    if frames.is_empty() {
        return Err(usage(anyhow!("no frames found in {}", dir.display())));
    }
    Ok(frames)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values[values.len() / 2]
}

pub fn cmd_run(
    sequence: &Path,
    flags: &DetectorFlags,
    outdir: &Path,
    reset_every: usize,
) -> CmdResult {
    let mut state = build_state(flags)?;
    let frames = list_frames(sequence)?;
    ensure_dir(outdir)?;
    let mut timings: Vec<StageTimings> = Vec::new();
    let mut failures = 0usize;
    for (i, path) in frames.iter().enumerate() {
        if reset_every > 0 && i % reset_every == 0 {
            state.reset();
        }
        let frame = match load_image(path) {
            Ok(f) => f,
            Err(e) => {
                eprintln!("frame {}: {e}", path.display());
                failures += 1;
                continue;
            }
        };
        match state.process_frame(&frame) {
            Ok(result) => {
                write_frame_outputs(outdir, &stem_of(path), &result)?;
                timings.push(result.timing);
            }
            Err(e) => {
                eprintln!("frame {}: {e}", path.display());
                failures += 1;
            }
        }
    }
    if !timings.is_empty() {
        let med = |f: fn(&StageTimings) -> f64| -> f64 {
            let mut v: Vec<f64> = timings.iter().map(f).collect();
            median(&mut v)
        };
        let mut fit_detect: Vec<f64> = timings.iter().map(|t| t.fit_ms + t.detect_ms).collect();
        let summary = serde_json::json!({
            "frames": timings.len(),
            "failed": failures,
            "median_ms": {
                "downscale": med(|t| t.downscale_ms),
                "features": med(|t| t.features_ms),
                "init": med(|t| t.init_ms),
                "fit": med(|t| t.fit_ms),
                "detect": med(|t| t.detect_ms),
                "finalize": med(|t| t.finalize_ms),
                "total": med(|t| t.total_ms),
            },
            "median_fit_plus_detect_ms": median(&mut fit_detect),
        });
        std::fs::write(
            outdir.join("timing.json"),
            serde_json::to_string_pretty(&summary).expect("timing json") + "\n",
        )
        .context("writing timing.json")
        .map_err(processing)?;
        println!("{} frame(s), {} failed", timings.len(), failures);
        println!("median per-stage ms:");
        for (name, f) in [
            ("downscale", med(|t: &StageTimings| t.downscale_ms)),
            ("features", med(|t: &StageTimings| t.features_ms)),
            ("init", med(|t: &StageTimings| t.init_ms)),
            ("fit", med(|t: &StageTimings| t.fit_ms)),
            ("detect", med(|t: &StageTimings| t.detect_ms)),
            ("finalize", med(|t: &StageTimings| t.finalize_ms)),
            ("total", med(|t: &StageTimings| t.total_ms)),
        ] {
            println!("  {name:<10} {f:>8.2}");
        }
    }
    if failures > 0 {
        return Err(processing(anyhow!("{failures} frame(s) failed")));
    }
    Ok(())
}

pub fn cmd_learn_priors(
    training: &Path,
    output: &Path,
    working_size: usize,
    colorspace: &str,
    mode: &str,
) -> CmdResult {
    let colorspace = parse_colorspace(colorspace)?;
    let feature_mode = parse_mode(mode)?.feature_mode();
    let frames = list_frames(training)?;
    let mut examples = Vec::new();
    for path in &frames {
        let labels_path = path.with_file_name(format!("{}_labels.pgm", stem_of(path)));
        if !labels_path.exists() {
            return Err(usage(anyhow!(
                "missing label mask {} for {}",
                labels_path.display(),
                path.display()
            )));
        }
        examples.push(TrainingExample {
            image: load_image(path).map_err(core_err)?,
            labels: read_pnm(&labels_path).map_err(core_err)?,
        });
    }
    let priors =
        learn_weak_priors::<f64>(&examples, colorspace, feature_mode, working_size, 1e-5)
            .map_err(core_err)?;
    priors.save(output).map_err(|e| processing(e.into()))?;
    println!(
        "learned priors from {} example(s) -> {}",
        examples.len(),
        output.display()
    );
    for (k, comp) in priors.components.iter().enumerate() {
        let mean: Vec<String> = comp.mean.iter().map(|v| format!("{v:.4}")).collect();
        println!("  component {}: mean [{}]", k + 1, mean.join(", "));
    }
    Ok(())
}

pub fn cmd_evaluate(
    results: &Path,
    annotations: &Path,
    min_size: f64,
    glitter: &str,
    nbuf: Option<u32>,
    output: Option<&Path>,
) -> CmdResult {
    let glitter: GlitterMode = glitter.parse().map_err(|e: CoreError| usage(e.into()))?;
    let mut ann_files: Vec<PathBuf> = std::fs::read_dir(annotations)
        .with_context(|| format!("reading annotations directory {}", annotations.display()))
        .map_err(usage)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("json"))
        .collect();
    ann_files.sort();
    if ann_files.is_empty() {
        return Err(usage(anyhow!("no annotations in {}", annotations.display())));
    }
    let opts = EvalOptions {
        min_size,
        glitter,
        ..EvalOptions::default()
    };
    let mut outcomes: Vec<MatchOutcome> = Vec::new();
    let mut rmses: Vec<f64> = Vec::new();
    for ann_path in &ann_files {
        let stem = stem_of(ann_path);
        let boxes_path = results.join(format!("{stem}_boxes.json"));
        let edge_path = results.join(format!("{stem}_edge.txt"));
        let mask_path = results.join(format!("{stem}_mask.pgm"));
        for p in [&boxes_path, &edge_path, &mask_path] {
            if !p.exists() {
                return Err(usage(anyhow!(
                    "annotation/result mismatch: {} has no {}",
                    stem,
                    p.display()
                )));
            }
        }
        let ann = FrameAnnotation::load(ann_path).map_err(core_err)?;
        let dets = read_boxes_json(&boxes_path).map_err(core_err)?;
        let edge = read_edge_txt(&edge_path).map_err(core_err)?;
        let mask = read_pnm(&mask_path).map_err(core_err)?;
        if edge.len() != mask.width {
            return Err(usage(anyhow!(
                "{stem}: edge has {} columns but the mask is {} wide",
                edge.len(),
                mask.width
            )));
        }
        let est: Vec<f64> = edge.iter().map(|&v| v as f64).collect();
        let ev = evaluate_frame(&dets, &est, &ann, mask.width, mask.height, &opts)
            .map_err(core_err)?;
        outcomes.push(ev.outcome);
        rmses.push(ev.rmse);
    }
    let mut metrics: Metrics = aggregate(&outcomes, &rmses).map_err(core_err)?;
    if let Some(n) = nbuf {
        metrics.p_success = Some(seaseg_core::evaluation::p_success(metrics.rec, n));
    }
    let outdir = output.unwrap_or(results);
    ensure_dir(outdir)?;
    std::fs::write(
        outdir.join("metrics.json"),
        serde_json::to_string_pretty(&metrics).expect("metrics json") + "\n",
    )
    .context("writing metrics.json")
    .map_err(processing)?;
    let table = metrics.to_table();
    std::fs::write(outdir.join("metrics.txt"), &table)
        .context("writing metrics.txt")
        .map_err(processing)?;
    print!("{table}");
    Ok(())
}

pub fn cmd_synth(
    spec_path: &Path,
    output: &Path,
    labels: bool,
    seed: Option<u64>,
) -> CmdResult {
    let mut spec = SceneSpec::load(spec_path).map_err(core_err)?;
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    write_sequence(output, &spec, labels).map_err(core_err)?;
    println!(
        "wrote {} frame(s) to {} (seed {})",
        spec.frames,
        output.display(),
        spec.seed
    );
    Ok(())
}

/// Best-effort adapter for externally exported annotations: one JSON file
/// holding a `frames` array; per frame the water-edge polygon may appear
/// under `edge_polygon`, `edge` or `sea_edge`, obstacle lists under
/// `large_obstacles`/`large` and `small_obstacles`/`small`/`objects`,
/// glitter under `glitter`. Boxes may be `{x,y,w,h}` objects or
/// `[x,y,w,h]` quadruples.
pub fn cmd_import_modd(export: &Path, output: &Path) -> CmdResult {
    let text = std::fs::read_to_string(export)
        .with_context(|| format!("reading {}", export.display()))
        .map_err(usage)?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .context("export is not valid JSON")
        .map_err(usage)?;
    let frames = value
        .get("frames")
        .and_then(|f| f.as_array())
        .ok_or_else(|| usage(anyhow!("export has no 'frames' array")))?;

    let parse_box = |v: &serde_json::Value| -> Option<BoundingBox> {
        if let Some(arr) = v.as_array() {
            if arr.len() == 4 {
                let vals: Vec<f64> = arr.iter().filter_map(|x| x.as_f64()).collect();
                if vals.len() == 4 {
                    return Some(BoundingBox::new(vals[0], vals[1], vals[2], vals[3]));
                }
            }
            return None;
        }
        Some(BoundingBox::new(
            v.get("x")?.as_f64()?,
            v.get("y")?.as_f64()?,
            v.get("w")?.as_f64()?,
            v.get("h")?.as_f64()?,
        ))
    };
    let parse_boxes = |frame: &serde_json::Value, keys: &[&str]| -> Vec<BoundingBox> {
        for key in keys {
            if let Some(arr) = frame.get(*key).and_then(|v| v.as_array()) {
                return arr.iter().filter_map(parse_box).collect();
            }
        }
        Vec::new()
    };

    ensure_dir(output)?;
    for (i, frame) in frames.iter().enumerate() {
        let polygon = ["edge_polygon", "edge", "sea_edge"]
            .iter()
            .find_map(|key| frame.get(*key).and_then(|v| v.as_array()))
            .ok_or_else(|| usage(anyhow!("frame {i} has no edge polygon")))?;
        let edge_polygon: Vec<[f64; 2]> = polygon
            .iter()
            .filter_map(|v| {
                let pair = v.as_array()?;
                Some([pair.first()?.as_f64()?, pair.get(1)?.as_f64()?])
            })
            .collect();
        if edge_polygon.len() < 2 {
            return Err(usage(anyhow!("frame {i}: edge polygon has < 2 usable vertices")));
        }
        let ann = FrameAnnotation {
            edge_polygon,
            large_obstacles: parse_boxes(frame, &["large_obstacles", "large"]),
            small_obstacles: parse_boxes(frame, &["small_obstacles", "small", "objects"]),
            glitter: parse_boxes(frame, &["glitter"]),
        };
        ann.save(&output.join(format!("{i:06}.json")))
            .map_err(|e| processing(e.into()))?;
    }
    println!("imported {} frame annotation(s) into {}", frames.len(), output.display());
    Ok(())
}
