//! Quantitative evaluation: refined water-edge RMSE, small-obstacle
//! matching with a near-edge ignore band, precision/recall/F/aFP
//! aggregation, minimum-size sweeps and the buffered success probability.

use crate::detector::BoundingBox;
use crate::error::{Error, Result};

/// Per-frame ground-truth annotation.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FrameAnnotation {
    /// Vertices (x, y) of the polygon delimiting the water surface.
    pub edge_polygon: Vec<[f64; 2]>,
    /// Boxes straddling the water edge.
    #[serde(default)]
    pub large_obstacles: Vec<BoundingBox>,
    /// Boxes fully surrounded by water; the detection targets.
    #[serde(default)]
    pub small_obstacles: Vec<BoundingBox>,
    /// Regions of saturated sun reflection, optional.
    #[serde(default)]
    pub glitter: Vec<BoundingBox>,
}

impl FrameAnnotation {
    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Counts and matched pairs from one frame's detection matching.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MatchOutcome {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    /// (detection index, ground-truth index, IoU) per matched pair.
    pub pairs: Vec<(usize, usize, f64)>,
}

/// Aggregated metrics over a sequence.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Metrics {
    /// Water-edge RMSE in pixels, averaged across frames.
    pub edg: f64,
    pub prec: f64,
    pub rec: f64,
    pub f: f64,
    /// False positives per frame.
    pub afp: f64,
    pub frames: usize,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// Buffered success probability, present when requested.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p_success: Option<f64>,
}

impl Metrics {
    /// Aligned plain-text table.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{:<10} {:>10}\n", "metric", "value"));
        out.push_str(&format!("{:<10} {:>10.3}\n", "Edg [px]", self.edg));
        out.push_str(&format!("{:<10} {:>10.3}\n", "Prec", self.prec));
        out.push_str(&format!("{:<10} {:>10.3}\n", "Rec", self.rec));
        out.push_str(&format!("{:<10} {:>10.3}\n", "F", self.f));
        out.push_str(&format!("{:<10} {:>10.3}\n", "aFP", self.afp));
        out.push_str(&format!("{:<10} {:>10}\n", "frames", self.frames));
        out.push_str(&format!(
            "{:<10} {:>10}\n",
            "tp/fp/fn",
            format!("{}/{}/{}", self.tp, self.fp, self.fn_)
        ));
        if let Some(p) = self.p_success {
            out.push_str(&format!("{:<10} {:>10.4}\n", "p_success", p));
        }
        out
    }
}

/// Glitter-region treatment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GlitterMode {
    /// Detections centered inside a glitter box are dropped before
    /// matching.
    Ignore,
    /// Glitter regions get no special treatment.
    Account,
}

impl std::str::FromStr for GlitterMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ignore" => Ok(GlitterMode::Ignore),
            "account" => Ok(GlitterMode::Account),
            other => Err(Error::InvalidArgument(format!(
                "unknown glitter mode '{other}' (expected ignore|account)"
            ))),
        }
    }
}

/// Intersection over union of two boxes (half-open extents).
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let ix = (a.x + a.w).min(b.x + b.w) - a.x.max(b.x);
    let iy = (a.y + a.h).min(b.y + b.h) - a.y.max(b.y);
    if ix <= 0.0 || iy <= 0.0 {
        return 0.0;
    }
    let inter = ix * iy;
    inter / (a.area() + b.area() - inter)
}

/// Rasterize the annotated water polygon into a per-column top-of-water
/// profile, then lift the profile to the top edge of every large obstacle
/// that straddles it (the water edge rides over large obstacles).
///
/// Columns are sampled at integer x coordinates; columns outside the
/// polygon's horizontal span take the frame height (no water).
pub fn refine_gt_edge(
    ann: &FrameAnnotation,
    frame_w: usize,
    frame_h: usize,
) -> Result<Vec<f64>> {
    if ann.edge_polygon.len() < 2 {
        return Err(Error::MalformedAnnotation(
            "edge polygon needs at least 2 vertices".into(),
        ));
    }
    for v in &ann.edge_polygon {
        if v[0] < 0.0 || v[1] < 0.0 || v[0] > frame_w as f64 || v[1] > frame_h as f64 {
            return Err(Error::MalformedAnnotation(format!(
                "polygon vertex ({}, {}) outside frame {}x{}",
                v[0], v[1], frame_w, frame_h
            )));
        }
    }
    let span_min = ann.edge_polygon.iter().map(|v| v[0]).fold(f64::INFINITY, f64::min);
    let span_max = ann
        .edge_polygon
        .iter()
        .map(|v| v[0])
        .fold(f64::NEG_INFINITY, f64::max);
    if span_max - span_min <= 0.0 {
        return Err(Error::MalformedAnnotation("polygon has zero-width span".into()));
    }

    let mut profile = vec![frame_h as f64; frame_w];
    let n = ann.edge_polygon.len();
    for e in 0..n {
        let a = ann.edge_polygon[e];
        let b = ann.edge_polygon[(e + 1) % n];
        let (x0, x1) = (a[0].min(b[0]), a[0].max(b[0]));
        let c0 = x0.ceil().max(0.0) as usize;
        let c1 = x1.floor().min((frame_w - 1) as f64) as usize;
        if c0 > c1 {
            continue;
        }
        for col in c0..=c1 {
            let y = if a[0] == b[0] {
                a[1].min(b[1])
            } else {
                let t = (col as f64 - a[0]) / (b[0] - a[0]);
                a[1] + t * (b[1] - a[1])
            };
            if y < profile[col] {
                profile[col] = y;
            }
        }
    }

    for obs in &ann.large_obstacles {
        let c0 = obs.x.ceil().max(0.0) as usize;
        let c1 = (obs.x + obs.w).floor().min((frame_w - 1) as f64) as usize;
        if c0 > c1 {
            continue;
        }
        for col in c0..=c1 {
            // Straddle check per column: the box top is above the current
            // edge and the box bottom at or below it.
            if obs.y <= profile[col] && profile[col] <= obs.y + obs.h {
                profile[col] = obs.y;
            }
        }
    }
    Ok(profile)
}

/// Root mean square difference between two per-column edge profiles.
pub fn edge_rmse(est: &[f64], gt: &[f64]) -> Result<f64> {
    if est.len() != gt.len() {
        return Err(Error::DimensionMismatch(format!(
            "edge profiles have {} vs {} columns",
            est.len(),
            gt.len()
        )));
    }
    if est.is_empty() {
        return Err(Error::InvalidArgument("empty edge profiles".into()));
    }
    let sum_sq: f64 = est
        .iter()
        .zip(gt)
        .map(|(a, b)| {
            let d = a - b;
            d * d
        })
        .sum();
    Ok((sum_sq / est.len() as f64).sqrt())
}

/// Drop every detection and ground-truth box whose center lies strictly
/// closer (vertically) than `band` pixels to the ground-truth edge at the
/// box-center column.
pub fn apply_ignore_band(
    dets: &[BoundingBox],
    gts: &[BoundingBox],
    gt_edge: &[f64],
    band: f64,
) -> (Vec<BoundingBox>, Vec<BoundingBox>) {
    let keep = |b: &&BoundingBox| -> bool {
        let (cx, cy) = b.center();
        let col = (cx.round() as isize).clamp(0, gt_edge.len() as isize - 1) as usize;
        (cy - gt_edge[col]).abs() >= band
    };
    (
        dets.iter().filter(keep).copied().collect(),
        gts.iter().filter(keep).copied().collect(),
    )
}

/// Drop detections whose center lies inside any glitter region
/// (ignore mode); account mode passes everything through.
pub fn filter_glitter(
    dets: &[BoundingBox],
    glitter: &[BoundingBox],
    mode: GlitterMode,
) -> Vec<BoundingBox> {
    if mode == GlitterMode::Account || glitter.is_empty() {
        return dets.to_vec();
    }
    dets.iter()
        .filter(|d| {
            let (cx, cy) = d.center();
            !glitter
                .iter()
                .any(|g| cx >= g.x && cx < g.x + g.w && cy >= g.y && cy < g.y + g.h)
        })
        .copied()
        .collect()
}

/// Greedy one-to-one matching in descending IoU order; pairs at or above
/// `min_overlap` count as true positives, leftover detections as false
/// positives, leftover ground truths as false negatives.
pub fn match_detections(
    dets: &[BoundingBox],
    gts: &[BoundingBox],
    min_overlap: f64,
) -> MatchOutcome {
    let mut candidates: Vec<(usize, usize, f64)> = Vec::new();
    for (di, d) in dets.iter().enumerate() {
        for (gi, g) in gts.iter().enumerate() {
            let val = iou(d, g);
            if val >= min_overlap {
                candidates.push((di, gi, val));
            }
        }
    }
    candidates.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    let mut det_used = vec![false; dets.len()];
    let mut gt_used = vec![false; gts.len()];
    let mut pairs = Vec::new();
    for (di, gi, val) in candidates {
        if !det_used[di] && !gt_used[gi] {
            det_used[di] = true;
            gt_used[gi] = true;
            pairs.push((di, gi, val));
        }
    }
    let tp = pairs.len();
    MatchOutcome {
        tp,
        fp: dets.len() - tp,
        fn_: gts.len() - tp,
        pairs,
    }
}

/// Minimum-size sweep filter: ground truths with `min(w, h) < a` are
/// removed, detections with `min(w, h) < a` are removed, and detections
/// overlapping a removed ground truth with IoU >= 0.3 are removed as
/// well.
pub fn size_filter(
    dets: &[BoundingBox],
    gts: &[BoundingBox],
    a: f64,
) -> (Vec<BoundingBox>, Vec<BoundingBox>) {
    let small = |b: &BoundingBox| b.w.min(b.h) < a;
    let removed_gts: Vec<BoundingBox> = gts.iter().filter(|g| small(g)).copied().collect();
    let kept_gts: Vec<BoundingBox> = gts.iter().filter(|g| !small(g)).copied().collect();
    let kept_dets: Vec<BoundingBox> = dets
        .iter()
        .filter(|d| !small(d) && !removed_gts.iter().any(|g| iou(d, g) >= 0.3))
        .copied()
        .collect();
    (kept_dets, kept_gts)
}

/// Success probability of detecting an object at least once in `n_buf`
/// consecutive frames, assuming independent per-frame recall.
pub fn p_success(rec: f64, n_buf: u32) -> f64 {
    1.0 - (1.0 - rec).powi(n_buf as i32)
}

/// Pool per-frame outcomes and edge errors into sequence metrics.
pub fn aggregate(outcomes: &[MatchOutcome], edge_rmses: &[f64]) -> Result<Metrics> {
    if outcomes.is_empty() || edge_rmses.is_empty() {
        return Err(Error::InvalidArgument("nothing to aggregate".into()));
    }
    let tp: usize = outcomes.iter().map(|o| o.tp).sum();
    let fp: usize = outcomes.iter().map(|o| o.fp).sum();
    let fn_: usize = outcomes.iter().map(|o| o.fn_).sum();
    let prec = if tp + fp > 0 {
        tp as f64 / (tp + fp) as f64
    } else {
        0.0
    };
    let rec = if tp + fn_ > 0 {
        tp as f64 / (tp + fn_) as f64
    } else {
        0.0
    };
    let f = if prec + rec > 0.0 {
        2.0 * prec * rec / (prec + rec)
    } else {
        0.0
    };
    Ok(Metrics {
        edg: edge_rmses.iter().sum::<f64>() / edge_rmses.len() as f64,
        prec,
        rec,
        f,
        afp: fp as f64 / outcomes.len() as f64,
        frames: outcomes.len(),
        tp,
        fp,
        fn_,
        p_success: None,
    })
}

/// Frame-level evaluation options.
#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    /// PASCAL-style minimum IoU for a match.
    pub min_overlap: f64,
    /// Ignore band height as a fraction of the frame height.
    pub band_frac: f64,
    /// Minimum object side for the size sweep; 0 disables it.
    pub min_size: f64,
    pub glitter: GlitterMode,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            min_overlap: 0.3,
            band_frac: 0.05,
            min_size: 0.0,
            glitter: GlitterMode::Account,
        }
    }
}

/// Result of evaluating one frame.
#[derive(Debug, Clone)]
pub struct FrameEval {
    pub rmse: f64,
    pub outcome: MatchOutcome,
}

/// Full per-frame protocol: refine the ground-truth edge, score the
/// estimated edge, then run glitter filtering, the ignore band, the
/// optional size filter and greedy matching on the small obstacles.
pub fn evaluate_frame(
    dets: &[BoundingBox],
    est_edge: &[f64],
    ann: &FrameAnnotation,
    frame_w: usize,
    frame_h: usize,
    opts: &EvalOptions,
) -> Result<FrameEval> {
    let gt_edge = refine_gt_edge(ann, frame_w, frame_h)?;
    let rmse = edge_rmse(est_edge, &gt_edge)?;
    let dets = filter_glitter(dets, &ann.glitter, opts.glitter);
    let band = opts.band_frac * frame_h as f64;
    let (dets, gts) = apply_ignore_band(&dets, &ann.small_obstacles, &gt_edge, band);
    let (dets, gts) = if opts.min_size > 0.0 {
        size_filter(&dets, &gts, opts.min_size)
    } else {
        (dets, gts)
    };
    let outcome = match_detections(&dets, &gts, opts.min_overlap);
    Ok(FrameEval { rmse, outcome })
}
