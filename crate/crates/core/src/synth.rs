//! Deterministic synthetic maritime scenes with exact ground truth:
//! three vertically stacked bands (sky, shore, water), a configurable
//! water edge, planted in-water obstacles, optional outlier speckle and
//! glitter, and per-pixel Gaussian color noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::detector::BoundingBox;
use crate::error::{Error, Result};
use crate::evaluation::FrameAnnotation;
use crate::imaging::{write_pgm, write_ppm, ImageU8};

/// Water-edge shape, parameters in fractions of the frame height.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum EdgeProfile {
    Flat { y: f64 },
    Slanted { left: f64, right: f64 },
    Staircase { base: f64, step: f64, steps: usize },
}

impl Default for EdgeProfile {
    fn default() -> Self {
        EdgeProfile::Flat { y: 0.45 }
    }
}

/// A planted obstacle with a linear trajectory, full-resolution pixels.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ObstacleSpec {
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub vx: f64,
    #[serde(default)]
    pub vy: f64,
    pub w: f64,
    pub h: f64,
    #[serde(default = "default_obstacle_color")]
    pub color: [u8; 3],
}

fn default_obstacle_color() -> [u8; 3] {
    [235, 140, 40]
}

/// Bright outlier speckle planted in the water (unannotated clutter).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SpeckleSpec {
    /// Expected speckle count per frame as a fraction of water pixels.
    pub density: f64,
    /// Square speckle side in full-resolution pixels.
    #[serde(default = "default_speckle_size")]
    pub size: usize,
    #[serde(default = "default_speckle_color")]
    pub color: [u8; 3],
    /// Speckles land at least this fraction of the frame height below the
    /// water edge.
    #[serde(default = "default_speckle_margin")]
    pub margin: f64,
}

fn default_speckle_size() -> usize {
    1
}
fn default_speckle_color() -> [u8; 3] {
    // Moderate contrast over the default water color: strong enough to
    // flip an isolated pixel without spatial support, weak enough that
    // neighborhood coupling can veto it.
    [95, 120, 165]
}
fn default_speckle_margin() -> f64 {
    0.12
}

impl Default for SpeckleSpec {
    fn default() -> Self {
        Self {
            density: 0.0008,
            size: default_speckle_size(),
            color: default_speckle_color(),
            margin: default_speckle_margin(),
        }
    }
}

/// Dense saturated speckle region, annotated as glitter.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GlitterSpec {
    /// Region in fractions of the frame (x, y, w, h).
    pub region: [f64; 4],
    /// Fraction of region pixels painted.
    pub density: f64,
}

/// Full scene description; serialized as the `synth` command's input.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SceneSpec {
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub sky_color: [u8; 3],
    pub shore_color: [u8; 3],
    pub water_color: [u8; 3],
    /// Per-channel Gaussian noise sigma in 8-bit units.
    pub noise_sigma: f64,
    /// Bottom of the sky band as a fraction of the frame height.
    pub sky_frac: f64,
    pub edge: EdgeProfile,
    pub obstacles: Vec<ObstacleSpec>,
    pub speckle: Option<SpeckleSpec>,
    pub glitter: Option<GlitterSpec>,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            width: 200,
            height: 200,
            frames: 1,
            sky_color: [135, 170, 210],
            shore_color: [96, 112, 66],
            water_color: [25, 50, 95],
            noise_sigma: 6.0,
            sky_frac: 0.25,
            edge: EdgeProfile::default(),
            obstacles: Vec::new(),
            speckle: None,
            glitter: None,
        }
    }
}

impl SceneSpec {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    /// Top-of-water row per column.
    fn water_top(&self) -> Vec<usize> {
        let h = self.height as f64;
        (0..self.width)
            .map(|x| {
                let frac = match self.edge {
                    EdgeProfile::Flat { y } => y,
                    EdgeProfile::Slanted { left, right } => {
                        let t = if self.width > 1 {
                            x as f64 / (self.width - 1) as f64
                        } else {
                            0.0
                        };
                        left + t * (right - left)
                    }
                    EdgeProfile::Staircase { base, step, steps } => {
                        let idx = (x * steps.max(1)) / self.width;
                        base + step * idx as f64
                    }
                };
                ((frac * h).round() as usize).min(self.height - 1)
            })
            .collect()
    }

    fn validate(&self, water_top: &[usize]) -> Result<()> {
        if self.width < 4 || self.height < 4 {
            return Err(Error::InvalidSceneSpec("frame must be at least 4x4".into()));
        }
        if self.frames == 0 {
            return Err(Error::InvalidSceneSpec("frame count must be >= 1".into()));
        }
        let sky_bottom = (self.sky_frac * self.height as f64).round() as usize;
        for (x, &top) in water_top.iter().enumerate() {
            if top < sky_bottom {
                return Err(Error::InvalidSceneSpec(format!(
                    "water edge rises into the sky band at column {x}"
                )));
            }
            if top + 1 >= self.height {
                return Err(Error::InvalidSceneSpec(format!(
                    "no water below the edge at column {x}"
                )));
            }
        }
        Ok(())
    }
}

fn obstacle_box_at(o: &ObstacleSpec, t: usize) -> BoundingBox {
    BoundingBox::new(
        (o.x + o.vx * t as f64).round(),
        (o.y + o.vy * t as f64).round(),
        o.w.round(),
        o.h.round(),
    )
}

/// Generate frame `t` of the sequence with its exact annotation.
pub fn generate_frame(spec: &SceneSpec, t: usize) -> Result<(ImageU8, FrameAnnotation)> {
    let water_top = spec.water_top();
    spec.validate(&water_top)?;
    let (w, h) = (spec.width, spec.height);
    let sky_bottom = (spec.sky_frac * h as f64).round() as usize;

    let mut img = ImageU8::filled(w, h, 3, 0);
    for y in 0..h {
        for x in 0..w {
            let color = if y < sky_bottom {
                spec.sky_color
            } else if y < water_top[x] {
                spec.shore_color
            } else {
                spec.water_color
            };
            for ch in 0..3 {
                img.set(x, y, ch, color[ch]);
            }
        }
    }

    // Planted obstacles, fully inside the water region.
    let mut small_obstacles = Vec::new();
    for o in &spec.obstacles {
        let b = obstacle_box_at(o, t);
        let (x0, y0) = (b.x as isize, b.y as isize);
        let (bw, bh) = (b.w as usize, b.h as usize);
        if x0 < 0 || y0 < 0 || b.x + b.w >= w as f64 || b.y + b.h >= h as f64 {
            return Err(Error::InvalidSceneSpec(format!(
                "obstacle leaves the frame at t={t}"
            )));
        }
        let (x0, y0) = (x0 as usize, y0 as usize);
        for x in x0..x0 + bw {
            if y0 <= water_top[x] {
                return Err(Error::InvalidSceneSpec(format!(
                    "obstacle touches the water edge at t={t}, column {x}"
                )));
            }
        }
        for y in y0..y0 + bh {
            for x in x0..x0 + bw {
                for ch in 0..3 {
                    img.set(x, y, ch, o.color[ch]);
                }
            }
        }
        small_obstacles.push(b);
    }

    // Per-frame RNG stream derived from the scene seed (splitmix64 step),
    // so frames are independent and individually reproducible.
    let frame_seed = {
        let mut z = spec
            .seed
            .wrapping_add((t as u64 + 1).wrapping_mul(0x9E3779B97F4A7C15));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(frame_seed);

    if spec.noise_sigma > 0.0 {
        let normal = Normal::new(0.0f64, spec.noise_sigma)
            .map_err(|e| Error::InvalidSceneSpec(format!("bad noise sigma: {e}")))?;
        for v in &mut img.data {
            let noised = *v as f64 + normal.sample(&mut rng);
            *v = noised.round().clamp(0.0, 255.0) as u8;
        }
    }

    if let Some(sp) = &spec.speckle {
        let water_area: usize = water_top.iter().map(|&top| h - 1 - top).sum();
        let count = (sp.density * water_area as f64).round() as usize;
        let margin = (sp.margin * h as f64).round() as usize;
        for _ in 0..count {
            // Rejection-sample a position well below the edge.
            for _attempt in 0..64 {
                let x = rng.random_range(0..w.saturating_sub(sp.size).max(1));
                let y = rng.random_range(0..h.saturating_sub(sp.size).max(1));
                let top = water_top[x];
                if y > top + margin && y + sp.size < h {
                    for yy in y..y + sp.size {
                        for xx in x..x + sp.size {
                            for ch in 0..3 {
                                img.set(xx, yy, ch, sp.color[ch]);
                            }
                        }
                    }
                    break;
                }
            }
        }
    }

    let mut glitter_boxes = Vec::new();
    if let Some(gl) = &spec.glitter {
        let gx = (gl.region[0] * w as f64).round() as usize;
        let gy = (gl.region[1] * h as f64).round() as usize;
        let gw = ((gl.region[2] * w as f64).round() as usize).max(1);
        let gh = ((gl.region[3] * h as f64).round() as usize).max(1);
        if gx + gw > w || gy + gh > h {
            return Err(Error::InvalidSceneSpec("glitter region leaves the frame".into()));
        }
        for y in gy..gy + gh {
            for x in gx..gx + gw {
                if rng.random::<f64>() < gl.density {
                    for ch in 0..3 {
                        img.set(x, y, ch, [255, 252, 230][ch]);
                    }
                }
            }
        }
        glitter_boxes.push(BoundingBox::new(gx as f64, gy as f64, gw as f64, gh as f64));
    }

    // Exact edge polygon: the per-column water top closed through the
    // bottom corners.
    let mut polygon: Vec<[f64; 2]> = (0..w).map(|x| [x as f64, water_top[x] as f64]).collect();
    polygon.push([(w - 1) as f64, (h - 1) as f64]);
    polygon.push([0.0, (h - 1) as f64]);

    Ok((
        img,
        FrameAnnotation {
            edge_polygon: polygon,
            large_obstacles: Vec::new(),
            small_obstacles,
            glitter: glitter_boxes,
        },
    ))
}

/// Generate the whole sequence.
pub fn generate_sequence(spec: &SceneSpec) -> Result<Vec<(ImageU8, FrameAnnotation)>> {
    (0..spec.frames).map(|t| generate_frame(spec, t)).collect()
}

/// Full-resolution 3-region label mask for frame `t`: 1 = water,
/// 2 = shore, 3 = sky, 0 = unlabeled (obstacle pixels).
pub fn generate_labels(spec: &SceneSpec, t: usize) -> Result<ImageU8> {
    let water_top = spec.water_top();
    spec.validate(&water_top)?;
    let (w, h) = (spec.width, spec.height);
    let sky_bottom = (spec.sky_frac * h as f64).round() as usize;
    let mut labels = ImageU8::filled(w, h, 1, 0);
    for y in 0..h {
        for x in 0..w {
            let v = if y < sky_bottom {
                3
            } else if y < water_top[x] {
                2
            } else {
                1
            };
            labels.set(x, y, 0, v);
        }
    }
    for o in &spec.obstacles {
        let b = obstacle_box_at(o, t);
        for y in b.y as usize..(b.y + b.h) as usize {
            for x in b.x as usize..(b.x + b.w) as usize {
                labels.set(x, y, 0, 0);
            }
        }
    }
    Ok(labels)
}

/// Write frames, annotations and (optionally) label masks into `dir`
/// using the `NNNNNN.ppm` / `NNNNNN.json` / `NNNNNN_labels.pgm` layout.
pub fn write_sequence(dir: &std::path::Path, spec: &SceneSpec, emit_labels: bool) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (t, (frame, ann)) in generate_sequence(spec)?.into_iter().enumerate() {
        write_ppm(&dir.join(format!("{t:06}.ppm")), &frame)?;
        ann.save(&dir.join(format!("{t:06}.json")))?;
        if emit_labels {
            write_pgm(&dir.join(format!("{t:06}_labels.pgm")), &generate_labels(spec, t)?)?;
        }
    }
    Ok(())
}
