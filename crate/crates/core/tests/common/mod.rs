//! Shared helpers for integration tests: synthetic training sets, learned
//! weak priors and scene suites.

use seaseg_core::imaging::{Colorspace, FeatureMode};
use seaseg_core::mixture::WeakPriors;
use seaseg_core::prior_learn::{learn_weak_priors, TrainingExample};
use seaseg_core::synth::{generate_frame, generate_labels, EdgeProfile, SceneSpec};

/// Color palette variations across the synthetic training set.
pub const WATER_COLORS: [[u8; 3]; 4] = [
    [25, 50, 95],
    [32, 62, 108],
    [18, 44, 82],
    [40, 70, 118],
];
pub const SHORE_COLORS: [[u8; 3]; 4] = [
    [96, 112, 66],
    [110, 100, 72],
    [84, 120, 80],
    [120, 118, 92],
];
pub const SKY_COLORS: [[u8; 3]; 4] = [
    [135, 170, 210],
    [150, 180, 215],
    [160, 185, 200],
    [128, 160, 198],
];

/// A varied training scene without obstacles.
pub fn training_scene(i: usize) -> SceneSpec {
    let edges = [
        EdgeProfile::Flat { y: 0.40 },
        EdgeProfile::Flat { y: 0.50 },
        EdgeProfile::Flat { y: 0.58 },
        EdgeProfile::Slanted { left: 0.42, right: 0.52 },
        EdgeProfile::Slanted { left: 0.55, right: 0.44 },
        EdgeProfile::Staircase { base: 0.42, step: 0.04, steps: 4 },
    ];
    SceneSpec {
        seed: 9000 + i as u64,
        width: 200,
        height: 200,
        frames: 1,
        sky_color: SKY_COLORS[i % SKY_COLORS.len()],
        shore_color: SHORE_COLORS[(i / 2) % SHORE_COLORS.len()],
        water_color: WATER_COLORS[i % WATER_COLORS.len()],
        noise_sigma: 5.0,
        sky_frac: 0.22,
        edge: edges[i % edges.len()],
        obstacles: Vec::new(),
        speckle: None,
        glitter: None,
    }
}

/// Learn weak priors from a 20-scene synthetic training set.
pub fn trained_priors(
    colorspace: Colorspace,
    mode: FeatureMode,
    working_size: usize,
) -> WeakPriors<f64> {
    let examples: Vec<TrainingExample> = (0..20)
        .map(|i| {
            let spec = training_scene(i);
            let (image, _) = generate_frame(&spec, 0).expect("training scene");
            let labels = generate_labels(&spec, 0).expect("training labels");
            TrainingExample { image, labels }
        })
        .collect();
    learn_weak_priors(&examples, colorspace, mode, working_size, 1e-5)
        .expect("prior learning on the synthetic training set")
}

use seaseg_core::synth::{ObstacleSpec, SpeckleSpec};

/// Speckle color for a given water color: a fixed moderate offset that
/// lands inside the MRF's isolated-outlier suppression window.
pub fn speckle_for(water: [u8; 3]) -> SpeckleSpec {
    SpeckleSpec {
        color: [
            water[0].saturating_add(70),
            water[1].saturating_add(70),
            water[2].saturating_add(70),
        ],
        ..SpeckleSpec::default()
    }
}

/// One scene of the end-to-end acceptance suite: varied colors and edge
/// shapes, one or two planted 5x5-working-pixel obstacles well below the
/// edge, plus moderate noise and outlier speckle.
pub fn acceptance_scene(i: usize) -> SceneSpec {
    let edges = [
        EdgeProfile::Flat { y: 0.42 },
        EdgeProfile::Flat { y: 0.50 },
        EdgeProfile::Slanted { left: 0.44, right: 0.52 },
        EdgeProfile::Slanted { left: 0.52, right: 0.42 },
        EdgeProfile::Flat { y: 0.56 },
    ];
    let water = WATER_COLORS[i % WATER_COLORS.len()];
    // Obstacle rows: everything below 0.56*200 + margin is water in every
    // edge variant; stay >= 18 px under the deepest edge and >= 24 px off
    // the bottom.
    let y_slots = [122.0, 136.0, 150.0, 164.0];
    let x_slots = [28.0, 64.0, 100.0, 136.0, 168.0];
    let size = 20.0 + (i % 2) as f64; // 5.0 or 5.25 working pixels
    let mut obstacles = vec![ObstacleSpec {
        x: x_slots[i % x_slots.len()],
        y: y_slots[i % y_slots.len()],
        vx: 0.0,
        vy: 0.0,
        w: size,
        h: size,
        color: [235, 140, 40],
    }];
    if i % 3 == 0 {
        obstacles.push(ObstacleSpec {
            x: x_slots[(i + 2) % x_slots.len()],
            y: y_slots[(i + 2) % y_slots.len()],
            vx: 0.0,
            vy: 0.0,
            w: size,
            h: size,
            color: [240, 235, 90],
        });
    }
    SceneSpec {
        seed: 5000 + i as u64,
        width: 200,
        height: 200,
        frames: 1,
        sky_color: SKY_COLORS[(i / 3) % SKY_COLORS.len()],
        shore_color: SHORE_COLORS[(i / 2) % SHORE_COLORS.len()],
        water_color: water,
        noise_sigma: 6.0,
        sky_frac: 0.22,
        edge: edges[i % edges.len()],
        obstacles,
        speckle: Some(speckle_for(water)),
        glitter: None,
    }
}

/// Seeded 50x50 scene for the convergence suite (already at working
/// resolution, so the detector's downscale is the identity).
pub fn small_scene_50(i: usize) -> SceneSpec {
    let edges = [
        EdgeProfile::Flat { y: 0.44 },
        EdgeProfile::Flat { y: 0.52 },
        EdgeProfile::Slanted { left: 0.42, right: 0.52 },
        EdgeProfile::Flat { y: 0.48 },
    ];
    let water = WATER_COLORS[i % WATER_COLORS.len()];
    let mut obstacles = Vec::new();
    if i % 2 == 0 {
        obstacles.push(ObstacleSpec {
            x: (8 + (i * 3) % 30) as f64,
            y: (33 + (i * 5) % 9) as f64,
            vx: 0.0,
            vy: 0.0,
            w: 5.0,
            h: 5.0,
            color: [235, 140, 40],
        });
    }
    SceneSpec {
        seed: 7000 + i as u64,
        width: 50,
        height: 50,
        frames: 1,
        sky_color: SKY_COLORS[(i / 5) % SKY_COLORS.len()],
        shore_color: SHORE_COLORS[(i / 3) % SHORE_COLORS.len()],
        water_color: water,
        noise_sigma: 6.0,
        sky_frac: 0.22,
        edge: edges[i % edges.len()],
        obstacles,
        speckle: None,
        glitter: None,
    }
}
