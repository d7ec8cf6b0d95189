//! Scratch diagnostic: sweep obstacle sizes/positions and noise to find
//! the detection envelope on synthetic scenes.

use seaseg_core::detector::{DetectorConfig, DetectorState};
use seaseg_core::evaluation::{evaluate_frame, EvalOptions};
use seaseg_core::imaging::{Colorspace, FeatureMode};
use seaseg_core::mixture::WeakPriors;
use seaseg_core::prior_learn::{learn_weak_priors, TrainingExample};
use seaseg_core::synth::{generate_frame, generate_labels, EdgeProfile, ObstacleSpec, SceneSpec};

fn training_scene(i: usize) -> SceneSpec {
    let edges = [
        EdgeProfile::Flat { y: 0.40 },
        EdgeProfile::Flat { y: 0.50 },
        EdgeProfile::Flat { y: 0.58 },
        EdgeProfile::Slanted { left: 0.42, right: 0.52 },
        EdgeProfile::Slanted { left: 0.55, right: 0.44 },
        EdgeProfile::Staircase { base: 0.42, step: 0.04, steps: 4 },
    ];
    let water = [[25, 50, 95], [32, 62, 108], [18, 44, 82], [40, 70, 118]];
    let shore = [[96, 112, 66], [110, 100, 72], [84, 120, 80], [120, 118, 92]];
    let sky = [[135, 170, 210], [150, 180, 215], [160, 185, 200], [128, 160, 198]];
    SceneSpec {
        seed: 9000 + i as u64,
        width: 200,
        height: 200,
        frames: 1,
        sky_color: sky[i % 4],
        shore_color: shore[(i / 2) % 4],
        water_color: water[i % 4],
        noise_sigma: 5.0,
        sky_frac: 0.22,
        edge: edges[i % edges.len()],
        obstacles: Vec::new(),
        speckle: None,
        glitter: None,
    }
}

fn trained_priors() -> WeakPriors<f64> {
    let examples: Vec<TrainingExample> = (0..20)
        .map(|i| {
            let spec = training_scene(i);
            let (image, _) = generate_frame(&spec, 0).unwrap();
            let labels = generate_labels(&spec, 0).unwrap();
            TrainingExample { image, labels }
        })
        .collect();
    learn_weak_priors(&examples, Colorspace::YCrCb, FeatureMode::Full, 50, 1e-5).unwrap()
}

fn main() {
    use seaseg_core::detector::DetectorMode;
    use seaseg_core::synth::SpeckleSpec;
    let priors = trained_priors();

    // Speckle sweep: SSM vs UGM detection quality on identical scenes.
    for amp in [40u8, 60, 80, 100, 120, 150, 200] {
        let density = 0.0008;
        for mode in [DetectorMode::Ssm, DetectorMode::Ugm] {
            let trials = 50;
            let (mut tp, mut fp, mut fn_) = (0, 0, 0);
            let mut rmse_sum = 0.0;
            for t in 0..trials {
                let size = 20.0;
                let oy = [150.0, 110.0, 125.0, 140.0, 160.0][t as usize % 5];
                let spec = SceneSpec {
                    seed: 3000 + t,
                    noise_sigma: 6.0,
                    obstacles: vec![ObstacleSpec {
                        x: 25.0 + 3.0 * t as f64,
                        y: oy,
                        vx: 0.0,
                        vy: 0.0,
                        w: size,
                        h: size,
                        color: [235, 140, 40],
                    }],
                    speckle: if density > 0.0 {
                        Some(SpeckleSpec {
                            density,
                            size: 1,
                            color: [
                                25u8.saturating_add(amp),
                                50u8.saturating_add(amp),
                                95u8.saturating_add(amp),
                            ],
                            margin: 0.12,
                        })
                    } else {
                        None
                    },
                    ..SceneSpec::default()
                };
                let (frame, ann) = generate_frame(&spec, 0).unwrap();
                let cfg = DetectorConfig { mode, ..DetectorConfig::default() };
                let mut state = DetectorState::new(priors.clone(), cfg).unwrap();
                let result = state.process_frame(&frame).unwrap();
                let est: Vec<f64> = result.edge.iter().map(|&v| v as f64).collect();
                let ev = evaluate_frame(&result.obstacles, &est, &ann, 200, 200, &EvalOptions::default())
                    .unwrap();
                tp += ev.outcome.tp;
                fp += ev.outcome.fp;
                fn_ += ev.outcome.fn_;
                rmse_sum += ev.rmse;
            }
            let prec = if tp + fp > 0 { tp as f64 / (tp + fp) as f64 } else { 0.0 };
            let rec = if tp + fn_ > 0 { tp as f64 / (tp + fn_) as f64 } else { 0.0 };
            let f = if prec + rec > 0.0 { 2.0 * prec * rec / (prec + rec) } else { 0.0 };
            println!(
                "amp={amp:<4} density={density:<7} {mode:?}: tp={tp} fp={fp} fn={fn_} F={f:.3} aFP={:.3} edg={:.2}",
                fp as f64 / trials as f64,
                rmse_sum / trials as f64
            );
        }
    }
}
