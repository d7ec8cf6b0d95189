//! Optional full-dataset check against the published reference numbers.
//!
//! Requires the real dataset, which is not part of this repository. To
//! run it, lay the data out as
//!
//! ```text
//! $MODD_DIR/
//!   priors.json            # learned via `seaseg learn-priors`
//!   seq01/ ... seq10/      # normal-conditions sequences
//!     000000.jpg  000000.json  ...
//! ```
//!
//! with annotations converted to the per-frame JSON schema (see
//! `seaseg import-modd`), then run
//! `MODD_DIR=/path cargo test -p seaseg --test modd_optional -- --ignored`.
//!
//! Reference targets (normal conditions, full model): Edg 9.2 px,
//! Prec 0.885, Rec 0.772, F 0.819, aFP 0.039. A faithful
//! reimplementation lands near these; generous tolerances absorb
//! annotation-conversion differences.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_seaseg"))
}

#[test]
#[ignore = "needs the external dataset via MODD_DIR"]
fn reference_numbers_on_real_dataset() {
    let root = PathBuf::from(std::env::var("MODD_DIR").expect("MODD_DIR not set"));
    let priors = root.join("priors.json");
    assert!(priors.exists(), "missing {}", priors.display());

    let mut seqs: Vec<PathBuf> = std::fs::read_dir(&root)
        .unwrap()
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    seqs.sort();
    assert!(!seqs.is_empty(), "no sequence directories under {}", root.display());

    let work = tempfile::tempdir().unwrap();
    let (mut tp, mut fp, mut fn_, mut frames) = (0i64, 0i64, 0i64, 0i64);
    let mut edg_sum = 0.0;
    for seq in &seqs {
        let out = work.path().join(seq.file_name().unwrap());
        let status = bin()
            .arg("run")
            .arg(seq)
            .arg("--priors")
            .arg(&priors)
            .arg("-o")
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        let status = bin().arg("evaluate").arg(&out).arg(seq).status().unwrap();
        assert!(status.success());
        let metrics: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out.join("metrics.json")).unwrap())
                .unwrap();
        tp += metrics["tp"].as_i64().unwrap();
        fp += metrics["fp"].as_i64().unwrap();
        fn_ += metrics["fn"].as_i64().unwrap();
        let n = metrics["frames"].as_i64().unwrap();
        frames += n;
        edg_sum += metrics["edg"].as_f64().unwrap() * n as f64;
    }
    let prec = tp as f64 / (tp + fp) as f64;
    let rec = tp as f64 / (tp + fn_) as f64;
    let f = 2.0 * prec * rec / (prec + rec);
    let afp = fp as f64 / frames as f64;
    let edg = edg_sum / frames as f64;
    println!("dataset totals: Edg {edg:.2} Prec {prec:.3} Rec {rec:.3} F {f:.3} aFP {afp:.3}");
    assert!((f - 0.819).abs() < 0.08, "F {f:.3} too far from 0.819");
    assert!((prec - 0.885).abs() < 0.08, "Prec {prec:.3} too far from 0.885");
    assert!((rec - 0.772).abs() < 0.08, "Rec {rec:.3} too far from 0.772");
    assert!((edg - 9.2).abs() < 4.0, "Edg {edg:.1} too far from 9.2");
    assert!(afp < 0.15, "aFP {afp:.3} too far from 0.039");
}
