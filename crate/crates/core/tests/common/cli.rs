//! Runs the command-line binary twice per subcommand and compares outputs.

use std::path::Path;
use std::process::{Command, Output};

pub const BIN: &str = env!("CARGO_BIN_EXE_rangent");

pub fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(dir).args(args).output().expect("spawn cli")
}

/// Writes the shared inputs used by [`subcommand_cases`] into `dir`.
pub fn prepare_inputs(dir: &Path) {
    let gens: [&[&str]; 4] = [
        &["gen", "--kind", "blobs2d", "--n", "60", "--blobs", "4", "--seed", "3", "--out", "blobs.csv", "--labels-out", "blob_labels.csv"],
        &["gen", "--kind", "uniform2d", "--n", "9", "--seed", "4", "--out", "small.csv"],
        &["gen", "--kind", "blobs3d", "--n", "200", "--seed", "5", "--out", "b3.csv", "--labels-out", "b3_labels.csv"],
        &["gen", "--kind", "uniform2d", "--n", "40", "--seed", "6", "--out", "u40.csv"],
    ];
    for g in gens {
        let o = run(dir, g);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    std::fs::write(dir.join("cfg.json"), r#"{"alpha": 20, "k": 3, "steps": 20, "trials": 2}"#).unwrap();
}

/// `(name, args, extra output files)` for every subcommand.
pub fn subcommand_cases() -> Vec<(&'static str, Vec<&'static str>, Vec<&'static str>)> {
    vec![
        ("gen", vec!["gen", "--kind", "pareto3d", "--n", "100", "--seed", "9"], vec![]),
        ("gen-labels", vec!["gen", "--kind", "blobs2d", "--n", "50", "--labels-out", "l.csv"], vec!["l.csv"]),
        ("entropy", vec!["entropy", "--in", "blobs.csv", "--grad"], vec![]),
        ("entropy-half", vec!["entropy", "--in", "blobs.csv", "--estimator", "halfspace", "--grad"], vec![]),
        ("fit-anchors", vec!["fit-anchors", "--in", "blobs.csv", "--seed", "2"], vec![]),
        ("fit-anchors-elbow", vec!["fit-anchors", "--in", "blobs.csv", "--elbow", "1:5"], vec![]),
        ("restructure", vec!["restructure", "--in", "u40.csv", "--trace", "trace.csv", "--config", "cfg.json"], vec!["trace.csv"]),
        ("hull", vec!["hull", "--in", "blobs.csv"], vec![]),
        ("hull-chan", vec!["hull", "--in", "blobs.csv", "--method", "chan", "--format", "json"], vec![]),
        ("hull-merge", vec!["hull", "--in", "blobs.csv", "--method", "partition-merge", "--labels", "blob_labels.csv"], vec![]),
        ("maxima", vec!["maxima", "--in", "b3.csv"], vec![]),
        ("maxima-adaptive", vec!["maxima", "--in", "b3.csv", "--method", "adaptive", "--labels", "b3_labels.csv"], vec![]),
        ("oracle", vec!["oracle", "--in", "small.csv"], vec![]),
        ("oracle-subsets", vec!["oracle", "--in", "small.csv", "--mode", "subsets"], vec![]),
        ("oracle-arrangement", vec!["oracle", "--in", "small.csv", "--mode", "arrangement", "--lines", "2"], vec![]),
        ("oracle-generating", vec!["oracle", "--in", "blobs.csv", "--mode", "generating", "--labels", "blob_labels.csv"], vec![]),
        ("bound", vec!["bound", "--in", "blobs.csv"], vec![]),
        ("bench", vec!["bench", "--n", "200", "--datasets", "uniform2d,blobs3d", "--config", "cfg.json"], vec![]),
        ("correlate", vec!["correlate", "--instances", "12", "--svg", "fig.svg"], vec!["fig.svg"]),
        ("ablate", vec!["ablate", "--n", "96", "--alphas", "1,10", "--ks", "4", "--inits", "random", "--config", "cfg.json"], vec![]),
    ]
}

/// Runs a case twice; returns an error description on any difference.
pub fn check_case(dir: &Path, args: &[&str], files: &[&str]) -> Result<Vec<u8>, String> {
    let mut outs = Vec::new();
    for _ in 0..2 {
        let o = run(dir, args);
        if !o.status.success() {
            return Err(format!("exit {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr)));
        }
        let mut bytes = o.stdout;
        for f in files {
            bytes.extend(std::fs::read(dir.join(f)).map_err(|e| format!("{f}: {e}"))?);
            std::fs::remove_file(dir.join(f)).ok();
        }
        outs.push(bytes);
    }
    if outs[0] != outs[1] {
        return Err("outputs differ between runs".into());
    }
    if outs[0].is_empty() {
        return Err("empty output".into());
    }
    Ok(outs.pop().unwrap())
}

/// First line of `cmd`'s stdout.
pub fn header_of(dir: &Path, args: &[&str]) -> String {
    let o = run(dir, args);
    String::from_utf8_lossy(&o.stdout).lines().next().unwrap_or_default().to_string()
}
