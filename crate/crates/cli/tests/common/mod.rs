#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use funsel::oracle::{simulate_with_scores, KlModel};
use funsel::{GridF64, SampleF64};
use funsel_cli::io;

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_funsel"))
}

pub fn funsel(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Two-class synthetic set: class 1 curves have a larger first KL score.
pub fn two_class(dir: &Path, n: usize, seed: u64) -> (PathBuf, PathBuf, SampleF64) {
    let grid = GridF64::uniform(0.0, 1.0, 21).unwrap();
    let model = KlModel::sine(grid, vec![2.0, 1.0, 0.5], 0.05).unwrap();
    let sim = simulate_with_scores(&model, n, seed).unwrap();
    let curves = dir.join("x.csv");
    io::write_curves_file(&sim.sample, &curves).unwrap();
    let labels = dir.join("labels.csv");
    let mut text = String::from("id,label\n");
    for j in 0..n {
        text.push_str(&format!("{},{}\n", sim.sample.ids()[j], (sim.scores[[j, 0]] > 0.0) as i64));
    }
    std::fs::write(&labels, text).unwrap();
    (curves, labels, sim.sample)
}

/// Scalar responses `y = score_1 - 0.5 score_2`.
pub fn scalar_targets(dir: &Path, n: usize, seed: u64) -> (PathBuf, PathBuf) {
    let grid = GridF64::uniform(0.0, 1.0, 21).unwrap();
    let model = KlModel::sine(grid, vec![2.0, 1.0, 0.5], 0.0).unwrap();
    let sim = simulate_with_scores(&model, n, seed).unwrap();
    let curves = dir.join("x.csv");
    io::write_curves_file(&sim.sample, &curves).unwrap();
    let y = dir.join("y.csv");
    let mut text = String::new();
    for j in 0..n {
        text.push_str(&format!("{},{}\n", sim.sample.ids()[j], sim.scores[[j, 0]] - 0.5 * sim.scores[[j, 1]]));
    }
    std::fs::write(&y, text).unwrap();
    (curves, y)
}

pub fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}
