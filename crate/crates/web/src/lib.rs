//! Browser demo. Three operations on synthetic signals, each returning an
//! SVG and a line of text for the page:
//!
//! - [`reconstruct`]: fit PCA or thresholded DWT and overlay one held-out
//!   signal with its reconstruction.
//! - [`summary`]: run the full cross-validated evaluation and draw the
//!   summary plot.
//! - [`heatmap`]: the same evaluation drawn as a sorted loss heatmap.
//!
//! Everything runs on one thread; the native API mirrors the exported one
//! so it can be tested without a browser.

use clare::evaluate::EvaluationReport;
use clare::report::{heatmap_svg, reconstruction_plot_1d, summary_plot, PlotSpec};
use clare::{
    make_folds, run_clare, Criterion, DataMatrix, DwtLearner, Grid, KGrid, Learner, PcaLearner,
    RunOptions,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wasm_bindgen::prelude::*;

const SIGNAL_LEN: usize = 128;
const TRAIN_ROWS: usize = 64;

#[wasm_bindgen]
#[derive(Debug, Clone, PartialEq)]
pub struct DemoResult {
    svg: String,
    text: String,
}

#[wasm_bindgen]
impl DemoResult {
    #[wasm_bindgen(getter)]
    pub fn svg(&self) -> String {
        self.svg.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn text(&self) -> String {
        self.text.clone()
    }
}

/// `n` signals of three Gaussian bumps each plus white noise.
pub fn bumps(n: usize, noise: f64, seed: u64) -> DataMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(n * SIGNAL_LEN);
    for _ in 0..n {
        let bumps: Vec<(f64, f64, f64)> = (0..3)
            .map(|_| {
                (
                    rng.gen_range(10.0..118.0),
                    rng.gen_range(2.0..12.0),
                    rng.gen_range(0.5..2.0),
                )
            })
            .collect();
        for t in 0..SIGNAL_LEN {
            let x = t as f64;
            let clean: f64 = bumps
                .iter()
                .map(|(c, w, h)| h * (-(x - c) * (x - c) / (2.0 * w * w)).exp())
                .sum();
            let u: f64 = rng.gen_range(-1.0..1.0);
            values.push(clean + noise * u);
        }
    }
    DataMatrix::from_rows(values, n, Grid::one_d(SIGNAL_LEN).expect("fixed length")).expect("finite values")
}

fn learner(name: &str) -> Result<Box<dyn Learner>, String> {
    match name {
        "pca" => Ok(Box::new(PcaLearner)),
        "dwt" => Ok(Box::new(DwtLearner::default())),
        _ => Err(format!("unknown learner {name:?}")),
    }
}

fn spec(title: String) -> PlotSpec {
    PlotSpec {
        title: Some(title),
        ..PlotSpec::default()
    }
}

/// Fit on synthetic signals and plot one unseen signal against its
/// reconstruction at dimension `k`.
pub fn reconstruct_native(method: &str, k: usize, noise: f64, seed: u64) -> Result<DemoResult, String> {
    let learner = learner(method)?;
    let train = bumps(TRAIN_ROWS, noise, seed);
    let cap = learner.max_latent_dim(TRAIN_ROWS, train.grid());
    let k = k.clamp(1, cap);
    let codec = learner.fit(&train, k, seed).map_err(|e| e.to_string())?;
    let test = bumps(2, noise, seed.wrapping_add(1));
    let loss = codec.loss(test.row(0)).map_err(|e| e.to_string())?;
    let svg = reconstruction_plot_1d(&test, &codec, &["0"], &spec(format!("{method}, K = {k}")))
        .map_err(|e| e.to_string())?;
    Ok(DemoResult {
        svg,
        text: format!("{method} with K = {k}: loss 1 - ρ² = {loss:.5}"),
    })
}

fn evaluate(method: &str, n: usize, noise: f64, k_to: usize, seed: u64) -> Result<EvaluationReport, String> {
    let learner = learner(method)?;
    let data = bumps(n.max(10), noise, seed);
    let plan = make_folds(data.n(), 5, seed).map_err(|e| e.to_string())?;
    let grid = KGrid::new(1, k_to.max(1), 1).map_err(|e| e.to_string())?;
    let options = RunOptions {
        threads: 1,
        ..RunOptions::default()
    };
    run_clare(&data, learner.as_ref(), grid, &plan, Criterion::default(), &options).map_err(|e| e.to_string())
}

fn describe(report: &EvaluationReport) -> String {
    match (report.qualifying_dimension, report.compression_ratio) {
        (Some(qd), Some(ratio)) => format!(
            "{}: qualifying dimension {qd}, compression ratio {ratio}",
            report.learner
        ),
        _ => format!("{}: criterion not met within the grid", report.learner),
    }
}

pub fn summary_native(method: &str, n: usize, noise: f64, k_to: usize, seed: u64) -> Result<DemoResult, String> {
    let report = evaluate(method, n, noise, k_to, seed)?;
    Ok(DemoResult {
        svg: summary_plot(&report, &spec(format!("{method}, N = {}", report.surface.n()))),
        text: describe(&report),
    })
}

pub fn heatmap_native(method: &str, n: usize, noise: f64, k_to: usize, seed: u64) -> Result<DemoResult, String> {
    let report = evaluate(method, n, noise, k_to, seed)?;
    Ok(DemoResult {
        svg: heatmap_svg(&report, &spec(format!("{method}, sorted validation losses"))),
        text: describe(&report),
    })
}

#[wasm_bindgen]
pub fn reconstruct(method: &str, k: usize, noise: f64, seed: u32) -> Result<DemoResult, JsError> {
    reconstruct_native(method, k, noise, seed.into()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn summary(method: &str, n: usize, noise: f64, k_to: usize, seed: u32) -> Result<DemoResult, JsError> {
    summary_native(method, n, noise, k_to, seed.into()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn heatmap(method: &str, n: usize, noise: f64, k_to: usize, seed: u32) -> Result<DemoResult, JsError> {
    heatmap_native(method, n, noise, k_to, seed.into()).map_err(|e| JsError::new(&e))
}
