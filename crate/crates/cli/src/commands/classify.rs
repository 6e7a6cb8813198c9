//! `classify`: fit the selected classifier on the training split and score
//! it on the test split, writing a confusion matrix and a summary.
//!
//! * `euclidean` — nearest centroid in field space; noiseless and seedless.
//! * `diffractive` — the optical stack with noisy K-region readout; pass
//!   `--stack` to evaluate a trained stack, otherwise the config stack
//!   (untrained panels) is used.
//! * `nonlinear` — the squaring-activation network baseline.

use std::path::Path;

use diffstack::classify::{eval_seed, DetectorRegions};
use diffstack::rng::derive_seed;
use diffstack::{euclidean_classifier, io, nonlinear_baseline, predict, MlpConfig};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::fail::{CliResult, Failure};
use crate::table::{Cell, Table};
use crate::Method;

const TAG_EVAL: u64 = 0x434C4656; // per-sample readout noise streams

#[derive(Serialize)]
struct ClassifySummary {
    command: &'static str,
    method: &'static str,
    classes: usize,
    train_size: usize,
    test_size: usize,
    accuracy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    noise_sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    stack_source: Option<String>,
    confusion: String,
}

fn method_name(method: Method) -> &'static str {
    match method {
        Method::Euclidean => "euclidean",
        Method::Diffractive => "diffractive",
        Method::Nonlinear => "nonlinear",
    }
}

pub fn run(
    cfg: &ExperimentConfig,
    method: Method,
    stack_path: Option<&Path>,
) -> CliResult<Vec<(&'static str, Cell)>> {
    let (train_set, test_set, classes) = cfg.build_dataset()?;
    if test_set.is_empty() {
        return Err(Failure::config("the test split is empty"));
    }

    let mut stack_source = None;
    let predictions: Vec<usize> = match method {
        Method::Euclidean => {
            let model = euclidean_classifier(&train_set)?;
            test_set
                .iter()
                .map(|p| model.classify(&p.field))
                .collect::<Result<_, _>>()?
        }
        Method::Diffractive => {
            if cfg.regions.count != classes {
                return Err(Failure::config(format!(
                    "regions.count is {} but the dataset has {} classes",
                    cfg.regions.count, classes
                )));
            }
            let stack = match stack_path {
                Some(p) => {
                    stack_source = Some(p.display().to_string());
                    io::load_stack(p)?
                }
                None => {
                    stack_source = Some("config".to_string());
                    cfg.build_stack()?
                }
            };
            let regions = DetectorRegions::grid_layout(stack.grid_side(), classes)?;
            let noise_master = derive_seed(cfg.seed(), &[TAG_EVAL]);
            diffstack::exec::try_map(test_set.len(), |i| {
                predict(
                    &stack,
                    &regions,
                    &test_set[i].field,
                    cfg.noise_sigma,
                    eval_seed(noise_master, i, 0),
                )
                .map(|p| p.class)
            })?
        }
        Method::Nonlinear => {
            let mlp_cfg = MlpConfig {
                learning_rate: cfg.mlp.learning_rate,
                momentum: cfg.mlp.momentum,
                iterations: cfg.mlp.iterations,
                seed: cfg.seed(),
                activation: cfg.mlp.activation,
            };
            let model = nonlinear_baseline(&train_set, &cfg.mlp.hidden, &mlp_cfg)?;
            test_set
                .iter()
                .map(|p| model.classify(&p.field))
                .collect::<Result<_, _>>()?
        }
    };

    let mut confusion = vec![vec![0u64; classes]; classes];
    let mut hits = 0usize;
    for (sample, pred) in test_set.iter().zip(&predictions) {
        confusion[sample.label][*pred] += 1;
        hits += usize::from(sample.label == *pred);
    }
    let accuracy = hits as f64 / test_set.len() as f64;

    super::ensure_out_dir(&cfg.output_dir)?;
    let pred_cols: Vec<String> = (0..classes).map(|k| format!("pred_{k}")).collect();
    let mut header: Vec<&str> = vec!["true_class"];
    header.extend(pred_cols.iter().map(|s| s.as_str()));
    let mut confusion_csv = Table::new(&header);
    for (label, row) in confusion.iter().enumerate() {
        let mut cells: Vec<Cell> = vec![label.into()];
        cells.extend(row.iter().map(|c| Cell::from(*c)));
        confusion_csv.push(cells);
    }
    let confusion_path = cfg
        .output_dir
        .join(format!("confusion_{}.csv", method_name(method)));
    confusion_csv.save(&confusion_path)?;

    let summary = ClassifySummary {
        command: "classify",
        method: method_name(method),
        classes,
        train_size: train_set.len(),
        test_size: test_set.len(),
        accuracy,
        noise_sigma: matches!(method, Method::Diffractive).then_some(cfg.noise_sigma),
        stack_source,
        confusion: confusion_path.display().to_string(),
    };
    super::write_json(&cfg.output_dir.join("classify_summary.json"), &summary)?;

    Ok(vec![
        ("command", "classify".into()),
        ("method", method_name(method).into()),
        ("classes", classes.into()),
        ("test_size", test_set.len().into()),
        ("accuracy", accuracy.into()),
        ("confusion", confusion_path.display().to_string().into()),
    ])
}
