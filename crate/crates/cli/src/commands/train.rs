//! `train`: gradient descent on the configured stack's panel phases against
//! the configured dataset, saving the trained stack, the loss curve, and a
//! summary with noiseless train/test accuracies.

use diffstack::classify::DetectorRegions;
use diffstack::{dataset_loss, io, train_phase_masks, TrainConfig};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::fail::{CliResult, Failure};
use crate::table::{Cell, Table};

#[derive(Serialize)]
struct TrainSummary {
    command: &'static str,
    dataset_train: usize,
    dataset_test: usize,
    classes: usize,
    layers: usize,
    iterations: usize,
    learning_rate: f64,
    initial_loss: Option<f64>,
    final_loss: f64,
    train_accuracy: f64,
    test_accuracy: f64,
    stack_file: String,
    loss_curve: String,
}

pub fn run(cfg: &ExperimentConfig, name: &str) -> CliResult<Vec<(&'static str, Cell)>> {
    if name.is_empty() || name.contains(['/', '\\']) {
        return Err(Failure::config(format!(
            "--name must be a plain basename, got {name:?}"
        )));
    }
    let (train_set, test_set, classes) = cfg.build_dataset()?;
    if cfg.regions.count != classes {
        return Err(Failure::config(format!(
            "regions.count is {} but the dataset has {} classes",
            cfg.regions.count, classes
        )));
    }
    let regions = DetectorRegions::grid_layout(cfg.grid_side, classes)?;
    let stack = cfg.build_stack()?;
    let train_cfg = TrainConfig {
        learning_rate: cfg.train.learning_rate,
        iterations: cfg.train.iterations,
        optimize_absorption: cfg.train.optimize_absorption,
        seed: cfg.seed(),
        loss: cfg.train.loss,
    };
    let (trained, curve) = train_phase_masks(&stack, &regions, &train_set, &train_cfg)?;
    let final_loss = dataset_loss(&trained, &regions, &train_set, cfg.train.loss)?;
    let train_accuracy = diffstack::train::noiseless_accuracy(&trained, &regions, &train_set)?;
    let test_accuracy = diffstack::train::noiseless_accuracy(&trained, &regions, &test_set)?;

    super::ensure_out_dir(&cfg.output_dir)?;
    let stack_file = io::save_stack(&cfg.output_dir, name, &trained)?;
    let mut curve_csv = Table::new(&["iteration", "loss"]);
    for (i, loss) in curve.iter().enumerate() {
        curve_csv.push(vec![i.into(), (*loss).into()]);
    }
    let curve_path = cfg.output_dir.join(format!("{name}_loss.csv"));
    curve_csv.save(&curve_path)?;

    let summary = TrainSummary {
        command: "train",
        dataset_train: train_set.len(),
        dataset_test: test_set.len(),
        classes,
        layers: trained.layer_count(),
        iterations: cfg.train.iterations,
        learning_rate: cfg.train.learning_rate,
        initial_loss: curve.first().copied(),
        final_loss,
        train_accuracy,
        test_accuracy,
        stack_file: stack_file.display().to_string(),
        loss_curve: curve_path.display().to_string(),
    };
    super::write_json(&cfg.output_dir.join("train_summary.json"), &summary)?;

    Ok(vec![
        ("command", "train".into()),
        ("train_size", train_set.len().into()),
        ("classes", classes.into()),
        ("iterations", cfg.train.iterations.into()),
        ("final_loss", final_loss.into()),
        ("train_accuracy", train_accuracy.into()),
        ("test_accuracy", test_accuracy.into()),
        ("stack_file", stack_file.display().to_string().into()),
    ])
}
