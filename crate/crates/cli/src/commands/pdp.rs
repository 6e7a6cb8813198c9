//! `pdp`: sweep the input perturbation size ε and record, for each value,
//! the detector-plane distance, its theoretical ceiling (twice the input
//! separation, since both inputs are unit-norm), and how often the noisy
//! K-region readout actually tells the two inputs apart.

use std::path::Path;

use diffstack::classify::DetectorRegions;
use diffstack::{io, pdp_scan, synth};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::fail::CliResult;
use crate::svg::{line_chart, Level, Series};
use crate::table::{Cell, Table};

#[derive(Serialize)]
struct PdpSummary {
    command: &'static str,
    stack_source: String,
    epsilons: usize,
    trials: usize,
    noise_sigma: f64,
    noise_floor_min_region: f64,
    detectable_count: usize,
    first_detectable_epsilon: Option<f64>,
    max_tvd: f64,
    table: String,
    plot: String,
}

pub fn run(cfg: &ExperimentConfig, stack_path: Option<&Path>) -> CliResult<Vec<(&'static str, Cell)>> {
    let (stack, stack_source) = match stack_path {
        Some(p) => (io::load_stack(p)?, p.display().to_string()),
        None => (cfg.build_stack()?, "config".to_string()),
    };
    let regions = DetectorRegions::grid_layout(stack.grid_side(), cfg.regions.count)?;
    let base = synth::band_limited_unit_field(
        stack.grid_side(),
        &stack.propagations()[0],
        cfg.pdp_field_seed(0),
    );
    let direction = synth::orthogonal_direction(&base, cfg.pdp_field_seed(1))?;
    let points = pdp_scan(
        &stack,
        &regions,
        &base,
        &direction,
        &cfg.pdp.epsilons,
        cfg.noise_sigma,
        cfg.pdp.trials,
        cfg.seed(),
    )?;

    let mut table = Table::new(&[
        "epsilon",
        "input_l2_distance",
        "tvd",
        "bound",
        "detect_fraction",
        "detectable",
    ]);
    for p in &points {
        table.push(vec![
            p.epsilon.into(),
            p.input_l2_distance.into(),
            p.tvd.into(),
            p.bound.into(),
            p.detect_fraction.into(),
            p.detectable.into(),
        ]);
    }

    let floor = regions
        .sizes()
        .iter()
        .map(|&m| 2.0 * cfg.noise_sigma * (m as f64).sqrt())
        .fold(f64::INFINITY, f64::min);
    let tvd_series = Series {
        name: "detector distance (tvd)",
        points: points.iter().map(|p| (p.epsilon, p.tvd)).collect(),
    };
    let bound_series = Series {
        name: "bound (2x input separation)",
        points: points.iter().map(|p| (p.epsilon, p.bound)).collect(),
    };
    let levels: Vec<Level<'_>> = if cfg.noise_sigma > 0.0 {
        vec![Level {
            name: "noise floor",
            value: floor,
        }]
    } else {
        Vec::new()
    };
    let plot = line_chart(
        "perturbation scan",
        "perturbation size",
        "distance at the detector",
        &[tvd_series, bound_series],
        &levels,
    );

    super::ensure_out_dir(&cfg.output_dir)?;
    let table_path = cfg.output_dir.join("pdp_scan.csv");
    table.save(&table_path)?;
    let plot_path = cfg.output_dir.join("pdp_scan.svg");
    std::fs::write(&plot_path, &plot).map_err(|e| crate::fail::io_at(&plot_path, e))?;

    let detectable_count = points.iter().filter(|p| p.detectable).count();
    let first_detectable = points.iter().find(|p| p.detectable).map(|p| p.epsilon);
    let max_tvd = points.iter().map(|p| p.tvd).fold(0.0f64, f64::max);
    let summary = PdpSummary {
        command: "pdp",
        stack_source,
        epsilons: points.len(),
        trials: cfg.pdp.trials,
        noise_sigma: cfg.noise_sigma,
        noise_floor_min_region: if floor.is_finite() { floor } else { 0.0 },
        detectable_count,
        first_detectable_epsilon: first_detectable,
        max_tvd,
        table: table_path.display().to_string(),
        plot: plot_path.display().to_string(),
    };
    super::write_json(&cfg.output_dir.join("pdp_summary.json"), &summary)?;

    Ok(vec![
        ("command", "pdp".into()),
        ("epsilons", points.len().into()),
        ("trials", cfg.pdp.trials.into()),
        ("noise_sigma", cfg.noise_sigma.into()),
        ("detectable_count", detectable_count.into()),
        ("max_tvd", max_tvd.into()),
        ("table", table_path.display().to_string().into()),
        ("plot", plot_path.display().to_string().into()),
    ])
}
