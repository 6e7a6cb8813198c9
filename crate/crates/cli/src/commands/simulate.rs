//! `simulate`: one forward pass, with the output field, its intensity, and
//! a power-accounting summary written to disk. A passive stack can never
//! gain power, so output/input power above 1 (plus tolerance) aborts with an
//! invariant failure.

use std::path::Path;

use diffstack::io;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::fail::{CliResult, Failure};
use crate::table::Cell;

const PASSIVITY_TOL: f64 = 1e-9;

#[derive(Serialize)]
struct SimulateSummary {
    command: &'static str,
    input: String,
    stack_source: String,
    grid_side: usize,
    layer_count: usize,
    norm_in: f64,
    norm_out: f64,
    power_in: f64,
    power_out: f64,
    power_ratio: f64,
    output_field: String,
    output_intensity: String,
}

pub fn run(
    cfg: &ExperimentConfig,
    input: &Path,
    stack_path: Option<&Path>,
    prefix: &str,
) -> CliResult<Vec<(&'static str, Cell)>> {
    if prefix.is_empty() || prefix.contains(['/', '\\']) {
        return Err(Failure::config(format!(
            "--prefix must be a plain basename, got {prefix:?}"
        )));
    }
    let (stack, stack_source) = match stack_path {
        Some(p) => (io::load_stack(p)?, p.display().to_string()),
        None => (cfg.build_stack()?, "config".to_string()),
    };
    let field = match input.extension().and_then(|e| e.to_str()) {
        Some("pgm") => io::read_pgm(input, stack.pixel_pitch())?,
        _ => io::read_field(input, stack.pixel_pitch())?,
    };
    if field.grid_side() != stack.grid_side() {
        return Err(Failure::config(format!(
            "input grid {} does not match stack grid {}",
            field.grid_side(),
            stack.grid_side()
        )));
    }

    let output = stack.forward(&field)?;
    let intensity = output.intensity();
    let norm_in = field.l2_norm();
    let norm_out = output.l2_norm();
    let power_in = norm_in * norm_in;
    let power_out = norm_out * norm_out;
    let power_ratio = if power_in == 0.0 {
        0.0
    } else {
        power_out / power_in
    };

    super::ensure_out_dir(&cfg.output_dir)?;
    let field_path = cfg.output_dir.join(format!("{prefix}.afld"));
    let intensity_path = cfg.output_dir.join(format!("{prefix}.aint"));
    io::write_field(&field_path, &output)?;
    io::write_intensity(&intensity_path, &intensity)?;
    let summary = SimulateSummary {
        command: "simulate",
        input: input.display().to_string(),
        stack_source,
        grid_side: stack.grid_side(),
        layer_count: stack.layer_count(),
        norm_in,
        norm_out,
        power_in,
        power_out,
        power_ratio,
        output_field: field_path.display().to_string(),
        output_intensity: intensity_path.display().to_string(),
    };
    super::write_json(
        &cfg.output_dir.join(format!("{prefix}_summary.json")),
        &summary,
    )?;

    if power_ratio > 1.0 + PASSIVITY_TOL {
        return Err(Failure::invariant(format!(
            "passivity: output/input power {power_ratio:e} exceeds 1 + {PASSIVITY_TOL:e}"
        )));
    }

    Ok(vec![
        ("command", "simulate".into()),
        ("grid_side", stack.grid_side().into()),
        ("layer_count", stack.layer_count().into()),
        ("norm_in", norm_in.into()),
        ("norm_out", norm_out.into()),
        ("power_ratio", power_ratio.into()),
        ("output_field", field_path.display().to_string().into()),
        (
            "output_intensity",
            intensity_path.display().to_string().into(),
        ),
    ])
}
