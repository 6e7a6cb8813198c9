//! `verify`: the three structural checks, run on freshly drawn random
//! instances and written out as one CSV per suite plus a JSON summary.
//!
//! 1. Layer collapse — the assembled transfer matrix must reproduce the
//!    sequential forward pass on random probes (any depth is one matrix).
//! 2. Contraction — every passive stack's largest singular value is ≤ 1.
//! 3. Distance bound — the five-line inequality chain from the detector-
//!    plane distance down to twice the input separation holds line by line,
//!    and intensity distance never exceeds component distance.
//!
//! Exit code 0 only if every suite passes.

use diffstack::optics::EvanescentMode;
use diffstack::rng::derive_seed;
use diffstack::{bound_chain, synth, DiffractivePanel, SystemMatrix, DEFAULT_ASSEMBLY_CAP};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::fail::{CliResult, Failure};
use crate::table::{Cell, Table};

const COLLAPSE_TOL: f64 = 1e-10;
const SV_TOL: f64 = 1e-9;
const UNIT_BOUND_TOL: f64 = 1e-12;
const ORDER_TOL: f64 = 1e-12;

const TAG_COLLAPSE: u64 = 0x56455201;
const TAG_PROBE: u64 = 0x56455202;
const TAG_CONTRACT: u64 = 0x56455203;
const TAG_CHAIN: u64 = 0x56455204;
const TAG_GAIN: u64 = 0x56455205;

const COLLAPSE_GRIDS: [usize; 4] = [2, 4, 8, 16];
const COLLAPSE_LAYERS: [usize; 5] = [0, 1, 2, 3, 5];

#[derive(Serialize)]
struct SuiteCollapse {
    stacks: usize,
    inputs_per_stack: usize,
    max_rel_error: f64,
    tolerance: f64,
    pass: bool,
}

#[derive(Serialize)]
struct SuiteContraction {
    stacks: usize,
    max_sv: f64,
    tolerance_over_one: f64,
    gain_injected: bool,
    pass: bool,
}

#[derive(Serialize)]
struct SuiteChain {
    triples: usize,
    min_slack_per_line: [f64; 5],
    unit_bound_max_error: f64,
    metric_ordering_violations: usize,
    pass: bool,
}

#[derive(Serialize)]
struct VerifySummary {
    command: &'static str,
    seed: u64,
    grid_side: usize,
    collapse: SuiteCollapse,
    contraction: SuiteContraction,
    chain: SuiteChain,
    pass: bool,
}

pub fn run(cfg: &ExperimentConfig, inject_gain: bool) -> CliResult<Vec<(&'static str, Cell)>> {
    let dim = cfg.grid_side * cfg.grid_side;
    if dim > DEFAULT_ASSEMBLY_CAP {
        return Err(diffstack::Error::DimensionCap {
            dim,
            cap: DEFAULT_ASSEMBLY_CAP,
        }
        .into());
    }
    let seed = cfg.seed();

    // Suite 1: layer collapse over a fixed sweep of sizes and depths.
    // Padding stays off so the assembled matrix is exactly the operator the
    // sequential pass applies.
    let mut collapse_csv = Table::new(&["index", "grid_side", "layers", "max_rel_error", "pass"]);
    let mut collapse_max = 0.0f64;
    for i in 0..cfg.verify.collapse_stacks {
        let grid = COLLAPSE_GRIDS[i % COLLAPSE_GRIDS.len()];
        let layers = COLLAPSE_LAYERS[i % COLLAPSE_LAYERS.len()];
        let stack = synth::random_stack(
            grid,
            layers,
            1,
            EvanescentMode::Decay,
            derive_seed(seed, &[TAG_COLLAPSE, i as u64]),
        )?;
        let matrix = SystemMatrix::assemble(&stack)?;
        let mut worst = 0.0f64;
        for j in 0..cfg.verify.collapse_inputs {
            let probe = synth::random_unit_field(
                grid,
                stack.pixel_pitch(),
                derive_seed(seed, &[TAG_PROBE, i as u64, j as u64]),
            );
            let direct = stack.forward(&probe)?;
            let via_matrix = matrix.apply(&probe)?;
            let err = direct.sub(&via_matrix)?.l2_norm() / direct.l2_norm().max(1e-300);
            worst = worst.max(err);
        }
        collapse_csv.push(vec![
            i.into(),
            grid.into(),
            layers.into(),
            worst.into(),
            (worst <= COLLAPSE_TOL).into(),
        ]);
        collapse_max = collapse_max.max(worst);
    }
    let collapse = SuiteCollapse {
        stacks: cfg.verify.collapse_stacks,
        inputs_per_stack: cfg.verify.collapse_inputs,
        max_rel_error: collapse_max,
        tolerance: COLLAPSE_TOL,
        pass: collapse_max <= COLLAPSE_TOL,
    };

    // Suite 2: contraction at the configured grid size. The hidden gain
    // hook appends one deliberately amplifying stack that must fail.
    let mut contraction_csv = Table::new(&[
        "index",
        "grid_side",
        "layers",
        "injected_gain",
        "sv_max",
        "pass",
    ]);
    let mut max_sv = 0.0f64;
    let mut contraction_pass = true;
    for i in 0..cfg.verify.contraction_stacks {
        let layers = i % 4;
        let stack = synth::random_stack(
            cfg.grid_side,
            layers,
            1,
            EvanescentMode::Decay,
            derive_seed(seed, &[TAG_CONTRACT, i as u64]),
        )?;
        let report = SystemMatrix::assemble(&stack)?.is_contraction(SV_TOL)?;
        contraction_csv.push(vec![
            i.into(),
            cfg.grid_side.into(),
            layers.into(),
            false.into(),
            report.sv_max.into(),
            report.is_contraction.into(),
        ]);
        max_sv = max_sv.max(report.sv_max);
        contraction_pass &= report.is_contraction;
    }
    if inject_gain {
        let base = synth::random_stack(
            cfg.grid_side,
            1,
            1,
            EvanescentMode::Decay,
            derive_seed(seed, &[TAG_GAIN]),
        )?;
        let pixels = cfg.grid_side * cfg.grid_side;
        let amplifier =
            DiffractivePanel::new_unchecked(cfg.grid_side, vec![-0.2; pixels], vec![0.0; pixels]);
        let doctored = base.with_panels(vec![amplifier])?;
        let report = SystemMatrix::assemble(&doctored)?.is_contraction(SV_TOL)?;
        contraction_csv.push(vec![
            cfg.verify.contraction_stacks.into(),
            cfg.grid_side.into(),
            1usize.into(),
            true.into(),
            report.sv_max.into(),
            report.is_contraction.into(),
        ]);
        max_sv = max_sv.max(report.sv_max);
        contraction_pass &= report.is_contraction;
    }
    let contraction = SuiteContraction {
        stacks: cfg.verify.contraction_stacks + usize::from(inject_gain),
        max_sv,
        tolerance_over_one: SV_TOL,
        gain_injected: inject_gain,
        pass: contraction_pass,
    };

    // Suite 3: the bound chain on random triples; even indices draw
    // unit-norm inputs so the normalized 2·separation form is exercised.
    let mut chain_csv = Table::new(&[
        "index",
        "unit_norm",
        "tvd",
        "component_product",
        "cauchy_schwarz_rhs",
        "linearity_rhs",
        "contraction_rhs",
        "triangle_rhs",
        "min_slack",
        "tvd_intensity",
        "pass",
    ]);
    let mut min_slacks = [f64::INFINITY; 5];
    let mut unit_bound_max_error = 0.0f64;
    let mut ordering_violations = 0usize;
    let mut chain_pass = true;
    for i in 0..cfg.verify.chain_triples {
        let layers = 1 + i % 3;
        let stack = synth::random_stack(
            cfg.grid_side,
            layers,
            1,
            EvanescentMode::Decay,
            derive_seed(seed, &[TAG_CHAIN, i as u64, 0]),
        )?;
        let unit_norm = i % 2 == 0;
        let pitch = stack.pixel_pitch();
        let (psi, phi) = if unit_norm {
            (
                synth::random_unit_field(cfg.grid_side, pitch, derive_seed(seed, &[TAG_CHAIN, i as u64, 1])),
                synth::random_unit_field(cfg.grid_side, pitch, derive_seed(seed, &[TAG_CHAIN, i as u64, 2])),
            )
        } else {
            (
                synth::random_field(cfg.grid_side, pitch, derive_seed(seed, &[TAG_CHAIN, i as u64, 1])),
                synth::random_field(cfg.grid_side, pitch, derive_seed(seed, &[TAG_CHAIN, i as u64, 2])),
            )
        };
        let report = bound_chain(&stack, &psi, &phi)?;
        let mut row_pass = report.holds();
        for (slot, slack) in min_slacks.iter_mut().zip(&report.slack_per_line) {
            *slot = slot.min(*slack);
        }
        if unit_norm {
            let bound = report.normalized_bound.ok_or_else(|| {
                Failure::invariant("unit-norm inputs produced no normalized bound")
            })?;
            let separation = psi.sub(&phi)?.l2_norm();
            let err = (bound - 2.0 * separation).abs();
            unit_bound_max_error = unit_bound_max_error.max(err);
            row_pass &= err <= UNIT_BOUND_TOL * bound.max(1.0);
        }
        let out_psi = stack.forward(&psi)?;
        let out_phi = stack.forward(&phi)?;
        let tvd_intensity = out_psi.intensity().tvd(&out_phi.intensity())?;
        if tvd_intensity > report.tvd + ORDER_TOL * report.tvd.max(1.0) {
            ordering_violations += 1;
            row_pass = false;
        }
        let min_slack = report
            .slack_per_line
            .iter()
            .fold(f64::INFINITY, |a, b| a.min(*b));
        let quantities = report.chain();
        chain_csv.push(vec![
            i.into(),
            unit_norm.into(),
            quantities[0].into(),
            quantities[1].into(),
            quantities[2].into(),
            quantities[3].into(),
            quantities[4].into(),
            quantities[5].into(),
            min_slack.into(),
            tvd_intensity.into(),
            row_pass.into(),
        ]);
        chain_pass &= row_pass;
    }
    let chain = SuiteChain {
        triples: cfg.verify.chain_triples,
        min_slack_per_line: min_slacks,
        unit_bound_max_error,
        metric_ordering_violations: ordering_violations,
        pass: chain_pass,
    };

    let pass = collapse.pass && contraction.pass && chain.pass;
    let summary = VerifySummary {
        command: "verify",
        seed,
        grid_side: cfg.grid_side,
        collapse,
        contraction,
        chain,
        pass,
    };

    super::ensure_out_dir(&cfg.output_dir)?;
    collapse_csv.save(&cfg.output_dir.join("verify_collapse.csv"))?;
    contraction_csv.save(&cfg.output_dir.join("verify_contraction.csv"))?;
    chain_csv.save(&cfg.output_dir.join("verify_chain.csv"))?;
    super::write_json(&cfg.output_dir.join("verify_summary.json"), &summary)?;

    if !pass {
        let mut failing = Vec::new();
        if !summary.collapse.pass {
            failing.push("layer-collapse");
        }
        if !summary.contraction.pass {
            failing.push("contraction");
        }
        if !summary.chain.pass {
            failing.push("bound-chain");
        }
        return Err(Failure::invariant(format!(
            "verify suite(s) failed: {}",
            failing.join(", ")
        )));
    }

    Ok(vec![
        ("command", "verify".into()),
        ("collapse_stacks", summary.collapse.stacks.into()),
        ("collapse_max_rel_error", summary.collapse.max_rel_error.into()),
        ("contraction_stacks", summary.contraction.stacks.into()),
        ("contraction_max_sv", summary.contraction.max_sv.into()),
        ("chain_triples", summary.chain.triples.into()),
        (
            "chain_min_slack",
            summary
                .chain
                .min_slack_per_line
                .iter()
                .fold(f64::INFINITY, |a, b| a.min(*b))
                .into(),
        ),
        ("pass", pass.into()),
    ])
}
