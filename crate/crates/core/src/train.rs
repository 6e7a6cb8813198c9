//! Gradient training of diffractive panels against region-energy losses.
//!
//! The noiseless prediction chain is: forward through the stack to the
//! output field y, per-pixel intensity I_j = |y_j|², region sums
//! s_k = Σ_{j ∈ R_k} I_j, scalar loss ℓ(s, label). Every stage except the
//! final |·|² is complex-linear, so the exact parameter gradient comes from
//! one reverse sweep with the adjoint operators of the same hops and panels
//! the forward pass used.
//!
//! With the cotangent field initialised at the output plane as
//! λ_j = (∂ℓ/∂I_j) · y_j and pulled back through each hop (P†) and panel
//! (Q†), the gradient of a panel pixel with output value u_j = q_j t_j is
//!
//! ```text
//! ∂ℓ/∂b_j = −2 Im( conj(λ_j) u_j )      (phase)
//! ∂ℓ/∂a_j = −2 Re( conj(λ_j) u_j )      (absorption)
//! ```
//!
//! evaluated with λ taken just *after* the hop following that panel has
//! been removed (i.e. at the panel's output plane). Finite differences over
//! all pixels would cost one forward pass per parameter; the adjoint sweep
//! costs one forward plus one backward regardless of parameter count.

use crate::classify::{argmax_lowest, DetectorRegions};
use crate::error::{Error, Result};
use crate::exec;
use crate::field::AmplitudeField;
use crate::optics::{DiffractivePanel, OpticalStack, MAX_ABSORPTION};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Margin used by [`LossKind::Margin`].
pub const MARGIN: f64 = 0.1;

/// Loss on the noiseless region-energy vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Cross-entropy of softmax(scores) against the label.
    SoftmaxRegionEnergy,
    /// Multiclass hinge: Σ_{k≠y} max(0, MARGIN + s_k − s_y).
    Margin,
}

/// Hyper-parameters for [`train_phase_masks`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Number of full-batch descent steps; 0 leaves the stack untouched.
    pub iterations: usize,
    /// Also descend on absorptions (clamped to [0, MAX_ABSORPTION]).
    pub optimize_absorption: bool,
    /// Reserved for stochastic extensions (minibatching); all current
    /// training paths are deterministic and do not consume it.
    pub seed: u64,
    pub loss: LossKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 60.0,
            iterations: 60,
            optimize_absorption: false,
            seed: 1,
            loss: LossKind::SoftmaxRegionEnergy,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Per-panel parameter gradients, mean over the dataset.
#[derive(Debug, Clone)]
pub struct StackGradient {
    /// `phase[l][j]` = ∂ℓ/∂b of pixel j of panel l.
    pub phase: Vec<Vec<f64>>,
    /// Present when absorption is being optimized.
    pub absorption: Option<Vec<Vec<f64>>>,
}

fn loss_value(scores: &[f64], label: usize, kind: LossKind) -> f64 {
    match kind {
        LossKind::SoftmaxRegionEnergy => {
            let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let log_z = scores.iter().map(|s| (s - m).exp()).sum::<f64>().ln();
            log_z - (scores[label] - m)
        }
        LossKind::Margin => scores
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != label)
            .map(|(_, s)| (MARGIN + s - scores[label]).max(0.0))
            .sum(),
    }
}

/// d loss / d scores.
fn loss_score_gradient(scores: &[f64], label: usize, kind: LossKind) -> Vec<f64> {
    match kind {
        LossKind::SoftmaxRegionEnergy => {
            let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = scores.iter().map(|s| (s - m).exp()).collect();
            let z: f64 = exps.iter().sum();
            exps.iter()
                .enumerate()
                .map(|(k, e)| e / z - if k == label { 1.0 } else { 0.0 })
                .collect()
        }
        LossKind::Margin => {
            let mut g = vec![0.0; scores.len()];
            for (k, s) in scores.iter().enumerate() {
                if k != label && MARGIN + s - scores[label] > 0.0 {
                    g[k] = 1.0;
                    g[label] -= 1.0;
                }
            }
            g
        }
    }
}

fn validate_dataset(
    stack: &OpticalStack,
    regions: &DetectorRegions,
    dataset: &[crate::classify::LabeledPattern],
) -> Result<()> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if regions.grid_side() != stack.grid_side() {
        return Err(Error::ShapeMismatch {
            context: "detector vs stack grid",
            left: regions.grid_side(),
            right: stack.grid_side(),
        });
    }
    for p in dataset {
        if p.label >= regions.count() {
            return Err(Error::LabelOutOfRange {
                label: p.label,
                classes: regions.count(),
            });
        }
        if p.field.grid_side() != stack.grid_side() {
            return Err(Error::ShapeMismatch {
                context: "pattern vs stack grid",
                left: p.field.grid_side(),
                right: stack.grid_side(),
            });
        }
    }
    Ok(())
}

/// Noiseless region scores of one field: the quantity every loss here is
/// defined on.
pub fn noiseless_scores(
    stack: &OpticalStack,
    regions: &DetectorRegions,
    input: &AmplitudeField,
) -> Result<Vec<f64>> {
    let image = stack.forward(input)?.intensity();
    crate::classify::region_readout(&image, regions, 0.0, 0)
}

/// Mean loss over the dataset, computed through the plain forward path.
/// Deliberately shares no code with the adjoint sweep so the two can serve
/// as independent cross-checks of each other.
pub fn dataset_loss(
    stack: &OpticalStack,
    regions: &DetectorRegions,
    dataset: &[crate::classify::LabeledPattern],
    kind: LossKind,
) -> Result<f64> {
    validate_dataset(stack, regions, dataset)?;
    let losses = exec::try_map(dataset.len(), |i| -> Result<f64> {
        let scores = noiseless_scores(stack, regions, &dataset[i].field)?;
        Ok(loss_value(&scores, dataset[i].label, kind))
    })?;
    Ok(losses.iter().sum::<f64>() / dataset.len() as f64)
}

/// One sample's loss and per-panel gradients via the adjoint sweep.
fn sample_loss_and_gradient(
    stack: &OpticalStack,
    regions: &DetectorRegions,
    sample: &crate::classify::LabeledPattern,
    kind: LossKind,
    with_absorption: bool,
) -> Result<(f64, StackGradient)> {
    let (panel_outputs, output) = stack.forward_trace(&sample.field)?;
    let image = output.intensity();
    let scores = crate::classify::region_readout(&image, regions, 0.0, 0)?;
    let loss = loss_value(&scores, sample.label, kind);
    let score_grad = loss_score_gradient(&scores, sample.label, kind);

    // ∂ℓ/∂I_j: the region's score gradient on region pixels, 0 elsewhere.
    let pixels = stack.grid_side() * stack.grid_side();
    let mut intensity_grad = vec![0.0f64; pixels];
    for (k, set) in regions.pixel_sets().iter().enumerate() {
        for &j in set {
            intensity_grad[j] = score_grad[k];
        }
    }

    // Cotangent at the output plane: λ_j = (∂ℓ/∂I_j) y_j.
    let lambda_data: Vec<Complex64> = output
        .pixels()
        .iter()
        .zip(&intensity_grad)
        .map(|(y, g)| y * *g)
        .collect();
    let mut lambda = AmplitudeField::new(stack.grid_side(), stack.pixel_pitch(), lambda_data)?;

    let layers = stack.layer_count();
    let mut phase_grad = vec![Vec::new(); layers];
    let mut absorption_grad = if with_absorption {
        Some(vec![Vec::new(); layers])
    } else {
        None
    };
    for l in (0..layers).rev() {
        // Pull back through the hop that follows panel l.
        lambda = stack.propagations()[l + 1].propagate_adjoint(&lambda)?;
        let u = &panel_outputs[l];
        let mut gb = Vec::with_capacity(pixels);
        let mut ga = Vec::with_capacity(if with_absorption { pixels } else { 0 });
        for (lam, uj) in lambda.pixels().iter().zip(u.pixels()) {
            let w = lam.conj() * uj;
            gb.push(-2.0 * w.im);
            if with_absorption {
                ga.push(-2.0 * w.re);
            }
        }
        phase_grad[l] = gb;
        if let Some(ag) = absorption_grad.as_mut() {
            ag[l] = ga;
        }
        // Pull back through panel l itself.
        lambda = stack.panels()[l].modulate_adjoint(&lambda)?;
    }

    Ok((
        loss,
        StackGradient {
            phase: phase_grad,
            absorption: absorption_grad,
        },
    ))
}

/// Mean loss and mean parameter gradient over the dataset. Per-sample
/// sweeps may run in parallel; accumulation happens in sample order, so the
/// result is identical for any thread count.
pub fn loss_and_gradient(
    stack: &OpticalStack,
    regions: &DetectorRegions,
    dataset: &[crate::classify::LabeledPattern],
    kind: LossKind,
    with_absorption: bool,
) -> Result<(f64, StackGradient)> {
    validate_dataset(stack, regions, dataset)?;
    let per_sample = exec::try_map(dataset.len(), |i| {
        sample_loss_and_gradient(stack, regions, &dataset[i], kind, with_absorption)
    })?;

    let scale = 1.0 / dataset.len() as f64;
    let pixels = stack.grid_side() * stack.grid_side();
    let layers = stack.layer_count();
    let mut loss = 0.0;
    let mut phase = vec![vec![0.0; pixels]; layers];
    let mut absorption = with_absorption.then(|| vec![vec![0.0; pixels]; layers]);
    for (l_i, grad) in per_sample {
        loss += l_i * scale;
        for (acc, g) in phase.iter_mut().zip(&grad.phase) {
            for (a, b) in acc.iter_mut().zip(g) {
                *a += b * scale;
            }
        }
        if let (Some(acc_all), Some(g_all)) = (absorption.as_mut(), grad.absorption.as_ref()) {
            for (acc, g) in acc_all.iter_mut().zip(g_all) {
                for (a, b) in acc.iter_mut().zip(g) {
                    *a += b * scale;
                }
            }
        }
    }
    Ok((loss, StackGradient { phase, absorption }))
}

/// Full-batch gradient descent on panel phases (and optionally
/// absorptions). Returns the trained stack and the loss at the start of
/// each iteration; `iterations = 0` returns the stack unchanged with an
/// empty curve. Absorption updates are clamped to [0, MAX_ABSORPTION], so a
/// trained stack is always passive.
pub fn train_phase_masks(
    initial_stack: &OpticalStack,
    regions: &DetectorRegions,
    dataset: &[crate::classify::LabeledPattern],
    config: &TrainConfig,
) -> Result<(OpticalStack, Vec<f64>)> {
    config.validate()?;
    validate_dataset(initial_stack, regions, dataset)?;
    let mut stack = initial_stack.clone();
    let mut curve = Vec::with_capacity(config.iterations);
    for _ in 0..config.iterations {
        let (loss, grad) =
            loss_and_gradient(&stack, regions, dataset, config.loss, config.optimize_absorption)?;
        curve.push(loss);
        let mut panels = Vec::with_capacity(stack.layer_count());
        for (l, panel) in stack.panels().iter().enumerate() {
            let phase: Vec<f64> = panel
                .phase()
                .iter()
                .zip(&grad.phase[l])
                .map(|(b, g)| b - config.learning_rate * g)
                .collect();
            let absorption: Vec<f64> = match grad.absorption.as_ref() {
                Some(ga) => panel
                    .absorption()
                    .iter()
                    .zip(&ga[l])
                    .map(|(a, g)| (a - config.learning_rate * g).clamp(0.0, MAX_ABSORPTION))
                    .collect(),
                None => panel.absorption().to_vec(),
            };
            panels.push(DiffractivePanel::new(stack.grid_side(), absorption, phase)?);
        }
        stack = stack.with_panels(panels)?;
    }
    Ok((stack, curve))
}

/// Accuracy of the noiseless argmax readout classifier on a dataset.
pub fn noiseless_accuracy(
    stack: &OpticalStack,
    regions: &DetectorRegions,
    dataset: &[crate::classify::LabeledPattern],
) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let hits = exec::try_map(dataset.len(), |i| -> Result<bool> {
        let scores = noiseless_scores(stack, regions, &dataset[i].field)?;
        Ok(argmax_lowest(&scores) == dataset[i].label)
    })?;
    Ok(hits.iter().filter(|h| **h).count() as f64 / dataset.len() as f64)
}
