//! Small fully-connected baseline operating directly on field components.
//!
//! The input of every field is its 2N²-dimensional real vector (real parts,
//! then imaginary parts). Hidden layers square their pre-activations — an
//! optoelectronic-flavored nonlinearity: each hidden feature is the
//! intensity of one learned linear combination of the field — and a final
//! affine layer produces class logits trained with softmax cross-entropy.
//! Setting [`Activation::Identity`] disables the nonlinearity, collapsing
//! the network to one affine map; this is the control that shows the
//! nonlinearity (not depth or parameter count) is what escapes the linear
//! readout ceiling.

use crate::classify::{argmax_lowest, LabeledPattern};
use crate::error::{Error, Result};
use crate::field::AmplitudeField;
use crate::rng::substream;
use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Hidden-layer nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    /// h = z² (intensity of a learned field combination).
    Square,
    /// h = z; collapses the network to a single affine map.
    Identity,
}

/// Hyper-parameters for [`nonlinear_baseline`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MlpConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub iterations: usize,
    pub seed: u64,
    pub activation: Activation,
}

impl Default for MlpConfig {
    fn default() -> Self {
        // The squaring activation doubles effective curvature every layer;
        // rates much above ~0.05 can blow pre-activations up. 0.02 sits
        // comfortably inside the stable region at desk scales.
        Self {
            learning_rate: 0.02,
            momentum: 0.9,
            iterations: 300,
            seed: 1,
            activation: Activation::Square,
        }
    }
}

impl MlpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.momentum.is_finite() && (0.0..1.0).contains(&self.momentum)) {
            return Err(Error::InvalidParameter(format!(
                "momentum must be in [0, 1), got {}",
                self.momentum
            )));
        }
        Ok(())
    }
}

/// Trained fully-connected classifier.
#[derive(Debug, Clone)]
pub struct MlpClassifier {
    grid_side: usize,
    feature_mean: DVector<f64>,
    feature_scale: f64,
    weights: Vec<DMatrix<f64>>,
    biases: Vec<DVector<f64>>,
    activation: Activation,
}

fn features(field: &AmplitudeField) -> DVector<f64> {
    let pixels = field.pixels();
    let mut v = DVector::zeros(2 * pixels.len());
    for (j, z) in pixels.iter().enumerate() {
        v[j] = z.re;
        v[pixels.len() + j] = z.im;
    }
    v
}

fn activate(z: &DMatrix<f64>, activation: Activation) -> DMatrix<f64> {
    match activation {
        Activation::Square => z.map(|x| x * x),
        Activation::Identity => z.clone(),
    }
}

/// Elementwise dh/dz.
fn activate_derivative(z: &DMatrix<f64>, activation: Activation) -> DMatrix<f64> {
    match activation {
        Activation::Square => z.map(|x| 2.0 * x),
        Activation::Identity => DMatrix::from_element(z.nrows(), z.ncols(), 1.0),
    }
}

/// Column-wise softmax, numerically stabilised.
fn softmax_columns(logits: &DMatrix<f64>) -> DMatrix<f64> {
    let mut p = logits.clone();
    for mut col in p.column_iter_mut() {
        let m = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for x in col.iter_mut() {
            *x = (*x - m).exp();
            z += *x;
        }
        for x in col.iter_mut() {
            *x /= z;
        }
    }
    p
}

/// Train the baseline network on labeled fields. `arch` lists the hidden
/// layer widths and must contain at least one nonzero entry.
pub fn nonlinear_baseline(
    train: &[LabeledPattern],
    arch: &[usize],
    config: &MlpConfig,
) -> Result<MlpClassifier> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if arch.is_empty() || arch.contains(&0) {
        return Err(Error::InvalidParameter(format!(
            "need at least one hidden layer of nonzero width, got {arch:?}"
        )));
    }
    let grid_side = train[0].field.grid_side();
    for p in train {
        if p.field.grid_side() != grid_side {
            return Err(Error::ShapeMismatch {
                context: "training pattern grid",
                left: p.field.grid_side(),
                right: grid_side,
            });
        }
    }
    let classes = train.iter().map(|p| p.label).max().expect("non-empty") + 1;
    if classes < 2 {
        return Err(Error::InvalidParameter(
            "need at least 2 classes for classification".into(),
        ));
    }
    let dim = 2 * grid_side * grid_side;
    let samples = train.len();

    // Feature matrix (dim x samples) and standardisation: subtract the
    // feature mean, divide by one global RMS so the geometry is preserved.
    let mut x = DMatrix::zeros(dim, samples);
    for (i, p) in train.iter().enumerate() {
        x.set_column(i, &features(&p.field));
    }
    let feature_mean = DVector::from_fn(dim, |r, _| x.row(r).sum() / samples as f64);
    for mut col in x.column_iter_mut() {
        col -= &feature_mean;
    }
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / (dim * samples) as f64).sqrt();
    let feature_scale = if rms > 0.0 { rms } else { 1.0 };
    x /= feature_scale;

    // One-hot labels (classes x samples).
    let mut one_hot = DMatrix::zeros(classes, samples);
    for (i, p) in train.iter().enumerate() {
        one_hot[(p.label, i)] = 1.0;
    }

    // Layer sizes: dim -> arch .. -> classes.
    let mut sizes = vec![dim];
    sizes.extend_from_slice(arch);
    sizes.push(classes);
    let mut rng = substream(config.seed, &[0x4D4C50]); // network init
    let mut weights: Vec<DMatrix<f64>> = Vec::with_capacity(sizes.len() - 1);
    let mut biases: Vec<DVector<f64>> = Vec::with_capacity(sizes.len() - 1);
    for w in sizes.windows(2) {
        let (fan_in, fan_out) = (w[0], w[1]);
        let std = (1.0 / fan_in as f64).sqrt();
        weights.push(DMatrix::from_fn(fan_out, fan_in, |_, _| {
            let g: f64 = StandardNormal.sample(&mut rng);
            g * std
        }));
        biases.push(DVector::zeros(fan_out));
    }

    let mut w_vel: Vec<DMatrix<f64>> = weights
        .iter()
        .map(|w| DMatrix::zeros(w.nrows(), w.ncols()))
        .collect();
    let mut b_vel: Vec<DVector<f64>> = biases.iter().map(|b| DVector::zeros(b.len())).collect();

    let layer_count = weights.len();
    for _ in 0..config.iterations {
        // Forward pass, keeping pre-activations for the backward sweep.
        let mut hidden = Vec::with_capacity(layer_count - 1); // activations per hidden layer
        let mut pre = Vec::with_capacity(layer_count - 1); // pre-activations
        let mut h = x.clone();
        for l in 0..layer_count - 1 {
            let mut z = &weights[l] * &h;
            for mut col in z.column_iter_mut() {
                col += &biases[l];
            }
            let a = activate(&z, config.activation);
            pre.push(z);
            hidden.push(a.clone());
            h = a;
        }
        let mut logits = &weights[layer_count - 1] * &h;
        for mut col in logits.column_iter_mut() {
            col += &biases[layer_count - 1];
        }

        // Softmax cross-entropy gradient, mean over the batch.
        let mut delta = softmax_columns(&logits) - &one_hot;
        delta /= samples as f64;

        // Backward sweep with momentum updates.
        for l in (0..layer_count).rev() {
            let input_act = if l == 0 { &x } else { &hidden[l - 1] };
            let grad_w = &delta * input_act.transpose();
            let grad_b = DVector::from_fn(delta.nrows(), |r, _| delta.row(r).sum());
            if l > 0 {
                let upstream = weights[l].transpose() * &delta;
                delta = upstream.component_mul(&activate_derivative(&pre[l - 1], config.activation));
            }
            w_vel[l] = &w_vel[l] * config.momentum - grad_w * config.learning_rate;
            b_vel[l] = &b_vel[l] * config.momentum - grad_b * config.learning_rate;
            weights[l] += &w_vel[l];
            biases[l] += &b_vel[l];
        }
    }

    Ok(MlpClassifier {
        grid_side,
        feature_mean,
        feature_scale,
        weights,
        biases,
        activation: config.activation,
    })
}

impl MlpClassifier {
    pub fn class_count(&self) -> usize {
        self.weights.last().expect("at least one layer").nrows()
    }

    /// Class logits for one field.
    pub fn logits(&self, input: &AmplitudeField) -> Result<Vec<f64>> {
        if input.grid_side() != self.grid_side {
            return Err(Error::ShapeMismatch {
                context: "classifier vs input grid",
                left: self.grid_side,
                right: input.grid_side(),
            });
        }
        let mut h = (features(input) - &self.feature_mean) / self.feature_scale;
        let last = self.weights.len() - 1;
        for l in 0..last {
            let z = &self.weights[l] * h + &self.biases[l];
            h = match self.activation {
                Activation::Square => z.map(|x| x * x),
                Activation::Identity => z,
            };
        }
        let out = &self.weights[last] * h + &self.biases[last];
        Ok(out.iter().cloned().collect())
    }

    /// Predicted class (argmax of logits, lowest index on ties).
    pub fn classify(&self, input: &AmplitudeField) -> Result<usize> {
        Ok(argmax_lowest(&self.logits(input)?))
    }

    /// Fraction of patterns classified correctly.
    pub fn accuracy(&self, data: &[LabeledPattern]) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut hits = 0usize;
        for p in data {
            if self.classify(&p.field)? == p.label {
                hits += 1;
            }
        }
        Ok(hits as f64 / data.len() as f64)
    }
}
