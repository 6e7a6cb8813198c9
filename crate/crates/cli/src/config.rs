//! Experiment configuration: a TOML file plus flag overrides (flags win).
//! Everything is validated up front, before any computation or output, and
//! a seed must be supplied explicitly — there are no clock- or OS-derived
//! defaults anywhere.

use std::path::{Path, PathBuf};

use diffstack::optics::EvanescentMode;
use diffstack::rng::derive_seed;
use diffstack::synth::{self, PanelInit};
use diffstack::{classify::LabeledPattern, ClosePairConfig, LossKind, OpticalStack};
use serde::{Deserialize, Serialize};

use crate::fail::{io_at, CliResult, Failure};

const TAG_DATASET: u64 = 0x44415441; // dataset substream
const TAG_PDP_FIELD: u64 = 0x50445046; // pdp base/direction draws

fn default_grid() -> usize {
    16
}
fn default_wavelength() -> f64 {
    0.75
}
fn default_pitch() -> f64 {
    0.4
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// Top-level experiment description. Field defaults mirror the library's
/// reference geometry; only the seed has no default.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub grid_side: usize,
    pub wavelength: f64,
    pub pixel_pitch: f64,
    /// Required (here or via --seed): all randomness flows from it.
    pub seed: Option<u64>,
    /// Detector read noise (standard deviation per intensity pixel).
    pub noise_sigma: f64,
    pub output_dir: PathBuf,
    pub stack: StackSection,
    pub regions: RegionsSection,
    pub dataset: DatasetSection,
    pub train: TrainSection,
    pub mlp: MlpSection,
    pub verify: VerifySection,
    pub pdp: PdpSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            grid_side: default_grid(),
            wavelength: default_wavelength(),
            pixel_pitch: default_pitch(),
            seed: None,
            noise_sigma: 0.0,
            output_dir: default_out(),
            stack: StackSection::default(),
            regions: RegionsSection::default(),
            dataset: DatasetSection::default(),
            train: TrainSection::default(),
            mlp: MlpSection::default(),
            verify: VerifySection::default(),
            pdp: PdpSection::default(),
        }
    }
}

/// Stack geometry. Either list every hop in `spacings` (L+1 entries) or give
/// a uniform `spacing` with a `layers` count.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StackSection {
    pub layers: usize,
    pub spacing: f64,
    pub spacings: Option<Vec<f64>>,
    pub panel_init: PanelInit,
    pub evanescent_mode: EvanescentMode,
    pub pad_factor: usize,
}

impl Default for StackSection {
    fn default() -> Self {
        StackSection {
            layers: 2,
            spacing: 30.0,
            spacings: None,
            panel_init: PanelInit::RandomPhase,
            evanescent_mode: EvanescentMode::Decay,
            pad_factor: 2,
        }
    }
}

impl StackSection {
    pub fn resolved_spacings(&self) -> Vec<f64> {
        match &self.spacings {
            Some(list) => list.clone(),
            None => vec![self.spacing; self.layers + 1],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegionsSection {
    /// Number of detector regions (classes); laid out on a centered grid.
    pub count: usize,
}

impl Default for RegionsSection {
    fn default() -> Self {
        RegionsSection { count: 2 }
    }
}

/// Which labeled dataset an experiment runs on: one of the built-in
/// generators, or external files listed in PGM/field manifests.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSection {
    /// Two classes an L2 distance `epsilon` apart on a shared carrier.
    ClosePair {
        #[serde(default = "default_epsilon")]
        epsilon: f64,
        #[serde(default = "default_jitter")]
        jitter: f64,
        #[serde(default = "default_train_quads")]
        train_quads: usize,
        #[serde(default = "default_test_quads")]
        test_quads: usize,
    },
    /// Horizontal vs vertical bright bars (2 classes, linearly separable).
    Bars {
        #[serde(default = "default_per_class")]
        train_per_class: usize,
        #[serde(default = "default_per_class")]
        test_per_class: usize,
    },
    /// Gaussian blobs in the four quadrants (4 classes).
    Blobs {
        #[serde(default = "default_per_class")]
        train_per_class: usize,
        #[serde(default = "default_per_class")]
        test_per_class: usize,
    },
    /// External data: manifest files of `<path> <label>` lines.
    Manifest { train: PathBuf, test: PathBuf },
}

fn default_epsilon() -> f64 {
    0.02
}
fn default_jitter() -> f64 {
    0.002
}
fn default_train_quads() -> usize {
    64
}
fn default_test_quads() -> usize {
    256
}
fn default_per_class() -> usize {
    32
}

impl Default for DatasetSection {
    fn default() -> Self {
        DatasetSection::ClosePair {
            epsilon: default_epsilon(),
            jitter: default_jitter(),
            train_quads: default_train_quads(),
            test_quads: default_test_quads(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub learning_rate: f64,
    pub iterations: usize,
    pub optimize_absorption: bool,
    pub loss: LossKind,
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection {
            learning_rate: 60.0,
            iterations: 60,
            optimize_absorption: false,
            loss: LossKind::SoftmaxRegionEnergy,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MlpSection {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub momentum: f64,
    pub iterations: usize,
    pub activation: diffstack::Activation,
}

impl Default for MlpSection {
    fn default() -> Self {
        MlpSection {
            hidden: vec![32],
            learning_rate: 0.01,
            momentum: 0.9,
            iterations: 300,
            activation: diffstack::Activation::Square,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    /// Random stacks checked in the layer-collapse suite.
    pub collapse_stacks: usize,
    /// Random probe inputs per collapse stack.
    pub collapse_inputs: usize,
    /// Random passive stacks checked for contraction.
    pub contraction_stacks: usize,
    /// Random (stack, field, field) triples checked against the bound chain.
    pub chain_triples: usize,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection {
            collapse_stacks: 12,
            collapse_inputs: 4,
            contraction_stacks: 20,
            chain_triples: 100,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PdpSection {
    pub epsilons: Vec<f64>,
    pub trials: usize,
}

impl Default for PdpSection {
    fn default() -> Self {
        PdpSection {
            epsilons: vec![0.0, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2],
            trials: 50,
        }
    }
}

impl ExperimentConfig {
    /// Read a config file; `None` yields the built-in defaults (the seed
    /// must then come from --seed).
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        match path {
            None => Ok(ExperimentConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| io_at(p, e))?;
                toml::from_str(&text)
                    .map_err(|e| Failure::config(format!("{}: {e}", p.display())))
            }
        }
    }

    /// Full fail-fast validation; commands call this before touching the
    /// filesystem or starting any computation.
    pub fn validate(&self) -> CliResult<()> {
        fn positive(name: &str, v: f64) -> CliResult<()> {
            if !v.is_finite() || v <= 0.0 {
                return Err(Failure::config(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
            Ok(())
        }
        if self.grid_side < 2 {
            return Err(Failure::config(format!(
                "grid_side must be at least 2, got {}",
                self.grid_side
            )));
        }
        positive("wavelength", self.wavelength)?;
        positive("pixel_pitch", self.pixel_pitch)?;
        if self.seed.is_none() {
            return Err(Failure::config(
                "a seed is required (set `seed` in the config or pass --seed)",
            ));
        }
        if !self.noise_sigma.is_finite() || self.noise_sigma < 0.0 {
            return Err(Failure::config(format!(
                "noise_sigma must be finite and non-negative, got {}",
                self.noise_sigma
            )));
        }
        let spacings = self.stack.resolved_spacings();
        if spacings.is_empty() {
            return Err(Failure::config("stack.spacings must list at least one hop"));
        }
        for (i, s) in spacings.iter().enumerate() {
            if !s.is_finite() || *s < 0.0 {
                return Err(Failure::config(format!(
                    "stack spacing #{i} must be finite and non-negative, got {s}"
                )));
            }
        }
        if self.stack.pad_factor == 0 {
            return Err(Failure::config("stack.pad_factor must be at least 1"));
        }
        if self.regions.count < 2 {
            return Err(Failure::config(format!(
                "regions.count must be at least 2, got {}",
                self.regions.count
            )));
        }
        match &self.dataset {
            DatasetSection::ClosePair {
                epsilon,
                jitter,
                train_quads,
                test_quads,
            } => {
                positive("dataset.epsilon", *epsilon)?;
                if !jitter.is_finite() || *jitter < 0.0 {
                    return Err(Failure::config(format!(
                        "dataset.jitter must be finite and non-negative, got {jitter}"
                    )));
                }
                if *train_quads == 0 || *test_quads == 0 {
                    return Err(Failure::config(
                        "dataset.train_quads and dataset.test_quads must be positive",
                    ));
                }
            }
            DatasetSection::Bars {
                train_per_class,
                test_per_class,
            }
            | DatasetSection::Blobs {
                train_per_class,
                test_per_class,
            } => {
                if *train_per_class == 0 || *test_per_class == 0 {
                    return Err(Failure::config(
                        "dataset per-class sample counts must be positive",
                    ));
                }
            }
            DatasetSection::Manifest { .. } => {}
        }
        positive("train.learning_rate", self.train.learning_rate)?;
        positive("mlp.learning_rate", self.mlp.learning_rate)?;
        if !self.mlp.momentum.is_finite() || self.mlp.momentum < 0.0 || self.mlp.momentum >= 1.0 {
            return Err(Failure::config(format!(
                "mlp.momentum must lie in [0, 1), got {}",
                self.mlp.momentum
            )));
        }
        if self.mlp.hidden.is_empty() || self.mlp.hidden.contains(&0) {
            return Err(Failure::config(
                "mlp.hidden must list at least one non-zero layer width",
            ));
        }
        if self.verify.collapse_stacks == 0
            || self.verify.collapse_inputs == 0
            || self.verify.contraction_stacks == 0
            || self.verify.chain_triples == 0
        {
            return Err(Failure::config("verify trial counts must all be positive"));
        }
        if self.pdp.epsilons.is_empty() {
            return Err(Failure::config("pdp.epsilons must list at least one value"));
        }
        for e in &self.pdp.epsilons {
            if !e.is_finite() || *e < 0.0 {
                return Err(Failure::config(format!(
                    "pdp.epsilons entries must be finite and non-negative, got {e}"
                )));
            }
        }
        if self.pdp.trials == 0 {
            return Err(Failure::config("pdp.trials must be positive"));
        }
        Ok(())
    }

    /// The validated seed (call after [`validate`](Self::validate)).
    pub fn seed(&self) -> u64 {
        self.seed.expect("validated config has a seed")
    }

    /// Build the configured stack (panel initialization is a named
    /// substream of the seed, so it is stable across commands).
    pub fn build_stack(&self) -> CliResult<OpticalStack> {
        Ok(synth::stack_from_layout(
            self.grid_side,
            self.wavelength,
            self.pixel_pitch,
            &self.stack.resolved_spacings(),
            self.stack.pad_factor,
            self.stack.evanescent_mode,
            self.stack.panel_init,
            self.seed(),
        )?)
    }

    /// Materialize the configured dataset. Returns (train, test, classes).
    pub fn build_dataset(&self) -> CliResult<(Vec<LabeledPattern>, Vec<LabeledPattern>, usize)> {
        let seed = self.seed();
        match &self.dataset {
            DatasetSection::ClosePair {
                epsilon,
                jitter,
                train_quads,
                test_quads,
            } => {
                let task = synth::close_pairs(&ClosePairConfig {
                    grid_side: self.grid_side,
                    pixel_pitch: self.pixel_pitch,
                    epsilon: *epsilon,
                    jitter: *jitter,
                    train_quads: *train_quads,
                    test_quads: *test_quads,
                    seed,
                })?;
                Ok((task.train, task.test, 2))
            }
            DatasetSection::Bars {
                train_per_class,
                test_per_class,
            } => {
                let train = synth::oriented_bars(
                    self.grid_side,
                    *train_per_class,
                    self.pixel_pitch,
                    derive_seed(seed, &[TAG_DATASET, 0]),
                )?;
                let test = synth::oriented_bars(
                    self.grid_side,
                    *test_per_class,
                    self.pixel_pitch,
                    derive_seed(seed, &[TAG_DATASET, 1]),
                )?;
                Ok((train, test, 2))
            }
            DatasetSection::Blobs {
                train_per_class,
                test_per_class,
            } => {
                let train = synth::corner_blobs(
                    self.grid_side,
                    *train_per_class,
                    self.pixel_pitch,
                    derive_seed(seed, &[TAG_DATASET, 0]),
                )?;
                let test = synth::corner_blobs(
                    self.grid_side,
                    *test_per_class,
                    self.pixel_pitch,
                    derive_seed(seed, &[TAG_DATASET, 1]),
                )?;
                Ok((train, test, 4))
            }
            DatasetSection::Manifest { train, test } => {
                let train_set = diffstack::io::load_manifest(train, self.pixel_pitch)?;
                let test_set = diffstack::io::load_manifest(test, self.pixel_pitch)?;
                let classes = train_set
                    .iter()
                    .chain(&test_set)
                    .map(|p| p.label)
                    .max()
                    .unwrap_or(0)
                    + 1;
                Ok((train_set, test_set, classes))
            }
        }
    }

    /// Deterministic seed for the perturbation-scan field draws.
    pub fn pdp_field_seed(&self, which: u64) -> u64 {
        derive_seed(self.seed(), &[TAG_PDP_FIELD, which])
    }
}

/// Flag overrides applied on top of the file (flags win).
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

pub fn resolve(
    config_path: Option<&Path>,
    overrides: &Overrides,
) -> CliResult<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(config_path)?;
    if let Some(seed) = overrides.seed {
        cfg.seed = Some(seed);
    }
    if let Some(out) = &overrides.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}
