//! TOML experiment configuration. Every section and key is optional; missing
//! values take the defaults listed on each field.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::dataset::{load_checkins, Dataset, ModelSpec, SyntheticSpec};
use crate::error::{Error, Result};
use crate::evaluation::{Cell, ExperimentPlan, Method};
use crate::ldp::{split_budget, MAX_EPSILON};
use crate::trainer::{BaselineConfig, GroupScaling, OptimizerKind, Privacy, TrainConfig};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Directory for CSV reports and checkpoints. Default `results`.
    pub output: PathBuf,
    /// First seed; run `i` uses `seed + i`. Default 0.
    pub seed: u64,
    /// Repetitions averaged per cell. Default 10.
    pub runs: usize,
    /// Default all three.
    pub methods: Vec<Method>,
    /// Recall/MRR cutoffs. Default `[3, 5, 7, 10]`.
    pub ks: Vec<usize>,
    pub dataset: DatasetSource,
    pub privacy: PrivacySettings,
    pub trainer: TrainerSettings,
    pub baseline: BaselineSettings,
    pub sweep: SweepSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            output: PathBuf::from("results"),
            seed: 0,
            runs: 10,
            methods: vec![Method::Spirel, Method::Npb, Method::Pb],
            ks: vec![3, 5, 7, 10],
            dataset: DatasetSource::default(),
            privacy: PrivacySettings::default(),
            trainer: TrainerSettings::default(),
            baseline: BaselineSettings::default(),
            sweep: SweepSettings::default(),
        }
    }
}

/// Either a check-in file or a synthetic manifest. With neither, a
/// 10 000-user, 373-POI, 20-check-in random-walk population is generated.
#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSource {
    /// Label written to the `dataset` CSV column.
    pub name: Option<String>,
    pub path: Option<PathBuf>,
    pub synthetic: Option<SyntheticSpec>,
    /// Keep only each user's latest `max_length` check-ins.
    pub max_length: Option<usize>,
}

impl DatasetSource {
    fn synthetic_or_default(&self) -> SyntheticSpec {
        self.synthetic.clone().unwrap_or(SyntheticSpec {
            users: 10_000,
            pois: 373,
            length: 20,
            seed: 0,
            model: ModelSpec::RandomWalk,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrivacySettings {
    /// Total per-client budget. Default 1.0.
    pub epsilon: f64,
    /// Fraction of `epsilon` spent on the transition report. Default 0.5.
    pub split: f64,
}

impl Default for PrivacySettings {
    fn default() -> Self {
        Self { epsilon: 1.0, split: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainerSettings {
    pub d: usize,
    pub lambda: f64,
    pub learning_rate: f64,
    /// Server iterations, equal to the number of user groups.
    pub iterations: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
    pub optimizer: OptimizerKind,
    pub sigmoid_scale: f64,
    pub group_scaling: GroupScaling,
}

impl Default for TrainerSettings {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            d: t.d,
            lambda: t.lambda,
            learning_rate: t.learning_rate,
            iterations: t.iterations,
            beta1: t.beta1,
            beta2: t.beta2,
            adam_epsilon: t.adam_epsilon,
            optimizer: t.optimizer,
            sigmoid_scale: t.sigmoid_scale,
            group_scaling: t.group_scaling,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineSettings {
    pub d: usize,
    pub lambda: f64,
    pub npb_learning_rate: f64,
    pub pb_learning_rate: f64,
}

impl Default for BaselineSettings {
    fn default() -> Self {
        Self { d: 10, lambda: 1e-8, npb_learning_rate: 0.005, pb_learning_rate: 1.0 }
    }
}

/// Grid axes. An empty list means the single base value.
#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    pub epsilons: Vec<f64>,
    pub splits: Vec<f64>,
    pub iterations: Vec<usize>,
}

fn config_err(key: &str, reason: impl Into<String>) -> Error {
    Error::Config { key: key.to_string(), reason: reason.into() }
}

/// Reads and validates a config file. Relative paths inside it are taken
/// relative to the file's directory.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_config_str(&text, base)
}

pub fn parse_config_str(text: &str, base_dir: &Path) -> Result<ExperimentConfig> {
    let mut config: ExperimentConfig = toml::from_str(text).map_err(|e| {
        let msg = e.message().to_string();
        let key = msg
            .split('`')
            .nth(1)
            .filter(|_| msg.starts_with("unknown field"))
            .unwrap_or("<document>")
            .to_string();
        config_err(&key, msg)
    })?;
    config.resolve_paths(base_dir);
    config.validate()?;
    Ok(config)
}

fn check_eps(key: &str, eps: f64) -> Result<()> {
    if eps.is_finite() && eps > 0.0 && eps <= MAX_EPSILON {
        Ok(())
    } else {
        Err(config_err(key, format!("must lie in (0, {MAX_EPSILON}], got {eps}")))
    }
}

fn check_split(key: &str, r: f64) -> Result<()> {
    if r > 0.0 && r < 1.0 {
        Ok(())
    } else {
        Err(config_err(key, format!("must lie strictly between 0 and 1, got {r}")))
    }
}

fn check_positive(key: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(config_err(key, format!("must be positive, got {x}")))
    }
}

fn check_non_negative(key: &str, x: f64) -> Result<()> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(config_err(key, format!("must be >= 0, got {x}")))
    }
}

impl ExperimentConfig {
    fn resolve_paths(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = self.dataset.path.as_mut() {
            join(p);
        }
        if let Some(SyntheticSpec { model: ModelSpec::Matrix { path }, .. }) = self.dataset.synthetic.as_mut() {
            join(path);
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(config_err("runs", "must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(config_err("methods", "must name at least one method"));
        }
        if self.ks.is_empty() || self.ks.contains(&0) {
            return Err(config_err("ks", "must be a non-empty list of positive cutoffs"));
        }
        check_eps("privacy.epsilon", self.privacy.epsilon)?;
        check_split("privacy.split", self.privacy.split)?;
        for &e in &self.sweep.epsilons {
            check_eps("sweep.epsilons", e)?;
        }
        for &r in &self.sweep.splits {
            check_split("sweep.splits", r)?;
        }
        if self.sweep.iterations.contains(&0) {
            return Err(config_err("sweep.iterations", "must be at least 1"));
        }

        let t = &self.trainer;
        if t.d == 0 {
            return Err(config_err("trainer.d", "must be at least 1"));
        }
        if t.iterations == 0 {
            return Err(config_err("trainer.iterations", "must be at least 1"));
        }
        check_non_negative("trainer.lambda", t.lambda)?;
        check_positive("trainer.learning_rate", t.learning_rate)?;
        if !(0.0..1.0).contains(&t.beta1) {
            return Err(config_err("trainer.beta1", "must lie in [0, 1)"));
        }
        if !(0.0..1.0).contains(&t.beta2) {
            return Err(config_err("trainer.beta2", "must lie in [0, 1)"));
        }
        check_non_negative("trainer.adam_epsilon", t.adam_epsilon)?;
        check_positive("trainer.sigmoid_scale", t.sigmoid_scale)?;

        let b = &self.baseline;
        if b.d == 0 {
            return Err(config_err("baseline.d", "must be at least 1"));
        }
        check_non_negative("baseline.lambda", b.lambda)?;
        check_positive("baseline.npb_learning_rate", b.npb_learning_rate)?;
        check_positive("baseline.pb_learning_rate", b.pb_learning_rate)?;

        let ds = &self.dataset;
        if ds.path.is_some() && ds.synthetic.is_some() {
            return Err(config_err("dataset", "set either `path` or `synthetic`, not both"));
        }
        if let Some(p) = &ds.path {
            if !p.is_file() {
                return Err(config_err("dataset.path", format!("{} does not exist", p.display())));
            }
        }
        if let Some(s) = &ds.synthetic {
            if s.users < 2 || s.pois < 2 || s.length < 2 {
                return Err(config_err("dataset.synthetic", "users, pois and length must all be at least 2"));
            }
            if let ModelSpec::Matrix { path } = &s.model {
                if !path.is_file() {
                    return Err(config_err("dataset.synthetic.model.path", format!("{} does not exist", path.display())));
                }
            }
        }
        if ds.max_length.is_some_and(|l| l < 2) {
            return Err(config_err("dataset.max_length", "must be at least 2"));
        }
        Ok(())
    }

    pub fn dataset_name(&self) -> String {
        if let Some(name) = &self.dataset.name {
            return name.clone();
        }
        match &self.dataset.path {
            Some(p) => p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "dataset".into()),
            None => {
                let s = self.dataset.synthetic_or_default();
                format!("synthetic-{}x{}x{}", s.users, s.pois, s.length)
            }
        }
    }

    pub fn load_dataset(&self) -> Result<Dataset> {
        let mut dataset = match &self.dataset.path {
            Some(p) => load_checkins(p, None)?.dataset,
            None => self.dataset.synthetic_or_default().generate()?,
        };
        if let Some(l) = self.dataset.max_length {
            dataset.truncate_latest(l);
        }
        Ok(dataset)
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.runs as u64).map(|i| self.seed.wrapping_add(i)).collect()
    }

    /// Joint-model settings at the base budget.
    pub fn train_config(&self, privacy: Privacy) -> Result<TrainConfig> {
        let t = &self.trainer;
        Ok(TrainConfig {
            d: t.d,
            lambda: t.lambda,
            learning_rate: t.learning_rate,
            iterations: t.iterations,
            beta1: t.beta1,
            beta2: t.beta2,
            adam_epsilon: t.adam_epsilon,
            optimizer: t.optimizer,
            budget: split_budget(self.privacy.epsilon, self.privacy.split)?,
            sigmoid_scale: t.sigmoid_scale,
            group_scaling: t.group_scaling,
            privacy,
            trace: privacy == Privacy::Disabled,
            seed: self.seed,
        })
    }

    pub fn baseline_config(&self, method: Method) -> BaselineConfig {
        let b = &self.baseline;
        BaselineConfig {
            d: b.d,
            lambda: b.lambda,
            learning_rate: if method == Method::Npb { b.npb_learning_rate } else { b.pb_learning_rate },
            iterations: self.trainer.iterations,
            epsilon: self.privacy.epsilon,
            seed: self.seed,
        }
    }

    /// Full grid. The joint model spans every (ε, split, iterations); the
    /// baselines do not split their budget and use the base split only.
    pub fn plan(&self) -> Result<ExperimentPlan> {
        let or_base = |v: &Vec<f64>, base: f64| if v.is_empty() { vec![base] } else { v.clone() };
        let epsilons = or_base(&self.sweep.epsilons, self.privacy.epsilon);
        let splits = or_base(&self.sweep.splits, self.privacy.split);
        let iterations =
            if self.sweep.iterations.is_empty() { vec![self.trainer.iterations] } else { self.sweep.iterations.clone() };
        let mut cells = Vec::new();
        for &method in &self.methods {
            let method_splits = if method == Method::Spirel { splits.clone() } else { vec![self.privacy.split] };
            for &epsilon in &epsilons {
                for &split_ratio in &method_splits {
                    for &it in &iterations {
                        cells.push(Cell { method, epsilon, split_ratio, iterations: it });
                    }
                }
            }
        }
        Ok(ExperimentPlan {
            dataset_name: self.dataset_name(),
            cells,
            seeds: self.seeds(),
            ks: self.ks.clone(),
            spirel: self.train_config(Privacy::Local)?,
            npb: self.baseline_config(Method::Npb),
            pb: self.baseline_config(Method::Pb),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig> {
        parse_config_str(text, Path::new("."))
    }

    #[test]
    fn empty_file_gives_defaults() {
        let c = parse("").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.privacy.epsilon, 1.0);
        assert_eq!(c.privacy.split, 0.5);
        assert_eq!(c.trainer.iterations, 10);
        assert_eq!(c.trainer.lambda, 1e-8);
        assert_eq!(c.trainer.learning_rate, 1.0);
        assert_eq!(c.ks, vec![3, 5, 7, 10]);
    }

    #[test]
    fn negative_epsilon_names_key() {
        match parse("[privacy]\nepsilon = -1.0\n") {
            Err(Error::Config { key, .. }) => assert_eq!(key, "privacy.epsilon"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_names_key() {
        match parse("[trainer]\nlearnin_rate = 0.1\n") {
            Err(Error::Config { key, .. }) => assert_eq!(key, "learnin_rate"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn d15_accepted() {
        let c = parse("[trainer]\nd = 15\n").unwrap();
        assert_eq!(c.trainer.d, 15);
    }

    #[test]
    fn missing_dataset_file() {
        match parse("[dataset]\npath = \"/nonexistent/checkins.tsv\"\n") {
            Err(Error::Config { key, .. }) => assert_eq!(key, "dataset.path"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sweep_grid() {
        let c = parse(
            "methods = [\"spirel\", \"pb\"]\n[sweep]\nepsilons = [0.2, 0.4, 0.6, 0.8, 1.0]\nsplits = [0.1, 0.9]\n",
        )
        .unwrap();
        let plan = c.plan().unwrap();
        let count = |m| plan.cells.iter().filter(|c| c.method == m).count();
        assert_eq!(count(Method::Spirel), 10);
        assert_eq!(count(Method::Pb), 5);
        assert_eq!(plan.seeds.len(), 10);
    }
}
