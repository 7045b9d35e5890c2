//! Training loop, early stopping and seeded ensembles.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{Activation, LstmModel, Workspace};
use crate::error::{Error, Result};
use crate::framing::{SupervisedSet, Window};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Optimizer {
    /// Plain gradient descent.
    Gd,
    Adam { beta1: f64, beta2: f64, epsilon: f64 },
}

impl Default for Optimizer {
    fn default() -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BatchPolicy {
    #[default]
    Full,
    /// Shuffled mini-batches of this size, reshuffled every epoch.
    Mini { size: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub hidden_dim: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Non-improving validation epochs tolerated before stopping.
    pub patience: usize,
    pub batch: BatchPolicy,
    pub optimizer: Optimizer,
    pub seed: u64,
    pub n_runs: usize,
    pub candidate_activation: Activation,
    pub use_bias: bool,
    /// Tail fraction of the training pairs held out for early stopping.
    pub validation_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden_dim: 32,
            learning_rate: 1e-3,
            max_epochs: 2000,
            patience: 50,
            batch: BatchPolicy::Full,
            optimizer: Optimizer::default(),
            seed: 0,
            n_runs: 20,
            candidate_activation: Activation::Tanh,
            use_bias: false,
            validation_fraction: 0.1,
        }
    }
}

impl TrainConfig {
    /// A zero learning rate is accepted: it freezes the weights, which is
    /// useful for equivalence checks.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.hidden_dim == 0 {
            return bad("hidden_dim must be positive".into());
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate {} must be finite and >= 0", self.learning_rate));
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be positive".into());
        }
        if self.patience > self.max_epochs {
            return bad(format!(
                "patience {} exceeds max_epochs {}",
                self.patience, self.max_epochs
            ));
        }
        if self.n_runs == 0 {
            return bad("n_runs must be positive".into());
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return bad(format!(
                "validation_fraction {} must lie in [0, 1)",
                self.validation_fraction
            ));
        }
        if let BatchPolicy::Mini { size: 0 } = self.batch {
            return bad("mini-batch size must be positive".into());
        }
        if let Optimizer::Adam { beta1, beta2, epsilon } = self.optimizer {
            if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) || epsilon <= 0.0 {
                return bad("Adam needs 0 <= beta < 1 and epsilon > 0".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    /// Snapshot with the lowest validation loss.
    pub model: LstmModel,
    pub history: Vec<EpochRecord>,
    /// 0 when no epoch improved on the starting weights.
    pub best_epoch: usize,
    pub best_val_loss: f64,
}

struct OptState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl OptState {
    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn update(&mut self, cfg: &TrainConfig, params: &mut [f64], grad: &[f64]) {
        let lr = cfg.learning_rate;
        match cfg.optimizer {
            Optimizer::Gd => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p -= lr * g;
                }
            }
            Optimizer::Adam { beta1, beta2, epsilon } => {
                self.t += 1;
                let c1 = 1.0 - beta1.powi(self.t);
                let c2 = 1.0 - beta2.powi(self.t);
                for i in 0..params.len() {
                    let g = grad[i];
                    self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * g;
                    self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * g * g;
                    let mh = self.m[i] / c1;
                    let vh = self.v[i] / c2;
                    params[i] -= lr * mh / (vh.sqrt() + epsilon);
                }
            }
        }
    }
}

/// One training run from a seeded uniform initialization.
pub fn train(cfg: &TrainConfig, train_set: &SupervisedSet, validation_set: &SupervisedSet) -> Result<TrainOutcome> {
    let model = LstmModel::init_uniform(
        train_set.k,
        cfg.hidden_dim,
        cfg.candidate_activation,
        cfg.use_bias,
        cfg.seed,
    );
    train_from(cfg, model, train_set, validation_set)
}

/// Continue training from existing weights. With an empty validation set
/// the training loss drives early stopping.
pub fn train_from(
    cfg: &TrainConfig,
    init: LstmModel,
    train_set: &SupervisedSet,
    validation_set: &SupervisedSet,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }
    if init.input_dim() != train_set.k {
        return Err(Error::LengthMismatch {
            left: init.input_dim(),
            right: train_set.k,
        });
    }
    let n = train_set.len();
    let all: Vec<usize> = (0..n).collect();
    let val_idx: Vec<usize> = (0..validation_set.len()).collect();
    let monitor = |m: &LstmModel| -> Result<f64> {
        if validation_set.is_empty() {
            m.loss(&train_set.inputs, &train_set.targets, &all)
        } else {
            m.loss(&validation_set.inputs, &validation_set.targets, &val_idx)
        }
    };

    let mut model = init;
    let mut history = Vec::new();
    let mut best = model.clone();
    let mut best_val = monitor(&model)?;
    let mut best_epoch = 0;
    let mut bad = 0;
    let mut opt = OptState::new(model.params().len());
    let mut grad = vec![0.0; model.params().len()];
    let mut ws = Workspace::default();
    let mut order = all.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_5eed);

    for epoch in 1..=cfg.max_epochs {
        let batch_size = match cfg.batch {
            BatchPolicy::Full => n,
            BatchPolicy::Mini { size } => {
                order.shuffle(&mut rng);
                size.min(n)
            }
        };
        let mut loss_sum = 0.0;
        for chunk in order.chunks(batch_size) {
            let l = model
                .loss_and_gradient(&train_set.inputs, &train_set.targets, chunk, &mut grad, &mut ws)
                .map_err(|_| Error::Diverged {
                    epoch,
                    history: history.clone(),
                })?;
            loss_sum += l * chunk.len() as f64;
            opt.update(cfg, model.params_mut(), &grad);
        }
        let train_loss = loss_sum / n as f64;
        let val_loss = match monitor(&model) {
            Ok(v) if v.is_finite() => v,
            _ => {
                return Err(Error::Diverged { epoch, history });
            }
        };
        history.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
        });
        if val_loss < best_val {
            best_val = val_loss;
            best = model.clone();
            best_epoch = epoch;
            bad = 0;
        } else {
            bad += 1;
            if bad > cfg.patience {
                break;
            }
        }
    }
    Ok(TrainOutcome {
        model: best,
        history,
        best_epoch,
        best_val_loss: best_val,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    /// Set when the run diverged; its model is excluded (fresh runs) or
    /// carried over unchanged (warm-start retraining).
    pub diverged_at: Option<usize>,
}

/// Independently trained members whose predictions are averaged.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub members: Vec<LstmModel>,
    pub seeds: Vec<u64>,
    pub runs: Vec<RunSummary>,
}

impl Ensemble {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Member-order mean of the member predictions.
    pub fn predict(&self, windows: &[Window]) -> Result<Vec<f64>> {
        let mut sum = vec![0.0; windows.len()];
        for m in &self.members {
            for (s, p) in sum.iter_mut().zip(m.predict(windows)?) {
                *s += p;
            }
        }
        let n = self.members.len() as f64;
        Ok(sum.into_iter().map(|s| s / n).collect())
    }

    /// The first member alone, as a one-model ensemble.
    pub fn first_member(&self) -> Ensemble {
        Ensemble {
            members: self.members[..1].to_vec(),
            seeds: self.seeds[..1].to_vec(),
            runs: self.runs[..1].to_vec(),
        }
    }
}

fn summary(seed: u64, o: &TrainOutcome) -> RunSummary {
    RunSummary {
        seed,
        epochs_run: o.history.len(),
        best_epoch: o.best_epoch,
        best_val_loss: o.best_val_loss,
        diverged_at: None,
    }
}

/// Train `n_runs` models with seeds `seed, seed+1, ...`. Diverged runs are
/// dropped with a warning; at least half must survive.
pub fn train_ensemble(cfg: &TrainConfig, train_set: &SupervisedSet, validation_set: &SupervisedSet) -> Result<Ensemble> {
    cfg.validate()?;
    let results: Vec<(u64, Result<TrainOutcome>)> = (0..cfg.n_runs as u64)
        .into_par_iter()
        .map(|r| {
            let seed = cfg.seed.wrapping_add(r);
            let run_cfg = TrainConfig { seed, ..*cfg };
            (seed, train(&run_cfg, train_set, validation_set))
        })
        .collect();
    let mut ens = Ensemble {
        members: Vec::new(),
        seeds: Vec::new(),
        runs: Vec::new(),
    };
    for (seed, res) in results {
        match res {
            Ok(o) => {
                ens.runs.push(summary(seed, &o));
                ens.seeds.push(seed);
                ens.members.push(o.model);
            }
            Err(Error::Diverged { epoch, .. }) => {
                log::warn!("ensemble run with seed {seed} diverged at epoch {epoch}; excluded");
            }
            Err(e) => return Err(e),
        }
    }
    if ens.members.len() * 2 < cfg.n_runs {
        return Err(Error::NonFinite(format!(
            "only {} of {} ensemble runs converged",
            ens.members.len(),
            cfg.n_runs
        )));
    }
    Ok(ens)
}

/// Warm-start every member from its current weights. A member whose
/// retraining diverges keeps its previous weights and is flagged.
pub fn retrain_ensemble(
    cfg: &TrainConfig,
    prev: &Ensemble,
    train_set: &SupervisedSet,
    validation_set: &SupervisedSet,
) -> Result<Ensemble> {
    cfg.validate()?;
    let results: Vec<Result<(LstmModel, RunSummary)>> = prev
        .members
        .par_iter()
        .zip(prev.seeds.par_iter())
        .map(|(m, &seed)| {
            let run_cfg = TrainConfig { seed, ..*cfg };
            match train_from(&run_cfg, m.clone(), train_set, validation_set) {
                Ok(o) => {
                    let s = summary(seed, &o);
                    Ok((o.model, s))
                }
                Err(Error::Diverged { epoch, history }) => {
                    log::warn!("retraining seed {seed} diverged at epoch {epoch}; keeping prior weights");
                    Ok((
                        m.clone(),
                        RunSummary {
                            seed,
                            epochs_run: history.len(),
                            best_epoch: 0,
                            best_val_loss: f64::NAN,
                            diverged_at: Some(epoch),
                        },
                    ))
                }
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut ens = Ensemble {
        members: Vec::new(),
        seeds: prev.seeds.clone(),
        runs: Vec::new(),
    };
    for r in results {
        let (m, s) = r?;
        ens.members.push(m);
        ens.runs.push(s);
    }
    Ok(ens)
}

/// Train an ensemble and average its predictions on `windows`.
pub fn ensemble_predict(
    cfg: &TrainConfig,
    train_set: &SupervisedSet,
    validation_set: &SupervisedSet,
    windows: &[Window],
) -> Result<Vec<f64>> {
    train_ensemble(cfg, train_set, validation_set)?.predict(windows)
}
