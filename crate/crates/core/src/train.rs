//! Unsupervised training of the unfolded network: the loss is the
//! negated batch-mean sum-rate, so no solver labels are ever needed.
//!
//! Gradients come from the reverse-mode tape (running the identical
//! forward code on [`Var`](crate::tape::Var) scalars) or from central
//! finite differences over the flat parameter vector; the parameter set
//! is small enough (~10² scalars) that the latter is a practical
//! fallback and the permanent cross-check of the former. Everything is
//! deterministic given seeds: batches come from a seeded shuffle with
//! wraparound and per-sample gradients accumulate in batch order.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

// Inherent f64 methods cover these under std; the trait provides them
// for no_std builds.
#[allow(unused_imports)]
use num_traits::Float;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::csi::CsiTensor;
use crate::error::Error;
use crate::model::{unfolded_forward_lifted, ModelParams};
use crate::tape::Tape;
use crate::wmmse::{sum_rate, ProblemConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GradientMethod {
    Analytic,
    CentralFiniteDifference,
}

impl GradientMethod {
    pub fn label(self) -> &'static str {
        match self {
            Self::Analytic => "analytic",
            Self::CentralFiniteDifference => "fd",
        }
    }
}

impl core::fmt::Display for GradientMethod {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.label())
    }
}

impl core::str::FromStr for GradientMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "analytic" => Ok(Self::Analytic),
            "fd" => Ok(Self::CentralFiniteDifference),
            other => Err(Error::Config(format!(
                "unknown gradient method {other:?}, expected analytic or fd"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub max_iters: u64,
    /// Validation evaluations without improvement before stopping.
    pub patience: usize,
    /// Iterations between validation evaluations.
    pub eval_every: u64,
    pub seed: u64,
    pub gradient_method: GradientMethod,
    /// Relative step for central finite differences.
    pub fd_step: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 64,
            learning_rate: 1e-2,
            max_iters: 15000,
            patience: 10,
            eval_every: 100,
            seed: 0,
            gradient_method: GradientMethod::Analytic,
            fd_step: 1e-5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if !(self.fd_step > 0.0 && self.fd_step <= 1e-2) {
            return Err(Error::Config("fd_step must lie in (0, 1e-2]".into()));
        }
        if self.eval_every == 0 {
            return Err(Error::Config("eval_every must be >= 1".into()));
        }
        if self.patience == 0 {
            return Err(Error::Config("patience must be >= 1".into()));
        }
        Ok(())
    }
}

/// Adam first and second moments over the flat parameter vector.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        Self { m: vec![0.0; n], v: vec![0.0; n], step: 0 }
    }
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// One bias-corrected Adam update of `flat` in place.
pub fn adam_step(state: &mut AdamState, flat: &mut [f64], grad: &[f64], lr: f64) {
    assert_eq!(flat.len(), grad.len());
    assert_eq!(flat.len(), state.m.len());
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - ADAM_BETA1.powi(t);
    let c2 = 1.0 - ADAM_BETA2.powi(t);
    for i in 0..flat.len() {
        state.m[i] = ADAM_BETA1 * state.m[i] + (1.0 - ADAM_BETA1) * grad[i];
        state.v[i] = ADAM_BETA2 * state.v[i] + (1.0 - ADAM_BETA2) * grad[i] * grad[i];
        let mh = state.m[i] / c1;
        let vh = state.v[i] / c2;
        flat[i] -= lr * mh / (vh.sqrt() + ADAM_EPS);
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HistoryEntry {
    pub iteration: u64,
    /// Loss of the last training batch before this evaluation.
    pub train_loss: f64,
    pub val_sum_rate: f64,
}

/// Everything a training run carries between iterations; the divergence
/// error boxes the last finite snapshot of this.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainState {
    pub params: ModelParams,
    pub adam: AdamState,
    pub iteration: u64,
    pub best_val_sum_rate: f64,
    pub best_params: ModelParams,
    pub history: Vec<HistoryEntry>,
}

impl TrainState {
    pub fn new(params: ModelParams) -> Self {
        let n = params.param_count();
        Self {
            best_params: params.clone(),
            params,
            adam: AdamState::new(n),
            iteration: 0,
            best_val_sum_rate: f64::NEG_INFINITY,
            history: Vec::new(),
        }
    }

    /// The trained parameters (best recorded validation sum-rate) and
    /// the evaluation history.
    pub fn result(self) -> (ModelParams, Vec<HistoryEntry>) {
        (self.best_params, self.history)
    }
}

fn final_sum_rate(h: &CsiTensor, params: &ModelParams, cfg: &ProblemConfig) -> Result<f64, Error> {
    let hl = h.lift::<f64>();
    let lifted = params.lift_with(|x| x);
    let out = unfolded_forward_lifted(&hl, &lifted, cfg)?;
    sum_rate(&hl, out.final_v(), cfg)
}

/// Negated mean sum-rate of the unfolded outputs over the batch.
pub fn loss(
    batch: &[&CsiTensor],
    params: &ModelParams,
    cfg: &ProblemConfig,
) -> Result<f64, Error> {
    if batch.is_empty() {
        return Err(Error::Config("loss needs a non-empty batch".into()));
    }
    let mut acc = 0.0;
    for (s, h) in batch.iter().enumerate() {
        let rate = final_sum_rate(h, params, cfg)?;
        if !rate.is_finite() {
            return Err(Error::NonFiniteLoss { sample: s });
        }
        acc += rate;
    }
    Ok(-acc / batch.len() as f64)
}

/// Loss and its gradient over the flat parameter vector. The analytic
/// mode replays the forward pass on the tape per sample and accumulates
/// adjoints in batch order; the finite-difference mode perturbs each
/// coordinate by `fd_step · (1 + |θ_i|)`.
pub fn gradient(
    batch: &[&CsiTensor],
    params: &ModelParams,
    cfg: &ProblemConfig,
    method: GradientMethod,
    fd_step: f64,
) -> Result<(f64, Vec<f64>), Error> {
    if batch.is_empty() {
        return Err(Error::Config("gradient needs a non-empty batch".into()));
    }
    let n = params.param_count();
    let mut grad = vec![0.0; n];
    let value = match method {
        GradientMethod::Analytic => {
            let tape = Tape::new();
            let mut acc = 0.0;
            for (s, h) in batch.iter().enumerate() {
                tape.clear();
                let lifted = params.lift_with(|x| tape.leaf(x));
                let hl = h.lift();
                let out = unfolded_forward_lifted(&hl, &lifted, cfg)?;
                let objective = -sum_rate(&hl, out.final_v(), cfg)?;
                let val = crate::real::Real::value(objective);
                if !val.is_finite() {
                    return Err(Error::NonFiniteLoss { sample: s });
                }
                acc += val;
                let adjoint = tape.gradient(objective);
                for i in 0..n {
                    grad[i] += adjoint[i];
                }
            }
            // divide rather than multiply by a reciprocal so the value
            // matches loss() bit for bit
            let n_samples = batch.len() as f64;
            for g in grad.iter_mut() {
                *g /= n_samples;
            }
            acc / n_samples
        }
        GradientMethod::CentralFiniteDifference => {
            let center = loss(batch, params, cfg)?;
            let flat = params.flatten();
            let mut scratch = params.clone();
            let mut perturbed = flat.clone();
            for i in 0..n {
                let step = fd_step * (1.0 + flat[i].abs());
                perturbed[i] = flat[i] + step;
                scratch.unflatten(&perturbed)?;
                let up = loss(batch, &scratch, cfg)?;
                perturbed[i] = flat[i] - step;
                scratch.unflatten(&perturbed)?;
                let down = loss(batch, &scratch, cfg)?;
                perturbed[i] = flat[i];
                grad[i] = (up - down) / (2.0 * step);
            }
            scratch.unflatten(&flat)?;
            center
        }
    };
    for (i, g) in grad.iter().enumerate() {
        if !g.is_finite() {
            return Err(Error::NonFiniteGradient { param: params.param_path(i) });
        }
    }
    Ok((value, grad))
}

/// Deterministic index stream: a seeded shuffle of the dataset,
/// reshuffled on wraparound so batches may span epoch boundaries.
struct BatchSampler {
    order: Vec<usize>,
    pos: usize,
    rng: ChaCha8Rng,
}

impl BatchSampler {
    fn new(len: usize, seed: u64) -> Self {
        let mut s = Self {
            order: (0..len).collect(),
            pos: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        };
        s.order.shuffle(&mut s.rng);
        s
    }

    fn next_batch(&mut self, k: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(k);
        while out.len() < k {
            if self.pos == self.order.len() {
                self.order.shuffle(&mut self.rng);
                self.pos = 0;
            }
            out.push(self.order[self.pos]);
            self.pos += 1;
        }
        out
    }
}

fn divergence(err: Error, state: &TrainState) -> Error {
    match err {
        Error::NonFiniteLoss { .. } | Error::NonFiniteGradient { .. } => {
            Error::Diverged(Box::new(state.clone()))
        }
        other => other,
    }
}

/// Trains from a fresh state; see [`resume`] for continuing a run. The
/// returned state's `best_params` achieved the highest recorded
/// validation sum-rate.
pub fn train(
    train_set: &[CsiTensor],
    val_set: &[CsiTensor],
    params: ModelParams,
    tcfg: &TrainConfig,
    pcfg: &ProblemConfig,
) -> Result<TrainState, Error> {
    resume(TrainState::new(params), train_set, val_set, tcfg, pcfg)
}

/// Runs `state` forward until `tcfg.max_iters` total iterations or early
/// stopping. Batch sampling is re-derived from the seed and fast-forwarded
/// past the iterations already done, so an interrupted run continues on
/// the same batch sequence.
pub fn resume(
    mut state: TrainState,
    train_set: &[CsiTensor],
    val_set: &[CsiTensor],
    tcfg: &TrainConfig,
    pcfg: &ProblemConfig,
) -> Result<TrainState, Error> {
    tcfg.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::Config("training and validation sets must be non-empty".into()));
    }
    let (rx, tx) = (train_set[0].rx(), train_set[0].tx());
    pcfg.validate(rx, tx)?;
    state.params.validate(rx, tx)?;
    for h in train_set.iter().chain(val_set.iter()) {
        if h.rx() != rx || h.tx() != tx {
            return Err(Error::Dim("dataset mixes antenna configurations".into()));
        }
    }

    let mut sampler = BatchSampler::new(train_set.len(), tcfg.seed);
    for _ in 0..state.iteration {
        sampler.next_batch(tcfg.batch_size);
    }

    let val_refs: Vec<&CsiTensor> = val_set.iter().collect();
    // Evaluations since the best one, reconstructed from history so a
    // resumed run keeps its early-stopping budget.
    let mut stale_evals = if state.history.is_empty() {
        0
    } else {
        let mut best_i = 0;
        let mut best = f64::NEG_INFINITY;
        for (i, e) in state.history.iter().enumerate() {
            if e.val_sum_rate > best {
                best = e.val_sum_rate;
                best_i = i;
            }
        }
        state.history.len() - 1 - best_i
    };
    let mut last_train_loss = f64::NAN;
    let mut evaluated = state.iteration > 0 && !state.history.is_empty();

    while state.iteration < tcfg.max_iters {
        let idx = sampler.next_batch(tcfg.batch_size);
        let batch: Vec<&CsiTensor> = idx.iter().map(|&i| &train_set[i]).collect();
        let (batch_loss, grad) =
            gradient(&batch, &state.params, pcfg, tcfg.gradient_method, tcfg.fd_step)
                .map_err(|e| divergence(e, &state))?;
        last_train_loss = batch_loss;

        let mut flat = state.params.flatten();
        adam_step(&mut state.adam, &mut flat, &grad, tcfg.learning_rate);
        if flat.iter().any(|x| !x.is_finite()) {
            return Err(Error::Diverged(Box::new(state)));
        }
        state.params.unflatten(&flat)?;
        state.iteration += 1;

        if state.iteration % tcfg.eval_every == 0 {
            let val = -loss(&val_refs, &state.params, pcfg).map_err(|e| divergence(e, &state))?;
            evaluated = true;
            state.history.push(HistoryEntry {
                iteration: state.iteration,
                train_loss: last_train_loss,
                val_sum_rate: val,
            });
            if val > state.best_val_sum_rate {
                state.best_val_sum_rate = val;
                state.best_params = state.params.clone();
                stale_evals = 0;
            } else {
                stale_evals += 1;
                if stale_evals >= tcfg.patience {
                    break;
                }
            }
        }
    }

    // A short run can end before its first scheduled evaluation; score
    // the final params once so best_params reflects measured validation.
    if !evaluated && state.iteration > 0 {
        let val = -loss(&val_refs, &state.params, pcfg).map_err(|e| divergence(e, &state))?;
        state.history.push(HistoryEntry {
            iteration: state.iteration,
            train_loss: last_train_loss,
            val_sum_rate: val,
        });
        if val > state.best_val_sum_rate {
            state.best_val_sum_rate = val;
            state.best_params = state.params.clone();
        }
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{generate, ChannelFamily, ChannelSpec};
    use crate::wmmse::InterferenceMode;

    fn dataset(n: usize, seed: u64) -> Vec<CsiTensor> {
        let spec = ChannelSpec {
            family: ChannelFamily::Rayleigh,
            users: 3,
            tx: 2,
            rx: 2,
            rician_k_db: 0.0,
            seed,
        };
        generate(&spec, n).unwrap()
    }

    fn pcfg() -> ProblemConfig {
        ProblemConfig {
            streams: 1,
            sigma: 0.1,
            p_max: 1.0,
            interference_mode: InterferenceMode::ExcludeSelf,
        }
    }

    fn tcfg() -> TrainConfig {
        TrainConfig {
            batch_size: 4,
            eval_every: 5,
            max_iters: 20,
            seed: 3,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn loss_is_negated_mean_rate() {
        let data = dataset(3, 1);
        let params = ModelParams::init(0, 2, 2, 5, 2);
        let cfg = pcfg();
        let refs: Vec<&CsiTensor> = data.iter().collect();
        let l = loss(&refs, &params, &cfg).unwrap();
        let mut mean = 0.0;
        for h in &data {
            mean += final_sum_rate(h, &params, &cfg).unwrap();
        }
        mean /= 3.0;
        assert!((l + mean).abs() < 1e-12);

        let doubled = [&data[0], &data[0]];
        let single = [&data[0]];
        let a = loss(&doubled, &params, &cfg).unwrap();
        let b = loss(&single, &params, &cfg).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn adam_moves_against_gradient() {
        let mut st = AdamState::new(2);
        let mut x = [1.0, -1.0];
        adam_step(&mut st, &mut x, &[0.5, -0.25], 0.1);
        assert!(x[0] < 1.0);
        assert!(x[1] > -1.0);
        assert_eq!(st.step, 1);
    }

    #[test]
    fn training_is_deterministic() {
        let train_set = dataset(12, 2);
        let val_set = dataset(4, 77);
        let run = || {
            train(
                &train_set,
                &val_set,
                ModelParams::init(5, 2, 2, 5, 2),
                &tcfg(),
                &pcfg(),
            )
            .unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.history, b.history);
        assert_eq!(a.params, b.params);
        assert_eq!(a.best_params, b.best_params);
        assert_eq!(a.history.len(), 4);
    }

    #[test]
    fn zero_iterations_is_a_no_op() {
        let train_set = dataset(4, 2);
        let val_set = dataset(2, 3);
        let params = ModelParams::init(5, 2, 2, 5, 2);
        let cfg = TrainConfig { max_iters: 0, ..tcfg() };
        let out = train(&train_set, &val_set, params.clone(), &cfg, &pcfg()).unwrap();
        assert_eq!(out.params, params);
        assert_eq!(out.best_params, params);
        assert!(out.history.is_empty());
    }

    #[test]
    fn short_run_still_records_an_evaluation() {
        let train_set = dataset(4, 2);
        let val_set = dataset(2, 3);
        let cfg = TrainConfig { max_iters: 3, eval_every: 100, ..tcfg() };
        let out = train(
            &train_set,
            &val_set,
            ModelParams::init(5, 2, 2, 5, 2),
            &cfg,
            &pcfg(),
        )
        .unwrap();
        assert_eq!(out.history.len(), 1);
        assert_eq!(out.history[0].iteration, 3);
        assert_eq!(out.best_val_sum_rate, out.history[0].val_sum_rate);
    }

    #[test]
    fn resume_for_zero_extra_iterations_keeps_params() {
        let train_set = dataset(8, 2);
        let val_set = dataset(3, 3);
        let cfg = TrainConfig { max_iters: 10, eval_every: 5, ..tcfg() };
        let first = train(
            &train_set,
            &val_set,
            ModelParams::init(5, 2, 2, 5, 2),
            &cfg,
            &pcfg(),
        )
        .unwrap();
        let resumed = resume(first.clone(), &train_set, &val_set, &cfg, &pcfg()).unwrap();
        assert_eq!(resumed.params, first.params);
        assert_eq!(resumed.history, first.history);
    }

    #[test]
    fn resume_matches_uninterrupted_run() {
        let train_set = dataset(10, 4);
        let val_set = dataset(3, 5);
        let make = || ModelParams::init(6, 2, 2, 5, 2);
        let full_cfg = TrainConfig { max_iters: 12, eval_every: 4, ..tcfg() };
        let half_cfg = TrainConfig { max_iters: 6, ..full_cfg };
        let full = train(&train_set, &val_set, make(), &full_cfg, &pcfg()).unwrap();
        let half = train(&train_set, &val_set, make(), &half_cfg, &pcfg()).unwrap();
        let rejoined = resume(half, &train_set, &val_set, &full_cfg, &pcfg()).unwrap();
        assert_eq!(rejoined.params, full.params);
        assert_eq!(rejoined.history, full.history);
    }

    #[test]
    fn empty_datasets_are_rejected() {
        let data = dataset(2, 2);
        let params = ModelParams::init(0, 2, 2, 5, 2);
        assert!(train(&[], &data, params.clone(), &tcfg(), &pcfg()).is_err());
        assert!(train(&data, &[], params, &tcfg(), &pcfg()).is_err());
    }
}
