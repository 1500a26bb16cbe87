//! Mixture-of-experts regression trained on a worst-group-aware loss.
//!
//! A gating MLP maps features to a distribution over `G` expert MLPs; the
//! batch loss blends the average squared error with the loss of the worst
//! group, where groups are the soft-assignment sets induced by the gate.
//! Sensitive features may steer the gate but, in the fair configurations,
//! never reach the experts.

mod mlp;

pub use mlp::{AdamState, ForwardCache, Layer, Mlp};

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Result, RomeError};
use crate::model::Dataset;

/// Which features feed the gating network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateFeatures {
    /// Gate sees only the sensitive features `S`.
    Sensitive,
    /// Gate sees the concatenation `[A; S]`.
    All,
}

/// Which features feed the experts. `NonSensitive` is the fair
/// configuration; `All` exists for the unconstrained baseline roles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExpertFeatures {
    NonSensitive,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Optimizer {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MoeConfig {
    pub g: usize,
    pub gate_features: GateFeatures,
    pub expert_features: ExpertFeatures,
    /// Trade-off between average and worst-group loss, in [0,1].
    pub alpha: f64,
    pub lr: f64,
    pub batch: usize,
    pub epochs: usize,
    pub hidden_expert: usize,
    pub hidden_gate: usize,
    /// Gate weight above which a sample counts toward a group's loss.
    pub mask_threshold: f64,
    pub optimizer: Optimizer,
    pub seed: u64,
    /// Off-by-default experiment: score each group's loss with its own
    /// expert's output instead of the mixture prediction.
    pub expert_own_loss: bool,
}

impl MoeConfig {
    pub fn new(g: usize) -> Self {
        MoeConfig {
            g,
            gate_features: GateFeatures::Sensitive,
            expert_features: ExpertFeatures::NonSensitive,
            alpha: 0.05,
            lr: 1e-3,
            batch: 64,
            epochs: 50,
            hidden_expert: 32,
            hidden_gate: 16,
            mask_threshold: 0.1,
            optimizer: Optimizer::Adam,
            seed: 0,
            expert_own_loss: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.g == 0 || self.batch == 0 || self.epochs == 0 {
            return Err(RomeError::InvalidConfig(
                "g, batch and epochs must all be at least 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(RomeError::InvalidConfig(format!(
                "alpha = {} outside [0,1]",
                self.alpha
            )));
        }
        if !(0.0..1.0).contains(&self.mask_threshold) {
            return Err(RomeError::InvalidConfig(format!(
                "mask_threshold = {} outside [0,1)",
                self.mask_threshold
            )));
        }
        Ok(())
    }

    fn gate_dims(&self, p_a: usize, p_s: usize) -> Vec<usize> {
        let input = match self.gate_features {
            GateFeatures::Sensitive => p_s,
            GateFeatures::All => p_a + p_s,
        };
        if self.hidden_gate == 0 {
            vec![input, self.g]
        } else {
            vec![input, self.hidden_gate, self.g]
        }
    }

    fn expert_dims(&self, p_a: usize, p_s: usize) -> Vec<usize> {
        let input = match self.expert_features {
            ExpertFeatures::NonSensitive => p_a,
            ExpertFeatures::All => p_a + p_s,
        };
        if self.hidden_expert == 0 {
            vec![input, 1]
        } else {
            vec![input, self.hidden_expert, 1]
        }
    }
}

/// Batch loss decomposition mandated by the training objective.
#[derive(Debug, Clone)]
pub struct BatchLoss {
    pub l_avg: f64,
    pub l_worst: f64,
    pub l_per_group: Array1<f64>,
    pub l_total: f64,
    /// Argmax group of the worst loss, `None` when every group mask is
    /// empty. Ties break to the lowest index.
    pub worst_index: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MoeModel {
    pub gate: Mlp,
    pub experts: Vec<Mlp>,
}

/// Gradients mirroring the parameter layout of [`MoeModel`].
#[derive(Debug, Clone)]
pub struct MoeGradients {
    pub gate: Mlp,
    pub experts: Vec<Mlp>,
}

/// Feature rows of a batch (the outcome is passed separately).
pub struct Rows<'a> {
    pub a: ArrayView2<'a, f64>,
    pub s: ArrayView2<'a, f64>,
}

impl<'a> Rows<'a> {
    pub fn n(&self) -> usize {
        self.a.nrows()
    }
}

// network index -> decorrelated RNG stream; stream 1 is the gate,
// streams 2.. are the experts, stream 1000 drives epoch shuffling.
fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

const GATE_STREAM: u64 = 1;
const EXPERT_STREAM0: u64 = 2;
const SHUFFLE_STREAM: u64 = 1000;

/// Fresh model with seeded uniform fan-in initialization. Every network
/// draws from its own RNG stream so the degenerate `G = 1` configuration
/// shares its expert initialization with the plain MLP trainer.
pub fn init_model(cfg: &MoeConfig, p_a: usize, p_s: usize) -> Result<MoeModel> {
    cfg.validate()?;
    let gate = Mlp::init(&cfg.gate_dims(p_a, p_s), &mut stream_rng(cfg.seed, GATE_STREAM));
    let experts = (0..cfg.g)
        .map(|j| {
            Mlp::init(
                &cfg.expert_dims(p_a, p_s),
                &mut stream_rng(cfg.seed, EXPERT_STREAM0 + j as u64),
            )
        })
        .collect();
    Ok(MoeModel { gate, experts })
}

fn gate_input(cfg: &MoeConfig, a: ArrayView1<f64>, s: ArrayView1<f64>) -> Array1<f64> {
    match cfg.gate_features {
        GateFeatures::Sensitive => s.to_owned(),
        GateFeatures::All => concat_rows(a, s),
    }
}

fn expert_input(cfg: &MoeConfig, a: ArrayView1<f64>, s: ArrayView1<f64>) -> Array1<f64> {
    match cfg.expert_features {
        ExpertFeatures::NonSensitive => a.to_owned(),
        ExpertFeatures::All => concat_rows(a, s),
    }
}

fn concat_rows(a: ArrayView1<f64>, s: ArrayView1<f64>) -> Array1<f64> {
    let mut out = Array1::<f64>::zeros(a.len() + s.len());
    out.slice_mut(ndarray::s![..a.len()]).assign(&a);
    out.slice_mut(ndarray::s![a.len()..]).assign(&s);
    out
}

fn softmax(z: ArrayView1<f64>) -> Array1<f64> {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut e = z.mapv(|v| (v - max).exp());
    let sum = e.sum();
    e.mapv_inplace(|v| v / sum);
    e
}

fn check_dims(model: &MoeModel, cfg: &MoeConfig, rows: &Rows) -> Result<()> {
    let (p_a, p_s) = (rows.a.ncols(), rows.s.ncols());
    let want_gate = match cfg.gate_features {
        GateFeatures::Sensitive => p_s,
        GateFeatures::All => p_a + p_s,
    };
    let want_expert = match cfg.expert_features {
        ExpertFeatures::NonSensitive => p_a,
        ExpertFeatures::All => p_a + p_s,
    };
    if model.gate.input_dim() != want_gate
        || model.gate.output_dim() != cfg.g
        || model.experts.len() != cfg.g
        || model.experts.iter().any(|e| e.input_dim() != want_expert)
    {
        return Err(RomeError::DimensionMismatch(format!(
            "model does not match variant: gate {}->{}, {} experts",
            model.gate.input_dim(),
            model.gate.output_dim(),
            model.experts.len()
        )));
    }
    Ok(())
}

/// Mixture predictions and gate weights for a batch.
pub fn forward(model: &MoeModel, cfg: &MoeConfig, rows: &Rows) -> Result<(Array1<f64>, Array2<f64>)> {
    check_dims(model, cfg, rows)?;
    let n = rows.n();
    let mut preds = Array1::<f64>::zeros(n);
    let mut gate_w = Array2::<f64>::zeros((n, cfg.g));
    for i in 0..n {
        let w = softmax(model.gate.forward(gate_input(cfg, rows.a.row(i), rows.s.row(i)).view()).view());
        let xe = expert_input(cfg, rows.a.row(i), rows.s.row(i));
        let mut yhat = 0.0;
        for (j, expert) in model.experts.iter().enumerate() {
            yhat += w[j] * expert.forward(xe.view())[0];
        }
        preds[i] = yhat;
        gate_w.row_mut(i).assign(&w);
    }
    Ok((preds, gate_w))
}

/// Batch loss decomposition: masked per-group losses, average loss, worst
/// group and the blended total.
pub fn group_losses(
    predictions: ArrayView1<f64>,
    gate_weights: ArrayView2<f64>,
    y: ArrayView1<f64>,
    cfg: &MoeConfig,
) -> BatchLoss {
    let b = predictions.len();
    let g = gate_weights.ncols();
    let mut l_per_group = Array1::<f64>::zeros(g);
    let mut worst_index = None;
    let mut l_worst = 0.0;
    for j in 0..g {
        let members: Vec<usize> = (0..b)
            .filter(|&i| gate_weights[(i, j)] > cfg.mask_threshold)
            .collect();
        if members.is_empty() {
            continue;
        }
        let mut lj = 0.0;
        for &i in &members {
            let r = y[i] - predictions[i];
            lj += gate_weights[(i, j)] * r * r;
        }
        lj /= members.len() as f64;
        l_per_group[j] = lj;
        // strict comparison keeps the lowest index on ties
        if worst_index.is_none() || lj > l_worst {
            l_worst = lj;
            worst_index = Some(j);
        }
    }
    let l_avg = (0..b).map(|i| (y[i] - predictions[i]).powi(2)).sum::<f64>() / b as f64;
    let l_total = (1.0 - cfg.alpha) * l_avg + cfg.alpha * l_worst;
    BatchLoss { l_avg, l_worst, l_per_group, l_total, worst_index }
}

/// Exact reverse-mode gradients of the blended loss. The group masks and
/// the worst-group argmax are treated as constants of the backward pass.
pub fn backward(
    model: &MoeModel,
    cfg: &MoeConfig,
    rows: &Rows,
    y: ArrayView1<f64>,
) -> Result<(BatchLoss, MoeGradients)> {
    check_dims(model, cfg, rows)?;
    let b = rows.n();
    if y.len() != b {
        return Err(RomeError::DimensionMismatch(format!(
            "{} rows but {} outcomes",
            b,
            y.len()
        )));
    }

    // cached forward pass
    let mut gate_caches = Vec::with_capacity(b);
    let mut expert_caches: Vec<Vec<ForwardCache>> = Vec::with_capacity(b);
    let mut gate_w = Array2::<f64>::zeros((b, cfg.g));
    let mut expert_out = Array2::<f64>::zeros((b, cfg.g));
    let mut preds = Array1::<f64>::zeros(b);
    for i in 0..b {
        let gc = model
            .gate
            .forward_cache(gate_input(cfg, rows.a.row(i), rows.s.row(i)).view());
        let w = softmax(gc.output.view());
        let xe = expert_input(cfg, rows.a.row(i), rows.s.row(i));
        let mut ecs = Vec::with_capacity(cfg.g);
        let mut yhat = 0.0;
        for (j, expert) in model.experts.iter().enumerate() {
            let ec = expert.forward_cache(xe.view());
            expert_out[(i, j)] = ec.output[0];
            yhat += w[j] * ec.output[0];
            ecs.push(ec);
        }
        preds[i] = yhat;
        gate_w.row_mut(i).assign(&w);
        gate_caches.push(gc);
        expert_caches.push(ecs);
    }

    let loss = if cfg.expert_own_loss {
        own_loss_decomposition(preds.view(), expert_out.view(), gate_w.view(), y, cfg)
    } else {
        group_losses(preds.view(), gate_w.view(), y, cfg)
    };

    // loss gradients with respect to the mixture prediction and the gate
    // weights; the direct w_ij term of the group loss lands in d_w
    let mut d_pred = Array1::<f64>::zeros(b);
    let mut d_w = Array2::<f64>::zeros((b, cfg.g));
    let mut d_expert_direct = Array2::<f64>::zeros((b, cfg.g));
    for i in 0..b {
        d_pred[i] = (1.0 - cfg.alpha) * (-2.0) * (y[i] - preds[i]) / b as f64;
    }
    if cfg.alpha > 0.0 {
        if let Some(jw) = loss.worst_index {
            let members: Vec<usize> = (0..b)
                .filter(|&i| gate_w[(i, jw)] > cfg.mask_threshold)
                .collect();
            let inv = 1.0 / members.len() as f64;
            for &i in &members {
                if cfg.expert_own_loss {
                    let r = y[i] - expert_out[(i, jw)];
                    d_expert_direct[(i, jw)] += cfg.alpha * gate_w[(i, jw)] * (-2.0) * r * inv;
                    d_w[(i, jw)] += cfg.alpha * r * r * inv;
                } else {
                    let r = y[i] - preds[i];
                    d_pred[i] += cfg.alpha * gate_w[(i, jw)] * (-2.0) * r * inv;
                    d_w[(i, jw)] += cfg.alpha * r * r * inv;
                }
            }
        }
    }

    // backpropagate through experts and gate
    let mut grads = MoeGradients {
        gate: model.gate.zeros_like(),
        experts: model.experts.iter().map(Mlp::zeros_like).collect(),
    };
    for i in 0..b {
        for j in 0..cfg.g {
            let d_f = d_pred[i] * gate_w[(i, j)] + d_expert_direct[(i, j)];
            if d_f != 0.0 {
                model.experts[j].backward_accumulate(
                    &expert_caches[i][j],
                    Array1::from_elem(1, d_f).view(),
                    &mut grads.experts[j],
                );
            }
            // prediction path contributes to the gate via y_hat = sum w_j f_j
            d_w[(i, j)] += d_pred[i] * expert_out[(i, j)];
        }
        // softmax backward: dz_k = w_k (g_k - sum_j g_j w_j)
        let wi = gate_w.row(i);
        let gi = d_w.row(i);
        let dot = gi.dot(&wi);
        let dz: Array1<f64> = (0..cfg.g).map(|k| wi[k] * (gi[k] - dot)).collect();
        model
            .gate
            .backward_accumulate(&gate_caches[i], dz.view(), &mut grads.gate);
    }
    Ok((loss, grads))
}

/// Loss decomposition for the `expert_own_loss` experiment: per-group
/// losses score each expert on its own output, the average loss still
/// uses the mixture prediction.
fn own_loss_decomposition(
    preds: ArrayView1<f64>,
    expert_out: ArrayView2<f64>,
    gate_w: ArrayView2<f64>,
    y: ArrayView1<f64>,
    cfg: &MoeConfig,
) -> BatchLoss {
    let b = preds.len();
    let g = gate_w.ncols();
    let mut l_per_group = Array1::<f64>::zeros(g);
    let mut worst_index = None;
    let mut l_worst = 0.0;
    for j in 0..g {
        let members: Vec<usize> = (0..b)
            .filter(|&i| gate_w[(i, j)] > cfg.mask_threshold)
            .collect();
        if members.is_empty() {
            continue;
        }
        let lj = members
            .iter()
            .map(|&i| gate_w[(i, j)] * (y[i] - expert_out[(i, j)]).powi(2))
            .sum::<f64>()
            / members.len() as f64;
        l_per_group[j] = lj;
        // strict comparison keeps the lowest index on ties
        if worst_index.is_none() || lj > l_worst {
            l_worst = lj;
            worst_index = Some(j);
        }
    }
    let l_avg = (0..b).map(|i| (y[i] - preds[i]).powi(2)).sum::<f64>() / b as f64;
    let l_total = (1.0 - cfg.alpha) * l_avg + cfg.alpha * l_worst;
    BatchLoss { l_avg, l_worst, l_per_group, l_total, worst_index }
}

/// Per-epoch mean losses recorded during training.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochLoss {
    pub total: f64,
    pub avg: f64,
    pub worst: f64,
}

#[derive(Debug, Clone)]
pub struct TrainedMoe {
    pub model: MoeModel,
    pub trace: Vec<EpochLoss>,
}

enum OptState {
    Sgd,
    Adam { gate: AdamState, experts: Vec<AdamState> },
}

/// Deterministic minibatch training of the full mixture.
pub fn train(data: &Dataset, cfg: &MoeConfig) -> Result<TrainedMoe> {
    cfg.validate()?;
    let mut model = init_model(cfg, data.a.ncols(), data.s.ncols())?;
    let mut opt = match cfg.optimizer {
        Optimizer::Sgd => OptState::Sgd,
        Optimizer::Adam => OptState::Adam {
            gate: AdamState::new(&model.gate),
            experts: model.experts.iter().map(AdamState::new).collect(),
        },
    };
    let mut shuffle_rng = stream_rng(cfg.seed, SHUFFLE_STREAM);
    let n = data.n();
    let mut order: Vec<usize> = (0..n).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut sums = (0.0, 0.0, 0.0);
        let mut batches = 0usize;
        for (batch_idx, chunk) in order.chunks(cfg.batch).enumerate() {
            let a = data.a.select(Axis(0), chunk);
            let s = data.s.select(Axis(0), chunk);
            let y = data.y.select(Axis(0), chunk);
            let rows = Rows { a: a.view(), s: s.view() };
            let (loss, grads) = backward(&model, cfg, &rows, y.view())?;
            if !loss.l_total.is_finite() {
                return Err(RomeError::Numerical(format!(
                    "non-finite loss at epoch {epoch}, batch {batch_idx}"
                )));
            }
            match &mut opt {
                OptState::Sgd => {
                    model.gate.sgd_step(&grads.gate, cfg.lr);
                    for (e, g) in model.experts.iter_mut().zip(&grads.experts) {
                        e.sgd_step(g, cfg.lr);
                    }
                }
                OptState::Adam { gate, experts } => {
                    gate.step(&mut model.gate, &grads.gate, cfg.lr);
                    for ((e, g), st) in
                        model.experts.iter_mut().zip(&grads.experts).zip(experts.iter_mut())
                    {
                        st.step(e, g, cfg.lr);
                    }
                }
            }
            sums.0 += loss.l_total;
            sums.1 += loss.l_avg;
            sums.2 += loss.l_worst;
            batches += 1;
        }
        let k = batches.max(1) as f64;
        trace.push(EpochLoss { total: sums.0 / k, avg: sums.1 / k, worst: sums.2 / k });
    }
    Ok(TrainedMoe { model, trace })
}

/// Inference path: forward without loss bookkeeping.
pub fn predict(model: &MoeModel, cfg: &MoeConfig, rows: &Rows) -> Result<Array1<f64>> {
    Ok(forward(model, cfg, rows)?.0)
}

/// Configuration of the plain single-MLP regression trainer used by the
/// baseline model roles.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SingleMlpConfig {
    pub hidden: usize,
    pub lr: f64,
    pub batch: usize,
    pub epochs: usize,
    pub optimizer: Optimizer,
    pub seed: u64,
}

/// Trains one MLP on mean squared error. Initialization and shuffling use
/// the same RNG streams as the first expert of a mixture with the same
/// seed, so the degenerate single-expert mixture reproduces this
/// trajectory exactly under SGD.
pub fn train_single_mlp(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    cfg: &SingleMlpConfig,
) -> Result<(Mlp, Vec<f64>)> {
    let dims = if cfg.hidden == 0 {
        vec![x.ncols(), 1]
    } else {
        vec![x.ncols(), cfg.hidden, 1]
    };
    let mut net = Mlp::init(&dims, &mut stream_rng(cfg.seed, EXPERT_STREAM0));
    let mut adam = match cfg.optimizer {
        Optimizer::Adam => Some(AdamState::new(&net)),
        Optimizer::Sgd => None,
    };
    let mut shuffle_rng = stream_rng(cfg.seed, SHUFFLE_STREAM);
    let n = x.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut sum = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch) {
            let b = chunk.len();
            let mut grads = net.zeros_like();
            let mut loss = 0.0;
            for &i in chunk {
                let cache = net.forward_cache(x.row(i));
                let r = y[i] - cache.output[0];
                loss += r * r / b as f64;
                let d = Array1::from_elem(1, -2.0 * r / b as f64);
                net.backward_accumulate(&cache, d.view(), &mut grads);
            }
            if !loss.is_finite() {
                return Err(RomeError::Numerical(format!(
                    "non-finite loss at epoch {epoch}"
                )));
            }
            match &mut adam {
                Some(state) => state.step(&mut net, &grads, cfg.lr),
                None => net.sgd_step(&grads, cfg.lr),
            }
            sum += loss;
            batches += 1;
        }
        trace.push(sum / batches.max(1) as f64);
    }
    Ok((net, trace))
}

/// Total parameter count of gate plus experts.
pub fn param_count(model: &MoeModel) -> usize {
    model.gate.num_params() + model.experts.iter().map(Mlp::num_params).sum::<usize>()
}

fn with_param<T>(nets: Vec<&mut Mlp>, idx: usize, f: impl FnOnce(&mut f64) -> T) -> T {
    let mut remaining = idx;
    for net in nets {
        for layer in &mut net.layers {
            if remaining < layer.w.len() {
                return f(layer.w.as_slice_mut().unwrap().get_mut(remaining).unwrap());
            }
            remaining -= layer.w.len();
            if remaining < layer.b.len() {
                return f(layer.b.get_mut(remaining).unwrap());
            }
            remaining -= layer.b.len();
        }
    }
    panic!("parameter index out of range");
}

/// Reads the parameter at a flat index (gate first, then experts; within
/// each layer the weights row-major, then the biases).
pub fn param_get(model: &mut MoeModel, idx: usize) -> f64 {
    let mut nets: Vec<&mut Mlp> = vec![&mut model.gate];
    nets.extend(model.experts.iter_mut());
    with_param(nets, idx, |p| *p)
}

/// Writes the parameter at a flat index.
pub fn param_set(model: &mut MoeModel, idx: usize, value: f64) {
    let mut nets: Vec<&mut Mlp> = vec![&mut model.gate];
    nets.extend(model.experts.iter_mut());
    with_param(nets, idx, |p| *p = value)
}

/// Reads the gradient entry matching [`param_get`]'s flat ordering.
pub fn grad_get(grads: &mut MoeGradients, idx: usize) -> f64 {
    let mut nets: Vec<&mut Mlp> = vec![&mut grads.gate];
    nets.extend(grads.experts.iter_mut());
    with_param(nets, idx, |p| *p)
}

/// Self-describing checkpoint: configuration echo plus all parameters.
/// JSON floats round-trip exactly, so reload is bit-faithful.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MoeCheckpoint {
    pub config: MoeConfig,
    pub model: MoeModel,
}

pub fn save_checkpoint(path: &Path, cfg: &MoeConfig, model: &MoeModel) -> Result<()> {
    let ckpt = MoeCheckpoint { config: cfg.clone(), model: model.clone() };
    let text = serde_json::to_string_pretty(&ckpt)
        .map_err(|e| RomeError::Data(format!("checkpoint encode: {e}")))?;
    std::fs::write(path, text).map_err(|e| RomeError::Data(format!("checkpoint write: {e}")))
}

pub fn load_checkpoint(path: &Path) -> Result<MoeCheckpoint> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RomeError::Data(format!("checkpoint read: {e}")))?;
    serde_json::from_str(&text).map_err(|e| RomeError::Data(format!("checkpoint decode: {e}")))
}
