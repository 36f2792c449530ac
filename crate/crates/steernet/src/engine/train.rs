use super::exec::{backward, forward, BackwardOpts, Mode};
use super::loss::{focal_multilabel_bce, pixelwise_bce, FocalCfg};
use super::optim::Adam;
use super::EngineError;
use crate::netgraph::NetworkGraph;
use crate::numerics::{RngStream, Tensor};
use std::collections::HashMap;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    /// Pixel-wise BCE on a (N,1,H,W) logit map; metric is global Dice.
    Segmentation,
    /// Focal multi-label BCE on (N,T) logits; metric is masked accuracy.
    MultiLabel,
}

#[derive(Debug, Clone)]
pub struct Batch {
    pub inputs: Tensor,
    pub targets: Tensor,
    /// Optional {0,1} mask over targets; zero entries are ignored labels.
    pub mask: Option<Tensor>,
}

#[derive(Debug, Clone)]
pub struct TrainCfg {
    pub lr: f32,
    pub epochs: usize,
    pub seed: u64,
    pub task: TaskKind,
    /// Per-task (positive, negative) label counts for the focal loss.
    pub class_counts: Option<Vec<(f64, f64)>>,
    pub focal: FocalCfg,
}

impl TrainCfg {
    pub fn segmentation(lr: f32, epochs: usize, seed: u64) -> Self {
        TrainCfg {
            lr,
            epochs,
            seed,
            task: TaskKind::Segmentation,
            class_counts: None,
            focal: FocalCfg::default(),
        }
    }

    pub fn multilabel(lr: f32, epochs: usize, seed: u64, counts: Vec<(f64, f64)>) -> Self {
        TrainCfg {
            lr,
            epochs,
            seed,
            task: TaskKind::MultiLabel,
            class_counts: Some(counts),
            focal: FocalCfg::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub loss: f64,
    pub metric: f64,
    pub seconds: f64,
}

const BN_MOMENTUM: f64 = 0.1;

pub(crate) fn batch_loss(
    net: &NetworkGraph,
    out: &Tensor,
    batch: &Batch,
    cfg: &TrainCfg,
) -> Result<(f64, Tensor), EngineError> {
    match cfg.task {
        TaskKind::Segmentation => {
            let _ = net;
            Ok(pixelwise_bce(out, &batch.targets)?)
        }
        TaskKind::MultiLabel => {
            let counts = cfg.class_counts.as_ref().ok_or(EngineError::Loss(
                super::loss::LossError::Shape {
                    detail: "multilabel task needs class counts".into(),
                },
            ))?;
            Ok(focal_multilabel_bce(
                out,
                &batch.targets,
                batch.mask.as_ref(),
                counts,
                &cfg.focal,
            )?)
        }
    }
}

fn apply_bn_updates(net: &mut NetworkGraph, updates: &[(String, Vec<f64>, Vec<f64>)]) {
    for (node, mean, var) in updates {
        let rm = net.param_mut(node, "running_mean").unwrap();
        for (r, &m) in rm.tensor.data_mut().iter_mut().zip(mean) {
            *r = ((1.0 - BN_MOMENTUM) * *r as f64 + BN_MOMENTUM * m) as f32;
        }
        let rv = net.param_mut(node, "running_var").unwrap();
        for (r, &v) in rv.tensor.data_mut().iter_mut().zip(var) {
            *r = ((1.0 - BN_MOMENTUM) * *r as f64 + BN_MOMENTUM * v) as f32;
        }
    }
}

/// Evaluation-mode loss and metric over a dataset. The metric is global
/// Dice for segmentation (empty/empty counts as 1) or label accuracy for
/// the multi-label task, honoring the batch masks.
pub fn evaluate(
    net: &NetworkGraph,
    data: &[Batch],
    cfg: &TrainCfg,
) -> Result<(f64, f64), EngineError> {
    let mut loss_sum = 0.0f64;
    let mut inter = 0.0f64;
    let mut pred_sum = 0.0f64;
    let mut target_sum = 0.0f64;
    let mut correct = 0.0f64;
    let mut labeled = 0.0f64;
    for batch in data {
        let fwd = forward(net, &batch.inputs, Mode::Eval)?;
        let out = fwd.output(net)?;
        let (loss, _) = batch_loss(net, out, batch, cfg)?;
        loss_sum += loss;
        match cfg.task {
            TaskKind::Segmentation => {
                for (&z, &y) in out.data().iter().zip(batch.targets.data()) {
                    let p = z > 0.0; // sigmoid(z) > 0.5
                    let t = y > 0.5;
                    if p && t {
                        inter += 1.0;
                    }
                    if p {
                        pred_sum += 1.0;
                    }
                    if t {
                        target_sum += 1.0;
                    }
                }
            }
            TaskKind::MultiLabel => {
                for (i, (&z, &y)) in out.data().iter().zip(batch.targets.data()).enumerate() {
                    let m = batch.mask.as_ref().map_or(1.0, |mk| mk.data()[i]);
                    if m == 0.0 {
                        continue;
                    }
                    labeled += 1.0;
                    if (z > 0.0) == (y > 0.5) {
                        correct += 1.0;
                    }
                }
            }
        }
    }
    let metric = match cfg.task {
        TaskKind::Segmentation => {
            if pred_sum + target_sum == 0.0 {
                1.0
            } else {
                2.0 * inter / (pred_sum + target_sum)
            }
        }
        TaskKind::MultiLabel => {
            if labeled == 0.0 {
                1.0
            } else {
                correct / labeled
            }
        }
    };
    Ok((loss_sum / data.len().max(1) as f64, metric))
}

/// Train with Adam. Fixed parameters receive no gradient work and no
/// updates; BatchNorm running statistics update with momentum 0.1. Returns
/// the trained graph and per-epoch (loss, metric, seconds) rows.
pub fn train(
    net: &NetworkGraph,
    data: &[Batch],
    cfg: &TrainCfg,
) -> Result<(NetworkGraph, Vec<EpochMetrics>), EngineError> {
    let mut net = net.clone();
    let mut adam = Adam::new(cfg.lr);
    let mut rng = RngStream::new(cfg.seed).derive(0xB07C);
    let mut metrics = Vec::with_capacity(cfg.epochs);
    let out_id = net.outputs[0].clone();
    for epoch in 0..cfg.epochs {
        let started = Instant::now();
        let mut order: Vec<usize> = (0..data.len()).collect();
        // Fisher-Yates with the seeded stream
        for i in (1..order.len()).rev() {
            order.swap(i, rng.pick(i + 1));
        }
        let mut loss_sum = 0.0f64;
        for &bi in &order {
            let batch = &data[bi];
            let fwd = forward(&net, &batch.inputs, Mode::Train)?;
            let out = fwd.output(&net)?;
            let (loss, grad) = batch_loss(&net, out, batch, cfg)?;
            if !loss.is_finite() {
                return Err(EngineError::Divergence { epoch });
            }
            loss_sum += loss;
            let mut grad_out = HashMap::new();
            grad_out.insert(out_id.clone(), grad);
            let tape = backward(&net, &fwd, &grad_out, BackwardOpts { skip_fixed: true })?;
            apply_bn_updates(&mut net, &fwd.bn_running_updates());
            adam.step(&mut net, &tape);
        }
        let seconds = started.elapsed().as_secs_f64();
        let (_, metric) = evaluate(&net, data, cfg)?;
        metrics.push(EpochMetrics {
            epoch,
            loss: loss_sum / data.len().max(1) as f64,
            metric,
            seconds,
        });
    }
    Ok((net, metrics))
}
