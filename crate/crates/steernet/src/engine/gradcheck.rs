//! Central finite-difference verification of the analytic gradients.
//!
//! The oracle side only ever calls [`forward`] and the loss functions, so it
//! is independent of the backward implementation it checks. Probes compare
//! `(L(p + eps) - L(p - eps)) / (2 eps)` against the tape entry at randomly
//! chosen parameter coordinates.

use super::exec::{backward, forward, BackwardOpts, Mode};
use super::train::{Batch, TrainCfg};
use super::EngineError;
use crate::netgraph::NetworkGraph;
use crate::numerics::RngStream;
use std::collections::HashMap;

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub probes: usize,
    pub max_rel_err: f64,
    /// (owner, param, flat index) of the worst probe.
    pub worst: (String, String, usize),
}

fn loss_of(
    net: &NetworkGraph,
    batch: &Batch,
    cfg: &TrainCfg,
    mode: Mode,
) -> Result<f64, EngineError> {
    let fwd = forward(net, &batch.inputs, mode)?;
    let out = fwd.output(net)?;
    let (loss, _) = super::train::batch_loss(net, out, batch, cfg)?;
    Ok(loss)
}

/// Probe every non-buffer parameter of `net` at `probes_per_param` random
/// coordinates and report the worst relative disagreement.
///
/// The relative error denominator is
/// `max(|analytic|, |numeric|, 0.05 * mean|analytic over the tensor|, 1e-8)`,
/// so probes that land on near-zero gradient coordinates are judged against
/// the parameter tensor's own gradient scale rather than against zero.
pub fn finite_difference_check(
    net: &NetworkGraph,
    batch: &Batch,
    cfg: &TrainCfg,
    mode: Mode,
    probes_per_param: usize,
    seed: u64,
) -> Result<GradCheckReport, EngineError> {
    let fwd = forward(net, &batch.inputs, mode)?;
    let out = fwd.output(net)?;
    let (_, grad) = super::train::batch_loss(net, out, batch, cfg)?;
    let mut grad_out = HashMap::new();
    grad_out.insert(net.outputs[0].clone(), grad);
    let tape = backward(net, &fwd, &grad_out, BackwardOpts { skip_fixed: false })?;

    let mut rng = RngStream::new(seed);
    let mut report = GradCheckReport {
        probes: 0,
        max_rel_err: 0.0,
        worst: (String::new(), String::new(), 0),
    };
    let mut work = net.clone();
    for pi in 0..net.params.len() {
        let (owner, name, numel, buffer) = {
            let p = &net.params[pi];
            (p.owner.clone(), p.name.clone(), p.tensor.numel(), p.buffer)
        };
        if buffer || numel == 0 {
            continue;
        }
        let analytic = tape
            .get(&owner, &name)
            .unwrap_or_else(|| panic!("no gradient recorded for {owner}.{name}"));
        let scale = analytic.data().iter().map(|&v| v.abs() as f64).sum::<f64>()
            / analytic.numel() as f64;
        for _ in 0..probes_per_param {
            let idx = rng.pick(numel);
            let orig = net.params[pi].tensor.data()[idx];
            // large enough that f32 forward rounding stays well below the
            // truncation term; both sit under the 1e-3 bar on one-layer nets
            let eps = 1e-2f32 * orig.abs().max(1.0);
            work.params[pi].tensor.data_mut()[idx] = orig + eps;
            let lp = loss_of(&work, batch, cfg, mode)?;
            work.params[pi].tensor.data_mut()[idx] = orig - eps;
            let lm = loss_of(&work, batch, cfg, mode)?;
            work.params[pi].tensor.data_mut()[idx] = orig;
            let fd = (lp - lm) / (2.0 * eps as f64);
            let ad = analytic.data()[idx] as f64;
            let denom = ad.abs().max(fd.abs()).max(0.05 * scale).max(1e-8);
            let rel = (ad - fd).abs() / denom;
            report.probes += 1;
            if rel > report.max_rel_err {
                report.max_rel_err = rel;
                report.worst = (owner.clone(), name.clone(), idx);
            }
        }
    }
    Ok(report)
}
