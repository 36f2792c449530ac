use crate::engine::{backward, forward, BackwardOpts, Batch, EngineError, Mode};
use crate::netgraph::NetworkGraph;
use crate::numerics::Tensor;
use std::collections::HashMap;

/// Per-kernel saliency scores, shaped (outChannels, inChannelsPerGroup) for
/// each spatial layer.
#[derive(Debug, Clone)]
pub struct SaliencyScores {
    per_layer: HashMap<String, Tensor>,
    layer_order: Vec<String>,
}

impl SaliencyScores {
    /// Assemble scores from (layer id, (out x in-per-group) tensor) pairs,
    /// e.g. when loading from a file or building test fixtures.
    pub fn from_layers(pairs: Vec<(String, Tensor)>) -> Self {
        let layer_order = pairs.iter().map(|(id, _)| id.clone()).collect();
        SaliencyScores {
            per_layer: pairs.into_iter().collect(),
            layer_order,
        }
    }

    pub fn layer(&self, id: &str) -> Option<&Tensor> {
        self.per_layer.get(id)
    }

    /// Layer ids in network node order.
    pub fn layers(&self) -> &[String] {
        &self.layer_order
    }

    /// All scores flattened as (layer, out, in, score), in deterministic
    /// (node order, out, in) order.
    pub fn flattened(&self) -> Vec<(String, usize, usize, f32)> {
        let mut out = Vec::new();
        for id in &self.layer_order {
            let t = &self.per_layer[id];
            let (o_count, i_count) = (t.shape()[0], t.shape()[1]);
            for o in 0..o_count {
                for i in 0..i_count {
                    out.push((id.clone(), o, i, t.at2(o, i)));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SaliencyCfg {
    /// Score with |gradient| alone instead of |gradient * weight|.
    pub grad_only: bool,
    /// Guard for the division by the detached output.
    pub eps: f64,
}

impl Default for SaliencyCfg {
    fn default() -> Self {
        SaliencyCfg {
            grad_only: false,
            eps: 1e-8,
        }
    }
}

/// Gradient-times-weight saliency over labeled minibatches.
///
/// For each minibatch the scored quantity is `sum_i y_i * yhat_i / yhat'_i`
/// with `yhat = sigmoid(logits)` and `yhat'` a detached copy, so the
/// upstream gradient is `y * sigmoid'(z) / (yhat' + eps)`. Per kernel the
/// batch gradient is multiplied elementwise with the kernel (unless
/// `grad_only`), absolute values are summed over the kernel's positions,
/// and minibatch contributions add up. Labels with a zero mask entry
/// contribute nothing.
pub fn saliency(
    net: &NetworkGraph,
    batches: &[Batch],
    cfg: &SaliencyCfg,
) -> Result<SaliencyScores, EngineError> {
    let layers = net.spatial_layers();
    let mut per_layer: HashMap<String, Tensor> = HashMap::new();
    let mut layer_order = Vec::new();
    for &(idx, o, ipg, _, _) in &layers {
        let id = net.nodes[idx].id.clone();
        per_layer.insert(id.clone(), Tensor::zeros(&[o, ipg]));
        layer_order.push(id);
    }
    let out_id = net.outputs[0].clone();

    for batch in batches {
        let fwd = forward(net, &batch.inputs, Mode::Eval)?;
        let out = fwd.output(net)?;
        if out.shape() != batch.targets.shape() {
            return Err(EngineError::ShapeMismatch {
                node: out_id.clone(),
                detail: format!(
                    "targets {:?} vs output {:?}",
                    batch.targets.shape(),
                    out.shape()
                ),
            });
        }
        // d/dz of sum(y * sigmoid(z) / detach(sigmoid(z)))
        let mut grad = Tensor::zeros(out.shape());
        for ((g, &z), (&y, i)) in grad
            .data_mut()
            .iter_mut()
            .zip(out.data())
            .zip(batch.targets.data().iter().zip(0usize..))
        {
            let m = batch.mask.as_ref().map_or(1.0, |mk| mk.data()[i] as f64);
            let s = 1.0 / (1.0 + (-z as f64).exp());
            *g = (m * y as f64 * s * (1.0 - s) / (s + cfg.eps)) as f32;
        }
        let mut grad_out = HashMap::new();
        grad_out.insert(out_id.clone(), grad);
        let tape = backward(net, &fwd, &grad_out, BackwardOpts { skip_fixed: false })?;

        for &(idx, o_count, ipg, kh, kw) in &layers {
            let id = &net.nodes[idx].id;
            let g = tape.get(id, "weight").expect("gradient for spatial layer");
            let w = &net.param(id, "weight").unwrap().tensor;
            let scores = per_layer.get_mut(id).unwrap();
            let m = kh * kw;
            for o in 0..o_count {
                for i in 0..ipg {
                    let base = (o * ipg + i) * m;
                    let mut acc = 0.0f64;
                    for k in 0..m {
                        let gv = g.data()[base + k] as f64;
                        let term = if cfg.grad_only {
                            gv
                        } else {
                            gv * w.data()[base + k] as f64
                        };
                        acc += term.abs();
                    }
                    let cur = scores.at2(o, i);
                    scores.set2(o, i, cur + acc as f32);
                }
            }
        }
    }
    Ok(SaliencyScores {
        per_layer,
        layer_order,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgraph::{build_tiny_resnet, LayerKind, LayerNode, NetworkGraph, ParamTensor};
    use crate::numerics::RngStream;

    #[test]
    fn zero_kernel_scores_zero_with_grad_times_weight() {
        let mut net = build_tiny_resnet(1, 4, 2);
        // zero out one kernel of the stage conv
        {
            let p = net.param_mut("res0_conv", "weight").unwrap();
            let m = 9;
            p.tensor.data_mut()[..m].fill(0.0);
        }
        let mut rng = RngStream::new(3);
        let mut inputs = Tensor::zeros(&[2, 1, 8, 8]);
        for v in inputs.data_mut() {
            *v = rng.uniform(0.0, 1.0);
        }
        let targets = Tensor::from_vec(&[2, 5], vec![1.0; 10]);
        let batches = vec![Batch {
            inputs,
            targets,
            mask: None,
        }];
        let scores = saliency(&net, &batches, &SaliencyCfg::default()).unwrap();
        let s = scores.layer("res0_conv").unwrap();
        assert_eq!(s.at2(0, 0), 0.0);
        // gradient-only variant scores the same kernel nonzero
        let scores = saliency(
            &net,
            &batches,
            &SaliencyCfg {
                grad_only: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(scores.layer("res0_conv").unwrap().at2(0, 0) > 0.0);
    }

    #[test]
    fn single_conv_net_matches_analytic_score() {
        // net: x -> conv(1->1, 1x1 spatial as 3x3 with known kernel) -> out
        // with sigmoid scoring; compare against a hand-derived value
        let mut net = NetworkGraph::new(vec![("x".into(), 1)], vec!["c".into()]);
        net.nodes.push(LayerNode {
            id: "c".into(),
            kind: LayerKind::Conv2d {
                kh: 3,
                kw: 3,
                stride: 1,
                padding: 0,
                groups: 1,
                in_channels: 1,
                out_channels: 1,
                bias: false,
            },
            inputs: vec!["x".into()],
        });
        let kernel = vec![0.1, -0.2, 0.3, 0.0, 0.5, -0.1, 0.2, 0.1, -0.3];
        net.params.push(ParamTensor {
            owner: "c".into(),
            name: "weight".into(),
            tensor: Tensor::from_vec(&[1, 1, 3, 3], kernel.clone()),
            fixed: true,
            spatial: true,
            buffer: false,
        });
        let inputs = Tensor::from_vec(
            &[1, 1, 3, 3],
            vec![0.5, 0.25, -0.5, 1.0, 0.75, 0.1, -0.2, 0.4, 0.6],
        );
        let targets = Tensor::from_vec(&[1, 1, 1, 1], vec![1.0]);
        let batches = vec![Batch {
            inputs: inputs.clone(),
            targets,
            mask: None,
        }];
        let scores = saliency(&net, &batches, &SaliencyCfg::default()).unwrap();
        // analytic: z = sum(k * x); dz/dk_i = x_i; upstream = s(1-s)/(s+eps)
        let z: f64 = kernel
            .iter()
            .zip(inputs.data())
            .map(|(&k, &x)| k as f64 * x as f64)
            .sum();
        let s = 1.0 / (1.0 + (-z).exp());
        let up = s * (1.0 - s) / (s + 1e-8);
        let want: f64 = kernel
            .iter()
            .zip(inputs.data())
            .map(|(&k, &x)| (up * x as f64 * k as f64).abs())
            .sum();
        let got = scores.layer("c").unwrap().at2(0, 0) as f64;
        assert!((got - want).abs() < 1e-5, "got {got} want {want}");
    }

    #[test]
    fn fixed_kernels_still_receive_scores() {
        let net = build_tiny_resnet(1, 4, 5)
            .apply_initializer(
                crate::filterbank::Method::GHaar,
                3,
                None,
                &crate::netgraph::InitOptions::default(),
            )
            .unwrap();
        let mut rng = RngStream::new(4);
        let mut inputs = Tensor::zeros(&[2, 1, 8, 8]);
        for v in inputs.data_mut() {
            *v = rng.uniform(0.0, 1.0);
        }
        let targets = Tensor::from_vec(&[2, 5], vec![1.0; 10]);
        let batches = vec![Batch {
            inputs,
            targets,
            mask: None,
        }];
        let scores = saliency(&net, &batches, &SaliencyCfg::default()).unwrap();
        let total: f32 = scores
            .flattened()
            .iter()
            .map(|(_, _, _, s)| *s)
            .sum();
        assert!(total > 0.0);
    }
}
