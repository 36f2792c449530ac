use super::ops::{
    bilinear_up_backward, bilinear_up_forward, bn_backward_eval, bn_backward_train,
    bn_forward_eval, bn_forward_train, conv2d_backward, conv2d_forward, conv_out_hw, dims4,
    ConvAttrs,
};
use super::EngineError;
use crate::netgraph::{ActKind, LayerKind, NetworkGraph};
use crate::numerics::Tensor;
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Result of a forward pass: every wire's activation, plus the batch
/// statistics recorded by train-mode BatchNorm nodes (training applies them
/// to the running buffers, backward reuses them).
pub struct Forward {
    pub acts: HashMap<String, Tensor>,
    pub mode: Mode,
    /// BatchNorm node -> (batch mean, biased batch var, element count).
    pub(crate) bn_stats: HashMap<String, (Vec<f64>, Vec<f64>, f64)>,
}

impl Forward {
    pub fn output(&self, net: &NetworkGraph) -> Result<&Tensor, EngineError> {
        let id = &net.outputs[0];
        self.acts.get(id).ok_or(EngineError::MissingActivation {
            wire: id.clone(),
        })
    }

    /// Batch statistics per BatchNorm node with the unbiased variance
    /// correction applied, for running-average updates.
    pub(crate) fn bn_running_updates(&self) -> Vec<(String, Vec<f64>, Vec<f64>)> {
        let mut keys: Vec<&String> = self.bn_stats.keys().collect();
        keys.sort();
        keys.into_iter()
            .map(|k| {
                let (mean, var, count) = &self.bn_stats[k];
                let correction = if *count > 1.0 {
                    count / (count - 1.0)
                } else {
                    1.0
                };
                (
                    k.clone(),
                    mean.clone(),
                    var.iter().map(|v| v * correction).collect(),
                )
            })
            .collect()
    }
}

fn conv_attrs(kind: &LayerKind) -> Option<(ConvAttrs, bool)> {
    match *kind {
        LayerKind::Conv2d {
            kh,
            kw,
            stride,
            padding,
            groups,
            in_channels,
            out_channels,
            bias,
        } => Some((
            ConvAttrs {
                kh,
                kw,
                stride,
                padding,
                groups,
                in_channels,
                out_channels,
            },
            bias,
        )),
        LayerKind::PointwiseConv {
            in_channels,
            out_channels,
            bias,
        } => Some((
            ConvAttrs {
                kh: 1,
                kw: 1,
                stride: 1,
                padding: 0,
                groups: 1,
                in_channels,
                out_channels,
            },
            bias,
        )),
        _ => None,
    }
}

fn activation_forward(act: ActKind, x: &Tensor) -> Tensor {
    let mut out = x.clone();
    match act {
        ActKind::Celu => {
            for v in out.data_mut() {
                if *v < 0.0 {
                    *v = v.exp() - 1.0;
                }
            }
        }
        ActKind::Relu => {
            for v in out.data_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
        }
        ActKind::Sigmoid => {
            for v in out.data_mut() {
                *v = 1.0 / (1.0 + (-*v as f64).exp()) as f32;
            }
        }
    }
    out
}

fn activation_backward(act: ActKind, x: &Tensor, dout: &Tensor) -> Tensor {
    let mut dx = dout.clone();
    match act {
        ActKind::Celu => {
            for (d, &xv) in dx.data_mut().iter_mut().zip(x.data()) {
                if xv <= 0.0 {
                    *d *= xv.exp();
                }
            }
        }
        ActKind::Relu => {
            for (d, &xv) in dx.data_mut().iter_mut().zip(x.data()) {
                if xv <= 0.0 {
                    *d = 0.0;
                }
            }
        }
        ActKind::Sigmoid => {
            for (d, &xv) in dx.data_mut().iter_mut().zip(x.data()) {
                let s = 1.0 / (1.0 + (-xv as f64).exp());
                *d = (*d as f64 * s * (1.0 - s)) as f32;
            }
        }
    }
    dx
}

/// Run the graph on one input batch. Convolution is cross-correlation; the
/// output is deterministic for a given mode and parameter state.
pub fn forward(net: &NetworkGraph, input: &Tensor, mode: Mode) -> Result<Forward, EngineError> {
    assert_eq!(net.inputs.len(), 1, "engine drives single-input graphs");
    let (in_name, in_ch) = &net.inputs[0];
    let s = input.shape();
    if s.len() != 4 || s[1] != *in_ch {
        return Err(EngineError::ShapeMismatch {
            node: in_name.clone(),
            detail: format!("input shape {s:?}, expected (N,{in_ch},H,W)"),
        });
    }
    let mut acts: HashMap<String, Tensor> = HashMap::new();
    let mut bn_stats = HashMap::new();
    acts.insert(in_name.clone(), input.clone());
    let order = net.topo_order()?;
    for idx in order {
        let node = &net.nodes[idx];
        let ins: Vec<&Tensor> = node
            .inputs
            .iter()
            .map(|w| {
                acts.get(w).ok_or(EngineError::MissingActivation {
                    wire: w.clone(),
                })
            })
            .collect::<Result<_, _>>()?;
        let out = match &node.kind {
            LayerKind::Conv2d { .. } | LayerKind::PointwiseConv { .. } => {
                let (attrs, has_bias) = conv_attrs(&node.kind).unwrap();
                let x = ins[0];
                let (_, c, h, w) = dims4(x);
                if c != attrs.in_channels {
                    return Err(EngineError::ShapeMismatch {
                        node: node.id.clone(),
                        detail: format!("got {c} channels, want {}", attrs.in_channels),
                    });
                }
                if conv_out_hw(&attrs, h, w).is_none() {
                    return Err(EngineError::ShapeMismatch {
                        node: node.id.clone(),
                        detail: format!("kernel does not fit {h}x{w} input"),
                    });
                }
                let weight = &net.param(&node.id, "weight").unwrap().tensor;
                let bias = has_bias.then(|| &net.param(&node.id, "bias").unwrap().tensor);
                conv2d_forward(x, weight, bias, &attrs)
            }
            LayerKind::BatchNorm { .. } => {
                let scale = &net.param(&node.id, "scale").unwrap().tensor;
                let shift = &net.param(&node.id, "shift").unwrap().tensor;
                match mode {
                    Mode::Train => {
                        let (n, _, h, w) = dims4(ins[0]);
                        let (y, mean, var) = bn_forward_train(ins[0], scale, shift);
                        bn_stats.insert(node.id.clone(), (mean, var, (n * h * w) as f64));
                        y
                    }
                    Mode::Eval => {
                        let rm = &net.param(&node.id, "running_mean").unwrap().tensor;
                        let rv = &net.param(&node.id, "running_var").unwrap().tensor;
                        bn_forward_eval(ins[0], scale, shift, rm, rv)
                    }
                }
            }
            LayerKind::Linear { in_features, out_features, bias } => {
                let x = ins[0];
                if x.shape().len() != 2 || x.shape()[1] != *in_features {
                    return Err(EngineError::ShapeMismatch {
                        node: node.id.clone(),
                        detail: format!("linear input {:?}, want (N,{in_features})", x.shape()),
                    });
                }
                let n = x.shape()[0];
                let weight = &net.param(&node.id, "weight").unwrap().tensor;
                let mut out = Tensor::zeros(&[n, *out_features]);
                for ni in 0..n {
                    for o in 0..*out_features {
                        let mut acc = if *bias {
                            net.param(&node.id, "bias").unwrap().tensor.data()[o] as f64
                        } else {
                            0.0
                        };
                        for i in 0..*in_features {
                            acc += weight.at2(o, i) as f64 * x.at2(ni, i) as f64;
                        }
                        out.set2(ni, o, acc as f32);
                    }
                }
                out
            }
            LayerKind::Activation { act } => activation_forward(*act, ins[0]),
            LayerKind::Add => {
                let mut out = ins[0].clone();
                for t in &ins[1..] {
                    if t.shape() != out.shape() {
                        return Err(EngineError::ShapeMismatch {
                            node: node.id.clone(),
                            detail: "add inputs differ in shape".into(),
                        });
                    }
                    out = out.add(t);
                }
                out
            }
            LayerKind::Concat => {
                let (n, _, h, w) = dims4(ins[0]);
                let mut channels = 0;
                for t in &ins {
                    let (tn, tc, th, tw) = dims4(t);
                    if (tn, th, tw) != (n, h, w) {
                        return Err(EngineError::ShapeMismatch {
                            node: node.id.clone(),
                            detail: "concat inputs differ in N/H/W".into(),
                        });
                    }
                    channels += tc;
                }
                let mut out = Tensor::zeros(&[n, channels, h, w]);
                let plane = h * w;
                for ni in 0..n {
                    let mut c_off = 0;
                    for t in &ins {
                        let tc = t.shape()[1];
                        let src = &t.data()[ni * tc * plane..][..tc * plane];
                        let dst = &mut out.data_mut()
                            [(ni * channels + c_off) * plane..][..tc * plane];
                        dst.copy_from_slice(src);
                        c_off += tc;
                    }
                }
                out
            }
            LayerKind::BilinearUpsample { factor } => bilinear_up_forward(ins[0], *factor),
            LayerKind::GlobalAvgPool => {
                let (n, c, h, w) = dims4(ins[0]);
                let plane = (h * w) as f64;
                let mut out = Tensor::zeros(&[n, c]);
                for ni in 0..n {
                    for ci in 0..c {
                        let src = &ins[0].data()[(ni * c + ci) * h * w..][..h * w];
                        let s: f64 = src.iter().map(|&v| v as f64).sum();
                        out.set2(ni, ci, (s / plane) as f32);
                    }
                }
                out
            }
            LayerKind::ScalarFusion { .. } => {
                let weights = &net.param(&node.id, "weights").unwrap().tensor;
                let mut out = Tensor::zeros(ins[0].shape());
                for (k, t) in ins.iter().enumerate() {
                    if t.shape() != out.shape() {
                        return Err(EngineError::ShapeMismatch {
                            node: node.id.clone(),
                            detail: "fusion inputs differ in shape".into(),
                        });
                    }
                    let s = weights.data()[k];
                    for (o, &v) in out.data_mut().iter_mut().zip(t.data()) {
                        *o += s * v;
                    }
                }
                out
            }
        };
        acts.insert(node.id.clone(), out);
    }
    Ok(Forward {
        acts,
        mode,
        bn_stats,
    })
}

/// Per-parameter gradients keyed by (owner node, param name).
#[derive(Debug, Default)]
pub struct GradientTape {
    pub grads: HashMap<(String, String), Tensor>,
}

impl GradientTape {
    pub fn get(&self, owner: &str, name: &str) -> Option<&Tensor> {
        self.grads.get(&(owner.to_string(), name.to_string()))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BackwardOpts {
    /// Skip kernel-gradient computation for fixed parameters. Training sets
    /// this (fixed filters receive no updates, and skipping the work is
    /// where the fixed-filter speedup comes from); saliency scoring clears
    /// it because it needs those gradients.
    pub skip_fixed: bool,
}

/// Reverse-mode sweep from `grad_out` (gradients w.r.t. output-node
/// activations) back to every parameter.
pub fn backward(
    net: &NetworkGraph,
    fwd: &Forward,
    grad_out: &HashMap<String, Tensor>,
    opts: BackwardOpts,
) -> Result<GradientTape, EngineError> {
    let order = net.topo_order()?;
    let mut wire_grads: HashMap<String, Tensor> = grad_out.clone();
    let mut tape = GradientTape::default();

    let act_of = |wire: &str| -> Result<&Tensor, EngineError> {
        fwd.acts.get(wire).ok_or(EngineError::MissingActivation {
            wire: wire.to_string(),
        })
    };

    for &idx in order.iter().rev() {
        let node = &net.nodes[idx];
        let Some(dout) = wire_grads.get(&node.id).cloned() else {
            continue;
        };
        let push = |wire: &str, grad: Tensor, sink: &mut HashMap<String, Tensor>| {
            sink.entry(wire.to_string())
                .and_modify(|g| {
                    for (a, &b) in g.data_mut().iter_mut().zip(grad.data()) {
                        *a += b;
                    }
                })
                .or_insert(grad);
        };
        match &node.kind {
            LayerKind::Conv2d { .. } | LayerKind::PointwiseConv { .. } => {
                let (attrs, has_bias) = conv_attrs(&node.kind).unwrap();
                let x = act_of(&node.inputs[0])?;
                let wp = net.param(&node.id, "weight").unwrap();
                let want_dw = !(opts.skip_fixed && wp.fixed);
                // nothing upstream of a graph input can use its gradient
                let want_dx = !net
                    .inputs
                    .iter()
                    .any(|(name, _)| name == &node.inputs[0]);
                let (dx, dw, db) =
                    conv2d_backward(x, &wp.tensor, has_bias, &attrs, &dout, want_dw, want_dx);
                if let Some(dw) = dw {
                    tape.grads.insert((node.id.clone(), "weight".into()), dw);
                }
                if let Some(db) = db {
                    tape.grads.insert((node.id.clone(), "bias".into()), db);
                }
                if let Some(dx) = dx {
                    push(&node.inputs[0], dx, &mut wire_grads);
                }
            }
            LayerKind::BatchNorm { .. } => {
                let x = act_of(&node.inputs[0])?;
                let scale = &net.param(&node.id, "scale").unwrap().tensor;
                let (dx, dscale, dshift) = match fwd.mode {
                    Mode::Train => {
                        let (mean, var, _) =
                            fwd.bn_stats.get(&node.id).expect("bn stats recorded");
                        bn_backward_train(x, scale, mean, var, &dout)
                    }
                    Mode::Eval => {
                        let rm = &net.param(&node.id, "running_mean").unwrap().tensor;
                        let rv = &net.param(&node.id, "running_var").unwrap().tensor;
                        bn_backward_eval(x, scale, rm, rv, &dout)
                    }
                };
                tape.grads.insert((node.id.clone(), "scale".into()), dscale);
                tape.grads.insert((node.id.clone(), "shift".into()), dshift);
                push(&node.inputs[0], dx, &mut wire_grads);
            }
            LayerKind::Linear { in_features, out_features, bias } => {
                let x = act_of(&node.inputs[0])?;
                let n = x.shape()[0];
                let weight = &net.param(&node.id, "weight").unwrap().tensor;
                let mut dw = vec![0.0f64; out_features * in_features];
                let mut db = vec![0.0f64; *out_features];
                let mut dx = Tensor::zeros(x.shape());
                for ni in 0..n {
                    for o in 0..*out_features {
                        let d = dout.at2(ni, o) as f64;
                        db[o] += d;
                        for i in 0..*in_features {
                            dw[o * in_features + i] += d * x.at2(ni, i) as f64;
                        }
                    }
                    for i in 0..*in_features {
                        let mut acc = 0.0f64;
                        for o in 0..*out_features {
                            acc += dout.at2(ni, o) as f64 * weight.at2(o, i) as f64;
                        }
                        dx.set2(ni, i, acc as f32);
                    }
                }
                tape.grads.insert(
                    (node.id.clone(), "weight".into()),
                    Tensor::from_vec(
                        &[*out_features, *in_features],
                        dw.iter().map(|&v| v as f32).collect(),
                    ),
                );
                if *bias {
                    tape.grads.insert(
                        (node.id.clone(), "bias".into()),
                        Tensor::from_vec(&[*out_features], db.iter().map(|&v| v as f32).collect()),
                    );
                }
                push(&node.inputs[0], dx, &mut wire_grads);
            }
            LayerKind::Activation { act } => {
                let x = act_of(&node.inputs[0])?;
                let dx = activation_backward(*act, x, &dout);
                push(&node.inputs[0], dx, &mut wire_grads);
            }
            LayerKind::Add => {
                for w in &node.inputs {
                    push(w, dout.clone(), &mut wire_grads);
                }
            }
            LayerKind::Concat => {
                let (n, channels, h, w) = dims4(&dout);
                let plane = h * w;
                let mut c_off = 0;
                for wire in &node.inputs {
                    let tc = act_of(wire)?.shape()[1];
                    let mut dx = Tensor::zeros(&[n, tc, h, w]);
                    for ni in 0..n {
                        let src =
                            &dout.data()[(ni * channels + c_off) * plane..][..tc * plane];
                        dx.data_mut()[ni * tc * plane..][..tc * plane].copy_from_slice(src);
                    }
                    push(wire, dx, &mut wire_grads);
                    c_off += tc;
                }
            }
            LayerKind::BilinearUpsample { factor } => {
                let x = act_of(&node.inputs[0])?;
                let dx = bilinear_up_backward(x.shape(), *factor, &dout);
                push(&node.inputs[0], dx, &mut wire_grads);
            }
            LayerKind::GlobalAvgPool => {
                let x = act_of(&node.inputs[0])?;
                let (n, c, h, w) = dims4(x);
                let inv = 1.0 / (h * w) as f32;
                let mut dx = Tensor::zeros(x.shape());
                for ni in 0..n {
                    for ci in 0..c {
                        let d = dout.at2(ni, ci) * inv;
                        for v in
                            dx.data_mut()[(ni * c + ci) * h * w..][..h * w].iter_mut()
                        {
                            *v = d;
                        }
                    }
                }
                push(&node.inputs[0], dx, &mut wire_grads);
            }
            LayerKind::ScalarFusion { count } => {
                let weights = &net.param(&node.id, "weights").unwrap().tensor;
                let mut dweights = vec![0.0f64; *count];
                for (k, wire) in node.inputs.iter().enumerate() {
                    let xk = act_of(wire)?;
                    dweights[k] = xk
                        .data()
                        .iter()
                        .zip(dout.data())
                        .map(|(&a, &b)| a as f64 * b as f64)
                        .sum();
                    push(wire, dout.scale(weights.data()[k]), &mut wire_grads);
                }
                tape.grads.insert(
                    (node.id.clone(), "weights".into()),
                    Tensor::from_vec(&[*count], dweights.iter().map(|&v| v as f32).collect()),
                );
            }
        }
    }
    Ok(tape)
}
