//! Every layer kind and both losses must agree with central finite
//! differences. The numeric side of the check only runs forward passes.

use steernet::engine::gradcheck::finite_difference_check;
use steernet::engine::{Batch, FocalCfg, Mode, TaskKind, TrainCfg};
use steernet::netgraph::{ActKind, LayerKind, LayerNode, NetworkGraph, ParamTensor};
use steernet::numerics::{RngStream, Tensor};

const PROBES: usize = 64;
const TOL: f64 = 1e-3;

struct NetBuilder {
    net: NetworkGraph,
    rng: RngStream,
}

impl NetBuilder {
    fn new(in_ch: usize, seed: u64) -> Self {
        NetBuilder {
            net: NetworkGraph::new(vec![("x".into(), in_ch)], vec![]),
            rng: RngStream::new(seed),
        }
    }

    fn node(mut self, id: &str, kind: LayerKind, inputs: &[&str]) -> Self {
        for (name, shape) in param_roster(&kind) {
            let mut t = Tensor::zeros(&shape);
            match name.as_str() {
                "scale" | "weights" => t.data_mut().fill(1.0),
                "running_var" => t.data_mut().fill(1.3),
                "running_mean" => {
                    for v in t.data_mut() {
                        *v = self.rng.uniform(-0.3, 0.3);
                    }
                }
                _ => {
                    for v in t.data_mut() {
                        *v = self.rng.uniform(-0.6, 0.6);
                    }
                }
            }
            let spatial =
                name == "weight" && matches!(kind, LayerKind::Conv2d { kh, kw, .. } if kh * kw > 1);
            let buffer = name.starts_with("running");
            self.net.params.push(ParamTensor {
                owner: id.into(),
                name,
                tensor: t,
                fixed: false,
                spatial,
                buffer,
            });
        }
        self.net.nodes.push(LayerNode {
            id: id.into(),
            kind,
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
        });
        self
    }

    fn output(mut self, id: &str) -> NetworkGraph {
        self.net.outputs = vec![id.into()];
        self.net
    }
}

fn param_roster(kind: &LayerKind) -> Vec<(String, Vec<usize>)> {
    match kind {
        LayerKind::Conv2d {
            kh,
            kw,
            groups,
            in_channels,
            out_channels,
            bias,
            ..
        } => {
            let mut v = vec![(
                "weight".to_string(),
                vec![*out_channels, in_channels / groups, *kh, *kw],
            )];
            if *bias {
                v.push(("bias".to_string(), vec![*out_channels]));
            }
            v
        }
        LayerKind::PointwiseConv {
            in_channels,
            out_channels,
            bias,
        } => {
            let mut v = vec![("weight".to_string(), vec![*out_channels, *in_channels, 1, 1])];
            if *bias {
                v.push(("bias".to_string(), vec![*out_channels]));
            }
            v
        }
        LayerKind::BatchNorm { channels } => vec![
            ("scale".to_string(), vec![*channels]),
            ("shift".to_string(), vec![*channels]),
            ("running_mean".to_string(), vec![*channels]),
            ("running_var".to_string(), vec![*channels]),
        ],
        LayerKind::Linear {
            in_features,
            out_features,
            bias,
        } => {
            let mut v = vec![("weight".to_string(), vec![*out_features, *in_features])];
            if *bias {
                v.push(("bias".to_string(), vec![*out_features]));
            }
            v
        }
        LayerKind::ScalarFusion { count } => vec![("weights".to_string(), vec![*count])],
        _ => vec![],
    }
}

fn seg_batch(shape: &[usize], seed: u64) -> Batch {
    let mut rng = RngStream::new(seed);
    let mut inputs = Tensor::zeros(shape);
    for v in inputs.data_mut() {
        *v = rng.uniform(-1.0, 1.0);
    }
    Batch {
        inputs,
        targets: Tensor::zeros(&[0]), // replaced per test
        mask: None,
    }
}

fn seg_targets(shape: &[usize], seed: u64) -> Tensor {
    let mut rng = RngStream::new(seed);
    let mut t = Tensor::zeros(shape);
    for v in t.data_mut() {
        *v = rng.pick(2) as f32;
    }
    t
}

fn check_seg(net: NetworkGraph, in_shape: &[usize], out_shape: &[usize], mode: Mode, seed: u64) {
    let mut batch = seg_batch(in_shape, seed);
    batch.targets = seg_targets(out_shape, seed ^ 0xA5);
    let cfg = TrainCfg::segmentation(0.0, 0, 0);
    let report = finite_difference_check(&net, &batch, &cfg, mode, PROBES, seed ^ 0x5A).unwrap();
    assert!(
        report.max_rel_err < TOL,
        "max rel err {} at {:?} over {} probes",
        report.max_rel_err,
        report.worst,
        report.probes
    );
}

fn conv(in_ch: usize, out_ch: usize, k: usize, stride: usize, pad: usize, groups: usize, bias: bool) -> LayerKind {
    LayerKind::Conv2d {
        kh: k,
        kw: k,
        stride,
        padding: pad,
        groups,
        in_channels: in_ch,
        out_channels: out_ch,
        bias,
    }
}

#[test]
fn conv2d_dense_passes_fd() {
    let net = NetBuilder::new(2, 1)
        .node("c", conv(2, 3, 3, 1, 1, 1, true), &["x"])
        .output("c");
    check_seg(net, &[1, 2, 6, 6], &[1, 3, 6, 6], Mode::Eval, 11);
}

#[test]
fn conv2d_strided_passes_fd() {
    let net = NetBuilder::new(2, 2)
        .node("c", conv(2, 2, 3, 2, 0, 1, false), &["x"])
        .output("c");
    check_seg(net, &[1, 2, 7, 7], &[1, 2, 3, 3], Mode::Eval, 12);
}

#[test]
fn conv2d_depthwise_passes_fd() {
    let net = NetBuilder::new(4, 3)
        .node("c", conv(4, 4, 3, 1, 1, 4, false), &["x"])
        .output("c");
    check_seg(net, &[1, 4, 5, 5], &[1, 4, 5, 5], Mode::Eval, 13);
}

#[test]
fn conv2d_grouped_passes_fd() {
    let net = NetBuilder::new(4, 4)
        .node("c", conv(4, 6, 3, 1, 1, 2, true), &["x"])
        .output("c");
    check_seg(net, &[1, 4, 5, 5], &[1, 6, 5, 5], Mode::Eval, 14);
}

#[test]
fn pointwise_passes_fd() {
    let net = NetBuilder::new(3, 5)
        .node(
            "p",
            LayerKind::PointwiseConv {
                in_channels: 3,
                out_channels: 2,
                bias: true,
            },
            &["x"],
        )
        .output("p");
    check_seg(net, &[2, 3, 4, 4], &[2, 2, 4, 4], Mode::Eval, 15);
}

#[test]
fn batchnorm_train_mode_passes_fd() {
    let net = NetBuilder::new(3, 6)
        .node("c", conv(3, 3, 3, 1, 1, 1, false), &["x"])
        .node("bn", LayerKind::BatchNorm { channels: 3 }, &["c"])
        .output("bn");
    check_seg(net, &[2, 3, 4, 4], &[2, 3, 4, 4], Mode::Train, 16);
}

#[test]
fn batchnorm_eval_mode_passes_fd() {
    let net = NetBuilder::new(3, 7)
        .node("c", conv(3, 3, 3, 1, 1, 1, false), &["x"])
        .node("bn", LayerKind::BatchNorm { channels: 3 }, &["c"])
        .output("bn");
    check_seg(net, &[2, 3, 4, 4], &[2, 3, 4, 4], Mode::Eval, 17);
}

#[test]
fn activations_pass_fd() {
    // Central differences across a ReLU/CELU kink measure a secant, not the
    // derivative, so this net keeps every pre-activation at least 0.125 away
    // from zero: inputs are +-1, weights are multiples of 0.25, and the bias
    // adds 0.125. A 1e-2 probe step can then never cross the kink.
    for (i, act) in [ActKind::Celu, ActKind::Relu, ActKind::Sigmoid]
        .into_iter()
        .enumerate()
    {
        let mut net = NetBuilder::new(2, 8 + i as u64)
            .node("c", conv(2, 2, 3, 1, 1, 1, true), &["x"])
            .node("a", LayerKind::Activation { act }, &["c"])
            .output("a");
        let mut qrng = RngStream::new(60 + i as u64);
        for p in &mut net.params {
            if p.name == "weight" {
                for v in p.tensor.data_mut() {
                    *v = (qrng.pick(7) as f32 - 3.0) * 0.25;
                }
            } else {
                for v in p.tensor.data_mut() {
                    *v = 0.125;
                }
            }
        }
        let mut batch = Batch {
            inputs: Tensor::zeros(&[1, 2, 5, 5]),
            targets: seg_targets(&[1, 2, 5, 5], 70 + i as u64),
            mask: None,
        };
        let mut irng = RngStream::new(80 + i as u64);
        for v in batch.inputs.data_mut() {
            *v = (irng.pick(2) as f32) * 2.0 - 1.0;
        }
        let cfg = TrainCfg::segmentation(0.0, 0, 0);
        let report =
            finite_difference_check(&net, &batch, &cfg, Mode::Eval, PROBES, 90 + i as u64)
                .unwrap();
        assert!(
            report.max_rel_err < TOL,
            "{act:?}: max rel err {} at {:?}",
            report.max_rel_err,
            report.worst
        );
    }
}

#[test]
fn bilinear_upsample_passes_fd() {
    let net = NetBuilder::new(2, 9)
        .node(
            "p",
            LayerKind::PointwiseConv {
                in_channels: 2,
                out_channels: 2,
                bias: false,
            },
            &["x"],
        )
        .node("u", LayerKind::BilinearUpsample { factor: 2 }, &["p"])
        .output("u");
    check_seg(net, &[1, 2, 3, 3], &[1, 2, 6, 6], Mode::Eval, 23);
}

#[test]
fn add_join_passes_fd() {
    let net = NetBuilder::new(2, 10)
        .node(
            "a",
            LayerKind::PointwiseConv {
                in_channels: 2,
                out_channels: 3,
                bias: true,
            },
            &["x"],
        )
        .node(
            "b",
            LayerKind::PointwiseConv {
                in_channels: 2,
                out_channels: 3,
                bias: false,
            },
            &["x"],
        )
        .node("s", LayerKind::Add, &["a", "b"])
        .output("s");
    check_seg(net, &[1, 2, 4, 4], &[1, 3, 4, 4], Mode::Eval, 24);
}

#[test]
fn concat_join_passes_fd() {
    let net = NetBuilder::new(2, 11)
        .node(
            "a",
            LayerKind::PointwiseConv {
                in_channels: 2,
                out_channels: 2,
                bias: true,
            },
            &["x"],
        )
        .node(
            "b",
            LayerKind::PointwiseConv {
                in_channels: 2,
                out_channels: 3,
                bias: true,
            },
            &["x"],
        )
        .node("cat", LayerKind::Concat, &["a", "b"])
        .node(
            "mix",
            LayerKind::PointwiseConv {
                in_channels: 5,
                out_channels: 1,
                bias: false,
            },
            &["cat"],
        )
        .output("mix");
    check_seg(net, &[1, 2, 4, 4], &[1, 1, 4, 4], Mode::Eval, 25);
}

#[test]
fn scalar_fusion_passes_fd() {
    let net = NetBuilder::new(2, 12)
        .node(
            "a",
            LayerKind::PointwiseConv {
                in_channels: 2,
                out_channels: 3,
                bias: true,
            },
            &["x"],
        )
        .node(
            "b",
            LayerKind::PointwiseConv {
                in_channels: 2,
                out_channels: 3,
                bias: false,
            },
            &["x"],
        )
        .node("f", LayerKind::ScalarFusion { count: 2 }, &["a", "b"])
        .output("f");
    check_seg(net, &[1, 2, 4, 4], &[1, 3, 4, 4], Mode::Eval, 26);
}

#[test]
fn gap_linear_and_focal_loss_pass_fd() {
    let net = NetBuilder::new(3, 13)
        .node("c", conv(3, 4, 3, 1, 1, 1, false), &["x"])
        .node("g", LayerKind::GlobalAvgPool, &["c"])
        .node(
            "head",
            LayerKind::Linear {
                in_features: 4,
                out_features: 5,
                bias: true,
            },
            &["g"],
        )
        .output("head");
    let mut batch = seg_batch(&[3, 3, 6, 6], 30);
    batch.targets = seg_targets(&[3, 5], 31);
    // mask one label out to exercise the bitmask path
    let mut mask = Tensor::zeros(&[3, 5]);
    mask.data_mut().fill(1.0);
    mask.data_mut()[2] = 0.0;
    batch.mask = Some(mask);
    let cfg = TrainCfg::multilabel(
        0.0,
        0,
        0,
        vec![(30.0, 70.0), (50.0, 50.0), (20.0, 5.0), (90.0, 10.0), (40.0, 60.0)],
    );
    let report = finite_difference_check(&net, &batch, &cfg, Mode::Eval, PROBES, 32).unwrap();
    assert!(
        report.max_rel_err < TOL,
        "max rel err {} at {:?}",
        report.max_rel_err,
        report.worst
    );
}

#[test]
fn focal_gamma_zero_passes_fd() {
    let net = NetBuilder::new(2, 14)
        .node("g", LayerKind::GlobalAvgPool, &["x"])
        .node(
            "head",
            LayerKind::Linear {
                in_features: 2,
                out_features: 3,
                bias: true,
            },
            &["g"],
        )
        .output("head");
    let mut batch = seg_batch(&[2, 2, 4, 4], 40);
    batch.targets = seg_targets(&[2, 3], 41);
    let mut cfg = TrainCfg::multilabel(0.0, 0, 0, vec![(10.0, 30.0); 3]);
    cfg.focal = FocalCfg {
        gamma: 0.0,
        balance: true,
    };
    assert_eq!(cfg.task, TaskKind::MultiLabel);
    let report = finite_difference_check(&net, &batch, &cfg, Mode::Eval, PROBES, 42).unwrap();
    assert!(report.max_rel_err < TOL, "max rel err {}", report.max_rel_err);
}

#[test]
fn whole_reference_net_passes_fd_spot_check() {
    // a few probes through the full U-NetD to catch cross-layer wiring bugs.
    // thirty-plus f32 layers put ~1e-8 absolute noise on the loss, which the
    // division by 2*eps turns into percent-level error on the smallest
    // gradients; 5e-2 stays above that floor while still catching any wrong
    // sign, missing factor, or misrouted wire (those show up at O(1)).
    let net = steernet::netgraph::build_unetd([2, 4, 8, 16, 32], 4, 3);
    let mut batch = seg_batch(&[1, 1, 16, 16], 50);
    batch.targets = seg_targets(&[1, 1, 16, 16], 51);
    let cfg = TrainCfg::segmentation(0.0, 0, 0);
    let report = finite_difference_check(&net, &batch, &cfg, Mode::Train, 2, 52).unwrap();
    assert!(
        report.max_rel_err < 5e-2,
        "max rel err {} at {:?}",
        report.max_rel_err,
        report.worst
    );
}
