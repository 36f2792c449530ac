use super::graph::{expected_params, ActKind, LayerKind, LayerNode, NetworkGraph, ParamTensor};
use crate::numerics::{kaiming_uniform, RngStream};
use crate::numerics::Tensor;

/// Appends a node and its default-initialized parameters.
///
/// Weights start Kaiming-uniform over the receptive fan-in, biases and
/// BatchNorm shifts at zero, BatchNorm scales and running variances at one,
/// fusion scalars at one.
fn add_node(net: &mut NetworkGraph, rng: &RngStream, id: &str, kind: LayerKind, inputs: &[&str]) {
    assert!(
        !id.contains([' ', ',', '=']),
        "node ids must be token-safe: {id}"
    );
    let mut node_rng = rng.derive(net.nodes.len() as u64);
    for (name, shape) in expected_params(&kind) {
        let numel: usize = shape.iter().product();
        let tensor = match (name.as_str(), &kind) {
            ("weight", LayerKind::Conv2d { kh, kw, groups, in_channels, .. }) => {
                kaiming_uniform(in_channels / groups * kh * kw, numel, &mut node_rng)
                    .reshape(&shape)
            }
            ("weight", LayerKind::PointwiseConv { in_channels, .. }) => {
                kaiming_uniform(*in_channels, numel, &mut node_rng).reshape(&shape)
            }
            ("weight", LayerKind::Linear { in_features, .. }) => {
                kaiming_uniform(*in_features, numel, &mut node_rng).reshape(&shape)
            }
            ("scale", _) | ("running_var", _) | ("weights", _) => Tensor::full(&shape, 1.0),
            _ => Tensor::zeros(&shape),
        };
        let spatial =
            matches!(kind, LayerKind::Conv2d { kh, kw, .. } if kh * kw > 1) && name == "weight";
        let buffer = name == "running_mean" || name == "running_var";
        net.params.push(ParamTensor {
            owner: id.to_string(),
            name,
            tensor,
            fixed: false,
            spatial,
            buffer,
        });
    }
    net.nodes.push(LayerNode {
        id: id.to_string(),
        kind,
        inputs: inputs.iter().map(|s| s.to_string()).collect(),
    });
}

/// Depthwise-separable bottleneck: pointwise expand (x`expansion`), CELU,
/// BatchNorm, 3x3 depthwise convolution (carrying the stride), CELU,
/// BatchNorm, pointwise projection with no activation and no norm after it.
/// Returns the output wire id.
fn bottleneck(
    net: &mut NetworkGraph,
    rng: &RngStream,
    prefix: &str,
    input: &str,
    c_in: usize,
    c_out: usize,
    expansion: usize,
    stride: usize,
) -> String {
    let mid = c_in * expansion;
    let expand = format!("{prefix}_expand");
    add_node(
        net,
        rng,
        &expand,
        LayerKind::PointwiseConv {
            in_channels: c_in,
            out_channels: mid,
            bias: true,
        },
        &[input],
    );
    let act1 = format!("{prefix}_expand_act");
    add_node(net, rng, &act1, LayerKind::Activation { act: ActKind::Celu }, &[&expand]);
    let bn1 = format!("{prefix}_expand_bn");
    add_node(net, rng, &bn1, LayerKind::BatchNorm { channels: mid }, &[&act1]);
    let dw = format!("{prefix}_dw");
    add_node(
        net,
        rng,
        &dw,
        LayerKind::Conv2d {
            kh: 3,
            kw: 3,
            stride,
            padding: 1,
            groups: mid,
            in_channels: mid,
            out_channels: mid,
            bias: false,
        },
        &[&bn1],
    );
    let act2 = format!("{prefix}_dw_act");
    add_node(net, rng, &act2, LayerKind::Activation { act: ActKind::Celu }, &[&dw]);
    let bn2 = format!("{prefix}_dw_bn");
    add_node(net, rng, &bn2, LayerKind::BatchNorm { channels: mid }, &[&act2]);
    let project = format!("{prefix}_project");
    add_node(
        net,
        rng,
        &project,
        LayerKind::PointwiseConv {
            in_channels: mid,
            out_channels: c_out,
            bias: true,
        },
        &[&bn2],
    );
    project
}

/// Five-level encoder-decoder of depthwise-separable bottlenecks with
/// bilinear upsampling and two-scalar weighted fusion in the decoder, and a
/// final 3x3 convolution mapping the level-0 width to one output channel.
/// Input is a single-channel image; all spatial convolutions are 3x3 with no
/// bias.
pub fn build_unetd(widths: [usize; 5], expansion: usize, seed: u64) -> NetworkGraph {
    let rng = RngStream::new(seed);
    let mut net = NetworkGraph::new(vec![("image".into(), 1)], vec!["head".into()]);
    net.comments = vec![
        "unetd: celu-then-batchnorm between convolutions; projection pointwise has no activation and no norm".into(),
        "downsampling via stride-2 depthwise convolution at encoder levels 1..4".into(),
        "decoder fusion = two-scalar weighted sum applied after bilinear upsample".into(),
    ];

    // encoder
    let mut skips: Vec<String> = Vec::new();
    let mut wire = "image".to_string();
    let mut c_prev = 1;
    for (level, &width) in widths.iter().enumerate() {
        let stride = if level == 0 { 1 } else { 2 };
        wire = bottleneck(
            &mut net,
            &rng,
            &format!("enc{level}"),
            &wire,
            c_prev,
            width,
            expansion,
            stride,
        );
        skips.push(wire.clone());
        c_prev = width;
    }

    // decoder
    for level in (1..widths.len()).rev() {
        let c_in = widths[level];
        let c_out = widths[level - 1];
        let dec = bottleneck(
            &mut net,
            &rng,
            &format!("dec{level}"),
            &wire,
            c_in,
            c_out,
            expansion,
            1,
        );
        let up = format!("up{level}");
        add_node(
            &mut net,
            &rng,
            &up,
            LayerKind::BilinearUpsample { factor: 2 },
            &[&dec],
        );
        let fuse = format!("fuse{}", level - 1);
        add_node(
            &mut net,
            &rng,
            &fuse,
            LayerKind::ScalarFusion { count: 2 },
            &[&up, &skips[level - 1]],
        );
        wire = fuse;
    }

    add_node(
        &mut net,
        &rng,
        "head",
        LayerKind::Conv2d {
            kh: 3,
            kw: 3,
            stride: 1,
            padding: 1,
            groups: 1,
            in_channels: widths[0],
            out_channels: 1,
            bias: false,
        },
        &[&wire],
    );
    net
}

/// Residual bottleneck stack: each stage is pointwise reduce, 3x3
/// convolution, pointwise restore, joined to the stage input by an add.
/// Head is global average pooling into a 5-way linear classifier.
pub fn build_tiny_resnet(stages: usize, width: usize, seed: u64) -> NetworkGraph {
    assert!(stages >= 1 && width >= 2);
    let rng = RngStream::new(seed);
    let mut net = NetworkGraph::new(vec![("image".into(), 1)], vec!["head".into()]);
    add_node(
        &mut net,
        &rng,
        "stem",
        LayerKind::Conv2d {
            kh: 3,
            kw: 3,
            stride: 1,
            padding: 1,
            groups: 1,
            in_channels: 1,
            out_channels: width,
            bias: false,
        },
        &["image"],
    );
    add_node(&mut net, &rng, "stem_act", LayerKind::Activation { act: ActKind::Relu }, &["stem"]);
    add_node(&mut net, &rng, "stem_bn", LayerKind::BatchNorm { channels: width }, &["stem_act"]);
    let mut wire = "stem_bn".to_string();
    let narrow = (width / 2).max(1);
    for s in 0..stages {
        let pw1 = format!("res{s}_pw1");
        add_node(
            &mut net,
            &rng,
            &pw1,
            LayerKind::PointwiseConv {
                in_channels: width,
                out_channels: narrow,
                bias: true,
            },
            &[&wire],
        );
        let a1 = format!("res{s}_pw1_act");
        add_node(&mut net, &rng, &a1, LayerKind::Activation { act: ActKind::Relu }, &[&pw1]);
        let b1 = format!("res{s}_pw1_bn");
        add_node(&mut net, &rng, &b1, LayerKind::BatchNorm { channels: narrow }, &[&a1]);
        let conv = format!("res{s}_conv");
        add_node(
            &mut net,
            &rng,
            &conv,
            LayerKind::Conv2d {
                kh: 3,
                kw: 3,
                stride: 1,
                padding: 1,
                groups: 1,
                in_channels: narrow,
                out_channels: narrow,
                bias: false,
            },
            &[&b1],
        );
        let a2 = format!("res{s}_conv_act");
        add_node(&mut net, &rng, &a2, LayerKind::Activation { act: ActKind::Relu }, &[&conv]);
        let b2 = format!("res{s}_conv_bn");
        add_node(&mut net, &rng, &b2, LayerKind::BatchNorm { channels: narrow }, &[&a2]);
        let pw2 = format!("res{s}_pw2");
        add_node(
            &mut net,
            &rng,
            &pw2,
            LayerKind::PointwiseConv {
                in_channels: narrow,
                out_channels: width,
                bias: true,
            },
            &[&b2],
        );
        let add = format!("res{s}_add");
        add_node(&mut net, &rng, &add, LayerKind::Add, &[&wire, &pw2]);
        let act = format!("res{s}_act");
        add_node(&mut net, &rng, &act, LayerKind::Activation { act: ActKind::Relu }, &[&add]);
        wire = act;
    }
    add_node(&mut net, &rng, "gap", LayerKind::GlobalAvgPool, &[&wire]);
    add_node(
        &mut net,
        &rng,
        "head",
        LayerKind::Linear {
            in_features: width,
            out_features: 5,
            bias: true,
        },
        &["gap"],
    );
    net
}

/// Dense concatenation stack: each block computes pointwise then 3x3
/// convolution producing `growth` channels, concatenated onto its input.
/// Head is global average pooling into a 5-way linear classifier.
pub fn build_tiny_densenet(blocks: usize, growth: usize, seed: u64) -> NetworkGraph {
    assert!(blocks >= 1 && growth >= 1);
    let rng = RngStream::new(seed);
    let mut net = NetworkGraph::new(vec![("image".into(), 1)], vec!["head".into()]);
    let init = 2 * growth;
    add_node(
        &mut net,
        &rng,
        "stem",
        LayerKind::Conv2d {
            kh: 3,
            kw: 3,
            stride: 1,
            padding: 1,
            groups: 1,
            in_channels: 1,
            out_channels: init,
            bias: false,
        },
        &["image"],
    );
    add_node(&mut net, &rng, "stem_act", LayerKind::Activation { act: ActKind::Relu }, &["stem"]);
    add_node(&mut net, &rng, "stem_bn", LayerKind::BatchNorm { channels: init }, &["stem_act"]);
    let mut wire = "stem_bn".to_string();
    let mut channels = init;
    for b in 0..blocks {
        let pw = format!("dense{b}_pw");
        add_node(
            &mut net,
            &rng,
            &pw,
            LayerKind::PointwiseConv {
                in_channels: channels,
                out_channels: init,
                bias: true,
            },
            &[&wire],
        );
        let a = format!("dense{b}_pw_act");
        add_node(&mut net, &rng, &a, LayerKind::Activation { act: ActKind::Relu }, &[&pw]);
        let bn = format!("dense{b}_pw_bn");
        add_node(&mut net, &rng, &bn, LayerKind::BatchNorm { channels: init }, &[&a]);
        let conv = format!("dense{b}_conv");
        add_node(
            &mut net,
            &rng,
            &conv,
            LayerKind::Conv2d {
                kh: 3,
                kw: 3,
                stride: 1,
                padding: 1,
                groups: 1,
                in_channels: init,
                out_channels: growth,
                bias: false,
            },
            &[&bn],
        );
        let cat = format!("dense{b}_cat");
        add_node(&mut net, &rng, &cat, LayerKind::Concat, &[&wire, &conv]);
        wire = cat;
        channels += growth;
    }
    add_node(&mut net, &rng, "gap", LayerKind::GlobalAvgPool, &[&wire]);
    add_node(
        &mut net,
        &rng,
        "head",
        LayerKind::Linear {
            in_features: channels,
            out_features: 5,
            bias: true,
        },
        &["gap"],
    );
    net
}
