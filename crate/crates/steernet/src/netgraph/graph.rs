use crate::filterbank::{
    dct2_filters, ghaar_filters, guided_steer_filters, ones_filters, psine_filters,
    unchanged_random, Basis, FilterError, FilterSpec, GhaarStyle, GuidedSteerCfg, Method,
};
use crate::numerics::{RngStream, Tensor};
use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActKind {
    Celu,
    Relu,
    Sigmoid,
}

impl ActKind {
    pub fn name(&self) -> &'static str {
        match self {
            ActKind::Celu => "celu",
            ActKind::Relu => "relu",
            ActKind::Sigmoid => "sigmoid",
        }
    }
}

/// Layer kinds. `PointwiseConv` is a 1x1 convolution kept distinct from
/// `Conv2d` because it is not a spatial convolution and is never fixed.
#[derive(Debug, Clone, PartialEq)]
pub enum LayerKind {
    Conv2d {
        kh: usize,
        kw: usize,
        stride: usize,
        padding: usize,
        groups: usize,
        in_channels: usize,
        out_channels: usize,
        bias: bool,
    },
    PointwiseConv {
        in_channels: usize,
        out_channels: usize,
        bias: bool,
    },
    BatchNorm {
        channels: usize,
    },
    Linear {
        in_features: usize,
        out_features: usize,
        bias: bool,
    },
    Activation {
        act: ActKind,
    },
    Add,
    Concat,
    BilinearUpsample {
        factor: usize,
    },
    GlobalAvgPool,
    ScalarFusion {
        count: usize,
    },
}

#[derive(Debug, Clone)]
pub struct LayerNode {
    pub id: String,
    pub kind: LayerKind,
    /// Ordered producer list: node ids or graph input names.
    pub inputs: Vec<String>,
}

/// Named parameter tensor attached to a node.
///
/// `fixed` tensors are never touched by the optimizer; `spatial` marks
/// convolution kernels with spatial extent (`kh * kw > 1`); `buffer` marks
/// running statistics that are updated by forward passes, not by gradients.
#[derive(Debug, Clone)]
pub struct ParamTensor {
    pub owner: String,
    pub name: String,
    pub tensor: Tensor,
    pub fixed: bool,
    pub spatial: bool,
    pub buffer: bool,
}

#[derive(Debug, Clone)]
pub struct NetworkGraph {
    pub nodes: Vec<LayerNode>,
    /// Graph inputs as (name, channels).
    pub inputs: Vec<(String, usize)>,
    pub outputs: Vec<String>,
    pub params: Vec<ParamTensor>,
    /// Free-form notes serialized as descriptor comments.
    pub comments: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GraphError {
    Cycle { node: String },
    DuplicateId { id: String },
    UnknownInput { node: String, input: String },
    Unreachable { node: String },
    ChannelMismatch { node: String, detail: String },
    BadAttr { node: String, detail: String },
    BadParam { owner: String, name: String, detail: String },
    MissingParam { owner: String, name: String },
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Cycle { node } => write!(f, "cycle through node '{node}'"),
            Self::DuplicateId { id } => write!(f, "duplicate node id '{id}'"),
            Self::UnknownInput { node, input } => {
                write!(f, "node '{node}' reads unknown input '{input}'")
            }
            Self::Unreachable { node } => write!(f, "node '{node}' unreachable from inputs"),
            Self::ChannelMismatch { node, detail } => {
                write!(f, "channel mismatch at '{node}': {detail}")
            }
            Self::BadAttr { node, detail } => write!(f, "bad attribute at '{node}': {detail}"),
            Self::BadParam {
                owner,
                name,
                detail,
            } => write!(f, "bad param {owner}.{name}: {detail}"),
            Self::MissingParam { owner, name } => write!(f, "missing param {owner}.{name}"),
        }
    }
}

impl std::error::Error for GraphError {}

impl NetworkGraph {
    pub fn new(inputs: Vec<(String, usize)>, outputs: Vec<String>) -> Self {
        NetworkGraph {
            nodes: Vec::new(),
            inputs,
            outputs,
            params: Vec::new(),
            comments: Vec::new(),
        }
    }

    pub fn node(&self, id: &str) -> Option<&LayerNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn param(&self, owner: &str, name: &str) -> Option<&ParamTensor> {
        self.params
            .iter()
            .find(|p| p.owner == owner && p.name == name)
    }

    pub fn param_mut(&mut self, owner: &str, name: &str) -> Option<&mut ParamTensor> {
        self.params
            .iter_mut()
            .find(|p| p.owner == owner && p.name == name)
    }

    /// Directed edge list derived from per-node input lists.
    pub fn edges(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for n in &self.nodes {
            for i in &n.inputs {
                out.push((i.clone(), n.id.clone()));
            }
        }
        out
    }

    /// Consumers of a wire (graph input name or node id).
    pub fn consumers(&self, wire: &str) -> Vec<&LayerNode> {
        self.nodes
            .iter()
            .filter(|n| n.inputs.iter().any(|i| i == wire))
            .collect()
    }

    fn is_graph_input(&self, name: &str) -> bool {
        self.inputs.iter().any(|(n, _)| n == name)
    }

    /// Kahn topological order over node indices.
    pub fn topo_order(&self) -> Result<Vec<usize>, GraphError> {
        let index: HashMap<&str, usize> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.as_str(), i))
            .collect();
        let mut indegree = vec![0usize; self.nodes.len()];
        let mut succ: Vec<Vec<usize>> = vec![Vec::new(); self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            for input in &n.inputs {
                if let Some(&j) = index.get(input.as_str()) {
                    indegree[i] += 1;
                    succ[j].push(i);
                } else if !self.is_graph_input(input) {
                    return Err(GraphError::UnknownInput {
                        node: n.id.clone(),
                        input: input.clone(),
                    });
                }
            }
        }
        let mut queue: VecDeque<usize> = (0..self.nodes.len()).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(i) = queue.pop_front() {
            order.push(i);
            for &j in &succ[i] {
                indegree[j] -= 1;
                if indegree[j] == 0 {
                    queue.push_back(j);
                }
            }
        }
        if order.len() != self.nodes.len() {
            let stuck = (0..self.nodes.len())
                .find(|&i| indegree[i] > 0)
                .map(|i| self.nodes[i].id.clone())
                .unwrap_or_default();
            return Err(GraphError::Cycle { node: stuck });
        }
        Ok(order)
    }

    /// Channel count of every wire, inferred from graph inputs forward.
    pub fn wire_channels(&self) -> Result<HashMap<String, usize>, GraphError> {
        let order = self.topo_order()?;
        let mut ch: HashMap<String, usize> = self
            .inputs
            .iter()
            .map(|(n, c)| (n.clone(), *c))
            .collect();
        for &i in &order {
            let node = &self.nodes[i];
            let ins: Vec<usize> = node
                .inputs
                .iter()
                .map(|w| {
                    ch.get(w).copied().ok_or_else(|| GraphError::UnknownInput {
                        node: node.id.clone(),
                        input: w.clone(),
                    })
                })
                .collect::<Result<_, _>>()?;
            let single = |what: &str| -> Result<usize, GraphError> {
                if ins.len() != 1 {
                    Err(GraphError::BadAttr {
                        node: node.id.clone(),
                        detail: format!("{what} expects exactly one input, got {}", ins.len()),
                    })
                } else {
                    Ok(ins[0])
                }
            };
            let out = match &node.kind {
                LayerKind::Conv2d {
                    groups,
                    in_channels,
                    out_channels,
                    kh,
                    kw,
                    stride,
                    ..
                } => {
                    let c = single("conv2d")?;
                    if c != *in_channels {
                        return Err(GraphError::ChannelMismatch {
                            node: node.id.clone(),
                            detail: format!("declared in={in_channels}, incoming {c}"),
                        });
                    }
                    if *groups == 0 || in_channels % groups != 0 || out_channels % groups != 0 {
                        return Err(GraphError::BadAttr {
                            node: node.id.clone(),
                            detail: format!(
                                "groups {groups} must divide in={in_channels} out={out_channels}"
                            ),
                        });
                    }
                    if *kh == 0 || *kw == 0 || *stride == 0 {
                        return Err(GraphError::BadAttr {
                            node: node.id.clone(),
                            detail: "kernel and stride must be positive".into(),
                        });
                    }
                    *out_channels
                }
                LayerKind::PointwiseConv {
                    in_channels,
                    out_channels,
                    ..
                } => {
                    let c = single("pointwise")?;
                    if c != *in_channels {
                        return Err(GraphError::ChannelMismatch {
                            node: node.id.clone(),
                            detail: format!("declared in={in_channels}, incoming {c}"),
                        });
                    }
                    *out_channels
                }
                LayerKind::BatchNorm { channels } => {
                    let c = single("batchnorm")?;
                    if c != *channels {
                        return Err(GraphError::ChannelMismatch {
                            node: node.id.clone(),
                            detail: format!("declared c={channels}, incoming {c}"),
                        });
                    }
                    c
                }
                LayerKind::Linear {
                    in_features,
                    out_features,
                    ..
                } => {
                    let c = single("linear")?;
                    if c != *in_features {
                        return Err(GraphError::ChannelMismatch {
                            node: node.id.clone(),
                            detail: format!("declared in={in_features}, incoming {c}"),
                        });
                    }
                    *out_features
                }
                LayerKind::Activation { .. } => single("activation")?,
                LayerKind::BilinearUpsample { factor } => {
                    if *factor < 1 {
                        return Err(GraphError::BadAttr {
                            node: node.id.clone(),
                            detail: "factor must be >= 1".into(),
                        });
                    }
                    single("upsample")?
                }
                LayerKind::GlobalAvgPool => single("gap")?,
                LayerKind::Add => {
                    if ins.len() < 2 || ins.iter().any(|&c| c != ins[0]) {
                        return Err(GraphError::ChannelMismatch {
                            node: node.id.clone(),
                            detail: format!("add inputs must agree, got {ins:?}"),
                        });
                    }
                    ins[0]
                }
                LayerKind::ScalarFusion { count } => {
                    if ins.len() != *count {
                        return Err(GraphError::BadAttr {
                            node: node.id.clone(),
                            detail: format!("fusion count={count} but {} inputs", ins.len()),
                        });
                    }
                    if ins.iter().any(|&c| c != ins[0]) {
                        return Err(GraphError::ChannelMismatch {
                            node: node.id.clone(),
                            detail: format!("fusion inputs must agree, got {ins:?}"),
                        });
                    }
                    ins[0]
                }
                LayerKind::Concat => {
                    if ins.is_empty() {
                        return Err(GraphError::BadAttr {
                            node: node.id.clone(),
                            detail: "concat needs inputs".into(),
                        });
                    }
                    ins.iter().sum()
                }
            };
            ch.insert(node.id.clone(), out);
        }
        Ok(ch)
    }

    /// Structural validation: unique ids, acyclic, reachable nodes,
    /// consistent channels, parameter shapes matching attributes.
    pub fn validate(&self) -> Result<(), GraphError> {
        let mut seen = HashSet::new();
        for n in &self.nodes {
            if !seen.insert(n.id.as_str()) {
                return Err(GraphError::DuplicateId { id: n.id.clone() });
            }
        }
        for out in &self.outputs {
            if self.node(out).is_none() {
                return Err(GraphError::UnknownInput {
                    node: "<outputs>".into(),
                    input: out.clone(),
                });
            }
        }
        let _ = self.wire_channels()?;

        // reachability from graph inputs
        let mut reach: HashSet<&str> = self.inputs.iter().map(|(n, _)| n.as_str()).collect();
        let order = self.topo_order()?;
        for &i in &order {
            let n = &self.nodes[i];
            if n.inputs.iter().all(|w| reach.contains(w.as_str())) && !n.inputs.is_empty() {
                reach.insert(n.id.as_str());
            }
        }
        for n in &self.nodes {
            if !reach.contains(n.id.as_str()) {
                return Err(GraphError::Unreachable { node: n.id.clone() });
            }
        }

        // parameter shape checks
        for n in &self.nodes {
            for (name, shape) in expected_params(&n.kind) {
                match self.param(&n.id, &name) {
                    None => {
                        return Err(GraphError::MissingParam {
                            owner: n.id.clone(),
                            name,
                        })
                    }
                    Some(p) => {
                        if p.tensor.shape() != shape.as_slice() {
                            return Err(GraphError::BadParam {
                                owner: n.id.clone(),
                                name,
                                detail: format!(
                                    "shape {:?} expected {:?}",
                                    p.tensor.shape(),
                                    shape
                                ),
                            });
                        }
                        let should_be_spatial = matches!(
                            n.kind,
                            LayerKind::Conv2d { kh, kw, .. } if kh * kw > 1
                        ) && name == "weight";
                        if p.spatial != should_be_spatial {
                            return Err(GraphError::BadParam {
                                owner: n.id.clone(),
                                name,
                                detail: format!("spatial flag {} wrong", p.spatial),
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Learnable parameter count (buffers excluded).
    pub fn count_params(&self) -> usize {
        self.params
            .iter()
            .filter(|p| !p.buffer)
            .map(|p| p.tensor.numel())
            .sum()
    }

    /// Learnable spatial parameter count.
    pub fn count_spatial_params(&self) -> usize {
        self.params
            .iter()
            .filter(|p| !p.buffer && p.spatial)
            .map(|p| p.tensor.numel())
            .sum()
    }

    /// (owner, learnable param count) per node, in node order.
    pub fn param_summary(&self) -> Vec<(String, usize)> {
        self.nodes
            .iter()
            .map(|n| {
                let c = self
                    .params
                    .iter()
                    .filter(|p| !p.buffer && p.owner == n.id)
                    .map(|p| p.tensor.numel())
                    .sum();
                (n.id.clone(), c)
            })
            .collect()
    }

    /// Spatial convolution layers in node order as
    /// (node index, out, in_per_group, kh, kw).
    pub fn spatial_layers(&self) -> Vec<(usize, usize, usize, usize, usize)> {
        self.nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| match n.kind {
                LayerKind::Conv2d {
                    kh,
                    kw,
                    groups,
                    in_channels,
                    out_channels,
                    ..
                } if kh * kw > 1 => Some((i, out_channels, in_channels / groups, kh, kw)),
                _ => None,
            })
            .collect()
    }

    /// Overwrite every spatial kernel with the generator output for `method`
    /// and mark it fixed. Non-spatial parameters are untouched.
    pub fn apply_initializer(
        &self,
        method: Method,
        seed: u64,
        guide: Option<&NetworkGraph>,
        opts: &InitOptions,
    ) -> Result<NetworkGraph, FilterError> {
        if method.requires_guide() && guide.is_none() {
            return Err(FilterError::MissingGuide);
        }
        let mut net = self.clone();
        let layers = self.spatial_layers();
        let master = RngStream::new(seed);

        if method == Method::GuidedSteer {
            let guide_net = guide.unwrap();
            let guide_layers = guide_net.spatial_layers();
            if guide_layers.len() != layers.len() {
                return Err(FilterError::MissingGuide);
            }
            // group layers by kernel size; each group shares one basis
            let mut groups: Vec<(usize, usize)> = Vec::new();
            for &(_, _, _, kh, kw) in &layers {
                if !groups.contains(&(kh, kw)) {
                    groups.push((kh, kw));
                }
            }
            for (gi, &(kh, kw)) in groups.iter().enumerate() {
                let mut counts = Vec::new();
                let mut guides = Vec::new();
                let mut targets = Vec::new();
                for (li, &(idx, out, ipg, lkh, lkw)) in layers.iter().enumerate() {
                    if (lkh, lkw) != (kh, kw) {
                        continue;
                    }
                    let (gidx, gout, gipg, gkh, gkw) = guide_layers[li];
                    if (gkh, gkw) != (kh, kw) {
                        return Err(FilterError::KernelMismatch {
                            expected: (kh, kw),
                            got: (gkh, gkw),
                        });
                    }
                    let gnode = &guide_net.nodes[gidx].id;
                    let gw = guide_net
                        .param(gnode, "weight")
                        .ok_or(FilterError::MissingGuide)?;
                    guides.push(gw.tensor.reshape(&[gout * gipg, kh * kw]));
                    counts.push(out * ipg);
                    targets.push(idx);
                }
                let banks = guided_steer_filters(
                    &counts,
                    &guides,
                    opts.guided,
                    &master.derive(0x6757 + gi as u64),
                )?;
                for (bank, &idx) in banks.iter().zip(&targets) {
                    let id = net.nodes[idx].id.clone();
                    let p = net.param_mut(&id, "weight").unwrap();
                    let shape = p.tensor.shape().to_vec();
                    p.tensor = bank.reshape(&shape);
                    p.fixed = true;
                }
            }
            return Ok(net);
        }

        for (layer_pos, &(idx, out, ipg, kh, kw)) in layers.iter().enumerate() {
            let id = net.nodes[idx].id.clone();
            let count = out * ipg;
            let mut rng = master.derive(layer_pos as u64);
            let spec = FilterSpec {
                method,
                kernel: (kh, kw),
                count,
                seed,
            };
            let bank = match method {
                Method::Ones => ones_filters(&spec),
                Method::Dct2 => {
                    let basis = Basis::dct2(kh, kw);
                    dct2_filters(&spec, &basis, &mut rng)?
                }
                Method::GHaar => ghaar_filters(&spec, opts.ghaar, &mut rng)?,
                Method::Psine => psine_filters(&spec, &mut rng)?,
                Method::UnchangedRandom => unchanged_random(&spec, ipg * kh * kw, &mut rng),
                Method::UnchangedGuide => {
                    let guide_net = guide.unwrap();
                    let guide_layers = guide_net.spatial_layers();
                    if guide_layers.len() != layers.len() {
                        return Err(FilterError::MissingGuide);
                    }
                    let (gidx, gout, gipg, gkh, gkw) = guide_layers[layer_pos];
                    if (gout, gipg, gkh, gkw) != (out, ipg, kh, kw) {
                        return Err(FilterError::KernelMismatch {
                            expected: (kh, kw),
                            got: (gkh, gkw),
                        });
                    }
                    let gnode = &guide_net.nodes[gidx].id;
                    guide_net
                        .param(gnode, "weight")
                        .ok_or(FilterError::MissingGuide)?
                        .tensor
                        .reshape(&[count, kh, kw])
                }
                Method::GuidedSteer => unreachable!(),
            };
            let p = net.param_mut(&id, "weight").unwrap();
            let shape = p.tensor.shape().to_vec();
            p.tensor = bank.reshape(&shape);
            p.fixed = true;
        }
        Ok(net)
    }
}

/// Spatial-filter initializer options.
#[derive(Debug, Clone, Copy, Default)]
pub struct InitOptions {
    pub ghaar: GhaarStyle,
    pub guided: GuidedSteerCfg,
}

/// Parameter roster for a node kind as (name, shape).
pub(crate) fn expected_params(kind: &LayerKind) -> Vec<(String, Vec<usize>)> {
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
            let mut v = vec![(
                "weight".to_string(),
                vec![*out_channels, *in_channels, 1, 1],
            )];
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgraph::build::{build_tiny_densenet, build_tiny_resnet, build_unetd};

    #[test]
    fn validate_rejects_cycles() {
        let mut g = NetworkGraph::new(vec![("x".into(), 2)], vec!["a".into()]);
        g.nodes.push(LayerNode {
            id: "a".into(),
            kind: LayerKind::Activation { act: ActKind::Relu },
            inputs: vec!["b".into()],
        });
        g.nodes.push(LayerNode {
            id: "b".into(),
            kind: LayerKind::Activation { act: ActKind::Relu },
            inputs: vec!["a".into()],
        });
        assert!(matches!(g.validate(), Err(GraphError::Cycle { .. })));
    }

    #[test]
    fn validate_rejects_channel_mismatch() {
        let mut g = NetworkGraph::new(vec![("x".into(), 2)], vec!["pw".into()]);
        g.nodes.push(LayerNode {
            id: "pw".into(),
            kind: LayerKind::PointwiseConv {
                in_channels: 3,
                out_channels: 4,
                bias: false,
            },
            inputs: vec!["x".into()],
        });
        g.params.push(ParamTensor {
            owner: "pw".into(),
            name: "weight".into(),
            tensor: Tensor::zeros(&[4, 3, 1, 1]),
            fixed: false,
            spatial: false,
            buffer: false,
        });
        assert!(matches!(
            g.validate(),
            Err(GraphError::ChannelMismatch { .. })
        ));
    }

    #[test]
    fn validate_rejects_dangling_inputs() {
        let mut g = NetworkGraph::new(vec![("x".into(), 2)], vec!["a".into()]);
        g.nodes.push(LayerNode {
            id: "a".into(),
            kind: LayerKind::Activation { act: ActKind::Relu },
            inputs: vec!["ghost".into()],
        });
        assert!(matches!(
            g.validate(),
            Err(GraphError::UnknownInput { .. })
        ));
    }

    #[test]
    fn reference_nets_validate_and_classify_spatial() {
        for net in [
            build_unetd([3, 8, 16, 32, 64], 6, 0),
            build_tiny_resnet(2, 8, 0),
            build_tiny_densenet(2, 4, 0),
        ] {
            net.validate().unwrap();
            for p in &net.params {
                let node = net.node(&p.owner).unwrap();
                let expect_spatial = matches!(node.kind, LayerKind::Conv2d { kh, kw, .. } if kh * kw > 1)
                    && p.name == "weight";
                assert_eq!(p.spatial, expect_spatial, "{}.{}", p.owner, p.name);
            }
        }
    }

    #[test]
    fn ones_initializer_fixes_all_spatial_kernels() {
        let net = build_tiny_resnet(1, 8, 3);
        let done = net
            .apply_initializer(Method::Ones, 0, None, &InitOptions::default())
            .unwrap();
        for p in &done.params {
            if p.spatial {
                assert!(p.fixed);
                assert!(p.tensor.data().iter().all(|&v| v == 1.0));
            } else {
                assert!(!p.fixed);
            }
        }
    }

    #[test]
    fn unchanged_guide_self_is_idempotent() {
        let net = build_tiny_densenet(1, 4, 9);
        let done = net
            .apply_initializer(
                Method::UnchangedGuide,
                0,
                Some(&net),
                &InitOptions::default(),
            )
            .unwrap();
        for (a, b) in net.params.iter().zip(&done.params) {
            assert_eq!(a.tensor.data(), b.tensor.data(), "{}.{}", a.owner, a.name);
            if a.spatial {
                assert!(b.fixed);
            }
        }
    }

    #[test]
    fn missing_guide_is_an_error() {
        let net = build_tiny_resnet(1, 8, 3);
        assert!(matches!(
            net.apply_initializer(Method::UnchangedGuide, 0, None, &InitOptions::default()),
            Err(FilterError::MissingGuide)
        ));
    }

    #[test]
    fn initializers_are_reproducible() {
        let net = build_unetd([3, 8, 16, 32, 64], 6, 0);
        for method in [Method::GHaar, Method::Psine, Method::Dct2, Method::UnchangedRandom] {
            let a = net
                .apply_initializer(method, 5, None, &InitOptions::default())
                .unwrap();
            let b = net
                .apply_initializer(method, 5, None, &InitOptions::default())
                .unwrap();
            for (pa, pb) in a.params.iter().zip(&b.params) {
                assert_eq!(pa.tensor.data(), pb.tensor.data());
            }
        }
    }
}
