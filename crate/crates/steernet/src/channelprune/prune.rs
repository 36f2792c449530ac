use super::{kernel_is_zero, kernel_slice, LayerRemoval, MaskGrid, PruneError, PruneReport, ZeroMask};
use crate::netgraph::{ActKind, LayerKind, NetworkGraph};
use crate::numerics::Tensor;
use std::collections::{BTreeMap, BTreeSet};

/// Channel-removal decision per wire, plus the candidates that had to be
/// kept. Wires are node ids or graph input names; a removed index counts
/// channels of that wire before any slicing.
#[derive(Debug, Clone, Default)]
pub struct PrunePlan {
    pub wire_removals: BTreeMap<String, BTreeSet<usize>>,
    pub retained: Vec<String>,
}

impl PrunePlan {
    fn removed(&self, wire: &str) -> BTreeSet<usize> {
        self.wire_removals.get(wire).cloned().unwrap_or_default()
    }
}

/// Rebuild a zero mask from the actual kernel values.
pub fn mask_from_weights(net: &NetworkGraph) -> ZeroMask {
    let mut mask = ZeroMask::default();
    for &(idx, o_count, ipg, kh, kw) in &net.spatial_layers() {
        let id = net.nodes[idx].id.clone();
        let w = &net.param(&id, "weight").unwrap().tensor;
        let m = kh * kw;
        let cells = (0..o_count)
            .flat_map(|o| (0..ipg).map(move |i| (o, i)))
            .map(|(o, i)| kernel_is_zero(kernel_slice(w, o, i, m, ipg)))
            .collect();
        mask.layers.insert(
            id,
            MaskGrid {
                out: o_count,
                ipg,
                cells,
            },
        );
    }
    mask
}

fn is_depthwise(kind: &LayerKind) -> bool {
    matches!(
        kind,
        LayerKind::Conv2d {
            groups,
            in_channels,
            out_channels,
            ..
        } if *groups > 1 && groups == in_channels && groups == out_channels
    )
}

fn is_odd_grouped(kind: &LayerKind) -> bool {
    matches!(
        kind,
        LayerKind::Conv2d { groups, in_channels, .. }
            if *groups > 1 && groups != in_channels
    )
}

/// Decide which channels can be removed from every wire.
///
/// Candidates come from two directions: spatial rows whose kernels are all
/// zero produce identically-zero channels (propagated downstream through
/// norm/activation/upsample/pool, with intersection at add and fusion
/// joins), and spatial columns whose kernels are all zero ignore their
/// input channel (propagated upstream when every consumer agrees). A
/// shrink-only fixpoint then enforces the structural couplings: slot layers
/// keep input and output sets equal, joins stay unanimous, concatenations
/// map offsets both ways, depthwise convolutions tie input to output, and
/// graph inputs/outputs never change shape. Candidates dropped by the
/// fixpoint are reported as retained.
pub fn analyze_prune(net: &NetworkGraph, mask: &ZeroMask) -> Result<PrunePlan, PruneError> {
    let order = net.topo_order()?;
    let channels = net.wire_channels()?;
    type Sets = BTreeMap<String, BTreeSet<usize>>;

    // spatial conv removable rows / input channels from the mask
    let mut zero_rows: Sets = BTreeMap::new();
    let mut ignored_inputs: Sets = BTreeMap::new();
    for &(idx, o_count, ipg, _, _) in &net.spatial_layers() {
        let node = &net.nodes[idx];
        let Some(grid) = mask.layers.get(&node.id) else {
            continue;
        };
        if grid.out != o_count || grid.ipg != ipg {
            return Err(PruneError::MaskMismatch {
                layer: node.id.clone(),
            });
        }
        let (groups, in_channels, has_bias) = match &node.kind {
            LayerKind::Conv2d {
                groups,
                in_channels,
                bias,
                ..
            } => (*groups, *in_channels, *bias),
            _ => unreachable!("spatial layer is a conv"),
        };
        let opg = o_count / groups;
        let bias_zero_at = |o: usize| -> bool {
            !has_bias
                || net
                    .param(&node.id, "bias")
                    .map(|b| b.tensor.data()[o] == 0.0)
                    .unwrap_or(true)
        };
        let rows: BTreeSet<usize> = (0..o_count)
            .filter(|&o| grid.row_all(o) && bias_zero_at(o))
            .collect();
        if !rows.is_empty() {
            zero_rows.insert(node.id.clone(), rows);
        }
        let cols: BTreeSet<usize> = (0..in_channels)
            .filter(|&ic| {
                let g = ic / ipg;
                let j = ic % ipg;
                (g * opg..(g + 1) * opg).all(|o| grid.get(o, j))
            })
            .collect();
        if !cols.is_empty() {
            ignored_inputs.insert(node.id.clone(), cols);
        }
    }

    // forward flood: identically-zero channels
    let mut dead: Sets = BTreeMap::new();
    for &i in &order {
        let node = &net.nodes[i];
        let take = |w: &String, dead: &Sets| dead.get(w).cloned().unwrap_or_default();
        let set: BTreeSet<usize> = match &node.kind {
            LayerKind::Conv2d { .. } => zero_rows.get(&node.id).cloned().unwrap_or_default(),
            LayerKind::PointwiseConv { .. } | LayerKind::Linear { .. } => BTreeSet::new(),
            LayerKind::Activation { act: ActKind::Sigmoid } => BTreeSet::new(),
            LayerKind::BatchNorm { .. }
            | LayerKind::Activation { .. }
            | LayerKind::BilinearUpsample { .. }
            | LayerKind::GlobalAvgPool => take(&node.inputs[0], &dead),
            LayerKind::Add | LayerKind::ScalarFusion { .. } => {
                let mut sets = node.inputs.iter().map(|w| take(w, &dead));
                let first = sets.next().unwrap_or_default();
                sets.fold(first, |acc, s| acc.intersection(&s).cloned().collect())
            }
            LayerKind::Concat => {
                let mut out = BTreeSet::new();
                let mut off = 0;
                for w in &node.inputs {
                    for &c in &take(w, &dead) {
                        out.insert(off + c);
                    }
                    off += channels[w];
                }
                out
            }
        };
        if !set.is_empty() {
            dead.insert(node.id.clone(), set);
        }
    }

    // backward flood: channels every consumer ignores
    let mut unused: Sets = BTreeMap::new();
    for &i in order.iter().rev() {
        let node = &net.nodes[i];
        // what this node's own output wire can drop, from its consumers
        let own_unused = unused.get(&node.id).cloned().unwrap_or_default();
        // channels of each input wire this node does not need
        let per_input: Vec<BTreeSet<usize>> = match &node.kind {
            LayerKind::Conv2d { .. } => {
                vec![ignored_inputs.get(&node.id).cloned().unwrap_or_default()]
            }
            LayerKind::PointwiseConv { .. } | LayerKind::Linear { .. } => {
                vec![BTreeSet::new(); node.inputs.len()]
            }
            LayerKind::BatchNorm { .. }
            | LayerKind::Activation { .. }
            | LayerKind::BilinearUpsample { .. }
            | LayerKind::GlobalAvgPool => vec![own_unused.clone()],
            LayerKind::Add | LayerKind::ScalarFusion { .. } => {
                vec![own_unused.clone(); node.inputs.len()]
            }
            LayerKind::Concat => {
                let mut v = Vec::new();
                let mut off = 0;
                for w in &node.inputs {
                    let ck = channels[w];
                    v.push(
                        own_unused
                            .iter()
                            .filter(|&&c| c >= off && c < off + ck)
                            .map(|&c| c - off)
                            .collect(),
                    );
                    off += ck;
                }
                v
            }
        };
        for (w, ignores) in node.inputs.iter().zip(per_input) {
            // a wire is unused only where every consumer ignores it
            let entry = unused.entry(w.clone());
            match entry {
                std::collections::btree_map::Entry::Vacant(v) => {
                    v.insert(ignores);
                }
                std::collections::btree_map::Entry::Occupied(mut o) => {
                    let merged = o.get().intersection(&ignores).cloned().collect();
                    *o.get_mut() = merged;
                }
            }
        }
    }
    // graph outputs are consumed by the outside world
    for out in &net.outputs {
        unused.remove(out);
    }
    // a wire some consumer never saw is not prunable either: wires with no
    // consumers at all are only the graph outputs, handled above

    // optimistic union
    let mut removal: Sets = BTreeMap::new();
    let mut all_wires: Vec<String> = net.inputs.iter().map(|(n, _)| n.clone()).collect();
    all_wires.extend(net.nodes.iter().map(|n| n.id.clone()));
    for w in &all_wires {
        let mut set = dead.get(w).cloned().unwrap_or_default();
        if let Some(u) = unused.get(w) {
            set.extend(u.iter().cloned());
        }
        removal.insert(w.clone(), set);
    }
    let optimistic = removal.clone();
    // graph inputs and outputs never change shape
    for (name, _) in &net.inputs {
        removal.insert(name.clone(), BTreeSet::new());
    }
    for out in &net.outputs {
        removal.insert(out.clone(), BTreeSet::new());
    }

    // shrink-only structural fixpoint
    loop {
        let mut changed = false;
        let sync = |a: String, b: String, removal: &mut Sets| {
            let common: BTreeSet<usize> = removal[&a].intersection(&removal[&b]).cloned().collect();
            if removal[&a] != common {
                removal.insert(a, common.clone());
                return true;
            }
            if removal[&b] != common {
                removal.insert(b, common);
                return true;
            }
            false
        };
        for node in &net.nodes {
            match &node.kind {
                LayerKind::BatchNorm { .. }
                | LayerKind::Activation { .. }
                | LayerKind::BilinearUpsample { .. }
                | LayerKind::GlobalAvgPool => {
                    changed |= sync(node.inputs[0].clone(), node.id.clone(), &mut removal);
                }
                LayerKind::Add | LayerKind::ScalarFusion { .. } => {
                    let mut common = removal[&node.id].clone();
                    for w in &node.inputs {
                        common = common.intersection(&removal[w]).cloned().collect();
                    }
                    for w in node.inputs.iter().chain(std::iter::once(&node.id)) {
                        if removal[w] != common {
                            removal.insert(w.clone(), common.clone());
                            changed = true;
                        }
                    }
                }
                LayerKind::Concat => {
                    let mut off = 0;
                    let mut rebuilt = BTreeSet::new();
                    for w in &node.inputs {
                        let ck = channels[w];
                        let from_out: BTreeSet<usize> = removal[&node.id]
                            .iter()
                            .filter(|&&c| c >= off && c < off + ck)
                            .map(|&c| c - off)
                            .collect();
                        let common: BTreeSet<usize> =
                            removal[w].intersection(&from_out).cloned().collect();
                        if removal[w] != common {
                            removal.insert(w.clone(), common.clone());
                            changed = true;
                        }
                        rebuilt.extend(common.iter().map(|&c| c + off));
                        off += ck;
                    }
                    if removal[&node.id] != rebuilt {
                        removal.insert(node.id.clone(), rebuilt);
                        changed = true;
                    }
                }
                LayerKind::Conv2d { .. } if is_depthwise(&node.kind) => {
                    changed |= sync(node.inputs[0].clone(), node.id.clone(), &mut removal);
                }
                LayerKind::Conv2d { .. } if is_odd_grouped(&node.kind) => {
                    // uneven groups are not representable; keep everything
                    for w in [&node.inputs[0], &node.id] {
                        if !removal[w].is_empty() {
                            removal.insert(w.clone(), BTreeSet::new());
                            changed = true;
                        }
                    }
                }
                _ => {}
            }
        }
        // never empty a wire completely; keep its lowest-indexed channel
        for w in &all_wires {
            if !removal[w].is_empty() && removal[w].len() == channels[w] {
                let first = *removal[w].iter().next().unwrap();
                removal.get_mut(w).unwrap().remove(&first);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let mut retained = Vec::new();
    for w in &all_wires {
        for &c in optimistic[w].difference(&removal[w]) {
            retained.push(format!("{w}:{c}"));
        }
    }
    removal.retain(|_, s| !s.is_empty());
    Ok(PrunePlan {
        wire_removals: removal,
        retained,
    })
}

fn keep_indices(total: usize, removed: &BTreeSet<usize>) -> Vec<usize> {
    (0..total).filter(|c| !removed.contains(c)).collect()
}

fn slice_vector(t: &Tensor, keep: &[usize]) -> Tensor {
    Tensor::from_vec(&[keep.len()], keep.iter().map(|&i| t.data()[i]).collect())
}

/// Slice the spatial convolution kernels according to the plan, updating
/// their attributes. Neighboring layers are left untouched, so the graph is
/// generally inconsistent until [`repair_graph`] runs; the report records
/// the signaled validation error when there is one.
pub fn prune_zero_channels(
    net: &NetworkGraph,
    mask: &ZeroMask,
) -> Result<(NetworkGraph, PruneReport, PrunePlan), PruneError> {
    let plan = analyze_prune(net, mask)?;
    let params_before = net.count_params();
    let total_kernels: usize = mask.layers.values().map(|g| g.cells.len()).sum();
    let zeroed_kernels: usize = mask.layers.values().map(|g| g.count()).sum();

    let mut out = net.clone();
    let mut per_layer = Vec::new();
    for &(idx, o_count, ipg, kh, kw) in &net.spatial_layers() {
        let id = net.nodes[idx].id.clone();
        let in_wire = net.nodes[idx].inputs[0].clone();
        let removed_out = plan.removed(&id);
        let removed_in = plan.removed(&in_wire);
        if removed_out.is_empty() && removed_in.is_empty() {
            continue;
        }
        let (groups, in_channels, has_bias) = match &net.nodes[idx].kind {
            LayerKind::Conv2d {
                groups,
                in_channels,
                bias,
                ..
            } => (*groups, *in_channels, *bias),
            _ => unreachable!(),
        };
        let keep_out = keep_indices(o_count, &removed_out);
        let keep_in = keep_indices(in_channels, &removed_in);
        let m = kh * kw;
        let old_w = net.param(&id, "weight").unwrap().tensor.clone();
        let (new_weight, new_groups, new_ipg) = if groups == 1 {
            let mut data = Vec::with_capacity(keep_out.len() * keep_in.len() * m);
            for &o in &keep_out {
                for &ic in &keep_in {
                    data.extend_from_slice(kernel_slice(&old_w, o, ic, m, ipg));
                }
            }
            (
                Tensor::from_vec(&[keep_out.len(), keep_in.len(), kh, kw], data),
                1,
                keep_in.len(),
            )
        } else {
            // depthwise: plan guarantees removed_in == removed_out
            let mut data = Vec::with_capacity(keep_out.len() * m);
            for &o in &keep_out {
                data.extend_from_slice(kernel_slice(&old_w, o, 0, m, 1));
            }
            (
                Tensor::from_vec(&[keep_out.len(), 1, kh, kw], data),
                keep_out.len(),
                1,
            )
        };
        let _ = new_ipg;
        {
            let p = out.param_mut(&id, "weight").unwrap();
            p.tensor = new_weight;
        }
        if has_bias {
            let b = net.param(&id, "bias").unwrap().tensor.clone();
            out.param_mut(&id, "bias").unwrap().tensor = slice_vector(&b, &keep_out);
        }
        let node = out.nodes.iter_mut().find(|n| n.id == id).unwrap();
        if let LayerKind::Conv2d {
            in_channels,
            out_channels,
            groups,
            ..
        } = &mut node.kind
        {
            *in_channels = keep_in.len();
            *out_channels = keep_out.len();
            *groups = new_groups;
        }
        per_layer.push(LayerRemoval {
            layer: id,
            removed_out: removed_out.iter().cloned().collect(),
            removed_in: removed_in.iter().cloned().collect(),
        });
    }

    let report = PruneReport {
        fraction_spatial_zeroed: if total_kernels == 0 {
            0.0
        } else {
            zeroed_kernels as f64 / total_kernels as f64
        },
        fraction_params_pruned: 0.0, // finalized after repair
        per_layer,
        affected: Vec::new(),
        params_before,
        params_after: params_before,
        retained: plan.retained.clone(),
    };
    Ok((out, report, plan))
}

/// Adjust every non-spatial neighbor to the plan: BatchNorm slots,
/// pointwise rows and columns, linear input features, and the channel
/// attributes of each touched node. The result passes validation.
pub fn repair_graph(
    net: &NetworkGraph,
    plan: &PrunePlan,
    report: &mut PruneReport,
) -> Result<NetworkGraph, PruneError> {
    let channels = net.wire_channels().ok();
    let mut out = net.clone();
    for idx in 0..net.nodes.len() {
        let id = net.nodes[idx].id.clone();
        let removed_out = plan.removed(&id);
        let kind = net.nodes[idx].kind.clone();
        match kind {
            LayerKind::PointwiseConv {
                in_channels,
                out_channels,
                bias,
            } => {
                let in_wire = &net.nodes[idx].inputs[0];
                let removed_in = plan.removed(in_wire);
                if removed_in.is_empty() && removed_out.is_empty() {
                    continue;
                }
                let keep_out = keep_indices(out_channels, &removed_out);
                let keep_in = keep_indices(in_channels, &removed_in);
                let old_w = net.param(&id, "weight").unwrap().tensor.clone();
                let mut data = Vec::with_capacity(keep_out.len() * keep_in.len());
                for &o in &keep_out {
                    for &ic in &keep_in {
                        data.push(old_w.data()[o * in_channels + ic]);
                    }
                }
                out.param_mut(&id, "weight").unwrap().tensor =
                    Tensor::from_vec(&[keep_out.len(), keep_in.len(), 1, 1], data);
                if bias {
                    let b = net.param(&id, "bias").unwrap().tensor.clone();
                    out.param_mut(&id, "bias").unwrap().tensor = slice_vector(&b, &keep_out);
                }
                if let LayerKind::PointwiseConv {
                    in_channels,
                    out_channels,
                    ..
                } = &mut out.nodes[idx].kind
                {
                    *in_channels = keep_in.len();
                    *out_channels = keep_out.len();
                }
                report.affected.push(id);
            }
            LayerKind::BatchNorm { channels: c } => {
                if removed_out.is_empty() {
                    continue;
                }
                let keep = keep_indices(c, &removed_out);
                for name in ["scale", "shift", "running_mean", "running_var"] {
                    let t = net.param(&id, name).unwrap().tensor.clone();
                    out.param_mut(&id, name).unwrap().tensor = slice_vector(&t, &keep);
                }
                if let LayerKind::BatchNorm { channels } = &mut out.nodes[idx].kind {
                    *channels = keep.len();
                }
                report.affected.push(id);
            }
            LayerKind::Linear {
                in_features,
                out_features,
                ..
            } => {
                let in_wire = &net.nodes[idx].inputs[0];
                let removed_in = plan.removed(in_wire);
                if removed_in.is_empty() {
                    continue;
                }
                let keep_in = keep_indices(in_features, &removed_in);
                let old_w = net.param(&id, "weight").unwrap().tensor.clone();
                let mut data = Vec::with_capacity(out_features * keep_in.len());
                for o in 0..out_features {
                    for &ic in &keep_in {
                        data.push(old_w.at2(o, ic));
                    }
                }
                out.param_mut(&id, "weight").unwrap().tensor =
                    Tensor::from_vec(&[out_features, keep_in.len()], data);
                if let LayerKind::Linear { in_features, .. } = &mut out.nodes[idx].kind {
                    *in_features = keep_in.len();
                }
                report.affected.push(id);
            }
            _ => {
                let _ = &channels;
            }
        }
    }
    out.validate()?;
    report.params_after = out.count_params();
    report.fraction_params_pruned = if report.params_before == 0 {
        0.0
    } else {
        (report.params_before - report.params_after) as f64 / report.params_before as f64
    };
    Ok(out)
}

/// Steps three and four together: remove zero channels from the spatial
/// layers, then repair the neighbors. The returned graph is valid.
pub fn prune(
    net: &NetworkGraph,
    mask: &ZeroMask,
) -> Result<(NetworkGraph, PruneReport), PruneError> {
    let (mid, mut report, plan) = prune_zero_channels(net, mask)?;
    let fixed = repair_graph(&mid, &plan, &mut report)?;
    Ok((fixed, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgraph::{
        build_tiny_densenet, build_tiny_resnet, LayerKind, LayerNode, NetworkGraph, ParamTensor,
    };
    use crate::numerics::RngStream;

    /// x(1) -> pw(1->2) -> conv(2->2, 3x3) -> pw(2->1) -> out
    fn sandwich_net() -> NetworkGraph {
        let mut net = NetworkGraph::new(vec![("x".into(), 1)], vec!["post".into()]);
        let mut rng = RngStream::new(5);
        let push_param = |net: &mut NetworkGraph, owner: &str, name: &str, shape: &[usize], rng: &mut RngStream, spatial: bool| {
            let mut t = Tensor::zeros(shape);
            for v in t.data_mut() {
                *v = rng.uniform(-1.0, 1.0);
            }
            net.params.push(ParamTensor {
                owner: owner.into(),
                name: name.into(),
                tensor: t,
                fixed: false,
                spatial,
                buffer: false,
            });
        };
        net.nodes.push(LayerNode {
            id: "pre".into(),
            kind: LayerKind::PointwiseConv {
                in_channels: 1,
                out_channels: 2,
                bias: false,
            },
            inputs: vec!["x".into()],
        });
        push_param(&mut net, "pre", "weight", &[2, 1, 1, 1], &mut rng, false);
        net.nodes.push(LayerNode {
            id: "c".into(),
            kind: LayerKind::Conv2d {
                kh: 3,
                kw: 3,
                stride: 1,
                padding: 1,
                groups: 1,
                in_channels: 2,
                out_channels: 2,
                bias: false,
            },
            inputs: vec!["pre".into()],
        });
        push_param(&mut net, "c", "weight", &[2, 2, 3, 3], &mut rng, true);
        net.nodes.push(LayerNode {
            id: "post".into(),
            kind: LayerKind::PointwiseConv {
                in_channels: 2,
                out_channels: 1,
                bias: false,
            },
            inputs: vec!["c".into()],
        });
        push_param(&mut net, "post", "weight", &[1, 2, 1, 1], &mut rng, false);
        net
    }

    fn mask_of(net: &NetworkGraph, layer: &str, cells: Vec<bool>) -> ZeroMask {
        let mut mask = mask_from_weights(net);
        // start from all-false, then overwrite the requested layer
        for grid in mask.layers.values_mut() {
            grid.cells.fill(false);
        }
        let grid = mask.layers.get_mut(layer).unwrap();
        grid.cells = cells;
        mask
    }

    #[test]
    fn appendix_style_row_and_column_removal() {
        // mask [[T,T],[T,F]]: row 0 fully true -> output 0 removed;
        // column 0 fully true -> input 0 removed; a 1x1-channel conv remains
        let mut net = sandwich_net();
        // zero the actual kernels so deadness is real
        {
            let w = net.param_mut("c", "weight").unwrap();
            w.tensor.data_mut()[0..9].fill(0.0); // (o=0, i=0)
            w.tensor.data_mut()[9..18].fill(0.0); // (o=0, i=1)
            w.tensor.data_mut()[18..27].fill(0.0); // (o=1, i=0)
        }
        let mask = mask_of(&net, "c", vec![true, true, true, false]);
        let (pruned, report) = prune(&net, &mask).unwrap();
        let node = pruned.node("c").unwrap();
        match &node.kind {
            LayerKind::Conv2d {
                in_channels,
                out_channels,
                ..
            } => {
                assert_eq!((*in_channels, *out_channels), (1, 1));
            }
            _ => unreachable!(),
        }
        assert_eq!(pruned.param("c", "weight").unwrap().tensor.shape(), &[1, 1, 3, 3]);
        // neighbors repaired: pre lost row 0, post lost column 0
        assert_eq!(pruned.param("pre", "weight").unwrap().tensor.shape(), &[1, 1, 1, 1]);
        assert_eq!(pruned.param("post", "weight").unwrap().tensor.shape(), &[1, 1, 1, 1]);
        pruned.validate().unwrap();
        assert!(report.params_after < report.params_before);
        let removal = &report.per_layer[0];
        assert_eq!(removal.removed_out, vec![0]);
        assert_eq!(removal.removed_in, vec![0]);
    }

    #[test]
    fn partial_zeros_remove_no_channels() {
        let net = sandwich_net();
        // no full row or column
        let mask = mask_of(&net, "c", vec![true, false, false, true]);
        let (pruned, report) = prune(&net, &mask).unwrap();
        assert_eq!(pruned.param("c", "weight").unwrap().tensor.shape(), &[2, 2, 3, 3]);
        assert!(report.per_layer.is_empty());
        assert_eq!(report.params_before, report.params_after);
    }

    #[test]
    fn intermediate_graph_is_signaled_invalid_then_repair_fixes_it() {
        let mut net = sandwich_net();
        {
            let w = net.param_mut("c", "weight").unwrap();
            w.tensor.data_mut()[0..18].fill(0.0); // row 0
        }
        let mask = mask_of(&net, "c", vec![true, true, false, false]);
        let (mid, mut report, plan) = prune_zero_channels(&net, &mask).unwrap();
        assert!(mid.validate().is_err(), "pre-repair graph should be inconsistent");
        let fixed = repair_graph(&mid, &plan, &mut report).unwrap();
        fixed.validate().unwrap();
    }

    #[test]
    fn densenet_concat_reindexes_downstream() {
        let net = build_tiny_densenet(2, 4, 3);
        // zero all kernels of the first dense block's conv (grows 4 channels)
        let mut work = net.clone();
        {
            let p = work.param_mut("dense0_conv", "weight").unwrap();
            let data = p.tensor.data_mut();
            data.fill(0.0);
        }
        let mask = mask_from_weights(&work);
        let (pruned, report) = prune(&work, &mask).unwrap();
        pruned.validate().unwrap();
        // dense0_conv lost all 4 outputs; dense0_cat output shrinks 12 -> 8,
        // consumers (dense1_pw and dense1_cat path) reindex
        // the keep-one rule leaves a single live channel on the dead branch
        let removal = report
            .per_layer
            .iter()
            .find(|l| l.layer == "dense0_conv")
            .unwrap();
        assert_eq!(removal.removed_out.len(), 3);
        let ch = pruned.wire_channels().unwrap();
        assert_eq!(ch["dense0_cat"], 9);
        assert_eq!(ch["dense1_cat"], 13);
        // forward still executes
        let x = Tensor::zeros(&[1, 1, 8, 8]);
        crate::engine::forward(&pruned, &x, crate::engine::Mode::Eval).unwrap();
    }

    #[test]
    fn resnet_partial_removal_stays_executable() {
        let net = build_tiny_resnet(2, 8, 7);
        let mut work = net.clone();
        {
            // zero half the res0_conv rows (4 of 4x4 kernels -> rows 0..2)
            let p = work.param_mut("res0_conv", "weight").unwrap();
            let m = 9 * 4; // ipg=4
            p.tensor.data_mut()[..2 * m].fill(0.0);
        }
        let mask = mask_from_weights(&work);
        let (pruned, report) = prune(&work, &mask).unwrap();
        pruned.validate().unwrap();
        assert!(report
            .per_layer
            .iter()
            .any(|l| l.layer == "res0_conv" && l.removed_out == vec![0, 1]));
        let x = Tensor::zeros(&[1, 1, 8, 8]);
        crate::engine::forward(&pruned, &x, crate::engine::Mode::Eval).unwrap();
        // accounting reconciles exactly
        let removed_total: usize = report.params_before - report.params_after;
        assert!(removed_total > 0);
        let recount = pruned.count_params();
        assert_eq!(recount, report.params_after);
    }

    #[test]
    fn pruning_is_idempotent() {
        let net = build_tiny_densenet(2, 4, 9);
        let mut work = net.clone();
        {
            let p = work.param_mut("dense1_conv", "weight").unwrap();
            p.tensor.data_mut().fill(0.0);
        }
        let (once, r1) = prune(&work, &mask_from_weights(&work)).unwrap();
        let (twice, r2) = prune(&once, &mask_from_weights(&once)).unwrap();
        assert_eq!(r1.params_after, r2.params_after);
        assert_eq!(r2.params_before, r2.params_after);
        for (a, b) in once.params.iter().zip(&twice.params) {
            assert_eq!(a.tensor.data(), b.tensor.data());
        }
    }

    #[test]
    fn graph_input_channels_are_never_removed() {
        // stem conv ignoring its single input column must not shrink the image
        let net = build_tiny_resnet(1, 8, 1);
        let mut work = net.clone();
        {
            let p = work.param_mut("stem", "weight").unwrap();
            p.tensor.data_mut().fill(0.0);
        }
        let mask = mask_from_weights(&work);
        let plan = analyze_prune(&work, &mask).unwrap();
        assert!(!plan.wire_removals.contains_key("image"));
        assert!(plan.retained.iter().any(|r| r.starts_with("image:")));
        let (pruned, _) = prune(&work, &mask).unwrap();
        pruned.validate().unwrap();
    }
}
