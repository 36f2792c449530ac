use super::{MaskGrid, PruneError, ZeroMask};
use crate::explainsteer::SaliencyScores;
use crate::netgraph::NetworkGraph;

/// Zero the `floor(fraction * K)` lowest-scored spatial kernels across the
/// whole network. Ties break on the structural (layer order, out, in)
/// index for reproducibility.
pub fn zero_least_salient(
    net: &NetworkGraph,
    scores: &SaliencyScores,
    fraction: f64,
) -> Result<(NetworkGraph, ZeroMask), PruneError> {
    if !(0.0..=1.0).contains(&fraction) || !fraction.is_finite() {
        return Err(PruneError::BadFraction { fraction });
    }
    let layers = net.spatial_layers();
    // (layer, o, i, score) with structural order as the stable tiebreak
    let mut entries: Vec<(usize, String, usize, usize, f32)> = Vec::new();
    for &(idx, o_count, ipg, _, _) in &layers {
        let id = net.nodes[idx].id.clone();
        let grid = scores
            .layer(&id)
            .ok_or_else(|| PruneError::MissingScores { layer: id.clone() })?;
        if grid.shape() != [o_count, ipg] {
            return Err(PruneError::MissingScores { layer: id });
        }
        for o in 0..o_count {
            for i in 0..ipg {
                entries.push((entries.len(), id.clone(), o, i, grid.at2(o, i)));
            }
        }
    }
    let total = entries.len();
    let zero_count = (fraction * total as f64).floor() as usize;
    entries.sort_by(|a, b| {
        a.4.partial_cmp(&b.4)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.0.cmp(&b.0))
    });

    let mut out = net.clone();
    let mut mask = ZeroMask::default();
    for &(idx, o_count, ipg, kh, kw) in &layers {
        let id = net.nodes[idx].id.clone();
        let _ = (kh, kw);
        mask.layers.insert(
            id,
            MaskGrid {
                out: o_count,
                ipg,
                cells: vec![false; o_count * ipg],
            },
        );
    }
    let kernel_area: std::collections::HashMap<String, usize> = layers
        .iter()
        .map(|&(idx, _, _, kh, kw)| (net.nodes[idx].id.clone(), kh * kw))
        .collect();
    for (_, id, o, i, _) in entries.into_iter().take(zero_count) {
        let grid = mask.layers.get_mut(&id).unwrap();
        grid.cells[o * grid.ipg + i] = true;
        let m = kernel_area[&id];
        let ipg = grid.ipg;
        let p = out.param_mut(&id, "weight").unwrap();
        p.tensor.data_mut()[(o * ipg + i) * m..][..m].fill(0.0);
    }
    Ok((out, mask))
}
