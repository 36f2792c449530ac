use super::saliency::SaliencyScores;
use super::ExplainError;
use crate::filterbank::Basis;
use crate::netgraph::NetworkGraph;
use crate::numerics::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightMode {
    /// Every kernel weighted 1/n.
    Uniform,
    /// Gradient-times-weight saliency scores.
    Saliency,
}

/// Spectra of one spatial layer. `e_d` is indexed by basis row (natural
/// order; use the basis `rank_of_row` for frequency ordering), `e1` holds
/// the h row-frequency slots then the w column-frequency slots, and `e0` is
/// present only for square kernels.
#[derive(Debug, Clone)]
pub struct EnergySpectrum {
    pub layer_id: String,
    pub sizes: (usize, usize),
    pub e_d: Vec<f32>,
    pub e1: Vec<f32>,
    pub e0: Option<Vec<f32>>,
    pub weights_used: WeightMode,
}

/// Full spectrum: `e_d[i] = sum_j w_j |f_j . b_i|` over flattened kernels
/// `f_j` (rows of `filters`) and basis rows `b_i`.
pub fn spectrum_ed(
    filters: &Tensor,
    basis: &Basis,
    weights: &[f32],
) -> Result<Vec<f32>, ExplainError> {
    let shape = filters.shape();
    if shape.len() != 2 || shape[1] != basis.m() {
        return Err(ExplainError::SizeMismatch {
            detail: format!("filters {shape:?} vs basis m={}", basis.m()),
        });
    }
    if shape[0] != weights.len() {
        return Err(ExplainError::SizeMismatch {
            detail: format!("{} filters but {} weights", shape[0], weights.len()),
        });
    }
    if let Some(idx) = weights.iter().position(|&w| w < 0.0) {
        return Err(ExplainError::NegativeWeight { index: idx });
    }
    let m = basis.m();
    let mut out = vec![0.0f64; m];
    for (j, &wj) in weights.iter().enumerate() {
        let row = filters.row(j);
        for (i, acc) in out.iter_mut().enumerate() {
            let b = basis.matrix().row(i);
            let dot: f64 = row.iter().zip(b).map(|(&a, &c)| a as f64 * c as f64).sum();
            *acc += wj as f64 * dot.abs();
        }
    }
    Ok(out.into_iter().map(|v| v as f32).collect())
}

/// Back-project e(d) onto the 1-D factor frequencies: each energy
/// contributes its d-th root (d = 2) to the row-frequency slot and to the
/// column-frequency slot of the basis row that produced it.
pub fn backproject_e1(e_d: &[f32], basis: &Basis) -> Result<Vec<f32>, ExplainError> {
    let (h, w) = basis.sizes();
    if e_d.len() != basis.m() {
        return Err(ExplainError::SizeMismatch {
            detail: format!("e_d length {} vs basis m={}", e_d.len(), basis.m()),
        });
    }
    let mut e1 = vec![0.0f32; h + w];
    for (i, &e) in e_d.iter().enumerate() {
        let (kh, kw) = basis.factors(i);
        let root = (e as f64).max(0.0).sqrt() as f32;
        e1[kh] += root;
        e1[h + kw] += root;
    }
    Ok(e1)
}

/// Reduce e(1) to per-frequency energies for square kernels: reshape to a
/// (d, h) matrix and take the column mean. Non-square kernels are an
/// explicit unsupported case.
pub fn reduce_e0(e1: &[f32], h: usize, w: usize) -> Result<Vec<f32>, ExplainError> {
    if h != w {
        return Err(ExplainError::NonSquareKernel { h, w });
    }
    if e1.len() != h + w {
        return Err(ExplainError::SizeMismatch {
            detail: format!("e1 length {} vs h+w={}", e1.len(), h + w),
        });
    }
    Ok((0..h)
        .map(|q| (e1[q] as f64 + e1[h + q] as f64) as f32 / 2.0)
        .collect())
}

fn layer_spectrum(
    layer_id: &str,
    kernels: &Tensor,
    basis: &Basis,
    weights: &[f32],
    mode: WeightMode,
) -> Result<EnergySpectrum, ExplainError> {
    let (h, w) = basis.sizes();
    let e_d = spectrum_ed(kernels, basis, weights)?;
    let e1 = backproject_e1(&e_d, basis)?;
    let e0 = if h == w {
        Some(reduce_e0(&e1, h, w)?)
    } else {
        None
    };
    Ok(EnergySpectrum {
        layer_id: layer_id.to_string(),
        sizes: (h, w),
        e_d,
        e1,
        e0,
        weights_used: mode,
    })
}

fn flat_kernels(net: &NetworkGraph, node_idx: usize, n: usize, m: usize) -> Tensor {
    let id = &net.nodes[node_idx].id;
    net.param(id, "weight").unwrap().tensor.reshape(&[n, m])
}

/// One spectrum per spatial layer, in node order. Weights come from the
/// saliency scores when given, else every kernel counts 1/n.
pub fn explain_network(
    net: &NetworkGraph,
    scores: Option<&SaliencyScores>,
) -> Result<Vec<EnergySpectrum>, ExplainError> {
    explain_network_with_threads(net, scores, 1)
}

/// Like [`explain_network`], computing layer spectra on up to `threads`
/// worker threads. Layers are independent, and results are reassembled in
/// node order, so the output is identical for any thread count.
pub fn explain_network_with_threads(
    net: &NetworkGraph,
    scores: Option<&SaliencyScores>,
    threads: usize,
) -> Result<Vec<EnergySpectrum>, ExplainError> {
    let layers = net.spatial_layers();
    if layers.is_empty() {
        return Err(ExplainError::NoSpatialLayers);
    }
    let one = |&(idx, o, ipg, kh, kw): &(usize, usize, usize, usize, usize)| {
        let id = net.nodes[idx].id.clone();
        let n = o * ipg;
        let basis = Basis::dct2(kh, kw);
        let kernels = flat_kernels(net, idx, n, kh * kw);
        let (weights, mode) = match scores {
            Some(s) => (
                s.layer(&id)
                    .ok_or_else(|| ExplainError::SizeMismatch {
                        detail: format!("no saliency scores for layer '{id}'"),
                    })?
                    .data()
                    .to_vec(),
                WeightMode::Saliency,
            ),
            None => (vec![1.0 / n as f32; n], WeightMode::Uniform),
        };
        layer_spectrum(&id, &kernels, &basis, &weights, mode)
    };
    if threads <= 1 || layers.len() < 2 {
        return layers.iter().map(one).collect();
    }
    let workers = threads.min(layers.len());
    let chunk = layers.len().div_ceil(workers);
    let mut slots: Vec<Option<Result<EnergySpectrum, ExplainError>>> = Vec::new();
    slots.resize_with(layers.len(), || None);
    let one = &one;
    std::thread::scope(|scope| {
        for (w, slot_chunk) in slots.chunks_mut(chunk).enumerate() {
            let layer_chunk = &layers[w * chunk..(w * chunk + slot_chunk.len())];
            scope.spawn(move || {
                for (slot, layer) in slot_chunk.iter_mut().zip(layer_chunk) {
                    *slot = Some(one(layer));
                }
            });
        }
    });
    slots.into_iter().map(|s| s.expect("worker filled slot")).collect()
}

/// Pooled spectrum over every spatial kernel with the given size.
pub fn global_spectrum(
    net: &NetworkGraph,
    scores: Option<&SaliencyScores>,
    sizes: (usize, usize),
) -> Result<EnergySpectrum, ExplainError> {
    let (kh, kw) = sizes;
    let m = kh * kw;
    let mut rows: Vec<f32> = Vec::new();
    let mut weights: Vec<f32> = Vec::new();
    let mut count = 0usize;
    for &(idx, o, ipg, lh, lw) in &net.spatial_layers() {
        if (lh, lw) != (kh, kw) {
            continue;
        }
        let n = o * ipg;
        let id = &net.nodes[idx].id;
        let kernels = flat_kernels(net, idx, n, m);
        rows.extend_from_slice(kernels.data());
        match scores {
            Some(s) => weights.extend_from_slice(
                s.layer(id)
                    .ok_or_else(|| ExplainError::SizeMismatch {
                        detail: format!("no saliency scores for layer '{id}'"),
                    })?
                    .data(),
            ),
            None => weights.extend(std::iter::repeat(0.0).take(n)),
        }
        count += n;
    }
    if count == 0 {
        return Err(ExplainError::NoSpatialLayers);
    }
    if scores.is_none() {
        weights.iter_mut().for_each(|w| *w = 1.0 / count as f32);
    }
    let basis = Basis::dct2(kh, kw);
    let filters = Tensor::from_vec(&[count, m], rows);
    let mode = if scores.is_some() {
        WeightMode::Saliency
    } else {
        WeightMode::Uniform
    };
    layer_spectrum("__global", &filters, &basis, &weights, mode)
}
