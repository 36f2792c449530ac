use super::{kernel_is_zero, kernel_slice};
use crate::netgraph::{LayerKind, NetworkGraph};
use crate::numerics::{kaiming_uniform, RngStream};

#[derive(Debug, Clone, Copy)]
pub struct FillZeroCfg {
    /// Compute the patch distribution's mean/variance over all kernel
    /// entries including the zeros (default), or over nonzero entries only.
    pub include_zeros_in_stats: bool,
}

impl Default for FillZeroCfg {
    fn default() -> Self {
        FillZeroCfg {
            include_zeros_in_stats: true,
        }
    }
}

/// Re-initialize surviving zeros in spatial kernels and mark them fixed:
/// fully-zero kernels get Kaiming-uniform draws over the layer fan-in,
/// partially-zero kernels get Gaussian draws matching that kernel's own
/// mean and variance at the zero positions only.
pub fn fill_zero(net: &NetworkGraph, rng: &RngStream, cfg: &FillZeroCfg) -> NetworkGraph {
    let mut out = net.clone();
    for (layer_pos, &(idx, o_count, ipg, kh, kw)) in net.spatial_layers().iter().enumerate() {
        let id = net.nodes[idx].id.clone();
        let fan_in = match &net.nodes[idx].kind {
            LayerKind::Conv2d {
                groups,
                in_channels,
                ..
            } => in_channels / groups * kh * kw,
            _ => unreachable!(),
        };
        let mut layer_rng = RngStream::new(rng.seed()).derive(0xF177 + layer_pos as u64);
        let m = kh * kw;
        let p = out.param_mut(&id, "weight").unwrap();
        for o in 0..o_count {
            for i in 0..ipg {
                let (is_zero, mean, var, has_zero) = {
                    let k = kernel_slice(&p.tensor, o, i, m, ipg);
                    let is_zero = kernel_is_zero(k);
                    let stats: Vec<f64> = if cfg.include_zeros_in_stats {
                        k.iter().map(|&v| v as f64).collect()
                    } else {
                        k.iter().filter(|&&v| v != 0.0).map(|&v| v as f64).collect()
                    };
                    let mean = if stats.is_empty() {
                        0.0
                    } else {
                        stats.iter().sum::<f64>() / stats.len() as f64
                    };
                    let var = if stats.is_empty() {
                        0.0
                    } else {
                        stats.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                            / stats.len() as f64
                    };
                    (is_zero, mean, var, k.iter().any(|&v| v == 0.0))
                };
                if is_zero {
                    let draws = kaiming_uniform(fan_in, m, &mut layer_rng);
                    let dst = &mut p.tensor.data_mut()[(o * ipg + i) * m..][..m];
                    dst.copy_from_slice(draws.data());
                } else if has_zero {
                    let sd = var.sqrt();
                    let dst = &mut p.tensor.data_mut()[(o * ipg + i) * m..][..m];
                    for v in dst.iter_mut() {
                        if *v == 0.0 {
                            *v = (mean + sd * layer_rng.standard_normal()) as f32;
                        }
                    }
                }
            }
        }
        p.fixed = true;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgraph::{LayerNode, NetworkGraph, ParamTensor};
    use crate::numerics::Tensor;

    fn one_conv_net(weights: Vec<f32>, out_ch: usize, in_ch: usize) -> NetworkGraph {
        let mut net = NetworkGraph::new(vec![("x".into(), in_ch)], vec!["c".into()]);
        net.nodes.push(LayerNode {
            id: "c".into(),
            kind: LayerKind::Conv2d {
                kh: 3,
                kw: 3,
                stride: 1,
                padding: 1,
                groups: 1,
                in_channels: in_ch,
                out_channels: out_ch,
                bias: false,
            },
            inputs: vec!["x".into()],
        });
        net.params.push(ParamTensor {
            owner: "c".into(),
            name: "weight".into(),
            tensor: Tensor::from_vec(&[out_ch, in_ch, 3, 3], weights),
            fixed: false,
            spatial: true,
            buffer: false,
        });
        net
    }

    #[test]
    fn all_zero_kernel_gets_kaiming_draws() {
        let net = one_conv_net(vec![0.0; 9], 1, 1);
        let filled = fill_zero(&net, &RngStream::new(4), &FillZeroCfg::default());
        let p = filled.param("c", "weight").unwrap();
        assert!(p.fixed);
        let bound = (6.0f32 / 9.0).sqrt();
        assert!(p.tensor.data().iter().all(|&v| v != 0.0 && v.abs() <= bound));
    }

    #[test]
    fn partial_zero_kernel_patches_only_zero_slots() {
        let kernel = vec![0.0, 0.5, -0.5, 0.5, -0.5, 0.5, -0.5, 0.5, -0.5];
        // oracle: mean and variance over all nine entries including the zero
        let mean: f64 = kernel.iter().map(|&v| v as f64).sum::<f64>() / 9.0;
        let var: f64 = kernel
            .iter()
            .map(|&v| (v as f64 - mean) * (v as f64 - mean))
            .sum::<f64>()
            / 9.0;
        let net = one_conv_net(kernel.clone(), 1, 1);
        let filled = fill_zero(&net, &RngStream::new(7), &FillZeroCfg::default());
        let got = filled.param("c", "weight").unwrap().tensor.data().to_vec();
        for i in 1..9 {
            assert_eq!(got[i], kernel[i], "nonzero slot {i} must be untouched");
        }
        assert_ne!(got[0], 0.0);
        // the one draw is plausibly from N(mean, var): check a wide interval
        let sd = var.sqrt();
        assert!(
            (got[0] as f64 - mean).abs() < 6.0 * sd,
            "draw {} against N({mean:.4}, {var:.4})",
            got[0]
        );
        // repeated fills over many seeds recover the oracle's moments
        let mut acc = Vec::new();
        for seed in 0..2000 {
            let f = fill_zero(&net, &RngStream::new(seed), &FillZeroCfg::default());
            acc.push(f.param("c", "weight").unwrap().tensor.data()[0] as f64);
        }
        let m = acc.iter().sum::<f64>() / acc.len() as f64;
        let v = acc.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / acc.len() as f64;
        assert!((m - mean).abs() < 0.05, "mean {m} vs oracle {mean}");
        assert!((v - var).abs() < 0.05, "var {v} vs oracle {var}");
    }

    #[test]
    fn kernel_without_zeros_is_unchanged() {
        let kernel: Vec<f32> = (1..=9).map(|i| i as f32 * 0.1).collect();
        let net = one_conv_net(kernel.clone(), 1, 1);
        let filled = fill_zero(&net, &RngStream::new(1), &FillZeroCfg::default());
        assert_eq!(filled.param("c", "weight").unwrap().tensor.data(), &kernel[..]);
        assert!(filled.param("c", "weight").unwrap().fixed);
    }
}
