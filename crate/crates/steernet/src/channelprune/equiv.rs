use crate::engine::{forward, EngineError, Mode};
use crate::netgraph::NetworkGraph;
use crate::numerics::Tensor;

/// Maximum absolute output deviation between the zeroed and the pruned
/// network over the probe inputs, in evaluation mode.
///
/// For a random fixed network pruned without FillZero the contract is
/// exactness: zeroed channels carry constant zero through zero-preserving
/// layers and untouched BatchNorm statistics, so removing them leaves the
/// remaining arithmetic unchanged and the deviation sits at zero. Networks
/// with nonzero shifts or biases in removed channels report a real,
/// nonzero deviation instead.
pub fn prune_equivalence_check(
    net_zeroed: &NetworkGraph,
    net_pruned: &NetworkGraph,
    probes: &[Tensor],
) -> Result<f32, EngineError> {
    let mut worst = 0.0f32;
    for probe in probes {
        let a = forward(net_zeroed, probe, Mode::Eval)?;
        let b = forward(net_pruned, probe, Mode::Eval)?;
        let ya = a.output(net_zeroed)?;
        let yb = b.output(net_pruned)?;
        if ya.shape() != yb.shape() {
            return Err(EngineError::ShapeMismatch {
                node: net_zeroed.outputs[0].clone(),
                detail: format!("outputs {:?} vs {:?}", ya.shape(), yb.shape()),
            });
        }
        for (&va, &vb) in ya.data().iter().zip(yb.data()) {
            worst = worst.max((va - vb).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channelprune::{mask_from_weights, prune, zero_least_salient};
    use crate::explainsteer::SaliencyScores;
    use crate::filterbank::Method;
    use crate::netgraph::{build_tiny_resnet, InitOptions};
    use crate::numerics::RngStream;

    fn magnitude_scores(net: &crate::netgraph::NetworkGraph) -> SaliencyScores {
        let mut pairs = Vec::new();
        for &(idx, o, ipg, kh, kw) in &net.spatial_layers() {
            let id = net.nodes[idx].id.clone();
            let w = &net.param(&id, "weight").unwrap().tensor;
            let m = kh * kw;
            let mut grid = Tensor::zeros(&[o, ipg]);
            for oo in 0..o {
                for ii in 0..ipg {
                    let s: f32 = w.data()[(oo * ipg + ii) * m..][..m]
                        .iter()
                        .map(|v| v.abs())
                        .sum();
                    grid.set2(oo, ii, s);
                }
            }
            pairs.push((id, grid));
        }
        SaliencyScores::from_layers(pairs)
    }

    #[test]
    fn random_fixed_net_prunes_exactly() {
        let net = build_tiny_resnet(2, 8, 21)
            .apply_initializer(Method::UnchangedRandom, 3, None, &InitOptions::default())
            .unwrap();
        let scores = magnitude_scores(&net);
        let (zeroed, _mask) = zero_least_salient(&net, &scores, 0.9).unwrap();
        let (pruned, report) = prune(&zeroed, &mask_from_weights(&zeroed)).unwrap();
        assert!(report.params_after < report.params_before);
        let mut rng = RngStream::new(77);
        let probes: Vec<Tensor> = (0..32)
            .map(|_| {
                let mut t = Tensor::zeros(&[1, 1, 8, 8]);
                for v in t.data_mut() {
                    *v = rng.uniform(-1.0, 1.0);
                }
                t
            })
            .collect();
        let dev = prune_equivalence_check(&zeroed, &pruned, &probes).unwrap();
        assert!(dev < 1e-6, "max deviation {dev}");
    }

    #[test]
    fn zero_probe_gives_equal_outputs() {
        let net = build_tiny_resnet(1, 8, 5)
            .apply_initializer(Method::UnchangedRandom, 9, None, &InitOptions::default())
            .unwrap();
        let scores = magnitude_scores(&net);
        let (zeroed, _) = zero_least_salient(&net, &scores, 0.5).unwrap();
        let (pruned, _) = prune(&zeroed, &mask_from_weights(&zeroed)).unwrap();
        let probes = vec![Tensor::zeros(&[1, 1, 8, 8])];
        let dev = prune_equivalence_check(&zeroed, &pruned, &probes).unwrap();
        assert!(dev < 1e-6, "max deviation {dev}");
    }

    #[test]
    fn nonzero_bn_shift_in_removed_channels_reports_deviation() {
        let net = build_tiny_resnet(1, 8, 31)
            .apply_initializer(Method::UnchangedRandom, 5, None, &InitOptions::default())
            .unwrap();
        let mut shifted = net.clone();
        // pretend pretraining: put a nonzero shift in the conv's BN
        {
            let p = shifted.param_mut("res0_conv_bn", "shift").unwrap();
            p.tensor.data_mut().fill(0.35);
        }
        let scores = magnitude_scores(&shifted);
        let (zeroed, _) = zero_least_salient(&shifted, &scores, 0.9).unwrap();
        let (pruned, _) = prune(&zeroed, &mask_from_weights(&zeroed)).unwrap();
        let mut rng = RngStream::new(9);
        let mut probe = Tensor::zeros(&[1, 1, 8, 8]);
        for v in probe.data_mut() {
            *v = rng.uniform(-1.0, 1.0);
        }
        let dev = prune_equivalence_check(&zeroed, &pruned, &[probe]).unwrap();
        // reported, not asserted exact: removing a biased channel changes the
        // function
        assert!(dev > 1e-6, "expected nonzero deviation, got {dev}");
    }
}
