//! Saliency self-consistency: two disjoint batch sets must rank the
//! spatial kernels of a trained toy net similarly.

use steernet::engine::{train, Batch, TrainCfg};
use steernet::explainsteer::{saliency, SaliencyCfg};
use steernet::netgraph::build_tiny_resnet;
use steernet::numerics::{RngStream, Tensor};

/// Stripe-texture classification batches: each of the 5 labels toggles a
/// horizontal band pattern.
fn stripe_batches(count: usize, seed: u64) -> Vec<Batch> {
    let mut rng = RngStream::new(seed);
    (0..count)
        .map(|_| {
            let n = 4;
            let mut img = Tensor::zeros(&[n, 1, 10, 10]);
            let mut labels = Tensor::zeros(&[n, 5]);
            for ni in 0..n {
                for t in 0..5 {
                    if rng.pick(2) == 1 {
                        labels.set2(ni, t, 1.0);
                        for x in 0..10 {
                            img.data_mut()[(ni * 10 + 2 * t) * 10 + x] += 1.0;
                            img.data_mut()[(ni * 10 + 2 * t + 1) * 10 + x] += 0.5;
                        }
                    }
                }
                for p in 0..100 {
                    img.data_mut()[ni * 100 + p] += rng.uniform(-0.1, 0.1);
                }
            }
            Batch {
                inputs: img,
                targets: labels,
                mask: None,
            }
        })
        .collect()
}

fn spearman(a: &[f32], b: &[f32]) -> f64 {
    let rank = |xs: &[f32]| -> Vec<f64> {
        let mut idx: Vec<usize> = (0..xs.len()).collect();
        idx.sort_by(|&i, &j| xs[i].partial_cmp(&xs[j]).unwrap().then(i.cmp(&j)));
        let mut r = vec![0.0; xs.len()];
        for (pos, &i) in idx.iter().enumerate() {
            r[i] = pos as f64;
        }
        r
    };
    let ra = rank(a);
    let rb = rank(b);
    let n = ra.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    cov / (va.sqrt() * vb.sqrt())
}

#[test]
fn disjoint_batch_sets_agree_on_kernel_ranking() {
    let net = build_tiny_resnet(2, 12, 3);
    let data = stripe_batches(16, 100);
    let cfg = TrainCfg::multilabel(0.01, 20, 7, vec![(50.0, 50.0); 5]);
    let (trained, metrics) = train(&net, &data, &cfg).unwrap();
    assert!(
        metrics.last().unwrap().metric > 0.75,
        "toy net failed to learn: {:?}",
        metrics.last().unwrap()
    );
    let set_a = stripe_batches(15, 555);
    let set_b = stripe_batches(15, 777);
    let sal_a = saliency(&trained, &set_a, &SaliencyCfg::default()).unwrap();
    let sal_b = saliency(&trained, &set_b, &SaliencyCfg::default()).unwrap();
    let flat_a: Vec<f32> = sal_a.flattened().iter().map(|x| x.3).collect();
    let flat_b: Vec<f32> = sal_b.flattened().iter().map(|x| x.3).collect();
    let rho = spearman(&flat_a, &flat_b);
    assert!(rho > 0.8, "Spearman correlation {rho}");
}
