use super::{NumericsError, RngStream, Tensor};

/// Gaussian-kernel density resampling: each output is a uniformly chosen
/// input sample plus Gaussian noise with standard deviation equal to the
/// bandwidth. Bandwidth follows Scott's rule, `sigma_hat * k^(-1/5)` over
/// the `k` input samples (sample std, ddof = 1). A single input sample has
/// zero bandwidth, so every output equals it exactly.
pub fn kde_sample(samples: &Tensor, n: usize, rng: &mut RngStream) -> Result<Tensor, NumericsError> {
    let xs = samples.data();
    if xs.is_empty() {
        return Err(NumericsError::EmptySamples);
    }
    let k = xs.len();
    let bandwidth = if k < 2 {
        0.0
    } else {
        let mean = xs.iter().map(|&v| v as f64).sum::<f64>() / k as f64;
        let var = xs
            .iter()
            .map(|&v| (v as f64 - mean).powi(2))
            .sum::<f64>()
            / (k as f64 - 1.0);
        var.sqrt() * (k as f64).powf(-0.2)
    };
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let base = xs[rng.pick(k)] as f64;
        let noise = if bandwidth > 0.0 {
            bandwidth * rng.standard_normal()
        } else {
            0.0
        };
        out.push((base + noise) as f32);
    }
    Ok(Tensor::from_vec(&[n], out))
}
