use super::{Basis, FilterError};
use crate::numerics::{kaiming_uniform, kde_sample, linspace, sym_eig, RngStream, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Ones,
    Dct2,
    UnchangedRandom,
    UnchangedGuide,
    GHaar,
    Psine,
    GuidedSteer,
}

impl Method {
    pub fn requires_guide(&self) -> bool {
        matches!(self, Method::UnchangedGuide | Method::GuidedSteer)
    }

    pub fn parse(s: &str) -> Option<Method> {
        Some(match s {
            "ones" => Method::Ones,
            "dct2" => Method::Dct2,
            "unchanged-random" => Method::UnchangedRandom,
            "unchanged-guide" => Method::UnchangedGuide,
            "ghaar" => Method::GHaar,
            "psine" => Method::Psine,
            "guidedsteer" => Method::GuidedSteer,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::Ones => "ones",
            Method::Dct2 => "dct2",
            Method::UnchangedRandom => "unchanged-random",
            Method::UnchangedGuide => "unchanged-guide",
            Method::GHaar => "ghaar",
            Method::Psine => "psine",
            Method::GuidedSteer => "guidedsteer",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FilterSpec {
    pub method: Method,
    pub kernel: (usize, usize),
    pub count: usize,
    pub seed: u64,
}

/// Term structure for GHaar kernels.
///
/// `HaarTriple` follows the Haar pattern with exactly three random
/// frequencies: `ones x g(f1)`, `g(f2) x ones`, `g(f3) x g(f3)`. It loads the
/// zero-frequency factor the way the Haar construction does and keeps the
/// e0 spectrum decreasing. `FreePairs` draws an independent `(f, f')` pair
/// for each of the three terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GhaarStyle {
    #[default]
    HaarTriple,
    FreePairs,
}

pub fn ones_filters(spec: &FilterSpec) -> Tensor {
    let (h, w) = spec.kernel;
    Tensor::full(&[spec.count, h, w], 1.0)
}

/// Each kernel is one basis row, chosen uniformly with replacement.
pub fn dct2_filters(
    spec: &FilterSpec,
    basis: &Basis,
    rng: &mut RngStream,
) -> Result<Tensor, FilterError> {
    let (h, w) = spec.kernel;
    if basis.sizes() != (h, w) {
        return Err(FilterError::KernelMismatch {
            expected: (h, w),
            got: basis.sizes(),
        });
    }
    let m = basis.m();
    let mut out = Tensor::zeros(&[spec.count, h, w]);
    for i in 0..spec.count {
        let row = rng.pick(m);
        out.data_mut()[i * m..(i + 1) * m].copy_from_slice(basis.matrix().row(row));
    }
    Ok(out)
}

/// Sinusoid factor `cos(f * x)` over `x = linspace(0, pi, m)`.
fn sinusoid(f: f64, m: usize) -> Vec<f32> {
    linspace(0.0, std::f32::consts::PI, m)
        .data()
        .iter()
        .map(|&x| (f * x as f64).cos() as f32)
        .collect()
}

/// Sum of outer-product terms `alpha * g(f_row) g(f_col)^T`, normalized to
/// unit Frobenius norm.
pub fn ghaar_kernel_from_terms(m: usize, terms: &[(f64, f64, f32)]) -> Tensor {
    let mut k = Tensor::zeros(&[m, m]);
    for &(f_row, f_col, alpha) in terms {
        let gr = sinusoid(f_row, m);
        let gc = sinusoid(f_col, m);
        for y in 0..m {
            for x in 0..m {
                k.data_mut()[y * m + x] += alpha * gr[y] * gc[x];
            }
        }
    }
    let norm = k.frob_norm().max(1e-12) as f32;
    k.scale(1.0 / norm)
}

pub fn ghaar_filters(
    spec: &FilterSpec,
    style: GhaarStyle,
    rng: &mut RngStream,
) -> Result<Tensor, FilterError> {
    let (h, w) = spec.kernel;
    if h != w || h < 2 {
        return Err(FilterError::KernelTooSmall { m: h.min(w) });
    }
    let m = h;
    let hi = 2.0 * (m as f64 - 1.0);
    let mut out = Tensor::zeros(&[spec.count, m, m]);
    for i in 0..spec.count {
        let terms: Vec<(f64, f64, f32)> = match style {
            GhaarStyle::HaarTriple => {
                let f1 = rng.uniform_f64(0.0, hi);
                let a1 = rng.standard_normal() as f32;
                let f2 = rng.uniform_f64(0.0, hi);
                let a2 = rng.standard_normal() as f32;
                let f3 = rng.uniform_f64(0.0, hi);
                let a3 = rng.standard_normal() as f32;
                vec![(0.0, f1, a1), (f2, 0.0, a2), (f3, f3, a3)]
            }
            GhaarStyle::FreePairs => (0..3)
                .map(|_| {
                    let fr = rng.uniform_f64(0.0, hi);
                    let fc = rng.uniform_f64(0.0, hi);
                    let a = rng.standard_normal() as f32;
                    (fr, fc, a)
                })
                .collect(),
        };
        let k = ghaar_kernel_from_terms(m, &terms);
        out.data_mut()[i * m * m..(i + 1) * m * m].copy_from_slice(k.data());
    }
    Ok(out)
}

/// Exponent sequence for one Psine kernel: `P` uniform in {1,2,3},
/// `l = 2P + 1` exponents uniform in {1..P}, patched to contain both an even
/// and an odd value whenever `P >= 2`, so `l >= 2 max(p) + 1` always holds.
pub fn psine_powers(rng: &mut RngStream) -> Vec<usize> {
    let p_max = 1 + rng.pick(3);
    let l = 2 * p_max + 1;
    let mut powers: Vec<usize> = (0..l).map(|_| 1 + rng.pick(p_max)).collect();
    if p_max >= 2 {
        if powers.iter().all(|p| p % 2 == 0) {
            powers[0] = 1;
        } else if powers.iter().all(|p| p % 2 == 1) {
            powers[0] = 2;
        }
    }
    powers
}

/// Weighted sum of element-wise powers of sinusoid outer products, whitened
/// to zero mean and unit Frobenius norm.
pub fn psine_kernel_from_terms(m: usize, terms: &[(f64, f64, usize, f32)]) -> Tensor {
    let mut k = Tensor::zeros(&[m, m]);
    for &(f_row, f_col, power, weight) in terms {
        let gr = sinusoid(f_row, m);
        let gc = sinusoid(f_col, m);
        for y in 0..m {
            for x in 0..m {
                k.data_mut()[y * m + x] += weight * (gr[y] * gc[x]).powi(power as i32);
            }
        }
    }
    let mean = k.mean_f64() as f32;
    for v in k.data_mut() {
        *v -= mean;
    }
    let norm = k.frob_norm().max(1e-12) as f32;
    k.scale(1.0 / norm)
}

pub fn psine_filters(spec: &FilterSpec, rng: &mut RngStream) -> Result<Tensor, FilterError> {
    let (h, w) = spec.kernel;
    if h != w || h < 2 {
        return Err(FilterError::KernelTooSmall { m: h.min(w) });
    }
    let m = h;
    let mut out = Tensor::zeros(&[spec.count, m, m]);
    for i in 0..spec.count {
        let powers = psine_powers(rng);
        let terms: Vec<(f64, f64, usize, f32)> = powers
            .iter()
            .map(|&p| {
                let fr = rng.uniform_f64(1.0, 5.0);
                let fc = rng.uniform_f64(1.0, 5.0);
                let wgt = rng.standard_normal() as f32;
                (fr, fc, p, wgt)
            })
            .collect();
        let k = psine_kernel_from_terms(m, &terms);
        out.data_mut()[i * m * m..(i + 1) * m * m].copy_from_slice(k.data());
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ColumnDistribution {
    /// Gaussian kernel density estimate with Scott's-rule bandwidth.
    #[default]
    Kde,
    /// Normal fit to the column's mean and sample variance.
    NormalFit,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GuidedSteerCfg {
    pub distribution: ColumnDistribution,
    /// Center the guide rows before the eigendecomposition and add the mean
    /// back after projection. Off by default.
    pub centered: bool,
}

/// Generate per-layer filter banks whose steering-weight distributions match
/// a guide set.
///
/// The shared basis comes from the eigendecomposition of the pooled guide
/// Gram matrix; each layer's per-column weight distribution is resampled
/// independently (`counts[l]` rows for layer `l`).
pub fn guided_steer_filters(
    counts: &[usize],
    layer_guides: &[Tensor],
    cfg: GuidedSteerCfg,
    rng: &RngStream,
) -> Result<Vec<Tensor>, FilterError> {
    if counts.len() != layer_guides.len() {
        return Err(FilterError::MissingGuide);
    }
    if layer_guides.is_empty() {
        return Err(FilterError::GuideTooSmall { rows: 0 });
    }
    let m = layer_guides[0].shape()[1];
    let mut total_rows = 0usize;
    for g in layer_guides {
        if g.shape().len() != 2 || g.shape()[1] != m {
            return Err(FilterError::KernelMismatch {
                expected: (1, m),
                got: (1, g.shape()[g.shape().len() - 1]),
            });
        }
        total_rows += g.shape()[0];
    }
    if total_rows < 2 {
        return Err(FilterError::GuideTooSmall { rows: total_rows });
    }

    // pooled guide matrix
    let mut pooled = Tensor::zeros(&[total_rows, m]);
    let mut row = 0;
    for g in layer_guides {
        let rows = g.shape()[0];
        pooled.data_mut()[row * m..(row + rows) * m].copy_from_slice(g.data());
        row += rows;
    }
    let col_mean: Vec<f32> = if cfg.centered {
        (0..m)
            .map(|j| {
                (0..total_rows)
                    .map(|i| pooled.at2(i, j) as f64)
                    .sum::<f64>() as f32
                    / total_rows as f32
            })
            .collect()
    } else {
        vec![0.0; m]
    };
    let mut centered = pooled.clone();
    if cfg.centered {
        for i in 0..total_rows {
            for j in 0..m {
                let v = centered.at2(i, j) - col_mean[j];
                centered.set2(i, j, v);
            }
        }
    }
    let gram = centered.transpose2().matmul(&centered);
    let (_evals, evecs) = sym_eig(&gram)?;
    let basis = evecs.transpose2(); // row i = i-th eigenvector

    let mut outputs = Vec::with_capacity(layer_guides.len());
    for (layer_idx, guide) in layer_guides.iter().enumerate() {
        let n = counts[layer_idx];
        let rows = guide.shape()[0];
        let mut layer_rng = rng.derive(layer_idx as u64);
        // project this layer's guides onto the shared basis
        let mut shifted = guide.clone();
        if cfg.centered {
            for i in 0..rows {
                for j in 0..m {
                    let v = shifted.at2(i, j) - col_mean[j];
                    shifted.set2(i, j, v);
                }
            }
        }
        let proj = shifted.matmul(&basis.transpose2()); // rows x m
        let mut weights = Tensor::zeros(&[n, m]);
        for j in 0..m {
            let col = Tensor::from_vec(&[rows], (0..rows).map(|i| proj.at2(i, j)).collect());
            let drawn = match cfg.distribution {
                ColumnDistribution::Kde => kde_sample(&col, n, &mut layer_rng)?,
                ColumnDistribution::NormalFit => {
                    let mean = col.mean_f64();
                    let var = if rows < 2 {
                        0.0
                    } else {
                        col.data()
                            .iter()
                            .map(|&v| (v as f64 - mean).powi(2))
                            .sum::<f64>()
                            / (rows as f64 - 1.0)
                    };
                    crate::numerics::gaussian_sample(mean as f32, var as f32, n, &mut layer_rng)
                }
            };
            for i in 0..n {
                weights.set2(i, j, drawn.data()[i]);
            }
        }
        let mut filters = weights.matmul(&basis);
        if cfg.centered {
            for i in 0..n {
                for j in 0..m {
                    let v = filters.at2(i, j) + col_mean[j];
                    filters.set2(i, j, v);
                }
            }
        }
        outputs.push(filters);
    }
    Ok(outputs)
}

/// Kaiming-uniform kernels, never trained.
pub fn unchanged_random(spec: &FilterSpec, fan_in: usize, rng: &mut RngStream) -> Tensor {
    let (h, w) = spec.kernel;
    kaiming_uniform(fan_in, spec.count * h * w, rng).reshape(&[spec.count, h, w])
}

/// Pass the guide kernels through verbatim.
pub fn unchanged_guide(guide: &Tensor) -> Tensor {
    guide.clone()
}
