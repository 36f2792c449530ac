use crate::numerics::Tensor;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum LossError {
    ZeroClassCount { task: usize },
    Shape { detail: String },
}

impl fmt::Display for LossError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ZeroClassCount { task } => {
                write!(f, "task {task} has a zero class count")
            }
            Self::Shape { detail } => write!(f, "loss shape error: {detail}"),
        }
    }
}

impl std::error::Error for LossError {}

/// Focal multi-label BCE configuration. `gamma` is the focal exponent
/// (default 1); `balance = false` forces all class and task weights to one,
/// which with `gamma = 0` reduces the loss to plain BCE.
#[derive(Debug, Clone, Copy)]
pub struct FocalCfg {
    pub gamma: f64,
    pub balance: bool,
}

impl Default for FocalCfg {
    fn default() -> Self {
        FocalCfg {
            gamma: 1.0,
            balance: true,
        }
    }
}

/// Class-balancing weights per task: `a_pos = 1/(1 + c_pos/c_neg)`,
/// `a_neg = 1/(1 + c_neg/c_pos)`, and the inter-task weight
/// `w_t = 1/(1 + c_t * sum_{i != t} 1/c_i)` with `c_t = c_pos + c_neg`.
pub(crate) fn balance_weights(
    class_counts: &[(f64, f64)],
) -> Result<(Vec<(f64, f64)>, Vec<f64>), LossError> {
    for (t, &(p, n)) in class_counts.iter().enumerate() {
        if p <= 0.0 || n <= 0.0 {
            return Err(LossError::ZeroClassCount { task: t });
        }
    }
    let intra: Vec<(f64, f64)> = class_counts
        .iter()
        .map(|&(p, n)| (1.0 / (1.0 + p / n), 1.0 / (1.0 + n / p)))
        .collect();
    let totals: Vec<f64> = class_counts.iter().map(|&(p, n)| p + n).collect();
    let inter: Vec<f64> = (0..class_counts.len())
        .map(|t| {
            let others: f64 = totals
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != t)
                .map(|(_, &c)| 1.0 / c)
                .sum();
            1.0 / (1.0 + totals[t] * others)
        })
        .collect();
    Ok((intra, inter))
}

const RESCALE_A: f64 = 0.99999;
const RESCALE_B: f64 = 0.000005;

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Multi-label focal BCE with class balancing over raw logits `(N, T)`.
///
/// Model outputs pass through the rescaled sigmoid
/// `p = 0.99999 * sigmoid(z) + 0.000005`, masked entries contribute zero,
/// and the unreduced matrix is summed across tasks then averaged across
/// rows. Returns the scalar loss and its gradient w.r.t. the raw logits.
pub fn focal_multilabel_bce(
    raw: &Tensor,
    targets: &Tensor,
    mask: Option<&Tensor>,
    class_counts: &[(f64, f64)],
    cfg: &FocalCfg,
) -> Result<(f64, Tensor), LossError> {
    let s = raw.shape();
    if s.len() != 2 || targets.shape() != s {
        return Err(LossError::Shape {
            detail: format!("raw {s:?} vs targets {:?}", targets.shape()),
        });
    }
    if let Some(m) = mask {
        if m.shape() != s {
            return Err(LossError::Shape {
                detail: format!("mask {:?} vs raw {s:?}", m.shape()),
            });
        }
    }
    let (n, t_count) = (s[0], s[1]);
    if class_counts.len() != t_count {
        return Err(LossError::Shape {
            detail: format!("{} class counts for {t_count} tasks", class_counts.len()),
        });
    }
    let (intra, inter) = if cfg.balance {
        balance_weights(class_counts)?
    } else {
        balance_weights(class_counts)?; // still validate counts
        (vec![(1.0, 1.0); t_count], vec![1.0; t_count])
    };

    let g = cfg.gamma;
    let mut total = 0.0f64;
    let mut grad = Tensor::zeros(s);
    for ni in 0..n {
        for ti in 0..t_count {
            let m = mask.map_or(1.0, |mt| mt.at2(ni, ti) as f64);
            if m == 0.0 {
                continue;
            }
            let z = raw.at2(ni, ti) as f64;
            let y = targets.at2(ni, ti) as f64;
            let sg = sigmoid(z);
            let p = RESCALE_A * sg + RESCALE_B;
            let (a_pos, a_neg) = intra[ti];
            let wt = inter[ti];
            let lp = p.ln();
            let l1p = (1.0 - p).ln();
            let w_pos = a_pos * (1.0 - p).powf(g);
            let w_neg = a_neg * p.powf(g);
            let elem = -m * wt * (w_pos * y * lp + w_neg * (1.0 - y) * l1p);
            total += elem;

            let mut ddp = a_pos * y * ((1.0 - p).powf(g) / p)
                - a_neg * (1.0 - y) * (p.powf(g) / (1.0 - p));
            if g != 0.0 {
                ddp += -a_pos * y * g * (1.0 - p).powf(g - 1.0) * lp
                    + a_neg * (1.0 - y) * g * p.powf(g - 1.0) * l1p;
            }
            let dl_dp = -m * wt * ddp;
            let dp_dz = RESCALE_A * sg * (1.0 - sg);
            grad.set2(ni, ti, (dl_dp * dp_dz / n as f64) as f32);
        }
    }
    Ok((total / n as f64, grad))
}

/// Pixel-wise BCE over raw logits, mean-reduced, no class balancing.
/// Computed in the numerically stable logits form. Returns the scalar loss
/// and its gradient w.r.t. the logits.
pub fn pixelwise_bce(raw: &Tensor, targets: &Tensor) -> Result<(f64, Tensor), LossError> {
    if raw.shape() != targets.shape() {
        return Err(LossError::Shape {
            detail: format!("raw {:?} vs targets {:?}", raw.shape(), targets.shape()),
        });
    }
    let count = raw.numel() as f64;
    if count == 0.0 {
        return Err(LossError::Shape {
            detail: "empty tensors".into(),
        });
    }
    let mut total = 0.0f64;
    let mut grad = Tensor::zeros(raw.shape());
    for (i, (&zf, &yf)) in raw.data().iter().zip(targets.data()).enumerate() {
        let z = zf as f64;
        let y = yf as f64;
        total += z.max(0.0) - z * y + (1.0 + (-z.abs()).exp()).ln();
        grad.data_mut()[i] = ((sigmoid(z) - y) / count) as f32;
    }
    Ok((total / count, grad))
}
