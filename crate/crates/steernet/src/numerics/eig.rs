use super::{NumericsError, Tensor};

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// The input is symmetrized as (A + Aᵀ)/2 before iterating, and the sweep
/// runs in `f64` internally. Returns eigenvalues sorted descending and the
/// matching eigenvectors as the *columns* of an orthonormal matrix, so
/// `A ≈ V diag(λ) Vᵀ`.
pub fn sym_eig(a: &Tensor) -> Result<(Tensor, Tensor), NumericsError> {
    if a.shape().len() != 2 || a.shape()[0] != a.shape()[1] {
        let (r, c) = if a.shape().len() == 2 {
            (a.shape()[0], a.shape()[1])
        } else {
            (a.numel(), 0)
        };
        return Err(NumericsError::NotSquare { rows: r, cols: c });
    }
    let n = a.shape()[0];

    // symmetrized f64 working copy
    let mut m = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..n {
            m[i * n + j] = 0.5 * (a.at2(i, j) as f64 + a.at2(j, i) as f64);
        }
    }
    let mut v = vec![0.0f64; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let max_sweeps = 60;
    let mut converged = false;
    for _ in 0..max_sweeps {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[p * n + q].abs();
            }
        }
        if off < 1e-13 * (1.0 + frob(&m, n)) {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq.abs() < f64::MIN_POSITIVE {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = 0.5 * (aqq - app) / apq;
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    let sgn = if theta >= 0.0 { 1.0 } else { -1.0 };
                    sgn / (theta.abs() + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // rotate rows/cols p and q
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        // final residual check before giving up
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[p * n + q].abs();
            }
        }
        if off >= 1e-8 * (1.0 + frob(&m, n)) {
            return Err(NumericsError::NoConvergence);
        }
    }

    // sort descending by eigenvalue, carrying columns along
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m[j * n + j]
            .partial_cmp(&m[i * n + i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut evals = vec![0.0f32; n];
    let mut evecs = vec![0.0f32; n * n];
    for (dst, &src) in order.iter().enumerate() {
        evals[dst] = m[src * n + src] as f32;
        for k in 0..n {
            evecs[k * n + dst] = v[k * n + src] as f32;
        }
    }
    Ok((
        Tensor::from_vec(&[n], evals),
        Tensor::from_vec(&[n, n], evecs),
    ))
}

fn frob(m: &[f64], n: usize) -> f64 {
    m.iter().take(n * n).map(|&x| x * x).sum::<f64>().sqrt()
}
