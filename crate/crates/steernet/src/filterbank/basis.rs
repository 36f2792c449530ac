use crate::numerics::Tensor;

/// Flattened orthonormal 2-D DCT-II basis.
///
/// Row `kh * w + kw` of `matrix` is the outer product of the 1-D factors at
/// frequencies `kh` (rows) and `kw` (columns), flattened row-major. The 1-D
/// factor at frequency `k` over `N` points is `s * cos(pi/N * k * (x + 0.5))`
/// with `s = sqrt(1/N)` for `k = 0` and `sqrt(2/N)` otherwise, which makes
/// the basis orthonormal. `order` ranks rows from lowest to highest
/// frequency, sorting by `(kh + kw, kh)` for a stable tie-break.
#[derive(Debug, Clone)]
pub struct Basis {
    h: usize,
    w: usize,
    matrix: Tensor,
    order: Vec<usize>,
    rank_to_row: Vec<usize>,
    factor_index: Vec<(usize, usize)>,
}

/// 1-D DCT-II factor matrix: row k holds the length-`n` basis vector.
pub(crate) fn dct2_factors(n: usize) -> Tensor {
    let mut out = Tensor::zeros(&[n, n]);
    for k in 0..n {
        let s = if k == 0 {
            (1.0 / n as f64).sqrt()
        } else {
            (2.0 / n as f64).sqrt()
        };
        for x in 0..n {
            let angle = std::f64::consts::PI / n as f64 * k as f64 * (x as f64 + 0.5);
            out.set2(k, x, (s * angle.cos()) as f32);
        }
    }
    out
}

impl Basis {
    pub fn dct2(h: usize, w: usize) -> Basis {
        assert!(h >= 1 && w >= 1);
        let fh = dct2_factors(h);
        let fw = dct2_factors(w);
        let m = h * w;
        let mut matrix = Tensor::zeros(&[m, m]);
        let mut factor_index = Vec::with_capacity(m);
        for kh in 0..h {
            for kw in 0..w {
                let row = kh * w + kw;
                for y in 0..h {
                    for x in 0..w {
                        matrix.set2(row, y * w + x, fh.at2(kh, y) * fw.at2(kw, x));
                    }
                }
                factor_index.push((kh, kw));
            }
        }
        // rank rows by (kh + kw, kh) ascending
        let mut by_rank: Vec<usize> = (0..m).collect();
        by_rank.sort_by_key(|&r| {
            let (kh, kw) = factor_index[r];
            (kh + kw, kh)
        });
        let mut order = vec![0usize; m];
        for (rank, &row) in by_rank.iter().enumerate() {
            order[row] = rank;
        }
        Basis {
            h,
            w,
            matrix,
            order,
            rank_to_row: by_rank,
            factor_index,
        }
    }

    pub fn sizes(&self) -> (usize, usize) {
        (self.h, self.w)
    }

    pub fn m(&self) -> usize {
        self.h * self.w
    }

    pub fn matrix(&self) -> &Tensor {
        &self.matrix
    }

    /// Frequency rank of a basis row.
    pub fn rank_of_row(&self, row: usize) -> usize {
        self.order[row]
    }

    /// Basis row holding the given frequency rank.
    pub fn row_at_rank(&self, rank: usize) -> usize {
        self.rank_to_row[rank]
    }

    /// 1-D factor frequencies `(kh, kw)` of a basis row.
    pub fn factors(&self, row: usize) -> (usize, usize) {
        self.factor_index[row]
    }

    /// Basis row reshaped to its `(h, w)` kernel.
    pub fn row_kernel(&self, row: usize) -> Tensor {
        Tensor::from_vec(&[self.h, self.w], self.matrix.row(row).to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_factors_are_haar_vectors() {
        // [1,1]/sqrt(2) and [1,-1]/sqrt(2), the 2-point Haar pair up to scale
        let f = dct2_factors(2);
        let r = 0.5f32.sqrt();
        assert!((f.at2(0, 0) - r).abs() < 1e-6);
        assert!((f.at2(0, 1) - r).abs() < 1e-6);
        assert!((f.at2(1, 0) - r).abs() < 1e-6);
        assert!((f.at2(1, 1) + r).abs() < 1e-6);
    }

    #[test]
    fn lowest_rank_row_is_constant() {
        let b = Basis::dct2(3, 3);
        let row = b.row_at_rank(0);
        assert_eq!(b.factors(row), (0, 0));
        for &v in b.row_kernel(row).data() {
            assert!((v - 1.0 / 3.0).abs() < 1e-6);
        }
    }

    #[test]
    fn orthonormal_for_all_small_sizes() {
        for h in 2..=5 {
            for w in 2..=5 {
                let b = Basis::dct2(h, w);
                let gram = b.matrix().matmul(&b.matrix().transpose2());
                let m = b.m();
                for i in 0..m {
                    for j in 0..m {
                        let expect = if i == j { 1.0 } else { 0.0 };
                        assert!(
                            (gram.at2(i, j) - expect).abs() < 1e-5,
                            "h={h} w={w} gram[{i},{j}]={}",
                            gram.at2(i, j)
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn rank_order_sorts_by_frequency_sum_then_row() {
        let b = Basis::dct2(3, 3);
        let ranked: Vec<(usize, usize)> = (0..9).map(|r| b.factors(b.row_at_rank(r))).collect();
        assert_eq!(
            ranked,
            vec![
                (0, 0),
                (0, 1),
                (1, 0),
                (0, 2),
                (1, 1),
                (2, 0),
                (1, 2),
                (2, 1),
                (2, 2)
            ]
        );
    }
}
