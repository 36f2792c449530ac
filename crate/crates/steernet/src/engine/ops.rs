//! Layer kernels on (N, C, H, W) tensors. Dot products and statistics
//! accumulate in `f64`; gradient scatters run in `f64` buffers before
//! rounding once to `f32`.

use crate::numerics::Tensor;

#[derive(Debug, Clone, Copy)]
pub(crate) struct ConvAttrs {
    pub kh: usize,
    pub kw: usize,
    pub stride: usize,
    pub padding: usize,
    pub groups: usize,
    pub in_channels: usize,
    pub out_channels: usize,
}

pub(crate) fn conv_out_hw(a: &ConvAttrs, h: usize, w: usize) -> Option<(usize, usize)> {
    let oh = (h + 2 * a.padding).checked_sub(a.kh)? / a.stride + 1;
    let ow = (w + 2 * a.padding).checked_sub(a.kw)? / a.stride + 1;
    if oh == 0 || ow == 0 {
        None
    } else {
        Some((oh, ow))
    }
}

/// Cross-correlation (no kernel flip). Weight shape (O, I/g, kh, kw).
pub(crate) fn conv2d_forward(
    x: &Tensor,
    weight: &Tensor,
    bias: Option<&Tensor>,
    a: &ConvAttrs,
) -> Tensor {
    let (n, _c, h, w) = dims4(x);
    let (oh, ow) = conv_out_hw(a, h, w).expect("conv output must be non-empty");
    let ipg = a.in_channels / a.groups;
    let opg = a.out_channels / a.groups;
    let mut out = Tensor::zeros(&[n, a.out_channels, oh, ow]);

    // pointwise fast path: channel mixing per pixel
    if a.kh == 1 && a.kw == 1 && a.stride == 1 && a.padding == 0 && a.groups == 1 {
        let hw = h * w;
        let mut acc = vec![0.0f64; hw];
        for ni in 0..n {
            for o in 0..a.out_channels {
                let b = bias.map_or(0.0, |t| t.data()[o] as f64);
                acc.iter_mut().for_each(|v| *v = b);
                for i in 0..a.in_channels {
                    let wv = weight.data()[o * a.in_channels + i] as f64;
                    let xs = &x.data()[(ni * a.in_channels + i) * hw..][..hw];
                    for (av, &xv) in acc.iter_mut().zip(xs) {
                        *av += wv * xv as f64;
                    }
                }
                let os = &mut out.data_mut()[(ni * a.out_channels + o) * hw..][..hw];
                for (ov, &av) in os.iter_mut().zip(&acc) {
                    *ov = av as f32;
                }
            }
        }
        return out;
    }

    let p = a.padding as isize;
    let s = a.stride as isize;
    // valid kernel-tap range along one axis for a given output position
    let tap_range = |o_pos: usize, k: usize, limit: usize| -> (usize, usize, usize) {
        let origin = o_pos as isize * s - p;
        let lo = (-origin).clamp(0, k as isize) as usize;
        let hi = ((limit as isize - origin).clamp(0, k as isize)) as usize;
        ((origin + lo as isize) as usize, lo, hi)
    };
    for ni in 0..n {
        for o in 0..a.out_channels {
            let g = o / opg;
            let b = bias.map_or(0.0, |t| t.data()[o] as f64);
            for oy in 0..oh {
                let (iy0, ky_lo, ky_hi) = tap_range(oy, a.kh, h);
                for ox in 0..ow {
                    let (ix0, kx_lo, kx_hi) = tap_range(ox, a.kw, w);
                    let width = kx_hi.saturating_sub(kx_lo);
                    let mut acc = b;
                    for j in 0..ipg {
                        let ic = g * ipg + j;
                        let xplane = &x.data()[(ni * a.in_channels + ic) * h * w..][..h * w];
                        let wbase = ((o * ipg) + j) * a.kh * a.kw;
                        for (t, ky) in (ky_lo..ky_hi).enumerate() {
                            let xrow = &xplane[(iy0 + t) * w + ix0..][..width];
                            let wrow = &weight.data()[wbase + ky * a.kw + kx_lo..][..width];
                            for (&xv, &wv) in xrow.iter().zip(wrow) {
                                acc += wv as f64 * xv as f64;
                            }
                        }
                    }
                    out.data_mut()[((ni * a.out_channels + o) * oh + oy) * ow + ox] = acc as f32;
                }
            }
        }
    }
    out
}

/// Gradients of a conv2d. `want_dw` and `want_dx` gate the kernel-gradient
/// and input-gradient loop nests separately: training skips `dw` for fixed
/// kernels and `dx` for graph-input wires, and the skipped work is where
/// the fixed-filter speedup comes from.
pub(crate) fn conv2d_backward(
    x: &Tensor,
    weight: &Tensor,
    has_bias: bool,
    a: &ConvAttrs,
    dout: &Tensor,
    want_dw: bool,
    want_dx: bool,
) -> (Option<Tensor>, Option<Tensor>, Option<Tensor>) {
    let (n, _c, h, w) = dims4(x);
    let (_, _, oh, ow) = dims4(dout);
    let ipg = a.in_channels / a.groups;
    let opg = a.out_channels / a.groups;
    let mut dx = vec![0.0f64; if want_dx { x.numel() } else { 0 }];
    let mut dw = vec![0.0f64; if want_dw { weight.numel() } else { 0 }];
    let mut db = vec![0.0f64; a.out_channels];
    let p = a.padding as isize;
    let s = a.stride as isize;

    let tap_range = |o_pos: usize, k: usize, limit: usize| -> (usize, usize, usize) {
        let origin = o_pos as isize * s - p;
        let lo = (-origin).clamp(0, k as isize) as usize;
        let hi = ((limit as isize - origin).clamp(0, k as isize)) as usize;
        ((origin + lo as isize) as usize, lo, hi)
    };
    for ni in 0..n {
        for o in 0..a.out_channels {
            let g = o / opg;
            for oy in 0..oh {
                let (iy0, ky_lo, ky_hi) = tap_range(oy, a.kh, h);
                for ox in 0..ow {
                    let d = dout.data()[((ni * a.out_channels + o) * oh + oy) * ow + ox] as f64;
                    if has_bias {
                        db[o] += d;
                    }
                    if d == 0.0 || (!want_dx && !want_dw) {
                        continue;
                    }
                    let (ix0, kx_lo, kx_hi) = tap_range(ox, a.kw, w);
                    let width = kx_hi.saturating_sub(kx_lo);
                    for j in 0..ipg {
                        let ic = g * ipg + j;
                        let xbase = (ni * a.in_channels + ic) * h * w;
                        let wbase = ((o * ipg) + j) * a.kh * a.kw;
                        for (t, ky) in (ky_lo..ky_hi).enumerate() {
                            let xoff = xbase + (iy0 + t) * w + ix0;
                            let woff = wbase + ky * a.kw + kx_lo;
                            if want_dx {
                                let wrow = &weight.data()[woff..][..width];
                                let dxrow = &mut dx[xoff..][..width];
                                for (dv, &wv) in dxrow.iter_mut().zip(wrow) {
                                    *dv += wv as f64 * d;
                                }
                            }
                            if want_dw {
                                let xrow = &x.data()[xoff..][..width];
                                let dwrow = &mut dw[woff..][..width];
                                for (dv, &xv) in dwrow.iter_mut().zip(xrow) {
                                    *dv += xv as f64 * d;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    let dx = want_dx.then(|| Tensor::from_vec(x.shape(), dx.iter().map(|&v| v as f32).collect()));
    let dw = want_dw
        .then(|| Tensor::from_vec(weight.shape(), dw.iter().map(|&v| v as f32).collect()));
    let db = has_bias.then(|| {
        Tensor::from_vec(&[a.out_channels], db.iter().map(|&v| v as f32).collect())
    });
    (dx, dw, db)
}

pub(crate) const BN_EPS: f64 = 1e-5;

/// Train-mode batch normalization; returns the output and the biased batch
/// mean/variance per channel (needed by backward and by the running-stat
/// update).
pub(crate) fn bn_forward_train(
    x: &Tensor,
    scale: &Tensor,
    shift: &Tensor,
) -> (Tensor, Vec<f64>, Vec<f64>) {
    let (n, c, h, w) = dims4(x);
    let plane = h * w;
    let count = (n * plane) as f64;
    let mut mean = vec![0.0f64; c];
    let mut var = vec![0.0f64; c];
    for ci in 0..c {
        let mut s = 0.0f64;
        for ni in 0..n {
            let xs = &x.data()[(ni * c + ci) * plane..][..plane];
            s += xs.iter().map(|&v| v as f64).sum::<f64>();
        }
        let m = s / count;
        let mut v2 = 0.0f64;
        for ni in 0..n {
            let xs = &x.data()[(ni * c + ci) * plane..][..plane];
            v2 += xs.iter().map(|&v| (v as f64 - m) * (v as f64 - m)).sum::<f64>();
        }
        mean[ci] = m;
        var[ci] = v2 / count;
    }
    let mut out = Tensor::zeros(x.shape());
    for ni in 0..n {
        for ci in 0..c {
            let inv = 1.0 / (var[ci] + BN_EPS).sqrt();
            let g = scale.data()[ci] as f64;
            let b = shift.data()[ci] as f64;
            let src = &x.data()[(ni * c + ci) * plane..][..plane];
            let dst = &mut out.data_mut()[(ni * c + ci) * plane..][..plane];
            for (d, &s) in dst.iter_mut().zip(src) {
                *d = (g * ((s as f64 - mean[ci]) * inv) + b) as f32;
            }
        }
    }
    (out, mean, var)
}

pub(crate) fn bn_forward_eval(
    x: &Tensor,
    scale: &Tensor,
    shift: &Tensor,
    running_mean: &Tensor,
    running_var: &Tensor,
) -> Tensor {
    let (n, c, h, w) = dims4(x);
    let plane = h * w;
    let mut out = Tensor::zeros(x.shape());
    for ni in 0..n {
        for ci in 0..c {
            let inv = 1.0 / (running_var.data()[ci] as f64 + BN_EPS).sqrt();
            let m = running_mean.data()[ci] as f64;
            let g = scale.data()[ci] as f64;
            let b = shift.data()[ci] as f64;
            let src = &x.data()[(ni * c + ci) * plane..][..plane];
            let dst = &mut out.data_mut()[(ni * c + ci) * plane..][..plane];
            for (d, &s) in dst.iter_mut().zip(src) {
                *d = (g * ((s as f64 - m) * inv) + b) as f32;
            }
        }
    }
    out
}

/// Backward through train-mode batch statistics.
pub(crate) fn bn_backward_train(
    x: &Tensor,
    scale: &Tensor,
    mean: &[f64],
    var: &[f64],
    dout: &Tensor,
) -> (Tensor, Tensor, Tensor) {
    let (n, c, h, w) = dims4(x);
    let plane = h * w;
    let count = (n * plane) as f64;
    let mut dx = Tensor::zeros(x.shape());
    let mut dscale = vec![0.0f64; c];
    let mut dshift = vec![0.0f64; c];
    for ci in 0..c {
        let inv = 1.0 / (var[ci] + BN_EPS).sqrt();
        let mut sum_dy = 0.0f64;
        let mut sum_dy_xhat = 0.0f64;
        for ni in 0..n {
            let xs = &x.data()[(ni * c + ci) * plane..][..plane];
            let ds = &dout.data()[(ni * c + ci) * plane..][..plane];
            for (&xv, &dv) in xs.iter().zip(ds) {
                let xhat = (xv as f64 - mean[ci]) * inv;
                sum_dy += dv as f64;
                sum_dy_xhat += dv as f64 * xhat;
            }
        }
        dscale[ci] = sum_dy_xhat;
        dshift[ci] = sum_dy;
        let g = scale.data()[ci] as f64;
        for ni in 0..n {
            let xs = &x.data()[(ni * c + ci) * plane..][..plane];
            let ds = &dout.data()[(ni * c + ci) * plane..][..plane];
            let dst = &mut dx.data_mut()[(ni * c + ci) * plane..][..plane];
            for ((&xv, &dv), dxv) in xs.iter().zip(ds).zip(dst.iter_mut()) {
                let xhat = (xv as f64 - mean[ci]) * inv;
                *dxv = (g * inv * (dv as f64 - sum_dy / count - xhat * sum_dy_xhat / count))
                    as f32;
            }
        }
    }
    (
        dx,
        Tensor::from_vec(&[c], dscale.iter().map(|&v| v as f32).collect()),
        Tensor::from_vec(&[c], dshift.iter().map(|&v| v as f32).collect()),
    )
}

pub(crate) fn bn_backward_eval(
    x: &Tensor,
    scale: &Tensor,
    running_mean: &Tensor,
    running_var: &Tensor,
    dout: &Tensor,
) -> (Tensor, Tensor, Tensor) {
    let (n, c, h, w) = dims4(x);
    let plane = h * w;
    let mut dx = Tensor::zeros(x.shape());
    let mut dscale = vec![0.0f64; c];
    let mut dshift = vec![0.0f64; c];
    for ci in 0..c {
        let inv = 1.0 / (running_var.data()[ci] as f64 + BN_EPS).sqrt();
        let m = running_mean.data()[ci] as f64;
        let g = scale.data()[ci] as f64;
        for ni in 0..n {
            let xs = &x.data()[(ni * c + ci) * plane..][..plane];
            let ds = &dout.data()[(ni * c + ci) * plane..][..plane];
            let dst = &mut dx.data_mut()[(ni * c + ci) * plane..][..plane];
            for ((&xv, &dv), dxv) in xs.iter().zip(ds).zip(dst.iter_mut()) {
                dscale[ci] += dv as f64 * ((xv as f64 - m) * inv);
                dshift[ci] += dv as f64;
                *dxv = (g * inv * dv as f64) as f32;
            }
        }
    }
    (
        dx,
        Tensor::from_vec(&[c], dscale.iter().map(|&v| v as f32).collect()),
        Tensor::from_vec(&[c], dshift.iter().map(|&v| v as f32).collect()),
    )
}

/// Interpolation taps for one axis: output index -> (i0, i1, frac).
/// Half-pixel alignment with corners not aligned; negative source indices
/// clamp to zero.
fn bilinear_taps(out_len: usize, in_len: usize, factor: usize) -> Vec<(usize, usize, f64)> {
    (0..out_len)
        .map(|o| {
            let mut src = (o as f64 + 0.5) / factor as f64 - 0.5;
            if src < 0.0 {
                src = 0.0;
            }
            let mut i0 = src.floor() as usize;
            if i0 > in_len - 1 {
                i0 = in_len - 1;
            }
            let i1 = (i0 + 1).min(in_len - 1);
            (i0, i1, src - i0 as f64)
        })
        .collect()
}

pub(crate) fn bilinear_up_forward(x: &Tensor, factor: usize) -> Tensor {
    let (n, c, h, w) = dims4(x);
    let (oh, ow) = (h * factor, w * factor);
    let ytaps = bilinear_taps(oh, h, factor);
    let xtaps = bilinear_taps(ow, w, factor);
    let mut out = Tensor::zeros(&[n, c, oh, ow]);
    for ni in 0..n {
        for ci in 0..c {
            let src = &x.data()[(ni * c + ci) * h * w..][..h * w];
            let dst = &mut out.data_mut()[(ni * c + ci) * oh * ow..][..oh * ow];
            for (oy, &(y0, y1, dy)) in ytaps.iter().enumerate() {
                for (ox, &(x0, x1, dxf)) in xtaps.iter().enumerate() {
                    let v = (1.0 - dy) * (1.0 - dxf) * src[y0 * w + x0] as f64
                        + (1.0 - dy) * dxf * src[y0 * w + x1] as f64
                        + dy * (1.0 - dxf) * src[y1 * w + x0] as f64
                        + dy * dxf * src[y1 * w + x1] as f64;
                    dst[oy * ow + ox] = v as f32;
                }
            }
        }
    }
    out
}

pub(crate) fn bilinear_up_backward(x_shape: &[usize], factor: usize, dout: &Tensor) -> Tensor {
    let (n, c, h, w) = (x_shape[0], x_shape[1], x_shape[2], x_shape[3]);
    let (oh, ow) = (h * factor, w * factor);
    let ytaps = bilinear_taps(oh, h, factor);
    let xtaps = bilinear_taps(ow, w, factor);
    let mut dx = vec![0.0f64; n * c * h * w];
    for ni in 0..n {
        for ci in 0..c {
            let dst = &mut dx[(ni * c + ci) * h * w..][..h * w];
            let src = &dout.data()[(ni * c + ci) * oh * ow..][..oh * ow];
            for (oy, &(y0, y1, dy)) in ytaps.iter().enumerate() {
                for (ox, &(x0, x1, dxf)) in xtaps.iter().enumerate() {
                    let d = src[oy * ow + ox] as f64;
                    dst[y0 * w + x0] += (1.0 - dy) * (1.0 - dxf) * d;
                    dst[y0 * w + x1] += (1.0 - dy) * dxf * d;
                    dst[y1 * w + x0] += dy * (1.0 - dxf) * d;
                    dst[y1 * w + x1] += dy * dxf * d;
                }
            }
        }
    }
    Tensor::from_vec(x_shape, dx.iter().map(|&v| v as f32).collect())
}

pub(crate) fn dims4(t: &Tensor) -> (usize, usize, usize, usize) {
    let s = t.shape();
    assert_eq!(s.len(), 4, "expected 4-D tensor, got {s:?}");
    (s[0], s[1], s[2], s[3])
}
