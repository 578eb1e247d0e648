//! Direct (loop-based) forward and backward kernels for the conv, pool and
//! dense layers. The autodiff graph in `graph.rs` dispatches to these.

use crate::error::{Error, Result};

use super::{Scalar, Tensor};

/// Padding behaviour of a 2-D convolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PaddingMode {
    /// Output spatial size is ceil(input/stride); when the total padding per
    /// axis is odd the extra sample goes on the bottom/right.
    SameAsymmetric,
    /// No padding; the kernel only visits fully valid positions.
    Valid,
}

/// Geometry of a dilated 2-D convolution. Stride is (1, 1) everywhere in the
/// audio network; the visual backbone downsamples with stride 2.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Conv2dSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: (usize, usize),
    pub dilation: (usize, usize),
    pub stride: (usize, usize),
    pub padding_mode: PaddingMode,
}

impl Conv2dSpec {
    pub fn new(
        in_channels: usize,
        out_channels: usize,
        kernel: (usize, usize),
        dilation: (usize, usize),
        padding_mode: PaddingMode,
    ) -> Self {
        Conv2dSpec {
            in_channels,
            out_channels,
            kernel,
            dilation,
            stride: (1, 1),
            padding_mode,
        }
    }

    pub fn with_stride(mut self, stride: (usize, usize)) -> Self {
        self.stride = stride;
        self
    }

    /// Effective kernel extent per axis: (k - 1) * d + 1.
    pub fn extent(&self) -> (usize, usize) {
        (
            (self.kernel.0 - 1) * self.dilation.0 + 1,
            (self.kernel.1 - 1) * self.dilation.1 + 1,
        )
    }

    fn validate(&self) -> Result<()> {
        if self.in_channels == 0
            || self.out_channels == 0
            || self.kernel.0 == 0
            || self.kernel.1 == 0
            || self.dilation.0 == 0
            || self.dilation.1 == 0
            || self.stride.0 == 0
            || self.stride.1 == 0
        {
            return Err(Error::invalid(format!("degenerate conv spec {self:?}")));
        }
        Ok(())
    }

    /// Output spatial size for an input of h x w.
    pub fn output_hw(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        self.validate()?;
        let (eh, ew) = self.extent();
        match self.padding_mode {
            PaddingMode::SameAsymmetric => Ok((
                h.div_ceil(self.stride.0),
                w.div_ceil(self.stride.1),
            )),
            PaddingMode::Valid => {
                if h < eh || w < ew {
                    return Err(Error::shape(format!(
                        "valid conv: input {h}x{w} smaller than kernel extent {eh}x{ew}"
                    )));
                }
                Ok(((h - eh) / self.stride.0 + 1, (w - ew) / self.stride.1 + 1))
            }
        }
    }

    /// Implicit zero padding before the first row/column.
    fn padding_before(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        match self.padding_mode {
            PaddingMode::Valid => Ok((0, 0)),
            PaddingMode::SameAsymmetric => {
                let (oh, ow) = self.output_hw(h, w)?;
                let (eh, ew) = self.extent();
                let total_h = ((oh - 1) * self.stride.0 + eh).saturating_sub(h);
                let total_w = ((ow - 1) * self.stride.1 + ew).saturating_sub(w);
                Ok((total_h / 2, total_w / 2))
            }
        }
    }
}

fn check_conv_shapes<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
    spec: &Conv2dSpec,
) -> Result<(usize, usize, usize)> {
    let ishape = input.shape();
    if ishape.len() != 4 {
        return Err(Error::shape(format!(
            "conv input must be NCHW, got rank {}",
            ishape.len()
        )));
    }
    if ishape[1] != spec.in_channels {
        return Err(Error::shape(format!(
            "conv input has {} channels, spec expects {}",
            ishape[1], spec.in_channels
        )));
    }
    let expected_w = [
        spec.out_channels,
        spec.in_channels,
        spec.kernel.0,
        spec.kernel.1,
    ];
    if weights.shape() != expected_w {
        return Err(Error::shape(format!(
            "conv weights shaped {:?}, expected {expected_w:?}",
            weights.shape()
        )));
    }
    if bias.shape() != [spec.out_channels] {
        return Err(Error::shape(format!(
            "conv bias shaped {:?}, expected [{}]",
            bias.shape(),
            spec.out_channels
        )));
    }
    Ok((ishape[0], ishape[2], ishape[3]))
}

/// Range of output indices o such that o*stride + tap - pad lands in [0, len).
/// The returned range may be empty.
fn valid_output_range(len: usize, out_len: usize, stride: usize, tap: isize) -> (usize, usize) {
    // in = o*stride + tap, want 0 <= in < len
    let lo = if tap >= 0 {
        0
    } else {
        ((-tap) as usize).div_ceil(stride)
    };
    let hi_in = len as isize - 1 - tap;
    if hi_in < 0 {
        return (0, 0);
    }
    let hi = (hi_in as usize) / stride + 1;
    (lo.min(out_len), hi.min(out_len))
}

/// Dilated 2-D convolution over an NCHW input.
pub fn conv2d_forward<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
    spec: &Conv2dSpec,
) -> Result<Tensor<T>> {
    let (n, h, w) = check_conv_shapes(input, weights, bias, spec)?;
    let (oh, ow) = spec.output_hw(h, w)?;
    let (pt, pl) = spec.padding_before(h, w)?;
    let (sh, sw) = spec.stride;
    let (ci_n, co_n) = (spec.in_channels, spec.out_channels);

    let x = input.values();
    let wv = weights.values();
    let bv = bias.values();
    let mut out = vec![T::ZERO; n * co_n * oh * ow];

    for b in 0..n {
        for co in 0..co_n {
            let out_base = (b * co_n + co) * oh * ow;
            out[out_base..out_base + oh * ow].fill(bv[co]);
            for ci in 0..ci_n {
                let in_base = (b * ci_n + ci) * h * w;
                for ky in 0..spec.kernel.0 {
                    let tap_y = (ky * spec.dilation.0) as isize - pt as isize;
                    let (oy_lo, oy_hi) = valid_output_range(h, oh, sh, tap_y);
                    for kx in 0..spec.kernel.1 {
                        let tap_x = (kx * spec.dilation.1) as isize - pl as isize;
                        let (ox_lo, ox_hi) = valid_output_range(w, ow, sw, tap_x);
                        if oy_lo >= oy_hi || ox_lo >= ox_hi {
                            continue;
                        }
                        let wk = wv[((co * ci_n + ci) * spec.kernel.0 + ky) * spec.kernel.1 + kx];
                        for oy in oy_lo..oy_hi {
                            let iy = (oy * sh) as isize + tap_y;
                            let in_row = in_base + iy as usize * w;
                            let out_row = out_base + oy * ow;
                            if sw == 1 {
                                let ix0 = (ox_lo as isize + tap_x) as usize;
                                let src = &x[in_row + ix0..in_row + ix0 + (ox_hi - ox_lo)];
                                let dst = &mut out[out_row + ox_lo..out_row + ox_hi];
                                for (d, s) in dst.iter_mut().zip(src) {
                                    *d += wk * *s;
                                }
                            } else {
                                for ox in ox_lo..ox_hi {
                                    let ix = ((ox * sw) as isize + tap_x) as usize;
                                    out[out_row + ox] += wk * x[in_row + ix];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Tensor::from_vec(vec![n, co_n, oh, ow], out)
}

/// Gradients of a conv2d output w.r.t. its input, weights and bias.
pub fn conv2d_backward<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    spec: &Conv2dSpec,
    grad_out: &[T],
) -> Result<(Vec<T>, Vec<T>, Vec<T>)> {
    let ishape = input.shape();
    let (n, h, w) = (ishape[0], ishape[2], ishape[3]);
    let (oh, ow) = spec.output_hw(h, w)?;
    let (pt, pl) = spec.padding_before(h, w)?;
    let (sh, sw) = spec.stride;
    let (ci_n, co_n) = (spec.in_channels, spec.out_channels);
    debug_assert_eq!(grad_out.len(), n * co_n * oh * ow);

    let x = input.values();
    let wv = weights.values();
    let mut gx = vec![T::ZERO; x.len()];
    let mut gw = vec![T::ZERO; wv.len()];
    let mut gb = vec![T::ZERO; co_n];

    for b in 0..n {
        for (co, gbc) in gb.iter_mut().enumerate() {
            let out_base = (b * co_n + co) * oh * ow;
            for g in &grad_out[out_base..out_base + oh * ow] {
                *gbc += *g;
            }
        }
    }

    for b in 0..n {
        for co in 0..co_n {
            let out_base = (b * co_n + co) * oh * ow;
            for ci in 0..ci_n {
                let in_base = (b * ci_n + ci) * h * w;
                for ky in 0..spec.kernel.0 {
                    let tap_y = (ky * spec.dilation.0) as isize - pt as isize;
                    let (oy_lo, oy_hi) = valid_output_range(h, oh, sh, tap_y);
                    for kx in 0..spec.kernel.1 {
                        let tap_x = (kx * spec.dilation.1) as isize - pl as isize;
                        let (ox_lo, ox_hi) = valid_output_range(w, ow, sw, tap_x);
                        if oy_lo >= oy_hi || ox_lo >= ox_hi {
                            continue;
                        }
                        let widx = ((co * ci_n + ci) * spec.kernel.0 + ky) * spec.kernel.1 + kx;
                        let wk = wv[widx];
                        let mut wacc = T::ZERO;
                        for oy in oy_lo..oy_hi {
                            let iy = (oy * sh) as isize + tap_y;
                            let in_row = in_base + iy as usize * w;
                            let out_row = out_base + oy * ow;
                            for ox in ox_lo..ox_hi {
                                let ix = ((ox * sw) as isize + tap_x) as usize;
                                let g = grad_out[out_row + ox];
                                wacc += g * x[in_row + ix];
                                gx[in_row + ix] += g * wk;
                            }
                        }
                        gw[widx] += wacc;
                    }
                }
            }
        }
    }
    Ok((gx, gw, gb))
}

/// 2x2 max pooling with stride 2 and ceil-mode output. Windows hanging over
/// the edge behave as if padded with negative infinity. Returns the pooled
/// tensor and, per output element, the flat input index that won (first
/// maximum in row-major scan order).
pub fn maxpool2x2_forward<T: Scalar>(input: &Tensor<T>) -> Result<(Tensor<T>, Vec<usize>)> {
    let ishape = input.shape();
    if ishape.len() != 4 {
        return Err(Error::shape(format!(
            "maxpool input must be NCHW, got rank {}",
            ishape.len()
        )));
    }
    let (n, c, h, w) = (ishape[0], ishape[1], ishape[2], ishape[3]);
    let (oh, ow) = (h.div_ceil(2), w.div_ceil(2));
    let x = input.values();
    let mut out = vec![T::ZERO; n * c * oh * ow];
    let mut argmax = vec![0usize; out.len()];

    for plane in 0..n * c {
        let in_base = plane * h * w;
        let out_base = plane * oh * ow;
        for oy in 0..oh {
            for ox in 0..ow {
                let mut best = T::neg_infinity();
                let mut best_idx = 0usize;
                for dy in 0..2 {
                    let iy = oy * 2 + dy;
                    if iy >= h {
                        continue;
                    }
                    for dx in 0..2 {
                        let ix = ox * 2 + dx;
                        if ix >= w {
                            continue;
                        }
                        let idx = in_base + iy * w + ix;
                        if x[idx] > best {
                            best = x[idx];
                            best_idx = idx;
                        }
                    }
                }
                out[out_base + oy * ow + ox] = best;
                argmax[out_base + oy * ow + ox] = best_idx;
            }
        }
    }
    Ok((Tensor::from_vec(vec![n, c, oh, ow], out)?, argmax))
}

/// Routes each output gradient back to the argmax position recorded in the
/// forward pass.
pub fn maxpool2x2_backward<T: Scalar>(
    input_len: usize,
    argmax: &[usize],
    grad_out: &[T],
) -> Vec<T> {
    debug_assert_eq!(argmax.len(), grad_out.len());
    let mut gx = vec![T::ZERO; input_len];
    for (idx, g) in argmax.iter().zip(grad_out) {
        gx[*idx] += *g;
    }
    gx
}

fn dense_dims<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<(usize, usize, usize)> {
    let wshape = weights.shape();
    if wshape.len() != 2 {
        return Err(Error::shape(format!(
            "dense weights must be (out, in), got {wshape:?}"
        )));
    }
    let (out_dim, in_dim) = (wshape[0], wshape[1]);
    if bias.shape() != [out_dim] {
        return Err(Error::shape(format!(
            "dense bias shaped {:?}, expected [{out_dim}]",
            bias.shape()
        )));
    }
    let (batch, feat) = match input.shape() {
        [d] => (1, *d),
        [n, d] => (*n, *d),
        other => {
            return Err(Error::shape(format!(
                "dense input must be rank 1 or 2, got {other:?}"
            )))
        }
    };
    if feat != in_dim {
        return Err(Error::shape(format!(
            "dense input length {feat} does not match weight input dimension {in_dim}"
        )));
    }
    Ok((batch, in_dim, out_dim))
}

/// Affine map y = W x + b, applied per batch row.
pub fn dense_forward<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<Tensor<T>> {
    let (batch, in_dim, out_dim) = dense_dims(input, weights, bias)?;
    let x = input.values();
    let wv = weights.values();
    let bv = bias.values();
    let mut out = vec![T::ZERO; batch * out_dim];
    for b in 0..batch {
        let row = &x[b * in_dim..(b + 1) * in_dim];
        for o in 0..out_dim {
            let wrow = &wv[o * in_dim..(o + 1) * in_dim];
            let mut acc = bv[o];
            for (xi, wi) in row.iter().zip(wrow) {
                acc += *xi * *wi;
            }
            out[b * out_dim + o] = acc;
        }
    }
    let shape = if input.shape().len() == 1 {
        vec![out_dim]
    } else {
        vec![batch, out_dim]
    };
    Tensor::from_vec(shape, out)
}

pub fn dense_backward<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
    grad_out: &[T],
) -> Result<(Vec<T>, Vec<T>, Vec<T>)> {
    let (batch, in_dim, out_dim) = dense_dims(input, weights, bias)?;
    debug_assert_eq!(grad_out.len(), batch * out_dim);
    let x = input.values();
    let wv = weights.values();
    let mut gx = vec![T::ZERO; x.len()];
    let mut gw = vec![T::ZERO; wv.len()];
    let mut gb = vec![T::ZERO; out_dim];
    for b in 0..batch {
        let row = &x[b * in_dim..(b + 1) * in_dim];
        let gx_row = &mut gx[b * in_dim..(b + 1) * in_dim];
        for o in 0..out_dim {
            let g = grad_out[b * out_dim + o];
            gb[o] += g;
            let wrow = &wv[o * in_dim..(o + 1) * in_dim];
            let gw_row = &mut gw[o * in_dim..(o + 1) * in_dim];
            for i in 0..in_dim {
                gw_row[i] += g * row[i];
                gx_row[i] += g * wrow[i];
            }
        }
    }
    Ok((gx, gw, gb))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_tensor(rng: &mut ChaCha8Rng, shape: Vec<usize>) -> Tensor<f64> {
        let n = shape.iter().product();
        let values = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Tensor::from_vec(shape, values).unwrap()
    }

    /// Quadruple-loop reference convolution with explicit zero padding.
    fn conv_oracle(
        input: &Tensor<f64>,
        weights: &Tensor<f64>,
        bias: &Tensor<f64>,
        spec: &Conv2dSpec,
    ) -> Tensor<f64> {
        let (n, _, h, w) = (
            input.shape()[0],
            input.shape()[1],
            input.shape()[2],
            input.shape()[3],
        );
        let (oh, ow) = spec.output_hw(h, w).unwrap();
        let (pt, pl) = spec.padding_before(h, w).unwrap();
        let mut out = vec![0.0; n * spec.out_channels * oh * ow];
        for b in 0..n {
            for co in 0..spec.out_channels {
                for oy in 0..oh {
                    for ox in 0..ow {
                        let mut acc = bias.values()[co];
                        for ci in 0..spec.in_channels {
                            for ky in 0..spec.kernel.0 {
                                for kx in 0..spec.kernel.1 {
                                    let iy = (oy * spec.stride.0 + ky * spec.dilation.0) as isize
                                        - pt as isize;
                                    let ix = (ox * spec.stride.1 + kx * spec.dilation.1) as isize
                                        - pl as isize;
                                    if iy < 0 || ix < 0 || iy >= h as isize || ix >= w as isize {
                                        continue;
                                    }
                                    let xi = input.values()
                                        [((b * spec.in_channels + ci) * h + iy as usize) * w
                                            + ix as usize];
                                    let wi = weights.values()[((co * spec.in_channels + ci)
                                        * spec.kernel.0
                                        + ky)
                                        * spec.kernel.1
                                        + kx];
                                    acc += xi * wi;
                                }
                            }
                        }
                        out[((b * spec.out_channels + co) * oh + oy) * ow + ox] = acc;
                    }
                }
            }
        }
        Tensor::from_vec(vec![n, spec.out_channels, oh, ow], out).unwrap()
    }

    #[test]
    fn same_conv_preserves_paper_input_shape() {
        let spec = Conv2dSpec::new(1, 64, (11, 7), (9, 4), PaddingMode::SameAsymmetric);
        assert_eq!(spec.extent(), (91, 25));
        assert_eq!(spec.output_hw(331, 248).unwrap(), (331, 248));
    }

    #[test]
    fn unit_kernel_scales_input() {
        let input = Tensor::<f64>::full(vec![1, 1, 3, 3], 1.0);
        let weights = Tensor::from_vec(vec![1, 1, 1, 1], vec![2.0]).unwrap();
        let bias = Tensor::zeros(vec![1]);
        let spec = Conv2dSpec::new(1, 1, (1, 1), (1, 1), PaddingMode::SameAsymmetric);
        let out = conv2d_forward(&input, &weights, &bias, &spec).unwrap();
        assert!(out.values().iter().all(|v| (*v - 2.0).abs() < 1e-12));
    }

    #[test]
    fn dilated_conv_matches_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for mode in [PaddingMode::SameAsymmetric, PaddingMode::Valid] {
            let spec = Conv2dSpec::new(2, 3, (3, 3), (2, 2), mode);
            let input = rand_tensor(&mut rng, vec![1, 2, 8, 8]);
            let weights = rand_tensor(&mut rng, vec![3, 2, 3, 3]);
            let bias = rand_tensor(&mut rng, vec![3]);
            let got = conv2d_forward(&input, &weights, &bias, &spec).unwrap();
            let want = conv_oracle(&input, &weights, &bias, &spec);
            assert_eq!(got.shape(), want.shape());
            for (g, w) in got.values().iter().zip(want.values()) {
                assert!((g - w).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn strided_conv_matches_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let spec =
            Conv2dSpec::new(3, 4, (3, 3), (1, 1), PaddingMode::SameAsymmetric).with_stride((2, 2));
        let input = rand_tensor(&mut rng, vec![2, 3, 9, 10]);
        let weights = rand_tensor(&mut rng, vec![4, 3, 3, 3]);
        let bias = rand_tensor(&mut rng, vec![4]);
        let got = conv2d_forward(&input, &weights, &bias, &spec).unwrap();
        assert_eq!(got.shape(), &[2, 4, 5, 5]);
        let want = conv_oracle(&input, &weights, &bias, &spec);
        for (g, w) in got.values().iter().zip(want.values()) {
            assert!((g - w).abs() < 1e-6);
        }
    }

    #[test]
    fn conv_rejects_channel_mismatch() {
        let spec = Conv2dSpec::new(2, 1, (3, 3), (1, 1), PaddingMode::Valid);
        let input = Tensor::<f64>::zeros(vec![1, 1, 5, 5]);
        let weights = Tensor::zeros(vec![1, 2, 3, 3]);
        let bias = Tensor::zeros(vec![1]);
        assert!(conv2d_forward(&input, &weights, &bias, &spec).is_err());
    }

    #[test]
    fn pool_halves_paper_shape_with_ceil() {
        let input = Tensor::<f64>::zeros(vec![1, 1, 331, 248]);
        let (out, _) = maxpool2x2_forward(&input).unwrap();
        assert_eq!(out.shape(), &[1, 1, 166, 124]);
    }

    #[test]
    fn pool_constant_stays_constant() {
        let input = Tensor::<f64>::full(vec![1, 1, 4, 4], 3.5);
        let (out, _) = maxpool2x2_forward(&input).unwrap();
        assert_eq!(out.shape(), &[1, 1, 2, 2]);
        assert!(out.values().iter().all(|v| *v == 3.5));
    }

    #[test]
    fn pool_matches_sliding_window_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let input = rand_tensor(&mut rng, vec![1, 2, 5, 5]);
        let (out, _) = maxpool2x2_forward(&input).unwrap();
        assert_eq!(out.shape(), &[1, 2, 3, 3]);
        for c in 0..2 {
            for oy in 0..3 {
                for ox in 0..3 {
                    let mut best = f64::NEG_INFINITY;
                    for dy in 0..2 {
                        for dx in 0..2 {
                            let (iy, ix) = (oy * 2 + dy, ox * 2 + dx);
                            if iy < 5 && ix < 5 {
                                best = best.max(input.values()[(c * 5 + iy) * 5 + ix]);
                            }
                        }
                    }
                    assert_eq!(out.values()[(c * 3 + oy) * 3 + ox], best);
                }
            }
        }
    }

    #[test]
    fn pool_backward_routes_to_argmax_only() {
        let input =
            Tensor::from_vec(vec![1, 1, 2, 2], vec![1.0f64, 4.0, 2.0, 3.0]).unwrap();
        let (_, argmax) = maxpool2x2_forward(&input).unwrap();
        let gx = maxpool2x2_backward(4, &argmax, &[5.0f64]);
        assert_eq!(gx, vec![0.0, 5.0, 0.0, 0.0]);
    }

    #[test]
    fn dense_identity_passes_through() {
        let input = Tensor::from_vec(vec![3], vec![1.0f64, -2.0, 0.5]).unwrap();
        let mut w = vec![0.0; 9];
        for i in 0..3 {
            w[i * 3 + i] = 1.0;
        }
        let weights = Tensor::from_vec(vec![3, 3], w).unwrap();
        let bias = Tensor::zeros(vec![3]);
        let out = dense_forward(&input, &weights, &bias).unwrap();
        assert_eq!(out.values(), input.values());
    }

    #[test]
    fn dense_matches_matmul_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let input = rand_tensor(&mut rng, vec![4, 6]);
        let weights = rand_tensor(&mut rng, vec![3, 6]);
        let bias = rand_tensor(&mut rng, vec![3]);
        let out = dense_forward(&input, &weights, &bias).unwrap();
        for b in 0..4 {
            for o in 0..3 {
                let mut acc = bias.values()[o];
                for i in 0..6 {
                    acc += input.values()[b * 6 + i] * weights.values()[o * 6 + i];
                }
                assert!((out.values()[b * 3 + o] - acc).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn dense_rejects_length_mismatch() {
        let input = Tensor::<f64>::zeros(vec![4]);
        let weights = Tensor::zeros(vec![2, 3]);
        let bias = Tensor::zeros(vec![2]);
        assert!(dense_forward(&input, &weights, &bias).is_err());
    }
}
