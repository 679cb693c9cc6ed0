//! Forward/backward kernels. Convolutions use the shift-accumulate scheme:
//! per (out-channel, in-channel, tap) scalar weight applied to contiguous
//! rows, which vectorizes well and keeps the code auditable. All backward
//! functions accumulate into the provided gradient slices.

/// Channel-major planes (C, H, W) in one flat vector. 1-D sequences reuse
/// this with h == 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Planes {
    pub c: usize,
    pub h: usize,
    pub w: usize,
    pub data: Vec<f64>,
}

impl Planes {
    pub fn zeros(c: usize, h: usize, w: usize) -> Planes {
        Planes { c, h, w, data: vec![0.0; c * h * w] }
    }

    pub fn from_vec(c: usize, h: usize, w: usize, data: Vec<f64>) -> Planes {
        assert_eq!(data.len(), c * h * w, "plane shape mismatch");
        Planes { c, h, w, data }
    }

    #[inline]
    pub fn plane(&self, c: usize) -> &[f64] {
        &self.data[c * self.h * self.w..(c + 1) * self.h * self.w]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ConvSpec {
    pub c_in: usize,
    pub c_out: usize,
    pub kh: usize,
    pub kw: usize,
    pub sh: usize,
    pub sw: usize,
    pub ph: usize,
    pub pw: usize,
}

impl ConvSpec {
    /// Square kernel, stride 1, "same" padding.
    pub fn same(c_in: usize, c_out: usize, k: usize) -> ConvSpec {
        ConvSpec { c_in, c_out, kh: k, kw: k, sh: 1, sw: 1, ph: k / 2, pw: k / 2 }
    }

    /// Square kernel, stride 2 in both dims (downsampling).
    pub fn down(c_in: usize, c_out: usize, k: usize) -> ConvSpec {
        ConvSpec { c_in, c_out, kh: k, kw: k, sh: 2, sw: 2, ph: k / 2, pw: k / 2 }
    }

    /// 1-D convolution over width (h stays 1).
    pub fn seq(c_in: usize, c_out: usize, k: usize, sw: usize) -> ConvSpec {
        ConvSpec { c_in, c_out, kh: 1, kw: k, sh: 1, sw, ph: 0, pw: k / 2 }
    }

    pub fn weight_len(&self) -> usize {
        self.c_out * self.c_in * self.kh * self.kw
    }

    pub fn out_hw(&self, h: usize, w: usize) -> (usize, usize) {
        (
            (h + 2 * self.ph - self.kh) / self.sh + 1,
            (w + 2 * self.pw - self.kw) / self.sw + 1,
        )
    }
}

pub fn conv_forward(x: &Planes, weight: &[f64], bias: &[f64], spec: &ConvSpec) -> Planes {
    debug_assert_eq!(x.c, spec.c_in);
    debug_assert_eq!(weight.len(), spec.weight_len());
    let (oh, ow) = spec.out_hw(x.h, x.w);
    let mut out = Planes::zeros(spec.c_out, oh, ow);

    for co in 0..spec.c_out {
        let o = &mut out.data[co * oh * ow..(co + 1) * oh * ow];
        o.fill(bias[co]);
        for ci in 0..spec.c_in {
            let xp = x.plane(ci);
            for ky in 0..spec.kh {
                for kx in 0..spec.kw {
                    let wgt = weight[((co * spec.c_in + ci) * spec.kh + ky) * spec.kw + kx];
                    for oy in 0..oh {
                        let iy = (oy * spec.sh + ky) as isize - spec.ph as isize;
                        if iy < 0 || iy >= x.h as isize {
                            continue;
                        }
                        let row_in = &xp[iy as usize * x.w..(iy as usize + 1) * x.w];
                        let row_out = &mut o[oy * ow..(oy + 1) * ow];
                        // ix = ox*sw + kx - pw must stay inside [0, w).
                        for (ox, out_v) in row_out.iter_mut().enumerate() {
                            let ix = (ox * spec.sw + kx) as isize - spec.pw as isize;
                            if ix >= 0 && ix < x.w as isize {
                                *out_v += wgt * row_in[ix as usize];
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Returns the input gradient; accumulates weight/bias gradients in place.
pub fn conv_backward(
    x: &Planes,
    weight: &[f64],
    dy: &Planes,
    spec: &ConvSpec,
    dweight: &mut [f64],
    dbias: &mut [f64],
) -> Planes {
    let (oh, ow) = spec.out_hw(x.h, x.w);
    debug_assert_eq!((dy.h, dy.w), (oh, ow));
    let mut dx = Planes::zeros(x.c, x.h, x.w);

    for co in 0..spec.c_out {
        let dyp = dy.plane(co);
        dbias[co] += dyp.iter().sum::<f64>();
        for ci in 0..spec.c_in {
            let xp = x.plane(ci);
            let dxp = &mut dx.data[ci * x.h * x.w..(ci + 1) * x.h * x.w];
            for ky in 0..spec.kh {
                for kx in 0..spec.kw {
                    let widx = ((co * spec.c_in + ci) * spec.kh + ky) * spec.kw + kx;
                    let wgt = weight[widx];
                    let mut wacc = 0.0;
                    for oy in 0..oh {
                        let iy = (oy * spec.sh + ky) as isize - spec.ph as isize;
                        if iy < 0 || iy >= x.h as isize {
                            continue;
                        }
                        let row_x = &xp[iy as usize * x.w..(iy as usize + 1) * x.w];
                        let row_dx = &mut dxp[iy as usize * x.w..(iy as usize + 1) * x.w];
                        let row_dy = &dyp[oy * ow..(oy + 1) * ow];
                        for (ox, dy_v) in row_dy.iter().enumerate() {
                            let ix = (ox * spec.sw + kx) as isize - spec.pw as isize;
                            if ix >= 0 && ix < x.w as isize {
                                wacc += dy_v * row_x[ix as usize];
                                row_dx[ix as usize] += wgt * dy_v;
                            }
                        }
                    }
                    dweight[widx] += wacc;
                }
            }
        }
    }
    dx
}

/// y = W x + b with W stored row-major [out][in].
pub fn linear_forward(x: &[f64], weight: &[f64], bias: &[f64], out_dim: usize) -> Vec<f64> {
    let in_dim = x.len();
    debug_assert_eq!(weight.len(), out_dim * in_dim);
    let mut y = bias.to_vec();
    for (o, y_v) in y.iter_mut().enumerate() {
        let row = &weight[o * in_dim..(o + 1) * in_dim];
        *y_v += row.iter().zip(x).map(|(w, xv)| w * xv).sum::<f64>();
    }
    y
}

pub fn linear_backward(
    x: &[f64],
    weight: &[f64],
    dy: &[f64],
    dweight: &mut [f64],
    dbias: &mut [f64],
    dx: &mut [f64],
) {
    let in_dim = x.len();
    for (o, dy_v) in dy.iter().enumerate() {
        dbias[o] += dy_v;
        let row = &weight[o * in_dim..(o + 1) * in_dim];
        let drow = &mut dweight[o * in_dim..(o + 1) * in_dim];
        for i in 0..in_dim {
            drow[i] += dy_v * x[i];
            dx[i] += dy_v * row[i];
        }
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// SiLU: x * sigmoid(x).
pub fn silu_forward(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| v * sigmoid(v)).collect()
}

/// Needs the pre-activation input.
pub fn silu_backward(x: &[f64], dy: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(dy)
        .map(|(&v, &g)| {
            let s = sigmoid(v);
            g * (s + v * s * (1.0 - s))
        })
        .collect()
}

/// Feature-wise modulation: y[c][..] = x[c][..] * (1 + scale[c]) + shift[c].
/// `scale_shift` holds [scale; shift], 2*c values.
pub fn film_forward(x: &Planes, scale_shift: &[f64]) -> Planes {
    debug_assert_eq!(scale_shift.len(), 2 * x.c);
    let mut out = x.clone();
    let hw = x.h * x.w;
    for c in 0..x.c {
        let (s, t) = (scale_shift[c], scale_shift[x.c + c]);
        for v in &mut out.data[c * hw..(c + 1) * hw] {
            *v = *v * (1.0 + s) + t;
        }
    }
    out
}

/// Returns dx; writes the scale/shift gradient into `dss` (length 2*c).
pub fn film_backward(x: &Planes, scale_shift: &[f64], dy: &Planes, dss: &mut [f64]) -> Planes {
    let mut dx = Planes::zeros(x.c, x.h, x.w);
    let hw = x.h * x.w;
    for c in 0..x.c {
        let s = scale_shift[c];
        let xs = &x.data[c * hw..(c + 1) * hw];
        let dys = &dy.data[c * hw..(c + 1) * hw];
        let dxs = &mut dx.data[c * hw..(c + 1) * hw];
        let mut ds = 0.0;
        let mut dt = 0.0;
        for i in 0..hw {
            dxs[i] = dys[i] * (1.0 + s);
            ds += dys[i] * xs[i];
            dt += dys[i];
        }
        dss[c] += ds;
        dss[x.c + c] += dt;
    }
    dx
}

/// Nearest-neighbour upsampling by integer factors (fh, fw).
pub fn upsample_forward(x: &Planes, fh: usize, fw: usize) -> Planes {
    let (oh, ow) = (x.h * fh, x.w * fw);
    let mut out = Planes::zeros(x.c, oh, ow);
    for c in 0..x.c {
        let xp = x.plane(c);
        let op = &mut out.data[c * oh * ow..(c + 1) * oh * ow];
        for oy in 0..oh {
            let iy = oy / fh;
            for ox in 0..ow {
                op[oy * ow + ox] = xp[iy * x.w + ox / fw];
            }
        }
    }
    out
}

pub fn upsample_backward(dy: &Planes, fh: usize, fw: usize) -> Planes {
    let (ih, iw) = (dy.h / fh, dy.w / fw);
    let mut dx = Planes::zeros(dy.c, ih, iw);
    for c in 0..dy.c {
        let dyp = dy.plane(c);
        let dxp = &mut dx.data[c * ih * iw..(c + 1) * ih * iw];
        for oy in 0..dy.h {
            let iy = oy / fh;
            for ox in 0..dy.w {
                dxp[iy * iw + ox / fw] += dyp[oy * dy.w + ox];
            }
        }
    }
    dx
}

/// Concatenate along the channel axis.
pub fn concat_channels(a: &Planes, b: &Planes) -> Planes {
    debug_assert_eq!((a.h, a.w), (b.h, b.w));
    let mut data = Vec::with_capacity(a.len() + b.len());
    data.extend_from_slice(&a.data);
    data.extend_from_slice(&b.data);
    Planes { c: a.c + b.c, h: a.h, w: a.w, data }
}

pub fn split_channels(dy: &Planes, c_first: usize) -> (Planes, Planes) {
    let hw = dy.h * dy.w;
    let a = Planes::from_vec(c_first, dy.h, dy.w, dy.data[..c_first * hw].to_vec());
    let b =
        Planes::from_vec(dy.c - c_first, dy.h, dy.w, dy.data[c_first * hw..].to_vec());
    (a, b)
}

/// Classic transformer-style sinusoidal embedding of an integer timestep.
pub fn sinusoidal_embedding(t: usize, dim: usize) -> Vec<f64> {
    debug_assert!(dim % 2 == 0);
    let half = dim / 2;
    let mut out = Vec::with_capacity(dim);
    for i in 0..half {
        let freq = (10_000f64).powf(-(i as f64) / half as f64);
        let angle = t as f64 * freq;
        out.push(angle.sin());
        out.push(angle.cos());
    }
    out
}

/// Mean squared error over all elements and its gradient w.r.t. `pred`.
pub fn mse(pred: &[f64], target: &[f64]) -> (f64, Vec<f64>) {
    debug_assert_eq!(pred.len(), target.len());
    let n = pred.len() as f64;
    let mut loss = 0.0;
    let grad = pred
        .iter()
        .zip(target)
        .map(|(&p, &t)| {
            let d = p - t;
            loss += d * d;
            2.0 * d / n
        })
        .collect();
    (loss / n, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradcheck::max_rel_err;
    use crate::util::rng_from_seed;
    use rand::Rng;

    fn rand_vec(rng: &mut rand_chacha::ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    /// Probe loss: weighted sum of the output so every element matters.
    fn probe(out: &[f64], m: &[f64]) -> f64 {
        out.iter().zip(m).map(|(a, b)| a * b).sum()
    }

    fn fd_grad(f: &dyn Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
        let eps = 1e-6;
        let mut g = vec![0.0; x.len()];
        let mut xp = x.to_vec();
        for i in 0..x.len() {
            let orig = xp[i];
            xp[i] = orig + eps;
            let up = f(&xp);
            xp[i] = orig - eps;
            let dn = f(&xp);
            xp[i] = orig;
            g[i] = (up - dn) / (2.0 * eps);
        }
        g
    }

    fn check_conv(spec: ConvSpec, h: usize, w: usize) {
        let mut rng = rng_from_seed(3);
        let x = Planes::from_vec(spec.c_in, h, w, rand_vec(&mut rng, spec.c_in * h * w));
        let weight = rand_vec(&mut rng, spec.weight_len());
        let bias = rand_vec(&mut rng, spec.c_out);
        let (oh, ow) = spec.out_hw(h, w);
        let m = rand_vec(&mut rng, spec.c_out * oh * ow);

        let out = conv_forward(&x, &weight, &bias, &spec);
        let dy = Planes::from_vec(spec.c_out, oh, ow, m.clone());
        let mut dw = vec![0.0; weight.len()];
        let mut db = vec![0.0; bias.len()];
        let dx = conv_backward(&x, &weight, &dy, &spec, &mut dw, &mut db);
        assert_eq!(out.data.len(), m.len());

        let fx = |xv: &[f64]| {
            let xp = Planes::from_vec(spec.c_in, h, w, xv.to_vec());
            probe(&conv_forward(&xp, &weight, &bias, &spec).data, &m)
        };
        let fw = |wv: &[f64]| probe(&conv_forward(&x, wv, &bias, &spec).data, &m);
        let fb = |bv: &[f64]| probe(&conv_forward(&x, &weight, bv, &spec).data, &m);

        assert!(max_rel_err(&dx.data, &fd_grad(&fx, &x.data)) < 1e-6);
        assert!(max_rel_err(&dw, &fd_grad(&fw, &weight)) < 1e-6);
        assert!(max_rel_err(&db, &fd_grad(&fb, &bias)) < 1e-6);
    }

    #[test]
    fn conv_same_gradients() {
        check_conv(ConvSpec::same(2, 3, 3), 5, 4);
    }

    #[test]
    fn conv_down_gradients() {
        check_conv(ConvSpec::down(3, 2, 3), 6, 6);
    }

    #[test]
    fn conv_seq_gradients() {
        check_conv(ConvSpec::seq(4, 3, 3, 1), 1, 4);
        check_conv(ConvSpec::seq(3, 2, 3, 2), 1, 4);
    }

    #[test]
    fn linear_gradients() {
        let mut rng = rng_from_seed(5);
        let (in_dim, out_dim) = (7, 4);
        let x = rand_vec(&mut rng, in_dim);
        let weight = rand_vec(&mut rng, in_dim * out_dim);
        let bias = rand_vec(&mut rng, out_dim);
        let m = rand_vec(&mut rng, out_dim);

        let mut dw = vec![0.0; weight.len()];
        let mut db = vec![0.0; bias.len()];
        let mut dx = vec![0.0; in_dim];
        linear_backward(&x, &weight, &m, &mut dw, &mut db, &mut dx);

        let fx = |xv: &[f64]| probe(&linear_forward(xv, &weight, &bias, out_dim), &m);
        let fw = |wv: &[f64]| probe(&linear_forward(&x, wv, &bias, out_dim), &m);
        assert!(max_rel_err(&dx, &fd_grad(&fx, &x)) < 1e-7);
        assert!(max_rel_err(&dw, &fd_grad(&fw, &weight)) < 1e-7);
        assert_eq!(db, m);
    }

    #[test]
    fn silu_gradient() {
        let mut rng = rng_from_seed(6);
        let x = rand_vec(&mut rng, 20);
        let m = rand_vec(&mut rng, 20);
        let dx = silu_backward(&x, &m);
        let f = |xv: &[f64]| probe(&silu_forward(xv), &m);
        assert!(max_rel_err(&dx, &fd_grad(&f, &x)) < 1e-6);
    }

    #[test]
    fn film_gradients() {
        let mut rng = rng_from_seed(7);
        let x = Planes::from_vec(3, 2, 4, rand_vec(&mut rng, 24));
        let ss = rand_vec(&mut rng, 6);
        let m = rand_vec(&mut rng, 24);
        let dy = Planes::from_vec(3, 2, 4, m.clone());
        let mut dss = vec![0.0; 6];
        let dx = film_backward(&x, &ss, &dy, &mut dss);

        let fx = |xv: &[f64]| {
            probe(&film_forward(&Planes::from_vec(3, 2, 4, xv.to_vec()), &ss).data, &m)
        };
        let fss = |sv: &[f64]| probe(&film_forward(&x, sv).data, &m);
        assert!(max_rel_err(&dx.data, &fd_grad(&fx, &x.data)) < 1e-7);
        assert!(max_rel_err(&dss, &fd_grad(&fss, &ss)) < 1e-7);
    }

    #[test]
    fn upsample_roundtrip_gradient() {
        let mut rng = rng_from_seed(8);
        let x = Planes::from_vec(2, 2, 3, rand_vec(&mut rng, 12));
        let m = rand_vec(&mut rng, 2 * 4 * 6);
        let dy = Planes::from_vec(2, 4, 6, m.clone());
        let dx = upsample_backward(&dy, 2, 2);
        let f = |xv: &[f64]| {
            probe(&upsample_forward(&Planes::from_vec(2, 2, 3, xv.to_vec()), 2, 2).data, &m)
        };
        assert!(max_rel_err(&dx.data, &fd_grad(&f, &x.data)) < 1e-9);
    }

    #[test]
    fn concat_split_are_inverse() {
        let a = Planes::from_vec(1, 2, 2, vec![1.0, 2.0, 3.0, 4.0]);
        let b = Planes::from_vec(2, 2, 2, (0..8).map(f64::from).collect());
        let cat = concat_channels(&a, &b);
        assert_eq!(cat.c, 3);
        let (a2, b2) = split_channels(&cat, 1);
        assert_eq!(a, a2);
        assert_eq!(b, b2);
    }

    #[test]
    fn mse_matches_definition() {
        let (loss, grad) = mse(&[1.0, 2.0], &[0.0, 0.0]);
        assert!((loss - 2.5).abs() < 1e-12);
        assert_eq!(grad, vec![1.0, 2.0]);
    }

    #[test]
    fn sinusoidal_embedding_shape_and_range() {
        let e = sinusoidal_embedding(17, 32);
        assert_eq!(e.len(), 32);
        assert!(e.iter().all(|v| v.abs() <= 1.0));
        assert_ne!(e, sinusoidal_embedding(18, 32));
    }
}
