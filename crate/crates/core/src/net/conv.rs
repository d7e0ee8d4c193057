//! Dilated 3D convolution over `(C, F, T)` feature maps.
//!
//! Kernel taps along an axis with dilation `d` sit `d` positions apart, so `d - 1`
//! input positions are skipped between taps. All loops are written as row
//! updates along the contiguous time axis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

use super::Tensor4;

/// Span covered along one axis by `k` taps at dilation `d`.
pub fn effective_extent(k: usize, d: usize) -> usize {
    (k - 1) * d + 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Padding {
    /// Zero padding of `floor((extent-1)/2)` before and `ceil((extent-1)/2)` after;
    /// output spatial shape equals the input's.
    Same,
    /// No padding; each axis shrinks by `extent - 1`.
    Valid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub kernel: [usize; 3],
    pub dilation: [usize; 3],
    pub n_filters: usize,
    pub in_maps: usize,
    pub padding: Padding,
}

pub struct ConvGrads {
    pub grad_x: Tensor4,
    pub grad_w: Vec<f64>,
    pub grad_b: Vec<f64>,
}

impl ConvSpec {
    pub fn kernel_volume(&self) -> usize {
        self.kernel.iter().product()
    }

    /// `n_filters × in_maps × kC × kF × kT`
    pub fn weight_len(&self) -> usize {
        self.n_filters * self.in_maps * self.kernel_volume()
    }

    pub fn fan_in(&self) -> usize {
        self.in_maps * self.kernel_volume()
    }

    pub fn extent(&self) -> [usize; 3] {
        [0, 1, 2].map(|a| effective_extent(self.kernel[a], self.dilation[a]))
    }

    /// Output spatial shape and leading padding per axis.
    pub fn geometry(&self, input: [usize; 3]) -> Result<([usize; 3], [usize; 3])> {
        if self.kernel.contains(&0) || self.dilation.contains(&0) {
            return Err(Error::ShapeMismatch(format!("degenerate conv spec {self:?}")));
        }
        let ext = self.extent();
        match self.padding {
            Padding::Same => Ok((input, ext.map(|e| (e - 1) / 2))),
            Padding::Valid => {
                if (0..3).any(|a| ext[a] > input[a]) {
                    return Err(Error::ShapeMismatch(format!(
                        "kernel extent {ext:?} exceeds input {input:?}"
                    )));
                }
                Ok(([0, 1, 2].map(|a| input[a] - ext[a] + 1), [0; 3]))
            }
        }
    }

    fn check(&self, x: &Tensor4, weights: &[f64]) -> Result<()> {
        if x.maps() != self.in_maps {
            return Err(Error::ShapeMismatch(format!(
                "conv expects {} input maps, got {}",
                self.in_maps,
                x.maps()
            )));
        }
        if weights.len() != self.weight_len() {
            return Err(Error::ShapeMismatch(format!(
                "conv expects {} weights, got {}",
                self.weight_len(),
                weights.len()
            )));
        }
        Ok(())
    }
}

/// Output positions `y` in `0..n_out` with `0 <= y + shift < n_in`.
fn valid_range(n_out: usize, n_in: usize, shift: isize) -> (usize, usize) {
    let lo = (-shift).max(0) as usize;
    let hi = (n_in as isize - shift).clamp(0, n_out as isize) as usize;
    (lo.min(hi), hi)
}

struct Taps {
    shift: [Vec<isize>; 3],
}

impl Taps {
    fn new(spec: &ConvSpec, pad: [usize; 3]) -> Self {
        let shift = [0, 1, 2].map(|a| {
            (0..spec.kernel[a]).map(|k| (k * spec.dilation[a]) as isize - pad[a] as isize).collect()
        });
        Self { shift }
    }
}

/// `out[m,c,f,t] = bias[m] + Σ_{i,a,b,k} w[m,i,a,b,k] · x_pad[i, c+a·dC, f+b·dF, t+k·dT]`
pub fn conv3d_forward(x: &Tensor4, spec: &ConvSpec, weights: &[f64], bias: &[f64]) -> Result<Tensor4> {
    spec.check(x, weights)?;
    if bias.len() != spec.n_filters {
        return Err(Error::ShapeMismatch(format!(
            "conv expects {} biases, got {}",
            spec.n_filters,
            bias.len()
        )));
    }
    let (out_sp, pad) = spec.geometry(x.spatial())?;
    let [oc, of, ot] = out_sp;
    let [_, nf, nt] = x.spatial();
    let [kc, kf, kt] = spec.kernel;
    let kvol = spec.kernel_volume();
    let taps = Taps::new(spec, pad);
    let mut out = Tensor4::zeros([spec.n_filters, oc, of, ot]);
    let out_len = oc * of * ot;

    par::for_each_chunk_mut(out.data_mut(), out_len, |m, o| {
        o.fill(bias[m]);
        for i in 0..spec.in_maps {
            let xi = x.map(i);
            let w = &weights[(m * spec.in_maps + i) * kvol..][..kvol];
            for a in 0..kc {
                let sc = taps.shift[0][a];
                let (c0, c1) = valid_range(oc, x.spatial()[0], sc);
                for b in 0..kf {
                    let sf = taps.shift[1][b];
                    let (f0, f1) = valid_range(of, nf, sf);
                    for c in c0..c1 {
                        let xc = (c as isize + sc) as usize;
                        for f in f0..f1 {
                            let xf = (f as isize + sf) as usize;
                            let orow = &mut o[(c * of + f) * ot..][..ot];
                            let xrow = &xi[(xc * nf + xf) * nt..][..nt];
                            for k in 0..kt {
                                let st = taps.shift[2][k];
                                let (t0, t1) = valid_range(ot, nt, st);
                                if t0 == t1 {
                                    continue;
                                }
                                let wv = w[(a * kf + b) * kt + k];
                                let xs = &xrow[(t0 as isize + st) as usize..][..t1 - t0];
                                for (ov, xv) in orow[t0..t1].iter_mut().zip(xs) {
                                    *ov += wv * xv;
                                }
                            }
                        }
                    }
                }
            }
        }
    });
    Ok(out)
}

fn check_grad_out(spec: &ConvSpec, x_spatial: [usize; 3], grad_out: &Tensor4) -> Result<[usize; 3]> {
    let (out_sp, pad) = spec.geometry(x_spatial)?;
    if grad_out.shape() != [spec.n_filters, out_sp[0], out_sp[1], out_sp[2]] {
        return Err(Error::ShapeMismatch(format!(
            "conv gradient shape {:?} does not match output {:?}",
            grad_out.shape(),
            out_sp
        )));
    }
    Ok(pad)
}

/// Gradient with respect to the input: the adjoint of [`conv3d_forward`] in `x`.
/// Contributions that fall into the zero padding are dropped.
pub fn conv3d_backward_input(
    x_shape: [usize; 4],
    spec: &ConvSpec,
    weights: &[f64],
    grad_out: &Tensor4,
) -> Result<Tensor4> {
    let x_sp = [x_shape[1], x_shape[2], x_shape[3]];
    if x_shape[0] != spec.in_maps || weights.len() != spec.weight_len() {
        return Err(Error::ShapeMismatch("conv backward: input maps or weights mismatch".into()));
    }
    let pad = check_grad_out(spec, x_sp, grad_out)?;
    let [oc, of, ot] = grad_out.spatial();
    let [nc, nf, nt] = x_sp;
    let [kc, kf, kt] = spec.kernel;
    let kvol = spec.kernel_volume();
    let taps = Taps::new(spec, pad);
    let mut gx = Tensor4::zeros(x_shape);

    par::for_each_chunk_mut(gx.data_mut(), nc * nf * nt, |i, gxi| {
        for m in 0..spec.n_filters {
            let g = grad_out.map(m);
            let w = &weights[(m * spec.in_maps + i) * kvol..][..kvol];
            for a in 0..kc {
                let sc = taps.shift[0][a];
                let (c0, c1) = valid_range(oc, nc, sc);
                for b in 0..kf {
                    let sf = taps.shift[1][b];
                    let (f0, f1) = valid_range(of, nf, sf);
                    for c in c0..c1 {
                        let xc = (c as isize + sc) as usize;
                        for f in f0..f1 {
                            let xf = (f as isize + sf) as usize;
                            let grow = &g[(c * of + f) * ot..][..ot];
                            let xrow = &mut gxi[(xc * nf + xf) * nt..][..nt];
                            for k in 0..kt {
                                let st = taps.shift[2][k];
                                let (t0, t1) = valid_range(ot, nt, st);
                                if t0 == t1 {
                                    continue;
                                }
                                let wv = w[(a * kf + b) * kt + k];
                                let xs = &mut xrow[(t0 as isize + st) as usize..][..t1 - t0];
                                for (xv, gv) in xs.iter_mut().zip(&grow[t0..t1]) {
                                    *xv += wv * gv;
                                }
                            }
                        }
                    }
                }
            }
        }
    });
    Ok(gx)
}

/// Gradients with respect to weights and biases.
pub fn conv3d_backward_params(
    x: &Tensor4,
    spec: &ConvSpec,
    grad_out: &Tensor4,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if x.maps() != spec.in_maps {
        return Err(Error::ShapeMismatch("conv backward: input maps mismatch".into()));
    }
    let pad = check_grad_out(spec, x.spatial(), grad_out)?;
    let [oc, of, ot] = grad_out.spatial();
    let [nc, nf, nt] = x.spatial();
    let [kc, kf, kt] = spec.kernel;
    let kvol = spec.kernel_volume();
    let taps = Taps::new(spec, pad);
    let mut gw = vec![0.0; spec.weight_len()];

    par::for_each_chunk_mut(&mut gw, spec.in_maps * kvol, |m, gwm| {
        let g = grad_out.map(m);
        for i in 0..spec.in_maps {
            let xi = x.map(i);
            let gwi = &mut gwm[i * kvol..][..kvol];
            for a in 0..kc {
                let sc = taps.shift[0][a];
                let (c0, c1) = valid_range(oc, nc, sc);
                for b in 0..kf {
                    let sf = taps.shift[1][b];
                    let (f0, f1) = valid_range(of, nf, sf);
                    for c in c0..c1 {
                        let xc = (c as isize + sc) as usize;
                        for f in f0..f1 {
                            let xf = (f as isize + sf) as usize;
                            let grow = &g[(c * of + f) * ot..][..ot];
                            let xrow = &xi[(xc * nf + xf) * nt..][..nt];
                            for k in 0..kt {
                                let st = taps.shift[2][k];
                                let (t0, t1) = valid_range(ot, nt, st);
                                if t0 == t1 {
                                    continue;
                                }
                                let xs = &xrow[(t0 as isize + st) as usize..][..t1 - t0];
                                let dot: f64 = grow[t0..t1].iter().zip(xs).map(|(p, q)| p * q).sum();
                                gwi[(a * kf + b) * kt + k] += dot;
                            }
                        }
                    }
                }
            }
        }
    });
    let gb = (0..spec.n_filters).map(|m| grad_out.map(m).iter().sum()).collect();
    Ok((gw, gb))
}

/// All three gradients of [`conv3d_forward`].
pub fn conv3d_backward(x: &Tensor4, spec: &ConvSpec, weights: &[f64], grad_out: &Tensor4) -> Result<ConvGrads> {
    let (grad_w, grad_b) = conv3d_backward_params(x, spec, grad_out)?;
    let grad_x = conv3d_backward_input(x.shape(), spec, weights, grad_out)?;
    Ok(ConvGrads { grad_x, grad_w, grad_b })
}
