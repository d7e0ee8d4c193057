use crate::error::{Error, Result};

use super::Tensor4;

/// Non-overlapping max pooling with stride equal to the pool size.
///
/// Trailing elements that do not fill a whole window are dropped. Returns the
/// pooled tensor and, per output element, the flat input index of its maximum
/// (first in row-major order on ties).
pub fn maxpool3d(x: &Tensor4, pool: [usize; 3]) -> Result<(Tensor4, Vec<usize>)> {
    let [maps, nc, nf, nt] = x.shape();
    let input = [nc, nf, nt];
    if pool.contains(&0) || (0..3).any(|a| pool[a] > input[a]) {
        return Err(Error::PoolLargerThanInput { pool, input });
    }
    let [pc, pf, pt] = pool;
    let (oc, of, ot) = (nc / pc, nf / pf, nt / pt);
    let mut y = Tensor4::zeros([maps, oc, of, ot]);
    let mut argmax = vec![0usize; y.data().len()];
    let data = x.data();
    let mut o = 0;
    for m in 0..maps {
        for c in 0..oc {
            for f in 0..of {
                for t in 0..ot {
                    let mut best = f64::NEG_INFINITY;
                    let mut best_idx = x.index(m, c * pc, f * pf, t * pt);
                    for a in 0..pc {
                        for b in 0..pf {
                            let row = x.index(m, c * pc + a, f * pf + b, t * pt);
                            for (k, &v) in data[row..row + pt].iter().enumerate() {
                                if v > best {
                                    best = v;
                                    best_idx = row + k;
                                }
                            }
                        }
                    }
                    y.data_mut()[o] = data[best_idx];
                    argmax[o] = best_idx;
                    o += 1;
                }
            }
        }
    }
    Ok((y, argmax))
}

/// Routes each upstream gradient to the input position that won its window.
pub fn maxpool3d_backward(argmax: &[usize], grad_out: &Tensor4, in_shape: [usize; 4]) -> Result<Tensor4> {
    if argmax.len() != grad_out.data().len() {
        return Err(Error::ShapeMismatch("pool gradient does not match argmax".into()));
    }
    let mut gx = Tensor4::zeros(in_shape);
    let n = gx.data().len();
    let gxd = gx.data_mut();
    for (&i, &g) in argmax.iter().zip(grad_out.data()) {
        if i >= n {
            return Err(Error::ShapeMismatch(format!("argmax {i} outside input of {n}")));
        }
        gxd[i] += g;
    }
    Ok(gx)
}

/// Mean of each map.
pub fn global_avg_pool(x: &Tensor4) -> Vec<f64> {
    let n = x.map_len() as f64;
    (0..x.maps()).map(|m| x.map(m).iter().sum::<f64>() / n).collect()
}

/// Spreads each map's gradient uniformly over its elements.
pub fn global_avg_pool_backward(grad: &[f64], in_shape: [usize; 4]) -> Result<Tensor4> {
    if grad.len() != in_shape[0] {
        return Err(Error::ShapeMismatch(format!(
            "{} GAP gradients for {} maps",
            grad.len(),
            in_shape[0]
        )));
    }
    let mut gx = Tensor4::zeros(in_shape);
    let per = gx.map_len();
    for (chunk, &g) in gx.data_mut().chunks_mut(per).zip(grad) {
        chunk.fill(g / per as f64);
    }
    Ok(gx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pools_time_line() {
        let x = Tensor4::from_vec([1, 1, 1, 4], vec![1.0, 3.0, 2.0, 4.0]).unwrap();
        let (y, arg) = maxpool3d(&x, [1, 1, 2]).unwrap();
        assert_eq!(y.data(), &[3.0, 4.0]);
        assert_eq!(arg, [1, 3]);
    }

    #[test]
    fn floor_shapes() {
        let x = Tensor4::zeros([2, 18, 128, 59]);
        let (y, _) = maxpool3d(&x, [1, 2, 2]).unwrap();
        assert_eq!(y.shape(), [2, 18, 64, 29]);
    }

    #[test]
    fn ties_go_to_first_index() {
        let x = Tensor4::from_vec([1, 1, 2, 2], vec![5.0, 5.0, 5.0, 5.0]).unwrap();
        let (_, arg) = maxpool3d(&x, [1, 2, 2]).unwrap();
        assert_eq!(arg, [0]);
    }

    #[test]
    fn pool_larger_than_input() {
        let x = Tensor4::zeros([1, 1, 3, 3]);
        assert!(matches!(maxpool3d(&x, [2, 1, 1]), Err(Error::PoolLargerThanInput { .. })));
    }

    #[test]
    fn gap_values() {
        let x = Tensor4::from_vec([2, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0, 7.0, 7.0, 7.0, 7.0]).unwrap();
        assert_eq!(global_avg_pool(&x), [2.5, 7.0]);
        let g = global_avg_pool_backward(&[4.0, 8.0], x.shape()).unwrap();
        assert_eq!(g.data(), &[1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 2.0]);
    }

    proptest! {
        #[test]
        fn routed_gradient_is_conserved(
            vals in prop::collection::vec(-1e3f64..1e3, 2 * 4 * 6 * 7),
            grads in prop::collection::vec(-10.0f64..10.0, 2 * 2 * 3 * 3),
        ) {
            let x = Tensor4::from_vec([2, 4, 6, 7], vals).unwrap();
            let (y, arg) = maxpool3d(&x, [2, 2, 2]).unwrap();
            prop_assert_eq!(y.shape(), [2, 2, 3, 3]);
            let g = Tensor4::from_vec(y.shape(), grads).unwrap();
            let gx = maxpool3d_backward(&arg, &g, x.shape()).unwrap();
            let total_in: f64 = gx.data().iter().sum();
            let total_out: f64 = g.data().iter().sum();
            prop_assert!((total_in - total_out).abs() < 1e-9);
        }
    }
}
