use super::Tensor4;

/// Elementwise `max(x, 0)`.
pub fn relu(x: &Tensor4) -> Tensor4 {
    let mut y = x.clone();
    relu_inplace(&mut y);
    y
}

pub fn relu_inplace(x: &mut Tensor4) {
    x.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
}

/// Passes `grad_out` where `x > 0`; the subgradient at 0 is 0.
pub fn relu_backward(x: &Tensor4, grad_out: &Tensor4) -> Tensor4 {
    let mut g = grad_out.clone();
    relu_backward_inplace(x, &mut g);
    g
}

pub fn relu_backward_inplace(x: &Tensor4, grad: &mut Tensor4) {
    debug_assert_eq!(x.shape(), grad.shape());
    for (g, &v) in grad.data_mut().iter_mut().zip(x.data()) {
        if v <= 0.0 {
            *g = 0.0;
        }
    }
}
