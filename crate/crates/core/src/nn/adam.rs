use crate::nn::tensor::Tensor;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// First and second moment estimates, one pair per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<Tensor>,
    pub v: Vec<Tensor>,
    pub step: u64,
}

impl AdamState {
    pub fn new(params: &[Tensor]) -> Self {
        let zeros = || params.iter().map(|p| Tensor::zeros(p.shape().to_vec())).collect();
        Self {
            m: zeros(),
            v: zeros(),
            step: 0,
        }
    }
}

/// One bias-corrected Adam update.
pub fn adam_step(params: &mut [Tensor], grads: &[Tensor], state: &mut AdamState, lr: f64) {
    assert_eq!(params.len(), grads.len(), "adam: params and grads differ in count");
    assert_eq!(params.len(), state.m.len(), "adam: state does not mirror params");
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - BETA1.powi(t);
    let c2 = 1.0 - BETA2.powi(t);
    for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
        assert_eq!(p.shape(), g.shape(), "adam: gradient shape differs from parameter");
        let m = state.m[i].data_mut();
        let v = state.v[i].data_mut();
        for (((w, &gi), mi), vi) in p.data_mut().iter_mut().zip(g.data()).zip(m).zip(v) {
            *mi = BETA1 * *mi + (1.0 - BETA1) * gi;
            *vi = BETA2 * *vi + (1.0 - BETA2) * gi * gi;
            let mh = *mi / c1;
            let vh = *vi / c2;
            *w -= lr * mh / (vh.sqrt() + EPSILON);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_is_lr_sign() {
        let mut p = vec![Tensor::scalar_vec(vec![1.0, 1.0, 1.0])];
        let g = vec![Tensor::scalar_vec(vec![0.3, -20.0, 1e-3])];
        let mut s = AdamState::new(&p);
        adam_step(&mut p, &g, &mut s, 0.01);
        let d: Vec<f64> = p[0].data().iter().map(|w| w - 1.0).collect();
        assert!((d[0] + 0.01).abs() < 1e-6);
        assert!((d[1] - 0.01).abs() < 1e-6);
        assert!((d[2] + 0.01).abs() < 1e-4);
    }

    #[test]
    fn zero_gradient_is_fixed_point() {
        let mut p = vec![Tensor::scalar_vec(vec![0.25, -4.0])];
        let g = vec![Tensor::zeros(vec![2])];
        let mut s = AdamState::new(&p);
        for _ in 0..100 {
            adam_step(&mut p, &g, &mut s, 0.1);
        }
        assert_eq!(p[0].data(), &[0.25, -4.0]);
    }
}
