//! AdamW with decoupled weight decay, and the EMA shadow update.

#[derive(Debug, Clone)]
pub struct AdamW {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamW {
    pub fn new(n_params: usize, lr: f64, weight_decay: f64) -> AdamW {
        AdamW {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            step: 0,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
        }
    }

    /// One update; `lr_scale` multiplies the base learning rate (warmup /
    /// cosine schedules live in the train loops).
    pub fn update(&mut self, params: &mut [f64], grads: &[f64], lr_scale: f64) {
        assert_eq!(params.len(), grads.len());
        assert_eq!(params.len(), self.m.len());
        self.step += 1;
        let lr = self.lr * lr_scale;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= lr * (m_hat / (v_hat.sqrt() + self.eps) + self.weight_decay * params[i]);
        }
    }
}

/// shadow <- decay * shadow + (1 - decay) * params.
pub fn ema_update(shadow: &mut [f64], params: &[f64], decay: f64) {
    assert_eq!(shadow.len(), params.len());
    for (s, p) in shadow.iter_mut().zip(params) {
        *s = decay * *s + (1.0 - decay) * p;
    }
}
