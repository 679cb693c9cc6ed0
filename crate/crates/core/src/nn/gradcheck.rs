//! Central finite-difference gradient verification. Independent of the
//! backward passes it audits: it only ever calls the forward/loss closure.

/// Central-difference gradient of `loss` over every parameter.
pub fn finite_difference_grad(
    loss: &mut dyn FnMut(&[f64]) -> f64,
    params: &[f64],
    eps: f64,
) -> Vec<f64> {
    let mut p = params.to_vec();
    let mut grad = vec![0.0; p.len()];
    for i in 0..p.len() {
        let orig = p[i];
        p[i] = orig + eps;
        let up = loss(&p);
        p[i] = orig - eps;
        let down = loss(&p);
        p[i] = orig;
        grad[i] = (up - down) / (2.0 * eps);
    }
    grad
}

/// Worst relative disagreement, with an absolute floor so jointly-tiny
/// entries (e.g. untouched embedding rows) do not produce 0/0 noise.
pub fn max_rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| {
            let scale = a.abs().max(n.abs());
            if scale < 1e-8 {
                0.0
            } else {
                (a - n).abs() / scale
            }
        })
        .fold(0.0, f64::max)
}
