//! Diffusion noise schedules and the forward (noising) process.

use super::DiffusionError;
use crate::nn::Planes;

/// Per-timestep betas with derived alphas and cumulative products. Index 0
/// holds t = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionSchedule {
    pub betas: Vec<f64>,
    pub alphas: Vec<f64>,
    pub alpha_bars: Vec<f64>,
}

impl DiffusionSchedule {
    fn from_betas(betas: Vec<f64>) -> Result<DiffusionSchedule, DiffusionError> {
        if betas.iter().any(|b| !(0.0..1.0).contains(b) || *b == 0.0) {
            return Err(DiffusionError::Schedule("betas must lie in (0, 1)".into()));
        }
        let alphas: Vec<f64> = betas.iter().map(|b| 1.0 - b).collect();
        let mut alpha_bars = Vec::with_capacity(betas.len());
        let mut prod = 1.0;
        for a in &alphas {
            prod *= a;
            alpha_bars.push(prod);
        }
        Ok(DiffusionSchedule { betas, alphas, alpha_bars })
    }

    pub fn len(&self) -> usize {
        self.betas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.betas.is_empty()
    }

    /// Cumulative alpha at 1-based timestep t; t = 0 reads as 1 (no noise).
    pub fn alpha_bar(&self, t: usize) -> f64 {
        if t == 0 {
            1.0
        } else {
            self.alpha_bars[t - 1]
        }
    }

    pub fn beta(&self, t: usize) -> f64 {
        self.betas[t - 1]
    }
}

fn check_endpoints(t_steps: usize, beta_1: f64, beta_t: f64) -> Result<(), DiffusionError> {
    if t_steps < 2 {
        return Err(DiffusionError::Schedule("need at least 2 timesteps".into()));
    }
    if !(0.0 < beta_1 && beta_1 <= beta_t && beta_t < 1.0) {
        return Err(DiffusionError::Schedule(format!(
            "require 0 < beta_1 <= beta_T < 1, got ({beta_1}, {beta_t})"
        )));
    }
    Ok(())
}

/// beta_t = beta_1 + (t-1)/(T-1) * (beta_T - beta_1).
pub fn linear_beta_schedule(
    t_steps: usize,
    beta_1: f64,
    beta_t: f64,
) -> Result<DiffusionSchedule, DiffusionError> {
    check_endpoints(t_steps, beta_1, beta_t)?;
    let betas = (0..t_steps)
        .map(|i| beta_1 + (i as f64) / (t_steps as f64 - 1.0) * (beta_t - beta_1))
        .collect();
    DiffusionSchedule::from_betas(betas)
}

/// Cosine interpolation between the stated beta endpoints:
/// beta_t = beta_1 + (beta_T - beta_1) * (1 - cos(pi*(t-1)/(T-1))) / 2.
pub fn cosine_beta_schedule(
    t_steps: usize,
    beta_1: f64,
    beta_t: f64,
) -> Result<DiffusionSchedule, DiffusionError> {
    check_endpoints(t_steps, beta_1, beta_t)?;
    let betas = (0..t_steps)
        .map(|i| {
            let frac = (i as f64) / (t_steps as f64 - 1.0);
            beta_1 + (beta_t - beta_1) * (1.0 - (std::f64::consts::PI * frac).cos()) / 2.0
        })
        .collect();
    DiffusionSchedule::from_betas(betas)
}

/// Forward noising: sqrt(abar_t) * x0 + sqrt(1 - abar_t) * eps, with x0 in
/// model space [-1, 1].
pub fn q_sample(
    x0: &Planes,
    t: usize,
    eps: &Planes,
    sched: &DiffusionSchedule,
) -> Result<Planes, DiffusionError> {
    if (x0.c, x0.h, x0.w) != (eps.c, eps.h, eps.w) {
        return Err(DiffusionError::Shape("x0 and eps differ in shape".into()));
    }
    assert!(t >= 1 && t <= sched.len(), "timestep out of range");
    let ab = sched.alpha_bar(t);
    let (ca, ce) = (ab.sqrt(), (1.0 - ab).sqrt());
    let data = x0
        .data
        .iter()
        .zip(&eps.data)
        .map(|(x, e)| ca * x + ce * e)
        .collect();
    Ok(Planes { c: x0.c, h: x0.h, w: x0.w, data })
}
