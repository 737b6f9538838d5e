use ndarray::Array2;

use crate::error::{Error, Result};

/// Offset `s` of the squared-cosine schedule.
pub const COSINE_OFFSET: f64 = 0.008;
/// Upper clip on per-step `β_k`.
pub const MAX_BETA: f64 = 0.999;

/// Squared-cosine noise schedule over `K` steps with the reverse-step
/// coefficients `α(k)`, `γ(k)`, `σ(k)` for
/// `A^{k−1} = α(k) · (A^k − γ(k) · ε̂ + σ(k) · z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSchedule {
    steps: usize,
    /// `ᾱ_0 … ᾱ_K`.
    alpha_bar: Vec<f64>,
    /// `β_0 … β_K` with `β_0 = 0`.
    beta: Vec<f64>,
}

fn cosine_f(k: f64, steps: f64) -> f64 {
    (((k / steps + COSINE_OFFSET) / (1.0 + COSINE_OFFSET)) * std::f64::consts::FRAC_PI_2)
        .cos()
        .powi(2)
}

/// Builds the schedule: `β_k = min(1 − f(k)/f(k−1), MAX_BETA)` and
/// `ᾱ_k = Π_{j ≤ k} (1 − β_j)`, which equals `f(k)/f(0)` wherever the clip
/// is inactive.
pub fn build_schedule(steps: usize) -> Result<NoiseSchedule> {
    if steps == 0 {
        return Err(Error::InvalidConfig("diffusion needs at least one step".into()));
    }
    let kf = steps as f64;
    let mut beta = vec![0.0; steps + 1];
    let mut alpha_bar = vec![1.0; steps + 1];
    for k in 1..=steps {
        let b = (1.0 - cosine_f(k as f64, kf) / cosine_f((k - 1) as f64, kf)).min(MAX_BETA);
        beta[k] = b;
        alpha_bar[k] = alpha_bar[k - 1] * (1.0 - b);
    }
    Ok(NoiseSchedule {
        steps,
        alpha_bar,
        beta,
    })
}

impl NoiseSchedule {
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn alpha_bar(&self, k: usize) -> f64 {
        self.alpha_bar[k]
    }

    pub fn beta(&self, k: usize) -> f64 {
        self.beta[k]
    }

    /// `1 / √(1 − β_k)`.
    pub fn alpha(&self, k: usize) -> f64 {
        1.0 / (1.0 - self.beta[k]).sqrt()
    }

    /// `β_k / √(1 − ᾱ_k)`.
    pub fn gamma(&self, k: usize) -> f64 {
        self.beta[k] / (1.0 - self.alpha_bar[k]).sqrt()
    }

    /// Noise scale inside the bracket, chosen so that `α(k) · σ(k)` is the
    /// posterior standard deviation `√β̃_k`; `σ(1) = 0`.
    pub fn sigma(&self, k: usize) -> f64 {
        let posterior = self.beta[k] * (1.0 - self.alpha_bar[k - 1]) / (1.0 - self.alpha_bar[k]);
        (posterior * (1.0 - self.beta[k])).sqrt()
    }

    /// Forward process `√ᾱ_k · A_0 + √(1 − ᾱ_k) · ε`.
    pub fn add_noise(&self, a0: &Array2<f64>, k: usize, eps: &Array2<f64>) -> Array2<f64> {
        let ab = self.alpha_bar[k];
        a0 * ab.sqrt() + eps * (1.0 - ab).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints() {
        let s = build_schedule(100).unwrap();
        assert!((s.alpha_bar(0) - 1.0).abs() <= 1e-6);
        assert!(s.alpha_bar(100) < 0.01);
        assert_eq!(s.sigma(1), 0.0);
        assert!(matches!(build_schedule(0), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn single_step_schedule() {
        let s = build_schedule(1).unwrap();
        assert!(s.alpha_bar(1) < 0.01);
        assert_eq!(s.sigma(1), 0.0);
    }
}
