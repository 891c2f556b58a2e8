use crate::math;

/// Decaying momentum coefficient:
/// `beta0 * (1 - t/T) / ((1 - beta0) + beta0 * (1 - t/T))`.
pub fn beta_decay(beta0: f64, t: usize, total_rounds: usize) -> f64 {
    let remaining = 1.0 - t as f64 / total_rounds as f64;
    beta0 * remaining / ((1.0 - beta0) + beta0 * remaining)
}

/// Exponentially growing mix coefficient `min(lambda0 * (1 + rho)^t, max)`.
pub fn lambda_schedule(lambda0: f64, rho: f64, t: usize, max_lambda: f64) -> f64 {
    let grown = lambda0 * math::powf(1.0 + rho, t as f64);
    if grown > max_lambda {
        max_lambda
    } else {
        grown
    }
}
