use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::eigensolver::Spectrum;
use crate::error::{Error, Result};
use crate::geometry::unit_ball_volume;

/// Truncated heat trace together with an estimate of the omitted tail.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatTrace {
    pub value: f64,
    /// `Σ_{n>N} exp(−λ_n t)` with `λ_n` replaced by its Weyl asymptote.
    pub tail_estimate: f64,
}

fn check_time(t: f64) -> Result<()> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidArgument(format!("time must be positive, got {t}")));
    }
    Ok(())
}

/// `Z(t) = Σ_{n=1}^N exp(−λ_n t)`.
pub fn heat_trace(spec: &Spectrum, t: f64) -> Result<HeatTrace> {
    check_time(t)?;
    let value = spec.eigenvalues.iter().map(|l| (-l * t).exp()).sum();
    let tail_estimate = weyl_tail(spec.len(), spec.dimension, spec.effective_volume(), t)?;
    Ok(HeatTrace {
        value,
        tail_estimate,
    })
}

/// `∫_N^∞ exp(−c x^{2/d} t) dx` with `c = 4π² (B_d V)^{−2/d}`, which dominates
/// the sum over modes beyond `N` when `λ_n` follows the asymptote.
fn weyl_tail(n: usize, d: usize, volume: f64, t: f64) -> Result<f64> {
    let bd = unit_ball_volume(d)?;
    let a = 4.0 * PI * PI * (bd * volume).powf(-2.0 / d as f64) * t;
    let n = n as f64;
    Ok(match d {
        2 => (-a * n).exp() / a,
        _ => {
            // (3/2) a^{-3/2} Γ(3/2, z), z = a N^{2/3}
            let z = a * n.powf(2.0 / 3.0);
            let upper_gamma = z.sqrt() * (-z).exp() + 0.5 * PI.sqrt() * erfc(z.sqrt());
            1.5 * a.powf(-1.5) * upper_gamma
        }
    })
}

fn check_index(spec: &Spectrum, n: usize) -> Result<()> {
    if n == 0 || n > spec.len() {
        return Err(Error::InvalidArgument(format!(
            "mode index {n} outside 1..={}",
            spec.len()
        )));
    }
    Ok(())
}

/// `ln D(n, t)`, evaluated relative to `λ_1` so that large `λ t` cannot underflow.
pub fn log_influence_ratio(spec: &Spectrum, n: usize, t: f64) -> Result<f64> {
    check_time(t)?;
    check_index(spec, n)?;
    let l1 = spec.eigenvalues[0];
    let log_z: f64 = spec
        .eigenvalues
        .iter()
        .map(|l| (-(l - l1) * t).exp())
        .sum::<f64>()
        .ln();
    Ok(-(spec.eigenvalues[n - 1] - l1) * t - log_z)
}

/// Share `D(n, t) = exp(−λ_n t) / Z(t)` of mode `n` (1-based) in the truncated heat trace.
pub fn influence_ratio(spec: &Spectrum, n: usize, t: f64) -> Result<f64> {
    Ok(log_influence_ratio(spec, n, t)?.exp())
}

/// Small-time coefficients `a₀ = V/(4π)^{d/2}` and `a_{1/2} = −S/(4 (4π)^{(d−1)/2})`.
pub fn heat_coefficients(volume: f64, surface: f64, d: usize) -> Result<(f64, f64)> {
    unit_ball_volume(d)?;
    let four_pi = 4.0 * PI;
    let a0 = volume / four_pi.powf(d as f64 / 2.0);
    let a_half = -surface / (4.0 * four_pi.powf((d as f64 - 1.0) / 2.0));
    Ok((a0, a_half))
}

/// Two-term small-time expansion `a₀ t^{−d/2} + a_{1/2} t^{−(d−1)/2}`.
pub fn heat_expansion(volume: f64, surface: f64, d: usize, t: f64) -> Result<f64> {
    check_time(t)?;
    let (a0, a_half) = heat_coefficients(volume, surface, d)?;
    let df = d as f64;
    Ok(a0 * t.powf(-df / 2.0) + a_half * t.powf(-(df - 1.0) / 2.0))
}
