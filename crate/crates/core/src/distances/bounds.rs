//! Normalisation factor, truncation bounds, residual ratio and universal
//! eigenvalue bounds.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::zeta::zeta_tail;
use crate::eigensolver::Spectrum;
use crate::error::{Error, Result};
use crate::geometry::unit_ball_volume;

/// Largest N scanned by [`select_truncation`].
pub const TRUNCATION_CAP: usize = 10_000_000;

/// Coefficients of the convergence bound for one pair of spectra.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCoefficients {
    pub dimension: usize,
    pub p: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "V_hat")]
    pub v_hat: f64,
    pub mu: f64,
    /// Upper bound on the full distance; divides it into nWESD.
    #[serde(rename = "W")]
    pub w: f64,
}

pub(crate) fn check_exponent(p: f64, d: usize) -> Result<()> {
    let half_d = d as f64 / 2.0;
    if !(p.is_finite() && p > half_d) {
        return Err(Error::InvalidExponent { p, half_d });
    }
    Ok(())
}

/// `ζ(s) − 1 − 2^{-s}`.
fn zeta_from_three(s: f64) -> Result<f64> {
    zeta_tail(s, 3)
}

/// Coefficients from `V̂` (largest volume) and `μ` (largest first eigenvalue).
pub fn bound_coefficients(d: usize, p: f64, v_hat: f64, mu: f64) -> Result<BoundCoefficients> {
    check_exponent(p, d)?;
    let bd = unit_ball_volume(d)?;
    if !(v_hat > 0.0 && mu > 0.0) {
        return Err(Error::InvalidArgument("volume and first eigenvalue must be positive".into()));
    }
    let df = d as f64;
    let lead = |i: f64| (df + 2.0) / (df * 4.0 * PI * PI) * (bd * v_hat / i).powf(2.0 / df);
    let bracket = |name: &'static str, value: f64| {
        if value < 0.0 {
            Err(Error::NegativeBoundBracket { name, value })
        } else {
            Ok(value.powf(p))
        }
    };
    let c1 = bracket("C[1]", lead(1.0) - 1.0 / mu)?;
    let c2 = bracket("C[2]", lead(2.0) - df / (df + 4.0) / mu)?;
    let k = bracket("K", lead(1.0) - df / (df + 2.64) / mu)?;
    let c = c1 + c2;
    let w = (c + k * zeta_from_three(2.0 * p / df)?).powf(1.0 / p);
    Ok(BoundCoefficients {
        dimension: d,
        p,
        c,
        k,
        v_hat,
        mu,
        w,
    })
}

/// `W` and its ingredients for a pair of spectra. Volumes are taken after
/// any normalisation, so volume-normalised spectra give `V̂ = 1`.
pub fn normalisation_factor(a: &Spectrum, b: &Spectrum, p: f64) -> Result<BoundCoefficients> {
    super::check_compatible(a, b)?;
    let v_hat = a.effective_volume().max(b.effective_volume());
    let mu = a.eigenvalues[0].max(b.eigenvalues[0]);
    bound_coefficients(a.dimension, p, v_hat, mu)
}

/// Bounds on `|ρ − ρ^N|` and `|ρ̄ − ρ̄^N|` for `N ≥ 3`.
pub fn truncation_bounds_from(coef: &BoundCoefficients, n: usize) -> Result<(f64, f64)> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("truncation bounds need N >= 3, got {n}")));
    }
    let s = 2.0 * coef.p / coef.dimension as f64;
    let full = coef.c + coef.k * zeta_from_three(s)?;
    let missing = coef.k * zeta_tail(s, n as u64 + 1)?;
    // 1 - (1 - missing/full)^{1/p}, without cancellation
    let nwesd = -((-missing / full).ln_1p() / coef.p).exp_m1();
    let wesd = full.powf(1.0 / coef.p) * nwesd;
    Ok((wesd, nwesd))
}

/// `(K Σ_{n>N} n^{−2p/d})^{1/p}`, a bound on `ρ − ρ^N` that does not depend on
/// the partial sum. `truncation_bounds_from` evaluates the gap at the largest
/// admissible partial sum and can be exceeded when the partial sum is small.
pub fn tail_bound_from(coef: &BoundCoefficients, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("tail bound needs N >= 2, got {n}")));
    }
    let s = 2.0 * coef.p / coef.dimension as f64;
    Ok((coef.k * zeta_tail(s, n as u64 + 1)?).powf(1.0 / coef.p))
}

pub fn truncation_bounds(a: &Spectrum, b: &Spectrum, p: f64, n: usize) -> Result<(f64, f64)> {
    truncation_bounds_from(&normalisation_factor(a, b, p)?, n)
}

/// Shape-independent residual ratio `R(N, p)`.
pub fn residual_ratio(n: usize, p: f64, d: usize) -> Result<f64> {
    unit_ball_volume(d)?;
    check_exponent(p, d)?;
    if n < 3 {
        return Err(Error::InvalidArgument(format!("residual ratio needs N >= 3, got {n}")));
    }
    let s = 2.0 * p / d as f64;
    let ratio = zeta_tail(s, n as u64 + 1)? / zeta_from_three(s)?;
    Ok(-((-ratio).ln_1p() / p).exp_m1())
}

/// Smallest `N ≥ 3` with `R(N, p) ≤ target`.
pub fn select_truncation(p: f64, d: usize, target: f64) -> Result<usize> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InvalidArgument(format!("target must lie in (0, 1), got {target}")));
    }
    if residual_ratio(TRUNCATION_CAP, p, d)? > target {
        return Err(Error::TargetUnreachable {
            target,
            cap: TRUNCATION_CAP,
        });
    }
    // R is strictly decreasing in N.
    let (mut lo, mut hi) = (3usize, TRUNCATION_CAP);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if residual_ratio(mid, p, d)? <= target {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(lo)
}

/// Li-Yau lower bound `(d/(d+2)) 4π² (n / (B_d V))^{2/d}` on `λ_n`.
pub fn li_yau_lower_bound(n: usize, d: usize, volume: f64) -> Result<f64> {
    let df = d as f64;
    Ok(df / (df + 2.0) * crate::eigensolver::weyl_asymptote(n, d, volume)?)
}

fn cheng_yang_a(j: usize) -> f64 {
    match j {
        1 => 2.64,
        2 => 2.27,
        _ => 2.2 - 4.0 * (1.0 + (j as f64 - 3.0) / 50.0).ln(),
    }
}

/// `C₀(d, n) = 1 + a(min(d, n − 1)) / d`.
pub fn cheng_yang_constant(d: usize, n: usize) -> Result<f64> {
    unit_ball_volume(d)?;
    if n < 2 {
        return Err(Error::InvalidArgument(format!("Cheng-Yang bound needs n >= 2, got {n}")));
    }
    Ok(1.0 + cheng_yang_a(d.min(n - 1)) / d as f64)
}

/// Cheng-Yang upper bound `C₀(d, n) n^{2/d} λ₁` on `λ_{n+1}`.
pub fn cheng_yang_upper_bound(n: usize, d: usize, lambda1: f64) -> Result<f64> {
    Ok(cheng_yang_constant(d, n)? * (n as f64).powf(2.0 / d as f64) * lambda1)
}

/// Yang's bound on `λ_{n+1}` from `λ_1..λ_n`: `(1 + 4/d) mean(λ_1..λ_n)`.
pub fn yang_growth_bound(leading: &[f64], d: usize) -> Result<f64> {
    unit_ball_volume(d)?;
    if leading.is_empty() {
        return Err(Error::InvalidArgument("Yang bound needs at least one eigenvalue".into()));
    }
    let mean = leading.iter().sum::<f64>() / leading.len() as f64;
    Ok((1.0 + 4.0 / d as f64) * mean)
}
