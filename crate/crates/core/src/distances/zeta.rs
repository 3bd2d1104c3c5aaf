use crate::error::{Error, Result};

/// B_{2k} / (2k)! for k = 1..8.
const BERNOULLI_OVER_FACTORIAL: [f64; 8] = [
    1.0 / 6.0 / 2.0,
    -1.0 / 30.0 / 24.0,
    1.0 / 42.0 / 720.0,
    -1.0 / 30.0 / 40_320.0,
    5.0 / 66.0 / 3_628_800.0,
    -691.0 / 2730.0 / 479_001_600.0,
    7.0 / 6.0 / 87_178_291_200.0,
    -3617.0 / 510.0 / 20_922_789_888_000.0,
];

const MIN_EXCESS: f64 = 1e-6;

/// Riemann zeta function for real `s > 1`.
pub fn riemann_zeta(s: f64) -> Result<f64> {
    zeta_tail(s, 1)
}

/// `Σ_{n ≥ m} n^{-s}` by Euler-Maclaurin: a direct block of terms, then
/// the integral, half-term and Bernoulli corrections.
pub fn zeta_tail(s: f64, m: u64) -> Result<f64> {
    if !(s.is_finite() && s > 1.0 + MIN_EXCESS) {
        return Err(Error::InvalidArgument(format!(
            "zeta needs s > 1 + {MIN_EXCESS:e}, got {s}"
        )));
    }
    if m == 0 {
        return Err(Error::InvalidArgument("zeta tail starts at n >= 1".into()));
    }
    let direct = 20u64.max(s.ceil() as u64);
    let mut sum = 0.0;
    for n in (m..m + direct).rev() {
        sum += (n as f64).powf(-s);
    }
    let x = (m + direct) as f64;
    let xs = x.powf(-s);
    let mut tail = x * xs / (s - 1.0) + 0.5 * xs;
    // rising product s (s+1) ... (s+2k-2), times x^{-s-2k+1}
    let mut rising = s;
    let mut power = xs / x;
    for (k, coef) in BERNOULLI_OVER_FACTORIAL.iter().enumerate() {
        let term = coef * rising * power;
        tail += term;
        if term.abs() <= 1e-18 * (sum + tail).abs() {
            break;
        }
        let j = 2.0 * k as f64;
        rising *= (s + j + 1.0) * (s + j + 2.0);
        power /= x * x;
    }
    Ok(sum + tail)
}
