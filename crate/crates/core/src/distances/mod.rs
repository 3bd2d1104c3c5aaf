//! Spectral distances between shapes and the bounds that control them.

mod bounds;
mod heat;
mod zeta;

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::eigensolver::Spectrum;
use crate::error::{Error, Result};

pub use bounds::{
    bound_coefficients, cheng_yang_constant, cheng_yang_upper_bound, li_yau_lower_bound,
    normalisation_factor, residual_ratio, select_truncation, tail_bound_from, truncation_bounds,
    truncation_bounds_from, yang_growth_bound, BoundCoefficients, TRUNCATION_CAP,
};
pub use heat::{
    heat_coefficients, heat_expansion, heat_trace, influence_ratio, log_influence_ratio,
    HeatTrace,
};
pub use zeta::{riemann_zeta, zeta_tail};

pub const DEFAULT_MODES: usize = 200;

/// Default norm exponent: 1.5 in 2D, 2 in 3D.
pub fn default_p(d: usize) -> f64 {
    if d == 2 {
        1.5
    } else {
        2.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    Wesd,
    Nwesd,
    ShapeDna,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Wesd => "wesd",
            Metric::Nwesd => "nwesd",
            Metric::ShapeDna => "shape-dna",
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "wesd" => Ok(Metric::Wesd),
            "nwesd" => Ok(Metric::Nwesd),
            "shapedna" | "shape-dna" | "sd" => Ok(Metric::ShapeDna),
            other => Err(Error::InvalidArgument(format!("unknown metric {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistanceParams {
    pub p: f64,
    /// Truncation: number of modes used.
    pub n: usize,
    pub metric: Metric,
}

impl DistanceParams {
    pub fn new(p: f64, n: usize, metric: Metric) -> Self {
        DistanceParams { p, n, metric }
    }

    /// Default exponent for `d`, 200 modes.
    pub fn defaults(d: usize, metric: Metric) -> Self {
        DistanceParams::new(default_p(d), DEFAULT_MODES, metric)
    }
}

/// A distance value with its per-mode terms and the bound diagnostics that
/// could be evaluated for the pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub metric: Metric,
    pub p: f64,
    /// Modes actually used: `min(len_a, len_b, N)`.
    #[serde(rename = "N")]
    pub n: usize,
    pub value: f64,
    /// Per-mode kernel values.
    pub contributions: Vec<f64>,
    #[serde(rename = "W")]
    pub w: Option<f64>,
    #[serde(rename = "C")]
    pub c: Option<f64>,
    #[serde(rename = "K")]
    pub k: Option<f64>,
    #[serde(rename = "V_hat")]
    pub v_hat: Option<f64>,
    pub mu: Option<f64>,
    /// Upper bound on the truncation error of `value`.
    pub truncation_bound: Option<f64>,
    pub residual_ratio: Option<f64>,
}

pub(crate) fn check_compatible(a: &Spectrum, b: &Spectrum) -> Result<()> {
    if a.dimension != b.dimension {
        return Err(Error::DimensionMismatch(a.dimension, b.dimension));
    }
    if a.normalisation != b.normalisation {
        return Err(Error::NormalisationMismatch(
            a.normalisation.to_string(),
            b.normalisation.to_string(),
        ));
    }
    Ok(())
}

/// `|λ − ξ| / (λ ξ)`.
pub fn wesd_kernel(lambda: f64, xi: f64) -> f64 {
    (lambda - xi).abs() / (lambda * xi)
}

/// `Δ^{n,m}`: the WESD kernel for `m = 0`, otherwise `|λ^{m−1} − ξ^{m−1}|`.
pub fn mode_influence(lambda: f64, xi: f64, m: u32) -> f64 {
    if m == 0 {
        wesd_kernel(lambda, xi)
    } else {
        let e = m as i32 - 1;
        (lambda.powi(e) - xi.powi(e)).abs()
    }
}

fn effective_modes(a: &Spectrum, b: &Spectrum, n: usize) -> Result<usize> {
    if n == 0 {
        return Err(Error::InvalidArgument("truncation N must be at least 1".into()));
    }
    Ok(n.min(a.len()).min(b.len()))
}

/// `(Σ x_n^p)^{1/p}`.
fn p_norm(terms: &[f64], p: f64) -> f64 {
    terms.iter().map(|x| x.powf(p)).sum::<f64>().powf(1.0 / p)
}

fn wesd_report(a: &Spectrum, b: &Spectrum, p: f64, n: usize) -> Result<(DistanceReport, Result<BoundCoefficients>)> {
    check_compatible(a, b)?;
    bounds::check_exponent(p, a.dimension)?;
    let n = effective_modes(a, b, n)?;
    let contributions: Vec<f64> = a.eigenvalues[..n]
        .iter()
        .zip(&b.eigenvalues[..n])
        .map(|(&l, &x)| wesd_kernel(l, x))
        .collect();
    let value = p_norm(&contributions, p);
    let coef = normalisation_factor(a, b, p);
    let mut report = DistanceReport {
        metric: Metric::Wesd,
        p,
        n,
        value,
        contributions,
        w: None,
        c: None,
        k: None,
        v_hat: None,
        mu: None,
        truncation_bound: None,
        residual_ratio: None,
    };
    if n >= 3 {
        report.residual_ratio = Some(residual_ratio(n, p, a.dimension)?);
    }
    if let Ok(c) = &coef {
        report.w = Some(c.w);
        report.c = Some(c.c);
        report.k = Some(c.k);
        report.v_hat = Some(c.v_hat);
        report.mu = Some(c.mu);
    }
    Ok((report, coef))
}

/// Truncated weighted spectral distance `ρ^N`.
pub fn wesd(a: &Spectrum, b: &Spectrum, p: f64, n: usize) -> Result<DistanceReport> {
    let (mut report, coef) = wesd_report(a, b, p, n)?;
    if let (Ok(c), true) = (coef, report.n >= 3) {
        report.truncation_bound = Some(truncation_bounds_from(&c, report.n)?.0);
    }
    Ok(report)
}

/// Normalised distance `ρ̄^N = ρ^N / W`, in `[0, 1)`.
pub fn nwesd(a: &Spectrum, b: &Spectrum, p: f64, n: usize) -> Result<DistanceReport> {
    let (mut report, coef) = wesd_report(a, b, p, n)?;
    let coef = coef?;
    report.metric = Metric::Nwesd;
    report.value /= coef.w;
    if report.n >= 3 {
        report.truncation_bound = Some(truncation_bounds_from(&coef, report.n)?.1);
    }
    Ok(report)
}

/// Euclidean norm of the first `n` eigenvalue differences.
pub fn shape_dna_distance(a: &Spectrum, b: &Spectrum, n: usize) -> Result<f64> {
    check_compatible(a, b)?;
    let available = a.len().min(b.len());
    if n == 0 || n > available {
        return Err(Error::LengthShortfall {
            requested: n,
            available,
        });
    }
    Ok(a.eigenvalues[..n]
        .iter()
        .zip(&b.eigenvalues[..n])
        .map(|(l, x)| (l - x) * (l - x))
        .sum::<f64>()
        .sqrt())
}

/// Dispatch on `params.metric`.
pub fn distance(a: &Spectrum, b: &Spectrum, params: &DistanceParams) -> Result<DistanceReport> {
    match params.metric {
        Metric::Wesd => wesd(a, b, params.p, params.n),
        Metric::Nwesd => nwesd(a, b, params.p, params.n),
        Metric::ShapeDna => {
            let value = shape_dna_distance(a, b, params.n)?;
            let contributions = a.eigenvalues[..params.n]
                .iter()
                .zip(&b.eigenvalues[..params.n])
                .map(|(&l, &x)| mode_influence(l, x, 2))
                .collect();
            Ok(DistanceReport {
                metric: Metric::ShapeDna,
                p: 2.0,
                n: params.n,
                value,
                contributions,
                w: None,
                c: None,
                k: None,
                v_hat: None,
                mu: None,
                truncation_bound: None,
                residual_ratio: None,
            })
        }
    }
}

/// Distance value only.
pub fn distance_value(a: &Spectrum, b: &Spectrum, params: &DistanceParams) -> Result<f64> {
    match params.metric {
        Metric::ShapeDna => shape_dna_distance(a, b, params.n),
        _ => Ok(distance(a, b, params)?.value),
    }
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use crate::eigensolver::Normalisation;
    use std::f64::consts::PI;

    fn s(v: &[f64]) -> Spectrum {
        Spectrum::new(v.to_vec(), 2, 1.0).unwrap()
    }

    #[test]
    fn wesd_examples() {
        let a = s(&[1.0, 2.0, 3.0]);
        let b = s(&[2.0, 3.0, 4.0]);
        assert_eq!(wesd(&a, &a, 2.0, 3).unwrap().value, 0.0);
        let ab = wesd(&a, &b, 2.0, 3).unwrap();
        assert!((ab.value - 0.53359368645273739).abs() < 1e-15);
        let ba = wesd(&b, &a, 2.0, 3).unwrap();
        assert_eq!(ab.value.to_bits(), ba.value.to_bits());
    }

    #[test]
    fn wesd_contract_errors() {
        let a = s(&[1.0, 2.0]);
        let b3 = Spectrum::new(vec![1.0, 2.0], 3, 1.0).unwrap();
        assert!(matches!(wesd(&a, &b3, 2.0, 2), Err(Error::DimensionMismatch(2, 3))));
        let an = a.normalize(Normalisation::Volume).unwrap();
        assert!(matches!(wesd(&a, &an, 2.0, 2), Err(Error::NormalisationMismatch(..))));
        assert!(matches!(wesd(&a, &a, 1.0, 2), Err(Error::InvalidExponent { .. })));
    }

    #[test]
    fn mixed_lengths_use_shorter() {
        let a = s(&[1.0, 2.0, 3.0, 4.0]);
        let b = s(&[1.5, 2.5]);
        let r = wesd(&a, &b, 2.0, 10).unwrap();
        assert_eq!(r.n, 2);
        assert_eq!(r.contributions.len(), 2);
        assert!(r.residual_ratio.is_none());
    }

    fn unit_square(n: usize) -> Spectrum {
        Spectrum::analytic_box(&[1.0, 1.0], n).unwrap()
    }

    #[test]
    fn nwesd_of_unit_square_pair() {
        let a = unit_square(50);
        let r = nwesd(&a, &a, 2.0, 50).unwrap();
        assert_eq!(r.value, 0.0);
        assert!((r.w.unwrap() - 0.15214518577465897).abs() < 1e-12);
        assert!((r.c.unwrap() - 0.015701136539609834).abs() < 1e-14);
        assert!((r.k.unwrap() - 0.018856365251614407).abs() < 1e-14);
        assert_eq!(r.v_hat, Some(1.0));
        assert!((r.mu.unwrap() - 2.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn nwesd_in_unit_interval() {
        let a = Spectrum::analytic_box(&[1.0, 1.0], 100).unwrap();
        let b = Spectrum::analytic_box(&[2.0, 0.5], 100).unwrap();
        let r = nwesd(&a, &b, 1.5, 100).unwrap();
        assert!(r.value > 0.0 && r.value < 1.0);
        assert!(r.truncation_bound.unwrap() <= r.residual_ratio.unwrap());
    }

    #[test]
    fn nwesd_rejects_inconsistent_spectra() {
        let a = s(&[1.0, 2.0, 3.0]);
        let b = s(&[2.0, 3.0, 4.0]);
        assert!(matches!(
            nwesd(&a, &b, 2.0, 3),
            Err(Error::NegativeBoundBracket { .. })
        ));
        // plain WESD still works, without bound diagnostics
        let r = wesd(&a, &b, 2.0, 3).unwrap();
        assert!(r.w.is_none() && r.truncation_bound.is_none());
    }

    #[test]
    fn w_is_symmetric() {
        let a = Spectrum::analytic_box(&[1.0, 1.0], 10).unwrap();
        let b = Spectrum::analytic_box(&[1.5, 1.0], 10).unwrap();
        let x = normalisation_factor(&a, &b, 2.0).unwrap();
        let y = normalisation_factor(&b, &a, 2.0).unwrap();
        assert_eq!(x, y);
        assert_eq!(x.v_hat, 1.5);
    }

    #[test]
    fn shape_dna_examples() {
        let a = s(&[1.0, 2.0, 3.0]);
        let b = s(&[2.0, 3.0, 4.0]);
        assert_eq!(shape_dna_distance(&a, &a, 3).unwrap(), 0.0);
        assert!((shape_dna_distance(&a, &b, 3).unwrap() - 3f64.sqrt()).abs() < 1e-15);
        assert!((shape_dna_distance(&a, &b, 2).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!(matches!(
            shape_dna_distance(&a, &b, 4),
            Err(Error::LengthShortfall { requested: 4, available: 3 })
        ));
    }

    #[test]
    fn mode_influence_examples() {
        assert!((mode_influence(2.0, 3.0, 0) - 1.0 / 6.0).abs() < 1e-16);
        assert_eq!(mode_influence(2.0, 3.0, 2), 1.0);
        for m in 0..5 {
            assert_eq!(mode_influence(5.0, 5.0, m), 0.0);
        }
    }

    #[test]
    fn report_serialises_with_field_names() {
        let a = unit_square(10);
        let b = Spectrum::analytic_box(&[1.2, 0.9], 10).unwrap();
        let r = nwesd(&a, &b, 2.0, 10).unwrap();
        let text = serde_json::to_string(&r).unwrap();
        for key in ["\"W\"", "\"C\"", "\"K\"", "\"V_hat\"", "\"mu\"", "\"residual_ratio\"", "\"N\""] {
            assert!(text.contains(key), "{key} missing");
        }
        let back: DistanceReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn metric_parsing() {
        assert_eq!("shapedna".parse::<Metric>().unwrap(), Metric::ShapeDna);
        assert_eq!("NWESD".parse::<Metric>().unwrap(), Metric::Nwesd);
        assert!("l2".parse::<Metric>().is_err());
    }
}
