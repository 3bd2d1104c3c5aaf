//! Smallest eigenvalues of the discrete Laplacian, packaged as a [`Spectrum`].

mod lanczos;

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::unit_ball_volume;
use crate::laplacian::SparseOperator;

pub use lanczos::SolverOptions;

/// Scale normalisation applied to a spectrum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalisation {
    Raw,
    Volume,
    FirstEigenvalue,
}

impl Normalisation {
    pub fn as_str(self) -> &'static str {
        match self {
            Normalisation::Raw => "raw",
            Normalisation::Volume => "volume",
            Normalisation::FirstEigenvalue => "first-eigenvalue",
        }
    }
}

impl std::fmt::Display for Normalisation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverInfo {
    /// Number of eigenvalues requested.
    #[serde(rename = "N")]
    pub requested: usize,
    pub tol: f64,
    /// Operator applications spent (0 for the dense path).
    pub iterations: usize,
    pub seed: u64,
}

/// Sorted positive eigenvalues with the data needed to interpret them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    #[serde(default)]
    pub identifier: String,
    pub dimension: usize,
    /// Volume of the source domain, before any normalisation.
    pub volume: f64,
    #[serde(default)]
    pub spacing: Vec<f64>,
    pub normalisation: Normalisation,
    /// Factor the raw eigenvalues were multiplied by.
    #[serde(default = "one")]
    pub scale: f64,
    pub solver: Option<SolverInfo>,
    pub eigenvalues: Vec<f64>,
}

fn one() -> f64 {
    1.0
}

impl Spectrum {
    /// Raw spectrum from explicit values.
    pub fn new(eigenvalues: Vec<f64>, dimension: usize, volume: f64) -> Result<Self> {
        let s = Spectrum {
            identifier: String::new(),
            dimension,
            volume,
            spacing: Vec::new(),
            normalisation: Normalisation::Raw,
            scale: 1.0,
            solver: None,
            eigenvalues,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_identifier(mut self, id: impl Into<String>) -> Self {
        self.identifier = id.into();
        self
    }

    pub fn validate(&self) -> Result<()> {
        unit_ball_volume(self.dimension)?;
        let bad = |m: &str| Err(Error::InvalidArgument(format!("spectrum: {m}")));
        if self.eigenvalues.is_empty() {
            return bad("no eigenvalues");
        }
        if !(self.volume.is_finite() && self.volume > 0.0) {
            return bad("volume must be positive and finite");
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return bad("scale must be positive and finite");
        }
        if self.eigenvalues.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return bad("eigenvalues must be positive and finite");
        }
        if self.eigenvalues.windows(2).any(|w| w[1] < w[0]) {
            return bad("eigenvalues must be nondecreasing");
        }
        if self.normalisation == Normalisation::FirstEigenvalue && self.eigenvalues[0] != 1.0 {
            return bad("first-eigenvalue normalisation requires a leading 1");
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Volume of the domain that has exactly these eigenvalues. Equals 1
    /// after volume normalisation.
    pub fn effective_volume(&self) -> f64 {
        match self.normalisation {
            Normalisation::Volume => 1.0,
            _ => self.volume * self.scale.powf(-(self.dimension as f64) / 2.0),
        }
    }

    pub fn normalize(&self, mode: Normalisation) -> Result<Spectrum> {
        if self.normalisation != Normalisation::Raw {
            return Err(Error::AlreadyNormalised(self.normalisation.to_string()));
        }
        let factor = match mode {
            Normalisation::Raw => return Ok(self.clone()),
            Normalisation::Volume => self.volume.powf(2.0 / self.dimension as f64),
            Normalisation::FirstEigenvalue => 1.0 / self.eigenvalues[0],
        };
        let mut out = self.clone();
        out.normalisation = mode;
        out.scale = factor;
        out.eigenvalues = match mode {
            Normalisation::FirstEigenvalue => {
                let l1 = self.eigenvalues[0];
                self.eigenvalues.iter().map(|v| v / l1).collect()
            }
            _ => self.eigenvalues.iter().map(|v| v * factor).collect(),
        };
        Ok(out)
    }

    /// First `n` eigenvalues.
    pub fn truncated(&self, n: usize) -> Result<Spectrum> {
        if n == 0 || n > self.len() {
            return Err(Error::LengthShortfall {
                requested: n,
                available: self.len(),
            });
        }
        let mut out = self.clone();
        out.eigenvalues.truncate(n);
        Ok(out)
    }

    /// The `count` smallest Dirichlet eigenvalues of an axis-aligned box with
    /// the given side lengths: `π² Σ (m_i / a_i)²`.
    pub fn analytic_box(sides: &[f64], count: usize) -> Result<Spectrum> {
        let d = sides.len();
        unit_ball_volume(d)?;
        if count == 0 || sides.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(Error::InvalidArgument("box sides and count must be positive".into()));
        }
        let volume: f64 = sides.iter().product();
        let mut limit = 2.0 * weyl_asymptote(count, d, volume)? + sides.iter().map(|a| PI * PI / (a * a)).sum::<f64>();
        loop {
            let vals = box_eigenvalues_below(sides, limit);
            if vals.len() >= count {
                let mut vals = vals;
                vals.truncate(count);
                return Spectrum::new(vals, d, volume);
            }
            limit *= 2.0;
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Spectrum> {
        let s: Spectrum = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?)
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    /// Reads a spectrum cache file. A missing identifier defaults to the file stem.
    pub fn load(path: impl AsRef<Path>) -> Result<Spectrum> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let mut s = match Spectrum::from_json(&text) {
            Ok(s) => s,
            Err(Error::Serde(e)) => return Err(Error::parse(path, e.to_string())),
            Err(Error::InvalidArgument(m)) => return Err(Error::parse(path, m)),
            Err(e) => return Err(e),
        };
        if s.identifier.is_empty() {
            s.identifier = path
                .file_stem()
                .map(|x| x.to_string_lossy().into_owned())
                .unwrap_or_default();
        }
        Ok(s)
    }
}

fn box_eigenvalues_below(sides: &[f64], limit: f64) -> Vec<f64> {
    fn walk(unit: &[f64], acc: f64, limit: f64, out: &mut Vec<f64>) {
        let Some((u, rest)) = unit.split_first() else {
            out.push(acc);
            return;
        };
        let floor: f64 = rest.iter().sum();
        let mut m = 1usize;
        loop {
            let v = acc + (m * m) as f64 * u;
            if v + floor > limit {
                break;
            }
            walk(rest, v, limit, out);
            m += 1;
        }
    }
    let unit: Vec<f64> = sides.iter().map(|a| PI * PI / (a * a)).collect();
    let mut out = Vec::new();
    walk(&unit, 0.0, limit, &mut out);
    out.sort_by(f64::total_cmp);
    out
}

/// Weyl asymptote `4π² (n / (B_d V))^{2/d}`.
pub fn weyl_asymptote(n: usize, d: usize, volume: f64) -> Result<f64> {
    let bd = unit_ball_volume(d)?;
    if n == 0 {
        return Err(Error::InvalidArgument("mode index must be at least 1".into()));
    }
    Ok(4.0 * PI * PI * (n as f64 / (bd * volume)).powf(2.0 / d as f64))
}

/// The `n` smallest eigenvalues of `op`, each with relative residual at most `opts.tol`.
pub fn smallest_eigenvalues(op: &SparseOperator, n: usize, opts: &SolverOptions) -> Result<Spectrum> {
    if n == 0 || n > op.order() {
        return Err(Error::InvalidArgument(format!(
            "requested {n} eigenvalues of an operator of order {}",
            op.order()
        )));
    }
    if !(opts.tol > 0.0 && opts.tol.is_finite()) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let (values, matvecs) = if op.order() <= opts.dense_threshold {
        (lanczos::dense_smallest(op, n), 0)
    } else {
        lanczos::thick_restart(op, n, opts)?
    };
    Ok(Spectrum {
        identifier: String::new(),
        dimension: op.dimension(),
        volume: op.volume(),
        spacing: op.spacing().to_vec(),
        normalisation: Normalisation::Raw,
        scale: 1.0,
        solver: Some(SolverInfo {
            requested: n,
            tol: opts.tol,
            iterations: matvecs,
            seed: opts.seed,
        }),
        eigenvalues: values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BinaryDomain;
    use crate::laplacian::discrete_square_eigenvalues;

    fn square_op(w: usize, h: f64) -> SparseOperator {
        let dom = BinaryDomain::from_fn(&[w, w], &[h, h], "sq", |_| true).unwrap();
        SparseOperator::assemble(&dom).unwrap()
    }

    fn lanczos_only() -> SolverOptions {
        SolverOptions {
            dense_threshold: 0,
            ..SolverOptions::default()
        }
    }

    #[test]
    fn scalar_operator() {
        let dom = BinaryDomain::from_fn(&[3, 3], &[1.0, 1.0], "c", |i| i == [1, 1]).unwrap();
        let op = SparseOperator::assemble(&dom).unwrap();
        for opts in [SolverOptions::default(), lanczos_only()] {
            let s = smallest_eigenvalues(&op, 1, &opts).unwrap();
            assert!((s.eigenvalues[0] - 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn square_matches_closed_form() {
        let w = 60;
        let op = square_op(w, 1.0);
        let s = smallest_eigenvalues(&op, 10, &lanczos_only()).unwrap();
        let exact = discrete_square_eigenvalues(w, 1.0);
        for (a, b) in s.eigenvalues.iter().zip(&exact) {
            assert!((a - b).abs() <= 1e-7 * b, "{a} vs {b}");
        }
    }

    #[test]
    fn dense_and_lanczos_agree() {
        let dom = BinaryDomain::from_fn(&[14, 11], &[1.0, 0.5], "x", |i| {
            (i[0] as i64 - 7).pow(2) + (i[1] as i64 - 5).pow(2) < 40
        })
        .unwrap();
        let op = SparseOperator::assemble(&dom).unwrap();
        let n = 12;
        let a = smallest_eigenvalues(&op, n, &SolverOptions::default()).unwrap();
        let b = smallest_eigenvalues(&op, n, &lanczos_only()).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert!((x - y).abs() <= 1e-7 * x, "{x} vs {y}");
        }
    }

    #[test]
    fn all_eigenvalues_of_small_operator() {
        let op = square_op(4, 1.0);
        let s = smallest_eigenvalues(&op, 16, &lanczos_only()).unwrap();
        let exact = discrete_square_eigenvalues(4, 1.0);
        for (a, b) in s.eigenvalues.iter().zip(&exact) {
            assert!((a - b).abs() <= 1e-8 * b);
        }
    }

    #[test]
    fn deterministic() {
        let op = square_op(25, 0.1);
        let a = smallest_eigenvalues(&op, 8, &lanczos_only()).unwrap();
        let b = smallest_eigenvalues(&op, 8, &lanczos_only()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_requests() {
        let op = square_op(3, 1.0);
        assert!(smallest_eigenvalues(&op, 10, &SolverOptions::default()).is_err());
        assert!(smallest_eigenvalues(&op, 0, &SolverOptions::default()).is_err());
    }

    #[test]
    fn tiny_budget_reports_nonconvergence() {
        let op = square_op(40, 1.0);
        let opts = SolverOptions {
            max_matvecs: Some(30),
            ..lanczos_only()
        };
        match smallest_eigenvalues(&op, 5, &opts) {
            Err(Error::NonConvergence { requested, .. }) => assert_eq!(requested, 5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn normalisation_examples() {
        let s = Spectrum::new(vec![2.0, 4.0, 6.0], 2, 4.0).unwrap();
        let v = s.normalize(Normalisation::Volume).unwrap();
        assert_eq!(v.eigenvalues, vec![8.0, 16.0, 24.0]);
        assert_eq!(v.effective_volume(), 1.0);
        let f = s.normalize(Normalisation::FirstEigenvalue).unwrap();
        assert_eq!(f.eigenvalues, vec![1.0, 2.0, 3.0]);
        assert!((f.effective_volume() - 8.0).abs() < 1e-12);
        assert!(matches!(
            v.normalize(Normalisation::Volume),
            Err(Error::AlreadyNormalised(_))
        ));
    }

    #[test]
    fn weyl_examples() {
        assert!((weyl_asymptote(1, 2, PI).unwrap() - 4.0).abs() < 1e-12);
        let a = weyl_asymptote(7, 2, 3.0).unwrap();
        let b = weyl_asymptote(7, 2, 6.0).unwrap();
        assert!((a / 2.0 - b).abs() < 1e-12);
        let sq = Spectrum::analytic_box(&[1.0, 1.0], 100).unwrap();
        let ratio = sq.eigenvalues[99] / weyl_asymptote(100, 2, 1.0).unwrap();
        assert!((0.9..=1.2).contains(&ratio), "{ratio}");
        assert!(weyl_asymptote(1, 4, 1.0).is_err());
    }

    #[test]
    fn analytic_box_values() {
        let s = Spectrum::analytic_box(&[1.0, 1.0], 10).unwrap();
        let expect = [2.0, 5.0, 5.0, 8.0, 10.0, 10.0, 13.0, 13.0, 17.0, 17.0];
        for (a, b) in s.eigenvalues.iter().zip(expect) {
            assert!((a - PI * PI * b).abs() < 1e-9);
        }
        let c = Spectrum::analytic_box(&[1.0, 1.0, 1.0], 4).unwrap();
        assert!((c.eigenvalues[0] - 3.0 * PI * PI).abs() < 1e-9);
        assert!((c.eigenvalues[3] - 6.0 * PI * PI).abs() < 1e-9);
        let r = Spectrum::analytic_box(&[2.0, 1.0], 3).unwrap();
        assert!((r.eigenvalues[1] - PI * PI * 2.0).abs() < 1e-9);
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let op = square_op(9, 0.37);
        let s = smallest_eigenvalues(&op, 7, &SolverOptions::default())
            .unwrap()
            .with_identifier("sq");
        let back = Spectrum::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn invalid_spectra_rejected() {
        assert!(Spectrum::new(vec![], 2, 1.0).is_err());
        assert!(Spectrum::new(vec![2.0, 1.0], 2, 1.0).is_err());
        assert!(Spectrum::new(vec![0.0], 2, 1.0).is_err());
        assert!(Spectrum::new(vec![1.0], 4, 1.0).is_err());
    }
}
