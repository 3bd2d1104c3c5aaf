//! Synthetic binary shapes rasterised on square or cubic grids.
//!
//! Coordinates are physical and centred on the grid; a cell is foreground
//! when its centre satisfies the predicate.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::geometry::BinaryDomain;

/// Domain whose foreground is `{x : inside(x)}`, `x` measured from the grid centre.
pub fn from_predicate(
    cells: &[usize],
    spacing: f64,
    id: &str,
    inside: impl Fn(&[f64]) -> bool,
) -> Result<BinaryDomain> {
    let spacings = vec![spacing; cells.len()];
    let half: Vec<f64> = cells.iter().map(|&n| n as f64 * spacing / 2.0).collect();
    let mut x = vec![0.0; cells.len()];
    BinaryDomain::from_fn(cells, &spacings, id, |idx| {
        for (a, &i) in idx.iter().enumerate() {
            x[a] = (i as f64 + 0.5) * spacing - half[a];
        }
        inside(&x)
    })
}

pub fn disc(cells: usize, spacing: f64, radius: f64, id: &str) -> Result<BinaryDomain> {
    from_predicate(&[cells, cells], spacing, id, |x| x[0].hypot(x[1]) < radius)
}

pub fn ellipse(cells: usize, spacing: f64, a: f64, b: f64, id: &str) -> Result<BinaryDomain> {
    from_predicate(&[cells, cells], spacing, id, |x| {
        (x[0] / a).powi(2) + (x[1] / b).powi(2) < 1.0
    })
}

pub fn rectangle(cells: usize, spacing: f64, width: f64, height: f64, id: &str) -> Result<BinaryDomain> {
    from_predicate(&[cells, cells], spacing, id, |x| {
        x[0].abs() < width / 2.0 && x[1].abs() < height / 2.0
    })
}

pub fn annulus(cells: usize, spacing: f64, outer: f64, inner: f64, id: &str) -> Result<BinaryDomain> {
    from_predicate(&[cells, cells], spacing, id, |x| {
        let r = x[0].hypot(x[1]);
        r < outer && r >= inner
    })
}

/// L-shaped mask in cell units: a `long x thick` bar along x joined to a
/// `thick x tall` bar along y at the origin corner, with a one-cell margin.
pub fn l_shape(long: usize, tall: usize, thick: usize, id: &str) -> Result<BinaryDomain> {
    let ext = [long + 2, tall + 2];
    BinaryDomain::from_fn(&ext, &[1.0, 1.0], id, |i| {
        let (x, y) = (i[0], i[1]);
        let in_x = (1..=long).contains(&x) && (1..=thick).contains(&y);
        let in_y = (1..=thick).contains(&x) && (1..=tall).contains(&y);
        in_x || in_y
    })
}

/// Star-shaped region `r < radius (1 + Σ a_k cos(k θ + φ_k))`.
pub fn radial(
    cells: usize,
    spacing: f64,
    radius: f64,
    harmonics: &[(u32, f64, f64)],
    id: &str,
) -> Result<BinaryDomain> {
    from_predicate(&[cells, cells], spacing, id, |x| {
        let theta = x[1].atan2(x[0]);
        let scale: f64 = 1.0
            + harmonics
                .iter()
                .map(|&(k, a, phi)| a * (k as f64 * theta + phi).cos())
                .sum::<f64>();
        x[0].hypot(x[1]) < radius * scale
    })
}

/// Random smooth star-shaped blob with harmonics 2..=6.
pub fn random_blob(cells: usize, spacing: f64, radius: f64, seed: u64, id: &str) -> Result<BinaryDomain> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let harmonics: Vec<(u32, f64, f64)> = (2..=6)
        .map(|k| {
            let amp = rng.random_range(0.0..0.25) / k as f64;
            (k, amp, rng.random_range(0.0..2.0 * PI))
        })
        .collect();
    radial(cells, spacing, radius, &harmonics, id)
}

/// Smooth random warp of a 2D predicate: `x` is inside when
/// `x + amplitude · u(x)` is inside the base shape, with `u` a sum of three
/// random sinusoidal modes of wavelength comparable to `scale`.
pub fn warped(
    cells: usize,
    spacing: f64,
    scale: f64,
    amplitude: f64,
    seed: u64,
    id: &str,
    base: impl Fn(&[f64]) -> bool,
) -> Result<BinaryDomain> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<[f64; 5]> = (0..3)
        .map(|_| {
            let angle = rng.random_range(0.0..2.0 * PI);
            let k = rng.random_range(0.5..1.5) * PI / scale;
            let axis = rng.random_range(0.0..2.0 * PI);
            let phase = rng.random_range(0.0..2.0 * PI);
            [k * angle.cos(), k * angle.sin(), axis.cos(), axis.sin(), phase]
        })
        .collect();
    from_predicate(&[cells, cells], spacing, id, |x| {
        let mut y = [x[0], x[1]];
        for m in &modes {
            let s = (m[0] * x[0] + m[1] * x[1] + m[4]).sin() * amplitude / modes.len() as f64;
            y[0] += s * m[2];
            y[1] += s * m[3];
        }
        base(&y)
    })
}

pub fn ball(cells: usize, spacing: f64, radius: f64, id: &str) -> Result<BinaryDomain> {
    from_predicate(&[cells, cells, cells], spacing, id, |x| {
        (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt() < radius
    })
}
