//! Binary shape domains on regular grids.
//!
//! A [`BinaryDomain`] is a boolean mask over a 2D or 3D grid of cells with
//! (possibly anisotropic) spacing. Cells are stored x fastest, then y, then z.
//! Every domain sits on the integer cell lattice at an `origin`, so grid
//! isometries (axis permutations, reflections, translations) act exactly and
//! are exactly invertible.

mod formats;

pub use formats::{load_domain, parse_domain, write_bvox, write_pbm, write_pgm, MaskFormat};

use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct BinaryDomain {
    dimension: usize,
    extents: Vec<usize>,
    spacing: Vec<f64>,
    origin: Vec<i64>,
    mask: Vec<bool>,
    identifier: String,
}

impl BinaryDomain {
    pub fn new(
        extents: Vec<usize>,
        spacing: Vec<f64>,
        mask: Vec<bool>,
        identifier: impl Into<String>,
    ) -> Result<Self> {
        let d = extents.len();
        Self::with_origin(extents, spacing, vec![0; d], mask, identifier)
    }

    pub fn with_origin(
        extents: Vec<usize>,
        spacing: Vec<f64>,
        origin: Vec<i64>,
        mask: Vec<bool>,
        identifier: impl Into<String>,
    ) -> Result<Self> {
        let d = extents.len();
        if d != 2 && d != 3 {
            return Err(Error::UnsupportedDimension(d));
        }
        if spacing.len() != d || origin.len() != d {
            return Err(Error::InvalidDomain(format!(
                "spacing/origin length must equal dimension {d}"
            )));
        }
        if extents.contains(&0) {
            return Err(Error::InvalidDomain("grid extents must be positive".into()));
        }
        if let Some(h) = spacing.iter().find(|h| !(h.is_finite() && **h > 0.0)) {
            return Err(Error::InvalidDomain(format!(
                "spacing must be positive and finite, got {h}"
            )));
        }
        let cells: usize = extents.iter().product();
        if mask.len() != cells {
            return Err(Error::InvalidDomain(format!(
                "mask has {} cells, grid has {cells}",
                mask.len()
            )));
        }
        if !mask.iter().any(|&b| b) {
            return Err(Error::EmptyForeground);
        }
        Ok(Self {
            dimension: d,
            extents,
            spacing,
            origin,
            mask,
            identifier: identifier.into(),
        })
    }

    /// Builds a domain by evaluating `inside` at every cell index.
    pub fn from_fn(
        extents: &[usize],
        spacing: &[f64],
        identifier: impl Into<String>,
        mut inside: impl FnMut(&[usize]) -> bool,
    ) -> Result<Self> {
        let cells: usize = extents.iter().product();
        let mut mask = Vec::with_capacity(cells);
        let mut idx = vec![0usize; extents.len()];
        for flat in 0..cells {
            unflatten(flat, extents, &mut idx);
            mask.push(inside(&idx));
        }
        Self::new(extents.to_vec(), spacing.to_vec(), mask, identifier)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn origin(&self) -> &[i64] {
        &self.origin
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn identifier(&self) -> &str {
        &self.identifier
    }

    pub fn set_identifier(&mut self, id: impl Into<String>) {
        self.identifier = id.into();
    }

    /// Same mask with every spacing multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        let spacing = self.spacing.iter().map(|h| h * factor).collect();
        Self::with_origin(
            self.extents.clone(),
            spacing,
            self.origin.clone(),
            self.mask.clone(),
            self.identifier.clone(),
        )
    }

    /// Each cell becomes a `factor`^d block of cells with spacing divided by
    /// `factor`; the physical shape is unchanged.
    pub fn supersampled(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::InvalidArgument("supersampling factor must be >= 1".into()));
        }
        let extents: Vec<usize> = self.extents.iter().map(|n| n * factor).collect();
        let spacing: Vec<f64> = self.spacing.iter().map(|h| h / factor as f64).collect();
        let src = self;
        let mut coarse = vec![0usize; self.dimension];
        Self::from_fn(&extents, &spacing, self.identifier.clone(), |idx| {
            for (c, i) in coarse.iter_mut().zip(idx) {
                *c = i / factor;
            }
            src.get(&coarse)
        })
    }

    pub fn foreground_count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn cell_volume(&self) -> f64 {
        sorted_product(self.spacing.iter().copied())
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        flatten(idx, &self.extents)
    }

    /// Mask value at a cell index; out-of-grid indices are background.
    pub fn get(&self, idx: &[usize]) -> bool {
        if idx.iter().zip(&self.extents).any(|(i, n)| i >= n) {
            return false;
        }
        self.mask[flatten(idx, &self.extents)]
    }

    /// Physical volume (area in 2D) of the foreground.
    pub fn volume(&self) -> f64 {
        self.foreground_count() as f64 * self.cell_volume()
    }

    /// Total measure of foreground-cell faces that touch background or the grid
    /// boundary (perimeter in 2D, surface area in 3D).
    /// Faces are counted per axis and combined in sorted order, so the result
    /// is bitwise invariant under axis permutations and reflections.
    pub fn surface_measure(&self) -> f64 {
        let d = self.dimension;
        let strides = strides(&self.extents);
        let mut idx = vec![0usize; d];
        let mut faces = vec![0u64; d];
        for (flat, &inside) in self.mask.iter().enumerate() {
            if !inside {
                continue;
            }
            unflatten(flat, &self.extents, &mut idx);
            for axis in 0..d {
                let lo_exposed = idx[axis] == 0 || !self.mask[flat - strides[axis]];
                let hi_exposed =
                    idx[axis] + 1 == self.extents[axis] || !self.mask[flat + strides[axis]];
                faces[axis] += lo_exposed as u64 + hi_exposed as u64;
            }
        }
        let mut terms: Vec<f64> = (0..d)
            .map(|axis| {
                let area = sorted_product((0..d).filter(|&b| b != axis).map(|b| self.spacing[b]));
                faces[axis] as f64 * area
            })
            .collect();
        terms.sort_by(f64::total_cmp);
        terms.iter().sum()
    }

    /// Image of the domain under a lattice isometry. The output grid is the
    /// image of the input grid, so extents are permuted and nothing is cropped.
    pub fn apply_isometry(&self, iso: &GridIsometry) -> Result<Self> {
        let d = self.dimension;
        if iso.dimension() != d {
            return Err(Error::DimensionMismatch(d, iso.dimension()));
        }
        // Image of the grid's lower corner along each output axis.
        let mut new_extents = vec![0usize; d];
        let mut new_origin = vec![0i64; d];
        let mut new_spacing = vec![0.0; d];
        for i in 0..d {
            let src = iso.permutation[i];
            let n = self.extents[src] as i64;
            let lo = self.origin[src];
            let hi = lo + n - 1;
            let (a, b) = (iso.map_coord(i, lo), iso.map_coord(i, hi));
            new_origin[i] = a.min(b);
            new_extents[i] = self.extents[src];
            new_spacing[i] = self.spacing[src];
        }
        let cells = self.mask.len();
        let mut mask = vec![false; cells];
        let mut idx = vec![0usize; d];
        let mut out = vec![0usize; d];
        for (flat, &inside) in self.mask.iter().enumerate() {
            if !inside {
                continue;
            }
            unflatten(flat, &self.extents, &mut idx);
            for i in 0..d {
                let src = iso.permutation[i];
                let lattice = self.origin[src] + idx[src] as i64;
                out[i] = (iso.map_coord(i, lattice) - new_origin[i]) as usize;
            }
            mask[flatten(&out, &new_extents)] = true;
        }
        Self::with_origin(
            new_extents,
            new_spacing,
            new_origin,
            mask,
            self.identifier.clone(),
        )
    }
}

fn sorted_product(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.iter().product()
}

/// Lattice isometry `x'_i = ±x_{perm[i]} + t_i`, where a reflected axis maps
/// cell `x` to cell `-x - 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridIsometry {
    permutation: Vec<usize>,
    flips: Vec<bool>,
    translation: Vec<i64>,
}

impl GridIsometry {
    pub fn new(permutation: Vec<usize>, flips: Vec<bool>, translation: Vec<i64>) -> Result<Self> {
        let d = permutation.len();
        if d != 2 && d != 3 {
            return Err(Error::UnsupportedDimension(d));
        }
        if flips.len() != d || translation.len() != d {
            return Err(Error::InvalidArgument(
                "isometry components must share one dimension".into(),
            ));
        }
        let mut seen = vec![false; d];
        for &p in &permutation {
            if p >= d || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidArgument(format!(
                    "{permutation:?} is not a permutation of 0..{d}"
                )));
            }
        }
        Ok(Self {
            permutation,
            flips,
            translation,
        })
    }

    pub fn identity(d: usize) -> Result<Self> {
        Self::new((0..d).collect(), vec![false; d], vec![0; d])
    }

    pub fn translation(offsets: Vec<i64>) -> Result<Self> {
        let d = offsets.len();
        Self::new((0..d).collect(), vec![false; d], offsets)
    }

    /// Quarter turn in the plane of axes `a` and `b`: `(x_a, x_b) -> (-x_b - 1, x_a)`.
    pub fn quarter_turn(d: usize, a: usize, b: usize) -> Result<Self> {
        let mut perm: Vec<usize> = (0..d).collect();
        perm.swap(a, b);
        let mut flips = vec![false; d];
        flips[a] = true;
        Self::new(perm, flips, vec![0; d])
    }

    pub fn reflection(d: usize, axis: usize) -> Result<Self> {
        let mut flips = vec![false; d];
        if axis >= d {
            return Err(Error::InvalidArgument(format!("axis {axis} out of range")));
        }
        flips[axis] = true;
        Self::new((0..d).collect(), flips, vec![0; d])
    }

    pub fn dimension(&self) -> usize {
        self.permutation.len()
    }

    pub fn inverse(&self) -> Self {
        let d = self.dimension();
        let mut permutation = vec![0; d];
        let mut flips = vec![false; d];
        let mut translation = vec![0; d];
        for i in 0..d {
            let j = self.permutation[i];
            permutation[j] = i;
            flips[j] = self.flips[i];
            translation[j] = if self.flips[i] {
                self.translation[i]
            } else {
                -self.translation[i]
            };
        }
        Self {
            permutation,
            flips,
            translation,
        }
    }

    fn map_coord(&self, axis: usize, x: i64) -> i64 {
        let r = if self.flips[axis] { -x - 1 } else { x };
        r + self.translation[axis]
    }
}

/// Volume of the unit ball in R^d.
pub fn unit_ball_volume(d: usize) -> Result<f64> {
    match d {
        2 => Ok(PI),
        3 => Ok(4.0 * PI / 3.0),
        _ => Err(Error::UnsupportedDimension(d)),
    }
}

pub(crate) fn strides(extents: &[usize]) -> Vec<usize> {
    let mut s = Vec::with_capacity(extents.len());
    let mut acc = 1;
    for &n in extents {
        s.push(acc);
        acc *= n;
    }
    s
}

pub(crate) fn flatten(idx: &[usize], extents: &[usize]) -> usize {
    let mut flat = 0;
    for axis in (0..extents.len()).rev() {
        flat = flat * extents[axis] + idx[axis];
    }
    flat
}

pub(crate) fn unflatten(mut flat: usize, extents: &[usize], idx: &mut [usize]) {
    for (i, &n) in idx.iter_mut().zip(extents) {
        *i = flat % n;
        flat /= n;
    }
}
