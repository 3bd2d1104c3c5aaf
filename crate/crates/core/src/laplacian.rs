//! Finite-difference Dirichlet Laplacian on the foreground cells of a mask.
//!
//! Only foreground cells are unknowns. Each row carries `sum_axis 2/h_axis^2`
//! on the diagonal and `-1/h_axis^2` for every foreground neighbour along an
//! axis; background and off-grid neighbours are the zero boundary values.

use std::io::Write;

use crate::error::{Error, Result};
use crate::geometry::{strides, unflatten, BinaryDomain};

/// Symmetric positive-definite discrete `-Δ` in compressed-row form.
#[derive(Clone, Debug)]
pub struct SparseOperator {
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    /// Flat grid index of the cell behind each row.
    cells: Vec<usize>,
    dimension: usize,
    spacing: Vec<f64>,
    volume: f64,
}

impl SparseOperator {
    /// Rows are ordered lexicographically by (z, y, x).
    pub fn assemble(dom: &BinaryDomain) -> Result<Self> {
        let mask = dom.mask();
        let extents = dom.extents();
        let d = dom.dimension();
        let cells: Vec<usize> = (0..mask.len()).filter(|&i| mask[i]).collect();
        if cells.is_empty() {
            return Err(Error::EmptyForeground);
        }
        let mut row_of = vec![usize::MAX; mask.len()];
        for (row, &c) in cells.iter().enumerate() {
            row_of[c] = row;
        }
        let inv_h2: Vec<f64> = dom.spacing().iter().map(|h| 1.0 / (h * h)).collect();
        let diag: f64 = inv_h2.iter().map(|w| 2.0 * w).sum();
        let stride = strides(extents);

        let mut row_ptr = Vec::with_capacity(cells.len() + 1);
        let mut col_idx = Vec::with_capacity(cells.len() * (2 * d + 1));
        let mut values = Vec::with_capacity(cells.len() * (2 * d + 1));
        let mut idx = vec![0usize; d];
        let mut entries: Vec<(usize, f64)> = Vec::with_capacity(2 * d + 1);
        row_ptr.push(0);
        for (row, &c) in cells.iter().enumerate() {
            unflatten(c, extents, &mut idx);
            entries.clear();
            entries.push((row, diag));
            for axis in 0..d {
                if idx[axis] > 0 && mask[c - stride[axis]] {
                    entries.push((row_of[c - stride[axis]], -inv_h2[axis]));
                }
                if idx[axis] + 1 < extents[axis] && mask[c + stride[axis]] {
                    entries.push((row_of[c + stride[axis]], -inv_h2[axis]));
                }
            }
            entries.sort_unstable_by_key(|e| e.0);
            for &(j, v) in &entries {
                col_idx.push(j);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            row_ptr,
            col_idx,
            values,
            cells,
            dimension: d,
            spacing: dom.spacing().to_vec(),
            volume: dom.volume(),
        })
    }

    pub fn order(&self) -> usize {
        self.cells.len()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    /// Volume of the source domain.
    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn cell_of_row(&self, row: usize) -> usize {
        self.cells[row]
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    /// `y = A x`
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.order());
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yi = acc;
        }
    }

    /// Upper bound on the spectral radius (Gershgorin).
    pub fn norm_bound(&self) -> f64 {
        (0..self.order())
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Dense row-major copy, for small operators.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.order();
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for (j, v) in self.row(i) {
                out[i * n + j] = v;
            }
        }
        out
    }

    /// Matrix Market coordinate dump (symmetric, lower triangle, 1-based).
    pub fn write_matrix_market(&self, out: &mut impl Write) -> std::io::Result<()> {
        let n = self.order();
        let lower: Vec<(usize, usize, f64)> = (0..n)
            .flat_map(|i| self.row(i).filter(move |&(j, _)| j <= i).map(move |(j, v)| (i, j, v)))
            .collect();
        writeln!(out, "%%MatrixMarket matrix coordinate real symmetric")?;
        writeln!(out, "{n} {n} {}", lower.len())?;
        for (i, j, v) in lower {
            writeln!(out, "{} {} {:.17e}", i + 1, j + 1, v)?;
        }
        Ok(())
    }
}

/// Exact eigenvalues of the discrete operator on a `w x w` all-foreground
/// square with spacing `h`, sorted ascending.
pub fn discrete_square_eigenvalues(w: usize, h: f64) -> Vec<f64> {
    let s = |m: usize| {
        let x = (m as f64 * std::f64::consts::PI / (2.0 * (w as f64 + 1.0))).sin();
        x * x
    };
    let mut vals: Vec<f64> = (1..=w)
        .flat_map(|m| (1..=w).map(move |n| (m, n)))
        .map(|(m, n)| 4.0 / (h * h) * (s(m) + s(n)))
        .collect();
    vals.sort_by(f64::total_cmp);
    vals
}
