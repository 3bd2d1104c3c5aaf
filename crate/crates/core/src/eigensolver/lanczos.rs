use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::laplacian::SparseOperator;

#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// Relative residual `‖Av − λv‖ / λ` required of every eigenpair.
    pub tol: f64,
    pub seed: u64,
    /// Operator applications allowed. `None` means `50 N ceil(sqrt(order))`.
    pub max_matvecs: Option<usize>,
    /// Operators of at most this order are diagonalised densely.
    pub dense_threshold: usize,
    /// Lanczos basis size. `None` means `max(2N + 20, 40)`.
    pub basis_size: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-8,
            seed: 42,
            max_matvecs: None,
            dense_threshold: 300,
            basis_size: None,
        }
    }
}

pub(super) fn dense_smallest(op: &SparseOperator, want: usize) -> Vec<f64> {
    let n = op.order();
    let a = DMatrix::from_row_slice(n, n, &op.to_dense());
    let mut vals: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals.truncate(want);
    vals
}

/// Restarted Lanczos with locking. Each pass starts from a fresh random
/// vector orthogonal to everything locked so far, which recovers copies of
/// multiple eigenvalues that a single Krylov space cannot see. Stops once a
/// pass finds nothing new below the current `want`-th value.
pub(super) fn thick_restart(
    op: &SparseOperator,
    want: usize,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, usize)> {
    let n = op.order();
    let budget = opts
        .max_matvecs
        .unwrap_or_else(|| 50 * want * (n as f64).sqrt().ceil() as usize);
    let m = opts.basis_size.unwrap_or((2 * want + 20).max(40)).max(4);
    let mut st = State {
        op,
        n,
        want,
        tol: opts.tol,
        budget,
        matvecs: 0,
        anorm: op.norm_bound(),
        locked_vals: Vec::new(),
        locked: Vec::new(),
        rng: ChaCha8Rng::seed_from_u64(opts.seed),
    };
    const MAX_PASSES: usize = 32;
    for _ in 0..MAX_PASSES {
        if st.run_pass(m)? == 0 {
            break;
        }
    }
    if st.locked_vals.len() < want {
        return Err(st.nonconvergence());
    }
    let vals = st.final_rayleigh_ritz()?;
    Ok((vals, st.matvecs))
}

struct State<'a> {
    op: &'a SparseOperator,
    n: usize,
    want: usize,
    tol: f64,
    budget: usize,
    matvecs: usize,
    anorm: f64,
    locked_vals: Vec<f64>,
    /// Locked eigenvectors, column after column.
    locked: Vec<f64>,
    rng: ChaCha8Rng,
}

impl State<'_> {
    fn nonconvergence(&self) -> Error {
        Error::NonConvergence {
            requested: self.want,
            converged: self.locked_vals.len().min(self.want),
            matvecs: self.matvecs,
        }
    }

    fn apply(&mut self, x: &[f64], y: &mut [f64]) -> Result<()> {
        if self.matvecs >= self.budget {
            return Err(self.nonconvergence());
        }
        self.matvecs += 1;
        self.op.apply(x, y);
        Ok(())
    }

    /// Rayleigh-Ritz on the span of all locked vectors, followed by an
    /// explicit residual check of the `want` smallest refined pairs.
    fn final_rayleigh_ritz(&mut self) -> Result<Vec<f64>> {
        let n = self.n;
        let k = self.locked_vals.len();
        let u = DMatrix::from_column_slice(n, k, &self.locked);
        let mut au = DMatrix::<f64>::zeros(n, k);
        for j in 0..k {
            let (x, y) = (&self.locked[j * n..(j + 1) * n], &mut au.as_mut_slice()[j * n..(j + 1) * n]);
            if self.matvecs >= self.budget {
                return Err(self.nonconvergence());
            }
            self.matvecs += 1;
            self.op.apply(x, y);
        }
        let g = u.transpose() * &au;
        let g = (&g + g.transpose()) * 0.5;
        let eig = SymmetricEigen::new(g);
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let mut s = DMatrix::<f64>::zeros(k, self.want);
        for (c, &i) in order.iter().take(self.want).enumerate() {
            s.set_column(c, &eig.eigenvectors.column(i));
        }
        let z = &u * &s;
        let az = &au * &s;
        let mut vals = Vec::with_capacity(self.want);
        for (c, &i) in order.iter().take(self.want).enumerate() {
            let theta = eig.eigenvalues[i];
            let r = (az.column(c) - z.column(c) * theta).norm();
            if !(theta > 0.0 && r <= self.tol * theta * z.column(c).norm()) {
                return Err(Error::NonConvergence {
                    requested: self.want,
                    converged: c,
                    matvecs: self.matvecs,
                });
            }
            vals.push(theta);
        }
        Ok(vals)
    }

    /// Current cut-off: the `want`-th smallest locked value.
    fn threshold(&self) -> f64 {
        if self.locked_vals.len() < self.want {
            return f64::INFINITY;
        }
        let mut v = self.locked_vals.clone();
        v.sort_by(f64::total_cmp);
        v[self.want - 1]
    }

    /// Two rounds of classical Gram-Schmidt against the locked vectors and
    /// the first `cols` basis columns. Projection coefficients on the basis
    /// are accumulated into `coef`.
    fn orthogonalize(&self, basis: &[f64], cols: usize, w: &mut [f64], coef: &mut [f64]) {
        let n = self.n;
        coef[..cols].fill(0.0);
        let mut c = vec![0.0; cols.max(self.locked_vals.len())];
        for _ in 0..2 {
            let nl = self.locked_vals.len();
            for (j, cj) in c.iter_mut().enumerate().take(nl) {
                *cj = dot(&self.locked[j * n..(j + 1) * n], w);
            }
            for (j, &cj) in c.iter().enumerate().take(nl) {
                axpy(-cj, &self.locked[j * n..(j + 1) * n], w);
            }
            for (j, cj) in c.iter_mut().enumerate().take(cols) {
                *cj = dot(&basis[j * n..(j + 1) * n], w);
            }
            for j in 0..cols {
                axpy(-c[j], &basis[j * n..(j + 1) * n], w);
                coef[j] += c[j];
            }
        }
    }

    /// One Lanczos pass. Returns the number of eigenpairs locked.
    fn run_pass(&mut self, m_max: usize) -> Result<usize> {
        let n = self.n;
        let mut m = m_max.min(n - self.locked_vals.len());
        if m == 0 {
            return Ok(0);
        }
        let mut basis = DMatrix::<f64>::zeros(n, m);
        let mut coef = vec![0.0; m];
        let mut w = vec![0.0; n];
        let mut resid = vec![0.0; n];

        let mut v: Vec<f64> = (0..n).map(|_| self.rng.random_range(-1.0..1.0)).collect();
        self.orthogonalize(basis.as_slice(), 0, &mut v, &mut coef);
        let nv = norm(&v);
        if nv <= 1e-10 {
            return Ok(0);
        }
        v.iter_mut().for_each(|x| *x /= nv);
        basis.as_mut_slice()[..n].copy_from_slice(&v);

        let mut h = DMatrix::<f64>::zeros(m, m);
        let mut start = 0;
        let mut newly = 0;
        loop {
            // Expand the basis from column `start` to `m`.
            let mut size = m;
            let mut beta = 0.0;
            let mut exhausted = false;
            for j in start..m {
                let (head, tail) = basis.as_mut_slice().split_at_mut((j + 1) * n);
                self.apply(&head[j * n..], &mut w)?;
                self.orthogonalize(head, j + 1, &mut w, &mut coef);
                for i in 0..=j {
                    h[(i, j)] = coef[i];
                    h[(j, i)] = coef[i];
                }
                beta = norm(&w);
                if beta <= 1e-12 * self.anorm {
                    exhausted = true;
                    size = j + 1;
                    break;
                }
                let target = if j + 1 < m { &mut tail[..n] } else { &mut resid[..] };
                for (t, x) in target.iter_mut().zip(&w) {
                    *t = x / beta;
                }
                if j + 1 < m {
                    h[(j + 1, j)] = beta;
                    h[(j, j + 1)] = beta;
                }
            }

            let proj = h.view((0, 0), (size, size)).clone_owned();
            let eig = SymmetricEigen::new(proj);
            let mut order: Vec<usize> = (0..size).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
            let theta = |i: usize| eig.eigenvalues[i];
            let est = |i: usize| {
                if exhausted {
                    0.0
                } else {
                    (beta * eig.eigenvectors[(size - 1, i)]).abs()
                }
            };
            let tol = self.tol;
            let converged = |i: usize| theta(i) > 0.0 && est(i) <= 0.5 * tol * theta(i);

            // Lock converged pairs below the cut-off. The check uses the
            // residual with locked directions projected out; couplings to
            // locked vectors are removed by the final Rayleigh-Ritz step.
            let mut threshold = self.threshold();
            let mut taken = vec![false; size];
            let mut scratch = vec![0.0; n];
            for &i in &order {
                if theta(i) >= threshold {
                    break;
                }
                if !converged(i) {
                    continue;
                }
                let s = eig.eigenvectors.column(i);
                let y = basis.columns(0, size) * s;
                let y = y.as_slice();
                self.apply(y, &mut w)?;
                let ny = norm(y);
                for (r, (a, b)) in scratch.iter_mut().zip(w.iter().zip(y)) {
                    *r = a - theta(i) * b;
                }
                self.orthogonalize(&[], 0, &mut scratch, &mut []);
                if norm(&scratch) <= self.tol * theta(i) * ny {
                    self.locked.extend(y.iter().map(|x| x / ny));
                    self.locked_vals.push(theta(i));
                    taken[i] = true;
                    newly += 1;
                    threshold = self.threshold();
                }
            }

            let unlocked: Vec<usize> = order.iter().copied().filter(|&i| !taken[i]).collect();
            let avail = n - self.locked_vals.len();
            if exhausted || unlocked.is_empty() || avail == 0 {
                return Ok(newly);
            }
            let lowest = unlocked[0];
            if converged(lowest) && theta(lowest) >= threshold {
                return Ok(newly);
            }

            // Thick restart: keep the lowest unlocked Ritz vectors plus the residual.
            let need = self.want.saturating_sub(self.locked_vals.len()).max(1);
            m = m.min(avail);
            let keep = unlocked
                .len()
                .min((need + m) / 2)
                .min(m.saturating_sub(2));
            let mut s = DMatrix::<f64>::zeros(size, keep);
            for (c, &i) in unlocked.iter().take(keep).enumerate() {
                s.set_column(c, &eig.eigenvectors.column(i));
            }
            let kept = basis.columns(0, size) * &s;
            let mut next = DMatrix::<f64>::zeros(n, m);
            next.columns_mut(0, keep).copy_from(&kept);
            next.as_mut_slice()[keep * n..(keep + 1) * n].copy_from_slice(&resid);
            basis = next;
            h = DMatrix::zeros(m, m);
            for (c, &i) in unlocked.iter().take(keep).enumerate() {
                h[(c, c)] = theta(i);
                let coupling = beta * eig.eigenvectors[(size - 1, i)];
                h[(keep, c)] = coupling;
                h[(c, keep)] = coupling;
            }
            coef = vec![0.0; m];
            start = keep;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}
