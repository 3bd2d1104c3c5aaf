//! Pairwise affinity matrices and ISOMAP embeddings.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::distances::{distance_value, DistanceParams};
use crate::eigensolver::Spectrum;
use crate::error::{Error, Result};

/// Symmetric matrix of pairwise distances with one identifier per row.
#[derive(Clone, Debug, PartialEq)]
pub struct AffinityMatrix {
    ids: Vec<String>,
    /// Row-major, `ids.len()` squared entries.
    values: Vec<f64>,
    metric: String,
}

impl AffinityMatrix {
    pub fn new(ids: Vec<String>, values: Vec<f64>, metric: impl Into<String>) -> Result<Self> {
        let n = ids.len();
        let bad = |m: String| Err(Error::InvalidArgument(format!("affinity matrix: {m}")));
        if n == 0 {
            return bad("no entries".into());
        }
        if values.len() != n * n {
            return bad(format!("{} values for {n} identifiers", values.len()));
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return bad(format!("nonzero diagonal at {}", ids[i]));
            }
            for j in 0..n {
                let v = values[i * n + j];
                if !(v.is_finite() && v >= 0.0) {
                    return bad(format!("invalid entry {v} at ({}, {})", ids[i], ids[j]));
                }
                if v != values[j * n + i] {
                    return bad(format!("asymmetric at ({}, {})", ids[i], ids[j]));
                }
            }
        }
        Ok(AffinityMatrix {
            ids,
            values,
            metric: metric.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn metric(&self) -> &str {
        &self.metric
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.len();
        &self.values[i * n..(i + 1) * n]
    }

    /// Reordered copy; `order[k]` is the old index of the new row `k`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let n = self.len();
        let mut seen = vec![false; n];
        if order.len() != n || order.iter().any(|&i| i >= n || std::mem::replace(&mut seen[i], true)) {
            return Err(Error::InvalidArgument("not a permutation".into()));
        }
        let ids = order.iter().map(|&i| self.ids[i].clone()).collect();
        let mut values = vec![0.0; n * n];
        for (a, &i) in order.iter().enumerate() {
            for (b, &j) in order.iter().enumerate() {
                values[a * n + b] = self.get(i, j);
            }
        }
        AffinityMatrix::new(ids, values, self.metric.clone())
    }

    /// CSV with identifiers in the first row and column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id");
        for id in &self.ids {
            out.push(',');
            out.push_str(id);
        }
        out.push('\n');
        for (i, id) in self.ids.iter().enumerate() {
            out.push_str(id);
            for v in self.row(i) {
                out.push_str(&format!(",{v:.16e}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str, source: &Path) -> Result<Self> {
        let perr = |m: String| Error::parse(source, m);
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| perr("empty file".into()))?;
        let ids: Vec<String> = header.split(',').skip(1).map(|s| s.trim().to_string()).collect();
        let n = ids.len();
        let mut values = Vec::with_capacity(n * n);
        for (i, line) in lines.enumerate() {
            let mut fields = line.split(',');
            let id = fields.next().unwrap_or("").trim();
            if i >= n || id != ids[i] {
                return Err(perr(format!("row {} has identifier {id:?}", i + 1)));
            }
            let row: Vec<f64> = fields
                .map(|f| f.trim().parse::<f64>().map_err(|e| perr(format!("{f:?}: {e}"))))
                .collect::<Result<_>>()?;
            if row.len() != n {
                return Err(perr(format!("row {id} has {} values", row.len())));
            }
            values.extend(row);
        }
        if values.len() != n * n {
            return Err(perr(format!("expected {n} rows")));
        }
        AffinityMatrix::new(ids, values, "").map_err(|e| perr(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::from_csv(&text, path)
    }
}

pub(crate) fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))
}

/// All pairwise distances, each unordered pair computed once. The result does
/// not depend on `workers`.
pub fn pairwise_matrix(
    spectra: &[Spectrum],
    params: &DistanceParams,
    workers: usize,
) -> Result<AffinityMatrix> {
    let first = spectra
        .first()
        .ok_or_else(|| Error::InvalidDataset("no spectra".into()))?;
    for s in spectra {
        if s.dimension != first.dimension || s.normalisation != first.normalisation {
            return Err(Error::Heterogeneous(format!(
                "{} is {}D/{} but {} is {}D/{}",
                s.identifier,
                s.dimension,
                s.normalisation,
                first.identifier,
                first.dimension,
                first.normalisation
            )));
        }
    }
    let n = spectra.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let dists: Vec<Result<f64>> = pool(workers)?.install(|| {
        pairs
            .par_iter()
            .map(|&(i, j)| distance_value(&spectra[i], &spectra[j], params))
            .collect()
    });
    let mut values = vec![0.0; n * n];
    for (&(i, j), d) in pairs.iter().zip(dists) {
        let d = d?;
        values[i * n + j] = d;
        values[j * n + i] = d;
    }
    let ids = spectra.iter().map(|s| s.identifier.clone()).collect();
    let metric = format!("{}(p={},N={})", params.metric, params.p, params.n);
    AffinityMatrix::new(ids, values, metric)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    pub ids: Vec<String>,
    /// One row of `dim` coordinates per identifier.
    pub coords: Vec<Vec<f64>>,
    pub dim: usize,
    /// Eigenvalues of the centred Gram matrix, descending.
    pub eigenvalues: Vec<f64>,
    /// Kruskal stress between geodesic and embedded distances.
    pub stress: f64,
    pub warnings: Vec<String>,
}

impl Embedding {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id");
        for c in 1..=self.dim {
            out.push_str(&format!(",c{c}"));
        }
        out.push('\n');
        for (id, row) in self.ids.iter().zip(&self.coords) {
            out.push_str(id);
            for v in row {
                out.push_str(&format!(",{v:.16e}"));
            }
            out.push('\n');
        }
        out
    }
}

#[derive(PartialEq)]
struct Frontier(f64, usize);

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(adj: &[Vec<(usize, f64)>], source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    dist[source] = 0.0;
    let mut heap = BinaryHeap::from([Frontier(0.0, source)]);
    while let Some(Frontier(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, w) in &adj[u] {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Frontier(nd, v));
            }
        }
    }
    dist
}

/// Symmetrised k-nearest-neighbour graph; ties are broken by identifier.
fn knn_graph(m: &AffinityMatrix, k: usize) -> Vec<Vec<(usize, f64)>> {
    let n = m.len();
    let mut linked = vec![false; n * n];
    for i in 0..n {
        let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        others.sort_by(|&a, &b| {
            m.get(i, a)
                .total_cmp(&m.get(i, b))
                .then_with(|| m.ids()[a].cmp(&m.ids()[b]))
        });
        for &j in others.iter().take(k) {
            linked[i * n + j] = true;
            linked[j * n + i] = true;
        }
    }
    (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| linked[i * n + j])
                .map(|j| (j, m.get(i, j)))
                .collect()
        })
        .collect()
}

fn components(adj: &[Vec<(usize, f64)>]) -> Vec<Vec<usize>> {
    let mut label = vec![usize::MAX; adj.len()];
    let mut out = Vec::new();
    for s in 0..adj.len() {
        if label[s] != usize::MAX {
            continue;
        }
        let mut comp = vec![s];
        label[s] = out.len();
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &adj[u] {
                if label[v] == usize::MAX {
                    label[v] = out.len();
                    comp.push(v);
                    queue.push_back(v);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Eigen-decomposition of a dense symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues in descending order and the matching eigenvectors as
/// columns.
pub fn jacobi_eigen(a: &DMatrix<f64>, tol: f64) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut a = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = a.norm().max(1.0);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= tol * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vecs = DMatrix::<f64>::zeros(n, n);
    for (c, &i) in order.iter().enumerate() {
        vecs.set_column(c, &v.column(i));
    }
    (values, vecs)
}

/// Classical multidimensional scaling of a distance matrix (row-major).
fn classical_mds(dist: &[f64], n: usize, dim: usize) -> (Vec<Vec<f64>>, Vec<f64>, usize) {
    let sq = DMatrix::from_fn(n, n, |i, j| dist[i * n + j] * dist[i * n + j]);
    let row_mean: Vec<f64> = (0..n).map(|i| sq.row(i).sum() / n as f64).collect();
    let total = row_mean.iter().sum::<f64>() / n as f64;
    let b = DMatrix::from_fn(n, n, |i, j| -0.5 * (sq[(i, j)] - row_mean[i] - row_mean[j] + total));
    let (values, vecs) = jacobi_eigen(&b, 1e-12);
    let floor = 1e-12 * values.first().copied().unwrap_or(0.0).abs().max(1e-300);
    let positive = values.iter().take_while(|&&v| v > floor).count();
    let used = dim.min(positive);
    let mut coords = vec![vec![0.0; dim]; n];
    for c in 0..used {
        let col = vecs.column(c);
        // Sign convention: the largest-magnitude component is positive.
        let mut pivot = 0;
        for i in 1..n {
            if col[i].abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        let scale = values[c].sqrt() * sign;
        for (i, row) in coords.iter_mut().enumerate() {
            row[c] = scale * col[i];
        }
    }
    (coords, values, used)
}

/// ISOMAP: k-NN graph, geodesic distances, classical MDS.
pub fn isomap(m: &AffinityMatrix, k_neighbors: usize, target_dim: usize, workers: usize) -> Result<Embedding> {
    if k_neighbors == 0 || target_dim == 0 {
        return Err(Error::InvalidArgument(
            "neighbour count and target dimension must be at least 1".into(),
        ));
    }
    let n = m.len();
    let adj = knn_graph(m, k_neighbors.min(n.saturating_sub(1)));
    let comps = components(&adj);
    if comps.len() > 1 {
        return Err(Error::DisconnectedGraph(
            comps
                .iter()
                .map(|c| c.iter().map(|&i| m.ids()[i].clone()).collect())
                .collect(),
        ));
    }
    let rows: Vec<Vec<f64>> = pool(workers)?.install(|| {
        (0..n).into_par_iter().map(|s| dijkstra(&adj, s)).collect()
    });
    let mut geo = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            // exact symmetry regardless of summation order
            geo[i * n + j] = rows[i][j].min(rows[j][i]);
        }
    }
    let (coords, eigenvalues, used) = classical_mds(&geo, n, target_dim);
    let mut warnings = Vec::new();
    if used < target_dim {
        warnings.push(format!(
            "only {used} positive Gram eigenvalues; coordinates beyond {used} are zero"
        ));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let e: f64 = coords[i]
                .iter()
                .zip(&coords[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            num += (geo[i * n + j] - e).powi(2);
            den += geo[i * n + j].powi(2);
        }
    }
    let stress = if den > 0.0 { (num / den).sqrt() } else { 0.0 };
    Ok(Embedding {
        ids: m.ids().to_vec(),
        coords,
        dim: target_dim,
        eigenvalues,
        stress,
        warnings,
    })
}

/// RMS distance between two point sets after centring, scaling each to unit
/// Frobenius norm and applying the best orthogonal map (reflections allowed).
pub fn procrustes_rms(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    let n = a.len();
    if n == 0 || b.len() != n {
        return Err(Error::InvalidArgument("point sets must be nonempty and equally long".into()));
    }
    let k = a[0].len();
    if a.iter().chain(b).any(|r| r.len() != k) {
        return Err(Error::InvalidArgument("point sets must share one dimension".into()));
    }
    let prep = |x: &[Vec<f64>]| {
        let mut m = DMatrix::from_fn(n, k, |i, j| x[i][j]);
        for j in 0..k {
            let mean = m.column(j).mean();
            m.column_mut(j).add_scalar_mut(-mean);
        }
        let norm = m.norm();
        if norm > 0.0 {
            m /= norm;
        }
        m
    };
    let (x, y) = (prep(a), prep(b));
    let svd = (x.transpose() * &y).svd(true, true);
    let (u, vt) = (svd.u.expect("u"), svd.v_t.expect("v_t"));
    let r = u * vt;
    let diff = x * r - y;
    Ok((diff.norm_squared() / n as f64).sqrt())
}
