//! Ranked-retrieval scores over a class-labelled affinity matrix.

use std::collections::HashMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{pool, AffinityMatrix};
use crate::error::{Error, Result};

pub const E_MEASURE_CUTOFF: usize = 32;
const PR_LEVELS: usize = 11;

#[derive(Clone, Debug)]
pub struct LabeledDataset {
    matrix: AffinityMatrix,
    labels: Vec<String>,
}

impl LabeledDataset {
    /// `labels[i]` is the class of row `i`.
    pub fn new(matrix: AffinityMatrix, labels: Vec<String>) -> Result<Self> {
        if labels.len() != matrix.len() {
            return Err(Error::InvalidDataset(format!(
                "{} labels for {} shapes",
                labels.len(),
                matrix.len()
            )));
        }
        Ok(LabeledDataset { matrix, labels })
    }

    /// Labels looked up by identifier.
    pub fn from_pairs(matrix: AffinityMatrix, pairs: &[(String, String)]) -> Result<Self> {
        let map: HashMap<&str, &str> = pairs.iter().map(|(i, c)| (i.as_str(), c.as_str())).collect();
        let labels = matrix
            .ids()
            .iter()
            .map(|id| {
                map.get(id.as_str())
                    .map(|c| c.to_string())
                    .ok_or_else(|| Error::InvalidDataset(format!("no label for {id}")))
            })
            .collect::<Result<_>>()?;
        LabeledDataset::new(matrix, labels)
    }

    pub fn matrix(&self) -> &AffinityMatrix {
        &self.matrix
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// Parses `id,class` lines; a leading `id,class` header is skipped.
pub fn parse_labels(text: &str, source: &Path) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',').map(str::trim);
        let (Some(id), Some(class), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::parse(source, format!("line {}: expected id,class", n + 1)));
        };
        if n == 0 && id == "id" && class == "class" {
            continue;
        }
        out.push((id.to_string(), class.to_string()));
    }
    Ok(out)
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<Vec<(String, String)>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    parse_labels(&text, path)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RetrievalScores {
    #[serde(rename = "NN")]
    pub nn: f64,
    #[serde(rename = "FT")]
    pub ft: f64,
    #[serde(rename = "ST")]
    pub st: f64,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "DCG")]
    pub dcg: f64,
    /// Interpolated precision at recall 0, 0.1, ..., 1 as `(recall, precision)`.
    pub pr_curve: Vec<(f64, f64)>,
    pub queries: usize,
    /// Queries whose class has no other member.
    pub skipped: Vec<String>,
}

/// Scores of one query.
#[derive(Clone, Debug, PartialEq)]
pub struct QueryScores {
    pub nn: f64,
    pub ft: f64,
    pub st: f64,
    pub e: f64,
    pub dcg: f64,
    pub precision_at_recall: [f64; PR_LEVELS],
}

/// Other items ordered by distance to `q`, ties broken by identifier.
pub fn ranking(m: &AffinityMatrix, q: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..m.len()).filter(|&j| j != q).collect();
    order.sort_by(|&a, &b| {
        m.get(q, a)
            .total_cmp(&m.get(q, b))
            .then_with(|| m.ids()[a].cmp(&m.ids()[b]))
    });
    order
}

/// Scores for a ranked relevance list with `relevant` relevant items in total.
pub fn score_ranking(relevance: &[bool], relevant: usize) -> QueryScores {
    let r = relevant as f64;
    let hits = |k: usize| relevance.iter().take(k).filter(|&&x| x).count() as f64;
    let nn = if relevance.first() == Some(&true) { 1.0 } else { 0.0 };
    let ft = hits(relevant) / r;
    let st = hits(2 * relevant) / r;
    let cutoff = E_MEASURE_CUTOFF.min(relevance.len());
    let (p, rc) = (hits(cutoff) / cutoff as f64, hits(cutoff) / r);
    let e = if p + rc > 0.0 { 2.0 * p * rc / (p + rc) } else { 0.0 };
    // Rank 1 undiscounted, rank i >= 2 discounted by log2(i).
    let gain = |i: usize| if i == 0 { 1.0 } else { 1.0 / ((i + 1) as f64).log2() };
    let dcg: f64 = relevance.iter().enumerate().filter(|(_, &x)| x).map(|(i, _)| gain(i)).sum();
    let ideal: f64 = (0..relevant).map(gain).sum();
    let mut points = Vec::with_capacity(relevant);
    let mut found = 0usize;
    for (i, &x) in relevance.iter().enumerate() {
        if x {
            found += 1;
            points.push((found as f64 / r, found as f64 / (i + 1) as f64));
        }
    }
    let mut precision_at_recall = [0.0; PR_LEVELS];
    for (l, slot) in precision_at_recall.iter_mut().enumerate() {
        let level = l as f64 / (PR_LEVELS - 1) as f64;
        *slot = points
            .iter()
            .filter(|(rec, _)| *rec >= level - 1e-12)
            .map(|&(_, prec)| prec)
            .fold(0.0, f64::max);
    }
    QueryScores {
        nn,
        ft,
        st,
        e,
        dcg: dcg / ideal,
        precision_at_recall,
    }
}

/// Macro-averaged scores over every query with at least one same-class item.
pub fn evaluate(ds: &LabeledDataset, workers: usize) -> Result<RetrievalScores> {
    let m = ds.matrix();
    let n = m.len();
    let mut class_size: HashMap<&str, usize> = HashMap::new();
    for l in ds.labels() {
        *class_size.entry(l.as_str()).or_default() += 1;
    }
    let per_query: Vec<Option<QueryScores>> = pool(workers)?.install(|| {
        (0..n)
            .into_par_iter()
            .map(|q| {
                let relevant = class_size[ds.labels()[q].as_str()] - 1;
                if relevant == 0 {
                    return None;
                }
                let rel: Vec<bool> = ranking(m, q)
                    .into_iter()
                    .map(|j| ds.labels()[j] == ds.labels()[q])
                    .collect();
                Some(score_ranking(&rel, relevant))
            })
            .collect()
    });
    let skipped: Vec<String> = per_query
        .iter()
        .zip(m.ids())
        .filter(|(s, _)| s.is_none())
        .map(|(_, id)| id.clone())
        .collect();
    let scored: Vec<&QueryScores> = per_query.iter().flatten().collect();
    if scored.is_empty() {
        return Err(Error::InvalidDataset("every class has a single member".into()));
    }
    let k = scored.len() as f64;
    let mean = |f: &dyn Fn(&QueryScores) -> f64| scored.iter().map(|s| f(s)).sum::<f64>() / k;
    let pr_curve = (0..PR_LEVELS)
        .map(|l| {
            (
                l as f64 / (PR_LEVELS - 1) as f64,
                mean(&|s: &QueryScores| s.precision_at_recall[l]),
            )
        })
        .collect();
    Ok(RetrievalScores {
        nn: mean(&|s| s.nn),
        ft: mean(&|s| s.ft),
        st: mean(&|s| s.st),
        e: mean(&|s| s.e),
        dcg: mean(&|s| s.dcg),
        pr_curve,
        queries: scored.len(),
        skipped,
    })
}
