//! Directed stochastic block model generator. Edge presence is sampled per
//! unordered vertex pair (probability p within a cluster, q across), and a
//! sampled edge is oriented by the cluster-level orientation matrix F. Each
//! pair draws from its own counter-based PRNG stream keyed by
//! (seed, u, v), so generation is order-independent.

use crate::error::{Error, Result};
use crate::graph::Digraph;
use crate::kmeans::Partition;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// Which meta-graph shape generated an orientation matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetaPattern {
    Circulant,
    Dag,
    Cmg,
}

impl std::str::FromStr for MetaPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<MetaPattern> {
        match s {
            "circulant" => Ok(MetaPattern::Circulant),
            "dag" => Ok(MetaPattern::Dag),
            "cmg" => Ok(MetaPattern::Cmg),
            _ => Err(Error::InvalidArgument(format!(
                "unknown meta pattern '{s}' (expected circulant, dag, or cmg)"
            ))),
        }
    }
}

impl std::fmt::Display for MetaPattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MetaPattern::Circulant => "circulant",
            MetaPattern::Dag => "dag",
            MetaPattern::Cmg => "cmg",
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DsbmParams {
    pub k: usize,
    /// Within-cluster edge probability.
    pub p: f64,
    /// Between-cluster edge probability.
    pub q: f64,
    /// Cluster sizes; the i-th block of vertices belongs to cluster i.
    pub c: Vec<usize>,
    /// k-by-k orientation probabilities, row-major: a sampled edge between
    /// clusters a and b points a -> b with probability f[a][b].
    pub f: Vec<Vec<f64>>,
    pub seed: u64,
}

impl DsbmParams {
    pub fn n(&self) -> usize {
        self.c.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 || self.c.len() != self.k || self.f.len() != self.k {
            return Err(Error::InvalidArgument(format!(
                "k = {} inconsistent with {} sizes and {} orientation rows",
                self.k,
                self.c.len(),
                self.f.len()
            )));
        }
        if self.c.iter().any(|&s| s == 0) {
            return Err(Error::InvalidArgument(
                "every cluster must be non-empty".to_string(),
            ));
        }
        for prob in [self.p, self.q] {
            if !(0.0..=1.0).contains(&prob) {
                return Err(Error::InvalidArgument(format!(
                    "edge probability {prob} outside [0, 1]"
                )));
            }
        }
        for (a, row) in self.f.iter().enumerate() {
            if row.len() != self.k {
                return Err(Error::InvalidArgument(format!(
                    "orientation row {a} has length {}",
                    row.len()
                )));
            }
            if (row[a] - 0.5).abs() > 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "orientation diagonal entry ({a},{a}) = {} must be 0.5",
                    row[a]
                )));
            }
            for b in 0..self.k {
                let sum = self.f[a][b] + self.f[b][a];
                if !(0.0..=1.0).contains(&self.f[a][b]) || (sum - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidArgument(format!(
                        "orientation entries ({a},{b}) and ({b},{a}) must lie in [0,1] and sum to 1"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Ground-truth labels implied by the size sequence.
    pub fn truth(&self) -> Partition {
        let mut assignment = Vec::with_capacity(self.n());
        for (label, &size) in self.c.iter().enumerate() {
            assignment.extend(std::iter::repeat(label).take(size));
        }
        Partition::new(assignment, self.k).expect("sizes validated non-empty")
    }
}

fn check_mu(mu: f64) -> Result<()> {
    if !(0.0..0.5).contains(&mu) {
        return Err(Error::InvalidArgument(format!(
            "mu = {mu} outside [0, 0.5)"
        )));
    }
    Ok(())
}

fn base_f(k: usize) -> Vec<Vec<f64>> {
    vec![vec![0.5; k]; k]
}

/// Directed k-cycle meta-graph: cluster a points to cluster a+1 mod k with
/// strength 1-mu; non-adjacent pairs are unbiased.
pub fn meta_circulant(k: usize, mu: f64) -> Result<Vec<Vec<f64>>> {
    check_mu(mu)?;
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k = {k} must be >= 2")));
    }
    let mut f = base_f(k);
    let mut touched = vec![vec![false; k]; k];
    for a in 0..k {
        let b = (a + 1) % k;
        // with k = 2 both cycle arcs cover the same pair; the first wins
        if !touched[a][b] {
            f[a][b] = 1.0 - mu;
            f[b][a] = mu;
            touched[a][b] = true;
            touched[b][a] = true;
        }
    }
    Ok(f)
}

/// Banded DAG meta-graph: each cluster is pushed toward the next two (no
/// wraparound); entries two or more bands away stay unbiased.
pub fn meta_dag(k: usize, mu: f64) -> Result<Vec<Vec<f64>>> {
    check_mu(mu)?;
    if k < 3 {
        return Err(Error::InvalidArgument(format!("k = {k} must be >= 3")));
    }
    let mut f = base_f(k);
    for u in 0..k {
        for v in 0..k {
            if v == u + 1 || v == u + 2 {
                f[u][v] = mu;
            } else if v + 1 == u || v + 2 == u {
                f[u][v] = 1.0 - mu;
            }
        }
    }
    Ok(f)
}

/// Complete meta-graph: every unordered cluster pair gets a fair-coin
/// orientation at strength 1-mu.
pub fn meta_cmg(k: usize, mu: f64, seed: u64) -> Result<Vec<Vec<f64>>> {
    check_mu(mu)?;
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k = {k} must be >= 2")));
    }
    let mut rng = crate::kmeans::derive_rng(seed, 0xc316);
    let mut f = base_f(k);
    for a in 0..k {
        for b in (a + 1)..k {
            if rng.gen::<bool>() {
                f[a][b] = 1.0 - mu;
                f[b][a] = mu;
            } else {
                f[a][b] = mu;
                f[b][a] = 1.0 - mu;
            }
        }
    }
    Ok(f)
}

#[derive(Debug, Clone)]
pub struct DsbmInstance {
    pub graph: Digraph,
    pub truth: Partition,
    pub params: DsbmParams,
}

/// Per-pair PRNG stream so the sample for {u, v} is independent of
/// generation order.
fn pair_rng(seed: u64, u: usize, v: usize) -> impl Rng {
    crate::kmeans::derive_rng(seed, ((u as u64) << 32) | v as u64)
}

/// Sample a DSBM instance. Each unordered pair gets at most one edge, all
/// weights 1; orientation follows the cluster-level matrix F.
pub fn generate(params: &DsbmParams) -> Result<DsbmInstance> {
    params.validate()?;
    let truth = params.truth();
    let labels = truth.assignment();
    let n = params.n();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let mut rng = pair_rng(params.seed, u, v);
            let (a, b) = (labels[u], labels[v]);
            let present = rng.gen::<f64>() < if a == b { params.p } else { params.q };
            if !present {
                continue;
            }
            if rng.gen::<f64>() < params.f[a][b] {
                edges.push((u, v, 1.0));
            } else {
                edges.push((v, u, 1.0));
            }
        }
    }
    let graph = Digraph::from_edges(n, edges)?;
    Ok(DsbmInstance {
        graph,
        truth,
        params: params.clone(),
    })
}

/// Write the ground-truth labels as vertex<TAB>cluster lines.
pub fn write_truth(truth: &Partition, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for (v, &c) in truth.assignment().iter().enumerate() {
        writeln!(out, "{v}\t{c}")?;
    }
    out.flush()?;
    Ok(())
}

/// Read labels written by `write_truth` (or any vertex<TAB>cluster TSV).
pub fn read_truth(path: &Path) -> Result<Partition> {
    let text = std::fs::read_to_string(path)?;
    let mut pairs = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let parse = |tok: Option<&str>| -> Result<usize> {
            tok.and_then(|t| t.parse().ok()).ok_or(Error::Parse {
                path: path.display().to_string(),
                line: idx + 1,
                msg: "expected 'vertex<TAB>cluster'".to_string(),
            })
        };
        let v = parse(it.next())?;
        let c = parse(it.next())?;
        pairs.push((v, c));
    }
    pairs.sort_unstable();
    let n = pairs.len();
    let mut assignment = vec![usize::MAX; n];
    for (v, c) in pairs {
        if v >= n {
            return Err(Error::IndexOutOfRange { index: v, n });
        }
        assignment[v] = c;
    }
    if assignment.iter().any(|&c| c == usize::MAX) {
        return Err(Error::Parse {
            path: path.display().to_string(),
            line: 0,
            msg: "vertex indices must cover 0..n-1".to_string(),
        });
    }
    let k = assignment.iter().copied().max().unwrap_or(0) + 1;
    Partition::new(assignment, k)
}
