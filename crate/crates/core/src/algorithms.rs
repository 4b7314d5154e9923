//! The clustering pipelines: four skew-matrix methods (Skew-F, Skew-R,
//! Skew-S, plus the distance-equivalent low-dimensional Herm embedding), the
//! dense projector baseline, and three comparison methods (DD-Sym, SVD-M,
//! BCS). Each maps a digraph to a partition with a three-way timing split.

use crate::error::{Error, Result};
use crate::graph::{build_skew, normalize_skew, Digraph, NormTag};
use crate::kmeans::{kmeans, KMeansOpts, Partition};
use crate::linalg::{
    projector_embedding, real_schur_dense, schur_pairs_from_svd, symmetric_eigs, truncated_svd,
    Embedding, IterOpts, DENSE_GUARD,
};
use crate::sparse::CsrMatrix;
use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    SkewF,
    SkewR,
    SkewS,
    Herm,
    HermDense,
    DdSym,
    SvdM,
    Bcs,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::SkewF,
        Method::SkewR,
        Method::SkewS,
        Method::Herm,
        Method::HermDense,
        Method::DdSym,
        Method::SvdM,
        Method::Bcs,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::SkewF => "skew_f",
            Method::SkewR => "skew_r",
            Method::SkewS => "skew_s",
            Method::Herm => "herm",
            Method::HermDense => "herm_dense",
            Method::DdSym => "dd_sym",
            Method::SvdM => "svd_m",
            Method::Bcs => "bcs",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Method> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method '{s}'")))
    }
}

/// Everything a pipeline run needs besides the graph.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterSpec {
    pub method: Method,
    pub k: usize,
    /// Explicit embedding width in real singular-vector units (skew_r);
    /// must be even.
    pub l_override: Option<usize>,
    /// Gram mixing weight for dd_sym, in [0, 1].
    pub alpha: f64,
    /// Truncation rank for svd_m; defaults to k.
    pub d: Option<usize>,
    pub normalization: NormTag,
    /// Search window for skew_s; defaults to 2k+2.
    pub search_cap: Option<usize>,
    /// Teleportation strength for bcs; defaults to 0.01 when the graph is
    /// not strongly connected, 0 otherwise.
    pub tau: Option<f64>,
    pub seed: u64,
}

impl ClusterSpec {
    pub fn new(method: Method, k: usize) -> ClusterSpec {
        ClusterSpec {
            method,
            k,
            l_override: None,
            alpha: 0.5,
            d: None,
            normalization: NormTag::None,
            search_cap: None,
            tau: None,
            seed: 0,
        }
    }

    /// Method name plus normalization suffix, e.g. "skew_f_rw".
    pub fn label(&self) -> String {
        match self.normalization {
            NormTag::None => self.method.name().to_string(),
            NormTag::Rw => format!("{}_rw", self.method),
            NormTag::Sym => format!("{}_sym", self.method),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidArgument(format!(
                "k = {} must be at least 2",
                self.k
            )));
        }
        if let Some(l) = self.l_override {
            if l == 0 || l % 2 != 0 {
                return Err(Error::InvalidArgument(format!(
                    "l = {l} must be a positive even number of real singular vectors"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidArgument(format!(
                "alpha = {} outside [0, 1]",
                self.alpha
            )));
        }
        Ok(())
    }

    pub fn run(&self, g: &Digraph) -> Result<TimedPartition> {
        self.validate()?;
        match self.method {
            Method::SkewF => skew_f(g, self.k, self.normalization, self.seed),
            Method::SkewR => {
                let l = self.l_override.ok_or_else(|| {
                    Error::InvalidArgument("skew_r requires an explicit l".to_string())
                })?;
                skew_r(g, self.k, l, self.normalization, self.seed)
            }
            Method::SkewS => skew_s(g, self.k, self.normalization, self.seed, self.search_cap),
            Method::Herm => herm(g, self.k, self.normalization, self.seed),
            Method::HermDense => herm_dense(g, self.k, self.normalization, self.seed),
            Method::DdSym => dd_sym(
                g,
                self.k,
                self.alpha,
                self.normalization != NormTag::None,
                self.seed,
            ),
            Method::SvdM => svd_m(g, self.k, self.d.unwrap_or(self.k), self.seed),
            Method::Bcs => bcs(g, self.k, self.seed, self.tau),
        }
    }
}

/// Run annotations that downstream reporting surfaces.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flags {
    /// skew_s found no meaningful singular-value gap.
    pub gap_degenerate: bool,
    /// bcs applied teleportation to repair connectivity.
    pub regularized: bool,
    /// the caller restricted a disconnected graph to its giant component.
    pub restricted_to_giant_component: bool,
    /// herm with rw normalization fell back to the raw singular-vector
    /// embedding (the paired-block construction needs an unnormalized or
    /// sym-normalized skew matrix).
    pub rw_fallback: bool,
}

/// A partition together with the three-way wall-clock split: setup = matrix
/// assembly, embed = factorization and vector selection, kmeans =
/// clustering.
#[derive(Debug, Clone)]
pub struct TimedPartition {
    pub partition: Partition,
    pub inertia: f64,
    pub setup_ms: f64,
    pub embed_ms: f64,
    pub kmeans_ms: f64,
    pub embed_dim: usize,
    pub flags: Flags,
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1000.0
}

fn run_kmeans(points: &Embedding, k: usize, seed: u64) -> Result<(Partition, f64)> {
    let opts = KMeansOpts {
        seed,
        ..KMeansOpts::default()
    };
    let res = kmeans(points, k, &opts)?;
    Ok((res.partition, res.inertia))
}

fn default_l(k: usize) -> usize {
    if k % 2 == 0 {
        k
    } else {
        k - 1
    }
}

fn finish(
    points: &Embedding,
    k: usize,
    seed: u64,
    setup_ms: f64,
    embed_ms: f64,
    flags: Flags,
) -> Result<TimedPartition> {
    let t = Instant::now();
    let (partition, inertia) = run_kmeans(points, k, seed)?;
    Ok(TimedPartition {
        partition,
        inertia,
        setup_ms,
        embed_ms,
        kmeans_ms: ms(t),
        embed_dim: points.dim(),
        flags,
    })
}

fn build_normalized_skew(g: &Digraph, norm: NormTag) -> Result<crate::graph::SkewMatrix> {
    let k = build_skew(g);
    if norm == NormTag::None {
        Ok(k)
    } else {
        normalize_skew(&k, norm)
    }
}

/// Skew-F: truncated SVD of the net-flow matrix, k-means on the n-by-l
/// left-singular-vector rows, l = k rounded down to even.
pub fn skew_f(g: &Digraph, k: usize, norm: NormTag, seed: u64) -> Result<TimedPartition> {
    skew_r(g, k, default_l(k), norm, seed)
}

/// Skew-R: Skew-F with a caller-chosen even embedding width l.
pub fn skew_r(g: &Digraph, k: usize, l: usize, norm: NormTag, seed: u64) -> Result<TimedPartition> {
    if l == 0 || l % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "l = {l} must be a positive even number of real singular vectors"
        )));
    }
    let t = Instant::now();
    let km = build_normalized_skew(g, norm)?;
    let setup_ms = ms(t);

    let t = Instant::now();
    let opts = IterOpts {
        seed,
        ..IterOpts::default()
    };
    let svd = truncated_svd(km.matrix(), l, &opts)?;
    let points = svd.left_embedding(l);
    let embed_ms = ms(t);
    finish(&points, k, seed, setup_ms, embed_ms, Flags::default())
}

/// Skew-S: pick the embedding width by the largest singular-value gap at an
/// even index, searched over a window of min(search_cap, n-2) values.
pub fn skew_s(
    g: &Digraph,
    k: usize,
    norm: NormTag,
    seed: u64,
    search_cap: Option<usize>,
) -> Result<TimedPartition> {
    let cap = search_cap.unwrap_or(2 * k + 2);
    let m = cap.min(g.n().saturating_sub(2));
    if m < 3 {
        return Err(Error::InvalidArgument(format!(
            "graph with n = {} too small for the gap search",
            g.n()
        )));
    }
    let t = Instant::now();
    let km = build_normalized_skew(g, norm)?;
    let setup_ms = ms(t);

    let t = Instant::now();
    let opts = IterOpts {
        seed,
        ..IterOpts::default()
    };
    let svd = truncated_svd(km.matrix(), m, &opts)?;
    // candidates are even 1-based cut indices j with sigma_{j+1} available
    let mut best_j = 2usize;
    let mut best_gap = f64::NEG_INFINITY;
    let mut j = 2;
    while j < m {
        let gap = svd.sigma[j - 1] - svd.sigma[j];
        if gap > best_gap {
            best_gap = gap;
            best_j = j;
        }
        j += 2;
    }
    let mut flags = Flags::default();
    if best_gap <= 1e-12 * svd.sigma[0].max(1.0) {
        flags.gap_degenerate = true;
        best_j = 2;
    }
    let points = svd.left_embedding(best_j);
    let embed_ms = ms(t);
    finish(&points, k, seed, setup_ms, embed_ms, flags)
}

/// Herm (low-dimensional form): the singular vectors are regrouped into
/// orthogonal rotation blocks before embedding, which fixes the basis of
/// any degenerate singular subspace and makes the row geometry match the
/// dense projector baseline exactly. rw normalization is incompatible with
/// the block construction and falls back to the plain embedding, flagged.
pub fn herm(g: &Digraph, k: usize, norm: NormTag, seed: u64) -> Result<TimedPartition> {
    if norm == NormTag::Rw {
        let mut out = skew_f(g, k, norm, seed)?;
        out.flags.rw_fallback = true;
        return Ok(out);
    }
    let l = default_l(k);
    let t = Instant::now();
    let km = build_normalized_skew(g, norm)?;
    let setup_ms = ms(t);

    let t = Instant::now();
    let opts = IterOpts {
        seed,
        ..IterOpts::default()
    };
    let svd = truncated_svd(km.matrix(), l, &opts)?;
    let pairs = schur_pairs_from_svd(&svd, &km)?;
    let points = pairs.embedding(l)?;
    let embed_ms = ms(t);
    finish(&points, k, seed, setup_ms, embed_ms, Flags::default())
}

/// Dense baseline: k-means on the n rows of the rank-l spectral projector.
/// Same row geometry as `herm`, but the clustering step pays for n-wide
/// rows.
pub fn herm_dense(g: &Digraph, k: usize, norm: NormTag, seed: u64) -> Result<TimedPartition> {
    if norm == NormTag::Rw {
        return Err(Error::RwNotSupported);
    }
    if g.n() > DENSE_GUARD {
        return Err(Error::DenseGuard {
            n: g.n(),
            guard: DENSE_GUARD,
        });
    }
    let l = default_l(k);
    let t = Instant::now();
    let km = build_normalized_skew(g, norm)?;
    let setup_ms = ms(t);

    let t = Instant::now();
    let opts = IterOpts {
        seed,
        ..IterOpts::default()
    };
    let svd = truncated_svd(km.matrix(), l, &opts)?;
    let pairs = schur_pairs_from_svd(&svd, &km)?;
    let points = projector_embedding(&pairs, l)?;
    let embed_ms = ms(t);
    finish(&points, k, seed, setup_ms, embed_ms, Flags::default())
}

/// DD-Sym: k leading eigenvectors of A = alpha M M^T + (1-alpha) M^T M.
/// With `normalized`, the DD-Sym-N variant clusters the eigenvectors of the
/// degree-normalized D^{-1} A, obtained from the similar symmetric matrix
/// D^{-1/2} A D^{-1/2} so the symmetric solver still applies.
pub fn dd_sym(
    g: &Digraph,
    k: usize,
    alpha: f64,
    normalized: bool,
    seed: u64,
) -> Result<TimedPartition> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!(
            "alpha = {alpha} outside [0, 1]"
        )));
    }
    let t = Instant::now();
    let m = g.adjacency();
    let mt = m.transpose();
    let out_gram = m.spgemm(&mt);
    let in_gram = mt.spgemm(m);
    let a = CsrMatrix::from_triplets(
        g.n(),
        g.n(),
        out_gram
            .iter()
            .map(|(r, c, v)| (r, c, alpha * v))
            .chain(in_gram.iter().map(|(r, c, v)| (r, c, (1.0 - alpha) * v))),
    )
    // exact symmetry regardless of floating-point spgemm order
    .symmetrized();
    let (a, inv_sqrt_deg) = if normalized {
        let mut deg = vec![0.0; g.n()];
        for (r, _, v) in a.iter() {
            deg[r] += v;
        }
        if let Some(u) = deg.iter().position(|&d| d <= 0.0) {
            return Err(Error::ZeroDegree { vertex: u });
        }
        let s: Vec<f64> = deg.iter().map(|d| 1.0 / d.sqrt()).collect();
        (a.scale_both(&s, &s), Some(s))
    } else {
        (a, None)
    };
    let setup_ms = ms(t);

    let t = Instant::now();
    let opts = IterOpts {
        seed,
        ..IterOpts::default()
    };
    let (_, mut vecs) = symmetric_eigs(&a, k, &opts)?;
    if let Some(s) = inv_sqrt_deg {
        // map eigenvectors of the symmetric similarity back to D^{-1} A
        for v in &mut vecs {
            for (x, &si) in v.iter_mut().zip(&s) {
                *x *= si;
            }
        }
    }
    let points = Embedding::from_columns(&vecs);
    let embed_ms = ms(t);
    finish(&points, k, seed, setup_ms, embed_ms, Flags::default())
}

/// SVD-M: d-truncated SVD of the adjacency matrix itself, k-means on the
/// n-by-2d concatenation of the sqrt-scaled left and right factors.
pub fn svd_m(g: &Digraph, k: usize, d: usize, seed: u64) -> Result<TimedPartition> {
    if d < 1 || d >= g.n() {
        return Err(Error::InvalidArgument(format!(
            "d = {d} outside 1..{} for svd_m",
            g.n()
        )));
    }
    let t = Instant::now();
    let m = g.adjacency().clone();
    let setup_ms = ms(t);

    let t = Instant::now();
    let opts = IterOpts {
        seed,
        ..IterOpts::default()
    };
    let svd = truncated_svd(&m, d, &opts)?;
    let mut cols = Vec::with_capacity(2 * d);
    for j in 0..d {
        let s = svd.sigma[j].max(0.0).sqrt();
        cols.push(svd.u[j].iter().map(|&x| x * s).collect());
    }
    for j in 0..d {
        let s = svd.sigma[j].max(0.0).sqrt();
        cols.push(svd.v[j].iter().map(|&x| x * s).collect());
    }
    let points = Embedding::from_columns(&cols);
    let embed_ms = ms(t);
    finish(&points, k, seed, setup_ms, embed_ms, Flags::default())
}

/// True when every vertex reaches every other along directed edges.
pub fn strongly_connected(g: &Digraph) -> bool {
    let n = g.n();
    if n == 0 {
        return false;
    }
    let reach = |forward: bool| -> usize {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            let neighbors: Vec<usize> = if forward {
                g.adjacency().row(u).map(|(v, _)| v).collect()
            } else {
                g.edges()
                    .iter()
                    .filter(|&&(_, v, _)| v == u)
                    .map(|&(s, _, _)| s)
                    .collect()
            };
            for v in neighbors {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count
    };
    reach(true) == n && reach(false) == n
}

/// Eigenvalues of a real quasi-triangular matrix with their block position
/// and width.
fn quasi_triangular_eigs(t: &DMatrix<f64>) -> Vec<(Complex<f64>, usize, usize)> {
    let n = t.nrows();
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)].abs() > 1e-14 {
            let mid = 0.5 * (t[(i, i)] + t[(i + 1, i + 1)]);
            let disc = 0.25 * (t[(i, i)] - t[(i + 1, i + 1)]).powi(2) + t[(i, i + 1)] * t[(i + 1, i)];
            if disc < 0.0 {
                let s = (-disc).sqrt();
                out.push((Complex::new(mid, s), i, 2));
                out.push((Complex::new(mid, -s), i, 2));
            } else {
                let s = disc.sqrt();
                out.push((Complex::new(mid + s, 0.0), i, 2));
                out.push((Complex::new(mid - s, 0.0), i, 2));
            }
            i += 2;
        } else {
            out.push((Complex::new(t[(i, i)], 0.0), i, 1));
            i += 1;
        }
    }
    out
}

/// Right eigenvector of the quasi-triangular T for the eigenvalue anchored
/// at block (start, width), by complex back-substitution.
fn quasi_triangular_eigvec(
    t: &DMatrix<f64>,
    lambda: Complex<f64>,
    start: usize,
    width: usize,
) -> Result<Vec<Complex<f64>>> {
    let n = t.nrows();
    let mut y = vec![Complex::new(0.0, 0.0); n];
    if width == 2 {
        // in-block components of (B - lambda I) y = 0
        y[start] = Complex::new(t[(start, start + 1)], 0.0);
        y[start + 1] = lambda - Complex::new(t[(start, start)], 0.0);
    } else {
        y[start] = Complex::new(1.0, 0.0);
    }
    let top = start + width;
    let mut i = start;
    while i > 0 {
        // decide whether rows (i-2, i-1) form a 2x2 block
        let two = i >= 2 && t[(i - 1, i - 2)].abs() > 1e-14;
        if two {
            let (r0, r1) = (i - 2, i - 1);
            let mut rhs0 = Complex::new(0.0, 0.0);
            let mut rhs1 = Complex::new(0.0, 0.0);
            for j in i..top {
                rhs0 += t[(r0, j)] * y[j];
                rhs1 += t[(r1, j)] * y[j];
            }
            let a = Complex::new(t[(r0, r0)], 0.0) - lambda;
            let b = Complex::new(t[(r0, r1)], 0.0);
            let c = Complex::new(t[(r1, r0)], 0.0);
            let d = Complex::new(t[(r1, r1)], 0.0) - lambda;
            let det = a * d - b * c;
            if det.norm() < 1e-12 {
                return Err(Error::InvalidArgument(
                    "repeated eigenvalue blocks the back-substitution".to_string(),
                ));
            }
            y[r0] = (-rhs0 * d + rhs1 * b) / det;
            y[r1] = (rhs0 * c - rhs1 * a) / det;
            i -= 2;
        } else {
            let r = i - 1;
            let mut rhs = Complex::new(0.0, 0.0);
            for j in i..top {
                rhs += t[(r, j)] * y[j];
            }
            let denom = Complex::new(t[(r, r)], 0.0) - lambda;
            if denom.norm() < 1e-12 {
                return Err(Error::InvalidArgument(
                    "repeated eigenvalue blocks the back-substitution".to_string(),
                ));
            }
            y[r] = -rhs / denom;
            i -= 1;
        }
    }
    Ok(y)
}

/// BCS: dense real Schur factorization of the (possibly teleport-
/// regularized) random-walk matrix P = D_out^{-1} M; k-means on the real
/// and imaginary parts of floor(k/2) eigenvectors whose eigenvalues have
/// the largest modulus among those with Re < 1 and Im >= 0.
pub fn bcs(g: &Digraph, k: usize, seed: u64, tau: Option<f64>) -> Result<TimedPartition> {
    let n = g.n();
    if n > DENSE_GUARD {
        return Err(Error::DenseGuard {
            n,
            guard: DENSE_GUARD,
        });
    }
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "k = {k} must be at least 2"
        )));
    }
    let t0 = Instant::now();
    let strong = strongly_connected(g);
    let tau = tau.unwrap_or(if strong { 0.0 } else { 0.01 });
    if !(0.0..1.0).contains(&tau) {
        return Err(Error::InvalidArgument(format!(
            "tau = {tau} outside [0, 1)"
        )));
    }
    let mut flags = Flags::default();
    let out_deg = g.out_degrees();
    if tau == 0.0 && out_deg.iter().any(|&d| d <= 0.0) {
        return Err(Error::ZeroDegree {
            vertex: out_deg.iter().position(|&d| d <= 0.0).unwrap(),
        });
    }
    let mut p = DMatrix::<f64>::zeros(n, n);
    for u in 0..n {
        if out_deg[u] > 0.0 {
            for (v, w) in g.adjacency().row(u) {
                p[(u, v)] = w / out_deg[u];
            }
        } else {
            // sink row: uniform jump
            for v in 0..n {
                p[(u, v)] = 1.0 / n as f64;
            }
        }
    }
    if tau > 0.0 {
        flags.regularized = true;
        let jump = tau / n as f64;
        for u in 0..n {
            for v in 0..n {
                p[(u, v)] = (1.0 - tau) * p[(u, v)] + jump;
            }
        }
    }
    let setup_ms = ms(t0);

    let t0 = Instant::now();
    let (q, t) = real_schur_dense(&p)?;
    let mut candidates: Vec<(Complex<f64>, usize, usize)> = quasi_triangular_eigs(&t)
        .into_iter()
        .filter(|(lam, _, _)| lam.re < 1.0 - 1e-8 && lam.im >= 0.0)
        .collect();
    candidates.sort_by(|a, b| b.0.norm().total_cmp(&a.0.norm()));
    let l = k / 2;
    if candidates.len() < l {
        return Err(Error::InvalidArgument(format!(
            "only {} qualifying eigenvalues for l = {l}",
            candidates.len()
        )));
    }
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(2 * l);
    for &(lam, start, width) in &candidates[..l] {
        let y = quasi_triangular_eigvec(&t, lam, start, width)?;
        let y_re = DVector::from_iterator(n, y.iter().map(|c| c.re));
        let y_im = DVector::from_iterator(n, y.iter().map(|c| c.im));
        let x_re = &q * y_re;
        let x_im = &q * y_im;
        let nrm = (x_re.norm_squared() + x_im.norm_squared()).sqrt();
        cols.push(x_re.iter().map(|&v| v / nrm).collect());
        cols.push(x_im.iter().map(|&v| v / nrm).collect());
    }
    let points = Embedding::from_columns(&cols);
    let embed_ms = ms(t0);
    finish(&points, k, seed, setup_ms, embed_ms, flags)
}

/// Optimum of the real relaxation of two-block trade-flow maximization:
/// the top singular value of the net-flow matrix with its singular vectors.
pub fn trade_flow_relaxation(g: &Digraph) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let km = build_skew(g);
    if km.matrix().nnz() == 0 {
        return Err(Error::InvalidArgument(
            "net-flow matrix is zero".to_string(),
        ));
    }
    let svd = truncated_svd(km.matrix(), 1, &IterOpts::default())?;
    Ok((svd.sigma[0], svd.u[0].clone(), svd.v[0].clone()))
}
