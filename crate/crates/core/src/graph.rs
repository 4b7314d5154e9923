//! Digraph representation, the skew-symmetric net-flow matrix K = M - M^T,
//! connectivity checks, normalization, and edge-list I/O.

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;
use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

/// Edge-list file format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeListFormat {
    /// One edge per line: `u<TAB>v[<TAB>w]`, `#` comments, 0-based indices.
    Tsv,
    /// Pajek .net subset: `*Vertices N` header, `*Arcs` section, 1-based.
    Pajek,
}

/// A weighted directed graph with dense 0-based vertex indices.
///
/// Duplicates are summed, self-loops dropped, and zero-weight edges removed
/// at construction, so every stored edge has positive weight and each ordered
/// pair appears at most once.
#[derive(Debug, Clone)]
pub struct Digraph {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
    adjacency: CsrMatrix,
}

impl Digraph {
    /// Build from raw (u, v, w) triples applying the construction rules:
    /// duplicates summed, self-loops dropped, zero-weight edges removed.
    /// Negative weights are rejected.
    pub fn from_edges(
        n: usize,
        raw: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Digraph> {
        let mut acc: HashMap<(usize, usize), f64> = HashMap::new();
        for (u, v, w) in raw {
            if u >= n {
                return Err(Error::IndexOutOfRange { index: u, n });
            }
            if v >= n {
                return Err(Error::IndexOutOfRange { index: v, n });
            }
            if w < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "negative weight {w} on edge ({u},{v})"
                )));
            }
            if u == v {
                continue;
            }
            *acc.entry((u, v)).or_insert(0.0) += w;
        }
        let mut edges: Vec<(usize, usize, f64)> = acc
            .into_iter()
            .filter(|&(_, w)| w > 0.0)
            .map(|((u, v), w)| (u, v, w))
            .collect();
        edges.sort_unstable_by_key(|&(u, v, _)| (u, v));
        let adjacency =
            CsrMatrix::from_triplets(n, n, edges.iter().map(|&(u, v, w)| (u, v, w)));
        Ok(Digraph { n, edges, adjacency })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// The adjacency matrix M in sparse form.
    pub fn adjacency(&self) -> &CsrMatrix {
        &self.adjacency
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|&(_, _, w)| w).sum()
    }

    /// Weighted out-degree per vertex.
    pub fn out_degrees(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for &(u, _, w) in &self.edges {
            d[u] += w;
        }
        d
    }

    /// Weighted in-degree per vertex.
    pub fn in_degrees(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for &(_, v, w) in &self.edges {
            d[v] += w;
        }
        d
    }

    /// Sum of in and out degrees over a vertex set, computed on the original
    /// M before reciprocal reduction.
    pub fn volume(&self, s: &[usize]) -> f64 {
        let mut member = vec![false; self.n];
        for &u in s {
            member[u] = true;
        }
        let mut vol = 0.0;
        for &(u, v, w) in &self.edges {
            if member[u] {
                vol += w;
            }
            if member[v] {
                vol += w;
            }
        }
        vol
    }

    /// The induced subgraph on `keep`, with vertices remapped to 0..keep.len()
    /// in the given order. Returns the subgraph and old-index list.
    pub fn induced_subgraph(&self, keep: &[usize]) -> Result<Digraph> {
        let mut remap = vec![usize::MAX; self.n];
        for (new, &old) in keep.iter().enumerate() {
            remap[old] = new;
        }
        let sub = self.edges.iter().filter_map(|&(u, v, w)| {
            let (nu, nv) = (remap[u], remap[v]);
            (nu != usize::MAX && nv != usize::MAX).then_some((nu, nv, w))
        });
        Digraph::from_edges(keep.len(), sub)
    }

    /// H_uv = i * K_uv, returned as a (real, imag) pair. Reference utility
    /// only; no complex matrix is ever materialized.
    pub fn hermitian_entry(&self, u: usize, v: usize) -> Result<(f64, f64)> {
        if u >= self.n {
            return Err(Error::IndexOutOfRange { index: u, n: self.n });
        }
        if v >= self.n {
            return Err(Error::IndexOutOfRange { index: v, n: self.n });
        }
        let k_uv = self.adjacency.get(u, v) - self.adjacency.get(v, u);
        Ok((0.0, k_uv))
    }
}

/// Normalization applied to a skew matrix.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum NormTag {
    #[default]
    None,
    /// D^{-1} K; no longer skew-symmetric (and not normal).
    Rw,
    /// D^{-1/2} K D^{-1/2}; still skew-symmetric.
    Sym,
}

impl std::fmt::Display for NormTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NormTag::None => write!(f, "none"),
            NormTag::Rw => write!(f, "rw"),
            NormTag::Sym => write!(f, "sym"),
        }
    }
}

/// The net-flow matrix K = M - M^T in sparse form, optionally normalized.
#[derive(Debug, Clone)]
pub struct SkewMatrix {
    mat: CsrMatrix,
    tag: NormTag,
}

impl SkewMatrix {
    pub fn n(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.mat
    }

    pub fn tag(&self) -> NormTag {
        self.tag
    }

    /// r = K * 1 (row sums).
    pub fn row_sums(&self) -> Vec<f64> {
        let ones = vec![1.0; self.n()];
        let mut r = vec![0.0; self.n()];
        self.mat.matvec(&ones, &mut r);
        r
    }
}

/// Absolute-row-sum degrees d_u = sum_v |K_uv|, defined on the net flows.
#[derive(Debug, Clone)]
pub struct DegreeVector(pub Vec<f64>);

impl DegreeVector {
    pub fn from_skew(k: &SkewMatrix) -> DegreeVector {
        let mut d = vec![0.0; k.n()];
        for (r, _, v) in k.matrix().iter() {
            d[r] += v.abs();
        }
        DegreeVector(d)
    }
}

/// Construct K = M - M^T. Reciprocal edge pairs collapse to their net weight;
/// pairs with equal reciprocal weights vanish.
pub fn build_skew(g: &Digraph) -> SkewMatrix {
    let triplets = g
        .edges()
        .iter()
        .flat_map(|&(u, v, w)| [(u, v, w), (v, u, -w)]);
    SkewMatrix {
        mat: CsrMatrix::from_triplets(g.n(), g.n(), triplets),
        tag: NormTag::None,
    }
}

/// Scale K per the requested normalization. Fails on any zero-degree vertex.
pub fn normalize_skew(k: &SkewMatrix, mode: NormTag) -> Result<SkewMatrix> {
    if mode == NormTag::None {
        return Ok(k.clone());
    }
    let DegreeVector(d) = DegreeVector::from_skew(k);
    if let Some(vertex) = d.iter().position(|&x| x == 0.0) {
        return Err(Error::ZeroDegree { vertex });
    }
    let mat = match mode {
        NormTag::Rw => {
            let inv: Vec<f64> = d.iter().map(|&x| 1.0 / x).collect();
            k.matrix().scale_rows(&inv)
        }
        NormTag::Sym => {
            let inv_sqrt: Vec<f64> = d.iter().map(|&x| 1.0 / x.sqrt()).collect();
            k.matrix().scale_both(&inv_sqrt, &inv_sqrt)
        }
        NormTag::None => unreachable!(),
    };
    Ok(SkewMatrix { mat, tag: mode })
}

/// Result of a weak-connectivity check over the undirected support of K.
#[derive(Debug, Clone)]
pub struct Connectivity {
    /// Components as vertex sets, sorted by size descending.
    pub components: Vec<Vec<usize>>,
}

impl Connectivity {
    pub fn is_connected(&self) -> bool {
        self.components.len() <= 1
    }

    pub fn giant(&self) -> &[usize] {
        &self.components[0]
    }
}

/// Union-find over the undirected support of K.
pub fn weak_connectivity(k: &SkewMatrix) -> Connectivity {
    let n = k.n();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (u, v, _) in k.matrix().iter() {
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        if ru != rv {
            parent[ru] = rv;
        }
    }
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for x in 0..n {
        let r = find(&mut parent, x);
        groups.entry(r).or_default().push(x);
    }
    let mut components: Vec<Vec<usize>> = groups.into_values().collect();
    for c in &mut components {
        c.sort_unstable();
    }
    components.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    Connectivity { components }
}

/// A loaded graph plus the mapping from original file labels to dense indices.
#[derive(Debug, Clone)]
pub struct LoadedGraph {
    pub graph: Digraph,
    /// labels[i] = original label of vertex i.
    pub labels: Vec<String>,
}

impl LoadedGraph {
    /// Write the label map as TSV: `original_label<TAB>index`.
    pub fn write_label_map(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        for (i, label) in self.labels.iter().enumerate() {
            writeln!(f, "{label}\t{i}")?;
        }
        Ok(())
    }
}

/// Load an edge list, remapping arbitrary labels to dense 0-based indices in
/// first-appearance order. `unweighted` forces all weights to 1.
pub fn load_edge_list(path: &Path, format: EdgeListFormat, unweighted: bool) -> Result<LoadedGraph> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let path_str = path.display().to_string();
    match format {
        EdgeListFormat::Tsv => load_tsv(reader, &path_str, unweighted),
        EdgeListFormat::Pajek => load_pajek(reader, &path_str, unweighted),
    }
}

fn parse_weight(tok: &str, path: &str, line_no: usize) -> Result<f64> {
    let w: f64 = tok.parse().map_err(|_| Error::Parse {
        path: path.to_string(),
        line: line_no,
        msg: format!("invalid weight '{tok}'"),
    })?;
    if w < 0.0 {
        return Err(Error::Parse {
            path: path.to_string(),
            line: line_no,
            msg: format!("negative weight {w}"),
        });
    }
    Ok(w)
}

fn load_tsv(reader: impl BufRead, path: &str, unweighted: bool) -> Result<LoadedGraph> {
    let mut labels: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let intern = |s: &str, labels: &mut Vec<String>, index: &mut HashMap<String, usize>| {
        *index.entry(s.to_string()).or_insert_with(|| {
            labels.push(s.to_string());
            labels.len() - 1
        })
    };
    let mut raw = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut toks = line.split_whitespace();
        let (u, v) = match (toks.next(), toks.next()) {
            (Some(u), Some(v)) => (u, v),
            _ => {
                return Err(Error::Parse {
                    path: path.to_string(),
                    line: line_no,
                    msg: "expected at least two columns".to_string(),
                })
            }
        };
        let w = match toks.next() {
            Some(tok) if !unweighted => parse_weight(tok, path, line_no)?,
            Some(tok) => {
                parse_weight(tok, path, line_no)?;
                1.0
            }
            None => 1.0,
        };
        let u = intern(u, &mut labels, &mut index);
        let v = intern(v, &mut labels, &mut index);
        raw.push((u, v, w));
    }
    let graph = Digraph::from_edges(labels.len(), raw)?;
    Ok(LoadedGraph { graph, labels })
}

fn load_pajek(reader: impl BufRead, path: &str, unweighted: bool) -> Result<LoadedGraph> {
    #[derive(PartialEq)]
    enum Section {
        Preamble,
        Vertices,
        Arcs,
        Other,
    }
    let mut n = 0usize;
    let mut labels: Vec<String> = Vec::new();
    let mut raw = Vec::new();
    let mut section = Section::Preamble;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let lower = line.to_ascii_lowercase();
        if lower.starts_with("*vertices") {
            let tok = line.split_whitespace().nth(1).ok_or_else(|| Error::Parse {
                path: path.to_string(),
                line: line_no,
                msg: "*Vertices without a count".to_string(),
            })?;
            n = tok.parse().map_err(|_| Error::Parse {
                path: path.to_string(),
                line: line_no,
                msg: format!("invalid vertex count '{tok}'"),
            })?;
            labels = (1..=n).map(|v| v.to_string()).collect();
            section = Section::Vertices;
            continue;
        }
        if lower.starts_with("*arcs") {
            section = Section::Arcs;
            continue;
        }
        if lower.starts_with('*') {
            // *Edges and other sections are outside the supported subset.
            section = Section::Other;
            continue;
        }
        match section {
            Section::Vertices => {
                let mut toks = line.split_whitespace();
                let id: usize = toks
                    .next()
                    .and_then(|t| t.parse().ok())
                    .filter(|&id: &usize| id >= 1 && id <= n)
                    .ok_or_else(|| Error::Parse {
                        path: path.to_string(),
                        line: line_no,
                        msg: "invalid vertex id".to_string(),
                    })?;
                let rest = line[line.find(char::is_whitespace).unwrap_or(line.len())..].trim();
                if !rest.is_empty() {
                    labels[id - 1] = rest.trim_matches('"').to_string();
                }
            }
            Section::Arcs => {
                let mut toks = line.split_whitespace();
                let parse_id = |tok: Option<&str>| -> Result<usize> {
                    let tok = tok.ok_or_else(|| Error::Parse {
                        path: path.to_string(),
                        line: line_no,
                        msg: "expected 'u v [w]'".to_string(),
                    })?;
                    let id: usize = tok.parse().map_err(|_| Error::Parse {
                        path: path.to_string(),
                        line: line_no,
                        msg: format!("invalid vertex id '{tok}'"),
                    })?;
                    if id < 1 || id > n {
                        return Err(Error::Parse {
                            path: path.to_string(),
                            line: line_no,
                            msg: format!("vertex id {id} outside 1..={n}"),
                        });
                    }
                    Ok(id)
                };
                let u = parse_id(toks.next())?;
                let v = parse_id(toks.next())?;
                let w = match toks.next() {
                    Some(tok) if !unweighted => parse_weight(tok, path, line_no)?,
                    Some(tok) => {
                        parse_weight(tok, path, line_no)?;
                        1.0
                    }
                    None => 1.0,
                };
                raw.push((u - 1, v - 1, w));
            }
            _ => {
                return Err(Error::Parse {
                    path: path.to_string(),
                    line: line_no,
                    msg: "data line outside *Vertices/*Arcs section".to_string(),
                })
            }
        }
    }
    let graph = Digraph::from_edges(n, raw)?;
    Ok(LoadedGraph { graph, labels })
}

/// Write a graph as a TSV edge list.
pub fn write_edge_list(g: &Digraph, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for &(u, v, w) in g.edges() {
        if w == 1.0 {
            writeln!(f, "{u}\t{v}")?;
        } else {
            writeln!(f, "{u}\t{v}\t{w}")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn cycle3() -> Digraph {
        Digraph::from_edges(3, vec![(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]).unwrap()
    }

    #[test]
    fn tsv_three_cycle() {
        let g = load_tsv(Cursor::new("0\t1\n1\t2\n2\t0\n"), "mem", false).unwrap();
        assert_eq!(g.graph.n(), 3);
        assert_eq!(g.graph.edge_count(), 3);
        assert!(g.graph.edges().iter().all(|&(_, _, w)| w == 1.0));
    }

    #[test]
    fn tsv_duplicates_sum() {
        let g = load_tsv(Cursor::new("0\t1\t2\n0\t1\t3\n"), "mem", false).unwrap();
        assert_eq!(g.graph.edge_count(), 1);
        assert_eq!(g.graph.edges()[0].2, 5.0);
    }

    #[test]
    fn tsv_negative_weight_is_parse_error() {
        let err = load_tsv(Cursor::new("0\t1\t-2\n"), "mem", false).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn tsv_comments_and_unweighted() {
        let g = load_tsv(Cursor::new("# header\na\tb\t7\n"), "mem", true).unwrap();
        assert_eq!(g.graph.edges()[0].2, 1.0);
        assert_eq!(g.labels, vec!["a", "b"]);
    }

    #[test]
    fn pajek_basic() {
        let text = "*Vertices 3\n1 \"x\"\n2 \"y\"\n3 \"z\"\n*Arcs\n1 2 2.0\n2 3\n";
        let g = load_pajek(Cursor::new(text), "mem", false).unwrap();
        assert_eq!(g.graph.n(), 3);
        assert_eq!(g.graph.edge_count(), 2);
        assert_eq!(g.graph.edges()[0], (0, 1, 2.0));
        assert_eq!(g.labels, vec!["x", "y", "z"]);
    }

    #[test]
    fn build_skew_single_edge() {
        let g = Digraph::from_edges(2, vec![(0, 1, 2.0)]).unwrap();
        let k = build_skew(&g);
        assert_eq!(k.matrix().get(0, 1), 2.0);
        assert_eq!(k.matrix().get(1, 0), -2.0);
    }

    #[test]
    fn build_skew_reciprocal_nets_out() {
        let g = Digraph::from_edges(2, vec![(0, 1, 3.0), (1, 0, 1.0)]).unwrap();
        let k = build_skew(&g);
        assert_eq!(k.matrix().get(0, 1), 2.0);
        assert_eq!(k.matrix().get(1, 0), -2.0);
        // equal reciprocal weights vanish entirely
        let g2 = Digraph::from_edges(2, vec![(0, 1, 3.0), (1, 0, 3.0)]).unwrap();
        assert_eq!(build_skew(&g2).matrix().nnz(), 0);
    }

    #[test]
    fn build_skew_cycle_rows_sum_zero() {
        let k = build_skew(&cycle3());
        assert_eq!(k.matrix().nnz(), 6);
        for r in k.row_sums() {
            assert_eq!(r, 0.0);
        }
        // exact skew symmetry
        for (u, v, w) in k.matrix().iter() {
            assert_eq!(k.matrix().get(v, u), -w);
        }
    }

    #[test]
    fn hermitian_entry_is_i_times_k() {
        let g = Digraph::from_edges(3, vec![(0, 1, 2.0)]).unwrap();
        assert_eq!(g.hermitian_entry(0, 1).unwrap(), (0.0, 2.0));
        assert_eq!(g.hermitian_entry(1, 0).unwrap(), (0.0, -2.0));
        assert_eq!(g.hermitian_entry(0, 2).unwrap(), (0.0, 0.0));
        assert!(g.hermitian_entry(0, 3).is_err());
    }

    #[test]
    fn weak_connectivity_components() {
        let k = build_skew(&cycle3());
        assert!(weak_connectivity(&k).is_connected());

        let two = Digraph::from_edges(
            6,
            vec![
                (0, 1, 1.0),
                (1, 2, 1.0),
                (2, 0, 1.0),
                (3, 4, 1.0),
                (4, 5, 1.0),
                (5, 3, 1.0),
            ],
        )
        .unwrap();
        let conn = weak_connectivity(&build_skew(&two));
        assert_eq!(conn.components.len(), 2);
        assert_eq!(conn.components[0].len(), 3);

        let iso = Digraph::from_edges(3, vec![(0, 1, 1.0)]).unwrap();
        assert_eq!(weak_connectivity(&build_skew(&iso)).components.len(), 2);
    }

    #[test]
    fn normalize_single_edge() {
        let g = Digraph::from_edges(2, vec![(0, 1, 2.0)]).unwrap();
        let k = build_skew(&g);
        let rw = normalize_skew(&k, NormTag::Rw).unwrap();
        assert!((rw.matrix().get(0, 1) - 1.0).abs() < 1e-12);
        assert!((rw.matrix().get(1, 0) + 1.0).abs() < 1e-12);
        let sym = normalize_skew(&k, NormTag::Sym).unwrap();
        assert!((sym.matrix().get(0, 1) - 1.0).abs() < 1e-12);
        assert!((sym.matrix().get(1, 0) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalize_cycle_sym_stays_skew() {
        let k = build_skew(&cycle3());
        let sym = normalize_skew(&k, NormTag::Sym).unwrap();
        for (u, v, w) in sym.matrix().iter() {
            assert!((w.abs() - 0.5).abs() < 1e-15);
            assert_eq!(sym.matrix().get(v, u), -w);
        }
    }

    #[test]
    fn normalize_zero_degree_errors_with_vertex() {
        let g = Digraph::from_edges(3, vec![(0, 1, 1.0)]).unwrap();
        let err = normalize_skew(&build_skew(&g), NormTag::Rw).unwrap_err();
        assert!(matches!(err, Error::ZeroDegree { vertex: 2 }));
    }

    #[test]
    fn volume_examples() {
        let g = cycle3();
        assert_eq!(g.volume(&[0, 1, 2]), 6.0);
        let e = Digraph::from_edges(2, vec![(0, 1, 2.0)]).unwrap();
        assert_eq!(e.volume(&[0]), 2.0);
        assert_eq!(e.volume(&[0, 1]), 4.0);
        // volume(V) = 2 * total weight
        assert_eq!(g.volume(&[0, 1, 2]), 2.0 * g.total_weight());
    }
}
