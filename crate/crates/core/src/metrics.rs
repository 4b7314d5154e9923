//! Cut-imbalance and trade-flow metrics, top-c aggregations, ARI, and the
//! exact k=2 trade-flow maximizer.

use crate::error::{Error, Result};
use crate::graph::{build_skew, Digraph};
use crate::kmeans::Partition;
use std::collections::HashMap;

/// Score of one cluster pair in a top-c aggregation.
#[derive(Debug, Clone, PartialEq)]
pub struct CutScore {
    pub pair: (usize, usize),
    pub value: f64,
}

fn check_disjoint(x: &[usize], y: &[usize]) -> Result<()> {
    let set: std::collections::HashSet<usize> = x.iter().copied().collect();
    if y.iter().any(|v| set.contains(v)) {
        return Err(Error::InvalidArgument(
            "vertex sets overlap".to_string(),
        ));
    }
    Ok(())
}

/// w(X,Y): total weight of edges oriented from x into y.
pub fn cut_weight(g: &Digraph, x: &[usize], y: &[usize]) -> Result<f64> {
    check_disjoint(x, y)?;
    let mut in_x = vec![false; g.n()];
    let mut in_y = vec![false; g.n()];
    for &u in x {
        in_x[u] = true;
    }
    for &v in y {
        in_y[v] = true;
    }
    Ok(g.edges()
        .iter()
        .filter(|&&(u, v, _)| in_x[u] && in_y[v])
        .map(|&(_, _, w)| w)
        .sum())
}

/// Cut Imbalance: w(X,Y) / (w(X,Y) + w(Y,X)). Errors when no edges cross
/// the cut.
pub fn ci(g: &Digraph, x: &[usize], y: &[usize]) -> Result<f64> {
    let fwd = cut_weight(g, x, y)?;
    let back = cut_weight(g, y, x)?;
    if fwd + back == 0.0 {
        return Err(Error::InvalidArgument(
            "no edges across the cut; CI undefined".to_string(),
        ));
    }
    Ok(fwd / (fwd + back))
}

/// Trade Flow: |w(X,Y) - w(Y,X)|. Symmetric in its arguments.
pub fn tf(g: &Digraph, x: &[usize], y: &[usize]) -> Result<f64> {
    let fwd = cut_weight(g, x, y)?;
    let back = cut_weight(g, y, x)?;
    Ok((fwd - back).abs())
}

/// CI^vol(X,Y) = |CI(X,Y) - 0.5| * min(vol(X), vol(Y)). Pairs with no cross
/// edges score 0.
pub fn ci_vol(g: &Digraph, x: &[usize], y: &[usize]) -> Result<f64> {
    let fwd = cut_weight(g, x, y)?;
    let back = cut_weight(g, y, x)?;
    if fwd + back == 0.0 {
        return Ok(0.0);
    }
    let imb = (fwd / (fwd + back) - 0.5).abs();
    Ok(imb * g.volume(x).min(g.volume(y)))
}

/// Weighting used by [`top_ci`]: cluster volume or cardinality.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CiMode {
    Vol,
    Sz,
}

/// Pairwise forward/backward cut weights for all unordered cluster pairs.
pub fn pair_cut_weights(g: &Digraph, partition: &Partition) -> Vec<Vec<(f64, f64)>> {
    let k = partition.k();
    // w[a][b] = total weight from cluster a to cluster b
    let mut w = vec![vec![0.0; k]; k];
    let assignment = partition.assignment();
    for &(u, v, weight) in g.edges() {
        w[assignment[u]][assignment[v]] += weight;
    }
    let mut out = vec![vec![(0.0, 0.0); k]; k];
    for a in 0..k {
        for b in 0..k {
            out[a][b] = (w[a][b], w[b][a]);
        }
    }
    out
}

fn top_c(mut scores: Vec<CutScore>, c: usize) -> (f64, Vec<CutScore>) {
    scores.sort_by(|a, b| b.value.total_cmp(&a.value).then(a.pair.cmp(&b.pair)));
    let total = scores.iter().take(c).map(|s| s.value).sum();
    (total, scores)
}

fn check_c(c: usize, k: usize) -> Result<()> {
    let max = k * (k - 1) / 2;
    if c < 1 || c > max {
        return Err(Error::InvalidArgument(format!(
            "c = {c} outside 1..={max} for k = {k}"
        )));
    }
    Ok(())
}

/// Sum of the c largest pairwise TF scores plus the full ranked list.
/// Ties break by lexicographic pair index.
pub fn top_tf(g: &Digraph, partition: &Partition, c: usize) -> Result<(f64, Vec<CutScore>)> {
    check_c(c, partition.k())?;
    let w = pair_cut_weights(g, partition);
    let mut scores = Vec::new();
    for a in 0..partition.k() {
        for b in (a + 1)..partition.k() {
            let (fwd, back) = w[a][b];
            scores.push(CutScore {
                pair: (a, b),
                value: (fwd - back).abs(),
            });
        }
    }
    Ok(top_c(scores, c))
}

/// Sum of the c largest volume- or size-weighted CI scores over unordered
/// cluster pairs. Pairs with no cross edges score 0.
pub fn top_ci(
    g: &Digraph,
    partition: &Partition,
    c: usize,
    mode: CiMode,
) -> Result<(f64, Vec<CutScore>)> {
    check_c(c, partition.k())?;
    let w = pair_cut_weights(g, partition);
    let clusters = partition.clusters();
    let weight: Vec<f64> = match mode {
        CiMode::Vol => clusters.iter().map(|cl| g.volume(cl)).collect(),
        CiMode::Sz => clusters.iter().map(|cl| cl.len() as f64).collect(),
    };
    let mut scores = Vec::new();
    for a in 0..partition.k() {
        for b in (a + 1)..partition.k() {
            let (fwd, back) = w[a][b];
            let value = if fwd + back == 0.0 {
                0.0
            } else {
                (fwd / (fwd + back) - 0.5).abs() * weight[a].min(weight[b])
            };
            scores.push(CutScore { pair: (a, b), value });
        }
    }
    Ok(top_c(scores, c))
}

/// Exact k=2 trade-flow maximizer in linear time.
///
/// TF(X,Y) = |e_X^T K e_Y| = |sum_{u in X} r_u| with r = K*1, because the
/// X-by-X block of a skew matrix sums to zero. The maximum picks
/// X = {u : r_u > 0}; zero-sum vertices go to Y so the output is unique.
pub fn exact_tf_k2(g: &Digraph) -> (f64, Vec<usize>) {
    let k = build_skew(g);
    let r = k.row_sums();
    let mut x: Vec<usize> = (0..g.n()).filter(|&u| r[u] > 0.0).collect();
    if x.is_empty() || x.len() == g.n() {
        // degenerate: fall back to the best non-trivial partition by moving
        // the smallest-|r| vertex
        let u = (0..g.n())
            .min_by(|&a, &b| r[a].abs().total_cmp(&r[b].abs()).then(a.cmp(&b)))
            .expect("non-empty graph");
        x = vec![u];
    }
    let value: f64 = x.iter().map(|&u| r[u]).sum::<f64>().abs();
    (value, x)
}

/// Adjusted Rand Index from the contingency table.
pub fn ari(a: &Partition, b: &Partition) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "partition lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "ARI requires at least 2 elements".to_string(),
        ));
    }
    let mut contingency: HashMap<(usize, usize), u64> = HashMap::new();
    let mut row_sums: HashMap<usize, u64> = HashMap::new();
    let mut col_sums: HashMap<usize, u64> = HashMap::new();
    for (&x, &y) in a.assignment().iter().zip(b.assignment()) {
        *contingency.entry((x, y)).or_insert(0) += 1;
        *row_sums.entry(x).or_insert(0) += 1;
        *col_sums.entry(y).or_insert(0) += 1;
    }
    fn comb2(x: u64) -> f64 {
        (x as f64) * (x as f64 - 1.0) / 2.0
    }
    let sum_ij: f64 = contingency.values().map(|&v| comb2(v)).sum();
    let sum_a: f64 = row_sums.values().map(|&v| comb2(v)).sum();
    let sum_b: f64 = col_sums.values().map(|&v| comb2(v)).sum();
    let expected = sum_a * sum_b / comb2(n as u64);
    let max_index = 0.5 * (sum_a + sum_b);
    if (max_index - expected).abs() < f64::EPSILON {
        // both partitions are single-cluster (or equivalent degenerate case)
        return Ok(1.0);
    }
    Ok((sum_ij - expected) / (max_index - expected))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn cycle3() -> Digraph {
        Digraph::from_edges(3, vec![(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]).unwrap()
    }

    /// Brute-force TF maximization over all 2-partitions, used as the oracle
    /// for exact_tf_k2. Independent of the row-sum identity.
    pub(crate) fn brute_force_tf_k2(g: &Digraph) -> f64 {
        let n = g.n();
        let mut best: f64 = 0.0;
        for mask in 1..(1u32 << n) - 1 {
            let x: Vec<usize> = (0..n).filter(|&u| mask & (1 << u) != 0).collect();
            let y: Vec<usize> = (0..n).filter(|&u| mask & (1 << u) == 0).collect();
            best = best.max(tf(g, &x, &y).unwrap());
        }
        best
    }

    #[test]
    fn cut_weight_examples() {
        let g = cycle3();
        assert_eq!(cut_weight(&g, &[0], &[1]).unwrap(), 1.0);
        let e = Digraph::from_edges(2, vec![(0, 1, 2.0)]).unwrap();
        assert_eq!(cut_weight(&e, &[1], &[0]).unwrap(), 0.0);
        let bi = Digraph::from_edges(
            4,
            vec![(0, 2, 1.0), (0, 3, 1.0), (1, 2, 1.0), (1, 3, 1.0)],
        )
        .unwrap();
        assert_eq!(cut_weight(&bi, &[0, 1], &[2, 3]).unwrap(), 4.0);
        assert_eq!(cut_weight(&bi, &[2, 3], &[0, 1]).unwrap(), 0.0);
        assert!(cut_weight(&g, &[0, 1], &[1, 2]).is_err());
    }

    #[test]
    fn ci_examples() {
        let e = Digraph::from_edges(2, vec![(0, 1, 2.0)]).unwrap();
        assert_eq!(ci(&e, &[0], &[1]).unwrap(), 1.0);
        let bal = Digraph::from_edges(4, vec![(0, 2, 1.0), (3, 1, 1.0)]).unwrap();
        assert_eq!(ci(&bal, &[0, 1], &[2, 3]).unwrap(), 0.5);
        let g = Digraph::from_edges(4, vec![(0, 2, 5.0), (2, 0, 2.0)]).unwrap();
        assert_eq!(ci(&g, &[0, 1], &[2, 3]).unwrap(), 5.0 / 7.0);
        // zero denominator is an error
        let none = Digraph::from_edges(4, vec![(0, 1, 1.0)]).unwrap();
        assert!(ci(&none, &[0, 1], &[2, 3]).is_err());
    }

    #[test]
    fn tf_examples() {
        let g = Digraph::from_edges(4, vec![(0, 2, 5.0), (2, 0, 2.0)]).unwrap();
        assert_eq!(tf(&g, &[0, 1], &[2, 3]).unwrap(), 3.0);
        assert_eq!(tf(&g, &[2, 3], &[0, 1]).unwrap(), 3.0);
        // 3-cycle: brute force gives 0 for every 2-partition
        assert_eq!(brute_force_tf_k2(&cycle3()), 0.0);
    }

    #[test]
    fn ci_vol_examples() {
        // all-forward cut with vol(X)=4, vol(Y)=6: two forward edges from X
        // plus edges internal to Y
        let g = Digraph::from_edges(
            5,
            vec![(0, 2, 1.0), (1, 3, 1.0), (2, 3, 1.0), (3, 4, 1.0)],
        )
        .unwrap();
        let x = [0, 1];
        let y = [2, 3, 4];
        assert_eq!(g.volume(&x), 2.0);
        assert_eq!(ci_vol(&g, &x, &y).unwrap(), 0.5 * 2.0);
        // balanced cut scores 0
        let bal = Digraph::from_edges(4, vec![(0, 2, 1.0), (3, 1, 1.0)]).unwrap();
        assert_eq!(ci_vol(&bal, &[0, 1], &[2, 3]).unwrap(), 0.0);
    }

    #[test]
    fn top_tf_k2_equals_tf() {
        let g = Digraph::from_edges(4, vec![(0, 2, 5.0), (2, 1, 1.0), (1, 3, 2.0)]).unwrap();
        let p = Partition::new(vec![0, 0, 1, 1], 2).unwrap();
        let (total, scores) = top_tf(&g, &p, 1).unwrap();
        assert_eq!(total, tf(&g, &[0, 1], &[2, 3]).unwrap());
        assert_eq!(scores.len(), 1);
    }

    #[test]
    fn top_tf_all_pairs_is_total_sum() {
        let g = Digraph::from_edges(
            6,
            vec![(0, 2, 1.0), (1, 3, 2.0), (2, 4, 1.0), (3, 5, 1.0), (5, 0, 3.0)],
        )
        .unwrap();
        let p = Partition::new(vec![0, 0, 1, 1, 2, 2], 3).unwrap();
        let (total, scores) = top_tf(&g, &p, 3).unwrap();
        let sum: f64 = scores.iter().map(|s| s.value).sum();
        assert_eq!(total, sum);
    }

    #[test]
    fn top_ci_sz_formula() {
        // CI = 1 cut between clusters of size 3 and 5 scores 0.5 * 3
        let mut edges = vec![(0, 3, 1.0)];
        edges.push((4, 5, 1.0)); // internal to second cluster
        let g = Digraph::from_edges(8, edges).unwrap();
        let p = Partition::new(vec![0, 0, 0, 1, 1, 1, 1, 1], 2).unwrap();
        let (total, _) = top_ci(&g, &p, 1, CiMode::Sz).unwrap();
        assert_eq!(total, 1.5);
    }

    #[test]
    fn exact_tf_path_and_cycle() {
        let path = Digraph::from_edges(3, vec![(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let (value, x) = exact_tf_k2(&path);
        assert_eq!(value, 1.0);
        assert_eq!(x, vec![0]);
        assert_eq!(brute_force_tf_k2(&path), 1.0);

        let (value, _) = exact_tf_k2(&cycle3());
        assert_eq!(value, 0.0);
    }

    #[test]
    fn ari_examples() {
        let a = Partition::new(vec![0, 0, 1, 1], 2).unwrap();
        assert_eq!(ari(&a, &a).unwrap(), 1.0);
        let b = Partition::new(vec![0, 1, 0, 1], 2).unwrap();
        assert_relative_eq!(ari(&a, &b).unwrap(), -0.5, epsilon = 1e-12);
        let permuted = Partition::new(vec![1, 1, 0, 0], 2).unwrap();
        assert_eq!(ari(&a, &permuted).unwrap(), 1.0);
        let short = Partition::new(vec![0, 1], 2).unwrap();
        assert!(ari(&a, &short).is_err());
    }

    #[test]
    fn rot_fig_two_disjoint_cycles() {
        // two disjoint oriented 3-cycles; the color clustering and the
        // rotated clustering have equal TopTF totals
        let g = Digraph::from_edges(
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
        let color = Partition::new(vec![0, 1, 2, 0, 1, 2], 3).unwrap();
        let rotated = Partition::new(vec![0, 1, 2, 2, 0, 1], 3).unwrap();
        let (t1, s1) = top_tf(&g, &color, 3).unwrap();
        let (t2, _) = top_tf(&g, &rotated, 3).unwrap();
        assert_eq!(t1, 6.0);
        assert_eq!(t2, 6.0);
        assert!(s1.iter().all(|s| s.value == 2.0));
    }

    fn arb_digraph(max_n: usize) -> impl Strategy<Value = Digraph> {
        (2..=max_n).prop_flat_map(|n| {
            proptest::collection::vec((0..n, 0..n, 1u8..=4), 0..(2 * n)).prop_map(move |raw| {
                Digraph::from_edges(n, raw.into_iter().map(|(u, v, w)| (u, v, w as f64)))
                    .unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn exact_tf_matches_brute_force(g in arb_digraph(9)) {
            let (value, _) = exact_tf_k2(&g);
            prop_assert!((value - brute_force_tf_k2(&g)).abs() < 1e-9);
        }

        #[test]
        fn tf_symmetric_and_ci_complementary(g in arb_digraph(8)) {
            let n = g.n();
            let x: Vec<usize> = (0..n / 2).collect();
            let y: Vec<usize> = (n / 2..n).collect();
            prop_assert_eq!(tf(&g, &x, &y).unwrap(), tf(&g, &y, &x).unwrap());
            if let (Ok(a), Ok(b)) = (ci(&g, &x, &y), ci(&g, &y, &x)) {
                prop_assert!((a + b - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn weight_scaling_behaviour(g in arb_digraph(8), lambda in 0.5f64..4.0) {
            let scaled = Digraph::from_edges(
                g.n(),
                g.edges().iter().map(|&(u, v, w)| (u, v, lambda * w)),
            ).unwrap();
            let (v1, _) = exact_tf_k2(&g);
            let (v2, x2) = exact_tf_k2(&scaled);
            prop_assert!((v2 - lambda * v1).abs() < 1e-9 * (1.0 + v1));
            // the returned set achieves the reported optimum
            if !x2.is_empty() && x2.len() < g.n() {
                let y2: Vec<usize> = (0..g.n()).filter(|u| !x2.contains(u)).collect();
                prop_assert!((tf(&scaled, &x2, &y2).unwrap() - v2).abs() < 1e-9 * (1.0 + v2));
            }
        }

        #[test]
        fn ari_symmetric_and_label_invariant(
            assign in proptest::collection::vec(0usize..3, 6..12),
        ) {
            let k = assign.iter().max().unwrap() + 1;
            let a = match Partition::new(assign.clone(), k) {
                Ok(p) => p,
                Err(_) => return Ok(()),
            };
            let flipped: Vec<usize> = assign.iter().map(|&x| k - 1 - x).collect();
            let b = Partition::new(flipped, k).unwrap();
            prop_assert!((ari(&a, &b).unwrap() - 1.0).abs() < 1e-12);
            prop_assert_eq!(ari(&a, &b).unwrap(), ari(&b, &a).unwrap());
        }
    }
}
