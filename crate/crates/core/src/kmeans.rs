//! Seeded k-means with k-means++ initialization and multi-restart. Final
//! step of every clustering pipeline.

use crate::error::{Error, Result};
use crate::linalg::Embedding;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Assignment of each vertex to one of k clusters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    assignment: Vec<usize>,
    k: usize,
}

impl Partition {
    /// Build from an assignment vector. Labels must lie in 0..k and every
    /// cluster must be non-empty.
    pub fn new(assignment: Vec<usize>, k: usize) -> Result<Partition> {
        let mut seen = vec![false; k];
        for &a in &assignment {
            if a >= k {
                return Err(Error::InvalidArgument(format!(
                    "cluster label {a} out of range 0..{k}"
                )));
            }
            seen[a] = true;
        }
        if !seen.iter().all(|&s| s) {
            return Err(Error::InvalidArgument(format!(
                "partition does not use all {k} labels"
            )));
        }
        Ok(Partition { assignment, k })
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    /// Vertex sets per cluster.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (v, &a) in self.assignment.iter().enumerate() {
            out[a].push(v);
        }
        out
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut out = vec![0usize; self.k];
        for &a in &self.assignment {
            out[a] += 1;
        }
        out
    }

    /// Relabel clusters by first occurrence so label-permuted partitions
    /// compare equal.
    pub fn canonicalized(&self) -> Partition {
        let mut map = vec![usize::MAX; self.k];
        let mut next = 0;
        let assignment = self
            .assignment
            .iter()
            .map(|&a| {
                if map[a] == usize::MAX {
                    map[a] = next;
                    next += 1;
                }
                map[a]
            })
            .collect();
        Partition {
            assignment,
            k: self.k,
        }
    }
}

/// k-means configuration. Defaults: 10 restarts, 100 Lloyd iterations,
/// tol 1e-6.
#[derive(Debug, Clone)]
pub struct KMeansOpts {
    pub restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for KMeansOpts {
    fn default() -> Self {
        KMeansOpts {
            restarts: 10,
            max_iter: 100,
            tol: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub partition: Partition,
    pub inertia: f64,
    pub iterations: usize,
    pub restarts_used: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Derive an independent PRNG stream from a base seed and a stream index.
pub fn derive_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(stream)))
}

/// Lloyd's algorithm from k-means++ seeds, best of `restarts` runs by
/// inertia. Deterministic given the seed.
pub fn kmeans(points: &Embedding, k: usize, opts: &KMeansOpts) -> Result<KMeansResult> {
    let n = points.n();
    let dim = points.dim();
    if k < 1 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if k > n {
        return Err(Error::InvalidArgument(format!(
            "k = {k} exceeds number of points {n}"
        )));
    }
    if points.coords().iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(
            "non-finite coordinates in k-means input".into(),
        ));
    }

    let mut best: Option<KMeansResult> = None;
    for restart in 0..opts.restarts.max(1) {
        let mut rng = derive_rng(opts.seed, restart as u64);
        let mut centroids = plus_plus_init(points, k, &mut rng);
        let mut assignment = vec![0usize; n];
        let mut iterations = 0;
        for iter in 0..opts.max_iter {
            iterations = iter + 1;
            // assignment step
            for u in 0..n {
                let row = points.row(u);
                let (mut arg, mut best_d) = (0usize, f64::INFINITY);
                for (c, cent) in centroids.iter().enumerate() {
                    let d = sq_dist(row, cent);
                    if d < best_d {
                        best_d = d;
                        arg = c;
                    }
                }
                assignment[u] = arg;
            }
            // update step
            let mut sums = vec![vec![0.0; dim]; k];
            let mut counts = vec![0usize; k];
            for u in 0..n {
                let a = assignment[u];
                counts[a] += 1;
                for (s, &x) in sums[a].iter_mut().zip(points.row(u)) {
                    *s += x;
                }
            }
            repair_empty_clusters(points, &mut assignment, &mut sums, &mut counts, &centroids);
            let mut movement: f64 = 0.0;
            for c in 0..k {
                for d in 0..dim {
                    let new = sums[c][d] / counts[c] as f64;
                    movement = movement.max((new - centroids[c][d]).abs());
                    centroids[c][d] = new;
                }
            }
            if movement < opts.tol {
                break;
            }
        }
        // final consistent assignment and inertia for the converged centroids
        let mut inertia = 0.0;
        for u in 0..n {
            let row = points.row(u);
            let (mut arg, mut best_d) = (0usize, f64::INFINITY);
            for (c, cent) in centroids.iter().enumerate() {
                let d = sq_dist(row, cent);
                if d < best_d {
                    best_d = d;
                    arg = c;
                }
            }
            assignment[u] = arg;
            inertia += best_d;
        }
        if Partition::new(assignment.clone(), k).is_err() {
            // a cluster emptied in the last assignment pass; repair by
            // handing the farthest points to the empty labels
            force_full(points, &mut assignment, k, &centroids);
        }
        let partition = Partition::new(assignment, k)?.canonicalized();
        if best.as_ref().map_or(true, |b| inertia < b.inertia) {
            best = Some(KMeansResult {
                partition,
                inertia,
                iterations,
                restarts_used: restart + 1,
            });
        }
    }
    let mut result = best.expect("at least one restart");
    result.restarts_used = opts.restarts.max(1);
    Ok(result)
}

fn plus_plus_init(points: &Embedding, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.n();
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    let first = rng.gen_range(0..n);
    centroids.push(points.row(first).to_vec());
    let mut dists: Vec<f64> = (0..n)
        .map(|u| sq_dist(points.row(u), &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = dists.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = n - 1;
            for (u, &d) in dists.iter().enumerate() {
                target -= d;
                if target <= 0.0 {
                    chosen = u;
                    break;
                }
            }
            chosen
        } else {
            // all remaining points coincide with a centroid
            rng.gen_range(0..n)
        };
        centroids.push(points.row(pick).to_vec());
        for u in 0..n {
            let d = sq_dist(points.row(u), centroids.last().unwrap());
            if d < dists[u] {
                dists[u] = d;
            }
        }
    }
    centroids
}

/// Move one point out of the worst cluster into each empty cluster: the
/// donor is the highest-inertia cluster, the point its farthest member.
fn repair_empty_clusters(
    points: &Embedding,
    assignment: &mut [usize],
    sums: &mut [Vec<f64>],
    counts: &mut [usize],
    centroids: &[Vec<f64>],
) {
    let k = counts.len();
    for empty in 0..k {
        if counts[empty] > 0 {
            continue;
        }
        let mut cluster_inertia = vec![0.0; k];
        for (u, &a) in assignment.iter().enumerate() {
            cluster_inertia[a] += sq_dist(points.row(u), &centroids[a]);
        }
        let donor = (0..k)
            .filter(|&c| counts[c] > 1)
            .max_by(|&a, &b| cluster_inertia[a].total_cmp(&cluster_inertia[b]));
        let Some(donor) = donor else { continue };
        let moved = assignment
            .iter()
            .enumerate()
            .filter(|&(_, &a)| a == donor)
            .max_by(|&(u, _), &(v, _)| {
                sq_dist(points.row(u), &centroids[donor])
                    .total_cmp(&sq_dist(points.row(v), &centroids[donor]))
            })
            .map(|(u, _)| u)
            .expect("donor cluster is non-empty");
        assignment[moved] = empty;
        counts[donor] -= 1;
        counts[empty] += 1;
        for d in 0..points.dim() {
            let x = points.row(moved)[d];
            sums[donor][d] -= x;
            sums[empty][d] += x;
        }
    }
}

fn force_full(points: &Embedding, assignment: &mut [usize], k: usize, centroids: &[Vec<f64>]) {
    let mut counts = vec![0usize; k];
    for &a in assignment.iter() {
        counts[a] += 1;
    }
    for empty in 0..k {
        if counts[empty] > 0 {
            continue;
        }
        let moved = (0..assignment.len())
            .filter(|&u| counts[assignment[u]] > 1)
            .max_by(|&u, &v| {
                sq_dist(points.row(u), &centroids[assignment[u]])
                    .total_cmp(&sq_dist(points.row(v), &centroids[assignment[v]]))
            });
        if let Some(u) = moved {
            counts[assignment[u]] -= 1;
            assignment[u] = empty;
            counts[empty] += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn embed(points: &[&[f64]]) -> Embedding {
        Embedding::from_rows(points.iter().map(|r| r.to_vec()).collect())
    }

    #[test]
    fn separated_pairs() {
        let points = embed(&[&[0.0], &[0.1], &[10.0], &[10.1]]);
        let result = kmeans(&points, 2, &KMeansOpts::default()).unwrap();
        assert_eq!(result.partition.assignment(), &[0, 0, 1, 1]);
    }

    #[test]
    fn k_equals_n_zero_inertia() {
        let points = embed(&[&[0.0], &[1.0], &[2.0], &[3.0]]);
        let result = kmeans(&points, 4, &KMeansOpts::default()).unwrap();
        assert_eq!(result.inertia, 0.0);
        assert_eq!(result.partition.cluster_sizes(), vec![1, 1, 1, 1]);
    }

    #[test]
    fn three_collinear_groups_match_brute_force() {
        // brute force over all 3-partitions of 9 points confirms the group
        // clustering minimizes inertia; frozen here as the expected outcome
        let coords: Vec<f64> = vec![-0.1, 0.0, 0.1, 4.9, 5.0, 5.1, 9.9, 10.0, 10.1];
        let rows: Vec<&[f64]> = coords.chunks(1).collect();
        let points = embed(&rows);
        let result = kmeans(&points, 3, &KMeansOpts::default()).unwrap();
        assert_eq!(result.partition.assignment(), &[0, 0, 0, 1, 1, 1, 2, 2, 2]);

        // independent oracle: enumerate all assignments of 9 points to 3 labels
        let mut best = f64::INFINITY;
        let mut best_assign = vec![0; 9];
        for code in 0..3usize.pow(9) {
            let mut c = code;
            let assign: Vec<usize> = (0..9)
                .map(|_| {
                    let a = c % 3;
                    c /= 3;
                    a
                })
                .collect();
            if Partition::new(assign.clone(), 3).is_err() {
                continue;
            }
            let mut inertia = 0.0;
            for lab in 0..3 {
                let members: Vec<f64> = (0..9)
                    .filter(|&u| assign[u] == lab)
                    .map(|u| coords[u])
                    .collect();
                let mean = members.iter().sum::<f64>() / members.len() as f64;
                inertia += members.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
            }
            if inertia < best {
                best = inertia;
                best_assign = assign;
            }
        }
        let canon: Partition = Partition::new(best_assign, 3).unwrap().canonicalized();
        assert_eq!(canon.assignment(), result.partition.assignment());
        assert!((result.inertia - best).abs() < 1e-12);
    }

    #[test]
    fn inertia_nonincreasing_over_restarts_is_minimum() {
        let points = embed(&[&[0.0, 0.0], &[0.2, 0.1], &[5.0, 5.0], &[5.1, 4.9], &[9.0, 0.0]]);
        let one = kmeans(
            &points,
            3,
            &KMeansOpts {
                restarts: 1,
                ..Default::default()
            },
        )
        .unwrap();
        let many = kmeans(&points, 3, &KMeansOpts::default()).unwrap();
        assert!(many.inertia <= one.inertia + 1e-12);
    }

    #[test]
    fn permutation_invariance_canonical_form() {
        let rows: Vec<Vec<f64>> = vec![
            vec![0.0],
            vec![0.1],
            vec![10.0],
            vec![10.1],
            vec![20.0],
            vec![20.1],
        ];
        let perm = [3, 0, 5, 2, 1, 4];
        let points = Embedding::from_rows(rows.clone());
        let permuted = Embedding::from_rows(perm.iter().map(|&i| rows[i].clone()).collect());
        let a = kmeans(&points, 3, &KMeansOpts::default()).unwrap();
        let b = kmeans(&permuted, 3, &KMeansOpts::default()).unwrap();
        // map b's assignment back through the permutation, then canonicalize
        let mut unpermuted = vec![0usize; rows.len()];
        for (pos, &orig) in perm.iter().enumerate() {
            unpermuted[orig] = b.partition.assignment()[pos];
        }
        let unpermuted = Partition::new(unpermuted, 3).unwrap().canonicalized();
        assert_eq!(a.partition, unpermuted);
    }

    #[test]
    fn k_out_of_range_errors() {
        let points = embed(&[&[0.0], &[1.0]]);
        assert!(kmeans(&points, 0, &KMeansOpts::default()).is_err());
        assert!(kmeans(&points, 3, &KMeansOpts::default()).is_err());
    }

    #[test]
    fn canonicalization_is_label_invariant() {
        let a = Partition::new(vec![2, 2, 0, 1, 0], 3).unwrap().canonicalized();
        let b = Partition::new(vec![0, 0, 1, 2, 1], 3).unwrap().canonicalized();
        assert_eq!(a, b);
    }
}
