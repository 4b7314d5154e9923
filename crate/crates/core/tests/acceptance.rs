//! End-to-end acceptance checks for the toolkit's guarantees: embedding
//! geometry, skew spectral structure, the exact trade-flow oracle, DSBM
//! recovery, timing direction, and full determinism. Each test prints one
//! summary line on success.

use skewclust::algorithms::{
    herm, herm_dense, skew_f, skew_r, trade_flow_relaxation, ClusterSpec, Method,
};
use skewclust::bench::{aggregate, cmd_cluster, cmd_generate, cmd_sweep, cmd_timing, raw_csv,
    SweepConfig, TimingConfig};
use skewclust::dsbm::MetaPattern;
use skewclust::graph::{build_skew, load_edge_list, Digraph, EdgeListFormat, NormTag};
use skewclust::kmeans::{derive_rng, Partition};
use skewclust::linalg::{
    dense_svd, eigvecs_from_pairs, projector_embedding, schur_pairs_from_svd, truncated_svd,
    IterOpts,
};
use skewclust::metrics::{ari, ci, ci_vol, exact_tf_k2, tf, top_tf};
use rand::Rng;
use std::path::PathBuf;

fn random_digraph(n: usize, density: f64, seed: u64) -> Digraph {
    let mut rng = derive_rng(seed, 0xacce);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u != v && rng.gen::<f64>() < density {
                edges.push((u, v, 1.0 + rng.gen::<f64>()));
            }
        }
    }
    Digraph::from_edges(n, edges).unwrap()
}

#[test]
fn criterion_01_distance_equivalence() {
    // the low-dimensional rotation-block embedding and the dense projector
    // rows have identical pairwise geometry
    let mut checked = 0;
    let mut seed = 0u64;
    let mut worst = 0.0f64;
    while checked < 20 {
        seed += 1;
        let n = 50 + (seed as usize * 13) % 251; // n in [50, 300]
        let l = if checked % 2 == 0 { 2 } else { 4 };
        let g = random_digraph(n, 0.05, seed);
        let km = build_skew(&g);
        let opts = IterOpts { seed, ..Default::default() };
        let svd = match truncated_svd(km.matrix(), l + 1, &opts) {
            Ok(s) => s,
            Err(_) => continue,
        };
        // require a spectral gap at l so the subspace is well defined
        if svd.sigma[l - 1] - svd.sigma[l] < 1e-6 * svd.sigma[0] {
            continue;
        }
        let pairs = schur_pairs_from_svd(&svd.truncated(l), &km).unwrap();
        let q = pairs.embedding(l).unwrap();
        let p = projector_embedding(&pairs, l).unwrap();
        for u in 0..n {
            for v in (u + 1)..n {
                worst = worst.max((q.row_distance(u, v) - p.row_distance(u, v)).abs());
            }
        }
        checked += 1;
    }
    assert!(worst <= 1e-7, "max distance discrepancy {worst}");
    println!("[PASS] criterion 1: distance equivalence, max discrepancy {worst:.3e} <= 1e-7");
}

#[test]
fn criterion_02_svd_rsd_structure() {
    let mut worst_pair = 0.0f64;
    let mut worst_eig = 0.0f64;
    let mut worst_ortho = 0.0f64;
    for seed in 0..50u64 {
        let n = 20 + (seed as usize * 7) % 181; // n <= 200
        let g = random_digraph(n, 0.08, seed + 100);
        let km = build_skew(&g);
        if km.matrix().nnz() == 0 {
            continue;
        }
        // dense-SVD singular values of a skew matrix come in equal pairs
        let (sigma, _, _) = dense_svd(&km.matrix().to_dense());
        let rank_pairs = sigma.iter().filter(|&&s| s > 1e-9 * sigma[0]).count() / 2;
        for j in 0..rank_pairs {
            worst_pair = worst_pair.max((sigma[2 * j] - sigma[2 * j + 1]).abs() / sigma[0]);
        }
        // reconstructed eigenpairs of the leading block
        let opts = IterOpts { seed, ..Default::default() };
        let svd = truncated_svd(km.matrix(), 2, &opts).unwrap();
        // gap condition for the leading singular pair
        if sigma.len() > 2 && sigma[1] - sigma[2] < 1e-6 * sigma[0] {
            continue;
        }
        let dot: f64 = svd.u[0].iter().zip(&svd.v[0]).map(|(a, b)| a * b).sum();
        worst_ortho = worst_ortho.max(dot.abs());
        let pairs = schur_pairs_from_svd(&svd, &km).unwrap();
        for (alpha, re, im) in eigvecs_from_pairs(&pairs) {
            // || K x - i alpha x || with x = re + i im
            let mut kre = vec![0.0; n];
            let mut kim = vec![0.0; n];
            km.matrix().matvec(&re, &mut kre);
            km.matrix().matvec(&im, &mut kim);
            let mut r2 = 0.0;
            for u in 0..n {
                r2 += (kre[u] + alpha * im[u]).powi(2) + (kim[u] - alpha * re[u]).powi(2);
            }
            worst_eig = worst_eig.max(r2.sqrt() / alpha);
        }
    }
    assert!(worst_pair <= 1e-9, "pairing off by {worst_pair:.3e}");
    assert!(worst_eig <= 1e-7, "eigen residual {worst_eig:.3e}");
    assert!(worst_ortho <= 1e-8, "u1.v1 = {worst_ortho:.3e}");
    println!(
        "[PASS] criterion 2: paired spectrum ({worst_pair:.1e}), eigenpair residual ({worst_eig:.1e}), u1^T v1 ({worst_ortho:.1e})"
    );
}

fn brute_force_tf_k2(g: &Digraph) -> f64 {
    let n = g.n();
    let mut best = 0.0f64;
    for mask in 0..(1u32 << n) {
        let mut net = 0.0;
        for &(u, v, w) in g.edges() {
            let u_in = mask & (1 << u) != 0;
            let v_in = mask & (1 << v) != 0;
            if u_in && !v_in {
                net += w;
            } else if v_in && !u_in {
                net -= w;
            }
        }
        best = best.max(net.abs());
    }
    best
}

#[test]
fn criterion_03_exact_tf_oracle() {
    for seed in 0..200u64 {
        let n = 4 + (seed as usize) % 11; // n <= 14
        let mut rng = derive_rng(seed, 0x7f);
        let mut edges = Vec::new();
        for u in 0..n {
            for v in 0..n {
                if u != v && rng.gen::<f64>() < 0.3 {
                    edges.push((u, v, rng.gen_range(1..=4) as f64));
                }
            }
        }
        let g = Digraph::from_edges(n, edges).unwrap();
        let (value, _) = exact_tf_k2(&g);
        let brute = brute_force_tf_k2(&g);
        assert_eq!(value, brute, "seed {seed}: {value} vs {brute}");
    }
    println!("[PASS] criterion 3: exact two-cluster trade-flow oracle matches brute force on 200 graphs");
}

#[test]
fn criterion_04_relaxation_dominance() {
    for seed in 0..50u64 {
        let n = 4 + (seed as usize) % 7; // n <= 10
        let g = random_digraph(n, 0.5, seed + 300);
        let km = build_skew(&g);
        if km.matrix().nnz() == 0 {
            continue;
        }
        let (sigma1, _, _) = trade_flow_relaxation(&g).unwrap();
        for mask in 1..(1u32 << n) - 1 {
            let x: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
            let y: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) == 0).collect();
            let mut flow = 0.0;
            for &u in &x {
                for &v in &y {
                    flow += km.matrix().get(u, v);
                }
            }
            let normalized = flow.abs() / ((x.len() as f64) * (y.len() as f64)).sqrt();
            assert!(
                sigma1 + 1e-9 >= normalized,
                "seed {seed}: sigma1 {sigma1} < {normalized}"
            );
        }
    }
    println!("[PASS] criterion 4: sigma_1(K) dominates every normalized 2-partition trade flow on 50 graphs");
}

#[test]
fn criterion_05_rotated_clusterings_tie() {
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
    let (t_color, _) = top_tf(&g, &color, 3).unwrap();
    let (t_rotated, _) = top_tf(&g, &rotated, 3).unwrap();
    assert_eq!(t_color, 6.0);
    assert_eq!(t_rotated, 6.0);
    println!("[PASS] criterion 5: both 3-colorings of the disjoint cycles score top_tf = 6 with c = 3");
}

#[test]
fn criterion_06_dsbm_recovery() {
    let dir = tempfile::tempdir().unwrap();
    let config = SweepConfig {
        pattern: MetaPattern::Circulant,
        n: 500,
        k: 5,
        sizes: vec![],
        p_values: vec![0.16],
        mu_values: vec![0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3],
        graphs_per_cell: 10,
        runs_per_graph: 3,
        methods: vec![ClusterSpec::new(Method::SkewF, 5)],
        c_cuts: None,
        seed: 20,
        out_dir: dir.path().to_path_buf(),
        plot: false,
    };
    let (_, agg) = cmd_sweep(&config).unwrap();
    let mut cells: Vec<_> = agg.iter().filter(|r| r.method == "skew_f").collect();
    cells.sort_by(|a, b| a.mu.total_cmp(&b.mu));
    assert_eq!(cells.len(), 7);
    assert!(
        cells[0].ari_mean >= 0.95,
        "ARI at mu=0 is {}",
        cells[0].ari_mean
    );
    for w in cells.windows(2) {
        let slack = 2.0 * (w[0].ari_sd + w[1].ari_sd);
        assert!(
            w[1].ari_mean <= w[0].ari_mean + slack + 1e-9,
            "ARI rose from {} (mu={}) to {} (mu={}) beyond 2 sigma",
            w[0].ari_mean,
            w[0].mu,
            w[1].ari_mean,
            w[1].mu
        );
    }
    println!(
        "[PASS] criterion 6: circulant DSBM recovery, ARI(mu=0) = {:.3} >= 0.95 and nonincreasing within 2 sigma",
        cells[0].ari_mean
    );
}

#[test]
fn criterion_07_timing_direction() {
    let dir = tempfile::tempdir().unwrap();
    let config = TimingConfig {
        n: 2000,
        k: 5,
        p: 0.01,
        runs: 1,
        methods: vec![
            ClusterSpec::new(Method::SkewF, 5),
            ClusterSpec::new(Method::HermDense, 5),
        ],
        seed: 4,
        out_dir: dir.path().to_path_buf(),
    };
    let rows = cmd_timing(&config).unwrap();
    let skew = rows.iter().find(|r| r.alg == "skew_f").unwrap();
    let dense = rows.iter().find(|r| r.alg == "herm_dense").unwrap();
    let speedup = dense.total_ms / skew.total_ms;
    assert!(
        speedup >= 2.0,
        "skew_f only {speedup:.2}x faster than the dense baseline"
    );
    assert!(
        dense.kmeans_ms > dense.setup_ms + dense.embed_ms,
        "k-means ({:.1} ms) does not dominate the dense baseline ({:.1} + {:.1} ms)",
        dense.kmeans_ms,
        dense.setup_ms,
        dense.embed_ms
    );
    println!(
        "[PASS] criterion 7: skew_f {speedup:.1}x faster than the dense baseline; its k-means step dominates"
    );
}

#[test]
fn criterion_08_real_data_anchor() {
    let path = std::env::var("FBFW_PATH")
        .map(PathBuf::from)
        .unwrap_or_else(|_| PathBuf::from("data/fbfw.tsv"));
    if !path.exists() {
        println!(
            "[SKIP] criterion 8: trade-network file not found at {} (set FBFW_PATH to run)",
            path.display()
        );
        return;
    }
    let loaded = load_edge_list(&path, EdgeListFormat::Tsv, true).unwrap();
    assert_eq!(loaded.graph.n(), 128);
    assert_eq!(loaded.graph.edge_count(), 2106);
    let (exact, _) = exact_tf_k2(&loaded.graph);
    assert_eq!(exact, 1163.0);
    let mut spec = ClusterSpec::new(Method::SkewR, 2);
    spec.l_override = Some(2);
    spec.normalization = NormTag::Rw;
    let report = cmd_cluster(
        &path,
        EdgeListFormat::Tsv,
        true,
        &spec,
        None,
        Some(1),
        100,
        &tempfile::tempdir().unwrap().path().join("out"),
    )
    .unwrap();
    let frac = report.achieved_fraction.unwrap();
    assert!(frac >= 0.90, "achieved only {frac:.3} of the exact trade flow");
    println!("[PASS] criterion 8: 128 vertices / 2106 edges, exact TF 1163, best-of-100 achieves {frac:.3} >= 0.90");
}

#[test]
fn criterion_09_metric_examples() {
    let a = Partition::new(vec![0, 0, 1, 1], 2).unwrap();
    let b = Partition::new(vec![0, 1, 0, 1], 2).unwrap();
    assert!((ari(&a, &b).unwrap() + 0.5).abs() < 1e-12);

    // two forward edges, one back edge between fixed halves
    let g = Digraph::from_edges(4, vec![(0, 2, 1.0), (1, 3, 1.0), (2, 1, 1.0)]).unwrap();
    let (x, y) = (vec![0, 1], vec![2, 3]);
    assert_eq!(ci(&g, &x, &y).unwrap(), 2.0 / 3.0);
    assert_eq!(tf(&g, &x, &y).unwrap(), 1.0);
    let imbalance = (2.0 / 3.0f64 - 0.5).abs();
    let expected = imbalance * g.volume(&x).min(g.volume(&y));
    assert!((ci_vol(&g, &x, &y).unwrap() - expected).abs() < 1e-12);

    // single edge: fully imbalanced cut
    let single = Digraph::from_edges(2, vec![(0, 1, 2.0)]).unwrap();
    assert_eq!(ci(&single, &[0], &[1]).unwrap(), 1.0);
    assert_eq!(tf(&single, &[0], &[1]).unwrap(), 2.0);
    // 3-cycle across any 2-partition is perfectly balanced
    let cyc = Digraph::from_edges(3, vec![(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]).unwrap();
    assert_eq!(ci(&cyc, &[0], &[1, 2]).unwrap(), 0.5);
    assert_eq!(tf(&cyc, &[0], &[1, 2]).unwrap(), 0.0);
    println!("[PASS] criterion 9: ARI and cut-metric formula examples evaluate exactly");
}

/// Strip the three wall-clock columns from a raw sweep CSV.
fn strip_timing(csv: &str) -> String {
    csv.lines()
        .map(|line| {
            let cols: Vec<&str> = line.split(',').collect();
            cols.iter()
                .enumerate()
                .filter(|(i, _)| !(7..10).contains(i))
                .map(|(_, c)| *c)
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn criterion_10_determinism() {
    let base = |dir: &std::path::Path| SweepConfig {
        pattern: MetaPattern::Cmg,
        n: 80,
        k: 4,
        sizes: vec![],
        p_values: vec![0.1],
        mu_values: vec![0.0, 0.1],
        graphs_per_cell: 2,
        runs_per_graph: 2,
        methods: vec![
            ClusterSpec::new(Method::SkewF, 4),
            ClusterSpec::new(Method::Bcs, 4),
        ],
        c_cuts: None,
        seed: 99,
        out_dir: dir.to_path_buf(),
        plot: false,
    };

    // generate: byte-identical instance files
    let (da, db) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    cmd_generate(&base(da.path())).unwrap();
    cmd_generate(&base(db.path())).unwrap();
    for entry in std::fs::read_dir(da.path()).unwrap() {
        let name = entry.unwrap().file_name();
        if name == "manifest.json" {
            continue; // embeds the output path by design
        }
        let a = std::fs::read(da.path().join(&name)).unwrap();
        let b = std::fs::read(db.path().join(&name)).unwrap();
        assert_eq!(a, b, "{name:?} differs between identical runs");
    }

    // sweep: identical rows and aggregates modulo the timing columns
    let (rows_a, agg_a) = cmd_sweep(&base(da.path())).unwrap();
    let (rows_b, agg_b) = cmd_sweep(&base(db.path())).unwrap();
    assert_eq!(strip_timing(&raw_csv(&rows_a)), strip_timing(&raw_csv(&rows_b)));
    assert_eq!(
        skewclust::bench::agg_csv(&agg_a),
        skewclust::bench::agg_csv(&agg_b)
    );
    // aggregates are a pure function of the raw rows
    assert_eq!(
        skewclust::bench::agg_csv(&aggregate(&rows_a)),
        skewclust::bench::agg_csv(&agg_a)
    );

    // cluster: byte-identical partition and report
    let graph_path = da.path().join("dsbm_p0_mu0_g0.tsv");
    let spec = ClusterSpec::new(Method::SkewF, 4);
    let out_a = da.path().join("cl");
    let out_b = db.path().join("cl");
    cmd_cluster(&graph_path, EdgeListFormat::Tsv, false, &spec, None, None, 3, &out_a).unwrap();
    cmd_cluster(&graph_path, EdgeListFormat::Tsv, false, &spec, None, None, 3, &out_b).unwrap();
    for file in ["partition.tsv", "report.json"] {
        let a = std::fs::read(out_a.join(file)).unwrap();
        let b = std::fs::read(out_b.join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }

    // pipelines themselves: identical partitions for identical seeds
    let g = random_digraph(120, 0.05, 77);
    for run in [0, 1] {
        let _ = run;
        let a = skew_f(&g, 4, NormTag::None, 5).unwrap();
        let b = skew_f(&g, 4, NormTag::None, 5).unwrap();
        assert_eq!(a.partition.assignment(), b.partition.assignment());
        let c = herm(&g, 4, NormTag::None, 5).unwrap();
        let d = herm(&g, 4, NormTag::None, 5).unwrap();
        assert_eq!(c.partition.assignment(), d.partition.assignment());
        let e = skew_r(&g, 4, 2, NormTag::Sym, 5).unwrap();
        let f = skew_r(&g, 4, 2, NormTag::Sym, 5).unwrap();
        assert_eq!(e.partition.assignment(), f.partition.assignment());
        let hd_a = herm_dense(&g, 4, NormTag::None, 5).unwrap();
        let hd_b = herm_dense(&g, 4, NormTag::None, 5).unwrap();
        assert_eq!(hd_a.partition.assignment(), hd_b.partition.assignment());
    }
    println!("[PASS] criterion 10: identical seeds give byte-identical non-timing outputs");
}
