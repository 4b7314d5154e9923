//! Real-arithmetic spectral kernels: truncated SVD via Golub-Kahan-Lanczos
//! bidiagonalization with full reorthogonalization and thick restarts, a
//! symmetric Lanczos eigensolver, dense fallbacks, and the skew-symmetric
//! structure utilities (pair grouping, Schur-block extraction, projector
//! embedding).

use crate::error::{Error, Result};
use crate::graph::{NormTag, SkewMatrix};
use crate::sparse::CsrMatrix;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Relative residual target for iterative factorizations.
pub const TAU_SVD: f64 = 1e-10;
/// Orthonormality tolerance for computed bases.
pub const TAU_ORTH: f64 = 1e-10;
/// Relative tolerance for treating two singular values as a pair. Loose
/// because DSBM spectra carry O(sqrt(n)) noise.
pub const TAU_PAIR: f64 = 1e-6;
/// Relative symmetry tolerance for symmetric_eigs input.
pub const TAU_SYM: f64 = 1e-10;
/// Relative reconstruction tolerance for the dense real Schur factorization.
pub const TAU_SCHUR: f64 = 1e-8;
/// Below this dimension iterative kernels fall back to dense factorizations.
pub const DENSE_CUTOFF: usize = 64;
/// Ceiling on n for Theta(n^2) dense operations.
pub const DENSE_GUARD: usize = 10000;

/// An n-by-l real coordinate matrix, row u = embedding of vertex u.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    n: usize,
    dim: usize,
    coords: Vec<f64>,
}

impl Embedding {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Embedding {
        let n = rows.len();
        let dim = rows.first().map_or(0, |r| r.len());
        let mut coords = Vec::with_capacity(n * dim);
        for r in rows {
            assert_eq!(r.len(), dim);
            coords.extend(r);
        }
        Embedding { n, dim, coords }
    }

    /// Build from column vectors of equal length.
    pub fn from_columns(cols: &[Vec<f64>]) -> Embedding {
        let dim = cols.len();
        let n = cols.first().map_or(0, |c| c.len());
        let mut coords = vec![0.0; n * dim];
        for (j, col) in cols.iter().enumerate() {
            assert_eq!(col.len(), n);
            for (u, &x) in col.iter().enumerate() {
                coords[u * dim + j] = x;
            }
        }
        Embedding { n, dim, coords }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, u: usize) -> &[f64] {
        &self.coords[u * self.dim..(u + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn row_distance(&self, u: usize, v: usize) -> f64 {
        self.row(u)
            .iter()
            .zip(self.row(v))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Options for the iterative factorizations. `max_iter` counts restart
/// cycles; the start vector is drawn deterministically from `seed`.
#[derive(Debug, Clone)]
pub struct IterOpts {
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for IterOpts {
    fn default() -> Self {
        IterOpts {
            max_iter: 120,
            tol: TAU_SVD,
            seed: 0,
        }
    }
}

/// Leading singular triplets of a sparse real matrix.
#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    /// Nonincreasing singular values.
    pub sigma: Vec<f64>,
    /// Left singular vectors as columns.
    pub u: Vec<Vec<f64>>,
    /// Right singular vectors as columns.
    pub v: Vec<Vec<f64>>,
    /// Per-triplet backward-error estimates.
    pub residuals: Vec<f64>,
}

impl TruncatedSvd {
    pub fn l(&self) -> usize {
        self.sigma.len()
    }

    /// Keep only the first l triplets.
    pub fn truncated(&self, l: usize) -> TruncatedSvd {
        TruncatedSvd {
            sigma: self.sigma[..l].to_vec(),
            u: self.u[..l].to_vec(),
            v: self.v[..l].to_vec(),
            residuals: self.residuals[..l].to_vec(),
        }
    }

    /// n-by-l embedding from the left singular vectors.
    pub fn left_embedding(&self, l: usize) -> Embedding {
        Embedding::from_columns(&self.u[..l])
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Two classical Gram-Schmidt passes of x against the basis.
fn reorthogonalize(x: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let c = dot(x, b);
            axpy(x, -c, b);
        }
    }
}

fn random_unit(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    loop {
        let mut x: Vec<f64> = (0..len).map(|_| rng.gen::<f64>() - 0.5).collect();
        let nx = norm(&x);
        if nx > 1e-3 {
            for v in &mut x {
                *v /= nx;
            }
            return x;
        }
    }
}

/// Random unit vector orthogonal to the given basis; used on Lanczos
/// breakdown (invariant subspace exhausted).
fn random_orthonormal(rng: &mut ChaCha8Rng, len: usize, basis: &[Vec<f64>]) -> Vec<f64> {
    loop {
        let mut x = random_unit(rng, len);
        reorthogonalize(&mut x, basis);
        let nx = norm(&x);
        if nx > 1e-6 {
            for v in &mut x {
                *v /= nx;
            }
            return x;
        }
    }
}

fn sorted_dense_svd(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>, DMatrix<f64>) {
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let sigma: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let u_sorted = DMatrix::from_columns(
        &order.iter().map(|&i| u.column(i).into_owned()).collect::<Vec<_>>(),
    );
    let v_sorted = DMatrix::from_columns(
        &order
            .iter()
            .map(|&i| vt.row(i).transpose())
            .collect::<Vec<_>>(),
    );
    (sigma, u_sorted, v_sorted)
}

/// Full dense SVD with singular values sorted nonincreasing. Exposed so
/// tests can use it as an independent oracle for the iterative path.
pub fn dense_svd(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>, DMatrix<f64>) {
    sorted_dense_svd(a)
}

fn dense_truncated_svd(a: &CsrMatrix, l: usize) -> TruncatedSvd {
    let (sigma, u, v) = sorted_dense_svd(&a.to_dense());
    let take = l.min(sigma.len());
    let u_cols: Vec<Vec<f64>> = (0..take).map(|j| u.column(j).iter().copied().collect()).collect();
    let v_cols: Vec<Vec<f64>> = (0..take).map(|j| v.column(j).iter().copied().collect()).collect();
    let mut residuals = vec![0.0; take];
    for j in 0..take {
        let mut av = vec![0.0; a.nrows()];
        a.matvec(&v_cols[j], &mut av);
        axpy(&mut av, -sigma[j], &u_cols[j]);
        residuals[j] = norm(&av);
    }
    TruncatedSvd {
        sigma: sigma[..take].to_vec(),
        u: u_cols,
        v: v_cols,
        residuals,
    }
}

/// Leading l singular triplets by Golub-Kahan-Lanczos bidiagonalization with
/// full reorthogonalization and thick restarts. Falls back to a dense SVD
/// when min(dims) <= DENSE_CUTOFF. Deterministic given opts.seed.
pub fn truncated_svd(a: &CsrMatrix, l: usize, opts: &IterOpts) -> Result<TruncatedSvd> {
    let min_dim = a.nrows().min(a.ncols());
    if l < 1 || l > min_dim {
        return Err(Error::InvalidArgument(format!(
            "l = {l} outside 1..={min_dim} for a {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.nnz() == 0 {
        return Err(Error::InvalidArgument(
            "matrix has no nonzero entries".to_string(),
        ));
    }
    if min_dim <= DENSE_CUTOFF {
        return Ok(dense_truncated_svd(a, l));
    }

    let mut rng = crate::kmeans::derive_rng(opts.seed, 0x5fd1);
    let mut cap = min_dim.min((2 * l + 12).max(30));
    let mut u_basis: Vec<Vec<f64>> = Vec::new();
    let mut v_basis: Vec<Vec<f64>> = Vec::new();
    // first column
    let v1 = random_unit(&mut rng, a.ncols());
    let mut r = vec![0.0; a.nrows()];
    a.matvec(&v1, &mut r);
    let alpha = norm(&r);
    if alpha == 0.0 {
        return Err(Error::InvalidArgument(
            "start vector lies in the null space".to_string(),
        ));
    }
    for x in &mut r {
        *x /= alpha;
    }
    v_basis.push(v1);
    u_basis.push(r);
    // small projected matrix B with A V = U B, A^T U = V B^T + p e_j^T
    let mut b = DMatrix::from_element(1, 1, alpha);
    let mut p = vec![0.0; a.ncols()];
    a.matvec_transpose(&u_basis[0], &mut p);
    reorthogonalize(&mut p, &v_basis);

    let mut best_residual = f64::INFINITY;
    let mut prev_sigma: Option<Vec<f64>> = None;
    let mut prev_worst = f64::INFINITY;
    let mut inject_random = false;
    for _cycle in 0..opts.max_iter {
        while b.nrows() < cap {
            let j = b.nrows();
            // grow V with the normalized residual (or a random orthogonal
            // direction on breakdown). When the chain has converged but the
            // Ritz values are not yet stable, the chain restarts from a random
            // direction: the Krylov space of one start vector reaches only one
            // copy of a multiple singular value, so a fresh start over the
            // deflated operator is what brings in the missing copies.
            let beta = norm(&p);
            let scale = b[(0, 0)].max(1.0);
            let injected = inject_random;
            inject_random = false;
            let v_next = if injected || beta <= 1e-13 * scale {
                random_orthonormal(&mut rng, a.ncols(), &v_basis)
            } else {
                let mut v = p.clone();
                reorthogonalize(&mut v, &v_basis);
                let nv = norm(&v);
                if nv > 1e-13 * scale {
                    for x in &mut v {
                        *x /= nv;
                    }
                    v
                } else {
                    random_orthonormal(&mut rng, a.ncols(), &v_basis)
                }
            };
            v_basis.push(v_next);

            // grow U: r = A v_next orthogonalized against U
            let mut r = vec![0.0; a.nrows()];
            a.matvec(&v_basis[j], &mut r);
            let mut coeffs = vec![0.0; j];
            for _ in 0..2 {
                for (i, u) in u_basis.iter().enumerate() {
                    let c = dot(&r, u);
                    coeffs[i] += c;
                    axpy(&mut r, -c, u);
                }
            }
            let alpha = norm(&r);
            let u_next = if alpha > 1e-13 * scale {
                let mut u = r;
                for x in &mut u {
                    *x /= alpha;
                }
                u
            } else {
                random_orthonormal(&mut rng, a.nrows(), &u_basis)
            };
            u_basis.push(u_next);

            // extend B with the new column [coeffs; alpha]
            let mut nb = DMatrix::zeros(j + 1, j + 1);
            nb.view_mut((0, 0), (j, j)).copy_from(&b);
            for (i, &c) in coeffs.iter().enumerate() {
                nb[(i, j)] = c;
            }
            nb[(j, j)] = if alpha > 1e-13 * scale { alpha } else { 0.0 };
            b = nb;

            // new outer residual
            let mut q = vec![0.0; a.ncols()];
            a.matvec_transpose(&u_basis[j], &mut q);
            reorthogonalize(&mut q, &v_basis);
            p = q;
        }

        // cycle end: refresh B to the exact projection U^T A V before the
        // Rayleigh-Ritz step. The running B assumes entries below the diagonal
        // are zero, but after a thick restart the new u directions pick up
        // components of the kept columns' residuals, and dropping that
        // coupling stalls refinement at the size of those residuals.
        for (j, vb) in v_basis.iter().enumerate() {
            let mut av = vec![0.0; a.nrows()];
            a.matvec(vb, &mut av);
            for (i, ub) in u_basis.iter().enumerate() {
                b[(i, j)] = dot(&av, ub);
            }
        }

        // Rayleigh-Ritz via the SVD of B, with explicit residuals
        // on the leading triplets. Lanczos started from a single vector can
        // converge to one copy of a multiple singular value while the other
        // copy stays invisible to the projected model, so acceptance needs
        // both an explicit backward error and value stability across cycles
        // (a newly discovered copy shifts the sorted list and resets the
        // stability clock).
        let (sigma, x, y) = sorted_dense_svd(&b);
        let sigma_max = sigma[0].max(f64::MIN_POSITIVE);
        let keep = (l + 8).min(b.nrows() - 2).max(l);
        let mut ritz_u = Vec::with_capacity(keep);
        let mut ritz_v = Vec::with_capacity(keep);
        for i in 0..keep {
            let mut uc = vec![0.0; a.nrows()];
            let mut vc = vec![0.0; a.ncols()];
            for (jj, ub) in u_basis.iter().enumerate() {
                axpy(&mut uc, x[(jj, i)], ub);
            }
            for (jj, vb) in v_basis.iter().enumerate() {
                axpy(&mut vc, y[(jj, i)], vb);
            }
            ritz_u.push(uc);
            ritz_v.push(vc);
        }
        let mut residuals = Vec::with_capacity(l);
        for i in 0..l {
            // max of ||A v - sigma u|| and ||A^T u - sigma v||
            let mut av = vec![0.0; a.nrows()];
            a.matvec(&ritz_v[i], &mut av);
            axpy(&mut av, -sigma[i], &ritz_u[i]);
            let mut atu = vec![0.0; a.ncols()];
            a.matvec_transpose(&ritz_u[i], &mut atu);
            axpy(&mut atu, -sigma[i], &ritz_v[i]);
            residuals.push(norm(&av).max(norm(&atu)));
        }
        let worst = residuals.iter().fold(0.0f64, |m, &r| m.max(r));
        best_residual = best_residual.min(worst);
        let stable = prev_sigma.as_ref().is_some_and(|prev| {
            sigma[..l]
                .iter()
                .zip(prev)
                .all(|(s, ps)| (s - ps).abs() <= (10.0 * opts.tol).max(1e-12) * sigma_max)
        });
        if worst <= opts.tol * sigma_max && stable {
            ritz_u.truncate(l);
            ritz_v.truncate(l);
            return Ok(TruncatedSvd {
                sigma: sigma[..l].to_vec(),
                u: ritz_u,
                v: ritz_v,
                residuals,
            });
        }
        if _cycle + 1 == opts.max_iter {
            return Err(Error::NoConvergence {
                op: "truncated_svd",
                iterations: opts.max_iter,
                best_residual: best_residual / sigma_max,
            });
        }
        prev_sigma = Some(sigma[..l].to_vec());

        // restarted iterations can stagnate on tight clusters and multiple
        // singular values once the residual is already small; widening the
        // search space restores progress (and at cap = min(dims) the method
        // becomes exact)
        if worst > 0.5 * prev_worst && cap < min_dim {
            cap = min_dim.min(cap + cap / 2 + 1);
        }
        prev_worst = worst;

        // thick restart: keep the leading Ritz triplets and inject a fresh
        // random direction as the next expansion vector so that hidden copies
        // of multiple singular values re-enter the search space
        u_basis = ritz_u;
        v_basis = ritz_v;
        b = DMatrix::from_diagonal(&DVector::from_iterator(keep, sigma[..keep].iter().copied()));
        reorthogonalize(&mut p, &v_basis);
        inject_random = worst <= opts.tol * sigma_max;
    }
    unreachable!("loop returns on the final cycle")
}

/// One 2x2 Schur block of a skew-symmetric matrix: K q_odd = -alpha q_even,
/// K q_even = alpha q_odd.
#[derive(Debug, Clone)]
pub struct SchurPair {
    pub alpha: f64,
    pub q_odd: Vec<f64>,
    pub q_even: Vec<f64>,
}

/// Schur blocks of a skew-symmetric matrix, ordered by alpha nonincreasing.
#[derive(Debug, Clone)]
pub struct SchurPairs {
    pub pairs: Vec<SchurPair>,
    pub kernel_dim: usize,
    n: usize,
}

impl SchurPairs {
    pub fn n(&self) -> usize {
        self.n
    }

    /// The n-by-l Schur-vector embedding Q~: columns interleave
    /// (q_odd, q_even) per pair. l must be even and at most 2 * pairs.
    pub fn embedding(&self, l: usize) -> Result<Embedding> {
        if l % 2 != 0 || l == 0 || l > 2 * self.pairs.len() {
            return Err(Error::InvalidArgument(format!(
                "l = {l} invalid for {} available pairs",
                self.pairs.len()
            )));
        }
        let mut cols = Vec::with_capacity(l);
        for pair in &self.pairs[..l / 2] {
            cols.push(pair.q_odd.clone());
            cols.push(pair.q_even.clone());
        }
        Ok(Embedding::from_columns(&cols))
    }
}

/// Group l singular triplets of a skew-symmetric K into l/2 Schur blocks.
/// The rotational ambiguity of degenerate singular subspaces is resolved by
/// construction: q_even := -K q_odd / alpha.
pub fn schur_pairs_from_svd(svd: &TruncatedSvd, k_mat: &SkewMatrix) -> Result<SchurPairs> {
    if k_mat.tag() == NormTag::Rw {
        return Err(Error::RwNotSupported);
    }
    let l = svd.l();
    if l % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "l = {l} must be even to pair Schur blocks"
        )));
    }
    let n = k_mat.n();
    let sigma_max = svd.sigma.first().copied().unwrap_or(0.0);
    let mut accepted: Vec<Vec<f64>> = Vec::new();
    let mut pairs = Vec::with_capacity(l / 2);
    for j in (0..l).step_by(2) {
        let (sa, sb) = (svd.sigma[j], svd.sigma[j + 1]);
        if (sa - sb).abs() > TAU_PAIR * sigma_max {
            return Err(Error::PairMismatch {
                i: j,
                j: j + 1,
                a: sa,
                b: sb,
            });
        }
        let alpha = 0.5 * (sa + sb);
        if alpha <= 1e-12 * sigma_max.max(1.0) {
            // reached the kernel; no further blocks
            break;
        }
        // q_odd: the pair's first left singular vector, kept orthonormal to
        // blocks already accepted (matters when more than two singular
        // values coincide)
        let mut q_odd = svd.u[j].clone();
        reorthogonalize(&mut q_odd, &accepted);
        let mut nq = norm(&q_odd);
        if nq < 0.5 {
            q_odd = svd.u[j + 1].clone();
            reorthogonalize(&mut q_odd, &accepted);
            nq = norm(&q_odd);
            if nq < 0.5 {
                return Err(Error::InvalidArgument(
                    "degenerate singular subspace: cannot extract an orthonormal Schur block"
                        .to_string(),
                ));
            }
        }
        for x in &mut q_odd {
            *x /= nq;
        }
        let mut q_even = vec![0.0; n];
        k_mat.matrix().matvec(&q_odd, &mut q_even);
        for x in &mut q_even {
            *x /= -alpha;
        }
        reorthogonalize(&mut q_even, &accepted);
        let c = dot(&q_even, &q_odd);
        axpy(&mut q_even, -c, &q_odd);
        let ne = norm(&q_even);
        if ne < 0.5 {
            return Err(Error::InvalidArgument(
                "degenerate singular subspace: Schur partner collapsed".to_string(),
            ));
        }
        for x in &mut q_even {
            *x /= ne;
        }
        accepted.push(q_odd.clone());
        accepted.push(q_even.clone());
        pairs.push(SchurPair {
            alpha,
            q_odd,
            q_even,
        });
    }
    let kernel_dim = n - 2 * pairs.len();
    Ok(SchurPairs {
        pairs,
        kernel_dim,
        n,
    })
}

/// Complex eigenpairs (i*alpha, (q_odd + i q_even)/sqrt(2)) reconstructed
/// from the Schur blocks, returned as split real/imaginary parts.
pub fn eigvecs_from_pairs(p: &SchurPairs) -> Vec<(f64, Vec<f64>, Vec<f64>)> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    p.pairs
        .iter()
        .map(|pair| {
            let re: Vec<f64> = pair.q_odd.iter().map(|&x| x * s).collect();
            let im: Vec<f64> = pair.q_even.iter().map(|&x| x * s).collect();
            (pair.alpha, re, im)
        })
        .collect()
}

/// Dense n-by-n projector embedding P = Q~ Q~^T from the first l Schur
/// vectors. This is the dense baseline's k-means input.
pub fn projector_embedding(p: &SchurPairs, l: usize) -> Result<Embedding> {
    if p.n > DENSE_GUARD {
        return Err(Error::DenseGuard {
            n: p.n,
            guard: DENSE_GUARD,
        });
    }
    let q = p.embedding(l)?;
    let n = q.n();
    let mut coords = vec![0.0; n * n];
    for u in 0..n {
        let ru = q.row(u);
        for v in 0..n {
            coords[u * n + v] = dot(ru, q.row(v));
        }
    }
    Ok(Embedding { n, dim: n, coords })
}

/// k algebraically largest eigenpairs of a sparse symmetric matrix via
/// Lanczos with full reorthogonalization; dense fallback below
/// DENSE_CUTOFF.
pub fn symmetric_eigs(
    a: &CsrMatrix,
    k: usize,
    opts: &IterOpts,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::InvalidArgument("matrix must be square".to_string()));
    }
    if k < 1 || k >= n {
        return Err(Error::InvalidArgument(format!(
            "k = {k} outside 1..{n}"
        )));
    }
    let scale = a.iter().map(|(_, _, v)| v.abs()).fold(0.0, f64::max);
    let asym = a.max_asymmetry();
    if asym > TAU_SYM * scale.max(1.0) {
        return Err(Error::NotSymmetric { asym });
    }
    if n <= DENSE_CUTOFF {
        return Ok(dense_symmetric_eigs(a, k));
    }

    let mut rng = crate::kmeans::derive_rng(opts.seed, 0xe16);
    let cap = n.min((2 * k + 12).max(30));
    let mut basis: Vec<Vec<f64>> = vec![random_unit(&mut rng, n)];
    let mut t = DMatrix::<f64>::zeros(1, 1);
    let mut p = vec![0.0; n];
    a.matvec(&basis[0], &mut p);
    t[(0, 0)] = dot(&p, &basis[0]);
    axpy(&mut p, -t[(0, 0)], &basis[0]);
    reorthogonalize(&mut p, &basis);

    let mut best_residual = f64::INFINITY;
    for cycle in 0..opts.max_iter {
        while t.nrows() < cap {
            let j = t.nrows();
            let beta = norm(&p);
            let v_next = if beta > 1e-13 * scale.max(1.0) {
                let mut v = p.clone();
                reorthogonalize(&mut v, &basis);
                let nv = norm(&v);
                if nv > 1e-13 * scale.max(1.0) {
                    for x in &mut v {
                        *x /= nv;
                    }
                    v
                } else {
                    random_orthonormal(&mut rng, n, &basis)
                }
            } else {
                random_orthonormal(&mut rng, n, &basis)
            };
            basis.push(v_next);
            let mut w = vec![0.0; n];
            a.matvec(&basis[j], &mut w);
            let mut coeffs = vec![0.0; j + 1];
            for _ in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let c = dot(&w, v);
                    coeffs[i] += c;
                    axpy(&mut w, -c, v);
                }
            }
            let mut nt = DMatrix::zeros(j + 1, j + 1);
            nt.view_mut((0, 0), (j, j)).copy_from(&t);
            for (i, &c) in coeffs.iter().enumerate() {
                nt[(i, j)] = c;
                nt[(j, i)] = c;
            }
            t = nt;
            p = w;
        }

        let eig = nalgebra::SymmetricEigen::new(t.clone());
        let mut order: Vec<usize> = (0..t.nrows()).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        let pnorm = norm(&p);
        let last = t.nrows() - 1;
        let theta_max = eig.eigenvalues.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
        let worst = order[..k]
            .iter()
            .map(|&i| pnorm * eig.eigenvectors[(last, i)].abs())
            .fold(0.0f64, f64::max);
        best_residual = best_residual.min(worst);
        let ritz_vec = |i: usize| -> Vec<f64> {
            let mut out = vec![0.0; n];
            for (jj, v) in basis.iter().enumerate() {
                axpy(&mut out, eig.eigenvectors[(jj, i)], v);
            }
            out
        };
        if worst <= opts.tol * theta_max.max(f64::MIN_POSITIVE) {
            let values: Vec<f64> = order[..k].iter().map(|&i| eig.eigenvalues[i]).collect();
            let vectors: Vec<Vec<f64>> = order[..k].iter().map(|&i| ritz_vec(i)).collect();
            return Ok((values, vectors));
        }
        if cycle + 1 == opts.max_iter {
            return Err(Error::NoConvergence {
                op: "symmetric_eigs",
                iterations: opts.max_iter,
                best_residual: best_residual / theta_max.max(f64::MIN_POSITIVE),
            });
        }
        let keep = (k + 8).min(t.nrows() - 2).max(k);
        let new_basis: Vec<Vec<f64>> = order[..keep].iter().map(|&i| ritz_vec(i)).collect();
        basis = new_basis;
        t = DMatrix::from_diagonal(&DVector::from_iterator(
            keep,
            order[..keep].iter().map(|&i| eig.eigenvalues[i]),
        ));
    }
    unreachable!("loop returns on the final cycle")
}

fn dense_symmetric_eigs(a: &CsrMatrix, k: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let eig = nalgebra::SymmetricEigen::new(a.to_dense());
    let mut order: Vec<usize> = (0..a.nrows()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order[..k].iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order[..k]
        .iter()
        .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();
    (values, vectors)
}

/// Real Schur factorization A = Q T Q^T with T quasi-upper-triangular
/// (1x1 and 2x2 diagonal blocks).
pub fn real_schur_dense(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::InvalidArgument("matrix must be square".to_string()));
    }
    if n > DENSE_GUARD {
        return Err(Error::DenseGuard {
            n,
            guard: DENSE_GUARD,
        });
    }
    let schur = nalgebra::Schur::try_new(a.clone(), 1e-14, 0).ok_or(Error::NoConvergence {
        op: "real_schur_dense",
        iterations: 0,
        best_residual: f64::NAN,
    })?;
    let (q, t) = schur.unpack();
    let resid = (a - &q * &t * q.transpose()).norm();
    let scale = a.norm().max(f64::MIN_POSITIVE);
    if resid > TAU_SCHUR * scale {
        return Err(Error::NoConvergence {
            op: "real_schur_dense",
            iterations: 0,
            best_residual: resid / scale,
        });
    }
    Ok((q, t))
}
