//! Compressed sparse row matrices, a sparse Cholesky factorization and a
//! (preconditioned) conjugate gradient solver.

use crate::error::{check_len, Error, Result};

/// Sparse matrix in compressed row form.
///
/// Used both for the symmetric finite-element operators and for the
/// rectangular nodal/element coupling matrix; `symmetric` records which.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
}

impl CsrMatrix {
    /// Assembles from `(row, col, value)` triplets, summing duplicates in
    /// their original order so the result is bitwise reproducible.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
        symmetric: bool,
    ) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, c, _) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut by_row = vec![(0usize, 0.0f64); triplets.len()];
        for &(r, c, v) in triplets {
            by_row[next[r]] = (c, v);
            next[r] += 1;
        }

        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for r in 0..nrows {
            let row = &mut by_row[counts[r]..counts[r + 1]];
            // stable: duplicates keep insertion order
            row.sort_by_key(|&(c, _)| c);
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                let mut sum = 0.0;
                while k < row.len() && row[k].0 == c {
                    sum += row[k].1;
                    k += 1;
                }
                col_idx.push(c);
                values.push(sum);
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
            symmetric,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// `(column, value)` pairs of row `r`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[span.clone()].binary_search(&c) {
            Ok(k) => self.values[span.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols))
            .map(|i| self.get(i, i))
            .collect()
    }

    /// `y = A x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (r, yr) in y.iter_mut().enumerate() {
            *yr = self.row(r).map(|(c, v)| v * x[c]).sum();
        }
    }

    /// `y = A^T x`
    pub fn mul_transpose_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for (r, &xr) in x.iter().enumerate() {
            for (c, v) in self.row(r) {
                y[c] += v * xr;
            }
        }
        y
    }

    /// `x^T A x` for square matrices.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.mul_vec(x))
    }

    /// Restriction to the given rows and columns (in the given order).
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> CsrMatrix {
        let mut col_map = vec![usize::MAX; self.ncols];
        for (j, &c) in cols.iter().enumerate() {
            col_map[c] = j;
        }
        let mut triplets = Vec::new();
        for (i, &r) in rows.iter().enumerate() {
            for (c, v) in self.row(r) {
                let j = col_map[c];
                if j != usize::MAX {
                    triplets.push((i, j, v));
                }
            }
        }
        let symmetric = self.symmetric && rows == cols;
        CsrMatrix::from_triplets(rows.len(), cols.len(), &triplets, symmetric)
    }

    /// `alpha * A + beta * B` for matrices of equal shape.
    pub fn linear_combination(alpha: f64, a: &CsrMatrix, beta: f64, b: &CsrMatrix) -> CsrMatrix {
        assert_eq!((a.nrows, a.ncols), (b.nrows, b.ncols));
        let mut triplets = Vec::with_capacity(a.nnz() + b.nnz());
        for r in 0..a.nrows {
            triplets.extend(a.row(r).map(|(c, v)| (r, c, alpha * v)));
            triplets.extend(b.row(r).map(|(c, v)| (r, c, beta * v)));
        }
        CsrMatrix::from_triplets(a.nrows, a.ncols, &triplets, a.symmetric && b.symmetric)
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                let t = if c < self.nrows && r < self.ncols {
                    self.get(c, r)
                } else {
                    0.0
                };
                worst = worst.max((v - t).abs());
            }
        }
        worst
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (r, row) in d.iter_mut().enumerate() {
            for (c, v) in self.row(r) {
                row[c] = v;
            }
        }
        d
    }
}

/// Cholesky factor `P A P^T = L L^T` stored in variable-band (envelope) form
/// under a reverse Cuthill-McKee ordering.
#[derive(Clone, Debug)]
pub struct SpdFactor {
    n: usize,
    /// `perm[new] = old`
    perm: Vec<usize>,
    /// first stored column of each row of `L`
    first: Vec<usize>,
    /// offset of `L[i][first[i]]` in `values`; the row ends with the diagonal
    offsets: Vec<usize>,
    values: Vec<f64>,
}

/// Factorizes a symmetric positive definite matrix.
pub fn factorize_spd(a: &CsrMatrix) -> Result<SpdFactor> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: a.ncols(),
            context: "square matrix for Cholesky",
        });
    }
    let n = a.nrows();
    let perm = reverse_cuthill_mckee(a);
    let mut inv = vec![0; n];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }

    let mut first: Vec<usize> = (0..n).collect();
    for (new, &old) in perm.iter().enumerate() {
        for (c, _) in a.row(old) {
            let j = inv[c];
            if j < new {
                first[new] = first[new].min(j);
            }
        }
    }
    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0);
    for i in 0..n {
        offsets.push(offsets[i] + (i - first[i] + 1));
    }
    let mut values = vec![0.0; offsets[n]];
    let mut diag_scale = vec![0.0; n];
    for (new, &old) in perm.iter().enumerate() {
        for (c, v) in a.row(old) {
            let j = inv[c];
            if j <= new {
                values[offsets[new] + j - first[new]] += v;
            }
            if j == new {
                diag_scale[new] = v.abs();
            }
        }
    }

    for i in 0..n {
        let fi = first[i];
        let row_i = offsets[i];
        for j in fi..i {
            let fj = first[j];
            let row_j = offsets[j];
            let k0 = fi.max(fj);
            let mut s = values[row_i + j - fi];
            for k in k0..j {
                s -= values[row_i + k - fi] * values[row_j + k - fj];
            }
            values[row_i + j - fi] = s / values[row_j + j - fj];
        }
        let mut d = values[row_i + i - fi];
        for k in fi..i {
            let l = values[row_i + k - fi];
            d -= l * l;
        }
        if !(d > 1e-12 * diag_scale[i]) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite {
                row: perm[i],
                pivot: d,
            });
        }
        values[row_i + i - fi] = d.sqrt();
    }

    Ok(SpdFactor {
        n,
        perm,
        first,
        offsets: offsets[..n].to_vec(),
        values,
    })
}

impl SpdFactor {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored entries of the triangular factor.
    pub fn factor_nnz(&self) -> usize {
        self.values.len()
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, rhs.len(), "right-hand side")?;
        let mut y: Vec<f64> = self.perm.iter().map(|&old| rhs[old]).collect();
        self.solve_permuted_in_place(&mut y);
        let mut x = vec![0.0; self.n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        Ok(x)
    }

    fn solve_permuted_in_place(&self, y: &mut [f64]) {
        for i in 0..self.n {
            let fi = self.first[i];
            let row = &self.values[self.offsets[i]..self.offsets[i] + (i - fi + 1)];
            let mut s = y[i];
            for (l, yk) in row[..i - fi].iter().zip(&y[fi..i]) {
                s -= l * yk;
            }
            y[i] = s / row[i - fi];
        }
        for i in (0..self.n).rev() {
            let fi = self.first[i];
            let row = &self.values[self.offsets[i]..self.offsets[i] + (i - fi + 1)];
            let xi = y[i] / row[i - fi];
            y[i] = xi;
            for (l, yk) in row[..i - fi].iter().zip(&mut y[fi..i]) {
                *yk -= l * xi;
            }
        }
    }
}

/// Convenience wrapper around [`SpdFactor::solve`].
pub fn solve_with_factor(factor: &SpdFactor, rhs: &[f64]) -> Result<Vec<f64>> {
    factor.solve(rhs)
}

fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|r| a.row(r).map(|(c, _)| c).filter(|&c| c != r).collect())
        .collect();
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();

    // breadth-first level structure of the unvisited component containing `start`
    let levels = |start: usize, visited: &[bool]| -> (Vec<usize>, Vec<usize>) {
        let mut level = vec![usize::MAX; n];
        let mut queue = vec![start];
        level[start] = 0;
        let mut head = 0;
        while head < queue.len() {
            let v = queue[head];
            head += 1;
            for &w in &adj[v] {
                if !visited[w] && level[w] == usize::MAX {
                    level[w] = level[v] + 1;
                    queue.push(w);
                }
            }
        }
        (queue, level)
    };

    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let mut start = (0..n)
            .filter(|&v| !visited[v])
            .min_by_key(|&v| (degree[v], v))
            .expect("unvisited node");
        // pseudo-peripheral start node
        let (mut queue, mut level) = levels(start, &visited);
        loop {
            let depth = level[*queue.last().unwrap()];
            let candidate = queue
                .iter()
                .copied()
                .filter(|&v| level[v] == depth)
                .min_by_key(|&v| (degree[v], v))
                .unwrap();
            let (q2, l2) = levels(candidate, &visited);
            if l2[*q2.last().unwrap()] > depth {
                start = candidate;
                queue = q2;
                level = l2;
            } else {
                break;
            }
        }
        drop((queue, level));

        let mut queue = vec![start];
        visited[start] = true;
        let mut head = 0;
        while head < queue.len() {
            let v = queue[head];
            head += 1;
            let mut nbrs: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            nbrs.sort_by_key(|&w| (degree[w], w));
            for w in nbrs {
                visited[w] = true;
                queue.push(w);
            }
        }
        order.extend(queue);
    }
    order.reverse();
    order
}

/// Outcome of a converged conjugate gradient run.
#[derive(Clone, Debug)]
pub struct CgOutput {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Conjugate gradients for an SPD operator, starting from zero.
pub fn cg_solve<A>(apply: A, rhs: &[f64], tol: f64, max_iterations: usize) -> Result<CgOutput>
where
    A: Fn(&[f64], &mut [f64]),
{
    pcg_solve(
        apply,
        |r: &[f64], z: &mut [f64]| z.copy_from_slice(r),
        rhs,
        None,
        tol,
        max_iterations,
    )
}

/// Preconditioned conjugate gradients with optional warm start.
///
/// Starting from `x0`, every iterate lowers the energy `x^T A x / 2 - b^T x`.
/// Nonpositive curvature is reported as [`Error::Breakdown`]; running out of
/// iterations as [`Error::IterationLimit`] carrying the last iterate.
pub fn pcg_solve<A, P>(
    apply: A,
    precondition: P,
    rhs: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iterations: usize,
) -> Result<CgOutput>
where
    A: Fn(&[f64], &mut [f64]),
    P: Fn(&[f64], &mut [f64]),
{
    let n = rhs.len();
    let mut x = match x0 {
        Some(x0) => {
            check_len(n, x0.len(), "initial guess")?;
            x0.to_vec()
        }
        None => vec![0.0; n],
    };
    let b_norm = norm(rhs);
    if b_norm == 0.0 {
        return Ok(CgOutput {
            x: vec![0.0; n],
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let mut ax = vec![0.0; n];
    apply(&x, &mut ax);
    let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut z = vec![0.0; n];
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut residual = norm(&r) / b_norm;
    for it in 0..max_iterations {
        if residual <= tol {
            return Ok(CgOutput {
                x,
                iterations: it,
                relative_residual: residual,
            });
        }
        apply(&p, &mut ap);
        let curvature = dot(&p, &ap);
        if !(curvature > 0.0) {
            return Err(Error::Breakdown {
                iteration: it,
                curvature,
            });
        }
        let alpha = rz / curvature;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        residual = norm(&r) / b_norm;
        precondition(&r, &mut z);
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    if residual <= tol {
        return Ok(CgOutput {
            x,
            iterations: max_iterations,
            relative_residual: residual,
        });
    }
    Err(Error::IterationLimit {
        max_iterations,
        residual,
        best: x,
    })
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn identity(n: usize) -> CsrMatrix {
        let t: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        CsrMatrix::from_triplets(n, n, &t, true)
    }

    fn laplace_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &t, true)
    }

    fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> CsrMatrix {
        // sparse B^T B + I
        let mut b = vec![vec![0.0; n]; n];
        for row in b.iter_mut() {
            for _ in 0..3 {
                row[rng.gen_range(0..n)] = rng.gen_range(-1.0..1.0);
            }
        }
        let mut t = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let v: f64 =
                    (0..n).map(|k| b[k][i] * b[k][j]).sum::<f64>() + if i == j { 1.0 } else { 0.0 };
                if v != 0.0 {
                    t.push((i, j, v));
                }
            }
        }
        CsrMatrix::from_triplets(n, n, &t, true)
    }

    #[test]
    fn triplets_sum_duplicates() {
        let m = CsrMatrix::from_triplets(2, 3, &[(0, 2, 1.0), (1, 0, 2.0), (0, 2, 0.5)], false);
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(0, 2), 1.5);
        assert_eq!(m.mul_vec(&[1.0, 0.0, 2.0]), vec![3.0, 2.0]);
        assert_eq!(m.mul_transpose_vec(&[1.0, 1.0]), vec![2.0, 0.0, 1.5]);
    }

    #[test]
    fn identity_factor() {
        let f = factorize_spd(&identity(2)).unwrap();
        assert_eq!(f.solve(&[3.0, -4.0]).unwrap(), vec![3.0, -4.0]);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let f = factorize_spd(&laplace_1d(7)).unwrap();
        assert!(f.solve(&[0.0; 7]).unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn random_spd_recovers_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let a = random_spd(10, &mut rng);
            let x_star: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b = a.mul_vec(&x_star);
            let f = factorize_spd(&a).unwrap();
            let x = f.solve(&b).unwrap();
            for (xi, si) in x.iter().zip(&x_star) {
                assert!((xi - si).abs() < 1e-10);
            }
            let r: Vec<f64> = a.mul_vec(&x).iter().zip(&b).map(|(p, q)| p - q).collect();
            assert!(norm(&r) <= 1e-10 * norm(&b));
        }
    }

    #[test]
    fn singular_matrix_rejected() {
        // pure Neumann 1D Laplacian: constants in the kernel
        let mut t = Vec::new();
        let n = 6;
        for i in 0..n - 1 {
            t.extend([
                (i, i, 1.0),
                (i + 1, i + 1, 1.0),
                (i, i + 1, -1.0),
                (i + 1, i, -1.0),
            ]);
        }
        let a = CsrMatrix::from_triplets(n, n, &t, true);
        assert!(matches!(
            factorize_spd(&a),
            Err(Error::NotPositiveDefinite { .. })
        ));
        let neg = CsrMatrix::from_triplets(1, 1, &[(0, 0, -1.0)], true);
        assert!(factorize_spd(&neg).is_err());
    }

    #[test]
    fn repeated_solves_are_bitwise_identical() {
        let f = factorize_spd(&laplace_1d(50)).unwrap();
        let b: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let x1 = f.solve(&b).unwrap();
        let x2 = f.solve(&b).unwrap();
        assert!(x1.iter().zip(&x2).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn dimension_mismatch_reported() {
        let f = factorize_spd(&laplace_1d(3)).unwrap();
        assert!(matches!(
            f.solve(&[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn cg_identity_one_iteration() {
        let b = vec![1.0, 2.0, 3.0];
        let out = cg_solve(|x, y| y.copy_from_slice(x), &b, 1e-12, 10).unwrap();
        assert_eq!(out.iterations, 1);
        assert_eq!(out.x, b);
    }

    #[test]
    fn cg_diagonal_operator() {
        let d = [1.0, 4.0, 9.0, 16.0];
        let b = [2.0, 2.0, 2.0, 2.0];
        let out = cg_solve(
            |x, y| {
                for i in 0..4 {
                    y[i] = d[i] * x[i];
                }
            },
            &b,
            1e-14,
            10,
        )
        .unwrap();
        for i in 0..4 {
            assert!((out.x[i] - b[i] / d[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn cg_indefinite_breakdown() {
        let r = cg_solve(
            |x, y| {
                y[0] = -x[0];
                y[1] = x[1];
            },
            &[1.0, 0.0],
            1e-12,
            10,
        );
        assert!(matches!(r, Err(Error::Breakdown { .. })));
    }

    #[test]
    fn cg_iteration_limit_carries_iterate() {
        let a = laplace_1d(40);
        let b = vec![1.0; 40];
        match cg_solve(|x, y| a.mul_vec_into(x, y), &b, 1e-14, 3) {
            Err(Error::IterationLimit { best, .. }) => assert_eq!(best.len(), 40),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rcm_is_a_permutation() {
        let a = laplace_1d(17);
        let p = reverse_cuthill_mckee(&a);
        let mut s = p.clone();
        s.sort();
        assert_eq!(s, (0..17).collect::<Vec<_>>());
    }
}
