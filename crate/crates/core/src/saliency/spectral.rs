//! Cotangent Laplacian and its lowest eigenpairs.
//!
//! The generalized problem `L x = lambda M x` with lumped mass `M` is solved
//! through the symmetric operator `M^-1/2 L M^-1/2`. Small problems go to a
//! dense solver; larger ones use shift-invert subspace iteration on a
//! reverse Cuthill-McKee ordered skyline Cholesky factor.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Point, Vector};

/// Symmetric sparse matrix in CSR form with both triangles stored.
#[derive(Debug, Clone)]
pub struct SparseSymmetric {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseSymmetric {
    /// Assembles from `(row, col, value)` triplets, summing duplicates and
    /// mirroring off-diagonal entries.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in triplets {
            rows[i].push((j, v));
            if i != j {
                rows[j].push((i, v));
            }
        }
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for (j, v) in row {
                if last == Some(j) {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(j);
                    vals.push(v);
                    last = Some(j);
                }
            }
            row_ptr.push(cols.len());
        }
        Self {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()]
            .iter()
            .copied()
            .zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|e| e.0 == j).map_or(0.0, |e| e.1)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .into_par_iter()
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Largest absolute row sum, an upper bound on the spectral radius.
    pub fn gershgorin_bound(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `D A D` for the diagonal `D = diag(scale)`.
    pub fn scaled(&self, scale: &[f64]) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out.vals[k] *= scale[i] * scale[self.cols[k]];
            }
        }
        out
    }
}

fn cot(a: &Vector, b: &Vector) -> Option<f64> {
    let s = a.cross(b).norm();
    let scale = a.norm() * b.norm();
    if scale == 0.0 || s <= 1e-14 * scale {
        None
    } else {
        Some(a.dot(b) / s)
    }
}

/// Positive semidefinite cotangent stiffness matrix and lumped (area / 3)
/// vertex masses.
pub fn cotangent_laplacian(
    vertices: &[Point],
    faces: &[[usize; 3]],
) -> Result<(SparseSymmetric, Vec<f64>)> {
    let n = vertices.len();
    if faces.is_empty() {
        return Err(Error::Spectral("mesh has no faces".into()));
    }
    let mut triplets = Vec::with_capacity(faces.len() * 9);
    let mut mass = vec![0.0; n];
    for f in faces {
        let area = 0.5
            * (vertices[f[1]] - vertices[f[0]])
                .cross(&(vertices[f[2]] - vertices[f[0]]))
                .norm();
        for c in 0..3 {
            let (k, i, j) = (f[c], f[(c + 1) % 3], f[(c + 2) % 3]);
            let w = cot(&(vertices[i] - vertices[k]), &(vertices[j] - vertices[k]))
                .ok_or_else(|| Error::Spectral("degenerate face".into()))?
                * 0.5;
            triplets.push((i, j, -w));
            triplets.push((i, i, w));
            triplets.push((j, j, w));
            mass[k] += area / 3.0;
        }
    }
    if let Some(v) = mass.iter().position(|m| *m <= 0.0) {
        return Err(Error::Spectral(format!("vertex {v} has no incident area")));
    }
    Ok((SparseSymmetric::from_triplets(n, &triplets), mass))
}

/// `M^-1/2 L M^-1/2`.
pub fn symmetric_operator(stiffness: &SparseSymmetric, mass: &[f64]) -> SparseSymmetric {
    let scale: Vec<f64> = mass.iter().map(|m| 1.0 / m.sqrt()).collect();
    stiffness.scaled(&scale)
}

/// Eigenpairs sorted by ascending eigenvalue.
#[derive(Debug, Clone)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, one per value.
    pub vectors: Vec<Vec<f64>>,
}

fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for i in 0..v.len() {
        if v[i].abs() > v[best].abs() + 1e-12 {
            best = i;
        }
    }
    if v.get(best).is_some_and(|x| *x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// `count` lowest eigenpairs via a full dense decomposition.
pub fn dense_eigenpairs(op: &SparseSymmetric, count: usize) -> Eigenpairs {
    let eig = op.to_dense().symmetric_eigen();
    let mut order: Vec<usize> = (0..op.dim()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let take = count.min(op.dim());
    let values = order[..take].iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order[..take]
        .iter()
        .map(|&i| {
            let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
            fix_sign(&mut v);
            v
        })
        .collect();
    Eigenpairs { values, vectors }
}

/// Reverse Cuthill-McKee permutation: `order[new] = old`.
pub fn reverse_cuthill_mckee(op: &SparseSymmetric) -> Vec<usize> {
    let n = op.dim();
    let degree: Vec<usize> = (0..n)
        .map(|i| op.row(i).filter(|e| e.0 != i).count())
        .collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let bfs = |start: usize, visited: &mut Vec<bool>, out: &mut Vec<usize>| {
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = queue.pop_front() {
            out.push(v);
            let mut next: Vec<usize> = op.row(v).map(|e| e.0).filter(|&u| !visited[u]).collect();
            next.sort_by_key(|&u| (degree[u], u));
            for u in next {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    };
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&v| (degree[v], v));
    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        // Move the start towards a pseudo-peripheral vertex: the last vertex of a
        // BFS from the seed.
        let mut probe_seen = visited.clone();
        let mut probe = Vec::new();
        bfs(seed, &mut probe_seen, &mut probe);
        let start = *probe.last().unwrap_or(&seed);
        bfs(start, &mut visited, &mut order);
    }
    order.reverse();
    order
}

/// Envelope (skyline) Cholesky factor `A = L L^T` of a permuted matrix.
#[derive(Debug, Clone)]
pub struct SkylineCholesky {
    perm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    data: Vec<f64>,
}

impl SkylineCholesky {
    /// Factors `op + shift * I`. Fails when the factor would exceed
    /// `max_entries` or the matrix is not positive definite.
    pub fn factor(op: &SparseSymmetric, shift: f64, max_entries: usize) -> Result<Self> {
        let n = op.dim();
        let perm = reverse_cuthill_mckee(op);
        let mut inverse = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inverse[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (new, &old) in perm.iter().enumerate() {
            for (j, _) in op.row(old) {
                first[new] = first[new].min(inverse[j]);
            }
        }
        let mut start = Vec::with_capacity(n + 1);
        let mut total = 0usize;
        for (i, f) in first.iter().enumerate() {
            start.push(total);
            total += i - f + 1;
        }
        start.push(total);
        if total > max_entries {
            return Err(Error::Spectral(format!(
                "Cholesky envelope of {total} entries exceeds the limit of {max_entries}"
            )));
        }
        let mut data = vec![0.0; total];
        for (new, &old) in perm.iter().enumerate() {
            for (j, v) in op.row(old) {
                let c = inverse[j];
                if c <= new {
                    data[start[new] + c - first[new]] += v;
                }
            }
            data[start[new] + new - first[new]] += shift;
        }
        for i in 0..n {
            let fi = first[i];
            for j in fi..i {
                let fj = first[j];
                let lo = fi.max(fj);
                let (head, tail) = data.split_at_mut(start[i]);
                let row_j = &head[start[j]..start[j + 1]];
                let row_i = &mut tail[..start[i + 1] - start[i]];
                let dot: f64 = row_i[lo - fi..j - fi]
                    .iter()
                    .zip(&row_j[lo - fj..j - fj])
                    .map(|(a, b)| a * b)
                    .sum();
                row_i[j - fi] = (row_i[j - fi] - dot) / row_j[j - fj];
            }
            let row_i = &mut data[start[i]..start[i + 1]];
            let (off, diag) = row_i.split_at_mut(i - fi);
            let d = diag[0] - off.iter().map(|x| x * x).sum::<f64>();
            if d.is_nan() || d <= 0.0 || !d.is_finite() {
                return Err(Error::Spectral("matrix is not positive definite".into()));
            }
            diag[0] = d.sqrt();
        }
        Ok(Self {
            perm,
            first,
            start,
            data,
        })
    }

    pub fn envelope_len(&self) -> usize {
        self.data.len()
    }

    /// Solves `(op + shift I) x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.perm.len();
        let mut z: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i + 1]];
            let dot: f64 = row[..i - fi]
                .iter()
                .zip(&z[fi..i])
                .map(|(a, b)| a * b)
                .sum();
            z[i] = (z[i] - dot) / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i + 1]];
            z[i] /= row[i - fi];
            let xi = z[i];
            for (zk, l) in z[fi..i].iter_mut().zip(&row[..i - fi]) {
                *zk -= l * xi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = z[new];
        }
        x
    }
}

/// Settings for [`shift_invert_eigenpairs`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubspaceOptions {
    /// Residual tolerance relative to the operator's Gershgorin bound.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub max_factor_entries: usize,
    pub seed: u64,
}

impl Default for SubspaceOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-11,
            max_iterations: 500,
            max_factor_entries: 60_000_000,
            seed: 0,
        }
    }
}

fn orthonormalize(m: DMatrix<f64>) -> DMatrix<f64> {
    m.qr().q()
}

/// `count` lowest eigenpairs of a positive semidefinite operator by subspace
/// iteration on `(op + shift I)^-1`.
pub fn shift_invert_eigenpairs(
    op: &SparseSymmetric,
    count: usize,
    opts: &SubspaceOptions,
) -> Result<Eigenpairs> {
    let n = op.dim();
    let count = count.min(n);
    if count == 0 {
        return Ok(Eigenpairs {
            values: Vec::new(),
            vectors: Vec::new(),
        });
    }
    let block = (2 * count).max(count + 8).min(n);
    let norm = op.gershgorin_bound().max(f64::MIN_POSITIVE);
    let mean_diag = (0..n).map(|i| op.get(i, i)).sum::<f64>() / n as f64;
    let shift = 1e-6 * mean_diag.max(f64::MIN_POSITIVE);
    let factor = SkylineCholesky::factor(op, shift, opts.max_factor_entries)?;

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut basis = orthonormalize(DMatrix::from_fn(n, block, |_, _| rng.gen_range(-1.0..1.0)));
    for _ in 0..opts.max_iterations {
        let solved: Vec<Vec<f64>> = (0..block)
            .into_par_iter()
            .map(|c| factor.solve(basis.column(c).as_slice()))
            .collect();
        let q = orthonormalize(DMatrix::from_fn(n, block, |r, c| solved[c][r]));
        let aq: Vec<Vec<f64>> = (0..block)
            .into_par_iter()
            .map(|c| op.mul_vec(q.column(c).as_slice()))
            .collect();
        let aq = DMatrix::from_fn(n, block, |r, c| aq[c][r]);
        let projected = q.transpose() * &aq;
        let projected = (&projected + projected.transpose()) * 0.5;
        let eig = projected.symmetric_eigen();
        let mut order: Vec<usize> = (0..block).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let rotation = DMatrix::from_fn(block, block, |r, c| eig.eigenvectors[(r, order[c])]);
        basis = &q * &rotation;
        let rotated_aq = aq * &rotation;
        let converged = (0..count).all(|c| {
            let theta = eig.eigenvalues[order[c]];
            let residual = (rotated_aq.column(c) - basis.column(c) * theta).norm();
            residual <= opts.tolerance * norm
        });
        if converged {
            let values = (0..count).map(|c| eig.eigenvalues[order[c]]).collect();
            let vectors = (0..count)
                .map(|c| {
                    let mut v: Vec<f64> = basis.column(c).iter().copied().collect();
                    let len = DVector::from_column_slice(&v).norm();
                    v.iter_mut().for_each(|x| *x /= len);
                    fix_sign(&mut v);
                    v
                })
                .collect();
            return Ok(Eigenpairs { values, vectors });
        }
    }
    Err(Error::Spectral(format!(
        "subspace iteration did not converge in {} iterations",
        opts.max_iterations
    )))
}
