//! Symmetric sparse matrices with P1 block structure and the two linear
//! solvers used by Newton: envelope Cholesky and Jacobi-preconditioned CG.

use crate::error::{Error, Result};
use crate::mesh::TriMesh;

/// Compressed sparse row matrix with sorted column indices.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map(|k| vals[k]).unwrap_or(0.0)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).map(|(&j, v)| v * x[j]).sum()
            })
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                row[j] = v;
            }
        }
        d
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).all(|(&j, &v)| self.get(j, i) == v)
        })
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }
}

/// Sparsity pattern of an `n`-component P1 operator on a mesh. Degrees of
/// freedom are node-major (`node * n + component`), every node row holds the
/// full `n x n` block of each neighbouring node.
#[derive(Clone, Debug)]
pub struct BlockSparsity {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    /// For each element and local pair (a, b): position of node b in the
    /// neighbour list of node a.
    local_slots: Vec<[[usize; 3]; 3]>,
}

impl BlockSparsity {
    pub fn new(mesh: &TriMesh, n: usize) -> Self {
        let n_nodes = mesh.n_nodes();
        let mut row_ptr = Vec::with_capacity(n_nodes * n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for node in 0..n_nodes {
            let nb = mesh.neighbors(node);
            for _ in 0..n {
                for &m in nb {
                    col_idx.extend((0..n).map(|j| m * n + j));
                }
                row_ptr.push(col_idx.len());
            }
        }
        let local_slots = mesh
            .elements()
            .iter()
            .map(|tri| {
                let mut slots = [[0; 3]; 3];
                for (a, &na) in tri.iter().enumerate() {
                    let nb = mesh.neighbors(na);
                    for (b, &nbn) in tri.iter().enumerate() {
                        slots[a][b] = nb
                            .binary_search(&nbn)
                            .expect("element nodes are neighbours");
                    }
                }
                slots
            })
            .collect();
        Self {
            n,
            row_ptr,
            col_idx,
            local_slots,
        }
    }

    pub fn n_components(&self) -> usize {
        self.n
    }

    /// Sums element matrices (row-major `3n x 3n`, local dof `a * n + i`)
    /// into a global matrix in element order.
    pub fn assemble<'a, I>(&self, elements: &[[usize; 3]], locals: I) -> CsrMatrix
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let n = self.n;
        let ln = 3 * n;
        let mut values = vec![0.0; self.col_idx.len()];
        for ((tri, slots), local) in elements.iter().zip(&self.local_slots).zip(locals) {
            for a in 0..3 {
                for i in 0..n {
                    let row = tri[a] * n + i;
                    let start = self.row_ptr[row];
                    for b in 0..3 {
                        let base = start + slots[a][b] * n;
                        let lrow = &local[(a * n + i) * ln + b * n..(a * n + i) * ln + b * n + n];
                        for (v, l) in values[base..base + n].iter_mut().zip(lrow) {
                            *v += l;
                        }
                    }
                }
            }
        }
        CsrMatrix {
            n: self.row_ptr.len() - 1,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values,
        }
    }
}

/// Cholesky factor in envelope (skyline) storage: row `i` keeps columns
/// `first[i]..=i`.
#[derive(Clone, Debug)]
pub struct EnvelopeCholesky {
    first: Vec<usize>,
    offsets: Vec<usize>,
    data: Vec<f64>,
}

impl EnvelopeCholesky {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.dim();
        let mut first = Vec::with_capacity(n);
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for i in 0..n {
            let (cols, _) = a.row(i);
            let f = cols.first().copied().unwrap_or(i).min(i);
            first.push(f);
            offsets.push(offsets[i] + (i - f + 1));
        }
        let mut data = vec![0.0; offsets[n]];
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j <= i {
                    data[offsets[i] + j - first[i]] = v;
                }
            }
        }

        for i in 0..n {
            let fi = first[i];
            let oi = offsets[i];
            for j in fi..=i {
                let fj = first[j];
                let oj = offsets[j];
                let k0 = fi.max(fj);
                let mut s = data[oi + j - fi];
                let row_i = &data[oi + k0 - fi..oi + j - fi];
                let row_j = &data[oj + k0 - fj..oj + j - fj];
                s -= row_i.iter().zip(row_j).map(|(x, y)| x * y).sum::<f64>();
                if j < i {
                    data[oi + j - fi] = s / data[oj + j - fj];
                } else {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::LinearSolveFailure(format!(
                            "matrix not positive definite at pivot {i} ({s:e})"
                        )));
                    }
                    data[oi + i - fi] = s.sqrt();
                }
            }
        }
        Ok(Self {
            first,
            offsets,
            data,
        })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.first.len();
        let mut y = b.to_vec();
        for i in 0..n {
            let (fi, oi) = (self.first[i], self.offsets[i]);
            let row = &self.data[oi..oi + i - fi];
            let s: f64 = row.iter().zip(&y[fi..i]).map(|(l, x)| l * x).sum();
            y[i] = (y[i] - s) / self.data[oi + i - fi];
        }
        for i in (0..n).rev() {
            let (fi, oi) = (self.first[i], self.offsets[i]);
            y[i] /= self.data[oi + i - fi];
            let yi = y[i];
            for (k, l) in (fi..i).zip(&self.data[oi..oi + i - fi]) {
                y[k] -= l * yi;
            }
        }
        y
    }
}

/// Jacobi-preconditioned conjugate gradients. Returns the solution and the
/// iteration count.
pub fn conjugate_gradient(
    a: &CsrMatrix,
    b: &[f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize)> {
    let n = a.dim();
    let inv_diag: Vec<f64> = a
        .diagonal()
        .into_iter()
        .map(|d| {
            if d > 0.0 {
                Ok(1.0 / d)
            } else {
                Err(Error::LinearSolveFailure(format!(
                    "non-positive diagonal {d:e}"
                )))
            }
        })
        .collect::<Result<_>>()?;
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    let b_norm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok((x, 0));
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        let ap = a.mul_vec(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::LinearSolveFailure(format!(
                "cg breakdown: p'Ap = {pap:e} at iteration {it}"
            )));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if dot(&r, &r).sqrt() <= rel_tol * b_norm {
            return Ok((x, it));
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::LinearSolveFailure(format!(
        "cg did not reach {rel_tol:e} in {max_iter} iterations"
    )))
}
