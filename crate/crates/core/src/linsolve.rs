//! Block-sparse matrices for dG operators and their sparse LU factorisation.

use faer::linalg::solvers::Solve;
use faer::prelude::*;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Scalars with a sparse LU backend.
pub trait SparseLu: Sized + 'static {
    fn lu_factor(n: usize, t: &[Triplet<usize, usize, Self>]) -> Result<Lu<usize, Self>>;
    fn lu_solve(lu: &Lu<usize, Self>, b: &[Self]) -> Vec<Self>;
}

fn factor_impl<T: faer::traits::RealField + Copy>(
    n: usize,
    t: &[Triplet<usize, usize, T>],
) -> Result<Lu<usize, T>> {
    let mat = SparseColMat::<usize, T>::try_new_from_triplets(n, n, t)
        .map_err(|e| Error::Singular { dofs: n, detail: format!("{e:?}") })?;
    mat.sp_lu().map_err(|e| Error::Singular { dofs: n, detail: format!("{e:?}") })
}

fn solve_impl<T: faer::traits::RealField + Copy>(lu: &Lu<usize, T>, b: &[T]) -> Vec<T> {
    let rhs = Col::<T>::from_fn(b.len(), |i| b[i]);
    let x = lu.solve(&rhs);
    (0..b.len()).map(|i| x[i]).collect()
}

macro_rules! sparse_lu {
    ($t:ty) => {
        impl SparseLu for $t {
            fn lu_factor(n: usize, t: &[Triplet<usize, usize, Self>]) -> Result<Lu<usize, Self>> {
                factor_impl(n, t)
            }
            fn lu_solve(lu: &Lu<usize, Self>, b: &[Self]) -> Vec<Self> {
                solve_impl(lu, b)
            }
        }
    };
}

sparse_lu!(f32);
sparse_lu!(f64);

/// Square matrix made of dense `nloc × nloc` blocks coupling pairs of cells.
#[derive(Clone, Debug)]
pub struct BlockMatrix<T> {
    nloc: usize,
    rows: Vec<Vec<(usize, Vec<T>)>>,
}

impl<T: Real> BlockMatrix<T> {
    pub fn new(ncells: usize, nloc: usize) -> Self {
        BlockMatrix { nloc, rows: vec![Vec::new(); ncells] }
    }

    pub fn nloc(&self) -> usize {
        self.nloc
    }

    pub fn dim(&self) -> usize {
        self.rows.len() * self.nloc
    }

    /// Mutable row-major block for test cell `i` and trial cell `j`.
    pub fn block(&mut self, i: usize, j: usize) -> &mut [T] {
        let n = self.nloc;
        let row = &mut self.rows[i];
        let pos = match row.iter().position(|(c, _)| *c == j) {
            Some(p) => p,
            None => {
                row.push((j, vec![T::zero(); n * n]));
                row.len() - 1
            }
        };
        &mut row[pos].1
    }

    pub fn get(&self, r: usize, col: usize) -> T {
        let n = self.nloc;
        let (i, a) = (r / n, r % n);
        let (j, b) = (col / n, col % n);
        self.rows[i]
            .iter()
            .find(|(c, _)| *c == j)
            .map(|(_, blk)| blk[a * n + b])
            .unwrap_or(T::zero())
    }

    /// Adds `s` to every diagonal entry.
    pub fn add_identity(&mut self, s: T) {
        let n = self.nloc;
        for i in 0..self.rows.len() {
            let blk = self.block(i, i);
            for a in 0..n {
                blk[a * n + a] += s;
            }
        }
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        let n = self.nloc;
        let mut y = vec![T::zero(); self.dim()];
        for (i, row) in self.rows.iter().enumerate() {
            for (j, blk) in row {
                for a in 0..n {
                    let mut s = T::zero();
                    for b in 0..n {
                        s += blk[a * n + b] * x[j * n + b];
                    }
                    y[i * n + a] += s;
                }
            }
        }
        y
    }

    /// Dense copy, for small test systems.
    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let d = self.dim();
        let mut m = vec![vec![T::zero(); d]; d];
        let n = self.nloc;
        for (i, row) in self.rows.iter().enumerate() {
            for (j, blk) in row {
                for a in 0..n {
                    for b in 0..n {
                        m[i * n + a][j * n + b] += blk[a * n + b];
                    }
                }
            }
        }
        m
    }

    fn triplets(&self) -> Vec<Triplet<usize, usize, T>> {
        let n = self.nloc;
        let mut t = Vec::new();
        for (i, row) in self.rows.iter().enumerate() {
            for (j, blk) in row {
                for a in 0..n {
                    for b in 0..n {
                        let v = blk[a * n + b];
                        if v != T::zero() {
                            t.push(Triplet::new(i * n + a, j * n + b, v));
                        }
                    }
                }
            }
        }
        t
    }
}

/// Sparse LU factorisation of a [`BlockMatrix`].
pub struct Factored<T: Real> {
    lu: Lu<usize, T>,
    n: usize,
}

impl<T: Real> Factored<T> {
    pub fn new(m: &BlockMatrix<T>) -> Result<Self> {
        let n = m.dim();
        let lu = T::lu_factor(n, &m.triplets())?;
        Ok(Factored { lu, n })
    }

    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        assert_eq!(b.len(), self.n);
        let out = T::lu_solve(&self.lu, b);
        if let Some(i) = out.iter().position(|v| !v.is_finite()) {
            return Err(Error::Singular {
                dofs: self.n,
                detail: format!("non-finite solution entry at dof {i}"),
            });
        }
        Ok(out)
    }
}

/// Factorises and solves in one call.
pub fn solve<T: Real>(m: &BlockMatrix<T>, b: &[T]) -> Result<Vec<T>> {
    Factored::new(m)?.solve(b)
}
