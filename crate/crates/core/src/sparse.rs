//! Compressed sparse row matrices assembled from coordinate triplets, plus the sparse LU
//! solve used by the scheme.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub data: Vec<f64>,
}

pub type Triplet = (usize, usize, f64);

impl Csr {
    /// Sorts triplets by (row, column) with a stable sort, so duplicates are summed in the
    /// order they were produced; the result is independent of how work was split.
    pub fn from_triplets(nrows: usize, ncols: usize, mut trips: Vec<Triplet>) -> Csr {
        trips.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(trips.len());
        let mut data: Vec<f64> = Vec::with_capacity(trips.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in trips {
            assert!(r < nrows && c < ncols, "triplet ({r},{c}) outside {nrows}x{ncols}");
            if last == Some((r, c)) {
                *data.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                data.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        Csr { nrows, ncols, indptr, indices, data }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Csr {
        Csr { nrows, ncols, indptr: vec![0; nrows + 1], indices: vec![], data: vec![] }
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.indptr[r]..self.indptr[r + 1]).map(move |i| (self.indices[i], self.data[i]))
    }

    pub fn triplets(&self) -> Vec<Triplet> {
        (0..self.nrows).flat_map(|r| self.row(r).map(move |(c, v)| (r, c, v))).collect()
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.ncols);
        DVector::from_fn(self.nrows, |r, _| self.row(r).map(|(c, v)| v * x[c]).sum())
    }

    pub fn transpose(&self) -> Csr {
        let trips = self.triplets().into_iter().map(|(r, c, v)| (c, r, v)).collect();
        Csr::from_triplets(self.ncols, self.nrows, trips)
    }

    pub fn mul(&self, other: &Csr) -> Csr {
        assert_eq!(self.ncols, other.nrows);
        let mut trips = Vec::new();
        let mut acc = vec![0.0; other.ncols];
        let mut touched = vec![false; other.ncols];
        let mut cols = Vec::new();
        for r in 0..self.nrows {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if !touched[c] {
                        touched[c] = true;
                        cols.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            cols.sort_unstable();
            for &c in &cols {
                trips.push((r, c, acc[c]));
                acc[c] = 0.0;
                touched[c] = false;
            }
            cols.clear();
        }
        Csr::from_triplets(self.nrows, other.ncols, trips)
    }

    pub fn scale(&self, s: f64) -> Csr {
        let mut m = self.clone();
        m.data.iter_mut().for_each(|v| *v *= s);
        m
    }

    pub fn add(&self, other: &Csr) -> Csr {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut t = self.triplets();
        t.extend(other.triplets());
        Csr::from_triplets(self.nrows, self.ncols, t)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                m[(r, c)] += v;
            }
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// x^T A x.
    pub fn quad_form(&self, x: &DVector<f64>) -> f64 {
        x.dot(&self.mul_vec(x))
    }
}

#[derive(Debug, thiserror::Error)]
#[error("sparse LU factorization failed: {0}")]
pub struct SolveError(pub String);

/// Solves A x = b by sparse LU with fill-reducing ordering, run sequentially for reproducibility.
pub fn sparse_lu_solve(a: &Csr, b: &DVector<f64>) -> Result<DVector<f64>, SolveError> {
    use faer::sparse::{SparseColMat, Triplet as FTriplet};
    assert_eq!(a.nrows, a.ncols);
    let trips: Vec<FTriplet<usize, usize, f64>> =
        a.triplets().into_iter().map(|(r, c, v)| FTriplet::new(r, c, v)).collect();
    let m = SparseColMat::<usize, f64>::try_new_from_triplets(a.nrows, a.ncols, &trips)
        .map_err(|e| SolveError(format!("{e:?}")))?;
    faer::set_global_parallelism(faer::Par::Seq);
    let lu = m.sp_lu().map_err(|e| SolveError(format!("{e:?}")))?;
    let rhs = faer::Mat::<f64>::from_fn(b.len(), 1, |i, _| b[i]);
    let x = faer::prelude::Solve::solve(&lu, &rhs);
    let out = DVector::from_fn(b.len(), |i, _| x[(i, 0)]);
    if out.iter().any(|v| !v.is_finite()) {
        return Err(SolveError("non-finite solution (singular matrix)".into()));
    }
    Ok(out)
}
