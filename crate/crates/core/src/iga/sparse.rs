use faer::sparse::{SparseColMat, Triplet};

use crate::{Error, Result};

/// Coordinate-format matrix with sorted, merged entries.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseMatrix {
    pub nrows: usize,
    pub ncols: usize,
    /// `(row, col, value)` sorted by row then column, no duplicates.
    pub entries: Vec<(usize, usize, f64)>,
}

impl SparseMatrix {
    /// Sums duplicate entries.
    pub fn from_triplets(nrows: usize, ncols: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(t.len());
        for (i, j, v) in t {
            debug_assert!(i < nrows && j < ncols);
            match entries.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => entries.push((i, j, v)),
            }
        }
        Self {
            nrows,
            ncols,
            entries,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        for &(i, j, v) in &self.entries {
            y[i] += v * x[j];
        }
        y
    }

    /// `sum_j |a_ij|` per row.
    pub fn row_sums_abs(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.nrows];
        for &(i, _, v) in &self.entries {
            s[i] += v.abs();
        }
        s
    }

    pub fn frobenius(&self) -> f64 {
        self.entries.iter().map(|e| e.2 * e.2).sum::<f64>().sqrt()
    }

    /// `||A - A^T||_F / ||A||_F`.
    pub fn symmetry_defect(&self) -> f64 {
        let mut t: Vec<(usize, usize, f64)> = self.entries.iter().map(|&(i, j, v)| (i, j, v)).collect();
        t.extend(self.entries.iter().map(|&(i, j, v)| (j, i, -v)));
        let d = SparseMatrix::from_triplets(self.nrows.max(self.ncols), self.nrows.max(self.ncols), t);
        d.frobenius() / self.frobenius().max(f64::MIN_POSITIVE)
    }

    pub fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let t: Vec<_> = self
            .entries
            .iter()
            .map(|&(i, j, v)| Triplet::new(i, j, v))
            .collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &t)
            .map_err(|e| Error::InvalidArgument(format!("sparse matrix: {e:?}")))
    }
}
