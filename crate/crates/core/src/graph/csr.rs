use crate::nn::DenseMatrix;

/// Compressed sparse row matrix.
///
/// Invariants: `row_ptr[0] == 0`, `row_ptr[n_rows] == col_idx.len() == values.len()`,
/// and column indices are strictly increasing inside each row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets. Duplicate coordinates are summed.
    pub fn from_triplets(n_rows: usize, n_cols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|a| (a.0, a.1));
        let mut row_ptr = vec![0; n_rows + 1];
        let mut col_idx: Vec<usize> = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < n_rows && c < n_cols, "triplet ({r}, {c}) out of bounds");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            last = Some((r, c));
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            values.push(v);
        }
        for i in 0..n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    /// Entry `(r, c)`, zero when not stored.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        cols.binary_search(&c).map_or(0.0, |k| vals[k])
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.n_rows, self.n_cols);
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                out.set(r, c, v);
            }
        }
        out
    }

    /// Sparse times dense: `self * x`.
    pub fn spmm(&self, x: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.n_cols, x.rows(), "spmm shape mismatch");
        let mut out = DenseMatrix::zeros(self.n_rows, x.cols());
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            let out_row = out.row_mut(r);
            for (&c, &v) in cols.iter().zip(vals) {
                for (o, &b) in out_row.iter_mut().zip(x.row(c)) {
                    *o += v * b;
                }
            }
        }
        out
    }

    /// Checks the structural invariants. Used by tests and debug assertions.
    pub fn is_well_formed(&self) -> bool {
        self.row_ptr.len() == self.n_rows + 1
            && self.row_ptr[0] == 0
            && self.row_ptr[self.n_rows] == self.col_idx.len()
            && self.col_idx.len() == self.values.len()
            && self.row_ptr.windows(2).all(|w| w[0] <= w[1])
            && (0..self.n_rows).all(|r| {
                let (cols, _) = self.row(r);
                cols.windows(2).all(|w| w[0] < w[1]) && cols.iter().all(|&c| c < self.n_cols)
            })
    }

    /// `(i, j)` stored iff `(j, i)` stored, with equal values.
    pub fn is_symmetric(&self) -> bool {
        self.n_rows == self.n_cols
            && (0..self.n_rows).all(|r| {
                let (cols, vals) = self.row(r);
                cols.iter().zip(vals).all(|(&c, &v)| {
                    let (back_cols, back_vals) = self.row(c);
                    back_cols.binary_search(&r).is_ok_and(|k| back_vals[k] == v)
                })
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates_and_sort() {
        let m = CsrMatrix::from_triplets(2, 3, vec![(1, 2, 1.0), (0, 1, 2.0), (1, 0, 3.0), (1, 2, 0.5)]);
        assert!(m.is_well_formed());
        assert_eq!(m.row_ptr(), &[0, 1, 3]);
        assert_eq!(m.col_idx(), &[1, 0, 2]);
        assert_eq!(m.get(1, 2), 1.5);
        assert_eq!(m.get(0, 0), 0.0);
    }

    #[test]
    fn spmm_matches_dense_product() {
        let m = CsrMatrix::from_triplets(3, 3, vec![(0, 1, 1.0), (1, 0, 1.0), (1, 2, 2.0), (2, 1, 2.0)]);
        let x = DenseMatrix::from_rows(&[[1.0, 0.0], [2.0, 1.0], [3.0, -1.0]]);
        assert_eq!(m.spmm(&x), m.to_dense().matmul(&x));
        assert!(m.is_symmetric());
    }

    #[test]
    fn empty_rows_are_allowed() {
        let m = CsrMatrix::from_triplets(3, 3, vec![]);
        assert!(m.is_well_formed());
        assert_eq!(m.nnz(), 0);
        assert_eq!(m.spmm(&DenseMatrix::filled(3, 1, 1.0)), DenseMatrix::zeros(3, 1));
    }
}
