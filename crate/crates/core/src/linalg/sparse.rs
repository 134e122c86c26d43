use super::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triplet {
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

impl Triplet {
    pub fn new(row: usize, col: usize, value: f64) -> Self {
        Self { row, col, value }
    }
}

/// Compressed sparse row matrix with real entries.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from triplets; duplicates are summed and exact zeros dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[Triplet]) -> Self {
        let mut sorted: Vec<Triplet> = triplets.to_vec();
        sorted.sort_by_key(|t| (t.row, t.col));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        let mut rows = Vec::with_capacity(sorted.len());
        for t in &sorted {
            assert!(t.row < nrows && t.col < ncols, "triplet out of bounds");
            if last == Some((t.row, t.col)) {
                *values.last_mut().unwrap() += t.value;
            } else {
                indices.push(t.col);
                values.push(t.value);
                rows.push(t.row);
                last = Some((t.row, t.col));
            }
        }
        let keep: Vec<bool> = values.iter().map(|v| *v != 0.0).collect();
        let mut k_idx = Vec::with_capacity(indices.len());
        let mut k_val = Vec::with_capacity(values.len());
        for (((&r, &c), &v), &k) in rows.iter().zip(&indices).zip(&values).zip(&keep) {
            if k {
                indptr[r + 1] += 1;
                k_idx.push(c);
                k_val.push(v);
            }
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices: k_idx,
            values: k_val,
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

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|(c, _)| *c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn triplets(&self) -> Vec<Triplet> {
        (0..self.nrows)
            .flat_map(|i| self.row(i).map(move |(j, v)| Triplet::new(i, j, v)))
            .collect()
    }

    pub fn mul<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|i| self.row(i).fold(T::zero(), |acc, (j, v)| acc + T::from_real(v) * x[j]))
            .collect()
    }

    /// `y = A^T x`.
    pub fn mul_transpose<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![T::zero(); self.ncols];
        for (i, &xi) in x.iter().enumerate() {
            for (j, v) in self.row(i) {
                y[j] += T::from_real(v) * xi;
            }
        }
        y
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut d = nalgebra::DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                d[(i, j)] = v;
            }
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_sum_and_zeros_drop() {
        let t = [
            Triplet::new(0, 1, 2.0),
            Triplet::new(0, 1, 3.0),
            Triplet::new(1, 0, 1.0),
            Triplet::new(1, 1, 0.0),
        ];
        let a = CsrMatrix::from_triplets(2, 2, &t);
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.get(0, 1), 5.0);
        assert_eq!(a.mul(&[1.0, 1.0]), vec![5.0, 1.0]);
        assert_eq!(a.mul_transpose(&[1.0, 1.0]), vec![1.0, 5.0]);
    }
}
