//! Square nonnegative matrices stored densely or as per-row neighbor lists.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Storage {
    /// Row-major `n × n`.
    Dense(Vec<f64>),
    /// CSR with column indices sorted within each row.
    Sparse {
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    storage: Storage,
}

pub enum RowIter<'a> {
    Dense(std::iter::Enumerate<std::slice::Iter<'a, f64>>),
    Sparse(std::iter::Zip<std::slice::Iter<'a, usize>, std::slice::Iter<'a, f64>>),
}

impl Iterator for RowIter<'_> {
    type Item = (usize, f64);

    fn next(&mut self) -> Option<(usize, f64)> {
        match self {
            RowIter::Dense(it) => it.next().map(|(j, &v)| (j, v)),
            RowIter::Sparse(it) => it.next().map(|(&j, &v)| (j, v)),
        }
    }
}

impl SquareMatrix {
    pub fn dense(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::shape((n, n), data.len()));
        }
        Ok(SquareMatrix {
            n,
            storage: Storage::Dense(data),
        })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        SquareMatrix {
            n,
            storage: Storage::Dense(data),
        }
    }

    /// Builds sparse storage from per-row `(column, value)` lists.
    pub fn from_rows(n: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        if rows.len() != n {
            return Err(Error::shape(n, rows.len()));
        }
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            for (j, v) in row {
                if j >= n {
                    return Err(Error::IndexOutOfRange { index: j, len: n });
                }
                indices.push(j);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        Ok(SquareMatrix {
            n,
            storage: Storage::Sparse {
                indptr,
                indices,
                values,
            },
        })
    }

    pub fn from_nalgebra(m: &DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::shape(m.shape(), "square"));
        }
        let n = m.nrows();
        let data = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)])
            .collect();
        SquareMatrix::dense(n, data)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse { .. })
    }

    pub fn nnz(&self) -> usize {
        match &self.storage {
            Storage::Dense(d) => d.len(),
            Storage::Sparse { values, .. } => values.len(),
        }
    }

    pub fn row(&self, i: usize) -> RowIter<'_> {
        match &self.storage {
            Storage::Dense(d) => RowIter::Dense(d[i * self.n..(i + 1) * self.n].iter().enumerate()),
            Storage::Sparse {
                indptr,
                indices,
                values,
            } => {
                let r = indptr[i]..indptr[i + 1];
                RowIter::Sparse(indices[r.clone()].iter().zip(values[r].iter()))
            }
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            Storage::Dense(d) => d[i * self.n + j],
            Storage::Sparse {
                indptr,
                indices,
                values,
            } => {
                let r = indptr[i]..indptr[i + 1];
                match indices[r.clone()].binary_search(&j) {
                    Ok(k) => values[r.start + k],
                    Err(_) => 0.0,
                }
            }
        }
    }

    /// Row-wise product; each row is summed in ascending column order.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::shape(self.n, x.len()));
        }
        Ok((0..self.n)
            .into_par_iter()
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect())
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.n];
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                s[j] += v;
            }
        }
        s
    }

    /// Applies `f(i, j, v)` to every stored entry, keeping the pattern.
    pub fn map_entries(&self, f: impl Fn(usize, usize, f64) -> f64) -> SquareMatrix {
        let storage = match &self.storage {
            Storage::Dense(d) => Storage::Dense(
                d.iter()
                    .enumerate()
                    .map(|(k, &v)| f(k / self.n, k % self.n, v))
                    .collect(),
            ),
            Storage::Sparse {
                indptr,
                indices,
                values,
            } => {
                let mut out = Vec::with_capacity(values.len());
                for i in 0..self.n {
                    for k in indptr[i]..indptr[i + 1] {
                        out.push(f(i, indices[k], values[k]));
                    }
                }
                Storage::Sparse {
                    indptr: indptr.clone(),
                    indices: indices.clone(),
                    values: out,
                }
            }
        };
        SquareMatrix { n: self.n, storage }
    }

    /// `max |A_ij − A_ji|` over stored entries.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn min_entry(&self) -> f64 {
        match &self.storage {
            Storage::Dense(d) => d.iter().cloned().fold(f64::INFINITY, f64::min),
            Storage::Sparse { values, .. } => values.iter().cloned().fold(f64::INFINITY, f64::min),
        }
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v)))
            .collect()
    }

    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparse_and_dense_agree() {
        let dense = SquareMatrix::dense(3, vec![2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0]).unwrap();
        let sparse = SquareMatrix::from_rows(
            3,
            vec![
                vec![(1, 1.0), (0, 2.0)],
                vec![(0, 1.0), (1, 2.0), (2, 1.0)],
                vec![(1, 1.0), (2, 2.0)],
            ],
        )
        .unwrap();
        let x = [0.3, -1.0, 2.5];
        assert_eq!(dense.matvec(&x).unwrap(), sparse.matvec(&x).unwrap());
        assert_eq!(dense.row_sums(), sparse.row_sums());
        assert_eq!(sparse.get(0, 2), 0.0);
        assert_eq!(sparse.get(2, 1), 1.0);
        assert_eq!(sparse.max_asymmetry(), 0.0);
        assert_eq!(dense.to_nalgebra(), sparse.to_nalgebra());
        assert!(dense.matvec(&[1.0]).is_err());
    }

    #[test]
    fn column_index_is_checked() {
        assert!(SquareMatrix::from_rows(1, vec![vec![(3, 1.0)]]).is_err());
    }
}
