use crate::error::{invalid, Result};

use super::dense::DenseMatrix;

/// Compressed sparse row matrix. Column indices are sorted and unique per row.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    offsets: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

/// Coordinate-format accumulator; duplicates are summed on conversion.
#[derive(Clone, Debug, Default)]
pub struct TripletBuilder {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(rows: usize, cols: usize, cap: usize) -> Self {
        Self {
            rows,
            cols,
            entries: Vec::with_capacity(cap),
        }
    }

    #[inline]
    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.entries.push((i, j, v));
    }

    pub fn extend(&mut self, other: TripletBuilder) {
        self.entries.extend(other.entries);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn build(self) -> SparseMatrix {
        SparseMatrix::from_triplets(self.rows, self.cols, &self.entries)
            .expect("builder indices are checked on push")
    }
}

fn insertion_sort(row: &mut [(usize, f64)]) {
    for k in 1..row.len() {
        let x = row[k];
        let mut m = k;
        while m > 0 && row[m - 1].0 > x.0 {
            row[m] = row[m - 1];
            m -= 1;
        }
        row[m] = x;
    }
}

impl SparseMatrix {
    /// Builds from (row, col, value) triplets, summing duplicates in input order.
    pub fn from_triplets(rows: usize, cols: usize, t: &[(usize, usize, f64)]) -> Result<Self> {
        Self::from_triplet_parts(rows, cols, &[t])
    }

    /// As [`from_triplets`](Self::from_triplets) for the concatenation of `parts`.
    pub fn from_triplet_parts(
        rows: usize,
        cols: usize,
        parts: &[&[(usize, usize, f64)]],
    ) -> Result<Self> {
        let mut counts = vec![0usize; rows + 1];
        for part in parts {
            for &(i, j, _) in part.iter() {
                if i >= rows || j >= cols {
                    return invalid(format!("triplet ({i},{j}) outside {rows}x{cols}"));
                }
                counts[i + 1] += 1;
            }
        }
        for i in 0..rows {
            counts[i + 1] += counts[i];
        }
        let total = counts[rows];
        let mut next = counts.clone();
        let mut bucket = vec![(0usize, 0.0f64); total];
        for part in parts {
            for &(i, j, v) in part.iter() {
                bucket[next[i]] = (j, v);
                next[i] += 1;
            }
        }
        let mut offsets = Vec::with_capacity(rows + 1);
        let mut indices = Vec::with_capacity(total);
        let mut values = Vec::with_capacity(total);
        offsets.push(0);
        for i in 0..rows {
            let row = &mut bucket[counts[i]..counts[i + 1]];
            // stable, so duplicate sums keep the input order
            if row.len() <= 32 {
                insertion_sort(row);
            } else {
                row.sort_by_key(|e| e.0);
            }
            let mut k = 0;
            while k < row.len() {
                let j = row[k].0;
                let mut s = 0.0;
                while k < row.len() && row[k].0 == j {
                    s += row[k].1;
                    k += 1;
                }
                indices.push(j);
                values.push(s);
            }
            offsets.push(indices.len());
        }
        Ok(Self {
            rows,
            cols,
            offsets,
            indices,
            values,
        })
    }

    pub fn from_csr(
        rows: usize,
        cols: usize,
        offsets: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if offsets.len() != rows + 1 || offsets[0] != 0 || *offsets.last().unwrap() != indices.len()
        {
            return invalid("bad CSR offsets");
        }
        if indices.len() != values.len() {
            return invalid("CSR index/value length mismatch");
        }
        for i in 0..rows {
            if offsets[i] > offsets[i + 1] {
                return invalid("CSR offsets not monotone");
            }
            let r = &indices[offsets[i]..offsets[i + 1]];
            if r.windows(2).any(|w| w[0] >= w[1]) || r.last().is_some_and(|&j| j >= cols) {
                return invalid(format!("CSR row {i} has unsorted or out-of-range columns"));
            }
        }
        Ok(Self {
            rows,
            cols,
            offsets,
            indices,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            offsets: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut m = Self::identity(d.len());
        m.values.copy_from_slice(d);
        m
    }

    pub fn from_dense(a: &DenseMatrix) -> Self {
        let mut t = Vec::new();
        for i in 0..a.rows() {
            for j in 0..a.cols() {
                if a[(i, j)] != 0.0 {
                    t.push((i, j, a[(i, j)]));
                }
            }
        }
        Self::from_triplets(a.rows(), a.cols(), &t).unwrap()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.offsets[i]..self.offsets[i + 1];
        (&self.indices[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (idx, val) = self.row(i);
        idx.binary_search(&j).map_or(0.0, |k| val[k])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols))
            .map(|i| self.get(i, i))
            .collect()
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(y.len(), self.rows);
        for (i, yi) in y.iter_mut().enumerate() {
            let (idx, val) = self.row(i);
            *yi = idx.iter().zip(val).map(|(&j, v)| v * x[j]).sum();
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.rows {
            let (idx, val) = self.row(i);
            for (&j, &v) in idx.iter().zip(val) {
                t.push((j, i, v));
            }
        }
        Self::from_triplets(self.cols, self.rows, &t).unwrap()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            let (idx, val) = self.row(i);
            for (&j, &v) in idx.iter().zip(val) {
                d[(i, j)] = v;
            }
        }
        d
    }

    /// `self · B` for dense `B`.
    pub fn mul_dense(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        if b.rows() != self.cols {
            return invalid("sparse-dense dimension mismatch");
        }
        let mut c = DenseMatrix::zeros(self.rows, b.cols());
        for i in 0..self.rows {
            let (idx, val) = self.row(i);
            let out = c.row_mut(i);
            for (&j, &v) in idx.iter().zip(val) {
                super::dense::axpy(v, b.row(j), out);
            }
        }
        Ok(c)
    }

    /// Submatrix with the listed rows and columns, renumbered in list order.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> SparseMatrix {
        let mut col_map = vec![usize::MAX; self.cols];
        for (k, &j) in cols.iter().enumerate() {
            col_map[j] = k;
        }
        if cols.windows(2).all(|w| w[0] < w[1]) {
            // the renumbering is monotone, so rows stay sorted
            let mut offsets = Vec::with_capacity(rows.len() + 1);
            let mut indices = Vec::new();
            let mut values = Vec::new();
            offsets.push(0);
            for &i in rows {
                let (idx, val) = self.row(i);
                for (&j, &v) in idx.iter().zip(val) {
                    if col_map[j] != usize::MAX {
                        indices.push(col_map[j]);
                        values.push(v);
                    }
                }
                offsets.push(indices.len());
            }
            return Self {
                rows: rows.len(),
                cols: cols.len(),
                offsets,
                indices,
                values,
            };
        }
        let mut t = Vec::new();
        for (r, &i) in rows.iter().enumerate() {
            let (idx, val) = self.row(i);
            for (&j, &v) in idx.iter().zip(val) {
                if col_map[j] != usize::MAX {
                    t.push((r, col_map[j], v));
                }
            }
        }
        Self::from_triplets(rows.len(), cols.len(), &t).unwrap()
    }

    /// Entrywise sum of two matrices of equal shape.
    pub fn add(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return invalid("sparse add shape mismatch");
        }
        let mut t = Vec::with_capacity(self.nnz() + other.nnz());
        for m in [self, other] {
            for i in 0..m.rows {
                let (idx, val) = m.row(i);
                t.extend(idx.iter().zip(val).map(|(&j, &v)| (i, j, v)));
            }
        }
        Self::from_triplets(self.rows, self.cols, &t)
    }

    /// Largest |A_ij − A_ji| relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        if self.rows != self.cols {
            return f64::INFINITY;
        }
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            let (idx, val) = self.row(i);
            for (&j, &v) in idx.iter().zip(val) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst / scale
    }
}
