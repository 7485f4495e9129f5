//! A small row-major dense complex matrix.
//!
//! Heavy factorizations are delegated to `faer`; this type is the exchange
//! format used across the crate and in reports.

use std::ops::{Index, IndexMut};

use faer::Mat;
use num_complex::Complex64;

use crate::error::{domain, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseComplexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

impl DenseComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return domain(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                entries.len()
            ));
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    /// Builds a matrix whose j-th column is `column(j)`.
    pub fn from_columns<F>(rows: usize, cols: usize, mut column: F) -> Result<Self>
    where
        F: FnMut(usize) -> Result<Vec<Complex64>>,
    {
        let mut m = Self::zeros(rows, cols);
        for j in 0..cols {
            let c = column(j)?;
            if c.len() != rows {
                return domain(format!("column {j} has length {}, expected {rows}", c.len()));
            }
            for (i, v) in c.into_iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.cols {
            return domain(format!(
                "matrix has {} columns but vector has length {}",
                self.cols,
                x.len()
            ));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest Euclidean column norm; a lower bound on the spectral norm.
    pub fn max_column_norm(&self) -> f64 {
        (0..self.cols)
            .map(|j| {
                (0..self.rows)
                    .map(|i| self[(i, j)].norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub(crate) fn to_faer(&self) -> Mat<Complex64> {
        Mat::from_fn(self.rows, self.cols, |i, j| self[(i, j)])
    }
}

impl Index<(usize, usize)> for DenseComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        assert!(i < self.rows && j < self.cols, "index ({i}, {j}) out of bounds");
        &self.entries[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        assert!(i < self.rows && j < self.cols, "index ({i}, {j}) out of bounds");
        &mut self.entries[i * self.cols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn entry_count_is_checked() {
        assert!(DenseComplexMatrix::from_row_major(2, 2, vec![c(1.0, 0.0); 3]).is_err());
        let m = DenseComplexMatrix::from_row_major(1, 3, vec![c(1.0, 0.0); 3]).unwrap();
        assert_eq!(m.entries().len(), m.rows() * m.cols());
    }

    #[test]
    fn mul_vec_matches_hand_product() {
        let m = DenseComplexMatrix::from_row_major(
            2,
            2,
            vec![c(1.0, 0.0), c(0.0, 1.0), c(2.0, 0.0), c(0.0, 0.0)],
        )
        .unwrap();
        let y = m.mul_vec(&[c(1.0, 1.0), c(2.0, 0.0)]).unwrap();
        assert_eq!(y, vec![c(1.0, 3.0), c(2.0, 2.0)]);
        assert!(m.mul_vec(&[c(1.0, 0.0)]).is_err());
    }

    #[test]
    fn column_norm_bounds() {
        let m = DenseComplexMatrix::from_diagonal(&[c(3.0, 4.0), c(1.0, 0.0)]);
        assert_eq!(m.max_column_norm(), 5.0);
        assert_eq!(m.max_abs_entry(), 5.0);
        assert!((m.frobenius_norm() - 26f64.sqrt()).abs() < 1e-15);
    }
}
