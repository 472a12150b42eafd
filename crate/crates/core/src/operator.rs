//! Sparse complex operators on the spin ⊗ Fock product space.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Square complex matrix stored row-wise in compressed sparse form.
///
/// Entries within a row are sorted by column and explicit zeros are dropped,
/// so two operators with equal entries compare equal structurally.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
    hermitian: bool,
}

impl OperatorMatrix {
    /// Builds from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(
        dim: usize,
        triplets: impl IntoIterator<Item = (usize, usize, C64)>,
        hermitian: bool,
    ) -> Self {
        let mut rows: Vec<BTreeMap<usize, C64>> = vec![BTreeMap::new(); dim];
        for (r, c, v) in triplets {
            assert!(
                r < dim && c < dim,
                "triplet ({r}, {c}) out of range for dim {dim}"
            );
            *rows[r].entry(c).or_insert(C64::new(0.0, 0.0)) += v;
        }
        Self::from_rows(dim, rows, hermitian)
    }

    fn from_rows(dim: usize, rows: Vec<BTreeMap<usize, C64>>, hermitian: bool) -> Self {
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for (c, v) in row {
                if v.re != 0.0 || v.im != 0.0 {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        OperatorMatrix {
            dim,
            row_ptr,
            cols,
            vals,
            hermitian,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal((0..dim).map(|_| C64::new(1.0, 0.0)).collect(), true)
    }

    pub fn diagonal(diag: Vec<C64>, hermitian: bool) -> Self {
        let dim = diag.len();
        Self::from_triplets(
            dim,
            diag.into_iter().enumerate().map(|(i, v)| (i, i, v)),
            hermitian,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Whether the operator was constructed as Hermitian.
    pub fn hermitian_flag(&self) -> bool {
        self.hermitian
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Iterates the stored entries of one row as (column, value).
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.vals[span].iter().copied())
    }

    /// All stored entries as (row, col, value).
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[span.clone()].binary_search(&c) {
            Ok(k) => self.vals[span.start + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn to_dense(&self) -> Array2<C64> {
        let mut m = Array2::zeros((self.dim, self.dim));
        for (r, c, v) in self.entries() {
            m[[r, c]] = v;
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(
            self.dim,
            self.entries().map(|(r, c, v)| (c, r, v.conj())),
            self.hermitian,
        )
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= s);
        out.hermitian = self.hermitian && s.im == 0.0;
        out
    }

    /// Entry-wise linear combination `a·self + b·other`.
    pub fn axpby(&self, a: C64, other: &Self, b: C64) -> Result<Self> {
        self.check_dim(other.dim)?;
        let trip = self
            .entries()
            .map(|(r, c, v)| (r, c, a * v))
            .chain(other.entries().map(|(r, c, v)| (r, c, b * v)));
        let herm = self.hermitian && other.hermitian && a.im == 0.0 && b.im == 0.0;
        Ok(Self::from_triplets(self.dim, trip, herm))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.axpby(C64::new(1.0, 0.0), other, C64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpby(C64::new(1.0, 0.0), other, C64::new(-1.0, 0.0))
    }

    /// Sparse product `self · other`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other.dim)?;
        let mut rows: Vec<BTreeMap<usize, C64>> = vec![BTreeMap::new(); self.dim];
        for (r, acc) in rows.iter_mut().enumerate() {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    *acc.entry(c).or_insert(C64::new(0.0, 0.0)) += a * b;
                }
            }
        }
        Ok(Self::from_rows(self.dim, rows, false))
    }

    /// `[self, other] = self·other − other·self`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.matmul(other)?.sub(&other.matmul(self)?)
    }

    pub fn matvec(&self, x: &Array1<C64>) -> Result<Array1<C64>> {
        self.check_dim(x.len())?;
        Ok(Array1::from_iter(
            (0..self.dim).map(|r| self.row(r).map(|(c, v)| v * x[c]).sum::<C64>()),
        ))
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `max |self − other|` over all entries.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }

    /// `max |A − A†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.entries()
            .map(|(r, c, v)| (v - self.get(c, r).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// True when every stored entry has zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.vals.iter().all(|v| v.im == 0.0)
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got,
            });
        }
        Ok(())
    }
}
