use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use super::basis::BasisTag;
use crate::error::{Error, Result};

/// Largest dimension for which dense conversion is permitted.
pub const MAX_DENSE_DIM: usize = 4096;

/// Sparse matrix in coordinate form.
///
/// Entries are unique per `(row, col)`, sorted row-major, and never exactly
/// zero.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    dim: usize,
    basis: BasisTag,
    entries: Vec<(usize, usize, C64)>,
    hermitian: bool,
}

impl OperatorMatrix {
    /// Builds from possibly repeated triplets; duplicates are summed.
    pub fn from_triplets(
        basis: BasisTag,
        dim: usize,
        triplets: impl IntoIterator<Item = (usize, usize, C64)>,
    ) -> Result<Self> {
        let mut acc: BTreeMap<(usize, usize), C64> = BTreeMap::new();
        for (r, c, v) in triplets {
            if r >= dim || c >= dim {
                return Err(Error::domain(format!(
                    "entry ({r}, {c}) outside a {dim}x{dim} operator"
                )));
            }
            *acc.entry((r, c)).or_default() += v;
        }
        let entries = acc
            .into_iter()
            .filter(|(_, v)| *v != C64::new(0.0, 0.0))
            .map(|((r, c), v)| (r, c, v))
            .collect();
        Ok(OperatorMatrix {
            dim,
            basis,
            entries,
            hermitian: false,
        })
    }

    pub fn zeros(basis: BasisTag, dim: usize) -> Self {
        OperatorMatrix {
            dim,
            basis,
            entries: Vec::new(),
            hermitian: true,
        }
    }

    /// Checks Hermiticity to the given relative tolerance and flags the
    /// operator; fails if the check does not pass.
    pub fn into_hermitian(mut self, rel_tol: f64) -> Result<Self> {
        if !self.check_hermitian(rel_tol) {
            return Err(Error::Numerical(format!(
                "operator on {} is not Hermitian to {rel_tol:e}",
                self.basis
            )));
        }
        self.hermitian = true;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis(&self) -> BasisTag {
        self.basis
    }

    pub fn entries(&self) -> &[(usize, usize, C64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_flagged_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries
            .binary_search_by(|&(r, c, _)| (r, c).cmp(&(row, col)))
            .map(|i| self.entries[i].2)
            .unwrap_or_default()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|e| e.2.norm()).fold(0.0, f64::max)
    }

    /// Whether entry(i,j) = conj(entry(j,i)) within `rel_tol` of the largest
    /// magnitude.
    pub fn check_hermitian(&self, rel_tol: f64) -> bool {
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        self.entries
            .iter()
            .all(|&(r, c, v)| (v - self.get(c, r).conj()).norm() <= rel_tol * scale)
    }

    pub fn is_real(&self) -> bool {
        self.entries.iter().all(|e| e.2.im == 0.0)
    }

    pub fn adjoint(&self) -> Self {
        let mut entries: Vec<_> = self.entries.iter().map(|&(r, c, v)| (c, r, v.conj())).collect();
        entries.sort_by_key(|&(r, c, _)| (r, c));
        OperatorMatrix {
            entries,
            ..self.clone()
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        let entries = if s == 0.0 {
            Vec::new()
        } else {
            self.entries.iter().map(|&(r, c, v)| (r, c, v * s)).collect()
        };
        OperatorMatrix {
            entries,
            ..self.clone()
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_space(other)?;
        let merged = self.entries.iter().chain(other.entries.iter()).copied();
        let mut out = Self::from_triplets(self.basis, self.dim, merged)?;
        out.hermitian = self.hermitian && other.hermitian;
        Ok(out)
    }

    /// Sparse product `self · other`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.same_space(other)?;
        let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); self.dim];
        for &(r, c, v) in &other.entries {
            rows[r].push((c, v));
        }
        let triplets = self.entries.iter().flat_map(|&(i, k, a)| {
            rows[k].iter().map(move |&(j, b)| (i, j, a * b))
        });
        Self::from_triplets(self.basis, self.dim, triplets.collect::<Vec<_>>())
    }

    fn same_space(&self, other: &Self) -> Result<()> {
        if self.basis != other.basis || self.dim != other.dim {
            return Err(Error::domain(format!(
                "operator spaces differ: {} vs {}",
                self.basis, other.basis
            )));
        }
        Ok(())
    }

    pub fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        let mut out = DVector::zeros(self.dim);
        for &(r, c, a) in &self.entries {
            out[r] += a * v[c];
        }
        out
    }

    /// `self · m` for a dense `m`.
    pub fn mul_dense(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(self.dim, m.ncols());
        for &(r, c, a) in &self.entries {
            for j in 0..m.ncols() {
                out[(r, j)] += a * m[(c, j)];
            }
        }
        out
    }

    /// `m · self†` for a dense `m`.
    pub fn dense_mul_adjoint(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(m.nrows(), self.dim);
        // (m A†)_{ik} = Σ_j m_{ij} conj(A_{kj})
        for &(k, j, a) in &self.entries {
            let a = a.conj();
            for i in 0..m.nrows() {
                out[(i, k)] += m[(i, j)] * a;
            }
        }
        out
    }

    /// `m · self` for a dense `m`.
    pub fn dense_mul(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(m.nrows(), self.dim);
        for &(j, k, a) in &self.entries {
            for i in 0..m.nrows() {
                out[(i, k)] += m[(i, j)] * a;
            }
        }
        out
    }

    pub fn to_dense(&self) -> Result<DMatrix<C64>> {
        self.dense_guard()?;
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for &(r, c, v) in &self.entries {
            m[(r, c)] = v;
        }
        Ok(m)
    }

    /// Dense real matrix, or `None` if any entry has an imaginary part.
    pub fn to_dense_real(&self) -> Result<Option<DMatrix<f64>>> {
        self.dense_guard()?;
        if !self.is_real() {
            return Ok(None);
        }
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for &(r, c, v) in &self.entries {
            m[(r, c)] = v.re;
        }
        Ok(Some(m))
    }

    fn dense_guard(&self) -> Result<()> {
        if self.dim > MAX_DENSE_DIM {
            return Err(Error::domain(format!(
                "dense conversion refused for dimension {} > {MAX_DENSE_DIM}",
                self.dim
            )));
        }
        Ok(())
    }

    /// Dense principal block on the given indices.
    pub fn submatrix(&self, indices: &[usize]) -> DMatrix<C64> {
        let pos: std::collections::HashMap<usize, usize> =
            indices.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        let mut m = DMatrix::zeros(indices.len(), indices.len());
        for &(r, c, v) in &self.entries {
            if let (Some(&i), Some(&j)) = (pos.get(&r), pos.get(&c)) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Re-expresses the operator in another basis through an index map
    /// `new_index[old] = Some(new)`. Entries touching unmapped indices must be
    /// zero, otherwise the operator leaves the target space.
    pub fn reindexed(
        &self,
        basis: BasisTag,
        dim: usize,
        new_index: &[Option<usize>],
    ) -> Result<Self> {
        let mut triplets = Vec::with_capacity(self.entries.len());
        for &(r, c, v) in &self.entries {
            match (new_index[r], new_index[c]) {
                (Some(i), Some(j)) => triplets.push((i, j, v)),
                _ => {
                    return Err(Error::domain(format!(
                        "operator couples states outside {basis}"
                    )))
                }
            }
        }
        let mut out = Self::from_triplets(basis, dim, triplets)?;
        out.hermitian = self.hermitian;
        Ok(out)
    }
}
