//! Compressed-row matrices, triplet accumulation and Dirichlet elimination.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::fem::FemError;

/// Square or rectangular matrix in compressed-row form with sorted,
/// duplicate-free column indices in every row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from `(row, col, value)` triplets; duplicates are
    /// summed in the order they appear, so the result is deterministic.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self, FemError> {
        if let Some(&(r, c, _)) = triplets.iter().find(|&&(r, c, _)| r >= n_rows || c >= n_cols) {
            return Err(FemError::Assembly(format!(
                "entry ({r}, {c}) outside a {n_rows} x {n_cols} matrix"
            )));
        }
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        // stable: equal keys keep insertion order
        order.sort_by_key(|&k| (triplets[k].0, triplets[k].1));

        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len() / 2);
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len() / 2);
        let mut last: Option<(usize, usize)> = None;
        for k in order {
            let (r, c, v) = triplets[k];
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n_rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Ok(CsrMatrix {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut t = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != 0.0 {
                    t.push((i, j, m[(i, j)]));
                }
            }
        }
        CsrMatrix::from_triplets(m.nrows(), m.ncols(), &t).expect("indices are in range")
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

    pub fn same_pattern(&self, other: &CsrMatrix) -> bool {
        self.n_rows == other.n_rows
            && self.n_cols == other.n_cols
            && self.row_ptr == other.row_ptr
            && self.col_idx == other.col_idx
    }

    /// Iterates `(col, value)` over the stored entries of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols);
        (0..self.n_rows)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n_rows)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.n_rows {
            for (j, v) in self.row(i) {
                t.push((j, i, v));
            }
        }
        CsrMatrix::from_triplets(self.n_cols, self.n_rows, &t).expect("indices are in range")
    }

    /// Largest entry of `|A - A^T|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n_rows {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Entrywise sum `self + scale * other`; the pattern is the union.
    pub fn add_scaled(&self, other: &CsrMatrix, scale: f64) -> CsrMatrix {
        assert_eq!((self.n_rows, self.n_cols), (other.n_rows, other.n_cols));
        let mut row_ptr = Vec::with_capacity(self.n_rows + 1);
        let mut col_idx = Vec::with_capacity(self.nnz().max(other.nnz()));
        let mut values = Vec::with_capacity(self.nnz().max(other.nnz()));
        row_ptr.push(0);
        for i in 0..self.n_rows {
            let mut a = self.row(i).peekable();
            let mut b = other.row(i).peekable();
            loop {
                match (a.peek().copied(), b.peek().copied()) {
                    (Some((ja, va)), Some((jb, vb))) if ja == jb => {
                        col_idx.push(ja);
                        values.push(va + scale * vb);
                        a.next();
                        b.next();
                    }
                    (Some((ja, va)), Some((jb, _))) if ja < jb => {
                        col_idx.push(ja);
                        values.push(va);
                        a.next();
                    }
                    (Some((ja, va)), None) => {
                        col_idx.push(ja);
                        values.push(va);
                        a.next();
                    }
                    (_, Some((jb, vb))) => {
                        col_idx.push(jb);
                        values.push(scale * vb);
                        b.next();
                    }
                    (None, None) => break,
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Column-compressed copy `(col_ptr, row_idx, values)`.
    pub(crate) fn to_csc(&self) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
        let mut col_ptr = vec![0usize; self.n_cols + 1];
        for &j in &self.col_idx {
            col_ptr[j + 1] += 1;
        }
        for j in 0..self.n_cols {
            col_ptr[j + 1] += col_ptr[j];
        }
        let mut next = col_ptr.clone();
        let mut row_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.n_rows {
            for (j, v) in self.row(i) {
                let slot = next[j];
                row_idx[slot] = i;
                values[slot] = v;
                next[j] += 1;
            }
        }
        (col_ptr, row_idx, values)
    }

    fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
}

/// Assembled linear system `A x = b` plus the Dirichlet constraints that have
/// been eliminated from it.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub constrained: BTreeMap<usize, f64>,
}

impl SparseSystem {
    pub fn new(matrix: CsrMatrix, rhs: Vec<f64>) -> Result<Self, FemError> {
        if matrix.n_rows() != matrix.n_cols() || matrix.n_rows() != rhs.len() {
            return Err(FemError::Assembly(format!(
                "inconsistent system: {} x {} matrix with rhs of length {}",
                matrix.n_rows(),
                matrix.n_cols(),
                rhs.len()
            )));
        }
        Ok(SparseSystem {
            matrix,
            rhs,
            constrained: BTreeMap::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    /// `b - A x`.
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let ax = self.matrix.mul_vec(x);
        self.rhs.iter().zip(ax).map(|(b, v)| b - v).collect()
    }
}

/// Accumulates element contributions as triplets.
#[derive(Debug, Clone)]
pub struct SystemBuilder {
    n: usize,
    triplets: Vec<(usize, usize, f64)>,
    rhs: Vec<f64>,
}

impl SystemBuilder {
    pub fn new(n: usize) -> Self {
        SystemBuilder {
            n,
            triplets: Vec::new(),
            rhs: vec![0.0; n],
        }
    }

    pub fn with_capacity(n: usize, entries: usize) -> Self {
        SystemBuilder {
            n,
            triplets: Vec::with_capacity(entries),
            rhs: vec![0.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn check(&self, dofs: &[usize]) -> Result<(), FemError> {
        match dofs.iter().find(|&&d| d >= self.n) {
            Some(d) => Err(FemError::Assembly(format!(
                "dof {d} out of range for a system of size {}",
                self.n
            ))),
            None => Ok(()),
        }
    }

    pub fn add_matrix(&mut self, dofs: &[usize], local: &DMatrix<f64>) -> Result<(), FemError> {
        if local.nrows() != dofs.len() || local.ncols() != dofs.len() {
            return Err(FemError::Assembly(format!(
                "local matrix is {} x {} but the element has {} dofs",
                local.nrows(),
                local.ncols(),
                dofs.len()
            )));
        }
        self.check(dofs)?;
        for (a, &ga) in dofs.iter().enumerate() {
            for (b, &gb) in dofs.iter().enumerate() {
                self.triplets.push((ga, gb, local[(a, b)]));
            }
        }
        Ok(())
    }

    pub fn add_vector(&mut self, dofs: &[usize], local: &DVector<f64>) -> Result<(), FemError> {
        if local.len() != dofs.len() {
            return Err(FemError::Assembly(format!(
                "local vector has length {} but the element has {} dofs",
                local.len(),
                dofs.len()
            )));
        }
        self.check(dofs)?;
        for (a, &ga) in dofs.iter().enumerate() {
            self.rhs[ga] += local[a];
        }
        Ok(())
    }

    pub fn add_entry(&mut self, i: usize, j: usize, v: f64) -> Result<(), FemError> {
        self.check(&[i, j])?;
        self.triplets.push((i, j, v));
        Ok(())
    }

    pub fn add_rhs(&mut self, i: usize, v: f64) -> Result<(), FemError> {
        self.check(&[i])?;
        self.rhs[i] += v;
        Ok(())
    }

    pub fn finish(self) -> Result<SparseSystem, FemError> {
        let matrix = CsrMatrix::from_triplets(self.n, self.n, &self.triplets)?;
        SparseSystem::new(matrix, self.rhs)
    }
}

/// Eliminates Dirichlet constraints symmetrically: constrained columns are
/// moved to the right-hand side and zeroed, constrained rows become identity
/// rows carrying the prescribed value. The sparsity pattern is preserved
/// (eliminated entries are stored as explicit zeros).
pub fn apply_dirichlet(
    mut system: SparseSystem,
    constraints: &[(usize, f64)],
) -> Result<SparseSystem, FemError> {
    let n = system.dim();
    let mut fixed: BTreeMap<usize, f64> = system.constrained.clone();
    for &(dof, value) in constraints {
        if dof >= n {
            return Err(FemError::Assembly(format!(
                "constraint on dof {dof} outside a system of size {n}"
            )));
        }
        if !value.is_finite() {
            return Err(FemError::InvalidArgument(format!(
                "constraint on dof {dof} has non-finite value {value}"
            )));
        }
        match fixed.get(&dof) {
            Some(&prev) if prev != value => {
                return Err(FemError::ConstraintConflict {
                    dof,
                    first: prev,
                    second: value,
                })
            }
            _ => {
                fixed.insert(dof, value);
            }
        }
    }
    if constraints.is_empty() {
        return Ok(system);
    }

    let mut is_fixed = vec![false; n];
    let mut value_of = vec![0.0; n];
    for (&d, &v) in &fixed {
        is_fixed[d] = true;
        value_of[d] = v;
    }

    // constrained rows need a stored diagonal
    let missing_diag: Vec<usize> = fixed
        .keys()
        .copied()
        .filter(|&d| system.matrix.row(d).all(|(j, _)| j != d))
        .collect();
    if !missing_diag.is_empty() {
        let patch = CsrMatrix::from_triplets(
            n,
            n,
            &missing_diag.iter().map(|&d| (d, d, 0.0)).collect::<Vec<_>>(),
        )?;
        system.matrix = system.matrix.add_scaled(&patch, 1.0);
    }

    let row_ptr = system.matrix.row_ptr.clone();
    let col_idx = system.matrix.col_idx.clone();
    let values = system.matrix.values_mut();
    for i in 0..n {
        for k in row_ptr[i]..row_ptr[i + 1] {
            let j = col_idx[k];
            if is_fixed[i] {
                values[k] = if i == j { 1.0 } else { 0.0 };
            } else if is_fixed[j] {
                system.rhs[i] -= values[k] * value_of[j];
                values[k] = 0.0;
            }
        }
    }
    for (&d, &v) in &fixed {
        system.rhs[d] = v;
    }
    system.constrained = fixed;
    Ok(system)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let m = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 0, 2.0), (0, 0, 3.0)]).unwrap();
        assert_eq!(m.get(0, 0), 4.0);
        assert_eq!(m.get(1, 0), 2.0);
        assert_eq!(m.get(1, 1), 0.0);
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn out_of_range_triplet_is_an_assembly_error() {
        assert!(matches!(
            CsrMatrix::from_triplets(2, 2, &[(2, 0, 1.0)]),
            Err(FemError::Assembly(_))
        ));
        let mut b = SystemBuilder::new(3);
        assert!(b.add_entry(0, 3, 1.0).is_err());
        assert!(b.add_matrix(&[0, 1], &DMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn add_scaled_unions_patterns() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, 1.0)]).unwrap();
        let b = CsrMatrix::from_triplets(2, 2, &[(0, 1, 2.0), (1, 1, 3.0)]).unwrap();
        let c = a.add_scaled(&b, -1.0);
        assert_eq!(c.to_dense(), DMatrix::from_row_slice(2, 2, &[1.0, -2.0, 0.0, -2.0]));
    }

    #[test]
    fn csc_copy_matches() {
        let a = CsrMatrix::from_triplets(3, 3, &[(0, 2, 1.0), (2, 0, 2.0), (1, 1, 3.0), (2, 2, 4.0)]).unwrap();
        let (cp, ri, v) = a.to_csc();
        assert_eq!(cp, vec![0, 1, 2, 4]);
        assert_eq!(ri, vec![2, 1, 0, 2]);
        assert_eq!(v, vec![2.0, 3.0, 1.0, 4.0]);
    }

    #[test]
    fn no_constraints_leaves_system_unchanged() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 2.0)]).unwrap();
        let sys = SparseSystem::new(a, vec![1.0, 2.0]).unwrap();
        let out = apply_dirichlet(sys.clone(), &[]).unwrap();
        assert_eq!(out, sys);
    }

    #[test]
    fn constrained_rows_become_identity_and_columns_vanish() {
        let a = CsrMatrix::from_triplets(
            3,
            3,
            &[(0, 0, 2.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 2.0), (1, 2, -1.0), (2, 1, -1.0), (2, 2, 2.0)],
        )
        .unwrap();
        let sys = SparseSystem::new(a, vec![0.0, 0.0, 0.0]).unwrap();
        let out = apply_dirichlet(sys, &[(0, 0.0), (2, 1.0)]).unwrap();
        assert_eq!(out.matrix.get(0, 0), 1.0);
        assert_eq!(out.matrix.get(0, 1), 0.0);
        assert_eq!(out.matrix.get(1, 2), 0.0);
        assert_eq!(out.rhs, vec![0.0, 1.0, 1.0]);
        assert!(out.matrix.asymmetry() == 0.0);
    }

    #[test]
    fn conflicting_constraints_are_rejected() {
        let sys = SparseSystem::new(CsrMatrix::identity(2), vec![0.0; 2]).unwrap();
        assert!(apply_dirichlet(sys.clone(), &[(1, 2.0), (1, 2.0)]).is_ok());
        assert!(matches!(
            apply_dirichlet(sys, &[(1, 2.0), (1, 3.0)]),
            Err(FemError::ConstraintConflict { dof: 1, .. })
        ));
    }

    #[test]
    fn missing_diagonal_is_inserted() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let sys = SparseSystem::new(a, vec![1.0, 1.0]).unwrap();
        let out = apply_dirichlet(sys, &[(0, 5.0)]).unwrap();
        assert_eq!(out.matrix.get(0, 0), 1.0);
        assert_eq!(out.rhs, vec![5.0, -4.0]);
    }
}
