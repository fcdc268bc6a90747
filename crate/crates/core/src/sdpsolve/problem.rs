use num_complex::Complex64;

use crate::hermat::ComplexMatrix;

/// One entry `a` at `(row, col)` of a Hermitian coefficient matrix acting on block `block`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Entry {
    pub block: usize,
    pub row: usize,
    pub col: usize,
    pub coeff: Complex64,
}

/// Real-linear functional `X ↦ Σ_b Re Tr(A_b X_b)` with Hermitian coefficient blocks `A_b`.
///
/// Built from terms `Re(w · X_b[i, j])`; off-diagonal terms are split symmetrically so the
/// coefficient matrices stay Hermitian.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearFunctional {
    pub(crate) entries: Vec<Entry>,
}

impl LinearFunctional {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `Re(w · X_block[i, j])`.
    pub fn add(&mut self, block: usize, i: usize, j: usize, w: Complex64) -> &mut Self {
        if w.re == 0.0 && w.im == 0.0 {
            return self;
        }
        if i == j {
            self.push(block, i, i, Complex64::new(w.re, 0.0));
        } else {
            // Re Tr(A X) picks up A_ij X_ji + A_ji X_ij = 2 Re(conj(A_ij) X_ij).
            self.push(block, i, j, w.conj() * 0.5);
            self.push(block, j, i, w * 0.5);
        }
        self
    }

    pub fn add_real(&mut self, block: usize, i: usize, j: usize, w: f64) -> &mut Self {
        self.add(block, i, j, Complex64::new(w, 0.0))
    }

    fn push(&mut self, block: usize, row: usize, col: usize, coeff: Complex64) {
        if let Some(e) = self
            .entries
            .iter_mut()
            .find(|e| e.block == block && e.row == row && e.col == col)
        {
            e.coeff += coeff;
        } else {
            self.entries.push(Entry {
                block,
                row,
                col,
                coeff,
            });
        }
    }

    /// Evaluates the functional on block-diagonal `x`.
    pub fn eval(&self, x: &[ComplexMatrix]) -> f64 {
        self.entries
            .iter()
            .map(|e| {
                let v = x[e.block][(e.col, e.row)];
                e.coeff.re * v.re - e.coeff.im * v.im
            })
            .sum()
    }

    /// Adds `scale · A` into the block matrices.
    pub(crate) fn accumulate(&self, scale: f64, out: &mut [ComplexMatrix]) {
        for e in &self.entries {
            out[e.block][(e.row, e.col)] += e.coeff * scale;
        }
    }

    pub(crate) fn frobenius_sq(&self) -> f64 {
        self.entries.iter().map(|e| e.coeff.norm_sqr()).sum()
    }

    pub(crate) fn max_block(&self) -> Option<usize> {
        self.entries.iter().map(|e| e.block).max()
    }

    pub(crate) fn max_index(&self, block: usize) -> Option<usize> {
        self.entries
            .iter()
            .filter(|e| e.block == block)
            .map(|e| e.row.max(e.col))
            .max()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Dense SDP over a block-diagonal Hermitian variable `X = diag(X_1, …, X_B) ⪰ 0`:
/// optimize `objective(X)` subject to `equalities[k].0(X) = equalities[k].1`.
///
/// Inequalities are expressed with 1×1 slack blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    pub block_dims: Vec<usize>,
    pub sense: Sense,
    pub objective: LinearFunctional,
    pub equalities: Vec<(LinearFunctional, f64)>,
}

impl SdpProblem {
    pub fn new(block_dims: Vec<usize>, sense: Sense) -> Self {
        Self {
            block_dims,
            sense,
            objective: LinearFunctional::new(),
            equalities: Vec::new(),
        }
    }

    /// Appends a block and returns its index.
    pub fn add_block(&mut self, dim: usize) -> usize {
        self.block_dims.push(dim);
        self.block_dims.len() - 1
    }

    pub fn add_equality(&mut self, f: LinearFunctional, rhs: f64) {
        self.equalities.push((f, rhs));
    }

    pub fn total_dim(&self) -> usize {
        self.block_dims.iter().sum()
    }
}
