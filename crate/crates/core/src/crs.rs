//! Systematic Cauchy Reed-Solomon codes.
//!
//! A distribution matrix is the `k x k` identity stacked over an `s x k`
//! Cauchy matrix with entries `1 / (x_i - y_j)`. Under the canonical sets
//! `x_i = i - 1` and `y_j = order - j`, the matrix for `k + 1` columns is the
//! matrix for `k` columns with one extra column, which is what makes appends
//! cheap: the parity of an extended codeword is the old parity plus the new
//! symbol times the new column.

use std::collections::HashSet;

use thiserror::Error;

use crate::field::{FieldError, FieldSpec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodeError {
    #[error("code needs {needed} distinct field elements but {field} has only {order}")]
    CapacityExceeded { needed: u64, order: u64, field: FieldSpec },
    #[error("evaluation sets overlap or repeat element {0}")]
    InvalidSets(u64),
    #[error("expected {expected} symbols, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("only {present} of the {needed} symbols needed for decoding survive")]
    Unrecoverable { present: usize, needed: usize },
    #[error("surviving blocks differ in length")]
    RaggedBlocks,
    #[error("row selection is singular")]
    Singular,
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// `i`-th canonical `x` value (1-based): `i - 1`.
pub fn canonical_x(i: usize) -> u64 {
    i as u64 - 1
}

/// `j`-th canonical `y` value (1-based): `order - j`.
pub fn canonical_y(field: FieldSpec, j: usize) -> u64 {
    field.order() - j as u64
}

/// Column `col` (1-based) of the canonical `s`-row Cauchy matrix, computed
/// without materializing the rest of the matrix.
pub fn canonical_column(field: FieldSpec, s: usize, col: usize) -> Result<Vec<u64>, CodeError> {
    check_capacity(field, s as u64 + col as u64)?;
    let y = canonical_y(field, col);
    (1..=s)
        .map(|i| Ok(field.inv(field.sub(canonical_x(i), y))?))
        .collect()
}

fn check_capacity(field: FieldSpec, needed: u64) -> Result<(), CodeError> {
    if needed > field.order() {
        return Err(CodeError::CapacityExceeded { needed, order: field.order(), field });
    }
    Ok(())
}

/// The evaluation sets `X` (one per parity row) and `Y` (one per message column).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CauchySets {
    xs: Vec<u64>,
    ys: Vec<u64>,
}

impl CauchySets {
    /// Validates canonical elements, distinctness within each set, and disjointness.
    pub fn new(field: FieldSpec, xs: Vec<u64>, ys: Vec<u64>) -> Result<Self, CodeError> {
        let mut seen = HashSet::with_capacity(xs.len() + ys.len());
        for &v in xs.iter().chain(&ys) {
            field.element(v)?;
            if !seen.insert(v) {
                return Err(CodeError::InvalidSets(v));
            }
        }
        Ok(CauchySets { xs, ys })
    }

    /// `X = {0, .., s-1}`, `Y = {order-1, order-2, .., order-k}` in that order.
    pub fn canonical(s: usize, k: usize, field: FieldSpec) -> Result<Self, CodeError> {
        check_capacity(field, s as u64 + k as u64)?;
        Ok(CauchySets {
            xs: (1..=s).map(canonical_x).collect(),
            ys: (1..=k).map(|j| canonical_y(field, j)).collect(),
        })
    }

    pub fn xs(&self) -> &[u64] {
        &self.xs
    }

    pub fn ys(&self) -> &[u64] {
        &self.ys
    }
}

/// An `n x k` systematic distribution matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistributionMatrix {
    field: FieldSpec,
    sets: CauchySets,
    // s rows of k entries
    cauchy: Vec<Vec<u64>>,
}

impl DistributionMatrix {
    pub fn build(sets: CauchySets, field: FieldSpec) -> Result<Self, CodeError> {
        check_capacity(field, (sets.xs.len() + sets.ys.len()) as u64)?;
        let cauchy = sets
            .xs
            .iter()
            .map(|&x| {
                sets.ys
                    .iter()
                    .map(|&y| field.inv(field.sub(x, y)))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(DistributionMatrix { field, sets, cauchy })
    }

    /// Canonical `(n, k)` code.
    pub fn canonical(n: usize, k: usize, field: FieldSpec) -> Result<Self, CodeError> {
        assert!(n >= k, "codeword shorter than message");
        Self::build(CauchySets::canonical(n - k, k, field)?, field)
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn sets(&self) -> &CauchySets {
        &self.sets
    }

    pub fn n_rows(&self) -> usize {
        self.k_cols() + self.parity_rows()
    }

    pub fn k_cols(&self) -> usize {
        self.sets.ys.len()
    }

    pub fn parity_rows(&self) -> usize {
        self.sets.xs.len()
    }

    /// The Cauchy part, one `Vec` per parity row.
    pub fn cauchy(&self) -> &[Vec<u64>] {
        &self.cauchy
    }

    /// Entry at 0-based `(row, col)` of the full `n x k` matrix.
    pub fn entry(&self, row: usize, col: usize) -> u64 {
        let k = self.k_cols();
        if row < k {
            u64::from(row == col)
        } else {
            self.cauchy[row - k][col]
        }
    }

    pub fn encode(&self, message: &[u64]) -> Result<Vec<u64>, CodeError> {
        self.check_len(message.len())?;
        let f = self.field;
        let mut out = message.to_vec();
        out.extend(self.cauchy.iter().map(|row| {
            row.iter().zip(message).fold(0, |acc, (&a, &m)| f.add(acc, f.mul(a, m)))
        }));
        Ok(out)
    }

    /// Parity blocks for a message of `k` equal-length chunk vectors.
    pub fn parity_blocks(&self, message: &[&[u64]]) -> Result<Vec<Vec<u64>>, CodeError> {
        self.check_len(message.len())?;
        let width = message.first().map_or(0, |m| m.len());
        Ok(self
            .cauchy
            .iter()
            .map(|row| {
                let mut acc = vec![0; width];
                for (&a, m) in row.iter().zip(message) {
                    self.field.mul_add_slice(&mut acc, m, a);
                }
                acc
            })
            .collect())
    }

    /// Recovers the message from a codeword with erasures (`None`).
    pub fn decode_erasures(&self, symbols: &[Option<u64>]) -> Result<Vec<u64>, CodeError> {
        let wrapped: Vec<Option<[u64; 1]>> = symbols.iter().map(|s| s.map(|v| [v])).collect();
        let refs: Vec<Option<&[u64]>> = wrapped.iter().map(|s| s.as_ref().map(|v| &v[..])).collect();
        Ok(self.decode_blocks(&refs)?.into_iter().map(|v| v[0]).collect())
    }

    /// Block-wise erasure decoding. Surviving systematic rows are used as-is;
    /// each missing message position is solved from the lowest-index surviving
    /// parity rows via a square Cauchy subsystem.
    pub fn decode_blocks(&self, symbols: &[Option<&[u64]>]) -> Result<Vec<Vec<u64>>, CodeError> {
        let k = self.k_cols();
        if symbols.len() != self.n_rows() {
            return Err(CodeError::LengthMismatch { expected: self.n_rows(), got: symbols.len() });
        }
        let present = symbols.iter().filter(|s| s.is_some()).count();
        if present < k {
            return Err(CodeError::Unrecoverable { present, needed: k });
        }
        let width = symbols.iter().flatten().next().map_or(0, |s| s.len());
        if symbols.iter().flatten().any(|s| s.len() != width) {
            return Err(CodeError::RaggedBlocks);
        }
        let missing: Vec<usize> = (0..k).filter(|&j| symbols[j].is_none()).collect();
        let mut message: Vec<Vec<u64>> =
            (0..k).map(|j| symbols[j].map_or_else(|| vec![0; width], <[u64]>::to_vec)).collect();
        if missing.is_empty() {
            return Ok(message);
        }
        let parity: Vec<usize> =
            (0..self.parity_rows()).filter(|&l| symbols[k + l].is_some()).take(missing.len()).collect();

        let f = self.field;
        // rhs_l = p_l - sum over known columns of a_lj * m_j
        let rhs: Vec<Vec<u64>> = parity
            .iter()
            .map(|&l| {
                let mut acc = symbols[k + l].unwrap().to_vec();
                for j in (0..k).filter(|j| symbols[*j].is_some()) {
                    let coef = f.neg(self.cauchy[l][j]);
                    f.mul_add_slice(&mut acc, &message[j], coef);
                }
                acc
            })
            .collect();
        let sub: Vec<Vec<u64>> =
            parity.iter().map(|&l| missing.iter().map(|&j| self.cauchy[l][j]).collect()).collect();
        let inv = invert(f, sub).ok_or(CodeError::Singular)?;
        for (t, &j) in missing.iter().enumerate() {
            let slot = &mut message[j];
            for (r, rhs_r) in rhs.iter().enumerate() {
                f.mul_add_slice(slot, rhs_r, inv[t][r]);
            }
        }
        Ok(message)
    }

    /// Inverse of the `k x k` submatrix formed by the given 0-based rows.
    pub fn submatrix_inverse(&self, rows: &[usize]) -> Result<Vec<Vec<u64>>, CodeError> {
        self.check_len(rows.len())?;
        let sub = rows.iter().map(|&r| (0..self.k_cols()).map(|c| self.entry(r, c)).collect()).collect();
        invert(self.field, sub).ok_or(CodeError::Singular)
    }

    /// Appends one message column using the next canonical `y`
    /// (`order - (k + 1)`); the parity-row count stays fixed.
    pub fn extend(&self) -> Result<Self, CodeError> {
        let mut next = self.clone();
        next.extend_in_place()?;
        Ok(next)
    }

    /// Appends one message column with an explicitly chosen `y`.
    pub fn extend_with(&self, y: u64) -> Result<Self, CodeError> {
        let mut next = self.clone();
        next.push_column(y)?;
        Ok(next)
    }

    pub fn extend_in_place(&mut self) -> Result<(), CodeError> {
        check_capacity(self.field, self.n_rows() as u64 + 1)?;
        let y = canonical_y(self.field, self.k_cols() + 1);
        self.push_column(y)
    }

    fn push_column(&mut self, y: u64) -> Result<(), CodeError> {
        check_capacity(self.field, self.n_rows() as u64 + 1)?;
        self.field.element(y)?;
        if self.sets.xs.contains(&y) || self.sets.ys.contains(&y) {
            return Err(CodeError::InvalidSets(y));
        }
        let f = self.field;
        let column =
            self.sets.xs.iter().map(|&x| f.inv(f.sub(x, y))).collect::<Result<Vec<_>, _>>()?;
        for (row, a) in self.cauchy.iter_mut().zip(column) {
            row.push(a);
        }
        self.sets.ys.push(y);
        Ok(())
    }

    /// Change to each parity symbol caused by the symbol occupying the last
    /// column: `new_symbol * a_{l,k}` for every parity row `l`.
    pub fn parity_delta(&self, new_symbol: u64) -> Vec<u64> {
        let f = self.field;
        self.cauchy.iter().map(|row| f.mul(new_symbol, *row.last().unwrap())).collect()
    }

    fn check_len(&self, got: usize) -> Result<(), CodeError> {
        if got != self.k_cols() {
            return Err(CodeError::LengthMismatch { expected: self.k_cols(), got });
        }
        Ok(())
    }
}

/// Gauss-Jordan inversion of a square matrix; `None` if singular.
pub(crate) fn invert(f: FieldSpec, mut a: Vec<Vec<u64>>) -> Option<Vec<Vec<u64>>> {
    let n = a.len();
    let mut inv: Vec<Vec<u64>> = (0..n).map(|i| (0..n).map(|j| u64::from(i == j)).collect()).collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| a[r][col] != 0)?;
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let scale = f.inv(a[col][col]).ok()?;
        for v in a[col].iter_mut() {
            *v = f.mul(*v, scale);
        }
        for v in inv[col].iter_mut() {
            *v = f.mul(*v, scale);
        }
        for r in 0..n {
            if r != col && a[r][col] != 0 {
                let factor = f.neg(a[r][col]);
                let (pa, pi) = (a[col].clone(), inv[col].clone());
                f.mul_add_slice(&mut a[r], &pa, factor);
                f.mul_add_slice(&mut inv[r], &pi, factor);
            }
        }
    }
    Some(inv)
}
