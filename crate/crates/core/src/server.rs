//! Storage-server side of the protocol.
//!
//! A server holds one column of the share grid: `r = k~ + s~` cells, each a
//! block with its tag. It answers audits with aggregated linear combinations,
//! and on append it updates its own column parity from the new block alone.

use thiserror::Error;

use crate::auth::{Block, Fid, Tag};
use crate::client::{AppendOrder, ChallengeSet, ServerResponse};
use crate::crs::{canonical_column, CodeError};
use crate::field::FieldSpec;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ServerError {
    #[error("share shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("row {index} is outside 1..={r}")]
    IndexOutOfRange { index: usize, r: usize },
    #[error("append order targets counter {got} but server expects {expected}")]
    StaleOrder { expected: u64, got: u64 },
    #[error("append order addressed to {0}")]
    WrongTarget(String),
    #[error(transparent)]
    Code(#[from] CodeError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    pub block: Block,
    pub tag: Tag,
}

/// Column-code shape and counter a share is stored under.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShareParams {
    pub ktilde: usize,
    pub stilde: usize,
    pub chunks: usize,
    pub ctr: u64,
}

/// Work done by one [`ServerState::apply_append`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AppendStats {
    /// Field multiplications on block data.
    pub field_mults: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServerState {
    server: usize,
    fid: Fid,
    field: FieldSpec,
    ktilde: usize,
    stilde: usize,
    ctr: u64,
    chunks: usize,
    cells: Vec<Cell>,
}

impl ServerState {
    /// Initializes (or wholesale replaces) a share for 1-based server index `server`.
    pub fn store_share(
        server: usize,
        fid: Fid,
        field: FieldSpec,
        params: ShareParams,
        cells: Vec<Cell>,
    ) -> Result<Self, ServerError> {
        if server == 0 {
            return Err(ServerError::ShapeMismatch("server indices start at 1".into()));
        }
        if params.ktilde + params.stilde != cells.len() {
            return Err(ServerError::ShapeMismatch(format!(
                "k~ + s~ = {} but {} cells supplied",
                params.ktilde + params.stilde,
                cells.len()
            )));
        }
        if params.chunks == 0 {
            return Err(ServerError::ShapeMismatch("blocks need at least one chunk".into()));
        }
        for (i, cell) in cells.iter().enumerate() {
            if cell.block.len() != params.chunks || cell.tag.len() != params.chunks {
                return Err(ServerError::ShapeMismatch(format!(
                    "cell {} has {}/{} chunks, expected {}",
                    i + 1,
                    cell.block.len(),
                    cell.tag.len(),
                    params.chunks
                )));
            }
            if cell.block.iter().chain(cell.tag.iter()).any(|&v| !field.is_canonical(v)) {
                return Err(ServerError::ShapeMismatch(format!("cell {} holds non-field values", i + 1)));
            }
        }
        Ok(ServerState {
            server,
            fid,
            field,
            ktilde: params.ktilde,
            stilde: params.stilde,
            ctr: params.ctr,
            chunks: params.chunks,
            cells,
        })
    }

    pub fn server(&self) -> usize {
        self.server
    }

    pub fn fid(&self) -> Fid {
        self.fid
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn ktilde(&self) -> usize {
        self.ktilde
    }

    pub fn stilde(&self) -> usize {
        self.stilde
    }

    pub fn r(&self) -> usize {
        self.cells.len()
    }

    pub fn ctr(&self) -> u64 {
        self.ctr
    }

    pub fn chunks(&self) -> usize {
        self.chunks
    }

    pub fn params(&self) -> ShareParams {
        ShareParams { ktilde: self.ktilde, stilde: self.stilde, chunks: self.chunks, ctr: self.ctr }
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    /// Direct access for fault injection.
    pub fn cells_mut(&mut self) -> &mut [Cell] {
        &mut self.cells
    }

    /// `mu = sum nu_i * m_i`, `sigma = sum nu_i * sigma_i`, chunk-wise.
    pub fn prove(&self, q: &ChallengeSet) -> Result<ServerResponse, ServerError> {
        let mut mu = vec![0; self.chunks];
        let mut sigma = vec![0; self.chunks];
        for &(i, nu) in q.entries() {
            let cell = self.read_block(i)?;
            self.field.mul_add_slice(&mut mu, &cell.block, nu);
            self.field.mul_add_slice(&mut sigma, &cell.tag, nu);
        }
        Ok(ServerResponse { mu, sigma })
    }

    /// Applies one append: inserts the new data cell at row `k~ + 1`, folds the
    /// new block into every column parity block, and shifts parity tags by the
    /// client-supplied deltas. Existing data cells are not read.
    pub fn apply_append(&mut self, order: &AppendOrder) -> Result<AppendStats, ServerError> {
        if order.fid != self.fid || order.server != self.server {
            return Err(ServerError::WrongTarget(format!("{}/server {}", order.fid, order.server)));
        }
        if order.ctr != self.ctr + 1 || order.row != self.ktilde + 1 {
            return Err(ServerError::StaleOrder { expected: self.ctr + 1, got: order.ctr });
        }
        if order.deltas.len() != self.stilde {
            return Err(ServerError::ShapeMismatch(format!(
                "{} tag deltas for {} parity rows",
                order.deltas.len(),
                self.stilde
            )));
        }
        let shape_ok = order.block.len() == self.chunks
            && order.tag.len() == self.chunks
            && order.deltas.iter().all(|d| d.len() == self.chunks);
        if !shape_ok {
            return Err(ServerError::ShapeMismatch("append order chunk count".into()));
        }
        let new_row = self.ktilde + 1;
        let column = canonical_column(self.field, self.stilde, new_row)?;
        let mut stats = AppendStats::default();
        for (l, (coef, delta)) in column.iter().zip(&order.deltas).enumerate() {
            let cell = &mut self.cells[self.ktilde + l];
            self.field.mul_add_slice(&mut cell.block, &order.block, *coef);
            self.field.add_slice(&mut cell.tag, delta);
            stats.field_mults += self.chunks as u64;
        }
        self.cells.insert(
            self.ktilde,
            Cell { block: order.block.clone(), tag: order.tag.clone() },
        );
        self.ktilde = new_row;
        self.ctr = order.ctr;
        Ok(stats)
    }

    /// The stored cell at 1-based row `i`.
    pub fn read_block(&self, i: usize) -> Result<&Cell, ServerError> {
        if i == 0 || i > self.cells.len() {
            return Err(ServerError::IndexOutOfRange { index: i, r: self.cells.len() });
        }
        Ok(&self.cells[i - 1])
    }

    /// Verbatim copy of the share for client-side reconstruction.
    pub fn dump_all(&self) -> ServerState {
        self.clone()
    }
}
