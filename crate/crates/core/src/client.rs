//! Data-owner side: outsource, append, challenge, verify and redistribute.
//!
//! The file is laid out as a `k~ x k` grid of blocks (row-major). Each primary
//! column is extended with `s~` parity rows by the `(r, k~)` column code, then
//! every row is extended to `n` servers by the `(n, k)` row code. Cell `(i, j)`
//! is tagged under `(fid, i, j, 0)` when `i <= k~` and `(fid, i, j, ctr)`
//! otherwise, so stale parity rows stop verifying once the counter moves.

use std::collections::{HashSet, VecDeque};

use rand::{seq::index::sample, Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::auth::{tag_block, tag_delta, verify_block, AuthError, Block, Fid, SecretKey, Tag, TagContext};
use crate::crs::{canonical_column, CodeError, DistributionMatrix};
use crate::field::{FieldKind, FieldSpec};
use crate::server::{Cell, ServerError, ServerState, ShareParams};

/// Block size used by the binary profile.
pub const BINARY_BLOCK_BYTES: usize = 4096;
pub const DEFAULT_EPS_Q: f64 = 0.1;
pub const DEFAULT_EPS_P: f64 = 0.05;
pub const DEFAULT_WINDOW: usize = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClientError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("cannot outsource an empty file")]
    EmptyFile,
    #[error("{0} is too small to carry file bytes")]
    FieldTooSmall(FieldSpec),
    #[error("challenge size {l} outside 1..={r}")]
    ChallengeSize { l: usize, r: usize },
    #[error("invalid challenge: {0}")]
    InvalidChallenge(String),
    #[error("malformed proof: {0}")]
    MalformedProof(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Auth(#[from] AuthError),
    #[error(transparent)]
    Server(#[from] ServerError),
}

/// Parameters chosen at setup and copied into each file's metadata.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodeParams {
    pub field: FieldSpec,
    pub n: usize,
    pub k: usize,
    pub stilde0: usize,
    /// Field-element chunks per block.
    pub chunks: usize,
    pub eps_q: f64,
    pub eps_p: f64,
    pub window: usize,
    /// Lower bound on the initial number of data rows; short files are
    /// zero-padded up to it.
    pub min_rows: usize,
}

impl CodeParams {
    /// Defaults: one chunk per block in prime fields, 4 KB blocks in binary
    /// fields, thresholds 0.1 / 0.05, audit window 20.
    pub fn new(field: FieldSpec, n: usize, k: usize, stilde0: usize) -> Self {
        let chunks = match field.kind() {
            FieldKind::Prime => 1,
            FieldKind::Binary => BINARY_BLOCK_BYTES / field.element_size(),
        };
        CodeParams {
            field,
            n,
            k,
            stilde0,
            chunks,
            eps_q: DEFAULT_EPS_Q,
            eps_p: DEFAULT_EPS_P,
            window: DEFAULT_WINDOW,
            min_rows: 0,
        }
    }

    pub fn validate(&self) -> Result<(), ClientError> {
        let bad = |m: String| Err(ClientError::InvalidParams(m));
        if self.k == 0 || self.k >= self.n {
            return bad(format!("need 0 < k < n, got n={} k={}", self.n, self.k));
        }
        if self.n as u64 > self.field.order() {
            return bad(format!("n={} exceeds the order of {}", self.n, self.field));
        }
        if self.chunks == 0 {
            return bad("blocks need at least one chunk".into());
        }
        if !(0.0..=1.0).contains(&self.eps_q) || !(0.0..1.0).contains(&self.eps_p) {
            return bad(format!("thresholds out of range: eps_q={} eps_p={}", self.eps_q, self.eps_p));
        }
        if self.window == 0 {
            return bad("audit window must be positive".into());
        }
        Ok(())
    }
}

/// Client-held state for one outsourced file.
#[derive(Debug, Clone, PartialEq)]
pub struct FileMetadata {
    pub fid: Fid,
    pub field: FieldSpec,
    pub n: usize,
    pub k: usize,
    pub stilde: usize,
    pub ktilde: usize,
    pub ctr: u64,
    pub chunks: usize,
    pub original_length: u64,
    pub stilde0: usize,
    pub eps_q: f64,
    pub eps_p: f64,
    pub window: usize,
    /// Per-server recent audit outcomes, `true` for pass, oldest first.
    pub audit_history: Vec<VecDeque<bool>>,
}

impl FileMetadata {
    pub fn r(&self) -> usize {
        self.ktilde + self.stilde
    }

    pub fn s(&self) -> usize {
        self.n - self.k
    }

    pub fn block_bytes(&self) -> usize {
        self.chunks * self.field.packed_bytes()
    }

    /// Counter a cell in 1-based row `i` is tagged under.
    pub fn row_ctr(&self, i: usize) -> u64 {
        if i <= self.ktilde {
            0
        } else {
            self.ctr
        }
    }

    pub fn tag_context(&self, i: usize, j: usize) -> TagContext {
        TagContext::new(self.fid, i, j, self.row_ctr(i))
    }

    pub fn validate(&self) -> Result<(), ClientError> {
        let bad = |m: String| Err(ClientError::InvalidParams(m));
        if self.k == 0 || self.k >= self.n || self.n as u64 > self.field.order() {
            return bad(format!("bad dispersal code ({}, {})", self.n, self.k));
        }
        if self.ktilde == 0 || self.r() as u64 > self.field.order() {
            return bad(format!("bad column code ({}, {})", self.r(), self.ktilde));
        }
        if self.chunks == 0 || self.window == 0 {
            return bad("chunks and window must be positive".into());
        }
        if self.audit_history.len() != self.n || self.audit_history.iter().any(|h| h.len() > self.window) {
            return bad("audit history does not match n / window".into());
        }
        Ok(())
    }

    /// Appends one verdict per server, keeping only the last `window`.
    pub fn record_audit(&mut self, verdicts: &[bool]) {
        for (hist, &v) in self.audit_history.iter_mut().zip(verdicts) {
            hist.push_back(v);
            while hist.len() > self.window {
                hist.pop_front();
            }
        }
    }
}

/// Whether server `j` (1-based) failed more than `eps_q` of its recent audits.
pub fn needs_redistribute(meta: &FileMetadata, j: usize) -> bool {
    let Some(hist) = j.checked_sub(1).and_then(|idx| meta.audit_history.get(idx)) else {
        return false;
    };
    if hist.is_empty() {
        return false;
    }
    let failed = hist.iter().filter(|pass| !**pass).count();
    failed as f64 / hist.len() as f64 > meta.eps_q
}

/// Random spot-check: distinct 1-based rows, each with a coefficient.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChallengeSet {
    epoch: u64,
    entries: Vec<(usize, u64)>,
}

impl ChallengeSet {
    pub fn new(epoch: u64, entries: Vec<(usize, u64)>) -> Result<Self, ClientError> {
        if entries.is_empty() {
            return Err(ClientError::InvalidChallenge("empty challenge".into()));
        }
        let mut seen = HashSet::new();
        for &(i, _) in &entries {
            if i == 0 || !seen.insert(i) {
                return Err(ClientError::InvalidChallenge(format!("row {i} is zero or repeated")));
            }
        }
        Ok(ChallengeSet { epoch, entries })
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn entries(&self) -> &[(usize, u64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Samples `l` distinct rows of `[1, r]` with uniform coefficients.
pub fn challenge<R: Rng + ?Sized>(
    meta: &FileMetadata,
    l: usize,
    epoch: u64,
    rng: &mut R,
) -> Result<ChallengeSet, ClientError> {
    let r = meta.r();
    if l == 0 || l > r {
        return Err(ClientError::ChallengeSize { l, r });
    }
    let rows = sample(rng, r, l).into_vec();
    let entries = rows.into_iter().map(|i| (i + 1, meta.field.random(rng))).collect();
    Ok(ChallengeSet { epoch, entries })
}

/// [`challenge`] driven by a ChaCha20 stream seeded with `seed`.
pub fn challenge_seeded(meta: &FileMetadata, l: usize, epoch: u64, seed: u64) -> Result<ChallengeSet, ClientError> {
    challenge(meta, l, epoch, &mut ChaCha20Rng::seed_from_u64(seed))
}

/// Aggregated answer of one server.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServerResponse {
    pub mu: Vec<u64>,
    pub sigma: Vec<u64>,
}

/// Responses from all `n` servers; `None` marks a server that did not answer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditProof {
    pub responses: Vec<Option<ServerResponse>>,
}

impl AuditProof {
    /// Collects `prove` from every server; failures become absences.
    pub fn collect(servers: &[Option<ServerState>], q: &ChallengeSet) -> Self {
        let responses = servers
            .par_iter()
            .map(|s| s.as_ref().and_then(|s| s.prove(q).ok()))
            .collect();
        AuditProof { responses }
    }
}

/// What the client sends server `server` for one append.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppendOrder {
    pub fid: Fid,
    pub server: usize,
    /// Row index of the new data cell (`k~` after the append).
    pub row: usize,
    /// Counter after the append.
    pub ctr: u64,
    pub block: Block,
    pub tag: Tag,
    /// One tag delta per parity slot, top slot first.
    pub deltas: Vec<Tag>,
}

impl AppendOrder {
    /// Bytes of blocks and tags carried by the order, at on-disk element size.
    pub fn payload_bytes(&self, field: FieldSpec) -> usize {
        let elements = self.block.len() + self.tag.len() + self.deltas.iter().map(|d| d.len()).sum::<usize>();
        elements * field.element_size()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recovered {
    pub data: Vec<u8>,
    pub meta: FileMetadata,
    pub shares: Vec<ServerState>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Redistribution {
    Recovered(Box<Recovered>),
    Unavailable,
}

/// The data owner: secret key plus setup parameters.
#[derive(Debug, Clone)]
pub struct Client {
    sk: SecretKey,
    params: CodeParams,
}

impl Client {
    pub fn setup<R: rand::RngCore + ?Sized>(params: CodeParams, rng: &mut R) -> Result<Self, ClientError> {
        params.validate()?;
        Ok(Client { sk: SecretKey::generate(params.field, rng), params })
    }

    pub fn new(sk: SecretKey, params: CodeParams) -> Result<Self, ClientError> {
        params.validate()?;
        sk.check_field(params.field)?;
        Ok(Client { sk, params })
    }

    pub fn secret_key(&self) -> &SecretKey {
        &self.sk
    }

    pub fn params(&self) -> &CodeParams {
        &self.params
    }

    /// Splits `data` into the block grid, encodes, tags and returns one share per server.
    pub fn outsource<R: Rng + ?Sized>(
        &self,
        data: &[u8],
        rng: &mut R,
    ) -> Result<(FileMetadata, Vec<ServerState>), ClientError> {
        let p = &self.params;
        if data.is_empty() {
            return Err(ClientError::EmptyFile);
        }
        if p.field.packed_bytes() == 0 {
            return Err(ClientError::FieldTooSmall(p.field));
        }
        let block_bytes = p.chunks * p.field.packed_bytes();
        let blocks = data.len().div_ceil(block_bytes);
        let ktilde = blocks.div_ceil(p.k).max(p.min_rows).max(1);
        let needed = (ktilde + p.stilde0) as u64;
        if needed > p.field.order() {
            return Err(CodeError::CapacityExceeded { needed, order: p.field.order(), field: p.field }.into());
        }
        let meta = FileMetadata {
            fid: Fid::random(rng),
            field: p.field,
            n: p.n,
            k: p.k,
            stilde: p.stilde0,
            ktilde,
            ctr: 0,
            chunks: p.chunks,
            original_length: data.len() as u64,
            stilde0: p.stilde0,
            eps_q: p.eps_q,
            eps_p: p.eps_p,
            window: p.window,
            audit_history: vec![VecDeque::new(); p.n],
        };
        let rows = bytes_to_rows(&meta, data);
        let shares = self.build_shares(&meta, rows)?;
        Ok((meta, shares))
    }

    /// Encodes and tags a full share grid for `meta` from its data rows.
    fn build_shares(&self, meta: &FileMetadata, data_rows: Vec<Vec<Vec<u64>>>) -> Result<Vec<ServerState>, ClientError> {
        let grid = encode_grid(meta, data_rows)?;
        let f = meta.field;
        let params = ShareParams { ktilde: meta.ktilde, stilde: meta.stilde, chunks: meta.chunks, ctr: meta.ctr };
        (0..meta.n)
            .into_par_iter()
            .map(|j| {
                let cells = grid
                    .iter()
                    .enumerate()
                    .map(|(i, row)| {
                        let block = row[j].clone();
                        let tag = tag_block(&self.sk, f, &block, &meta.tag_context(i + 1, j + 1));
                        Cell { block: Block(block), tag }
                    })
                    .collect();
                Ok(ServerState::store_share(j + 1, meta.fid, f, params, cells)?)
            })
            .collect()
    }

    /// Prepares one append of `k` blocks. `meta` is updated only on success.
    pub fn append(&self, meta: &mut FileMetadata, row: &[Block]) -> Result<Vec<AppendOrder>, ClientError> {
        if row.len() != meta.k || row.iter().any(|b| b.len() != meta.chunks) {
            return Err(ClientError::ShapeMismatch(format!("append needs {} blocks of {} chunks", meta.k, meta.chunks)));
        }
        if row.iter().flat_map(|b| b.iter()).any(|&v| !meta.field.is_canonical(v)) {
            return Err(ClientError::ShapeMismatch("append blocks hold non-field values".into()));
        }
        let f = meta.field;
        let (k_old, ctr_old) = (meta.ktilde, meta.ctr);
        let (k_new, ctr_new) = (k_old + 1, ctr_old + 1);
        let column = canonical_column(f, meta.stilde, k_new)?;
        let row_code = DistributionMatrix::canonical(meta.n, meta.k, f)?;
        let refs: Vec<&[u64]> = row.iter().map(|b| &b[..]).collect();
        let mut blocks: Vec<Vec<u64>> = row.iter().map(|b| b.0.clone()).collect();
        blocks.extend(row_code.parity_blocks(&refs)?);

        let orders = blocks
            .into_par_iter()
            .enumerate()
            .map(|(jdx, block)| {
                let j = jdx + 1;
                let tag = tag_block(&self.sk, f, &block, &TagContext::new(meta.fid, k_new, j, 0));
                let deltas = column
                    .iter()
                    .enumerate()
                    .map(|(l, &coef)| {
                        let delta_m: Vec<u64> = block.iter().map(|&m| f.mul(m, coef)).collect();
                        let old = TagContext::new(meta.fid, k_old + l + 1, j, ctr_old);
                        let new = TagContext::new(meta.fid, k_new + l + 1, j, ctr_new);
                        tag_delta(&self.sk, f, &old, &new, &delta_m)
                    })
                    .collect();
                AppendOrder { fid: meta.fid, server: j, row: k_new, ctr: ctr_new, block: Block(block), tag, deltas }
            })
            .collect();
        meta.ktilde = k_new;
        meta.ctr = ctr_new;
        meta.original_length = (k_new * meta.k * meta.block_bytes()) as u64;
        Ok(orders)
    }

    /// Appends up to `k` blocks' worth of bytes as one zero-padded row.
    pub fn append_bytes(&self, meta: &mut FileMetadata, bytes: &[u8]) -> Result<Vec<AppendOrder>, ClientError> {
        let row_bytes = meta.k * meta.block_bytes();
        if bytes.is_empty() || bytes.len() > row_bytes {
            return Err(ClientError::ShapeMismatch(format!("append takes 1..={row_bytes} bytes, got {}", bytes.len())));
        }
        let row: Vec<Block> = bytes_to_row(meta, bytes).into_iter().map(Block).collect();
        let before = (meta.ktilde * row_bytes) as u64;
        let orders = self.append(meta, &row)?;
        meta.original_length = before + bytes.len() as u64;
        Ok(orders)
    }

    /// Per-server verdicts for `proof` without touching the audit history.
    pub fn check_proof(&self, meta: &FileMetadata, q: &ChallengeSet, proof: &AuditProof) -> Result<Vec<bool>, ClientError> {
        if proof.responses.len() != meta.n {
            return Err(ClientError::MalformedProof(format!("{} responses for {} servers", proof.responses.len(), meta.n)));
        }
        if let Some(&(i, _)) = q.entries().iter().find(|(i, _)| *i > meta.r()) {
            return Err(ClientError::InvalidChallenge(format!("row {i} beyond r = {}", meta.r())));
        }
        let f = meta.field;
        let c = meta.chunks;
        Ok(proof
            .responses
            .par_iter()
            .enumerate()
            .map(|(jdx, resp)| {
                let Some(resp) = resp else { return false };
                if resp.mu.len() != c || resp.sigma.len() != c {
                    return false;
                }
                let mut expected = vec![0u64; c];
                let mut prf = vec![0u64; c];
                for &(i, nu) in q.entries() {
                    self.sk.prf_row(f, &meta.tag_context(i, jdx + 1), &mut prf);
                    f.mul_add_slice(&mut expected, &prf, nu);
                }
                f.mul_add_slice(&mut expected, &resp.mu, self.sk.alpha());
                expected == resp.sigma
            })
            .collect())
    }

    /// Checks `proof` and records the verdicts in `meta`'s audit history.
    pub fn verify(&self, meta: &mut FileMetadata, q: &ChallengeSet, proof: &AuditProof) -> Result<Vec<bool>, ClientError> {
        let verdicts = self.check_proof(meta, q, proof)?;
        meta.record_audit(&verdicts);
        Ok(verdicts)
    }

    /// Rebuilds the file from full server dumps.
    ///
    /// Cells whose tag does not verify are erasures. Rows (up to `s` erasures
    /// each) and server columns (up to `s~` each) are decoded alternately until
    /// no more cells can be filled. On success the whole grid is re-encoded
    /// under the next counter and fresh shares are returned.
    pub fn redistribute(&self, meta: &FileMetadata, dumps: &[Option<ServerState>]) -> Result<Redistribution, ClientError> {
        meta.validate()?;
        self.sk.check_field(meta.field)?;
        if dumps.len() != meta.n {
            return Err(ClientError::MalformedProof(format!("{} dumps for {} servers", dumps.len(), meta.n)));
        }
        let f = meta.field;
        let (r, n, k, kt) = (meta.r(), meta.n, meta.k, meta.ktilde);

        // grid[i][j]: authenticated block or erasure
        let columns: Vec<Vec<Option<Vec<u64>>>> = dumps
            .par_iter()
            .enumerate()
            .map(|(jdx, dump)| {
                let usable = dump.as_ref().filter(|d| {
                    d.fid() == meta.fid && d.field() == f && d.server() == jdx + 1 && d.r() == r
                });
                (0..r)
                    .map(|idx| {
                        let cell = &usable?.cells()[idx];
                        let ctx = meta.tag_context(idx + 1, jdx + 1);
                        let ok = cell.block.len() == meta.chunks
                            && verify_block(&self.sk, f, &cell.block, &cell.tag, &ctx).unwrap_or(false);
                        ok.then(|| cell.block.0.clone())
                    })
                    .collect()
            })
            .collect();
        let mut grid: Vec<Vec<Option<Vec<u64>>>> = (0..r).map(|i| columns.iter().map(|c| c[i].clone()).collect()).collect();
        drop(columns);

        let row_code = DistributionMatrix::canonical(n, k, f)?;
        let col_code = DistributionMatrix::canonical(r, kt, f)?;
        loop {
            let mut progress = false;
            for row in grid.iter_mut() {
                progress |= fill_codeword(&row_code, row)?;
            }
            for j in 0..n {
                let mut column: Vec<Option<Vec<u64>>> = grid.iter_mut().map(|row| row[j].take()).collect();
                progress |= fill_codeword(&col_code, &mut column)?;
                for (row, cell) in grid.iter_mut().zip(column) {
                    row[j] = cell;
                }
            }
            if !progress {
                break;
            }
        }
        if grid[..kt].iter().any(|row| row[..k].iter().any(Option::is_none)) {
            return Ok(Redistribution::Unavailable);
        }
        let data_rows: Vec<Vec<Vec<u64>>> = grid
            .into_iter()
            .take(kt)
            .map(|row| row.into_iter().take(k).map(Option::unwrap).collect())
            .collect();

        let mut data = Vec::with_capacity(kt * k * meta.block_bytes());
        for block in data_rows.iter().flatten() {
            f.unpack(block, &mut data);
        }
        data.truncate(meta.original_length as usize);

        let mut fresh = meta.clone();
        fresh.ctr += 1;
        fresh.stilde = replenished_parity(meta);
        fresh.audit_history = vec![VecDeque::new(); n];
        let shares = self.build_shares(&fresh, data_rows)?;
        Ok(Redistribution::Recovered(Box::new(Recovered { data, meta: fresh, shares })))
    }
}

/// Parity-row count after a redistribute. When the parity fraction has fallen
/// below `eps_p`, it is raised to at least `2 * eps_p` (never below `s~0`).
pub fn replenished_parity(meta: &FileMetadata) -> usize {
    let r = meta.r() as f64;
    if meta.stilde as f64 / r >= meta.eps_p {
        return meta.stilde;
    }
    let target = (2.0 * meta.eps_p).min(0.5);
    let needed = (target * meta.ktilde as f64 / (1.0 - target)).ceil() as usize;
    let cap = (meta.field.order() as usize).saturating_sub(meta.ktilde);
    needed.max(meta.stilde0).max(meta.stilde).min(cap)
}

/// Fills every erased symbol of `word` if at most `n - k` are missing.
/// Returns whether anything was filled.
fn fill_codeword(code: &DistributionMatrix, word: &mut [Option<Vec<u64>>]) -> Result<bool, ClientError> {
    let missing = word.iter().filter(|c| c.is_none()).count();
    if missing == 0 || missing > code.parity_rows() {
        return Ok(false);
    }
    let refs: Vec<Option<&[u64]>> = word.iter().map(|c| c.as_deref()).collect();
    let message = code.decode_blocks(&refs)?;
    let k = code.k_cols();
    if word[k..].iter().any(Option::is_none) {
        let msg_refs: Vec<&[u64]> = message.iter().map(Vec::as_slice).collect();
        for (slot, parity) in word[k..].iter_mut().zip(code.parity_blocks(&msg_refs)?) {
            slot.get_or_insert(parity);
        }
    }
    for (slot, m) in word[..k].iter_mut().zip(message) {
        slot.get_or_insert(m);
    }
    Ok(true)
}

/// Full `r x n` block grid: column code over primary columns, then row code.
pub fn encode_grid(meta: &FileMetadata, mut rows: Vec<Vec<Vec<u64>>>) -> Result<Vec<Vec<Vec<u64>>>, ClientError> {
    let f = meta.field;
    if rows.len() != meta.ktilde || rows.iter().any(|r| r.len() != meta.k) {
        return Err(ClientError::ShapeMismatch("data grid is not k~ x k".into()));
    }
    let col_code = DistributionMatrix::canonical(meta.r(), meta.ktilde, f)?;
    let row_code = DistributionMatrix::canonical(meta.n, meta.k, f)?;
    let mut parity_rows = vec![Vec::with_capacity(meta.n); meta.stilde];
    for j in 0..meta.k {
        let column: Vec<&[u64]> = rows.iter().map(|r| r[j].as_slice()).collect();
        for (dst, p) in parity_rows.iter_mut().zip(col_code.parity_blocks(&column)?) {
            dst.push(p);
        }
    }
    rows.extend(parity_rows);
    rows.par_iter_mut().try_for_each(|row| -> Result<(), ClientError> {
        let refs: Vec<&[u64]> = row.iter().map(Vec::as_slice).collect();
        let parity = row_code.parity_blocks(&refs)?;
        row.extend(parity);
        Ok(())
    })?;
    Ok(rows)
}

/// Row-major data rows of packed, zero-padded blocks covering `k~ x k` cells.
fn bytes_to_rows(meta: &FileMetadata, data: &[u8]) -> Vec<Vec<Vec<u64>>> {
    let row_bytes = meta.k * meta.block_bytes();
    (0..meta.ktilde)
        .map(|i| {
            let start = (i * row_bytes).min(data.len());
            let end = ((i + 1) * row_bytes).min(data.len());
            bytes_to_row(meta, &data[start..end])
        })
        .collect()
}

fn bytes_to_row(meta: &FileMetadata, bytes: &[u8]) -> Vec<Vec<u64>> {
    let bb = meta.block_bytes();
    (0..meta.k)
        .map(|j| {
            let start = (j * bb).min(bytes.len());
            let end = ((j + 1) * bb).min(bytes.len());
            let mut block = meta.field.pack(&bytes[start..end]);
            block.resize(meta.chunks, 0);
            block
        })
        .collect()
}
