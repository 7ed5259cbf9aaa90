//! Epoch simulator, adversary strategies and cost instrumentation.
//!
//! Each epoch runs four phases in order: appends, adversarial corruption,
//! audits, and remediation (redistribute when some server's recent failure
//! rate crosses the client threshold). The adversary mutates server states
//! in place and may alter what a server answers.

use std::fmt::Write as _;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::seq::index::sample;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::auth::{tag_block, Block, Fid, TagContext};
use crate::client::{
    challenge, needs_redistribute, AuditProof, ChallengeSet, Client, ClientError, CodeParams, FileMetadata,
    Redistribution, ServerResponse,
};
use crate::crs::DistributionMatrix;
use crate::field::FieldSpec;
use crate::server::{Cell, ServerState, ShareParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error("line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Client(#[from] ClientError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdversaryKind {
    /// Does nothing.
    Null,
    /// Erases `b` whole servers each epoch.
    Wipe,
    /// Perturbs a `delta` fraction of cells on `b` servers.
    Corrupt,
    /// Restores the previous epoch's parity cells on `b` servers.
    Rollback,
    /// Zeroes a `delta` fraction of cells on `b` servers, which then answer
    /// zeroed aggregates whenever a challenge touches a deleted cell.
    Delete,
}

impl FromStr for AdversaryKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "null" => AdversaryKind::Null,
            "wipe" => AdversaryKind::Wipe,
            "corrupt" => AdversaryKind::Corrupt,
            "rollback" => AdversaryKind::Rollback,
            "delete" => AdversaryKind::Delete,
            _ => return Err(format!("unknown adversary {s:?}")),
        })
    }
}

impl std::fmt::Display for AdversaryKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AdversaryKind::Null => "null",
            AdversaryKind::Wipe => "wipe",
            AdversaryKind::Corrupt => "corrupt",
            AdversaryKind::Rollback => "rollback",
            AdversaryKind::Delete => "delete",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarnessConfig {
    pub epochs: usize,
    pub appends_per_epoch: usize,
    pub audits_per_epoch: usize,
    /// Challenge size; clamped to the current `r` at each audit.
    pub l: usize,
    pub adversary: AdversaryKind,
    /// Servers attacked per epoch.
    pub budget: usize,
    /// Fraction of cells touched on an attacked server.
    pub delta: f64,
    pub seed: u64,
    pub file_bytes: usize,
    pub params: CodeParams,
}

impl HarnessConfig {
    /// Small prime-field defaults: `(n, k) = (6, 3)`, `s~ = 2`, null adversary.
    pub fn new(params: CodeParams) -> Self {
        HarnessConfig {
            epochs: 3,
            appends_per_epoch: 2,
            audits_per_epoch: 10,
            l: 4,
            adversary: AdversaryKind::Null,
            budget: 0,
            delta: 0.0,
            seed: 0,
            file_bytes: 512,
            params,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.params.validate()?;
        let bad = |m: String| Err(HarnessError::Invalid(m));
        if self.budget > self.params.n {
            return bad(format!("budget {} exceeds n = {}", self.budget, self.params.n));
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return bad(format!("delta {} outside [0, 1]", self.delta));
        }
        if self.l == 0 {
            return bad("challenge size must be positive".into());
        }
        if self.file_bytes == 0 {
            return bad("file_bytes must be positive".into());
        }
        Ok(())
    }

    /// Text form, one `key=value` per line.
    pub fn to_text(&self) -> String {
        let p = &self.params;
        format!(
            "epochs={}\nappends_per_epoch={}\naudits_per_epoch={}\nl={}\nadversary={}\nbudget={}\ndelta={}\nseed={}\n\
             file_bytes={}\nfield={}\nn={}\nk={}\nstilde={}\nchunks={}\neps_q={}\neps_p={}\nwindow={}\n",
            self.epochs,
            self.appends_per_epoch,
            self.audits_per_epoch,
            self.l,
            self.adversary,
            self.budget,
            self.delta,
            self.seed,
            self.file_bytes,
            p.field,
            p.n,
            p.k,
            p.stilde0,
            p.chunks,
            p.eps_q,
            p.eps_p,
            p.window
        )
    }
}

impl FromStr for HarnessConfig {
    type Err = HarnessError;

    /// Parses the text form. Omitted keys keep their defaults; `field`, `n`,
    /// `k` and `stilde` are applied before `chunks` so the chunk default
    /// follows the field.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut pairs = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (k, v) = trimmed
                .split_once('=')
                .ok_or_else(|| HarnessError::Config { line, msg: "expected key=value".into() })?;
            let key = k.trim();
            if pairs.iter().any(|(_, pk, _)| *pk == key) {
                return Err(HarnessError::Config { line, msg: format!("duplicate key {key:?}") });
            }
            pairs.push((line, key, v.trim()));
        }
        fn parse<T: FromStr>(line: usize, key: &str, v: &str) -> Result<T, HarnessError> {
            v.parse().map_err(|_| HarnessError::Config { line, msg: format!("{key}: cannot parse {v:?}") })
        }
        let lookup = |key: &str| pairs.iter().find(|(_, k, _)| *k == key).map(|&(l, _, v)| (l, v));
        let field = match lookup("field") {
            Some((l, v)) => parse::<FieldSpec>(l, "field", v)?,
            None => FieldSpec::default_prime(),
        };
        let mut dims = [6usize, 3, 2];
        for (slot, key) in dims.iter_mut().zip(["n", "k", "stilde"]) {
            if let Some((l, v)) = lookup(key) {
                *slot = parse(l, key, v)?;
            }
        }
        let mut cfg = HarnessConfig::new(CodeParams::new(field, dims[0], dims[1], dims[2]));
        for &(line, key, v) in &pairs {
            match key {
                "field" | "n" | "k" | "stilde" => {}
                "epochs" => cfg.epochs = parse(line, key, v)?,
                "appends_per_epoch" => cfg.appends_per_epoch = parse(line, key, v)?,
                "audits_per_epoch" => cfg.audits_per_epoch = parse(line, key, v)?,
                "l" => cfg.l = parse(line, key, v)?,
                "adversary" => {
                    cfg.adversary = v.parse().map_err(|msg| HarnessError::Config { line, msg })?;
                }
                "budget" => cfg.budget = parse(line, key, v)?,
                "delta" => cfg.delta = parse(line, key, v)?,
                "seed" => cfg.seed = parse(line, key, v)?,
                "file_bytes" => cfg.file_bytes = parse(line, key, v)?,
                "chunks" => cfg.params.chunks = parse(line, key, v)?,
                "eps_q" => cfg.params.eps_q = parse(line, key, v)?,
                "eps_p" => cfg.params.eps_p = parse(line, key, v)?,
                "window" => cfg.params.window = parse(line, key, v)?,
                other => return Err(HarnessError::Config { line, msg: format!("unknown key {other:?}") }),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// A slot per server; `None` is a server that lost everything.
pub type Servers = [Option<ServerState>];

/// Adversary hooks, called once per epoch in phase order.
pub trait Adversary {
    /// Sees the state before the append phase.
    fn before_appends(&mut self, _epoch: usize, _servers: &Servers, _rng: &mut dyn RngCore) {}

    /// Mutates servers; returns the 0-based indices it touched.
    fn corrupt(&mut self, epoch: usize, servers: &mut Servers, rng: &mut dyn RngCore) -> Vec<usize>;

    /// What server `j` (0-based) answers. Honest by default.
    fn respond(&self, _j: usize, state: &ServerState, q: &ChallengeSet) -> Option<ServerResponse> {
        state.prove(q).ok()
    }

    /// Receives the verdicts of each audit.
    fn observe(&mut self, _epoch: usize, _verdicts: &[bool]) {}
}

pub struct NullAdversary;

impl Adversary for NullAdversary {
    fn corrupt(&mut self, _: usize, _: &mut Servers, _: &mut dyn RngCore) -> Vec<usize> {
        Vec::new()
    }
}

fn pick(rng: &mut dyn RngCore, n: usize, b: usize) -> Vec<usize> {
    let mut v = sample(rng, n, b).into_vec();
    v.sort_unstable();
    v
}

fn touched_rows(rng: &mut dyn RngCore, r: usize, delta: f64) -> Vec<usize> {
    let count = ((delta * r as f64).ceil() as usize).min(r);
    sample(rng, r, count).into_vec()
}

pub struct WipeServers {
    pub budget: usize,
}

impl Adversary for WipeServers {
    fn corrupt(&mut self, _: usize, servers: &mut Servers, rng: &mut dyn RngCore) -> Vec<usize> {
        let targets = pick(rng, servers.len(), self.budget);
        for &j in &targets {
            servers[j] = None;
        }
        targets
    }
}

pub struct CorruptCells {
    pub budget: usize,
    pub delta: f64,
}

impl Adversary for CorruptCells {
    fn corrupt(&mut self, _: usize, servers: &mut Servers, rng: &mut dyn RngCore) -> Vec<usize> {
        let targets = pick(rng, servers.len(), self.budget);
        for &j in &targets {
            if let Some(s) = servers[j].as_mut() {
                let f = s.field();
                for i in touched_rows(rng, s.r(), self.delta) {
                    let cell = &mut s.cells_mut()[i];
                    cell.block[0] = f.add(cell.block[0], 1);
                }
            }
        }
        targets
    }
}

/// Puts parity cells saved before the append phase back in place.
#[derive(Default)]
pub struct RollbackParity {
    pub budget: usize,
    saved: Vec<(usize, Vec<Cell>)>,
}

impl RollbackParity {
    pub fn new(budget: usize) -> Self {
        RollbackParity { budget, saved: Vec::new() }
    }
}

impl Adversary for RollbackParity {
    fn before_appends(&mut self, _: usize, servers: &Servers, rng: &mut dyn RngCore) {
        self.saved = pick(rng, servers.len(), self.budget)
            .into_iter()
            .filter_map(|j| servers[j].as_ref().map(|s| (j, s.cells()[s.ktilde()..].to_vec())))
            .collect();
    }

    fn corrupt(&mut self, _: usize, servers: &mut Servers, _: &mut dyn RngCore) -> Vec<usize> {
        let mut touched = Vec::new();
        for (j, old) in self.saved.drain(..) {
            if let Some(s) = servers[j].as_mut() {
                let kt = s.ktilde();
                if s.r() - kt == old.len() {
                    s.cells_mut()[kt..].clone_from_slice(&old);
                    touched.push(j);
                }
            }
        }
        touched
    }
}

/// Deleted cells are zeroed in block and tag. An honest tag is never all
/// zero except with negligible probability, so the marker is unambiguous.
pub struct DeleteBlocks {
    pub budget: usize,
    pub delta: f64,
}

fn is_deleted(cell: &Cell) -> bool {
    cell.block.iter().chain(cell.tag.iter()).all(|&v| v == 0)
}

impl Adversary for DeleteBlocks {
    fn corrupt(&mut self, _: usize, servers: &mut Servers, rng: &mut dyn RngCore) -> Vec<usize> {
        let targets = pick(rng, servers.len(), self.budget);
        for &j in &targets {
            if let Some(s) = servers[j].as_mut() {
                for i in touched_rows(rng, s.r(), self.delta) {
                    let cell = &mut s.cells_mut()[i];
                    cell.block.fill(0);
                    cell.tag.fill(0);
                }
            }
        }
        targets
    }

    fn respond(&self, _: usize, state: &ServerState, q: &ChallengeSet) -> Option<ServerResponse> {
        let hit = q.entries().iter().any(|&(i, _)| state.read_block(i).map(is_deleted).unwrap_or(true));
        if hit {
            let zeros = vec![0; state.chunks()];
            Some(ServerResponse { mu: zeros.clone(), sigma: zeros })
        } else {
            state.prove(q).ok()
        }
    }
}

pub fn make_adversary(cfg: &HarnessConfig) -> Box<dyn Adversary> {
    match cfg.adversary {
        AdversaryKind::Null => Box::new(NullAdversary),
        AdversaryKind::Wipe => Box::new(WipeServers { budget: cfg.budget }),
        AdversaryKind::Corrupt => Box::new(CorruptCells { budget: cfg.budget, delta: cfg.delta }),
        AdversaryKind::Rollback => Box::new(RollbackParity::new(cfg.budget)),
        AdversaryKind::Delete => Box::new(DeleteBlocks { budget: cfg.budget, delta: cfg.delta }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecoveryOutcome {
    /// Recovered; `exact` tells whether the bytes equal the logical file.
    Recovered { exact: bool },
    Unavailable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochReport {
    pub epoch: usize,
    pub ktilde: usize,
    pub ctr: u64,
    pub appends: usize,
    /// Client-to-server payload bytes across this epoch's appends.
    pub append_bytes: usize,
    /// Servers the adversary touched (0-based).
    pub attacked: Vec<usize>,
    pub audits: usize,
    /// Failed audits per server.
    pub failures: Vec<usize>,
    pub redistribute: Option<RecoveryOutcome>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseTimings {
    pub append: Duration,
    pub corrupt: Duration,
    pub audit: Duration,
    pub remediate: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub config: HarnessConfig,
    pub epochs: Vec<EpochReport>,
    pub timings: PhaseTimings,
}

impl ExperimentReport {
    pub fn total_failures(&self) -> usize {
        self.epochs.iter().flat_map(|e| e.failures.iter()).sum()
    }

    pub fn redistributions(&self) -> usize {
        self.epochs.iter().filter(|e| e.redistribute.is_some()).count()
    }

    /// Fraction of audits passed by attacked servers, or `None` if none were attacked.
    pub fn cheating_pass_rate(&self) -> Option<f64> {
        let (mut audits, mut fails) = (0usize, 0usize);
        for e in &self.epochs {
            for &j in &e.attacked {
                audits += e.audits;
                fails += e.failures[j];
            }
        }
        (audits > 0).then(|| 1.0 - fails as f64 / audits as f64)
    }

    pub fn to_text(&self) -> String {
        let c = &self.config;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "adversary {} budget {} delta {} over {} epochs ({} appends, {} audits of l={} each)",
            c.adversary, c.budget, c.delta, c.epochs, c.appends_per_epoch, c.audits_per_epoch, c.l
        );
        let s = c.params.n - c.params.k;
        let _ = writeln!(
            out,
            "recovery regime: up to {s} lost servers per epoch (mobile bound {})",
            s / 2
        );
        for e in &self.epochs {
            let outcome = match e.redistribute {
                None => "none".to_string(),
                Some(RecoveryOutcome::Recovered { exact }) => format!("recovered exact={exact}"),
                Some(RecoveryOutcome::Unavailable) => "unavailable".to_string(),
            };
            let _ = writeln!(
                out,
                "epoch {}: k~={} ctr={} append_bytes={} attacked={:?} failures={:?} redistribute={}",
                e.epoch, e.ktilde, e.ctr, e.append_bytes, e.attacked, e.failures, outcome
            );
        }
        match self.cheating_pass_rate() {
            Some(p) => {
                let _ = writeln!(out, "cheating-server pass rate: {p:.4}");
            }
            None => out.push_str("cheating-server pass rate: n/a\n"),
        }
        let t = &self.timings;
        let _ = writeln!(
            out,
            "timings: append {:?} corrupt {:?} audit {:?} remediate {:?}",
            t.append, t.corrupt, t.audit, t.remediate
        );
        out
    }

    /// Tab-separated, one row per epoch and server.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("epoch\tserver\tktilde\tctr\tattacked\taudits\tfailures\tappend_bytes\tredistribute\n");
        for e in &self.epochs {
            let outcome = match e.redistribute {
                None => "none",
                Some(RecoveryOutcome::Recovered { exact: true }) => "recovered",
                Some(RecoveryOutcome::Recovered { exact: false }) => "mismatch",
                Some(RecoveryOutcome::Unavailable) => "unavailable",
            };
            for (j, f) in e.failures.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    e.epoch,
                    j + 1,
                    e.ktilde,
                    e.ctr,
                    e.attacked.contains(&j) as u8,
                    e.audits,
                    f,
                    e.append_bytes,
                    outcome
                );
            }
        }
        out
    }
}

fn random_row<R: Rng + ?Sized>(meta: &FileMetadata, rng: &mut R) -> Vec<u8> {
    let mut bytes = vec![0u8; meta.k * meta.block_bytes()];
    rng.fill_bytes(&mut bytes);
    bytes
}

/// Runs the configured adversary.
pub fn run(config: &HarnessConfig) -> Result<ExperimentReport, HarnessError> {
    let mut adversary = make_adversary(config);
    run_with(config, adversary.as_mut())
}

/// Runs with a caller-supplied adversary. Deterministic for a fixed seed.
pub fn run_with(config: &HarnessConfig, adversary: &mut dyn Adversary) -> Result<ExperimentReport, HarnessError> {
    config.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let client = Client::setup(config.params, &mut rng)?;
    let mut file = vec![0u8; config.file_bytes];
    rng.fill_bytes(&mut file);
    let (mut meta, shares) = client.outsource(&file, &mut rng)?;
    // logical content: original bytes, then whole appended rows
    file.resize(meta.ktilde * meta.k * meta.block_bytes(), 0);
    let mut servers: Vec<Option<ServerState>> = shares.into_iter().map(Some).collect();
    let mut timings = PhaseTimings::default();
    let mut epochs = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let t0 = Instant::now();
        adversary.before_appends(epoch, &servers, &mut rng);
        let mut append_bytes = 0;
        let mut appends = 0;
        for _ in 0..config.appends_per_epoch {
            if meta.r() as u64 >= meta.field.order() {
                break;
            }
            let row = random_row(&meta, &mut rng);
            let orders = client.append_bytes(&mut meta, &row)?;
            file.extend_from_slice(&row);
            for (slot, order) in servers.iter_mut().zip(&orders) {
                append_bytes += order.payload_bytes(meta.field);
                if let Some(s) = slot {
                    // a server that refuses the order keeps stale state and fails audits
                    let _ = s.apply_append(order);
                }
            }
            appends += 1;
        }
        let t1 = Instant::now();
        let attacked = adversary.corrupt(epoch, &mut servers, &mut rng);
        let t2 = Instant::now();

        let mut failures = vec![0usize; meta.n];
        for _ in 0..config.audits_per_epoch {
            let q = challenge(&meta, config.l.min(meta.r()), epoch as u64, &mut rng)?;
            let responses = servers
                .iter()
                .enumerate()
                .map(|(j, s)| s.as_ref().and_then(|s| adversary.respond(j, s, &q)))
                .collect();
            let verdicts = client.verify(&mut meta, &q, &AuditProof { responses })?;
            for (f, ok) in failures.iter_mut().zip(&verdicts) {
                *f += usize::from(!ok);
            }
            adversary.observe(epoch, &verdicts);
        }
        let t3 = Instant::now();

        let mut redistribute = None;
        if (1..=meta.n).any(|j| needs_redistribute(&meta, j)) {
            redistribute = Some(match client.redistribute(&meta, &servers)? {
                Redistribution::Recovered(rec) => {
                    let exact = rec.data == file[..meta.original_length as usize];
                    meta = rec.meta;
                    servers = rec.shares.into_iter().map(Some).collect();
                    RecoveryOutcome::Recovered { exact }
                }
                Redistribution::Unavailable => RecoveryOutcome::Unavailable,
            });
        }
        let t4 = Instant::now();
        timings.append += t1 - t0;
        timings.corrupt += t2 - t1;
        timings.audit += t3 - t2;
        timings.remediate += t4 - t3;
        epochs.push(EpochReport {
            epoch,
            ktilde: meta.ktilde,
            ctr: meta.ctr,
            appends,
            append_bytes,
            attacked,
            audits: config.audits_per_epoch,
            failures,
            redistribute,
        });
    }
    Ok(ExperimentReport { config: config.clone(), epochs, timings })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcheatEstimate {
    pub trials: usize,
    pub empirical: f64,
    /// `prod_{t<l} (k~ - t) / (r - t)`, sampling without replacement.
    pub exact: f64,
    /// `(k~ / r)^l`, the with-replacement form.
    pub approximation: f64,
}

/// Probability that a challenge of `l` distinct rows out of `r` misses all
/// `deleted` rows.
pub fn pcheat_exact(r: usize, deleted: usize, l: usize) -> f64 {
    let kt = r.saturating_sub(deleted);
    (0..l).map(|t| if t >= kt { 0.0 } else { (kt - t) as f64 / (r - t) as f64 }).product()
}

pub fn pcheat_approx(r: usize, deleted: usize, l: usize) -> f64 {
    ((r - deleted) as f64 / r as f64).powi(l as i32)
}

/// Pass rate of a server that deleted `stilde` of its `r` rows, measured by
/// running real challenge / prove / verify rounds over a single-chunk
/// prime-field share. The deleted positions are redrawn every trial.
pub fn estimate_pcheat(r: usize, stilde: usize, l: usize, trials: usize, seed: u64) -> Result<PcheatEstimate, HarnessError> {
    if r == 0 || stilde > r || l > r {
        return Err(HarnessError::Invalid(format!("need s~ <= r and l <= r, got r={r} s~={stilde} l={l}")));
    }
    let exact = pcheat_exact(r, stilde, l);
    let approximation = pcheat_approx(r, stilde, l);
    if l == 0 || stilde == 0 || trials == 0 {
        return Ok(PcheatEstimate { trials, empirical: 1.0, exact, approximation });
    }
    if stilde == r {
        return Ok(PcheatEstimate { trials, empirical: 0.0, exact, approximation });
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut params = CodeParams::new(FieldSpec::default_prime(), 2, 1, stilde);
    params.min_rows = r - stilde;
    let client = Client::setup(params, &mut rng)?;
    let (meta, shares) = client.outsource(&[1], &mut rng)?;
    debug_assert_eq!(meta.r(), r);
    let honest = &shares[0];
    let deleter = DeleteBlocks { budget: 1, delta: 0.0 };
    let mut passes = 0usize;
    for _ in 0..trials {
        let mut state = honest.clone();
        for i in sample(&mut rng, r, stilde) {
            let cell = &mut state.cells_mut()[i];
            cell.block.fill(0);
            cell.tag.fill(0);
        }
        let q = challenge(&meta, l, 0, &mut rng)?;
        let proof = AuditProof { responses: vec![deleter.respond(0, &state, &q), None] };
        passes += usize::from(client.check_proof(&meta, &q, &proof)?[0]);
    }
    Ok(PcheatEstimate { trials, empirical: passes as f64 / trials as f64, exact, approximation })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AppendCost {
    pub ktilde: usize,
    /// New blocks and tags sent, all servers.
    pub row_bytes: usize,
    /// Tag deltas sent, all servers.
    pub delta_bytes: usize,
    /// Field multiplications performed by all servers.
    pub server_mults: u64,
}

impl AppendCost {
    pub fn total_bytes(&self) -> usize {
        self.row_bytes + self.delta_bytes
    }
}

/// Instruments one append onto a file of `ktilde` data rows.
pub fn account_append_cost(params: CodeParams, ktilde: usize, seed: u64) -> Result<AppendCost, HarnessError> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut p = params;
    p.min_rows = ktilde;
    let client = Client::setup(p, &mut rng)?;
    let (mut meta, mut shares) = client.outsource(&[1], &mut rng)?;
    let row = random_row(&meta, &mut rng);
    let orders = client.append_bytes(&mut meta, &row)?;
    let es = meta.field.element_size();
    let mut cost = AppendCost { ktilde, row_bytes: 0, delta_bytes: 0, server_mults: 0 };
    for (s, o) in shares.iter_mut().zip(&orders) {
        cost.row_bytes += (o.block.len() + o.tag.len()) * es;
        cost.delta_bytes += o.deltas.iter().map(|d| d.len()).sum::<usize>() * es;
        cost.server_mults += s.apply_append(o).map_err(ClientError::from)?.field_mults;
    }
    Ok(cost)
}

/// One primary server's column for a file of `file_bytes`, laid out over the
/// `(n, k)` grid of `params`: random data rows, column parity, honest tags.
/// Only server 1 is materialized.
pub fn synthetic_column(
    client: &Client,
    file_bytes: usize,
    rng: &mut (impl Rng + ?Sized),
) -> Result<(FileMetadata, ServerState), HarnessError> {
    let p = client.params();
    let f = p.field;
    let block_bytes = p.chunks * f.packed_bytes();
    let ktilde = file_bytes.div_ceil(block_bytes).div_ceil(p.k).max(p.min_rows).max(1);
    let meta = FileMetadata {
        fid: Fid::random(rng),
        field: f,
        n: p.n,
        k: p.k,
        stilde: p.stilde0,
        ktilde,
        ctr: 0,
        chunks: p.chunks,
        original_length: file_bytes as u64,
        stilde0: p.stilde0,
        eps_q: p.eps_q,
        eps_p: p.eps_p,
        window: p.window,
        audit_history: vec![Default::default(); p.n],
    };
    let data: Vec<Vec<u64>> = (0..ktilde).map(|_| (0..p.chunks).map(|_| f.random(rng)).collect()).collect();
    let code = DistributionMatrix::canonical(meta.r(), ktilde, f).map_err(ClientError::from)?;
    let refs: Vec<&[u64]> = data.iter().map(Vec::as_slice).collect();
    let parity = code.parity_blocks(&refs).map_err(ClientError::from)?;
    drop(refs);
    let cells = data
        .into_iter()
        .chain(parity)
        .enumerate()
        .map(|(i, block)| {
            let tag = tag_block(client.secret_key(), f, &block, &TagContext::new(meta.fid, i + 1, 1, 0));
            Cell { block: Block(block), tag }
        })
        .collect();
    let params = ShareParams { ktilde, stilde: meta.stilde, chunks: meta.chunks, ctr: 0 };
    let state = ServerState::store_share(1, meta.fid, f, params, cells).map_err(ClientError::from)?;
    Ok((meta, state))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditTiming {
    pub file_bytes: usize,
    pub l: usize,
    pub r: usize,
    /// Median time for one server to answer.
    pub prove: Duration,
    /// Median time for the client to check one server's answer.
    pub verify: Duration,
}

fn median(mut v: Vec<Duration>) -> Duration {
    v.sort_unstable();
    v[v.len() / 2]
}

/// Times prove and verify on one synthetic column for each challenge size.
pub fn bench_audit(
    client: &Client,
    file_bytes: usize,
    ls: &[usize],
    reps: usize,
    seed: u64,
) -> Result<Vec<AuditTiming>, HarnessError> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (meta, state) = synthetic_column(client, file_bytes, &mut rng)?;
    let mut out = Vec::with_capacity(ls.len());
    for &l in ls {
        let mut prove = Vec::with_capacity(reps);
        let mut verify = Vec::with_capacity(reps);
        for _ in 0..reps.max(1) {
            let q = challenge(&meta, l, 0, &mut rng)?;
            let t0 = Instant::now();
            let resp = state.prove(&q).map_err(ClientError::from)?;
            let t1 = Instant::now();
            let mut responses = vec![None; meta.n];
            responses[0] = Some(resp);
            let verdicts = client.check_proof(&meta, &q, &AuditProof { responses })?;
            let t2 = Instant::now();
            if !verdicts[0] {
                return Err(HarnessError::Invalid("honest synthetic column failed its audit".into()));
            }
            prove.push(t1 - t0);
            verify.push(t2 - t1);
        }
        out.push(AuditTiming { file_bytes, l, r: meta.r(), prove: median(prove), verify: median(verify) });
    }
    Ok(out)
}

/// Default binary-profile parameters: `gf2:16`, `(n, k) = (15, 9)`, `s~ = 12`, 4 KB blocks.
pub fn binary_profile() -> CodeParams {
    CodeParams::new(FieldSpec::binary(16).expect("16 is a supported width"), 15, 9, 12)
}
