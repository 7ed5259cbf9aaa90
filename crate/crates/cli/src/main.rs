//! `porcrs`: outsource, audit, append and repair files over directory-backed servers.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::rngs::StdRng;
use rand::SeedableRng;

use porcrs::auth::{AuthError, SecretKey};
use porcrs::client::{challenge, needs_redistribute, AuditProof, Client, ClientError, CodeParams, FileMetadata, Redistribution};
use porcrs::crs::CodeError;
use porcrs::field::{FieldError, FieldSpec};
use porcrs::harness::{bench_audit, run, HarnessConfig, HarnessError};
use porcrs::server::{ServerError, ServerState};
use porcrs::store::{self, StoreError};

const EXIT_AUDIT_FAILED: u8 = 2;
const EXIT_UNAVAILABLE: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "porcrs", version, about = "Erasure-coded, audited storage over directory-backed servers")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args)]
struct Global {
    /// Directory holding one `server_<j>` subdirectory per server.
    #[arg(long, global = true, env = "PORCRS_ROOT", default_value = "servers")]
    root: PathBuf,
    /// Client metadata file (default for outsource: `<fid>.meta`).
    #[arg(long, global = true)]
    meta: Option<PathBuf>,
    /// Client keyfile.
    #[arg(long, global = true, default_value = "client.key")]
    key: PathBuf,
    #[arg(long, global = true, default_value = "gf2:16")]
    field: FieldSpec,
    #[arg(long, global = true, default_value_t = 15)]
    n: usize,
    #[arg(long, global = true, default_value_t = 9)]
    k: usize,
    /// Parity rows per server column.
    #[arg(long, global = true, default_value_t = 12)]
    stilde: usize,
    /// Rows per challenge (clamped to r).
    #[arg(long, global = true, default_value_t = 100)]
    l: usize,
    #[arg(long = "eps-q", global = true, default_value_t = porcrs::client::DEFAULT_EPS_Q)]
    eps_q: f64,
    #[arg(long = "eps-p", global = true, default_value_t = porcrs::client::DEFAULT_EPS_P)]
    eps_p: f64,
    /// Seed for all randomness; fresh entropy when absent.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a client keyfile.
    Keygen {
        #[arg(long)]
        force: bool,
    },
    /// Encode, tag and distribute a file.
    Outsource {
        file: PathBuf,
        /// Minimum number of data rows per column (zero-padded).
        #[arg(long, default_value_t = 0)]
        min_rows: usize,
    },
    /// Append up to k blocks of bytes as one new row.
    Append { file: PathBuf },
    /// Challenge every server and check the proofs.
    Audit {
        #[arg(long, default_value_t = 1)]
        rounds: usize,
    },
    /// Rebuild the file from all servers and reshare it.
    Repair {
        /// Also write the recovered bytes here.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Show metadata and audit history.
    Status,
    /// Time proof generation and verification.
    Bench {
        /// File sizes in MiB.
        #[arg(long, value_delimiter = ',', default_value = "16,64")]
        sizes: Vec<usize>,
        /// Challenge sizes.
        #[arg(long, value_delimiter = ',', default_value = "100,1000")]
        queries: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        /// Write a tab-separated table here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an epoch simulation from a config file.
    Simulate {
        config: PathBuf,
        /// Write the per-epoch table here.
        #[arg(long)]
        table: Option<PathBuf>,
    },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Store(#[from] StoreError),
    #[error("{0}")]
    Client(#[from] ClientError),
    #[error("{0}")]
    Server(#[from] ServerError),
    #[error("{0}")]
    Harness(#[from] HarnessError),
    #[error("{0}")]
    Field(#[from] FieldError),
    #[error("{0}")]
    Auth(#[from] AuthError),
    #[error("{0}")]
    Code(#[from] CodeError),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Store(_) => 10,
            CliError::Client(_) => 11,
            CliError::Server(_) => 12,
            CliError::Harness(_) => 13,
            CliError::Field(_) => 14,
            CliError::Auth(_) => 15,
            CliError::Code(_) => 16,
            CliError::Io(_) => 17,
            CliError::Usage(_) => EXIT_USAGE,
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn rng(g: &Global) -> StdRng {
    match g.seed {
        Some(s) => StdRng::seed_from_u64(s),
        None => StdRng::from_entropy(),
    }
}

fn params(g: &Global) -> CodeParams {
    let mut p = CodeParams::new(g.field, g.n, g.k, g.stilde);
    p.eps_q = g.eps_q;
    p.eps_p = g.eps_p;
    p
}

fn meta_path(g: &Global) -> Result<&Path, CliError> {
    g.meta.as_deref().ok_or_else(|| CliError::Usage("--meta is required".into()))
}

/// Loads metadata and the client whose key matches it.
fn load_client(g: &Global) -> Result<(Client, FileMetadata, PathBuf), CliError> {
    let path = meta_path(g)?.to_path_buf();
    let meta = store::read_meta(&path)?;
    let sk = store::read_key(&g.key, meta.field)?;
    let mut p = CodeParams::new(meta.field, meta.n, meta.k, meta.stilde0);
    p.chunks = meta.chunks;
    p.eps_q = meta.eps_q;
    p.eps_p = meta.eps_p;
    p.window = meta.window;
    Ok((Client::new(sk, p)?, meta, path))
}

/// Every server's share; unreadable or missing shares are `None`.
fn load_servers(root: &Path, meta: &FileMetadata) -> Vec<Option<ServerState>> {
    (1..=meta.n)
        .map(|j| {
            let path = store::share_path(root, j, meta.fid);
            match store::read_share(&path) {
                Ok(s) => Some(s),
                Err(e) => {
                    eprintln!("server {j}: {e}");
                    None
                }
            }
        })
        .collect()
}

fn write_servers(root: &Path, shares: &[ServerState]) -> Result<(), CliError> {
    for s in shares {
        store::write_share(s, &store::share_path(root, s.server(), s.fid()))?;
    }
    Ok(())
}

fn cmd_keygen(g: &Global, force: bool) -> Result<u8, CliError> {
    if g.key.exists() && !force {
        return Err(CliError::Usage(format!("{} exists; pass --force to replace it", g.key.display())));
    }
    let sk = SecretKey::generate(g.field, &mut rng(g));
    store::write_key(&sk, g.field, &g.key)?;
    println!("wrote {} for {}", g.key.display(), g.field);
    Ok(0)
}

fn cmd_outsource(g: &Global, file: &Path, min_rows: usize) -> Result<u8, CliError> {
    let data = fs::read(file).map_err(|e| io_err(file, e))?;
    let sk = store::read_key(&g.key, g.field)?;
    let mut p = params(g);
    p.min_rows = min_rows;
    let client = Client::new(sk, p)?;
    let (meta, shares) = client.outsource(&data, &mut rng(g))?;
    write_servers(&g.root, &shares)?;
    let path = g.meta.clone().unwrap_or_else(|| PathBuf::from(format!("{}.meta", meta.fid)));
    store::write_meta(&meta, &path)?;
    println!("fid {}", meta.fid);
    println!("code ({}, {}) x ({}, {}), {} bytes, metadata {}", meta.r(), meta.ktilde, meta.n, meta.k, data.len(), path.display());
    Ok(0)
}

fn cmd_append(g: &Global, file: &Path) -> Result<u8, CliError> {
    let (client, mut meta, path) = load_client(g)?;
    let bytes = fs::read(file).map_err(|e| io_err(file, e))?;
    let orders = client.append_bytes(&mut meta, &bytes)?;
    for order in &orders {
        let share = store::share_path(&g.root, order.server, meta.fid);
        let applied = store::read_share(&share)
            .map_err(CliError::from)
            .and_then(|mut s| {
                s.apply_append(order)?;
                store::write_share(&s, &share)?;
                Ok(())
            });
        if let Err(e) = applied {
            eprintln!("server {}: append not applied: {e}", order.server);
        }
    }
    store::write_meta(&meta, &path)?;
    let sent: usize = orders.iter().map(|o| o.payload_bytes(meta.field)).sum();
    println!("appended row {} (ctr {}), {} bytes sent", meta.ktilde, meta.ctr, sent);
    Ok(0)
}

fn cmd_audit(g: &Global, rounds: usize) -> Result<u8, CliError> {
    let (client, mut meta, path) = load_client(g)?;
    let servers = load_servers(&g.root, &meta);
    let mut rng = rng(g);
    let mut failed = vec![0usize; meta.n];
    for epoch in 0..rounds {
        let q = challenge(&meta, g.l.min(meta.r()), epoch as u64, &mut rng)?;
        let proof = AuditProof::collect(&servers, &q);
        for (f, ok) in failed.iter_mut().zip(client.verify(&mut meta, &q, &proof)?) {
            *f += usize::from(!ok);
        }
    }
    store::write_meta(&meta, &path)?;
    for (j, &f) in failed.iter().enumerate() {
        let verdict = if f == 0 { "pass" } else { "FAIL" };
        println!("server {:>2}: {verdict} ({f}/{rounds} failed)", j + 1);
    }
    let bad: Vec<usize> = failed.iter().enumerate().filter(|(_, f)| **f > 0).map(|(j, _)| j + 1).collect();
    if bad.is_empty() {
        Ok(0)
    } else {
        eprintln!("audit failed on servers {bad:?}");
        Ok(EXIT_AUDIT_FAILED)
    }
}

fn cmd_repair(g: &Global, output: Option<&Path>) -> Result<u8, CliError> {
    let (client, meta, path) = load_client(g)?;
    let servers = load_servers(&g.root, &meta);
    match client.redistribute(&meta, &servers)? {
        Redistribution::Recovered(rec) => {
            write_servers(&g.root, &rec.shares)?;
            store::write_meta(&rec.meta, &path)?;
            if let Some(out) = output {
                fs::write(out, &rec.data).map_err(|e| io_err(out, e))?;
            }
            println!("recovered {} bytes; reshared at ctr {} with s~ = {}", rec.data.len(), rec.meta.ctr, rec.meta.stilde);
            Ok(0)
        }
        Redistribution::Unavailable => {
            eprintln!("file is unavailable: too many erasures to decode");
            Ok(EXIT_UNAVAILABLE)
        }
    }
}

fn cmd_status(g: &Global) -> Result<u8, CliError> {
    let meta = store::read_meta(meta_path(g)?)?;
    println!("fid {}", meta.fid);
    println!("field {} c={} block={} bytes", meta.field, meta.chunks, meta.block_bytes());
    println!("dispersal ({}, {}), column ({}, {}), ctr {}", meta.n, meta.k, meta.r(), meta.ktilde, meta.ctr);
    println!("length {} bytes, eps_q {} eps_p {} window {}", meta.original_length, meta.eps_q, meta.eps_p, meta.window);
    for (j, h) in meta.audit_history.iter().enumerate() {
        let hist: String = h.iter().map(|&p| if p { 'P' } else { 'F' }).collect();
        let flag = if needs_redistribute(&meta, j + 1) { "  needs redistribute" } else { "" };
        println!("server {:>2}: [{hist}]{flag}", j + 1);
    }
    Ok(0)
}

fn cmd_bench(g: &Global, sizes: &[usize], queries: &[usize], reps: usize, out: Option<&Path>) -> Result<u8, CliError> {
    let client = Client::setup(params(g), &mut rng(g))?;
    let mut table = String::from("file_mib\tr\tl\tprove_us\tverify_us\n");
    println!("{:>8} {:>6} {:>6} {:>12} {:>12}", "MiB", "r", "|Q|", "prove", "verify");
    for &mib in sizes {
        let ls: Vec<usize> = queries.to_vec();
        let rows = bench_audit(&client, mib << 20, &ls, reps, g.seed.unwrap_or(0))?;
        for t in rows {
            println!("{:>8} {:>6} {:>6} {:>12.2?} {:>12.2?}", mib, t.r, t.l, t.prove, t.verify);
            table.push_str(&format!(
                "{mib}\t{}\t{}\t{:.1}\t{:.1}\n",
                t.r,
                t.l,
                t.prove.as_secs_f64() * 1e6,
                t.verify.as_secs_f64() * 1e6
            ));
        }
    }
    if let Some(out) = out {
        fs::write(out, table).map_err(|e| io_err(out, e))?;
    }
    Ok(0)
}

fn cmd_simulate(config: &Path, table: Option<&Path>) -> Result<u8, CliError> {
    let text = fs::read_to_string(config).map_err(|e| io_err(config, e))?;
    let cfg: HarnessConfig = text.parse()?;
    let report = run(&cfg)?;
    print!("{}", report.to_text());
    if let Some(t) = table {
        fs::write(t, report.to_tsv()).map_err(|e| io_err(t, e))?;
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let g = &cli.global;
    let result = match &cli.cmd {
        Command::Keygen { force } => cmd_keygen(g, *force),
        Command::Outsource { file, min_rows } => cmd_outsource(g, file, *min_rows),
        Command::Append { file } => cmd_append(g, file),
        Command::Audit { rounds } => cmd_audit(g, *rounds),
        Command::Repair { output } => cmd_repair(g, output.as_deref()),
        Command::Status => cmd_status(g),
        Command::Bench { sizes, queries, reps, out } => cmd_bench(g, sizes, queries, *reps, out.as_deref()),
        Command::Simulate { config, table } => cmd_simulate(config, table.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
