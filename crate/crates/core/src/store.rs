//! On-disk formats: binary share files, text metadata and keyfiles.
//!
//! Share layout (all integers little-endian):
//!
//! ```text
//! "CRS1" | version u16 = 1 | token_len u16 | field token
//! j u64 | r u64 | k~ u64 | s~ u64 | ctr u64 | c u64
//! r cells, each: c block elements, then c tag elements
//! ```
//!
//! Prime-field elements take 8 bytes, `GF(2^w)` elements `w / 8` bytes. The
//! file id is not in the header; it is the share file's stem.

use std::collections::{HashMap, VecDeque};
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::auth::{Block, Fid, SecretKey, Tag};
use crate::client::FileMetadata;
use crate::field::{FieldKind, FieldSpec};
use crate::server::{Cell, ServerState, ShareParams};

pub const SHARE_MAGIC: &[u8; 4] = b"CRS1";
pub const SHARE_VERSION: u16 = 1;
/// Upper bound on `n` accepted from metadata files.
pub const MAX_SERVERS: usize = 1 << 16;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("bad magic {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("unsupported share version {0}")]
    BadVersion(u16),
    #[error("truncated share: need {needed} bytes at offset {offset}, have {available}")]
    Truncated { offset: usize, needed: usize, available: usize },
    #[error("share has {0} trailing bytes")]
    TrailingBytes(usize),
    #[error("invalid share: {0}")]
    Format(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("missing key {0:?}")]
    MissingKey(&'static str),
    #[error("inconsistent metadata: {0}")]
    Inconsistent(String),
}

impl StoreError {
    fn io(path: &Path, source: io::Error) -> Self {
        StoreError::Io { path: path.to_path_buf(), source }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8], StoreError> {
        let available = self.buf.len() - self.pos;
        if len > available {
            return Err(StoreError::Truncated { offset: self.pos, needed: len, available });
        }
        let out = &self.buf[self.pos..self.pos + len];
        self.pos += len;
        Ok(out)
    }

    fn u16(&mut self) -> Result<u16, StoreError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, StoreError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn usize(&mut self, what: &str) -> Result<usize, StoreError> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| StoreError::Format(format!("{what} = {v} does not fit in memory")))
    }
}

/// Serializes a share. Equal states give identical bytes.
pub fn encode_share(state: &ServerState) -> Vec<u8> {
    let f = state.field();
    let es = f.element_size();
    let token = f.to_string();
    let body = state.r() * 2 * state.chunks() * es;
    let mut out = Vec::with_capacity(4 + 2 + 2 + token.len() + 48 + body);
    out.extend_from_slice(SHARE_MAGIC);
    out.extend_from_slice(&SHARE_VERSION.to_le_bytes());
    out.extend_from_slice(&(token.len() as u16).to_le_bytes());
    out.extend_from_slice(token.as_bytes());
    for v in [state.server(), state.r(), state.ktilde(), state.stilde()] {
        out.extend_from_slice(&(v as u64).to_le_bytes());
    }
    out.extend_from_slice(&state.ctr().to_le_bytes());
    out.extend_from_slice(&(state.chunks() as u64).to_le_bytes());
    for cell in state.cells() {
        for &e in cell.block.iter().chain(cell.tag.iter()) {
            out.extend_from_slice(&e.to_le_bytes()[..es]);
        }
    }
    out
}

/// Parses a share; `fid` comes from outside the byte stream. The body length
/// is checked against the header before anything is allocated.
pub fn decode_share(bytes: &[u8], fid: Fid) -> Result<ServerState, StoreError> {
    let mut rd = Reader { buf: bytes, pos: 0 };
    let magic: [u8; 4] = rd.take(4)?.try_into().unwrap();
    if &magic != SHARE_MAGIC {
        return Err(StoreError::BadMagic(magic));
    }
    let version = rd.u16()?;
    if version != SHARE_VERSION {
        return Err(StoreError::BadVersion(version));
    }
    let token_len = rd.u16()? as usize;
    let token = std::str::from_utf8(rd.take(token_len)?)
        .map_err(|_| StoreError::Format("field token is not UTF-8".into()))?;
    let field: FieldSpec = token.parse().map_err(|e| StoreError::Format(format!("{e}")))?;
    let server = rd.usize("j")?;
    let r = rd.usize("r")?;
    let ktilde = rd.usize("k~")?;
    let stilde = rd.usize("s~")?;
    let ctr = rd.u64()?;
    let chunks = rd.usize("c")?;
    if ktilde.checked_add(stilde) != Some(r) {
        return Err(StoreError::Format(format!("r = {r} but k~ + s~ = {ktilde} + {stilde}")));
    }
    if chunks == 0 || server == 0 {
        return Err(StoreError::Format("j and c must be positive".into()));
    }
    let es = field.element_size();
    let body = r
        .checked_mul(2)
        .and_then(|v| v.checked_mul(chunks))
        .and_then(|v| v.checked_mul(es))
        .ok_or_else(|| StoreError::Format("body size overflows".into()))?;
    let body = rd.take(body)?;
    if rd.pos != bytes.len() {
        return Err(StoreError::TrailingBytes(bytes.len() - rd.pos));
    }
    let mut elems = body.chunks_exact(es).map(|b| {
        let mut w = [0u8; 8];
        w[..es].copy_from_slice(b);
        u64::from_le_bytes(w)
    });
    let mut cells = Vec::with_capacity(r);
    for _ in 0..r {
        let block = Block(elems.by_ref().take(chunks).collect());
        let tag = Tag(elems.by_ref().take(chunks).collect());
        cells.push(Cell { block, tag });
    }
    let params = ShareParams { ktilde, stilde, chunks, ctr };
    ServerState::store_share(server, fid, field, params, cells).map_err(|e| StoreError::Format(e.to_string()))
}

/// `<root>/server_<j>/<fid>.share`
pub fn share_path(root: &Path, server: usize, fid: Fid) -> PathBuf {
    root.join(format!("server_{server}")).join(format!("{fid}.share"))
}

pub fn write_share(state: &ServerState, path: &Path) -> Result<(), StoreError> {
    write_atomic(path, &encode_share(state), None)
}

/// Reads a share; the file id is parsed from the file stem.
pub fn read_share(path: &Path) -> Result<ServerState, StoreError> {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
    let fid: Fid = stem
        .parse()
        .map_err(|_| StoreError::Format(format!("file name {stem:?} is not a file id")))?;
    let bytes = fs::read(path).map_err(|e| StoreError::io(path, e))?;
    decode_share(&bytes, fid)
}

/// Writes to a sibling temp file, then renames over `path`.
fn write_atomic(path: &Path, bytes: &[u8], mode: Option<u32>) -> Result<(), StoreError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| StoreError::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let mut opts = fs::OpenOptions::new();
    opts.write(true).create(true).truncate(true);
    #[cfg(unix)]
    if let Some(mode) = mode {
        use std::os::unix::fs::OpenOptionsExt;
        opts.mode(mode);
    }
    #[cfg(not(unix))]
    let _ = mode;
    let mut file = opts.open(&tmp).map_err(|e| StoreError::io(&tmp, e))?;
    file.write_all(bytes).and_then(|_| file.sync_all()).map_err(|e| StoreError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| StoreError::io(path, e))
}

fn history_string(h: &VecDeque<bool>) -> String {
    h.iter().map(|&p| if p { 'P' } else { 'F' }).collect()
}

/// Text form of the metadata, one `key=value` per line.
pub fn encode_meta(meta: &FileMetadata) -> String {
    let mut out = String::new();
    let mut line = |k: &str, v: String| {
        out.push_str(k);
        out.push('=');
        out.push_str(&v);
        out.push('\n');
    };
    line("fid", meta.fid.to_string());
    line("field", meta.field.to_string());
    line("n", meta.n.to_string());
    line("k", meta.k.to_string());
    line("stilde", meta.stilde.to_string());
    line("ktilde", meta.ktilde.to_string());
    line("r", meta.r().to_string());
    line("ctr", meta.ctr.to_string());
    line("c", meta.chunks.to_string());
    line("original_length", meta.original_length.to_string());
    line("eps_q", meta.eps_q.to_string());
    line("eps_p", meta.eps_p.to_string());
    line("window", meta.window.to_string());
    line("stilde0", meta.stilde0.to_string());
    for (j, h) in meta.audit_history.iter().enumerate() {
        line(&format!("audit_{}", j + 1), history_string(h));
    }
    out
}

const META_KEYS: [&str; 14] = [
    "fid", "field", "n", "k", "stilde", "ktilde", "r", "ctr", "c", "original_length", "eps_q", "eps_p", "window",
    "stilde0",
];

/// Parses metadata. Every key, including `audit_1..=n`, is required and the
/// last line must be newline-terminated, so no strict prefix of a valid file
/// parses.
pub fn decode_meta(text: &str) -> Result<FileMetadata, StoreError> {
    if !text.ends_with('\n') {
        let line = text.lines().count().max(1);
        return Err(StoreError::Parse { line, msg: "unterminated last line".into() });
    }
    let mut values: HashMap<&'static str, (usize, &str)> = HashMap::new();
    let mut audits: Vec<(usize, usize, &str)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let perr = |msg: String| StoreError::Parse { line, msg };
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (key, value) = trimmed.split_once('=').ok_or_else(|| perr("expected key=value".into()))?;
        let (key, value) = (key.trim(), value.trim());
        if let Some(j) = key.strip_prefix("audit_") {
            let j: usize = j.parse().map_err(|_| perr(format!("bad audit key {key:?}")))?;
            if audits.iter().any(|a| a.0 == j) {
                return Err(perr(format!("duplicate key {key:?}")));
            }
            audits.push((j, line, value));
            continue;
        }
        let known = META_KEYS.iter().find(|k| **k == key).ok_or_else(|| perr(format!("unknown key {key:?}")))?;
        if values.insert(known, (line, value)).is_some() {
            return Err(perr(format!("duplicate key {key:?}")));
        }
    }
    let get = |key: &'static str| values.get(key).copied().ok_or(StoreError::MissingKey(key));
    fn num<T: std::str::FromStr>((line, v): (usize, &str), key: &str) -> Result<T, StoreError> {
        v.parse().map_err(|_| StoreError::Parse { line, msg: format!("{key}: cannot parse {v:?}") })
    }
    let (fl, fv) = get("fid")?;
    let fid: Fid = fv.parse().map_err(|_| StoreError::Parse { line: fl, msg: format!("fid: bad value {fv:?}") })?;
    let (tl, tv) = get("field")?;
    let field: FieldSpec = tv.parse().map_err(|e| StoreError::Parse { line: tl, msg: format!("field: {e}") })?;
    let n: usize = num(get("n")?, "n")?;
    let k: usize = num(get("k")?, "k")?;
    let stilde: usize = num(get("stilde")?, "stilde")?;
    let ktilde: usize = num(get("ktilde")?, "ktilde")?;
    let r: usize = num(get("r")?, "r")?;
    let ctr: u64 = num(get("ctr")?, "ctr")?;
    let chunks: usize = num(get("c")?, "c")?;
    let original_length: u64 = num(get("original_length")?, "original_length")?;
    let eps_q: f64 = num(get("eps_q")?, "eps_q")?;
    let eps_p: f64 = num(get("eps_p")?, "eps_p")?;
    let window: usize = num(get("window")?, "window")?;
    let stilde0: usize = num(get("stilde0")?, "stilde0")?;
    if ktilde.checked_add(stilde) != Some(r) {
        return Err(StoreError::Inconsistent(format!("r = {r} but k~ + s~ = {ktilde} + {stilde}")));
    }
    if n == 0 || n > MAX_SERVERS || n as u64 > field.order() {
        return Err(StoreError::Inconsistent(format!("n = {n} invalid for {field}")));
    }
    if let Some(missing) = (1..=n).find(|j| !audits.iter().any(|a| a.0 == *j)) {
        return Err(StoreError::Inconsistent(format!("missing key \"audit_{missing}\"")));
    }
    let mut audit_history = vec![VecDeque::new(); n];
    for (j, line, value) in audits {
        if j == 0 || j > n {
            return Err(StoreError::Parse { line, msg: format!("audit_{j} outside 1..={n}") });
        }
        let hist = value
            .chars()
            .map(|c| match c {
                'P' => Ok(true),
                'F' => Ok(false),
                _ => Err(StoreError::Parse { line, msg: format!("audit_{j}: unexpected {c:?}") }),
            })
            .collect::<Result<VecDeque<bool>, _>>()?;
        audit_history[j - 1] = hist;
    }
    let meta = FileMetadata {
        fid,
        field,
        n,
        k,
        stilde,
        ktilde,
        ctr,
        chunks,
        original_length,
        stilde0,
        eps_q,
        eps_p,
        window,
        audit_history,
    };
    meta.validate().map_err(|e| StoreError::Inconsistent(e.to_string()))?;
    let capacity = (ktilde as u128) * (k as u128) * (meta.block_bytes() as u128);
    if original_length as u128 > capacity {
        return Err(StoreError::Inconsistent(format!("original_length {original_length} exceeds grid capacity")));
    }
    Ok(meta)
}

pub fn write_meta(meta: &FileMetadata, path: &Path) -> Result<(), StoreError> {
    write_atomic(path, encode_meta(meta).as_bytes(), None)
}

pub fn read_meta(path: &Path) -> Result<FileMetadata, StoreError> {
    let text = fs::read_to_string(path).map_err(|e| StoreError::io(path, e))?;
    decode_meta(&text)
}

/// `alpha=` is decimal in prime fields and `0x`-hex in binary fields;
/// `kprf=` is 64 hex digits.
pub fn encode_key(sk: &SecretKey, field: FieldSpec) -> String {
    let alpha = match field.kind() {
        FieldKind::Prime => sk.alpha().to_string(),
        FieldKind::Binary => format!("{:#x}", sk.alpha()),
    };
    format!("alpha={alpha}\nkprf={}\n", hex::encode(sk.kprf()))
}

/// Parses a keyfile and checks `alpha` against `field`. Both alpha
/// notations are accepted in either field.
pub fn decode_key(text: &str, field: FieldSpec) -> Result<SecretKey, StoreError> {
    let mut alpha = None;
    let mut kprf = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let perr = |msg: String| StoreError::Parse { line, msg };
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (key, value) = trimmed.split_once('=').ok_or_else(|| perr("expected key=value".into()))?;
        match key.trim() {
            "alpha" if alpha.is_none() => {
                let v = value.trim();
                let parsed = match v.strip_prefix("0x") {
                    Some(h) if !h.is_empty() && h.len() <= 16 => u64::from_str_radix(h, 16).ok(),
                    Some(_) => None,
                    None if !v.starts_with('+') => v.parse().ok(),
                    None => None,
                };
                let a = parsed.ok_or_else(|| perr(format!("alpha: cannot parse {v:?}")))?;
                if !field.is_canonical(a) {
                    return Err(perr(format!("alpha is not an element of {field}")));
                }
                alpha = Some(a);
            }
            "kprf" if kprf.is_none() => {
                let mut k = [0u8; 32];
                hex::decode_to_slice(value.trim(), &mut k).map_err(|_| perr("kprf: expected 64 hex digits".into()))?;
                kprf = Some(k);
            }
            "alpha" | "kprf" => return Err(perr(format!("duplicate key {:?}", key.trim()))),
            other => return Err(perr(format!("unknown key {other:?}"))),
        }
    }
    let alpha = alpha.ok_or(StoreError::MissingKey("alpha"))?;
    let kprf = kprf.ok_or(StoreError::MissingKey("kprf"))?;
    Ok(SecretKey::from_parts(alpha, kprf))
}

/// Writes the keyfile with owner-only permissions on Unix.
pub fn write_key(sk: &SecretKey, field: FieldSpec, path: &Path) -> Result<(), StoreError> {
    write_atomic(path, encode_key(sk, field).as_bytes(), Some(0o600))
}

pub fn read_key(path: &Path, field: FieldSpec) -> Result<SecretKey, StoreError> {
    let text = fs::read_to_string(path).map_err(|e| StoreError::io(path, e))?;
    decode_key(&text, field)
}
