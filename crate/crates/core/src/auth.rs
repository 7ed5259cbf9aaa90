//! Secret keys, the keyed PRF, and per-chunk homomorphic tags.
//!
//! A tag chunk is `sigma[u] = prf(fid, i, j, ctr, u) + alpha * m[u]`. Because
//! the map is affine in `m`, linear combinations of tags verify against the
//! same linear combination of blocks, and a tag can be moved to a new
//! `(i, ctr)` and a new block value by adding a delta that needs only the
//! change in the block.

use std::fmt;
use std::ops::{Deref, DerefMut};
use std::str::FromStr;

use rand::{Rng, RngCore};
use sha2::block_api::compress256;
use thiserror::Error;

use crate::field::FieldSpec;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AuthError {
    #[error("block has {block} chunks but tag has {tag}")]
    LengthMismatch { block: usize, tag: usize },
    #[error("alpha {0} is not an element of {1}")]
    AlphaOutOfField(u64, FieldSpec),
}

/// 128-bit file identifier; displayed as 32 lowercase hex digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fid(pub u128);

impl Fid {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Fid(rng.gen())
    }
}

impl fmt::Display for Fid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:032x}", self.0)
    }
}

impl FromStr for Fid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.len() != 32 || !s.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(format!("fid must be 32 hex digits, got {s:?}"));
        }
        u128::from_str_radix(s, 16).map(Fid).map_err(|e| e.to_string())
    }
}

const SHA256_IV: [u32; 8] = [
    0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a, 0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19,
];

/// HMAC-SHA256 with the key pads already absorbed. Every PRF input is 48
/// bytes, so a call is exactly two compressions.
#[derive(Clone)]
struct HmacState {
    inner: [u32; 8],
    outer: [u32; 8],
}

impl HmacState {
    fn new(key: &[u8; 32]) -> Self {
        let pad = |byte: u8| {
            let mut block = [byte; 64];
            for (b, k) in block.iter_mut().zip(key) {
                *b ^= k;
            }
            let mut state = SHA256_IV;
            compress256(&mut state, &[block]);
            state
        };
        HmacState { inner: pad(0x36), outer: pad(0x5c) }
    }

    /// `block[..48]` holds the message; the rest is overwritten with padding.
    fn mac48(&self, block: &mut [u8; 64]) -> [u8; 16] {
        block[48] = 0x80;
        block[49..56].fill(0);
        block[56..].copy_from_slice(&((64u64 + 48) * 8).to_be_bytes());
        let mut inner = self.inner;
        compress256(&mut inner, &[*block]);
        let mut outer_block = [0u8; 64];
        for (dst, w) in outer_block.chunks_exact_mut(4).zip(inner) {
            dst.copy_from_slice(&w.to_be_bytes());
        }
        outer_block[32] = 0x80;
        outer_block[56..].copy_from_slice(&((64u64 + 32) * 8).to_be_bytes());
        let mut outer = self.outer;
        compress256(&mut outer, &[outer_block]);
        let mut out = [0u8; 16];
        for (dst, w) in out.chunks_exact_mut(4).zip(outer) {
            dst.copy_from_slice(&w.to_be_bytes());
        }
        out
    }
}

/// Client secret: the tag multiplier `alpha` and the PRF key.
#[derive(Clone)]
pub struct SecretKey {
    alpha: u64,
    kprf: [u8; 32],
    mac: HmacState,
}

impl fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SecretKey").finish_non_exhaustive()
    }
}

impl PartialEq for SecretKey {
    fn eq(&self, other: &Self) -> bool {
        self.alpha == other.alpha && self.kprf == other.kprf
    }
}

impl Eq for SecretKey {}

impl SecretKey {
    pub fn generate<R: RngCore + ?Sized>(field: FieldSpec, rng: &mut R) -> Self {
        let alpha = field.random(rng);
        let mut kprf = [0u8; 32];
        rng.fill_bytes(&mut kprf);
        Self::from_parts(alpha, kprf)
    }

    pub fn from_parts(alpha: u64, kprf: [u8; 32]) -> Self {
        SecretKey { alpha, kprf, mac: HmacState::new(&kprf) }
    }

    pub fn alpha(&self) -> u64 {
        self.alpha
    }

    pub fn kprf(&self) -> &[u8; 32] {
        &self.kprf
    }

    /// Rejects keys whose `alpha` does not belong to `field`.
    pub fn check_field(&self, field: FieldSpec) -> Result<(), AuthError> {
        if field.is_canonical(self.alpha) {
            Ok(())
        } else {
            Err(AuthError::AlphaOutOfField(self.alpha, field))
        }
    }

    /// Raw 16-byte PRF window: the first half of
    /// `HMAC-SHA256(kprf, fid || i || j || ctr || u)`, each index 8 bytes big-endian.
    pub fn prf_bytes(&self, ctx: &TagContext, u: u64) -> [u8; 16] {
        let mut block = ctx.message_block();
        block[40..48].copy_from_slice(&u.to_be_bytes());
        self.mac.mac48(&mut block)
    }

    /// PRF value for chunk `u` of the cell named by `ctx`.
    pub fn prf(&self, field: FieldSpec, ctx: &TagContext, u: u64) -> u64 {
        field.from_wide_bytes(&self.prf_bytes(ctx, u))
    }

    /// PRF values for chunks `0..out.len()` of `ctx`.
    pub fn prf_row(&self, field: FieldSpec, ctx: &TagContext, out: &mut [u64]) {
        let template = ctx.message_block();
        for (u, o) in out.iter_mut().enumerate() {
            let mut block = template;
            block[40..48].copy_from_slice(&(u as u64).to_be_bytes());
            *o = field.from_wide_bytes(&self.mac.mac48(&mut block));
        }
    }
}

/// Position and freshness of a tagged cell. Rows and servers are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TagContext {
    pub fid: Fid,
    pub row: u64,
    pub server: u64,
    pub ctr: u64,
}

impl TagContext {
    pub fn new(fid: Fid, row: usize, server: usize, ctr: u64) -> Self {
        TagContext { fid, row: row as u64, server: server as u64, ctr }
    }

    /// `fid || i || j || ctr` in the first 40 bytes of a hash block.
    fn message_block(&self) -> [u8; 64] {
        let mut block = [0u8; 64];
        block[..16].copy_from_slice(&self.fid.0.to_be_bytes());
        block[16..24].copy_from_slice(&self.row.to_be_bytes());
        block[24..32].copy_from_slice(&self.server.to_be_bytes());
        block[32..40].copy_from_slice(&self.ctr.to_be_bytes());
        block
    }
}

macro_rules! chunk_vector {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, Default)]
        pub struct $name(pub Vec<u64>);

        impl $name {
            pub fn zeros(chunks: usize) -> Self {
                $name(vec![0; chunks])
            }

            pub fn into_inner(self) -> Vec<u64> {
                self.0
            }
        }

        impl Deref for $name {
            type Target = [u64];

            fn deref(&self) -> &[u64] {
                &self.0
            }
        }

        impl DerefMut for $name {
            fn deref_mut(&mut self) -> &mut [u64] {
                &mut self.0
            }
        }

        impl From<Vec<u64>> for $name {
            fn from(v: Vec<u64>) -> Self {
                $name(v)
            }
        }
    };
}

chunk_vector!(
    /// A storage block as `c` field-element chunks.
    Block
);
chunk_vector!(
    /// Per-chunk authentication tag of a [`Block`].
    Tag
);

pub fn tag_block(sk: &SecretKey, field: FieldSpec, m: &[u64], ctx: &TagContext) -> Tag {
    let mut tag = vec![0; m.len()];
    sk.prf_row(field, ctx, &mut tag);
    field.mul_add_slice(&mut tag, m, sk.alpha);
    Tag(tag)
}

pub fn verify_block(
    sk: &SecretKey,
    field: FieldSpec,
    m: &[u64],
    t: &[u64],
    ctx: &TagContext,
) -> Result<bool, AuthError> {
    if m.len() != t.len() {
        return Err(AuthError::LengthMismatch { block: m.len(), tag: t.len() });
    }
    Ok(tag_block(sk, field, m, ctx).0 == t)
}

/// Delta that moves a tag from `(old, m)` to `(new, m + delta_m)`:
/// `prf(new, u) - prf(old, u) + alpha * delta_m[u]`.
pub fn tag_delta(
    sk: &SecretKey,
    field: FieldSpec,
    ctx_old: &TagContext,
    ctx_new: &TagContext,
    delta_m: &[u64],
) -> Tag {
    let mut shift = vec![0; delta_m.len()];
    let mut old = vec![0; delta_m.len()];
    sk.prf_row(field, ctx_new, &mut shift);
    sk.prf_row(field, ctx_old, &mut old);
    for ((d, o), &dm) in shift.iter_mut().zip(&old).zip(delta_m) {
        *d = field.add(field.sub(*d, *o), field.mul(sk.alpha, dm));
    }
    Tag(shift)
}

#[cfg(test)]
mod tests {
    use super::*;
    use hmac::{Hmac, KeyInit, Mac};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn setup(field: FieldSpec, seed: u64) -> (SecretKey, ChaCha8Rng) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (SecretKey::generate(field, &mut rng), rng)
    }

    fn ctx(row: usize, server: usize, ctr: u64) -> TagContext {
        TagContext::new(Fid(0xABCD), row, server, ctr)
    }

    #[test]
    fn prf_is_deterministic_and_separates_ctr_and_chunk() {
        let f = FieldSpec::default_prime();
        let (sk, _) = setup(f, 1);
        assert_eq!(sk.prf(f, &ctx(3, 4, 5), 0), sk.prf(f, &ctx(3, 4, 5), 0));
        let mut by_ctr = HashSet::new();
        let mut by_chunk = HashSet::new();
        for q in 0..10_000u64 {
            by_ctr.insert(sk.prf(f, &ctx(3, 4, q), 0));
            by_chunk.insert(sk.prf(f, &ctx(3, 4, 0), q));
        }
        assert_eq!(by_ctr.len(), 10_000);
        assert_eq!(by_chunk.len(), 10_000);
    }

    #[test]
    fn toy_tag_value() {
        // Z_11 with alpha = 3: sigma = prf + 3 * 4; prf value taken from the key itself
        let f = FieldSpec::prime(11).unwrap();
        let sk = SecretKey::from_parts(3, [9; 32]);
        let c = ctx(1, 1, 0);
        let prf = sk.prf(f, &c, 0);
        let tag = tag_block(&sk, f, &[4], &c);
        assert_eq!(tag[0], (prf + 12) % 11);
        assert_eq!(tag_block(&sk, f, &[0, 0], &c).0, vec![prf, sk.prf(f, &c, 1)]);
    }

    #[test]
    fn tag_round_trip_and_tamper() {
        let f = FieldSpec::default_prime();
        let (sk, mut rng) = setup(f, 2);
        for _ in 0..1000 {
            let m: Vec<u64> = (0..3).map(|_| f.random(&mut rng)).collect();
            let c = ctx(rng.gen_range(1..50), rng.gen_range(1..16), rng.gen_range(0..5));
            let t = tag_block(&sk, f, &m, &c);
            assert!(verify_block(&sk, f, &m, &t, &c).unwrap());
            let mut bad = m.clone();
            let u = rng.gen_range(0..3);
            bad[u] = f.add(bad[u], 1);
            assert_eq!(verify_block(&sk, f, &bad, &t, &c).unwrap(), sk.alpha() == 0);
            let stale = TagContext { ctr: c.ctr + 1, ..c };
            assert!(!verify_block(&sk, f, &m, &t, &stale).unwrap());
        }
        assert!(verify_block(&sk, f, &[1, 2], &[1], &ctx(1, 1, 0)).is_err());
    }

    #[test]
    fn counter_binding() {
        let f = FieldSpec::default_prime();
        let (sk, mut rng) = setup(f, 3);
        for _ in 0..10_000 {
            let m = [f.random(&mut rng)];
            let c = ctx(rng.gen_range(1..100), rng.gen_range(1..16), rng.gen_range(0..100));
            let t = tag_block(&sk, f, &m, &c);
            let other = TagContext { ctr: c.ctr + rng.gen_range(1..100), ..c };
            assert!(!verify_block(&sk, f, &m, &t, &other).unwrap());
        }
    }

    #[test]
    fn tag_delta_moves_tags() {
        for f in [FieldSpec::default_prime(), FieldSpec::binary(16).unwrap()] {
            let (sk, mut rng) = setup(f, 4);
            let zero = tag_delta(&sk, f, &ctx(5, 2, 1), &ctx(5, 2, 1), &[0, 0]);
            assert_eq!(zero.0, vec![0, 0]);
            for _ in 0..1000 {
                let m: Vec<u64> = (0..4).map(|_| f.random(&mut rng)).collect();
                let dm: Vec<u64> = (0..4).map(|_| f.random(&mut rng)).collect();
                let (row, server, q) = (rng.gen_range(2..40), rng.gen_range(1..16), rng.gen_range(1..9));
                let old = ctx(row, server, q - 1);
                let new = ctx(row + 1, server, q);
                let mut t = tag_block(&sk, f, &m, &old);
                let delta = tag_delta(&sk, f, &old, &new, &dm);
                f.add_slice(&mut t, &delta);
                let mut updated = m.clone();
                f.add_slice(&mut updated, &dm);
                assert!(verify_block(&sk, f, &updated, &t, &new).unwrap());
                assert_eq!(t, tag_block(&sk, f, &updated, &new));
            }
        }
    }

    #[test]
    fn fid_text_round_trip() {
        let fid = Fid(0x0123_4567_89ab_cdef_0011_2233_4455_6677);
        assert_eq!(fid.to_string().parse::<Fid>().unwrap(), fid);
        assert!("xyz".parse::<Fid>().is_err());
        assert!("+0000000000000000000000000000000".parse::<Fid>().is_err());
    }

    #[test]
    fn prf_matches_reference_hmac() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..200 {
            let mut kprf = [0u8; 32];
            rng.fill_bytes(&mut kprf);
            let sk = SecretKey::from_parts(1, kprf);
            let ctx = TagContext { fid: Fid(rng.gen()), row: rng.gen(), server: rng.gen(), ctr: rng.gen() };
            let u: u64 = rng.gen();
            let mut mac = <Hmac<sha2::Sha256> as KeyInit>::new_from_slice(&kprf).unwrap();
            mac.update(&ctx.fid.0.to_be_bytes());
            for v in [ctx.row, ctx.server, ctx.ctr, u] {
                mac.update(&v.to_be_bytes());
            }
            let reference = mac.finalize().into_bytes();
            assert_eq!(sk.prf_bytes(&ctx, u), reference[..16]);
        }
    }

    #[test]
    fn prf_row_matches_single_calls() {
        let sk = SecretKey::from_parts(3, [9; 32]);
        let f = FieldSpec::binary(16).unwrap();
        let ctx = TagContext::new(Fid(5), 2, 3, 4);
        let mut row = vec![0; 40];
        sk.prf_row(f, &ctx, &mut row);
        for (u, v) in row.iter().enumerate() {
            assert_eq!(*v, sk.prf(f, &ctx, u as u64));
        }
    }
}
