//! Finite-field arithmetic over a prime field `Z_p` or a binary field `GF(2^w)`.
//!
//! Elements are carried as canonical `u64` residues: an integer in `[0, p)` for
//! prime fields, a `w`-bit word for binary fields. Every [`FieldSpec`] method
//! takes canonical inputs and returns canonical outputs; use
//! [`FieldSpec::element`] to validate untrusted values.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rand::Rng;
use thiserror::Error;

/// `2^61 - 1`, the default prime modulus.
pub const MERSENNE_61: u64 = (1 << 61) - 1;

/// Reduction polynomial for GF(2^8): x^8 + x^4 + x^3 + x^2 + 1.
pub const GF8_POLY: u32 = 0x11D;
/// Reduction polynomial for GF(2^16): x^16 + x^12 + x^3 + x + 1.
pub const GF16_POLY: u32 = 0x1100B;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("modulus {0} is not an odd prime below 2^62")]
    NotPrime(u64),
    #[error("unsupported binary field width {0} (expected 8 or 16)")]
    UnsupportedWidth(u32),
    #[error("value {value} is not a canonical element of {field}")]
    NotCanonical { value: u64, field: FieldSpec },
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("invalid field token {0:?}")]
    BadToken(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Kind {
    Prime(u64),
    Gf8,
    Gf16,
}

/// Description of the arithmetic domain. Cheap to copy; binary-field tables
/// are process-wide and built on first use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldSpec {
    kind: Kind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Prime,
    Binary,
}

impl FieldSpec {
    /// Prime field `Z_p`. `p` must be an odd prime below `2^62`.
    pub fn prime(p: u64) -> Result<Self, FieldError> {
        if !(3..1 << 62).contains(&p) || !is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        Ok(FieldSpec { kind: Kind::Prime(p) })
    }

    /// `Z_p` with `p = 2^61 - 1`.
    pub fn default_prime() -> Self {
        FieldSpec { kind: Kind::Prime(MERSENNE_61) }
    }

    /// Binary field `GF(2^w)` for `w` in {8, 16}.
    pub fn binary(w: u32) -> Result<Self, FieldError> {
        match w {
            8 => Ok(FieldSpec { kind: Kind::Gf8 }),
            16 => Ok(FieldSpec { kind: Kind::Gf16 }),
            _ => Err(FieldError::UnsupportedWidth(w)),
        }
    }

    pub fn kind(&self) -> FieldKind {
        match self.kind {
            Kind::Prime(_) => FieldKind::Prime,
            _ => FieldKind::Binary,
        }
    }

    /// Number of elements in the field (`p` or `2^w`).
    pub fn order(&self) -> u64 {
        match self.kind {
            Kind::Prime(p) => p,
            Kind::Gf8 => 1 << 8,
            Kind::Gf16 => 1 << 16,
        }
    }

    /// Bytes used to store one element on disk: 8 for prime fields, `w/8` for binary.
    pub fn element_size(&self) -> usize {
        match self.kind {
            Kind::Prime(_) => 8,
            Kind::Gf8 => 1,
            Kind::Gf16 => 2,
        }
    }

    /// Bytes of file payload packed into one element. Zero for primes below 257.
    pub fn packed_bytes(&self) -> usize {
        match self.kind {
            Kind::Prime(p) => ((64 - p.leading_zeros()) as usize - 1) / 8,
            Kind::Gf8 => 1,
            Kind::Gf16 => 2,
        }
    }

    pub fn is_canonical(&self, value: u64) -> bool {
        value < self.order()
    }

    /// Checks that `value` is a canonical residue.
    pub fn element(&self, value: u64) -> Result<u64, FieldError> {
        if self.is_canonical(value) {
            Ok(value)
        } else {
            Err(FieldError::NotCanonical { value, field: *self })
        }
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        match self.kind {
            Kind::Prime(p) => {
                let s = a + b;
                if s >= p {
                    s - p
                } else {
                    s
                }
            }
            _ => a ^ b,
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        match self.kind {
            Kind::Prime(p) => {
                if a >= b {
                    a - b
                } else {
                    a + p - b
                }
            }
            _ => a ^ b,
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        self.sub(0, a)
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        match self.kind {
            Kind::Prime(MERSENNE_61) => mul_mersenne61(a, b),
            Kind::Prime(p) => ((a as u128 * b as u128) % p as u128) as u64,
            Kind::Gf8 => gf8().mul[((a as usize) << 8) | b as usize] as u64,
            Kind::Gf16 => {
                if a == 0 || b == 0 {
                    return 0;
                }
                let t = gf16();
                t.exp[t.log[a as usize] as usize + t.log[b as usize] as usize] as u64
            }
        }
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse; zero is an error.
    pub fn inv(&self, a: u64) -> Result<u64, FieldError> {
        if a == 0 {
            return Err(FieldError::ZeroInverse);
        }
        Ok(match self.kind {
            Kind::Prime(p) => self.pow(a, p - 2),
            Kind::Gf8 => gf8().inv[a as usize] as u64,
            Kind::Gf16 => {
                let t = gf16();
                t.exp[(65535 - t.log[a as usize] as usize) % 65535] as u64
            }
        })
    }

    /// Reduces a 16-byte PRF output into the field: big-endian integer mod `p`
    /// for prime fields, the low `w` bits for binary fields.
    pub fn from_wide_bytes(&self, bytes: &[u8; 16]) -> u64 {
        let v = u128::from_be_bytes(*bytes);
        match self.kind {
            Kind::Prime(p) => (v % p as u128) as u64,
            Kind::Gf8 => (v & 0xFF) as u64,
            Kind::Gf16 => (v & 0xFFFF) as u64,
        }
    }

    /// Uniformly random element.
    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        rng.gen_range(0..self.order())
    }

    /// `dst[u] += coef * src[u]` for every `u`.
    pub fn mul_add_slice(&self, dst: &mut [u64], src: &[u64], coef: u64) {
        debug_assert_eq!(dst.len(), src.len());
        if coef == 0 {
            return;
        }
        match self.kind {
            Kind::Gf8 => {
                let row = &gf8().mul[(coef as usize) << 8..][..256];
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d ^= row[s as usize] as u64;
                }
            }
            Kind::Gf16 => {
                let t = gf16();
                let lc = t.log[coef as usize] as usize;
                for (d, &s) in dst.iter_mut().zip(src) {
                    if s != 0 {
                        *d ^= t.exp[t.log[s as usize] as usize + lc] as u64;
                    }
                }
            }
            Kind::Prime(_) => {
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d = self.add(*d, self.mul(coef, s));
                }
            }
        }
    }

    /// `dst[u] += src[u]` for every `u`.
    pub fn add_slice(&self, dst: &mut [u64], src: &[u64]) {
        debug_assert_eq!(dst.len(), src.len());
        for (d, &s) in dst.iter_mut().zip(src) {
            *d = self.add(*d, s);
        }
    }

    /// Packs bytes into elements, `packed_bytes()` big-endian bytes per element.
    /// The final element is zero-padded on the right.
    pub fn pack(&self, bytes: &[u8]) -> Vec<u64> {
        let width = self.packed_bytes();
        assert!(width > 0, "field {self} too small to carry bytes");
        bytes
            .chunks(width)
            .map(|chunk| {
                let mut v = 0u64;
                for i in 0..width {
                    v = (v << 8) | *chunk.get(i).unwrap_or(&0) as u64;
                }
                v
            })
            .collect()
    }

    /// Inverse of [`FieldSpec::pack`]; emits `packed_bytes()` bytes per element.
    pub fn unpack(&self, elements: &[u64], out: &mut Vec<u8>) {
        let width = self.packed_bytes();
        for &e in elements {
            for i in (0..width).rev() {
                out.push((e >> (8 * i)) as u8);
            }
        }
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            Kind::Prime(p) => write!(f, "zp:{p}"),
            Kind::Gf8 => f.write_str("gf2:8"),
            Kind::Gf16 => f.write_str("gf2:16"),
        }
    }
}

impl FromStr for FieldSpec {
    type Err = FieldError;

    /// Parses `zp:<decimal p>` or `gf2:<w>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || FieldError::BadToken(s.to_string());
        let (kind, arg) = s.split_once(':').ok_or_else(bad)?;
        if arg.is_empty() || !arg.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let value: u64 = arg.parse().map_err(|_| bad())?;
        match kind {
            "zp" => FieldSpec::prime(value),
            "gf2" => FieldSpec::binary(u32::try_from(value).map_err(|_| bad())?),
            _ => Err(bad()),
        }
    }
}

#[inline]
fn mul_mersenne61(a: u64, b: u64) -> u64 {
    let x = a as u128 * b as u128;
    let lo = (x as u64) & MERSENNE_61;
    let hi = (x >> 61) as u64;
    let mut r = lo + hi;
    if r >= MERSENNE_61 {
        r -= MERSENNE_61;
    }
    if r >= MERSENNE_61 {
        r -= MERSENNE_61;
    }
    r
}

/// Deterministic Miller-Rabin, exact for all 64-bit inputs.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const SMALL: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &q in &SMALL {
        if n.is_multiple_of(q) {
            return n == q;
        }
    }
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let powmod = |mut b: u64, mut e: u64| {
        let mut acc = 1u64;
        b %= n;
        while e > 0 {
            if e & 1 == 1 {
                acc = mulmod(acc, b);
            }
            b = mulmod(b, b);
            e >>= 1;
        }
        acc
    };
    let d_shift = (n - 1).trailing_zeros();
    let d = (n - 1) >> d_shift;
    'witness: for &a in &SMALL {
        let mut x = powmod(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..d_shift {
            x = mulmod(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Carry-less multiply of two `w`-bit words reduced by `poly`.
fn clmul_reduce(mut a: u32, mut b: u32, w: u32, poly: u32) -> u32 {
    let mut acc = 0u32;
    while b != 0 {
        if b & 1 == 1 {
            acc ^= a;
        }
        b >>= 1;
        a <<= 1;
        if a & (1 << w) != 0 {
            a ^= poly;
        }
    }
    acc
}

struct Gf8Tables {
    mul: Vec<u8>,
    inv: [u8; 256],
}

struct Gf16Tables {
    log: Vec<u16>,
    // doubled so log[a] + log[b] never needs a modulo
    exp: Vec<u16>,
}

fn gf8() -> &'static Gf8Tables {
    static TABLES: OnceLock<Gf8Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut mul = vec![0u8; 256 * 256];
        let mut inv = [0u8; 256];
        for a in 0..256u32 {
            for b in 0..256u32 {
                let p = clmul_reduce(a, b, 8, GF8_POLY) as u8;
                mul[((a as usize) << 8) | b as usize] = p;
                if p == 1 {
                    inv[a as usize] = b as u8;
                }
            }
        }
        Gf8Tables { mul, inv }
    })
}

fn gf16() -> &'static Gf16Tables {
    static TABLES: OnceLock<Gf16Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut log = vec![0u16; 1 << 16];
        let mut exp = vec![0u16; 2 * 65535];
        let mut x: u32 = 1;
        for i in 0..65535usize {
            exp[i] = x as u16;
            exp[i + 65535] = x as u16;
            log[x as usize] = i as u16;
            x <<= 1;
            if x & 0x10000 != 0 {
                x ^= GF16_POLY;
            }
        }
        assert_eq!(x, 1, "GF(2^16) polynomial is not primitive");
        Gf16Tables { log, exp }
    })
}
