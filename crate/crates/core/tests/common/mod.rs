//! Oracles shared by the integration tests, written independently of the
//! library's field and code modules.

#![allow(dead_code)]

pub fn mul(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

pub fn add(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 + b as u128) % p as u128) as u64
}

pub fn sub(a: u64, b: u64, p: u64) -> u64 {
    add(a, p - b % p, p)
}

/// Extended Euclid.
pub fn inv(a: u64, p: u64) -> u64 {
    let (mut r0, mut r1) = (p as i128, (a % p) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    assert_eq!(r0, 1, "{a} not invertible mod {p}");
    t0.rem_euclid(p as i128) as u64
}

pub fn cauchy(xs: &[u64], ys: &[u64], p: u64) -> Vec<Vec<u64>> {
    xs.iter().map(|&x| ys.iter().map(|&y| inv(sub(x, y, p), p)).collect()).collect()
}

/// `[I; C]` for the `(n, k)` code with `x_i = i - 1`, `y_j = p - j`.
pub fn generator(n: usize, k: usize, p: u64) -> Vec<Vec<u64>> {
    let xs: Vec<u64> = (0..(n - k) as u64).collect();
    let ys: Vec<u64> = (1..=k as u64).map(|j| p - j).collect();
    let mut g: Vec<Vec<u64>> = (0..k).map(|i| (0..k).map(|j| u64::from(i == j)).collect()).collect();
    g.extend(cauchy(&xs, &ys, p));
    g
}

/// `G_col * D * G_row^T`, chunk by chunk. `data[i][j]` is a chunk vector.
pub fn product_grid(data: &[Vec<Vec<u64>>], r: usize, n: usize, p: u64) -> Vec<Vec<Vec<u64>>> {
    let (kt, k, c) = (data.len(), data[0].len(), data[0][0].len());
    let gc = generator(r, kt, p);
    let gr = generator(n, k, p);
    let mut out = vec![vec![vec![0u64; c]; n]; r];
    for (i, out_row) in out.iter_mut().enumerate() {
        for (j, cell) in out_row.iter_mut().enumerate() {
            for (a, d_row) in data.iter().enumerate() {
                for (b, d) in d_row.iter().enumerate() {
                    let coef = mul(gc[i][a], gr[j][b], p);
                    if coef == 0 {
                        continue;
                    }
                    for u in 0..c {
                        cell[u] = add(cell[u], mul(coef, d[u], p), p);
                    }
                }
            }
        }
    }
    out
}

/// Blocks of `7 * c` bytes, each split into `c` big-endian 7-byte words.
pub fn pack_grid(bytes: &[u8], kt: usize, k: usize, c: usize) -> Vec<Vec<Vec<u64>>> {
    let word = |b: usize, u: usize| -> u64 {
        (0..7).fold(0u64, |acc, t| (acc << 8) | *bytes.get(b * 7 * c + u * 7 + t).unwrap_or(&0) as u64)
    };
    (0..kt).map(|i| (0..k).map(|j| (0..c).map(|u| word(i * k + j, u)).collect()).collect()).collect()
}
