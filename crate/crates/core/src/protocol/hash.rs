//! Toeplitz-matrix universal hashing for privacy amplification.

use rand::Rng;

use crate::rng::seeded;
use crate::Bit;

/// A `k × n` binary Toeplitz matrix, stored by its `n + k − 1` diagonals:
/// entry `(i, j)` is `diag[i + n − 1 − j]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToeplitzHash {
    n: usize,
    k: usize,
    diag: Vec<Bit>,
}

impl ToeplitzHash {
    /// Random matrix whose diagonals are drawn from `seed`.
    pub fn from_seed(n: usize, k: usize, seed: u64) -> Self {
        let mut rng = seeded(seed);
        let len = (n + k).saturating_sub(1);
        let diag = (0..len).map(|_| rng.random_range(0..2u8)).collect();
        ToeplitzHash { n, k, diag }
    }

    /// The `n × n` identity, which is itself Toeplitz.
    pub fn identity(n: usize) -> Self {
        let mut diag = vec![0; (2 * n).saturating_sub(1)];
        if n > 0 {
            diag[n - 1] = 1;
        }
        ToeplitzHash { n, k: n, diag }
    }

    pub fn input_len(&self) -> usize {
        self.n
    }

    pub fn output_len(&self) -> usize {
        self.k
    }

    pub fn entry(&self, row: usize, col: usize) -> Bit {
        self.diag[row + self.n - 1 - col]
    }

    /// `T · bits (mod 2)`. Column `j` is the contiguous window
    /// `diag[n−1−j .. n−1−j+k]`, so each set input bit XORs one window into
    /// the output. Windows are processed 64 bits at a time.
    pub fn apply(&self, bits: &[Bit]) -> Vec<Bit> {
        assert_eq!(bits.len(), self.n, "hash input length");
        let words = self.k.div_ceil(64);
        let packed = pack(&self.diag, words + 1);
        let mut out = vec![0u64; words];
        for (j, _) in bits.iter().enumerate().filter(|(_, &b)| b == 1) {
            let start = self.n - 1 - j;
            let (q, r) = (start / 64, start % 64);
            for (w, o) in out.iter_mut().enumerate() {
                let lo = packed[q + w] >> r;
                let hi = if r == 0 { 0 } else { packed[q + w + 1] << (64 - r) };
                *o ^= lo | hi;
            }
        }
        (0..self.k).map(|i| ((out[i / 64] >> (i % 64)) & 1) as Bit).collect()
    }
}

/// Little-endian bit packing with `extra` zero words of padding.
fn pack(bits: &[Bit], extra: usize) -> Vec<u64> {
    let mut words = vec![0u64; bits.len().div_ceil(64) + extra];
    for (i, &b) in bits.iter().enumerate() {
        words[i / 64] |= u64::from(b & 1) << (i % 64);
    }
    words
}

/// Compress `bits` to `⌊pa_compression · n⌋` bits with the Toeplitz hash
/// drawn from `seed`.
pub fn privacy_amplify(bits: &[Bit], pa_compression: f64, seed: u64) -> Vec<Bit> {
    let n = bits.len();
    let k = output_len(n, pa_compression);
    if k == 0 {
        return Vec::new();
    }
    ToeplitzHash::from_seed(n, k, seed).apply(bits)
}

/// `⌊c·n⌋`, nudged so that exact products like `0.9 × 900` are not lost to
/// rounding.
pub(crate) fn output_len(n: usize, pa_compression: f64) -> usize {
    ((pa_compression * n as f64) + 1e-9).floor().min(n as f64) as usize
}
