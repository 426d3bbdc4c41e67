use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::DenseMatrix;
use crate::error::{dim_err, Error, Result};

/// Smallest power of two `>= n` (with `next_power_of_two(0) == 1`).
pub fn next_power_of_two(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

/// Normalized Walsh–Hadamard transform, in place: `v ← (1/√d)·H_d·v`.
///
/// Iterative stride-doubling butterfly in natural (Sylvester) order, with the
/// `1/√d` factor applied once at the end.
pub fn fwht_in_place(v: &mut [f64]) -> Result<()> {
    let d = v.len();
    if d == 0 || !d.is_power_of_two() {
        return Err(dim_err(format!("Hadamard transform length {d} is not a power of two")));
    }
    butterfly(v);
    let scale = 1.0 / (d as f64).sqrt();
    for x in v.iter_mut() {
        *x *= scale;
    }
    Ok(())
}

// Unnormalized H_d·v. Caller guarantees a power-of-two length.
fn butterfly(v: &mut [f64]) {
    let d = v.len();
    let mut h = 1;
    while h < d {
        for block in v.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

/// Diagonal matrix of independent random signs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignDiagonal {
    negative: Vec<bool>,
}

impl SignDiagonal {
    /// Each sign is `+1` or `-1` with probability one half.
    pub fn random<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Self {
        Self {
            negative: (0..d).map(|_| rng.random::<bool>()).collect(),
        }
    }

    pub fn ones(d: usize) -> Self {
        Self {
            negative: vec![false; d],
        }
    }

    pub fn from_signs(signs: &[i8]) -> Result<Self> {
        let negative = signs
            .iter()
            .map(|&s| match s {
                1 => Ok(false),
                -1 => Ok(true),
                other => Err(Error::InvalidParameter(format!("sign {other} is not +1 or -1"))),
            })
            .collect::<Result<_>>()?;
        Ok(Self { negative })
    }

    pub fn len(&self) -> usize {
        self.negative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.negative.is_empty()
    }

    pub fn sign(&self, i: usize) -> f64 {
        if self.negative[i] {
            -1.0
        } else {
            1.0
        }
    }

    pub fn signs(&self) -> Vec<i8> {
        self.negative.iter().map(|&n| if n { -1 } else { 1 }).collect()
    }

    /// Multiplies `v[i]` by the `i`-th sign for `i < min(len, v.len())`.
    pub fn apply(&self, v: &mut [f64]) {
        for (x, &neg) in v.iter_mut().zip(&self.negative) {
            if neg {
                *x = -*x;
            }
        }
    }

    fn to_bits(&self) -> Vec<u8> {
        let mut bytes = vec![0u8; self.negative.len().div_ceil(8)];
        for (i, &neg) in self.negative.iter().enumerate() {
            if neg {
                bytes[i / 8] |= 1 << (i % 8);
            }
        }
        bytes
    }

    fn from_bits(len: usize, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != len.div_ceil(8) {
            return Err(Error::InvalidModel(format!(
                "{} sign bytes cannot hold exactly {len} signs",
                bytes.len()
            )));
        }
        Ok(Self {
            negative: (0..len).map(|i| bytes[i / 8] >> (i % 8) & 1 == 1).collect(),
        })
    }
}

// Serialized as a packed bit array (bit set = negative sign), hex encoded.
#[derive(Serialize, Deserialize)]
struct PackedSigns {
    len: usize,
    bits: String,
}

impl Serialize for SignDiagonal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PackedSigns {
            len: self.len(),
            bits: hex::encode(self.to_bits()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SignDiagonal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let packed = PackedSigns::deserialize(d)?;
        let bytes = hex::decode(&packed.bits).map_err(D::Error::custom)?;
        SignDiagonal::from_bits(packed.len, &bytes).map_err(D::Error::custom)
    }
}

/// Rotates every row: `X_r = X·D·H`.
///
/// The column count must be a power of two equal to the number of signs;
/// pad with zeros first otherwise.
pub fn rotate(x: &DenseMatrix, signs: &SignDiagonal) -> Result<DenseMatrix> {
    let d = x.cols();
    if !d.is_power_of_two() {
        return Err(dim_err(format!("cannot rotate {d} columns: not a power of two")));
    }
    if signs.len() != d {
        return Err(dim_err(format!("{} signs for {d} columns", signs.len())));
    }
    let mut out = x.clone();
    let scale = 1.0 / (d as f64).sqrt();
    out.values_mut().par_chunks_mut(d).for_each(|row| {
        signs.apply(row);
        butterfly(row);
        for v in row.iter_mut() {
            *v *= scale;
        }
    });
    Ok(out)
}
