//! Square QAM with binary-reflected Gray mapping per rail.
//!
//! Levels are the unnormalised odd integers `{-(s-1), ..., -1, 1, ..., s-1}`
//! with `s = sqrt(M)`. Level index `k` (ascending) carries the Gray word
//! `k ^ (k >> 1)`. A symbol's first `log2(M) / 2` bits select the real rail
//! and the rest the imaginary rail, most significant bit first.

use nalgebra::Complex;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Qam {
    order: usize,
    side: usize,
    rail_bits: usize,
}

impl Qam {
    /// `order` must be a power of four between 4 and 1024.
    pub fn new(order: usize) -> Result<Self> {
        let rail_bits = order.trailing_zeros() as usize / 2;
        if !(4..=1024).contains(&order) || !order.is_power_of_two() || !order.trailing_zeros().is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!("QAM order must be a power of 4, got {order}")));
        }
        Ok(Self { order, side: 1 << rail_bits, rail_bits })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Levels per rail, `sqrt(M)`.
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn bits_per_symbol(&self) -> usize {
        2 * self.rail_bits
    }

    /// Offset `sqrt(M) - 1` of the affine map between levels and indices.
    pub fn offset(&self) -> f64 {
        (self.side - 1) as f64
    }

    /// Average symbol energy `2 (M - 1) / 3` of the unnormalised constellation.
    pub fn symbol_energy(&self) -> f64 {
        2.0 * (self.order as f64 - 1.0) / 3.0
    }

    /// PAM level of index `k`: `2k - (sqrt(M) - 1)`.
    pub fn level(&self, k: i64) -> f64 {
        2.0 * k as f64 - self.offset()
    }

    /// Index of the level closest to `value`, clipped to the alphabet.
    pub fn nearest_index(&self, value: f64) -> i64 {
        clip_index(((value + self.offset()) / 2.0).round() as i64, self.side)
    }

    fn rail_index(&self, bits: &[u8]) -> i64 {
        let word = bits.iter().fold(0usize, |acc, &b| (acc << 1) | usize::from(b != 0));
        gray_decode(word) as i64
    }

    fn push_rail_bits(&self, index: i64, out: &mut Vec<u8>) {
        let word = gray_encode(index as usize);
        for b in (0..self.rail_bits).rev() {
            out.push(((word >> b) & 1) as u8);
        }
    }

    /// Map a bit stream to symbols.
    pub fn map(&self, bits: &[u8]) -> Result<Vec<Complex<f64>>> {
        let bps = self.bits_per_symbol();
        if !bits.len().is_multiple_of(bps) {
            return Err(Error::InvalidBitCount { bits: bits.len(), bits_per_symbol: bps });
        }
        Ok(bits
            .chunks(bps)
            .map(|chunk| {
                let (re, im) = chunk.split_at(self.rail_bits);
                Complex::new(self.level(self.rail_index(re)), self.level(self.rail_index(im)))
            })
            .collect())
    }

    /// Hard-decision demapping of (possibly noisy) symbols.
    pub fn demap(&self, symbols: &[Complex<f64>]) -> Vec<u8> {
        let mut out = Vec::with_capacity(symbols.len() * self.bits_per_symbol());
        for s in symbols {
            self.push_rail_bits(self.nearest_index(s.re), &mut out);
            self.push_rail_bits(self.nearest_index(s.im), &mut out);
        }
        out
    }

    /// Bits for a stacked real index vector `[Re idx; Im idx]`, as produced by
    /// the lattice decoders. Indices outside the alphabet are clipped.
    pub fn demap_indices(&self, u: &[i64]) -> Vec<u8> {
        let n = u.len() / 2;
        let mut out = Vec::with_capacity(n * self.bits_per_symbol());
        for j in 0..n {
            self.push_rail_bits(clip_index(u[j], self.side), &mut out);
            self.push_rail_bits(clip_index(u[n + j], self.side), &mut out);
        }
        out
    }

    /// Stacked integer indices `u = (s + sqrt(M) - 1) / 2` of complex symbols.
    pub fn symbols_to_lattice(&self, symbols: &[Complex<f64>]) -> Vec<i64> {
        let to_index = |v: f64| ((v + self.offset()) / 2.0).round() as i64;
        symbols
            .iter()
            .map(|s| to_index(s.re))
            .chain(symbols.iter().map(|s| to_index(s.im)))
            .collect()
    }

    /// Inverse of [`Qam::symbols_to_lattice`].
    pub fn lattice_to_symbols(&self, u: &[i64]) -> Vec<Complex<f64>> {
        let n = u.len() / 2;
        (0..n).map(|j| Complex::new(self.level(u[j]), self.level(u[n + j]))).collect()
    }
}

pub fn qam_map(bits: &[u8], order: usize) -> Result<Vec<Complex<f64>>> {
    Qam::new(order)?.map(bits)
}

pub fn qam_demap(symbols: &[Complex<f64>], order: usize) -> Result<Vec<u8>> {
    Ok(Qam::new(order)?.demap(symbols))
}

fn clip_index(k: i64, side: usize) -> i64 {
    k.clamp(0, side as i64 - 1)
}

pub fn gray_encode(k: usize) -> usize {
    k ^ (k >> 1)
}

pub fn gray_decode(mut g: usize) -> usize {
    let mut k = g;
    while g > 0 {
        g >>= 1;
        k ^= g;
    }
    k
}
