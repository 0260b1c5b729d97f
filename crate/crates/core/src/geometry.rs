//! Square-based iterated function systems with exact triadic coordinates.
//!
//! Every preset uses similitudes `x -> x/3 + (a, b)/3` with integer offsets,
//! so the level-n square addressed by the word `(s1, .., sn)` has corner
//! `sum_k offset(s_k) 3^(n-k)` over `3^n` and edge `3^-n`. Words are
//! enumerated lexicographically with the first symbol most significant.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::Range;
use std::str::FromStr;
use thiserror::Error;

/// Largest level enumerated without an explicit override.
pub const DEFAULT_MAX_LEVEL: u32 = 16;
/// Largest level for which `3^n` fits a `u64` numerator.
pub const HARD_MAX_LEVEL: u32 = 39;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("level {level} exceeds the enumeration budget of {max} (override required)")]
    LevelTooLarge { level: u32, max: u32 },
    #[error("level {level} has {maps}^{level} squares, which does not fit a 64-bit index")]
    CountOverflow { level: u32, maps: usize },
    #[error("unknown IFS preset `{0}`")]
    UnknownPreset(String),
    #[error("similarity dimension needs at least one map")]
    EmptyMaps,
    #[error("similarity ratio {0} is outside (0, 1)")]
    BadRatio(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IfsPreset {
    CantorDust,
    SierpinskiCarpet,
    FullSubdivision3,
}

const CANTOR_DUST: [(u8, u8); 4] = [(0, 0), (0, 2), (2, 0), (2, 2)];
const CARPET: [(u8, u8); 8] = [(0, 0), (0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1), (2, 2)];
const FULL: [(u8, u8); 9] = [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2), (2, 0), (2, 1), (2, 2)];

impl IfsPreset {
    pub const ALL: [IfsPreset; 3] = [Self::CantorDust, Self::SierpinskiCarpet, Self::FullSubdivision3];

    /// Offsets `(a, b)` over 3 of the maps, in symbol order `1..=N`.
    pub fn offsets(self) -> &'static [(u8, u8)] {
        match self {
            Self::CantorDust => &CANTOR_DUST,
            Self::SierpinskiCarpet => &CARPET,
            Self::FullSubdivision3 => &FULL,
        }
    }

    pub fn map_count(self) -> usize {
        self.offsets().len()
    }

    /// All maps share the ratio 1/3.
    pub fn ratios(self) -> Vec<f64> {
        vec![1.0 / 3.0; self.map_count()]
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::CantorDust => "cantor_dust",
            Self::SierpinskiCarpet => "sierpinski_carpet",
            Self::FullSubdivision3 => "full_subdivision_3",
        }
    }

    /// Number of level-n squares, `|S|^n`.
    pub fn square_count(self, level: u32) -> Result<u64, GeometryError> {
        (self.map_count() as u64)
            .checked_pow(level)
            .ok_or(GeometryError::CountOverflow { level, maps: self.map_count() })
    }
}

impl fmt::Display for IfsPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IfsPreset {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        Self::ALL.into_iter().find(|p| p.name() == key).ok_or_else(|| GeometryError::UnknownPreset(s.to_string()))
    }
}

/// Exact point `(px, py) / 3^level`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TriadicPoint {
    pub px: u64,
    pub py: u64,
    pub level: u32,
}

impl TriadicPoint {
    pub fn to_f64(self) -> (f64, f64) {
        let d = 3f64.powi(self.level as i32);
        (self.px as f64 / d, self.py as f64 / d)
    }
}

/// A level-n square `f_s(I)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SquareGeom {
    /// Symbols in `1..=N`.
    pub word: Vec<u8>,
    pub kx: u64,
    pub ky: u64,
    pub level: u32,
}

impl SquareGeom {
    /// Edge length `3^-level`.
    pub fn edge(&self) -> f64 {
        3f64.powi(-(self.level as i32))
    }

    /// Vertices in the order `v0, v1, v2, v3`.
    pub fn vertices(&self) -> [TriadicPoint; 4] {
        vertices_of(self.kx, self.ky, self.level)
    }
}

/// Vertices of the square with corner `(kx, ky)/3^level` and edge `3^-level`.
#[inline]
pub fn vertices_of(kx: u64, ky: u64, level: u32) -> [TriadicPoint; 4] {
    let p = |px, py| TriadicPoint { px, py, level };
    [p(kx, ky), p(kx + 1, ky), p(kx + 1, ky + 1), p(kx, ky + 1)]
}

pub fn vertices(sq: &SquareGeom) -> [TriadicPoint; 4] {
    sq.vertices()
}

/// Corner numerators of the square with lexicographic index `index`.
#[inline]
pub fn corner_of_index(preset: IfsPreset, level: u32, mut index: u64) -> (u64, u64) {
    let offsets = preset.offsets();
    let base = offsets.len() as u64;
    let (mut kx, mut ky) = (0u64, 0u64);
    let mut scale = 1u64;
    for _ in 0..level {
        let (a, b) = offsets[(index % base) as usize];
        kx += a as u64 * scale;
        ky += b as u64 * scale;
        index /= base;
        scale *= 3;
    }
    (kx, ky)
}

fn word_of_index(base: u64, level: u32, mut index: u64) -> Vec<u8> {
    let mut word = vec![0u8; level as usize];
    for slot in word.iter_mut().rev() {
        *slot = (index % base) as u8 + 1;
        index /= base;
    }
    word
}

/// Streaming enumeration of level-n squares in lexicographic word order.
#[derive(Clone, Debug)]
pub struct SquareStream {
    preset: IfsPreset,
    level: u32,
    range: Range<u64>,
}

impl SquareStream {
    pub fn new(preset: IfsPreset, level: u32) -> Result<Self, GeometryError> {
        if level > DEFAULT_MAX_LEVEL {
            return Err(GeometryError::LevelTooLarge { level, max: DEFAULT_MAX_LEVEL });
        }
        Self::with_override(preset, level)
    }

    /// Skips the default budget; still bounded by exact-integer limits.
    pub fn with_override(preset: IfsPreset, level: u32) -> Result<Self, GeometryError> {
        if level > HARD_MAX_LEVEL {
            return Err(GeometryError::LevelTooLarge { level, max: HARD_MAX_LEVEL });
        }
        let count = preset.square_count(level)?;
        Ok(Self { preset, level, range: 0..count })
    }

    /// Squares whose word starts with `prefix` (symbols in `1..=N`).
    pub fn with_prefix(mut self, prefix: &[u8]) -> Self {
        let base = self.preset.map_count() as u64;
        let k = (prefix.len() as u32).min(self.level);
        let block = base.pow(self.level - k);
        let start: u64 = prefix[..k as usize].iter().fold(0, |acc, &s| acc * base + (s as u64 - 1));
        self.range = start * block..(start + 1) * block;
        self
    }

    pub fn preset(&self) -> IfsPreset {
        self.preset
    }

    pub fn level(&self) -> u32 {
        self.level
    }
}

impl Iterator for SquareStream {
    type Item = SquareGeom;

    fn next(&mut self) -> Option<SquareGeom> {
        let index = self.range.next()?;
        let (kx, ky) = corner_of_index(self.preset, self.level, index);
        let word = word_of_index(self.preset.map_count() as u64, self.level, index);
        Some(SquareGeom { word, kx, ky, level: self.level })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        self.range.size_hint()
    }
}

impl ExactSizeIterator for SquareStream {}

pub fn enumerate_squares(preset: IfsPreset, level: u32) -> Result<SquareStream, GeometryError> {
    SquareStream::new(preset, level)
}

/// A cell `[i, i+1] x [j, j+1] / 2^level` of the dyadic subdivision.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DyadicCell {
    pub i: u64,
    pub j: u64,
    pub level: u32,
}

impl DyadicCell {
    pub fn edge(&self) -> f64 {
        0.5f64.powi(self.level as i32)
    }

    /// Corner numerators over `2^level` in vertex order `v0..v3`.
    pub fn corners(&self) -> [(u64, u64); 4] {
        let (i, j) = (self.i, self.j);
        [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)]
    }
}

/// The `4^n` cells of the `2^n`-fold subdivision of the unit square,
/// row-major (x fastest).
pub fn subdivision_cells(level: u32) -> impl Iterator<Item = DyadicCell> + Clone {
    let side = 1u64 << level;
    (0..side).flat_map(move |j| (0..side).map(move |i| DyadicCell { i, j, level }))
}

/// Solves `sum_s r_s^d = 1` for `d` by bisection.
pub fn similarity_dimension_of(ratios: &[f64]) -> Result<f64, GeometryError> {
    if ratios.is_empty() {
        return Err(GeometryError::EmptyMaps);
    }
    if let Some(&r) = ratios.iter().find(|&&r| !(r > 0.0 && r < 1.0)) {
        return Err(GeometryError::BadRatio(r));
    }
    let moment = |d: f64| ratios.iter().map(|r| r.powf(d)).sum::<f64>() - 1.0;
    // moment is decreasing in d; moment(0) = N - 1 >= 0.
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while moment(hi) > 0.0 {
        hi *= 2.0;
    }
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if moment(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn similarity_dimension(preset: IfsPreset) -> f64 {
    similarity_dimension_of(&preset.ratios()).expect("presets have ratios in (0, 1)")
}
