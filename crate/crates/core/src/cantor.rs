//! The Cantor function and the coordinatewise Cantor dust map onto the torus.

use crate::geometry::{DyadicCell, SquareGeom, TriadicPoint, HARD_MAX_LEVEL};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CantorError {
    #[error("numerator {p} outside [0, 3^{level}]")]
    NumeratorOutOfRange { p: u64, level: u32 },
    #[error("level {0} too large for exact evaluation")]
    LevelTooLarge(u32),
    #[error("argument {0} outside [0, 1]")]
    Domain(f64),
    #[error("square at level {level} word {word:?}: vertex v{vertex} maps to ({u}, {v}), expected cell corner")]
    ImageMismatch { level: u32, word: Vec<u8>, vertex: usize, u: DyadicValue, v: DyadicValue },
}

/// Exact `num / 2^level`, kept in lowest terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyadicValue {
    num: u64,
    level: u32,
}

impl DyadicValue {
    pub fn new(num: u64, level: u32) -> Self {
        let shift = num.trailing_zeros().min(level);
        let (num, level) = if num == 0 { (0, 0) } else { (num >> shift, level - shift) };
        Self { num, level }
    }

    pub fn zero() -> Self {
        Self::new(0, 0)
    }

    pub fn one() -> Self {
        Self::new(1, 0)
    }

    pub fn numerator(self) -> u64 {
        self.num
    }

    pub fn level(self) -> u32 {
        self.level
    }

    /// Numerator over `2^target`; `target` must be at least the reduced level.
    pub fn numerator_at(self, target: u32) -> u64 {
        debug_assert!(target >= self.level);
        self.num << (target - self.level)
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / (1u64 << self.level) as f64
    }

    /// Representative in `[0, 1)`: the value 1 is identified with 0.
    pub fn wrap_unit(self) -> Self {
        if self == Self::one() {
            Self::zero()
        } else {
            self
        }
    }
}

impl fmt::Display for DyadicValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.level == 0 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, 1u64 << self.level)
        }
    }
}

/// A point of the torus, stored by its representative in `[0,1) x [0,1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TorusPoint {
    pub u: DyadicValue,
    pub v: DyadicValue,
}

impl TorusPoint {
    pub fn new(u: DyadicValue, v: DyadicValue) -> Self {
        Self { u: u.wrap_unit(), v: v.wrap_unit() }
    }

    pub fn to_f64(self) -> (f64, f64) {
        (self.u.to_f64(), self.v.to_f64())
    }
}

/// `c(p / 3^level)` by the ternary-to-binary digit rule.
pub fn cantor_dyadic(p: u64, level: u32) -> Result<DyadicValue, CantorError> {
    if level > HARD_MAX_LEVEL {
        return Err(CantorError::LevelTooLarge(level));
    }
    let denom = 3u64.pow(level);
    if p > denom {
        return Err(CantorError::NumeratorOutOfRange { p, level });
    }
    Ok(cantor_digits(p, level))
}

#[inline]
fn cantor_digits(p: u64, level: u32) -> DyadicValue {
    let denom = 3u64.pow(level);
    if p == denom {
        return DyadicValue::one();
    }
    let mut place = denom;
    let mut rest = p;
    let mut bits = 0u64;
    for k in 1..=level {
        place /= 3;
        let digit = rest / place;
        rest %= place;
        bits <<= 1;
        match digit {
            0 => {}
            2 => bits |= 1,
            _ => return DyadicValue::new(bits | 1, k),
        }
    }
    DyadicValue::new(bits, level)
}

/// `c_n(x)` by unrolling the three-branch recursion `n` times, starting
/// from `c_0(x) = x`.
pub fn cantor_level(x: f64, n: u32) -> Result<f64, CantorError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(CantorError::Domain(x));
    }
    let mut offset = 0.0;
    let mut scale = 1.0;
    let mut x = x;
    for _ in 0..n {
        if x <= 1.0 / 3.0 {
            x *= 3.0;
        } else if x < 2.0 / 3.0 {
            return Ok(offset + scale * 0.5);
        } else {
            offset += scale * 0.5;
            x = 3.0 * x - 2.0;
        }
        scale *= 0.5;
    }
    Ok(offset + scale * x)
}

/// Image of an exact triadic point under `(c, c)`, reduced onto the torus.
pub fn dust_image(pt: TriadicPoint) -> Result<TorusPoint, CantorError> {
    Ok(TorusPoint::new(cantor_dyadic(pt.px, pt.level)?, cantor_dyadic(pt.py, pt.level)?))
}

/// Fast path for in-range vertices; callers guarantee `p <= 3^level`.
#[inline]
pub(crate) fn dust_image_f64(pt: TriadicPoint) -> (f64, f64) {
    let u = cantor_digits(pt.px, pt.level).wrap_unit().to_f64();
    let v = cantor_digits(pt.py, pt.level).wrap_unit().to_f64();
    (u, v)
}

/// The cell of the `2^n` subdivision covered by the image of a level-n
/// dust square. Checks that `v_i` lands on corner `v_i` of that cell.
pub fn image_cell(sq: &SquareGeom) -> Result<DyadicCell, CantorError> {
    let n = sq.level;
    let verts = sq.vertices();
    let mut images = [(DyadicValue::zero(), DyadicValue::zero()); 4];
    for (slot, p) in images.iter_mut().zip(verts) {
        *slot = (cantor_dyadic(p.px, n)?, cantor_dyadic(p.py, n)?);
    }
    let (u0, v0) = images[0];
    if u0.level() > n || v0.level() > n {
        return Err(CantorError::ImageMismatch { level: n, word: sq.word.clone(), vertex: 0, u: u0, v: v0 });
    }
    let cell = DyadicCell { i: u0.numerator_at(n), j: v0.numerator_at(n), level: n };
    for (vertex, (image, corner)) in images.into_iter().zip(cell.corners()).enumerate() {
        let (u, v) = image;
        if u != DyadicValue::new(corner.0, n) || v != DyadicValue::new(corner.1, n) {
            return Err(CantorError::ImageMismatch { level: n, word: sq.word.clone(), vertex, u, v });
        }
    }
    Ok(cell)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{enumerate_squares, IfsPreset};
    use std::collections::HashSet;

    fn dy(num: u64, level: u32) -> DyadicValue {
        DyadicValue::new(num, level)
    }

    #[test]
    fn endpoints() {
        for n in 0..8 {
            assert_eq!(cantor_dyadic(0, n).unwrap(), DyadicValue::zero());
            assert_eq!(cantor_dyadic(3u64.pow(n), n).unwrap(), DyadicValue::one());
        }
    }

    #[test]
    fn digit_map_examples() {
        assert_eq!(cantor_dyadic(1, 1).unwrap(), dy(1, 1));
        assert_eq!(cantor_dyadic(2, 2).unwrap(), dy(1, 2));
        assert_eq!(cantor_dyadic(7, 2).unwrap(), dy(3, 2));
        assert_eq!(cantor_dyadic(1, 1).unwrap().to_string(), "1/2");
        assert!(matches!(cantor_dyadic(10, 2), Err(CantorError::NumeratorOutOfRange { .. })));
    }

    #[test]
    fn digit_map_agrees_with_deep_recursion() {
        let a = cantor_level(2.0 / 9.0, 30).unwrap();
        assert!((a - 0.25).abs() < 1e-8);
        let b = cantor_level(7.0 / 9.0, 30).unwrap();
        assert!((b - 0.75).abs() < 1e-8);
    }

    #[test]
    fn recursion_examples() {
        for x in [0.0, 0.1, 0.77, 1.0] {
            assert_eq!(cantor_level(x, 0).unwrap(), x);
        }
        for n in 1..20 {
            assert_eq!(cantor_level(0.5, n).unwrap(), 0.5);
        }
        assert!((cantor_level(2.0 / 9.0, 4).unwrap() - 0.25).abs() < 1e-15);
        assert!(matches!(cantor_level(1.5, 3), Err(CantorError::Domain(_))));
        assert!(matches!(cantor_level(-0.1, 3), Err(CantorError::Domain(_))));
    }

    #[test]
    fn monotone_in_numerator() {
        for n in 0..=8 {
            let mut prev = DyadicValue::zero().to_f64();
            for p in 0..=3u64.pow(n) {
                let c = cantor_dyadic(p, n).unwrap().to_f64();
                assert!(c >= prev, "n={n} p={p}");
                prev = c;
            }
        }
    }

    #[test]
    fn recursion_is_stable_on_dust_vertices() {
        for n in 1..=6 {
            let mut numerators = HashSet::new();
            for sq in enumerate_squares(IfsPreset::CantorDust, n).unwrap() {
                for v in sq.vertices() {
                    numerators.insert(v.px);
                }
            }
            for p in numerators {
                let exact = cantor_dyadic(p, n).unwrap().to_f64();
                for m in n..=n + 3 {
                    let x = p as f64 / 3f64.powi(n as i32);
                    let approx = cantor_level(x, m).unwrap();
                    assert!((approx - exact).abs() < 1e-12, "n={n} p={p} m={m}: {approx} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn dust_image_examples() {
        let p = |px, py, level| TriadicPoint { px, py, level };
        assert_eq!(dust_image(p(0, 0, 3)).unwrap(), TorusPoint::new(dy(0, 0), dy(0, 0)));
        let img = dust_image(p(1, 2, 1)).unwrap();
        assert_eq!(img.u, dy(1, 1));
        assert_eq!(img.v, dy(1, 1));
        assert_eq!(dust_image(p(2, 2, 2)).unwrap(), TorusPoint::new(dy(1, 2), dy(1, 2)));
        assert_eq!(dust_image_f64(p(2, 2, 2)), (0.25, 0.25));
    }

    #[test]
    fn image_cell_examples() {
        let level1: Vec<_> = enumerate_squares(IfsPreset::CantorDust, 1).unwrap().collect();
        let sq = level1.iter().find(|s| (s.kx, s.ky) == (2, 2)).unwrap();
        let cell = image_cell(sq).unwrap();
        assert_eq!((cell.i, cell.j, cell.level), (1, 1, 1));
        assert_eq!(cell.edge(), 0.5);

        let unit = enumerate_squares(IfsPreset::CantorDust, 0).unwrap().next().unwrap();
        assert_eq!(image_cell(&unit).unwrap(), DyadicCell { i: 0, j: 0, level: 0 });

        let sq = enumerate_squares(IfsPreset::CantorDust, 2).unwrap().find(|s| s.word == vec![1, 4]).unwrap();
        let cell = image_cell(&sq).unwrap();
        assert_eq!((cell.i, cell.j), (1, 1));
        assert_eq!(cell.edge(), 0.25);
    }

    #[test]
    fn image_cell_rejects_non_dust_square() {
        // the carpet square with a middle digit does not map onto a dyadic cell
        let sq = enumerate_squares(IfsPreset::SierpinskiCarpet, 1).unwrap().find(|s| (s.kx, s.ky) == (1, 0)).unwrap();
        assert!(matches!(image_cell(&sq), Err(CantorError::ImageMismatch { .. })));
    }

    #[test]
    fn dust_squares_biject_onto_cells() {
        for n in 0..=6 {
            let mut seen = HashSet::new();
            for sq in enumerate_squares(IfsPreset::CantorDust, n).unwrap() {
                let cell = image_cell(&sq).unwrap();
                assert!(cell.i < 1 << n && cell.j < 1 << n);
                assert!(seen.insert((cell.i, cell.j)));
            }
            assert_eq!(seen.len(), 1 << (2 * n));
        }
    }

    #[test]
    fn dyadic_display_and_reduction() {
        assert_eq!(dy(4, 3), dy(1, 1));
        assert_eq!(dy(4, 3).to_string(), "1/2");
        assert_eq!(dy(0, 5).to_string(), "0");
        assert_eq!(dy(1, 0).to_string(), "1");
        assert_eq!(dy(1, 1).numerator_at(3), 4);
    }
}
