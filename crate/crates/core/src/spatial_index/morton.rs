//! Z-order codes and the tile grid over the unit square.

use crate::error::{Error, Result};
use crate::geom::{Rect, Scalar};

pub const DEFAULT_GRID_BITS: u32 = 10;

fn spread(mut v: u32) -> u32 {
    v &= 0x0000_ffff;
    v = (v | (v << 8)) & 0x00ff_00ff;
    v = (v | (v << 4)) & 0x0f0f_0f0f;
    v = (v | (v << 2)) & 0x3333_3333;
    (v | (v << 1)) & 0x5555_5555
}

fn compact(mut v: u32) -> u32 {
    v &= 0x5555_5555;
    v = (v | (v >> 1)) & 0x3333_3333;
    v = (v | (v >> 2)) & 0x0f0f_0f0f;
    v = (v | (v >> 4)) & 0x00ff_00ff;
    (v | (v >> 8)) & 0x0000_ffff
}

/// Interleaves tile coordinates on a `2^bits` grid: x bits in the even
/// positions, y bits in the odd ones.
pub fn morton_bits(tile_x: u32, tile_y: u32, bits: u32) -> Result<u32> {
    if bits > 16 {
        return Err(Error::contract(format!("grid_bits {bits} exceeds 16")));
    }
    let side = 1u32 << bits;
    if tile_x >= side || tile_y >= side {
        return Err(Error::contract(format!("tile ({tile_x},{tile_y}) outside {side}x{side} grid")));
    }
    Ok(spread(tile_x) | (spread(tile_y) << 1))
}

/// Morton code on the default 1024×1024 grid (20-bit result).
pub fn morton(tile_x: u32, tile_y: u32) -> Result<u32> {
    morton_bits(tile_x, tile_y, DEFAULT_GRID_BITS)
}

pub fn morton_decode(code: u32) -> (u32, u32) {
    (compact(code), compact(code >> 1))
}

/// A `2^bits × 2^bits` tiling of the unit square. Tile `i` spans
/// `[i/side, (i+1)/side)` on each axis, the last tile also owning the upper edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TileGrid {
    bits: u32,
}

impl TileGrid {
    pub fn new(bits: u32) -> Result<Self> {
        if !(1..=15).contains(&bits) {
            return Err(Error::contract(format!("grid_bits must be in 1..=15, got {bits}")));
        }
        Ok(TileGrid { bits })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn side(&self) -> u32 {
        1 << self.bits
    }

    pub fn tile_count(&self) -> usize {
        1usize << (2 * self.bits)
    }

    /// Tile column/row holding coordinate `v` in `[0,1]`.
    pub fn cell_of<S: Scalar>(&self, v: S) -> u32 {
        let scaled = (v * S::from_count(u64::from(self.side()))).floor();
        let cell = scaled.to_i64().unwrap_or(0).max(0) as u32;
        cell.min(self.side() - 1)
    }

    /// Row-major tile index.
    pub fn tile_index(&self, x: u32, y: u32) -> usize {
        y as usize * self.side() as usize + x as usize
    }

    pub fn range<S: Scalar>(&self, rect: &Rect<S>) -> TileRange {
        TileRange {
            x0: self.cell_of(rect.xmin),
            y0: self.cell_of(rect.ymin),
            x1: self.cell_of(rect.xmax),
            y1: self.cell_of(rect.ymax),
        }
    }

    /// The tiles whose cells intersect `rect`.
    pub fn tile_cover<S: Scalar>(&self, rect: &Rect<S>) -> Result<TileRange> {
        if !rect.is_within_unit() {
            return Err(Error::contract(format!("query rect outside the unit domain: {rect:?}")));
        }
        Ok(self.range(rect))
    }

    /// Z-order code of the tile holding the rectangle's center.
    pub fn center_code<S: Scalar>(&self, rect: &Rect<S>) -> u32 {
        let (cx, cy) = rect.center();
        morton_bits(self.cell_of(cx), self.cell_of(cy), self.bits).expect("cell within grid")
    }
}

/// Inclusive block of tiles.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TileRange {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl TileRange {
    pub fn len(&self) -> usize {
        (self.x1 - self.x0 + 1) as usize * (self.y1 - self.y0 + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        (self.x0..=self.x1).contains(&x) && (self.y0..=self.y1).contains(&y)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (self.y0..=self.y1).flat_map(move |y| (self.x0..=self.x1).map(move |x| (x, y)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn interleave_oracle(x: u32, y: u32) -> u32 {
        let mut code = 0;
        for bit in 0..10 {
            code |= ((x >> bit) & 1) << (2 * bit);
            code |= ((y >> bit) & 1) << (2 * bit + 1);
        }
        code
    }

    #[test]
    fn morton_examples() {
        assert_eq!(morton(0, 0).unwrap(), 0);
        assert_eq!(morton(1, 0).unwrap(), 1);
        assert_eq!(morton(0, 1).unwrap(), 2);
        assert_eq!(interleave_oracle(3, 5), 39);
        assert_eq!(morton(3, 5).unwrap(), 39);
        assert_eq!(morton(1023, 1023).unwrap(), (1 << 20) - 1);
        assert!(morton(1024, 0).is_err());
        assert!(morton(0, 1024).is_err());
    }

    #[test]
    fn morton_is_a_bijection() {
        let mut seen = vec![false; 1 << 20];
        for y in 0..1024 {
            for x in 0..1024 {
                let c = morton(x, y).unwrap();
                assert_eq!(c, interleave_oracle(x, y));
                assert!(!seen[c as usize]);
                seen[c as usize] = true;
                assert_eq!(morton_decode(c), (x, y));
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn tile_cover_examples() {
        let g = TileGrid::new(10).unwrap();
        let point = Rect::new(0.0, 0.0, 0.0, 0.0).unwrap();
        let r = g.tile_cover(&point).unwrap();
        assert_eq!((r.len(), r.x0, r.y0), (1, 0, 0));
        assert_eq!(g.tile_cover(&Rect::<f64>::unit()).unwrap().len(), 1_048_576);
        // 0.5*1024 = 512 exactly, 0.502*1024 = 514.048 -> cells 512..=514
        let r = g.tile_cover(&Rect::new(0.5, 0.5, 0.502, 0.502).unwrap()).unwrap();
        assert_eq!((r.x0, r.x1, r.y0, r.y1), (512, 514, 512, 514));
        assert_eq!(r.len(), 9);
        assert!(g.tile_cover(&Rect::new(0.5, 0.5, 1.2, 0.6).unwrap()).is_err());
    }

    proptest! {
        #[test]
        fn tile_cover_matches_cell_scan(x0 in 0.0..1.0f64, y0 in 0.0..1.0f64, w in 0.0..0.05f64, h in 0.0..0.05f64) {
            let g = TileGrid::new(6).unwrap();
            let rect = Rect::new(x0, y0, (x0 + w).min(1.0), (y0 + h).min(1.0)).unwrap();
            let cover = g.tile_cover(&rect).unwrap();
            let side = g.side();
            for ty in 0..side {
                for tx in 0..side {
                    // half-open cells, the last one closed
                    let lo = |i: u32| i as f64 / side as f64;
                    let hi_ok = |i: u32, v: f64| if i + 1 == side { v <= 1.0 } else { v < lo(i + 1) };
                    let hits = lo(tx) <= rect.xmax && hi_ok(tx, rect.xmin) && lo(ty) <= rect.ymax && hi_ok(ty, rect.ymin);
                    prop_assert_eq!(hits, cover.contains(tx, ty));
                }
            }
        }
    }
}
