//! Per-tile toeprint-id interval lists.
//!
//! `grid.bin` (`GQGR` header): `grid_bits u32, m u32, toeprint_count u32`, then
//! for every tile in row-major order a varint interval count followed by, per
//! interval, a varint `lo` (absolute for the first interval, `lo - prev_hi - 1`
//! after that) and a varint `hi - lo`.

use std::path::Path;

use super::morton::{TileGrid, TileRange};
use super::sweeps::{cover_at_most, runs_of, Interval};
use super::toeprint::Toeprint;
use crate::error::{Error, Result};
use crate::inverted_index::varint::{decode_u32, encode_u32};
use crate::io::{self, ByteReader, HEADER_LEN};

pub const GRID_FILE: &str = "grid.bin";
const GRID_MAGIC: &[u8; 4] = b"GQGR";

/// At most `m` disjoint ascending intervals per tile; every toeprint whose
/// rectangle meets a tile has its id inside one of that tile's intervals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridIntervals {
    grid: TileGrid,
    m: usize,
    toeprint_count: u32,
    tile_start: Vec<u32>,
    intervals: Vec<Interval>,
}

/// Reduces an ascending id list to at most `m` intervals by repeatedly
/// merging the two runs with the smallest gap between them.
pub fn intervals_from_ids(ids: &[u32], m: usize) -> Vec<Interval> {
    cover_at_most(&runs_of(ids), m)
}

pub fn build_grid(toeprints: &[Toeprint], grid: TileGrid, m: usize) -> Result<GridIntervals> {
    if m < 1 {
        return Err(Error::contract("intervals per tile (m) must be >= 1"));
    }
    if toeprints.iter().enumerate().any(|(i, t)| t.id as usize != i) {
        return Err(Error::contract("toeprint ids must be dense and in order"));
    }
    // counting sort of (tile, id) pairs; ids come out ascending within a tile
    let tiles = grid.tile_count();
    let mut counts = vec![0u32; tiles + 1];
    let ranges: Vec<TileRange> = toeprints.iter().map(|t| grid.range(&t.region.rect)).collect();
    for r in &ranges {
        for (x, y) in r.iter() {
            counts[grid.tile_index(x, y) + 1] += 1;
        }
    }
    for i in 0..tiles {
        counts[i + 1] += counts[i];
    }
    let mut fill = counts.clone();
    let mut ids = vec![0u32; counts[tiles] as usize];
    for (t, r) in toeprints.iter().zip(&ranges) {
        for (x, y) in r.iter() {
            let slot = &mut fill[grid.tile_index(x, y)];
            ids[*slot as usize] = t.id;
            *slot += 1;
        }
    }

    let mut tile_start = Vec::with_capacity(tiles + 1);
    let mut intervals = Vec::new();
    for tile in 0..tiles {
        tile_start.push(intervals.len() as u32);
        let tile_ids = &ids[counts[tile] as usize..counts[tile + 1] as usize];
        intervals.extend(intervals_from_ids(tile_ids, m));
    }
    tile_start.push(intervals.len() as u32);
    Ok(GridIntervals { grid, m, toeprint_count: toeprints.len() as u32, tile_start, intervals })
}

impl GridIntervals {
    pub fn grid(&self) -> TileGrid {
        self.grid
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn toeprint_count(&self) -> u32 {
        self.toeprint_count
    }

    pub fn tile(&self, x: u32, y: u32) -> &[Interval] {
        let i = self.grid.tile_index(x, y);
        &self.intervals[self.tile_start[i] as usize..self.tile_start[i + 1] as usize]
    }

    pub fn empty_tiles(&self) -> usize {
        self.tile_start.windows(2).filter(|w| w[0] == w[1]).count()
    }

    /// All intervals of the tiles in `range`, unnormalized.
    pub fn intervals_in(&self, range: &TileRange) -> Vec<Interval> {
        let mut out = Vec::new();
        for y in range.y0..=range.y1 {
            let row = self.grid.tile_index(range.x0, y);
            let end = self.grid.tile_index(range.x1, y);
            let (a, b) = (self.tile_start[row] as usize, self.tile_start[end + 1] as usize);
            out.extend_from_slice(&self.intervals[a..b]);
        }
        out
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = io::header(GRID_MAGIC);
        out.extend_from_slice(&self.grid.bits().to_le_bytes());
        out.extend_from_slice(&(self.m as u32).to_le_bytes());
        out.extend_from_slice(&self.toeprint_count.to_le_bytes());
        for w in self.tile_start.windows(2) {
            let list = &self.intervals[w[0] as usize..w[1] as usize];
            encode_u32(list.len() as u32, &mut out);
            let mut prev_hi: Option<u32> = None;
            for iv in list {
                encode_u32(prev_hi.map_or(iv.lo, |p| iv.lo - p - 1), &mut out);
                encode_u32(iv.hi - iv.lo, &mut out);
                prev_hi = Some(iv.hi);
            }
        }
        out
    }

    pub fn from_bytes(path: &Path, bytes: &[u8]) -> Result<Self> {
        io::check_header(path, bytes, GRID_MAGIC)?;
        let mut r = ByteReader::new(path, bytes, HEADER_LEN as usize);
        let bits = r.u32()?;
        let m = r.u32()? as usize;
        let toeprint_count = r.u32()?;
        let grid = TileGrid::new(bits).map_err(|e| r.corrupt(e.to_string()))?;
        let mut pos = r.pos();
        let mut next = |what: &str| decode_u32(bytes, &mut pos).ok_or_else(|| Error::corrupt(path, 0, format!("bad varint in {what}")));
        let mut tile_start = Vec::with_capacity(grid.tile_count() + 1);
        let mut intervals = Vec::new();
        for _ in 0..grid.tile_count() {
            tile_start.push(intervals.len() as u32);
            let count = next("interval count")?;
            if count as usize > m {
                return Err(Error::corrupt(path, 0, format!("tile has {count} intervals, m = {m}")));
            }
            let mut prev_hi: Option<u32> = None;
            for _ in 0..count {
                let d = next("interval start")?;
                let lo = match prev_hi {
                    None => Some(d),
                    Some(p) => p.checked_add(d).and_then(|v| v.checked_add(1)),
                };
                let hi = lo.and_then(|lo| next("interval length").ok().and_then(|len| lo.checked_add(len)));
                let (Some(lo), Some(hi)) = (lo, hi) else {
                    return Err(Error::corrupt(path, 0, "interval overflow"));
                };
                if hi >= toeprint_count {
                    return Err(Error::corrupt(path, 0, format!("interval [{lo},{hi}] beyond toeprint count {toeprint_count}")));
                }
                intervals.push(Interval::new(lo, hi));
                prev_hi = Some(hi);
            }
        }
        tile_start.push(intervals.len() as u32);
        if pos != bytes.len() {
            return Err(Error::corrupt(path, pos as u64, "trailing bytes after grid"));
        }
        Ok(GridIntervals { grid, m, toeprint_count, tile_start, intervals })
    }

    pub fn write(&self, dir: &Path) -> Result<u64> {
        let bytes = self.to_bytes();
        io::write_file(&dir.join(GRID_FILE), &bytes)?;
        Ok(bytes.len() as u64)
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(GRID_FILE);
        let bytes = io::read_file(&path)?;
        Self::from_bytes(&path, &bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Rect, Region};

    fn iv(lo: u32, hi: u32) -> Interval {
        Interval::new(lo, hi)
    }

    #[test]
    fn worked_tile_intervals() {
        let ids: Vec<u32> = (3476..=3500).chain(23400..=31000).collect();
        assert_eq!(intervals_from_ids(&ids, 2), [iv(3476, 3500), iv(23400, 31000)]);
        assert_eq!(intervals_from_ids(&ids, 1), [iv(3476, 31000)]);
        assert!(intervals_from_ids(&[], 2).is_empty());
    }

    #[test]
    fn merges_smallest_gap_first() {
        // gaps: 1 (between 3 and 5), 4 (between 5 and 10), 9 (between 10 and 20)
        let ids = [1, 2, 3, 5, 10, 20];
        assert_eq!(intervals_from_ids(&ids, 3), [iv(1, 5), iv(10, 10), iv(20, 20)]);
        assert_eq!(intervals_from_ids(&ids, 2), [iv(1, 10), iv(20, 20)]);
    }

    fn tp(id: u32, rect: Rect) -> Toeprint {
        Toeprint { id, doc_id: id, region: Region::new(rect, 1.0) }
    }

    #[test]
    fn grid_roundtrip_and_lookup() {
        let g = TileGrid::new(3).unwrap();
        let tps = vec![
            tp(0, Rect::new(0.0, 0.0, 0.1, 0.1).unwrap()),
            tp(1, Rect::new(0.05, 0.05, 0.3, 0.1).unwrap()),
            tp(2, Rect::new(0.9, 0.9, 1.0, 1.0).unwrap()),
        ];
        let grid = build_grid(&tps, g, 2).unwrap();
        assert_eq!(grid.tile(0, 0), [iv(0, 1)]);
        assert_eq!(grid.tile(2, 0), [iv(1, 1)]);
        assert_eq!(grid.tile(7, 7), [iv(2, 2)]);
        assert!(grid.tile(4, 4).is_empty());
        let back = GridIntervals::from_bytes(Path::new("grid"), &grid.to_bytes()).unwrap();
        assert_eq!(back, grid);
        assert!(build_grid(&tps, g, 0).is_err());
    }

    #[test]
    fn truncated_grid_rejected() {
        let g = TileGrid::new(2).unwrap();
        let grid = build_grid(&[tp(0, Rect::new(0.0, 0.0, 1.0, 1.0).unwrap())], g, 1).unwrap();
        let bytes = grid.to_bytes();
        assert!(GridIntervals::from_bytes(Path::new("grid"), &bytes[..bytes.len() - 1]).is_err());
    }
}
