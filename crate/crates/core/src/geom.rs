//! Planar geometry over the normalized `[0,1]²` domain.
//!
//! Everything here is generic over [`Scalar`] so the scoring math and the
//! MBR tree can run in `f32` or `f64`. The on-disk formats are `f64` only.

use std::cmp::Ordering;
use std::fmt::Debug;

use num_traits::{Float, FromPrimitive, ToPrimitive};

use crate::error::{Error, Result};

/// Floating point type usable for coordinates, certainties and scores.
pub trait Scalar: Float + FromPrimitive + ToPrimitive + Debug + Default + Send + Sync + 'static {
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).unwrap_or_else(Self::nan)
    }

    fn from_count(v: u64) -> Self {
        Self::from_u64(v).unwrap_or_else(Self::infinity)
    }

    /// Total order for values already known not to be NaN.
    fn order(self, other: Self) -> Ordering {
        self.partial_cmp(&other).unwrap_or(Ordering::Equal)
    }
}

impl<T> Scalar for T where T: Float + FromPrimitive + ToPrimitive + Debug + Default + Send + Sync + 'static {}

/// Axis-aligned rectangle, closed on all sides.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Rect<S = f64> {
    pub xmin: S,
    pub ymin: S,
    pub xmax: S,
    pub ymax: S,
}

impl<S: Scalar> Rect<S> {
    /// Builds a rectangle, rejecting NaN coordinates and inverted bounds.
    pub fn new(xmin: S, ymin: S, xmax: S, ymax: S) -> Result<Self> {
        let r = Rect { xmin, ymin, xmax, ymax };
        if [xmin, ymin, xmax, ymax].iter().any(|v| v.is_nan()) {
            return Err(Error::invalid(format!("rectangle has NaN coordinate: {r:?}")));
        }
        if xmin > xmax || ymin > ymax {
            return Err(Error::invalid(format!("rectangle bounds inverted: {r:?}")));
        }
        Ok(r)
    }

    /// Like [`Rect::new`] but also requires the rectangle to lie inside the unit square.
    pub fn new_in_unit(xmin: S, ymin: S, xmax: S, ymax: S) -> Result<Self> {
        let r = Self::new(xmin, ymin, xmax, ymax)?;
        if !r.is_within_unit() {
            return Err(Error::invalid(format!("rectangle outside [0,1]²: {r:?}")));
        }
        Ok(r)
    }

    pub fn unit() -> Self {
        Rect { xmin: S::zero(), ymin: S::zero(), xmax: S::one(), ymax: S::one() }
    }

    pub fn width(&self) -> S {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> S {
        self.ymax - self.ymin
    }

    pub fn area(&self) -> S {
        self.width() * self.height()
    }

    pub fn center(&self) -> (S, S) {
        let two = S::one() + S::one();
        ((self.xmin + self.xmax) / two, (self.ymin + self.ymax) / two)
    }

    pub fn is_within_unit(&self) -> bool {
        self.xmin >= S::zero() && self.ymin >= S::zero() && self.xmax <= S::one() && self.ymax <= S::one()
    }

    /// Closed intersection test: touching edges count.
    pub fn intersects(&self, other: &Self) -> bool {
        self.xmin <= other.xmax && other.xmin <= self.xmax && self.ymin <= other.ymax && other.ymin <= self.ymax
    }

    pub fn contains(&self, other: &Self) -> bool {
        self.xmin <= other.xmin && self.ymin <= other.ymin && self.xmax >= other.xmax && self.ymax >= other.ymax
    }

    /// Area of the overlap; exactly zero when the rectangles are disjoint or only touch.
    pub fn intersection_area(&self, other: &Self) -> S {
        let w = self.xmax.min(other.xmax) - self.xmin.max(other.xmin);
        let h = self.ymax.min(other.ymax) - self.ymin.max(other.ymin);
        if w <= S::zero() || h <= S::zero() {
            S::zero()
        } else {
            w * h
        }
    }

    /// Smallest rectangle containing both.
    pub fn union(&self, other: &Self) -> Self {
        Rect {
            xmin: self.xmin.min(other.xmin),
            ymin: self.ymin.min(other.ymin),
            xmax: self.xmax.max(other.xmax),
            ymax: self.ymax.max(other.ymax),
        }
    }

    /// Lexicographic order on `(xmin, ymin, xmax, ymax)`.
    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        self.xmin
            .order(other.xmin)
            .then(self.ymin.order(other.ymin))
            .then(self.xmax.order(other.xmax))
            .then(self.ymax.order(other.ymax))
    }
}

/// One weighted rectangle of a footprint.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Region<S = f64> {
    pub rect: Rect<S>,
    pub certainty: S,
}

impl<S: Scalar> Region<S> {
    pub fn new(rect: Rect<S>, certainty: S) -> Self {
        Region { rect, certainty }
    }
}

/// A document's (or query's) area of geographic relevance.
///
/// Regions are kept sorted by rectangle and rectangles are unique; constructing
/// a footprint merges duplicate rectangles keeping the highest certainty. The
/// fixed order makes every sum over regions reproducible bit for bit.
#[derive(Clone, Debug, PartialEq)]
pub struct Footprint<S = f64> {
    regions: Vec<Region<S>>,
}

impl<S: Scalar> Footprint<S> {
    pub fn new(regions: Vec<Region<S>>) -> Result<Self> {
        if regions.is_empty() {
            return Err(Error::invalid("footprint has no regions"));
        }
        for r in &regions {
            validate_region(r)?;
        }
        Ok(Self::canonical(regions))
    }

    /// Single rectangle with certainty 1.
    pub fn from_rect(rect: Rect<S>) -> Result<Self> {
        Self::new(vec![Region::new(rect, S::one())])
    }

    pub(crate) fn canonical(mut regions: Vec<Region<S>>) -> Self {
        regions.sort_by(|a, b| a.rect.lex_cmp(&b.rect).then(b.certainty.order(a.certainty)));
        // after the sort the first of each run of equal rects has the max certainty
        regions.dedup_by(|later, first| later.rect == first.rect);
        Footprint { regions }
    }

    pub fn regions(&self) -> &[Region<S>] {
        &self.regions
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    /// Tight bounding box of all regions.
    pub fn mbr(&self) -> Rect<S> {
        let first = self.regions[0].rect;
        self.regions.iter().skip(1).fold(first, |acc, r| acc.union(&r.rect))
    }

    /// Σ area·certainty.
    pub fn mass(&self) -> S {
        self.regions.iter().fold(S::zero(), |acc, r| acc + r.rect.area() * r.certainty)
    }

    pub fn intersects_rect(&self, rect: &Rect<S>) -> bool {
        self.regions.iter().any(|r| r.rect.intersects(rect))
    }
}

pub(crate) fn validate_region<S: Scalar>(r: &Region<S>) -> Result<()> {
    let rect = &r.rect;
    Rect::new_in_unit(rect.xmin, rect.ymin, rect.xmax, rect.ymax)?;
    if rect.area() <= S::zero() {
        return Err(Error::invalid(format!("region has zero area: {rect:?}")));
    }
    if r.certainty.is_nan() || r.certainty <= S::zero() || r.certainty > S::one() {
        return Err(Error::invalid(format!("certainty {:?} outside (0,1]", r.certainty)));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(a: f64, b: f64, c: f64, d: f64) -> Rect {
        Rect::new(a, b, c, d).unwrap()
    }

    #[test]
    fn intersection_area_and_touching() {
        let a = r(0.0, 0.0, 0.5, 0.5);
        assert_eq!(a.intersection_area(&r(0.25, 0.25, 1.0, 1.0)), 0.0625);
        let touching = r(0.5, 0.0, 1.0, 0.5);
        assert!(a.intersects(&touching));
        assert_eq!(a.intersection_area(&touching), 0.0);
        assert!(!a.intersects(&r(0.6, 0.6, 0.7, 0.7)));
    }

    #[test]
    fn footprint_merges_duplicate_rects_keeping_max() {
        let rect = r(0.1, 0.1, 0.2, 0.2);
        let fp = Footprint::new(vec![
            Region::new(r(0.5, 0.5, 0.6, 0.6), 0.3),
            Region::new(rect, 0.3),
            Region::new(rect, 0.9),
        ])
        .unwrap();
        assert_eq!(fp.len(), 2);
        assert_eq!(fp.regions()[0], Region::new(rect, 0.9));
        assert_eq!(fp.mbr(), r(0.1, 0.1, 0.6, 0.6));
    }

    #[test]
    fn footprint_rejects_bad_regions() {
        assert!(Footprint::<f64>::new(vec![]).is_err());
        assert!(Footprint::new(vec![Region::new(r(0.1, 0.1, 0.1, 0.2), 1.0)]).is_err());
        assert!(Footprint::new(vec![Region::new(r(0.1, 0.1, 0.2, 0.2), 0.0)]).is_err());
        assert!(Footprint::new(vec![Region::new(r(0.1, 0.1, 0.2, 0.2), 1.5)]).is_err());
        assert!(Footprint::new(vec![Region::new(r(0.5, 0.5, 1.2, 0.6), 1.0)]).is_err());
        assert!(Rect::new(0.5, 0.0, 0.4, 1.0).is_err());
    }

    #[test]
    fn works_in_f32() {
        let a: Rect<f32> = Rect::new(0.0, 0.0, 0.5, 0.5).unwrap();
        assert_eq!(a.area(), 0.25f32);
    }
}
