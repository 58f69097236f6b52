//! Term, geographic and global scores and top-k selection.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::path::Path;

use crate::corpus::{split_lines, DocId};
use crate::error::{Error, Result};
use crate::geom::{Footprint, Region, Scalar};
use crate::io;

/// Cosine-style term score: Σ ln(1 + n/f_t) · (1 + ln f_Dt) / √|D|.
///
/// `doc_freqs[i]` is f_t and `term_freqs[i]` is f_Dt for the i-th query term.
pub fn text_score<S: Scalar>(term_freqs: &[u32], doc_freqs: &[u32], n: u32, doc_len: u32) -> Result<S> {
    if doc_len == 0 {
        return Err(Error::contract("text_score on a document of length 0"));
    }
    if term_freqs.len() != doc_freqs.len() {
        return Err(Error::contract("text_score needs one f_t per f_Dt"));
    }
    let n = S::from_count(u64::from(n));
    let norm = S::from_count(u64::from(doc_len)).sqrt();
    let mut sum = S::zero();
    for (&fdt, &ft) in term_freqs.iter().zip(doc_freqs) {
        if fdt == 0 || ft == 0 {
            return Err(Error::contract(format!("text_score with f_Dt = {fdt}, f_t = {ft}")));
        }
        let idf = (S::one() + n / S::from_count(u64::from(ft))).ln();
        let tf = S::one() + S::from_count(u64::from(fdt)).ln();
        sum = sum + idf * tf / norm;
    }
    Ok(sum)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GeoMode {
    /// ∫ f_q · f_D with piecewise-constant amplitudes.
    #[default]
    InnerProduct,
    /// Area of the intersection, certainties ignored.
    Volume,
}

fn weight<S: Scalar>(r: &Region<S>, mode: GeoMode) -> S {
    match mode {
        GeoMode::InnerProduct => r.certainty,
        GeoMode::Volume => S::one(),
    }
}

/// Normalizer of [`geo_score`]: Σ area · certainty over the query regions.
pub fn query_mass<S: Scalar>(query: &Footprint<S>, mode: GeoMode) -> Result<S> {
    let mass = query.regions().iter().fold(S::zero(), |acc, r| acc + r.rect.area() * weight(r, mode));
    if !(mass > S::zero()) {
        return Err(Error::contract("query footprint has zero mass"));
    }
    Ok(mass)
}

/// Unnormalized overlap between the query and a list of document regions.
/// Regions disjoint from the query contribute exactly zero, so any subset
/// holding all intersecting regions in the same order gives the same sum.
pub fn geo_overlap<S: Scalar>(query: &Footprint<S>, doc_regions: &[Region<S>], mode: GeoMode) -> S {
    let mut sum = S::zero();
    for q in query.regions() {
        for d in doc_regions {
            let area = q.rect.intersection_area(&d.rect);
            if area > S::zero() {
                sum = sum + area * weight(q, mode) * weight(d, mode);
            }
        }
    }
    sum
}

/// Overlap with `doc` normalized by the query mass, in `[0,1]` for
/// non-overlapping query regions.
pub fn geo_score<S: Scalar>(query: &Footprint<S>, doc: &Footprint<S>, mode: GeoMode) -> Result<S> {
    Ok(geo_overlap(query, doc.regions(), mode) / query_mass(query, mode)?)
}

/// Precomputed per-document global scores in `[0,1]`; missing documents score 0.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GlobalScoreTable {
    scores: BTreeMap<DocId, f64>,
}

impl GlobalScoreTable {
    pub fn new(scores: BTreeMap<DocId, f64>) -> Result<Self> {
        if let Some((d, pr)) = scores.iter().find(|(_, &pr)| !(0.0..=1.0).contains(&pr)) {
            return Err(Error::invalid(format!("global score {pr} of doc {d} outside [0,1]")));
        }
        Ok(GlobalScoreTable { scores })
    }

    /// Parses `doc_id<TAB>pr` lines.
    pub fn parse(name: &str, bytes: &[u8]) -> Result<Self> {
        let mut scores = BTreeMap::new();
        for (idx, raw) in split_lines(bytes) {
            let line = idx + 1;
            let text = std::str::from_utf8(raw).map_err(|_| Error::parse(name, line, "invalid UTF-8"))?;
            if text.trim().is_empty() {
                continue;
            }
            let (doc, pr) = text.split_once('\t').ok_or_else(|| Error::parse(name, line, "expected doc_id<TAB>pr"))?;
            let doc: DocId = doc.trim().parse().map_err(|_| Error::parse(name, line, format!("bad doc id {doc:?}")))?;
            let pr: f64 = pr.trim().parse().map_err(|_| Error::parse(name, line, format!("bad score {pr:?}")))?;
            if !(0.0..=1.0).contains(&pr) {
                return Err(Error::parse(name, line, format!("score {pr} outside [0,1]")));
            }
            if scores.insert(doc, pr).is_some() {
                return Err(Error::parse(name, line, format!("duplicate doc id {doc}")));
            }
        }
        Ok(GlobalScoreTable { scores })
    }

    /// Reads the table, or returns the all-zero table when the file is absent.
    pub fn read_or_default(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Ok(Self::default());
        }
        Self::parse(&path.display().to_string(), &io::read_file(path)?)
    }

    pub fn to_tsv(&self) -> String {
        self.scores.iter().map(|(d, pr)| format!("{d}\t{pr}\n")).collect()
    }

    pub fn get(&self, doc: DocId) -> f64 {
        self.scores.get(&doc).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoreWeights<S = f64> {
    pub w_text: S,
    pub w_geo: S,
    pub w_global: S,
}

impl<S: Scalar> Default for ScoreWeights<S> {
    fn default() -> Self {
        ScoreWeights { w_text: S::one(), w_geo: S::one(), w_global: S::one() }
    }
}

impl<S: Scalar> ScoreWeights<S> {
    pub fn new(w_text: S, w_geo: S, w_global: S) -> Result<Self> {
        let w = [w_text, w_geo, w_global];
        if w.iter().any(|v| v.is_nan() || *v < S::zero()) || w.iter().all(|v| *v == S::zero()) {
            return Err(Error::invalid(format!("weights must be non-negative with one > 0, got {w:?}")));
        }
        Ok(ScoreWeights { w_text, w_geo, w_global })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoredHit<S = f64> {
    pub doc_id: DocId,
    pub text_score: S,
    pub geo_score: S,
    pub global_score: S,
    pub combined: S,
}

pub fn combined_score<S: Scalar>(doc_id: DocId, text: S, geo: S, global: S, w: &ScoreWeights<S>) -> ScoredHit<S> {
    ScoredHit {
        doc_id,
        text_score: text,
        geo_score: geo,
        global_score: global,
        combined: w.w_text * text + w.w_geo * geo + w.w_global * global,
    }
}

/// Ranking order: combined descending, then doc id ascending.
pub fn rank_cmp<S: Scalar>(a: &ScoredHit<S>, b: &ScoredHit<S>) -> Ordering {
    b.combined.order(a.combined).then(a.doc_id.cmp(&b.doc_id))
}

pub fn top_k<S: Scalar, I: IntoIterator<Item = ScoredHit<S>>>(hits: I, k: usize) -> Result<Vec<ScoredHit<S>>> {
    if k < 1 {
        return Err(Error::contract("k_results must be >= 1"));
    }
    let mut all: Vec<ScoredHit<S>> = hits.into_iter().collect();
    if all.len() > k {
        all.select_nth_unstable_by(k - 1, rank_cmp);
        all.truncate(k);
    }
    all.sort_unstable_by(rank_cmp);
    Ok(all)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Rect;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rect(a: f64, b: f64, c: f64, d: f64) -> Rect {
        Rect::new(a, b, c, d).unwrap()
    }

    fn fp(regions: &[(f64, f64, f64, f64, f64)]) -> Footprint {
        Footprint::new(regions.iter().map(|&(a, b, c, d, w)| Region::new(rect(a, b, c, d), w)).collect()).unwrap()
    }

    #[test]
    fn text_score_examples() {
        let s: f64 = text_score(&[3], &[10], 1000, 100).unwrap();
        let want = 101f64.ln() * (1.0 + 3f64.ln()) / 10.0;
        assert_eq!(s, want);
        assert!((s - 0.96853).abs() < 1e-5);
        let s: f64 = text_score(&[1], &[50], 50, 1).unwrap();
        assert!((s - std::f64::consts::LN_2).abs() < 1e-15);
        let double: f64 = text_score(&[3, 3], &[10, 10], 1000, 100).unwrap();
        assert_eq!(double, 2.0 * want);
        assert!(text_score::<f64>(&[1], &[1], 10, 0).is_err());
        assert!(text_score::<f64>(&[0], &[1], 10, 5).is_err());
        let single: f32 = text_score(&[3], &[10], 1000, 100).unwrap();
        assert!((f64::from(single) - want).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn text_score_monotone(fdt in 1u32..500, ft in 1u32..500, n in 500u32..100_000, len in 1u32..10_000) {
            let base: f64 = text_score(&[fdt], &[ft], n, len).unwrap();
            prop_assert!(text_score::<f64>(&[fdt + 1], &[ft], n, len).unwrap() > base);
            prop_assert!(text_score::<f64>(&[fdt], &[ft + 1], n, len).unwrap() < base);
        }
    }

    #[test]
    fn geo_score_examples() {
        let full = Footprint::from_rect(Rect::unit()).unwrap();
        let quarter = fp(&[(0.0, 0.0, 0.5, 0.5, 1.0)]);
        assert_eq!(geo_score(&full, &quarter, GeoMode::InnerProduct).unwrap(), 0.25);
        let far = fp(&[(0.6, 0.6, 0.9, 0.9, 1.0)]);
        assert_eq!(geo_score(&quarter, &far, GeoMode::InnerProduct).unwrap(), 0.0);
        // touching edge only
        let touch = fp(&[(0.5, 0.0, 0.7, 0.5, 1.0)]);
        assert_eq!(geo_score(&quarter, &touch, GeoMode::InnerProduct).unwrap(), 0.0);
        // doc covering the query with certainty 1
        let q = fp(&[(0.2, 0.2, 0.3, 0.3, 1.0)]);
        assert_eq!(geo_score(&q, &quarter, GeoMode::InnerProduct).unwrap(), 1.0);
        let weak = fp(&[(0.0, 0.0, 0.5, 0.5, 0.4)]);
        assert_eq!(geo_score(&q, &weak, GeoMode::InnerProduct).unwrap(), 0.4);
        assert_eq!(geo_score(&q, &weak, GeoMode::Volume).unwrap(), 1.0);
    }

    #[test]
    fn geo_overlap_symmetric() {
        let a = fp(&[(0.1, 0.1, 0.4, 0.3, 0.7), (0.5, 0.5, 0.9, 0.6, 0.2)]);
        let b = fp(&[(0.2, 0.0, 0.6, 0.55, 0.9), (0.0, 0.25, 0.15, 0.8, 0.5)]);
        let ab = geo_overlap(&a, b.regions(), GeoMode::InnerProduct);
        let ba = geo_overlap(&b, a.regions(), GeoMode::InnerProduct);
        assert!((ab - ba).abs() < 1e-15);
    }

    #[test]
    fn geo_score_matches_monte_carlo() {
        let q = fp(&[(0.1, 0.1, 0.5, 0.4, 0.8), (0.6, 0.2, 0.9, 0.7, 0.5)]);
        let d = fp(&[(0.3, 0.2, 0.7, 0.6, 0.9), (0.0, 0.3, 0.2, 0.9, 0.6)]);
        let amp = |f: &Footprint, x: f64, y: f64| -> f64 {
            f.regions().iter().filter(|r| r.rect.xmin <= x && x < r.rect.xmax && r.rect.ymin <= y && y < r.rect.ymax).map(|r| r.certainty).sum()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        // one jittered sample per cell of a 1000x1000 stratification
        let side = 1000;
        let mut acc = 0.0;
        for i in 0..side {
            for j in 0..side {
                let x = (f64::from(i) + rng.gen::<f64>()) / f64::from(side);
                let y = (f64::from(j) + rng.gen::<f64>()) / f64::from(side);
                acc += amp(&q, x, y) * amp(&d, x, y);
            }
        }
        let estimate = acc / f64::from(side * side) / q.mass();
        let exact = geo_score(&q, &d, GeoMode::InnerProduct).unwrap();
        assert!((estimate - exact).abs() < 1e-3, "{estimate} vs {exact}");
    }

    #[test]
    fn zero_mass_query_is_rejected() {
        let q = Footprint::canonical(vec![Region::new(rect(0.1, 0.1, 0.1, 0.4), 1.0)]);
        assert!(geo_score(&q, &q, GeoMode::InnerProduct).is_err());
    }

    #[test]
    fn combined_and_weights() {
        let w = ScoreWeights::default();
        let h = combined_score(3, 1.5, 0.25, 0.5, &w);
        assert_eq!(h.combined, 2.25);
        assert!(ScoreWeights::new(0.0, 0.0, 0.0).is_err());
        assert!(ScoreWeights::new(-1.0, 1.0, 0.0).is_err());
        let text_only = ScoreWeights::new(1.0, 0.0, 0.0).unwrap();
        let hits = [(0, 0.5, 0.9), (1, 0.8, 0.1), (2, 0.2, 1.0)].map(|(d, t, g)| combined_score(d, t, g, 0.0, &text_only));
        let order: Vec<DocId> = top_k(hits, 10).unwrap().iter().map(|h| h.doc_id).collect();
        assert_eq!(order, [1, 0, 2]);
    }

    #[test]
    fn geo_only_orders_by_containment() {
        let q = fp(&[(0.2, 0.2, 0.4, 0.4, 1.0)]);
        let docs = [
            fp(&[(0.3, 0.3, 0.5, 0.5, 1.0)]),
            fp(&[(0.1, 0.1, 0.5, 0.5, 1.0)]),
            fp(&[(0.375, 0.2, 0.6, 0.4, 1.0)]),
        ];
        let w = ScoreWeights::new(0.0, 1.0, 0.0).unwrap();
        let hits = docs.iter().enumerate().map(|(i, d)| combined_score(i as DocId, 0.0, geo_score(&q, d, GeoMode::InnerProduct).unwrap(), 0.0, &w));
        let order: Vec<DocId> = top_k(hits, 10).unwrap().iter().map(|h| h.doc_id).collect();
        assert_eq!(order, [1, 0, 2]);
    }

    #[test]
    fn global_table_parse() {
        let t = GlobalScoreTable::parse("g", b"0\t0.5\n7\t1\n").unwrap();
        assert_eq!((t.get(0), t.get(7), t.get(3)), (0.5, 1.0, 0.0));
        assert_eq!(GlobalScoreTable::parse("g", &t.to_tsv().into_bytes()).unwrap(), t);
        let err = GlobalScoreTable::parse("g", b"0\t0.5\n1\t1.5\n").unwrap_err();
        assert!(err.to_string().contains("g:2"), "{err}");
        assert!(GlobalScoreTable::parse("g", b"0\t0.5\n0\t0.1\n").is_err());
        assert!(GlobalScoreTable::read_or_default(Path::new("/nonexistent/global.tsv")).unwrap().is_empty());
    }

    #[test]
    fn top_k_ties_and_prefix() {
        let w = ScoreWeights::default();
        let tied = [5, 2, 9].map(|d| combined_score(d, 1.0, 0.5, 0.0, &w));
        let order: Vec<DocId> = top_k(tied, 10).unwrap().iter().map(|h| h.doc_id).collect();
        assert_eq!(order, [2, 5, 9]);
        assert!(top_k(tied, 0).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let hits: Vec<ScoredHit> =
            (0..10_000).map(|d| combined_score(d, f64::from(rng.gen_range(0..500u32)) / 100.0, 0.1, 0.0, &w)).collect();
        let mut full = hits.clone();
        full.sort_by(rank_cmp);
        assert_eq!(top_k(hits.iter().rev().copied(), 10).unwrap(), full[..10]);
    }

    proptest! {
        #[test]
        fn top_k_scale_invariant(scores in prop::collection::vec((0u32..50, 0u32..50), 1..60), c in 0.5f64..8.0) {
            let make = |w: ScoreWeights| -> Vec<DocId> {
                let hits = scores.iter().enumerate().map(|(d, &(t, g))| combined_score(d as DocId, f64::from(t) / 8.0, f64::from(g) / 64.0, 0.25, &w));
                top_k(hits, 10).unwrap().iter().map(|h| h.doc_id).collect()
            };
            // powers of two keep the scaled sums exact
            let c = 2f64.powi(c.log2().round() as i32);
            prop_assert_eq!(make(ScoreWeights::default()), make(ScoreWeights::new(c, c, c).unwrap()));
        }
    }
}
