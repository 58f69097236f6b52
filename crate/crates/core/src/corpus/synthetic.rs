//! Seeded synthetic corpus, gazetteer and query-trace generator.
//!
//! Term draws follow a Zipf law over a `w<rank>` vocabulary. Place names come
//! from `n_clusters` spatial clusters; every site has a home cluster so that
//! documents on one site mention nearby places. Place 0 of every cluster is
//! named `springfield`, which makes that name ambiguous across clusters, and
//! the last place of each cluster has a two-token name to exercise longest
//! matching.

use std::fs;
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{write_trace, TraceQuery};
use crate::error::{Error, Result};
use crate::geocoder::{write_gazetteer, GazetteerEntry, PlaceKind};
use crate::geom::Rect;

pub const PLACES_PER_CLUSTER: usize = 12;
pub const CLUSTER_RADIUS: f64 = 0.05;
const DOCS_PER_SITE: usize = 8;

#[derive(Clone, Debug)]
pub struct SyntheticConfig {
    pub n_docs: usize,
    pub vocab_size: usize,
    pub zipf_s: f64,
    pub n_clusters: usize,
    pub seed: u64,
    pub n_queries: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig { n_docs: 10_000, vocab_size: 1000, zipf_s: 1.0, n_clusters: 20, seed: 7, n_queries: 200 }
    }
}

/// Parameters for a query trace over an existing synthetic vocabulary and gazetteer.
#[derive(Clone, Debug)]
pub struct TraceConfig {
    pub n_queries: usize,
    /// Query area bounds as fractions of the unit domain; drawn log-uniformly.
    pub min_area: f64,
    pub max_area: f64,
    /// Terms are drawn from the `term_pool` most frequent vocabulary ranks.
    pub term_pool: usize,
    /// Include one query at exactly `min_area` and one at `max_area`.
    pub pin_extremes: bool,
    pub seed: u64,
}

impl TraceConfig {
    /// Areas from 0.01% to the full domain, terms from the top tenth of the vocabulary.
    pub fn new(n_queries: usize, vocab_size: usize, seed: u64) -> Self {
        TraceConfig { n_queries, min_area: 1e-4, max_area: 1.0, term_pool: (vocab_size / 10).max(1), pin_extremes: true, seed }
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticData {
    /// `(site_key, text)` per document, in doc-id order.
    pub docs: Vec<(String, String)>,
    pub gazetteer: Vec<GazetteerEntry>,
    pub trace: Vec<TraceQuery>,
    /// `doc_id -> pr` in `[0,1]`.
    pub global_scores: Vec<f64>,
    /// Vocabulary in rank order (rank 1 first).
    pub vocab: Vec<String>,
    pub cluster_centers: Vec<(f64, f64)>,
    pub cluster_radius: f64,
}

pub fn gen_synthetic(cfg: &SyntheticConfig) -> Result<SyntheticData> {
    if cfg.n_docs == 0 || cfg.vocab_size == 0 || cfg.n_clusters == 0 {
        return Err(Error::contract("synthetic counts must be >= 1"));
    }
    if cfg.zipf_s.is_nan() || cfg.zipf_s <= 0.0 {
        return Err(Error::contract("zipf_s must be > 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let vocab: Vec<String> = (1..=cfg.vocab_size).map(|r| format!("w{r}")).collect();
    let zipf = WeightedIndex::new((1..=cfg.vocab_size).map(|r| (r as f64).powf(-cfg.zipf_s)))
        .map_err(|e| Error::invalid(format!("zipf weights: {e}")))?;

    let cluster_centers: Vec<(f64, f64)> =
        (0..cfg.n_clusters).map(|_| (rng.gen_range(0.15..0.85), rng.gen_range(0.15..0.85))).collect();
    let mut gazetteer = Vec::new();
    for (c, &(cx, cy)) in cluster_centers.iter().enumerate() {
        for j in 0..PLACES_PER_CLUSTER {
            let name: Vec<String> = match j {
                0 => vec!["springfield".into()],
                j if j == PLACES_PER_CLUSTER - 1 => vec![format!("c{c}p{}", j - 1), "tower".into()],
                j => vec![format!("c{c}p{j}")],
            };
            let kind = match j % 3 {
                0 => PlaceKind::City,
                1 => PlaceKind::District,
                _ => PlaceKind::Landmark,
            };
            let (px, py) = point_in_disk(&mut rng, cx, cy, 0.6 * CLUSTER_RADIUS);
            let hw = rng.gen_range(0.001..0.006);
            let hh = rng.gen_range(0.001..0.006);
            let rect = Rect::new_in_unit(px - hw, py - hh, px + hw, py + hh)?;
            gazetteer.push(GazetteerEntry { name, rect, kind });
        }
    }

    let n_sites = cfg.n_docs.div_ceil(DOCS_PER_SITE).max(1);
    let site_cluster: Vec<usize> = (0..n_sites).map(|_| rng.gen_range(0..cfg.n_clusters)).collect();
    let mut docs = Vec::with_capacity(cfg.n_docs);
    for _ in 0..cfg.n_docs {
        let site = rng.gen_range(0..n_sites);
        let len = rng.gen_range(20..=120);
        let mut words: Vec<String> = (0..len).map(|_| vocab[zipf.sample(&mut rng)].clone()).collect();
        let n_places = rng.gen_range(0..=3);
        for _ in 0..n_places {
            let cluster = if rng.gen_bool(0.9) { site_cluster[site] } else { rng.gen_range(0..cfg.n_clusters) };
            let place = &gazetteer[cluster * PLACES_PER_CLUSTER + rng.gen_range(0..PLACES_PER_CLUSTER)];
            let at = rng.gen_range(0..=words.len());
            words.insert(at, place.name.join(" "));
        }
        docs.push((format!("s{site}.example"), words.join(" ")));
    }

    let global_scores = (0..cfg.n_docs).map(|_| rng.gen::<f64>().powi(4)).collect();

    let trace_cfg = TraceConfig::new(cfg.n_queries, cfg.vocab_size, cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut data = SyntheticData {
        docs,
        gazetteer,
        trace: Vec::new(),
        global_scores,
        vocab,
        cluster_centers,
        cluster_radius: CLUSTER_RADIUS,
    };
    data.trace = gen_trace(&data, &trace_cfg);
    Ok(data)
}

fn point_in_disk(rng: &mut ChaCha8Rng, cx: f64, cy: f64, radius: f64) -> (f64, f64) {
    let r = radius * rng.gen::<f64>().sqrt();
    let a = rng.gen_range(0.0..std::f64::consts::TAU);
    (cx + r * a.cos(), cy + r * a.sin())
}

/// Query trace: 1–3 distinct frequent terms with a rectangle whose area is
/// log-uniform in `[min_area, max_area]`. Most rectangles are centered near a
/// gazetteer place, the rest anywhere in the domain.
pub fn gen_trace(data: &SyntheticData, cfg: &TraceConfig) -> Vec<TraceQuery> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let pool = &data.vocab[..cfg.term_pool.clamp(1, data.vocab.len())];
    let (lo, hi) = (cfg.min_area.ln(), cfg.max_area.ln());
    (0..cfg.n_queries)
        .map(|i| {
            let n_terms = rng.gen_range(1..=3usize).min(pool.len());
            let terms: Vec<String> = pool.choose_multiple(&mut rng, n_terms).cloned().collect();
            let area = match i {
                0 if cfg.pin_extremes => cfg.min_area,
                1 if cfg.pin_extremes => cfg.max_area,
                _ => rng.gen_range(lo..=hi).exp(),
            };
            let aspect: f64 = rng.gen_range(0.5f64.ln()..=2f64.ln()).exp();
            let (mut w, mut h) = ((area * aspect).sqrt(), (area / aspect).sqrt());
            if w > 1.0 {
                (w, h) = (1.0, area);
            } else if h > 1.0 {
                (w, h) = (area, 1.0);
            }
            let (cx, cy) = if rng.gen_bool(0.7) && !data.gazetteer.is_empty() {
                let place = data.gazetteer.choose(&mut rng).expect("non-empty");
                let (px, py) = place.rect.center();
                (px + rng.gen_range(-0.02..0.02), py + rng.gen_range(-0.02..0.02))
            } else {
                (rng.gen::<f64>(), rng.gen::<f64>())
            };
            let xmin = (cx - w / 2.0).clamp(0.0, 1.0 - w);
            let ymin = (cy - h / 2.0).clamp(0.0, 1.0 - h);
            let rect = Rect { xmin, ymin, xmax: (xmin + w).min(1.0), ymax: (ymin + h).min(1.0) };
            TraceQuery { terms, rect }
        })
        .collect()
}

impl SyntheticData {
    /// Writes `corpus.tsv`, `gazetteer.tsv`, `trace.tsv` and `global.tsv` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut corpus = String::new();
        for (site, text) in &self.docs {
            corpus.push_str(site);
            corpus.push('\t');
            corpus.push_str(text);
            corpus.push('\n');
        }
        let path = dir.join("corpus.tsv");
        fs::write(&path, corpus).map_err(|e| Error::io(&path, e))?;
        write_gazetteer(&dir.join("gazetteer.tsv"), &self.gazetteer)?;
        write_trace(&dir.join("trace.tsv"), &self.trace)?;
        let mut global = String::new();
        for (id, pr) in self.global_scores.iter().enumerate() {
            global.push_str(&format!("{id}\t{pr}\n"));
        }
        let path = dir.join("global.tsv");
        fs::write(&path, global).map_err(|e| Error::io(&path, e))
    }
}
