//! Trace replay under a deterministic byte + seek cost model.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::corpus::TraceQuery;
use crate::error::{Error, Result};
use crate::io::IoMeter;
use crate::query_engine::{Algo, Engine, Oracle, Query, DEFAULT_K_RESULTS, DEFAULT_K_SWEEPS};
use crate::ranking::ScoredHit;
use crate::spatial_index::{build_grid, sweeps::covered_len, toeprint::RECORD_LEN, GridIntervals};

/// Score tolerance for oracle equivalence.
pub const SCORE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CostModel {
    /// Bytes of sequential reading one seek is worth.
    pub seek_cost: u64,
    pub byte_cost: u64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel { seek_cost: 524_288, byte_cost: 1 }
    }
}

impl CostModel {
    pub fn cost(&self, m: &IoMeter) -> u64 {
        m.bytes() * self.byte_cost + m.seeks() * self.seek_cost
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BenchConfig {
    pub cost: CostModel,
    pub k_results: usize,
    pub k_sweeps: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig { cost: CostModel::default(), k_results: DEFAULT_K_RESULTS, k_sweeps: DEFAULT_K_SWEEPS }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlgoSummary {
    pub algo: Algo,
    pub queries: usize,
    pub total_cost: u64,
    pub meter: IoMeter,
    pub mean_cost: f64,
    pub median_cost: f64,
    /// Σ over queries of the candidate count after the first stage.
    pub candidates: u64,
    pub per_query_cost: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceResult {
    pub algos: Vec<AlgoSummary>,
    /// Set only when every algorithm matched the oracle on every query.
    pub equivalent: bool,
}

impl TraceResult {
    pub fn summary(&self, algo: Algo) -> Option<&AlgoSummary> {
        self.algos.iter().find(|s| s.algo == algo)
    }
}

/// First point where two ranked lists differ, if any.
pub fn compare_hits(want: &[ScoredHit], got: &[ScoredHit], tol: f64) -> Option<String> {
    if want.len() != got.len() {
        return Some(format!("{} hits, oracle has {}", got.len(), want.len()));
    }
    for (rank, (w, g)) in want.iter().zip(got).enumerate() {
        if w.doc_id != g.doc_id {
            return Some(format!("rank {}: doc {} where oracle has {}", rank + 1, g.doc_id, w.doc_id));
        }
        let pairs = [
            ("combined", w.combined, g.combined),
            ("text", w.text_score, g.text_score),
            ("geo", w.geo_score, g.geo_score),
            ("global", w.global_score, g.global_score),
        ];
        for (name, a, b) in pairs {
            if !((a - b).abs() <= tol) {
                return Some(format!("rank {}: doc {} {name} score {b} vs oracle {a}", rank + 1, g.doc_id));
            }
        }
    }
    None
}

pub fn trace_query(tq: &TraceQuery, cfg: &BenchConfig) -> Result<Query> {
    Ok(Query::from_rect(&tq.terms, tq.rect, cfg.k_results)?.with_sweeps(cfg.k_sweeps))
}

fn median(sorted: &[u64]) -> f64 {
    match sorted.len() {
        0 => 0.0,
        n if n % 2 == 1 => sorted[n / 2] as f64,
        n => (sorted[n / 2 - 1] as f64 + sorted[n / 2] as f64) / 2.0,
    }
}

/// Runs every query under every algorithm and checks each result against the
/// oracle. A mismatch is a hard error naming the query.
pub fn run_trace(engine: &Engine, oracle: &Oracle, trace: &[TraceQuery], algos: &[Algo], cfg: &BenchConfig) -> Result<TraceResult> {
    let per_query: Vec<Vec<(IoMeter, u64)>> = trace
        .par_iter()
        .enumerate()
        .map(|(qi, tq)| {
            let base = trace_query(tq, cfg)?;
            let want = oracle.brute_force(&base)?;
            algos
                .iter()
                .map(|&algo| {
                    let report = engine.run(&base.clone().with_algo(algo))?;
                    if let Some(detail) = compare_hits(&want, &report.hits, SCORE_TOLERANCE) {
                        return Err(Error::Mismatch { query: qi, algo: algo.to_string(), detail });
                    }
                    let first_stage = report.stages.first().map_or(0, |s| s.1);
                    Ok((report.meter, first_stage))
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let algos = algos
        .iter()
        .enumerate()
        .map(|(ai, &algo)| {
            let mut meter = IoMeter::default();
            let mut candidates = 0;
            let mut costs = Vec::with_capacity(per_query.len());
            for q in &per_query {
                meter += q[ai].0;
                candidates += q[ai].1;
                costs.push(cfg.cost.cost(&q[ai].0));
            }
            let total_cost = cfg.cost.cost(&meter);
            let mut sorted = costs.clone();
            sorted.sort_unstable();
            let queries = costs.len();
            AlgoSummary {
                algo,
                queries,
                total_cost,
                meter,
                mean_cost: if queries == 0 { 0.0 } else { total_cost as f64 / queries as f64 },
                median_cost: median(&sorted),
                candidates,
                per_query_cost: costs,
            }
        })
        .collect();
    Ok(TraceResult { algos, equivalent: true })
}

const COLUMNS: [&str; 10] = [
    "algorithm",
    "queries",
    "total_cost",
    "postings_bytes",
    "footprint_bytes",
    "toeprint_bytes",
    "seeks",
    "mean_cost",
    "median_cost",
    "candidates",
];

fn rows(result: &TraceResult) -> Vec<[String; 10]> {
    result
        .algos
        .iter()
        .map(|s| {
            [
                s.algo.to_string(),
                s.queries.to_string(),
                s.total_cost.to_string(),
                s.meter.postings_bytes.to_string(),
                s.meter.footprint_bytes.to_string(),
                s.meter.toeprint_bytes.to_string(),
                s.meter.seeks().to_string(),
                format!("{:.1}", s.mean_cost),
                format!("{:.1}", s.median_cost),
                s.candidates.to_string(),
            ]
        })
        .collect()
}

fn aligned(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let line = |cells: Vec<&str>, out: &mut String| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(header.to_vec(), &mut out);
    for r in rows {
        line(r.iter().map(String::as_str).collect(), &mut out);
    }
    out
}

/// Aligned text table, one row per algorithm.
pub fn report_table(result: &TraceResult) -> String {
    let rows: Vec<Vec<String>> = rows(result).into_iter().map(Vec::from).collect();
    aligned(&COLUMNS, &rows)
}

/// Comma-separated report; the first line is the header
/// `algorithm,queries,total_cost,postings_bytes,footprint_bytes,toeprint_bytes,seeks,mean_cost,median_cost,candidates`.
pub fn report_csv(result: &TraceResult) -> String {
    let mut out = COLUMNS.join(",");
    out.push('\n');
    for r in rows(result) {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub m: usize,
    pub k_sweeps: usize,
    pub toeprint_bytes: u64,
    pub seeks: u64,
    /// Bytes a full scan of the toeprint file would read for the same queries.
    pub total_bytes: u64,
}

impl SweepRow {
    pub fn ratio(&self) -> f64 {
        if self.total_bytes == 0 {
            0.0
        } else {
            self.toeprint_bytes as f64 / self.total_bytes as f64
        }
    }
}

/// Toeprint bytes K-Sweep would read for each `(m, k_sweeps)` pair with
/// `k_sweeps >= m`. Grids for other `m` are rebuilt from the stored toeprints.
pub fn sweep_study(engine: &Engine, trace: &[TraceQuery], ks: &[usize], ms: &[usize]) -> Result<Vec<SweepRow>> {
    if ks.iter().chain(ms).any(|&v| v < 1) {
        return Err(Error::contract("sweep study parameters must be >= 1"));
    }
    let toeprints = engine.toeprints().read_all()?;
    let total_per_query = engine.toeprints().data_bytes();
    let mut out = Vec::new();
    for &m in ms {
        let grid = if m == engine.grid().m() {
            engine.grid().clone()
        } else {
            build_grid(&toeprints, engine.grid().grid(), m)?
        };
        for &k in ks.iter().filter(|&&k| k >= m) {
            out.push(sweep_row(engine, trace, &grid, k, total_per_query)?);
        }
    }
    Ok(out)
}

fn sweep_row(engine: &Engine, trace: &[TraceQuery], grid: &GridIntervals, k: usize, per_query: u64) -> Result<SweepRow> {
    let mut row = SweepRow { m: grid.m(), k_sweeps: k, toeprint_bytes: 0, seeks: 0, total_bytes: 0 };
    for tq in trace {
        let q = Query::from_rect(&tq.terms, tq.rect, DEFAULT_K_RESULTS)?.with_sweeps(k);
        let sweeps = engine.sweep_plan(&q, grid)?;
        row.toeprint_bytes += covered_len(&sweeps) * RECORD_LEN;
        row.seeks += sweeps.len() as u64;
        row.total_bytes += per_query;
    }
    Ok(row)
}

pub fn sweep_table(rows: &[SweepRow]) -> String {
    let header = ["m", "k_sweeps", "toeprint_bytes", "seeks", "total_bytes", "ratio"];
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.m.to_string(),
                r.k_sweeps.to_string(),
                r.toeprint_bytes.to_string(),
                r.seeks.to_string(),
                r.total_bytes.to_string(),
                format!("{:.4}", r.ratio()),
            ]
        })
        .collect();
    aligned(&header, &cells)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("m,k_sweeps,toeprint_bytes,seeks,total_bytes,ratio\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{},{},{:.6}", r.m, r.k_sweeps, r.toeprint_bytes, r.seeks, r.total_bytes, r.ratio());
    }
    out
}
