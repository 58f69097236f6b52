use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use geoquery::bench::{self, BenchConfig, CostModel};
use geoquery::corpus::{gen_synthetic, parse_rect, read_trace, SyntheticConfig};
use geoquery::query_engine::{DEFAULT_K_RESULTS, DEFAULT_K_SWEEPS};
use geoquery::ranking::ScoredHit;
use geoquery::{build_artifacts, Algo, BuildConfig, Engine, Oracle, Query, Rect};

#[derive(Parser)]
#[command(name = "geoquery", version, about = "Geographic keyword search: build, query and benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build all index artifacts from a corpus and a gazetteer.
    Build {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        gazetteer: PathBuf,
        /// `doc_id<TAB>pr` file; missing documents score 0.
        #[arg(long)]
        global_scores: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        grid_bits: u32,
        /// Intervals kept per grid tile.
        #[arg(long, default_value_t = 2)]
        m: usize,
        /// Read coalescing gap in KiB; `inf` merges everything.
        #[arg(long, default_value = "64", value_parser = parse_gap_kib)]
        gap_kib: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one query and print the ranked hits.
    Query {
        #[arg(long)]
        index: PathBuf,
        #[arg(long, value_enum)]
        algo: AlgoArg,
        /// Query terms, separated by spaces or punctuation.
        #[arg(long, required = true, num_args = 1..)]
        terms: Vec<String>,
        /// `xmin,ymin,xmax,ymax` inside the unit square.
        #[arg(long, value_parser = parse_rect_arg, allow_hyphen_values = true)]
        rect: Rect,
        #[arg(long, default_value_t = DEFAULT_K_RESULTS)]
        k: usize,
        #[arg(long, default_value_t = DEFAULT_K_SWEEPS)]
        sweeps: usize,
    },
    /// Replay a trace under several algorithms and compare their I/O cost.
    Bench {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "text-first,geo-first,k-sweep")]
        algos: Vec<AlgoArg>,
        /// Bytes of sequential read one seek is charged as.
        #[arg(long, default_value_t = CostModel::default().seek_cost)]
        seek_cost: u64,
        #[arg(long, default_value_t = DEFAULT_K_RESULTS)]
        k: usize,
        #[arg(long, default_value_t = DEFAULT_K_SWEEPS)]
        sweeps: usize,
        /// CSV report path; the aligned table goes next to it with a `.txt` extension.
        #[arg(long)]
        report: PathBuf,
    },
    /// Toeprint bytes fetched by K-Sweep across k and m.
    SweepStudy {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16,32")]
        ks: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
        ms: Vec<usize>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Generate a synthetic corpus, gazetteer, trace and global scores.
    Gen {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        docs: usize,
        #[arg(long, default_value_t = 1000)]
        vocab: usize,
        #[arg(long, default_value_t = 20)]
        clusters: usize,
        #[arg(long, default_value_t = 200)]
        queries: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum AlgoArg {
    TextFirst,
    GeoFirst,
    KSweep,
    Oracle,
}

impl AlgoArg {
    fn engine_algo(self) -> Option<Algo> {
        match self {
            AlgoArg::TextFirst => Some(Algo::TextFirst),
            AlgoArg::GeoFirst => Some(Algo::GeoFirst),
            AlgoArg::KSweep => Some(Algo::KSweep),
            AlgoArg::Oracle => None,
        }
    }
}

fn parse_rect_arg(s: &str) -> Result<Rect, String> {
    parse_rect(s).map_err(|e| e.to_string())
}

fn parse_gap_kib(s: &str) -> Result<u64, String> {
    if s.eq_ignore_ascii_case("inf") {
        return Ok(u64::MAX);
    }
    let kib: u64 = s.parse().map_err(|_| format!("expected KiB or `inf`, got {s:?}"))?;
    kib.checked_mul(1024).ok_or_else(|| format!("gap {kib} KiB too large"))
}

fn require_file(flag: &str, path: &Path) -> Result<()> {
    if !path.is_file() {
        bail!("{flag}: no such file {}", path.display());
    }
    Ok(())
}

fn hit_line(rank: usize, h: &ScoredHit) -> String {
    format!(
        "{rank}\t{}\t{:.10}\t{:.10}\t{:.10}\t{:.10}",
        h.doc_id, h.combined, h.text_score, h.geo_score, h.global_score
    )
}

fn open_engine(index: &Path) -> Result<Engine> {
    Engine::open(index).with_context(|| format!("opening index {}", index.display()))
}

fn oracle_for(engine: &Engine) -> Result<Oracle> {
    Ok(Oracle::from_index(engine.index(), engine.store(), engine.global().clone())?)
}

fn write_out(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Build { corpus, gazetteer, global_scores, grid_bits, m, gap_kib, out } => {
            require_file("--corpus", &corpus)?;
            require_file("--gazetteer", &gazetteer)?;
            if let Some(g) = &global_scores {
                require_file("--global-scores", g)?;
            }
            let mut cfg = BuildConfig::new(corpus, gazetteer, &out);
            cfg.global_scores = global_scores;
            cfg.grid_bits = grid_bits;
            cfg.m = m;
            cfg.gap = gap_kib;
            let manifest = build_artifacts(&cfg)?;
            println!("wrote {} files to {}", manifest.files.len() + 1, out.display());
            for (k, v) in &manifest.stats {
                println!("{k}\t{v}");
            }
        }
        Command::Query { index, algo, terms, rect, k, sweeps } => {
            let engine = open_engine(&index)?;
            let query = Query::from_rect(&terms, rect, k)?.with_sweeps(sweeps);
            let hits = match algo.engine_algo() {
                Some(a) => engine.run(&query.with_algo(a))?.hits,
                None => oracle_for(&engine)?.brute_force(&query)?,
            };
            for (i, h) in hits.iter().enumerate() {
                println!("{}", hit_line(i + 1, h));
            }
        }
        Command::Bench { index, trace, algos, seek_cost, k, sweeps, report } => {
            let engine = open_engine(&index)?;
            let trace = read_trace(&trace)?;
            let algos: Vec<Algo> = algos.iter().filter_map(|a| a.engine_algo()).collect();
            if algos.is_empty() {
                bail!("--algos: nothing to benchmark besides the oracle");
            }
            let cfg = BenchConfig { cost: CostModel { seek_cost, byte_cost: 1 }, k_results: k, k_sweeps: sweeps };
            let result = bench::run_trace(&engine, &oracle_for(&engine)?, &trace, &algos, &cfg)?;
            let table = bench::report_table(&result);
            print!("{table}");
            write_out(&report, &bench::report_csv(&result))?;
            write_out(&report.with_extension("txt"), &table)?;
        }
        Command::SweepStudy { index, trace, ks, ms, report } => {
            let engine = open_engine(&index)?;
            let trace = read_trace(&trace)?;
            let rows = bench::sweep_study(&engine, &trace, &ks, &ms)?;
            print!("{}", bench::sweep_table(&rows));
            if let Some(p) = report {
                write_out(&p, &bench::sweep_csv(&rows))?;
            }
        }
        Command::Gen { out, docs, vocab, clusters, queries, seed } => {
            let cfg = SyntheticConfig { n_docs: docs, vocab_size: vocab, n_clusters: clusters, n_queries: queries, seed, ..SyntheticConfig::default() };
            gen_synthetic(&cfg)?.write_to(&out)?;
            println!("wrote corpus.tsv, gazetteer.tsv, trace.tsv and global.tsv to {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
