use std::fs;

use geoquery::artifacts::{IndexManifest, MANIFEST_FILE};
use geoquery::bench::{report_csv, report_table, run_trace, sweep_study, BenchConfig, CostModel};
use geoquery::corpus::{gen_synthetic, gen_trace, ingest, SyntheticConfig, SyntheticData, TraceConfig, TraceQuery};
use geoquery::footprint_store::FootprintStore;
use geoquery::geocoder::{geocode, read_gazetteer, Gazetteer, GeocodeConfig};
use geoquery::io::IoMeter;
use geoquery::{build_artifacts, Algo, BuildConfig, Engine, Error, Oracle, Rect};

fn setup(n_docs: usize, seed: u64) -> (tempfile::TempDir, SyntheticData, Engine, Oracle) {
    let data = gen_synthetic(&SyntheticConfig { n_docs, seed, ..SyntheticConfig::default() }).unwrap();
    let dir = tempfile::tempdir().unwrap();
    data.write_to(dir.path()).unwrap();
    let mut cfg = BuildConfig::new(dir.path().join("corpus.tsv"), dir.path().join("gazetteer.tsv"), dir.path().join("index"));
    cfg.global_scores = Some(dir.path().join("global.tsv"));
    build_artifacts(&cfg).unwrap();
    let engine = Engine::open(&dir.path().join("index")).unwrap();
    let oracle = Oracle::from_index(engine.index(), engine.store(), engine.global().clone()).unwrap();
    (dir, data, engine, oracle)
}

#[test]
fn one_query_one_algorithm_table() {
    let (_dir, data, engine, oracle) = setup(1500, 2);
    let result = run_trace(&engine, &oracle, &data.trace[2..3], &[Algo::GeoFirst], &BenchConfig::default()).unwrap();
    assert!(result.equivalent);
    let table = report_table(&result);
    assert_eq!(table.lines().count(), 2);
    assert!(table.lines().nth(1).unwrap().starts_with("geo-first"));
    let csv = report_csv(&result);
    assert!(csv.starts_with("algorithm,queries,total_cost,"));
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn cost_accounting_and_determinism() {
    let (_dir, data, engine, oracle) = setup(2000, 3);
    let cfg = BenchConfig { cost: CostModel { seek_cost: 1000, byte_cost: 1 }, ..BenchConfig::default() };
    let trace = &data.trace[..40];
    let a = run_trace(&engine, &oracle, trace, &Algo::ALL, &cfg).unwrap();
    let b = run_trace(&engine, &oracle, trace, &Algo::ALL, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(report_csv(&a), report_csv(&b));
    for s in &a.algos {
        assert_eq!(s.total_cost, s.meter.bytes() + s.meter.seeks() * 1000);
        assert_eq!(s.per_query_cost.iter().sum::<u64>(), s.total_cost);
        assert_eq!(s.queries, 40);
    }
}

#[test]
fn geo_selective_trace_favors_k_sweep() {
    let (_dir, data, engine, oracle) = setup(4000, 4);
    let mut tc = TraceConfig::new(60, data.vocab.len(), 5);
    tc.max_area = 0.01;
    tc.pin_extremes = false;
    let trace = gen_trace(&data, &tc);
    let r = run_trace(&engine, &oracle, &trace, &Algo::ALL, &BenchConfig::default()).unwrap();
    let cost = |a| r.summary(a).unwrap().total_cost;
    assert!(cost(Algo::KSweep) < cost(Algo::TextFirst));
    assert!(r.summary(Algo::GeoFirst).unwrap().meter.footprint_bytes < r.summary(Algo::TextFirst).unwrap().meter.footprint_bytes);
}

#[test]
fn mismatch_is_a_hard_error() {
    let (_dir, data, engine, _) = setup(1000, 5);
    // an oracle over a different collection disagrees somewhere
    let other = gen_synthetic(&SyntheticConfig { n_docs: 1000, seed: 6, ..SyntheticConfig::default() }).unwrap();
    let c = geoquery::corpus::Collection::from_pairs(other.docs.clone());
    let fps = geocode(&c, &Gazetteer::new(other.gazetteer.clone()).unwrap(), &GeocodeConfig::default());
    let wrong = Oracle::new(&c, fps, Default::default());
    let full: Vec<TraceQuery> = data.trace.iter().filter(|q| q.rect.area() > 0.3).cloned().collect();
    let err = run_trace(&engine, &wrong, &full, &[Algo::TextFirst], &BenchConfig::default()).unwrap_err();
    assert!(matches!(err, Error::Mismatch { .. }), "{err}");
    assert!(err.to_string().contains("text-first"));
}

#[test]
fn sweep_study_monotone_in_k() {
    let (_dir, data, engine, _) = setup(4000, 8);
    let mut tc = TraceConfig::new(50, data.vocab.len(), 9);
    tc.max_area = 0.01;
    let trace = gen_trace(&data, &tc);
    let ks = [1, 2, 4, 8, 16, 64];
    let rows = sweep_study(&engine, &trace, &ks, &[1, 2, 4]).unwrap();
    for m in [1, 2, 4] {
        let series: Vec<_> = rows.iter().filter(|r| r.m == m).collect();
        assert_eq!(series.len(), ks.iter().filter(|&&k| k >= m).count());
        assert!(series.windows(2).all(|w| w[1].toeprint_bytes <= w[0].toeprint_bytes), "m={m}");
        assert!(series.iter().all(|r| r.seeks <= r.k_sweeps as u64 * trace.len() as u64));
    }
    let r = rows.iter().find(|r| r.m == 2 && r.k_sweeps == 4).unwrap();
    assert!(r.ratio() < 0.5, "fetched/total {}", r.ratio());
}

#[test]
fn manifest_lists_seven_files() {
    let data = gen_synthetic(&SyntheticConfig { n_docs: 5, n_clusters: 1, ..SyntheticConfig::default() }).unwrap();
    let dir = tempfile::tempdir().unwrap();
    data.write_to(dir.path()).unwrap();
    let out = dir.path().join("idx");
    let manifest = build_artifacts(&BuildConfig::new(dir.path().join("corpus.tsv"), dir.path().join("gazetteer.tsv"), &out)).unwrap();
    assert_eq!(manifest.files.len(), 7);
    let text = fs::read_to_string(out.join(MANIFEST_FILE)).unwrap();
    assert_eq!(IndexManifest::parse("m", &text).unwrap(), manifest);
    assert_eq!(IndexManifest::read(&out).unwrap(), manifest);
    assert!(text.starts_with("format_version=1\n"));
    for f in manifest.files.values() {
        assert!(out.join(f).is_file());
    }
    // nothing left over from staging
    assert_eq!(fs::read_dir(&out).unwrap().count(), 8);
}

#[test]
fn failed_build_writes_no_manifest() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("corpus.tsv"), "s\tsome words here\n").unwrap();
    fs::write(dir.path().join("gaz.tsv"), "not a gazetteer line\n").unwrap();
    let out = dir.path().join("out");
    let err = build_artifacts(&BuildConfig::new(dir.path().join("corpus.tsv"), dir.path().join("gaz.tsv"), &out)).unwrap_err();
    assert!(err.to_string().starts_with("geocode"), "{err}");
    assert!(!out.join(MANIFEST_FILE).exists());

    let err = build_artifacts(&BuildConfig::new(dir.path().join("corpus.tsv"), dir.path().join("missing.tsv"), &out)).unwrap_err();
    assert!(err.to_string().contains("missing.tsv"), "{err}");

    // a good build, then a failing one, leaves no manifest behind
    let data = gen_synthetic(&SyntheticConfig { n_docs: 50, n_clusters: 2, ..SyntheticConfig::default() }).unwrap();
    data.write_to(dir.path()).unwrap();
    build_artifacts(&BuildConfig::new(dir.path().join("corpus.tsv"), dir.path().join("gazetteer.tsv"), &out)).unwrap();
    assert!(out.join(MANIFEST_FILE).exists());
    fs::write(dir.path().join("empty.tsv"), "").unwrap();
    assert!(build_artifacts(&BuildConfig::new(dir.path().join("empty.tsv"), dir.path().join("gazetteer.tsv"), &out)).is_err());
    assert!(!out.join(MANIFEST_FILE).exists());
    assert!(Engine::open(&out).is_err());
    assert!(fs::read_dir(&out).unwrap().all(|e| !e.unwrap().file_name().to_string_lossy().starts_with(".staging")));
}

#[test]
fn fetch_gap_policy_on_built_store() {
    let (dir, _data, engine, _) = setup(1500, 11);
    let store = FootprintStore::open(&dir.path().join("index")).unwrap();
    let docs: Vec<u32> = store.table().entries().iter().map(|e| e.doc_id).step_by(7).collect();
    let mut last = None;
    for g in [0, 4096, 65536, 1 << 20, u64::MAX] {
        let mut meter = IoMeter::default();
        let plan = store.plan_fetch(&docs, g).unwrap();
        store.fetch(&plan, &mut meter).unwrap();
        if let Some((b, s)) = last {
            assert!(meter.footprint_bytes >= b && meter.footprint_seeks <= s);
        }
        last = Some((meter.footprint_bytes, meter.footprint_seeks));
    }
    assert_eq!(last.unwrap().1, 1);
    assert!(engine.store().plan_fetch(&[u32::MAX], 0).is_err());
}

#[test]
fn ingest_and_geocode_written_files() {
    let data = gen_synthetic(&SyntheticConfig { n_docs: 300, ..SyntheticConfig::default() }).unwrap();
    let dir = tempfile::tempdir().unwrap();
    data.write_to(dir.path()).unwrap();
    let c = ingest(&dir.path().join("corpus.tsv")).unwrap();
    assert_eq!(c.len(), 300);
    let gaz = Gazetteer::new(read_gazetteer(&dir.path().join("gazetteer.tsv")).unwrap()).unwrap();
    let fps = geocode(&c, &gaz, &GeocodeConfig::default());
    assert!(fps.len() > 150, "only {} docs geocoded", fps.len());
    assert!(fps.values().all(|fp| fp.regions().iter().all(|r| Rect::unit().contains(&r.rect))));
    let trace = geoquery::corpus::read_trace(&dir.path().join("trace.tsv")).unwrap();
    assert_eq!(trace, data.trace);
}
