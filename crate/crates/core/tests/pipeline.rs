use std::fs;
use std::path::Path;

use mapstudy_core::pipeline::{load_config, parse_config, run_pipeline, PipelineError};
use mapstudy_core::sampling::{SessionKind, SessionStore, Verdict};
use mapstudy_core::synth::{demo_bundle, DEMO_SEED};
use mapstudy_core::ingest::load_corpus;

fn demo_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    demo_bundle(DEMO_SEED).write_to(dir.path()).unwrap();
    dir
}

fn read(dir: &Path, rel: &str) -> Vec<u8> {
    fs::read(dir.join("out").join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

const ARTIFACTS: [&str; 10] = [
    "counts.csv",
    "citations.csv",
    "fit-references.txt",
    "categories-methods.csv",
    "categories-computing-trend.csv",
    "report/references.svg",
    "report/citations.svg",
    "report/radar-methods.svg",
    "report/trend-computing.svg",
    "report/ledger.txt",
];

#[test]
fn demo_run_is_complete_reproducible_and_idempotent() {
    let a = demo_dir();
    let b = demo_dir();
    let cfg_a = load_config(&a.path().join("replication.conf")).unwrap();
    let first = run_pipeline(&cfg_a).unwrap();
    assert!(first.halted.is_none());
    assert!(first.skipped.is_empty());
    assert_eq!(first.executed.len(), cfg_a.stages.len());

    let again = run_pipeline(&cfg_a).unwrap();
    assert!(again.executed.is_empty(), "{:?}", again.executed);
    assert_eq!(again.skipped.len(), cfg_a.stages.len());

    run_pipeline(&load_config(&b.path().join("replication.conf")).unwrap()).unwrap();
    for rel in ARTIFACTS {
        assert_eq!(read(a.path(), rel), read(b.path(), rel), "{rel} differs between runs");
    }

    let truth = demo_bundle(DEMO_SEED).truth;
    let counts = String::from_utf8(read(a.path(), "counts.csv")).unwrap();
    for line in counts.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let year: i32 = f[0].parse().unwrap();
        let n: usize = f[1].parse().unwrap();
        assert_eq!(n, truth.final_per_year.get(&year).copied().unwrap_or(0), "{year}");
        assert_eq!(f[2] == "true", year == 2016);
    }
    let ledger = String::from_utf8(read(a.path(), "report/ledger.txt")).unwrap();
    assert!(ledger.trim_end().ends_with(": ok"), "{ledger}");
    let fit = String::from_utf8(read(a.path(), "fit-references.txt")).unwrap();
    assert!(fit.contains("c2 (t-t0)^2"), "{fit}");
}

#[test]
fn editing_one_input_reruns_only_downstream_stages() {
    let dir = demo_dir();
    let conf = dir.path().join("replication.conf");
    run_pipeline(&load_config(&conf).unwrap()).unwrap();
    let specs = dir.path().join("computing.categories");
    let mut text = fs::read_to_string(&specs).unwrap();
    text.push_str("multithreaded :: title :: multithread*\n");
    fs::write(&specs, text).unwrap();
    let r = run_pipeline(&load_config(&conf).unwrap()).unwrap();
    assert_eq!(r.executed, ["categories-computing", "fit-references", "report"]);
    assert_eq!(r.skipped.len(), 9);
}

#[test]
fn missing_verdicts_halt_for_review_and_resume() {
    let dir = demo_dir();
    fs::remove_file(dir.path().join("verdicts.csv")).unwrap();
    let conf = dir.path().join("replication.conf");
    let text = fs::read_to_string(&conf).unwrap().replace("verdicts = verdicts.csv\n", "");
    fs::write(&conf, text).unwrap();
    let cfg = load_config(&conf).unwrap();

    let r = run_pipeline(&cfg).unwrap();
    let halt = r.halted.clone().expect("human review required");
    assert_eq!(halt.stage, "exclude");
    assert_eq!(r.executed, ["ingest", "search", "dedup", "authorless"]);
    let truth = demo_bundle(DEMO_SEED).truth;
    assert_eq!(halt.pending, truth.excluded + truth.flagged_kept);
    assert!(!dir.path().join("out/counts.csv").exists());

    // a second run before review halts at the same place without duplicating the session
    let r2 = run_pipeline(&cfg).unwrap();
    assert_eq!(r2.halted.as_ref().unwrap().session, halt.session);
    assert!(r2.executed.is_empty());

    let corpus = load_corpus(&halt.corpus).unwrap();
    {
        let mut store = SessionStore::open(&halt.sessions).unwrap();
        let SessionKind::Screening { queue } = store.get(&halt.session).unwrap().kind().clone() else {
            panic!("screening session expected");
        };
        for id in queue {
            store.advance(&halt.session, &corpus).unwrap();
            let title = corpus.get(&id).unwrap().title.to_lowercase();
            let v = if title.contains("neural") {
                Verdict::Related
            } else {
                Verdict::FalsePositive {
                    keywords: vec!["off-topic".into()],
                    notes: String::new(),
                }
            };
            store.record(&halt.session, &id, v).unwrap();
        }
    }
    let done = run_pipeline(&cfg).unwrap();
    assert!(done.halted.is_none());
    assert_eq!(done.skipped, ["ingest", "search", "dedup", "authorless"]);
    let final_corpus = load_corpus(&dir.path().join("out/corpus/04-exclude.jsonl")).unwrap();
    assert_eq!(final_corpus.len(), truth.final_size);
}

#[test]
fn missing_inputs_fail_before_any_work() {
    let dir = demo_dir();
    fs::remove_file(dir.path().join("exports/ieee.ris")).unwrap();
    match load_config(&dir.path().join("replication.conf")) {
        Err(PipelineError::Missing(files)) => assert!(files[0].ends_with("ieee.ris")),
        other => panic!("{other:?}"),
    }
    let cfg = parse_config(&fs::read_to_string(dir.path().join("replication.conf")).unwrap(), dir.path()).unwrap();
    assert!(matches!(run_pipeline(&cfg), Err(PipelineError::Missing(_))));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn ingest_and_dedup_only() {
    let dir = demo_dir();
    let conf = "output = small\n[ingest]\nretrieval_date = 2016-04-26\nsource = wos: exports/wos.ris\n[dedup]\n[report]\n";
    let cfg = parse_config(conf, dir.path()).unwrap();
    let r = run_pipeline(&cfg).unwrap();
    assert_eq!(r.executed, ["ingest", "dedup", "report"]);
    assert!(dir.path().join("small/corpus/02-dedup.jsonl").is_file());
    let ledger = fs::read_to_string(dir.path().join("small/report/ledger.csv")).unwrap();
    assert!(ledger.starts_with("stage,input,removed,output"));
    assert!(ledger.contains("dedup-pass1"));
}

#[test]
fn config_errors_name_the_line() {
    let base = Path::new(".");
    let err = |text: &str| match parse_config(text, base) {
        Err(PipelineError::Config { line, message }) => (line, message),
        other => panic!("{other:?}"),
    };
    let ingest = "[ingest]\nretrieval_date = 2016-04-26\nsource = a: a.ris\n";
    assert_eq!(err(&format!("{ingest}[fit]\nt0 = 2002\n")).0, 4);
    assert!(err(&format!("{ingest}[timeseries]\nfrom = 2000\nto = 2010\n[dedup]\n")).1.contains("protocol order"));
    assert!(err("[dedup]\n").1.contains("starts with [ingest]"));
    assert!(err(&format!("{ingest}[qa]\nconfidence = high\n")).1.contains("confidence"));
    assert!(err(&format!("{ingest}[nonsense]\n")).1.contains("unknown stage"));
    assert!(err(&format!("{ingest}[authorless]\nfoo = 1\n")).1.contains("unknown key"));
    assert_eq!(err(&format!("{ingest}[authorless]\njunk\n")).0, 5);
    assert!(err("output = x\n[ingest]\nretrieval_date = 2016-04-26\n").1.contains("source"));
}
