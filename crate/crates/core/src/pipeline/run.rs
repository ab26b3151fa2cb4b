use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{Corpus, RefId, Reference};
use crate::curation::{apply_exclusions, dedup, parse_rules, pending_flags, read_verdicts, remove_authorless, Verdicts};
use crate::ingest::{attach_citations, load_corpus, load_sidecar, merge_corpora, read_ris_file, save_corpus, write_ris};
use crate::ledger::Ledger;
use crate::report::{
    categories_csv, fit_report, ledger_csv, ledger_report, multi_series_csv, render_line_chart, render_radar,
    series_csv, LineChartSpec, Marker, RadarSpec, SeriesSpec,
};
use crate::sampling::{draw_sample, margin_of_error, sample_size, screening_verdicts, SessionKind, SessionStore};
use crate::trend::{
    category_counts, counts_per_year, cumulative_citations_per_year, fit_stepwise, parse_category_specs,
    CategoryTable, RegressionModel, TimeSeries,
};

use super::config::{FitSeries, PipelineConfig, StageConfig, StageKind};
use super::PipelineError;

pub const STATE_FILE: &str = "state.json";
const SESSIONS_DIR: &str = "sessions";

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
struct StageRecord {
    input: String,
    /// Artifact path relative to the output directory and its digest.
    outputs: BTreeMap<String, String>,
}

type State = BTreeMap<String, StageRecord>;

/// Where a run stopped for human review.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Halt {
    pub stage: String,
    pub session: String,
    pub pending: usize,
    /// Corpus the session was drawn from.
    pub corpus: PathBuf,
    pub sessions: PathBuf,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunReport {
    pub executed: Vec<String>,
    pub skipped: Vec<String>,
    pub halted: Option<Halt>,
    /// Warnings raised by stages, prefixed by stage id.
    pub notes: Vec<String>,
}

fn sha(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    }
}

struct Run<'a> {
    cfg: &'a PipelineConfig,
    out: &'a Path,
    state: State,
    corpus: Option<Corpus>,
    corpus_file: Option<PathBuf>,
    corpus_stages: usize,
}

/// Artifacts written by one stage execution.
struct Outputs<'a> {
    out: &'a Path,
    written: BTreeMap<String, String>,
}

impl Outputs<'_> {
    fn write(&mut self, rel: &str, bytes: impl AsRef<[u8]>) -> Result<(), PipelineError> {
        let path = self.out.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
        let bytes = bytes.as_ref();
        fs::write(&path, bytes).map_err(io_err(&path))?;
        self.written.insert(rel.to_string(), sha(bytes));
        Ok(())
    }

    fn corpus(&mut self, rel: &str, corpus: &Corpus) -> Result<(), PipelineError> {
        let path = self.out.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
        save_corpus(corpus, &path).map_err(|e| stage_err("save", e))?;
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        self.written.insert(rel.to_string(), sha(&bytes));
        Ok(())
    }
}

fn stage_err(stage: &str, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Stage {
        stage: stage.to_string(),
        message: e.to_string(),
    }
}

enum Outcome {
    Done(Vec<String>),
    Halt(Halt),
}

impl Run<'_> {
    fn corpus(&mut self) -> Result<&mut Corpus, PipelineError> {
        if self.corpus.is_none() {
            let path = self.corpus_file.as_ref().expect("ingest runs first");
            self.corpus = Some(load_corpus(path).map_err(|e| stage_err("load", e))?);
        }
        Ok(self.corpus.as_mut().expect("just loaded"))
    }

    fn corpus_rel(&self, id: &str) -> String {
        format!("corpus/{:02}-{id}.jsonl", self.corpus_stages + 1)
    }

    fn is_current(&self, id: &str, input: &str) -> bool {
        let Some(rec) = self.state.get(id) else {
            return false;
        };
        rec.input == input
            && rec.outputs.iter().all(|(rel, digest)| {
                fs::read(self.out.join(rel)).is_ok_and(|b| &sha(&b) == digest)
            })
    }

    fn save_state(&self) -> Result<(), PipelineError> {
        let path = self.out.join(STATE_FILE);
        let text = serde_json::to_string_pretty(&self.state).expect("state serializes");
        fs::write(&path, text + "\n").map_err(io_err(&path))
    }

    fn find(&self, block: &str) -> Option<&StageKind> {
        self.cfg.stages.iter().map(|s| &s.kind).find(|k| k.block() == block)
    }

    fn reference_series(&mut self) -> Result<Option<TimeSeries>, PipelineError> {
        let Some(&StageKind::Timeseries { from, to }) = self.find("timeseries") else {
            return Ok(None);
        };
        let c = counts_per_year(self.corpus()?, from, to).map_err(|e| stage_err("timeseries", e))?;
        Ok(Some(c.series))
    }

    fn citation_series(&mut self) -> Result<Option<TimeSeries>, PipelineError> {
        let Some(&StageKind::Citations { from, to }) = self.find("citations") else {
            return Ok(None);
        };
        let c = cumulative_citations_per_year(self.corpus()?, from, to).map_err(|e| stage_err("citations", e))?;
        Ok(Some(c.series))
    }

    fn fit(&mut self, which: FitSeries) -> Result<Option<RegressionModel>, PipelineError> {
        let found = self.cfg.stages.iter().find_map(|s| match s.kind {
            StageKind::Fit {
                series,
                window,
                t0,
                max_degree,
                alpha_enter,
                alpha_exit,
            } if series == which => Some((window, t0, max_degree, alpha_enter, alpha_exit)),
            _ => None,
        });
        let Some((window, t0, max_degree, alpha_enter, alpha_exit)) = found else {
            return Ok(None);
        };
        let series = match which {
            FitSeries::References => self.reference_series()?,
            FitSeries::Citations => self.citation_series()?,
        }
        .expect("config requires the series stage");
        let series = match window {
            None => series,
            Some((from, to)) => {
                let points = series.points().iter().copied().filter(|p| (from..=to).contains(&p.0)).collect();
                let partial = series.partial_year().filter(|y| (from..=to).contains(y));
                TimeSeries::new(points, partial).map_err(|e| stage_err(&format!("fit-{}", which.name()), e))?
            }
        };
        fit_stepwise(&series, t0, max_degree, alpha_enter, alpha_exit)
            .map(Some)
            .map_err(|e| stage_err(&format!("fit-{}", which.name()), e))
    }

    fn execute(&mut self, stage: &StageConfig, input_base: &str, o: &mut Outputs) -> Result<Outcome, PipelineError> {
        let id = stage.id();
        let mut notes = Vec::new();
        match &stage.kind {
            StageKind::Ingest {
                retrieval_date,
                sources,
                citations,
            } => {
                let mut parts = Vec::new();
                let mut text = String::new();
                for (db, path) in sources {
                    let ingest = read_ris_file(path, db, *retrieval_date).map_err(|e| stage_err(&id, e))?;
                    let file = path.file_name().map(|f| f.to_string_lossy()).unwrap_or_default();
                    writeln!(text, "{db}: {} references from {file}", ingest.corpus.len()).unwrap();
                    for r in &ingest.rejected {
                        let msg = format!("{db}: record at line {} rejected: {}", r.line, r.reason);
                        writeln!(text, "  {msg}").unwrap();
                        notes.push(msg);
                    }
                    parts.push(ingest.corpus);
                }
                let mut corpus = merge_corpora(parts);
                writeln!(text, "merged: {}", corpus.len()).unwrap();
                if let Some(path) = citations {
                    let sidecar = load_sidecar(path).map_err(|e| stage_err(&id, e))?;
                    let report = attach_citations(&mut corpus, &sidecar);
                    writeln!(text, "citations: {} attached, {} unmatched rows", report.attached, report.orphans.len())
                        .unwrap();
                    if !report.orphans.is_empty() {
                        notes.push(format!("{} citation rows matched no reference", report.orphans.len()));
                    }
                }
                o.write("ingest.txt", text)?;
                self.set_corpus(o, &id, corpus)?;
            }
            StageKind::Search { queries, filter } => {
                let specs = parse_category_specs(queries).map_err(|e| stage_err(&id, e))?;
                let corpus = self.corpus()?;
                let table = category_counts(corpus, &specs);
                o.write("search.csv", categories_csv(&table))?;
                if let Some(label) = filter {
                    let row = table.rows.iter().find(|r| &r.name == label).expect("validated at load");
                    let keep: std::collections::HashSet<&RefId> = row.ids.iter().collect();
                    let (kept, dropped): (Vec<Reference>, Vec<Reference>) =
                        corpus.iter().cloned().partition(|r| keep.contains(&r.id));
                    o.write("removed/search.ris", write_ris(&dropped))?;
                    let next = rebuild(corpus, kept, &format!("search:{label}"), &specs_text(&specs, label))?;
                    self.set_corpus(o, &id, next)?;
                }
            }
            StageKind::Dedup(policy) => {
                let corpus = self.corpus()?;
                let before: BTreeMap<RefId, Reference> = corpus.iter().map(|r| (r.id.clone(), r.clone())).collect();
                let report = dedup(corpus, policy);
                let mut links = String::from("pass,removed,kept\n");
                let mut removed = Vec::new();
                for (pass, list) in [("1", &report.pass1), ("2", &report.pass2)] {
                    for l in list {
                        writeln!(links, "{pass},{},{}", l.removed, l.kept).unwrap();
                        removed.push(&before[&l.removed]);
                    }
                }
                o.write("dedup-links.csv", links)?;
                o.write("removed/dedup.ris", write_ris(removed))?;
                let c = self.corpus.take().expect("loaded");
                self.set_corpus(o, &id, c)?;
            }
            StageKind::Authorless => {
                let removed = remove_authorless(self.corpus()?);
                o.write("removed/authorless.ris", write_ris(&removed))?;
                let c = self.corpus.take().expect("loaded");
                self.set_corpus(o, &id, c)?;
            }
            StageKind::Exclude { rules, verdicts } => {
                let rules_text = fs::read_to_string(rules).map_err(io_err(rules))?;
                let rules = parse_rules(&rules_text).map_err(|e| stage_err(&id, e))?;
                let mut v: Verdicts = match verdicts {
                    Some(p) => read_verdicts(fs::File::open(p).map_err(io_err(p))?).map_err(|e| stage_err(&id, e))?,
                    None => Verdicts::new(),
                };
                let session_id = session_id(input_base);
                let corpus_file = self.corpus_file.clone().expect("ingest runs first");
                let sessions = self.out.join(SESSIONS_DIR);
                let seed = self.cfg.seed;
                let corpus = self.corpus()?;
                if !pending_flags(corpus, &rules, &v).is_empty() {
                    let mut store = SessionStore::open(&sessions).map_err(|e| stage_err(&id, e))?;
                    if let Ok(s) = store.get(&session_id) {
                        for (rid, verdict) in screening_verdicts(s) {
                            v.entry(rid).or_insert(verdict);
                        }
                    }
                    let pending = pending_flags(corpus, &rules, &v);
                    if !pending.is_empty() {
                        if store.get(&session_id).is_err() {
                            let queue = pending.iter().map(|p| p.id.clone()).collect();
                            store
                                .create(&session_id, SessionKind::Screening { queue }, seed, corpus)
                                .map_err(|e| stage_err(&id, e))?;
                        }
                        return Ok(Outcome::Halt(Halt {
                            stage: id,
                            session: session_id,
                            pending: pending.len(),
                            corpus: corpus_file,
                            sessions,
                        }));
                    }
                }
                let outcome = apply_exclusions(corpus, &rules, &v).map_err(|e| stage_err(&id, e))?;
                let mut tally = String::from("rule,mode,matched,removed\n");
                for t in &outcome.per_rule {
                    writeln!(tally, "{},{},{},{}", t.label, t.mode, t.matched, t.removed).unwrap();
                }
                writeln!(tally, "kept-on-review,,{},", outcome.kept_flagged.len()).unwrap();
                o.write("exclusions.csv", tally)?;
                let mut why = String::from("id,rule\n");
                for (r, label) in &outcome.removed {
                    writeln!(why, "{},{label}", r.id).unwrap();
                }
                o.write("removed/exclude.csv", why)?;
                o.write("removed/exclude.ris", write_ris(outcome.removed.iter().map(|p| &p.0)))?;
                let c = self.corpus.take().expect("loaded");
                self.set_corpus(o, &id, c)?;
            }
            StageKind::Qa {
                confidence,
                margin,
                proportion,
            } => {
                let seed = self.cfg.seed;
                let corpus = self.corpus()?;
                let population = corpus.len() as u64;
                let n = sample_size(population, *confidence, *margin, *proportion).map_err(|e| stage_err(&id, e))?;
                let achieved = margin_of_error(n, population, *confidence, *proportion).map_err(|e| stage_err(&id, e))?;
                let ids = draw_sample(corpus, n as usize, seed).map_err(|e| stage_err(&id, e))?;
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(["id", "title", "year", "source", "verdict"]).expect("in memory");
                for rid in &ids {
                    let r = corpus.get(rid).expect("drawn from corpus");
                    let year = r.year.map(|y| y.to_string()).unwrap_or_default();
                    w.write_record([r.id.as_str(), &r.title, &year, r.source_db.as_str(), ""]).expect("in memory");
                }
                o.write("qa-sample.csv", w.into_inner().expect("in memory"))?;
                o.write(
                    "qa.txt",
                    format!(
                        "population {population}\nconfidence {confidence}\nmargin {margin}\nproportion {proportion}\nsample size {n}\nachieved margin {achieved:.6}\nseed {seed}\n"
                    ),
                )?;
            }
            StageKind::Timeseries { from, to } => {
                let c = counts_per_year(self.corpus()?, *from, *to).map_err(|e| stage_err(&id, e))?;
                if c.unyeared > 0 || c.out_of_range > 0 {
                    notes.push(format!(
                        "{} references without a year and {} outside {from}..{to} were not counted",
                        c.unyeared, c.out_of_range
                    ));
                }
                o.write("counts.csv", series_csv(&c.series, "references"))?;
            }
            StageKind::Citations { from, to } => {
                let c = cumulative_citations_per_year(self.corpus()?, *from, *to).map_err(|e| stage_err(&id, e))?;
                notes.extend(c.warning());
                o.write("citations.csv", series_csv(&c.series, "citations"))?;
            }
            StageKind::Fit { series, .. } => {
                let model = self.fit(*series)?.expect("this stage is configured");
                o.write(&format!("{id}.txt"), fit_report(&model, &format!("{} per year", series.name())))?;
                o.write(
                    &format!("{id}.json"),
                    serde_json::to_string_pretty(&model).expect("model serializes") + "\n",
                )?;
            }
            StageKind::Categories { specs, trend, .. } => {
                let (table, series) = self.categories(specs, trend.as_ref().map(|t| (t.from, t.to)))?;
                o.write(&format!("{id}.csv"), categories_csv(&table))?;
                if let (Some(t), Some(series)) = (trend, series) {
                    let cols: Vec<(&str, &TimeSeries)> = series.iter().map(|(n, s)| (n.as_str(), s)).collect();
                    o.write(&format!("{id}-trend.csv"), multi_series_csv(&cols))?;
                    let mut fits = String::new();
                    for (name, s) in &series {
                        match fit_stepwise(s, t.t0, crate::trend::DEFAULT_MAX_DEGREE, crate::trend::DEFAULT_ALPHA_ENTER, crate::trend::DEFAULT_ALPHA_EXIT) {
                            Ok(m) => fits.push_str(&fit_report(&m, name)),
                            Err(e) => {
                                writeln!(fits, "fit: {name}\nnot fitted: {e}").unwrap();
                                notes.push(format!("{name}: not fitted: {e}"));
                            }
                        }
                        fits.push('\n');
                    }
                    o.write(&format!("{id}-fits.txt"), fits)?;
                }
            }
            StageKind::Report { width, height } => self.report(o, *width, *height)?,
        }
        Ok(Outcome::Done(notes))
    }

    #[allow(clippy::type_complexity)]
    fn categories(
        &mut self,
        specs: &Path,
        trend: Option<(i32, i32)>,
    ) -> Result<(CategoryTable, Option<Vec<(String, TimeSeries)>>), PipelineError> {
        let text = fs::read_to_string(specs).map_err(io_err(specs))?;
        let specs = parse_category_specs(&text).map_err(|e| stage_err("categories", e))?;
        let corpus = self.corpus()?;
        let table = category_counts(corpus, &specs);
        let Some((from, to)) = trend else {
            return Ok((table, None));
        };
        let mut series = Vec::new();
        for row in &table.rows {
            let keep: std::collections::HashSet<&RefId> = row.ids.iter().collect();
            let refs: Vec<Reference> = corpus.iter().filter(|r| keep.contains(&r.id)).cloned().collect();
            let sub = rebuild(corpus, refs, "category", &row.name)?;
            let c = counts_per_year(&sub, from, to).map_err(|e| stage_err("categories", e))?;
            series.push((row.name.clone(), c.series));
        }
        Ok((table, Some(series)))
    }

    fn report(&mut self, o: &mut Outputs, width: u32, height: u32) -> Result<(), PipelineError> {
        let sized = |mut spec: LineChartSpec| {
            spec.width = width;
            spec.height = height;
            spec
        };
        let chart = |spec: &LineChartSpec| render_line_chart(spec).map_err(|e| stage_err("report", e));
        if let Some(series) = self.reference_series()? {
            let mut s = SeriesSpec::from_series("references", &series, Marker::Square);
            if let Some(m) = self.fit(FitSeries::References)? {
                s = s.with_fit(m);
            }
            let spec = sized(LineChartSpec::new("References per year", "year", "references").with_series(s));
            o.write("report/references.svg", chart(&spec)?)?;
        }
        if let Some(series) = self.citation_series()? {
            let mut s = SeriesSpec::from_series("citations", &series, Marker::Square);
            if let Some(m) = self.fit(FitSeries::Citations)? {
                s = s.with_fit(m);
            }
            let spec = sized(LineChartSpec::new("Citations by publication year", "year", "citations").with_series(s));
            o.write("report/citations.svg", chart(&spec)?)?;
        }
        let category_stages: Vec<(String, PathBuf, Option<(i32, i32, i32)>)> = self
            .cfg
            .stages
            .iter()
            .filter_map(|s| match &s.kind {
                StageKind::Categories { name, specs, trend } => {
                    Some((name.clone(), specs.clone(), trend.as_ref().map(|t| (t.from, t.to, t.t0))))
                }
                _ => None,
            })
            .collect();
        for (name, specs, trend) in category_stages {
            let (table, series) = self.categories(&specs, trend.map(|t| (t.0, t.1)))?;
            if table.rows.len() >= 3 {
                let axes = table.rows.iter().map(|r| (r.name.clone(), r.count as f64)).collect();
                let mut spec = RadarSpec::new(format!("Categories: {name}"), axes);
                spec.width = width;
                spec.height = height;
                let svg = render_radar(&spec).map_err(|e| stage_err("report", e))?;
                o.write(&format!("report/radar-{name}.svg"), svg)?;
            }
            if let (Some((_, _, t0)), Some(series)) = (trend, series) {
                let markers = [Marker::Triangle, Marker::Circle, Marker::Square];
                let mut spec = sized(LineChartSpec::new(format!("Categories per year: {name}"), "year", "references"));
                for (i, (label, s)) in series.iter().enumerate() {
                    let mut ss = SeriesSpec::from_series(label.clone(), s, markers[i % markers.len()]);
                    let fitted = fit_stepwise(
                        s,
                        t0,
                        crate::trend::DEFAULT_MAX_DEGREE,
                        crate::trend::DEFAULT_ALPHA_ENTER,
                        crate::trend::DEFAULT_ALPHA_EXIT,
                    );
                    if let Ok(m) = fitted {
                        ss = ss.with_fit(m);
                    }
                    spec = spec.with_series(ss);
                }
                o.write(&format!("report/trend-{name}.svg"), chart(&spec)?)?;
            }
        }
        let corpus = self.corpus()?;
        let size = corpus.len();
        let ledger = corpus.ledger().clone();
        o.write("report/ledger.csv", ledger_csv(&ledger))?;
        o.write("report/ledger.txt", ledger_report(&ledger, size))?;
        Ok(())
    }

    fn set_corpus(&mut self, o: &mut Outputs, id: &str, corpus: Corpus) -> Result<(), PipelineError> {
        let rel = self.corpus_rel(id);
        o.corpus(&rel, &corpus)?;
        self.corpus = Some(corpus);
        self.corpus_file = Some(self.out.join(rel));
        Ok(())
    }
}

fn specs_text(specs: &[crate::trend::CategorySpec], label: &str) -> String {
    specs
        .iter()
        .find(|s| s.name == label)
        .map(|s| format!("{} :: {}", s.mask, s.query))
        .unwrap_or_default()
}

/// A corpus holding `refs`, a subset of `corpus`, with the removal ledgered.
fn rebuild(corpus: &Corpus, refs: Vec<Reference>, stage: &str, params: &str) -> Result<Corpus, PipelineError> {
    let mut ledger: Ledger = corpus.ledger().clone();
    if ledger.is_empty() {
        ledger.record("initial", corpus.len(), 0, "", "").map_err(|e| stage_err(stage, e))?;
    }
    let removed = corpus.len() - refs.len();
    ledger
        .record(stage, corpus.len(), removed, params, format!("removed={removed}"))
        .map_err(|e| stage_err(stage, e))?;
    Corpus::from_parts(refs, ledger, corpus.retrieval_date()).map_err(|e| stage_err(stage, e))
}

fn session_id(input_base: &str) -> String {
    format!("screening-{}", &input_base[..12])
}

fn input_digest(previous: &str, stage: &StageConfig, extra: &[u8]) -> Result<String, PipelineError> {
    let mut h = Sha256::new();
    h.update(previous.as_bytes());
    h.update(stage.id().as_bytes());
    for (k, v) in &stage.params {
        h.update(format!("\n{k}={v}").as_bytes());
    }
    for f in stage.files() {
        let bytes = fs::read(f).map_err(io_err(f))?;
        h.update(sha(&bytes).as_bytes());
    }
    h.update(extra);
    Ok(hex::encode(h.finalize()))
}

/// Runs every stage in order, skipping the ones whose inputs and outputs are
/// unchanged since the last run. Stops before the exclusion stage when
/// flagged references lack verdicts, after opening a screening session.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunReport, PipelineError> {
    let missing: Vec<String> = cfg
        .stages
        .iter()
        .flat_map(StageConfig::files)
        .filter(|p| !p.is_file())
        .map(|p| p.display().to_string())
        .collect();
    if !missing.is_empty() {
        return Err(PipelineError::Missing(missing));
    }
    let out = cfg.output.as_path();
    fs::create_dir_all(out).map_err(io_err(out))?;
    let state_path = out.join(STATE_FILE);
    let state: State = match fs::read_to_string(&state_path) {
        Ok(text) => serde_json::from_str(&text).unwrap_or_default(),
        Err(_) => State::new(),
    };
    let mut run = Run {
        cfg,
        out,
        state,
        corpus: None,
        corpus_file: None,
        corpus_stages: 0,
    };
    let mut report = RunReport::default();
    let mut previous = String::new();
    for stage in &cfg.stages {
        let id = stage.id();
        let base = input_digest(&previous, stage, &[])?;
        let input = match stage.kind {
            StageKind::Exclude { .. } => {
                let journal = out.join(SESSIONS_DIR).join(format!("{}.jsonl", session_id(&base)));
                let bytes = fs::read(&journal).unwrap_or_default();
                input_digest(&previous, stage, sha(&bytes).as_bytes())?
            }
            _ => base.clone(),
        };
        if run.is_current(&id, &input) {
            if stage.kind.produces_corpus() {
                run.corpus = None;
                run.corpus_file = Some(out.join(run.corpus_rel(&id)));
                run.corpus_stages += 1;
            }
            report.skipped.push(id);
        } else {
            let mut o = Outputs {
                out,
                written: BTreeMap::new(),
            };
            match run.execute(stage, &base, &mut o)? {
                Outcome::Halt(h) => {
                    report.halted = Some(h);
                    return Ok(report);
                }
                Outcome::Done(notes) => {
                    report.notes.extend(notes.into_iter().map(|n| format!("{id}: {n}")));
                }
            }
            if stage.kind.produces_corpus() {
                run.corpus_stages += 1;
            }
            run.state.insert(
                id.clone(),
                StageRecord {
                    input: input.clone(),
                    outputs: o.written,
                },
            );
            run.save_state()?;
            report.executed.push(id);
        }
        previous = input;
    }
    Ok(report)
}
