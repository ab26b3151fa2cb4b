use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

use mapstudy_core::curation::{
    apply_exclusions, dedup, parse_rules, pending_flags, read_verdicts, remove_authorless, DedupPolicy, KeyField,
    Verdicts,
};
use mapstudy_core::ingest::{
    attach_citations, load_corpus, load_sidecar, merge_corpora, read_ris_file, save_corpus, write_ris,
};
use mapstudy_core::pipeline::{load_config, run_pipeline};
use mapstudy_core::report::{
    categories_csv, ledger_csv, ledger_report, render_line_chart, render_radar, series_csv, LineChartSpec, Marker,
    RadarSpec, SeriesSpec,
};
use mapstudy_core::sampling::{export_pool, margin_of_error, sample_size, screening_verdicts, SessionStore};
use mapstudy_core::{Corpus, SourceDb};

use crate::ops::{self, FitParams, SeriesKind};
use crate::service::{self, AppState};

/// Exit status when a run stops for human screening.
pub const EXIT_REVIEW: u8 = 3;

#[derive(Parser)]
#[command(name = "mapstudy", version, about = "Workbench for bibliometric systematic mapping studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse one database's RIS export into a corpus file
    Ingest {
        export: PathBuf,
        /// Database tag recorded as provenance
        #[arg(long)]
        source: String,
        #[arg(long)]
        retrieval_date: NaiveDate,
        /// `key,citations` CSV keyed by title
        #[arg(long)]
        citations: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Concatenate corpus files
    Merge {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Collapse duplicates in two passes
    Dedup {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated key fields (title, year, volume, venue)
        #[arg(long, default_value = "title,year,volume,venue")]
        pass1: String,
        #[arg(long, default_value = "title")]
        pass2: String,
        /// Largest year gap merged by pass 2, or `none`
        #[arg(long, default_value = "1")]
        year_guard: String,
        /// Source databases in tie-break order, comma-separated
        #[arg(long, default_value = "")]
        priority: String,
        /// Write the removed records here as RIS
        #[arg(long)]
        removed: Option<PathBuf>,
    },
    /// Remove references without authors
    DropAuthorless {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        removed: Option<PathBuf>,
    },
    /// Evaluate a query and print the matching ids
    Query {
        input: PathBuf,
        #[arg(long, conflicts_with = "query_file", required_unless_present = "query_file")]
        query: Option<String>,
        #[arg(long)]
        query_file: Option<PathBuf>,
        /// Fields searched: all, or a `+`-joined subset of title, abstract, keywords
        #[arg(long, default_value = "all")]
        mask: String,
        /// Print only the count
        #[arg(long)]
        count: bool,
    },
    /// Sample size for a proportion in a finite population
    SampleSize {
        #[arg(long)]
        population: u64,
        #[arg(long, default_value_t = 0.95)]
        confidence: f64,
        #[arg(long, default_value_t = 0.10)]
        margin: f64,
        #[arg(long, default_value_t = 0.5)]
        proportion: f64,
        /// Report the margin achieved by this sample size instead
        #[arg(long)]
        sample: Option<u64>,
    },
    /// Review sessions
    Session {
        #[command(subcommand)]
        command: SessionCommand,
    },
    /// Apply exclusion rules, stopping if flagged references lack verdicts
    Exclude {
        input: PathBuf,
        #[arg(long)]
        rules: PathBuf,
        /// `id,verdict` CSV with keep/remove
        #[arg(long)]
        verdicts: Option<PathBuf>,
        /// Take further verdicts from a screening session in this store
        #[arg(long, requires = "session")]
        sessions: Option<PathBuf>,
        #[arg(long)]
        session: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        removed: Option<PathBuf>,
    },
    /// References per publication year as CSV
    Timeseries {
        input: PathBuf,
        #[command(flatten)]
        range: Range,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Citation totals per publication year as CSV
    Citations {
        input: PathBuf,
        #[command(flatten)]
        range: Range,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Stepwise polynomial fit of a yearly series
    Fit {
        input: PathBuf,
        #[command(flatten)]
        range: Range,
        #[arg(long)]
        t0: i32,
        #[arg(long, default_value = "references")]
        series: SeriesKind,
        #[arg(long, default_value_t = mapstudy_core::trend::DEFAULT_MAX_DEGREE)]
        max_degree: u32,
        #[arg(long, default_value_t = mapstudy_core::trend::DEFAULT_ALPHA_ENTER)]
        alpha_enter: f64,
        #[arg(long, default_value_t = mapstudy_core::trend::DEFAULT_ALPHA_EXIT)]
        alpha_exit: f64,
        /// Print the model as JSON
        #[arg(long)]
        json: bool,
    },
    /// Count references per classification category
    Categories {
        input: PathBuf,
        /// `label :: mask :: query` lines
        #[arg(long)]
        specs: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write charts and ledger reports for a corpus
    Report {
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Year range for the references chart, as FROM..TO
        #[arg(long)]
        years: Option<String>,
        /// Origin of the fitted curve; omit for markers only
        #[arg(long, requires = "years")]
        t0: Option<i32>,
        /// Category spec files, one radar chart each
        #[arg(long)]
        specs: Vec<PathBuf>,
    },
    /// Run a replication pipeline file
    Run { config: PathBuf },
    /// Write the synthetic demo bundle
    #[command(hide = true)]
    DemoData {
        dir: PathBuf,
        #[arg(long, default_value_t = mapstudy_core::synth::DEMO_SEED)]
        seed: u64,
    },
}

#[derive(Args)]
struct Range {
    #[arg(long)]
    from: i32,
    #[arg(long)]
    to: i32,
}

#[derive(Subcommand)]
enum SessionCommand {
    /// Serve the review API on loopback
    Serve {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        sessions: PathBuf,
        #[arg(long, default_value_t = 7878)]
        port: u16,
        /// Category spec files offered as NAME=PATH
        #[arg(long = "categories")]
        category_sets: Vec<String>,
    },
    /// Print a keywording session's exclusion keywords, one per line
    Pool {
        #[arg(long)]
        sessions: PathBuf,
        id: String,
    },
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load(path: &Path) -> Result<Corpus> {
    Ok(load_corpus(path)?)
}

fn save(corpus: &Corpus, path: &Path) -> Result<()> {
    save_corpus(corpus, path)?;
    eprintln!("{}: {} references", path.display(), corpus.len());
    Ok(())
}

fn key_fields(text: &str) -> Result<Vec<KeyField>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| match s {
            "title" => Ok(KeyField::Title),
            "year" => Ok(KeyField::Year),
            "volume" => Ok(KeyField::Volume),
            "venue" => Ok(KeyField::Venue),
            other => bail!("unknown key field `{other}`"),
        })
        .collect()
}

fn parse_years(text: &str) -> Result<(i32, i32)> {
    let (a, b) = text
        .split_once("..")
        .with_context(|| format!("expected FROM..TO, got `{text}`"))?;
    Ok((a.trim().parse()?, b.trim().parse()?))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Ingest {
            export,
            source,
            retrieval_date,
            citations,
            out,
        } => {
            let ingest = read_ris_file(&export, &SourceDb::new(source), retrieval_date)?;
            for r in &ingest.rejected {
                eprintln!("warning: record at line {} rejected: {}", r.line, r.reason);
            }
            let mut corpus = ingest.corpus;
            if let Some(c) = citations {
                let report = attach_citations(&mut corpus, &load_sidecar(&c)?);
                eprintln!("citations attached to {} references", report.attached);
            }
            save(&corpus, &out)?;
        }
        Command::Merge { inputs, out } => {
            let parts = inputs.iter().map(|p| load(p)).collect::<Result<Vec<_>>>()?;
            save(&merge_corpora(parts), &out)?;
        }
        Command::Dedup {
            input,
            out,
            pass1,
            pass2,
            year_guard,
            priority,
            removed,
        } => {
            let guard = match year_guard.as_str() {
                "none" => None,
                g => Some(g.parse().context("--year-guard")?),
            };
            let priority = priority
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(SourceDb::new)
                .collect();
            let policy = DedupPolicy::new(key_fields(&pass1)?, key_fields(&pass2)?)?
                .with_year_guard(guard)
                .with_source_priority(priority);
            let mut corpus = load(&input)?;
            let before = corpus.clone();
            let report = dedup(&mut corpus, &policy);
            eprintln!("pass 1 removed {}, pass 2 removed {}", report.pass1.len(), report.pass2.len());
            if let Some(p) = removed {
                let gone = report.pass1.iter().chain(&report.pass2).filter_map(|l| before.get(&l.removed));
                fs::write(&p, write_ris(gone))?;
            }
            save(&corpus, &out)?;
        }
        Command::DropAuthorless { input, out, removed } => {
            let mut corpus = load(&input)?;
            let gone = remove_authorless(&mut corpus);
            eprintln!("removed {} references without authors", gone.len());
            if let Some(p) = removed {
                fs::write(&p, write_ris(&gone))?;
            }
            save(&corpus, &out)?;
        }
        Command::Query {
            input,
            query,
            query_file,
            mask,
            count,
        } => {
            let text = match (query, query_file) {
                (Some(q), _) => q,
                (None, Some(f)) => fs::read_to_string(&f).with_context(|| format!("reading {}", f.display()))?,
                (None, None) => unreachable!("clap requires one"),
            };
            let corpus = load(&input)?;
            let p = ops::query_preview(&corpus, &text, &mask).map_err(anyhow::Error::msg)?;
            if count {
                println!("{}", p.count);
            } else {
                eprintln!("{} matches for {} over {}", p.count, p.query, p.mask);
                for id in &p.ids {
                    println!("{id}");
                }
            }
        }
        Command::SampleSize {
            population,
            confidence,
            margin,
            proportion,
            sample,
        } => match sample {
            Some(n) => println!("{:.6}", margin_of_error(n, population, confidence, proportion)?),
            None => println!("{}", sample_size(population, confidence, margin, proportion)?),
        },
        Command::Session { command } => match command {
            SessionCommand::Serve {
                corpus,
                sessions,
                port,
                category_sets,
            } => {
                let corpus = load(&corpus)?;
                let store = SessionStore::open(&sessions)?;
                let mut sets = BTreeMap::new();
                for item in category_sets {
                    let (name, path) = item
                        .split_once('=')
                        .with_context(|| format!("expected NAME=PATH, got `{item}`"))?;
                    let text = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
                    ops::categories(&corpus, &text).map_err(anyhow::Error::msg)?;
                    sets.insert(name.to_string(), text);
                }
                let state = AppState {
                    corpus,
                    store: tokio::sync::Mutex::new(store),
                    category_sets: sets,
                };
                tokio::runtime::Builder::new_multi_thread()
                    .enable_all()
                    .build()?
                    .block_on(service::serve(state, port))?;
            }
            SessionCommand::Pool { sessions, id } => {
                let store = SessionStore::open(&sessions)?;
                print!("{}", export_pool(store.get(&id)?));
            }
        },
        Command::Exclude {
            input,
            rules,
            verdicts,
            sessions,
            session,
            out,
            removed,
        } => {
            let rules = parse_rules(&fs::read_to_string(&rules).with_context(|| format!("reading {}", rules.display()))?)?;
            let mut v = match verdicts {
                Some(p) => read_verdicts(fs::File::open(&p).with_context(|| format!("reading {}", p.display()))?)?,
                None => Verdicts::new(),
            };
            if let (Some(dir), Some(id)) = (sessions, session) {
                let store = SessionStore::open(&dir)?;
                for (rid, verdict) in screening_verdicts(store.get(&id)?) {
                    v.entry(rid).or_insert(verdict);
                }
            }
            let mut corpus = load(&input)?;
            let pending = pending_flags(&corpus, &rules, &v);
            if !pending.is_empty() {
                eprintln!("human review required: {} flagged references have no verdict", pending.len());
                for p in &pending {
                    println!("{},{}", p.id, p.rule);
                }
                return Ok(ExitCode::from(EXIT_REVIEW));
            }
            let outcome = apply_exclusions(&mut corpus, &rules, &v)?;
            for t in &outcome.per_rule {
                eprintln!("{}: matched {}, removed {}", t.label, t.matched, t.removed);
            }
            if let Some(p) = removed {
                fs::write(&p, write_ris(outcome.removed.iter().map(|r| &r.0)))?;
            }
            save(&corpus, &out)?;
        }
        Command::Timeseries { input, range, out } => {
            let v = ops::series(&load(&input)?, SeriesKind::References, range.from, range.to).map_err(anyhow::Error::msg)?;
            for w in &v.warnings {
                eprintln!("warning: {w}");
            }
            write_or_print(out.as_deref(), &series_csv(&v.series, "references"))?;
        }
        Command::Citations { input, range, out } => {
            let v = ops::series(&load(&input)?, SeriesKind::Citations, range.from, range.to).map_err(anyhow::Error::msg)?;
            for w in &v.warnings {
                eprintln!("warning: {w}");
            }
            write_or_print(out.as_deref(), &series_csv(&v.series, "citations"))?;
        }
        Command::Fit {
            input,
            range,
            t0,
            series,
            max_degree,
            alpha_enter,
            alpha_exit,
            json,
        } => {
            let corpus = load(&input)?;
            let params = FitParams {
                series,
                from: range.from,
                to: range.to,
                t0,
                max_degree,
                alpha_enter,
                alpha_exit,
            };
            let v = ops::fit(&corpus, &params).map_err(anyhow::Error::msg)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&v.model)?);
            } else {
                print!("{}", v.report);
            }
        }
        Command::Categories { input, specs, out } => {
            let corpus = load(&input)?;
            let text = fs::read_to_string(&specs).with_context(|| format!("reading {}", specs.display()))?;
            let table = ops::categories(&corpus, &text).map_err(anyhow::Error::msg)?;
            write_or_print(out.as_deref(), &categories_csv(&table))?;
        }
        Command::Report {
            input,
            out_dir,
            years,
            t0,
            specs,
        } => {
            let corpus = load(&input)?;
            fs::create_dir_all(&out_dir)?;
            fs::write(out_dir.join("ledger.csv"), ledger_csv(corpus.ledger()))?;
            let ledger = ledger_report(corpus.ledger(), corpus.len());
            fs::write(out_dir.join("ledger.txt"), &ledger)?;
            if let Some(years) = years {
                let (from, to) = parse_years(&years)?;
                let s = ops::series(&corpus, SeriesKind::References, from, to).map_err(anyhow::Error::msg)?;
                let mut spec = SeriesSpec::from_series("references", &s.series, Marker::Square);
                if let Some(t0) = t0 {
                    let params = FitParams {
                        series: SeriesKind::References,
                        from,
                        to,
                        t0,
                        max_degree: mapstudy_core::trend::DEFAULT_MAX_DEGREE,
                        alpha_enter: mapstudy_core::trend::DEFAULT_ALPHA_ENTER,
                        alpha_exit: mapstudy_core::trend::DEFAULT_ALPHA_EXIT,
                    };
                    spec = spec.with_fit(ops::fit(&corpus, &params).map_err(anyhow::Error::msg)?.model);
                }
                let chart = LineChartSpec::new("References per year", "year", "references").with_series(spec);
                fs::write(out_dir.join("references.svg"), render_line_chart(&chart)?)?;
            }
            for path in specs {
                let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                let table = ops::categories(&corpus, &text).map_err(anyhow::Error::msg)?;
                let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                let axes = table.rows.iter().map(|r| (r.name.clone(), r.count as f64)).collect();
                let svg = render_radar(&RadarSpec::new(format!("Categories: {stem}"), axes))?;
                fs::write(out_dir.join(format!("radar-{stem}.svg")), svg)?;
            }
            print!("{ledger}");
        }
        Command::Run { config } => {
            let cfg = load_config(&config)?;
            let report = run_pipeline(&cfg)?;
            for id in &report.skipped {
                eprintln!("skipped  {id} (unchanged)");
            }
            for id in &report.executed {
                eprintln!("executed {id}");
            }
            for n in &report.notes {
                eprintln!("warning: {n}");
            }
            if let Some(h) = report.halted {
                eprintln!(
                    "human review required: stage {} has {} flagged references without a verdict",
                    h.stage, h.pending
                );
                eprintln!("screening session {} is ready; review it with", h.session);
                eprintln!(
                    "  mapstudy session serve --corpus {} --sessions {}",
                    h.corpus.display(),
                    h.sessions.display()
                );
                eprintln!("then resume with\n  mapstudy run {}", config.display());
                return Ok(ExitCode::from(EXIT_REVIEW));
            }
            eprintln!("artifacts in {}", cfg.output.display());
        }
        Command::DemoData { dir, seed } => {
            mapstudy_core::synth::demo_bundle(seed).write_to(&dir)?;
            eprintln!("demo bundle written to {}", dir.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
