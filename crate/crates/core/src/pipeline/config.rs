use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;

use crate::corpus::SourceDb;
use crate::curation::{DedupPolicy, KeyField};
use crate::trend::{parse_category_specs, DEFAULT_ALPHA_ENTER, DEFAULT_ALPHA_EXIT, DEFAULT_MAX_DEGREE};

use super::PipelineError;

/// Which yearly series a fit stage models.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitSeries {
    References,
    Citations,
}

impl FitSeries {
    pub fn name(self) -> &'static str {
        match self {
            Self::References => "references",
            Self::Citations => "citations",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoryTrend {
    pub from: i32,
    pub to: i32,
    pub t0: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StageKind {
    Ingest {
        retrieval_date: NaiveDate,
        sources: Vec<(SourceDb, PathBuf)>,
        citations: Option<PathBuf>,
    },
    /// Counts hits of labelled queries; optionally keeps only one query's hits.
    Search {
        queries: String,
        filter: Option<String>,
    },
    Dedup(DedupPolicy),
    Authorless,
    Exclude {
        rules: PathBuf,
        verdicts: Option<PathBuf>,
    },
    Qa {
        confidence: f64,
        margin: f64,
        proportion: f64,
    },
    Timeseries {
        from: i32,
        to: i32,
    },
    Citations {
        from: i32,
        to: i32,
    },
    Fit {
        series: FitSeries,
        /// Fit window inside the series range; defaults to the whole series.
        window: Option<(i32, i32)>,
        t0: i32,
        max_degree: u32,
        alpha_enter: f64,
        alpha_exit: f64,
    },
    Categories {
        name: String,
        specs: PathBuf,
        trend: Option<CategoryTrend>,
    },
    Report {
        width: u32,
        height: u32,
    },
}

impl StageKind {
    /// Position in the protocol: search and ingest, then screening, then
    /// classification and analytics, then reporting.
    fn rank(&self) -> u8 {
        match self {
            Self::Ingest { .. } => 0,
            Self::Search { .. } => 1,
            Self::Dedup(_) => 2,
            Self::Authorless => 3,
            Self::Exclude { .. } => 4,
            Self::Qa { .. } => 5,
            Self::Timeseries { .. } | Self::Citations { .. } | Self::Categories { .. } => 6,
            Self::Fit { .. } => 7,
            Self::Report { .. } => 8,
        }
    }

    pub fn block(&self) -> &'static str {
        match self {
            Self::Ingest { .. } => "ingest",
            Self::Search { .. } => "search",
            Self::Dedup(_) => "dedup",
            Self::Authorless => "authorless",
            Self::Exclude { .. } => "exclude",
            Self::Qa { .. } => "qa",
            Self::Timeseries { .. } => "timeseries",
            Self::Citations { .. } => "citations",
            Self::Fit { .. } => "fit",
            Self::Categories { .. } => "categories",
            Self::Report { .. } => "report",
        }
    }

    pub fn produces_corpus(&self) -> bool {
        matches!(
            self,
            Self::Ingest { .. } | Self::Dedup(_) | Self::Authorless | Self::Exclude { .. }
        ) || matches!(self, Self::Search { filter: Some(_), .. })
    }

    fn files(&self) -> Vec<&Path> {
        match self {
            Self::Ingest { sources, citations, .. } => sources
                .iter()
                .map(|s| s.1.as_path())
                .chain(citations.as_deref())
                .collect(),
            Self::Exclude { rules, verdicts } => std::iter::once(rules.as_path()).chain(verdicts.as_deref()).collect(),
            Self::Categories { specs, .. } => vec![specs.as_path()],
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageConfig {
    pub kind: StageKind,
    /// Line of the `[block]` header.
    pub line: usize,
    /// Raw `key = value` lines, for digests.
    pub params: Vec<(String, String)>,
}

impl StageConfig {
    /// Unique name within a pipeline, used for state and artifact names.
    pub fn id(&self) -> String {
        match &self.kind {
            StageKind::Categories { name, .. } => format!("categories-{name}"),
            StageKind::Fit { series, .. } => format!("fit-{}", series.name()),
            k => k.block().to_string(),
        }
    }

    pub fn files(&self) -> Vec<&Path> {
        self.kind.files()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub output: PathBuf,
    pub seed: u64,
    pub stages: Vec<StageConfig>,
}

struct Block {
    name: String,
    line: usize,
    entries: Vec<(String, String, usize)>,
}

impl Block {
    fn err(&self, line: usize, message: impl Into<String>) -> PipelineError {
        PipelineError::Config {
            line,
            message: format!("[{}] {}", self.name, message.into()),
        }
    }

    fn all(&self, key: &str) -> Vec<(&str, usize)> {
        self.entries
            .iter()
            .filter(|e| e.0 == key)
            .map(|e| (e.1.as_str(), e.2))
            .collect()
    }

    fn one(&self, key: &str) -> Result<Option<(&str, usize)>, PipelineError> {
        match self.all(key)[..] {
            [] => Ok(None),
            [v] => Ok(Some(v)),
            [_, (_, line), ..] => Err(self.err(line, format!("`{key}` given more than once"))),
        }
    }

    fn required(&self, key: &str) -> Result<(&str, usize), PipelineError> {
        self.one(key)?
            .ok_or_else(|| self.err(self.line, format!("missing `{key}`")))
    }

    fn parsed<T: FromStr>(&self, key: &str, default: T) -> Result<T, PipelineError>
    where
        T::Err: std::fmt::Display,
    {
        match self.one(key)? {
            None => Ok(default),
            Some((v, line)) => v
                .parse()
                .map_err(|e| self.err(line, format!("`{key}`: {e}"))),
        }
    }

    fn parsed_required<T: FromStr>(&self, key: &str) -> Result<T, PipelineError>
    where
        T::Err: std::fmt::Display,
    {
        let (v, line) = self.required(key)?;
        v.parse().map_err(|e| self.err(line, format!("`{key}`: {e}")))
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<(), PipelineError> {
        match self.entries.iter().find(|e| !allowed.contains(&e.0.as_str())) {
            Some((k, _, line)) => Err(self.err(*line, format!("unknown key `{k}`"))),
            None => Ok(()),
        }
    }
}

fn key_fields(text: &str) -> Result<Vec<KeyField>, String> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| match s {
            "title" => Ok(KeyField::Title),
            "year" => Ok(KeyField::Year),
            "volume" => Ok(KeyField::Volume),
            "venue" => Ok(KeyField::Venue),
            other => Err(format!("unknown key field `{other}`")),
        })
        .collect()
}

fn stage(block: &Block, base: &Path) -> Result<StageKind, PipelineError> {
    let path = |v: &str| base.join(v);
    let kind = match block.name.as_str() {
        "ingest" => {
            block.check_keys(&["retrieval_date", "source", "citations"])?;
            let mut sources = Vec::new();
            for (v, line) in block.all("source") {
                let Some((tag, file)) = v.split_once(':') else {
                    return Err(block.err(line, "expected `source = <database>: <file>`"));
                };
                let tag = tag.trim();
                if tag.is_empty() {
                    return Err(block.err(line, "empty database tag"));
                }
                if sources.iter().any(|(s, _): &(SourceDb, PathBuf)| s.as_str() == tag) {
                    return Err(block.err(line, format!("database `{tag}` listed twice")));
                }
                sources.push((SourceDb::new(tag), path(file.trim())));
            }
            if sources.is_empty() {
                return Err(block.err(block.line, "at least one `source` is required"));
            }
            StageKind::Ingest {
                retrieval_date: block.parsed_required("retrieval_date")?,
                sources,
                citations: block.one("citations")?.map(|v| path(v.0)),
            }
        }
        "search" => {
            block.check_keys(&["query", "filter"])?;
            let lines: Vec<&str> = block.all("query").into_iter().map(|q| q.0).collect();
            if lines.is_empty() {
                return Err(block.err(block.line, "at least one `query` is required"));
            }
            let queries = lines.join("\n");
            let specs = parse_category_specs(&queries).map_err(|e| block.err(block.line, e.to_string()))?;
            let filter = block.one("filter")?;
            if let Some((f, line)) = filter {
                if !specs.iter().any(|s| s.name == f) {
                    return Err(block.err(line, format!("filter names unknown query `{f}`")));
                }
            }
            StageKind::Search {
                queries,
                filter: filter.map(|f| f.0.to_string()),
            }
        }
        "dedup" => {
            block.check_keys(&["pass1", "pass2", "year_guard", "priority"])?;
            let defaults = DedupPolicy::default();
            let fields = |key: &str, default: &[KeyField]| -> Result<Vec<KeyField>, PipelineError> {
                match block.one(key)? {
                    None => Ok(default.to_vec()),
                    Some((v, line)) => key_fields(v).map_err(|e| block.err(line, e)),
                }
            };
            let pass1 = fields("pass1", defaults.pass1())?;
            let pass2 = fields("pass2", defaults.pass2())?;
            let policy = DedupPolicy::new(pass1, pass2).map_err(|e| block.err(block.line, e.to_string()))?;
            let guard = match block.one("year_guard")? {
                None => defaults.year_guard(),
                Some(("none", _)) => None,
                Some((v, line)) => Some(v.parse().map_err(|e| block.err(line, format!("`year_guard`: {e}")))?),
            };
            let priority = block
                .one("priority")?
                .map(|v| {
                    v.0.split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(SourceDb::new)
                        .collect()
                })
                .unwrap_or_default();
            StageKind::Dedup(policy.with_year_guard(guard).with_source_priority(priority))
        }
        "authorless" => {
            block.check_keys(&[])?;
            StageKind::Authorless
        }
        "exclude" => {
            block.check_keys(&["rules", "verdicts"])?;
            StageKind::Exclude {
                rules: path(block.required("rules")?.0),
                verdicts: block.one("verdicts")?.map(|v| path(v.0)),
            }
        }
        "qa" => {
            block.check_keys(&["confidence", "margin", "proportion"])?;
            StageKind::Qa {
                confidence: block.parsed("confidence", 0.95)?,
                margin: block.parsed("margin", 0.10)?,
                proportion: block.parsed("proportion", 0.5)?,
            }
        }
        "timeseries" | "citations" => {
            block.check_keys(&["from", "to"])?;
            let (from, to) = (block.parsed_required("from")?, block.parsed_required("to")?);
            if from > to {
                return Err(block.err(block.line, format!("empty year range {from}..{to}")));
            }
            if block.name == "timeseries" {
                StageKind::Timeseries { from, to }
            } else {
                StageKind::Citations { from, to }
            }
        }
        "fit" => {
            block.check_keys(&["series", "from", "to", "t0", "max_degree", "alpha_enter", "alpha_exit"])?;
            let series = match block.one("series")? {
                None | Some(("references", _)) => FitSeries::References,
                Some(("citations", _)) => FitSeries::Citations,
                Some((v, line)) => return Err(block.err(line, format!("unknown series `{v}`"))),
            };
            let window = match (block.one("from")?, block.one("to")?) {
                (None, None) => None,
                (Some(_), Some(_)) => {
                    let from: i32 = block.parsed_required("from")?;
                    let to: i32 = block.parsed_required("to")?;
                    if from > to {
                        return Err(block.err(block.line, format!("empty year range {from}..{to}")));
                    }
                    Some((from, to))
                }
                _ => return Err(block.err(block.line, "`from` and `to` go together")),
            };
            StageKind::Fit {
                series,
                window,
                t0: block.parsed_required("t0")?,
                max_degree: block.parsed("max_degree", DEFAULT_MAX_DEGREE)?,
                alpha_enter: block.parsed("alpha_enter", DEFAULT_ALPHA_ENTER)?,
                alpha_exit: block.parsed("alpha_exit", DEFAULT_ALPHA_EXIT)?,
            }
        }
        "categories" => {
            block.check_keys(&["name", "specs", "trend_from", "trend_to", "trend_t0"])?;
            let (name, line) = block.required("name")?;
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
                return Err(block.err(line, format!("name `{name}` must be ASCII letters, digits, '-' or '_'")));
            }
            let trend = match (block.one("trend_from")?, block.one("trend_to")?) {
                (None, None) => None,
                (Some(_), Some(_)) => {
                    let from: i32 = block.parsed_required("trend_from")?;
                    let to: i32 = block.parsed_required("trend_to")?;
                    if from > to {
                        return Err(block.err(block.line, format!("empty year range {from}..{to}")));
                    }
                    Some(CategoryTrend {
                        from,
                        to,
                        t0: block.parsed("trend_t0", from)?,
                    })
                }
                _ => return Err(block.err(block.line, "`trend_from` and `trend_to` go together")),
            };
            StageKind::Categories {
                name: name.to_string(),
                specs: path(block.required("specs")?.0),
                trend,
            }
        }
        "report" => {
            block.check_keys(&["width", "height"])?;
            StageKind::Report {
                width: block.parsed("width", crate::report::DEFAULT_WIDTH)?,
                height: block.parsed("height", crate::report::DEFAULT_HEIGHT)?,
            }
        }
        other => return Err(block.err(block.line, format!("unknown stage `{other}`"))),
    };
    Ok(kind)
}

/// Parses a pipeline file. Relative paths resolve against `base`.
///
/// ```text
/// output = out
/// seed = 42
///
/// [ingest]
/// retrieval_date = 2016-04-26
/// source = scopus: exports/scopus.ris
/// ```
pub fn parse_config(text: &str, base: &Path) -> Result<PipelineConfig, PipelineError> {
    let mut globals: Vec<(String, String, usize)> = Vec::new();
    let mut blocks: Vec<Block> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if let Some(name) = trimmed.strip_prefix('[') {
            let Some(name) = name.strip_suffix(']') else {
                return Err(PipelineError::Config {
                    line,
                    message: "unterminated stage header".into(),
                });
            };
            blocks.push(Block {
                name: name.trim().to_string(),
                line,
                entries: Vec::new(),
            });
            continue;
        }
        let Some((k, v)) = trimmed.split_once('=') else {
            return Err(PipelineError::Config {
                line,
                message: "expected `key = value`".into(),
            });
        };
        let entry = (k.trim().to_string(), v.trim().to_string(), line);
        match blocks.last_mut() {
            Some(b) => b.entries.push(entry),
            None => globals.push(entry),
        }
    }

    let global = Block {
        name: "global".into(),
        line: 1,
        entries: globals,
    };
    global.check_keys(&["output", "seed"])?;
    let output = base.join(global.one("output")?.map(|v| v.0).unwrap_or("out"));
    let seed = global.parsed("seed", 42u64)?;

    let mut stages: Vec<StageConfig> = Vec::new();
    for block in &blocks {
        let kind = stage(block, base)?;
        let cfg = StageConfig {
            kind,
            line: block.line,
            params: block.entries.iter().map(|e| (e.0.clone(), e.1.clone())).collect(),
        };
        if let Some(prev) = stages.last() {
            if cfg.kind.rank() < prev.kind.rank() {
                return Err(block.err(
                    block.line,
                    format!("stage must come before [{}] (protocol order)", prev.kind.block()),
                ));
            }
        }
        if stages.iter().any(|s| s.id() == cfg.id()) {
            return Err(block.err(block.line, format!("stage `{}` defined twice", cfg.id())));
        }
        if let StageKind::Fit { series, .. } = cfg.kind {
            let needed = match series {
                FitSeries::References => "timeseries",
                FitSeries::Citations => "citations",
            };
            if !stages.iter().any(|s| s.kind.block() == needed) {
                return Err(block.err(block.line, format!("fitting {} needs a [{needed}] stage", series.name())));
            }
        }
        stages.push(cfg);
    }
    match stages.first() {
        Some(s) if matches!(s.kind, StageKind::Ingest { .. }) => {}
        _ => {
            return Err(PipelineError::Config {
                line: blocks.first().map_or(1, |b| b.line),
                message: "a pipeline starts with [ingest]".into(),
            })
        }
    }
    Ok(PipelineConfig { output, seed, stages })
}

/// Reads and parses a pipeline file, then checks every referenced input
/// exists.
pub fn load_config(path: &Path) -> Result<PipelineConfig, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    let config = parse_config(&text, base)?;
    let missing: Vec<String> = config
        .stages
        .iter()
        .flat_map(StageConfig::files)
        .filter(|p| !p.is_file())
        .map(|p| p.display().to_string())
        .collect();
    if !missing.is_empty() {
        return Err(PipelineError::Missing(missing));
    }
    Ok(config)
}
