//! Operations shared by the command line and the HTTP service, so both
//! produce the same numbers from the same code.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use mapstudy_core::query::{parse_query, run_query, FieldMask};
use mapstudy_core::report::fit_report;
use mapstudy_core::sampling::{ReviewSession, SessionKind};
use mapstudy_core::trend::{
    category_counts, counts_per_year, cumulative_citations_per_year, fit_stepwise, parse_category_specs,
    CategoryTable, RegressionModel, TimeSeries, DEFAULT_ALPHA_ENTER, DEFAULT_ALPHA_EXIT, DEFAULT_MAX_DEGREE,
};
use mapstudy_core::{Corpus, RefId};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub size: usize,
    pub year_range: Option<(i32, i32)>,
    pub per_source: BTreeMap<String, usize>,
    pub unyeared: usize,
    pub retrieval_date: String,
}

pub fn corpus_stats(corpus: &Corpus) -> CorpusStats {
    let mut per_source = BTreeMap::new();
    let mut range: Option<(i32, i32)> = None;
    let mut unyeared = 0;
    for r in corpus {
        *per_source.entry(r.source_db.as_str().to_string()).or_default() += 1;
        match r.year {
            Some(y) => range = Some(range.map_or((y, y), |(a, b)| (a.min(y), b.max(y)))),
            None => unyeared += 1,
        }
    }
    CorpusStats {
        size: corpus.len(),
        year_range: range,
        per_source,
        unyeared,
        retrieval_date: corpus.retrieval_date().to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryPreview {
    /// The query as parsed, in canonical form.
    pub query: String,
    pub mask: String,
    pub count: usize,
    pub ids: Vec<RefId>,
}

pub fn query_preview(corpus: &Corpus, query: &str, mask: &str) -> Result<QueryPreview, String> {
    let ast = parse_query(query).map_err(|e| e.to_string())?;
    let mask: FieldMask = mask.parse().map_err(|e| format!("{e}"))?;
    let result = run_query(corpus, &ast, mask);
    Ok(QueryPreview {
        query: ast.to_string(),
        mask: mask.to_string(),
        count: result.ids.len(),
        ids: result.ids,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SeriesKind {
    #[default]
    References,
    Citations,
}

impl std::str::FromStr for SeriesKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "references" => Ok(Self::References),
            "citations" => Ok(Self::Citations),
            other => Err(format!("unknown series `{other}` (references or citations)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesView {
    pub series: TimeSeries,
    /// References left out of the buckets or counted as zero.
    pub warnings: Vec<String>,
}

pub fn series(corpus: &Corpus, kind: SeriesKind, from: i32, to: i32) -> Result<SeriesView, String> {
    match kind {
        SeriesKind::References => {
            let c = counts_per_year(corpus, from, to).map_err(|e| e.to_string())?;
            let mut warnings = Vec::new();
            if c.unyeared > 0 {
                warnings.push(format!("{} references have no year", c.unyeared));
            }
            if c.out_of_range > 0 {
                warnings.push(format!("{} references fall outside {from}..{to}", c.out_of_range));
            }
            Ok(SeriesView {
                series: c.series,
                warnings,
            })
        }
        SeriesKind::Citations => {
            let c = cumulative_citations_per_year(corpus, from, to).map_err(|e| e.to_string())?;
            Ok(SeriesView {
                warnings: c.warning().into_iter().collect(),
                series: c.series,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct FitParams {
    #[serde(default)]
    pub series: SeriesKind,
    pub from: i32,
    pub to: i32,
    pub t0: i32,
    #[serde(default = "default_degree")]
    pub max_degree: u32,
    #[serde(default = "default_enter")]
    pub alpha_enter: f64,
    #[serde(default = "default_exit")]
    pub alpha_exit: f64,
}

fn default_degree() -> u32 {
    DEFAULT_MAX_DEGREE
}

fn default_enter() -> f64 {
    DEFAULT_ALPHA_ENTER
}

fn default_exit() -> f64 {
    DEFAULT_ALPHA_EXIT
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitView {
    pub model: RegressionModel,
    pub report: String,
}

pub fn fit(corpus: &Corpus, p: &FitParams) -> Result<FitView, String> {
    let s = series(corpus, p.series, p.from, p.to)?;
    let model = fit_stepwise(&s.series, p.t0, p.max_degree, p.alpha_enter, p.alpha_exit).map_err(|e| e.to_string())?;
    let label = match p.series {
        SeriesKind::References => "references per year",
        SeriesKind::Citations => "citations per year",
    };
    Ok(FitView {
        report: fit_report(&model, label),
        model,
    })
}

pub fn categories(corpus: &Corpus, specs: &str) -> Result<CategoryTable, String> {
    let specs = parse_category_specs(specs).map_err(|e| e.to_string())?;
    Ok(category_counts(corpus, &specs))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionView {
    pub id: String,
    pub kind: &'static str,
    pub status: mapstudy_core::sampling::SessionState,
    pub seed: u64,
    pub population: usize,
    pub drawn: usize,
    pub judged: usize,
    pub clean_streak: usize,
    pub target: Option<usize>,
    pub pending: Option<RefId>,
    pub pool: Vec<String>,
    pub history: Vec<HistoryItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistoryItem {
    pub id: RefId,
    #[serde(flatten)]
    pub verdict: mapstudy_core::sampling::Verdict,
}

pub fn session_view(s: &ReviewSession) -> SessionView {
    SessionView {
        id: s.id().to_string(),
        kind: s.kind().name(),
        status: s.state(),
        seed: s.meta().seed,
        population: s.meta().population,
        drawn: s.drawn().len(),
        judged: s.verdicts().len(),
        clean_streak: s.clean_streak(),
        target: s.target(),
        pending: s.pending().cloned(),
        pool: s.pool().to_vec(),
        history: s
            .verdict_log()
            .map(|(id, v)| HistoryItem {
                id: id.clone(),
                verdict: v.clone(),
            })
            .collect(),
    }
}

/// Builds a session kind from its name; QA audits take an explicit target
/// or derive it from the sample-size formula.
pub fn session_kind(
    name: &str,
    target: Option<usize>,
    queue: Option<Vec<RefId>>,
    population: usize,
    confidence: f64,
    margin: f64,
) -> Result<SessionKind, String> {
    match name {
        "keywording" => Ok(SessionKind::Keywording),
        "qa-audit" => {
            let target = match target {
                Some(t) => t,
                None => mapstudy_core::sampling::sample_size(population as u64, confidence, margin, 0.5)
                    .map_err(|e| e.to_string())? as usize,
            };
            Ok(SessionKind::QaAudit { target })
        }
        "screening" => Ok(SessionKind::Screening {
            queue: queue.ok_or("a screening session needs a `queue` of reference ids")?,
        }),
        other => Err(format!("unknown session kind `{other}`")),
    }
}
