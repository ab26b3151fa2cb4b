//! Synthetic corpora with known ground truth.
//!
//! The demo bundle imitates four database exports of a community-detection
//! literature search: yearly volumes follow `2.1 + 1.09 (t - 2002)^2`,
//! works appear in several databases with formatting differences, and the
//! exports carry authorless records and off-topic false positives. Every
//! planted feature is counted while generating, so the counts serve as an
//! oracle for the curation and analytics stages.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::Path;

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, RefType, Reference, SourceDb};
use crate::ingest::write_ris;
use crate::ledger::Ledger;

pub const DEMO_SEED: u64 = 20160426;
pub const SOURCES: [&str; 4] = ["scopus", "wos", "ieee", "sciencedirect"];
const SOURCE_P: [f64; 4] = [0.85, 0.6, 0.3, 0.15];

pub fn retrieval_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2016, 4, 26).expect("valid date")
}

/// Works per year: the quadratic trend from 2002, a thin tail before it and
/// a partial final year.
pub fn planted_volume(year: i32) -> usize {
    match year {
        1995..=2001 => [1, 0, 1, 1, 2, 1, 2][(year - 1995) as usize],
        2002..=2015 => {
            let x = (year - 2002) as f64;
            (2.1 + 1.09 * x * x).round() as usize
        }
        2016 => 64,
        _ => 0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Category {
    Hierarchical,
    Modularity,
    Overlapping,
    Fuzzy,
    Partitional,
    Spectral,
    Dynamic,
    Other,
}

const PHRASES: &[(Category, &str)] = &[
    (Category::Hierarchical, "hierarchical clustering"),
    (Category::Hierarchical, "agglomerative algorithms"),
    (Category::Hierarchical, "divisive algorithms"),
    (Category::Hierarchical, "Girvan-Newman edge betweenness"),
    (Category::Modularity, "greedy modularity optimization"),
    (Category::Modularity, "Louvain modularity maximization"),
    (Category::Modularity, "modularity optimization by simulated annealing"),
    (Category::Modularity, "modularity optimization with genetic algorithms"),
    (Category::Overlapping, "overlapping community discovery"),
    (Category::Overlapping, "CFinder clique percolation"),
    (Category::Fuzzy, "fuzzy c-means"),
    (Category::Fuzzy, "fuzzy clustering"),
    (Category::Partitional, "k-means partitioning"),
    (Category::Partitional, "k-median clustering"),
    (Category::Partitional, "Lloyd iterations"),
    (Category::Spectral, "spectral clustering"),
    (Category::Spectral, "Laplacian eigenvectors"),
    (Category::Spectral, "spectral partitioning"),
    (Category::Dynamic, "dynamic Potts models"),
    (Category::Dynamic, "dynamic random walks"),
    (Category::Dynamic, "dynamic Markov processes"),
    (Category::Other, "label propagation"),
    (Category::Other, "statistical inference"),
    (Category::Other, "information-theoretic compression"),
];

const CATEGORY_WEIGHTS: [(Category, u32); 8] = [
    (Category::Hierarchical, 25),
    (Category::Modularity, 20),
    (Category::Overlapping, 10),
    (Category::Fuzzy, 5),
    (Category::Partitional, 8),
    (Category::Spectral, 10),
    (Category::Dynamic, 7),
    (Category::Other, 15),
];

const LEADS: [&str; 8] = ["", "improved ", "fast ", "scalable ", "robust ", "efficient ", "adaptive ", "accurate "];
const LINKS: [&str; 5] = [
    "for community detection in",
    "to detect communities in",
    "for graph clustering of",
    "applied to community structure in",
    "and community detection in",
];
const DOMAINS: [&str; 20] = [
    "social", "biological", "protein interaction", "citation", "collaboration",
    "transportation", "communication", "email", "web", "metabolic",
    "financial", "software dependency", "road", "airline", "terrorist",
    "co-authorship", "online", "peer-to-peer", "power grid", "brain",
];
const COMPUTE: [(bool, &str); 4] = [
    (false, "using parallel computing"),
    (false, "with multithreaded execution"),
    (true, "on distributed computing platforms"),
    (true, "with distributed processing"),
];
/// (full venue, abbreviation that normalizes differently)
const VENUES: [(&str, &str); 9] = [
    ("Physical Review E", "Phys. Rev. E"),
    ("Physica A", "Physica A: Stat. Mech. Appl."),
    ("Journal of Statistical Mechanics", "J. Stat. Mech."),
    ("Social Networks", "Soc. Netw."),
    ("IEEE Transactions on Knowledge and Data Engineering", "IEEE Trans. Knowl. Data Eng."),
    ("Knowledge-Based Systems", "Knowl.-Based Syst."),
    ("Proceedings of the National Academy of Sciences", "PNAS"),
    ("Scientific Reports", "Sci. Rep."),
    ("New Journal of Physics", "New J. Phys."),
];
const SURNAMES: [&str; 24] = [
    "Newman", "Girvan", "Fortunato", "Blondel", "Lancichinetti", "Rosvall", "Palla", "Ravasz",
    "Barabasi", "Clauset", "Guimera", "Amaral", "Reichardt", "Bornholdt", "Arenas", "Danon",
    "Duch", "Pons", "Latapy", "Raghavan", "Lambiotte", "Delvenne", "Peixoto", "Traag",
];

const FP_SUBJECTS: [&str; 4] = ["Community structure of", "Network analysis of", "Modular organization of", "Community detection for"];
const FP_DOMAINS: [&str; 10] = [
    "marine microbial assemblages",
    "soil bacterial consortia",
    "coral reef fish populations",
    "freshwater sponge colonies",
    "tropical plant pollinators",
    "host-parasite interactions",
    "forest ecosystem food webs",
    "climate teleconnection patterns",
    "gut microbial communities",
    "ecological niches of grassland species",
];
const FP_PLACES: [&str; 12] = [
    "the Baltic Sea", "the Amazon basin", "alpine lakes", "the Great Barrier Reef", "boreal forests",
    "the Mediterranean", "arid savannas", "temperate estuaries", "the Arctic shelf", "rice paddies",
    "urban parks", "mangrove swamps",
];

/// How a secondary copy of a work differs from the primary record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Variant {
    /// The record as published.
    Primary,
    /// Same pass-1 key after normalization (case, punctuation).
    Exact,
    /// Venue abbreviated: differs in pass 1, collapses in pass 2.
    Venue,
    /// Volume missing: differs in pass 1, collapses in pass 2.
    Volume,
    /// Indexed a year later: differs in pass 1, within the pass-2 year guard.
    YearShift,
}

#[derive(Debug, Clone)]
struct Work {
    title: String,
    abstract_text: String,
    keywords: Vec<String>,
    authors: Vec<String>,
    year: i32,
    venue: usize,
    volume: u32,
    pages: String,
    citations: Option<u64>,
    /// (source index, variant) for every copy; the first is the primary.
    copies: Vec<(usize, Variant)>,
}

impl Work {
    fn record(&self, source: usize, variant: Variant, id: String) -> Reference {
        let mut r = Reference::new(id, self.title.clone(), SourceDb::new(SOURCES[source]));
        r.ref_type = RefType::Journal;
        r.authors = self.authors.clone();
        r.year = Some(self.year);
        r.venue = Some(VENUES[self.venue].0.to_string());
        r.volume = Some(self.volume.to_string());
        r.pages = Some(self.pages.clone());
        r.abstract_text = Some(self.abstract_text.clone());
        r.keywords = self.keywords.clone();
        match variant {
            Variant::Primary => {}
            Variant::Exact => {
                if source % 2 == 1 {
                    r.title = self.title.to_uppercase();
                } else {
                    r.title = format!("{}.", self.title);
                }
            }
            Variant::Venue => {
                r.venue = Some(VENUES[self.venue].1.to_string());
                r.abstract_text = None;
            }
            Variant::Volume => {
                r.volume = None;
            }
            Variant::YearShift => {
                r.year = Some(self.year + 1);
                r.keywords.clear();
            }
        }
        r
    }

    fn distinct_pass1_keys(&self) -> usize {
        self.copies
            .iter()
            .map(|c| if c.1 == Variant::Primary { Variant::Exact } else { c.1 })
            .collect::<BTreeSet<_>>()
            .len()
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn pick_category(rng: &mut ChaCha8Rng) -> Category {
    let total: u32 = CATEGORY_WEIGHTS.iter().map(|w| w.1).sum();
    let mut roll = rng.random_range(0..total);
    for (c, w) in CATEGORY_WEIGHTS {
        if roll < w {
            return c;
        }
        roll -= w;
    }
    Category::Other
}

fn authors(rng: &mut ChaCha8Rng) -> Vec<String> {
    let n = rng.random_range(1..=4);
    (0..n)
        .map(|_| {
            let s = SURNAMES[rng.random_range(0..SURNAMES.len())];
            let initial = (b'A' + rng.random_range(0..26u8)) as char;
            format!("{s}, {initial}.")
        })
        .collect()
}

fn copies(rng: &mut ChaCha8Rng, year: i32, allow_dupes: bool) -> Vec<(usize, Variant)> {
    let mut present: Vec<usize> = (0..SOURCES.len()).filter(|&s| rng.random_bool(SOURCE_P[s])).collect();
    if present.is_empty() {
        present.push(rng.random_range(0..SOURCES.len()));
    }
    if !allow_dupes {
        present.truncate(1);
    }
    present
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            if k == 0 {
                return (s, Variant::Primary);
            }
            let roll = rng.random_range(0..100);
            // a year shift must stay inside the fitted range
            let v = match roll {
                0..60 => Variant::Exact,
                60..80 => Variant::Venue,
                80..90 => Variant::Volume,
                _ if year < 2015 => Variant::YearShift,
                _ => Variant::Volume,
            };
            (s, v)
        })
        .collect()
}

struct TitleFactory {
    combos: Vec<(usize, usize, usize, usize)>,
    next: usize,
}

impl TitleFactory {
    fn new(rng: &mut ChaCha8Rng) -> Self {
        let mut combos = Vec::new();
        for p in 0..PHRASES.len() {
            for l in 0..LEADS.len() {
                for k in 0..LINKS.len() {
                    for d in 0..DOMAINS.len() {
                        combos.push((p, l, k, d));
                    }
                }
            }
        }
        combos.shuffle(rng);
        Self { combos, next: 0 }
    }

    /// A fresh title whose method phrase belongs to `category`.
    fn title(&mut self, category: Category) -> (String, &'static str) {
        loop {
            let (p, l, k, d) = self.combos[self.next];
            self.next += 1;
            if PHRASES[p].0 == category {
                let phrase = PHRASES[p].1;
                let t = format!("{}{} {} {} networks", LEADS[l], phrase, LINKS[k], DOMAINS[d]);
                return (capitalize(&t), phrase);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DemoTruth {
    pub per_source: BTreeMap<String, usize>,
    pub merged: usize,
    pub pass1_removed: usize,
    pub pass2_removed: usize,
    pub authorless: usize,
    pub excluded: usize,
    pub flagged_kept: usize,
    pub final_size: usize,
    /// Publication year of every work in the final corpus.
    pub final_per_year: BTreeMap<i32, usize>,
    pub final_per_category: BTreeMap<Category, usize>,
    /// Works in the final corpus using parallel or distributed computing.
    pub computing: (usize, usize),
}

#[derive(Debug, Clone)]
pub struct DemoBundle {
    /// RIS text per source, in `SOURCES` order.
    pub exports: Vec<(String, Vec<u8>)>,
    pub citations_csv: String,
    pub verdicts_csv: String,
    pub rules: String,
    pub methods: String,
    pub computing: String,
    pub config: String,
    pub truth: DemoTruth,
}

pub const FALSE_POSITIVE_RULES: &str = "\
# Terms registered while keywording false positives. Each flagged reference
# is screened by hand; verdicts live in verdicts.csv.
microbial :: flag :: microbial*
ecosystem :: flag :: ecosystem*
ecologic :: flag :: ecologic*
bacterial :: flag :: bacterial
marine :: flag :: marine
fish :: flag :: fish*
sponge :: flag :: sponge*
plant :: flag :: plant*
parasite :: flag :: *parasit*
neural :: flag :: \"neural network*\"
climate :: flag :: climate
graphical :: flag :: graphical*
";

/// Kinds of community detection methods. Adjacent words inside parentheses
/// in the published strings are written here as quoted phrases.
pub const METHOD_CATEGORIES: &str = "\
hierarchical :: all :: \"hierarchical cluster*\" OR \"hierarchical partition*\" OR Girvan-Newman OR Ravasz OR dendogram* OR \"agglomerative algorithm*\" OR \"divisive algorithm*\"
modularity :: all :: modularity AND (greedy OR optimiz* OR \"simulated annealing\" OR \"genetic algorithm*\" OR Louvain)
overlapping :: all :: \"overlapping communit*\" OR CFinder OR \"fuzzy communit*\" OR \"fuzzy cluster*\" OR c-mean
fuzzy :: all :: \"fuzzy communit*\" OR \"fuzzy cluster*\" OR c-mean
partitional :: all :: \"partitional cluster*\" OR k-mean* OR k-cluster* OR k-center* OR k-median OR Lloyd
spectral :: all :: \"spectral cluster*\" OR \"spectral partition*\" OR \"spectral method*\" OR laplacian OR eigenvector*
dynamic :: all :: dynamic AND (Potts OR \"random walk*\" OR Markov OR synchronization)
";

pub const COMPUTING_CATEGORIES: &str = "\
non-sequential :: all :: parallel OR *thread* OR multiproc* OR \"distributed proc*\" OR \"distributed comput*\"
distributed :: all :: \"distributed proc*\" OR \"distributed comput*\"
";

pub const DEMO_CONFIG: &str = "\
# Replication of the mapping-study protocol on the synthetic demo exports.
output = out
seed = 42

[ingest]
retrieval_date = 2016-04-26
source = scopus: exports/scopus.ris
source = wos: exports/wos.ris
source = ieee: exports/ieee.ris
source = sciencedirect: exports/sciencedirect.ris
citations = citations.csv

# The master string as published, and with the missing wildcard restored.
[search]
query = master-verbatim :: all :: (\"communit detection\" OR \"graph clustering\" OR \"communit* structure\") AND (algorithm* OR method*) AND (network* OR graph*)
query = master-corrected :: all :: (\"communit* detection\" OR \"graph clustering\" OR \"communit* structure\") AND (algorithm* OR method*) AND (network* OR graph*)

[dedup]
priority = scopus, wos, ieee, sciencedirect
year_guard = 1

[authorless]

[exclude]
rules = false-positives.rules
verdicts = verdicts.csv

[qa]
confidence = 0.95
margin = 0.10
proportion = 0.5

[timeseries]
from = 1995
to = 2016

[citations]
from = 1995
to = 2016

[categories]
name = methods
specs = methods.categories

[categories]
name = computing
specs = computing.categories
trend_from = 2003
trend_to = 2016
trend_t0 = 2003

[fit]
from = 2002
to = 2015
t0 = 2002
max_degree = 4

[report]
";

/// Builds the demo exports and their ground truth.
pub fn demo_bundle(seed: u64) -> DemoBundle {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut titles = TitleFactory::new(&mut rng);
    let mut works: Vec<(Work, Category, Option<bool>)> = Vec::new();

    let special = [
        ("Community structure in social and biological networks", 3203, "divisive algorithm"),
        ("Hierarchical organization of modularity in metabolic networks", 1734, "hierarchical clustering"),
    ];
    for year in 1995..=2016 {
        for k in 0..planted_volume(year) {
            let (title, phrase, category, citations) = if year == 2002 {
                let (t, c, p) = special[k];
                let cat = if p == "divisive algorithm" { Category::Hierarchical } else { Category::Hierarchical };
                (t.to_string(), p, cat, Some(c))
            } else {
                let category = pick_category(&mut rng);
                let (t, p) = titles.title(category);
                let c = (!rng.random_bool(0.1)).then(|| rng.random_range(0..=(25 * (2016 - year) as u64)));
                (t, p, category, c)
            };
            // parallel computing spreads after 2003
            let compute = (year >= 2003 && rng.random_bool(0.04 + 0.01 * (year - 2003) as f64))
                .then(|| COMPUTE[rng.random_range(0..COMPUTE.len())]);
            let title = match compute {
                Some((_, suffix)) => format!("{title} {suffix}"),
                None => title,
            };
            let work = Work {
                abstract_text: format!(
                    "We study community detection in complex networks. The proposed method relies on {}. Experiments on benchmark graphs show competitive accuracy.",
                    phrase.to_lowercase()
                ),
                keywords: vec!["community detection".into(), "complex networks".into()],
                authors: authors(&mut rng),
                year,
                venue: rng.random_range(0..VENUES.len()),
                volume: (year - 1990) as u32 * 3 + rng.random_range(0..3),
                pages: {
                    let s = rng.random_range(1..900);
                    format!("{s}-{}", s + rng.random_range(5..20))
                },
                citations,
                copies: copies(&mut rng, year, true),
                title,
            };
            works.push((work, category, compute.map(|c| c.0)));
        }
    }

    // distinct works that share a title, years apart: the year guard keeps both
    for (title, years) in [
        ("Community detection in graphs", [2004, 2010]),
        ("Finding community structure in networks", [2005, 2012]),
    ] {
        for y in years {
            let mut w = works.iter().find(|w| w.0.year == y).expect("year populated").0.clone();
            w.title = title.to_string();
            w.citations = Some(100);
            w.copies = vec![(0, Variant::Primary)];
            works.push((w, Category::Other, None));
        }
    }

    // on-topic works that trip the `neural` rule and are kept on review
    let mut kept_flagged = Vec::new();
    for y in [2013, 2014, 2015] {
        let (t, _) = titles.title(Category::Other);
        let mut w = works.iter().find(|w| w.0.year == y).expect("year populated").0.clone();
        w.title = format!("{t} via graph neural networks");
        w.copies = vec![(1, Variant::Primary)];
        w.citations = Some(3);
        kept_flagged.push(works.len());
        works.push((w, Category::Other, None));
    }

    // emit in year order per source, recording ids
    let mut per_source: Vec<Vec<Reference>> = vec![Vec::new(); SOURCES.len()];
    let mut order: Vec<usize> = (0..works.len()).collect();
    order.sort_by_key(|&i| works[i].0.year);
    let mut id_of_primary: BTreeMap<usize, String> = BTreeMap::new();
    for &i in &order {
        for (k, &(s, v)) in works[i].0.copies.iter().enumerate() {
            let id = format!("{}:{:05}", SOURCES[s], per_source[s].len() + 1);
            if k == 0 {
                id_of_primary.insert(i, id.clone());
            }
            per_source[s].push(works[i].0.record(s, v, id));
        }
    }

    // authorless records: editorials and front matter
    let authorless = 18;
    for k in 0..authorless {
        let s = k % SOURCES.len();
        let year = 2004 + (k as i32 % 12);
        let id = format!("{}:{:05}", SOURCES[s], per_source[s].len() + 1);
        let mut r = Reference::new(
            id,
            format!("Editorial: advances in community detection, issue {}", k + 1),
            SourceDb::new(SOURCES[s]),
        );
        r.year = Some(year);
        r.venue = Some(VENUES[k % VENUES.len()].0.into());
        per_source[s].push(r);
    }

    // off-topic false positives, one copy each
    let mut fp_ids = Vec::new();
    let mut fp_seen = BTreeSet::new();
    while fp_ids.len() < 72 {
        let t = format!(
            "{} {} in {}",
            FP_SUBJECTS[rng.random_range(0..FP_SUBJECTS.len())],
            FP_DOMAINS[rng.random_range(0..FP_DOMAINS.len())],
            FP_PLACES[rng.random_range(0..FP_PLACES.len())]
        );
        if !fp_seen.insert(t.clone()) {
            continue;
        }
        let s = rng.random_range(0..SOURCES.len());
        let id = format!("{}:{:05}", SOURCES[s], per_source[s].len() + 1);
        let mut r = Reference::new(id.clone(), t, SourceDb::new(SOURCES[s]));
        r.authors = authors(&mut rng);
        r.year = Some(rng.random_range(2003..=2015));
        r.abstract_text = Some("Network methods applied to field survey data.".into());
        per_source[s].push(r);
        fp_ids.push(id);
    }

    // exports, with the encoding quirks real ones have
    let exports: Vec<(String, Vec<u8>)> = per_source
        .iter()
        .enumerate()
        .map(|(s, refs)| {
            let text = write_ris(refs);
            let bytes = match SOURCES[s] {
                "wos" => [b"\xEF\xBB\xBF".as_slice(), text.as_bytes()].concat(),
                "ieee" => text.replace('\n', "\r\n").into_bytes(),
                _ => text.into_bytes(),
            };
            (SOURCES[s].to_string(), bytes)
        })
        .collect();

    let mut citations = csv::Writer::from_writer(Vec::new());
    citations.write_record(["key", "citations"]).expect("in memory");
    let mut cited = BTreeSet::new();
    for (w, _, _) in &works {
        if let Some(c) = w.citations {
            if cited.insert(w.title.clone()) {
                citations.write_record([w.title.clone(), c.to_string()]).expect("in memory");
            }
        }
    }
    let citations_csv = String::from_utf8(citations.into_inner().expect("in memory")).expect("utf-8");

    let mut verdicts_csv = String::from("id,verdict\n");
    for id in &fp_ids {
        verdicts_csv.push_str(&format!("{id},remove\n"));
    }
    for i in &kept_flagged {
        verdicts_csv.push_str(&format!("{},keep\n", id_of_primary[i]));
    }

    let merged: usize = per_source.iter().map(Vec::len).sum();
    let pass1_removed = works.iter().map(|w| w.0.copies.len() - w.0.distinct_pass1_keys()).sum();
    let pass2_removed = works.iter().map(|w| w.0.distinct_pass1_keys() - 1).sum();
    let mut final_per_year = BTreeMap::new();
    let mut final_per_category: BTreeMap<Category, usize> = BTreeMap::new();
    let mut computing = (0, 0);
    for (w, c, compute) in &works {
        *final_per_year.entry(w.year).or_default() += 1;
        *final_per_category.entry(*c).or_default() += 1;
        if let Some(distributed) = compute {
            computing.0 += 1;
            computing.1 += usize::from(*distributed);
        }
    }
    let truth = DemoTruth {
        per_source: SOURCES
            .iter()
            .zip(&per_source)
            .map(|(s, r)| (s.to_string(), r.len()))
            .collect(),
        merged,
        pass1_removed,
        pass2_removed,
        authorless,
        excluded: fp_ids.len(),
        flagged_kept: kept_flagged.len(),
        final_size: works.len(),
        final_per_year,
        final_per_category,
        computing,
    };
    DemoBundle {
        exports,
        citations_csv,
        verdicts_csv,
        rules: FALSE_POSITIVE_RULES.to_string(),
        methods: METHOD_CATEGORIES.to_string(),
        computing: COMPUTING_CATEGORIES.to_string(),
        config: DEMO_CONFIG.to_string(),
        truth,
    }
}

impl DemoBundle {
    /// Writes the bundle in the layout `DEMO_CONFIG` expects.
    pub fn write_to(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir.join("exports"))?;
        for (source, bytes) in &self.exports {
            fs::write(dir.join("exports").join(format!("{source}.ris")), bytes)?;
        }
        fs::write(dir.join("citations.csv"), &self.citations_csv)?;
        fs::write(dir.join("verdicts.csv"), &self.verdicts_csv)?;
        fs::write(dir.join("false-positives.rules"), &self.rules)?;
        fs::write(dir.join("methods.categories"), &self.methods)?;
        fs::write(dir.join("computing.categories"), &self.computing)?;
        fs::write(dir.join("replication.conf"), &self.config)?;
        Ok(())
    }
}

/// A corpus with planted duplicates and the exact survivor count.
#[derive(Debug, Clone)]
pub struct PlantedCorpus {
    pub corpus: Corpus,
    pub survivors: usize,
    pub pass1_removed: usize,
    pub pass2_removed: usize,
}

/// About `records` references (never fewer) built from unique works copied
/// across sources with the same variants as the demo exports.
pub fn planted_duplicates(records: usize, seed: u64) -> PlantedCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut titles = TitleFactory::new(&mut rng);
    let mut works = Vec::new();
    let mut total = 0;
    while total < records {
        let year = rng.random_range(1998..=2015);
        let (title, phrase) = titles.title(pick_category(&mut rng));
        let w = Work {
            title,
            abstract_text: phrase.to_string(),
            keywords: vec![phrase.to_string()],
            authors: authors(&mut rng),
            year,
            venue: rng.random_range(0..VENUES.len()),
            volume: rng.random_range(1..100),
            pages: "1-10".into(),
            citations: None,
            copies: copies(&mut rng, year, true),
        };
        total += w.copies.len();
        works.push(w);
    }
    let mut refs = Vec::with_capacity(total);
    for w in &works {
        for &(s, v) in &w.copies {
            refs.push(w.record(s, v, format!("p{:05}", refs.len() + 1)));
        }
    }
    refs.shuffle(&mut rng);
    let mut ledger = Ledger::new();
    ledger.record("synthetic", refs.len(), 0, "", "").expect("fresh ledger");
    PlantedCorpus {
        corpus: Corpus::from_parts(refs, ledger, retrieval_date()).expect("unique ids"),
        survivors: works.len(),
        pass1_removed: works.iter().map(|w| w.copies.len() - w.distinct_pass1_keys()).sum(),
        pass2_removed: works.iter().map(|w| w.distinct_pass1_keys() - 1).sum(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundle_is_deterministic() {
        let a = demo_bundle(DEMO_SEED);
        let b = demo_bundle(DEMO_SEED);
        assert_eq!(a.exports, b.exports);
        assert_eq!(a.truth, b.truth);
        assert_ne!(demo_bundle(1).exports, a.exports);
    }

    #[test]
    fn volumes_follow_the_trend() {
        assert_eq!(planted_volume(2002), 2);
        assert_eq!(planted_volume(2012), 111);
        assert_eq!(planted_volume(2015), 186);
        let t = demo_bundle(DEMO_SEED).truth;
        assert_eq!(t.final_per_year[&2012], 111 + 1);
    }

    #[test]
    fn accounting_adds_up() {
        let t = demo_bundle(DEMO_SEED).truth;
        assert_eq!(t.merged, t.per_source.values().sum::<usize>());
        assert_eq!(
            t.merged - t.pass1_removed - t.pass2_removed - t.authorless - t.excluded,
            t.final_size
        );
    }
}
