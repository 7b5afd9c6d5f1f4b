//! Paper corpus ingestion and validation.
//!
//! Two input encodings are accepted:
//!
//! * line-delimited JSON, one [`PaperRecord`] object per line;
//! * a columnar text format whose first line is exactly [`COLUMNAR_HEADER`].
//!   `subject_categories` and `annual_citations` are `;`-separated lists
//!   inside their column, and no field may contain a comma.
//!
//! Only articles, reviews and notes from the configured cohort year are kept.
//! Records that cannot be parsed or violate a field invariant are counted as
//! malformed together with their 1-based line number.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_HORIZON: u32 = 31;
pub const DEFAULT_MIN_REFSET_SIZE: usize = 100;
pub const DEFAULT_PUBLICATION_YEAR: i32 = 1980;

pub const COLUMNAR_HEADER: &str = "paper_id,journal_id,pub_year,doc_type,subject_categories,n_authors,n_cited_refs,n_pages,annual_citations";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DocType {
    Article,
    Review,
    Note,
}

impl DocType {
    pub fn as_str(self) -> &'static str {
        match self {
            DocType::Article => "article",
            DocType::Review => "review",
            DocType::Note => "note",
        }
    }
}

impl fmt::Display for DocType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DocType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "article" => Ok(DocType::Article),
            "review" => Ok(DocType::Review),
            "note" => Ok(DocType::Note),
            other => Err(Error::Domain(format!("unsupported doc_type `{other}`"))),
        }
    }
}

/// One publication of the cohort.
///
/// `annual_citations[t - 1]` holds the citations received in window year `t`,
/// where year 1 is the publication year itself.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaperRecord {
    pub paper_id: String,
    pub journal_id: String,
    pub pub_year: i32,
    pub doc_type: DocType,
    pub subject_categories: Vec<String>,
    pub n_authors: u32,
    pub n_cited_refs: u32,
    pub n_pages: u32,
    pub annual_citations: Vec<u32>,
}

impl PaperRecord {
    pub fn horizon(&self) -> u32 {
        self.annual_citations.len() as u32
    }

    pub fn total_citations(&self) -> u64 {
        self.annual_citations.iter().map(|&c| u64::from(c)).sum()
    }
}

/// Citations received in years `1..=window_year`.
pub fn cumulative_citations(paper: &PaperRecord, window_year: u32) -> Result<u64> {
    let horizon = paper.horizon();
    if window_year == 0 || window_year > horizon {
        return Err(Error::WindowYear {
            year: window_year,
            horizon,
        });
    }
    Ok(paper.annual_citations[..window_year as usize]
        .iter()
        .map(|&c| u64::from(c))
        .sum())
}

/// A citation received in `citing_year` by the item `cited_paper_id`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CitationEvent {
    pub citing_year: i32,
    pub cited_paper_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub horizon: u32,
    pub min_refset_size: usize,
    pub publication_year: i32,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            horizon: DEFAULT_HORIZON,
            min_refset_size: DEFAULT_MIN_REFSET_SIZE,
            publication_year: DEFAULT_PUBLICATION_YEAR,
        }
    }
}

impl CorpusConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon < 2 {
            return Err(Error::Config(format!(
                "horizon must be at least 2, got {}",
                self.horizon
            )));
        }
        if self.min_refset_size < 1 {
            return Err(Error::Config("min_refset_size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Validated cohort. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    config: CorpusConfig,
    papers: Vec<PaperRecord>,
    index: HashMap<String, usize>,
}

impl Corpus {
    /// Builds a corpus from records that already satisfy every field invariant.
    pub fn from_records(config: CorpusConfig, papers: Vec<PaperRecord>) -> Result<Self> {
        config.validate()?;
        let mut index = HashMap::with_capacity(papers.len());
        for (i, p) in papers.iter().enumerate() {
            if let Err(message) = check_record(p, &config) {
                return Err(Error::Domain(format!("paper `{}`: {message}", p.paper_id)));
            }
            if index.insert(p.paper_id.clone(), i).is_some() {
                return Err(Error::DuplicatePaper(p.paper_id.clone()));
            }
        }
        Ok(Self {
            config,
            papers,
            index,
        })
    }

    pub fn config(&self) -> &CorpusConfig {
        &self.config
    }

    pub fn papers(&self) -> &[PaperRecord] {
        &self.papers
    }

    pub fn len(&self) -> usize {
        self.papers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.papers.is_empty()
    }

    pub fn get(&self, paper_id: &str) -> Option<&PaperRecord> {
        self.index.get(paper_id).map(|&i| &self.papers[i])
    }

    pub fn position(&self, paper_id: &str) -> Option<usize> {
        self.index.get(paper_id).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MalformedRecord {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub total: usize,
    pub accepted: usize,
    pub rejected_doctype: usize,
    pub rejected_year: usize,
    pub malformed: Vec<MalformedRecord>,
}

impl IngestReport {
    pub fn malformed_count(&self) -> usize {
        self.malformed.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PaperFormat {
    Jsonl,
    Columnar,
}

impl PaperFormat {
    /// Picks the encoding from the first non-blank line.
    pub fn sniff(first_line: &str) -> Self {
        if first_line.trim_start().starts_with('{') {
            PaperFormat::Jsonl
        } else {
            PaperFormat::Columnar
        }
    }
}

#[derive(Deserialize)]
struct RawRecord {
    paper_id: String,
    journal_id: String,
    pub_year: i64,
    doc_type: String,
    subject_categories: Vec<String>,
    n_authors: i64,
    n_cited_refs: i64,
    n_pages: i64,
    annual_citations: Vec<i64>,
}

enum Parsed {
    Record(PaperRecord),
    WrongDocType,
}

fn count_field(name: &str, v: i64, min: i64) -> std::result::Result<u32, String> {
    if v < min || v > i64::from(u32::MAX) {
        return Err(format!("{name} must be an integer >= {min}, got {v}"));
    }
    Ok(v as u32)
}

fn normalize(raw: RawRecord, horizon: u32) -> std::result::Result<Parsed, String> {
    if raw.paper_id.is_empty() {
        return Err("empty paper_id".into());
    }
    if raw.journal_id.is_empty() {
        return Err("empty journal_id".into());
    }
    let n_authors = count_field("n_authors", raw.n_authors, 1)?;
    let n_cited_refs = count_field("n_cited_refs", raw.n_cited_refs, 0)?;
    let n_pages = count_field("n_pages", raw.n_pages, 1)?;
    if raw.annual_citations.len() != horizon as usize {
        return Err(format!(
            "annual_citations has {} entries, expected {horizon}",
            raw.annual_citations.len()
        ));
    }
    let annual_citations = raw
        .annual_citations
        .iter()
        .map(|&c| count_field("annual citation count", c, 0))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let mut subject_categories: Vec<String> = raw
        .subject_categories
        .into_iter()
        .filter(|c| !c.is_empty())
        .collect();
    subject_categories.sort();
    subject_categories.dedup();
    if subject_categories.is_empty() {
        return Err("subject_categories is empty".into());
    }
    let pub_year = i32::try_from(raw.pub_year).map_err(|_| "pub_year out of range".to_string())?;
    let Ok(doc_type) = raw.doc_type.parse::<DocType>() else {
        return Ok(Parsed::WrongDocType);
    };
    Ok(Parsed::Record(PaperRecord {
        paper_id: raw.paper_id,
        journal_id: raw.journal_id,
        pub_year,
        doc_type,
        subject_categories,
        n_authors,
        n_cited_refs,
        n_pages,
        annual_citations,
    }))
}

fn parse_int(name: &str, s: &str) -> std::result::Result<i64, String> {
    s.trim()
        .parse::<i64>()
        .map_err(|_| format!("{name}: `{s}` is not an integer"))
}

fn parse_columnar_line(line: &str) -> std::result::Result<RawRecord, String> {
    let cols: Vec<&str> = line.split(',').collect();
    if cols.len() != 9 {
        return Err(format!("expected 9 columns, found {}", cols.len()));
    }
    let list = |s: &str| -> Vec<String> {
        if s.is_empty() {
            Vec::new()
        } else {
            s.split(';').map(|x| x.trim().to_string()).collect()
        }
    };
    let annual_citations = if cols[8].is_empty() {
        Vec::new()
    } else {
        cols[8]
            .split(';')
            .map(|c| parse_int("annual_citations", c))
            .collect::<std::result::Result<Vec<_>, _>>()?
    };
    Ok(RawRecord {
        paper_id: cols[0].trim().to_string(),
        journal_id: cols[1].trim().to_string(),
        pub_year: parse_int("pub_year", cols[2])?,
        doc_type: cols[3].trim().to_string(),
        subject_categories: list(cols[4]),
        n_authors: parse_int("n_authors", cols[5])?,
        n_cited_refs: parse_int("n_cited_refs", cols[6])?,
        n_pages: parse_int("n_pages", cols[7])?,
        annual_citations,
    })
}

fn check_record(p: &PaperRecord, config: &CorpusConfig) -> std::result::Result<(), String> {
    if p.annual_citations.len() != config.horizon as usize {
        return Err(format!(
            "annual_citations has {} entries, expected {}",
            p.annual_citations.len(),
            config.horizon
        ));
    }
    if p.subject_categories.is_empty() {
        return Err("subject_categories is empty".into());
    }
    if p.n_authors == 0 || p.n_pages == 0 {
        return Err("n_authors and n_pages must be at least 1".into());
    }
    Ok(())
}

/// Reads paper records from `reader`, keeping the cohort described by `config`.
///
/// Malformed lines are recorded in the report; a repeated `paper_id` among
/// well-formed records aborts ingestion.
pub fn ingest_papers<R: BufRead>(
    reader: R,
    format: Option<PaperFormat>,
    config: &CorpusConfig,
) -> Result<(Corpus, IngestReport)> {
    config.validate()?;
    let mut report = IngestReport::default();
    let mut papers = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut format = format;
    let mut header_pending = true;

    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            continue;
        }
        let fmt = *format.get_or_insert_with(|| PaperFormat::sniff(line));
        if fmt == PaperFormat::Columnar && header_pending {
            header_pending = false;
            if line.trim() != COLUMNAR_HEADER {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("expected header `{COLUMNAR_HEADER}`"),
                });
            }
            continue;
        }
        report.total += 1;
        let raw = match fmt {
            PaperFormat::Jsonl => serde_json::from_str::<RawRecord>(line).map_err(|e| e.to_string()),
            PaperFormat::Columnar => parse_columnar_line(line),
        };
        let parsed = raw.and_then(|r| normalize(r, config.horizon));
        let record = match parsed {
            Err(message) => {
                report.malformed.push(MalformedRecord {
                    line: lineno,
                    message,
                });
                continue;
            }
            Ok(Parsed::WrongDocType) => {
                report.rejected_doctype += 1;
                continue;
            }
            Ok(Parsed::Record(r)) => r,
        };
        if !seen.insert(record.paper_id.clone()) {
            return Err(Error::DuplicatePaper(record.paper_id));
        }
        if record.pub_year != config.publication_year {
            report.rejected_year += 1;
            continue;
        }
        report.accepted += 1;
        papers.push(record);
    }

    let corpus = Corpus::from_records(config.clone(), papers)?;
    Ok((corpus, report))
}

pub fn ingest_path(path: &Path, config: &CorpusConfig) -> Result<(Corpus, IngestReport)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_papers(BufReader::new(file), None, config)
}

pub fn write_jsonl<W: Write>(papers: &[PaperRecord], mut w: W) -> std::io::Result<()> {
    for p in papers {
        serde_json::to_writer(&mut w, p)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_columnar<W: Write>(papers: &[PaperRecord], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{COLUMNAR_HEADER}")?;
    for p in papers {
        let cites: Vec<String> = p.annual_citations.iter().map(u32::to_string).collect();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            p.paper_id,
            p.journal_id,
            p.pub_year,
            p.doc_type,
            p.subject_categories.join(";"),
            p.n_authors,
            p.n_cited_refs,
            p.n_pages,
            cites.join(";")
        )?;
    }
    Ok(())
}

/// Parses the two-column `citing_year,cited_paper_id` event file.
/// A header line starting with `citing_year` is skipped.
pub fn read_citation_events<R: BufRead>(reader: R) -> Result<Vec<CitationEvent>> {
    let mut events = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        let line = line.trim();
        if line.is_empty() || (lineno == 1 && line.starts_with("citing_year")) {
            continue;
        }
        let (year, id) = line.split_once(',').ok_or_else(|| Error::Parse {
            line: lineno,
            message: "expected `citing_year,cited_paper_id`".into(),
        })?;
        let citing_year = year.trim().parse::<i32>().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("citing_year `{year}` is not an integer"),
        })?;
        let cited_paper_id = id.trim().to_string();
        if cited_paper_id.is_empty() {
            return Err(Error::Parse {
                line: lineno,
                message: "empty cited_paper_id".into(),
            });
        }
        events.push(CitationEvent {
            citing_year,
            cited_paper_id,
        });
    }
    Ok(events)
}

pub fn write_citation_events<W: Write>(events: &[CitationEvent], mut w: W) -> std::io::Result<()> {
    writeln!(w, "citing_year,cited_paper_id")?;
    for e in events {
        writeln!(w, "{},{}", e.citing_year, e.cited_paper_id)?;
    }
    Ok(())
}
