//! Journal impact factor from item records and citation events.
//!
//! For target year `y`, a journal's JIF is the number of citations made in
//! `y` to its citable items (articles, reviews, notes) published in `y-1`
//! and `y-2`, divided by the number of those items.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::CitationEvent;
use crate::error::{Error, Result};

pub const ITEMS_HEADER: &str = "item_id,journal_id,pub_year,doc_type";
pub const JIF_HEADER: &str = "journal_id,jif";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ItemType {
    Article,
    Review,
    Note,
    Other,
}

impl ItemType {
    pub fn is_citable(self) -> bool {
        !matches!(self, ItemType::Other)
    }

    /// Any label other than article/review/note is a non-citable item.
    pub fn from_label(s: &str) -> Self {
        match s {
            "article" => ItemType::Article,
            "review" => ItemType::Review,
            "note" => ItemType::Note,
            _ => ItemType::Other,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ItemType::Article => "article",
            ItemType::Review => "review",
            ItemType::Note => "note",
            ItemType::Other => "other",
        }
    }
}

impl fmt::Display for ItemType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JournalItem {
    pub item_id: String,
    pub journal_id: String,
    pub pub_year: i32,
    pub doc_type: ItemType,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JournalMetric {
    pub journal_id: String,
    pub jif_year: i32,
    pub jif: f64,
    /// Known when the metric was computed from item records.
    pub citable_count: Option<u64>,
}

pub type JifMap = BTreeMap<String, JournalMetric>;

#[derive(Debug, Clone, Default)]
pub struct ItemStore {
    items: Vec<JournalItem>,
    by_id: HashMap<String, usize>,
    by_journal: BTreeMap<String, Vec<usize>>,
}

impl ItemStore {
    pub fn new(items: Vec<JournalItem>) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(items.len());
        let mut by_journal: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, it) in items.iter().enumerate() {
            if by_id.insert(it.item_id.clone(), i).is_some() {
                return Err(Error::DuplicateItem(it.item_id.clone()));
            }
            by_journal.entry(it.journal_id.clone()).or_default().push(i);
        }
        Ok(Self {
            items,
            by_id,
            by_journal,
        })
    }

    pub fn items(&self) -> &[JournalItem] {
        &self.items
    }

    pub fn get(&self, item_id: &str) -> Option<&JournalItem> {
        self.by_id.get(item_id).map(|&i| &self.items[i])
    }

    pub fn journals(&self) -> impl Iterator<Item = &str> {
        self.by_journal.keys().map(String::as_str)
    }

    fn in_window(it: &JournalItem, target_year: i32) -> bool {
        it.doc_type.is_citable() && (it.pub_year == target_year - 1 || it.pub_year == target_year - 2)
    }

    fn citable_in_window(&self, journal_id: &str, target_year: i32) -> u64 {
        self.by_journal
            .get(journal_id)
            .map(|ix| {
                ix.iter()
                    .filter(|&&i| Self::in_window(&self.items[i], target_year))
                    .count() as u64
            })
            .unwrap_or(0)
    }
}

fn metric(journal_id: &str, target_year: i32, cites: u64, citable: u64) -> Result<JournalMetric> {
    if citable == 0 {
        return Err(Error::NoCitableItems(journal_id.to_string()));
    }
    Ok(JournalMetric {
        journal_id: journal_id.to_string(),
        jif_year: target_year,
        jif: cites as f64 / citable as f64,
        citable_count: Some(citable),
    })
}

/// JIF of one journal for `target_year`.
pub fn compute_jif(
    journal_id: &str,
    target_year: i32,
    items: &ItemStore,
    events: &[CitationEvent],
) -> Result<JournalMetric> {
    let citable = items.citable_in_window(journal_id, target_year);
    let cites = events
        .iter()
        .filter(|e| e.citing_year == target_year)
        .filter_map(|e| items.get(&e.cited_paper_id))
        .filter(|it| it.journal_id == journal_id && ItemStore::in_window(it, target_year))
        .count() as u64;
    metric(journal_id, target_year, cites, citable)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct JifReport {
    pub target_year: i32,
    pub journals_with_metric: usize,
    pub journals_without_metric: Vec<String>,
    /// Events whose cited id is not a known item.
    pub unknown_cited_items: usize,
}

/// JIF for every journal in the item store, in one pass over the events.
pub fn compute_all_jif(
    items: &ItemStore,
    events: &[CitationEvent],
    target_year: i32,
) -> (JifMap, JifReport) {
    let (cites, unknown) = events
        .par_iter()
        .filter(|e| e.citing_year == target_year)
        .fold(
            || (HashMap::<&str, u64>::new(), 0usize),
            |(mut acc, mut unknown), e| {
                match items.get(&e.cited_paper_id) {
                    Some(it) if ItemStore::in_window(it, target_year) => {
                        *acc.entry(it.journal_id.as_str()).or_default() += 1;
                    }
                    Some(_) => {}
                    None => unknown += 1,
                }
                (acc, unknown)
            },
        )
        .reduce(
            || (HashMap::new(), 0),
            |(mut a, ua), (b, ub)| {
                for (k, v) in b {
                    *a.entry(k).or_default() += v;
                }
                (a, ua + ub)
            },
        );

    let mut map = JifMap::new();
    let mut report = JifReport {
        target_year,
        unknown_cited_items: unknown,
        ..Default::default()
    };
    for journal in items.journals() {
        let citable = items.citable_in_window(journal, target_year);
        let n = cites.get(journal).copied().unwrap_or(0);
        match metric(journal, target_year, n, citable) {
            Ok(m) => {
                map.insert(journal.to_string(), m);
            }
            Err(_) => report.journals_without_metric.push(journal.to_string()),
        }
    }
    report.journals_with_metric = map.len();
    (map, report)
}

/// Reads a `journal_id,jif` table.
pub fn ingest_jif_table<R: BufRead>(reader: R, jif_year: i32) -> Result<JifMap> {
    let mut map = JifMap::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if lineno == 1 {
            if line != JIF_HEADER {
                return Err(Error::Parse {
                    line: 1,
                    message: format!("expected header `{JIF_HEADER}`"),
                });
            }
            continue;
        }
        let (id, value) = line.split_once(',').ok_or_else(|| Error::Parse {
            line: lineno,
            message: "expected `journal_id,jif`".into(),
        })?;
        let jif: f64 = value.trim().parse().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("jif `{value}` is not a number"),
        })?;
        if !jif.is_finite() || jif < 0.0 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("jif must be a finite value >= 0, got {value}"),
            });
        }
        let id = id.trim().to_string();
        if map.contains_key(&id) {
            return Err(Error::DuplicateJournal(id));
        }
        map.insert(
            id.clone(),
            JournalMetric {
                journal_id: id,
                jif_year,
                jif,
                citable_count: None,
            },
        );
    }
    Ok(map)
}

/// Writes a `journal_id,jif` table. Values use the shortest exact
/// representation so that reading the file back restores them bit for bit.
pub fn write_jif_table<W: Write>(map: &JifMap, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{JIF_HEADER}")?;
    for m in map.values() {
        writeln!(w, "{},{}", m.journal_id, m.jif)?;
    }
    Ok(())
}

pub fn read_journal_items<R: BufRead>(reader: R) -> Result<Vec<JournalItem>> {
    let mut items = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if lineno == 1 {
            if line != ITEMS_HEADER {
                return Err(Error::Parse {
                    line: 1,
                    message: format!("expected header `{ITEMS_HEADER}`"),
                });
            }
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 4 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected 4 columns, found {}", cols.len()),
            });
        }
        let pub_year = cols[2].parse::<i32>().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("pub_year `{}` is not an integer", cols[2]),
        })?;
        items.push(JournalItem {
            item_id: cols[0].to_string(),
            journal_id: cols[1].to_string(),
            pub_year,
            doc_type: ItemType::from_label(cols[3]),
        });
    }
    Ok(items)
}

pub fn write_journal_items<W: Write>(items: &[JournalItem], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{ITEMS_HEADER}")?;
    for it in items {
        writeln!(w, "{},{},{},{}", it.item_id, it.journal_id, it.pub_year, it.doc_type)?;
    }
    Ok(())
}
