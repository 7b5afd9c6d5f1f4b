//! Reference sets, average-rank tie handling and Hazen percentiles.
//!
//! A paper's percentile in a reference set of `n` papers is
//! `100 * (i - 0.5) / n`, where `i` is its ascending citation rank and tied
//! papers share the mean of the ranks they span. The rank sum is therefore
//! always `n(n+1)/2` and the mean percentile of every set is 50.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{Corpus, DocType};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct RefSetKey {
    pub category: String,
    pub doc_type: DocType,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSet {
    pub key: RefSetKey,
    pub member_ids: Vec<String>,
    /// Positions of the members in the owning corpus.
    pub members: Vec<usize>,
}

impl ReferenceSet {
    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn is_eligible(&self, min_size: usize) -> bool {
        self.size() >= min_size
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ExclusionReport {
    pub min_refset_size: usize,
    pub total_sets: usize,
    pub eligible_sets: usize,
    pub dropped_sets: usize,
    /// Paper/set memberships discarded because the set was too small.
    pub discarded_memberships: usize,
    pub excluded_papers: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ReferenceSets {
    pub sets: Vec<ReferenceSet>,
    pub min_size: usize,
    pub report: ExclusionReport,
}

impl ReferenceSets {
    pub fn eligible(&self) -> impl Iterator<Item = &ReferenceSet> {
        self.sets.iter().filter(move |s| s.is_eligible(self.min_size))
    }

    pub fn get(&self, key: &RefSetKey) -> Option<&ReferenceSet> {
        self.sets.iter().find(|s| &s.key == key)
    }
}

/// Groups the corpus by (subject category, document type).
///
/// Sets are returned in key order. Eligibility uses the corpus'
/// `min_refset_size` and does not depend on citation counts.
pub fn build_reference_sets(corpus: &Corpus) -> ReferenceSets {
    let min_size = corpus.config().min_refset_size;
    let mut groups: BTreeMap<RefSetKey, Vec<usize>> = BTreeMap::new();
    for (i, p) in corpus.papers().iter().enumerate() {
        for cat in &p.subject_categories {
            groups
                .entry(RefSetKey {
                    category: cat.clone(),
                    doc_type: p.doc_type,
                })
                .or_default()
                .push(i);
        }
    }

    let mut eligible_count = vec![0usize; corpus.len()];
    let mut report = ExclusionReport {
        min_refset_size: min_size,
        total_sets: groups.len(),
        ..Default::default()
    };
    let sets: Vec<ReferenceSet> = groups
        .into_iter()
        .map(|(key, members)| {
            if members.len() >= min_size {
                report.eligible_sets += 1;
                for &m in &members {
                    eligible_count[m] += 1;
                }
            } else {
                report.dropped_sets += 1;
                report.discarded_memberships += members.len();
            }
            let member_ids = members
                .iter()
                .map(|&m| corpus.papers()[m].paper_id.clone())
                .collect();
            ReferenceSet {
                key,
                member_ids,
                members,
            }
        })
        .collect();

    report.excluded_papers = corpus
        .papers()
        .iter()
        .zip(&eligible_count)
        .filter(|(_, &c)| c == 0)
        .map(|(p, _)| p.paper_id.clone())
        .collect();
    report.excluded_papers.sort();

    ReferenceSets {
        sets,
        min_size,
        report,
    }
}

/// Ascending ranks starting at 1; ties get the mean of the ranks they span.
///
/// Every returned rank is an integer or half-integer, so the rank sum is
/// exactly `n(n+1)/2` in `f64` for any realistic `n`.
pub fn rank_with_ties(values: &[u64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::Domain("cannot rank an empty list".into()));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_unstable_by_key(|&i| (values[i], i));

    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let v = values[order[start]];
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == v {
            end += 1;
        }
        // positions start+1 ..= end
        let avg = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    Ok(ranks)
}

/// `100 * (rank - 0.5) / n`.
pub fn hazen_percentile(rank: f64, set_size: usize) -> Result<f64> {
    if set_size == 0 {
        return Err(Error::Domain("set size must be at least 1".into()));
    }
    if !(rank >= 1.0 && rank <= set_size as f64) {
        return Err(Error::Domain(format!(
            "rank {rank} outside 1..={set_size}"
        )));
    }
    Ok(hazen_unchecked(rank, set_size))
}

#[inline]
fn hazen_unchecked(rank: f64, n: usize) -> f64 {
    100.0 * (rank - 0.5) / n as f64
}

/// Hazen percentiles of `values` within their own set.
pub fn percentiles_of(values: &[u64]) -> Result<Vec<f64>> {
    let n = values.len();
    Ok(rank_with_ties(values)?
        .into_iter()
        .map(|r| hazen_unchecked(r, n))
        .collect())
}

/// Cumulative citation counts of `members` at each year of `years`,
/// one vector per year aligned with `members`.
fn cumulative_columns(corpus: &Corpus, members: &[usize], years: &[u32]) -> Vec<Vec<u64>> {
    let mut out: Vec<Vec<u64>> = years.iter().map(|_| Vec::with_capacity(members.len())).collect();
    for &m in members {
        let annual = &corpus.papers()[m].annual_citations;
        let mut acc = 0u64;
        let mut t = 0usize;
        for (k, &year) in years.iter().enumerate() {
            while t < year as usize {
                acc += u64::from(annual[t]);
                t += 1;
            }
            out[k].push(acc);
        }
    }
    out
}

fn check_years(years: &[u32], horizon: u32) -> Result<Vec<u32>> {
    let mut ys = years.to_vec();
    ys.sort_unstable();
    ys.dedup();
    if let Some(&bad) = ys.iter().find(|&&y| y == 0 || y > horizon) {
        return Err(Error::WindowYear { year: bad, horizon });
    }
    Ok(ys)
}

/// Percentiles of every member of an eligible set at window year `t`.
pub fn set_percentiles(
    refset: &ReferenceSet,
    window_year: u32,
    corpus: &Corpus,
) -> Result<BTreeMap<String, f64>> {
    if !refset.is_eligible(corpus.config().min_refset_size) || refset.size() == 0 {
        return Err(Error::Domain(format!(
            "reference set ({}, {}) has {} papers, below the minimum of {}",
            refset.key.category,
            refset.key.doc_type,
            refset.size(),
            corpus.config().min_refset_size
        )));
    }
    let years = check_years(&[window_year], corpus.config().horizon)?;
    let cols = cumulative_columns(corpus, &refset.members, &years);
    let pcts = percentiles_of(&cols[0])?;
    Ok(refset
        .member_ids
        .iter()
        .cloned()
        .zip(pcts)
        .collect())
}

/// Averaged percentiles per included paper and window year.
///
/// Rows are ordered by `paper_id`, so the table does not depend on the order
/// of the corpus records.
#[derive(Debug, Clone, PartialEq)]
pub struct PercentileTable {
    years: Vec<u32>,
    paper_ids: Vec<String>,
    corpus_rows: Vec<usize>,
    values: Vec<f64>,
    row_of: HashMap<String, usize>,
    excluded: Vec<String>,
}

impl PercentileTable {
    pub fn years(&self) -> &[u32] {
        &self.years
    }

    pub fn paper_ids(&self) -> &[String] {
        &self.paper_ids
    }

    /// Corpus position of each table row.
    pub fn corpus_rows(&self) -> &[usize] {
        &self.corpus_rows
    }

    pub fn len(&self) -> usize {
        self.paper_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paper_ids.is_empty()
    }

    pub fn excluded(&self) -> &[String] {
        &self.excluded
    }

    pub fn is_included(&self, paper_id: &str) -> bool {
        self.row_of.contains_key(paper_id)
    }

    fn year_col(&self, year: u32) -> Option<usize> {
        self.years.binary_search(&year).ok()
    }

    /// Mean of the paper's within-set percentiles over its eligible sets.
    pub fn paper_percentile(&self, paper_id: &str, year: u32) -> Result<f64> {
        let row = *self
            .row_of
            .get(paper_id)
            .ok_or_else(|| Error::PaperExcluded(paper_id.to_string()))?;
        let col = self.year_col(year).ok_or_else(|| Error::MissingPercentile {
            paper_id: paper_id.to_string(),
            year,
        })?;
        Ok(self.values[row * self.years.len() + col])
    }

    /// Column for one year in row order.
    pub fn column(&self, year: u32) -> Option<Vec<f64>> {
        let col = self.year_col(year)?;
        let w = self.years.len();
        Some((0..self.len()).map(|r| self.values[r * w + col]).collect())
    }

    pub fn row_of(&self, paper_id: &str) -> Option<usize> {
        self.row_of.get(paper_id).copied()
    }

    /// `paper_id,year,percentile` with six decimals.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "paper_id,year,percentile")?;
        let width = self.years.len();
        for (r, id) in self.paper_ids.iter().enumerate() {
            for (c, year) in self.years.iter().enumerate() {
                writeln!(w, "{id},{year},{:.6}", self.values[r * width + c])?;
            }
        }
        Ok(())
    }
}

/// Computes the percentile table for the requested window years.
///
/// Each eligible set is ranked independently (in parallel); the per-paper
/// sums are then merged in set-key order so the result is schedule
/// independent.
pub fn percentile_table(
    corpus: &Corpus,
    refsets: &ReferenceSets,
    years: &[u32],
) -> Result<PercentileTable> {
    let years = check_years(years, corpus.config().horizon)?;
    let width = years.len();
    let eligible: Vec<&ReferenceSet> = refsets.eligible().collect();

    let per_set: Vec<Vec<Vec<f64>>> = eligible
        .par_iter()
        .map(|set| {
            cumulative_columns(corpus, &set.members, &years)
                .iter()
                .map(|col| percentiles_of(col))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let n = corpus.len();
    let mut sums = vec![0.0f64; n * width];
    let mut counts = vec![0u32; n];
    for (set, cols) in eligible.iter().zip(&per_set) {
        for (j, &m) in set.members.iter().enumerate() {
            counts[m] += 1;
            for (k, col) in cols.iter().enumerate() {
                sums[m * width + k] += col[j];
            }
        }
    }

    let mut included: Vec<usize> = (0..n).filter(|&i| counts[i] > 0).collect();
    included.sort_by(|&a, &b| corpus.papers()[a].paper_id.cmp(&corpus.papers()[b].paper_id));

    let mut values = Vec::with_capacity(included.len() * width);
    for &i in &included {
        let c = f64::from(counts[i]);
        values.extend(sums[i * width..(i + 1) * width].iter().map(|s| s / c));
    }
    let paper_ids: Vec<String> = included
        .iter()
        .map(|&i| corpus.papers()[i].paper_id.clone())
        .collect();
    let row_of = paper_ids
        .iter()
        .enumerate()
        .map(|(r, id)| (id.clone(), r))
        .collect();

    Ok(PercentileTable {
        years,
        paper_ids,
        corpus_rows: included,
        values,
        row_of,
        excluded: refsets.report.excluded_papers.clone(),
    })
}
