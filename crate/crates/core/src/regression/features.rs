use std::fmt;

use serde::Serialize;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::journal::JifMap;
use crate::percentile::PercentileTable;

/// Regressors in nesting order: model k uses the first k of these.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Covariate {
    Percentile,
    Jif,
    LnAuthors,
    LnRefs,
    LnPages,
}

pub const NESTED_COVARIATES: [Covariate; 5] = [
    Covariate::Percentile,
    Covariate::Jif,
    Covariate::LnAuthors,
    Covariate::LnRefs,
    Covariate::LnPages,
];

impl Covariate {
    pub fn as_str(self) -> &'static str {
        match self {
            Covariate::Percentile => "percentile",
            Covariate::Jif => "jif",
            Covariate::LnAuthors => "ln_authors",
            Covariate::LnRefs => "ln_refs",
            Covariate::LnPages => "ln_pages",
        }
    }
}

impl fmt::Display for Covariate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One paper's regression inputs for a given predictor year.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureRow {
    pub paper_id: String,
    pub predictor_percentile: f64,
    pub jif: Option<f64>,
    pub ln_authors: f64,
    pub ln_refs: f64,
    pub ln_pages: f64,
    pub target_percentile: f64,
    pub n_authors: u32,
    pub n_cited_refs: u32,
    pub n_pages: u32,
}

impl FeatureRow {
    pub fn value(&self, c: Covariate) -> Option<f64> {
        match c {
            Covariate::Percentile => Some(self.predictor_percentile),
            Covariate::Jif => self.jif,
            Covariate::LnAuthors => Some(self.ln_authors),
            Covariate::LnRefs => Some(self.ln_refs),
            Covariate::LnPages => Some(self.ln_pages),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FeatureReport {
    pub rows: usize,
    pub missing_jif: usize,
    /// Papers with zero cited references, entered as ln(1) = 0.
    pub zero_refs: usize,
}

/// `ln(max(count, 1))`.
pub fn ln_count(count: u32) -> f64 {
    f64::from(count.max(1)).ln()
}

/// Covariate columns shared by every predictor year, in percentile-table
/// row order.
#[derive(Debug, Clone)]
pub(crate) struct CovariateFrame {
    pub jif: Vec<Option<f64>>,
    pub ln_authors: Vec<f64>,
    pub ln_refs: Vec<f64>,
    pub ln_pages: Vec<f64>,
    pub target: Vec<f64>,
    pub report: FeatureReport,
}

impl CovariateFrame {
    pub fn build(
        corpus: &Corpus,
        table: &PercentileTable,
        jif_map: &JifMap,
        target_year: u32,
    ) -> Result<Self> {
        let target = table.column(target_year).ok_or_else(|| Error::MissingPercentile {
            paper_id: table.paper_ids().first().cloned().unwrap_or_default(),
            year: target_year,
        })?;
        let n = table.len();
        let mut frame = CovariateFrame {
            jif: Vec::with_capacity(n),
            ln_authors: Vec::with_capacity(n),
            ln_refs: Vec::with_capacity(n),
            ln_pages: Vec::with_capacity(n),
            target,
            report: FeatureReport {
                rows: n,
                ..Default::default()
            },
        };
        for &i in table.corpus_rows() {
            let p = &corpus.papers()[i];
            let jif = jif_map.get(&p.journal_id).map(|m| m.jif);
            if jif.is_none() {
                frame.report.missing_jif += 1;
            }
            if p.n_cited_refs == 0 {
                frame.report.zero_refs += 1;
            }
            frame.jif.push(jif);
            frame.ln_authors.push(ln_count(p.n_authors));
            frame.ln_refs.push(ln_count(p.n_cited_refs));
            frame.ln_pages.push(ln_count(p.n_pages));
        }
        Ok(frame)
    }
}

/// Feature rows for every paper in the percentile table.
///
/// Rows whose journal has no JIF carry `jif: None`; they are dropped per
/// model, not here.
pub fn make_features(
    corpus: &Corpus,
    table: &PercentileTable,
    jif_map: &JifMap,
    predictor_year: u32,
    target_year: u32,
) -> Result<(Vec<FeatureRow>, FeatureReport)> {
    for year in [predictor_year, target_year] {
        if table.column(year).is_none() {
            return Err(Error::MissingPercentile {
                paper_id: table.paper_ids().first().cloned().unwrap_or_default(),
                year,
            });
        }
    }
    let frame = CovariateFrame::build(corpus, table, jif_map, target_year)?;
    let predictor = table.column(predictor_year).expect("checked above");
    let rows = table
        .corpus_rows()
        .iter()
        .enumerate()
        .map(|(r, &i)| {
            let p = &corpus.papers()[i];
            FeatureRow {
                paper_id: p.paper_id.clone(),
                predictor_percentile: predictor[r],
                jif: frame.jif[r],
                ln_authors: frame.ln_authors[r],
                ln_refs: frame.ln_refs[r],
                ln_pages: frame.ln_pages[r],
                target_percentile: frame.target[r],
                n_authors: p.n_authors,
                n_cited_refs: p.n_cited_refs,
                n_pages: p.n_pages,
            }
        })
        .collect();
    Ok((rows, frame.report))
}
