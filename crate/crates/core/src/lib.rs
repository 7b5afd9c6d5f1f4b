//! Citation-window analytics: Hazen percentiles within subject-category ×
//! document-type reference sets, journal impact factors, and nested OLS
//! sweeps measuring how well early citation percentiles plus paper and
//! journal covariates explain long-term percentiles.
//!
//! Pipeline:
//!
//! 1. [`corpus::ingest_papers`] validates records and keeps the cohort.
//! 2. [`percentile::build_reference_sets`] and [`percentile::percentile_table`]
//!    rank cumulative citations per set and average across a paper's sets.
//! 3. [`journal::compute_all_jif`] (or [`journal::ingest_jif_table`]) supplies JIFs.
//! 4. [`regression::model_sweep`] fits models 1-5 for every predictor year.
//!
//! [`synth::generate`] produces seeded cohorts with known effects for testing.

pub mod corpus;
pub mod error;
pub mod journal;
pub mod percentile;
pub mod regression;
pub mod report;
pub mod synth;

pub use corpus::{cumulative_citations, CitationEvent, Corpus, CorpusConfig, DocType, IngestReport, PaperRecord};
pub use error::{Error, Result};
pub use journal::{compute_all_jif, compute_jif, ingest_jif_table, ItemStore, JifMap, JournalItem, JournalMetric};
pub use percentile::{build_reference_sets, hazen_percentile, percentile_table, rank_with_ties, PercentileTable, ReferenceSet};
pub use regression::{model_sweep, ols_fit, ModelSpec, RegressionResult, SweepGrid, SweepOptions};
pub use synth::{generate, SynthConfig, SynthOutput};
