//! Python bindings: the `citewindow` extension module.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyKeyError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use citewindow_core::corpus::{self, CorpusConfig};
use citewindow_core::journal::{self, ItemStore, JifMap, JournalMetric};
use citewindow_core::percentile::{self, build_reference_sets};
use citewindow_core::regression::{self, RowPolicy, SweepOptions};
use citewindow_core::synth::{self, EffectSizes, SynthConfig};
use citewindow_core::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        Error::PaperExcluded(_) | Error::MissingPercentile { .. } => PyKeyError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn open(path: &PathBuf) -> PyResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| PyIOError::new_err(format!("{}: {e}", path.display())))
}

fn jif_map_from(py_map: BTreeMap<String, f64>, year: i32) -> JifMap {
    py_map
        .into_iter()
        .map(|(id, jif)| {
            let m = JournalMetric {
                journal_id: id.clone(),
                jif_year: year,
                jif,
                citable_count: None,
            };
            (id, m)
        })
        .collect()
}

fn jif_values(map: &JifMap) -> BTreeMap<String, f64> {
    map.iter().map(|(k, m)| (k.clone(), m.jif)).collect()
}

/// A validated paper cohort.
#[pyclass(frozen, module = "citewindow")]
struct Corpus {
    inner: citewindow_core::Corpus,
}

#[pymethods]
impl Corpus {
    /// Reads a paper file; returns `(corpus, ingest_report)`.
    #[staticmethod]
    #[pyo3(signature = (path, horizon = 31, min_refset_size = 100, publication_year = 1980))]
    fn from_path<'py>(
        py: Python<'py>,
        path: PathBuf,
        horizon: u32,
        min_refset_size: usize,
        publication_year: i32,
    ) -> PyResult<(Corpus, Bound<'py, PyDict>)> {
        let cfg = CorpusConfig {
            horizon,
            min_refset_size,
            publication_year,
        };
        let (inner, report) = corpus::ingest_path(&path, &cfg).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("total", report.total)?;
        d.set_item("accepted", report.accepted)?;
        d.set_item("rejected_doctype", report.rejected_doctype)?;
        d.set_item("rejected_year", report.rejected_year)?;
        let malformed: Vec<(usize, String)> = report.malformed.into_iter().map(|m| (m.line, m.message)).collect();
        d.set_item("malformed", malformed)?;
        Ok((Corpus { inner }, d))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn paper_ids(&self) -> Vec<String> {
        self.inner.papers().iter().map(|p| p.paper_id.clone()).collect()
    }

    fn annual_citations(&self, paper_id: &str) -> PyResult<Vec<u32>> {
        self.inner
            .get(paper_id)
            .map(|p| p.annual_citations.clone())
            .ok_or_else(|| PyKeyError::new_err(paper_id.to_string()))
    }

    fn cumulative_citations(&self, paper_id: &str, window_year: u32) -> PyResult<u64> {
        let p = self
            .inner
            .get(paper_id)
            .ok_or_else(|| PyKeyError::new_err(paper_id.to_string()))?;
        corpus::cumulative_citations(p, window_year).map_err(to_py)
    }

    /// Percentile table over the eligible reference sets.
    fn percentile_table(&self, years: Vec<u32>) -> PyResult<PercentileTable> {
        let sets = build_reference_sets(&self.inner);
        let inner = percentile::percentile_table(&self.inner, &sets, &years).map_err(to_py)?;
        Ok(PercentileTable { inner })
    }

    /// Exclusion report of the reference-set construction.
    fn reference_sets<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let sets = build_reference_sets(&self.inner);
        let d = PyDict::new(py);
        let sizes: Vec<(String, String, usize)> = sets
            .sets
            .iter()
            .map(|s| (s.key.category.clone(), s.key.doc_type.to_string(), s.size()))
            .collect();
        d.set_item("sets", sizes)?;
        d.set_item("eligible_sets", sets.report.eligible_sets)?;
        d.set_item("dropped_sets", sets.report.dropped_sets)?;
        d.set_item("excluded_papers", sets.report.excluded_papers)?;
        Ok(d)
    }

    fn write_jsonl(&self, path: PathBuf) -> PyResult<()> {
        let f = File::create(&path).map_err(|e| PyIOError::new_err(e.to_string()))?;
        corpus::write_jsonl(self.inner.papers(), std::io::BufWriter::new(f)).map_err(|e| PyIOError::new_err(e.to_string()))
    }
}

#[pyclass(frozen, module = "citewindow")]
struct PercentileTable {
    inner: percentile::PercentileTable,
}

#[pymethods]
impl PercentileTable {
    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn years(&self) -> Vec<u32> {
        self.inner.years().to_vec()
    }

    fn paper_ids(&self) -> Vec<String> {
        self.inner.paper_ids().to_vec()
    }

    fn excluded(&self) -> Vec<String> {
        self.inner.excluded().to_vec()
    }

    /// Averaged percentile of one paper at one window year.
    fn get(&self, paper_id: &str, year: u32) -> PyResult<f64> {
        self.inner.paper_percentile(paper_id, year).map_err(to_py)
    }

    fn column(&self, year: u32) -> PyResult<Vec<f64>> {
        self.inner
            .column(year)
            .ok_or_else(|| PyKeyError::new_err(format!("year {year} not in table")))
    }

    fn write_csv(&self, path: PathBuf) -> PyResult<()> {
        let f = File::create(&path).map_err(|e| PyIOError::new_err(e.to_string()))?;
        self.inner
            .write_csv(std::io::BufWriter::new(f))
            .map_err(|e| PyIOError::new_err(e.to_string()))
    }
}

#[pyfunction]
fn rank_with_ties(values: Vec<u64>) -> PyResult<Vec<f64>> {
    percentile::rank_with_ties(&values).map_err(to_py)
}

#[pyfunction]
fn hazen_percentile(rank: f64, set_size: usize) -> PyResult<f64> {
    percentile::hazen_percentile(rank, set_size).map_err(to_py)
}

#[pyfunction]
fn percentiles(values: Vec<u64>) -> PyResult<Vec<f64>> {
    percentile::percentiles_of(&values).map_err(to_py)
}

#[pyfunction]
fn adjusted_r2(r2: f64, n: usize, p: usize) -> PyResult<f64> {
    regression::adjusted_r2(r2, n, p).map_err(to_py)
}

fn estimate_dict<'py>(py: Python<'py>, e: &regression::Estimate) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("estimate", e.estimate)?;
    d.set_item("se", e.se)?;
    d.set_item("t", e.t)?;
    d.set_item("p", e.p)?;
    Ok(d)
}

/// OLS of `y` on an intercept plus `columns`.
#[pyfunction]
#[pyo3(signature = (columns, y, names = None))]
fn fit_ols<'py>(
    py: Python<'py>,
    columns: Vec<Vec<f64>>,
    y: Vec<f64>,
    names: Option<Vec<String>>,
) -> PyResult<Bound<'py, PyDict>> {
    let names = names.unwrap_or_else(|| (1..=columns.len()).map(|k| format!("x{k}")).collect());
    if names.len() != columns.len() {
        return Err(PyValueError::new_err("one name per column"));
    }
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let col_refs: Vec<&[f64]> = columns.iter().map(Vec::as_slice).collect();
    let fit = regression::fit_ols(&name_refs, &col_refs, &y).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("n", fit.n)?;
    d.set_item("intercept", estimate_dict(py, &fit.intercept)?)?;
    let coefs = PyDict::new(py);
    for (name, e) in fit.names.iter().zip(&fit.coefficients) {
        coefs.set_item(name, estimate_dict(py, e)?)?;
    }
    d.set_item("coefficients", coefs)?;
    d.set_item("r2", fit.r2)?;
    d.set_item("adj_r2", fit.adj_r2)?;
    d.set_item("bic", fit.bic)?;
    d.set_item("rss", fit.rss)?;
    d.set_item("condition", fit.condition)?;
    Ok(d)
}

/// Returns `(winner, {"linear": bic, "log": bic, "quadratic": bic})`.
#[pyfunction]
fn select_functional_form(x: Vec<f64>, y: Vec<f64>) -> PyResult<(String, BTreeMap<String, f64>)> {
    let s = regression::select_functional_form(&x, &y).map_err(to_py)?;
    let bics = BTreeMap::from([
        ("linear".to_string(), s.bic_linear),
        ("log".to_string(), s.bic_log),
        ("quadratic".to_string(), s.bic_quadratic),
    ]);
    Ok((s.winner.to_string(), bics))
}

/// JIF per journal from the item and event files.
#[pyfunction]
fn compute_jif(journal_items: PathBuf, citation_events: PathBuf, target_year: i32) -> PyResult<BTreeMap<String, f64>> {
    let items = journal::read_journal_items(open(&journal_items)?).map_err(to_py)?;
    let events = corpus::read_citation_events(open(&citation_events)?).map_err(to_py)?;
    let store = ItemStore::new(items).map_err(to_py)?;
    let (map, _) = journal::compute_all_jif(&store, &events, target_year);
    Ok(jif_values(&map))
}

#[pyfunction]
#[pyo3(signature = (path, jif_year = 1983))]
fn read_jif_table(path: PathBuf, jif_year: i32) -> PyResult<BTreeMap<String, f64>> {
    let map = journal::ingest_jif_table(open(&path)?, jif_year).map_err(to_py)?;
    Ok(jif_values(&map))
}

/// Synthetic cohort; returns `(corpus, jif_by_journal)`.
#[pyfunction]
#[pyo3(signature = (seed = 1, n_papers = 10_000, n_journals = 200, n_categories = 20, zero_year1_fraction = 0.669, noise_sd = 0.8, null_effects = false))]
fn generate_synthetic(
    seed: u64,
    n_papers: usize,
    n_journals: usize,
    n_categories: usize,
    zero_year1_fraction: f64,
    noise_sd: f64,
    null_effects: bool,
) -> PyResult<(Corpus, BTreeMap<String, f64>)> {
    let cfg = SynthConfig {
        seed,
        n_papers,
        n_journals,
        n_categories,
        zero_year1_fraction,
        noise_sd,
        effect_sizes: if null_effects {
            EffectSizes::ZERO
        } else {
            EffectSizes::default()
        },
        ..SynthConfig::default()
    };
    let out = synth::generate(&cfg).map_err(to_py)?;
    let store = ItemStore::new(out.items).map_err(to_py)?;
    let (map, _) = journal::compute_all_jif(&store, &out.events, cfg.jif_year());
    Ok((Corpus { inner: out.corpus }, jif_values(&map)))
}

/// Nested models 1-5 per predictor year; one dict per fit.
#[pyfunction]
#[pyo3(signature = (corpus, table, jif, years, target_year = 31, common_rows = false))]
fn model_sweep<'py>(
    py: Python<'py>,
    corpus: &Corpus,
    table: &PercentileTable,
    jif: BTreeMap<String, f64>,
    years: Vec<u32>,
    target_year: u32,
    common_rows: bool,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let opts = SweepOptions {
        years,
        target_year,
        row_policy: if common_rows {
            RowPolicy::CommonRows
        } else {
            RowPolicy::FullSampleM1
        },
    };
    let jif_map = jif_map_from(jif, corpus.inner.config().publication_year + 3);
    let grid = py
        .detach(|| regression::model_sweep(&corpus.inner, &table.inner, &jif_map, &opts))
        .map_err(to_py)?;
    grid.results
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("year", r.spec.predictor_year)?;
            d.set_item("model", r.spec.model)?;
            d.set_item("n", r.n)?;
            d.set_item("r2", r.r2)?;
            d.set_item("adj_r2", r.adj_r2)?;
            d.set_item("bic", r.bic)?;
            d.set_item("dropped_missing_jif", r.dropped_missing_jif)?;
            d.set_item("intercept", estimate_dict(py, &r.intercept)?)?;
            let coefs = PyDict::new(py);
            for (c, e) in &r.coefficients {
                coefs.set_item(c.as_str(), estimate_dict(py, e)?)?;
            }
            d.set_item("coefficients", coefs)?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
fn citewindow(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Corpus>()?;
    m.add_class::<PercentileTable>()?;
    m.add_function(wrap_pyfunction!(rank_with_ties, m)?)?;
    m.add_function(wrap_pyfunction!(hazen_percentile, m)?)?;
    m.add_function(wrap_pyfunction!(percentiles, m)?)?;
    m.add_function(wrap_pyfunction!(adjusted_r2, m)?)?;
    m.add_function(wrap_pyfunction!(fit_ols, m)?)?;
    m.add_function(wrap_pyfunction!(select_functional_form, m)?)?;
    m.add_function(wrap_pyfunction!(compute_jif, m)?)?;
    m.add_function(wrap_pyfunction!(read_jif_table, m)?)?;
    m.add_function(wrap_pyfunction!(generate_synthetic, m)?)?;
    m.add_function(wrap_pyfunction!(model_sweep, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
