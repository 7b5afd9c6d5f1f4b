use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::features::{Covariate, CovariateFrame, FeatureReport, FeatureRow, NESTED_COVARIATES};
use super::ols::{fit_ols, Estimate, OlsFit};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::journal::JifMap;
use crate::percentile::PercentileTable;

pub const MODELS: u8 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ModelSpec {
    pub predictor_year: u32,
    /// 1..=5; model k regresses on the first k nested covariates.
    pub model: u8,
}

impl ModelSpec {
    pub fn new(predictor_year: u32, model: u8) -> Result<Self> {
        if !(1..=MODELS).contains(&model) {
            return Err(Error::Domain(format!("model must be in 1..=5, got {model}")));
        }
        if predictor_year == 0 {
            return Err(Error::Domain("predictor year must be at least 1".into()));
        }
        Ok(Self {
            predictor_year,
            model,
        })
    }

    pub fn covariates(&self) -> &'static [Covariate] {
        &NESTED_COVARIATES[..self.model as usize]
    }

    pub fn needs_jif(&self) -> bool {
        self.model >= 2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionResult {
    pub spec: ModelSpec,
    pub n: usize,
    pub intercept: Estimate,
    pub coefficients: Vec<(Covariate, Estimate)>,
    pub r2: f64,
    pub adj_r2: f64,
    pub bic: f64,
    pub dropped_missing_jif: usize,
    pub condition: f64,
    pub max_abs_score: f64,
}

impl RegressionResult {
    fn from_fit(spec: ModelSpec, fit: OlsFit, dropped_missing_jif: usize) -> Self {
        Self {
            spec,
            n: fit.n,
            intercept: fit.intercept,
            coefficients: spec
                .covariates()
                .iter()
                .copied()
                .zip(fit.coefficients)
                .collect(),
            r2: fit.r2,
            adj_r2: fit.adj_r2,
            bic: fit.bic,
            dropped_missing_jif,
            condition: fit.condition,
            max_abs_score: fit.max_abs_score,
        }
    }

    pub fn coefficient(&self, c: Covariate) -> Option<&Estimate> {
        self.coefficients.iter().find(|(k, _)| *k == c).map(|(_, e)| e)
    }
}

/// Fits one nested model on feature rows, dropping rows that lack a
/// required covariate.
pub fn ols_fit(rows: &[FeatureRow], spec: &ModelSpec) -> Result<RegressionResult> {
    let covs = spec.covariates();
    let used: Vec<&FeatureRow> = rows
        .iter()
        .filter(|r| covs.iter().all(|&c| r.value(c).is_some()))
        .collect();
    let dropped = rows.len() - used.len();
    let columns: Vec<Vec<f64>> = covs
        .iter()
        .map(|&c| used.iter().map(|r| r.value(c).expect("filtered")).collect())
        .collect();
    let y: Vec<f64> = used.iter().map(|r| r.target_percentile).collect();
    let names: Vec<&str> = covs.iter().map(|c| c.as_str()).collect();
    let refs: Vec<&[f64]> = columns.iter().map(Vec::as_slice).collect();
    let fit = fit_ols(&names, &refs, &y)?;
    Ok(RegressionResult::from_fit(*spec, fit, dropped))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowPolicy {
    /// Model 1 uses every row; models 2-5 use the rows with a JIF.
    #[default]
    FullSampleM1,
    /// All five models use the rows with a JIF.
    CommonRows,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepOptions {
    pub years: Vec<u32>,
    pub target_year: u32,
    pub row_policy: RowPolicy,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            years: (1..=30).collect(),
            target_year: 31,
            row_policy: RowPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepGrid {
    pub target_year: u32,
    pub row_policy: RowPolicy,
    pub features: FeatureReport,
    /// Ordered by (predictor year, model).
    pub results: Vec<RegressionResult>,
}

impl SweepGrid {
    pub fn get(&self, year: u32, model: u8) -> Option<&RegressionResult> {
        self.results
            .iter()
            .find(|r| r.spec.predictor_year == year && r.spec.model == model)
    }

    pub fn years(&self) -> Vec<u32> {
        let mut ys: Vec<u32> = self.results.iter().map(|r| r.spec.predictor_year).collect();
        ys.dedup();
        ys
    }

    /// `adj_r2(M5) - adj_r2(M1)` for one predictor year.
    pub fn covariate_lift(&self, year: u32) -> Option<f64> {
        Some(self.get(year, MODELS)?.adj_r2 - self.get(year, 1)?.adj_r2)
    }

    /// `year,model,n,covariate,estimate,se,p,star`, intercept first.
    pub fn write_coefficients_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "year,model,n,covariate,estimate,se,p,star")?;
        for r in &self.results {
            let rows = std::iter::once(("intercept", &r.intercept))
                .chain(r.coefficients.iter().map(|(c, e)| (c.as_str(), e)));
            for (name, e) in rows {
                writeln!(
                    w,
                    "{},{},{},{},{:.6},{:.6},{:.6e},{}",
                    r.spec.predictor_year,
                    r.spec.model,
                    r.n,
                    name,
                    e.estimate,
                    e.se,
                    e.p,
                    if e.is_significant() { "*" } else { "" }
                )?;
            }
        }
        Ok(())
    }

    /// `year,model,r2,adj_r2,bic,dropped_missing_jif`.
    pub fn write_models_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "year,model,r2,adj_r2,bic,dropped_missing_jif")?;
        for r in &self.results {
            writeln!(
                w,
                "{},{},{:.6},{:.6},{:.4},{}",
                r.spec.predictor_year, r.spec.model, r.r2, r.adj_r2, r.bic, r.dropped_missing_jif
            )?;
        }
        Ok(())
    }

    /// `year,model,adj_r2`.
    pub fn write_curve_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "year,model,adj_r2")?;
        for r in &self.results {
            writeln!(w, "{},{},{:.6}", r.spec.predictor_year, r.spec.model, r.adj_r2)?;
        }
        Ok(())
    }
}

fn fit_year(frame: &CovariateFrame, predictor: &[f64], year: u32, policy: RowPolicy) -> Result<Vec<RegressionResult>> {
    let jif_rows: Vec<usize> = (0..predictor.len()).filter(|&r| frame.jif[r].is_some()).collect();
    let missing = predictor.len() - jif_rows.len();
    let pick = |col: &[f64]| -> Vec<f64> { jif_rows.iter().map(|&r| col[r]).collect() };
    let jif: Vec<f64> = jif_rows.iter().map(|&r| frame.jif[r].expect("filtered")).collect();
    let common = [
        pick(predictor),
        jif,
        pick(&frame.ln_authors),
        pick(&frame.ln_refs),
        pick(&frame.ln_pages),
    ];
    let common_y = pick(&frame.target);

    (1..=MODELS)
        .map(|model| {
            let spec = ModelSpec::new(year, model)?;
            let names: Vec<&str> = spec.covariates().iter().map(|c| c.as_str()).collect();
            let full_sample = model == 1 && policy == RowPolicy::FullSampleM1;
            let fit = if full_sample {
                fit_ols(&names, &[predictor], &frame.target)
            } else {
                let cols: Vec<&[f64]> = common[..model as usize].iter().map(Vec::as_slice).collect();
                fit_ols(&names, &cols, &common_y)
            };
            let fit = fit.map_err(|e| Error::Sweep {
                year,
                model,
                source: Box::new(e),
            })?;
            let dropped = if full_sample { 0 } else { missing };
            Ok(RegressionResult::from_fit(spec, fit, dropped))
        })
        .collect()
}

/// Five nested fits per requested predictor year, with the percentile at
/// `opts.target_year` as the response.
pub fn model_sweep(
    corpus: &Corpus,
    table: &PercentileTable,
    jif_map: &JifMap,
    opts: &SweepOptions,
) -> Result<SweepGrid> {
    let mut years = opts.years.clone();
    years.sort_unstable();
    years.dedup();
    let frame = CovariateFrame::build(corpus, table, jif_map, opts.target_year)?;
    let predictors: Vec<Vec<f64>> = years
        .iter()
        .map(|&y| {
            table.column(y).ok_or_else(|| Error::MissingPercentile {
                paper_id: table.paper_ids().first().cloned().unwrap_or_default(),
                year: y,
            })
        })
        .collect::<Result<_>>()?;

    let per_year: Vec<Vec<RegressionResult>> = years
        .par_iter()
        .zip(predictors.par_iter())
        .map(|(&y, pred)| fit_year(&frame, pred, y, opts.row_policy))
        .collect::<Result<_>>()?;

    Ok(SweepGrid {
        target_year: opts.target_year,
        row_policy: opts.row_policy,
        features: frame.report,
        results: per_year.into_iter().flatten().collect(),
    })
}
