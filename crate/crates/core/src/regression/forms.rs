//! Choosing between linear, logarithmic and quadratic covariate forms by BIC.

use std::fmt;

use serde::Serialize;

use super::features::FeatureRow;
use super::ols::fit_ols;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FunctionalForm {
    Linear,
    Log,
    Quadratic,
}

impl fmt::Display for FunctionalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FunctionalForm::Linear => "linear",
            FunctionalForm::Log => "log",
            FunctionalForm::Quadratic => "quadratic",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CountCovariate {
    Authors,
    Refs,
    Pages,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FormSelection {
    pub winner: FunctionalForm,
    pub bic_linear: f64,
    pub bic_log: f64,
    pub bic_quadratic: f64,
}

impl FormSelection {
    pub fn bic(&self, form: FunctionalForm) -> f64 {
        match form {
            FunctionalForm::Linear => self.bic_linear,
            FunctionalForm::Log => self.bic_log,
            FunctionalForm::Quadratic => self.bic_quadratic,
        }
    }
}

/// Fits `y ~ x`, `y ~ ln(max(x, 1))` and `y ~ x + x²` and returns the form
/// with the lowest BIC. Ties resolve in the order linear, log, quadratic.
pub fn select_functional_form(x: &[f64], y: &[f64]) -> Result<FormSelection> {
    let ln_x: Vec<f64> = x.iter().map(|v| v.max(1.0).ln()).collect();
    let x_sq: Vec<f64> = x.iter().map(|v| v * v).collect();
    let bic_linear = fit_ols(&["x"], &[x], y)?.bic;
    let bic_log = fit_ols(&["ln_x"], &[&ln_x], y)?.bic;
    let bic_quadratic = fit_ols(&["x", "x_sq"], &[x, &x_sq], y)?.bic;
    let mut winner = FunctionalForm::Linear;
    let mut best = bic_linear;
    for (form, b) in [
        (FunctionalForm::Log, bic_log),
        (FunctionalForm::Quadratic, bic_quadratic),
    ] {
        if b < best {
            best = b;
            winner = form;
        }
    }
    Ok(FormSelection {
        winner,
        bic_linear,
        bic_log,
        bic_quadratic,
    })
}

/// Form selection for one raw count covariate against the target percentile.
pub fn functional_form_selection(rows: &[FeatureRow], covariate: CountCovariate) -> Result<FormSelection> {
    let x: Vec<f64> = rows
        .iter()
        .map(|r| {
            f64::from(match covariate {
                CountCovariate::Authors => r.n_authors,
                CountCovariate::Refs => r.n_cited_refs,
                CountCovariate::Pages => r.n_pages,
            })
        })
        .collect();
    let y: Vec<f64> = rows.iter().map(|r| r.target_percentile).collect();
    select_functional_form(&x, &y)
}
