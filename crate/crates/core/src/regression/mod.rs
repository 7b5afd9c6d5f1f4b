//! Covariate construction, OLS fitting, functional-form selection and the
//! nested model sweep over predictor years.

pub mod features;
pub mod forms;
pub mod gram;
pub mod ols;
pub mod sweep;

pub use features::{ln_count, make_features, Covariate, FeatureReport, FeatureRow, NESTED_COVARIATES};
pub use forms::{functional_form_selection, select_functional_form, CountCovariate, FormSelection, FunctionalForm};
pub use gram::{CompensatedSum, GramAccumulator};
pub use ols::{adjusted_r2, bic, fit_ols, Estimate, OlsFit};
pub use sweep::{model_sweep, ols_fit, ModelSpec, RegressionResult, RowPolicy, SweepGrid, SweepOptions, MODELS};
