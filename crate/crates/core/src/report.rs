//! Descriptive statistics, curve charts and run manifests.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::journal::JifMap;
use crate::percentile::PercentileTable;
use crate::regression::gram::CompensatedSum;
use crate::regression::{ln_count, SweepGrid, MODELS};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariableSummary {
    pub variable: String,
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

pub fn summarize(variable: &str, values: &[f64]) -> Result<VariableSummary> {
    if values.is_empty() {
        return Err(Error::Domain(format!("variable `{variable}` has no observations")));
    }
    let n = values.len();
    let mut sum = CompensatedSum::default();
    values.iter().for_each(|&v| sum.add(v));
    let mean = sum.value() / n as f64;
    let mut ss = CompensatedSum::default();
    values.iter().for_each(|&v| ss.add((v - mean) * (v - mean)));
    let sd = if n > 1 { (ss.value() / (n - 1) as f64).sqrt() } else { 0.0 };
    let (min, max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    Ok(VariableSummary {
        variable: variable.to_string(),
        n,
        mean,
        sd,
        min,
        max,
    })
}

/// Summaries of the target percentile, each requested predictor-year
/// percentile, JIF and the three log counts over the included papers.
pub fn describe(
    corpus: &Corpus,
    table: &PercentileTable,
    jif_map: &JifMap,
    years: &[u32],
    target_year: u32,
) -> Result<Vec<VariableSummary>> {
    if table.is_empty() {
        return Err(Error::Domain(
            "no paper belongs to an eligible reference set; nothing to describe".into(),
        ));
    }
    let mut out = Vec::new();
    let mut ordered = vec![target_year];
    ordered.extend(years.iter().copied().filter(|&y| y != target_year));
    ordered.dedup();
    for y in ordered {
        let col = table.column(y).ok_or_else(|| Error::MissingPercentile {
            paper_id: table.paper_ids()[0].clone(),
            year: y,
        })?;
        out.push(summarize(&format!("percentile_year_{y}"), &col)?);
    }
    let papers: Vec<_> = table.corpus_rows().iter().map(|&i| &corpus.papers()[i]).collect();
    let jif: Vec<f64> = papers
        .iter()
        .filter_map(|p| jif_map.get(&p.journal_id).map(|m| m.jif))
        .collect();
    if !jif.is_empty() {
        out.push(summarize("jif", &jif)?);
    }
    let ln = |f: fn(&crate::corpus::PaperRecord) -> u32| -> Vec<f64> {
        papers.iter().map(|p| ln_count(f(p))).collect()
    };
    out.push(summarize("ln_authors", &ln(|p| p.n_authors))?);
    out.push(summarize("ln_refs", &ln(|p| p.n_cited_refs))?);
    out.push(summarize("ln_pages", &ln(|p| p.n_pages))?);
    Ok(out)
}

pub fn write_describe_csv<W: Write>(rows: &[VariableSummary], mut w: W) -> std::io::Result<()> {
    writeln!(w, "variable,n,mean,sd_sample,min,max")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{:.6},{:.6},{:.6},{:.6}",
            r.variable, r.n, r.mean, r.sd, r.min, r.max
        )?;
    }
    Ok(())
}

const SERIES_COLORS: [&str; 5] = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e"];

/// Adjusted R² against predictor year, one polyline per model.
pub fn curve_svg(grid: &SweepGrid) -> String {
    let (w, h, pad) = (720.0, 420.0, 50.0);
    let years = grid.years();
    let (y_lo, y_hi) = (
        f64::from(*years.first().unwrap_or(&1)),
        f64::from(*years.last().unwrap_or(&1)),
    );
    let span = (y_hi - y_lo).max(1.0);
    let sx = |year: f64| pad + (year - y_lo) / span * (w - 2.0 * pad);
    let sy = |v: f64| h - pad - v.clamp(0.0, 1.0) * (h - 2.0 * pad);

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    ));
    s.push_str(&format!(
        "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n<line x1=\"{pad}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"black\"/>\n<line x1=\"{pad}\" y1=\"{pad}\" x2=\"{pad}\" y2=\"{0}\" stroke=\"black\"/>\n",
        h - pad,
        w - pad
    ));
    for tick in 0..=4 {
        let v = f64::from(tick) / 4.0;
        s.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"end\">{v:.2}</text>\n",
            pad - 6.0,
            sy(v) + 4.0
        ));
    }
    for &y in &years {
        s.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"10\" text-anchor=\"middle\">{y}</text>\n",
            sx(f64::from(y)),
            h - pad + 16.0
        ));
    }
    for model in 1..=MODELS {
        let pts: Vec<String> = grid
            .results
            .iter()
            .filter(|r| r.spec.model == model)
            .map(|r| format!("{:.2},{:.2}", sx(f64::from(r.spec.predictor_year)), sy(r.adj_r2)))
            .collect();
        let color = SERIES_COLORS[(model - 1) as usize];
        s.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            pts.join(" ")
        ));
        s.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" fill=\"{color}\">Model {model}</text>\n",
            w - pad - 60.0,
            pad + 14.0 * f64::from(model)
        ));
    }
    s.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"middle\">predictor year (target year {})</text>\n",
        w / 2.0,
        h - 8.0,
        grid.target_year
    ));
    s.push_str("</svg>\n");
    s
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileDigest {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path) -> Result<Self> {
        let data = fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(Self {
            name: path
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
            bytes: data.len() as u64,
            sha256: hex::encode(Sha256::digest(&data)),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StageCount {
    pub stage: String,
    pub rows: u64,
}

/// Provenance record written as `manifest.json` next to a command's outputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub started_at: String,
    pub finished_at: String,
    pub stages: Vec<StageCount>,
    pub warnings: Vec<String>,
}

/// Wall-clock time, or `SOURCE_DATE_EPOCH` when set so that reruns can be
/// byte-identical.
pub fn timestamp() -> String {
    let secs = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok());
    let t = match secs {
        Some(s) => chrono::DateTime::from_timestamp(s, 0).unwrap_or_default(),
        None => chrono::Utc::now(),
    };
    t.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value) -> Self {
        Self {
            tool: "citewindow".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
            started_at: timestamp(),
            finished_at: String::new(),
            stages: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn stage(&mut self, stage: &str, rows: usize) {
        self.stages.push(StageCount {
            stage: stage.into(),
            rows: rows as u64,
        });
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(FileDigest::of(path)?);
        Ok(())
    }

    pub fn output(&mut self, path: &Path) -> Result<()> {
        self.outputs.push(FileDigest::of(path)?);
        Ok(())
    }

    pub fn write(mut self, dir: &Path) -> Result<()> {
        self.finished_at = timestamp();
        let path = dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(&self).expect("manifest serializes");
        text.push('\n');
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }
}
