use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use citewindow_core::corpus::{self, Corpus, CorpusConfig, IngestReport};
use citewindow_core::journal::{self, ItemStore, JifMap};
use citewindow_core::percentile::{build_reference_sets, percentile_table, PercentileTable, ReferenceSets};
use citewindow_core::regression::{
    functional_form_selection, make_features, model_sweep, CountCovariate, RowPolicy, SweepOptions,
};
use citewindow_core::report::{self, RunManifest};
use citewindow_core::synth::{self, EffectSizes, SynthConfig};

#[derive(Parser)]
#[command(name = "citewindow", version, about = "Citation percentiles, JIFs and nested OLS sweeps over citation windows")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "CITEWINDOW_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a paper file and write the accepted cohort.
    Ingest(IngestArgs),
    /// Hazen percentiles per paper and window year.
    Percentiles(PercentileArgs),
    /// Journal impact factors from item records and citation events.
    Jif(JifArgs),
    /// Descriptive statistics of the target percentile and covariates.
    Describe(DescribeArgs),
    /// Nested models 1-5 for every predictor year.
    Sweep(SweepArgs),
    /// Generate a synthetic cohort with known effects.
    Synth(SynthArgs),
}

#[derive(Args)]
struct CorpusArgs {
    /// Paper records (JSON lines or the columnar text format).
    #[arg(long)]
    papers: PathBuf,
    #[arg(long, default_value_t = corpus::DEFAULT_MIN_REFSET_SIZE)]
    min_refset_size: usize,
    #[arg(long, default_value_t = corpus::DEFAULT_HORIZON)]
    horizon: u32,
    /// Cohort publication year.
    #[arg(long, default_value_t = corpus::DEFAULT_PUBLICATION_YEAR)]
    publication_year: i32,
}

impl CorpusArgs {
    fn config(&self) -> CorpusConfig {
        CorpusConfig {
            horizon: self.horizon,
            min_refset_size: self.min_refset_size,
            publication_year: self.publication_year,
        }
    }
}

#[derive(Args)]
struct JifSource {
    /// Precomputed `journal_id,jif` table.
    #[arg(long, conflicts_with_all = ["journal_items", "citation_events"])]
    jif_table: Option<PathBuf>,
    #[arg(long, requires = "citation_events")]
    journal_items: Option<PathBuf>,
    #[arg(long, requires = "journal_items")]
    citation_events: Option<PathBuf>,
    /// Calendar year of the JIF (defaults to publication year + 3).
    #[arg(long)]
    jif_year: Option<i32>,
}

#[derive(Args)]
struct IngestArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PercentileArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Window years, e.g. `1-31`, `1,2,31` (defaults to every year).
    #[arg(long)]
    years: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct JifArgs {
    #[arg(long)]
    journal_items: PathBuf,
    #[arg(long)]
    citation_events: PathBuf,
    /// Cohort publication year; the default target year is three years later.
    #[arg(long, default_value_t = corpus::DEFAULT_PUBLICATION_YEAR)]
    publication_year: i32,
    /// Calendar year whose citations are counted.
    #[arg(long)]
    target_year: Option<i32>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DescribeArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    jif: JifSource,
    /// Predictor years to summarize.
    #[arg(long, default_value = "1,2")]
    years: String,
    /// Window year of the dependent percentile.
    #[arg(long, default_value_t = 31)]
    target_year: u32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    jif: JifSource,
    /// Predictor years (defaults to 1..target-1).
    #[arg(long)]
    years: Option<String>,
    /// Window year of the dependent percentile.
    #[arg(long, default_value_t = 31)]
    target_year: u32,
    /// Fit model 1 on the JIF-complete rows too.
    #[arg(long)]
    common_rows: bool,
    /// Also write `curve.svg`.
    #[arg(long)]
    chart: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum PaperFileFormat {
    Jsonl,
    Columnar,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    n_papers: usize,
    #[arg(long, default_value_t = 200)]
    n_journals: usize,
    #[arg(long, default_value_t = 20)]
    n_categories: usize,
    #[arg(long, default_value_t = corpus::DEFAULT_HORIZON)]
    horizon: u32,
    #[arg(long, default_value_t = corpus::DEFAULT_PUBLICATION_YEAR)]
    publication_year: i32,
    #[arg(long, default_value_t = 0.669)]
    zero_year1_fraction: f64,
    #[arg(long, default_value_t = 0.8)]
    noise_sd: f64,
    /// Set every covariate effect to zero.
    #[arg(long)]
    null_effects: bool,
    #[arg(long, value_enum, default_value_t = PaperFileFormat::Jsonl)]
    format: PaperFileFormat,
    #[arg(long)]
    out: PathBuf,
}

/// Parses `1-30`, `1..30`, `1,2,5-7`.
fn parse_years(spec: &str) -> Result<Vec<u32>> {
    let mut years = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let range = part.split_once("..").or_else(|| part.split_once('-'));
        match range {
            Some((a, b)) => {
                let lo: u32 = a.trim().parse().with_context(|| format!("bad year `{a}` in --years"))?;
                let hi: u32 = b.trim().parse().with_context(|| format!("bad year `{b}` in --years"))?;
                if lo > hi {
                    bail!("empty year range `{part}` in --years");
                }
                years.extend(lo..=hi);
            }
            None => years.push(part.parse().with_context(|| format!("bad year `{part}` in --years"))?),
        }
    }
    if years.is_empty() {
        bail!("--years selects no years");
    }
    years.sort_unstable();
    years.dedup();
    Ok(years)
}

fn create_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))
}

fn write_file(
    manifest: &mut RunManifest,
    path: PathBuf,
    f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<()> {
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    f(&mut w)
        .and_then(|_| w.flush())
        .with_context(|| format!("writing {}", path.display()))?;
    manifest.output(&path)?;
    Ok(())
}

fn load_corpus(args: &CorpusArgs, manifest: &mut RunManifest) -> Result<(Corpus, IngestReport)> {
    let (corpus, report) = corpus::ingest_path(&args.papers, &args.config()).context("stage `ingest`")?;
    manifest.input(&args.papers)?;
    manifest.stage("ingest.total", report.total);
    manifest.stage("ingest.accepted", report.accepted);
    manifest.stage("ingest.rejected_doctype", report.rejected_doctype);
    manifest.stage("ingest.rejected_year", report.rejected_year);
    manifest.stage("ingest.malformed", report.malformed_count());
    if report.malformed_count() > 0 {
        manifest.warnings.push(format!(
            "{} malformed paper records (first at line {})",
            report.malformed_count(),
            report.malformed[0].line
        ));
    }
    Ok((corpus, report))
}

fn load_percentiles(corpus: &Corpus, years: &[u32], manifest: &mut RunManifest) -> Result<(ReferenceSets, PercentileTable)> {
    let sets = build_reference_sets(corpus);
    let table = percentile_table(corpus, &sets, years).context("stage `percentiles`")?;
    manifest.stage("refsets.total", sets.report.total_sets);
    manifest.stage("refsets.eligible", sets.report.eligible_sets);
    manifest.stage("percentiles.papers", table.len());
    manifest.stage("percentiles.excluded_papers", sets.report.excluded_papers.len());
    if !sets.report.excluded_papers.is_empty() {
        manifest.warnings.push(format!(
            "{} papers excluded: no reference set with at least {} papers",
            sets.report.excluded_papers.len(),
            sets.min_size
        ));
    }
    Ok((sets, table))
}

fn load_jif(src: &JifSource, publication_year: i32, manifest: &mut RunManifest) -> Result<JifMap> {
    let year = src.jif_year.unwrap_or(publication_year + 3);
    let map = match (&src.jif_table, &src.journal_items, &src.citation_events) {
        (Some(table), _, _) => {
            let file = File::open(table).with_context(|| format!("opening {}", table.display()))?;
            let map = journal::ingest_jif_table(std::io::BufReader::new(file), year).context("stage `jif`")?;
            manifest.input(table)?;
            map
        }
        (None, Some(items), Some(events)) => {
            let (map, report) = compute_jif_files(items, events, year, manifest)?;
            if !report.journals_without_metric.is_empty() {
                manifest.warnings.push(format!(
                    "{} journals have no citable items in {}-{}",
                    report.journals_without_metric.len(),
                    year - 2,
                    year - 1
                ));
            }
            map
        }
        _ => bail!("usage: pass --jif-table FILE or --journal-items FILE --citation-events FILE"),
    };
    manifest.stage("jif.journals", map.len());
    Ok(map)
}

fn compute_jif_files(
    items: &Path,
    events: &Path,
    year: i32,
    manifest: &mut RunManifest,
) -> Result<(JifMap, journal::JifReport)> {
    let open = |p: &Path| -> Result<std::io::BufReader<File>> {
        Ok(std::io::BufReader::new(
            File::open(p).with_context(|| format!("opening {}", p.display()))?,
        ))
    };
    let items_vec = journal::read_journal_items(open(items)?).context("stage `jif`: journal items")?;
    let events_vec = corpus::read_citation_events(open(events)?).context("stage `jif`: citation events")?;
    manifest.input(items)?;
    manifest.input(events)?;
    manifest.stage("jif.items", items_vec.len());
    manifest.stage("jif.events", events_vec.len());
    let store = ItemStore::new(items_vec).context("stage `jif`")?;
    Ok(journal::compute_all_jif(&store, &events_vec, year))
}

fn cmd_ingest(args: IngestArgs) -> Result<()> {
    create_out(&args.out)?;
    let mut manifest = RunManifest::new("ingest", json!({ "corpus": args.corpus.config() }));
    let (corpus, report) = load_corpus(&args.corpus, &mut manifest)?;
    write_file(&mut manifest, args.out.join("corpus.jsonl"), |w| {
        corpus::write_jsonl(corpus.papers(), w)
    })?;
    write_file(&mut manifest, args.out.join("ingest_report.json"), |w| {
        serde_json::to_writer_pretty(&mut *w, &report)?;
        writeln!(w)
    })?;
    manifest.write(&args.out)?;
    Ok(())
}

fn cmd_percentiles(args: PercentileArgs) -> Result<()> {
    create_out(&args.out)?;
    let years = match &args.years {
        Some(s) => parse_years(s)?,
        None => (1..=args.corpus.horizon).collect(),
    };
    let mut manifest = RunManifest::new(
        "percentiles",
        json!({ "corpus": args.corpus.config(), "years": years }),
    );
    let (corpus, _) = load_corpus(&args.corpus, &mut manifest)?;
    let (sets, table) = load_percentiles(&corpus, &years, &mut manifest)?;
    write_file(&mut manifest, args.out.join("percentiles.csv"), |w| table.write_csv(w))?;
    write_file(&mut manifest, args.out.join("refsets.json"), |w| {
        serde_json::to_writer_pretty(&mut *w, &sets.report)?;
        writeln!(w)
    })?;
    manifest.write(&args.out)?;
    Ok(())
}

fn cmd_jif(args: JifArgs) -> Result<()> {
    create_out(&args.out)?;
    let year = args.target_year.unwrap_or(args.publication_year + 3);
    let mut manifest = RunManifest::new("jif", json!({ "target_year": year }));
    let (map, report) = compute_jif_files(&args.journal_items, &args.citation_events, year, &mut manifest)?;
    if !report.journals_without_metric.is_empty() {
        manifest.warnings.push(format!(
            "{} journals have no citable items in {}-{}",
            report.journals_without_metric.len(),
            year - 2,
            year - 1
        ));
    }
    if report.unknown_cited_items > 0 {
        manifest
            .warnings
            .push(format!("{} citation events cite unknown items", report.unknown_cited_items));
    }
    manifest.stage("jif.journals", map.len());
    write_file(&mut manifest, args.out.join("jif.csv"), |w| journal::write_jif_table(&map, w))?;
    write_file(&mut manifest, args.out.join("jif_report.json"), |w| {
        serde_json::to_writer_pretty(&mut *w, &report)?;
        writeln!(w)
    })?;
    manifest.write(&args.out)?;
    Ok(())
}

fn cmd_describe(args: DescribeArgs) -> Result<()> {
    create_out(&args.out)?;
    let years = parse_years(&args.years)?;
    let mut manifest = RunManifest::new(
        "describe",
        json!({ "corpus": args.corpus.config(), "years": years, "target_year": args.target_year }),
    );
    let (corpus, _) = load_corpus(&args.corpus, &mut manifest)?;
    let jif = load_jif(&args.jif, args.corpus.publication_year, &mut manifest)?;
    let mut all_years = years.clone();
    all_years.push(args.target_year);
    let (_, table) = load_percentiles(&corpus, &all_years, &mut manifest)?;
    let rows = report::describe(&corpus, &table, &jif, &years, args.target_year).context("stage `describe`")?;
    write_file(&mut manifest, args.out.join("describe.csv"), |w| report::write_describe_csv(&rows, w))?;
    manifest.write(&args.out)?;
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    create_out(&args.out)?;
    let years = match &args.years {
        Some(s) => parse_years(s)?,
        None => (1..args.target_year).collect(),
    };
    let opts = SweepOptions {
        years: years.clone(),
        target_year: args.target_year,
        row_policy: if args.common_rows {
            RowPolicy::CommonRows
        } else {
            RowPolicy::FullSampleM1
        },
    };
    let mut manifest = RunManifest::new("sweep", json!({ "corpus": args.corpus.config(), "sweep": opts }));
    let (corpus, _) = load_corpus(&args.corpus, &mut manifest)?;
    let jif = load_jif(&args.jif, args.corpus.publication_year, &mut manifest)?;
    let mut all_years = years.clone();
    all_years.push(args.target_year);
    let (_, table) = load_percentiles(&corpus, &all_years, &mut manifest)?;
    let grid = model_sweep(&corpus, &table, &jif, &opts).context("stage `sweep`")?;

    manifest.stage("sweep.fits", grid.results.len());
    manifest.stage("features.missing_jif", grid.features.missing_jif);
    manifest.stage("features.zero_refs", grid.features.zero_refs);
    if grid.features.missing_jif > 0 {
        manifest.warnings.push(format!(
            "dropped_missing_jif: {} papers lack a JIF and are left out of models 2-5",
            grid.features.missing_jif
        ));
    }
    if grid.features.zero_refs > 0 {
        manifest.warnings.push(format!(
            "{} papers cite no references; ln_refs set to 0",
            grid.features.zero_refs
        ));
    }

    let (rows, _) = make_features(&corpus, &table, &jif, years[0], args.target_year).context("stage `forms`")?;
    let forms = [
        ("authors", CountCovariate::Authors),
        ("refs", CountCovariate::Refs),
        ("pages", CountCovariate::Pages),
    ]
    .into_iter()
    .map(|(name, c)| functional_form_selection(&rows, c).map(|s| (name, s)))
    .collect::<citewindow_core::Result<Vec<_>>>()
    .context("stage `forms`")?;

    write_file(&mut manifest, args.out.join("coefficients.csv"), |w| grid.write_coefficients_csv(w))?;
    write_file(&mut manifest, args.out.join("models.csv"), |w| grid.write_models_csv(w))?;
    write_file(&mut manifest, args.out.join("curve.csv"), |w| grid.write_curve_csv(w))?;
    write_file(&mut manifest, args.out.join("forms.csv"), |w| {
        writeln!(w, "covariate,winner,bic_linear,bic_log,bic_quadratic")?;
        for (name, s) in &forms {
            writeln!(
                w,
                "{name},{},{:.4},{:.4},{:.4}",
                s.winner, s.bic_linear, s.bic_log, s.bic_quadratic
            )?;
        }
        Ok(())
    })?;
    if args.chart {
        let svg = report::curve_svg(&grid);
        write_file(&mut manifest, args.out.join("curve.svg"), |w| w.write_all(svg.as_bytes()))?;
    }
    manifest.write(&args.out)?;
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    create_out(&args.out)?;
    let cfg = SynthConfig {
        seed: args.seed,
        n_papers: args.n_papers,
        n_journals: args.n_journals,
        n_categories: args.n_categories,
        zero_year1_fraction: args.zero_year1_fraction,
        noise_sd: args.noise_sd,
        publication_year: args.publication_year,
        effect_sizes: if args.null_effects {
            EffectSizes::ZERO
        } else {
            EffectSizes::default()
        },
        ..SynthConfig::with_horizon(args.horizon)
    };
    let mut manifest = RunManifest::new("synth", json!({ "synth": cfg }));
    let out = synth::generate(&cfg).context("stage `synth`")?;
    manifest.stage("synth.papers", out.corpus.len());
    manifest.stage("synth.items", out.items.len());
    manifest.stage("synth.events", out.events.len());
    match args.format {
        PaperFileFormat::Jsonl => write_file(&mut manifest, args.out.join("papers.jsonl"), |w| {
            corpus::write_jsonl(out.corpus.papers(), w)
        })?,
        PaperFileFormat::Columnar => write_file(&mut manifest, args.out.join("papers.csv"), |w| {
            corpus::write_columnar(out.corpus.papers(), w)
        })?,
    }
    write_file(&mut manifest, args.out.join("journal_items.csv"), |w| {
        journal::write_journal_items(&out.items, w)
    })?;
    write_file(&mut manifest, args.out.join("citation_events.csv"), |w| {
        corpus::write_citation_events(&out.events, w)
    })?;
    write_file(&mut manifest, args.out.join("ground_truth.csv"), |w| out.truth.write_csv(w))?;
    write_file(&mut manifest, args.out.join("journal_truth.json"), |w| {
        serde_json::to_writer_pretty(&mut *w, &out.truth.journals)?;
        writeln!(w)
    })?;
    manifest.write(&args.out)?;
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Ingest(a) => cmd_ingest(a),
        Command::Percentiles(a) => cmd_percentiles(a),
        Command::Jif(a) => cmd_jif(a),
        Command::Describe(a) => cmd_describe(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Synth(a) => cmd_synth(a),
    }
}
