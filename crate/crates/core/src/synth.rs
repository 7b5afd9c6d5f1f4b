//! Seeded synthetic cohorts with known covariate effects.
//!
//! Generation model (all draws from per-journal / per-paper ChaCha streams
//! derived from the seed, so parallel and sequential runs agree):
//!
//! * Journal `j` has prestige `g_j ~ LogNormal(0, 0.6)`. In each of the two
//!   years after the cohort year it publishes `5 + Poisson(20)` citable items
//!   and `Poisson(2)` non-citable ones. Every citable item receives
//!   `Poisson(g_j)` citations in the JIF year (cohort + 3), non-citable items
//!   `Poisson(g_j / 2)`. The journal's JIF is counted from these events.
//! * Paper `i` picks a journal uniformly, the journal's primary category and,
//!   with probability `extra_category_prob`, one more category. Counts:
//!   authors `1 + Geometric(0.55)`, pages `1 + Geometric(0.15)`, references
//!   `Poisson(Gamma(1.2, 12/1.2))` (tripled mean for reviews), so zero
//!   references occur.
//! * Latent quality `q = b_jif·jif + b_a·ln a + b_r·ln max(r,1) + b_p·ln p
//!   + noise_sd·ε`, citation rate `λ = base_rate · exp(q)`.
//! * Year 1 is zero with probability `zero_year1_fraction`, otherwise a
//!   zero-truncated `Poisson(λ·aging[0])`; year `t > 1` is
//!   `Poisson(λ·aging[t-1])`.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Geometric, LogNormal, Normal, Poisson};
use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{CitationEvent, Corpus, CorpusConfig, DocType, PaperRecord, DEFAULT_MIN_REFSET_SIZE};
use crate::error::{Error, Result};
use crate::journal::{ItemType, JournalItem};

const JOURNAL_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffectSizes {
    pub jif: f64,
    pub ln_authors: f64,
    pub ln_refs: f64,
    pub ln_pages: f64,
}

impl EffectSizes {
    pub const ZERO: EffectSizes = EffectSizes {
        jif: 0.0,
        ln_authors: 0.0,
        ln_refs: 0.0,
        ln_pages: 0.0,
    };
}

impl Default for EffectSizes {
    fn default() -> Self {
        Self {
            jif: 0.25,
            ln_authors: 0.15,
            ln_refs: 0.3,
            ln_pages: 0.2,
        }
    }
}

/// `t·exp(-t/3)` normalized to sum to one; peaks around year 3.
pub fn default_aging_profile(horizon: u32) -> Vec<f64> {
    let raw: Vec<f64> = (1..=horizon)
        .map(|t| f64::from(t) * (-f64::from(t) / 3.0).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_papers: usize,
    pub n_journals: usize,
    pub n_categories: usize,
    pub horizon: u32,
    pub zero_year1_fraction: f64,
    pub effect_sizes: EffectSizes,
    pub aging_profile: Vec<f64>,
    pub noise_sd: f64,
    pub publication_year: i32,
    /// Expected lifetime citations at `q = 0`.
    pub base_rate: f64,
    pub extra_category_prob: f64,
    /// Relative weights of article, review, note.
    pub doc_type_weights: [f64; 3],
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            n_papers: 10_000,
            n_journals: 200,
            n_categories: 20,
            horizon: 31,
            zero_year1_fraction: 0.669,
            effect_sizes: EffectSizes::default(),
            aging_profile: default_aging_profile(31),
            noise_sd: 0.8,
            publication_year: 1980,
            base_rate: 3.0,
            extra_category_prob: 0.25,
            doc_type_weights: [0.8, 0.05, 0.15],
        }
    }
}

impl SynthConfig {
    /// Default configuration with the aging profile resized to `horizon`.
    pub fn with_horizon(horizon: u32) -> Self {
        Self {
            horizon,
            aging_profile: default_aging_profile(horizon),
            ..Self::default()
        }
    }

    pub fn jif_year(&self) -> i32 {
        self.publication_year + 3
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_papers < 1 || self.n_journals < 1 || self.n_categories < 1 {
            return bad("n_papers, n_journals and n_categories must be at least 1".into());
        }
        if self.horizon < 2 {
            return bad(format!("horizon must be at least 2, got {}", self.horizon));
        }
        if !(0.0..1.0).contains(&self.zero_year1_fraction) {
            return bad(format!(
                "zero_year1_fraction must be in [0, 1), got {}",
                self.zero_year1_fraction
            ));
        }
        if self.aging_profile.len() != self.horizon as usize {
            return bad(format!(
                "aging_profile has {} entries, expected {}",
                self.aging_profile.len(),
                self.horizon
            ));
        }
        if self.aging_profile.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return bad("aging_profile entries must be finite and nonnegative".into());
        }
        let total: f64 = self.aging_profile.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return bad(format!("aging_profile sums to {total}, expected 1"));
        }
        if !(self.noise_sd.is_finite() && self.noise_sd >= 0.0) {
            return bad("noise_sd must be finite and nonnegative".into());
        }
        if !(self.base_rate.is_finite() && self.base_rate > 0.0) {
            return bad("base_rate must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.extra_category_prob) {
            return bad("extra_category_prob must be in [0, 1]".into());
        }
        let e = &self.effect_sizes;
        if [e.jif, e.ln_authors, e.ln_refs, e.ln_pages].iter().any(|v| !v.is_finite()) {
            return bad("effect sizes must be finite".into());
        }
        let w = &self.doc_type_weights;
        if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || w.iter().sum::<f64>() <= 0.0 {
            return bad("doc_type_weights must be nonnegative with a positive sum".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JournalTruth {
    pub journal_id: String,
    pub category: String,
    pub prestige: f64,
    pub citable_items: u64,
    pub citations: u64,
    pub jif: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PaperTruth {
    pub paper_id: String,
    pub journal_id: String,
    pub jif: f64,
    /// Standard normal draw; the latent quality adds `noise_sd` times this.
    pub noise: f64,
    pub latent: f64,
    pub rate: f64,
    /// True when year 1 was forced to zero.
    pub zero_year1: bool,
}

impl PaperTruth {
    /// Recomputes the latent quality from the generating parameters.
    pub fn recompute_latent(&self, paper: &PaperRecord, effects: &EffectSizes, noise_sd: f64) -> f64 {
        effects.jif * self.jif
            + effects.ln_authors * f64::from(paper.n_authors).ln()
            + effects.ln_refs * f64::from(paper.n_cited_refs.max(1)).ln()
            + effects.ln_pages * f64::from(paper.n_pages).ln()
            + noise_sd * self.noise
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruth {
    pub config: SynthConfig,
    pub journals: Vec<JournalTruth>,
    pub papers: Vec<PaperTruth>,
}

impl GroundTruth {
    /// Per-paper truth keyed by `paper_id`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "paper_id,journal_id,jif,noise,latent,rate,zero_year1")?;
        for p in &self.papers {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                p.paper_id, p.journal_id, p.jif, p.noise, p.latent, p.rate, p.zero_year1
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub corpus: Corpus,
    pub items: Vec<JournalItem>,
    pub events: Vec<CitationEvent>,
    pub truth: GroundTruth,
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn poisson<R: Rng>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as u64
}

/// Poisson conditioned on being at least one.
fn zero_truncated_poisson<R: Rng>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 1;
    }
    if mean > 5.0 {
        loop {
            let k = poisson(rng, mean);
            if k > 0 {
                return k;
            }
        }
    }
    // inverse CDF over k >= 1
    let u: f64 = rng.random();
    let norm = -(-mean).exp_m1();
    let mut k = 1u64;
    let mut pk = mean * (-mean).exp() / norm;
    let mut cdf = pk;
    while u > cdf && k < 1_000 {
        k += 1;
        pk *= mean / k as f64;
        cdf += pk;
    }
    k
}

fn category_code(c: usize) -> String {
    format!("C{c:03}")
}

fn gen_journal(cfg: &SynthConfig, j: usize) -> (JournalTruth, Vec<JournalItem>, Vec<CitationEvent>) {
    let mut rng = stream_rng(cfg.seed ^ JOURNAL_SEED_SALT, j as u64);
    let journal_id = format!("J{j:04}");
    let prestige = LogNormal::new(0.0, 0.6).expect("valid").sample(&mut rng);
    let jif_year = cfg.jif_year();
    let mut items = Vec::new();
    let mut events = Vec::new();
    let mut citable = 0u64;
    let mut cites = 0u64;
    for year in [cfg.publication_year + 1, cfg.publication_year + 2] {
        let n_citable = 5 + poisson(&mut rng, 20.0);
        let n_other = poisson(&mut rng, 2.0);
        for k in 0..n_citable + n_other {
            let is_citable = k < n_citable;
            let doc_type = if !is_citable {
                ItemType::Other
            } else {
                match rng.random_range(0..20) {
                    0 => ItemType::Review,
                    1..=3 => ItemType::Note,
                    _ => ItemType::Article,
                }
            };
            let item_id = format!("{journal_id}-{year}-{k:03}");
            let mean = if is_citable { prestige } else { prestige / 2.0 };
            let received = poisson(&mut rng, mean);
            if is_citable {
                citable += 1;
                cites += received;
            }
            for _ in 0..received {
                events.push(CitationEvent {
                    citing_year: jif_year,
                    cited_paper_id: item_id.clone(),
                });
            }
            items.push(JournalItem {
                item_id,
                journal_id: journal_id.clone(),
                pub_year: year,
                doc_type,
            });
        }
    }
    let truth = JournalTruth {
        journal_id,
        category: category_code(j % cfg.n_categories),
        prestige,
        citable_items: citable,
        citations: cites,
        jif: cites as f64 / citable as f64,
    };
    (truth, items, events)
}

fn gen_paper(cfg: &SynthConfig, i: usize, journals: &[JournalTruth]) -> (PaperRecord, PaperTruth) {
    let mut rng = stream_rng(cfg.seed, i as u64);
    let j = rng.random_range(0..journals.len());
    let journal = &journals[j];

    let w = cfg.doc_type_weights;
    let u: f64 = rng.random::<f64>() * (w[0] + w[1] + w[2]);
    let doc_type = if u < w[0] {
        DocType::Article
    } else if u < w[0] + w[1] {
        DocType::Review
    } else {
        DocType::Note
    };

    let mut categories = vec![journal.category.clone()];
    if rng.random::<f64>() < cfg.extra_category_prob {
        categories.push(category_code(rng.random_range(0..cfg.n_categories)));
    }
    categories.sort();
    categories.dedup();

    let n_authors = 1 + Geometric::new(0.55).expect("valid").sample(&mut rng) as u32;
    let n_pages = 1 + Geometric::new(0.15).expect("valid").sample(&mut rng) as u32;
    let ref_mean = if doc_type == DocType::Review { 36.0 } else { 12.0 };
    let shape = 1.2;
    let ref_rate = Gamma::new(shape, ref_mean / shape).expect("valid").sample(&mut rng);
    let n_cited_refs = poisson(&mut rng, ref_rate) as u32;

    let eps: f64 = Normal::new(0.0, 1.0).expect("valid").sample(&mut rng);
    let e = &cfg.effect_sizes;
    let latent = e.jif * journal.jif
        + e.ln_authors * f64::from(n_authors).ln()
        + e.ln_refs * f64::from(n_cited_refs.max(1)).ln()
        + e.ln_pages * f64::from(n_pages).ln()
        + cfg.noise_sd * eps;
    let rate = cfg.base_rate * latent.exp();

    let zero_year1 = rng.random::<f64>() < cfg.zero_year1_fraction;
    let mut annual = Vec::with_capacity(cfg.horizon as usize);
    annual.push(if zero_year1 {
        0
    } else {
        zero_truncated_poisson(&mut rng, rate * cfg.aging_profile[0]) as u32
    });
    for &a in &cfg.aging_profile[1..] {
        annual.push(poisson(&mut rng, rate * a) as u32);
    }

    let paper_id = format!("P{i:07}");
    let record = PaperRecord {
        paper_id: paper_id.clone(),
        journal_id: journal.journal_id.clone(),
        pub_year: cfg.publication_year,
        doc_type,
        subject_categories: categories,
        n_authors,
        n_cited_refs,
        n_pages,
        annual_citations: annual,
    };
    let truth = PaperTruth {
        paper_id,
        journal_id: journal.journal_id.clone(),
        jif: journal.jif,
        noise: eps,
        latent,
        rate,
        zero_year1,
    };
    (record, truth)
}

/// Generates a cohort, its journals' item records and citation events.
///
/// Events cover the JIF year only: citations to the journals' items from the
/// two preceding years plus, when the JIF year falls inside the horizon, the
/// cohort papers' own citations in that year.
pub fn generate(cfg: &SynthConfig) -> Result<SynthOutput> {
    cfg.validate()?;
    let journal_parts: Vec<_> = (0..cfg.n_journals)
        .into_par_iter()
        .map(|j| gen_journal(cfg, j))
        .collect();
    let mut journals = Vec::with_capacity(cfg.n_journals);
    let mut journal_items = Vec::new();
    let mut events = Vec::new();
    for (t, it, ev) in journal_parts {
        journals.push(t);
        journal_items.extend(it);
        events.extend(ev);
    }

    let (papers, paper_truth): (Vec<PaperRecord>, Vec<PaperTruth>) = (0..cfg.n_papers)
        .into_par_iter()
        .map(|i| gen_paper(cfg, i, &journals))
        .unzip();

    let jif_window = (cfg.jif_year() - cfg.publication_year + 1) as usize;
    if jif_window <= cfg.horizon as usize {
        for p in &papers {
            for _ in 0..p.annual_citations[jif_window - 1] {
                events.push(CitationEvent {
                    citing_year: cfg.jif_year(),
                    cited_paper_id: p.paper_id.clone(),
                });
            }
        }
    }
    let mut items: Vec<JournalItem> = papers
        .iter()
        .map(|p| JournalItem {
            item_id: p.paper_id.clone(),
            journal_id: p.journal_id.clone(),
            pub_year: p.pub_year,
            doc_type: ItemType::from_label(p.doc_type.as_str()),
        })
        .collect();
    items.extend(journal_items);

    let corpus = Corpus::from_records(
        CorpusConfig {
            horizon: cfg.horizon,
            min_refset_size: DEFAULT_MIN_REFSET_SIZE,
            publication_year: cfg.publication_year,
        },
        papers,
    )?;
    Ok(SynthOutput {
        corpus,
        items,
        events,
        truth: GroundTruth {
            config: cfg.clone(),
            journals,
            papers: paper_truth,
        },
    })
}

pub mod oracle {
    //! Reference implementations used to cross-check the engine in tests.

    use std::collections::BTreeMap;

    use crate::error::{Error, Result};

    /// Hazen percentiles computed from value multiplicities: a value with
    /// `less` smaller entries and `equal` copies has rank
    /// `less + (equal + 1)/2`.
    pub fn oracle_percentile(values: &[u64]) -> Result<Vec<f64>> {
        if values.is_empty() {
            return Err(Error::Domain("cannot rank an empty list".into()));
        }
        let mut counts: BTreeMap<u64, usize> = BTreeMap::new();
        for &v in values {
            *counts.entry(v).or_default() += 1;
        }
        let mut below = BTreeMap::new();
        let mut running = 0usize;
        for (&v, &c) in &counts {
            below.insert(v, running);
            running += c;
        }
        let n = values.len() as f64;
        Ok(values
            .iter()
            .map(|v| {
                let less = below[v] as f64;
                let equal = counts[v] as f64;
                let rank = less + (equal + 1.0) / 2.0;
                100.0 * (rank - 0.5) / n
            })
            .collect())
    }

    /// Rank sum via the same multiplicity counts, as an exact integer
    /// doubled to stay integral: `Σ 2·rank`.
    pub fn doubled_rank_sum(values: &[u64]) -> u128 {
        let mut counts: BTreeMap<u64, u128> = BTreeMap::new();
        for &v in values {
            *counts.entry(v).or_default() += 1;
        }
        let mut less = 0u128;
        let mut total = 0u128;
        for &c in counts.values() {
            total += c * (2 * less + c + 1);
            less += c;
        }
        total
    }
}
