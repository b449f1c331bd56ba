//! Experiment orchestration: seeded sampler trials, sentence batteries,
//! aggregation with Wilson intervals, and deterministic CSV/JSON reporting.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::class::{parse_class_ref, ClassSpec, ClassSpecFile};
use crate::enumeration::Levels;
use crate::error::{Error, Result};
use crate::logic::{self, ExtensionAxiom, Sentence};
use crate::partitions::PartitionSampler;
use crate::sampler::{
    self, epsilon_for_extension, failure_bound, required_partition_max, trial_rng,
};
use crate::structure::FinStructure;

pub const RESULT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassRefCfg {
    /// Catalog reference, e.g. `"feq-bounded-labeled(n=3)"`.
    Catalog(String),
    /// Path to a class-spec JSON file.
    File(String),
    /// Inline class-spec document.
    Inline(ClassSpecFile),
}

impl ClassRefCfg {
    pub fn resolve(&self) -> Result<ClassSpec> {
        match self {
            ClassRefCfg::Catalog(name) => parse_class_ref(name),
            ClassRefCfg::File(path) => {
                let text = std::fs::read_to_string(path)?;
                ClassSpec::from_json(&text)
            }
            ClassRefCfg::Inline(file) => ClassSpec::from_file(file),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MeasureCfg {
    /// The level-by-level uniform-completion measure; `bounded` caps the
    /// level and decides the rest by fair coins.
    Amalgamation {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bounded: Option<usize>,
    },
    UniformExhaustive,
    UniformPartitions,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SentenceCfg {
    /// A named sentence from the built-in list.
    Named(String),
    /// A sentence in the s-expression grammar.
    Sexpr(String),
    /// Every one-point extension axiom with base size at most `max_base_size`
    /// drawn from levels up to `level_bound` elements.
    ExtensionAxioms {
        max_base_size: usize,
        level_bound: usize,
    },
}

fn default_ci_target() -> Option<f64> {
    Some(0.02)
}

fn default_batch() -> u64 {
    32
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub class: ClassRefCfg,
    pub measure: MeasureCfg,
    /// Per-sort size vectors, strictly increasing in total size.
    pub sizes: Vec<Vec<usize>>,
    pub sentences: Vec<SentenceCfg>,
    pub trials: u64,
    pub seed: u64,
    /// A size tier stops early once every battery row's Wilson half-width
    /// drops below this target; `null` disables early stopping.
    #[serde(default = "default_ci_target")]
    pub ci_half_width_target: Option<f64>,
    /// Trials are scheduled in deterministic batches of this size.
    #[serde(default = "default_batch")]
    pub batch: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.sizes.is_empty() {
            return Err(Error::InvalidConfig("at least one size is required".into()));
        }
        let totals: Vec<usize> = self.sizes.iter().map(|v| v.iter().sum()).collect();
        if totals.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(
                "sizes must be strictly increasing in total size".into(),
            ));
        }
        if self.batch == 0 {
            return Err(Error::InvalidConfig("batch must be positive".into()));
        }
        if let Some(t) = self.ci_half_width_target {
            if t.is_nan() || t <= 0.0 {
                return Err(Error::InvalidConfig("ci target must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Stable digest of the canonical JSON form.
    pub fn digest(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        format!("{:016x}", fnv1a64(text.as_bytes()))
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ResultRow {
    pub size: Vec<usize>,
    pub sentence: String,
    pub trials: u64,
    pub successes: u64,
    pub estimate: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub schema_version: u32,
    pub seed: u64,
    pub config_digest: String,
    pub rows: Vec<ResultRow>,
    pub wall_ms: u128,
}

/// Wilson 95% interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959963984540054f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let center = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// One resolved battery item: a label and the sentence to evaluate, plus the
/// extension axiom behind it when there is one.
struct BatteryItem {
    label: String,
    sentence: Sentence,
    axiom: Option<ExtensionAxiom>,
}

fn build_battery(levels: &Levels, sentences: &[SentenceCfg]) -> Result<Vec<BatteryItem>> {
    let sig = levels.spec().signature();
    let mut out = Vec::new();
    for cfg in sentences {
        match cfg {
            SentenceCfg::Named(key) => out.push(BatteryItem {
                label: key.clone(),
                sentence: logic::named_sentence(key, sig)?,
                axiom: None,
            }),
            SentenceCfg::Sexpr(text) => out.push(BatteryItem {
                label: text.clone(),
                sentence: Sentence::parse(sig, text)?,
                axiom: None,
            }),
            SentenceCfg::ExtensionAxioms {
                max_base_size,
                level_bound,
            } => {
                let axioms = logic::generate_axioms(levels, *level_bound, logic::AxiomMode::Full)?;
                for (i, ax) in axioms
                    .extensions
                    .into_iter()
                    .filter(|ax| ax.base_size() <= *max_base_size)
                    .enumerate()
                {
                    out.push(BatteryItem {
                        label: format!("ext{:03}(base={})", i, ax.base_size()),
                        sentence: ax.sentence()?,
                        axiom: Some(ax),
                    });
                }
            }
        }
    }
    Ok(out)
}

pub const BATTERY_ALL_LABEL: &str = "battery:all";

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    run_experiment_with_progress(cfg, None)
}

/// Run the experiment; `progress` is invoked after each completed size tier
/// with the rows produced so far.
pub fn run_experiment_with_progress(
    cfg: &ExperimentConfig,
    progress: Option<&dyn Fn(&ResultRow)>,
) -> Result<ExperimentResult> {
    cfg.validate()?;
    let start = std::time::Instant::now();
    let spec = cfg.class.resolve()?;
    let levels = Levels::new(spec);
    let battery = build_battery(&levels, &cfg.sentences)?;
    if battery.is_empty() {
        return Err(Error::InvalidConfig("empty sentence battery".into()));
    }
    let partitions = match cfg.measure {
        MeasureCfg::UniformPartitions => {
            let max_cell = cfg
                .sizes
                .iter()
                .map(|s| required_partition_max(&levels, s))
                .max()
                .unwrap_or(0);
            PartitionSampler::with_max(max_cell)
        }
        _ => PartitionSampler::with_max(0),
    };
    let mut rows = Vec::new();
    for (si, size) in cfg.sizes.iter().enumerate() {
        let mut successes = vec![0u64; battery.len() + 1];
        let mut done = 0u64;
        while done < cfg.trials {
            let batch_end = (done + cfg.batch).min(cfg.trials);
            let batch: Vec<u64> = (done..batch_end).collect();
            let outcomes: Vec<Result<Vec<bool>>> = batch
                .par_iter()
                .map(|&trial| {
                    let mut rng = trial_rng(cfg.seed, si as u64, trial);
                    let m: FinStructure = match cfg.measure {
                        MeasureCfg::Amalgamation { bounded } => {
                            sampler::sample_mu(&levels, size, bounded, &mut rng)?
                        }
                        MeasureCfg::UniformExhaustive => {
                            sampler::sample_uniform_exhaustive(&levels, size, &mut rng)?
                        }
                        MeasureCfg::UniformPartitions => sampler::sample_uniform_partitions(
                            &levels,
                            &partitions,
                            size,
                            &mut rng,
                        )?,
                    };
                    battery
                        .iter()
                        .map(|item| logic::evaluate(&m, &item.sentence))
                        .collect()
                })
                .collect();
            for outcome in outcomes {
                let bools = outcome?;
                let mut all = true;
                for (i, b) in bools.iter().enumerate() {
                    if *b {
                        successes[i] += 1;
                    } else {
                        all = false;
                    }
                }
                if all {
                    successes[battery.len()] += 1;
                }
            }
            done = batch_end;
            if let Some(target) = cfg.ci_half_width_target {
                let widest = (0..=battery.len())
                    .map(|i| {
                        let (lo, hi) = wilson_interval(successes[i], done);
                        (hi - lo) / 2.0
                    })
                    .fold(0.0f64, f64::max);
                if widest <= target {
                    break;
                }
            }
        }
        let total: usize = size.iter().sum();
        for (i, item) in battery.iter().enumerate() {
            let (lo, hi) = wilson_interval(successes[i], done);
            let bound = match (&cfg.measure, &item.axiom) {
                (MeasureCfg::Amalgamation { bounded: None }, Some(ax)) => {
                    match epsilon_for_extension(&levels, ax) {
                        Ok(eps) if total > ax.base_size() => {
                            failure_bound(ax.base_size(), eps, total).ok()
                        }
                        _ => None,
                    }
                }
                _ => None,
            };
            let row = ResultRow {
                size: size.clone(),
                sentence: item.label.clone(),
                trials: done,
                successes: successes[i],
                estimate: successes[i] as f64 / done as f64,
                wilson_lo: lo,
                wilson_hi: hi,
                bound,
            };
            if let Some(cb) = progress {
                cb(&row);
            }
            rows.push(row);
        }
        let (lo, hi) = wilson_interval(successes[battery.len()], done);
        let row = ResultRow {
            size: size.clone(),
            sentence: BATTERY_ALL_LABEL.to_string(),
            trials: done,
            successes: successes[battery.len()],
            estimate: successes[battery.len()] as f64 / done as f64,
            wilson_lo: lo,
            wilson_hi: hi,
            bound: None,
        };
        if let Some(cb) = progress {
            cb(&row);
        }
        rows.push(row);
    }
    Ok(ExperimentResult {
        schema_version: RESULT_SCHEMA_VERSION,
        seed: cfg.seed,
        config_digest: cfg.digest(),
        rows,
        wall_ms: start.elapsed().as_millis(),
    })
}

// ---------------------------------------------------------------------------
// Filtration scans

#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub n: u32,
    /// Whether the sentence's source structures lie in the class at this
    /// filtration stage; `None` when the question is not syntactic.
    pub present: Option<bool>,
    pub trials: u64,
    pub successes: u64,
}

pub enum ScanItem {
    /// A one-point extension axiom over the unexpanded signature.
    Extension(ExtensionAxiom),
    /// A universal axiom at a level shape; always present in subclasses.
    Universal(Vec<usize>),
    /// An arbitrary sentence (no syntactic presence notion).
    Plain(Sentence),
}

/// For each filtration stage n, report whether the item's source structures
/// lie in K_n, and optionally the empirical satisfaction rate under the
/// level-by-level measure on the labeled expansion of K_n.
#[allow(clippy::too_many_arguments)]
pub fn filtration_scan(
    family: &dyn Fn(u32) -> Result<ClassSpec>,
    labeled_family: Option<&dyn Fn(u32) -> Result<ClassSpec>>,
    item: &ScanItem,
    n_from: u32,
    n_to: u32,
    sizes: &[usize],
    trials: u64,
    seed: u64,
) -> Result<Vec<ScanRow>> {
    let mut rows = Vec::new();
    for n in n_from..=n_to {
        let spec_n = family(n)?;
        let present = match item {
            ScanItem::Extension(ax) => {
                let a = rebuild_over(&ax.base, &spec_n)?;
                let b = rebuild_over(&ax.extended, &spec_n)?;
                Some(spec_n.is_member(&a)? && spec_n.is_member(&b)?)
            }
            ScanItem::Universal(_) => Some(true),
            ScanItem::Plain(_) => None,
        };
        let (mut trials_done, mut successes) = (0u64, 0u64);
        if trials > 0 {
            if let Some(lf) = labeled_family {
                let labeled = lf(n)?;
                let levels = Levels::new(labeled);
                let sentence = match item {
                    ScanItem::Extension(ax) => ax.sentence()?.rebind(levels.spec().signature())?,
                    ScanItem::Plain(s) => s.rebind(levels.spec().signature())?,
                    ScanItem::Universal(_) => {
                        return Err(Error::InvalidConfig(
                            "universal axioms have no sampling form here".into(),
                        ))
                    }
                };
                for t in 0..trials {
                    let mut rng = trial_rng(seed, n as u64, t);
                    let m = sampler::sample_mu(&levels, sizes, None, &mut rng)?;
                    if logic::evaluate(&m, &sentence)? {
                        successes += 1;
                    }
                }
                trials_done = trials;
            }
        }
        rows.push(ScanRow {
            n,
            present,
            trials: trials_done,
            successes,
        });
    }
    Ok(rows)
}

/// Re-create a structure over another spec's signature by relation names.
fn rebuild_over(m: &FinStructure, spec: &ClassSpec) -> Result<FinStructure> {
    let from = m.signature();
    let to = spec.signature();
    let mut b = FinStructure::builder(to.clone(), m.sizes())?;
    for (r, decl) in from.relations().iter().enumerate() {
        let tr = to
            .relation_id(&decl.name)
            .ok_or_else(|| Error::UnknownRelation(decl.name.clone()))?;
        for fact in m.facts(r) {
            let args: Vec<usize> = fact.iter().map(|&x| x as usize).collect();
            b.fact(tr, &args)?;
        }
    }
    Ok(b.finish())
}

// ---------------------------------------------------------------------------
// Rendering

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
    Table,
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn size_label(size: &[usize]) -> String {
    size.iter()
        .map(|n| n.to_string())
        .collect::<Vec<_>>()
        .join("x")
}

/// RFC 4180 CSV with CRLF line endings and a stable column order. Volatile
/// fields (wall time) are deliberately excluded so reruns are byte-identical.
pub fn to_csv(result: &ExperimentResult) -> String {
    let mut out = String::new();
    out.push_str("size,sentence,trials,successes,estimate,wilson_lo,wilson_hi,bound\r\n");
    for row in &result.rows {
        let bound = row.bound.map(|b| format!("{b:.6e}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{:.6},{:.6},{:.6},{}\r\n",
            csv_field(&size_label(&row.size)),
            csv_field(&row.sentence),
            row.trials,
            row.successes,
            row.estimate,
            row.wilson_lo,
            row.wilson_hi,
            bound
        ));
    }
    out
}

pub fn to_json(result: &ExperimentResult) -> String {
    serde_json::to_string_pretty(result).expect("result serializes")
}

pub fn to_table(result: &ExperimentResult) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<10} {:<28} {:>7} {:>9} {:>9} {:>19} {:>12}\n",
        "size", "sentence", "trials", "success", "estimate", "wilson 95%", "bound"
    ));
    for row in &result.rows {
        let bound = row
            .bound
            .map(|b| format!("{b:.3e}"))
            .unwrap_or_else(|| "-".into());
        out.push_str(&format!(
            "{:<10} {:<28} {:>7} {:>9} {:>9.4} [{:>7.4}, {:>7.4}] {:>12}\n",
            size_label(&row.size),
            truncate(&row.sentence, 28),
            row.trials,
            row.successes,
            row.estimate,
            row.wilson_lo,
            row.wilson_hi,
            bound
        ));
    }
    out
}

fn truncate(s: &str, n: usize) -> String {
    if s.len() <= n {
        s.to_string()
    } else {
        format!("{}..", &s[..n - 2])
    }
}

pub fn render(result: &ExperimentResult, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => to_csv(result),
        OutputFormat::Json => to_json(result),
        OutputFormat::Table => to_table(result),
    }
}

/// Wald-Wolfowitz runs-test z statistic for a boolean sequence; `None` when
/// the sequence is degenerate.
pub fn runs_test_z(outcomes: &[bool]) -> Option<f64> {
    let n1 = outcomes.iter().filter(|&&b| b).count() as f64;
    let n0 = outcomes.len() as f64 - n1;
    if n1 < 1.0 || n0 < 1.0 {
        return None;
    }
    let mut runs = 1.0f64;
    for w in outcomes.windows(2) {
        if w[0] != w[1] {
            runs += 1.0;
        }
    }
    let n = n1 + n0;
    let mean = 2.0 * n1 * n0 / n + 1.0;
    let var = (mean - 1.0) * (mean - 2.0) / (n - 1.0);
    if var <= 0.0 {
        return None;
    }
    Some((runs - mean) / var.sqrt())
}
