//! Command-line front end: enumerate class levels, check disjoint
//! amalgamation, sample random models, evaluate sentences, and run seeded
//! experiments.

use std::io::Write;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use amalgam_core::amalgamation::{check_basic_disjoint_amalgamation, report_to_json};
use amalgam_core::class::{parse_class_ref, CATALOG_NAMES};
use amalgam_core::enumeration::Levels;
use amalgam_core::error::Error;
use amalgam_core::harness::{render, run_experiment_with_progress, ExperimentConfig, OutputFormat};
use amalgam_core::logic::{self, Sentence};
use amalgam_core::partitions::PartitionSampler;
use amalgam_core::sampler::{self, required_partition_max, SampleMode, SamplerConfig};
use amalgam_core::structure::FinStructure;

#[derive(Parser)]
#[command(
    name = "amalgam",
    about = "Workbench for finite relational structures: enumeration, amalgamation, random models, experiments",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate class members on a canonical domain
    Enumerate {
        /// Catalog reference like `triangle-free` or `knk(n=4,k=2)`, or a
        /// path to a class-spec JSON file
        #[arg(long)]
        class: String,
        /// Per-sort sizes, comma separated in signature order, e.g. `3` or `40,3`
        #[arg(long)]
        size: String,
        /// Also print each member as a structure literal
        #[arg(long)]
        emit: bool,
    },
    /// Decide basic disjoint k-amalgamation
    Check {
        #[arg(long)]
        class: String,
        /// Single level to check
        #[arg(long, conflicts_with = "all_up_to")]
        level: Option<usize>,
        /// Check every level from 2 up to this bound
        #[arg(long)]
        all_up_to: Option<usize>,
        /// Emit the reports as JSON
        #[arg(long)]
        json: bool,
    },
    /// Sample random structures
    Sample {
        #[arg(long)]
        class: String,
        #[arg(long)]
        size: String,
        /// unbounded | bounded=<n> | uniform | partitions
        #[arg(long, default_value = "unbounded")]
        mode: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        trials: u64,
        /// literal | none
        #[arg(long, default_value = "literal")]
        emit: EmitMode,
    },
    /// Evaluate a sentence on a structure literal
    Eval {
        #[arg(long)]
        class: String,
        /// Path to a structure literal file, or `-` for stdin
        #[arg(long)]
        structure: String,
        /// Sentence in the s-expression grammar
        #[arg(long, conflicts_with = "named")]
        sentence: Option<String>,
        /// Built-in sentence name (feq-intersect, cpz-surjective)
        #[arg(long)]
        named: Option<String>,
    },
    /// Run a seeded experiment from a JSON config
    Experiment {
        #[arg(long)]
        config: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
        /// Override sizes: semicolon-separated size vectors, e.g. `8;16` or `10,2;60,2`
        #[arg(long)]
        sizes: Option<String>,
        #[arg(long)]
        out: Option<String>,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
        /// Print per-row progress to stderr
        #[arg(long)]
        verbose: bool,
    },
    /// Print a catalog class as a class-spec JSON document
    Catalog {
        /// Catalog reference; omit to list available names
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        out: Option<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum EmitMode {
    Literal,
    None,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
    Table,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> OutputFormat {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
            FormatArg::Table => OutputFormat::Table,
        }
    }
}

fn parse_sizes(text: &str) -> anyhow::Result<Vec<usize>> {
    text.split(',')
        .map(|p| p.trim().parse::<usize>().context("bad size"))
        .collect()
}

fn parse_mode(text: &str) -> anyhow::Result<SampleMode> {
    if text == "unbounded" {
        return Ok(SampleMode::Unbounded);
    }
    if text == "uniform" {
        return Ok(SampleMode::UniformExhaustive);
    }
    if text == "partitions" {
        return Ok(SampleMode::UniformPartitions);
    }
    if let Some(rest) = text
        .strip_prefix("bounded=")
        .or_else(|| text.strip_prefix("bounded:"))
    {
        return Ok(SampleMode::Bounded(rest.parse().context("bad bound")?));
    }
    bail!("unknown mode `{text}`; expected unbounded, bounded=<n>, uniform, partitions")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Enumerate { class, size, emit } => {
            let spec = parse_class_ref(&class)?;
            let sizes = parse_sizes(&size)?;
            let levels = Levels::new(spec);
            let count = levels.count_members(&sizes)?;
            println!("class: {}", levels.spec().name());
            println!("size: {size}");
            println!("count: {count}");
            if emit {
                let table = levels.level(&sizes)?;
                for m in table.members() {
                    println!();
                    print!("{}", m.to_literal());
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Check {
            class,
            level,
            all_up_to,
            json,
        } => {
            let spec = parse_class_ref(&class)?;
            let levels = Levels::new(spec);
            let ks: Vec<usize> = match (level, all_up_to) {
                (Some(k), None) => vec![k],
                (None, Some(max)) => (2..=max).collect(),
                (None, None) => bail!("pass --level or --all-up-to"),
                _ => unreachable!(),
            };
            let mut reports = Vec::new();
            for k in ks {
                reports.push(check_basic_disjoint_amalgamation(&levels, k)?);
            }
            if json {
                let vals: Vec<_> = reports.iter().map(report_to_json).collect();
                println!("{}", serde_json::to_string_pretty(&vals)?);
            } else {
                for r in &reports {
                    println!(
                        "level {}: {} ({} families, completions {}..{})",
                        r.level,
                        if r.passed { "pass" } else { "FAIL" },
                        r.families_examined,
                        r.min_completions
                            .map(|v| v.to_string())
                            .unwrap_or("-".into()),
                        r.max_completions
                            .map(|v| v.to_string())
                            .unwrap_or("-".into()),
                    );
                    if let Some(w) = &r.witness {
                        println!("  witness family:");
                        for (mask, p) in w.family() {
                            if mask.count_ones() + 1 == w.ground_size() as u32 {
                                println!(
                                    "    subset {:#b}: {}",
                                    mask,
                                    p.to_literal().replace('\n', "; ")
                                );
                            }
                        }
                    }
                }
            }
            let failed = reports.iter().any(|r| !r.passed);
            Ok(if failed {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Sample {
            class,
            size,
            mode,
            seed,
            trials,
            emit,
        } => {
            let spec = parse_class_ref(&class)?;
            let sizes = parse_sizes(&size)?;
            let mode = parse_mode(&mode)?;
            let levels = Levels::new(spec);
            let partitions = PartitionSampler::with_max(required_partition_max(&levels, &sizes));
            let mut failures = 0u64;
            let mut first_failure = None;
            for trial in 0..trials {
                let cfg = SamplerConfig {
                    sizes: sizes.clone(),
                    mode,
                    seed,
                    trial,
                };
                match sampler::sample(&levels, &partitions, &cfg) {
                    Ok(m) => {
                        if matches!(emit, EmitMode::Literal) {
                            if trial > 0 {
                                println!();
                            }
                            print!("{}", m.to_literal());
                        }
                    }
                    Err(e @ Error::AmalgamationFailure { .. }) => {
                        failures += 1;
                        if first_failure.is_none() {
                            first_failure = Some(e.to_string());
                        }
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            if matches!(emit, EmitMode::None) || failures > 0 {
                eprintln!(
                    "trials: {trials}, completed: {}, amalgamation failures: {failures}",
                    trials - failures
                );
                if let Some(f) = first_failure {
                    eprintln!("first failure: {f}");
                }
            }
            Ok(if failures > 0 {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Eval {
            class,
            structure,
            sentence,
            named,
        } => {
            let spec = parse_class_ref(&class)?;
            let text = if structure == "-" {
                std::io::read_to_string(std::io::stdin())?
            } else {
                std::fs::read_to_string(&structure)?
            };
            let m = FinStructure::parse_literal(spec.signature(), &text)?;
            let s: Sentence = match (sentence, named) {
                (Some(se), None) => Sentence::parse(spec.signature(), &se)?,
                (None, Some(key)) => logic::named_sentence(&key, spec.signature())?,
                _ => bail!("pass exactly one of --sentence or --named"),
            };
            let value = logic::evaluate(&m, &s)?;
            println!("{value}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Experiment {
            config,
            seed,
            trials,
            sizes,
            out,
            format,
            verbose,
        } => {
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("reading config `{config}`"))?;
            let mut cfg = ExperimentConfig::from_json(&text)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(t) = trials {
                cfg.trials = t;
            }
            if let Some(sz) = sizes {
                cfg.sizes = sz
                    .split(';')
                    .map(parse_sizes)
                    .collect::<anyhow::Result<Vec<_>>>()?;
            }
            cfg.validate()?;
            let progress = |row: &amalgam_core::harness::ResultRow| {
                eprintln!(
                    "size {:?} {}: {}/{}",
                    row.size, row.sentence, row.successes, row.trials
                );
            };
            let result = match run_experiment_with_progress(
                &cfg,
                if verbose { Some(&progress) } else { None },
            ) {
                Ok(r) => r,
                Err(e @ Error::AmalgamationFailure { .. }) => {
                    eprintln!("error: {e}");
                    return Ok(ExitCode::from(2));
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    return Ok(ExitCode::from(1));
                }
            };
            let rendered = render(&result, format.into());
            match out {
                Some(path) => {
                    let mut f = std::fs::File::create(&path)
                        .with_context(|| format!("creating `{path}`"))?;
                    f.write_all(rendered.as_bytes())?;
                }
                None => print!("{rendered}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Catalog { name, out } => {
            match name {
                None => {
                    for n in CATALOG_NAMES {
                        println!("{n}");
                    }
                }
                Some(name) => {
                    let spec = parse_class_ref(&name)?;
                    let json = spec.to_json();
                    match out {
                        Some(path) => std::fs::write(&path, json)?,
                        None => println!("{json}"),
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
