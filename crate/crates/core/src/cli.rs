//! Command-line front end.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use crate::alignment::{pair_counts, render_pair_counts, DEFAULT_EM_ITERATIONS};
use crate::decoder::{transliterate, FallbackPolicy, DEFAULT_TOP_K};
use crate::evaluation::{evaluate, parse_gold, parse_system, render_report, ReportFormat};
use crate::knowledge_base::{KnowledgeBase, SEED_KB};
use crate::model::{TransliterationModel, DEFAULT_SMOOTHING_K};
use crate::phonology::phonify;
use crate::pipeline::{
    parse_annotations, process_sentence, render_decisions, AnnotationFormat, PipelineConfig,
};
use crate::training::{align_corpus, train};

pub const SEED_KB_ENV: &str = "NE_TRANSLIT_SEED_KB";

#[derive(Debug, Parser)]
#[command(
    name = "ne-translit",
    version,
    about = "English to Hindi named-entity translation and transliteration"
)]
pub struct Cli {
    /// Flat `key = value` configuration file; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Suppress informational output on stderr.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split words (one per line) into phonemes.
    Phonify {
        #[arg(long = "in")]
        input: Option<PathBuf>,
    },
    /// Align a parallel corpus and print aligned phoneme pair counts.
    AlignDump {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// Train a transliteration model from a parallel corpus.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        smoothing_k: Option<f64>,
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// Transliterate English words (one per line).
    Transliterate {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        fallback: Option<FallbackPolicy>,
        #[arg(long)]
        top_k: Option<usize>,
        /// Append per-position Hindi phoneme and composite score.
        #[arg(long)]
        trace: bool,
        #[arg(long = "in")]
        input: Option<PathBuf>,
    },
    /// Substitute annotated entities in sentences.
    Translate {
        #[arg(long)]
        kb: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        format: Option<AnnotationFormat>,
        #[arg(long)]
        fallback: Option<FallbackPolicy>,
        #[arg(long = "in")]
        input: Option<PathBuf>,
        /// Write one routing record per entity here.
        #[arg(long)]
        decisions: Option<PathBuf>,
        /// Also look up person names in the knowledge base.
        #[arg(long)]
        kb_persons: bool,
        #[arg(long)]
        top_k: Option<usize>,
    },
    /// Score system outputs against gold translations.
    Evaluate {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        format: Option<ReportFormat>,
    },
}

/// Settings read from `--config`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    pub smoothing_k: Option<f64>,
    pub top_k: Option<usize>,
    pub fallback: Option<FallbackPolicy>,
    pub em_iterations: Option<usize>,
    pub kb: Option<PathBuf>,
    pub kb_persons: Option<bool>,
    pub model: Option<PathBuf>,
    pub format: Option<AnnotationFormat>,
}

impl Config {
    /// Parses `key = value` lines; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Config::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let ctx = || format!("config line {}", idx + 1);
            let Some((key, value)) = line.split_once('=') else {
                bail!("{}: expected key = value", ctx());
            };
            let (key, value) = (key.trim(), value.trim());
            match key {
                "smoothing_k" => cfg.smoothing_k = Some(value.parse().with_context(ctx)?),
                "top_k" => cfg.top_k = Some(value.parse().with_context(ctx)?),
                "em_iterations" => cfg.em_iterations = Some(value.parse().with_context(ctx)?),
                "kb_persons" => cfg.kb_persons = Some(value.parse().with_context(ctx)?),
                "fallback" => {
                    cfg.fallback = Some(
                        value
                            .parse()
                            .map_err(anyhow::Error::msg)
                            .with_context(ctx)?,
                    )
                }
                "format" => {
                    cfg.format = Some(
                        value
                            .parse()
                            .map_err(anyhow::Error::msg)
                            .with_context(ctx)?,
                    )
                }
                "kb" => cfg.kb = Some(PathBuf::from(value)),
                "model" => cfg.model = Some(PathBuf::from(value)),
                other => bail!("{}: unknown key {other:?}", ctx()),
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text)
    }
}

fn check_top_k(top_k: usize) -> Result<usize> {
    if top_k == 0 {
        bail!("top_k must be at least 1");
    }
    Ok(top_k)
}

fn check_iterations(n: usize) -> Result<usize> {
    if n == 0 {
        bail!("em_iterations must be at least 1");
    }
    Ok(n)
}

fn read_input(path: Option<&Path>) -> Result<String> {
    match path {
        Some(p) => fs::read_to_string(p).with_context(|| format!("reading {}", p.display())),
        None => {
            let mut s = String::new();
            io::stdin()
                .read_to_string(&mut s)
                .context("reading stdin")?;
            Ok(s)
        }
    }
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_model(path: &Path) -> Result<TransliterationModel> {
    TransliterationModel::load(path).with_context(|| format!("loading model {}", path.display()))
}

fn load_kb(flag: Option<PathBuf>, allow_person: bool) -> Result<KnowledgeBase> {
    let path = flag.or_else(|| std::env::var_os(SEED_KB_ENV).map(PathBuf::from));
    match path {
        Some(p) => KnowledgeBase::load(&p, allow_person)
            .with_context(|| format!("loading knowledge base {}", p.display())),
        None => Ok(KnowledgeBase::parse(SEED_KB, allow_person)?),
    }
}

fn input_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .map(|l| l.trim_end_matches('\r'))
        .enumerate()
        .map(|(i, l)| (i + 1, l))
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    match cli.command {
        Command::Phonify { input } => {
            let text = read_input(input.as_deref())?;
            for (line_no, line) in input_lines(&text) {
                let word = line.trim();
                if word.is_empty() {
                    continue;
                }
                let seqs = word
                    .split_whitespace()
                    .map(|t| phonify(t).map(|s| s.to_string()))
                    .collect::<Result<Vec<_>, _>>()
                    .with_context(|| format!("line {line_no}: {word:?}"))?;
                writeln!(out, "{word}\t{}", seqs.join(" "))?;
            }
        }
        Command::AlignDump { corpus, iterations } => {
            let iterations = check_iterations(
                iterations
                    .or(cfg.em_iterations)
                    .unwrap_or(DEFAULT_EM_ITERATIONS),
            )?;
            let aligned = align_corpus(&read_file(&corpus)?, iterations)
                .with_context(|| format!("aligning {}", corpus.display()))?;
            if !cli.quiet {
                for w in &aligned.warnings {
                    eprintln!("warning: line {}: {}", w.line, w.message);
                }
            }
            out.write_all(render_pair_counts(&pair_counts(&aligned.em.align_all())).as_bytes())?;
        }
        Command::Train {
            corpus,
            out: model_path,
            smoothing_k,
            iterations,
        } => {
            let k = smoothing_k
                .or(cfg.smoothing_k)
                .unwrap_or(DEFAULT_SMOOTHING_K);
            let iterations = check_iterations(
                iterations
                    .or(cfg.em_iterations)
                    .unwrap_or(DEFAULT_EM_ITERATIONS),
            )?;
            let trained = train(&read_file(&corpus)?, k, iterations)
                .with_context(|| format!("training on {}", corpus.display()))?;
            trained
                .model
                .save(&model_path)
                .with_context(|| format!("writing {}", model_path.display()))?;
            if !cli.quiet {
                for w in &trained.warnings {
                    eprintln!("warning: line {}: {}", w.line, w.message);
                }
            }
            writeln!(
                out,
                "entries\t{}\ntraining_pairs\t{}\nskipped\t{}\ne_vocab_size\t{}\nh_vocab_size\t{}",
                trained.entries,
                trained.training_pairs,
                trained.warnings.len(),
                trained.model.e_vocabulary().len(),
                trained.model.h_vocabulary().len()
            )?;
        }
        Command::Transliterate {
            model,
            fallback,
            top_k,
            trace,
            input,
        } => {
            let Some(model_path) = model.or(cfg.model) else {
                bail!("no model given (use --model or the model config key)");
            };
            let m = load_model(&model_path)?;
            let fallback = fallback.or(cfg.fallback).unwrap_or_default();
            let top_k = check_top_k(top_k.or(cfg.top_k).unwrap_or(DEFAULT_TOP_K))?;
            let text = read_input(input.as_deref())?;
            for (line_no, line) in input_lines(&text) {
                let word = line.trim();
                if word.is_empty() {
                    continue;
                }
                let mut outputs = Vec::new();
                let mut score = Some(0.0);
                let mut steps = Vec::new();
                for token in word.split_whitespace() {
                    let t = transliterate(&m, token, fallback, top_k)
                        .with_context(|| format!("line {line_no}: {token:?}"))?;
                    match &t.decoding {
                        Some(d) => {
                            score = score.map(|s| s + d.score);
                            steps.extend(
                                d.hindi_sequence
                                    .iter()
                                    .zip(&d.per_position)
                                    .map(|(h, p)| format!("{h}:{p:.6e}")),
                            );
                        }
                        None => score = None,
                    }
                    outputs.push(t.output);
                }
                let score = score.map_or_else(|| "-".to_string(), |s| format!("{s:.6}"));
                write!(out, "{word}\t{}\t{score}", outputs.join(" "))?;
                if trace && !steps.is_empty() {
                    write!(out, "\t{}", steps.join(" "))?;
                }
                writeln!(out)?;
            }
        }
        Command::Translate {
            kb,
            model,
            format,
            fallback,
            input,
            decisions,
            kb_persons,
            top_k,
        } => {
            let allow_person = kb_persons || cfg.kb_persons.unwrap_or(false);
            let kb = load_kb(kb.or(cfg.kb), allow_person)?;
            let m = model.or(cfg.model).map(|p| load_model(&p)).transpose()?;
            let format = format.or(cfg.format).unwrap_or_default();
            let config = PipelineConfig {
                fallback: fallback
                    .or(cfg.fallback)
                    .unwrap_or(FallbackPolicy::CopySource),
                top_k: check_top_k(top_k.or(cfg.top_k).unwrap_or(DEFAULT_TOP_K))?,
            };
            let text = read_input(input.as_deref())?;
            let mut records = String::new();
            for (line_no, line) in input_lines(&text) {
                let sentence =
                    parse_annotations(line, format).with_context(|| format!("line {line_no}"))?;
                let processed = process_sentence(&sentence, &kb, m.as_ref(), &config)
                    .with_context(|| format!("line {line_no}"))?;
                writeln!(out, "{}", processed.substituted)?;
                records.push_str(&render_decisions(line_no, &processed));
            }
            if let Some(path) = decisions {
                fs::write(&path, records).with_context(|| format!("writing {}", path.display()))?;
            }
        }
        Command::Evaluate {
            gold,
            system,
            format,
        } => {
            let gold_records = parse_gold(&read_file(&gold)?)
                .with_context(|| format!("reading {}", gold.display()))?;
            let outputs = parse_system(&read_file(&system)?);
            let report = evaluate(&gold_records, &outputs)?;
            out.write_all(render_report(&report, format.unwrap_or_default()).as_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Runs a command line, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) if is_broken_pipe(&e) => 0,
        Err(e) => {
            eprintln!("error: {}", one_line(&format!("{e:#}")));
            1
        }
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.downcast_ref::<io::Error>()
        .is_some_and(|io| io.kind() == io::ErrorKind::BrokenPipe)
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}
