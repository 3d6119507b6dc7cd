//! The `zeroshot` command line.
//!
//! Exit status: 0 on success, 1 for usage or validation failures, 2 when the
//! filesystem lets us down.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::classifier::{classify_corpus, ClassificationConfig, CorpusOptions};
use crate::ensemble::{ensemble_corpus, EnsembleConfig, FusionMode};
use crate::error::Error;
use crate::evaluation::{
    coverage_from_decisions, decile_thresholds, frequency_report, join_sample, mean_top_prob_stats,
    per_class_accuracy, read_sample_plan, stratified_sample, threshold_sweep, write_sample_plan,
    ScoredItem,
};
use crate::io::decisions::{read_decisions, write_decisions, DecisionRecord};
use crate::io::embeddings::{read_embeddings_with, ReadOptions};
use crate::io::manifest::read_manifest;
use crate::io::verdicts::{read_verdicts, Judgement};
use crate::labels::{PromptTemplate, Taxonomy};
use crate::report;
use crate::serve::{self, ReviewState, ServeConfig};
use crate::synth::{self, SynthSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_IO: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "zeroshot",
    version,
    about = "Zero-shot scene classification over precomputed embeddings"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Expand a label list into prompts and dump them as TSV for the encoder.
    Prompts(PromptsArgs),
    /// Classify every manifest entry.
    Classify(ClassifyArgs),
    /// Classify with caption fusion (weighted unless --mode says otherwise).
    Ensemble(ClassifyArgs),
    /// Per-class prediction counts and the coverage curve of a decision file.
    Freq(FreqArgs),
    /// Draw a seeded per-class sample of predictions for manual review.
    Sample(SampleArgs),
    /// Hit/error rates of a reviewed sample across thresholds.
    Sweep(SweepArgs),
    /// Per-class accuracy and mean top probabilities of a reviewed sample.
    Report(ReportArgs),
    /// Run the annotation service.
    Serve(ServeArgs),
    /// Write a synthetic corpus with planted labels.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Image,
    Weighted,
    Conditional,
}

#[derive(Debug, Args)]
pub struct PromptsArgs {
    #[arg(long)]
    pub labels: PathBuf,
    /// `natural`, `raw`, or a pattern containing {label}.
    #[arg(long, default_value = "natural")]
    pub template: PromptTemplate,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub image_emb: PathBuf,
    /// Caption embeddings; required for the fusion modes.
    #[arg(long)]
    pub text_emb: Option<PathBuf>,
    #[arg(long)]
    pub labels: PathBuf,
    /// Prompt embeddings keyed by raw label or by prompt text.
    #[arg(long)]
    pub label_emb: PathBuf,
    #[arg(long, default_value = "natural")]
    pub template: PromptTemplate,
    #[arg(long, default_value_t = 100.0)]
    pub scale: f64,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    #[arg(long, default_value_t = 5)]
    pub top_k: usize,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, default_value_t = 0.8)]
    pub w_image: f64,
    #[arg(long, default_value_t = 0.6)]
    pub gate: f64,
    #[arg(long, default_value_t = 0.0)]
    pub text_sim_threshold: f64,
    /// Worker threads, 0 for one per core.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    #[arg(long, default_value_t = 256)]
    pub batch_size: usize,
    #[arg(long)]
    pub skip_missing: bool,
    #[arg(long)]
    pub renormalize: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FreqArgs {
    #[arg(long)]
    pub decisions: PathBuf,
    /// Class frequency table (CSV).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Coverage curve (CSV).
    #[arg(long)]
    pub coverage_out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub thresholds: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub decisions: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub top_classes: usize,
    #[arg(long, default_value_t = 100)]
    pub per_class: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReviewedArgs {
    #[arg(long)]
    pub plan: PathBuf,
    #[arg(long)]
    pub decisions: PathBuf,
    #[arg(long)]
    pub verdicts: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub reviewed: ReviewedArgs,
    #[arg(long, value_delimiter = ',')]
    pub thresholds: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.0)]
    pub min_coverage: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub reviewed: ReviewedArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub plan: PathBuf,
    #[arg(long)]
    pub decisions: PathBuf,
    /// Verdict log; created on the first verdict.
    #[arg(long)]
    pub verdicts: PathBuf,
    #[arg(long)]
    pub image_root: PathBuf,
    /// Resolves image paths; without it images are served by id.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub ui_dir: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 5000)]
    pub items: usize,
    #[arg(long, default_value_t = 64)]
    pub dim: usize,
    #[arg(long, default_value_t = 20)]
    pub classes: usize,
    #[arg(long, default_value_t = 0.6)]
    pub planted: f64,
    #[arg(long, default_value_t = 2.0)]
    pub image_noise: f64,
    #[arg(long, default_value_t = 1.5)]
    pub text_noise: f64,
    #[arg(long, default_value_t = 1.0)]
    pub caption_fraction: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// A failed command and the exit status it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self {
            code: if e.is_io() { EXIT_IO } else { EXIT_INVALID },
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self {
            code: EXIT_IO,
            message: e.to_string(),
        }
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_INVALID,
        message: message.into(),
    }
}

type CmdResult = Result<(), Failure>;

fn require(paths: &[&Path]) -> CmdResult {
    match paths.iter().find(|p| !p.exists()) {
        Some(p) => Err(invalid(format!("input not found: {}", p.display()))),
        None => Ok(()),
    }
}

/// Parses `args` (program name first), runs the command and returns the exit
/// status. Normal output goes to `out`, diagnostics to stderr.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

pub fn execute(command: Command, out: &mut dyn Write) -> CmdResult {
    match command {
        Command::Prompts(a) => cmd_prompts(a, out),
        Command::Classify(a) => cmd_classify(a, ModeArg::Image, out),
        Command::Ensemble(a) => cmd_classify(a, ModeArg::Weighted, out),
        Command::Freq(a) => cmd_freq(a, out),
        Command::Sample(a) => cmd_sample(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
        Command::Report(a) => cmd_report(a, out),
        Command::Serve(a) => cmd_serve(a, out),
        Command::Synth(a) => cmd_synth(a, out),
    }
}

fn cmd_prompts(a: PromptsArgs, out: &mut dyn Write) -> CmdResult {
    require(&[&a.labels])?;
    let tax = Taxonomy::load(&a.labels, &a.template)?;
    tax.write_prompt_dump(&a.out)?;
    writeln!(out, "wrote {} prompts to {}", tax.len(), a.out.display())?;
    Ok(())
}

fn cmd_classify(a: ClassifyArgs, default_mode: ModeArg, out: &mut dyn Write) -> CmdResult {
    let mode = a.mode.unwrap_or(default_mode);
    let mut inputs = vec![
        a.manifest.as_path(),
        a.image_emb.as_path(),
        a.labels.as_path(),
        a.label_emb.as_path(),
    ];
    if mode != ModeArg::Image {
        let Some(t) = &a.text_emb else {
            return Err(invalid(
                format!("--text-emb is required in {mode:?} mode").to_lowercase(),
            ));
        };
        inputs.push(t);
    }
    require(&inputs)?;

    let ccfg = ClassificationConfig {
        scale: a.scale,
        threshold: a.threshold,
        top_k: a.top_k,
    };
    ccfg.validate()?;
    let opts = CorpusOptions {
        workers: a.workers,
        batch_size: a.batch_size,
        skip_missing: a.skip_missing,
    };
    let read = ReadOptions {
        renormalize: a.renormalize,
    };
    let manifest = read_manifest(&a.manifest)?;
    let prompts = read_embeddings_with(&a.label_emb, read)?;
    let tax = Taxonomy::load(&a.labels, &a.template)?.attach_prompt_embeddings(&prompts)?;
    let images = read_embeddings_with(&a.image_emb, read)?;

    let (decisions, skipped, without_text) = match mode {
        ModeArg::Image => {
            let run = classify_corpus(&manifest, &images, &tax, &ccfg, &opts)?;
            (run.decisions, run.skipped, None)
        }
        ModeArg::Weighted | ModeArg::Conditional => {
            let ecfg = EnsembleConfig {
                w_image: a.w_image,
                gate: a.gate,
                text_sim_threshold: a.text_sim_threshold,
                mode: if mode == ModeArg::Weighted {
                    FusionMode::Weighted
                } else {
                    FusionMode::Conditional
                },
            };
            ecfg.validate()?;
            let texts = read_embeddings_with(a.text_emb.as_ref().expect("checked above"), read)?;
            let run = ensemble_corpus(&manifest, &images, &texts, &tax, &ccfg, &ecfg, &opts)?;
            (run.decisions, run.skipped, Some(run.without_text))
        }
    };
    write_decisions(&decisions, &a.out)?;

    let accepted = decisions.iter().filter(|d| d.accepted).count();
    let total = decisions.len();
    let pct = if total == 0 {
        0.0
    } else {
        100.0 * accepted as f64 / total as f64
    };
    writeln!(
        out,
        "classified {accepted}/{total} ({pct:.1}%) at threshold {:.2}",
        ccfg.threshold
    )?;
    if let Some(n) = without_text {
        writeln!(out, "without caption: {n}")?;
    }
    if !skipped.is_empty() {
        writeln!(out, "skipped (no embedding): {}", skipped.len())?;
    }
    Ok(())
}

fn cmd_freq(a: FreqArgs, out: &mut dyn Write) -> CmdResult {
    require(&[&a.decisions])?;
    let decisions = read_decisions(&a.decisions)?;
    let freq = frequency_report(&decisions)?;
    for (label, n) in &freq {
        writeln!(out, "{label}\t{n}")?;
    }
    if let Some(p) = &a.out {
        report::write_class_csv(&freq, None, p)?;
    }
    if let Some(p) = &a.coverage_out {
        let thresholds = a.thresholds.clone().unwrap_or_else(decile_thresholds);
        report::write_coverage_csv(&coverage_from_decisions(&decisions, &thresholds)?, p)?;
    }
    Ok(())
}

fn cmd_sample(a: SampleArgs, out: &mut dyn Write) -> CmdResult {
    require(&[&a.decisions])?;
    let decisions = read_decisions(&a.decisions)?;
    let (plan, _warnings) = stratified_sample(&decisions, a.seed, a.top_classes, a.per_class)?;
    write_sample_plan(&plan, &a.out)?;
    writeln!(
        out,
        "sampled {} items to {}",
        plan.items.len(),
        a.out.display()
    )?;
    Ok(())
}

fn load_reviewed(a: &ReviewedArgs) -> Result<(Vec<ScoredItem>, Vec<DecisionRecord>), Failure> {
    require(&[&a.plan, &a.decisions, &a.verdicts])?;
    let plan = read_sample_plan(&a.plan)?;
    let decisions = read_decisions(&a.decisions)?;
    let verdicts = read_verdicts(&a.verdicts)?;
    let items = join_sample(&plan, &decisions, &verdicts)?;
    Ok((items, decisions))
}

fn cmd_sweep(a: SweepArgs, out: &mut dyn Write) -> CmdResult {
    let (items, _) = load_reviewed(&a.reviewed)?;
    let thresholds = a.thresholds.clone().unwrap_or_else(decile_thresholds);
    let table = threshold_sweep(&items, &thresholds)?;
    write!(out, "{}", report::format_sweep_table(&table))?;
    match table.optimal_threshold(a.min_coverage) {
        Ok(best) => writeln!(
            out,
            "optimal threshold: {:.4} (ratio {:.4}, coverage {:.4})",
            best.threshold,
            best.ratio.unwrap_or(f64::NAN),
            best.coverage(table.total)
        )?,
        Err(e) => writeln!(out, "optimal threshold: none ({e})")?,
    }
    if let Some(p) = &a.out {
        report::write_sweep_csv(&table, p)?;
    }
    Ok(())
}

fn cmd_report(a: ReportArgs, out: &mut dyn Write) -> CmdResult {
    let (items, decisions) = load_reviewed(&a.reviewed)?;
    let judged: Vec<ScoredItem> = items
        .into_iter()
        .filter(|i| matches!(i.judgement, Some(Judgement::Hit | Judgement::Miss)))
        .collect();
    let acc = per_class_accuracy(&judged)?;
    let freq: Vec<(String, usize)> = frequency_report(&decisions)?
        .into_iter()
        .filter(|(l, _)| acc.classes.iter().any(|c| &c.label == l))
        .collect();
    for row in report::class_rows(&freq, Some(&acc)) {
        writeln!(out, "{}", row.join("\t"))?;
    }
    match mean_top_prob_stats(&judged) {
        Ok((h, m)) => writeln!(out, "mean top probability: hits {h:.4}, misses {m:.4}")?,
        Err(e) => writeln!(out, "mean top probability: undefined ({e})")?,
    }
    if let Some(p) = &a.out {
        report::write_class_csv(&freq, Some(&acc), p)?;
    }
    Ok(())
}

fn cmd_serve(a: ServeArgs, out: &mut dyn Write) -> CmdResult {
    require(&[&a.plan, &a.decisions, &a.image_root])?;
    if let Some(m) = &a.manifest {
        require(&[m])?;
    }
    let state = ReviewState::load(&ServeConfig {
        plan: a.plan.clone(),
        decisions: a.decisions.clone(),
        verdicts: a.verdicts.clone(),
        image_root: a.image_root.clone(),
        manifest: a.manifest.clone(),
        ui_dir: a.ui_dir.clone(),
    })?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?;
    runtime.block_on(async {
        let listener = match tokio::net::TcpListener::bind((a.host.as_str(), a.port)).await {
            Ok(l) => l,
            Err(e) if e.kind() == std::io::ErrorKind::AddrInUse => {
                return Err(invalid(format!("{}:{} is already in use", a.host, a.port)));
            }
            Err(e) => return Err(e.into()),
        };
        writeln!(out, "listening on http://{}", listener.local_addr()?)?;
        out.flush()?;
        serve::run(listener, state).await?;
        Ok(())
    })
}

fn cmd_synth(a: SynthArgs, out: &mut dyn Write) -> CmdResult {
    let spec = SynthSpec {
        items: a.items,
        dim: a.dim,
        classes: a.classes,
        planted_fraction: a.planted,
        image_noise: a.image_noise,
        text_noise: a.text_noise,
        caption_fraction: a.caption_fraction,
        seed: a.seed,
    };
    let corpus = synth::generate(&spec)?;
    corpus.write_to(&a.out)?;
    writeln!(
        out,
        "wrote {} items ({} planted) over {} classes to {}",
        corpus.manifest.len(),
        corpus.planted.iter().filter(|p| p.is_some()).count(),
        corpus.labels.len(),
        a.out.display()
    )?;
    Ok(())
}
