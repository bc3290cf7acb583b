use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use replyscope_core::corpus::parse::Strictness;
use replyscope_core::error::Result;

use replyscope_cli::commands::{
    self, cmd_calibrate, cmd_describe, cmd_ingest, cmd_macro, cmd_meso, cmd_micro, cmd_report,
    cmd_simulate, SimulateOpts,
};
use replyscope_cli::{init_workers, RunConfig};

/// Three-level analysis of threaded conversations with precomputed
/// per-tweet classifier scores.
#[derive(Debug, Parser)]
#[command(name = "replyscope", version, about, max_term_width = 100)]
struct Cli {
    /// JSON run configuration; flags below override individual fields.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Corpus JSONL file.
    #[arg(long, global = true, value_name = "FILE")]
    corpus: Option<PathBuf>,

    /// Output directory for results and the run manifest.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Bootstrap replicates for the matched analysis.
    #[arg(long, global = true)]
    bootstrap: Option<usize>,

    /// Smallest tree the per-tree models accept.
    #[arg(long, global = true)]
    min_tree_size: Option<usize>,

    /// First day of the analysis span (YYYY-MM-DD).
    #[arg(long, global = true)]
    span_start: Option<chrono::NaiveDate>,

    /// Last day of the analysis span, inclusive.
    #[arg(long, global = true)]
    span_end: Option<chrono::NaiveDate>,

    /// First day of the middle period.
    #[arg(long, global = true)]
    rg_start: Option<chrono::NaiveDate>,

    /// First day of the late period.
    #[arg(long, global = true)]
    ri_start: Option<chrono::NaiveDate>,

    /// Largest outcome lag order considered.
    #[arg(long, global = true)]
    max_p: Option<usize>,

    /// Largest predictor lag order considered.
    #[arg(long, global = true)]
    max_q: Option<usize>,

    /// How to treat malformed corpus lines.
    #[arg(long, global = true, value_parser = ["strict", "quarantine"])]
    strictness: Option<String>,

    /// Validate the configuration and inputs, then stop.
    #[arg(long, global = true)]
    dry_run: bool,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Conversation chains carrying the planted effect.
    #[arg(long, default_value_t = 400)]
    trees: usize,
    #[arg(long, default_value_t = 8)]
    chain_min: usize,
    #[arg(long, default_value_t = 16)]
    chain_max: usize,
    /// Trees without reply triples, for volume.
    #[arg(long, default_value_t = 50)]
    backgrounds: usize,
    #[arg(long, default_value_t = 20)]
    background_len: usize,
    /// Calendar days the corpus spreads over.
    #[arg(long, default_value_t = 60)]
    days: usize,
    /// Treated share at a neutral confounder value.
    #[arg(long, default_value_t = 0.25)]
    base_rate: f64,
    /// Confounder-to-treatment log-odds slope.
    #[arg(long, default_value_t = 0.9)]
    confounding: f64,
    /// Planted treatment effect.
    #[arg(long, default_value_t = 0.1)]
    att: f64,
    /// Score false positive rate; nonzero writes a degraded copy.
    #[arg(long, default_value_t = 0.0)]
    fpr: f64,
    /// Score false negative rate.
    #[arg(long, default_value_t = 0.0)]
    fnr: f64,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Parse and validate a corpus, writing the cleaned copy.
    Ingest,
    /// Summarize corpus shape and coverage.
    Describe,
    /// Fit per-dimension treatment thresholds from labeled scores.
    Calibrate {
        /// JSONL rows: {"dimension": ..., "score": ..., "label": ...}.
        #[arg(long, value_name = "FILE")]
        labels: PathBuf,
    },
    /// Matched reply-pair analysis with error-aware intervals.
    Micro,
    /// Per-tree lag models pooled across trees, with moderators.
    Meso,
    /// Corpus-wide daily lag models with period interactions.
    Macro,
    /// Generate a synthetic corpus with known ground truth.
    Simulate(SimulateArgs),
    /// Render trend and coefficient plots from earlier runs.
    Report,
}

fn build_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(v) = &cli.corpus {
        cfg.corpus = Some(v.clone());
    }
    if let Some(v) = &cli.out {
        cfg.out = v.clone();
    }
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    if let Some(v) = cli.bootstrap {
        cfg.bootstrap = v;
    }
    if let Some(v) = cli.min_tree_size {
        cfg.min_tree_size = v;
    }
    if let Some(v) = cli.span_start {
        cfg.span_start = v;
    }
    if let Some(v) = cli.span_end {
        cfg.span_end = v;
    }
    if let Some(v) = cli.rg_start {
        cfg.rg_start = v;
    }
    if let Some(v) = cli.ri_start {
        cfg.ri_start = v;
    }
    if let Some(v) = cli.max_p {
        cfg.max_p = v;
    }
    if let Some(v) = cli.max_q {
        cfg.max_q = v;
    }
    if let Some(v) = &cli.strictness {
        cfg.strictness = match v.as_str() {
            "quarantine" => Strictness::Quarantine,
            _ => Strictness::Strict,
        };
    }
    Ok(cfg)
}

// A dry run does every check the real run would fail fast on: config
// consistency, referenced files, and a full parse of the corpus.
fn dry_run(cfg: &RunConfig, cmd: &Cmd) -> Result<()> {
    let needs_corpus = !matches!(cmd, Cmd::Simulate(_) | Cmd::Calibrate { .. });
    cfg.validate(needs_corpus)?;
    if needs_corpus {
        let (corpus, report) = commands::load_corpus(cfg)?;
        println!(
            "dry run ok: corpus parses ({} tweets in {} trees, {} quarantined)",
            report.tweets_ingested,
            corpus.trees.len(),
            report.quarantined.len()
        );
    } else if let Cmd::Calibrate { labels } = cmd {
        if !labels.is_file() {
            return Err(replyscope_core::error::CoreError::Config(format!(
                "labels file {} does not exist",
                labels.display()
            )));
        }
        println!("dry run ok: configuration and label file are in place");
    } else {
        println!("dry run ok: configuration is consistent");
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = build_config(cli)?;
    init_workers();
    if cli.dry_run {
        return dry_run(&cfg, &cli.command);
    }
    match &cli.command {
        Cmd::Ingest => {
            let report = cmd_ingest(&cfg)?;
            println!(
                "ingested {} tweets in {} trees ({} timestamp repairs, {} lines quarantined)",
                report.tweets_ingested,
                report.n_trees,
                report.timestamp_repairs,
                report.quarantined.len()
            );
        }
        Cmd::Describe => {
            let summary = cmd_describe(&cfg)?;
            let text = serde_json::to_string_pretty(&summary)
                .expect("summary serializes");
            println!("{text}");
        }
        Cmd::Calibrate { labels } => {
            let thresholds = cmd_calibrate(&cfg, labels)?;
            for (dim, t) in &thresholds {
                println!("{dim}\t{t}");
            }
        }
        Cmd::Micro => {
            let rows = cmd_micro(&cfg)?;
            let ok = rows.iter().filter(|r| r.status == "ok").count();
            println!(
                "micro: {} treatment x outcome cells, {} estimated, {} skipped",
                rows.len(),
                ok,
                rows.len() - ok
            );
        }
        Cmd::Meso => {
            let out = cmd_meso(&cfg)?;
            println!(
                "meso: {} trees fit, {} per-tree fits excluded, {} pooled rows, {} moderator rows",
                out.trees_used, out.fit_failures, out.pooled_rows, out.metaregression_rows
            );
        }
        Cmd::Macro => {
            let rows = cmd_macro(&cfg)?;
            let reliable = rows.iter().filter(|r| r.reliable).count();
            println!(
                "macro: {} coefficients across {} outcomes, {} reliable",
                rows.len(),
                cfg.outcomes.len(),
                reliable
            );
        }
        Cmd::Simulate(args) => {
            let opts = SimulateOpts {
                trees: args.trees,
                chain_min: args.chain_min,
                chain_max: args.chain_max,
                backgrounds: args.backgrounds,
                background_len: args.background_len,
                days: args.days,
                base_rate: args.base_rate,
                confounding: args.confounding,
                att: args.att,
                fpr: args.fpr,
                fnr: args.fnr,
            };
            let truth = cmd_simulate(&cfg, &opts)?;
            println!(
                "simulated {} trees / {} tweets; {} reply triples ({} treated), planted effect {}",
                truth.n_trees, truth.n_tweets, truth.planted_triples, truth.treated_triples,
                truth.att
            );
        }
        Cmd::Report => {
            let warnings = cmd_report(&cfg)?;
            println!(
                "report written to {} ({} warnings)",
                cfg.out.display(),
                warnings.len()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_class() as u8)
        }
    }
}
