use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use coop::cli::{run_diagnose, run_rank_eval, run_summarize, RunConfig};
use coop::coopsearch::OverlapMetric;
use coop::textmetrics::RefMode;

#[derive(Parser)]
#[command(name = "coop", version, about = "Convex aggregation of review latent vectors for opinion summarization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate summaries with a selection method
    Summarize(RunArgs),
    /// Latent-space diagnostics: shrinkage curve and correlations
    Diagnose(RunArgs),
    /// Rank method selections within the gold-ROUGE candidate ordering
    RankEval(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Entities JSONL: {"entity_id", "reviews": [...], "summary"/"summaries"}
    #[arg(long)]
    input: PathBuf,

    /// Method spec; rank-eval accepts a comma-separated list.
    /// Grammar: simpleavg | coop-exact | coop-greedy:{forward|backward} |
    /// coop-beam:{forward|backward}:K | ivw | rescale:ALPHA | extractive:K |
    /// random:SEED
    #[arg(long, default_value = "coop-exact")]
    method: String,

    /// Overlap metric for the search objective
    #[arg(long, value_parser = parse_overlap, default_value = "rouge1")]
    overlap: OverlapMetric,

    /// Multi-reference combination mode
    #[arg(long, value_parser = parse_ref_mode, default_value = "average")]
    ref_mode: RefMode,

    /// External latent vectors JSONL; toy encoder is used when absent
    #[arg(long)]
    latents: Option<PathBuf>,

    /// Toy vocabulary file, one word per line (default: corpus vocabulary)
    #[arg(long)]
    toy_vocab: Option<PathBuf>,

    /// Toy embedding dimension
    #[arg(long, default_value_t = 64)]
    toy_dim: usize,

    /// Decoded length per unit of latent norm
    #[arg(long, default_value_t = 2.0)]
    kappa: f64,

    /// Maximum decoded summary length
    #[arg(long, default_value_t = 48)]
    max_len: usize,

    /// Block first-person pronouns during decoding
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    block_pronouns: bool,

    /// Largest N for exhaustive power-set enumeration
    #[arg(long, default_value_t = 16)]
    max_exact_n: usize,

    /// Worker threads (0 = number of cores); never affects output bytes
    #[arg(long, default_value_t = 0)]
    workers: usize,

    /// Seed for toy embeddings, sampling, and the random baseline
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

fn parse_overlap(s: &str) -> Result<OverlapMetric, String> {
    match s {
        "rouge1" => Ok(OverlapMetric::Rouge1),
        "rouge2" => Ok(OverlapMetric::Rouge2),
        "rougeL" | "rougel" => Ok(OverlapMetric::RougeL),
        _ => Err(format!("unknown overlap metric {s:?} (rouge1|rouge2|rougeL)")),
    }
}

fn parse_ref_mode(s: &str) -> Result<RefMode, String> {
    match s {
        "average" => Ok(RefMode::Average),
        "max" => Ok(RefMode::Max),
        "concat" => Ok(RefMode::Concat),
        _ => Err(format!("unknown ref mode {s:?} (average|max|concat)")),
    }
}

impl RunArgs {
    fn into_config(self) -> RunConfig {
        RunConfig {
            method: self.method,
            overlap: self.overlap,
            ref_mode: self.ref_mode,
            input: self.input,
            latents: self.latents,
            toy_vocab: self.toy_vocab,
            toy_dim: self.toy_dim,
            kappa: self.kappa,
            max_len: self.max_len,
            block_pronouns: self.block_pronouns,
            max_exact_n: self.max_exact_n,
            seed: self.seed,
            workers: self.workers,
            out: self.out,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Summarize(args) => run_summarize(&args.into_config()),
        Command::Diagnose(args) => run_diagnose(&args.into_config()),
        Command::RankEval(args) => run_rank_eval(&args.into_config()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let obj = serde_json::json!({"error": err.to_string()});
            eprintln!("{obj}");
            ExitCode::FAILURE
        }
    }
}
