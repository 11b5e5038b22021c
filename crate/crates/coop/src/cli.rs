//! Ingestion, run configuration, and the batch operations behind the CLI
//! subcommands: summarize, diagnose, and rank-eval.
//!
//! Outputs embed the resolved configuration so a run can be reproduced from
//! its own artifacts. The worker count is excluded from that embedding (and
//! from every output byte): parallel reductions use the total candidate
//! order, so results are identical at any worker count.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autoencoder::{
    load_external_latents, Encoder, ToyAutoencoder, DEFAULT_BLOCKLIST,
};
use crate::coopsearch::{Method, Objective, OverlapMetric};
use crate::diagnostics::{
    norm_quality_correlation, overlap_rouge_correlation, ranking_quality, shrinkage_curve,
    EntityData, OverlapCorrelation, RankingReport, ShrinkageReport,
};
use crate::error::{Error, Result};
use crate::latentspace::{l2_norm, LatentVector};
use crate::textmetrics::{rouge_l, rouge_n, tokenize, NgramLM, RefMode, TokenSeq};

/// One entity's raw reviews and optional gold summaries.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntityBatch {
    pub entity_id: String,
    pub reviews: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gold_summaries: Vec<String>,
}

#[derive(Deserialize)]
struct EntityRecord {
    entity_id: String,
    reviews: Vec<String>,
    #[serde(default)]
    summary: Option<String>,
    #[serde(default)]
    summaries: Option<Vec<String>>,
}

/// Reads one `EntityBatch` per JSONL line, preserving input order.
pub fn ingest_entities(path: &Path) -> Result<Vec<EntityBatch>> {
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    let mut out: Vec<EntityBatch> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: EntityRecord = serde_json::from_str(&line).map_err(|e| Error::Malformed {
            path: path.display().to_string(),
            line: lineno + 1,
            message: e.to_string(),
        })?;
        if record.reviews.is_empty() {
            return Err(Error::Malformed {
                path: path.display().to_string(),
                line: lineno + 1,
                message: format!("entity {:?} has no reviews", record.entity_id),
            });
        }
        if !seen.insert(record.entity_id.clone()) {
            return Err(Error::DuplicateEntity(record.entity_id));
        }
        let mut gold_summaries = record.summaries.unwrap_or_default();
        if let Some(s) = record.summary {
            gold_summaries.insert(0, s);
        }
        out.push(EntityBatch {
            entity_id: record.entity_id,
            reviews: record.reviews,
            gold_summaries,
        });
    }
    Ok(out)
}

/// Fully resolved run configuration, embedded in every output for
/// provenance. `workers` never changes any output byte, so it is not
/// serialized.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub method: String,
    pub overlap: OverlapMetric,
    pub ref_mode: RefMode,
    pub input: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub latents: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub toy_vocab: Option<PathBuf>,
    pub toy_dim: usize,
    pub kappa: f64,
    pub max_len: usize,
    pub block_pronouns: bool,
    pub max_exact_n: usize,
    pub seed: u64,
    #[serde(skip)]
    pub workers: usize,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.toy_dim == 0 {
            return Err(Error::Config("toy dimension must be positive".into()));
        }
        if self.kappa <= 0.0 {
            return Err(Error::Config("kappa must be positive".into()));
        }
        if self.max_exact_n == 0 || self.max_exact_n > 63 {
            return Err(Error::Config("max-exact-n must be in 1..=63".into()));
        }
        for spec in self.method.split(',') {
            spec.parse::<Method>()?;
        }
        Ok(())
    }

    pub fn objective(&self) -> Objective {
        Objective {
            metric: self.overlap,
            ref_mode: self.ref_mode,
        }
    }

    pub fn methods(&self) -> Result<Vec<Method>> {
        self.method.split(',').map(|s| s.parse()).collect()
    }
}

fn build_pool(workers: usize) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if workers > 0 {
        builder = builder.num_threads(workers);
    }
    builder
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))
}

/// Tokenized corpus plus the model and latents the pipeline runs on.
struct PreparedRun {
    entities: Vec<EntityData>,
    model: ToyAutoencoder,
}

fn corpus_vocab(batches: &[EntityBatch], vocab_path: Option<&Path>) -> Result<Vec<String>> {
    if let Some(path) = vocab_path {
        let content = std::fs::read_to_string(path)?;
        let mut vocab: Vec<String> = content
            .lines()
            .map(|l| l.trim().to_lowercase())
            .filter(|l| !l.is_empty())
            .collect();
        vocab.dedup();
        return Ok(vocab);
    }
    let mut vocab: Vec<String> = batches
        .iter()
        .flat_map(|b| b.reviews.iter())
        .flat_map(|r| tokenize(r).tokens().to_vec())
        .collect();
    vocab.sort();
    vocab.dedup();
    Ok(vocab)
}

fn prepare(cfg: &RunConfig) -> Result<PreparedRun> {
    cfg.validate()?;
    let batches = ingest_entities(&cfg.input)?;
    let external = cfg
        .latents
        .as_deref()
        .map(load_external_latents)
        .transpose()?;
    let dim = match &external {
        Some(map) => map
            .values()
            .flat_map(|v| v.first())
            .map(|z| z.dim())
            .next()
            .unwrap_or(cfg.toy_dim),
        None => cfg.toy_dim,
    };
    let vocab = corpus_vocab(&batches, cfg.toy_vocab.as_deref())?;
    let mut model = ToyAutoencoder::new(vocab, dim, cfg.kappa, cfg.max_len, cfg.seed)?;
    if !cfg.block_pronouns {
        model = model.with_blocking(false);
    } else {
        model = model.with_blocklist(DEFAULT_BLOCKLIST.iter().map(|s| s.to_string()));
    }
    let entities = batches
        .iter()
        .map(|b| {
            let reviews: Vec<TokenSeq> = b.reviews.iter().map(|r| tokenize(r)).collect();
            let zs: Vec<LatentVector> = match &external {
                Some(map) => map
                    .get(&b.entity_id)
                    .cloned()
                    .ok_or_else(|| Error::Entity {
                        entity: b.entity_id.clone(),
                        message: "present in reviews but missing from external latents".into(),
                    })?,
                None => reviews.iter().map(|r| model.encode(r)).collect(),
            };
            Ok(EntityData {
                entity_id: b.entity_id.clone(),
                reviews,
                gold: b.gold_summaries.iter().map(|s| tokenize(s)).collect(),
                zs,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PreparedRun { entities, model })
}

#[derive(Debug, Serialize)]
struct SummaryRecord {
    entity_id: String,
    method: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    selection: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
    objective: f64,
    summary_norm: f64,
    candidates_evaluated: usize,
    summary: String,
}

#[derive(Debug, Serialize)]
struct SummarizeMetrics<'a> {
    config: &'a RunConfig,
    entities: usize,
    mean_objective: f64,
    mean_candidates_evaluated: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    rouge_vs_gold: Option<RougeAggregate>,
}

#[derive(Debug, Serialize)]
struct RougeAggregate {
    rouge1_f1: f64,
    rouge2_f1: f64,
    rouge_l_f1: f64,
    entities_with_gold: usize,
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n")?;
    Ok(())
}

/// Runs the configured method on every entity and writes `summaries.jsonl`
/// and `metrics.json` under the output directory.
pub fn run_summarize(cfg: &RunConfig) -> Result<()> {
    let prepared = prepare(cfg)?;
    let methods = cfg.methods()?;
    let method = *methods.first().ok_or(Error::EmptyInput)?;
    let obj = cfg.objective();
    let pool = build_pool(cfg.workers)?;
    let started = std::time::Instant::now();

    let records: Vec<SummaryRecord> = pool.install(|| {
        prepared
            .entities
            .par_iter()
            .enumerate()
            .map(|(i, e)| {
                let result = method.with_seed_offset(i as u64).run(
                    &e.reviews,
                    &e.zs,
                    &prepared.model,
                    &obj,
                    cfg.max_exact_n,
                )?;
                Ok(SummaryRecord {
                    entity_id: e.entity_id.clone(),
                    method: method.to_string(),
                    selection: result.selection.map(|s| s.indices()),
                    weights: result.weights,
                    objective: result.objective_value,
                    summary_norm: l2_norm(&result.summary_vector),
                    candidates_evaluated: result.candidates_evaluated,
                    summary: result.summary.to_text(),
                })
            })
            .collect::<Result<_>>()
    })?;

    let with_gold: Vec<(&EntityData, &SummaryRecord)> = prepared
        .entities
        .iter()
        .zip(&records)
        .filter(|(e, _)| !e.gold.is_empty())
        .collect();
    let rouge_vs_gold = if with_gold.is_empty() {
        None
    } else {
        let mut r1 = 0.0;
        let mut r2 = 0.0;
        let mut rl = 0.0;
        for (e, rec) in &with_gold {
            let hyp = tokenize(&rec.summary);
            r1 += rouge_n(&hyp, &e.gold, 1, RefMode::Average)?.f1;
            r2 += rouge_n(&hyp, &e.gold, 2, RefMode::Average)?.f1;
            rl += rouge_l(&hyp, &e.gold, RefMode::Average)?.f1;
        }
        let k = with_gold.len() as f64;
        Some(RougeAggregate {
            rouge1_f1: r1 / k,
            rouge2_f1: r2 / k,
            rouge_l_f1: rl / k,
            entities_with_gold: with_gold.len(),
        })
    };

    std::fs::create_dir_all(&cfg.out)?;
    let mut jsonl = std::fs::File::create(cfg.out.join("summaries.jsonl"))?;
    for rec in &records {
        serde_json::to_writer(&mut jsonl, rec)?;
        jsonl.write_all(b"\n")?;
    }
    let n = records.len().max(1) as f64;
    let metrics = SummarizeMetrics {
        config: cfg,
        entities: records.len(),
        mean_objective: records.iter().map(|r| r.objective).sum::<f64>() / n,
        mean_candidates_evaluated: records
            .iter()
            .map(|r| r.candidates_evaluated as f64)
            .sum::<f64>()
            / n,
        rouge_vs_gold,
    };
    write_json(&cfg.out.join("metrics.json"), &metrics)?;
    eprintln!(
        "summarize: {} entities in {:.2}s",
        records.len(),
        started.elapsed().as_secs_f64()
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct DiagnoseReport<'a> {
    config: &'a RunConfig,
    shrinkage: &'a ShrinkageReport,
    norm_vs_length_spearman: f64,
    norm_vs_info_spearman: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    overlap_vs_gold_rouge: Option<OverlapCorrelation>,
}

/// Shrinkage curve plus correlation analyses; writes `diagnostics.json` and
/// `shrinkage.csv`.
pub fn run_diagnose(cfg: &RunConfig) -> Result<()> {
    let prepared = prepare(cfg)?;
    let pool = build_pool(cfg.workers)?;
    pool.install(|| {
        let max_n = prepared
            .entities
            .iter()
            .map(|e| e.zs.len())
            .min()
            .ok_or(Error::EmptyInput)?;
        let shrinkage = shrinkage_curve(&prepared.entities, max_n, cfg.seed)?;

        let corpus: Vec<TokenSeq> = prepared
            .entities
            .iter()
            .flat_map(|e| e.reviews.clone())
            .collect();
        let lm = NgramLM::train(&corpus, 1, 1.0);
        let all_zs: Vec<LatentVector> = prepared
            .entities
            .iter()
            .flat_map(|e| e.zs.clone())
            .collect();
        let (norm_len, norm_info) = norm_quality_correlation(&all_zs, &prepared.model, &lm)?;

        let all_gold = prepared.entities.iter().all(|e| !e.gold.is_empty());
        let overlap = if all_gold && prepared.entities.iter().all(|e| e.zs.len() <= cfg.max_exact_n)
        {
            Some(overlap_rouge_correlation(
                &prepared.entities,
                &prepared.model,
                &cfg.objective(),
                cfg.max_exact_n,
            )?)
        } else {
            None
        };

        std::fs::create_dir_all(&cfg.out)?;
        let report = DiagnoseReport {
            config: cfg,
            shrinkage: &shrinkage,
            norm_vs_length_spearman: norm_len,
            norm_vs_info_spearman: norm_info,
            overlap_vs_gold_rouge: overlap,
        };
        write_json(&cfg.out.join("diagnostics.json"), &report)?;
        std::fs::write(cfg.out.join("shrinkage.csv"), shrinkage.to_csv())?;
        eprintln!("{}", shrinkage.to_text());
        Ok(())
    })
}

#[derive(Debug, Serialize)]
struct RankEvalReport<'a> {
    config: &'a RunConfig,
    ranking: &'a RankingReport,
}

/// Ranks each configured method's selection within the gold-ROUGE candidate
/// ordering; writes `ranking.json`.
pub fn run_rank_eval(cfg: &RunConfig) -> Result<()> {
    let prepared = prepare(cfg)?;
    let methods = cfg.methods()?;
    let pool = build_pool(cfg.workers)?;
    pool.install(|| {
        let ranking = ranking_quality(
            &prepared.entities,
            &prepared.model,
            &cfg.objective(),
            &methods,
            cfg.max_exact_n,
        )?;
        std::fs::create_dir_all(&cfg.out)?;
        write_json(
            &cfg.out.join("ranking.json"),
            &RankEvalReport {
                config: cfg,
                ranking: &ranking,
            },
        )?;
        eprintln!("{}", ranking.to_text());
        Ok(())
    })
}

/// Entities grouped by id, preserving input order (used by tests and tools).
pub fn entities_by_id(batches: Vec<EntityBatch>) -> BTreeMap<String, EntityBatch> {
    batches.into_iter().map(|b| (b.entity_id.clone(), b)).collect()
}
