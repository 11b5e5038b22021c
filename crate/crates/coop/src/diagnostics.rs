//! Latent-space analyses: norm-shrinkage curves, norm vs. length/information
//! correlations, summary-vector ranking quality (MRR / rank-nDCG), and the
//! overlap-vs-ROUGE Spearman table.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::autoencoder::Decoder;
use crate::coopsearch::{candidate_order, Method, Objective};
use crate::error::{Error, Result};
use crate::latentspace::{enumerate_subsets, l2_norm, subset_average, LatentVector, SubsetSelection};
use crate::textmetrics::{
    info_amount, mrr, ndcg_rank, rouge_l, rouge_n, spearman, NgramLM, RefMode, TokenSeq,
};

/// One entity's latents plus the texts the analyses need.
#[derive(Debug, Clone)]
pub struct EntityData {
    pub entity_id: String,
    pub reviews: Vec<TokenSeq>,
    pub gold: Vec<TokenSeq>,
    pub zs: Vec<LatentVector>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ShrinkageRow {
    pub n: usize,
    pub mean_norm: f64,
    pub std_norm: f64,
}

/// Mean and stddev of ‖average of n latents‖, per input count n.
#[derive(Debug, Clone, Serialize)]
pub struct ShrinkageReport {
    pub rows: Vec<ShrinkageRow>,
}

impl ShrinkageReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,mean_norm,std_norm\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{}\n", r.n, r.mean_norm, r.std_norm));
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("  n  mean_norm   std_norm\n");
        for r in &self.rows {
            out.push_str(&format!("{:>3}  {:>9.4}  {:>9.4}\n", r.n, r.mean_norm, r.std_norm));
        }
        out
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Norm of the simple average of n sampled reviews, for n = 1..=max_n.
///
/// The n = 1 row uses every individual review, so it equals the mean norm of
/// the review vectors exactly; rows with n ≥ 2 draw one seeded sample of n
/// reviews per entity.
pub fn shrinkage_curve(
    entities: &[EntityData],
    max_n: usize,
    seed: u64,
) -> Result<ShrinkageReport> {
    if entities.is_empty() {
        return Err(Error::EmptyInput);
    }
    for e in entities {
        if e.zs.len() < max_n {
            return Err(Error::Entity {
                entity: e.entity_id.clone(),
                message: format!("has {} reviews, need at least {max_n}", e.zs.len()),
            });
        }
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(max_n);
    for n in 1..=max_n {
        let mut norms = Vec::new();
        for e in entities {
            if n == 1 {
                norms.extend(e.zs.iter().map(l2_norm));
            } else {
                let picked = sample(&mut rng, e.zs.len(), n);
                let subset: Vec<LatentVector> =
                    picked.iter().map(|i| e.zs[i].clone()).collect();
                let avg = crate::latentspace::simple_average(&subset)?;
                norms.push(l2_norm(&avg));
            }
        }
        let (mean_norm, std_norm) = mean_std(&norms);
        rows.push(ShrinkageRow { n, mean_norm, std_norm });
    }
    Ok(ShrinkageReport { rows })
}

/// Spearman correlations of latent norm against decoded text length and
/// decoded information amount.
pub fn norm_quality_correlation(
    zs: &[LatentVector],
    dec: &dyn Decoder,
    lm: &NgramLM,
) -> Result<(f64, f64)> {
    if zs.len() < 2 {
        return Err(Error::UndefinedCorrelation(
            "need at least two vectors".into(),
        ));
    }
    let norms: Vec<f64> = zs.iter().map(l2_norm).collect();
    let mut lens = Vec::with_capacity(zs.len());
    let mut infos = Vec::with_capacity(zs.len());
    for z in zs {
        let decoded = dec.decode(z)?;
        lens.push(decoded.len() as f64);
        infos.push(info_amount(&decoded, lm));
    }
    Ok((spearman(&norms, &lens)?, spearman(&norms, &infos)?))
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodRanking {
    pub method: String,
    pub mrr: f64,
    pub ndcg: f64,
    pub mrr_percent: f64,
    pub ndcg_percent: f64,
}

/// MRR and rank-nDCG of each method's selection within the gold-ROUGE-sorted
/// candidate list, aggregated over entities.
#[derive(Debug, Clone, Serialize)]
pub struct RankingReport {
    pub methods: Vec<MethodRanking>,
    pub candidates_per_entity: usize,
}

impl RankingReport {
    pub fn to_text(&self) -> String {
        let mut out = String::from("method                     MRR%   nDCG%\n");
        for m in &self.methods {
            out.push_str(&format!(
                "{:<24} {:>6.2}  {:>6.2}\n",
                m.method, m.mrr_percent, m.ndcg_percent
            ));
        }
        out
    }
}

/// All candidates of one entity scored by gold ROUGE-1 F1 and sorted by the
/// search tie order, best first.
fn gold_ranked_candidates(
    entity: &EntityData,
    dec: &dyn Decoder,
    max_exact_n: usize,
) -> Result<Vec<(SubsetSelection, f64)>> {
    if entity.gold.is_empty() {
        return Err(Error::Entity {
            entity: entity.entity_id.clone(),
            message: "missing gold summaries".into(),
        });
    }
    let subsets: Vec<SubsetSelection> =
        enumerate_subsets(entity.zs.len(), max_exact_n)?.collect();
    let mut scored: Vec<(SubsetSelection, f64)> = subsets
        .par_iter()
        .map(|s| {
            let z = subset_average(&entity.zs, s)?;
            let decoded = dec.decode(&z)?;
            let score = rouge_n(&decoded, &entity.gold, 1, RefMode::Average)?.f1;
            Ok((*s, score))
        })
        .collect::<Result<_>>()?;
    scored.sort_by(candidate_order);
    Ok(scored)
}

/// Evaluates each method's subset selection against the gold-ROUGE candidate
/// ranking of every entity. Methods must produce subset selections.
pub fn ranking_quality(
    entities: &[EntityData],
    dec: &dyn Decoder,
    obj: &Objective,
    methods: &[Method],
    max_exact_n: usize,
) -> Result<RankingReport> {
    if entities.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = entities[0].zs.len();
    let mut ranks_per_method: Vec<Vec<usize>> = vec![Vec::new(); methods.len()];
    for (ei, entity) in entities.iter().enumerate() {
        let ranked = gold_ranked_candidates(entity, dec, max_exact_n)?;
        for (mi, method) in methods.iter().enumerate() {
            let result = method.with_seed_offset(ei as u64).run(
                &entity.reviews,
                &entity.zs,
                dec,
                obj,
                max_exact_n,
            )?;
            let selection = result.selection.ok_or_else(|| {
                Error::Config(format!(
                    "method {method} does not produce a subset selection; \
                     it cannot be ranked within the candidate list"
                ))
            })?;
            let rank = ranked
                .iter()
                .position(|(s, _)| *s == selection)
                .expect("selection is a member of the enumerated power set")
                + 1;
            ranks_per_method[mi].push(rank);
        }
    }
    let methods = methods
        .iter()
        .zip(&ranks_per_method)
        .map(|(m, ranks)| {
            let mrr = mrr(ranks)?;
            let ndcg = ndcg_rank(ranks)?;
            Ok(MethodRanking {
                method: m.to_string(),
                mrr,
                ndcg,
                mrr_percent: 100.0 * mrr,
                ndcg_percent: 100.0 * ndcg,
            })
        })
        .collect::<Result<_>>()?;
    Ok(RankingReport {
        methods,
        candidates_per_entity: (1usize << n) - 1,
    })
}

/// Pooled Spearman correlations between the input-output overlap objective
/// and ROUGE-1/2/L F1 against gold, over all candidates of all entities.
#[derive(Debug, Clone, Serialize)]
pub struct OverlapCorrelation {
    pub rouge1: f64,
    pub rouge2: f64,
    pub rouge_l: f64,
}

pub fn overlap_rouge_correlation(
    entities: &[EntityData],
    dec: &dyn Decoder,
    obj: &Objective,
    max_exact_n: usize,
) -> Result<OverlapCorrelation> {
    let mut overlaps = Vec::new();
    let mut r1 = Vec::new();
    let mut r2 = Vec::new();
    let mut rl = Vec::new();
    for entity in entities {
        if entity.gold.is_empty() {
            return Err(Error::Entity {
                entity: entity.entity_id.clone(),
                message: "missing gold summaries".into(),
            });
        }
        for s in enumerate_subsets(entity.zs.len(), max_exact_n)? {
            let z = subset_average(&entity.zs, &s)?;
            let decoded = dec.decode(&z)?;
            overlaps.push(obj.score(&decoded, &entity.reviews)?);
            r1.push(rouge_n(&decoded, &entity.gold, 1, RefMode::Average)?.f1);
            r2.push(rouge_n(&decoded, &entity.gold, 2, RefMode::Average)?.f1);
            rl.push(rouge_l(&decoded, &entity.gold, RefMode::Average)?.f1);
        }
    }
    Ok(OverlapCorrelation {
        rouge1: spearman(&overlaps, &r1)?,
        rouge2: spearman(&overlaps, &r2)?,
        rouge_l: spearman(&overlaps, &rl)?,
    })
}
