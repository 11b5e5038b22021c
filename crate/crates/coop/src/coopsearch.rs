//! The input-output overlap objective and every aggregation-selection
//! strategy: exact power-set search, forward/backward greedy and beam search,
//! and the baseline selectors.
//!
//! All candidate orderings use one total tie order (higher objective, then
//! smaller subset, then ascending bitmask), and parallel evaluation reduces
//! through that order, so results do not depend on worker count.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autoencoder::Decoder;
use crate::error::{Error, Result};
use crate::latentspace::{
    enumerate_subsets, inverse_variance_weighting, rescale, simple_average, subset_average,
    LatentVector, SubsetSelection,
};
use crate::textmetrics::{rouge_l, rouge_n, RefMode, TokenSeq};

/// Which ROUGE variant measures input-output overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OverlapMetric {
    Rouge1,
    Rouge2,
    RougeL,
}

/// Search objective: overlap between a decoded summary and ALL input reviews.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub metric: OverlapMetric,
    pub ref_mode: RefMode,
}

impl Default for Objective {
    fn default() -> Self {
        Objective {
            metric: OverlapMetric::Rouge1,
            ref_mode: RefMode::Average,
        }
    }
}

impl Objective {
    /// F1 overlap of `summary` against the full review set.
    pub fn score(&self, summary: &TokenSeq, reviews: &[TokenSeq]) -> Result<f64> {
        let score = match self.metric {
            OverlapMetric::Rouge1 => rouge_n(summary, reviews, 1, self.ref_mode)?,
            OverlapMetric::Rouge2 => rouge_n(summary, reviews, 2, self.ref_mode)?,
            OverlapMetric::RougeL => rouge_l(summary, reviews, self.ref_mode)?,
        };
        Ok(score.f1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchDirection {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub direction: SearchDirection,
    pub beam_size: usize,
    pub max_exact_n: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            direction: SearchDirection::Forward,
            beam_size: 1,
            max_exact_n: crate::latentspace::DEFAULT_MAX_EXACT_N,
        }
    }
}

/// Outcome of a selection strategy.
#[derive(Debug, Clone)]
pub struct SearchResult {
    /// The chosen subset; None for aggregators that are not subset selections
    /// (inverse-variance weighting, re-scaling).
    pub selection: Option<SubsetSelection>,
    /// Per-review scalar weights when the aggregation is a convex combination
    /// with scalar weights (uniform over the selected subset).
    pub weights: Option<Vec<f64>>,
    pub summary_vector: LatentVector,
    pub summary: TokenSeq,
    pub objective_value: f64,
    pub candidates_evaluated: usize,
    /// All evaluated subsets sorted by the candidate order, best first.
    pub ranked_candidates: Option<Vec<(SubsetSelection, f64)>>,
}

/// Total candidate order: higher objective, then smaller subset, then
/// ascending bitmask. Returns Less when `a` ranks before (beats) `b`.
pub fn candidate_order(a: &(SubsetSelection, f64), b: &(SubsetSelection, f64)) -> Ordering {
    b.1.partial_cmp(&a.1)
        .unwrap_or(Ordering::Equal)
        .then(a.0.len().cmp(&b.0.len()))
        .then(a.0.mask().cmp(&b.0.mask()))
}

/// Objective value of decoding the subset average of `s`, scored against the
/// full review set.
pub fn evaluate_candidate(
    reviews: &[TokenSeq],
    zs: &[LatentVector],
    s: &SubsetSelection,
    dec: &dyn Decoder,
    obj: &Objective,
) -> Result<f64> {
    let z = subset_average(zs, s)?;
    let summary = dec.decode(&z)?;
    obj.score(&summary, reviews)
}

fn uniform_weights(s: &SubsetSelection, n: usize) -> Vec<f64> {
    let k = s.len() as f64;
    (0..n)
        .map(|i| if s.contains(i) { 1.0 / k } else { 0.0 })
        .collect()
}

fn result_from_subset(
    reviews: &[TokenSeq],
    zs: &[LatentVector],
    s: SubsetSelection,
    value: f64,
    dec: &dyn Decoder,
    candidates_evaluated: usize,
    ranked: Option<Vec<(SubsetSelection, f64)>>,
) -> Result<SearchResult> {
    let summary_vector = subset_average(zs, &s)?;
    let summary = dec.decode(&summary_vector)?;
    debug_assert!(!reviews.is_empty());
    Ok(SearchResult {
        selection: Some(s),
        weights: Some(uniform_weights(&s, zs.len())),
        summary_vector,
        summary,
        objective_value: value,
        candidates_evaluated,
        ranked_candidates: ranked,
    })
}

/// Evaluates the masks (in the given order) in parallel, preserving order.
fn evaluate_all(
    reviews: &[TokenSeq],
    zs: &[LatentVector],
    subsets: &[SubsetSelection],
    dec: &dyn Decoder,
    obj: &Objective,
) -> Result<Vec<(SubsetSelection, f64)>> {
    subsets
        .par_iter()
        .map(|s| evaluate_candidate(reviews, zs, s, dec, obj).map(|v| (*s, v)))
        .collect()
}

/// Exhaustive search over all 2^N − 1 non-empty subsets.
pub fn search_exact(
    reviews: &[TokenSeq],
    zs: &[LatentVector],
    dec: &dyn Decoder,
    obj: &Objective,
    max_exact_n: usize,
) -> Result<SearchResult> {
    let n = zs.len();
    let subsets: Vec<SubsetSelection> = enumerate_subsets(n, max_exact_n)?.collect();
    let mut scored = evaluate_all(reviews, zs, &subsets, dec, obj)?;
    scored.sort_by(candidate_order);
    let (best, value) = scored[0];
    let evaluated = scored.len();
    result_from_subset(reviews, zs, best, value, dec, evaluated, Some(scored))
}

/// Greedy (beam 1) or beam subset search, growing from singletons (forward)
/// or shrinking from the full set (backward). Returns the best candidate
/// evaluated at any step, not the final frontier.
pub fn search_beam(
    reviews: &[TokenSeq],
    zs: &[LatentVector],
    dec: &dyn Decoder,
    obj: &Objective,
    cfg: &SearchConfig,
) -> Result<SearchResult> {
    let n = zs.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if cfg.beam_size == 0 {
        return Err(Error::Config("beam size must be at least 1".into()));
    }

    let initial: Vec<SubsetSelection> = match cfg.direction {
        SearchDirection::Forward => (0..n).map(SubsetSelection::singleton).collect(),
        SearchDirection::Backward => vec![SubsetSelection::full(n)?],
    };

    let mut evaluated = 0usize;
    let mut best: Option<(SubsetSelection, f64)> = None;
    let mut frontier = evaluate_all(reviews, zs, &initial, dec, obj)?;
    loop {
        evaluated += frontier.len();
        frontier.sort_by(candidate_order);
        frontier.truncate(cfg.beam_size);
        if let Some(top) = frontier.first() {
            if best.is_none() || candidate_order(top, best.as_ref().unwrap()) == Ordering::Less {
                best = Some(*top);
            }
        }

        let mut next: Vec<SubsetSelection> = match cfg.direction {
            SearchDirection::Forward => frontier
                .iter()
                .flat_map(|(s, _)| {
                    (0..n)
                        .filter(|&i| !s.contains(i))
                        .map(|i| s.with_index(i))
                        .collect::<Vec<_>>()
                })
                .collect(),
            SearchDirection::Backward => frontier
                .iter()
                .flat_map(|(s, _)| {
                    (0..n)
                        .filter_map(|i| s.contains(i).then(|| s.without_index(i)).flatten())
                        .collect::<Vec<_>>()
                })
                .collect(),
        };
        next.sort_by_key(|s| s.mask());
        next.dedup();
        if next.is_empty() {
            break;
        }
        frontier = evaluate_all(reviews, zs, &next, dec, obj)?;
    }

    let (s, value) = best.expect("at least one candidate was evaluated");
    result_from_subset(reviews, zs, s, value, dec, evaluated, None)
}

/// Full-set simple average, with the objective evaluated for reporting.
pub fn select_simpleavg(
    reviews: &[TokenSeq],
    zs: &[LatentVector],
    dec: &dyn Decoder,
    obj: &Objective,
) -> Result<SearchResult> {
    if zs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let s = SubsetSelection::full(zs.len())?;
    let value = evaluate_candidate(reviews, zs, &s, dec, obj)?;
    result_from_subset(reviews, zs, s, value, dec, 1, None)
}

/// Inverse-variance-weighted aggregation of all inputs.
pub fn select_ivw(
    reviews: &[TokenSeq],
    zs: &[LatentVector],
    dec: &dyn Decoder,
    obj: &Objective,
) -> Result<SearchResult> {
    let summary_vector = inverse_variance_weighting(zs)?;
    let summary = dec.decode(&summary_vector)?;
    let value = obj.score(&summary, reviews)?;
    Ok(SearchResult {
        selection: None,
        weights: None,
        summary_vector,
        summary,
        objective_value: value,
        candidates_evaluated: 1,
        ranked_candidates: None,
    })
}

/// Simple average re-scaled to norm `alpha`.
pub fn select_rescale(
    reviews: &[TokenSeq],
    zs: &[LatentVector],
    alpha: f64,
    dec: &dyn Decoder,
    obj: &Objective,
) -> Result<SearchResult> {
    let avg = simple_average(zs)?;
    let summary_vector = rescale(&avg, alpha)?;
    let summary = dec.decode(&summary_vector)?;
    let value = obj.score(&summary, reviews)?;
    Ok(SearchResult {
        selection: None,
        weights: None,
        summary_vector,
        summary,
        objective_value: value,
        candidates_evaluated: 1,
        ranked_candidates: None,
    })
}

/// LexRank damping factor: probability of the uniform teleport component.
pub const EXTRACTIVE_DAMPING: f64 = 0.15;
const POWER_ITER_TOL: f64 = 1e-10;
const POWER_ITER_MAX: usize = 1000;

/// Centrality scores over the latent vectors: cosine similarity matrix, rows
/// normalized to a stochastic matrix, principal eigenvector by power
/// iteration with damping.
pub fn centrality_scores(zs: &[LatentVector]) -> Result<Vec<f64>> {
    let n = zs.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let norms: Vec<f64> = zs.iter().map(crate::latentspace::l2_norm).collect();
    if let Some(i) = norms.iter().position(|&x| x == 0.0) {
        return Err(Error::ZeroVector(format!(
            "cosine similarity undefined for input {i}"
        )));
    }
    // similarity clipped at zero so rows normalize to a stochastic matrix
    let mut sim = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let dot: f64 = zs[i]
                .values
                .iter()
                .zip(&zs[j].values)
                .map(|(a, b)| a * b)
                .sum();
            sim[i][j] = (dot / (norms[i] * norms[j])).max(0.0);
        }
    }
    let transition: Vec<Vec<f64>> = sim
        .iter()
        .map(|row| {
            let total: f64 = row.iter().sum();
            if total > 0.0 {
                row.iter().map(|v| v / total).collect()
            } else {
                vec![1.0 / n as f64; n]
            }
        })
        .collect();

    let teleport = EXTRACTIVE_DAMPING / n as f64;
    let mut scores = vec![1.0 / n as f64; n];
    for _ in 0..POWER_ITER_MAX {
        let mut next = vec![teleport; n];
        for (i, row) in transition.iter().enumerate() {
            for (j, p) in row.iter().enumerate() {
                next[j] += (1.0 - EXTRACTIVE_DAMPING) * scores[i] * p;
            }
        }
        let delta: f64 = next
            .iter()
            .zip(&scores)
            .map(|(a, b)| (a - b).abs())
            .sum();
        scores = next;
        if delta < POWER_ITER_TOL {
            break;
        }
    }
    Ok(scores)
}

/// Top-k inputs by centrality, ties broken by ascending index.
pub fn select_extractive(zs: &[LatentVector], k: usize) -> Result<SubsetSelection> {
    let n = zs.len();
    if k == 0 || k > n {
        return Err(Error::Config(format!("k={k} must be in 1..={n}")));
    }
    let scores = centrality_scores(zs)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    SubsetSelection::from_indices(&order[..k], n)
}

/// Uniform draw over the 2^n − 1 non-empty subsets, seeded.
pub fn select_random(n: usize, seed: u64) -> Result<SubsetSelection> {
    if n == 0 || n >= 64 {
        return Err(Error::Config(format!("invalid input count {n}")));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mask = rng.gen_range(1..1u64 << n);
    SubsetSelection::from_mask(mask, n)
}

/// Aggregation-selection strategy, parsed from the CLI method grammar:
/// `simpleavg | coop-exact | coop-greedy:{forward|backward} |
/// coop-beam:{forward|backward}:K | ivw | rescale:ALPHA | extractive:K |
/// random:SEED`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    SimpleAvg,
    CoopExact,
    CoopGreedy(SearchDirection),
    CoopBeam(SearchDirection, usize),
    Ivw,
    Rescale(f64),
    Extractive(usize),
    Random(u64),
}

impl Method {
    pub fn run(
        &self,
        reviews: &[TokenSeq],
        zs: &[LatentVector],
        dec: &dyn Decoder,
        obj: &Objective,
        max_exact_n: usize,
    ) -> Result<SearchResult> {
        match *self {
            Method::SimpleAvg => select_simpleavg(reviews, zs, dec, obj),
            Method::CoopExact => search_exact(reviews, zs, dec, obj, max_exact_n),
            Method::CoopGreedy(direction) => {
                let cfg = SearchConfig {
                    direction,
                    beam_size: 1,
                    max_exact_n,
                };
                search_beam(reviews, zs, dec, obj, &cfg)
            }
            Method::CoopBeam(direction, beam_size) => {
                let cfg = SearchConfig {
                    direction,
                    beam_size,
                    max_exact_n,
                };
                search_beam(reviews, zs, dec, obj, &cfg)
            }
            Method::Ivw => select_ivw(reviews, zs, dec, obj),
            Method::Rescale(alpha) => select_rescale(reviews, zs, alpha, dec, obj),
            Method::Extractive(k) => {
                let s = select_extractive(zs, k.min(zs.len()))?;
                let value = evaluate_candidate(reviews, zs, &s, dec, obj)?;
                result_from_subset(reviews, zs, s, value, dec, 1, None)
            }
            Method::Random(seed) => {
                let s = select_random(zs.len(), seed)?;
                let value = evaluate_candidate(reviews, zs, &s, dec, obj)?;
                result_from_subset(reviews, zs, s, value, dec, 1, None)
            }
        }
    }

    /// Variant with a per-entity seed offset, so the random baseline draws a
    /// fresh subset for each entity while staying reproducible.
    pub fn with_seed_offset(&self, offset: u64) -> Method {
        match *self {
            Method::Random(seed) => Method::Random(seed.wrapping_add(offset)),
            other => other,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let dir = |d: &SearchDirection| match d {
            SearchDirection::Forward => "forward",
            SearchDirection::Backward => "backward",
        };
        match self {
            Method::SimpleAvg => write!(f, "simpleavg"),
            Method::CoopExact => write!(f, "coop-exact"),
            Method::CoopGreedy(d) => write!(f, "coop-greedy:{}", dir(d)),
            Method::CoopBeam(d, k) => write!(f, "coop-beam:{}:{k}", dir(d)),
            Method::Ivw => write!(f, "ivw"),
            Method::Rescale(a) => write!(f, "rescale:{a}"),
            Method::Extractive(k) => write!(f, "extractive:{k}"),
            Method::Random(s) => write!(f, "random:{s}"),
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let parse_dir = |d: &str| match d {
            "forward" => Ok(SearchDirection::Forward),
            "backward" => Ok(SearchDirection::Backward),
            other => Err(Error::Config(format!(
                "unknown search direction {other:?} (expected forward or backward)"
            ))),
        };
        match parts.as_slice() {
            ["simpleavg"] => Ok(Method::SimpleAvg),
            ["coop-exact"] => Ok(Method::CoopExact),
            ["coop-greedy", d] => Ok(Method::CoopGreedy(parse_dir(d)?)),
            ["coop-beam", d, k] => {
                let k: usize = k
                    .parse()
                    .map_err(|_| Error::Config(format!("invalid beam size {k:?}")))?;
                if k == 0 {
                    return Err(Error::Config("beam size must be at least 1".into()));
                }
                Ok(Method::CoopBeam(parse_dir(d)?, k))
            }
            ["ivw"] => Ok(Method::Ivw),
            ["rescale", a] => {
                let alpha: f64 = a
                    .parse()
                    .map_err(|_| Error::Config(format!("invalid rescale alpha {a:?}")))?;
                if alpha <= 0.0 {
                    return Err(Error::Config("rescale alpha must be positive".into()));
                }
                Ok(Method::Rescale(alpha))
            }
            ["extractive", k] => {
                let k: usize = k
                    .parse()
                    .map_err(|_| Error::Config(format!("invalid extractive k {k:?}")))?;
                if k == 0 {
                    return Err(Error::Config("extractive k must be at least 1".into()));
                }
                Ok(Method::Extractive(k))
            }
            ["random", seed] => {
                let seed: u64 = seed
                    .parse()
                    .map_err(|_| Error::Config(format!("invalid random seed {seed:?}")))?;
                Ok(Method::Random(seed))
            }
            _ => Err(Error::Config(format!("unknown method spec {s:?}"))),
        }
    }
}
