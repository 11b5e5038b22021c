//! Text metrics: tokenization, ROUGE-N/L, an add-alpha n-gram language model
//! for information amount, Spearman rank correlation, and the ranking metrics
//! MRR and rank-nDCG.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered sequence of lowercase word tokens.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct TokenSeq(pub Vec<String>);

impl TokenSeq {
    pub fn new(tokens: Vec<String>) -> Self {
        TokenSeq(tokens)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn to_text(&self) -> String {
        self.0.join(" ")
    }
}

/// Lowercases and splits on every non-alphanumeric character. Contiguous
/// alphanumeric runs become tokens; everything else is a separator.
pub fn tokenize(text: &str) -> TokenSeq {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            current.extend(ch.to_lowercase());
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    TokenSeq(tokens)
}

/// Precision/recall/F1 triple for one ROUGE variant.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl RougeScore {
    fn from_pr(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        RougeScore {
            precision,
            recall,
            f1,
        }
    }
}

/// How per-reference scores are combined when multiple references exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RefMode {
    /// Mean of the per-reference P/R/F1 triples.
    Average,
    /// The per-reference triple with the highest F1.
    Max,
    /// One score against all references concatenated into a single sequence.
    Concat,
}

fn ngram_counts<'a>(tokens: &'a [String], n: usize) -> HashMap<&'a [String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

fn rouge_n_single(hyp: &[String], reference: &[String], n: usize) -> RougeScore {
    let hyp_counts = ngram_counts(hyp, n);
    let ref_counts = ngram_counts(reference, n);
    let hyp_total: usize = hyp_counts.values().sum();
    let ref_total: usize = ref_counts.values().sum();
    let matched: usize = hyp_counts
        .iter()
        .map(|(gram, &c)| c.min(*ref_counts.get(gram).unwrap_or(&0)))
        .sum();
    let precision = if hyp_total > 0 {
        matched as f64 / hyp_total as f64
    } else {
        0.0
    };
    let recall = if ref_total > 0 {
        matched as f64 / ref_total as f64
    } else {
        0.0
    };
    RougeScore::from_pr(precision, recall)
}

fn combine_refs<F>(refs: &[TokenSeq], mode: RefMode, score_one: F) -> Result<RougeScore>
where
    F: Fn(&[String]) -> RougeScore,
{
    if refs.is_empty() {
        return Err(Error::EmptyReferences);
    }
    match mode {
        RefMode::Average => {
            let mut acc = RougeScore::default();
            for r in refs {
                let s = score_one(r.tokens());
                acc.precision += s.precision;
                acc.recall += s.recall;
                acc.f1 += s.f1;
            }
            let k = refs.len() as f64;
            Ok(RougeScore {
                precision: acc.precision / k,
                recall: acc.recall / k,
                f1: acc.f1 / k,
            })
        }
        RefMode::Max => {
            let mut best = score_one(refs[0].tokens());
            for r in &refs[1..] {
                let s = score_one(r.tokens());
                if s.f1 > best.f1 {
                    best = s;
                }
            }
            Ok(best)
        }
        RefMode::Concat => {
            let concat: Vec<String> = refs.iter().flat_map(|r| r.tokens().to_vec()).collect();
            Ok(score_one(&concat))
        }
    }
}

/// ROUGE-N with clipped n-gram overlap counts.
pub fn rouge_n(hyp: &TokenSeq, refs: &[TokenSeq], n: usize, mode: RefMode) -> Result<RougeScore> {
    assert!(n >= 1, "n-gram order must be at least 1");
    combine_refs(refs, mode, |r| rouge_n_single(hyp.tokens(), r, n))
}

fn lcs_len(a: &[String], b: &[String]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    // one-row DP over b
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut prev_diag = 0;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y {
                prev_diag + 1
            } else {
                row[j + 1].max(row[j])
            };
            prev_diag = up;
        }
    }
    row[b.len()]
}

fn rouge_l_single(hyp: &[String], reference: &[String]) -> RougeScore {
    let lcs = lcs_len(hyp, reference);
    let precision = if hyp.is_empty() {
        0.0
    } else {
        lcs as f64 / hyp.len() as f64
    };
    let recall = if reference.is_empty() {
        0.0
    } else {
        lcs as f64 / reference.len() as f64
    };
    RougeScore::from_pr(precision, recall)
}

/// ROUGE-L: longest-common-subsequence precision against |hyp|, recall against |ref|.
pub fn rouge_l(hyp: &TokenSeq, refs: &[TokenSeq], mode: RefMode) -> Result<RougeScore> {
    combine_refs(refs, mode, |r| rouge_l_single(hyp.tokens(), r))
}

/// Add-alpha smoothed n-gram language model. Context counts are the sum of
/// continuation counts, so probabilities over the vocabulary at a fixed
/// context sum to exactly 1.
#[derive(Debug, Clone)]
pub struct NgramLM {
    order: usize,
    counts: HashMap<Vec<String>, u64>,
    context_counts: HashMap<Vec<String>, u64>,
    vocab_size: usize,
    alpha: f64,
}

/// Sequence-start padding token; kept outside the vocabulary.
const BOS: &str = "<s>";

impl NgramLM {
    /// Trains on a corpus of token sequences. `order` 1 gives a unigram model.
    pub fn train(corpus: &[TokenSeq], order: usize, alpha: f64) -> Self {
        assert!(order >= 1, "model order must be at least 1");
        assert!(alpha > 0.0, "smoothing alpha must be positive");
        let mut counts = HashMap::new();
        let mut context_counts = HashMap::new();
        let mut vocab: std::collections::HashSet<&str> = std::collections::HashSet::new();
        for seq in corpus {
            for t in seq.tokens() {
                vocab.insert(t);
            }
            let padded: Vec<String> = std::iter::repeat(BOS.to_string())
                .take(order - 1)
                .chain(seq.tokens().iter().cloned())
                .collect();
            for gram in padded.windows(order) {
                *counts.entry(gram.to_vec()).or_insert(0) += 1;
                *context_counts.entry(gram[..order - 1].to_vec()).or_insert(0) += 1;
            }
        }
        NgramLM {
            order,
            counts,
            context_counts,
            vocab_size: vocab.len().max(1),
            alpha,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Smoothed probability of `token` after `context` (last order-1 tokens,
    /// BOS-padded when shorter). Always in (0, 1).
    pub fn prob(&self, context: &[String], token: &str) -> f64 {
        let mut ctx: Vec<String> = std::iter::repeat(BOS.to_string())
            .take((self.order - 1).saturating_sub(context.len()))
            .chain(
                context[context.len().saturating_sub(self.order - 1)..]
                    .iter()
                    .cloned(),
            )
            .collect();
        ctx.truncate(self.order - 1);
        let mut gram = ctx.clone();
        gram.push(token.to_string());
        let c = *self.counts.get(&gram).unwrap_or(&0) as f64;
        let ctx_total = *self.context_counts.get(&ctx).unwrap_or(&0) as f64;
        (c + self.alpha) / (ctx_total + self.alpha * self.vocab_size as f64)
    }
}

/// Negative log likelihood of `text` under `lm`, in nats. Zero for empty text.
pub fn info_amount(text: &TokenSeq, lm: &NgramLM) -> f64 {
    let tokens = text.tokens();
    let mut total = 0.0;
    for (t, token) in tokens.iter().enumerate() {
        total -= lm.prob(&tokens[..t], token).ln();
    }
    total
}

fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        // ties share the mean of their rank range (1-based)
        let mean_rank = (i + j + 2) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = mean_rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation: Pearson correlation of average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::UndefinedCorrelation(
            "need at least two observations".into(),
        ));
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    pearson(&rx, &ry)
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation(
            "constant input series".into(),
        ));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Mean reciprocal rank: mean of 1/rank.
pub fn mrr(ranks: &[usize]) -> Result<f64> {
    if ranks.is_empty() {
        return Err(Error::EmptyInput);
    }
    debug_assert!(ranks.iter().all(|&r| r >= 1));
    Ok(ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / ranks.len() as f64)
}

/// Single-relevant-item discounted gain: mean of 1/log2(rank + 1).
pub fn ndcg_rank(ranks: &[usize]) -> Result<f64> {
    if ranks.is_empty() {
        return Err(Error::EmptyInput);
    }
    debug_assert!(ranks.iter().all(|&r| r >= 1));
    Ok(ranks
        .iter()
        .map(|&r| 1.0 / ((r + 1) as f64).log2())
        .sum::<f64>()
        / ranks.len() as f64)
}
