//! Encoder/decoder contracts, a deterministic toy autoencoder, and loading of
//! externally produced latent vectors.
//!
//! The toy model sums seeded unit word embeddings on encode, so longer and
//! more specific text gets a larger latent norm, and decodes the top-scoring
//! vocabulary words with an output length proportional to the latent norm.
//! That couples norm, decoded length, and informativeness the same way a
//! trained review autoencoder does, which is what the diagnostics measure.

use std::collections::{BTreeMap, HashSet};
use std::io::BufRead;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::latentspace::{l2_norm, LatentVector};
use crate::textmetrics::TokenSeq;

/// Deterministic text generation from a latent vector.
pub trait Decoder: Sync {
    fn decode(&self, z: &LatentVector) -> Result<TokenSeq>;
    fn dim(&self) -> usize;
}

/// Deterministic mapping from text to a latent vector.
pub trait Encoder: Sync {
    fn encode(&self, text: &TokenSeq) -> LatentVector;
    fn dim(&self) -> usize;
}

/// First-person pronouns excluded from decoding by default.
pub const DEFAULT_BLOCKLIST: &[&str] = &[
    "i", "my", "me", "mine", "we", "our", "us", "ourselves", "myself",
];

/// Bag-of-embeddings autoencoder with seeded unit embeddings.
///
/// Encoding sums the embeddings of in-vocabulary tokens. Decoding emits the
/// `round(kappa * ||z||)` highest-scoring non-blocked vocabulary words by dot
/// product, ties broken by vocabulary order.
#[derive(Debug, Clone)]
pub struct ToyAutoencoder {
    vocab: Vec<String>,
    embeddings: Vec<Vec<f64>>,
    dim: usize,
    length_gain: f64,
    max_len: usize,
    blocklist: HashSet<String>,
    blocking_enabled: bool,
}

impl ToyAutoencoder {
    pub fn new(
        vocab: Vec<String>,
        dim: usize,
        length_gain: f64,
        max_len: usize,
        seed: u64,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("embedding dimension must be positive".into()));
        }
        if length_gain <= 0.0 {
            return Err(Error::Config("length gain must be positive".into()));
        }
        let mut seen = HashSet::new();
        for w in &vocab {
            if !seen.insert(w.as_str()) {
                return Err(Error::Config(format!("duplicate vocabulary word {w:?}")));
            }
        }
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let embeddings = vocab
            .iter()
            .map(|_| {
                loop {
                    let raw: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if norm > 1e-6 {
                        return raw.iter().map(|v| v / norm).collect();
                    }
                }
            })
            .collect();
        Ok(ToyAutoencoder {
            vocab,
            embeddings,
            dim,
            length_gain,
            max_len,
            blocklist: DEFAULT_BLOCKLIST.iter().map(|s| s.to_string()).collect(),
            blocking_enabled: true,
        })
    }

    pub fn with_blocklist(mut self, blocklist: impl IntoIterator<Item = String>) -> Self {
        self.blocklist = blocklist.into_iter().collect();
        self
    }

    pub fn with_blocking(mut self, enabled: bool) -> Self {
        self.blocking_enabled = enabled;
        self
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn embedding(&self, word: &str) -> Option<&[f64]> {
        self.vocab
            .iter()
            .position(|w| w == word)
            .map(|i| self.embeddings[i].as_slice())
    }
}

impl Encoder for ToyAutoencoder {
    /// Sum, not mean, of in-vocabulary embeddings; out-of-vocabulary tokens
    /// are ignored and fully unknown text maps to the zero vector.
    fn encode(&self, text: &TokenSeq) -> LatentVector {
        let mut z = vec![0.0; self.dim];
        for token in text.tokens() {
            if let Some(idx) = self.vocab.iter().position(|w| w == token) {
                for (zi, ei) in z.iter_mut().zip(&self.embeddings[idx]) {
                    *zi += ei;
                }
            }
        }
        LatentVector::new(z)
    }

    fn dim(&self) -> usize {
        self.dim
    }
}

impl Decoder for ToyAutoencoder {
    fn decode(&self, z: &LatentVector) -> Result<TokenSeq> {
        if z.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: z.dim(),
                context: Some("decode input".into()),
            });
        }
        let target_len = (self.length_gain * l2_norm(z)).round() as usize;
        let m = target_len.min(self.max_len);
        if m == 0 {
            return Ok(TokenSeq::default());
        }
        let mut scored: Vec<(usize, f64)> = self
            .vocab
            .iter()
            .enumerate()
            .filter(|(_, w)| !(self.blocking_enabled && self.blocklist.contains(*w)))
            .map(|(i, _)| {
                let dot = z
                    .values
                    .iter()
                    .zip(&self.embeddings[i])
                    .map(|(a, b)| a * b)
                    .sum::<f64>();
                (i, dot)
            })
            .collect();
        // descending score, ties by vocabulary order
        scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        Ok(TokenSeq::new(
            scored
                .iter()
                .take(m)
                .map(|&(i, _)| self.vocab[i].clone())
                .collect(),
        ))
    }

    fn dim(&self) -> usize {
        self.dim
    }
}

#[derive(Deserialize)]
struct LatentsRecord {
    entity_id: String,
    vectors: Vec<Vec<f64>>,
    #[serde(default)]
    variances: Option<Vec<Vec<f64>>>,
}

/// Loads latent vectors grouped by entity from JSONL. One object per line:
/// `{"entity_id": ..., "vectors": [[...], ...], "variances": [[...], ...]}`.
/// Dimensions must be uniform across the whole file.
pub fn load_external_latents(path: &std::path::Path) -> Result<BTreeMap<String, Vec<LatentVector>>> {
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    let mut out = BTreeMap::new();
    let mut dim: Option<usize> = None;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: LatentsRecord =
            serde_json::from_str(&line).map_err(|e| Error::Malformed {
                path: path.display().to_string(),
                line: lineno + 1,
                message: e.to_string(),
            })?;
        if let Some(vars) = &record.variances {
            if vars.len() != record.vectors.len() {
                return Err(Error::Malformed {
                    path: path.display().to_string(),
                    line: lineno + 1,
                    message: format!(
                        "entity {:?} has {} vectors but {} variance rows",
                        record.entity_id,
                        record.vectors.len(),
                        vars.len()
                    ),
                });
            }
        }
        let mut vectors = Vec::with_capacity(record.vectors.len());
        for (i, values) in record.vectors.into_iter().enumerate() {
            let d = *dim.get_or_insert(values.len());
            if values.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: values.len(),
                    context: Some(format!("entity {:?}", record.entity_id)),
                });
            }
            let variance = record.variances.as_ref().map(|vars| vars[i].clone());
            if let Some(var) = &variance {
                if var.len() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        got: var.len(),
                        context: Some(format!("variance of entity {:?}", record.entity_id)),
                    });
                }
            }
            vectors.push(LatentVector {
                values,
                variance,
            });
        }
        if out.insert(record.entity_id.clone(), vectors).is_some() {
            return Err(Error::DuplicateEntity(record.entity_id));
        }
    }
    Ok(out)
}
