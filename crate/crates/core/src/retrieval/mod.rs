//! Two-stage hybrid retrieval: BM25 narrows the corpus to `k_prime`
//! candidates, then cosine similarity between the query embedding and the
//! stored document vectors picks the final `k`.

mod bm25;
mod embed;
mod store;
mod tokenize;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::DocId;

pub use bm25::{Bm25Index, Bm25Params};
pub use embed::{cosine_similarity, embed, EmbeddingProvider, EmbeddingVector, HashEmbedder, HttpEmbedder};
pub use store::{DocumentVectors, KnowledgeBase, CORPUS_FILE, DOC_STATS_FILE, POSTINGS_FILE, VECTORS_FILE};
pub use tokenize::tokenize;
pub(crate) use embed::fnv1a;

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("cannot index an empty corpus")]
    EmptyCorpus,
    #[error("no texts to embed")]
    EmptyInput,
    #[error("unknown document {0}")]
    UnknownDocument(DocId),
    #[error("no stored vector for document {0}")]
    MissingVector(DocId),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("zero-norm vector")]
    ZeroNorm,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("embedding provider failed: {0}")]
    Provider(String),
    #[error("corrupt index: {0}")]
    CorruptIndex(String),
    #[error(transparent)]
    Corpus(#[from] crate::corpus::CorpusError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scored {
    pub doc: DocId,
    pub score: f64,
}

/// Orders by score descending, then doc id ascending.
pub(crate) fn sort_ranked(items: &mut [Scored]) {
    items.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.doc.cmp(&b.doc)));
}

/// Stage-one output, ranked by BM25 score.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet(pub Vec<Scored>);

/// Stage-two output, ranked by cosine similarity.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult(pub Vec<Scored>);

impl RetrievalResult {
    pub fn doc_ids(&self) -> Vec<DocId> {
        self.0.iter().map(|s| s.doc).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }
}

/// Re-scores `candidates` against `query` using their stored vectors and
/// keeps the best `k`.
pub fn rerank(
    candidates: &CandidateSet,
    query: &EmbeddingVector,
    vectors: &DocumentVectors,
    k: usize,
) -> Result<RetrievalResult, RetrievalError> {
    if k == 0 {
        return Err(RetrievalError::InvalidParameter("k must be at least 1".into()));
    }
    let mut scored = Vec::with_capacity(candidates.0.len());
    for c in &candidates.0 {
        let row = vectors.row(c.doc).ok_or(RetrievalError::MissingVector(c.doc))?;
        scored.push(Scored {
            doc: c.doc,
            score: embed::cosine_slices(&query.0, &row)?,
        });
    }
    sort_ranked(&mut scored);
    scored.truncate(k);
    Ok(RetrievalResult(scored))
}

/// Texts for the two stages: the plain query for lexical matching and the
/// instruction-augmented query for embedding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetrievalQuery {
    pub lexical: String,
    pub semantic: String,
}

impl RetrievalQuery {
    pub fn plain(text: impl Into<String>) -> Self {
        let text = text.into();
        Self {
            lexical: text.clone(),
            semantic: text,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RetrievalTimings {
    pub lexical: Duration,
    pub embedding: Duration,
    pub rerank: Duration,
}

impl RetrievalTimings {
    pub fn total(&self) -> Duration {
        self.lexical + self.embedding + self.rerank
    }
}

#[derive(Debug, Clone)]
pub struct Retrieval {
    pub candidates: CandidateSet,
    pub result: RetrievalResult,
    pub timings: RetrievalTimings,
}

/// BM25 filtering followed by cosine re-ranking. An empty candidate set
/// yields an empty result without calling the embedder.
pub fn retrieve(
    kb: &KnowledgeBase,
    embedder: &dyn EmbeddingProvider,
    query: &RetrievalQuery,
    k_prime: usize,
    k: usize,
) -> Result<Retrieval, RetrievalError> {
    if k_prime == 0 || k == 0 {
        return Err(RetrievalError::InvalidParameter("k_prime and k must be at least 1".into()));
    }
    let started = Instant::now();
    let candidates = kb.index.top(&tokenize(&query.lexical), k_prime);
    let mut timings = RetrievalTimings {
        lexical: started.elapsed(),
        ..Default::default()
    };
    if candidates.0.is_empty() {
        return Ok(Retrieval {
            candidates,
            result: RetrievalResult::default(),
            timings,
        });
    }

    let started = Instant::now();
    let query_vec = embed(embedder, std::slice::from_ref(&query.semantic))?
        .pop()
        .expect("one vector per text");
    if query_vec.dimension() != kb.vectors.dimension() {
        return Err(RetrievalError::DimensionMismatch {
            expected: kb.vectors.dimension(),
            actual: query_vec.dimension(),
        });
    }
    timings.embedding = started.elapsed();

    let started = Instant::now();
    let result = rerank(&candidates, &query_vec, &kb.vectors, k)?;
    timings.rerank = started.elapsed();
    Ok(Retrieval {
        candidates,
        result,
        timings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;
    use crate::roadnet::NodeId;
    use proptest::prelude::*;

    pub(crate) fn docs(texts: &[&str]) -> Vec<Document> {
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| Document {
                doc_id: DocId(i as u32),
                origin: NodeId(i as u64),
                destination: NodeId(i as u64 + 1000),
                origin_address: format!("o{i}"),
                destination_address: format!("d{i}"),
                text: t.to_string(),
            })
            .collect()
    }

    fn cands(ids: &[u32]) -> CandidateSet {
        CandidateSet(ids.iter().map(|&d| Scored { doc: DocId(d), score: 1.0 }).collect())
    }

    fn vectors(rows: &[Vec<f64>]) -> DocumentVectors {
        let v: Vec<EmbeddingVector> = rows.iter().cloned().map(EmbeddingVector).collect();
        DocumentVectors::new(rows[0].len(), &v).unwrap()
    }

    #[test]
    fn rerank_single_and_saturated() {
        let m = vectors(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]);
        let q = EmbeddingVector(vec![0.0, 1.0]);
        let one = rerank(&cands(&[0]), &q, &m, 5).unwrap();
        assert_eq!(one.doc_ids(), vec![DocId(0)]);
        let all = rerank(&cands(&[0, 1, 2]), &q, &m, 9).unwrap();
        assert_eq!(all.doc_ids(), vec![DocId(1), DocId(2), DocId(0)]);
        let missing = rerank(&cands(&[7]), &q, &m, 1);
        assert!(matches!(missing, Err(RetrievalError::MissingVector(DocId(7)))));
    }

    #[test]
    fn rerank_matches_pairwise_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let rows: Vec<Vec<f64>> = (0..10).map(|_| (0..6).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let m = vectors(&rows);
        let q: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut oracle: Vec<(f64, u32)> = rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                // f32 storage round-trip, as persisted.
                let r: Vec<f64> = r.iter().map(|v| *v as f32 as f64).collect();
                let dot: f64 = r.iter().zip(&q).map(|(a, b)| a * b).sum();
                let n = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
                (dot / (n(&r) * n(&q)), i as u32)
            })
            .collect();
        oracle.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        let got = rerank(&cands(&(0..10).collect::<Vec<_>>()), &EmbeddingVector(q), &m, 10).unwrap();
        assert_eq!(got.doc_ids(), oracle.iter().map(|x| DocId(x.1)).collect::<Vec<_>>());
    }

    #[test]
    fn unique_road_ranks_first() {
        let texts = [
            "from a to b follows Elm Street, Oak Avenue",
            "from c to d follows Elm Street, Pine Road",
            "from e to f follows Oak Avenue, Birch Lane",
            "from g to h follows Maple Street",
            "from i to j follows Pine Road, Birch Lane",
            "from k to l follows Cedar Street",
            "from m to n follows Willow Street",
            "from o to p follows Jinjiang Expressway, Elm Street",
        ];
        let kb = KnowledgeBase::build(docs(&texts), Bm25Params::default(), &HashEmbedder::default()).unwrap();
        let r = retrieve(&kb, &HashEmbedder::default(), &RetrievalQuery::plain("take the jinjiang expressway"), 100, 9).unwrap();
        assert_eq!(r.result.0[0].doc, DocId(7));
        let none = retrieve(&kb, &HashEmbedder::default(), &RetrievalQuery::plain("zzz qqq"), 100, 9).unwrap();
        assert!(none.result.is_empty());
        let six = retrieve(&kb, &HashEmbedder::default(), &RetrievalQuery::plain("street"), 100, 9).unwrap();
        assert_eq!(six.candidates.0.len(), 6);
        assert_eq!(six.result.len(), 6);
    }

    proptest! {
        #[test]
        fn result_is_ordered_subset_and_deterministic(seed in any::<u64>(), k in 1usize..12, kp in 1usize..30) {
            use rand::{Rng, SeedableRng};
            let vocab = ["elm", "oak", "street", "avenue", "ring", "road", "north", "park"];
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let texts: Vec<String> = (0..25)
                .map(|_| (0..rng.random_range(1..10)).map(|_| vocab[rng.random_range(0..vocab.len())]).collect::<Vec<_>>().join(" "))
                .collect();
            let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
            let kb = KnowledgeBase::build(docs(&refs), Bm25Params::default(), &HashEmbedder::default()).unwrap();
            let q = RetrievalQuery::plain(vocab[rng.random_range(0..vocab.len())].to_string() + " park");
            let a = retrieve(&kb, &HashEmbedder::default(), &q, kp, k).unwrap();
            let b = retrieve(&kb, &HashEmbedder::default(), &q, kp, k).unwrap();
            prop_assert_eq!(&a.result, &b.result);
            prop_assert!(a.result.len() <= k.min(a.candidates.0.len()));
            prop_assert!(a.candidates.0.len() <= kp);
            for s in &a.result.0 {
                prop_assert!(a.candidates.0.iter().any(|c| c.doc == s.doc));
            }
            for w in a.result.0.windows(2) {
                prop_assert!(w[0].score > w[1].score || (w[0].score == w[1].score && w[0].doc < w[1].doc));
            }
            for w in a.candidates.0.windows(2) {
                prop_assert!(w[0].score > w[1].score || (w[0].score == w[1].score && w[0].doc < w[1].doc));
            }
        }
    }
}
