//! Okapi BM25 over an in-memory inverted index.
//!
//! score(q, d) = Σ IDF(qᵢ) · f(qᵢ,d)·(k1+1) / (f(qᵢ,d) + k1·(1 − b + b·|d|/avgdl))
//! IDF(qᵢ)     = ln((N − n(qᵢ) + 0.5) / (n(qᵢ) + 0.5) + 1)

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{tokenize, CandidateSet, RetrievalError, Scored};
use crate::corpus::DocId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.5, b: 0.75 }
    }
}

impl Bm25Params {
    pub fn validate(&self) -> Result<(), RetrievalError> {
        if !(self.k1 > 0.0 && self.k1.is_finite()) {
            return Err(RetrievalError::InvalidParameter(format!("k1 must be positive, got {}", self.k1)));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(RetrievalError::InvalidParameter(format!("b must lie in [0, 1], got {}", self.b)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bm25Index {
    params: Bm25Params,
    /// token → (doc, term frequency), ascending doc.
    postings: BTreeMap<String, Vec<(DocId, u32)>>,
    doc_len: Vec<u32>,
    avgdl: f64,
}

impl Bm25Index {
    /// Indexes `texts`; position i becomes `DocId(i)`.
    pub fn build<S: AsRef<str>>(texts: &[S], params: Bm25Params) -> Result<Self, RetrievalError> {
        params.validate()?;
        if texts.is_empty() {
            return Err(RetrievalError::EmptyCorpus);
        }
        let mut postings: BTreeMap<String, Vec<(DocId, u32)>> = BTreeMap::new();
        let mut doc_len = Vec::with_capacity(texts.len());
        for (i, text) in texts.iter().enumerate() {
            let tokens = tokenize(text.as_ref());
            doc_len.push(tokens.len() as u32);
            let mut counts: BTreeMap<String, u32> = BTreeMap::new();
            for t in tokens {
                *counts.entry(t).or_default() += 1;
            }
            for (token, tf) in counts {
                postings.entry(token).or_default().push((DocId(i as u32), tf));
            }
        }
        Self::from_parts(params, postings, doc_len)
    }

    pub(crate) fn from_parts(
        params: Bm25Params,
        postings: BTreeMap<String, Vec<(DocId, u32)>>,
        doc_len: Vec<u32>,
    ) -> Result<Self, RetrievalError> {
        params.validate()?;
        if doc_len.is_empty() {
            return Err(RetrievalError::EmptyCorpus);
        }
        let n = doc_len.len();
        for (token, list) in &postings {
            if list.iter().any(|(d, tf)| d.0 as usize >= n || *tf == 0)
                || list.windows(2).any(|w| w[0].0 >= w[1].0)
            {
                return Err(RetrievalError::CorruptIndex(format!("bad postings for token {token:?}")));
            }
        }
        let avgdl = doc_len.iter().map(|&l| l as f64).sum::<f64>() / n as f64;
        Ok(Self {
            params,
            postings,
            doc_len,
            avgdl,
        })
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn doc_count(&self) -> usize {
        self.doc_len.len()
    }

    pub fn avgdl(&self) -> f64 {
        self.avgdl
    }

    pub fn doc_lengths(&self) -> &[u32] {
        &self.doc_len
    }

    pub fn postings(&self) -> &BTreeMap<String, Vec<(DocId, u32)>> {
        &self.postings
    }

    /// Number of documents containing `token`.
    pub fn doc_freq(&self, token: &str) -> usize {
        self.postings.get(token).map_or(0, Vec::len)
    }

    pub fn idf(&self, token: &str) -> f64 {
        let n = self.doc_count() as f64;
        let df = self.doc_freq(token) as f64;
        ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
    }

    fn term_frequency(&self, token: &str, doc: DocId) -> u32 {
        self.postings
            .get(token)
            .and_then(|list| {
                list.binary_search_by_key(&doc, |(d, _)| *d)
                    .ok()
                    .map(|i| list[i].1)
            })
            .unwrap_or(0)
    }

    fn term_score(&self, idf: f64, tf: u32, doc_len: u32) -> f64 {
        let Bm25Params { k1, b } = self.params;
        let tf = tf as f64;
        let norm = 1.0 - b + b * doc_len as f64 / self.avgdl;
        idf * tf * (k1 + 1.0) / (tf + k1 * norm)
    }

    /// Sum over query tokens in stream order; repeated tokens count once per
    /// occurrence.
    pub fn score<S: AsRef<str>>(&self, query: &[S], doc: DocId) -> Result<f64, RetrievalError> {
        let len = *self
            .doc_len
            .get(doc.0 as usize)
            .ok_or(RetrievalError::UnknownDocument(doc))?;
        let mut total = 0.0;
        for token in query {
            let tf = self.term_frequency(token.as_ref(), doc);
            if tf > 0 {
                total += self.term_score(self.idf(token.as_ref()), tf, len);
            }
        }
        Ok(total)
    }

    /// The `k_prime` best documents with a positive score, ordered by
    /// (score desc, doc id asc).
    pub fn top<S: AsRef<str>>(&self, query: &[S], k_prime: usize) -> CandidateSet {
        let mut scores = vec![0.0f64; self.doc_count()];
        let mut touched = vec![false; self.doc_count()];
        for token in query {
            let Some(list) = self.postings.get(token.as_ref()) else { continue };
            let idf = self.idf(token.as_ref());
            for &(doc, tf) in list {
                let i = doc.0 as usize;
                scores[i] += self.term_score(idf, tf, self.doc_len[i]);
                touched[i] = true;
            }
        }
        let mut ranked: Vec<Scored> = scores
            .into_iter()
            .enumerate()
            .filter(|(i, s)| touched[*i] && *s > 0.0)
            .map(|(i, score)| Scored { doc: DocId(i as u32), score })
            .collect();
        super::sort_ranked(&mut ranked);
        ranked.truncate(k_prime);
        CandidateSet(ranked)
    }
}
