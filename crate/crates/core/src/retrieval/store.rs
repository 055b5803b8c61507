//! On-disk knowledge base.
//!
//! A knowledge-base directory holds:
//! - `corpus.jsonl`: documents, see [`crate::corpus::write_corpus`];
//! - `postings.jsonl`: one `{"token": .., "postings": [[doc, tf], ..]}` per
//!   line, tokens ascending;
//! - `doc_stats.json`: `doc_count`, `avgdl`, `k1`, `b`, `doc_len`;
//! - `vectors.pgv`: magic `PGV1`, doc count and dimension as little-endian
//!   `u32`, then `doc_count × dimension` little-endian `f32` values.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{embed, Bm25Index, Bm25Params, EmbeddingProvider, EmbeddingVector, RetrievalError};
use crate::corpus::{read_corpus, write_corpus, DocId, Document};

pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const POSTINGS_FILE: &str = "postings.jsonl";
pub const DOC_STATS_FILE: &str = "doc_stats.json";
pub const VECTORS_FILE: &str = "vectors.pgv";

const MAGIC: &[u8; 4] = b"PGV1";
const EMBED_BATCH: usize = 64;

/// Precomputed document embeddings, one row per document, stored as `f32`.
#[derive(Debug, Clone, PartialEq)]
pub struct DocumentVectors {
    dimension: usize,
    data: Vec<f32>,
}

impl DocumentVectors {
    pub fn new(dimension: usize, vectors: &[EmbeddingVector]) -> Result<Self, RetrievalError> {
        let mut data = Vec::with_capacity(vectors.len() * dimension);
        for v in vectors {
            if v.dimension() != dimension {
                return Err(RetrievalError::DimensionMismatch {
                    expected: dimension,
                    actual: v.dimension(),
                });
            }
            data.extend(v.0.iter().map(|&x| x as f32));
        }
        Ok(Self { dimension, data })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.dimension).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, doc: DocId) -> Option<Vec<f64>> {
        let start = doc.0 as usize * self.dimension;
        self.data
            .get(start..start + self.dimension)
            .map(|r| r.iter().map(|&x| x as f64).collect())
    }

    pub fn write(&self, mut out: impl Write) -> std::io::Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&(self.len() as u32).to_le_bytes())?;
        out.write_all(&(self.dimension as u32).to_le_bytes())?;
        for v in &self.data {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read(mut input: impl Read) -> Result<Self, RetrievalError> {
        let mut header = [0u8; 12];
        input.read_exact(&mut header)?;
        if &header[0..4] != MAGIC {
            return Err(RetrievalError::CorruptIndex("vector file lacks PGV1 magic".into()));
        }
        let count = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
        let dimension = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
        let mut bytes = Vec::new();
        input.read_to_end(&mut bytes)?;
        if bytes.len() != count * dimension * 4 {
            return Err(RetrievalError::CorruptIndex(format!(
                "vector file holds {} bytes, header promises {count}×{dimension} floats",
                bytes.len()
            )));
        }
        let data = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self { dimension, data })
    }
}

#[derive(Serialize, Deserialize)]
struct PostingLine {
    token: String,
    postings: Vec<(DocId, u32)>,
}

#[derive(Serialize, Deserialize)]
struct DocStats {
    doc_count: usize,
    avgdl: f64,
    k1: f64,
    b: f64,
    doc_len: Vec<u32>,
}

/// Documents with their BM25 index and stored embeddings.
#[derive(Debug, Clone)]
pub struct KnowledgeBase {
    pub documents: Vec<Document>,
    pub index: Bm25Index,
    pub vectors: DocumentVectors,
}

impl KnowledgeBase {
    pub fn build(
        documents: Vec<Document>,
        params: Bm25Params,
        embedder: &dyn EmbeddingProvider,
    ) -> Result<Self, RetrievalError> {
        let texts: Vec<String> = documents.iter().map(|d| d.text.clone()).collect();
        let index = Bm25Index::build(&texts, params)?;
        let mut rows = Vec::with_capacity(texts.len());
        for chunk in texts.chunks(EMBED_BATCH) {
            rows.extend(embed(embedder, chunk)?);
        }
        let vectors = DocumentVectors::new(embedder.dimension(), &rows)?;
        Ok(Self {
            documents,
            index,
            vectors,
        })
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn document(&self, doc: DocId) -> Option<&Document> {
        self.documents.get(doc.0 as usize)
    }

    pub fn save(&self, dir: &Path) -> Result<(), RetrievalError> {
        fs::create_dir_all(dir)?;
        let mut out = BufWriter::new(File::create(dir.join(CORPUS_FILE))?);
        write_corpus(&self.documents, &mut out)?;
        out.flush()?;

        let mut out = BufWriter::new(File::create(dir.join(POSTINGS_FILE))?);
        for (token, postings) in self.index.postings() {
            serde_json::to_writer(
                &mut out,
                &PostingLine {
                    token: token.clone(),
                    postings: postings.clone(),
                },
            )?;
            out.write_all(b"\n")?;
        }
        out.flush()?;

        let params = self.index.params();
        let stats = DocStats {
            doc_count: self.index.doc_count(),
            avgdl: self.index.avgdl(),
            k1: params.k1,
            b: params.b,
            doc_len: self.index.doc_lengths().to_vec(),
        };
        fs::write(dir.join(DOC_STATS_FILE), serde_json::to_string_pretty(&stats)? + "\n")?;

        let mut out = BufWriter::new(File::create(dir.join(VECTORS_FILE))?);
        self.vectors.write(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, RetrievalError> {
        let documents = read_corpus(BufReader::new(File::open(dir.join(CORPUS_FILE))?))?;

        let mut postings = BTreeMap::new();
        for line in BufReader::new(File::open(dir.join(POSTINGS_FILE))?).lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let p: PostingLine = serde_json::from_str(&line)?;
            postings.insert(p.token, p.postings);
        }
        let stats: DocStats = serde_json::from_str(&fs::read_to_string(dir.join(DOC_STATS_FILE))?)?;
        if stats.doc_count != stats.doc_len.len() || stats.doc_count != documents.len() {
            return Err(RetrievalError::CorruptIndex(format!(
                "doc_count {} disagrees with {} lengths / {} documents",
                stats.doc_count,
                stats.doc_len.len(),
                documents.len()
            )));
        }
        let index = Bm25Index::from_parts(Bm25Params { k1: stats.k1, b: stats.b }, postings, stats.doc_len)?;
        if (index.avgdl() - stats.avgdl).abs() > 1e-9 * stats.avgdl.max(1.0) {
            return Err(RetrievalError::CorruptIndex("stored avgdl does not match doc lengths".into()));
        }
        let vectors = DocumentVectors::read(BufReader::new(File::open(dir.join(VECTORS_FILE))?))?;
        if vectors.len() != documents.len() {
            return Err(RetrievalError::CorruptIndex(format!(
                "{} vectors for {} documents",
                vectors.len(),
                documents.len()
            )));
        }
        Ok(Self {
            documents,
            index,
            vectors,
        })
    }
}
