use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{tokenize, RetrievalError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector(pub Vec<f64>);

impl EmbeddingVector {
    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Cosine of the angle between `x` and `y`.
pub fn cosine_similarity(x: &EmbeddingVector, y: &EmbeddingVector) -> Result<f64, RetrievalError> {
    cosine_slices(&x.0, &y.0)
}

pub(crate) fn cosine_slices(x: &[f64], y: &[f64]) -> Result<f64, RetrievalError> {
    if x.len() != y.len() {
        return Err(RetrievalError::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    if nx == 0.0 || ny == 0.0 {
        return Err(RetrievalError::ZeroNorm);
    }
    Ok((dot / (nx * ny)).clamp(-1.0, 1.0))
}

/// Text encoder producing fixed-dimension vectors.
pub trait EmbeddingProvider: Send + Sync {
    fn name(&self) -> &str;

    fn dimension(&self) -> usize;

    /// One vector per input, in input order.
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, RetrievalError>;
}

/// Embeds `texts`, rejecting empty input and checking every returned vector
/// against the provider's declared dimension.
pub fn embed(provider: &dyn EmbeddingProvider, texts: &[String]) -> Result<Vec<EmbeddingVector>, RetrievalError> {
    if texts.is_empty() {
        return Err(RetrievalError::EmptyInput);
    }
    let vectors = provider.embed_batch(texts)?;
    if vectors.len() != texts.len() {
        return Err(RetrievalError::Provider(format!(
            "{} returned {} vectors for {} texts",
            provider.name(),
            vectors.len(),
            texts.len()
        )));
    }
    for v in &vectors {
        if v.dimension() != provider.dimension() {
            return Err(RetrievalError::DimensionMismatch {
                expected: provider.dimension(),
                actual: v.dimension(),
            });
        }
        if v.0.iter().any(|x| !x.is_finite()) {
            return Err(RetrievalError::Provider(format!("{} returned a non-finite entry", provider.name())));
        }
    }
    Ok(vectors)
}

/// 64-bit FNV-1a.
pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Offline bag-of-words encoder: each token is hashed to one of `dimension`
/// buckets, counts are accumulated and the vector is L2-normalized.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    dimension: usize,
}

impl HashEmbedder {
    pub const DEFAULT_DIMENSION: usize = 64;

    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "embedding dimension must be positive");
        Self { dimension }
    }

    pub fn embed_one(&self, text: &str) -> EmbeddingVector {
        let mut v = vec![0.0f64; self.dimension];
        for token in tokenize(text) {
            v[(fnv1a(token.as_bytes()) % self.dimension as u64) as usize] += 1.0;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        EmbeddingVector(v)
    }
}

impl Default for HashEmbedder {
    fn default() -> Self {
        Self::new(Self::DEFAULT_DIMENSION)
    }
}

impl EmbeddingProvider for HashEmbedder {
    fn name(&self) -> &str {
        "hash"
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, RetrievalError> {
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}

#[derive(Debug, Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [String],
}

#[derive(Debug, Deserialize)]
struct EmbedResponse {
    dimension: usize,
    vectors: Vec<Vec<f64>>,
}

/// Remote encoder. POSTs `{"texts": [...]}` and expects
/// `{"dimension": l, "vectors": [[...], ...]}`.
pub struct HttpEmbedder {
    endpoint: String,
    dimension: usize,
    agent: ureq::Agent,
}

impl HttpEmbedder {
    pub fn new(endpoint: impl Into<String>, dimension: usize, timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        Self {
            endpoint: endpoint.into(),
            dimension,
            agent,
        }
    }
}

impl EmbeddingProvider for HttpEmbedder {
    fn name(&self) -> &str {
        "http"
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, RetrievalError> {
        let response: EmbedResponse = self
            .agent
            .post(&self.endpoint)
            .send_json(EmbedRequest { texts })
            .and_then(|mut r| r.body_mut().read_json())
            .map_err(|e| RetrievalError::Provider(format!("{}: {e}", self.endpoint)))?;
        if response.dimension != self.dimension {
            return Err(RetrievalError::DimensionMismatch {
                expected: self.dimension,
                actual: response.dimension,
            });
        }
        Ok(response.vectors.into_iter().map(EmbeddingVector).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cosine_examples() {
        let x = EmbeddingVector(vec![1.0, 0.0]);
        let y = EmbeddingVector(vec![1.0, 1.0]);
        assert_eq!(cosine_similarity(&x, &x).unwrap(), 1.0);
        assert_eq!(cosine_similarity(&x, &EmbeddingVector(vec![0.0, 2.0])).unwrap(), 0.0);
        assert!((cosine_similarity(&x, &y).unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!(matches!(
            cosine_similarity(&x, &EmbeddingVector(vec![1.0])),
            Err(RetrievalError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            cosine_similarity(&x, &EmbeddingVector(vec![0.0, 0.0])),
            Err(RetrievalError::ZeroNorm)
        ));
    }

    #[test]
    fn hash_embedder_is_pure() {
        let e = HashEmbedder::default();
        let texts = vec!["abc".to_string(), "abc".to_string(), "Elm Street".to_string()];
        let v = embed(&e, &texts).unwrap();
        assert_eq!(v[0], v[1]);
        assert_eq!(v[0].dimension(), 64);
        assert!((v[2].norm() - 1.0).abs() < 1e-12);
        assert_eq!(v[0], e.embed_one("ABC!"));
        // FNV-1a("abc") = 0xe71fa2190541574b; 0x4b % 64 = 11.
        assert_eq!(fnv1a(b"abc"), 0xe71f_a219_0541_574b);
        assert_eq!(v[0].0[11], 1.0);
        assert!(matches!(embed(&e, &[]), Err(RetrievalError::EmptyInput)));
    }

    #[test]
    fn shared_vocabulary_raises_similarity() {
        let e = HashEmbedder::default();
        let q = e.embed_one("elm street oak avenue");
        let near = e.embed_one("elm street oak avenue river");
        let far = e.embed_one("bridge lane");
        assert!(cosine_similarity(&q, &near).unwrap() > cosine_similarity(&q, &far).unwrap());
    }

    struct Wrong;
    impl EmbeddingProvider for Wrong {
        fn name(&self) -> &str { "wrong" }
        fn dimension(&self) -> usize { 4 }
        fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, RetrievalError> {
            Ok(texts.iter().map(|_| EmbeddingVector(vec![1.0, f64::NAN, 0.0, 0.0])).collect())
        }
    }

    #[test]
    fn malformed_provider_output_is_surfaced() {
        assert!(matches!(embed(&Wrong, &["a".into()]), Err(RetrievalError::Provider(_))));
    }

    proptest! {
        #[test]
        fn cosine_scale_invariant(
            x in proptest::collection::vec(-10.0f64..10.0, 8),
            y in proptest::collection::vec(-10.0f64..10.0, 8),
            a in 0.01f64..100.0,
            b in 0.01f64..100.0,
        ) {
            let (x, y) = (EmbeddingVector(x), EmbeddingVector(y));
            prop_assume!(x.norm() > 1e-6 && y.norm() > 1e-6);
            let base = cosine_similarity(&x, &y).unwrap();
            let sx = EmbeddingVector(x.0.iter().map(|v| v * a).collect());
            let sy = EmbeddingVector(y.0.iter().map(|v| v * b).collect());
            let scaled = cosine_similarity(&sx, &sy).unwrap();
            prop_assert!((base - scaled).abs() <= 1e-12);
            prop_assert!((-1.0..=1.0).contains(&base));
        }
    }
}
