//! TOML experiment configuration. Relative paths are taken relative to the
//! directory holding the config file.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use pathgpt::eval::TaskParams;
use pathgpt::llm::{EchoMock, HttpChatConfig, HttpChatProvider, LlmProvider, NoisyMock};
use pathgpt::retrieval::{Bm25Params, EmbeddingProvider, HashEmbedder, HttpEmbedder};
use pathgpt::roadnet::{FuelParams, ScenicParams, WeightProfile};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Label used in reports.
    pub dataset: String,
    pub network_path: PathBuf,
    pub poi_path: PathBuf,
    pub address_book_path: PathBuf,
    pub trajectory_path: PathBuf,
    /// Optional trajectories kept out of the knowledge base for evaluation.
    pub held_out_path: Option<PathBuf>,
    pub kb_dir: PathBuf,
    /// Share of `trajectory_path` randomly held out as well.
    pub held_out_fraction: f64,
    pub seed: u64,
    pub retrieval: RetrievalConfig,
    pub embedding: EmbeddingConfig,
    pub llm: LlmConfig,
    pub scenic: ScenicParams,
    pub fuel: FuelParams,
    pub eval: EvalSettings,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            dataset: "dataset".to_string(),
            network_path: "network.txt".into(),
            poi_path: "pois.csv".into(),
            address_book_path: "addresses.csv".into(),
            trajectory_path: "trajectories.txt".into(),
            held_out_path: None,
            kb_dir: "kb".into(),
            held_out_fraction: 0.01,
            seed: 42,
            retrieval: RetrievalConfig::default(),
            embedding: EmbeddingConfig::default(),
            llm: LlmConfig::default(),
            scenic: ScenicParams::default(),
            fuel: FuelParams::default(),
            eval: EvalSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalConfig {
    pub k1: f64,
    pub b: f64,
    pub k_prime: usize,
    pub k: usize,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        let p = Bm25Params::default();
        Self {
            k1: p.k1,
            b: p.b,
            k_prime: 100,
            k: 9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingKind {
    Hash,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingConfig {
    pub provider: EmbeddingKind,
    pub endpoint: String,
    pub dimension: usize,
    pub timeout_s: f64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            provider: EmbeddingKind::Hash,
            endpoint: "http://127.0.0.1:8080/embed".to_string(),
            dimension: HashEmbedder::DEFAULT_DIMENSION,
            timeout_s: 60.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LlmKind {
    Echo,
    Noisy,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmConfig {
    pub provider: LlmKind,
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub timeout_s: f64,
    pub max_tokens: u32,
    pub max_in_flight: usize,
    /// Share of junk answers from the noisy mock.
    pub junk_rate: f64,
}

impl Default for LlmConfig {
    fn default() -> Self {
        let http = HttpChatConfig::default();
        Self {
            provider: LlmKind::Echo,
            endpoint: http.endpoint,
            model: http.model,
            temperature: http.temperature,
            timeout_s: http.timeout_s,
            max_tokens: http.max_tokens,
            max_in_flight: 4,
            junk_rate: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OdSource {
    /// OD pairs of the held-out trajectories.
    HeldOut,
    /// Uniformly drawn connected pairs.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSettings {
    pub od_source: OdSource,
    /// Sample count cap for gen-truth.
    pub samples: usize,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            od_source: OdSource::HeldOut,
            samples: 50,
        }
    }
}

impl Config {
    /// Reads `path` and anchors relative paths at its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let mut config: Config =
            toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.anchor(base);
        config.validate()?;
        Ok(config)
    }

    fn anchor(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.network_path);
        fix(&mut self.poi_path);
        fix(&mut self.address_book_path);
        fix(&mut self.trajectory_path);
        fix(&mut self.kb_dir);
        if let Some(p) = self.held_out_path.as_mut() {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.bm25().validate().map_err(|e| anyhow::anyhow!("{e}"))?;
        if self.retrieval.k == 0 || self.retrieval.k_prime == 0 {
            bail!("retrieval.k and retrieval.k_prime must be at least 1");
        }
        if !(0.0..1.0).contains(&self.held_out_fraction) {
            bail!("held_out_fraction must lie in [0, 1), got {}", self.held_out_fraction);
        }
        if self.embedding.dimension == 0 {
            bail!("embedding.dimension must be at least 1");
        }
        let l = &self.llm;
        if !(l.temperature >= 0.0) || !(l.timeout_s > 0.0) || !(self.embedding.timeout_s > 0.0) {
            bail!("temperatures must be non-negative and timeouts positive");
        }
        if l.max_in_flight == 0 {
            bail!("llm.max_in_flight must be at least 1");
        }
        if !(0.0..=1.0).contains(&l.junk_rate) {
            bail!("llm.junk_rate must lie in [0, 1], got {}", l.junk_rate);
        }
        for profile in [WeightProfile::Scenic(self.scenic), WeightProfile::Fuel(self.fuel)] {
            profile.validate().map_err(|e| anyhow::anyhow!("{e}"))?;
        }
        Ok(())
    }

    pub fn bm25(&self) -> Bm25Params {
        Bm25Params {
            k1: self.retrieval.k1,
            b: self.retrieval.b,
        }
    }

    pub fn task_params(&self) -> TaskParams {
        TaskParams {
            scenic: self.scenic,
            fuel: self.fuel,
        }
    }

    pub fn embedder(&self) -> Box<dyn EmbeddingProvider> {
        let e = &self.embedding;
        match e.provider {
            EmbeddingKind::Hash => Box::new(HashEmbedder::new(e.dimension)),
            EmbeddingKind::Http => Box::new(HttpEmbedder::new(
                e.endpoint.clone(),
                e.dimension,
                Duration::from_secs_f64(e.timeout_s),
            )),
        }
    }

    pub fn provider(&self) -> Box<dyn LlmProvider> {
        let l = &self.llm;
        match l.provider {
            LlmKind::Echo => Box::new(EchoMock),
            LlmKind::Noisy => Box::new(NoisyMock::new(l.junk_rate, self.seed)),
            LlmKind::Http => Box::new(HttpChatProvider::new(HttpChatConfig {
                endpoint: l.endpoint.clone(),
                model: l.model.clone(),
                temperature: l.temperature,
                max_tokens: l.max_tokens,
                timeout_s: l.timeout_s,
            })),
        }
    }

    /// Config text for a generated dataset directory, paths relative to it.
    pub fn render(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_anchoring() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pathgpt.toml");
        fs::write(&path, "dataset = \"x\"\n[retrieval]\nk = 3\n[llm]\nprovider = \"noisy\"\n").unwrap();
        let c = Config::load(&path).unwrap();
        assert_eq!(c.retrieval.k, 3);
        assert_eq!(c.retrieval.k_prime, 100);
        assert_eq!(c.llm.provider, LlmKind::Noisy);
        assert_eq!(c.kb_dir, dir.path().join("kb"));
        assert_eq!(c.embedding.dimension, 64);

        fs::write(&path, "[retrieval]\nb = 2.0\n").unwrap();
        assert!(Config::load(&path).is_err());
        fs::write(&path, "colour = 1\n").unwrap();
        assert!(Config::load(&path).is_err());
        let back: Config = toml::from_str(&Config::default().render()).unwrap();
        assert_eq!(back, Config::default());
    }
}
