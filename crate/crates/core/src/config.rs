//! Pipeline configuration file (TOML). Relative paths resolve against the
//! directory holding the file. Credentials are never read from here; the
//! provider section only names the environment variable that holds one.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::extract::keyword::default_keywords;
use crate::llm::{PromptLimits, ProviderConfig, RetryPolicy};
use crate::verifier::{DEFAULT_MAX_ITERATIONS, DEFAULT_SIMILARITY_THRESHOLD};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Io { path: String, message: String },
    #[error("invalid config {path}: {message}")]
    Invalid { path: String, message: String },
    #[error("{what} path does not exist: {path}")]
    MissingPath { what: &'static str, path: String },
    #[error("{0} is not configured")]
    Unset(&'static str),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus: Option<PathBuf>,
    pub out: PathBuf,
    pub demonstrations: Option<PathBuf>,
    pub snippets: Option<PathBuf>,
    pub oracle: Option<PathBuf>,
    pub docs: Option<PathBuf>,
    pub mock_oracle: Option<PathBuf>,
    pub baseline: Option<PathBuf>,
    pub max_iterations: usize,
    pub similarity_threshold: f64,
    pub keywords: Vec<String>,
    pub body_budget: usize,
    pub max_prompt_chars: usize,
    pub retries: u32,
    pub retry_delay_ms: u64,
    pub max_cases: Option<usize>,
    pub provider: ProviderConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let limits = PromptLimits::default();
        let retry = RetryPolicy::default();
        Self {
            corpus: None,
            out: PathBuf::from("runs"),
            demonstrations: None,
            snippets: None,
            oracle: None,
            docs: None,
            mock_oracle: None,
            baseline: None,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            similarity_threshold: DEFAULT_SIMILARITY_THRESHOLD,
            keywords: default_keywords(),
            body_budget: limits.body_budget,
            max_prompt_chars: limits.max_prompt_chars,
            retries: retry.retries,
            retry_delay_ms: retry.base_delay.as_millis() as u64,
            max_cases: None,
            provider: ProviderConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let mut config: Self = toml::from_str(text).map_err(|e| ConfigError::Invalid {
            path: base.display().to_string(),
            message: e.message().to_string(),
        })?;
        config.resolve(base);
        config.check().map_err(|message| ConfigError::Invalid { path: base.display().to_string(), message })?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base).map_err(|e| match e {
            ConfigError::Invalid { message, .. } => ConfigError::Invalid { path: path.display().to_string(), message },
            other => other,
        })
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() && !base.as_os_str().is_empty() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.out);
        for p in [
            &mut self.corpus,
            &mut self.demonstrations,
            &mut self.snippets,
            &mut self.oracle,
            &mut self.docs,
            &mut self.mock_oracle,
            &mut self.baseline,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    fn check(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.similarity_threshold) {
            return Err("similarity_threshold must lie in [0, 1]".into());
        }
        if self.max_iterations == 0 {
            return Err("max_iterations must be at least 1".into());
        }
        self.provider.validate().map_err(|e| e.to_string())
    }

    pub fn limits(&self) -> PromptLimits {
        PromptLimits { body_budget: self.body_budget, max_prompt_chars: self.max_prompt_chars }
    }

    pub fn retry(&self) -> RetryPolicy {
        RetryPolicy { retries: self.retries, base_delay: std::time::Duration::from_millis(self.retry_delay_ms) }
    }

    /// The configured path, checked to exist.
    pub fn require(&self, what: &'static str, path: &Option<PathBuf>) -> Result<PathBuf, ConfigError> {
        let p = path.clone().ok_or(ConfigError::Unset(what))?;
        if p.exists() {
            Ok(p)
        } else {
            Err(ConfigError::MissingPath { what, path: p.display().to_string() })
        }
    }

    /// Like [`require`](Self::require) but `None` when unset.
    pub fn optional(&self, what: &'static str, path: &Option<PathBuf>) -> Result<Option<PathBuf>, ConfigError> {
        match path {
            None => Ok(None),
            Some(_) => self.require(what, path).map(Some),
        }
    }
}
