//! Dual-role permission analysis through a pluggable text-completion provider.

pub mod analyze;
pub mod mock;
pub mod prompt;
pub mod provider;
pub mod verdict;

pub use analyze::{analyze_record, analyze_store, merge_verdicts, AnalysisError, AnalysisOptions, AnalyzeSummary};
pub use mock::MockProvider;
pub use prompt::{build_prompt, default_demonstrations, load_demonstrations, Demonstration, PromptBundle, PromptError, PromptLimits, Role, RoleProfile};
pub use provider::{complete_with_retry, CompletionRequest, HttpProvider, Provider, ProviderConfig, ProviderError, RetryPolicy, Task};
pub use verdict::{parse_verdict, AnalysisVerdict, ParsePath};
