//! API-permission mapping discovery for Java-style SDK source trees.
//!
//! The pipeline runs in stages that share one line-oriented store:
//!
//! - [`extract`] scans a source corpus into [`ApiRecord`]s,
//! - [`llm`] asks a text-completion provider, in two roles, which permissions
//!   each method needs,
//! - [`verifier`] generates self-contained probes for the candidates and runs
//!   them against a simulated enforcement runtime,
//! - [`docaudit`] and [`evolution`] turn stores into gap, overlap,
//!   distribution and cross-version reports.

pub mod config;
pub mod docaudit;
pub mod evolution;
pub mod extract;
pub mod glob;
pub mod llm;
pub mod permission;
pub mod pipeline;
pub mod store;
pub mod verifier;

pub use extract::{ApiRecord, MethodSignature, SignatureKey};
pub use permission::{canonicalize_permission, Permission, PermissionSet};
pub use store::{Confidence, MappingStore, PermissionMapping, Provenance};
