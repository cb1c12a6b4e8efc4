//! Method extraction from Java-style SDK source trees.

pub mod annotations;
pub mod corpus;
pub mod keyword;
pub mod lexer;
pub mod parser;
pub mod record;

pub use annotations::{extract_declared_permissions, DeclaredPermissions};
pub use corpus::{detect_jni, scan_corpus, CorpusError, CorpusManifest, ScanOptions, ScanReport, ScanWarning, SourceCorpus};
pub use keyword::{keyword_scan, keyword_scan_with, KeywordMatch};
pub use parser::{parse_file_methods, ParseFailure, ParsedFile, ParsedMethod};
pub use record::{api_id, ApiRecord, ExtractionSource, Location, MethodSignature, Modifier, SignatureKey};
