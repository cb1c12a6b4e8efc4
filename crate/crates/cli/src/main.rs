use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use permap_core::config::PipelineConfig;
use permap_core::evolution::normalize_baseline;
use permap_core::extract::SourceCorpus;
use permap_core::llm::{default_demonstrations, load_demonstrations, AnalysisOptions, HttpProvider, MockProvider, Provider};
use permap_core::pipeline::{self, ReportInputs};
use permap_core::verifier::{load_snippet_corpus, PermissionOracle, VerifyOptions};

#[derive(Parser)]
#[command(name = "permap", version, about = "Build, verify and audit Android API permission mappings")]
struct Cli {
    /// TOML file with paths and tunables; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory holding run directories.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Answer model calls from a JSON file instead of a remote endpoint.
    #[arg(long, global = true)]
    mock_oracle: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan a source corpus into a new store.
    Extract {
        /// Corpus manifest (corpus.json) or its directory.
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Run the detector and analyst over every record.
    Analyze {
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long)]
        demonstrations: Option<PathBuf>,
    },
    /// Generate, refine and execute test cases for candidate mappings.
    Verify {
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long)]
        oracle: Option<PathBuf>,
        #[arg(long)]
        snippets: Option<PathBuf>,
        #[arg(long)]
        max_iterations: Option<usize>,
        #[arg(long)]
        max_cases: Option<usize>,
    },
    /// Write gap, distribution, overlap and diff reports next to the store.
    Report {
        #[arg(long)]
        store: Option<PathBuf>,
        /// Another store to diff against.
        #[arg(long)]
        against: Option<PathBuf>,
        /// Baseline mapping, one signature key per line.
        #[arg(long)]
        baseline: Option<PathBuf>,
        #[arg(long)]
        jni_only: bool,
        /// Directory of reference documentation pages.
        #[arg(long)]
        docs: Option<PathBuf>,
    },
    /// Write runnable probes and manifests for on-device execution.
    ExportDeviceBundle {
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long)]
        dest: PathBuf,
    },
    /// Rewrite a published mapping into signature keys.
    NormalizeBaseline {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(out) = &cli.out {
        config.out = out.clone();
    }
    if let Some(mock) = &cli.mock_oracle {
        config.mock_oracle = Some(mock.clone());
    }
    Ok(config)
}

fn provider(config: &PipelineConfig) -> Result<Box<dyn Provider>> {
    match config.optional("mock oracle", &config.mock_oracle)? {
        Some(path) => Ok(Box::new(MockProvider::from_path(&path)?)),
        None => Ok(Box::new(HttpProvider::new(config.provider.clone())?)),
    }
}

fn corpus_manifest(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join("corpus.json")
    } else {
        path.to_path_buf()
    }
}

fn stamp() -> String {
    chrono::Utc::now().format("%Y%m%dT%H%M%SZ").to_string()
}

fn run(cli: Cli) -> Result<()> {
    let mut config = load_config(&cli)?;
    match cli.command {
        Command::Extract { corpus } => {
            if corpus.is_some() {
                config.corpus = corpus;
            }
            let path = corpus_manifest(&config.require("corpus", &config.corpus)?);
            let corpus = SourceCorpus::from_manifest(&path)?;
            let outcome = pipeline::run_extract(&corpus, &config.keywords, &config.out, &stamp())?;
            println!("store: {}", outcome.store_path.display());
            println!("covered APIs: {}", outcome.covered);
            println!("keyword-recovered APIs: {}", outcome.keyword_records);
            println!("files with warnings: {}", outcome.warnings.len());
        }
        Command::Analyze { store, demonstrations } => {
            if demonstrations.is_some() {
                config.demonstrations = demonstrations;
            }
            let store_path = pipeline::resolve_store(&config.out, store.as_deref())?;
            let demos = match config.optional("demonstrations", &config.demonstrations)? {
                Some(p) => load_demonstrations(&p)?,
                None => default_demonstrations(),
            };
            let provider = provider(&config)?;
            let options = AnalysisOptions {
                limits: config.limits(),
                retry: config.retry(),
                max_in_flight: config.provider.max_in_flight,
            };
            let outcome = pipeline::run_analyze(&store_path, provider.as_ref(), &demos, &options)?;
            println!("analyzed APIs: {}", outcome.analyzed);
            println!("permission-required APIs: {}", outcome.permission_required);
            println!("failed APIs: {}", outcome.failed.len());
            if let Some(first) = outcome.failed.first().filter(|_| outcome.failed.len() == outcome.analyzed) {
                bail!("every analysis call failed; first failure: {first}");
            }
        }
        Command::Verify { store, oracle, snippets, max_iterations, max_cases } => {
            if oracle.is_some() {
                config.oracle = oracle;
            }
            if snippets.is_some() {
                config.snippets = snippets;
            }
            let store_path = pipeline::resolve_store(&config.out, store.as_deref())?;
            let oracle = PermissionOracle::load(&config.require("oracle", &config.oracle)?)?;
            let snippets = match config.optional("snippets", &config.snippets)? {
                Some(dir) => load_snippet_corpus(&dir)?,
                None => Vec::new(),
            };
            let provider = provider(&config)?;
            let options = VerifyOptions {
                similarity_threshold: config.similarity_threshold,
                max_iterations: max_iterations.unwrap_or(config.max_iterations),
                retry: config.retry(),
                max_cases: max_cases.or(config.max_cases),
                max_in_flight: config.provider.max_in_flight,
            };
            if options.max_iterations == 0 {
                bail!("--max-iterations must be at least 1");
            }
            let report = pipeline::run_verify(&store_path, provider.as_ref(), &snippets, &oracle, &options)?;
            println!("test cases: {}", report.cases.len());
            println!("verified APIs: {}", report.verified.len());
            println!("unverifiable APIs: {}", report.unverifiable.len());
            println!("rejected test cases: {}", report.rejected.len());
            for id in &report.rejected {
                println!("  rejected {id}");
            }
        }
        Command::Report { store, against, baseline, jni_only, docs } => {
            let store_path = pipeline::resolve_store(&config.out, store.as_deref())?;
            if docs.is_some() {
                config.docs = docs;
            }
            if baseline.is_some() {
                config.baseline = baseline;
            }
            let inputs = ReportInputs {
                against,
                baseline: config.optional("baseline", &config.baseline)?,
                jni_only,
                docs: config.optional("docs", &config.docs)?,
            };
            let outcome = pipeline::run_report(&store_path, &inputs)?;
            for n in &outcome.notices {
                eprintln!("{n}");
            }
            println!("permission-mapped APIs: {}", outcome.distribution_total);
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
        }
        Command::ExportDeviceBundle { store, dest } => {
            let store_path = pipeline::resolve_store(&config.out, store.as_deref())?;
            let cases = pipeline::run_export(&store_path, &dest)?;
            println!("exported {} test cases to {}", cases.len(), dest.display());
        }
        Command::NormalizeBaseline { input, output } => {
            let text = std::fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
            let normalized = normalize_baseline(&text);
            match output {
                Some(path) => std::fs::write(&path, normalized).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{normalized}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let chain: Vec<String> = e.chain().map(|c| c.to_string()).collect();
            eprintln!("error: {}", chain.join(": ").replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
