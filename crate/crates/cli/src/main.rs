//! `mdr`: import, export and validate data dictionaries, load ontology
//! snapshots, print compatibility reports and run the HTTP service.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use mdr_api::service::load_ontology_dir;
use mdr_api::Api;
use mdr_core::compat::{CompatEngine, Feature, MinLevel, RegistryPairSummary};
use mdr_core::config::Config;
use mdr_core::document::{export_string, import, to_model, DataDictionaryDocument, ImportMode};
use mdr_core::model::{ItemId, Model};
use mdr_core::validate::{strict_iso_check, validate_model, StrictIsoOptions};
use mdr_core::{Catalog, Store};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "mdr", version, about = "Metadata repository for clinical data dictionaries")]
struct Cli {
    /// Store directory; overrides data_dir from the config file.
    #[arg(long, global = true)]
    store: Option<PathBuf>,
    /// key = value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Subcommand)]
enum Command {
    /// Import a data dictionary document in one transaction.
    Import {
        file: PathBuf,
        #[arg(long, default_value = "strict")]
        mode: ImportMode,
    },
    /// Write the store as a data dictionary document.
    Export {
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Check a document (or the store). Exit status 0 clean, 1 warnings, 2 violations.
    Validate { file: Option<PathBuf> },
    /// Check an ontology snapshot and add it to the store's catalog.
    LoadOntology { file: PathBuf },
    /// One registry: summary against all others. Several: shared features.
    Report {
        #[arg(required = true)]
        registries: Vec<String>,
        #[arg(long, default_value = "partial")]
        min: MinLevel,
        /// Ask a running service instead of opening the store.
        #[arg(long)]
        remote: Option<String>,
        /// Bearer token for --remote; defaults to MDR_TOKEN.
        #[arg(long)]
        token: Option<String>,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        listen: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout().lock();
    match run(cli, &mut stdout) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load_config(cli: &Cli) -> Result<Config> {
    let mut config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    config = config.from_env()?;
    if let Some(dir) = &cli.store {
        config.data_dir = dir.clone();
    }
    Ok(config)
}

fn open_store(config: &Config) -> Result<Store> {
    Store::open_dir(&config.data_dir).with_context(|| format!("opening store {}", config.data_dir.display()))
}

fn open_catalog(config: &Config) -> Result<Catalog> {
    let catalog = Catalog::new();
    load_ontology_dir(&catalog, &config.data_dir.join("ontologies")).map_err(|e| anyhow!(e))?;
    Ok(catalog)
}

fn actor() -> String {
    std::env::var("USER").unwrap_or_else(|_| "cli".into())
}

fn run(cli: Cli, out: &mut dyn Write) -> Result<u8> {
    let config = load_config(&cli)?;
    let format = cli.format;
    match cli.command {
        Command::Import { file, mode } => {
            let text = std::fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
            let doc = DataDictionaryDocument::parse(&text)?;
            let store = open_store(&config)?;
            let report = import(&store, &actor(), &doc, mode)?;
            match format {
                Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?,
                Format::Table => {
                    writeln!(out, "{:<22} {:>8} {:>8} {:>8}", "kind", "created", "merged", "skipped")?;
                    for (kind, c) in &report.per_kind {
                        writeln!(out, "{:<22} {:>8} {:>8} {:>8}", kind.as_str(), c.created, c.merged, c.skipped)?;
                    }
                    writeln!(out, "links: {} created, {} existing; version {}", report.links_created, report.links_existing, report.version)?;
                }
            }
            Ok(0)
        }
        Command::Export { out: path } => {
            let store = open_store(&config)?;
            let text = export_string(&store.snapshot());
            match path {
                Some(p) => std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
                None => out.write_all(text.as_bytes())?,
            }
            Ok(0)
        }
        Command::Validate { file } => cmd_validate(&config, file.as_deref(), format, out),
        Command::LoadOntology { file } => {
            let text = std::fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
            let catalog = open_catalog(&config)?;
            let outcome = catalog.load_snapshot(&text)?;
            let dir = config.data_dir.join("ontologies");
            std::fs::create_dir_all(&dir)?;
            let name = file.file_name().ok_or_else(|| anyhow!("{} has no file name", file.display()))?;
            let mut dest = dir.join(name);
            dest.set_extension("jsonl");
            std::fs::write(&dest, text)?;
            writeln!(out, "{} new classes, {} total; saved as {}", outcome.new_classes, outcome.total_classes, dest.display())?;
            Ok(0)
        }
        Command::Report { registries, min, remote, token } => match remote {
            Some(base) => {
                let token = token.or_else(|| std::env::var("MDR_TOKEN").ok()).ok_or_else(|| anyhow!("--remote needs --token or MDR_TOKEN"))?;
                remote_report(&base, &token, &registries, min, format, out)
            }
            None => {
                let store = open_store(&config)?;
                let catalog = open_catalog(&config)?;
                local_report(&store.snapshot(), &catalog, &registries, min, format, out)
            }
        },
        Command::Serve { listen } => {
            tracing_subscriber::fmt().with_writer(std::io::stderr).init();
            let addr = listen.unwrap_or_else(|| config.listen_addr.clone());
            let addr = addr.parse().with_context(|| format!("bad listen address `{addr}`"))?;
            let api = Arc::new(Api::from_config(&config).map_err(|e| anyhow!(e))?);
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(mdr_api::server::serve(api, addr))?;
            Ok(0)
        }
    }
}

/// Validates a document file without touching the store, or the store itself.
/// An unreadable or unparsable document counts as a violation.
fn cmd_validate(config: &Config, file: Option<&Path>, format: Format, out: &mut dyn Write) -> Result<u8> {
    let model = match file {
        Some(path) => {
            let parsed = std::fs::read_to_string(path)
                .map_err(|e| e.to_string())
                .and_then(|t| DataDictionaryDocument::parse(&t).map_err(|e| e.to_string()));
            match parsed {
                Ok(doc) => to_model(&doc),
                Err(e) => {
                    writeln!(out, "violation: {}: {e}", path.display())?;
                    return Ok(2);
                }
            }
        }
        None => open_store(config)?.snapshot().as_ref().clone(),
    };
    let report = validate_model(&model);
    let relaxations = strict_iso_check(&model, StrictIsoOptions::default());
    let code = report.exit_code() as u8;
    match format {
        Format::Json => {
            let v = json!({ "exit_code": code, "findings": report.findings, "relaxations": relaxations });
            writeln!(out, "{}", serde_json::to_string_pretty(&v)?)?;
        }
        Format::Table => {
            for f in &report.findings {
                writeln!(out, "{f}")?;
            }
            for r in &relaxations {
                writeln!(out, "note: {} {} has {} parents via {}", r.child_kind, r.label, r.parents.len(), r.relation)?;
            }
            let (v, w) = (report.violations().count(), report.warnings().count());
            writeln!(out, "{v} violations, {w} warnings, {} many-parent items", relaxations.len())?;
        }
    }
    Ok(code)
}

fn resolve_registries(model: &Model, names: &[String]) -> Result<Vec<ItemId>> {
    names
        .iter()
        .map(|n| {
            if model.registries.contains_key(&ItemId::from(n.as_str())) {
                return Ok(ItemId::from(n.as_str()));
            }
            model.find_registry_by_name(n).ok_or_else(|| anyhow!("no registry named `{n}`"))
        })
        .collect()
}

fn local_report(model: &Model, catalog: &Catalog, names: &[String], min: MinLevel, format: Format, out: &mut dyn Write) -> Result<u8> {
    let ids = resolve_registries(model, names)?;
    let index = catalog.index();
    let engine = CompatEngine::new(model, &*index);
    let name_of = |id: &ItemId| model.registries.get(id).map(|r| r.name.clone()).unwrap_or_else(|| id.to_string());
    if let [one] = ids.as_slice() {
        let mut rows = Vec::new();
        for other in model.registries.keys().filter(|r| *r != one) {
            rows.push((name_of(other), engine.registry_pair_summary(one, other)?));
        }
        rows.sort_by(|a, b| a.0.to_lowercase().cmp(&b.0.to_lowercase()).then_with(|| a.0.cmp(&b.0)));
        print_summary(&name_of(one), &rows, format, out)
    } else {
        let set: BTreeSet<ItemId> = ids.into_iter().collect();
        let features = engine.discover_features(&set, min)?;
        print_features(&features, &name_of, format, out)
    }
}

fn print_summary(name: &str, rows: &[(String, RegistryPairSummary)], format: Format, out: &mut dyn Write) -> Result<u8> {
    match format {
        Format::Json => {
            let v: Vec<Value> = rows.iter().map(|(n, s)| json!({ "registry": n, "summary": s })).collect();
            writeln!(out, "{}", serde_json::to_string_pretty(&json!({ "registry": name, "comparisons": v }))?)?;
        }
        Format::Table => {
            writeln!(out, "{name}")?;
            writeln!(out, "{:<40} {:>6} {:>6} {:>8} {:>12}", "compared with", "shared", "full", "partial", "incompatible")?;
            for (n, s) in rows {
                writeln!(
                    out,
                    "{:<40} {:>6} {:>6} {:>8} {:>12}",
                    n, s.shared_concept_count, s.fully_compatible_pairs, s.partially_compatible_pairs, s.incompatible_pairs
                )?;
            }
        }
    }
    Ok(0)
}

fn print_features(features: &[Feature], name_of: &dyn Fn(&ItemId) -> String, format: Format, out: &mut dyn Write) -> Result<u8> {
    match format {
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(features)?)?,
        Format::Table => {
            if features.is_empty() {
                writeln!(out, "no shared features")?;
            }
            for f in features {
                let level = serde_json::to_value(f.level)?;
                writeln!(out, "{} ({}) {}", f.label, f.concept, level.as_str().unwrap_or_default())?;
                for (reg, elements) in &f.elements {
                    writeln!(out, "  {}: {} element(s)", name_of(reg), elements.len())?;
                }
            }
        }
    }
    Ok(0)
}

fn remote_get(client: &reqwest::blocking::Client, base: &str, token: &str, path: &str) -> Result<Value> {
    let url = format!("{}{path}", base.trim_end_matches('/'));
    let resp = client.get(&url).bearer_auth(token).send().with_context(|| format!("GET {url}"))?;
    let status = resp.status();
    let body: Value = serde_json::from_str(&resp.text()?).unwrap_or(Value::Null);
    if !status.is_success() {
        bail!("GET {url}: {status}: {}", body["error"]["message"].as_str().unwrap_or("no details"));
    }
    Ok(body)
}

fn remote_report(base: &str, token: &str, names: &[String], min: MinLevel, format: Format, out: &mut dyn Write) -> Result<u8> {
    let client = reqwest::blocking::Client::new();
    let listed = remote_get(&client, base, token, "/api/registries?limit=500")?;
    let known: Vec<(String, String)> = listed["items"]
        .as_array()
        .map(|items| {
            items
                .iter()
                .map(|r| (r["id"].as_str().unwrap_or_default().to_string(), r["name"].as_str().unwrap_or_default().to_string()))
                .collect()
        })
        .unwrap_or_default();
    let ids: Vec<String> = names
        .iter()
        .map(|n| {
            known
                .iter()
                .find(|(id, name)| id == n || name == n)
                .map(|(id, _)| id.clone())
                .ok_or_else(|| anyhow!("no registry named `{n}`"))
        })
        .collect::<Result<_>>()?;
    let name_of = |id: &ItemId| known.iter().find(|(k, _)| k == id.as_str()).map_or_else(|| id.to_string(), |(_, n)| n.clone());
    if let [one] = ids.as_slice() {
        let body = remote_get(&client, base, token, &format!("/api/registries/{one}/summary"))?;
        let mut rows = Vec::new();
        for c in body["comparisons"].as_array().cloned().unwrap_or_default() {
            let s: RegistryPairSummary = serde_json::from_value(c["summary"].clone())?;
            rows.push((c["registry"]["name"].as_str().unwrap_or_default().to_string(), s));
        }
        print_summary(&name_of(&one.as_str().into()), &rows, format, out)
    } else {
        let min = serde_json::to_value(min)?;
        let path = format!("/api/discover?registries={}&min={}", ids.join(","), min.as_str().unwrap_or("partial"));
        let body = remote_get(&client, base, token, &path)?;
        let features: Vec<Feature> = serde_json::from_value(body["features"].clone())?;
        print_features(&features, &name_of, format, out)
    }
}
