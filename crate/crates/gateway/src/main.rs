use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use coopnet_core::ontology::{parse_document, Document, OntologyWarehouse};
use coopnet_core::platform::{AccountRole, Platform, PlatformConfig};
use coopnet_core::registry::{ServiceDescription, ServiceQuery};
use coopnet_gateway::protocol::{error_code, results_view};
use coopnet_gateway::scenario::{replay, run_scenario, Scenario};
use coopnet_gateway::server::Server;
use serde_json::Value;

#[derive(Parser)]
#[command(name = "coopnet", version, about = "Agent-based service cooperation platform")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Serve the JSON line protocol over TCP.
    Serve {
        #[arg(long, default_value_t = 7878)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Directory for registry, accounts, history and contracts.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Ontology or mapping document to load (repeatable).
        #[arg(long)]
        ontology: Vec<PathBuf>,
        /// Load the scenario's documents and replay its account and publish steps.
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
    /// Replay a scenario in memory and print its metrics.
    Sim {
        #[arg(long)]
        scenario: PathBuf,
        /// Overrides the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// File holding the expected trace hash.
        #[arg(long)]
        golden: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Rank the services of a directory against one query.
    Match {
        #[arg(long)]
        query: PathBuf,
        /// Directory of .svc files.
        #[arg(long)]
        registry: PathBuf,
        #[arg(long, required = true)]
        ontology: Vec<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Ontology document tools.
    Ontology {
        #[command(subcommand)]
        command: OntologyCommand,
    },
}

#[derive(Subcommand)]
enum OntologyCommand {
    /// Parse and validate one document.
    Check { file: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Serve {
            port,
            host,
            data,
            seed,
            ontology,
            scenario,
        } => serve(&host, port, data, seed, &ontology, scenario.as_deref()),
        Command::Sim {
            scenario,
            seed,
            golden,
            json,
        } => sim(&scenario, seed, golden.as_deref(), json),
        Command::Match {
            query,
            registry,
            ontology,
            seed,
            json,
        } => match_services(&query, &registry, &ontology, seed, json),
        Command::Ontology {
            command: OntologyCommand::Check { file },
        } => check(&file),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn warehouse(paths: &[PathBuf]) -> Result<OntologyWarehouse, String> {
    let texts = paths.iter().map(|p| read(p)).collect::<Result<Vec<_>, _>>()?;
    OntologyWarehouse::from_documents(texts.iter().map(String::as_str)).map_err(|e| e.to_string())
}

fn serve(
    host: &str,
    port: u16,
    data: Option<PathBuf>,
    seed: u64,
    ontology: &[PathBuf],
    scenario: Option<&Path>,
) -> Result<(), String> {
    let config = PlatformConfig {
        seed,
        data_dir: data,
        ..PlatformConfig::default()
    };
    let platform = match scenario {
        Some(path) => {
            let sc = Scenario::load(path).map_err(|e| e.to_string())?;
            let mut docs: Vec<String> = sc.documents.iter().map(|(_, t)| t.clone()).collect();
            for p in ontology {
                docs.push(read(p)?);
            }
            let wh = OntologyWarehouse::from_documents(docs.iter().map(String::as_str)).map_err(|e| e.to_string())?;
            let mut p = Platform::launch(config, wh).map_err(|e| e.to_string())?;
            replay(&sc, &mut p, true).map_err(|e| e.to_string())?;
            p
        }
        None => Platform::launch(config, warehouse(ontology)?).map_err(|e| e.to_string())?,
    };
    let server = Server::bind((host, port), platform).map_err(|e| e.to_string())?;
    let addr = server.local_addr().map_err(|e| e.to_string())?;
    println!("listening on {addr}");
    let _ = std::io::stdout().flush();
    server.run().map_err(|e| e.to_string())
}

fn sim(path: &Path, seed: Option<u64>, golden: Option<&Path>, json: bool) -> Result<(), String> {
    let scenario = Scenario::load(path).map_err(|e| e.to_string())?;
    let run = run_scenario(&scenario, seed.unwrap_or(scenario.seed)).map_err(|e| e.to_string())?;
    if json {
        println!("{}", run.report.to_json());
    } else {
        print!("{}", run.report);
    }
    if let Some(g) = golden {
        let expected = read(g)?;
        let expected = expected.trim();
        if expected != run.report.trace_hash {
            return Err(format!(
                "trace hash {} differs from golden {expected}",
                run.report.trace_hash
            ));
        }
    }
    Ok(())
}

fn match_services(query: &Path, registry: &Path, ontology: &[PathBuf], seed: u64, json: bool) -> Result<(), String> {
    let q = ServiceQuery::from_text(&read(query)?).map_err(|e| format!("{}: {e}", query.display()))?;
    let mut files: Vec<PathBuf> = fs::read_dir(registry)
        .map_err(|e| format!("{}: {e}", registry.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "svc"))
        .collect();
    files.sort();
    let config = PlatformConfig {
        seed,
        ..PlatformConfig::default()
    };
    let mut p = Platform::launch(config, warehouse(ontology)?).map_err(|e| e.to_string())?;
    let fail = |e: coopnet_core::platform::PlatformError| format!("{}: {e}", error_code(&e));
    p.register_account("registry", "registry-pw", AccountRole::Provider, Default::default())
        .map_err(fail)?;
    let provider = p
        .authenticate("registry", "registry-pw", AccountRole::Provider)
        .map_err(fail)?;
    for f in &files {
        let d = ServiceDescription::from_text(&read(f)?).map_err(|e| format!("{}: {e}", f.display()))?;
        p.publish_service(&provider.session.session_id, d).map_err(fail)?;
    }
    p.register_account("match", "match-pw", AccountRole::Customer, Default::default())
        .map_err(fail)?;
    let customer = p
        .authenticate("match", "match-pw", AccountRole::Customer)
        .map_err(fail)?;
    let sid = customer.session.session_id;
    let req = p.submit_request(&sid, q).map_err(fail)?;
    let view = results_view(&p, &p.results(&sid, &req).map_err(fail)?);
    if json {
        println!("{view}");
        return Ok(());
    }
    let rows = view["results"].as_array().cloned().unwrap_or_default();
    if rows.is_empty() {
        println!("no matching services");
    }
    for r in rows {
        let attrs = r["attributes"]
            .as_object()
            .map(|m| m.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" "))
            .unwrap_or_default();
        println!(
            "{:>2}  {}  {:<28} {:<8} {:.4}  {}",
            r["rank"],
            r["service"].as_str().unwrap_or(""),
            r["name"].as_str().unwrap_or(""),
            r["degree"].as_str().unwrap_or(""),
            r["score"].as_f64().unwrap_or(0.0),
            attrs
        );
    }
    if let Some(f) = view.get("failure").filter(|f| !f.is_null()) {
        return Err(f["message"]
            .as_str()
            .map_or_else(|| Value::to_string(f), str::to_string));
    }
    Ok(())
}

fn check(path: &Path) -> Result<(), String> {
    let text = read(path)?;
    match parse_document(&text).map_err(|e| format!("{}: {e}", path.display()))? {
        Document::Ontology(g) => println!(
            "ok: ontology {} ({}), {} concepts, {} rules",
            g.id(),
            g.kind().as_str(),
            g.len(),
            g.rules().len()
        ),
        Document::Mapping(m) => println!(
            "ok: mapping {} -> {}, {} pairs",
            m.source_ontology(),
            m.target_ontology(),
            m.pairs().len()
        ),
    }
    Ok(())
}
