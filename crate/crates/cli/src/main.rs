use std::collections::BTreeMap;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use causeway_cli::server::{router, AppState};
use causeway_core::api::{
    ChildrenRequest, CreateProject, DiscoverRequest, EditRequest, EnvironmentRequest, SplitRequest,
    ThirdRole, Workbench,
};
use causeway_core::charts::{render_svg, Chart, Theme};
use causeway_core::llm::{Gateway, LlmConfig, Mode};
use causeway_core::prompts::Level;
use causeway_core::{ges_search, load_csv, CausalModel, Id, Kind};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "causeway", version, about = "Causal model workbench")]
struct Cli {
    #[command(flatten)]
    llm: LlmArgs,
    /// Directory holding one subdirectory per project.
    #[arg(long, global = true, env = "CAUSEWAY_PROJECTS", default_value = "projects")]
    projects: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct LlmArgs {
    #[arg(long, global = true, env = "CAUSEWAY_LLM_MODE", default_value = "replay")]
    llm_mode: Mode,
    /// Recorded answers, one JSON file per exchange key.
    #[arg(long, global = true, env = "CAUSEWAY_FIXTURES")]
    fixtures: Option<PathBuf>,
    #[arg(long, global = true, env = "CAUSEWAY_LLM_MODEL")]
    llm_model: Option<String>,
    #[arg(long, global = true, env = "CAUSEWAY_LLM_ENDPOINT")]
    llm_endpoint: Option<String>,
    #[arg(long, global = true)]
    temperature: Option<f64>,
    #[arg(long, global = true)]
    max_parallel: Option<usize>,
    /// Name of the environment variable holding the API key.
    #[arg(long, global = true)]
    api_key_env: Option<String>,
}

impl LlmArgs {
    fn config(&self) -> LlmConfig {
        let mut cfg = LlmConfig {
            mode: self.llm_mode,
            fixtures: self.fixtures.clone(),
            ..LlmConfig::default()
        };
        if let Some(m) = &self.llm_model {
            cfg.model = m.clone();
        }
        if let Some(e) = &self.llm_endpoint {
            cfg.endpoint = e.clone();
        }
        if let Some(t) = self.temperature {
            cfg.temperature = t;
        }
        if let Some(n) = self.max_parallel {
            cfg.max_parallel = n;
        }
        if let Some(k) = &self.api_key_env {
            cfg.api_key_env = k.clone();
        }
        cfg
    }
}

/// Project and model to work on; the model defaults to the tree root.
#[derive(Args)]
struct Target {
    #[arg(long)]
    project: Id,
    #[arg(long)]
    model: Option<Id>,
}

#[derive(Subcommand)]
enum Command {
    /// Create a project from a CSV file and print its summary.
    Ingest {
        csv: PathBuf,
        #[arg(long)]
        name: Option<String>,
        #[arg(long, default_value = "")]
        domain: String,
        /// Column kind override, `column=continuous|categorical`.
        #[arg(long = "hint", value_parser = parse_hint)]
        hints: Vec<(String, Kind)>,
    },
    /// Structure search. Give a CSV for a one-off search or `--project`
    /// to update a stored model. The trace goes to stdout as JSON lines.
    Discover {
        csv: Option<PathBuf>,
        #[arg(long)]
        project: Option<Id>,
        #[arg(long)]
        model: Option<Id>,
        /// Forbidden directed edge `src,dst`, by variable name.
        #[arg(long = "forbid", value_parser = parse_pair)]
        forbidden: Vec<[String; 2]>,
        #[arg(long = "require", value_parser = parse_pair)]
        required: Vec<[String; 2]>,
        /// Where to write the resulting graph.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the direction debate on an edge, named `a,b`.
    Debate {
        #[command(flatten)]
        target: Target,
        #[arg(long, value_parser = parse_pair)]
        edge: [String; 2],
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Ask for confounders and mediators of an edge at one level combination.
    Environment {
        #[command(flatten)]
        target: Target,
        #[arg(long, value_parser = parse_pair)]
        edge: [String; 2],
        #[arg(long, value_parser = parse_level, default_value = "general")]
        cause_level: Level,
        #[arg(long, value_parser = parse_level, default_value = "general")]
        effect_level: Level,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Ask for latent factors of a variable.
    Latent {
        #[command(flatten)]
        target: Target,
        #[arg(long)]
        variable: String,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Change the graph or accept a finding.
    Edit {
        #[command(flatten)]
        target: Target,
        #[arg(long)]
        idempotency_key: Option<String>,
        #[command(subcommand)]
        op: EditOp,
    },
    /// Create child models from a variable selection or a bidirectional split.
    Children {
        #[command(flatten)]
        target: Target,
        /// Comma-separated variable names.
        #[arg(long, value_delimiter = ',', conflicts_with = "split")]
        select: Option<Vec<String>>,
        #[arg(long, value_parser = parse_pair)]
        split: Option<[String; 2]>,
        #[arg(long, default_value = "")]
        note: String,
    },
    /// Fit path coefficients and store them on the model.
    Sem {
        #[command(flatten)]
        target: Target,
    },
    /// Add columns for hypothesized variables from a row-aligned CSV.
    Columns {
        #[arg(long)]
        project: Id,
        csv: PathBuf,
    },
    /// Render chart JSON, or a battery response holding one, to SVG.
    Render {
        kind: ChartKind,
        input: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// JSON theme overriding the default palette.
        #[arg(long)]
        theme: Option<PathBuf>,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Static dashboard files served under `/`.
        #[arg(long)]
        assets: Option<PathBuf>,
        #[arg(long, env = "CAUSEWAY_TOKEN", hide_env_values = true)]
        token: Option<String>,
        #[arg(long, default_value_t = 120)]
        battery_timeout_secs: u64,
        /// Print the OpenAPI description and exit.
        #[arg(long)]
        describe: bool,
    },
}

#[derive(Subcommand)]
enum EditOp {
    Direct {
        #[arg(long, value_parser = parse_pair)]
        edge: [String; 2],
        #[arg(long)]
        toward: String,
    },
    Remove {
        #[arg(long, value_parser = parse_pair)]
        edge: [String; 2],
    },
    Add {
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long)]
        undirected: bool,
    },
    /// Accept a confounder or mediator from the stored environment chart.
    AddThird {
        #[arg(long, value_parser = parse_pair)]
        edge: [String; 2],
        #[arg(long)]
        role: Role,
        #[arg(long)]
        name: String,
        #[arg(long, value_parser = parse_level)]
        cause_level: Option<Level>,
        #[arg(long, value_parser = parse_level)]
        effect_level: Option<Level>,
    },
    /// Accept a latent factor from the stored latent chart.
    AddLatent {
        #[arg(long)]
        variable: String,
        #[arg(long)]
        name: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Role {
    Confounder,
    Mediator,
}

#[derive(Clone, Copy, ValueEnum)]
enum ChartKind {
    Debate,
    Environment,
    Latent,
}

fn parse_pair(s: &str) -> Result<[String; 2], String> {
    match s.split_once(',') {
        Some((a, b)) if !a.trim().is_empty() && !b.trim().is_empty() => Ok([a.trim().to_owned(), b.trim().to_owned()]),
        _ => Err(format!("expected `a,b`, got '{s}'")),
    }
}

fn parse_level(s: &str) -> Result<Level, String> {
    serde_json::from_value(serde_json::Value::String(s.to_lowercase()))
        .map_err(|_| format!("unknown level '{s}' (general, higher, lower)"))
}

fn parse_hint(s: &str) -> Result<(String, Kind), String> {
    let (col, kind) = s.split_once('=').ok_or_else(|| format!("expected `column=kind`, got '{s}'"))?;
    Ok((col.to_owned(), kind.parse()?))
}

fn print<T: Serialize>(value: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_svg(path: Option<&Path>, chart: Chart) -> Result<()> {
    if let Some(path) = path {
        std::fs::write(path, render_svg(&chart, &Theme::default()))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn workbench(cli: &Cli) -> Result<Workbench> {
    let gateway = Gateway::new(cli.llm.config())?;
    Ok(Workbench::new(&cli.projects, Arc::new(gateway))?.with_actor("cli"))
}

struct Resolved {
    project: Id,
    model: CausalModel,
}

impl Resolved {
    fn new(wb: &Workbench, target: &Target) -> Result<Self> {
        let model = match &target.model {
            Some(m) => m.clone(),
            None => wb.summary(&target.project)?.root_model,
        };
        Ok(Resolved {
            project: target.project.clone(),
            model: wb.model(&target.project, &model)?,
        })
    }

    fn variable(&self, name: &str) -> Result<Id> {
        self.model
            .variable_by_name(name)
            .map(|v| v.id.clone())
            .ok_or_else(|| anyhow!("no variable named '{name}' in model {}", self.model.id))
    }

    fn edge(&self, [a, b]: &[String; 2]) -> Result<Id> {
        let (a, b) = (self.variable(a)?, self.variable(b)?);
        self.model
            .edge_between(&a, &b)
            .map(|e| e.id.clone())
            .ok_or_else(|| anyhow!("no edge between those variables"))
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Ingest { csv, name, domain, hints } => {
            let wb = workbench(&cli)?;
            let bytes = std::fs::read(csv).with_context(|| format!("reading {}", csv.display()))?;
            let name = match name {
                Some(n) => n.clone(),
                None => csv.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
            };
            let req = CreateProject {
                name,
                domain: domain.clone(),
                schema_hints: hints.iter().cloned().collect(),
            };
            print(&wb.create_project(&req, &bytes)?)
        }
        Command::Discover {
            csv,
            project,
            model,
            forbidden,
            required,
            out,
        } => {
            let mut stdout = std::io::stdout().lock();
            match (csv, project) {
                (Some(csv), None) => {
                    let ds = load_csv(csv, &BTreeMap::new())?;
                    let pairs = |list: &[[String; 2]]| list.iter().map(|[a, b]| (a.clone(), b.clone())).collect();
                    let r = ges_search(&ds, &pairs(forbidden), &pairs(required))?;
                    for step in &r.trace {
                        writeln!(stdout, "{}", serde_json::to_string(step)?)?;
                    }
                    if let Some(out) = out {
                        write_json(out, &r.cpdag)?;
                    }
                }
                (None, Some(project)) => {
                    let wb = workbench(&cli)?;
                    let target = Target {
                        project: project.clone(),
                        model: model.clone(),
                    };
                    let m = Resolved::new(&wb, &target)?.model.id;
                    let req = DiscoverRequest {
                        forbidden: forbidden.clone(),
                        required: required.clone(),
                    };
                    let r = wb.discover(project, &m, &req)?;
                    for step in &r.trace {
                        writeln!(stdout, "{}", serde_json::to_string(step)?)?;
                    }
                    if let Some(out) = out {
                        write_json(out, &r.model)?;
                    }
                }
                _ => bail!("give either a CSV file or --project"),
            }
            Ok(())
        }
        Command::Debate { target, edge, svg } => {
            let wb = workbench(&cli)?;
            let t = Resolved::new(&wb, target)?;
            let r = wb.debate(&t.project, &t.model.id, &t.edge(edge)?)?;
            write_svg(svg.as_deref(), Chart::Debate(r.chart.clone()))?;
            print(&r)
        }
        Command::Environment {
            target,
            edge,
            cause_level,
            effect_level,
            svg,
        } => {
            let wb = workbench(&cli)?;
            let t = Resolved::new(&wb, target)?;
            let req = EnvironmentRequest {
                cause_level: *cause_level,
                effect_level: *effect_level,
            };
            let r = wb.environment(&t.project, &t.model.id, &t.edge(edge)?, &req)?;
            write_svg(svg.as_deref(), Chart::Environment(r.chart.clone()))?;
            print(&r)
        }
        Command::Latent { target, variable, svg } => {
            let wb = workbench(&cli)?;
            let t = Resolved::new(&wb, target)?;
            let r = wb.latent(&t.project, &t.model.id, &t.variable(variable)?)?;
            write_svg(svg.as_deref(), Chart::Latent(r.chart.clone()))?;
            print(&r)
        }
        Command::Edit {
            target,
            idempotency_key,
            op,
        } => {
            let wb = workbench(&cli)?;
            let t = Resolved::new(&wb, target)?;
            let req = match op {
                EditOp::Direct { edge, toward } => EditRequest::Direct {
                    edge: t.edge(edge)?,
                    toward: t.variable(toward)?,
                },
                EditOp::Remove { edge } => EditRequest::Remove { edge: t.edge(edge)? },
                EditOp::Add { from, to, undirected } => EditRequest::Add {
                    src: t.variable(from)?,
                    dst: t.variable(to)?,
                    directed: !undirected,
                },
                EditOp::AddThird {
                    edge,
                    role,
                    name,
                    cause_level,
                    effect_level,
                } => EditRequest::AddThird {
                    edge: t.edge(edge)?,
                    role: match role {
                        Role::Confounder => ThirdRole::Confounder,
                        Role::Mediator => ThirdRole::Mediator,
                    },
                    name: name.clone(),
                    cause_level: *cause_level,
                    effect_level: *effect_level,
                },
                EditOp::AddLatent { variable, name } => EditRequest::AddLatent {
                    variable: t.variable(variable)?,
                    name: name.clone(),
                },
            };
            print(&wb.edit(&t.project, &t.model.id, &req, idempotency_key.as_deref())?)
        }
        Command::Children {
            target,
            select,
            split,
            note,
        } => {
            let wb = workbench(&cli)?;
            let t = Resolved::new(&wb, target)?;
            let selected = match select {
                Some(names) => Some(names.iter().map(|n| t.variable(n)).collect::<Result<Vec<_>>>()?),
                None => None,
            };
            let split = match split {
                Some([a, b]) => Some(SplitRequest {
                    a: t.variable(a)?,
                    b: t.variable(b)?,
                }),
                None => None,
            };
            let req = ChildrenRequest {
                selected,
                split,
                note: note.clone(),
            };
            print(&wb.children(&t.project, &t.model.id, &req)?)
        }
        Command::Sem { target } => {
            let wb = workbench(&cli)?;
            let t = Resolved::new(&wb, target)?;
            print(&wb.sem(&t.project, &t.model.id)?)
        }
        Command::Columns { project, csv } => {
            let wb = workbench(&cli)?;
            let bytes = std::fs::read(csv).with_context(|| format!("reading {}", csv.display()))?;
            print(&wb.upload_columns(project, &bytes)?)
        }
        Command::Render { kind, input, out, theme } => {
            let text = std::fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
            let mut value: serde_json::Value = serde_json::from_str(&text)?;
            if let Some(inner) = value.get_mut("chart") {
                value = inner.take();
            }
            let chart = match kind {
                ChartKind::Debate => Chart::Debate(serde_json::from_value(value)?),
                ChartKind::Environment => Chart::Environment(serde_json::from_value(value)?),
                ChartKind::Latent => Chart::Latent(serde_json::from_value(value)?),
            };
            let theme = match theme {
                Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
                None => Theme::default(),
            };
            std::fs::write(out, render_svg(&chart, &theme)).with_context(|| format!("writing {}", out.display()))
        }
        Command::Serve {
            host,
            port,
            assets,
            token,
            battery_timeout_secs,
            describe,
        } => {
            if *describe {
                return print(&causeway_cli::openapi::document());
            }
            let state = Arc::new(AppState {
                workbench: Arc::new(workbench(&cli)?),
                token: token.clone(),
                battery_timeout: Duration::from_secs(*battery_timeout_secs),
            });
            let addr: SocketAddr = format!("{host}:{port}").parse().context("listen address")?;
            serve(addr, router(state, assets.clone()))
        }
    }
}

#[tokio::main]
async fn serve(addr: SocketAddr, app: axum::Router) -> Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await.with_context(|| format!("binding {addr}"))?;
    // Scripts read this line to learn the port when started with --port 0.
    println!("listening on http://{}", listener.local_addr()?);
    std::io::stdout().flush()?;
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
