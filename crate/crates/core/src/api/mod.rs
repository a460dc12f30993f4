//! The workflow behind the HTTP service and CLI, independent of any web
//! framework.
//!
//! A [`Workbench`] owns a directory of projects, one subdirectory each
//! holding the project document and its data file. Every mutating call
//! loads the project under a per-project lock, works on a copy, appends an
//! audit entry and saves atomically; a failed call leaves the file as it
//! was.

mod error;
mod jobs;
mod types;

pub use error::{ApiError, ErrorCode};
pub use jobs::{JobState, Jobs};
pub use types::*;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::Serialize;
use serde_json::{json, Value};

use crate::charts::{
    build_debate, build_environment, build_latent, dominance_with, sign_pattern_with, Chart,
    DebateThresholds, LevelledVar, RatedPrompt, Side, Sourced, Theme,
};
use crate::discover::{apply_edit, bic_delta_cached, ges_search, Edit, ScoreCache};
use crate::graph::{
    add_latent, add_third_variable, CausalModel, ModelTree, Provenance, ThirdVariable,
};
use crate::hash::content_hash;
use crate::ids::Id;
use crate::ingest::{Dataset, RawTable};
use crate::llm::{Exchange, Gateway, LlmError, Mode};
use crate::prompts::{
    confounder_prompt, debate_battery, latent_prompt, mediator_prompt, parse_confounders,
    parse_latents, parse_mediators, parse_rating, repair_prompt, Level, ParseFailure, PromptSpec,
};
use crate::sem;
use crate::store::{DatasetRef, Finding, FindingKind, Project, EXTENSION};

pub const API_VERSION: u32 = 1;

const PROJECT_FILE: &str = "project";
const DATA_FILE: &str = "data.csv";

type Store = HashMap<(Id, String), (String, Value)>;

pub struct Workbench {
    root: PathBuf,
    gateway: Arc<Gateway>,
    thresholds: DebateThresholds,
    theme: Theme,
    actor: String,
    locks: Mutex<HashMap<Id, Arc<Mutex<()>>>>,
    datasets: Mutex<HashMap<Id, Arc<Dataset>>>,
    idempotency: Mutex<Store>,
    jobs: Jobs,
}

/// Answer text of a prompt after at most one repair round.
struct Answer<T> {
    /// Exchanges to keep, the original first.
    exchanges: Vec<Exchange>,
    /// Key of the exchange the parsed value (or the failure) comes from.
    key: String,
    parsed: Result<T, ParseFailure>,
}

impl Workbench {
    pub fn new(root: impl Into<PathBuf>, gateway: Arc<Gateway>) -> Result<Self, ApiError> {
        let root = root.into();
        std::fs::create_dir_all(&root)
            .map_err(|e| ApiError::internal(format!("{}: {e}", root.display())))?;
        Ok(Workbench {
            root,
            gateway,
            thresholds: DebateThresholds::default(),
            theme: Theme::default(),
            actor: "api".to_owned(),
            locks: Mutex::new(HashMap::new()),
            datasets: Mutex::new(HashMap::new()),
            idempotency: Mutex::new(HashMap::new()),
            jobs: Jobs::default(),
        })
    }

    pub fn with_thresholds(mut self, t: DebateThresholds) -> Self {
        self.thresholds = t;
        self
    }

    pub fn with_theme(mut self, theme: Theme) -> Self {
        self.theme = theme;
        self
    }

    /// Name recorded in audit entries.
    pub fn with_actor(mut self, actor: &str) -> Self {
        self.actor = actor.to_owned();
        self
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn gateway(&self) -> &Gateway {
        &self.gateway
    }

    pub fn jobs(&self) -> &Jobs {
        &self.jobs
    }

    /// Batteries run as background jobs whenever they may hit the network.
    pub fn async_batteries(&self) -> bool {
        self.gateway.config().mode != Mode::Replay
    }

    pub fn client_config(&self) -> ClientConfig {
        let cfg = self.gateway.config();
        ClientConfig {
            api_version: API_VERSION,
            llm_mode: cfg.mode,
            model: cfg.model.clone(),
            temperature: cfg.temperature,
            max_parallel: cfg.max_parallel,
            async_batteries: self.async_batteries(),
            thresholds: self.thresholds,
            theme: self.theme.clone(),
        }
    }

    /// Project document path. Ids are ULIDs, so anything else is rejected
    /// before it can name a path.
    pub fn project_path(&self, p: &Id) -> Result<PathBuf, ApiError> {
        let s = p.as_str();
        if s.is_empty() || !s.chars().all(|c| c.is_ascii_alphanumeric()) {
            return Err(ApiError::not_found(format!("no project {s}")));
        }
        let path = self.root.join(s).join(format!("{PROJECT_FILE}{EXTENSION}"));
        if !path.is_file() {
            return Err(ApiError::not_found(format!("no project {s}")));
        }
        Ok(path)
    }

    pub fn project(&self, p: &Id) -> Result<Project, ApiError> {
        Ok(Project::load(&self.project_path(p)?)?)
    }

    /// Canonical project document text.
    pub fn export(&self, p: &Id) -> Result<String, ApiError> {
        let path = self.project_path(p)?;
        std::fs::read_to_string(&path).map_err(|e| ApiError::internal(e.to_string()))
    }

    pub fn list_projects(&self) -> Result<Vec<ProjectSummary>, ApiError> {
        let mut out = Vec::new();
        let entries = std::fs::read_dir(&self.root).map_err(|e| ApiError::internal(e.to_string()))?;
        let mut ids: Vec<Id> = entries
            .filter_map(Result::ok)
            .filter_map(|e| e.file_name().into_string().ok())
            .map(Id::from)
            .collect();
        ids.sort();
        for id in ids {
            if let Ok(p) = self.project(&id) {
                out.push(ProjectSummary::of(&p, None));
            }
        }
        Ok(out)
    }

    pub fn summary(&self, p: &Id) -> Result<ProjectSummary, ApiError> {
        let path = self.project_path(p)?;
        let project = Project::load(&path)?;
        let ds = match project.dataset {
            Some(_) => Some(self.dataset(&project, &path)?),
            None => None,
        };
        Ok(ProjectSummary::of(&project, ds.as_deref()))
    }

    pub fn model(&self, p: &Id, m: &Id) -> Result<CausalModel, ApiError> {
        Ok(self.project(p)?.tree.require(m)?.clone())
    }

    fn lock(&self, p: &Id) -> Arc<Mutex<()>> {
        self.locks.lock().unwrap().entry(p.clone()).or_default().clone()
    }

    fn dataset(&self, project: &Project, path: &Path) -> Result<Arc<Dataset>, ApiError> {
        let r = project
            .dataset
            .as_ref()
            .ok_or_else(|| ApiError::bad_request("project has no dataset"))?;
        if let Some(ds) = self.datasets.lock().unwrap().get(&project.id) {
            if ds.fingerprint() == r.fingerprint {
                return Ok(ds.clone());
            }
        }
        let ds = Arc::new(project.load_dataset(path, true)?);
        self.datasets.lock().unwrap().insert(project.id.clone(), ds.clone());
        Ok(ds)
    }

    /// Runs `f` on a copy of the project and saves the result with an
    /// audit entry. Nothing is written when `f` fails.
    fn mutate<T, P, F>(&self, p: &Id, operation: &str, payload: &P, f: F) -> Result<T, ApiError>
    where
        P: Serialize + ?Sized,
        F: FnOnce(&mut Project, &Path) -> Result<T, ApiError>,
    {
        let lock = self.lock(p);
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
        let path = self.project_path(p)?;
        let mut project = Project::load(&path)?;
        let out = f(&mut project, &path)?;
        project.record(&self.actor, operation, payload);
        project.validate()?;
        project.save(&path)?;
        Ok(out)
    }

    pub fn create_project(&self, req: &CreateProject, csv: &[u8]) -> Result<ProjectSummary, ApiError> {
        if req.name.trim().is_empty() {
            return Err(ApiError::bad_request("project name must not be empty"));
        }
        let table = RawTable::from_reader(csv)?;
        let ds = Dataset::from_table(&req.name, &table, &req.schema_hints)?;
        let root_model = CausalModel::from_dataset(&ds, &req.name);
        let mut project = Project::new(&req.name, &req.domain, ModelTree::new(root_model));
        project.dataset = Some(DatasetRef {
            path: DATA_FILE.to_owned(),
            fingerprint: ds.fingerprint(),
            schema_hints: req.schema_hints.clone(),
        });
        let dir = self.root.join(project.id.as_str());
        let io = |e: std::io::Error| ApiError::internal(format!("{}: {e}", dir.display()));
        std::fs::create_dir_all(&dir).map_err(io)?;
        let result = (|| {
            std::fs::write(dir.join(DATA_FILE), csv).map_err(io)?;
            let path = dir.join(format!("{PROJECT_FILE}{EXTENSION}"));
            // The stored file must ingest to the same data.
            let check = project.load_dataset(&path, true)?;
            project.record(&self.actor, "create_project", &json!({"name": req.name, "dataset": check.fingerprint()}));
            project.save(&path)?;
            Ok::<_, ApiError>(())
        })();
        if let Err(e) = result {
            let _ = std::fs::remove_dir_all(&dir);
            return Err(e);
        }
        Ok(ProjectSummary::of(&project, Some(&ds)))
    }

    pub fn discover(&self, p: &Id, m: &Id, req: &DiscoverRequest) -> Result<DiscoverResponse, ApiError> {
        self.mutate(p, "discover", &json!({"model": m, "request": req}), |project, path| {
            let ds = self.dataset(project, path)?;
            let model = project.tree.require(m)?.clone();
            let mut cols = Vec::new();
            for v in &model.variables {
                if let Some(c) = v.dataset_column.as_deref().and_then(|c| ds.column_index(c)) {
                    if v.provenance == Provenance::Measured {
                        cols.push(c);
                    }
                }
            }
            if cols.len() < 2 {
                return Err(ApiError::bad_request("discovery needs at least two measured variables"));
            }
            cols.sort_unstable();
            let sub = ds.select(&cols);
            let pairs = |list: &[[String; 2]]| -> Result<BTreeSet<(String, String)>, ApiError> {
                list.iter()
                    .map(|[a, b]| Ok((column_for(&model, a)?, column_for(&model, b)?)))
                    .collect()
            };
            let result = ges_search(&sub, &pairs(&req.forbidden)?, &pairs(&req.required)?)?;

            // Carry the search result over onto this model's variable ids.
            let by_column: BTreeMap<&str, &Id> = model
                .variables
                .iter()
                .filter_map(|v| v.dataset_column.as_deref().map(|c| (c, &v.id)))
                .collect();
            let remap = |id: &Id| -> Id {
                let col = result.cpdag.variable(id).and_then(|v| v.dataset_column.as_deref());
                (*col.and_then(|c| by_column.get(c)).expect("searched columns come from the model")).clone()
            };
            let mut out = model.clone();
            let hypothesized: BTreeSet<&Id> = model
                .variables
                .iter()
                .filter(|v| !v.is_measured())
                .map(|v| &v.id)
                .collect();
            out.edges.retain(|e| hypothesized.contains(&e.src) || hypothesized.contains(&e.dst));
            for e in &result.cpdag.edges {
                let mut e = e.clone();
                e.src = remap(&e.src);
                e.dst = remap(&e.dst);
                out.edges.push(e);
            }
            out.validate()?;
            project.tree = project.tree.replace_model(out.clone())?;
            project.fits.remove(m);
            Ok(DiscoverResponse {
                edges: out.edges.len(),
                undirected: out.edges.iter().filter(|e| !e.is_directed()).count(),
                model: out,
                total_bic: result.total_bic,
                trace: result.trace,
            })
        })
    }

    /// Applies an edit. A repeated idempotency key with the same request
    /// returns the first response without touching the project.
    pub fn edit(
        &self,
        p: &Id,
        m: &Id,
        req: &EditRequest,
        idempotency_key: Option<&str>,
    ) -> Result<EditResponse, ApiError> {
        let request_hash = content_hash(&json!({"model": m, "request": req}));
        if let Some(k) = idempotency_key {
            if let Some((hash, value)) = self.idempotency.lock().unwrap().get(&(p.clone(), k.to_owned())) {
                if *hash != request_hash {
                    return Err(ApiError::conflict(format!(
                        "idempotency key {k} was used for a different request"
                    )));
                }
                return serde_json::from_value(value.clone()).map_err(|e| ApiError::internal(e.to_string()));
            }
        }
        let resp = self.mutate(p, "edit", &json!({"model": m, "request": req}), |project, path| {
            self.edit_inner(project, path, m, req)
        })?;
        if let Some(k) = idempotency_key {
            let value = serde_json::to_value(&resp).map_err(|e| ApiError::internal(e.to_string()))?;
            self.idempotency
                .lock()
                .unwrap()
                .insert((p.clone(), k.to_owned()), (request_hash, value));
        }
        Ok(resp)
    }

    fn edit_inner(
        &self,
        project: &mut Project,
        path: &Path,
        m: &Id,
        req: &EditRequest,
    ) -> Result<EditResponse, ApiError> {
        let model = project.tree.require(m)?.clone();
        let structural = match req {
            EditRequest::Direct { edge, toward } => Some(Edit::Direct {
                edge: edge.clone(),
                toward: toward.clone(),
            }),
            EditRequest::Remove { edge } => Some(Edit::Remove { edge: edge.clone() }),
            EditRequest::Add { src, dst, directed } => Some(Edit::Add {
                src: src.clone(),
                dst: dst.clone(),
                directed: *directed,
            }),
            _ => None,
        };
        let (updated, bic_delta, bic_note) = match structural {
            Some(edit) => {
                let (updated, _) = apply_edit(&model, &edit)?;
                let (delta, note) = match project.dataset {
                    Some(_) => {
                        let ds = self.dataset(project, path)?;
                        match bic_delta_cached(&ScoreCache::new(&ds), &ds, &model, &edit) {
                            Ok(d) => (Some(d), None),
                            Err(e) => (None, Some(e.to_string())),
                        }
                    }
                    None => (None, Some("project has no dataset".to_owned())),
                };
                (updated, delta, note)
            }
            None => {
                let updated = self.accept_finding(project, &model, req)?;
                let note = "hypothesized variables have no data; the score is unchanged".to_owned();
                (updated, None, Some(note))
            }
        };
        project.tree = project.tree.replace_model(updated.clone())?;
        Ok(EditResponse {
            model: updated,
            bic_delta,
            bic_note,
        })
    }

    /// Adds a confounder, mediator or latent factor named in a stored chart.
    fn accept_finding(&self, project: &Project, model: &CausalModel, req: &EditRequest) -> Result<CausalModel, ApiError> {
        let stored = |subject: &Id, kind: FindingKind, levels: (Level, Level)| {
            project
                .findings
                .iter()
                .find(|f| {
                    f.model == model.id
                        && &f.subject == subject
                        && f.kind == kind
                        && (f.cause_level, f.effect_level) == levels
                })
                .ok_or_else(|| {
                    ApiError::not_found(format!(
                        "no {kind:?} chart stored for {subject} at levels {levels:?}; request it first"
                    ))
                })
        };
        let response = |key: Option<&String>| -> Result<&str, ApiError> {
            key.and_then(|k| project.exchanges.get(k))
                .map(|x| x.response.as_str())
                .ok_or_else(|| ApiError::internal("finding has no stored exchange"))
        };
        let missing = |name: &str| ApiError::not_found(format!("no finding named '{name}' in the stored chart"));
        let same = |a: &str, b: &str| a.trim().eq_ignore_ascii_case(b.trim());
        match req {
            EditRequest::AddThird {
                edge,
                role,
                name,
                cause_level,
                effect_level,
            } => {
                let e = model
                    .edge(edge)
                    .ok_or_else(|| ApiError::not_found(format!("no edge {edge}")))?;
                let levels = (cause_level.unwrap_or(Level::General), effect_level.unwrap_or(Level::General));
                let f = stored(edge, FindingKind::Environment, levels)?;
                let Chart::Environment(chart) = &f.chart else {
                    return Err(ApiError::internal("environment finding holds another chart"));
                };
                let items = match role {
                    ThirdRole::Confounder => &chart.confounders,
                    ThirdRole::Mediator => &chart.mediators,
                };
                let item = items.iter().find(|i| same(&i.name, name)).ok_or_else(|| missing(name))?;
                let text = response(item.justification.exchange_key.as_ref())?;
                let finding = match role {
                    ThirdRole::Confounder => parse_confounders(text)?
                        .findings
                        .into_iter()
                        .find(|c| same(&c.name, name))
                        .map(ThirdVariable::Confounder),
                    ThirdRole::Mediator => parse_mediators(text)?
                        .findings
                        .into_iter()
                        .find(|c| same(&c.name, name))
                        .map(ThirdVariable::Mediator),
                }
                .ok_or_else(|| missing(name))?;
                Ok(add_third_variable(model, &finding, &e.src, &e.dst, levels)?)
            }
            EditRequest::AddLatent { variable, name } => {
                model.variable(variable).ok_or_else(|| ApiError::not_found(format!("no variable {variable}")))?;
                let f = stored(variable, FindingKind::Latent, (Level::General, Level::General))?;
                let Chart::Latent(chart) = &f.chart else {
                    return Err(ApiError::internal("latent finding holds another chart"));
                };
                let item = chart
                    .positives
                    .iter()
                    .chain(&chart.negatives)
                    .chain(&chart.categorical)
                    .find(|i| same(&i.name, name))
                    .ok_or_else(|| missing(name))?;
                let text = response(item.justification.exchange_key.as_ref())?;
                let finding = parse_latents(text)?
                    .findings
                    .into_iter()
                    .find(|l| same(&l.name, name))
                    .ok_or_else(|| missing(name))?;
                Ok(add_latent(model, &finding, variable)?)
            }
            _ => unreachable!("structural edits are handled by the caller"),
        }
    }

    /// Completes `spec`, asking once for a reformatted answer when the
    /// first one does not parse.
    fn answer<T>(
        &self,
        spec: &PromptSpec,
        first: Exchange,
        parse: impl Fn(&str) -> Result<T, ParseFailure>,
    ) -> Answer<T> {
        match parse(&first.response) {
            Ok(v) => Answer {
                key: first.key.clone(),
                exchanges: vec![first],
                parsed: Ok(v),
            },
            Err(failure) => {
                let repair = repair_prompt(spec, &first.response);
                match self.gateway.complete(&repair) {
                    Ok(x) => match parse(&x.response) {
                        Ok(v) => Answer {
                            key: x.key.clone(),
                            exchanges: vec![first, x],
                            parsed: Ok(v),
                        },
                        Err(_) => Answer {
                            key: first.key.clone(),
                            exchanges: vec![first, x],
                            parsed: Err(failure),
                        },
                    },
                    Err(_) => Answer {
                        key: first.key.clone(),
                        exchanges: vec![first],
                        parsed: Err(failure),
                    },
                }
            }
        }
    }

    fn run(&self, project: &Project, specs: &[PromptSpec]) -> Result<Vec<Result<Exchange, LlmError>>, ApiError> {
        self.gateway.seed_cache(project.exchanges.values().cloned());
        Ok(self.gateway.run_battery(specs)?)
    }

    pub fn debate(&self, p: &Id, m: &Id, e: &Id) -> Result<DebateResponse, ApiError> {
        self.mutate(p, "debate", &json!({"model": m, "edge": e}), |project, _| {
            let model = project.tree.require(m)?;
            let edge = model.edge(e).ok_or_else(|| ApiError::not_found(format!("no edge {e}")))?;
            let specs = debate_battery(&model.name_of(&edge.src), &model.name_of(&edge.dst), &project.domain)?;
            let results = self.run(project, &specs)?;
            let mut rated = Vec::new();
            let mut failures = Vec::new();
            let mut exchanges = Vec::new();
            let mut used = Vec::new();
            for (index, (spec, r)) in specs.into_iter().zip(results).enumerate() {
                match r {
                    Ok(x) => {
                        let a = self.answer(&spec, x, parse_rating);
                        exchanges.extend(a.exchanges);
                        used.push(a.key.clone());
                        if let Err(f) = &a.parsed {
                            failures.push(PromptFailure {
                                index,
                                prompt_key: spec.key.clone(),
                                code: ErrorCode::ParseFailure,
                                message: f.reason.clone(),
                            });
                        }
                        rated.push(RatedPrompt {
                            spec,
                            rating: a.parsed.ok(),
                            exchange_key: Some(a.key),
                        });
                    }
                    Err(err) => {
                        failures.push(PromptFailure {
                            index,
                            prompt_key: spec.key.clone(),
                            code: ErrorCode::LlmFailure,
                            message: err.to_string(),
                        });
                        rated.push(RatedPrompt::from_response(spec, None, None));
                    }
                }
            }
            if rated.iter().all(|r| r.rating.is_none()) {
                return Err(ApiError::new(ErrorCode::ParseFailure, "no rating in the battery could be used")
                    .with_detail(json!({ "failures": failures })));
            }
            let chart = build_debate(&rated);
            let resp = DebateResponse {
                verdict: dominance_with(&chart, &self.thresholds),
                sign_pattern: SignPatterns {
                    left: sign_pattern_with(&chart, Side::Left, &self.thresholds),
                    right: sign_pattern_with(&chart, Side::Right, &self.thresholds),
                },
                responses: responses(&exchanges),
                chart: chart.clone(),
                failures,
            };
            project.put_finding(
                Finding {
                    model: m.clone(),
                    subject: e.clone(),
                    kind: FindingKind::Debate,
                    cause_level: Level::General,
                    effect_level: Level::General,
                    exchange_keys: used,
                    chart: Chart::Debate(chart),
                },
                exchanges,
            );
            Ok(resp)
        })
    }

    /// Confounders and mediators for one level combination of the edge,
    /// read as `src → dst`.
    pub fn environment(&self, p: &Id, m: &Id, e: &Id, req: &EnvironmentRequest) -> Result<EnvironmentResponse, ApiError> {
        self.mutate(p, "environment", &json!({"model": m, "edge": e, "request": req}), |project, _| {
            let model = project.tree.require(m)?;
            let edge = model.edge(e).ok_or_else(|| ApiError::not_found(format!("no edge {e}")))?;
            let (cause, effect) = (model.name_of(&edge.src), model.name_of(&edge.dst));
            let levels = (req.cause_level, req.effect_level);
            let specs = vec![
                confounder_prompt(&cause, &effect, levels, &project.domain)?,
                mediator_prompt(&cause, &effect, levels, &project.domain)?,
            ];
            let mut results = self.run(project, &specs)?.into_iter();
            let mut warnings = Vec::new();
            let mut failures = Vec::new();
            let mut exchanges = Vec::new();
            let mut used = Vec::new();
            let mut fail = |index: usize, spec: &PromptSpec, code, message: String| {
                failures.push(PromptFailure {
                    index,
                    prompt_key: spec.key.clone(),
                    code,
                    message,
                })
            };

            let mut confounders = Vec::new();
            match results.next().expect("two results") {
                Ok(x) => {
                    let a = self.answer(&specs[0], x, parse_confounders);
                    exchanges.extend(a.exchanges);
                    match a.parsed {
                        Ok(parsed) => {
                            used.push(a.key.clone());
                            warnings.extend(parsed.warnings);
                            confounders = parsed.findings.into_iter().map(|f| Sourced::new(f, Some(a.key.clone()))).collect();
                        }
                        Err(f) => fail(0, &specs[0], ErrorCode::ParseFailure, f.reason),
                    }
                }
                Err(err) => fail(0, &specs[0], ErrorCode::LlmFailure, err.to_string()),
            }
            let mut mediators = Vec::new();
            match results.next().expect("two results") {
                Ok(x) => {
                    let a = self.answer(&specs[1], x, parse_mediators);
                    exchanges.extend(a.exchanges);
                    match a.parsed {
                        Ok(parsed) => {
                            used.push(a.key.clone());
                            warnings.extend(parsed.warnings);
                            mediators = parsed.findings.into_iter().map(|f| Sourced::new(f, Some(a.key.clone()))).collect();
                        }
                        Err(f) => fail(1, &specs[1], ErrorCode::ParseFailure, f.reason),
                    }
                }
                Err(err) => fail(1, &specs[1], ErrorCode::LlmFailure, err.to_string()),
            }
            if used.is_empty() {
                return Err(ApiError::new(ErrorCode::ParseFailure, "neither answer could be parsed")
                    .with_detail(json!({ "failures": failures })));
            }
            let chart = build_environment(
                LevelledVar { name: cause, level: levels.0 },
                LevelledVar { name: effect, level: levels.1 },
                &confounders,
                &mediators,
            );
            let resp = EnvironmentResponse {
                chart: chart.clone(),
                warnings,
                failures,
                responses: responses(&exchanges),
            };
            project.put_finding(
                Finding {
                    model: m.clone(),
                    subject: e.clone(),
                    kind: FindingKind::Environment,
                    cause_level: levels.0,
                    effect_level: levels.1,
                    exchange_keys: used,
                    chart: Chart::Environment(chart),
                },
                exchanges,
            );
            Ok(resp)
        })
    }

    pub fn latent(&self, p: &Id, m: &Id, v: &Id) -> Result<LatentResponse, ApiError> {
        self.mutate(p, "latent", &json!({"model": m, "variable": v}), |project, _| {
            let model = project.tree.require(m)?;
            let var = model.variable(v).ok_or_else(|| ApiError::not_found(format!("no variable {v}")))?;
            let spec = latent_prompt(&var.name, &project.domain)?;
            let target = var.name.clone();
            self.gateway.seed_cache(project.exchanges.values().cloned());
            let x = self.gateway.complete(&spec)?;
            let a = self.answer(&spec, x, parse_latents);
            let parsed = a.parsed?;
            let lats: Vec<_> = parsed
                .findings
                .into_iter()
                .map(|f| Sourced::new(f, Some(a.key.clone())))
                .collect();
            let chart = build_latent(&target, &lats);
            let resp = LatentResponse {
                chart: chart.clone(),
                warnings: parsed.warnings,
                responses: responses(&a.exchanges),
            };
            project.put_finding(
                Finding {
                    model: m.clone(),
                    subject: v.clone(),
                    kind: FindingKind::Latent,
                    cause_level: Level::General,
                    effect_level: Level::General,
                    exchange_keys: vec![a.key],
                    chart: Chart::Latent(chart),
                },
                a.exchanges,
            );
            Ok(resp)
        })
    }

    pub fn children(&self, p: &Id, m: &Id, req: &ChildrenRequest) -> Result<ChildrenResponse, ApiError> {
        self.mutate(p, "children", &json!({"model": m, "request": req}), |project, _| {
            match (&req.selected, &req.split) {
                (Some(sel), None) => {
                    let sel: BTreeSet<Id> = sel.iter().cloned().collect();
                    let (tree, id) = project.tree.create_child_subgraph(m, &sel, &req.note)?;
                    project.tree = tree;
                    Ok(ChildrenResponse {
                        created: vec![id],
                        warnings: Vec::new(),
                    })
                }
                (None, Some(split)) => {
                    let out = project.tree.split_bidirectional(m, &split.a, &split.b, &req.note)?;
                    project.tree = out.tree;
                    Ok(ChildrenResponse {
                        created: out.child_ab.into_iter().chain(out.child_ba).collect(),
                        warnings: out.warnings,
                    })
                }
                _ => Err(ApiError::bad_request("give exactly one of `selected` or `split`")),
            }
        })
    }

    pub fn sem(&self, p: &Id, m: &Id) -> Result<SemResponse, ApiError> {
        self.mutate(p, "sem", &json!({"model": m}), |project, path| {
            let ds = self.dataset(project, path)?;
            let model = project.tree.require(m)?;
            let fit = sem::fit(&ds, model)?;
            let updated = sem::apply_fit(model, &fit)?;
            project.tree = project.tree.replace_model(updated.clone())?;
            project.fits.insert(m.clone(), fit.clone());
            Ok(SemResponse { fit, model: updated })
        })
    }

    /// Adds row-aligned columns to the project's data. Hypothesized
    /// variables whose name matches a new column become measured in every
    /// model.
    pub fn upload_columns(&self, p: &Id, csv: &[u8]) -> Result<UploadResponse, ApiError> {
        let extra = RawTable::from_reader(csv)?;
        let payload = json!({"columns": extra.headers, "rows": extra.rows.len()});
        self.mutate(p, "upload_columns", &payload, |project, path| {
            let old = project
                .dataset
                .clone()
                .ok_or_else(|| ApiError::bad_request("project has no dataset"))?;
            let base = path.parent().unwrap_or(Path::new("."));
            let current = RawTable::from_path(&old.resolve(base))?;
            let combined = current.hstack(&extra)?;
            let ds = Dataset::from_table(&project.name, &combined, &old.schema_hints)?;
            let file = format!("data-{}.csv", &ds.fingerprint()[..16]);
            std::fs::write(base.join(&file), combined.to_csv())
                .map_err(|e| ApiError::internal(format!("{file}: {e}")))?;
            let new_ref = DatasetRef {
                path: file,
                fingerprint: String::new(),
                schema_hints: old.schema_hints.clone(),
            };
            let stored = new_ref.ingest(base)?;
            project.dataset = Some(DatasetRef {
                fingerprint: stored.fingerprint(),
                ..new_ref
            });

            let mut promoted = BTreeSet::new();
            let ids: Vec<Id> = project.tree.nodes.keys().cloned().collect();
            for id in ids {
                let mut model = project.tree.require(&id)?.clone();
                for v in model.variables.iter_mut().filter(|v| !v.is_measured()) {
                    if let Some(c) = extra.headers.iter().find(|h| h.trim().eq_ignore_ascii_case(v.name.trim())) {
                        if let Some(j) = stored.column_index(c) {
                            v.provenance = Provenance::Measured;
                            v.dataset_column = Some(c.clone());
                            v.kind = stored.columns[j].kind;
                            promoted.insert(v.name.clone());
                        }
                    }
                }
                project.tree = project.tree.replace_model(model)?;
            }
            let summary = DatasetSummary::of(&stored);
            self.datasets.lock().unwrap().insert(project.id.clone(), Arc::new(stored));
            Ok(UploadResponse {
                dataset: summary,
                promoted: promoted.into_iter().collect(),
            })
        })
    }
}

fn column_for(model: &CausalModel, name: &str) -> Result<String, ApiError> {
    model
        .variable_by_name(name)
        .filter(|v| v.is_measured())
        .and_then(|v| v.dataset_column.clone())
        .ok_or_else(|| ApiError::bad_request(format!("'{name}' is not a measured variable of this model")))
}

fn responses(exchanges: &[Exchange]) -> BTreeMap<String, String> {
    exchanges.iter().map(|x| (x.key.clone(), x.response.clone())).collect()
}

