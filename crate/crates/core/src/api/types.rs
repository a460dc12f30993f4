use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::charts::{
    DebateChartData, DebateThresholds, EnvironmentChartData, LatentChartData, SignPattern, Theme,
    Verdict,
};
use crate::discover::{BicDelta, TraceStep};
use crate::graph::CausalModel;
use crate::ids::Id;
use crate::ingest::{Dataset, DropReport, Kind};
use crate::llm::Mode;
use crate::prompts::Level;
use crate::sem::FitResult;
use crate::store::Project;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSummary {
    pub name: String,
    pub kind: Kind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub name: String,
    pub n: usize,
    pub fingerprint: String,
    pub columns: Vec<ColumnSummary>,
    pub report: DropReport,
}

impl DatasetSummary {
    pub fn of(ds: &Dataset) -> Self {
        DatasetSummary {
            name: ds.name.clone(),
            n: ds.n,
            fingerprint: ds.fingerprint(),
            columns: ds
                .columns
                .iter()
                .map(|c| ColumnSummary {
                    name: c.name.clone(),
                    kind: c.kind,
                })
                .collect(),
            report: ds.report.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub id: Id,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<Id>,
    pub variables: usize,
    pub edges: usize,
    pub undirected: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectSummary {
    pub id: Id,
    pub name: String,
    pub domain: String,
    pub root_model: Id,
    pub models: Vec<ModelSummary>,
    pub findings: usize,
    pub exchanges: usize,
    pub audit_entries: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<DatasetSummary>,
}

impl ProjectSummary {
    pub fn of(p: &Project, ds: Option<&Dataset>) -> Self {
        let models = p
            .tree
            .nodes
            .iter()
            .map(|(id, node)| ModelSummary {
                id: id.clone(),
                name: node.model.name.clone(),
                parent: node.parent.clone(),
                variables: node.model.variables.len(),
                edges: node.model.edges.len(),
                undirected: node.model.edges.iter().filter(|e| !e.is_directed()).count(),
            })
            .collect();
        ProjectSummary {
            id: p.id.clone(),
            name: p.name.clone(),
            domain: p.domain.clone(),
            root_model: p.tree.root.clone(),
            models,
            findings: p.findings.len(),
            exchanges: p.exchanges.len(),
            audit_entries: p.audit.len(),
            dataset: ds.map(DatasetSummary::of),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CreateProject {
    pub name: String,
    #[serde(default)]
    pub domain: String,
    #[serde(default)]
    pub schema_hints: BTreeMap<String, Kind>,
}

/// Ordered `[src, dst]` variable-name pairs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DiscoverRequest {
    #[serde(default)]
    pub forbidden: Vec<[String; 2]>,
    #[serde(default)]
    pub required: Vec<[String; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscoverResponse {
    pub model: CausalModel,
    pub total_bic: f64,
    pub trace: Vec<TraceStep>,
    pub edges: usize,
    pub undirected: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThirdRole {
    Confounder,
    Mediator,
}

/// Edge edits. `add_third` and `add_latent` accept a finding by name from
/// the environment or latent chart already stored for that edge or
/// variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum EditRequest {
    Direct {
        edge: Id,
        toward: Id,
    },
    Remove {
        edge: Id,
    },
    Add {
        src: Id,
        dst: Id,
        #[serde(default = "yes")]
        directed: bool,
    },
    AddThird {
        edge: Id,
        role: ThirdRole,
        name: String,
        #[serde(default)]
        cause_level: Option<Level>,
        #[serde(default)]
        effect_level: Option<Level>,
    },
    AddLatent {
        variable: Id,
        name: String,
    },
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditResponse {
    pub model: CausalModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bic_delta: Option<BicDelta>,
    /// Why no score change is reported, when it is not.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bic_note: Option<String>,
}

/// A prompt in a battery that produced no usable answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptFailure {
    pub index: usize,
    pub prompt_key: String,
    pub code: super::ErrorCode,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignPatterns {
    pub left: SignPattern,
    pub right: SignPattern,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebateResponse {
    pub chart: DebateChartData,
    pub verdict: Verdict,
    pub sign_pattern: SignPatterns,
    pub failures: Vec<PromptFailure>,
    /// Response text by exchange key, for resolving justification spans.
    pub responses: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentRequest {
    pub cause_level: Level,
    pub effect_level: Level,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentResponse {
    pub chart: EnvironmentChartData,
    pub warnings: Vec<String>,
    pub failures: Vec<PromptFailure>,
    pub responses: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentResponse {
    pub chart: LatentChartData,
    pub warnings: Vec<String>,
    pub responses: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitRequest {
    pub a: Id,
    pub b: Id,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChildrenRequest {
    #[serde(default)]
    pub selected: Option<Vec<Id>>,
    #[serde(default)]
    pub split: Option<SplitRequest>,
    #[serde(default)]
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChildrenResponse {
    pub created: Vec<Id>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemResponse {
    pub fit: FitResult,
    pub model: CausalModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UploadResponse {
    pub dataset: DatasetSummary,
    /// Hypothesized variables that now have data.
    pub promoted: Vec<String>,
}

/// What `/config` reports to clients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientConfig {
    pub api_version: u32,
    pub llm_mode: Mode,
    pub model: String,
    pub temperature: f64,
    pub max_parallel: usize,
    /// Whether battery endpoints answer `202` with a job id.
    pub async_batteries: bool,
    pub thresholds: DebateThresholds,
    pub theme: Theme,
}
