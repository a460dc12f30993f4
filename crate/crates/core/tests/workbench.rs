mod support;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use causeway_core::api::{
    ChildrenRequest, CreateProject, DiscoverRequest, EditRequest, EnvironmentRequest, ErrorCode,
    SplitRequest, ThirdRole, Workbench,
};
use causeway_core::charts::{Chart, Suggestion};
use causeway_core::graph::{CausalModel, EdgeRole, Provenance};
use causeway_core::ids::Id;
use causeway_core::llm::{Gateway, LlmConfig};
use causeway_core::prompts::Level;
use causeway_core::store::{verify_audit, Project};
use support::transcripts;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn bench(dir: &Path) -> Workbench {
    let gw = Gateway::new(LlmConfig::replay(fixtures().join("llm"))).unwrap();
    Workbench::new(dir, Arc::new(gw)).unwrap()
}

fn autompg(wb: &Workbench) -> Id {
    let csv = std::fs::read(fixtures().join("data/auto-mpg.csv")).unwrap();
    let req = CreateProject {
        name: "autompg".into(),
        domain: transcripts::AUTO.into(),
        ..Default::default()
    };
    wb.create_project(&req, &csv).unwrap().id
}

/// Two loosely related health indicators over a few dozen counties.
fn health(wb: &Workbench) -> (Id, Id) {
    let mut csv = format!("{},{}\n", transcripts::PFPH, transcripts::LE);
    for i in 0..40 {
        let x = 10.0 + (i as f64 * 7.3) % 15.0;
        let y = 82.0 - 0.3 * x + ((i * 13) % 7) as f64 * 0.4;
        csv.push_str(&format!("{x:.2},{y:.2}\n"));
    }
    let req = CreateProject {
        name: "counties".into(),
        domain: transcripts::HEALTH.into(),
        ..Default::default()
    };
    let p = wb.create_project(&req, csv.as_bytes()).unwrap();
    (p.id, p.root_model)
}

fn var(m: &CausalModel, name: &str) -> Id {
    m.variable_by_name(name).unwrap().id.clone()
}

fn edge(m: &CausalModel, a: &str, b: &str) -> Id {
    m.edge_between(&var(m, a), &var(m, b)).unwrap().id.clone()
}

#[test]
fn created_project_ingests_and_lists() {
    let dir = tempfile::tempdir().unwrap();
    let wb = bench(dir.path());
    let p = autompg(&wb);
    let s = wb.summary(&p).unwrap();
    let ds = s.dataset.unwrap();
    assert_eq!(ds.n, 392);
    assert_eq!(ds.report.rows_removed, 6);
    assert_eq!(s.models.len(), 1);
    assert_eq!(s.models[0].variables, 8);
    assert_eq!(s.audit_entries, 1);
    assert_eq!(wb.list_projects().unwrap().len(), 1);
}

#[test]
fn bad_csv_leaves_nothing_behind() {
    let dir = tempfile::tempdir().unwrap();
    let wb = bench(dir.path());
    let req = CreateProject {
        name: "broken".into(),
        ..Default::default()
    };
    let err = wb.create_project(&req, b"a,b\n1\n").unwrap_err();
    assert_eq!(err.code, ErrorCode::BadRequest);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn unknown_ids_are_not_found() {
    let dir = tempfile::tempdir().unwrap();
    let wb = bench(dir.path());
    for id in ["../etc", "nope", ""] {
        assert_eq!(wb.summary(&Id::from(id)).unwrap_err().code, ErrorCode::NotFound);
    }
    let (p, m) = health(&wb);
    let before = wb.export(&p).unwrap();
    let err = wb.debate(&p, &m, &Id::from("01NOSUCHEDGE")).unwrap_err();
    assert_eq!(err.code, ErrorCode::NotFound);
    let err = wb.model(&p, &Id::from("01NOSUCHMODEL")).unwrap_err();
    assert_eq!(err.code, ErrorCode::NotFound);
    assert_eq!(wb.export(&p).unwrap(), before);
}

#[test]
fn debate_replays_into_the_stored_chart() {
    let dir = tempfile::tempdir().unwrap();
    let wb = bench(dir.path());
    let (p, m) = health(&wb);
    let model = wb.model(&p, &m).unwrap();
    let add = EditRequest::Add {
        src: var(&model, transcripts::PFPH),
        dst: var(&model, transcripts::LE),
        directed: false,
    };
    let model = wb.edit(&p, &m, &add, None).unwrap().model;
    let e = edge(&model, transcripts::PFPH, transcripts::LE);

    let r = wb.debate(&p, &m, &e).unwrap();
    assert!(r.failures.is_empty());
    assert_eq!(r.verdict.suggestion, Suggestion::LeftToRight);
    assert_eq!(r.chart.left_var, transcripts::PFPH);
    let general = &r.chart.rows[0];
    assert_eq!((general.left.score, general.right.score), (4, 2));
    assert_eq!(r.responses.len(), 10);

    let project = wb.project(&p).unwrap();
    assert_eq!(project.findings.len(), 1);
    assert_eq!(project.exchanges.len(), 10);
    assert_eq!(project.findings[0].chart, Chart::Debate(r.chart.clone()));
    verify_audit(&project.audit).unwrap();

    // Asking again replaces the finding rather than adding one.
    wb.debate(&p, &m, &e).unwrap();
    assert_eq!(wb.project(&p).unwrap().findings.len(), 1);
}

#[test]
fn missing_fixture_is_an_llm_failure_and_saves_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let wb = bench(dir.path());
    let (p, m) = health(&wb);
    let before = wb.export(&p).unwrap();
    let le = var(&wb.model(&p, &m).unwrap(), transcripts::LE);
    let err = wb.latent(&p, &m, &le).unwrap_err();
    assert_eq!(err.code, ErrorCode::LlmFailure);
    assert_eq!(err.code.http_status(), 502);
    let key = err.detail["key"].as_str().unwrap();
    assert_eq!(key.len(), 64);
    assert_eq!(wb.export(&p).unwrap(), before);
}

#[test]
fn idempotency_keys_replay_or_conflict() {
    let dir = tempfile::tempdir().unwrap();
    let wb = bench(dir.path());
    let (p, m) = health(&wb);
    let model = wb.model(&p, &m).unwrap();
    let (a, b) = (var(&model, transcripts::PFPH), var(&model, transcripts::LE));
    let add = EditRequest::Add {
        src: a.clone(),
        dst: b.clone(),
        directed: true,
    };
    let first = wb.edit(&p, &m, &add, Some("k1")).unwrap();
    let again = wb.edit(&p, &m, &add, Some("k1")).unwrap();
    assert_eq!(first, again);
    let project = wb.project(&p).unwrap();
    assert_eq!(project.audit.len(), 2);
    assert_eq!(project.tree.require(&m).unwrap().edges.len(), 1);

    let other = EditRequest::Add {
        src: b,
        dst: a,
        directed: true,
    };
    let err = wb.edit(&p, &m, &other, Some("k1")).unwrap_err();
    assert_eq!(err.code, ErrorCode::Conflict);
    // Without a key the duplicate is a genuine conflict.
    assert_eq!(wb.edit(&p, &m, &add, None).unwrap_err().code, ErrorCode::Conflict);
    assert_eq!(wb.project(&p).unwrap().audit.len(), 2);
}

#[test]
fn structural_edits_report_the_score_change() {
    let dir = tempfile::tempdir().unwrap();
    let wb = bench(dir.path());
    let (p, m) = health(&wb);
    let model = wb.model(&p, &m).unwrap();
    let add = EditRequest::Add {
        src: var(&model, transcripts::PFPH),
        dst: var(&model, transcripts::LE),
        directed: false,
    };
    let r = wb.edit(&p, &m, &add, None).unwrap();
    assert!(r.bic_delta.is_some());
    let e = edge(&r.model, transcripts::PFPH, transcripts::LE);
    let direct = EditRequest::Direct {
        edge: e.clone(),
        toward: var(&model, transcripts::LE),
    };
    let r = wb.edit(&p, &m, &direct, None).unwrap();
    assert!(r.model.edge(&e).unwrap().is_directed());
    // Directing it again is refused.
    assert_eq!(wb.edit(&p, &m, &direct, None).unwrap_err().code, ErrorCode::Conflict);
}

#[test]
fn autompg_walkthrough() {
    let dir = tempfile::tempdir().unwrap();
    let wb = bench(dir.path());
    let p = autompg(&wb);
    let m = wb.summary(&p).unwrap().root_model;

    let d = wb.discover(&p, &m, &DiscoverRequest::default()).unwrap();
    assert!(d.edges >= 7);
    let model = d.model;
    let cd = edge(&model, "cylinders", "displacement");
    let debate = wb.debate(&p, &m, &cd).unwrap();
    assert_eq!(debate.chart.left_var, "cylinders");
    assert_eq!(debate.verdict.suggestion, Suggestion::LeftToRight);

    let wa = edge(&model, "weight", "acceleration");
    let env = EnvironmentRequest {
        cause_level: Level::Higher,
        effect_level: Level::Lower,
    };
    let r = wb.environment(&p, &m, &wa, &env).unwrap();
    assert_eq!(r.chart.mediators[0].name, "Torque");
    assert_eq!(r.chart.confounders.len(), 2);

    let accept = EditRequest::AddThird {
        edge: wa.clone(),
        role: ThirdRole::Mediator,
        name: "torque".into(),
        cause_level: Some(Level::Higher),
        effect_level: Some(Level::Lower),
    };
    let model = wb.edit(&p, &m, &accept, None).unwrap().model;
    let torque = model.variable_by_name("Torque").unwrap();
    assert_eq!(torque.provenance, Provenance::Hypothesized);
    let roles: Vec<_> = model
        .edges
        .iter()
        .filter(|e| e.src == torque.id || e.dst == torque.id)
        .map(|e| e.role)
        .collect();
    assert_eq!(roles, vec![EdgeRole::MediatorLink, EdgeRole::MediatorLink]);

    // A finding that is not in the stored chart is refused.
    let bogus = EditRequest::AddThird {
        edge: wa.clone(),
        role: ThirdRole::Mediator,
        name: "Aerodynamics".into(),
        cause_level: Some(Level::Higher),
        effect_level: Some(Level::Lower),
    };
    assert_eq!(wb.edit(&p, &m, &bogus, None).unwrap_err().code, ErrorCode::NotFound);

    let fit = wb.sem(&p, &m).unwrap();
    assert!(!fit.fit.coefficients.is_empty());
    let project = wb.project(&p).unwrap();
    assert_eq!(project.fits.len(), 1);
    verify_audit(&project.audit).unwrap();

    // Byte-identical round trip, with the data re-ingested.
    let text = wb.export(&p).unwrap();
    let reloaded = Project::from_json(&text).unwrap();
    assert_eq!(reloaded.to_json(), text);
}

#[test]
fn latent_factors_are_accepted_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let wb = bench(dir.path());
    let p = autompg(&wb);
    let m = wb.summary(&p).unwrap().root_model;
    let weight = var(&wb.model(&p, &m).unwrap(), "weight");
    let r = wb.latent(&p, &m, &weight).unwrap();
    assert_eq!(r.chart.negatives[0].name, "Material Choice");
    assert_eq!(r.chart.positives[0].name, "Safety Regulations");
    let req = EditRequest::AddLatent {
        variable: weight.clone(),
        name: "Material Choice".into(),
    };
    let model = wb.edit(&p, &m, &req, None).unwrap().model;
    let latent = model.variable_by_name("Material Choice").unwrap();
    assert!(model.edge_between(&latent.id, &weight).is_some());
}

#[test]
fn uploaded_columns_promote_hypothesized_variables() {
    let dir = tempfile::tempdir().unwrap();
    let wb = bench(dir.path());
    let p = autompg(&wb);
    let m = wb.summary(&p).unwrap().root_model;
    let model = wb.discover(&p, &m, &DiscoverRequest::default()).unwrap().model;
    let wa = edge(&model, "weight", "acceleration");
    let env = EnvironmentRequest {
        cause_level: Level::Higher,
        effect_level: Level::Lower,
    };
    wb.environment(&p, &m, &wa, &env).unwrap();
    let accept = EditRequest::AddThird {
        edge: wa,
        role: ThirdRole::Mediator,
        name: "Torque".into(),
        cause_level: Some(Level::Higher),
        effect_level: Some(Level::Lower),
    };
    wb.edit(&p, &m, &accept, None).unwrap();

    let n = 398;
    let mut csv = String::from("Torque\n");
    for i in 0..n {
        csv.push_str(&format!("{}\n", 100 + (i * 37) % 200));
    }
    let r = wb.upload_columns(&p, csv.as_bytes()).unwrap();
    assert_eq!(r.promoted, vec!["Torque".to_owned()]);
    assert_eq!(r.dataset.columns.len(), 9);
    let model = wb.model(&p, &m).unwrap();
    assert!(model.variable_by_name("Torque").unwrap().is_measured());
    let fit = wb.sem(&p, &m).unwrap().fit;
    let torque = var(&model, "Torque");
    let into = model.edges.iter().find(|e| e.dst == torque).unwrap();
    assert!(fit.coefficients.contains_key(&into.id));

    // Row counts must agree.
    let err = wb.upload_columns(&p, b"extra\n1\n2\n").unwrap_err();
    assert_eq!(err.code, ErrorCode::BadRequest);
}

#[test]
fn children_from_selection_and_split() {
    let dir = tempfile::tempdir().unwrap();
    let wb = bench(dir.path());
    let (p, m) = health(&wb);
    let model = wb.model(&p, &m).unwrap();
    let (a, b) = (var(&model, transcripts::PFPH), var(&model, transcripts::LE));
    let add = EditRequest::Add {
        src: a.clone(),
        dst: b.clone(),
        directed: false,
    };
    wb.edit(&p, &m, &add, None).unwrap();
    let sel = ChildrenRequest {
        selected: Some(vec![a.clone(), b.clone()]),
        ..Default::default()
    };
    assert_eq!(wb.children(&p, &m, &sel).unwrap().created.len(), 1);
    let split = ChildrenRequest {
        split: Some(SplitRequest { a, b }),
        note: "both ways".into(),
        ..Default::default()
    };
    assert_eq!(wb.children(&p, &m, &split).unwrap().created.len(), 2);
    assert_eq!(wb.summary(&p).unwrap().models.len(), 4);
    let neither = ChildrenRequest::default();
    assert_eq!(wb.children(&p, &m, &neither).unwrap_err().code, ErrorCode::BadRequest);
}

#[test]
fn client_config_reflects_replay() {
    let dir = tempfile::tempdir().unwrap();
    let wb = bench(dir.path());
    let c = wb.client_config();
    assert!(!c.async_batteries);
    assert_eq!(c.thresholds.min_score, 3);
    assert_eq!(c.theme.magenta, "#d81b60");
}
