use super::{
    CausalModel, Edge, EdgeRole, EdgeStatus, GraphError, Orientation, Origin, Sign, Variable,
};
use crate::ids::Id;
use crate::ingest::Kind;
use crate::prompts::{
    ConfounderFinding, LatentFinding, LatentSign, Level, MediatorFinding, Strength,
};

/// Edge weight assumed for an LLM-suggested relation before any data fit.
pub fn strength_prior(strength: Strength) -> f64 {
    match strength {
        Strength::Weak => 0.2,
        Strength::Medium => 0.5,
        Strength::Strong => 0.8,
    }
}

fn signed_prior(strength: Strength, sign: Sign) -> f64 {
    let w = strength_prior(strength);
    if sign == Sign::Negative {
        -w
    } else {
        w
    }
}

fn sign_of(polarity: f64) -> Sign {
    if polarity < 0.0 {
        Sign::Negative
    } else {
        Sign::Positive
    }
}

/// Orients the undirected edge `edge_id` so that it points into `toward`.
pub fn direct_edge(
    m: &CausalModel,
    edge_id: &Id,
    toward: &Id,
    sign: Sign,
) -> Result<CausalModel, GraphError> {
    let edge = m.require_edge(edge_id)?;
    if edge.is_directed() {
        return Err(GraphError::AlreadyDirected(edge_id.clone()));
    }
    if !edge.touches(toward) {
        return Err(GraphError::NotEndpoint {
            edge: edge_id.clone(),
            var: toward.clone(),
        });
    }
    let mut out = m.clone();
    let e = out.edges.iter_mut().find(|e| &e.id == edge_id).unwrap();
    let from = e.other_end(toward).clone();
    e.src = from;
    e.dst = toward.clone();
    e.orientation = Orientation::Directed;
    e.sign = sign;
    if let Some(w) = e.weight {
        if (sign == Sign::Positive && w < 0.0) || (sign == Sign::Negative && w > 0.0) {
            e.weight = None;
        }
    }
    out.ensure_acyclic()?;
    Ok(out)
}

pub fn remove_edge(m: &CausalModel, edge_id: &Id) -> Result<CausalModel, GraphError> {
    m.require_edge(edge_id)?;
    let mut out = m.clone();
    out.edges.retain(|e| &e.id != edge_id);
    Ok(out)
}

/// Parameters for a new edge between existing variables.
#[derive(Debug, Clone)]
pub struct NewEdge {
    pub src: Id,
    pub dst: Id,
    pub orientation: Orientation,
    pub sign: Sign,
    pub weight: Option<f64>,
    pub status: EdgeStatus,
    pub role: EdgeRole,
    pub origin: Origin,
}

impl NewEdge {
    pub fn user(src: Id, dst: Id, orientation: Orientation, sign: Sign) -> Self {
        NewEdge {
            src,
            dst,
            orientation,
            sign,
            weight: None,
            status: EdgeStatus::Hypothesized,
            role: EdgeRole::Plain,
            origin: Origin::User,
        }
    }
}

fn push_edge(m: &mut CausalModel, spec: NewEdge) -> Result<Id, GraphError> {
    m.require_variable(&spec.src)?;
    m.require_variable(&spec.dst)?;
    if spec.src == spec.dst {
        return Err(GraphError::SelfLoop(m.name_of(&spec.src)));
    }
    if m.edge_between(&spec.src, &spec.dst).is_some() {
        return Err(GraphError::DuplicateEdge(
            m.name_of(&spec.src),
            m.name_of(&spec.dst),
        ));
    }
    let id = Id::generate();
    m.edges.push(Edge {
        id: id.clone(),
        src: spec.src,
        dst: spec.dst,
        orientation: spec.orientation,
        sign: spec.sign,
        weight: spec.weight,
        status: spec.status,
        role: spec.role,
        origin: spec.origin,
    });
    Ok(id)
}

/// Adds an edge between two existing, non-adjacent variables.
pub fn add_edge(m: &CausalModel, spec: NewEdge) -> Result<(CausalModel, Id), GraphError> {
    let mut out = m.clone();
    let id = push_edge(&mut out, spec)?;
    out.ensure_acyclic()?;
    Ok((out, id))
}

fn add_hypothesized(m: &mut CausalModel, name: &str, kind: Kind) -> Result<Id, GraphError> {
    let name = name.trim();
    if name.is_empty() {
        return Err(GraphError::Invalid("variable name must not be empty".into()));
    }
    if m.variable_by_name(name).is_some() {
        return Err(GraphError::NameCollision(name.to_owned()));
    }
    let v = Variable::hypothesized(name, kind);
    let id = v.id.clone();
    m.variables.push(v);
    Ok(id)
}

/// A confounder or mediator accepted from an environment chart.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ThirdVariable {
    Confounder(ConfounderFinding),
    Mediator(MediatorFinding),
}

fn llm_edge(src: Id, dst: Id, sign: Sign, strength: Strength, role: EdgeRole) -> NewEdge {
    NewEdge {
        src,
        dst,
        orientation: Orientation::Directed,
        sign,
        weight: Some(signed_prior(strength, sign)),
        status: EdgeStatus::Hypothesized,
        role,
        origin: Origin::Llm,
    }
}

/// Inserts a hypothesized confounder (`F → cause`, `F → effect`) or mediator
/// (`cause → M → effect`).
///
/// Mediator edge signs follow from the relation's levels and the finding's
/// direction: with `p(level)` = +1 for higher/general and −1 for lower and
/// `d` = +1/−1 for a positive/negative mediator, `cause → M` has sign
/// `p(cause)·d` and `M → effect` has sign `d·p(effect)`. Confounder edges
/// carry no sign, only the strength prior.
pub fn add_third_variable(
    m: &CausalModel,
    finding: &ThirdVariable,
    cause: &Id,
    effect: &Id,
    levels: (Level, Level),
) -> Result<CausalModel, GraphError> {
    m.require_variable(cause)?;
    m.require_variable(effect)?;
    if cause == effect {
        return Err(GraphError::SelfLoop(m.name_of(cause)));
    }
    let mut out = m.clone();
    match finding {
        ThirdVariable::Confounder(f) => {
            let c = add_hypothesized(&mut out, &f.name, Kind::Continuous)?;
            for target in [cause, effect] {
                push_edge(
                    &mut out,
                    llm_edge(c.clone(), target.clone(), Sign::Unknown, f.strength, EdgeRole::ConfounderLink),
                )?;
            }
        }
        ThirdVariable::Mediator(f) => {
            let d = f.direction.polarity();
            let mid = add_hypothesized(&mut out, &f.name, Kind::Continuous)?;
            push_edge(
                &mut out,
                llm_edge(
                    cause.clone(),
                    mid.clone(),
                    sign_of(levels.0.polarity() * d),
                    f.strength,
                    EdgeRole::MediatorLink,
                ),
            )?;
            push_edge(
                &mut out,
                llm_edge(
                    mid,
                    effect.clone(),
                    sign_of(d * levels.1.polarity()),
                    f.strength,
                    EdgeRole::MediatorLink,
                ),
            )?;
        }
    }
    out.ensure_acyclic()?;
    Ok(out)
}

/// Inserts a hypothesized latent factor with one edge into `target`.
pub fn add_latent(
    m: &CausalModel,
    finding: &LatentFinding,
    target: &Id,
) -> Result<CausalModel, GraphError> {
    let t = m.require_variable(target)?;
    if t.name.trim().eq_ignore_ascii_case(finding.name.trim()) {
        return Err(GraphError::SelfLoop(t.name.clone()));
    }
    let (sign, kind) = match finding.sign {
        LatentSign::Positive => (Sign::Positive, Kind::Continuous),
        LatentSign::Negative => (Sign::Negative, Kind::Continuous),
        LatentSign::Categorical => (Sign::Categorical, Kind::Categorical),
    };
    let mut out = m.clone();
    let l = add_hypothesized(&mut out, &finding.name, kind)?;
    push_edge(
        &mut out,
        llm_edge(l, target.clone(), sign, finding.strength, EdgeRole::LatentLink),
    )?;
    out.ensure_acyclic()?;
    Ok(out)
}
