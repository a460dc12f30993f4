//! Prompt batteries for interrogating a causal relation, and parsers that
//! turn the model's answers into typed findings.
//!
//! Four battery kinds exist:
//!
//! * **debate** – ten rating prompts for an unordered pair `(A, B)`: both
//!   directions, each asked for the general relation and the four
//!   higher/lower level combinations;
//! * **confounder** and **mediator** – five prompts per chosen direction
//!   (general plus four level combinations), each asking for a list of
//!   semicolon-separated tuples;
//! * **latent** – one prompt per target variable.
//!
//! Rendering is pure: the same inputs always produce byte-identical prompt
//! text and therefore the same [`PromptSpec::key`].

mod parse;

pub use parse::{
    parse_confounders, parse_latents, parse_mediators, parse_rating, ConfounderFinding,
    Direction, LatentFinding, LatentSign, MediatorFinding, ParseFailure, Parsed, Rating, Span,
    Strength,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hash::sha256_hex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatteryKind {
    Debate,
    Confounder,
    Mediator,
    Latent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    General,
    Higher,
    Lower,
}

impl Level {
    /// `+1` for higher (and general), `-1` for lower.
    pub fn polarity(self) -> f64 {
        match self {
            Level::Lower => -1.0,
            _ => 1.0,
        }
    }
}

/// Level combinations in battery order: general, hi→hi, hi→lo, lo→hi, lo→lo.
pub const LEVEL_ROWS: [(Level, Level); 5] = [
    (Level::General, Level::General),
    (Level::Higher, Level::Higher),
    (Level::Higher, Level::Lower),
    (Level::Lower, Level::Higher),
    (Level::Lower, Level::Lower),
];

/// Row index of a level combination in [`LEVEL_ROWS`].
pub fn level_row(cause: Level, effect: Level) -> Option<usize> {
    LEVEL_ROWS.iter().position(|&r| r == (cause, effect))
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("variable name must not be empty")]
    EmptyName,
    #[error("cause and effect must differ (both are `{0}`)")]
    SameVariable(String),
    #[error("level combination must be both general or both higher/lower")]
    MixedGeneral,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub kind: BatteryKind,
    /// The cause variable; for latent prompts, the target variable.
    pub cause: String,
    /// The effect variable; absent for latent prompts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effect: Option<String>,
    pub cause_level: Level,
    pub effect_level: Level,
    pub domain: String,
    /// Persona sentence, sent as the system message.
    pub persona: String,
    /// Everything after the persona, sent as the user message.
    pub body: String,
    pub rendered: String,
    /// Lowercase hex SHA-256 of `rendered`.
    pub key: String,
}

impl PromptSpec {
    fn new(
        kind: BatteryKind,
        cause: &str,
        effect: Option<&str>,
        levels: (Level, Level),
        domain: &str,
        body: String,
    ) -> Self {
        let persona = persona(domain);
        let rendered = format!("{persona} {body}");
        let key = sha256_hex(&rendered);
        PromptSpec {
            kind,
            cause: cause.to_owned(),
            effect: effect.map(str::to_owned),
            cause_level: levels.0,
            effect_level: levels.1,
            domain: domain.to_owned(),
            persona,
            body,
            rendered,
            key,
        }
    }

    pub fn target(&self) -> &str {
        &self.cause
    }
}

/// Rating scale sentence shared by all debate prompts.
pub const SCALE_SENTENCE: &str = "On a scale from 1 to 4, where 4 represents highly significant, \
3 represents significant, 2 represents doubtful, 1 represents not significant, \
rate the following cause-and-effect relationship:";

const RATING_CONTRACT: &str = "Answer with \"Rating: <n>\" on the first line, where <n> is 1, 2, 3 or 4, \
followed by a one-paragraph justification.";

fn tuple_contract(example: &str) -> String {
    format!(
        "Output format: write exactly one tuple per line, enclosed in parentheses, \
with the fields in the order listed and separated by semicolons, for example: {example}"
    )
}

fn persona(domain: &str) -> String {
    let domain = domain.trim();
    if domain.is_empty() {
        "You are an expert in the field these variables come from; infer that domain from the variable names."
            .to_owned()
    } else {
        format!("You are an expert in {domain}.")
    }
}

fn phrase(name: &str, level: Level) -> String {
    match level {
        Level::General => name.to_owned(),
        Level::Higher => format!("higher {name}"),
        Level::Lower => format!("lower {name}"),
    }
}

fn check_pair(a: &str, b: &str) -> Result<(), PromptError> {
    if a.trim().is_empty() || b.trim().is_empty() {
        return Err(PromptError::EmptyName);
    }
    if a.trim() == b.trim() {
        return Err(PromptError::SameVariable(a.trim().to_owned()));
    }
    Ok(())
}

fn debate_prompt(cause: &str, effect: &str, levels: (Level, Level), domain: &str) -> PromptSpec {
    let body = format!(
        "{SCALE_SENTENCE} Does {} cause {}? {RATING_CONTRACT}",
        phrase(cause, levels.0),
        phrase(effect, levels.1)
    );
    PromptSpec::new(BatteryKind::Debate, cause, Some(effect), levels, domain, body)
}

/// Ten rating prompts: `a` as cause first (general, hi→hi, hi→lo, lo→hi,
/// lo→lo), then `b` as cause in the same level order.
pub fn debate_battery(a: &str, b: &str, domain: &str) -> Result<Vec<PromptSpec>, PromptError> {
    check_pair(a, b)?;
    let (a, b) = (a.trim(), b.trim());
    let mut specs = Vec::with_capacity(10);
    for (cause, effect) in [(a, b), (b, a)] {
        for levels in LEVEL_ROWS {
            specs.push(debate_prompt(cause, effect, levels, domain));
        }
    }
    Ok(specs)
}

fn relation_clause(cause: &str, effect: &str, levels: (Level, Level)) -> String {
    format!(
        "Given the cause-and-effect relationship '{}' causes '{}'",
        phrase(cause, levels.0),
        phrase(effect, levels.1)
    )
}

/// Confounder prompt for a single level combination.
pub fn confounder_prompt(
    cause: &str,
    effect: &str,
    levels: (Level, Level),
    domain: &str,
) -> Result<PromptSpec, PromptError> {
    check_pair(cause, effect)?;
    check_levels(levels)?;
    let (cause, effect) = (cause.trim(), effect.trim());
    let body = format!(
        "{} identify potential confounders based on the definition: a confounder is a variable \
that influences both the cause and the effect, so that part of their association is not due to \
a direct causal relationship between them. For each identified confounder, provide the following \
details in a tuple format:\n\
1. Name of the confounder.\n\
2. Strength of the confounder (options: weak, medium, strong).\n\
3. Justification for its role as a confounder based on the definition provided.\n{}",
        relation_clause(cause, effect, levels),
        tuple_contract("(Name of the confounder; strong; justification)")
    );
    Ok(PromptSpec::new(BatteryKind::Confounder, cause, Some(effect), levels, domain, body))
}

/// Mediator prompt for a single level combination.
pub fn mediator_prompt(
    cause: &str,
    effect: &str,
    levels: (Level, Level),
    domain: &str,
) -> Result<PromptSpec, PromptError> {
    check_pair(cause, effect)?;
    check_levels(levels)?;
    let (cause, effect) = (cause.trim(), effect.trim());
    let body = format!(
        "{} identify potential mediators based on the definition: Rather than a direct causal \
relationship between the independent variable and the dependent variable, the independent variable \
influences the mediator variable, which in turn influences the dependent variable. For each \
identified mediator, provide the following details in a tuple format:\n\
1. Name of the mediator.\n\
2. Strength of the mediator (options: weak, medium, strong).\n\
3. Justification for its role as a mediator based on the definition provided.\n\
4. Specific conditions under which the mediator operates.\n\
5. Direction of the mediator's effect ('positive' or 'negative'): whether the level of the \
mediator must increase (positive) or decrease (negative) to produce the stated effect. The \
direction tells us how to intervene on the mediators to achieve the relationship.\n{}",
        relation_clause(cause, effect, levels),
        tuple_contract("(Name of the mediator; medium; justification; conditions; positive)")
    );
    Ok(PromptSpec::new(BatteryKind::Mediator, cause, Some(effect), levels, domain, body))
}

fn check_levels(levels: (Level, Level)) -> Result<(), PromptError> {
    let general = (levels.0 == Level::General, levels.1 == Level::General);
    if general.0 != general.1 {
        return Err(PromptError::MixedGeneral);
    }
    Ok(())
}

/// Five confounder prompts for `cause → effect`, in [`LEVEL_ROWS`] order.
pub fn confounder_battery(
    cause: &str,
    effect: &str,
    domain: &str,
) -> Result<Vec<PromptSpec>, PromptError> {
    LEVEL_ROWS
        .iter()
        .map(|&levels| confounder_prompt(cause, effect, levels, domain))
        .collect()
}

/// Five mediator prompts for `cause → effect`, in [`LEVEL_ROWS`] order.
pub fn mediator_battery(
    cause: &str,
    effect: &str,
    domain: &str,
) -> Result<Vec<PromptSpec>, PromptError> {
    LEVEL_ROWS
        .iter()
        .map(|&levels| mediator_prompt(cause, effect, levels, domain))
        .collect()
}

pub fn latent_prompt(target: &str, domain: &str) -> Result<PromptSpec, PromptError> {
    let target = target.trim();
    if target.is_empty() {
        return Err(PromptError::EmptyName);
    }
    let body = format!(
        "Given the target variable {target}, identify potential latent (intervenable) factors that \
might influence the target variable. Ensure that the identified latent factors can be actionable \
or intervenable to affect the target variable. Provide the following details for each latent factor:\n\
1. Name of the latent factor.\n\
2. Strength of the effect (weak, medium, strong).\n\
3. Sign of the effect (positive, negative, or categorical).\n\
4. Justification for its role as a latent factor.\n{}",
        tuple_contract("(Name of the latent factor; strong; negative; justification)")
    );
    Ok(PromptSpec::new(
        BatteryKind::Latent,
        target,
        None,
        (Level::General, Level::General),
        domain,
        body,
    ))
}

/// Follow-up prompt asking the model to restate an unparsable answer in the
/// required format. At most one is issued per response.
pub fn repair_prompt(original: &PromptSpec, raw: &str) -> PromptSpec {
    let contract = match original.kind {
        BatteryKind::Debate => RATING_CONTRACT.to_owned(),
        BatteryKind::Confounder => tuple_contract("(Name; strength; justification)"),
        BatteryKind::Mediator => {
            tuple_contract("(Name; strength; justification; conditions; direction)")
        }
        BatteryKind::Latent => tuple_contract("(Name; strength; sign; justification)"),
    };
    let body = format!(
        "Reformat your previous answer to the required format without changing its content. \
{contract}\n\nPrevious answer:\n{raw}"
    );
    PromptSpec::new(
        original.kind,
        &original.cause,
        original.effect.as_deref(),
        (original.cause_level, original.effect_level),
        &original.domain,
        body,
    )
}
