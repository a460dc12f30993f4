//! Render-ready data for the debate, relation-environment and latent-factor
//! charts, the dominance and sign-pattern readings of a debate, and SVG
//! output.

mod svg;

pub use svg::{render_svg, Theme};

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::prompts::{
    ConfounderFinding, Direction, LatentFinding, LatentSign, Level, MediatorFinding, PromptSpec,
    parse_rating, Rating, Span, Strength, LEVEL_ROWS,
};

/// Version tag written into every chart document.
pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColorClass {
    Grey,
    Magenta,
    Skyblue,
}

impl ColorClass {
    /// General rows are grey; otherwise the cause's level decides.
    pub fn for_levels(cause: Level, effect: Level) -> Self {
        match (cause, effect) {
            (Level::General, _) | (_, Level::General) => ColorClass::Grey,
            (Level::Higher, _) => ColorClass::Magenta,
            (Level::Lower, _) => ColorClass::Skyblue,
        }
    }
}

/// Where a piece of justification text came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Justification {
    pub text: String,
    pub span: Span,
    /// Key of the LLM exchange whose response contains `span`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exchange_key: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bar {
    /// 1..=4, or 0 when the rating is unavailable.
    pub score: u8,
    pub available: bool,
    pub color: ColorClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub justification: Option<Justification>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BarPair {
    pub cause_level: Level,
    pub effect_level: Level,
    /// Bar for the left variable as cause.
    pub left: Bar,
    /// Bar for the right variable as cause.
    pub right: Bar,
}

impl BarPair {
    pub fn label(&self) -> &'static str {
        match (self.cause_level, self.effect_level) {
            (Level::Higher, Level::Higher) => "hi\u{2192}hi",
            (Level::Higher, Level::Lower) => "hi\u{2192}lo",
            (Level::Lower, Level::Higher) => "lo\u{2192}hi",
            (Level::Lower, Level::Lower) => "lo\u{2192}lo",
            _ => "general",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DebateChartData {
    pub schema: u32,
    pub left_var: String,
    pub right_var: String,
    /// General, hi→hi, hi→lo, lo→hi, lo→lo.
    pub rows: Vec<BarPair>,
}

/// One debate prompt and, if it could be parsed, its rating.
#[derive(Debug, Clone, PartialEq)]
pub struct RatedPrompt {
    pub spec: PromptSpec,
    pub rating: Option<Rating>,
    pub exchange_key: Option<String>,
}

impl RatedPrompt {
    /// Parses `response`; an absent or unparsable answer leaves the rating
    /// empty.
    pub fn from_response(spec: PromptSpec, exchange_key: Option<String>, response: Option<&str>) -> Self {
        RatedPrompt {
            spec,
            rating: response.and_then(|r| parse_rating(r).ok()),
            exchange_key,
        }
    }
}

fn bar(rated: Option<&RatedPrompt>, cause: Level, effect: Level) -> Bar {
    let color = ColorClass::for_levels(cause, effect);
    match rated.and_then(|r| r.rating.as_ref().map(|rt| (r, rt))) {
        Some((r, rating)) => Bar {
            score: rating.value,
            available: true,
            color,
            justification: Some(Justification {
                text: rating.justification.clone(),
                span: rating.span,
                exchange_key: r.exchange_key.clone(),
            }),
        },
        None => Bar {
            score: 0,
            available: false,
            color,
            justification: None,
        },
    }
}

/// Lays out a debate battery. The left side is the cause of the first
/// prompt; prompts are matched to rows by their level combination, and any
/// missing or unparsed rating becomes an unavailable zero bar.
pub fn build_debate(ratings: &[RatedPrompt]) -> DebateChartData {
    let left = ratings.first().map(|r| r.spec.cause.clone()).unwrap_or_default();
    let right = ratings
        .iter()
        .find_map(|r| r.spec.effect.clone().filter(|_| r.spec.cause == left))
        .unwrap_or_default();
    let find = |cause: &str, levels: (Level, Level)| {
        ratings.iter().find(|r| {
            r.spec.cause == cause && (r.spec.cause_level, r.spec.effect_level) == levels
        })
    };
    let rows = LEVEL_ROWS
        .iter()
        .map(|&(c, e)| BarPair {
            cause_level: c,
            effect_level: e,
            left: bar(find(&left, (c, e)), c, e),
            right: bar(find(&right, (c, e)), c, e),
        })
        .collect();
    DebateChartData {
        schema: SCHEMA,
        left_var: left,
        right_var: right,
        rows,
    }
}

/// Thresholds for reading a debate chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DebateThresholds {
    /// Minimum general-row score for a side to be suggested as the cause.
    pub min_score: u8,
    /// Minimum lead over the other side's general-row score.
    pub min_gap: u8,
    /// How much the consistent level pairs must outscore the crossed ones.
    pub sign_margin: u8,
    /// At or below this top score the relation is flagged as possibly
    /// confounded.
    pub confounder_max: u8,
}

impl Default for DebateThresholds {
    fn default() -> Self {
        DebateThresholds {
            min_score: 3,
            min_gap: 1,
            sign_margin: 1,
            confounder_max: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suggestion {
    LeftToRight,
    RightToLeft,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub suggestion: Suggestion,
    pub confounder_likely: bool,
}

pub fn dominance(d: &DebateChartData) -> Verdict {
    dominance_with(d, &DebateThresholds::default())
}

pub fn dominance_with(d: &DebateChartData, t: &DebateThresholds) -> Verdict {
    let (a, b) = d
        .rows
        .first()
        .map_or((0, 0), |r| (r.left.score, r.right.score));
    let wins = |x: u8, y: u8| x >= t.min_score && x >= y.saturating_add(t.min_gap) && x > y;
    let suggestion = if wins(a, b) {
        Suggestion::LeftToRight
    } else if wins(b, a) {
        Suggestion::RightToLeft
    } else {
        Suggestion::Inconclusive
    };
    Verdict {
        suggestion,
        confounder_likely: suggestion == Suggestion::Inconclusive && a.max(b) <= t.confounder_max,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignPattern {
    Positive,
    Negative,
    Indeterminate,
}

pub fn sign_pattern(d: &DebateChartData, side: Side) -> SignPattern {
    sign_pattern_with(d, side, &DebateThresholds::default())
}

/// Positive when the same-level rows (hi→hi, lo→lo) outscore the crossed
/// rows (hi→lo, lo→hi) by more than the margin; negative for the mirror.
pub fn sign_pattern_with(d: &DebateChartData, side: Side, t: &DebateThresholds) -> SignPattern {
    let score = |cause: Level, effect: Level| -> i32 {
        d.rows
            .iter()
            .find(|r| r.cause_level == cause && r.effect_level == effect)
            .map_or(0, |r| match side {
                Side::Left => r.left.score,
                Side::Right => r.right.score,
            } as i32)
    };
    let same = score(Level::Higher, Level::Higher) + score(Level::Lower, Level::Lower);
    let crossed = score(Level::Higher, Level::Lower) + score(Level::Lower, Level::Higher);
    let margin = i32::from(t.sign_margin);
    if same > crossed + margin {
        SignPattern::Positive
    } else if crossed > same + margin {
        SignPattern::Negative
    } else {
        SignPattern::Indeterminate
    }
}

/// A finding together with the exchange it was parsed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sourced<T> {
    pub finding: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exchange_key: Option<String>,
}

impl<T> Sourced<T> {
    pub fn new(finding: T, exchange_key: Option<String>) -> Self {
        Sourced { finding, exchange_key }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelledVar {
    pub name: String,
    pub level: Level,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChartItem {
    pub name: String,
    pub strength: Strength,
    /// Mediators only: the direction the mediator must move.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
    pub justification: Justification,
}

impl ChartItem {
    /// `"Social Cohesion ↓"` for mediators, the bare name otherwise.
    pub fn label(&self) -> String {
        match self.direction {
            Some(d) => format!("{} {}", self.name, d.arrow()),
            None => self.name.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvironmentChartData {
    pub schema: u32,
    pub cause: LevelledVar,
    pub effect: LevelledVar,
    pub confounders: Vec<ChartItem>,
    pub mediators: Vec<ChartItem>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatentChartData {
    pub schema: u32,
    pub target: String,
    pub positives: Vec<ChartItem>,
    pub negatives: Vec<ChartItem>,
    /// Factors reported without a sign.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categorical: Vec<ChartItem>,
}

/// Strong before weak, then by name.
fn by_strength(a: &ChartItem, b: &ChartItem) -> Ordering {
    b.strength
        .cmp(&a.strength)
        .then_with(|| a.name.to_lowercase().cmp(&b.name.to_lowercase()))
        .then_with(|| a.name.cmp(&b.name))
}

fn item(
    name: &str,
    strength: Strength,
    direction: Option<Direction>,
    text: &str,
    span: Span,
    key: &Option<String>,
) -> ChartItem {
    ChartItem {
        name: name.to_owned(),
        strength,
        direction,
        justification: Justification {
            text: text.to_owned(),
            span,
            exchange_key: key.clone(),
        },
    }
}

pub fn build_environment(
    cause: LevelledVar,
    effect: LevelledVar,
    confounders: &[Sourced<ConfounderFinding>],
    mediators: &[Sourced<MediatorFinding>],
) -> EnvironmentChartData {
    let mut confs: Vec<ChartItem> = confounders
        .iter()
        .map(|s| {
            let f = &s.finding;
            item(&f.name, f.strength, None, &f.justification, f.span, &s.exchange_key)
        })
        .collect();
    let mut meds: Vec<ChartItem> = mediators
        .iter()
        .map(|s| {
            let f = &s.finding;
            item(&f.name, f.strength, Some(f.direction), &f.justification, f.span, &s.exchange_key)
        })
        .collect();
    confs.sort_by(by_strength);
    meds.sort_by(by_strength);
    EnvironmentChartData {
        schema: SCHEMA,
        cause,
        effect,
        confounders: confs,
        mediators: meds,
    }
}

pub fn build_latent(target: &str, latents: &[Sourced<LatentFinding>]) -> LatentChartData {
    let mut chart = LatentChartData {
        schema: SCHEMA,
        target: target.to_owned(),
        positives: Vec::new(),
        negatives: Vec::new(),
        categorical: Vec::new(),
    };
    for s in latents {
        let f = &s.finding;
        let it = item(&f.name, f.strength, None, &f.justification, f.span, &s.exchange_key);
        match f.sign {
            LatentSign::Positive => chart.positives.push(it),
            LatentSign::Negative => chart.negatives.push(it),
            LatentSign::Categorical => chart.categorical.push(it),
        }
    }
    chart.positives.sort_by(by_strength);
    chart.negatives.sort_by(by_strength);
    chart.categorical.sort_by(by_strength);
    chart
}

/// Any chart, tagged by kind for JSON input to the renderer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Chart {
    Debate(DebateChartData),
    Environment(EnvironmentChartData),
    Latent(LatentChartData),
}
