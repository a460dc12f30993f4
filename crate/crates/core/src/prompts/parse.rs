//! Parsers for model answers. None of them panic on arbitrary text: they
//! either return findings (plus warnings for lines they skipped) or a
//! [`ParseFailure`] carrying the raw answer.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Byte range `[start, end)` into the raw response text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn slice<'a>(&self, text: &'a str) -> Option<&'a str> {
        text.get(self.start..self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rating {
    pub value: u8,
    pub justification: String,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strength {
    Weak,
    Medium,
    Strong,
}

impl Strength {
    pub fn as_str(self) -> &'static str {
        match self {
            Strength::Weak => "weak",
            Strength::Medium => "medium",
            Strength::Strong => "strong",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Positive,
    Negative,
}

impl Direction {
    pub fn polarity(self) -> f64 {
        match self {
            Direction::Positive => 1.0,
            Direction::Negative => -1.0,
        }
    }

    pub fn arrow(self) -> char {
        match self {
            Direction::Positive => '↑',
            Direction::Negative => '↓',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatentSign {
    Positive,
    Negative,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfounderFinding {
    pub name: String,
    pub strength: Strength,
    pub justification: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MediatorFinding {
    pub name: String,
    pub strength: Strength,
    pub justification: String,
    pub conditions: String,
    pub direction: Direction,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatentFinding {
    pub name: String,
    pub strength: Strength,
    pub sign: LatentSign,
    pub justification: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("could not parse model response: {reason}")]
pub struct ParseFailure {
    pub reason: String,
    pub raw: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Parsed<T> {
    pub findings: Vec<T>,
    pub warnings: Vec<String>,
}

fn rating_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    // "Rating" followed by up to a few markdown/punctuation characters and a number.
    RE.get_or_init(|| Regex::new(r"(?i)\brating\b[\s*_:#=\-]{0,8}(\d+)").unwrap())
}

/// Extracts the first `Rating: n` from a response.
pub fn parse_rating(raw: &str) -> Result<Rating, ParseFailure> {
    let failure = |reason: &str| ParseFailure {
        reason: reason.to_owned(),
        raw: raw.to_owned(),
    };
    if raw.trim().is_empty() {
        return Err(failure("empty response"));
    }
    let caps = rating_regex()
        .captures(raw)
        .ok_or_else(|| failure("no `Rating: <n>` found"))?;
    let number = caps.get(1).unwrap();
    let value: u8 = match number.as_str().parse() {
        Ok(v @ 1..=4) => v,
        _ => return Err(failure(&format!("rating `{}` is outside 1..4", number.as_str()))),
    };

    // Justification: whatever follows, minus leading markdown and punctuation.
    let rest = &raw[number.end()..];
    let rest_trimmed = rest.strip_prefix("/4").unwrap_or(rest);
    let rest_trimmed =
        rest_trimmed.trim_start_matches(|c: char| c.is_whitespace() || "*_.:)-".contains(c));
    let skipped = rest.len() - rest_trimmed.len();
    let start = number.end() + skipped;
    let text = raw[start..].trim_end();
    let span = if text.is_empty() {
        let whole = caps.get(0).unwrap();
        Span {
            start: whole.start(),
            end: whole.end(),
        }
    } else {
        Span {
            start,
            end: start + text.len(),
        }
    };
    Ok(Rating {
        value,
        justification: text.to_owned(),
        span,
    })
}

/// A parenthesized tuple line: its fields and the byte span of the line.
struct TupleLine<'a> {
    fields: Vec<&'a str>,
    span: Span,
    line: &'a str,
}

fn strip_list_marker(s: &str) -> &str {
    let s = s.trim_start();
    let s = s.trim_start_matches(['-', '*', '•', '>']).trim_start();
    let digits = s.len() - s.trim_start_matches(|c: char| c.is_ascii_digit()).len();
    if digits > 0 {
        let rest = &s[digits..];
        if let Some(r) = rest.strip_prefix('.').or_else(|| rest.strip_prefix(')')) {
            return r.trim_start();
        }
    }
    s
}

fn tuple_lines(raw: &str) -> Vec<TupleLine<'_>> {
    let mut out = Vec::new();
    let mut offset = 0;
    for line in raw.split_inclusive('\n') {
        let start = offset;
        offset += line.len();
        let content = line.trim_end_matches(['\n', '\r']);
        let body = strip_list_marker(content).trim_start_matches(['*', '_', '`']);
        let Some(inner) = body.strip_prefix('(') else {
            continue;
        };
        let inner = inner.trim_end();
        let inner = inner.trim_end_matches(['*', '_', '`', '.', ',']).trim_end();
        let inner = match inner.rfind(')') {
            Some(close) if close + 1 == inner.len() => &inner[..close],
            _ => inner,
        };
        out.push(TupleLine {
            fields: inner.split(';').map(str::trim).collect(),
            span: Span {
                start,
                end: start + content.len(),
            },
            line: content,
        });
    }
    out
}

fn clean_field(s: &str) -> &str {
    s.trim()
        .trim_matches(|c: char| "*_`\"'“”‘’".contains(c))
        .trim()
}

/// Splits arrow glyphs out of a name: `"Economic Disadvantage ↑"` →
/// `("Economic Disadvantage", Some(Positive))`.
fn split_arrow(name: &str) -> (String, Option<Direction>) {
    let up = name.contains('↑');
    let down = name.contains('↓');
    let cleaned: String = name.chars().filter(|c| *c != '↑' && *c != '↓').collect();
    let cleaned = clean_field(&cleaned).to_owned();
    let dir = match (up, down) {
        (true, false) => Some(Direction::Positive),
        (false, true) => Some(Direction::Negative),
        _ => None,
    };
    (cleaned, dir)
}

/// Matches a field against a closed vocabulary, case-insensitively, by whole
/// words. Exactly one vocabulary word must occur.
fn vocab<T: Copy>(field: &str, words: &[(&str, T)]) -> Option<T> {
    let lowered = field.to_lowercase();
    let tokens: Vec<&str> = lowered
        .split(|c: char| !c.is_alphabetic())
        .filter(|t| !t.is_empty())
        .collect();
    let hits: Vec<usize> = words
        .iter()
        .enumerate()
        .filter(|(_, (w, _))| tokens.contains(w))
        .map(|(i, _)| i)
        .collect();
    match hits.as_slice() {
        [i] => Some(words[*i].1),
        _ => None,
    }
}

const STRENGTHS: [(&str, Strength); 3] = [
    ("weak", Strength::Weak),
    ("medium", Strength::Medium),
    ("strong", Strength::Strong),
];
const DIRECTIONS: [(&str, Direction); 2] =
    [("positive", Direction::Positive), ("negative", Direction::Negative)];
const SIGNS: [(&str, LatentSign); 3] = [
    ("positive", LatentSign::Positive),
    ("negative", LatentSign::Negative),
    ("categorical", LatentSign::Categorical),
];

fn finish<T>(raw: &str, findings: Vec<T>, warnings: Vec<String>) -> Result<Parsed<T>, ParseFailure> {
    if findings.is_empty() {
        let mut reason = "no tuple lines could be parsed".to_owned();
        if !warnings.is_empty() {
            reason.push_str(": ");
            reason.push_str(&warnings.join("; "));
        }
        return Err(ParseFailure {
            reason,
            raw: raw.to_owned(),
        });
    }
    Ok(Parsed { findings, warnings })
}

fn too_few(line: &TupleLine<'_>, need: usize) -> String {
    format!(
        "skipped line with {} field(s), expected {need}: {}",
        line.fields.len(),
        line.line
    )
}

pub fn parse_confounders(raw: &str) -> Result<Parsed<ConfounderFinding>, ParseFailure> {
    let mut findings = Vec::new();
    let mut warnings = Vec::new();
    for line in tuple_lines(raw) {
        if line.fields.len() < 3 {
            warnings.push(too_few(&line, 3));
            continue;
        }
        let (name, _) = split_arrow(line.fields[0]);
        let Some(strength) = vocab(line.fields[1], &STRENGTHS) else {
            warnings.push(format!("unrecognized strength `{}`: {}", line.fields[1], line.line));
            continue;
        };
        if name.is_empty() {
            warnings.push(format!("empty name: {}", line.line));
            continue;
        }
        findings.push(ConfounderFinding {
            name,
            strength,
            justification: clean_field(&line.fields[2..].join("; ")).to_owned(),
            span: line.span,
        });
    }
    finish(raw, findings, warnings)
}

pub fn parse_mediators(raw: &str) -> Result<Parsed<MediatorFinding>, ParseFailure> {
    let mut findings = Vec::new();
    let mut warnings = Vec::new();
    for line in tuple_lines(raw) {
        let k = line.fields.len();
        if k < 5 {
            warnings.push(too_few(&line, 5));
            continue;
        }
        let (name, arrow) = split_arrow(line.fields[0]);
        let Some(strength) = vocab(line.fields[1], &STRENGTHS) else {
            warnings.push(format!("unrecognized strength `{}`: {}", line.fields[1], line.line));
            continue;
        };
        let direction = match (vocab(line.fields[k - 1], &DIRECTIONS), arrow) {
            (Some(d), Some(a)) if d != a => {
                warnings.push(format!(
                    "direction field `{}` contradicts arrow in name; using the field: {}",
                    line.fields[k - 1],
                    line.line
                ));
                d
            }
            (Some(d), _) => d,
            (None, Some(a)) => a,
            (None, None) => {
                warnings.push(format!(
                    "unrecognized direction `{}`: {}",
                    line.fields[k - 1],
                    line.line
                ));
                continue;
            }
        };
        if name.is_empty() {
            warnings.push(format!("empty name: {}", line.line));
            continue;
        }
        findings.push(MediatorFinding {
            name,
            strength,
            justification: clean_field(&line.fields[2..k - 2].join("; ")).to_owned(),
            conditions: clean_field(line.fields[k - 2]).to_owned(),
            direction,
            span: line.span,
        });
    }
    finish(raw, findings, warnings)
}

pub fn parse_latents(raw: &str) -> Result<Parsed<LatentFinding>, ParseFailure> {
    let mut findings = Vec::new();
    let mut warnings = Vec::new();
    for line in tuple_lines(raw) {
        if line.fields.len() < 4 {
            warnings.push(too_few(&line, 4));
            continue;
        }
        let (name, arrow) = split_arrow(line.fields[0]);
        let Some(strength) = vocab(line.fields[1], &STRENGTHS) else {
            warnings.push(format!("unrecognized strength `{}`: {}", line.fields[1], line.line));
            continue;
        };
        let sign = match (vocab(line.fields[2], &SIGNS), arrow) {
            (Some(s), _) => s,
            (None, Some(Direction::Positive)) => LatentSign::Positive,
            (None, Some(Direction::Negative)) => LatentSign::Negative,
            (None, None) => {
                warnings.push(format!("unrecognized sign `{}`: {}", line.fields[2], line.line));
                continue;
            }
        };
        if name.is_empty() {
            warnings.push(format!("empty name: {}", line.line));
            continue;
        }
        findings.push(LatentFinding {
            name,
            strength,
            sign,
            justification: clean_field(&line.fields[3..].join("; ")).to_owned(),
            span: line.span,
        });
    }
    finish(raw, findings, warnings)
}
