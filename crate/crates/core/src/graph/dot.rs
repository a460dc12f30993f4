use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{CausalModel, EdgeStatus, Provenance, Sign};
use crate::ingest::Kind;

/// Which hue marks positive edges. Sources disagree, so it is configurable.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColorConvention {
    /// Red for positive, green for negative.
    #[default]
    RedPositive,
    /// Green for positive, red for negative.
    GreenPositive,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DotStyle {
    pub convention: ColorConvention,
}

const RED: &str = "#d32f2f";
const GREEN: &str = "#388e3c";
const YELLOW: &str = "#fbc02d";
const BLUE: &str = "#1e88e5";
const GREY: &str = "#757575";
const PURPLE: &str = "#8e24aa";

/// Line width from |weight|: thin below 0.2, medium below 0.5, thick above.
pub(crate) fn penwidth(weight: Option<f64>) -> f64 {
    match weight.map(f64::abs) {
        Some(w) if w >= 0.5 => 4.0,
        Some(w) if w >= 0.2 => 2.5,
        _ => 1.0,
    }
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Graphviz rendering of a model. Output is deterministic: nodes and edges
/// appear in model order.
pub fn to_dot(m: &CausalModel, style: &DotStyle) -> String {
    let (pos, neg) = match style.convention {
        ColorConvention::RedPositive => (RED, GREEN),
        ColorConvention::GreenPositive => (GREEN, RED),
    };
    let mut out = String::new();
    let _ = writeln!(out, "digraph {} {{", quote(&m.name));
    let _ = writeln!(out, "  node [shape=ellipse];");
    for v in &m.variables {
        let mut attrs = vec![format!("label={}", quote(&v.name))];
        if m.outcome.as_ref() == Some(&v.id) {
            attrs.push(format!("style=filled fillcolor={} fontcolor=white", quote(PURPLE)));
        } else if v.provenance == Provenance::Hypothesized {
            attrs.push("style=dotted".into());
        }
        if v.kind == Kind::Categorical {
            attrs.push(format!("color={}", quote(YELLOW)));
        }
        let _ = writeln!(out, "  {} [{}];", quote(v.id.as_str()), attrs.join(" "));
    }
    for e in &m.edges {
        let color = if !e.is_directed() {
            BLUE
        } else {
            match e.sign {
                Sign::Positive => pos,
                Sign::Negative => neg,
                Sign::Categorical => YELLOW,
                Sign::Unknown => GREY,
            }
        };
        let mut attrs = vec![
            format!("color={}", quote(color)),
            format!("penwidth={:.1}", penwidth(e.weight)),
        ];
        if !e.is_directed() {
            attrs.push("dir=none".into());
        }
        if e.status == EdgeStatus::Hypothesized {
            attrs.push("style=dotted".into());
        }
        if let Some(w) = e.weight {
            attrs.push(format!("label={}", quote(&format!("{w:.2}"))));
        }
        let _ = writeln!(
            out,
            "  {} -> {} [{}];",
            quote(e.src.as_str()),
            quote(e.dst.as_str()),
            attrs.join(" ")
        );
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::super::Orientation;
    use super::*;

    #[test]
    fn encodes_sign_orientation_and_status() {
        let mut m = model(&["a", "b", "c"], &[("a", "b", true), ("b", "c", false)]);
        m.edges[0].sign = Sign::Positive;
        m.edges[0].weight = Some(0.7);
        m.edges[0].status = EdgeStatus::Hypothesized;
        let dot = to_dot(&m, &DotStyle::default());
        assert!(dot.contains("color=\"#d32f2f\" penwidth=4.0 style=dotted"));
        assert!(dot.contains("dir=none"));
        assert_eq!(m.edges[1].orientation, Orientation::Undirected);

        let swapped = to_dot(&m, &DotStyle { convention: ColorConvention::GreenPositive });
        assert!(swapped.contains("color=\"#388e3c\" penwidth=4.0"));
        assert_eq!(dot, to_dot(&m, &DotStyle::default()));
    }

    #[test]
    fn penwidth_thresholds() {
        assert_eq!(penwidth(None), 1.0);
        assert_eq!(penwidth(Some(0.19)), 1.0);
        assert_eq!(penwidth(Some(-0.2)), 2.5);
        assert_eq!(penwidth(Some(0.5)), 4.0);
    }
}
