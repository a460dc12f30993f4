use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{
    Bar, Chart, ChartItem, ColorClass, DebateChartData, EnvironmentChartData, LatentChartData,
};
use crate::prompts::{Level, Strength};

/// Shades indexed weak, medium, strong.
pub type Shades = [String; 3];

/// Every color the renderer uses.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Theme {
    pub background: String,
    pub text: String,
    pub grey: String,
    pub magenta: String,
    pub skyblue: String,
    pub red: Shades,
    pub green: Shades,
    pub blue: Shades,
    pub yellow: Shades,
    pub node: String,
}

fn shades(w: &str, m: &str, s: &str) -> Shades {
    [w.to_owned(), m.to_owned(), s.to_owned()]
}

impl Default for Theme {
    fn default() -> Self {
        Theme {
            background: "#ffffff".into(),
            text: "#212121".into(),
            grey: "#9e9e9e".into(),
            magenta: "#d81b60".into(),
            skyblue: "#64b5f6".into(),
            red: shades("#ffcdd2", "#e57373", "#c62828"),
            green: shades("#c8e6c9", "#66bb6a", "#2e7d32"),
            blue: shades("#bbdefb", "#42a5f5", "#1565c0"),
            yellow: shades("#fff9c4", "#ffee58", "#f9a825"),
            node: "#eceff1".into(),
        }
    }
}

impl Theme {
    pub fn class(&self, c: ColorClass) -> &str {
        match c {
            ColorClass::Grey => &self.grey,
            ColorClass::Magenta => &self.magenta,
            ColorClass::Skyblue => &self.skyblue,
        }
    }
}

fn shade(family: &Shades, s: Strength) -> &str {
    match s {
        Strength::Weak => &family[0],
        Strength::Medium => &family[1],
        Strength::Strong => &family[2],
    }
}

/// Dark text on light shades, white on strong ones.
fn ink<'a>(theme: &'a Theme, s: Strength) -> &'a str {
    match s {
        Strength::Strong => "#ffffff",
        _ => &theme.text,
    }
}

fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Rough advance width for the 12px sans-serif used throughout.
fn text_width(s: &str) -> f64 {
    7.0 * s.chars().count() as f64
}

const FONT: &str = "font-family=\"sans-serif\" font-size=\"12\"";

struct Svg {
    out: String,
}

impl Svg {
    fn open(w: f64, h: f64, theme: &Theme) -> Self {
        let mut out = String::new();
        let _ = write!(
            out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.1}\" height=\"{h:.1}\" viewBox=\"0 0 {w:.1} {h:.1}\">\n"
        );
        let _ = writeln!(
            out,
            "<rect x=\"0.0\" y=\"0.0\" width=\"{w:.1}\" height=\"{h:.1}\" fill=\"{}\"/>",
            theme.background
        );
        Svg { out }
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, fill: &str, s: &str) {
        let _ = writeln!(
            self.out,
            "<text x=\"{x:.1}\" y=\"{y:.1}\" text-anchor=\"{anchor}\" {FONT} fill=\"{fill}\">{}</text>",
            esc(s)
        );
    }

    fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}

/// Renders any chart to SVG. Output depends only on the arguments.
pub fn render_svg(chart: &Chart, theme: &Theme) -> String {
    match chart {
        Chart::Debate(d) => debate(d, theme),
        Chart::Environment(e) => environment(e, theme),
        Chart::Latent(l) => latent(l, theme),
    }
}

const UNIT: f64 = 50.0;
const ROW_H: f64 = 32.0;
const BAR_H: f64 = 20.0;
const GAP: f64 = 40.0;

fn debate(d: &DebateChartData, theme: &Theme) -> String {
    let half = 4.0 * UNIT + 20.0;
    let mid = half + GAP;
    let width = 2.0 * mid;
    let top = 44.0;
    let height = top + ROW_H * d.rows.len() as f64 + 16.0;
    let mut svg = Svg::open(width, height, theme);
    let _ = writeln!(
        svg.out,
        "<defs><pattern id=\"hatch\" width=\"4\" height=\"4\" patternUnits=\"userSpaceOnUse\" patternTransform=\"rotate(45)\"><line x1=\"0\" y1=\"0\" x2=\"0\" y2=\"4\" stroke=\"{}\" stroke-width=\"2\"/></pattern></defs>",
        theme.text
    );
    svg.text(mid - GAP, 24.0, "end", &theme.text, &format!("{} causes", d.left_var));
    svg.text(mid + GAP, 24.0, "start", &theme.text, &format!("{} causes", d.right_var));
    for (i, row) in d.rows.iter().enumerate() {
        let y = top + ROW_H * i as f64;
        svg.text(mid, y + 14.0, "middle", &theme.text, row.label());
        debate_bar(&mut svg, theme, &row.left, i, "left", mid - GAP, y, -1.0);
        debate_bar(&mut svg, theme, &row.right, i, "right", mid + GAP, y, 1.0);
    }
    let _ = writeln!(
        svg.out,
        "<line x1=\"{x:.1}\" y1=\"{top:.1}\" x2=\"{x:.1}\" y2=\"{bottom:.1}\" stroke=\"{}\"/>",
        theme.text,
        x = mid - GAP,
        bottom = height - 16.0
    );
    let _ = writeln!(
        svg.out,
        "<line x1=\"{x:.1}\" y1=\"{top:.1}\" x2=\"{x:.1}\" y2=\"{bottom:.1}\" stroke=\"{}\"/>",
        theme.text,
        x = mid + GAP,
        bottom = height - 16.0
    );
    svg.finish()
}

#[allow(clippy::too_many_arguments)]
fn debate_bar(svg: &mut Svg, theme: &Theme, bar: &Bar, row: usize, side: &str, base: f64, y: f64, dir: f64) {
    let key = bar
        .justification
        .as_ref()
        .and_then(|j| j.exchange_key.as_deref())
        .unwrap_or("");
    let attrs = format!("data-row=\"{row}\" data-side=\"{side}\" data-key=\"{}\"", esc(key));
    if !bar.available {
        let x = if dir < 0.0 { base - 6.0 } else { base };
        let _ = writeln!(
            svg.out,
            "<rect class=\"bar unavailable\" {attrs} x=\"{x:.1}\" y=\"{:.1}\" width=\"6.0\" height=\"{BAR_H:.1}\" fill=\"url(#hatch)\" stroke=\"{}\"><title>rating unavailable</title></rect>",
            y + 2.0,
            theme.class(bar.color)
        );
        return;
    }
    let len = UNIT * f64::from(bar.score);
    let x = if dir < 0.0 { base - len } else { base };
    let title = bar.justification.as_ref().map_or("", |j| j.text.as_str());
    let _ = writeln!(
        svg.out,
        "<rect class=\"bar {}\" {attrs} x=\"{x:.1}\" y=\"{:.1}\" width=\"{len:.1}\" height=\"{BAR_H:.1}\" fill=\"{}\"><title>{}</title></rect>",
        class_name(bar.color),
        y + 2.0,
        theme.class(bar.color),
        esc(title)
    );
    let tx = base + dir * (len + 8.0);
    let anchor = if dir < 0.0 { "end" } else { "start" };
    svg.text(tx, y + 16.0, anchor, &theme.text, &bar.score.to_string());
}

fn class_name(c: ColorClass) -> &'static str {
    match c {
        ColorClass::Grey => "grey",
        ColorClass::Magenta => "magenta",
        ColorClass::Skyblue => "skyblue",
    }
}

const BOX_H: f64 = 26.0;
const PAD: f64 = 12.0;

fn box_width(label: &str) -> f64 {
    text_width(label) + 2.0 * PAD
}

/// Draws a labelled box with its left edge at `x`; returns its width.
fn node(svg: &mut Svg, class: &str, x: f64, y: f64, fill: &str, ink: &str, label: &str, key: Option<&str>) -> f64 {
    let w = box_width(label);
    let key = key.map(|k| format!(" data-key=\"{}\"", esc(k))).unwrap_or_default();
    let _ = writeln!(
        svg.out,
        "<g class=\"{class}\"{key}><rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{w:.1}\" height=\"{BOX_H:.1}\" rx=\"4.0\" fill=\"{fill}\" stroke=\"#616161\"/>"
    );
    svg.text(x + w / 2.0, y + 17.0, "middle", ink, label);
    svg.out.push_str("</g>\n");
    w
}

fn row_width(items: &[ChartItem]) -> f64 {
    items.iter().map(|i| box_width(&i.label()) + PAD).sum::<f64>() - PAD
}

/// Lays out `items` centred on `cx`.
fn item_row(svg: &mut Svg, class: &str, items: &[ChartItem], cx: f64, y: f64, family: &Shades, theme: &Theme) {
    let mut x = cx - row_width(items).max(0.0) / 2.0;
    for it in items {
        let w = node(
            svg,
            class,
            x,
            y,
            shade(family, it.strength),
            ink(theme, it.strength),
            &it.label(),
            it.justification.exchange_key.as_deref(),
        );
        x += w + PAD;
    }
}

fn level_tag(l: Level) -> &'static str {
    match l {
        Level::General => "",
        Level::Higher => "higher ",
        Level::Lower => "lower ",
    }
}

fn environment(e: &EnvironmentChartData, theme: &Theme) -> String {
    let cause = format!("{}{}", level_tag(e.cause.level), e.cause.name);
    let effect = format!("{}{}", level_tag(e.effect.level), e.effect.name);
    let core = box_width(&cause) + 80.0 + box_width(&effect);
    let width = 40.0 + core.max(row_width(&e.confounders)).max(row_width(&e.mediators));
    let cx = width / 2.0;
    let mut y = 20.0;
    let conf_y = y;
    if !e.confounders.is_empty() {
        y += BOX_H + 40.0;
    }
    let core_y = y;
    y += BOX_H + 40.0;
    let med_y = y;
    if !e.mediators.is_empty() {
        y += BOX_H + 20.0;
    }
    let height = y;
    let mut svg = Svg::open(width, height, theme);
    item_row(&mut svg, "confounder", &e.confounders, cx, conf_y, &theme.red, theme);
    let x0 = cx - core / 2.0;
    let wc = node(&mut svg, "cause", x0, core_y, &theme.node, &theme.text, &cause, None);
    let x1 = x0 + wc + 80.0;
    node(&mut svg, "effect", x1, core_y, &theme.node, &theme.text, &effect, None);
    let ay = core_y + BOX_H / 2.0;
    let _ = writeln!(
        svg.out,
        "<line x1=\"{:.1}\" y1=\"{ay:.1}\" x2=\"{:.1}\" y2=\"{ay:.1}\" stroke=\"{}\" stroke-width=\"2.0\"/>",
        x0 + wc,
        x1 - 8.0,
        theme.text
    );
    let _ = writeln!(
        svg.out,
        "<polygon points=\"{:.1},{:.1} {:.1},{:.1} {:.1},{:.1}\" fill=\"{}\"/>",
        x1 - 8.0,
        ay - 5.0,
        x1,
        ay,
        x1 - 8.0,
        ay + 5.0,
        theme.text
    );
    item_row(&mut svg, "mediator", &e.mediators, cx, med_y, &theme.green, theme);
    svg.finish()
}

fn latent(l: &LatentChartData, theme: &Theme) -> String {
    let widest = row_width(&l.positives)
        .max(row_width(&l.negatives))
        .max(row_width(&l.categorical))
        .max(box_width(&l.target));
    let width = 40.0 + widest;
    let cx = width / 2.0;
    let mut y = 20.0;
    let pos_y = y;
    if !l.positives.is_empty() {
        y += BOX_H + 40.0;
    }
    let target_y = y;
    y += BOX_H + 40.0;
    let neg_y = y;
    if !l.negatives.is_empty() {
        y += BOX_H + 20.0;
    }
    let cat_y = y;
    if !l.categorical.is_empty() {
        y += BOX_H + 20.0;
    }
    let mut svg = Svg::open(width, y, theme);
    item_row(&mut svg, "latent positive", &l.positives, cx, pos_y, &theme.blue, theme);
    let tx = cx - box_width(&l.target) / 2.0;
    node(&mut svg, "target", tx, target_y, &theme.node, &theme.text, &l.target, None);
    item_row(&mut svg, "latent negative", &l.negatives, cx, neg_y, &theme.yellow, theme);
    let greys = [theme.grey.clone(), theme.grey.clone(), theme.grey.clone()];
    item_row(&mut svg, "latent categorical", &l.categorical, cx, cat_y, &greys, theme);
    svg.finish()
}
