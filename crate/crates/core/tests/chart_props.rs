use causeway_core::charts::{
    build_debate, dominance, render_svg, sign_pattern, Chart, ColorClass, DebateChartData,
    RatedPrompt, Side, Suggestion, Theme,
};
use causeway_core::prompts::{debate_battery, Level};
use proptest::prelude::*;

/// Score 0 stands for a missing rating.
fn chart(a: &str, b: &str, scores: &[u8]) -> DebateChartData {
    let rated: Vec<RatedPrompt> = debate_battery(a, b, "d")
        .unwrap()
        .into_iter()
        .zip(scores)
        .map(|(spec, &s)| {
            let text = format!("Rating: {s}\nreason");
            RatedPrompt::from_response(spec, None, (s > 0).then_some(text.as_str()))
        })
        .collect();
    build_debate(&rated)
}

fn scores() -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..=4, 10)
}

fn flip(s: Suggestion) -> Suggestion {
    match s {
        Suggestion::LeftToRight => Suggestion::RightToLeft,
        Suggestion::RightToLeft => Suggestion::LeftToRight,
        Suggestion::Inconclusive => Suggestion::Inconclusive,
    }
}

proptest! {
    #[test]
    fn color_classes_follow_cause_level(s in scores()) {
        let d = chart("A", "B", &s);
        prop_assert_eq!(d.rows.len(), 5);
        for (i, row) in d.rows.iter().enumerate() {
            for (bar, score) in [(&row.left, s[i]), (&row.right, s[i + 5])] {
                let want = match row.cause_level {
                    Level::General => ColorClass::Grey,
                    Level::Higher => ColorClass::Magenta,
                    Level::Lower => ColorClass::Skyblue,
                };
                prop_assert_eq!(bar.color, want);
                prop_assert_eq!(bar.score, score);
                prop_assert_eq!(bar.available, score > 0);
            }
        }
        prop_assert_eq!(d.rows[0].left.color, ColorClass::Grey);
    }

    #[test]
    fn dominance_is_antisymmetric(s in scores()) {
        let d = chart("A", "B", &s);
        let swapped: Vec<u8> = s[5..].iter().chain(&s[..5]).copied().collect();
        let e = chart("B", "A", &swapped);
        let (v, w) = (dominance(&d), dominance(&e));
        prop_assert_eq!(w.suggestion, flip(v.suggestion));
        prop_assert_eq!(w.confounder_likely, v.confounder_likely);
    }

    #[test]
    fn sign_pattern_ignores_uniform_shifts(base in prop::collection::vec(1u8..=4, 4), k in 0u8..=3) {
        prop_assume!(base.iter().all(|&b| b + k <= 4));
        let row = |v: &[u8]| -> Vec<u8> {
            let mut s = vec![2, v[0], v[1], v[2], v[3]];
            s.extend([2, 2, 2, 2, 2]);
            s
        };
        let shifted: Vec<u8> = base.iter().map(|b| b + k).collect();
        let (d, e) = (chart("A", "B", &row(&base)), chart("A", "B", &row(&shifted)));
        prop_assert_eq!(sign_pattern(&d, Side::Left), sign_pattern(&e, Side::Left));
    }

    #[test]
    fn rendering_is_pure(s in scores()) {
        let c = Chart::Debate(chart("A & B", "<C>", &s));
        let theme = Theme::default();
        let svg = render_svg(&c, &theme);
        prop_assert_eq!(&svg, &render_svg(&c.clone(), &theme.clone()));
        let missing = s.iter().filter(|&&x| x == 0).count();
        prop_assert_eq!(svg.matches("url(#hatch)").count(), missing);
    }
}

#[test]
fn equal_low_ratings_suggest_nothing() {
    let d = chart("A", "B", &[1; 10]);
    assert!(d.rows.iter().all(|r| r.left.score == 1 && r.right.score == 1));
    assert_eq!(dominance(&d).suggestion, Suggestion::Inconclusive);
}

#[test]
fn level_rows_mirror_sign_readings() {
    use causeway_core::charts::SignPattern;
    let at = |rows: [u8; 4]| {
        let mut s = vec![3];
        s.extend(rows);
        s.extend([3, 2, 2, 2, 2]);
        sign_pattern(&chart("A", "B", &s), Side::Left)
    };
    assert_eq!(at([4, 1, 1, 4]), SignPattern::Positive);
    assert_eq!(at([1, 4, 4, 1]), SignPattern::Negative);
    assert_eq!(at([2, 2, 2, 2]), SignPattern::Indeterminate);
}
