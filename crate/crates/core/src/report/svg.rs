//! Minimal hand-written SVG charts: line plots of per-ratio means and
//! heatmap grids.

use std::fmt::Write;

use super::{HeatmapGrid, RatioMeans, ReportBundle, StaticMeans};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 56.0;

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

struct Series {
    label: &'static str,
    pick: fn(&RatioMeans) -> Option<f64>,
    reference: Option<f64>,
}

/// One line plot per static metric and one for the similarity means.
pub(super) fn mean_plots(bundle: &ReportBundle) -> Vec<(String, String)> {
    let reference = bundle.reference_means.as_ref();
    let ref_of = |pick: fn(&StaticMeans) -> f64| reference.map(pick);
    let plots: [(&str, &str, Vec<Series>); 5] = [
        (
            "means_length_ratio",
            "Mean length ratio",
            vec![Series {
                label: "length_ratio",
                pick: |m| m.statics.as_ref().map(|s| s.length_ratio),
                reference: ref_of(|s| s.length_ratio),
            }],
        ),
        (
            "means_cyclomatic",
            "Mean cyclomatic complexity",
            vec![Series {
                label: "cc_avg",
                pick: |m| m.statics.as_ref().map(|s| s.cyclomatic_avg),
                reference: ref_of(|s| s.cyclomatic_avg),
            }],
        ),
        (
            "means_halstead_bugs",
            "Mean Halstead bugs",
            vec![Series {
                label: "halstead_bugs",
                pick: |m| m.statics.as_ref().map(|s| s.halstead_bugs),
                reference: ref_of(|s| s.halstead_bugs),
            }],
        ),
        (
            "means_halstead_effort",
            "Mean Halstead effort",
            vec![Series {
                label: "halstead_effort",
                pick: |m| m.statics.as_ref().map(|s| s.halstead_effort),
                reference: ref_of(|s| s.halstead_effort),
            }],
        ),
        (
            "means_similarity",
            "Mean similarity",
            vec![
                Series { label: "ro_whole", pick: |m| m.ro_whole, reference: None },
                Series { label: "jw_whole", pick: |m| m.jw_whole, reference: None },
                Series { label: "ro_fragment", pick: |m| m.ro_fragment, reference: None },
                Series { label: "jw_fragment", pick: |m| m.jw_fragment, reference: None },
            ],
        ),
    ];
    plots
        .into_iter()
        .map(|(name, title, series)| (name.to_string(), line_plot(title, &bundle.per_ratio_means, &series)))
        .collect()
}

const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e"];

fn line_plot(title: &str, means: &[RatioMeans], series: &[Series]) -> String {
    let mut out = String::new();
    header(&mut out, title);

    let mut values: Vec<f64> = series
        .iter()
        .flat_map(|s| means.iter().filter_map(s.pick).chain(s.reference))
        .filter(|v| v.is_finite())
        .collect();
    values.push(0.0);
    let max = values.iter().cloned().fold(f64::MIN, f64::max);
    let y_max = if max > 0.0 { max * 1.1 } else { 1.0 };

    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let x_at = |tenths: u8| MARGIN + (tenths as f64 - 1.0) / 8.0 * plot_w;
    let y_at = |v: f64| HEIGHT - MARGIN - v / y_max * plot_h;

    let _ = writeln!(
        out,
        r#"<path d="M{m:.1},{t:.1} V{b:.1} H{r:.1}" stroke="black" fill="none"/>"#,
        m = MARGIN,
        t = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
    for tenths in 1..=9u8 {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">0.{tenths}</text>"#,
            x_at(tenths),
            HEIGHT - MARGIN + 18.0
        );
    }
    for i in 0..=4 {
        let v = y_max * i as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.3}</text>"#,
            MARGIN - 6.0,
            y_at(v) + 4.0,
            v
        );
    }

    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let points: Vec<String> = means
            .iter()
            .filter_map(|m| (s.pick)(m).map(|v| format!("{:.1},{:.1}", x_at(m.ratio.tenths()), y_at(v))))
            .collect();
        if !points.is_empty() {
            let _ = writeln!(
                out,
                r#"<polyline points="{}" stroke="{color}" stroke-width="2" fill="none"/>"#,
                points.join(" ")
            );
        }
        if let Some(r) = s.reference {
            let _ = writeln!(
                out,
                r#"<line x1="{:.1}" x2="{:.1}" y1="{y:.1}" y2="{y:.1}" stroke="{color}" stroke-dasharray="6 4"/>"#,
                MARGIN,
                WIDTH - MARGIN,
                y = y_at(r)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" fill="{color}">{}</text>"#,
            MARGIN + 8.0,
            MARGIN + 14.0 * (i as f64 + 1.0),
            s.label
        );
    }
    out.push_str("</svg>\n");
    out
}

pub(super) fn heatmap(grid: &HeatmapGrid) -> String {
    let mut out = String::new();
    header(&mut out, &format!("{} ({})", grid.algorithm, grid.mode));
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let cell_w = plot_w / grid.counts.len() as f64;
    let cell_h = plot_h / grid.buckets as f64;
    let max = grid.counts.iter().flatten().copied().max().unwrap_or(0).max(1);

    for (col, column) in grid.counts.iter().enumerate() {
        for (bucket, &count) in column.iter().enumerate() {
            let shade = 255 - (count as f64 / max as f64 * 200.0).round() as u8;
            let x = MARGIN + col as f64 * cell_w;
            let y = HEIGHT - MARGIN - (bucket + 1) as f64 * cell_h;
            let _ = writeln!(
                out,
                r#"<rect x="{x:.1}" y="{y:.1}" width="{cell_w:.1}" height="{cell_h:.1}" fill="rgb({shade},{shade},255)" stroke="white"/>"#
            );
            if count > 0 {
                let _ = writeln!(
                    out,
                    r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="10">{count}</text>"#,
                    x + cell_w / 2.0,
                    y + cell_h / 2.0 + 3.0
                );
            }
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">0.{}</text>"#,
            MARGIN + (col as f64 + 0.5) * cell_w,
            HEIGHT - MARGIN + 18.0,
            col + 1
        );
    }
    for bucket in 0..=grid.buckets {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.2}</text>"#,
            MARGIN - 6.0,
            HEIGHT - MARGIN - bucket as f64 * cell_h + 4.0,
            bucket as f64 / grid.buckets as f64
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::Algorithm;
    use crate::simetrics::ComparisonMode;

    #[test]
    fn heatmap_is_well_formed() {
        let mut counts = vec![vec![0u64; 10]; 9];
        counts[0][9] = 3;
        let grid = HeatmapGrid {
            algorithm: Algorithm::Hamming,
            mode: ComparisonMode::WholeFile,
            buckets: 10,
            counts,
        };
        let svg = heatmap(&grid);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<rect x=").count(), 90);
        assert!(svg.contains("rgb(55,55,255)"));
    }

    #[test]
    fn escapes_titles() {
        let mut out = String::new();
        header(&mut out, "a<b & c");
        assert!(out.contains("a&lt;b &amp; c"));
    }
}
