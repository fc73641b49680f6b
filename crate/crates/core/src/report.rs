//! SVG figures for score tables: a colored heatmap and per-feature-count line profiles.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::sweep::ScoreTable;

/// 24-bit color.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rgb(pub u8, pub u8, pub u8);

impl Rgb {
    /// Linear interpolation at `t` in `[0, 1]`, rounded per channel.
    pub fn lerp(self, other: Rgb, t: f64) -> Rgb {
        let t = t.clamp(0.0, 1.0);
        let mix = |a: u8, b: u8| (a as f64 + (b as f64 - a as f64) * t).round() as u8;
        Rgb(mix(self.0, other.0), mix(self.1, other.1), mix(self.2, other.2))
    }

    fn luminance(self) -> f64 {
        0.2126 * self.0 as f64 + 0.7152 * self.1 as f64 + 0.0722 * self.2 as f64
    }
}

impl fmt::Display for Rgb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{:02x}{:02x}{:02x}", self.0, self.1, self.2)
    }
}

impl FromStr for Rgb {
    type Err = Error;

    /// `#rrggbb`
    fn from_str(s: &str) -> Result<Self> {
        let hex = s.strip_prefix('#').unwrap_or(s);
        let bad = || Error::invalid(format!("color `{s}` is not #rrggbb"));
        if hex.len() != 6 || !hex.is_ascii() {
            return Err(bad());
        }
        let channel = |i: usize| u8::from_str_radix(&hex[i..i + 2], 16).map_err(|_| bad());
        Ok(Rgb(channel(0)?, channel(2)?, channel(4)?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapSpec {
    pub low: Rgb,
    pub high: Rgb,
    /// Side of one cell in pixels.
    pub cell_size: u32,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
}

impl HeatmapSpec {
    /// Pale-to-dark blue ramp titled after the table.
    pub fn for_table(table: &ScoreTable) -> Self {
        Self {
            low: Rgb(0xf7, 0xfb, 0xff),
            high: Rgb(0x08, 0x30, 0x6b),
            cell_size: 56,
            title: format!("{} by {}", table.index, table.algorithm),
            x_label: "number of features".into(),
            y_label: "number of clusters".into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cell_size == 0 {
            return Err(Error::invalid("cell size must be positive"));
        }
        Ok(())
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

fn score_range(table: &ScoreTable) -> Result<(f64, f64)> {
    let mut range: Option<(f64, f64)> = None;
    for r in 0..table.clusters().len() {
        for c in 0..table.features().len() {
            if let Some(v) = table.score(r, c) {
                range = Some(match range {
                    None => (v, v),
                    Some((lo, hi)) => (lo.min(v), hi.max(v)),
                });
            }
        }
    }
    range.ok_or_else(|| Error::Degenerate(format!("every cell of {} is NA", table.name())))
}

/// Position of `v` in `[lo, hi]`; the midpoint when the range is a single value.
pub fn normalize(v: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
    } else {
        0.5
    }
}

/// One rectangle per cell, colored by min-max normalized score; `NA` cells are hatched gray.
pub fn render_heatmap(table: &ScoreTable, spec: &HeatmapSpec) -> Result<String> {
    spec.validate()?;
    let (lo, hi) = score_range(table)?;
    let cs = spec.cell_size as f64;
    let (left, top) = (90.0, 60.0);
    let n_cols = table.features().len();
    let n_rows = table.clusters().len();
    let width = left + cs * n_cols as f64 + 30.0;
    let height = top + cs * n_rows as f64 + 80.0;
    let font = (cs * 0.22).clamp(8.0, 14.0);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif">"#
    );
    svg.push_str(concat!(
        "<defs><pattern id=\"na-hatch\" patternUnits=\"userSpaceOnUse\" width=\"8\" height=\"8\">",
        "<rect width=\"8\" height=\"8\" fill=\"#d9d9d9\"/>",
        "<path d=\"M0,8 L8,0\" stroke=\"#8c8c8c\" stroke-width=\"1.5\"/>",
        "</pattern></defs>\n"
    ));
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="28" text-anchor="middle" font-size="16">{}</text>"#,
        width / 2.0,
        escape(&spec.title)
    );
    for (r, k) in table.clusters().iter().enumerate() {
        let y = top + cs * r as f64;
        let _ = writeln!(
            svg,
            r#"<text class="tick" x="{:.1}" y="{:.1}" text-anchor="end" font-size="{font:.0}">{k}</text>"#,
            left - 8.0,
            y + cs / 2.0 + font / 3.0
        );
        for (c, f) in table.features().iter().enumerate() {
            let x = left + cs * c as f64;
            match table.score(r, c) {
                Some(v) => {
                    let t = normalize(v, lo, hi);
                    let color = spec.low.lerp(spec.high, t);
                    let ink = if color.luminance() < 128.0 { "#ffffff" } else { "#000000" };
                    let _ = writeln!(
                        svg,
                        r#"<rect class="cell" data-clusters="{k}" data-features="{f}" data-score="{v:.4}" x="{x:.1}" y="{y:.1}" width="{cs:.1}" height="{cs:.1}" fill="{color}"/>"#
                    );
                    let _ = writeln!(
                        svg,
                        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="{font:.0}" fill="{ink}">{v:.4}</text>"#,
                        x + cs / 2.0,
                        y + cs / 2.0 + font / 3.0
                    );
                }
                None => {
                    let _ = writeln!(
                        svg,
                        r#"<rect class="cell na" data-clusters="{k}" data-features="{f}" x="{x:.1}" y="{y:.1}" width="{cs:.1}" height="{cs:.1}" fill="url(#na-hatch)"/>"#
                    );
                    let _ = writeln!(
                        svg,
                        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="{font:.0}">NA</text>"#,
                        x + cs / 2.0,
                        y + cs / 2.0 + font / 3.0
                    );
                }
            }
        }
    }
    let bottom = top + cs * n_rows as f64;
    for (c, f) in table.features().iter().enumerate() {
        let _ = writeln!(
            svg,
            r#"<text class="tick" x="{:.1}" y="{:.1}" text-anchor="middle" font-size="{font:.0}">{f}</text>"#,
            left + cs * (c as f64 + 0.5),
            bottom + 18.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="13">{}</text>"#,
        left + cs * n_cols as f64 / 2.0,
        bottom + 42.0,
        escape(&spec.x_label)
    );
    let mid_y = top + cs * n_rows as f64 / 2.0;
    let _ = writeln!(
        svg,
        r#"<text x="24" y="{mid_y:.1}" text-anchor="middle" font-size="13" transform="rotate(-90 24 {mid_y:.1})">{}</text>"#,
        escape(&spec.y_label)
    );
    let _ = writeln!(
        svg,
        r#"<rect class="legend" x="{left:.1}" y="{:.1}" width="14" height="14" fill="{}"/><text x="{:.1}" y="{:.1}" font-size="12">{lo:.4}</text>"#,
        bottom + 54.0,
        spec.low,
        left + 20.0,
        bottom + 66.0
    );
    let _ = writeln!(
        svg,
        r#"<rect class="legend" x="{:.1}" y="{:.1}" width="14" height="14" fill="{}"/><text x="{:.1}" y="{:.1}" font-size="12">{hi:.4}</text>"#,
        left + 90.0,
        bottom + 54.0,
        spec.high,
        left + 110.0,
        bottom + 66.0
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];
const DASHES: [&str; 3] = ["none", "6 3", "2 3"];

/// Score against cluster count, one line per feature count; `NA` cells break the line.
pub fn render_profiles(table: &ScoreTable) -> Result<String> {
    let (lo, hi) = score_range(table)?;
    let pad = if hi > lo { (hi - lo) * 0.08 } else { lo.abs().max(1.0) * 0.1 };
    let (y_lo, y_hi) = (lo - pad, hi + pad);
    let (left, top, plot_w, plot_h) = (70.0, 50.0, 520.0, 320.0);
    let legend_x = left + plot_w + 20.0;
    let width = legend_x + 120.0;
    let height = top + plot_h + 60.0;

    let clusters = table.clusters();
    let x_of = |r: usize| {
        if clusters.len() == 1 {
            left + plot_w / 2.0
        } else {
            left + plot_w * r as f64 / (clusters.len() - 1) as f64
        }
    };
    let y_of = |v: f64| top + plot_h * (1.0 - (v - y_lo) / (y_hi - y_lo));

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="28" text-anchor="middle" font-size="16">{} by {} against number of clusters</text>"#,
        left + plot_w / 2.0,
        table.index,
        table.algorithm
    );
    let _ = writeln!(
        svg,
        r##"<path class="axis" d="M{left:.1},{top:.1} L{left:.1},{:.1} L{:.1},{:.1}" fill="none" stroke="#000000"/>"##,
        top + plot_h,
        left + plot_w,
        top + plot_h
    );
    for (r, k) in clusters.iter().enumerate() {
        let _ = writeln!(
            svg,
            r#"<text class="tick" x="{:.1}" y="{:.1}" text-anchor="middle" font-size="11">{k}</text>"#,
            x_of(r),
            top + plot_h + 16.0
        );
    }
    for i in 0..=4 {
        let v = y_lo + (y_hi - y_lo) * i as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text class="tick" x="{:.1}" y="{:.1}" text-anchor="end" font-size="11">{v:.3}</text>"#,
            left - 6.0,
            y_of(v) + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="13">number of clusters</text>"#,
        left + plot_w / 2.0,
        top + plot_h + 40.0
    );
    let mid_y = top + plot_h / 2.0;
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{mid_y:.1}" text-anchor="middle" font-size="13" transform="rotate(-90 18 {mid_y:.1})">{}</text>"#,
        table.index
    );

    for (c, f) in table.features().iter().enumerate() {
        let color = PALETTE[c % PALETTE.len()];
        let dash = DASHES[(c / PALETTE.len()) % DASHES.len()];
        let mut d = String::new();
        let mut pen_down = false;
        let mut markers = String::new();
        for r in 0..clusters.len() {
            match table.score(r, c) {
                Some(v) => {
                    let (x, y) = (x_of(r), y_of(v));
                    let _ = write!(d, "{}{x:.2},{y:.2} ", if pen_down { 'L' } else { 'M' });
                    let _ = write!(
                        markers,
                        r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{color}"/>"#
                    );
                    pen_down = true;
                }
                None => pen_down = false,
            }
        }
        let _ = writeln!(
            svg,
            r#"<g class="profile" data-features="{f}"><path d="{}" fill="none" stroke="{color}" stroke-width="1.8" stroke-dasharray="{dash}"/>{markers}</g>"#,
            d.trim_end()
        );
        let ly = top + 16.0 * c as f64;
        let _ = writeln!(
            svg,
            r#"<g class="legend-entry"><line x1="{legend_x:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="1.8" stroke-dasharray="{dash}"/><text x="{:.1}" y="{:.1}" font-size="11">{f} features</text></g>"#,
            legend_x + 24.0,
            legend_x + 30.0,
            ly + 4.0
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::{Algorithm, IndexKind};

    fn table(rows: Vec<Vec<Option<f64>>>) -> ScoreTable {
        let clusters = (2..2 + rows.len()).collect();
        let features = (2..2 + rows[0].len()).collect();
        ScoreTable::from_scores(Algorithm::Som, IndexKind::Silhouette, clusters, features, rows).unwrap()
    }

    #[test]
    fn single_cell_is_midpoint() {
        let t = table(vec![vec![Some(0.3)]]);
        let spec = HeatmapSpec {
            low: Rgb(0, 0, 0),
            high: Rgb(200, 100, 50),
            ..HeatmapSpec::for_table(&t)
        };
        let svg = render_heatmap(&t, &spec).unwrap();
        assert_eq!(svg.matches(r#"class="cell""#).count(), 1);
        assert!(svg.contains(r##"fill="#643219""##), "{svg}");
    }

    #[test]
    fn heatmap_counts_and_na() {
        let mut rows: Vec<Vec<Option<f64>>> = (0..10).map(|r| (0..8).map(|c| Some((r + c) as f64)).collect()).collect();
        rows[2][3] = None;
        let t = table(rows);
        let svg = render_heatmap(&t, &HeatmapSpec::for_table(&t)).unwrap();
        assert_eq!(svg.matches("<rect class=\"cell").count(), 80);
        assert_eq!(svg.matches("class=\"cell na\"").count(), 1);
        assert_eq!(svg, render_heatmap(&t, &HeatmapSpec::for_table(&t)).unwrap());
    }

    #[test]
    fn all_na_is_an_error() {
        let t = table(vec![vec![None, None]]);
        assert!(render_heatmap(&t, &HeatmapSpec::for_table(&t)).is_err());
        assert!(render_profiles(&t).is_err());
    }

    #[test]
    fn profile_gap_at_na() {
        let t = table(vec![vec![Some(0.1)], vec![None], vec![Some(0.3)], vec![Some(0.2)]]);
        let svg = render_profiles(&t).unwrap();
        let d = svg.split("<path d=\"").nth(1).unwrap().split('"').next().unwrap();
        assert_eq!(d.matches('M').count(), 2);
        assert_eq!(d.matches('L').count(), 1);
    }

    #[test]
    fn colors_parse() {
        assert_eq!("#08306b".parse::<Rgb>().unwrap(), Rgb(8, 48, 107));
        assert_eq!(Rgb(8, 48, 107).to_string(), "#08306b");
        assert!("#0830".parse::<Rgb>().is_err());
        assert!("zz0000".parse::<Rgb>().is_err());
    }
}
