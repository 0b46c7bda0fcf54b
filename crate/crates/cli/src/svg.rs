//! Fixed-style SVG charts. Output depends only on the data, so charts diff
//! cleanly between runs.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const PANEL_HEIGHT: f64 = 220.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const GAP: f64 = 50.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

pub struct Panel {
    pub y_label: String,
    pub series: Vec<Series>,
}

/// A labelled vertical rule at an x position.
pub struct Marker {
    pub x: f64,
    pub label: String,
}

/// Five-number summary drawn as one box.
pub struct BoxStats {
    pub label: String,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(1e-3..1e5).contains(&a) {
        return format!("{v:.2e}");
    }
    let s = format!("{v:.4}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.05 };
        return (lo - pad, hi + pad);
    }
    let pad = (hi - lo) * 0.05;
    (lo - pad, hi + pad)
}

struct Frame {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    xr: (f64, f64),
    yr: (f64, f64),
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        self.x0 + (v - self.xr.0) / (self.xr.1 - self.xr.0) * self.w
    }

    fn y(&self, v: f64) -> f64 {
        self.y0 + self.h - (v - self.yr.0) / (self.yr.1 - self.yr.0) * self.h
    }

    fn axes(&self, out: &mut String, y_label: &str) {
        let (x0, y0, w, h) = (self.x0, self.y0, self.w, self.h);
        let _ = writeln!(
            out,
            r##"<rect x="{x0:.2}" y="{y0:.2}" width="{w:.2}" height="{h:.2}" fill="none" stroke="#444"/>"##
        );
        for i in 0..=4 {
            let v = self.yr.0 + (self.yr.1 - self.yr.0) * i as f64 / 4.0;
            let y = self.y(v);
            let _ = writeln!(
                out,
                r##"<line x1="{:.2}" y1="{y:.2}" x2="{x0:.2}" y2="{y:.2}" stroke="#444"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
                x0 - 4.0,
                x0 - 6.0,
                y + 4.0,
                tick(v)
            );
        }
        let _ = writeln!(
            out,
            r#"<text transform="translate({:.2},{:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
            x0 - 52.0,
            y0 + h / 2.0,
            esc(y_label)
        );
    }

    fn x_ticks(&self, out: &mut String, xs: &[f64]) {
        let bottom = self.y0 + self.h;
        for &v in xs {
            let x = self.x(v);
            let _ = writeln!(
                out,
                r##"<line x1="{x:.2}" y1="{bottom:.2}" x2="{x:.2}" y2="{:.2}" stroke="#444"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
                bottom + 4.0,
                bottom + 16.0,
                tick(v)
            );
        }
    }
}

fn header(out: &mut String, height: f64, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        out,
        r#"<rect width="{WIDTH}" height="{height}" fill="white"/><text x="{:.2}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        esc(title)
    );
}

/// Stacked line-chart panels sharing one x axis.
pub fn line_chart(title: &str, x_label: &str, panels: &[Panel], markers: &[Marker]) -> String {
    let n = panels.len().max(1) as f64;
    let height = TOP + n * PANEL_HEIGHT + (n - 1.0) * GAP + 50.0;
    let mut out = String::new();
    header(&mut out, height, title);

    let xs: Vec<f64> = {
        let mut xs: Vec<f64> = panels
            .iter()
            .flat_map(|p| p.series.iter().flat_map(|s| s.points.iter().map(|q| q.0)))
            .filter(|v| v.is_finite())
            .collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        xs
    };
    let xr = extent(xs.iter().copied());
    let ticks: Vec<f64> = if xs.len() <= 12 {
        xs.clone()
    } else {
        (0..=5)
            .map(|i| xr.0 + (xr.1 - xr.0) * i as f64 / 5.0)
            .collect()
    };

    for (pi, panel) in panels.iter().enumerate() {
        let frame = Frame {
            x0: LEFT,
            y0: TOP + pi as f64 * (PANEL_HEIGHT + GAP),
            w: WIDTH - LEFT - RIGHT,
            h: PANEL_HEIGHT,
            xr,
            yr: extent(
                panel
                    .series
                    .iter()
                    .flat_map(|s| s.points.iter().map(|p| p.1)),
            ),
        };
        frame.axes(&mut out, &panel.y_label);
        frame.x_ticks(&mut out, &ticks);
        for m in markers {
            let x = frame.x(m.x);
            let _ = writeln!(
                out,
                r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#888" stroke-dasharray="4 3"/><text x="{:.2}" y="{:.2}" fill="#555">{}</text>"##,
                frame.y0,
                frame.y0 + frame.h,
                x + 3.0,
                frame.y0 + 12.0,
                esc(&m.label)
            );
        }
        for (si, s) in panel.series.iter().enumerate() {
            let color = PALETTE[si % PALETTE.len()];
            let pts: Vec<String> = s
                .points
                .iter()
                .filter(|p| p.0.is_finite() && p.1.is_finite())
                .map(|&(x, y)| format!("{:.2},{:.2}", frame.x(x), frame.y(y)))
                .collect();
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                pts.join(" ")
            );
            for p in &pts {
                let (cx, cy) = p.split_once(',').expect("formatted as x,y");
                let _ = writeln!(
                    out,
                    r#"<circle cx="{cx}" cy="{cy}" r="2.5" fill="{color}"/>"#
                );
            }
            let ly = frame.y0 + 14.0 + si as f64 * 16.0;
            let lx = frame.x0 + frame.w + 12.0;
            let _ = writeln!(
                out,
                r#"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{ly:.2}">{}</text>"#,
                ly - 4.0,
                lx + 16.0,
                ly - 4.0,
                lx + 20.0,
                esc(&s.name)
            );
        }
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + (WIDTH - LEFT - RIGHT) / 2.0,
        height - 12.0,
        esc(x_label)
    );
    out.push_str("</svg>\n");
    out
}

/// One box per group, left to right in the given order.
pub fn box_chart(title: &str, y_label: &str, boxes: &[BoxStats]) -> String {
    let height = TOP + PANEL_HEIGHT + 90.0;
    let mut out = String::new();
    header(&mut out, height, title);
    let n = boxes.len().max(1) as f64;
    let frame = Frame {
        x0: LEFT,
        y0: TOP,
        w: WIDTH - LEFT - RIGHT,
        h: PANEL_HEIGHT,
        xr: (0.0, n),
        yr: extent(boxes.iter().flat_map(|b| [b.min, b.max])),
    };
    frame.axes(&mut out, y_label);
    let slot = frame.w / n;
    for (i, b) in boxes.iter().enumerate() {
        let cx = frame.x(i as f64 + 0.5);
        let half = (slot * 0.3).min(30.0);
        let (ymin, yq1, ymed, yq3, ymax) = (
            frame.y(b.min),
            frame.y(b.q1),
            frame.y(b.median),
            frame.y(b.q3),
            frame.y(b.max),
        );
        let color = PALETTE[0];
        let _ = writeln!(
            out,
            r##"<line x1="{cx:.2}" y1="{ymax:.2}" x2="{cx:.2}" y2="{ymin:.2}" stroke="#444"/><rect x="{:.2}" y="{yq3:.2}" width="{:.2}" height="{:.2}" fill="{color}" fill-opacity="0.35" stroke="{color}"/><line x1="{:.2}" y1="{ymed:.2}" x2="{:.2}" y2="{ymed:.2}" stroke="#000" stroke-width="2"/>"##,
            cx - half,
            2.0 * half,
            (yq1 - yq3).max(0.0),
            cx - half,
            cx + half,
        );
        let ty = frame.y0 + frame.h + 14.0;
        let _ = writeln!(
            out,
            r#"<text transform="translate({cx:.2},{ty:.2}) rotate(30)" text-anchor="start">{}</text>"#,
            esc(&b.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<Panel> {
        vec![Panel {
            y_label: "mean".into(),
            series: vec![Series {
                name: "train <split>".into(),
                points: vec![(0.0, 1.0), (1.0, 0.5), (2.0, 0.75)],
            }],
        }]
    }

    #[test]
    fn charts_are_deterministic_and_escaped() {
        let markers = [Marker {
            x: 1.0,
            label: "min".into(),
        }];
        let a = line_chart("t", "step", &sample(), &markers);
        let b = line_chart("t", "step", &sample(), &markers);
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.ends_with("</svg>\n"));
        assert!(a.contains("train &lt;split&gt;"));
        assert_eq!(a.matches("<circle").count(), 3);
    }

    #[test]
    fn constant_data_and_boxes() {
        let panels = vec![Panel {
            y_label: "y".into(),
            series: vec![Series {
                name: "flat".into(),
                points: vec![(1.0, 2.0), (2.0, 2.0)],
            }],
        }];
        let s = line_chart("flat", "x", &panels, &[]);
        assert!(!s.contains("NaN"));
        let b = box_chart(
            "boxes",
            "mean",
            &[BoxStats {
                label: "N=1000".into(),
                min: 1.0,
                q1: 1.5,
                median: 2.0,
                q3: 2.5,
                max: 3.0,
            }],
        );
        assert!(b.contains("N=1000") && !b.contains("NaN"));
    }

    #[test]
    fn ticks() {
        assert_eq!(tick(0.0), "0");
        assert_eq!(tick(2.5), "2.5");
        assert_eq!(tick(0.001), "0.001");
        assert_eq!(tick(1e-5), "1.00e-5");
    }
}
