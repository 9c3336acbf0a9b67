//! Two-panel control chart: shape CUSUM on top, color CUSUM below, each
//! with its control limit and alarm markers.

use std::fmt::Write as _;

use smac_core::monitoring::{MonitoringModel, MonitoringReport, Signal};

const WIDTH: f64 = 720.0;
const PANEL: f64 = 240.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 16.0;
const MARGIN_TOP: f64 = 28.0;
const GAP: f64 = 48.0;

struct Panel<'a> {
    title: &'a str,
    values: Vec<f64>,
    limit: f64,
    alarms: Vec<bool>,
}

fn draw_panel(s: &mut String, p: &Panel, top: f64) {
    let n = p.values.len().max(1);
    let ymax = p.values.iter().copied().fold(p.limit, f64::max) * 1.1;
    let ymax = if ymax > 0.0 { ymax } else { 1.0 };
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let x = |t: usize| MARGIN_LEFT + if n == 1 { plot_w / 2.0 } else { plot_w * (t as f64) / ((n - 1) as f64) };
    let y = |v: f64| top + PANEL * (1.0 - v / ymax);

    let _ = writeln!(s, r##"<text x="{MARGIN_LEFT}" y="{:.1}" font-size="14">{}</text>"##, top - 8.0, p.title);
    let _ = writeln!(
        s,
        r##"<rect x="{MARGIN_LEFT}" y="{top:.1}" width="{plot_w:.1}" height="{PANEL}" fill="none" stroke="#444"/>"##
    );
    for frac in [0.0, 0.5, 1.0] {
        let v = ymax * frac;
        let _ = writeln!(
            s,
            r##"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">{v:.2}</text>"##,
            MARGIN_LEFT - 6.0,
            y(v) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r##"<line x1="{MARGIN_LEFT}" y1="{ly:.2}" x2="{:.1}" y2="{ly:.2}" stroke="#c00" stroke-dasharray="6,4"/>"##,
        WIDTH - MARGIN_RIGHT,
        ly = y(p.limit)
    );
    let points: Vec<String> = p.values.iter().enumerate().map(|(t, v)| format!("{:.2},{:.2}", x(t), y(*v))).collect();
    let _ = writeln!(s, r##"<polyline fill="none" stroke="#036" stroke-width="1.5" points="{}"/>"##, points.join(" "));
    for (t, (v, a)) in p.values.iter().zip(&p.alarms).enumerate() {
        if *a {
            let _ = writeln!(s, r##"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="#c00"/>"##, x(t), y(*v));
        }
    }
}

pub fn control_chart(model: &MonitoringModel, report: &MonitoringReport) -> String {
    let hit = |want: Signal| -> Vec<bool> {
        report.steps.iter().map(|r| r.signal.is_some_and(|g| g == want || g == Signal::Both)).collect()
    };
    let panels = [
        Panel {
            title: "shape CUSUM",
            values: report.steps.iter().map(|r| r.cs).collect(),
            limit: model.shape_chart.h,
            alarms: hit(Signal::Shape),
        },
        Panel {
            title: "color CUSUM",
            values: report.steps.iter().map(|r| r.cc).collect(),
            limit: model.color_chart.h,
            alarms: hit(Signal::Color),
        },
    ];
    let height = MARGIN_TOP + 2.0 * PANEL + GAP + 32.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif">"##
    );
    let _ = writeln!(s, r##"<rect width="100%" height="100%" fill="white"/>"##);
    for (i, p) in panels.iter().enumerate() {
        draw_panel(&mut s, p, MARGIN_TOP + i as f64 * (PANEL + GAP));
    }
    let _ = writeln!(
        s,
        r##"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">sample</text>"##,
        MARGIN_LEFT + (WIDTH - MARGIN_LEFT - MARGIN_RIGHT) / 2.0,
        height - 8.0
    );
    s.push_str("</svg>\n");
    s
}
