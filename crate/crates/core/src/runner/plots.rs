//! SVG plots with the CSV data behind them.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{write_file, RunError, RunRecord};
use crate::stats::median_iqr;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        let span = (self.x.1 - self.x.0).max(f64::EPSILON);
        MARGIN + (x - self.x.0) / span * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        let span = (self.y.1 - self.y.0).max(f64::EPSILON);
        HEIGHT - MARGIN - (y - self.y.0) / span * (HEIGHT - 2.0 * MARGIN)
    }

    fn axes(&self, out: &mut String, title: &str, xlabel: &str, ylabel: &str) {
        let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
        let _ = writeln!(out, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(out, r#"<line x1="{l}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/>"#);
        let _ = writeln!(out, r#"<line x1="{l}" y1="{b}" x2="{l}" y2="{t}" stroke="black"/>"#);
        for i in 0..=4 {
            let fx = self.x.0 + (self.x.1 - self.x.0) * i as f64 / 4.0;
            let fy = self.y.0 + (self.y.1 - self.y.0) * i as f64 / 4.0;
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle">{}</text>"#,
                self.px(fx),
                b + 16.0,
                tick(fx)
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">{}</text>"#,
                l - 6.0,
                self.py(fy) + 4.0,
                tick(fy)
            );
        }
        let _ = writeln!(out, r#"<text x="{}" y="24" font-size="15" text-anchor="middle">{}</text>"#, WIDTH / 2.0, escape(title));
        let _ = writeln!(out, r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 18.0, escape(xlabel));
        let _ = writeln!(
            out,
            r#"<text x="16" y="{}" font-size="12" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(ylabel)
        );
    }
}

fn tick(v: f64) -> String {
    if v.abs() >= 10.0 || v == v.trunc() {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn svg_open() -> String {
    format!(r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#) + "\n"
}

fn legend(out: &mut String, names: &[&str]) {
    for (i, name) in names.iter().enumerate() {
        let y = MARGIN + 14.0 * i as f64;
        let colour = PALETTE[i % PALETTE.len()];
        let _ = writeln!(out, r#"<rect x="{}" y="{}" width="10" height="10" fill="{colour}"/>"#, WIDTH - MARGIN - 110.0, y - 9.0);
        let _ = writeln!(out, r#"<text x="{}" y="{y}" font-size="11">{}</text>"#, WIDTH - MARGIN - 95.0, escape(name));
    }
}

/// Files written by [`emit_plots`].
#[derive(Debug, Clone, PartialEq)]
pub struct PlotFiles {
    pub front_svg: PathBuf,
    pub front_csv: PathBuf,
    pub hypervolume_svg: PathBuf,
    pub hypervolume_csv: PathBuf,
    pub hypervolume_median_csv: PathBuf,
}

/// Scatter of final objective pairs `(f1, f2)` and median hypervolume per generation, per configuration.
pub fn emit_plots(records: &[RunRecord], dir: &Path) -> Result<PlotFiles, RunError> {
    if records.is_empty() {
        return Err(RunError::Config("no run records to plot".into()));
    }
    let mut groups: BTreeMap<&str, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.name.as_str()).or_default().push(r);
    }
    let names: Vec<&str> = groups.keys().copied().collect();

    let mut front_csv = String::from("name,seed,f1,f2\n");
    let mut svg = svg_open();
    let frame = Frame { x: (0.0, 1.0), y: (0.0, 1.0) };
    frame.axes(&mut svg, "Final solution sets", "objective 1", "objective 2");
    for (gi, (name, runs)) in groups.iter().enumerate() {
        let colour = PALETTE[gi % PALETTE.len()];
        for r in runs {
            for f in &r.final_front {
                let (f1, f2) = (f[0], f.get(1).copied().unwrap_or(0.0));
                let _ = writeln!(front_csv, "{name},{},{f1:?},{f2:?}", r.seed);
                let _ = writeln!(
                    svg,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{colour}" fill-opacity="0.6"/>"#,
                    frame.px(f1),
                    frame.py(f2)
                );
            }
        }
    }
    legend(&mut svg, &names);
    svg.push_str("</svg>\n");

    let mut hv_csv = String::from("name,seed,generation,hypervolume\n");
    let mut median_csv = String::from("name,generation,median_hypervolume\n");
    let mut medians: Vec<(&str, Vec<(usize, f64)>)> = Vec::new();
    let mut max_gen = 1usize;
    let mut max_hv = f64::EPSILON;
    for (name, runs) in &groups {
        for r in runs {
            for row in &r.rows {
                let _ = writeln!(hv_csv, "{name},{},{},{:?}", r.seed, row.generation, row.hypervolume);
            }
        }
        let mut by_gen: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for r in runs {
            for row in &r.rows {
                by_gen.entry(row.generation).or_default().push(row.hypervolume);
            }
        }
        let mut line = Vec::new();
        for (g, v) in by_gen {
            let m = median_iqr(&v)?.median;
            let _ = writeln!(median_csv, "{name},{g},{m:?}");
            max_gen = max_gen.max(g);
            max_hv = max_hv.max(m);
            line.push((g, m));
        }
        medians.push((name, line));
    }
    let mut hv_svg = svg_open();
    let frame = Frame { x: (0.0, max_gen as f64), y: (0.0, max_hv * 1.05) };
    frame.axes(&mut hv_svg, "Median hypervolume", "generation", "hypervolume");
    for (gi, (_, line)) in medians.iter().enumerate() {
        let colour = PALETTE[gi % PALETTE.len()];
        let points: Vec<String> = line
            .iter()
            .map(|(g, m)| format!("{:.2},{:.2}", frame.px(*g as f64), frame.py(*m)))
            .collect();
        let _ = writeln!(hv_svg, r#"<polyline fill="none" stroke="{colour}" stroke-width="2" points="{}"/>"#, points.join(" "));
    }
    legend(&mut hv_svg, &names);
    hv_svg.push_str("</svg>\n");

    let files = PlotFiles {
        front_svg: dir.join("front.svg"),
        front_csv: dir.join("front.csv"),
        hypervolume_svg: dir.join("hypervolume.svg"),
        hypervolume_csv: dir.join("hypervolume.csv"),
        hypervolume_median_csv: dir.join("hypervolume_median.csv"),
    };
    write_file(&files.front_svg, svg)?;
    write_file(&files.front_csv, front_csv)?;
    write_file(&files.hypervolume_svg, hv_svg)?;
    write_file(&files.hypervolume_csv, hv_csv)?;
    write_file(&files.hypervolume_median_csv, median_csv)?;
    Ok(files)
}
