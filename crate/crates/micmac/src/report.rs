//! Report emission: summary and curve CSVs, per-fold rankings, a Tukey table
//! and an accuracy-vs-k SVG chart written by direct markup emission.

use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::experiment::ExperimentReport;
use crate::stats::TukeyPair;

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

/// Writes report.csv, one curve CSV per scheme, per-fold ranking CSVs and
/// the accuracy-vs-k SVG. Deterministic in the report contents, so re-runs
/// over existing files are byte-identical.
pub fn emit_report<P: AsRef<Path>>(r: &ExperimentReport, out_dir: P) -> Result<Vec<PathBuf>> {
    if r.schemes.is_empty() || r.schemes.iter().any(|s| s.curve.is_empty()) {
        return Err(Error::NoResults);
    }
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();

    let summary = out_dir.join("report.csv");
    {
        let mut w = BufWriter::new(std::fs::File::create(&summary)?);
        writeln!(w, "scheme,best_acc,best_acc_std,best_k,top12_acc,top12_std,approximate")?;
        for s in &r.schemes {
            writeln!(
                w,
                "{},{:.6},{:.6},{},{:.6},{:.6},{}",
                s.name, s.best_acc, s.best_std, s.best_k, s.top12_acc, s.top12_std, s.approximate
            )?;
        }
        w.flush()?;
    }
    written.push(summary);

    for s in &r.schemes {
        let path = out_dir.join(format!("curve_{}.csv", sanitize(&s.name)));
        let mut w = BufWriter::new(std::fs::File::create(&path)?);
        writeln!(w, "k,mean_acc,std_acc")?;
        for p in &s.curve {
            writeln!(w, "{},{:.6},{:.6}", p.k, p.mean, p.std)?;
        }
        w.flush()?;
        written.push(path);

        for (i, ranking) in s.rankings.iter().enumerate() {
            let path = out_dir.join(format!("ranking_{}_fold{}.csv", sanitize(&s.name), i));
            let mut w = BufWriter::new(std::fs::File::create(&path)?);
            writeln!(w, "rank,feature_name")?;
            for (rank, name) in ranking.iter().enumerate() {
                writeln!(w, "{},{}", rank + 1, name)?;
            }
            w.flush()?;
            written.push(path);
        }
    }

    let svg = out_dir.join("accuracy_vs_k.svg");
    std::fs::write(&svg, render_svg(r))?;
    written.push(svg);
    Ok(written)
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

/// 800x500 line chart, one polyline per scheme, legend labels equal to the
/// scheme names.
fn render_svg(r: &ExperimentReport) -> String {
    let (w, h) = (800.0, 500.0);
    let margin = (60.0, 20.0, 40.0, 50.0); // left, right, top, bottom
    let plot_w = w - margin.0 - margin.1;
    let plot_h = h - margin.2 - margin.3;
    let k_max = r
        .schemes
        .iter()
        .flat_map(|s| s.curve.iter().map(|p| p.k))
        .max()
        .unwrap_or(1) as f64;
    let x = |k: f64| margin.0 + (k - 1.0) / (k_max - 1.0).max(1.0) * plot_w;
    let y = |acc: f64| margin.2 + (1.0 - acc) * plot_h;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {w} {h}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    // axes
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        margin.0,
        margin.2,
        margin.0,
        h - margin.3
    ));
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        margin.0,
        h - margin.3,
        w - margin.1,
        h - margin.3
    ));
    for tick in 0..=5 {
        let acc = tick as f64 / 5.0;
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"end\">{:.1}</text>\n",
            margin.0 - 6.0,
            y(acc) + 4.0,
            acc
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\">number of features selected</text>\n",
        margin.0 + plot_w / 2.0,
        h - 8.0
    ));
    svg.push_str(&format!(
        "<text x=\"14\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 14 {})\">subject accuracy</text>\n",
        margin.2 + plot_h / 2.0,
        margin.2 + plot_h / 2.0
    ));

    for (i, s) in r.schemes.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = s
            .curve
            .iter()
            .map(|p| format!("{:.2},{:.2}", x(p.k as f64), y(p.mean)))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            color,
            points.join(" ")
        ));
        let ly = margin.2 + 16.0 * i as f64 + 12.0;
        svg.push_str(&format!(
            "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"10\" height=\"10\" fill=\"{}\"/>\n",
            w - margin.1 - 180.0,
            ly - 9.0,
            color
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\">{}</text>\n",
            w - margin.1 - 165.0,
            ly,
            s.name
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Writes `tukey.csv` with columns `group_a,group_b,q,p`.
pub fn emit_tukey<P: AsRef<Path>>(pairs: &[TukeyPair], path: P) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "group_a,group_b,q,p")?;
    for pair in pairs {
        writeln!(w, "{},{},{:.6},{:.6}", pair.group_a, pair.group_b, pair.q, pair.p)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cv::{Confusion, CurvePoint};
    use crate::experiment::SchemeResult;

    fn fake_report(n_schemes: usize) -> ExperimentReport {
        let schemes = (0..n_schemes)
            .map(|i| SchemeResult {
                name: format!("scheme{i}"),
                approximate: false,
                curve: (1..=5)
                    .map(|k| CurvePoint { k, mean: 0.5 + 0.05 * k as f64, std: 0.01 })
                    .collect(),
                best_k: 5,
                best_acc: 0.75,
                best_std: 0.01,
                top12_k: 5,
                top12_acc: 0.75,
                top12_std: 0.01,
                per_experiment_best: vec![0.74, 0.76],
                per_experiment_top12: vec![0.74, 0.76],
                rankings: vec![vec!["f1".into(), "f2".into()]],
                confusion: Confusion::default(),
            })
            .collect();
        ExperimentReport { schemes, n_repeats: 2, base_seed: 0, runtime_secs: 0.0 }
    }

    #[test]
    fn eight_schemes_emit_eight_curves_and_summary() {
        let dir = tempfile::tempdir().unwrap();
        let written = emit_report(&fake_report(8), dir.path()).unwrap();
        let curves = written
            .iter()
            .filter(|p| p.file_name().unwrap().to_string_lossy().starts_with("curve_"))
            .count();
        assert_eq!(curves, 8);
        assert!(dir.path().join("report.csv").exists());
        let svg = std::fs::read_to_string(dir.path().join("accuracy_vs_k.svg")).unwrap();
        assert!(svg.contains("viewBox=\"0 0 800 500\""));
        assert_eq!(svg.matches("<polyline").count(), 8);
        assert!(svg.contains("scheme7"));
    }

    #[test]
    fn re_emit_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let r = fake_report(2);
        emit_report(&r, dir.path()).unwrap();
        let before = std::fs::read(dir.path().join("report.csv")).unwrap();
        let svg_before = std::fs::read(dir.path().join("accuracy_vs_k.svg")).unwrap();
        emit_report(&r, dir.path()).unwrap();
        assert_eq!(before, std::fs::read(dir.path().join("report.csv")).unwrap());
        assert_eq!(
            svg_before,
            std::fs::read(dir.path().join("accuracy_vs_k.svg")).unwrap()
        );
    }

    #[test]
    fn empty_curve_is_an_error() {
        let mut r = fake_report(1);
        r.schemes[0].curve.clear();
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(emit_report(&r, dir.path()), Err(Error::NoResults)));
    }
}
