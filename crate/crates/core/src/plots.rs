//! Plot data for a finished run: cluster mean curves, eigenfunctions,
//! the weekday/weekend membership heatmap and the gap curve, as CSV tables
//! with minimal SVG line charts alongside.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate, Weekday};

use crate::error::Result;
use crate::features::VARIABLE_NAMES;
use crate::ingest::CurveMatrix;
use crate::pipeline::{write_gap, PipelineRun};
use crate::smoothing::epoch_grid;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlotFiles {
    pub written: Vec<PathBuf>,
    pub notices: Vec<String>,
}

/// A polyline chart with axes and a legend. `series` share the x values.
pub fn line_chart(title: &str, x: &[f64], series: &[(String, Vec<f64>)]) -> String {
    let (w, h, pad) = (720.0, 360.0, 48.0);
    let x_lo = x.first().copied().unwrap_or(0.0);
    let x_hi = x.last().copied().unwrap_or(1.0);
    let mut y_lo = f64::INFINITY;
    let mut y_hi = f64::NEG_INFINITY;
    for (_, ys) in series {
        for &y in ys {
            y_lo = y_lo.min(y);
            y_hi = y_hi.max(y);
        }
    }
    if !y_lo.is_finite() {
        (y_lo, y_hi) = (0.0, 1.0);
    }
    if y_hi <= y_lo {
        y_hi = y_lo + 1.0;
    }
    let sx = |v: f64| pad + (v - x_lo) / (x_hi - x_lo).max(f64::MIN_POSITIVE) * (w - 2.0 * pad);
    let sy = |v: f64| h - pad - (v - y_lo) / (y_hi - y_lo) * (h - 2.0 * pad);

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{pad}" y="24" font-family="sans-serif" font-size="14">{}</text>"#, escape(title));
    let _ = writeln!(
        svg,
        r#"<path d="M{pad} {top} V{bottom} H{right}" stroke="black" fill="none"/>"#,
        top = pad,
        bottom = h - pad,
        right = w - pad
    );
    for (v, anchor_y) in [(y_lo, h - pad), (y_hi, pad)] {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{anchor_y}" font-family="sans-serif" font-size="10" text-anchor="end">{}</text>"#,
            pad - 4.0,
            short(v)
        );
    }
    for (v, anchor_x) in [(x_lo, pad), (x_hi, w - pad)] {
        let _ = writeln!(
            svg,
            r#"<text x="{anchor_x}" y="{}" font-family="sans-serif" font-size="10" text-anchor="middle">{}</text>"#,
            h - pad + 14.0,
            short(v)
        );
    }
    for (i, (name, ys)) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let mut points = String::new();
        for (&xv, &yv) in x.iter().zip(ys) {
            let _ = write!(points, "{:.2},{:.2} ", sx(xv), sy(yv));
        }
        let _ = writeln!(svg, r#"<polyline points="{}" stroke="{colour}" fill="none" stroke-width="1.2"/>"#, points.trim_end());
        let ly = pad + 14.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{ly}" font-family="sans-serif" font-size="10" fill="{colour}">{}</text>"#,
            w - pad + 4.0,
            escape(name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn short(v: f64) -> String {
    if v.abs() >= 1000.0 || v == v.trunc() {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn write_series_csv(path: &Path, x_name: &str, x: &[f64], series: &[(String, Vec<f64>)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(std::fs::File::create(path)?);
    let mut header = vec![x_name.to_string()];
    header.extend(series.iter().map(|s| s.0.clone()));
    w.write_record(&header)?;
    for (j, xv) in x.iter().enumerate() {
        let mut rec = vec![xv.to_string()];
        rec.extend(series.iter().map(|s| s.1[j].to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Calendar date carried by a day id: the whole id, or its last ten
/// characters, in `YYYY-MM-DD` form.
pub fn day_date(day_id: &str) -> Option<NaiveDate> {
    let parse = |s: &str| NaiveDate::parse_from_str(s, "%Y-%m-%d").ok();
    parse(day_id).or_else(|| {
        let n = day_id.len();
        day_id.get(n.checked_sub(10)?..).and_then(parse)
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapRow {
    pub subject_id: String,
    pub day_type: &'static str,
    pub n_days: usize,
    /// Share of the subject's days of this type in each cluster.
    pub proportions: Vec<f64>,
}

/// Per-subject cluster proportions split by weekday and weekend, subjects
/// in lexicographic order. `None` when any day lacks a subject or a date.
pub fn heatmap_table(data: &CurveMatrix, labels: &[usize], k: usize) -> Option<Vec<HeatmapRow>> {
    let mut counts: BTreeMap<(String, usize), Vec<usize>> = BTreeMap::new();
    for ((id, subject), &l) in data.ids().iter().zip(data.subjects()).zip(labels) {
        let subject = subject.as_ref()?;
        let date = day_date(id)?;
        let weekend = matches!(date.weekday(), Weekday::Sat | Weekday::Sun) as usize;
        counts.entry((subject.clone(), weekend)).or_insert_with(|| vec![0; k])[l] += 1;
    }
    Some(
        counts
            .into_iter()
            .map(|((subject_id, weekend), c)| {
                let n: usize = c.iter().sum();
                HeatmapRow {
                    subject_id,
                    day_type: if weekend == 1 { "weekend" } else { "weekday" },
                    n_days: n,
                    proportions: c.iter().map(|&v| v as f64 / n as f64).collect(),
                }
            })
            .collect(),
    )
}

/// Writes every plot table for `run` into `out_dir`, creating it if needed.
pub fn emit_plots(run: &PipelineRun, data: &CurveMatrix, out_dir: impl AsRef<Path>) -> Result<PlotFiles> {
    let dir = out_dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut files = PlotFiles::default();
    let epochs: Vec<f64> = (1..=data.grid_len()).map(|t| t as f64).collect();

    let means: Vec<(String, Vec<f64>)> = run
        .report
        .cluster_means
        .iter()
        .enumerate()
        .map(|(c, m)| (format!("cluster_{}", c + 1), m.clone()))
        .collect();
    let path = dir.join("cluster_means.csv");
    write_series_csv(&path, "t", &epochs, &means)?;
    files.written.push(path);
    let sized: Vec<(String, Vec<f64>)> = means
        .iter()
        .zip(&run.report.cluster_sizes)
        .map(|((name, m), n)| (format!("{name} ({n})"), m.clone()))
        .collect();
    let path = dir.join("cluster_means.svg");
    std::fs::write(&path, line_chart("Cluster mean curves", &epochs, &sized))?;
    files.written.push(path);

    let grid = epoch_grid(data.grid_len());
    let mut eigen = Vec::new();
    for (k, var) in VARIABLE_NAMES.iter().enumerate() {
        let mut per_var = Vec::new();
        for r in 0..run.model.n_components {
            let name = format!("psi{}_{var}", r + 1);
            per_var.push((name, run.model.eigenfunction(r, k, &grid)?));
        }
        let path = dir.join(format!("eigenfunctions_{var}.svg"));
        std::fs::write(&path, line_chart(&format!("Eigenfunctions: {var}"), &grid, &per_var))?;
        files.written.push(path);
        eigen.extend(per_var);
    }
    let path = dir.join("eigenfunctions.csv");
    write_series_csv(&path, "t", &grid, &eigen)?;
    files.written.push(path);

    match heatmap_table(data, &run.clusters.labels, run.clusters.k) {
        Some(rows) => {
            let path = dir.join("heatmap.csv");
            let mut w = csv::Writer::from_writer(std::fs::File::create(&path)?);
            let mut header = vec!["subject_id".to_string(), "day_type".to_string(), "n_days".to_string()];
            header.extend((1..=run.clusters.k).map(|c| format!("cluster_{c}")));
            w.write_record(&header)?;
            for r in rows {
                let mut rec = vec![r.subject_id, r.day_type.to_string(), r.n_days.to_string()];
                rec.extend(r.proportions.iter().map(f64::to_string));
                w.write_record(&rec)?;
            }
            w.flush()?;
            files.written.push(path);
        }
        None => files
            .notices
            .push("heatmap skipped: days need a subject_id and a YYYY-MM-DD date in day_id".into()),
    }

    if let Some(gap) = &run.gap {
        let path = dir.join("gap.csv");
        write_gap(gap, &path)?;
        files.written.push(path);
        let ks: Vec<f64> = gap.ks.iter().map(|&k| k as f64).collect();
        let path = dir.join("gap.svg");
        std::fs::write(&path, line_chart("Gap statistic", &ks, &[("gap".into(), gap.gaps.clone())]))?;
        files.written.push(path);
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{DayMatrix, StepDay};
    use crate::pipeline::{run_pipeline, PipelineConfig};

    #[test]
    fn dates_from_day_ids() {
        assert_eq!(day_date("2019-03-02"), NaiveDate::from_ymd_opt(2019, 3, 2));
        assert_eq!(day_date("P8127_2019-03-04"), NaiveDate::from_ymd_opt(2019, 3, 4));
        assert_eq!(day_date("d1"), None);
        assert_eq!(day_date("2019-13-01"), None);
    }

    fn days_with_subjects() -> DayMatrix {
        // 2024-01-01 was a Monday
        let mut days = Vec::new();
        for s in ["s2", "s1"] {
            for d in 1..=14u32 {
                let mut counts = vec![0u32; 48];
                let base = if d % 7 == 6 || d % 7 == 0 { 30 } else { 5 };
                for (t, c) in counts.iter_mut().enumerate() {
                    if (t as u32 + d).is_multiple_of(5) {
                        *c = base + t as u32 % 7;
                    }
                }
                days.push(StepDay::new(format!("{s}_2024-01-{d:02}"), counts).with_subject(s));
            }
        }
        DayMatrix::new(days).unwrap()
    }

    #[test]
    fn heatmap_rows_are_sorted_proportions() {
        let dm = days_with_subjects();
        let curves = dm.to_curves();
        let labels: Vec<usize> = dm.days().iter().map(|d| (d.day_id.ends_with("06") || d.day_id.ends_with("07")) as usize).collect();
        let rows = heatmap_table(&curves, &labels, 2).unwrap();
        let keys: Vec<(&str, &str)> = rows.iter().map(|r| (r.subject_id.as_str(), r.day_type)).collect();
        assert_eq!(keys, [("s1", "weekday"), ("s1", "weekend"), ("s2", "weekday"), ("s2", "weekend")]);
        assert_eq!(rows[0].n_days, 10);
        assert_eq!(rows[1].n_days, 4);
        assert_eq!(rows[1].proportions, vec![0.5, 0.5]);
        assert_eq!(rows[0].proportions, vec![1.0, 0.0]);
        for r in &rows {
            assert!((r.proportions.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn emit_writes_expected_series() {
        let dm = days_with_subjects();
        let curves = dm.to_curves();
        let cfg = PipelineConfig { k: Some(3), n_basis: [8; 3], ..Default::default() };
        let run = run_pipeline(&curves, &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let files = emit_plots(&run, &curves, dir.path()).unwrap();
        assert!(files.notices.is_empty());

        let means = std::fs::read_to_string(dir.path().join("cluster_means.csv")).unwrap();
        let header: Vec<&str> = means.lines().next().unwrap().split(',').collect();
        assert_eq!(header, ["t", "cluster_1", "cluster_2", "cluster_3"]);
        assert_eq!(means.lines().count(), 1 + 48);

        let eig = std::fs::read_to_string(dir.path().join("eigenfunctions.csv")).unwrap();
        let cols = eig.lines().next().unwrap().split(',').count();
        assert_eq!(cols, 1 + 3 * run.model.n_components);
        assert!(dir.path().join("heatmap.csv").exists());
        assert!(!dir.path().join("gap.csv").exists());
        let svg = std::fs::read_to_string(dir.path().join("cluster_means.svg")).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 3);
    }

    #[test]
    fn heatmap_skipped_without_subjects() {
        let days = (0..6)
            .map(|i| StepDay::new(format!("d{i}"), (0..24).map(|t| ((t * (i + 1)) % 7) as u32).collect()))
            .collect();
        let curves = DayMatrix::new(days).unwrap().to_curves();
        let cfg = PipelineConfig { k_max: 3, b_gap: 3, n_basis: [6; 3], ..Default::default() };
        let run = run_pipeline(&curves, &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let files = emit_plots(&run, &curves, dir.path()).unwrap();
        assert_eq!(files.notices.len(), 1);
        assert!(!dir.path().join("heatmap.csv").exists());
        assert!(dir.path().join("gap.csv").exists());
    }

    #[test]
    fn chart_has_one_polyline_per_series() {
        let x = [0.0, 1.0, 2.0];
        let svg = line_chart("a<b", &x, &[("one".into(), vec![1.0, 2.0, 3.0]), ("two".into(), vec![0.0; 3])]);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("a&lt;b"));
        assert!(svg.starts_with("<svg"));
    }
}
