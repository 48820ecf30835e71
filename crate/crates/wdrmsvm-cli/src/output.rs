//! Result emission: the records CSV, the per-cell aggregates CSV, and a
//! single-panel SVG of mean test mCCR against log10(epsilon) at each model's
//! best kappa, with one-standard-deviation error bars.
//!
//! Every float is written in Rust's shortest round-trip rendering, so
//! identical results produce byte-identical files (wall_ms is the only
//! nondeterministic column).

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context};

use crate::sweep::{CellAggregate, Failure, SweepResult};

pub fn emit_csv(result: &SweepResult, path: &Path) -> anyhow::Result<()> {
    if result.records.is_empty() {
        bail!("refusing to emit an empty results CSV");
    }
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    w.write_record([
        "model",
        "epsilon",
        "kappa",
        "rep",
        "mccr_train",
        "mccr_test",
        "objective",
        "seed",
        "wall_ms",
    ])?;
    for r in &result.records {
        w.write_record([
            r.model.as_str().to_string(),
            format!("{}", r.epsilon),
            format!("{}", r.kappa),
            format!("{}", r.rep),
            format!("{}", r.mccr_train),
            format!("{}", r.mccr_test),
            format!("{}", r.objective),
            format!("{}", r.seed),
            format!("{}", r.wall_ms),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_aggregates_csv(result: &SweepResult, path: &Path) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    w.write_record([
        "model",
        "epsilon",
        "kappa",
        "reps",
        "mean_mccr_test",
        "std_mccr_test",
    ])?;
    for a in &result.aggregates {
        w.write_record([
            a.model.as_str().to_string(),
            format!("{}", a.epsilon),
            format!("{}", a.kappa),
            format!("{}", a.reps),
            format!("{}", a.mean_mccr_test),
            format!("{}", a.std_mccr_test),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_failures_csv(failures: &[Failure], path: &Path) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    w.write_record(["model", "epsilon", "kappa", "rep", "seed", "message"])?;
    for f in failures {
        w.write_record([
            f.model.as_str().to_string(),
            format!("{}", f.epsilon),
            format!("{}", f.kappa),
            format!("{}", f.rep),
            format!("{}", f.seed),
            f.message.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

const PALETTE: [&str; 7] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2",
];

/// For each model, the curve over epsilon at the kappa whose cell attains the
/// model's peak mean test mCCR (first grid cell on ties).
fn best_kappa_curves(aggregates: &[CellAggregate]) -> Vec<(String, f64, Vec<&CellAggregate>)> {
    let mut models: Vec<crate::config::ModelKind> = Vec::new();
    for a in aggregates {
        if !models.contains(&a.model) {
            models.push(a.model);
        }
    }
    let mut curves = Vec::new();
    for model in models {
        let cells: Vec<&CellAggregate> =
            aggregates.iter().filter(|a| a.model == model).collect();
        let best = cells
            .iter()
            .copied()
            .reduce(|best, c| if c.mean_mccr_test > best.mean_mccr_test { c } else { best })
            .expect("model came from a nonempty cell list");
        let mut curve: Vec<&CellAggregate> = cells
            .into_iter()
            .filter(|a| {
                a.kappa == best.kappa || (a.kappa.is_infinite() && best.kappa.is_infinite())
            })
            .filter(|a| a.epsilon > 0.0)
            .collect();
        curve.sort_by(|a, b| a.epsilon.partial_cmp(&b.epsilon).unwrap());
        curves.push((model.as_str().to_string(), best.kappa, curve));
    }
    curves
}

/// Writes the mCCR-vs-epsilon chart. Cells with epsilon = 0 cannot sit on a
/// log axis and are skipped with a warning.
pub fn emit_svg(result: &SweepResult, path: &Path) -> anyhow::Result<()> {
    if result.aggregates.is_empty() {
        bail!("refusing to plot an empty sweep");
    }
    if result.aggregates.iter().any(|a| a.epsilon <= 0.0) {
        log::warn!("epsilon = 0 cells are omitted from the log-scale SVG");
    }
    let curves = best_kappa_curves(&result.aggregates);
    let points: Vec<&CellAggregate> = curves.iter().flat_map(|(_, _, c)| c.iter().copied()).collect();
    if points.is_empty() {
        bail!("no positive-epsilon cells to plot");
    }

    let (left, right, top, bottom) = (70.0, 190.0, 46.0, 60.0);
    let (width, height) = (880.0, 520.0);
    let plot_w = width - left - right;
    let plot_h = height - top - bottom;

    let x_min = points
        .iter()
        .map(|a| a.epsilon.log10())
        .fold(f64::INFINITY, f64::min);
    let x_max = points
        .iter()
        .map(|a| a.epsilon.log10())
        .fold(f64::NEG_INFINITY, f64::max);
    let x_span = (x_max - x_min).max(1e-9);
    let y_lo_raw = points
        .iter()
        .map(|a| a.mean_mccr_test - a.std_mccr_test)
        .fold(f64::INFINITY, f64::min);
    let y_hi_raw = points
        .iter()
        .map(|a| a.mean_mccr_test + a.std_mccr_test)
        .fold(f64::NEG_INFINITY, f64::max);
    let pad = 0.05 * (y_hi_raw - y_lo_raw).max(0.1);
    let y_lo = (y_lo_raw - pad).max(0.0);
    let y_hi = (y_hi_raw + pad).min(1.0);
    let y_span = (y_hi - y_lo).max(1e-9);

    let x_of = |eps: f64| left + (eps.log10() - x_min) / x_span * plot_w;
    let y_of = |v: f64| top + (y_hi - v) / y_span * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\" font-family=\"monospace\" font-size=\"12\">"
    );
    let _ = writeln!(svg, "<rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>");
    let _ = writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"24\" font-size=\"15\">mean test mCCR vs log10(epsilon) at best kappa per model</text>",
        left
    );

    // axes
    let _ = writeln!(
        svg,
        "<line x1=\"{left:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>",
        top + plot_h,
        left + plot_w,
        top + plot_h
    );
    let _ = writeln!(
        svg,
        "<line x1=\"{left:.2}\" y1=\"{top:.2}\" x2=\"{left:.2}\" y2=\"{:.2}\" stroke=\"black\"/>",
        top + plot_h
    );

    // y ticks
    for i in 0..=4 {
        let v = y_lo + y_span * i as f64 / 4.0;
        let y = y_of(v);
        let _ = writeln!(
            svg,
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{left:.2}\" y2=\"{y:.2}\" stroke=\"black\"/>",
            left - 5.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{v:.3}</text>",
            left - 9.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"16\" y=\"{:.2}\" transform=\"rotate(-90 16 {:.2})\" text-anchor=\"middle\">mean test mCCR</text>",
        top + plot_h / 2.0,
        top + plot_h / 2.0
    );

    // x ticks on the distinct epsilon decades present
    let mut xticks: Vec<f64> = points.iter().map(|a| a.epsilon).collect();
    xticks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xticks.dedup();
    let stride = xticks.len().div_ceil(8).max(1);
    for eps in xticks.iter().step_by(stride) {
        let x = x_of(*eps);
        let _ = writeln!(
            svg,
            "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"black\"/>",
            top + plot_h,
            top + plot_h + 5.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{:.1}</text>",
            top + plot_h + 20.0,
            eps.log10()
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">log10(epsilon)</text>",
        left + plot_w / 2.0,
        top + plot_h + 42.0
    );

    // curves
    for (ci, (name, kappa, curve)) in curves.iter().enumerate() {
        let color = PALETTE[ci % PALETTE.len()];
        if curve.is_empty() {
            continue;
        }
        // error bars first so lines draw over them
        for a in curve {
            let x = x_of(a.epsilon);
            let (y1, y2) = (
                y_of((a.mean_mccr_test - a.std_mccr_test).max(y_lo)),
                y_of((a.mean_mccr_test + a.std_mccr_test).min(y_hi)),
            );
            let _ = writeln!(
                svg,
                "<line x1=\"{x:.2}\" y1=\"{y1:.2}\" x2=\"{x:.2}\" y2=\"{y2:.2}\" stroke=\"{color}\" stroke-width=\"1\"/>"
            );
            for y in [y1, y2] {
                let _ = writeln!(
                    svg,
                    "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"{color}\" stroke-width=\"1\"/>",
                    x - 3.0,
                    x + 3.0
                );
            }
        }
        let mut d = String::new();
        for (i, a) in curve.iter().enumerate() {
            let _ = write!(
                d,
                "{}{:.2},{:.2}",
                if i == 0 { "M" } else { " L" },
                x_of(a.epsilon),
                y_of(a.mean_mccr_test)
            );
        }
        let _ = writeln!(
            svg,
            "<path d=\"{d}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"/>"
        );
        for a in curve {
            let _ = writeln!(
                svg,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>",
                x_of(a.epsilon),
                y_of(a.mean_mccr_test)
            );
        }
        // legend entry
        let ly = top + 14.0 + 18.0 * ci as f64;
        let lx = left + plot_w + 14.0;
        let _ = writeln!(
            svg,
            "<line x1=\"{lx:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{color}\" stroke-width=\"1.8\"/>",
            lx + 22.0
        );
        let kappa_text = if kappa.is_infinite() {
            "inf".to_string()
        } else {
            format!("{kappa}")
        };
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\">{name} (k={kappa_text})</text>",
            lx + 28.0,
            ly + 4.0
        );
    }
    let _ = writeln!(svg, "</svg>");
    std::fs::write(path, svg).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ModelKind;
    use crate::sweep::Record;

    fn record(model: ModelKind, eps: f64, kappa: f64, rep: usize, test: f64) -> Record {
        Record {
            model,
            epsilon: eps,
            kappa,
            rep,
            mccr_train: test + 0.01,
            mccr_test: test,
            objective: 0.5,
            seed: 42,
            wall_ms: 3,
        }
    }

    fn demo_result() -> SweepResult {
        let records = vec![
            record(ModelKind::WdrMsvm, 1e-3, 0.5, 0, 0.8),
            record(ModelKind::WdrMsvm, 1e-3, 0.5, 1, 0.9),
            record(ModelKind::WdrMsvm, 1e-1, 0.5, 0, 0.7),
            record(ModelKind::WdrMsvm, 1e-1, 0.5, 1, 0.75),
            record(ModelKind::DrOva, 1e-3, 0.5, 0, 0.6),
            record(ModelKind::DrOva, 1e-3, 0.5, 1, 0.7),
            record(ModelKind::DrOva, 1e-1, 0.5, 0, 0.65),
            record(ModelKind::DrOva, 1e-1, 0.5, 1, 0.6),
        ];
        let config: crate::config::SweepConfig = serde_json::from_str(
            r#"{
            "models": ["wdr-msvm", "dr-ova"],
            "epsilon_grid": [1e-3, 1e-1],
            "kappa_grid": [0.5],
            "repetitions": 2,
            "data": {"source": "csv", "path": "x.csv", "label_column": "y"}
        }"#,
        )
        .unwrap();
        let aggregates = crate::sweep::aggregate(&config, &records);
        SweepResult { records, failures: vec![], aggregates }
    }

    #[test]
    fn csv_round_trip_reproduces_aggregates_bit_exactly() {
        let result = demo_result();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("results.csv");
        emit_csv(&result, &path).unwrap();

        let mut reader = csv::Reader::from_path(&path).unwrap();
        let mut scores: Vec<(String, f64, f64, f64)> = Vec::new();
        for row in reader.records() {
            let row = row.unwrap();
            scores.push((
                row[0].to_string(),
                row[1].parse().unwrap(),
                row[2].parse().unwrap(),
                row[5].parse().unwrap(),
            ));
        }
        for agg in &result.aggregates {
            let cell: Vec<f64> = scores
                .iter()
                .filter(|(m, e, k, _)| {
                    m == agg.model.as_str() && *e == agg.epsilon && *k == agg.kappa
                })
                .map(|(_, _, _, s)| *s)
                .collect();
            assert_eq!(cell.len(), agg.reps);
            let mean = cell.iter().sum::<f64>() / cell.len() as f64;
            assert!(
                (mean - agg.mean_mccr_test).abs() == 0.0,
                "round-trip mean drifted"
            );
        }
    }

    #[test]
    fn single_record_writes_header_plus_one_row() {
        let config: crate::config::SweepConfig = serde_json::from_str(
            r#"{
            "models": ["wdr-msvm"],
            "epsilon_grid": [1e-3],
            "kappa_grid": [0.5],
            "repetitions": 1,
            "data": {"source": "csv", "path": "x.csv", "label_column": "y"}
        }"#,
        )
        .unwrap();
        let records = vec![record(ModelKind::WdrMsvm, 1e-3, 0.5, 0, 0.8)];
        let aggregates = crate::sweep::aggregate(&config, &records);
        let result = SweepResult { records, failures: vec![], aggregates };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one.csv");
        emit_csv(&result, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("model,epsilon,kappa,rep,mccr_train,mccr_test,objective,seed,wall_ms"));
    }

    #[test]
    fn two_models_draw_two_polylines() {
        let result = demo_result();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("plot.svg");
        emit_svg(&result, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.matches("<path d=").count(), 2);
        assert!(text.contains("wdr-msvm"));
        assert!(text.contains("dr-ova"));
    }

    #[test]
    fn svg_is_deterministic() {
        let result = demo_result();
        let dir = tempfile::tempdir().unwrap();
        let (p1, p2) = (dir.path().join("a.svg"), dir.path().join("b.svg"));
        emit_svg(&result, &p1).unwrap();
        emit_svg(&result, &p2).unwrap();
        assert_eq!(
            std::fs::read(&p1).unwrap(),
            std::fs::read(&p2).unwrap()
        );
    }
}
