use std::fmt::Write;

use super::{ExperimentReport, RunReport};

fn pct(x: f64) -> String {
    format!("{:.1}", 100.0 * x)
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.2}")).unwrap_or_default()
}

pub(super) fn render(report: &ExperimentReport) -> String {
    let mut out = String::new();
    let sizes = &report.split.test_file_sizes;
    let mut train_sizes: Vec<usize> = report.runs.iter().map(|r| r.train_size).collect();
    train_sizes.dedup();

    for &train in &train_sizes {
        let runs: Vec<&RunReport> = report.runs.iter().filter(|r| r.train_size == train).collect();
        let _ = writeln!(
            out,
            "== {} training tokens per category, {} tokens, {} categories ==",
            train,
            report.mode,
            report.categories.len()
        );

        let mut header = format!("{:>9} |", "threshold");
        for label in ["Accuracy (%)", "Decisiveness (%)"] {
            let _ = write!(header, " {label:<w$}|", w = 7 * (sizes.len() + 1));
        }
        let _ = writeln!(out, "{header}");
        let mut sub = format!("{:>9} |", "");
        for _ in 0..2 {
            for s in sizes {
                let _ = write!(sub, "{s:>6} ");
            }
            let _ = write!(sub, "{:>6} |", "All");
        }
        let _ = writeln!(out, "{sub}");
        for run in &runs {
            let mut line = format!("{:>9} |", run.threshold);
            for cell in run.cells.iter() {
                let _ = write!(line, "{:>6} ", pct(cell.accuracy));
            }
            let _ = write!(line, "{:>6} |", pct(run.all.accuracy));
            for cell in run.cells.iter() {
                let _ = write!(line, "{:>6} ", pct(cell.decisiveness));
            }
            let _ = write!(line, "{:>6} |", pct(run.all.decisiveness));
            let _ = writeln!(out, "{line}");
        }

        let _ = writeln!(out, "\nMean tokens read before a decision");
        let _ = writeln!(
            out,
            "{:>9} | {:>9} {:>9} {:>9} {:>6}",
            "threshold", "correct", "incorrect", "all", "max"
        );
        for run in &runs {
            let c = &run.convergence;
            let _ = writeln!(
                out,
                "{:>9} | {:>9} {:>9} {:>9} {:>6}",
                run.threshold,
                opt(c.correct),
                opt(c.incorrect),
                opt(c.all),
                c.max.map(|m| m.to_string()).unwrap_or_default()
            );
        }

        if let Some(last) = runs.last() {
            render_remaining(&mut out, last);
            render_confusion(&mut out, last);
        }
        out.push('\n');
    }
    out
}

fn render_remaining(out: &mut String, run: &RunReport) {
    let _ = writeln!(
        out,
        "\nCategories remaining at end of input (threshold {})",
        run.threshold
    );
    let _ = writeln!(
        out,
        "{:>9} | {:>7} {:>9} {:>7}",
        "remaining", "correct", "incorrect", "all"
    );
    for (size, c) in &run.remaining.histogram {
        let _ = writeln!(out, "{:>9} | {:>7} {:>9} {:>7}", size, c.correct, c.incorrect, c.all);
    }
    let _ = writeln!(out, "mean remaining: {}", opt(run.remaining.mean));
}

/// Rows are the assigned category, columns the true one.
fn render_confusion(out: &mut String, run: &RunReport) {
    let m = &run.confusion;
    let width = m.categories.iter().map(|c| c.chars().count()).max().unwrap_or(1).max(4);
    let _ = writeln!(
        out,
        "\nConfusion matrix (threshold {}; column = true category, row = assigned category)",
        run.threshold
    );
    let mut header = format!("{:>width$} |", "");
    for c in &m.categories {
        let _ = write!(header, " {c:>width$}");
    }
    let _ = writeln!(out, "{header}");
    for (predicted, name) in m.categories.iter().enumerate() {
        let mut line = format!("{name:>width$} |");
        for actual in 0..m.categories.len() {
            let n = m.counts[actual][predicted];
            if n == 0 {
                let _ = write!(line, " {:>width$}", "");
            } else {
                let _ = write!(line, " {n:>width$}");
            }
        }
        let _ = writeln!(out, "{}", line.trim_end());
    }
}
