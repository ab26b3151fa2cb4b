use std::fmt::Write;

use crate::ledger::Ledger;
use crate::trend::{CategoryTable, RegressionModel, TimeSeries};

use super::svg::num;

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    w.write_record(header).expect("write to memory");
    for row in rows {
        w.write_record(&row).expect("write to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8 input")
}

/// `year,<value_name>,partial` with the partial year flagged.
pub fn series_csv(series: &TimeSeries, value_name: &str) -> String {
    csv_string(
        &["year", value_name, "partial"],
        series.points().iter().map(|&(t, v)| {
            let partial = series.partial_year() == Some(t);
            vec![t.to_string(), num(v), partial.to_string()]
        }),
    )
}

/// Several series side by side, one row per year present in any of them.
pub fn multi_series_csv(columns: &[(&str, &TimeSeries)]) -> String {
    let mut years: Vec<i32> = columns
        .iter()
        .flat_map(|(_, s)| s.points().iter().map(|p| p.0))
        .collect();
    years.sort_unstable();
    years.dedup();
    let mut header = vec!["year"];
    header.extend(columns.iter().map(|c| c.0));
    csv_string(
        &header,
        years.into_iter().map(|t| {
            std::iter::once(t.to_string())
                .chain(columns.iter().map(|(_, s)| s.value(t).map(num).unwrap_or_default()))
                .collect()
        }),
    )
}

pub fn categories_csv(table: &CategoryTable) -> String {
    csv_string(
        &["category", "count"],
        table
            .rows
            .iter()
            .map(|r| vec![r.name.clone(), r.count.to_string()])
            .chain(std::iter::once(vec![
                "explicit-total".into(),
                table.explicit_total.to_string(),
            ])),
    )
}

pub fn ledger_csv(ledger: &Ledger) -> String {
    csv_string(
        &["stage", "input", "removed", "output", "params_digest", "note", "timestamp"],
        ledger.entries().iter().map(|e| {
            vec![
                e.stage.clone(),
                e.input.to_string(),
                e.removed.to_string(),
                e.output.to_string(),
                e.params_digest.clone(),
                e.note.clone(),
                Ledger::timestamp_string(e),
            ]
        }),
    )
}

fn opt(v: Option<f64>, fmt: impl Fn(f64) -> String) -> String {
    v.map(fmt).unwrap_or_else(|| "-".into())
}

fn term_name(degree: u32) -> String {
    match degree {
        0 => "c0".into(),
        d => format!("c{d} (t-t0)^{d}"),
    }
}

/// Plain-text table of terms, coefficients, standard errors and p-values.
pub fn fit_report(model: &RegressionModel, label: &str) -> String {
    let mut out = String::new();
    writeln!(out, "fit: {label}").unwrap();
    writeln!(
        out,
        "origin t0 = {}, years {}..{} ({} points), max degree {}",
        model.t0, model.first_year, model.last_year, model.n_points, model.max_degree
    )
    .unwrap();
    writeln!(out).unwrap();
    writeln!(out, "{:<16} {:>16} {:>14} {:>10} {:>12}", "term", "coefficient", "std error", "t", "p-value").unwrap();
    for t in &model.terms {
        writeln!(
            out,
            "{:<16} {:>16.6} {:>14.6} {:>10} {:>12}",
            term_name(t.degree),
            t.coef,
            t.std_err,
            opt(t.t_value, |v| format!("{v:.3}")),
            opt(t.p_value, |v| format!("{v:.3e}")),
        )
        .unwrap();
    }
    writeln!(out).unwrap();
    writeln!(out, "r2    = {}", opt(model.r2, |v| format!("{v:.6}"))).unwrap();
    writeln!(out, "sigma = {:.6}", model.sigma).unwrap();
    let coef = |c: f64| if c == 0.0 || c.abs() >= 0.01 { format!("{c:.2}") } else { format!("{c:.3e}") };
    let mut eq = coef(model.coef(0).unwrap_or(0.0));
    for t in model.terms.iter().filter(|t| t.degree > 0) {
        let sign = if t.coef < 0.0 { '-' } else { '+' };
        let pow = if t.degree == 1 { String::new() } else { format!("^{}", t.degree) };
        write!(eq, " {sign} {} (t - {}){pow}", coef(t.coef.abs()), model.t0).unwrap();
    }
    writeln!(out, "n(t)  = {eq}").unwrap();
    out
}

/// Stage-by-stage accounting with a reconciliation line.
pub fn ledger_report(ledger: &Ledger, corpus_size: usize) -> String {
    let mut out = String::new();
    writeln!(out, "{:<28} {:>8} {:>8} {:>8}  note", "stage", "in", "removed", "out").unwrap();
    for e in ledger.entries() {
        writeln!(out, "{:<28} {:>8} {:>8} {:>8}  {}", e.stage, e.input, e.removed, e.output, e.note)
            .unwrap();
    }
    let status = match ledger.reconcile(corpus_size) {
        Ok(()) => "ok".to_string(),
        Err(e) => format!("FAILED: {e}"),
    };
    writeln!(
        out,
        "\ninitial {} - removed {} = {} (corpus {}): {}",
        ledger.initial_size().unwrap_or(0),
        ledger.total_removed(),
        ledger.current_size().unwrap_or(0),
        corpus_size,
        status
    )
    .unwrap();
    out
}
