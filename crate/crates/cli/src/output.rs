//! CSV serialization for experiment artifacts.
//!
//! Every file has a fixed header; every floating-point cell is written in
//! scientific notation with 17 significant digits so values round-trip
//! exactly. Wall-clock columns are the only nondeterministic content, and
//! each writer can zero them (`with_timings = false`) to make reruns with
//! the same seed byte-identical.

use std::fs;
use std::io;
use std::path::Path;

use nalgebra::DVector;
use rbopt::greedy::{ErrorStudyTable, GreedyHistory};
use rbopt::mesh::Mesh;
use rbopt::optimizer::OptimizeResult;
use rbopt::trust_region::TRHistory;

/// 17 significant digits: enough to reconstruct the exact f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// A CSV document with a fixed column count.
pub struct CsvDoc {
    buf: String,
    columns: usize,
}

impl CsvDoc {
    pub fn new(header: &[String]) -> Self {
        let mut doc = CsvDoc { buf: String::new(), columns: header.len() };
        doc.push_cells(header);
        doc
    }

    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.columns, "row width must match the header");
        self.push_cells(cells);
    }

    fn push_cells(&mut self, cells: &[String]) {
        self.buf.push_str(&cells.join(","));
        self.buf.push('\n');
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        fs::write(path, &self.buf)
    }
}

fn header(fixed_front: &[&str], names: &[String], fixed_back: &[&str]) -> Vec<String> {
    let mut cols: Vec<String> = fixed_front.iter().map(|s| s.to_string()).collect();
    cols.extend(names.iter().map(|n| format!("mu_{n}")));
    cols.extend(fixed_back.iter().map(|s| s.to_string()));
    cols
}

fn mu_cells(mu: &DVector<f64>) -> impl Iterator<Item = String> + '_ {
    mu.iter().map(|x| fmt_f64(*x))
}

/// Outer-loop history of a trust-region run: one row per outer iteration.
pub fn tr_history_doc(history: &TRHistory, names: &[String], with_timings: bool) -> CsvDoc {
    let mut doc = CsvDoc::new(&header(
        &["k"],
        names,
        &["j_h", "foc", "radius", "accepted", "n_basis", "t_cumulative_s", "fom_solves"],
    ));
    for row in &history.rows {
        let mut cells = vec![row.k.to_string()];
        cells.extend(mu_cells(&row.mu));
        cells.push(fmt_f64(row.j_h));
        cells.push(fmt_f64(row.foc));
        cells.push(fmt_f64(row.radius));
        cells.push((row.accepted as u8).to_string());
        cells.push(row.n_basis.to_string());
        cells.push(fmt_f64(if with_timings { row.t_cumulative_s } else { 0.0 }));
        cells.push(row.fom_solves.to_string());
        doc.row(&cells);
    }
    doc
}

/// Accepted-iterate history of a quasi-Newton run: one row per iterate,
/// starting with the initial point.
pub fn bfgs_history_doc(result: &OptimizeResult, names: &[String]) -> CsvDoc {
    let mut doc = CsvDoc::new(&header(&["iter"], names, &["value", "foc"]));
    for (i, rec) in result.history.iter().enumerate() {
        let mut cells = vec![i.to_string()];
        cells.extend(mu_cells(&rec.mu));
        cells.push(fmt_f64(rec.value));
        cells.push(fmt_f64(rec.foc));
        doc.row(&cells);
    }
    doc
}

/// Greedy enrichment log: one row per snapshot pair added.
pub fn greedy_history_doc(history: &GreedyHistory, names: &[String], with_timings: bool) -> CsvDoc {
    let mut doc = CsvDoc::new(&header(
        &["step"],
        names,
        &["basis_size", "max_rel_estimate", "wall_time_s"],
    ));
    for (i, step) in history.steps.iter().enumerate() {
        let mut cells = vec![i.to_string()];
        cells.extend(mu_cells(&step.selected_mu));
        cells.push(step.basis_size.to_string());
        cells.push(fmt_f64(step.max_rel_estimate));
        cells.push(fmt_f64(if with_timings { step.wall_time_s } else { 0.0 }));
        doc.row(&cells);
    }
    doc
}

/// Error-decay study: one row per (basis size, variant, metric).
pub fn error_study_doc(table: &ErrorStudyTable) -> CsvDoc {
    let cols = ["basis_size", "variant", "metric", "value", "unstable_count"]
        .map(String::from)
        .to_vec();
    let mut doc = CsvDoc::new(&cols);
    for row in &table.rows {
        doc.row(&[
            row.basis_size.to_string(),
            row.variant.label().to_string(),
            row.metric.label().to_string(),
            fmt_f64(row.value),
            row.unstable_count.to_string(),
        ]);
    }
    doc
}

/// One-row summary of a full-order solve: parameter, objective, criticality
/// and gradient.
pub fn fom_summary_doc(
    names: &[String],
    mu: &DVector<f64>,
    value: f64,
    foc: f64,
    grad: &DVector<f64>,
) -> CsvDoc {
    let mut cols = header(&[], names, &["objective", "foc"]);
    cols.extend(names.iter().map(|n| format!("grad_{n}")));
    let mut doc = CsvDoc::new(&cols);
    let mut cells: Vec<String> = mu_cells(mu).collect();
    cells.push(fmt_f64(value));
    cells.push(fmt_f64(foc));
    cells.extend(grad.iter().map(|x| fmt_f64(*x)));
    doc.row(&cells);
    doc
}

/// Nodal primal/dual states with coordinates, one row per mesh node.
pub fn state_doc(mesh: &Mesh, u: &DVector<f64>, p: &DVector<f64>) -> CsvDoc {
    let cols = ["node", "x", "y", "u", "p"].map(String::from).to_vec();
    let mut doc = CsvDoc::new(&cols);
    for i in 0..mesh.n_nodes() {
        let [x, y] = mesh.node(i);
        doc.row(&[i.to_string(), fmt_f64(x), fmt_f64(y), fmt_f64(u[i]), fmt_f64(p[i])]);
    }
    doc
}

/// Per-start outcome of an `optimize` run, plus the reference columns the
/// trust-region methods are compared against.
#[derive(Debug, Clone)]
pub struct StartSummary {
    pub start: usize,
    pub method: &'static str,
    pub iterations: usize,
    pub fom_solves: usize,
    pub j_final: f64,
    pub foc: f64,
    /// Relative l2 distance of the final parameter to the reference
    /// optimizer's final parameter (zero when the method is the reference).
    pub rel_error: f64,
    pub runtime_s: f64,
    pub ref_iterations: usize,
    pub ref_runtime_s: f64,
    pub speedup: f64,
}

/// Summary table: one row per start followed by `avg`/`min`/`max` rows over
/// the numeric columns.
pub fn summary_doc(rows: &[StartSummary], with_timings: bool) -> CsvDoc {
    let cols = [
        "start",
        "method",
        "iterations",
        "fom_solves",
        "j_final",
        "foc",
        "rel_error",
        "runtime_s",
        "ref_iterations",
        "ref_runtime_s",
        "speedup",
    ]
    .map(String::from)
    .to_vec();
    let mut doc = CsvDoc::new(&cols);

    let numeric = |r: &StartSummary| -> [f64; 9] {
        [
            r.iterations as f64,
            r.fom_solves as f64,
            r.j_final,
            r.foc,
            r.rel_error,
            if with_timings { r.runtime_s } else { 0.0 },
            r.ref_iterations as f64,
            if with_timings { r.ref_runtime_s } else { 0.0 },
            if with_timings { r.speedup } else { 0.0 },
        ]
    };
    for r in rows {
        let values = numeric(r);
        let mut cells = vec![r.start.to_string(), r.method.to_string()];
        cells.extend(values.iter().map(|x| fmt_f64(*x)));
        doc.row(&cells);
    }

    if !rows.is_empty() {
        let method = rows[0].method.to_string();
        let columns: Vec<[f64; 9]> = rows.iter().map(numeric).collect();
        let stat = |label: &str, fold: &dyn Fn(usize) -> f64, doc: &mut CsvDoc| {
            let mut cells = vec![label.to_string(), method.clone()];
            cells.extend((0..9).map(|j| fmt_f64(fold(j))));
            doc.row(&cells);
        };
        let n = columns.len() as f64;
        stat("avg", &|j| columns.iter().map(|c| c[j]).sum::<f64>() / n, &mut doc);
        stat("min", &|j| columns.iter().map(|c| c[j]).fold(f64::INFINITY, f64::min), &mut doc);
        stat("max", &|j| columns.iter().map(|c| c[j]).fold(f64::NEG_INFINITY, f64::max), &mut doc);
    }
    doc
}
