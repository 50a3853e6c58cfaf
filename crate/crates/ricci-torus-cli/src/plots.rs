//! CSV and gnuplot artifacts derived from a finished report.
//!
//! Numbers are written with 17 significant digits so a reloaded CSV
//! reproduces every f64 bit-exactly; absent values are empty cells.

use crate::experiment::ExperimentReport;
use ricci_torus::{Error, Result};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub const DIAGNOSTICS_HEADER: &str = "i,t,area,l1_gap,sup_gap,supK,infK,t_supK,grad_decay,\
hess_decay,dist_sup_gap_d0,dist_sup_gap_sqrt2_d0,c0_running,beta_running";

pub fn diagnostics_csv(report: &ExperimentReport) -> String {
    let mut out = String::from(DIAGNOSTICS_HEADER);
    out.push('\n');
    for run in &report.runs {
        for r in &run.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                run.i,
                num(r.t),
                num(r.area),
                num(r.l1_gap),
                num(r.sup_gap),
                num(r.sup_k),
                num(r.inf_k),
                num(r.t_sup_k),
                opt(r.grad_decay),
                opt(r.hess_decay),
                opt(r.dist_sup_gap_to_d0),
                opt(r.dist_sup_gap_to_sqrt2_d0),
                opt(r.c0_running),
                opt(r.beta_running),
            );
        }
    }
    out
}

fn curvature_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("i,t,t_supK\n");
    for run in &report.runs {
        for r in run.records.iter().filter(|r| r.t >= 1e-3) {
            let _ = writeln!(out, "{},{},{}", run.i, num(r.t), num(r.t_sup_k));
        }
    }
    out
}

fn l1_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("i,l1_gap_at_t_star\n");
    for row in &report.convergence {
        let _ = writeln!(out, "{},{}", row.i, num(row.l1_gap));
    }
    out
}

fn distance_gap_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("i,sup_gap_t0_to_d0,sup_gap_t_star_to_sqrt2_d0\n");
    for run in &report.runs {
        let at = |t: f64| {
            run.distances
                .iter()
                .find(|d| d.t == t)
                .map(|d| if t == 0.0 { d.sup_gap_to_d0 } else { d.sup_gap_to_sqrt2_d0 })
        };
        let _ = writeln!(
            out,
            "{},{},{}",
            run.i,
            opt(at(0.0)),
            opt(at(report.config.t_star)),
        );
    }
    out
}

fn per_order_plot(csv: &str, ys: &str, orders: &[u32], title: &str) -> String {
    let mut script = String::new();
    let _ = writeln!(script, "# {title}");
    script.push_str("set datafile separator \",\"\nset datafile missing \"\"\n");
    script.push_str("set logscale x\nset key left\n");
    let clauses: Vec<String> = orders
        .iter()
        .map(|i| {
            format!(
                "'{csv}' using 2:($1=={i} ? {ys} : 1/0) skip 1 with linespoints title \"i={i}\""
            )
        })
        .collect();
    let _ = writeln!(script, "plot {}", clauses.join(", \\\n     "));
    script
}

/// Writes the CSVs and the gnuplot scripts that read them, then scans each
/// script and fails if it references a file this call did not just write.
pub fn emit_plots(report: &ExperimentReport, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let orders: Vec<u32> = report.runs.iter().map(|r| r.i).collect();

    let mut files: Vec<(String, String)> = vec![
        ("diagnostics.csv".into(), diagnostics_csv(report)),
        ("curvature_decay.csv".into(), curvature_csv(report)),
        ("l1_gap_vs_i.csv".into(), l1_csv(report)),
        ("distance_gap_vs_i.csv".into(), distance_gap_csv(report)),
        (
            "curvature_decay.gp".into(),
            per_order_plot("curvature_decay.csv", "$3", &orders, "t sup|K| against time"),
        ),
    ];
    files.push((
        "l1_gap_vs_i.gp".into(),
        "# L1 gap to the doubled metric at t_star, per lattice order\n\
         set datafile separator \",\"\nset datafile missing \"\"\n\
         plot 'l1_gap_vs_i.csv' using 1:2 skip 1 with linespoints title \"l1 gap\"\n"
            .into(),
    ));
    files.push((
        "distance_gap_vs_i.gp".into(),
        "# Distance-matrix gaps: to d0 at t = 0 and to sqrt(2) d0 at t_star\n\
         set datafile separator \",\"\nset datafile missing \"\"\n\
         plot 'distance_gap_vs_i.csv' using 1:2 skip 1 with linespoints title \"to d0 at t=0\", \\\n     \
         'distance_gap_vs_i.csv' using 1:3 skip 1 with linespoints title \"to sqrt(2) d0 at t*\"\n"
            .into(),
    ));

    let written: Vec<String> = files.iter().map(|(name, _)| name.clone()).collect();
    let mut paths = Vec::new();
    for (name, body) in &files {
        let path = out_dir.join(name);
        fs::write(&path, body)?;
        paths.push(path);
    }

    for (name, body) in files.iter().filter(|(n, _)| n.ends_with(".gp")) {
        for referenced in quoted_strings(body) {
            if !written.iter().any(|w| w == &referenced) {
                return Err(Error::InvalidField(format!(
                    "plot script {name} references {referenced}, which was not written"
                )));
            }
        }
    }
    Ok(paths)
}

fn quoted_strings(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(start) = rest.find('\'') {
        let tail = &rest[start + 1..];
        match tail.find('\'') {
            Some(end) => {
                out.push(tail[..end].to_string());
                rest = &tail[end + 1..];
            }
            None => break,
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quoted_extraction_handles_multiple_and_unbalanced() {
        assert_eq!(quoted_strings("plot 'a.csv' u 1:2, 'b.csv'"), vec!["a.csv", "b.csv"]);
        assert_eq!(quoted_strings("no quotes"), Vec::<String>::new());
        assert_eq!(quoted_strings("odd 'one' 'dangling"), vec!["one"]);
    }
}
