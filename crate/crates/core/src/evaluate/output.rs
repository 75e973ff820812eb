//! On-disk form of an [`EvaluationReport`]:
//!
//! * `summary.csv`: `K,mean_train,mean_cv,min_cv,max_cv,q_attain,q_user`
//! * `cv.clre`, `train.clre`: N × |grid| loss matrices
//! * `metadata.txt`: flat `key=value` lines
//! * `codec.clre`: the refitted codec, when one exists and is serializable

use std::fmt::Write as _;
use std::path::Path;

use crate::clre::{write_raw, RawMatrix};
use crate::error::{ClareError, Result};
use crate::learners::Method;

use super::{EvaluationReport, SummaryRow};

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_summary_csv(rows: &[SummaryRow]) -> String {
    let mut s = String::from("K,mean_train,mean_cv,min_cv,max_cv,q_attain,q_user\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.k,
            fmt_float(r.mean_train),
            fmt_float(r.mean_cv),
            fmt_float(r.min_cv),
            fmt_float(r.max_cv),
            fmt_float(r.q_attain),
            fmt_float(r.q_user)
        );
    }
    s
}

fn metadata(report: &EvaluationReport) -> String {
    let plan = &report.surface.fold_plan;
    let c = &report.criterion;
    let g = &report.surface.k_grid;
    let mut lines: Vec<(String, String)> = vec![
        ("learn".into(), report.learner.clone()),
        ("n".into(), plan.n().to_string()),
        ("t".into(), report.t.to_string()),
        ("seed".into(), plan.seed.to_string()),
        (
            "folds".into(),
            if plan.is_loo() { "loo".into() } else { plan.k_folds.to_string() },
        ),
        ("latent_dim_from".into(), g.from.to_string()),
        ("latent_dim_to".into(), g.to.to_string()),
        ("latent_dim_by".into(), g.by.to_string()),
        ("tolerance_level".into(), c.tolerance.to_string()),
        ("attainment_rate".into(), c.attainment.to_string()),
        ("cvqlines".into(), c.user_quantile.to_string()),
        ("loss".into(), "sq_corr".into()),
    ];
    lines.extend(report.learner_config.iter().cloned());
    lines.push((
        "qualifying_dimension".into(),
        report
            .qualifying_dimension
            .map_or("none".into(), |k| k.to_string()),
    ));
    lines.push((
        "compression_ratio".into(),
        report.compression_ratio.map_or("none".into(), |r| r.to_string()),
    ));
    let mut s = String::new();
    for (k, v) in lines {
        let _ = writeln!(s, "{k}={v}");
    }
    s
}

/// Parse a flat `key=value` file. Blank lines and `#` comments are skipped.
pub fn read_metadata(path: impl AsRef<Path>) -> Result<Vec<(String, String)>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| ClareError::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| {
            l.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| {
                    ClareError::Format(format!("{}:{}: expected key=value", path.display(), i + 1))
                })
        })
        .collect()
}

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| ClareError::io(path, e))
}

/// Write the report files into `dir`, creating it if needed.
pub fn write_report(report: &EvaluationReport, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| ClareError::io(dir, e))?;
    let s = &report.surface;
    write(&dir.join("summary.csv"), &write_summary_csv(&report.summary))?;
    for (name, values) in [("cv.clre", &s.cv), ("train.clre", &s.train)] {
        write_raw(
            dir.join(name),
            &RawMatrix {
                rows: s.n(),
                cols: s.n_k(),
                grid: None,
                values: values.clone(),
            },
        )?;
    }
    write(&dir.join("metadata.txt"), &metadata(report))?;
    if let Some(codec) = &report.final_codec {
        if codec.method() != Method::User {
            codec.save(dir.join("codec.clre"))?;
        }
    }
    Ok(())
}
