//! Static graphics and tables derived from an [`EvaluationReport`].
//!
//! Every plot is plain SVG 1.1. Elements that tests and downstream tools
//! look for carry a `class`: `eps-line`, `qd-marker`, `series-<role>`,
//! `heat-cell`, `ratio-point`, `original`, `reconstruction`.

mod svg;

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;

use crate::data::DataMatrix;
use crate::error::{ClareError, Result};
use crate::evaluate::{fmt_float, EvaluationReport, LossSurface};
use crate::learners::Codec;
use crate::rng::{RngSpec, Stream};

use svg::{c, escape, int_ticks, ramp, Scale, Svg};

/// Series drawn on the summary plot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    CvMean,
    TrainMean,
    Min,
    Max,
    UserQuantile,
    AttainmentQuantile,
}

impl Role {
    pub const ALL: [Role; 6] = [
        Role::AttainmentQuantile,
        Role::UserQuantile,
        Role::Max,
        Role::Min,
        Role::TrainMean,
        Role::CvMean,
    ];

    pub fn class(self) -> &'static str {
        match self {
            Role::CvMean => "cv-mean",
            Role::TrainMean => "train-mean",
            Role::Min => "min",
            Role::Max => "max",
            Role::UserQuantile => "user-quantile",
            Role::AttainmentQuantile => "attainment-quantile",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub width: f64,
    pub height: f64,
    pub colors: Vec<(Role, String)>,
    pub x_label: String,
    pub y_label: String,
    pub title: Option<String>,
}

impl Default for PlotSpec {
    fn default() -> Self {
        PlotSpec {
            width: 640.0,
            height: 420.0,
            colors: vec![
                (Role::CvMean, "#e6b800".into()),
                (Role::TrainMean, "#2ca02c".into()),
                (Role::Min, "#1f77b4".into()),
                (Role::Max, "#d62728".into()),
                (Role::UserQuantile, "#9467bd".into()),
                (Role::AttainmentQuantile, "#c8c8c8".into()),
            ],
            x_label: "Latent feature dimension K".into(),
            y_label: "Information loss (1 - ρ²)".into(),
            title: None,
        }
    }
}

impl PlotSpec {
    pub fn color(&self, role: Role) -> &str {
        self.colors
            .iter()
            .find(|(r, _)| *r == role)
            .map_or("black", |(_, c)| c.as_str())
    }
}

const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 52.0;

struct Frame {
    x: Scale,
    y: Scale,
    left: f64,
    right: f64,
    top: f64,
    bottom: f64,
}

fn frame(spec: &PlotSpec, k_lo: f64, k_hi: f64, y_lo: f64, y_hi: f64) -> Frame {
    let (left, right) = (MARGIN_L, spec.width - MARGIN_R);
    let (top, bottom) = (MARGIN_T, spec.height - MARGIN_B);
    Frame {
        x: Scale::new(k_lo, k_hi, left, right),
        y: Scale::new(y_lo, y_hi, bottom, top),
        left,
        right,
        top,
        bottom,
    }
}

fn axes(svg: &mut Svg, f: &Frame, spec: &PlotSpec, ks: &[usize], y_ticks: &[f64], skip_x: Option<usize>, skip_y: Option<f64>) {
    svg.line(f.left, f.bottom, f.right, f.bottom, r#"stroke="black""#);
    svg.line(f.left, f.bottom, f.left, f.top, r#"stroke="black""#);
    let (lo, hi) = (*ks.first().unwrap_or(&0), *ks.last().unwrap_or(&0));
    for t in int_ticks(lo, hi, 6) {
        if Some(t) == skip_x {
            continue;
        }
        let x = f.x.map(t as f64);
        svg.line(x, f.bottom, x, f.bottom + 4.0, r#"stroke="black""#);
        svg.text(x, f.bottom + 17.0, &t.to_string(), r#"text-anchor="middle""#);
    }
    for &t in y_ticks {
        if skip_y.is_some_and(|s| (s - t).abs() < 1e-12) {
            continue;
        }
        let y = f.y.map(t);
        svg.line(f.left - 4.0, y, f.left, y, r#"stroke="black""#);
        svg.text(f.left - 7.0, y + 4.0, &format!("{t:.2}"), r#"text-anchor="end""#);
    }
    svg.text(
        (f.left + f.right) / 2.0,
        spec.height - 12.0,
        &spec.x_label,
        r#"text-anchor="middle""#,
    );
    let cy = (f.top + f.bottom) / 2.0;
    svg.text(
        16.0,
        cy,
        &spec.y_label,
        &format!(r#"text-anchor="middle" transform="rotate(-90 16 {})""#, c(cy)),
    );
    if let Some(title) = &spec.title {
        svg.text(f.left, 20.0, title, r#"font-weight="bold""#);
    }
}

fn summary_body(report: &EvaluationReport, spec: &PlotSpec) -> Svg {
    let mut svg = Svg::new(spec.width, spec.height);
    let ks = &report.surface.ks;
    let (lo, hi) = (ks[0] as f64, ks[ks.len() - 1] as f64);
    let f = frame(spec, lo, hi, 0.0, 1.0);
    let eps = report.criterion.tolerance;
    let qd = report.qualifying_dimension;
    axes(&mut svg, &f, spec, ks, &[0.0, 0.25, 0.5, 0.75, 1.0], qd, None);

    let ey = f.y.map(eps);
    svg.line(
        f.left,
        ey,
        f.right,
        ey,
        &format!(
            r#"class="eps-line" stroke="gray" stroke-dasharray="6,4" data-value="{}""#,
            fmt_float(eps)
        ),
    );
    svg.text(
        f.left - 7.0,
        ey + 4.0,
        &format!("ε={eps}"),
        r#"text-anchor="end" font-weight="bold" font-style="italic""#,
    );
    if let Some(k) = qd {
        let x = f.x.map(k as f64);
        svg.line(
            x,
            f.top,
            x,
            f.bottom,
            &format!(r#"class="qd-marker" stroke="black" stroke-dasharray="2,3" data-k="{k}""#),
        );
        svg.text(
            x,
            f.bottom + 17.0,
            &k.to_string(),
            r#"text-anchor="middle" font-weight="bold" font-style="italic""#,
        );
    }

    let series = |role: Role| -> Vec<f64> {
        report
            .summary
            .iter()
            .map(|r| match role {
                Role::CvMean => r.mean_cv,
                Role::TrainMean => r.mean_train,
                Role::Min => r.min_cv,
                Role::Max => r.max_cv,
                Role::UserQuantile => r.q_user,
                Role::AttainmentQuantile => r.q_attain,
            })
            .collect()
    };
    let c_user = report.criterion.user_quantile;
    let c_att = report.criterion.attainment;
    let label = |role: Role| match role {
        Role::CvMean => "mean (validation)".to_string(),
        Role::TrainMean => "mean (training)".to_string(),
        Role::Min => "minimum".to_string(),
        Role::Max => "maximum".to_string(),
        Role::UserQuantile => format!("{}% quantile", c_user * 100.0),
        Role::AttainmentQuantile => format!("{}% quantile", c_att * 100.0),
    };
    for (idx, role) in Role::ALL.iter().enumerate() {
        let values = series(*role);
        let pts: Vec<(f64, f64)> = ks
            .iter()
            .zip(&values)
            .map(|(&k, &v)| (f.x.map(k as f64), f.y.map(v)))
            .collect();
        let data: Vec<String> = values.iter().map(|v| fmt_float(*v)).collect();
        let color = spec.color(*role);
        let width = if *role == Role::CvMean { 2.5 } else { 1.5 };
        svg.polyline(
            &pts,
            &format!(
                r#"class="series-{}" stroke="{color}" stroke-width="{width}" data-values="{}""#,
                role.class(),
                data.join(" ")
            ),
        );
        for (x, y) in &pts {
            svg.circle(*x, *y, 2.5, &format!(r#"fill="{color}""#));
        }
        let ly = f.top + 14.0 + 18.0 * idx as f64;
        let lx = f.right + 14.0;
        svg.line(lx, ly - 4.0, lx + 20.0, ly - 4.0, &format!(r#"stroke="{color}" stroke-width="{width}""#));
        svg.text(lx + 26.0, ly, &label(*role), "");
    }
    svg
}

/// Summary plot: the six per-K series, the tolerance line and, when a
/// qualifying dimension exists, a vertical marker at it.
pub fn summary_plot(report: &EvaluationReport, spec: &PlotSpec) -> String {
    summary_body(report, spec).finish()
}

/// Several summary plots in a grid, one row per learner and one column
/// per sample size. `panels[row][col]` may be absent.
pub fn summary_grid(panels: &[Vec<Option<(&str, &EvaluationReport)>>], spec: &PlotSpec) -> String {
    let rows = panels.len();
    let cols = panels.iter().map(|r| r.len()).max().unwrap_or(0);
    let mut outer = Svg::new(spec.width * cols as f64, spec.height * rows as f64);
    for (i, row) in panels.iter().enumerate() {
        for (j, panel) in row.iter().enumerate() {
            let Some((title, report)) = panel else { continue };
            let mut sub = spec.clone();
            sub.title = Some((*title).to_string());
            let body = summary_body(report, &sub).into_body();
            outer.raw(&format!(
                r#"<g class="panel" transform="translate({} {})">"#,
                c(spec.width * j as f64),
                c(spec.height * i as f64)
            ));
            outer.raw(body.trim_end());
            outer.raw("</g>");
        }
    }
    outer.finish()
}

/// Each column of the held-out loss matrix sorted ascending. Row r of the
/// result is the `(r+1)/N` empirical quantile.
pub fn sorted_columns(surface: &LossSurface) -> Vec<Vec<f64>> {
    (0..surface.n_k())
        .map(|j| {
            let mut col = surface.cv_column(j);
            col.sort_by(f64::total_cmp);
            col
        })
        .collect()
}

/// Sorted loss matrix as CSV: header `quantile,K=<k>...`, one line per
/// quantile level.
pub fn heatmap_csv(report: &EvaluationReport) -> String {
    let cols = sorted_columns(&report.surface);
    let n = report.surface.n();
    let mut s = String::from("quantile");
    for k in &report.surface.ks {
        let _ = write!(s, ",K={k}");
    }
    s.push('\n');
    for r in 0..n {
        s.push_str(&fmt_float((r + 1) as f64 / n as f64));
        for col in &cols {
            s.push(',');
            s.push_str(&fmt_float(col[r]));
        }
        s.push('\n');
    }
    s
}

/// Heatmap of the sorted loss matrix: x = K, y = quantile level, color =
/// loss.
pub fn heatmap_svg(report: &EvaluationReport, spec: &PlotSpec) -> String {
    let cols = sorted_columns(&report.surface);
    let ks = &report.surface.ks;
    let n = report.surface.n();
    let mut svg = Svg::new(spec.width, spec.height);
    let f = frame(spec, 0.0, ks.len() as f64, 0.0, 1.0);
    let cell_w = (f.right - f.left) / ks.len() as f64;
    let cell_h = (f.bottom - f.top) / n as f64;
    for (j, col) in cols.iter().enumerate() {
        for (r, &v) in col.iter().enumerate() {
            svg.rect(
                f.left + j as f64 * cell_w,
                f.bottom - (r + 1) as f64 * cell_h,
                cell_w,
                cell_h,
                &format!(
                    r#"class="heat-cell" fill="{}" data-k="{}" data-loss="{}""#,
                    ramp(v),
                    ks[j],
                    fmt_float(v)
                ),
            );
        }
    }
    svg.line(f.left, f.bottom, f.right, f.bottom, r#"stroke="black""#);
    svg.line(f.left, f.bottom, f.left, f.top, r#"stroke="black""#);
    let step = ks.len().div_ceil(10).max(1);
    for (j, k) in ks.iter().enumerate().step_by(step) {
        let x = f.left + (j as f64 + 0.5) * cell_w;
        svg.text(x, f.bottom + 17.0, &k.to_string(), r#"text-anchor="middle""#);
    }
    for q in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let y = f.y.map(q);
        svg.text(f.left - 7.0, y + 4.0, &format!("{q:.2}"), r#"text-anchor="end""#);
    }
    svg.text(
        (f.left + f.right) / 2.0,
        spec.height - 12.0,
        &spec.x_label,
        r#"text-anchor="middle""#,
    );
    let cy = (f.top + f.bottom) / 2.0;
    svg.text(
        16.0,
        cy,
        "Quantile",
        &format!(r#"text-anchor="middle" transform="rotate(-90 16 {})""#, c(cy)),
    );
    let lx = f.right + 30.0;
    for s in 0..=10 {
        let v = s as f64 / 10.0;
        let y = f.y.map(v);
        svg.rect(lx, y - (f.bottom - f.top) / 22.0, 16.0, (f.bottom - f.top) / 11.0, &format!(r#"fill="{}""#, ramp(v)));
        if s % 5 == 0 {
            svg.text(lx + 22.0, y + 4.0, &format!("{v:.1}"), "");
        }
    }
    svg.finish()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DotRow {
    pub id: String,
    pub k: usize,
    pub loss: f64,
    pub jitter: f64,
}

/// Long-format held-out losses with a horizontal jitter in [-0.4, 0.4]
/// drawn from the run seed.
pub fn dotplot_data(report: &EvaluationReport) -> Vec<DotRow> {
    let s = &report.surface;
    let mut rng = RngSpec::new(s.fold_plan.seed, Stream::Jitter).rng();
    let mut rows = Vec::with_capacity(s.n() * s.n_k());
    for (j, &k) in s.ks.iter().enumerate() {
        for i in 0..s.n() {
            rows.push(DotRow {
                id: s.row_ids[i].clone(),
                k,
                loss: s.cv_at(i, j),
                jitter: rng.gen_range(-0.4..=0.4),
            });
        }
    }
    rows
}

pub fn dotplot_csv(rows: &[DotRow]) -> String {
    let mut s = String::from("id,K,loss,jitter\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{}", r.id, r.k, fmt_float(r.loss), fmt_float(r.jitter));
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioSeries {
    /// `(K, Σ train / Σ cv)`; `None` where the held-out total is zero.
    pub points: Vec<(usize, Option<f64>)>,
    pub notes: Vec<String>,
}

pub fn train_validation_ratio(report: &EvaluationReport) -> RatioSeries {
    let s = &report.surface;
    let mut notes = Vec::new();
    let points = s
        .ks
        .iter()
        .enumerate()
        .map(|(j, &k)| {
            let tr: f64 = s.train_column(j).iter().sum();
            let cv: f64 = s.cv_column(j).iter().sum();
            if cv > 0.0 {
                (k, Some(tr / cv))
            } else {
                notes.push(format!("K={k}: total validation loss is zero; ratio omitted"));
                (k, None)
            }
        })
        .collect();
    RatioSeries { points, notes }
}

pub fn ratio_svg(series: &RatioSeries, spec: &PlotSpec) -> String {
    let mut svg = Svg::new(spec.width, spec.height);
    let ks: Vec<usize> = series.points.iter().map(|p| p.0).collect();
    let present: Vec<(usize, f64)> = series.points.iter().filter_map(|&(k, r)| r.map(|r| (k, r))).collect();
    let y_hi = present.iter().map(|p| p.1).fold(1.0, f64::max);
    let (lo, hi) = (*ks.first().unwrap_or(&0), *ks.last().unwrap_or(&0));
    let f = frame(spec, lo as f64, hi as f64, 0.0, y_hi);
    let mut ticks: Vec<f64> = (0..=4).map(|i| y_hi * i as f64 / 4.0).collect();
    ticks.dedup();
    let mut s = spec.clone();
    s.y_label = "Training / validation loss".into();
    axes(&mut svg, &f, &s, &ks, &ticks, None, None);
    let pts: Vec<(f64, f64)> = present.iter().map(|&(k, r)| (f.x.map(k as f64), f.y.map(r))).collect();
    if !pts.is_empty() {
        svg.polyline(&pts, r#"class="ratio-line" stroke="black" stroke-width="1.5""#);
    }
    for (&(k, r), (x, y)) in present.iter().zip(&pts) {
        svg.circle(
            *x,
            *y,
            3.0,
            &format!(r#"class="ratio-point" fill="black" data-k="{k}" data-value="{}""#, fmt_float(r)),
        );
    }
    for (i, note) in series.notes.iter().enumerate() {
        svg.text(f.left + 6.0, f.top + 14.0 * (i + 1) as f64, note, r#"class="note" fill="gray""#);
    }
    svg.finish()
}

/// Originals as solid lines with their reconstructions dotted, on one
/// panel. Only 1D data can be drawn.
pub fn reconstruction_plot_1d(
    data: &DataMatrix,
    codec: &Codec,
    row_ids: &[&str],
    spec: &PlotSpec,
) -> Result<String> {
    if data.grid().is_two_d() {
        return Err(ClareError::InvalidArgument(
            "reconstruction plots need 1D data; export 2D reconstructions as matrices instead".into(),
        ));
    }
    let mut pairs = Vec::with_capacity(row_ids.len());
    for id in row_ids {
        let i = data
            .row_ids()
            .iter()
            .position(|r| r == id)
            .ok_or_else(|| ClareError::InvalidArgument(format!("no row with id {id:?}")))?;
        let x = data.row(i).to_vec();
        let xhat = codec.reconstruct(&x)?;
        pairs.push((id.to_string(), x, xhat));
    }
    let (mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in pairs.iter().flat_map(|(_, x, xh)| x.iter().chain(xh)) {
        y_lo = y_lo.min(*v);
        y_hi = y_hi.max(*v);
    }
    let t = data.t();
    let mut s = spec.clone();
    s.x_label = "t".into();
    s.y_label = "X(t)".into();
    let f = frame(&s, 1.0, t as f64, y_lo, y_hi);
    let mut svg = Svg::new(s.width, s.height);
    let grid: Vec<usize> = (1..=t).collect();
    let ticks: Vec<f64> = (0..=4).map(|i| y_lo + (y_hi - y_lo) * i as f64 / 4.0).collect();
    axes(&mut svg, &f, &s, &grid, &ticks, None, None);
    const PALETTE: [&str; 8] = [
        "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf",
    ];
    for (idx, (id, x, xhat)) in pairs.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let to_pts = |v: &[f64]| -> Vec<(f64, f64)> {
            v.iter()
                .enumerate()
                .map(|(j, y)| (f.x.map((j + 1) as f64), f.y.map(*y)))
                .collect()
        };
        let id = escape(id);
        svg.polyline(
            &to_pts(x),
            &format!(r#"class="original" data-id="{id}" stroke="{color}" stroke-width="1.5""#),
        );
        svg.polyline(
            &to_pts(xhat),
            &format!(
                r#"class="reconstruction" data-id="{id}" stroke="{color}" stroke-width="1.5" stroke-dasharray="2,3""#
            ),
        );
    }
    Ok(svg.finish())
}

pub fn write_text(path: impl AsRef<Path>, contents: &str) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, contents).map_err(|e| ClareError::io(path, e))
}
