mod common;

use std::path::PathBuf;

use clare::evaluate::{summarize, EvaluationReport};
use clare::report::{
    dotplot_csv, dotplot_data, heatmap_csv, heatmap_svg, ratio_svg, reconstruction_plot_1d,
    sorted_columns, summary_grid, summary_plot, train_validation_ratio, PlotSpec,
};
use clare::evaluate::qualifying_dimension;
use clare::learners::UserCodec;
use clare::{
    compression_ratio, make_folds, run_clare, Criterion, DataMatrix, Grid, KGrid, LossSurface,
    PcaLearner, RunOptions, UserLearner,
};
use common::*;

fn toy_report(cv: Vec<f64>, train: Vec<f64>, n: usize, ks: Vec<usize>, tolerance: f64) -> EvaluationReport {
    let by = if ks.len() > 1 { ks[1] - ks[0] } else { 1 };
    let surface = LossSurface {
        cv,
        train,
        k_grid: KGrid::new(ks[0], *ks.last().unwrap(), by).unwrap(),
        ks,
        fold_plan: make_folds(n, n, 3).unwrap(),
        row_ids: (0..n).map(|i| format!("obs{i}")).collect(),
    };
    let criterion = Criterion::new(tolerance, 0.75, 0.5).unwrap();
    let summary = summarize(&surface, &criterion).unwrap();
    let qd = qualifying_dimension(&summary, &criterion);
    EvaluationReport {
        learner: "toy".into(),
        learner_config: Vec::new(),
        t: 20,
        criterion,
        summary,
        qualifying_dimension: qd,
        compression_ratio: qd.map(|q| compression_ratio(20, q).unwrap()),
        final_codec: None,
        notes: Vec::new(),
        surface,
    }
}

/// Four observations over K = 2, 4, 6 with losses falling in K.
fn fixed_report(tolerance: f64) -> EvaluationReport {
    let cv = vec![
        0.60, 0.20, 0.01, //
        0.50, 0.04, 0.02, //
        0.90, 0.03, 0.00, //
        0.40, 0.30, 0.03,
    ];
    let train: Vec<f64> = cv.iter().map(|v| v / 2.0).collect();
    toy_report(cv, train, 4, vec![2, 4, 6], tolerance)
}

fn parse(svg: &str) -> roxmltree::Document<'_> {
    roxmltree::Document::parse(svg).expect("well-formed SVG")
}

fn count_class(doc: &roxmltree::Document<'_>, class: &str) -> usize {
    doc.descendants().filter(|n| n.attribute("class") == Some(class)).count()
}

fn golden(name: &str, actual: &str) {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "golden", name].iter().collect();
    if std::env::var_os("CLARE_UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|_| panic!("missing {}; rerun with CLARE_UPDATE_GOLDEN=1", path.display()));
    assert!(expected == actual, "{name} differs from the golden file");
}

#[test]
fn summary_plot_with_qd_has_one_eps_line_and_one_marker() {
    let report = fixed_report(0.05);
    assert_eq!(report.qualifying_dimension, Some(6));
    let svg = summary_plot(&report, &PlotSpec::default());
    let doc = parse(&svg);
    assert_eq!(count_class(&doc, "eps-line"), 1);
    assert_eq!(count_class(&doc, "qd-marker"), 1);
    let marker = doc.descendants().find(|n| n.attribute("class") == Some("qd-marker")).unwrap();
    assert_eq!(marker.attribute("data-k"), Some("6"));
}

#[test]
fn summary_plot_without_qd_keeps_eps_line() {
    let report = fixed_report(0.001);
    assert_eq!(report.qualifying_dimension, None);
    let doc_text = summary_plot(&report, &PlotSpec::default());
    let doc = parse(&doc_text);
    assert_eq!(count_class(&doc, "eps-line"), 1);
    assert_eq!(count_class(&doc, "qd-marker"), 0);
}

#[test]
fn summary_series_carry_report_values() {
    let report = fixed_report(0.05);
    let svg = summary_plot(&report, &PlotSpec::default());
    let doc = parse(&svg);
    let series = doc
        .descendants()
        .find(|n| n.attribute("class") == Some("series-cv-mean"))
        .expect("cv mean series");
    let values: Vec<f64> = series
        .attribute("data-values")
        .unwrap()
        .split(' ')
        .map(|v| v.parse().unwrap())
        .collect();
    let want: Vec<f64> = report.summary.iter().map(|r| r.mean_cv).collect();
    assert_eq!(values, want);
    let polylines = doc.descendants().filter(|n| n.has_tag_name("polyline")).count();
    assert_eq!(polylines, 6);
}

#[test]
fn summary_plot_matches_golden_file() {
    golden("summary.svg", &summary_plot(&fixed_report(0.05), &PlotSpec::default()));
}

#[test]
fn summary_grid_is_well_formed() {
    let a = fixed_report(0.05);
    let b = fixed_report(0.001);
    let panels = vec![vec![Some(("pca, n=4", &a)), None], vec![Some(("dwt, n=4", &b)), Some(("dwt, n=2", &a))]];
    let svg = summary_grid(&panels, &PlotSpec::default());
    let doc = parse(&svg);
    assert_eq!(count_class(&doc, "eps-line"), 3);
    assert_eq!(count_class(&doc, "qd-marker"), 2);
}

#[test]
fn heatmap_columns_sorted_and_permuted() {
    let report = fixed_report(0.05);
    let cols = sorted_columns(&report.surface);
    for (j, col) in cols.iter().enumerate() {
        assert!(col.windows(2).all(|w| w[0] <= w[1]));
        let mut orig = report.surface.cv_column(j);
        orig.sort_by(f64::total_cmp);
        assert_eq!(col, &orig);
    }
    let doc_text = heatmap_svg(&report, &PlotSpec::default());
    let doc = parse(&doc_text);
    assert_eq!(count_class(&doc, "heat-cell"), 12);
    let csv = heatmap_csv(&report);
    assert_eq!(csv.lines().count(), 1 + 4);
}

#[test]
fn heatmap_two_by_two_by_hand() {
    let report = toy_report(vec![0.5, 0.1, 0.2, 0.3], vec![0.0; 4], 2, vec![1, 2], 0.05);
    assert_eq!(sorted_columns(&report.surface), vec![vec![0.2, 0.5], vec![0.1, 0.3]]);
}

#[test]
fn dotplot_rows_match_surface() {
    let report = fixed_report(0.05);
    let rows = dotplot_data(&report);
    assert_eq!(rows.len(), 4 * 3);
    for r in &rows {
        let i = report.surface.row_ids.iter().position(|id| *id == r.id).unwrap();
        let j = report.surface.ks.iter().position(|&k| k == r.k).unwrap();
        assert_eq!(r.loss, report.surface.cv_at(i, j));
        assert!((-0.4..=0.4).contains(&r.jitter));
    }
    assert_eq!(rows, dotplot_data(&report));
    assert_eq!(dotplot_csv(&rows).lines().count(), 13);
}

#[test]
fn ratio_cases() {
    let same = toy_report(vec![0.2, 0.4, 0.6, 0.8], vec![0.2, 0.4, 0.6, 0.8], 2, vec![1, 2], 0.05);
    let r = train_validation_ratio(&same);
    assert!(r.points.iter().all(|p| p.1 == Some(1.0)));

    let half = fixed_report(0.05);
    for (_, ratio) in train_validation_ratio(&half).points {
        assert!((ratio.unwrap() - 0.5).abs() < 1e-15);
    }

    let lossless = toy_report(vec![0.3, 0.0, 0.1, 0.0], vec![0.1, 0.0, 0.1, 0.0], 2, vec![1, 2], 0.05);
    let r = train_validation_ratio(&lossless);
    assert_eq!(r.points[1], (2, None));
    assert_eq!(r.notes.len(), 1);
    let doc_text = ratio_svg(&r, &PlotSpec::default());
    let doc = parse(&doc_text);
    assert_eq!(count_class(&doc, "ratio-point"), 1);
    assert_eq!(count_class(&doc, "note"), 1);
}

struct Identity;

impl UserCodec for Identity {
    fn encode(&self, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }
    fn decode(&self, z: &[f64]) -> Vec<f64> {
        z.to_vec()
    }
}

fn identity_codec(data: &DataMatrix) -> clare::Codec {
    use clare::Learner;
    UserLearner::new("identity", |_: &DataMatrix, _| Ok(Box::new(Identity) as Box<dyn UserCodec>))
        .fit(data, data.t(), 0)
        .unwrap()
}

fn points(node: roxmltree::Node<'_, '_>) -> String {
    node.attribute("points").unwrap().to_string()
}

#[test]
fn reconstruction_plot_structure() {
    let data = low_rank(10, 20, 2, 4);
    let codec = identity_codec(&data);
    let ids: Vec<String> = (0..8).map(|i| i.to_string()).collect();
    let ids: Vec<&str> = ids.iter().map(String::as_str).collect();
    let svg = reconstruction_plot_1d(&data, &codec, &ids, &PlotSpec::default()).unwrap();
    let doc = parse(&svg);
    let lines: Vec<_> = doc.descendants().filter(|n| n.has_tag_name("polyline")).collect();
    assert_eq!(lines.len(), 16);
    for pair in lines.chunks(2) {
        assert_eq!(pair[0].attribute("class"), Some("original"));
        assert_eq!(pair[1].attribute("class"), Some("reconstruction"));
        assert_eq!(points(pair[0]), points(pair[1]));
    }
}

#[test]
fn reconstruction_plot_matches_golden_file() {
    let values: Vec<f64> = (0..24).map(|i| ((i * 7 % 11) as f64 - 5.0) / 3.0).collect();
    let data = DataMatrix::from_rows(values, 3, Grid::one_d(8).unwrap()).unwrap();
    let report = run_clare(
        &data,
        &PcaLearner,
        KGrid::new(1, 1, 1).unwrap(),
        &make_folds(3, 3, 0).unwrap(),
        Criterion::new(0.99, 0.5, 0.5).unwrap(),
        &RunOptions { threads: 1, ..Default::default() },
    )
    .unwrap();
    let codec = report.final_codec.unwrap();
    let svg = reconstruction_plot_1d(&data, &codec, &["0", "2"], &PlotSpec::default()).unwrap();
    golden("reconstruction.svg", &svg);
}

#[test]
fn reconstruction_plot_errors() {
    let data = low_rank(4, 6, 1, 1);
    let codec = identity_codec(&data);
    assert!(reconstruction_plot_1d(&data, &codec, &["99"], &PlotSpec::default()).is_err());

    let image = DataMatrix::from_rows(vec![0.5; 2 * 16], 2, Grid::two_d(4, 4).unwrap()).unwrap();
    let codec = identity_codec(&image);
    let err = reconstruction_plot_1d(&image, &codec, &["0"], &PlotSpec::default()).unwrap_err();
    assert!(err.to_string().contains("1D"));
}

#[test]
fn default_colors_follow_the_legend() {
    use clare::report::Role;
    let spec = PlotSpec::default();
    assert_eq!(spec.color(Role::CvMean), "#e6b800");
    assert_eq!(spec.color(Role::AttainmentQuantile), "#c8c8c8");
    for role in Role::ALL {
        assert!(!spec.color(role).is_empty());
    }
}
