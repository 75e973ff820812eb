use std::error::Error;
use std::fmt::Write as _;
use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;

use clare::clre::{load_binary, read_raw, save_binary, write_raw, RawMatrix};
use clare::data::{load_csv, read_csv_table};
use clare::evaluate::{fmt_float, sample_size_experiment, write_report, EvaluationReport, FoldPlan};
use clare::report::{
    dotplot_csv, dotplot_data, heatmap_csv, heatmap_svg, ratio_svg, reconstruction_plot_1d,
    summary_grid, summary_plot, train_validation_ratio, write_text, PlotSpec,
};
use clare::{
    make_folds, run_clare, AeLearner, ClareError, Codec, DataMatrix, DwtLearner, Learner,
    PcaLearner, RunOptions,
};

use crate::config::{Folds, Format, LearnerKind, RawConfig, RunConfig};
use crate::{ApplyArgs, Direction, RunArgs};

type Result<T> = std::result::Result<T, Box<dyn Error>>;

const EXIT_NO_QD: u8 = 2;

type RowMap = fn(&Codec, &[f64]) -> clare::Result<Vec<f64>>;

fn load_config(args: &RunArgs) -> Result<RunConfig> {
    let mut raw = RawConfig::defaults();
    if let Some(path) = &args.config {
        raw.merge_file(path)?;
    }
    let mut flags = Vec::new();
    if let Some(v) = &args.data {
        flags.push(format!("data={}", v.display()));
    }
    if let Some(v) = &args.out {
        flags.push(format!("out={}", v.display()));
    }
    if let Some(v) = &args.learn {
        flags.push(format!("learn={v}"));
    }
    if let Some(v) = args.seed {
        flags.push(format!("seed={v}"));
    }
    if let Some(v) = args.threads {
        flags.push(format!("threads={v}"));
    }
    if args.verbose {
        flags.push("verbose=true".into());
    }
    for pair in flags.iter().chain(&args.set) {
        raw.merge_override(pair)?;
    }
    Ok(RunConfig::from_raw(&raw)?)
}

fn is_clre(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("clre"))
}

fn load_data(cfg: &RunConfig) -> Result<DataMatrix> {
    let path = cfg
        .data
        .as_ref()
        .ok_or("no data file configured; set `data` in the config or pass --data")?;
    let binary = match cfg.format {
        Format::Auto => is_clre(path),
        Format::Csv => false,
        Format::Clre => true,
    };
    if !binary {
        return Ok(load_csv(path, cfg.grid, false)?);
    }
    let m = load_binary(path)?;
    match cfg.grid {
        Some(g) if g != m.grid() => {
            if g.len() != m.t() {
                return Err(ClareError::Shape {
                    context: format!("{} width vs grid {g}", path.display()),
                    expected: g.len(),
                    actual: m.t(),
                }
                .into());
            }
            Ok(DataMatrix::new(m.values().to_vec(), m.n(), g, m.row_ids().to_vec())?)
        }
        _ => Ok(m),
    }
}

fn build_learner(kind: LearnerKind, cfg: &RunConfig) -> Box<dyn Learner> {
    match kind {
        LearnerKind::Pca => Box::new(PcaLearner),
        LearnerKind::Dwt => Box::new(DwtLearner { levels: cfg.dwt_levels, two_d: false }),
        LearnerKind::Dwt2d => Box::new(DwtLearner { levels: cfg.dwt_levels, two_d: true }),
        LearnerKind::Ae => Box::new(AeLearner::new(cfg.ae.clone())),
    }
}

fn run_options(cfg: &RunConfig) -> RunOptions {
    let progress: Option<Arc<clare::evaluate::ProgressFn>> = if cfg.verbose {
        Some(Arc::new(|p: &clare::evaluate::Progress| {
            eprintln!(
                "K={} fold {}/{} {:.1} ms",
                p.k,
                p.fold + 1,
                p.n_folds,
                p.elapsed.as_secs_f64() * 1e3
            );
        }))
    } else {
        None
    };
    RunOptions { threads: cfg.threads, progress, skip_refit: false }
}

fn fold_plan(cfg: &RunConfig, n: usize) -> Result<FoldPlan> {
    let k = match cfg.folds {
        Folds::K(k) => k,
        Folds::Loo => n,
    };
    Ok(make_folds(n, k, cfg.seed)?)
}

fn make_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| format!("cannot create output directory {}: {e}", dir.display()).into())
}

/// Report files plus every plot for one evaluation.
fn write_outputs(report: &EvaluationReport, data: &DataMatrix, dir: &Path) -> Result<()> {
    make_dir(dir)?;
    write_report(report, dir)?;
    let spec = PlotSpec {
        title: Some(report.learner.clone()),
        ..PlotSpec::default()
    };
    write_text(dir.join("summary.svg"), &summary_plot(report, &spec))?;
    write_text(dir.join("heatmap.svg"), &heatmap_svg(report, &spec))?;
    write_text(dir.join("heatmap.csv"), &heatmap_csv(report))?;
    write_text(dir.join("dotplot.csv"), &dotplot_csv(&dotplot_data(report)))?;
    write_text(dir.join("ratio.svg"), &ratio_svg(&train_validation_ratio(report), &spec))?;
    if let Some(codec) = &report.final_codec {
        let recon: Vec<f64> = data
            .rows()
            .map(|x| codec.reconstruct(x))
            .collect::<clare::Result<Vec<_>>>()?
            .concat();
        let recon = DataMatrix::new(recon, data.n(), data.grid(), data.row_ids().to_vec())?;
        save_binary(&recon, dir.join("reconstruction.clre"))?;
        if !data.grid().is_two_d() {
            let ids: Vec<&str> = data.row_ids().iter().take(4).map(String::as_str).collect();
            write_text(
                dir.join("reconstruction.svg"),
                &reconstruction_plot_1d(data, codec, &ids, &spec)?,
            )?;
        }
    }
    Ok(())
}

fn describe(report: &EvaluationReport) -> String {
    match (report.qualifying_dimension, report.compression_ratio) {
        (Some(qd), Some(ratio)) => format!("qualifying dimension {qd}, compression ratio {ratio}"),
        _ => "criterion not met within grid".into(),
    }
}

fn exit_for(report: &EvaluationReport) -> ExitCode {
    if report.qualifying_dimension.is_some() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_NO_QD)
    }
}

pub fn evaluate(args: &RunArgs) -> Result<ExitCode> {
    let cfg = load_config(args)?;
    let [kind] = cfg.learn[..] else {
        return Err("evaluate takes exactly one learner; use `compare` for several".into());
    };
    let data = load_data(&cfg)?;
    let plan = fold_plan(&cfg, data.n())?;
    let learner = build_learner(kind, &cfg);
    let report = run_clare(&data, learner.as_ref(), cfg.k_grid, &plan, cfg.criterion, &run_options(&cfg))?;
    write_outputs(&report, &data, &cfg.out)?;
    println!("learner: {}", report.learner);
    println!("{}", describe(&report));
    println!("output: {}", cfg.out.display());
    Ok(exit_for(&report))
}

pub fn compare(args: &RunArgs) -> Result<ExitCode> {
    let cfg = load_config(args)?;
    if cfg.learn.len() < 2 {
        return Err("compare needs at least two learners, e.g. `learn = pca,dwt`".into());
    }
    let data = load_data(&cfg)?;
    let plan = fold_plan(&cfg, data.n())?;
    let options = run_options(&cfg);
    make_dir(&cfg.out)?;
    let mut entries = Vec::new();
    for (pos, &kind) in cfg.learn.iter().enumerate() {
        let learner = build_learner(kind, &cfg);
        let report = run_clare(&data, learner.as_ref(), cfg.k_grid, &plan, cfg.criterion, &options)
            .map_err(|e| format!("learner {}: {e}", learner.name()))?;
        let dir = cfg.out.join(format!("{}_{}", pos + 1, report.learner));
        write_outputs(&report, &data, &dir)?;
        entries.push((pos, report));
    }
    // Stable sort keeps listing order among ties; absent qd ranks last.
    let mut ranking: Vec<&(usize, EvaluationReport)> = entries.iter().collect();
    ranking.sort_by_key(|(_, r)| r.qualifying_dimension.unwrap_or(usize::MAX));

    let mut csv = String::from("rank,position,learner,qualifying_dimension,compression_ratio\n");
    for (rank, (pos, r)) in ranking.iter().enumerate() {
        let qd = r.qualifying_dimension.map_or("none".into(), |q| q.to_string());
        let ratio = r.compression_ratio.map_or("none".into(), |c| c.to_string());
        writeln!(csv, "{},{},{},{qd},{ratio}", rank + 1, pos + 1, r.learner).unwrap();
        println!("{}. {} ({})", rank + 1, r.learner, describe(r));
    }
    write_text(cfg.out.join("ranking.csv"), &csv)?;
    Ok(exit_for(&ranking[0].1))
}

pub fn subsample(args: &RunArgs, sizes: &[usize]) -> Result<ExitCode> {
    let cfg = load_config(args)?;
    let mut names: Vec<String> = Vec::new();
    let learners: Vec<Box<dyn Learner>> = cfg.learn.iter().map(|&k| build_learner(k, &cfg)).collect();
    for l in &learners {
        if names.contains(&l.name()) {
            return Err(format!("learner {} listed twice", l.name()).into());
        }
        names.push(l.name());
    }
    let data = load_data(&cfg)?;
    let refs: Vec<&dyn Learner> = learners.iter().map(|l| l.as_ref()).collect();
    let reports = sample_size_experiment(
        &data,
        sizes,
        &refs,
        cfg.k_grid,
        cfg.criterion,
        cfg.seed,
        &run_options(&cfg),
    )?;
    make_dir(&cfg.out)?;
    for r in &reports {
        let dir = cfg.out.join(format!("n{}_{}", r.n, r.learner));
        let rows: Vec<usize> = r
            .report
            .surface
            .row_ids
            .iter()
            .map(|id| data.row_ids().iter().position(|d| d == id).expect("subsample ids come from the data"))
            .collect();
        write_outputs(&r.report, &data.select_rows(&rows)?, &dir)?;
        println!("n={} {}: {}", r.n, r.learner, describe(&r.report));
    }
    let titles: Vec<String> = reports.iter().map(|r| format!("{}, N={}", r.learner, r.n)).collect();
    let panels: Vec<Vec<Option<(&str, &EvaluationReport)>>> = names
        .iter()
        .map(|name| {
            reports
                .iter()
                .zip(&titles)
                .filter(|(r, _)| &r.learner == name)
                .map(|(r, t)| Some((t.as_str(), &r.report)))
                .collect()
        })
        .collect();
    write_text(cfg.out.join("summary_grid.svg"), &summary_grid(&panels, &PlotSpec::default()))?;
    Ok(ExitCode::SUCCESS)
}

fn read_matrix(path: &Path) -> Result<RawMatrix> {
    if is_clre(path) {
        return Ok(read_raw(path)?);
    }
    let table = read_csv_table(path, false)?;
    Ok(RawMatrix { rows: table.rows, cols: table.cols, grid: None, values: table.values })
}

fn write_matrix(path: &Path, m: &RawMatrix) -> Result<()> {
    if is_clre(path) {
        return Ok(write_raw(path, m)?);
    }
    let mut out = String::new();
    for i in 0..m.rows {
        let row: Vec<String> = m.row(i).iter().map(|v| fmt_float(*v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    Ok(write_text(path, &out)?)
}

pub fn apply(args: &ApplyArgs) -> Result<ExitCode> {
    let codec = Codec::load(&args.codec)?;
    let input = read_matrix(&args.data)?;
    let expected = match args.direction {
        Direction::Decode => codec.k(),
        Direction::Encode | Direction::Roundtrip => codec.t(),
    };
    if input.cols != expected {
        return Err(ClareError::Shape {
            context: format!("{} columns vs codec", args.data.display()),
            expected,
            actual: input.cols,
        }
        .into());
    }
    let (cols, grid, map): (usize, _, RowMap) = match args.direction {
        Direction::Encode => (codec.k(), None, |c, x| c.encode(x)),
        Direction::Decode => (codec.t(), Some(codec.grid()), |c, z| c.decode(z)),
        Direction::Roundtrip => (codec.t(), Some(codec.grid()), |c, x| c.reconstruct(x)),
    };
    let mut values = Vec::with_capacity(input.rows * cols);
    for i in 0..input.rows {
        values.extend(map(&codec, input.row(i))?);
    }
    let output = RawMatrix { rows: input.rows, cols, grid, values };
    write_matrix(&args.out, &output)?;

    if args.direction == Direction::Roundtrip {
        let mut csv = String::from("row,loss\n");
        let mut total = 0.0;
        for i in 0..input.rows {
            let loss = codec.loss(input.row(i))?;
            total += loss;
            writeln!(csv, "{i},{}", fmt_float(loss)).unwrap();
        }
        let losses = args.out.with_extension("losses.csv");
        write_text(&losses, &csv)?;
        println!("mean loss {:.6} over {} rows; losses in {}", total / input.rows as f64, input.rows, losses.display());
    }
    println!("wrote {} x {} matrix to {}", output.rows, output.cols, args.out.display());
    Ok(ExitCode::SUCCESS)
}
