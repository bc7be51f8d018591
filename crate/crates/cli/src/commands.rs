use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use rfne_core::eval::{
    fit_linear, sweep, EvalReport, DEFAULT_K_GRID, DEFAULT_RIDGE, DEFAULT_TY_GRID,
};
use rfne_core::pipeline::{
    default_test_count, generate_synthetic, load_dataset_mapped, load_model, prepare, save_dataset,
    save_model, split, summary_json, title_length_profile, ColumnMapping, DataFormat, Dataset,
    ModelBundle, SplitMode, SplitSpec, SynthConfig,
};
use rfne_core::{digitize_all, train_refinement, Error, RefineConfig, FEATURE_NAMES};

use crate::{
    Command, DataArgs, EvaluateArgs, ImportanceArgs, ModelArgs, PredictArgs, SplitArgs, SweepArgs,
    SynthArgs, TextLengthArgs, TrainArgs,
};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_MODEL: u8 = 4;

#[derive(Debug)]
pub struct CliError {
    pub error: Error,
    pub code: u8,
}

type CliResult<T = ()> = Result<T, CliError>;

/// Usage errors for bad settings, data errors for everything else.
fn data_err(error: Error) -> CliError {
    let code = if matches!(error, Error::InvalidConfig(_)) {
        EXIT_USAGE
    } else {
        EXIT_DATA
    };
    CliError { error, code }
}

fn model_err(error: Error) -> CliError {
    CliError {
        error,
        code: EXIT_MODEL,
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError {
        error: Error::InvalidConfig(msg.into()),
        code: EXIT_USAGE,
    }
}

fn io_err(e: std::io::Error) -> CliError {
    data_err(Error::Io(e))
}

pub fn run(command: Command) -> CliResult {
    match command {
        Command::Synth(a) => synth(a),
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Importance(a) => importance(a),
        Command::Sweep(a) => run_sweep(a),
        Command::TextLength(a) => text_length(a),
    }
}

fn load(args: &DataArgs) -> CliResult<Dataset> {
    let format = args
        .format
        .unwrap_or_else(|| DataFormat::from_path(&args.data));
    let mapping = match &args.column_map {
        Some(p) => ColumnMapping::load(p).map_err(data_err)?,
        None => ColumnMapping::default(),
    };
    let (data, warnings) = load_dataset_mapped(&args.data, format, &mapping).map_err(data_err)?;
    if !warnings.is_empty() {
        eprintln!("warning: unparsable values loaded as absent: {warnings}");
    }
    Ok(data)
}

fn refine_config(m: &ModelArgs, seed: u64) -> CliResult<RefineConfig> {
    let mut config = match m.preset.as_str() {
        "default" => RefineConfig::default(),
        "accurate" => RefineConfig::accurate(),
        "thresholded" => RefineConfig::thresholded(),
        "fast" => RefineConfig::fast(),
        other => return Err(usage(format!("unknown preset `{other}`"))),
    };
    config.seed = seed;
    if let Some(k) = m.k {
        config.k = k;
    }
    if let Some(t_y) = m.ty {
        config.t_y = t_y;
    }
    if let Some(n) = m.trees {
        config.base.tree_count = n;
    }
    if let Some(n) = m.min_leaf {
        config.base.tree.min_samples_leaf = n;
    }
    if let Some(n) = m.features_per_split {
        config.base.tree.features_per_split = n;
    }
    if m.max_depth.is_some() {
        config.base.tree.max_depth = m.max_depth;
    }
    if let Some(n) = m.boost_rounds {
        config.boost.rounds = n;
    }
    if m.no_bootstrap {
        config.base.bootstrap = false;
    }
    config.validate(FEATURE_NAMES.len()).map_err(data_err)?;
    Ok(config)
}

fn split_spec(args: &SplitArgs, n: usize) -> SplitSpec {
    SplitSpec {
        mode: args.split,
        test_count: args.test_count.unwrap_or_else(|| default_test_count(n)),
        seed: args.seed,
    }
}

fn print_report(title: &str, r: &EvalReport) {
    println!("{title}");
    println!("  {:<14}{:>14}", "metric", "value");
    let rho_note = if r.rho_undefined { " (undefined)" } else { "" };
    println!("  {:<14}{:>14.6}{rho_note}", "spearman_rho", r.spearman_rho);
    println!("  {:<14}{:>14.6}", "mse", r.mse);
    println!("  {:<14}{:>14.6}", "mae", r.mae);
    println!("  {:<14}{:>14}", "n", r.n);
}

fn create(path: &Path) -> CliResult<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path).map_err(io_err)?))
}

fn synth(a: SynthArgs) -> CliResult {
    let config = SynthConfig {
        n: a.n,
        seed: a.seed,
        tail_frac: a.tail_frac,
        tail_scale: a.tail_scale,
        noise: a.noise,
        ..Default::default()
    };
    let data = generate_synthetic(&config).map_err(data_err)?;
    let format = a.format.unwrap_or_else(|| DataFormat::from_path(&a.out));
    save_dataset(&data, &a.out, format).map_err(data_err)?;
    println!("wrote {} records to {}", data.len(), a.out.display());
    Ok(())
}

fn train(a: TrainArgs) -> CliResult {
    let data = load(&a.data)?;
    let config = refine_config(&a.model, a.split.seed)?;
    let spec = split_spec(&a.split, data.len());
    let (train_set, test_set) = split(&data, &spec).map_err(data_err)?;
    let (maps, tt) = prepare(&train_set, &test_set, a.model.text_mode).map_err(data_err)?;

    let start = Instant::now();
    let model = train_refinement(&tt.x_train, &tt.y_train, &config).map_err(data_err)?;
    let train_seconds = start.elapsed().as_secs_f64();
    let report =
        EvalReport::compute(&model.predict_all(&tt.x_test), &tt.y_test).map_err(data_err)?;

    let mode_name = match spec.mode {
        SplitMode::RandomSetA => "random",
        SplitMode::TimeOrderSetB => "time",
    };
    println!(
        "split {mode_name}: {} train, {} test; k = {}, t_y = {}, {:.2}s",
        train_set.len(),
        test_set.len(),
        config.k,
        config.t_y,
        train_seconds
    );
    println!(
        "  {:>9} {:>14} {:>12} {:>9}",
        "iteration", "train_mse", "threshold", "extreme"
    );
    for e in model.training_trace() {
        let flag = if e.degenerate { "  degenerate" } else { "" };
        println!(
            "  {:>9} {:>14.6} {:>12.6} {:>9}{flag}",
            e.iteration, e.train_mse, e.threshold, e.extreme_count
        );
    }
    print_report("test", &report);

    if a.linear_baseline {
        let linear = fit_linear(&tt.x_train, &tt.y_train, DEFAULT_RIDGE).map_err(data_err)?;
        let r =
            EvalReport::compute(&linear.predict_all(&tt.x_test), &tt.y_test).map_err(data_err)?;
        print_report("linear baseline", &r);
    }

    let bundle = ModelBundle {
        model,
        maps,
        mode: a.model.text_mode,
    };
    if let Some(path) = &a.model_out {
        save_model(&bundle, path).map_err(data_err)?;
        println!("model saved to {}", path.display());
    }
    if let Some(path) = &a.summary_out {
        fs::write(path, summary_json(&bundle).map_err(data_err)?).map_err(io_err)?;
    }
    Ok(())
}

fn predict(a: PredictArgs) -> CliResult {
    let bundle = load_model(&a.model).map_err(model_err)?;
    let data = load(&a.data)?;
    let x = digitize_all(&data.records, &bundle.maps, bundle.mode);
    let predictions = bundle.model.predict_all(&x);
    let mut w = create(&a.out)?;
    writeln!(w, "id,prediction").map_err(io_err)?;
    for (i, (r, p)) in data.records.iter().zip(&predictions).enumerate() {
        let id = r.pid.map_or_else(|| i.to_string(), |pid| pid.to_string());
        writeln!(w, "{id},{p}").map_err(io_err)?;
    }
    w.flush().map_err(io_err)?;
    println!(
        "wrote {} predictions to {}",
        predictions.len(),
        a.out.display()
    );
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> CliResult {
    let bundle = load_model(&a.model).map_err(model_err)?;
    let data = load(&a.data)?;
    let labels = data.labels().map_err(data_err)?;
    let x = digitize_all(&data.records, &bundle.maps, bundle.mode);
    let report = EvalReport::compute(&bundle.model.predict_all(&x), &labels).map_err(data_err)?;
    print_report(
        &format!(
            "{} (k = {}, t_y = {})",
            a.data.data.display(),
            bundle.config().k,
            bundle.config().t_y
        ),
        &report,
    );
    if let Some(path) = &a.csv {
        let mut w = create(path)?;
        writeln!(w, "rho,mse,mae,n").map_err(io_err)?;
        writeln!(
            w,
            "{},{},{},{}",
            report.spearman_rho, report.mse, report.mae, report.n
        )
        .map_err(io_err)?;
        w.flush().map_err(io_err)?;
    }
    Ok(())
}

fn importance(a: ImportanceArgs) -> CliResult {
    let bundle = load_model(&a.model).map_err(model_err)?;
    println!("feature,importance");
    for (name, v) in FEATURE_NAMES
        .iter()
        .zip(bundle.model.base().feature_importance())
    {
        println!("{name},{v:.6}");
    }
    Ok(())
}

fn parse_grid(text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("bad grid value `{}`", v.trim())))
        })
        .collect()
}

fn run_sweep(a: SweepArgs) -> CliResult {
    let data = load(&a.data)?;
    let config = refine_config(&a.model, a.split.seed)?;
    let (train_set, test_set) =
        split(&data, &split_spec(&a.split, data.len())).map_err(data_err)?;
    let (_, tt) = prepare(&train_set, &test_set, a.model.text_mode).map_err(data_err)?;
    let grid = match &a.grid {
        Some(g) => parse_grid(g)?,
        None => match a.param {
            rfne_core::SweepParam::K => DEFAULT_K_GRID.iter().map(|&k| k as f64).collect(),
            rfne_core::SweepParam::Ty => DEFAULT_TY_GRID.to_vec(),
        },
    };
    let result = sweep(&tt, &config, a.param, &grid).map_err(data_err)?;
    result.write_csv(create(&a.out)?).map_err(data_err)?;
    if let Some(path) = &a.table {
        result.write_table(create(path)?).map_err(data_err)?;
    }
    result
        .write_table(std::io::stdout().lock())
        .map_err(data_err)?;
    Ok(())
}

fn text_length(a: TextLengthArgs) -> CliResult {
    let data = load(&a.data)?;
    let mut w = create(&a.out)?;
    writeln!(w, "length,count,mean_label").map_err(io_err)?;
    for b in title_length_profile(&data, a.text_mode) {
        writeln!(w, "{},{},{}", b.length, b.count, b.mean_label).map_err(io_err)?;
    }
    w.flush().map_err(io_err)?;
    Ok(())
}
