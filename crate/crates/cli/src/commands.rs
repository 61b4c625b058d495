use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;
use serde_json::Value;

use allocwise_api::{
    analyze_matrix, from_value, parse_json, run_forecast, with_penalty_rate, AnalyzeResponse, ErrorCode,
    ForecastResponse, ServiceConfig,
};
use allocwise_core::ahp::{AhpSettings, JudgmentMatrix};
use allocwise_core::forecast::{TimeSeries, TrainingConfig};
use allocwise_core::store::{
    bundled_datasets, bundled_examples, id_from_path, import_csv, Dataset, DatasetKind, Scenario,
    ScenarioAllocation, Store, StoreError,
};

use crate::config::{ConfigError, FileConfig};
use crate::{Cli, Command, Exit, Failure, ForecastArgs, ServeArgs};

pub const DEFAULT_STORE_DIR: &str = "allocwise-store";

struct Context {
    json: bool,
    store_dir: PathBuf,
    ahp: AhpSettings,
    file: FileConfig,
}

impl Context {
    /// Opens the store only if it already exists, so read-only commands on
    /// bundled ids leave no directory behind.
    fn existing_store(&self) -> Result<Option<Store>, Failure> {
        if self.store_dir.is_dir() {
            Ok(Some(Store::open(&self.store_dir)?))
        } else {
            Ok(None)
        }
    }

    fn emit<T: Serialize>(&self, value: &T, human: impl FnOnce(&mut String)) {
        if self.json {
            println!("{}", serde_json::to_string_pretty(value).expect("response types serialize"));
        } else {
            let mut out = String::new();
            human(&mut out);
            print!("{out}");
        }
    }
}

pub fn run(cli: Cli) -> Result<Exit, Failure> {
    let file = FileConfig::load(cli.config.as_deref()).map_err(|e| match e {
        ConfigError::Read(..) => Failure::io(e.to_string()),
        ConfigError::Parse(..) => Failure::invalid(ErrorCode::InvalidRequest, e.to_string()),
    })?;
    let defaults = AhpSettings::default();
    let ctx = Context {
        json: cli.json,
        store_dir: cli
            .store
            .or_else(|| file.store_dir.clone())
            .unwrap_or_else(|| PathBuf::from(DEFAULT_STORE_DIR)),
        ahp: AhpSettings {
            tolerance: cli.tolerance.or(file.ahp.tolerance).unwrap_or(defaults.tolerance),
            max_iterations: cli
                .max_iterations
                .or(file.ahp.max_iterations)
                .unwrap_or(defaults.max_iterations),
            ..defaults
        },
        file,
    };
    match cli.command {
        Command::Check { matrix, strict_scale } => check(&ctx, &matrix, strict_scale),
        Command::Weights { matrix } => weights(&ctx, &matrix),
        Command::Allocate { scenario, penalty_rate } => allocate(&ctx, &scenario, penalty_rate),
        Command::Forecast(args) => forecast(&ctx, args),
        Command::Import { file, kind, id } => import(&ctx, &file, &kind, id),
        Command::Serve(args) => serve(&ctx, args),
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure::io(format!("cannot read {}: {e}", path.display())))
}

/// A matrix file holds `{"criteria": [...], "entries": [[...]]}` or a bare
/// array of rows.
fn read_matrix(path: &Path) -> Result<JudgmentMatrix, Failure> {
    let value: Value = parse_json(&read_file(path)?, ErrorCode::InvalidMatrix)?;
    let value = match value {
        Value::Array(_) => serde_json::json!({ "entries": value }),
        v => v,
    };
    Ok(from_value(value, ErrorCode::InvalidMatrix)?)
}

fn analysis(ctx: &Context, path: &Path, strict_scale: bool) -> Result<AnalyzeResponse, Failure> {
    let m = read_matrix(path)?;
    let r = analyze_matrix(&m, strict_scale, &ctx.ahp)?;
    if !ctx.json {
        for w in &r.warnings {
            eprintln!("warning: {w}");
        }
    }
    Ok(r)
}

fn write_weights(out: &mut String, r: &AnalyzeResponse) {
    out.push_str(&format!("{:<10} {:>10}\n", "criterion", "weight"));
    for (c, w) in r.criteria.iter().zip(r.weights.as_slice()) {
        out.push_str(&format!("{c:<10} {w:>10.6}\n"));
    }
}

fn check(ctx: &Context, path: &Path, strict_scale: bool) -> Result<Exit, Failure> {
    let r = analysis(ctx, path, strict_scale)?;
    let c = &r.consistency;
    ctx.emit(&r, |out| {
        write_weights(out, &r);
        out.push_str(&format!("lambda_max {:.6}\n", c.lambda_max));
        out.push_str(&format!("n          {}\n", c.n));
        out.push_str(&format!("CI         {:.6}\n", c.ci));
        out.push_str(&format!("RI         {:.2}\n", c.ri));
        out.push_str(&format!("CR         {:.6}\n", c.cr));
        out.push_str(if c.passes { "consistent (CR < 0.1)\n" } else { "INCONSISTENT (CR >= 0.1)\n" });
    });
    Ok(if c.passes { Exit::Ok } else { Exit::Inconsistent })
}

fn weights(ctx: &Context, path: &Path) -> Result<Exit, Failure> {
    let r = analysis(ctx, path, false)?;
    ctx.emit(&r, |out| write_weights(out, &r));
    Ok(Exit::Ok)
}

fn load_scenario(ctx: &Context, arg: &str) -> Result<Scenario, Failure> {
    let path = Path::new(arg);
    if path.is_file() {
        let mut value: Value = parse_json(&read_file(path)?, ErrorCode::ValidationFailed)?;
        let Some(obj) = value.as_object_mut() else {
            return Err(Failure::invalid(ErrorCode::ValidationFailed, "scenario file must hold a JSON object"));
        };
        obj.entry("id").or_insert_with(|| id_from_path(path).into());
        if let Some(rate) = ctx.file.penalty_rate {
            obj.entry("penalty_rate").or_insert(rate.into());
        }
        return Ok(from_value(value, ErrorCode::ValidationFailed)?);
    }
    if let Some(store) = ctx.existing_store()? {
        return Ok(store.load_scenario(arg)?);
    }
    bundled_examples()
        .into_iter()
        .find(|s| s.id == arg)
        .ok_or_else(|| {
            StoreError::NotFound {
                kind: "scenario",
                id: arg.to_string(),
            }
            .into()
        })
}

fn allocate(ctx: &Context, arg: &str, penalty_rate: Option<f64>) -> Result<Exit, Failure> {
    let scenario = with_penalty_rate(load_scenario(ctx, arg)?, penalty_rate)?;
    let r: ScenarioAllocation = scenario.allocate()?;
    if !ctx.json {
        for w in &r.warnings {
            eprintln!("warning: {w}");
        }
    }
    ctx.emit(&r, |out| {
        let a = &r.allocation;
        out.push_str(&format!("{} ({})\n", r.district, r.scenario_id));
        out.push_str(&format!(
            "weights    {}\n",
            a.weights.as_array().map(|w| format!("{w:.6}")).join(" ")
        ));
        out.push_str(&format!("penalty    {} x NoR on CenH\n", a.options.penalty_rate));
        out.push_str(&format!("{:<6} {:>12} {:>12} {:>6}\n", "tier", "raw", "penalized", "ratio"));
        for (k, raw) in a.raw_index.iter() {
            out.push_str(&format!(
                "{:<6} {:>12.6} {:>12.6} {:>6.1}\n",
                k.label(),
                raw,
                a.penalized_index.get(k),
                a.ratio.get(k)
            ));
        }
        out.push_str(&format!("ratio {}\n", a.ratio_text));
    });
    Ok(Exit::Ok)
}

fn load_series(ctx: &Context, arg: &str) -> Result<(String, TimeSeries, PathBuf), Failure> {
    let path = Path::new(arg);
    let (dataset, plot_dir) = if path.is_file() {
        let d = import_csv(path, DatasetKind::TimeSeries).map_err(|e| match e {
            StoreError::Io { .. } => Failure::io(e.to_string()),
            e => e.into(),
        })?;
        (d, path.parent().map(Path::to_path_buf).unwrap_or_default())
    } else {
        let d = match ctx.existing_store()? {
            Some(store) => store.load_dataset(arg)?,
            None => bundled_datasets()
                .into_iter()
                .find(|d| d.id == arg)
                .ok_or_else(|| -> Failure {
                    StoreError::NotFound {
                        kind: "dataset",
                        id: arg.to_string(),
                    }
                    .into()
                })?,
        };
        (d, PathBuf::new())
    };
    let Some(series) = dataset.time_series().cloned() else {
        return Err(Failure::invalid(
            ErrorCode::InvalidRequest,
            format!("dataset {:?} is a {}, not a time series", dataset.id, dataset.kind().as_str()),
        ));
    };
    let plot = plot_dir.join(format!("{}-plot.csv", dataset.id));
    Ok((dataset.id, series, plot))
}

fn csv_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::io(format!("cannot write {}: {e}", path.display()))
}

/// Observed history then forecast; the last observed row fills both columns
/// so plotted lines join.
fn write_plot(path: &Path, series: &TimeSeries, r: &ForecastResponse) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_failure(path, e))?;
    let mut row = |fields: [String; 3]| w.write_record(&fields).map_err(|e| csv_failure(path, e));
    row(["date".into(), "observed".into(), "forecast".into()])?;
    let n = series.len();
    for (i, (d, v)) in series.dates().iter().zip(series.values()).enumerate() {
        let joined = if i + 1 == n { v.to_string() } else { String::new() };
        row([d.to_string(), v.to_string(), joined])?;
    }
    for p in &r.forecast {
        row([p.date.to_string(), String::new(), p.cumulative.to_string()])?;
    }
    w.flush().map_err(|e| csv_failure(path, e))
}

fn forecast(ctx: &Context, args: ForecastArgs) -> Result<Exit, Failure> {
    let (id, series, default_plot) = load_series(ctx, &args.series)?;
    let f = &ctx.file.forecast;
    let defaults = TrainingConfig::default();
    let training = TrainingConfig {
        hidden_size: args.hidden_size.or(f.hidden_size).unwrap_or(defaults.hidden_size),
        lookback: args.lookback.or(f.lookback).unwrap_or(defaults.lookback),
        epochs: args.epochs.or(f.epochs).unwrap_or(defaults.epochs),
        learning_rate: args.learning_rate.or(f.learning_rate).unwrap_or(defaults.learning_rate),
        seed: args.seed.or(f.seed).unwrap_or(defaults.seed),
        ..defaults
    };
    let horizon = args.horizon.or(f.horizon).unwrap_or(allocwise_api::DEFAULT_HORIZON);
    let mut r = run_forecast(&series, horizon, None, Some(training))?;
    r.dataset_id = Some(id);
    let plot = args.plot_out.unwrap_or(default_plot);
    write_plot(&plot, &series, &r)?;
    if ctx.json {
        println!("{}", serde_json::to_string_pretty(&r).expect("response types serialize"));
    } else {
        for w in &r.warnings {
            eprintln!("warning: {w}");
        }
        let stdout = std::io::stdout();
        let mut w = csv::Writer::from_writer(stdout.lock());
        let io = |e: csv::Error| Failure::io(format!("cannot write output: {e}"));
        w.write_record(["date", "cumulative"]).map_err(io)?;
        for p in &r.forecast {
            w.write_record([p.date.to_string(), p.cumulative.to_string()]).map_err(io)?;
        }
        w.flush().map_err(|e| Failure::io(format!("cannot write output: {e}")))?;
        if let (Some(first), Some(last)) = (r.loss_curve.first(), r.loss_curve.last()) {
            eprintln!("training loss {first:.6e} -> {last:.6e} over {} epochs", r.loss_curve.len());
        }
        eprintln!("plot data written to {}", plot.display());
    }
    Ok(Exit::Ok)
}

fn import(ctx: &Context, file: &Path, kind: &str, id: Option<String>) -> Result<Exit, Failure> {
    let kind: DatasetKind = kind
        .parse()
        .map_err(|_| Failure::invalid(ErrorCode::InvalidRequest, format!("unknown dataset kind {kind:?}")))?;
    let mut dataset = import_csv(file, kind).map_err(|e| match e {
        StoreError::Io { .. } => Failure::io(e.to_string()),
        e => e.into(),
    })?;
    if let Some(id) = id {
        dataset = Dataset::new(id, dataset.payload)?;
    }
    let store = Store::open(&ctx.store_dir)?;
    store.save_dataset(&dataset)?;
    let summary = serde_json::json!({
        "id": dataset.id,
        "kind": dataset.kind().as_str(),
        "len": dataset.payload.len(),
        "warnings": dataset.warnings(),
    });
    ctx.emit(&summary, |out| {
        out.push_str(&format!(
            "imported {} ({}, {} rows) into {}\n",
            dataset.id,
            dataset.kind().as_str(),
            dataset.payload.len(),
            ctx.store_dir.display()
        ));
        for w in dataset.warnings() {
            out.push_str(&format!("warning: {w}\n"));
        }
    });
    Ok(Exit::Ok)
}

fn serve(ctx: &Context, args: ServeArgs) -> Result<Exit, Failure> {
    let s = &ctx.file.serve;
    let defaults = ServiceConfig::default();
    let config = ServiceConfig {
        bind: args.bind.or(s.bind).unwrap_or(defaults.bind),
        port: args.port.or(s.port).unwrap_or(defaults.port),
        store_dir: ctx.store_dir.clone(),
        cors_origins: if args.cors_origins.is_empty() {
            s.cors_origins.clone().unwrap_or_default()
        } else {
            args.cors_origins
        },
        forecast_timeout: args
            .forecast_timeout_secs
            .or(s.forecast_timeout_secs)
            .map_or(defaults.forecast_timeout, Duration::from_secs),
        ahp: ctx.ahp.clone(),
    };
    let _ = tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_env("ALLOCWISE_LOG")
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .try_init();
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::io(format!("cannot start runtime: {e}")))?;
    runtime
        .block_on(allocwise_api::serve(config))
        .map_err(|e| Failure::io(format!("service failed: {e}")))?;
    let _ = std::io::stdout().flush();
    Ok(Exit::Ok)
}
