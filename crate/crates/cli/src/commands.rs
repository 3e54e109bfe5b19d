//! Subcommand implementations.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Serialize;

use tunai::eval::report::{
    confusion_csv, confusion_text, importance_csv, scores_csv, scores_text, search_csv, search_text, to_csv,
    top_ten_text,
};
use tunai::eval::{assign_split, evaluate, grid_search, permutation_importance, Metric, SearchConfig};
use tunai::features::{read_dataset, write_dataset, Dataset, Level, Medians, Split, Task};
use tunai::ingest::{read_bathy_grid, read_echograms, read_logbook, read_ocean_grid, Reject};
use tunai::learn::{default_grid_text, parse_grids, HyperGrid, ModelKind, Output, TrainedModel};
use tunai::pipeline::{build_dataset, check_window_len, DropRule};
use tunai::synth::{self, SynthConfig, ViolationRates};

use crate::manifest::{write_atomic, write_text_atomic, Recorder};

pub const MODEL_FILE: &str = "model.tunai";
pub const DATASET_FILE: &str = "dataset.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

fn parse_task(s: &str) -> std::result::Result<Task, String> {
    s.parse().map_err(|e: tunai::Error| e.to_string())
}

fn parse_kind(s: &str) -> std::result::Result<ModelKind, String> {
    s.parse().map_err(|e: tunai::Error| e.to_string())
}

fn parse_level(s: &str) -> std::result::Result<Level, String> {
    s.parse().map_err(|e: tunai::Error| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SplitChoice {
    Train,
    Test,
    All,
}

impl SplitChoice {
    fn select(self, ds: &Dataset) -> Dataset {
        match self {
            SplitChoice::Train => ds.split_rows(Split::Train),
            SplitChoice::Test => ds.split_rows(Split::Test),
            SplitChoice::All => ds.clone(),
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    /// Directory receiving the input tables and ground truth.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub buoys: Option<usize>,
    #[arg(long)]
    pub days: Option<usize>,
    /// JSON file with any subset of the generator settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Share of events given each kind of rule violation.
    #[arg(long)]
    pub violation_rate: Option<f64>,
    #[arg(long)]
    pub ocean_coupling: Option<f64>,
    #[arg(long)]
    pub selection_bias: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct BuildArgs {
    #[arg(long)]
    pub logbook: PathBuf,
    #[arg(long)]
    pub echo: PathBuf,
    #[arg(long)]
    pub ocean: PathBuf,
    #[arg(long)]
    pub bathy: PathBuf,
    /// Echo-sounder window length in hours: 24, 48 or 72.
    #[arg(long, default_value_t = 72)]
    pub window: usize,
    #[arg(long, default_value_t = 0.25)]
    pub test_frac: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// binary, ternary, reg or reg100.
    #[arg(long, value_parser = parse_task)]
    pub task: Task,
    /// baseline, linear, rf, gb or xgb.
    #[arg(long, value_parser = parse_kind)]
    pub model: ModelKind,
    /// echo, echo_ocean or all.
    #[arg(long, value_parser = parse_level, default_value = "all")]
    pub features: Level,
    /// Grid file; the built-in grids are used when absent.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Print the sweep size and stop.
    #[arg(long)]
    pub dry_run: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_enum, default_value = "test")]
    pub split: SplitChoice,
    /// Directory receiving the report files.
    #[arg(long)]
    pub report: PathBuf,
    /// Also compute permutation importance.
    #[arg(long)]
    pub importance: bool,
    #[arg(long, value_enum, default_value = "train")]
    pub importance_split: SplitChoice,
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Feature rows in dataset layout, one per window.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

fn print_rejects(file: &Path, rejects: &[Reject]) {
    if rejects.is_empty() {
        return;
    }
    eprintln!("{}: {} row(s) rejected", file.display(), rejects.len());
    for r in rejects.iter().take(5) {
        eprintln!("  line {}: {}", r.line, r.reason);
    }
}

pub fn synth(a: &SynthArgs) -> Result<()> {
    let mut rec = Recorder::new("synth", a)?;
    let mut cfg = match &a.config {
        Some(p) => {
            rec.input(p)?;
            let text = std::fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
            serde_json::from_str::<SynthConfig>(&text)
                .map_err(|e| tunai::Error::schema(p.display().to_string(), e.line() as u64, e.to_string()))?
        }
        None => SynthConfig::default(),
    };
    cfg.seed = a.seed;
    cfg.n_buoys = a.buoys.unwrap_or(cfg.n_buoys);
    cfg.days = a.days.unwrap_or(cfg.days);
    if let Some(r) = a.violation_rate {
        cfg.violations = ViolationRates::uniform(r);
    }
    cfg.ocean_coupling = a.ocean_coupling.unwrap_or(cfg.ocean_coupling);
    cfg.selection_bias = a.selection_bias.unwrap_or(cfg.selection_bias);
    rec.seed("synth", cfg.seed);

    let world = synth::generate(&cfg)?;
    rec.lap("generate");
    let report = synth::validate(&world);
    std::fs::create_dir_all(&a.out).with_context(|| format!("cannot create {}", a.out.display()))?;
    let paths: Vec<PathBuf> = synth::FILE_NAMES.iter().map(|n| a.out.join(n)).collect();
    write_atomic(&paths[0], |w| Ok(tunai::ingest::write_logbook(w, &world.events)?))?;
    write_atomic(&paths[1], |w| Ok(tunai::ingest::write_echograms(w, &world.records)?))?;
    write_atomic(&paths[2], |w| Ok(tunai::ingest::write_ocean_grid(w, &world.ocean)?))?;
    write_atomic(&paths[3], |w| Ok(tunai::ingest::write_bathy_grid(w, &world.bathy)?))?;
    write_atomic(&paths[4], |w| Ok(world.truth.write_hours(w)?))?;
    write_atomic(&paths[5], |w| Ok(world.truth.write_events(w)?))?;
    let cfg_path = a.out.join("synth_config.json");
    write_text_atomic(&cfg_path, &(serde_json::to_string_pretty(&cfg)? + "\n"))?;
    let check_path = a.out.join("validation.txt");
    write_text_atomic(&check_path, &report.to_string())?;
    for p in paths.iter().chain([&cfg_path, &check_path]) {
        rec.output(p)?;
    }
    rec.lap("write");
    rec.finish(&a.out.join(MANIFEST_FILE))?;

    let sets = world.events.iter().filter(|e| e.catch_t.is_some()).count();
    println!(
        "{} buoys, {} events ({} sets), {} echo records -> {}",
        cfg.n_buoys,
        world.events.len(),
        sets,
        world.records.len(),
        a.out.display()
    );
    print!("{report}");
    report.into_result()?;
    Ok(())
}

pub fn build(a: &BuildArgs) -> Result<()> {
    check_window_len(a.window)?;
    let mut rec = Recorder::new("build", a)?;
    rec.seed("split", a.seed);
    for p in [&a.logbook, &a.echo, &a.ocean, &a.bathy] {
        if !p.is_file() {
            bail!(tunai::Error::io(p, std::io::Error::new(std::io::ErrorKind::NotFound, "no such file")));
        }
        rec.input(p)?;
    }
    let events = read_logbook(&a.logbook)?;
    print_rejects(&a.logbook, &events.rejects);
    let echo = read_echograms(&a.echo)?;
    print_rejects(&a.echo, &echo.rejects);
    let ocean = read_ocean_grid(&a.ocean)?;
    let bathy = read_bathy_grid(&a.bathy)?;
    rec.lap("read");

    let (examples, report) = build_dataset(&events.rows, &echo.rows, &ocean, &bathy, a.window)?;
    let ds = assign_split(&Dataset::from_examples(&examples, a.window)?, a.test_frac, a.seed)?;
    rec.lap("build");

    let ds_path = a.out.join(DATASET_FILE);
    write_atomic(&ds_path, |w| Ok(write_dataset(w, &ds)?))?;
    let table = report.to_table();
    let txt = a.out.join("clean_report.txt");
    write_text_atomic(&txt, &table)?;
    let mut rows: Vec<Vec<String>> = DropRule::ALL
        .iter()
        .map(|r| vec![r.to_string(), report.count(*r).to_string()])
        .collect();
    rows.push(vec!["kept".into(), report.survivors.len().to_string()]);
    rows.push(vec!["total".into(), report.input_count().to_string()]);
    let csv = a.out.join("clean_report.csv");
    write_text_atomic(&csv, &to_csv(&["rule", "events"], &rows))?;
    let dropped: Vec<Vec<String>> = report.dropped.iter().map(|(id, r)| vec![id.clone(), r.to_string()]).collect();
    let dropped_path = a.out.join("dropped.csv");
    write_text_atomic(&dropped_path, &to_csv(&["event_id", "rule"], &dropped))?;
    for p in [&ds_path, &txt, &csv, &dropped_path] {
        rec.output(p)?;
    }
    rec.lap("write");
    rec.finish(&a.out.join(MANIFEST_FILE))?;

    print!("{table}");
    let n_test = ds.rows.iter().filter(|r| r.split == Some(Split::Test)).count();
    println!(
        "dataset: {} rows ({} train, {} test), {} columns, W = {} h -> {}",
        ds.len(),
        ds.len() - n_test,
        n_test,
        ds.names.len(),
        a.window,
        ds_path.display()
    );
    Ok(())
}

fn training_rows(ds: &Dataset) -> Dataset {
    if ds.rows.iter().any(|r| r.split.is_some()) {
        ds.split_rows(Split::Train)
    } else {
        ds.clone()
    }
}

pub fn train(a: &TrainArgs) -> Result<()> {
    let mut rec = Recorder::new("train", a)?;
    rec.seed("model", a.seed);
    rec.input(&a.dataset)?;
    let ds = read_dataset(&a.dataset)?;
    let train = training_rows(&ds);
    let names = ds.level_names(a.features);
    train.select(&names)?;

    let grid = if a.model == ModelKind::Baseline {
        HyperGrid::new()
    } else {
        let text = match &a.grid {
            Some(p) => {
                rec.input(p)?;
                std::fs::read_to_string(p).map_err(|e| tunai::Error::io(p, e))?
            }
            None => default_grid_text().to_string(),
        };
        let grids = parse_grids(&text)?;
        grids
            .get(a.model, a.task.is_classification())
            .cloned()
            .ok_or_else(|| {
                tunai::Error::Validation(format!(
                    "grid file has no section for {} {}",
                    a.model,
                    if a.task.is_classification() { "classification" } else { "regression" }
                ))
            })?
    };
    let n_candidates = grid.candidates_for(a.model).len();
    println!(
        "sweep: {n_candidates} candidate(s) x {} folds = {} fits, {} training rows, {} features",
        a.folds,
        n_candidates * a.folds,
        train.len(),
        names.len()
    );
    if a.dry_run {
        return Ok(());
    }
    rec.lap("read");

    let medians = Medians::fit(&ds.names, train.rows.iter().map(|r| &r.values[..]));
    let cfg = SearchConfig {
        folds: a.folds,
        seed: a.seed,
        metric: None,
    };
    let result = grid_search(&train, &names, a.task, a.model, &grid, &medians, &cfg)?;
    rec.lap("search");

    let model_path = a.out.join(MODEL_FILE);
    write_atomic(&model_path, |w| Ok(result.model.write(w)?))?;
    let search_csv_path = a.out.join("search.csv");
    write_text_atomic(&search_csv_path, &search_csv(&result))?;
    let search_txt_path = a.out.join("search.txt");
    write_text_atomic(&search_txt_path, &search_text(&result))?;
    for p in [&model_path, &search_csv_path, &search_txt_path] {
        rec.output(p)?;
    }
    rec.lap("write");
    rec.finish(&a.out.join(MANIFEST_FILE))?;

    let best = result.best();
    let params = best.params.to_string();
    println!(
        "best: {} with mean CV {} = {:.4} (sd {:.4}) -> {}",
        if params.is_empty() { "default parameters" } else { &params },
        result.metric.as_str(),
        best.mean,
        best.std,
        model_path.display()
    );
    Ok(())
}

pub fn eval(a: &EvalArgs) -> Result<()> {
    let mut rec = Recorder::new("eval", a)?;
    rec.seed("importance", a.seed);
    rec.input(&a.model)?;
    rec.input(&a.dataset)?;
    let model = TrainedModel::load(&a.model)?;
    let ds = read_dataset(&a.dataset)?;
    let data = a.split.select(&ds);
    if data.is_empty() {
        bail!(tunai::Error::Empty(format!("no rows in the {:?} split", a.split)));
    }
    rec.lap("read");

    let ev = evaluate(&model, &data, model.kind.as_str())?;
    let mut written = Vec::new();
    let mut put = |name: &str, text: String| -> Result<()> {
        let p = a.report.join(name);
        write_text_atomic(&p, &text)?;
        written.push(p);
        Ok(())
    };
    let evs = std::slice::from_ref(&ev);
    put("scores.csv", scores_csv(evs))?;
    put("scores.txt", scores_text(evs))?;
    let mut summary = scores_text(evs);
    if let Some(cm) = &ev.confusion {
        put("confusion.csv", confusion_csv(model.task, cm))?;
        let t = confusion_text(model.task, cm);
        summary += &format!("\n{t}");
        put("confusion.txt", t)?;
    }
    rec.lap("evaluate");

    if a.importance {
        let imp_data = a.importance_split.select(&ds);
        if imp_data.is_empty() {
            bail!(tunai::Error::Empty(format!("no rows in the {:?} split", a.importance_split)));
        }
        let table = permutation_importance(&model, &imp_data, Metric::for_task(model.task), a.repeats, a.seed)?;
        put("importance.csv", importance_csv(&table))?;
        let title = format!("{} {}", model.kind, model.task.as_str());
        let t = top_ten_text(&table, &title);
        summary += &format!("\n{t}");
        put("importance.txt", t)?;
        rec.lap("importance");
    }
    for p in &written {
        rec.output(p)?;
    }
    rec.finish(&a.report.join(MANIFEST_FILE))?;
    print!("{summary}");
    Ok(())
}

pub fn predict(a: &PredictArgs) -> Result<()> {
    let mut rec = Recorder::new("predict", a)?;
    rec.input(&a.model)?;
    rec.input(&a.input)?;
    let model = TrainedModel::load(&a.model)?;
    let ds = read_dataset(&a.input)?;
    let out = model.predict(&ds)?;
    rec.lap("predict");

    let mut header = vec!["event_id".to_string(), "prediction".to_string()];
    header.extend(model.task.class_names().iter().map(|c| format!("p_{c}")));
    let point = out.point();
    let rows: Vec<Vec<String>> = (0..ds.len())
        .map(|i| {
            let mut r = vec![ds.rows[i].event_id.clone()];
            match &out {
                Output::Regression(_) => r.push(format!("{}", point[i])),
                Output::Classification { scores, labels } => {
                    r.push(model.task.class_names()[labels[i]].to_string());
                    r.extend(scores.row(i).iter().map(|p| format!("{p}")));
                }
            }
            r
        })
        .collect();
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    write_text_atomic(&a.out, &to_csv(&h, &rows))?;
    rec.output(&a.out)?;
    let mut manifest = a.out.clone().into_os_string();
    manifest.push(".manifest.json");
    rec.finish(Path::new(&manifest))?;
    println!("{} prediction(s) -> {}", ds.len(), a.out.display());
    Ok(())
}
