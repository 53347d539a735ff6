//! Command-line front end of the `mmi-lab` binary.

pub mod analyze;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::instrument::{expected_coincidence_rate, expected_pair_rate, simulate_run};
use crate::mmi::{
    coincidence_classical, coincidence_quantum, reconstruct_matrix, simulate_fringes,
    uniform_phase_grid, FringeDataset, Normalization, TransferMatrix,
};
use crate::seed::derive_seed;
use crate::tagstream::{StreamFormat, TimeTagStream};

/// Version tag written into every JSON output.
pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;

/// Env var capping the worker-thread count.
pub const THREADS_ENV: &str = "MMI_LAB_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "mmi-lab",
    version,
    about = "Two-photon interference in multimode interferometers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a time-tag stream from an experiment config.
    Simulate(SimulateArgs),
    /// Analyze time-tag streams.
    Analyze(AnalyzeArgs),
    /// Reconstruct a transfer matrix from classical fringe data.
    Characterize(CharacterizeArgs),
    /// Tabulate predicted coincidence distributions.
    Predict(PredictArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StreamFormatArg {
    Binary,
    Csv,
}

impl From<StreamFormatArg> for StreamFormat {
    fn from(f: StreamFormatArg) -> Self {
        match f {
            StreamFormatArg::Binary => StreamFormat::Binary,
            StreamFormatArg::Csv => StreamFormat::Csv,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `[analysis] seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `[analysis] wall_time`.
    #[arg(long)]
    pub seconds: Option<f64>,
    /// Stream file; the manifest goes next to it as `<out>.manifest.json`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "binary")]
    pub stream_format: StreamFormatArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AnalysisKind {
    G2,
    Hom,
    Mmi,
    Timeresolved,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(value_enum)]
    pub kind: AnalysisKind,
    pub stream: PathBuf,
    #[arg(long)]
    pub config: PathBuf,
    /// Distinguishable reference stream (orthogonal polarizations) for `hom`.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Report directory.
    #[arg(long)]
    pub out: PathBuf,
    /// What is printed to stdout; the directory always gets both.
    #[arg(long, value_enum, default_value = "json")]
    pub format: OutputFormat,
    /// Overrides `[analysis] mc_trials`.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Overrides `[analysis] seed`.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct CharacterizeArgs {
    /// Fringe dataset (JSON).
    #[arg(long, conflicts_with = "simulate")]
    pub data: Option<PathBuf>,
    /// Generate fringes from `--matrix` instead of reading them.
    #[arg(long, requires = "matrix")]
    pub simulate: bool,
    /// Matrix JSON file or preset name (`measured-chip`, `balanced-splitter`, `identity4`).
    #[arg(long)]
    pub matrix: Option<String>,
    /// Relative power noise for `--simulate`.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 24)]
    pub phase_points: usize,
    /// Independent simulated datasets.
    #[arg(long, default_value_t = 1)]
    pub runs: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Ground-truth matrix for the deviation report.
    #[arg(long)]
    pub truth: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Matrix JSON file or preset name.
    #[arg(long, default_value = "measured-chip")]
    pub matrix: String,
    /// First input (1-based).
    #[arg(short = 'i', long = "input-i", default_value_t = 1)]
    pub i: usize,
    /// Second input (1-based).
    #[arg(short = 'j', long = "input-j", default_value_t = 2)]
    pub j: usize,
    /// Two-photon visibility of the mixed prediction.
    #[arg(long, default_value_t = 1.0)]
    pub visibility: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: OutputFormat,
}

/// Exit code for an error: 2 for configuration and argument problems, 3 for
/// data problems.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_)
        | Error::InvalidParameter { .. }
        | Error::IndexOutOfRange { .. }
        | Error::SameInput(_)
        | Error::InvalidMatrix(_) => EXIT_CONFIG,
        _ => EXIT_DATA,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return exit_code(&e);
    }
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("{THREADS_ENV}={value} is not a positive integer")))?;
    // A pool may already exist when `run` is called twice in one process.
    if rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .is_err()
    {
        log::debug!("global thread pool already initialized");
    }
    Ok(())
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Analyze(a) => cmd_analyze(&a),
        Command::Characterize(a) => cmd_characterize(&a),
        Command::Predict(a) => cmd_predict(&a),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

fn pretty(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json value serializes");
    s.push('\n');
    s
}

fn with_schema(kind: &str, mut body: Value) -> Value {
    if let Value::Object(map) = &mut body {
        map.insert("schema".into(), json!(format!("mmi-lab/{kind}")));
        map.insert("schema_version".into(), json!(SCHEMA_VERSION));
    }
    body
}

/// Resolves a preset name or a JSON file.
pub fn load_matrix(name: &str) -> Result<TransferMatrix> {
    match name {
        "measured-chip" => Ok(TransferMatrix::measured_chip()),
        "balanced-splitter" => Ok(TransferMatrix::balanced_splitter()),
        "identity4" => TransferMatrix::identity(4),
        path => TransferMatrix::load(path).map_err(|e| match e {
            Error::Io(io) => Error::Config(format!("matrix file {path}: {io}")),
            Error::Json(js) => Error::InvalidMatrix(format!("{path}: {js}")),
            other => other,
        }),
    }
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = seed {
        cfg.analysis.seed = seed;
    }
    Ok(cfg)
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let mut cfg = load_config(&a.config, a.seed)?;
    if let Some(seconds) = a.seconds {
        cfg.analysis.wall_time = seconds;
    }
    cfg.validate()?;
    let layout = cfg.build_layout()?;
    let seed = cfg.analysis.seed;
    let out = simulate_run(
        &cfg.source,
        &layout,
        &cfg.detectors,
        cfg.analysis.wall_time,
        seed,
    )?;
    out.stream.write(&a.out, a.stream_format.into())?;
    let manifest = with_schema(
        "manifest",
        json!({
            "config_hash": cfg.hash(),
            "seed": seed,
            "wall_time_s": cfg.analysis.wall_time,
            "layout": format!("{:?}", cfg.layout.kind).to_lowercase(),
            "stream": a.out.file_name().map(|n| n.to_string_lossy().into_owned()),
            "n_channels": out.stream.n_channels(),
            "tick_fs": out.stream.tick_fs(),
            "n_tags": out.stream.len(),
            "counts_per_channel": out.stream.counts_per_channel(),
            "truth": out.truth,
            "expected_pair_rate": expected_pair_rate(&cfg.source, &layout, &cfg.detectors),
            "expected_coincidence_rate": expected_coincidence_rate(&cfg.source, &layout, &cfg.detectors),
            "config": cfg,
        }),
    );
    let mut manifest_path = a.out.clone().into_os_string();
    manifest_path.push(".manifest.json");
    write_text(Path::new(&manifest_path), &pretty(&manifest))?;
    log::info!("wrote {} tags to {}", out.stream.len(), a.out.display());
    Ok(())
}

fn inputs_of(cfg: &ExperimentConfig) -> (usize, usize) {
    (cfg.layout.input_mapping[0], cfg.layout.input_mapping[1])
}

pub fn cmd_analyze(a: &AnalyzeArgs) -> Result<()> {
    let mut cfg = load_config(&a.config, a.seed)?;
    if let Some(trials) = a.trials {
        cfg.analysis.mc_trials = trials;
    }
    cfg.validate()?;
    let trials = cfg.analysis.mc_trials;
    let stream = TimeTagStream::read(&a.stream)?;
    std::fs::create_dir_all(&a.out)?;
    let dir = &a.out;
    let (summary, main_csv) = match a.kind {
        AnalysisKind::G2 => {
            let r = analyze::analyze_g2(&stream, &cfg)?;
            write_text(&dir.join("g2_histogram.csv"), &r.histogram.to_csv())?;
            write_text(&dir.join("g2_peaks.csv"), &r.report.to_csv())?;
            write_text(&dir.join("pulse_profile.csv"), &r.profile.to_csv())?;
            (
                json!({ "kind": "g2", "report": r.report }),
                r.report.to_csv(),
            )
        }
        AnalysisKind::Hom => {
            let reference = a
                .reference
                .as_deref()
                .map(TimeTagStream::read)
                .transpose()?;
            let r = analyze::analyze_hom(&stream, reference.as_ref(), &cfg)?;
            let csv = r.dtau_csv(1.0);
            write_text(&dir.join("hom_dtau.csv"), &csv)?;
            (json!({ "kind": "hom", "report": r }), csv)
        }
        AnalysisKind::Mmi => {
            let matrix = cfg.matrix()?;
            let r = analyze::analyze_mmi(&stream, &matrix, inputs_of(&cfg), &cfg, trials)?;
            let csv = mmi_counts_csv(&r, &matrix)?;
            write_text(&dir.join("mmi_counts.csv"), &csv)?;
            (json!({ "kind": "mmi", "report": r }), csv)
        }
        AnalysisKind::Timeresolved => {
            let matrix = cfg.matrix()?;
            let points =
                analyze::analyze_time_resolved(&stream, &matrix, inputs_of(&cfg), &cfg, trials)?;
            let csv = analyze::time_resolved_csv(&points);
            write_text(&dir.join("timeresolved.csv"), &csv)?;
            (json!({ "kind": "timeresolved", "points": points }), csv)
        }
    };
    let mut summary = with_schema("analysis", summary);
    summary["config_hash"] = json!(cfg.hash());
    summary["seed"] = json!(cfg.analysis.seed);
    let text = pretty(&summary);
    write_text(&dir.join("report.json"), &text)?;
    match a.format {
        OutputFormat::Json => print!("{text}"),
        OutputFormat::Csv => print!("{main_csv}"),
    }
    Ok(())
}

fn mmi_counts_csv(r: &analyze::MmiAnalysis, matrix: &TransferMatrix) -> Result<String> {
    let (i, j) = (r.inputs.0 - 1, r.inputs.1 - 1);
    let q = coincidence_quantum(matrix, i, j, Normalization::Renormalized)?;
    let c = coincidence_classical(matrix, i, j, Normalization::Renormalized)?;
    let fitted = q.mix(&c, r.fit.visibility)?;
    let mut out = String::from("pair,raw,corrected,quantum,classical,fitted\n");
    for (idx, pair) in r.corrected_counts.pairs().iter().enumerate() {
        out.push_str(&format!(
            "{},{},{:.3},{:.6},{:.6},{:.6}\n",
            pair.label(),
            r.raw_counts.values()[idx],
            r.corrected_counts.values()[idx],
            q.values()[idx],
            c.values()[idx],
            fitted.values()[idx]
        ));
    }
    Ok(out)
}

fn matrix_json(m: &TransferMatrix) -> Value {
    serde_json::from_str(&m.to_json()).expect("matrix json is valid")
}

pub fn cmd_characterize(a: &CharacterizeArgs) -> Result<()> {
    let truth = a.truth.as_deref().map(load_matrix).transpose()?;
    let datasets: Vec<FringeDataset> = if let Some(path) = &a.data {
        let text = std::fs::read_to_string(path)?;
        vec![FringeDataset::from_json(&text)?]
    } else if a.simulate {
        let source = load_matrix(a.matrix.as_deref().expect("clap requires --matrix"))?;
        if a.runs == 0 {
            return Err(Error::invalid("runs", "must be positive"));
        }
        let grid = uniform_phase_grid(a.phase_points);
        (0..a.runs)
            .map(|r| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(a.seed, r as u64));
                simulate_fringes(&source, a.noise, &grid, &mut rng)
            })
            .collect::<Result<_>>()?
    } else {
        return Err(Error::Config(
            "characterize needs --data or --simulate".into(),
        ));
    };
    // Simulated data compares against its own source unless told otherwise.
    let truth = match (truth, a.simulate) {
        (Some(t), _) => Some(t),
        (None, true) => Some(load_matrix(a.matrix.as_deref().expect("checked"))?),
        (None, false) => None,
    };
    let mut runs = Vec::new();
    let mut deviations = Vec::new();
    let mut first = None;
    for data in &datasets {
        let rec = reconstruct_matrix(data)?;
        if rec.any_indeterminate() {
            log::warn!("flat fringes: some phases are undetermined and were set to zero");
        }
        let deviation = truth
            .as_ref()
            .map(|t| rec.matrix.max_abs_diff(&t.gauge_fixed()))
            .transpose()?;
        if let Some(d) = deviation {
            deviations.push(d);
        }
        runs.push(json!({
            "max_deviation": deviation,
            "phase_indeterminate": rec.phase_indeterminate,
        }));
        first.get_or_insert(rec);
    }
    let first = first.expect("at least one dataset");
    let stats = (!deviations.is_empty()).then(|| {
        let n = deviations.len() as f64;
        let mean = deviations.iter().sum::<f64>() / n;
        let sd = (deviations.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n).sqrt();
        let max = deviations.iter().cloned().fold(0.0, f64::max);
        json!({ "runs": deviations.len(), "mean": mean, "sd": sd, "max": max })
    });
    let report = with_schema(
        "characterization",
        json!({
            "matrix": matrix_json(&first.matrix),
            "unitarity_deviation": first.matrix.unitarity_deviation().max(),
            "deviation": stats,
            "runs": runs,
        }),
    );
    let text = match a.format {
        OutputFormat::Json => pretty(&report),
        OutputFormat::Csv => {
            let mut out = String::from("run,max_deviation\n");
            for (r, d) in deviations.iter().enumerate() {
                out.push_str(&format!("{r},{d:.3e}\n"));
            }
            out
        }
    };
    emit(a.out.as_deref(), &text)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_text(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Raw and renormalized quantum, classical and mixed tables.
pub fn prediction_table(m: &TransferMatrix, i: usize, j: usize, visibility: f64) -> Result<Value> {
    if !(0.0..=1.0).contains(&visibility) {
        return Err(Error::invalid(
            "visibility",
            format!("{visibility} not in [0, 1]"),
        ));
    }
    let mut tables = serde_json::Map::new();
    for norm in [Normalization::Raw, Normalization::Renormalized] {
        let q = coincidence_quantum(m, i, j, norm)?;
        let c = coincidence_classical(m, i, j, norm)?;
        let r = q.mix(&c, visibility)?;
        let name = match norm {
            Normalization::Raw => "raw",
            Normalization::Renormalized => "renormalized",
        };
        tables.insert(
            name.into(),
            json!({ "quantum": q.to_json_value(), "classical": c.to_json_value(), "mixed": r.to_json_value() }),
        );
    }
    Ok(with_schema(
        "prediction",
        json!({
            "inputs": [i + 1, j + 1],
            "visibility": visibility,
            "n_modes": m.n_modes(),
            "tables": tables,
        }),
    ))
}

fn prediction_csv(m: &TransferMatrix, i: usize, j: usize, visibility: f64) -> Result<String> {
    let mut out = String::from("normalization,pair,quantum,classical,mixed\n");
    for norm in [Normalization::Raw, Normalization::Renormalized] {
        let q = coincidence_quantum(m, i, j, norm)?;
        let c = coincidence_classical(m, i, j, norm)?;
        let r = q.mix(&c, visibility)?;
        let name = if norm == Normalization::Raw {
            "raw"
        } else {
            "renormalized"
        };
        for (idx, pair) in q.pairs().iter().enumerate() {
            out.push_str(&format!(
                "{name},{},{:.8},{:.8},{:.8}\n",
                pair.label(),
                q.values()[idx],
                c.values()[idx],
                r.values()[idx]
            ));
        }
    }
    Ok(out)
}

pub fn cmd_predict(a: &PredictArgs) -> Result<()> {
    let m = load_matrix(&a.matrix)?;
    if a.i == 0 || a.j == 0 {
        return Err(Error::invalid("inputs", "inputs are 1-based"));
    }
    let (i, j) = (a.i - 1, a.j - 1);
    let table = prediction_table(&m, i, j, a.visibility)?;
    let text = match a.format {
        OutputFormat::Json => pretty(&table),
        OutputFormat::Csv => prediction_csv(&m, i, j, a.visibility)?,
    };
    emit(a.out.as_deref(), &text)
}
