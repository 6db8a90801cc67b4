//! Config resolution and the subcommands behind the `mcmult` binary.
//!
//! Exit codes: 0 success, 1 check failure, 2 configuration error, 3 I/O
//! error.

pub mod config;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use config::{parse_config, RunConfig, KEYS};

use crate::arch::{count_parameters, Model, ModelConfig, Task, Variant};
use crate::data::{generate_synthetic, load_dataset, save_dataset, split, MultimodalSample, Split};
use crate::error::{Error, Result};
use crate::train::{
    ablation_run, check_model_gradients, evaluate, export_attention, train, AttentionQuery,
    MetricsReport,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Name of the resolved-config echo written into the output directory.
pub const CONFIG_ECHO: &str = "config.txt";

#[derive(Debug, Parser)]
#[command(name = "mcmult", version, about = "Multi-scale cooperative multimodal transformers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset directory.
    GenData,
    /// Train a model; writes params.json, history.csv and metrics.csv.
    Train,
    /// Evaluate saved parameters on the test split.
    Eval,
    /// Run one ablation axis; writes ablation_<axis>.csv.
    Ablate,
    /// Print parameter counts of all five variants.
    CountParams,
    /// Compare backpropagated gradients with central differences.
    GradCheck,
    /// Write one attention map as CSV with a metadata sidecar.
    ExportAttn,
}

/// Command-line overrides; each maps onto one config key.
#[derive(Debug, Default, Args)]
pub struct Flags {
    /// Flat key=value config file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<String>,
    #[arg(long, global = true, value_name = "NAME")]
    pub variant: Option<String>,
    #[arg(long, global = true)]
    pub blocks: Option<String>,
    #[arg(long, global = true)]
    pub layers: Option<String>,
    #[arg(long, global = true)]
    pub dim: Option<String>,
    #[arg(long, global = true)]
    pub heads: Option<String>,
    #[arg(long, global = true)]
    pub epochs: Option<String>,
    /// Comma-separated branches such as `V->L,A->L`, or `all`.
    #[arg(long, global = true, value_name = "LIST")]
    pub branches: Option<String>,
    #[arg(long, global = true)]
    pub samples: Option<String>,
    /// Dataset directory to load instead of generating data.
    #[arg(long, global = true, value_name = "DIR")]
    pub data: Option<String>,
    #[arg(long, global = true, value_name = "PATH")]
    pub params: Option<String>,
    #[arg(long, global = true)]
    pub axis: Option<String>,
    #[arg(long, global = true, value_name = "LIST")]
    pub seeds: Option<String>,
    /// Branch of the exported attention map, such as `V->L`.
    #[arg(long, global = true)]
    pub branch: Option<String>,
    #[arg(long, global = true, value_name = "N")]
    pub block_index: Option<String>,
    #[arg(long, global = true, value_name = "N")]
    pub head_index: Option<String>,
    #[arg(long, global = true, value_name = "N")]
    pub scale_index: Option<String>,
    #[arg(long, global = true, value_name = "N")]
    pub sample_index: Option<String>,
    /// Any config key, as `key=value`; may repeat.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

impl Flags {
    /// Overrides in application order: named flags, then `--set`.
    pub fn overrides(&self) -> Result<Vec<(String, String)>> {
        let named = [
            ("out", &self.out),
            ("seed", &self.seed),
            ("variant", &self.variant),
            ("blocks", &self.blocks),
            ("layers", &self.layers),
            ("dim", &self.dim),
            ("heads", &self.heads),
            ("epochs", &self.epochs),
            ("branches", &self.branches),
            ("samples", &self.samples),
            ("dataset", &self.data),
            ("params", &self.params),
            ("axis", &self.axis),
            ("seeds", &self.seeds),
            ("branch", &self.branch),
            ("block_index", &self.block_index),
            ("head_index", &self.head_index),
            ("scale_index", &self.scale_index),
            ("sample_index", &self.sample_index),
        ];
        let mut out: Vec<(String, String)> = named
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
            .collect();
        for s in &self.set {
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {s:?}")))?;
            out.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(out)
    }
}

/// Result of a command that ran to completion.
#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Success,
    CheckFailed(String),
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => EXIT_CONFIG,
        Error::Io { .. } | Error::Load { .. } | Error::Serde(_) => EXIT_IO,
        _ => EXIT_CHECK_FAILED,
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Reports go to `stdout`, diagnostics to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{e}");
                return EXIT_CONFIG;
            }
            let _ = write!(stdout, "{e}");
            return EXIT_OK;
        }
    };
    let result = cli
        .flags
        .overrides()
        .and_then(|o| parse_config(cli.flags.config.as_deref(), &o))
        .and_then(|cfg| run_command(cli.command, &cfg, stdout));
    match result {
        Ok(Outcome::Success) => EXIT_OK,
        Ok(Outcome::CheckFailed(msg)) => {
            let _ = writeln!(stderr, "check failed: {msg}");
            EXIT_CHECK_FAILED
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

fn echo_config(cfg: &RunConfig) -> Result<()> {
    write_file(&cfg.out.join(CONFIG_ECHO), &cfg.render())
}

fn out_err(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

/// Samples plus the model config adjusted to their feature widths and
/// class count.
fn dataset(cfg: &RunConfig) -> Result<(Vec<MultimodalSample>, ModelConfig)> {
    let mut model = cfg.model.clone();
    match &cfg.dataset {
        Some(dir) => {
            let (manifest, samples) = load_dataset(dir)?;
            model.input_dims = manifest.dims;
            if let Task::Classification { .. } = model.task {
                model.task = Task::Classification {
                    classes: manifest.classes,
                };
            }
            Ok((samples, model))
        }
        None => Ok((generate_synthetic(&cfg.data)?, model)),
    }
}

fn splits(cfg: &RunConfig) -> Result<(Split<MultimodalSample>, ModelConfig)> {
    let (samples, model) = dataset(cfg)?;
    Ok((split(&samples, cfg.split, cfg.split_seed)?, model))
}

fn load_model(cfg: &RunConfig, model_cfg: ModelConfig) -> Result<Model> {
    let mut model = Model::new(model_cfg, cfg.train.seed)?;
    let path = cfg.params_path();
    let json = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    model
        .params_mut()
        .load_json(&json)
        .map_err(|e| Error::load(&path, e.to_string()))?;
    Ok(model)
}

fn print_report(out: &mut dyn Write, label: &str, m: &MetricsReport) -> std::io::Result<()> {
    writeln!(out, "{}", MetricsReport::CSV_HEADER)?;
    writeln!(out, "{}", m.csv_row())?;
    writeln!(
        out,
        "{label}: Acc7 {:.4}  Acc2 {:.4}  F1 {:.4}  MAE {:.4}  Corr {:.4}",
        m.acc7, m.acc2, m.f1, m.mae, m.corr
    )
}

/// Runs one command against a resolved config.
pub fn run_command(command: Command, cfg: &RunConfig, out: &mut dyn Write) -> Result<Outcome> {
    match command {
        Command::GenData => {
            let samples = generate_synthetic(&cfg.data)?;
            save_dataset(&cfg.out, &samples, cfg.data.classes)?;
            echo_config(cfg)?;
            writeln!(out, "wrote {} samples to {}", samples.len(), cfg.out.display()).map_err(out_err)?;
        }
        Command::Train => {
            let (data, model_cfg) = splits(cfg)?;
            let mut model = Model::new(model_cfg, cfg.train.seed)?;
            writeln!(
                out,
                "training {} ({} parameters) on {} samples",
                model.config().variant,
                model.parameter_count(),
                data.train.len()
            )
            .map_err(out_err)?;
            let history = train(&mut model, &data.train, &data.valid, &cfg.train)?;
            for e in &history.epochs {
                let acc2 = e.valid.map_or(String::from("-"), |m| format!("{:.4}", m.acc2));
                writeln!(out, "epoch {:>3}  loss {:.4}  valid acc2 {acc2}", e.epoch, e.train_loss)
                    .map_err(out_err)?;
            }
            echo_config(cfg)?;
            write_file(&cfg.out.join("params.json"), &model.params().to_json()?)?;
            write_file(&cfg.out.join("history.csv"), &history.to_csv())?;
            if !data.test.is_empty() {
                let m = evaluate(&model, &data.test)?;
                write_file(
                    &cfg.out.join("metrics.csv"),
                    &format!("{}\n{}\n", MetricsReport::CSV_HEADER, m.csv_row()),
                )?;
                print_report(out, "test", &m).map_err(out_err)?;
            }
        }
        Command::Eval => {
            let (data, model_cfg) = splits(cfg)?;
            let model = load_model(cfg, model_cfg)?;
            let m = evaluate(&model, &data.test)?;
            print_report(out, "test", &m).map_err(out_err)?;
        }
        Command::Ablate => {
            let (data, model_cfg) = splits(cfg)?;
            let table = ablation_run(&model_cfg, &cfg.train, cfg.axis, &cfg.seeds, &data, |row| {
                let _ = writeln!(out, "{}", row.csv_row());
            })?;
            echo_config(cfg)?;
            let path = cfg.out.join(format!("ablation_{}.csv", cfg.axis));
            write_file(&path, &table.to_csv())?;
            writeln!(out, "wrote {}", path.display()).map_err(out_err)?;
        }
        Command::CountParams => {
            writeln!(out, "variant,params").map_err(out_err)?;
            for v in Variant::ALL {
                let mut c = cfg.model.clone();
                c.variant = v;
                c.flat_depth = None;
                writeln!(out, "{v},{}", count_parameters(&c)?).map_err(out_err)?;
            }
        }
        Command::GradCheck => {
            let (samples, model_cfg) = dataset(cfg)?;
            let sample = samples.get(cfg.sample_index).ok_or_else(|| {
                Error::Config(format!("sample_index {} out of range 0..{}", cfg.sample_index, samples.len()))
            })?;
            let mut model = Model::new(model_cfg, cfg.train.seed)?;
            let r = check_model_gradients(&mut model, &sample.inputs(), sample.label, cfg.train.loss, cfg.grad_step)?;
            writeln!(
                out,
                "coordinates {}  step {:e}  max relative error {:e}",
                r.coordinates(),
                cfg.grad_step,
                r.max_rel_error()
            )
            .map_err(out_err)?;
            writeln!(
                out,
                "smooth: {} coordinates, worst {:e} at {}[{}]",
                r.smooth.coordinates, r.smooth.max_rel_error, r.smooth_worst, r.smooth.worst_index
            )
            .map_err(out_err)?;
            writeln!(
                out,
                "across a ReLU kink: {} coordinates, worst {:e}, unresolved {}",
                r.kinked.coordinates, r.kinked.max_rel_error, r.unresolved
            )
            .map_err(out_err)?;
            if !r.passes(cfg.grad_tolerance) {
                return Ok(Outcome::CheckFailed(format!(
                    "max relative error {:e} exceeds {:e}",
                    r.max_rel_error(),
                    cfg.grad_tolerance
                )));
            }
        }
        Command::ExportAttn => {
            let (samples, model_cfg) = dataset(cfg)?;
            let sample = samples.get(cfg.sample_index).ok_or_else(|| {
                Error::Contract(format!("sample_index {} out of range 0..{}", cfg.sample_index, samples.len()))
            })?;
            let model = load_model(cfg, model_cfg)?;
            let q = AttentionQuery {
                branch: cfg.branch,
                block: cfg.block_index,
                head: cfg.head_index,
                scale: cfg.scale_index,
            };
            let e = export_attention(&model, &sample.inputs(), q, &cfg.out)?;
            echo_config(cfg)?;
            writeln!(out, "wrote {} and {}", e.csv.display(), e.sidecar.display()).map_err(out_err)?;
        }
    }
    Ok(Outcome::Success)
}
