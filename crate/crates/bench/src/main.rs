use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::{error, info, warn};

use marcsinh::data::fetch;
use marcsinh::{gradcheck, DerivativeMode, Manifest};
use marcsinh_bench::{render_table, run_suite, BenchError, Classifier, OutputFormat, RunSpec};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_FAILED: u8 = 3;

fn default_manifest() -> PathBuf {
    PathBuf::from("manifest/datasets.toml")
}

fn default_data_dir() -> PathBuf {
    std::env::var_os("MARCSINH_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("data"))
}

#[derive(Parser)]
#[command(name = "marcsinh-bench", version, about = "Kernel/activation benchmark grid")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Md,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Paper,
    Exact,
}

#[derive(Subcommand)]
enum Command {
    /// Download the manifest's data files.
    Fetch {
        #[arg(long, default_value_os_t = default_manifest())]
        manifest: PathBuf,
        #[arg(long, default_value_os_t = default_data_dir())]
        dest: PathBuf,
        /// Only these entries (default: all).
        #[arg(long, value_delimiter = ',')]
        datasets: Vec<String>,
    },
    /// Train and score the requested grid.
    Run {
        #[arg(long, default_value_os_t = default_manifest())]
        manifest: PathBuf,
        #[arg(long, default_value_os_t = default_data_dir())]
        data: PathBuf,
        /// Dataset names (default: every manifest entry).
        #[arg(long, value_delimiter = ',')]
        datasets: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "svm,mlp")]
        classifiers: Vec<String>,
        /// Function names; `svm:rbf` restricts a name to one classifier.
        #[arg(long, value_delimiter = ',')]
        functions: Vec<String>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        /// Output file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "paper")]
        derivative_mode: Mode,
    },
    /// Finite-difference checks of the derivative and backprop.
    Gradcheck,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match cli.command {
        Command::Fetch {
            manifest,
            dest,
            datasets,
        } => cmd_fetch(&manifest, &dest, &datasets),
        Command::Run {
            manifest,
            data,
            datasets,
            classifiers,
            functions,
            format,
            out,
            derivative_mode,
        } => {
            let format = match format {
                Format::Csv => OutputFormat::Csv,
                Format::Md => OutputFormat::Markdown,
            };
            let mode = match derivative_mode {
                Mode::Paper => DerivativeMode::PaperFaithful,
                Mode::Exact => DerivativeMode::Exact,
            };
            cmd_run(&manifest, &data, datasets, &classifiers, &functions, format, out, mode)
        }
        Command::Gradcheck => {
            let results = gradcheck::run_all();
            for r in &results {
                println!("{r}");
            }
            if results.iter().all(|r| r.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_FAILED)
            }
        }
    }
}

fn load_manifest(path: &Path) -> Result<Manifest, ExitCode> {
    Manifest::from_path(path).map_err(|e| {
        error!("{e}");
        ExitCode::from(EXIT_DATA)
    })
}

fn cmd_fetch(manifest: &Path, dest: &Path, only: &[String]) -> ExitCode {
    let manifest = match load_manifest(manifest) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let mut entries = Vec::new();
    for name in only {
        match manifest.entry(name) {
            Some(e) => entries.push(e.clone()),
            None => {
                error!("unknown dataset {name:?}");
                return ExitCode::from(EXIT_USAGE);
            }
        }
    }
    if only.is_empty() {
        entries = manifest.datasets.clone();
    }
    let report = fetch(&entries, dest);
    info!(
        "{} downloaded, {} already present, {} failed",
        report.downloaded.len(),
        report.skipped.len(),
        report.failures.len()
    );
    for f in &report.failures {
        error!("{f}");
    }
    if report.is_ok() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_DATA)
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    manifest_path: &Path,
    data: &Path,
    datasets: Vec<String>,
    classifiers: &[String],
    functions: &[String],
    format: OutputFormat,
    out: Option<PathBuf>,
    mode: DerivativeMode,
) -> ExitCode {
    let manifest = match load_manifest(manifest_path) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let spec = match build_spec(&manifest, datasets, classifiers, functions, format, out, mode) {
        Ok(s) => s,
        Err(e) => {
            error!("{e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let output = match run_suite(&spec, &manifest, data) {
        Ok(o) => o,
        Err(BenchError::Usage(msg)) => {
            error!("{msg}");
            return ExitCode::from(EXIT_USAGE);
        }
        Err(e) => {
            error!("{e}");
            return ExitCode::from(EXIT_DATA);
        }
    };
    if output.rows.is_empty() {
        error!("no requested dataset could be loaded from {}", data.display());
        return ExitCode::from(EXIT_DATA);
    }
    let text = match render_table(&output.rows, spec.format) {
        Ok(t) => t,
        Err(e) => {
            error!("{e}");
            return ExitCode::from(EXIT_FAILED);
        }
    };
    match &spec.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                error!("{}: {e}", path.display());
                return ExitCode::from(EXIT_DATA);
            }
            info!("wrote {} rows to {}", output.rows.len(), path.display());
        }
        None => print!("{text}"),
    }
    for (name, reason) in &output.skipped {
        warn!("skipped {name}: {reason}");
    }
    if output.failed_cells() > 0 {
        error!("{} cell(s) failed", output.failed_cells());
        return ExitCode::from(EXIT_FAILED);
    }
    ExitCode::SUCCESS
}

fn build_spec(
    manifest: &Manifest,
    datasets: Vec<String>,
    classifiers: &[String],
    functions: &[String],
    format: OutputFormat,
    out: Option<PathBuf>,
    mode: DerivativeMode,
) -> Result<RunSpec, BenchError> {
    let mut chosen: Vec<Classifier> = Vec::new();
    for c in classifiers {
        let c: Classifier = c.parse()?;
        if !chosen.contains(&c) {
            chosen.push(c);
        }
    }
    let names: Vec<&str> = if datasets.is_empty() {
        manifest.names().collect()
    } else {
        datasets.iter().map(String::as_str).collect()
    };
    let mut spec = RunSpec::new(&names, &chosen);
    if !functions.is_empty() {
        let fs: Vec<&str> = functions.iter().map(String::as_str).collect();
        spec = spec.with_functions(&fs)?;
    }
    spec.derivative_mode = mode;
    spec.format = format;
    spec.out = out;
    spec.validate(manifest)?;
    Ok(spec)
}
