//! Benchmark grid: every requested (dataset, classifier, function) cell is
//! trained on the training partition, timed around `fit`, and scored on the
//! held-out partition.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use marcsinh::data::{load_dataset, Loaded};
use marcsinh::metrics::evaluate;
use marcsinh::mlp::{mlp_fit, mlp_predict};
use marcsinh::svm::{svc_fit, svc_predict};
use marcsinh::{split, ActivationKind, Dataset, DerivativeMode, KernelKind, Manifest, MlpConfig, SvmConfig};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    /// Bad names or options; nothing was run.
    #[error("{0}")]
    Usage(String),
    /// Manifest unreadable or no requested dataset could be loaded.
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Render(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classifier {
    Svm,
    Mlp,
}

impl Classifier {
    pub const ALL: [Classifier; 2] = [Classifier::Svm, Classifier::Mlp];

    pub fn name(self) -> &'static str {
        match self {
            Classifier::Svm => "svm",
            Classifier::Mlp => "mlp",
        }
    }

    /// Function names in the order the result tables list them.
    pub fn functions(self) -> &'static [&'static str] {
        match self {
            Classifier::Svm => &["m_arcsinh", "rbf", "linear", "poly", "sigmoid"],
            Classifier::Mlp => &["m_arcsinh", "identity", "logistic", "tanh", "relu"],
        }
    }

    pub fn accepts(self, function: &str) -> bool {
        self.functions().contains(&function)
    }
}

impl FromStr for Classifier {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, BenchError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "svm" => Ok(Classifier::Svm),
            "mlp" => Ok(Classifier::Mlp),
            other => Err(BenchError::Usage(format!("unknown classifier {other:?} (expected svm or mlp)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutputFormat {
    #[default]
    Csv,
    Markdown,
}

impl FromStr for OutputFormat {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, BenchError> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "md" | "markdown" => Ok(OutputFormat::Markdown),
            other => Err(BenchError::Usage(format!("unknown format {other:?} (expected csv or md)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSpec {
    pub datasets: Vec<String>,
    /// Per classifier, the functions to run in table order.
    pub functions: Vec<(Classifier, Vec<String>)>,
    pub derivative_mode: DerivativeMode,
    pub svm_seed: u64,
    pub mlp_seed: u64,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
}

impl RunSpec {
    /// Every function of every listed classifier, with the default seeds.
    pub fn new(datasets: &[&str], classifiers: &[Classifier]) -> Self {
        RunSpec {
            datasets: datasets.iter().map(|s| s.to_string()).collect(),
            functions: classifiers
                .iter()
                .map(|&c| (c, c.functions().iter().map(|s| s.to_string()).collect()))
                .collect(),
            derivative_mode: DerivativeMode::default(),
            svm_seed: SvmConfig::BENCH_SEED,
            mlp_seed: MlpConfig::BENCH_SEED,
            format: OutputFormat::Csv,
            out: None,
        }
    }

    /// Restrict to the given function names. `svm:rbf` selects for one
    /// classifier; a bare name applies to every classifier that knows it.
    pub fn with_functions(mut self, names: &[&str]) -> Result<Self, BenchError> {
        let mut wanted: Vec<(Option<Classifier>, &str)> = Vec::new();
        for name in names {
            let name = name.trim();
            match name.split_once(':') {
                Some((c, f)) => wanted.push((Some(c.parse()?), f.trim())),
                None => wanted.push((None, name)),
            }
        }
        for (c, f) in &wanted {
            let known = match c {
                Some(c) => c.accepts(f) && self.functions.iter().any(|(k, _)| k == c),
                None => self.functions.iter().any(|(k, _)| k.accepts(f)),
            };
            if !known {
                return Err(BenchError::Usage(format!(
                    "function {f:?} is not valid for the selected classifiers"
                )));
            }
        }
        for (classifier, list) in &mut self.functions {
            list.retain(|f| wanted.iter().any(|(c, w)| w == f && c.is_none_or(|c| c == *classifier)));
        }
        Ok(self)
    }

    pub fn validate(&self, manifest: &Manifest) -> Result<(), BenchError> {
        if self.datasets.is_empty() {
            return Err(BenchError::Usage("no datasets requested".into()));
        }
        for name in &self.datasets {
            if manifest.entry(name).is_none() {
                let known: Vec<&str> = manifest.names().collect();
                return Err(BenchError::Usage(format!(
                    "unknown dataset {name:?}; the manifest lists {}",
                    known.join(", ")
                )));
            }
        }
        for (classifier, functions) in &self.functions {
            if let Some(bad) = functions.iter().find(|f| !classifier.accepts(f)) {
                return Err(BenchError::Usage(format!(
                    "{bad:?} is not a {} function",
                    classifier.name()
                )));
            }
        }
        Ok(())
    }

    pub fn cells_per_dataset(&self) -> usize {
        self.functions.iter().map(|(_, f)| f.len()).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub accuracy: f64,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    /// Training met its stopping criterion.
    Converged,
    /// SVM: iteration cap hit, no model. MLP: epoch cap hit, model scored.
    NotConverged,
    /// Any other error; logged, no metrics.
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub dataset: String,
    pub classifier: Classifier,
    pub function: String,
    pub train_time_s: f64,
    pub scores: Option<Scores>,
    pub status: CellStatus,
}

impl ResultRow {
    pub fn converged(&self) -> bool {
        self.status == CellStatus::Converged
    }
}

#[derive(Clone, Debug, Default)]
pub struct SuiteOutput {
    pub rows: Vec<ResultRow>,
    /// Datasets that could not be loaded, with the reason.
    pub skipped: Vec<(String, String)>,
}

impl SuiteOutput {
    pub fn failed_cells(&self) -> usize {
        self.rows.iter().filter(|r| r.status == CellStatus::Error).count()
    }
}

/// Training and test partitions for one manifest entry.
pub fn load_split(manifest: &Manifest, name: &str, data_dir: &Path) -> marcsinh::Result<(Dataset, Dataset)> {
    let entry = manifest
        .entry(name)
        .ok_or_else(|| marcsinh::Error::Manifest(format!("no entry named {name:?}")))?;
    match load_dataset(entry, data_dir)? {
        Loaded::Partitioned { train, test } => Ok((train, test)),
        Loaded::Single(d) => {
            let fraction = entry
                .test_fraction
                .ok_or_else(|| marcsinh::Error::Manifest(format!("{name}: single file without test_fraction")))?;
            split(&d, fraction)
        }
    }
}

/// Run every cell. Datasets that fail to load are skipped with a warning;
/// cells run in parallel but rows come back in request order.
pub fn run_suite(spec: &RunSpec, manifest: &Manifest, data_dir: &Path) -> Result<SuiteOutput, BenchError> {
    spec.validate(manifest)?;
    let mut out = SuiteOutput::default();
    let mut loaded = Vec::new();
    for name in &spec.datasets {
        match load_split(manifest, name, data_dir) {
            Ok(parts) => loaded.push((name.as_str(), parts)),
            Err(e) => {
                warn!("skipping {name}: {e}");
                out.skipped.push((name.clone(), e.to_string()));
            }
        }
    }

    let cells: Vec<(usize, Classifier, &str)> = loaded
        .iter()
        .enumerate()
        .flat_map(|(d, _)| {
            spec.functions
                .iter()
                .flat_map(move |(c, fs)| fs.iter().map(move |f| (d, *c, f.as_str())))
        })
        .collect();

    out.rows = cells
        .par_iter()
        .map(|&(d, classifier, function)| {
            let (name, (train, test)) = &loaded[d];
            run_cell(spec, name, classifier, function, train, test)
        })
        .collect();
    Ok(out)
}

fn run_cell(spec: &RunSpec, dataset: &str, classifier: Classifier, function: &str, train: &Dataset, test: &Dataset) -> ResultRow {
    let row = |train_time_s: f64, scores: Option<Scores>, status: CellStatus| ResultRow {
        dataset: dataset.to_string(),
        classifier,
        function: function.to_string(),
        train_time_s,
        scores,
        status,
    };
    let k = train.n_classes();
    let score = |pred: marcsinh::Result<Vec<usize>>| -> marcsinh::Result<Scores> {
        let r = evaluate(&test.y, &pred?, k)?;
        Ok(Scores {
            accuracy: r.accuracy,
            weighted_precision: r.weighted_precision,
            weighted_recall: r.weighted_recall,
            weighted_f1: r.weighted_f1,
        })
    };

    let start = Instant::now();
    let outcome = match classifier {
        Classifier::Svm => {
            let kernel = KernelKind::from_name(function, SvmConfig::BENCH_GAMMA).expect("validated");
            let mut cfg = SvmConfig::new(kernel);
            cfg.seed = spec.svm_seed;
            let fit = svc_fit(train, &cfg);
            let elapsed = start.elapsed().as_secs_f64();
            fit.and_then(|m| score(svc_predict(&m, &test.x)))
                .map(|s| (elapsed, s, CellStatus::Converged))
                .map_err(|e| (elapsed, e))
        }
        Classifier::Mlp => {
            let act = ActivationKind::from_name(function, spec.derivative_mode).expect("validated");
            let mut cfg = MlpConfig::new(act);
            cfg.seed = spec.mlp_seed;
            let fit = mlp_fit(train, &cfg);
            let elapsed = start.elapsed().as_secs_f64();
            fit.and_then(|m| {
                let status = if m.converged {
                    CellStatus::Converged
                } else {
                    CellStatus::NotConverged
                };
                score(mlp_predict(&m, &test.x)).map(|s| (elapsed, s, status))
            })
            .map_err(|e| (elapsed, e))
        }
    };
    match outcome {
        Ok((t, s, status)) => row(t, Some(s), status),
        Err((t, marcsinh::Error::DidNotConverge { iterations })) => {
            warn!("{dataset} {} {function}: did not converge after {iterations} iterations", classifier.name());
            row(t, None, CellStatus::NotConverged)
        }
        Err((t, e)) => {
            warn!("{dataset} {} {function}: {e}", classifier.name());
            row(t, None, CellStatus::Error)
        }
    }
}

pub const CSV_HEADER: [&str; 9] = [
    "dataset",
    "classifier",
    "function",
    "train_time_s",
    "accuracy",
    "weighted_precision",
    "weighted_recall",
    "weighted_f1",
    "converged",
];

const NA: &str = "N/A";

fn status_cell(s: CellStatus) -> &'static str {
    match s {
        CellStatus::Converged => "true",
        CellStatus::NotConverged => "false",
        CellStatus::Error => "error",
    }
}

pub fn render_table(rows: &[ResultRow], format: OutputFormat) -> Result<String, BenchError> {
    if rows.is_empty() {
        return Err(BenchError::Render("no result rows to render".into()));
    }
    match format {
        OutputFormat::Csv => render_csv(rows),
        OutputFormat::Markdown => Ok(render_markdown(rows)),
    }
}

fn render_csv(rows: &[ResultRow]) -> Result<String, BenchError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let wrap = |e: csv::Error| BenchError::Render(e.to_string());
    w.write_record(CSV_HEADER).map_err(wrap)?;
    for r in rows {
        let metric = |f: fn(&Scores) -> f64| r.scores.as_ref().map_or(NA.to_string(), |s| f(s).to_string());
        w.write_record([
            r.dataset.clone(),
            r.classifier.name().to_string(),
            r.function.clone(),
            r.train_time_s.to_string(),
            metric(|s| s.accuracy),
            metric(|s| s.weighted_precision),
            metric(|s| s.weighted_recall),
            metric(|s| s.weighted_f1),
            status_cell(r.status).to_string(),
        ])
        .map_err(wrap)?;
    }
    let bytes = w.into_inner().map_err(|e| BenchError::Render(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| BenchError::Render(e.to_string()))
}

fn render_markdown(rows: &[ResultRow]) -> String {
    let mut out = String::new();
    let mut current: Option<&str> = None;
    for r in rows {
        if current != Some(r.dataset.as_str()) {
            if current.is_some() {
                out.push('\n');
            }
            current = Some(&r.dataset);
            let _ = writeln!(out, "### {}\n", r.dataset);
            out.push_str("| Classifier | Function | Training time (s) | Accuracy | Weighted precision | Weighted recall | Weighted F1 |\n");
            out.push_str("|---|---|---|---|---|---|---|\n");
        }
        let time = match (r.scores, r.status) {
            (None, CellStatus::NotConverged) => "Did not converge".to_string(),
            (None, CellStatus::Error) => "Error".to_string(),
            _ => format!("{:.3}", r.train_time_s),
        };
        let cells = match r.scores {
            Some(s) => [s.accuracy, s.weighted_precision, s.weighted_recall, s.weighted_f1]
                .map(|v| format!("{:.2}", marcsinh::metrics::round2(v))),
            None => [NA; 4].map(String::from),
        };
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} |",
            r.classifier.name().to_uppercase(),
            r.function,
            time,
            cells.join(" | ")
        );
    }
    out
}

/// Inverse of the CSV rendering.
pub fn parse_csv(text: &str) -> Result<Vec<ResultRow>, BenchError> {
    let bad = |msg: String| BenchError::Render(msg);
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| bad(e.to_string()))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("not a number: {s:?}")));
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let scores = if rec[4] == *NA {
            None
        } else {
            Some(Scores {
                accuracy: num(&rec[4])?,
                weighted_precision: num(&rec[5])?,
                weighted_recall: num(&rec[6])?,
                weighted_f1: num(&rec[7])?,
            })
        };
        let status = match &rec[8] {
            "true" => CellStatus::Converged,
            "false" => CellStatus::NotConverged,
            "error" => CellStatus::Error,
            other => return Err(bad(format!("bad converged cell {other:?}"))),
        };
        rows.push(ResultRow {
            dataset: rec[0].to_string(),
            classifier: rec[1].parse()?,
            function: rec[2].to_string(),
            train_time_s: num(&rec[3])?,
            scores,
            status,
        });
    }
    Ok(rows)
}
