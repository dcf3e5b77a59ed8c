//! Command-line front end. Every command is a thin shell over library calls;
//! the binary only forwards `std::env::args_os()` to [`run`].
//!
//! Exit codes: 0 success, 2 usage, 3 data or validation, 4 convergence.
//!
//! Each command that writes a file also writes `<output>.manifest`, a record
//! of the normalized command line. `replay <manifest>` reruns it and checks
//! the outputs come out byte-identical.

use std::collections::HashSet;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use crate::artifact::{load_model, render_model};
use crate::config::LabConfig;
use crate::dataset::{generate_synthetic, load_csv, load_csv_for_prediction, split_half, write_csv, Dataset};
use crate::error::Error;
use crate::evaluation::{compare, predict_dataset, Family, FittedModel};
use crate::kv::KvDoc;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_CONVERGENCE: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Lab(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Lab(Error::Convergence { .. } | Error::Divergence { .. } | Error::Numeric { .. }) => {
                EXIT_CONVERGENCE
            }
            CliError::Lab(_) => EXIT_DATA,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "premium-lab", version, about = "Fit and compare GLM, GAM and neural network pricing models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Subcommand)]
enum Command {
    /// Generate a synthetic customer CSV.
    Gen(GenArgs),
    /// Split a CSV in half and fit one model family on the training half.
    Fit(FitArgs),
    /// Score a CSV with a saved model.
    Predict(PredictArgs),
    /// Compare saved models on their shared test half.
    Compare(CompareArgs),
    /// Rerun a manifest and check the outputs are unchanged.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Args)]
struct GenArgs {
    /// Number of customers; overrides the config file.
    #[arg(long)]
    n: Option<usize>,
    /// Generator seed; overrides the config file.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV; stdout when omitted (and then no manifest).
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
struct FitArgs {
    #[arg(long)]
    family: Family,
    #[arg(long = "in")]
    input: PathBuf,
    /// Seed of the train/test split.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Model artifact; the test half ids go to `<out>.test_index`.
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long = "in")]
    input: PathBuf,
    /// Output CSV; stdout when omitted.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
struct CompareArgs {
    /// The CSV the models were fit from.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Markdown report; the CSV goes next to it with a `.csv` extension.
    #[arg(short, long)]
    out: PathBuf,
    /// Two or more model artifacts.
    models: Vec<PathBuf>,
}

#[derive(Debug, Clone, Args)]
struct ReplayArgs {
    manifest: PathBuf,
}

/// Parses `args` (program name first), runs the command and returns the exit
/// code. Errors are printed to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(command: &Command) -> CliResult<()> {
    match command {
        Command::Gen(a) => cmd_gen(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Replay(a) => cmd_replay(a),
    }
}

fn load_config(path: Option<&Path>) -> CliResult<LabConfig> {
    Ok(match path {
        Some(p) => LabConfig::load(p)?,
        None => LabConfig::default(),
    })
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> CliResult<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::Lab(Error::Io { path: path.into(), source: e }))
}

fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Lab(Error::Io { path: path.into(), source: e }))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn manifest_path(output: &Path) -> PathBuf {
    with_suffix(output, ".manifest")
}

pub fn test_index_path(model: &Path) -> PathBuf {
    with_suffix(model, ".test_index")
}

fn absolute(p: &Path) -> PathBuf {
    std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf())
}

// ---- manifests ----

/// What a run read and wrote, plus enough to rerun it.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command: String,
    /// Normalized arguments after the subcommand, with absolute paths.
    pub argv: Vec<String>,
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub version: String,
    /// Seconds since the Unix epoch. Ignored by replay.
    pub timestamp: u64,
}

impl RunManifest {
    pub fn render(&self) -> String {
        let mut doc = KvDoc::new();
        doc.push("command", &self.command)
            .push("version", &self.version)
            .push("timestamp", self.timestamp)
            .push("config", self.config.as_ref().map(|p| p.display().to_string()).unwrap_or_default())
            .push("seed", self.seed.map(|s| s.to_string()).unwrap_or_default());
        doc.section("argv");
        for (k, a) in self.argv.iter().enumerate() {
            doc.push(&format!("arg_{k}"), a);
        }
        doc.section("inputs");
        for (k, p) in self.inputs.iter().enumerate() {
            doc.push(&format!("path_{k}"), p.display());
        }
        doc.section("outputs");
        for (k, p) in self.outputs.iter().enumerate() {
            doc.push(&format!("path_{k}"), p.display());
        }
        doc.render()
    }

    pub fn parse(text: &str) -> crate::Result<Self> {
        let doc = KvDoc::parse(text)?;
        let root = doc.root();
        let numbered = |section: &str, prefix: &str| -> crate::Result<Vec<String>> {
            let s = doc.get_section(section)?;
            let count = s.keys().count();
            (0..count).map(|k| s.req(&format!("{prefix}_{k}")).map(str::to_string)).collect()
        };
        let optional = |key: &str| root.raw(key).filter(|v| !v.is_empty());
        Ok(RunManifest {
            command: root.req("command")?.to_string(),
            argv: numbered("argv", "arg")?,
            config: optional("config").map(PathBuf::from),
            seed: optional("seed")
                .map(|s| s.parse().map_err(|_| Error::Schema(format!("bad seed `{s}`"))))
                .transpose()?,
            inputs: numbered("inputs", "path")?.into_iter().map(PathBuf::from).collect(),
            outputs: numbered("outputs", "path")?.into_iter().map(PathBuf::from).collect(),
            version: root.req("version")?.to_string(),
            timestamp: root.parse("timestamp")?,
        })
    }
}

fn write_manifest(
    command: &Command,
    config: Option<&Path>,
    seed: Option<u64>,
    inputs: &[&Path],
    outputs: &[&Path],
) -> CliResult<()> {
    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let (name, argv) = normalized_argv(command);
    let manifest = RunManifest {
        command: name.to_string(),
        argv,
        config: config.map(absolute),
        seed,
        inputs: inputs.iter().map(|p| absolute(p)).collect(),
        outputs: outputs.iter().map(|p| absolute(p)).collect(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp,
    };
    write_file(&manifest_path(outputs[0]), manifest.render())
}

fn push_path(argv: &mut Vec<String>, flag: &str, p: &Path) {
    argv.push(flag.into());
    argv.push(absolute(p).display().to_string());
}

fn normalized_argv(command: &Command) -> (&'static str, Vec<String>) {
    let mut v = Vec::new();
    let name = match command {
        Command::Gen(a) => {
            if let Some(n) = a.n {
                v.extend(["--n".into(), n.to_string()]);
            }
            if let Some(s) = a.seed {
                v.extend(["--seed".into(), s.to_string()]);
            }
            if let Some(c) = &a.config {
                push_path(&mut v, "--config", c);
            }
            if let Some(o) = &a.out {
                push_path(&mut v, "--out", o);
            }
            "gen"
        }
        Command::Fit(a) => {
            v.extend(["--family".into(), a.family.key().into(), "--seed".into(), a.seed.to_string()]);
            push_path(&mut v, "--in", &a.input);
            if let Some(c) = &a.config {
                push_path(&mut v, "--config", c);
            }
            push_path(&mut v, "--out", &a.out);
            "fit"
        }
        Command::Predict(a) => {
            push_path(&mut v, "--model", &a.model);
            push_path(&mut v, "--in", &a.input);
            if let Some(o) = &a.out {
                push_path(&mut v, "--out", o);
            }
            "predict"
        }
        Command::Compare(a) => {
            push_path(&mut v, "--data", &a.data);
            if let Some(c) = &a.config {
                push_path(&mut v, "--config", c);
            }
            push_path(&mut v, "--out", &a.out);
            v.extend(a.models.iter().map(|m| absolute(m).display().to_string()));
            "compare"
        }
        Command::Replay(a) => {
            v.push(absolute(&a.manifest).display().to_string());
            "replay"
        }
    };
    (name, v)
}

// ---- commands ----

fn cmd_gen(a: &GenArgs) -> CliResult<()> {
    let cfg = load_config(a.config.as_deref())?;
    let mut params = cfg.generator;
    if let Some(n) = a.n {
        params.n = n;
    }
    if let Some(s) = a.seed {
        params.seed = s;
    }
    params.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let data = generate_synthetic(&params)?;
    let mut buf = Vec::new();
    write_csv(&data, &mut buf).expect("writing to memory");
    match &a.out {
        Some(out) => {
            write_file(out, &buf)?;
            let inputs: Vec<&Path> = a.config.iter().map(PathBuf::as_path).collect();
            write_manifest(&Command::Gen(a.clone()), a.config.as_deref(), Some(params.seed), &inputs, &[out])
        }
        None => {
            print!("{}", String::from_utf8(buf).expect("csv is utf-8"));
            Ok(())
        }
    }
}

/// One id per line under an `id` header.
pub fn render_test_index(test: &Dataset) -> String {
    let mut out = String::from("id\n");
    for id in test.ids() {
        let _ = writeln!(out, "{id}");
    }
    out
}

fn parse_test_index(text: &str, path: &Path) -> CliResult<Vec<u64>> {
    let mut lines = text.lines();
    if lines.next() != Some("id") {
        return Err(Error::Schema(format!("{} is not a test index", path.display())).into());
    }
    lines
        .map(|l| {
            l.trim()
                .parse()
                .map_err(|_| Error::Schema(format!("bad id `{l}` in {}", path.display())).into())
        })
        .collect()
}

fn cmd_fit(a: &FitArgs) -> CliResult<()> {
    let cfg = load_config(a.config.as_deref())?;
    let data = load_csv(&a.input)?;
    let (train, test) = split_half(&data, a.seed)?;
    let model = cfg.spec(a.family).fit(&train, &cfg.encoding)?;
    let index = test_index_path(&a.out);
    write_file(&a.out, render_model(&model, &cfg.encoding))?;
    write_file(&index, render_test_index(&test))?;
    let mut inputs = vec![a.input.as_path()];
    inputs.extend(a.config.as_deref());
    write_manifest(&Command::Fit(a.clone()), a.config.as_deref(), Some(a.seed), &inputs, &[&a.out, &index])
}

/// `id,predicted_expenditure` plus `ratio` (predicted / actual) when the
/// input carried actuals. Numbers use the shortest exact decimal form.
pub fn render_predictions(model: &FittedModel, data: &Dataset, encoding: &crate::dataset::EncodingConfig, with_ratio: bool) -> String {
    let preds = predict_dataset(model, data, encoding);
    let mut out = String::from(if with_ratio { "id,predicted_expenditure,ratio\n" } else { "id,predicted_expenditure\n" });
    for (r, p) in data.records().iter().zip(preds) {
        if with_ratio {
            let _ = writeln!(out, "{},{p},{}", r.id, p / r.expenditure);
        } else {
            let _ = writeln!(out, "{},{p}", r.id);
        }
    }
    out
}

fn cmd_predict(a: &PredictArgs) -> CliResult<()> {
    let (model, encoding) = load_model(&a.model)?;
    let (data, has_actuals) = load_csv_for_prediction(&a.input)?;
    let text = render_predictions(&model, &data, &encoding, has_actuals);
    match &a.out {
        Some(out) => {
            write_file(out, text)?;
            write_manifest(&Command::Predict(a.clone()), None, None, &[&a.model, &a.input], &[out])
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_compare(a: &CompareArgs) -> CliResult<()> {
    if a.models.len() < 2 {
        return Err(CliError::Usage(format!("compare needs at least two models, got {}", a.models.len())));
    }
    let cfg = load_config(a.config.as_deref())?;
    let data = load_csv(&a.data)?;

    let mut models = Vec::new();
    let mut encoding = None;
    let mut index: Option<(Vec<u64>, PathBuf)> = None;
    for path in &a.models {
        let (model, enc) = load_model(path)?;
        match &encoding {
            None => encoding = Some(enc),
            Some(e) if *e != enc => {
                return Err(Error::Schema(format!("{} was fit with a different encoding", path.display())).into())
            }
            Some(_) => {}
        }
        let ipath = test_index_path(path);
        let ids = parse_test_index(&read_file(&ipath)?, &ipath)?;
        match &index {
            None => index = Some((ids, ipath)),
            Some((first, fpath)) if *first != ids => {
                return Err(Error::Leakage(format!(
                    "{} and {} hold different test halves; a model may have trained on another's test records",
                    fpath.display(),
                    ipath.display()
                ))
                .into())
            }
            Some(_) => {}
        }
        models.push(model);
    }
    let encoding = encoding.expect("at least two models");
    let (ids, _) = index.expect("at least two models");

    let test_ids: HashSet<u64> = ids.iter().copied().collect();
    let known: HashSet<u64> = data.ids().into_iter().collect();
    if let Some(missing) = ids.iter().find(|id| !known.contains(id)) {
        return Err(Error::Schema(format!("test id {missing} is not in {}", a.data.display())).into());
    }
    let train_ids: HashSet<u64> = known.difference(&test_ids).copied().collect();
    let train = data.select(&train_ids)?;
    let test = data.select(&test_ids)?;

    let report = compare(&models, &train, &test, &encoding, &cfg.compare)?;
    let csv = a.out.with_extension("csv");
    write_file(&a.out, report.to_markdown())?;
    write_file(&csv, report.to_csv())?;
    let mut inputs: Vec<&Path> = vec![a.data.as_path()];
    inputs.extend(a.models.iter().map(PathBuf::as_path));
    inputs.extend(a.config.as_deref());
    write_manifest(&Command::Compare(a.clone()), a.config.as_deref(), None, &inputs, &[&a.out, &csv])
}

fn cmd_replay(a: &ReplayArgs) -> CliResult<()> {
    let manifest = RunManifest::parse(&read_file(&a.manifest)?)?;
    if manifest.command == "replay" {
        return Err(CliError::Usage("a replay manifest cannot be replayed".into()));
    }
    let before: Vec<Option<Vec<u8>>> = manifest.outputs.iter().map(|p| std::fs::read(p).ok()).collect();
    let argv = std::iter::once("premium-lab".to_string())
        .chain(std::iter::once(manifest.command.clone()))
        .chain(manifest.argv.iter().cloned());
    let cli = Cli::try_parse_from(argv).map_err(|e| CliError::Usage(e.to_string()))?;
    execute(&cli.command)?;
    let mut changed = Vec::new();
    for (path, old) in manifest.outputs.iter().zip(before) {
        let new = std::fs::read(path).ok();
        if old.is_some() && new != old {
            changed.push(path.display().to_string());
        }
    }
    if !changed.is_empty() {
        return Err(Error::validation(format!("replay changed {}", changed.join(", "))).into());
    }
    eprintln!("replayed {} with {} identical output(s)", manifest.command, manifest.outputs.len());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trips() {
        let m = RunManifest {
            command: "fit".into(),
            argv: vec!["--family".into(), "gam".into(), "--in".into(), "/tmp/a b.csv".into()],
            config: None,
            seed: Some(7),
            inputs: vec!["/tmp/a b.csv".into()],
            outputs: vec!["/tmp/m".into(), "/tmp/m.test_index".into()],
            version: "0.1.0".into(),
            timestamp: 12,
        };
        assert_eq!(RunManifest::parse(&m.render()).unwrap(), m);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run(["premium-lab", "bogus"]), EXIT_USAGE);
        assert_eq!(run(["premium-lab", "gen", "--n", "0"]), EXIT_USAGE);
        let conv = CliError::Lab(Error::Divergence { epoch: 1, loss: 1.0 });
        assert_eq!(conv.exit_code(), EXIT_CONVERGENCE);
        assert_eq!(CliError::Lab(Error::Leakage("x".into())).exit_code(), EXIT_DATA);
    }
}
