//! Command-line front end: `gen`, `train`, `encode`, `search` and `eval`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dataset::{gen_synthetic, load_csv, load_raw, save_csv, split, DataSplit, LabeledDataset};
use crate::error::{Error, Result};
use crate::eval::{curve_sets, retrieve_count_for, search, write_curve_csv, MetricSet};
use crate::model::{fit, HashModel, PipelineConfig, Scheme};
use crate::persist::{load_model, read_codes, save_model, write_codes};

#[derive(Debug, Parser)]
#[command(name = "slsh", version, about = "Learned hyperplane hashing and Hamming retrieval")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic labeled dataset and split it into learning/test/query CSVs
    Gen(GenArgs),
    /// Fit preprocessing and a hash model on a learning set
    Train(TrainArgs),
    /// Encode a dataset into a code dump with a stored model
    Encode(EncodeArgs),
    /// Hamming search of query codes against a database of codes
    Search(SearchArgs),
    /// Precision / recall / error-rate table over models and bit widths
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Raw,
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Column holding the integer label (CSV)
    #[arg(long = "label-col", default_value_t = 0)]
    pub label_col: usize,
    /// Skip the first CSV line
    #[arg(long)]
    pub has_header: bool,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Vector dimension (raw format)
    #[arg(long)]
    pub dims: Option<usize>,
}

impl InputArgs {
    fn load(&self, path: &Path, labels: Option<&Path>) -> Result<LabeledDataset> {
        match self.format {
            Format::Csv => load_csv(path, self.label_col, self.has_header),
            Format::Raw => {
                let dims = self
                    .dims
                    .ok_or_else(|| Error::Validation("--dims is required for raw input".into()))?;
                let labels = labels.ok_or_else(|| {
                    Error::Validation(format!("raw input {} needs a labels file", path.display()))
                })?;
                load_raw(path, dims, labels)
            }
        }
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub labels: usize,
    #[arg(long = "per-label")]
    pub per_label: usize,
    #[arg(long)]
    pub dims: usize,
    #[arg(long, default_value_t = 0.1)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// learning,test,query fractions
    #[arg(long, default_value = "0.5,0.25,0.25")]
    pub split: String,
    #[arg(long = "out-dir", default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Labels file for raw input
    #[arg(long = "labels")]
    pub labels: Option<PathBuf>,
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value = "slsh")]
    pub scheme: String,
    /// Candidate hyperplane pool size
    #[arg(long, default_value_t = 10_000)]
    pub btilde: usize,
    /// Selected bits
    #[arg(long, default_value_t = 1024)]
    pub bits: usize,
    #[arg(long, default_value_t = 10_000)]
    pub iters: usize,
    #[arg(long = "pca-ratio", default_value_t = 0.8)]
    pub pca_ratio: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long = "labels")]
    pub labels: Option<PathBuf>,
    #[command(flatten)]
    pub input: InputArgs,
    /// Code width; defaults to the model's full selection
    #[arg(long)]
    pub bits: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Code dump searched
    #[arg(long)]
    pub db: PathBuf,
    /// Code dump of queries
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long, default_value_t = 0.01, conflicts_with = "top")]
    pub acquisition: f64,
    /// Fixed number of results per query
    #[arg(long)]
    pub top: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    All,
    Pr,
    ErrorRate,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Comma-separated model files
    #[arg(long, value_delimiter = ',', required = true)]
    pub models: Vec<PathBuf>,
    /// Comma-separated code widths
    #[arg(long, value_delimiter = ',', default_value = "32,64,128,256,512,1024")]
    pub bits: Vec<usize>,
    #[arg(long, default_value_t = 0.01)]
    pub acquisition: f64,
    /// Database (test) set
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long = "test-labels")]
    pub test_labels: Option<PathBuf>,
    #[arg(long)]
    pub query: PathBuf,
    #[arg(long = "query-labels")]
    pub query_labels: Option<PathBuf>,
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value_t = MetricArg::All)]
    pub metric: MetricArg,
    /// Write the CSV here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_fractions(s: &str) -> Result<[f64; 3]> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::Validation(format!("invalid split fraction {p:?}")))
        })
        .collect::<Result<_>>()?;
    <[f64; 3]>::try_from(parts)
        .map_err(|p| Error::Validation(format!("--split needs 3 fractions, got {}", p.len())))
}

pub const SPLIT_FILES: [&str; 3] = ["learning.csv", "test.csv", "query.csv"];

fn cmd_gen(args: &GenArgs, out: &mut dyn Write) -> Result<()> {
    let fractions = parse_fractions(&args.split)?;
    let data = gen_synthetic(args.labels, args.per_label, args.dims, args.sigma, args.seed)?;
    let parts: DataSplit = split(&data, fractions, args.seed)?;
    fs::create_dir_all(&args.out_dir)?;
    for (name, set) in SPLIT_FILES.iter().zip([&parts.learning, &parts.test, &parts.query]) {
        let path = args.out_dir.join(name);
        save_csv(set, &path, 0)?;
        writeln!(out, "wrote {} ({} rows)", path.display(), set.n_rows())?;
    }
    Ok(())
}

fn cmd_train(args: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    let data = args.input.load(&args.data, args.labels.as_deref())?;
    let cfg = PipelineConfig {
        scheme: args.scheme.parse::<Scheme>()?,
        pca_ratio: args.pca_ratio,
        pool_size: args.btilde,
        bits: args.bits,
        iterations: args.iters,
        seed: args.seed,
    };
    let (model, summary) = fit(&data, &cfg)?;
    save_model(&model, &args.out)?;
    writeln!(
        out,
        "scheme={} rows={} input_dims={} pca_dims={} contribution_ratio={:.6} bits={}",
        model.scheme,
        data.n_rows(),
        summary.input_dims,
        summary.pca_dims,
        summary.contribution_ratio,
        model.capacity()
    )?;
    if let Some((before, after)) = summary.objective {
        writeln!(out, "objective_initial={before:.6} objective_final={after:.6}")?;
    }
    writeln!(out, "wrote {}", args.out.display())?;
    Ok(())
}

fn cmd_encode(args: &EncodeArgs, out: &mut dyn Write) -> Result<()> {
    let model = load_model(&args.model)?;
    let data = args.input.load(&args.data, args.labels.as_deref())?;
    if data.n_dims() != model.input_dims() {
        return Err(Error::shape(model.input_dims(), data.n_dims()));
    }
    let codes = model.encode(&data, args.bits)?;
    write_codes(&args.out, &codes, data.labels())?;
    writeln!(
        out,
        "wrote {} ({} codes x {} bits)",
        args.out.display(),
        codes.len(),
        codes.first().map_or(0, |c| c.len())
    )?;
    Ok(())
}

fn cmd_search(args: &SearchArgs, out: &mut dyn Write) -> Result<()> {
    let (db, _) = read_codes(&args.db)?;
    let (queries, _) = read_codes(&args.queries)?;
    let k = match args.top {
        Some(k) => k,
        None => retrieve_count_for(args.acquisition, db.len())?,
    };
    let mut buf = String::from("query,rank,index,distance\n");
    for (qi, q) in queries.iter().enumerate() {
        let r = search(q, &db, k)?;
        for (rank, (idx, d)) in r.ranked_indices.iter().zip(&r.distances).enumerate() {
            buf.push_str(&format!("{qi},{rank},{idx},{d}\n"));
        }
    }
    match &args.out {
        Some(p) => fs::write(p, buf)?,
        None => out.write_all(buf.as_bytes())?,
    }
    Ok(())
}

/// Scheme tag, or `tag:file-stem` when several models share a tag.
fn model_names(paths: &[PathBuf], models: &[HashModel]) -> Vec<String> {
    models
        .iter()
        .zip(paths)
        .map(|(m, p)| {
            let shared = models.iter().filter(|o| o.scheme == m.scheme).count() > 1;
            if shared {
                let stem = p.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
                format!("{}:{stem}", m.scheme)
            } else {
                m.scheme.to_string()
            }
        })
        .collect()
}

fn cmd_eval(args: &EvalArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let models = args
        .models
        .iter()
        .map(|p| load_model(p))
        .collect::<Result<Vec<_>>>()?;
    let test = args.input.load(&args.test, args.test_labels.as_deref())?;
    let query = args.input.load(&args.query, args.query_labels.as_deref())?;
    let names = model_names(&args.models, &models);
    let labeled: Vec<(String, &HashModel)> = names.into_iter().zip(&models).collect();
    let cells = curve_sets(&labeled, &args.bits, &test, &query, args.acquisition)?;
    for c in &cells {
        if let Err(e) = &c.result {
            writeln!(err, "slsh: warning[{}]: {} at {} bits: {e}", e.kind(), c.scheme, c.bits)?;
        }
    }
    let metrics = match args.metric {
        MetricArg::All => MetricSet::All,
        MetricArg::Pr => MetricSet::PrecisionRecall,
        MetricArg::ErrorRate => MetricSet::ErrorRate,
    };
    match &args.out {
        Some(p) => {
            let mut buf = Vec::new();
            write_curve_csv(&cells, metrics, &mut buf)?;
            fs::write(p, buf)?;
        }
        None => write_curve_csv(&cells, metrics, out)?,
    }
    Ok(())
}

pub fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Gen(a) => cmd_gen(a, out),
        Command::Train(a) => cmd_train(a, out),
        Command::Encode(a) => cmd_encode(a, out),
        Command::Search(a) => cmd_search(a, out),
        Command::Eval(a) => cmd_eval(a, out, err),
    }
}

/// Caps rayon's global pool from `SLSH_THREADS` (unset or 0 means automatic).
pub fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("SLSH_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| Error::Validation(format!("SLSH_THREADS must be a count, got {raw:?}")))?;
    if n > 0 {
        // fails only if the pool was already built, in which case keep it
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Runs the CLI on `args` and returns the process exit code. Failures print a
/// single `slsh: error[<kind>]: <message>` line to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let msg = e.to_string();
            let first = msg
                .lines()
                .next()
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ");
            let _ = writeln!(err, "slsh: error[usage]: {first}");
            return 2;
        }
    };
    let result = configure_threads().and_then(|()| execute(&cli, out, err));
    match result {
        Ok(()) => 0,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            let _ = writeln!(err, "slsh: error[{}]: {msg}", e.kind());
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractions_parse() {
        assert_eq!(parse_fractions("0.5,0.25,0.25").unwrap(), [0.5, 0.25, 0.25]);
        assert!(parse_fractions("0.5,0.5").is_err());
        assert!(parse_fractions("a,b,c").is_err());
    }

    #[test]
    fn usage_errors_are_one_line() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(["slsh", "train", "--bogus"], &mut out, &mut err);
        assert_eq!(code, 2);
        let text = String::from_utf8(err).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("slsh: error[usage]: "));
    }
}
