use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use relu_tca::fca::SelectionMethod;
use relu_tca::io::{dataset_to_csv, ingest, write_model, Normalization};
use relu_tca::minterm::AttributeVector;
use relu_tca::network::train;
use relu_tca::pipeline::{concept_dots, explain, run_pipeline, write_outputs, Artifacts, PipelineConfig};
use relu_tca::{Error, Result};

/// Interpret a simple ReLU network as weighted logic trees.
#[derive(Debug, Parser)]
#[command(name = "relu-tca", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Normalize (and optionally balance) a CSV and write it back out.
    Ingest {
        #[command(flatten)]
        data: DataArgs,
        /// Output CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a model and write it in the model text format.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long, default_value = "model.txt")]
        out: PathBuf,
    },
    /// Run the full interpretation and write the report and artifacts.
    Interpret {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        train: TrainArgs,
        #[command(flatten)]
        interp: InterpretArgs,
        /// Print the JSON report instead of the text tables.
        #[arg(long)]
        json: bool,
        /// Do not print the report.
        #[arg(long, short)]
        quiet: bool,
    },
    /// Decompose the score of one object using artifacts of an earlier run.
    Explain {
        /// `artifacts.json` or the output directory holding it.
        #[arg(long)]
        artifacts: PathBuf,
        /// Values are in raw data units and get scaled like the training data.
        #[arg(long)]
        raw: bool,
        #[arg(long)]
        json: bool,
        /// Attribute values, separated by spaces or commas.
        #[arg(required = true, allow_hyphen_values = true)]
        values: Vec<String>,
    },
    /// Write one DOT file per concept tree.
    ExportDot {
        #[arg(long)]
        artifacts: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
    },
}

#[derive(Debug, Args)]
struct DataArgs {
    /// TOML file with pipeline settings; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV with a header row and a 0/1 target in the last column.
    #[arg(long)]
    data: Option<PathBuf>,
    /// minmax or none.
    #[arg(long)]
    normalize: Option<Normalization>,
    /// Downsample the majority class.
    #[arg(long)]
    balance: bool,
    #[arg(long)]
    balance_seed: Option<u64>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Number of ReLU nodes.
    #[arg(long, short = 'l')]
    relu_count: Option<usize>,
    /// Extra linear layer widths below the ReLU layer, comma separated.
    #[arg(long, value_delimiter = ',')]
    hidden_below: Option<Vec<usize>>,
    /// Extra linear layer widths above the ReLU layer, comma separated.
    #[arg(long, value_delimiter = ',')]
    hidden_above: Option<Vec<usize>>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct InterpretArgs {
    /// Model file; a model is trained when omitted.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long)]
    n_bits: Option<u32>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    min_support: Option<usize>,
    /// Share of objects the automatically chosen cells must hold.
    #[arg(long)]
    coverage: Option<f64>,
    #[arg(long)]
    require_mixed: bool,
    /// Concept selection method, M1 to M4.
    #[arg(long)]
    method: Option<SelectionMethod>,
    #[arg(long)]
    support_weighted: bool,
    /// Refit the threshold of a loaded model on the data.
    #[arg(long)]
    refit_threshold: bool,
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig> {
    let Some(path) = path else {
        return Ok(PipelineConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

impl DataArgs {
    fn apply(&self, c: &mut PipelineConfig) {
        if let Some(v) = &self.data {
            c.data = Some(v.clone());
        }
        if let Some(v) = self.normalize {
            c.normalization = v;
        }
        c.balance |= self.balance;
        if let Some(v) = self.balance_seed {
            c.balance_seed = v;
        }
    }
}

impl TrainArgs {
    fn apply(&self, c: &mut PipelineConfig) {
        let t = &mut c.train;
        if let Some(v) = self.relu_count {
            t.relu_count = v;
        }
        if let Some(v) = &self.hidden_below {
            t.hidden_below = v.clone();
        }
        if let Some(v) = &self.hidden_above {
            t.hidden_above = v.clone();
        }
        if let Some(v) = self.epochs {
            t.epochs = v;
        }
        if let Some(v) = self.learning_rate {
            t.learning_rate = v;
        }
        if let Some(v) = self.seed {
            t.seed = v;
        }
    }
}

impl InterpretArgs {
    fn apply(&self, c: &mut PipelineConfig) {
        if let Some(v) = &self.model {
            c.model = Some(v.clone());
        }
        if let Some(v) = &self.output {
            c.output = v.clone();
        }
        if let Some(v) = self.n_bits {
            c.n_bits = v;
        }
        if let Some(v) = self.epsilon {
            c.epsilon = Some(v);
        }
        if let Some(v) = self.min_support {
            c.min_support = Some(v);
        }
        if let Some(v) = self.coverage {
            c.coverage = v;
        }
        if let Some(v) = self.method {
            c.method = v;
        }
        c.require_mixed |= self.require_mixed;
        c.support_weighted |= self.support_weighted;
        c.refit_threshold |= self.refit_threshold;
    }
}

fn data_path(c: &PipelineConfig) -> Result<&Path> {
    c.data
        .as_deref()
        .ok_or_else(|| Error::Config("no data file given (use --data or the config file)".into()))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
    }
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn artifacts_file(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join("artifacts.json")
    } else {
        path.to_path_buf()
    }
}

fn parse_values(raw: &[String]) -> Result<Vec<f64>> {
    raw.iter()
        .flat_map(|s| s.split(','))
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("`{s}` is not a number")))
        })
        .collect()
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest { data, out } => {
            let mut c = load_config(data.config.as_deref())?;
            data.apply(&mut c);
            let ingested = ingest(data_path(&c)?, c.normalization, c.balance.then_some(c.balance_seed))?;
            let csv = dataset_to_csv(&ingested.data)?;
            let (zeros, ones) = ingested.data.class_counts();
            eprintln!(
                "{} of {} rows kept (class 0: {zeros}, class 1: {ones})",
                ingested.data.len(),
                ingested.raw_rows
            );
            match out {
                Some(path) => write_file(&path, &csv)?,
                None => print!("{csv}"),
            }
        }
        Command::Train {
            data,
            train: targs,
            out,
        } => {
            let mut c = load_config(data.config.as_deref())?;
            data.apply(&mut c);
            targs.apply(&mut c);
            c.validate()?;
            let ingested = ingest(data_path(&c)?, c.normalization, c.balance.then_some(c.balance_seed))?;
            let (model, report) = train(&ingested.data, &c.train)?;
            write_file(&out, &write_model(&model))?;
            println!(
                "trained {} epochs: loss {:.5} -> best {:.5} at epoch {}, training accuracy {:.1}%, threshold {:.6}",
                report.epochs_run,
                report.initial_loss,
                report.best_loss,
                report.best_epoch,
                100.0 * report.training_accuracy,
                model.threshold()
            );
            eprintln!("model written to {}", out.display());
        }
        Command::Interpret {
            data,
            train: targs,
            interp,
            json,
            quiet,
        } => {
            let mut c = load_config(data.config.as_deref())?;
            data.apply(&mut c);
            targs.apply(&mut c);
            interp.apply(&mut c);
            let result = run_pipeline(&c)?;
            let files = write_outputs(&result, &c.output)?;
            if !quiet {
                if json {
                    print!("{}", result.report.to_json());
                } else {
                    print!("{}", result.report.render_text());
                }
            }
            eprintln!("{} files written to {}", files.len(), c.output.display());
        }
        Command::Explain {
            artifacts,
            raw,
            json,
            values,
        } => {
            let artifacts = Artifacts::load(&artifacts_file(&artifacts))?;
            let values = parse_values(&values)?;
            let x = if raw {
                artifacts.scaler.apply(&values)?
            } else {
                AttributeVector::new(values)?
            };
            let e = explain(&x, &artifacts)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&e)?);
            } else {
                print!("{}", e.render_text(&artifacts.attribute_names));
            }
        }
        Command::ExportDot { artifacts, output } => {
            let artifacts = Artifacts::load(&artifacts_file(&artifacts))?;
            let dots = concept_dots(&artifacts);
            for (name, dot) in &dots {
                write_file(&output.join(name), dot)?;
            }
            eprintln!("{} DOT files written to {}", dots.len(), output.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 1 })
        }
    }
}
