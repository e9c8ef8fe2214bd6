mod config;

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use mondrian_polya::eval::{
    density_grid, gen_synthetic, load_csv, minmax_scale, roc_auc, shingle, shingle_labels, write_dataset_csv,
    write_grid_csv, write_scores_csv, LabelColumn, SyntheticSet,
};
use mondrian_polya::oplog::{read_oplog, replay, Op};
use mondrian_polya::{BoundingBox, Dataset, Forest, Matrix, ModelKind, TreeConfig};

use config::{required, Config};

/// Mondrian Pólya forests: fitting, scoring, streaming replay and evaluation.
#[derive(Parser)]
#[command(name = "mpf", version)]
struct Cli {
    /// JSON file supplying defaults for any flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a forest and write a JSON snapshot.
    Fit {
        #[arg(long)]
        input: Option<PathBuf>,
        /// Column to drop before fitting (index or header name).
        #[arg(long)]
        label_col: Option<String>,
        #[command(flatten)]
        forest: ForestArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score every row of a CSV against a snapshot.
    Score {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        label_col: Option<String>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        phi: Option<f64>,
        /// Scores CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay an insert/delete/score log against a streaming forest.
    Stream {
        /// Starting snapshot; without it an empty forest of `--dim` is used.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        ops: Option<PathBuf>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        phi: Option<f64>,
        #[command(flatten)]
        forest: ForestArgs,
        /// One JSON outcome per operation; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Where to write the updated snapshot.
        #[arg(long)]
        save: Option<PathBuf>,
    },
    /// Fit on a labelled CSV and report ROC-AUC.
    EvalAuc {
        #[arg(long)]
        input: Option<PathBuf>,
        /// Label column; defaults to `label`.
        #[arg(long)]
        label_col: Option<String>,
        /// Shingle a univariate series into windows of this width.
        #[arg(long)]
        shingle: Option<usize>,
        /// `auto` scales when there are at least 50 features.
        #[arg(long, value_enum)]
        scale_minmax: Option<Scaling>,
        #[arg(long, value_enum)]
        score_by: Option<ScoreBy>,
        /// Leaf-mass threshold, needed for `--score-by vote`.
        #[arg(long)]
        epsilon: Option<f64>,
        #[command(flatten)]
        forest: ForestArgs,
        /// Metrics JSON; stdout when omitted.
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// Generate a synthetic dataset as CSV.
    Synth {
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        n_inliers: Option<usize>,
        #[arg(long)]
        n_outliers: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate forest density on a regular grid (1-D or 2-D).
    DensityGrid {
        #[arg(long)]
        model: Option<PathBuf>,
        /// `lo,hi` per axis, e.g. `-3,3,-3,3`; defaults to the forest domain.
        #[arg(long, allow_hyphen_values = true)]
        bounds: Option<String>,
        /// Cells per axis (default 100).
        #[arg(long)]
        resolution: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ForestArgs {
    #[arg(long, value_enum)]
    kind: Option<Kind>,
    /// Number of trees (default 100).
    #[arg(long)]
    trees: Option<usize>,
    #[arg(long)]
    max_depth: Option<usize>,
    /// Lifetime budget; `inf` for none.
    #[arg(long)]
    lifetime: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Batch,
    Streaming,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Scaling {
    Auto,
    On,
    Off,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum ScoreBy {
    MeanMass,
    Vote,
}

const DEFAULT_TREES: usize = 100;
const DEFAULT_RESOLUTION: usize = 100;
const AUTO_SCALE_DIM: usize = 50;

#[derive(Serialize)]
struct Metrics {
    auc: f64,
    n: usize,
    d: usize,
    n_trees: usize,
    seed: u64,
    runtime_seconds: f64,
}

fn parse_enum<T: ValueEnum>(s: &str, key: &str) -> Result<T> {
    T::from_str(s, true).map_err(|_| anyhow::anyhow!("invalid value '{s}' for {key}"))
}

impl ForestArgs {
    fn resolve(&self, cfg: &Config) -> Result<(ModelKind, usize, TreeConfig)> {
        let kind = match (self.kind, &cfg.kind) {
            (Some(k), _) => k,
            (None, Some(s)) => parse_enum(s, "kind")?,
            (None, None) => Kind::Streaming,
        };
        let kind = match kind {
            Kind::Batch => ModelKind::Batch,
            Kind::Streaming => ModelKind::Streaming,
        };
        let defaults = TreeConfig::default();
        let tree = TreeConfig {
            lifetime: self.lifetime.or(cfg.lifetime()?).unwrap_or(defaults.lifetime),
            max_depth: self.max_depth.or(cfg.max_depth).unwrap_or(defaults.max_depth),
            gamma: self.gamma.or(cfg.gamma).unwrap_or(defaults.gamma),
            seed: self.seed.or(cfg.seed).unwrap_or(defaults.seed),
        };
        tree.validate()?;
        let n_trees = self.trees.or(cfg.trees).unwrap_or(DEFAULT_TREES);
        Ok((kind, n_trees, tree))
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn label_column(flag: Option<String>, cfg: &Config) -> Result<Option<LabelColumn>> {
    flag.or_else(|| cfg.label_col.clone()).map(|s| Ok(s.parse()?)).transpose()
}

fn load(path: &Path, label: Option<&LabelColumn>) -> Result<Dataset> {
    load_csv(path, label).with_context(|| format!("reading {}", path.display()))
}

fn read_model(path: &Path) -> Result<Forest> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    serde_json::from_reader(BufReader::new(file)).with_context(|| format!("parsing snapshot {}", path.display()))
}

fn write_model(forest: &Forest, path: &Path) -> Result<()> {
    let mut w = output(Some(path))?;
    serde_json::to_writer(&mut w, forest)?;
    w.flush()?;
    Ok(())
}

fn unit_interval(v: f64, name: &str) -> Result<f64> {
    if !(0.0..=1.0).contains(&v) {
        bail!("--{name} must lie in [0, 1], got {v}");
    }
    Ok(v)
}

fn parse_bounds(text: &str) -> Result<BoundingBox> {
    let values: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>().with_context(|| format!("bad bound '{s}'")))
        .collect::<Result<_>>()?;
    if values.is_empty() || !values.len().is_multiple_of(2) {
        bail!("--bounds needs lo,hi pairs, got {} values", values.len());
    }
    let (lower, upper) = values.chunks(2).map(|c| (c[0], c[1])).unzip();
    Ok(BoundingBox::new(lower, upper)?)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = Config::load(cli.config.as_deref())?;
    match cli.command {
        Command::Fit {
            input,
            label_col,
            forest,
            out,
        } => {
            let input = required(input, cfg.input.clone(), "input")?;
            let out = required(out, cfg.out.clone(), "out")?;
            let (kind, n_trees, tree) = forest.resolve(&cfg)?;
            let ds = load(&input, label_column(label_col, &cfg)?.as_ref())?;
            let forest = Forest::fit(&ds.rows, &tree, kind, n_trees)?;
            write_model(&forest, &out)
        }
        Command::Score {
            model,
            input,
            label_col,
            epsilon,
            phi,
            out,
        } => {
            let forest = read_model(&required(model, cfg.model.clone(), "model")?)?;
            let input = required(input, cfg.input.clone(), "input")?;
            let epsilon = unit_interval(required(epsilon, cfg.epsilon, "epsilon")?, "epsilon")?;
            let phi = unit_interval(required(phi, cfg.phi, "phi")?, "phi")?;
            let ds = load(&input, label_column(label_col, &cfg)?.as_ref())?;
            let reports = forest.score_all(&ds.rows, epsilon, phi)?;
            let mut w = output(out.or(cfg.out.clone()).as_deref())?;
            write_scores_csv(&mut w, &reports)?;
            w.flush()?;
            Ok(())
        }
        Command::Stream {
            model,
            dim,
            ops,
            epsilon,
            phi,
            forest,
            out,
            save,
        } => {
            let mut model = match (model.or(cfg.model.clone()), dim.or(cfg.dim)) {
                (Some(path), _) => read_model(&path)?,
                (None, Some(d)) => {
                    let (_, n_trees, tree) = forest.resolve(&cfg)?;
                    Forest::empty_streaming(d, &tree, n_trees)?
                }
                (None, None) => bail!("stream needs --model or --dim"),
            };
            let path = required(ops, cfg.ops.clone(), "ops")?;
            let file = File::open(&path).with_context(|| format!("opening {}", path.display()))?;
            let ops = read_oplog(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))?;
            let scoring = ops.iter().any(|op| matches!(op, Op::Score { .. }));
            let (epsilon, phi) = match (epsilon.or(cfg.epsilon), phi.or(cfg.phi)) {
                (Some(e), Some(p)) => (unit_interval(e, "epsilon")?, unit_interval(p, "phi")?),
                _ if scoring => bail!("score operations need --epsilon and --phi"),
                _ => (0.0, 0.0),
            };
            let outcomes = replay(&mut model, &ops, epsilon, phi)?;
            let mut w = output(out.or(cfg.out.clone()).as_deref())?;
            for o in &outcomes {
                serde_json::to_writer(&mut w, o)?;
                writeln!(w)?;
            }
            w.flush()?;
            if let Some(path) = save.or(cfg.save.clone()) {
                write_model(&model, &path)?;
            }
            Ok(())
        }
        Command::EvalAuc {
            input,
            label_col,
            shingle: width,
            scale_minmax,
            score_by,
            epsilon,
            forest,
            metrics,
        } => {
            let start = Instant::now();
            let input = required(input, cfg.input.clone(), "input")?;
            let label = label_column(label_col, &cfg)?.unwrap_or(LabelColumn::Name("label".into()));
            let scaling = match (scale_minmax, &cfg.scale_minmax) {
                (Some(s), _) => s,
                (None, Some(s)) => parse_enum(s, "scale_minmax")?,
                (None, None) => Scaling::Auto,
            };
            let score_by = match (score_by, &cfg.score_by) {
                (Some(s), _) => s,
                (None, Some(s)) => parse_enum(s, "score_by")?,
                (None, None) => ScoreBy::MeanMass,
            };
            let (kind, n_trees, tree) = forest.resolve(&cfg)?;
            let ds = load(&input, Some(&label))?;
            let labels = ds.labels.clone().context("evaluation needs a label column")?;
            let (mut rows, labels) = match width.or(cfg.shingle) {
                Some(w) => {
                    if ds.d() != 1 {
                        bail!("--shingle expects one feature column, found {}", ds.d());
                    }
                    (shingle(&ds.rows.column(0), w)?, shingle_labels(&labels, w)?)
                }
                None => (ds.rows.clone(), labels),
            };
            let scale = match scaling {
                Scaling::On => true,
                Scaling::Off => false,
                Scaling::Auto => rows.n_cols() >= AUTO_SCALE_DIM,
            };
            if scale {
                rows = minmax_scale(&rows);
            }
            let model = Forest::fit(&rows, &tree, kind, n_trees)?;
            let scores = match score_by {
                ScoreBy::MeanMass => model.mass_scores(&rows)?,
                ScoreBy::Vote => {
                    let e = unit_interval(required(epsilon, cfg.epsilon, "epsilon")?, "epsilon")?;
                    vote_scores(&model, &rows, e)?
                }
            };
            let m = Metrics {
                auc: roc_auc(&scores, &labels)?,
                n: rows.n_rows(),
                d: rows.n_cols(),
                n_trees,
                seed: tree.seed,
                runtime_seconds: start.elapsed().as_secs_f64(),
            };
            let mut w = output(metrics.or(cfg.metrics.clone()).as_deref())?;
            serde_json::to_writer_pretty(&mut w, &m)?;
            writeln!(w)?;
            w.flush()?;
            Ok(())
        }
        Command::Synth {
            name,
            n_inliers,
            n_outliers,
            seed,
            out,
        } => {
            let set: SyntheticSet = required(name, cfg.name.clone(), "name")?.parse()?;
            let ds = gen_synthetic(
                set,
                required(n_inliers, cfg.n_inliers, "n-inliers")?,
                n_outliers.or(cfg.n_outliers).unwrap_or(0),
                seed.or(cfg.seed).unwrap_or(0),
            )?;
            let mut w = output(out.or(cfg.out.clone()).as_deref())?;
            write_dataset_csv(&mut w, &ds)?;
            w.flush()?;
            Ok(())
        }
        Command::DensityGrid {
            model,
            bounds,
            resolution,
            out,
        } => {
            let forest = read_model(&required(model, cfg.model.clone(), "model")?)?;
            let bounds = match bounds.or(cfg.bounds.clone()) {
                Some(text) => parse_bounds(&text)?,
                None => forest.domain().context("forest holds no points; pass --bounds")?,
            };
            let resolution = resolution.or(cfg.resolution).unwrap_or(DEFAULT_RESOLUTION);
            let cells = density_grid(&forest, &bounds, resolution)?;
            let mut w = output(out.or(cfg.out.clone()).as_deref())?;
            write_grid_csv(&mut w, &cells)?;
            w.flush()?;
            Ok(())
        }
    }
}

/// Minus the fraction of trees flagging each row, so lower stays more anomalous.
fn vote_scores(forest: &Forest, rows: &Matrix, epsilon: f64) -> Result<Vec<f64>> {
    let reports = forest.score_all(rows, epsilon, 0.0)?;
    let n = forest.n_trees() as f64;
    Ok(reports.iter().map(|r| -(r.anomaly_count as f64) / n).collect())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
