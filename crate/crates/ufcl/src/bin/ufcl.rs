//! Thin command-line front end over the library: synthesize data, cluster
//! embeddings, train, evaluate, or run the whole loop end to end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ufcl::pipeline::{
    self, cluster_features, io, resume_pipeline, run_pipeline, synth_benchmark,
    Dataset, PipelineConfig, SynthParams,
};
use ufcl::{encoder, evaluation, Result};

#[derive(Parser)]
#[command(name = "ufcl", version, about = "Unsupervised fine-grained clustering and learning")]
struct Cli {
    /// Config file with key=value lines (defaults apply when omitted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override a single config key, e.g. --set epochs=10 (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory for all outputs.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,

    /// Worker threads (0 = one per core). Results do not depend on this.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long)]
    per_class: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    /// Pairwise angle between class means, radians.
    #[arg(long)]
    separation: Option<f64>,
    /// Gaussian noise per coordinate.
    #[arg(long)]
    spread: Option<f64>,
    /// Fraction of samples blended halfway toward another class.
    #[arg(long)]
    noise_frac: Option<f64>,
}

impl SynthArgs {
    fn to_params(&self) -> SynthParams {
        let mut p = SynthParams::default();
        if let Some(v) = self.classes {
            p.classes = v;
        }
        if let Some(v) = self.per_class {
            p.per_class = v;
        }
        if let Some(v) = self.dim {
            p.dim = v;
        }
        if let Some(v) = self.separation {
            p.separation = v;
        }
        if let Some(v) = self.spread {
            p.spread = v;
        }
        if let Some(v) = self.noise_frac {
            p.noise_frac = v;
        }
        p
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write synthetic train/test splits into the output directory.
    Synth(SynthArgs),
    /// Cluster an embedding file into pseudo labels.
    Cluster {
        /// Embeddings in the binary matrix format or CSV.
        #[arg(long)]
        embeddings: PathBuf,
        /// Optional ground-truth labels for scoring the clustering.
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Train on a data directory written by `synth`.
    Train {
        #[arg(long)]
        data_dir: PathBuf,
        /// Continue from this checkpoint directory instead of starting fresh.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Score a checkpoint on a data directory.
    Eval {
        #[arg(long)]
        data_dir: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Synthesize data and train in one go.
    Pipeline(SynthArgs),
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ufcl::Error::Config(format!("{}: {e}", path.display())))?;
            PipelineConfig::from_key_values(&text)?
        }
        None => PipelineConfig::default(),
    };
    for pair in &cli.overrides {
        let Some((key, value)) = pair.split_once('=') else {
            return Err(ufcl::Error::Config(format!("--set expects KEY=VALUE, got {pair:?}")));
        };
        cfg.apply(key.trim(), value.trim())?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_dataset(dir: &Path, data: &Dataset) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(ufcl::Error::Io)?;
    io::write_matrix(&dir.join("train.mat"), &data.train)?;
    io::write_matrix(&dir.join("test.mat"), &data.test)?;
    let as_i64 = |labels: &[usize]| labels.iter().map(|&l| l as i64).collect::<Vec<_>>();
    io::write_labels(&dir.join("train_labels.txt"), &as_i64(&data.train_labels))?;
    io::write_labels(&dir.join("test_labels.txt"), &as_i64(&data.test_labels))?;
    Ok(())
}

fn read_dataset(dir: &Path) -> Result<Dataset> {
    Dataset::new(
        io::read_matrix(&dir.join("train.mat"))?,
        io::read_class_labels(&dir.join("train_labels.txt"))?,
        io::read_matrix(&dir.join("test.mat"))?,
        io::read_class_labels(&dir.join("test_labels.txt"))?,
    )
}

fn cmd_synth(cfg: &PipelineConfig, args: &SynthArgs, out_dir: &Path) -> Result<()> {
    let params = args.to_params();
    let data = synth_benchmark(&params, cfg.seed)?;
    write_dataset(out_dir, &data)?;
    println!(
        "wrote {} train and {} test examples ({} classes, dim {}) to {}",
        data.train.rows(),
        data.test.rows(),
        params.classes,
        params.dim,
        out_dir.display()
    );
    Ok(())
}

fn cmd_cluster(
    cfg: &PipelineConfig,
    embeddings: &Path,
    labels: Option<&Path>,
    out_dir: &Path,
) -> Result<()> {
    let features = io::load_embeddings(embeddings)?;
    let assignment = cluster_features(cfg, &features)?;
    std::fs::create_dir_all(out_dir).map_err(ufcl::Error::Io)?;
    io::write_labels(&out_dir.join("pseudo_labels.txt"), assignment.labels())?;
    println!(
        "clusters={} outliers={} of {}",
        assignment.num_clusters(),
        assignment.num_outliers(),
        assignment.len()
    );
    if let Some(path) = labels {
        let truth = io::read_class_labels(path)?;
        let acc = evaluation::clustering_acc(&assignment, &truth)?;
        let table = evaluation::ContingencyTable::new(&assignment, &truth)?;
        println!(
            "acc={:.4} nmi={:.4} ari={:.4}",
            acc,
            evaluation::nmi(&table),
            evaluation::ari(&table)
        );
    }
    Ok(())
}

fn cmd_train(
    cfg: &PipelineConfig,
    data_dir: &Path,
    resume: Option<&Path>,
    out_dir: &Path,
) -> Result<()> {
    let data = read_dataset(data_dir)?;
    let reports = match resume {
        Some(ckpt) => {
            let mut state = io::load_checkpoint(ckpt)?;
            resume_pipeline(cfg, &mut state, &data, Some(out_dir))?
        }
        None => run_pipeline(cfg, &data, Some(out_dir))?,
    };
    match reports.last() {
        Some(last) => println!(
            "{}",
            serde_json::to_string(last).map_err(|e| ufcl::Error::Format(e.to_string()))?
        ),
        None => println!("no epochs to run"),
    }
    Ok(())
}

fn cmd_eval(cfg: &PipelineConfig, data_dir: &Path, checkpoint: &Path, out_dir: &Path) -> Result<()> {
    let data = read_dataset(data_dir)?;
    let state = io::load_checkpoint(checkpoint)?;
    let train_feats = encoder::encode_all(&state.params, &data.train)?;
    let test_feats = encoder::encode_all(&state.params, &data.test)?;
    let assignment = cluster_features(cfg, &train_feats)?;
    let acc = evaluation::clustering_acc(&assignment, &data.train_labels)?;
    let table = evaluation::ContingencyTable::new(&assignment, &data.train_labels)?;
    let train = evaluation::LabeledEmbeddings::new(train_feats, data.train_labels.clone())?;
    let test = evaluation::LabeledEmbeddings::new(test_feats, data.test_labels.clone())?;
    let top1 = evaluation::weighted_knn_top1(&train, &test, cfg.eval_k, cfg.eval_temperature)?;
    let report = pipeline::EpochReport {
        epoch: state.next_epoch.saturating_sub(1),
        num_clusters: assignment.num_clusters(),
        num_outliers: assignment.num_outliers(),
        top1,
        acc,
        nmi: evaluation::nmi(&table),
        ari: evaluation::ari(&table),
        mean_loss: 0.0,
    };
    std::fs::create_dir_all(out_dir).map_err(ufcl::Error::Io)?;
    io::append_report(&out_dir.join("eval.jsonl"), &report)?;
    println!(
        "{}",
        serde_json::to_string(&report).map_err(|e| ufcl::Error::Format(e.to_string()))?
    );
    Ok(())
}

fn cmd_pipeline(cfg: &PipelineConfig, args: &SynthArgs, out_dir: &Path) -> Result<()> {
    let data = synth_benchmark(&args.to_params(), cfg.seed)?;
    write_dataset(out_dir, &data)?;
    let reports = run_pipeline(cfg, &data, Some(out_dir))?;
    match reports.last() {
        Some(last) => println!(
            "{}",
            serde_json::to_string(last).map_err(|e| ufcl::Error::Format(e.to_string()))?
        ),
        None => println!("no epochs to run"),
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    if cli.threads > 0 {
        // Ignore "already initialized": only possible in-process, not here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Synth(args) => cmd_synth(&cfg, args, &cli.out_dir),
        Command::Cluster { embeddings, labels } => {
            cmd_cluster(&cfg, embeddings, labels.as_deref(), &cli.out_dir)
        }
        Command::Train { data_dir, resume } => {
            cmd_train(&cfg, data_dir, resume.as_deref(), &cli.out_dir)
        }
        Command::Eval { data_dir, checkpoint } => {
            cmd_eval(&cfg, data_dir, checkpoint, &cli.out_dir)
        }
        Command::Pipeline(args) => cmd_pipeline(&cfg, args, &cli.out_dir),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
