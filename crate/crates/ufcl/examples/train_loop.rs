//! The full clustering-learning loop on the synthetic benchmark.
//!
//! Every epoch re-encodes the dataset, clusters the train embeddings into
//! pseudo labels, rebuilds the agent bank, then runs contrastive iterations
//! that update the encoder (Adam) and the agents (momentum). The report row
//! for epoch e is computed with the parameters entering epoch e, so row 1
//! shows the untrained encoder and improvements appear from row 2 onward.
//!
//! Run with: `cargo run --release --example train_loop [seed] [epochs] [iterations]`

use ufcl::pipeline::{
    resume_pipeline, run_pipeline, synth_benchmark, EpochReport, PipelineConfig, SynthParams,
};

fn print_table(reports: &[EpochReport]) {
    println!(
        "{:>5} {:>9} {:>9} {:>7} {:>7} {:>7} {:>7} {:>10}",
        "epoch", "clusters", "outliers", "acc", "nmi", "ari", "top1", "loss"
    );
    for r in reports {
        println!(
            "{:>5} {:>9} {:>9} {:>7.3} {:>7.3} {:>7.3} {:>7.3} {:>10.4}",
            r.epoch, r.num_clusters, r.num_outliers, r.acc, r.nmi, r.ari, r.top1, r.mean_loss
        );
    }
}

fn main() -> ufcl::Result<()> {
    let args: Vec<u64> = std::env::args().skip(1).map(|a| a.parse().expect("numeric arg")).collect();
    let seed = args.first().copied().unwrap_or(0);
    let epochs = args.get(1).copied().unwrap_or(10) as usize;
    let iterations = args.get(2).copied().unwrap_or(50) as usize;

    let data = synth_benchmark(&SynthParams::default(), seed)?;
    let cfg = PipelineConfig { seed, epochs, iterations_per_epoch: iterations, ..PipelineConfig::default() };
    cfg.validate()?;

    println!(
        "benchmark: {} train / {} test, dim {} -> {}, seed {seed}",
        data.train.rows(),
        data.test.rows(),
        data.train.cols(),
        cfg.out_dim
    );

    let dir = tempfile::tempdir().expect("tempdir");
    let reports = run_pipeline(&cfg, &data, Some(dir.path()))?;
    print_table(&reports);

    // The checkpoint makes runs resumable: train half now, the rest later.
    // Seeding is per-epoch, so the stitched history matches the one-shot run.
    let half_dir = tempfile::tempdir().expect("tempdir");
    let mut half_cfg = cfg.clone();
    half_cfg.epochs = epochs / 2;
    run_pipeline(&half_cfg, &data, Some(half_dir.path()))?;
    let mut state = ufcl::pipeline::io::load_checkpoint(&half_dir.path().join("checkpoint"))?;
    let resumed = resume_pipeline(&cfg, &mut state, &data, Some(half_dir.path()))?;
    let same = std::fs::read(dir.path().join("reports.jsonl")).unwrap()
        == std::fs::read(half_dir.path().join("reports.jsonl")).unwrap();
    println!("\nresumed run reproduces the one-shot history byte for byte: {same}");
    println!("(stopped after epoch {}, resumed through epoch {})", half_cfg.epochs, resumed.last().map_or(0, |r| r.epoch));
    Ok(())
}
