//! Dev tool: writes a reproducible corpus of random flowful diagrams (and
//! their flows) as JSON files. The `ZXFLOW_SEED` environment variable fixes
//! the generator seed.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use zxflow::corpus::{
    random_flowful, random_graph_like_flowful, rng, seed_from_env, CircuitParams,
};

#[derive(Parser)]
#[command(name = "gen-corpus", about = "Generate a reproducible diagram corpus")]
struct Cli {
    /// Output directory (created if missing).
    #[arg(short, long)]
    out: PathBuf,
    /// Number of diagram/flow pairs.
    #[arg(short, long, default_value_t = 20)]
    count: usize,
    /// Maximum qubit lines per diagram.
    #[arg(long, default_value_t = 3)]
    max_qubits: usize,
    /// Gates layered onto each diagram.
    #[arg(long, default_value_t = 6)]
    gates: usize,
    /// Restrict phases to Clifford angles.
    #[arg(long)]
    clifford_only: bool,
    /// Allow one-legged state preparations (proper isometries).
    #[arg(long)]
    prep: bool,
    /// Normalise every diagram to graph-like form.
    #[arg(long)]
    graph_like: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = std::fs::create_dir_all(&cli.out) {
        eprintln!("error: cannot create {}: {e}", cli.out.display());
        return ExitCode::from(4);
    }
    let params = CircuitParams {
        max_qubits: cli.max_qubits,
        gates: cli.gates,
        non_clifford: !cli.clifford_only,
        allow_prep: cli.prep,
    };
    let seed = seed_from_env(0xF10F);
    let mut r = rng(seed);
    for i in 0..cli.count {
        let (d, f) = if cli.graph_like {
            random_graph_like_flowful(&mut r, &params)
        } else {
            random_flowful(&mut r, &params)
        };
        let dpath = cli.out.join(format!("diag_{i:03}.json"));
        let fpath = cli.out.join(format!("flow_{i:03}.json"));
        if let Err(e) = std::fs::write(&dpath, d.to_json())
            .and_then(|_| std::fs::write(&fpath, f.to_json()))
        {
            eprintln!("error: cannot write corpus files: {e}");
            return ExitCode::from(4);
        }
        println!(
            "{}: {} nodes, {} wires, {} ordered spiders",
            dpath.display(),
            d.num_nodes(),
            d.num_wires(),
            f.order.len()
        );
    }
    println!("seed: {seed}");
    ExitCode::SUCCESS
}
