//! Benchmark and verification CLI for the oversampling sort library.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use ovsort::bench::{
    render_csv, render_json, render_table, run_grid, run_verify_suite_printing, sort_verified,
    Algo, ExperimentSpec, OutputFormat,
};
use ovsort::core_sort::BaseSortKind;
use ovsort::partition::SplitStrategy;
use ovsort::pipeline::{default_random_s, random_s_from_a, SortConfig, SortMode};

#[derive(Parser, Debug)]
#[command(name = "ovsort", about = "Sample-partitioned sorting benchmark harness")]
struct Args {
    /// Algorithm: baseline | sqdet | sqran | mc
    #[arg(long, default_value = "sqran")]
    algo: Algo,

    /// Base sort: qs | hs | rq | ref
    #[arg(long, default_value = "qs")]
    base: BaseSortKind,

    /// Input sizes (repeatable / comma-separated)
    #[arg(long, value_delimiter = ',', default_values_t = [1_024_000usize])]
    n: Vec<usize>,

    /// Partition counts (repeatable / comma-separated)
    #[arg(long, value_delimiter = ',', default_values_t = [4usize, 32, 64, 128, 256])]
    p: Vec<usize>,

    /// Deterministic oversampling multipliers (sqdet / mc)
    #[arg(long, value_delimiter = ',')]
    r: Vec<u32>,

    /// Randomized sample exponents: s = ceil((lg n)^(1+a)) (sqran / mc)
    #[arg(long, value_delimiter = ',')]
    a: Vec<f64>,

    /// Worker threads for mc runs
    #[arg(long, default_value_t = 4)]
    threads: usize,

    /// Trials per grid cell; reported times are the mean
    #[arg(long, default_value_t = 3)]
    trials: usize,

    /// Master seed; per-trial seeds derive from it
    #[arg(long, default_value_t = 42)]
    seed: u64,

    /// Key length in bytes
    #[arg(long, default_value_t = 32)]
    keylen: usize,

    /// Output format: table | csv | json
    #[arg(long, default_value = "table")]
    format: OutputFormat,

    /// Run the property battery instead of the grid
    #[arg(long)]
    verify_only: bool,

    /// Allow n beyond the desk-scale cap (8192000)
    #[arg(long)]
    max_n_override: bool,

    /// Splitting strategy: binary-search | merge
    #[arg(long, default_value = "binary-search")]
    split_strategy: SplitStrategy,

    /// Distribute bucket merges across workers (mc only)
    #[arg(long)]
    parallel_merge: bool,

    /// Sort an existing key file instead of generated inputs
    #[arg(long = "in")]
    input: Option<PathBuf>,

    /// Where to write the sorted key file (with --in)
    #[arg(long = "out")]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();

    if args.verify_only {
        return if run_verify_suite_printing() { ExitCode::SUCCESS } else { ExitCode::FAILURE };
    }

    if let Some(input) = &args.input {
        return match sort_one_file(&args, input) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        };
    }

    let spec = ExperimentSpec {
        algo: args.algo,
        base: args.base,
        n_list: args.n.clone(),
        p_list: args.p.clone(),
        r_list: args.r.clone(),
        a_list: args.a.clone(),
        threads: args.threads,
        trials: args.trials,
        seed: args.seed,
        key_len: args.keylen,
        format: args.format,
        split_strategy: args.split_strategy,
        parallel_merge: args.parallel_merge,
        max_n_override: args.max_n_override,
    };

    let rows = match run_grid(&spec) {
        Ok(rows) => rows,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };

    let rendered = match spec.format {
        OutputFormat::Table => Ok(render_table(&rows)),
        OutputFormat::Csv => render_csv(&rows),
        OutputFormat::Json => render_json(&rows),
    };
    match rendered {
        Ok(text) => print!("{text}"),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }

    let failed: Vec<&_> = rows.iter().filter(|r| !r.verified).collect();
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        for row in failed {
            eprintln!(
                "verification failed: algo={} n={} p={} ({})",
                row.algo, row.n, row.p, row.note
            );
        }
        ExitCode::FAILURE
    }
}

fn sort_one_file(args: &Args, input: &std::path::Path) -> ovsort::Result<()> {
    let buf = ovsort::keys::read_keyfile(input)?;
    let n = buf.len();
    let p = args.p.first().copied().unwrap_or(64);
    let mode = match args.algo {
        Algo::SqDet => SortMode::Deterministic { r: args.r.first().copied().unwrap_or(1) },
        Algo::Mc if !args.r.is_empty() => SortMode::Deterministic { r: args.r[0] },
        _ => SortMode::Randomized {
            s: match args.a.first() {
                Some(&a) => random_s_from_a(n, a),
                None => default_random_s(n),
            },
        },
    };
    let mut cfg = SortConfig::new(if args.algo == Algo::Baseline { 1 } else { p }, mode, args.base);
    cfg.seed = args.seed;
    cfg.split_strategy = args.split_strategy;
    let threads = (args.algo == Algo::Mc).then_some(args.threads);
    let (sorted, report) = sort_verified(&buf, &cfg, threads, args.parallel_merge)?;
    if let Some(path) = &args.output {
        ovsort::keys::write_keyfile(&sorted, path)?;
    }
    println!(
        "sorted {} keys in {:.3}s (p={}, max expansion {:.3})",
        report.n,
        report.phases.total(),
        report.p,
        report.expansion
    );
    Ok(())
}
