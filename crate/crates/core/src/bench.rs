//! Benchmark and verification harness behind the `ovsort` CLI.
//!
//! Runs standalone base sorts and the pipelines over a parameter grid,
//! verifies every run (a benchmark run is always also a correctness run),
//! and renders the results as an aligned table, CSV, or JSON.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::core_sort::{multiway_merge, BaseSortKind};
use crate::keys::{generate, Distribution, KeyBuffer, KeyGenSpec};
use crate::parallel::{mc_sort, ParallelConfig};
use crate::partition::{BalanceBound, SplitStrategy};
use crate::pipeline::{
    balance_of, default_random_s, random_s_from_a, sort, sort_order, SortConfig, SortMode,
};
use crate::{Error, Result};

/// Which algorithm a grid cell exercises.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algo {
    /// Standalone base sort (the calibration column).
    Baseline,
    SqDet,
    SqRan,
    /// Multi-core wrapper; inner mode is deterministic when r values are
    /// given, randomized otherwise.
    Mc,
}

impl std::fmt::Display for Algo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algo::Baseline => "baseline",
            Algo::SqDet => "sqdet",
            Algo::SqRan => "sqran",
            Algo::Mc => "mc",
        })
    }
}

impl std::str::FromStr for Algo {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Algo::Baseline),
            "sqdet" => Ok(Algo::SqDet),
            "sqran" => Ok(Algo::SqRan),
            "mc" => Ok(Algo::Mc),
            other => Err(Error::InvalidParameter(format!("unknown algo '{other}'"))),
        }
    }
}

/// Output rendering of the grid results.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Table,
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" => Ok(OutputFormat::Table),
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::InvalidParameter(format!("unknown format '{other}'"))),
        }
    }
}

/// Largest n accepted without the explicit override flag.
pub const DESK_SCALE_MAX_N: usize = 8_192_000;

/// A full grid request.
#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub algo: Algo,
    pub base: BaseSortKind,
    pub n_list: Vec<usize>,
    pub p_list: Vec<usize>,
    /// Deterministic oversampling multipliers; empty means r = 1 for sqdet.
    pub r_list: Vec<u32>,
    /// Randomized sample exponents (s = lg^(1+a) n); empty means default s.
    pub a_list: Vec<f64>,
    pub threads: usize,
    pub trials: usize,
    pub seed: u64,
    pub key_len: usize,
    pub format: OutputFormat,
    pub split_strategy: SplitStrategy,
    pub parallel_merge: bool,
    /// Allow n beyond [`DESK_SCALE_MAX_N`].
    pub max_n_override: bool,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            algo: Algo::SqRan,
            base: BaseSortKind::Qs,
            n_list: vec![1_024_000],
            p_list: vec![4, 32, 64, 128, 256],
            r_list: vec![],
            a_list: vec![],
            threads: 4,
            trials: 3,
            seed: 42,
            key_len: 32,
            format: OutputFormat::Table,
            split_strategy: SplitStrategy::BinarySearch,
            parallel_merge: false,
            max_n_override: false,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::InvalidParameter("trials must be >= 1".into()));
        }
        if self.n_list.is_empty() {
            return Err(Error::InvalidParameter("at least one n required".into()));
        }
        if let Some(&n) = self.n_list.iter().find(|&&n| n > DESK_SCALE_MAX_N) {
            if !self.max_n_override {
                return Err(Error::InvalidParameter(format!(
                    "n = {n} exceeds the desk-scale cap {DESK_SCALE_MAX_N}; pass --max-n-override"
                )));
            }
        }
        Ok(())
    }
}

/// One grid cell: spec coordinates, mean timings, balance and verification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub algo: String,
    pub base: String,
    pub n: u64,
    pub p: u64,
    pub r: Option<u32>,
    pub a: Option<f64>,
    pub s: Option<u64>,
    pub threads: Option<u64>,
    pub trials: u64,
    pub mean_secs: f64,
    pub baseline_secs: f64,
    pub sample_secs: f64,
    pub splitter_secs: f64,
    pub split_secs: f64,
    pub merge_secs: f64,
    pub max_expansion: f64,
    pub verified: bool,
    pub note: String,
}

/// Derives a per-cell, per-trial seed so cells are independent but the
/// whole grid reproduces from one seed.
pub fn derive_seed(seed: u64, n: u64, p: u64, trial: u64) -> u64 {
    let mut x = seed
        ^ n.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ p.rotate_left(32).wrapping_mul(0xBF58_476D_1CE4_E5B9)
        ^ trial.wrapping_mul(0x94D0_49BB_1331_11EB);
    // splitmix64 finalizer
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Checks a sorted output against its input: nondecreasing, permutation,
/// and (deterministic mode) the hard bucket bound.
fn verify_output(
    input: &KeyBuffer,
    output: &KeyBuffer,
    cfg: &SortConfig,
    bucket_sizes: &[usize],
) -> Result<()> {
    if output.len() != input.len() {
        return Err(Error::Verification {
            index: 0,
            what: format!("{} keys out, {} in", output.len(), input.len()),
        });
    }
    if let Some(i) = output.first_descent() {
        return Err(Error::Verification { index: i, what: "output not nondecreasing".into() });
    }
    if output.multiset_hash() != input.multiset_hash() {
        return Err(Error::Verification { index: 0, what: "multiset hash mismatch".into() });
    }
    if cfg.p >= 2 {
        if let SortMode::Deterministic { r } = cfg.mode {
            let limit = BalanceBound { n: input.len(), p: cfg.p, r }.max_bucket();
            if let Some((j, &size)) = bucket_sizes.iter().enumerate().find(|(_, &s)| s > limit) {
                return Err(Error::Verification {
                    index: j,
                    what: format!("bucket {j} of {size} keys exceeds bound {limit}"),
                });
            }
        }
    }
    Ok(())
}

struct CellParams {
    p: usize,
    r: Option<u32>,
    a: Option<f64>,
    s: Option<usize>,
    threads: Option<usize>,
}

fn cell_config(spec: &ExperimentSpec, n: usize, cp: &CellParams) -> SortConfig {
    let mode = match (cp.r, cp.s) {
        (Some(r), _) => SortMode::Deterministic { r },
        (None, Some(s)) => SortMode::Randomized { s },
        (None, None) => SortMode::Randomized { s: default_random_s(n) },
    };
    let mut cfg = SortConfig::new(cp.p, mode, spec.base);
    cfg.split_strategy = spec.split_strategy;
    cfg
}

fn run_cell(spec: &ExperimentSpec, n: usize, cp: &CellParams) -> ResultRow {
    let mut mean_secs = 0.0;
    let mut phases = [0.0f64; 5];
    let mut max_expansion: f64 = 0.0;
    let mut verified = true;
    let mut note = String::new();

    for trial in 0..spec.trials {
        let trial_seed = derive_seed(spec.seed, n as u64, cp.p as u64, trial as u64);
        let buf = match generate(&KeyGenSpec {
            n,
            key_len: spec.key_len,
            distribution: Distribution::UniformBytes,
            seed: trial_seed,
        }) {
            Ok(b) => b,
            Err(e) => {
                verified = false;
                note = e.to_string();
                break;
            }
        };
        let mut cfg = cell_config(spec, n, cp);
        cfg.seed = trial_seed;

        let started = Instant::now();
        let outcome = match cp.threads {
            Some(t) => {
                let mut pcfg = ParallelConfig::new(t, cfg);
                pcfg.parallel_merge = spec.parallel_merge;
                mc_sort(&buf, &pcfg)
            }
            None => sort(&buf, &cfg),
        };
        let wall = started.elapsed().as_secs_f64();

        match outcome {
            Ok((output, report)) => {
                if let Err(e) = verify_output(&buf, &output, &cfg, &report.bucket_sizes) {
                    verified = false;
                    note = e.to_string();
                }
                mean_secs += wall;
                phases[0] += report.phases.baseline_sort;
                phases[1] += report.phases.sample;
                phases[2] += report.phases.splitter;
                phases[3] += report.phases.split;
                phases[4] += report.phases.merge;
                max_expansion = max_expansion.max(report.expansion);
            }
            Err(e) => {
                verified = false;
                note = e.to_string();
            }
        }
    }
    let t = spec.trials as f64;
    ResultRow {
        algo: spec.algo.to_string(),
        base: spec.base.to_string(),
        n: n as u64,
        p: cp.p as u64,
        r: cp.r,
        a: cp.a,
        s: cp.s.map(|s| s as u64),
        threads: cp.threads.map(|t| t as u64),
        trials: spec.trials as u64,
        mean_secs: mean_secs / t,
        baseline_secs: phases[0] / t,
        sample_secs: phases[1] / t,
        splitter_secs: phases[2] / t,
        split_secs: phases[3] / t,
        merge_secs: phases[4] / t,
        max_expansion,
        verified,
        note,
    }
}

/// Runs the full grid; cell failures are recorded in the row and the grid
/// continues.
pub fn run_grid(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let mut rows = Vec::new();
    for &n in &spec.n_list {
        match spec.algo {
            Algo::Baseline => {
                let cp = CellParams { p: 1, r: None, a: None, s: None, threads: None };
                // p = 1 is the standalone base sort; mode is irrelevant
                rows.push(run_cell(spec, n, &cp));
            }
            Algo::SqDet => {
                let rs = if spec.r_list.is_empty() { vec![1] } else { spec.r_list.clone() };
                for &p in &spec.p_list {
                    for &r in &rs {
                        let cp = CellParams { p, r: Some(r), a: None, s: None, threads: None };
                        rows.push(run_cell(spec, n, &cp));
                    }
                }
            }
            Algo::SqRan | Algo::Mc => {
                let threads = (spec.algo == Algo::Mc).then_some(spec.threads);
                let det_rs = if spec.algo == Algo::Mc && !spec.r_list.is_empty() {
                    Some(spec.r_list.clone())
                } else {
                    None
                };
                for &p in &spec.p_list {
                    if let Some(rs) = &det_rs {
                        for &r in rs {
                            let cp = CellParams { p, r: Some(r), a: None, s: None, threads };
                            rows.push(run_cell(spec, n, &cp));
                        }
                    } else if spec.a_list.is_empty() {
                        let cp = CellParams {
                            p,
                            r: None,
                            a: None,
                            s: Some(default_random_s(n)),
                            threads,
                        };
                        rows.push(run_cell(spec, n, &cp));
                    } else {
                        for &a in &spec.a_list {
                            let cp = CellParams {
                                p,
                                r: None,
                                a: Some(a),
                                s: Some(random_s_from_a(n, a)),
                                threads,
                            };
                            rows.push(run_cell(spec, n, &cp));
                        }
                    }
                }
            }
        }
    }
    Ok(rows)
}

/// Column-aligned human table, one row per (n, base, r/a/threads) group and
/// one column per p.
pub fn render_table(rows: &[ResultRow]) -> String {
    let mut ps: Vec<u64> = rows.iter().map(|r| r.p).collect();
    ps.sort_unstable();
    ps.dedup();

    // group key: everything but p
    let mut groups: Vec<(String, Vec<&ResultRow>)> = Vec::new();
    for row in rows {
        let mut label = format!("n={} : {}", row.n, row.base);
        if let Some(r) = row.r {
            let _ = write!(label, " r={r}");
        }
        if let Some(a) = row.a {
            let _ = write!(label, " a={a}");
        }
        if let Some(t) = row.threads {
            let _ = write!(label, " t={t}");
        }
        match groups.iter_mut().find(|(l, _)| *l == label) {
            Some((_, v)) => v.push(row),
            None => groups.push((label, vec![row])),
        }
    }

    let label_w = groups.iter().map(|(l, _)| l.len()).max().unwrap_or(4).max(4);
    let mut out = String::new();
    let _ = write!(out, "{:label_w$}", "cell");
    for p in &ps {
        let _ = write!(out, " {:>10}", format!("p={p}"));
    }
    out.push('\n');
    for (label, cells) in &groups {
        let _ = write!(out, "{label:label_w$}");
        for p in &ps {
            match cells.iter().find(|c| c.p == *p) {
                Some(c) => {
                    let flag = if c.verified { "" } else { "!" };
                    let _ = write!(out, " {:>10}", format!("{:.3}{flag}", c.mean_secs));
                }
                None => {
                    let _ = write!(out, " {:>10}", "-");
                }
            }
        }
        out.push('\n');
    }
    out
}

pub fn render_csv(rows: &[ResultRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| Error::Format(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

pub fn parse_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize()
        .collect::<std::result::Result<Vec<ResultRow>, _>>()
        .map_err(|e| Error::Format(e.to_string()))
}

pub fn render_json(rows: &[ResultRow]) -> Result<String> {
    serde_json::to_string_pretty(rows).map_err(|e| Error::Format(e.to_string()))
}

pub fn parse_json(text: &str) -> Result<Vec<ResultRow>> {
    serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
}

/// One property verdict of [`verify_suite`].
pub struct Verdict {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn uniform(n: usize, seed: u64) -> KeyBuffer {
    generate(&KeyGenSpec {
        n,
        key_len: 32,
        distribution: Distribution::UniformBytes,
        seed,
    })
    .unwrap()
}

fn ref_sorted(buf: &KeyBuffer) -> KeyBuffer {
    let mut order: Vec<u32> = (0..buf.len() as u32).collect();
    order.sort_by(|&a, &b| buf.cmp_keys(a as usize, b as usize));
    buf.gather(&order)
}

/// Runs the desk-scale property battery and returns one verdict per
/// property. Every property must pass for a healthy checkout.
pub fn verify_suite() -> Vec<Verdict> {
    let mut verdicts = Vec::new();

    // oracle equivalence across distributions and both modes
    {
        let n = 100_000;
        let mut failures = Vec::new();
        let dists = [
            ("uniform", Distribution::UniformBytes),
            ("sorted", Distribution::Sorted),
            ("reverse", Distribution::ReverseSorted),
            ("constant", Distribution::Constant),
            ("few-distinct", Distribution::FewDistinct(4)),
        ];
        for (dname, dist) in dists {
            let buf = generate(&KeyGenSpec { n, key_len: 32, distribution: dist, seed: 1 })
                .unwrap();
            let expect = ref_sorted(&buf);
            for p in [4usize, 64] {
                for mode in [
                    SortMode::Deterministic { r: 2 },
                    SortMode::Randomized { s: default_random_s(n) },
                ] {
                    for base in [BaseSortKind::Qs, BaseSortKind::Ref] {
                        let mut cfg = SortConfig::new(p, mode, base);
                        cfg.seed = 7;
                        match sort(&buf, &cfg) {
                            Ok((out, _)) if out.as_bytes() == expect.as_bytes() => {}
                            Ok(_) => failures.push(format!("{dname}/p={p}/{base}: bytes differ")),
                            Err(e) => failures.push(format!("{dname}/p={p}/{base}: {e}")),
                        }
                    }
                }
            }
        }
        verdicts.push(Verdict {
            name: "oracle-equivalence",
            pass: failures.is_empty(),
            detail: if failures.is_empty() {
                "5 distributions x {4,64} x {det,ran} x {qs,ref} byte-identical".into()
            } else {
                failures.join("; ")
            },
        });
    }

    // deterministic balance bound
    {
        let mut runs = 0;
        let mut violations = 0;
        let n = 40_000;
        for (i, p) in [8usize, 16, 32].iter().enumerate() {
            for r in 1..=5u32 {
                // asymptotic regime: r^2 * p <= n / p
                if (r as usize).pow(2) * p > n / p {
                    continue;
                }
                let buf = uniform(n, 100 + i as u64 * 10 + r as u64);
                let cfg = SortConfig::new(*p, SortMode::Deterministic { r }, BaseSortKind::Qs);
                let (_, report) = sort(&buf, &cfg).unwrap();
                let bal = balance_of(&report, &cfg);
                runs += 1;
                if !bal.pass {
                    violations += 1;
                }
            }
        }
        verdicts.push(Verdict {
            name: "deterministic-balance",
            pass: violations == 0 && runs > 0,
            detail: format!("{runs} deterministic runs, {violations} bound violations"),
        });
    }

    // order separation between adjacent buckets
    {
        let n = 100_000;
        let buf = generate(&KeyGenSpec {
            n,
            key_len: 32,
            distribution: Distribution::FewDistinct(16),
            seed: 2,
        })
        .unwrap();
        let cfg = SortConfig::new(32, SortMode::Deterministic { r: 1 }, BaseSortKind::Qs);
        let (out, report) = sort(&buf, &cfg).unwrap();
        let mut off = 0usize;
        let mut pass = true;
        for (j, &size) in report.bucket_sizes.iter().enumerate() {
            if j > 0 && size > 0 && off > 0 {
                if out.cmp_keys(off - 1, off) == Ordering::Greater {
                    pass = false;
                }
            }
            off += size;
        }
        verdicts.push(Verdict {
            name: "order-separation",
            pass,
            detail: "bucket boundary keys nondecreasing".into(),
        });
    }

    // end-to-end stability with a stable base sort
    {
        let n = 100_000;
        let buf = generate(&KeyGenSpec {
            n,
            key_len: 32,
            distribution: Distribution::FewDistinct(4),
            seed: 3,
        })
        .unwrap();
        let mut pass = true;
        for p in [4usize, 64] {
            let mut cfg = SortConfig::new(
                p,
                SortMode::Randomized { s: default_random_s(n) },
                BaseSortKind::Ref,
            );
            cfg.stable = true;
            cfg.seed = 11;
            let (order, _) = sort_order(&buf, &cfg).unwrap();
            for w in order.windows(2) {
                if buf.cmp_keys(w[0] as usize, w[1] as usize) == Ordering::Equal && w[0] >= w[1] {
                    pass = false;
                    break;
                }
            }
        }
        verdicts.push(Verdict {
            name: "stability",
            pass,
            detail: "equal keys keep input order under a stable base".into(),
        });
    }

    // randomized concentration (Monte-Carlo surrogate of the tail bound)
    {
        let (bad, trials, threshold) = imbalance_monte_carlo(100_000, 16, 100, 12345);
        verdicts.push(Verdict {
            name: "randomized-concentration",
            pass: bad <= 5,
            detail: format!(
                "{bad}/{trials} trials with a bucket above {threshold} keys (allowed 5)"
            ),
        });
    }

    // parallel determinism
    {
        let n = 200_000;
        let buf = uniform(n, 4);
        let mut inner =
            SortConfig::new(64, SortMode::Randomized { s: default_random_s(n) }, BaseSortKind::Qs);
        inner.seed = 13;
        let (seq_out, _) = sort(&buf, &inner).unwrap();
        let mut pass = true;
        for t in [1usize, 2, 4] {
            let (mc_out, _) = mc_sort(&buf, &ParallelConfig::new(t, inner)).unwrap();
            if mc_out.as_bytes() != seq_out.as_bytes() {
                pass = false;
            }
        }
        verdicts.push(Verdict {
            name: "parallel-determinism",
            pass,
            detail: "t in {1,2,4} byte-identical to sequential".into(),
        });
    }

    // merge comparison bound
    {
        let n = 100_000;
        let p = 64;
        let buf = uniform(n, 5);
        let mut order: Vec<u32> = (0..n as u32).collect();
        let bounds = crate::keys::split_boundaries(n, p);
        for k in 0..p {
            order[bounds[k]..bounds[k + 1]]
                .sort_unstable_by(|&a, &b| buf.cmp_keys(a as usize, b as usize));
        }
        let runs: Vec<&[u32]> = (0..p).map(|k| &order[bounds[k]..bounds[k + 1]]).collect();
        let mut out = vec![0u32; n];
        let count = std::cell::Cell::new(0u64);
        multiway_merge(&runs, &mut out, |&a, &b| {
            count.set(count.get() + 1);
            buf.cmp_keys(a as usize, b as usize)
        })
        .unwrap();
        let bound = n as u64 * 6 + 2 * p as u64;
        verdicts.push(Verdict {
            name: "merge-cost",
            pass: count.get() <= bound,
            detail: format!("{} comparisons vs bound {bound}", count.get()),
        });
    }

    verdicts
}

/// Runs `trials` seeded randomized sorts at the default oversampling factor
/// and counts how many have any bucket above `1.5 * (n - p + 1) / p` keys.
/// Returns (bad trials, trials, threshold).
pub fn imbalance_monte_carlo(
    n: usize,
    p: usize,
    trials: usize,
    seed: u64,
) -> (usize, usize, usize) {
    let s = default_random_s(n);
    let threshold = (1.5 * (n - p + 1) as f64 / p as f64).floor() as usize;
    let buf = uniform(n, seed);
    let mut bad = 0;
    for trial in 0..trials {
        let mut cfg = SortConfig::new(p, SortMode::Randomized { s }, BaseSortKind::Qs);
        cfg.seed = derive_seed(seed, n as u64, p as u64, trial as u64);
        let (_, report) = sort(&buf, &cfg).unwrap();
        if report.bucket_sizes.iter().any(|&b| b > threshold) {
            bad += 1;
        }
    }
    (bad, trials, threshold)
}

/// Sorts one buffer with the given configuration and verifies the result.
pub fn sort_verified(
    buf: &KeyBuffer,
    cfg: &SortConfig,
    threads: Option<usize>,
    parallel_merge: bool,
) -> Result<(KeyBuffer, crate::pipeline::SortReport)> {
    let (sorted, report) = match threads {
        Some(t) => {
            let mut pcfg = ParallelConfig::new(t, *cfg);
            pcfg.parallel_merge = parallel_merge;
            mc_sort(buf, &pcfg)?
        }
        None => sort(buf, cfg)?,
    };
    verify_output(buf, &sorted, cfg, &report.bucket_sizes)?;
    Ok((sorted, report))
}

/// Convenience used by the CLI for --verify-only: prints one line per
/// property and reports overall success.
pub fn run_verify_suite_printing() -> bool {
    let verdicts = verify_suite();
    let mut all = true;
    for v in &verdicts {
        println!("{} {:<24} {}", if v.pass { "PASS" } else { "FAIL" }, v.name, v.detail);
        all &= v.pass;
    }
    all
}
