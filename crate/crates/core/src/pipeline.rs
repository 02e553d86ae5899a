//! End-to-end sorting templates: baseline split, per-sequence base sort,
//! sampling and splitter selection, splitting, p-way merging.
//!
//! `sq_det` drives deterministic regular oversampling (sample size `r * p`
//! per sequence), `sq_ran` random oversampling (one global sample of
//! `p * s - 1` keys drawn after baseline sorting). Both share every phase
//! but sampling.

use std::cell::Cell;
use std::cmp::Ordering;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::core_sort::{base_sort, multiway_merge, BaseSortKind};
use crate::keys::{split_boundaries, KeyBuffer};
use crate::partition::{
    merge_samples, random_sample, regular_sample, select_splitters, split_around, BalanceBound,
    PartitionPlan, RandomSampleParams, RegularSampleParams, SplitStrategy,
};
use crate::{Error, Result};

/// Sampling mode of the pipeline.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SortMode {
    /// Regular oversampling with multiplier `r`; sample `r * p` per sequence.
    Deterministic { r: u32 },
    /// Random oversampling with factor `s`; one sample of `p * s - 1` keys.
    Randomized { s: usize },
}

/// Default random oversampling factor: `ceil(lg^2 n)`.
pub fn default_random_s(n: usize) -> usize {
    if n < 2 {
        return 1;
    }
    let lg = (n as f64).log2();
    (lg * lg).ceil() as usize
}

/// Random oversampling factor from the `a` parameter: `ceil((lg n)^(1+a))`.
pub fn random_s_from_a(n: usize, a: f64) -> usize {
    if n < 2 {
        return 1;
    }
    (n as f64).log2().powf(1.0 + a).ceil() as usize
}

/// Full pipeline configuration.
#[derive(Clone, Copy, Debug)]
pub struct SortConfig {
    pub p: usize,
    pub mode: SortMode,
    pub base: BaseSortKind,
    pub split_strategy: SplitStrategy,
    /// Seeds the random sample draw (randomized mode only).
    pub seed: u64,
    /// Request end-to-end stability; requires a stable base sort.
    pub stable: bool,
    /// Count key comparisons per phase into the report.
    pub count_comparisons: bool,
}

impl SortConfig {
    pub fn new(p: usize, mode: SortMode, base: BaseSortKind) -> Self {
        Self {
            p,
            mode,
            base,
            split_strategy: SplitStrategy::default(),
            seed: 0,
            stable: false,
            count_comparisons: false,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.p < 1 {
            return Err(Error::InvalidParameter("p must be >= 1".into()));
        }
        if self.stable && !self.base.is_stable() {
            return Err(Error::InvalidParameter(format!(
                "stable output requested but base sort '{}' is not stable",
                self.base
            )));
        }
        if self.p == 1 {
            return Ok(());
        }
        match self.mode {
            SortMode::Deterministic { r } => RegularSampleParams { p: self.p, r }.validate(n),
            SortMode::Randomized { s } => RandomSampleParams { p: self.p, s }.validate(n),
        }
    }
}

/// Wall-clock seconds per pipeline phase.
#[derive(Clone, Copy, Debug, Default)]
pub struct PhaseTimes {
    pub baseline_sort: f64,
    pub sample: f64,
    pub splitter: f64,
    pub split: f64,
    pub merge: f64,
}

impl PhaseTimes {
    pub fn total(&self) -> f64 {
        self.baseline_sort + self.sample + self.splitter + self.split + self.merge
    }
}

/// Key comparison counts for the two dominant phases.
#[derive(Clone, Copy, Debug, Default)]
pub struct PhaseComparisons {
    pub baseline_sort: u64,
    pub merge: u64,
}

/// Post-run instrumentation.
#[derive(Clone, Debug)]
pub struct SortReport {
    pub n: usize,
    pub p: usize,
    pub phases: PhaseTimes,
    pub bucket_sizes: Vec<usize>,
    /// max bucket size over the ideal n/p; 1.0 for the degenerate p = 1.
    pub expansion: f64,
    pub comparisons: Option<PhaseComparisons>,
}

impl SortReport {
    fn degenerate(n: usize, comparisons: Option<PhaseComparisons>, baseline_secs: f64) -> Self {
        Self {
            n,
            p: 1,
            phases: PhaseTimes { baseline_sort: baseline_secs, ..Default::default() },
            bucket_sizes: vec![n],
            expansion: 1.0,
            comparisons,
        }
    }
}

#[inline]
fn key_cmp<'a>(
    buf: &'a KeyBuffer,
    counter: Option<&'a Cell<u64>>,
) -> impl FnMut(&u32, &u32) -> Ordering + 'a {
    move |a: &u32, b: &u32| {
        if let Some(c) = counter {
            c.set(c.get() + 1);
        }
        buf.cmp_keys(*a as usize, *b as usize)
    }
}

pub(crate) struct PlanTimes {
    pub sample: f64,
    pub splitter: f64,
    pub split: f64,
}

/// Sampling, splitter selection and splitting (steps 2-4), shared between
/// the sequential and multi-core drivers. `order` must already be baseline
/// sorted per sequence.
pub(crate) fn build_plan(
    buf: &KeyBuffer,
    order: &[u32],
    boundaries: &[usize],
    cfg: &SortConfig,
) -> Result<(PartitionPlan, PlanTimes)> {
    let n = order.len();
    let p = cfg.p;

    let t = Instant::now();
    let (sample, s) = match cfg.mode {
        SortMode::Deterministic { r } => {
            let params = RegularSampleParams { p, r };
            let seq_ceil = n.div_ceil(p);
            let lists = (0..p)
                .map(|k| {
                    regular_sample(
                        buf,
                        &order[boundaries[k]..boundaries[k + 1]],
                        k as u32,
                        seq_ceil,
                        &params,
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            (merge_samples(buf, &lists)?, params.sample_len())
        }
        SortMode::Randomized { s } => {
            let params = RandomSampleParams { p, s };
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let sample = random_sample(buf, order, boundaries, &params, cfg.base, &mut rng)?;
            (sample, s)
        }
    };
    let sample_secs = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let splitters = select_splitters(buf, &sample, p, s)?;
    let splitter_secs = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let bounds: Vec<Vec<usize>> = (0..p)
        .map(|k| {
            split_around(
                buf,
                &order[boundaries[k]..boundaries[k + 1]],
                k as u32,
                &splitters,
                cfg.split_strategy,
            )
        })
        .collect();
    let split_secs = t.elapsed().as_secs_f64();

    let plan = PartitionPlan { bounds };
    debug_assert_eq!(plan.bucket_sizes().iter().sum::<usize>(), n);
    Ok((plan, PlanTimes { sample: sample_secs, splitter: splitter_secs, split: split_secs }))
}

/// The runs of bucket `j`: one span per sequence, in ascending sequence id.
pub(crate) fn bucket_runs<'a>(
    order: &'a [u32],
    boundaries: &[usize],
    plan: &PartitionPlan,
    j: usize,
) -> Vec<&'a [u32]> {
    (0..plan.bounds.len())
        .map(|k| {
            let start = boundaries[k];
            &order[start + plan.bounds[k][j]..start + plan.bounds[k][j + 1]]
        })
        .collect()
}

/// Prefix-sum offsets of the bucket sizes; `p + 1` entries.
pub(crate) fn bucket_offsets(sizes: &[usize]) -> Vec<usize> {
    let mut offs = Vec::with_capacity(sizes.len() + 1);
    let mut acc = 0;
    offs.push(0);
    for &s in sizes {
        acc += s;
        offs.push(acc);
    }
    offs
}

/// Runs the configured pipeline and returns the sorted permutation of key
/// indices plus the report. Exposing the permutation (rather than only the
/// gathered bytes) is what makes stability observable for equal keys.
pub fn sort_order(buf: &KeyBuffer, cfg: &SortConfig) -> Result<(Vec<u32>, SortReport)> {
    let n = buf.len();
    if n == 0 {
        // Still reject contradictory flags; size-dependent parameter checks
        // are vacuous with nothing to sort.
        if cfg.stable && !cfg.base.is_stable() {
            return Err(Error::InvalidParameter(format!(
                "stable output requested but base sort '{}' is not stable",
                cfg.base
            )));
        }
        return Ok((Vec::new(), SortReport::degenerate(0, None, 0.0)));
    }
    cfg.validate(n)?;

    let counter = Cell::new(0u64);
    let counting = cfg.count_comparisons.then_some(&counter);

    let mut order: Vec<u32> = (0..n as u32).collect();
    if cfg.p == 1 {
        let t = Instant::now();
        base_sort(cfg.base, &mut order, key_cmp(buf, counting));
        let secs = t.elapsed().as_secs_f64();
        let comparisons = cfg
            .count_comparisons
            .then(|| PhaseComparisons { baseline_sort: counter.get(), merge: 0 });
        return Ok((order, SortReport::degenerate(n, comparisons, secs)));
    }

    let boundaries = split_boundaries(n, cfg.p);

    let t = Instant::now();
    for k in 0..cfg.p {
        base_sort(
            cfg.base,
            &mut order[boundaries[k]..boundaries[k + 1]],
            key_cmp(buf, counting),
        );
    }
    let baseline_secs = t.elapsed().as_secs_f64();
    let baseline_cmp = counter.get();

    let (plan, plan_times) = build_plan(buf, &order, &boundaries, cfg)?;
    let sizes = plan.bucket_sizes();
    let offsets = bucket_offsets(&sizes);

    counter.set(0);
    let t = Instant::now();
    let mut out = vec![0u32; n];
    for j in 0..cfg.p {
        let runs = bucket_runs(&order, &boundaries, &plan, j);
        multiway_merge(&runs, &mut out[offsets[j]..offsets[j + 1]], key_cmp(buf, counting))?;
    }
    let merge_secs = t.elapsed().as_secs_f64();

    let expansion = sizes.iter().copied().max().unwrap_or(0) as f64 / (n as f64 / cfg.p as f64);
    let comparisons = cfg.count_comparisons.then(|| PhaseComparisons {
        baseline_sort: baseline_cmp,
        merge: counter.get(),
    });
    let report = SortReport {
        n,
        p: cfg.p,
        phases: PhaseTimes {
            baseline_sort: baseline_secs,
            sample: plan_times.sample,
            splitter: plan_times.splitter,
            split: plan_times.split,
            merge: merge_secs,
        },
        bucket_sizes: sizes,
        expansion,
        comparisons,
    };
    Ok((out, report))
}

/// Runs the pipeline and materializes the sorted key bytes.
pub fn sort(buf: &KeyBuffer, cfg: &SortConfig) -> Result<(KeyBuffer, SortReport)> {
    let (order, report) = sort_order(buf, cfg)?;
    Ok((buf.gather(&order), report))
}

/// Deterministic regular oversampling pipeline.
pub fn sq_det(buf: &KeyBuffer, cfg: &SortConfig) -> Result<(KeyBuffer, SortReport)> {
    if !matches!(cfg.mode, SortMode::Deterministic { .. }) {
        return Err(Error::InvalidParameter("sq_det requires deterministic mode".into()));
    }
    sort(buf, cfg)
}

/// Random oversampling pipeline.
pub fn sq_ran(buf: &KeyBuffer, cfg: &SortConfig) -> Result<(KeyBuffer, SortReport)> {
    if !matches!(cfg.mode, SortMode::Randomized { .. }) {
        return Err(Error::InvalidParameter("sq_ran requires randomized mode".into()));
    }
    sort(buf, cfg)
}

/// Runs the pipeline and verifies the result: nondecreasing order, multiset
/// equality with the input, and in deterministic mode the hard bucket-size
/// bound. Returns the report on success.
pub fn sort_with_oracle_check(buf: &KeyBuffer, cfg: &SortConfig) -> Result<SortReport> {
    let (sorted, report) = sort(buf, cfg)?;
    if sorted.len() != buf.len() {
        return Err(Error::Verification {
            index: sorted.len().min(buf.len()),
            what: format!("output has {} keys, input {}", sorted.len(), buf.len()),
        });
    }
    if let Some(i) = sorted.first_descent() {
        return Err(Error::Verification {
            index: i,
            what: "output not nondecreasing".into(),
        });
    }
    if sorted.multiset_hash() != buf.multiset_hash() {
        return Err(Error::Verification {
            index: 0,
            what: "output is not a permutation of the input (multiset hash mismatch)".into(),
        });
    }
    if cfg.p >= 2 {
        if let SortMode::Deterministic { r } = cfg.mode {
            let bound = BalanceBound { n: buf.len(), p: cfg.p, r };
            let limit = bound.max_bucket();
            if let Some((j, &size)) =
                report.bucket_sizes.iter().enumerate().find(|(_, &s)| s > limit)
            {
                return Err(Error::Verification {
                    index: j,
                    what: format!("bucket {j} holds {size} keys, exceeding the bound {limit}"),
                });
            }
        }
    }
    Ok(report)
}

/// Balance report for a finished run: hard limit in deterministic mode,
/// size reporting only in randomized mode.
pub fn balance_of(report: &SortReport, cfg: &SortConfig) -> crate::partition::BalanceReport {
    let limit = match cfg.mode {
        SortMode::Deterministic { r } if cfg.p >= 2 => {
            Some(BalanceBound { n: report.n, p: cfg.p, r }.max_bucket())
        }
        _ => None,
    };
    let max_size = report.bucket_sizes.iter().copied().max().unwrap_or(0);
    crate::partition::BalanceReport {
        sizes: report.bucket_sizes.clone(),
        limit,
        max_size,
        pass: limit.map_or(true, |l| max_size <= l),
    }
}
