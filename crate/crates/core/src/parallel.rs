//! Multi-core variant: the per-sequence base sorts of the baseline phase
//! are pulled from a shared task queue by `t` workers. The partitioning
//! steps stay sequential; the bucket merges of the final phase can
//! optionally be distributed too (off by default, since output offsets are
//! fixed before fan-out the results are identical either way).
//!
//! Parallelism never changes results: for any worker count the output is
//! byte-identical to the sequential pipeline under the same configuration.

use std::sync::Mutex;
use std::time::Instant;

use crate::core_sort::{base_sort, multiway_merge};
use crate::keys::{split_boundaries, KeyBuffer};
use crate::pipeline::{
    bucket_offsets, bucket_runs, build_plan, PhaseTimes, SortConfig, SortReport,
};
use crate::{Error, Result};

/// Worker-pool configuration around an inner pipeline config.
#[derive(Clone, Copy, Debug)]
pub struct ParallelConfig {
    /// Worker count; may exceed physical cores, must not exceed `inner.p`.
    pub threads: usize,
    /// Also distribute the bucket merges of the final phase.
    pub parallel_merge: bool,
    pub inner: SortConfig,
}

impl ParallelConfig {
    pub fn new(threads: usize, inner: SortConfig) -> Self {
        Self { threads, parallel_merge: false, inner }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.threads < 1 {
            return Err(Error::InvalidParameter("thread count must be >= 1".into()));
        }
        if self.threads > self.inner.p {
            return Err(Error::InvalidParameter(format!(
                "thread count {} exceeds p = {}",
                self.threads, self.inner.p
            )));
        }
        self.inner.validate(n)
    }
}

/// Runs the tasks in `work` on `threads` workers pulling from a shared
/// queue. Task order is irrelevant to the result: each task owns a disjoint
/// slice. Worker panics propagate as run failures.
fn run_pool<'env, T, F>(threads: usize, work: Vec<T>, f: F) -> Result<()>
where
    T: Send + 'env,
    F: Fn(T) + Sync + 'env,
{
    if threads <= 1 {
        for task in work {
            f(task);
        }
        return Ok(());
    }
    let queue = Mutex::new(work);
    let failed = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|_| {
                scope.spawn(|| loop {
                    let task = queue.lock().unwrap().pop();
                    match task {
                        Some(t) => f(t),
                        None => break,
                    }
                })
            })
            .collect();
        handles.into_iter().any(|h| h.join().is_err())
    });
    if failed {
        return Err(Error::InvalidParameter("worker panicked during parallel phase".into()));
    }
    Ok(())
}

/// Multi-core pipeline: identical semantics (and identical output bytes) to
/// [`crate::pipeline::sort`] with the same inner config and seed.
pub fn mc_sort(buf: &KeyBuffer, pcfg: &ParallelConfig) -> Result<(KeyBuffer, SortReport)> {
    let (order, report) = mc_sort_order(buf, pcfg)?;
    Ok((buf.gather(&order), report))
}

/// Permutation-returning variant of [`mc_sort`].
pub fn mc_sort_order(buf: &KeyBuffer, pcfg: &ParallelConfig) -> Result<(Vec<u32>, SortReport)> {
    let n = buf.len();
    if n == 0 {
        pcfg.validate(1).ok();
        return Ok((
            Vec::new(),
            SortReport {
                n: 0,
                p: pcfg.inner.p,
                phases: PhaseTimes::default(),
                bucket_sizes: vec![0; pcfg.inner.p],
                expansion: 0.0,
                comparisons: None,
            },
        ));
    }
    pcfg.validate(n)?;
    let cfg = &pcfg.inner;

    let mut order: Vec<u32> = (0..n as u32).collect();
    if cfg.p == 1 {
        // degenerate pool: t <= p forces t = 1
        let t = Instant::now();
        base_sort(cfg.base, &mut order, |&a, &b| buf.cmp_keys(a as usize, b as usize));
        let secs = t.elapsed().as_secs_f64();
        return Ok((
            order,
            SortReport {
                n,
                p: 1,
                phases: PhaseTimes { baseline_sort: secs, ..Default::default() },
                bucket_sizes: vec![n],
                expansion: 1.0,
                comparisons: None,
            },
        ));
    }

    let boundaries = split_boundaries(n, cfg.p);

    // Baseline phase: one task per sequence, disjoint mutable spans.
    let t = Instant::now();
    {
        let mut tasks: Vec<&mut [u32]> = Vec::with_capacity(cfg.p);
        let mut rest = order.as_mut_slice();
        for k in 0..cfg.p {
            let len = boundaries[k + 1] - boundaries[k];
            let (head, tail) = rest.split_at_mut(len);
            tasks.push(head);
            rest = tail;
        }
        debug_assert!(rest.is_empty());
        tasks.reverse(); // queue pops from the back; keep ascending k first
        let base = cfg.base;
        run_pool(pcfg.threads, tasks, |span: &mut [u32]| {
            base_sort(base, span, |&a, &b| buf.cmp_keys(a as usize, b as usize));
        })?;
    }
    let baseline_secs = t.elapsed().as_secs_f64();

    let (plan, plan_times) = build_plan(buf, &order, &boundaries, cfg)?;
    let sizes = plan.bucket_sizes();
    let offsets = bucket_offsets(&sizes);

    // Merging phase: serial by default (the measured configuration);
    // optionally one task per bucket writing a precomputed disjoint span.
    let t = Instant::now();
    let mut out = vec![0u32; n];
    if pcfg.parallel_merge {
        let mut tasks: Vec<(usize, &mut [u32])> = Vec::with_capacity(cfg.p);
        let mut rest = out.as_mut_slice();
        for j in 0..cfg.p {
            let (head, tail) = rest.split_at_mut(offsets[j + 1] - offsets[j]);
            tasks.push((j, head));
            rest = tail;
        }
        tasks.reverse();
        let merge_failed = Mutex::new(None);
        let order_ref = &order;
        let plan_ref = &plan;
        let boundaries_ref = &boundaries;
        run_pool(pcfg.threads, tasks, |(j, span): (usize, &mut [u32])| {
            let runs = bucket_runs(order_ref, boundaries_ref, plan_ref, j);
            if let Err(e) =
                multiway_merge(&runs, span, |&a, &b| buf.cmp_keys(a as usize, b as usize))
            {
                *merge_failed.lock().unwrap() = Some(e);
            }
        })?;
        if let Some(e) = merge_failed.into_inner().unwrap() {
            return Err(e);
        }
    } else {
        for j in 0..cfg.p {
            let runs = bucket_runs(&order, &boundaries, &plan, j);
            multiway_merge(&runs, &mut out[offsets[j]..offsets[j + 1]], |&a, &b| {
                buf.cmp_keys(a as usize, b as usize)
            })?;
        }
    }
    let merge_secs = t.elapsed().as_secs_f64();

    let expansion = sizes.iter().copied().max().unwrap_or(0) as f64 / (n as f64 / cfg.p as f64);
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
        comparisons: None, // comparison counting is sequential-only
    };
    Ok((out, report))
}
