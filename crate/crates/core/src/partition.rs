//! Sample selection, splitter selection, and splitting of sorted sequences.
//!
//! Samples are tagged with their source sequence id and in-sequence index,
//! giving a total order even over duplicate keys: comparisons resolve first
//! on the key bytes, then on the sequence id, then on the index. The same
//! triple order drives the binary searches of the splitting step, so buckets
//! separate cleanly no matter how many duplicates the input holds.

use std::cmp::Ordering;
use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::core_sort::{base_sort, multiway_merge, BaseSortKind};
use crate::keys::KeyBuffer;
use crate::{Error, Result};

/// Parameters of deterministic regular oversampling: sample size per
/// sequence is `s = r * p`.
#[derive(Clone, Copy, Debug)]
pub struct RegularSampleParams {
    pub p: usize,
    pub r: u32,
}

impl RegularSampleParams {
    pub fn sample_len(&self) -> usize {
        self.r as usize * self.p
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.p < 2 {
            return Err(Error::InvalidParameter("regular sampling requires p >= 2".into()));
        }
        if self.r < 1 {
            return Err(Error::InvalidParameter("oversampling multiplier r must be >= 1".into()));
        }
        if self.r as usize * self.p * self.p > n {
            return Err(Error::InvalidParameter(format!(
                "sample r*p^2 = {} does not fit n = {n}",
                self.r as usize * self.p * self.p
            )));
        }
        Ok(())
    }

    /// True when r^2 * p^2 > n, i.e. outside the regime where the total
    /// sample stays a vanishing fraction of the input.
    pub fn outside_asymptotic_regime(&self, n: usize) -> bool {
        let r = self.r as usize;
        r.saturating_mul(r).saturating_mul(self.p).saturating_mul(self.p) > n
    }
}

/// Parameters of random oversampling: total sample size is `p * s - 1`.
#[derive(Clone, Copy, Debug)]
pub struct RandomSampleParams {
    pub p: usize,
    pub s: usize,
}

impl RandomSampleParams {
    pub fn sample_len(&self) -> usize {
        self.p * self.s - 1
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.p < 2 {
            return Err(Error::InvalidParameter("random sampling requires p >= 2".into()));
        }
        if self.s < 1 {
            return Err(Error::InvalidParameter("oversampling factor s must be >= 1".into()));
        }
        if 2 * self.p * self.s >= n {
            return Err(Error::InvalidParameter(format!(
                "p*s = {} must be < n/2 = {}",
                self.p * self.s,
                n / 2
            )));
        }
        Ok(())
    }
}

/// A sample key tagged with its source coordinates after baseline sorting.
///
/// `key_index` addresses the key bytes in the original buffer; `seq` is the
/// sequence id and `idx` the position within the sorted sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TaggedSample {
    pub key_index: u32,
    pub seq: u32,
    pub idx: u32,
}

/// Triple order over tagged samples: key bytes, then sequence id, then index.
#[inline]
pub fn cmp_tagged(buf: &KeyBuffer, a: &TaggedSample, b: &TaggedSample) -> Ordering {
    buf.cmp_keys(a.key_index as usize, b.key_index as usize)
        .then(a.seq.cmp(&b.seq))
        .then(a.idx.cmp(&b.idx))
}

/// The `p - 1` splitters, nondecreasing under the triple order.
#[derive(Clone, Debug)]
pub struct SplitterSet {
    splitters: Vec<TaggedSample>,
}

impl SplitterSet {
    pub fn len(&self) -> usize {
        self.splitters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.splitters.is_empty()
    }

    pub fn as_slice(&self) -> &[TaggedSample] {
        &self.splitters
    }
}

/// Per-sequence bucket boundaries: `bounds[k][j]` is the offset in sorted
/// sequence `k` where bucket `j` begins; row `k` has `p + 1` entries.
#[derive(Clone, Debug)]
pub struct PartitionPlan {
    pub bounds: Vec<Vec<usize>>,
}

impl PartitionPlan {
    pub fn num_buckets(&self) -> usize {
        self.bounds[0].len() - 1
    }

    /// Size of bucket `j` summed across all sequences.
    pub fn bucket_sizes(&self) -> Vec<usize> {
        let p = self.num_buckets();
        let mut sizes = vec![0usize; p];
        for row in &self.bounds {
            for (j, size) in sizes.iter_mut().enumerate() {
                *size += row[j + 1] - row[j];
            }
        }
        sizes
    }
}

/// The deterministic bucket-size bound
/// `(1 + 1/r) * (n/p) + r * p`, evaluated with integer arithmetic.
#[derive(Clone, Copy, Debug)]
pub struct BalanceBound {
    pub n: usize,
    pub p: usize,
    pub r: u32,
}

impl BalanceBound {
    /// `ceil((1 + 1/r)(n/p) + r*p)` computed exactly as
    /// `ceil((r+1)*n / (r*p)) + r*p`.
    pub fn max_bucket(&self) -> usize {
        let r = self.r as usize;
        let num = (r + 1) * self.n;
        let den = r * self.p;
        num.div_ceil(den) + r * self.p
    }
}

/// Outcome of a balance check.
#[derive(Clone, Debug)]
pub struct BalanceReport {
    pub sizes: Vec<usize>,
    /// Hard limit applied (deterministic mode); `None` when only reporting.
    pub limit: Option<usize>,
    pub max_size: usize,
    pub pass: bool,
}

/// Computes per-bucket sizes and, given a bound, checks them against it.
/// Randomized plans pass `None` and get sizes reported without a hard bound.
pub fn check_balance(plan: &PartitionPlan, bound: Option<&BalanceBound>) -> BalanceReport {
    let sizes = plan.bucket_sizes();
    let max_size = sizes.iter().copied().max().unwrap_or(0);
    let limit = bound.map(|b| b.max_bucket());
    let pass = limit.map_or(true, |l| max_size <= l);
    BalanceReport { sizes, limit, max_size, pass }
}

/// Draws the regular sample of sequence `seq_id`: the keys at 1-based
/// virtual positions `j * x` for `j = 1..s`, where `x = ceil(ceil(n/p) / s)`
/// is the padded segment size, plus the sequence maximum. Positions past the
/// end of the sequence clamp to the last element (virtual padding with the
/// maximum), so the result always has exactly `s` entries.
pub fn regular_sample(
    buf: &KeyBuffer,
    seq: &[u32],
    seq_id: u32,
    seq_ceil: usize,
    params: &RegularSampleParams,
) -> Result<Vec<TaggedSample>> {
    if seq.is_empty() {
        return Err(Error::InvalidParameter(format!("sequence {seq_id} is empty")));
    }
    let s = params.sample_len();
    let x = seq_ceil.div_ceil(s).max(1);
    let last = seq.len() - 1;
    let mut sample = Vec::with_capacity(s);
    for j in 1..s {
        let idx = (j * x).min(seq.len()) - 1;
        sample.push(TaggedSample { key_index: seq[idx], seq: seq_id, idx: idx as u32 });
    }
    sample.push(TaggedSample { key_index: seq[last], seq: seq_id, idx: last as u32 });
    debug_assert!(sample
        .windows(2)
        .all(|w| cmp_tagged(buf, &w[0], &w[1]) != Ordering::Greater));
    let _ = buf;
    Ok(sample)
}

/// Merges the per-sequence tagged samples into one list sorted under the
/// triple order.
pub fn merge_samples(buf: &KeyBuffer, lists: &[Vec<TaggedSample>]) -> Result<Vec<TaggedSample>> {
    let views: Vec<&[TaggedSample]> = lists.iter().map(|l| l.as_slice()).collect();
    let total: usize = lists.iter().map(|l| l.len()).sum();
    let mut out = vec![TaggedSample { key_index: 0, seq: 0, idx: 0 }; total];
    multiway_merge(&views, &mut out, |a, b| cmp_tagged(buf, a, b))?;
    Ok(out)
}

/// Draws `m` distinct positions uniformly from `[0, n)` via a partial
/// Fisher-Yates shuffle backed by a sparse swap map.
fn sample_positions(n: usize, m: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut swapped: HashMap<usize, usize> = HashMap::with_capacity(2 * m);
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let j = rng.gen_range(i..n);
        let vj = swapped.get(&j).copied().unwrap_or(j);
        let vi = swapped.get(&i).copied().unwrap_or(i);
        swapped.insert(j, vi);
        out.push(vj);
    }
    out
}

/// Draws the random sample: `p*s - 1` global positions without replacement,
/// each mapped through the baseline split to its (seq, idx) tag, then sorted
/// by the configured base sort under the triple order.
pub fn random_sample(
    buf: &KeyBuffer,
    order: &[u32],
    boundaries: &[usize],
    params: &RandomSampleParams,
    base: BaseSortKind,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<TaggedSample>> {
    let n = order.len();
    let m = params.sample_len();
    if m > n {
        return Err(Error::InvalidParameter(format!("sample size {m} exceeds n = {n}")));
    }
    let mut sample: Vec<TaggedSample> = sample_positions(n, m, rng)
        .into_iter()
        .map(|g| {
            let k = boundaries.partition_point(|&b| b <= g) - 1;
            let idx = g - boundaries[k];
            TaggedSample { key_index: order[g], seq: k as u32, idx: idx as u32 }
        })
        .collect();
    base_sort(base, &mut sample, |a, b| cmp_tagged(buf, a, b));
    Ok(sample)
}

/// Picks splitter `i - 1` as the `(i * s)`-th smallest sample (1-based rank),
/// for `1 <= i <= p - 1`.
pub fn select_splitters(
    buf: &KeyBuffer,
    sample: &[TaggedSample],
    p: usize,
    s: usize,
) -> Result<SplitterSet> {
    if sample.len() < (p - 1) * s {
        return Err(Error::InvalidParameter(format!(
            "sample of {} too small for p = {p}, s = {s}",
            sample.len()
        )));
    }
    let splitters: Vec<TaggedSample> = (1..p).map(|i| sample[i * s - 1]).collect();
    debug_assert!(splitters
        .windows(2)
        .all(|w| cmp_tagged(buf, &w[0], &w[1]) != Ordering::Greater));
    let _ = buf;
    Ok(SplitterSet { splitters })
}

/// Splitting strategy for the partition step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SplitStrategy {
    /// `p - 1` binary searches of the splitters into each sorted sequence.
    #[default]
    BinarySearch,
    /// Single forward walk of the sequence against the splitters.
    Merge,
}

impl std::str::FromStr for SplitStrategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary-search" => Ok(SplitStrategy::BinarySearch),
            "merge" => Ok(SplitStrategy::Merge),
            other => Err(Error::InvalidParameter(format!("unknown split strategy '{other}'"))),
        }
    }
}

#[inline]
fn cmp_position(
    buf: &KeyBuffer,
    seq: &[u32],
    seq_id: u32,
    i: usize,
    splitter: &TaggedSample,
) -> Ordering {
    buf.cmp_keys(seq[i] as usize, splitter.key_index as usize)
        .then(seq_id.cmp(&splitter.seq))
        .then((i as u32).cmp(&splitter.idx))
}

/// Computes row `seq_id` of the partition plan: `bounds[j + 1]` counts the
/// positions of the sequence whose triple is `<=` splitter `j`.
pub fn split_around(
    buf: &KeyBuffer,
    seq: &[u32],
    seq_id: u32,
    splitters: &SplitterSet,
    strategy: SplitStrategy,
) -> Vec<usize> {
    let mut row = Vec::with_capacity(splitters.len() + 2);
    row.push(0);
    match strategy {
        SplitStrategy::BinarySearch => {
            for sp in &splitters.splitters {
                let mut lo = 0;
                let mut hi = seq.len();
                while lo < hi {
                    let mid = lo + (hi - lo) / 2;
                    if cmp_position(buf, seq, seq_id, mid, sp) != Ordering::Greater {
                        lo = mid + 1;
                    } else {
                        hi = mid;
                    }
                }
                row.push(lo);
            }
        }
        SplitStrategy::Merge => {
            let mut i = 0;
            for sp in &splitters.splitters {
                while i < seq.len() && cmp_position(buf, seq, seq_id, i, sp) != Ordering::Greater {
                    i += 1;
                }
                row.push(i);
            }
        }
    }
    row.push(seq.len());
    debug_assert!(row.windows(2).all(|w| w[0] <= w[1]));
    row
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keys::{generate, split_boundaries, Distribution, KeyGenSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Buffer of single-byte keys from explicit values, plus the identity
    /// order over a subrange.
    fn byte_buf(vals: &[u8]) -> KeyBuffer {
        KeyBuffer::from_bytes(vals.to_vec(), 1).unwrap()
    }

    #[test]
    fn regular_sample_hand_example() {
        // keys [10, 20, 30, 40], p = 2, r = 1 (s = 2), padded segment
        // x = ceil(4 / 2) = 2: sample = key 20 (idx 1) plus max 40 (idx 3).
        let buf = byte_buf(&[10, 20, 30, 40]);
        let seq: Vec<u32> = (0..4).collect();
        let params = RegularSampleParams { p: 2, r: 1 };
        let sample = regular_sample(&buf, &seq, 0, 4, &params).unwrap();
        assert_eq!(sample.len(), 2);
        assert_eq!(buf.key(sample[0].key_index as usize), &[20]);
        assert_eq!(sample[0].idx, 1);
        assert_eq!(buf.key(sample[1].key_index as usize), &[40]);
        assert_eq!(sample[1].idx, 3);
    }

    #[test]
    fn regular_sample_identical_keys_distinct_by_idx() {
        let buf = byte_buf(&[7; 8]);
        let seq: Vec<u32> = (0..8).collect();
        let params = RegularSampleParams { p: 2, r: 4 }; // s = 8
        let sample = regular_sample(&buf, &seq, 3, 8, &params).unwrap();
        assert_eq!(sample.len(), 8);
        let mut idxs: Vec<u32> = sample.iter().map(|t| t.idx).collect();
        idxs.dedup();
        assert_eq!(idxs.len(), 8, "tags must be distinct by idx");
        assert!(sample.iter().all(|t| t.seq == 3));
    }

    #[test]
    fn regular_sample_positions_partition_evenly() {
        // n/p = 1000, p = 8, r = 2 -> s = 16 samples at multiples of
        // x = ceil(1000/16) = 63.
        let buf = generate(&KeyGenSpec {
            n: 1000,
            key_len: 4,
            distribution: Distribution::UniformBytes,
            seed: 21,
        })
        .unwrap();
        let mut seq: Vec<u32> = (0..1000).collect();
        seq.sort_unstable_by(|&a, &b| buf.cmp_keys(a as usize, b as usize));
        let params = RegularSampleParams { p: 8, r: 2 };
        let sample = regular_sample(&buf, &seq, 0, 1000, &params).unwrap();
        assert_eq!(sample.len(), 16);
        for (j, t) in sample.iter().take(15).enumerate() {
            assert_eq!(t.idx as usize, (j + 1) * 63 - 1);
        }
        assert_eq!(sample[15].idx, 999);
    }

    #[test]
    fn regular_sample_rejects_empty_sequence() {
        let buf = byte_buf(&[]);
        let params = RegularSampleParams { p: 2, r: 1 };
        assert!(regular_sample(&buf, &[], 0, 0, &params).is_err());
    }

    #[test]
    fn merge_samples_trivial_and_oracle() {
        let buf = generate(&KeyGenSpec {
            n: 4096,
            key_len: 4,
            distribution: Distribution::FewDistinct(16),
            seed: 5,
        })
        .unwrap();
        // p = 1 identity
        let single = vec![vec![TaggedSample { key_index: 0, seq: 0, idx: 0 }]];
        assert_eq!(merge_samples(&buf, &single).unwrap(), single[0]);

        // p = 16, r = 2 style random lists vs sort-the-concatenation oracle
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut lists: Vec<Vec<TaggedSample>> = Vec::new();
        for k in 0..16u32 {
            let mut l: Vec<TaggedSample> = (0..32u32)
                .map(|idx| TaggedSample {
                    key_index: rng.gen_range(0..4096),
                    seq: k,
                    idx,
                })
                .collect();
            l.sort_by(|a, b| cmp_tagged(&buf, a, b));
            lists.push(l);
        }
        let merged = merge_samples(&buf, &lists).unwrap();
        let mut expect: Vec<TaggedSample> = lists.concat();
        expect.sort_by(|a, b| cmp_tagged(&buf, a, b));
        assert_eq!(merged, expect);
    }

    #[test]
    fn select_splitters_rank_examples() {
        let buf = byte_buf(&[1, 2, 3, 4, 5, 6]);
        let t: Vec<TaggedSample> = (0..6u32)
            .map(|i| TaggedSample { key_index: i, seq: 0, idx: i })
            .collect();
        // p = 2, s = 3: single splitter at rank 3 -> key value 3
        let s = select_splitters(&buf, &t, 2, 3).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(buf.key(s.as_slice()[0].key_index as usize), &[3]);

        // p = 4, r = 1 (s = p = 4, |T| = 16): ranks 4, 8, 12
        let buf16 = byte_buf(&(1..=16).collect::<Vec<u8>>());
        let t16: Vec<TaggedSample> = (0..16u32)
            .map(|i| TaggedSample { key_index: i, seq: 0, idx: i })
            .collect();
        let s = select_splitters(&buf16, &t16, 4, 4).unwrap();
        let keys: Vec<u8> = s
            .as_slice()
            .iter()
            .map(|t| buf16.key(t.key_index as usize)[0])
            .collect();
        assert_eq!(keys, vec![4, 8, 12]);

        // too-small sample
        assert!(select_splitters(&buf, &t, 4, 3).is_err());
    }

    #[test]
    fn split_around_all_equal_keys_resolved_by_sequence_id() {
        // all keys equal; splitter tagged from a higher sequence pulls the
        // whole lower sequence left of it, and vice versa.
        let buf = byte_buf(&[9; 12]);
        let seq: Vec<u32> = (0..6).collect(); // sequence 1
        let from_higher = SplitterSet {
            splitters: vec![TaggedSample { key_index: 6, seq: 2, idx: 3 }],
        };
        let row = split_around(&buf, &seq, 1, &from_higher, SplitStrategy::BinarySearch);
        assert_eq!(row, vec![0, 6, 6]);

        let from_lower = SplitterSet {
            splitters: vec![TaggedSample { key_index: 6, seq: 0, idx: 3 }],
        };
        let row = split_around(&buf, &seq, 1, &from_lower, SplitStrategy::BinarySearch);
        assert_eq!(row, vec![0, 0, 6]);
    }

    #[test]
    fn split_around_matches_linear_scan_oracle() {
        let buf = generate(&KeyGenSpec {
            n: 2000,
            key_len: 2,
            distribution: Distribution::FewDistinct(32),
            seed: 77,
        })
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for trial in 0..20 {
            let seq_id = trial % 4;
            let start = (trial as usize % 3) * 500;
            let mut seq: Vec<u32> = (start as u32..(start + 500) as u32).collect();
            seq.sort_unstable_by(|&a, &b| buf.cmp_keys(a as usize, b as usize));
            let mut spl: Vec<TaggedSample> = (0..7)
                .map(|_| TaggedSample {
                    key_index: rng.gen_range(0..2000),
                    seq: rng.gen_range(0..4),
                    idx: rng.gen_range(0..500),
                })
                .collect();
            spl.sort_by(|a, b| cmp_tagged(&buf, a, b));
            let set = SplitterSet { splitters: spl.clone() };

            for strategy in [SplitStrategy::BinarySearch, SplitStrategy::Merge] {
                let row = split_around(&buf, &seq, seq_id, &set, strategy);
                // Oracle: classify every position by brute-force triple order.
                let mut expect = vec![0usize];
                for sp in &spl {
                    let count = (0..seq.len())
                        .filter(|&i| cmp_position(&buf, &seq, seq_id, i, sp) != Ordering::Greater)
                        .count();
                    expect.push(count);
                }
                expect.push(seq.len());
                assert_eq!(row, expect);
            }
        }
    }

    #[test]
    fn balance_bound_arithmetic() {
        // n = 1000, p = 4, r = 1: 2 * 250 + 4 = 504
        let b = BalanceBound { n: 1000, p: 4, r: 1 };
        assert_eq!(b.max_bucket(), 504);
        // p = 1: bound n(1 + 1/r) + r >= n always holds
        let b1 = BalanceBound { n: 1000, p: 1, r: 2 };
        assert!(b1.max_bucket() >= 1000);
    }

    #[test]
    fn random_sample_deterministic_and_exhaustive() {
        let buf = generate(&KeyGenSpec {
            n: 256,
            key_len: 4,
            distribution: Distribution::UniformBytes,
            seed: 12,
        })
        .unwrap();
        let boundaries = split_boundaries(256, 4);
        let mut order: Vec<u32> = (0..256).collect();
        for k in 0..4 {
            order[boundaries[k]..boundaries[k + 1]]
                .sort_unstable_by(|&a, &b| buf.cmp_keys(a as usize, b as usize));
        }
        // exhaustive: p*s - 1 = n with p = 1 slot trick is excluded by
        // params, so use the op-level contract directly: m = n.
        let params = RandomSampleParams { p: 257, s: 1 }; // p*s - 1 = 256 = n
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = random_sample(&buf, &order, &boundaries, &params, BaseSortKind::Ref, &mut rng)
            .unwrap();
        assert_eq!(t.len(), 256);
        let mut keys: Vec<u32> = t.iter().map(|s| s.key_index).collect();
        keys.sort_unstable();
        assert_eq!(keys, (0..256).collect::<Vec<u32>>(), "exhaustive sample covers all keys");

        // determinism in seed
        let mut rng_a = ChaCha8Rng::seed_from_u64(99);
        let mut rng_b = ChaCha8Rng::seed_from_u64(99);
        let small = RandomSampleParams { p: 8, s: 4 };
        let a = random_sample(&buf, &order, &boundaries, &small, BaseSortKind::Ref, &mut rng_a)
            .unwrap();
        let b = random_sample(&buf, &order, &boundaries, &small, BaseSortKind::Ref, &mut rng_b)
            .unwrap();
        assert_eq!(a, b);

        // oversized sample is a parameter error
        let too_big = RandomSampleParams { p: 300, s: 2 };
        assert!(random_sample(&buf, &order, &boundaries, &too_big, BaseSortKind::Ref, &mut rng_a)
            .is_err());
    }

    #[test]
    fn random_sample_inclusion_frequency_unbiased() {
        // n = 10^4, p = 8, s = 64: inclusion probability (p*s - 1)/n per key.
        // Binomial 3-sigma check over 1000 trials on a fixed panel of
        // positions (a per-key check over all 10^4 keys would statistically
        // fail by design: ~0.3% of keys land outside 3 sigma).
        let n = 10_000usize;
        let params = RandomSampleParams { p: 8, s: 64 };
        let m = params.sample_len();
        let trials = 1000usize;
        let buf = generate(&KeyGenSpec {
            n,
            key_len: 2,
            distribution: Distribution::UniformBytes,
            seed: 31,
        })
        .unwrap();
        let boundaries = split_boundaries(n, params.p);
        let order: Vec<u32> = (0..n as u32).collect();
        let mut counts = vec![0u32; n];
        let mut rng = ChaCha8Rng::seed_from_u64(4242);
        for _ in 0..trials {
            let t =
                random_sample(&buf, &order, &boundaries, &params, BaseSortKind::Qs, &mut rng)
                    .unwrap();
            for s in t {
                counts[s.key_index as usize] += 1;
            }
        }
        let pr = m as f64 / n as f64;
        let mean = trials as f64 * pr;
        let sigma = (trials as f64 * pr * (1.0 - pr)).sqrt();
        let panel = [0usize, 17, 999, 1234, 2500, 4999, 5000, 7777, 8888, 9999];
        for &i in &panel {
            let c = counts[i] as f64;
            assert!(
                (c - mean).abs() <= 3.0 * sigma,
                "position {i}: {c} outside 3 sigma of {mean:.1} +- {sigma:.1}"
            );
        }
        // aggregate sanity: total inclusions are exact
        let total: u64 = counts.iter().map(|&c| c as u64).sum();
        assert_eq!(total, (trials * m) as u64);
    }

    #[test]
    fn tagged_order_is_total_and_tags_unique() {
        let buf = byte_buf(&[3, 3, 3, 1, 1, 2]);
        let samples: Vec<TaggedSample> = (0..6u32)
            .map(|i| TaggedSample { key_index: i, seq: i / 3, idx: i % 3 })
            .collect();
        let mut sorted = samples.clone();
        sorted.sort_by(|a, b| cmp_tagged(&buf, a, b));
        // no two samples share (seq, idx)
        let mut tags: Vec<(u32, u32)> = samples.iter().map(|t| (t.seq, t.idx)).collect();
        tags.sort_unstable();
        tags.dedup();
        assert_eq!(tags.len(), samples.len());
        // strict total order after sorting
        for w in sorted.windows(2) {
            assert_eq!(cmp_tagged(&buf, &w[0], &w[1]), Ordering::Less);
        }
    }
}
