//! Pluggable base sorts and the p-way merge used by the merging phase.
//!
//! Base sorts work in place on any slice with a caller-supplied comparator;
//! the pipeline applies them to index slices over a [`crate::keys::KeyBuffer`].
//! The merge engine is a tournament (winner) tree over the run heads, with
//! ties broken by ascending run id so that merging contiguous input blocks
//! after a stable base sort stays stable end to end.

use std::cmp::Ordering;

use crate::{Error, Result};

/// The "SomeSort" plugged into the baseline-sorting phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BaseSortKind {
    /// Standard library comparison sort (unstable).
    Qs,
    /// Bottom-up heapsort.
    Hs,
    /// Recursive quicksort: median-of-three, insertion cutoff 16,
    /// heapsort fallback at depth 2 lg n.
    Rq,
    /// Trusted reference sort; the only stable kind.
    Ref,
}

impl BaseSortKind {
    pub fn is_stable(self) -> bool {
        matches!(self, BaseSortKind::Ref)
    }

    pub const ALL: [BaseSortKind; 4] =
        [BaseSortKind::Qs, BaseSortKind::Hs, BaseSortKind::Rq, BaseSortKind::Ref];
}

impl std::fmt::Display for BaseSortKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            BaseSortKind::Qs => "qs",
            BaseSortKind::Hs => "hs",
            BaseSortKind::Rq => "rq",
            BaseSortKind::Ref => "ref",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for BaseSortKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qs" => Ok(BaseSortKind::Qs),
            "hs" => Ok(BaseSortKind::Hs),
            "rq" => Ok(BaseSortKind::Rq),
            "ref" => Ok(BaseSortKind::Ref),
            other => Err(Error::InvalidParameter(format!("unknown base sort '{other}'"))),
        }
    }
}

/// Sorts `v` in place with the chosen kind. Empty slices are a no-op.
pub fn base_sort<T, F>(kind: BaseSortKind, v: &mut [T], mut cmp: F)
where
    F: FnMut(&T, &T) -> Ordering,
{
    match kind {
        BaseSortKind::Qs => v.sort_unstable_by(|a, b| cmp(a, b)),
        BaseSortKind::Hs => heapsort_impl(v, &mut cmp),
        BaseSortKind::Rq => quicksort_impl(v, &mut cmp),
        BaseSortKind::Ref => v.sort_by(|a, b| cmp(a, b)),
    }
}

/// Bottom-up heapsort: sift-down walks the max-child path to a leaf with one
/// comparison per level, then climbs back to the insertion point.
pub fn heapsort<T, F>(v: &mut [T], mut cmp: F)
where
    F: FnMut(&T, &T) -> Ordering,
{
    heapsort_impl(v, &mut cmp);
}

fn heapsort_impl<T, F>(v: &mut [T], cmp: &mut F)
where
    F: FnMut(&T, &T) -> Ordering,
{
    let n = v.len();
    if n < 2 {
        return;
    }
    for root in (0..n / 2).rev() {
        sift_down(v, root, n, cmp);
    }
    for end in (1..n).rev() {
        v.swap(0, end);
        sift_down(v, 0, end, cmp);
    }
}

fn sift_down<T, F>(v: &mut [T], root: usize, end: usize, cmp: &mut F)
where
    F: FnMut(&T, &T) -> Ordering,
{
    // Descend along the larger-child path to a leaf.
    let mut j = root;
    loop {
        let c = 2 * j + 1;
        if c + 1 < end {
            j = if cmp(&v[c], &v[c + 1]) == Ordering::Less { c + 1 } else { c };
        } else if c < end {
            j = c;
        } else {
            break;
        }
    }
    // Climb until the path value is >= the displaced root.
    while cmp(&v[root], &v[j]) == Ordering::Greater {
        j = (j - 1) / 2;
    }
    // Rotate the root value down to j by swapping up the path.
    while j > root {
        v.swap(root, j);
        j = (j - 1) / 2;
    }
}

/// Recursive quicksort with a depth guard (introsort-style).
pub fn quicksort<T, F>(v: &mut [T], mut cmp: F)
where
    F: FnMut(&T, &T) -> Ordering,
{
    quicksort_impl(v, &mut cmp);
}

const INSERTION_CUTOFF: usize = 16;

fn quicksort_impl<T, F>(v: &mut [T], cmp: &mut F)
where
    F: FnMut(&T, &T) -> Ordering,
{
    let n = v.len();
    if n < 2 {
        return;
    }
    let depth_limit = 2 * (usize::BITS - n.leading_zeros()) as usize;
    quicksort_rec(v, cmp, depth_limit);
}

fn quicksort_rec<T, F>(mut v: &mut [T], cmp: &mut F, mut depth: usize)
where
    F: FnMut(&T, &T) -> Ordering,
{
    loop {
        if v.len() <= INSERTION_CUTOFF {
            insertion_sort(v, cmp);
            return;
        }
        if depth == 0 {
            heapsort_impl(v, cmp);
            return;
        }
        depth -= 1;
        let mid = hoare_partition(v, cmp);
        let (lo, rest) = v.split_at_mut(mid);
        let hi = &mut rest[1..];
        // Recurse on the smaller side, iterate on the larger.
        if lo.len() < hi.len() {
            quicksort_rec(lo, cmp, depth);
            v = hi;
        } else {
            quicksort_rec(hi, cmp, depth);
            v = lo;
        }
    }
}

fn insertion_sort<T, F>(v: &mut [T], cmp: &mut F)
where
    F: FnMut(&T, &T) -> Ordering,
{
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && cmp(&v[j - 1], &v[j]) == Ordering::Greater {
            v.swap(j - 1, j);
            j -= 1;
        }
    }
}

/// Median-of-three Hoare partition; pivot ends at the returned index.
/// Scans stop on keys equal to the pivot so duplicate-heavy inputs split
/// near the middle.
fn hoare_partition<T, F>(v: &mut [T], cmp: &mut F) -> usize
where
    F: FnMut(&T, &T) -> Ordering,
{
    let len = v.len();
    let mid = len / 2;
    if cmp(&v[mid], &v[0]) == Ordering::Less {
        v.swap(mid, 0);
    }
    if cmp(&v[len - 1], &v[0]) == Ordering::Less {
        v.swap(len - 1, 0);
    }
    if cmp(&v[len - 1], &v[mid]) == Ordering::Less {
        v.swap(len - 1, mid);
    }
    v.swap(0, mid); // median of three is now the pivot at v[0]

    let mut i = 0;
    let mut j = len;
    loop {
        loop {
            i += 1;
            if i >= len || cmp(&v[i], &v[0]) != Ordering::Less {
                break;
            }
        }
        loop {
            j -= 1;
            if j == 0 || cmp(&v[j], &v[0]) != Ordering::Greater {
                break;
            }
        }
        if i >= j {
            break;
        }
        v.swap(i, j);
    }
    v.swap(0, j);
    j
}

/// Merges sorted `runs` into `out`, which must hold exactly the total
/// number of merged elements. Ties go to the lowest run id, and within a
/// run elements are consumed in order, so the merge is stable with respect
/// to (run id, in-run position).
///
/// Uses a tournament tree over the run heads; at most `n * ceil(lg p) + p`
/// element comparisons for `p` runs totaling `n` elements. Two runs use a
/// plain two-pointer merge.
pub fn multiway_merge<T, F>(runs: &[&[T]], out: &mut [T], mut cmp: F) -> Result<()>
where
    T: Copy,
    F: FnMut(&T, &T) -> Ordering,
{
    let total: usize = runs.iter().map(|r| r.len()).sum();
    if out.len() != total {
        return Err(Error::Capacity(format!(
            "merge output holds {} elements, runs total {}",
            out.len(),
            total
        )));
    }
    match runs.len() {
        0 => Ok(()),
        1 => {
            out.copy_from_slice(runs[0]);
            Ok(())
        }
        2 => {
            merge_two(runs[0], runs[1], out, &mut cmp);
            Ok(())
        }
        _ => {
            tournament_merge(runs, out, &mut cmp);
            Ok(())
        }
    }
}

fn merge_two<T, F>(a: &[T], b: &[T], out: &mut [T], cmp: &mut F)
where
    T: Copy,
    F: FnMut(&T, &T) -> Ordering,
{
    let (mut i, mut j) = (0, 0);
    for slot in out.iter_mut() {
        if i < a.len() && (j >= b.len() || cmp(&a[i], &b[j]) != Ordering::Greater) {
            *slot = a[i];
            i += 1;
        } else {
            *slot = b[j];
            j += 1;
        }
    }
}

const EXHAUSTED: usize = usize::MAX;

fn tournament_merge<T, F>(runs: &[&[T]], out: &mut [T], cmp: &mut F)
where
    T: Copy,
    F: FnMut(&T, &T) -> Ordering,
{
    let k = runs.len();
    let width = k.next_power_of_two();
    let mut heads = vec![0usize; k];
    // tree[width + i] is the leaf for run i; tree[1] the overall winner.
    let mut tree = vec![EXHAUSTED; 2 * width];
    for (i, run) in runs.iter().enumerate() {
        if !run.is_empty() {
            tree[width + i] = i;
        }
    }
    // Left children hold smaller run ids, so preferring the left slot on
    // Equal yields the lowest-id minimum overall.
    let winner = |ta: usize, tb: usize, heads: &[usize], cmp: &mut F| -> usize {
        match (ta, tb) {
            (EXHAUSTED, _) => tb,
            (_, EXHAUSTED) => ta,
            (a, b) => {
                if cmp(&runs[a][heads[a]], &runs[b][heads[b]]) == Ordering::Greater {
                    b
                } else {
                    a
                }
            }
        }
    };
    for node in (1..width).rev() {
        tree[node] = winner(tree[2 * node], tree[2 * node + 1], &heads, cmp);
    }
    for slot in out.iter_mut() {
        let w = tree[1];
        debug_assert_ne!(w, EXHAUSTED);
        *slot = runs[w][heads[w]];
        heads[w] += 1;
        if heads[w] == runs[w].len() {
            tree[width + w] = EXHAUSTED;
        }
        let mut node = (width + w) / 2;
        while node >= 1 {
            tree[node] = winner(tree[2 * node], tree[2 * node + 1], &heads, cmp);
            node /= 2;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::cell::Cell;

    fn random_keys(n: usize, seed: u64, span: u32) -> Vec<u32> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(0..span)).collect()
    }

    #[test]
    fn empty_and_sorted_are_noops() {
        for kind in BaseSortKind::ALL {
            let mut empty: Vec<u32> = vec![];
            base_sort(kind, &mut empty, u32::cmp);
            assert!(empty.is_empty());

            let mut sorted: Vec<u32> = (0..100).collect();
            base_sort(kind, &mut sorted, u32::cmp);
            assert_eq!(sorted, (0..100).collect::<Vec<_>>());
        }
    }

    #[test]
    fn all_kinds_match_reference_on_random_input() {
        for kind in BaseSortKind::ALL {
            let mut v = random_keys(10_000, 42, 1 << 20);
            let mut expect = v.clone();
            expect.sort();
            base_sort(kind, &mut v, u32::cmp);
            assert_eq!(v, expect, "kind {kind}");
        }
    }

    #[test]
    fn all_kinds_handle_adversarial_shapes() {
        let shapes: Vec<Vec<u32>> = vec![
            (0..5000).rev().collect(),
            vec![7; 5000],
            random_keys(5000, 1, 4), // duplicate-heavy
            (0..5000).collect(),
        ];
        for kind in BaseSortKind::ALL {
            for shape in &shapes {
                let mut v = shape.clone();
                let mut expect = shape.clone();
                expect.sort();
                base_sort(kind, &mut v, u32::cmp);
                assert_eq!(v, expect);
            }
        }
    }

    #[test]
    fn ref_kind_is_stable() {
        // (key, payload) compared on key only; payloads must keep input order.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut v: Vec<(u32, u32)> =
            (0..10_000).map(|i| (rng.gen_range(0..8), i)).collect();
        base_sort(BaseSortKind::Ref, &mut v, |a, b| a.0.cmp(&b.0));
        for w in v.windows(2) {
            if w[0].0 == w[1].0 {
                assert!(w[0].1 < w[1].1);
            }
        }
    }

    #[test]
    fn merge_single_run_is_identity() {
        let run = [1u32, 2, 5, 9];
        let mut out = [0u32; 4];
        multiway_merge(&[&run], &mut out, u32::cmp).unwrap();
        assert_eq!(out, run);
    }

    #[test]
    fn merge_two_runs() {
        let mut out = [0u32; 4];
        multiway_merge(&[&[1u32, 3], &[2u32, 4]], &mut out, u32::cmp).unwrap();
        assert_eq!(out, [1, 2, 3, 4]);
    }

    #[test]
    fn merge_rejects_wrong_output_size() {
        let mut out = [0u32; 3];
        let err = multiway_merge(&[&[1u32, 3], &[2u32, 4]], &mut out, u32::cmp);
        assert!(matches!(err, Err(Error::Capacity(_))));
    }

    #[test]
    fn merge_64_runs_matches_sort_oracle() {
        // Oracle: sort the concatenation with the std stable sort.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut runs: Vec<Vec<u32>> = Vec::new();
        let mut total = 0;
        for _ in 0..64 {
            let len = rng.gen_range(0..3200);
            total += len;
            let mut run: Vec<u32> = (0..len).map(|_| rng.gen_range(0..1 << 16)).collect();
            run.sort();
            runs.push(run);
        }
        let views: Vec<&[u32]> = runs.iter().map(|r| r.as_slice()).collect();
        let mut out = vec![0u32; total];
        multiway_merge(&views, &mut out, u32::cmp).unwrap();
        let mut expect: Vec<u32> = runs.concat();
        expect.sort();
        assert_eq!(out, expect);
    }

    #[test]
    fn merge_ties_go_to_lowest_run_id() {
        // Elements are (key, run-id); comparator sees only the key.
        let a = [(5u32, 0u32), (5, 0)];
        let b = [(5u32, 1u32)];
        let c = [(4u32, 2u32), (5, 2)];
        let mut out = [(0u32, 0u32); 5];
        multiway_merge(&[&a, &b, &c], &mut out, |x, y| x.0.cmp(&y.0)).unwrap();
        assert_eq!(out, [(4, 2), (5, 0), (5, 0), (5, 1), (5, 2)]);
    }

    #[test]
    fn merge_comparison_count_within_tournament_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for p in [3usize, 5, 8, 17, 64] {
            let mut runs: Vec<Vec<u32>> = Vec::new();
            let mut total = 0;
            for _ in 0..p {
                let len = rng.gen_range(1..400);
                total += len;
                let mut run: Vec<u32> = (0..len).map(|_| rng.gen()).collect();
                run.sort();
                runs.push(run);
            }
            let views: Vec<&[u32]> = runs.iter().map(|r| r.as_slice()).collect();
            let mut out = vec![0u32; total];
            let count = Cell::new(0u64);
            multiway_merge(&views, &mut out, |a, b| {
                count.set(count.get() + 1);
                a.cmp(b)
            })
            .unwrap();
            let lg_p = usize::BITS as u64 - (p as u64 - 1).leading_zeros() as u64;
            let bound = total as u64 * lg_p + 2 * p as u64;
            assert!(
                count.get() <= bound,
                "p={p} n={total}: {} comparisons > bound {bound}",
                count.get()
            );
        }
    }

    proptest! {
        #[test]
        fn base_sorts_produce_sorted_permutation(v in prop::collection::vec(0u32..64, 0..400)) {
            let mut expect = v.clone();
            expect.sort();
            for kind in BaseSortKind::ALL {
                let mut w = v.clone();
                base_sort(kind, &mut w, u32::cmp);
                prop_assert_eq!(&w, &expect);
            }
        }

        #[test]
        fn merge_equals_sorted_concat(chunks in prop::collection::vec(prop::collection::vec(0u32..100, 0..50), 0..12)) {
            let runs: Vec<Vec<u32>> = chunks.into_iter().map(|mut c| { c.sort(); c }).collect();
            let views: Vec<&[u32]> = runs.iter().map(|r| r.as_slice()).collect();
            let total: usize = runs.iter().map(|r| r.len()).sum();
            let mut out = vec![0u32; total];
            multiway_merge(&views, &mut out, u32::cmp).unwrap();
            let mut expect: Vec<u32> = runs.concat();
            expect.sort();
            prop_assert_eq!(out, expect);
        }
    }
}
