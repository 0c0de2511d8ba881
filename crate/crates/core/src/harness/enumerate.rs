//! Colex enumeration of fixed-size subsets of `{0, .., n-1}` as `u64` masks,
//! sharded by rank so parallel sweeps merge in a fixed order.

use rayon::prelude::*;

/// Refuse exhaustive sweeps over more subsets than this.
pub const ENUMERATION_BUDGET: u128 = 10_000_000;

const SHARD: u128 = 4096;

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// The subset of rank `rank` among `k`-subsets in colex order.
pub fn colex_unrank(mut rank: u128, k: usize) -> u64 {
    let mut mask = 0u64;
    for i in (1..=k).rev() {
        let mut c = i - 1;
        while binomial(c + 1, i) <= rank {
            c += 1;
        }
        mask |= 1 << c;
        rank -= binomial(c, i);
    }
    mask
}

/// Next mask with the same popcount (Gosper's hack).
#[inline]
pub fn colex_next(m: u64) -> u64 {
    let c = m & m.wrapping_neg();
    let r = m.wrapping_add(c);
    (((r ^ m) >> 2) / c) | r
}

/// Runs `visit` on every `k`-subset of `{0, .., n-1}` and returns the results
/// in colex order. Shards run on the current rayon pool.
pub fn sweep<T, F>(n: usize, k: usize, visit: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync,
{
    assert!(n <= 63, "mask enumeration supports at most 63 elements");
    let total = binomial(n, k);
    if k == 0 {
        return vec![visit(0)];
    }
    let shards = total.div_ceil(SHARD);
    (0..shards as u64)
        .into_par_iter()
        .map(|s| {
            let start = s as u128 * SHARD;
            let end = (start + SHARD).min(total);
            let mut m = colex_unrank(start, k);
            let mut out = Vec::with_capacity((end - start) as usize);
            for r in start..end {
                out.push(visit(m));
                if r + 1 < end {
                    m = colex_next(m);
                }
            }
            out
        })
        .flatten()
        .collect()
}

pub fn mask_elems(mask: u64) -> impl Iterator<Item = usize> {
    (0..64).filter(move |&i| mask >> i & 1 == 1)
}
