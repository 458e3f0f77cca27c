//! Return patterns: prefix-constrained count vectors, their realization
//! lists through the priority order, and the equivalent stack simulation.

use crate::error::{Error, Result};

/// All forward patterns on an index set of size `r`: vectors a in N^r whose
/// prefix sums satisfy sum_{k<=l} a_k <= l*K.
pub fn enumerate_patterns(r: usize, k: usize) -> Result<Vec<Vec<u32>>> {
    if r > 12 || k > 6 {
        return Err(Error::BudgetExceeded(format!(
            "pattern enumeration capped at #J <= 12, K <= 6 (got {}, {})",
            r, k
        )));
    }
    let mut out = Vec::new();
    let mut acc: Vec<u32> = Vec::with_capacity(r);
    fn rec(out: &mut Vec<Vec<u32>>, acc: &mut Vec<u32>, r: usize, k: usize, used: u32) {
        if acc.len() == r {
            out.push(acc.clone());
            return;
        }
        let level = acc.len() as u32 + 1;
        let cap = level * k as u32 - used;
        for a in 0..=cap {
            acc.push(a);
            rec(out, acc, r, k, used + a);
            acc.pop();
        }
    }
    rec(&mut out, &mut acc, r, k, 0);
    Ok(out)
}

/// Count of forward patterns by dynamic programming over (level, total),
/// independent of the explicit enumeration.
pub fn count_patterns_recursive(r: usize, k: usize) -> u128 {
    let cap = r * k;
    let mut f = vec![0u128; cap + 1];
    f[0] = 1;
    for level in 1..=r {
        let mut g = vec![0u128; cap + 1];
        for s in 0..=(level - 1) * k {
            if f[s] == 0 {
                continue;
            }
            for a in 0..=(level * k - s) {
                g[s + a] += f[s];
            }
        }
        f = g;
    }
    f.iter().sum()
}

pub fn binomial(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    let mut num = 1u128;
    for i in 0..k {
        num = num * (n - i) as u128 / (i + 1) as u128;
    }
    num
}

/// Whether `a` is a forward pattern (prefix-constrained).
pub fn is_forward_pattern(a: &[u32], k: usize) -> bool {
    let mut sum = 0u64;
    for (l, &x) in a.iter().enumerate() {
        sum += x as u64;
        if sum > ((l + 1) * k) as u64 {
            return false;
        }
    }
    true
}

/// Whether `a` is a backward pattern: its reversal is forward.
pub fn is_backward_pattern(a: &[u32], k: usize) -> bool {
    let rev: Vec<u32> = a.iter().rev().copied().collect();
    is_forward_pattern(&rev, k)
}

/// Realization lists by the priority-order definition: at stage l the list
/// holds the first a_l elements of the unused index pairs, arranged in
/// decreasing (p, q) order.
pub fn lambda_lists(j_set: &[usize], k: usize, a: &[u32]) -> Result<Vec<Vec<(usize, usize)>>> {
    if j_set.len() != a.len() {
        return Err(Error::InvalidParameter(
            "pattern length must match index-set size".into(),
        ));
    }
    if !is_forward_pattern(a, k) {
        return Err(Error::InvalidParameter("not a forward pattern".into()));
    }
    let mut used: Vec<(usize, usize)> = Vec::new();
    let mut out = Vec::with_capacity(a.len());
    for (l, &al) in a.iter().enumerate() {
        let mut unused: Vec<(usize, usize)> = Vec::new();
        for &p in &j_set[..=l] {
            for q in 1..=k {
                if !used.contains(&(p, q)) {
                    unused.push((p, q));
                }
            }
        }
        unused.sort_by(|x, y| y.cmp(x));
        let take: Vec<(usize, usize)> = unused.into_iter().take(al as usize).collect();
        debug_assert_eq!(take.len(), al as usize);
        used.extend(take.iter().copied());
        out.push(take);
    }
    Ok(out)
}

/// The urgent-file stack: on day j_l a batch (j_l, 1)..(j_l, K) is placed on
/// top (largest q uppermost) and a_l files are processed from the top. The
/// processed lists coincide with the priority-order realization lists.
pub fn stack_simulation(j_set: &[usize], k: usize, a: &[u32]) -> Result<Vec<Vec<(usize, usize)>>> {
    if j_set.len() != a.len() {
        return Err(Error::InvalidParameter(
            "pattern length must match index-set size".into(),
        ));
    }
    let mut stack: Vec<(usize, usize)> = Vec::new();
    let mut out = Vec::with_capacity(a.len());
    for (l, &al) in a.iter().enumerate() {
        for q in 1..=k {
            stack.push((j_set[l], q));
        }
        let mut day = Vec::with_capacity(al as usize);
        for _ in 0..al {
            let file = stack
                .pop()
                .ok_or_else(|| Error::InvalidParameter("pattern pops an empty stack".into()))?;
            day.push(file);
        }
        out.push(day);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_counts() {
        // r = 1, K = 2: a_1 in {0, 1, 2}.
        assert_eq!(enumerate_patterns(1, 2).unwrap().len(), 3);
        assert_eq!(count_patterns_recursive(1, 2), 3);
        // r = 2, K = 1: five patterns, below binom(4, 2) = 6.
        let pats = enumerate_patterns(2, 1).unwrap();
        assert_eq!(pats.len(), 5);
        let expect: Vec<Vec<u32>> =
            vec![vec![0, 0], vec![0, 1], vec![0, 2], vec![1, 0], vec![1, 1]];
        let mut got = pats.clone();
        got.sort();
        assert_eq!(got, expect);
        assert_eq!(count_patterns_recursive(2, 1), 5);
        assert_eq!(binomial(4, 2), 6);
    }

    #[test]
    fn counts_match_and_respect_binomial_bound() {
        for r in 1..=6 {
            for k in 1..=4 {
                let n = enumerate_patterns(r, k).unwrap().len() as u128;
                assert_eq!(n, count_patterns_recursive(r, k), "r={} k={}", r, k);
                assert!(n <= binomial((k * r + r) as u64, r as u64));
            }
        }
        assert!(enumerate_patterns(13, 1).is_err());
    }

    #[test]
    fn lambda_list_example() {
        // m = 2, K = 2, J = {1,2}, a = (1,2).
        let lists = lambda_lists(&[1, 2], 2, &[1, 2]).unwrap();
        assert_eq!(lists[0], vec![(1, 2)]);
        assert_eq!(lists[1], vec![(2, 2), (2, 1)]);
    }

    #[test]
    fn stack_matches_priority_lists_exhaustively() {
        // All patterns with #J <= 6, K <= 3; the lists depend on J only
        // through its order, checked with both canonical and scattered sets.
        for r in 1..=6usize {
            for k in 1..=3usize {
                let canonical: Vec<usize> = (1..=r).collect();
                let scattered: Vec<usize> = (0..r).map(|i| 3 * i + 2).collect();
                for a in enumerate_patterns(r, k).unwrap() {
                    for j_set in [&canonical, &scattered] {
                        let by_def = lambda_lists(j_set, k, &a).unwrap();
                        let by_stack = stack_simulation(j_set, k, &a).unwrap();
                        assert_eq!(by_def, by_stack, "J={:?} K={} a={:?}", j_set, k, a);
                    }
                }
            }
        }
    }
}
