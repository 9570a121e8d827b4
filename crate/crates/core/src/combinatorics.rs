//! Exact evaluation of the permutation sums behind the cancellation of the
//! resonant terms.
//!
//! The main entry points rewrite the sums over `S_N` (resp. `S_M × Perm(K)`)
//! as sums over chains of subsets, which keeps the cost at `O(2^N · N)` exact
//! operations. The `_brute` variants enumerate permutations literally and are
//! kept as reference implementations.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// All distinct orderings of a multiset, in lexicographic order.
pub fn distinct_arrangements<T: Ord + Clone>(items: &[T]) -> Vec<Vec<T>> {
    let mut cur = items.to_vec();
    cur.sort();
    let mut out = vec![cur.clone()];
    while next_permutation(&mut cur) {
        out.push(cur.clone());
    }
    out
}

/// Advances to the next lexicographic permutation; false after the last one.
pub fn next_permutation<T: Ord>(v: &mut [T]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Ratio of `max(|x₁|, |x₁+x₂|, …, |x₁+⋯+x_n|)` to `max(|x₁|, …, |x_n|)`
/// with the explicit bracket `[1/(2n), n]` it always lies in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxEquiv {
    pub ratio: f64,
    pub lo: f64,
    pub hi: f64,
}

impl MaxEquiv {
    pub fn within_bounds(&self) -> bool {
        self.ratio >= self.lo && self.ratio <= self.hi
    }
}

pub fn max_equiv_ratio(x: &[f64]) -> Result<MaxEquiv> {
    if x.is_empty() {
        return Err(Error::InvalidParameter("list must be nonempty".into()));
    }
    let entries = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if entries == 0.0 {
        return Err(Error::InvalidParameter("list must not be all zero".into()));
    }
    let mut s = 0.0;
    let mut prefix = 0.0f64;
    for v in x {
        s += v;
        prefix = prefix.max(s.abs());
    }
    let n = x.len() as f64;
    Ok(MaxEquiv {
        ratio: prefix / entries,
        lo: 1.0 / (2.0 * n),
        hi: n,
    })
}

fn subset_sums(a: &[BigRational]) -> Vec<BigRational> {
    let n = a.len();
    let mut sums = vec![BigRational::zero(); 1 << n];
    for mask in 1usize..(1 << n) {
        let low = mask.trailing_zeros() as usize;
        sums[mask] = &sums[mask & (mask - 1)] + &a[low];
    }
    sums
}

/// `Σ_{σ∈S_N} 1{a_{σ(i)} ≠ 0, a_{σ(1)}+⋯+a_{σ(i)} ≠ 0, i ≤ N−1} / (a_{σ(1)}⋯a_{σ(N−1)})`.
///
/// Vanishes exactly whenever `a₁ + ⋯ + a_N = 0`.
pub fn zero_sum_identity(a: &[BigRational]) -> Result<BigRational> {
    let n = a.len();
    if n < 2 {
        return Err(Error::InvalidParameter("zero-sum identity needs N >= 2".into()));
    }
    if n > 20 {
        return Err(Error::InvalidParameter("zero-sum identity supports N <= 20".into()));
    }
    let sums = subset_sums(a);
    let full = (1usize << n) - 1;
    // dp[U]: sum over orderings of U that are admissible prefixes of 1/Π a
    let mut dp: Vec<Option<BigRational>> = vec![None; 1 << n];
    dp[0] = Some(BigRational::one());
    let mut total = BigRational::zero();
    for mask in 0..full {
        let Some(val) = dp[mask].take() else { continue };
        let size = mask.count_ones() as usize;
        for (j, aj) in a.iter().enumerate() {
            if mask & (1 << j) != 0 {
                continue;
            }
            let next = mask | (1 << j);
            if size + 1 == n {
                total += &val;
                continue;
            }
            if aj.is_zero() || sums[next].is_zero() {
                continue;
            }
            let contrib = &val / aj;
            match &mut dp[next] {
                Some(v) => *v += contrib,
                slot => *slot = Some(contrib),
            }
        }
    }
    Ok(total)
}

/// Literal `S_N` enumeration of [`zero_sum_identity`].
pub fn zero_sum_identity_brute(a: &[BigRational]) -> Result<BigRational> {
    let n = a.len();
    if n < 2 {
        return Err(Error::InvalidParameter("zero-sum identity needs N >= 2".into()));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let mut total = BigRational::zero();
    loop {
        let mut prod = BigRational::one();
        let mut s = BigRational::zero();
        let mut ok = true;
        for &i in &idx[..n - 1] {
            s += &a[i];
            if a[i].is_zero() || s.is_zero() {
                ok = false;
                break;
            }
            prod *= &a[i];
        }
        if ok {
            total += prod.recip();
        }
        if !next_permutation(&mut idx) {
            return Ok(total);
        }
    }
}

/// Multiset `K = {k₁^{n₁}, …}` given as a flat list of block sizes.
fn check_multiset(k: &[usize], m: usize) -> Result<()> {
    if k.is_empty() || k.contains(&0) {
        return Err(Error::InvalidParameter("multiset entries must be positive".into()));
    }
    let total: usize = k.iter().sum();
    if total != m {
        return Err(Error::LengthMismatch { expected: total, got: m });
    }
    if m > 20 {
        return Err(Error::InvalidParameter("multiset cancellation supports M <= 20".into()));
    }
    Ok(())
}

/// `Σ_{σ∈S_M} σ·[Σ_{π∈Perm(K)} 1{…} / (x_{π,1}(x_{π,1}+x_{π,2})⋯(x_{π,1}+⋯+x_{π,N−1}))]`
/// where `x_{π,i}` are consecutive block sums of `ξ` with block sizes `π`.
///
/// Vanishes exactly whenever `ξ₁ + ⋯ + ξ_M = 0` and `N ≥ 2`.
pub fn multiset_cancellation(k_multiset: &[usize], xi: &[BigRational]) -> Result<BigRational> {
    let m = xi.len();
    check_multiset(k_multiset, m)?;
    let sums = subset_sums(xi);
    let full = (1usize << m) - 1;

    // distinct block sizes and their multiplicities
    let mut kinds: Vec<(usize, usize)> = Vec::new();
    for &k in k_multiset {
        match kinds.iter_mut().find(|(v, _)| *v == k) {
            Some((_, c)) => *c += 1,
            None => kinds.push((k, 1)),
        }
    }
    kinds.sort();
    let n_blocks = k_multiset.len();

    // for a chain ∅ = U₀ ⊂ U₁ ⊂ ⋯ ⊂ U_N = [M], σ ranges over the Π k_i! ways
    // of ordering the elements inside each increment
    let mut block_perms = BigInt::one();
    for &k in k_multiset {
        for f in 2..=k {
            block_perms *= f;
        }
    }

    let mut subsets_of_size: Vec<Vec<usize>> = vec![Vec::new(); m + 1];
    for mask in 1..=full {
        subsets_of_size[mask.count_ones() as usize].push(mask);
    }

    // state: (U, how many blocks of each kind are used)
    let mut layer: HashMap<(usize, Vec<usize>), BigRational> = HashMap::new();
    layer.insert((0, vec![0; kinds.len()]), BigRational::one());
    for step in 0..n_blocks {
        let last = step + 1 == n_blocks;
        let mut next: HashMap<(usize, Vec<usize>), BigRational> = HashMap::new();
        for ((mask, used), val) in layer {
            let free = full & !mask;
            for (ki, &(k, count)) in kinds.iter().enumerate() {
                if used[ki] == count {
                    continue;
                }
                let mut used2 = used.clone();
                used2[ki] += 1;
                for &b in &subsets_of_size[k] {
                    if b & free != b {
                        continue;
                    }
                    let u = mask | b;
                    let contrib = if last {
                        val.clone()
                    } else {
                        if sums[b].is_zero() || sums[u].is_zero() {
                            continue;
                        }
                        &val / &sums[u]
                    };
                    *next.entry((u, used2.clone())).or_insert_with(BigRational::zero) += contrib;
                }
            }
        }
        layer = next;
    }
    let total: BigRational = layer.into_values().fold(BigRational::zero(), |a, b| a + b);
    Ok(total * BigRational::from_integer(block_perms))
}

/// Literal enumeration over `S_M × Perm(K)` of [`multiset_cancellation`].
pub fn multiset_cancellation_brute(k_multiset: &[usize], xi: &[BigRational]) -> Result<BigRational> {
    let m = xi.len();
    check_multiset(k_multiset, m)?;
    let arrangements = distinct_arrangements(k_multiset);
    let mut sigma: Vec<usize> = (0..m).collect();
    let mut total = BigRational::zero();
    loop {
        for pi in &arrangements {
            let n = pi.len();
            let mut pos = 0;
            let mut partial = BigRational::zero();
            let mut prod = BigRational::one();
            let mut ok = true;
            for &len in &pi[..n - 1] {
                let x: BigRational = sigma[pos..pos + len].iter().map(|&i| xi[i].clone()).sum();
                pos += len;
                partial += &x;
                if x.is_zero() || partial.is_zero() {
                    ok = false;
                    break;
                }
                prod *= &partial;
            }
            if ok {
                total += prod.recip();
            }
        }
        if !next_permutation(&mut sigma) {
            return Ok(total);
        }
    }
}

/// All multisets of positive integers summing to `m` (integer partitions),
/// each listed in non-increasing order.
pub fn partitions(m: usize) -> Vec<Vec<usize>> {
    fn go(rest: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest == 0 {
            out.push(cur.clone());
            return;
        }
        for k in (1..=rest.min(max)).rev() {
            cur.push(k);
            go(rest - k, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(m, m, &mut Vec::new(), &mut out);
    out
}

/// Outcome of one family of randomized checks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckTally {
    pub trials: usize,
    pub violations: usize,
    /// Up to ten offending inputs, as strings.
    pub examples: Vec<String>,
}

impl CheckTally {
    fn record(&mut self, ok: bool, input: impl FnOnce() -> String) {
        self.trials += 1;
        if !ok {
            self.violations += 1;
            if self.examples.len() < 10 {
                self.examples.push(input());
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LemmaCheckReport {
    pub seed: u64,
    pub zero_sum: CheckTally,
    pub multiset: CheckTally,
    pub max_equiv: CheckTally,
}

impl LemmaCheckReport {
    pub fn violations(&self) -> usize {
        self.zero_sum.violations + self.multiset.violations + self.max_equiv.violations
    }
}

fn fmt_vec<T: std::fmt::Display>(v: &[T]) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("({})", parts.join(" "))
}

/// Seeded randomized run of the three identities: `trials` zero-sum vectors
/// of rationals for every `2 ≤ N ≤ max_n`, `multiset_trials` zero-sum integer
/// vectors for every multiset with at least two parts and `2 ≤ M ≤ max_m`,
/// and `trials` real vectors for every length `1..=max_n` in the
/// max-equivalence bracket.
pub fn randomized_lemma_check(
    seed: u64,
    trials: usize,
    max_n: usize,
    max_m: usize,
    multiset_trials: usize,
) -> Result<LemmaCheckReport> {
    if max_n > 20 || max_m > 20 {
        return Err(Error::InvalidParameter("sizes above 20 are not supported".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let empty = CheckTally {
        trials: 0,
        violations: 0,
        examples: Vec::new(),
    };
    let mut report = LemmaCheckReport {
        seed,
        zero_sum: empty.clone(),
        multiset: empty.clone(),
        max_equiv: empty,
    };
    for n in 2..=max_n {
        for _ in 0..trials {
            let mut a: Vec<BigRational> = (0..n - 1)
                .map(|_| BigRational::new(BigInt::from(rng.gen_range(-30i64..=30)), BigInt::from(rng.gen_range(1i64..=6))))
                .collect();
            let s: BigRational = a.iter().sum();
            a.push(-s);
            let ok = zero_sum_identity(&a)?.is_zero();
            report.zero_sum.record(ok, || fmt_vec(&a));
        }
    }
    for m in 2..=max_m {
        for k in partitions(m).into_iter().filter(|k| k.len() >= 2) {
            for _ in 0..multiset_trials {
                let mut xi: Vec<BigRational> = (0..m - 1)
                    .map(|_| BigRational::from_integer(BigInt::from(rng.gen_range(-40i64..=40))))
                    .collect();
                let s: BigRational = xi.iter().sum();
                xi.push(-s);
                let ok = multiset_cancellation(&k, &xi)?.is_zero();
                report.multiset.record(ok, || format!("K={} xi={}", fmt_vec(&k), fmt_vec(&xi)));
            }
        }
    }
    for n in 1..=max_n.max(1) {
        for _ in 0..trials {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let ok = max_equiv_ratio(&x)?.within_bounds();
            report.max_equiv.record(ok, || fmt_vec(&x));
        }
    }
    Ok(report)
}
