//! Brute-force scans of the resonance and symbol bounds over frequency boxes.
//!
//! Each scan evaluates one ratio (quantity divided by its claimed size) over
//! every tuple with entries in `[−range, range] \ {0}` and reports its
//! extremes. Permutation-invariant ratios are scanned over multisets only.

use std::fmt::Write as _;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multipliers::{r1_symmetrized_symbol, SymbolEval};
use crate::resonance::{big_omega_slice, classify_slice, FreqTuple, PartitionConstants, RegionLabel};
use crate::spectral::DispersionSymbol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Lemma {
    /// `|Ω₂| / (|ξ₁*|^α min(|ξ₁+ξ₂|, |ξ₂*|))`.
    L2_1,
    /// `|Ω₃| / (max^{α−1} · med · min)` of the pairwise sums.
    L2_2,
    /// `|Ω_n|` over the lower bound of the assigned `N` or `D²` region.
    L2_3,
    /// `|μ_{k₀…k_n}| · |ξ|^{n(α−1)}`.
    L5_1,
    /// `|1_{R²₃} μ_{2,2}| · |ξ₁*|^α`.
    L5_2,
    /// `|m| · |ξ₁*|^{α−1}` for the symmetric `R¹` symbol with `K = {2,2}`.
    L5_3,
}

impl Lemma {
    pub fn name(self) -> &'static str {
        match self {
            Lemma::L2_1 => "L2_1",
            Lemma::L2_2 => "L2_2",
            Lemma::L2_3 => "L2_3",
            Lemma::L5_1 => "L5_1",
            Lemma::L5_2 => "L5_2",
            Lemma::L5_3 => "L5_3",
        }
    }

    pub fn default_arity(self) -> usize {
        match self {
            Lemma::L2_1 => 2,
            Lemma::L2_3 => 4,
            _ => 3,
        }
    }
}

impl FromStr for Lemma {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "L2_1" => Lemma::L2_1,
            "L2_2" => Lemma::L2_2,
            "L2_3" => Lemma::L2_3,
            "L5_1" => Lemma::L5_1,
            "L5_2" => Lemma::L5_2,
            "L5_3" => Lemma::L5_3,
            other => return Err(Error::InvalidParameter(format!("unknown lemma {other}"))),
        })
    }
}

/// What to scan. `k_list` is only used by `L5_1` (default `(2, 2)`), whose
/// arity is then `ν_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRequest {
    pub lemma: Lemma,
    pub range: i64,
    #[serde(default)]
    pub arity: Option<usize>,
    #[serde(default)]
    pub k_list: Option<Vec<usize>>,
}

impl ScanRequest {
    pub fn new(lemma: Lemma, range: i64) -> Self {
        ScanRequest {
            lemma,
            range,
            arity: None,
            k_list: None,
        }
    }

    pub fn with_arity(mut self, arity: usize) -> Self {
        self.arity = Some(arity);
        self
    }

    pub fn with_k_list(mut self, k: Vec<usize>) -> Self {
        self.k_list = Some(k);
        self
    }

    fn k_list(&self) -> Vec<usize> {
        self.k_list.clone().unwrap_or_else(|| vec![2, 2])
    }

    fn resolved_arity(&self) -> usize {
        match self.lemma {
            Lemma::L5_1 => crate::multipliers::nu(&self.k_list()),
            Lemma::L2_3 => self.arity.unwrap_or(4),
            l => l.default_arity(),
        }
    }
}

/// Extremes of a scanned ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub lemma: Lemma,
    pub range: i64,
    pub arity: usize,
    pub alpha: f64,
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub argmin_tuple: Vec<i64>,
    pub argmax_tuple: Vec<i64>,
    /// Tuples where the claimed bound fails (see [`bound_scan`]).
    pub violations: u64,
    /// Number of tuples that entered the ratio.
    pub tuples: u64,
    /// Up to 20 violating tuples.
    pub violating_tuples: Vec<Vec<i64>>,
}

impl ScanReport {
    pub const CSV_HEADER: &'static str = "lemma,range,alpha,ratio_min,ratio_max,argmin_tuple,argmax_tuple,violations";

    pub fn csv_row(&self) -> String {
        let fmt_t = |t: &[i64]| {
            let mut s = String::from("(");
            for (i, x) in t.iter().enumerate() {
                if i > 0 {
                    s.push(' ');
                }
                let _ = write!(s, "{x}");
            }
            s.push(')');
            s
        };
        format!(
            "{},{},{},{:e},{:e},{},{},{}",
            self.lemma.name(),
            self.range,
            self.alpha,
            self.ratio_min,
            self.ratio_max,
            fmt_t(&self.argmin_tuple),
            fmt_t(&self.argmax_tuple),
            self.violations
        )
    }

    pub fn to_csv(reports: &[ScanReport]) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in reports {
            out.push_str(&r.csv_row());
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone)]
struct Acc {
    min: f64,
    max: f64,
    argmin: Vec<i64>,
    argmax: Vec<i64>,
    violations: u64,
    tuples: u64,
    bad: Vec<Vec<i64>>,
}

impl Acc {
    fn new() -> Self {
        Acc {
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            argmin: Vec::new(),
            argmax: Vec::new(),
            violations: 0,
            tuples: 0,
            bad: Vec::new(),
        }
    }

    fn push(&mut self, xs: &[i64], r: f64, violated: bool) {
        self.tuples += 1;
        // ties keep the lexicographically first tuple so reports are deterministic
        if r < self.min || (r == self.min && xs < self.argmin.as_slice()) {
            self.min = r;
            self.argmin = xs.to_vec();
        }
        if r > self.max || (r == self.max && xs < self.argmax.as_slice()) {
            self.max = r;
            self.argmax = xs.to_vec();
        }
        if violated {
            self.violations += 1;
            if self.bad.len() < 20 {
                self.bad.push(xs.to_vec());
            }
        }
    }

    fn merge(mut self, o: Acc) -> Acc {
        if o.min < self.min || (o.min == self.min && o.argmin < self.argmin) {
            self.min = o.min;
            self.argmin = o.argmin;
        }
        if o.max > self.max || (o.max == self.max && o.argmax < self.argmax) {
            self.max = o.max;
            self.argmax = o.argmax;
        }
        self.violations += o.violations;
        self.tuples += o.tuples;
        for b in o.bad {
            if self.bad.len() < 20 {
                self.bad.push(b);
            }
        }
        self
    }
}

fn values(range: i64) -> Vec<i64> {
    (-range..=range).filter(|&x| x != 0).collect()
}

/// Calls `f` on every non-decreasing `n`-tuple over `vals` whose first entry is
/// `vals[first]`.
fn for_each_multiset_from(vals: &[i64], n: usize, first: usize, f: &mut dyn FnMut(&[i64])) {
    let mut idx = vec![first; n];
    let mut buf = vec![0i64; n];
    let last = vals.len() - 1;
    loop {
        for (b, &i) in buf.iter_mut().zip(idx.iter()) {
            *b = vals[i];
        }
        f(&buf);
        // advance positions 1..n, keeping non-decreasing order
        let mut p = n;
        loop {
            if p <= 1 {
                return;
            }
            p -= 1;
            if idx[p] < last {
                idx[p] += 1;
                for q in p + 1..n {
                    idx[q] = idx[p];
                }
                break;
            }
        }
    }
}

fn for_each_ordered_from(vals: &[i64], n: usize, first: usize, f: &mut dyn FnMut(&[i64])) {
    let mut idx = vec![0usize; n];
    idx[0] = first;
    let mut buf = vec![0i64; n];
    let last = vals.len() - 1;
    loop {
        for (b, &i) in buf.iter_mut().zip(idx.iter()) {
            *b = vals[i];
        }
        f(&buf);
        let mut p = n;
        loop {
            if p <= 1 {
                return;
            }
            p -= 1;
            if idx[p] < last {
                idx[p] += 1;
                for q in idx.iter_mut().skip(p + 1) {
                    *q = 0;
                }
                break;
            }
        }
    }
}

fn scan_parallel<F>(range: i64, n: usize, ordered: bool, eval: F) -> Acc
where
    F: Fn(&[i64], &mut Acc) + Sync,
{
    let vals = values(range);
    if n == 1 {
        let mut acc = Acc::new();
        for &v in &vals {
            eval(&[v], &mut acc);
        }
        return acc;
    }
    (0..vals.len())
        .into_par_iter()
        .map(|first| {
            let mut acc = Acc::new();
            let mut f = |xs: &[i64]| eval(xs, &mut acc);
            if ordered {
                for_each_ordered_from(&vals, n, first, &mut f);
            } else {
                for_each_multiset_from(&vals, n, first, &mut f);
            }
            acc
        })
        .reduce(Acc::new, Acc::merge)
}

fn l2_1_ratio(xs: &[i64], sym: &DispersionSymbol) -> Option<f64> {
    let (a, b) = (xs[0], xs[1]);
    let s = a + b;
    if s == 0 {
        return None;
    }
    let top = a.unsigned_abs().max(b.unsigned_abs()) as f64;
    let low = a.unsigned_abs().min(b.unsigned_abs());
    let denom = top.powf(sym.alpha()) * s.unsigned_abs().min(low) as f64;
    Some(big_omega_slice(xs, sym).abs() / denom)
}

fn l2_2_ratio(xs: &[i64], sym: &DispersionSymbol) -> Option<f64> {
    let mut p = [
        (xs[0] + xs[1]).unsigned_abs(),
        (xs[1] + xs[2]).unsigned_abs(),
        (xs[0] + xs[2]).unsigned_abs(),
    ];
    p.sort_unstable();
    if p[0] == 0 {
        return None;
    }
    let denom = (p[2] as f64).powf(sym.alpha() - 1.0) * p[1] as f64 * p[0] as f64;
    Some(big_omega_slice(xs, sym).abs() / denom)
}

/// Runs one scan.
///
/// Violations: for `L2_1`/`L2_2`, tuples where the ratio is not positive; for
/// `L2_3`, tuples assigned to `N` or `D²` whose lower bound fails with the
/// given constants, i.e. tuples for which none of the cases of the higher-order
/// resonance dichotomy holds; for the symbol lemmas, non-finite values.
pub fn bound_scan(req: &ScanRequest, sym: &DispersionSymbol, c: &PartitionConstants) -> Result<ScanReport> {
    sym.validate()?;
    c.validate()?;
    if req.range < 1 {
        return Err(Error::InvalidParameter("scan range must be positive".into()));
    }
    let n = req.resolved_arity();
    if req.lemma == Lemma::L2_3 && n < 4 {
        return Err(Error::InvalidParameter("L2_3 scans need arity >= 4".into()));
    }
    let alpha = sym.alpha();
    let acc = match req.lemma {
        Lemma::L2_1 => scan_parallel(req.range, 2, false, |xs, acc| {
            if let Some(r) = l2_1_ratio(xs, sym) {
                acc.push(xs, r, r <= 0.0);
            }
        }),
        Lemma::L2_2 => scan_parallel(req.range, 3, false, |xs, acc| {
            if let Some(r) = l2_2_ratio(xs, sym) {
                acc.push(xs, r, r <= 0.0);
            }
        }),
        Lemma::L2_3 => scan_parallel(req.range, n, false, |xs, acc| {
            let cl = classify_slice(xs, sym, c);
            if let Some(r) = cl.bound_ratio {
                acc.push(xs, r, !cl.bound_holds);
            }
        }),
        Lemma::L5_1 => {
            let k = req.k_list();
            if k.is_empty() || k.contains(&0) {
                return Err(Error::InvalidParameter("k_list entries must be positive".into()));
            }
            let level = (k.len() - 1) as f64;
            let ev = SymbolEval::new(sym, c);
            scan_parallel(req.range, n, true, |xs, acc| {
                let xi: i64 = xs.iter().sum();
                if xi == 0 {
                    return;
                }
                let mu: Complex64 = ev.mu_total(&k, xs);
                let r = mu.norm() * (xi.unsigned_abs() as f64).powf(level * (alpha - 1.0));
                acc.push(xs, r, !r.is_finite());
            })
        }
        Lemma::L5_2 => {
            let ev = SymbolEval::new(sym, c);
            scan_parallel(req.range, 3, true, |xs, acc| {
                if classify_slice(xs, sym, c).label != RegionLabel::R2 {
                    return;
                }
                let mu: Complex64 = ev.mu_total(&[2, 2], xs);
                let top = xs.iter().map(|x| x.unsigned_abs()).max().unwrap() as f64;
                let r = mu.norm() * top.powf(alpha);
                acc.push(xs, r, !r.is_finite());
            })
        }
        Lemma::L5_3 => scan_parallel(req.range, 3, false, |xs, acc| {
            if classify_slice(xs, sym, c).label != RegionLabel::R1 {
                return;
            }
            let t = FreqTuple::new(xs.to_vec()).expect("scan tuples are nonzero");
            let m = r1_symmetrized_symbol(&[2, 2], &t, sym, c).expect("arity checked");
            let top = xs.iter().map(|x| x.unsigned_abs()).max().unwrap() as f64;
            let r = m.norm() * top.powf(alpha - 1.0);
            acc.push(xs, r, !r.is_finite());
        }),
    };
    if acc.tuples == 0 {
        return Err(Error::InvalidParameter("scan box contains no admissible tuples".into()));
    }
    Ok(ScanReport {
        lemma: req.lemma,
        range: req.range,
        arity: n,
        alpha,
        ratio_min: acc.min,
        ratio_max: acc.max,
        argmin_tuple: acc.argmin,
        argmax_tuple: acc.argmax,
        violations: acc.violations,
        tuples: acc.tuples,
        violating_tuples: acc.bad,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count_multisets(range: i64, n: usize) -> u64 {
        let mut c = 0;
        let vals = values(range);
        for first in 0..vals.len() {
            for_each_multiset_from(&vals, n, first, &mut |_| c += 1);
        }
        c
    }

    #[test]
    fn multiset_enumeration_counts() {
        // C(2R + n − 1, n) multisets of size n from 2R values
        assert_eq!(count_multisets(3, 2), 21);
        assert_eq!(count_multisets(3, 3), 56);
        assert_eq!(count_multisets(2, 4), 35);
    }

    #[test]
    fn ordered_enumeration_counts() {
        let vals = values(2);
        let mut c = 0;
        for first in 0..vals.len() {
            for_each_ordered_from(&vals, 3, first, &mut |_| c += 1);
        }
        assert_eq!(c, 64);
    }

    #[test]
    fn l2_1_kdv_extremes() {
        // with ω = ξ³ the ratio is 3|ξ₁ξ₂(ξ₁+ξ₂)| / (|ξ₁*|² min(|ξ₁+ξ₂|, |ξ₂*|)),
        // which equals 6 at ξ₁ = ξ₂ and 3/2 at (1, −2)
        let sym = DispersionSymbol::kdv();
        let r = bound_scan(&ScanRequest::new(Lemma::L2_1, 50), &sym, &PartitionConstants::default()).unwrap();
        assert_eq!(r.ratio_max, 6.0);
        assert_eq!(r.ratio_min, 1.5);
        assert_eq!(r.violations, 0);
        let a = r.argmax_tuple;
        assert_eq!(a[0], a[1]);
    }

    #[test]
    fn l2_3_small_box() {
        let sym = DispersionSymbol::fractional(1.5).unwrap();
        let r = bound_scan(
            &ScanRequest::new(Lemma::L2_3, 8),
            &sym,
            &PartitionConstants::default(),
        )
        .unwrap();
        assert_eq!(r.violations, 0, "{:?}", r.violating_tuples);
        assert!(r.ratio_min >= 1.0);
    }

    #[test]
    fn csv_shape() {
        let sym = DispersionSymbol::kdv();
        let r = bound_scan(&ScanRequest::new(Lemma::L2_2, 5), &sym, &PartitionConstants::default()).unwrap();
        let csv = ScanReport::to_csv(&[r]);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), ScanReport::CSV_HEADER);
        assert_eq!(lines.next().unwrap().split(',').count(), 8);
    }
}
