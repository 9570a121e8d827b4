//! Resonance functions `Ω_n`, the quantity `ρ_n`, and the frequency-region
//! classifier.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::DispersionSymbol;

/// An ordered tuple of nonzero integer frequencies.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FreqTuple {
    freqs: Vec<i64>,
    // indices of `freqs` ordered by decreasing magnitude, ties by position
    order: Vec<usize>,
}

impl FreqTuple {
    pub fn new(freqs: Vec<i64>) -> Result<Self> {
        if freqs.is_empty() {
            return Err(Error::InvalidParameter("frequency tuple must be nonempty".into()));
        }
        if freqs.contains(&0) {
            return Err(Error::ZeroFrequency(freqs));
        }
        let mut order: Vec<usize> = (0..freqs.len()).collect();
        order.sort_by(|&a, &b| freqs[b].unsigned_abs().cmp(&freqs[a].unsigned_abs()).then(a.cmp(&b)));
        Ok(FreqTuple { freqs, order })
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn freqs(&self) -> &[i64] {
        &self.freqs
    }

    pub fn sum(&self) -> i64 {
        self.freqs.iter().sum()
    }

    /// `ξ_k*`, the entry with the `k`-th largest magnitude (1-based).
    pub fn star(&self, k: usize) -> i64 {
        self.freqs[self.order[k - 1]]
    }

    /// Entries rearranged so that `|ξ₁*| ≥ |ξ₂*| ≥ …`.
    pub fn by_magnitude(&self) -> Vec<i64> {
        self.order.iter().map(|&i| self.freqs[i]).collect()
    }

    pub fn negated(&self) -> FreqTuple {
        FreqTuple {
            freqs: self.freqs.iter().map(|x| -x).collect(),
            order: self.order.clone(),
        }
    }
}

impl fmt::Display for FreqTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.freqs.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

/// The Japanese bracket `⟨x⟩ = sqrt(1 + x²)`.
pub fn bracket(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

/// `ω(ξ)` for a nonzero frequency.
pub fn omega(xi: i64, sym: &DispersionSymbol) -> Result<f64> {
    if xi == 0 {
        return Err(Error::ZeroFrequency(vec![0]));
    }
    Ok(sym.eval(xi))
}

/// `Ω_n = ω(Σξ_i) − Σω(ξ_i)` on an arbitrary integer slice (zero entries allowed).
pub fn big_omega_slice(xs: &[i64], sym: &DispersionSymbol) -> f64 {
    if let Some(v) = big_omega_exact_slice(xs, sym) {
        return v as f64;
    }
    let s: i64 = xs.iter().sum();
    sym.eval(s) - xs.iter().map(|&x| sym.eval(x)).sum::<f64>()
}

/// Exact `Ω_n` when `ω` is integer valued; `None` otherwise or on overflow.
pub fn big_omega_exact_slice(xs: &[i64], sym: &DispersionSymbol) -> Option<i128> {
    let s: i64 = xs.iter().sum();
    let mut acc = sym.eval_exact(s)?;
    for &x in xs {
        acc = acc.checked_sub(sym.eval_exact(x)?)?;
    }
    Some(acc)
}

pub fn big_omega(t: &FreqTuple, sym: &DispersionSymbol) -> f64 {
    big_omega_slice(t.freqs(), sym)
}

pub fn big_omega_exact(t: &FreqTuple, sym: &DispersionSymbol) -> Option<i128> {
    big_omega_exact_slice(t.freqs(), sym)
}

/// `Ω₃(ξ₁, ξ₂, ξ̃₃) + Σ_{i=3}^{n−1} Ω₂(ξ_i, ξ̃_{i+1})` with `ξ̃_i = Σ_{j≥i} ξ_j`.
pub fn telescoped_omega(xs: &[i64], sym: &DispersionSymbol) -> f64 {
    assert!(xs.len() >= 3, "telescoping needs at least three frequencies");
    let n = xs.len();
    let tail = |i: usize| -> i64 { xs[i..].iter().sum() };
    let mut acc = big_omega_slice(&[xs[0], xs[1], tail(2)], sym);
    for i in 2..n - 1 {
        acc += big_omega_slice(&[xs[i], tail(i + 1)], sym);
    }
    acc
}

/// Exact counterpart of [`telescoped_omega`].
pub fn telescoped_omega_exact(xs: &[i64], sym: &DispersionSymbol) -> Option<i128> {
    assert!(xs.len() >= 3, "telescoping needs at least three frequencies");
    let n = xs.len();
    let tail = |i: usize| -> i64 { xs[i..].iter().sum() };
    let mut acc = big_omega_exact_slice(&[xs[0], xs[1], tail(2)], sym)?;
    for i in 2..n - 1 {
        acc = acc.checked_add(big_omega_exact_slice(&[xs[i], tail(i + 1)], sym)?)?;
    }
    Some(acc)
}

/// `ρ_n = min(⟨ξ₁*+ξ₂*⟩, ⟨ξ₂*+⋯+ξ_n*⟩)`.
pub fn rho(t: &FreqTuple) -> f64 {
    assert!(t.len() >= 2, "rho needs at least two frequencies");
    rho_sorted(&t.by_magnitude())
}

fn rho_sorted(s: &[i64]) -> f64 {
    let a = (s[0] + s[1]) as f64;
    let b: i64 = s[1..].iter().sum();
    bracket(a).min(bracket(b as f64))
}

/// Region of the frequency partition `Z_*^n = R¹ ⊔ R² ⊔ N ⊔ D¹ ⊔ D²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionLabel {
    R1,
    R2,
    N,
    D1,
    D2,
}

impl RegionLabel {
    pub fn is_d(self) -> bool {
        matches!(self, RegionLabel::D1 | RegionLabel::D2)
    }
}

/// Constants that make the `≫`, `≳` comparisons of the partition concrete.
///
/// `sep` is the separation factor for `|a| ≫ |b|` (meaning `|a| ≥ sep·|b|`);
/// `c_r2` enters the `R²` test, `c_d1` the `D¹` test; `c_n`, `c_n3` and
/// `c_d2` are the lower-bound constants asserted on `N_n`, `N₃` and `D²_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionConstants {
    pub sep: f64,
    pub c_r2: f64,
    pub c_d1: f64,
    pub c_n: f64,
    pub c_n3: f64,
    pub c_d2: f64,
    pub resonance_tol: f64,
}

impl Default for PartitionConstants {
    fn default() -> Self {
        PartitionConstants {
            sep: 4.0,
            c_r2: 0.25,
            c_d1: 0.0625,
            c_n: 0.25,
            c_n3: 0.25,
            c_d2: 0.25,
            resonance_tol: 1e-9,
        }
    }
}

impl PartitionConstants {
    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("sep", self.sep),
            ("c_r2", self.c_r2),
            ("c_d1", self.c_d1),
            ("c_n", self.c_n),
            ("c_n3", self.c_n3),
            ("c_d2", self.c_d2),
        ];
        for (name, v) in pos {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.sep < 1.0 {
            return Err(Error::InvalidParameter("sep must be at least 1".into()));
        }
        if !(self.resonance_tol >= 0.0) {
            return Err(Error::InvalidParameter("resonance_tol must be nonnegative".into()));
        }
        Ok(())
    }

    /// Whether `Ω` counts as zero under the skipping convention.
    pub fn is_resonant(&self, omega: f64) -> bool {
        omega.abs() < self.resonance_tol
    }
}

/// A region label together with the outcome of its defining lower bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub label: RegionLabel,
    /// `|Ω|` divided by the lower bound required on `N` or `D²`; `None` for
    /// labels that carry no bound.
    pub bound_ratio: Option<f64>,
    /// False when the label's lower bound fails with the given constants.
    pub bound_holds: bool,
}

/// Label of a tuple given as raw entries, with the zero-entry check skipped.
/// Tuples containing zero are never in `Z_*^n`; callers must filter them.
pub fn classify_slice(xs: &[i64], sym: &DispersionSymbol, c: &PartitionConstants) -> Classification {
    let n = xs.len();
    let plain = |label| Classification {
        label,
        bound_ratio: None,
        bound_holds: true,
    };
    if n == 2 {
        return plain(RegionLabel::N);
    }
    let mut s = xs.to_vec();
    s.sort_by(|a, b| b.unsigned_abs().cmp(&a.unsigned_abs()));
    let mag = |i: usize| s[i].unsigned_abs() as f64;
    let alpha = sym.alpha();
    let total: i64 = xs.iter().sum();
    if n == 3 {
        if xs.contains(&total) {
            return plain(RegionLabel::R1);
        }
        if mag(0) < c.sep * mag(2) {
            return plain(RegionLabel::R2);
        }
        let bound = c.n3_bound(mag(0), alpha, rho_sorted(&s));
        let ratio = big_omega_slice(xs, sym).abs() / bound;
        return Classification {
            label: RegionLabel::N,
            bound_ratio: Some(ratio),
            bound_holds: ratio >= 1.0,
        };
    }
    let top = mag(0).powf(alpha);
    if mag(0) >= c.sep * mag(1) {
        let lower = mag(2).powf(alpha) * mag(3);
        let rest = bracket((total - s[0]) as f64);
        if total == s[0] && lower < c.c_r2 * top {
            return plain(RegionLabel::R1);
        }
        if lower >= c.c_r2 * top * rest {
            return plain(RegionLabel::R2);
        }
        let ratio = big_omega_slice(xs, sym).abs() / (c.c_n * top * rest);
        return Classification {
            label: RegionLabel::N,
            bound_ratio: Some(ratio),
            bound_holds: ratio >= 1.0,
        };
    }
    if mag(2) >= c.c_d1 * total.unsigned_abs() as f64 {
        return plain(RegionLabel::D1);
    }
    let ratio = big_omega_slice(xs, sym).abs() / (c.c_d2 * top * rho_sorted(&s));
    Classification {
        label: RegionLabel::D2,
        bound_ratio: Some(ratio),
        bound_holds: ratio >= 1.0,
    }
}

impl PartitionConstants {
    fn n3_bound(&self, top: f64, alpha: f64, rho: f64) -> f64 {
        self.c_n3 * top.powf(alpha) * rho
    }
}

/// Full classification of a tuple, including the lower-bound check.
pub fn classify(t: &FreqTuple, sym: &DispersionSymbol, c: &PartitionConstants) -> Result<Classification> {
    if t.len() < 2 {
        return Err(Error::InvalidParameter("classification needs at least two frequencies".into()));
    }
    Ok(classify_slice(t.freqs(), sym, c))
}

/// The region of `t` in the partition of `Z_*^n`.
pub fn classify_region(t: &FreqTuple, sym: &DispersionSymbol, c: &PartitionConstants) -> Result<RegionLabel> {
    Ok(classify(t, sym, c)?.label)
}

/// Region indicator on raw entries: false whenever an entry is zero.
pub fn in_region(xs: &[i64], label: RegionLabel, sym: &DispersionSymbol, c: &PartitionConstants) -> bool {
    if xs.len() < 2 || xs.contains(&0) {
        return false;
    }
    classify_slice(xs, sym, c).label == label
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn kdv() -> DispersionSymbol {
        DispersionSymbol::kdv()
    }

    fn t(v: &[i64]) -> FreqTuple {
        FreqTuple::new(v.to_vec()).unwrap()
    }

    #[test]
    fn omega_examples() {
        assert_eq!(omega(2, &kdv()).unwrap(), 8.0);
        assert_eq!(omega(-2, &kdv()).unwrap(), -8.0);
        let a = DispersionSymbol::fractional(1.5).unwrap();
        assert!((omega(4, &a).unwrap() - 32.0).abs() < 1e-12);
        assert!(omega(0, &a).is_err());
    }

    #[test]
    fn big_omega_examples() {
        assert_eq!(big_omega(&t(&[1, 2]), &kdv()), 18.0);
        assert_eq!(big_omega_exact(&t(&[1, 1, 1]), &kdv()), Some(24));
        let a = DispersionSymbol::fractional(1.3).unwrap();
        assert_eq!(big_omega(&t(&[7, -7]), &a), 0.0);
    }

    #[test]
    fn rho_examples() {
        assert_eq!(rho(&t(&[5, -5])), 1.0);
        assert!((rho(&t(&[10, 9, -1])) - bracket(8.0)).abs() < 1e-15);
        assert!((rho(&t(&[3, 3, 3])) - bracket(6.0)).abs() < 1e-15);
    }

    #[test]
    fn star_ordering() {
        let x = t(&[2, -7, 5, 1]);
        assert_eq!(x.by_magnitude(), vec![-7, 5, 2, 1]);
        assert_eq!(x.star(1), -7);
        assert_eq!(x.star(4), 1);
        assert!(FreqTuple::new(vec![1, 0]).is_err());
    }

    #[test]
    fn classify_examples() {
        let c = PartitionConstants::default();
        let a = DispersionSymbol::fractional(1.5).unwrap();
        assert_eq!(classify_region(&t(&[2, -2, 5]), &kdv(), &c).unwrap(), RegionLabel::R1);
        assert_eq!(classify_region(&t(&[17, -3]), &a, &c).unwrap(), RegionLabel::N);
        assert_eq!(classify_region(&t(&[3, 4, 5]), &kdv(), &c).unwrap(), RegionLabel::R2);
        assert_eq!(classify_region(&t(&[40, 1, 2]), &kdv(), &c).unwrap(), RegionLabel::N);
        // the two largest magnitudes are comparable, so this is a D tuple
        let d = classify(&t(&[100, -99, 1, 1]), &kdv(), &c).unwrap();
        assert!(d.label.is_d());
        assert_eq!(d.label, RegionLabel::D1);
        // one dominant frequency, small remainder: N with the case-(a) bound
        let x = t(&[100, 3, 1, 1]);
        let cl = classify(&x, &kdv(), &c).unwrap();
        assert_eq!(cl.label, RegionLabel::N);
        let om = big_omega(&x, &kdv()).abs();
        assert!(om >= c.c_n * 100f64.powi(2) * bracket(5.0));
        assert!(cl.bound_holds);
    }

    #[test]
    fn classify_resonant_top_frequency() {
        // ξ = ξ₁* with negligible lower frequencies
        let c = PartitionConstants::default();
        assert_eq!(classify_region(&t(&[50, 2, -1, -1]), &kdv(), &c).unwrap(), RegionLabel::R1);
    }

    #[test]
    fn three_wave_bound_on_n3() {
        let c = PartitionConstants::default();
        for alpha in [1.25, 1.5, 2.0] {
            let sym = DispersionSymbol::fractional(alpha).unwrap();
            let mut worst = f64::INFINITY;
            for a in -30i64..=30 {
                for b in a..=30 {
                    for d in b..=30 {
                        if a == 0 || b == 0 || d == 0 {
                            continue;
                        }
                        let cl = classify_slice(&[a, b, d], &sym, &c);
                        if let Some(r) = cl.bound_ratio {
                            worst = worst.min(r);
                        }
                    }
                }
            }
            assert!(worst >= 1.0, "alpha {alpha}: {worst}");
        }
    }

    #[test]
    fn telescoping_exact_example() {
        let xs = [3, -1, 4, 1, -5];
        assert_eq!(telescoped_omega_exact(&xs, &kdv()), big_omega_exact_slice(&xs, &kdv()));
    }

    fn nonzero() -> impl Strategy<Value = i64> {
        (1i64..60, any::<bool>()).prop_map(|(x, s)| if s { x } else { -x })
    }

    proptest! {
        #[test]
        fn omega_is_odd(x in nonzero(), alpha in 1.01f64..2.0) {
            let a = DispersionSymbol::fractional(alpha).unwrap();
            prop_assert_eq!(a.eval(-x), -a.eval(x));
            prop_assert_eq!(DispersionSymbol::Quintic.eval(-x), -DispersionSymbol::Quintic.eval(x));
        }

        #[test]
        fn big_omega_permutation_symmetric(v in prop::collection::vec(nonzero(), 2..7), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut w = v.clone();
            w.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(big_omega_exact_slice(&v, &kdv()), big_omega_exact_slice(&w, &kdv()));
            let a = DispersionSymbol::fractional(1.5).unwrap();
            let (p, q) = (big_omega_slice(&v, &a), big_omega_slice(&w, &a));
            prop_assert!((p - q).abs() <= 1e-9 * p.abs().max(1.0));
        }

        #[test]
        fn closed_forms(a in nonzero(), b in nonzero(), c in nonzero()) {
            let (a, b, c) = (a as i128, b as i128, c as i128);
            prop_assert_eq!(big_omega_exact_slice(&[a as i64, b as i64], &kdv()), Some(3 * a * b * (a + b)));
            prop_assert_eq!(
                big_omega_exact_slice(&[a as i64, b as i64, c as i64], &kdv()),
                Some(3 * (a + b) * (b + c) * (a + c))
            );
        }

        #[test]
        fn classifier_is_total_and_deterministic(v in prop::collection::vec(nonzero(), 2..7)) {
            let x = FreqTuple::new(v).unwrap();
            let c = PartitionConstants::default();
            let a = DispersionSymbol::fractional(1.5).unwrap();
            let l1 = classify_region(&x, &a, &c).unwrap();
            let l2 = classify_region(&x, &a, &c).unwrap();
            prop_assert_eq!(l1, l2);
            if x.len() == 2 { prop_assert_eq!(l1, RegionLabel::N); }
            if x.len() == 3 { prop_assert!(!l1.is_d()); }
        }

        #[test]
        fn classifier_even_under_negation(v in prop::collection::vec(nonzero(), 2..7)) {
            let x = FreqTuple::new(v).unwrap();
            let c = PartitionConstants::default();
            let a = DispersionSymbol::fractional(1.75).unwrap();
            prop_assert_eq!(classify_region(&x, &a, &c).unwrap(), classify_region(&x.negated(), &a, &c).unwrap());
        }
    }
}
