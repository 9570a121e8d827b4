//! Normal-form symbols: `φ_k`, elongation, the recursive multipliers `μ` and
//! `𝔪`, and the per-tuple weights of the boundary and remainder terms.
//!
//! All weights are stated for the Fourier-side convention where a term `T(u)`
//! of order `ν` has coefficients `T̂(ξ) = Σ_{ξ₁+⋯+ξ_ν=ξ} w(ξ₁,…,ξ_ν) û(ξ₁)⋯û(ξ_ν)`.
//! The recursion weights `(−1)^{n−1} i` are used verbatim; the constant phase
//! that relates level-`n` weights to the evolution equation is exposed
//! separately by [`identity_factor`].

mod scalar;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use scalar::{GaussianRational, Scalar};

use crate::combinatorics::distinct_arrangements;
use crate::error::{Error, Result};
use crate::resonance::{classify_slice, FreqTuple, PartitionConstants, RegionLabel};
use crate::spectral::DispersionSymbol;

/// `P(x) = Σ_{k=1}^d c_k x^k`, stored as `[c₁, …, c_d]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialSpec {
    pub coefficients: Vec<f64>,
}

impl PolynomialSpec {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        let p = PolynomialSpec { coefficients };
        p.validate()?;
        Ok(p)
    }

    /// `P(x) = c x^k`.
    pub fn monomial(k: usize, c: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("monomial degree must be positive".into()));
        }
        let mut coefficients = vec![0.0; k];
        coefficients[k - 1] = c;
        PolynomialSpec::new(coefficients)
    }

    /// The zero polynomial; only meaningful for linear runs of the solver.
    pub fn zero() -> Self {
        PolynomialSpec {
            coefficients: Vec::new(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.iter().all(|&c| c == 0.0)
    }

    /// Checks `deg P ≥ 2` with a nonzero leading coefficient. The zero
    /// polynomial is accepted as the linear special case.
    pub fn validate(&self) -> Result<()> {
        if self.coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("polynomial coefficients must be finite".into()));
        }
        if self.is_zero() {
            return Ok(());
        }
        if self.coefficients.len() < 2 {
            return Err(Error::InvalidParameter("polynomial degree must be at least 2".into()));
        }
        if *self.coefficients.last().unwrap() == 0.0 {
            return Err(Error::InvalidParameter("leading coefficient must be nonzero".into()));
        }
        Ok(())
    }

    pub fn degree(&self) -> usize {
        if self.is_zero() {
            0
        } else {
            self.coefficients.len()
        }
    }

    /// `c_k` (zero outside `1..=d`).
    pub fn coeff(&self, k: usize) -> f64 {
        if k == 0 {
            return 0.0;
        }
        self.coefficients.get(k - 1).copied().unwrap_or(0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, &c| (acc + c) * x)
    }

    /// `P′(x)`.
    pub fn eval_derivative(&self, x: f64) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .rev()
            .fold(0.0, |acc, (i, &c)| acc * x + (i + 1) as f64 * c)
    }

    /// `F(x) = ∫₀ˣ P(y) dy = Σ c_k x^{k+1}/(k+1)`.
    pub fn eval_antiderivative(&self, x: f64) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .rev()
            .fold(0.0, |acc, (i, &c)| (acc + c / (i + 2) as f64) * x)
            * x
    }
}

/// Which normal-form term a weight belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TermKind {
    B,
    R1,
    R2,
    D,
    N,
    FrakB,
    FrakR,
    FrakN,
}

impl TermKind {
    pub fn is_frak(self) -> bool {
        matches!(self, TermKind::FrakB | TermKind::FrakR | TermKind::FrakN)
    }
}

/// One term of the expansion: kind, `(k₀,…,k_n)`, `(l₁,…,l_m)` and `d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TermSpec {
    pub kind: TermKind,
    pub k_list: Vec<usize>,
    pub l_list: Vec<usize>,
    pub d: usize,
}

impl TermSpec {
    pub fn new(kind: TermKind, k_list: Vec<usize>, l_list: Vec<usize>, d: usize) -> Result<Self> {
        let t = TermSpec {
            kind,
            k_list,
            l_list,
            d,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_list.is_empty() {
            return Err(Error::InvalidParameter("k_list must contain k0".into()));
        }
        for &k in self.k_list.iter().chain(self.l_list.iter()) {
            if k == 0 || k > self.d {
                return Err(Error::IndexOutOfRange {
                    index: k,
                    bound: self.d,
                });
            }
        }
        if !self.kind.is_frak() && !self.l_list.is_empty() {
            return Err(Error::InvalidParameter("l_list is only used by the D-expansion terms".into()));
        }
        Ok(())
    }

    /// `ν_n = k₀ + Σ_{i≥1} (k_i − 1)`.
    pub fn nu_n(&self) -> usize {
        nu(&self.k_list)
    }

    /// `ν_{n,m} = ν_n + Σ (l_i − 1)`.
    pub fn nu_nm(&self) -> usize {
        self.nu_n() + self.l_list.iter().map(|l| l - 1).sum::<usize>()
    }

    /// Number of frequencies the weight takes.
    pub fn arity(&self) -> usize {
        if self.kind.is_frak() {
            self.nu_nm()
        } else {
            self.nu_n()
        }
    }

    /// `n` in `(k₀,…,k_n)`.
    pub fn level(&self) -> usize {
        self.k_list.len() - 1
    }

    /// `Π c_{k_i} · Π c_{l_i}`.
    pub fn coefficient(&self, poly: &PolynomialSpec) -> f64 {
        self.k_list
            .iter()
            .chain(self.l_list.iter())
            .map(|&k| poly.coeff(k))
            .product()
    }
}

/// `ν` of a k-list.
pub fn nu(k_list: &[usize]) -> usize {
    match k_list.split_first() {
        None => 0,
        Some((k0, rest)) => k0 + rest.iter().map(|k| k - 1).sum::<usize>(),
    }
}

/// `φ_k(ξ₁,…,ξ_k) = 1 − #{j : ξ_j = ξ₁+⋯+ξ_k}` on `Z_*^k`.
pub fn phi_k(t: &FreqTuple) -> i64 {
    phi_slice(t.freqs())
}

/// `φ_k` on raw entries; zero whenever an entry vanishes.
pub fn phi_slice(xs: &[i64]) -> i64 {
    if xs.contains(&0) {
        return 0;
    }
    let s: i64 = xs.iter().sum();
    1 - xs.iter().filter(|&&x| x == s).count() as i64
}

/// Replaces `xs[j−1..j−1+k]` by its sum (`j` is 1-based).
pub fn collapse(xs: &[i64], k: usize, j: usize) -> Vec<i64> {
    let mut out = Vec::with_capacity(xs.len() + 1 - k);
    out.extend_from_slice(&xs[..j - 1]);
    out.push(xs[j - 1..j - 1 + k].iter().sum());
    out.extend_from_slice(&xs[j - 1 + k..]);
    out
}

/// The elongation `𝐗ᵏⱼ f`: a symbol on `n+k−1` frequencies obtained by
/// feeding `ξ_j + ⋯ + ξ_{j+k−1}` into slot `j` of the `n`-frequency symbol `f`.
pub fn elongate<F, T>(f: F, n: usize, k: usize, j: usize) -> Result<impl Fn(&[i64]) -> T>
where
    F: Fn(&[i64]) -> T,
{
    if k == 0 {
        return Err(Error::InvalidParameter("elongation length must be positive".into()));
    }
    if j == 0 || j > n {
        return Err(Error::IndexOutOfRange { index: j, bound: n });
    }
    let len = n + k - 1;
    Ok(move |xs: &[i64]| {
        assert_eq!(xs.len(), len, "elongated symbol called with the wrong arity");
        f(&collapse(xs, k, j))
    })
}

/// Constant phase relating the literal term weights to the evolution
/// `∂t û = iω û − F[𝐏(P′(u)) ∂x u]`: the expansion of `u(t) − S(t)g` holds with
/// every weight of a term at level `n` (and D-expansion depth `m`) multiplied
/// by this factor.
pub fn identity_factor(level: usize, frak_depth: usize) -> Complex64 {
    let base = if level % 2 == 0 {
        Complex64::new(0.0, -1.0)
    } else {
        Complex64::new(1.0, 0.0)
    };
    if frak_depth % 2 == 1 {
        base * Complex64::new(0.0, 1.0)
    } else {
        base
    }
}

/// Evaluation context for the symbol recursions.
///
/// With a cutoff `M`, every weight is additionally restricted to tuples whose
/// entries, intermediate elongated frequencies and output all satisfy
/// `|·| ≤ M`; this is the expansion of the Galerkin-truncated equation.
#[derive(Debug, Clone, Copy)]
pub struct SymbolEval<'a> {
    pub sym: &'a DispersionSymbol,
    pub consts: &'a PartitionConstants,
    pub cutoff: Option<i64>,
}

impl<'a> SymbolEval<'a> {
    pub fn new(sym: &'a DispersionSymbol, consts: &'a PartitionConstants) -> Self {
        SymbolEval {
            sym,
            consts,
            cutoff: None,
        }
    }

    pub fn with_cutoff(mut self, cutoff: i64) -> Self {
        self.cutoff = Some(cutoff);
        self
    }

    fn within(&self, x: i64) -> bool {
        self.cutoff.is_none_or(|m| x.abs() <= m)
    }

    fn label(&self, xs: &[i64]) -> Option<RegionLabel> {
        if xs.len() < 2 || xs.contains(&0) {
            None
        } else {
            Some(classify_slice(xs, self.sym, self.consts).label)
        }
    }

    /// `μ^{j₁…j_n}_{k₀…k_n}`; arguments are assumed validated.
    pub fn mu_component<S: Scalar>(&self, k_list: &[usize], j_list: &[usize], xs: &[i64]) -> S {
        let n = j_list.len();
        if n == 0 {
            return S::from_int(phi_slice(xs));
        }
        let kn = k_list[n];
        let jn = j_list[n - 1];
        let block = &xs[jn - 1..jn - 1 + kn];
        let phi = phi_slice(block);
        let block_sum: i64 = block.iter().sum();
        if phi == 0 || block_sum == 0 || !self.within(block_sum) {
            return S::zero();
        }
        let parent = collapse(xs, kn, jn);
        if self.label(&parent) != Some(RegionLabel::N) {
            return S::zero();
        }
        let Some(om) = S::resonance(&parent, self.sym, self.consts) else {
            return S::zero();
        };
        let inner: S = self.mu_component(&k_list[..n], &j_list[..n - 1], &parent);
        if inner.is_zero() {
            return inner;
        }
        let sign = if n % 2 == 1 { 1 } else { -1 };
        let factor = S::imag_unit() * S::from_int(sign * block_sum * phi);
        (factor * inner).div(&om)
    }

    /// `μ_{k₀…k_n}`, the sum of the components over the full `j` lattice.
    pub fn mu_total<S: Scalar>(&self, k_list: &[usize], xs: &[i64]) -> S {
        let n = k_list.len() - 1;
        let mut j = vec![1usize; n];
        let bounds: Vec<usize> = (0..n).map(|m| nu(&k_list[..=m])).collect();
        let mut acc = S::zero();
        loop {
            let v: S = self.mu_component(k_list, &j, xs);
            if !v.is_zero() {
                acc = acc + v;
            }
            // odometer over 1 ≤ j_m ≤ ν_{m−1}
            let mut pos = 0;
            loop {
                if pos == n {
                    return acc;
                }
                if j[pos] < bounds[pos] {
                    j[pos] += 1;
                    break;
                }
                j[pos] = 1;
                pos += 1;
            }
        }
    }

    /// `𝔪^{l₁…l_m}_{k₀…k_n}` with the `j` sum inside each recursion step.
    pub fn mfrak<S: Scalar>(&self, k_list: &[usize], l_list: &[usize], xs: &[i64]) -> S {
        let m = l_list.len();
        if m == 0 {
            return self.mu_total(k_list, xs);
        }
        let lm = l_list[m - 1];
        let parent_len = xs.len() + 1 - lm;
        let sign = if m % 2 == 1 { 1 } else { -1 };
        let mut acc = S::zero();
        for j in 1..=parent_len {
            let block = &xs[j - 1..j - 1 + lm];
            let phi = phi_slice(block);
            let block_sum: i64 = block.iter().sum();
            if phi == 0 || block_sum == 0 || !self.within(block_sum) {
                continue;
            }
            let parent = collapse(xs, lm, j);
            if self.label(&parent) != Some(RegionLabel::D2) {
                continue;
            }
            let Some(om) = S::resonance(&parent, self.sym, self.consts) else {
                continue;
            };
            let inner: S = self.mfrak(k_list, &l_list[..m - 1], &parent);
            if inner.is_zero() {
                continue;
            }
            acc = acc + (S::from_int(block_sum * phi) * inner).div(&om);
        }
        S::imag_unit() * S::from_int(sign) * acc
    }

    /// The weight of `term` at `xs`. Tuples with a zero entry or zero sum get
    /// weight zero.
    pub fn term<S: Scalar>(&self, term: &TermSpec, xs: &[i64]) -> S {
        let xi: i64 = xs.iter().sum();
        if xi == 0 || xs.contains(&0) || !self.within(xi) || !xs.iter().all(|&x| self.within(x)) {
            return S::zero();
        }
        let Some(label) = self.label(xs) else {
            return S::zero();
        };
        let region_ok = match term.kind {
            TermKind::B | TermKind::N => label == RegionLabel::N,
            TermKind::R1 => label == RegionLabel::R1,
            TermKind::R2 => label == RegionLabel::R2,
            TermKind::D => label.is_d(),
            TermKind::FrakB | TermKind::FrakN => label == RegionLabel::D2,
            TermKind::FrakR => label == RegionLabel::D1,
        };
        if !region_ok {
            return S::zero();
        }
        let sym_value: S = if term.kind.is_frak() {
            self.mfrak(&term.k_list, &term.l_list, xs)
        } else {
            self.mu_total(&term.k_list, xs)
        };
        if sym_value.is_zero() {
            return sym_value;
        }
        match term.kind {
            TermKind::B | TermKind::FrakB => {
                let Some(om) = S::resonance(xs, self.sym, self.consts) else {
                    return S::zero();
                };
                (S::imag_unit() * S::from_int(xi) * sym_value).div(&om)
            }
            _ => S::from_int(xi) * sym_value,
        }
    }
}

fn check_tuple_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::LengthMismatch { expected, got });
    }
    Ok(())
}

fn check_k_list(k_list: &[usize]) -> Result<()> {
    if k_list.is_empty() {
        return Err(Error::InvalidParameter("k_list must contain k0".into()));
    }
    if let Some(&k) = k_list.iter().find(|&&k| k == 0) {
        return Err(Error::IndexOutOfRange { index: k, bound: usize::MAX });
    }
    Ok(())
}

fn check_j_list(k_list: &[usize], j_list: &[usize]) -> Result<()> {
    if j_list.len() + 1 != k_list.len() {
        return Err(Error::LengthMismatch {
            expected: k_list.len() - 1,
            got: j_list.len(),
        });
    }
    for (m, &j) in j_list.iter().enumerate() {
        let bound = nu(&k_list[..=m]);
        if j == 0 || j > bound {
            return Err(Error::IndexOutOfRange { index: j, bound });
        }
    }
    Ok(())
}

fn check_exact(sym: &DispersionSymbol) -> Result<()> {
    if !sym.is_integral() {
        return Err(Error::InvalidParameter(
            "exact evaluation needs an integer-valued dispersion symbol".into(),
        ));
    }
    Ok(())
}

/// `μ^{j₁…j_n}_{k₀…k_n}` at `t` (length `ν_n`).
pub fn mu_component(
    k_list: &[usize],
    j_list: &[usize],
    t: &FreqTuple,
    sym: &DispersionSymbol,
    c: &PartitionConstants,
) -> Result<Complex64> {
    check_k_list(k_list)?;
    check_j_list(k_list, j_list)?;
    check_tuple_len(nu(k_list), t.len())?;
    Ok(SymbolEval::new(sym, c).mu_component(k_list, j_list, t.freqs()))
}

/// Exact counterpart of [`mu_component`] for integer-valued `ω`.
pub fn mu_component_exact(
    k_list: &[usize],
    j_list: &[usize],
    t: &FreqTuple,
    sym: &DispersionSymbol,
    c: &PartitionConstants,
) -> Result<GaussianRational> {
    check_exact(sym)?;
    check_k_list(k_list)?;
    check_j_list(k_list, j_list)?;
    check_tuple_len(nu(k_list), t.len())?;
    Ok(SymbolEval::new(sym, c).mu_component(k_list, j_list, t.freqs()))
}

/// `μ_{k₀…k_n}` at `t`.
pub fn mu_total(k_list: &[usize], t: &FreqTuple, sym: &DispersionSymbol, c: &PartitionConstants) -> Result<Complex64> {
    check_k_list(k_list)?;
    check_tuple_len(nu(k_list), t.len())?;
    Ok(SymbolEval::new(sym, c).mu_total(k_list, t.freqs()))
}

pub fn mu_total_exact(
    k_list: &[usize],
    t: &FreqTuple,
    sym: &DispersionSymbol,
    c: &PartitionConstants,
) -> Result<GaussianRational> {
    check_exact(sym)?;
    check_k_list(k_list)?;
    check_tuple_len(nu(k_list), t.len())?;
    Ok(SymbolEval::new(sym, c).mu_total(k_list, t.freqs()))
}

/// `𝔪^{l₁…l_m}_{k₀…k_n}` at `t` (length `ν_{n,m}`).
pub fn mfrak(
    k_list: &[usize],
    l_list: &[usize],
    t: &FreqTuple,
    sym: &DispersionSymbol,
    c: &PartitionConstants,
) -> Result<Complex64> {
    check_k_list(k_list)?;
    check_k_list(if l_list.is_empty() { &[1] } else { l_list })?;
    let expected = nu(k_list) + l_list.iter().map(|l| l - 1).sum::<usize>();
    check_tuple_len(expected, t.len())?;
    Ok(SymbolEval::new(sym, c).mfrak(k_list, l_list, t.freqs()))
}

pub fn mfrak_exact(
    k_list: &[usize],
    l_list: &[usize],
    t: &FreqTuple,
    sym: &DispersionSymbol,
    c: &PartitionConstants,
) -> Result<GaussianRational> {
    check_exact(sym)?;
    check_k_list(k_list)?;
    check_k_list(if l_list.is_empty() { &[1] } else { l_list })?;
    let expected = nu(k_list) + l_list.iter().map(|l| l - 1).sum::<usize>();
    check_tuple_len(expected, t.len())?;
    Ok(SymbolEval::new(sym, c).mfrak(k_list, l_list, t.freqs()))
}

/// Per-tuple weight of `term` (see the module documentation).
pub fn term_symbol(term: &TermSpec, t: &FreqTuple, sym: &DispersionSymbol, c: &PartitionConstants) -> Result<Complex64> {
    term.validate()?;
    check_tuple_len(term.arity(), t.len())?;
    Ok(SymbolEval::new(sym, c).term(term, t.freqs()))
}

pub fn term_symbol_exact(
    term: &TermSpec,
    t: &FreqTuple,
    sym: &DispersionSymbol,
    c: &PartitionConstants,
) -> Result<GaussianRational> {
    check_exact(sym)?;
    term.validate()?;
    check_tuple_len(term.arity(), t.len())?;
    Ok(SymbolEval::new(sym, c).term(term, t.freqs()))
}

fn r1_arity(k_multiset: &[usize]) -> Result<usize> {
    if k_multiset.is_empty() || k_multiset.iter().any(|&k| k < 2) {
        return Err(Error::InvalidParameter("R1 multisets need entries at least 2".into()));
    }
    Ok(1 + k_multiset.iter().map(|k| k - 1).sum::<usize>())
}

fn r1_sum_at<S: Scalar>(ev: &SymbolEval<'_>, arrangements: &[Vec<usize>], d: usize, xs: &[i64]) -> S {
    let mut acc = S::zero();
    for theta in arrangements {
        let spec = TermSpec {
            kind: TermKind::R1,
            k_list: theta.clone(),
            l_list: Vec::new(),
            d,
        };
        acc = acc + ev.term::<S>(&spec, xs);
    }
    acc
}

/// `Σ_{θ ∈ Perm(K)} w_{R¹,θ}(t)`: the weight of `Σ_θ R¹_θ(u)` at the ordered tuple `t`.
pub fn r1_arrangement_sum(
    k_multiset: &[usize],
    t: &FreqTuple,
    sym: &DispersionSymbol,
    c: &PartitionConstants,
) -> Result<Complex64> {
    let m = r1_arity(k_multiset)?;
    check_tuple_len(m, t.len())?;
    let d = *k_multiset.iter().max().unwrap();
    let arrangements = distinct_arrangements(k_multiset);
    Ok(r1_sum_at(&SymbolEval::new(sym, c), &arrangements, d, t.freqs()))
}

fn r1_symmetrized<S: Scalar>(
    k_multiset: &[usize],
    xs: &[i64],
    sym: &DispersionSymbol,
    c: &PartitionConstants,
) -> Result<S> {
    let m = r1_arity(k_multiset)?;
    check_tuple_len(m, xs.len())?;
    let d = *k_multiset.iter().max().unwrap();
    let arrangements = distinct_arrangements(k_multiset);
    let orders = distinct_arrangements(xs);
    let ev = SymbolEval::new(sym, c);
    let mut acc = S::zero();
    for ys in &orders {
        acc = acc + r1_sum_at::<S>(&ev, &arrangements, d, ys);
    }
    Ok(acc.div(&S::from_int(orders.len() as i64)))
}

/// The symmetric symbol `m` of `Σ_{θ ∈ Perm(K)} R¹_θ(u)`: the arrangement sum
/// averaged over all orderings of the frequencies. It defines the same
/// operator as [`r1_arrangement_sum`] and is the canonical choice of `m`.
pub fn r1_symmetrized_symbol(
    k_multiset: &[usize],
    t: &FreqTuple,
    sym: &DispersionSymbol,
    c: &PartitionConstants,
) -> Result<Complex64> {
    r1_symmetrized(k_multiset, t.freqs(), sym, c)
}

pub fn r1_symmetrized_symbol_exact(
    k_multiset: &[usize],
    t: &FreqTuple,
    sym: &DispersionSymbol,
    c: &PartitionConstants,
) -> Result<GaussianRational> {
    check_exact(sym)?;
    r1_symmetrized(k_multiset, t.freqs(), sym, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resonance::{big_omega_slice, classify_region};
    use proptest::prelude::*;

    fn kdv() -> DispersionSymbol {
        DispersionSymbol::kdv()
    }

    fn t(v: &[i64]) -> FreqTuple {
        FreqTuple::new(v.to_vec()).unwrap()
    }

    fn c() -> PartitionConstants {
        PartitionConstants::default()
    }

    fn gr(re: (i64, i64), im: (i64, i64)) -> GaussianRational {
        GaussianRational::from_fracs(re, im)
    }

    #[test]
    fn phi_examples() {
        assert_eq!(phi_k(&t(&[3, -7])), 1);
        assert_eq!(phi_k(&t(&[2, -2, 5])), 0);
        assert_eq!(phi_k(&t(&[5, 5, -5])), -1);
        assert_eq!(phi_slice(&[4]), 0);
    }

    #[test]
    fn elongation_examples() {
        let sym = kdv();
        let id = elongate(|xs: &[i64]| xs.to_vec(), 3, 1, 2).unwrap();
        assert_eq!(id(&[4, 5, 6]), vec![4, 5, 6]);
        let om = elongate(move |xs: &[i64]| big_omega_slice(xs, &sym), 2, 2, 1).unwrap();
        assert_eq!(om(&[1, 2, 3]), big_omega_slice(&[3, 3], &sym));
        let ph = elongate(phi_slice, 2, 2, 2).unwrap();
        assert_eq!(ph(&[1, 2, 3]), 1);
        assert!(elongate(phi_slice, 2, 2, 3).is_err());
    }

    #[test]
    fn elongation_composes() {
        // 𝐗²₁ after 𝐗²₂ on a 2-slot symbol equals collapsing (1,2) and then (2,3)
        let f = |xs: &[i64]| xs[0] * 100 + xs[1];
        let inner = elongate(f, 2, 2, 2).unwrap();
        let outer = elongate(inner, 3, 2, 1).unwrap();
        assert_eq!(outer(&[1, 2, 3, 4]), 3 * 100 + 7);
    }

    #[test]
    fn mu_component_hand_value() {
        let v = mu_component_exact(&[2, 2], &[1], &t(&[1, 2, 3]), &kdv(), &c()).unwrap();
        assert_eq!(v, gr((0, 1), (1, 54)));
        let f = mu_component(&[2, 2], &[1], &t(&[1, 2, 3]), &kdv(), &c()).unwrap();
        assert!((f - Complex64::new(0.0, 1.0 / 54.0)).norm() < 1e-15);
    }

    #[test]
    fn mu_component_validation() {
        assert!(mu_component(&[2, 2], &[3], &t(&[1, 2, 3]), &kdv(), &c()).is_err());
        assert!(mu_component(&[2, 2], &[], &t(&[1, 2, 3]), &kdv(), &c()).is_err());
        assert!(mu_component(&[2, 2], &[1], &t(&[1, 2]), &kdv(), &c()).is_err());
    }

    #[test]
    fn mu_base_case_is_phi() {
        for v in [[2, -2, 5], [5, 5, -5], [1, 2, 3]] {
            let x = t(&v);
            let m = mu_total_exact(&[3], &x, &kdv(), &c()).unwrap();
            assert_eq!(m, GaussianRational::from_int(phi_k(&x)));
        }
    }

    #[test]
    fn mu_vanishes_on_resonant_parent() {
        // collapsing (1,−1) gives the parent (0, 4), which is outside Z_*²
        let v = mu_component_exact(&[2, 2], &[1], &t(&[1, -1, 4]), &kdv(), &c()).unwrap();
        assert!(v.is_zero());
        // parent (3, −3) has Ω₂ = 0
        let v = mu_component_exact(&[2, 2], &[2], &t(&[3, -1, -2]), &kdv(), &c()).unwrap();
        assert!(v.is_zero());
    }

    #[test]
    fn mu22_two_term_form() {
        // μ_{2,2} = i(ξ₁+ξ₂)/Ω₂(ξ₁+ξ₂,ξ₃) + i(ξ₂+ξ₃)/Ω₂(ξ₁,ξ₂+ξ₃) when both parents
        // are nonresonant and all blocks nonzero
        let sym = kdv();
        for v in [[1, 2, 3], [4, -1, 7], [-3, 5, 2], [6, 6, -1]] {
            let (a, b, cc) = (v[0], v[1], v[2]);
            let expected = Complex64::new(0.0, (a + b) as f64 / big_omega_slice(&[a + b, cc], &sym))
                + Complex64::new(0.0, (b + cc) as f64 / big_omega_slice(&[a, b + cc], &sym));
            let got = mu_total(&[2, 2], &t(&v), &sym, &c()).unwrap();
            assert!((got - expected).norm() < 1e-14 * expected.norm(), "{v:?}");
        }
    }

    #[test]
    fn term_symbol_examples() {
        let b = TermSpec::new(TermKind::B, vec![2], vec![], 2).unwrap();
        let v = term_symbol_exact(&b, &t(&[1, 2]), &kdv(), &c()).unwrap();
        assert_eq!(v, gr((0, 1), (1, 6)));
        let n = TermSpec::new(TermKind::N, vec![2, 2], vec![], 2).unwrap();
        let r2 = t(&[3, 4, 5]);
        assert_eq!(classify_region(&r2, &kdv(), &c()).unwrap(), RegionLabel::R2);
        assert!(term_symbol_exact(&n, &r2, &kdv(), &c()).unwrap().is_zero());
        let r1 = TermSpec::new(TermKind::R1, vec![2], vec![], 2).unwrap();
        for v in [[1, 2], [5, -3], [-4, 9]] {
            assert!(term_symbol_exact(&r1, &t(&v), &kdv(), &c()).unwrap().is_zero());
        }
        assert!(term_symbol(&b, &t(&[1, 2, 3]), &kdv(), &c()).is_err());
    }

    #[test]
    fn term_spec_nu() {
        let s = TermSpec::new(TermKind::FrakB, vec![2, 3, 2], vec![3, 2], 3).unwrap();
        assert_eq!(s.nu_n(), 5);
        assert_eq!(s.nu_nm(), 8);
        assert!(TermSpec::new(TermKind::B, vec![2], vec![2], 2).is_err());
        assert!(TermSpec::new(TermKind::B, vec![4], vec![], 3).is_err());
    }

    #[test]
    fn mfrak_base_is_mu() {
        let sym = DispersionSymbol::fractional(1.5).unwrap();
        let x = t(&[3, -7, 2]);
        assert_eq!(
            mfrak(&[2, 2], &[], &x, &sym, &c()).unwrap(),
            mu_total(&[2, 2], &x, &sym, &c()).unwrap()
        );
    }

    #[test]
    fn mfrak_zero_without_d2_parent() {
        // every one-step collapse of a 5-tuple with a single dominant entry
        // leaves a 4-tuple outside D
        let sym = kdv();
        let x = t(&[90, 1, 2, -1, 1]);
        let v = mfrak_exact(&[2, 2, 2], &[2], &x, &sym, &c()).unwrap();
        assert!(v.is_zero());
    }

    #[test]
    fn mfrak_matches_hand_recursion() {
        // 𝔪^{2}_{2,2,2} = i Σ_j ξ_block φ₂ (1_{D²} μ_{2,2,2} / Ω₄)(collapse_j)
        let sym = kdv();
        let cs = c();
        let x = [7, -6, 3, 5, 1];
        let ev = SymbolEval::new(&sym, &cs);
        let mut expected = GaussianRational::zero();
        for j in 1..=4 {
            let parent = collapse(&x, 2, j);
            let bs: i64 = x[j - 1] + x[j];
            if parent.contains(&0) || phi_slice(&x[j - 1..j + 1]) == 0 {
                continue;
            }
            if classify_slice(&parent, &sym, &cs).label != RegionLabel::D2 {
                continue;
            }
            let om = crate::resonance::big_omega_exact_slice(&parent, &sym).unwrap();
            if om == 0 {
                continue;
            }
            let mu: GaussianRational = ev.mu_total(&[2, 2, 2], &parent);
            expected = expected + (GaussianRational::from_int(bs) * mu).div(&GaussianRational::from_int(om as i64));
        }
        expected = GaussianRational::imag_unit() * expected;
        let got = mfrak_exact(&[2, 2, 2], &[2], &t(&x), &sym, &cs).unwrap();
        assert_eq!(got, expected);
    }

    #[test]
    fn r1_diagonal_coefficient() {
        // coefficient of |û_ξ|²û_ξ: the three orderings of (ξ, ξ, −ξ) of the
        // symmetric symbol, equal to −2iξ²/((2^α−1)ω(ξ))
        let cs = c();
        for alpha in [1.5, 2.0] {
            let sym = DispersionSymbol::fractional(alpha).unwrap();
            for xi in [3i64, 7, -11, 40] {
                let m = r1_symmetrized_symbol(&[2, 2], &t(&[xi, xi, -xi]), &sym, &cs).unwrap();
                let coeff = m * 3.0;
                let w = sym.eval(xi);
                let expected = Complex64::new(0.0, -2.0 * (xi * xi) as f64 / ((2f64.powf(alpha) - 1.0) * w));
                assert!((coeff - expected).norm() < 1e-12 * expected.norm(), "alpha {alpha} xi {xi}");
            }
        }
    }

    #[test]
    fn r1_off_diagonal_coefficient() {
        // coefficient of û_ξ û_η û_{−η} (η > 0, |ξ| ≠ η): the six orderings of
        // (ξ, η, −η) of the symmetric symbol, equal to 4i·g(η, ξ)
        let cs = c();
        let sym = DispersionSymbol::fractional(1.5).unwrap();
        for (xi, eta) in [(5i64, 2i64), (-9, 4), (3, 20), (-30, 7)] {
            let m = r1_symmetrized_symbol(&[2, 2], &t(&[xi, eta, -eta]), &sym, &cs).unwrap();
            let coeff = m * 6.0;
            let g = xi as f64
                * ((xi - eta) as f64 / big_omega_slice(&[eta, -xi], &sym)
                    + (xi + eta) as f64 / big_omega_slice(&[-eta, -xi], &sym));
            let expected = Complex64::new(0.0, 4.0 * g);
            assert!((coeff - expected).norm() < 1e-12 * expected.norm(), "{xi} {eta}");
        }
    }

    #[test]
    fn r1_support_and_trivial_multiset() {
        let cs = c();
        let sym = kdv();
        // (3,4,5) is in R² so the R¹ symbol vanishes
        assert_eq!(r1_symmetrized_symbol(&[2, 2], &t(&[3, 4, 5]), &sym, &cs).unwrap(), Complex64::new(0.0, 0.0));
        for v in [[1, 2], [7, -3]] {
            assert!(r1_symmetrized_symbol_exact(&[2], &t(&v), &sym, &cs).unwrap().is_zero());
        }
    }

    #[test]
    fn identity_factor_values() {
        assert_eq!(identity_factor(0, 0), Complex64::new(0.0, -1.0));
        assert_eq!(identity_factor(1, 0), Complex64::new(1.0, 0.0));
        assert_eq!(identity_factor(2, 0), Complex64::new(0.0, -1.0));
        assert_eq!(identity_factor(0, 1), Complex64::new(1.0, 0.0));
        assert_eq!(identity_factor(1, 1), Complex64::new(0.0, 1.0));
        assert_eq!(identity_factor(1, 2), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn polynomial_evaluation() {
        let p = PolynomialSpec::new(vec![0.5, 1.0, 1.0]).unwrap();
        let x = 1.3f64;
        assert!((p.eval(x) - (0.5 * x + x * x + x * x * x)).abs() < 1e-14);
        assert!((p.eval_derivative(x) - (0.5 + 2.0 * x + 3.0 * x * x)).abs() < 1e-14);
        assert!((p.eval_antiderivative(x) - (0.25 * x * x + x.powi(3) / 3.0 + x.powi(4) / 4.0)).abs() < 1e-14);
        assert!(PolynomialSpec::new(vec![1.0]).is_err());
        assert!(PolynomialSpec::new(vec![1.0, 0.0]).is_err());
        assert_eq!(PolynomialSpec::zero().degree(), 0);
    }

    fn nonzero(r: i64) -> impl Strategy<Value = i64> {
        (1i64..=r, any::<bool>()).prop_map(|(x, s)| if s { x } else { -x })
    }

    fn level_specs() -> Vec<TermSpec> {
        let mut out = Vec::new();
        for kind in [TermKind::B, TermKind::R1, TermKind::R2, TermKind::N, TermKind::D] {
            for k in [vec![2], vec![3], vec![2, 2], vec![2, 3], vec![3, 2], vec![2, 2, 2]] {
                out.push(TermSpec::new(kind, k, vec![], 3).unwrap());
            }
        }
        out
    }

    proptest! {
        #[test]
        fn exact_and_float_agree(v in prop::collection::vec(nonzero(25), 4)) {
            let sym = kdv();
            let cs = c();
            let x = t(&v);
            for spec in level_specs().into_iter().filter(|s| s.arity() == 4) {
                let e = term_symbol_exact(&spec, &x, &sym, &cs).unwrap().to_complex();
                let f = term_symbol(&spec, &x, &sym, &cs).unwrap();
                prop_assert!((e - f).norm() <= 1e-10 * e.norm().max(1e-300), "{:?}", spec);
            }
            let e = mfrak_exact(&[2, 2], &[2], &x, &sym, &cs).unwrap().to_complex();
            let f = mfrak(&[2, 2], &[2], &x, &sym, &cs).unwrap();
            prop_assert!((e - f).norm() <= 1e-10 * e.norm().max(1e-300));
        }

        #[test]
        fn normalized_weights_are_hermitian(v in prop::collection::vec(nonzero(30), 2..5), alpha in 1.1f64..2.0) {
            let sym = DispersionSymbol::fractional(alpha).unwrap();
            let cs = c();
            let x = t(&v);
            for spec in level_specs().into_iter().filter(|s| s.arity() == v.len()) {
                let kappa = identity_factor(spec.level(), 0);
                let w = kappa * term_symbol(&spec, &x, &sym, &cs).unwrap();
                let wn = kappa * term_symbol(&spec, &x.negated(), &sym, &cs).unwrap();
                prop_assert!((wn - w.conj()).norm() <= 1e-12 * w.norm().max(1e-300), "{:?}", spec);
            }
        }
    }
}
