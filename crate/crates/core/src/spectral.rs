//! Fourier-side representation of real, periodic fields on `[0, 2π)`.
//!
//! Coefficients follow the normalisation `f̂(ξ) = (1/2π) ∫ e^{-iξx} f(x) dx`,
//! so that `f(x) = Σ f̂(ξ) e^{iξx}`. A [`SpectralField`] keeps the real mean
//! and the modes `ξ = 1..=M`; negative modes are recovered by conjugation, so
//! the reality condition cannot be broken by construction.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The dispersion relation `ω(ξ)` of the linear part `∂x D^α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DispersionSymbol {
    /// `ω(ξ) = |ξ|^α ξ` with `1 < α ≤ 2`.
    Fractional { alpha: f64 },
    /// `ω(ξ) = ξ⁵`.
    Quintic,
}

impl DispersionSymbol {
    pub fn fractional(alpha: f64) -> Result<Self> {
        let sym = DispersionSymbol::Fractional { alpha };
        sym.validate()?;
        Ok(sym)
    }

    pub fn kdv() -> Self {
        DispersionSymbol::Fractional { alpha: 2.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            DispersionSymbol::Fractional { alpha } if !(alpha > 1.0 && alpha <= 2.0) => Err(
                Error::InvalidParameter(format!("fractional dispersion needs 1 < alpha <= 2, got {alpha}")),
            ),
            _ => Ok(()),
        }
    }

    /// Exponent α with `ω(ξ) = |ξ|^α ξ`; the quintic symbol has α = 4.
    pub fn alpha(&self) -> f64 {
        match *self {
            DispersionSymbol::Fractional { alpha } => alpha,
            DispersionSymbol::Quintic => 4.0,
        }
    }

    /// True when `ω` maps integers to integers (α = 2 or quintic).
    pub fn is_integral(&self) -> bool {
        match *self {
            DispersionSymbol::Fractional { alpha } => alpha == 2.0,
            DispersionSymbol::Quintic => true,
        }
    }

    /// Exact integer value of `ω(ξ)` when [`is_integral`](Self::is_integral).
    pub fn eval_exact(&self, xi: i64) -> Option<i128> {
        let x = xi as i128;
        match *self {
            DispersionSymbol::Fractional { alpha } if alpha == 2.0 => Some(x * x * x),
            DispersionSymbol::Quintic => Some(x * x * x * x * x),
            _ => None,
        }
    }

    /// `ω(ξ)`, with `ω(0) = 0`.
    pub fn eval(&self, xi: i64) -> f64 {
        if xi == 0 {
            return 0.0;
        }
        if let Some(v) = self.eval_exact(xi) {
            return v as f64;
        }
        let a = (xi.unsigned_abs()) as f64;
        (self.alpha() * a.ln()).exp() * xi as f64
    }

    /// `ω` at a real argument, used where frequency sums are not integers.
    pub fn eval_real(&self, x: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        x.abs().powf(self.alpha()) * x
    }
}

/// Resolution of a periodic grid: modes `|ξ| ≤ num_modes` are kept, and the
/// physical grid is large enough that the resolved band is at most
/// `dealias_fraction` of the Nyquist band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub num_modes: usize,
    pub dealias_fraction: f64,
}

impl Grid {
    pub fn new(num_modes: usize, dealias_fraction: f64) -> Result<Self> {
        let grid = Grid {
            num_modes,
            dealias_fraction,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Grid whose physical size is alias-free for products of degree `degree`.
    pub fn for_degree(num_modes: usize, degree: usize) -> Result<Self> {
        Grid::new(num_modes, 2.0 / (degree.max(1) as f64 + 1.0))
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_modes == 0 {
            return Err(Error::InvalidParameter("num_modes must be positive".into()));
        }
        if !(self.dealias_fraction > 0.0 && self.dealias_fraction <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "dealias_fraction must lie in (0, 1], got {}",
                self.dealias_fraction
            )));
        }
        Ok(())
    }

    /// Number of physical sample points (a power of two).
    pub fn physical_len(&self) -> usize {
        let m = self.num_modes as f64;
        let need = (2.0 * m / self.dealias_fraction).ceil() as usize + 1;
        need.next_power_of_two()
    }

    /// Whether degree-`degree` products evaluated on the physical grid leave
    /// the resolved modes free of aliasing.
    pub fn check_degree(&self, degree: usize) -> Result<()> {
        let needed = (degree + 1) * self.num_modes + 1;
        let available = self.physical_len();
        if available < needed {
            return Err(Error::AliasingBudget {
                degree,
                needed,
                available,
            });
        }
        Ok(())
    }
}

/// A real periodic field stored by its mean and the positive modes `1..=M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralField {
    grid: Grid,
    mean: f64,
    modes: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: Grid) -> Self {
        SpectralField {
            grid,
            mean: 0.0,
            modes: vec![Complex64::new(0.0, 0.0); grid.num_modes],
        }
    }

    /// Builds a mean-zero field from the coefficients of `ξ = 1..=M`.
    pub fn from_positive_modes(grid: Grid, modes: Vec<Complex64>) -> Result<Self> {
        if modes.len() != grid.num_modes {
            return Err(Error::LengthMismatch {
                expected: grid.num_modes,
                got: modes.len(),
            });
        }
        Ok(SpectralField {
            grid,
            mean: 0.0,
            modes,
        })
    }

    /// Builds a field from `(ξ, f̂(ξ))` pairs. Pairs for `ξ` and `-ξ` must be
    /// conjugate; a nonzero `ξ = 0` entry must be real.
    pub fn from_pairs(grid: Grid, pairs: &[(i64, Complex64)]) -> Result<Self> {
        let mut field = SpectralField::zeros(grid);
        let mut seen = vec![None::<Complex64>; grid.num_modes];
        for &(xi, value) in pairs {
            if xi == 0 {
                if value.im.abs() > 1e-12 * value.norm().max(1.0) {
                    return Err(Error::RealityViolation {
                        mode: 0,
                        defect: value.im.abs(),
                    });
                }
                field.mean = value.re;
                continue;
            }
            let k = xi.unsigned_abs() as usize;
            if k > grid.num_modes {
                return Err(Error::IndexOutOfRange {
                    index: k,
                    bound: grid.num_modes,
                });
            }
            let positive = if xi > 0 { value } else { value.conj() };
            if let Some(prev) = seen[k - 1] {
                let defect = (prev - positive).norm();
                if defect > 1e-12 * prev.norm().max(1.0) {
                    return Err(Error::RealityViolation { mode: xi, defect });
                }
            }
            seen[k - 1] = Some(positive);
            field.modes[k - 1] = positive;
        }
        Ok(field)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn num_modes(&self) -> usize {
        self.grid.num_modes
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn set_mean(&mut self, mean: f64) {
        self.mean = mean;
    }

    pub fn is_mean_zero(&self) -> bool {
        self.mean == 0.0
    }

    /// Coefficients of `ξ = 1..=M`.
    pub fn positive_modes(&self) -> &[Complex64] {
        &self.modes
    }

    pub fn positive_modes_mut(&mut self) -> &mut [Complex64] {
        &mut self.modes
    }

    /// `f̂(ξ)` for any integer `ξ`; unresolved modes are zero.
    pub fn coeff(&self, xi: i64) -> Complex64 {
        if xi == 0 {
            return Complex64::new(self.mean, 0.0);
        }
        let k = xi.unsigned_abs() as usize;
        if k > self.grid.num_modes {
            return Complex64::new(0.0, 0.0);
        }
        let c = self.modes[k - 1];
        if xi > 0 {
            c
        } else {
            c.conj()
        }
    }

    /// Sets `f̂(ξ)` (and therefore `f̂(-ξ)`) for `1 ≤ |ξ| ≤ M`.
    pub fn set_coeff(&mut self, xi: i64, value: Complex64) -> Result<()> {
        let k = xi.unsigned_abs() as usize;
        if xi == 0 || k > self.grid.num_modes {
            return Err(Error::IndexOutOfRange {
                index: k,
                bound: self.grid.num_modes,
            });
        }
        self.modes[k - 1] = if xi > 0 { value } else { value.conj() };
        Ok(())
    }

    /// Copy of the field on a grid with a different mode count (truncating or
    /// zero-padding).
    pub fn resample(&self, grid: Grid) -> SpectralField {
        let mut out = SpectralField::zeros(grid);
        out.mean = self.mean;
        let n = grid.num_modes.min(self.grid.num_modes);
        out.modes[..n].copy_from_slice(&self.modes[..n]);
        out
    }

    pub fn axpy(&mut self, a: f64, other: &SpectralField) {
        self.mean += a * other.mean;
        for (x, y) in self.modes.iter_mut().zip(other.modes.iter()) {
            *x += y * a;
        }
    }

    pub fn scaled(&self, a: f64) -> SpectralField {
        let mut out = self.clone();
        out.mean *= a;
        for c in out.modes.iter_mut() {
            *c *= a;
        }
        out
    }

    pub fn sub(&self, other: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.modes
            .iter()
            .map(|c| c.norm())
            .fold(self.mean.abs(), f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.mean.is_finite() && self.modes.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// `‖f‖_{H^s}` with `‖f‖² = |f̂(0)|² + Σ_{ξ≠0} |ξ|^{2s} |f̂(ξ)|²`.
pub fn hs_norm(f: &SpectralField, s: f64) -> f64 {
    let tail: f64 = f
        .modes
        .iter()
        .enumerate()
        .map(|(i, c)| ((i + 1) as f64).powf(2.0 * s) * c.norm_sqr())
        .sum();
    (f.mean * f.mean + 2.0 * tail).sqrt()
}

/// The free flow `S(t)`: multiplies mode `ξ` by `e^{itω(ξ)}`.
pub fn free_evolve(f: &SpectralField, sym: &DispersionSymbol, t: f64) -> SpectralField {
    let mut out = f.clone();
    for (i, c) in out.modes.iter_mut().enumerate() {
        let xi = (i + 1) as i64;
        *c *= Complex64::from_polar(1.0, t * sym.eval(xi));
    }
    out
}

/// Coefficient-wise product with the symbol `m`. Fails when `m` does not
/// preserve real-valuedness, i.e. `m(-ξ) ≠ conj(m(ξ))` on the support of `f`.
pub fn apply_multiplier<F>(f: &SpectralField, m: F) -> Result<SpectralField>
where
    F: Fn(i64) -> Complex64,
{
    let tol = 1e-12;
    let mut out = f.clone();
    let m0 = m(0);
    if f.mean != 0.0 {
        let v = m0 * f.mean;
        if v.im.abs() > tol * v.norm().max(1.0) {
            return Err(Error::RealityViolation {
                mode: 0,
                defect: v.im.abs(),
            });
        }
        out.mean = v.re;
    }
    for (i, c) in out.modes.iter_mut().enumerate() {
        let xi = (i + 1) as i64;
        let plus = m(xi) * *c;
        let minus = m(-xi) * c.conj();
        let defect = (minus - plus.conj()).norm();
        if defect > tol * plus.norm().max(minus.norm()).max(1e-300) && defect > 1e-300 {
            return Err(Error::RealityViolation { mode: xi, defect });
        }
        *c = plus;
    }
    Ok(out)
}

/// `D^α`: multiplication by `|ξ|^α`.
pub fn fractional_derivative(f: &SpectralField, alpha: f64) -> SpectralField {
    let mut out = f.clone();
    out.mean = 0.0;
    for (i, c) in out.modes.iter_mut().enumerate() {
        *c *= ((i + 1) as f64).powf(alpha);
    }
    out
}

/// `∂x`: multiplication by `iξ`.
pub fn derivative(f: &SpectralField) -> SpectralField {
    let mut out = f.clone();
    out.mean = 0.0;
    for (i, c) in out.modes.iter_mut().enumerate() {
        *c *= Complex64::new(0.0, (i + 1) as f64);
    }
    out
}

/// The projection `𝐏` onto mean-zero functions.
pub fn project_mean_zero(f: &SpectralField) -> SpectralField {
    let mut out = f.clone();
    out.mean = 0.0;
    out
}

/// Cached FFT plans for moving between a [`Grid`]'s spectral and physical
/// representations.
pub struct Transform {
    grid: Grid,
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Transform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Transform")
            .field("grid", &self.grid)
            .field("len", &self.len)
            .finish()
    }
}

impl Transform {
    pub fn new(grid: Grid) -> Self {
        Transform::with_len(grid, grid.physical_len())
    }

    /// Transform with an explicit physical sample count `len ≥ 2M + 1`.
    pub fn with_len(grid: Grid, len: usize) -> Self {
        assert!(len > 2 * grid.num_modes, "physical grid too small for the resolved modes");
        let mut planner = FftPlanner::new();
        Transform {
            grid,
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Sample points `x_j = 2πj/n`.
    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len).map(|j| 2.0 * PI * j as f64 / self.len as f64).collect()
    }

    /// Samples of `f(x_j)`.
    pub fn to_physical(&self, f: &SpectralField) -> Vec<f64> {
        let n = self.len;
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        buf[0] = Complex64::new(f.mean, 0.0);
        for (i, c) in f.modes.iter().enumerate() {
            let k = i + 1;
            buf[k] = *c;
            buf[n - k] = c.conj();
        }
        self.inverse.process(&mut buf);
        buf.into_iter().map(|z| z.re).collect()
    }

    /// Coefficients `ξ = 0..=M` of real samples; higher modes are discarded.
    pub fn to_spectral(&self, samples: &[f64]) -> SpectralField {
        let n = self.len;
        assert_eq!(samples.len(), n, "sample count does not match the transform");
        let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward.process(&mut buf);
        let scale = 1.0 / n as f64;
        let mut out = SpectralField::zeros(self.grid);
        out.mean = buf[0].re * scale;
        for (i, c) in out.modes.iter_mut().enumerate() {
            *c = buf[i + 1] * scale;
        }
        out
    }

    /// Coefficient of mode zero only (the mean of the samples).
    pub fn mean_of(&self, samples: &[f64]) -> f64 {
        samples.iter().sum::<f64>() / samples.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(m: usize) -> Grid {
        Grid::new(m, 0.5).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn hs_norm_single_mode() {
        // a mode-1 field stores f̂(1) and its mirror f̂(-1); use from_pairs with
        // only the positive mode to check the one-sided count
        let g = grid(4);
        let f = SpectralField::from_pairs(g, &[(1, c(1.0, 0.0))]).unwrap();
        // both ±1 are present for a real field
        assert!((hs_norm(&f, 0.0) - 2f64.sqrt()).abs() < 1e-15);
        let f = SpectralField::from_pairs(g, &[(2, c(1.0, 0.0)), (-2, c(1.0, 0.0))]).unwrap();
        assert!((hs_norm(&f, 1.0) - 8f64.sqrt()).abs() < 1e-14);
        assert_eq!(hs_norm(&SpectralField::zeros(g), 1.7), 0.0);
    }

    #[test]
    fn hs_norm_counts_mean() {
        let mut f = SpectralField::zeros(grid(3));
        f.set_mean(3.0);
        assert_eq!(hs_norm(&f, 2.0), 3.0);
    }

    #[test]
    fn free_evolve_phase() {
        let g = grid(4);
        let f = SpectralField::from_pairs(g, &[(1, c(1.0, 0.0))]).unwrap();
        let out = free_evolve(&f, &DispersionSymbol::kdv(), PI);
        assert!((out.coeff(1) - c(-1.0, 0.0)).norm() < 1e-15);
        let same = free_evolve(&f, &DispersionSymbol::kdv(), 0.0);
        assert_eq!(same, f);
    }

    #[test]
    fn multiplier_identity_and_power() {
        let g = grid(4);
        let f = SpectralField::from_pairs(g, &[(3, c(1.0, 0.0))]).unwrap();
        assert_eq!(apply_multiplier(&f, |_| c(1.0, 0.0)).unwrap(), f);
        let d2 = apply_multiplier(&f, |xi| c((xi as f64).abs().powf(2.0), 0.0)).unwrap();
        assert!((d2.coeff(3) - c(9.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn multiplier_derivative_of_sine() {
        // sin x = (e^{ix} - e^{-ix}) / 2i, so f̂(±1) = ∓i/2
        let g = grid(4);
        let f = SpectralField::from_pairs(g, &[(1, c(0.0, -0.5)), (-1, c(0.0, 0.5))]).unwrap();
        let df = apply_multiplier(&f, |xi| c(0.0, xi as f64)).unwrap();
        // compare samples with cos x
        let tr = Transform::new(g);
        let xs = tr.nodes();
        let vals = tr.to_physical(&df);
        for (x, v) in xs.iter().zip(vals) {
            assert!((v - x.cos()).abs() < 1e-14);
        }
    }

    #[test]
    fn multiplier_rejects_non_hermitian_symbol() {
        let g = grid(4);
        let f = SpectralField::from_pairs(g, &[(2, c(1.0, 0.5))]).unwrap();
        let err = apply_multiplier(&f, |xi| c(xi as f64, 0.0)).unwrap_err();
        assert!(matches!(err, Error::RealityViolation { .. }));
    }

    #[test]
    fn projection() {
        let g = grid(4);
        let mut f = SpectralField::zeros(g);
        f.set_mean(5.0);
        assert_eq!(project_mean_zero(&f), SpectralField::zeros(g));
        let h = SpectralField::from_pairs(g, &[(2, c(0.3, -0.1))]).unwrap();
        assert_eq!(project_mean_zero(&h), h);
    }

    #[test]
    fn omega_values() {
        let k = DispersionSymbol::kdv();
        assert_eq!(k.eval(2), 8.0);
        assert_eq!(k.eval(-2), -8.0);
        let f = DispersionSymbol::fractional(1.5).unwrap();
        assert!((f.eval(4) - 32.0).abs() < 1e-12);
        assert_eq!(DispersionSymbol::Quintic.eval(-2), -32.0);
        assert!(DispersionSymbol::fractional(2.5).is_err());
        assert!(DispersionSymbol::fractional(1.0).is_err());
    }

    #[test]
    fn pairs_must_be_conjugate() {
        let g = grid(4);
        let err = SpectralField::from_pairs(g, &[(1, c(1.0, 0.0)), (-1, c(2.0, 0.0))]).unwrap_err();
        assert!(matches!(err, Error::RealityViolation { .. }));
    }

    #[test]
    fn degree_budget() {
        let g = Grid::for_degree(32, 3).unwrap();
        assert!(g.check_degree(3).is_ok());
        let small = Grid::new(32, 1.0).unwrap();
        assert!(matches!(small.check_degree(3), Err(Error::AliasingBudget { .. })));
    }

    fn field_strategy(m: usize) -> impl Strategy<Value = SpectralField> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), m).prop_map(move |v| {
            let modes = v.into_iter().map(|(a, b)| c(a, b)).collect();
            SpectralField::from_positive_modes(grid(m), modes).unwrap()
        })
    }

    proptest! {
        #[test]
        fn free_evolve_preserves_norms(f in field_strategy(12), t in -3.0f64..3.0, s in -1.0f64..3.0) {
            let sym = DispersionSymbol::fractional(1.5).unwrap();
            let g = free_evolve(&f, &sym, t);
            let (a, b) = (hs_norm(&f, s), hs_norm(&g, s));
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-300));
            let back = free_evolve(&g, &sym, -t);
            let err = hs_norm(&back.sub(&f), 0.0);
            prop_assert!(err <= 1e-12 * hs_norm(&f, 0.0).max(1e-300));
        }

        #[test]
        fn hs_norm_monotone_in_s(f in field_strategy(10), s in -2.0f64..2.0, ds in 0.0f64..2.0) {
            prop_assert!(hs_norm(&f, s) <= hs_norm(&f, s + ds) * (1.0 + 1e-14));
        }

        #[test]
        fn physical_round_trip(f in field_strategy(16)) {
            let tr = Transform::new(f.grid());
            let back = tr.to_spectral(&tr.to_physical(&f));
            let err = hs_norm(&back.sub(&f), 0.0);
            prop_assert!(err <= 1e-12 * hs_norm(&f, 0.0).max(1e-300));
        }

        #[test]
        fn projection_idempotent(f in field_strategy(6), mean in -3.0f64..3.0) {
            let mut f = f;
            f.set_mean(mean);
            let p = project_mean_zero(&f);
            prop_assert_eq!(project_mean_zero(&p), p);
        }
    }
}
