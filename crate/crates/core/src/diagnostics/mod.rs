//! Numerical experiments: smoothing tables, the quadratic Duhamel term and
//! its sharpness counterexample, and the normal-form residual.

mod normal_form;

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::resonance::big_omega_slice;
use crate::solver::{gauge_transform, GaugeDirection, Trajectory};
use crate::spectral::{free_evolve, hs_norm, DispersionSymbol, Grid, SpectralField, Transform};

pub use normal_form::{normal_form_residual, NormalFormOptions, NormalFormReport};

/// Machine-readable summary written next to every CSV table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: String,
    pub params: serde_json::Value,
    pub fitted_exponents: serde_json::Value,
    pub residuals: serde_json::Value,
    pub pass: Option<bool>,
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Seeded data `ĝ(ξ) = amp·ξ^{−s−1/2−ε}·e^{iθ_ξ}` with uniform random phases,
/// which lies in `H^s` but not in `H^{s+ε}`.
pub fn rough_data(grid: Grid, s: f64, eps: f64, amp: f64, seed: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes = (1..=grid.num_modes)
        .map(|k| {
            let theta = rng.gen_range(0.0..std::f64::consts::TAU);
            Complex64::from_polar(amp * (k as f64).powf(-s - 0.5 - eps), theta)
        })
        .collect();
    SpectralField::from_positive_modes(grid, modes).expect("mode count matches the grid")
}

/// Analytic data `ĝ(ξ) = amp·e^{−decay·ξ}·e^{i(0.7ξ + 0.3)}`.
pub fn analytic_data(grid: Grid, amp: f64, decay: f64) -> SpectralField {
    let modes = (1..=grid.num_modes)
        .map(|k| Complex64::from_polar(amp * (-decay * k as f64).exp(), 0.7 * k as f64 + 0.3))
        .collect();
    SpectralField::from_positive_modes(grid, modes).expect("mode count matches the grid")
}

/// Slope of `log |f̂(ξ)|` against `log ξ` over `lo ≤ ξ ≤ hi`, ignoring zero modes.
pub fn spectral_slope(f: &SpectralField, lo: usize, hi: usize) -> Option<f64> {
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for xi in lo.max(1)..=hi.min(f.num_modes()) {
        let a = f.coeff(xi as i64).norm();
        if a > 0.0 {
            x.push((xi as f64).ln());
            y.push(a.ln());
        }
    }
    (x.len() >= 2).then(|| linear_fit(&x, &y).0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingRow {
    pub t: f64,
    /// `‖𝒢u(t) − S(t)g‖_{H^{s+a}}`, one entry per `a`.
    pub diff_norms: Vec<f64>,
    /// `‖S(t)g‖_{H^{s+a}}`, one entry per `a`.
    pub free_norms: Vec<f64>,
    /// Tail slope of `g` minus tail slope of the difference: the observed gain
    /// in decay rate. `None` when the difference vanishes on the tail.
    pub tail_gain: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingTable {
    pub s: f64,
    pub a_grid: Vec<f64>,
    pub num_modes: usize,
    pub alpha: f64,
    pub rows: Vec<SmoothingRow>,
}

impl SmoothingTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for a in &self.a_grid {
            let _ = write!(out, ",diff_a{a},free_a{a}");
        }
        out.push_str(",tail_gain\n");
        for r in &self.rows {
            let _ = write!(out, "{}", r.t);
            for (d, f) in r.diff_norms.iter().zip(&r.free_norms) {
                let _ = write!(out, ",{d},{f}");
            }
            match r.tail_gain {
                Some(g) => {
                    let _ = writeln!(out, ",{g}");
                }
                None => out.push_str(",\n"),
            }
        }
        out
    }
}

/// For every snapshot and every `a`, the size of `𝒢u(t) − S(t)g` in `H^{s+a}`.
/// Ungauged trajectories are gauge transformed first.
pub fn smoothing_table(traj: &Trajectory, g: &SpectralField, s: f64, a_grid: &[f64]) -> SmoothingTable {
    let gauged;
    let traj = if traj.config.gauged {
        traj
    } else {
        gauged = gauge_transform(traj, GaugeDirection::Forward);
        &gauged
    };
    let sym = traj.config.sym;
    let m = traj.config.grid.num_modes;
    let g = g.resample(traj.config.grid);
    let (lo, hi) = (m / 8, m / 2);
    let g_slope = spectral_slope(&g, lo, hi);
    let rows = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(&t, u)| {
            let free = free_evolve(&g, &sym, t);
            let diff = u.sub(&free);
            let tail_gain = match (g_slope, spectral_slope(&diff, lo, hi)) {
                (Some(pg), Some(pd)) if diff.max_abs_coeff() > 0.0 => Some(pg - pd),
                _ => None,
            };
            SmoothingRow {
                t,
                diff_norms: a_grid.iter().map(|a| hs_norm(&diff, s + a)).collect(),
                free_norms: a_grid.iter().map(|a| hs_norm(&free, s + a)).collect(),
                tail_gain,
            }
        })
        .collect();
    SmoothingTable {
        s,
        a_grid: a_grid.to_vec(),
        num_modes: m,
        alpha: sym.alpha(),
        rows,
    }
}

/// Regularity threshold `s(d, α)` and smoothing threshold `a(d, α)` of the
/// smoothing theorem for `deg P = d` and data in `H^s`.
pub fn smoothing_thresholds(d: usize, alpha: f64, s: f64) -> (f64, f64) {
    match d {
        0..=2 => (1.0 - alpha / 2.0, 2.0 * s + alpha - 2.0),
        3 => (1.0 - alpha / 4.0, 2.0 * s + alpha / 2.0 - 2.0),
        _ => (
            0.5 + 1.0 / (3.0 * alpha),
            3.0 * alpha / (alpha + 1.0) * s - (3.0 * alpha + 2.0) / (2.0 * (alpha + 1.0)),
        ),
    }
}

/// Largest admissible smoothing exponent: `min(a(d, α), α − 1)`.
pub fn predicted_smoothing(d: usize, alpha: f64, s: f64) -> f64 {
    smoothing_thresholds(d, alpha, s).1.min(alpha - 1.0)
}

/// `∫₀ᵗ S(t−t′)[∂x(S(t′)g)²] dt′` by summing over pairs in the support of `g`.
/// The result lives on a grid with twice the modes of `g`.
pub fn duhamel_quadratic(g: &SpectralField, sym: &DispersionSymbol, t: f64) -> SpectralField {
    let m = g.num_modes() as i64;
    let out_grid = Grid::new(2 * g.num_modes(), g.grid().dealias_fraction).expect("doubling a valid grid");
    let mut out = SpectralField::zeros(out_grid);
    let support: Vec<(i64, Complex64)> = (-m..=m)
        .filter(|&x| x != 0)
        .map(|x| (x, g.coeff(x)))
        .filter(|(_, c)| c.norm() > 0.0)
        .collect();
    let modes = out.positive_modes_mut();
    for &(x1, c1) in &support {
        for &(x2, c2) in &support {
            let xi = x1 + x2;
            if xi <= 0 {
                continue;
            }
            let om = big_omega_slice(&[x1, x2], sym);
            let xf = xi as f64;
            let time_factor = if om == 0.0 {
                Complex64::new(0.0, xf * t)
            } else {
                Complex64::new(xf, 0.0) * (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, -om * t)) / om
            };
            modes[(xi - 1) as usize] += time_factor * c1 * c2;
        }
    }
    for (i, c) in modes.iter_mut().enumerate() {
        *c *= Complex64::from_polar(1.0, sym.eval(i as i64 + 1) * t);
    }
    out
}

/// The same integral by composite Simpson quadrature over `2·panels`
/// subintervals, with the square evaluated pseudo-spectrally.
pub fn duhamel_quadratic_quadrature(g: &SpectralField, sym: &DispersionSymbol, t: f64, panels: usize) -> SpectralField {
    let out_grid = Grid::new(2 * g.num_modes(), g.grid().dealias_fraction).expect("doubling a valid grid");
    let wide = g.resample(out_grid);
    let tr = Transform::with_len(out_grid, (3 * out_grid.num_modes + 1).next_power_of_two());
    let n = 2 * panels.max(1);
    let h = t / n as f64;
    let mut acc = SpectralField::zeros(out_grid);
    for j in 0..=n {
        let tp = j as f64 * h;
        let w = if j == 0 || j == n {
            1.0
        } else if j % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let v = tr.to_physical(&free_evolve(&wide, sym, tp));
        let sq: Vec<f64> = v.iter().map(|x| x * x).collect();
        let mut f = tr.to_spectral(&sq);
        f.set_mean(0.0);
        for (i, c) in f.positive_modes_mut().iter_mut().enumerate() {
            *c *= Complex64::new(0.0, (i + 1) as f64);
        }
        acc.axpy(w * h / 3.0, &free_evolve(&f, sym, t - tp));
    }
    acc
}

/// `ĝ(±1) = 1`, `ĝ(±(N−1)) = N^{−s}`.
pub fn counterexample_data(n: usize, s: f64) -> Result<SpectralField> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("N must be at least 3, got {n}")));
    }
    let grid = Grid::new(n - 1, 0.5)?;
    SpectralField::from_pairs(
        grid,
        &[
            (1, Complex64::new(1.0, 0.0)),
            ((n - 1) as i64, Complex64::new((n as f64).powf(-s), 0.0)),
        ],
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleRow {
    pub n: usize,
    pub t_n: f64,
    pub norm: f64,
    pub data_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleTable {
    pub s: f64,
    pub a: f64,
    pub alpha: f64,
    pub rows: Vec<CounterexampleRow>,
    /// Least-squares slope of `log norm` against `log N`.
    pub fitted_exponent: f64,
    /// `a + 1 − α`.
    pub predicted_exponent: f64,
}

impl CounterexampleTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,t_n,norm,data_norm\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{}", r.n, r.t_n, r.norm, r.data_norm);
        }
        out
    }
}

/// For each `N`, the `H^{s+a}` norm of the quadratic Duhamel term of the
/// two-mode data at `t_N = π/Ω₂(N−1, 1)`, and the growth exponent in `N`.
pub fn counterexample_scan(n_list: &[usize], s: f64, a: f64, sym: &DispersionSymbol) -> Result<CounterexampleTable> {
    sym.validate()?;
    if n_list.len() < 2 {
        return Err(Error::InvalidParameter("need at least two values of N".into()));
    }
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let g = counterexample_data(n, s)?;
        let om = big_omega_slice(&[n as i64 - 1, 1], sym);
        let t_n = std::f64::consts::PI / om;
        let d = duhamel_quadratic(&g, sym, t_n);
        rows.push(CounterexampleRow {
            n,
            t_n,
            norm: hs_norm(&d, s + a),
            data_norm: hs_norm(&g, s),
        });
    }
    let x: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.norm.ln()).collect();
    Ok(CounterexampleTable {
        s,
        a,
        alpha: sym.alpha(),
        fitted_exponent: linear_fit(&x, &y).0,
        predicted_exponent: a + 1.0 - sym.alpha(),
        rows,
    })
}
