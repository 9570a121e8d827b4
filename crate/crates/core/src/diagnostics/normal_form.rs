//! Numerical check of the normal-form decomposition of `u(t) − S(t)g`.
//!
//! The right-hand side is assembled from the boundary terms at levels
//! `0..N−1`, the `R¹`, `R²`, `D` integrals at levels `0..N` and the `N`
//! integral at level `N`. With `depth_m = 1` every `D` integral is replaced by
//! its `D¹` part, the boundary term on `D²`, and the next-order integral over
//! all regions. Weights are evaluated with the cutoff `M`, which makes the
//! decomposition exact for the Galerkin-truncated flow computed by the solver.
//!
//! Time integrals `∫₀ᵗ S(t−t′)[T(u)(t′)] dt′` are computed per tuple in the
//! interaction picture: the slowly varying product `Π v̂(ξ_i, t′)` is
//! interpolated by cubics through the snapshots and integrated exactly against
//! `e^{−iΩt′}`.

use std::collections::HashMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multipliers::{identity_factor, nu, PolynomialSpec, SymbolEval, TermKind, TermSpec};
use crate::resonance::{big_omega_slice, PartitionConstants};
use crate::solver::{gauge_transform, GaugeDirection, Trajectory};
use crate::spectral::DispersionSymbol;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalFormOptions {
    pub depth_n: usize,
    pub depth_m: usize,
    /// Sobolev index of the residual norm.
    pub s: f64,
    pub consts: PartitionConstants,
    /// Also evaluate the right-hand side with the cutoff `M/2`.
    pub truncation_check: bool,
}

impl Default for NormalFormOptions {
    fn default() -> Self {
        NormalFormOptions {
            depth_n: 1,
            depth_m: 0,
            s: 0.0,
            consts: PartitionConstants::default(),
            truncation_check: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalFormReport {
    pub depth_n: usize,
    pub depth_m: usize,
    pub num_modes: usize,
    pub s: f64,
    pub times: Vec<f64>,
    pub lhs_norms: Vec<f64>,
    /// `‖LHS − RHS‖ / ‖LHS‖` per snapshot (0 where both sides vanish).
    pub identity_residual: Vec<f64>,
    /// `‖RHS_M − RHS_{M/2}‖ / ‖LHS‖` per snapshot; empty when not requested.
    pub truncation_residual: Vec<f64>,
    pub max_identity_residual: f64,
    pub max_truncation_residual: Option<f64>,
    /// Number of tuples with a nonzero weight, per arity.
    pub tuple_counts: Vec<(usize, usize)>,
    /// Largest `|weight|` of the level-0 `R¹` terms over the resolved box.
    pub r1_level0_max: f64,
}

impl NormalFormReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,lhs_norm,identity_residual,truncation_residual\n");
        for (i, t) in self.times.iter().enumerate() {
            let tr = self
                .truncation_residual
                .get(i)
                .map(|v| v.to_string())
                .unwrap_or_default();
            out.push_str(&format!("{t},{},{},{tr}\n", self.lhs_norms[i], self.identity_residual[i]));
        }
        out
    }
}

/// A tuple with its aggregated integral and boundary weights.
#[derive(Debug, Clone)]
struct WeightedTuple {
    xs: Vec<i64>,
    omega: f64,
    integral: Complex64,
    boundary: Complex64,
}

/// Terms contributing at one arity.
#[derive(Debug, Default)]
struct ArityTerms {
    integral: Vec<(TermSpec, Complex64)>,
    boundary: Vec<(TermSpec, Complex64)>,
    /// `(k_list, l₁, factor)`: depth-one expansion integrals over all regions.
    frak_rest: Vec<(Vec<usize>, usize, Complex64)>,
}

fn k_lists(len: usize, d: usize, poly: &PolynomialSpec) -> Vec<Vec<usize>> {
    let ks: Vec<usize> = (2..=d).filter(|&k| poly.coeff(k) != 0.0).collect();
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|p| {
                ks.iter().map(move |&k| {
                    let mut q = p.clone();
                    q.push(k);
                    q
                })
            })
            .collect();
    }
    out
}

fn collect_terms(poly: &PolynomialSpec, depth_n: usize, depth_m: usize) -> HashMap<usize, ArityTerms> {
    let d = poly.degree();
    let mut map: HashMap<usize, ArityTerms> = HashMap::new();
    let spec = |kind, k: &[usize], l: &[usize]| TermSpec {
        kind,
        k_list: k.to_vec(),
        l_list: l.to_vec(),
        d,
    };
    for n in 0..=depth_n {
        for k in k_lists(n + 1, d, poly) {
            let arity = nu(&k);
            let kappa = identity_factor(n, 0);
            let coef = spec(TermKind::N, &k, &[]).coefficient(poly);
            let entry = map.entry(arity).or_default();
            let w = kappa * coef;
            entry.integral.push((spec(TermKind::R1, &k, &[]), w));
            entry.integral.push((spec(TermKind::R2, &k, &[]), w));
            if n == depth_n {
                entry.integral.push((spec(TermKind::N, &k, &[]), w));
            } else {
                entry.boundary.push((spec(TermKind::B, &k, &[]), w));
            }
            if depth_m == 0 {
                entry.integral.push((spec(TermKind::D, &k, &[]), w));
            } else {
                entry.integral.push((spec(TermKind::FrakR, &k, &[]), w));
                entry.boundary.push((spec(TermKind::FrakB, &k, &[]), w));
                for l in (2..=d).filter(|&l| poly.coeff(l) != 0.0) {
                    let factor = identity_factor(n, 1) * coef * poly.coeff(l);
                    map.entry(arity + l - 1).or_default().frak_rest.push((k.clone(), l, factor));
                }
            }
        }
    }
    map
}

/// Calls `f` on every tuple of `arity` nonzero entries in `[−cut, cut]` whose
/// sum lies in `1..=cut`.
fn for_each_tuple<F: FnMut(&[i64])>(arity: usize, cut: i64, first: i64, f: &mut F) {
    let mut xs = vec![0i64; arity];
    xs[0] = first;
    fn rec<F: FnMut(&[i64])>(xs: &mut Vec<i64>, pos: usize, partial: i64, cut: i64, f: &mut F) {
        let arity = xs.len();
        if pos == arity - 1 {
            for xi in 1..=cut {
                let last = xi - partial;
                if last != 0 && last.abs() <= cut {
                    xs[pos] = last;
                    f(xs);
                }
            }
            return;
        }
        for x in -cut..=cut {
            if x != 0 {
                xs[pos] = x;
                rec(xs, pos + 1, partial + x, cut, f);
            }
        }
    }
    if arity == 1 {
        if (1..=cut).contains(&first) {
            f(&xs);
        }
        return;
    }
    rec(&mut xs, 1, first, cut, f);
}

fn weight_table(
    poly: &PolynomialSpec,
    sym: &DispersionSymbol,
    consts: &PartitionConstants,
    opts: &NormalFormOptions,
    cut: i64,
) -> Vec<WeightedTuple> {
    let terms = collect_terms(poly, opts.depth_n, opts.depth_m);
    let ev = SymbolEval::new(sym, consts).with_cutoff(cut);
    let mut arities: Vec<usize> = terms.keys().copied().collect();
    arities.sort_unstable();
    let mut out = Vec::new();
    for arity in arities {
        let t = &terms[&arity];
        let firsts: Vec<i64> = (-cut..=cut).filter(|&x| x != 0).collect();
        let chunk: Vec<WeightedTuple> = firsts
            .par_iter()
            .flat_map_iter(|&first| {
                let mut local = Vec::new();
                for_each_tuple(arity, cut, first, &mut |xs: &[i64]| {
                    let mut integral = Complex64::default();
                    let mut boundary = Complex64::default();
                    for (spec, w) in &t.integral {
                        integral += w * ev.term::<Complex64>(spec, xs);
                    }
                    for (spec, w) in &t.boundary {
                        boundary += w * ev.term::<Complex64>(spec, xs);
                    }
                    if !t.frak_rest.is_empty() {
                        let xi: i64 = xs.iter().sum();
                        for (k, l, w) in &t.frak_rest {
                            let m: Complex64 = ev.mfrak(k, &[*l], xs);
                            integral += w * m * xi as f64;
                        }
                    }
                    if integral.norm() > 0.0 || boundary.norm() > 0.0 {
                        local.push(WeightedTuple {
                            xs: xs.to_vec(),
                            omega: big_omega_slice(xs, sym),
                            integral,
                            boundary,
                        });
                    }
                });
                local
            })
            .collect();
        out.extend(chunk);
    }
    out
}

/// `m_k(θ) = ∫₀¹ τ^k e^{−iθτ} dτ` for `k = 0..=3`.
fn moments(theta: f64) -> [Complex64; 4] {
    let mut m = [Complex64::default(); 4];
    if theta.abs() < 4.0 {
        let z = Complex64::new(0.0, -theta);
        for (k, slot) in m.iter_mut().enumerate() {
            let mut term = Complex64::new(1.0, 0.0);
            let mut acc = Complex64::default();
            for j in 0..60 {
                if j > 0 {
                    term = term * z / j as f64;
                }
                acc += term / (k + j + 1) as f64;
            }
            *slot = acc;
        }
    } else {
        let e = Complex64::from_polar(1.0, -theta);
        let iz = Complex64::new(0.0, -theta);
        m[0] = (Complex64::new(1.0, 0.0) - e) / Complex64::new(0.0, theta);
        for k in 1..4 {
            m[k] = (e - m[k - 1] * k as f64) / iz;
        }
    }
    m
}

/// Monomial coefficients of the cubic Lagrange basis on the nodes `o..o+3`.
fn lagrange_basis(o: i32) -> [[f64; 4]; 4] {
    let nodes: Vec<f64> = (0..4).map(|r| (o + r) as f64).collect();
    let mut out = [[0.0; 4]; 4];
    for r in 0..4 {
        let mut poly = vec![1.0];
        let mut denom = 1.0;
        for q in 0..4 {
            if q == r {
                continue;
            }
            let mut next = vec![0.0; poly.len() + 1];
            for (i, &c) in poly.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= c * nodes[q];
            }
            poly = next;
            denom *= nodes[r] - nodes[q];
        }
        for (k, c) in poly.iter().enumerate() {
            out[r][k] = c / denom;
        }
    }
    out
}

struct Evaluation {
    lhs: Vec<Vec<Complex64>>,
    rhs: Vec<Vec<Complex64>>,
}

fn hs_sq(v: &[Complex64], s: f64) -> f64 {
    2.0 * v
        .iter()
        .enumerate()
        .map(|(i, c)| ((i + 1) as f64).powf(2.0 * s) * c.norm_sqr())
        .sum::<f64>()
}

fn evaluate_rhs(traj: &Trajectory, table: &[WeightedTuple], h: f64) -> Vec<Vec<Complex64>> {
    let m = traj.config.grid.num_modes;
    let sym = traj.config.sym;
    let nt = traj.len();
    let g = traj.initial();
    // û and v̂ = e^{−iωt}û on ξ ∈ [−M, M], index ξ + M
    let coeffs = |f: &crate::spectral::SpectralField| -> Vec<Complex64> {
        (-(m as i64)..=m as i64).map(|x| f.coeff(x)).collect()
    };
    let u_all: Vec<Vec<Complex64>> = traj.states.iter().map(coeffs).collect();
    let v_all: Vec<Vec<Complex64>> = traj
        .times
        .iter()
        .zip(&u_all)
        .map(|(&t, u)| {
            (-(m as i64)..=m as i64)
                .zip(u)
                .map(|(x, c)| {
                    if x == 0 {
                        *c
                    } else {
                        c * Complex64::from_polar(1.0, -sym.eval(x) * t)
                    }
                })
                .collect()
        })
        .collect();
    let g_all = coeffs(g);
    let idx = |x: i64| (x + m as i64) as usize;
    let bases = [lagrange_basis(0), lagrange_basis(-1), lagrange_basis(-2)];

    let mut by_output: Vec<Vec<&WeightedTuple>> = vec![Vec::new(); m];
    for wt in table {
        let xi: i64 = wt.xs.iter().sum();
        by_output[(xi - 1) as usize].push(wt);
    }
    let rows: Vec<Vec<Complex64>> = by_output
        .par_iter()
        .enumerate()
        .map(|(i, tuples)| {
            let xi = (i + 1) as i64;
            let mut boundary_g = Complex64::default();
            let mut boundary = vec![Complex64::default(); nt];
            let mut integral = vec![Complex64::default(); nt];
            let mut p = vec![Complex64::default(); nt];
            for wt in tuples {
                if wt.boundary.norm() > 0.0 {
                    boundary_g += wt.boundary * wt.xs.iter().map(|&x| g_all[idx(x)]).product::<Complex64>();
                    for (j, u) in u_all.iter().enumerate() {
                        boundary[j] += wt.boundary * wt.xs.iter().map(|&x| u[idx(x)]).product::<Complex64>();
                    }
                }
                if wt.integral.norm() == 0.0 {
                    continue;
                }
                for (j, v) in v_all.iter().enumerate() {
                    p[j] = wt.xs.iter().map(|&x| v[idx(x)]).product();
                }
                let mo = moments(wt.omega * h);
                let weights: Vec<[Complex64; 4]> = bases
                    .iter()
                    .map(|b| {
                        let mut w = [Complex64::default(); 4];
                        for r in 0..4 {
                            for k in 0..4 {
                                w[r] += mo[k] * b[r][k];
                            }
                        }
                        w
                    })
                    .collect();
                let mut cum = Complex64::default();
                let intervals = nt - 1;
                for j in 0..intervals {
                    let start = j.saturating_sub(1).min(intervals - 3);
                    let w = &weights[j - start];
                    let mut s = Complex64::default();
                    for r in 0..4 {
                        s += w[r] * p[start + r];
                    }
                    cum += s * Complex64::from_polar(h, -wt.omega * traj.times[j]);
                    integral[j + 1] += wt.integral * cum;
                }
            }
            (0..nt)
                .map(|j| {
                    let t = traj.times[j];
                    let phase = Complex64::from_polar(1.0, sym.eval(xi) * t);
                    boundary[j] - phase * boundary_g + phase * integral[j]
                })
                .collect()
        })
        .collect();
    // transpose to [snapshot][mode]
    (0..nt).map(|j| rows.iter().map(|r| r[j]).collect()).collect()
}

fn lhs(traj: &Trajectory) -> Vec<Vec<Complex64>> {
    let sym = traj.config.sym;
    let g = traj.initial();
    traj.times
        .iter()
        .zip(&traj.states)
        .map(|(&t, u)| {
            u.positive_modes()
                .iter()
                .zip(g.positive_modes())
                .enumerate()
                .map(|(i, (a, b))| a - b * Complex64::from_polar(1.0, sym.eval(i as i64 + 1) * t))
                .collect()
        })
        .collect()
}

/// Compares `u(t) − S(t)g` with the normal-form decomposition at every
/// snapshot. Ungauged trajectories are gauge transformed first.
pub fn normal_form_residual(traj: &Trajectory, opts: &NormalFormOptions) -> Result<NormalFormReport> {
    if opts.depth_m > 1 {
        return Err(Error::InvalidParameter("depth_m above 1 is not supported".into()));
    }
    opts.consts.validate()?;
    let gauged;
    let traj = if traj.config.gauged {
        traj
    } else {
        gauged = gauge_transform(traj, GaugeDirection::Forward);
        &gauged
    };
    let nt = traj.len();
    if nt < 4 {
        return Err(Error::InsufficientSnapshots(format!(
            "cubic quadrature needs at least 4 snapshots, got {nt}"
        )));
    }
    let h = traj.times[1] - traj.times[0];
    for w in traj.times.windows(2) {
        if ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1.0) {
            return Err(Error::InsufficientSnapshots(
                "snapshots must be uniformly spaced; choose t_end as a multiple of dt·stride".into(),
            ));
        }
    }
    let poly = &traj.config.poly;
    let sym = traj.config.sym;
    let m = traj.config.grid.num_modes;
    let table = if poly.is_zero() {
        Vec::new()
    } else {
        weight_table(poly, &sym, &opts.consts, opts, m as i64)
    };
    let ev = Evaluation {
        lhs: lhs(traj),
        rhs: if poly.is_zero() {
            vec![vec![Complex64::default(); m]; nt]
        } else {
            evaluate_rhs(traj, &table, h)
        },
    };
    let mut counts: HashMap<usize, usize> = HashMap::new();
    for wt in &table {
        *counts.entry(wt.xs.len()).or_default() += 1;
    }
    let mut table_counts: Vec<(usize, usize)> = counts.into_iter().collect();
    table_counts.sort_unstable();
    let half = if opts.truncation_check && !poly.is_zero() && m >= 2 {
        Some(evaluate_rhs(
            traj,
            &weight_table(poly, &sym, &opts.consts, opts, (m / 2) as i64),
            h,
        ))
    } else {
        None
    };

    let mut lhs_norms = Vec::with_capacity(nt);
    let mut identity_residual = Vec::with_capacity(nt);
    let mut truncation_residual = Vec::new();
    for j in 0..nt {
        let l = hs_sq(&ev.lhs[j], opts.s).sqrt();
        let diff: Vec<Complex64> = ev.lhs[j].iter().zip(&ev.rhs[j]).map(|(a, b)| a - b).collect();
        let r = hs_sq(&diff, opts.s).sqrt();
        lhs_norms.push(l);
        identity_residual.push(relative(r, l));
        if let Some(hf) = &half {
            let d: Vec<Complex64> = ev.rhs[j].iter().zip(&hf[j]).map(|(a, b)| a - b).collect();
            truncation_residual.push(relative(hs_sq(&d, opts.s).sqrt(), l));
        }
    }
    let max_identity_residual = identity_residual.iter().copied().fold(0.0, f64::max);
    let max_truncation_residual = half.as_ref().map(|_| truncation_residual.iter().copied().fold(0.0, f64::max));
    Ok(NormalFormReport {
        depth_n: opts.depth_n,
        depth_m: opts.depth_m,
        num_modes: m,
        s: opts.s,
        times: traj.times.clone(),
        lhs_norms,
        identity_residual,
        truncation_residual,
        max_identity_residual,
        max_truncation_residual,
        tuple_counts: table_counts,
        r1_level0_max: r1_level0_max(poly, &sym, &opts.consts, m as i64),
    })
}

fn relative(r: f64, l: f64) -> f64 {
    if r == 0.0 {
        0.0
    } else {
        r / l
    }
}

fn r1_level0_max(poly: &PolynomialSpec, sym: &DispersionSymbol, consts: &PartitionConstants, cut: i64) -> f64 {
    let ev = SymbolEval::new(sym, consts).with_cutoff(cut);
    let d = poly.degree();
    let mut worst = 0.0f64;
    for k0 in (2..=d).filter(|&k| poly.coeff(k) != 0.0 && k <= 3) {
        let spec = TermSpec {
            kind: TermKind::R1,
            k_list: vec![k0],
            l_list: Vec::new(),
            d,
        };
        for first in (-cut..=cut).filter(|&x| x != 0) {
            for_each_tuple(k0, cut, first, &mut |xs: &[i64]| {
                worst = worst.max(ev.term::<Complex64>(&spec, xs).norm());
            });
        }
    }
    worst
}
