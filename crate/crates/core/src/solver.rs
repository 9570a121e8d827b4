//! Pseudo-spectral ETDRK4 integration of the evolution
//! `∂t û = iω(ξ) û + N(u)^(ξ)`, with `N(u) = −∂x P(u)` or, in gauged form,
//! `N(u) = −𝐏(P′(u)) ∂x u`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multipliers::PolynomialSpec;
use crate::resonance::PartitionConstants;
use crate::spectral::{hs_norm, DispersionSymbol, Grid, SpectralField, Transform};

/// Default amplitude above which a run is declared blown up.
pub const OVERFLOW_GUARD: f64 = 1e12;

const CONTOUR_POINTS: usize = 32;

/// How the physical grid for nonlinear products is sized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dealias {
    /// Pad to the smallest power of two with at least `(d+1)M + 1` points.
    Auto,
    /// Use the grid's `dealias_fraction` and fail if it is too small for `P`.
    Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub grid: Grid,
    pub sym: DispersionSymbol,
    pub poly: PolynomialSpec,
    pub gauged: bool,
    pub dt: f64,
    pub t_end: f64,
    pub snapshot_stride: usize,
    pub dealias: Dealias,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.sym.validate()?;
        self.poly.validate()?;
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "t_end must be nonnegative, got {}",
                self.t_end
            )));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::InvalidParameter("snapshot_stride must be positive".into()));
        }
        if self.dealias == Dealias::Grid {
            self.grid.check_degree(product_degree(&self.poly))?;
        }
        Ok(())
    }

    /// Number of steps; the step is shrunk to `t_end / steps` so the run ends
    /// exactly at `t_end`.
    pub fn num_steps(&self) -> usize {
        if self.t_end == 0.0 {
            return 0;
        }
        (self.t_end / self.dt - 1e-9).ceil().max(1.0) as usize
    }

    pub fn effective_dt(&self) -> f64 {
        match self.num_steps() {
            0 => self.dt,
            n => self.t_end / n as f64,
        }
    }
}

fn product_degree(poly: &PolynomialSpec) -> usize {
    poly.degree().max(1)
}

/// Physical length that makes degree-`d` products and the `∫F(u)` quadrature
/// exact on `M` modes.
fn alias_free_len(num_modes: usize, degree: usize) -> usize {
    ((degree + 1) * num_modes + 1).next_power_of_two()
}

/// Evaluator of the nonlinear term on a fixed grid.
#[derive(Debug)]
pub struct NonlinearRhs {
    transform: Transform,
    poly: PolynomialSpec,
    gauged: bool,
    wavenumbers: Vec<f64>,
}

impl NonlinearRhs {
    pub fn new(grid: Grid, poly: &PolynomialSpec, gauged: bool, dealias: Dealias) -> Result<Self> {
        grid.validate()?;
        poly.validate()?;
        let degree = product_degree(poly);
        let transform = match dealias {
            Dealias::Auto => Transform::with_len(grid, alias_free_len(grid.num_modes, degree)),
            Dealias::Grid => {
                grid.check_degree(degree)?;
                Transform::new(grid)
            }
        };
        Ok(NonlinearRhs {
            transform,
            poly: poly.clone(),
            gauged,
            wavenumbers: (1..=grid.num_modes).map(|k| k as f64).collect(),
        })
    }

    pub fn transform(&self) -> &Transform {
        &self.transform
    }

    /// The nonlinear term together with the spatial mean of `P′(u)`.
    pub fn eval_with_drift(&self, f: &SpectralField) -> (SpectralField, f64) {
        let grid = f.grid();
        if self.poly.is_zero() {
            return (SpectralField::zeros(grid), 0.0);
        }
        let u = self.transform.to_physical(f);
        let dp: Vec<f64> = u.iter().map(|&x| self.poly.eval_derivative(x)).collect();
        let drift = self.transform.mean_of(&dp);
        let mut out = if self.gauged {
            let mut du = f.clone();
            du.set_mean(0.0);
            for (c, k) in du.positive_modes_mut().iter_mut().zip(&self.wavenumbers) {
                *c *= Complex64::new(0.0, *k);
            }
            let ux = self.transform.to_physical(&du);
            let prod: Vec<f64> = dp.iter().zip(&ux).map(|(p, d)| -(p - drift) * d).collect();
            self.transform.to_spectral(&prod)
        } else {
            let pu: Vec<f64> = u.iter().map(|&x| self.poly.eval(x)).collect();
            let mut out = self.transform.to_spectral(&pu);
            for (c, k) in out.positive_modes_mut().iter_mut().zip(&self.wavenumbers) {
                *c *= Complex64::new(0.0, -*k);
            }
            out
        };
        out.set_mean(0.0);
        (out, drift)
    }

    pub fn eval(&self, f: &SpectralField) -> SpectralField {
        self.eval_with_drift(f).0
    }
}

/// One-shot evaluation of the nonlinear term with automatic padding.
pub fn nonlinear_rhs(f: &SpectralField, poly: &PolynomialSpec, gauged: bool) -> Result<SpectralField> {
    if !f.is_mean_zero() {
        return Err(Error::InvalidParameter("nonlinear_rhs expects a mean-zero field".into()));
    }
    Ok(NonlinearRhs::new(f.grid(), poly, gauged, Dealias::Auto)?.eval(f))
}

/// ETDRK4 coefficients for a diagonal linear part `L = iω(ξ)`.
#[derive(Debug, Clone)]
struct EtdCoefficients {
    e: Vec<Complex64>,
    e2: Vec<Complex64>,
    q: Vec<Complex64>,
    f1: Vec<Complex64>,
    f2: Vec<Complex64>,
    f3: Vec<Complex64>,
}

impl EtdCoefficients {
    fn new(grid: Grid, sym: &DispersionSymbol, h: f64) -> Self {
        let m = grid.num_modes;
        let mut c = EtdCoefficients {
            e: Vec::with_capacity(m),
            e2: Vec::with_capacity(m),
            q: Vec::with_capacity(m),
            f1: Vec::with_capacity(m),
            f2: Vec::with_capacity(m),
            f3: Vec::with_capacity(m),
        };
        let roots: Vec<Complex64> = (0..CONTOUR_POINTS)
            .map(|j| Complex64::from_polar(1.0, std::f64::consts::PI * (j as f64 + 0.5) / CONTOUR_POINTS as f64 * 2.0))
            .collect();
        for xi in 1..=m as i64 {
            let lh = Complex64::new(0.0, sym.eval(xi) * h);
            c.e.push(lh.exp());
            c.e2.push((lh * 0.5).exp());
            let (mut q, mut f1, mut f2, mut f3) = (Complex64::default(), Complex64::default(), Complex64::default(), Complex64::default());
            for r in &roots {
                let z = lh + r;
                let ez = z.exp();
                let z3 = z * z * z;
                q += ((z * 0.5).exp() - 1.0) / z;
                f1 += (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3;
                f2 += (2.0 + z + ez * (z - 2.0)) / z3;
                f3 += (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3;
            }
            let w = h / CONTOUR_POINTS as f64;
            c.q.push(q * w);
            c.f1.push(f1 * w);
            c.f2.push(f2 * w);
            c.f3.push(f3 * w);
        }
        c
    }
}

fn combine(out: &mut SpectralField, terms: &[(&[Complex64], &SpectralField)]) {
    for (i, slot) in out.positive_modes_mut().iter_mut().enumerate() {
        *slot = terms.iter().map(|(w, f)| w[i] * f.positive_modes()[i]).sum();
    }
    out.set_mean(0.0);
}

/// Snapshots of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub config: SimConfig,
    pub times: Vec<f64>,
    pub states: Vec<SpectralField>,
    /// `c(t) = ∫₀ᵗ mean(P′(u)) dt′`, the spatial shift of the gauge transform.
    pub gauge_shift: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn initial(&self) -> &SpectralField {
        &self.states[0]
    }

    pub fn last(&self) -> &SpectralField {
        self.states.last().expect("trajectory has at least one snapshot")
    }
}

fn check_state(f: &SpectralField, time: f64, guard: f64) -> Result<()> {
    let amp = f.max_abs_coeff();
    if !f.is_finite() || amp > guard {
        return Err(Error::BlowUp { time, amplitude: amp });
    }
    if !f.is_mean_zero() {
        return Err(Error::InvariantViolation(format!("nonzero mean {} at t = {time}", f.mean())));
    }
    Ok(())
}

/// Integrates `cfg` from `g` with ETDRK4. The gauge shift is advanced with the
/// classical fourth-order weights applied to the drift at the same stages.
pub fn integrate(cfg: &SimConfig, g: &SpectralField) -> Result<Trajectory> {
    cfg.validate()?;
    if g.grid().num_modes != cfg.grid.num_modes {
        return Err(Error::LengthMismatch {
            expected: cfg.grid.num_modes,
            got: g.grid().num_modes,
        });
    }
    if !g.is_mean_zero() {
        return Err(Error::InvalidParameter("initial data must be mean-zero".into()));
    }
    let g = g.resample(cfg.grid);
    let rhs = NonlinearRhs::new(cfg.grid, &cfg.poly, cfg.gauged, cfg.dealias)?;
    let steps = cfg.num_steps();
    let h = cfg.effective_dt();
    let co = EtdCoefficients::new(cfg.grid, &cfg.sym, h);

    let mut traj = Trajectory {
        config: cfg.clone(),
        times: vec![0.0],
        states: vec![g.clone()],
        gauge_shift: vec![0.0],
    };
    let mut u = g;
    let mut shift = 0.0;
    let mut a = SpectralField::zeros(cfg.grid);
    let mut b = SpectralField::zeros(cfg.grid);
    let mut c = SpectralField::zeros(cfg.grid);
    let mut next = SpectralField::zeros(cfg.grid);
    for step in 1..=steps {
        let (nu, du) = rhs.eval_with_drift(&u);
        combine(&mut a, &[(&co.e2, &u), (&co.q, &nu)]);
        let (na, da) = rhs.eval_with_drift(&a);
        combine(&mut b, &[(&co.e2, &u), (&co.q, &na)]);
        let (nb, db) = rhs.eval_with_drift(&b);
        let mut nb2 = nb.scaled(2.0);
        nb2.axpy(-1.0, &nu);
        combine(&mut c, &[(&co.e2, &a), (&co.q, &nb2)]);
        let (nc, dc) = rhs.eval_with_drift(&c);
        let mut nab = na.clone();
        nab.axpy(1.0, &nb);
        let two_f2: Vec<Complex64> = co.f2.iter().map(|z| z * 2.0).collect();
        combine(&mut next, &[(&co.e, &u), (&co.f1, &nu), (&two_f2, &nab), (&co.f3, &nc)]);
        shift += h / 6.0 * (du + 2.0 * da + 2.0 * db + dc);
        std::mem::swap(&mut u, &mut next);
        let t = step as f64 * h;
        if step % cfg.snapshot_stride == 0 || step == steps {
            check_state(&u, t, OVERFLOW_GUARD)?;
            traj.times.push(t);
            traj.states.push(u.clone());
            traj.gauge_shift.push(shift);
        }
    }
    Ok(traj)
}

/// Direction of the gauge transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaugeDirection {
    Forward,
    Inverse,
}

/// Translates `f` by `∓c`: `Forward` maps `u(x)` to `u(x + c)`, i.e. mode `ξ`
/// picks up `e^{iξc}`.
pub fn gauge_shift_field(f: &SpectralField, c: f64, direction: GaugeDirection) -> SpectralField {
    let sign = match direction {
        GaugeDirection::Forward => 1.0,
        GaugeDirection::Inverse => -1.0,
    };
    let mut out = f.clone();
    for (i, z) in out.positive_modes_mut().iter_mut().enumerate() {
        *z *= Complex64::from_polar(1.0, sign * (i + 1) as f64 * c);
    }
    out
}

/// Applies the gauge transform snapshot by snapshot. `Forward` sends an
/// ungauged solution to the corresponding solution of the gauged equation.
pub fn gauge_transform(traj: &Trajectory, direction: GaugeDirection) -> Trajectory {
    let mut out = traj.clone();
    for (state, &c) in out.states.iter_mut().zip(&traj.gauge_shift) {
        *state = gauge_shift_field(state, c, direction);
    }
    out.config.gauged = match direction {
        GaugeDirection::Forward => true,
        GaugeDirection::Inverse => false,
    };
    out
}

/// Mean, mass and energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conserved {
    pub mean: f64,
    pub mass: f64,
    pub energy: f64,
}

/// `∫u`, `∫u²` and `∫ ½|D^{α/2}u|² − F(u)` over one period.
pub fn conserved_quantities(f: &SpectralField, poly: &PolynomialSpec, sym: &DispersionSymbol) -> Conserved {
    let two_pi = 2.0 * std::f64::consts::PI;
    let alpha = sym.alpha();
    let mut mass_tail = 0.0;
    let mut kinetic = 0.0;
    for (i, c) in f.positive_modes().iter().enumerate() {
        let k = (i + 1) as f64;
        mass_tail += c.norm_sqr();
        kinetic += k.powf(alpha) * c.norm_sqr();
    }
    let mean = f.mean();
    let mass = two_pi * (mean * mean + 2.0 * mass_tail);
    let potential = if poly.is_zero() {
        0.0
    } else {
        let len = alias_free_len(f.num_modes(), poly.degree() + 1);
        let tr = Transform::with_len(f.grid(), len);
        let u = tr.to_physical(f);
        let fu: Vec<f64> = u.iter().map(|&x| poly.eval_antiderivative(x)).collect();
        two_pi * tr.mean_of(&fu)
    };
    Conserved {
        mean: two_pi * mean,
        mass,
        energy: two_pi * kinetic - potential,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SnapshotEntry {
    index: usize,
    time: f64,
    gauge_shift: f64,
    mean: f64,
    file: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Manifest {
    format: String,
    num_modes: usize,
    snapshots: Vec<SnapshotEntry>,
}

const SNAPSHOT_FORMAT: &str = "f64le-interleaved-re-im, xi = 1..M";

#[derive(Serialize, Deserialize)]
struct ConfigFile {
    sim: SimConfig,
    partition_constants: PartitionConstants,
}

/// Writes `config.json`, `manifest.json`, `snapshots/*.bin` and `norms.csv`
/// (`t, mass, energy` plus one `H^s` column per entry of `hs`).
pub fn save_trajectory(traj: &Trajectory, dir: &Path, consts: &PartitionConstants, hs: &[f64]) -> Result<()> {
    fs::create_dir_all(dir.join("snapshots"))?;
    let cfg = ConfigFile {
        sim: traj.config.clone(),
        partition_constants: *consts,
    };
    fs::write(dir.join("config.json"), serde_json::to_string_pretty(&cfg)?)?;
    let mut entries = Vec::with_capacity(traj.len());
    for (i, state) in traj.states.iter().enumerate() {
        let file = format!("snapshots/{i:06}.bin");
        let mut bytes = Vec::with_capacity(16 * state.num_modes());
        for c in state.positive_modes() {
            bytes.extend_from_slice(&c.re.to_le_bytes());
            bytes.extend_from_slice(&c.im.to_le_bytes());
        }
        fs::write(dir.join(&file), bytes)?;
        entries.push(SnapshotEntry {
            index: i,
            time: traj.times[i],
            gauge_shift: traj.gauge_shift[i],
            mean: state.mean(),
            file,
        });
    }
    let manifest = Manifest {
        format: SNAPSHOT_FORMAT.into(),
        num_modes: traj.config.grid.num_modes,
        snapshots: entries,
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;

    let mut w = BufWriter::new(fs::File::create(dir.join("norms.csv"))?);
    write!(w, "t,mass,energy")?;
    for s in hs {
        write!(w, ",h{s}")?;
    }
    writeln!(w)?;
    for (t, state) in traj.times.iter().zip(&traj.states) {
        let q = conserved_quantities(state, &traj.config.poly, &traj.config.sym);
        write!(w, "{t},{},{}", q.mass, q.energy)?;
        for &s in hs {
            write!(w, ",{}", hs_norm(state, s))?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a directory written by [`save_trajectory`].
pub fn load_trajectory(dir: &Path) -> Result<(Trajectory, PartitionConstants)> {
    let cfg: ConfigFile = serde_json::from_str(&fs::read_to_string(dir.join("config.json"))?)?;
    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
    let grid = cfg.sim.grid;
    if manifest.num_modes != grid.num_modes {
        return Err(Error::LengthMismatch {
            expected: grid.num_modes,
            got: manifest.num_modes,
        });
    }
    let mut traj = Trajectory {
        config: cfg.sim,
        times: Vec::new(),
        states: Vec::new(),
        gauge_shift: Vec::new(),
    };
    for e in &manifest.snapshots {
        let bytes = fs::read(dir.join(&e.file))?;
        if bytes.len() != 16 * grid.num_modes {
            return Err(Error::LengthMismatch {
                expected: 16 * grid.num_modes,
                got: bytes.len(),
            });
        }
        let modes = bytes
            .chunks_exact(16)
            .map(|ch| {
                let re = f64::from_le_bytes(ch[..8].try_into().unwrap());
                let im = f64::from_le_bytes(ch[8..].try_into().unwrap());
                Complex64::new(re, im)
            })
            .collect();
        let mut f = SpectralField::from_positive_modes(grid, modes)?;
        f.set_mean(e.mean);
        traj.times.push(e.time);
        traj.gauge_shift.push(e.gauge_shift);
        traj.states.push(f);
    }
    Ok((traj, cfg.partition_constants))
}
