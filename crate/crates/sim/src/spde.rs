//! Brownian ensembles and the forward stochastic Ginzburg-Landau solver
//!
//! ```text
//! dw − (1+ib) w_xx dt = (a1 w_x + a2 w + f) dt + (a3 w + g) dB   on (0,1),  w = 0 at x ∈ {0,1}
//! ```
//!
//! stepped semi-implicitly: diffusion implicit, everything else explicit,
//! one complex tridiagonal solve per step.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("invalid problem: {0}")]
    Problem(String),
    #[error("ensemble does not match the grid: {0}")]
    Ensemble(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    /// interior points on (0,1)
    pub nx: usize,
    pub nt: usize,
    pub t_final: f64,
}

impl Grid1D {
    pub fn new(nx: usize, nt: usize, t_final: f64) -> Result<Self, SimError> {
        if nx < 3 || nt < 1 || !(t_final > 0.0) {
            return Err(SimError::Grid(format!("need nx >= 3, nt >= 1, T > 0; got nx = {nx}, nt = {nt}, T = {t_final}")));
        }
        Ok(Grid1D { nx, nt, t_final })
    }

    pub fn dx(&self) -> f64 {
        1.0 / (self.nx + 1) as f64
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.nt as f64
    }

    /// Interior node `i` in `0..nx`.
    pub fn x(&self, i: usize) -> f64 {
        (i + 1) as f64 * self.dx()
    }

    pub fn t(&self, m: usize) -> f64 {
        m as f64 * self.dt()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    /// Step index closest to `t`.
    pub fn step_of(&self, t: f64) -> usize {
        ((t / self.dt()).round() as usize).min(self.nt)
    }
}

/// `M × Nt` Brownian increments. Path `p` is drawn from its own ChaCha
/// stream, so any subset of paths can be regenerated independently.
#[derive(Clone, Debug, PartialEq)]
pub struct PathEnsemble {
    pub seed: u64,
    pub dt: f64,
    pub increments: Vec<Vec<f64>>,
}

pub fn brownian(m: usize, nt: usize, dt: f64, seed: u64) -> PathEnsemble {
    assert!(m >= 1 && nt >= 1 && dt > 0.0);
    let normal = Normal::new(0.0, dt.sqrt()).expect("positive variance");
    let increments = (0..m)
        .map(|p| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(p as u64);
            (0..nt).map(|_| rng.sample(normal)).collect()
        })
        .collect();
    PathEnsemble { seed, dt, increments }
}

impl PathEnsemble {
    pub fn paths(&self) -> usize {
        self.increments.len()
    }

    pub fn steps(&self) -> usize {
        self.increments.first().map_or(0, |p| p.len())
    }

    /// `B(t_m)` for `m = 0..=Nt`.
    pub fn cumulative(&self, p: usize) -> Vec<f64> {
        let mut b = Vec::with_capacity(self.steps() + 1);
        b.push(0.0);
        let mut acc = 0.0;
        for dw in &self.increments[p] {
            acc += dw;
            b.push(acc);
        }
        b
    }

    /// The same paths observed on a grid with twice the time step.
    pub fn coarsen(&self) -> PathEnsemble {
        assert!(self.steps() % 2 == 0, "odd step count cannot be coarsened");
        let increments = self.increments.iter().map(|p| p.chunks(2).map(|c| c[0] + c[1]).collect()).collect();
        PathEnsemble { seed: self.seed, dt: 2.0 * self.dt, increments }
    }

    pub fn check(&self, grid: &Grid1D) -> Result<(), SimError> {
        if self.steps() != grid.nt || (self.dt - grid.dt()).abs() > 1e-12 * grid.dt() {
            return Err(SimError::Ensemble(format!(
                "{} steps of {} vs grid {} steps of {}",
                self.steps(),
                self.dt,
                grid.nt,
                grid.dt()
            )));
        }
        Ok(())
    }
}

/// `c0 + c1 sin(kπx)`, constant in time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub c0: Complex64,
    pub c1: Complex64,
    pub k: u32,
}

impl Coefficient {
    pub fn zero() -> Self {
        Coefficient { c0: Complex64::new(0.0, 0.0), c1: Complex64::new(0.0, 0.0), k: 1 }
    }

    pub fn constant(c: Complex64) -> Self {
        Coefficient { c0: c, ..Self::zero() }
    }

    pub fn value(&self, x: f64) -> Complex64 {
        self.c0 + self.c1 * (self.k as f64 * PI * x).sin()
    }

    pub fn sup(&self) -> f64 {
        self.c0.norm() + self.c1.norm()
    }

    pub fn sup_dx(&self) -> f64 {
        self.c1.norm() * self.k as f64 * PI
    }

    pub fn is_zero(&self) -> bool {
        self.c0 == Complex64::new(0.0, 0.0) && self.c1 == Complex64::new(0.0, 0.0)
    }
}

/// `Σ amp_k sin(kπx) · cos(ωt)`; vanishes on the boundary.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub modes: Vec<(u32, Complex64)>,
    #[serde(default)]
    pub omega: f64,
}

impl Field {
    pub fn zero() -> Self {
        Field::default()
    }

    pub fn sine(k: u32, amp: f64) -> Self {
        Field { modes: vec![(k, Complex64::new(amp, 0.0))], omega: 0.0 }
    }

    pub fn is_zero(&self) -> bool {
        self.modes.iter().all(|(_, a)| *a == Complex64::new(0.0, 0.0))
    }

    pub fn value(&self, x: f64, t: f64) -> Complex64 {
        let s: Complex64 = self.modes.iter().map(|&(k, a)| a * (k as f64 * PI * x).sin()).sum();
        s * (self.omega * t).cos()
    }

    pub fn dx(&self, x: f64, t: f64) -> Complex64 {
        let s: Complex64 =
            self.modes.iter().map(|&(k, a)| a * (k as f64 * PI) * (k as f64 * PI * x).cos()).sum();
        s * (self.omega * t).cos()
    }

    pub fn scaled(&self, s: f64) -> Field {
        Field { modes: self.modes.iter().map(|&(k, a)| (k, a * s)).collect(), omega: self.omega }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpdeProblem {
    pub b: f64,
    pub a1: Coefficient,
    pub a2: Coefficient,
    pub a3: Coefficient,
    pub f: Field,
    pub g: Field,
    pub w0: Field,
}

impl SpdeProblem {
    /// Pure equation with sources, no lower-order coefficients.
    pub fn plain(b: f64, f: Field, g: Field, w0: Field) -> Self {
        SpdeProblem { b, a1: Coefficient::zero(), a2: Coefficient::zero(), a3: Coefficient::zero(), f, g, w0 }
    }

    /// `r = 1 + |a1|² + |a2|² + |a3|²_{W^{1,∞}}`, with sup norms bounded by
    /// the coefficient amplitudes.
    pub fn r(&self) -> f64 {
        1.0 + self.a1.sup().powi(2) + self.a2.sup().powi(2) + (self.a3.sup() + self.a3.sup_dx()).powi(2)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let finite = |c: &Coefficient| c.c0.is_finite() && c.c1.is_finite();
        if !self.b.is_finite() || ![&self.a1, &self.a2, &self.a3].into_iter().all(finite) {
            return Err(SimError::Problem("coefficients must be finite".into()));
        }
        for field in [&self.f, &self.g, &self.w0] {
            if field.modes.iter().any(|(k, a)| *k == 0 || !a.is_finite()) || !field.omega.is_finite() {
                return Err(SimError::Problem("fields need finite amplitudes and mode numbers k >= 1".into()));
            }
        }
        Ok(())
    }

    /// The same problem with every source and the initial datum scaled by `s`;
    /// by linearity the solution scales by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        SpdeProblem { f: self.f.scaled(s), g: self.g.scaled(s), w0: self.w0.scaled(s), ..self.clone() }
    }
}

/// Constant-coefficient tridiagonal system, factored once.
struct Thomas {
    lower: Complex64,
    /// modified upper diagonal `c'_i`
    cp: Vec<Complex64>,
    /// pivots `b − a c'_{i−1}`
    piv: Vec<Complex64>,
}

impl Thomas {
    fn new(n: usize, lower: Complex64, diag: Complex64, upper: Complex64) -> Self {
        let mut cp = Vec::with_capacity(n);
        let mut piv = Vec::with_capacity(n);
        for i in 0..n {
            let p = if i == 0 { diag } else { diag - lower * cp[i - 1] };
            assert!(p.norm() > 1e-300, "singular tridiagonal system");
            piv.push(p);
            cp.push(upper / p);
        }
        Thomas { lower, cp, piv }
    }

    fn solve(&self, d: &mut [Complex64]) {
        let n = d.len();
        d[0] /= self.piv[0];
        for i in 1..n {
            d[i] = (d[i] - self.lower * d[i - 1]) / self.piv[i];
        }
        for i in (0..n - 1).rev() {
            let next = d[i + 1];
            d[i] -= self.cp[i] * next;
        }
    }
}

/// Central difference with the Dirichlet zeros as ghost values.
pub fn gradient(w: &[Complex64], dx: f64) -> Vec<Complex64> {
    let n = w.len();
    let zero = Complex64::new(0.0, 0.0);
    (0..n)
        .map(|i| {
            let left = if i == 0 { zero } else { w[i - 1] };
            let right = if i + 1 == n { zero } else { w[i + 1] };
            (right - left) / (2.0 * dx)
        })
        .collect()
}

/// `∫|w|²` over (0,1) (trapezoid, boundary values zero).
pub fn l2_sq(w: &[Complex64], dx: f64) -> f64 {
    w.iter().map(|v| v.norm_sqr()).sum::<f64>() * dx
}

/// `∫|w_x|²` from forward differences, including the two boundary cells.
pub fn grad_sq(w: &[Complex64], dx: f64) -> f64 {
    let zero = Complex64::new(0.0, 0.0);
    let mut prev = zero;
    let mut acc = 0.0;
    for v in w.iter().chain(std::iter::once(&zero)) {
        acc += ((v - prev) / dx).norm_sqr();
        prev = *v;
    }
    acc * dx
}

pub fn h1_sq(w: &[Complex64], dx: f64) -> f64 {
    l2_sq(w, dx) + grad_sq(w, dx)
}

/// Solves one path and hands `(m, w^m)` to `observe` for `m = 0..=Nt`.
pub fn solve_path<F>(p: &SpdeProblem, grid: &Grid1D, increments: &[f64], mut observe: F)
where
    F: FnMut(usize, &[Complex64]),
{
    let (nx, dx, dt) = (grid.nx, grid.dx(), grid.dt());
    let xs = grid.xs();
    let c = Complex64::new(1.0, p.b) * (dt / (dx * dx));
    let thomas = Thomas::new(nx, -c, Complex64::new(1.0, 0.0) + 2.0 * c, -c);
    let a1: Vec<_> = xs.iter().map(|&x| p.a1.value(x)).collect();
    let a2: Vec<_> = xs.iter().map(|&x| p.a2.value(x)).collect();
    let a3: Vec<_> = xs.iter().map(|&x| p.a3.value(x)).collect();
    let (drift_free, noise_free) = (p.a1.is_zero() && p.a2.is_zero(), p.a3.is_zero());
    let f_on = !p.f.is_zero();
    let g_on = !p.g.is_zero();

    let mut w: Vec<Complex64> = xs.iter().map(|&x| p.w0.value(x, 0.0)).collect();
    observe(0, &w);
    for m in 0..grid.nt {
        let t = grid.t(m);
        let db = increments[m];
        let grad = if p.a1.is_zero() { Vec::new() } else { gradient(&w, dx) };
        for i in 0..nx {
            let wi = w[i];
            let mut drift = Complex64::new(0.0, 0.0);
            if !drift_free {
                drift += a2[i] * wi;
                if !grad.is_empty() {
                    drift += a1[i] * grad[i];
                }
            }
            if f_on {
                drift += p.f.value(xs[i], t);
            }
            let mut noise = Complex64::new(0.0, 0.0);
            if !noise_free {
                noise += a3[i] * wi;
            }
            if g_on {
                noise += p.g.value(xs[i], t);
            }
            w[i] = wi + drift * dt + noise * db;
        }
        thomas.solve(&mut w);
        observe(m + 1, &w);
    }
}

/// Every path's full trajectory, `[path][step][node]`. Only for small grids;
/// the experiments reduce on the fly through [`solve_path`].
pub fn solve_gl_forward(p: &SpdeProblem, grid: &Grid1D, paths: &PathEnsemble) -> Result<Vec<Vec<Vec<Complex64>>>, SimError> {
    p.validate()?;
    paths.check(grid)?;
    Ok((0..paths.paths())
        .into_par_iter()
        .map(|k| {
            let mut traj = Vec::with_capacity(grid.nt + 1);
            solve_path(p, grid, &paths.increments[k], |_, w| traj.push(w.to_vec()));
            traj
        })
        .collect())
}

/// Mean and standard error of a sample.
pub fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Least-squares slope of `y` against `x`.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// `‖w(T)‖ / ‖w0‖` for the pure heat equation with `w0 = sin(πx)`, against
/// the exact `e^{−π²T}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayCheck {
    pub nx: usize,
    pub nt: usize,
    pub t_final: f64,
    pub computed: f64,
    pub exact: f64,
    pub relative_error: f64,
    /// `‖w(T) − e^{−π²T} sin(πx)‖_{L²}`
    pub l2_error: f64,
}

pub fn heat_decay_check(grid: &Grid1D) -> DecayCheck {
    let p = SpdeProblem::plain(0.0, Field::zero(), Field::zero(), Field::sine(1, 1.0));
    let zeros = vec![0.0; grid.nt];
    let dx = grid.dx();
    let mut last = Vec::new();
    let mut first = 0.0;
    solve_path(&p, grid, &zeros, |m, w| {
        if m == 0 {
            first = l2_sq(w, dx).sqrt();
        }
        if m == grid.nt {
            last = w.to_vec();
        }
    });
    let exact = (-PI * PI * grid.t_final).exp();
    let computed = l2_sq(&last, dx).sqrt() / first;
    let err: Vec<Complex64> =
        last.iter().enumerate().map(|(i, v)| v - exact * (PI * grid.x(i)).sin()).collect();
    DecayCheck {
        nx: grid.nx,
        nt: grid.nt,
        t_final: grid.t_final,
        computed,
        exact,
        relative_error: (computed - exact).abs() / exact,
        l2_error: l2_sq(&err, dx).sqrt(),
    }
}

/// Errors of [`heat_decay_check`] under successive halvings of `Δt`, and the
/// ratios between consecutive errors (≈ 2 for a first-order scheme).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceCheck {
    pub nts: Vec<usize>,
    pub errors: Vec<f64>,
    pub ratios: Vec<f64>,
}

pub fn dt_convergence(nx: usize, nt0: usize, levels: usize, t_final: f64) -> Result<ConvergenceCheck, SimError> {
    let mut nts = Vec::new();
    let mut errors = Vec::new();
    for l in 0..levels {
        let nt = nt0 << l;
        let grid = Grid1D::new(nx, nt, t_final)?;
        nts.push(nt);
        errors.push(heat_decay_check(&grid).l2_error);
    }
    let ratios = errors.windows(2).map(|e| e[0] / e[1]).collect();
    Ok(ConvergenceCheck { nts, errors, ratios })
}
