//! Manufactured solutions of the backward stochastic heat equation
//! `dy + y_xx dt = f dt + Y dB`, and Monte-Carlo evaluation of both sides
//! of its Carleman estimate
//!
//! ```text
//! E∫∫ θ²(λ³γ³y² + λγ|y_x|²)  ≤  C [ E∫∫_{G0} θ²λ³γ³y² + E∫∫ θ²f² + E∫∫ θ²λ²γ²Y² ].
//! ```

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::spde::{mean_se, slope, Grid1D, PathEnsemble, SimError};
use crate::weights::HeatWeight;

/// One sine mode `c(t) sin(kπx)` with `c = d(t)(1 + σB(t))` and
/// `d(t) = a + b cos(ωt + phase)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HeatMode {
    pub k: u32,
    pub a: f64,
    pub b: f64,
    pub omega: f64,
    pub phase: f64,
    pub sigma: f64,
}

impl HeatMode {
    fn d(&self, t: f64) -> f64 {
        self.a + self.b * (self.omega * t + self.phase).cos()
    }

    fn d_dot(&self, t: f64) -> f64 {
        -self.b * self.omega * (self.omega * t + self.phase).sin()
    }

    /// Coefficients of `(y, Y, f)` on `sin(kπx)` at time `t` with `B(t) = bt`.
    fn coefficients(&self, t: f64, bt: f64) -> (f64, f64, f64) {
        let d = self.d(t);
        let c = d * (1.0 + self.sigma * bt);
        let kpi2 = (self.k as f64 * PI).powi(2);
        let drift = self.d_dot(t) * (1.0 + self.sigma * bt);
        (c, self.sigma * d, drift - kpi2 * c)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ManufacturedPair {
    pub modes: Vec<HeatMode>,
    /// Multiplies `y`, `Y` and `f` together; the pair stays exact.
    pub scale: f64,
    /// Multiplies `f` alone. Anything but 1 breaks the pair; only used to
    /// probe the homogeneity of the source term.
    pub f_scale: f64,
}

/// Pointwise values of a manufactured pair.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PairValues {
    pub y: f64,
    pub y_x: f64,
    pub big_y: f64,
    pub f: f64,
}

pub fn manufacture_heat_pair(grid: &Grid1D, modes: usize, seed: u64, stochastic: bool) -> Result<ManufacturedPair, SimError> {
    if modes == 0 || modes > grid.nx / 4 {
        return Err(SimError::Problem(format!("need 1 <= K <= Nx/4 = {}, got K = {modes}", grid.nx / 4)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes = (1..=modes as u32)
        .map(|k| {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            HeatMode {
                k,
                a: sign * rng.random_range(0.5..1.5) / k as f64,
                b: rng.random_range(0.0..0.5) / k as f64,
                omega: rng.random_range(1.0..2.0 * PI),
                phase: rng.random_range(0.0..2.0 * PI),
                sigma: if stochastic { rng.random_range(0.2..0.8) } else { 0.0 },
            }
        })
        .collect();
    Ok(ManufacturedPair { modes, scale: 1.0, f_scale: 1.0 })
}

impl ManufacturedPair {
    pub fn scaled(&self, s: f64) -> Self {
        ManufacturedPair { scale: self.scale * s, ..self.clone() }
    }

    pub fn with_f_scale(&self, s: f64) -> Self {
        ManufacturedPair { f_scale: s, ..self.clone() }
    }

    /// Mode coefficients `(y_k, Y_k, f_k)` at time `t`.
    fn coefficients(&self, t: f64, bt: f64) -> Vec<(f64, f64, f64)> {
        self.modes
            .iter()
            .map(|m| {
                let (c, y, f) = m.coefficients(t, bt);
                (self.scale * c, self.scale * y, self.scale * self.f_scale * f)
            })
            .collect()
    }

    pub fn eval(&self, x: f64, t: f64, bt: f64) -> PairValues {
        let mut v = PairValues::default();
        for (m, (c, y, f)) in self.modes.iter().zip(self.coefficients(t, bt)) {
            let kpi = m.k as f64 * PI;
            let (s, co) = (kpi * x).sin_cos();
            v.y += c * s;
            v.y_x += c * kpi * co;
            v.big_y += y * s;
            v.f += f * s;
        }
        v
    }

    /// Accumulated residual of the pathwise Euler step
    /// `y^{m+1} − y^m + y_xx^m Δt − f^m Δt − Y^m ΔB_m`,
    /// as an RMS over paths of `max_m ‖Σ_{j<m} r_j‖_{L²}`. Computed per mode
    /// since the sines are orthogonal with `‖sin(kπ·)‖² = 1/2`.
    pub fn euler_residual(&self, grid: &Grid1D, paths: &PathEnsemble) -> Result<f64, SimError> {
        paths.check(grid)?;
        let dt = grid.dt();
        let per_path: Vec<f64> = (0..paths.paths())
            .into_par_iter()
            .map(|p| {
                let b = paths.cumulative(p);
                let mut acc = vec![0.0; self.modes.len()];
                let mut worst: f64 = 0.0;
                let mut now = self.coefficients(0.0, 0.0);
                for m in 0..grid.nt {
                    let next = self.coefficients(grid.t(m + 1), b[m + 1]);
                    for (i, mode) in self.modes.iter().enumerate() {
                        let kpi2 = (mode.k as f64 * PI).powi(2);
                        let (c, y, f) = now[i];
                        acc[i] += next[i].0 - c - kpi2 * c * dt - f * dt - y * paths.increments[p][m];
                    }
                    worst = worst.max(0.5 * acc.iter().map(|r| r * r).sum::<f64>());
                    now = next;
                }
                worst
            })
            .collect();
        Ok((per_path.iter().sum::<f64>() / per_path.len() as f64).sqrt())
    }
}

/// Monte-Carlo means of the five weighted integrals. All of them carry the
/// common factor `e^{−2λ max α}`, which cancels in every ratio.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct HeatTerms {
    pub lhs_mass: f64,
    pub lhs_gradient: f64,
    pub rhs_observation: f64,
    pub rhs_source: f64,
    pub rhs_diffusion: f64,
}

impl HeatTerms {
    pub fn lhs(&self) -> f64 {
        self.lhs_mass + self.lhs_gradient
    }

    pub fn rhs(&self) -> f64 {
        self.rhs_observation + self.rhs_source + self.rhs_diffusion
    }

    fn from_array(a: [f64; 5]) -> Self {
        HeatTerms { lhs_mass: a[0], lhs_gradient: a[1], rhs_observation: a[2], rhs_source: a[3], rhs_diffusion: a[4] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HeatLambdaRow {
    pub lambda: f64,
    pub terms: HeatTerms,
    pub lhs: f64,
    pub rhs: f64,
    pub lhs_se: f64,
    pub rhs_se: f64,
    /// RHS bracket / LHS
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HeatPairReport {
    pub pair: usize,
    pub rows: Vec<HeatLambdaRow>,
    /// slope of log ratio against log λ
    pub log_slope: f64,
    /// `min_λ ratio(λ) / ratio(λ_min)`
    pub min_relative_ratio: f64,
    /// smallest C with LHS ≤ C·RHS over the sweep
    pub fitted_c: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HeatCheckReport {
    pub mu: f64,
    pub lambdas: Vec<f64>,
    pub paths: usize,
    pub pairs: Vec<HeatPairReport>,
    /// largest fitted C over all pairs
    pub fitted_c: f64,
    pub passed: bool,
}

/// Per-path integrals for every λ, `[λ][term]`.
fn path_integrals(pair: &ManufacturedPair, grid: &Grid1D, b: &[f64], tables: &WeightTables) -> Vec<[f64; 5]> {
    let nodes = grid.nx + 2;
    let dx = grid.dx();
    let dt = grid.dt();
    let mut out = vec![[0.0; 5]; tables.lambdas.len()];
    let mut vals = vec![PairValues::default(); nodes];
    // endpoints in time carry θ² = 0
    for m in 1..grid.nt {
        let t = grid.t(m);
        let coeffs = pair.coefficients(t, b[m]);
        for (j, v) in vals.iter_mut().enumerate() {
            *v = PairValues::default();
            for (i, &(c, y, f)) in coeffs.iter().enumerate() {
                let (s, co) = (tables.sin[i][j], tables.cos[i][j]);
                v.y += c * s;
                v.y_x += c * tables.kpi[i] * co;
                v.big_y += y * s;
                v.f += f * s;
            }
        }
        let gamma = tables.gamma[m];
        for (l, lam) in tables.lambdas.iter().enumerate() {
            let w = &tables.weight[l][m];
            let lg = lam * gamma;
            let lg3 = lg * lg * lg;
            let acc = &mut out[l];
            for j in 0..nodes {
                let q = w[j] * if j == 0 || j + 1 == nodes { 0.5 } else { 1.0 } * dx * dt;
                if q == 0.0 {
                    continue;
                }
                let v = &vals[j];
                let mass = lg3 * v.y * v.y * q;
                acc[0] += mass;
                acc[1] += lg * v.y_x * v.y_x * q;
                if tables.observed[j] {
                    acc[2] += mass;
                }
                acc[3] += v.f * v.f * q;
                acc[4] += lg * lg * v.big_y * v.big_y * q;
            }
        }
    }
    out
}

struct WeightTables {
    lambdas: Vec<f64>,
    kpi: Vec<f64>,
    sin: Vec<Vec<f64>>,
    cos: Vec<Vec<f64>>,
    gamma: Vec<f64>,
    /// `[λ][m][j]` of `e^{2λ(α − max α)}`
    weight: Vec<Vec<Vec<f64>>>,
    observed: Vec<bool>,
}

impl WeightTables {
    fn new(grid: &Grid1D, w: &HeatWeight, lambdas: &[f64], modes: &[HeatMode]) -> Result<Self, SimError> {
        let nodes = grid.nx + 2;
        let dx = grid.dx();
        let xs: Vec<f64> = (0..nodes).map(|j| j as f64 * dx).collect();
        let kpi: Vec<f64> = modes.iter().map(|m| m.k as f64 * PI).collect();
        let sin = kpi.iter().map(|k| xs.iter().map(|x| (k * x).sin()).collect()).collect();
        let cos = kpi.iter().map(|k| xs.iter().map(|x| (k * x).cos()).collect()).collect();
        let weight_err = |e: crate::weights::WeightError| SimError::Problem(e.to_string());
        let mut gamma = vec![0.0; grid.nt + 1];
        let mut alpha = vec![vec![0.0; nodes]; grid.nt + 1];
        for m in 1..grid.nt {
            let t = grid.t(m);
            gamma[m] = w.gamma(t).map_err(weight_err)?;
            for j in 0..nodes {
                alpha[m][j] = w.alpha(xs[j], t).map_err(weight_err)?;
            }
        }
        let amax = w.alpha_max();
        let weight = lambdas
            .iter()
            .map(|lam| {
                alpha
                    .iter()
                    .enumerate()
                    .map(|(m, row)| {
                        if m == 0 || m == grid.nt {
                            vec![0.0; nodes]
                        } else {
                            // underflows to exactly 0 once θ² < 1e-308
                            row.iter().map(|a| (2.0 * lam * (a - amax)).exp()).collect()
                        }
                    })
                    .collect()
            })
            .collect();
        let observed = xs.iter().map(|&x| w.psi.g0.contains(x)).collect();
        Ok(WeightTables { lambdas: lambdas.to_vec(), kpi, sin, cos, gamma, weight, observed })
    }
}

/// Both sides of the heat estimate for one pair, at every λ.
pub fn heat_terms(
    pair: &ManufacturedPair,
    grid: &Grid1D,
    paths: &PathEnsemble,
    weight: &HeatWeight,
    lambdas: &[f64],
) -> Result<Vec<HeatLambdaRow>, SimError> {
    paths.check(grid)?;
    let tables = WeightTables::new(grid, weight, lambdas, &pair.modes)?;
    let per_path: Vec<Vec<[f64; 5]>> = (0..paths.paths())
        .into_par_iter()
        .map(|p| path_integrals(pair, grid, &paths.cumulative(p), &tables))
        .collect();
    Ok(lambdas
        .iter()
        .enumerate()
        .map(|(l, &lambda)| {
            let mut mean = [0.0; 5];
            for (i, slot) in mean.iter_mut().enumerate() {
                *slot = mean_se(&per_path.iter().map(|v| v[l][i]).collect::<Vec<_>>()).0;
            }
            let lhs: Vec<f64> = per_path.iter().map(|v| v[l][0] + v[l][1]).collect();
            let rhs: Vec<f64> = per_path.iter().map(|v| v[l][2] + v[l][3] + v[l][4]).collect();
            let terms = HeatTerms::from_array(mean);
            HeatLambdaRow {
                lambda,
                lhs: terms.lhs(),
                rhs: terms.rhs(),
                lhs_se: mean_se(&lhs).1,
                rhs_se: mean_se(&rhs).1,
                ratio: terms.rhs() / terms.lhs(),
                terms,
            }
        })
        .collect())
}

/// Runs [`heat_terms`] for every pair and checks that the ratio does not
/// decay along the λ sweep: `ratio(λ) ≥ 0.5·ratio(λ_min)` and the log-log
/// slope is at least −0.05.
pub fn carleman_heat_check(
    pairs: &[ManufacturedPair],
    grid: &Grid1D,
    paths: &PathEnsemble,
    weight: &HeatWeight,
    lambdas: &[f64],
) -> Result<HeatCheckReport, SimError> {
    let mut reports = Vec::with_capacity(pairs.len());
    for (i, pair) in pairs.iter().enumerate() {
        let rows = heat_terms(pair, grid, paths, weight, lambdas)?;
        let base = rows[0].ratio;
        let min_rel = rows.iter().map(|r| r.ratio / base).fold(f64::INFINITY, f64::min);
        let logl: Vec<f64> = rows.iter().map(|r| r.lambda.ln()).collect();
        let logr: Vec<f64> = rows.iter().map(|r| r.ratio.ln()).collect();
        let log_slope = if rows.len() > 1 { slope(&logl, &logr) } else { 0.0 };
        let fitted_c = rows.iter().map(|r| r.lhs / r.rhs).fold(0.0, f64::max);
        let finite = rows.iter().all(|r| r.ratio.is_finite() && r.ratio > 0.0);
        reports.push(HeatPairReport {
            pair: i,
            passed: finite && min_rel >= 0.5 && log_slope >= -0.05,
            rows,
            log_slope,
            min_relative_ratio: min_rel,
            fitted_c,
        });
    }
    Ok(HeatCheckReport {
        mu: weight.mu,
        lambdas: lambdas.to_vec(),
        paths: paths.paths(),
        fitted_c: reports.iter().map(|r| r.fitted_c).fold(0.0, f64::max),
        passed: reports.iter().all(|r| r.passed),
        pairs: reports,
    })
}
