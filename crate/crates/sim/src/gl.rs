//! Monte-Carlo evaluation of the forward Carleman estimate for
//! `dw − (1+ib)w_xx dt = f dt + g dB`, with `θ = e^{μe^{3μt}}`:
//!
//! ```text
//! μE∫_δ^T∫θ²|w_x|² + μ³E∫_δ^T∫φθ²|w|²
//!   ≤ C { E∫[|θ(δ)w_x(δ)|² + μ²φ(δ)θ(δ)²|w(δ)|² + μ²φ(T)|θ(T)w(T)|²]
//!         + E∫_δ^T∫(1+φ)θ²(|f|² + μ²|g|² + |g_x|²) }
//! ```
//!
//! θ² is carried as `e^{2ℓ(t) − 2ℓ(T)}`; the common factor cancels.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::spde::{brownian, grad_sq, l2_sq, mean_se, solve_path, Coefficient, Field, Grid1D, PathEnsemble, SimError, SpdeProblem};
use crate::weights::GlWeight;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct GlTerms {
    pub mu: f64,
    pub gradient: f64,
    pub mass: f64,
    pub initial_gradient: f64,
    pub initial_mass: f64,
    pub terminal: f64,
    pub sources: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub lhs_se: f64,
    pub rhs_se: f64,
}

impl GlTerms {
    /// LHS / RHS; 0 when both sides vanish.
    pub fn ratio(&self) -> f64 {
        if self.lhs == 0.0 && self.rhs == 0.0 {
            0.0
        } else {
            self.lhs / self.rhs
        }
    }
}

fn source_density(p: &SpdeProblem, grid: &Grid1D, t: f64, mu: f64) -> f64 {
    if p.f.is_zero() && p.g.is_zero() {
        return 0.0;
    }
    // trapezoid over all nodes; f, g vanish on the boundary but g_x does not
    let dx = grid.dx();
    (0..grid.nx + 2)
        .map(|j| {
            let x = j as f64 * dx;
            let q = if j == 0 || j == grid.nx + 1 { 0.5 } else { 1.0 };
            q * (p.f.value(x, t).norm_sqr() + mu * mu * p.g.value(x, t).norm_sqr() + p.g.dx(x, t).norm_sqr())
        })
        .sum::<f64>()
        * dx
}

/// Both sides of the estimate for one ensemble, at every μ. One solve per path.
pub fn gl_terms(p: &SpdeProblem, grid: &Grid1D, paths: &PathEnsemble, mus: &[f64], delta: f64) -> Result<Vec<GlTerms>, SimError> {
    p.validate()?;
    paths.check(grid)?;
    if !(0.0..grid.t_final).contains(&delta) {
        return Err(SimError::Problem(format!("delta must lie in [0, T), got {delta}")));
    }
    let weights: Vec<GlWeight> =
        mus.iter().map(|&mu| GlWeight::new(mu).map_err(|e| SimError::Problem(e.to_string()))).collect::<Result<_, _>>()?;
    let (dx, dt, nt) = (grid.dx(), grid.dt(), grid.nt);
    let m_delta = grid.step_of(delta);
    let trap = |m: usize| if m == m_delta || m == nt { 0.5 * dt } else { dt };
    // factor[k][m] = θ²(t_m)/θ²(T)
    let factor: Vec<Vec<f64>> = weights
        .iter()
        .map(|gw| (0..=nt).map(|m| (2.0 * (gw.ell(grid.t(m)) - gw.ell(grid.t_final))).exp()).collect())
        .collect();
    let sources: Vec<f64> = weights
        .iter()
        .enumerate()
        .map(|(k, gw)| {
            (m_delta..=nt)
                .map(|m| {
                    let t = grid.t(m);
                    trap(m) * factor[k][m] * (1.0 + gw.phi(t)) * source_density(p, grid, t, gw.mu)
                })
                .sum()
        })
        .collect();

    // per path, per μ: [gradient, mass, initial_gradient, initial_mass, terminal]
    let per_path: Vec<Vec<[f64; 5]>> = (0..paths.paths())
        .into_par_iter()
        .map(|path| {
            let mut acc = vec![[0.0; 5]; weights.len()];
            solve_path(p, grid, &paths.increments[path], |m, w| {
                if m < m_delta {
                    return;
                }
                let (g2, w2) = (grad_sq(w, dx), l2_sq(w, dx));
                let t = grid.t(m);
                for (k, gw) in weights.iter().enumerate() {
                    let (mu, phi, fac) = (gw.mu, gw.phi(t), factor[k][m]);
                    let a = &mut acc[k];
                    a[0] += trap(m) * fac * mu * g2;
                    a[1] += trap(m) * fac * mu.powi(3) * phi * w2;
                    if m == m_delta {
                        a[2] = fac * g2;
                        a[3] = fac * mu * mu * phi * w2;
                    }
                    if m == nt {
                        a[4] = mu * mu * phi * w2;
                    }
                }
            });
            acc
        })
        .collect();

    Ok(weights
        .iter()
        .enumerate()
        .map(|(k, gw)| {
            let col = |i: usize| per_path.iter().map(|v| v[k][i]).collect::<Vec<f64>>();
            let mean = |i: usize| mean_se(&col(i)).0;
            let lhs_samples: Vec<f64> = per_path.iter().map(|v| v[k][0] + v[k][1]).collect();
            let rhs_samples: Vec<f64> = per_path.iter().map(|v| v[k][2] + v[k][3] + v[k][4] + sources[k]).collect();
            let (lhs, lhs_se) = mean_se(&lhs_samples);
            let (rhs, rhs_se) = mean_se(&rhs_samples);
            GlTerms {
                mu: gw.mu,
                gradient: mean(0),
                mass: mean(1),
                initial_gradient: mean(2),
                initial_mass: mean(3),
                terminal: mean(4),
                sources: sources[k],
                lhs,
                rhs,
                lhs_se,
                rhs_se,
            }
        })
        .collect())
}

/// Ranges for random coefficient draws.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomProblemSpec {
    /// `|b| ≤ b_max`
    pub b_max: f64,
    /// amplitude bound for `a1, a2, a3`; 0 gives the plain equation
    pub coefficient_amp: f64,
    /// amplitude bound for the sources `f, g`
    pub source_amp: f64,
    /// number of sine modes in `w0`
    pub w0_modes: u32,
}

impl Default for RandomProblemSpec {
    fn default() -> Self {
        RandomProblemSpec { b_max: 1.0, coefficient_amp: 0.5, source_amp: 0.0, w0_modes: 3 }
    }
}

fn disc(rng: &mut ChaCha8Rng, r: f64) -> Complex64 {
    Complex64::from_polar(r * rng.random::<f64>().sqrt(), rng.random_range(0.0..2.0 * PI))
}

/// A reproducible random problem.
pub fn random_problem(seed: u64, spec: &RandomProblemSpec) -> SpdeProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coefficient = |rng: &mut ChaCha8Rng| Coefficient {
        c0: disc(rng, spec.coefficient_amp),
        c1: disc(rng, spec.coefficient_amp),
        k: rng.random_range(1..=3),
    };
    let b = rng.random_range(-1.0..=1.0) * spec.b_max;
    let a1 = coefficient(&mut rng);
    let a2 = coefficient(&mut rng);
    let a3 = coefficient(&mut rng);
    let source = |rng: &mut ChaCha8Rng| {
        if spec.source_amp == 0.0 {
            return Field::zero();
        }
        Field { modes: (1..=2).map(|k| (k, disc(rng, spec.source_amp))).collect(), omega: rng.random_range(0.0..2.0 * PI) }
    };
    let f = source(&mut rng);
    let g = source(&mut rng);
    let w0 = Field {
        modes: (1..=spec.w0_modes.max(1)).map(|k| (k, disc(&mut rng, 1.0) / k as f64 + Complex64::new(1.0 / k as f64, 0.0))).collect(),
        omega: 0.0,
    };
    SpdeProblem { b, a1, a2, a3, f, g, w0 }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GlCheckReport {
    pub mus: Vec<f64>,
    pub delta: f64,
    pub paths: usize,
    /// `[ensemble][μ]`
    pub ensembles: Vec<Vec<GlTerms>>,
    pub calibration: usize,
    pub safety: f64,
    /// per μ: `safety · max LHS/RHS` over the calibration ensembles
    pub fitted_c: Vec<f64>,
    /// per μ: `max LHS/(C·RHS)` over all ensembles; the estimate holds iff ≤ 1
    pub max_utilization: Vec<f64>,
    pub zero_solution: bool,
    pub scaling_invariant: bool,
    pub passed: bool,
}

/// Solves every problem on its own Brownian ensemble, fits `C(μ)` on the
/// first `calibration` ensembles and checks it on all of them. Also runs the
/// zero-solution and `w → 2w` scaling checks on the first problem.
pub fn carleman_gl_check(
    problems: &[SpdeProblem],
    grid: &Grid1D,
    paths: usize,
    seed: u64,
    mus: &[f64],
    delta: f64,
    calibration: usize,
    safety: f64,
) -> Result<GlCheckReport, SimError> {
    if problems.is_empty() || calibration == 0 || calibration > problems.len() {
        return Err(SimError::Problem(format!("need 1 <= calibration <= {} ensembles", problems.len())));
    }
    let ensembles: Vec<Vec<GlTerms>> = problems
        .iter()
        .enumerate()
        .map(|(e, p)| gl_terms(p, grid, &brownian(paths, grid.nt, grid.dt(), seed.wrapping_add(e as u64)), mus, delta))
        .collect::<Result<_, _>>()?;
    let fitted_c: Vec<f64> = (0..mus.len())
        .map(|k| safety * ensembles[..calibration].iter().map(|t| t[k].ratio()).fold(0.0, f64::max))
        .collect();
    let max_utilization: Vec<f64> = (0..mus.len())
        .map(|k| ensembles.iter().map(|t| t[k].ratio() / fitted_c[k]).fold(0.0, f64::max))
        .collect();

    let ens0 = brownian(paths, grid.nt, grid.dt(), seed);
    let zero = SpdeProblem::plain(problems[0].b, Field::zero(), Field::zero(), Field::zero());
    let zero_terms = gl_terms(&zero, grid, &ens0, mus, delta)?;
    let zero_solution = zero_terms.iter().all(|t| t.lhs == 0.0 && t.rhs == 0.0);
    let doubled = gl_terms(&problems[0].scaled(2.0), grid, &ens0, mus, delta)?;
    let scaling_invariant = doubled.iter().zip(&ensembles[0]).all(|(d, o)| d.ratio() == o.ratio());

    let holds = max_utilization.iter().all(|u| u.is_finite() && *u <= 1.0);
    Ok(GlCheckReport {
        mus: mus.to_vec(),
        delta,
        paths,
        passed: holds && zero_solution && scaling_invariant,
        ensembles,
        calibration,
        safety,
        fitted_c,
        max_utilization,
        zero_solution,
        scaling_invariant,
    })
}
