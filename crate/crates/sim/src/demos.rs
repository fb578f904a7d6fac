//! The two introductory examples: an exponential bound for linear ODEs and
//! the weighted estimate for a first-order transport operator
//! `Lu = γ·u_x + γ0 u` with weight `e^{λ|x−x0|²}`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DemoError {
    #[error("geometric condition violated: gamma(x)·(x − x0) must be <= −c0 < 0 on [0,1], but its maximum is {max}")]
    Geometry { max: f64 },
    #[error("invalid demo parameter: {0}")]
    Parameter(String),
}

/// `a(t) = A0 + A1 sin(ωt)` on `R^m`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OdeSystem {
    pub a0: Vec<Vec<f64>>,
    pub a1: Vec<Vec<f64>>,
    pub omega: f64,
}

fn frobenius(a: &[Vec<f64>]) -> f64 {
    a.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

impl OdeSystem {
    pub fn scalar_sine() -> Self {
        OdeSystem { a0: vec![vec![0.0]], a1: vec![vec![1.0]], omega: 1.0 }
    }

    pub fn random(dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mat = |rng: &mut ChaCha8Rng| (0..dim).map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let a0 = mat(&mut rng);
        let a1 = mat(&mut rng);
        OdeSystem { a0, a1, omega: rng.random_range(0.5..2.0 * PI) }
    }

    /// Upper bound on `sup_t |a(t)|` (Frobenius, hence also operator norm).
    pub fn sup_norm(&self) -> f64 {
        frobenius(&self.a0) + frobenius(&self.a1)
    }

    fn rhs(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let s = (self.omega * t).sin();
        (0..x.len()).map(|i| (0..x.len()).map(|j| (self.a0[i][j] + s * self.a1[i][j]) * x[j]).sum()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OdeReport {
    pub lambda: f64,
    pub steps: usize,
    /// `max_{t>0} |x(t)| e^{−λt} / |x0|`; the bound holds iff ≤ 1
    pub worst_ratio: f64,
    pub passed: bool,
}

/// Integrates `ẋ = a(t)x` by RK4 and checks `|x(t)| ≤ e^{λt}|x0|` with
/// `λ = 2 sup|a|` at every step.
pub fn ode_demo(sys: &OdeSystem, x0: &[f64], t_final: f64, steps: usize) -> OdeReport {
    let lambda = 2.0 * sys.sup_norm();
    let h = t_final / steps as f64;
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let axpy = |x: &[f64], k: &[f64], s: f64| x.iter().zip(k).map(|(a, b)| a + s * b).collect::<Vec<_>>();
    let n0 = norm(x0);
    let mut x = x0.to_vec();
    let mut worst: f64 = 0.0;
    for m in 0..steps {
        let t = m as f64 * h;
        let k1 = sys.rhs(t, &x);
        let k2 = sys.rhs(t + 0.5 * h, &axpy(&x, &k1, 0.5 * h));
        let k3 = sys.rhs(t + 0.5 * h, &axpy(&x, &k2, 0.5 * h));
        let k4 = sys.rhs(t + h, &axpy(&x, &k3, h));
        for i in 0..x.len() {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        worst = worst.max(norm(&x) * (-lambda * (t + h)).exp() / n0);
    }
    OdeReport { lambda, steps, worst_ratio: worst, passed: worst <= 1.0 }
}

/// Transport field `γ(x) = slope·(x − x0)` and zero-order term `γ0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Transport {
    pub x0: f64,
    pub slope: f64,
    pub gamma0: f64,
}

impl Transport {
    pub fn standard() -> Self {
        Transport { x0: -0.5, slope: -1.0, gamma0: 0.0 }
    }

    /// `c0 = min_{[0,1]} −γ(x)(x − x0)`; rejects the field unless `c0 > 0`.
    pub fn c0(&self) -> Result<f64, DemoError> {
        let g = |x: f64| self.slope * (x - self.x0) * (x - self.x0);
        // γ(x)(x−x0) = slope(x−x0)² is monotone in |x−x0|, so check the ends and x0
        let mut cands = vec![g(0.0), g(1.0)];
        if (0.0..=1.0).contains(&self.x0) {
            cands.push(0.0);
        }
        let max = cands.into_iter().fold(f64::NEG_INFINITY, f64::max);
        if max >= 0.0 {
            return Err(DemoError::Geometry { max });
        }
        Ok(-max)
    }

    /// λ from which the energy argument gives `λ‖θu‖² ≤ ‖θLu‖²/(λ* c0²)`.
    pub fn lambda_star(&self) -> Result<f64, DemoError> {
        Ok((0.5 * self.slope.abs() + self.gamma0.abs()) / self.c0()?)
    }

    pub fn constant(&self) -> Result<f64, DemoError> {
        let c0 = self.c0()?;
        Ok(1.0 / (self.lambda_star()?.max(f64::MIN_POSITIVE) * c0 * c0))
    }
}

/// Sum of `(1 − s²)^4` bumps, `s = (x − center)/radius`, supported in (0,1).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BumpSum {
    pub bumps: Vec<(f64, f64, f64)>,
}

impl BumpSum {
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let count = rng.random_range(1..=3);
        let bumps = (0..count)
            .map(|_| {
                let r = rng.random_range(0.05..0.3);
                let c = rng.random_range(r + 0.01..1.0 - r - 0.01);
                (c, r, rng.random_range(-1.0..1.0))
            })
            .collect();
        BumpSum { bumps }
    }

    pub fn zero() -> Self {
        BumpSum { bumps: Vec::new() }
    }

    /// `(u, u_x)`
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let mut u = 0.0;
        let mut du = 0.0;
        for &(c, r, amp) in &self.bumps {
            let s = (x - c) / r;
            if s.abs() < 1.0 {
                let q = 1.0 - s * s;
                u += amp * q.powi(4);
                du += amp * 4.0 * q.powi(3) * (-2.0 * s) / r;
            }
        }
        (u, du)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransportReport {
    pub lambdas: Vec<f64>,
    /// `[u][λ]` of `λ∫θ²u² / ∫θ²|Lu|²`
    pub quotients: Vec<Vec<f64>>,
    pub fitted_c: f64,
    pub theoretical_c: f64,
    pub lambda_star: f64,
    pub passed: bool,
}

/// `(λ∫θ²u², ∫θ²|Lu|²)` with `θ² = e^{2λ|x−x0|²}`, normalized by its maximum
/// on [0,1] (trapezoid on `n` cells).
pub fn transport_sides(tr: &Transport, u: &BumpSum, lambda: f64, n: usize) -> (f64, f64) {
    let phi = |x: f64| (x - tr.x0) * (x - tr.x0);
    let pmax = phi(0.0).max(phi(1.0));
    let h = 1.0 / n as f64;
    let (mut lhs, mut rhs) = (0.0, 0.0);
    for i in 0..=n {
        let x = i as f64 * h;
        let q = if i == 0 || i == n { 0.5 * h } else { h };
        let w = (2.0 * lambda * (phi(x) - pmax)).exp();
        let (v, dv) = u.eval(x);
        let lu = tr.slope * (x - tr.x0) * dv + tr.gamma0 * v;
        lhs += q * w * lambda * v * v;
        rhs += q * w * lu * lu;
    }
    (lhs, rhs)
}

/// Sweeps λ over `lambdas` (all at least λ*) for every `u` and checks that
/// the largest quotient stays below the explicit constant.
pub fn first_order_demo(tr: &Transport, us: &[BumpSum], lambdas: &[f64], n: usize) -> Result<TransportReport, DemoError> {
    let lambda_star = tr.lambda_star()?;
    let theoretical_c = tr.constant()?;
    if let Some(l) = lambdas.iter().find(|l| **l < lambda_star) {
        return Err(DemoError::Parameter(format!("lambda = {l} is below lambda* = {lambda_star}")));
    }
    let quotients: Vec<Vec<f64>> = us
        .iter()
        .map(|u| {
            lambdas
                .iter()
                .map(|&l| {
                    let (a, b) = transport_sides(tr, u, l, n);
                    if a == 0.0 && b == 0.0 {
                        0.0
                    } else {
                        a / b
                    }
                })
                .collect()
        })
        .collect();
    let fitted_c = quotients.iter().flatten().cloned().fold(0.0, f64::max);
    Ok(TransportReport {
        lambdas: lambdas.to_vec(),
        quotients,
        fitted_c,
        theoretical_c,
        lambda_star,
        passed: fitted_c.is_finite() && fitted_c <= theoretical_c,
    })
}
