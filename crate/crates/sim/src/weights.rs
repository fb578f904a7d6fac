//! Carleman weights for the backward heat estimate and the forward
//! Ginzburg-Landau estimate, in one space dimension.
//!
//! Heat weight: `γ = 1/(t^k (T−t)^k)`, `φ = e^{μψ} γ`,
//! `α = (e^{μψ} − e^{2μ|ψ|∞}) γ`, `θ = e^{λα}`, `ℓ = λα`, with
//! `ψ = x(1−x)`. Every ℓ derivative is closed-form, so `A` and `B` are
//! evaluated exactly from their definitions rather than by differencing.

use std::fmt;

use carleman_core::theorem::{identity_coefficients, standard_context, Layout, Symbols, Unknown};
use carleman_core::{canonicalize, CanonicalForm, Context, Expr, ExprError};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum WeightError {
    #[error("observation interval {0} does not contain the critical point 1/2 of psi")]
    CriticalPointOutside(Interval),
    #[error("invalid weight parameter: {0}")]
    Parameter(String),
    #[error("t = {t} is outside the open interval (0, {t_final})")]
    SingularTime { t: f64, t_final: f64 },
    #[error("point (x = {x}, t = {t}) violates the precondition: {reason}")]
    Point { x: f64, t: f64, reason: String },
    #[error("symbolic weight terms: {0}")]
    Symbolic(#[from] ExprError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lo, self.hi)
    }
}

/// `ψ(x) = x(1−x)` on `[0,1]`, with the observation region `G0` and a
/// neighborhood `G1` of the only critical point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Psi {
    pub g0: Interval,
    pub g1: Interval,
}

pub fn psi_1d(g0: Interval) -> Result<Psi, WeightError> {
    if !(0.0 <= g0.lo && g0.lo < g0.hi && g0.hi <= 1.0) || !g0.contains(0.5) {
        return Err(WeightError::CriticalPointOutside(g0));
    }
    let delta = 0.5 * (0.5 - g0.lo).min(g0.hi - 0.5);
    Ok(Psi { g0, g1: Interval::new(0.5 - delta, 0.5 + delta) })
}

impl Psi {
    pub fn value(&self, x: f64) -> f64 {
        x * (1.0 - x)
    }

    pub fn d1(&self, x: f64) -> f64 {
        1.0 - 2.0 * x
    }

    pub fn d2(&self, _x: f64) -> f64 {
        -2.0
    }

    pub fn d3(&self, _x: f64) -> f64 {
        0.0
    }

    pub fn sup(&self) -> f64 {
        0.25
    }
}

/// `ℓ` and the mixed derivatives that `A` and `B` need.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct EllJet {
    pub l: f64,
    pub l_x: f64,
    pub l_xx: f64,
    pub l_xxx: f64,
    pub l_t: f64,
    pub l_tt: f64,
    pub l_xt: f64,
    pub l_xxt: f64,
}

impl EllJet {
    /// `∂x^dx ∂t^dt ℓ`, if it is part of the jet.
    pub fn get(&self, dx: u8, dt: u8) -> Option<f64> {
        Some(match (dx, dt) {
            (0, 0) => self.l,
            (1, 0) => self.l_x,
            (2, 0) => self.l_xx,
            (3, 0) => self.l_xxx,
            (0, 1) => self.l_t,
            (0, 2) => self.l_tt,
            (1, 1) => self.l_xt,
            (2, 1) => self.l_xxt,
            _ => return None,
        })
    }

    /// `A = ℓ_x² − ℓ_xx` (unit diffusion matrix).
    pub fn big_a(&self) -> f64 {
        self.l_x * self.l_x - self.l_xx
    }

    /// `B` for the backward heat operator with `Φ = 2ℓ_xx`:
    /// `2A_xℓ_x − 2Aℓ_xx − A_t + ℓ_tt − 8ℓ_xx² + 4ℓ_xxℓ_t`.
    pub fn big_b(&self) -> f64 {
        let a = self.big_a();
        let a_x = 2.0 * self.l_x * self.l_xx - self.l_xxx;
        let a_t = 2.0 * self.l_x * self.l_xt - self.l_xxt;
        2.0 * a_x * self.l_x - 2.0 * a * self.l_xx - a_t + self.l_tt - 8.0 * self.l_xx * self.l_xx
            + 4.0 * self.l_xx * self.l_t
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HeatWeight {
    pub psi: Psi,
    pub mu: f64,
    pub lambda: f64,
    pub k: u32,
    pub t_final: f64,
}

/// Everything [`HeatWeight::eval`] reports at one point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HeatWeightValues {
    pub x: f64,
    pub t: f64,
    pub gamma: f64,
    pub phi: f64,
    pub alpha: f64,
    pub theta: f64,
    pub jet: EllJet,
    pub a: f64,
    pub b: f64,
}

impl HeatWeight {
    pub fn new(psi: Psi, mu: f64, lambda: f64, k: u32, t_final: f64) -> Result<Self, WeightError> {
        if !(mu > 0.0) || !(lambda > 0.0) || k == 0 || !(t_final > 0.0) {
            return Err(WeightError::Parameter(format!(
                "need mu > 0, lambda > 0, k >= 1, T > 0; got mu = {mu}, lambda = {lambda}, k = {k}, T = {t_final}"
            )));
        }
        Ok(HeatWeight { psi, mu, lambda, k, t_final })
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        HeatWeight { lambda, ..*self }
    }

    fn check_time(&self, t: f64) -> Result<(), WeightError> {
        if t > 0.0 && t < self.t_final {
            Ok(())
        } else {
            Err(WeightError::SingularTime { t, t_final: self.t_final })
        }
    }

    /// `e^{2μ|ψ|∞}`
    fn e_star(&self) -> f64 {
        (2.0 * self.mu * self.psi.sup()).exp()
    }

    /// `γ` and its first two time derivatives.
    fn gamma_jet(&self, t: f64) -> [f64; 3] {
        let k = self.k as f64;
        let h = t * (self.t_final - t);
        let h1 = self.t_final - 2.0 * t;
        let g = h.powf(-k);
        let g1 = -k * h.powf(-k - 1.0) * h1;
        let g2 = k * (k + 1.0) * h.powf(-k - 2.0) * h1 * h1 + 2.0 * k * h.powf(-k - 1.0);
        [g, g1, g2]
    }

    /// `e^{μψ}` and its first three spatial derivatives.
    fn exp_jet(&self, x: f64) -> [f64; 4] {
        let mu = self.mu;
        let (p1, p2, p3) = (self.psi.d1(x), self.psi.d2(x), self.psi.d3(x));
        let e = (mu * self.psi.value(x)).exp();
        [
            e,
            mu * p1 * e,
            (mu * p2 + mu * mu * p1 * p1) * e,
            (mu * p3 + 3.0 * mu * mu * p1 * p2 + mu.powi(3) * p1.powi(3)) * e,
        ]
    }

    pub fn gamma(&self, t: f64) -> Result<f64, WeightError> {
        self.check_time(t)?;
        Ok(self.gamma_jet(t)[0])
    }

    /// `α(x,t)`; `ℓ = λα` and `θ = e^ℓ`.
    pub fn alpha(&self, x: f64, t: f64) -> Result<f64, WeightError> {
        self.check_time(t)?;
        Ok(((self.mu * self.psi.value(x)).exp() - self.e_star()) * self.gamma_jet(t)[0])
    }

    /// Largest value of `α` over `[0,1] × (0,T)`, attained at `x = 1/2`, `t = T/2`.
    pub fn alpha_max(&self) -> f64 {
        self.alpha(0.5, 0.5 * self.t_final).expect("midpoint is interior")
    }

    pub fn jet(&self, x: f64, t: f64) -> Result<EllJet, WeightError> {
        self.check_time(t)?;
        let [g, g1, g2] = self.gamma_jet(t);
        let [e, e1, e2, e3] = self.exp_jet(x);
        let lam = self.lambda;
        let e0 = e - self.e_star();
        Ok(EllJet {
            l: lam * e0 * g,
            l_x: lam * e1 * g,
            l_xx: lam * e2 * g,
            l_xxx: lam * e3 * g,
            l_t: lam * e0 * g1,
            l_tt: lam * e0 * g2,
            l_xt: lam * e1 * g1,
            l_xxt: lam * e2 * g1,
        })
    }

    pub fn eval(&self, x: f64, t: f64) -> Result<HeatWeightValues, WeightError> {
        let jet = self.jet(x, t)?;
        let gamma = self.gamma_jet(t)[0];
        let e = (self.mu * self.psi.value(x)).exp();
        let alpha = (e - self.e_star()) * gamma;
        Ok(HeatWeightValues {
            x,
            t,
            gamma,
            phi: e * gamma,
            alpha,
            theta: (self.lambda * alpha).exp(),
            jet,
            a: jet.big_a(),
            b: jet.big_b(),
        })
    }

    /// The `λ³` part of `B` predicted by the leading-order expansion,
    /// `2λ³μ⁴φ³|ψ'|⁴`.
    pub fn b_leading(&self, x: f64, t: f64) -> Result<f64, WeightError> {
        let v = self.eval(x, t)?;
        Ok(2.0 * self.lambda.powi(3) * self.mu.powi(4) * v.phi.powi(3) * self.psi.d1(x).powi(4))
    }

    /// Limit of `B / (2λ³μ⁴φ³|ψ'|⁴)` as `λ → ∞`, obtained by keeping the
    /// full `λ³` coefficient `2μ⁴φ³ψ'⁴ + 2μ³φ³ψ'²ψ''`.
    pub fn b_ratio_limit(&self, x: f64) -> f64 {
        let p1 = self.psi.d1(x);
        1.0 + self.psi.d2(x) / (self.mu * p1 * p1)
    }
}

/// `A` and `B` of the general identity, specialized symbolically to the
/// one-dimensional backward heat operator with `Φ = 2ℓ_xx`, kept as
/// canonical forms in ℓ and its derivatives.
pub struct SymbolicHeatTerms {
    ctx: Context,
    pub a: CanonicalForm,
    pub b: CanonicalForm,
}

impl SymbolicHeatTerms {
    pub fn new() -> Result<Self, WeightError> {
        let mut ctx = standard_context(Layout {
            n: 1,
            unknown: Unknown::Semimartingale { real: true },
            real_phi: true,
            time_dependent: true,
        });
        ctx.define("a0", Expr::int(1))?;
        ctx.define("a", Expr::int(-1))?;
        ctx.define("b", Expr::int(0))?;
        ctx.define("b01", Expr::int(0))?;
        identity_coefficients(&mut ctx)?;
        let l = ctx.get("l");
        ctx.define("Phi", Expr::int(2) * l.dx(1).dx(1))?;
        let s = Symbols::of(&ctx);
        let a = canonicalize(&ctx, &s.big_a())?;
        let b = canonicalize(&ctx, &s.big_b())?;
        Ok(SymbolicHeatTerms { ctx, a, b })
    }

    pub fn context(&self) -> &Context {
        &self.ctx
    }

    /// Evaluates `(A, B)` on a jet of ℓ.
    pub fn eval(&self, jet: &EllJet) -> Result<(f64, f64), WeightError> {
        let mut missing = None;
        let mut value = |form: &CanonicalForm| {
            form.eval_f64(|atom| {
                let v = if &*atom.name == "l" { jet.get(atom.dx[0], atom.dt) } else { None };
                v.map(|v| (v, 0.0)).unwrap_or_else(|| {
                    missing.get_or_insert_with(|| format!("{atom:?}"));
                    (f64::NAN, 0.0)
                })
            })
            .0
        };
        let (a, b) = (value(&self.a), value(&self.b));
        match missing {
            Some(atom) => Err(WeightError::Parameter(format!("jet does not provide {atom}"))),
            None => Ok((a, b)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BPointReport {
    pub x: f64,
    pub t: f64,
    pub lambdas: Vec<f64>,
    pub ratios: Vec<f64>,
    /// `1 + ψ''/(μψ'²)`, where the ratio actually converges.
    pub predicted_limit: f64,
    pub within_tolerance: bool,
    /// `|ratio − 1|` strictly decreases along the sweep.
    pub improving: bool,
    /// `|ratio − predicted_limit|` strictly decreases along the sweep.
    pub converging_to_limit: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BCheckReport {
    pub mu: f64,
    pub reference_lambda: f64,
    pub tolerance: f64,
    pub points: Vec<BPointReport>,
    pub passed: bool,
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

/// Evaluates `B / (2λ³μ⁴φ³|ψ'|⁴)` over a λ sweep at each point, and checks
/// that it is within `tol` of 1 at `reference_lambda` and approaches 1
/// monotonically.
pub fn leading_order_b_check(
    w: &HeatWeight,
    points: &[(f64, f64)],
    lambdas: &[f64],
    reference_lambda: f64,
    tol: f64,
) -> Result<BCheckReport, WeightError> {
    let mut reports = Vec::with_capacity(points.len());
    for &(x, t) in points {
        if w.psi.g1.contains(x) || w.psi.d1(x).abs() < 1e-12 {
            return Err(WeightError::Point { x, t, reason: "psi' must be bounded away from zero".into() });
        }
        if t < 0.2 * w.t_final || t > 0.8 * w.t_final {
            return Err(WeightError::Point { x, t, reason: "t must lie in [0.2T, 0.8T]".into() });
        }
        let mut ratios = Vec::with_capacity(lambdas.len());
        for &lam in lambdas {
            let wl = w.with_lambda(lam);
            ratios.push(wl.eval(x, t)?.b / wl.b_leading(x, t)?);
        }
        let reference = w.with_lambda(reference_lambda);
        let at_reference = reference.eval(x, t)?.b / reference.b_leading(x, t)?;
        let limit = w.b_ratio_limit(x);
        let dev: Vec<f64> = ratios.iter().map(|r| (r - 1.0).abs()).collect();
        let dev_limit: Vec<f64> = ratios.iter().map(|r| (r - limit).abs()).collect();
        reports.push(BPointReport {
            x,
            t,
            lambdas: lambdas.to_vec(),
            ratios,
            predicted_limit: limit,
            within_tolerance: (at_reference - 1.0).abs() <= tol,
            improving: strictly_decreasing(&dev),
            converging_to_limit: strictly_decreasing(&dev_limit),
        });
    }
    let passed = reports.iter().all(|p| p.within_tolerance && p.improving);
    Ok(BCheckReport { mu: w.mu, reference_lambda, tolerance: tol, points: reports, passed })
}

/// Weight of the forward Ginzburg-Landau estimate: `φ = e^{3μt}`,
/// `ℓ = μφ`, `θ = e^ℓ`. Only `ℓ` is exposed since `θ` overflows quickly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GlWeight {
    pub mu: f64,
}

impl GlWeight {
    pub fn new(mu: f64) -> Result<Self, WeightError> {
        if !(mu >= 2.0) {
            return Err(WeightError::Parameter(format!("mu must be at least 2, got {mu}")));
        }
        Ok(GlWeight { mu })
    }

    pub fn phi(&self, t: f64) -> f64 {
        (3.0 * self.mu * t).exp()
    }

    /// `ℓ = log θ`
    pub fn ell(&self, t: f64) -> f64 {
        self.mu * self.phi(t)
    }

    /// `log(θ(t2)/θ(t0))`
    pub fn log_theta_ratio(&self, t2: f64, t0: f64) -> f64 {
        self.ell(t2) - self.ell(t0)
    }
}

/// `(x, t, γ, φ, α, θ, A, B)` rows on a tensor grid, for CSV traces.
pub fn trace(w: &HeatWeight, xs: &[f64], ts: &[f64]) -> Result<Vec<HeatWeightValues>, WeightError> {
    let mut rows = Vec::with_capacity(xs.len() * ts.len());
    for &t in ts {
        for &x in xs {
            rows.push(w.eval(x, t)?);
        }
    }
    Ok(rows)
}
