//! Both sides of the pointwise weighted identity for
//!
//! ```text
//! L w = a0 dw − (a + ib) Σ (a^{jk} w_{x_j})_{x_k} dt + b0·∇w dt,   θ = e^ℓ,  z = θ w.
//! ```
//!
//! All index sums are expanded for the context dimension. The left side is
//! built from `w = θ⁻¹ z` and the operator itself, so nothing about the
//! weight rewriting is assumed; the right side is assembled term by term
//! from the auxiliary quantities `A, Λ, I₁, B, D, M, V, E, F`.

use crate::context::Context;
use crate::error::ExprError;
use crate::expr::Expr;

/// How the unknown `z` is declared.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Unknown {
    /// `z` is a continuous semimartingale with `dz = P dt + Q dB`.
    Semimartingale { real: bool },
    /// `z` is a deterministic field (depends on t only if `depends_t`).
    Deterministic { real: bool, depends_t: bool },
    /// `z` is declared as a plain field, to be given by a definition.
    Defined,
}

/// Options for [`standard_context`].
#[derive(Clone, Copy, Debug)]
pub struct Layout {
    pub n: usize,
    pub unknown: Unknown,
    /// Φ is real (all data real-valued).
    pub real_phi: bool,
    /// Coefficients, ℓ and Φ depend on t.
    pub time_dependent: bool,
}

impl Layout {
    pub fn stochastic(n: usize) -> Self {
        Layout { n, unknown: Unknown::Semimartingale { real: false }, real_phi: false, time_dependent: true }
    }
}

/// Context with the conventional symbol names used by the builders:
/// `z` (jets `P`, `Q`), `l` (ℓ), `theta` (`e^l`), `Phi`, scalars `a0, a, b`,
/// vector `b01..b0n`, symmetric family `a11, a12, ..`.
pub fn standard_context(layout: Layout) -> Context {
    let mut ctx = Context::new(layout.n);
    match layout.unknown {
        Unknown::Semimartingale { real } => {
            ctx.semimartingale("z", "P", "Q", real);
        }
        Unknown::Deterministic { real, depends_t } => {
            if real {
                ctx.real_field("z");
            } else {
                ctx.complex_field("z");
            }
            ctx.set_dependence("z", true, depends_t);
        }
        Unknown::Defined => {
            ctx.complex_field("z");
        }
    }
    ctx.real_field("l");
    if layout.real_phi {
        ctx.real_field("Phi");
    } else {
        ctx.complex_field("Phi");
    }
    ctx.real_scalar("a0");
    ctx.real_scalar("a");
    ctx.real_scalar("b");
    ctx.scalar_vector("b0");
    ctx.symmetric_family("a");
    if !layout.time_dependent {
        ctx.set_dependence("l", true, false);
        ctx.set_dependence("Phi", true, false);
        for j in 1..=layout.n {
            for k in j..=layout.n {
                ctx.set_dependence(&format!("a{j}{k}"), true, false);
            }
        }
    }
    let l = ctx.get("l");
    ctx.exponential("theta", l).expect("logarithm is a plain field");
    for j in 1..=layout.n {
        let b0j = format!("b0{j}");
        ctx.vanishing_product("a", &b0j);
        ctx.vanishing_product("b", &b0j);
    }
    ctx
}

/// Defines `a^{jk} = δ^{jk}`.
pub fn identity_coefficients(ctx: &mut Context) -> Result<(), ExprError> {
    let n = ctx.dim();
    for j in 1..=n {
        for k in j..=n {
            ctx.define(&format!("a{j}{k}"), Expr::int((j == k) as i64))?;
        }
    }
    Ok(())
}

pub(crate) fn sum_over<F: FnMut(usize) -> Expr>(n: usize, f: F) -> Expr {
    Expr::sum((1..=n).map(f))
}

pub(crate) fn sum2<F: FnMut(usize, usize) -> Expr>(n: usize, mut f: F) -> Expr {
    Expr::sum((1..=n).flat_map(|j| (1..=n).map(move |k| (j, k))).map(|(j, k)| f(j, k)))
}

fn two() -> Expr {
    Expr::int(2)
}

/// The symbols of a standard context as expressions.
#[derive(Clone, Debug)]
pub struct Symbols {
    pub n: usize,
    pub z: Expr,
    pub l: Expr,
    pub theta: Expr,
    pub phi: Expr,
    pub a0: Expr,
    pub a: Expr,
    pub b: Expr,
    pub b0: Vec<Expr>,
    /// `ajk[j-1][k-1]`, symmetric.
    pub ajk: Vec<Vec<Expr>>,
}

impl Symbols {
    pub fn of(ctx: &Context) -> Self {
        let n = ctx.dim();
        Symbols {
            n,
            z: ctx.get("z"),
            l: ctx.get("l"),
            theta: ctx.get("theta"),
            phi: ctx.get("Phi"),
            a0: ctx.get("a0"),
            a: ctx.get("a"),
            b: ctx.get("b"),
            b0: (1..=n).map(|j| ctx.get(&format!("b0{j}"))).collect(),
            ajk: (1..=n).map(|j| (1..=n).map(|k| ctx.get(&format!("a{j}{k}"))).collect()).collect(),
        }
    }

    pub fn ajk(&self, j: usize, k: usize) -> Expr {
        self.ajk[j - 1][k - 1].clone()
    }

    pub fn b0(&self, j: usize) -> Expr {
        self.b0[j - 1].clone()
    }

    pub fn w(&self) -> Expr {
        self.theta.pow(-1) * self.z.clone()
    }

    /// `a² + b²`
    pub fn ab2(&self) -> Expr {
        self.a.pow(2) + self.b.pow(2)
    }

    /// `b0·∇ℓ`
    pub fn b0_grad_l(&self) -> Expr {
        sum_over(self.n, |j| self.b0(j) * self.l.dx(j))
    }

    /// `b0·∇f`
    pub fn b0_grad(&self, f: &Expr) -> Expr {
        sum_over(self.n, |j| self.b0(j) * f.dx(j))
    }

    /// `a0 ℓ_t + b0·∇ℓ`
    pub fn time_weight(&self) -> Expr {
        &self.a0 * &self.l.dtau() + self.b0_grad_l()
    }

    /// The operator applied to `u`.
    pub fn operator(&self, u: &Expr) -> Expr {
        let principal = sum2(self.n, |j, k| (self.ajk(j, k) * u.dx(j)).dx(k));
        let ab = &self.a + &(Expr::i() * self.b.clone());
        &self.a0 * &u.d() - ab * principal * Expr::dt() + self.b0_grad(u) * Expr::dt()
    }

    pub fn big_a(&self) -> Expr {
        sum2(self.n, |j, k| {
            self.ajk(j, k) * self.l.dx(j) * self.l.dx(k) - (self.ajk(j, k) * self.l.dx(j)).dx(k)
        })
    }

    pub fn lambda(&self) -> Expr {
        sum2(self.n, |j, k| (self.ajk(j, k) * self.z.dx(j)).dx(k)) + self.big_a() * self.z.clone()
    }

    /// `Σ a^{jk} ℓ_{x_j} f_{x_k}`
    pub fn grad_l_dot(&self, f: &Expr) -> Expr {
        sum2(self.n, |j, k| self.ajk(j, k) * self.l.dx(j) * f.dx(k))
    }

    pub fn i1(&self) -> Expr {
        -(&self.a * &self.lambda())
            + Expr::int(2) * Expr::i() * self.b.clone() * self.grad_l_dot(&self.z)
            + (&self.phi - &(self.a0.clone() * self.l.dtau()) - self.b0_grad_l()) * self.z.clone()
    }

    pub fn i2(&self) -> Expr {
        let z = &self.z;
        &self.a0 * &z.d() - Expr::i() * self.b.clone() * self.lambda() * Expr::dt()
            + Expr::int(2) * self.a.clone() * self.grad_l_dot(z) * Expr::dt()
            + self.b0_grad(z) * Expr::dt()
            - self.phi.clone() * z.clone() * Expr::dt()
    }

    pub fn abs2(&self, u: &Expr) -> Expr {
        u * &u.conj()
    }

    pub fn dz(&self) -> Expr {
        self.z.d()
    }

    pub fn dzbar(&self) -> Expr {
        self.z.d().conj()
    }

    pub fn big_b(&self) -> Expr {
        let (a, b, a0, l, phi) = (&self.a, &self.b, &self.a0, &self.l, &self.phi);
        let big_a = self.big_a();
        let tw = self.time_weight();
        Expr::sum([
            two() * self.ab2() * sum2(self.n, |j, k| (big_a.clone() * self.ajk(j, k) * l.dx(j)).dx(k)),
            a * &(a0 * &big_a.dtau()),
            two() * a.clone() * big_a.clone() * phi.re(),
            -(two() * b.clone() * big_a.clone() * phi.im()),
            -(two() * (phi.clone() * (phi.conj() - tw.clone())).re()),
            a0 * &(a0 * &l.dtau().dtau() + self.b0_grad_l().dtau()),
            self.b0_grad(&tw),
        ])
    }

    pub fn big_d(&self, j: usize, k: usize) -> Expr {
        let (a, b, a0, l, phi) = (&self.a, &self.b, &self.a0, &self.l, &self.phi);
        let n = self.n;
        Expr::sum([
            -(a * &(a0 * &self.ajk(j, k).dtau())),
            two() * b.clone() * phi.im() * self.ajk(j, k),
            -(two() * a.clone() * phi.re() * self.ajk(j, k)),
            two()
                * self.ab2()
                * sum2(n, |jp, kp| {
                    self.ajk(j, kp) * (self.ajk(jp, k) * l.dx(jp)).dx(kp)
                        + self.ajk(k, kp) * (self.ajk(jp, j) * l.dx(jp)).dx(kp)
                        - (self.ajk(j, k) * self.ajk(jp, kp) * l.dx(jp)).dx(kp)
                }),
        ])
    }

    pub fn big_m(&self) -> Expr {
        let (a, b, a0, l, z) = (&self.a, &self.b, &self.a0, &self.l, &self.z);
        Expr::sum([
            -(a * &(a0 * &(self.big_a() * self.abs2(z)))),
            a0 * &sum2(self.n, |j, k| {
                self.ajk(j, k) * (a * &(z.dx(j) * z.dx(k).conj()) + two() * b.clone() * l.dx(j) * (z.dx(k).conj() * z.clone()).im())
            }),
            -(a0 * &(self.time_weight() * self.abs2(z))),
        ])
    }

    pub fn big_v(&self, k: usize) -> Expr {
        let (a, b, a0, l, z, phi) = (&self.a, &self.b, &self.a0, &self.l, &self.z, &self.phi);
        let n = self.n;
        let dt = Expr::dt();
        let zb = z.conj();
        Expr::sum([
            -(two() * a.clone() * a0.clone() * sum_over(n, |j| self.ajk(j, k) * (z.dx(j) * self.dzbar()).re())),
            -(two() * a0.clone() * b.clone() * sum_over(n, |j| self.ajk(j, k) * l.dx(j) * (z * &self.dzbar()).im())),
            -(two() * self.big_a() * self.ab2() * sum_over(n, |j| self.ajk(j, k) * l.dx(j)) * self.abs2(z) * dt.clone()),
            two() * a.clone() * sum_over(n, |j| self.ajk(j, k) * (z.dx(j).conj() * phi.clone() * z.clone()).re()) * dt.clone(),
            two()
                * b.clone()
                * sum_over(n, |j| {
                    self.ajk(j, k) * (z.dx(j) * (phi.conj() - a0.clone() * l.dtau()) * zb.clone()).im()
                })
                * dt.clone(),
            two()
                * self.ab2()
                * Expr::sum((1..=n).flat_map(|j| {
                    (1..=n).flat_map(move |jp| (1..=n).map(move |kp| (j, jp, kp)))
                }).map(|(j, jp, kp)| {
                    self.ajk(j, k) * self.ajk(jp, kp) * l.dx(j) * z.dx(jp) * z.dx(kp).conj()
                        - self.ajk(j, kp)
                            * self.ajk(jp, k)
                            * l.dx(j)
                            * (z.dx(jp) * z.dx(kp).conj() + z.dx(jp).conj() * z.dx(kp))
                }))
                * dt,
        ])
    }

    pub fn big_e(&self, j: usize) -> Expr {
        let (a0, l, phi) = (&self.a0, &self.l, &self.phi);
        sum_over(self.n, |k| {
            self.ajk(j, k) * (two() * l.dx(k) * (phi.conj() - a0.clone() * l.dtau()) - phi.conj().dx(k))
        })
    }

    pub fn big_f(&self, j: usize) -> Expr {
        let (a0, l, phi) = (&self.a0, &self.l, &self.phi);
        sum_over(self.n, |k| {
            self.ajk(j, k) * (phi - &(a0.clone() * l.dtau())).dx(k) - a0 * &(self.ajk(j, k) * l.dx(k)).dtau()
                - two() * self.ajk(j, k) * l.dx(k) * phi.clone()
        })
    }

    /// `2 Re(θ · conj(I₁) · L w)` with `w = θ⁻¹ z`.
    pub fn lhs(&self) -> Expr {
        two() * (self.theta.clone() * self.i1().conj() * self.operator(&self.w())).re()
    }

    /// Right side as a list of named summands.
    pub fn rhs_terms(&self) -> Vec<(&'static str, Expr)> {
        let (a, b, a0, l, z, phi) = (&self.a, &self.b, &self.a0, &self.l, &self.z, &self.phi);
        let n = self.n;
        let dt = Expr::dt;
        let dz = self.dz();
        let dzb = self.dzbar();
        let i1 = self.i1();
        vec![
            ("energy_I1", two() * self.abs2(&i1) * dt()),
            ("dM", self.big_m().d()),
            ("divergence_V", sum_over(n, |k| self.big_v(k).dx(k))),
            ("B", self.big_b() * self.abs2(z) * dt()),
            ("D", sum2(n, |j, k| self.big_d(j, k) * z.dx(j) * z.dx(k).conj()) * dt()),
            (
                "E_F",
                two()
                    * sum_over(n, |j| {
                        ((a * &self.big_e(j) + phi.conj() * self.b0(j)) * z.conj() * z.dx(j)).re()
                            + b * &(self.big_f(j) * z.clone() * z.dx(j).conj()).im()
                    })
                    * dt(),
            ),
            (
                "gradient_quadratic_variation",
                -(a * &(a0 * &sum2(n, |j, k| self.ajk(j, k) * z.dx(j).d() * z.dx(k).d().conj()))),
            ),
            ("transport_divergence", -(self.b0_grad(&(self.time_weight() * self.abs2(z))) * dt())),
            (
                "quadratic_variation",
                a0 * &((a * &self.big_a() + self.time_weight()) * dz.clone() * dzb.clone()),
            ),
            (
                "mixed_quadratic_variation",
                -(two() * a0.clone() * b.clone() * sum2(n, |j, k| self.ajk(j, k) * l.dx(k) * (dz.clone() * z.dx(j).d().conj()).im())),
            ),
            (
                "martingale_terms",
                two()
                    * a0.clone()
                    * (b * &(sum2(n, |j, k| (self.ajk(j, k) * l.dx(k)).dx(j)) * (z * &dzb).im())
                        + (phi.conj() * z.conj() * dz).re()),
            ),
        ]
    }

    pub fn rhs(&self) -> Expr {
        Expr::sum(self.rhs_terms().into_iter().map(|(_, e)| e))
    }
}
