//! Numerical side of the Carleman toolkit: weight functions, a forward
//! stochastic Ginzburg-Landau solver, manufactured backward heat solutions,
//! Monte-Carlo evaluation of weighted estimates, and the inverse-problem
//! experiment.

pub mod demos;
pub mod gl;
pub mod heat;
pub mod inverse;
pub mod spde;
pub mod weights;

pub use demos::{first_order_demo, ode_demo, BumpSum, DemoError, OdeReport, OdeSystem, Transport, TransportReport};
pub use gl::{carleman_gl_check, gl_terms, random_problem, GlCheckReport, GlTerms, RandomProblemSpec};
pub use heat::{carleman_heat_check, heat_terms, manufacture_heat_pair, HeatCheckReport, HeatTerms, ManufacturedPair};
pub use inverse::{
    backward_uniqueness_probe, compute_tau, grid_argmin_mu, optimize_mu, optimizer_agreement, stability_experiment, tau_variants, theta_monotone,
    CutoffSpec, InverseError, MuOptimum, OptimizerAgreement, StabilityReport, TauVariants, UniquenessReport,
};
pub use spde::{brownian, dt_convergence, heat_decay_check, solve_gl_forward, solve_path, Coefficient, Field, Grid1D, PathEnsemble, SimError, SpdeProblem};
pub use weights::{
    leading_order_b_check, psi_1d, BCheckReport, EllJet, GlWeight, HeatWeight, Interval, Psi, SymbolicHeatTerms, WeightError,
};
