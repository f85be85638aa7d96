//! Closed-form sequential estimation of multivariate stochastic volatility.
//!
//! The precision matrix follows a multiplicative random walk driven by a
//! singular multivariate beta shock. Combined with an inverted Wishart prior
//! this gives conjugate updates: the whole posterior is summarized by a scale
//! matrix `S_t = S_{t-1} / k + y_t y_t'`, and one-step forecasts are
//! multivariate Student t.
//!
//! Everything is generic over [`Real`] (`f32` or `f64`); the aliases below fix
//! the scalar to `f64`.
//!
//! ```
//! use msv_core::{Config, State, SymPosDef};
//!
//! let cfg = Config::new(2, 0.9, SymPosDef::identity(2)).unwrap();
//! let mut state = State::initial(&cfg).unwrap();
//! let out = state.advance(&cfg, &[0.01, -0.02]).unwrap();
//! assert_eq!(state.t(), 1);
//! assert!(out.predictive_logdensity.is_finite());
//! ```

pub mod diagnostics;
pub mod error;
pub mod filter;
pub mod matstat;
pub mod scalar;
pub mod simulator;

pub use diagnostics::{
    bayes_factor, burn_in_prior, default_grid, format_sig, grid_search, grid_search_detailed,
    initial_plug_in, loglik_constant, loglik_term, loglik_term_parts, lt_closed_form,
    plug_in_parts, run_delta, BayesFactorSeries, DeltaRun, FlatDayPolicy, GridOptions,
    GridOutcome, GridReport, GridRow, LikelihoodAccumulator, LoglikParts, MsseAccumulator,
    PriorChoice,
};
pub use error::{Error, Result};
pub use filter::{
    compute_k, expectation_invariance_check, posterior_mean, precision_law, prior_mean_next, step,
    FilterState, ModelConfig, PrecisionLaw, StepOutput,
};
pub use matstat::{Mat, SymPosDef, UpperCholesky};
pub use scalar::Real;
pub use simulator::{
    evolve_precision, evolve_precision_factor, sample_singular_beta, simulate_path,
    simulate_with_rng, SimConfig, SimPath,
};

pub type Matrix = Mat<f64>;
pub type SpdMatrix = SymPosDef<f64>;
pub type Config = ModelConfig<f64>;
pub type State = FilterState<f64>;
pub type Step = StepOutput<f64>;
pub type Run = DeltaRun<f64>;
pub type Path = SimPath<f64>;
pub type Simulation = SimConfig<f64>;
