//! Conjugate sequential recursion for the volatility matrix.
//!
//! At time `t` the posterior is `Sigma_t | y^t ~ IW_p(n + 2p, S_t)` with
//! `n = 1/(1-delta)`. One step forecasts `y_{t+1}` from `S_t` and then folds
//! the observation in with `S_{t+1} = S_t / k + y y'`.
//!
//! The state carries the dense `S_t` together with an upper Cholesky factor
//! `S_t = R'R` maintained by Givens updates. Every scalar the diagnostics need
//! (`y'S^{-1}y`, `log|S|`) is read from the factor, so long runs whose scale
//! matrix becomes severely ill-conditioned keep full relative accuracy.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::matstat::{
    cholesky_upper, dot, polar_factor, student_t_logpdf_sq, Mat, SymPosDef, UpperCholesky,
};
use crate::scalar::Real;

/// Steps between re-factorizations of the dense scale matrix.
pub const REFRESH_INTERVAL: usize = 500;

/// Smallest diagonal ratio `min r_ii / max r_ii` at which a fresh
/// factorization of the dense matrix is trusted over the running factor.
const REFRESH_MIN_DIAG_RATIO: f64 = 1e-4;

/// Decay constant `k = (delta(1-p) + p) / (delta(2-p) + p - 1)`.
///
/// This is the unique `k` keeping `E(Sigma^{-1} | y^t)` unchanged from the
/// posterior at `t` to the prior at `t + 1`.
pub fn compute_k<T: Real>(delta: T, p: usize) -> Result<T> {
    check_discount(delta)?;
    if p == 0 {
        return Err(Error::Domain("dimension must be at least 1".into()));
    }
    let pf = T::from_usize_lossy(p);
    Ok((delta * (T::one() - pf) + pf) / (delta * (T::lit(2.0) - pf) + pf - T::one()))
}

fn check_discount<T: Real>(delta: T) -> Result<()> {
    let lower = T::lit(2.0) / T::lit(3.0);
    if !(delta > lower && delta < T::one()) {
        return Err(Error::Domain(format!(
            "discount factor {delta} must lie strictly between 2/3 and 1"
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig<T> {
    p: usize,
    delta: T,
    k: T,
    n: T,
    m: T,
    prior_scale: SymPosDef<T>,
}

impl<T: Real> ModelConfig<T> {
    pub fn new(p: usize, delta: T, prior_scale: SymPosDef<T>) -> Result<Self> {
        let k = compute_k(delta, p)?;
        Self::build(p, delta, k, prior_scale)
    }

    /// Same model but with a caller-chosen decay constant. Used to study the
    /// conventional `k = 1/delta`, which drifts the precision expectation
    /// upward whenever `p > 1`.
    pub fn with_decay(p: usize, delta: T, k: T, prior_scale: SymPosDef<T>) -> Result<Self> {
        check_discount(delta)?;
        if !(k > T::one()) {
            return Err(Error::Domain(format!("decay constant {k} must exceed 1")));
        }
        Self::build(p, delta, k, prior_scale)
    }

    fn build(p: usize, delta: T, k: T, prior_scale: SymPosDef<T>) -> Result<Self> {
        check_dim(p, prior_scale.dim())?;
        let one = T::one();
        let n = one / (one - delta);
        let m = delta / (one - delta) + T::from_usize_lossy(p) - one;
        Ok(Self {
            p,
            delta,
            k,
            n,
            m,
            prior_scale,
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }
    pub fn delta(&self) -> T {
        self.delta
    }
    pub fn k(&self) -> T {
        self.k
    }
    /// `n = 1/(1-delta)`
    pub fn n(&self) -> T {
        self.n
    }
    /// First parameter of the singular beta, `m = delta/(1-delta) + p - 1`.
    pub fn m(&self) -> T {
        self.m
    }
    pub fn prior_scale(&self) -> &SymPosDef<T> {
        &self.prior_scale
    }

    /// Degrees of freedom of the one-step Student t forecast, `delta/(1-delta)`.
    pub fn forecast_dof(&self) -> T {
        self.delta / (T::one() - self.delta)
    }

    /// `(1-delta) / (2 delta - 1)`, i.e. `1/(n-2)`.
    pub fn posterior_mean_coef(&self) -> T {
        (T::one() - self.delta) / (T::lit(2.0) * self.delta - T::one())
    }

    /// `(1-delta) / (k (3 delta - 2))`
    pub fn forecast_coef(&self) -> T {
        (T::one() - self.delta) / (self.k * (T::lit(3.0) * self.delta - T::lit(2.0)))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FilterState<T> {
    t: usize,
    scale: Mat<T>,
    factor: UpperCholesky<T>,
    prior_weight: T,
}

/// Everything the forecast at one step produced, computed from the scale
/// matrix *before* the observation was folded in.
#[derive(Clone, Debug, PartialEq)]
pub struct StepOutput<T> {
    /// `Var(y_{t+1} | y^t) = (1-delta) S_t / ((3 delta - 2) k)`
    pub forecast_scale: SymPosDef<T>,
    /// `forecast_scale^{-1/2} y`; unit covariance under the forecast.
    pub u_star: Vec<T>,
    /// `sqrt(k) S_t^{-1/2} y`; standardized Student t under the forecast.
    pub u: Vec<T>,
    /// Forecast log-density of `y` itself.
    pub predictive_logdensity: T,
    /// Forecast log-density of `u` (no change-of-variables term).
    pub u_logdensity: T,
    /// `y' S_t^{-1} y`
    pub q: T,
    /// `log|S_t|`
    pub log_det_prior: T,
    /// `log|S_{t+1}|`
    pub log_det_posterior: T,
}

impl<T: Real> FilterState<T> {
    pub fn initial(cfg: &ModelConfig<T>) -> Result<Self> {
        let factor = crate::matstat::chol_upper(cfg.prior_scale())?;
        Ok(Self {
            t: 0,
            scale: cfg.prior_scale().matrix().clone(),
            factor,
            prior_weight: T::one(),
        })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn dim(&self) -> usize {
        self.scale.nrows()
    }

    /// Dense `S_t`.
    pub fn scale(&self) -> &Mat<T> {
        &self.scale
    }

    /// Upper factor `R` with `S_t = R'R`.
    pub fn factor(&self) -> &UpperCholesky<T> {
        &self.factor
    }

    pub fn log_det_scale(&self) -> T {
        self.factor.log_det()
    }

    /// `k^{-t}`, the weight the prior scale still carries inside `S_t`.
    pub fn prior_weight(&self) -> T {
        self.prior_weight
    }

    /// `sum_j k^{j-t} y_j y_j'`: the scale with the prior's contribution
    /// removed. Only positive semi-definite, and singular while `t < p`.
    pub fn approximate_scale(&self, cfg: &ModelConfig<T>) -> Mat<T> {
        &self.scale - &cfg.prior_scale().matrix().scaled(self.prior_weight)
    }

    /// `S_t^{-1/2} y` with the symmetric root, through the factor:
    /// `S^{-1/2} = P' R^{-T}` where `P` is the orthogonal polar factor of `R`.
    pub fn standardize(&self, y: &[T]) -> Result<Vec<T>> {
        check_dim(self.dim(), y.len())?;
        let w = self.factor.solve_upper_transpose(y);
        let polar = polar_factor(self.factor.factor())?;
        Ok(polar.tr_mul_vec(&w))
    }

    /// Forecast `y`, then fold it into the posterior in place.
    pub fn advance(&mut self, cfg: &ModelConfig<T>, y: &[T]) -> Result<StepOutput<T>> {
        check_dim(cfg.p(), self.dim())?;
        check_dim(self.dim(), y.len())?;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite observation at t = {}", self.t + 1)));
        }
        let p = self.dim();
        let pf = T::from_usize_lossy(p);
        let half = T::lit(0.5);
        let k = cfg.k();
        let delta = cfg.delta();

        let w = self.factor.solve_upper_transpose(y);
        let q = dot(&w, &w);
        let polar = polar_factor(self.factor.factor())?;
        let z = polar.tr_mul_vec(&w);
        let u: Vec<T> = z.iter().map(|&v| k.sqrt() * v).collect();
        let star = (k * (T::lit(3.0) * delta - T::lit(2.0)) / (T::one() - delta)).sqrt();
        let u_star: Vec<T> = z.iter().map(|&v| star * v).collect();

        let log_det_prior = self.factor.log_det();
        let u_logdensity = student_t_logpdf_sq(k * q, p, cfg.forecast_dof())?;
        let predictive_logdensity = u_logdensity + pf * half * k.ln() - half * log_det_prior;
        let forecast_scale = SymPosDef::from_trusted(self.scale.scaled(cfg.forecast_coef()));

        let inv_k = T::one() / k;
        self.scale.scale_mut(inv_k);
        self.scale.add_outer_mut(T::one(), y);
        self.factor.scale_mut(inv_k);
        self.factor.rank_one_update(y);
        self.prior_weight *= inv_k;
        self.t += 1;
        if self.t.is_multiple_of(REFRESH_INTERVAL) {
            self.refresh();
        }

        Ok(StepOutput {
            forecast_scale,
            u_star,
            u,
            predictive_logdensity,
            u_logdensity,
            q,
            log_det_prior,
            log_det_posterior: self.factor.log_det(),
        })
    }

    /// Replace the running factor with a fresh factorization of the dense
    /// scale, but only when the dense matrix is well enough conditioned to
    /// carry the same information.
    fn refresh(&mut self) {
        if let Ok(fresh) = cholesky_upper(&self.scale) {
            let d = fresh.factor().diagonal();
            let hi = d.iter().fold(T::zero(), |a, &b| a.max(b));
            let lo = d.iter().fold(T::infinity(), |a, &b| a.min(b));
            if lo / hi > T::lit(REFRESH_MIN_DIAG_RATIO) {
                self.factor = fresh;
            }
        }
    }
}

/// Pure form of [`FilterState::advance`].
pub fn step<T: Real>(
    cfg: &ModelConfig<T>,
    state: &FilterState<T>,
    y: &[T],
) -> Result<(FilterState<T>, StepOutput<T>)> {
    let mut next = state.clone();
    let out = next.advance(cfg, y)?;
    Ok((next, out))
}

/// `E(Sigma_t | y^t) = (1-delta) S_t / (2 delta - 1)`.
pub fn posterior_mean<T: Real>(cfg: &ModelConfig<T>, state: &FilterState<T>) -> SymPosDef<T> {
    SymPosDef::from_trusted(state.scale().scaled(cfg.posterior_mean_coef()))
}

/// `E(Sigma_{t+1} | y^t) = (1-delta) S_t / (k (3 delta - 2))`.
pub fn prior_mean_next<T: Real>(cfg: &ModelConfig<T>, state: &FilterState<T>) -> SymPosDef<T> {
    SymPosDef::from_trusted(state.scale().scaled(cfg.forecast_coef()))
}

/// Traces of `E(Sigma_t^{-1} | y^t) = (n+p-1) S_t^{-1}` and
/// `E(Sigma_{t+1}^{-1} | y^t) = (delta n + p - 1) k S_t^{-1}`.
///
/// They coincide exactly when `k` comes from [`compute_k`].
pub fn expectation_invariance_check<T: Real>(
    cfg: &ModelConfig<T>,
    state: &FilterState<T>,
) -> (T, T) {
    let tr = state.factor().inverse().trace();
    let pm1 = T::from_usize_lossy(cfg.p()) - T::one();
    let posterior = (cfg.n() + pm1) * tr;
    let prior_next = (cfg.delta() * cfg.n() + pm1) * cfg.k() * tr;
    (posterior, prior_next)
}

/// Which conditional law of the precision matrix to describe.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PrecisionLaw {
    /// `Sigma_t^{-1} | y^t ~ W_p(n+p-1, S_t^{-1})`
    Posterior,
    /// `Sigma_{t+1}^{-1} | y^t ~ W_p(delta n + p - 1, k S_t^{-1})`
    NextPrior,
}

/// Degrees of freedom and scale of the Wishart law of the precision matrix.
pub fn precision_law<T: Real>(
    cfg: &ModelConfig<T>,
    state: &FilterState<T>,
    law: PrecisionLaw,
) -> (T, Mat<T>) {
    let pm1 = T::from_usize_lossy(cfg.p()) - T::one();
    let inv = state.factor().inverse();
    match law {
        PrecisionLaw::Posterior => (cfg.n() + pm1, inv),
        PrecisionLaw::NextPrior => (cfg.delta() * cfg.n() + pm1, inv.scaled(cfg.k())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn eye(p: usize) -> SymPosDef<f64> {
        SymPosDef::identity(p)
    }

    #[test]
    fn k_univariate_is_inverse_delta() {
        assert_relative_eq!(compute_k(0.95, 1).unwrap(), 1.0 / 0.95, epsilon = 1e-15);
        assert_relative_eq!(compute_k(0.8, 1).unwrap(), 1.0 / 0.8, epsilon = 1e-15);
    }

    #[test]
    fn k_eight_assets() {
        assert_relative_eq!(compute_k(0.95, 8).unwrap(), 27.0 / 26.0, epsilon = 1e-15);
        assert_relative_eq!(compute_k(0.95, 8).unwrap(), 1.35 / 1.30, epsilon = 1e-15);
    }

    #[test]
    fn k_near_one() {
        for p in [1, 2, 5, 30] {
            let k = compute_k(1.0f64 - 1e-12, p).unwrap();
            assert!((k - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn k_matches_dof_form() {
        for p in 1..10 {
            for delta in [0.7, 0.8, 0.9, 0.99] {
                let n = 1.0 / (1.0 - delta);
                let alt = (n + p as f64 - 1.0) / (delta * n + p as f64 - 1.0);
                let k = compute_k(delta, p).unwrap();
                assert_relative_eq!(k, alt, epsilon = 1e-13);
                assert!(1.0 / k > 0.0 && 1.0 / k < 1.0);
            }
        }
    }

    #[test]
    fn discount_range_enforced() {
        for d in [0.5, 2.0 / 3.0, 0.6, 1.0, 1.2, f64::NAN] {
            assert!(compute_k(d, 2).is_err(), "{d}");
            assert!(ModelConfig::new(2, d, eye(2)).is_err());
        }
        assert!(ModelConfig::new(0, 0.9, eye(1)).is_err());
        assert!(ModelConfig::new(3, 0.9, eye(2)).is_err());
    }

    #[test]
    fn config_constants() {
        let cfg = ModelConfig::new(8, 0.95, eye(8)).unwrap();
        assert_relative_eq!(cfg.n(), 20.0, epsilon = 1e-12);
        assert_relative_eq!(cfg.m(), 26.0, epsilon = 1e-12);
        assert_relative_eq!(cfg.k(), 27.0 / 26.0, epsilon = 1e-15);
        assert_relative_eq!((1.0 - cfg.delta()) * cfg.n(), 1.0, epsilon = 1e-14);

        let cfg = ModelConfig::new(1, 0.9, eye(1)).unwrap();
        assert_relative_eq!(cfg.n(), 10.0, epsilon = 1e-12);
        assert_relative_eq!(cfg.m(), 9.0, epsilon = 1e-12);
        assert_relative_eq!(cfg.k(), 1.0 / 0.9, epsilon = 1e-15);
    }

    #[test]
    fn step_basis_vector() {
        let cfg = ModelConfig::new(2, 0.95, eye(2)).unwrap();
        let s0 = FilterState::initial(&cfg).unwrap();
        let (s1, _) = step(&cfg, &s0, &[1.0, 0.0]).unwrap();
        let kinv = 1.0 / cfg.k();
        assert_relative_eq!(s1.scale()[(0, 0)], kinv + 1.0, epsilon = 1e-15);
        assert_relative_eq!(s1.scale()[(1, 1)], kinv, epsilon = 1e-15);
        assert_eq!(s1.scale()[(0, 1)], 0.0);
        assert_eq!(s1.t(), 1);
        assert_eq!(s0.t(), 0);
    }

    #[test]
    fn zero_return_only_discounts() {
        let cfg = ModelConfig::new(3, 0.9, SymPosDef::from_diag(&[1.0, 2.0, 3.0]).unwrap()).unwrap();
        let s0 = FilterState::initial(&cfg).unwrap();
        let (s1, out) = step(&cfg, &s0, &[0.0; 3]).unwrap();
        assert!((&s1.scale().scaled(cfg.k()) - s0.scale()).frobenius_norm() < 1e-14);
        assert!(out.u_star.iter().all(|&v| v == 0.0));
        assert_eq!(out.q, 0.0);
    }

    #[test]
    fn dimension_mismatch() {
        let cfg = ModelConfig::new(2, 0.9, eye(2)).unwrap();
        let s = FilterState::initial(&cfg).unwrap();
        assert_eq!(
            step(&cfg, &s, &[1.0]).unwrap_err(),
            Error::DimensionMismatch { expected: 2, found: 1 }
        );
        assert!(step(&cfg, &s, &[1.0, f64::NAN]).is_err());
    }

    #[test]
    fn standardization_matches_spectral_root() {
        let s0 = SymPosDef::new(Mat::from_rows(&[[2.0, 0.3], [0.3, 0.5]])).unwrap();
        let cfg = ModelConfig::new(2, 0.9, s0.clone()).unwrap();
        let state = FilterState::initial(&cfg).unwrap();
        let y = [0.4, -1.1];
        let direct = crate::matstat::sym_inv_sqrt(&s0).unwrap().matrix().mul_vec(&y);
        let via_factor = state.standardize(&y).unwrap();
        for (a, b) in direct.iter().zip(&via_factor) {
            assert_relative_eq!(a, b, epsilon = 1e-13);
        }
        let (_, out) = step(&cfg, &state, &y).unwrap();
        let f_inv_half = crate::matstat::sym_inv_sqrt(&out.forecast_scale).unwrap();
        let expected = f_inv_half.matrix().mul_vec(&y);
        for (a, b) in expected.iter().zip(&out.u_star) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
        assert_relative_eq!(dot(&out.u, &out.u), cfg.k() * out.q, epsilon = 1e-13);
    }

    #[test]
    fn means() {
        let cfg = ModelConfig::new(2, 0.95, eye(2)).unwrap();
        let s = FilterState::initial(&cfg).unwrap();
        let pm = posterior_mean(&cfg, &s);
        assert_relative_eq!(pm.matrix()[(0, 0)], 0.05 / 0.90, epsilon = 1e-15);

        let cfg = ModelConfig::new(2, 0.75, SymPosDef::from_diag(&[2.0, 4.0]).unwrap()).unwrap();
        let s = FilterState::initial(&cfg).unwrap();
        let pm = posterior_mean(&cfg, &s);
        assert_relative_eq!(pm.matrix()[(0, 0)], 1.0, epsilon = 1e-15);
        assert_relative_eq!(pm.matrix()[(1, 1)], 2.0, epsilon = 1e-15);

        let cfg = ModelConfig::new(1, 0.95, eye(1)).unwrap();
        let s = FilterState::initial(&cfg).unwrap();
        let expected = 0.05 / ((1.0 / 0.95) * 0.85);
        assert_relative_eq!(prior_mean_next(&cfg, &s).matrix()[(0, 0)], expected, epsilon = 1e-15);
        assert_relative_eq!(expected, 0.055_882_352_941_176_47, epsilon = 1e-15);

        let cfg = ModelConfig::new(4, 0.9, eye(4)).unwrap();
        let s = FilterState::initial(&cfg).unwrap();
        let k = compute_k(0.9, 4).unwrap();
        assert_relative_eq!(
            prior_mean_next(&cfg, &s).matrix()[(2, 2)],
            0.1 / (k * 0.7),
            epsilon = 1e-14
        );
    }

    #[test]
    fn prior_mean_equals_forecast_scale() {
        let cfg = ModelConfig::new(3, 0.85, eye(3)).unwrap();
        let mut s = FilterState::initial(&cfg).unwrap();
        s.advance(&cfg, &[0.1, 0.5, -0.3]).unwrap();
        let pm = prior_mean_next(&cfg, &s);
        let (_, out) = step(&cfg, &s, &[0.2, 0.2, 0.2]).unwrap();
        assert!((pm.matrix() - out.forecast_scale.matrix()).frobenius_norm() < 1e-15);
    }

    #[test]
    fn invariance_holds_with_decay_constant() {
        let cfg = ModelConfig::new(5, 0.9, SymPosDef::from_diag(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap())
            .unwrap();
        let s = FilterState::initial(&cfg).unwrap();
        let (a, b): (f64, f64) = expectation_invariance_check(&cfg, &s);
        assert!((a - b).abs() <= 1e-12 * a.abs());
    }

    #[test]
    fn conventional_k_drifts_for_multivariate() {
        let p = 8;
        let delta = 0.95;
        let cfg = ModelConfig::with_decay(p, delta, 1.0 / delta, eye(p)).unwrap();
        let s = FilterState::initial(&cfg).unwrap();
        let (a, b): (f64, f64) = expectation_invariance_check(&cfg, &s);
        let expected = (p as f64 - 1.0) * (1.0 / delta - 1.0) * p as f64;
        assert_relative_eq!(b - a, expected, epsilon = 1e-12 * a);

        let cfg = ModelConfig::with_decay(1, delta, 1.0 / delta, eye(1)).unwrap();
        let s = FilterState::initial(&cfg).unwrap();
        let (a, b): (f64, f64) = expectation_invariance_check(&cfg, &s);
        assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn approximate_scale_drops_prior() {
        let cfg = ModelConfig::new(2, 0.9, eye(2)).unwrap();
        let mut s = FilterState::initial(&cfg).unwrap();
        s.advance(&cfg, &[1.0, 2.0]).unwrap();
        s.advance(&cfg, &[-1.0, 0.5]).unwrap();
        let k = cfg.k();
        let mut expected = Mat::outer(&[1.0, 2.0]).scaled(1.0 / k);
        expected.add_outer_mut(1.0, &[-1.0, 0.5]);
        assert!((&s.approximate_scale(&cfg) - &expected).frobenius_norm() < 1e-14);
    }

    #[test]
    fn precision_law_next_prior_is_inflated() {
        let cfg = ModelConfig::new(3, 0.8, eye(3)).unwrap();
        let s = FilterState::initial(&cfg).unwrap();
        let (df0, v0) = precision_law(&cfg, &s, PrecisionLaw::Posterior);
        let (df1, v1) = precision_law(&cfg, &s, PrecisionLaw::NextPrior);
        assert!((df0 - df1 - 1.0).abs() < 1e-12);
        assert!((&v1 - &v0.scaled(cfg.k())).frobenius_norm() < 1e-15);
        // Same mean, larger spread.
        assert!((&v1.scaled(df1) - &v0.scaled(df0)).max_abs() < 1e-12);
        assert!(df1 * cfg.k() * cfg.k() > df0);
    }
}
