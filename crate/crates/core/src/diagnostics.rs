//! Performance measures for choosing the discount factor: plug-in
//! log-likelihood, mean squared standardized forecast errors (MSSE) and
//! sequential log Bayes factors, plus the grid search that combines them.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::filter::{posterior_mean, FilterState, ModelConfig, StepOutput};
use crate::matstat::{
    chol_upper, log_det, log_multigamma, positive_eigenvalues, student_t_logpdf, Mat, SymPosDef,
};
use crate::scalar::Real;

/// Eigenvalues of the `L_t` matrix at or below this are treated as zero.
pub const LT_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct MsseAccumulator<T> {
    count: usize,
    sums: Vec<T>,
}

impl<T: Real> MsseAccumulator<T> {
    pub fn new(p: usize) -> Self {
        Self {
            count: 0,
            sums: vec![T::zero(); p],
        }
    }

    pub fn update(&mut self, u_star: &[T]) -> Result<()> {
        check_dim(self.sums.len(), u_star.len())?;
        for (s, &u) in self.sums.iter_mut().zip(u_star) {
            *s += u * u;
        }
        self.count += 1;
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn sums(&self) -> &[T] {
        &self.sums
    }

    /// Per-component mean of squared standardized errors; zeros before any update.
    pub fn msse(&self) -> Vec<T> {
        if self.count == 0 {
            return vec![T::zero(); self.sums.len()];
        }
        let c = T::from_usize_lossy(self.count);
        self.sums.iter().map(|&s| s / c).collect()
    }

    /// Mean over components of the MSSE vector.
    pub fn mmsse(&self) -> T {
        let v = self.msse();
        v.iter().copied().sum::<T>() / T::from_usize_lossy(v.len().max(1))
    }
}

/// What to do with `log|L_t|` when the return vector is (numerically) zero
/// and `L_t` has no positive eigenvalue.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlatDayPolicy {
    /// Drop the `L_t` term for that step.
    Skip,
    /// Use the tolerance as the eigenvalue.
    #[default]
    Floor,
}

impl core::str::FromStr for FlatDayPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "skip" => Ok(Self::Skip),
            "floor" => Ok(Self::Floor),
            other => Err(Error::Domain(format!("unknown flat-day policy `{other}`"))),
        }
    }
}

/// The four data-dependent pieces of one likelihood summand.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoglikParts<T> {
    /// `y_t' Sigma_t^{-1} y_t`
    pub quad: T,
    /// `log|Sigma_{t-1}|`
    pub log_det_prev: T,
    /// `log|L_t|`; `None` when a flat day was skipped.
    pub log_lt: Option<T>,
    /// `log|Sigma_t|`
    pub log_det_curr: T,
}

fn coef_prev<T: Real>(delta: T) -> T {
    (T::lit(2.0) * delta - T::one()) / (T::lit(2.0) * (T::one() - delta))
}

fn coef_curr<T: Real>(delta: T) -> T {
    (T::lit(3.0) * delta - T::lit(2.0)) / (T::lit(2.0) * (T::one() - delta))
}

impl<T: Real> LoglikParts<T> {
    pub fn value(&self, cfg: &ModelConfig<T>) -> T {
        let half = T::lit(0.5);
        let pf = T::from_usize_lossy(cfg.p());
        -half * self.quad + coef_prev(cfg.delta()) * self.log_det_prev
            - pf * half * self.log_lt.unwrap_or_else(T::zero)
            - coef_curr(cfg.delta()) * self.log_det_curr
    }
}

/// One summand of the log-likelihood evaluated at the given volatility
/// matrices, with `|L_t|` taken from a full eigen-decomposition of
/// `I - k^{-1} U'^{-1} Sigma_t^{-1} U^{-1}`, `U = chol_upper(Sigma_{t-1}^{-1})`.
pub fn loglik_term_parts<T: Real>(
    cfg: &ModelConfig<T>,
    sigma_prev: &SymPosDef<T>,
    sigma_curr: &SymPosDef<T>,
    y: &[T],
) -> Result<LoglikParts<T>> {
    let p = cfg.p();
    check_dim(p, sigma_prev.dim())?;
    check_dim(p, sigma_curr.dim())?;
    check_dim(p, y.len())?;

    let curr_factor = chol_upper(sigma_curr)?;
    let quad = curr_factor.inv_quad(y);
    let prec_prev = sigma_prev.inverse()?;
    let prec_curr = sigma_curr.inverse()?;
    let u = chol_upper(&prec_prev)?;

    // G = U'^{-1} Sigma_t^{-1} U^{-1}, built column by column.
    let mut right = Mat::zeros(p, p);
    for j in 0..p {
        let mut e = vec![T::zero(); p];
        e[j] = T::one();
        let col = u.solve_upper(&e);
        for i in 0..p {
            right[(i, j)] = col[i];
        }
    }
    let inner = prec_curr.matrix() * &right;
    let mut g = Mat::zeros(p, p);
    for j in 0..p {
        let col = u.solve_upper_transpose(&inner.column(j));
        for i in 0..p {
            g[(i, j)] = col[i];
        }
    }
    let m = &Mat::identity(p) - &g.scaled(T::one() / cfg.k());
    let eig = positive_eigenvalues(&m, None);
    if eig.is_empty() {
        return Err(Error::Singularity(
            "L_t has no positive eigenvalue (zero return vector)".into(),
        ));
    }
    let log_lt = eig.iter().map(|l| l.ln()).sum();
    Ok(LoglikParts {
        quad,
        log_det_prev: log_det(sigma_prev)?,
        log_lt: Some(log_lt),
        log_det_curr: curr_factor.log_det(),
    })
}

/// Time-`t` summand `-1/2 y'Sigma_t^{-1}y + a log|Sigma_{t-1}| - (p/2) log|L_t| - b log|Sigma_t|`
/// with `a = (2 delta - 1)/(2(1-delta))`, `b = (3 delta - 2)/(2(1-delta))`.
pub fn loglik_term<T: Real>(
    cfg: &ModelConfig<T>,
    sigma_prev: &SymPosDef<T>,
    sigma_curr: &SymPosDef<T>,
    y: &[T],
) -> Result<T> {
    Ok(loglik_term_parts(cfg, sigma_prev, sigma_curr, y)?.value(cfg))
}

/// `|L_t|` when both volatility matrices are the posterior means produced by
/// the filter recursion. The matrix is then rank one with eigenvalue
/// `q / (k^{-1} + q)`, `q = y' S_{t-1}^{-1} y`.
pub fn lt_closed_form<T: Real>(q: T, k: T) -> T {
    q / (T::one() / k + q)
}

/// Likelihood parts from a filter step, with the posterior means of
/// `Sigma_{t-1}` and `Sigma_t` plugged in. Returns whether the step was flat.
pub fn plug_in_parts<T: Real>(
    cfg: &ModelConfig<T>,
    out: &StepOutput<T>,
    policy: FlatDayPolicy,
) -> (LoglikParts<T>, bool) {
    let k = cfg.k();
    let shift = T::from_usize_lossy(cfg.p()) * (cfg.n() - T::lit(2.0)).ln();
    let kq = k * out.q;
    let lt = lt_closed_form(out.q, k);
    let tol = T::lit(LT_TOLERANCE);
    let flat = !(lt > tol);
    let log_lt = match (flat, policy) {
        (false, _) => Some(lt.ln()),
        (true, FlatDayPolicy::Floor) => Some(tol.ln()),
        (true, FlatDayPolicy::Skip) => None,
    };
    let parts = LoglikParts {
        quad: (cfg.n() - T::lit(2.0)) * kq / (T::one() + kq),
        log_det_prev: out.log_det_prior - shift,
        log_lt,
        log_det_curr: out.log_det_posterior - shift,
    };
    (parts, flat)
}

/// Plug-in value for `Sigma_0`: its prior mean `S_0 / (n - 2)`.
pub fn initial_plug_in<T: Real>(cfg: &ModelConfig<T>) -> SymPosDef<T> {
    let state = FilterState::initial(cfg).expect("prior scale is positive definite");
    posterior_mean(cfg, &state)
}

/// The additive constant of the `N`-step log-likelihood:
///
/// `-(Np/2) log pi - (N/2) log 2pi - (Np(2delta-1)/(2(1-delta))) log k
///  + N log[Gamma_p(a1) / Gamma_p(a2)]`
///
/// with `a1 = (delta(1-p)+p)/(2(1-delta))` and `a2 = (delta(2-p)+p-1)/(2(1-delta))`.
pub fn loglik_constant<T: Real>(cfg: &ModelConfig<T>, n_obs: usize) -> Result<T> {
    if n_obs == 0 {
        return Ok(T::zero());
    }
    let p = cfg.p();
    let pf = T::from_usize_lossy(p);
    let d = cfg.delta();
    let one = T::one();
    let two = T::lit(2.0);
    let half = T::lit(0.5);
    let a1 = (d * (one - pf) + pf) / (two * (one - d));
    let a2 = (d * (two - pf) + pf - one) / (two * (one - d));
    let per_step = -pf * half * T::PI().ln() - half * (two * T::PI()).ln()
        - pf * (two * d - one) / (two * (one - d)) * cfg.k().ln()
        + log_multigamma(p, a1)?
        - log_multigamma(p, a2)?;
    Ok(T::from_usize_lossy(n_obs) * per_step)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LikelihoodAccumulator<T> {
    cfg: ModelConfig<T>,
    policy: FlatDayPolicy,
    count: usize,
    sum_quad: T,
    sum_log_det_prev: T,
    sum_log_lt: T,
    sum_log_det_curr: T,
    flat_days: usize,
}

impl<T: Real> LikelihoodAccumulator<T> {
    pub fn new(cfg: &ModelConfig<T>, policy: FlatDayPolicy) -> Self {
        Self {
            cfg: cfg.clone(),
            policy,
            count: 0,
            sum_quad: T::zero(),
            sum_log_det_prev: T::zero(),
            sum_log_lt: T::zero(),
            sum_log_det_curr: T::zero(),
            flat_days: 0,
        }
    }

    pub fn push_parts(&mut self, parts: &LoglikParts<T>) {
        self.count += 1;
        self.sum_quad += parts.quad;
        self.sum_log_det_prev += parts.log_det_prev;
        if let Some(l) = parts.log_lt {
            self.sum_log_lt += l;
        }
        self.sum_log_det_curr += parts.log_det_curr;
    }

    /// Adds the plug-in summand for one filter step.
    pub fn push_step(&mut self, out: &StepOutput<T>) -> LoglikParts<T> {
        let (parts, flat) = plug_in_parts(&self.cfg, out, self.policy);
        if flat {
            self.flat_days += 1;
        }
        self.push_parts(&parts);
        parts
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn flat_days(&self) -> usize {
        self.flat_days
    }

    /// Sum of the data-dependent terms (no constant).
    pub fn term_sum(&self) -> T {
        let half = T::lit(0.5);
        let pf = T::from_usize_lossy(self.cfg.p());
        -half * self.sum_quad + coef_prev(self.cfg.delta()) * self.sum_log_det_prev
            - pf * half * self.sum_log_lt
            - coef_curr(self.cfg.delta()) * self.sum_log_det_curr
    }

    pub fn constant(&self) -> Result<T> {
        loglik_constant(&self.cfg, self.count)
    }

    pub fn total(&self) -> Result<T> {
        Ok(self.constant()? + self.term_sum())
    }
}

/// Log Bayes factor `log p(u1 | M1) - log p(u2 | M2)` between two standardized
/// Student t forecasts. Positive favours the first model.
pub fn bayes_factor<T: Real>(u1: &[T], n1: T, u2: &[T], n2: T) -> Result<T> {
    check_dim(u1.len(), u2.len())?;
    Ok(student_t_logpdf(u1, n1)? - student_t_logpdf(u2, n2)?)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BayesFactorSeries<T> {
    values: Vec<T>,
}

impl<T: Real> BayesFactorSeries<T> {
    pub fn new() -> Self {
        Self { values: Vec::new() }
    }

    pub fn from_values(values: Vec<T>) -> Self {
        Self { values }
    }

    pub fn push(&mut self, h: T) {
        self.values.push(h);
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Arithmetic mean; zero for an empty series.
    pub fn mean(&self) -> T {
        if self.values.is_empty() {
            return T::zero();
        }
        self.values.iter().copied().sum::<T>() / T::from_usize_lossy(self.values.len())
    }

    pub fn positive_count(&self) -> usize {
        self.values.iter().filter(|&&h| h > T::zero()).count()
    }

    pub fn positive_fraction(&self) -> T {
        T::from_usize_lossy(self.positive_count()) / T::from_usize_lossy(self.values.len().max(1))
    }
}

/// How each grid row chooses its prior scale `S_0`.
#[derive(Clone, Debug, PartialEq)]
pub enum PriorChoice<T> {
    Fixed(SymPosDef<T>),
    /// `S_0 = (n - 2) v I`, with `v` the pooled sample variance of the first
    /// `window` observations, so that `E(Sigma_0) = v I` for every discount.
    BurnIn { window: usize },
}

impl<T> Default for PriorChoice<T> {
    fn default() -> Self {
        Self::BurnIn { window: 30 }
    }
}

pub fn burn_in_prior<T: Real>(data: &[Vec<T>], window: usize, delta: T) -> Result<SymPosDef<T>> {
    let p = data.first().map(Vec::len).ok_or_else(|| Error::Domain("no observations".into()))?;
    let rows = &data[..window.min(data.len())];
    if rows.len() < 2 {
        return Err(Error::Domain("burn-in window needs at least two observations".into()));
    }
    let nr = T::from_usize_lossy(rows.len());
    let mut pooled = T::zero();
    for j in 0..p {
        let mean = rows.iter().map(|r| r[j]).sum::<T>() / nr;
        let ss = rows.iter().map(|r| (r[j] - mean) * (r[j] - mean)).sum::<T>();
        pooled += ss / (nr - T::one());
    }
    let v = pooled / T::from_usize_lossy(p);
    if !(v > T::zero()) {
        return Err(Error::Domain("burn-in window has zero variance".into()));
    }
    let n_minus_2 = (T::lit(2.0) * delta - T::one()) / (T::one() - delta);
    SymPosDef::identity(p).scaled(n_minus_2 * v)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridOptions<T> {
    pub prior: PriorChoice<T>,
    pub flat_day: FlatDayPolicy,
    /// Keep the posterior mean of every step (needed for series output).
    pub record_posterior: bool,
    /// Worker threads for grid rows; `1` runs inline.
    pub threads: usize,
}

impl<T> Default for GridOptions<T> {
    fn default() -> Self {
        Self {
            prior: PriorChoice::default(),
            flat_day: FlatDayPolicy::default(),
            record_posterior: false,
            threads: 1,
        }
    }
}

/// One full filter pass at a single discount factor.
#[derive(Clone, Debug, PartialEq)]
pub struct DeltaRun<T> {
    pub delta: T,
    pub msse: MsseAccumulator<T>,
    pub loglik: T,
    pub flat_days: usize,
    /// Per-step forecast log-density of `u_t`.
    pub u_logdensity: Vec<T>,
    /// Per-step forecast log-density of `y_t`.
    pub y_logdensity: Vec<T>,
    /// `E(Sigma_t | y^t)` for `t = 1..N`, when requested.
    pub posterior_means: Vec<SymPosDef<T>>,
}

pub fn run_delta<T: Real>(
    data: &[Vec<T>],
    delta: T,
    opts: &GridOptions<T>,
) -> Result<DeltaRun<T>> {
    let p = data.first().map(Vec::len).ok_or_else(|| Error::Domain("no observations".into()))?;
    let prior = match &opts.prior {
        PriorChoice::Fixed(s) => s.clone(),
        PriorChoice::BurnIn { window } => burn_in_prior(data, *window, delta)?,
    };
    let cfg = ModelConfig::new(p, delta, prior)?;
    let mut state = FilterState::initial(&cfg)?;
    let mut msse = MsseAccumulator::new(p);
    let mut lik = LikelihoodAccumulator::new(&cfg, opts.flat_day);
    let mut u_logdensity = Vec::with_capacity(data.len());
    let mut y_logdensity = Vec::with_capacity(data.len());
    let mut posterior_means = Vec::new();
    for y in data {
        let out = state.advance(&cfg, y)?;
        msse.update(&out.u_star)?;
        lik.push_step(&out);
        u_logdensity.push(out.u_logdensity);
        y_logdensity.push(out.predictive_logdensity);
        if opts.record_posterior {
            posterior_means.push(posterior_mean(&cfg, &state));
        }
    }
    let loglik = lik.total()?;
    if !loglik.is_finite() {
        return Err(Error::Singularity(format!("log-likelihood is not finite at delta = {delta}")));
    }
    Ok(DeltaRun {
        delta,
        msse,
        loglik,
        flat_days: lik.flat_days(),
        u_logdensity,
        y_logdensity,
        posterior_means,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub delta: f64,
    pub mmsse: Option<f64>,
    pub msse: Vec<f64>,
    pub loglik: Option<f64>,
    /// Mean log Bayes factor of this row against the baseline (u scale).
    pub h_mean: Option<f64>,
    pub h_positive_count: Option<usize>,
    /// Same comparison on the scale of `y`.
    pub h_y_mean: Option<f64>,
    pub flat_days: usize,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub baseline: f64,
    pub n_obs: usize,
    pub p: usize,
    pub rows: Vec<GridRow>,
}

/// Ten significant digits, no trailing zeros.
pub fn format_sig(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    let s = if (-5..10).contains(&exp) {
        let decimals = (9 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.9e}")
    };
    trim_zeros(&s)
}

fn trim_zeros(s: &str) -> String {
    let (mantissa, exp) = match s.find('e') {
        Some(i) => (&s[..i], &s[i..]),
        None => (s, ""),
    };
    let mantissa = if mantissa.contains('.') {
        mantissa.trim_end_matches('0').trim_end_matches('.')
    } else {
        mantissa
    };
    format!("{mantissa}{exp}")
}

impl GridReport {
    pub fn row(&self, delta: f64) -> Option<&GridRow> {
        self.rows.iter().find(|r| r.delta == delta)
    }

    /// Row with the largest log-likelihood among rows that completed.
    pub fn best_loglik(&self) -> Option<&GridRow> {
        self.rows
            .iter()
            .filter(|r| r.loglik.is_some())
            .max_by(|a, b| a.loglik.partial_cmp(&b.loglik).unwrap_or(core::cmp::Ordering::Equal))
    }

    /// Tab-separated `delta, MMSSE, LogL, H, status`.
    pub fn to_tsv(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), format_sig);
        let mut s = String::from("delta\tMMSSE\tLogL\tH\tstatus\n");
        for r in &self.rows {
            let status = match &r.error {
                None => "ok".to_string(),
                Some(e) => format!("failed: {}", e.replace(['\t', '\n'], " ")),
            };
            s.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                format_sig(r.delta),
                opt(r.mmsse),
                opt(r.loglik),
                opt(r.h_mean),
                status
            ));
        }
        s
    }
}

/// Full grid results: the report plus each row's run and Bayes factors.
#[derive(Clone, Debug)]
pub struct GridOutcome<T> {
    pub report: GridReport,
    pub runs: Vec<Result<DeltaRun<T>>>,
    /// Per-row `H_t` against the baseline on the `u` scale.
    pub bayes_factors: Vec<Option<BayesFactorSeries<T>>>,
    /// Per-row `H_t` against the baseline on the `y` scale.
    pub bayes_factors_y: Vec<Option<BayesFactorSeries<T>>>,
}

fn validate_grid<T: Real>(data: &[Vec<T>], deltas: &[T], baseline: T) -> Result<Vec<T>> {
    if data.is_empty() {
        return Err(Error::Domain("no observations".into()));
    }
    let p = data[0].len();
    if p == 0 {
        return Err(Error::Domain("observations have no components".into()));
    }
    for row in data {
        check_dim(p, row.len())?;
    }
    if deltas.is_empty() {
        return Err(Error::Domain("empty discount grid".into()));
    }
    let mut grid: Vec<T> = deltas.to_vec();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    grid.dedup();
    if !grid.contains(&baseline) {
        return Err(Error::Domain(format!("baseline {baseline} is not in the grid")));
    }
    Ok(grid)
}

/// Runs one filter per discount factor and compares each against the baseline.
pub fn grid_search_detailed<T: Real>(
    data: &[Vec<T>],
    deltas: &[T],
    baseline: T,
    opts: &GridOptions<T>,
) -> Result<GridOutcome<T>> {
    let grid = validate_grid(data, deltas, baseline)?;
    let threads = opts.threads.max(1).min(grid.len());
    let runs: Vec<Result<DeltaRun<T>>> = if threads == 1 {
        grid.iter().map(|&d| run_delta(data, d, opts)).collect()
    } else {
        let mut slots: Vec<Option<Result<DeltaRun<T>>>> = vec![None; grid.len()];
        std::thread::scope(|scope| {
            let chunk = grid.len().div_ceil(threads);
            for (deltas, out) in grid.chunks(chunk).zip(slots.chunks_mut(chunk)) {
                scope.spawn(move || {
                    for (&d, slot) in deltas.iter().zip(out.iter_mut()) {
                        *slot = Some(run_delta(data, d, opts));
                    }
                });
            }
        });
        slots.into_iter().map(|s| s.expect("every grid row ran")).collect()
    };

    let base_idx = grid.iter().position(|&d| d == baseline).expect("validated");
    let base = runs[base_idx].as_ref().ok();
    let mut rows = Vec::with_capacity(grid.len());
    let mut bayes_factors = Vec::with_capacity(grid.len());
    let mut bayes_factors_y = Vec::with_capacity(grid.len());
    for (i, (&d, run)) in grid.iter().zip(&runs).enumerate() {
        match run {
            Ok(r) => {
                let (h, hy) = match base {
                    Some(b) => {
                        let h = if i == base_idx {
                            BayesFactorSeries::from_values(vec![T::zero(); r.u_logdensity.len()])
                        } else {
                            diff_series(&r.u_logdensity, &b.u_logdensity)
                        };
                        let hy = if i == base_idx {
                            BayesFactorSeries::from_values(vec![T::zero(); r.y_logdensity.len()])
                        } else {
                            diff_series(&r.y_logdensity, &b.y_logdensity)
                        };
                        (Some(h), Some(hy))
                    }
                    None => (None, None),
                };
                rows.push(GridRow {
                    delta: d.as_f64(),
                    mmsse: Some(r.msse.mmsse().as_f64()),
                    msse: r.msse.msse().iter().map(|v| v.as_f64()).collect(),
                    loglik: Some(r.loglik.as_f64()),
                    h_mean: h.as_ref().map(|s| s.mean().as_f64()),
                    h_positive_count: h.as_ref().map(BayesFactorSeries::positive_count),
                    h_y_mean: hy.as_ref().map(|s| s.mean().as_f64()),
                    flat_days: r.flat_days,
                    error: None,
                });
                bayes_factors.push(h);
                bayes_factors_y.push(hy);
            }
            Err(e) => {
                rows.push(GridRow {
                    delta: d.as_f64(),
                    mmsse: None,
                    msse: Vec::new(),
                    loglik: None,
                    h_mean: None,
                    h_positive_count: None,
                    h_y_mean: None,
                    flat_days: 0,
                    error: Some(e.to_string()),
                });
                bayes_factors.push(None);
                bayes_factors_y.push(None);
            }
        }
    }
    Ok(GridOutcome {
        report: GridReport {
            baseline: baseline.as_f64(),
            n_obs: data.len(),
            p: data[0].len(),
            rows,
        },
        runs,
        bayes_factors,
        bayes_factors_y,
    })
}

fn diff_series<T: Real>(a: &[T], b: &[T]) -> BayesFactorSeries<T> {
    BayesFactorSeries::from_values(a.iter().zip(b).map(|(&x, &y)| x - y).collect())
}

pub fn grid_search<T: Real>(
    data: &[Vec<T>],
    deltas: &[T],
    baseline: T,
    opts: &GridOptions<T>,
) -> Result<GridReport> {
    Ok(grid_search_detailed(data, deltas, baseline, opts)?.report)
}

/// The grid explored by default: 0.70, 0.75, ..., 0.95.
pub fn default_grid<T: Real>() -> Vec<T> {
    [0.7, 0.75, 0.8, 0.85, 0.9, 0.95].iter().map(|&d| T::lit(d)).collect()
}
