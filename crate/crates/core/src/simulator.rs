//! Draws from the generative model: Wishart initial precision, singular
//! multivariate beta evolution, Gaussian returns.
//!
//! The precision matrices of a long path become extremely ill-conditioned
//! (condition numbers well beyond `1e16` for a few thousand steps), so the
//! path is propagated through upper Cholesky factors `Phi_t = U_t' U_t` and
//! never through dense inverses.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{check_dim, Error, Result};
use crate::filter::ModelConfig;
use crate::matstat::{
    bartlett_factor, cholesky_upper, polar_factor, standard_normal_vec, Mat, SymPosDef,
    UpperCholesky,
};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig<T> {
    pub p: usize,
    pub delta: T,
    pub n_steps: usize,
    /// `S_0`: the initial precision is drawn from `W_p(n+p-1, S_0^{-1})`.
    pub prior_scale: SymPosDef<T>,
    pub seed: u64,
}

impl<T: Real> SimConfig<T> {
    /// Prior scale chosen so that `E(Sigma_0) = I`.
    pub fn with_unit_prior(p: usize, delta: T, n_steps: usize, seed: u64) -> Result<Self> {
        let n_minus_2 = (T::lit(2.0) * delta - T::one()) / (T::one() - delta);
        Ok(Self {
            p,
            delta,
            n_steps,
            prior_scale: SymPosDef::identity(p).scaled(n_minus_2)?,
            seed,
        })
    }

    pub fn model(&self) -> Result<ModelConfig<T>> {
        ModelConfig::new(self.p, self.delta, self.prior_scale.clone())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimPath<T> {
    /// `Sigma_1 .. Sigma_N`
    pub sigmas: Vec<SymPosDef<T>>,
    /// `y_1 .. y_N`
    pub returns: Vec<Vec<T>>,
}

/// Draw from the singular beta `B_p(m/2, 1/2)`: `B = R'^{-1} A R^{-1}` with
/// `A ~ W_p(m, I)`, `z ~ N_p(0, I)` and `R'R = A + z z'`.
pub fn sample_singular_beta<T: Real, R: Rng + ?Sized>(
    m: T,
    p: usize,
    rng: &mut R,
) -> Result<SymPosDef<T>> {
    let t = bartlett_factor(m, p, rng)?;
    let a = &t * &t.transpose();
    let z: Vec<T> = standard_normal_vec(p, rng);
    let mut total = a.clone();
    total.add_outer_mut(T::one(), &z);
    let r = cholesky_upper(&total.symmetrized())?;
    // B = (R'^{-1} T)(R'^{-1} T)'
    let mut g = Mat::zeros(p, p);
    for j in 0..p {
        let col = r.solve_upper_transpose(&t.column(j));
        for i in 0..p {
            g[(i, j)] = col[i];
        }
    }
    let b = (&g * &g.transpose()).symmetrized();
    SymPosDef::new(b)
}

/// `Phi_{t+1} = k U' B U` with `U` the upper Cholesky factor of `Phi_t`.
pub fn evolve_precision<T: Real>(
    phi: &SymPosDef<T>,
    beta: &SymPosDef<T>,
    k: T,
) -> Result<SymPosDef<T>> {
    check_dim(phi.dim(), beta.dim())?;
    let u = crate::matstat::chol_upper(phi)?;
    let ut = u.factor().transpose();
    let out = &(&ut * beta.matrix()) * u.factor();
    SymPosDef::new(out.scaled(k).symmetrized())
}

/// Factor form of [`evolve_precision`]: if `B = V'V` then `sqrt(k) V U` is
/// the upper factor of `k U' B U`.
pub fn evolve_precision_factor<T: Real>(
    u: &UpperCholesky<T>,
    beta: &SymPosDef<T>,
    k: T,
) -> Result<UpperCholesky<T>> {
    check_dim(u.dim(), beta.dim())?;
    let mut v = crate::matstat::chol_upper(beta)?.then(u);
    v.scale_mut(k);
    Ok(v)
}

/// `y ~ N(0, Phi^{-1})` using the symmetric root `Phi^{-1/2} = U^{-1} P`,
/// where `P` is the polar factor of `U`.
pub fn draw_return<T: Real, R: Rng + ?Sized>(u: &UpperCholesky<T>, rng: &mut R) -> Result<Vec<T>> {
    let eps: Vec<T> = standard_normal_vec(u.dim(), rng);
    let polar = polar_factor(u.factor())?;
    Ok(u.solve_upper(&polar.mul_vec(&eps)))
}

/// Initial precision `Phi_0 ~ W_p(n+p-1, S_0^{-1})`, returned as its upper factor.
pub fn initial_precision_factor<T: Real, R: Rng + ?Sized>(
    model: &ModelConfig<T>,
    rng: &mut R,
) -> Result<UpperCholesky<T>> {
    let p = model.p();
    let df = model.n() + T::from_usize_lossy(p) - T::one();
    let inv = model.prior_scale().inverse()?;
    let lower = crate::matstat::chol_upper(&inv)?.factor().transpose();
    let t = bartlett_factor(df, p, rng)?;
    UpperCholesky::from_factor((&lower * &t).transpose())
}

/// Simulate `N` steps with an explicit random source.
pub fn simulate_with_rng<T: Real, R: Rng + ?Sized>(
    model: &ModelConfig<T>,
    n_steps: usize,
    rng: &mut R,
) -> Result<SimPath<T>> {
    let mut u = initial_precision_factor(model, rng)?;
    let mut sigmas = Vec::with_capacity(n_steps);
    let mut returns = Vec::with_capacity(n_steps);
    for t in 1..=n_steps {
        let beta = sample_singular_beta(model.m(), model.p(), rng)?;
        u = evolve_precision_factor(&u, &beta, model.k())?;
        let y = draw_return(&u, rng)?;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singularity(format!("non-finite return drawn at t = {t}")));
        }
        sigmas.push(SymPosDef::from_trusted(u.inverse()));
        returns.push(y);
    }
    Ok(SimPath { sigmas, returns })
}

/// Simulate a path from a ChaCha20 stream seeded by `cfg.seed`.
pub fn simulate_path<T: Real>(cfg: &SimConfig<T>) -> Result<SimPath<T>> {
    let model = cfg.model()?;
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    simulate_with_rng(&model, cfg.n_steps, &mut rng)
}

impl<T: Real> SimPath<T> {
    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }

    /// Header `y1,...,yp` followed by one row per step. Values use the
    /// shortest representation that parses back to the same number.
    pub fn to_csv_string(&self, p: usize) -> String {
        let mut s = (1..=p).map(|j| format!("y{j}")).collect::<Vec<_>>().join(",");
        s.push('\n');
        for y in &self.returns {
            let row: Vec<String> = y.iter().map(|v| format!("{v}")).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    pub fn write_csv(&self, p: usize, path: impl AsRef<Path>) -> std::io::Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_csv_string(p).as_bytes())
    }
}
