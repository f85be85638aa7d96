//! Symmetric positive-definite matrices and the factorizations built on them.
//!
//! Everything here is dense and `O(p^3)` at worst; the dimensions of interest
//! are a handful to a few dozen assets.

use crate::error::{check_dim, Error, Result};
use crate::matstat::matrix::{dot, Mat};
use crate::scalar::Real;

const MAX_JACOBI_SWEEPS: usize = 100;

/// A symmetric positive-definite matrix.
///
/// Construction symmetrizes the input and proves definiteness with a
/// Cholesky factorization.
#[derive(Clone, Debug, PartialEq)]
pub struct SymPosDef<T> {
    m: Mat<T>,
}

impl<T: Real> SymPosDef<T> {
    /// Relative symmetry tolerance: `1e-10 * max(1, max|a_ij|)`.
    pub fn symmetry_tolerance(m: &Mat<T>) -> T {
        T::lit(1e-10) * T::one().max(m.max_abs())
    }

    pub fn new(m: Mat<T>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::Domain("empty matrix".into()));
        }
        if !m.all_finite() {
            return Err(Error::Domain("matrix has non-finite entries".into()));
        }
        if !m.is_symmetric(Self::symmetry_tolerance(&m)) {
            return Err(Error::NotSymmetric);
        }
        let m = m.symmetrized();
        cholesky_upper(&m)?;
        Ok(Self { m })
    }

    /// Caller guarantees symmetry and definiteness (e.g. via a live factor).
    pub(crate) fn from_trusted(m: Mat<T>) -> Self {
        Self { m: m.symmetrized() }
    }

    pub fn identity(p: usize) -> Self {
        Self { m: Mat::identity(p) }
    }

    pub fn from_diag(d: &[T]) -> Result<Self> {
        if let Some(i) = d.iter().position(|&x| !(x > T::zero())) {
            return Err(Error::NotPositiveDefinite { pivot: i });
        }
        Ok(Self { m: Mat::from_diag(d) })
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &Mat<T> {
        &self.m
    }

    pub fn into_inner(self) -> Mat<T> {
        self.m
    }

    /// `c * A` for `c > 0`.
    pub fn scaled(&self, c: T) -> Result<Self> {
        if !(c > T::zero()) || !c.is_finite() {
            return Err(Error::Domain(format!("scale factor {c} must be positive")));
        }
        Ok(Self { m: self.m.scaled(c) })
    }

    pub fn inverse(&self) -> Result<Self> {
        Ok(Self::from_trusted(chol_upper(self)?.inverse()))
    }
}

/// Upper-triangular `U` with positive diagonal such that `A = U'U`.
#[derive(Clone, Debug, PartialEq)]
pub struct UpperCholesky<T> {
    u: Mat<T>,
}

/// Upper Cholesky factor of a symmetric positive-definite matrix.
pub fn chol_upper<T: Real>(a: &SymPosDef<T>) -> Result<UpperCholesky<T>> {
    cholesky_upper(a.matrix())
}

/// Factorizes a raw square matrix, reading only its upper triangle.
pub fn cholesky_upper<T: Real>(a: &Mat<T>) -> Result<UpperCholesky<T>> {
    check_dim(a.nrows(), a.ncols())?;
    let n = a.nrows();
    let mut u = Mat::zeros(n, n);
    for j in 0..n {
        let mut s = a[(j, j)];
        for k in 0..j {
            s -= u[(k, j)] * u[(k, j)];
        }
        if !(s > T::zero()) || !s.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j });
        }
        let d = s.sqrt();
        u[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = a[(j, i)];
            for k in 0..j {
                s -= u[(k, j)] * u[(k, i)];
            }
            u[(j, i)] = s / d;
        }
    }
    Ok(UpperCholesky { u })
}

impl<T: Real> UpperCholesky<T> {
    /// Wraps an existing factor; rejects non-upper or non-positive diagonals.
    pub fn from_factor(u: Mat<T>) -> Result<Self> {
        check_dim(u.nrows(), u.ncols())?;
        for i in 0..u.nrows() {
            if !(u[(i, i)] > T::zero()) {
                return Err(Error::NotPositiveDefinite { pivot: i });
            }
            for j in 0..i {
                if u[(i, j)] != T::zero() {
                    return Err(Error::Domain("factor is not upper triangular".into()));
                }
            }
        }
        Ok(Self { u })
    }

    pub fn dim(&self) -> usize {
        self.u.nrows()
    }

    pub fn factor(&self) -> &Mat<T> {
        &self.u
    }

    /// `U'U`
    pub fn reconstruct(&self) -> Mat<T> {
        let n = self.dim();
        Mat::from_fn(n, n, |i, j| {
            (0..=i.min(j)).map(|k| self.u[(k, i)] * self.u[(k, j)]).sum()
        })
    }

    pub fn log_det(&self) -> T {
        let two = T::lit(2.0);
        self.u.diagonal().into_iter().map(|d| two * d.ln()).sum()
    }

    /// Solves `U x = b`.
    pub fn solve_upper(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= self.u[(i, j)] * x[j];
            }
            x[i] = s / self.u[(i, i)];
        }
        x
    }

    /// Solves `U' x = b`.
    pub fn solve_upper_transpose(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.u[(j, i)] * x[j];
            }
            x[i] = s / self.u[(i, i)];
        }
        x
    }

    /// `y' (U'U)^{-1} y`, computed as `|U^{-T} y|^2`.
    pub fn inv_quad(&self, y: &[T]) -> T {
        let w = self.solve_upper_transpose(y);
        dot(&w, &w)
    }

    /// `(U'U)^{-1}`
    pub fn inverse(&self) -> Mat<T> {
        let n = self.dim();
        let mut inv = Mat::zeros(n, n);
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e.iter_mut().for_each(|x| *x = T::zero());
            e[j] = T::one();
            let col = self.solve_upper(&self.solve_upper_transpose(&e));
            for (i, v) in col.into_iter().enumerate() {
                inv[(i, j)] = v;
            }
        }
        inv.symmetrized()
    }

    /// Rescales the factored matrix by `c > 0`.
    pub fn scale_mut(&mut self, c: T) {
        self.u.scale_mut(c.sqrt());
    }

    /// Givens-based update to the factor of `U'U + x x'`.
    pub fn rank_one_update(&mut self, x: &[T]) {
        let n = self.dim();
        assert_eq!(x.len(), n);
        let mut x = x.to_vec();
        for i in 0..n {
            let rii = self.u[(i, i)];
            let r = rii.hypot(x[i]);
            let c = r / rii;
            let s = x[i] / rii;
            self.u[(i, i)] = r;
            for j in (i + 1)..n {
                let updated = (self.u[(i, j)] + s * x[j]) / c;
                x[j] = c * x[j] - s * updated;
                self.u[(i, j)] = updated;
            }
        }
    }

    /// `self * rhs`, again upper triangular: the factor of `rhs' (U'U) rhs`.
    pub fn then(&self, rhs: &UpperCholesky<T>) -> UpperCholesky<T> {
        assert_eq!(self.dim(), rhs.dim());
        let n = self.dim();
        let mut out = Mat::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                out[(i, j)] = (i..=j).map(|k| self.u[(i, k)] * rhs.u[(k, j)]).sum();
            }
        }
        UpperCholesky { u: out }
    }
}

/// Eigen-decomposition of a symmetric matrix; values sorted descending,
/// vectors stored as matching columns.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenSpectrum<T> {
    pub values: Vec<T>,
    pub vectors: Mat<T>,
}

impl<T: Real> EigenSpectrum<T> {
    /// `V diag(f(lambda)) V'`
    pub fn map_values(&self, f: impl Fn(T) -> T) -> Mat<T> {
        let n = self.values.len();
        let fl: Vec<T> = self.values.iter().map(|&l| f(l)).collect();
        let v = &self.vectors;
        Mat::from_fn(n, n, |i, j| (0..n).map(|k| v[(i, k)] * fl[k] * v[(j, k)]).sum())
            .symmetrized()
    }

    pub fn reconstruct(&self) -> Mat<T> {
        self.map_values(|l| l)
    }
}

/// Cyclic Jacobi eigen-solver. The input is symmetrized first.
pub fn sym_eigen<T: Real>(m: &Mat<T>) -> EigenSpectrum<T> {
    assert!(m.is_square(), "eigen-decomposition needs a square matrix");
    let n = m.nrows();
    let mut a = m.symmetrized();
    let mut v = Mat::identity(n);
    let scale = a.frobenius_norm();
    let eps = T::epsilon();

    for _ in 0..MAX_JACOBI_SWEEPS {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() <= eps * scale * T::lit(0.01) || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (T::lit(2.0) * apq);
                let t = if theta.abs() > T::lit(1e150) {
                    T::one() / (T::lit(2.0) * theta)
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt())
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                a[(p, p)] -= t * apq;
                a[(q, q)] += t * apq;
                a[(p, q)] = T::zero();
                a[(q, p)] = T::zero();
                for r in 0..n {
                    if r != p && r != q {
                        let arp = a[(r, p)];
                        let arq = a[(r, q)];
                        let np = c * arp - s * arq;
                        let nq = s * arp + c * arq;
                        a[(r, p)] = np;
                        a[(p, r)] = np;
                        a[(r, q)] = nq;
                        a[(q, r)] = nq;
                    }
                    let vrp = v[(r, p)];
                    let vrq = v[(r, q)];
                    v[(r, p)] = c * vrp - s * vrq;
                    v[(r, q)] = s * vrp + c * vrq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].partial_cmp(&a[(i, i)]).unwrap_or(core::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = Mat::from_fn(n, n, |r, c| v[(r, order[c])]);
    EigenSpectrum { values, vectors }
}

/// Symmetric (spectral) inverse square root `B` with `B A B = I`.
pub fn sym_inv_sqrt<T: Real>(a: &SymPosDef<T>) -> Result<SymPosDef<T>> {
    let spec = sym_eigen(a.matrix());
    if let Some(i) = spec.values.iter().position(|&l| !(l > T::zero())) {
        return Err(Error::NotPositiveDefinite { pivot: i });
    }
    Ok(SymPosDef::from_trusted(spec.map_values(|l| T::one() / l.sqrt())))
}

/// `log |A|` via the Cholesky diagonal.
pub fn log_det<T: Real>(a: &SymPosDef<T>) -> Result<T> {
    Ok(chol_upper(a)?.log_det())
}

/// Eigenvalues strictly above `tol`, descending. The default tolerance is
/// `1e-10 * max(1, spectral radius)`.
pub fn positive_eigenvalues<T: Real>(m: &Mat<T>, tol: Option<T>) -> Vec<T> {
    let spec = sym_eigen(m);
    let radius = spec.values.iter().fold(T::zero(), |r, &l| r.max(l.abs()));
    let tol = tol.unwrap_or_else(|| T::lit(1e-10) * T::one().max(radius));
    spec.values.into_iter().filter(|&l| l > tol).collect()
}

/// Orthogonal factor `P` of the polar decomposition `M = P H`.
///
/// One-sided Jacobi: columns of `M V` are rotated until mutually orthogonal,
/// giving `M = W diag(sigma) V'` and `P = W V'`. Orthogonality of `P` holds to
/// working precision even when `M` is badly conditioned.
pub fn polar_factor<T: Real>(m: &Mat<T>) -> Result<Mat<T>> {
    check_dim(m.nrows(), m.ncols())?;
    let n = m.nrows();
    let mut w = m.clone();
    let mut v = Mat::identity(n);
    let eps = T::epsilon();

    for _ in 0..MAX_JACOBI_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in (i + 1)..n {
                let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
                for k in 0..n {
                    let (wi, wj) = (w[(k, i)], w[(k, j)]);
                    alpha += wi * wi;
                    beta += wj * wj;
                    gamma += wi * wj;
                }
                if gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = if zeta.abs() > T::lit(1e150) {
                    T::one() / (T::lit(2.0) * zeta)
                } else {
                    zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for k in 0..n {
                    let (wi, wj) = (w[(k, i)], w[(k, j)]);
                    w[(k, i)] = c * wi - s * wj;
                    w[(k, j)] = s * wi + c * wj;
                    let (vi, vj) = (v[(k, i)], v[(k, j)]);
                    v[(k, i)] = c * vi - s * vj;
                    v[(k, j)] = s * vi + c * vj;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    for j in 0..n {
        let norm = (0..n).map(|k| w[(k, j)] * w[(k, j)]).sum::<T>().sqrt();
        if !(norm > T::zero()) {
            return Err(Error::Singularity("polar factor of a singular matrix".into()));
        }
        for k in 0..n {
            w[(k, j)] /= norm;
        }
    }
    Ok(&w * &v.transpose())
}
