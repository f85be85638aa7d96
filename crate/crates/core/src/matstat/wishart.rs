use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matstat::decomp::{chol_upper, SymPosDef};
use crate::matstat::matrix::Mat;
use crate::scalar::Real;

pub fn standard_normal_vec<T: Real, R: Rng + ?Sized>(p: usize, rng: &mut R) -> Vec<T> {
    (0..p)
        .map(|_| T::lit(StandardNormal.sample(rng)))
        .collect()
}

/// Lower-triangular Bartlett factor `T` with `T T' ~ W_p(df, I)`.
pub fn bartlett_factor<T: Real, R: Rng + ?Sized>(df: T, p: usize, rng: &mut R) -> Result<Mat<T>> {
    let dff = df.as_f64();
    if !(dff > p as f64 - 1.0) {
        return Err(Error::Domain(format!(
            "Wishart degrees of freedom {df} must exceed p - 1 = {}",
            p as f64 - 1.0
        )));
    }
    let mut t = Mat::zeros(p, p);
    for i in 0..p {
        let chi = ChiSquared::new(dff - i as f64)
            .map_err(|e| Error::Domain(e.to_string()))?
            .sample(rng);
        t[(i, i)] = T::lit(chi.sqrt());
        for j in 0..i {
            t[(i, j)] = T::lit(StandardNormal.sample(rng));
        }
    }
    Ok(t)
}

/// Draw from `W_p(df, scale)` by the Bartlett decomposition `L T T' L'`.
pub fn wishart_sample<T: Real, R: Rng + ?Sized>(
    df: T,
    scale: &SymPosDef<T>,
    rng: &mut R,
) -> Result<SymPosDef<T>> {
    let p = scale.dim();
    let t = bartlett_factor(df, p, rng)?;
    let lower = chol_upper(scale)?.factor().transpose();
    let g = &lower * &t;
    let a = &g * &g.transpose();
    // PD by construction; the check only guards against underflow.
    SymPosDef::new(a.symmetrized())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn rejects_low_df() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let s = SymPosDef::<f64>::identity(3);
        assert!(wishart_sample(2.0, &s, &mut rng).is_err());
        assert!(bartlett_factor(2.01, 3, &mut rng).is_ok());
        assert!(wishart_sample(2.5, &s, &mut rng).is_ok());
    }

    #[test]
    fn draws_are_positive_definite() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let s = SymPosDef::from_diag(&[1.0, 4.0, 0.25]).unwrap();
        for _ in 0..200 {
            let w = wishart_sample(2.5, &s, &mut rng).unwrap();
            assert!(chol_upper(&w).is_ok());
        }
    }

    #[test]
    fn sample_mean_matches_df_times_scale() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let s = SymPosDef::<f64>::identity(2);
        let draws = 200_000;
        let mut acc = Mat::zeros(2, 2);
        for _ in 0..draws {
            acc = &acc + wishart_sample(5.0, &s, &mut rng).unwrap().matrix();
        }
        let mean = acc.scaled(1.0 / draws as f64);
        for i in 0..2 {
            assert!((mean[(i, i)] - 5.0).abs() < 0.02 * 5.0, "{mean:?}");
        }
        // Off-diagonal mean is zero; its sd is sqrt(df)/sqrt(draws).
        assert!(mean[(0, 1)].abs() < 0.02 * 5.0);
    }

    #[test]
    fn diagonal_variance_identity() {
        // Var(w_11) = 2 df v_11^2 for W_p(df, V).
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let s = SymPosDef::from_diag(&[1.0, 4.0]).unwrap();
        let draws = 200_000;
        let (mut m1, mut m2) = (0.0, 0.0);
        for _ in 0..draws {
            let w = wishart_sample(3.0, &s, &mut rng).unwrap().matrix()[(0, 0)];
            m1 += w;
            m2 += w * w;
        }
        m1 /= draws as f64;
        let var = m2 / draws as f64 - m1 * m1;
        assert!((var - 6.0).abs() < 0.05 * 6.0, "var = {var}");
    }
}
