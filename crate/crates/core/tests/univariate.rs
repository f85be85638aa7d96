//! The full pipeline at p = 1 against a direct scalar implementation.

use libm::lgamma;
use msv_core::{
    bayes_factor, simulate_path, FilterState, FlatDayPolicy, LikelihoodAccumulator, ModelConfig,
    MsseAccumulator, SimConfig, SymPosDef,
};

struct Scalar {
    delta: f64,
    s: f64,
    loglik: f64,
    sq_err: f64,
    u_dens: Vec<f64>,
}

impl Scalar {
    fn new(delta: f64, s0: f64) -> Self {
        Self {
            delta,
            s: s0,
            loglik: 0.0,
            sq_err: 0.0,
            u_dens: Vec::new(),
        }
    }

    fn run(&mut self, ys: &[f64]) {
        let d = self.delta;
        let k = 1.0 / d;
        let nu = d / (1.0 - d);
        let nm2 = (2.0 * d - 1.0) / (1.0 - d);
        let a = (2.0 * d - 1.0) / (2.0 * (1.0 - d));
        let b = (3.0 * d - 2.0) / (2.0 * (1.0 - d));
        let pi = std::f64::consts::PI;
        let c = -0.5 * pi.ln() - 0.5 * (2.0 * pi).ln() - a * k.ln()
            + lgamma(1.0 / (2.0 * (1.0 - d)))
            - lgamma(d / (2.0 * (1.0 - d)));
        for &y in ys {
            let u = k.sqrt() * y / self.s.sqrt();
            self.u_dens.push(
                lgamma((nu + 1.0) / 2.0) - lgamma(nu / 2.0) - 0.5 * pi.ln()
                    - (nu + 1.0) / 2.0 * (1.0 + u * u).ln(),
            );
            let var = (1.0 - d) * self.s / ((3.0 * d - 2.0) * k);
            self.sq_err += y * y / var;

            let s_next = self.s / k + y * y;
            let (sig_prev, sig_curr) = (self.s / nm2, s_next / nm2);
            let lt = 1.0 - sig_prev / (k * sig_curr);
            self.loglik += c - 0.5 * y * y / sig_curr + a * sig_prev.ln() - 0.5 * lt.ln()
                - b * sig_curr.ln();
            self.s = s_next;
        }
    }
}

#[test]
fn pipeline_matches_scalar_reimplementation() {
    let path = simulate_path(&SimConfig::<f64>::with_unit_prior(1, 0.95, 1000, 42).unwrap()).unwrap();
    let ys: Vec<f64> = path.returns.iter().map(|r| r[0]).collect();

    let mut runs = Vec::new();
    for delta in [0.95, 0.8] {
        let s0 = 2.5;
        let cfg = ModelConfig::new(1, delta, SymPosDef::from_diag(&[s0]).unwrap()).unwrap();
        let mut state = FilterState::initial(&cfg).unwrap();
        let mut msse = MsseAccumulator::new(1);
        let mut lik = LikelihoodAccumulator::new(&cfg, FlatDayPolicy::Floor);
        let mut us = Vec::new();
        for &y in &ys {
            let out = state.advance(&cfg, &[y]).unwrap();
            msse.update(&out.u_star).unwrap();
            lik.push_step(&out);
            us.push(out.u);
        }
        let mut oracle = Scalar::new(delta, s0);
        oracle.run(&ys);

        assert!((state.scale()[(0, 0)] - oracle.s).abs() <= 1e-10 * oracle.s);
        let ll = lik.total().unwrap();
        assert!((ll - oracle.loglik).abs() <= 1e-10 * oracle.loglik.abs(), "{ll} vs {}", oracle.loglik);
        let m = msse.msse()[0];
        let om = oracle.sq_err / ys.len() as f64;
        assert!((m - om).abs() <= 1e-10 * om);
        runs.push((cfg, us, oracle));
    }

    let (c1, u1, o1) = &runs[0];
    let (c2, u2, o2) = &runs[1];
    for t in 0..ys.len() {
        let h = bayes_factor(&u1[t], c1.forecast_dof(), &u2[t], c2.forecast_dof()).unwrap();
        let oh = o1.u_dens[t] - o2.u_dens[t];
        assert!((h - oh).abs() <= 1e-10 * oh.abs().max(1.0), "t={t}: {h} vs {oh}");
    }
}
