//! Monte Carlo prices under Heston dynamics with a full-truncation Euler
//! scheme for the variance and a log-Euler step for the spot.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::model::{HestonParams, OptionKind};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McConfig {
    pub paths: usize,
    pub steps_per_year: usize,
    pub seed: u64,
    /// Pairs each path with its mirror image; `paths` counts both.
    pub antithetic: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            paths: 1_000_000,
            steps_per_year: 250,
            seed: 42,
            antithetic: false,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.paths < 2 {
            return Err(invalid("paths", format!("need at least 2 paths, got {}", self.paths)));
        }
        if self.steps_per_year == 0 {
            return Err(invalid("steps_per_year", "must be at least 1"));
        }
        if self.antithetic && self.paths % 2 != 0 {
            return Err(invalid("paths", "antithetic sampling needs an even path count"));
        }
        Ok(())
    }

    /// Time steps for maturity `t`; at least one.
    pub fn steps(&self, t: f64) -> usize {
        ((self.steps_per_year as f64 * t).ceil() as usize).max(1)
    }
}

/// Discounted mean payoff and its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub price: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Running mean and sum of squared deviations.
#[derive(Clone, Copy, Debug, Default)]
struct Welford {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Self) -> Self {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        Self {
            n,
            mean: self.mean + delta * other.n as f64 / n as f64,
            m2: self.m2 + other.m2 + delta * delta * (self.n as f64 * other.n as f64 / n as f64),
        }
    }
}

/// Paths handled by one deterministic work unit.
const CHUNK: usize = 4096;

/// Price of `kind` struck at `p.strike`.
pub fn mc_price<T: Real>(kind: &OptionKind<T>, p: &HestonParams<T>, cfg: &McConfig) -> Result<McEstimate> {
    Ok(mc_prices(kind, p, &[p.strike.as_f64()], cfg)?[0])
}

/// Prices for several strikes from one set of paths. For butterflies the
/// strikes are ignored and the contract's own strikes are used.
pub fn mc_prices<T: Real>(kind: &OptionKind<T>, p: &HestonParams<T>, strikes: &[f64], cfg: &McConfig) -> Result<Vec<McEstimate>> {
    cfg.validate()?;
    let (kappa, theta, sigma, rho) = (p.kappa.as_f64(), p.theta.as_f64(), p.sigma.as_f64(), p.rho.as_f64());
    let (r_d, r_f, t) = (p.r_d.as_f64(), p.r_f.as_f64(), p.maturity.as_f64());
    if !(t > 0.0) || !(p.spot.as_f64() > 0.0) || p.v0.as_f64() < 0.0 || rho.abs() > 1.0 {
        return Err(invalid("params", "Monte Carlo needs T > 0, S0 > 0, v0 >= 0 and |rho| <= 1"));
    }
    let steps = cfg.steps(t);
    let dt = t / steps as f64;
    let sqrt_dt = dt.sqrt();
    let rho_bar = (1.0 - rho * rho).max(0.0).sqrt();
    let (ln_s0, v0) = (p.spot.as_f64().ln(), p.v0.as_f64());
    let discount = (-r_d * t).exp();
    let payoffs: Vec<Box<dyn Fn(f64) -> f64 + Send + Sync>> = strikes
        .iter()
        .map(|&k| -> Box<dyn Fn(f64) -> f64 + Send + Sync> {
            match *kind {
                OptionKind::EuropeanCall => Box::new(move |s: f64| (s - k).max(0.0)),
                OptionKind::EuropeanPut => Box::new(move |s: f64| (k - s).max(0.0)),
                OptionKind::DigitalCall => Box::new(move |s: f64| if s > k { 1.0 } else { 0.0 }),
                OptionKind::Butterfly { k1, k2, k3 } => {
                    let (k1, k2, k3) = (k1.as_f64(), k2.as_f64(), k3.as_f64());
                    Box::new(move |s: f64| (s - k1).max(0.0) - 2.0 * (s - k2).max(0.0) + (s - k3).max(0.0))
                }
            }
        })
        .collect();
    // One stream per sample: a path, or an antithetic pair.
    let samples = if cfg.antithetic { cfg.paths / 2 } else { cfg.paths };
    let terminal = |z: &[(f64, f64)], sign: f64| -> f64 {
        let (mut x, mut v) = (ln_s0, v0);
        for &(zv, zp) in z {
            let vp = v.max(0.0);
            let sv = vp.sqrt() * sqrt_dt;
            let zs = rho * zv + rho_bar * zp;
            x += (r_d - r_f - 0.5 * vp) * dt + sv * sign * zs;
            v += kappa * (theta - vp) * dt + sigma * sv * sign * zv;
        }
        x.exp()
    };
    let chunks = samples.div_ceil(CHUNK);
    let partial: Vec<Vec<Welford>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![Welford::default(); payoffs.len()];
            let mut z = vec![(0.0, 0.0); steps];
            for sample in c * CHUNK..((c + 1) * CHUNK).min(samples) {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(sample as u64);
                for zi in z.iter_mut() {
                    *zi = (rng.sample(StandardNormal), rng.sample(StandardNormal));
                }
                let s = terminal(&z, 1.0);
                let mirror = cfg.antithetic.then(|| terminal(&z, -1.0));
                for (a, f) in acc.iter_mut().zip(&payoffs) {
                    let value = match mirror {
                        Some(m) => 0.5 * (f(s) + f(m)),
                        None => f(s),
                    };
                    a.push(discount * value);
                }
            }
            acc
        })
        .collect();
    let mut total = vec![Welford::default(); payoffs.len()];
    for chunk in partial {
        for (t, c) in total.iter_mut().zip(chunk) {
            *t = t.merge(c);
        }
    }
    Ok(total
        .into_iter()
        .map(|w| McEstimate {
            price: w.mean,
            std_error: (w.m2 / (w.n as f64 - 1.0)).max(0.0).sqrt() / (w.n as f64).sqrt(),
            samples: w.n,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn welford_merge_matches_sequential() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut all = Welford::default();
        xs.iter().for_each(|&x| all.push(x));
        let (mut a, mut b) = (Welford::default(), Welford::default());
        xs[..37].iter().for_each(|&x| a.push(x));
        xs[37..].iter().for_each(|&x| b.push(x));
        let m = a.merge(b);
        assert!((m.mean - all.mean).abs() < 1e-14 && (m.m2 - all.m2).abs() < 1e-12);
    }

    #[test]
    fn certain_payoff_is_discounted_exactly() {
        let mut p = presets::table1_params::<f64>(100.0);
        p.strike = 0.0;
        let cfg = McConfig {
            paths: 10_000,
            ..Default::default()
        };
        let e = mc_price(&OptionKind::DigitalCall, &p, &cfg).unwrap();
        assert_eq!(e.price, (-0.05f64).exp());
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn reproducible_for_a_seed() {
        let p = presets::table1_params::<f64>(105.0);
        let cfg = McConfig {
            paths: 5000,
            ..Default::default()
        };
        let a = mc_price(&OptionKind::EuropeanCall, &p, &cfg).unwrap();
        let b = mc_price(&OptionKind::EuropeanCall, &p, &cfg).unwrap();
        assert_eq!(a, b);
        let c = mc_price(&OptionKind::EuropeanCall, &p, &McConfig { seed: 7, ..cfg }).unwrap();
        assert_ne!(a.price, c.price);
    }

    #[test]
    fn config_validation() {
        assert!(McConfig { paths: 1, ..Default::default() }.validate().is_err());
        assert!(McConfig { steps_per_year: 0, ..Default::default() }.validate().is_err());
        assert!(McConfig { paths: 3, antithetic: true, ..Default::default() }.validate().is_err());
        assert_eq!(McConfig::default().steps(1.0), 250);
        assert_eq!(McConfig::default().steps(0.25), 63);
    }
}
