//! After-cost performance metrics: HAC Sharpe, Sortino, maximum drawdown,
//! CVaR, all as pure functions of a return series.
//!
//! Variance convention is population (1/T) throughout so the Bartlett HAC
//! estimator at bandwidth 0 degenerates to mean over sample standard
//! deviation exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;

/// After-cost per-period portfolio returns plus annualization basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries<S = f64> {
    pub r: Vec<S>,
    pub periods_per_year: usize,
}

impl<S: Real> ReturnSeries<S> {
    pub fn new(r: Vec<S>) -> Self {
        Self { r, periods_per_year: 252 }
    }

    fn check_len(&self, min: usize, what: &str) -> Result<()> {
        if self.r.len() < min {
            return Err(Error::InvalidInput(format!(
                "{what}: need at least {min} returns, got {}",
                self.r.len()
            )));
        }
        if self.r.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite(what.into()));
        }
        Ok(())
    }
}

/// A ratio metric in per-period units plus its annualized version.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioMetric<S = f64> {
    pub raw: S,
    pub annualized: S,
}

/// Bartlett bandwidth selection rule `floor(4 (T/100)^{2/9})`.
pub fn auto_bandwidth(t: usize) -> usize {
    (4.0 * (t as f64 / 100.0).powf(2.0 / 9.0)).floor().max(0.0) as usize
}

pub fn mean<S: Real>(xs: &[S]) -> S {
    xs.iter().copied().sum::<S>() / S::from_usize(xs.len()).unwrap()
}

/// Newey-West long-run variance with Bartlett weights `1 - k/(b+1)` over lags
/// `1..=b`, population autocovariances.
pub fn hac_long_run_variance<S: Real>(xs: &[S], bandwidth: usize) -> Result<S> {
    if xs.len() < 2 {
        return Err(Error::InvalidInput("hac: need at least 2 observations".into()));
    }
    let t = xs.len();
    let m = mean(xs);
    let tf = S::from_usize(t).unwrap();
    let gamma = |k: usize| -> S {
        let mut acc = S::zero();
        for i in k..t {
            acc += (xs[i] - m) * (xs[i - k] - m);
        }
        acc / tf
    };
    let mut lrv = gamma(0);
    let b = bandwidth.min(t - 1);
    for k in 1..=b {
        let w = S::one() - S::from_usize(k).unwrap() / S::from_usize(b + 1).unwrap();
        lrv += S::c(2.0) * w * gamma(k);
    }
    Ok(lrv)
}

/// HAC Sharpe ratio: mean over the Bartlett long-run standard deviation.
/// `bandwidth = None` selects the data-driven rule in [`auto_bandwidth`].
pub fn sharpe_hac<S: Real>(s: &ReturnSeries<S>, bandwidth: Option<usize>) -> Result<RatioMetric<S>> {
    s.check_len(2, "sharpe_hac")?;
    let b = bandwidth.unwrap_or_else(|| auto_bandwidth(s.r.len()));
    let lrv = hac_long_run_variance(&s.r, b)?;
    let m = mean(&s.r);
    // guard against numerically-zero variance from constant series
    let floor = S::c(100.0) * S::epsilon() * S::epsilon() * (m * m + S::one());
    if lrv <= floor {
        return Err(Error::UndefinedMetric(
            "sharpe_hac: zero or negative long-run variance".into(),
        ));
    }
    let raw = m / lrv.sqrt();
    let ann = raw * S::from_usize(s.periods_per_year).unwrap().sqrt();
    Ok(RatioMetric { raw, annualized: ann })
}

/// Sortino ratio with target return 0: mean over downside deviation
/// `sqrt(mean(min(r, 0)^2))`.
pub fn sortino<S: Real>(s: &ReturnSeries<S>) -> Result<RatioMetric<S>> {
    s.check_len(1, "sortino")?;
    if !s.r.iter().any(|&x| x < S::zero()) {
        return Err(Error::UndefinedMetric("sortino: no negative returns".into()));
    }
    let dd2 = mean(
        &s.r.iter()
            .map(|&x| {
                let d = x.min(S::zero());
                d * d
            })
            .collect::<Vec<S>>(),
    );
    let raw = mean(&s.r) / dd2.sqrt();
    let ann = raw * S::from_usize(s.periods_per_year).unwrap().sqrt();
    Ok(RatioMetric { raw, annualized: ann })
}

/// Maximum peak-to-trough drawdown of the compounded equity curve.
pub fn max_drawdown<S: Real>(s: &ReturnSeries<S>) -> Result<S> {
    s.check_len(1, "max_drawdown")?;
    if s.r.iter().any(|&x| x <= S::c(-1.0)) {
        return Err(Error::InvalidInput("max_drawdown: return <= -100%".into()));
    }
    let mut equity = S::one();
    let mut peak = S::one();
    let mut mdd = S::zero();
    for &r in &s.r {
        equity *= S::one() + r;
        peak = peak.max(equity);
        mdd = mdd.max(S::one() - equity / peak);
    }
    Ok(mdd)
}

/// Smallest sample value `eta` such that the fraction of losses strictly
/// above `eta` is at most `1 - alpha` (the Rockafellar-Uryasev subgradient
/// zero condition).
pub fn empirical_tail_threshold<S: Real>(losses: &[S], alpha: S) -> Result<S> {
    if losses.is_empty() {
        return Err(Error::InvalidInput("empirical_tail_threshold: empty sample".into()));
    }
    if !(alpha > S::zero() && alpha < S::one()) {
        return Err(Error::InvalidInput("alpha must lie in (0,1)".into()));
    }
    let mut sorted = losses.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let budget = (S::one() - alpha) * S::from_usize(n).unwrap();
    // ascending scan: count of elements strictly greater than sorted[i]
    for (i, &eta) in sorted.iter().enumerate() {
        let above = sorted[i + 1..].iter().filter(|&&x| x > eta).count();
        if S::from_usize(above).unwrap() <= budget {
            return Ok(eta);
        }
    }
    Ok(sorted[n - 1])
}

/// Rockafellar-Uryasev surrogate value at a given `eta`.
pub fn ru_surrogate<S: Real>(losses: &[S], eta: S, alpha: S) -> S {
    let n = S::from_usize(losses.len()).unwrap();
    let hinge: S = losses.iter().map(|&l| (l - eta).max(S::zero())).sum();
    eta + hinge / ((S::one() - alpha) * n)
}

/// CVaR of a return series: losses are negated returns; the surrogate is
/// minimized exactly at the empirical tail threshold.
pub fn cvar_alpha<S: Real>(s: &ReturnSeries<S>, alpha: S) -> Result<S> {
    s.check_len(1, "cvar_alpha")?;
    let losses: Vec<S> = s.r.iter().map(|&r| -r).collect();
    let eta = empirical_tail_threshold(&losses, alpha)?;
    Ok(ru_surrogate(&losses, eta, alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn series(r: Vec<f64>) -> ReturnSeries {
        ReturnSeries::new(r)
    }

    #[test]
    fn bandwidth_zero_is_mean_over_population_sd() {
        let r = vec![0.01, -0.02, 0.015, 0.003, -0.007];
        let s = series(r.clone());
        let m = mean(&r);
        let var = r.iter().map(|x| (x - m).powi(2)).sum::<f64>() / r.len() as f64;
        let got = sharpe_hac(&s, Some(0)).unwrap();
        assert_abs_diff_eq!(got.raw, m / var.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(got.annualized, got.raw * (252f64).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn constant_series_is_undefined() {
        let s = series(vec![0.01; 20]);
        assert!(matches!(sharpe_hac(&s, Some(0)), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn ar1_long_run_variance_matches_closed_form() {
        // AR(1): x_t = rho x_{t-1} + eps, LRV = sigma_eps^2 / (1 - rho)^2
        let rho = 0.5;
        let t = 20_000;
        let mut rng = crate::rngs::stream(1234, &[9]);
        let mut xs = Vec::with_capacity(t);
        let mut x = 0.0;
        for _ in 0..t {
            let e: f64 = StandardNormal.sample(&mut rng);
            x = rho * x + e;
            xs.push(x);
        }
        let lrv = hac_long_run_variance(&xs, 30).unwrap();
        let truth = (1.0f64 / (1.0 - rho)).powi(2);
        assert!((lrv - truth).abs() / truth < 0.10, "lrv={lrv} truth={truth}");
    }

    #[test]
    fn sortino_examples() {
        // zero-mean alternating series
        let s = series(vec![0.1, -0.1, 0.1, -0.1]);
        assert_abs_diff_eq!(sortino(&s).unwrap().raw, 0.0, epsilon = 1e-15);
        // hand arithmetic: mean 0.05, dd = sqrt(0.005)
        let s = series(vec![0.2, -0.1]);
        assert_abs_diff_eq!(sortino(&s).unwrap().raw, 0.05 / 0.005f64.sqrt(), epsilon = 1e-12);
        // no negative returns
        assert!(sortino(&series(vec![0.1, 0.2])).is_err());
    }

    #[test]
    fn max_drawdown_examples() {
        assert_eq!(max_drawdown(&series(vec![0.1, 0.0, 0.2])).unwrap(), 0.0);
        assert_abs_diff_eq!(
            max_drawdown(&series(vec![0.1, -0.5])).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(max_drawdown(&series(vec![-0.2])).unwrap(), 0.2, epsilon = 1e-15);
        assert!(max_drawdown(&series(vec![-1.5])).is_err());
    }

    #[test]
    fn mdd_matches_double_loop_oracle() {
        let mut rng = crate::rngs::stream(55, &[3]);
        for _ in 0..100 {
            let n = rng.gen_range(1..200);
            let r: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.05..0.05)).collect();
            let got = max_drawdown(&series(r.clone())).unwrap();
            // O(T^2) oracle over all (peak, trough) pairs
            let mut v = vec![1.0];
            for x in &r {
                v.push(v.last().unwrap() * (1.0 + x));
            }
            let mut oracle = 0.0f64;
            for u in 0..v.len() {
                for t in u..v.len() {
                    oracle = oracle.max(1.0 - v[t] / v[u]);
                }
            }
            assert_abs_diff_eq!(got, oracle, epsilon = 1e-12);
        }
    }

    #[test]
    fn cvar_constant_series() {
        let s = series(vec![0.02; 10]);
        assert_abs_diff_eq!(cvar_alpha(&s, 0.9).unwrap(), -0.02, epsilon = 1e-15);
    }

    #[test]
    fn cvar_matches_grid_search_oracle() {
        // losses {1,2,3,4} at alpha = 0.75: minimizer over eta gives 4
        let losses = [1.0, 2.0, 3.0, 4.0];
        let returns: Vec<f64> = losses.iter().map(|l| -l).collect();
        let got = cvar_alpha(&series(returns), 0.75).unwrap();
        // grid search over eta in [0, 5] step 1e-3
        let mut best = f64::INFINITY;
        for i in 0..=5000 {
            let eta = i as f64 * 1e-3;
            best = best.min(ru_surrogate(&losses, eta, 0.75));
        }
        assert_abs_diff_eq!(got, 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(got, best, epsilon = 1e-6);
    }

    #[test]
    fn cvar_monotone_in_alpha() {
        let mut rng = crate::rngs::stream(8, &[4]);
        let r: Vec<f64> = (0..200).map(|_| rng.gen_range(-0.1..0.1)).collect();
        let s = series(r);
        let mut last = f64::NEG_INFINITY;
        for alpha in [0.5, 0.7, 0.9, 0.95, 0.975] {
            let c = cvar_alpha(&s, alpha).unwrap();
            assert!(c >= last - 1e-12);
            last = c;
        }
    }

    #[test]
    fn cvar_equals_tail_average_on_distinct_samples() {
        let mut rng = crate::rngs::stream(21, &[5]);
        for _ in 0..100 {
            let n = rng.gen_range(20..200);
            let alpha = rng.gen_range(0.80..0.975);
            let losses: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let returns: Vec<f64> = losses.iter().map(|l| -l).collect();
            let got = cvar_alpha(&series(returns), alpha).unwrap();
            // order-statistics tail average with a fractional atom at the VaR
            let mut sorted = losses.clone();
            sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let tail = (1.0 - alpha) * n as f64;
            let k = tail.floor() as usize;
            let mut acc: f64 = sorted[..k].iter().sum();
            acc += (tail - k as f64) * sorted[k];
            let oracle = acc / tail;
            assert_abs_diff_eq!(got, oracle, epsilon = 1e-10);
        }
    }

    #[test]
    fn sharpe_scale_invariant() {
        let mut rng = crate::rngs::stream(3, &[6]);
        let r: Vec<f64> = (0..500).map(|_| rng.gen_range(-0.02..0.03)).collect();
        let a = sharpe_hac(&series(r.clone()), None).unwrap();
        let b = sharpe_hac(&series(r.iter().map(|x| x * 3.5).collect()), None).unwrap();
        assert_abs_diff_eq!(a.raw, b.raw, epsilon = 1e-12);
    }
}
