//! Synthetic multi-asset market simulator with regime-switching volatility
//! and illiquidity.
//!
//! A 4-state latent Markov chain (LL/LH/HL/HH over the volatility x
//! illiquidity axes) drives per-period volatility scaling of correlated
//! Gaussian shocks. Volatility and illiquidity diagnostics are emitted as
//! noisy observations of the regime levels and relabeled with the same
//! threshold/nearest-centroid rule used downstream.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rngs;

/// Joint volatility-liquidity regime. Serialization order is fixed as
/// LL < LH < HL < HH.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RegimeLabel {
    LL,
    LH,
    HL,
    HH,
}

impl RegimeLabel {
    pub const ALL: [RegimeLabel; 4] = [RegimeLabel::LL, RegimeLabel::LH, RegimeLabel::HL, RegimeLabel::HH];

    pub fn index(self) -> usize {
        match self {
            RegimeLabel::LL => 0,
            RegimeLabel::LH => 1,
            RegimeLabel::HL => 2,
            RegimeLabel::HH => 3,
        }
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RegimeLabel::LL => "LL",
            RegimeLabel::LH => "LH",
            RegimeLabel::HL => "HL",
            RegimeLabel::HH => "HH",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "LL" => Ok(RegimeLabel::LL),
            "LH" => Ok(RegimeLabel::LH),
            "HL" => Ok(RegimeLabel::HL),
            "HH" => Ok(RegimeLabel::HH),
            other => Err(Error::InvalidInput(format!("unknown regime label {other:?}"))),
        }
    }

    /// High-volatility half of the grid (HL, HH).
    pub fn high_vol(self) -> bool {
        matches!(self, RegimeLabel::HL | RegimeLabel::HH)
    }

    /// High-illiquidity half of the grid (LH, HH).
    pub fn high_illiq(self) -> bool {
        matches!(self, RegimeLabel::LH | RegimeLabel::HH)
    }
}

/// Per-regime value map with fixed LL/LH/HL/HH keys.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeMap<T> {
    #[serde(rename = "LL")]
    pub ll: T,
    #[serde(rename = "LH")]
    pub lh: T,
    #[serde(rename = "HL")]
    pub hl: T,
    #[serde(rename = "HH")]
    pub hh: T,
}

impl<T> RegimeMap<T> {
    pub fn get_ref(&self, z: RegimeLabel) -> &T {
        match z {
            RegimeLabel::LL => &self.ll,
            RegimeLabel::LH => &self.lh,
            RegimeLabel::HL => &self.hl,
            RegimeLabel::HH => &self.hh,
        }
    }

    pub fn from_fn(mut f: impl FnMut(RegimeLabel) -> T) -> Self {
        Self {
            ll: f(RegimeLabel::LL),
            lh: f(RegimeLabel::LH),
            hl: f(RegimeLabel::HL),
            hh: f(RegimeLabel::HH),
        }
    }
}

impl<T: Copy> RegimeMap<T> {
    pub fn new(ll: T, lh: T, hl: T, hh: T) -> Self {
        Self { ll, lh, hl, hh }
    }

    pub fn uniform(v: T) -> Self {
        Self { ll: v, lh: v, hl: v, hh: v }
    }

    pub fn get(&self, z: RegimeLabel) -> T {
        match z {
            RegimeLabel::LL => self.ll,
            RegimeLabel::LH => self.lh,
            RegimeLabel::HL => self.hl,
            RegimeLabel::HH => self.hh,
        }
    }

    pub fn set(&mut self, z: RegimeLabel, v: T) {
        match z {
            RegimeLabel::LL => self.ll = v,
            RegimeLabel::LH => self.lh = v,
            RegimeLabel::HL => self.hl = v,
            RegimeLabel::HH => self.hh = v,
        }
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> RegimeMap<U> {
        RegimeMap {
            ll: f(self.ll),
            lh: f(self.lh),
            hl: f(self.hl),
            hh: f(self.hh),
        }
    }
}

/// Quantile cutoff quadruple for regime labeling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub sigma_low: f64,
    pub sigma_high: f64,
    pub illiq_low: f64,
    pub illiq_high: f64,
}

/// Market generator configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketConfig {
    pub n_assets: usize,
    pub horizon: usize,
    /// Probability of staying in the current latent regime per step.
    pub regime_persistence: f64,
    pub vol_levels: RegimeMap<f64>,
    pub illiq_levels: RegimeMap<f64>,
    pub mean_returns: Vec<f64>,
    /// Row-major symmetric positive-definite correlation matrix.
    pub correlation: Vec<Vec<f64>>,
    pub seed: u64,
    /// Lognormal dispersion of the (sigma, illiq) observation noise.
    #[serde(default = "default_obs_noise")]
    pub obs_noise: f64,
    #[serde(default = "default_initial_regime")]
    pub initial_regime: RegimeLabel,
    /// When set, off-diagonal transition mass is tilted toward this regime so
    /// a scenario cell spends most of its time there.
    #[serde(default)]
    pub bias_regime: Option<RegimeLabel>,
    /// Share of the leaving mass routed to `bias_regime`.
    #[serde(default = "default_bias_weight")]
    pub bias_weight: f64,
}

fn default_obs_noise() -> f64 {
    0.1
}

fn default_initial_regime() -> RegimeLabel {
    RegimeLabel::LL
}

fn default_bias_weight() -> f64 {
    0.7
}

impl MarketConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_assets == 0 || self.horizon == 0 {
            return Err(Error::InvalidInput("n_assets and horizon must be positive".into()));
        }
        if !(self.regime_persistence > 0.0 && self.regime_persistence <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "regime_persistence must lie in (0,1], got {}",
                self.regime_persistence
            )));
        }
        if self.mean_returns.len() != self.n_assets {
            return Err(Error::DimensionMismatch {
                expected: self.n_assets,
                got: self.mean_returns.len(),
            });
        }
        for z in RegimeLabel::ALL {
            if self.vol_levels.get(z) <= 0.0 || self.illiq_levels.get(z) <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "vol/illiq level for {} must be positive",
                    z.as_str()
                )));
            }
        }
        // level orderings: vol axis low for LL/LH, high for HL/HH; illiq axis
        // low for LL/HL, high for LH/HH
        let v = &self.vol_levels;
        if v.ll > v.hl || v.ll > v.hh || v.lh > v.hl || v.lh > v.hh {
            return Err(Error::InvalidInput("vol_levels must satisfy LL,LH <= HL,HH".into()));
        }
        let l = &self.illiq_levels;
        if l.ll > l.lh || l.ll > l.hh || l.hl > l.lh || l.hl > l.hh {
            return Err(Error::InvalidInput("illiq_levels must satisfy LL,HL <= LH,HH".into()));
        }
        let corr = self.correlation_matrix()?;
        check_correlation(&corr)?;
        if self.obs_noise < 0.0 {
            return Err(Error::InvalidInput("obs_noise must be nonnegative".into()));
        }
        if !(0.0..=1.0).contains(&self.bias_weight) {
            return Err(Error::InvalidInput("bias_weight must lie in [0,1]".into()));
        }
        Ok(())
    }

    pub fn correlation_matrix(&self) -> Result<DMatrix<f64>> {
        let n = self.n_assets;
        if self.correlation.len() != n || self.correlation.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: self.correlation.len() });
        }
        let flat: Vec<f64> = self.correlation.iter().flatten().copied().collect();
        Ok(DMatrix::from_row_slice(n, n, &flat))
    }
}

fn check_correlation(corr: &DMatrix<f64>) -> Result<()> {
    let n = corr.nrows();
    for i in 0..n {
        if (corr[(i, i)] - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidInput(format!(
                "correlation diagonal must be 1, got {} at {}",
                corr[(i, i)],
                i
            )));
        }
        for j in 0..n {
            if (corr[(i, j)] - corr[(j, i)]).abs() > 1e-8 {
                return Err(Error::InvalidInput("correlation must be symmetric".into()));
            }
        }
    }
    let eig = corr.clone().symmetric_eigen();
    for (i, &ev) in eig.eigenvalues.iter().enumerate() {
        if ev <= 0.0 {
            return Err(Error::NotPositiveDefinite { index: i, eigenvalue: ev });
        }
    }
    Ok(())
}

/// Generated path: diagnostics, labels, and asset returns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimePath {
    pub sigma: Vec<f64>,
    pub illiq: Vec<f64>,
    pub labels: Vec<RegimeLabel>,
    /// horizon x n_assets return matrix, row per period.
    pub returns: Vec<Vec<f64>>,
    /// Thresholds the generator used to label its own diagnostics.
    pub thresholds: Thresholds,
    /// Per-regime (sigma, illiq) centroids for the nearest-neighbor fallback.
    pub centroids: RegimeMap<(f64, f64)>,
}

impl RegimePath {
    pub fn horizon(&self) -> usize {
        self.labels.len()
    }

    pub fn n_assets(&self) -> usize {
        self.returns.first().map_or(0, |r| r.len())
    }

    /// CSV with columns `t,sigma,illiq,label,r_1..r_d`.
    pub fn to_csv(&self) -> String {
        let d = self.n_assets();
        let mut out = String::from("t,sigma,illiq,label");
        for i in 1..=d {
            out.push_str(&format!(",r_{i}"));
        }
        out.push('\n');
        for t in 0..self.horizon() {
            out.push_str(&format!(
                "{},{},{},{}",
                t, self.sigma[t], self.illiq[t], self.labels[t].as_str()
            ));
            for r in &self.returns[t] {
                out.push_str(&format!(",{r}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Classify a (sigma, illiq) point into the four corner cells; points outside
/// the corners fall to the nearest centroid in standardized Euclidean
/// distance (each axis divided by its inter-cutoff gap). Ties break in the
/// fixed label order.
pub fn label_regime(
    sigma: f64,
    illiq: f64,
    thresholds: &Thresholds,
    centroids: &RegimeMap<(f64, f64)>,
) -> Result<RegimeLabel> {
    if !sigma.is_finite() || !illiq.is_finite() {
        return Err(Error::NonFinite("label_regime input".into()));
    }
    let t = thresholds;
    if t.sigma_low > t.sigma_high || t.illiq_low > t.illiq_high {
        return Err(Error::InvalidInput("thresholds must be ordered per axis".into()));
    }
    let low_s = sigma <= t.sigma_low;
    let high_s = sigma > t.sigma_high;
    let low_l = illiq <= t.illiq_low;
    let high_l = illiq > t.illiq_high;
    match (low_s, high_s, low_l, high_l) {
        (true, _, true, _) => return Ok(RegimeLabel::LL),
        (true, _, _, true) => return Ok(RegimeLabel::LH),
        (_, true, true, _) => return Ok(RegimeLabel::HL),
        (_, true, _, true) => return Ok(RegimeLabel::HH),
        _ => {}
    }
    let gap_s = (t.sigma_high - t.sigma_low).max(f64::MIN_POSITIVE);
    let gap_l = (t.illiq_high - t.illiq_low).max(f64::MIN_POSITIVE);
    let mut best = RegimeLabel::LL;
    let mut best_d = f64::INFINITY;
    for z in RegimeLabel::ALL {
        let (cs, cl) = centroids.get(z);
        let d = ((sigma - cs) / gap_s).powi(2) + ((illiq - cl) / gap_l).powi(2);
        if d < best_d {
            best_d = d;
            best = z;
        }
    }
    Ok(best)
}

/// Rolling nearest-rank quantile cutoffs over the trailing `window` points
/// (inclusive of t); expanding window before the first full window.
pub fn rolling_thresholds(
    sigma: &[f64],
    illiq: &[f64],
    window: usize,
    q_low: f64,
    q_high: f64,
) -> Result<Vec<Thresholds>> {
    if window < 2 {
        return Err(Error::InvalidInput("rolling_thresholds: window must be >= 2".into()));
    }
    if sigma.len() != illiq.len() {
        return Err(Error::DimensionMismatch { expected: sigma.len(), got: illiq.len() });
    }
    if window > sigma.len() {
        return Err(Error::InvalidInput("rolling_thresholds: window exceeds series length".into()));
    }
    if !(q_low > 0.0 && q_low < 0.5 && q_high > 0.5 && q_high < 1.0) {
        return Err(Error::InvalidInput("quantiles must satisfy 0 < q_low < 0.5 < q_high < 1".into()));
    }
    let mut out = Vec::with_capacity(sigma.len());
    for t in 0..sigma.len() {
        let start = t.saturating_sub(window - 1);
        let ws = &sigma[start..=t];
        let wl = &illiq[start..=t];
        out.push(Thresholds {
            sigma_low: nearest_rank_quantile(ws, q_low),
            sigma_high: nearest_rank_quantile(ws, q_high),
            illiq_low: nearest_rank_quantile(wl, q_low),
            illiq_high: nearest_rank_quantile(wl, q_high),
        });
    }
    Ok(out)
}

/// Nearest-rank quantile: element at rank ceil(q*n) of the sorted sample.
pub fn nearest_rank_quantile(xs: &[f64], q: f64) -> f64 {
    debug_assert!(!xs.is_empty());
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = (q * sorted.len() as f64).ceil().max(1.0) as usize;
    sorted[rank.min(sorted.len()) - 1]
}

/// Thresholds and centroids the generator uses to label its own diagnostics:
/// cutoffs at 40%/60% between the low- and high-level cluster means, centroids
/// at the configured (vol, illiq) level points.
pub fn generator_labeling(cfg: &MarketConfig) -> (Thresholds, RegimeMap<(f64, f64)>) {
    let v = &cfg.vol_levels;
    let l = &cfg.illiq_levels;
    let lo_s = 0.5 * (v.ll + v.lh);
    let hi_s = 0.5 * (v.hl + v.hh);
    let lo_l = 0.5 * (l.ll + l.hl);
    let hi_l = 0.5 * (l.lh + l.hh);
    let thresholds = Thresholds {
        sigma_low: lo_s + 0.4 * (hi_s - lo_s),
        sigma_high: lo_s + 0.6 * (hi_s - lo_s),
        illiq_low: lo_l + 0.4 * (hi_l - lo_l),
        illiq_high: lo_l + 0.6 * (hi_l - lo_l),
    };
    let centroids = RegimeMap {
        ll: (v.ll, l.ll),
        lh: (v.lh, l.lh),
        hl: (v.hl, l.hl),
        hh: (v.hh, l.hh),
    };
    (thresholds, centroids)
}

/// Generate a synthetic path. Deterministic given `cfg.seed`.
pub fn generate_path(cfg: &MarketConfig) -> Result<RegimePath> {
    cfg.validate()?;
    let corr = cfg.correlation_matrix()?;
    let chol = corr
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidInput("correlation Cholesky failed".into()))?;
    let lower = chol.l();

    let mut chain_rng = rngs::stream(cfg.seed, &[0]);
    let mut shock_rng = rngs::stream(cfg.seed, &[1]);
    let mut obs_rng = rngs::stream(cfg.seed, &[2]);

    let (thresholds, centroids) = generator_labeling(cfg);

    let d = cfg.n_assets;
    let mut sigma = Vec::with_capacity(cfg.horizon);
    let mut illiq = Vec::with_capacity(cfg.horizon);
    let mut labels = Vec::with_capacity(cfg.horizon);
    let mut returns = Vec::with_capacity(cfg.horizon);

    let mut latent = cfg.initial_regime;
    for t in 0..cfg.horizon {
        if t > 0 {
            latent = step_chain(latent, cfg, &mut chain_rng);
        }
        let vol = cfg.vol_levels.get(latent);
        let liq = cfg.illiq_levels.get(latent);

        let eps = DVector::from_iterator(d, (0..d).map(|_| {
            let x: f64 = StandardNormal.sample(&mut shock_rng);
            x
        }));
        let shock = &lower * eps;
        let row: Vec<f64> = (0..d).map(|i| cfg.mean_returns[i] + vol * shock[i]).collect();

        let noise_s = lognormal_factor(cfg.obs_noise, &mut obs_rng);
        let noise_l = lognormal_factor(cfg.obs_noise, &mut obs_rng);
        let s_obs = vol * noise_s;
        let l_obs = liq * noise_l;
        let label = label_regime(s_obs, l_obs, &thresholds, &centroids)?;

        sigma.push(s_obs);
        illiq.push(l_obs);
        labels.push(label);
        returns.push(row);
    }

    Ok(RegimePath { sigma, illiq, labels, returns, thresholds, centroids })
}

fn step_chain(current: RegimeLabel, cfg: &MarketConfig, rng: &mut impl Rng) -> RegimeLabel {
    let u: f64 = rng.gen();
    if u < cfg.regime_persistence {
        return current;
    }
    let others: Vec<RegimeLabel> = RegimeLabel::ALL
        .into_iter()
        .filter(|z| *z != current)
        .collect();
    let probs: Vec<f64> = match cfg.bias_regime {
        Some(bias) if bias != current => others
            .iter()
            .map(|z| {
                if *z == bias {
                    cfg.bias_weight
                } else {
                    (1.0 - cfg.bias_weight) / 2.0
                }
            })
            .collect(),
        _ => vec![1.0 / 3.0; 3],
    };
    let v: f64 = rng.gen();
    let mut acc = 0.0;
    for (z, p) in others.iter().zip(&probs) {
        acc += p;
        if v < acc {
            return *z;
        }
    }
    others[2]
}

fn lognormal_factor(dispersion: f64, rng: &mut impl Rng) -> f64 {
    if dispersion == 0.0 {
        return 1.0;
    }
    let n: f64 = StandardNormal.sample(rng);
    (dispersion * n - 0.5 * dispersion * dispersion).exp()
}
