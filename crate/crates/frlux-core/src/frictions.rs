//! Regime-dependent execution cost functional: proportional cost on l1
//! notional traded plus a quadratic transient-impact term, with the bps-grid
//! and liquidity-scarcity calibration and the turnover-budget-to-penalty
//! converter.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mktsim::{RegimeLabel, RegimeMap};
use crate::num::Real;

/// Admissible proportional-cost grid points, in basis points.
pub const BPS_GRID: [u32; 5] = [0, 5, 10, 25, 50];

/// Numerical PSD slack on impact matrices.
const PSD_TOL: f64 = 1e-10;

/// Per-regime cost coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    /// Linear cost per unit l1 notional, decimal (bps x 1e-4), per regime.
    pub kappa1: RegimeMap<f64>,
    /// Symmetric PSD impact matrix per regime, row-major.
    pub gamma: RegimeMap<Vec<Vec<f64>>>,
    /// Scalar multiplying total execution cost inside the reward.
    pub lambda_tc: f64,
}

impl CostModel {
    /// Pure proportional model with a uniform linear coefficient.
    pub fn proportional(kappa: f64, n_assets: usize) -> Self {
        CostModel {
            kappa1: RegimeMap::uniform(kappa),
            gamma: RegimeMap::from_fn(|_| vec![vec![0.0; n_assets]; n_assets]),
            lambda_tc: 1.0,
        }
    }

    pub fn n_assets(&self) -> usize {
        self.gamma.ll.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda_tc < 0.0 {
            return Err(Error::InvalidInput("lambda_tc must be nonnegative".into()));
        }
        for z in RegimeLabel::ALL {
            if self.kappa1.get(z) < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "kappa1({}) must be nonnegative",
                    z.as_str()
                )));
            }
            let g = self.gamma.get_ref(z);
            let n = g.len();
            if g.iter().any(|r| r.len() != n) {
                return Err(Error::InvalidInput("gamma must be square".into()));
            }
            let m = DMatrix::from_row_slice(n, n, &g.iter().flatten().copied().collect::<Vec<_>>());
            if (&m - m.transpose()).abs().max() > 1e-8 {
                return Err(Error::InvalidInput(format!(
                    "gamma({}) must be symmetric",
                    z.as_str()
                )));
            }
            let eig = m.symmetric_eigen();
            for (i, &ev) in eig.eigenvalues.iter().enumerate() {
                if ev < -PSD_TOL {
                    return Err(Error::NotPositiveDefinite { index: i, eigenvalue: ev });
                }
            }
        }
        Ok(())
    }

    /// Execution cost `kappa1(z) * |dw|_1 + 0.5 * dw' Gamma_z dw`.
    pub fn cost(&self, z: RegimeLabel, dw: &[f64]) -> Result<f64> {
        let g = self.gamma.get_ref(z);
        if dw.len() != g.len() {
            return Err(Error::DimensionMismatch { expected: g.len(), got: dw.len() });
        }
        if dw.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("cost trade flow".into()));
        }
        let flat: Vec<f64> = g.iter().flatten().copied().collect();
        Ok(cost_kernel(self.kappa1.get(z), &flat, dw))
    }

    /// Smallest linear coefficient across regimes.
    pub fn kappa_min(&self) -> f64 {
        RegimeLabel::ALL
            .into_iter()
            .map(|z| self.kappa1.get(z))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Scalar cost kernel: `kappa1 * |dw|_1 + 0.5 * dw' G dw` with `G` row-major.
pub fn cost_kernel<S: Real>(kappa1: S, gamma_row_major: &[S], dw: &[S]) -> S {
    let n = dw.len();
    let l1: S = dw.iter().map(|x| x.abs()).sum();
    let mut quad = S::zero();
    for i in 0..n {
        let mut acc = S::zero();
        for j in 0..n {
            acc += gamma_row_major[i * n + j] * dw[j];
        }
        quad += dw[i] * acc;
    }
    kappa1 * l1 + S::c(0.5) * quad
}

/// Calibration inputs for the bps grid of Section-style cost levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostCalibration {
    /// One of {0, 5, 10, 25, 50}.
    pub bps_level: u32,
    /// Regime liquidity scale s(z) >= 1.
    pub regime_scale: RegimeMap<f64>,
    /// Impact magnitude.
    pub gamma_imp: f64,
    /// Diagonal liquidity-scarcity scaling D_z (positive entries).
    pub liquidity_scarcity: RegimeMap<Vec<f64>>,
    /// Return covariance, row-major PSD.
    pub covariance: Vec<Vec<f64>>,
}

impl CostCalibration {
    /// Default regime scales: s = {LL:1, LH:1.5, HL:1.25, HH:2}.
    pub fn default_regime_scale() -> RegimeMap<f64> {
        RegimeMap::new(1.0, 1.5, 1.25, 2.0)
    }

    /// Default illiquidity-tilted scarcity diagonals.
    pub fn default_liquidity_scarcity(n_assets: usize) -> RegimeMap<Vec<f64>> {
        RegimeMap::from_fn(|z| {
            let s = if z.high_illiq() { 2.0 } else { 1.0 };
            vec![s; n_assets]
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !BPS_GRID.contains(&self.bps_level) {
            return Err(Error::InvalidInput(format!(
                "bps_level {} not in {:?}",
                self.bps_level, BPS_GRID
            )));
        }
        for z in RegimeLabel::ALL {
            if self.regime_scale.get(z) < 1.0 {
                return Err(Error::InvalidInput("regime_scale must be >= 1".into()));
            }
            if self.liquidity_scarcity.get_ref(z).iter().any(|&d| d <= 0.0) {
                return Err(Error::InvalidInput("liquidity_scarcity must be positive".into()));
            }
        }
        if self.regime_scale.hh < self.regime_scale.ll {
            return Err(Error::InvalidInput("regime_scale(HH) must be >= regime_scale(LL)".into()));
        }
        if self.gamma_imp < 0.0 {
            return Err(Error::InvalidInput("gamma_imp must be nonnegative".into()));
        }
        Ok(())
    }
}

/// `gamma_imp` such that the quadratic term equals the linear term at
/// `|dw|_1 = 0.5` in the uniform trade direction under the 10 bps / LL cell.
pub fn default_gamma_imp(covariance: &[Vec<f64>]) -> f64 {
    let n = covariance.len();
    if n == 0 {
        return 0.0;
    }
    let kappa = 10.0 * 1e-4; // 10 bps, s(LL) = 1
    let dw = vec![0.5 / n as f64; n];
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += dw[i] * covariance[i][j] * dw[j];
        }
    }
    if quad <= 0.0 {
        return 0.0;
    }
    kappa * 0.5 / (0.5 * quad)
}

/// Build the per-regime cost model from a bps-grid calibration.
///
/// `kappa1(z) = bps x 1e-4 x s(z)`; `Gamma_z = gamma_imp D_z^{1/2} Sigma
/// D_z^{1/2}` symmetrized after construction; `lambda_tc` defaults to 1.
pub fn build_cost_model(cal: &CostCalibration) -> Result<CostModel> {
    cal.validate()?;
    let n = cal.covariance.len();
    if cal.covariance.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidInput("covariance must be square".into()));
    }
    // symmetrize Sigma to 8-decimal tolerance before use
    let mut sigma = DMatrix::from_row_slice(
        n,
        n,
        &cal.covariance.iter().flatten().copied().collect::<Vec<_>>(),
    );
    if (&sigma - sigma.transpose()).abs().max() > 1e-8 {
        return Err(Error::InvalidInput("covariance must be symmetric to 1e-8".into()));
    }
    sigma = (&sigma + sigma.transpose()) * 0.5;
    let eig = sigma.clone().symmetric_eigen();
    for (i, &ev) in eig.eigenvalues.iter().enumerate() {
        if ev < -PSD_TOL {
            return Err(Error::NotPositiveDefinite { index: i, eigenvalue: ev });
        }
    }

    let kappa1 = cal.regime_scale.map(|s| cal.bps_level as f64 * 1e-4 * s);
    let gamma = RegimeMap::from_fn(|z| {
        let d = cal.liquidity_scarcity.get_ref(z);
        if d.len() != n {
            return vec![];
        }
        let d_half = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            n,
            d.iter().map(|x| x.sqrt()),
        ));
        let mut g = &d_half * &sigma * &d_half * cal.gamma_imp;
        g = (&g + g.transpose()) * 0.5;
        (0..n).map(|i| (0..n).map(|j| g[(i, j)]).collect()).collect()
    });
    if RegimeLabel::ALL.iter().any(|z| gamma.get_ref(*z).is_empty() && n > 0) {
        return Err(Error::DimensionMismatch { expected: n, got: 0 });
    }
    let model = CostModel { kappa1, gamma, lambda_tc: 1.0 };
    model.validate()?;
    Ok(model)
}

/// Conservative turnover-budget-to-penalty rule:
/// `lambda_tc = (1 - gamma) rbar / (gamma kappa_min TO_max)`.
pub fn min_penalty_for_turnover_budget(
    rbar: f64,
    gamma_discount: f64,
    kappa_min: f64,
    to_max: f64,
) -> Result<f64> {
    if to_max <= 0.0 {
        return Err(Error::InvalidInput("TO_max must be positive (zero implies infinite penalty)".into()));
    }
    if rbar <= 0.0 || kappa_min <= 0.0 {
        return Err(Error::InvalidInput("rbar and kappa_min must be positive".into()));
    }
    if !(gamma_discount > 0.0 && gamma_discount < 1.0) {
        return Err(Error::InvalidInput("discount must lie in (0,1)".into()));
    }
    Ok((1.0 - gamma_discount) * rbar / (gamma_discount * kappa_min * to_max))
}

/// Cost-shape selector for misspecification studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostShape {
    LinearOnly,
    LinearPlusQuadratic,
}

/// Scale kappa1 and Gamma by `(1 + rel)`, optionally dropping the quadratic
/// term. Input model is left unmodified.
pub fn perturb_cost_model(model: &CostModel, rel: f64, shape: CostShape) -> Result<CostModel> {
    if rel.abs() > 0.25 + 1e-12 {
        return Err(Error::InvalidInput(format!("|rel| must be <= 0.25, got {rel}")));
    }
    let factor = 1.0 + rel;
    let kappa1 = model.kappa1.map(|k| k * factor);
    let gamma = RegimeMap::from_fn(|z| {
        let g = model.gamma.get_ref(z);
        match shape {
            CostShape::LinearOnly => vec![vec![0.0; g.len()]; g.len()],
            CostShape::LinearPlusQuadratic => g
                .iter()
                .map(|row| row.iter().map(|x| x * factor).collect())
                .collect(),
        }
    });
    Ok(CostModel { kappa1, gamma, lambda_tc: model.lambda_tc })
}
