//! Feasible weight sets, exact Euclidean projections, and trade-flow /
//! turnover accounting.
//!
//! Two feasible sets are supported: the long-only simplex
//! `{w >= 0, 1'w = 1}` and a long-short box `{|w|_1 <= leverage_cap,
//! -position_cap <= w_i <= position_cap}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;

/// Membership tolerance for feasibility checks.
pub const FEAS_TOL: f64 = 1e-9;

/// Feasible set for post-trade target weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeasibleSet {
    LongOnlySimplex,
    LongShortBox { leverage_cap: f64, position_cap: f64 },
}

impl FeasibleSet {
    pub fn validate(&self, n_assets: usize) -> Result<()> {
        match self {
            FeasibleSet::LongOnlySimplex => Ok(()),
            FeasibleSet::LongShortBox { leverage_cap, position_cap } => {
                if *leverage_cap < 1.0 {
                    return Err(Error::InvalidInput(format!(
                        "leverage_cap must be >= 1, got {leverage_cap}"
                    )));
                }
                if *position_cap <= 0.0 || *position_cap > *leverage_cap {
                    return Err(Error::InvalidInput(format!(
                        "position_cap must lie in (0, leverage_cap], got {position_cap}"
                    )));
                }
                if *position_cap * (n_assets as f64) < *leverage_cap {
                    return Err(Error::InvalidInput(format!(
                        "infeasible pair: position_cap * n_assets = {} < leverage_cap {}",
                        position_cap * n_assets as f64,
                        leverage_cap
                    )));
                }
                Ok(())
            }
        }
    }

    /// Euclidean projection of `v` onto this set.
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        match self {
            FeasibleSet::LongOnlySimplex => project_simplex(v),
            FeasibleSet::LongShortBox { leverage_cap, position_cap } => {
                project_l1_box(v, *leverage_cap, *position_cap)
            }
        }
    }

    /// Membership check within [`FEAS_TOL`].
    pub fn contains(&self, w: &[f64]) -> bool {
        match self {
            FeasibleSet::LongOnlySimplex => {
                w.iter().all(|&x| x >= -FEAS_TOL)
                    && (w.iter().sum::<f64>() - 1.0).abs() <= FEAS_TOL * w.len() as f64
            }
            FeasibleSet::LongShortBox { leverage_cap, position_cap } => {
                w.iter().all(|&x| x.abs() <= position_cap + FEAS_TOL)
                    && w.iter().map(|x| x.abs()).sum::<f64>() <= leverage_cap + FEAS_TOL
            }
        }
    }
}

/// Exact Euclidean projection onto the probability simplex.
///
/// Sort-based water-filling threshold; coordinates at or below the threshold
/// map to zero. Active coordinates are renormalized so the output sums to 1
/// within 1e-12.
pub fn project_simplex<S: Real>(v: &[S]) -> Result<Vec<S>> {
    if v.is_empty() {
        return Err(Error::InvalidInput("project_simplex: empty vector".into()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("project_simplex input".into()));
    }
    let mut sorted: Vec<S> = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let one = S::one();
    let mut cumsum = S::zero();
    let mut theta = S::zero();
    let mut rho = 0usize;
    for (j, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let cand = (cumsum - one) / S::from_usize(j + 1).unwrap();
        if u - cand > S::zero() {
            rho = j + 1;
            theta = cand;
        }
    }
    debug_assert!(rho >= 1);
    let mut w: Vec<S> = v.iter().map(|&x| (x - theta).max(S::zero())).collect();
    let total: S = w.iter().copied().sum();
    if total > S::zero() {
        for x in w.iter_mut() {
            *x /= total;
        }
    }
    Ok(w)
}

/// Euclidean projection onto the l1 ball of radius `radius`.
pub fn project_l1_ball<S: Real>(v: &[S], radius: S) -> Vec<S> {
    let norm1: S = v.iter().map(|x| x.abs()).sum();
    if norm1 <= radius {
        return v.to_vec();
    }
    let abs: Vec<S> = v.iter().map(|x| x.abs()).collect();
    let mut sorted = abs.clone();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = S::zero();
    let mut theta = S::zero();
    for (j, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let cand = (cumsum - radius) / S::from_usize(j + 1).unwrap();
        if u - cand > S::zero() {
            theta = cand;
        }
    }
    v.iter()
        .map(|&x| x.signum() * (x.abs() - theta).max(S::zero()))
        .collect()
}

/// Euclidean projection onto `{|w|_1 <= leverage_cap} ∩ {|w_i| <= position_cap}`.
///
/// Alternating exact projections with Dykstra correction terms, iterated to a
/// joint fixed point (at most 50 rounds, exit once both constraints hold
/// within 1e-10).
pub fn project_l1_box<S: Real>(v: &[S], leverage_cap: S, position_cap: S) -> Result<Vec<S>> {
    if leverage_cap <= S::zero() || position_cap <= S::zero() {
        return Err(Error::InvalidInput("project_l1_box: caps must be positive".into()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("project_l1_box input".into()));
    }
    let tol = S::c(1e-10);
    let n = v.len();
    let mut x: Vec<S> = v.to_vec();
    let mut p = vec![S::zero(); n]; // Dykstra correction for the box
    let mut q = vec![S::zero(); n]; // Dykstra correction for the l1 ball
    for _ in 0..50 {
        // box step
        let y: Vec<S> = (0..n)
            .map(|i| (x[i] + p[i]).max(-position_cap).min(position_cap))
            .collect();
        for i in 0..n {
            p[i] = x[i] + p[i] - y[i];
        }
        // l1 step
        let z_in: Vec<S> = (0..n).map(|i| y[i] + q[i]).collect();
        let z = project_l1_ball(&z_in, leverage_cap);
        // fixed point requires the iterate and both corrections to settle
        let mut delta = S::zero();
        for i in 0..n {
            let q_new = z_in[i] - z[i];
            delta = delta.max((q_new - q[i]).abs()).max((x[i] - z[i]).abs());
            q[i] = q_new;
        }
        x = z;
        let norm1: S = x.iter().map(|a| a.abs()).sum();
        let in_box = x.iter().all(|a| a.abs() <= position_cap + tol);
        if delta < tol && in_box && norm1 <= leverage_cap + tol {
            break;
        }
    }
    Ok(x)
}

/// Elementwise trade flow `target - prev`.
pub fn trade_flow<S: Real>(prev: &[S], target: &[S]) -> Result<Vec<S>> {
    if prev.len() != target.len() {
        return Err(Error::DimensionMismatch { expected: prev.len(), got: target.len() });
    }
    Ok(prev.iter().zip(target).map(|(&p, &t)| t - p).collect())
}

/// Mean l1 norm over a series of trade flows (buys and sells both counted).
pub fn turnover<S: Real>(flows: &[Vec<S>]) -> Result<S> {
    if flows.is_empty() {
        return Err(Error::InvalidInput("turnover: empty series".into()));
    }
    let total: S = flows
        .iter()
        .map(|f| f.iter().map(|x| x.abs()).sum::<S>())
        .sum();
    Ok(total / S::from_usize(flows.len()).unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn l2(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
    }

    /// Brute-force projection oracle: fine grid over the feasible region.
    fn simplex_grid_oracle(v: &[f64], steps: usize) -> Vec<f64> {
        assert_eq!(v.len(), 3);
        let mut best = vec![1.0, 0.0, 0.0];
        let mut best_d = f64::INFINITY;
        for i in 0..=steps {
            for j in 0..=(steps - i) {
                let w = [
                    i as f64 / steps as f64,
                    j as f64 / steps as f64,
                    (steps - i - j) as f64 / steps as f64,
                ];
                let d = l2(&w, v);
                if d < best_d {
                    best_d = d;
                    best = w.to_vec();
                }
            }
        }
        best
    }

    fn box_grid_oracle(v: &[f64], lev: f64, cap: f64, steps: usize) -> Vec<f64> {
        assert_eq!(v.len(), 2);
        let mut best = vec![0.0, 0.0];
        let mut best_d = f64::INFINITY;
        for i in 0..=steps {
            for j in 0..=steps {
                let w = [
                    -cap + 2.0 * cap * i as f64 / steps as f64,
                    -cap + 2.0 * cap * j as f64 / steps as f64,
                ];
                if w[0].abs() + w[1].abs() > lev {
                    continue;
                }
                let d = l2(&w, v);
                if d < best_d {
                    best_d = d;
                    best = w.to_vec();
                }
            }
        }
        best
    }

    #[test]
    fn simplex_point_unchanged() {
        let v = vec![0.2, 0.3, 0.5];
        let w = project_simplex(&v).unwrap();
        for (a, b) in v.iter().zip(&w) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn simplex_symmetric_input() {
        let w = project_simplex(&[0.5, 0.5, 0.5]).unwrap();
        for x in &w {
            assert_abs_diff_eq!(*x, 1.0 / 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn simplex_corner() {
        // sort-based threshold gives theta = 1
        let w = project_simplex(&[2.0, 0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(w[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w[2], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn simplex_sums_to_one() {
        let w = project_simplex(&[-3.0, 10.0, 0.2, 0.1]).unwrap();
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn simplex_matches_grid_oracle() {
        let mut rng = crate::rngs::stream(41, &[1]);
        use rand::Rng;
        for _ in 0..20 {
            let v: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let w = project_simplex(&v).unwrap();
            let oracle = simplex_grid_oracle(&v, 400);
            for (a, b) in w.iter().zip(&oracle) {
                assert!((a - b).abs() < 5e-3, "{v:?}: {w:?} vs {oracle:?}");
            }
        }
    }

    #[test]
    fn l1_box_interior_unchanged() {
        let v = vec![0.1, -0.2];
        let w = project_l1_box(&v, 1.0, 1.0).unwrap();
        for (a, b) in v.iter().zip(&w) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn l1_box_corner_case() {
        let w = project_l1_box(&[3.0, 0.0], 1.0, 1.0).unwrap();
        let oracle = box_grid_oracle(&[3.0, 0.0], 1.0, 1.0, 800);
        assert!(l2(&w, &oracle) < 5e-3, "{w:?} vs {oracle:?}");
        assert_abs_diff_eq!(w[0], 1.0, epsilon = 1e-8);
    }

    #[test]
    fn l1_box_symmetric_case() {
        // symmetry + KKT: projection of (1,1) onto {|w|_1 <= 1} ∩ box is (0.5, 0.5)
        let w = project_l1_box(&[1.0, 1.0], 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(w[0], 0.5, epsilon = 1e-8);
        assert_abs_diff_eq!(w[1], 0.5, epsilon = 1e-8);
    }

    #[test]
    fn l1_box_matches_grid_oracle() {
        let mut rng = crate::rngs::stream(42, &[2]);
        use rand::Rng;
        for _ in 0..20 {
            let v: Vec<f64> = (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let w = project_l1_box(&v, 1.2, 0.9).unwrap();
            let oracle = box_grid_oracle(&v, 1.2, 0.9, 900);
            assert!(l2(&w, &oracle) < 5e-3, "{v:?}: {w:?} vs {oracle:?}");
        }
    }

    #[test]
    fn trade_flow_and_turnover() {
        let f = trade_flow(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!(f, vec![-1.0, 1.0]);
        // buy and sell both counted
        assert_abs_diff_eq!(
            turnover(&[f.clone()]).unwrap(),
            2.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            turnover(&[f, vec![0.0, 0.0]]).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert!(turnover::<f64>(&[]).is_err());
        assert!(trade_flow(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn infeasible_box_rejected() {
        let set = FeasibleSet::LongShortBox { leverage_cap: 3.0, position_cap: 0.5 };
        assert!(set.validate(2).is_err());
        assert!(set.validate(6).is_ok());
    }

    proptest! {
        #[test]
        fn simplex_idempotent(v in proptest::collection::vec(-5.0f64..5.0, 1..8)) {
            let w1 = project_simplex(&v).unwrap();
            let w2 = project_simplex(&w1).unwrap();
            for (a, b) in w1.iter().zip(&w2) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }

        #[test]
        fn simplex_nonexpansive(
            u in proptest::collection::vec(-5.0f64..5.0, 4),
            v in proptest::collection::vec(-5.0f64..5.0, 4),
        ) {
            let pu = project_simplex(&u).unwrap();
            let pv = project_simplex(&v).unwrap();
            prop_assert!(l2(&pu, &pv) <= l2(&u, &v) + 1e-10);
        }

        #[test]
        fn l1_box_idempotent(v in proptest::collection::vec(-5.0f64..5.0, 1..8)) {
            let w1 = project_l1_box(&v, 1.5, 0.8).unwrap();
            let w2 = project_l1_box(&w1, 1.5, 0.8).unwrap();
            for (a, b) in w1.iter().zip(&w2) {
                prop_assert!((a - b).abs() < 1e-8);
            }
        }

        #[test]
        fn projection_optimality(
            v in proptest::collection::vec(-3.0f64..3.0, 4),
            w in proptest::collection::vec(-3.0f64..3.0, 4),
        ) {
            // projection is closer to v than any feasible point
            let pv = project_simplex(&v).unwrap();
            let feas = project_simplex(&w).unwrap();
            prop_assert!(l2(&pv, &v) <= l2(&feas, &v) + 1e-9);

            let pb = project_l1_box(&v, 1.5, 0.8).unwrap();
            let feas_b = project_l1_box(&w, 1.5, 0.8).unwrap();
            prop_assert!(l2(&pb, &v) <= l2(&feas_b, &v) + 1e-7);
        }
    }
}
