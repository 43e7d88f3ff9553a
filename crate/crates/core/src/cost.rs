//! Tuple costs, coupling costs and the constant-time swap delta.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::problem::{CouplingState, Problem};

type TupleFn = dyn Fn(&[&[f64]]) -> f64 + Send + Sync;

/// Cost of one joint tuple of `K` points.
#[derive(Clone)]
pub enum CostModel {
    /// `weight * sum_{i<j} sum_d |x_i[d] - x_j[d]|^p`.
    ///
    /// `weight = 1` gives the pairwise `d^p` estimator used for distances,
    /// `weight = 1/2, p = 2` the Gangbo-Swiech cost.
    PairwiseLp { p: f64, weight: f64 },
    /// Arbitrary cost of a whole tuple. Swap deltas fall back to four full
    /// tuple evaluations.
    GenericTuple(Arc<TupleFn>),
}

impl fmt::Debug for CostModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::PairwiseLp { p, weight } => f
                .debug_struct("PairwiseLp")
                .field("p", p)
                .field("weight", weight)
                .finish(),
            Self::GenericTuple(_) => f.write_str("GenericTuple(..)"),
        }
    }
}

impl CostModel {
    pub fn pairwise_lp(p: f64, weight: f64) -> Result<Self> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::InvalidArgument(format!("p must be >= 1, got {p}")));
        }
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "pair weight must be > 0, got {weight}"
            )));
        }
        Ok(Self::PairwiseLp { p, weight })
    }

    /// Sum of squared Euclidean distances over all marginal pairs.
    pub fn squared_euclidean() -> Self {
        Self::PairwiseLp { p: 2.0, weight: 1.0 }
    }

    /// Half the sum of squared Euclidean distances over all marginal pairs.
    pub fn gangbo_swiech() -> Self {
        Self::PairwiseLp { p: 2.0, weight: 0.5 }
    }

    pub fn generic<F>(f: F) -> Self
    where
        F: Fn(&[&[f64]]) -> f64 + Send + Sync + 'static,
    {
        Self::GenericTuple(Arc::new(f))
    }

    pub fn is_pairwise(&self) -> bool {
        matches!(self, Self::PairwiseLp { .. })
    }

    /// Exponent of the pairwise model, `None` for generic costs.
    pub fn exponent(&self) -> Option<f64> {
        match self {
            Self::PairwiseLp { p, .. } => Some(*p),
            Self::GenericTuple(_) => None,
        }
    }
}

/// `sum_d |a[d] - b[d]|^p`.
#[inline]
pub fn lp_pow(a: &[f64], b: &[f64], p: f64) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let pairs = a.iter().zip(b);
    if p == 2.0 {
        pairs.map(|(x, y)| (x - y) * (x - y)).sum()
    } else if p == 1.0 {
        pairs.map(|(x, y)| (x - y).abs()).sum()
    } else {
        pairs.map(|(x, y)| (x - y).abs().powf(p)).sum()
    }
}

/// Cost of one tuple of points.
pub fn tuple_cost(cost: &CostModel, tuple: &[&[f64]]) -> Result<f64> {
    if cost.is_pairwise() {
        if let Some(first) = tuple.first() {
            if tuple.iter().any(|x| x.len() != first.len()) {
                return Err(Error::DimensionMismatch);
            }
        }
    }
    Ok(tuple_cost_unchecked(cost, tuple))
}

#[inline]
fn tuple_cost_unchecked(cost: &CostModel, tuple: &[&[f64]]) -> f64 {
    match cost {
        CostModel::PairwiseLp { p, weight } => {
            let mut s = 0.0;
            for (i, a) in tuple.iter().enumerate() {
                for b in &tuple[i + 1..] {
                    s += lp_pow(a, b, *p);
                }
            }
            weight * s
        }
        CostModel::GenericTuple(f) => f(tuple),
    }
}

fn gather<'a>(problem: &'a Problem, perms: &[Vec<usize>], r: usize, out: &mut Vec<&'a [f64]>) {
    out.clear();
    out.extend(
        problem
            .marginals()
            .iter()
            .zip(perms)
            .map(|(m, p)| m.point(p[r])),
    );
}

/// Cost of joint tuple `r` under the given permutations.
pub fn tuple_cost_at(problem: &Problem, perms: &[Vec<usize>], r: usize) -> f64 {
    let mut buf = Vec::with_capacity(perms.len());
    gather(problem, perms, r, &mut buf);
    tuple_cost_unchecked(problem.cost(), &buf)
}

/// Unnormalized coupling cost `sum_r c(tuple_r)`, recomputed from scratch.
pub fn total_cost(problem: &Problem, perms: &[Vec<usize>]) -> f64 {
    let mut buf = Vec::with_capacity(perms.len());
    (0..problem.num_points())
        .map(|r| {
            gather(problem, perms, r, &mut buf);
            tuple_cost_unchecked(problem.cost(), &buf)
        })
        .sum()
}

/// Mean tuple cost of the current pairing by full recomputation. This is the
/// reference path and ignores the state's running sum.
pub fn mean_cost(problem: &Problem, state: &CouplingState) -> f64 {
    total_cost(problem, state.perms()) / problem.num_points() as f64
}

/// Change in the total cost if positions `a` and `b` of marginal `k` were
/// exchanged.
pub fn swap_delta(
    problem: &Problem,
    state: &CouplingState,
    k: usize,
    a: usize,
    b: usize,
) -> Result<f64> {
    let np = problem.num_points();
    if k >= problem.num_marginals() {
        return Err(Error::IndexOutOfRange {
            index: k,
            len: problem.num_marginals(),
        });
    }
    for idx in [a, b] {
        if idx >= np {
            return Err(Error::IndexOutOfRange { index: idx, len: np });
        }
    }
    if a == b {
        return Err(Error::SamePosition(a));
    }
    Ok(delta_unchecked(problem, state.perms(), k, a, b))
}

/// Swap delta without bounds checks beyond slice indexing.
///
/// For pairwise costs only the `K - 1` pair terms touching marginal `k`
/// change, so the work is `O(nK)` independent of `N_p`.
#[inline]
pub(crate) fn delta_unchecked(
    problem: &Problem,
    perms: &[Vec<usize>],
    k: usize,
    a: usize,
    b: usize,
) -> f64 {
    let marginals = problem.marginals();
    match problem.cost() {
        CostModel::PairwiseLp { p, weight } => {
            let mk = &marginals[k];
            let ka = mk.point(perms[k][a]);
            let kb = mk.point(perms[k][b]);
            let mut s = 0.0;
            for (l, (m, perm)) in marginals.iter().zip(perms).enumerate() {
                if l == k {
                    continue;
                }
                let la = m.point(perm[a]);
                let lb = m.point(perm[b]);
                s += lp_pow(la, kb, *p) + lp_pow(lb, ka, *p)
                    - lp_pow(la, ka, *p)
                    - lp_pow(lb, kb, *p);
            }
            weight * s
        }
        CostModel::GenericTuple(f) => {
            let mut ta = Vec::with_capacity(perms.len());
            let mut tb = Vec::with_capacity(perms.len());
            gather(problem, perms, a, &mut ta);
            gather(problem, perms, b, &mut tb);
            let before = f(&ta) + f(&tb);
            std::mem::swap(&mut ta[k], &mut tb[k]);
            f(&ta) + f(&tb) - before
        }
    }
}

/// Distance estimate `sum_{j>k} sum_i ||X_i^(j) - X_i^(k)||_p^p / N_p` of the
/// current pairing.
pub fn wasserstein_estimate(problem: &Problem, state: &CouplingState, p: f64) -> Result<f64> {
    if problem.common_dim().is_none() {
        return Err(Error::DimensionMismatch);
    }
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("p must be >= 1, got {p}")));
    }
    let k = problem.num_marginals();
    let mut s = 0.0;
    for j in 0..k {
        for l in j + 1..k {
            s += pair_estimate_unchecked(problem, state.perms(), j, l, p);
        }
    }
    Ok(s)
}

/// `sum_i ||X_i^(j) - X_i^(k)||_p^p / N_p` between two marginals under the
/// current joint pairing.
pub fn pair_estimate(
    problem: &Problem,
    state: &CouplingState,
    j: usize,
    k: usize,
    p: f64,
) -> Result<f64> {
    let km = problem.num_marginals();
    for idx in [j, k] {
        if idx >= km {
            return Err(Error::IndexOutOfRange { index: idx, len: km });
        }
    }
    if problem.marginal(j).dim() != problem.marginal(k).dim() {
        return Err(Error::DimensionMismatch);
    }
    Ok(pair_estimate_unchecked(problem, state.perms(), j, k, p))
}

fn pair_estimate_unchecked(problem: &Problem, perms: &[Vec<usize>], j: usize, k: usize, p: f64) -> f64 {
    let (mj, mk) = (problem.marginal(j), problem.marginal(k));
    let s: f64 = perms[j]
        .iter()
        .zip(&perms[k])
        .map(|(&a, &b)| lp_pow(mj.point(a), mk.point(b), p))
        .sum();
    s / problem.num_points() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{init_coupling, MarginalSamples, SolverConfig};

    fn one_d(xs: Vec<f64>, ys: Vec<f64>) -> Problem {
        Problem::new(
            vec![
                MarginalSamples::from_1d("x", xs).unwrap(),
                MarginalSamples::from_1d("y", ys).unwrap(),
            ],
            CostModel::squared_euclidean(),
        )
        .unwrap()
    }

    #[test]
    fn three_point_gangbo_swiech() {
        let pts: [&[f64]; 3] = [&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]];
        let c = tuple_cost(&CostModel::gangbo_swiech(), &pts).unwrap();
        assert_eq!(c, 2.0);
    }

    #[test]
    fn identical_points_cost_zero() {
        for p in [1.0, 1.5, 2.0, 3.0] {
            let cost = CostModel::pairwise_lp(p, 1.0).unwrap();
            assert_eq!(tuple_cost(&cost, &[&[0.7, -2.0], &[0.7, -2.0]]).unwrap(), 0.0);
        }
    }

    #[test]
    fn l1_two_points() {
        let cost = CostModel::pairwise_lp(1.0, 1.0).unwrap();
        assert_eq!(tuple_cost(&cost, &[&[0.0], &[2.0]]).unwrap(), 2.0);
    }

    #[test]
    fn general_exponent_matches_powf() {
        let cost = CostModel::pairwise_lp(3.0, 1.0).unwrap();
        let c = tuple_cost(&cost, &[&[0.0, 1.0], &[2.0, -1.0]]).unwrap();
        assert!((c - 16.0).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        let err = tuple_cost(&CostModel::squared_euclidean(), &[&[0.0], &[0.0, 1.0]]);
        assert!(matches!(err, Err(Error::DimensionMismatch)));
    }

    #[test]
    fn invalid_parameters() {
        assert!(CostModel::pairwise_lp(0.5, 1.0).is_err());
        assert!(CostModel::pairwise_lp(2.0, 0.0).is_err());
        assert!(CostModel::pairwise_lp(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn mean_cost_examples() {
        let p = one_d(vec![0.0, 1.0], vec![1.0, 0.0]);
        let s = init_coupling(&p, &SolverConfig::default());
        assert_eq!(mean_cost(&p, &s), 1.0);

        let p = one_d(vec![0.5, 2.0], vec![0.5, 2.0]);
        assert_eq!(mean_cost(&p, &init_coupling(&p, &SolverConfig::default())), 0.0);

        let p = one_d(vec![1.0], vec![4.0]);
        assert_eq!(mean_cost(&p, &init_coupling(&p, &SolverConfig::default())), 9.0);
    }

    #[test]
    fn swap_delta_example() {
        let p = one_d(vec![0.0, 1.0], vec![1.0, 0.0]);
        let s = init_coupling(&p, &SolverConfig::default());
        assert_eq!(swap_delta(&p, &s, 1, 0, 1).unwrap(), -2.0);
        // Swapping marginal 0 instead gives the same pairing change.
        assert_eq!(swap_delta(&p, &s, 0, 0, 1).unwrap(), -2.0);
    }

    #[test]
    fn swap_delta_errors() {
        let p = one_d(vec![0.0, 1.0], vec![1.0, 0.0]);
        let s = init_coupling(&p, &SolverConfig::default());
        assert!(matches!(swap_delta(&p, &s, 2, 0, 1), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(swap_delta(&p, &s, 0, 0, 2), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(swap_delta(&p, &s, 0, 1, 1), Err(Error::SamePosition(1))));
    }

    #[test]
    fn swap_then_swap_back_sums_to_zero() {
        let p = one_d(vec![0.3, 1.7, -2.0, 4.0], vec![1.0, 0.0, 2.5, -1.5]);
        let mut s = init_coupling(&p, &SolverConfig::default());
        let d1 = swap_delta(&p, &s, 1, 0, 3).unwrap();
        s.apply_swap(1, 0, 3, d1);
        let d2 = swap_delta(&p, &s, 1, 0, 3).unwrap();
        assert!((d1 + d2).abs() < 1e-12);
    }

    #[test]
    fn identical_tuples_zero_delta() {
        let p = one_d(vec![1.0, 1.0, 3.0], vec![2.0, 2.0, 0.0]);
        let s = init_coupling(&p, &SolverConfig::default());
        assert_eq!(swap_delta(&p, &s, 1, 0, 1).unwrap(), 0.0);
    }

    #[test]
    fn generic_delta_matches_pairwise() {
        let xs = vec![0.1, 0.9, 2.3, -0.4];
        let ys = vec![1.2, -0.7, 0.0, 3.3];
        let p = one_d(xs.clone(), ys.clone());
        let g = Problem::new(
            p.marginals().to_vec(),
            CostModel::generic(|t| (t[0][0] - t[1][0]).powi(2)),
        )
        .unwrap();
        let s = init_coupling(&p, &SolverConfig::default());
        let sg = init_coupling(&g, &SolverConfig::default());
        for (a, b) in [(0, 1), (1, 3), (2, 0)] {
            let d = swap_delta(&p, &s, 1, a, b).unwrap();
            let dg = swap_delta(&g, &sg, 1, a, b).unwrap();
            assert!((d - dg).abs() < 1e-12);
        }
    }

    #[test]
    fn estimator_examples() {
        let p = one_d(vec![0.0, 1.0], vec![1.0, 0.0]);
        let s = init_coupling(&p, &SolverConfig::default());
        assert_eq!(wasserstein_estimate(&p, &s, 2.0).unwrap(), 1.0);

        let m = MarginalSamples::new("m", 2, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let p3 = Problem::new(vec![m.clone(), m.clone(), m], CostModel::squared_euclidean())
            .unwrap();
        let s3 = init_coupling(&p3, &SolverConfig::default());
        assert_eq!(wasserstein_estimate(&p3, &s3, 2.0).unwrap(), 0.0);
        assert_eq!(pair_estimate(&p3, &s3, 0, 2, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn estimator_rejects_mixed_dims() {
        let a = MarginalSamples::new("a", 1, vec![0.0, 1.0]).unwrap();
        let b = MarginalSamples::new("b", 2, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let p = Problem::new(vec![a, b], CostModel::generic(|_| 0.0)).unwrap();
        let s = init_coupling(&p, &SolverConfig::default());
        assert!(matches!(
            wasserstein_estimate(&p, &s, 2.0),
            Err(Error::DimensionMismatch)
        ));
    }
}
