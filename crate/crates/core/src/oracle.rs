//! Exact and baseline references for validating the swap solvers.

use serde::Serialize;

use crate::cost::{self, lp_pow, CostModel};
use crate::error::{Error, Result};
use crate::problem::{MarginalSamples, Problem};

/// Largest `N_p` accepted by the cubic-time assignment oracle.
pub const MAX_ASSIGNMENT_POINTS: usize = 4096;
/// Largest number of joint permutations enumerated by brute force.
pub const MAX_BRUTE_FORCE_PERMUTATIONS: f64 = 1e7;
/// Largest `N_p` accepted by the dense Sinkhorn solver.
pub const MAX_SINKHORN_POINTS: usize = 16384;

/// Optimal two-marginal pairing: `perm[i]` is the index in the second
/// marginal matched to point `i` of the first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssignmentResult {
    pub perm: Vec<usize>,
    pub mean_cost: f64,
}

/// Globally optimal two-marginal assignment via the Hungarian algorithm.
pub fn exact_assignment_2m(
    x1: &MarginalSamples,
    x2: &MarginalSamples,
    cost: &CostModel,
) -> Result<AssignmentResult> {
    let n = x1.num_points();
    if x2.num_points() != n {
        return Err(Error::MismatchedCounts {
            id: x2.id().to_owned(),
            expected: n,
            found: x2.num_points(),
        });
    }
    if n > MAX_ASSIGNMENT_POINTS {
        return Err(Error::TooLarge {
            what: "exact assignment",
            detail: format!("N_p = {n} exceeds {MAX_ASSIGNMENT_POINTS}"),
        });
    }
    let matrix = pair_cost_matrix(x1, x2, cost)?;
    let perm = hungarian(&matrix, n);
    let total: f64 = perm
        .iter()
        .enumerate()
        .map(|(i, &j)| matrix[i * n + j])
        .sum();
    Ok(AssignmentResult {
        perm,
        mean_cost: total / n as f64,
    })
}

fn pair_cost_matrix(x1: &MarginalSamples, x2: &MarginalSamples, cost: &CostModel) -> Result<Vec<f64>> {
    if cost.is_pairwise() && x1.dim() != x2.dim() {
        return Err(Error::DimensionMismatch);
    }
    let mut m = Vec::with_capacity(x1.num_points() * x2.num_points());
    for a in x1.points() {
        for b in x2.points() {
            m.push(cost::tuple_cost(cost, &[a, b])?);
        }
    }
    Ok(m)
}

/// Shortest-augmenting-path Hungarian algorithm on a dense `n x n` matrix.
/// Each row is added by a Dijkstra search over the columns not yet reached;
/// potentials are updated once per augmentation. Returns the column assigned
/// to each row.
fn hungarian(cost: &[f64], n: usize) -> Vec<usize> {
    const NONE: usize = usize::MAX;
    let mut u = vec![0.0f64; n];
    let mut v = vec![0.0f64; n];
    let mut col_of = vec![NONE; n];
    let mut row_of = vec![NONE; n];
    let mut path = vec![NONE; n];
    let mut dist = vec![f64::INFINITY; n];
    let mut row_seen = vec![false; n];
    let mut col_seen = vec![false; n];
    let mut remaining: Vec<usize> = Vec::with_capacity(n);

    for start in 0..n {
        dist.fill(f64::INFINITY);
        row_seen.fill(false);
        col_seen.fill(false);
        remaining.clear();
        remaining.extend((0..n).rev());
        let mut min_val = 0.0;
        let mut i = start;
        let sink = loop {
            row_seen[i] = true;
            let row = &cost[i * n..(i + 1) * n];
            let base = min_val - u[i];
            let mut lowest = f64::INFINITY;
            let mut index = 0;
            for (it, &j) in remaining.iter().enumerate() {
                let r = base + row[j] - v[j];
                if r < dist[j] {
                    dist[j] = r;
                    path[j] = i;
                }
                if dist[j] < lowest || (dist[j] == lowest && row_of[j] == NONE) {
                    lowest = dist[j];
                    index = it;
                }
            }
            min_val = lowest;
            let j = remaining.swap_remove(index);
            col_seen[j] = true;
            if row_of[j] == NONE {
                break j;
            }
            i = row_of[j];
        };

        u[start] += min_val;
        for r in (0..n).filter(|&r| row_seen[r] && r != start) {
            u[r] += min_val - dist[col_of[r]];
        }
        for c in (0..n).filter(|&c| col_seen[c]) {
            v[c] -= min_val - dist[c];
        }

        let mut j = sink;
        loop {
            let r = path[j];
            row_of[j] = r;
            let prev = std::mem::replace(&mut col_of[r], j);
            if r == start {
                break;
            }
            j = prev;
        }
    }
    col_of
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BruteForceResult {
    /// One permutation per marginal; the first is always the identity.
    pub perms: Vec<Vec<usize>>,
    pub mean_cost: f64,
}

/// Exhaustive search over independent permutations of marginals `2..K`.
///
/// Permutations are visited in lexicographic order (earlier marginals most
/// significant) and the first minimum wins.
pub fn brute_force_mmot(problem: &Problem) -> Result<BruteForceResult> {
    let np = problem.num_points();
    let k = problem.num_marginals();
    let count = (1..=np).map(|i| i as f64).product::<f64>().powi(k as i32 - 1);
    if count > MAX_BRUTE_FORCE_PERMUTATIONS {
        return Err(Error::TooLarge {
            what: "brute-force enumeration",
            detail: format!("(N_p!)^(K-1) = {count:e} exceeds {MAX_BRUTE_FORCE_PERMUTATIONS:e}"),
        });
    }
    let identity: Vec<usize> = (0..np).collect();
    let mut perms = vec![identity.clone(); k];
    let mut best = cost::total_cost(problem, &perms);
    let mut best_perms = perms.clone();
    'outer: loop {
        let mut m = k - 1;
        while !next_permutation(&mut perms[m]) {
            perms[m].copy_from_slice(&identity);
            if m == 1 {
                break 'outer;
            }
            m -= 1;
        }
        let c = cost::total_cost(problem, &perms);
        if c < best {
            best = c;
            best_perms.clone_from(&perms);
        }
    }
    Ok(BruteForceResult {
        perms: best_perms,
        mean_cost: best / np as f64,
    })
}

/// Advances to the next lexicographic permutation; returns `false` when
/// `p` was the last one.
fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let Some(i) = (0..p.len() - 1).rev().find(|&i| p[i] < p[i + 1]) else {
        return false;
    };
    let j = (i + 1..p.len()).rev().find(|&j| p[j] > p[i]).unwrap();
    p.swap(i, j);
    p[i + 1..].reverse();
    true
}

/// Mean `|a - b|^p` after pairing sorted `x1` with sorted `x2`, the optimal
/// one-dimensional coupling for any `p >= 1`.
pub fn sorted_1d_oracle(x1: &[f64], x2: &[f64], p: f64) -> Result<f64> {
    if x1.len() != x2.len() || x1.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "sample sets must be nonempty and equal length ({} vs {})",
            x1.len(),
            x2.len()
        )));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("p must be >= 1, got {p}")));
    }
    let mut a = x1.to_vec();
    let mut b = x2.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let s: f64 = a
        .iter()
        .zip(&b)
        .map(|(x, y)| lp_pow(&[*x], &[*y], p))
        .sum();
    Ok(s / a.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinkhornParams {
    /// Entropic regularization strength.
    pub lambda: f64,
    pub max_iter: usize,
    /// Stop when the largest row-sum violation falls to this value.
    pub threshold: f64,
}

impl Default for SinkhornParams {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            max_iter: 100_000,
            threshold: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SinkhornResult {
    /// Row-major `N_p x N_p` coupling with marginals `1/N_p`.
    pub coupling: Vec<f64>,
    pub n: usize,
    /// Transport cost `<coupling, C>` without the entropy term.
    pub reg_cost: f64,
    pub iterations: usize,
    pub converged: bool,
    pub log_domain: bool,
}

impl SinkhornResult {
    pub fn row_sums(&self) -> Vec<f64> {
        self.coupling.chunks_exact(self.n).map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.n];
        for row in self.coupling.chunks_exact(self.n) {
            for (acc, x) in s.iter_mut().zip(row) {
                *acc += x;
            }
        }
        s
    }

    /// Largest deviation of any row or column sum from `1/N_p`.
    pub fn marginal_violation(&self) -> f64 {
        let target = 1.0 / self.n as f64;
        self.row_sums()
            .into_iter()
            .chain(self.col_sums())
            .map(|s| (s - target).abs())
            .fold(0.0, f64::max)
    }
}

/// Entropy-regularized two-marginal OT with uniform weights.
///
/// Switches to log-domain updates when `lambda < 0.05 * median(C)`.
pub fn sinkhorn_2m(
    x1: &MarginalSamples,
    x2: &MarginalSamples,
    cost: &CostModel,
    params: &SinkhornParams,
) -> Result<SinkhornResult> {
    let n = x1.num_points();
    if x2.num_points() != n {
        return Err(Error::MismatchedCounts {
            id: x2.id().to_owned(),
            expected: n,
            found: x2.num_points(),
        });
    }
    if n > MAX_SINKHORN_POINTS {
        return Err(Error::TooLarge {
            what: "Sinkhorn",
            detail: format!("N_p = {n} exceeds {MAX_SINKHORN_POINTS}"),
        });
    }
    if !(params.lambda > 0.0 && params.lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "lambda must be > 0, got {}",
            params.lambda
        )));
    }
    let c = pair_cost_matrix(x1, x2, cost)?;
    let mut sorted = c.clone();
    let mid = sorted.len() / 2;
    let median = *sorted.select_nth_unstable_by(mid, f64::total_cmp).1;
    if params.lambda < 0.05 * median {
        Ok(sinkhorn_log(&c, n, params))
    } else {
        sinkhorn_plain(&c, n, params)
    }
}

fn sinkhorn_plain(c: &[f64], n: usize, params: &SinkhornParams) -> Result<SinkhornResult> {
    let lambda = params.lambda;
    let target = 1.0 / n as f64;
    let kernel: Vec<f64> = c.iter().map(|x| (-x / lambda).exp()).collect();
    let underflow = || Error::NumericalUnderflow { lambda };
    let mut u = vec![1.0; n];
    let mut v = vec![1.0; n];
    let mut kv = vec![0.0; n];
    let mut ktu = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < params.max_iter {
        iterations += 1;
        for (i, row) in kernel.chunks_exact(n).enumerate() {
            kv[i] = row.iter().zip(&v).map(|(k, v)| k * v).sum();
        }
        for (ui, &s) in u.iter_mut().zip(&kv) {
            if !(s > 0.0) {
                return Err(underflow());
            }
            *ui = target / s;
        }
        ktu.fill(0.0);
        for (row, &ui) in kernel.chunks_exact(n).zip(&u) {
            for (acc, k) in ktu.iter_mut().zip(row) {
                *acc += k * ui;
            }
        }
        for (vj, &s) in v.iter_mut().zip(&ktu) {
            if !(s > 0.0) {
                return Err(underflow());
            }
            *vj = target / s;
        }
        // Columns are exact after the v update; rows carry the residual.
        let violation = kernel
            .chunks_exact(n)
            .zip(&u)
            .map(|(row, ui)| {
                let s: f64 = row.iter().zip(&v).map(|(k, v)| k * v).sum();
                (ui * s - target).abs()
            })
            .fold(0.0, f64::max);
        if !violation.is_finite() {
            return Err(underflow());
        }
        if violation <= params.threshold {
            converged = true;
            break;
        }
    }
    let mut coupling = Vec::with_capacity(n * n);
    for (row, ui) in kernel.chunks_exact(n).zip(&u) {
        coupling.extend(row.iter().zip(&v).map(|(k, vj)| ui * k * vj));
    }
    let reg_cost = coupling.iter().zip(c).map(|(p, c)| p * c).sum();
    Ok(SinkhornResult {
        coupling,
        n,
        reg_cost,
        iterations,
        converged,
        log_domain: false,
    })
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Scalings beyond this magnitude are absorbed into the log potentials.
const ABSORB_LIMIT: f64 = 1e50;

/// Log-stabilized Sinkhorn. Potentials `f, g` carry the bulk of the scaling
/// and the iteration runs on the kernel `exp((f_i + g_j - C_ij) / lambda)`
/// with bounded scalings `u, v`, so `exp` is only evaluated on absorption.
fn sinkhorn_log(c: &[f64], n: usize, params: &SinkhornParams) -> SinkhornResult {
    let lambda = params.lambda;
    let target = 1.0 / n as f64;
    let log_target = target.ln();
    let mut f = vec![0.0; n];
    let mut g = vec![0.0; n];
    let mut u = vec![1.0; n];
    let mut v = vec![1.0; n];
    let mut kernel = vec![0.0; n * n];
    let mut kv = vec![0.0; n];
    let mut ktu = vec![0.0; n];

    // Folds u, v into f, g, applies one exact log-domain update and rebuilds
    // the stabilized kernel.
    let absorb = |f: &mut [f64], g: &mut [f64], u: &mut [f64], v: &mut [f64], kernel: &mut [f64]| {
        for (fi, ui) in f.iter_mut().zip(u.iter_mut()) {
            *fi += lambda * ui.ln();
            *ui = 1.0;
        }
        for (gj, vj) in g.iter_mut().zip(v.iter_mut()) {
            *gj += lambda * vj.ln();
            *vj = 1.0;
        }
        for i in 0..n {
            let row = &c[i * n..(i + 1) * n];
            let lse = log_sum_exp(row.iter().zip(g.iter()).map(|(cij, gj)| (gj - cij) / lambda));
            f[i] = lambda * (log_target - lse);
        }
        for j in 0..n {
            let lse = log_sum_exp((0..n).map(|i| (f[i] - c[i * n + j]) / lambda));
            g[j] = lambda * (log_target - lse);
        }
        for i in 0..n {
            for j in 0..n {
                kernel[i * n + j] = ((f[i] + g[j] - c[i * n + j]) / lambda).exp();
            }
        }
    };

    absorb(&mut f, &mut g, &mut u, &mut v, &mut kernel);
    let mut iterations = 1;
    let mut converged = false;
    loop {
        for (i, row) in kernel.chunks_exact(n).enumerate() {
            kv[i] = row.iter().zip(&v).map(|(k, v)| k * v).sum();
        }
        let violation = kv
            .iter()
            .zip(&u)
            .map(|(s, ui)| (ui * s - target).abs())
            .fold(0.0, f64::max);
        if violation <= params.threshold {
            converged = true;
            break;
        }
        if iterations >= params.max_iter {
            break;
        }
        iterations += 1;
        for (ui, &s) in u.iter_mut().zip(&kv) {
            *ui = target / s;
        }
        ktu.fill(0.0);
        for (row, &ui) in kernel.chunks_exact(n).zip(&u) {
            for (acc, k) in ktu.iter_mut().zip(row) {
                *acc += k * ui;
            }
        }
        for (vj, &s) in v.iter_mut().zip(&ktu) {
            *vj = target / s;
        }
        let unstable = u.iter().chain(&v).any(|&x| {
            !(x.is_finite() && (1.0 / ABSORB_LIMIT..=ABSORB_LIMIT).contains(&x))
        });
        if unstable {
            absorb(&mut f, &mut g, &mut u, &mut v, &mut kernel);
        }
    }
    let mut coupling = Vec::with_capacity(n * n);
    for (row, ui) in kernel.chunks_exact(n).zip(&u) {
        coupling.extend(row.iter().zip(&v).map(|(k, vj)| ui * k * vj));
    }
    let reg_cost = coupling.iter().zip(c).map(|(p, c)| p * c).sum();
    SinkhornResult {
        coupling,
        n,
        reg_cost,
        iterations,
        converged,
        log_domain: true,
    }
}
