//! Discrete Kantorovich problem: primal transportation LP, dual potentials,
//! c-transform tightening, optimality certificates and a brute-force oracle.
//!
//! The solver maximizes the total transported log-kernel cost
//! `sum pi_ij c_ij` subject to the grid marginals; the dual potentials
//! `(r, zeta)` minimize `F(r, zeta) = sum r_i w_i + sum zeta_j v_j` subject
//! to `r_i + zeta_j >= c_ij`. Strong duality at the solution is certified
//! from scratch rather than trusted.

mod simplex;

use crate::grid::CostMatrix;
use crate::{par, Error, Result};

/// Dual variables: `r_i = log rho_hat(m_i)`, `zeta_j = log z_tilde(x_j)`.
///
/// The additive gauge freedom `(r + a, zeta - a)` is pinned by fixing
/// `r[gauge_node]` to a chosen value.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPotentials {
    pub r: Vec<f64>,
    pub zeta: Vec<f64>,
    pub gauge_node: usize,
}

impl DualPotentials {
    /// Largest violation of `r_i + zeta_j >= c_ij` (0 when feasible).
    pub fn feasibility_violation(&self, cost: &CostMatrix) -> f64 {
        let per_row = par::map_indexed(self.r.len(), |i| {
            let row = cost.row(i);
            let mut worst = f64::NEG_INFINITY;
            for (j, &c) in row.iter().enumerate() {
                worst = worst.max(c - self.r[i] - self.zeta[j]);
            }
            worst
        });
        per_row.into_iter().fold(0.0, f64::max)
    }

    /// Applies the gauge shift `(r + a, zeta - a)` so `r[gauge_node] = gauge`.
    pub fn regauge(&mut self, gauge: f64) {
        let a = gauge - self.r[self.gauge_node];
        for r in &mut self.r {
            *r += a;
        }
        for z in &mut self.zeta {
            *z -= a;
        }
        // pin exactly, immune to rounding in the shift
        self.r[self.gauge_node] = gauge;
    }
}

/// Sparse transport plan: `(source index, target index, mass)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub entries: Vec<(usize, usize, f64)>,
}

impl TransportPlan {
    pub fn row_sums(&self, m: usize) -> Vec<f64> {
        let mut s = vec![0.0; m];
        for &(i, _, mass) in &self.entries {
            s[i] += mass;
        }
        s
    }

    pub fn col_sums(&self, n: usize) -> Vec<f64> {
        let mut s = vec![0.0; n];
        for &(_, j, mass) in &self.entries {
            s[j] += mass;
        }
        s
    }

    pub fn support_size(&self) -> usize {
        self.entries.len()
    }
}

/// Recomputed-from-scratch optimality evidence.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct OptimalityCertificate {
    /// `F(r, zeta) - sum pi c`; nonnegative by weak duality, ~0 at optimum.
    pub duality_gap: f64,
    /// Worst violation across dual constraints, plan marginals and mass signs.
    pub max_feasibility_violation: f64,
    /// Max over the plan support of `|r_i + zeta_j - c_ij|`.
    pub complementary_slackness_violation: f64,
    pub transport_cost: f64,
}

impl OptimalityCertificate {
    pub fn satisfied(&self, tol: f64) -> bool {
        self.duality_gap.abs() <= tol * (1.0 + self.transport_cost.abs())
            && self.max_feasibility_violation <= tol
            && self.complementary_slackness_violation <= tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportSolution {
    pub plan: TransportPlan,
    pub potentials: DualPotentials,
    pub certificate: OptimalityCertificate,
    pub pivots: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub tol: f64,
    /// Value pinned at `r[gauge_node]`.
    pub gauge: f64,
    pub gauge_node: usize,
    /// Pivot cap; `None` means `max(10_000, 200 * (m + n))`.
    pub max_pivots: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            gauge: 0.0,
            gauge_node: 0,
            max_pivots: None,
        }
    }
}

/// Solves the balanced discrete transport problem exactly.
///
/// Zero-weight nodes are dropped before the pivoting and reinstated
/// afterwards with c-transform potential values, so the polytope passed to
/// the simplex stays nondegenerate and the returned potentials remain
/// feasible on every node.
pub fn solve_kantorovich(
    src_w: &[f64],
    tgt_w: &[f64],
    cost: &CostMatrix,
    opts: &SolverOptions,
) -> Result<TransportSolution> {
    let m = src_w.len();
    let n = tgt_w.len();
    if m != cost.n_source || n != cost.n_target {
        return Err(Error::Shape("weights do not match cost matrix".into()));
    }
    if opts.gauge_node >= m {
        return Err(Error::Shape("gauge node out of range".into()));
    }
    let ms: f64 = src_w.iter().sum();
    let mt: f64 = tgt_w.iter().sum();
    if !(ms > 0.0) || !(mt > 0.0) {
        return Err(Error::ZeroMass);
    }
    if (ms - mt).abs() > 1e-12 * ms.max(mt) {
        return Err(Error::Unbalanced { src: ms, tgt: mt });
    }

    let keep_src: Vec<usize> = (0..m).filter(|&i| src_w[i] > 0.0).collect();
    let keep_tgt: Vec<usize> = (0..n).filter(|&j| tgt_w[j] > 0.0).collect();
    let (rm, rn) = (keep_src.len(), keep_tgt.len());
    let red_cost: Vec<f64> = keep_src
        .iter()
        .flat_map(|&i| keep_tgt.iter().map(move |&j| cost.at(i, j)))
        .collect();
    let red_w: Vec<f64> = keep_src.iter().map(|&i| src_w[i]).collect();
    let red_v: Vec<f64> = keep_tgt.iter().map(|&j| tgt_w[j]).collect();

    let max_pivots = opts.max_pivots.unwrap_or(10_000.max(200 * (rm + rn)));
    let out = simplex::solve_transportation(rm, rn, &red_cost, &red_w, &red_v, max_pivots);

    // reinstate dropped nodes: zeta from kept r, then r from full zeta
    let mut r = vec![f64::NEG_INFINITY; m];
    let mut zeta = vec![f64::NEG_INFINITY; n];
    for (k, &i) in keep_src.iter().enumerate() {
        r[i] = out.r[k];
    }
    for (k, &j) in keep_tgt.iter().enumerate() {
        zeta[j] = out.zeta[k];
    }
    for j in 0..n {
        if zeta[j] == f64::NEG_INFINITY {
            zeta[j] = keep_src
                .iter()
                .map(|&i| cost.at(i, j) - r[i])
                .fold(f64::NEG_INFINITY, f64::max);
        }
    }
    for i in 0..m {
        if r[i] == f64::NEG_INFINITY {
            r[i] = (0..n)
                .map(|j| cost.at(i, j) - zeta[j])
                .fold(f64::NEG_INFINITY, f64::max);
        }
    }

    let mut entries = Vec::new();
    for (ki, &i) in keep_src.iter().enumerate() {
        for (kj, &j) in keep_tgt.iter().enumerate() {
            let mass = out.flow[ki * rn + kj];
            if mass > 0.0 {
                entries.push((i, j, mass));
            }
        }
    }
    let plan = TransportPlan { entries };

    let mut potentials = DualPotentials {
        r,
        zeta,
        gauge_node: opts.gauge_node,
    };
    potentials.regauge(opts.gauge);

    let certificate = check_certificate(&plan, &potentials, cost, src_w, tgt_w);
    let solution = TransportSolution {
        plan,
        potentials,
        certificate,
        pivots: out.pivots,
    };
    if !out.converged && !certificate.satisfied(opts.tol) {
        return Err(Error::Stalled {
            pivots: out.pivots,
            solution: Box::new(solution),
        });
    }
    Ok(solution)
}

/// `F(r, zeta) = sum r_i w_i + sum zeta_j v_j`.
pub fn objective_f(pot: &DualPotentials, src_w: &[f64], tgt_w: &[f64]) -> f64 {
    let a: f64 = pot.r.iter().zip(src_w).map(|(r, w)| r * w).sum();
    let b: f64 = pot.zeta.iter().zip(tgt_w).map(|(z, v)| z * v).sum();
    a + b
}

/// `C(pi) = sum pi_ij c_ij`.
pub fn transport_cost(plan: &TransportPlan, cost: &CostMatrix) -> f64 {
    plan.entries
        .iter()
        .map(|&(i, j, mass)| mass * cost.at(i, j))
        .sum()
}

/// `r*_i = max_j (c_ij - zeta_j)`; ties break to the lowest index.
pub fn c_transform_source(zeta: &[f64], cost: &CostMatrix) -> (Vec<f64>, Vec<usize>) {
    let mut r = Vec::with_capacity(cost.n_source);
    let mut arg = Vec::with_capacity(cost.n_source);
    for i in 0..cost.n_source {
        let row = cost.row(i);
        let mut best = f64::NEG_INFINITY;
        let mut best_j = 0;
        for (j, &c) in row.iter().enumerate() {
            let v = c - zeta[j];
            if v > best {
                best = v;
                best_j = j;
            }
        }
        r.push(best);
        arg.push(best_j);
    }
    (r, arg)
}

/// `zeta*_j = max_i (c_ij - r_i)`; ties break to the lowest index.
pub fn c_transform_target(r: &[f64], cost: &CostMatrix) -> (Vec<f64>, Vec<usize>) {
    let mut zeta = vec![f64::NEG_INFINITY; cost.n_target];
    let mut arg = vec![0usize; cost.n_target];
    for i in 0..cost.n_source {
        let row = cost.row(i);
        for (j, &c) in row.iter().enumerate() {
            let v = c - r[i];
            if v > zeta[j] {
                zeta[j] = v;
                arg[j] = i;
            }
        }
    }
    (zeta, arg)
}

/// One `zeta -> zeta*` then `r -> r*` pass, then a re-gauge back to the old
/// `r[gauge_node]` value. The result is a joint fixed point of both
/// c-transforms: every sup in the reflector-pair definition is attained.
/// `F` never increases (envelopes only shrink feasible potentials).
pub fn tighten_potentials(pot: &DualPotentials, cost: &CostMatrix) -> DualPotentials {
    let anchor = pot.r[pot.gauge_node];
    let (zeta, _) = c_transform_target(&pot.r, cost);
    let (r, _) = c_transform_source(&zeta, cost);
    let mut out = DualPotentials {
        r,
        zeta,
        gauge_node: pot.gauge_node,
    };
    out.regauge(anchor);
    out
}

/// Exhaustive permutation optimum for small uniform-weight instances; the
/// optimum of a balanced transportation LP with equal weights sits on a
/// permutation matrix.
pub fn brute_force_oracle(src_w: &[f64], tgt_w: &[f64], cost: &CostMatrix) -> Result<f64> {
    let n = src_w.len();
    if tgt_w.len() != n || cost.n_source != n || cost.n_target != n {
        return Err(Error::Shape("oracle requires a square instance".into()));
    }
    if n > 7 {
        return Err(Error::TooLarge(n));
    }
    if n == 0 {
        return Err(Error::ZeroMass);
    }
    let w = src_w[0];
    let all_equal = src_w
        .iter()
        .chain(tgt_w.iter())
        .all(|&x| (x - w).abs() <= 1e-12 * w.abs().max(1.0));
    if !all_equal {
        return Err(Error::UnequalWeights);
    }

    // Heap's algorithm over target assignments
    let mut perm: Vec<usize> = (0..n).collect();
    let mut counters = vec![0usize; n];
    let score = |p: &[usize]| -> f64 { p.iter().enumerate().map(|(i, &j)| cost.at(i, j)).sum() };
    let mut best = score(&perm);
    let mut i = 0;
    while i < n {
        if counters[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(counters[i], i);
            }
            best = best.max(score(&perm));
            counters[i] += 1;
            i = 0;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }
    Ok(best * w)
}

/// Recomputes all certificate quantities from scratch.
pub fn check_certificate(
    plan: &TransportPlan,
    pot: &DualPotentials,
    cost: &CostMatrix,
    src_w: &[f64],
    tgt_w: &[f64],
) -> OptimalityCertificate {
    let c = transport_cost(plan, cost);
    let f = objective_f(pot, src_w, tgt_w);

    let mut feas = pot.feasibility_violation(cost);
    let rows = plan.row_sums(src_w.len());
    let cols = plan.col_sums(tgt_w.len());
    for (s, w) in rows.iter().zip(src_w) {
        feas = feas.max((s - w).abs());
    }
    for (s, v) in cols.iter().zip(tgt_w) {
        feas = feas.max((s - v).abs());
    }
    for &(_, _, mass) in &plan.entries {
        feas = feas.max(-mass);
    }

    let slack = plan
        .entries
        .iter()
        .filter(|&&(_, _, mass)| mass > 0.0)
        .map(|&(i, j, _)| (pot.r[i] + pot.zeta[j] - cost.at(i, j)).abs())
        .fold(0.0, f64::max);

    OptimalityCertificate {
        duality_gap: f - c,
        max_feasibility_violation: feas.max(0.0),
        complementary_slackness_violation: slack,
        transport_cost: c,
    }
}
