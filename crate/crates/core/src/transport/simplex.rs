//! Network simplex for the dense balanced transportation problem.
//!
//! Classic spanning-tree simplex in the LEMON tradition: an artificial root
//! node ties the bipartite graph together, the basis is kept as a threaded
//! spanning tree (parent / pred-arc / thread / reverse-thread / subtree
//! bookkeeping), entering arcs come from a deterministic block search, and
//! the leaving arc follows the strong-feasibility rule (strict improvement
//! on the first path, ties resolved toward the second path) which prevents
//! cycling on degenerate instances.
//!
//! Arcs are uncapacitated: real arc `a = i*n + j` carries mass from source
//! `i` to target `m + j` at cost `-c[a]` (the caller maximizes `c`), and one
//! artificial arc per node connects it to the root.
//!
//! The run is completely deterministic: no randomization anywhere, and the
//! block scan always starts at arc 0.

const DIR_UP: f64 = 1.0; // pred arc points from the node to its parent
const DIR_DOWN: f64 = -1.0;

const STATE_TREE: f64 = 0.0;
const STATE_LOWER: f64 = 1.0;

/// Relative pricing tolerance: an arc enters only if its reduced cost is
/// below `-REL_EPS * scale`, where scale majorizes the terms in the
/// reduced-cost sum.
const REL_EPS: f64 = 1e-13;

pub(crate) struct SimplexOutcome {
    /// Flow on real arc `i*n + j`, recomputed exactly from the final tree.
    pub flow: Vec<f64>,
    /// Source duals `r_i` (no gauge applied).
    pub r: Vec<f64>,
    /// Target duals `zeta_j`.
    pub zeta: Vec<f64>,
    pub pivots: usize,
    /// False iff the pivot cap was reached before optimality.
    pub converged: bool,
}

struct Tree {
    m: usize,
    n: usize,
    root: usize,
    // per arc
    source: Vec<usize>,
    target: Vec<usize>,
    cost: Vec<f64>,
    flow: Vec<f64>,
    state: Vec<f64>,
    // per node
    supply: Vec<f64>,
    pi: Vec<f64>,
    parent: Vec<usize>, // usize::MAX at the root
    pred: Vec<usize>,
    pred_dir: Vec<f64>,
    thread: Vec<usize>,
    rev_thread: Vec<usize>,
    succ_num: Vec<usize>,
    last_succ: Vec<usize>,
    // pivot state
    block_size: usize,
    next_arc: usize,
    in_arc: usize,
    join: usize,
    delta: f64,
    u_in: usize,
    v_in: usize,
    u_out: usize,
    v_out: usize,
    dirty_revs: Vec<usize>,
}

const NONE: usize = usize::MAX;

impl Tree {
    fn new(m: usize, n: usize, c: &[f64], supply_src: &[f64], demand_tgt: &[f64]) -> Self {
        let node_num = m + n;
        let arc_num = m * n;
        let all_arc = arc_num + node_num;
        let root = node_num;

        let mut source = vec![0usize; all_arc];
        let mut target = vec![0usize; all_arc];
        let mut cost = vec![0.0; all_arc];
        for i in 0..m {
            for j in 0..n {
                let a = i * n + j;
                source[a] = i;
                target[a] = m + j;
                cost[a] = -c[a];
            }
        }

        let mut supply = vec![0.0; node_num + 1];
        supply[..m].copy_from_slice(supply_src);
        for j in 0..n {
            supply[m + j] = -demand_tgt[j];
        }

        let max_cost = cost[..arc_num].iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let art_cost = (max_cost + 1.0) * (node_num + 1) as f64;

        let mut t = Tree {
            m,
            n,
            root,
            source,
            target,
            cost,
            flow: vec![0.0; all_arc],
            state: vec![STATE_LOWER; all_arc],
            supply,
            pi: vec![0.0; node_num + 1],
            parent: vec![NONE; node_num + 1],
            pred: vec![NONE; node_num + 1],
            pred_dir: vec![DIR_UP; node_num + 1],
            thread: vec![0; node_num + 1],
            rev_thread: vec![0; node_num + 1],
            succ_num: vec![1; node_num + 1],
            last_succ: vec![0; node_num + 1],
            block_size: ((arc_num as f64).sqrt() as usize).max(10),
            next_arc: 0,
            in_arc: 0,
            join: 0,
            delta: 0.0,
            u_in: 0,
            v_in: 0,
            u_out: 0,
            v_out: 0,
            dirty_revs: Vec::new(),
        };

        // Star-shaped initial basis around the root: every node hangs off it
        // by its artificial arc, oriented by the sign of the supply.
        t.parent[root] = NONE;
        t.pred[root] = NONE;
        t.thread[root] = 0;
        t.rev_thread[0] = root;
        t.succ_num[root] = node_num + 1;
        t.last_succ[root] = node_num - 1;
        t.pi[root] = 0.0;
        for u in 0..node_num {
            let e = arc_num + u;
            t.parent[u] = root;
            t.pred[u] = e;
            t.thread[u] = u + 1;
            t.rev_thread[u + 1] = u;
            t.succ_num[u] = 1;
            t.last_succ[u] = u;
            t.state[e] = STATE_TREE;
            if t.supply[u] >= 0.0 {
                t.pred_dir[u] = DIR_UP;
                t.pi[u] = 0.0;
                t.source[e] = u;
                t.target[e] = root;
                t.flow[e] = t.supply[u];
                t.cost[e] = 0.0;
            } else {
                t.pred_dir[u] = DIR_DOWN;
                t.pi[u] = art_cost;
                t.source[e] = root;
                t.target[e] = u;
                t.flow[e] = -t.supply[u];
                t.cost[e] = art_cost;
            }
        }
        t
    }

    /// Block-search pricing over the real arcs. Deterministic: scans
    /// cyclically from `next_arc`, keeps the most negative reduced cost in
    /// the block, accepts it if it clears the relative tolerance.
    fn find_entering_arc(&mut self) -> bool {
        let search_num = self.m * self.n;
        let mut min_cost = 0.0f64;
        let mut min_arc = NONE;
        let mut count = self.block_size;
        let mut seen = 0usize;
        let mut e = self.next_arc;
        loop {
            if self.state[e] == STATE_LOWER {
                let rc = self.cost[e] + self.pi[self.source[e]] - self.pi[self.target[e]];
                if rc < min_cost {
                    min_cost = rc;
                    min_arc = e;
                }
            }
            seen += 1;
            count -= 1;
            if count == 0 {
                if min_arc != NONE && self.accept(min_arc, min_cost) {
                    self.in_arc = min_arc;
                    self.next_arc = (e + 1) % search_num;
                    return true;
                }
                if seen >= search_num {
                    return false;
                }
                count = self.block_size;
            } else if seen >= search_num {
                // partial final block
                if min_arc != NONE && self.accept(min_arc, min_cost) {
                    self.in_arc = min_arc;
                    self.next_arc = (e + 1) % search_num;
                    return true;
                }
                return false;
            }
            e = (e + 1) % search_num;
        }
    }

    fn accept(&self, arc: usize, rc: f64) -> bool {
        let scale = self.pi[self.source[arc]]
            .abs()
            .max(self.pi[self.target[arc]].abs())
            .max(self.cost[arc].abs())
            .max(1.0);
        rc < -REL_EPS * scale
    }

    /// Deepest common ancestor of the entering arc's endpoints.
    fn find_join(&mut self) {
        let mut u = self.source[self.in_arc];
        let mut v = self.target[self.in_arc];
        while u != v {
            if self.succ_num[u] < self.succ_num[v] {
                u = self.parent[u];
            } else {
                v = self.parent[v];
            }
        }
        self.join = u;
    }

    /// Strong-feasibility leaving rule: smallest decreasable flow on the
    /// cycle, strict `<` on the first path, `<=` on the second.
    fn find_leaving_arc(&mut self) -> bool {
        let first = self.source[self.in_arc];
        let second = self.target[self.in_arc];
        self.delta = f64::INFINITY;
        let mut result = 0u8;

        let mut u = first;
        while u != self.join {
            if self.pred_dir[u] == DIR_UP {
                let d = self.flow[self.pred[u]];
                if d < self.delta {
                    self.delta = d;
                    self.u_out = u;
                    result = 1;
                }
            }
            u = self.parent[u];
        }
        let mut u = second;
        while u != self.join {
            if self.pred_dir[u] == DIR_DOWN {
                let d = self.flow[self.pred[u]];
                if d <= self.delta {
                    self.delta = d;
                    self.u_out = u;
                    result = 2;
                }
            }
            u = self.parent[u];
        }
        if result == 1 {
            self.u_in = first;
            self.v_in = second;
        } else {
            self.u_in = second;
            self.v_in = first;
        }
        result != 0
    }

    fn change_flow(&mut self) {
        if self.delta > 0.0 {
            self.flow[self.in_arc] += self.delta;
            let mut u = self.source[self.in_arc];
            while u != self.join {
                self.flow[self.pred[u]] -= self.pred_dir[u] * self.delta;
                u = self.parent[u];
            }
            let mut u = self.target[self.in_arc];
            while u != self.join {
                self.flow[self.pred[u]] += self.pred_dir[u] * self.delta;
                u = self.parent[u];
            }
        }
        self.state[self.in_arc] = STATE_TREE;
        let out_arc = self.pred[self.u_out];
        self.flow[out_arc] = 0.0; // leaving arc hits its lower bound exactly
        self.state[out_arc] = STATE_LOWER;
    }

    /// Re-hangs the subtree of `u_in` under `v_in`, reversing the path
    /// `u_in .. u_out`, and patches the threaded-preorder bookkeeping.
    fn update_tree_structure(&mut self) {
        let old_rev_thread = self.rev_thread[self.u_out];
        let old_succ_num = self.succ_num[self.u_out];
        let old_last_succ = self.last_succ[self.u_out];
        self.v_out = self.parent[self.u_out];

        if self.u_in == self.u_out {
            self.parent[self.u_in] = self.v_in;
            self.pred[self.u_in] = self.in_arc;
            self.pred_dir[self.u_in] = if self.u_in == self.source[self.in_arc] {
                DIR_UP
            } else {
                DIR_DOWN
            };
            if self.thread[self.v_in] != self.u_out {
                let mut after = self.thread[old_last_succ];
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
                after = self.thread[self.v_in];
                self.thread[self.v_in] = self.u_out;
                self.rev_thread[self.u_out] = self.v_in;
                self.thread[old_last_succ] = after;
                self.rev_thread[after] = old_last_succ;
            }
        } else {
            let thread_continue = if old_rev_thread == self.v_in {
                self.thread[old_last_succ]
            } else {
                self.thread[self.v_in]
            };

            let mut stem = self.u_in;
            let mut stem_parent = self.v_in;
            let mut last = self.last_succ[self.u_in];
            let mut after = self.thread[last];
            self.thread[self.v_in] = self.u_in;
            self.dirty_revs.clear();
            self.dirty_revs.push(self.v_in);
            while stem != self.u_out {
                let next_stem = self.parent[stem];
                self.thread[last] = next_stem;
                self.dirty_revs.push(last);
                let before = self.rev_thread[stem];
                self.thread[before] = after;
                self.rev_thread[after] = before;
                self.parent[stem] = stem_parent;
                stem_parent = stem;
                stem = next_stem;
                last = if self.last_succ[stem] == self.last_succ[stem_parent] {
                    self.rev_thread[stem_parent]
                } else {
                    self.last_succ[stem]
                };
                after = self.thread[last];
            }
            self.parent[self.u_out] = stem_parent;
            self.thread[last] = thread_continue;
            self.rev_thread[thread_continue] = last;
            self.last_succ[self.u_out] = last;
            if old_rev_thread != self.v_in {
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
            }
            for k in 0..self.dirty_revs.len() {
                let u = self.dirty_revs[k];
                self.rev_thread[self.thread[u]] = u;
            }

            // reverse pred pointers along the former u_in .. u_out path
            let mut temp_succ_num = 0usize;
            let temp_last_succ = self.last_succ[self.u_out];
            let mut u = self.u_out;
            let mut p = self.parent[u];
            while u != self.u_in {
                self.pred[u] = self.pred[p];
                self.pred_dir[u] = -self.pred_dir[p];
                temp_succ_num += self.succ_num[u] - self.succ_num[p];
                self.succ_num[u] = temp_succ_num;
                self.last_succ[p] = temp_last_succ;
                u = p;
                p = self.parent[u];
            }
            self.pred[self.u_in] = self.in_arc;
            self.pred_dir[self.u_in] = if self.u_in == self.source[self.in_arc] {
                DIR_UP
            } else {
                DIR_DOWN
            };
            self.succ_num[self.u_in] = old_succ_num;
        }

        // last_succ fixes from v_in and v_out toward the root
        let up_limit_out = if self.last_succ[self.join] == self.v_in {
            self.join
        } else {
            NONE
        };
        let last_succ_out = self.last_succ[self.u_out];
        let mut u = self.v_in;
        while u != NONE && self.last_succ[u] == self.v_in {
            self.last_succ[u] = last_succ_out;
            u = self.parent[u];
        }
        if self.join != old_rev_thread && self.v_in != old_rev_thread {
            let mut u = self.v_out;
            while u != NONE && u != up_limit_out && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = old_rev_thread;
                u = self.parent[u];
            }
        } else if last_succ_out != old_last_succ {
            let mut u = self.v_out;
            while u != NONE && u != up_limit_out && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = last_succ_out;
                u = self.parent[u];
            }
        }

        // succ_num fixes along both sides of the cycle
        let mut u = self.v_in;
        while u != self.join {
            self.succ_num[u] += old_succ_num;
            u = self.parent[u];
        }
        let mut u = self.v_out;
        while u != self.join {
            self.succ_num[u] -= old_succ_num;
            u = self.parent[u];
        }
    }

    /// Shifts the potentials of the re-hung subtree so the entering arc's
    /// reduced cost becomes zero.
    fn update_potential(&mut self) {
        let sigma = self.pi[self.v_in] - self.pi[self.u_in]
            - self.pred_dir[self.u_in] * self.cost[self.in_arc];
        let end = self.thread[self.last_succ[self.u_in]];
        let mut u = self.u_in;
        while u != end {
            self.pi[u] += sigma;
            u = self.thread[u];
        }
    }

    /// Exact potentials from the final tree: walk the threaded preorder so
    /// every parent is settled before its children.
    fn recompute_potentials(&mut self) {
        self.pi[self.root] = 0.0;
        let mut u = self.thread[self.root];
        while u != self.root {
            let e = self.pred[u];
            let p = self.parent[u];
            self.pi[u] = if self.pred_dir[u] == DIR_UP {
                self.pi[p] - self.cost[e] // arc u -> p in tree, rc = 0
            } else {
                self.pi[p] + self.cost[e]
            };
            u = self.thread[u];
        }
    }

    /// Exact flows from the final tree by leaf stripping: accumulate
    /// supplies bottom-up; each node's pred arc carries its subtree excess.
    fn recompute_flows(&mut self) {
        for f in self.flow.iter_mut() {
            *f = 0.0;
        }
        // depth via preorder
        let total = self.m + self.n + 1;
        let mut depth = vec![0usize; total];
        let mut u = self.thread[self.root];
        while u != self.root {
            depth[u] = depth[self.parent[u]] + 1;
            u = self.thread[u];
        }
        let mut order: Vec<usize> = (0..total - 1).collect();
        order.sort_by(|a, b| depth[*b].cmp(&depth[*a]).then(a.cmp(b)));

        let mut acc = self.supply.clone();
        for &u in &order {
            let e = self.pred[u];
            let mut f = if self.pred_dir[u] == DIR_UP {
                acc[u]
            } else {
                -acc[u]
            };
            if f < 0.0 && f > -1e-9 {
                f = 0.0; // strong feasibility keeps flows nonnegative; clamp fp dust
            }
            self.flow[e] = f;
            acc[self.parent[u]] += acc[u];
        }
    }
}

pub(crate) fn solve_transportation(
    m: usize,
    n: usize,
    c: &[f64],
    supply: &[f64],
    demand: &[f64],
    max_pivots: usize,
) -> SimplexOutcome {
    debug_assert_eq!(c.len(), m * n);
    let mut t = Tree::new(m, n, c, supply, demand);
    let mut pivots = 0usize;
    let mut converged = true;
    while t.find_entering_arc() {
        if pivots >= max_pivots {
            converged = false;
            break;
        }
        pivots += 1;
        t.find_join();
        if !t.find_leaving_arc() {
            // cannot happen on a bounded transportation polytope
            converged = false;
            break;
        }
        t.change_flow();
        t.update_tree_structure();
        t.update_potential();
    }
    t.recompute_potentials();
    t.recompute_flows();

    let flow = t.flow[..m * n].to_vec();
    let r: Vec<f64> = (0..m).map(|i| t.pi[i]).collect();
    let zeta: Vec<f64> = (0..n).map(|j| -t.pi[m + j]).collect();
    SimplexOutcome {
        flow,
        r,
        zeta,
        pivots,
        converged,
    }
}
