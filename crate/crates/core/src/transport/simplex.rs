//! Network simplex for the balanced transportation problem.
//!
//! Supplies and demands are integers. Every source–sink pair is an
//! uncapacitated arc; an extra root node joined to every node by an
//! expensive artificial arc gives the starting basis. Pricing uses block
//! search; the leaving arc follows the strongly-feasible-tree rule, which
//! rules out cycling under degeneracy. Tree structure (parents, depths,
//! potentials) is rebuilt by a breadth-first pass after each pivot.

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dir {
    // tree arc points from the node to its parent
    Up,
    // tree arc points from the parent to the node
    Down,
}

pub(crate) struct Solution {
    /// Basic arcs at optimality; ids follow [`Network::ends`].
    pub basis: Vec<usize>,
    /// Integer flow on every arc.
    pub int_flow: Vec<i64>,
}

/// Transportation network with `m` sources and `n` sinks.
pub(crate) struct Network<'a> {
    m: usize,
    n: usize,
    cost: &'a [f64],
    supply: &'a [i64],
    demand: &'a [i64],
    big_m: f64,
}

impl<'a> Network<'a> {
    pub fn new(cost: &'a [f64], supply: &'a [i64], demand: &'a [i64]) -> Self {
        let m = supply.len();
        let n = demand.len();
        let max_cost = cost.iter().fold(0.0f64, |a, &c| a.max(c.abs()));
        let big_m = (max_cost + 1.0) * (m + n + 1) as f64;
        Self {
            m,
            n,
            cost,
            supply,
            demand,
            big_m,
        }
    }

    #[inline]
    fn root(&self) -> usize {
        self.m + self.n
    }

    #[inline]
    fn arc_count(&self) -> usize {
        self.m * self.n + self.m + self.n
    }

    #[inline]
    pub fn is_artificial(&self, e: usize) -> bool {
        e >= self.m * self.n
    }

    /// `(tail, head)` of arc `e`.
    #[inline]
    pub fn ends(&self, e: usize) -> (usize, usize) {
        let mn = self.m * self.n;
        if e < mn {
            (e / self.n, self.m + e % self.n)
        } else if e < mn + self.m {
            (e - mn, self.root())
        } else {
            (self.root(), self.m + (e - mn - self.m))
        }
    }

    #[inline]
    fn arc_cost(&self, e: usize) -> f64 {
        if e < self.m * self.n {
            self.cost[e]
        } else {
            self.big_m
        }
    }

    pub fn solve(&self) -> Result<Solution> {
        let nodes = self.m + self.n + 1;
        let arcs = self.arc_count();
        let root = self.root();
        let mut flow = vec![0i64; arcs];
        let mut in_tree = vec![false; arcs];
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes];
        for i in 0..self.m {
            let e = self.m * self.n + i;
            flow[e] = self.supply[i];
            in_tree[e] = true;
            adj[i].push(e);
            adj[root].push(e);
        }
        for j in 0..self.n {
            let e = self.m * self.n + self.m + j;
            flow[e] = self.demand[j];
            in_tree[e] = true;
            adj[self.m + j].push(e);
            adj[root].push(e);
        }

        let mut tree = Tree::new(nodes);
        tree.rebuild(self, &adj, root);

        let block = ((arcs as f64).sqrt().ceil() as usize).max(10);
        let eps = 1e-12 * self.big_m;
        let mut next = 0usize;
        let max_pivots = 50 * arcs + 10_000;
        let mut pivots = 0usize;
        while let Some(entering) = self.price(&tree, &in_tree, &mut next, block, eps) {
            pivots += 1;
            if pivots > max_pivots {
                return Err(Error::Capacity(format!(
                    "network simplex exceeded {max_pivots} pivots"
                )));
            }
            let (first, second) = self.ends(entering);
            let join = tree.join(first, second);
            // find the blocking arc
            let mut delta = i64::MAX;
            let mut out: Option<usize> = None;
            let mut u = first;
            while u != join {
                if tree.dir[u] == Dir::Up {
                    let d = flow[tree.pred[u]];
                    if d < delta {
                        delta = d;
                        out = Some(u);
                    }
                }
                u = tree.parent[u];
            }
            let mut u = second;
            while u != join {
                if tree.dir[u] == Dir::Down {
                    let d = flow[tree.pred[u]];
                    if d <= delta {
                        delta = d;
                        out = Some(u);
                    }
                }
                u = tree.parent[u];
            }
            let u_out = out.ok_or_else(|| Error::Capacity("unbounded transport cycle".into()))?;
            // augment
            if delta > 0 {
                flow[entering] += delta;
                let mut u = first;
                while u != join {
                    let e = tree.pred[u];
                    match tree.dir[u] {
                        Dir::Up => flow[e] -= delta,
                        Dir::Down => flow[e] += delta,
                    }
                    u = tree.parent[u];
                }
                let mut u = second;
                while u != join {
                    let e = tree.pred[u];
                    match tree.dir[u] {
                        Dir::Up => flow[e] += delta,
                        Dir::Down => flow[e] -= delta,
                    }
                    u = tree.parent[u];
                }
            }
            // swap arcs in the basis
            let leaving = tree.pred[u_out];
            in_tree[leaving] = false;
            in_tree[entering] = true;
            let (a, b) = self.ends(leaving);
            for v in [a, b] {
                if let Some(pos) = adj[v].iter().position(|&x| x == leaving) {
                    adj[v].swap_remove(pos);
                }
            }
            let (a, b) = self.ends(entering);
            adj[a].push(entering);
            adj[b].push(entering);
            tree.rebuild(self, &adj, root);
        }

        let basis: Vec<usize> = (0..arcs).filter(|&e| in_tree[e]).collect();
        if basis.iter().any(|&e| self.is_artificial(e) && flow[e] != 0) {
            return Err(Error::InvalidMeasure(
                "transport problem is infeasible (unequal total masses)".into(),
            ));
        }
        Ok(Solution {
            basis,
            int_flow: flow,
        })
    }

    fn price(
        &self,
        tree: &Tree,
        in_tree: &[bool],
        next: &mut usize,
        block: usize,
        eps: f64,
    ) -> Option<usize> {
        let arcs = self.arc_count();
        let mut best: Option<usize> = None;
        let mut best_rc = -eps;
        let mut scanned_in_block = 0usize;
        let mut e = *next;
        for _ in 0..arcs {
            if !in_tree[e] {
                let (u, v) = self.ends(e);
                let rc = self.arc_cost(e) + tree.pot[u] - tree.pot[v];
                if rc < best_rc {
                    best_rc = rc;
                    best = Some(e);
                }
            }
            e += 1;
            if e == arcs {
                e = 0;
            }
            scanned_in_block += 1;
            if scanned_in_block == block {
                if best.is_some() {
                    *next = e;
                    return best;
                }
                scanned_in_block = 0;
            }
        }
        *next = e;
        best
    }
}

struct Tree {
    parent: Vec<usize>,
    pred: Vec<usize>,
    dir: Vec<Dir>,
    depth: Vec<usize>,
    pot: Vec<f64>,
    order: Vec<usize>,
    queue: VecDeque<usize>,
    seen: Vec<bool>,
}

impl Tree {
    fn new(nodes: usize) -> Self {
        Self {
            parent: vec![usize::MAX; nodes],
            pred: vec![usize::MAX; nodes],
            dir: vec![Dir::Up; nodes],
            depth: vec![0; nodes],
            pot: vec![0.0; nodes],
            order: Vec::with_capacity(nodes),
            queue: VecDeque::with_capacity(nodes),
            seen: vec![false; nodes],
        }
    }

    // Potentials satisfy cost(u→v) + pot[u] − pot[v] = 0 on tree arcs.
    fn rebuild(&mut self, net: &Network<'_>, adj: &[Vec<usize>], root: usize) {
        self.seen.fill(false);
        self.order.clear();
        self.queue.clear();
        self.seen[root] = true;
        self.parent[root] = usize::MAX;
        self.depth[root] = 0;
        self.pot[root] = 0.0;
        self.queue.push_back(root);
        while let Some(u) = self.queue.pop_front() {
            self.order.push(u);
            for &e in &adj[u] {
                let (a, b) = net.ends(e);
                let (v, dir) = if a == u { (b, Dir::Down) } else { (a, Dir::Up) };
                if self.seen[v] {
                    continue;
                }
                self.seen[v] = true;
                self.parent[v] = u;
                self.pred[v] = e;
                self.dir[v] = dir;
                self.depth[v] = self.depth[u] + 1;
                let c = net.arc_cost(e);
                self.pot[v] = match dir {
                    // u → v: pot[v] = pot[u] + c
                    Dir::Down => self.pot[u] + c,
                    // v → u: pot[v] = pot[u] − c
                    Dir::Up => self.pot[u] - c,
                };
                self.queue.push_back(v);
            }
        }
    }

    fn join(&self, mut a: usize, mut b: usize) -> usize {
        while a != b {
            if self.depth[a] >= self.depth[b] {
                a = self.parent[a];
            } else {
                b = self.parent[b];
            }
        }
        a
    }

    /// Nodes in breadth-first order from the root.
    pub fn order(&self) -> &[usize] {
        &self.order
    }
}

/// Flows on the final basis tree recomputed from real-valued node supplies.
///
/// Returns `None` when the real flows are infeasible for this basis (a
/// negative flow or mass routed through the root).
pub(crate) fn real_tree_flows(
    net: &Network<'_>,
    basis: &[usize],
    supply: &[f64],
    demand: &[f64],
) -> Option<Vec<(usize, f64)>> {
    let nodes = net.m + net.n + 1;
    let root = net.root();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    for &e in basis {
        let (a, b) = net.ends(e);
        adj[a].push(e);
        adj[b].push(e);
    }
    let mut tree = Tree::new(nodes);
    tree.rebuild(net, &adj, root);
    let mut excess: Vec<f64> = (0..nodes)
        .map(|u| {
            if u < net.m {
                supply[u]
            } else if u < net.m + net.n {
                -demand[u - net.m]
            } else {
                0.0
            }
        })
        .collect();
    let scale = supply.iter().chain(demand).fold(0.0f64, |a, &x| a.max(x));
    let tol = 1e-12 * scale.max(1.0);
    let mut out = Vec::with_capacity(basis.len());
    for &u in tree.order().iter().rev() {
        if u == root {
            continue;
        }
        let e = tree.pred[u];
        let f = match tree.dir[u] {
            Dir::Up => excess[u],
            Dir::Down => -excess[u],
        };
        let p = tree.parent[u];
        excess[p] += excess[u];
        if f < -tol || (net.is_artificial(e) && f.abs() > tol) {
            return None;
        }
        if !net.is_artificial(e) {
            out.push((e, f.max(0.0)));
        }
    }
    Some(out)
}
