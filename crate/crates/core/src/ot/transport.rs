//! Exact optimal transport between uniform point clouds by the transportation simplex.
//!
//! With `K` sources and `L` sinks the uniform marginals scale to integer supplies `L`
//! and demands `K`, so every basic solution has integer flows. Degenerate pivots are
//! ruled out by perturbing each supply by `e` and the last demand by `K e` (in scaled
//! integers with `e = 1 / (K + 1)`), under which every basis is nondegenerate. The
//! optimal basis is optimal for the unperturbed problem too; flows are then recomputed
//! on that tree with the exact marginals.

use std::collections::VecDeque;

use super::cloud::PointCloud;
use crate::error::ModelError;

/// Sparse optimal plan with `P[i][j]` summing to `1/K` per row and `1/L` per column.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl TransportPlan {
    pub fn dense(&self) -> Vec<Vec<f64>> {
        let mut p = vec![vec![0.0; self.cols]; self.rows];
        for &(i, j, v) in &self.entries {
            p[i][j] += v;
        }
        p
    }

    pub fn cost(&self, cost: impl Fn(usize, usize) -> f64) -> f64 {
        self.entries.iter().map(|&(i, j, v)| v * cost(i, j)).sum()
    }
}

/// Squared Euclidean cost matrix, row-major `a.len() x b.len()`.
pub fn sq_euclidean_costs(a: &PointCloud, b: &PointCloud) -> Result<Vec<f64>, ModelError> {
    if a.dim() != b.dim() {
        return Err(ModelError::DimensionMismatch { left: a.dim(), right: b.dim() });
    }
    let mut c = Vec::with_capacity(a.len() * b.len());
    for p in a.rows() {
        for q in b.rows() {
            c.push(p.iter().zip(q).map(|(x, y)| (x - y) * (x - y)).sum());
        }
    }
    Ok(c)
}

struct Tree {
    k: usize,
    cells: Vec<(usize, usize)>,
    flows: Vec<i64>,
    /// Basis slots incident to each node; sources are `0..k`, sinks `k..k+l`.
    adj: Vec<Vec<usize>>,
}

impl Tree {
    fn other(&self, slot: usize, node: usize) -> usize {
        let (i, j) = self.cells[slot];
        if node == i {
            self.k + j
        } else {
            i
        }
    }

    fn potentials(&self, cost: &[f64], l: usize, u: &mut [f64], v: &mut [f64], seen: &mut [bool], queue: &mut VecDeque<usize>) {
        seen.iter_mut().for_each(|s| *s = false);
        u[0] = 0.0;
        seen[0] = true;
        queue.clear();
        queue.push_back(0);
        while let Some(node) = queue.pop_front() {
            for &slot in &self.adj[node] {
                let next = self.other(slot, node);
                if seen[next] {
                    continue;
                }
                seen[next] = true;
                let (i, j) = self.cells[slot];
                let c = cost[i * l + j];
                if next >= self.k {
                    v[j] = c - u[i];
                } else {
                    u[i] = c - v[j];
                }
                queue.push_back(next);
            }
        }
    }

    /// Slots on the tree path from `from` to `to`, in order.
    fn path(&self, from: usize, to: usize, parent: &mut [usize], queue: &mut VecDeque<usize>) -> Vec<usize> {
        const NONE: usize = usize::MAX;
        parent.iter_mut().for_each(|p| *p = NONE);
        parent[from] = usize::MAX - 1;
        queue.clear();
        queue.push_back(from);
        while let Some(node) = queue.pop_front() {
            if node == to {
                break;
            }
            for &slot in &self.adj[node] {
                let next = self.other(slot, node);
                if parent[next] == NONE {
                    parent[next] = slot;
                    queue.push_back(next);
                }
            }
        }
        let mut out = Vec::new();
        let mut node = to;
        while node != from {
            let slot = parent[node];
            out.push(slot);
            node = self.other(slot, node);
        }
        out.reverse();
        out
    }
}

/// Flows on a spanning tree for the given integer supplies and demands, by leaf peeling.
fn tree_flows(k: usize, l: usize, cells: &[(usize, usize)], supply: &[i64], demand: &[i64]) -> Vec<i64> {
    let n = k + l;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (s, &(i, j)) in cells.iter().enumerate() {
        adj[i].push(s);
        adj[k + j].push(s);
    }
    // net outflow still to be routed at each node
    let mut excess: Vec<i64> = supply.iter().copied().chain(demand.iter().map(|d| -d)).collect();
    let mut degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut done = vec![false; cells.len()];
    let mut flows = vec![0i64; cells.len()];
    let mut leaves: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    while let Some(node) = leaves.pop() {
        let Some(&slot) = adj[node].iter().find(|&&s| !done[s]) else { continue };
        done[slot] = true;
        let (i, j) = cells[slot];
        let other = if node == i { k + j } else { i };
        // the leaf's whole excess crosses its single remaining edge
        let f = if node < k { excess[node] } else { -excess[node] };
        flows[slot] = f;
        excess[node] = 0;
        if other < k {
            excess[other] -= f;
        } else {
            excess[other] += f;
        }
        degree[other] -= 1;
        if degree[other] == 1 {
            leaves.push(other);
        }
    }
    flows
}

/// Optimal integer flows for supplies `l` per source and demands `k` per sink.
/// Returns the basis cells and their flows.
pub fn solve_transport(cost: &[f64], k: usize, l: usize) -> Result<Vec<((usize, usize), i64)>, ModelError> {
    if k == 0 || l == 0 {
        return Err(ModelError::InsufficientData { needed: 1, have: 0 });
    }
    if cost.len() != k * l {
        return Err(ModelError::DimensionMismatch { left: cost.len(), right: k * l });
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(ModelError::Degenerate("non-finite transport cost".into()));
    }
    let scale = k as i64 + 1;
    let mut a: Vec<i64> = vec![l as i64 * scale + 1; k];
    let mut b: Vec<i64> = vec![k as i64 * scale; l];
    b[l - 1] += k as i64;

    // northwest corner start; nondegenerate, so exactly k + l - 1 cells
    let mut cells = Vec::with_capacity(k + l - 1);
    let mut flows = Vec::with_capacity(k + l - 1);
    let (mut i, mut j) = (0, 0);
    loop {
        let f = a[i].min(b[j]);
        cells.push((i, j));
        flows.push(f);
        a[i] -= f;
        b[j] -= f;
        if i == k - 1 && j == l - 1 {
            break;
        }
        if a[i] == 0 {
            i += 1;
        } else {
            j += 1;
        }
    }
    debug_assert_eq!(cells.len(), k + l - 1);
    let mut adj = vec![Vec::new(); k + l];
    for (s, &(i, j)) in cells.iter().enumerate() {
        adj[i].push(s);
        adj[k + j].push(s);
    }
    let mut tree = Tree { k, cells, flows, adj };

    let max_cost = cost.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let tol = 1e-12 * (1.0 + max_cost);
    let (mut u, mut v) = (vec![0.0; k], vec![0.0; l]);
    let mut seen = vec![false; k + l];
    let mut parent = vec![0usize; k + l];
    let mut queue = VecDeque::new();
    let total = k * l;
    let block = ((total as f64).sqrt() as usize).max(k + l).min(total);
    let mut cursor = 0usize;

    loop {
        tree.potentials(cost, l, &mut u, &mut v, &mut seen, &mut queue);
        // block pricing: most negative reduced cost within the first block that has one
        let mut entering = None;
        let mut best = -tol;
        let mut scanned = 0;
        while scanned < total {
            let end = (scanned + block).min(total);
            for _ in scanned..end {
                let (ci, cj) = (cursor / l, cursor % l);
                let r = cost[cursor] - u[ci] - v[cj];
                if r < best {
                    best = r;
                    entering = Some((ci, cj));
                }
                cursor += 1;
                if cursor == total {
                    cursor = 0;
                }
            }
            scanned = end;
            if entering.is_some() {
                break;
            }
        }
        let Some((ei, ej)) = entering else { break };

        let path = tree.path(k + ej, ei, &mut parent, &mut queue);
        // signs alternate -, +, -, ... starting at the entering cell's sink
        let mut leave = path[0];
        for (pos, &slot) in path.iter().enumerate().step_by(2) {
            if pos == 0 || tree.flows[slot] < tree.flows[leave] {
                leave = slot;
            }
        }
        let theta = tree.flows[leave];
        for (pos, &slot) in path.iter().enumerate() {
            if pos % 2 == 0 {
                tree.flows[slot] -= theta;
            } else {
                tree.flows[slot] += theta;
            }
        }
        let (li, lj) = tree.cells[leave];
        tree.adj[li].retain(|&s| s != leave);
        tree.adj[k + lj].retain(|&s| s != leave);
        tree.cells[leave] = (ei, ej);
        tree.flows[leave] = theta;
        tree.adj[ei].push(leave);
        tree.adj[k + ej].push(leave);
    }

    let supply = vec![l as i64; k];
    let demand = vec![k as i64; l];
    let exact = tree_flows(k, l, &tree.cells, &supply, &demand);
    debug_assert!(exact.iter().all(|&f| f >= 0), "optimal basis infeasible after unperturbing");
    Ok(tree.cells.into_iter().zip(exact).collect())
}

/// Minimal expected squared distance between the two clouds, with the plan.
pub fn ot_plan(x_syn: &PointCloud, x_real: &PointCloud) -> Result<(f64, TransportPlan), ModelError> {
    let cost = sq_euclidean_costs(x_real, x_syn)?;
    let (k, l) = (x_real.len(), x_syn.len());
    let flows = solve_transport(&cost, k, l)?;
    let denom = (k * l) as f64;
    let entries: Vec<(usize, usize, f64)> =
        flows.into_iter().filter(|&(_, f)| f > 0).map(|((i, j), f)| (i, j, f as f64 / denom)).collect();
    let plan = TransportPlan { rows: k, cols: l, entries };
    let value = plan.cost(|i, j| cost[i * l + j]).max(0.0);
    Ok((value, plan))
}

pub fn ot_distance(x_syn: &PointCloud, x_real: &PointCloud) -> Result<f64, ModelError> {
    Ok(ot_plan(x_syn, x_real)?.0)
}

/// Weighted sum of the return, tail and autocorrelation distances.
pub fn aggregate_ot(distances: [f64; 3], weights: [f64; 3]) -> f64 {
    distances.iter().zip(&weights).map(|(d, w)| d * w).sum()
}
