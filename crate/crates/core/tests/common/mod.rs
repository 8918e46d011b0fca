//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use lobmarl::market::{Order, Trade};

/// Minimum transport cost between uniform marginals over all vertices of the transport
/// polytope. Square problems enumerate permutation matrices; rectangular ones enumerate
/// every spanning tree of the complete bipartite graph and keep the feasible ones.
pub fn brute_force_ot(cost: &[f64], k: usize, l: usize) -> f64 {
    if k == l {
        let mut perm: Vec<usize> = (0..k).collect();
        let mut best = f64::INFINITY;
        permute(&mut perm, 0, &mut |p| {
            let c: f64 = p.iter().enumerate().map(|(i, &j)| cost[i * l + j]).sum();
            best = best.min(c / k as f64);
        });
        return best;
    }
    let mut best = f64::INFINITY;
    let mut chosen = Vec::with_capacity(k + l - 1);
    let mut parent: Vec<usize> = (0..k + l).collect();
    trees(k, l, 0, &mut chosen, &mut parent, &mut |cells| {
        if let Some(flows) = vertex_flows(k, l, cells) {
            let c: f64 = cells.iter().zip(&flows).map(|(&(i, j), f)| cost[i * l + j] * f).sum();
            best = best.min(c);
        }
    });
    best
}

fn permute(p: &mut Vec<usize>, at: usize, f: &mut dyn FnMut(&[usize])) {
    if at == p.len() {
        f(p);
        return;
    }
    for i in at..p.len() {
        p.swap(at, i);
        permute(p, at + 1, f);
        p.swap(at, i);
    }
}

fn find(parent: &[usize], mut x: usize) -> usize {
    while parent[x] != x {
        x = parent[x];
    }
    x
}

fn trees(
    k: usize,
    l: usize,
    next: usize,
    chosen: &mut Vec<(usize, usize)>,
    parent: &mut Vec<usize>,
    f: &mut dyn FnMut(&[(usize, usize)]),
) {
    let need = k + l - 1 - chosen.len();
    if need == 0 {
        f(chosen);
        return;
    }
    if k * l - next < need {
        return;
    }
    let (i, j) = (next / l, next % l);
    let (ri, rj) = (find(parent, i), find(parent, k + j));
    if ri != rj {
        parent[ri] = rj;
        chosen.push((i, j));
        trees(k, l, next + 1, chosen, parent, f);
        chosen.pop();
        parent[ri] = ri;
    }
    trees(k, l, next + 1, chosen, parent, f);
}

/// Plan entries on a spanning tree for row sums 1/k and column sums 1/l, or `None`
/// if some entry is negative. Peels leaves until every cell is fixed.
fn vertex_flows(k: usize, l: usize, cells: &[(usize, usize)]) -> Option<Vec<f64>> {
    let n = k + l;
    let mut rest = [0.0f64; 16];
    let mut degree = [0usize; 16];
    for v in 0..k {
        rest[v] = 1.0 / k as f64;
    }
    for v in k..n {
        rest[v] = -1.0 / l as f64;
    }
    for &(i, j) in cells {
        degree[i] += 1;
        degree[k + j] += 1;
    }
    let mut open = [true; 16];
    let mut flows = vec![0.0; cells.len()];
    for _ in 0..cells.len() {
        let leaf = (0..n).find(|&v| degree[v] == 1)?;
        let s = (0..cells.len()).find(|&s| open[s] && (cells[s].0 == leaf || k + cells[s].1 == leaf))?;
        let (i, j) = cells[s];
        let f = if leaf < k { rest[leaf] } else { -rest[leaf] };
        if f < -1e-12 {
            return None;
        }
        flows[s] = f;
        open[s] = false;
        rest[i] -= f;
        rest[k + j] += f;
        degree[i] -= 1;
        degree[k + j] -= 1;
    }
    Some(flows)
}

/// Reference matcher: flat list of resting orders, best price then earliest arrival,
/// skipping the submitter's own orders.
#[derive(Debug, Clone, Default)]
pub struct NaiveBook {
    /// (seq, agent, signed remaining volume, price in ticks)
    pub resting: Vec<(u64, usize, i64, i64)>,
    seq: u64,
}

impl NaiveBook {
    pub fn submit(&mut self, order: &Order, tick: f64, step: u64) -> Vec<Trade> {
        let ticks = (order.price / tick).round() as i64;
        let buy = order.signed_volume > 0;
        let mut left = order.signed_volume.abs();
        let mut trades = Vec::new();
        while left > 0 {
            let best = self
                .resting
                .iter()
                .enumerate()
                .filter(|(_, r)| (r.2 > 0) != buy && r.1 != order.agent_id)
                .filter(|(_, r)| if buy { r.3 <= ticks } else { r.3 >= ticks })
                .min_by_key(|(_, r)| (if buy { r.3 } else { -r.3 }, r.0))
                .map(|(i, _)| i);
            let Some(i) = best else { break };
            let r = &mut self.resting[i];
            let q = left.min(r.2.abs());
            let (buyer, seller) = if buy { (order.agent_id, r.1) } else { (r.1, order.agent_id) };
            trades.push(Trade { step, price: r.3 as f64 * tick, volume: q, buyer_id: buyer, seller_id: seller });
            left -= q;
            r.2 -= q * r.2.signum();
            if r.2 == 0 {
                self.resting.remove(i);
            }
        }
        if left > 0 {
            // a remainder that would cross the submitter's own opposite quote is dropped
            let crosses_own = self
                .resting
                .iter()
                .any(|r| (r.2 > 0) != buy && if buy { r.3 <= ticks } else { r.3 >= ticks });
            if !crosses_own {
                self.seq += 1;
                self.resting.push((self.seq, order.agent_id, if buy { left } else { -left }, ticks));
            }
        }
        trades
    }
}
