//! Min-cost flow by successive shortest paths with node potentials.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

#[derive(Clone, Copy, Debug)]
struct Arc {
    to: usize,
    cap: i64,
    cost: i64,
}

#[derive(Clone, Debug, Default)]
pub(crate) struct Network {
    arcs: Vec<Arc>,
    adj: Vec<Vec<usize>>,
}

impl Network {
    pub fn new(n: usize) -> Self {
        Self {
            arcs: Vec::new(),
            adj: vec![Vec::new(); n],
        }
    }

    pub fn add_node(&mut self) -> usize {
        self.adj.push(Vec::new());
        self.adj.len() - 1
    }

    pub fn add_arc(&mut self, from: usize, to: usize, cap: i64, cost: i64) {
        self.adj[from].push(self.arcs.len());
        self.arcs.push(Arc { to, cap, cost });
        self.adj[to].push(self.arcs.len());
        self.arcs.push(Arc {
            to: from,
            cap: 0,
            cost: -cost,
        });
    }

    fn from(&self, a: usize) -> usize {
        self.arcs[a ^ 1].to
    }

    /// Routes `supply` (positive: source, negative: sink; summing to zero)
    /// at minimum cost. Returns the cost, or `None` when the supplies cannot
    /// be routed. Arcs may have negative costs and form negative cycles.
    pub fn min_cost_flow(&mut self, supply: &[i64]) -> Option<i128> {
        let n = self.adj.len();
        debug_assert_eq!(supply.len(), n);
        let mut excess = supply.to_vec();
        let mut cost = 0i128;
        // Saturating every negative arc leaves only non-negative residual
        // costs, so zero potentials are valid for Dijkstra.
        for a in (0..self.arcs.len()).step_by(2) {
            let arc = self.arcs[a];
            if arc.cost < 0 && arc.cap > 0 {
                let u = self.from(a);
                excess[u] -= arc.cap;
                excess[arc.to] += arc.cap;
                cost += i128::from(arc.cap) * i128::from(arc.cost);
                self.arcs[a].cap = 0;
                self.arcs[a ^ 1].cap += arc.cap;
            }
        }
        let s = self.add_node();
        let t = self.add_node();
        let mut need = 0i64;
        for (v, &e) in excess.iter().enumerate() {
            if e > 0 {
                self.add_arc(s, v, e, 0);
                need += e;
            } else if e < 0 {
                self.add_arc(v, t, -e, 0);
            }
        }
        let n = n + 2;
        let mut pot = vec![0i64; n];
        let mut flow = 0i64;
        while flow < need {
            let mut dist = vec![i64::MAX; n];
            let mut via = vec![usize::MAX; n];
            dist[s] = 0;
            let mut heap = BinaryHeap::from([Reverse((0i64, s))]);
            while let Some(Reverse((d, u))) = heap.pop() {
                if d > dist[u] {
                    continue;
                }
                for &a in &self.adj[u] {
                    let arc = self.arcs[a];
                    if arc.cap <= 0 {
                        continue;
                    }
                    let nd = d + arc.cost + pot[u] - pot[arc.to];
                    debug_assert!(
                        arc.cost + pot[u] - pot[arc.to] >= 0,
                        "negative reduced cost"
                    );
                    if nd < dist[arc.to] {
                        dist[arc.to] = nd;
                        via[arc.to] = a;
                        heap.push(Reverse((nd, arc.to)));
                    }
                }
            }
            if dist[t] == i64::MAX {
                break;
            }
            // Capping at dist[t] keeps reduced costs non-negative on arcs
            // leaving nodes this round did not reach.
            for v in 0..n {
                pot[v] += dist[v].min(dist[t]);
            }
            let mut push = need - flow;
            let mut v = t;
            while v != s {
                let a = via[v];
                push = push.min(self.arcs[a].cap);
                v = self.from(a);
            }
            let mut v = t;
            while v != s {
                let a = via[v];
                self.arcs[a].cap -= push;
                self.arcs[a ^ 1].cap += push;
                cost += i128::from(push) * i128::from(self.arcs[a].cost);
                v = self.from(a);
            }
            flow += push;
        }
        // Detach the auxiliary terminals so later queries see only the
        // original residual network.
        for v in [s, t] {
            for &a in &self.adj[v].clone() {
                self.arcs[a].cap = 0;
                self.arcs[a ^ 1].cap = 0;
            }
        }
        (flow == need).then_some(cost)
    }

    /// Shortest residual distance from every node to `target`. `None` where
    /// `target` is unreachable.
    pub fn residual_dist_to(&self, target: usize) -> Vec<Option<i64>> {
        let n = self.adj.len();
        let mut dist: Vec<Option<i64>> = vec![None; n];
        dist[target] = Some(0);
        for _ in 0..n {
            let mut changed = false;
            for a in 0..self.arcs.len() {
                let arc = self.arcs[a];
                let u = self.from(a);
                if arc.cap <= 0 {
                    continue;
                }
                if let Some(dv) = dist[arc.to] {
                    if dist[u].is_none_or(|du| dv + arc.cost < du) {
                        dist[u] = Some(dv + arc.cost);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        dist
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn picks_the_cheaper_route() {
        let mut net = Network::new(4);
        net.add_arc(0, 1, 5, 1);
        net.add_arc(1, 3, 5, 1);
        net.add_arc(0, 2, 5, 3);
        net.add_arc(2, 3, 5, -1);
        net.add_arc(1, 2, 2, -2);
        let cost = net.min_cost_flow(&[7, 0, 0, -7]).unwrap();
        // 2 units via 0-1-2-3 (cost -2), 3 via 0-1-3 (2 each), 2 via 0-2-3 (2 each).
        assert_eq!(cost, -2 * 2 + 3 * 2 + 2 * 2);
    }

    #[test]
    fn negative_cycles_are_cancelled() {
        let mut net = Network::new(2);
        net.add_arc(0, 1, 3, -2);
        net.add_arc(1, 0, 1, 1);
        assert_eq!(net.min_cost_flow(&[0, 0]), Some(-1));
        let mut net = Network::new(2);
        net.add_arc(0, 1, 3, 1);
        assert_eq!(net.min_cost_flow(&[5, -5]), None);
    }
}
