//! Path delays over an annotated graph: critical path, register-minimal
//! path matrices, timing constraints and target search.
//!
//! Delays are summed in integer femtoseconds so that path comparisons are
//! exact regardless of summation order.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::wgraph::{NodeId, WGraph};

/// Picoseconds to integer femtoseconds.
pub fn to_fs(ps: f64) -> i64 {
    (ps * 1000.0).round() as i64
}

pub fn to_ps(fs: i64) -> f64 {
    fs as f64 / 1000.0
}

#[derive(Debug, Error, PartialEq)]
pub enum TimingError {
    #[error("combinational cycle through {0:?}")]
    CombinationalCycle(Vec<NodeId>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriticalPath {
    pub delay_ps: f64,
    pub path: Vec<NodeId>,
}

fn deltas_fs(g: &WGraph) -> Vec<i64> {
    g.nodes.iter().map(|n| to_fs(n.delta)).collect()
}

/// Longest delay over register-free paths, with one witness path.
pub fn critical_path(g: &WGraph) -> Result<CriticalPath, TimingError> {
    let order = g
        .zero_weight_topo_order()
        .map_err(TimingError::CombinationalCycle)?;
    let delta = deltas_fs(g);
    let adj = g.adjacency();
    let mut best = delta.clone();
    let mut prev: Vec<Option<usize>> = vec![None; g.nodes.len()];
    let mut extends = vec![false; g.nodes.len()];
    for v in &order {
        let v = v.0;
        for &e in &adj.incoming[v] {
            let e = &g.edges[e];
            if e.w == 0 {
                extends[e.from.0] = true;
                let through = best[e.from.0] + delta[v];
                if prev[v].is_none() || through > best[v] {
                    best[v] = through;
                    prev[v] = Some(e.from.0);
                }
            }
        }
    }
    let Some(end) = (0..best.len())
        .filter(|&v| !extends[v])
        .max_by_key(|&v| (best[v], Reverse(v)))
    else {
        return Ok(CriticalPath {
            delay_ps: 0.0,
            path: Vec::new(),
        });
    };
    let mut path = vec![NodeId(end)];
    while let Some(p) = prev[path.last().expect("non-empty").0] {
        path.push(NodeId(p));
    }
    path.reverse();
    Ok(CriticalPath {
        delay_ps: to_ps(best[end]),
        path,
    })
}

/// Register-minimal path weights `W` and the largest delay `D` among the
/// paths achieving them. `D` counts both endpoints; `D(v, v) = δ(v)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WdMatrices {
    w: Vec<Vec<u64>>,
    d: Vec<Vec<i64>>,
}

const UNREACHABLE: u64 = u64::MAX;

impl WdMatrices {
    pub fn node_count(&self) -> usize {
        self.w.len()
    }

    pub fn w(&self, u: NodeId, v: NodeId) -> Option<u64> {
        let w = self.w[u.0][v.0];
        (w != UNREACHABLE).then_some(w)
    }

    /// `D(u, v)` in femtoseconds.
    pub fn d_fs(&self, u: NodeId, v: NodeId) -> Option<i64> {
        self.w(u, v).map(|_| self.d[u.0][v.0])
    }

    pub fn d_ps(&self, u: NodeId, v: NodeId) -> Option<f64> {
        self.d_fs(u, v).map(to_ps)
    }

    /// All reachable `(u, v, W, D_fs)` in row-major order.
    pub fn pairs(&self) -> impl Iterator<Item = (NodeId, NodeId, u64, i64)> + '_ {
        self.w.iter().enumerate().flat_map(move |(u, row)| {
            row.iter()
                .enumerate()
                .filter(|(_, &w)| w != UNREACHABLE)
                .map(move |(v, &w)| (NodeId(u), NodeId(v), w, self.d[u][v]))
        })
    }
}

pub fn compute_wd(g: &WGraph) -> Result<WdMatrices, TimingError> {
    let order = g
        .zero_weight_topo_order()
        .map_err(TimingError::CombinationalCycle)?;
    let n = g.nodes.len();
    let mut rank = vec![0usize; n];
    for (i, v) in order.iter().enumerate() {
        rank[v.0] = i;
    }
    let delta = deltas_fs(g);
    let adj = g.adjacency();
    let mut wm = Vec::with_capacity(n);
    let mut dm = Vec::with_capacity(n);
    for s in 0..n {
        let mut dist = vec![UNREACHABLE; n];
        dist[s] = 0;
        let mut heap = BinaryHeap::from([Reverse((0u64, s))]);
        while let Some(Reverse((du, u))) = heap.pop() {
            if du > dist[u] {
                continue;
            }
            for &e in &adj.outgoing[u] {
                let e = &g.edges[e];
                let nd = du + u64::from(e.w);
                if nd < dist[e.to.0] {
                    dist[e.to.0] = nd;
                    heap.push(Reverse((nd, e.to.0)));
                }
            }
        }
        let mut reached: Vec<usize> = (0..n).filter(|&v| dist[v] != UNREACHABLE).collect();
        reached.sort_by_key(|&v| (dist[v], rank[v]));
        let mut d = vec![i64::MIN; n];
        d[s] = delta[s];
        for &v in &reached {
            if v == s {
                continue;
            }
            for &e in &adj.incoming[v] {
                let e = &g.edges[e];
                let u = e.from.0;
                if dist[u] != UNREACHABLE && dist[u] + u64::from(e.w) == dist[v] && d[u] != i64::MIN
                {
                    d[v] = d[v].max(d[u] + delta[v]);
                }
            }
        }
        wm.push(dist);
        dm.push(d);
    }
    Ok(WdMatrices { w: wm, d: dm })
}

/// A pair whose register-minimal paths are too slow for the target and so
/// must keep at least one register: `W + Δs(v) − Δs(u) ≥ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TimingPair {
    pub u: NodeId,
    pub v: NodeId,
    pub w: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimingConstraintSet {
    pub pairs: Vec<TimingPair>,
    pub target_ps: f64,
}

impl TimingConstraintSet {
    pub fn empty(target_ps: f64) -> Self {
        Self {
            pairs: Vec::new(),
            target_ps,
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Pairs with `D > target`. A node slower than the target on its own shows
/// up as `(v, v, 0)`, which no assignment satisfies; cycles through `v`
/// hold registers already and add nothing.
pub fn build_constraints(wd: &WdMatrices, target_ps: f64) -> TimingConstraintSet {
    let t = to_fs(target_ps);
    let pairs = wd
        .pairs()
        .filter(|&(u, v, w, d)| d > t && (u != v || w == 0))
        .map(|(u, v, w, _)| TimingPair { u, v, w })
        .collect();
    TimingConstraintSet { pairs, target_ps }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintOrigin {
    /// Index into the graph's edges.
    Legality(usize),
    /// Index into the constraint set's pairs.
    Timing(usize),
}

/// `Δs(to) − Δs(from) ≤ bound`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DiffConstraint {
    pub from: NodeId,
    pub to: NodeId,
    pub bound: i64,
    pub origin: ConstraintOrigin,
}

/// The full difference system: register counts stay non-negative on every
/// edge and every timing pair keeps a register.
pub fn difference_constraints(g: &WGraph, cs: &TimingConstraintSet) -> Vec<DiffConstraint> {
    let legality = g.edges.iter().enumerate().map(|(i, e)| DiffConstraint {
        from: e.to,
        to: e.from,
        bound: i64::from(e.w),
        origin: ConstraintOrigin::Legality(i),
    });
    let timing = cs.pairs.iter().enumerate().map(|(i, p)| DiffConstraint {
        from: p.v,
        to: p.u,
        bound: p.w as i64 - 1,
        origin: ConstraintOrigin::Timing(i),
    });
    legality.chain(timing).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeasibilityResult {
    pub feasible: bool,
    /// Stage potential per node, zero on anchored nodes.
    pub witness: Option<Vec<i64>>,
    /// Constraints forming a negative cycle once all anchored nodes are
    /// identified with one another.
    pub violation: Option<Vec<DiffConstraint>>,
}

/// Maps every node to a solver variable; all anchored nodes share variable 0.
pub(crate) fn collapse_boundaries(g: &WGraph) -> (Vec<usize>, usize) {
    let mut next = 1;
    let var = g
        .nodes
        .iter()
        .map(|n| {
            if n.role.is_anchored() {
                0
            } else {
                next += 1;
                next - 1
            }
        })
        .collect();
    (var, next)
}

pub fn check_feasibility(g: &WGraph, cs: &TimingConstraintSet) -> FeasibilityResult {
    let cons = difference_constraints(g, cs);
    let (var, m) = collapse_boundaries(g);
    // Bellman-Ford from a virtual source tied to every variable with 0.
    let mut dist = vec![0i64; m];
    let mut parent: Vec<Option<usize>> = vec![None; m];
    let mut last = None;
    for _ in 0..=m {
        last = None;
        for (k, c) in cons.iter().enumerate() {
            let (a, b) = (var[c.from.0], var[c.to.0]);
            if dist[a] + c.bound < dist[b] {
                dist[b] = dist[a] + c.bound;
                parent[b] = Some(k);
                last = Some(b);
            }
        }
        if last.is_none() {
            break;
        }
    }
    if let Some(mut x) = last {
        for _ in 0..m {
            x = var[cons[parent[x].expect("relaxed")].from.0];
        }
        let start = x;
        let mut cycle = Vec::new();
        loop {
            let k = parent[x].expect("on cycle");
            cycle.push(cons[k]);
            x = var[cons[k].from.0];
            if x == start {
                break;
            }
        }
        cycle.reverse();
        return FeasibilityResult {
            feasible: false,
            witness: None,
            violation: Some(cycle),
        };
    }
    let witness = var.iter().map(|&x| dist[x] - dist[0]).collect();
    FeasibilityResult {
        feasible: true,
        witness: Some(witness),
        violation: None,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TargetSearch {
    pub target_ps: f64,
    pub original_ps: f64,
    /// Distinct candidate targets in increasing order.
    pub candidates: Vec<f64>,
    pub probes: usize,
}

/// Smallest feasible target among the distinct `D` values not above the
/// critical path delay, found by binary search.
pub fn search_target(g: &WGraph, wd: &WdMatrices) -> Result<TargetSearch, TimingError> {
    let original = to_fs(critical_path(g)?.delay_ps);
    let mut cands: Vec<i64> = wd
        .pairs()
        .map(|(_, _, _, d)| d)
        .filter(|&d| d <= original)
        .collect();
    cands.push(original);
    cands.sort_unstable();
    cands.dedup();
    let feasible = |t: i64| check_feasibility(g, &build_constraints(wd, to_ps(t))).feasible;
    let (mut lo, mut hi) = (0, cands.len() - 1);
    let mut probes = 0;
    while lo < hi {
        let mid = (lo + hi) / 2;
        probes += 1;
        if feasible(cands[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(TargetSearch {
        target_ps: to_ps(cands[lo]),
        original_ps: to_ps(original),
        candidates: cands.into_iter().map(to_ps).collect(),
        probes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delay_model::{annotate, DelayModel};
    use crate::ir::parse_design;
    use crate::wgraph::build_wgraph;

    fn graph(src: &str) -> WGraph {
        annotate(
            &build_wgraph(&parse_design(src).unwrap()).unwrap(),
            &DelayModel::default(),
        )
        .unwrap()
    }

    #[test]
    fn wire_has_zero_delay() {
        let g = graph("design w { %x = pin : i8  sink %x : i8 }");
        let cp = critical_path(&g).unwrap();
        assert_eq!(cp.delay_ps, 0.0);
        assert_eq!(cp.path.len(), 2);
    }

    #[test]
    fn single_node_target_is_its_delay() {
        let g =
            graph("design w { %x = pin : i8  %y = pin : i8  %s = add %x, %y : i8  sink %s : i8 }");
        let wd = compute_wd(&g).unwrap();
        let t = search_target(&g, &wd).unwrap();
        assert_eq!(t.target_ps, 84.0);
        assert_eq!(t.original_ps, 84.0);
        let below = build_constraints(&wd, 80.0);
        let r = check_feasibility(&g, &below);
        assert!(!r.feasible);
        assert!(!r.violation.unwrap().is_empty());
    }

    #[test]
    fn register_on_the_only_path() {
        let g = graph("design w { %x = pin : i8  %n = not %x : i8  %r = delay %n by 2 : i8  %m = not %r : i8  sink %m : i8 }");
        let wd = compute_wd(&g).unwrap();
        assert_eq!(wd.w(NodeId(1), NodeId(2)), Some(2));
        assert_eq!(wd.d_ps(NodeId(1), NodeId(2)), Some(16.0));
        assert_eq!(wd.w(NodeId(2), NodeId(1)), None);
        assert!(build_constraints(&wd, 100.0).is_empty());
        let r = check_feasibility(&g, &TimingConstraintSet::empty(0.0));
        assert_eq!(r.witness, Some(vec![0; g.nodes.len()]));
    }
}
