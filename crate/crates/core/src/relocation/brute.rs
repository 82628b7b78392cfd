use super::{RelocationError, RelocationProblem, RelocationSolution};
use crate::timing::{difference_constraints, DiffConstraint};

pub const BRUTE_FORCE_MAX_NODES: usize = 12;

/// Total registers plus node count; comfortably covers every optimum.
pub fn default_bound(p: &RelocationProblem) -> i64 {
    p.graph.edges.iter().map(|e| i64::from(e.w)).sum::<i64>() + p.graph.nodes.len() as i64
}

struct Search<'a> {
    cons: &'a [DiffConstraint],
    weight: &'a [i64],
    order: Vec<usize>,
    bound: i64,
    best: Option<(i64, i64, Vec<i64>)>,
}

impl Search<'_> {
    /// Tightest `[lo, hi]` per node given the fixed values, or `None` if no
    /// completion exists inside the box.
    fn propagate(&self, fixed: &[Option<i64>]) -> Option<(Vec<i64>, Vec<i64>)> {
        let n = fixed.len();
        let mut lo: Vec<i64> = fixed.iter().map(|f| f.unwrap_or(-self.bound)).collect();
        let mut hi: Vec<i64> = fixed.iter().map(|f| f.unwrap_or(self.bound)).collect();
        let mut settled = false;
        for _ in 0..=n + 1 {
            let mut changed = false;
            for c in self.cons {
                let (a, b) = (c.from.0, c.to.0);
                if hi[a] + c.bound < hi[b] {
                    hi[b] = hi[a] + c.bound;
                    changed = true;
                }
                if lo[b] - c.bound > lo[a] {
                    lo[a] = lo[b] - c.bound;
                    changed = true;
                }
            }
            if (0..n).any(|v| lo[v] > hi[v]) {
                return None;
            }
            if !changed {
                settled = true;
                break;
            }
        }
        settled.then_some((lo, hi))
    }

    fn descend(&mut self, depth: usize, fixed: &mut Vec<Option<i64>>) {
        let Some((lo, hi)) = self.propagate(fixed) else {
            return;
        };
        let mut obj_lb = 0;
        let mut abs_lb = 0;
        for v in 0..fixed.len() {
            let c = self.weight[v];
            obj_lb += (c * lo[v]).min(c * hi[v]);
            abs_lb += if lo[v] <= 0 && hi[v] >= 0 {
                0
            } else {
                lo[v].abs().min(hi[v].abs())
            };
        }
        if let Some((bo, ba, _)) = &self.best {
            if (obj_lb, abs_lb) >= (*bo, *ba) {
                return;
            }
        }
        let Some(&v) = self.order.get(depth) else {
            let x: Vec<i64> = fixed.iter().map(|f| f.expect("all fixed")).collect();
            self.best = Some((obj_lb, abs_lb, x));
            return;
        };
        for val in lo[v]..=hi[v] {
            fixed[v] = Some(val);
            self.descend(depth + 1, fixed);
        }
        fixed[v] = None;
    }
}

/// Exhaustive search over `Δs ∈ [−bound, bound]` for every non-boundary
/// node. Returns the same optimum the flow solver is specified to return:
/// least capacity, then least `Σ|Δs|`, then lexicographically smallest.
pub fn brute_force_solve(
    p: &RelocationProblem,
    bound: i64,
) -> Result<RelocationSolution, RelocationError> {
    let n = p.graph.nodes.len();
    let mut fixed: Vec<Option<i64>> = vec![None; n];
    for b in &p.boundary {
        fixed[b.0] = Some(0);
    }
    let order: Vec<usize> = (0..n).filter(|&v| fixed[v].is_none()).collect();
    if order.len() > BRUTE_FORCE_MAX_NODES {
        return Err(RelocationError::TooLarge {
            nodes: order.len(),
            max: BRUTE_FORCE_MAX_NODES,
        });
    }
    let cons = difference_constraints(&p.graph, &p.constraints);
    let mut search = Search {
        cons: &cons,
        weight: &p.node_weight,
        order,
        bound,
        best: None,
    };
    search.descend(0, &mut fixed);
    let (objective, _, delta_s) = search
        .best
        .ok_or(RelocationError::Infeasible { cycle: Vec::new() })?;
    Ok(RelocationSolution {
        delta_s,
        objective,
        target_ps: p.constraints.target_ps,
    })
}
