use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DelayError, DelayModel, DelaySample, OpFeatures};
use crate::ir::OpKind;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    /// Fraction of samples drawn (without replacement) for each tree.
    pub subsample: f64,
    pub min_leaf: usize,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            trees: 100,
            max_depth: 2,
            learning_rate: 0.1,
            subsample: 1.0,
            min_leaf: 1,
            seed: 0,
        }
    }
}

type NumericFeature = (fn(&OpFeatures) -> f64, fn(f64) -> Split);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "test", rename_all = "snake_case")]
pub enum Split {
    KindIs { kind: OpKind },
    OperandsLe { threshold: f64 },
    WidthLe { threshold: f64 },
}

impl Split {
    fn goes_left(&self, f: &OpFeatures) -> bool {
        match *self {
            Split::KindIs { kind } => f.kind == kind,
            Split::OperandsLe { threshold } => (f.operand_count as f64) <= threshold,
            Split::WidthLe { threshold } => f64::from(f.width.get()) <= threshold,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        value: f64,
    },
    Branch {
        split: Split,
        left: usize,
        right: usize,
    },
}

/// Regression tree stored as an arena; node 0 is the root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn eval(&self, f: &OpFeatures) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Branch { split, left, right } => {
                    at = if split.goes_left(f) { *left } else { *right };
                }
            }
        }
    }
}

/// Gradient-boosted tree ensemble under squared loss.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fitted {
    pub base: f64,
    pub learning_rate: f64,
    /// Kinds seen during training; others are rejected.
    pub kinds: Vec<OpKind>,
    pub trees: Vec<Tree>,
}

impl Fitted {
    pub fn predict(&self, f: &OpFeatures) -> Option<f64> {
        self.kinds.binary_search(&f.kind).ok()?;
        Some(self.base + self.learning_rate * self.trees.iter().map(|t| t.eval(f)).sum::<f64>())
    }
}

struct Builder<'a> {
    feats: &'a [OpFeatures],
    resid: &'a [f64],
    min_leaf: usize,
    max_depth: usize,
    nodes: Vec<TreeNode>,
}

impl Builder<'_> {
    fn best_split(&self, idx: &[usize]) -> Option<Split> {
        let total: f64 = idx.iter().map(|&i| self.resid[i]).sum();
        let n = idx.len() as f64;
        let parent = total * total / n;
        let score = |sl: f64, nl: usize| {
            let nr = idx.len() - nl;
            if nl < self.min_leaf || nr < self.min_leaf {
                return f64::NEG_INFINITY;
            }
            let sr = total - sl;
            sl * sl / nl as f64 + sr * sr / nr as f64 - parent
        };
        let mut best: Option<(f64, Split)> = None;
        let mut consider = |gain: f64, split: Split| {
            if gain > 1e-9 && best.is_none_or(|(g, _)| gain > g) {
                best = Some((gain, split));
            }
        };

        let mut kinds: Vec<OpKind> = idx.iter().map(|&i| self.feats[i].kind).collect();
        kinds.sort_unstable();
        kinds.dedup();
        if kinds.len() > 1 {
            for kind in kinds {
                let (sl, nl) = idx
                    .iter()
                    .filter(|&&i| self.feats[i].kind == kind)
                    .fold((0.0, 0), |(s, c), &i| (s + self.resid[i], c + 1));
                consider(score(sl, nl), Split::KindIs { kind });
            }
        }

        let numeric: [NumericFeature; 2] = [
            (
                |f| f.operand_count as f64,
                |t| Split::OperandsLe { threshold: t },
            ),
            (
                |f| f64::from(f.width.get()),
                |t| Split::WidthLe { threshold: t },
            ),
        ];
        for (key, make) in numeric {
            let mut sorted: Vec<(f64, f64)> = idx
                .iter()
                .map(|&i| (key(&self.feats[i]), self.resid[i]))
                .collect();
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut sl = 0.0;
            for k in 0..sorted.len() - 1 {
                sl += sorted[k].1;
                if sorted[k].0 < sorted[k + 1].0 {
                    consider(
                        score(sl, k + 1),
                        make((sorted[k].0 + sorted[k + 1].0) / 2.0),
                    );
                }
            }
        }
        best.map(|(_, s)| s)
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let at = self.nodes.len();
        let mean = idx.iter().map(|&i| self.resid[i]).sum::<f64>() / idx.len() as f64;
        self.nodes.push(TreeNode::Leaf { value: mean });
        if depth >= self.max_depth || idx.len() < 2 * self.min_leaf {
            return at;
        }
        let Some(split) = self.best_split(&idx) else {
            return at;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx
            .into_iter()
            .partition(|&i| split.goes_left(&self.feats[i]));
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[at] = TreeNode::Branch { split, left, right };
        at
    }
}

/// Fits a boosted ensemble starting from the sample mean.
pub fn fit(samples: &[DelaySample], cfg: &FitConfig) -> Result<DelayModel, DelayError> {
    if samples.len() < 2 {
        return Err(DelayError::TooFewSamples(samples.len()));
    }
    if let Some(index) = samples
        .iter()
        .position(|s| !(s.delay_ps.is_finite() && s.delay_ps >= 0.0))
    {
        return Err(DelayError::BadSample {
            index,
            reason: "delay must be a non-negative number".into(),
        });
    }
    let feats: Vec<OpFeatures> = samples.iter().map(|s| s.features).collect();
    let base = samples.iter().map(|s| s.delay_ps).sum::<f64>() / samples.len() as f64;
    let mut pred = vec![base; samples.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let per_tree = ((samples.len() as f64 * cfg.subsample.clamp(0.0, 1.0)).ceil() as usize)
        .clamp(1, samples.len());
    let mut trees = Vec::with_capacity(cfg.trees);
    for _ in 0..cfg.trees {
        let resid: Vec<f64> = samples
            .iter()
            .zip(&pred)
            .map(|(s, p)| s.delay_ps - p)
            .collect();
        let mut idx: Vec<usize> = if per_tree == samples.len() {
            (0..samples.len()).collect()
        } else {
            sample(&mut rng, samples.len(), per_tree).into_vec()
        };
        idx.sort_unstable();
        let mut b = Builder {
            feats: &feats,
            resid: &resid,
            min_leaf: cfg.min_leaf.max(1),
            max_depth: cfg.max_depth,
            nodes: Vec::new(),
        };
        b.grow(idx, 0);
        let tree = Tree { nodes: b.nodes };
        for (p, f) in pred.iter_mut().zip(&feats) {
            *p += cfg.learning_rate * tree.eval(f);
        }
        trees.push(tree);
    }
    let mut kinds: Vec<OpKind> = feats.iter().map(|f| f.kind).collect();
    kinds.sort_unstable();
    kinds.dedup();
    Ok(DelayModel::Fitted(Fitted {
        base,
        learning_rate: cfg.learning_rate,
        kinds,
        trees,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delay_model::mse;
    use crate::ir::bits;

    fn samples(f: impl Fn(OpKind, u32) -> f64) -> Vec<DelaySample> {
        let mut out = Vec::new();
        for kind in [OpKind::Add, OpKind::Mul] {
            for w in 1..=32 {
                out.push(DelaySample {
                    features: OpFeatures::new(kind, 2, bits(w)),
                    delay_ps: f(kind, w),
                });
            }
        }
        out
    }

    #[test]
    fn constant_target_is_reproduced() {
        let data = samples(|_, _| 42.0);
        let m = fit(&data, &FitConfig::default()).unwrap();
        for s in &data {
            assert!((m.predict(&s.features).unwrap() - 42.0).abs() < 1e-9);
        }
    }

    #[test]
    fn boosting_beats_the_mean_and_is_deterministic() {
        let data = samples(|k, w| {
            if k == OpKind::Mul {
                40.0 + 12.5 * f64::from(w)
            } else {
                20.0 + 8.0 * f64::from(w)
            }
        });
        let mean = data.iter().map(|s| s.delay_ps).sum::<f64>() / data.len() as f64;
        let baseline = data
            .iter()
            .map(|s| (s.delay_ps - mean).powi(2))
            .sum::<f64>()
            / data.len() as f64;
        let cfg = FitConfig {
            subsample: 0.7,
            seed: 9,
            ..FitConfig::default()
        };
        let m = fit(&data, &cfg).unwrap();
        assert!(mse(&m, &data).unwrap() < 0.05 * baseline);
        assert_eq!(fit(&data, &cfg).unwrap(), m);
        let back = DelayModel::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
        assert!(m
            .predict(&OpFeatures::new(OpKind::Xor, 2, bits(8)))
            .is_err());
    }

    #[test]
    fn too_few_samples() {
        assert!(matches!(
            fit(&[], &FitConfig::default()),
            Err(DelayError::TooFewSamples(0))
        ));
    }
}
