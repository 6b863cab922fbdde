//! Bootstrap-bagged regression trees on quantile-binned features.

use rand::Rng;
use rayon::prelude::*;

use super::{derive_seed, rng, TAG_TREES};
use crate::dataset::EncodedDesign;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeConfig {
    pub trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Histogram bins per feature, at most 256.
    pub bins: usize,
    /// Resample rows with replacement per tree; off trains every tree on all rows.
    pub bootstrap: bool,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            trees: 50,
            max_depth: 8,
            min_leaf: 5,
            bins: 32,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        /// Rows with bin `<= threshold` go left.
        threshold: u8,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, x: &[Vec<u8>], i: usize) -> f64 {
        let mut k = 0;
        loop {
            match &self.nodes[k] {
                Node::Leaf(v) => return *v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => k = if x[*feature][i] <= *threshold { *left } else { *right },
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct BaggedTrees {
    cuts: Vec<Vec<f64>>,
    trees: Vec<Tree>,
    oob: Vec<f64>,
}

/// Column-major binned copy of `features`.
fn binned(features: &Matrix, cuts: &[Vec<f64>]) -> Vec<Vec<u8>> {
    features
        .columns()
        .zip(cuts)
        .map(|(col, c)| {
            col.iter()
                .map(|&v| c.partition_point(|&t| t < v) as u8)
                .collect()
        })
        .collect()
}

struct Grower<'a> {
    x: &'a [Vec<u8>],
    y: &'a [f64],
    n_bins: Vec<usize>,
    config: TreeConfig,
    nodes: Vec<Node>,
}

impl Grower<'_> {
    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let n = idx.len() as f64;
        let total: f64 = idx.iter().map(|&i| self.y[i]).sum();
        let me = self.nodes.len();
        self.nodes.push(Node::Leaf(total / n));
        if depth >= self.config.max_depth || idx.len() < 2 * self.config.min_leaf {
            return me;
        }

        let base = total * total / n;
        let mut best: Option<(f64, usize, u8)> = None;
        for (f, &nb) in self.n_bins.iter().enumerate() {
            if nb < 2 {
                continue;
            }
            let mut count = vec![0usize; nb];
            let mut sum = vec![0.0; nb];
            let xf = &self.x[f];
            for &i in &idx {
                let b = xf[i] as usize;
                count[b] += 1;
                sum[b] += self.y[i];
            }
            let (mut cl, mut sl) = (0usize, 0.0);
            for b in 0..nb - 1 {
                cl += count[b];
                sl += sum[b];
                let cr = idx.len() - cl;
                if cl < self.config.min_leaf || cr < self.config.min_leaf {
                    continue;
                }
                let sr = total - sl;
                let gain = sl * sl / cl as f64 + sr * sr / cr as f64 - base;
                if gain > 1e-12 && best.is_none_or(|(g, ..)| gain > g) {
                    best = Some((gain, f, b as u8));
                }
            }
        }

        if let Some((_, feature, threshold)) = best {
            let (l, r): (Vec<usize>, Vec<usize>) =
                idx.into_iter().partition(|&i| self.x[feature][i] <= threshold);
            let left = self.grow(l, depth + 1);
            let right = self.grow(r, depth + 1);
            self.nodes[me] = Node::Split {
                feature,
                threshold,
                left,
                right,
            };
        }
        me
    }
}

impl BaggedTrees {
    pub fn fit(features: &Matrix, y: &[f64], config: TreeConfig, seed: u64) -> Result<Self> {
        let n = features.rows();
        if n == 0 || y.is_empty() {
            return Err(Error::EmptyDesign("no training rows for the trees".into()));
        }
        if y.len() != n {
            return Err(Error::dim("tree response", n, y.len()));
        }
        if config.trees == 0 || !(2..=256).contains(&config.bins) {
            return Err(Error::Config(
                "need at least one tree and between 2 and 256 bins".into(),
            ));
        }

        let cuts: Vec<Vec<f64>> = features
            .columns()
            .map(|col| {
                let mut s = col.to_vec();
                s.sort_by(f64::total_cmp);
                let mut c: Vec<f64> = (1..config.bins)
                    .map(|k| s[k * n / config.bins])
                    .collect();
                c.dedup();
                c
            })
            .collect();
        let x = binned(features, &cuts);
        let n_bins: Vec<usize> = cuts.iter().map(|c| c.len() + 1).collect();

        let grown: Vec<(Tree, Vec<bool>)> = (0..config.trees)
            .into_par_iter()
            .map(|t| {
                let mut r = rng(derive_seed(seed, t as u64, 0, TAG_TREES));
                let mut in_bag = vec![false; n];
                let idx: Vec<usize> = if config.bootstrap {
                    let mut idx: Vec<usize> = (0..n)
                        .map(|_| {
                            let i = r.gen_range(0..n);
                            in_bag[i] = true;
                            i
                        })
                        .collect();
                    // sorted rows keep histogram passes cache friendly
                    idx.sort_unstable();
                    idx
                } else {
                    in_bag.fill(true);
                    (0..n).collect()
                };
                let mut g = Grower {
                    x: &x,
                    y,
                    n_bins: n_bins.clone(),
                    config,
                    nodes: Vec::new(),
                };
                g.grow(idx, 0);
                (Tree { nodes: g.nodes }, in_bag)
            })
            .collect();

        let mut oob = vec![0.0; n];
        for (i, o) in oob.iter_mut().enumerate() {
            let (mut s, mut k, mut all) = (0.0, 0usize, 0.0);
            for (tree, in_bag) in &grown {
                let v = tree.predict(&x, i);
                all += v;
                if !in_bag[i] {
                    s += v;
                    k += 1;
                }
            }
            *o = if k > 0 { s / k as f64 } else { all / grown.len() as f64 };
        }
        Ok(BaggedTrees {
            cuts,
            trees: grown.into_iter().map(|(t, _)| t).collect(),
            oob,
        })
    }

    pub fn predict(&self, features: &Matrix) -> Result<Vec<f64>> {
        if features.cols() != self.cuts.len() {
            return Err(Error::dim("tree features", self.cuts.len(), features.cols()));
        }
        let x = binned(features, &self.cuts);
        Ok((0..features.rows())
            .map(|i| {
                self.trees.iter().map(|t| t.predict(&x, i)).sum::<f64>() / self.trees.len() as f64
            })
            .collect())
    }

    /// Out-of-bag predictions for the training rows.
    pub fn oob_predictions(&self) -> &[f64] {
        &self.oob
    }
}

/// Fit on all covariate blocks of `train` (S included) and predict `test`.
pub fn bagged_tree_predict(
    train: &EncodedDesign,
    test: &EncodedDesign,
    trees: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let config = TreeConfig {
        trees,
        ..TreeConfig::default()
    };
    let forest = BaggedTrees::fit(&train.full_matrix(), &train.y, config, seed)?;
    forest.predict(&test.centered_with(&train.means)?.full_matrix())
}
