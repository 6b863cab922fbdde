//! Synthetic data, bias injection and the k-fold validation protocol, plus
//! the two comparison estimators it needs (propensity stratification and a
//! bagged-tree black box).

mod bias;
mod calders;
mod experiment;
mod simulate;
mod trees;

pub use bias::{inject_bias, BiasSpec};
pub use calders::{calders_baseline, calders_predict};
pub use experiment::{
    kfold_validate, ExperimentConfig, ExperimentTable, Method, MethodSummary, Metric,
};
pub use simulate::{
    gen_dag, gen_simple_example, gen_wine_like, DagSpec, Fairness, Simulated, WineLikeSpec,
};
pub use trees::{bagged_tree_predict, BaggedTrees, TreeConfig};

/// splitmix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-task seed: `master ^ mix(repetition, fold, tag)`.
pub fn derive_seed(master: u64, repetition: u64, fold: u64, tag: u64) -> u64 {
    master ^ mix64(mix64(mix64(tag) ^ repetition) ^ fold)
}

pub(crate) const TAG_BIAS: u64 = 1;
pub(crate) const TAG_FOLDS: u64 = 2;
pub(crate) const TAG_TREES: u64 = 3;

pub(crate) fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}
