use rand::seq::index::sample;

use super::rng;
use crate::dataset::{Dataset, Schema};
use crate::error::{Error, Result};

/// Shift the response of an exact-size random subset of one group.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasSpec {
    pub target_group: String,
    /// Share of the group that is shifted; `round(fraction * size)` rows.
    pub fraction: f64,
    pub shift: f64,
    pub seed: u64,
}

impl BiasSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.fraction) {
            return Err(Error::Config(format!(
                "bias fraction must lie in [0, 1], got {}",
                self.fraction
            )));
        }
        if !self.shift.is_finite() {
            return Err(Error::Config("bias shift must be finite".into()));
        }
        Ok(())
    }
}

/// Row indices whose response the bias moves.
pub(crate) fn biased_rows(group_labels: &[String], spec: &BiasSpec) -> Result<Vec<usize>> {
    spec.validate()?;
    let members: Vec<usize> = group_labels
        .iter()
        .enumerate()
        .filter(|(_, g)| **g == spec.target_group)
        .map(|(i, _)| i)
        .collect();
    if members.is_empty() {
        return Err(Error::UnknownGroup(spec.target_group.clone()));
    }
    let k = (spec.fraction * members.len() as f64).round() as usize;
    let mut rng = rng(spec.seed);
    let mut picked: Vec<usize> = sample(&mut rng, members.len(), k)
        .into_iter()
        .map(|j| members[j])
        .collect();
    picked.sort_unstable();
    Ok(picked)
}

pub fn inject_bias(data: &Dataset, schema: &Schema, spec: &BiasSpec) -> Result<Dataset> {
    let response = &schema.response().name;
    let mut y = data.numeric(response)?.to_vec();
    for i in biased_rows(&data.group_labels(schema), spec)? {
        y[i] += spec.shift;
    }
    data.with_numeric(response, y)
}
