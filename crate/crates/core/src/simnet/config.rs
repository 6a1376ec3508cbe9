use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::ids::{NodeId, Ticks};

/// One-way latency distribution of a link, in ticks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum LatencyModel {
    Fixed { ticks: Ticks },
    Uniform { lo: Ticks, hi: Ticks },
    /// Rounded to the nearest tick and truncated at zero.
    Normal { mean: f64, sigma: f64 },
}

impl Default for LatencyModel {
    fn default() -> Self {
        LatencyModel::Normal {
            mean: 120.0,
            sigma: 30.0,
        }
    }
}

impl LatencyModel {
    pub fn validate(&self) -> Result<(), String> {
        match *self {
            LatencyModel::Fixed { .. } => Ok(()),
            LatencyModel::Uniform { lo, hi } if lo > hi => {
                Err(format!("uniform latency needs lo <= hi, got {lo} > {hi}"))
            }
            LatencyModel::Uniform { .. } => Ok(()),
            LatencyModel::Normal { mean, sigma } => {
                if !(mean.is_finite() && mean >= 0.0) {
                    Err(format!("normal latency mean must be finite and >= 0, got {mean}"))
                } else if !(sigma.is_finite() && sigma >= 0.0) {
                    Err(format!("normal latency sigma must be finite and >= 0, got {sigma}"))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Smallest latency the model can produce.
    pub fn min_ticks(&self) -> Ticks {
        match *self {
            LatencyModel::Fixed { ticks } => ticks,
            LatencyModel::Uniform { lo, .. } => lo,
            LatencyModel::Normal { .. } => 0,
        }
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Ticks {
        match *self {
            LatencyModel::Fixed { ticks } => ticks,
            LatencyModel::Uniform { lo, hi } => rng.random_range(lo..=hi),
            LatencyModel::Normal { mean, sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                (mean + sigma * z).round().max(0.0) as Ticks
            }
        }
    }
}

/// Latency override for the directed link `from -> to`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkLatency {
    pub from: NodeId,
    pub to: NodeId,
    pub latency: LatencyModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetConfig {
    /// Model for every link without an override.
    pub latency: LatencyModel,
    pub links: Vec<LinkLatency>,
    pub loss_probability: f64,
    pub seed: u64,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            latency: LatencyModel::default(),
            links: Vec::new(),
            loss_probability: 0.0,
            seed: 0,
        }
    }
}

impl NetConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.latency.validate()?;
        for l in &self.links {
            l.latency
                .validate()
                .map_err(|e| format!("link {} -> {}: {e}", l.from, l.to))?;
        }
        if !(0.0..=1.0).contains(&self.loss_probability) {
            return Err(format!(
                "loss_probability must lie in [0, 1], got {}",
                self.loss_probability
            ));
        }
        Ok(())
    }

    pub fn link(&self, from: &NodeId, to: &NodeId) -> &LatencyModel {
        self.links
            .iter()
            .rev()
            .find(|l| &l.from == from && &l.to == to)
            .map_or(&self.latency, |l| &l.latency)
    }
}
