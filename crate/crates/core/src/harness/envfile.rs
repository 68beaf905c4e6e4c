//! TOML environment descriptions and the `gen:` shorthand.

use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{FeatureMap, LinearMdp, TabularMdp};

use super::generate::{catalog, generate_random_linear, generate_random_tabular};

/// A serializable environment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EnvSpec {
    /// Explicit tables; `transitions[h]` is laid out `[(x * A + a) * X + x']`
    /// and `rewards[h]` is laid out `[x * A + a]`.
    Tabular {
        states: usize,
        actions: usize,
        horizon: usize,
        #[serde(default)]
        initial_state: usize,
        transitions: Vec<Vec<f64>>,
        rewards: Vec<Vec<f64>>,
    },
    /// Explicit linear model; `features[x * A + a]`, `theta[h]`, `psi[h][x']`.
    Linear {
        dim: usize,
        states: usize,
        actions: usize,
        horizon: usize,
        #[serde(default)]
        initial_state: usize,
        features: Vec<Vec<f64>>,
        theta: Vec<Vec<f64>>,
        psi: Vec<Vec<Vec<f64>>>,
    },
    /// A seeded random linear MDP.
    Random { dim: usize, states: usize, actions: usize, horizon: usize, seed: u64 },
    /// A seeded random tabular MDP, one-hot encoded.
    RandomTabular { states: usize, actions: usize, horizon: usize, seed: u64 },
    /// A named catalog entry.
    Catalog { name: String },
}

impl EnvSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Parses `gen:<name>[:key=value,...]`.
    ///
    /// `<name>` is `random`, `random-tabular` or a catalog entry.
    pub fn from_generator(spec: &str) -> Result<Self> {
        let rest = spec
            .strip_prefix("gen:")
            .ok_or_else(|| Error::Config(format!("{spec:?} does not start with gen:")))?;
        let (name, args) = rest.split_once(':').unwrap_or((rest, ""));
        let mut pairs = std::collections::BTreeMap::new();
        for kv in args.split(',').filter(|s| !s.is_empty()) {
            let (k, v) = kv.split_once('=').ok_or_else(|| Error::Config(format!("expected key=value, got {kv:?}")))?;
            let v: u64 = v.parse().map_err(|_| Error::Config(format!("{k} = {v:?} is not a non-negative integer")))?;
            pairs.insert(k.to_string(), v);
        }
        let mut take = |key: &str, default: u64| pairs.remove(key).unwrap_or(default);
        let spec = match name {
            "random" => EnvSpec::Random {
                dim: take("d", 3) as usize,
                states: take("states", 5) as usize,
                actions: take("actions", 2) as usize,
                horizon: take("horizon", 3) as usize,
                seed: take("seed", 0),
            },
            "random-tabular" => EnvSpec::RandomTabular {
                states: take("states", 3) as usize,
                actions: take("actions", 2) as usize,
                horizon: take("horizon", 3) as usize,
                seed: take("seed", 0),
            },
            other => EnvSpec::Catalog { name: other.to_string() },
        };
        if let Some(k) = pairs.keys().next() {
            return Err(Error::Config(format!("unknown generator key {k:?} for {name}")));
        }
        Ok(spec)
    }

    /// Reads `source` as a `gen:` shorthand or as a path to a TOML file.
    pub fn resolve(source: &str) -> Result<Self> {
        if source.starts_with("gen:") {
            Self::from_generator(source)
        } else {
            Self::load(Path::new(source))
        }
    }

    /// Builds the model without checking normalization.
    pub fn build(&self) -> Result<LinearMdp> {
        match self {
            EnvSpec::Tabular { states, actions, horizon, initial_state, transitions, rewards } => Ok(TabularMdp::new(
                *states,
                *actions,
                *horizon,
                *initial_state,
                transitions.clone(),
                rewards.clone(),
            )?
            .one_hot_encode()),
            EnvSpec::Linear { dim, states, actions, horizon, initial_state, features, theta, psi } => {
                let vecs = |rows: &[Vec<f64>]| rows.iter().map(|r| DVector::from_column_slice(r)).collect::<Vec<_>>();
                let features = FeatureMap::new(*dim, *states, *actions, *horizon, *initial_state, vecs(features))?;
                if theta.iter().any(|t| t.len() != *dim) || psi.iter().flatten().any(|p| p.len() != *dim) {
                    return Err(Error::Config(format!("θ and ψ entries must have length {dim}")));
                }
                if theta.len() != *horizon || psi.len() != *horizon || psi.iter().any(|p| p.len() != *states) {
                    return Err(Error::Config("θ needs H rows and ψ needs H × |X| rows".into()));
                }
                LinearMdp::new(features, vecs(theta), psi.iter().map(|p| vecs(p)).collect())
            }
            EnvSpec::Random { dim, states, actions, horizon, seed } => {
                generate_random_linear(*dim, *states, *actions, *horizon, *seed)
            }
            EnvSpec::RandomTabular { states, actions, horizon, seed } => {
                Ok(generate_random_tabular(*states, *actions, *horizon, *seed)?.one_hot_encode())
            }
            EnvSpec::Catalog { name } => Ok(catalog(name)?.one_hot_encode()),
        }
    }

    /// The explicit tabular description of a tabular model.
    pub fn from_tabular(mdp: &TabularMdp) -> Self {
        EnvSpec::Tabular {
            states: mdp.n_states(),
            actions: mdp.n_actions(),
            horizon: mdp.horizon(),
            initial_state: mdp.initial_state(),
            transitions: mdp.transitions().to_vec(),
            rewards: mdp.rewards().to_vec(),
        }
    }

    /// The explicit linear description of any model.
    pub fn from_linear(mdp: &LinearMdp) -> Self {
        let f = mdp.features();
        let rows = |v: &[DVector<f64>]| v.iter().map(|x| x.as_slice().to_vec()).collect::<Vec<_>>();
        EnvSpec::Linear {
            dim: f.dim(),
            states: f.n_states(),
            actions: f.n_actions(),
            horizon: f.horizon(),
            initial_state: f.initial_state(),
            features: rows(f.all()),
            theta: rows(mdp.theta()),
            psi: mdp.psi().iter().map(|p| rows(p)).collect(),
        }
    }
}
