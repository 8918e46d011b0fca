//! Versioned binary checkpoint: magic, version, JSON header, then little-endian f64s.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::distribution::ACTION_DIM;
use super::network::Mlp;
use super::normalizer::ObsNormalizer;
use super::params::PolicyParams;
use crate::agent::OBS_DIM;
use crate::error::PolicyError;

const MAGIC: &[u8; 8] = b"LOBMCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    hidden_width: usize,
    actor_sizes: Vec<usize>,
    critic_sizes: Vec<usize>,
    config_hash: String,
}

/// Everything needed to resume or evaluate a trained policy.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: PolicyParams,
    pub normalizer: ObsNormalizer,
    pub config_hash: String,
}

fn put(out: &mut Vec<u8>, xs: &[f64]) {
    for x in xs {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let header = Header {
            hidden_width: self.params.hidden_width(),
            actor_sizes: self.params.actor.sizes().to_vec(),
            critic_sizes: self.params.critic.sizes().to_vec(),
            config_hash: self.config_hash.clone(),
        };
        let json = serde_json::to_vec(&header).expect("header serialises");
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        put(&mut out, self.params.actor.params());
        put(&mut out, &self.params.log_std);
        put(&mut out, self.params.critic.params());
        put(&mut out, &[self.normalizer.count]);
        put(&mut out, &self.normalizer.mean);
        put(&mut out, &self.normalizer.m2);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, PolicyError> {
        let bad = |m: &str| PolicyError::Checkpoint(m.to_string());
        if bytes.len() < 20 || &bytes[..8] != MAGIC {
            return Err(bad("not a checkpoint file"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != CHECKPOINT_VERSION {
            return Err(PolicyError::Checkpoint(format!("unsupported version {version}")));
        }
        let hlen = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
        let body = bytes.get(20..).ok_or_else(|| bad("truncated"))?;
        let json = body.get(..hlen).ok_or_else(|| bad("truncated header"))?;
        let header: Header =
            serde_json::from_slice(json).map_err(|e| PolicyError::Checkpoint(format!("header: {e}")))?;
        let h = header.hidden_width;
        if header.actor_sizes != [OBS_DIM, h, h, ACTION_DIM] || header.critic_sizes != [OBS_DIM, h, h, 1] {
            return Err(bad("layer shapes do not match the 11-input actor-critic"));
        }
        let floats = &body[hlen..];
        if floats.len() % 8 != 0 {
            return Err(bad("payload is not a whole number of f64 values"));
        }
        let values: Vec<f64> = floats.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        let n_actor = Mlp::zeros(&header.actor_sizes).params().len();
        let n_critic = Mlp::zeros(&header.critic_sizes).params().len();
        let expected = n_actor + ACTION_DIM + n_critic + 1 + 2 * OBS_DIM;
        if values.len() != expected {
            return Err(PolicyError::Checkpoint(format!("expected {expected} values, found {}", values.len())));
        }
        let (a, rest) = values.split_at(n_actor);
        let (ls, rest) = rest.split_at(ACTION_DIM);
        let (c, rest) = rest.split_at(n_critic);
        let params = PolicyParams {
            actor: Mlp::from_params(&header.actor_sizes, a.to_vec()).ok_or_else(|| bad("actor size"))?,
            log_std: [ls[0], ls[1]],
            critic: Mlp::from_params(&header.critic_sizes, c.to_vec()).ok_or_else(|| bad("critic size"))?,
        };
        let normalizer = ObsNormalizer {
            count: rest[0],
            mean: rest[1..1 + OBS_DIM].try_into().unwrap(),
            m2: rest[1 + OBS_DIM..].try_into().unwrap(),
        };
        Ok(Checkpoint { params, normalizer, config_hash: header.config_hash })
    }

    pub fn save(&self, path: &Path) -> Result<(), PolicyError> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, PolicyError> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}
