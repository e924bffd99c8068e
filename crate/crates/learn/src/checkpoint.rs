//! Binary training snapshot.
//!
//! Layout: an 8-byte little-endian header length, a JSON header naming every
//! block with its shape, then all blocks as little-endian `f64` in header
//! order. Network weights are row-major `outputs × inputs` followed by the
//! biases, layer by layer.

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use flexlink_core::beam::BeamParams;

use crate::config::SacConfig;
use crate::nn::{Adam, Mlp};
use crate::replay::{ReplayBuffer, Transition};
use crate::sac::Agent;

pub const FORMAT: &str = "flexlink-sac";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint i/o: {0}")]
    Io(#[from] io::Error),
    #[error("malformed checkpoint: {0}")]
    Format(String),
}

fn bad(msg: impl Into<String>) -> CheckpointError {
    CheckpointError::Format(msg.into())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Block {
    name: String,
    /// Layer sizes for networks, `[rows, width]` for tables, `[len]` otherwise.
    shape: Vec<usize>,
    len: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct OptHeader {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: u64,
}

impl From<&Adam> for OptHeader {
    fn from(a: &Adam) -> Self {
        Self { lr: a.lr, beta1: a.beta1, beta2: a.beta2, eps: a.eps, step: a.step }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    config: SacConfig,
    nominal: BeamParams,
    seed: u64,
    episode: usize,
    total_steps: u64,
    updates: u64,
    temperature: f64,
    optimizers: Vec<OptHeader>,
    replay_capacity: usize,
    replay_head: usize,
    note: String,
    blocks: Vec<Block>,
}

/// Everything needed to resume training or run the planner.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: SacConfig,
    /// Nominal plant the environment perturbs.
    pub nominal: BeamParams,
    pub seed: u64,
    /// Episodes completed.
    pub episode: usize,
    /// Environment steps taken.
    pub total_steps: u64,
    pub agent: Agent,
    pub buffer: ReplayBuffer,
    /// Free-form provenance (config hash and the like).
    pub note: String,
}

const OPT_NAMES: [&str; 4] = ["policy_opt", "q1_opt", "q2_opt", "temperature_opt"];

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let a = &self.agent;
        let nets: [(&str, &Mlp); 5] = [("policy", &a.policy), ("q1", &a.q1), ("q2", &a.q2), ("q1_target", &a.q1_target), ("q2_target", &a.q2_target)];
        let opts: [&Adam; 4] = [&a.policy_opt, &a.q1_opt, &a.q2_opt, &a.temperature_opt];
        let mut blocks = Vec::new();
        let mut payload: Vec<f64> = Vec::new();
        for (name, net) in nets {
            blocks.push(Block { name: name.into(), shape: net.sizes().to_vec(), len: net.num_params() });
            payload.extend_from_slice(net.params());
        }
        for (name, opt) in OPT_NAMES.iter().zip(opts) {
            for (suffix, v) in [("m", &opt.m), ("v", &opt.v)] {
                blocks.push(Block { name: format!("{name}.{suffix}"), shape: vec![v.len()], len: v.len() });
                payload.extend_from_slice(v);
            }
        }
        let rows = self.buffer.len();
        let start = payload.len();
        for t in self.buffer.items() {
            t.to_row(&mut payload);
        }
        blocks.push(Block { name: "replay".into(), shape: vec![rows, Transition::WIDTH], len: payload.len() - start });

        let header = Header {
            format: FORMAT.into(),
            version: VERSION,
            config: self.config.clone(),
            nominal: self.nominal,
            seed: self.seed,
            episode: self.episode,
            total_steps: self.total_steps,
            updates: a.updates,
            temperature: a.temperature,
            optimizers: opts.iter().map(|o| OptHeader::from(*o)).collect(),
            replay_capacity: self.buffer.capacity(),
            replay_head: self.buffer.head(),
            note: self.note.clone(),
            blocks,
        };
        let json = serde_json::to_vec(&header).expect("header serializes");
        let mut out = Vec::with_capacity(8 + json.len() + 8 * payload.len());
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for v in payload {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CheckpointError> {
        let head_len = u64::from_le_bytes(bytes.get(..8).ok_or_else(|| bad("truncated length prefix"))?.try_into().unwrap()) as usize;
        let json = bytes.get(8..8usize.checked_add(head_len).ok_or_else(|| bad("header length overflow"))?).ok_or_else(|| bad("truncated header"))?;
        let h: Header = serde_json::from_slice(json).map_err(|e| bad(format!("header: {e}")))?;
        if h.format != FORMAT || h.version != VERSION {
            return Err(bad(format!("unsupported format {} v{}", h.format, h.version)));
        }
        let body = &bytes[8 + head_len..];
        if body.len() % 8 != 0 {
            return Err(bad("payload is not a whole number of f64"));
        }
        let mut values = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
        let mut take = |b: &Block| -> Result<Vec<f64>, CheckpointError> {
            let v: Vec<f64> = values.by_ref().take(b.len).collect();
            if v.len() != b.len {
                return Err(bad(format!("block {} truncated", b.name)));
            }
            Ok(v)
        };
        let mut blocks = h.blocks.iter();
        let mut next = |name: &str| blocks.next().filter(|b| b.name == name).ok_or_else(|| bad(format!("expected block {name}")));

        let mut nets = Vec::new();
        for name in ["policy", "q1", "q2", "q1_target", "q2_target"] {
            let b = next(name)?;
            nets.push(Mlp::from_params(&b.shape, take(b)?).map_err(|e| bad(format!("{name}: {e}")))?);
        }
        if h.optimizers.len() != OPT_NAMES.len() {
            return Err(bad("optimizer count"));
        }
        let mut opts = Vec::new();
        for (name, oh) in OPT_NAMES.iter().zip(&h.optimizers) {
            let m = take(next(&format!("{name}.m"))?)?;
            let v = take(next(&format!("{name}.v"))?)?;
            if m.len() != v.len() {
                return Err(bad(format!("{name}: moment lengths differ")));
            }
            opts.push(Adam { lr: oh.lr, beta1: oh.beta1, beta2: oh.beta2, eps: oh.eps, step: oh.step, m, v });
        }
        let b = next("replay")?;
        if b.shape.len() != 2 || b.shape[1] != Transition::WIDTH || b.len != b.shape[0] * Transition::WIDTH {
            return Err(bad("replay shape"));
        }
        let rows = take(b)?;
        let items: Vec<Transition> = rows.chunks_exact(Transition::WIDTH).map(Transition::from_row).collect();
        if items.len() > h.replay_capacity || h.replay_head >= h.replay_capacity.max(1) {
            return Err(bad("replay exceeds its capacity"));
        }
        if values.next().is_some() {
            return Err(bad("trailing payload"));
        }
        let mut nets = nets.into_iter();
        let mut opts = opts.into_iter();
        let mut n = || nets.next().unwrap();
        let mut o = || opts.next().unwrap();
        let agent = Agent {
            policy: n(),
            q1: n(),
            q2: n(),
            q1_target: n(),
            q2_target: n(),
            policy_opt: o(),
            q1_opt: o(),
            q2_opt: o(),
            temperature_opt: o(),
            temperature: h.temperature,
            updates: h.updates,
        };
        if agent.policy_opt.m.len() != agent.policy.num_params() || agent.q1_opt.m.len() != agent.q1.num_params() || agent.q2_opt.m.len() != agent.q2.num_params() {
            return Err(bad("optimizer state does not match its network"));
        }
        Ok(Self {
            config: h.config,
            nominal: h.nominal,
            seed: h.seed,
            episode: h.episode,
            total_steps: h.total_steps,
            agent,
            buffer: ReplayBuffer::restore(h.replay_capacity, items, h.replay_head),
            note: h.note,
        })
    }

    /// Writes via a temporary sibling and a rename, so a crash never leaves
    /// a half-written checkpoint under `path`.
    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, self.to_bytes())?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        Self::from_bytes(&fs::read(path)?)
    }
}
