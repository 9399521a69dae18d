//! Network checkpoints.
//!
//! A checkpoint is one file: an 8-byte little-endian header length, a JSON
//! header of that many bytes, then every weight matrix followed by every
//! bias vector as little-endian `f64`. The header records where each array
//! starts (in `f64` units from the start of the data block) and the problem
//! the network was trained for.

use std::path::Path;

use ehjb_core::MlpParams;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RunError};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayRef {
    pub offset: usize,
    pub shape: Vec<usize>,
}

/// The problem a network solves. Langevin runs refuse checkpoints whose
/// metadata does not match their config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemMeta {
    pub benchmark: String,
    pub dim: usize,
    pub rho: f64,
    pub lambda: f64,
    pub u_min: f64,
    pub u_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub format_version: u32,
    pub layer_sizes: Vec<usize>,
    pub seed: u64,
    pub weights: Vec<ArrayRef>,
    pub biases: Vec<ArrayRef>,
    pub problem: ProblemMeta,
}

pub fn encode(params: &MlpParams, problem: &ProblemMeta) -> Vec<u8> {
    let sizes = params.layer_sizes();
    let mut offset = 0;
    let mut weights = Vec::new();
    for pair in sizes.windows(2) {
        weights.push(ArrayRef { offset, shape: vec![pair[1], pair[0]] });
        offset += pair[0] * pair[1];
    }
    let mut biases = Vec::new();
    for &n in &sizes[1..] {
        biases.push(ArrayRef { offset, shape: vec![n] });
        offset += n;
    }
    let header = Header {
        format_version: FORMAT_VERSION,
        layer_sizes: sizes.to_vec(),
        seed: params.seed(),
        weights,
        biases,
        problem: problem.clone(),
    };
    let json = serde_json::to_vec(&header).expect("header is serializable");
    let mut out = Vec::with_capacity(8 + json.len() + 8 * offset);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for v in params.weights().iter().chain(params.biases()).flatten() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<(MlpParams, ProblemMeta)> {
    let bad = |m: &str| RunError::Config(format!("malformed checkpoint: {m}"));
    if bytes.len() < 8 {
        return Err(bad("truncated length prefix"));
    }
    let len = u64::from_le_bytes(bytes[..8].try_into().unwrap()) as usize;
    let rest = &bytes[8..];
    if len > rest.len() {
        return Err(bad("truncated header"));
    }
    let header: Header = serde_json::from_slice(&rest[..len]).map_err(|e| bad(&e.to_string()))?;
    if header.format_version != FORMAT_VERSION {
        return Err(bad(&format!("unsupported format_version {}", header.format_version)));
    }
    let data = &rest[len..];
    if data.len() % 8 != 0 {
        return Err(bad("data block is not a whole number of f64 values"));
    }
    let values: Vec<f64> = data.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    let slice = |a: &ArrayRef| -> Result<Vec<f64>> {
        let n: usize = a.shape.iter().product();
        values
            .get(a.offset..a.offset + n)
            .map(<[f64]>::to_vec)
            .ok_or_else(|| bad("array extends past the data block"))
    };
    let weights = header.weights.iter().map(slice).collect::<Result<Vec<_>>>()?;
    let biases = header.biases.iter().map(slice).collect::<Result<Vec<_>>>()?;
    let params = MlpParams::from_parts(header.layer_sizes, weights, biases, header.seed)?;
    Ok((params, header.problem))
}

pub fn save(path: &Path, params: &MlpParams, problem: &ProblemMeta) -> Result<()> {
    std::fs::write(path, encode(params, problem)).map_err(RunError::io(path))
}

pub fn load(path: &Path) -> Result<(MlpParams, ProblemMeta)> {
    let bytes = std::fs::read(path).map_err(RunError::io(path))?;
    decode(&bytes)
}
