//! Self-describing binary file formats.
//!
//! Every file is a little-endian u32 header length, a JSON header carrying
//! the magic-version string `conesta/v1`, then the raw payload. Payload
//! scalars are little-endian: float64 for coefficients and features, uint8
//! for masks and labels. Volumes are stored x-fastest, matrices row-major.

use crate::conesta::{FitConstants, FitResult, RunRecord};
use crate::error::{ConestaError, Result};
use crate::grid::MaskedVolume;
use crate::model::Dataset;
use crate::penalties::PenaltyWeights;
use crate::synth::GroundTruth;
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

pub const MAGIC: &str = "conesta/v1";

#[derive(Debug, Serialize, Deserialize)]
struct MaskHeader {
    magic: String,
    kind: String,
    dims: [usize; 3],
    order: String,
    count: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct DatasetHeader {
    magic: String,
    kind: String,
    n: usize,
    p: usize,
    label_name: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelHeader {
    magic: String,
    kind: String,
    p: usize,
    weights: PenaltyWeights,
    target_eps: f64,
    seed: u64,
    constants: FitConstants,
    runs: Vec<RunRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TruthHeader {
    magic: String,
    kind: String,
    p: usize,
}

/// A fitted model as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub weights: PenaltyWeights,
    pub target_eps: f64,
    pub seed: u64,
    pub constants: FitConstants,
    pub runs: Vec<RunRecord>,
    pub beta: Vec<f64>,
}

impl ModelFile {
    pub fn from_fit(fit: &FitResult, weights: PenaltyWeights, target_eps: f64, seed: u64) -> Self {
        Self {
            weights,
            target_eps,
            seed,
            constants: fit.constants.clone(),
            runs: fit.runs.clone(),
            beta: fit.beta.clone(),
        }
    }
}

fn encode<H: Serialize>(header: &H, payload: &[u8]) -> Vec<u8> {
    let header_bytes = serde_json::to_vec(header).expect("headers serialize");
    let mut out = Vec::with_capacity(4 + header_bytes.len() + payload.len());
    out.extend_from_slice(&(header_bytes.len() as u32).to_le_bytes());
    out.extend_from_slice(&header_bytes);
    out.extend_from_slice(payload);
    out
}

fn decode<H: for<'de> Deserialize<'de>>(bytes: &[u8], kind: &str) -> Result<(H, Vec<u8>)> {
    if bytes.len() < 4 {
        return Err(ConestaError::CorruptHeader("file shorter than 4 bytes".into()));
    }
    let len = u32::from_le_bytes(bytes[..4].try_into().unwrap()) as usize;
    if bytes.len() < 4 + len {
        return Err(ConestaError::CorruptHeader(format!(
            "declared header length {len} exceeds file size"
        )));
    }
    let header_bytes = &bytes[4..4 + len];
    // check the magic before full deserialization so a version bump is
    // reported as such, not as a schema error
    let generic: serde_json::Value = serde_json::from_slice(header_bytes)
        .map_err(|e| ConestaError::CorruptHeader(e.to_string()))?;
    let magic = generic
        .get("magic")
        .and_then(|m| m.as_str())
        .ok_or_else(|| ConestaError::CorruptHeader("missing magic field".into()))?;
    if magic != MAGIC {
        if magic.starts_with("conesta/") {
            return Err(ConestaError::UnsupportedVersion(magic.to_string()));
        }
        return Err(ConestaError::CorruptHeader(format!("bad magic {magic:?}")));
    }
    let file_kind = generic.get("kind").and_then(|k| k.as_str()).unwrap_or("");
    if file_kind != kind {
        return Err(ConestaError::CorruptHeader(format!(
            "expected a {kind} file, found kind {file_kind:?}"
        )));
    }
    let header: H = serde_json::from_slice(header_bytes)
        .map_err(|e| ConestaError::CorruptHeader(e.to_string()))?;
    Ok((header, bytes[4 + len..].to_vec()))
}

fn expect_payload(payload: &[u8], expected: usize) -> Result<()> {
    if payload.len() != expected {
        return Err(ConestaError::TruncatedPayload {
            expected,
            got: payload.len(),
        });
    }
    Ok(())
}

fn f64s_to_bytes(values: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(values.len() * 8);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn bytes_to_f64s(bytes: &[u8]) -> Vec<f64> {
    bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect()
}

pub fn write_mask(path: &Path, vol: &MaskedVolume) -> Result<()> {
    let (nx, ny, nz) = vol.dims();
    let header = MaskHeader {
        magic: MAGIC.into(),
        kind: "mask".into(),
        dims: [nx, ny, nz],
        order: "x-fastest".into(),
        count: vol.voxel_count(),
    };
    let payload: Vec<u8> = vol.mask().iter().map(|&m| m as u8).collect();
    fs::write(path, encode(&header, &payload))?;
    Ok(())
}

pub fn read_mask(path: &Path) -> Result<MaskedVolume> {
    let bytes = fs::read(path)?;
    let (header, payload): (MaskHeader, _) = decode(&bytes, "mask")?;
    if header.order != "x-fastest" {
        return Err(ConestaError::CorruptHeader(format!(
            "unknown voxel order {:?}",
            header.order
        )));
    }
    let [nx, ny, nz] = header.dims;
    expect_payload(&payload, nx * ny * nz)?;
    let mask: Vec<bool> = payload.iter().map(|&b| b != 0).collect();
    let vol = MaskedVolume::new((nx, ny, nz), mask)?;
    if vol.voxel_count() != header.count {
        return Err(ConestaError::DimensionMismatch(format!(
            "header count {} but mask has {} set voxels",
            header.count,
            vol.voxel_count()
        )));
    }
    Ok(vol)
}

pub fn write_dataset(path: &Path, data: &Dataset) -> Result<()> {
    let header = DatasetHeader {
        magic: MAGIC.into(),
        kind: "dataset".into(),
        n: data.n_samples(),
        p: data.n_features(),
        label_name: "y".into(),
    };
    let mut payload = Vec::with_capacity(data.n_samples() * data.n_features() * 8 + data.n_samples());
    for row in data.x().rows() {
        for v in row {
            payload.extend_from_slice(&v.to_le_bytes());
        }
    }
    payload.extend_from_slice(data.labels());
    fs::write(path, encode(&header, &payload))?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let bytes = fs::read(path)?;
    let (header, payload): (DatasetHeader, _) = decode(&bytes, "dataset")?;
    let (n, p) = (header.n, header.p);
    expect_payload(&payload, n * p * 8 + n)?;
    let values = bytes_to_f64s(&payload[..n * p * 8]);
    let x = Array2::from_shape_vec((n, p), values)
        .map_err(|e| ConestaError::DimensionMismatch(e.to_string()))?;
    let y = payload[n * p * 8..].to_vec();
    Dataset::new(x, y)
}

pub fn write_model(path: &Path, model: &ModelFile) -> Result<()> {
    let header = ModelHeader {
        magic: MAGIC.into(),
        kind: "model".into(),
        p: model.beta.len(),
        weights: model.weights,
        target_eps: model.target_eps,
        seed: model.seed,
        constants: model.constants.clone(),
        runs: model.runs.clone(),
    };
    fs::write(path, encode(&header, &f64s_to_bytes(&model.beta)))?;
    Ok(())
}

pub fn read_model(path: &Path) -> Result<ModelFile> {
    let bytes = fs::read(path)?;
    let (header, payload): (ModelHeader, _) = decode(&bytes, "model")?;
    expect_payload(&payload, header.p * 8)?;
    Ok(ModelFile {
        weights: header.weights,
        target_eps: header.target_eps,
        seed: header.seed,
        constants: header.constants,
        runs: header.runs,
        beta: bytes_to_f64s(&payload),
    })
}

pub fn write_truth(path: &Path, truth: &GroundTruth) -> Result<()> {
    let header = TruthHeader {
        magic: MAGIC.into(),
        kind: "truth".into(),
        p: truth.beta_true.len(),
    };
    fs::write(path, encode(&header, &f64s_to_bytes(&truth.beta_true)))?;
    Ok(())
}

pub fn read_truth(path: &Path) -> Result<GroundTruth> {
    let bytes = fs::read(path)?;
    let (header, payload): (TruthHeader, _) = decode(&bytes, "truth")?;
    expect_payload(&payload, header.p * 8)?;
    let beta_true = bytes_to_f64s(&payload);
    let support = beta_true.iter().map(|&b| b != 0.0).collect();
    Ok(GroundTruth { support, beta_true })
}
