//! Cube files: a JSON sidecar `<name>.json` next to a raw payload `<name>.bin`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{CubeGeometry, HsiCube};
use crate::error::{Error, Result};

pub const ORDER: &str = "x-fastest,band-major";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PayloadType {
    F32Le,
    F64Le,
}

impl PayloadType {
    pub fn tag(self) -> &'static str {
        match self {
            PayloadType::F32Le => "f32le",
            PayloadType::F64Le => "f64le",
        }
    }

    fn width(self) -> usize {
        match self {
            PayloadType::F32Le => 4,
            PayloadType::F64Le => 8,
        }
    }

    fn parse(tag: &str) -> Result<Self> {
        match tag {
            "f32le" => Ok(PayloadType::F32Le),
            "f64le" => Ok(PayloadType::F64Le),
            other => Err(Error::format("dtype", format!("unsupported dtype {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CubeHeader {
    pub nx: usize,
    pub ny: usize,
    pub nl: usize,
    pub wavelengths_nm: Vec<f64>,
    pub dtype: String,
    pub order: String,
}

fn paths(path: &Path) -> (PathBuf, PathBuf) {
    (path.with_extension("json"), path.with_extension("bin"))
}

/// Writes `cube` as little-endian f32, the interchange default.
pub fn save_cube(cube: &HsiCube, path: impl AsRef<Path>) -> Result<()> {
    save_cube_as(cube, path, PayloadType::F32Le)
}

pub fn save_cube_as(cube: &HsiCube, path: impl AsRef<Path>, dtype: PayloadType) -> Result<()> {
    let (json_path, bin_path) = paths(path.as_ref());
    let header = CubeHeader {
        nx: cube.nx(),
        ny: cube.ny(),
        nl: cube.nl(),
        wavelengths_nm: cube.wavelengths().to_vec(),
        dtype: dtype.tag().to_string(),
        order: ORDER.to_string(),
    };
    let json = serde_json::to_string_pretty(&header).expect("header serializes");
    fs::write(&json_path, json).map_err(|e| Error::io(&json_path, e))?;

    let mut bytes = Vec::with_capacity(cube.data().len() * dtype.width());
    match dtype {
        PayloadType::F32Le => cube
            .data()
            .iter()
            .for_each(|v| bytes.extend_from_slice(&(*v as f32).to_le_bytes())),
        PayloadType::F64Le => cube
            .data()
            .iter()
            .for_each(|v| bytes.extend_from_slice(&v.to_le_bytes())),
    }
    fs::write(&bin_path, bytes).map_err(|e| Error::io(&bin_path, e))
}

pub fn load_cube(path: impl AsRef<Path>) -> Result<HsiCube> {
    let (json_path, bin_path) = paths(path.as_ref());
    let text = fs::read_to_string(&json_path).map_err(|e| Error::io(&json_path, e))?;
    let header: CubeHeader =
        serde_json::from_str(&text).map_err(|e| Error::format("header", e.to_string()))?;

    if header.wavelengths_nm.len() != header.nl {
        return Err(Error::format(
            "wavelengths_nm",
            format!(
                "header declares nl = {} but lists {} wavelengths",
                header.nl,
                header.wavelengths_nm.len()
            ),
        ));
    }
    if header.order != ORDER {
        return Err(Error::format(
            "order",
            format!("expected {ORDER:?}, found {:?}", header.order),
        ));
    }
    let dtype = PayloadType::parse(&header.dtype)?;
    let geom = CubeGeometry::new(header.nx, header.ny, header.wavelengths_nm.clone())
        .map_err(|e| Error::format("wavelengths_nm", e.to_string()))?;

    let bytes = fs::read(&bin_path).map_err(|e| Error::io(&bin_path, e))?;
    let expected = geom.len() * dtype.width();
    if bytes.len() != expected {
        return Err(Error::format(
            "payload",
            format!(
                "payload size is {} bytes, expected nx·ny·nl·{} = {expected}",
                bytes.len(),
                dtype.width()
            ),
        ));
    }
    let data: Vec<f64> = match dtype {
        PayloadType::F32Le => bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect(),
        PayloadType::F64Le => bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
    };
    if let Some(i) = data.iter().position(|v| !v.is_finite()) {
        return Err(Error::format("payload", format!("sample {i} is not finite")));
    }
    HsiCube::from_estimate(geom, data).map_err(|e| Error::format("payload", e.to_string()))
}
