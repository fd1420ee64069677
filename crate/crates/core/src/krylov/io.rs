//! Factors file: a JSON manifest next to raw little-endian `f32` blocks.
//! Matrices are stored column by column (each vector contiguous).

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::LowRankFactors;
use crate::error::{Error, Result};
use crate::hsi::CubeGeometry;

#[derive(Debug, Serialize, Deserialize)]
struct Block {
    name: String,
    file: String,
    rows: usize,
    cols: usize,
    dtype: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    nx: Option<usize>,
    ny: Option<usize>,
    wavelengths_nm: Option<Vec<f64>>,
    target_rank: usize,
    iterations: usize,
    breakdowns: usize,
    blocks: Vec<Block>,
}

fn block_path(manifest: &Path, file: &str) -> PathBuf {
    manifest.parent().map(|d| d.join(file)).unwrap_or_else(|| PathBuf::from(file))
}

fn columns(vs: &[Vec<f64>], n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, vs.len(), |i, j| vs[j][i])
}

/// Writes `path` (the manifest) and `<stem>.<block>.f32` beside it.
pub fn save_factors(factors: &LowRankFactors, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::invalid(format!("bad factors path {}", path.display())))?;
    let nl = factors.v.nrows();
    let npix = factors.u.nrows();
    let l = factors.alphas.len();
    let blocks: Vec<(&str, DMatrix<f64>)> = vec![
        ("spectral_basis", columns(&factors.spectral_vectors, nl)),
        ("spatial_basis", columns(&factors.spatial_vectors, npix)),
        ("alphas", DMatrix::from_column_slice(l, 1, &factors.alphas)),
        ("betas", DMatrix::from_column_slice(factors.betas.len(), 1, &factors.betas)),
        ("sigma", DMatrix::from_column_slice(factors.sigma.len(), 1, &factors.sigma)),
        ("u", factors.u.clone()),
        ("v", factors.v.clone()),
    ];
    let mut entries = Vec::new();
    for (name, m) in &blocks {
        let file = format!("{stem}.{name}.f32");
        let bytes: Vec<u8> = m.iter().flat_map(|v| (*v as f32).to_le_bytes()).collect();
        let p = block_path(path, &file);
        fs::write(&p, bytes).map_err(|e| Error::io(&p, e))?;
        entries.push(Block {
            name: name.to_string(),
            file,
            rows: m.nrows(),
            cols: m.ncols(),
            dtype: "f32le".into(),
        });
    }
    let geom = factors.geometry.as_ref();
    let manifest = Manifest {
        nx: geom.map(|g| g.nx),
        ny: geom.map(|g| g.ny),
        wavelengths_nm: geom.map(|g| g.wavelengths.to_vec()),
        target_rank: factors.target_rank,
        iterations: factors.iterations,
        breakdowns: factors.breakdowns,
        blocks: entries,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Reads factors written by [`save_factors`]; values come back at `f32` precision.
pub fn load_factors(path: impl AsRef<Path>) -> Result<LowRankFactors> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| Error::format("manifest", e.to_string()))?;
    let get = |name: &str| -> Result<DMatrix<f64>> {
        let b = manifest
            .blocks
            .iter()
            .find(|b| b.name == name)
            .ok_or_else(|| Error::format("blocks", format!("missing block `{name}`")))?;
        if b.dtype != "f32le" {
            return Err(Error::format("dtype", format!("block `{name}` has dtype {}", b.dtype)));
        }
        let p = block_path(path, &b.file);
        let bytes = fs::read(&p).map_err(|e| Error::io(&p, e))?;
        if bytes.len() != 4 * b.rows * b.cols {
            return Err(Error::format(
                "payload",
                format!("block `{name}` has {} bytes, expected {}", bytes.len(), 4 * b.rows * b.cols),
            ));
        }
        let vals: Vec<f64> = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        Ok(DMatrix::from_column_slice(b.rows, b.cols, &vals))
    };
    let cols = |m: DMatrix<f64>| -> Vec<Vec<f64>> {
        m.column_iter().map(|c| c.iter().copied().collect()).collect()
    };
    let flat = |m: DMatrix<f64>| -> Vec<f64> { m.iter().copied().collect() };
    let geometry = match (manifest.nx, manifest.ny, manifest.wavelengths_nm) {
        (Some(nx), Some(ny), Some(w)) => Some(CubeGeometry::new(nx, ny, w)?),
        _ => None,
    };
    Ok(LowRankFactors {
        spectral_vectors: cols(get("spectral_basis")?),
        spatial_vectors: cols(get("spatial_basis")?),
        alphas: flat(get("alphas")?),
        betas: flat(get("betas")?),
        sigma: flat(get("sigma")?),
        u: get("u")?,
        v: get("v")?,
        target_rank: manifest.target_rank,
        iterations: manifest.iterations,
        breakdowns: manifest.breakdowns,
        geometry,
    })
}
