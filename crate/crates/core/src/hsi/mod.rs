//! Hyperspectral cube types and their matrix view.
//!
//! A cube holds `nx × ny × nl` intensities. Storage is band-major with x
//! fastest inside each band, i.e. sample `(x, y, band)` lives at
//! `x + nx * (y + ny * band)`. The matrix view `X` has `nx * ny` rows (pixel
//! `(x, y)` is row `x + nx * y`) and `nl` columns (column `j` is band `j`),
//! so the column-major buffer of `X` is exactly the cube buffer.

mod io;
mod synth;

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{ensure_arg, Error, Result};
use crate::linalg::dot;

pub use io::{load_cube, save_cube, save_cube_as, CubeHeader, PayloadType};
pub use synth::{synth_lowrank_scene, SceneComponents};

/// Spatial size plus wavelength grid; everything needed to reshape vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct CubeGeometry {
    pub nx: usize,
    pub ny: usize,
    pub wavelengths: Arc<[f64]>,
}

impl CubeGeometry {
    pub fn new(nx: usize, ny: usize, wavelengths: impl Into<Arc<[f64]>>) -> Result<Self> {
        let wavelengths = wavelengths.into();
        ensure_arg!(nx > 0 && ny > 0, "cube must have nonzero spatial size");
        ensure_arg!(!wavelengths.is_empty(), "wavelength grid is empty");
        ensure_arg!(
            wavelengths.iter().all(|w| w.is_finite()),
            "wavelengths must be finite"
        );
        ensure_arg!(
            wavelengths.windows(2).all(|w| w[1] > w[0]),
            "wavelengths must be strictly increasing"
        );
        Ok(CubeGeometry { nx, ny, wavelengths })
    }

    pub fn nl(&self) -> usize {
        self.wavelengths.len()
    }

    pub fn npix(&self) -> usize {
        self.nx * self.ny
    }

    pub fn len(&self) -> usize {
        self.npix() * self.nl()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Evenly spaced wavelength grid from `start` to `end` inclusive (nm).
pub fn linear_grid(start: f64, end: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![start];
    }
    let step = (end - start) / (n - 1) as f64;
    (0..n).map(|i| start + step * i as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct HsiCube {
    geom: CubeGeometry,
    data: Vec<f64>,
}

impl HsiCube {
    /// A measured or synthetic scene: finite and non-negative.
    pub fn new(geom: CubeGeometry, data: Vec<f64>) -> Result<Self> {
        let cube = Self::from_estimate(geom, data)?;
        if let Some(i) = cube.data.iter().position(|v| *v < 0.0) {
            return Err(Error::invalid(format!(
                "intensity at index {i} is negative ({})",
                cube.data[i]
            )));
        }
        Ok(cube)
    }

    /// A reconstruction, which may carry small negative values.
    pub fn from_estimate(geom: CubeGeometry, data: Vec<f64>) -> Result<Self> {
        ensure_arg!(
            data.len() == geom.len(),
            "cube buffer has {} samples, geometry needs {}",
            data.len(),
            geom.len()
        );
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("intensity at index {i} is not finite")));
        }
        Ok(HsiCube { geom, data })
    }

    pub fn zeros(geom: CubeGeometry) -> Self {
        let data = vec![0.0; geom.len()];
        HsiCube { geom, data }
    }

    pub fn geometry(&self) -> &CubeGeometry {
        &self.geom
    }

    pub fn nx(&self) -> usize {
        self.geom.nx
    }

    pub fn ny(&self) -> usize {
        self.geom.ny
    }

    pub fn nl(&self) -> usize {
        self.geom.nl()
    }

    pub fn npix(&self) -> usize {
        self.geom.npix()
    }

    pub fn wavelengths(&self) -> &Arc<[f64]> {
        &self.geom.wavelengths
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, x: usize, y: usize, band: usize) -> f64 {
        self.data[x + self.geom.nx * (y + self.geom.ny * band)]
    }

    /// Band image `j`, which is also column `j` of the matrix view.
    pub fn band(&self, j: usize) -> &[f64] {
        let n = self.npix();
        &self.data[j * n..(j + 1) * n]
    }

    pub fn band_mut(&mut self, j: usize) -> &mut [f64] {
        let n = self.npix();
        &mut self.data[j * n..(j + 1) * n]
    }

    /// Spectrum of pixel `(x, y)`, i.e. row `x + nx * y` of the matrix view.
    pub fn pixel_spectrum(&self, x: usize, y: usize) -> Vec<f64> {
        let row = x + self.geom.nx * y;
        (0..self.nl()).map(|j| self.data[row + j * self.npix()]).collect()
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.npix(), self.nl(), &self.data)
    }

    pub fn from_matrix(geom: CubeGeometry, m: &DMatrix<f64>) -> Result<Self> {
        ensure_arg!(
            m.nrows() == geom.npix() && m.ncols() == geom.nl(),
            "matrix is {}×{}, geometry needs {}×{}",
            m.nrows(),
            m.ncols(),
            geom.npix(),
            geom.nl()
        );
        Self::from_estimate(geom, m.as_slice().to_vec())
    }

    /// Sets negative entries to zero.
    pub fn clamp_nonnegative(mut self) -> Self {
        self.data.iter_mut().for_each(|v| *v = v.max(0.0));
        self
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `X x` on raw slices.
    pub fn matvec(&self, code: &[f64]) -> Result<Vec<f64>> {
        ensure_arg!(
            code.len() == self.nl(),
            "spectral code has length {}, cube has {} bands",
            code.len(),
            self.nl()
        );
        let mut out = vec![0.0; self.npix()];
        for (j, &c) in code.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(self.band(j)) {
                *o += c * v;
            }
        }
        Ok(out)
    }

    /// `Xᵀ x̃` on raw slices.
    pub fn rmatvec(&self, code: &[f64]) -> Result<Vec<f64>> {
        ensure_arg!(
            code.len() == self.npix(),
            "spatial code has length {}, cube has {} pixels",
            code.len(),
            self.npix()
        );
        Ok((0..self.nl()).map(|j| dot(self.band(j), code)).collect())
    }

    /// Overall spectral content: the sum of every pixel's spectrum.
    pub fn total_spectrum(&self) -> SpectralProfile {
        let values = (0..self.nl()).map(|j| self.band(j).iter().sum()).collect();
        SpectralProfile {
            values,
            wavelengths: self.wavelengths().clone(),
        }
    }
}

/// A signed spectral vector on a wavelength grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralProfile {
    pub values: Vec<f64>,
    pub wavelengths: Arc<[f64]>,
}

impl SpectralProfile {
    pub fn new(values: Vec<f64>, wavelengths: Arc<[f64]>) -> Result<Self> {
        ensure_arg!(
            values.len() == wavelengths.len(),
            "profile has {} values for {} wavelengths",
            values.len(),
            wavelengths.len()
        );
        Ok(SpectralProfile { values, wavelengths })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A signed `nx × ny` image, x fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialImage {
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

impl SpatialImage {
    pub fn new(nx: usize, ny: usize, values: Vec<f64>) -> Result<Self> {
        ensure_arg!(
            values.len() == nx * ny,
            "image buffer has {} values, expected {}×{}",
            values.len(),
            nx,
            ny
        );
        ensure_arg!(values.iter().all(|v| v.is_finite()), "image has non-finite entries");
        Ok(SpatialImage { nx, ny, values })
    }

    pub fn filled(nx: usize, ny: usize, v: f64) -> Self {
        SpatialImage {
            nx,
            ny,
            values: vec![v; nx * ny],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[x + self.nx * y]
    }
}

/// `y = X x`: the image seen through spectral response `code`.
pub fn cube_matvec(cube: &HsiCube, code: &SpectralProfile) -> Result<SpatialImage> {
    let values = cube.matvec(&code.values)?;
    Ok(SpatialImage {
        nx: cube.nx(),
        ny: cube.ny(),
        values,
    })
}

/// `ỹ = Xᵀ x̃`: the spectrum of the scene weighted by spatial mask `code`.
pub fn cube_rmatvec(cube: &HsiCube, code: &SpatialImage) -> Result<SpectralProfile> {
    ensure_arg!(
        code.nx == cube.nx() && code.ny == cube.ny(),
        "spatial code is {}×{}, cube is {}×{}",
        code.nx,
        code.ny,
        cube.nx(),
        cube.ny()
    );
    let values = cube.rmatvec(&code.values)?;
    Ok(SpectralProfile {
        values,
        wavelengths: cube.wavelengths().clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cube(nx: usize, ny: usize, nl: usize, seed: u64) -> HsiCube {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let geom = CubeGeometry::new(nx, ny, linear_grid(400.0, 700.0, nl)).unwrap();
        let data = (0..geom.len()).map(|_| rng.random::<f64>()).collect();
        HsiCube::new(geom, data).unwrap()
    }

    #[test]
    fn unit_spectral_code_picks_band() {
        let cube = random_cube(4, 3, 5, 1);
        for j in 0..5 {
            let mut e = vec![0.0; 5];
            e[j] = 1.0;
            let code = SpectralProfile::new(e, cube.wavelengths().clone()).unwrap();
            let img = cube_matvec(&cube, &code).unwrap();
            assert_eq!(img.values, cube.band(j));
        }
    }

    #[test]
    fn all_ones_on_rank_one_cube() {
        let u = [1.0, 2.0, 0.5, 3.0];
        let v = [0.2, 0.4, 1.0];
        let geom = CubeGeometry::new(2, 2, vec![500.0, 510.0, 520.0]).unwrap();
        let data: Vec<f64> = v.iter().flat_map(|vj| u.iter().map(move |ui| ui * vj)).collect();
        let cube = HsiCube::new(geom, data).unwrap();
        let code = SpectralProfile::new(vec![1.0; 3], cube.wavelengths().clone()).unwrap();
        let img = cube_matvec(&cube, &code).unwrap();
        let sv: f64 = v.iter().sum();
        for (a, b) in img.values.iter().zip(u) {
            assert!((a - b * sv).abs() < 1e-15);
        }
    }

    #[test]
    fn matvec_matches_dense_oracle() {
        let cube = random_cube(6, 5, 4, 7);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let code: Vec<f64> = (0..4).map(|_| rng.random::<f64>() - 0.5).collect();
        // independent dense multiply, indexing through get()
        let mut oracle = vec![0.0; 30];
        for y in 0..5 {
            for x in 0..6 {
                oracle[x + 6 * y] = (0..4).map(|j| cube.get(x, y, j) * code[j]).sum();
            }
        }
        let got = cube.matvec(&code).unwrap();
        for (a, b) in got.iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300));
        }
        let m = cube.to_matrix();
        let via_matrix = &m * nalgebra::DVector::from_column_slice(&code);
        for (a, b) in got.iter().zip(via_matrix.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let cube = random_cube(2, 2, 3, 0);
        assert!(matches!(cube.matvec(&[1.0; 4]), Err(Error::InvalidArgument(_))));
        assert!(matches!(cube.rmatvec(&[1.0; 3]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn rejects_bad_grids_and_values() {
        assert!(CubeGeometry::new(2, 2, vec![500.0, 500.0]).is_err());
        let geom = CubeGeometry::new(1, 1, vec![500.0]).unwrap();
        assert!(HsiCube::new(geom.clone(), vec![-1.0]).is_err());
        assert!(HsiCube::new(geom.clone(), vec![f64::NAN]).is_err());
        assert!(HsiCube::from_estimate(geom, vec![-1.0]).is_ok());
    }

    #[test]
    fn matrix_columns_are_bands() {
        let cube = random_cube(3, 4, 5, 3);
        let m = cube.to_matrix();
        for j in 0..5 {
            assert_eq!(m.column(j).as_slice(), cube.band(j));
        }
        for y in 0..4 {
            for x in 0..3 {
                assert_eq!(m[(x + 3 * y, 2)], cube.get(x, y, 2));
            }
        }
        let back = HsiCube::from_matrix(cube.geometry().clone(), &m).unwrap();
        assert_eq!(back, cube);
    }

    proptest! {
        #[test]
        fn adjoint_identity(seed in 0u64..1000, nx in 1usize..7, ny in 1usize..7, nl in 1usize..9) {
            let cube = random_cube(nx, ny, nl, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xABCD);
            let x: Vec<f64> = (0..nl).map(|_| rng.random::<f64>() - 0.5).collect();
            let y: Vec<f64> = (0..nx * ny).map(|_| rng.random::<f64>() - 0.5).collect();
            let xx = cube.matvec(&x).unwrap();
            let lhs = dot(&xx, &y);
            let rhs = dot(&x, &cube.rmatvec(&y).unwrap());
            let scale = crate::linalg::norm2(&xx) * crate::linalg::norm2(&y) + 1e-300;
            prop_assert!((lhs - rhs).abs() <= 1e-10 * scale);
        }
    }
}
