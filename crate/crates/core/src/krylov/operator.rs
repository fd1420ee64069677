use nalgebra::DMatrix;

use crate::error::{ensure_arg, Result};
use crate::hsi::{CubeGeometry, HsiCube};
use crate::sensing::Instrument;

/// A matrix `X` (`N_x N_y × N_λ`) accessible only through products.
/// Products take `&mut self` because a physical instrument logs every call.
pub trait MatVecOperator {
    /// `N_x N_y`
    fn nrows(&self) -> usize;
    /// `N_λ`
    fn ncols(&self) -> usize;
    /// `X x` for a spectral code `x`.
    fn apply(&mut self, x: &[f64]) -> Result<Vec<f64>>;
    /// `Xᵀ y` for a spatial code `y`.
    fn apply_adjoint(&mut self, y: &[f64]) -> Result<Vec<f64>>;
    /// Cube layout, when the operator has one.
    fn geometry(&self) -> Option<CubeGeometry> {
        None
    }
}

impl MatVecOperator for Instrument {
    fn nrows(&self) -> usize {
        self.scene().npix()
    }

    fn ncols(&self) -> usize {
        self.scene().nl()
    }

    fn apply(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        self.measure_image_raw(x)
    }

    fn apply_adjoint(&mut self, y: &[f64]) -> Result<Vec<f64>> {
        self.measure_spectrum_raw(y)
    }

    fn geometry(&self) -> Option<CubeGeometry> {
        Some(self.scene().geometry().clone())
    }
}

/// Noise-free products with a cube, without any bookkeeping.
#[derive(Debug, Clone, Copy)]
pub struct ExactCube<'a>(pub &'a HsiCube);

impl MatVecOperator for ExactCube<'_> {
    fn nrows(&self) -> usize {
        self.0.npix()
    }

    fn ncols(&self) -> usize {
        self.0.nl()
    }

    fn apply(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        self.0.matvec(x)
    }

    fn apply_adjoint(&mut self, y: &[f64]) -> Result<Vec<f64>> {
        self.0.rmatvec(y)
    }

    fn geometry(&self) -> Option<CubeGeometry> {
        Some(self.0.geometry().clone())
    }
}

/// Products with an explicit dense matrix, counting calls.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    pub matrix: DMatrix<f64>,
    pub calls: (usize, usize),
}

impl DenseOperator {
    pub fn new(matrix: DMatrix<f64>) -> Self {
        DenseOperator {
            matrix,
            calls: (0, 0),
        }
    }
}

impl MatVecOperator for DenseOperator {
    fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    fn apply(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        ensure_arg!(x.len() == self.ncols(), "vector length {} != {} columns", x.len(), self.ncols());
        self.calls.0 += 1;
        let m = &self.matrix;
        Ok((0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * x[j]).sum())
            .collect())
    }

    fn apply_adjoint(&mut self, y: &[f64]) -> Result<Vec<f64>> {
        ensure_arg!(y.len() == self.nrows(), "vector length {} != {} rows", y.len(), self.nrows());
        self.calls.1 += 1;
        let m = &self.matrix;
        Ok((0..m.ncols())
            .map(|j| crate::linalg::dot(m.column(j).as_slice(), y))
            .collect())
    }
}
