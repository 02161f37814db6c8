//! System descriptions shared by the design, simulation and learning modules.

use nalgebra::{DMatrix, DVector, RowDVector};

use crate::error::{Error, Result};

/// Time domain of the plant and of its second-moment operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// `x(k+1) = Hx + Lu + Fv + u w(k)`
    Discrete,
    /// `dx = (Hx + Lu + Fv) dt + u dσ(t)`
    Continuous,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Discrete => "discrete",
            Mode::Continuous => "continuous",
        }
    }
}

/// Plant matrices `(H, L, F)` with a scalar secondary input `v`.
///
/// `H` and `L` are `n x n` (the noisy input `u` has the same dimension as the
/// state), `F` is a single column.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantParams {
    pub h: DMatrix<f64>,
    pub l: DMatrix<f64>,
    pub f: DVector<f64>,
}

impl PlantParams {
    pub fn new(h: DMatrix<f64>, l: DMatrix<f64>, f: DVector<f64>) -> Result<Self> {
        let n = h.nrows();
        if n == 0 || !h.is_square() {
            return Err(Error::ShapeMismatch(format!(
                "H must be square and non-empty, got {}x{}",
                h.nrows(),
                h.ncols()
            )));
        }
        if l.shape() != (n, n) {
            return Err(Error::ShapeMismatch(format!(
                "L must be {n}x{n}, got {}x{}",
                l.nrows(),
                l.ncols()
            )));
        }
        if f.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "F must have {n} rows, got {}",
                f.len()
            )));
        }
        Ok(Self { h, l, f })
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    /// `G = H + αL`, the drift once `u = αx` is fixed.
    pub fn g(&self, alpha: f64) -> DMatrix<f64> {
        &self.h + &self.l * alpha
    }

    /// `H + αL + F·kv`.
    pub fn closed_loop(&self, alpha: f64, kv: &RowDVector<f64>) -> DMatrix<f64> {
        self.g(alpha) + &self.f * kv
    }

    pub(crate) fn check_gain(&self, kv: &RowDVector<f64>) -> Result<()> {
        if kv.len() != self.dim() {
            return Err(Error::ShapeMismatch(format!(
                "gain must have {} entries, got {}",
                self.dim(),
                kv.len()
            )));
        }
        Ok(())
    }
}

/// A system with state- and control-dependent noise, `(A, B, Ā, B̄)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralSystem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub abar: DMatrix<f64>,
    pub bbar: DMatrix<f64>,
}

impl GeneralSystem {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        abar: DMatrix<f64>,
        bbar: DMatrix<f64>,
    ) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || !a.is_square() {
            return Err(Error::ShapeMismatch("A must be square and non-empty".into()));
        }
        if abar.shape() != (n, n) {
            return Err(Error::ShapeMismatch(format!("Abar must be {n}x{n}")));
        }
        if b.nrows() != n || bbar.nrows() != n || b.ncols() != bbar.ncols() {
            return Err(Error::ShapeMismatch(format!(
                "B and Bbar must both be {n}xm with the same m, got {:?} and {:?}",
                b.shape(),
                bbar.shape()
            )));
        }
        Ok(Self { a, b, abar, bbar })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }
}
