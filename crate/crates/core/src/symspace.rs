//! Half-vectorization of symmetric matrices and the second-moment operators
//! acting on them.
//!
//! Conventions: `vec` stacks columns; `vech` stacks the lower triangle column
//! by column, so for `n = 2` the order is `x₁₁, x₂₁, x₂₂`.

use nalgebra::{DMatrix, DVector, RowDVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{self, is_conjugate_closed, match_pairs, max_match_error};
use crate::system::{Mode, PlantParams};

/// Default absolute tolerance for multiset spectrum comparison.
pub const SPECTRUM_MATCH_TOLERANCE: f64 = 1e-6;

const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Number of free entries of an `n x n` symmetric matrix.
pub fn sym_dim(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Position of `(i, j)` (with `i >= j`) inside `vech`.
#[cfg(test)]
fn vech_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i >= j);
    // columns 0..j contribute n, n-1, ..., n-j+1 entries
    j * n - j * j.saturating_sub(1) / 2 + (i - j)
}

/// Half-vectorized symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymVec {
    n: usize,
    data: Vec<f64>,
}

impl SymVec {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != sym_dim(n) {
            return Err(Error::ShapeMismatch(format!(
                "vech of a {n}x{n} matrix has {} entries, got {}",
                sym_dim(n),
                data.len()
            )));
        }
        Ok(Self { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

pub fn check_symmetric(x: &DMatrix<f64>) -> Result<()> {
    if !x.is_square() {
        return Err(Error::ShapeMismatch(format!(
            "expected a square matrix, got {}x{}",
            x.nrows(),
            x.ncols()
        )));
    }
    let n = x.nrows();
    let mut worst = 0.0_f64;
    let mut violated = false;
    for j in 0..n {
        for i in (j + 1)..n {
            let d = (x[(i, j)] - x[(j, i)]).abs();
            let scale = 1.0 + x[(i, j)].abs().max(x[(j, i)].abs());
            worst = worst.max(d);
            if d > SYMMETRY_TOLERANCE * scale || d.is_nan() {
                violated = true;
            }
        }
    }
    if violated {
        return Err(Error::NonSymmetric { deviation: worst });
    }
    Ok(())
}

fn symmetrized(x: &DMatrix<f64>) -> DMatrix<f64> {
    (x + x.transpose()) * 0.5
}

pub fn vech(x: &DMatrix<f64>) -> Result<SymVec> {
    check_symmetric(x)?;
    let x = symmetrized(x);
    let n = x.nrows();
    let mut data = Vec::with_capacity(sym_dim(n));
    for j in 0..n {
        for i in j..n {
            data.push(x[(i, j)]);
        }
    }
    Ok(SymVec { n, data })
}

pub fn unvech(v: &SymVec) -> DMatrix<f64> {
    let n = v.n;
    let mut x = DMatrix::zeros(n, n);
    let mut k = 0;
    for j in 0..n {
        for i in j..n {
            x[(i, j)] = v.data[k];
            x[(j, i)] = v.data[k];
            k += 1;
        }
    }
    x
}

/// `M` with `vec(X) = M · vech(X)` for every symmetric `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct DuplicationMatrix {
    n: usize,
    m: DMatrix<f64>,
}

impl DuplicationMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    /// `(MᵀM)⁻¹Mᵀ`, the left inverse mapping `vec(X)` back to `vech(X)`.
    pub fn left_inverse(&self) -> DMatrix<f64> {
        // MᵀM is diagonal: 1 for diagonal entries of X, 2 for off-diagonal ones
        let mut li = self.m.transpose();
        for r in 0..li.nrows() {
            let w: f64 = li.row(r).sum();
            li.row_mut(r).unscale_mut(w);
        }
        li
    }
}

pub fn duplication_matrix(n: usize) -> DuplicationMatrix {
    let mut m = DMatrix::zeros(n * n, sym_dim(n));
    let mut k = 0;
    for j in 0..n {
        for i in j..n {
            m[(i + j * n, k)] = 1.0;
            m[(j + i * n, k)] = 1.0;
            k += 1;
        }
    }
    DuplicationMatrix { n, m }
}

fn check_operand(n: usize, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x.shape() != (n, n) {
        return Err(Error::ShapeMismatch(format!(
            "operand must be {n}x{n}, got {}x{}",
            x.nrows(),
            x.ncols()
        )));
    }
    check_symmetric(x)?;
    Ok(symmetrized(x))
}

fn check_plant_gain(
    h: &DMatrix<f64>,
    l: &DMatrix<f64>,
    f: &DVector<f64>,
    k: &RowDVector<f64>,
) -> Result<usize> {
    let n = h.nrows();
    if !h.is_square() || l.shape() != (n, n) || f.len() != n || k.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "need H, L: {n}x{n}, F: {n}x1, gain: 1x{n}; got H {:?}, L {:?}, F {:?}, gain 1x{}",
            h.shape(),
            l.shape(),
            f.shape(),
            k.len()
        )));
    }
    Ok(n)
}

fn closed_loop(
    h: &DMatrix<f64>,
    l: &DMatrix<f64>,
    f: &DVector<f64>,
    alpha: f64,
    k: &RowDVector<f64>,
) -> DMatrix<f64> {
    h + l * alpha + f * k
}

/// `𝓛(X) = (H + αL + F·kv) X (…)ᵀ + α² X`.
pub fn apply_operator_discrete(
    h: &DMatrix<f64>,
    l: &DMatrix<f64>,
    f: &DVector<f64>,
    alpha: f64,
    kv: &RowDVector<f64>,
    x: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let n = check_plant_gain(h, l, f, kv)?;
    let x = check_operand(n, x)?;
    let acl = closed_loop(h, l, f, alpha, kv);
    Ok(symmetrized(&(&acl * &x * acl.transpose() + x * (alpha * alpha))))
}

/// `𝓛_c(X) = A_cl X + X A_clᵀ + α² X` with `A_cl = H + αL + F·tv`.
pub fn apply_operator_continuous(
    h: &DMatrix<f64>,
    l: &DMatrix<f64>,
    f: &DVector<f64>,
    alpha: f64,
    tv: &RowDVector<f64>,
    x: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let n = check_plant_gain(h, l, f, tv)?;
    let x = check_operand(n, x)?;
    let acl = closed_loop(h, l, f, alpha, tv);
    let ax = &acl * &x;
    Ok(symmetrized(&(&ax + ax.transpose() + x * (alpha * alpha))))
}

fn general_loops(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    abar: &DMatrix<f64>,
    bbar: &DMatrix<f64>,
    k: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    let m = b.ncols();
    if !a.is_square()
        || abar.shape() != (n, n)
        || b.nrows() != n
        || bbar.shape() != (n, m)
        || k.shape() != (m, n)
    {
        return Err(Error::ShapeMismatch(format!(
            "need A, Abar: {n}x{n}, B, Bbar: {n}x{m}, K: {m}x{n}; got A {:?}, Abar {:?}, B {:?}, Bbar {:?}, K {:?}",
            a.shape(),
            abar.shape(),
            b.shape(),
            bbar.shape(),
            k.shape()
        )));
    }
    Ok((a + b * k, abar + bbar * k))
}

/// Operator of the general system `(A, B, Ā, B̄)` under `U = Kx`.
///
/// Discrete: `(A+BK)X(A+BK)ᵀ + (Ā+B̄K)X(Ā+B̄K)ᵀ`.
/// Continuous: `(A+BK)X + X(A+BK)ᵀ + (Ā+B̄K)X(Ā+B̄K)ᵀ`.
pub fn apply_operator_general(
    mode: Mode,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    abar: &DMatrix<f64>,
    bbar: &DMatrix<f64>,
    k: &DMatrix<f64>,
    x: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let (acl, ncl) = general_loops(a, b, abar, bbar, k)?;
    let x = check_operand(a.nrows(), x)?;
    let noise = &ncl * &x * ncl.transpose();
    let drift = match mode {
        Mode::Discrete => &acl * &x * acl.transpose(),
        Mode::Continuous => {
            let ax = &acl * &x;
            &ax + ax.transpose()
        }
    };
    Ok(symmetrized(&(drift + noise)))
}

/// Matrix of an operator restricted to symmetric matrices in `vech`
/// coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub n: usize,
    pub mode: Mode,
    pub t: DMatrix<f64>,
}

impl OperatorMatrix {
    /// `unvech(T · vech(X))`.
    pub fn apply(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.shape() != (self.n, self.n) {
            return Err(Error::ShapeMismatch(format!(
                "operand must be {0}x{0}",
                self.n
            )));
        }
        let v = vech(x)?;
        let y = &self.t * DVector::from_column_slice(v.as_slice());
        Ok(unvech(&SymVec::new(self.n, y.as_slice().to_vec())?))
    }
}

fn restrict(n: usize, mode: Mode, vec_map: DMatrix<f64>) -> OperatorMatrix {
    let dup = duplication_matrix(n);
    let t = dup.left_inverse() * vec_map * dup.matrix();
    OperatorMatrix { n, mode, t }
}

fn vec_operator(mode: Mode, drift: &DMatrix<f64>, noise: &DMatrix<f64>) -> DMatrix<f64> {
    let n = drift.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let noise_part = noise.kronecker(noise);
    match mode {
        Mode::Discrete => drift.kronecker(drift) + noise_part,
        Mode::Continuous => id.kronecker(drift) + drift.kronecker(&id) + noise_part,
    }
}

/// Operator matrix of the plant under `K_u = αI` and the row gain `kv`:
/// `(MᵀM)⁻¹Mᵀ[A_cl ⊗ A_cl + α²I]M` (discrete) or
/// `(MᵀM)⁻¹Mᵀ[I ⊗ A_cl + A_cl ⊗ I + α²I]M` (continuous).
pub fn operator_matrix(
    params: &PlantParams,
    alpha: f64,
    kv: &RowDVector<f64>,
    mode: Mode,
) -> Result<OperatorMatrix> {
    params.check_gain(kv)?;
    let n = params.dim();
    let acl = params.closed_loop(alpha, kv);
    let ku = DMatrix::<f64>::identity(n, n) * alpha;
    Ok(restrict(n, mode, vec_operator(mode, &acl, &ku)))
}

/// Operator matrix of a general system `(A, B, Ā, B̄)` under `U = Kx`.
pub fn operator_matrix_general(
    mode: Mode,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    abar: &DMatrix<f64>,
    bbar: &DMatrix<f64>,
    k: &DMatrix<f64>,
) -> Result<OperatorMatrix> {
    let (acl, ncl) = general_loops(a, b, abar, bbar, k)?;
    Ok(restrict(a.nrows(), mode, vec_operator(mode, &acl, &ncl)))
}

/// Multiset of operator eigenvalues in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSet {
    values: Vec<Complex64>,
}

impl SpectrumSet {
    pub fn from_values(mut values: Vec<Complex64>) -> Self {
        numerics::canonical_sort(&mut values);
        Self { values }
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_conjugate_closed(&self, tol: f64) -> bool {
        is_conjugate_closed(&self.values, tol)
    }

    /// Largest distance of the greedy nearest-neighbour matching.
    pub fn max_error(&self, other: &SpectrumSet) -> Option<f64> {
        max_match_error(&self.values, &other.values)
    }

    /// Distance from each of our values to its matched partner in `other`.
    pub fn errors_against(&self, other: &SpectrumSet) -> Option<Vec<f64>> {
        match_pairs(&self.values, &other.values)
    }

    pub fn matches(&self, other: &SpectrumSet, tol: f64) -> bool {
        self.max_error(other).is_some_and(|e| e <= tol)
    }

    /// Largest modulus, i.e. the spectral radius of the operator.
    pub fn radius(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest real part.
    pub fn abscissa(&self) -> f64 {
        self.values
            .iter()
            .map(|v| v.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn spectrum(t: &OperatorMatrix) -> Result<SpectrumSet> {
    let d = sym_dim(t.n);
    if t.t.shape() != (d, d) {
        return Err(Error::ShapeMismatch(format!(
            "operator matrix for n={} must be {d}x{d}",
            t.n
        )));
    }
    Ok(SpectrumSet::from_values(numerics::eigenvalues(&t.t)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn row(v: &[f64]) -> RowDVector<f64> {
        RowDVector::from_row_slice(v)
    }

    fn col(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    #[test]
    fn vech_examples() {
        assert_eq!(vech(&DMatrix::identity(2, 2)).unwrap().as_slice(), &[1.0, 0.0, 1.0]);
        let x = dmatrix![1.5, -2.0; -2.0, 7.0];
        assert_eq!(vech(&x).unwrap().as_slice(), &[1.5, -2.0, 7.0]);
        assert_eq!(vech(&dmatrix![1.0, 2.0; 3.0, 4.0]), Err(Error::NonSymmetric { deviation: 1.0 }));
    }

    #[test]
    fn vech_tolerates_rounding_drift() {
        let x = dmatrix![1.0, 0.3; 0.3 + 1e-14, 2.0];
        let v = vech(&x).unwrap();
        assert!((v.as_slice()[1] - (0.3 + 0.5e-14)).abs() < 1e-16);
    }

    #[test]
    fn vech_index_order_matches_stack() {
        let n = 4;
        let mut x = DMatrix::zeros(n, n);
        let mut k = 0.0;
        for j in 0..n {
            for i in j..n {
                x[(i, j)] = k;
                x[(j, i)] = k;
                k += 1.0;
            }
        }
        let v = vech(&x).unwrap();
        for j in 0..n {
            for i in j..n {
                assert_eq!(v.as_slice()[vech_index(n, i, j)], x[(i, j)]);
            }
        }
    }

    #[test]
    fn duplication_small() {
        assert_eq!(duplication_matrix(1).matrix(), &dmatrix![1.0]);
        let m2 = dmatrix![1.0, 0.0, 0.0; 0.0, 1.0, 0.0; 0.0, 1.0, 0.0; 0.0, 0.0, 1.0];
        assert_eq!(duplication_matrix(2).matrix(), &m2);
    }

    #[test]
    fn duplication_oracle_from_basis() {
        // stack vec of E11, E21+E12, E22 column by column
        let basis = [
            dmatrix![1.0, 0.0; 0.0, 0.0],
            dmatrix![0.0, 1.0; 1.0, 0.0],
            dmatrix![0.0, 0.0; 0.0, 1.0],
        ];
        let cols: Vec<DVector<f64>> = basis
            .iter()
            .map(|e| DVector::from_column_slice(e.as_slice()))
            .collect();
        assert_eq!(&DMatrix::from_columns(&cols), duplication_matrix(2).matrix());
    }

    #[test]
    fn discrete_operator_scalars() {
        let z = dmatrix![0.0];
        let one = dmatrix![1.0];
        let y = apply_operator_discrete(&z, &z, &col(&[1.0]), 0.0, &row(&[2.0]), &one).unwrap();
        assert_eq!(y[(0, 0)], 4.0);
        let y = apply_operator_discrete(&z, &z, &col(&[0.0]), 3.0, &row(&[0.0]), &one).unwrap();
        assert_eq!(y[(0, 0)], 9.0);
    }

    #[test]
    fn continuous_operator_scalars() {
        // G = 21.6 + 0.1·24 = 24, tv = 6: 2·30 + 0.01
        let y = apply_operator_continuous(
            &dmatrix![21.6],
            &dmatrix![24.0],
            &col(&[1.0]),
            0.1,
            &row(&[6.0]),
            &dmatrix![1.0],
        )
        .unwrap();
        assert!((y[(0, 0)] - 60.01).abs() < 1e-12);
        let z = dmatrix![0.0];
        let y = apply_operator_continuous(&z, &z, &col(&[0.0]), 0.0, &row(&[0.0]), &dmatrix![1.0])
            .unwrap();
        assert_eq!(y[(0, 0)], 0.0);
    }

    #[test]
    fn general_operator_hand_case() {
        let id = DMatrix::<f64>::identity(2, 2);
        let b = DMatrix::zeros(2, 1);
        let k = DMatrix::zeros(1, 2);
        let y = apply_operator_general(Mode::Discrete, &id, &b, &id, &b, &k, &id).unwrap();
        assert_eq!(y, &id * 2.0);
    }

    #[test]
    fn general_operator_without_noise_is_similarity() {
        let a = dmatrix![0.5, 1.0; -0.2, 0.3];
        let b = dmatrix![1.0; 0.5];
        let k = dmatrix![0.1, -0.4];
        let z = DMatrix::zeros(2, 2);
        let zb = DMatrix::zeros(2, 1);
        let x = dmatrix![2.0, 0.5; 0.5, 1.0];
        let y = apply_operator_general(Mode::Discrete, &a, &b, &z, &zb, &k, &x).unwrap();
        let acl = &a + &b * &k;
        assert!((y - &acl * &x * acl.transpose()).norm() < 1e-14);
    }

    #[test]
    fn shape_errors() {
        let h = DMatrix::<f64>::identity(2, 2);
        let f = col(&[1.0, 0.0]);
        let err = apply_operator_discrete(&h, &h, &f, 0.0, &row(&[1.0]), &h).unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch(_)));
        let err =
            apply_operator_discrete(&h, &h, &f, 0.0, &row(&[1.0, 0.0]), &DMatrix::identity(3, 3))
                .unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch(_)));
    }

    #[test]
    fn scalar_operator_matrices() {
        let p = PlantParams::new(dmatrix![0.3], dmatrix![2.0], DVector::from_vec(vec![1.5]))
            .unwrap();
        let (alpha, k) = (0.4, 0.7);
        let kappa = 0.3 + 2.0 * alpha + 1.5 * k;
        let d = operator_matrix(&p, alpha, &row(&[k]), Mode::Discrete).unwrap();
        assert!((d.t[(0, 0)] - (kappa * kappa + alpha * alpha)).abs() < 1e-14);
        let c = operator_matrix(&p, alpha, &row(&[k]), Mode::Continuous).unwrap();
        assert!((c.t[(0, 0)] - (2.0 * kappa + alpha * alpha)).abs() < 1e-14);
    }

    #[test]
    fn scalar_spectrum_examples() {
        let p = PlantParams::new(dmatrix![0.0], dmatrix![0.0], DVector::from_vec(vec![1.0]))
            .unwrap();
        let t = operator_matrix(&p, 0.0, &row(&[1.0]), Mode::Discrete).unwrap();
        assert_eq!(spectrum(&t).unwrap().values(), &[Complex64::new(1.0, 0.0)]);
    }

    #[test]
    fn spectrum_rejects_wrong_size() {
        let t = OperatorMatrix {
            n: 2,
            mode: Mode::Discrete,
            t: DMatrix::identity(2, 2),
        };
        assert!(matches!(spectrum(&t), Err(Error::ShapeMismatch(_))));
    }
}
