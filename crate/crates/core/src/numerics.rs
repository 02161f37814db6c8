//! Polynomial and eigen-structure helpers.

use nalgebra::{DMatrix, DVector, Schur, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative deflation threshold of the Schur iteration.
pub const EIGEN_TOLERANCE: f64 = f64::EPSILON;

const CONJUGATE_TOLERANCE: f64 = 1e-9;
const IMAG_RESIDUE_TOLERANCE: f64 = 1e-10;

/// Monic polynomial `λⁿ + a₁λⁿ⁻¹ + … + aₙ`, stored as `[a₁, …, aₙ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonicPoly {
    pub coeffs: Vec<f64>,
}

impl MonicPoly {
    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    /// Evaluates the polynomial at a square matrix (Horner's scheme).
    pub fn eval_matrix(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let n = m.nrows();
        let mut acc = DMatrix::identity(n, n);
        for &c in &self.coeffs {
            acc = m * acc + DMatrix::identity(n, n) * c;
        }
        acc
    }
}

/// Coefficients of `∏(β − λᵢ) = βⁿ + a*ₙ₋₁βⁿ⁻¹ + … + a*₀`, stored as
/// `[a*ₙ₋₁, …, a*₀]`.
///
/// The ordering is the same as [`MonicPoly::coeffs`], so target and observed
/// coefficient rows can be subtracted directly.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetCoeffs {
    pub a: Vec<f64>,
}

impl TargetCoeffs {
    pub fn as_poly(&self) -> MonicPoly {
        MonicPoly {
            coeffs: self.a.clone(),
        }
    }
}

/// Characteristic polynomial by the Faddeev–LeVerrier recurrence.
pub fn char_poly(a: &DMatrix<f64>) -> MonicPoly {
    assert!(a.is_square(), "char_poly needs a square matrix");
    let n = a.nrows();
    let mut coeffs = Vec::with_capacity(n);
    // M_k = A M_{k-1} + c_{k-1} I, c_k = -tr(A M_k) / k, with M_0 = 0 and c_0 = 1.
    let mut m = DMatrix::<f64>::zeros(n, n);
    let mut prev = 1.0;
    for k in 1..=n {
        let mut next = a * &m;
        for i in 0..n {
            next[(i, i)] += prev;
        }
        m = next;
        let am = a * &m;
        prev = -am.trace() / k as f64;
        coeffs.push(prev);
    }
    MonicPoly { coeffs }
}

/// Companion matrix whose characteristic polynomial has the given coefficients.
pub fn companion(coeffs: &[f64]) -> DMatrix<f64> {
    let n = coeffs.len();
    let mut c = DMatrix::zeros(n, n);
    for i in 1..n {
        c[(i, i - 1)] = 1.0;
    }
    for (k, &a) in coeffs.iter().enumerate() {
        // last column holds -a_n, ..., -a_1 from top to bottom
        c[(n - 1 - k, n - 1)] = -a;
    }
    c
}

/// Expands `∏(β − λᵢ)` and checks that the result is real.
pub fn poly_from_roots(roots: &[Complex64]) -> Result<TargetCoeffs> {
    if !is_conjugate_closed(roots, CONJUGATE_TOLERANCE) {
        return Err(Error::NotConjugateClosed);
    }
    // coefficients of the monic product, highest degree first (leading 1 implicit)
    let mut c: Vec<Complex64> = vec![Complex64::new(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
        for (k, &ck) in c.iter().enumerate() {
            next[k] += ck;
            next[k + 1] -= ck * r;
        }
        c = next;
    }
    let mut a = Vec::with_capacity(roots.len());
    for ck in &c[1..] {
        if ck.im.abs() > IMAG_RESIDUE_TOLERANCE * (1.0 + ck.re.abs()) {
            return Err(Error::NotConjugateClosed);
        }
        a.push(ck.re);
    }
    Ok(TargetCoeffs { a })
}

/// True when every value can be paired with the conjugate of another.
pub fn is_conjugate_closed(values: &[Complex64], tol: f64) -> bool {
    let conj: Vec<Complex64> = values.iter().map(|v| v.conj()).collect();
    max_match_error(values, &conj).is_some_and(|e| e <= tol)
}

/// Greedy nearest-neighbour matching of two multisets.
///
/// Returns the largest pairwise distance of the matching, or `None` if the
/// sizes differ.
pub fn max_match_error(left: &[Complex64], right: &[Complex64]) -> Option<f64> {
    match_pairs(left, right).map(|errs| errs.into_iter().fold(0.0, f64::max))
}

/// Per-element distances of the greedy matching, in the order of `left`.
pub fn match_pairs(left: &[Complex64], right: &[Complex64]) -> Option<Vec<f64>> {
    if left.len() != right.len() {
        return None;
    }
    let mut used = vec![false; right.len()];
    let mut errs = Vec::with_capacity(left.len());
    for l in left {
        let (idx, dist) = right
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, r)| (i, (l - r).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))?;
        used[idx] = true;
        errs.push(dist);
    }
    Some(errs)
}

/// Sorts by real part, then imaginary part.
pub fn canonical_sort(values: &mut [Complex64]) {
    values.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// Diagonal similarity `D⁻¹AD` with power-of-two entries that roughly
/// equalizes row and column norms (Parlett–Reinsch).
pub fn balance(a: &DMatrix<f64>) -> DMatrix<f64> {
    const RADIX: f64 = 2.0;
    let n = a.nrows();
    let mut b = a.clone();
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += b[(j, i)].abs();
                    r += b[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                for j in 0..n {
                    b[(i, j)] /= f;
                }
                for j in 0..n {
                    b[(j, i)] *= f;
                }
            }
        }
    }
    b
}

/// Eigenvalues of a dense real matrix (balancing, Hessenberg reduction,
/// Francis QR).
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if !a.is_square() {
        return Err(Error::ShapeMismatch(format!(
            "eigenvalues need a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenFailure { dim: n });
    }
    let schur = Schur::try_new(balance(a), EIGEN_TOLERANCE, 100 * n * n)
        .ok_or(Error::EigenFailure { dim: n })?;
    let mut vals: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    canonical_sort(&mut vals);
    Ok(vals)
}

fn shifted(a: &DMatrix<f64>, lambda: Complex64) -> DMatrix<Complex64> {
    let n = a.nrows();
    let mut m = a.map(|v| Complex64::new(v, 0.0));
    for i in 0..n {
        m[(i, i)] -= lambda;
    }
    m
}

fn residual_scale(a: &DMatrix<f64>) -> f64 {
    1.0_f64.max(a.norm())
}

/// Basis of the (numerical) null space of `A − λI`.
///
/// Singular values below `tol·max(1, ‖A‖)` count as zero.
pub fn eigenspace(a: &DMatrix<f64>, lambda: Complex64, tol: f64) -> Vec<DVector<Complex64>> {
    let n = a.nrows();
    let svd = SVD::new(shifted(a, lambda), false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let cutoff = tol * residual_scale(a);
    (0..n)
        .filter(|&k| svd.singular_values[k] <= cutoff)
        .map(|k| v_t.row(k).adjoint())
        .collect()
}

/// Unit-norm eigenvector of `A` for the eigenvalue `λ`.
pub fn eigenvector(a: &DMatrix<f64>, lambda: Complex64) -> Result<DVector<Complex64>> {
    if !a.is_square() || a.nrows() == 0 {
        return Err(Error::ShapeMismatch("eigenvector needs a square matrix".into()));
    }
    let n = a.nrows();
    let svd = SVD::new(shifted(a, lambda), false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let (k, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .expect("non-empty");
    let mut xi: DVector<Complex64> = v_t.row(k).adjoint();
    xi /= Complex64::new(xi.norm(), 0.0);
    let a_c = a.map(|v| Complex64::new(v, 0.0));
    let residual = (&a_c * &xi - &xi * lambda).norm();
    if residual > 1e-8 * residual_scale(a) {
        return Err(Error::NotAnEigenvalue {
            value: lambda,
            residual,
        });
    }
    // fix the phase so the largest entry is real and positive
    let (_, pivot) = xi
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.norm().total_cmp(&y.1.norm()))
        .map(|(i, v)| (i, *v))
        .expect("n >= 1");
    let phase = pivot.conj() / pivot.norm();
    debug_assert_eq!(xi.len(), n);
    Ok(xi * phase)
}

/// Condition number `1/|yᴴx|` of a simple eigenvalue, with unit right and
/// left eigenvectors `x`, `y`. Equals 1 for normal matrices.
pub fn eigenvalue_condition(a: &DMatrix<f64>, lambda: Complex64) -> Result<f64> {
    let x = eigenvector(a, lambda)?;
    // Aᵀȳ = λȳ, so the left eigenvector comes from the transpose
    let w = eigenvector(&a.transpose(), lambda)?;
    let s = w.transpose() * x;
    Ok(1.0 / s[(0, 0)].norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn balancing_is_a_similarity() {
        let a = dmatrix![1.0, 1e6, 0.0; 1e-6, 2.0, 1e5; 0.0, 1e-5, 3.0];
        let b = balance(&a);
        assert!(b.norm() < 1e-3 * a.norm());
        assert!((b.trace() - a.trace()).abs() < 1e-12);
        assert!((b.determinant() - a.determinant()).abs() < 1e-9);
    }

    #[test]
    fn eigenvalue_condition_examples() {
        let sym = dmatrix![2.0, 1.0; 1.0, 3.0];
        for l in eigenvalues(&sym).unwrap() {
            assert!((eigenvalue_condition(&sym, l).unwrap() - 1.0).abs() < 1e-12);
        }
        // [[1, t], [0, 2]]: x = e₁, y ∝ (1, −t), so κ = √(1 + t²)
        let t = 100.0;
        let tri = dmatrix![1.0, t; 0.0, 2.0];
        let k = eigenvalue_condition(&tri, c(1.0, 0.0)).unwrap();
        assert!((k - (1.0 + t * t).sqrt()).abs() < 1e-9 * k);
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn char_poly_small_cases() {
        assert_eq!(char_poly(&DMatrix::identity(2, 2)).coeffs, vec![-2.0, 1.0]);
        assert_eq!(char_poly(&dmatrix![2.0, 0.0; 0.0, 3.0]).coeffs, vec![-5.0, 6.0]);
        assert_eq!(char_poly(&dmatrix![30.0]).coeffs, vec![-30.0]);
        assert_eq!(char_poly(&DMatrix::zeros(3, 3)).coeffs, vec![0.0; 3]);
    }

    #[test]
    fn char_poly_is_exact_on_integer_matrices() {
        let a = dmatrix![-5.0, 5.0, -2.0; -4.0, 3.0, -1.0; 6.0, -4.0, 5.0];
        // det(λI - A) = λ³ - 3λ² + 3λ - 19 (principal minors by hand)
        assert_eq!(char_poly(&a).coeffs, vec![-3.0, 3.0, -19.0]);
    }

    #[test]
    fn poly_from_roots_examples() {
        let a = poly_from_roots(&[c(1.0, 1.0), c(1.0, -1.0), c(3.0, 0.0)]).unwrap();
        assert_eq!(a.a, vec![-5.0, 8.0, -6.0]);
        assert_eq!(poly_from_roots(&[c(30.0, 0.0)]).unwrap().a, vec![-30.0]);
        assert_eq!(poly_from_roots(&[c(0.0, 0.0); 4]).unwrap().a, vec![0.0; 4]);
    }

    #[test]
    fn poly_from_roots_rejects_lonely_complex_root() {
        assert_eq!(
            poly_from_roots(&[c(1.0, 1.0), c(3.0, 0.0)]),
            Err(Error::NotConjugateClosed)
        );
    }

    #[test]
    fn eigenvalue_examples() {
        let d = eigenvalues(&DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0, 2.0])))
            .unwrap();
        assert_eq!(d, vec![c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)]);

        let rot = eigenvalues(&dmatrix![0.0, -1.0; 1.0, 0.0]).unwrap();
        assert!(max_match_error(&rot, &[c(0.0, 1.0), c(0.0, -1.0)]).unwrap() < 1e-14);

        let comp = eigenvalues(&companion(&[-5.0, 8.0, -6.0])).unwrap();
        let want = [c(1.0, 1.0), c(1.0, -1.0), c(3.0, 0.0)];
        assert!(max_match_error(&comp, &want).unwrap() < 1e-10);
    }

    #[test]
    fn eigenvector_examples() {
        let xi = eigenvector(&dmatrix![2.0, 0.0; 0.0, 3.0], c(2.0, 0.0)).unwrap();
        assert!((xi[0] - c(1.0, 0.0)).norm() < 1e-12);
        assert!(xi[1].norm() < 1e-12);

        let xi = eigenvector(&dmatrix![0.0, -1.0; 1.0, 0.0], c(0.0, 1.0)).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // (1, -i)/√2 up to phase; the phase is fixed so the pivot is real
        let want = [c(s, 0.0), c(0.0, -s)];
        let alt = [c(0.0, s), c(s, 0.0)];
        let close = |w: &[Complex64]| (0..2).all(|i| (xi[i] - w[i]).norm() < 1e-12);
        assert!(close(&want) || close(&alt), "{xi}");
    }

    #[test]
    fn eigenvector_rejects_non_eigenvalue() {
        let err = eigenvector(&dmatrix![2.0, 0.0; 0.0, 3.0], c(2.5, 0.0)).unwrap_err();
        assert!(matches!(err, Error::NotAnEigenvalue { .. }));
    }

    #[test]
    fn eval_matrix_cayley_hamilton() {
        let a = dmatrix![1.0, 2.0, 0.0; -1.0, 0.5, 3.0; 2.0, 0.0, -1.0];
        let p = char_poly(&a);
        assert!(p.eval_matrix(&a).norm() < 1e-12);
    }

    #[test]
    fn match_pairs_size_mismatch() {
        assert!(max_match_error(&[c(1.0, 0.0)], &[]).is_none());
    }
}
