//! Model-based α-spectrum assignment.
//!
//! With `K_u = αI` fixed, the closed-loop drift is `G + F·K_v` where
//! `G = H + αL`. Placing the eigenvalues of that matrix at `λ₁..λₙ` with a
//! single-input Ackermann gain puts the discrete operator spectrum at
//! `{λᵢλⱼ + α²}` and the continuous one at `{λᵢ + λⱼ + α²}` (`j ≥ i`).

use nalgebra::{DMatrix, DVector, RowDVector, SymmetricEigen, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{self, eigenspace, is_conjugate_closed, poly_from_roots};
use crate::symspace::{sym_dim, SpectrumSet};
use crate::system::{GeneralSystem, Mode, PlantParams};

/// Reciprocal condition number below which a matrix counts as singular.
pub const RCOND_THRESHOLD: f64 = 1e-12;

const REAL_TOLERANCE: f64 = 1e-12;
const CLOSURE_TOLERANCE: f64 = 1e-9;

/// Target of an α-spectrum assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentSpec {
    pub mode: Mode,
    pub alpha: f64,
    pub lambdas: Vec<Complex64>,
}

impl AssignmentSpec {
    pub fn new(mode: Mode, alpha: f64, lambdas: Vec<Complex64>) -> Result<Self> {
        let spec = Self {
            mode,
            alpha,
            lambdas,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambdas.is_empty() {
            return Err(Error::SpecInvalid("at least one eigenvalue is required".into()));
        }
        if !self.alpha.is_finite() || self.lambdas.iter().any(|l| !l.re.is_finite() || !l.im.is_finite()) {
            return Err(Error::SpecInvalid("alpha and eigenvalues must be finite".into()));
        }
        match self.mode {
            Mode::Discrete => {
                if !is_conjugate_closed(&self.lambdas, CLOSURE_TOLERANCE) {
                    return Err(Error::SpecInvalid(
                        "discrete eigenvalues must be real or come in conjugate pairs".into(),
                    ));
                }
            }
            Mode::Continuous => {
                if let Some(l) = self.lambdas.iter().find(|l| l.im.abs() > REAL_TOLERANCE) {
                    return Err(Error::SpecInvalid(format!(
                        "continuous eigenvalues must be real, got {l}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lambdas.len()
    }
}

/// `K_u = αI` together with the row gain `K_v` (`T_u`, `T_v` in continuous time).
#[derive(Debug, Clone, PartialEq)]
pub struct GainPair {
    pub alpha: f64,
    pub kv: RowDVector<f64>,
}

impl GainPair {
    pub fn ku(&self) -> DMatrix<f64> {
        let n = self.kv.len();
        DMatrix::identity(n, n) * self.alpha
    }
}

/// `{λᵢλⱼ + α²}` or `{λᵢ + λⱼ + α²}` over `j ≥ i`, multiplicities kept.
pub fn target_spectrum(spec: &AssignmentSpec) -> Result<SpectrumSet> {
    spec.validate()?;
    let a2 = spec.alpha * spec.alpha;
    let n = spec.dim();
    let mut values = Vec::with_capacity(sym_dim(n));
    for i in 0..n {
        for j in i..n {
            let (li, lj) = (spec.lambdas[i], spec.lambdas[j]);
            values.push(match spec.mode {
                Mode::Discrete => li * lj + a2,
                Mode::Continuous => li + lj + a2,
            });
        }
    }
    Ok(SpectrumSet::from_values(values))
}

/// `[F, GF, …, Gⁿ⁻¹F]`.
pub fn controllability_matrix(g: &DMatrix<f64>, f: &DVector<f64>) -> DMatrix<f64> {
    let n = g.nrows();
    let mut cols = Vec::with_capacity(n);
    let mut v = f.clone();
    for _ in 0..n {
        let next = g * &v;
        cols.push(v);
        v = next;
    }
    DMatrix::from_columns(&cols)
}

/// Ratio of smallest to largest singular value (0 for the zero matrix).
pub fn rcond(m: &DMatrix<f64>) -> f64 {
    let sv = SVD::new(m.clone(), false, false).singular_values;
    let max = sv.max();
    if max == 0.0 || !max.is_finite() {
        return 0.0;
    }
    sv.min() / max
}

pub fn controllability_rcond(g: &DMatrix<f64>, f: &DVector<f64>) -> f64 {
    rcond(&controllability_matrix(g, f))
}

pub fn is_controllable(g: &DMatrix<f64>, f: &DVector<f64>) -> bool {
    controllability_rcond(g, f) > RCOND_THRESHOLD
}

/// Ackermann gain: `K_v = aD + bGⁿ` with `b = −[0 … 0 1]𝒞⁻¹` and
/// `D = [bGⁿ⁻¹; …; bG; b]`, which places `eig(G + F·K_v)` at `lambdas`.
pub fn ackermann_gain(
    g: &DMatrix<f64>,
    f: &DVector<f64>,
    lambdas: &[Complex64],
) -> Result<RowDVector<f64>> {
    let n = g.nrows();
    if !g.is_square() || f.len() != n || lambdas.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "need G: {n}x{n}, F: {n}x1 and {n} eigenvalues; got G {:?}, F {}, {} eigenvalues",
            g.shape(),
            f.len(),
            lambdas.len()
        )));
    }
    let ctrb = controllability_matrix(g, f);
    let rc = rcond(&ctrb);
    if rc <= RCOND_THRESHOLD {
        return Err(Error::NotControllable { rcond: rc });
    }
    let target = poly_from_roots(lambdas)
        .map_err(|_| Error::SpecInvalid("eigenvalues are not closed under conjugation".into()))?;

    // b = −e_nᵀ 𝒞⁻¹, i.e. 𝒞ᵀ bᵀ = −e_n
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = -1.0;
    let bt = ctrb
        .transpose()
        .lu()
        .solve(&rhs)
        .ok_or(Error::NotControllable { rcond: rc })?;
    let b = bt.transpose();

    // rows of D from the bottom: b, bG, …, bGⁿ⁻¹; the last power is bGⁿ
    let mut powers = Vec::with_capacity(n + 1);
    let mut row = b;
    for _ in 0..=n {
        let next = &row * g;
        powers.push(row);
        row = next;
    }
    // a = [a*ₙ₋₁, …, a*₀] pairs with D = [bGⁿ⁻¹; …; b]
    let mut kv = powers[n].clone();
    for (k, &coef) in target.a.iter().enumerate() {
        kv += &powers[n - 1 - k] * coef;
    }
    Ok(kv)
}

/// Gain pair achieving the α-spectrum assignment `spec` on `params`.
pub fn design(params: &PlantParams, spec: &AssignmentSpec) -> Result<GainPair> {
    spec.validate()?;
    if spec.dim() != params.dim() {
        return Err(Error::ShapeMismatch(format!(
            "plant has dimension {}, spec lists {} eigenvalues",
            params.dim(),
            spec.dim()
        )));
    }
    let g = params.g(spec.alpha);
    let kv = ackermann_gain(&g, &params.f, &spec.lambdas)?;
    Ok(GainPair {
        alpha: spec.alpha,
        kv,
    })
}

/// `(H, L, F)` obtained from a general system whose `B̄` has rank `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSystem {
    pub h: DMatrix<f64>,
    pub l: DMatrix<f64>,
    pub f: DVector<f64>,
    /// Input change of coordinates: the general input is `Q·[q; v]`.
    pub q: DMatrix<f64>,
    pub abar: DMatrix<f64>,
}

impl ReducedSystem {
    pub fn plant(&self) -> PlantParams {
        PlantParams {
            h: self.h.clone(),
            l: self.l.clone(),
            f: self.f.clone(),
        }
    }

    /// Maps a gain on `[q; v]` to a gain on the input of the general system.
    pub fn input_gain(&self, k: &DMatrix<f64>) -> DMatrix<f64> {
        &self.q * k
    }

    /// Largest residual of `B̄Q = [I 0]`, `BQ = [L F]` and `H = A − LĀ`.
    pub fn max_residual(&self, sys: &GeneralSystem) -> f64 {
        let n = sys.dim();
        let mut i0 = DMatrix::zeros(n, n + 1);
        i0.view_mut((0, 0), (n, n)).fill_with_identity();
        let mut lf = DMatrix::zeros(n, n + 1);
        lf.view_mut((0, 0), (n, n)).copy_from(&self.l);
        lf.set_column(n, &self.f);
        let r1 = (&sys.bbar * &self.q - i0).amax();
        let r2 = (&sys.b * &self.q - lf).amax();
        let r3 = (&sys.a - &self.l * &sys.abar - &self.h).amax();
        r1.max(r2).max(r3)
    }
}

/// Builds `Q = [B̄ᵀ(B̄B̄ᵀ)⁻¹ | N]` (with `N` spanning the null space of `B̄`)
/// and the reduced `(H, L, F)`.
pub fn reduce_general(sys: &GeneralSystem) -> Result<ReducedSystem> {
    let n = sys.dim();
    if sys.bbar.ncols() != n + 1 {
        return Err(Error::BadShape(format!(
            "Bbar must have n+1 = {} columns, got {}",
            n + 1,
            sys.bbar.ncols()
        )));
    }
    let rc = rcond(&sys.bbar);
    if rc <= RCOND_THRESHOLD {
        return Err(Error::RankDeficient { rcond: rc });
    }
    let bbt = &sys.bbar * sys.bbar.transpose();
    let right_inv = sys.bbar.transpose()
        * bbt
            .try_inverse()
            .ok_or(Error::RankDeficient { rcond: rc })?;

    let eig = SymmetricEigen::new(sys.bbar.transpose() * &sys.bbar);
    let (k, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .expect("n + 1 >= 2 eigenvalues");
    let mut null = eig.eigenvectors.column(k).into_owned();
    null.normalize_mut();
    if null[null.iamax()] < 0.0 {
        null.neg_mut();
    }

    let mut q = DMatrix::zeros(n + 1, n + 1);
    q.view_mut((0, 0), (n + 1, n)).copy_from(&right_inv);
    q.set_column(n, &null);
    let qrc = rcond(&q);
    if qrc <= RCOND_THRESHOLD {
        return Err(Error::RankDeficient { rcond: qrc });
    }

    let bq = &sys.b * &q;
    let l = bq.columns(0, n).into_owned();
    let f = bq.column(n).into_owned();
    let h = &sys.a - &l * &sys.abar;
    Ok(ReducedSystem {
        h,
        l,
        f,
        q,
        abar: sys.abar.clone(),
    })
}

/// `K = [αI − Ā; K_v]`, the gain on `[q; v]` equivalent to `(αI, K_v)`.
pub fn lift_gain(gain: &GainPair, abar: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = gain.kv.len();
    if abar.shape() != (n, n) {
        return Err(Error::ShapeMismatch(format!(
            "Abar must be {n}x{n}, got {:?}",
            abar.shape()
        )));
    }
    let mut k = DMatrix::zeros(n + 1, n);
    k.view_mut((0, 0), (n, n)).copy_from(&(gain.ku() - abar));
    k.set_row(n, &gain.kv);
    Ok(k)
}

/// Symmetric eigen-matrix `X = ξᵢξⱼᵀ + ξⱼξᵢᵀ` of the closed-loop operator.
///
/// `X` is complex in general; `re` and `im` are its real and imaginary
/// parts. The operator is real-linear, so a complex `μ` acts on the pair
/// `(re, im)` as a 2×2 rotation-scaling block.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub i: usize,
    pub j: usize,
    pub mu: Complex64,
    pub re: DMatrix<f64>,
    pub im: DMatrix<f64>,
}

impl Witness {
    pub fn is_real(&self) -> bool {
        self.im.amax() <= 1e-12 * self.re.amax().max(1.0)
    }

    pub fn norm(&self) -> f64 {
        (self.re.norm_squared() + self.im.norm_squared()).sqrt()
    }

    /// `‖𝓛(X) − μX‖ / ‖X‖` evaluated through the real operator `apply`.
    pub fn relative_residual<F>(&self, mut apply: F) -> Result<f64>
    where
        F: FnMut(&DMatrix<f64>) -> Result<DMatrix<f64>>,
    {
        let (mr, mi) = (self.mu.re, self.mu.im);
        let lr = apply(&self.re)?;
        let li = apply(&self.im)?;
        let r1 = lr - (&self.re * mr - &self.im * mi);
        let r2 = li - (&self.re * mi + &self.im * mr);
        Ok((r1.norm_squared() + r2.norm_squared()).sqrt() / self.norm())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessSet {
    pub witnesses: Vec<Witness>,
}

impl WitnessSet {
    pub fn len(&self) -> usize {
        self.witnesses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.witnesses.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Witness> {
        self.witnesses.iter()
    }
}

/// Eigenvectors of `G + F·kv` for each listed eigenvalue, conjugate pairs
/// getting conjugate vectors.
fn closed_loop_eigenvectors(
    acl: &DMatrix<f64>,
    lambdas: &[Complex64],
) -> Result<Vec<DVector<Complex64>>> {
    let n = lambdas.len();
    let group_tol = 1e-6 * (1.0 + lambdas.iter().map(|l| l.norm()).fold(0.0, f64::max));
    let mut vectors: Vec<Option<DVector<Complex64>>> = vec![None; n];
    for i in 0..n {
        if vectors[i].is_some() {
            continue;
        }
        let li = lambdas[i];
        // representative with non-negative imaginary part
        let rep = if li.im < 0.0 { li.conj() } else { li };
        let members: Vec<usize> = (0..n)
            .filter(|&k| vectors[k].is_none() && (lambdas[k] - li).norm() <= group_tol)
            .collect();
        let basis = if members.len() == 1 {
            vec![numerics::eigenvector(acl, rep)?]
        } else {
            eigenspace(acl, rep, 1e-8)
        };
        if basis.len() < members.len() {
            return Err(Error::DefectiveEigenstructure { value: li });
        }
        for (slot, v) in members.iter().zip(basis) {
            vectors[*slot] = Some(if li.im < 0.0 { v.conjugate() } else { v });
        }
    }
    Ok(vectors.into_iter().map(|v| v.expect("all filled")).collect())
}

/// Witness matrices certifying each target spectrum value of the design.
pub fn witness_set(
    mode: Mode,
    g: &DMatrix<f64>,
    f: &DVector<f64>,
    gain: &GainPair,
    lambdas: &[Complex64],
) -> Result<WitnessSet> {
    let n = g.nrows();
    if f.len() != n || gain.kv.len() != n || lambdas.len() != n {
        return Err(Error::ShapeMismatch("G, F, gain and eigenvalue list disagree in size".into()));
    }
    let acl = g + f * &gain.kv;
    let xis = closed_loop_eigenvectors(&acl, lambdas)?;
    let a2 = gain.alpha * gain.alpha;
    let mut witnesses = Vec::with_capacity(sym_dim(n));
    for i in 0..n {
        for j in i..n {
            let x = &xis[i] * xis[j].transpose() + &xis[j] * xis[i].transpose();
            let mu = match mode {
                Mode::Discrete => lambdas[i] * lambdas[j] + a2,
                Mode::Continuous => lambdas[i] + lambdas[j] + a2,
            };
            witnesses.push(Witness {
                i,
                j,
                mu,
                re: x.map(|v| v.re),
                im: x.map(|v| v.im),
            });
        }
    }
    Ok(WitnessSet { witnesses })
}
