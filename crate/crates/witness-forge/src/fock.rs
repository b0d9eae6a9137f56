//! Truncated Fock-space engine.
//!
//! Everything in here is brute force on purpose: operators are dense matrices
//! over the number basis `{|0>, ..., |n_max>}` per mode, states are vectors or
//! density matrices over tensor products of that basis, and expectation values
//! are plain contractions. The closed-form evaluators in [`crate::states`] are
//! cross-checked against this module, never the other way around.
//!
//! Conventions fixed project-wide:
//! * quadratures `x = (a + a†)/√2`, `p = (a − a†)/(i√2)`, vacuum variance 1/2;
//! * mode 0 is the slowest tensor index (`kron(A_0, A_1, ...)` ordering);
//! * the displaced photon-number operator is built polynomially as
//!   `(a − α)†(a − α)`, which reproduces the exact infinite-matrix elements
//!   everywhere inside the cutoff. Eigen-checks must stay away from the
//!   truncation boundary.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::states::StateModel;

const HERMITICITY_TOL: f64 = 1e-10;
const IMAG_RESIDUAL_TOL: f64 = 1e-8;
const TRACE_DEFICIT_TOL: f64 = 1e-6;
const DISTRIBUTION_DEFICIT_TOL: f64 = 1e-4;
const NEGATIVE_PROBABILITY_TOL: f64 = 1e-10;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn czero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// Maximum photon number kept per mode; the basis is `{0, ..., n_max}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockCutoff {
    n_max: usize,
}

impl FockCutoff {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidState("cutoff requires n_max >= 1".into()));
        }
        Ok(Self { n_max })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Single-mode dimension `n_max + 1`.
    pub fn dim(&self) -> usize {
        self.n_max + 1
    }

    /// Total dimension of an `n_modes` tensor product.
    pub fn total_dim(&self, n_modes: usize) -> usize {
        self.dim().pow(n_modes as u32)
    }
}

/// A single-mode operator in the truncated number basis.
#[derive(Debug, Clone)]
pub struct ModeOperator {
    pub cutoff: FockCutoff,
    pub data: DMatrix<Complex64>,
}

impl ModeOperator {
    pub fn identity(cutoff: FockCutoff) -> Self {
        Self {
            cutoff,
            data: DMatrix::identity(cutoff.dim(), cutoff.dim()),
        }
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (&self.data - self.data.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

/// `<n-1| a |n> = √n`, all other entries zero.
pub fn annihilation_matrix(cutoff: FockCutoff) -> ModeOperator {
    let d = cutoff.dim();
    let mut m = DMatrix::zeros(d, d);
    for n in 1..d {
        m[(n - 1, n)] = c((n as f64).sqrt());
    }
    ModeOperator { cutoff, data: m }
}

/// Displaced photon-number operator `n(α) = (a − α)†(a − α)`.
///
/// Expanded as `a†a − α* a − α a† + |α|²`, which is tridiagonal; entries are
/// written directly so the diagonal is `n + |α|²` exactly (integers at
/// `α = 0`) instead of carrying rounding from a matrix product.
pub fn displaced_number_matrix(alpha: Complex64, cutoff: FockCutoff) -> ModeOperator {
    let d = cutoff.dim();
    let mut m = DMatrix::zeros(d, d);
    let abs2 = alpha.norm_sqr();
    for n in 0..d {
        m[(n, n)] = c(n as f64 + abs2);
    }
    for n in 0..d - 1 {
        let root = c(((n + 1) as f64).sqrt());
        m[(n, n + 1)] = -alpha.conj() * root;
        m[(n + 1, n)] = -alpha * root;
    }
    ModeOperator { cutoff, data: m }
}

/// Matrix elements of the unitary displacement `D(α) = exp(α a† − α* a)`,
/// evaluated in closed form (associated Laguerre polynomials) rather than by
/// exponentiating the truncated generator:
///
/// `<m|D(α)|n> = √(n!/m!) α^{m−n} e^{−|α|²/2} L_n^{(m−n)}(|α|²)` for `m >= n`,
/// and the adjoint relation `<m|D(α)|n> = <n|D(−α)|m>*` below the diagonal.
pub fn displacement_matrix(alpha: Complex64, cutoff: FockCutoff) -> DMatrix<Complex64> {
    let d = cutoff.dim();
    let x = alpha.norm_sqr();
    let pref = (-x / 2.0).exp();
    let mut lnf = vec![0.0f64; d];
    for n in 1..d {
        lnf[n] = lnf[n - 1] + (n as f64).ln();
    }
    let laguerre = |n: usize, k: usize| -> f64 {
        if n == 0 {
            return 1.0;
        }
        let kf = k as f64;
        let (mut prev, mut cur) = (1.0, 1.0 + kf - x);
        for i in 1..n {
            let fi = i as f64;
            let next = ((2.0 * fi + kf + 1.0 - x) * cur - (fi + kf) * prev) / (fi + 1.0);
            prev = cur;
            cur = next;
        }
        cur
    };
    let mut m = DMatrix::zeros(d, d);
    for row in 0..d {
        for col in 0..d {
            let (lo, hi) = (row.min(col), row.max(col));
            let k = hi - lo;
            let ratio = (0.5 * (lnf[lo] - lnf[hi])).exp();
            let lagv = laguerre(lo, k);
            let amp = if row >= col {
                alpha.powu(k as u32)
            } else {
                (-alpha.conj()).powu(k as u32)
            };
            m[(row, col)] = c(ratio * pref * lagv) * amp;
        }
    }
    m
}

/// Multi-mode pure state over the truncated basis.
#[derive(Debug, Clone)]
pub struct StateVector {
    pub n_modes: usize,
    pub cutoff: FockCutoff,
    pub data: DVector<Complex64>,
}

impl StateVector {
    pub fn normalized(mut self) -> Self {
        let n = self.data.norm();
        if n > 0.0 {
            self.data /= c(n);
        }
        self
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.norm_squared()
    }

    /// `<v| (A_1 ⊗ ... ⊗ A_N) |v>` for one operator per mode.
    pub fn tensor_expectation(&self, ops: &[ModeOperator]) -> Result<f64> {
        check_ops(self.n_modes, self.cutoff, ops)?;
        let mut w = self.data.clone();
        for (mode, op) in ops.iter().enumerate() {
            w = apply_mode_op(&op.data, &w, mode, self.n_modes);
        }
        real_part_checked(self.data.dotc(&w))
    }
}

/// Multi-mode density matrix, Hermitian and unit trace after construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "DensityMatrixRepr", into = "DensityMatrixRepr")]
pub struct DensityMatrix {
    pub n_modes: usize,
    pub cutoff: FockCutoff,
    pub data: DMatrix<Complex64>,
}

/// JSON shape of a raw density matrix: row-major complex entries.
#[derive(Serialize, Deserialize, Clone)]
struct DensityMatrixRepr {
    n_modes: usize,
    n_max: usize,
    #[serde(with = "crate::serde_complex::mat")]
    data: Vec<Vec<Complex64>>,
}

impl TryFrom<DensityMatrixRepr> for DensityMatrix {
    type Error = Error;

    fn try_from(repr: DensityMatrixRepr) -> Result<Self> {
        let cutoff = FockCutoff::new(repr.n_max)?;
        let dim = cutoff.total_dim(repr.n_modes);
        if repr.data.len() != dim || repr.data.iter().any(|row| row.len() != dim) {
            return Err(Error::InvalidState(format!(
                "density matrix data must be {dim}x{dim}"
            )));
        }
        let flat: Vec<Complex64> = repr.data.into_iter().flatten().collect();
        DensityMatrix::from_matrix(
            repr.n_modes,
            cutoff,
            DMatrix::from_row_iterator(dim, dim, flat),
        )
    }
}

impl From<DensityMatrix> for DensityMatrixRepr {
    fn from(rho: DensityMatrix) -> Self {
        let dim = rho.data.nrows();
        let data = (0..dim)
            .map(|r| (0..dim).map(|c_| rho.data[(r, c_)]).collect())
            .collect();
        DensityMatrixRepr {
            n_modes: rho.n_modes,
            n_max: rho.cutoff.n_max(),
            data,
        }
    }
}

impl DensityMatrix {
    /// Validates dimensions and Hermiticity, then normalizes the trace to 1.
    pub fn from_matrix(
        n_modes: usize,
        cutoff: FockCutoff,
        data: DMatrix<Complex64>,
    ) -> Result<Self> {
        let dim = cutoff.total_dim(n_modes);
        if data.nrows() != dim || data.ncols() != dim {
            return Err(Error::InvalidState(format!(
                "density matrix must be {dim}x{dim} for {n_modes} modes at n_max {}",
                cutoff.n_max()
            )));
        }
        let herm_defect = (&data - data.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if herm_defect > HERMITICITY_TOL {
            return Err(Error::InvalidState(format!(
                "density matrix is not Hermitian (defect {herm_defect:.3e})"
            )));
        }
        let tr = data.trace();
        if tr.re <= 0.0 {
            return Err(Error::InvalidState(
                "density matrix has nonpositive trace".into(),
            ));
        }
        let data = data / c(tr.re);
        Ok(Self {
            n_modes,
            cutoff,
            data,
        })
    }

    pub fn from_pure(v: &StateVector) -> Self {
        let v = v.clone().normalized();
        Self {
            n_modes: v.n_modes,
            cutoff: v.cutoff,
            data: &v.data * v.data.adjoint(),
        }
    }

    pub fn trace(&self) -> f64 {
        self.data.trace().re
    }

    pub fn purity(&self) -> f64 {
        (&self.data * &self.data).trace().re
    }

    /// Smallest eigenvalue; `>= -1e-8` is the positivity budget used in tests.
    pub fn min_eigenvalue(&self) -> f64 {
        nalgebra::SymmetricEigen::new(self.data.clone())
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }
}

fn check_ops(n_modes: usize, cutoff: FockCutoff, ops: &[ModeOperator]) -> Result<()> {
    if ops.len() != n_modes {
        return Err(Error::ModelMismatch {
            expected: ops.len(),
            actual: n_modes,
        });
    }
    for op in ops {
        if op.cutoff != cutoff {
            return Err(Error::InvalidState(
                "operator and state cutoffs differ".into(),
            ));
        }
    }
    Ok(())
}

fn real_part_checked(z: Complex64) -> Result<f64> {
    if z.im.abs() > IMAG_RESIDUAL_TOL {
        return Err(Error::ImaginaryResidual {
            imag: z.im.abs(),
            limit: IMAG_RESIDUAL_TOL,
        });
    }
    Ok(z.re)
}

/// Applies a single-mode operator along one tensor axis of a state vector.
fn apply_mode_op(
    op: &DMatrix<Complex64>,
    v: &DVector<Complex64>,
    mode: usize,
    n_modes: usize,
) -> DVector<Complex64> {
    let d = op.nrows();
    let stride = d.pow((n_modes - 1 - mode) as u32);
    let outer = d.pow(mode as u32);
    let mut out = DVector::from_element(v.len(), czero());
    for o in 0..outer {
        for s in 0..stride {
            let base = o * d * stride + s;
            for i in 0..d {
                let mut acc = czero();
                for k in 0..d {
                    acc += op[(i, k)] * v[base + k * stride];
                }
                out[base + i * stride] = acc;
            }
        }
    }
    out
}

/// `(A_1 ⊗ ... ⊗ A_N) ρ` without materializing the Kronecker product.
fn apply_mode_ops_left(
    rho: &DMatrix<Complex64>,
    ops: &[ModeOperator],
    n_modes: usize,
) -> DMatrix<Complex64> {
    let dim = rho.nrows();
    let mut out = rho.clone();
    for (mode, op) in ops.iter().enumerate() {
        let mut next = DMatrix::from_element(dim, dim, czero());
        for col in 0..dim {
            let colv = DVector::from_column_slice(out.column(col).as_slice());
            next.set_column(col, &apply_mode_op(&op.data, &colv, mode, n_modes));
        }
        out = next;
    }
    out
}

/// `Tr[ρ (A_1 ⊗ ... ⊗ A_N)]`, one operator per mode.
///
/// The imaginary part is checked against the 1e-8 budget and discarded; a
/// larger residual means a non-Hermitian operator slipped in.
pub fn tensor_expectation(rho: &DensityMatrix, ops: &[ModeOperator]) -> Result<f64> {
    check_ops(rho.n_modes, rho.cutoff, ops)?;
    let prod = apply_mode_ops_left(&rho.data, ops, rho.n_modes);
    real_part_checked(prod.trace())
}

/// Builds the truncated Fock representation of an analytic state model.
///
/// Fails with [`Error::CutoffTooSmall`] when the truncated norm is short of
/// the exact one by more than 1e-6 before renormalization.
pub fn state_to_fock(state: &StateModel, cutoff: FockCutoff) -> Result<DensityMatrix> {
    match state {
        StateModel::NoisyFourModeCat { gamma, sigma } if *sigma > 0.0 => {
            noisy_cat_density(*gamma, *sigma, cutoff)
        }
        StateModel::FockDensity(rho) => {
            if rho.cutoff != cutoff {
                return Err(Error::InvalidState(
                    "stored density matrix has a different cutoff".into(),
                ));
            }
            Ok(rho.clone())
        }
        _ => Ok(DensityMatrix::from_pure(&state_to_vector(state, cutoff)?)),
    }
}

/// Pure-model states as truncated vectors. Errors on mixed models.
pub fn state_to_vector(state: &StateModel, cutoff: FockCutoff) -> Result<StateVector> {
    let (raw, exact_norm_sqr, n_modes) = match state {
        StateModel::CoherentSuperposition(sup) => (
            superposition_raw_vector(state, cutoff)?,
            sup.norm_sqr()?,
            sup.n_modes,
        ),
        StateModel::Tmsv { .. } => (superposition_raw_vector(state, cutoff)?, 1.0, 2),
        StateModel::PhotonSubtractedTmsv { xi, .. } => {
            let r = xi.norm();
            if r == 0.0 {
                return Err(Error::InvalidState(
                    "photon subtraction from vacuum leaves no state".into(),
                ));
            }
            (
                superposition_raw_vector(state, cutoff)?,
                r.sinh().powi(2),
                2,
            )
        }
        StateModel::NoisyFourModeCat { gamma, sigma } => {
            if *sigma > 0.0 {
                return Err(Error::InvalidState(
                    "noisy four-mode state with sigma > 0 is mixed; use state_to_fock".into(),
                ));
            }
            return state_to_vector(&StateModel::four_mode_cat(*gamma), cutoff);
        }
        StateModel::FockDensity(_) => {
            return Err(Error::InvalidState(
                "raw density matrices have no vector form".into(),
            ))
        }
    };
    let deficit = 1.0 - raw.norm_squared() / exact_norm_sqr;
    if deficit > TRACE_DEFICIT_TOL {
        return Err(Error::CutoffTooSmall {
            deficit,
            limit: TRACE_DEFICIT_TOL,
        });
    }
    Ok(StateVector {
        n_modes,
        cutoff,
        data: raw,
    }
    .normalized())
}

/// Pre-normalization truncation deficit of a pure model, relative to the
/// exact norm. Used by the cutoff policy.
pub fn norm_deficit(state: &StateModel, cutoff: FockCutoff) -> Result<f64> {
    match state {
        StateModel::CoherentSuperposition(sup) => {
            let raw = superposition_raw_vector(state, cutoff)?;
            Ok(1.0 - raw.norm_squared() / sup.norm_sqr()?)
        }
        StateModel::Tmsv { .. } => {
            let raw = superposition_raw_vector(state, cutoff)?;
            Ok(1.0 - raw.norm_squared())
        }
        StateModel::PhotonSubtractedTmsv { xi, .. } => {
            let raw = superposition_raw_vector(state, cutoff)?;
            Ok(1.0 - raw.norm_squared() / xi.norm().sinh().powi(2))
        }
        StateModel::NoisyFourModeCat { gamma, .. } => {
            norm_deficit(&StateModel::four_mode_cat(*gamma), cutoff)
        }
        StateModel::FockDensity(_) => Ok(0.0),
    }
}

/// Unnormalized truncated vector for the pure families.
fn superposition_raw_vector(state: &StateModel, cutoff: FockCutoff) -> Result<DVector<Complex64>> {
    match state {
        StateModel::CoherentSuperposition(sup) => {
            let mut v = DVector::from_element(cutoff.total_dim(sup.n_modes), czero());
            for term in &sup.terms {
                let mut tv = DVector::from_element(1, c(1.0));
                for amp in &term.amplitudes {
                    tv = kron_vec(&tv, &coherent_vector(*amp, cutoff));
                }
                v += tv * term.coeff;
            }
            Ok(v)
        }
        StateModel::Tmsv { xi } => Ok(tmsv_vector(*xi, cutoff)),
        StateModel::PhotonSubtractedTmsv { xi, kappa } => {
            let base = tmsv_vector(*xi, cutoff);
            let a = annihilation_matrix(cutoff);
            let va = apply_mode_op(&a.data, &base, 0, 2);
            let vb = apply_mode_op(&a.data, &base, 1, 2);
            Ok(va * c(kappa.sqrt()) + vb * c((1.0 - kappa).sqrt()))
        }
        _ => Err(Error::InvalidState("not a pure analytic family".into())),
    }
}

fn kron_vec(a: &DVector<Complex64>, b: &DVector<Complex64>) -> DVector<Complex64> {
    let mut out = DVector::from_element(a.len() * b.len(), czero());
    for i in 0..a.len() {
        for j in 0..b.len() {
            out[i * b.len() + j] = a[i] * b[j];
        }
    }
    out
}

/// Coefficients of a truncated coherent state, `c_n = e^{-|γ|²/2} γ^n/√n!`.
pub fn coherent_vector(gamma: Complex64, cutoff: FockCutoff) -> DVector<Complex64> {
    let d = cutoff.dim();
    let mut v = DVector::from_element(d, czero());
    let mut amp = c((-gamma.norm_sqr() / 2.0).exp());
    v[0] = amp;
    for n in 1..d {
        amp *= gamma / c((n as f64).sqrt());
        v[n] = amp;
    }
    v
}

/// Two-mode squeezed vacuum in the Schmidt form
/// `sech|ξ| Σ (−e^{i arg ξ} tanh|ξ|)^n |n,n>`.
fn tmsv_vector(xi: Complex64, cutoff: FockCutoff) -> DVector<Complex64> {
    let d = cutoff.dim();
    let r = xi.norm();
    let phase = if r == 0.0 {
        c(1.0)
    } else {
        Complex64::from_polar(1.0, xi.arg())
    };
    let mut v = DVector::from_element(d * d, czero());
    let mut amp = c(1.0 / r.cosh());
    for n in 0..d {
        v[n * d + n] = amp;
        amp *= -phase * r.tanh();
    }
    v
}

fn noisy_cat_density(gamma: Complex64, sigma: f64, cutoff: FockCutoff) -> Result<DensityMatrix> {
    let rule =
        crate::states::QuadratureRule::gauss_hermite(crate::states::DEFAULT_QUADRATURE_ORDER);
    let dim = cutoff.total_dim(4);
    let mut acc = DMatrix::from_element(dim, dim, czero());
    let s = sigma * std::f64::consts::SQRT_2;
    for (xi_node, wi) in rule.nodes().iter().zip(rule.weights()) {
        for (xj_node, wj) in rule.nodes().iter().zip(rule.weights()) {
            let gp = gamma + Complex64::new(s * xi_node, s * xj_node);
            let v = state_to_vector(&StateModel::four_mode_cat(gp), cutoff)?;
            acc += (&v.data * v.data.adjoint()) * c(wi * wj / std::f64::consts::PI);
        }
    }
    DensityMatrix::from_matrix(4, cutoff, acc)
}

/// Joint photon-number distribution after displacing every mode.
#[derive(Debug, Clone)]
pub struct JointDistribution {
    pub n_modes: usize,
    pub cutoff: FockCutoff,
    /// Flattened probabilities, mode 0 slowest.
    pub probs: Vec<f64>,
    /// Probability mass lost to truncation before renormalization.
    pub deficit: f64,
}

impl JointDistribution {
    pub fn dim(&self) -> usize {
        self.cutoff.dim()
    }

    /// Decodes a flat outcome index into per-mode photon numbers.
    pub fn digits(&self, mut flat: usize) -> Vec<usize> {
        let d = self.dim();
        let mut out = vec![0usize; self.n_modes];
        for j in (0..self.n_modes).rev() {
            out[j] = flat % d;
            flat /= d;
        }
        out
    }

    pub fn photon_number(&self, flat: usize, mode: usize) -> usize {
        let d = self.dim();
        (flat / d.pow((self.n_modes - 1 - mode) as u32)) % d
    }

    pub fn mean_photon_number(&self, mode: usize) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, p)| self.photon_number(i, mode) as f64 * p)
            .sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }
}

fn distribution_from_probs(
    n_modes: usize,
    cutoff: FockCutoff,
    mut probs: Vec<f64>,
) -> Result<JointDistribution> {
    let mut worst = 0.0f64;
    for p in probs.iter_mut() {
        if *p < 0.0 {
            worst = f64::min(worst, *p);
            *p = 0.0;
        }
    }
    if worst < -NEGATIVE_PROBABILITY_TOL {
        return Err(Error::CutoffTooSmall {
            deficit: -worst,
            limit: NEGATIVE_PROBABILITY_TOL,
        });
    }
    let mass: f64 = probs.iter().sum();
    let deficit = 1.0 - mass;
    if deficit > DISTRIBUTION_DEFICIT_TOL {
        return Err(Error::CutoffTooSmall {
            deficit,
            limit: DISTRIBUTION_DEFICIT_TOL,
        });
    }
    if mass > 0.0 {
        for p in probs.iter_mut() {
            *p /= mass;
        }
    }
    Ok(JointDistribution {
        n_modes,
        cutoff,
        probs,
        deficit,
    })
}

/// `p(n_1..n_N) = <n| D(−α)^{⊗N} ρ D(−α)†^{⊗N} |n>`.
///
/// Entries below −1e-10 abort with [`Error::CutoffTooSmall`]; tiny negative
/// dust above that threshold is clipped and the distribution renormalized,
/// with the lost mass reported in `deficit`.
pub fn joint_displaced_number_distribution(
    rho: &DensityMatrix,
    displacements: &[Complex64],
) -> Result<JointDistribution> {
    if displacements.len() != rho.n_modes {
        return Err(Error::ModelMismatch {
            expected: displacements.len(),
            actual: rho.n_modes,
        });
    }
    let ops: Vec<ModeOperator> = displacements
        .iter()
        .map(|alpha| ModeOperator {
            cutoff: rho.cutoff,
            data: displacement_matrix(-alpha, rho.cutoff),
        })
        .collect();
    // U ρ U† via per-mode applications only: U (U ρ†)† with ρ† = ρ
    let half = apply_mode_ops_left(&rho.data, &ops, rho.n_modes);
    let full = apply_mode_ops_left(&half.adjoint(), &ops, rho.n_modes).adjoint();
    let probs: Vec<f64> = (0..full.nrows()).map(|i| full[(i, i)].re).collect();
    distribution_from_probs(rho.n_modes, rho.cutoff, probs)
}

/// Pure-state fast path for the same distribution.
pub fn joint_displaced_number_distribution_pure(
    v: &StateVector,
    displacements: &[Complex64],
) -> Result<JointDistribution> {
    if displacements.len() != v.n_modes {
        return Err(Error::ModelMismatch {
            expected: displacements.len(),
            actual: v.n_modes,
        });
    }
    let mut w = v.clone().normalized().data;
    for (mode, alpha) in displacements.iter().enumerate() {
        let d = displacement_matrix(-alpha, v.cutoff);
        w = apply_mode_op(&d, &w, mode, v.n_modes);
    }
    let probs: Vec<f64> = w.iter().map(|z| z.norm_sqr()).collect();
    distribution_from_probs(v.n_modes, v.cutoff, probs)
}

/// Symmetrized quadrature covariance matrix of a two-mode state, ordered
/// `(x_1, p_1, x_2, p_2)`.
pub fn covariance_matrix(rho: &DensityMatrix) -> Result<DMatrix<f64>> {
    if rho.n_modes != 2 {
        return Err(Error::InvalidState(
            "covariance extraction is implemented for two-mode states".into(),
        ));
    }
    let cutoff = rho.cutoff;
    let d = cutoff.dim();
    let a = annihilation_matrix(cutoff).data;
    let ad = a.adjoint();
    let sqrt2 = c(std::f64::consts::SQRT_2);
    let i = Complex64::new(0.0, 1.0);
    let x = (&a + &ad) / sqrt2;
    let p = (&a - &ad) / (i * sqrt2);
    let quads = [x, p];
    let id = DMatrix::identity(d, d);

    let op = |m: DMatrix<Complex64>| ModeOperator { cutoff, data: m };
    let pair = |m0: DMatrix<Complex64>, m1: DMatrix<Complex64>| vec![op(m0), op(m1)];

    // first moments: indices 0,1 live on mode 0 and 2,3 on mode 1
    let mut mu = [0.0f64; 4];
    for q in 0..2 {
        mu[q] = tensor_expectation(rho, &pair(quads[q].clone(), id.clone()))?;
        mu[2 + q] = tensor_expectation(rho, &pair(id.clone(), quads[q].clone()))?;
    }

    let sym = |u: &DMatrix<Complex64>, v: &DMatrix<Complex64>| (u * v + v * u) / c(2.0);
    let mut cov = DMatrix::zeros(4, 4);
    for r in 0..4 {
        for col in r..4 {
            let (mr, qr) = (r / 2, r % 2);
            let (mc, qc) = (col / 2, col % 2);
            let second = if mr == mc {
                let prod = sym(&quads[qr], &quads[qc]);
                if mr == 0 {
                    tensor_expectation(rho, &pair(prod, id.clone()))?
                } else {
                    tensor_expectation(rho, &pair(id.clone(), prod))?
                }
            } else {
                tensor_expectation(rho, &pair(quads[qr].clone(), quads[qc].clone()))?
            };
            let val = second - mu[r] * mu[col];
            cov[(r, col)] = val;
            cov[(col, r)] = val;
        }
    }
    Ok(cov)
}

/// Symplectic spectrum of a `2N x 2N` covariance matrix in `(x, p)` pairs.
///
/// Physical states satisfy `ν_k >= 1/2` in this convention.
pub fn symplectic_eigenvalues(cov: &DMatrix<f64>) -> Vec<f64> {
    let n = cov.nrows() / 2;
    let mut omega = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    let eig = (omega * cov).complex_eigenvalues();
    let mut nus: Vec<f64> = eig.iter().map(|z| z.im.abs()).collect();
    nus.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // eigenvalues come in ±iν pairs; keep one of each
    nus.chunks(2).map(|pair| pair[pair.len() - 1]).collect()
}

/// Smallest cutoff satisfying the truncation policy: pre-normalization norm
/// deficit below 1e-8, with `headroom` added to every coherent amplitude to
/// leave room for displaced measurements.
pub fn default_cutoff(state: &StateModel, headroom: f64) -> Result<FockCutoff> {
    if let StateModel::FockDensity(rho) = state {
        return Ok(rho.cutoff);
    }
    let probe = match state {
        StateModel::NoisyFourModeCat { gamma, sigma } if *sigma > 0.0 => {
            // widest quadrature node of the mixture dominates the tail
            StateModel::four_mode_cat(Complex64::new(gamma.norm() + 6.0 * sigma, 0.0))
        }
        other => other.clone(),
    };
    let amp = probe.max_amplitude() + headroom;
    let mean = amp * amp;
    let mut n = (mean + 8.0 * mean.sqrt() + 12.0).ceil() as usize;
    loop {
        let cutoff = FockCutoff::new(n.max(2))?;
        if norm_deficit(&probe, cutoff)? < 1e-8 {
            return Ok(cutoff);
        }
        if n >= 64 {
            return Err(Error::CutoffTooSmall {
                deficit: norm_deficit(&probe, cutoff)?,
                limit: 1e-8,
            });
        }
        n = (n + n / 2).max(n + 2);
    }
}
