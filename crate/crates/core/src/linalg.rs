//! Dense complex linear algebra shared by every other module.
//!
//! Operators are plain `nalgebra` matrices behind a newtype. Hamiltonians are
//! carried in angular-frequency units (rad/s) with ħ = 1, so propagators are
//! `exp(-i H t)` with `t` in seconds.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tomography::ChiMatrix;

pub const I: C64 = C64::new(0.0, 1.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const ZERO: C64 = C64::new(0.0, 0.0);

/// Tolerance used when accepting a `DensityMatrix` or `StateVector`.
pub const STATE_TOL: f64 = 1e-12;
/// Most negative eigenvalue tolerated in a density matrix.
pub const PSD_TOL: f64 = 1e-10;
/// Relative Hermiticity tolerance for generators passed to `expm_unitary`.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Which basis the rows/columns of a matrix refer to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisTag {
    /// Energy eigenbasis |1>..|4> of the free Hamiltonian.
    Number,
    /// Product basis |↑↑>, |↑↓>, |↓↑>, |↓↓> (nuclear spin first).
    Spin,
    /// Tensor products with motional (Fock) factors.
    Composite,
}

/// A square complex matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct ComplexOperator(DMatrix<C64>);

impl fmt::Debug for ComplexOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ComplexOperator({}x{})", self.dim(), self.dim())?;
        if self.dim() <= 8 {
            for r in 0..self.dim() {
                write!(f, "\n  ")?;
                for c in 0..self.dim() {
                    let z = self.0[(r, c)];
                    write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
                }
            }
        }
        Ok(())
    }
}

impl ComplexOperator {
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidParameter("operator dimension must be >= 1".into()));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self(m))
    }

    /// Wraps a matrix already known to be square and finite.
    pub(crate) fn from_matrix_unchecked(m: DMatrix<C64>) -> Self {
        debug_assert_eq!(m.nrows(), m.ncols());
        Self(m)
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self(DMatrix::from_fn(dim, dim, f))
    }

    /// Row-major real entries.
    pub fn from_real_rows(dim: usize, rows: &[f64]) -> Self {
        assert_eq!(rows.len(), dim * dim);
        Self::from_fn(dim, |r, c| C64::new(rows[r * dim + c], 0.0))
    }

    /// Row-major complex entries.
    pub fn from_rows(dim: usize, rows: &[C64]) -> Self {
        assert_eq!(rows.len(), dim * dim);
        Self::from_fn(dim, |r, c| rows[r * dim + c])
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        Self::from_fn(diag.len(), |r, c| if r == c { C64::new(diag[r], 0.0) } else { ZERO })
    }

    /// `|ket><bra|` for basis indices.
    pub fn outer(dim: usize, ket: usize, bra: usize) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        m[(ket, bra)] = ONE;
        Self(m)
    }

    pub fn projector(state: &StateVector) -> Self {
        let v = state.amplitudes();
        Self(v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.0[(r, c)]
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self(&self.0 * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self(self.0.map(|z| z * s))
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    /// Conjugation `u · self · u†`.
    pub fn conjugate_by(&self, u: &ComplexOperator) -> Self {
        Self(&u.0 * &self.0 * u.0.adjoint())
    }

    pub fn commutator(&self, other: &ComplexOperator) -> Self {
        Self(&self.0 * &other.0 - &other.0 * &self.0)
    }

    pub fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        &self.0 * v
    }

    /// Largest `|a_ij - conj(a_ji)|`.
    pub fn hermiticity_deviation(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0_f64;
        for r in 0..d {
            for c in r..d {
                worst = worst.max((self.0[(r, c)] - self.0[(c, r)].conj()).norm());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_deviation() <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        let d = self.dim();
        let p = self.0.adjoint() * &self.0;
        max_abs_diff(&p, &DMatrix::identity(d, d)) <= tol
    }

    /// Largest off-diagonal magnitude.
    pub fn max_off_diagonal(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0_f64;
        for r in 0..d {
            for c in 0..d {
                if r != c {
                    worst = worst.max(self.0[(r, c)].norm());
                }
            }
        }
        worst
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.dim()).map(|k| self.0[(k, k)]).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry-wise difference.
    pub fn max_abs_diff(&self, other: &ComplexOperator) -> f64 {
        max_abs_diff(&self.0, &other.0)
    }

    /// Hermitian part `(A + A†)/2`.
    pub fn hermitian_part(&self) -> Self {
        Self((&self.0 + self.0.adjoint()) * C64::new(0.5, 0.0))
    }

    /// Eigen-decomposition of a Hermitian operator: ascending eigenvalues and
    /// the matching orthonormal eigenvector columns.
    pub fn eigh(&self) -> (Vec<f64>, DMatrix<C64>) {
        eigh(&self.0)
    }

    /// Spectral norm of a Hermitian operator.
    pub fn hermitian_norm(&self) -> f64 {
        let (vals, _) = self.eigh();
        vals.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

impl Mul for &ComplexOperator {
    type Output = ComplexOperator;
    fn mul(self, rhs: &ComplexOperator) -> ComplexOperator {
        ComplexOperator(&self.0 * &rhs.0)
    }
}

impl Mul for ComplexOperator {
    type Output = ComplexOperator;
    fn mul(self, rhs: ComplexOperator) -> ComplexOperator {
        ComplexOperator(self.0 * rhs.0)
    }
}

impl Add for &ComplexOperator {
    type Output = ComplexOperator;
    fn add(self, rhs: &ComplexOperator) -> ComplexOperator {
        ComplexOperator(&self.0 + &rhs.0)
    }
}

impl Add for ComplexOperator {
    type Output = ComplexOperator;
    fn add(self, rhs: ComplexOperator) -> ComplexOperator {
        ComplexOperator(self.0 + rhs.0)
    }
}

impl Sub for &ComplexOperator {
    type Output = ComplexOperator;
    fn sub(self, rhs: &ComplexOperator) -> ComplexOperator {
        ComplexOperator(&self.0 - &rhs.0)
    }
}

fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0_f64, |m, (x, y)| m.max((x - y).norm()))
}

/// Hermitian eigen-decomposition, eigenvalues ascending.
pub(crate) fn eigh(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let d = m.nrows();
    let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = nalgebra::SymmetricEigen::new(herm);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = DMatrix::from_fn(d, d, |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

/// Builds `V · diag(f(λ)) · V†` from a Hermitian eigen-decomposition.
pub(crate) fn spectral_map(vals: &[f64], vecs: &DMatrix<C64>, f: impl Fn(f64) -> C64) -> DMatrix<C64> {
    let d = vals.len();
    let mut scaled = vecs.clone();
    for c in 0..d {
        let w = f(vals[c]);
        for r in 0..d {
            scaled[(r, c)] *= w;
        }
    }
    scaled * vecs.adjoint()
}

/// State vector normalized to unit length.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: DVector<C64>,
    basis: BasisTag,
}

impl StateVector {
    /// Accepts amplitudes whose squared norm is 1 within `STATE_TOL`.
    pub fn new(amplitudes: Vec<C64>, basis: BasisTag) -> Result<Self> {
        let v = DVector::from_vec(amplitudes);
        let n = v.norm_squared();
        if v.is_empty() || (n - 1.0).abs() > STATE_TOL {
            return Err(Error::NotNormalized { norm_sqr: n });
        }
        Ok(Self { amplitudes: v, basis })
    }

    /// Rescales arbitrary non-zero amplitudes to unit norm.
    pub fn normalized(amplitudes: Vec<C64>, basis: BasisTag) -> Result<Self> {
        let v = DVector::from_vec(amplitudes);
        let n = v.norm();
        if v.is_empty() || n == 0.0 || !n.is_finite() {
            return Err(Error::NotNormalized { norm_sqr: n * n });
        }
        Ok(Self { amplitudes: v / C64::new(n, 0.0), basis })
    }

    pub fn basis_state(dim: usize, index: usize, basis: BasisTag) -> Self {
        let mut v = DVector::zeros(dim);
        v[index] = ONE;
        Self { amplitudes: v, basis }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn basis(&self) -> BasisTag {
        self.basis
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn evolve(&self, u: &ComplexOperator) -> Result<StateVector> {
        if u.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: u.dim() });
        }
        let v = u.apply(&self.amplitudes);
        let n = v.norm();
        Ok(Self { amplitudes: v / C64::new(n, 0.0), basis: self.basis })
    }

    pub fn overlap(&self, other: &StateVector) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn kron(&self, other: &StateVector) -> StateVector {
        StateVector {
            amplitudes: self.amplitudes.kronecker(&other.amplitudes),
            basis: if self.basis == other.basis { self.basis } else { BasisTag::Composite },
        }
    }
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    op: ComplexOperator,
    basis: BasisTag,
}

impl DensityMatrix {
    pub fn new(op: ComplexOperator, basis: BasisTag) -> Result<Self> {
        let dev = op.hermiticity_deviation();
        if dev > STATE_TOL {
            return Err(Error::InvalidDensityMatrix(format!("not Hermitian (deviation {dev:e})")));
        }
        let tr = op.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr}")));
        }
        let (vals, _) = op.eigh();
        if let Some(&min) = vals.first() {
            if min < -PSD_TOL {
                return Err(Error::InvalidDensityMatrix(format!("negative eigenvalue {min:e}")));
            }
        }
        Ok(Self { op, basis })
    }

    pub fn from_pure(state: &StateVector) -> Self {
        Self { op: ComplexOperator::projector(state), basis: state.basis() }
    }

    pub fn basis_state(dim: usize, index: usize, basis: BasisTag) -> Self {
        Self { op: ComplexOperator::outer(dim, index, index), basis }
    }

    pub fn maximally_mixed(dim: usize, basis: BasisTag) -> Self {
        Self { op: ComplexOperator::identity(dim).scale_real(1.0 / dim as f64), basis }
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn basis(&self) -> BasisTag {
        self.basis
    }

    pub fn operator(&self) -> &ComplexOperator {
        &self.op
    }

    pub fn into_operator(self) -> ComplexOperator {
        self.op
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.op.get(r, c)
    }

    pub fn population(&self, k: usize) -> f64 {
        self.op.get(k, k).re
    }

    pub fn purity(&self) -> f64 {
        (&self.op * &self.op).trace().re
    }

    /// `u ρ u†`, re-validated.
    pub fn evolve(&self, u: &ComplexOperator) -> Result<DensityMatrix> {
        if u.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: u.dim() });
        }
        DensityMatrix::new(self.op.conjugate_by(u).hermitian_part(), self.basis)
    }
}

/// Kronecker product; `a` is the slow (outer) index.
pub fn kron(a: &ComplexOperator, b: &ComplexOperator) -> ComplexOperator {
    ComplexOperator(a.0.kronecker(&b.0))
}

/// `exp(-i h t)` for Hermitian `h`, computed through the eigen-decomposition.
pub fn expm_unitary(h: &ComplexOperator, t: f64) -> Result<ComplexOperator> {
    let dev = h.hermiticity_deviation();
    if dev > HERMITIAN_TOL * h.max_abs().max(1.0) {
        return Err(Error::NotHermitian { deviation: dev });
    }
    Ok(expm_hermitian_unchecked(&h.0, t))
}

pub(crate) fn expm_hermitian_unchecked(h: &DMatrix<C64>, t: f64) -> ComplexOperator {
    let (vals, vecs) = eigh(h);
    ComplexOperator(spectral_map(&vals, &vecs, |l| C64::from_polar(1.0, -l * t)))
}

/// `|Tr(u† v)|² / d²`.
pub fn gate_fidelity(u: &ComplexOperator, v: &ComplexOperator) -> Result<f64> {
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch { expected: u.dim(), found: v.dim() });
    }
    let d = u.dim() as f64;
    Ok((trace_adjoint_product(u, v).norm_sqr() / (d * d)).clamp(0.0, 1.0))
}

/// `Tr(a† b)` without forming the product.
pub fn trace_adjoint_product(a: &ComplexOperator, b: &ComplexOperator) -> C64 {
    a.0.iter().zip(b.0.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Frobenius distance `min_φ ‖a − e^{iφ} b‖_F`.
pub fn phase_aligned_distance(a: &ComplexOperator, b: &ComplexOperator) -> f64 {
    let overlap = trace_adjoint_product(b, a);
    let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { ONE };
    a.0.iter().zip(b.0.iter()).map(|(x, y)| (x - phase * y).norm_sqr()).sum::<f64>().sqrt()
}

/// Matrix square root of a positive semidefinite operator (negative
/// eigenvalues clipped to zero).
pub fn psd_sqrt(m: &ComplexOperator) -> ComplexOperator {
    let (vals, vecs) = m.eigh();
    ComplexOperator(spectral_map(&vals, &vecs, |l| C64::new(l.max(0.0).sqrt(), 0.0)))
}

/// Uhlmann fidelity `(Tr √(√ρ σ √ρ))²`.
pub fn state_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.basis() != sigma.basis() {
        return Err(Error::BasisMismatch { left: rho.basis(), right: sigma.basis() });
    }
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: sigma.dim() });
    }
    // pure states reduce to Tr(ρσ), which avoids square roots of round-off
    if rho.purity() > 1.0 - STATE_TOL || sigma.purity() > 1.0 - STATE_TOL {
        return Ok(trace_adjoint_product(rho.operator(), sigma.operator()).re.clamp(0.0, 1.0));
    }
    let s = psd_sqrt(rho.operator());
    let inner = (&(&s * sigma.operator()) * &s).hermitian_part();
    let (vals, _) = inner.eigh();
    let t: f64 = vals.iter().map(|l| if *l > 1e-14 { l.sqrt() } else { 0.0 }).sum();
    Ok((t * t).clamp(0.0, 1.0))
}

/// `Tr(χa χb)` for trace-normalized χ matrices in a common operator basis.
///
/// When either argument is the χ matrix of a unitary this is the process
/// (entanglement) fidelity.
pub fn process_fidelity(chi_a: &ChiMatrix, chi_b: &ChiMatrix) -> Result<f64> {
    if chi_a.op_basis() != chi_b.op_basis() {
        return Err(Error::InvalidParameter("χ matrices use different operator bases".into()));
    }
    let a = chi_a.normalized();
    let b = chi_b.normalized();
    Ok((&a * &b).trace().re.clamp(0.0, 1.0))
}

/// Pauli matrices σ_{0..3} = I, X, Y, Z.
pub fn pauli(k: usize) -> ComplexOperator {
    match k {
        0 => ComplexOperator::identity(2),
        1 => ComplexOperator::from_real_rows(2, &[0.0, 1.0, 1.0, 0.0]),
        2 => ComplexOperator::from_rows(2, &[ZERO, -I, I, ZERO]),
        3 => ComplexOperator::from_real_rows(2, &[1.0, 0.0, 0.0, -1.0]),
        _ => panic!("pauli index {k} out of range"),
    }
}
