//! Single-ion four-level model: hyperfine coupling plus Zeeman shift, its
//! eigenstates, and the map between the number (energy) basis and the spin
//! (computational) basis.
//!
//! Spin-basis ordering is |↑↑>, |↑↓>, |↓↑>, |↓↓> with the nuclear spin
//! (qubit 1) as the first tensor factor. Number-basis index `k - 1` holds
//! level |k>.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{kron, pauli, BasisTag, ComplexOperator, DensityMatrix, StateVector, C64};

/// Physical constants of one ion. Frequencies in rad/s, fields in tesla.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IonParams {
    /// Hyperfine constant A (rad/s).
    pub hyperfine: f64,
    /// Nuclear gyromagnetic ratio γ1 (rad s⁻¹ T⁻¹).
    pub gamma_nuclear: f64,
    /// Electron gyromagnetic ratio γ2 (rad s⁻¹ T⁻¹).
    pub gamma_electron: f64,
    /// Quantization field B0 (T).
    pub b_field: f64,
}

impl Default for IonParams {
    /// ¹⁷¹Yb⁺ ground-state values at a 6 G quantization field.
    fn default() -> Self {
        Self {
            hyperfine: 2.0 * PI * 12.6e9,
            gamma_nuclear: 2.0 * PI * 7.5e6,
            gamma_electron: -2.0 * PI * 2.8e10,
            b_field: 6e-4,
        }
    }
}

impl IonParams {
    pub fn validate(&self) -> Result<()> {
        let finite =
            [self.hyperfine, self.gamma_nuclear, self.gamma_electron, self.b_field].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("ion parameters must be finite".into()));
        }
        if self.hyperfine <= 0.0 {
            return Err(Error::InvalidParameter("hyperfine constant must be > 0".into()));
        }
        if self.b_field < 0.0 {
            return Err(Error::InvalidParameter("quantization field must be >= 0".into()));
        }
        Ok(())
    }

    pub fn with_b_field(self, b_field: f64) -> Self {
        Self { b_field, ..self }
    }

    /// A copy with hyperfine constant `hyperfine` and the field rescaled so the
    /// mixing angle θ0 is unchanged.
    pub fn scaled_to_hyperfine(self, hyperfine: f64) -> Self {
        Self { hyperfine, b_field: self.b_field * hyperfine / self.hyperfine, ..self }
    }
}

/// Single spin-½ angular momentum component: 0 → x, 1 → y, 2 → z.
pub fn spin_half(axis: usize) -> ComplexOperator {
    pauli(axis + 1).scale_real(0.5)
}

/// Angular momentum of qubit `qubit` (1 = nuclear, 2 = electron) on the
/// 4-dim spin space.
pub fn qubit_spin(qubit: usize, axis: usize) -> ComplexOperator {
    match qubit {
        1 => kron(&spin_half(axis), &ComplexOperator::identity(2)),
        2 => kron(&ComplexOperator::identity(2), &spin_half(axis)),
        _ => panic!("qubit index must be 1 or 2, got {qubit}"),
    }
}

/// H0 = A I1·I2 − B0 (γ1 I1z + γ2 I2z) in the spin basis.
pub fn free_hamiltonian(p: &IonParams) -> ComplexOperator {
    let mut h = ComplexOperator::zeros(4);
    for axis in 0..3 {
        h = &h + &(&qubit_spin(1, axis) * &qubit_spin(2, axis)).scale_real(p.hyperfine);
    }
    let zeeman = &qubit_spin(1, 2).scale_real(p.gamma_nuclear) + &qubit_spin(2, 2).scale_real(p.gamma_electron);
    &h - &zeeman.scale_real(p.b_field)
}

/// Returns `(λ, θ0)` with θ0 = 2·atan(λ).
pub fn mixing_angle(p: &IonParams) -> (f64, f64) {
    let (g1, g2, b, a) = (p.gamma_nuclear, p.gamma_electron, p.b_field, p.hyperfine);
    let root = (a * a + b * b * g1 * g1 + b * b * g2 * g2 - 2.0 * b * b * g1 * g2).sqrt();
    let lambda = (-b * g1 + b * g2 - root) / a;
    (lambda, 2.0 * lambda.atan())
}

/// The real symmetric map R with R|k>_n = |k>_s.
pub fn mapping_operator(theta0: f64) -> ComplexOperator {
    let (c, s) = ((theta0 / 2.0).cos(), (theta0 / 2.0).sin());
    ComplexOperator::from_real_rows(
        4,
        &[
            1.0, 0.0, 0.0, 0.0, //
            0.0, c, -s, 0.0, //
            0.0, -s, -c, 0.0, //
            0.0, 0.0, 0.0, 1.0,
        ],
    )
}

/// Eigenstates of H0 labeled as |1>..|4>.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    /// E1..E4 in rad/s, indexed by label.
    pub energies: [f64; 4],
    /// Spin-basis eigenvectors |1>..|4>.
    pub eigenvectors: [StateVector; 4],
    pub theta0: f64,
    pub lambda: f64,
}

impl EigenSystem {
    pub fn new(p: &IonParams) -> Self {
        let (lambda, theta0) = mixing_angle(p);
        let r = mapping_operator(theta0);
        let diag = free_hamiltonian(p).conjugate_by(&r.adjoint());
        let energies = [0, 1, 2, 3].map(|k| diag.get(k, k).re);
        let eigenvectors = [0, 1, 2, 3].map(|k| {
            let col: Vec<C64> = (0..4).map(|row| r.get(row, k)).collect();
            StateVector::normalized(col, BasisTag::Spin).expect("mapping operator columns are unit vectors")
        });
        Self { energies, eigenvectors, theta0, lambda }
    }

    pub fn mapping_operator(&self) -> ComplexOperator {
        mapping_operator(self.theta0)
    }

    /// E_j − E_k.
    pub fn splitting(&self, j: usize, k: usize) -> f64 {
        self.energies[j - 1] - self.energies[k - 1]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisDirection {
    NumberToSpin,
    SpinToNumber,
}

impl BasisDirection {
    fn tags(self) -> (BasisTag, BasisTag) {
        match self {
            BasisDirection::NumberToSpin => (BasisTag::Number, BasisTag::Spin),
            BasisDirection::SpinToNumber => (BasisTag::Spin, BasisTag::Number),
        }
    }
}

/// Lifts the single-ion R to the dimension of `m` (4 → R, 16 → R⊗R).
fn lifted(r: &ComplexOperator, dim: usize) -> Result<ComplexOperator> {
    if r.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: r.dim() });
    }
    match dim {
        4 => Ok(r.clone()),
        16 => Ok(kron(r, r)),
        other => Err(Error::DimensionMismatch { expected: 4, found: other }),
    }
}

/// Number → spin applies R·M·R†; spin → number applies R†·M·R.
pub fn change_basis(m: &ComplexOperator, r: &ComplexOperator, direction: BasisDirection) -> Result<ComplexOperator> {
    let rr = lifted(r, m.dim())?;
    Ok(match direction {
        BasisDirection::NumberToSpin => m.conjugate_by(&rr),
        BasisDirection::SpinToNumber => m.conjugate_by(&rr.adjoint()),
    })
}

/// Density-matrix variant of [`change_basis`]; the basis tag must match the
/// direction's source and is updated.
pub fn change_basis_density(
    rho: &DensityMatrix,
    r: &ComplexOperator,
    direction: BasisDirection,
) -> Result<DensityMatrix> {
    let (from, to) = direction.tags();
    if rho.basis() != from {
        return Err(Error::BasisMismatch { left: rho.basis(), right: from });
    }
    let op = change_basis(rho.operator(), r, direction)?.hermitian_part();
    DensityMatrix::new(op, to)
}

/// Maps a state vector between bases.
pub fn change_basis_state(psi: &StateVector, r: &ComplexOperator, direction: BasisDirection) -> Result<StateVector> {
    let (from, to) = direction.tags();
    if psi.basis() != from {
        return Err(Error::BasisMismatch { left: psi.basis(), right: from });
    }
    let rr = lifted(r, psi.dim())?;
    let u = match direction {
        BasisDirection::NumberToSpin => rr,
        BasisDirection::SpinToNumber => rr.adjoint(),
    };
    StateVector::normalized(u.apply(psi.amplitudes()).iter().copied().collect(), to)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{ONE, ZERO};
    use proptest::prelude::*;

    fn sorted_eigenvalues(h: &ComplexOperator) -> Vec<f64> {
        h.eigh().0
    }

    #[test]
    fn zero_field_triplet_singlet() {
        let p = IonParams::default().with_b_field(0.0);
        let vals = sorted_eigenvalues(&free_hamiltonian(&p));
        let a = p.hyperfine;
        let expected = [-0.75 * a, 0.25 * a, 0.25 * a, 0.25 * a];
        for (v, e) in vals.iter().zip(expected) {
            assert!((v - e).abs() < 1e-12 * a, "{v} vs {e}");
        }
    }

    #[test]
    fn default_field_splittings() {
        let p = IonParams::default();
        let es = EigenSystem::new(&p);
        let a = p.hyperfine;
        assert!((es.splitting(2, 3) - a).abs() / a < 1e-3);
        let zeeman = p.b_field * (p.gamma_nuclear + p.gamma_electron) / 2.0;
        // |1>, |4> sit ∓B0(γ1+γ2)/2 from |2>, up to the second-order shift of |2>.
        let second_order = (p.b_field * (p.gamma_nuclear - p.gamma_electron)).powi(2) / (4.0 * a);
        assert!((es.splitting(1, 2) + zeeman).abs() < 2.0 * second_order);
        assert!((es.splitting(4, 2) - zeeman).abs() < 2.0 * second_order);

        // numerical diagonalization agrees with the labeled energies
        let mut labeled = es.energies.to_vec();
        labeled.sort_by(f64::total_cmp);
        for (v, e) in sorted_eigenvalues(&free_hamiltonian(&p)).iter().zip(labeled) {
            assert!((v - e).abs() < 1e-9 * a);
        }
    }

    #[test]
    fn free_hamiltonian_conserves_total_z() {
        let p = IonParams::default();
        let jz = &qubit_spin(1, 2) + &qubit_spin(2, 2);
        let c = free_hamiltonian(&p).commutator(&jz);
        assert!(c.max_abs() < 1e-6, "{}", c.max_abs());
        let h = free_hamiltonian(&p);
        assert!(h.is_hermitian(0.0));
        assert!(h.matrix().iter().all(|z| z.im == 0.0));
    }

    #[test]
    fn mixing_angle_zero_field() {
        let (lambda, theta0) = mixing_angle(&IonParams::default().with_b_field(0.0));
        assert_eq!(lambda, -1.0);
        assert_eq!(theta0, -PI / 2.0);
    }

    #[test]
    fn mixing_angle_default_field_near_minus_half_pi() {
        let (_, theta0) = mixing_angle(&IonParams::default());
        assert!((theta0 + PI / 2.0).abs() < 2e-3, "{theta0}");
        assert!(theta0 < -PI / 2.0);
    }

    #[test]
    fn mapping_operator_special_angles() {
        let r0 = mapping_operator(0.0);
        assert_eq!(r0, ComplexOperator::from_real_diagonal(&[1.0, 1.0, -1.0, 1.0]));

        let r = mapping_operator(-PI / 2.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let expected = ComplexOperator::from_real_rows(
            4,
            &[1.0, 0.0, 0.0, 0.0, 0.0, h, h, 0.0, 0.0, h, -h, 0.0, 0.0, 0.0, 0.0, 1.0],
        );
        assert!(r.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn change_basis_examples() {
        let r = mapping_operator(-PI / 2.0);
        for dir in [BasisDirection::NumberToSpin, BasisDirection::SpinToNumber] {
            let out = change_basis(&ComplexOperator::identity(4), &r, dir).unwrap();
            assert!(out.max_abs_diff(&ComplexOperator::identity(4)) < 1e-15);
        }

        let level3 = DensityMatrix::basis_state(4, 2, BasisTag::Number);
        let spin = change_basis_density(&level3, &r, BasisDirection::NumberToSpin).unwrap();
        assert_eq!(spin.basis(), BasisTag::Spin);
        let expected = ComplexOperator::from_real_rows(
            4,
            &[0.0, 0.0, 0.0, 0.0, 0.0, 0.5, -0.5, 0.0, 0.0, -0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0],
        );
        assert!(spin.operator().max_abs_diff(&expected) < 1e-15);

        let back = change_basis_density(&spin, &r, BasisDirection::SpinToNumber).unwrap();
        assert!(back.operator().max_abs_diff(level3.operator()) < 1e-12);

        assert!(change_basis_density(&level3, &r, BasisDirection::SpinToNumber).is_err());
        assert!(change_basis(&ComplexOperator::identity(8), &r, BasisDirection::NumberToSpin).is_err());
    }

    #[test]
    fn two_ion_change_basis_uses_tensor_square() {
        let r = mapping_operator(-1.2);
        let rr = kron(&r, &r);
        let m = ComplexOperator::outer(16, 6, 9);
        let out = change_basis(&m, &r, BasisDirection::NumberToSpin).unwrap();
        assert!(out.max_abs_diff(&m.conjugate_by(&rr)) < 1e-15);
    }

    #[test]
    fn lambda_monotone_in_field() {
        let p = IonParams::default();
        let mut prev = mixing_angle(&p.with_b_field(0.0)).0;
        for k in 1..=200 {
            let b = k as f64 / 200.0;
            let next = mixing_angle(&p.with_b_field(b)).0;
            assert!(next < prev, "λ not decreasing at B0 = {b}");
            // continuity: no jump larger than the local slope bound
            assert!(
                (next - prev).abs() < 2.0 * (p.gamma_nuclear - p.gamma_electron) * 0.005 / p.hyperfine * 1.01 + 1e-12
            );
            prev = next;
        }
    }

    #[test]
    fn eigenvector_structure() {
        let es = EigenSystem::new(&IonParams::default());
        let up_up = StateVector::basis_state(4, 0, BasisTag::Spin);
        let down_down = StateVector::basis_state(4, 3, BasisTag::Spin);
        assert_eq!(es.eigenvectors[0], up_up);
        assert_eq!(es.eigenvectors[3], down_down);
        for k in [1, 2] {
            let v = es.eigenvectors[k].amplitudes();
            assert_eq!(v[0], ZERO);
            assert_eq!(v[3], ZERO);
        }
        for j in 0..4 {
            for k in 0..4 {
                let o = es.eigenvectors[j].overlap(&es.eigenvectors[k]);
                let expected = if j == k { ONE } else { ZERO };
                assert!((o - expected).norm() < 1e-10);
            }
        }
    }

    proptest! {
        #[test]
        fn mapping_operator_is_real_orthogonal_involution(theta in -2.0 * PI..2.0 * PI) {
            let r = mapping_operator(theta);
            prop_assert!(r.matrix().iter().all(|z| z.im == 0.0));
            prop_assert!(r.max_abs_diff(&r.adjoint()) < 1e-15);
            prop_assert!(r.is_unitary(1e-12));
            prop_assert!((&r * &r).max_abs_diff(&ComplexOperator::identity(4)) < 1e-12);
        }

        #[test]
        fn mapping_diagonalizes_free_hamiltonian(
            b in 0.0f64..2.0,
            a_ghz in 0.01f64..20.0,
            g1 in -1e8f64..1e8,
            g2 in -3e11f64..3e11,
        ) {
            let p = IonParams {
                hyperfine: 2.0 * PI * a_ghz * 1e9,
                gamma_nuclear: g1,
                gamma_electron: g2,
                b_field: b,
            };
            let es = EigenSystem::new(&p);
            let h = free_hamiltonian(&p);
            let d = h.conjugate_by(&es.mapping_operator().adjoint());
            prop_assert!(d.max_off_diagonal() < 1e-9 * p.hyperfine);

            // labeled energies are the Rayleigh quotients of the analytic vectors
            for k in 0..4 {
                let v = es.eigenvectors[k].amplitudes();
                let e = v.dotc(&h.apply(v)).re;
                prop_assert!((e - es.energies[k]).abs() < 1e-9 * p.hyperfine);
            }

            // numerical eigenvectors match the analytic ones up to phase
            let (vals, vecs) = h.eigh();
            for (idx, val) in vals.iter().enumerate() {
                let col: Vec<C64> = (0..4).map(|r| vecs[(r, idx)]).collect();
                let num = StateVector::normalized(col, BasisTag::Spin).unwrap();
                let label = (0..4)
                    .min_by(|&x, &y| (es.energies[x] - val).abs().total_cmp(&(es.energies[y] - val).abs()))
                    .unwrap();
                // degenerate levels (B0 = 0) can mix; only check isolated ones
                let isolated = (0..4).filter(|&o| o != label).all(|o| (es.energies[o] - val).abs() > 1e-6 * p.hyperfine);
                if isolated {
                    let ov = num.overlap(&es.eigenvectors[label]).norm();
                    prop_assert!((ov - 1.0).abs() < 1e-9, "overlap {}", ov);
                }
            }
        }
    }
}
