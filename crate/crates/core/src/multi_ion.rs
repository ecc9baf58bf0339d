//! Two-ion entangling protocols.
//!
//! Gradient-field spin-motion coupling is simulated in spin ⊗ Fock space.
//! The coupling operator `S = Σ_n Ω^n (I^n_1z + I^n_2z)` is diagonal in the
//! spin basis, so the motion evolves independently for every eigenvalue of
//! S; each block is integrated with a fourth-order commutator-free Magnus
//! scheme. The composite sequences (ZZ from four U_zz pulses, and the
//! Mølmer–Sørensen-based XX between nuclear qubits) are exact products of
//! 16×16 matrices.
//!
//! Two-ion operators act on `ion p ⊗ ion w`, each factor in its own 4-level
//! spin or number basis.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ion::{mapping_operator, mixing_angle, qubit_spin, IonParams};
use crate::linalg::{expm_hermitian_unchecked, expm_unitary, kron, phase_aligned_distance, ComplexOperator, I, ZERO};

/// Which of the two ions an operator acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ion {
    P,
    W,
}

/// Embeds a single-ion 4×4 operator into the two-ion space.
pub fn on_ion(op: &ComplexOperator, ion: Ion) -> ComplexOperator {
    let id = ComplexOperator::identity(4);
    match ion {
        Ion::P => kron(op, &id),
        Ion::W => kron(&id, op),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NormalMode {
    /// Mode frequency (rad/s).
    pub omega: f64,
    /// Participation `b^n` of ions p and w.
    pub b: [f64; 2],
    /// Zero-point extent (m).
    pub epsilon: f64,
}

impl Default for NormalMode {
    /// Centre-of-mass mode of two ions at 1 MHz.
    fn default() -> Self {
        Self { omega: 2.0 * PI * 1e6, b: [FRAC_1_SQRT_2, FRAC_1_SQRT_2], epsilon: 1e-9 }
    }
}

impl NormalMode {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0) {
            return Err(Error::InvalidParameter("mode frequency must be > 0".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidParameter("mode extent must be > 0".into()));
        }
        let norm: f64 = self.b.iter().map(|b| b * b).sum();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("mode participations have Σb² = {norm}, expected 1")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GradientDrive {
    /// Field gradient B'z (T/m).
    pub gradient: f64,
    /// Detuning δ from the mode (rad/s).
    pub detuning: f64,
    pub phase: f64,
    /// Gate time is `2 k1 π / δ`.
    pub k1: u32,
    pub mode_index: usize,
}

impl Default for GradientDrive {
    fn default() -> Self {
        Self { gradient: 20.0, detuning: 2.0 * PI * 1e3, phase: 0.0, k1: 1, mode_index: 0 }
    }
}

/// Initial motional state of the driven mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionState {
    Fock(usize),
    Thermal { nbar: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TwoIonSystem {
    pub ions: [IonParams; 2],
    pub modes: Vec<NormalMode>,
    pub fock_cutoff: usize,
    pub drive: GradientDrive,
    pub motion: MotionState,
    /// Integration steps per period 2π/δ.
    pub steps_per_period: usize,
}

impl Default for TwoIonSystem {
    fn default() -> Self {
        Self {
            ions: [IonParams::default(); 2],
            modes: vec![NormalMode::default()],
            fock_cutoff: 16,
            drive: GradientDrive::default(),
            motion: MotionState::Fock(0),
            steps_per_period: 400,
        }
    }
}

impl TwoIonSystem {
    pub fn validate(&self) -> Result<()> {
        for ion in &self.ions {
            ion.validate()?;
        }
        if self.ions[0] != self.ions[1] {
            return Err(Error::InvalidParameter("both ions must be of the same species".into()));
        }
        for mode in &self.modes {
            mode.validate()?;
        }
        if self.drive.mode_index >= self.modes.len() {
            return Err(Error::InvalidParameter(format!("no normal mode {}", self.drive.mode_index)));
        }
        if self.fock_cutoff < 4 {
            return Err(Error::InvalidParameter("fock_cutoff must be >= 4".into()));
        }
        if self.drive.detuning == 0.0 || !self.drive.detuning.is_finite() {
            return Err(Error::InvalidParameter("drive detuning must be non-zero".into()));
        }
        if self.drive.k1 == 0 {
            return Err(Error::InvalidParameter("k1 must be >= 1".into()));
        }
        if self.steps_per_period < 200 {
            return Err(Error::InvalidParameter("steps_per_period must be >= 200".into()));
        }
        match self.motion {
            MotionState::Fock(n) if n + 4 > self.fock_cutoff => {
                Err(Error::InvalidParameter("initial Fock state too close to the cutoff".into()))
            }
            MotionState::Thermal { nbar } if !(nbar >= 0.0) => Err(Error::InvalidParameter("nbar must be >= 0".into())),
            _ => Ok(()),
        }
    }

    fn mode(&self) -> &NormalMode {
        &self.modes[self.drive.mode_index]
    }

    /// `Ω^n = b^n B'z (γ1 + γ2)/4 · ε` for ions p and w.
    pub fn coupling_strengths(&self) -> [f64; 2] {
        let mode = self.mode();
        let g = self.ions[0].gamma_nuclear + self.ions[0].gamma_electron;
        mode.b.map(|b| b * self.drive.gradient * g / 4.0 * mode.epsilon)
    }

    /// `τ = 2 k1 π / δ`.
    pub fn gate_time(&self) -> f64 {
        2.0 * PI * self.drive.k1 as f64 / self.drive.detuning.abs()
    }

    /// `2 k1 π / δ²`.
    fn phase_scale(&self) -> f64 {
        2.0 * PI * self.drive.k1 as f64 / (self.drive.detuning * self.drive.detuning)
    }
}

/// `(I1z + I2z)` eigenvalues of one ion in spin-basis order: 1, 0, 0, −1.
const TOTAL_Z: [i32; 4] = [1, 0, 0, -1];

/// Integer labels `(m_p, m_w)` of S's eigenvalue `Ω^p m_p + Ω^w m_w` for each
/// two-ion spin-basis state.
fn spin_labels() -> Vec<(i32, i32)> {
    (0..16).map(|i| (TOTAL_Z[i / 4], TOTAL_Z[i % 4])).collect()
}

/// `S = Σ_n Ω^n (I^n_1z + I^n_2z)` (16-dim, diagonal).
pub fn coupling_operator(sys: &TwoIonSystem) -> ComplexOperator {
    let [op, ow] = sys.coupling_strengths();
    let diag: Vec<f64> = spin_labels().iter().map(|&(a, b)| op * a as f64 + ow * b as f64).collect();
    ComplexOperator::from_real_diagonal(&diag)
}

fn annihilation(n: usize) -> DMatrix<C64> {
    DMatrix::from_fn(n, n, |r, c| if c == r + 1 { C64::new((c as f64).sqrt(), 0.0) } else { ZERO })
}

/// `α(t) = e^{−i(δt − φ)}`.
fn drive_phase(sys: &TwoIonSystem, t: f64) -> C64 {
    C64::from_polar(1.0, -(sys.drive.detuning * t - sys.drive.phase))
}

/// Motional Hamiltonian `−s(α a + α* a†)` of the block with S-eigenvalue `s`.
fn block_hamiltonian(s: f64, alpha: C64, a: &DMatrix<C64>) -> DMatrix<C64> {
    let drive = a * alpha;
    (&drive + drive.adjoint()) * C64::new(-s, 0.0)
}

/// `H_a(t) = −S ⊗ (α a + α* a†)` on spin ⊗ Fock with the given cutoff.
pub fn spin_motion_hamiltonian(sys: &TwoIonSystem, t: f64, cutoff: usize) -> ComplexOperator {
    let a = annihilation(cutoff);
    let alpha = drive_phase(sys, t);
    let drive = &a * alpha;
    let motion = ComplexOperator::from_fn(cutoff, |r, c| (drive[(r, c)] + drive[(c, r)].conj()) * -1.0);
    kron(&coupling_operator(sys), &motion)
}

/// Fourth-order commutator-free Magnus propagator of `h(t)` over `[0, t_end]`.
pub fn cf4_propagate(h: impl Fn(f64) -> DMatrix<C64>, dim: usize, t_end: f64, steps: usize) -> DMatrix<C64> {
    let sqrt3 = 3f64.sqrt();
    let (c1, c2) = (0.5 - sqrt3 / 6.0, 0.5 + sqrt3 / 6.0);
    let (a1, a2) = (0.25 + sqrt3 / 6.0, 0.25 - sqrt3 / 6.0);
    let dt = t_end / steps as f64;
    let mut u = DMatrix::<C64>::identity(dim, dim);
    for k in 0..steps {
        let t = k as f64 * dt;
        let (h1, h2) = (h(t + c1 * dt), h(t + c2 * dt));
        let first = expm_hermitian_unchecked(&(&h1 * C64::new(a1, 0.0) + &h2 * C64::new(a2, 0.0)), dt);
        let second = expm_hermitian_unchecked(&(&h1 * C64::new(a2, 0.0) + &h2 * C64::new(a1, 0.0)), dt);
        u = second.matrix() * first.matrix() * u;
    }
    u
}

fn integration_steps(sys: &TwoIonSystem, t: f64) -> usize {
    let period = 2.0 * PI / sys.drive.detuning.abs();
    ((t / period) * sys.steps_per_period as f64).ceil().max(1.0) as usize
}

/// Initial motion as `(weight, Fock index)` pairs.
fn motion_components(sys: &TwoIonSystem, cutoff: usize) -> Vec<(f64, usize)> {
    match sys.motion {
        MotionState::Fock(n) => vec![(1.0, n)],
        MotionState::Thermal { nbar } => {
            let q = nbar / (1.0 + nbar);
            let mut comps: Vec<(f64, usize)> = (0..cutoff.saturating_sub(4))
                .map(|n| ((1.0 - q) * q.powi(n as i32), n))
                .filter(|(p, _)| *p > 1e-14)
                .collect();
            let total: f64 = comps.iter().map(|(p, _)| p).sum();
            comps.iter_mut().for_each(|(p, _)| *p /= total);
            comps
        }
    }
}

/// Motional propagators at time `t`, one per distinct S eigenvalue.
fn block_propagators(sys: &TwoIonSystem, t: f64, cutoff: usize, steps: usize) -> BTreeMap<(i32, i32), DMatrix<C64>> {
    let [op, ow] = sys.coupling_strengths();
    let mut keys: Vec<(i32, i32)> = spin_labels();
    keys.sort();
    keys.dedup();
    let a = annihilation(cutoff);
    keys.par_iter()
        .map(|&(mp, mw)| {
            let s = op * mp as f64 + ow * mw as f64;
            let u = cf4_propagate(|time| block_hamiltonian(s, drive_phase(sys, time), &a), cutoff, t, steps);
            ((mp, mw), u)
        })
        .collect()
}

/// Schur multiplier `K` of the reduced spin map, `ρ_ij → K_ij ρ_ij`, after
/// evolving for `t` seconds.
pub fn reduced_spin_map(sys: &TwoIonSystem, t: f64, cutoff: usize) -> Result<ComplexOperator> {
    sys.validate()?;
    Ok(reduced_map_with_steps(sys, t, cutoff, integration_steps(sys, t)))
}

fn reduced_map_with_steps(sys: &TwoIonSystem, t: f64, cutoff: usize, steps: usize) -> ComplexOperator {
    let blocks = block_propagators(sys, t, cutoff, steps);
    let labels = spin_labels();
    let comps = motion_components(sys, cutoff);
    ComplexOperator::from_fn(16, |i, j| {
        let (ui, uj) = (&blocks[&labels[i]], &blocks[&labels[j]]);
        comps
            .iter()
            .map(|&(p, n)| {
                // <χ_j|χ_i> with χ = U|n>
                let overlap: C64 = ui.column(n).iter().zip(uj.column(n).iter()).map(|(x, y)| y.conj() * x).sum();
                overlap * p
            })
            .sum()
    })
}

/// `U_zz = exp[i (2k1π/δ²) S²]`.
pub fn uzz_spin_unitary(sys: &TwoIonSystem) -> ComplexOperator {
    let c = sys.phase_scale();
    let diag: Vec<C64> =
        coupling_operator(sys).diagonal().iter().map(|s| C64::from_polar(1.0, c * s.re * s.re)).collect();
    ComplexOperator::from_diagonal(&diag)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisentanglementReport {
    /// Purity of the spin state evolved from |+>^⊗4.
    pub spin_purity: f64,
    /// `max_ij |K_ij − (U_zz)_ii (U_zz)*_jj|`.
    pub residual: f64,
    /// Phase-aligned distance of the reduced spin unitary from U_zz (pure
    /// initial motion only).
    pub unitary_distance: Option<f64>,
    /// Largest change of K between cutoffs N and N+4.
    pub cutoff_change: f64,
    /// Spin-purity change between cutoffs N and N+4.
    pub purity_cutoff_change: f64,
    /// Largest change of K when the step count is doubled.
    pub step_change: f64,
    pub converged: bool,
}

/// Cutoff changes above this flag the run as unconverged.
pub const CUTOFF_TOLERANCE: f64 = 1e-6;

fn purity_from_map(k: &ComplexOperator) -> f64 {
    k.matrix().iter().map(|z| z.norm_sqr()).sum::<f64>() / 256.0
}

/// Evolves to `τ = 2k1π/δ` and compares the reduced spin dynamics with U_zz.
pub fn motion_disentanglement_check(sys: &TwoIonSystem) -> Result<DisentanglementReport> {
    disentanglement_at(sys, sys.gate_time())
}

/// As [`motion_disentanglement_check`] at an arbitrary time.
pub fn disentanglement_at(sys: &TwoIonSystem, t: f64) -> Result<DisentanglementReport> {
    sys.validate()?;
    let n = sys.fock_cutoff;
    let steps = integration_steps(sys, t);
    let k = reduced_map_with_steps(sys, t, n, steps);
    let k_big = reduced_map_with_steps(sys, t, n + 4, steps);
    let k_fine = reduced_map_with_steps(sys, t, n, 2 * steps);

    let uzz = uzz_spin_unitary(sys);
    let mut residual = 0.0_f64;
    for i in 0..16 {
        for j in 0..16 {
            let target = uzz.get(i, i) * uzz.get(j, j).conj();
            residual = residual.max((k.get(i, j) - target).norm());
        }
    }

    let unitary_distance = match sys.motion {
        MotionState::Fock(m) => {
            let blocks = block_propagators(sys, t, n, steps);
            let labels = spin_labels();
            let diag: Vec<C64> = labels.iter().map(|l| blocks[l][(m, m)]).collect();
            Some(phase_aligned_distance(&ComplexOperator::from_diagonal(&diag), &uzz))
        }
        MotionState::Thermal { .. } => None,
    };

    let spin_purity = purity_from_map(&k);
    let cutoff_change = k.max_abs_diff(&k_big);
    Ok(DisentanglementReport {
        spin_purity,
        residual,
        unitary_distance,
        cutoff_change,
        purity_cutoff_change: (spin_purity - purity_from_map(&k_big)).abs(),
        step_change: k.max_abs_diff(&k_fine),
        converged: cutoff_change <= CUTOFF_TOLERANCE,
    })
}

/// `R^n_{q,y}(θ) = exp(−iθ I^n_{q,y})` on the two-ion spin space.
pub fn qubit_rotation_y(ion: Ion, qubit: usize, theta: f64) -> ComplexOperator {
    let generator = on_ion(&qubit_spin(qubit, 1), ion);
    expm_unitary(&generator, theta).expect("spin operators are Hermitian")
}

/// The eight-factor sequence `U_zz R^p_1(π)R^w_1(π) U_zz R^w_1(−π) U_zz
/// R^p_1(π)R^w_1(π) U_zz R^w_1(−π)`, rightmost applied first.
pub fn composite_zz(sys: &TwoIonSystem) -> ComplexOperator {
    let uzz = uzz_spin_unitary(sys);
    let flip_both = &qubit_rotation_y(Ion::P, 1, PI) * &qubit_rotation_y(Ion::W, 1, PI);
    let unflip_w = qubit_rotation_y(Ion::W, 1, -PI);
    let half = &(&(&uzz * &flip_both) * &uzz) * &unflip_w;
    &half * &half
}

/// `exp[i (2k1π/δ²) 8 Ω^p Ω^w I^p_2z I^w_2z] · e^{iθ1}` with
/// `θ1 = (2k1π/δ²) Σ_n (Ω^n)²`.
pub fn composite_zz_target(sys: &TwoIonSystem) -> ComplexOperator {
    let c = sys.phase_scale();
    let [op, ow] = sys.coupling_strengths();
    let theta1 = c * (op * op + ow * ow);
    let zz = &on_ion(&qubit_spin(2, 2), Ion::P) * &on_ion(&qubit_spin(2, 2), Ion::W);
    let diag: Vec<C64> =
        zz.diagonal().iter().map(|z| C64::from_polar(1.0, c * 8.0 * op * ow * z.re + theta1)).collect();
    ComplexOperator::from_diagonal(&diag)
}

/// `R^p_2y(π/2) R^w_2y(π/2) U_{2,2,zz} R^p_2y(−π/2) R^w_2y(−π/2)`.
pub fn composite_xx(sys: &TwoIonSystem) -> ComplexOperator {
    let forward = &qubit_rotation_y(Ion::P, 2, FRAC_PI_2) * &qubit_rotation_y(Ion::W, 2, FRAC_PI_2);
    composite_zz(sys).conjugate_by(&forward)
}

/// `exp[i (2k1π/δ²) 8 Ω^p Ω^w I^p_2x I^w_2x]`.
pub fn composite_xx_target(sys: &TwoIonSystem) -> ComplexOperator {
    let c = sys.phase_scale();
    let [op, ow] = sys.coupling_strengths();
    let xx = &on_ion(&qubit_spin(2, 0), Ion::P) * &on_ion(&qubit_spin(2, 0), Ion::W);
    expm_unitary(&xx, -c * 8.0 * op * ow).expect("Hermitian")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectivityReport {
    /// `‖S_full − S_2‖ / ‖S_2‖` in operator norm.
    pub relative_error: f64,
    /// `|γ1/γ2|` for comparison.
    pub gamma_ratio: f64,
}

/// Large-field regime: compares the coupling with both spins driven
/// (`Ω̃^n_l = b^n B'z γ_l ε`) against driving qubit 2 alone. The common
/// motional factor cancels in the ratio.
pub fn large_field_selectivity(sys: &TwoIonSystem) -> Result<SelectivityReport> {
    sys.validate()?;
    let mode = sys.mode();
    let ion = &sys.ions[0];
    let strength = |gamma: f64| mode.b.map(|b| b * sys.drive.gradient * gamma * mode.epsilon);
    let (nuclear, electron) = (strength(ion.gamma_nuclear), strength(ion.gamma_electron));
    let term = |omegas: [f64; 2], qubit: usize| {
        &on_ion(&qubit_spin(qubit, 2), Ion::P).scale_real(omegas[0])
            + &on_ion(&qubit_spin(qubit, 2), Ion::W).scale_real(omegas[1])
    };
    let approx = term(electron, 2);
    let full = &approx + &term(nuclear, 1);
    let diff = &full - &approx;
    Ok(SelectivityReport {
        relative_error: diff.hermitian_norm() / approx.hermitian_norm(),
        gamma_ratio: (ion.gamma_nuclear / ion.gamma_electron).abs(),
    })
}

/// `|j><l|` on one ion (number basis, 1-based levels).
fn transition(j: usize, l: usize) -> ComplexOperator {
    ComplexOperator::outer(4, j - 1, l - 1)
}

/// `I_{j↔l,x} = (|j><l| + |l><j|)/2`.
pub fn transition_x(j: usize, l: usize) -> ComplexOperator {
    (&transition(j, l) + &transition(l, j)).scale_real(0.5)
}

/// `I_{j↔l,y} = (−i|j><l| + i|l><j|)/2`.
pub fn transition_y(j: usize, l: usize) -> ComplexOperator {
    (&transition(j, l).scale(-I) + &transition(l, j).scale(I)).scale_real(0.5)
}

/// `R^n_{j↔l,y}(θ) = exp(−iθ I^n_{j↔l,y})` on the two-ion number basis.
pub fn transition_rotation_y(ion: Ion, j: usize, l: usize, theta: f64) -> ComplexOperator {
    on_ion(&expm_unitary(&transition_y(j, l), theta).expect("Hermitian"), ion)
}

/// `θ' = 2 atan[(√2 cos(θ0/2) + √2 sin(θ0/2)) / (√2 cos(θ0/2) − √2 sin(θ0/2))]`.
pub fn theta_prime(theta0: f64) -> f64 {
    let (c, s) = ((theta0 / 2.0).cos(), (theta0 / 2.0).sin());
    let r2 = 2f64.sqrt();
    2.0 * ((r2 * c + r2 * s) / (r2 * c - r2 * s)).atan()
}

#[derive(Clone, Debug)]
pub struct MsComposite {
    /// Composite on the two-ion number basis.
    pub composite: ComplexOperator,
    /// `U_{1,1,xx}(τ)` mapped into the number basis.
    pub target: ComplexOperator,
    /// Phase-aligned Frobenius distance between the two.
    pub residual: f64,
    pub theta0: [f64; 2],
    pub theta_prime: [f64; 2],
}

/// Mølmer–Sørensen based `U_{1,1,xx}(τ)` composite:
/// `R5† R4 Ũ R4† R3 Ũ R3† R2 Ũ R2† R1 Ũ R1† R5`.
pub fn ms_composite_xx(sys: &TwoIonSystem, tau: f64) -> Result<MsComposite> {
    sys.validate()?;
    let theta0 = sys.ions.map(|p| mixing_angle(&p).1);
    let tp = theta0.map(theta_prime);
    let rot = transition_rotation_y;

    let ms_generator = &on_ion(&transition_x(2, 3), Ion::P) * &on_ion(&transition_x(2, 3), Ion::W);
    let u_ms = expm_unitary(&ms_generator, tau)?;

    let product = |ops: [ComplexOperator; 4]| {
        let [a, b, c, d] = ops;
        &(&(&a * &b) * &c) * &d
    };
    let r1 = product([
        rot(Ion::P, 1, 4, FRAC_PI_2),
        rot(Ion::P, 1, 2, PI),
        rot(Ion::W, 1, 4, FRAC_PI_2),
        rot(Ion::W, 3, 4, PI),
    ]);
    let r2 = product([
        rot(Ion::P, 1, 4, FRAC_PI_2),
        rot(Ion::P, 3, 4, PI),
        rot(Ion::W, 1, 4, FRAC_PI_2),
        rot(Ion::W, 1, 2, PI),
    ]);
    let r3 = product([
        rot(Ion::P, 1, 4, FRAC_PI_2),
        rot(Ion::P, 1, 2, PI),
        rot(Ion::W, 1, 4, FRAC_PI_2),
        rot(Ion::W, 1, 2, PI),
    ]);
    let r4 = product([
        rot(Ion::P, 1, 4, FRAC_PI_2),
        rot(Ion::P, 3, 4, PI),
        rot(Ion::W, 1, 4, FRAC_PI_2),
        rot(Ion::W, 3, 4, PI),
    ]);
    let r5 = &rot(Ion::P, 2, 3, tp[0]) * &rot(Ion::W, 2, 3, tp[1]);

    let mut composite = r5.clone();
    for r in [&r1, &r2, &r3, &r4] {
        composite = &(&(r * &u_ms) * &r.adjoint()) * &composite;
    }
    let composite = &r5.adjoint() * &composite;

    let xx = &on_ion(&qubit_spin(1, 0), Ion::P) * &on_ion(&qubit_spin(1, 0), Ion::W);
    let target_spin = expm_unitary(&xx, 4.0 * tau)?;
    let rr = kron(&mapping_operator(theta0[0]), &mapping_operator(theta0[1]));
    let target = target_spin.conjugate_by(&rr.adjoint());
    let residual = phase_aligned_distance(&composite, &target);
    Ok(MsComposite { composite, target, residual, theta0, theta_prime: tp })
}
