//! Simulated readout, state and process tomography, and quasi-static
//! magnetic noise.
//!
//! Only the population of |3> is observable. Every other population and
//! coherence is read by first routing it into the |3>↔|k> subspaces with π and
//! π/2 transfer pulses, then measuring P3. The density matrix follows from a
//! least-squares inversion over all settings, projected back onto the set of
//! physical states.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{level, propagate, PulseSegment, PulseSequence};
use crate::error::{Error, Result};
use crate::ion::mapping_operator;
use crate::linalg::{eigh, kron, pauli, BasisTag, ComplexOperator, DensityMatrix, StateVector, I, ONE, ZERO};

/// Largest accepted condition number of the tomography inversion.
pub const MAX_CONDITION: f64 = 1e6;

/// `σ = √2 / T2*`: the Gaussian envelope `exp(−σ²t²/2)` falls to 1/e at `T2*`.
pub fn calibrate_sigma(t2star: f64) -> Result<f64> {
    if !(t2star > 0.0) {
        return Err(Error::InvalidParameter("T2* must be > 0".into()));
    }
    Ok(SQRT_2 / t2star)
}

/// Quasi-static Gaussian shifts of E1, E2, E4 (rad/s), fixed within a shot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    pub sigma1: f64,
    pub sigma2: f64,
    pub sigma4: f64,
    pub n_samples: usize,
    pub rng_seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::line_triggered()
    }
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self { sigma1: 0.0, sigma2: 0.0, sigma4: 0.0, n_samples: 1, rng_seed: 0 }
    }

    /// Measured coherence times of |1,2,4>↔|3> in seconds.
    pub fn from_coherence_times(t1: f64, t2: f64, t4: f64) -> Result<Self> {
        Ok(Self {
            sigma1: calibrate_sigma(t1)?,
            sigma2: calibrate_sigma(t2)?,
            sigma4: calibrate_sigma(t4)?,
            n_samples: 400,
            rng_seed: 0,
        })
    }

    /// T2* = 500 μs on the Zeeman transitions, 20 ms on the clock transition.
    pub fn free_running() -> Self {
        Self::from_coherence_times(500e-6, 20e-3, 500e-6).expect("positive coherence times")
    }

    /// T2* = 7 ms on the Zeeman transitions, 20 ms on the clock transition.
    pub fn line_triggered() -> Self {
        Self::from_coherence_times(7e-3, 20e-3, 7e-3).expect("positive coherence times")
    }

    pub fn with_samples(self, n_samples: usize, rng_seed: u64) -> Self {
        Self { n_samples, rng_seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let sigmas = [self.sigma1, self.sigma2, self.sigma4];
        if sigmas.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::InvalidParameter("noise σ must be finite and >= 0".into()));
        }
        if self.n_samples == 0 {
            return Err(Error::InvalidParameter("n_samples must be >= 1".into()));
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.sigma1 == 0.0 && self.sigma2 == 0.0 && self.sigma4 == 0.0
    }

    /// Shifts `[Δ1, Δ2, Δ4]` of sample `index`, drawn from its own stream.
    pub fn sample(&self, index: usize) -> [f64; 3] {
        let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
        rng.set_stream(index as u64);
        let mut draw = |s: f64| s * rng.sample::<f64, _>(StandardNormal);
        [draw(self.sigma1), draw(self.sigma2), draw(self.sigma4)]
    }
}

/// Equal-weight mixture of unitaries acting by conjugation (number basis).
#[derive(Clone, Debug)]
pub struct NoisyChannel {
    unitaries: Vec<ComplexOperator>,
}

impl NoisyChannel {
    pub fn unitary(u: ComplexOperator) -> Self {
        Self { unitaries: vec![u] }
    }

    pub fn unitaries(&self) -> &[ComplexOperator] {
        &self.unitaries
    }

    /// `Σ_k U_k ρ U_k† / n`.
    pub fn apply_operator(&self, rho: &ComplexOperator) -> ComplexOperator {
        let n = self.unitaries.len() as f64;
        let mut acc = ComplexOperator::zeros(rho.dim());
        for u in &self.unitaries {
            acc = &acc + &rho.conjugate_by(u);
        }
        acc.scale_real(1.0 / n).hermitian_part()
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let out = self.apply_operator(rho.operator());
        let tr = out.trace().re;
        DensityMatrix::new(out.scale_real(1.0 / tr), rho.basis())
    }

    /// Sample-averaged population of |3> after the channel.
    pub fn p3_after(&self, rho: &ComplexOperator) -> f64 {
        let three = level(3);
        let mut acc = 0.0;
        for u in &self.unitaries {
            // <3|U ρ U†|3> from row 3 of U
            let row: Vec<C64> = (0..4).map(|j| u.get(three, j)).collect();
            let mut s = ZERO;
            for a in 0..4 {
                for b in 0..4 {
                    s += row[a] * rho.get(a, b) * row[b].conj();
                }
            }
            acc += s.re;
        }
        acc / self.unitaries.len() as f64
    }
}

/// Adds one quasi-static shift sample to every segment of the sequence.
fn shifted(seq: &PulseSequence, shift: [f64; 3]) -> PulseSequence {
    seq.segments()
        .iter()
        .map(|s| PulseSegment { d1: s.d1 + shift[0], d2: s.d2 + shift[1], d4: s.d4 + shift[2], ..*s })
        .collect()
}

/// The Monte-Carlo averaged channel of `seq` under quasi-static noise.
/// Samples are evaluated in parallel and kept in index order.
pub fn apply_noise(seq: &PulseSequence, noise: &NoiseModel) -> Result<NoisyChannel> {
    noise.validate()?;
    if noise.is_noiseless() {
        return Ok(NoisyChannel::unitary(propagate(seq)));
    }
    let unitaries = (0..noise.n_samples).into_par_iter().map(|k| propagate(&shifted(seq, noise.sample(k)))).collect();
    Ok(NoisyChannel { unitaries })
}

/// Population of |3>, exact for `shots = 0`, otherwise a binomial estimate
/// read through the complement (bright counts on |1,2,4>).
pub fn measure_p3(rho: &DensityMatrix, shots: u64, rng: &mut impl Rng) -> Result<f64> {
    if rho.basis() != BasisTag::Number {
        return Err(Error::BasisMismatch { left: rho.basis(), right: BasisTag::Number });
    }
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: rho.dim() });
    }
    Ok(sample_p3(rho.population(level(3)), shots, rng))
}

fn sample_p3(p3: f64, shots: u64, rng: &mut impl Rng) -> f64 {
    let p3 = p3.clamp(0.0, 1.0);
    if shots == 0 {
        return p3;
    }
    let bright = Binomial::new(shots, 1.0 - p3).expect("probability in [0, 1]").sample(rng);
    1.0 - bright as f64 / shots as f64
}

/// Euclidean projection of `v` onto the probability simplex.
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut tau = 0.0;
    for (j, x) in u.iter().enumerate() {
        cumulative += x;
        let t = (cumulative - 1.0) / (j + 1) as f64;
        if x - t > 0.0 {
            tau = t;
        }
    }
    v.iter().map(|x| (x - tau).max(0.0)).collect()
}

/// Frobenius-nearest positive semidefinite, unit-trace matrix to the
/// Hermitian part of `m`.
pub fn project_to_density(m: &ComplexOperator) -> ComplexOperator {
    let (vals, vecs) = eigh(m.hermitian_part().matrix());
    let projected = project_simplex(&vals);
    let mut scaled = vecs.clone();
    for (c, w) in projected.iter().enumerate() {
        scaled.column_mut(c).scale_mut(*w);
    }
    let out = scaled * vecs.adjoint();
    ComplexOperator::from_matrix_unchecked(out).hermitian_part()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TomographyConfig {
    /// Shots per setting; 0 means exact expectations.
    pub shots: u64,
    /// |c| of the transfer pulses (rad/s).
    pub transfer_amplitude: f64,
    /// When set, the transfer pulses see the same quasi-static noise.
    pub noisy_transfer_pulses: Option<NoiseModel>,
}

impl Default for TomographyConfig {
    fn default() -> Self {
        Self { shots: 0, transfer_amplitude: 2.0 * PI * 20e3, noisy_transfer_pulses: None }
    }
}

/// Transfer-pulse settings preceding each P3 readout: populations, then each
/// coherence read at four phases (28 settings, over-complete for 16 unknowns).
const PHASES: [f64; 4] = [0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2];

pub fn tomography_settings(amplitude: f64) -> Result<Vec<PulseSequence>> {
    let pulse = |k: usize, angle: f64, phase: f64| PulseSegment::transition_pulse(k, angle, phase, amplitude);
    let mut settings = vec![PulseSequence::empty()];
    for k in [1, 2, 4] {
        settings.push(PulseSequence::new(vec![pulse(k, PI, 0.0)?]));
    }
    for k in [1, 2, 4] {
        for phase in PHASES {
            settings.push(PulseSequence::new(vec![pulse(k, FRAC_PI_2, phase)?]));
        }
    }
    // |j>↔|l>: park |l> on |3> first, then interfere it with |j>
    for (j, l) in [(1, 2), (1, 4), (2, 4)] {
        for phase in PHASES {
            settings.push(PulseSequence::new(vec![pulse(l, PI, 0.0)?, pulse(j, FRAC_PI_2, phase)?]));
        }
    }
    Ok(settings)
}

/// Real Hermitian basis `G_j` with `ρ = Σ x_j G_j`: diagonal units, then
/// `|k><l| + |l><k|` and `−i|k><l| + i|l><k|` for `k < l`.
fn hermitian_basis() -> Vec<ComplexOperator> {
    let mut basis: Vec<ComplexOperator> = (0..4).map(|k| ComplexOperator::outer(4, k, k)).collect();
    for k in 0..4 {
        for l in k + 1..4 {
            let kl = ComplexOperator::outer(4, k, l);
            let lk = ComplexOperator::outer(4, l, k);
            basis.push(&kl + &lk);
            basis.push(&kl.scale(-I) + &lk.scale(I));
        }
    }
    basis
}

/// Pauli operator `σ_a ⊗ σ_b` with `m = 4a + b`.
pub fn two_qubit_pauli(m: usize) -> ComplexOperator {
    kron(&pauli(m / 4), &pauli(m % 4))
}

pub fn pauli_label(m: usize) -> String {
    const NAMES: [char; 4] = ['I', 'X', 'Y', 'Z'];
    format!("{}{}", NAMES[m / 4], NAMES[m % 4])
}

/// Operator basis of a χ matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorBasis {
    /// `{I,X,Y,Z}⊗{I,X,Y,Z}` (unnormalized) in the spin basis.
    PauliSpin,
}

/// Process matrix with `ε(ρ) = Σ_mn χ_mn P_m ρ P_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChiMatrix {
    entries: ComplexOperator,
    op_basis: OperatorBasis,
    trace_normalized: bool,
}

impl ChiMatrix {
    pub fn new(entries: ComplexOperator, op_basis: OperatorBasis) -> Result<Self> {
        if entries.dim() != 16 {
            return Err(Error::DimensionMismatch { expected: 16, found: entries.dim() });
        }
        let trace_normalized = (entries.trace() - ONE).norm() < 1e-9;
        Ok(Self { entries, op_basis, trace_normalized })
    }

    /// `χ_mn = u_m u_n*` with `u_m = Tr(P_m U) / 4` for a spin-basis unitary.
    pub fn from_unitary(u: &ComplexOperator) -> Result<Self> {
        if u.dim() != 4 {
            return Err(Error::DimensionMismatch { expected: 4, found: u.dim() });
        }
        let coeffs: Vec<C64> = (0..16).map(|m| (&two_qubit_pauli(m) * u).trace() / 4.0).collect();
        Self::new(ComplexOperator::from_fn(16, |m, n| coeffs[m] * coeffs[n].conj()), OperatorBasis::PauliSpin)
    }

    /// χ from the column-stacking superoperator `vec ε(ρ) = S vec ρ`:
    /// `S = Σ χ_mn (P_n* ⊗ P_m)`, and those 256 operators are orthogonal
    /// with norm² 16.
    pub fn from_superoperator(s: &ComplexOperator) -> Result<Self> {
        if s.dim() != 16 {
            return Err(Error::DimensionMismatch { expected: 16, found: s.dim() });
        }
        let paulis: Vec<ComplexOperator> = (0..16).map(two_qubit_pauli).collect();
        let conj: Vec<ComplexOperator> = paulis.iter().map(|p| p.adjoint().transpose()).collect();
        let entries = ComplexOperator::from_fn(16, |m, n| {
            let b = kron(&conj[n], &paulis[m]);
            crate::linalg::trace_adjoint_product(&b, s) / 16.0
        });
        Self::new(entries, OperatorBasis::PauliSpin)
    }

    pub fn entries(&self) -> &ComplexOperator {
        &self.entries
    }

    pub fn op_basis(&self) -> OperatorBasis {
        self.op_basis
    }

    pub fn is_trace_normalized(&self) -> bool {
        self.trace_normalized
    }

    /// Entries divided by their trace.
    pub fn normalized(&self) -> ComplexOperator {
        let tr = self.entries.trace();
        self.entries.scale(ONE / tr)
    }

    /// Nearest PSD unit-trace χ.
    pub fn projected(&self) -> Self {
        Self { entries: project_to_density(&self.entries), op_basis: self.op_basis, trace_normalized: true }
    }

    /// Applies the process to a spin-basis operator.
    pub fn apply(&self, rho: &ComplexOperator) -> ComplexOperator {
        let paulis: Vec<ComplexOperator> = (0..16).map(two_qubit_pauli).collect();
        let mut out = ComplexOperator::zeros(4);
        for (m, pm) in paulis.iter().enumerate() {
            let left = pm * rho;
            for (n, pn) in paulis.iter().enumerate() {
                let c = self.entries.get(m, n);
                if c.norm() > 0.0 {
                    out = &out + &(&left * pn).scale(c);
                }
            }
        }
        out
    }
}

/// Precomputed tomography schedule and its inversion.
#[derive(Clone, Debug)]
pub struct Tomographer {
    config: TomographyConfig,
    settings: Vec<PulseSequence>,
    channels: Vec<NoisyChannel>,
    inverse: DMatrix<f64>,
    condition: f64,
    r: ComplexOperator,
}

impl Tomographer {
    /// Builds the schedule for an ion with mixing angle `theta0`.
    pub fn new(config: TomographyConfig, theta0: f64) -> Result<Self> {
        if !(config.transfer_amplitude > 0.0) {
            return Err(Error::InvalidParameter("transfer_amplitude must be > 0".into()));
        }
        let settings = tomography_settings(config.transfer_amplitude)?;
        let ideal: Vec<NoisyChannel> = settings.iter().map(|s| NoisyChannel::unitary(propagate(s))).collect();
        let channels = match &config.noisy_transfer_pulses {
            Some(noise) => settings.iter().map(|s| apply_noise(s, noise)).collect::<Result<_>>()?,
            None => ideal.clone(),
        };

        // design matrix from the ideal schedule: y_s = Σ_j Tr(M_s G_j) x_j
        let basis = hermitian_basis();
        let design = DMatrix::from_fn(settings.len(), 16, |s, j| ideal[s].p3_after(&basis[j]));
        let svd = design.svd(true, true);
        let (smax, smin) = svd.singular_values.iter().fold((0.0_f64, f64::INFINITY), |(a, b), &x| (a.max(x), b.min(x)));
        let condition = smax / smin;
        if !condition.is_finite() || condition > MAX_CONDITION {
            return Err(Error::IllConditioned { condition });
        }
        let inverse = svd.pseudo_inverse(0.0).map_err(|_| Error::IllConditioned { condition: f64::INFINITY })?;
        Ok(Self { config, settings, channels, inverse, condition, r: mapping_operator(theta0) })
    }

    pub fn config(&self) -> &TomographyConfig {
        &self.config
    }

    pub fn settings(&self) -> &[PulseSequence] {
        &self.settings
    }

    pub fn condition_number(&self) -> f64 {
        self.condition
    }

    /// P3 after every setting.
    pub fn measure(&self, rho: &DensityMatrix, rng: &mut impl Rng) -> Result<Vec<f64>> {
        if rho.basis() != BasisTag::Number || rho.dim() != 4 {
            return Err(Error::BasisMismatch { left: rho.basis(), right: BasisTag::Number });
        }
        Ok(self.channels.iter().map(|c| sample_p3(c.p3_after(rho.operator()), self.config.shots, rng)).collect())
    }

    /// Least-squares linear inversion without any positivity constraint.
    pub fn invert(&self, data: &[f64]) -> Result<ComplexOperator> {
        if data.len() != self.settings.len() {
            return Err(Error::DimensionMismatch { expected: self.settings.len(), found: data.len() });
        }
        let x = &self.inverse * DVector::from_column_slice(data);
        let basis = hermitian_basis();
        let mut rho = ComplexOperator::zeros(4);
        for (g, xj) in basis.iter().zip(x.iter()) {
            rho = &rho + &g.scale_real(*xj);
        }
        Ok(rho)
    }

    /// Linear inversion followed by projection onto physical states.
    pub fn reconstruct(&self, data: &[f64]) -> Result<DensityMatrix> {
        DensityMatrix::new(project_to_density(&self.invert(data)?), BasisTag::Number)
    }

    /// Full state tomography of a number-basis state.
    pub fn qst(&self, rho: &DensityMatrix, rng: &mut impl Rng) -> Result<DensityMatrix> {
        let data = self.measure(rho, rng)?;
        self.reconstruct(&data)
    }

    /// The sixteen spin-basis QPT inputs, `{↑, ↓, +, +i}` on each qubit.
    pub fn qpt_inputs() -> Vec<DensityMatrix> {
        let h = 1.0 / SQRT_2;
        let singles = [
            vec![ONE, ZERO],
            vec![ZERO, ONE],
            vec![C64::new(h, 0.0), C64::new(h, 0.0)],
            vec![C64::new(h, 0.0), C64::new(0.0, h)],
        ];
        let mut out = Vec::with_capacity(16);
        for a in &singles {
            for b in &singles {
                let psi = StateVector::new(a.clone(), BasisTag::Spin)
                    .and_then(|x| Ok(x.kron(&StateVector::new(b.clone(), BasisTag::Spin)?)))
                    .expect("normalized product state");
                out.push(DensityMatrix::from_pure(&psi));
            }
        }
        out
    }

    /// Process tomography of a number-basis map; χ is returned in the spin
    /// Pauli basis, PSD-projected.
    pub fn qpt<F>(&self, process: F, rng: &mut impl Rng) -> Result<ChiMatrix>
    where
        F: Fn(&DensityMatrix) -> Result<ComplexOperator>,
    {
        let inputs = Self::qpt_inputs();
        let mut inputs_vec = DMatrix::<C64>::zeros(16, 16);
        let mut outputs_vec = DMatrix::<C64>::zeros(16, 16);
        for (j, rho_spin) in inputs.iter().enumerate() {
            let rho_number = DensityMatrix::new(
                rho_spin.operator().conjugate_by(&self.r.adjoint()).hermitian_part(),
                BasisTag::Number,
            )?;
            let out = process(&rho_number)?;
            if out.dim() != 4 {
                return Err(Error::DimensionMismatch { expected: 4, found: out.dim() });
            }
            let deviation = (out.trace() - ONE).norm();
            if deviation > 1e-9 {
                return Err(Error::NotTracePreserving { deviation });
            }
            let out = DensityMatrix::new(out.hermitian_part(), BasisTag::Number)?;
            let estimate = self.qst(&out, rng)?;
            let estimate_spin = estimate.operator().conjugate_by(&self.r);
            inputs_vec.set_column(j, &DVector::from_column_slice(rho_spin.operator().matrix().as_slice()));
            outputs_vec.set_column(j, &DVector::from_column_slice(estimate_spin.matrix().as_slice()));
        }
        let inv = inputs_vec.try_inverse().ok_or(Error::IllConditioned { condition: f64::INFINITY })?;
        let superop = ComplexOperator::from_matrix_unchecked(outputs_vec * inv);
        Ok(ChiMatrix::from_superoperator(&superop)?.projected())
    }
}
