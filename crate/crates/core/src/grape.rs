//! Gradient-ascent pulse engineering for the two-qubit gate set.
//!
//! Controls are the complex couplings `c31, c32, c34` (and optionally the
//! detunings) of each piecewise-constant segment. The figure of merit is the
//! phase-insensitive gate fidelity `|Tr(V† U)|² / 16`, averaged over an
//! ensemble of amplitude scalings for robustness. Targets are given in the
//! spin basis and mapped to the number basis with R, where propagation lives.
//!
//! The gradient is exact for piecewise-constant controls: each segment
//! propagator is differentiated in its own eigenbasis,
//!
//! ```text
//! ∂U/∂θ = W [ (W† ∂H W)_kl · (e^{-iλ_k τ} − e^{-iλ_l τ}) / (λ_k − λ_l) ] W†
//! ```
//!
//! and contracted with forward/backward propagator products.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix4, SymmetricEigen, Vector4};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{PulseSegment, PulseSequence};
use crate::error::{Error, Result};
use crate::ion::{mapping_operator, IonParams};
use crate::linalg::{kron, ComplexOperator, I, ONE, ZERO};

/// Gates the optimizer knows how to target.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateName {
    Identity,
    Hadamard1,
    Hadamard2,
    Phase1,
    Phase2,
    T1,
    T2,
    #[serde(rename = "CNOT12")]
    Cnot12,
    #[serde(rename = "CNOT21")]
    Cnot21,
    #[serde(rename = "SWAP")]
    Swap,
    CPhase,
    C00,
    /// Phase flip of one spin-basis state (index 0..=3).
    Oracle(u8),
}

impl GateName {
    /// The nine gates characterized by state tomography.
    pub const TOMOGRAPHY_SET: [GateName; 9] = [
        GateName::Cnot12,
        GateName::Cnot21,
        GateName::Phase1,
        GateName::Phase2,
        GateName::T1,
        GateName::T2,
        GateName::Hadamard1,
        GateName::Hadamard2,
        GateName::Swap,
    ];

    pub const ALL: [GateName; 12] = [
        GateName::Identity,
        GateName::Hadamard1,
        GateName::Hadamard2,
        GateName::Phase1,
        GateName::Phase2,
        GateName::T1,
        GateName::T2,
        GateName::Cnot12,
        GateName::Cnot21,
        GateName::Swap,
        GateName::CPhase,
        GateName::C00,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GateName::Identity => "I",
            GateName::Hadamard1 => "Hadamard1",
            GateName::Hadamard2 => "Hadamard2",
            GateName::Phase1 => "Phase1",
            GateName::Phase2 => "Phase2",
            GateName::T1 => "T1",
            GateName::T2 => "T2",
            GateName::Cnot12 => "CNOT12",
            GateName::Cnot21 => "CNOT21",
            GateName::Swap => "SWAP",
            GateName::CPhase => "CPhase",
            GateName::C00 => "C00",
            GateName::Oracle(k) => ["Oracle0", "Oracle1", "Oracle2", "Oracle3"][k as usize],
        }
    }
}

impl fmt::Display for GateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GateName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| !matches!(c, '-' | '_' | ' ')).collect::<String>().to_ascii_lowercase();
        Ok(match key.as_str() {
            "i" | "id" | "identity" => GateName::Identity,
            "h1" | "hadamard1" => GateName::Hadamard1,
            "h2" | "hadamard2" => GateName::Hadamard2,
            "s1" | "phase1" => GateName::Phase1,
            "s2" | "phase2" => GateName::Phase2,
            "t1" | "pi/81" | "π/81" => GateName::T1,
            "t2" | "pi/82" | "π/82" => GateName::T2,
            "cnot12" | "c1not2" => GateName::Cnot12,
            "cnot21" | "c2not1" => GateName::Cnot21,
            "swap" => GateName::Swap,
            "cphase" | "cz" => GateName::CPhase,
            "c00" => GateName::C00,
            "oracle0" => GateName::Oracle(0),
            "oracle1" => GateName::Oracle(1),
            "oracle2" => GateName::Oracle(2),
            "oracle3" => GateName::Oracle(3),
            _ => return Err(Error::UnknownGate(s.to_string())),
        })
    }
}

/// A named 4×4 unitary in the spin basis.
#[derive(Clone, Debug, PartialEq)]
pub struct GateTarget {
    pub name: GateName,
    pub matrix: ComplexOperator,
}

impl GateTarget {
    /// `R† V R`, the target as seen by number-basis propagation.
    pub fn in_number_basis(&self, theta0: f64) -> ComplexOperator {
        let r = mapping_operator(theta0);
        self.matrix.conjugate_by(&r.adjoint())
    }
}

fn single_qubit(name: GateName) -> ComplexOperator {
    let h = FRAC_1_SQRT_2;
    match name {
        GateName::Hadamard1 | GateName::Hadamard2 => ComplexOperator::from_real_rows(2, &[h, h, h, -h]),
        GateName::Phase1 | GateName::Phase2 => ComplexOperator::from_diagonal(&[ONE, I]),
        GateName::T1 | GateName::T2 => ComplexOperator::from_diagonal(&[ONE, C64::from_polar(1.0, PI / 4.0)]),
        _ => unreachable!(),
    }
}

/// The spin-basis matrix of a named gate. Qubit 1 (nuclear) is the first
/// tensor factor; |↑> is the computational |0>.
pub fn standard_gate(name: GateName) -> GateTarget {
    let id2 = ComplexOperator::identity(2);
    let matrix = match name {
        GateName::Identity => ComplexOperator::identity(4),
        GateName::Hadamard1 | GateName::Phase1 | GateName::T1 => kron(&single_qubit(name), &id2),
        GateName::Hadamard2 | GateName::Phase2 | GateName::T2 => kron(&id2, &single_qubit(name)),
        GateName::Cnot12 => permutation(&[0, 1, 3, 2]),
        GateName::Cnot21 => permutation(&[0, 3, 2, 1]),
        GateName::Swap => permutation(&[0, 2, 1, 3]),
        GateName::CPhase => ComplexOperator::from_real_diagonal(&[1.0, -1.0, 1.0, 1.0]),
        GateName::C00 => ComplexOperator::from_real_diagonal(&[1.0, -1.0, -1.0, -1.0]),
        GateName::Oracle(k) => {
            let mut diag = [1.0; 4];
            diag[k as usize] = -1.0;
            ComplexOperator::from_real_diagonal(&diag)
        }
    };
    GateTarget { name, matrix }
}

/// Looks up a gate by any of its accepted spellings.
pub fn standard_gate_by_name(name: &str) -> Result<GateTarget> {
    Ok(standard_gate(name.parse()?))
}

/// Permutation matrix sending basis state `j` to `image[j]`.
fn permutation(image: &[usize; 4]) -> ComplexOperator {
    let mut m = ComplexOperator::zeros(4).into_matrix();
    for (j, &k) in image.iter().enumerate() {
        m[(k, j)] = ONE;
    }
    ComplexOperator::from_matrix_unchecked(m)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GrapeConfig {
    pub n_segments: usize,
    /// Total pulse length (s).
    pub total_time: f64,
    /// Bound on every |c| (rad/s).
    pub omega_max: f64,
    /// Initial ascent step in units of `omega_max`.
    pub step_size: f64,
    pub max_iters: usize,
    pub target_fidelity: f64,
    pub robustness_scalings: Vec<f64>,
    pub rng_seed: u64,
    pub optimize_detunings: bool,
}

impl Default for GrapeConfig {
    fn default() -> Self {
        let omega_max = 2.0 * PI * 20e3;
        Self {
            n_segments: 20,
            total_time: 40.0 * 2.0 * PI / omega_max,
            omega_max,
            step_size: 0.05,
            max_iters: 20_000,
            target_fidelity: 0.999,
            robustness_scalings: vec![1.0],
            rng_seed: 0,
            optimize_detunings: false,
        }
    }
}

impl GrapeConfig {
    /// Default settings trained over amplitude scalings {0.95, 1.0, 1.05}.
    pub fn robust() -> Self {
        Self { robustness_scalings: vec![0.95, 1.0, 1.05], ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.to_string()));
        if self.n_segments < 2 {
            return bad("n_segments must be >= 2");
        }
        if !(self.total_time > 0.0) || !self.total_time.is_finite() {
            return bad("total_time must be > 0");
        }
        if !(self.omega_max > 0.0) || !self.omega_max.is_finite() {
            return bad("omega_max must be > 0");
        }
        if !(self.step_size > 0.0) {
            return bad("step_size must be > 0");
        }
        if !(self.target_fidelity > 0.0 && self.target_fidelity <= 1.0) {
            return bad("target_fidelity must lie in (0, 1]");
        }
        if self.robustness_scalings.is_empty() || self.robustness_scalings.iter().any(|s| !(*s > 0.0)) {
            return bad("robustness_scalings must be non-empty and positive");
        }
        Ok(())
    }

    fn params_per_segment(&self) -> usize {
        if self.optimize_detunings {
            9
        } else {
            6
        }
    }
}

/// Partial derivatives of the objective for one segment, per rad/s.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SegmentGradient {
    /// `[∂/∂Re c, ∂/∂Im c]` for c31, c32, c34.
    pub couplings: [[f64; 2]; 3],
    /// `∂/∂δ` for δ1, δ2, δ4 (zero unless requested).
    pub detunings: [f64; 3],
}

/// Outcome of [`synthesize`].
#[derive(Clone, Debug)]
pub struct Synthesis {
    pub sequence: PulseSequence,
    pub fidelity: f64,
    pub iterations: usize,
    pub converged: bool,
}

type M4 = Matrix4<C64>;

fn to_m4(op: &ComplexOperator) -> M4 {
    M4::from_fn(|r, c| op.get(r, c))
}

/// ∂H/∂θ generators in the number basis, in parameter order
/// Re c31, Im c31, Re c32, Im c32, Re c34, Im c34, δ1, δ2, δ4.
fn generators() -> [M4; 9] {
    let mut out = [M4::zeros(); 9];
    for (slot, k) in [0usize, 1, 3].into_iter().enumerate() {
        // H ∋ c|3><k| + c*|k><3|
        out[2 * slot][(2, k)] = ONE;
        out[2 * slot][(k, 2)] = ONE;
        out[2 * slot + 1][(2, k)] = I;
        out[2 * slot + 1][(k, 2)] = -I;
    }
    for (slot, k) in [0usize, 1, 3].into_iter().enumerate() {
        out[6 + slot][(k, k)] = ONE;
    }
    out
}

fn hamiltonian(seg: &PulseSegment, scale: f64) -> M4 {
    let mut h = M4::zeros();
    for (k, c) in [(0usize, seg.c31), (1, seg.c32), (3, seg.c34)] {
        let c = c * scale;
        h[(2, k)] += c;
        h[(k, 2)] += c.conj();
    }
    for (k, d) in [(0usize, seg.d1), (1, seg.d2), (3, seg.d4)] {
        h[(k, k)] += C64::new(d, 0.0);
    }
    h
}

struct SegmentEigen {
    vecs: M4,
    phases: Vector4<C64>,
    vals: Vector4<f64>,
    duration: f64,
}

impl SegmentEigen {
    fn new(seg: &PulseSegment, scale: f64) -> Self {
        let eig = SymmetricEigen::new(hamiltonian(seg, scale));
        let phases = eig.eigenvalues.map(|l| C64::from_polar(1.0, -l * seg.duration));
        Self { vecs: eig.eigenvectors, phases, vals: eig.eigenvalues, duration: seg.duration }
    }

    fn propagator(&self) -> M4 {
        let mut scaled = self.vecs;
        for c in 0..4 {
            let w = self.phases[c];
            for r in 0..4 {
                scaled[(r, c)] *= w;
            }
        }
        scaled * self.vecs.adjoint()
    }

    /// `(e^{-iλ_k τ} − e^{-iλ_l τ}) / (λ_k − λ_l)`, written with sinc so it
    /// stays accurate for (near-)degenerate pairs.
    fn divided_differences(&self) -> M4 {
        let tau = self.duration;
        M4::from_fn(|k, l| {
            let half = 0.5 * (self.vals[k] - self.vals[l]) * tau;
            let sinc = if half.abs() < 1e-8 { 1.0 - half * half / 6.0 } else { half.sin() / half };
            C64::from_polar(1.0, -0.5 * (self.vals[k] + self.vals[l]) * tau) * (-I * tau * sinc)
        })
    }
}

/// `Tr(V† U)` and its gradient for one amplitude scaling.
fn overlap_and_gradient(
    seq: &PulseSequence,
    target_dag: &M4,
    scale: f64,
    n_params: usize,
    want_gradient: bool,
) -> (C64, Vec<C64>) {
    let eigs: Vec<SegmentEigen> = seq.segments().iter().map(|s| SegmentEigen::new(s, scale)).collect();
    let props: Vec<M4> = eigs.iter().map(SegmentEigen::propagator).collect();
    let n = props.len();

    // forward[j] = U_j ⋯ U_1 (forward[0] = 1)
    let mut forward = Vec::with_capacity(n + 1);
    forward.push(M4::identity());
    for u in &props {
        let next = u * forward.last().unwrap();
        forward.push(next);
    }
    let overlap = (target_dag * forward[n]).trace();
    if !want_gradient {
        return (overlap, Vec::new());
    }

    let gens = generators();
    let mut grad = vec![ZERO; n * n_params];
    // backward = V† U_N ⋯ U_{j+1}
    let mut backward = *target_dag;
    for j in (0..n).rev() {
        let eig = &eigs[j];
        let q = eig.vecs.adjoint() * forward[j] * backward * eig.vecs;
        let dd = eig.divided_differences();
        for p in 0..n_params {
            let k = eig.vecs.adjoint() * gens[p] * eig.vecs;
            let mut acc = ZERO;
            for a in 0..4 {
                for b in 0..4 {
                    acc += q[(b, a)] * dd[(a, b)] * k[(a, b)];
                }
            }
            // couplings enter H multiplied by the amplitude scale
            grad[j * n_params + p] = if p < 6 { acc * scale } else { acc };
        }
        backward *= props[j];
    }
    (overlap, grad)
}

fn check_scalings(scalings: &[f64]) -> Result<()> {
    if scalings.is_empty() || scalings.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::InvalidParameter("amplitude scalings must be non-empty and positive".into()));
    }
    Ok(())
}

/// Mean over `scalings` of the gate fidelity between the propagated
/// (amplitude-scaled) sequence and the target.
pub fn objective(seq: &PulseSequence, target: &GateTarget, theta0: f64, scalings: &[f64]) -> Result<f64> {
    check_scalings(scalings)?;
    let target_dag = to_m4(&target.in_number_basis(theta0)).adjoint();
    Ok(evaluate(seq, &target_dag, scalings, 6, false).0)
}

fn evaluate(
    seq: &PulseSequence,
    target_dag: &M4,
    scalings: &[f64],
    n_params: usize,
    want_gradient: bool,
) -> (f64, Vec<f64>) {
    let per_scale: Vec<(C64, Vec<C64>)> =
        scalings.par_iter().map(|&s| overlap_and_gradient(seq, target_dag, s, n_params, want_gradient)).collect();
    let m = scalings.len() as f64;
    let mut fid = 0.0;
    let mut grad = vec![0.0; if want_gradient { seq.len() * n_params } else { 0 }];
    for (g, dg) in &per_scale {
        fid += g.norm_sqr() / 16.0 / m;
        for (out, d) in grad.iter_mut().zip(dg) {
            *out += 2.0 * (g.conj() * d).re / 16.0 / m;
        }
    }
    (fid, grad)
}

/// Exact gradient of [`objective`] with respect to every segment's controls.
pub fn gradient(
    seq: &PulseSequence,
    target: &GateTarget,
    theta0: f64,
    scalings: &[f64],
    include_detunings: bool,
) -> Result<Vec<SegmentGradient>> {
    check_scalings(scalings)?;
    let n_params = if include_detunings { 9 } else { 6 };
    let target_dag = to_m4(&target.in_number_basis(theta0)).adjoint();
    let (_, flat) = evaluate(seq, &target_dag, scalings, n_params, true);
    Ok(flat
        .chunks(n_params)
        .map(|c| {
            let mut g = SegmentGradient { couplings: [[c[0], c[1]], [c[2], c[3]], [c[4], c[5]]], ..Default::default() };
            if include_detunings {
                g.detunings = [c[6], c[7], c[8]];
            }
            g
        })
        .collect())
}

/// Control vector in units of `omega_max`.
struct Controls {
    x: Vec<f64>,
    n_params: usize,
}

impl Controls {
    fn from_sequence(seq: &PulseSequence, cfg: &GrapeConfig) -> Self {
        let n_params = cfg.params_per_segment();
        let mut x = Vec::with_capacity(seq.len() * n_params);
        for s in seq.segments() {
            for c in s.couplings() {
                x.extend([c.re / cfg.omega_max, c.im / cfg.omega_max]);
            }
            if cfg.optimize_detunings {
                x.extend(s.detunings().map(|d| d / cfg.omega_max));
            }
        }
        Self { x, n_params }
    }

    fn to_sequence(&self, template: &PulseSequence, cfg: &GrapeConfig) -> PulseSequence {
        template
            .segments()
            .iter()
            .zip(self.x.chunks(self.n_params))
            .map(|(s, p)| {
                let w = cfg.omega_max;
                let mut seg = PulseSegment {
                    c31: C64::new(p[0], p[1]) * w,
                    c32: C64::new(p[2], p[3]) * w,
                    c34: C64::new(p[4], p[5]) * w,
                    ..*s
                };
                if cfg.optimize_detunings {
                    seg.d1 = p[6] * w;
                    seg.d2 = p[7] * w;
                    seg.d4 = p[8] * w;
                }
                seg
            })
            .collect()
    }

    /// Radial clip of each coupling to |c| ≤ omega_max, detunings to |δ| ≤ omega_max.
    fn project(&mut self) {
        for seg in self.x.chunks_mut(self.n_params) {
            for pair in seg[..6].chunks_mut(2) {
                let r = pair[0].hypot(pair[1]);
                if r > 1.0 {
                    pair[0] /= r;
                    pair[1] /= r;
                }
            }
            for d in seg[6..].iter_mut() {
                *d = d.clamp(-1.0, 1.0);
            }
        }
    }
}

/// Seeded small random starting pulse.
pub fn initial_pulse(cfg: &GrapeConfig) -> PulseSequence {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let dt = cfg.total_time / cfg.n_segments as f64;
    (0..cfg.n_segments)
        .map(|_| {
            let mut c = || C64::new(rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2)) * cfg.omega_max;
            let (c31, c32, c34) = (c(), c(), c());
            PulseSegment { c31, c32, c34, ..PulseSegment::idle(dt) }
        })
        .collect()
}

/// Optimizes from the seeded random initial pulse, or returns the idle pulse
/// when it already reaches the target.
pub fn synthesize(target: &GateTarget, cfg: &GrapeConfig, ion: &IonParams) -> Result<Synthesis> {
    cfg.validate()?;
    let idle = PulseSequence::uniform(cfg.n_segments, cfg.total_time);
    let (_, theta0) = crate::ion::mixing_angle(ion);
    if objective(&idle, target, theta0, &cfg.robustness_scalings)? >= cfg.target_fidelity {
        return synthesize_from(target, cfg, ion, idle);
    }
    synthesize_from(target, cfg, ion, initial_pulse(cfg))
}

/// Gradient ascent with backtracking from a given starting pulse. The
/// objective never decreases between accepted iterates.
pub fn synthesize_from(
    target: &GateTarget,
    cfg: &GrapeConfig,
    ion: &IonParams,
    start: PulseSequence,
) -> Result<Synthesis> {
    cfg.validate()?;
    ion.validate()?;
    if start.len() < 2 {
        return Err(Error::InvalidParameter("starting pulse needs at least two segments".into()));
    }
    let (_, theta0) = crate::ion::mixing_angle(ion);
    let target_dag = to_m4(&target.in_number_basis(theta0)).adjoint();
    let scalings = &cfg.robustness_scalings;

    let mut controls = Controls::from_sequence(&start, cfg);
    controls.project();
    let n_params = controls.n_params;
    let mut seq = controls.to_sequence(&start, cfg);
    let (mut fid, mut grad) = evaluate(&seq, &target_dag, scalings, n_params, true);
    let mut step = cfg.step_size;
    let mut iterations = 0;

    while fid < cfg.target_fidelity && iterations < cfg.max_iters {
        iterations += 1;
        // gradient in control units: ∂F/∂x = ω_max ∂F/∂θ
        let gx: Vec<f64> = grad.iter().map(|g| g * cfg.omega_max).collect();
        let norm = gx.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm < 1e-14 {
            break;
        }
        let mut accepted = false;
        for _ in 0..40 {
            let mut trial = Controls { x: controls.x.clone(), n_params };
            for (x, g) in trial.x.iter_mut().zip(&gx) {
                *x += step * g / norm;
            }
            trial.project();
            let trial_seq = trial.to_sequence(&start, cfg);
            let (trial_fid, trial_grad) = evaluate(&trial_seq, &target_dag, scalings, n_params, true);
            if trial_fid > fid {
                controls = trial;
                seq = trial_seq;
                fid = trial_fid;
                grad = trial_grad;
                step *= 1.5;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }

    Ok(Synthesis { converged: fid >= cfg.target_fidelity, sequence: seq, fidelity: fid, iterations })
}
