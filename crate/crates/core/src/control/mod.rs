//! Rotating-frame control of the four-level ion.
//!
//! Three near-resonant tones couple |3> to |1>, |2> and |4>. After the
//! rotating-wave approximation the Hamiltonian in the number basis is
//!
//! ```text
//! Hc = c31|3><1| + c32|3><2| + c34|3><4| + (δ1/2)|1><1| + (δ2/2)|2><2| + (δ4/2)|4><4| + H.c.
//! ```
//!
//! The Hermitian conjugate doubles the diagonal, so a detuning `d_k` shows up
//! as `δk |k><k|`. This matches the frame transformation of the lab
//! Hamiltonian, where `H0 + H_r'` leaves exactly `δk` on the diagonal.
//!
//! Piecewise-constant sequences are propagated with the latest segment
//! leftmost: `U = U_N ⋯ U_2 U_1`.

mod lab;

pub use lab::{
    frame_transform, lab_frame_max_step, propagate_lab_frame, resonant_pi_check, rotating_frame_operator, DetuningSpan,
    LabSegment, PiPulseCheck,
};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ion::{qubit_spin, EigenSystem, IonParams};
use crate::linalg::{expm_hermitian_unchecked, ComplexOperator, ZERO};

/// Number-basis index of level |k>.
pub(crate) const fn level(k: usize) -> usize {
    k - 1
}

/// One piecewise-constant slice of the rotating-frame controls.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSegment {
    /// Segment length in seconds.
    #[serde(rename = "duration_s")]
    pub duration: f64,
    pub c31: C64,
    pub c32: C64,
    pub c34: C64,
    pub d1: f64,
    pub d2: f64,
    pub d4: f64,
}

impl PulseSegment {
    pub fn idle(duration: f64) -> Self {
        Self { duration, c31: ZERO, c32: ZERO, c34: ZERO, d1: 0.0, d2: 0.0, d4: 0.0 }
    }

    /// Couplings in `[c31, c32, c34]` order.
    pub fn couplings(&self) -> [C64; 3] {
        [self.c31, self.c32, self.c34]
    }

    pub fn set_couplings(&mut self, c: [C64; 3]) {
        [self.c31, self.c32, self.c34] = c;
    }

    pub fn detunings(&self) -> [f64; 3] {
        [self.d1, self.d2, self.d4]
    }

    pub fn max_amplitude(&self) -> f64 {
        self.couplings().iter().fold(0.0_f64, |m, c| m.max(c.norm()))
    }

    /// Copy with every coupling multiplied by `s` (detunings untouched).
    pub fn amplitude_scaled(&self, s: f64) -> Self {
        Self { c31: self.c31 * s, c32: self.c32 * s, c34: self.c34 * s, ..*self }
    }

    /// A resonant rotation of angle `angle` on |3>↔|k> about the equatorial
    /// axis at `phase` (the Rabi frequency is 2|c|).
    pub fn transition_pulse(k: usize, angle: f64, phase: f64, amplitude: f64) -> Result<Self> {
        if amplitude <= 0.0 {
            return Err(Error::InvalidParameter("pulse amplitude must be > 0".into()));
        }
        let c = C64::from_polar(amplitude, phase);
        let mut seg = Self::idle(angle.abs() / (2.0 * amplitude));
        let c = if angle < 0.0 { -c } else { c };
        match k {
            1 => seg.c31 = c,
            2 => seg.c32 = c,
            4 => seg.c34 = c,
            _ => return Err(Error::InvalidParameter(format!("no |3>↔|{k}> control"))),
        }
        Ok(seg)
    }

    pub fn validate(&self, max_amplitude: Option<f64>) -> Result<()> {
        let values = [
            self.duration,
            self.c31.re,
            self.c31.im,
            self.c32.re,
            self.c32.im,
            self.c34.re,
            self.c34.im,
            self.d1,
            self.d2,
            self.d4,
        ];
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("pulse segment has non-finite values".into()));
        }
        if self.duration <= 0.0 {
            return Err(Error::InvalidParameter(format!("segment duration {} must be > 0", self.duration)));
        }
        if let Some(limit) = max_amplitude {
            let amp = self.max_amplitude();
            if amp > limit * (1.0 + 1e-12) {
                return Err(Error::InvalidParameter(format!("coupling {amp:e} exceeds bound {limit:e}")));
            }
        }
        Ok(())
    }
}

/// Ordered list of segments.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PulseSequence {
    segments: Vec<PulseSegment>,
}

impl PulseSequence {
    pub fn new(segments: Vec<PulseSegment>) -> Self {
        Self { segments }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// `n` idle segments spanning `total_time`.
    pub fn uniform(n: usize, total_time: f64) -> Self {
        Self { segments: vec![PulseSegment::idle(total_time / n as f64); n] }
    }

    pub fn segments(&self) -> &[PulseSegment] {
        &self.segments
    }

    pub fn segments_mut(&mut self) -> &mut [PulseSegment] {
        &mut self.segments
    }

    pub fn push(&mut self, seg: PulseSegment) {
        self.segments.push(seg);
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn total_time(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Sequence `self` followed by `later`.
    pub fn then(&self, later: &PulseSequence) -> PulseSequence {
        let mut segments = self.segments.clone();
        segments.extend_from_slice(&later.segments);
        Self { segments }
    }

    pub fn amplitude_scaled(&self, s: f64) -> Self {
        Self { segments: self.segments.iter().map(|seg| seg.amplitude_scaled(s)).collect() }
    }

    pub fn validate(&self, max_amplitude: Option<f64>) -> Result<()> {
        self.segments.iter().try_for_each(|s| s.validate(max_amplitude))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let seq: Self = serde_json::from_str(s)?;
        seq.validate(None)?;
        Ok(seq)
    }
}

impl FromIterator<PulseSegment> for PulseSequence {
    fn from_iter<T: IntoIterator<Item = PulseSegment>>(iter: T) -> Self {
        Self { segments: iter.into_iter().collect() }
    }
}

/// The rotating-frame Hamiltonian of one segment (number basis, rad/s).
pub fn control_hamiltonian(seg: &PulseSegment) -> ComplexOperator {
    let mut h = nalgebra::DMatrix::<C64>::zeros(4, 4);
    let three = level(3);
    for (k, c) in [(1, seg.c31), (2, seg.c32), (4, seg.c34)] {
        h[(three, level(k))] += c;
        h[(level(k), three)] += c.conj();
    }
    for (k, d) in [(1, seg.d1), (2, seg.d2), (4, seg.d4)] {
        // (δ/2)|k><k| plus its Hermitian conjugate
        h[(level(k), level(k))] += C64::new(d / 2.0, 0.0) + C64::new(d / 2.0, 0.0);
    }
    ComplexOperator::from_matrix_unchecked(h)
}

pub(crate) fn segment_propagator(seg: &PulseSegment) -> ComplexOperator {
    expm_hermitian_unchecked(control_hamiltonian(seg).matrix(), seg.duration)
}

/// Time-ordered product of segment propagators, latest leftmost.
pub fn propagate(seq: &PulseSequence) -> ComplexOperator {
    seq.segments().iter().fold(ComplexOperator::identity(4), |acc, seg| &segment_propagator(seg) * &acc)
}

/// A microwave tone `B cos(ω t + φ)` with a slowly varying vector envelope.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MicrowaveTone {
    /// Field components (T).
    pub bx: f64,
    pub by: f64,
    pub bz: f64,
    /// Carrier angular frequency (rad/s).
    pub omega: f64,
    /// Carrier phase (rad).
    pub phase: f64,
}

impl MicrowaveTone {
    /// Tone `k ∈ {1, 2, 4}` tuned to |k>↔|3> with detuning `delta` (the
    /// carrier sits at `E_k − E_3 − δ`).
    pub fn tuned(es: &EigenSystem, k: usize, delta: f64) -> Self {
        Self { omega: es.splitting(k, 3) - delta, ..Default::default() }
    }

    pub fn with_field(self, bx: f64, by: f64, bz: f64) -> Self {
        Self { bx, by, bz, ..self }
    }

    pub fn with_phase(self, phase: f64) -> Self {
        Self { phase, ..self }
    }

    fn field(&self) -> [f64; 3] {
        [self.bx, self.by, self.bz]
    }
}

/// Rotating-frame segment obtained from three tones, plus any violated
/// assumptions of the rotating-wave approximation.
#[derive(Clone, Debug, PartialEq)]
pub struct RwaSegment {
    pub segment: PulseSegment,
    pub regime_warnings: Vec<String>,
}

impl RwaSegment {
    pub fn regime_ok(&self) -> bool {
        self.regime_warnings.is_empty()
    }
}

/// "≪" in the regime checks means at most this fraction.
const REGIME_FRACTION: f64 = 0.1;

/// Maps tones driving |1>, |2>, |4> (in that order) to rotating-frame
/// couplings and detunings.
///
/// A transverse field `B cos(ωt + φ)` has matrix element `B/2 · γ·⟨3|I|k⟩`
/// and the rotating-wave approximation keeps half of the cosine, so the
/// transverse couplings carry a factor 1/4:
///
/// ```text
/// c31 =  ¼ (Bx + iBy) (γ1 cos(θ0/2) + γ2 sin(θ0/2)) e^{iφ1}
/// c32 = −½ Bz sin(θ0/2) cos(θ0/2) (γ2 − γ1) e^{iφ2}
/// c34 =  ¼ (Bx − iBy) (γ1 sin(θ0/2) + γ2 cos(θ0/2)) e^{iφ3}
/// ```
///
/// Only the z component of tone 2 and the transverse components of tones 1
/// and 3 contribute. Detunings follow `ω1 = E1 − E3 − δ1`, `ω2 = E2 − E3 − δ2`,
/// `ω3 = E4 − E3 − δ4`.
pub fn rwa_coefficients(tones: &[MicrowaveTone; 3], p: &IonParams, duration: f64) -> RwaSegment {
    let es = EigenSystem::new(p);
    let (s, c) = ((es.theta0 / 2.0).sin(), (es.theta0 / 2.0).cos());
    let (g1, g2) = (p.gamma_nuclear, p.gamma_electron);
    let [t1, t2, t3] = tones;

    let c31 = C64::new(t1.bx, t1.by) * (0.25 * (g1 * c + g2 * s)) * C64::from_polar(1.0, t1.phase);
    let c32 = C64::new(-0.5 * t2.bz * s * c * (g2 - g1), 0.0) * C64::from_polar(1.0, t2.phase);
    let c34 = C64::new(t3.bx, -t3.by) * (0.25 * (g1 * s + g2 * c)) * C64::from_polar(1.0, t3.phase);

    let d1 = es.splitting(1, 3) - t1.omega;
    let d2 = es.splitting(2, 3) - t2.omega;
    let d4 = es.splitting(4, 3) - t3.omega;

    let mut regime_warnings = Vec::new();
    let zeeman = es.splitting(1, 2).abs().min(es.splitting(2, 4).abs());
    for (name, d) in [("δ1", d1), ("δ2", d2), ("δ4", d4)] {
        if d.abs() > REGIME_FRACTION * zeeman {
            regime_warnings.push(format!(
                "|{name}| = {:.3e} rad/s is not small against the Zeeman splitting {zeeman:.3e}",
                d.abs()
            ));
        }
    }
    for (k, tone) in tones.iter().enumerate() {
        for (axis, b) in ["x", "y", "z"].iter().zip(tone.field()) {
            let coupling = (g1.abs().max(g2.abs())) * b.abs();
            if coupling > REGIME_FRACTION * zeeman {
                regime_warnings.push(format!(
                    "tone {} B{axis}: |γB| = {coupling:.3e} rad/s is not small against the Zeeman splitting {zeeman:.3e}",
                    k + 1
                ));
            }
            if coupling > 0.0 && tone.omega.abs() < coupling / REGIME_FRACTION {
                regime_warnings.push(format!("tone {} carrier is not fast against |γB{axis}|", k + 1));
            }
        }
    }

    RwaSegment { segment: PulseSegment { duration, c31, c32, c34, d1, d2, d4 }, regime_warnings }
}

/// Lab-frame drive operator of one tone's envelope, `−Σ_j B_j (γ1 I1j + γ2 I2j)`,
/// in the spin basis.
pub(crate) fn tone_operator(tone: &MicrowaveTone, p: &IonParams) -> ComplexOperator {
    let mut v = ComplexOperator::zeros(4);
    for (axis, b) in tone.field().into_iter().enumerate() {
        if b == 0.0 {
            continue;
        }
        let moment =
            &qubit_spin(1, axis).scale_real(p.gamma_nuclear) + &qubit_spin(2, axis).scale_real(p.gamma_electron);
        v = &v - &moment.scale_real(b);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{expm_unitary, I};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_segment(rng: &mut ChaCha8Rng, scale: f64) -> PulseSegment {
        let mut c = || C64::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale));
        let (c31, c32, c34) = (c(), c(), c());
        PulseSegment {
            duration: rng.random_range(1e-5..1e-4),
            c31,
            c32,
            c34,
            d1: rng.random_range(-scale..scale),
            d2: rng.random_range(-scale..scale),
            d4: rng.random_range(-scale..scale),
        }
    }

    #[test]
    fn zero_segment_zero_hamiltonian() {
        assert_eq!(control_hamiltonian(&PulseSegment::idle(1.0)), ComplexOperator::zeros(4));
    }

    #[test]
    fn real_c31_structure() {
        let omega = 1234.5;
        let seg = PulseSegment { c31: C64::new(omega, 0.0), ..PulseSegment::idle(1.0) };
        let expected = &ComplexOperator::outer(4, 2, 0) + &ComplexOperator::outer(4, 0, 2);
        assert_eq!(control_hamiltonian(&seg), expected.scale_real(omega));
    }

    #[test]
    fn detuning_enters_once_per_level() {
        let seg = PulseSegment { d1: 3.0, d2: -5.0, d4: 7.0, ..PulseSegment::idle(1.0) };
        let h = control_hamiltonian(&seg);
        assert_eq!(h, ComplexOperator::from_real_diagonal(&[3.0, -5.0, 0.0, 7.0]));
    }

    #[test]
    fn random_segments_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let h = control_hamiltonian(&random_segment(&mut rng, 1e5));
            assert!(h.hermiticity_deviation() <= 1e-14 * h.max_abs().max(1.0));
        }
    }

    #[test]
    fn empty_sequence_is_identity() {
        assert_eq!(propagate(&PulseSequence::empty()), ComplexOperator::identity(4));
    }

    #[test]
    fn pi_pulse_on_three_one() {
        let omega = 2.0 * PI * 20e3;
        let seg = PulseSegment { c31: C64::new(omega, 0.0), ..PulseSegment::idle(PI / (2.0 * omega)) };
        let u = propagate(&PulseSequence::new(vec![seg]));
        // |3> -> -i|1>
        assert!((u.get(0, 2) - (-I)).norm() < 1e-12);
        assert!((u.get(2, 0) - (-I)).norm() < 1e-12);
        assert!((u.get(1, 1) - 1.0).norm() < 1e-12);
        assert!((u.get(3, 3) - 1.0).norm() < 1e-12);

        let built = PulseSegment::transition_pulse(1, PI, 0.0, omega).unwrap();
        assert!((built.duration - seg.duration).abs() < 1e-18);
    }

    #[test]
    fn latest_segment_is_leftmost() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_segment(&mut rng, 3e4);
        let b = random_segment(&mut rng, 3e4);
        let u = propagate(&PulseSequence::new(vec![a, b]));
        let ua = expm_unitary(&control_hamiltonian(&a), a.duration).unwrap();
        let ub = expm_unitary(&control_hamiltonian(&b), b.duration).unwrap();
        assert!(u.max_abs_diff(&(&ub * &ua)) < 1e-12);
        assert!(u.max_abs_diff(&(&ua * &ub)) > 1e-3);
    }

    #[test]
    fn splitting_segments_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let seq: PulseSequence = (0..6).map(|_| random_segment(&mut rng, 3e4)).collect();
        let u = propagate(&seq);
        assert!(u.is_unitary(1e-9));
        for split in 0..seq.len() {
            let mut halves = Vec::new();
            for (k, s) in seq.segments().iter().enumerate() {
                if k == split {
                    let half = PulseSegment { duration: s.duration / 2.0, ..*s };
                    halves.extend([half, half]);
                } else {
                    halves.push(*s);
                }
            }
            let v = propagate(&PulseSequence::new(halves));
            assert!(u.max_abs_diff(&v) < 1e-12);
        }
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let seq: PulseSequence = (0..10).map(|_| random_segment(&mut rng, 1e5)).collect();
        let json = seq.to_json().unwrap();
        let back = PulseSequence::from_json(&json).unwrap();
        for (a, b) in seq.segments().iter().zip(back.segments()) {
            assert_eq!(a.duration.to_bits(), b.duration.to_bits());
            assert_eq!(a.c31.re.to_bits(), b.c31.re.to_bits());
            assert_eq!(a.c34.im.to_bits(), b.c34.im.to_bits());
            assert_eq!(a.d2.to_bits(), b.d2.to_bits());
        }
        assert_eq!(seq, back);
    }

    #[test]
    fn json_layout() {
        let seg = PulseSegment { c31: C64::new(1.0, -2.0), d4: 0.5, ..PulseSegment::idle(1e-6) };
        let json = PulseSequence::new(vec![seg]).to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        let obj = &v[0];
        assert_eq!(obj["duration_s"], 1e-6);
        assert_eq!(obj["c31"], serde_json::json!([1.0, -2.0]));
        assert_eq!(obj["c32"], serde_json::json!([0.0, 0.0]));
        assert_eq!(obj["d4"], 0.5);
        assert!(PulseSequence::from_json(
            r#"[{"duration_s": -1.0, "c31": [0,0], "c32": [0,0], "c34": [0,0], "d1": 0, "d2": 0, "d4": 0}]"#
        )
        .is_err());
    }

    #[test]
    fn rwa_polarization_selectivity() {
        let p = IonParams::default();
        let es = EigenSystem::new(&p);
        let b = 1e-6;
        let z_only = [
            MicrowaveTone::tuned(&es, 1, 0.0),
            MicrowaveTone::tuned(&es, 2, 0.0).with_field(0.0, 0.0, b),
            MicrowaveTone::tuned(&es, 4, 0.0),
        ];
        let seg = rwa_coefficients(&z_only, &p, 1e-6).segment;
        assert_eq!(seg.c31, ZERO);
        assert_eq!(seg.c34, ZERO);
        assert!(seg.c32.norm() > 0.0);

        let transverse = [
            MicrowaveTone::tuned(&es, 1, 0.0).with_field(b, 0.0, 0.0),
            MicrowaveTone::tuned(&es, 2, 0.0),
            MicrowaveTone::tuned(&es, 4, 0.0).with_field(0.0, b, 0.0),
        ];
        let seg = rwa_coefficients(&transverse, &p, 1e-6).segment;
        assert_eq!(seg.c32, ZERO);
        assert!(seg.c31.norm() > 0.0 && seg.c34.norm() > 0.0);
    }

    #[test]
    fn rwa_zero_tones_zero_segment() {
        let p = IonParams::default();
        let es = EigenSystem::new(&p);
        let tones = [1, 2, 4].map(|k| MicrowaveTone::tuned(&es, k, 0.0));
        let r = rwa_coefficients(&tones, &p, 2e-6);
        assert_eq!(control_hamiltonian(&r.segment).max_abs(), 0.0);
        assert!(r.regime_ok());
    }

    #[test]
    fn rwa_c31_value_default_params() {
        let p = IonParams::default();
        let es = EigenSystem::new(&p);
        let tones = [
            MicrowaveTone::tuned(&es, 1, 0.0).with_field(1e-6, 0.0, 0.0),
            MicrowaveTone::tuned(&es, 2, 0.0),
            MicrowaveTone::tuned(&es, 4, 0.0),
        ];
        let seg = rwa_coefficients(&tones, &p, 1e-6).segment;
        // independent evaluation: ⟨3|−B(γ1 I1x + γ2 I2x)|1⟩ / 2 from explicit vectors
        let theta0 = es.theta0;
        let three = [0.0, -(theta0 / 2.0).sin(), -(theta0 / 2.0).cos(), 0.0];
        // (γ1 I1x + γ2 I2x)|↑↑> = γ1/2 |↓↑> + γ2/2 |↑↓>
        let moment = [0.0, p.gamma_electron / 2.0, p.gamma_nuclear / 2.0, 0.0];
        let element: f64 = three.iter().zip(moment).map(|(a, b)| a * b).sum();
        let expected = -1e-6 * element / 2.0;
        assert!((seg.c31.re - expected).abs() < 1e-12 * expected.abs(), "{} vs {expected}", seg.c31.re);
        assert_eq!(seg.c31.im, 0.0);
        // ≈ 2π × 5 kHz for 1 μT
        assert!((seg.c31.norm() / (2.0 * PI) - 4.95e3).abs() < 0.1e3, "{}", seg.c31.norm() / (2.0 * PI));
    }

    #[test]
    fn rwa_detunings_from_carriers() {
        let p = IonParams::default();
        let es = EigenSystem::new(&p);
        let tones = [
            MicrowaveTone::tuned(&es, 1, 2.0e3),
            MicrowaveTone::tuned(&es, 2, -1.0e3),
            MicrowaveTone::tuned(&es, 4, 5.0e2),
        ];
        let seg = rwa_coefficients(&tones, &p, 1e-6).segment;
        assert!((seg.d1 - 2.0e3).abs() < 1e-4 * 2e3 + 1e-3);
        assert!((seg.d2 + 1.0e3).abs() < 1e-3);
        assert!((seg.d4 - 5.0e2).abs() < 1e-3);
    }

    #[test]
    fn rwa_regime_violation_is_flagged() {
        let p = IonParams::default();
        let es = EigenSystem::new(&p);
        let tones = [
            MicrowaveTone::tuned(&es, 1, 1e8).with_field(1e-3, 0.0, 0.0),
            MicrowaveTone::tuned(&es, 2, 0.0),
            MicrowaveTone::tuned(&es, 4, 0.0),
        ];
        let r = rwa_coefficients(&tones, &p, 1e-6);
        assert!(!r.regime_ok());
        assert!(r.regime_warnings.len() >= 2);
    }

    #[test]
    fn rwa_linear_in_electron_gyromagnetic_ratio() {
        let p = IonParams::default();
        let flipped = IonParams { gamma_electron: -p.gamma_electron, ..p };
        // the mixing angle also depends on γ2; compare at B0 = 0 where it does not
        let (p, flipped) = (p.with_b_field(0.0), flipped.with_b_field(0.0));
        let tones = |p: &IonParams| {
            let es = EigenSystem::new(p);
            [
                MicrowaveTone::tuned(&es, 1, 0.0).with_field(1e-6, 2e-6, 0.0),
                MicrowaveTone::tuned(&es, 2, 0.0).with_field(0.0, 0.0, 3e-6),
                MicrowaveTone::tuned(&es, 4, 0.0).with_field(-1e-6, 0.5e-6, 0.0),
            ]
        };
        let a = rwa_coefficients(&tones(&p), &p, 1e-6).segment;
        let b = rwa_coefficients(&tones(&flipped), &flipped, 1e-6).segment;
        let nuclear_only = IonParams { gamma_electron: 0.0, ..p };
        let n = rwa_coefficients(&tones(&nuclear_only), &nuclear_only, 1e-6).segment;
        // c(γ1, γ2) = c(γ1, 0) + γ2-part, and the γ2-part flips sign
        for (ca, cb, cn) in [(a.c31, b.c31, n.c31), (a.c32, b.c32, n.c32), (a.c34, b.c34, n.c34)] {
            let part_a = ca - cn;
            let part_b = cb - cn;
            assert!((part_a + part_b).norm() <= 1e-9 * part_a.norm().max(1.0));
        }
    }

    #[test]
    fn coupling_magnitudes_match_symbolic_evaluation() {
        // per-unit-field couplings evaluated independently of rwa_coefficients
        let p = IonParams::default();
        let es = EigenSystem::new(&p);
        let (s, c) = ((es.theta0 / 2.0).sin(), (es.theta0 / 2.0).cos());
        let per_bz = 0.5 * (s * c * (p.gamma_electron - p.gamma_nuclear)).abs();
        let per_bx = 0.25 * (p.gamma_nuclear * c + p.gamma_electron * s).abs();
        let tones = [
            MicrowaveTone::tuned(&es, 1, 0.0).with_field(1.0e-7, 0.0, 0.0),
            MicrowaveTone::tuned(&es, 2, 0.0).with_field(0.0, 0.0, 1.0e-7),
            MicrowaveTone::tuned(&es, 4, 0.0),
        ];
        let seg = rwa_coefficients(&tones, &p, 1e-6).segment;
        assert!((seg.c32.norm() / 1e-7 - per_bz).abs() < 1e-9 * per_bz);
        assert!((seg.c31.norm() / 1e-7 - per_bx).abs() < 1e-9 * per_bx);
        assert!((seg.c32.norm() / seg.c31.norm() - per_bz / per_bx).abs() < 1e-9);
    }
}
