//! Lab-frame propagation without the rotating-wave approximation, and the
//! frame map back from the rotating frame.
//!
//! The integrator works in the interaction picture of H0 (exact, since H0 is
//! diagonal in the number basis) and takes one exponential per step of the
//! exactly integrated interaction Hamiltonian, i.e. first-order Magnus with
//! every counter-rotating term kept. Tone phases are `ω t + φ` with `t` the
//! global time from the start of the schedule.

use std::f64::consts::PI;

use nalgebra::{Matrix4, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::{tone_operator, MicrowaveTone};
use crate::error::{Error, Result};
use crate::ion::{EigenSystem, IonParams};
use crate::linalg::{ComplexOperator, I, ONE};

/// Constant-envelope stretch of a three-tone schedule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabSegment {
    pub duration: f64,
    pub tones: [MicrowaveTone; 3],
}

/// Constant detunings over `duration` seconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetuningSpan {
    pub duration: f64,
    pub d1: f64,
    pub d2: f64,
    pub d4: f64,
}

/// Upper-triangle matrix element `(row, col, value)`.
type Entry = (usize, usize, C64);

/// Largest accepted step: 1/50 of the fastest period in the problem.
pub fn lab_frame_max_step(schedule: &[LabSegment], p: &IonParams) -> f64 {
    let es = EigenSystem::new(p);
    let mut fastest = 0.0_f64;
    for j in 1..=4 {
        for k in 1..=4 {
            fastest = fastest.max(es.splitting(j, k).abs());
        }
    }
    for seg in schedule {
        for tone in &seg.tones {
            fastest = fastest.max(tone.omega.abs());
        }
    }
    (2.0 * PI / fastest) / 50.0
}

/// `∫_t^{t+h} e^{iκs} ds`.
fn oscillating_integral(kappa: f64, t: f64, h: f64) -> C64 {
    let x = kappa * h;
    let ratio = if x.abs() < 1e-3 {
        // (e^{ix} − 1)/(ix) series
        C64::new(1.0 - x * x / 6.0, x / 2.0 - x * x * x / 24.0)
    } else {
        (C64::from_polar(1.0, x) - ONE) / (I * x)
    };
    C64::from_polar(h, kappa * t) * ratio
}

fn expm_minus_i(m: &Matrix4<C64>) -> Matrix4<C64> {
    let eig = SymmetricEigen::new((m + m.adjoint()) * C64::new(0.5, 0.0));
    let mut scaled = eig.eigenvectors;
    for c in 0..4 {
        let w = C64::from_polar(1.0, -eig.eigenvalues[c]);
        for r in 0..4 {
            scaled[(r, c)] *= w;
        }
    }
    scaled * eig.eigenvectors.adjoint()
}

/// Lab-frame propagator (number basis) of the schedule under
/// `H0 − Σ_k B^k·(γ1 I1 + γ2 I2) cos(ω_k t + φ_k)`.
pub fn propagate_lab_frame(schedule: &[LabSegment], p: &IonParams, dt: f64) -> Result<ComplexOperator> {
    p.validate()?;
    let max_dt = lab_frame_max_step(schedule, p);
    if !(dt > 0.0) || dt > max_dt {
        return Err(Error::StepTooCoarse { dt, max_dt });
    }
    let es = EigenSystem::new(p);
    let r = es.mapping_operator();
    let energies = es.energies;

    let mut u = Matrix4::<C64>::identity();
    let mut t = 0.0;
    for seg in schedule {
        if seg.duration < 0.0 {
            return Err(Error::InvalidParameter("lab segment duration must be >= 0".into()));
        }
        // number-basis drive operators with their non-zero entries
        let drives: Vec<(MicrowaveTone, Vec<Entry>)> = seg
            .tones
            .iter()
            .filter(|tone| tone.bx != 0.0 || tone.by != 0.0 || tone.bz != 0.0)
            .map(|tone| {
                let v = tone_operator(tone, p).conjugate_by(&r.adjoint());
                let entries = (0..4)
                    .flat_map(|a| (0..4).map(move |b| (a, b)))
                    .filter(|&(a, b)| b >= a)
                    .map(|(a, b)| (a, b, v.get(a, b)))
                    .filter(|(_, _, z)| z.norm() > 0.0)
                    .collect();
                (*tone, entries)
            })
            .collect();

        let steps = (seg.duration / dt).ceil().max(1.0) as usize;
        let h = seg.duration / steps as f64;
        for _ in 0..steps {
            if !drives.is_empty() {
                let mut m = Matrix4::<C64>::zeros();
                for (tone, entries) in &drives {
                    let (w, phi) = (tone.omega, tone.phase);
                    for &(a, b, v) in entries {
                        let nu = energies[a] - energies[b];
                        let integral = C64::from_polar(0.5, phi) * oscillating_integral(w + nu, t, h)
                            + C64::from_polar(0.5, -phi) * oscillating_integral(nu - w, t, h);
                        m[(a, b)] += v * integral;
                        if a != b {
                            m[(b, a)] = m[(a, b)].conj();
                        }
                    }
                }
                u = expm_minus_i(&m) * u;
            }
            t += h;
        }
    }
    let free = Matrix4::from_diagonal(&nalgebra::Vector4::from_fn(|k, _| C64::from_polar(1.0, -energies[k] * t)));
    Ok(ComplexOperator::from_matrix_unchecked(nalgebra::DMatrix::from_fn(4, 4, |a, b| (free * u)[(a, b)])))
}

/// `R_r'(t) = exp(−i ∫_0^t H_r'(s) ds)` with
/// `H_r' = (δ1 − E1)|1><1| + (δ2 − E2)|2><2| − E3|3><3| + (δ4 − E4)|4><4|`.
pub fn rotating_frame_operator(t: f64, p: &IonParams, history: &[DetuningSpan]) -> Result<ComplexOperator> {
    let es = EigenSystem::new(p);
    let mut integral = [0.0_f64; 4];
    let mut elapsed = 0.0;
    for span in history {
        if span.duration < 0.0 {
            return Err(Error::InvalidParameter("detuning span duration must be >= 0".into()));
        }
        let take = span.duration.min(t - elapsed);
        if take <= 0.0 {
            break;
        }
        integral[0] += span.d1 * take;
        integral[1] += span.d2 * take;
        integral[3] += span.d4 * take;
        elapsed += take;
    }
    if t - elapsed > 1e-12 * t.abs().max(1e-12) {
        return Err(Error::InvalidParameter(format!("detuning history covers {elapsed:e} s of {t:e} s")));
    }
    let diag: Vec<C64> = (0..4).map(|k| C64::from_polar(1.0, -(integral[k] - es.energies[k] * t))).collect();
    Ok(ComplexOperator::from_diagonal(&diag))
}

/// Lab-frame propagator from a rotating-frame one: `U_lab(t) = R_r'(t)† U_rot(t)`.
pub fn frame_transform(
    u_rot: &ComplexOperator,
    t: f64,
    p: &IonParams,
    history: &[DetuningSpan],
) -> Result<ComplexOperator> {
    if u_rot.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: u_rot.dim() });
    }
    Ok(&rotating_frame_operator(t, p, history)?.adjoint() * u_rot)
}

/// Lab-frame against rotating-frame evolution for one resonant π pulse.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiPulseCheck {
    /// Driven level `k` of the |k>↔|3> transition.
    pub transition: usize,
    /// `2|c| / Δ` with Δ the smaller Zeeman splitting.
    pub drive_ratio: f64,
    pub duration: f64,
    /// `max_ij | |U_lab|²_ij − |U_rwa|²_ij |`.
    pub population_mismatch: f64,
    /// `max_ij |U_lab − U_rwa|_ij`.
    pub operator_mismatch: f64,
    /// Population moved from |3> to |k> in the lab frame.
    pub transferred: f64,
    pub regime_warnings: Vec<String>,
}

/// Drives |k>↔|3> resonantly for a π rotation at Rabi rate `drive_ratio·Δ`
/// and compares the lab-frame propagator with the rotating-frame model.
/// Tones 1 and 4 are transverse (x), tone 2 is longitudinal (z).
pub fn resonant_pi_check(p: &IonParams, k: usize, drive_ratio: f64) -> Result<PiPulseCheck> {
    p.validate()?;
    let slot = match k {
        1 => 0,
        2 => 1,
        4 => 2,
        _ => return Err(Error::InvalidParameter(format!("no tone drives |{k}>↔|3>"))),
    };
    if !(drive_ratio > 0.0) {
        return Err(Error::InvalidParameter("drive ratio must be > 0".into()));
    }
    let es = EigenSystem::new(p);
    let zeeman = es.splitting(1, 2).abs().min(es.splitting(2, 4).abs());
    let idle = [1, 2, 4].map(|j| MicrowaveTone::tuned(&es, j, 0.0));
    let field =
        |tone: MicrowaveTone, b: f64| if k == 2 { tone.with_field(0.0, 0.0, b) } else { tone.with_field(b, 0.0, 0.0) };
    let coupling = |tones: &[MicrowaveTone; 3]| {
        let seg = super::rwa_coefficients(tones, p, 1.0).segment;
        seg.couplings()[slot].norm()
    };

    let mut probe = idle;
    probe[slot] = field(idle[slot], 1.0);
    let per_tesla = coupling(&probe);
    if per_tesla == 0.0 {
        return Err(Error::InvalidParameter(format!("|{k}>↔|3> is not driven at this field")));
    }
    let mut tones = idle;
    tones[slot] = field(idle[slot], drive_ratio * zeeman / (2.0 * per_tesla)).with_phase(0.3);
    let c = coupling(&tones);
    let duration = PI / (2.0 * c);
    let rwa = super::rwa_coefficients(&tones, p, duration);

    let u_rot = super::propagate(&super::PulseSequence::new(vec![rwa.segment]));
    let history = [DetuningSpan { duration, d1: rwa.segment.d1, d2: rwa.segment.d2, d4: rwa.segment.d4 }];
    let u_rwa = frame_transform(&u_rot, duration, p, &history)?;
    let schedule = [LabSegment { duration, tones }];
    let u_lab = propagate_lab_frame(&schedule, p, lab_frame_max_step(&schedule, p))?;

    let mut population_mismatch = 0.0_f64;
    for a in 0..4 {
        for b in 0..4 {
            population_mismatch =
                population_mismatch.max((u_lab.get(a, b).norm_sqr() - u_rwa.get(a, b).norm_sqr()).abs());
        }
    }
    Ok(PiPulseCheck {
        transition: k,
        drive_ratio: 2.0 * c / zeeman,
        duration,
        population_mismatch,
        operator_mismatch: u_lab.max_abs_diff(&u_rwa),
        transferred: u_lab.get(k - 1, 2).norm_sqr(),
        regime_warnings: rwa.regime_warnings,
    })
}
