//! Circuits of named gates, run either as ideal matrices or as the pulses
//! that implement them, and the two-qubit Grover search.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{propagate, PulseSegment, PulseSequence};
use crate::error::{Error, Result};
use crate::grape::{standard_gate, GateName, GateTarget};
use crate::ion::{change_basis_density, mapping_operator, BasisDirection};
use crate::linalg::{BasisTag, DensityMatrix, StateVector};
use crate::tomography::{apply_noise, NoiseModel, NoisyChannel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunMode {
    #[serde(rename = "ideal")]
    Ideal,
    #[serde(rename = "pulsed")]
    Pulsed,
    #[serde(rename = "pulsed+noise")]
    PulsedNoise,
}

impl std::str::FromStr for RunMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ideal" => Ok(RunMode::Ideal),
            "pulsed" => Ok(RunMode::Pulsed),
            "pulsed+noise" => Ok(RunMode::PulsedNoise),
            other => Err(Error::InvalidParameter(format!("unknown mode `{other}`"))),
        }
    }
}

impl RunMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RunMode::Ideal => "ideal",
            RunMode::Pulsed => "pulsed",
            RunMode::PulsedNoise => "pulsed+noise",
        }
    }
}

/// Gate sequence acting on a spin-basis initial state.
#[derive(Clone, Debug)]
pub struct Circuit {
    pub ops: Vec<GateTarget>,
    pub initial_state: StateVector,
}

impl Circuit {
    /// Empty circuit starting from |↑↑>.
    pub fn new() -> Self {
        Self { ops: Vec::new(), initial_state: StateVector::basis_state(4, 0, BasisTag::Spin) }
    }

    pub fn with_initial_state(state: StateVector) -> Result<Self> {
        if state.basis() != BasisTag::Spin || state.dim() != 4 {
            return Err(Error::InvalidParameter("circuit initial state must be a 4-dim spin-basis vector".into()));
        }
        Ok(Self { ops: Vec::new(), initial_state: state })
    }

    pub fn push(mut self, name: GateName) -> Self {
        self.ops.push(standard_gate(name));
        self
    }

    pub fn gate_names(&self) -> Vec<GateName> {
        self.ops.iter().map(|g| g.name).collect()
    }
}

impl Default for Circuit {
    fn default() -> Self {
        Self::new()
    }
}

/// Pulses by gate name, all for the same ion parameters.
#[derive(Clone, Debug, Default)]
pub struct PulseLibrary {
    pulses: BTreeMap<String, PulseSequence>,
}

impl PulseLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: GateName, seq: PulseSequence) {
        self.pulses.insert(name.as_str().to_string(), seq);
    }

    pub fn get(&self, name: GateName) -> Option<&PulseSequence> {
        self.pulses.get(name.as_str())
    }

    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub mode: RunMode,
    /// Mixing angle of the ion the pulses were built for.
    pub theta0: f64,
    pub noise: NoiseModel,
    /// In pulsed+noise mode, start from |3> and prepare |↑↑> with a noisy
    /// π pulse on |3>↔|1> (the circuit must start from |↑↑>).
    pub include_preparation: bool,
    /// |c| of the preparation π pulse (rad/s).
    pub preparation_amplitude: f64,
}

impl RunOptions {
    pub fn ideal() -> Self {
        Self {
            mode: RunMode::Ideal,
            theta0: -PI / 2.0,
            noise: NoiseModel::noiseless(),
            include_preparation: false,
            preparation_amplitude: 2.0 * PI * 20e3,
        }
    }
}

/// Runs the circuit and returns the final spin-basis density matrix.
pub fn run_circuit(c: &Circuit, options: &RunOptions, library: Option<&PulseLibrary>) -> Result<DensityMatrix> {
    if options.mode == RunMode::Ideal {
        let mut rho = DensityMatrix::from_pure(&c.initial_state);
        for gate in &c.ops {
            rho = rho.evolve(&gate.matrix)?;
        }
        return Ok(rho);
    }
    let (channel, rho0) = pulsed_channel(c, options, library)?;
    change_basis_density(&channel.apply(&rho0)?, &mapping_operator(options.theta0), BasisDirection::NumberToSpin)
}

/// Final spin-basis state for every noise sample (one state outside
/// pulsed+noise mode). Their mean is [`run_circuit`].
pub fn run_circuit_samples(
    c: &Circuit,
    options: &RunOptions,
    library: Option<&PulseLibrary>,
) -> Result<Vec<DensityMatrix>> {
    if options.mode == RunMode::Ideal {
        return Ok(vec![run_circuit(c, options, None)?]);
    }
    let (channel, rho0) = pulsed_channel(c, options, library)?;
    let r = mapping_operator(options.theta0);
    channel
        .unitaries()
        .iter()
        .map(|u| change_basis_density(&rho0.evolve(u)?, &r, BasisDirection::NumberToSpin))
        .collect()
}

/// The whole pulse train as one channel, so a quasi-static shift is shared
/// by every gate of a shot, plus the number-basis state it acts on.
fn pulsed_channel(
    c: &Circuit,
    options: &RunOptions,
    library: Option<&PulseLibrary>,
) -> Result<(NoisyChannel, DensityMatrix)> {
    let mut train = PulseSequence::empty();
    let noisy = options.mode == RunMode::PulsedNoise;
    let prepare = noisy && options.include_preparation;
    let rho0 = if prepare {
        train.push(PulseSegment::transition_pulse(1, PI, 0.0, options.preparation_amplitude)?);
        let up_up = StateVector::basis_state(4, 0, BasisTag::Spin);
        if c.initial_state.overlap(&up_up).norm() < 1.0 - 1e-12 {
            return Err(Error::InvalidParameter("state preparation only produces |↑↑>".into()));
        }
        DensityMatrix::basis_state(4, 2, BasisTag::Number)
    } else {
        let rho = DensityMatrix::from_pure(&c.initial_state);
        change_basis_density(&rho, &mapping_operator(options.theta0), BasisDirection::SpinToNumber)?
    };
    for g in &c.ops {
        let seq = library.and_then(|l| l.get(g.name)).ok_or_else(|| Error::MissingPulse(g.name.to_string()))?;
        train = train.then(seq);
    }
    let channel = if noisy { apply_noise(&train, &options.noise)? } else { NoisyChannel::unitary(propagate(&train)) };
    Ok((channel, rho0))
}

/// `[H1, H2, Oracle(marked), H1, H2, C00, H1, H2]` on |↑↑>.
pub fn grover_circuit(marked: usize) -> Result<Circuit> {
    if marked > 3 {
        return Err(Error::InvalidParameter(format!("marked index {marked} outside 0..=3")));
    }
    use GateName::*;
    Ok([Hadamard1, Hadamard2, Oracle(marked as u8), Hadamard1, Hadamard2, C00, Hadamard1, Hadamard2]
        .into_iter()
        .fold(Circuit::new(), Circuit::push))
}

/// Population of the marked spin-basis state.
pub fn success_rate(rho: &DensityMatrix, marked: usize) -> Result<f64> {
    if rho.basis() != BasisTag::Spin {
        return Err(Error::BasisMismatch { left: rho.basis(), right: BasisTag::Spin });
    }
    if marked >= rho.dim() {
        return Err(Error::InvalidParameter(format!("marked index {marked} outside the state space")));
    }
    Ok(rho.population(marked))
}

/// Grover success rate for every marked state, evaluated concurrently.
pub fn grover_all(options: &RunOptions, library: Option<&PulseLibrary>) -> Result<Vec<(DensityMatrix, f64)>> {
    (0..4)
        .into_par_iter()
        .map(|marked| {
            let rho = run_circuit(&grover_circuit(marked)?, options, library)?;
            let p = success_rate(&rho, marked)?;
            Ok((rho, p))
        })
        .collect()
}
