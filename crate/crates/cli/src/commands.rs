use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::path::PathBuf;
use std::time::Instant;

use hyperqubit::algorithms::{
    grover_circuit, run_circuit, run_circuit_samples, success_rate, Circuit, PulseLibrary, RunMode, RunOptions,
};
use hyperqubit::control::{propagate, resonant_pi_check};
use hyperqubit::grape::{standard_gate, synthesize, GateName};
use hyperqubit::ion::{change_basis_density, mapping_operator, mixing_angle, BasisDirection};
use hyperqubit::linalg::{phase_aligned_distance, process_fidelity, state_fidelity, BasisTag, StateVector, C64};
use hyperqubit::multi_ion::{
    composite_zz, composite_zz_target, large_field_selectivity, motion_disentanglement_check, ms_composite_xx,
    TwoIonSystem,
};
use hyperqubit::tomography::{apply_noise, pauli_label, ChiMatrix, NoiseModel, Tomographer, TomographyConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{RunConfig, SCHEMA_VERSION};
use crate::error::CliError;
use crate::output::{matrix_json, matrix_rows, MatrixJson, Sink};
use crate::pulses::{self, PulseFile};

pub struct Context {
    pub cfg: RunConfig,
    pub mode: RunMode,
    pub shots: u64,
    pub sink: Sink,
}

impl Context {
    fn theta0(&self) -> f64 {
        mixing_angle(&self.cfg.ion).1
    }

    fn options(&self, mode: RunMode, noise: NoiseModel) -> RunOptions {
        RunOptions { mode, theta0: self.theta0(), noise, ..RunOptions::ideal() }
    }

    fn library(&self, gates: &[GateName]) -> Result<Option<PulseLibrary>, CliError> {
        match self.mode {
            RunMode::Ideal => Ok(None),
            _ => pulses::load(&self.cfg, gates).map(Some),
        }
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.cfg.seed)
    }
}

pub fn parse_gates(spec: &str) -> Result<Vec<GateName>, CliError> {
    if spec.eq_ignore_ascii_case("all") {
        let mut gates = GateName::ALL.to_vec();
        gates.extend((0..4).map(GateName::Oracle));
        return Ok(gates);
    }
    spec.split(',').map(|s| s.trim().parse::<GateName>().map_err(CliError::from)).collect()
}

/// Two-character product state over `{u, d, +, -, i}` (qubit 1 first).
pub fn parse_input(spec: &str) -> Result<StateVector, CliError> {
    let h = FRAC_1_SQRT_2;
    let single = |c: char| -> Result<[C64; 2], CliError> {
        Ok(match c {
            'u' => [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            'd' => [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            '+' => [C64::new(h, 0.0), C64::new(h, 0.0)],
            '-' => [C64::new(h, 0.0), C64::new(-h, 0.0)],
            'i' => [C64::new(h, 0.0), C64::new(0.0, h)],
            other => return Err(CliError::Config(format!("unknown single-qubit state `{other}` (use u, d, +, -, i)"))),
        })
    };
    let chars: Vec<char> = spec.chars().collect();
    if chars.len() != 2 {
        return Err(CliError::Config(format!("input `{spec}` must name two single-qubit states")));
    }
    let (a, b) = (single(chars[0])?, single(chars[1])?);
    let amps = vec![a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]];
    Ok(StateVector::new(amps, BasisTag::Spin)?)
}

#[derive(Serialize)]
struct SynthesisReport {
    schema_version: u32,
    gate: String,
    config_hash: String,
    fidelity: f64,
    iterations: usize,
    converged: bool,
    pulse_file: PathBuf,
}

pub fn synthesize_cmd(ctx: &Context, gates: &[GateName]) -> Result<(), CliError> {
    let hash = ctx.cfg.pulse_hash();
    let mut failed = Vec::new();
    for &gate in gates {
        let start = Instant::now();
        let out = synthesize(&standard_gate(gate), &ctx.cfg.grape, &ctx.cfg.ion)?;
        let wall = start.elapsed().as_secs_f64();
        let rel = pulses::relative_path(gate, &hash);
        let file = PulseFile::new(&ctx.cfg, gate, out.fidelity, out.iterations, out.converged, out.sequence);
        ctx.sink.json(rel.to_str().expect("utf-8 path"), &file)?;
        let report = SynthesisReport {
            schema_version: SCHEMA_VERSION,
            gate: gate.to_string(),
            config_hash: hash.clone(),
            fidelity: out.fidelity,
            iterations: out.iterations,
            converged: out.converged,
            pulse_file: rel,
        };
        ctx.sink.json(&format!("synthesize-{gate}.json"), &report)?;
        println!("{gate}: fidelity {:.6}, {} iterations, {wall:.3} s", out.fidelity, out.iterations);
        if !out.converged {
            failed.push(gate.to_string());
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::NotConverged(format!("{} below target fidelity (best pulses saved)", failed.join(", "))))
    }
}

#[derive(Serialize)]
struct QstReport {
    schema_version: u32,
    gate: String,
    mode: RunMode,
    shots: u64,
    input: String,
    /// Reconstruction against the ideal gate output.
    fidelity: f64,
    /// Simulated (pre-tomography) state against the ideal gate output.
    state_fidelity: f64,
    rho_spin: MatrixJson,
    rho_number: MatrixJson,
    ideal_spin: MatrixJson,
}

pub fn qst_cmd(ctx: &Context, gate: GateName, input: &str, noisy_tomography: bool) -> Result<(), CliError> {
    let circuit = Circuit::with_initial_state(parse_input(input)?)?.push(gate);
    let lib = ctx.library(&[gate])?;
    let actual = run_circuit(&circuit, &ctx.options(ctx.mode, ctx.cfg.noise.clone()), lib.as_ref())?;
    let ideal = run_circuit(&circuit, &RunOptions::ideal(), None)?;

    let theta0 = ctx.theta0();
    let r = mapping_operator(theta0);
    let tomo = Tomographer::new(
        TomographyConfig {
            shots: ctx.shots,
            noisy_transfer_pulses: noisy_tomography.then(|| ctx.cfg.noise.clone()),
            ..TomographyConfig::default()
        },
        theta0,
    )?;
    let number = change_basis_density(&actual, &r, BasisDirection::SpinToNumber)?;
    let estimate = tomo.qst(&number, &mut ctx.rng())?;
    let estimate_spin = change_basis_density(&estimate, &r, BasisDirection::NumberToSpin)?;

    let report = QstReport {
        schema_version: SCHEMA_VERSION,
        gate: gate.to_string(),
        mode: ctx.mode,
        shots: ctx.shots,
        input: input.to_string(),
        fidelity: state_fidelity(&ideal, &estimate_spin)?,
        state_fidelity: state_fidelity(&ideal, &actual)?,
        rho_spin: matrix_json(estimate_spin.operator()),
        rho_number: matrix_json(estimate.operator()),
        ideal_spin: matrix_json(ideal.operator()),
    };
    let stem = format!("qst-{gate}-{}", ctx.mode.as_str());
    ctx.sink.json(&format!("{stem}.json"), &report)?;
    let mut rows = matrix_rows("spin", estimate_spin.operator());
    rows.extend(matrix_rows("number", estimate.operator()));
    ctx.sink.csv(&format!("{stem}.csv"), &rows)?;
    println!("{gate} QST ({}): fidelity {:.6}", ctx.mode.as_str(), report.fidelity);
    Ok(())
}

#[derive(Serialize)]
struct QptReport {
    schema_version: u32,
    gate: String,
    mode: RunMode,
    shots: u64,
    operator_basis: Vec<String>,
    process_fidelity: f64,
    chi: MatrixJson,
    chi_ideal: MatrixJson,
}

#[derive(Serialize)]
struct ChiRow {
    m: String,
    n: String,
    re: f64,
    im: f64,
    abs: f64,
    ideal_re: f64,
    ideal_im: f64,
}

pub fn qpt_cmd(ctx: &Context, gate: GateName, noisy_tomography: bool) -> Result<(), CliError> {
    let theta0 = ctx.theta0();
    let r = mapping_operator(theta0);
    let u_spin = standard_gate(gate).matrix;
    let channel = match ctx.mode {
        RunMode::Ideal => hyperqubit::tomography::NoisyChannel::unitary(u_spin.conjugate_by(&r.adjoint())),
        mode => {
            let lib = ctx.library(&[gate])?.expect("pulsed modes load pulses");
            let seq = lib.get(gate).expect("loaded above");
            if mode == RunMode::PulsedNoise {
                apply_noise(seq, &ctx.cfg.noise)?
            } else {
                hyperqubit::tomography::NoisyChannel::unitary(propagate(seq))
            }
        }
    };
    let tomo = Tomographer::new(
        TomographyConfig {
            shots: ctx.shots,
            noisy_transfer_pulses: noisy_tomography.then(|| ctx.cfg.noise.clone()),
            ..TomographyConfig::default()
        },
        theta0,
    )?;
    let chi = tomo.qpt(|rho| Ok(channel.apply_operator(rho.operator())), &mut ctx.rng())?;
    let ideal = ChiMatrix::from_unitary(&u_spin)?;

    let report = QptReport {
        schema_version: SCHEMA_VERSION,
        gate: gate.to_string(),
        mode: ctx.mode,
        shots: ctx.shots,
        operator_basis: (0..16).map(pauli_label).collect(),
        process_fidelity: process_fidelity(&chi, &ideal)?,
        chi: matrix_json(&chi.normalized()),
        chi_ideal: matrix_json(&ideal.normalized()),
    };
    let stem = format!("qpt-{gate}-{}", ctx.mode.as_str());
    ctx.sink.json(&format!("{stem}.json"), &report)?;
    let (a, b) = (chi.normalized(), ideal.normalized());
    let rows: Vec<ChiRow> = (0..256)
        .map(|i| {
            let (m, n) = (i / 16, i % 16);
            ChiRow {
                m: pauli_label(m),
                n: pauli_label(n),
                re: a.get(m, n).re,
                im: a.get(m, n).im,
                abs: a.get(m, n).norm(),
                ideal_re: b.get(m, n).re,
                ideal_im: b.get(m, n).im,
            }
        })
        .collect();
    ctx.sink.csv(&format!("{stem}.csv"), &rows)?;
    println!("{gate} QPT ({}): process fidelity {:.6}", ctx.mode.as_str(), report.process_fidelity);
    Ok(())
}

#[derive(Serialize)]
struct GroverEntry {
    marked: usize,
    label: &'static str,
    success: f64,
    /// 95% interval of the mean over noise samples (pulsed+noise only).
    ci95: Option<[f64; 2]>,
    rho_spin: MatrixJson,
}

#[derive(Serialize)]
struct GroverReport {
    schema_version: u32,
    mode: RunMode,
    mean_success: f64,
    runs: Vec<GroverEntry>,
}

#[derive(Serialize)]
struct GroverRow {
    marked: usize,
    label: &'static str,
    success: f64,
    ci_low: Option<f64>,
    ci_high: Option<f64>,
}

const LABELS: [&str; 4] = ["uu", "ud", "du", "dd"];

pub fn grover_cmd(ctx: &Context) -> Result<(), CliError> {
    use GateName::*;
    let gates = [Hadamard1, Hadamard2, C00, Oracle(0), Oracle(1), Oracle(2), Oracle(3)];
    let lib = ctx.library(&gates)?;
    let mut options = ctx.options(ctx.mode, ctx.cfg.noise.clone());
    options.include_preparation = ctx.mode == RunMode::PulsedNoise;

    let mut runs = Vec::new();
    for (marked, label) in LABELS.into_iter().enumerate() {
        let circuit = grover_circuit(marked)?;
        let samples = run_circuit_samples(&circuit, &options, lib.as_ref())?;
        let rates: Vec<f64> = samples.iter().map(|s| success_rate(s, marked)).collect::<Result<_, _>>()?;
        let n = rates.len() as f64;
        let mean = rates.iter().sum::<f64>() / n;
        let ci95 = (ctx.mode == RunMode::PulsedNoise && rates.len() > 1).then(|| {
            let var = rates.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let half = 1.96 * (var / n).sqrt();
            [mean - half, mean + half]
        });
        let rho = run_circuit(&circuit, &options, lib.as_ref())?;
        runs.push(GroverEntry { marked, label, success: mean, ci95, rho_spin: matrix_json(rho.operator()) });
    }
    let mean_success = runs.iter().map(|r| r.success).sum::<f64>() / 4.0;
    let stem = format!("grover-{}", ctx.mode.as_str());
    let rows: Vec<GroverRow> = runs
        .iter()
        .map(|r| GroverRow {
            marked: r.marked,
            label: r.label,
            success: r.success,
            ci_low: r.ci95.map(|c| c[0]),
            ci_high: r.ci95.map(|c| c[1]),
        })
        .collect();
    for r in &runs {
        println!("marked |{}>: success {:.6}", r.label, r.success);
    }
    ctx.sink.csv(&format!("{stem}.csv"), &rows)?;
    ctx.sink.json(
        &format!("{stem}.json"),
        &GroverReport { schema_version: SCHEMA_VERSION, mode: ctx.mode, mean_success, runs },
    )?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Check {
    CompositeZz,
    Disentanglement,
    MsComposite,
    Selectivity,
}

#[derive(Serialize)]
struct MsPoint {
    b0_gauss: f64,
    theta0: f64,
    theta_prime: f64,
    deviation: f64,
    residual: f64,
}

pub fn multiion_cmd(ctx: &Context, check: Check, b0_gauss: &[f64], tau: f64) -> Result<(), CliError> {
    let sys = &ctx.cfg.multiion;
    let name = match check {
        Check::CompositeZz => "composite-zz",
        Check::Disentanglement => "disentanglement",
        Check::MsComposite => "ms-composite",
        Check::Selectivity => "selectivity",
    };
    let file = format!("multiion-{name}.json");
    match check {
        Check::CompositeZz => {
            let residual = phase_aligned_distance(&composite_zz(sys), &composite_zz_target(sys));
            let report = serde_json::json!({
                "schema_version": SCHEMA_VERSION,
                "check": name,
                "coupling_strengths": sys.coupling_strengths(),
                "gate_time": sys.gate_time(),
                "residual": residual,
            });
            ctx.sink.json(&file, &report)?;
            println!("composite ZZ residual {residual:.3e}");
        }
        Check::Disentanglement => {
            let report = motion_disentanglement_check(sys)?;
            ctx.sink.json(
                &file,
                &serde_json::json!({ "schema_version": SCHEMA_VERSION, "check": name, "report": report }),
            )?;
            println!(
                "spin purity {:.12}, residual {:.3e}, cutoff change {:.3e}",
                report.spin_purity, report.residual, report.cutoff_change
            );
            if !report.converged {
                return Err(CliError::NotConverged(format!(
                    "Fock cutoff {} changes the spin map by {:.3e}",
                    sys.fock_cutoff, report.cutoff_change
                )));
            }
        }
        Check::MsComposite => {
            let points: Vec<MsPoint> = b0_gauss
                .iter()
                .map(|&g| {
                    let ion = sys.ions[0].with_b_field(g * 1e-4);
                    let swept = TwoIonSystem { ions: [ion; 2], ..sys.clone() };
                    let out = ms_composite_xx(&swept, tau)?;
                    Ok(MsPoint {
                        b0_gauss: g,
                        theta0: out.theta0[0],
                        theta_prime: out.theta_prime[0],
                        deviation: (out.theta0[0] + PI / 2.0).abs(),
                        residual: out.residual,
                    })
                })
                .collect::<Result<_, CliError>>()?;
            let monotone = points.windows(2).all(|w| w[1].residual > w[0].residual);
            for p in &points {
                println!("B0 = {} G: residual {:.6e}", p.b0_gauss, p.residual);
            }
            ctx.sink.csv("multiion-ms-composite.csv", &points)?;
            ctx.sink.json(
                &file,
                &serde_json::json!({ "schema_version": SCHEMA_VERSION, "check": name, "tau": tau, "monotone": monotone, "points": points }),
            )?;
        }
        Check::Selectivity => {
            let report = large_field_selectivity(sys)?;
            ctx.sink.json(
                &file,
                &serde_json::json!({ "schema_version": SCHEMA_VERSION, "check": name, "report": report }),
            )?;
            println!("relative error {:.4e} (|γ1/γ2| = {:.4e})", report.relative_error, report.gamma_ratio);
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct NoisePoint {
    t2_zeeman: f64,
    t2_clock: f64,
    fidelity: f64,
}

pub fn noise_sweep_cmd(ctx: &Context, gate: GateName, t2: &[f64], t2_clock: f64) -> Result<(), CliError> {
    let lib = pulses::load(&ctx.cfg, &[gate])?;
    let circuit = Circuit::new().push(gate);
    let ideal = run_circuit(&circuit, &RunOptions::ideal(), None)?;
    let points: Vec<NoisePoint> = t2
        .iter()
        .map(|&t| {
            let noise = NoiseModel::from_coherence_times(t, t2_clock, t)?
                .with_samples(ctx.cfg.noise.n_samples, ctx.cfg.noise.rng_seed);
            let mut options = ctx.options(RunMode::PulsedNoise, noise);
            options.include_preparation = true;
            let rho = run_circuit(&circuit, &options, Some(&lib))?;
            Ok(NoisePoint { t2_zeeman: t, t2_clock, fidelity: state_fidelity(&ideal, &rho)? })
        })
        .collect::<Result<_, CliError>>()?;
    for p in &points {
        println!("T2* = {:.3e} s: fidelity {:.6}", p.t2_zeeman, p.fidelity);
    }
    let stem = format!("noise-sweep-{gate}");
    ctx.sink.csv(&format!("{stem}.csv"), &points)?;
    ctx.sink.json(
        &format!("{stem}.json"),
        &serde_json::json!({ "schema_version": SCHEMA_VERSION, "gate": gate.to_string(), "points": points }),
    )?;
    Ok(())
}

pub fn rwa_check_cmd(ctx: &Context, hyperfine_mhz: f64, ratio: f64, transition: usize) -> Result<(), CliError> {
    if !(hyperfine_mhz > 0.0) {
        return Err(CliError::Config("hyperfine frequency must be > 0".into()));
    }
    let p = ctx.cfg.ion.scaled_to_hyperfine(2.0 * PI * hyperfine_mhz * 1e6);
    let check = resonant_pi_check(&p, transition, ratio)?;
    println!(
        "|{transition}>↔|3>: population mismatch {:.3e}, transferred {:.6}",
        check.population_mismatch, check.transferred
    );
    for w in &check.regime_warnings {
        eprintln!("warning: {w}");
    }
    ctx.sink.json(
        &format!("rwa-check-{transition}.json"),
        &serde_json::json!({ "schema_version": SCHEMA_VERSION, "hyperfine_mhz": hyperfine_mhz, "check": check }),
    )?;
    Ok(())
}
