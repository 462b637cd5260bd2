//! Stochastic Pauli (trajectory) noise and shot-based noisy execution.
//!
//! Every gate is applied ideally and then followed by a depolarizing step for
//! its class:
//!
//! * MS (and the standard two-qubit gates): two-qubit depolarizing with `p_ms`
//! * addressed rotation, `H`, `X`: single-qubit depolarizing with `p_1q`
//! * global rotation: independent single-qubit depolarizing with
//!   `p_1q_global` on every qubit it touches
//! * z rotation and multi-controlled Z: noiseless
//!
//! After the last gate one outcome is drawn and each bit is flipped with
//! probability `readout_flip`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{pauli_matrix, GateKind, GateSpec, Pauli};
use crate::grover::Circuit;
use crate::state::{cumulative, draw_from_cdf, StateVector};

/// Fidelity of a single MS gate.
pub const MS_FIDELITY: f64 = 0.8;
pub const DEFAULT_P_1Q: f64 = 0.02;
pub const DEFAULT_P_1Q_GLOBAL: f64 = 0.005;
/// One minus the 97 % detection efficiency.
pub const DEFAULT_READOUT_FLIP: f64 = 0.03;

/// Per-gate-class error probabilities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    pub p_ms: f64,
    pub p_1q: f64,
    pub p_1q_global: f64,
    pub readout_flip: f64,
}

impl NoiseModel {
    pub fn new(p_ms: f64, p_1q: f64, p_1q_global: f64, readout_flip: f64) -> Result<Self> {
        let m = Self {
            p_ms,
            p_1q,
            p_1q_global,
            readout_flip,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn ideal() -> Self {
        Self {
            p_ms: 0.0,
            p_1q: 0.0,
            p_1q_global: 0.0,
            readout_flip: 0.0,
        }
    }

    /// `p_ms` calibrated to [`MS_FIDELITY`], plus the default single-qubit
    /// and readout budgets.
    pub fn calibrated() -> Self {
        Self {
            p_ms: calibrate_ms_fidelity(MS_FIDELITY).expect("reachable fidelity"),
            p_1q: DEFAULT_P_1Q,
            p_1q_global: DEFAULT_P_1Q_GLOBAL,
            readout_flip: DEFAULT_READOUT_FLIP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("p_ms", self.p_ms),
            ("p_1q", self.p_1q),
            ("p_1q_global", self.p_1q_global),
            ("readout_flip", self.readout_flip),
        ] {
            check_probability(name, p)?;
        }
        if self.readout_flip > 0.5 {
            return Err(Error::Argument(format!(
                "readout_flip {} exceeds 0.5",
                self.readout_flip
            )));
        }
        Ok(())
    }

    pub fn is_ideal(&self) -> bool {
        *self == Self::ideal()
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::calibrated()
    }
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Argument(format!(
            "{name} = {p} is not a probability"
        )));
    }
    Ok(())
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Mixes a stream label into a base seed.
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    splitmix64(seed ^ splitmix64(label))
}

/// The PRNG for trial `index` under `seed`: ChaCha8 keyed by `seed`, one
/// ChaCha stream per trial.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// With probability `p` applies a uniformly drawn non-identity Pauli string
/// to `qubits` (one or two of them) and returns it; otherwise returns `None`.
pub fn depolarize<R: Rng + ?Sized>(
    state: &mut StateVector,
    qubits: &[usize],
    p: f64,
    rng: &mut R,
) -> Result<Option<Vec<Pauli>>> {
    check_probability("depolarizing probability", p)?;
    match qubits {
        [a] if *a < state.n_qubits() => {}
        [a, b] if a != b && *a < state.n_qubits() && *b < state.n_qubits() => {}
        _ => {
            return Err(Error::Index(format!(
                "depolarize needs 1 or 2 distinct valid qubits, got {qubits:?}"
            )))
        }
    }
    if rng.gen::<f64>() >= p {
        return Ok(None);
    }
    let n = qubits.len() as u32;
    let k = rng.gen_range(1..4usize.pow(n));
    let paulis: Vec<Pauli> = (0..n)
        .rev()
        .map(|digit| Pauli::ALL[(k >> (2 * digit)) & 3])
        .collect();
    for (&q, &pauli) in qubits.iter().zip(&paulis) {
        if pauli != Pauli::I {
            state.apply_single(q, &pauli_matrix(pauli))?;
        }
    }
    Ok(Some(paulis))
}

/// Two-qubit depolarizing probability whose trajectory average gives the MS
/// Bell output the requested fidelity.
///
/// Of the 15 non-identity Pauli strings exactly three (`XX`, `YY`, `ZZ`) fix
/// `(|00⟩ − i|11⟩)/√2` up to phase, so `F = 1 − (4/5)·p`.
pub fn calibrate_ms_fidelity(target_fidelity: f64) -> Result<f64> {
    if !(target_fidelity > 0.25 && target_fidelity <= 1.0) {
        return Err(Error::Argument(format!(
            "MS fidelity {target_fidelity} is not reachable (need 1/4 < F <= 1)"
        )));
    }
    Ok((1.0 - target_fidelity) * 1.25)
}

/// Flips each of the `n_bits` bits of `outcome` independently with
/// probability `readout_flip`.
pub fn apply_readout_error<R: Rng + ?Sized>(
    outcome: usize,
    n_bits: usize,
    readout_flip: f64,
    rng: &mut R,
) -> Result<usize> {
    if !(0.0..=0.5).contains(&readout_flip) {
        return Err(Error::Argument(format!(
            "readout_flip {readout_flip} outside [0, 0.5]"
        )));
    }
    Ok((0..n_bits).fold(outcome, |acc, bit| {
        if rng.gen::<f64>() < readout_flip {
            acc ^ (1 << bit)
        } else {
            acc
        }
    }))
}

#[derive(Clone, Copy, Debug)]
enum GateNoise {
    None,
    EachQubit(f64),
    Pair(f64),
}

fn gate_noise(gate: &GateSpec, model: &NoiseModel) -> GateNoise {
    match gate.kind {
        GateKind::Ms | GateKind::Cnot | GateKind::Cz => GateNoise::Pair(model.p_ms),
        GateKind::Rotation { .. } | GateKind::Hadamard | GateKind::PauliX => {
            GateNoise::EachQubit(model.p_1q)
        }
        GateKind::GlobalRotation { .. } => GateNoise::EachQubit(model.p_1q_global),
        GateKind::ZRotation { .. } | GateKind::MultiControlledZ { .. } => GateNoise::None,
    }
}

/// Runs `shots` independent noisy trajectories from `|0…0⟩` and returns
/// outcome counts by basis index. Shot `i` draws from [`trial_rng`]`(seed, i)`,
/// so the counts depend only on the arguments, not on thread scheduling.
pub fn run_noisy(circuit: &Circuit, model: &NoiseModel, shots: u64, seed: u64) -> Result<Vec<u64>> {
    model.validate()?;
    let prepared = circuit.prepare()?;
    let noise: Vec<GateNoise> = prepared
        .iter()
        .map(|g| gate_noise(g.spec(), model))
        .collect();
    let n = circuit.n_qubits;

    let outcomes: Result<Vec<usize>> = (0..shots)
        .into_par_iter()
        .map(|shot| {
            let mut rng = trial_rng(seed, shot);
            let mut state = StateVector::init_zero(n)?;
            for (gate, noise) in prepared.iter().zip(&noise) {
                gate.apply(&mut state)?;
                let targets = &gate.spec().targets;
                match *noise {
                    GateNoise::None => {}
                    GateNoise::EachQubit(p) => {
                        for &q in targets {
                            depolarize(&mut state, &[q], p, &mut rng)?;
                        }
                    }
                    GateNoise::Pair(p) => {
                        depolarize(&mut state, targets, p, &mut rng)?;
                    }
                }
            }
            let cdf = cumulative(&state.probabilities());
            let outcome = draw_from_cdf(&cdf, &mut rng);
            apply_readout_error(outcome, n, model.readout_flip, &mut rng)
        })
        .collect();

    let mut counts = vec![0u64; 1 << n];
    for o in outcomes? {
        counts[o] += 1;
    }
    Ok(counts)
}
