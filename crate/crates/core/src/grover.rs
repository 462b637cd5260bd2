//! Grover circuit builders and closed-form success formulas.
//!
//! Three two-ion circuits are provided: the experimental ancilla-free form
//! built from the native gate set, the same circuit without its final MS gate
//! (a diagnostic of the oracle), and the textbook ancilla form generalised to
//! `n` data qubits.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::compile;
use crate::error::{Error, Result};
use crate::gates::{GateSpec, PreparedGate};
use crate::state::{basis_label, parse_basis_label, StateVector, DEFAULT_MAX_QUBITS};

/// Phase of the first global `π/2` rotation.
pub const PREPARATION_PHASE: f64 = 0.0;

/// Phase of the amplification rotation, `-π/2` relative to the preparation.
pub const AMPLIFICATION_PHASE: f64 = PREPARATION_PHASE - FRAC_PI_2;

/// The marked search element as a bitstring, qubit 0 first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Marking {
    bits: Vec<bool>,
}

impl Marking {
    pub fn from_index(index: usize, n_bits: usize) -> Result<Self> {
        if n_bits == 0 || n_bits >= usize::BITS as usize || index >> n_bits != 0 {
            return Err(Error::Argument(format!(
                "index {index} does not fit in {n_bits} bits"
            )));
        }
        Ok(Self {
            bits: (0..n_bits)
                .map(|q| (index >> (n_bits - 1 - q)) & 1 == 1)
                .collect(),
        })
    }

    /// Every marking of `n_bits`, in basis-index order.
    pub fn all(n_bits: usize) -> Vec<Self> {
        (0..1usize << n_bits)
            .map(|i| Self::from_index(i, n_bits).expect("index in range"))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Basis index under the crate's bit order.
    pub fn index(&self) -> usize {
        self.bits
            .iter()
            .fold(0, |acc, &b| (acc << 1) | usize::from(b))
    }
}

impl FromStr for Marking {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let index = parse_basis_label(s)?;
        Self::from_index(index, s.len())
    }
}

impl fmt::Display for Marking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&basis_label(self.index(), self.len()))
    }
}

impl Serialize for Marking {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Marking {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Oracle settings: the marked element and which qubits are swapped around
/// the `|1…1⟩` phase flip.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleSpec {
    marked: Marking,
    flip_mask: Vec<bool>,
}

impl OracleSpec {
    pub fn new(marked: Marking) -> Self {
        let flip_mask = marked.bits().iter().map(|b| !b).collect();
        Self { marked, flip_mask }
    }

    pub fn marked(&self) -> &Marking {
        &self.marked
    }

    /// Flag `i` is set iff bit `i` of the marking is 0.
    pub fn flip_mask(&self) -> &[bool] {
        &self.flip_mask
    }

    fn flipped_qubits(&self) -> Vec<usize> {
        (0..self.flip_mask.len())
            .filter(|&q| self.flip_mask[q])
            .collect()
    }
}

/// An ordered gate list on a fixed register.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub n_qubits: usize,
    pub gates: Vec<GateSpec>,
    pub label: String,
}

impl Circuit {
    pub fn new(n_qubits: usize, label: impl Into<String>) -> Self {
        Self {
            n_qubits,
            gates: Vec::new(),
            label: label.into(),
        }
    }

    /// Appends a gate after checking it against the register.
    pub fn push(&mut self, gate: GateSpec) -> Result<()> {
        gate.validate(self.n_qubits)?;
        self.gates.push(gate);
        Ok(())
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = GateSpec>) -> Result<()> {
        gates.into_iter().try_for_each(|g| self.push(g))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 || self.n_qubits > DEFAULT_MAX_QUBITS {
            return Err(Error::Capacity {
                requested: self.n_qubits,
                max: DEFAULT_MAX_QUBITS,
            });
        }
        self.gates
            .iter()
            .try_for_each(|g| g.validate(self.n_qubits))
    }

    pub fn prepare(&self) -> Result<Vec<PreparedGate>> {
        self.validate()?;
        self.gates
            .iter()
            .map(|g| PreparedGate::new(g, self.n_qubits))
            .collect()
    }
}

/// Integer closest to `π / (4·asin(N^{-1/2})) − 1/2`, ties rounded away from
/// zero.
pub fn iteration_count(search_size: u64) -> Result<u64> {
    if search_size < 2 {
        return Err(Error::Argument(format!(
            "search space of size {search_size} is too small"
        )));
    }
    let theta = (1.0 / (search_size as f64).sqrt()).asin();
    let x = PI / (4.0 * theta) - 0.5;
    // asin(1/2) carries rounding error; snap values within 1e-9 of a half-integer
    // or integer so that N=2 (0.5) and N=4 (1.0) land on the decided side.
    let snapped = (x * 2.0).round() / 2.0;
    let x = if (x - snapped).abs() < 1e-9 {
        snapped
    } else {
        x
    };
    Ok(x.round() as u64)
}

/// `sin²((2k+1)·asin(N^{-1/2}))`, the marked-state probability after `k`
/// ideal iterations.
pub fn ideal_success(search_size: u64, iterations: u64) -> f64 {
    let theta = (1.0 / (search_size as f64).sqrt()).asin();
    ((2 * iterations + 1) as f64 * theta).sin().powi(2)
}

fn require_two_bits(marked: &Marking) -> Result<()> {
    if marked.len() != 2 {
        return Err(Error::Argument(format!(
            "the two-ion circuits need a 2-bit marking, got `{marked}`"
        )));
    }
    Ok(())
}

fn swap_rotations(oracle: &OracleSpec, phi: f64) -> Option<GateSpec> {
    let flipped = oracle.flipped_qubits();
    match flipped.len() {
        0 => None,
        1 => Some(GateSpec::rotation(flipped[0], PI, phi)),
        _ => Some(GateSpec::global_rotation(flipped, PI, phi)),
    }
}

/// Phase oracle for a two-bit marking: π-rotations on the qubits whose marked
/// bit is 0, the MS-based controlled-Z, and the inverse π-rotations.
pub fn build_oracle(marked: &Marking) -> Result<Vec<GateSpec>> {
    require_two_bits(marked)?;
    let oracle = OracleSpec::new(marked.clone());
    let mut gates = Vec::new();
    gates.extend(swap_rotations(&oracle, 0.0));
    gates.extend(compile::cz_from_ms_on(0, 1));
    gates.extend(swap_rotations(&oracle, PI));
    Ok(gates)
}

/// The ancilla-free two-ion search circuit.
pub fn build_experimental_circuit(marked: &Marking) -> Result<Circuit> {
    let mut c = build_diagnostic_body(marked)?;
    c.push(GateSpec::ms(0, 1))?;
    c.label = format!("experimental/{marked}");
    Ok(c)
}

/// The experimental circuit without its final MS gate.
pub fn build_diagnostic_circuit(marked: &Marking) -> Result<Circuit> {
    let mut c = build_diagnostic_body(marked)?;
    c.label = format!("diagnostic/{marked}");
    Ok(c)
}

fn build_diagnostic_body(marked: &Marking) -> Result<Circuit> {
    require_two_bits(marked)?;
    let mut c = Circuit::new(2, "");
    c.push(GateSpec::global_rotation(
        0..2,
        FRAC_PI_2,
        PREPARATION_PHASE,
    ))?;
    c.extend(build_oracle(marked)?)?;
    c.push(GateSpec::global_rotation(
        0..2,
        FRAC_PI_2,
        AMPLIFICATION_PHASE,
    ))?;
    Ok(c)
}

/// Textbook search on `n_data` data qubits plus one ancilla (the last qubit),
/// running `iteration_count(2^n_data)` iterations.
pub fn build_textbook_circuit(n_data: usize, marked: &Marking) -> Result<Circuit> {
    if n_data < 2 || n_data + 1 > DEFAULT_MAX_QUBITS {
        return Err(Error::Capacity {
            requested: n_data + 1,
            max: DEFAULT_MAX_QUBITS,
        });
    }
    let k = iteration_count(1u64 << n_data)?;
    build_textbook_circuit_with_iterations(n_data, marked, k)
}

/// Textbook search with an explicit iteration count.
pub fn build_textbook_circuit_with_iterations(
    n_data: usize,
    marked: &Marking,
    iterations: u64,
) -> Result<Circuit> {
    if n_data < 2 || n_data + 1 > DEFAULT_MAX_QUBITS {
        return Err(Error::Capacity {
            requested: n_data + 1,
            max: DEFAULT_MAX_QUBITS,
        });
    }
    if marked.len() != n_data {
        return Err(Error::Argument(format!(
            "marking `{marked}` does not have {n_data} bits"
        )));
    }
    let ancilla = n_data;
    let data: Vec<usize> = (0..n_data).collect();
    let zeros: Vec<usize> = data
        .iter()
        .copied()
        .filter(|&q| !marked.bits()[q])
        .collect();
    let all: Vec<usize> = (0..=n_data).collect();

    let mut c = Circuit::new(n_data + 1, format!("textbook/{marked}"));
    // ancilla in |−⟩, data in the uniform superposition
    c.push(GateSpec::pauli_x(ancilla))?;
    c.extend(all.iter().map(|&q| GateSpec::hadamard(q)))?;
    for _ in 0..iterations {
        // Toffoli onto the |−⟩ ancilla, X-conjugated to select the marking
        c.extend(zeros.iter().map(|&q| GateSpec::pauli_x(q)))?;
        c.push(GateSpec::hadamard(ancilla))?;
        c.push(GateSpec::multi_controlled_z(all.clone()))?;
        c.push(GateSpec::hadamard(ancilla))?;
        c.extend(zeros.iter().map(|&q| GateSpec::pauli_x(q)))?;
        // diffusion
        c.extend(data.iter().map(|&q| GateSpec::hadamard(q)))?;
        c.extend(data.iter().map(|&q| GateSpec::pauli_x(q)))?;
        c.push(GateSpec::multi_controlled_z(data.clone()))?;
        c.extend(data.iter().map(|&q| GateSpec::pauli_x(q)))?;
        c.extend(data.iter().map(|&q| GateSpec::hadamard(q)))?;
    }
    Ok(c)
}

/// Noiseless final state from `|0…0⟩`.
pub fn simulate(circuit: &Circuit) -> Result<StateVector> {
    let prepared = circuit.prepare()?;
    let mut state = StateVector::init_zero(circuit.n_qubits)?;
    for g in &prepared {
        g.apply(&mut state)?;
    }
    Ok(state)
}

/// Exact output distribution of the noiseless circuit.
pub fn run_ideal(circuit: &Circuit) -> Result<Vec<f64>> {
    Ok(simulate(circuit)?.probabilities())
}

/// Marginal distribution over the leading `n_kept` qubits.
pub fn leading_marginal(probs: &[f64], n_kept: usize) -> Vec<f64> {
    let n_total = probs.len().trailing_zeros() as usize;
    let shift = n_total - n_kept;
    let mut out = vec![0.0; 1 << n_kept];
    for (i, p) in probs.iter().enumerate() {
        out[i >> shift] += p;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compile::sequence_unitary;
    use crate::gates::GateKind;
    use crate::state::UnitaryMatrix;
    use num_complex::Complex64;

    fn m(s: &str) -> Marking {
        s.parse().unwrap()
    }

    fn diag_with_flip(index: usize) -> UnitaryMatrix {
        let mut entries = vec![Complex64::new(0.0, 0.0); 16];
        for i in 0..4 {
            entries[i * 4 + i] = Complex64::new(if i == index { -1.0 } else { 1.0 }, 0.0);
        }
        UnitaryMatrix::new(4, entries).unwrap()
    }

    #[test]
    fn marking_parsing_and_index() {
        assert_eq!(m("01").index(), 1);
        assert_eq!(m("10").index(), 2);
        assert_eq!(m("10").to_string(), "10");
        assert!("2".parse::<Marking>().is_err());
        assert!("".parse::<Marking>().is_err());
        assert_eq!(
            Marking::all(2)
                .iter()
                .map(Marking::to_string)
                .collect::<Vec<_>>(),
            ["00", "01", "10", "11"]
        );
        assert_eq!(OracleSpec::new(m("01")).flip_mask(), &[true, false]);
    }

    #[test]
    fn iteration_count_values() {
        assert_eq!(iteration_count(4).unwrap(), 1);
        assert_eq!(iteration_count(2).unwrap(), 1);
        assert_eq!(iteration_count(100).unwrap(), 7);
        assert_eq!(iteration_count(1 << 10).unwrap(), 25);
        assert!(iteration_count(1).is_err());
        assert!(iteration_count(0).is_err());
    }

    #[test]
    fn iteration_count_is_locally_optimal() {
        for n in 2..=4096u64 {
            let k = iteration_count(n).unwrap();
            let best = ideal_success(n, k);
            for other in [k.saturating_sub(1), k + 1] {
                assert!(
                    best + 1e-12 >= ideal_success(n, other),
                    "N={n} k={k} vs {other}"
                );
            }
        }
    }

    #[test]
    fn ideal_success_values() {
        assert!((ideal_success(4, 1) - 1.0).abs() < 1e-15);
        assert!((ideal_success(4, 0) - 0.25).abs() < 1e-15);
        // sin²(7·asin(1/4)) = 0.96131...
        assert!((ideal_success(16, 3) - 0.961).abs() < 1e-3);
    }

    #[test]
    fn oracle_unitaries_flip_only_the_marking() {
        for marking in Marking::all(2) {
            let gates = build_oracle(&marking).unwrap();
            let u = sequence_unitary(&gates, 2).unwrap();
            let target = diag_with_flip(marking.index());
            assert!(u.phase_overlap(&target) >= 1.0 - 1e-9, "{marking}");
        }
        let g11 = build_oracle(&m("11")).unwrap();
        assert_eq!(g11, compile::cz_from_ms_on(0, 1));
        let g01 = build_oracle(&m("01")).unwrap();
        let g10 = build_oracle(&m("10")).unwrap();
        assert_eq!(g01.len(), g10.len());
        assert_eq!(g01.first().unwrap().targets, vec![0]);
        assert_eq!(g10.first().unwrap().targets, vec![1]);
        for (a, b) in g01.iter().zip(&g10).skip(1).take(g01.len() - 2) {
            assert_eq!(a, b);
        }
        assert!(build_oracle(&m("011")).is_err());
    }

    #[test]
    fn experimental_circuit_recovers_marking() {
        for marking in Marking::all(2) {
            let probs = run_ideal(&build_experimental_circuit(&marking).unwrap()).unwrap();
            assert!(
                (probs[marking.index()] - 1.0).abs() < 1e-9,
                "{marking}: {probs:?}"
            );
        }
    }

    #[test]
    fn experimental_circuit_intermediate_states() {
        let marking = m("10");
        let circuit = build_experimental_circuit(&marking).unwrap();
        let oracle_len = build_oracle(&marking).unwrap().len();

        let mut prefix = Circuit::new(2, "prefix");
        prefix.push(circuit.gates[0].clone()).unwrap();
        for p in run_ideal(&prefix).unwrap() {
            assert!((p - 0.25).abs() < 1e-12);
        }

        prefix
            .extend(circuit.gates[1..=oracle_len].iter().cloned())
            .unwrap();
        let s = simulate(&prefix).unwrap();
        let amps = s.amplitudes();
        let reference = amps[if marking.index() == 0 { 1 } else { 0 }];
        for (i, a) in amps.iter().enumerate() {
            assert!((a.norm() - 0.5).abs() < 1e-12);
            let rel = a / reference;
            let want = if i == marking.index() { -1.0 } else { 1.0 };
            assert!((rel - Complex64::new(want, 0.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn diagnostic_circuit_gives_bell_states() {
        let outputs: Vec<_> = Marking::all(2)
            .iter()
            .map(|marking| {
                let s = simulate(&build_diagnostic_circuit(marking).unwrap()).unwrap();
                assert!((s.probabilities()[marking.index()] - 0.5).abs() < 1e-9);
                assert!((s.partial_trace_purity(&[0]).unwrap() - 0.5).abs() < 1e-9);
                assert!((s.partial_trace_purity(&[1]).unwrap() - 0.5).abs() < 1e-9);
                s
            })
            .collect();
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!(outputs[i].inner(&outputs[j]).norm() < 1e-9);
                }
            }
        }
        let diag = build_diagnostic_circuit(&m("00")).unwrap();
        let full = build_experimental_circuit(&m("00")).unwrap();
        assert_eq!(diag.gates[..], full.gates[..full.gates.len() - 1]);
        assert_eq!(full.gates.last().unwrap().kind, GateKind::Ms);
    }

    #[test]
    fn textbook_matches_experimental_for_two_qubits() {
        for marking in Marking::all(2) {
            let textbook = run_ideal(&build_textbook_circuit(2, &marking).unwrap()).unwrap();
            let data = leading_marginal(&textbook, 2);
            let exp = run_ideal(&build_experimental_circuit(&marking).unwrap()).unwrap();
            for (a, b) in data.iter().zip(&exp) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn textbook_follows_closed_form() {
        let marking = m("101");
        let probs = run_ideal(&build_textbook_circuit(3, &marking).unwrap()).unwrap();
        let p = leading_marginal(&probs, 3)[marking.index()];
        assert!((p - ideal_success(8, 2)).abs() < 1e-9);
        assert!((p - 0.945).abs() < 1e-3);

        let marking = m("0110");
        let probs = run_ideal(&build_textbook_circuit(4, &marking).unwrap()).unwrap();
        let p = leading_marginal(&probs, 4)[marking.index()];
        assert!((p - ideal_success(16, 3)).abs() < 1e-9);
    }

    #[test]
    fn textbook_rejects_bad_sizes() {
        assert!(matches!(
            build_textbook_circuit(20, &Marking::from_index(0, 20).unwrap()),
            Err(Error::Capacity { .. })
        ));
        assert!(build_textbook_circuit(1, &m("1")).is_err());
        assert!(build_textbook_circuit(3, &m("10")).is_err());
    }

    #[test]
    fn marking_covariance() {
        let reference = run_ideal(&build_experimental_circuit(&m("00")).unwrap()).unwrap();
        for marking in Marking::all(2) {
            let probs = run_ideal(&build_experimental_circuit(&marking).unwrap()).unwrap();
            for i in 0..4 {
                assert!((probs[i ^ marking.index()] - reference[i]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn empty_circuit_stays_at_zero() {
        let c = Circuit::new(2, "empty");
        assert_eq!(run_ideal(&c).unwrap(), vec![1.0, 0.0, 0.0, 0.0]);
        let mut c = Circuit::new(2, "bad");
        assert!(c.push(GateSpec::ms(0, 2)).is_err());
    }
}
