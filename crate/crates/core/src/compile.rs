//! Lowering of standard gates to native trapped-ion pulses and the pulse
//! timing model.
//!
//! Native pulses are global microwave rotations, addressed (differential)
//! rotations, z rotations and the MS gate. Standard gates are lowered as:
//!
//! | gate      | native sequence                                   |
//! |-----------|---------------------------------------------------|
//! | `H`       | `Rz(π)` then `R(π/2, 0)`                          |
//! | `X`       | `R(π, π/2)`                                       |
//! | `CNOT`    | the ten-operation MS sequence of [`cnot_from_ms`] |
//! | `CZ`      | [`cz_from_ms`]                                    |
//!
//! All equalities hold up to global phase.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{GateKind, GateSpec};
use crate::grover::Circuit;
use crate::state::UnitaryMatrix;

/// Pulse durations in µs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TimingModel {
    pub global_rotation_us: f64,
    pub differential_rotation_us: f64,
    /// Not priced separately by the experiment; realised with the same
    /// addressed Stark-shift beam as a differential rotation.
    pub z_rotation_us: f64,
    pub ms_us: f64,
}

impl Default for TimingModel {
    fn default() -> Self {
        Self {
            global_rotation_us: 10.0,
            differential_rotation_us: 20.0,
            z_rotation_us: 20.0,
            ms_us: 140.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PulseKind {
    GlobalRotation { theta: f64, phi: f64 },
    DifferentialRotation { theta: f64, phi: f64, qubit: usize },
    ZRotation { phi: f64, qubit: usize },
    Ms { qubits: (usize, usize) },
}

impl PulseKind {
    pub fn name(&self) -> &'static str {
        match self {
            PulseKind::GlobalRotation { .. } => "global_rotation",
            PulseKind::DifferentialRotation { .. } => "differential_rotation",
            PulseKind::ZRotation { .. } => "z_rotation",
            PulseKind::Ms { .. } => "ms",
        }
    }

    fn duration(&self, timing: &TimingModel) -> f64 {
        match self {
            PulseKind::GlobalRotation { .. } => timing.global_rotation_us,
            PulseKind::DifferentialRotation { .. } => timing.differential_rotation_us,
            PulseKind::ZRotation { .. } => timing.z_rotation_us,
            PulseKind::Ms { .. } => timing.ms_us,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Pulse {
    pub kind: PulseKind,
    pub duration_us: f64,
}

/// Flat JSON form of a pulse.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseRecord {
    pub kind: String,
    pub params: BTreeMap<String, f64>,
    pub qubits: Vec<usize>,
    pub duration_us: f64,
}

/// A timed pulse list on an `n_qubits` register.
#[derive(Clone, Debug, PartialEq)]
pub struct PulseSchedule {
    n_qubits: usize,
    pulses: Vec<Pulse>,
    total_duration_us: f64,
}

impl PulseSchedule {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            pulses: Vec::new(),
            total_duration_us: 0.0,
        }
    }

    pub fn push(&mut self, pulse: Pulse) {
        self.total_duration_us += pulse.duration_us;
        self.pulses.push(pulse);
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn pulses(&self) -> &[Pulse] {
        &self.pulses
    }

    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    pub fn total_duration_us(&self) -> f64 {
        self.total_duration_us
    }

    pub fn ms_count(&self) -> usize {
        self.pulses
            .iter()
            .filter(|p| matches!(p.kind, PulseKind::Ms { .. }))
            .count()
    }

    /// The schedule as native gates, for simulation and verification.
    pub fn to_gates(&self) -> Vec<GateSpec> {
        self.pulses
            .iter()
            .map(|p| match p.kind {
                PulseKind::GlobalRotation { theta, phi } => {
                    GateSpec::global_rotation(0..self.n_qubits, theta, phi)
                }
                PulseKind::DifferentialRotation { theta, phi, qubit } => {
                    GateSpec::rotation(qubit, theta, phi)
                }
                PulseKind::ZRotation { phi, qubit } => GateSpec::z_rotation(qubit, phi),
                PulseKind::Ms { qubits: (a, b) } => GateSpec::ms(a, b),
            })
            .collect()
    }

    pub fn records(&self) -> Vec<PulseRecord> {
        self.pulses
            .iter()
            .map(|p| {
                let (params, qubits): (Vec<(&str, f64)>, Vec<usize>) = match p.kind {
                    PulseKind::GlobalRotation { theta, phi } => (
                        vec![("theta", theta), ("phi", phi)],
                        (0..self.n_qubits).collect(),
                    ),
                    PulseKind::DifferentialRotation { theta, phi, qubit } => {
                        (vec![("theta", theta), ("phi", phi)], vec![qubit])
                    }
                    PulseKind::ZRotation { phi, qubit } => (vec![("phi", phi)], vec![qubit]),
                    PulseKind::Ms { qubits: (a, b) } => (vec![], vec![a, b]),
                };
                PulseRecord {
                    kind: p.kind.name().to_string(),
                    params: params
                        .into_iter()
                        .map(|(k, v)| (k.to_string(), v))
                        .collect(),
                    qubits,
                    duration_us: p.duration_us,
                }
            })
            .collect()
    }
}

/// The MS-based CNOT sequence with ion 1 as `control` and ion 2 as `target`:
/// `R₂(π/2,0) R₁(π/2,π) R₂(π/2,π) G_MS R₁(π/2,0) R₂(π/2,0) Rz₁(−π/2) Rz₂(−π/2)
/// R₂(π/2,−π) Rz₁(π)`, in time order.
pub fn cnot_from_ms_on(control: usize, target: usize) -> Vec<GateSpec> {
    let (c, t) = (control, target);
    vec![
        GateSpec::rotation(t, FRAC_PI_2, 0.0),
        GateSpec::rotation(c, FRAC_PI_2, PI),
        GateSpec::rotation(t, FRAC_PI_2, PI),
        GateSpec::ms(c, t),
        GateSpec::rotation(c, FRAC_PI_2, 0.0),
        GateSpec::rotation(t, FRAC_PI_2, 0.0),
        GateSpec::z_rotation(c, -FRAC_PI_2),
        GateSpec::z_rotation(t, -FRAC_PI_2),
        GateSpec::rotation(t, FRAC_PI_2, -PI),
        GateSpec::z_rotation(c, PI),
    ]
}

/// [`cnot_from_ms_on`] with qubit 0 as control.
pub fn cnot_from_ms() -> Vec<GateSpec> {
    cnot_from_ms_on(0, 1)
}

/// Controlled-Z from a single MS gate. The global `R(π/2, π)` and `R(π/2, 0)`
/// conjugate `X⊗X` into `Z⊗Z`, so the middle three pulses give
/// `exp(−iπ/4·Z⊗Z)`; the two `Rz(−π/2)` complete it to `diag(1,1,1,−1)`.
pub fn cz_from_ms_on(q1: usize, q2: usize) -> Vec<GateSpec> {
    vec![
        GateSpec::global_rotation([q1, q2], FRAC_PI_2, PI),
        GateSpec::ms(q1, q2),
        GateSpec::global_rotation([q1, q2], FRAC_PI_2, 0.0),
        GateSpec::z_rotation(q1, -FRAC_PI_2),
        GateSpec::z_rotation(q2, -FRAC_PI_2),
    ]
}

pub fn cz_from_ms() -> Vec<GateSpec> {
    cz_from_ms_on(0, 1)
}

/// Rewrites one gate as native gates.
pub fn lower_gate(gate: &GateSpec) -> Result<Vec<GateSpec>> {
    let t = &gate.targets;
    Ok(match gate.kind {
        GateKind::Rotation { .. }
        | GateKind::GlobalRotation { .. }
        | GateKind::ZRotation { .. }
        | GateKind::Ms => vec![gate.clone()],
        GateKind::Hadamard => vec![
            GateSpec::z_rotation(t[0], PI),
            GateSpec::rotation(t[0], FRAC_PI_2, 0.0),
        ],
        GateKind::PauliX => vec![GateSpec::rotation(t[0], PI, FRAC_PI_2)],
        GateKind::Cnot => cnot_from_ms_on(t[0], t[1]),
        GateKind::Cz => cz_from_ms_on(t[0], t[1]),
        GateKind::MultiControlledZ { .. } => return Err(Error::Compile(gate.kind.name().into())),
    })
}

/// Lowers a circuit and prices every pulse under `timing`. A rotation is a
/// global pulse only when it acts in one step on every qubit of the register.
pub fn compile_circuit(circuit: &Circuit, timing: &TimingModel) -> Result<PulseSchedule> {
    circuit.validate()?;
    let n = circuit.n_qubits;
    let mut schedule = PulseSchedule::new(n);
    for gate in &circuit.gates {
        for native in lower_gate(gate)? {
            let t = &native.targets;
            let kinds = match native.kind {
                GateKind::GlobalRotation { theta, phi } if t.len() == n => {
                    vec![PulseKind::GlobalRotation { theta, phi }]
                }
                GateKind::GlobalRotation { theta, phi } | GateKind::Rotation { theta, phi } => t
                    .iter()
                    .map(|&qubit| PulseKind::DifferentialRotation { theta, phi, qubit })
                    .collect(),
                GateKind::ZRotation { phi } => vec![PulseKind::ZRotation { phi, qubit: t[0] }],
                GateKind::Ms => vec![PulseKind::Ms {
                    qubits: (t[0], t[1]),
                }],
                _ => unreachable!("lower_gate only emits native gates"),
            };
            for kind in kinds {
                let duration_us = kind.duration(timing);
                schedule.push(Pulse { kind, duration_us });
            }
        }
    }
    Ok(schedule)
}

/// Sum of pulse durations, recomputed from the pulse list.
pub fn schedule_duration(schedule: &PulseSchedule) -> f64 {
    schedule.pulses().iter().map(|p| p.duration_us).sum()
}

fn swap_matrix() -> UnitaryMatrix {
    let (o, z) = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
    UnitaryMatrix::from_entries(4, vec![o, z, z, z, z, z, o, z, z, o, z, z, z, z, z, o])
}

fn embed(gate: &GateSpec) -> Result<UnitaryMatrix> {
    let id = UnitaryMatrix::identity(2);
    let on = |q: usize, u: &UnitaryMatrix| if q == 0 { u.kron(&id) } else { id.kron(u) };
    let t = &gate.targets;
    match gate.kind {
        GateKind::MultiControlledZ { .. } => {
            let o = Complex64::new(1.0, 0.0);
            let z = Complex64::new(0.0, 0.0);
            Ok(UnitaryMatrix::from_entries(
                4,
                vec![o, z, z, z, z, o, z, z, z, z, o, z, z, z, z, -o],
            ))
        }
        _ => {
            let m = gate.matrix()?.expect("matrix-backed gate");
            if m.dim() == 2 {
                Ok(t.iter()
                    .fold(UnitaryMatrix::identity(4), |acc, &q| on(q, &m).matmul(&acc)))
            } else if t[0] == 0 {
                Ok(m)
            } else {
                let s = swap_matrix();
                Ok(s.matmul(&m).matmul(&s))
            }
        }
    }
}

/// Ordered product `G_k ⋯ G_1` of a two-qubit gate list, built from explicit
/// Kronecker embeddings rather than the state-vector engine.
pub fn sequence_unitary(gates: &[GateSpec], n_qubits: usize) -> Result<UnitaryMatrix> {
    if n_qubits != 2 {
        return Err(Error::Unsupported(format!(
            "sequence_unitary is 2-qubit only, got {n_qubits}"
        )));
    }
    gates.iter().try_fold(UnitaryMatrix::identity(4), |acc, g| {
        g.validate(2)?;
        Ok(embed(g)?.matmul(&acc))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{standard_matrix, StandardGate};
    use crate::grover::{build_experimental_circuit, run_ideal, Marking};

    fn circuit(gates: Vec<GateSpec>) -> Circuit {
        let mut c = Circuit::new(2, "t");
        c.extend(gates).unwrap();
        c
    }

    #[test]
    fn cnot_sequence_shape_and_unitary() {
        let seq = cnot_from_ms();
        assert_eq!(seq.len(), 10);
        assert_eq!(seq.iter().filter(|g| g.kind == GateKind::Ms).count(), 1);
        let u = sequence_unitary(&seq, 2).unwrap();
        // control is qubit 0 (ion 1)
        assert!(u.phase_overlap(&standard_matrix(StandardGate::Cnot)) >= 1.0 - 1e-9);
        let squared = u.matmul(&u);
        assert!(squared.phase_overlap(&UnitaryMatrix::identity(4)) >= 1.0 - 1e-9);
        let reversed = sequence_unitary(&cnot_from_ms_on(1, 0), 2).unwrap();
        let cnot10 = sequence_unitary(&[GateSpec::cnot(1, 0)], 2).unwrap();
        assert!(reversed.phase_overlap(&cnot10) >= 1.0 - 1e-9);
    }

    #[test]
    fn cz_sequence() {
        let seq = cz_from_ms();
        assert_eq!(seq.iter().filter(|g| g.kind == GateKind::Ms).count(), 1);
        let cz = standard_matrix(StandardGate::Cz);
        assert!(sequence_unitary(&seq, 2).unwrap().phase_overlap(&cz) >= 1.0 - 1e-9);
        assert!(
            sequence_unitary(&cz_from_ms_on(1, 0), 2)
                .unwrap()
                .phase_overlap(&cz)
                >= 1.0 - 1e-9
        );
    }

    #[test]
    fn sequence_unitary_basics() {
        assert_eq!(
            sequence_unitary(&[], 2).unwrap(),
            UnitaryMatrix::identity(4)
        );
        // three more MS gates undo one (G_MS⁴ = −I)
        let inverse_pair = vec![GateSpec::ms(0, 1); 4];
        let u = sequence_unitary(&inverse_pair, 2).unwrap();
        assert!(u.phase_overlap(&UnitaryMatrix::identity(4)) >= 1.0 - 1e-12);
        assert!(matches!(
            sequence_unitary(&[], 3),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn standard_lowerings_match_up_to_phase() {
        for gate in [
            GateSpec::hadamard(0),
            GateSpec::hadamard(1),
            GateSpec::pauli_x(0),
            GateSpec::pauli_x(1),
            GateSpec::cnot(0, 1),
            GateSpec::cnot(1, 0),
            GateSpec::cz(0, 1),
        ] {
            let want = sequence_unitary(std::slice::from_ref(&gate), 2).unwrap();
            let got = sequence_unitary(&lower_gate(&gate).unwrap(), 2).unwrap();
            assert!(got.phase_overlap(&want) >= 1.0 - 1e-9, "{gate}");
        }
    }

    #[test]
    fn durations() {
        let t = TimingModel::default();
        let c =
            compile_circuit(&circuit(vec![GateSpec::ms(0, 1), GateSpec::ms(0, 1)]), &t).unwrap();
        assert_eq!(c.total_duration_us(), 280.0);
        let c = compile_circuit(
            &circuit(vec![
                GateSpec::global_rotation(0..2, 0.1, 0.0),
                GateSpec::global_rotation(0..2, 0.2, 0.0),
                GateSpec::ms(0, 1),
                GateSpec::rotation(1, 0.3, 0.0),
            ]),
            &t,
        )
        .unwrap();
        assert_eq!(c.total_duration_us(), 180.0);
        assert_eq!(schedule_duration(&c), 180.0);

        let empty = compile_circuit(&circuit(vec![]), &t).unwrap();
        assert!(empty.is_empty());
        assert_eq!(empty.total_duration_us(), 0.0);
    }

    #[test]
    fn bare_cnot_schedule() {
        let s = compile_circuit(
            &circuit(vec![GateSpec::cnot(0, 1)]),
            &TimingModel::default(),
        )
        .unwrap();
        assert_eq!(s.len(), 10);
        assert_eq!(s.ms_count(), 1);
        // 6 addressed rotations + 3 z rotations at 20 µs, one MS
        assert_eq!(s.total_duration_us(), 140.0 + 9.0 * 20.0);
    }

    #[test]
    fn experimental_schedules_are_in_band() {
        let expected = [("00", 380.0), ("01", 400.0), ("10", 400.0), ("11", 360.0)];
        for (label, duration) in expected {
            let c = build_experimental_circuit(&label.parse::<Marking>().unwrap()).unwrap();
            let s = compile_circuit(&c, &TimingModel::default()).unwrap();
            assert_eq!(s.ms_count(), 2);
            assert_eq!(s.total_duration_us(), duration, "{label}");
            assert!((300.0..=400.0).contains(&s.total_duration_us()));
        }
    }

    #[test]
    fn multi_controlled_z_is_rejected() {
        let c = circuit(vec![GateSpec::multi_controlled_z(vec![0, 1])]);
        assert_eq!(
            compile_circuit(&c, &TimingModel::default()),
            Err(Error::Compile("multi_controlled_z".into()))
        );
    }

    #[test]
    fn partial_global_rotation_becomes_differential() {
        let mut c = Circuit::new(3, "t");
        c.push(GateSpec::global_rotation([0, 2], 1.0, 0.0)).unwrap();
        let s = compile_circuit(&c, &TimingModel::default()).unwrap();
        assert_eq!(s.len(), 2);
        assert!(s
            .pulses()
            .iter()
            .all(|p| matches!(p.kind, PulseKind::DifferentialRotation { .. })));
    }

    #[test]
    fn compile_preserves_semantics_and_is_idempotent() {
        let t = TimingModel::default();
        let c = circuit(vec![
            GateSpec::hadamard(0),
            GateSpec::cnot(0, 1),
            GateSpec::pauli_x(1),
            GateSpec::cz(1, 0),
            GateSpec::rotation(0, 0.3, 1.1),
        ]);
        let s = compile_circuit(&c, &t).unwrap();
        let native = circuit(s.to_gates());
        let (a, b) = (run_ideal(&c).unwrap(), run_ideal(&native).unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9);
        }
        let again = compile_circuit(&native, &t).unwrap();
        assert_eq!(again.total_duration_us(), s.total_duration_us());
        assert_eq!(again.to_gates(), s.to_gates());
    }

    #[test]
    fn records_are_flat() {
        let s = compile_circuit(
            &circuit(vec![GateSpec::global_rotation(0..2, 1.0, 0.5)]),
            &TimingModel::default(),
        )
        .unwrap();
        let json = serde_json::to_string(&s.records()).unwrap();
        assert_eq!(
            json,
            r#"[{"kind":"global_rotation","params":{"phi":0.5,"theta":1.0},"qubits":[0,1],"duration_us":10.0}]"#
        );
    }
}
