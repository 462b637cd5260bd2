//! Native trapped-ion gates and the standard gates of the textbook circuit.
//!
//! # Rotation convention
//!
//! ```text
//! R(θ, φ) = [[ cos(θ/2),          -e^{-iφ}·sin(θ/2) ],
//!            [ e^{+iφ}·sin(θ/2),   cos(θ/2)         ]]
//!         = exp(-i·θ/2·(cos φ·Y − sin φ·X))
//! Rz(φ)   = diag(e^{-iφ/2}, e^{+iφ/2})
//! G_MS    = exp(-i·π/4·X⊗X)
//! ```
//!
//! `R(θ, 0)` is a rotation about `y` and `R(θ, -π/2)` a rotation about `x`.
//! This is the form under which the ten-operation CNOT sequence in
//! [`crate::compile::cnot_from_ms`] composes to CNOT and the two-ion Grover
//! circuit recovers the marked state with unit probability; the
//! `-i·e^{∓iφ}` off-diagonal variant does neither. Global phases are
//! unobservable and all matrix comparisons are made up to one.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{StateVector, UnitaryMatrix};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Kind and parameters of a gate application; angles in radians.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "snake_case")]
pub enum GateKind {
    /// `R(θ, φ)` addressed to a single ion.
    Rotation {
        theta: f64,
        phi: f64,
    },
    /// `R(θ, φ)` applied in one step, with identical parameters, to every
    /// listed qubit.
    GlobalRotation {
        theta: f64,
        phi: f64,
    },
    ZRotation {
        phi: f64,
    },
    Ms,
    Hadamard,
    PauliX,
    /// First target is the control.
    Cnot,
    Cz,
    MultiControlledZ {
        controls: usize,
    },
}

impl GateKind {
    pub fn name(&self) -> &'static str {
        match self {
            GateKind::Rotation { .. } => "rotation",
            GateKind::GlobalRotation { .. } => "global_rotation",
            GateKind::ZRotation { .. } => "z_rotation",
            GateKind::Ms => "ms",
            GateKind::Hadamard => "hadamard",
            GateKind::PauliX => "pauli_x",
            GateKind::Cnot => "cnot",
            GateKind::Cz => "cz",
            GateKind::MultiControlledZ { .. } => "multi_controlled_z",
        }
    }
}

/// A gate together with the qubits it acts on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateSpec {
    #[serde(flatten)]
    pub kind: GateKind,
    pub targets: Vec<usize>,
}

impl GateSpec {
    pub fn rotation(qubit: usize, theta: f64, phi: f64) -> Self {
        Self {
            kind: GateKind::Rotation { theta, phi },
            targets: vec![qubit],
        }
    }

    pub fn global_rotation(qubits: impl IntoIterator<Item = usize>, theta: f64, phi: f64) -> Self {
        Self {
            kind: GateKind::GlobalRotation { theta, phi },
            targets: qubits.into_iter().collect(),
        }
    }

    pub fn z_rotation(qubit: usize, phi: f64) -> Self {
        Self {
            kind: GateKind::ZRotation { phi },
            targets: vec![qubit],
        }
    }

    pub fn ms(q1: usize, q2: usize) -> Self {
        Self {
            kind: GateKind::Ms,
            targets: vec![q1, q2],
        }
    }

    pub fn hadamard(qubit: usize) -> Self {
        Self {
            kind: GateKind::Hadamard,
            targets: vec![qubit],
        }
    }

    pub fn pauli_x(qubit: usize) -> Self {
        Self {
            kind: GateKind::PauliX,
            targets: vec![qubit],
        }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self {
            kind: GateKind::Cnot,
            targets: vec![control, target],
        }
    }

    pub fn cz(q1: usize, q2: usize) -> Self {
        Self {
            kind: GateKind::Cz,
            targets: vec![q1, q2],
        }
    }

    pub fn multi_controlled_z(qubits: Vec<usize>) -> Self {
        let controls = qubits.len().saturating_sub(1);
        Self {
            kind: GateKind::MultiControlledZ { controls },
            targets: qubits,
        }
    }

    /// Checks arity, parameter finiteness and target indices against a
    /// register of `n_qubits`.
    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let name = self.kind.name();
        let arity_ok = match self.kind {
            GateKind::Rotation { .. } | GateKind::ZRotation { .. } => self.targets.len() == 1,
            GateKind::Hadamard | GateKind::PauliX => self.targets.len() == 1,
            GateKind::Ms | GateKind::Cnot | GateKind::Cz => self.targets.len() == 2,
            GateKind::GlobalRotation { .. } => !self.targets.is_empty(),
            GateKind::MultiControlledZ { controls } => {
                controls >= 1 && self.targets.len() == controls + 1
            }
        };
        if !arity_ok {
            return Err(Error::Argument(format!(
                "{name} cannot act on {} target(s)",
                self.targets.len()
            )));
        }
        let angles_finite = match self.kind {
            GateKind::Rotation { theta, phi } | GateKind::GlobalRotation { theta, phi } => {
                theta.is_finite() && phi.is_finite()
            }
            GateKind::ZRotation { phi } => phi.is_finite(),
            _ => true,
        };
        if !angles_finite {
            return Err(Error::Argument(format!("{name} has a non-finite angle")));
        }
        for (i, &q) in self.targets.iter().enumerate() {
            if q >= n_qubits {
                return Err(Error::Index(format!(
                    "{name} targets qubit {q} in a {n_qubits}-qubit register"
                )));
            }
            if self.targets[..i].contains(&q) {
                return Err(Error::Index(format!("{name} repeats qubit {q}")));
            }
        }
        Ok(())
    }

    /// Single-qubit matrix for one-qubit kinds (also the per-qubit factor of
    /// a global rotation), two-qubit matrix for two-qubit kinds, `None` for
    /// the multi-controlled Z.
    pub fn matrix(&self) -> Result<Option<UnitaryMatrix>> {
        Ok(Some(match self.kind {
            GateKind::Rotation { theta, phi } | GateKind::GlobalRotation { theta, phi } => {
                rotation_matrix(theta, phi)?
            }
            GateKind::ZRotation { phi } => z_rotation_matrix(phi)?,
            GateKind::Ms => ms_matrix(),
            GateKind::Hadamard => standard_matrix(StandardGate::Hadamard),
            GateKind::PauliX => standard_matrix(StandardGate::PauliX),
            GateKind::Cnot => standard_matrix(StandardGate::Cnot),
            GateKind::Cz => standard_matrix(StandardGate::Cz),
            GateKind::MultiControlledZ { .. } => return Ok(None),
        }))
    }
}

impl fmt::Display for GateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            GateKind::Rotation { theta, phi } | GateKind::GlobalRotation { theta, phi } => {
                write!(
                    f,
                    "{}({theta:.4}, {phi:.4}) {:?}",
                    self.kind.name(),
                    self.targets
                )
            }
            GateKind::ZRotation { phi } => write!(f, "z_rotation({phi:.4}) {:?}", self.targets),
            _ => write!(f, "{} {:?}", self.kind.name(), self.targets),
        }
    }
}

/// `R(θ, φ)` under the module's rotation convention.
pub fn rotation_matrix(theta: f64, phi: f64) -> Result<UnitaryMatrix> {
    if !theta.is_finite() || !phi.is_finite() {
        return Err(Error::Argument("rotation angles must be finite".into()));
    }
    let (s, c) = (theta / 2.0).sin_cos();
    let e = Complex64::from_polar(1.0, phi);
    Ok(UnitaryMatrix::from_entries(
        2,
        vec![Complex64::from(c), -e.conj() * s, e * s, Complex64::from(c)],
    ))
}

/// `Rz(φ) = diag(e^{-iφ/2}, e^{+iφ/2})`.
pub fn z_rotation_matrix(phi: f64) -> Result<UnitaryMatrix> {
    if !phi.is_finite() {
        return Err(Error::Argument("z-rotation angle must be finite".into()));
    }
    let e = Complex64::from_polar(1.0, phi / 2.0);
    Ok(UnitaryMatrix::from_entries(
        2,
        vec![e.conj(), ZERO, ZERO, e],
    ))
}

/// The Mølmer–Sørensen gate `(I − i·X⊗X)/√2`, auxiliary phases zero.
pub fn ms_matrix() -> UnitaryMatrix {
    let d = Complex64::from(FRAC_1_SQRT_2);
    let o = -I * FRAC_1_SQRT_2;
    UnitaryMatrix::from_entries(
        4,
        vec![
            d, ZERO, ZERO, o, //
            ZERO, d, o, ZERO, //
            ZERO, o, d, ZERO, //
            o, ZERO, ZERO, d,
        ],
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StandardGate {
    Hadamard,
    PauliX,
    Cnot,
    Cz,
}

pub fn standard_matrix(kind: StandardGate) -> UnitaryMatrix {
    let h = Complex64::from(FRAC_1_SQRT_2);
    match kind {
        StandardGate::Hadamard => UnitaryMatrix::from_entries(2, vec![h, h, h, -h]),
        StandardGate::PauliX => pauli_matrix(Pauli::X),
        StandardGate::Cnot => UnitaryMatrix::from_entries(
            4,
            vec![
                ONE, ZERO, ZERO, ZERO, //
                ZERO, ONE, ZERO, ZERO, //
                ZERO, ZERO, ZERO, ONE, //
                ZERO, ZERO, ONE, ZERO,
            ],
        ),
        StandardGate::Cz => UnitaryMatrix::from_entries(
            4,
            vec![
                ONE, ZERO, ZERO, ZERO, //
                ZERO, ONE, ZERO, ZERO, //
                ZERO, ZERO, ONE, ZERO, //
                ZERO, ZERO, ZERO, -ONE,
            ],
        ),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
}

pub fn pauli_matrix(p: Pauli) -> UnitaryMatrix {
    let entries = match p {
        Pauli::I => vec![ONE, ZERO, ZERO, ONE],
        Pauli::X => vec![ZERO, ONE, ONE, ZERO],
        Pauli::Y => vec![ZERO, -I, I, ZERO],
        Pauli::Z => vec![ONE, ZERO, ZERO, -ONE],
    };
    UnitaryMatrix::from_entries(2, entries)
}

/// Negates every amplitude whose listed qubits are all `1`. Matrix-free.
pub fn apply_multi_controlled_z(state: &mut StateVector, qubits: &[usize]) -> Result<()> {
    let n = state.n_qubits();
    if qubits.len() < 2 {
        return Err(Error::Argument(
            "multi-controlled Z needs at least 2 qubits".into(),
        ));
    }
    let mut mask = 0usize;
    for &q in qubits {
        if q >= n {
            return Err(Error::Index(format!(
                "qubit {q} out of range for {n} qubits"
            )));
        }
        let bit = 1 << (n - 1 - q);
        if mask & bit != 0 {
            return Err(Error::Index(format!(
                "multi-controlled Z repeats qubit {q}"
            )));
        }
        mask |= bit;
    }
    for (i, a) in state.amplitudes_mut().iter_mut().enumerate() {
        if i & mask == mask {
            *a = -*a;
        }
    }
    Ok(())
}

/// A gate with its matrix resolved once, for repeated application.
#[derive(Clone, Debug)]
pub struct PreparedGate {
    spec: GateSpec,
    matrix: Option<UnitaryMatrix>,
}

impl PreparedGate {
    pub fn new(spec: &GateSpec, n_qubits: usize) -> Result<Self> {
        spec.validate(n_qubits)?;
        Ok(Self {
            spec: spec.clone(),
            matrix: spec.matrix()?,
        })
    }

    pub fn spec(&self) -> &GateSpec {
        &self.spec
    }

    pub fn apply(&self, state: &mut StateVector) -> Result<()> {
        let t = &self.spec.targets;
        match (&self.matrix, t.len()) {
            (None, _) => apply_multi_controlled_z(state, t),
            (Some(m), _) if m.dim() == 2 => t.iter().try_for_each(|&q| state.apply_single(q, m)),
            (Some(m), 2) => state.apply_two(t[0], t[1], m),
            (Some(_), n) => Err(Error::Argument(format!(
                "{} cannot act on {n} targets",
                self.spec.kind.name()
            ))),
        }
    }
}

/// Validates and applies one gate.
pub fn apply_gate(state: &mut StateVector, gate: &GateSpec) -> Result<()> {
    PreparedGate::new(gate, state.n_qubits())?.apply(state)
}
