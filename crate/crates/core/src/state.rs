//! Dense state-vector register and the gate application engine.
//!
//! # Bit order
//!
//! Qubit 0 is the **most significant** bit of a basis index. For an
//! `n`-qubit register, qubit `q` occupies bit `n - 1 - q` of the index, so the
//! basis label `"01"` (qubit 0 in `|0⟩`, qubit 1 in `|1⟩`) is index 1 and the
//! leftmost character of every bitstring belongs to qubit 0. Two-qubit
//! matrices act on the local basis `|q1 q2⟩` ordered `00, 01, 10, 11`, where
//! `q1` is the first qubit passed to [`StateVector::apply_two`]. Every other
//! module inherits this convention.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Largest register accepted by [`StateVector::init_zero`].
pub const DEFAULT_MAX_QUBITS: usize = 20;

/// Allowed drift of `Σ|aᵢ|²` away from one.
pub const NORM_TOLERANCE: f64 = 1e-10;

/// Entrywise tolerance on `U†U = I`.
pub const UNITARY_TOLERANCE: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Returns the value of `qubit` in basis index `index` of an `n_qubits` register.
#[inline]
pub fn qubit_bit(index: usize, qubit: usize, n_qubits: usize) -> bool {
    (index >> (n_qubits - 1 - qubit)) & 1 == 1
}

/// Formats a basis index as a bitstring, qubit 0 first.
pub fn basis_label(index: usize, n_qubits: usize) -> String {
    (0..n_qubits)
        .map(|q| {
            if qubit_bit(index, q, n_qubits) {
                '1'
            } else {
                '0'
            }
        })
        .collect()
}

/// Parses a bitstring (qubit 0 first) into a basis index.
pub fn parse_basis_label(label: &str) -> Result<usize> {
    if label.is_empty() || label.len() > usize::BITS as usize - 1 {
        return Err(Error::Argument(format!("invalid bitstring `{label}`")));
    }
    label.chars().try_fold(0usize, |acc, c| match c {
        '0' => Ok(acc << 1),
        '1' => Ok((acc << 1) | 1),
        _ => Err(Error::Argument(format!("invalid bitstring `{label}`"))),
    })
}

/// A square unitary on one or two qubits, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl UnitaryMatrix {
    /// Builds a matrix of dimension 2 or 4, rejecting anything that is not
    /// unitary within [`UNITARY_TOLERANCE`].
    pub fn new(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if dim != 2 && dim != 4 {
            return Err(Error::Validation(format!(
                "unitary dimension must be 2 or 4, got {dim}"
            )));
        }
        if entries.len() != dim * dim {
            return Err(Error::Validation(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                entries.len()
            )));
        }
        let m = Self { dim, entries };
        if !m.is_unitary(UNITARY_TOLERANCE) {
            return Err(Error::Validation("matrix is not unitary".into()));
        }
        Ok(m)
    }

    /// Constructor for matrices that are unitary by construction.
    pub(crate) fn from_entries(dim: usize, entries: Vec<Complex64>) -> Self {
        debug_assert_eq!(entries.len(), dim * dim);
        Self { dim, entries }
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![ZERO; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = ONE;
        }
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    pub fn adjoint(&self) -> Self {
        let d = self.dim;
        let mut entries = vec![ZERO; d * d];
        for r in 0..d {
            for c in 0..d {
                entries[c * d + r] = self.get(r, c).conj();
            }
        }
        Self { dim: d, entries }
    }

    /// Matrix product `self · rhs`.
    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in matmul");
        let d = self.dim;
        let mut entries = vec![ZERO; d * d];
        for r in 0..d {
            for k in 0..d {
                let a = self.get(r, k);
                if a == ZERO {
                    continue;
                }
                for c in 0..d {
                    entries[r * d + c] += a * rhs.get(k, c);
                }
            }
        }
        Self { dim: d, entries }
    }

    /// Tensor product `self ⊗ rhs` of two single-qubit matrices.
    pub fn kron(&self, rhs: &Self) -> Self {
        assert!(
            self.dim == 2 && rhs.dim == 2,
            "kron is defined for 2x2 factors"
        );
        let mut entries = vec![ZERO; 16];
        for r1 in 0..2 {
            for c1 in 0..2 {
                for r2 in 0..2 {
                    for c2 in 0..2 {
                        entries[(2 * r1 + r2) * 4 + 2 * c1 + c2] =
                            self.get(r1, c1) * rhs.get(r2, c2);
                    }
                }
            }
        }
        Self { dim: 4, entries }
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        let d = self.dim;
        (0..d).all(|r| {
            (0..d).all(|c| {
                let dot: Complex64 = (0..d).map(|k| self.get(k, r).conj() * self.get(k, c)).sum();
                let expected = if r == c { ONE } else { ZERO };
                (dot - expected).norm() <= tol
            })
        })
    }

    /// `|Tr(A†B)| / dim`; equals 1 exactly when the two differ by a global phase.
    pub fn phase_overlap(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch in phase_overlap");
        let tr: Complex64 = (0..self.dim)
            .flat_map(|r| (0..self.dim).map(move |c| (r, c)))
            .map(|(r, c)| self.get(r, c).conj() * other.get(r, c))
            .sum();
        tr.norm() / self.dim as f64
    }

    pub fn equals_up_to_phase(&self, other: &Self, tol: f64) -> bool {
        self.phase_overlap(other) >= 1.0 - tol
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Amplitudes of an `n`-qubit register.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩` on `n_qubits` qubits, capped at [`DEFAULT_MAX_QUBITS`].
    pub fn init_zero(n_qubits: usize) -> Result<Self> {
        Self::init_zero_with_capacity(n_qubits, DEFAULT_MAX_QUBITS)
    }

    pub fn init_zero_with_capacity(n_qubits: usize, max_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > max_qubits {
            return Err(Error::Capacity {
                requested: n_qubits,
                max: max_qubits,
            });
        }
        let mut amplitudes = vec![ZERO; 1 << n_qubits];
        amplitudes[0] = ONE;
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Wraps a caller-supplied amplitude vector. The length must be a power of
    /// two and the norm must be one within [`NORM_TOLERANCE`].
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Validation(format!(
                "amplitude count {len} is not a power of two >= 2"
            )));
        }
        let n_qubits = len.trailing_zeros() as usize;
        if n_qubits > DEFAULT_MAX_QUBITS {
            return Err(Error::Capacity {
                requested: n_qubits,
                max: DEFAULT_MAX_QUBITS,
            });
        }
        let state = Self {
            n_qubits,
            amplitudes,
        };
        if (state.norm_sqr() - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::Validation(format!(
                "state norm² {} differs from 1",
                state.norm_sqr()
            )));
        }
        Ok(state)
    }

    /// The computational basis state with the given index.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let mut s = Self::init_zero(n_qubits)?;
        if index >= s.amplitudes.len() {
            return Err(Error::Index(format!(
                "basis index {index} out of range for {n_qubits} qubits"
            )));
        }
        s.amplitudes[0] = ZERO;
        s.amplitudes[index] = ONE;
        Ok(s)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(Complex64::norm_sqr).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(Error::Index(format!(
                "qubit {qubit} out of range for {} qubits",
                self.n_qubits
            )));
        }
        Ok(())
    }

    fn stride(&self, qubit: usize) -> usize {
        1 << (self.n_qubits - 1 - qubit)
    }

    /// Applies a 2x2 unitary to `qubit`.
    pub fn apply_single(&mut self, qubit: usize, u: &UnitaryMatrix) -> Result<()> {
        self.check_qubit(qubit)?;
        if u.dim() != 2 || !u.is_unitary(UNITARY_TOLERANCE) {
            return Err(Error::Validation("apply_single needs a 2x2 unitary".into()));
        }
        let (u00, u01, u10, u11) = (u.get(0, 0), u.get(0, 1), u.get(1, 0), u.get(1, 1));
        let stride = self.stride(qubit);
        for i in (0..self.amplitudes.len()).filter(|i| i & stride == 0) {
            let a0 = self.amplitudes[i];
            let a1 = self.amplitudes[i | stride];
            self.amplitudes[i] = u00 * a0 + u01 * a1;
            self.amplitudes[i | stride] = u10 * a0 + u11 * a1;
        }
        Ok(())
    }

    /// Applies a 4x4 unitary to the ordered pair `(q1, q2)`; `q1` is the high
    /// bit of the local two-qubit index.
    pub fn apply_two(&mut self, q1: usize, q2: usize, u: &UnitaryMatrix) -> Result<()> {
        self.check_qubit(q1)?;
        self.check_qubit(q2)?;
        if q1 == q2 {
            return Err(Error::Index(format!("apply_two on repeated qubit {q1}")));
        }
        if u.dim() != 4 || !u.is_unitary(UNITARY_TOLERANCE) {
            return Err(Error::Validation("apply_two needs a 4x4 unitary".into()));
        }
        let (s1, s2) = (self.stride(q1), self.stride(q2));
        for i in (0..self.amplitudes.len()).filter(|i| i & (s1 | s2) == 0) {
            let idx = [i, i | s2, i | s1, i | s1 | s2];
            let a = idx.map(|j| self.amplitudes[j]);
            for (row, &j) in idx.iter().enumerate() {
                self.amplitudes[j] = (0..4).map(|col| u.get(row, col) * a[col]).sum();
            }
        }
        Ok(())
    }

    /// Born-rule probabilities of every basis outcome.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(Complex64::norm_sqr).collect()
    }

    /// Draws `shots` computational-basis outcomes from a ChaCha8 stream seeded
    /// with `seed`. Returns counts indexed by basis index.
    pub fn sample(&self, shots: u64, seed: u64) -> Vec<u64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(shots, &mut rng)
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, shots: u64, rng: &mut R) -> Vec<u64> {
        let cdf = cumulative(&self.probabilities());
        let mut counts = vec![0u64; self.dim()];
        for _ in 0..shots {
            counts[draw_from_cdf(&cdf, rng)] += 1;
        }
        counts
    }

    /// `Tr(ρ²)` of the reduced state on `keep`.
    pub fn partial_trace_purity(&self, keep: &[usize]) -> Result<f64> {
        let mut keep: Vec<usize> = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        if keep.is_empty() || keep.len() >= self.n_qubits {
            return Err(Error::Argument(
                "purity needs a non-empty proper subset of qubits".into(),
            ));
        }
        for &q in &keep {
            self.check_qubit(q)?;
        }
        let rest: Vec<usize> = (0..self.n_qubits).filter(|q| !keep.contains(q)).collect();
        let n = self.n_qubits;
        let pack = |index: usize, qubits: &[usize]| {
            qubits.iter().fold(0usize, |acc, &q| {
                (acc << 1) | usize::from(qubit_bit(index, q, n))
            })
        };
        let (dk, dr) = (1usize << keep.len(), 1usize << rest.len());
        let mut psi = vec![ZERO; dk * dr];
        for (index, amp) in self.amplitudes.iter().enumerate() {
            psi[pack(index, &keep) * dr + pack(index, &rest)] = *amp;
        }
        let mut purity = 0.0;
        for a in 0..dk {
            for b in 0..dk {
                let rho_ab: Complex64 = (0..dr)
                    .map(|r| psi[a * dr + r] * psi[b * dr + r].conj())
                    .sum();
                purity += rho_ab.norm_sqr();
            }
        }
        Ok(purity)
    }
}

pub(crate) fn cumulative(probs: &[f64]) -> Vec<f64> {
    probs
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect()
}

/// Inverse-CDF draw: first index whose cumulative weight exceeds a uniform
/// variate. Rounding slack past the final entry falls on the last outcome
/// with non-zero weight.
pub(crate) fn draw_from_cdf<R: Rng + ?Sized>(cdf: &[f64], rng: &mut R) -> usize {
    let total = *cdf.last().expect("empty distribution");
    let u: f64 = rng.gen::<f64>() * total;
    let idx = cdf.partition_point(|&c| c <= u);
    if idx < cdf.len() {
        idx
    } else {
        let mut last = cdf.len() - 1;
        while last > 0 && cdf[last] == cdf[last - 1] {
            last -= 1;
        }
        last
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn x() -> UnitaryMatrix {
        UnitaryMatrix::new(2, vec![ZERO, ONE, ONE, ZERO]).unwrap()
    }

    #[test]
    fn init_zero_sets_first_amplitude() {
        assert_eq!(
            StateVector::init_zero(1).unwrap().amplitudes(),
            &[ONE, ZERO]
        );
        assert_eq!(
            StateVector::init_zero(2).unwrap().amplitudes(),
            &[ONE, ZERO, ZERO, ZERO]
        );
    }

    #[test]
    fn init_zero_rejects_out_of_range() {
        assert_eq!(
            StateVector::init_zero(21),
            Err(Error::Capacity {
                requested: 21,
                max: 20
            })
        );
        assert!(StateVector::init_zero(0).is_err());
        assert!(StateVector::init_zero_with_capacity(21, 21).is_ok());
    }

    #[test]
    fn bit_order_convention() {
        // qubit 0 is the most significant bit and the leftmost label character
        let mut s = StateVector::init_zero(2).unwrap();
        s.apply_single(1, &x()).unwrap();
        assert_eq!(s.probabilities(), vec![0.0, 1.0, 0.0, 0.0]);
        assert_eq!(basis_label(1, 2), "01");

        let mut s = StateVector::init_zero(3).unwrap();
        s.apply_single(0, &x()).unwrap();
        assert_eq!(s.probabilities()[0b100], 1.0);
        assert_eq!(basis_label(4, 3), "100");
        assert_eq!(parse_basis_label("100").unwrap(), 4);
        assert!(qubit_bit(4, 0, 3));
    }

    #[test]
    fn identity_leaves_state() {
        let mut s = StateVector::init_zero(1).unwrap();
        s.apply_single(0, &UnitaryMatrix::identity(2)).unwrap();
        assert_eq!(s, StateVector::init_zero(1).unwrap());
        let mut s = StateVector::init_zero(2).unwrap();
        s.apply_two(0, 1, &UnitaryMatrix::identity(4)).unwrap();
        assert_eq!(s, StateVector::init_zero(2).unwrap());
    }

    #[test]
    fn rejects_bad_arguments() {
        let mut s = StateVector::init_zero(2).unwrap();
        assert!(matches!(s.apply_single(2, &x()), Err(Error::Index(_))));
        assert!(matches!(
            s.apply_two(1, 1, &UnitaryMatrix::identity(4)),
            Err(Error::Index(_))
        ));
        let not_unitary = UnitaryMatrix::from_entries(2, vec![ONE, ONE, ZERO, ONE]);
        assert!(matches!(
            s.apply_single(0, &not_unitary),
            Err(Error::Validation(_))
        ));
        assert!(UnitaryMatrix::new(2, vec![ONE, ONE, ZERO, ONE]).is_err());
        // 1e-12 is the admission threshold
        let nearly = UnitaryMatrix::new(2, vec![c(1.0 + 1e-9, 0.0), ZERO, ZERO, ONE]);
        assert!(nearly.is_err());
    }

    #[test]
    fn two_qubit_order_follows_argument_order() {
        // CNOT with control = first argument
        let cnot = UnitaryMatrix::new(
            4,
            vec![
                ONE, ZERO, ZERO, ZERO, //
                ZERO, ONE, ZERO, ZERO, //
                ZERO, ZERO, ZERO, ONE, //
                ZERO, ZERO, ONE, ZERO,
            ],
        )
        .unwrap();
        let mut s = StateVector::basis(2, 0b10).unwrap();
        s.apply_two(0, 1, &cnot).unwrap();
        assert_eq!(s.probabilities()[0b11], 1.0);
        let mut s = StateVector::basis(2, 0b10).unwrap();
        s.apply_two(1, 0, &cnot).unwrap();
        assert_eq!(s.probabilities()[0b10], 1.0);
        let mut s = StateVector::basis(3, 0b001).unwrap();
        s.apply_two(2, 0, &cnot).unwrap();
        assert_eq!(s.probabilities()[0b101], 1.0);
    }

    #[test]
    fn probabilities_and_sampling() {
        let s = StateVector::basis(2, 0b11).unwrap();
        assert_eq!(s.probabilities(), vec![0.0, 0.0, 0.0, 1.0]);
        let s = StateVector::basis(2, 0b10).unwrap();
        assert_eq!(s.sample(500, 99), vec![0, 0, 500, 0]);

        let h = c(0.5, 0.0);
        let uniform = StateVector::from_amplitudes(vec![h; 4]).unwrap();
        assert_eq!(uniform.probabilities(), vec![0.25; 4]);
        assert_eq!(uniform.sample(1000, 5), uniform.sample(1000, 5));
        assert_eq!(uniform.sample(1000, 5).iter().sum::<u64>(), 1000);
    }

    #[test]
    fn sampling_converges() {
        let uniform = StateVector::from_amplitudes(vec![c(0.5, 0.0); 4]).unwrap();
        let shots = 1_000_000u64;
        for count in uniform.sample(shots, 2024) {
            let f = count as f64 / shots as f64;
            assert!((f - 0.25).abs() < 0.005, "frequency {f}");
            assert!((f - 0.25).abs() < 5.0 / (shots as f64).sqrt());
        }
    }

    #[test]
    fn purity_of_product_and_bell_states() {
        let s = StateVector::init_zero(2).unwrap();
        assert!((s.partial_trace_purity(&[0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((s.partial_trace_purity(&[1]).unwrap() - 1.0).abs() < 1e-12);
        let r = FRAC_1_SQRT_2;
        let bell = StateVector::from_amplitudes(vec![c(r, 0.0), ZERO, ZERO, c(0.0, -r)]).unwrap();
        assert!((bell.partial_trace_purity(&[0]).unwrap() - 0.5).abs() < 1e-12);
        assert!((bell.partial_trace_purity(&[1]).unwrap() - 0.5).abs() < 1e-12);
        assert!(bell.partial_trace_purity(&[]).is_err());
        assert!(bell.partial_trace_purity(&[0, 1]).is_err());
    }

    #[test]
    fn cdf_draw_skips_zero_weight_tail() {
        let cdf = cumulative(&[0.5, 0.5, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            assert!(draw_from_cdf(&cdf, &mut rng) < 2);
        }
    }
}
