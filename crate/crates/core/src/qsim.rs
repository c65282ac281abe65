//! Minimal pure-state simulator.
//!
//! Registers are small (at most a handful of qubits), so every operation works directly on
//! the `2^n` amplitude vector. Qubit `0` is the leftmost symbol in ket notation and is
//! addressed by the most significant bit of the amplitude index.

use std::collections::BTreeMap;

use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

/// Largest register the simulator accepts.
pub const MAX_QUBITS: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QsimError {
    #[error("expected {expected} initial bits, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("register must hold between 1 and {MAX_QUBITS} qubits, got {0}")]
    BadQubitCount(usize),
    #[error("bit value {0} is not 0 or 1")]
    BadBit(u8),
    #[error("qubit {index} out of range for a {num_qubits}-qubit register")]
    QubitOutOfRange { index: usize, num_qubits: usize },
    #[error("control and target are both qubit {0}")]
    SameControlTarget(usize),
    #[error("duplicate qubit {0} in subsystem")]
    DuplicateQubit(usize),
    #[error("rotation angle is not finite")]
    NonFiniteAngle,
    #[error("amplitude vector of length {0} is not a power of two")]
    BadAmplitudeLength(usize),
    #[error("register is not normalized (norm^2 = {0})")]
    NotNormalized(f64),
    #[error("dimension mismatch: {left} vs {right} qubits")]
    DimensionMismatch { left: usize, right: usize },
    #[error("measurement branch has probability {0}, cannot renormalize")]
    DegenerateBranch(f64),
}

pub type Result<T, E = QsimError> = std::result::Result<T, E>;

/// Role tag attached to a qubit of a register, for transcripts and debugging.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QubitRole {
    PublicKey,
    PrivateKey,
    Ciphertext,
    Ancilla,
    Decoy,
}

/// 2x2 complex matrix acting on one qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary2<T: Scalar = f64> {
    m: [[Complex<T>; 2]; 2],
}

impl<T: Scalar> Unitary2<T> {
    pub fn from_matrix(m: [[Complex<T>; 2]; 2]) -> Self {
        Self { m }
    }

    fn real(m: [[T; 2]; 2]) -> Self {
        let c = |x: T| Complex::new(x, T::zero());
        Self {
            m: [[c(m[0][0]), c(m[0][1])], [c(m[1][0]), c(m[1][1])]],
        }
    }

    pub fn identity() -> Self {
        Self::real([[T::one(), T::zero()], [T::zero(), T::one()]])
    }

    pub fn pauli_x() -> Self {
        Self::real([[T::zero(), T::one()], [T::one(), T::zero()]])
    }

    pub fn pauli_z() -> Self {
        Self::real([[T::one(), T::zero()], [T::zero(), -T::one()]])
    }

    /// Planar rotation `R(θ) = [[cos θ/2, −sin θ/2], [sin θ/2, cos θ/2]]`.
    ///
    /// Rotates about the Bloch y-axis, so it keeps real states on the x–z plane and
    /// `R(a)·R(b) = R(a + b)`.
    pub fn rotation(theta: T) -> Result<Self> {
        if !theta.is_finite() {
            return Err(QsimError::NonFiniteAngle);
        }
        let half = theta / T::lit(2.0);
        let (s, c) = half.sin_cos();
        Ok(Self::real([[c, -s], [s, c]]))
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex<T> {
        self.m[row][col]
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.m;
        Self {
            m: [
                [m[0][0].conj(), m[1][0].conj()],
                [m[0][1].conj(), m[1][1].conj()],
            ],
        }
    }

    /// Matrix product `self · rhs`.
    pub fn compose(&self, rhs: &Self) -> Self {
        let mut out = [[Complex::new(T::zero(), T::zero()); 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = self.m[i][0] * rhs.m[0][j] + self.m[i][1] * rhs.m[1][j];
            }
        }
        Self { m: out }
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_deviation(&self, other: &Self) -> T {
        let mut worst = T::zero();
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((self.m[i][j] - other.m[i][j]).norm());
            }
        }
        worst
    }

    pub fn is_unitary(&self, tol: T) -> bool {
        self.adjoint()
            .compose(self)
            .max_deviation(&Self::identity())
            <= tol
    }
}

/// Projective measurement basis on the x–z plane.
///
/// `Planar(θ)` is `{ R(θ)|0⟩, R(θ)|1⟩ }`; `Z` and `X` coincide with `Planar(0)` and
/// `Planar(π/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MeasurementBasis<T: Scalar = f64> {
    Z,
    X,
    Planar(T),
}

impl<T: Scalar> MeasurementBasis<T> {
    pub fn angle(&self) -> T {
        match *self {
            MeasurementBasis::Z => T::zero(),
            MeasurementBasis::X => T::FRAC_PI_2(),
            MeasurementBasis::Planar(theta) => theta,
        }
    }

    /// Real components of the two basis vectors, `[outcome 0, outcome 1]`.
    pub fn vectors(&self) -> [[T; 2]; 2] {
        let (s, c) = (self.angle() / T::lit(2.0)).sin_cos();
        [[c, s], [-s, c]]
    }
}

/// Normalized pure state of a few qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumRegister<T: Scalar = f64> {
    num_qubits: usize,
    amplitudes: Vec<Complex<T>>,
    labels: BTreeMap<usize, QubitRole>,
}

impl<T: Scalar> QuantumRegister<T> {
    /// Computational basis state `|b_0 b_1 …⟩`.
    pub fn from_bits(num_qubits: usize, bits: &[u8]) -> Result<Self> {
        if bits.len() != num_qubits {
            return Err(QsimError::LengthMismatch {
                expected: num_qubits,
                got: bits.len(),
            });
        }
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(QsimError::BadQubitCount(num_qubits));
        }
        let mut index = 0usize;
        for &b in bits {
            if b > 1 {
                return Err(QsimError::BadBit(b));
            }
            index = (index << 1) | b as usize;
        }
        let mut amplitudes = vec![Complex::new(T::zero(), T::zero()); 1 << num_qubits];
        amplitudes[index] = Complex::new(T::one(), T::zero());
        Ok(Self {
            num_qubits,
            amplitudes,
            labels: BTreeMap::new(),
        })
    }

    /// Single-qubit basis state `|bit⟩`.
    pub fn qubit(bit: u8) -> Result<Self> {
        Self::from_bits(1, &[bit])
    }

    pub fn from_amplitudes(amplitudes: Vec<Complex<T>>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(QsimError::BadAmplitudeLength(len));
        }
        let num_qubits = len.trailing_zeros() as usize;
        if num_qubits > MAX_QUBITS {
            return Err(QsimError::BadQubitCount(num_qubits));
        }
        let reg = Self {
            num_qubits,
            amplitudes,
            labels: BTreeMap::new(),
        };
        let norm = reg.norm_sqr();
        if !norm.is_finite() || (norm - T::one()).abs() > T::norm_tolerance() {
            return Err(QsimError::NotNormalized(norm.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(reg)
    }

    /// `(|00⟩ + |11⟩)/√2`.
    pub fn bell_pair() -> Self {
        let h = Complex::new(T::FRAC_1_SQRT_2(), T::zero());
        let z = Complex::new(T::zero(), T::zero());
        Self {
            num_qubits: 2,
            amplitudes: vec![h, z, z, h],
            labels: BTreeMap::new(),
        }
    }

    /// `R(θ)|0⟩`, the planar state at angle `θ`.
    pub fn planar(theta: T) -> Result<Self> {
        let mut reg = Self::qubit(0)?;
        reg.apply_single(&Unitary2::rotation(theta)?, 0)?;
        Ok(reg)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> T {
        self.amplitudes
            .iter()
            .fold(T::zero(), |acc, a| acc + a.norm_sqr())
    }

    pub fn set_role(&mut self, q: usize, role: QubitRole) -> Result<()> {
        self.check_qubit(q)?;
        self.labels.insert(q, role);
        Ok(())
    }

    pub fn role(&self, q: usize) -> Option<QubitRole> {
        self.labels.get(&q).copied()
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.num_qubits {
            Err(QsimError::QubitOutOfRange {
                index: q,
                num_qubits: self.num_qubits,
            })
        } else {
            Ok(())
        }
    }

    fn mask(&self, q: usize) -> usize {
        1 << (self.num_qubits - 1 - q)
    }

    /// Applies `u` to qubit `q`, identity elsewhere.
    pub fn apply_single(&mut self, u: &Unitary2<T>, q: usize) -> Result<()> {
        self.check_qubit(q)?;
        let mask = self.mask(q);
        for i0 in (0..self.amplitudes.len()).filter(|i| i & mask == 0) {
            let i1 = i0 | mask;
            let (a0, a1) = (self.amplitudes[i0], self.amplitudes[i1]);
            self.amplitudes[i0] = u.m[0][0] * a0 + u.m[0][1] * a1;
            self.amplitudes[i1] = u.m[1][0] * a0 + u.m[1][1] * a1;
        }
        Ok(())
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(QsimError::SameControlTarget(control));
        }
        let (cm, tm) = (self.mask(control), self.mask(target));
        for i in 0..self.amplitudes.len() {
            if i & cm != 0 && i & tm == 0 {
                self.amplitudes.swap(i, i | tm);
            }
        }
        Ok(())
    }

    /// Tensors a fresh `|bit⟩` onto the right end of the register and returns its index.
    pub fn append_qubit(&mut self, bit: u8) -> Result<usize> {
        if bit > 1 {
            return Err(QsimError::BadBit(bit));
        }
        if self.num_qubits + 1 > MAX_QUBITS {
            return Err(QsimError::BadQubitCount(self.num_qubits + 1));
        }
        let zero = Complex::new(T::zero(), T::zero());
        let mut amplitudes = vec![zero; self.amplitudes.len() * 2];
        for (i, a) in self.amplitudes.iter().enumerate() {
            amplitudes[(i << 1) | bit as usize] = *a;
        }
        self.amplitudes = amplitudes;
        self.num_qubits += 1;
        Ok(self.num_qubits - 1)
    }

    /// Removes qubit `q`, which must be in a Z basis state unentangled with the rest (as it is
    /// right after a Z measurement), and returns its value. Higher qubits shift down by one.
    pub fn remove_classical_qubit(&mut self, q: usize) -> Result<u8> {
        let (p0, p1) = self.outcome_probabilities(q, &MeasurementBasis::Z)?;
        let bit = if p1 <= T::norm_tolerance() {
            0
        } else if p0 <= T::norm_tolerance() {
            1
        } else {
            return Err(QsimError::DegenerateBranch(
                p0.min(p1).to_f64().unwrap_or(f64::NAN),
            ));
        };
        if self.num_qubits == 1 {
            return Err(QsimError::BadQubitCount(0));
        }
        let mask = self.mask(q);
        let high = !(mask | (mask - 1));
        let low = mask - 1;
        let mut amplitudes = vec![Complex::new(T::zero(), T::zero()); self.amplitudes.len() / 2];
        for (i, a) in self.amplitudes.iter().enumerate() {
            if (i & mask != 0) == (bit == 1) {
                amplitudes[((i & high) >> 1) | (i & low)] = *a;
            }
        }
        self.amplitudes = amplitudes;
        self.num_qubits -= 1;
        self.labels = std::mem::take(&mut self.labels)
            .into_iter()
            .filter(|&(k, _)| k != q)
            .map(|(k, r)| (if k > q { k - 1 } else { k }, r))
            .collect();
        Ok(bit)
    }

    /// `self ⊗ other`; qubits of `other` follow those of `self`.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let num_qubits = self.num_qubits + other.num_qubits;
        if num_qubits > MAX_QUBITS {
            return Err(QsimError::BadQubitCount(num_qubits));
        }
        let mut amplitudes = Vec::with_capacity(1 << num_qubits);
        for a in &self.amplitudes {
            amplitudes.extend(other.amplitudes.iter().map(|b| *a * *b));
        }
        let mut labels = self.labels.clone();
        labels.extend(other.labels.iter().map(|(&q, &r)| (q + self.num_qubits, r)));
        Ok(Self {
            num_qubits,
            amplitudes,
            labels,
        })
    }

    /// Components of every amplitude pair along the two basis vectors of `basis` on `q`.
    fn projected(&self, q: usize, basis: &MeasurementBasis<T>) -> (T, T) {
        let [b0, b1] = basis.vectors();
        let mask = self.mask(q);
        let mut p = (T::zero(), T::zero());
        for i0 in (0..self.amplitudes.len()).filter(|i| i & mask == 0) {
            let (a0, a1) = (self.amplitudes[i0], self.amplitudes[i0 | mask]);
            p.0 = p.0 + (a0 * b0[0] + a1 * b0[1]).norm_sqr();
            p.1 = p.1 + (a0 * b1[0] + a1 * b1[1]).norm_sqr();
        }
        p
    }

    /// Probabilities of outcomes 0 and 1 when measuring qubit `q` in `basis`.
    pub fn outcome_probabilities(&self, q: usize, basis: &MeasurementBasis<T>) -> Result<(T, T)> {
        self.check_qubit(q)?;
        Ok(self.projected(q, basis))
    }

    /// Measures qubit `q`, consuming exactly one uniform draw from `rng`.
    pub fn measure<R: Rng + ?Sized>(
        &mut self,
        q: usize,
        basis: &MeasurementBasis<T>,
        rng: &mut R,
    ) -> Result<u8> {
        let u = T::lit(rng.random::<f64>());
        self.measure_with_uniform(q, basis, u)
    }

    /// Measures qubit `q` using a caller-supplied uniform variate `u ∈ [0, 1)`.
    ///
    /// Outcome 0 is selected when `u < p0`. The qubit is left in the selected basis vector and
    /// the register is renormalized.
    pub fn measure_with_uniform(
        &mut self,
        q: usize,
        basis: &MeasurementBasis<T>,
        u: T,
    ) -> Result<u8> {
        self.check_qubit(q)?;
        let (p0, p1) = self.projected(q, basis);
        let floor = T::lit(1e-15);
        let mut outcome = if u < p0 { 0 } else { 1 };
        // a numerically-zero branch can only be hit through rounding of u against p0
        if outcome == 1 && p1 < floor {
            outcome = 0;
        } else if outcome == 0 && p0 < floor {
            outcome = 1;
        }
        let prob = if outcome == 0 { p0 } else { p1 };
        if prob < floor {
            return Err(QsimError::DegenerateBranch(prob.to_f64().unwrap_or(0.0)));
        }
        let v = basis.vectors()[outcome as usize];
        let scale = T::one() / prob.sqrt();
        let mask = self.mask(q);
        for i0 in (0..self.amplitudes.len()).filter(|i| i & mask == 0) {
            let i1 = i0 | mask;
            let c = (self.amplitudes[i0] * v[0] + self.amplitudes[i1] * v[1]) * scale;
            self.amplitudes[i0] = c * v[0];
            self.amplitudes[i1] = c * v[1];
        }
        Ok(outcome)
    }

    /// `⟨reference|self⟩`.
    pub fn inner_product(&self, reference: &Self) -> Result<Complex<T>> {
        if self.num_qubits != reference.num_qubits {
            return Err(QsimError::DimensionMismatch {
                left: self.num_qubits,
                right: reference.num_qubits,
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&reference.amplitudes)
            .fold(Complex::new(T::zero(), T::zero()), |acc, (a, r)| {
                acc + r.conj() * *a
            }))
    }

    /// `|⟨reference|self⟩|²`.
    pub fn fidelity(&self, reference: &Self) -> Result<T> {
        Ok(self.inner_product(reference)?.norm_sqr())
    }

    /// `⟨target|ρ_S|target⟩` where `ρ_S` is the reduced state of `qubits` (in the given order).
    pub fn subsystem_fidelity(&self, qubits: &[usize], target: &Self) -> Result<T> {
        if qubits.len() != target.num_qubits {
            return Err(QsimError::DimensionMismatch {
                left: qubits.len(),
                right: target.num_qubits,
            });
        }
        let mut selected = 0usize;
        for &q in qubits {
            self.check_qubit(q)?;
            let m = self.mask(q);
            if selected & m != 0 {
                return Err(QsimError::DuplicateQubit(q));
            }
            selected |= m;
        }
        let env_bits: Vec<usize> = (0..self.num_qubits)
            .map(|q| self.mask(q))
            .filter(|m| selected & m == 0)
            .collect();
        let zero = Complex::new(T::zero(), T::zero());
        let mut overlaps = vec![zero; 1 << env_bits.len()];
        for (i, a) in self.amplitudes.iter().enumerate() {
            let sub = qubits.iter().fold(0usize, |acc, &q| {
                (acc << 1) | usize::from(i & self.mask(q) != 0)
            });
            let env = env_bits
                .iter()
                .fold(0usize, |acc, &m| (acc << 1) | usize::from(i & m != 0));
            overlaps[env] = overlaps[env] + target.amplitudes[sub].conj() * *a;
        }
        Ok(overlaps.iter().fold(T::zero(), |acc, o| acc + o.norm_sqr()))
    }

    /// Largest entrywise modulus of the amplitude difference.
    pub fn max_deviation(&self, other: &Self) -> Result<T> {
        if self.num_qubits != other.num_qubits {
            return Err(QsimError::DimensionMismatch {
                left: self.num_qubits,
                right: other.num_qubits,
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .fold(T::zero(), |acc, (a, b)| acc.max((*a - *b).norm())))
    }
}
