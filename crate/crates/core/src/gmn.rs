//! Rotation-based public keys and the state-estimation attack against them.
//!
//! A public-key qubit is the planar state `R(s·θ_n)|0⟩` with `θ_n = π/2^(n−1)`; the private
//! key is the integer list `s`. An eavesdropper holding `M` copies of each public-key qubit
//! estimates it up to the optimal collective-measurement fidelity, then reads ciphertexts in
//! the estimated basis and resends what she saw.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qsim::{MeasurementBasis, QsimError, QuantumRegister, Unitary2};
use crate::scalar::Scalar;

/// Largest resolution exponent accepted by [`gmn_keygen`].
pub const MAX_RESOLUTION: u32 = 30;
/// Largest copy count accepted by [`optimal_fidelity_exact`].
pub const MAX_COPIES: u64 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GmnError {
    #[error("resolution exponent n = {0} outside [1, {MAX_RESOLUTION}]")]
    ResolutionOutOfRange(u32),
    #[error("key length must be at least 1")]
    EmptyKey,
    #[error("copy count M = {0} outside [1, {MAX_COPIES}]")]
    CopiesOutOfRange(u64),
    #[error("fidelity {value} outside {domain}")]
    FidelityOutOfRange { value: f64, domain: &'static str },
    #[error("message is empty")]
    EmptyMessage,
    #[error("trial count must be at least 1")]
    NoTrials,
    #[error("bit value {0} is not 0 or 1")]
    BadBit(u8),
    #[error(transparent)]
    Qsim(#[from] QsimError),
}

pub type Result<T, E = GmnError> = std::result::Result<T, E>;

/// Private integers `s` and the matching public-key qubits `R(s_j·θ_n)|0⟩`.
#[derive(Debug, Clone)]
pub struct GmnKeyPair<T: Scalar = f64> {
    resolution: u32,
    secret: Vec<u64>,
    theta: T,
    public_states: Vec<QuantumRegister<T>>,
}

impl<T: Scalar> GmnKeyPair<T> {
    /// Builds the key pair for explicit private integers.
    pub fn from_secret(resolution: u32, secret: Vec<u64>) -> Result<Self> {
        if resolution == 0 || resolution > MAX_RESOLUTION {
            return Err(GmnError::ResolutionOutOfRange(resolution));
        }
        if secret.is_empty() {
            return Err(GmnError::EmptyKey);
        }
        let theta = resolution_angle::<T>(resolution);
        let public_states = secret
            .iter()
            .map(|&s| {
                assert!(s < 1u64 << resolution, "secret integer {s} out of range");
                QuantumRegister::planar(T::lit(s as f64) * theta)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            resolution,
            secret,
            theta,
            public_states,
        })
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn secret(&self) -> &[u64] {
        &self.secret
    }

    /// `θ_n = π / 2^(n−1)`.
    pub fn theta(&self) -> T {
        self.theta
    }

    pub fn public_states(&self) -> &[QuantumRegister<T>] {
        &self.public_states
    }

    /// Rotation angle `s_j·θ_n` of public-key qubit `j`.
    pub fn key_angle(&self, j: usize) -> T {
        T::lit(self.secret[j] as f64) * self.theta
    }
}

/// `π / 2^(n−1)`.
pub fn resolution_angle<T: Scalar>(resolution: u32) -> T {
    T::PI() / T::lit((1u64 << (resolution - 1)) as f64)
}

/// Samples `count` private integers uniformly from `[0, 2^n)` and prepares the public states.
pub fn gmn_keygen<T: Scalar, R: Rng + ?Sized>(
    resolution: u32,
    count: usize,
    rng: &mut R,
) -> Result<GmnKeyPair<T>> {
    if resolution == 0 || resolution > MAX_RESOLUTION {
        return Err(GmnError::ResolutionOutOfRange(resolution));
    }
    if count == 0 {
        return Err(GmnError::EmptyKey);
    }
    let secret = (0..count)
        .map(|_| rng.random_range(0..1u64 << resolution))
        .collect();
    GmnKeyPair::from_secret(resolution, secret)
}

/// Bit 0 leaves the public state untouched; bit 1 applies the half-turn `R(π)`.
pub fn gmn_encrypt<T: Scalar>(
    public_state: &QuantumRegister<T>,
    bit: u8,
) -> Result<QuantumRegister<T>> {
    if public_state.num_qubits() != 1 {
        return Err(QsimError::DimensionMismatch {
            left: public_state.num_qubits(),
            right: 1,
        }
        .into());
    }
    let mut cipher = public_state.clone();
    match bit {
        0 => {}
        1 => cipher.apply_single(&Unitary2::rotation(T::PI())?, 0)?,
        b => return Err(GmnError::BadBit(b)),
    }
    Ok(cipher)
}

/// Measures the ciphertext in `{ψ_s, ψ_s^⊥}`; outcome 0 decodes to plaintext 0.
pub fn gmn_decrypt<T: Scalar, R: Rng + ?Sized>(
    cipher: &QuantumRegister<T>,
    secret: u64,
    theta: T,
    rng: &mut R,
) -> Result<u8> {
    let mut cipher = cipher.clone();
    let basis = MeasurementBasis::Planar(T::lit(secret as f64) * theta);
    Ok(cipher.measure(0, &basis, rng)?)
}

/// How the optimal estimation fidelity is evaluated from the copy count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FidelityMode {
    /// The full binomial sum.
    ExactSum,
    /// `1 − 1/(4M)`.
    Approximation,
}

/// `ln n! − (n + ½) ln n + n − ln √(2π)`, the Stirling remainder.
fn stirling_error<T: Scalar>(n: u64) -> T {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n == 0 {
        return T::zero();
    }
    if n <= 15 {
        let ln_fact = (2..=n).fold(T::zero(), |acc, k| acc + T::lit(k as f64).ln());
        let x = T::lit(n as f64);
        let ln_sqrt_2pi = T::lit(0.918_938_533_204_672_8);
        return ln_fact - (x + T::lit(0.5)) * x.ln() + x - ln_sqrt_2pi;
    }
    let x = T::lit(n as f64);
    let nn = x * x;
    let (s0, s1, s2, s3, s4) = (T::lit(S0), T::lit(S1), T::lit(S2), T::lit(S3), T::lit(S4));
    if n > 500 {
        (s0 - s1 / nn) / x
    } else if n > 80 {
        (s0 - (s1 - s2 / nn) / nn) / x
    } else if n > 35 {
        (s0 - (s1 - (s2 - s3 / nn) / nn) / nn) / x
    } else {
        (s0 - (s1 - (s2 - (s3 - s4 / nn) / nn) / nn) / nn) / x
    }
}

/// Deviance term `x ln(x/μ) + μ − x`, evaluated by series when `x ≈ μ`.
fn deviance<T: Scalar>(x: T, mean: T) -> T {
    let diff = x - mean;
    if diff.abs() < T::lit(0.1) * (x + mean) {
        let mut v = diff / (x + mean);
        let mut sum = diff * v;
        let mut term = T::lit(2.0) * x * v;
        v = v * v;
        for j in 1..1000 {
            term = term * v;
            let next = sum + term / T::lit((2 * j + 1) as f64);
            if next == sum {
                return next;
            }
            sum = next;
        }
        sum
    } else {
        x * (x / mean).ln() + mean - x
    }
}

/// `C(m, k) / 2^m` without forming the binomial coefficient.
fn fair_binomial_pmf<T: Scalar>(m: u64, k: u64) -> T {
    let half = T::lit(0.5);
    if k == 0 || k == m {
        return half.powi(m.min(i32::MAX as u64) as i32);
    }
    let (n, x, y) = (T::lit(m as f64), T::lit(k as f64), T::lit((m - k) as f64));
    let mean = n * half;
    let log_core = stirling_error::<T>(m)
        - stirling_error::<T>(k)
        - stirling_error::<T>(m - k)
        - deviance(x, mean)
        - deviance(y, mean);
    let log_spread = (T::lit(2.0) * T::PI()).ln() + x.ln() + (-x / n).ln_1p();
    (log_core - half * log_spread).exp()
}

/// Optimal planar-state estimation fidelity from `M` copies:
/// `½ + 2^−(M+1) Σ_{i<M} √(C(M,i)·C(M,i+1))`.
///
/// Each term is rewritten as `½·b_i·√((M−i)/(i+1))` with `b_i` the fair binomial pmf, which is
/// evaluated through Stirling remainders and deviance terms so the sum stays accurate for
/// large `M`. Terms more than twenty standard deviations from the centre are below `e^−200`
/// relative and skipped.
pub fn optimal_fidelity_exact<T: Scalar>(copies: u64) -> Result<T> {
    if copies == 0 || copies > MAX_COPIES {
        return Err(GmnError::CopiesOutOfRange(copies));
    }
    let m = copies;
    let centre = m as f64 / 2.0;
    let reach = 10.0 * (m as f64).sqrt() + 2.0;
    let lo = (centre - reach).floor().max(0.0) as u64;
    let hi = ((centre + reach).ceil() as u64).min(m - 1);
    let half = T::lit(0.5);
    let sum = (lo..=hi).fold(T::zero(), |acc, i| {
        let ratio = T::lit((m - i) as f64) / T::lit((i + 1) as f64);
        acc + fair_binomial_pmf::<T>(m, i) * ratio.sqrt()
    });
    Ok(half + half * sum)
}

/// `1 − 1/(4M)`.
pub fn optimal_fidelity_approx<T: Scalar>(copies: u64) -> T {
    T::one() - T::one() / (T::lit(4.0) * T::lit(copies as f64))
}

pub fn optimal_fidelity<T: Scalar>(copies: u64, mode: FidelityMode) -> Result<T> {
    match mode {
        FidelityMode::ExactSum => optimal_fidelity_exact(copies),
        FidelityMode::Approximation => {
            if copies == 0 {
                return Err(GmnError::CopiesOutOfRange(copies));
            }
            Ok(optimal_fidelity_approx(copies))
        }
    }
}

fn fidelity_error<T: Scalar>(value: T, domain: &'static str) -> GmnError {
    GmnError::FidelityOutOfRange {
        value: value.to_f64().unwrap_or(f64::NAN),
        domain,
    }
}

/// Probability that Alice's bit and Bob's bit differ after Eve resends: `2F(1−F)`.
pub fn error_probability<T: Scalar>(fidelity: T) -> Result<T> {
    if !(fidelity >= T::lit(0.5) && fidelity <= T::one()) {
        return Err(fidelity_error(fidelity, "[1/2, 1]"));
    }
    Ok(T::lit(2.0) * fidelity * (T::one() - fidelity))
}

/// Binary entropy in bits, with `h(0) = h(1) = 0`.
pub fn binary_entropy<T: Scalar>(p: T) -> T {
    let term = |x: T| {
        if x > T::zero() {
            -x * x.log2()
        } else {
            T::zero()
        }
    };
    term(p) + term(T::one() - p)
}

/// Eve's information about a plaintext bit, `1 − 2·h(F)` bits.
///
/// This is the reading that reproduces the published attack table; the printed closed form
/// carries the opposite sign on the entropy bracket and would exceed one bit. The value is
/// negative for `F` close to `½`; see [`AttackReport::eve_information_clamped`].
pub fn eve_information<T: Scalar>(fidelity: T) -> Result<T> {
    if !(fidelity > T::lit(0.5) && fidelity <= T::one()) {
        return Err(fidelity_error(fidelity, "(1/2, 1]"));
    }
    Ok(T::one() - T::lit(2.0) * binary_entropy(fidelity))
}

/// Closed-form and (optionally) simulated figures for one copy count.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackReport<T: Scalar = f64> {
    pub copies: u64,
    pub fidelity: T,
    pub eve_information: T,
    pub eve_information_clamped: T,
    pub error_probability: T,
    pub empirical: Option<EmpiricalAttack>,
}

impl<T: Scalar> AttackReport<T> {
    /// Closed-form row for a given fidelity.
    pub fn theory(copies: u64, fidelity: T) -> Result<Self> {
        let info = eve_information(fidelity)?;
        Ok(Self {
            copies,
            fidelity,
            eve_information: info,
            eve_information_clamped: info.max(T::zero()),
            error_probability: error_probability(fidelity)?,
            empirical: None,
        })
    }
}

/// Monte Carlo tallies of the intercept-resend attack.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmpiricalAttack {
    pub bit_trials: u64,
    /// Bits Eve read correctly from the ciphertext.
    pub eve_correct: u64,
    /// Bits Bob decrypted differently from Alice's plaintext.
    pub bob_errors: u64,
}

impl EmpiricalAttack {
    pub fn eve_accuracy(&self) -> f64 {
        self.eve_correct as f64 / self.bit_trials as f64
    }

    pub fn error_rate(&self) -> f64 {
        self.bob_errors as f64 / self.bit_trials as f64
    }

    pub fn merge(&mut self, other: &Self) {
        self.bit_trials += other.bit_trials;
        self.eve_correct += other.eve_correct;
        self.bob_errors += other.bob_errors;
    }
}

/// One closed-form row per copy count, in the order given.
pub fn table1_report<T: Scalar>(
    copies: &[u64],
    mode: FidelityMode,
) -> Result<Vec<AttackReport<T>>> {
    copies
        .iter()
        .map(|&k| AttackReport::theory(k, optimal_fidelity(k, mode)?))
        .collect()
}

/// Eve's guessed planar angle: `true_angle ± 2·arccos(√F)` with a uniformly random sign, so that
/// the guessed state overlaps the true one with fidelity exactly `F`.
pub fn estimated_state<T: Scalar, R: Rng + ?Sized>(
    true_angle: T,
    fidelity: T,
    rng: &mut R,
) -> Result<T> {
    if !(fidelity > T::lit(0.5) && fidelity <= T::one()) {
        return Err(fidelity_error(fidelity, "(1/2, 1]"));
    }
    let deviation = T::lit(2.0) * fidelity.sqrt().min(T::one()).acos();
    Ok(if rng.random_bool(0.5) {
        true_angle + deviation
    } else {
        true_angle - deviation
    })
}

/// Runs the estimate-measure-resend attack with Eve's estimate at `K` copies
/// (`F = 1 − 1/(4K)`).
pub fn simulate_state_estimation_attack<T: Scalar, R: Rng + ?Sized>(
    resolution: u32,
    copies: u64,
    message: &[u8],
    trials: u64,
    rng: &mut R,
) -> Result<AttackReport<T>> {
    if copies == 0 {
        return Err(GmnError::CopiesOutOfRange(copies));
    }
    let fidelity = optimal_fidelity_approx::<T>(copies);
    let tallies = simulate_with_fidelity(resolution, fidelity, message, trials, rng)?;
    let mut report = AttackReport::theory(copies, fidelity)?;
    report.empirical = Some(tallies);
    Ok(report)
}

/// Attack simulation at an explicitly injected estimation fidelity.
///
/// Per trial a fresh key of `message.len()` qubits is drawn; for each bit Eve picks her guessed
/// basis, Alice encrypts, Eve measures in the guessed basis and resends the basis vector she
/// observed, and Bob decrypts with the true key.
pub fn simulate_with_fidelity<T: Scalar, R: Rng + ?Sized>(
    resolution: u32,
    fidelity: T,
    message: &[u8],
    trials: u64,
    rng: &mut R,
) -> Result<EmpiricalAttack> {
    if message.is_empty() {
        return Err(GmnError::EmptyMessage);
    }
    if trials == 0 {
        return Err(GmnError::NoTrials);
    }
    if let Some(&b) = message.iter().find(|&&b| b > 1) {
        return Err(GmnError::BadBit(b));
    }
    let mut tallies = EmpiricalAttack::default();
    for _ in 0..trials {
        let key = gmn_keygen::<T, R>(resolution, message.len(), rng)?;
        for (j, &bit) in message.iter().enumerate() {
            let true_angle = key.key_angle(j);
            let guessed = estimated_state(true_angle, fidelity, rng)?;
            let mut cipher = gmn_encrypt(&key.public_states()[j], bit)?;
            let eve_bit = cipher.measure(0, &MeasurementBasis::Planar(guessed), rng)?;
            // the collapsed ciphertext is exactly the basis vector Eve resends
            let bob_bit = gmn_decrypt(&cipher, key.secret()[j], key.theta(), rng)?;
            tallies.bit_trials += 1;
            tallies.eve_correct += u64::from(eve_bit == bit);
            tallies.bob_errors += u64::from(bob_bit != bit);
        }
    }
    Ok(tallies)
}
