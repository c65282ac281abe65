//! Eavesdropping strategies acting on qubits in transit.
//!
//! The adversary sees qubits in transmission order only. Whether a slot held a key qubit or a
//! decoy is learned afterwards from the public announcements, which is when the session files
//! her per-qubit effects under pair ids.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ProtocolError, Result};
use crate::qsim::{MeasurementBasis, QubitRole};
use crate::{Gate, Register};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryKind {
    None,
    InterceptResendRandomBasis,
    EntangleCnotAncilla,
    DosFlip,
    /// Targets rotation-based public keys; see [`crate::gmn`].
    GmnStateEstimation,
}

/// Quantum channels of one session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    /// Trent → Bob, private key `S_q` with decoys.
    KeyDistribution,
    /// Trent → Alice, public key `S_p^r` with decoys.
    PublicKeyIssue,
    /// Alice → Bob, ciphertext `L`.
    Ciphertext,
    /// Alice → Trent, returned public-key qubits.
    KeyReturn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversaryStrategy {
    pub kind: AdversaryKind,
    /// Independent per-qubit probability of acting on a transit qubit.
    pub attack_fraction: f64,
    /// Probability that an attacked qubit is flipped (`DosFlip` only).
    pub flip_probability: f64,
    /// Channels the strategy is active on.
    pub channels: BTreeSet<Channel>,
}

impl AdversaryStrategy {
    fn with(
        kind: AdversaryKind,
        attack_fraction: f64,
        flip_probability: f64,
        channels: &[Channel],
    ) -> Self {
        Self {
            kind,
            attack_fraction,
            flip_probability,
            channels: channels.iter().copied().collect(),
        }
    }

    pub fn none() -> Self {
        Self::with(AdversaryKind::None, 0.0, 0.0, &[])
    }

    /// Measures key-distribution qubits in a random conjugate basis and resends the result;
    /// Z-basis hits let her read the matching ciphertext bits.
    pub fn intercept(attack_fraction: f64) -> Self {
        Self::with(
            AdversaryKind::InterceptResendRandomBasis,
            attack_fraction,
            0.0,
            &[Channel::KeyDistribution, Channel::Ciphertext],
        )
    }

    /// Entangles an ancilla with private-key qubits in transit and later uses it to read the
    /// ciphertext.
    pub fn entangle(attack_fraction: f64) -> Self {
        Self::with(
            AdversaryKind::EntangleCnotAncilla,
            attack_fraction,
            0.0,
            &[Channel::KeyDistribution, Channel::Ciphertext],
        )
    }

    /// Flips ciphertext qubits without trying to read them. A flip is `XZ`, which complements
    /// Z- and X-basis states alike.
    pub fn dos(flip_probability: f64) -> Self {
        Self::with(
            AdversaryKind::DosFlip,
            1.0,
            flip_probability,
            &[Channel::Ciphertext],
        )
    }

    pub fn gmn_state_estimation() -> Self {
        Self::with(AdversaryKind::GmnStateEstimation, 1.0, 0.0, &[])
    }

    /// Replaces the set of channels the strategy acts on.
    pub fn on(mut self, channels: &[Channel]) -> Self {
        self.channels = channels.iter().copied().collect();
        self
    }

    pub fn targets(&self, channel: Channel) -> bool {
        self.kind != AdversaryKind::None && self.channels.contains(&channel)
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == AdversaryKind::GmnStateEstimation {
            return Err(ProtocolError::UnsupportedStrategy(self.kind));
        }
        for (name, value) in [
            ("attack_fraction", self.attack_fraction),
            ("flip_probability", self.flip_probability),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ProtocolError::InvalidConfig(format!(
                    "{name} = {value} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

impl Default for AdversaryStrategy {
    fn default() -> Self {
        Self::none()
    }
}

/// What the adversary did to one transit qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransitEffect {
    Untouched,
    /// Measured in Z (`x_basis = false`) or X and resent the observed basis vector.
    Measured {
        x_basis: bool,
        outcome: u8,
    },
    /// Attached an ancilla (at this register index) as CNOT target of the transit qubit.
    AncillaAttached(usize),
    Flipped,
}

/// Acts on the transit qubit `qubit` of `register`.
///
/// Every call consumes exactly three uniform draws from `rng` whatever the strategy decides, so
/// runs that differ only in `attack_fraction` stay coupled draw for draw.
pub fn adversary_transform<R: Rng + ?Sized>(
    strategy: &AdversaryStrategy,
    register: &mut Register,
    qubit: usize,
    rng: &mut R,
) -> Result<TransitEffect> {
    let attack_u: f64 = rng.random();
    let aux_a: f64 = rng.random();
    let aux_b: f64 = rng.random();
    let attacked = attack_u < strategy.attack_fraction;
    match strategy.kind {
        AdversaryKind::GmnStateEstimation => Err(ProtocolError::UnsupportedStrategy(strategy.kind)),
        AdversaryKind::None => Ok(TransitEffect::Untouched),
        _ if !attacked => Ok(TransitEffect::Untouched),
        AdversaryKind::InterceptResendRandomBasis => {
            let x_basis = aux_a < 0.5;
            let basis = if x_basis {
                MeasurementBasis::X
            } else {
                MeasurementBasis::Z
            };
            let outcome = register.measure_with_uniform(qubit, &basis, aux_b)?;
            Ok(TransitEffect::Measured { x_basis, outcome })
        }
        AdversaryKind::EntangleCnotAncilla => {
            let ancilla = register.append_qubit(0)?;
            register.set_role(ancilla, QubitRole::Ancilla)?;
            register.apply_cnot(qubit, ancilla)?;
            Ok(TransitEffect::AncillaAttached(ancilla))
        }
        AdversaryKind::DosFlip => {
            if aux_a < strategy.flip_probability {
                register.apply_single(&Gate::pauli_z(), qubit)?;
                register.apply_single(&Gate::pauli_x(), qubit)?;
                Ok(TransitEffect::Flipped)
            } else {
                Ok(TransitEffect::Untouched)
            }
        }
    }
}

/// What Eve has learned about each pair.
#[derive(Debug, Clone, Default)]
pub struct EveState {
    /// Register index of Eve's ancilla, per pair.
    pub ancillas: BTreeMap<super::PairId, usize>,
    /// Z value of the pair learned by intercept-resend.
    pub z_values: BTreeMap<super::PairId, u8>,
    pub attacked_qubits: usize,
    pub attacked_decoys: usize,
}

impl EveState {
    /// Files the effect Eve had on the key qubit of `pair`.
    pub fn record_key_effect(&mut self, pair: super::PairId, effect: TransitEffect) {
        match effect {
            TransitEffect::Untouched => return,
            TransitEffect::AncillaAttached(a) => {
                self.ancillas.entry(pair).or_insert(a);
            }
            TransitEffect::Measured {
                x_basis: false,
                outcome,
            } => {
                self.z_values.insert(pair, outcome);
            }
            TransitEffect::Measured { .. } | TransitEffect::Flipped => {}
        }
        self.attacked_qubits += 1;
    }

    pub fn record_decoy_effect(&mut self, effect: TransitEffect) {
        if effect != TransitEffect::Untouched {
            self.attacked_qubits += 1;
            self.attacked_decoys += 1;
        }
    }
}

/// Reads the ciphertext qubit `cipher` of `pair` through Eve's ancilla.
///
/// Applies `C_{a,l}`, which leaves `l` in `|m⟩` as a product state, reads it in Z, then applies
/// `C_{a,l}` again so the qubit forwarded to Bob is exactly what Alice sent. Consumes one draw.
pub fn eve_ancilla_decrypt<R: Rng + ?Sized>(
    eve: &EveState,
    pair: super::PairId,
    register: &mut Register,
    cipher: usize,
    rng: &mut R,
) -> Result<u8> {
    let &ancilla = eve
        .ancillas
        .get(&pair)
        .ok_or(ProtocolError::NoAncilla(pair))?;
    register.apply_cnot(ancilla, cipher)?;
    let bit = register.measure(cipher, &MeasurementBasis::Z, rng)?;
    register.apply_cnot(ancilla, cipher)?;
    Ok(bit)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_1_SQRT_2;

    use num_complex::Complex;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::super::decoy::{DecoyBasis, DecoySpec};
    use super::super::PairId;
    use super::*;

    fn ghz3() -> Register {
        let h = Complex::new(FRAC_1_SQRT_2, 0.0);
        let z = Complex::new(0.0, 0.0);
        Register::from_amplitudes(vec![h, z, z, z, z, z, z, h]).unwrap()
    }

    #[test]
    fn entangling_key_qubit_gives_ghz() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut pair = Register::bell_pair();
        let effect =
            adversary_transform(&AdversaryStrategy::entangle(1.0), &mut pair, 1, &mut rng).unwrap();
        assert_eq!(effect, TransitEffect::AncillaAttached(2));
        assert!(pair.max_deviation(&ghz3()).unwrap() < 1e-15);
    }

    #[test]
    fn entangling_plus_decoy_randomizes_x_outcome() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let spec = DecoySpec {
            position: 0,
            basis: DecoyBasis::X,
            bit: 0,
        };
        let mut decoy = spec.prepare();
        adversary_transform(&AdversaryStrategy::entangle(1.0), &mut decoy, 0, &mut rng).unwrap();
        assert!((decoy.fidelity(&Register::bell_pair()).unwrap() - 1.0).abs() < 1e-12);
        let (p0, p1) = decoy
            .outcome_probabilities(0, &MeasurementBasis::X)
            .unwrap();
        assert!((p0 - 0.5).abs() < 1e-12 && (p1 - 0.5).abs() < 1e-12);
    }

    /// Expected decoy error over the four preparations, computed from the post-attack state.
    fn analytic_decoy_error(strategy: &AdversaryStrategy) -> f64 {
        let mut total = 0.0;
        for basis in [DecoyBasis::Z, DecoyBasis::X] {
            for bit in 0..2u8 {
                let mut reg = DecoySpec {
                    position: 0,
                    basis,
                    bit,
                }
                .prepare();
                let mut rng = ChaCha8Rng::seed_from_u64(1);
                adversary_transform(strategy, &mut reg, 0, &mut rng).unwrap();
                let (p0, p1) = reg.outcome_probabilities(0, &basis.measurement()).unwrap();
                total += if bit == 0 { p1 } else { p0 };
            }
        }
        total / 4.0
    }

    #[test]
    fn entangle_decoy_error_is_one_quarter() {
        assert!((analytic_decoy_error(&AdversaryStrategy::entangle(1.0)) - 0.25).abs() < 1e-12);
        assert!(analytic_decoy_error(&AdversaryStrategy::entangle(0.0)).abs() < 1e-12);
    }

    #[test]
    fn intercept_decoy_error_is_one_quarter_by_enumeration() {
        // 4 prepared states × 2 Eve bases × 2 Eve outcomes, weighted by Born probabilities
        let mut total = 0.0;
        for basis in [DecoyBasis::Z, DecoyBasis::X] {
            for bit in 0..2u8 {
                for eve_basis in [DecoyBasis::Z, DecoyBasis::X] {
                    for eve_bit in 0..2u8 {
                        let prepared = DecoySpec {
                            position: 0,
                            basis,
                            bit,
                        }
                        .prepare();
                        let (e0, e1) = prepared
                            .outcome_probabilities(0, &eve_basis.measurement())
                            .unwrap();
                        let p_eve = if eve_bit == 0 { e0 } else { e1 };
                        let resent = DecoySpec {
                            position: 0,
                            basis: eve_basis,
                            bit: eve_bit,
                        }
                        .prepare();
                        let (b0, b1) = resent
                            .outcome_probabilities(0, &basis.measurement())
                            .unwrap();
                        let p_err = if bit == 0 { b1 } else { b0 };
                        total += 0.25 * 0.5 * p_eve * p_err;
                    }
                }
            }
        }
        assert!((total - 0.25).abs() < 1e-12);
    }

    #[test]
    fn dos_flip_complements_decoys() {
        for basis in [DecoyBasis::Z, DecoyBasis::X] {
            for bit in 0..2u8 {
                let mut reg = DecoySpec {
                    position: 0,
                    basis,
                    bit,
                }
                .prepare();
                let mut rng = ChaCha8Rng::seed_from_u64(2);
                let effect =
                    adversary_transform(&AdversaryStrategy::dos(1.0), &mut reg, 0, &mut rng)
                        .unwrap();
                assert_eq!(effect, TransitEffect::Flipped);
                let (p0, p1) = reg.outcome_probabilities(0, &basis.measurement()).unwrap();
                let p_err = if bit == 0 { p1 } else { p0 };
                assert!((p_err - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn none_leaves_register_and_consumes_three_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut twin = ChaCha8Rng::seed_from_u64(5);
        let mut reg = Register::bell_pair();
        let before = reg.clone();
        let effect =
            adversary_transform(&AdversaryStrategy::none(), &mut reg, 1, &mut rng).unwrap();
        assert_eq!(effect, TransitEffect::Untouched);
        assert_eq!(reg, before);
        for _ in 0..3 {
            let _: f64 = twin.random();
        }
        assert_eq!(rng.random::<u64>(), twin.random::<u64>());
    }

    #[test]
    fn gmn_strategy_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut reg = Register::bell_pair();
        let s = AdversaryStrategy::gmn_state_estimation();
        assert_eq!(
            adversary_transform(&s, &mut reg, 0, &mut rng),
            Err(ProtocolError::UnsupportedStrategy(
                AdversaryKind::GmnStateEstimation
            ))
        );
        assert!(s.validate().is_err());
        assert!(AdversaryStrategy::entangle(1.5).validate().is_err());
    }

    #[test]
    fn ancilla_read_out_recovers_plaintext_and_restores_ciphertext() {
        for m in 0..2u8 {
            let mut rng = ChaCha8Rng::seed_from_u64(u64::from(m));
            let mut reg = Register::bell_pair();
            let mut eve = EveState::default();
            let effect =
                adversary_transform(&AdversaryStrategy::entangle(1.0), &mut reg, 1, &mut rng)
                    .unwrap();
            eve.record_key_effect(PairId(0), effect);
            let l = reg.append_qubit(m).unwrap();
            reg.apply_cnot(0, l).unwrap();
            let sent = reg.clone();
            for _ in 0..20 {
                let mut copy = sent.clone();
                assert_eq!(
                    eve_ancilla_decrypt(&eve, PairId(0), &mut copy, l, &mut rng).unwrap(),
                    m
                );
                assert!(copy.max_deviation(&sent).unwrap() < 1e-12);
                // Bob's decryption then yields m with certainty
                copy.apply_cnot(1, l).unwrap();
                let (p0, p1) = copy.outcome_probabilities(l, &MeasurementBasis::Z).unwrap();
                assert!((if m == 0 { p0 } else { p1 } - 1.0).abs() < 1e-12);
            }
            assert_eq!(
                eve_ancilla_decrypt(&eve, PairId(1), &mut reg, l, &mut rng),
                Err(ProtocolError::NoAncilla(PairId(1)))
            );
        }
    }
}
