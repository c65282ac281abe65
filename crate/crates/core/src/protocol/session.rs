use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adversary::{
    adversary_transform, eve_ancilla_decrypt, AdversaryKind, AdversaryStrategy, Channel, EveState,
};
use super::config::SessionConfig;
use super::decoy::{draw_decoys, DecoyBasis, DecoyQubit};
use super::digest::{bits_to_u64, digest_bits, truncate, MessageDigest, TestDigest};
use super::store::{BellKeyStore, Lifecycle, PairId};
use super::{ProtocolError, Result};
use crate::qsim::{MeasurementBasis, QubitRole};
use crate::{Gate, Register};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    KeyGeneration,
    PublicKeyIssue,
    Encryption,
    Decryption,
    Recycling,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::KeyGeneration => "key_generation",
            Stage::PublicKeyIssue => "public_key_issue",
            Stage::Encryption => "encryption",
            Stage::Decryption => "decryption",
            Stage::Recycling => "recycling",
        }
    }
}

/// `splitmix64` finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trial `index` in a run seeded with `base`; independent of scheduling order.
pub fn session_seed(base: u64, index: u64) -> u64 {
    mix(base ^ mix(index))
}

/// Independent random streams of one session.
///
/// Honest parties, the eavesdropper and channel noise each draw from their own stream, so the
/// honest parties' draws do not depend on what the adversary does.
#[derive(Debug, Clone)]
pub struct SessionRngs {
    pub parties: ChaCha8Rng,
    pub eve: ChaCha8Rng,
    pub channel: ChaCha8Rng,
}

impl SessionRngs {
    pub fn from_seed(seed: u64) -> Self {
        let stream = |id: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(id);
            rng
        };
        Self {
            parties: stream(0),
            eve: stream(1),
            channel: stream(2),
        }
    }
}

/// Result of checking one batch of decoys.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoyCheck {
    pub decoys: usize,
    pub errors: usize,
    pub error_rate: f64,
    pub aborted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IssueReport {
    /// Pairs whose `p` halves Alice now holds, in message order.
    pub pairs: Vec<PairId>,
    pub check: DecoyCheck,
}

/// Ciphertext qubit `l_i`, stored in the register of the pair that encrypted it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CiphertextQubit {
    pub pair: PairId,
    pub qubit: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decryption {
    pub bits: Vec<u8>,
    /// `(p, q)` fidelity with `|Φ+⟩` after each decryption.
    pub bell_fidelities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecycleReport {
    pub tested: Vec<PairId>,
    pub errors: usize,
    pub error_rate: f64,
    pub passed: bool,
}

/// Eve's guess for one ciphertext bit; `informed` is false for blind guesses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EveBit {
    pub bit: u8,
    pub informed: bool,
}

/// Transcript of one protocol run. Fields of stages after an abort are empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionOutcome {
    pub aborted: Option<Stage>,
    pub stage_reached: Stage,
    pub decoy_error_rate_keygen: f64,
    pub decoy_error_rate_issue: Option<f64>,
    pub recycle_error_rate: Option<f64>,
    /// Recycling failure discards the returned keys; the delivered message stands.
    pub recycle_passed: Option<bool>,
    pub message: Vec<u8>,
    pub recovered_message: Vec<u8>,
    pub digest_ok: Option<bool>,
    /// Eve's reading of every ciphertext qubit (plaintext then digest).
    pub eve_bits: Vec<EveBit>,
    pub post_decrypt_bell_fidelities: Vec<f64>,
}

impl SessionOutcome {
    pub fn is_aborted(&self) -> bool {
        self.aborted.is_some()
    }

    pub fn message_ok(&self) -> bool {
        !self.is_aborted() && self.recovered_message == self.message
    }

    /// Fraction of plaintext bits Eve got right, when she read the ciphertext.
    pub fn eve_bit_accuracy(&self) -> Option<f64> {
        if self.eve_bits.is_empty() {
            return None;
        }
        let r = self.message.len();
        let correct = self
            .eve_bits
            .iter()
            .zip(&self.message)
            .filter(|(e, &m)| e.bit == m)
            .count();
        Some(correct as f64 / r as f64)
    }

    pub fn mean_bell_fidelity(&self) -> Option<f64> {
        let f = &self.post_decrypt_bell_fidelities;
        (!f.is_empty()).then(|| f.iter().sum::<f64>() / f.len() as f64)
    }
}

#[derive(Debug, Clone, Copy)]
enum Slot {
    Key(PairId, usize),
    Decoy(usize),
}

/// One Trent–Alice–Bob run with an eavesdropper on the quantum channels.
pub struct Session {
    config: SessionConfig,
    adversary: AdversaryStrategy,
    store: BellKeyStore,
    eve: EveState,
    rngs: SessionRngs,
    digest: Box<dyn MessageDigest + Send + Sync>,
    message: Vec<u8>,
}

impl Session {
    /// Validates the configuration, prepares `n` Bell pairs and fixes the plaintext.
    pub fn new(config: SessionConfig, adversary: AdversaryStrategy) -> Result<Self> {
        config.validate()?;
        adversary.validate()?;
        let mut rngs = SessionRngs::from_seed(config.seed);
        let message = match &config.message {
            Some(m) => m.clone(),
            None => (0..config.message_length)
                .map(|_| u8::from(rngs.parties.random_bool(0.5)))
                .collect(),
        };
        Ok(Self {
            store: BellKeyStore::generate(config.key_length),
            config,
            adversary,
            eve: EveState::default(),
            rngs,
            digest: Box::new(TestDigest),
            message,
        })
    }

    /// Swaps in a different public digest.
    pub fn with_digest(mut self, digest: Box<dyn MessageDigest + Send + Sync>) -> Self {
        self.digest = digest;
        self
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn store(&self) -> &BellKeyStore {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut BellKeyStore {
        &mut self.store
    }

    pub fn eve(&self) -> &EveState {
        &self.eve
    }

    pub fn message(&self) -> &[u8] {
        &self.message
    }

    /// Plaintext followed by its truncated digest.
    pub fn payload(&self) -> Vec<u8> {
        let width = self.config.digest_bits;
        let mut payload = self.message.clone();
        payload.extend(digest_bits(
            truncate(self.digest.digest(&self.message), width),
            width,
        ));
        payload
    }

    /// Sends key qubits interleaved with decoys through `channel`; returns the decoys after
    /// transit.
    fn transmit(
        &mut self,
        channel: Channel,
        keys: &[(PairId, usize)],
        decoy_count: usize,
    ) -> Result<Vec<DecoyQubit>> {
        let mut decoys = draw_decoys(keys.len(), decoy_count, &mut self.rngs.parties);
        let mut order = Vec::with_capacity(keys.len() + decoys.len());
        let (mut k, mut d) = (0, 0);
        for position in 0..keys.len() + decoys.len() {
            if d < decoys.len() && decoys[d].spec.position == position {
                order.push(Slot::Decoy(d));
                d += 1;
            } else {
                order.push(Slot::Key(keys[k].0, keys[k].1));
                k += 1;
            }
        }
        let attack = self.adversary.targets(channel);
        for slot in order {
            let (register, qubit) = match slot {
                Slot::Key(pair, qubit) => (&mut self.store.get_mut(pair)?.register, qubit),
                Slot::Decoy(i) => (&mut decoys[i].register, 0),
            };
            if attack {
                let effect =
                    adversary_transform(&self.adversary, register, qubit, &mut self.rngs.eve)?;
                match slot {
                    Slot::Key(pair, _) => self.eve.record_key_effect(pair, effect),
                    Slot::Decoy(_) => self.eve.record_decoy_effect(effect),
                }
            }
            apply_noise(&self.config, register, qubit, &mut self.rngs.channel)?;
        }
        Ok(decoys)
    }

    /// The receiver measures each decoy in its announced basis; the sender compares.
    fn check_decoys(&mut self, decoys: &mut [DecoyQubit]) -> Result<DecoyCheck> {
        let mut errors = 0;
        for decoy in decoys.iter_mut() {
            let basis = decoy.spec.basis.measurement();
            let bit = decoy.register.measure(0, &basis, &mut self.rngs.parties)?;
            errors += usize::from(bit != decoy.spec.bit);
        }
        let error_rate = errors as f64 / decoys.len() as f64;
        Ok(DecoyCheck {
            decoys: decoys.len(),
            errors,
            error_rate,
            aborted: error_rate > self.config.abort_threshold,
        })
    }

    /// Stage 1: the `q` halves of all fresh pairs go to Bob behind `k` decoys. On abort every
    /// pair involved is discarded.
    pub fn stage1_keygen(&mut self) -> Result<DecoyCheck> {
        let ids = self.store.ids_in(Lifecycle::Fresh);
        let keys: Vec<(PairId, usize)> = ids
            .iter()
            .map(|&id| self.store.get(id).map(|p| (id, p.q_index)))
            .collect::<Result<_>>()?;
        let mut decoys = self.transmit(Channel::KeyDistribution, &keys, self.config.decoys())?;
        let check = self.check_decoys(&mut decoys)?;
        if check.aborted {
            for id in ids {
                self.store.transition(id, Lifecycle::Discarded)?;
            }
        }
        Ok(check)
    }

    /// Stage 2, steps 1–2: the first `count` fresh `p` halves go to Alice behind fresh decoys.
    pub fn stage2_issue_public_key(&mut self, count: usize) -> Result<IssueReport> {
        let fresh = self.store.ids_in(Lifecycle::Fresh);
        if fresh.len() < count {
            return Err(ProtocolError::RefuelRequired {
                needed: count,
                available: fresh.len(),
            });
        }
        let pairs: Vec<PairId> = fresh.into_iter().take(count).collect();
        let mut keys = Vec::with_capacity(count);
        for &id in &pairs {
            self.store.transition(id, Lifecycle::Issued)?;
            keys.push((id, self.store.get(id)?.p_index));
        }
        let mut decoys = self.transmit(Channel::PublicKeyIssue, &keys, self.config.decoys())?;
        let check = self.check_decoys(&mut decoys)?;
        if check.aborted {
            for &id in &pairs {
                self.store.transition(id, Lifecycle::Discarded)?;
            }
        }
        Ok(IssueReport { pairs, check })
    }

    /// Stage 2, steps 3–4: `l_i = |m_i⟩` then `C_{p_i l_i}`.
    pub fn stage2_encrypt(
        &mut self,
        pairs: &[PairId],
        bits: &[u8],
    ) -> Result<Vec<CiphertextQubit>> {
        if pairs.len() != bits.len() {
            return Err(ProtocolError::LengthMismatch {
                expected: pairs.len(),
                got: bits.len(),
            });
        }
        let mut cipher = Vec::with_capacity(bits.len());
        for (&pair, &bit) in pairs.iter().zip(bits) {
            self.store.require(pair, Lifecycle::Issued)?;
            let key = self.store.get_mut(pair)?;
            let l = key.register.append_qubit(bit)?;
            key.register.set_role(l, QubitRole::Ciphertext)?;
            key.register.apply_cnot(key.p_index, l)?;
            cipher.push(CiphertextQubit { pair, qubit: l });
        }
        Ok(cipher)
    }

    /// Alice → Bob transit of the ciphertext. Returns Eve's reading of each qubit when the
    /// adversary listens on this channel.
    pub fn transmit_ciphertext(&mut self, cipher: &[CiphertextQubit]) -> Result<Vec<EveBit>> {
        let attack = self.adversary.targets(Channel::Ciphertext);
        let reads = matches!(
            self.adversary.kind,
            AdversaryKind::EntangleCnotAncilla | AdversaryKind::InterceptResendRandomBasis
        );
        let mut eve_bits = Vec::new();
        for c in cipher {
            let register = &mut self.store.get_mut(c.pair)?.register;
            if attack && reads {
                eve_bits.push(read_ciphertext(&self.eve, c, register, &mut self.rngs.eve)?);
            } else if attack {
                let effect =
                    adversary_transform(&self.adversary, register, c.qubit, &mut self.rngs.eve)?;
                if effect != super::TransitEffect::Untouched {
                    self.eve.attacked_qubits += 1;
                }
            }
            apply_noise(&self.config, register, c.qubit, &mut self.rngs.channel)?;
        }
        Ok(eve_bits)
    }

    /// Stage 3: `C_{q_i l_i}`, Z measurement of `l_i`, and removal of the measured qubit.
    pub fn stage3_decrypt(&mut self, cipher: &[CiphertextQubit]) -> Result<Decryption> {
        let mut bits = Vec::with_capacity(cipher.len());
        let mut bell_fidelities = Vec::with_capacity(cipher.len());
        for c in cipher {
            self.store.require(c.pair, Lifecycle::Issued)?;
            let key = self.store.get_mut(c.pair)?;
            if key.register.role(c.qubit) != Some(QubitRole::Ciphertext) {
                return Err(ProtocolError::UnknownPair(c.pair));
            }
            key.register.apply_cnot(key.q_index, c.qubit)?;
            let bit =
                key.register
                    .measure(c.qubit, &MeasurementBasis::Z, &mut self.rngs.parties)?;
            key.register.remove_classical_qubit(c.qubit)?;
            bits.push(bit);
            bell_fidelities.push(key.bell_fidelity());
        }
        Ok(Decryption {
            bits,
            bell_fidelities,
        })
    }

    /// Stage 4: Alice returns her `p` halves; Trent tests `⌈fraction·len⌉` of them against Bob's
    /// `q` halves in random conjugate bases. Tested pairs are consumed; the rest become fresh on
    /// success and are discarded otherwise.
    pub fn stage4_recycle(&mut self, pairs: &[PairId]) -> Result<RecycleReport> {
        let mut keys = Vec::with_capacity(pairs.len());
        for &id in pairs {
            keys.push((id, self.store.require(id, Lifecycle::Issued)?.p_index));
        }
        self.transmit(Channel::KeyReturn, &keys, 0)?;
        for &id in pairs {
            self.store.transition(id, Lifecycle::Recycled)?;
        }
        let test_count = ((self.config.recycle_test_fraction * pairs.len() as f64).ceil() as usize)
            .min(pairs.len());
        let mut picks =
            rand::seq::index::sample(&mut self.rngs.parties, pairs.len(), test_count).into_vec();
        picks.sort_unstable();
        let mut tested = Vec::with_capacity(test_count);
        let mut errors = 0;
        for i in picks {
            let id = pairs[i];
            let basis = DecoyBasis::random(&mut self.rngs.parties).measurement();
            let key = self.store.get_mut(id)?;
            let trent = key
                .register
                .measure(key.p_index, &basis, &mut self.rngs.parties)?;
            let bob = key
                .register
                .measure(key.q_index, &basis, &mut self.rngs.parties)?;
            errors += usize::from(trent != bob);
            self.store.transition(id, Lifecycle::Consumed)?;
            tested.push(id);
        }
        let error_rate = if test_count == 0 {
            0.0
        } else {
            errors as f64 / test_count as f64
        };
        let passed = error_rate <= self.config.abort_threshold;
        let next = if passed {
            Lifecycle::Fresh
        } else {
            Lifecycle::Discarded
        };
        for &id in pairs {
            if !tested.contains(&id) {
                self.store.transition(id, next)?;
            }
        }
        Ok(RecycleReport {
            tested,
            errors,
            error_rate,
            passed,
        })
    }

    /// Runs all four stages, stopping at the first abort.
    pub fn run(mut self) -> Result<SessionOutcome> {
        let mut outcome = SessionOutcome {
            aborted: None,
            stage_reached: Stage::KeyGeneration,
            decoy_error_rate_keygen: 0.0,
            decoy_error_rate_issue: None,
            recycle_error_rate: None,
            recycle_passed: None,
            message: self.message.clone(),
            recovered_message: Vec::new(),
            digest_ok: None,
            eve_bits: Vec::new(),
            post_decrypt_bell_fidelities: Vec::new(),
        };

        let keygen = self.stage1_keygen()?;
        outcome.decoy_error_rate_keygen = keygen.error_rate;
        if keygen.aborted {
            outcome.aborted = Some(Stage::KeyGeneration);
            return Ok(outcome);
        }

        let payload = self.payload();
        outcome.stage_reached = Stage::PublicKeyIssue;
        let issue = self.stage2_issue_public_key(payload.len())?;
        outcome.decoy_error_rate_issue = Some(issue.check.error_rate);
        if issue.check.aborted {
            outcome.aborted = Some(Stage::PublicKeyIssue);
            return Ok(outcome);
        }

        outcome.stage_reached = Stage::Encryption;
        let cipher = self.stage2_encrypt(&issue.pairs, &payload)?;
        outcome.eve_bits = self.transmit_ciphertext(&cipher)?;

        outcome.stage_reached = Stage::Decryption;
        let decryption = self.stage3_decrypt(&cipher)?;
        let r = self.config.message_length;
        let width = self.config.digest_bits;
        outcome.recovered_message = decryption.bits[..r].to_vec();
        if width > 0 {
            let expected = truncate(self.digest.digest(&outcome.recovered_message), width);
            outcome.digest_ok = Some(expected == bits_to_u64(&decryption.bits[r..]));
        }
        outcome.post_decrypt_bell_fidelities = decryption.bell_fidelities;

        outcome.stage_reached = Stage::Recycling;
        let recycle = self.stage4_recycle(&issue.pairs)?;
        outcome.recycle_error_rate = Some(recycle.error_rate);
        outcome.recycle_passed = Some(recycle.passed);
        Ok(outcome)
    }
}

/// Eve's read-out of one ciphertext qubit. Consumes two draws from `rng` in every branch.
fn read_ciphertext<R: Rng + ?Sized>(
    eve: &EveState,
    c: &CiphertextQubit,
    register: &mut Register,
    rng: &mut R,
) -> Result<EveBit> {
    let guess = u8::from(rng.random_bool(0.5));
    if eve.ancillas.contains_key(&c.pair) {
        let bit = eve_ancilla_decrypt(eve, c.pair, register, c.qubit, rng)?;
        return Ok(EveBit {
            bit,
            informed: true,
        });
    }
    if let Some(&z) = eve.z_values.get(&c.pair) {
        // the pair was projected onto |zz⟩, so l_i = |m_i ⊕ z⟩ is a product state
        let bit = register.measure(c.qubit, &MeasurementBasis::Z, rng)? ^ z;
        return Ok(EveBit {
            bit,
            informed: true,
        });
    }
    let _: f64 = rng.random();
    Ok(EveBit {
        bit: guess,
        informed: false,
    })
}

fn apply_noise<R: Rng + ?Sized>(
    config: &SessionConfig,
    register: &mut Register,
    qubit: usize,
    rng: &mut R,
) -> Result<()> {
    let Some(noise) = config.noise else {
        return Ok(());
    };
    let u: f64 = rng.random();
    let which = rng.random_range(0..4u8);
    if u < noise.depolarizing_probability {
        if which & 1 != 0 {
            register.apply_single(&Gate::pauli_z(), qubit)?;
        }
        if which & 2 != 0 {
            register.apply_single(&Gate::pauli_x(), qubit)?;
        }
    }
    Ok(())
}

/// Executes one full session seeded by `config.seed`.
pub fn run_session(
    config: &SessionConfig,
    adversary: &AdversaryStrategy,
) -> Result<SessionOutcome> {
    Session::new(config.clone(), adversary.clone())?.run()
}
