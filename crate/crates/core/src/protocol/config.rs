use serde::{Deserialize, Serialize};

use super::{ProtocolError, Result};

/// Independent depolarizing noise on every transit qubit: with probability
/// `depolarizing_probability` one of `{I, X, Z, XZ}` is applied, chosen uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub depolarizing_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    /// Number of Bell pairs `n` generated in key generation.
    pub key_length: usize,
    /// Decoys per protected transmission; `None` means `max(8, ⌈n/4⌉)`.
    pub decoy_count: Option<usize>,
    /// Plaintext length `r`.
    pub message_length: usize,
    /// Width of the digest appended to the plaintext; `r + digest_bits ≤ n`.
    pub digest_bits: u32,
    /// Fraction of returned public-key qubits Trent tests before recycling.
    pub recycle_test_fraction: f64,
    /// Largest tolerated decoy or recycle-test error rate.
    pub abort_threshold: f64,
    pub noise: Option<NoiseModel>,
    /// Fixed plaintext; drawn at random when absent.
    pub message: Option<Vec<u8>>,
    pub seed: u64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            key_length: 64,
            decoy_count: None,
            message_length: 32,
            digest_bits: 32,
            recycle_test_fraction: 0.25,
            abort_threshold: 0.0,
            noise: None,
            message: None,
            seed: 0,
        }
    }
}

impl SessionConfig {
    pub fn decoys(&self) -> usize {
        self.decoy_count
            .unwrap_or_else(|| 8.max(self.key_length.div_ceil(4)))
    }

    /// Qubits of public key Alice needs: plaintext plus digest.
    pub fn issued_length(&self) -> usize {
        self.message_length + self.digest_bits as usize
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(ProtocolError::InvalidConfig(msg));
        if self.key_length == 0 {
            return fail("key_length must be at least 1".into());
        }
        if self.decoys() == 0 {
            return fail("decoy_count must be at least 1".into());
        }
        if self.message_length == 0 {
            return fail("message_length must be at least 1".into());
        }
        if self.digest_bits > 64 {
            return fail(format!("digest_bits = {} exceeds 64", self.digest_bits));
        }
        if self.issued_length() > self.key_length {
            return fail(format!(
                "message_length + digest_bits = {} exceeds key_length = {}",
                self.issued_length(),
                self.key_length
            ));
        }
        if !(self.recycle_test_fraction > 0.0 && self.recycle_test_fraction < 1.0) {
            return fail(format!(
                "recycle_test_fraction = {} outside (0, 1)",
                self.recycle_test_fraction
            ));
        }
        if !(0.0..=1.0).contains(&self.abort_threshold) {
            return fail(format!(
                "abort_threshold = {} outside [0, 1]",
                self.abort_threshold
            ));
        }
        if let Some(noise) = self.noise {
            if !(0.0..=1.0).contains(&noise.depolarizing_probability) {
                return fail(format!(
                    "depolarizing_probability = {} outside [0, 1]",
                    noise.depolarizing_probability
                ));
            }
        }
        if let Some(message) = &self.message {
            if message.len() != self.message_length {
                return fail(format!(
                    "message has {} bits, message_length is {}",
                    message.len(),
                    self.message_length
                ));
            }
            if message.iter().any(|&b| b > 1) {
                return fail("message bits must be 0 or 1".into());
            }
        }
        Ok(())
    }
}
