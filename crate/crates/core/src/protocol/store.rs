use serde::{Deserialize, Serialize};

use super::{ProtocolError, Result};
use crate::qsim::QubitRole;
use crate::Register;

/// Index of a pair in a [`BellKeyStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PairId(pub usize);

impl std::fmt::Display for PairId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "pair#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lifecycle {
    Fresh,
    Issued,
    Recycled,
    Consumed,
    Discarded,
}

impl Lifecycle {
    fn can_become(self, next: Lifecycle) -> bool {
        use Lifecycle::*;
        matches!(
            (self, next),
            (Fresh, Issued)
                | (Fresh, Discarded)
                | (Issued, Recycled)
                | (Issued, Discarded)
                | (Recycled, Fresh)
                | (Recycled, Consumed)
                | (Recycled, Discarded)
        )
    }
}

/// One `(p_i, q_i)` pair. Ancillas and ciphertext qubits that become entangled with the pair
/// are appended to the same register after `p` and `q`.
#[derive(Debug, Clone)]
pub struct KeyPair {
    pub id: PairId,
    pub register: Register,
    pub p_index: usize,
    pub q_index: usize,
    lifecycle: Lifecycle,
}

impl KeyPair {
    fn fresh(id: PairId) -> Self {
        let mut register = Register::bell_pair();
        register
            .set_role(0, QubitRole::PublicKey)
            .and_then(|_| register.set_role(1, QubitRole::PrivateKey))
            .expect("bell pair has two qubits");
        Self {
            id,
            register,
            p_index: 0,
            q_index: 1,
            lifecycle: Lifecycle::Fresh,
        }
    }

    pub fn lifecycle(&self) -> Lifecycle {
        self.lifecycle
    }

    /// Fidelity of the reduced `(p, q)` state with `|Φ+⟩`.
    pub fn bell_fidelity(&self) -> f64 {
        self.register
            .subsystem_fidelity(&[self.p_index, self.q_index], &Register::bell_pair())
            .expect("p and q are distinct qubits of the register")
    }
}

/// Trent's registry of Bell pairs backing Bob's public key `S_p` and private key `S_q`.
#[derive(Debug, Clone, Default)]
pub struct BellKeyStore {
    pairs: Vec<KeyPair>,
}

impl BellKeyStore {
    pub fn generate(count: usize) -> Self {
        let mut store = Self::default();
        store.refuel(count);
        store
    }

    /// Appends `count` freshly prepared pairs and returns their ids.
    pub fn refuel(&mut self, count: usize) -> Vec<PairId> {
        let start = self.pairs.len();
        self.pairs
            .extend((start..start + count).map(|i| KeyPair::fresh(PairId(i))));
        (start..start + count).map(PairId).collect()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[KeyPair] {
        &self.pairs
    }

    pub fn get(&self, id: PairId) -> Result<&KeyPair> {
        self.pairs.get(id.0).ok_or(ProtocolError::UnknownPair(id))
    }

    pub fn get_mut(&mut self, id: PairId) -> Result<&mut KeyPair> {
        self.pairs
            .get_mut(id.0)
            .ok_or(ProtocolError::UnknownPair(id))
    }

    pub fn ids_in(&self, state: Lifecycle) -> Vec<PairId> {
        self.pairs
            .iter()
            .filter(|p| p.lifecycle == state)
            .map(|p| p.id)
            .collect()
    }

    pub fn count_in(&self, state: Lifecycle) -> usize {
        self.pairs.iter().filter(|p| p.lifecycle == state).count()
    }

    pub fn transition(&mut self, id: PairId, next: Lifecycle) -> Result<()> {
        let pair = self.get_mut(id)?;
        if !pair.lifecycle.can_become(next) {
            return Err(ProtocolError::IllegalTransition {
                pair: id,
                from: pair.lifecycle,
                to: next,
            });
        }
        pair.lifecycle = next;
        Ok(())
    }

    pub fn require(&self, id: PairId, state: Lifecycle) -> Result<&KeyPair> {
        let pair = self.get(id)?;
        if pair.lifecycle != state {
            return Err(ProtocolError::WrongLifecycle {
                pair: id,
                expected: state,
                found: pair.lifecycle,
            });
        }
        Ok(pair)
    }
}
