//! Four-stage public-key protocol with Bell-pair keys.
//!
//! Trent prepares pairs `(p_i, q_i)` in `|Φ+⟩`, sends the `q` halves to Bob behind decoys, later
//! issues `p` halves to Alice behind fresh decoys. Alice encrypts bit `m_i` by `C_{p_i l_i}` on a
//! fresh `|m_i⟩`, Bob decrypts with `C_{q_i l_i}` and a Z measurement, and the returned `p` halves
//! are spot-checked in random conjugate bases before being reused.

mod adversary;
mod config;
mod decoy;
mod digest;
mod session;
mod store;

use thiserror::Error;

pub use adversary::{
    adversary_transform, eve_ancilla_decrypt, AdversaryKind, AdversaryStrategy, Channel, EveState,
    TransitEffect,
};
pub use config::{NoiseModel, SessionConfig};
pub use decoy::{draw_decoys, DecoyBasis, DecoyQubit, DecoySpec};
pub use digest::{bits_to_u64, digest_bits, test_digest, truncate, MessageDigest, TestDigest};
pub use session::{
    run_session, session_seed, CiphertextQubit, DecoyCheck, Decryption, EveBit, IssueReport,
    RecycleReport, Session, SessionOutcome, SessionRngs, Stage,
};
pub use store::{BellKeyStore, KeyPair, Lifecycle, PairId};

use crate::qsim::QsimError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("strategy {0:?} is not applicable to the Bell-pair protocol")]
    UnsupportedStrategy(AdversaryKind),
    #[error("refuel required: {needed} fresh pairs needed, {available} available")]
    RefuelRequired { needed: usize, available: usize },
    #[error("expected {expected} items, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("unknown {0}")]
    UnknownPair(PairId),
    #[error("{pair} is {found:?}, expected {expected:?}")]
    WrongLifecycle {
        pair: PairId,
        expected: Lifecycle,
        found: Lifecycle,
    },
    #[error("{pair} cannot move from {from:?} to {to:?}")]
    IllegalTransition {
        pair: PairId,
        from: Lifecycle,
        to: Lifecycle,
    },
    #[error("no ancilla entangled with {0}")]
    NoAncilla(PairId),
    #[error(transparent)]
    Qsim(#[from] QsimError),
}

pub type Result<T, E = ProtocolError> = std::result::Result<T, E>;
