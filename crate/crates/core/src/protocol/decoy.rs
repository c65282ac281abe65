use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::qsim::{MeasurementBasis, QubitRole};
use crate::{Gate, Register};

/// The two conjugate bases decoys are prepared and checked in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DecoyBasis {
    Z,
    X,
}

impl DecoyBasis {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        if rng.random_bool(0.5) {
            DecoyBasis::X
        } else {
            DecoyBasis::Z
        }
    }

    pub fn measurement(self) -> MeasurementBasis<f64> {
        match self {
            DecoyBasis::Z => MeasurementBasis::Z,
            DecoyBasis::X => MeasurementBasis::X,
        }
    }
}

/// Preparation record of one decoy: the basis vector for `bit` in `basis`, inserted at
/// `position` of the transmitted sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecoySpec {
    pub position: usize,
    pub basis: DecoyBasis,
    pub bit: u8,
}

impl DecoySpec {
    /// One of `|0⟩, |1⟩, |+⟩, |−⟩` (the last up to a global sign).
    pub fn prepare(&self) -> Register {
        let mut reg = Register::qubit(self.bit).expect("decoy bit is 0 or 1");
        if self.basis == DecoyBasis::X {
            reg.apply_single(
                &Gate::rotation(std::f64::consts::FRAC_PI_2).expect("finite"),
                0,
            )
            .expect("qubit 0 exists");
        }
        reg.set_role(0, QubitRole::Decoy).expect("qubit 0 exists");
        reg
    }
}

/// A decoy in flight, carrying its own register (plus any ancilla an attacker attached).
#[derive(Debug, Clone)]
pub struct DecoyQubit {
    pub spec: DecoySpec,
    pub register: Register,
}

/// Draws `count` decoys and scatters them over a sequence of `payload + count` slots.
pub fn draw_decoys<R: Rng + ?Sized>(payload: usize, count: usize, rng: &mut R) -> Vec<DecoyQubit> {
    let mut positions = rand::seq::index::sample(rng, payload + count, count).into_vec();
    positions.sort_unstable();
    positions
        .into_iter()
        .map(|position| {
            let basis = DecoyBasis::random(rng);
            let bit = u8::from(rng.random_bool(0.5));
            let spec = DecoySpec {
                position,
                basis,
                bit,
            };
            DecoyQubit {
                register: spec.prepare(),
                spec,
            }
        })
        .collect()
}
