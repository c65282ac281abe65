//! Desk-scale simulation of a quantum public-key cryptosystem whose keys are the two halves of
//! Bell pairs, together with the state-estimation attack on rotation-based public keys.
//!
//! * [`qsim`]: small pure-state simulator (planar rotations, CNOT, projective measurement).
//! * [`gmn`]: rotation-based key generation, the optimal-estimation fidelity bound and the
//!   estimate-measure-resend attack.
//! * [`protocol`]: the four-stage Bell-pair protocol with decoy qubits, digest check, key
//!   recycling and the eavesdropping strategies it is meant to catch.
//!
//! The simulator and closed-form attack formulas are generic over [`Scalar`]; the aliases
//! below fix them to `f64`, which is what the protocol layer uses.

pub mod gmn;
pub mod protocol;
pub mod qsim;
mod scalar;

pub use scalar::Scalar;

pub type Register = qsim::QuantumRegister<f64>;
pub type Gate = qsim::Unitary2<f64>;
pub type Basis = qsim::MeasurementBasis<f64>;
pub type GmnKeys = gmn::GmnKeyPair<f64>;
pub type Report = gmn::AttackReport<f64>;

pub type Register32 = qsim::QuantumRegister<f32>;
pub type Gate32 = qsim::Unitary2<f32>;
