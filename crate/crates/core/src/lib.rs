//! Numerical core for phase-matching quantum key distribution.
//!
//! * [`fock`]: state vectors on qudits and truncated optical modes.
//! * [`circuit`]: the entanglement-based encoding circuit and its readouts.
//! * [`rates`]: closed-form gains, phase-error bounds and key rates.
//! * [`sim`]: Monte Carlo protocol rounds with an optional beam-splitting
//!   eavesdropper.

pub mod circuit;
pub mod error;
pub mod fock;
pub mod rates;
pub mod sim;

pub use circuit::{CircuitParams, ParityRow, ParityTable};
pub use error::{Error, Result};
pub use fock::{CompositeState, MeasurementOutcome, SubsystemSpec};
pub use rates::{ChannelPoint, SweepRow};
pub use sim::{Adversary, ProtocolParams, RoundRecord, SimStats};
