//! Dense state vectors over tensor products of qudits and photon-number
//! truncated optical modes.
//!
//! Subsystems are ordered as given; the first subsystem is the most
//! significant digit of the flat basis index. All operations take states by
//! reference and return new states.

mod dd;
mod gates;
pub(crate) mod measure;
pub mod scalar;
mod states;

use std::io::{self, Write};

pub use dd::Dd;
use num_complex::Complex64;

use crate::error::{Error, Result};
pub use gates::{beam_splitter, controlled_minus, controlled_phase, inverse_qft, phase_shift, qft};
pub use measure::{
    collapse, fidelity, infidelity, inner_product, measure, total_photon_projector, Basis,
    MeasurementOutcome,
};
use scalar::{amp_zero, dd, norm_sqr, scale, to_c64};
pub use scalar::{Amplitude, Angle};
pub use states::{
    coherent_state, fock_state, pseudo_fock, qubit_plus, qudit_basis, qudit_plus, tensor,
};

/// Relative tolerance on the cached squared norm.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// Branches with probability below this are treated as empty.
pub const ZERO_BRANCH: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SubsystemKind {
    Qudit,
    /// Optical mode truncated at `dimension - 1` photons.
    Mode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SubsystemSpec {
    kind: SubsystemKind,
    dimension: usize,
}

impl SubsystemSpec {
    pub fn qudit(d: usize) -> Self {
        assert!(d >= 2, "a qudit needs d >= 2, got {d}");
        SubsystemSpec {
            kind: SubsystemKind::Qudit,
            dimension: d,
        }
    }

    pub fn qubit() -> Self {
        Self::qudit(2)
    }

    pub fn mode(cutoff: usize) -> Self {
        SubsystemSpec {
            kind: SubsystemKind::Mode,
            dimension: cutoff + 1,
        }
    }

    pub fn kind(&self) -> SubsystemKind {
        self.kind
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn is_mode(&self) -> bool {
        self.kind == SubsystemKind::Mode
    }

    pub fn is_qudit(&self) -> bool {
        self.kind == SubsystemKind::Qudit
    }

    /// Largest representable photon number, for modes.
    pub fn cutoff(&self) -> Option<usize> {
        self.is_mode().then(|| self.dimension - 1)
    }
}

/// A (possibly unnormalised) pure state on an ordered tensor product.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeState {
    specs: Vec<SubsystemSpec>,
    amps: Vec<Amplitude>,
    norm_sq: Dd,
    tail_mass: f64,
    zero_branch: bool,
}

impl CompositeState {
    /// Build a state from raw amplitudes. No normalisation is applied.
    pub fn from_amplitudes(specs: Vec<SubsystemSpec>, amps: Vec<Amplitude>) -> Result<Self> {
        let len: usize = specs.iter().map(|s| s.dimension).product();
        if specs.is_empty() || amps.len() != len {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for a space of dimension {len}",
                amps.len()
            )));
        }
        Ok(Self::raw(specs, amps))
    }

    pub fn from_c64(specs: Vec<SubsystemSpec>, amps: &[Complex64]) -> Result<Self> {
        Self::from_amplitudes(specs, amps.iter().map(|&z| scalar::from_c64(z)).collect())
    }

    pub(crate) fn raw(specs: Vec<SubsystemSpec>, amps: Vec<Amplitude>) -> Self {
        let norm_sq = amps.iter().map(norm_sqr).fold(dd(0.0), |a, b| a + b);
        CompositeState {
            specs,
            amps,
            norm_sq,
            tail_mass: 0.0,
            zero_branch: false,
        }
    }

    /// The empty branch of a post-selection that had (numerically) zero weight.
    pub(crate) fn zero_branch(specs: Vec<SubsystemSpec>) -> Self {
        let len = specs.iter().map(|s| s.dimension).product();
        CompositeState {
            specs,
            amps: vec![amp_zero(); len],
            norm_sq: dd(0.0),
            tail_mass: 0.0,
            zero_branch: true,
        }
    }

    pub(crate) fn with_tail_mass(mut self, tail: f64) -> Self {
        self.tail_mass = tail;
        self
    }

    /// Rescale to unit norm. Zero states are returned flagged as empty.
    pub fn normalized(&self) -> Self {
        let n = self.norm_sq.hi();
        if n <= 0.0 || !n.is_finite() {
            return Self::zero_branch(self.specs.clone());
        }
        let inv = dd(1.0) / scalar::sqrt(self.norm_sq);
        let amps = self.amps.iter().map(|&a| scale(a, inv)).collect();
        let mut out = Self::raw(self.specs.clone(), amps);
        out.tail_mass = self.tail_mass;
        out
    }

    pub fn specs(&self) -> &[SubsystemSpec] {
        &self.specs
    }

    pub fn spec(&self, index: usize) -> Result<SubsystemSpec> {
        self.specs
            .get(index)
            .copied()
            .ok_or_else(|| Error::Index(format!("subsystem {index} of {}", self.specs.len())))
    }

    pub fn amplitudes(&self) -> &[Amplitude] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        to_c64(self.amps[index])
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn norm_sq(&self) -> f64 {
        self.norm_sq.into()
    }

    pub(crate) fn norm_sq_dd(&self) -> Dd {
        self.norm_sq
    }

    /// Probability mass lost to photon-number truncation when the state was built.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// True for the flagged empty branch of a zero-probability post-selection.
    pub fn is_zero_branch(&self) -> bool {
        self.zero_branch
    }

    pub fn dims(&self) -> Vec<usize> {
        self.specs.iter().map(|s| s.dimension).collect()
    }

    pub(crate) fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.specs.len()];
        for i in (0..self.specs.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.specs[i + 1].dimension;
        }
        strides
    }

    /// Per-subsystem digits of a flat basis index.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.specs.len()];
        for (i, s) in self.specs.iter().enumerate().rev() {
            out[i] = index % s.dimension;
            index /= s.dimension;
        }
        out
    }

    pub fn index_of(&self, digits: &[usize]) -> usize {
        digits
            .iter()
            .zip(&self.specs)
            .fold(0, |acc, (&d, s)| acc * s.dimension + d)
    }

    /// Probability of each value of one subsystem (computational basis).
    pub fn marginal(&self, index: usize) -> Result<Vec<f64>> {
        let spec = self.spec(index)?;
        let stride = self.strides()[index];
        let mut acc = vec![dd(0.0); spec.dimension];
        for (i, a) in self.amps.iter().enumerate() {
            acc[(i / stride) % spec.dimension] += norm_sqr(a);
        }
        Ok(acc
            .into_iter()
            .map(|p| f64::from(p / self.norm_sq))
            .collect())
    }

    /// Debug dump: one CSV row per basis state.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "basis_index,digits,re,im")?;
        for (i, a) in self.amps.iter().enumerate() {
            let digits: Vec<String> = self.digits(i).iter().map(|d| d.to_string()).collect();
            let z = to_c64(*a);
            writeln!(w, "{i},{},{:?},{:?}", digits.join(";"), z.re, z.im)?;
        }
        Ok(())
    }

    pub(crate) fn check_mode(&self, index: usize) -> Result<SubsystemSpec> {
        let spec = self.spec(index)?;
        if !spec.is_mode() {
            return Err(Error::Type(format!(
                "subsystem {index} is a qudit, expected a mode"
            )));
        }
        Ok(spec)
    }

    pub(crate) fn check_qudit(&self, index: usize) -> Result<SubsystemSpec> {
        let spec = self.spec(index)?;
        if !spec.is_qudit() {
            return Err(Error::Type(format!(
                "subsystem {index} is a mode, expected a qudit"
            )));
        }
        Ok(spec)
    }
}
