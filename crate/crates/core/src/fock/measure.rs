use super::dd::Dd;

use super::gates::{inverse_qft, qft};
use super::scalar::{amp_zero, dd, norm_sqr, Amplitude};
use super::{CompositeState, ZERO_BRANCH};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    /// `|0⟩, |1⟩, …`; photon number for a mode.
    Computational,
    /// `d^{-1/2} Σ_j e^{2πi·kj/d}|j⟩`; the X basis on a qubit.
    Fourier,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementOutcome {
    pub outcome_index: usize,
    pub probability: f64,
    /// Normalised post-measurement state, still on the full subsystem list.
    pub post_state: CompositeState,
}

/// Projective measurement of one subsystem.
///
/// Returns every outcome whose probability is at least [`ZERO_BRANCH`], in
/// increasing outcome order. The Fourier basis is only defined on qudits.
pub fn measure(
    state: &CompositeState,
    subsystem_index: usize,
    basis: Basis,
) -> Result<Vec<MeasurementOutcome>> {
    let spec = state.spec(subsystem_index)?;
    let rotated = match basis {
        Basis::Computational => state.clone(),
        Basis::Fourier => {
            state.check_qudit(subsystem_index)?;
            inverse_qft(state, subsystem_index)?
        }
    };
    let total = state.norm_sq_dd();
    let stride = rotated.strides()[subsystem_index];
    let dim = spec.dimension();
    let mut out = Vec::new();
    for value in 0..dim {
        let mut amps = vec![amp_zero(); rotated.len()];
        let mut weight = dd(0.0);
        for (i, a) in rotated.amps.iter().enumerate() {
            if (i / stride) % dim == value {
                amps[i] = *a;
                weight += norm_sqr(a);
            }
        }
        let probability = ratio(weight, total);
        if probability < ZERO_BRANCH {
            continue;
        }
        let mut post = CompositeState::raw(rotated.specs.clone(), amps)
            .normalized()
            .with_tail_mass(state.tail_mass());
        if basis == Basis::Fourier {
            post = qft(&post, subsystem_index)?;
        }
        out.push(MeasurementOutcome {
            outcome_index: value,
            probability,
            post_state: post,
        });
    }
    Ok(out)
}

/// Condition on one subsystem holding `value` (computational basis) and drop
/// it from the state.
///
/// Returns the branch probability and the normalised remaining state, or a
/// flagged zero branch when the probability is below [`ZERO_BRANCH`].
pub fn collapse(
    state: &CompositeState,
    subsystem_index: usize,
    value: usize,
) -> Result<(f64, CompositeState)> {
    collapse_above(state, subsystem_index, value, ZERO_BRANCH)
}

/// [`collapse`] with an explicit empty-branch threshold.
pub(crate) fn collapse_above(
    state: &CompositeState,
    subsystem_index: usize,
    value: usize,
    floor: f64,
) -> Result<(f64, CompositeState)> {
    let spec = state.spec(subsystem_index)?;
    if state.specs.len() < 2 {
        return Err(Error::Index("cannot collapse the only subsystem".into()));
    }
    let dim = spec.dimension();
    if value >= dim {
        return Err(Error::Index(format!(
            "value {value} of a {dim}-level subsystem"
        )));
    }
    let stride = state.strides()[subsystem_index];
    let mut specs = state.specs.clone();
    specs.remove(subsystem_index);
    let mut amps = Vec::with_capacity(state.len() / dim);
    let mut weight = dd(0.0);
    for outer in (0..state.len()).step_by(dim * stride) {
        let base = outer + value * stride;
        for a in &state.amps[base..base + stride] {
            weight += norm_sqr(a);
            amps.push(*a);
        }
    }
    let probability = ratio(weight, state.norm_sq_dd());
    if probability < floor || weight.is_zero() {
        return Ok((probability, CompositeState::zero_branch(specs)));
    }
    let reduced = CompositeState::raw(specs, amps)
        .normalized()
        .with_tail_mass(state.tail_mass());
    Ok((probability, reduced))
}

/// Project the listed modes onto total photon number `n_total`.
pub fn total_photon_projector(
    state: &CompositeState,
    mode_indices: &[usize],
    n_total: usize,
) -> Result<(f64, CompositeState)> {
    let mut max_total = 0;
    for &m in mode_indices {
        let spec = state
            .check_mode(m)
            .map_err(|e| Error::Index(format!("projector target {m}: {e}")))?;
        max_total += spec.dimension() - 1;
    }
    if n_total > max_total {
        return Err(Error::Index(format!(
            "total photon number {n_total} above the combined cutoff {max_total}"
        )));
    }
    let strides = state.strides();
    let dims = state.dims();
    let mut amps = vec![amp_zero(); state.len()];
    let mut weight = dd(0.0);
    for (i, a) in state.amps.iter().enumerate() {
        let n: usize = mode_indices
            .iter()
            .map(|&m| (i / strides[m]) % dims[m])
            .sum();
        if n == n_total {
            amps[i] = *a;
            weight += norm_sqr(a);
        }
    }
    let probability = ratio(weight, state.norm_sq_dd());
    if probability < ZERO_BRANCH {
        return Ok((
            probability,
            CompositeState::zero_branch(state.specs.clone()),
        ));
    }
    let post = CompositeState::raw(state.specs.clone(), amps)
        .normalized()
        .with_tail_mass(state.tail_mass());
    Ok((probability, post))
}

/// `⟨a|b⟩` (antilinear in `a`).
pub fn inner_product(a: &CompositeState, b: &CompositeState) -> Result<Amplitude> {
    if a.specs != b.specs {
        return Err(Error::DimensionMismatch(
            "inner product of states on different subsystem lists".into(),
        ));
    }
    Ok(a.amps
        .iter()
        .zip(&b.amps)
        .fold(amp_zero(), |acc, (x, y)| acc + x.conj() * y))
}

/// `|⟨a|b⟩|² / (⟨a|a⟩⟨b|b⟩)`.
pub fn fidelity(a: &CompositeState, b: &CompositeState) -> Result<f64> {
    Ok(fidelity_dd(a, b)?.into())
}

/// `1 − fidelity`, evaluated before rounding to `f64` so that values far
/// below machine epsilon are resolved.
pub fn infidelity(a: &CompositeState, b: &CompositeState) -> Result<f64> {
    Ok((dd(1.0) - fidelity_dd(a, b)?).into())
}

fn fidelity_dd(a: &CompositeState, b: &CompositeState) -> Result<Dd> {
    let ip = inner_product(a, b)?;
    let denom = a.norm_sq_dd() * b.norm_sq_dd();
    if denom.hi() <= 0.0 {
        return Ok(dd(0.0));
    }
    Ok(norm_sqr(&ip) / denom)
}

fn ratio(num: Dd, den: Dd) -> f64 {
    if den.hi() <= 0.0 {
        0.0
    } else {
        (num / den).into()
    }
}
