//! The source-replaced encoding circuit and the checks built on it.
//!
//! Subsystem layout is fixed: `[A0, A1, A, B0, B1, B]`, where `A0`/`B0` are
//! the `d`-level phase ancillas, `A1`/`B1` the key qubits and `A`/`B` the
//! optical modes.

use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::measure::collapse_above;
use crate::fock::scalar::{dd, norm_sqr};
use crate::fock::{
    beam_splitter, coherent_state, collapse, controlled_minus, controlled_phase, fidelity,
    fock_state, infidelity, inverse_qft, phase_shift, pseudo_fock, qubit_plus, qudit_plus, tensor,
    Angle, CompositeState, SubsystemKind, ZERO_BRANCH,
};

pub const A0: usize = 0;
pub const A1: usize = 1;
pub const MODE_A: usize = 2;
pub const B0: usize = 3;
pub const B1: usize = 4;
pub const MODE_B: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitParams {
    pub mu_a: f64,
    pub mu_b: f64,
    /// Number of phase slices.
    pub d: usize,
    pub cutoff: usize,
    /// Initial phase of Alice's coherent state, radians.
    pub alpha_phase: f64,
    pub beta_phase: f64,
}

impl Default for CircuitParams {
    fn default() -> Self {
        CircuitParams {
            mu_a: 0.05,
            mu_b: 0.05,
            d: 16,
            cutoff: 12,
            alpha_phase: 0.0,
            beta_phase: 0.0,
        }
    }
}

impl CircuitParams {
    pub fn new(mu_a: f64, mu_b: f64, d: usize, cutoff: usize) -> Result<Self> {
        let p = CircuitParams {
            mu_a,
            mu_b,
            d,
            cutoff,
            ..Default::default()
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::Domain(format!(
                "d must be at least 2, got {}",
                self.d
            )));
        }
        for (name, mu) in [("mu_a", self.mu_a), ("mu_b", self.mu_b)] {
            if !(mu.is_finite() && mu >= 0.0) {
                return Err(Error::Domain(format!(
                    "{name} must be a finite non-negative number, got {mu}"
                )));
            }
        }
        for (name, t) in [
            ("alpha_phase", self.alpha_phase),
            ("beta_phase", self.beta_phase),
        ] {
            if !t.is_finite() {
                return Err(Error::Domain(format!("{name} must be finite")));
            }
        }
        let needed = 4.0 * self.mu_a.max(self.mu_b);
        if (self.cutoff as f64) < needed {
            return Err(Error::Truncation(format!(
                "cutoff {} below 4*max(mu) = {needed}",
                self.cutoff
            )));
        }
        Ok(())
    }

    fn alpha(&self) -> Complex64 {
        Complex64::from_polar(self.mu_a.sqrt(), self.alpha_phase)
    }

    fn beta(&self) -> Complex64 {
        Complex64::from_polar(self.mu_b.sqrt(), self.beta_phase)
    }
}

/// The six-subsystem state after the phase and key encodings, before any
/// virtual operation.
pub fn build_encoded_state(params: &CircuitParams) -> Result<CompositeState> {
    params.validate()?;
    let d = params.d;
    let state = tensor(&[
        qudit_plus(d),
        qubit_plus(),
        coherent_state(params.alpha(), params.cutoff)?,
        qudit_plus(d),
        qubit_plus(),
        coherent_state(params.beta(), params.cutoff)?,
    ])?;
    let state = controlled_phase(&state, A0, MODE_A, Angle::slice(d))?;
    let state = controlled_phase(&state, A1, MODE_A, Angle::half_turn())?;
    let state = controlled_phase(&state, B0, MODE_B, Angle::slice(d))?;
    controlled_phase(&state, B1, MODE_B, Angle::half_turn())
}

fn check_layout(state: &CompositeState) -> Result<usize> {
    let specs = state.specs();
    let d = specs.first().map(|s| s.dimension()).unwrap_or(0);
    let ok = specs.len() == 6
        && specs[A0].kind() == SubsystemKind::Qudit
        && specs[B0] == specs[A0]
        && specs[A1].kind() == SubsystemKind::Qudit
        && specs[A1].dimension() == 2
        && specs[B1] == specs[A1]
        && specs[MODE_A].is_mode()
        && specs[MODE_B] == specs[MODE_A];
    if !ok {
        return Err(Error::Layout(format!(
            "expected [qudit d, qubit, mode, qudit d, qubit, mode], got {specs:?}"
        )));
    }
    Ok(d)
}

/// Controlled-minus from `A0` onto `B0`, then the inverse Fourier transform
/// on `A0`.
pub fn apply_virtual_block(state: &CompositeState) -> Result<CompositeState> {
    check_layout(state)?;
    let state = controlled_minus(state, A0, B0)?;
    inverse_qft(&state, A0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParityRow {
    /// `A0` readout after the inverse Fourier transform.
    pub k: usize,
    /// `B0` readout: the phase-slice difference.
    pub j: usize,
    /// Total photon number in modes `A` and `B`.
    pub n_total: usize,
    /// Joint probability of `(k, j, n_total)`.
    pub weight: f64,
    /// Probability that X measurements on `A1` and `B1` disagree.
    pub p_xx_disagree: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParityTable {
    pub d: usize,
    /// Ordered by `(k, j, n_total)`.
    pub rows: Vec<ParityRow>,
    /// Total weight of branches below the empty-branch threshold.
    pub dropped_weight: f64,
    /// Largest weight seen at any `n_total` not congruent to `k` mod `d`,
    /// kept or dropped.
    pub max_off_support_weight: f64,
}

impl ParityTable {
    pub fn total_weight(&self) -> f64 {
        self.rows.iter().map(|r| r.weight).sum()
    }

    /// `max |p_xx_disagree − [N odd]|` over all rows.
    pub fn max_parity_deviation(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.p_xx_disagree - (r.n_total % 2) as f64).abs())
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut w: W, sig_digits: usize) -> io::Result<()> {
        writeln!(w, "k,j,N,weight,p_xx_disagree")?;
        let p = sig_digits.max(1) - 1;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{:.p$e},{:.p$e}",
                r.k, r.j, r.n_total, r.weight, r.p_xx_disagree
            )?;
        }
        Ok(())
    }
}

/// Enumerate the joint readout of `(k, j, N)` and the X⊗X disagreement on
/// the key qubits for each branch.
pub fn joint_readout_distribution(state: &CompositeState) -> Result<ParityTable> {
    let d = check_layout(state)?;
    let cutoff = state.specs()[MODE_A].cutoff().unwrap_or(0);
    let state_norm = state.normalized();

    let per_k: Vec<Result<(Vec<ParityRow>, f64, f64)>> = (0..d)
        .into_par_iter()
        .map(|k| {
            let mut rows = Vec::new();
            let mut dropped = 0.0;
            let mut off = 0.0_f64;
            // after collapsing A0 the layout is [A1, A, B0, B1, B]
            let (pk, after_k) = collapse(&state_norm, A0, k)?;
            if after_k.is_zero_branch() {
                return Ok((rows, pk, 0.0));
            }
            for j in 0..d {
                // now [A1, A, B1, B]
                let (pj, after_j) = collapse(&after_k, 2, j)?;
                if after_j.is_zero_branch() {
                    dropped += pk * pj;
                    continue;
                }
                for n in 0..=2 * cutoff {
                    let (pn, branch) = crate::fock::total_photon_projector(&after_j, &[1, 3], n)?;
                    let weight = pk * pj * pn;
                    if n % d != k {
                        off = off.max(weight);
                    }
                    if branch.is_zero_branch() || weight < ZERO_BRANCH {
                        dropped += weight;
                        continue;
                    }
                    rows.push(ParityRow {
                        k,
                        j,
                        n_total: n,
                        weight,
                        p_xx_disagree: xx_disagree(&branch)?,
                    });
                }
            }
            Ok((rows, dropped, off))
        })
        .collect();

    let mut table = ParityTable {
        d,
        rows: Vec::new(),
        dropped_weight: 0.0,
        max_off_support_weight: 0.0,
    };
    for part in per_k {
        let (rows, dropped, off) = part?;
        table.rows.extend(rows);
        table.dropped_weight += dropped;
        table.max_off_support_weight = table.max_off_support_weight.max(off);
    }
    Ok(table)
}

/// Disagreement probability of X measurements on subsystems 0 and 2 of a
/// `[A1, A, B1, B]` state.
fn xx_disagree(state: &CompositeState) -> Result<f64> {
    let rotated = inverse_qft(&inverse_qft(state, 0)?, 2)?;
    let mut disagree = dd(0.0);
    for (i, a) in rotated.amplitudes().iter().enumerate() {
        let digits = rotated.digits(i);
        if digits[0] != digits[2] {
            disagree += norm_sqr(a);
        }
    }
    Ok((disagree / rotated.norm_sq_dd()).to_f64())
}

/// Detection-weighted phase error from a parity table:
/// `Σ_N w_N (1 − p_xx_disagree)` with `w_N ∝ weight(N)·yields(N)`.
pub fn phase_error_rate_from_parity(
    table: &ParityTable,
    yields: impl Fn(usize) -> f64,
) -> Result<f64> {
    if table.rows.is_empty() {
        return Err(Error::EmptyTable);
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for r in &table.rows {
        let w = r.weight * yields(r.n_total);
        num += w * (1.0 - r.p_xx_disagree);
        den += w;
    }
    if den <= 0.0 {
        return Err(Error::Domain(
            "no detection weight in the parity table".into(),
        ));
    }
    Ok(num / den)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation1 {
    pub k: usize,
    /// Probability of reading `k` on the ancilla.
    pub probability: f64,
    pub pseudo_fock_fidelity: f64,
    pub pseudo_fock_infidelity: f64,
    pub fock_fidelity: f64,
    pub fock_infidelity: f64,
}

/// Single-sided chain: `|+_d⟩|α⟩`, controlled phase, inverse Fourier
/// transform, ancilla reads `k`. Compares the conditional mode state with
/// `pseudo_fock(α, d, k)` and with `|k⟩`.
pub fn verify_observation1(
    alpha: Complex64,
    d: usize,
    k: usize,
    cutoff: usize,
) -> Result<Observation1> {
    if k >= d {
        return Err(Error::Index(format!("outcome {k} of a {d}-level ancilla")));
    }
    let state = tensor(&[qudit_plus(d), coherent_state(alpha, cutoff)?])?;
    let state = controlled_phase(&state, 0, 1, Angle::slice(d))?;
    let state = inverse_qft(&state, 0)?;
    // Genuine branches stay far above double-double cancellation noise
    // (~1e-64 relative), even where they fall below ZERO_BRANCH.
    let (probability, mode) = collapse_above(&state, 0, k, 1e-50)?;
    if mode.is_zero_branch() {
        return Err(Error::Domain(format!(
            "ancilla outcome {k} has zero probability"
        )));
    }
    let pf = pseudo_fock(alpha, d, k, cutoff)?;
    let fk = fock_state(k, cutoff)?;
    Ok(Observation1 {
        k,
        probability,
        pseudo_fock_fidelity: fidelity(&mode, &pf)?,
        pseudo_fock_infidelity: infidelity(&mode, &pf)?,
        fock_fidelity: fidelity(&mode, &fk)?,
        fock_infidelity: infidelity(&mode, &fk)?,
    })
}

/// Total-variation distance between the joint distribution of
/// `(A0, A1, A, B0, B1, B)` readouts when the ancillas are measured after the
/// encoding (quantum control) and when the phases and key bits are drawn
/// first and applied classically. Both routes end with the 50:50 beam
/// splitter at the measuring node, so photon numbers are the `L`/`R` counts.
pub fn z_before_encoding_distance(params: &CircuitParams) -> Result<f64> {
    params.validate()?;
    let d = params.d;
    let c = params.cutoff;
    let quantum = beam_splitter(&build_encoded_state(params)?, MODE_A, MODE_B, 0.5)?;
    let total = quantum.norm_sq_dd();

    let base_a = coherent_state(params.alpha(), c)?;
    let base_b = coherent_state(params.beta(), c)?;
    let slots = c + 1;
    let mut tv = 0.0;
    for ja in 0..d {
        for ka in 0..2 {
            let a = phase_shift(&base_a, 0, encoded_angle(ja, ka, d))?;
            for jb in 0..d {
                for kb in 0..2 {
                    let b = phase_shift(&base_b, 0, encoded_angle(jb, kb, d))?;
                    let out = beam_splitter(&tensor(&[a.clone(), b])?, 0, 1, 0.5)?;
                    let scale = 1.0 / (4 * d * d) as f64;
                    let out_total = out.norm_sq_dd();
                    for nl in 0..slots {
                        for nr in 0..slots {
                            let classical = scale
                                * (norm_sqr(&out.amplitudes()[nl * slots + nr]) / out_total)
                                    .to_f64();
                            let idx = quantum.index_of(&[ja, ka, nl, jb, kb, nr]);
                            let q = (norm_sqr(&quantum.amplitudes()[idx]) / total).to_f64();
                            tv += (q - classical).abs();
                        }
                    }
                }
            }
        }
    }
    Ok(tv / 2.0)
}

/// `2π·j/d + π·κ` as an exact fraction of a turn.
fn encoded_angle(j: usize, kappa: usize, d: usize) -> Angle {
    Angle::turns((2 * j + kappa * d) as i64, 2 * d as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{measure, Basis};

    fn small(mu: f64, d: usize, cutoff: usize) -> CircuitParams {
        CircuitParams::new(mu, mu, d, cutoff).unwrap()
    }

    #[test]
    fn vacuum_inputs_leave_modes_empty() {
        let s = build_encoded_state(&small(0.0, 4, 2)).unwrap();
        let pa = s.marginal(MODE_A).unwrap();
        assert_eq!(pa[0], 1.0);
        let a0 = s.marginal(A0).unwrap();
        for p in a0 {
            assert!((p - 0.25).abs() < 1e-15);
        }
        assert!((s.marginal(B1).unwrap()[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn phase_ancilla_is_maximally_mixed() {
        let s = build_encoded_state(&CircuitParams::new(0.2, 0.1, 8, 8).unwrap()).unwrap();
        for p in s.marginal(A0).unwrap() {
            assert!((p - 0.125).abs() < 1e-12);
        }
    }

    #[test]
    fn total_photon_number_is_poisson_convolution() {
        let params = CircuitParams::new(0.2, 0.1, 4, 10).unwrap();
        let s = build_encoded_state(&params).unwrap();
        // oracle: Poisson(0.3), renormalised per mode over the cutoff
        let mut joint = [0.0; 21];
        for (i, a) in s.amplitudes().iter().enumerate() {
            let dg = s.digits(i);
            joint[dg[MODE_A] + dg[MODE_B]] += norm_sqr(a).to_f64();
        }
        for (n, p) in joint.iter().enumerate().take(8) {
            let expect = (-0.3f64).exp() * 0.3f64.powi(n as i32)
                / (1..=n).map(|x| x as f64).product::<f64>();
            assert!((p - expect).abs() < 1e-12, "N={n} {p} {expect}");
        }
    }

    #[test]
    fn virtual_block_on_zero_ancillas() {
        let psi = tensor(&[
            crate::fock::qudit_basis(4, 0).unwrap(),
            qubit_plus(),
            coherent_state(Complex64::new(0.3, 0.0), 8).unwrap(),
            crate::fock::qudit_basis(4, 0).unwrap(),
            qubit_plus(),
            coherent_state(Complex64::new(0.0, 0.3), 8).unwrap(),
        ])
        .unwrap();
        let out = apply_virtual_block(&psi).unwrap();
        let expect = inverse_qft(&psi, A0).unwrap();
        assert!(infidelity(&out, &expect).unwrap().abs() < 1e-30);
        assert!((out.norm_sq() - 1.0).abs() < 1e-12);
        assert!(matches!(
            apply_virtual_block(&coherent_state(Complex64::new(0.1, 0.0), 3).unwrap()),
            Err(Error::Layout(_))
        ));
    }

    // Oracle: expand the chain by hand for d = 4, cutoff = 6,
    // amp(k,a1,n,j,b1,m) = (2 d^{3/2})^{-1} Σ_ja e^{-2πi k ja/d}
    //     c_n((-1)^a1 e^{2πi ja/d} α) c_m((-1)^b1 e^{2πi (j+ja)/d} β)
    #[test]
    fn chain_matches_hand_expansion() {
        let d = 4usize;
        let c = 6usize;
        let params = CircuitParams {
            mu_a: 0.1,
            mu_b: 0.05,
            d,
            cutoff: c,
            alpha_phase: 0.4,
            beta_phase: -1.1,
        };
        let state = apply_virtual_block(&build_encoded_state(&params).unwrap()).unwrap();
        let alpha = params.alpha();
        let beta = params.beta();
        let norm = |mu: f64| {
            (0..=c)
                .map(|n| mu.powi(n as i32) / fact(n))
                .sum::<f64>()
                .sqrt()
                .recip()
        };
        let (na, nb) = (norm(0.1), norm(0.05));
        let coef = |z: Complex64, n: usize, nz: f64| z.powu(n as u32) * nz / fact(n).sqrt();
        let tau = std::f64::consts::TAU;
        let mut max_err = 0.0f64;
        for i in 0..state.len() {
            let [k, a1, n, j, b1, m] = state.digits(i)[..] else {
                unreachable!()
            };
            let mut acc = Complex64::new(0.0, 0.0);
            for ja in 0..d {
                let sa = if a1 == 1 { -1.0 } else { 1.0 };
                let sb = if b1 == 1 { -1.0 } else { 1.0 };
                let za = alpha * Complex64::from_polar(sa, tau * ja as f64 / d as f64);
                let zb = beta * Complex64::from_polar(sb, tau * (j + ja) as f64 / d as f64);
                acc += Complex64::from_polar(1.0, -tau * (k * ja) as f64 / d as f64)
                    * coef(za, n, na)
                    * coef(zb, m, nb);
            }
            acc /= 2.0 * (d as f64).powf(1.5);
            max_err = max_err.max((state.amplitude(i) - acc).norm());
        }
        assert!(max_err < 1e-14, "{max_err}");
    }

    fn fact(n: usize) -> f64 {
        (1..=n).map(|x| x as f64).product()
    }

    #[test]
    fn parity_table_small_case() {
        let state = apply_virtual_block(&build_encoded_state(&small(0.1, 4, 8)).unwrap()).unwrap();
        let table = joint_readout_distribution(&state).unwrap();
        assert!((table.total_weight() + table.dropped_weight - 1.0).abs() < 1e-12);
        assert!((table.total_weight() - 1.0).abs() < 1e-9);
        assert!(table.max_off_support_weight < 1e-20);
        for r in &table.rows {
            assert_eq!(r.n_total % 4, r.k);
        }
        assert!(table.max_parity_deviation() < 1e-9);
        // rows are ordered by (k, j, N)
        let keys: Vec<_> = table.rows.iter().map(|r| (r.k, r.j, r.n_total)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn lossless_phase_error_is_even_mass() {
        let state = apply_virtual_block(
            &build_encoded_state(&CircuitParams::new(0.15, 0.05, 4, 10).unwrap()).unwrap(),
        )
        .unwrap();
        let table = joint_readout_distribution(&state).unwrap();
        let ep = phase_error_rate_from_parity(&table, |_| 1.0).unwrap();
        assert!((ep - (1.0 + (-0.4f64).exp()) / 2.0).abs() < 1e-12, "{ep}");
    }

    #[test]
    fn phase_error_edge_cases() {
        let empty = ParityTable {
            d: 4,
            rows: vec![],
            dropped_weight: 0.0,
            max_off_support_weight: 0.0,
        };
        assert!(matches!(
            phase_error_rate_from_parity(&empty, |_| 1.0),
            Err(Error::EmptyTable)
        ));
        let one = ParityTable {
            d: 4,
            rows: vec![ParityRow {
                k: 1,
                j: 0,
                n_total: 1,
                weight: 0.3,
                p_xx_disagree: 1.0,
            }],
            dropped_weight: 0.0,
            max_off_support_weight: 0.0,
        };
        assert_eq!(phase_error_rate_from_parity(&one, |_| 1.0).unwrap(), 0.0);
    }

    #[test]
    fn observation1_every_outcome() {
        let alpha = Complex64::new(0.05f64.sqrt(), 0.0);
        for k in 0..16 {
            let o = verify_observation1(alpha, 16, k, 40).unwrap();
            assert!(o.pseudo_fock_infidelity.abs() < 1e-12, "k={k} {o:?}");
            assert!(o.fock_infidelity < 1e-10, "k={k} {o:?}");
        }
        let o = verify_observation1(Complex64::new(0.0, 0.0), 16, 0, 8).unwrap();
        assert_eq!(o.fock_fidelity, 1.0);
        assert!(verify_observation1(Complex64::new(0.0, 0.0), 16, 3, 8).is_err());
        assert!(matches!(
            verify_observation1(alpha, 4, 4, 8),
            Err(Error::Index(_))
        ));
    }

    #[test]
    fn ancilla_readout_before_and_after_encoding_agree() {
        let params = CircuitParams {
            mu_a: 0.1,
            mu_b: 0.2,
            d: 4,
            cutoff: 12,
            alpha_phase: 0.3,
            beta_phase: 0.0,
        };
        let tv = z_before_encoding_distance(&params).unwrap();
        assert!(tv < 1e-12, "{tv}");
    }

    #[test]
    fn fourier_readout_statistics_match_collapse() {
        let state = apply_virtual_block(&build_encoded_state(&small(0.1, 4, 6)).unwrap()).unwrap();
        let outcomes = measure(&state, A0, Basis::Computational).unwrap();
        let total: f64 = outcomes.iter().map(|o| o.probability).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_params_are_rejected() {
        assert!(matches!(
            CircuitParams::new(0.05, 0.05, 1, 4),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            CircuitParams::new(2.0, 0.05, 4, 4),
            Err(Error::Truncation(_))
        ));
        assert!(CircuitParams::new(-0.1, 0.05, 4, 4).is_err());
    }
}
