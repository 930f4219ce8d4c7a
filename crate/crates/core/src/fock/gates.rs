use super::dd::Dd;
use num_complex::Complex;

use super::scalar::{amp_zero, dd, norm_sqr, sqrt, Amplitude, Angle};
use super::CompositeState;
use crate::error::{Error, Result};

/// Input weight that a beam splitter may push above the shared cutoff before
/// it refuses to act.
pub const BEAM_SPLITTER_SPILL: f64 = 1e-12;

impl From<f64> for Angle {
    fn from(theta: f64) -> Self {
        Angle::Radians(theta)
    }
}

/// `|n⟩ → e^{inθ}|n⟩` on one mode.
pub fn phase_shift(
    state: &CompositeState,
    mode_index: usize,
    theta: impl Into<Angle>,
) -> Result<CompositeState> {
    let spec = state.check_mode(mode_index)?;
    let theta = theta.into();
    let table: Vec<Amplitude> = (0..spec.dimension())
        .map(|n| theta.times(n as i64).phase())
        .collect();
    let stride = state.strides()[mode_index];
    let amps = state
        .amps
        .iter()
        .enumerate()
        .map(|(i, a)| a * table[(i / stride) % spec.dimension()])
        .collect();
    Ok(rebuild(state, amps))
}

/// Apply `phase_shift(c·unit_angle)` to the mode in the branch where the
/// control qudit holds `c`.
pub fn controlled_phase(
    state: &CompositeState,
    control_index: usize,
    mode_index: usize,
    unit_angle: impl Into<Angle>,
) -> Result<CompositeState> {
    let ctrl = state.check_qudit(control_index)?;
    let mode = state.check_mode(mode_index)?;
    let unit = unit_angle.into();
    let (dc, dm) = (ctrl.dimension(), mode.dimension());
    let table: Vec<Amplitude> = (0..dc * dm)
        .map(|cn| unit.times(((cn / dm) * (cn % dm)) as i64).phase())
        .collect();
    let strides = state.strides();
    let (sc, sm) = (strides[control_index], strides[mode_index]);
    let amps = state
        .amps
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let c = (i / sc) % dc;
            let n = (i / sm) % dm;
            a * table[c * dm + n]
        })
        .collect();
    Ok(rebuild(state, amps))
}

/// `|j_c⟩|j_t⟩ → |j_c⟩|(j_t − j_c) mod d⟩`.
pub fn controlled_minus(
    state: &CompositeState,
    control_index: usize,
    target_index: usize,
) -> Result<CompositeState> {
    let ctrl = state.check_qudit(control_index)?;
    let target = state.check_qudit(target_index)?;
    if control_index == target_index || ctrl.dimension() != target.dimension() {
        return Err(Error::DimensionMismatch(format!(
            "controlled minus between {}-level subsystem {control_index} and {}-level subsystem {target_index}",
            ctrl.dimension(),
            target.dimension()
        )));
    }
    let d = ctrl.dimension();
    let strides = state.strides();
    let (sc, st) = (strides[control_index], strides[target_index]);
    let mut amps = vec![amp_zero(); state.len()];
    for (i, a) in state.amps.iter().enumerate() {
        let c = (i / sc) % d;
        let t = (i / st) % d;
        let t_new = (t + d - c) % d;
        amps[i - t * st + t_new * st] = *a;
    }
    Ok(rebuild(state, amps))
}

/// Inverse Fourier transform on one qudit:
/// `|j⟩ → d^{-1/2} Σ_k e^{-2πi·jk/d} |k⟩`.
///
/// It undoes [`qft`] and maps the Fourier basis state
/// `d^{-1/2} Σ_j e^{2πi·kj/d}|j⟩` to `|k⟩`.
pub fn inverse_qft(state: &CompositeState, qudit_index: usize) -> Result<CompositeState> {
    fourier(state, qudit_index, -1)
}

/// Forward Fourier transform: `|j⟩ → d^{-1/2} Σ_k e^{2πi·jk/d} |k⟩`.
pub fn qft(state: &CompositeState, qudit_index: usize) -> Result<CompositeState> {
    fourier(state, qudit_index, 1)
}

fn fourier(state: &CompositeState, index: usize, sign: i64) -> Result<CompositeState> {
    let d = state.check_qudit(index)?.dimension();
    let inv_sqrt_d = dd(1.0) / sqrt(dd(d as f64));
    // matrix[k][j]
    let matrix: Vec<Amplitude> = (0..d * d)
        .map(|kj| {
            let (k, j) = (kj / d, kj % d);
            let z = Angle::turns(sign * ((k * j) % d) as i64, d as u64).phase();
            Complex::new(z.re * inv_sqrt_d, z.im * inv_sqrt_d)
        })
        .collect();
    Ok(rebuild(state, apply_local(state, index, d, &matrix)))
}

/// Apply a `dim × dim` matrix (row-major, `out[k] = Σ_j m[k][j] in[j]`) to one
/// subsystem.
pub(crate) fn apply_local(
    state: &CompositeState,
    index: usize,
    dim: usize,
    matrix: &[Amplitude],
) -> Vec<Amplitude> {
    let stride = state.strides()[index];
    let block = dim * stride;
    let mut out = vec![amp_zero(); state.len()];
    let mut column = vec![amp_zero(); dim];
    for outer in (0..state.len()).step_by(block) {
        for inner in 0..stride {
            let base = outer + inner;
            for (j, slot) in column.iter_mut().enumerate() {
                *slot = state.amps[base + j * stride];
            }
            if column.iter().all(|a| a.re.hi() == 0.0 && a.im.hi() == 0.0) {
                continue;
            }
            for k in 0..dim {
                let row = &matrix[k * dim..(k + 1) * dim];
                let mut acc = amp_zero();
                for (m, c) in row.iter().zip(&column) {
                    acc += m * c;
                }
                out[base + k * stride] = acc;
            }
        }
    }
    out
}

/// Two-mode beam splitter with transmittance `eta`.
///
/// Creation operators transform as `a† → √η a† + √(1−η) b†` and
/// `b† → −√(1−η) a† + √η b†`, so `|α⟩|0⟩ → |√η α⟩|√(1−η) α⟩`. Both modes must
/// share a cutoff; input components whose total photon number exceeds it
/// are dropped when they carry at most [`BEAM_SPLITTER_SPILL`] of the
/// weight, otherwise the call fails with a truncation error.
pub fn beam_splitter(
    state: &CompositeState,
    mode_a: usize,
    mode_b: usize,
    eta: f64,
) -> Result<CompositeState> {
    let sa = state.check_mode(mode_a)?;
    let sb = state.check_mode(mode_b)?;
    if mode_a == mode_b || sa.dimension() != sb.dimension() {
        return Err(Error::DimensionMismatch(format!(
            "beam splitter needs two distinct modes with equal cutoff (got {} and {})",
            sa.dimension() - 1,
            sb.dimension() - 1
        )));
    }
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::Domain(format!("transmittance {eta} outside [0, 1]")));
    }
    let cutoff = sa.dimension() - 1;
    let strides = state.strides();
    let (st_a, st_b) = (strides[mode_a], strides[mode_b]);
    let dim = cutoff + 1;

    let mut spill = dd(0.0);
    for (i, a) in state.amps.iter().enumerate() {
        if (i / st_a) % dim + (i / st_b) % dim > cutoff {
            spill += norm_sqr(a);
        }
    }
    let total = state.norm_sq_dd();
    let spill_frac = if total.hi() > 0.0 {
        f64::from(spill / total)
    } else {
        0.0
    };
    if spill_frac > BEAM_SPLITTER_SPILL {
        return Err(Error::Truncation(format!(
            "beam splitter input has weight {spill_frac:e} above the shared cutoff {cutoff}"
        )));
    }

    let blocks = BeamSplitterBlocks::new(eta, cutoff);
    let mut out = vec![amp_zero(); state.len()];
    for (i, a) in state.amps.iter().enumerate() {
        if a.re.hi() == 0.0 && a.im.hi() == 0.0 {
            continue;
        }
        let n = (i / st_a) % dim;
        let m = (i / st_b) % dim;
        let total_n = n + m;
        if total_n > cutoff {
            continue;
        }
        let base = i - n * st_a - m * st_b;
        let block = &blocks.blocks[total_n];
        for p in 0..=total_n {
            let q = total_n - p;
            let c = block[p * (total_n + 1) + n];
            if c.hi() == 0.0 {
                continue;
            }
            out[base + p * st_a + q * st_b] += Complex::new(a.re * c, a.im * c);
        }
    }
    let tail = 1.0 - (1.0 - state.tail_mass()) * (1.0 - spill_frac);
    Ok(rebuild(state, out).with_tail_mass(tail))
}

/// Number-conserving blocks of the beam-splitter unitary, indexed by total
/// photon number `N`; entry `[p][n]` maps `|n, N−n⟩` to `|p, N−p⟩`.
struct BeamSplitterBlocks {
    blocks: Vec<Vec<Dd>>,
}

impl BeamSplitterBlocks {
    fn new(eta: f64, cutoff: usize) -> Self {
        let r = sqrt(dd(eta));
        let t = sqrt(dd(1.0) - dd(eta));
        let mut fact = vec![dd(1.0)];
        for k in 1..=cutoff {
            let prev = fact[k - 1];
            fact.push(prev * dd(k as f64));
        }
        let binom = |n: usize, k: usize| fact[n] / (fact[k] * fact[n - k]);
        let pow = |x: Dd, e: usize| (0..e).fold(dd(1.0), |acc, _| acc * x);

        let blocks = (0..=cutoff)
            .map(|total| {
                let mut block = vec![dd(0.0); (total + 1) * (total + 1)];
                for n in 0..=total {
                    let m = total - n;
                    let norm_in = sqrt(fact[n] * fact[m]);
                    // (r a† + t b†)^n (−t a† + r b†)^m
                    for i in 0..=n {
                        let left = binom(n, i) * pow(r, i) * pow(t, n - i);
                        for l in 0..=m {
                            let mut right = binom(m, l) * pow(t, l) * pow(r, m - l);
                            if l % 2 == 1 {
                                right = -right;
                            }
                            let p = i + l;
                            let q = total - p;
                            let c = left * right * sqrt(fact[p] * fact[q]) / norm_in;
                            block[p * (total + 1) + n] += c;
                        }
                    }
                }
                block
            })
            .collect();
        BeamSplitterBlocks { blocks }
    }
}

fn rebuild(state: &CompositeState, amps: Vec<Amplitude>) -> CompositeState {
    CompositeState::raw(state.specs.clone(), amps).with_tail_mass(state.tail_mass())
}

#[cfg(test)]
mod tests {
    use num_complex::Complex64;

    use super::*;
    use crate::fock::scalar::{amp, to_c64};
    use crate::fock::{
        coherent_state, fidelity, fock_state, qubit_plus, qudit_basis, qudit_plus, tensor,
        SubsystemSpec,
    };

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn max_diff(a: &CompositeState, b: &CompositeState) -> f64 {
        a.amplitudes()
            .iter()
            .zip(b.amplitudes())
            .map(|(x, y)| to_c64(x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn zero_phase_is_identity() {
        let s = coherent_state(c(0.4, 0.2), 10).unwrap();
        assert_eq!(phase_shift(&s, 0, 0.0).unwrap(), s);
    }

    #[test]
    fn phase_shift_rotates_coherent_amplitude() {
        let alpha = c(0.5, -0.1);
        let theta = 0.77;
        let s = coherent_state(alpha, 12).unwrap();
        let shifted = phase_shift(&s, 0, theta).unwrap();
        let expect = coherent_state(alpha * Complex64::from_polar(1.0, theta), 12).unwrap();
        assert!(max_diff(&shifted, &expect) < 1e-15);
        assert!((fidelity(&shifted, &expect).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pi_phase_on_single_photon() {
        let s = fock_state(1, 3).unwrap();
        let out = phase_shift(&s, 0, Angle::half_turn()).unwrap();
        assert_eq!(out.amplitude(1), c(-1.0, 0.0));
        assert!(matches!(
            phase_shift(&qubit_plus(), 0, 1.0),
            Err(Error::Type(_))
        ));
    }

    #[test]
    fn controlled_phase_on_control_zero_is_identity() {
        let s = tensor(&[
            qudit_basis(4, 0).unwrap(),
            coherent_state(c(0.3, 0.0), 8).unwrap(),
        ])
        .unwrap();
        assert_eq!(controlled_phase(&s, 0, 1, Angle::slice(4)).unwrap(), s);
    }

    #[test]
    fn key_encoding_gate() {
        let alpha = c(0.3, 0.0);
        let s = tensor(&[qubit_plus(), coherent_state(alpha, 8).unwrap()]).unwrap();
        let out = controlled_phase(&s, 0, 1, Angle::half_turn()).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = coherent_state(alpha, 8).unwrap();
        let minus = coherent_state(-alpha, 8).unwrap();
        for n in 0..=8 {
            assert!((out.amplitude(n) - plus.amplitude(n) * h).norm() < 1e-16);
            assert!((out.amplitude(9 + n) - minus.amplitude(n) * h).norm() < 1e-16);
        }
    }

    #[test]
    fn phase_randomisation_gate() {
        let d = 8;
        let alpha = c(0.4, 0.1);
        let s = tensor(&[qudit_plus(d), coherent_state(alpha, 10).unwrap()]).unwrap();
        let out = controlled_phase(&s, 0, 1, Angle::slice(d)).unwrap();
        for j in 0..d {
            let rotated =
                alpha * Complex64::from_polar(1.0, std::f64::consts::TAU * j as f64 / d as f64);
            let branch = coherent_state(rotated, 10).unwrap();
            for n in 0..=10 {
                let expect = branch.amplitude(n) / (d as f64).sqrt();
                assert!((out.amplitude(j * 11 + n) - expect).norm() < 1e-15);
            }
        }
        assert!(matches!(
            controlled_phase(&s, 1, 1, 0.1),
            Err(Error::Type(_))
        ));
    }

    #[test]
    fn controlled_minus_arithmetic() {
        let d = 16;
        let s = tensor(&[qudit_basis(d, 3).unwrap(), qudit_basis(d, 1).unwrap()]).unwrap();
        let out = controlled_minus(&s, 0, 1).unwrap();
        assert_eq!(out.amplitude(3 * d + 14), c(1.0, 0.0));
        let s = tensor(&[qudit_basis(d, 0).unwrap(), qudit_basis(d, 5).unwrap()]).unwrap();
        assert_eq!(controlled_minus(&s, 0, 1).unwrap(), s);
        let bad = tensor(&[qudit_basis(4, 0).unwrap(), qudit_basis(8, 0).unwrap()]).unwrap();
        assert!(matches!(
            controlled_minus(&bad, 0, 1),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn controlled_minus_is_a_permutation() {
        // oracle: build the permutation matrix and check it is unitary, then
        // check that the inverse map (target + control) restores every input
        let d = 5;
        let mut seen = vec![false; d * d];
        for a in 0..d {
            for b in 0..d {
                let s = tensor(&[qudit_basis(d, a).unwrap(), qudit_basis(d, b).unwrap()]).unwrap();
                let out = controlled_minus(&s, 0, 1).unwrap();
                let hit: Vec<usize> = (0..d * d)
                    .filter(|&i| out.amplitude(i).norm() > 0.5)
                    .collect();
                assert_eq!(hit.len(), 1);
                assert!(!seen[hit[0]]);
                seen[hit[0]] = true;
                let (ra, rb) = (hit[0] / d, hit[0] % d);
                assert_eq!(ra, a);
                assert_eq!((rb + ra) % d, b);
            }
        }
        assert!(seen.iter().all(|&x| x));
    }

    #[test]
    fn two_level_fourier_is_hadamard() {
        let zero = qudit_basis(2, 0).unwrap();
        let one = qudit_basis(2, 1).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let a = inverse_qft(&zero, 0).unwrap();
        let b = inverse_qft(&one, 0).unwrap();
        assert!((a.amplitude(0) - c(h, 0.0)).norm() < 1e-16);
        assert!((a.amplitude(1) - c(h, 0.0)).norm() < 1e-16);
        assert!((b.amplitude(0) - c(h, 0.0)).norm() < 1e-16);
        assert!((b.amplitude(1) - c(-h, 0.0)).norm() < 1e-16);
    }

    #[test]
    fn inverse_qft_undoes_qft() {
        let d = 6;
        let amps: Vec<_> = (0..d)
            .map(|j| amp(j as f64 * 0.1 + 0.05, 0.3 - j as f64 * 0.07))
            .collect();
        let s = CompositeState::raw(vec![SubsystemSpec::qudit(d)], amps).normalized();
        let back = inverse_qft(&qft(&s, 0).unwrap(), 0).unwrap();
        assert!(max_diff(&s, &back) < 1e-30);
    }

    #[test]
    fn inverse_qft_reads_out_fourier_index() {
        // oracle: orthogonality of characters
        let d = 16;
        for k in 0..d {
            let amps: Vec<_> = (0..d)
                .map(|j| {
                    let z = Angle::turns((k * j) as i64, d as u64).phase();
                    let s = dd(1.0) / sqrt(dd(d as f64));
                    Complex::new(z.re * s, z.im * s)
                })
                .collect();
            let s = CompositeState::raw(vec![SubsystemSpec::qudit(d)], amps);
            let out = inverse_qft(&s, 0).unwrap();
            for l in 0..d {
                let expect = if l == k { 1.0 } else { 0.0 };
                assert!((out.amplitude(l) - c(expect, 0.0)).norm() < 1e-30);
            }
        }
        assert!(matches!(
            inverse_qft(&fock_state(0, 3).unwrap(), 0),
            Err(Error::Type(_))
        ));
    }

    #[test]
    fn beam_splitter_identity_at_full_transmission() {
        let s = tensor(&[
            coherent_state(c(0.5, 0.2), 10).unwrap(),
            coherent_state(c(0.1, 0.0), 10).unwrap(),
        ])
        .unwrap();
        let out = beam_splitter(&s, 0, 1, 1.0).unwrap();
        for i in 0..s.len() {
            let digits = s.digits(i);
            if digits[0] + digits[1] <= 10 {
                assert!((s.amplitude(i) - out.amplitude(i)).norm() < 1e-30);
            } else {
                assert_eq!(out.amplitude(i), c(0.0, 0.0));
            }
        }
        assert!(out.tail_mass() > s.tail_mass());
    }

    #[test]
    fn beam_splitter_single_photon() {
        let s = tensor(&[fock_state(1, 3).unwrap(), fock_state(0, 3).unwrap()]).unwrap();
        let out = beam_splitter(&s, 0, 1, 0.5).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((out.amplitude(4) - c(h, 0.0)).norm() < 1e-16); // |1,0⟩
        assert!((out.amplitude(1) - c(h, 0.0)).norm() < 1e-16); // |0,1⟩
        let s = tensor(&[fock_state(0, 3).unwrap(), fock_state(1, 3).unwrap()]).unwrap();
        let out = beam_splitter(&s, 0, 1, 0.5).unwrap();
        assert!((out.amplitude(4) - c(-h, 0.0)).norm() < 1e-16);
        assert!((out.amplitude(1) - c(h, 0.0)).norm() < 1e-16);
    }

    #[test]
    fn beam_splitter_hong_ou_mandel() {
        // |1,1⟩ on a balanced splitter never leaves one photon per port
        let s = tensor(&[fock_state(1, 4).unwrap(), fock_state(1, 4).unwrap()]).unwrap();
        let out = beam_splitter(&s, 0, 1, 0.5).unwrap();
        assert!(out.amplitude(5 + 1).norm() < 1e-30);
        assert!((out.norm_sq() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn beam_splitter_splits_coherent_state() {
        let alpha = c(0.8, -0.3);
        let eta = 0.3;
        let s = tensor(&[
            coherent_state(alpha, 16).unwrap(),
            fock_state(0, 16).unwrap(),
        ])
        .unwrap();
        let out = beam_splitter(&s, 0, 1, eta).unwrap();
        let expect = tensor(&[
            coherent_state(alpha * eta.sqrt(), 16).unwrap(),
            coherent_state(alpha * (1.0 - eta).sqrt(), 16).unwrap(),
        ])
        .unwrap();
        assert!(fidelity(&out, &expect).unwrap() > 1.0 - 1e-10);
    }

    #[test]
    fn beam_splitter_rejects_overflowing_input() {
        let s = tensor(&[fock_state(2, 3).unwrap(), fock_state(2, 3).unwrap()]).unwrap();
        assert!(matches!(
            beam_splitter(&s, 0, 1, 0.5),
            Err(Error::Truncation(_))
        ));
        let s = tensor(&[fock_state(0, 3).unwrap(), fock_state(0, 4).unwrap()]).unwrap();
        assert!(matches!(
            beam_splitter(&s, 0, 1, 0.5),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
