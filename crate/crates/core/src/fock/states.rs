use super::scalar::{amp_one, amp_zero, dd, from_c64, scale, sqrt, Amplitude};
use super::{CompositeState, SubsystemSpec};
use crate::error::{Error, Result};
use num_complex::{Complex, Complex64};

/// Tail mass above which a truncated coherent state is rejected.
pub const MAX_TAIL_MASS: f64 = 1e-9;

/// `α^n/√(n!)` for `n = 0..=cutoff`.
fn coherent_coefficients(alpha: Complex64, cutoff: usize) -> Vec<Amplitude> {
    let a = from_c64(alpha);
    let mut out = Vec::with_capacity(cutoff + 1);
    let mut c = amp_one();
    out.push(c);
    for n in 1..=cutoff {
        c = scale(c * a, dd(1.0) / sqrt(dd(n as f64)));
        out.push(c);
    }
    out
}

/// Poisson mass strictly above `cutoff` for mean `mean`.
pub(crate) fn poisson_tail(mean: f64, cutoff: usize) -> f64 {
    if mean == 0.0 {
        return 0.0;
    }
    // log of the first omitted term, then sum forward until negligible
    let n0 = cutoff + 1;
    let log_first = -mean + n0 as f64 * mean.ln() - ln_factorial(n0);
    let mut term = log_first.exp();
    let mut total = 0.0;
    let mut n = n0;
    while term > total * 1e-17 && term > 1e-300 {
        total += term;
        n += 1;
        term *= mean / n as f64;
    }
    total
}

pub(crate) fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Coherent state `|α⟩` on one mode, renormalised over `0..=cutoff`.
///
/// Requires `|α|² ≤ cutoff/4` and a discarded Poisson tail below
/// [`MAX_TAIL_MASS`]; the tail is kept as [`CompositeState::tail_mass`].
pub fn coherent_state(alpha: Complex64, cutoff: usize) -> Result<CompositeState> {
    let mean = alpha.norm_sqr();
    if !mean.is_finite() {
        return Err(Error::Domain(format!("non-finite amplitude {alpha}")));
    }
    if mean > cutoff as f64 / 4.0 {
        return Err(Error::Truncation(format!(
            "|alpha|^2 = {mean} exceeds cutoff/4 = {}",
            cutoff as f64 / 4.0
        )));
    }
    let tail = poisson_tail(mean, cutoff);
    if tail >= MAX_TAIL_MASS {
        return Err(Error::Truncation(format!(
            "Poisson tail {tail:e} beyond cutoff {cutoff} for |alpha|^2 = {mean}"
        )));
    }
    let amps = coherent_coefficients(alpha, cutoff);
    Ok(CompositeState::raw(vec![SubsystemSpec::mode(cutoff)], amps)
        .normalized()
        .with_tail_mass(tail))
}

/// Fock state `|k⟩` on a mode truncated at `cutoff`.
pub fn fock_state(k: usize, cutoff: usize) -> Result<CompositeState> {
    if k > cutoff {
        return Err(Error::Index(format!(
            "photon number {k} above cutoff {cutoff}"
        )));
    }
    let mut amps = vec![amp_zero(); cutoff + 1];
    amps[k] = amp_one();
    Ok(CompositeState::raw(vec![SubsystemSpec::mode(cutoff)], amps))
}

/// Computational basis state `|j⟩` of a `d`-level qudit.
pub fn qudit_basis(d: usize, j: usize) -> Result<CompositeState> {
    if j >= d {
        return Err(Error::Index(format!("level {j} of a {d}-level qudit")));
    }
    let mut amps = vec![amp_zero(); d];
    amps[j] = amp_one();
    Ok(CompositeState::raw(vec![SubsystemSpec::qudit(d)], amps))
}

/// `|+_d⟩ = d^{-1/2} Σ_j |j⟩`.
pub fn qudit_plus(d: usize) -> CompositeState {
    let c = dd(1.0) / sqrt(dd(d as f64));
    let amps = vec![Complex::new(c, dd(0.0)); d];
    CompositeState::raw(vec![SubsystemSpec::qudit(d)], amps)
}

pub fn qubit_plus() -> CompositeState {
    qudit_plus(2)
}

/// Kronecker product; subsystem lists are concatenated in order.
pub fn tensor(parts: &[CompositeState]) -> Result<CompositeState> {
    let (first, rest) = parts
        .split_first()
        .ok_or_else(|| Error::Index("tensor product of no states".into()))?;
    let mut specs = first.specs.clone();
    let mut amps = first.amps.clone();
    let mut tail = first.tail_mass;
    for part in rest {
        let mut next = Vec::with_capacity(amps.len() * part.amps.len());
        for a in &amps {
            for b in &part.amps {
                next.push(a * b);
            }
        }
        amps = next;
        specs.extend_from_slice(&part.specs);
        tail = 1.0 - (1.0 - tail) * (1.0 - part.tail_mass);
    }
    Ok(CompositeState::raw(specs, amps).with_tail_mass(tail))
}

/// Normalised pseudo-Fock state: coherent amplitudes `αⁿ/√(n!)` kept only on
/// photon numbers `n ≡ k (mod d)`.
///
/// For `α = 0` this is the Fock state `|k⟩`, the limit of the family.
pub fn pseudo_fock(alpha: Complex64, d: usize, k: usize, cutoff: usize) -> Result<CompositeState> {
    if k >= d {
        return Err(Error::Index(format!(
            "pseudo-Fock index {k} must be below d = {d}"
        )));
    }
    if cutoff < k {
        return Err(Error::Index(format!(
            "pseudo-Fock index {k} above cutoff {cutoff}"
        )));
    }
    let mut amps = vec![amp_zero(); cutoff + 1];
    if alpha == Complex64::new(0.0, 0.0) {
        amps[k] = amp_one();
    } else {
        let coeffs = coherent_coefficients(alpha, cutoff);
        for n in (k..=cutoff).step_by(d) {
            amps[n] = coeffs[n];
        }
    }
    Ok(CompositeState::raw(vec![SubsystemSpec::mode(cutoff)], amps).normalized())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{fidelity, inner_product};

    fn probs(s: &CompositeState) -> Vec<f64> {
        s.marginal(0).unwrap()
    }

    #[test]
    fn vacuum_is_exact() {
        let s = coherent_state(Complex64::new(0.0, 0.0), 8).unwrap();
        assert_eq!(s.amplitude(0), Complex64::new(1.0, 0.0));
        for n in 1..=8 {
            assert_eq!(s.amplitude(n), Complex64::new(0.0, 0.0));
        }
        assert_eq!(s.tail_mass(), 0.0);
    }

    #[test]
    fn weak_coherent_state_is_poissonian() {
        let s = coherent_state(Complex64::new(0.05f64.sqrt(), 0.0), 16).unwrap();
        let p = probs(&s);
        // oracle: direct Poisson(0.05)
        let pois =
            |n: i32| (-0.05f64).exp() * 0.05f64.powi(n) / (1..=n).product::<i32>().max(1) as f64;
        assert!((p[0] - 0.951_229_424_500_714).abs() < 1e-12);
        assert!((p[0] - pois(0)).abs() < 1e-14);
        assert!((p[1] - pois(1)).abs() < 1e-14);
        assert!((p[1] - 0.047_561_471_225_035_7).abs() < 1e-12);
        assert!(s.tail_mass() < 1e-12);
        assert!((s.norm_sq() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn truncation_guard() {
        assert!(matches!(
            coherent_state(Complex64::new(1.0, 0.0), 2),
            Err(Error::Truncation(_))
        ));
        // guard passes (|α|² = cutoff/4) but tail mass is too large
        assert!(matches!(
            coherent_state(Complex64::new(1.0, 0.0), 4),
            Err(Error::Truncation(_))
        ));
    }

    #[test]
    fn fock_state_edges() {
        let s = fock_state(0, 5).unwrap();
        assert_eq!(s.amplitude(0), Complex64::new(1.0, 0.0));
        let s = fock_state(5, 5).unwrap();
        assert_eq!(s.amplitude(5), Complex64::new(1.0, 0.0));
        assert!(matches!(fock_state(6, 5), Err(Error::Index(_))));
    }

    #[test]
    fn tensor_products() {
        let v = fock_state(0, 1).unwrap();
        let vv = tensor(&[v.clone(), v.clone()]).unwrap();
        assert_eq!(vv.len(), 4);
        assert_eq!(vv.amplitude(0), Complex64::new(1.0, 0.0));

        let q0 = qudit_basis(2, 0).unwrap();
        let s = tensor(&[qubit_plus(), q0]).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let expect = [h, 0.0, h, 0.0];
        for (i, e) in expect.iter().enumerate() {
            assert!((s.amplitude(i).re - e).abs() < 1e-16);
        }
        assert!(tensor(&[]).is_err());
    }

    #[test]
    fn tensor_norm_is_multiplicative() {
        let a = CompositeState::raw(
            vec![SubsystemSpec::qubit()],
            vec![
                super::super::scalar::amp(1.0, 1.0),
                super::super::scalar::amp(0.5, 0.0),
            ],
        );
        let b = CompositeState::raw(
            vec![SubsystemSpec::mode(1)],
            vec![
                super::super::scalar::amp(2.0, 0.0),
                super::super::scalar::amp(0.0, -1.0),
            ],
        );
        let ab = tensor(&[a.clone(), b.clone()]).unwrap();
        assert!((ab.norm_sq() - a.norm_sq() * b.norm_sq()).abs() < 1e-14);
    }

    #[test]
    fn pseudo_fock_is_close_to_vacuum_for_large_d() {
        let pf = pseudo_fock(Complex64::new(0.3, 0.0), 16, 0, 40).unwrap();
        let f = fidelity(&pf, &fock_state(0, 40).unwrap()).unwrap();
        // oracle: only the n = 16 term survives next to n = 0
        let ratio = 0.09f64.powi(16) / (1..=16).map(|k| k as f64).product::<f64>();
        assert!((1.0 - f - ratio).abs() < 1e-18);
        assert!(f >= 1.0 - 1e-15);
    }

    #[test]
    fn pseudo_fock_support_is_modular() {
        let pf = pseudo_fock(Complex64::new(1.1, 0.4), 4, 3, 30).unwrap();
        for n in 0..=30 {
            if n % 4 != 3 {
                assert_eq!(pf.amplitudes()[n], amp_zero());
            }
        }
        assert!((pf.norm_sq() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pseudo_fock_limit_is_fock() {
        let pf = pseudo_fock(Complex64::new(0.0, 0.0), 16, 1, 20).unwrap();
        let ip = inner_product(&pf, &fock_state(1, 20).unwrap()).unwrap();
        assert_eq!(super::super::scalar::to_c64(ip), Complex64::new(1.0, 0.0));
        let tiny = pseudo_fock(Complex64::new(1e-6, 0.0), 16, 1, 20).unwrap();
        assert!(fidelity(&tiny, &fock_state(1, 20).unwrap()).unwrap() > 1.0 - 1e-15);
        assert!(matches!(
            pseudo_fock(Complex64::new(0.1, 0.0), 4, 4, 10),
            Err(Error::Index(_))
        ));
    }
}
