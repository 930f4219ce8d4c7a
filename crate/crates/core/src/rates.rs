//! Closed-form gains, photon-number fractions, phase-error bounds and key
//! rates for the symmetric case `μ_a = μ_b = μ` with per-arm transmittance
//! `η`.

use rayon::prelude::*;

use crate::error::{domain, Error, Result};

/// A channel operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelPoint {
    /// Mean photon number per pulse, per side.
    pub mu: f64,
    /// Per-arm transmittance.
    pub eta: f64,
    /// Per-arm attenuation, `-10 log10(eta)`.
    pub eta_db: f64,
    /// Error-correction efficiency.
    pub f: f64,
    /// Observed bit error rate.
    pub e_bit: f64,
}

impl ChannelPoint {
    pub fn from_eta(mu: f64, eta: f64) -> Result<Self> {
        check_eta(eta)?;
        let p = ChannelPoint {
            mu,
            eta,
            eta_db: -10.0 * eta.log10(),
            f: 1.0,
            e_bit: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn from_db(mu: f64, eta_db: f64) -> Result<Self> {
        if !(eta_db.is_finite() && eta_db >= 0.0) {
            return Err(domain(format!(
                "attenuation must be a finite number of dB >= 0, got {eta_db}"
            )));
        }
        let p = ChannelPoint {
            mu,
            eta: 10f64.powf(-eta_db / 10.0),
            eta_db,
            f: 1.0,
            e_bit: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_f(mut self, f: f64) -> Result<Self> {
        self.f = f;
        self.validate()?;
        Ok(self)
    }

    pub fn with_e_bit(mut self, e_bit: f64) -> Result<Self> {
        self.e_bit = e_bit;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        check_mu(self.mu)?;
        check_eta(self.eta)?;
        let db = -10.0 * self.eta.log10();
        if (db - self.eta_db).abs() > 1e-12 * db.abs().max(1.0) {
            return Err(domain(format!(
                "eta = {} and eta_db = {} disagree",
                self.eta, self.eta_db
            )));
        }
        if !(self.f.is_finite() && self.f >= 1.0) {
            return Err(domain(format!(
                "error-correction efficiency must be >= 1, got {}",
                self.f
            )));
        }
        if !(0.0..=0.5).contains(&self.e_bit) {
            return Err(domain(format!(
                "bit error rate must lie in [0, 0.5], got {}",
                self.e_bit
            )));
        }
        Ok(())
    }
}

fn check_mu(mu: f64) -> Result<()> {
    if mu.is_finite() && mu >= 0.0 {
        Ok(())
    } else {
        Err(domain(format!(
            "intensity must be finite and >= 0, got {mu}"
        )))
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta <= 1.0 {
        Ok(())
    } else {
        Err(domain(format!(
            "transmittance must lie in (0, 1], got {eta}"
        )))
    }
}

fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// Detection probability of a `k`-photon pulse pair: `1 − (1−η)^k`.
pub fn yield_k(k: usize, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    if k == 0 {
        return Ok(0.0);
    }
    if eta == 1.0 {
        return Ok(1.0);
    }
    Ok(-(k as f64 * (-eta).ln_1p()).exp_m1())
}

/// `Q_μ = 1 − e^{−2ημ}`.
pub fn gain(mu: f64, eta: f64) -> Result<f64> {
    check_mu(mu)?;
    check_eta(eta)?;
    Ok(-(-2.0 * eta * mu).exp_m1())
}

fn positive_gain(mu: f64, eta: f64) -> Result<f64> {
    let q = gain(mu, eta)?;
    if q > 0.0 {
        Ok(q)
    } else {
        Err(domain(format!("gain vanishes at mu = {mu}, eta = {eta}")))
    }
}

/// Fraction of detections caused by `k` emitted photons:
/// `q_k = Y_k (2μ)^k e^{−2μ} / (k! Q_μ)`, evaluated in log space.
pub fn photon_fraction(k: usize, mu: f64, eta: f64) -> Result<f64> {
    let q = positive_gain(mu, eta)?;
    let y = yield_k(k, eta)?;
    if y == 0.0 {
        return Ok(0.0);
    }
    let ln = y.ln() + k as f64 * (2.0 * mu).ln() - 2.0 * mu - ln_factorial(k) - q.ln();
    Ok(ln.exp())
}

/// Number of terms used by the photon-number series:
/// `K = max(20, ⌈2μ + 10√(2μ)⌉)`.
pub fn series_cutoff(mu: f64) -> usize {
    let m = 2.0 * mu;
    20.max((m + 10.0 * m.sqrt()).ceil() as usize)
}

/// Upper bound on the phase error rate, `e_p^u = q_even = 1 − Σ_k q_{2k+1}`.
///
/// Uses `Σ_even Y_k (2μ)^k/k! = cosh 2μ − cosh 2μ(1−η) = 2 sinh(μ(2−η)) sinh(μη)`,
/// which has no cancellation for small `μ` or `η`.
pub fn phase_error_upper(mu: f64, eta: f64) -> Result<f64> {
    let q = positive_gain(mu, eta)?;
    let even = 2.0 * (mu * (2.0 - eta)).sinh() * (mu * eta).sinh() * (-2.0 * mu).exp();
    Ok(even / q)
}

/// `e_p^u` by summing the odd photon-number fractions up to [`series_cutoff`].
pub fn phase_error_upper_series(mu: f64, eta: f64) -> Result<f64> {
    positive_gain(mu, eta)?;
    let mut odd = 0.0;
    for k in (1..=series_cutoff(mu)).step_by(2) {
        odd += photon_fraction(k, mu, eta)?;
    }
    Ok(1.0 - odd)
}

/// Binary entropy in bits, with `h(0) = h(1) = 0`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(domain(format!(
            "entropy argument must lie in [0, 1], got {x}"
        )));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    Ok(-x * x.log2() - (1.0 - x) * (1.0 - x).log2())
}

/// `R = Q_μ [1 − h(e_p) − f h(E_μ)]`, unclamped.
pub fn key_rate(point: &ChannelPoint, e_p: f64) -> Result<f64> {
    point.validate()?;
    if !(0.0..=0.5).contains(&e_p) {
        return Err(domain(format!(
            "phase error rate must lie in [0, 0.5], got {e_p}"
        )));
    }
    let q = gain(point.mu, point.eta)?;
    Ok(q * (1.0 - binary_entropy(e_p)? - point.f * binary_entropy(point.e_bit)?))
}

/// Optimal unambiguous discrimination probability of Eve's stored pair,
/// `1 − e^{−4(1−η)μ}`.
pub fn usd_probability(mu: f64, eta: f64) -> Result<f64> {
    check_mu(mu)?;
    check_eta(eta)?;
    Ok(-(-4.0 * (1.0 - eta) * mu).exp_m1())
}

/// `e_p^L = p_usd / 2`.
pub fn phase_error_lower(mu: f64, eta: f64) -> Result<f64> {
    Ok(usd_probability(mu, eta)? / 2.0)
}

/// `(e_p^u − e_p^L) / e_p^u`.
pub fn gap_ratio(mu: f64, eta: f64) -> Result<f64> {
    let upper = phase_error_upper(mu, eta)?;
    if upper <= 0.0 {
        return Err(domain(format!(
            "upper bound vanishes at mu = {mu}, eta = {eta}"
        )));
    }
    Ok((upper - phase_error_lower(mu, eta)?) / upper)
}

/// One grid point with everything derived from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub point: ChannelPoint,
    pub q_gain: f64,
    pub ep_upper: f64,
    pub ep_lower: f64,
    pub p_usd: f64,
    pub gap_ratio: f64,
    /// Key rate with `e_p^u` substituted: the proven lower bound.
    pub rate_lower: f64,
    /// Key rate with `e_p^L` substituted: the attack's upper bound.
    pub rate_upper: f64,
}

impl SweepRow {
    pub fn at(point: ChannelPoint) -> Result<Self> {
        point.validate()?;
        let (mu, eta) = (point.mu, point.eta);
        let ep_upper = phase_error_upper(mu, eta)?;
        let ep_lower = phase_error_lower(mu, eta)?;
        Ok(SweepRow {
            point,
            q_gain: gain(mu, eta)?,
            ep_upper,
            ep_lower,
            p_usd: usd_probability(mu, eta)?,
            gap_ratio: gap_ratio(mu, eta)?,
            rate_lower: key_rate(&point, ep_upper)?,
            rate_upper: key_rate(&point, ep_lower)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    /// Rows for the valid points, in grid order.
    pub rows: Vec<SweepRow>,
    /// Grid index and error for each rejected point.
    pub errors: Vec<(usize, Error)>,
}

/// Evaluate every grid point independently. Invalid points are reported in
/// [`Sweep::errors`] and skipped.
pub fn sweep(points: &[ChannelPoint]) -> Result<Sweep> {
    if points.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let results: Vec<Result<SweepRow>> = points.par_iter().map(|p| SweepRow::at(*p)).collect();
    let mut out = Sweep {
        rows: Vec::with_capacity(points.len()),
        errors: Vec::new(),
    };
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(row) => out.rows.push(row),
            Err(e) => out.errors.push((i, e)),
        }
    }
    Ok(out)
}

/// Points at the given intensities and a fixed transmittance. Points that
/// fail validation surface later as sweep errors.
pub fn grid_over_mu(mus: &[f64], eta: f64) -> Vec<ChannelPoint> {
    mus.iter()
        .map(|&mu| ChannelPoint {
            mu,
            eta,
            eta_db: -10.0 * eta.log10(),
            f: 1.0,
            e_bit: 0.0,
        })
        .collect()
}

pub fn grid_over_eta_db(dbs: &[f64], mu: f64) -> Vec<ChannelPoint> {
    dbs.iter()
        .map(|&db| ChannelPoint {
            mu,
            eta: 10f64.powf(-db / 10.0),
            eta_db: db,
            f: 1.0,
            e_bit: 0.0,
        })
        .collect()
}

/// `μ = 0.005, 0.010, …, 0.5` at `η = 0.01`.
pub fn fig4a_points() -> Vec<ChannelPoint> {
    let mus: Vec<f64> = (1..=100).map(|i| i as f64 * 0.005).collect();
    grid_over_mu(&mus, 0.01)
}

/// `0, 0.5, …, 50` dB per arm at `μ = 0.05`.
pub fn fig4b_points() -> Vec<ChannelPoint> {
    let dbs: Vec<f64> = (0..=100).map(|i| i as f64 * 0.5).collect();
    grid_over_eta_db(&dbs, 0.05)
}
