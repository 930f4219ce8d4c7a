//! The `verify` command: run the circuit and check every invariant the
//! numerical core promises, each against a stated tolerance.

use std::fmt::Write;

use num_complex::Complex64;
use pmqkd_core::circuit::{
    apply_virtual_block, build_encoded_state, joint_readout_distribution,
    phase_error_rate_from_parity, verify_observation1, z_before_encoding_distance,
};
use pmqkd_core::fock::scalar::to_c64;
use pmqkd_core::fock::{coherent_state, inner_product, tensor};
use pmqkd_core::rates::{
    phase_error_upper, phase_error_upper_series, photon_fraction, series_cutoff, usd_probability,
    yield_k,
};
use pmqkd_core::{Error, ParityTable};

use crate::config::VerifyConfig;

/// One line of the report.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    /// Informational entries are printed but never fail.
    pub informational: bool,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            value,
            tolerance,
            informational: false,
        }
    }

    fn info(name: impl Into<String>, value: f64) -> Self {
        Check {
            name: name.into(),
            value,
            tolerance: f64::NAN,
            informational: true,
        }
    }

    pub fn passed(&self) -> bool {
        self.informational || self.value.abs() <= self.tolerance
    }
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub config: VerifyConfig,
    pub table: ParityTable,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn failed(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed()).count()
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn render(&self) -> String {
        let c = &self.config.circuit;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "verify mu_a={:?} mu_b={:?} d={} cutoff={} eta={:?}",
            c.mu_a, c.mu_b, c.d, c.cutoff, self.config.eta
        );
        let _ = writeln!(
            s,
            "max |p_xx_disagree - parity(N)| = {:e} over {} rows",
            self.table.max_parity_deviation(),
            self.table.rows.len()
        );
        for check in &self.checks {
            if check.informational {
                let _ = writeln!(s, "info  {} = {:e}", check.name, check.value);
            } else {
                let verdict = if check.passed() { "PASS" } else { "FAIL" };
                let _ = writeln!(
                    s,
                    "{verdict}  {} = {:e} (tolerance {:e})",
                    check.name, check.value, check.tolerance
                );
            }
        }
        let failed = self.failed();
        if failed == 0 {
            s.push_str("all checks passed\n");
        } else {
            let _ = writeln!(s, "{failed} check(s) failed");
        }
        s
    }
}

/// Build the circuit for `cfg` and evaluate every check.
pub fn run_checks(cfg: &VerifyConfig) -> Result<VerifyReport, Error> {
    let p = &cfg.circuit;
    let eta = cfg.eta;
    let state = apply_virtual_block(&build_encoded_state(p)?)?;
    let table = joint_readout_distribution(&state)?;
    let mut checks = vec![
        Check::new("parity law deviation", table.max_parity_deviation(), 1e-9),
        Check::new("readout weight sum - 1", table.total_weight() - 1.0, 1e-9),
        Check::new(
            "weight off N = k (mod d)",
            table.max_off_support_weight,
            1e-20,
        ),
    ];

    if p.mu_a == p.mu_b {
        let from_table =
            phase_error_rate_from_parity(&table, |n| yield_k(n, eta).unwrap_or(f64::NAN))?;
        checks.push(Check::new(
            "detection-weighted phase error - closed form",
            from_table - phase_error_upper(p.mu_a, eta)?,
            1e-9,
        ));
    }

    let mut worst_pf = 0.0_f64;
    let mut fock_k0 = f64::NAN;
    let alpha = Complex64::new(p.mu_a.sqrt(), 0.0);
    for k in 0..p.d {
        match verify_observation1(alpha, p.d, k, p.cutoff) {
            Ok(obs) => {
                worst_pf = worst_pf.max(obs.pseudo_fock_infidelity.abs());
                if k == 0 {
                    fock_k0 = obs.fock_infidelity;
                }
            }
            // outcomes that never occur have no conditional state
            Err(Error::Domain(_)) => {}
            Err(e) => return Err(e),
        }
    }
    checks.push(Check::new(
        "conditional state vs pseudo-Fock infidelity (max over k)",
        worst_pf,
        1e-12,
    ));
    checks.push(Check::info(
        "conditional state vs Fock |0> infidelity",
        fock_k0,
    ));

    checks.push(Check::new(
        "ancilla readout before/after encoding, total variation",
        z_before_encoding_distance(p)?,
        1e-10,
    ));

    let mu = p.mu_a;
    let fractions: f64 = (0..=series_cutoff(mu))
        .map(|k| photon_fraction(k, mu, eta))
        .sum::<Result<f64, _>>()?;
    checks.push(Check::new(
        "photon fractions sum - 1",
        fractions - 1.0,
        1e-12,
    ));
    checks.push(Check::new(
        "phase error series - closed form",
        phase_error_upper_series(mu, eta)? - phase_error_upper(mu, eta)?,
        1e-10,
    ));
    checks.push(Check::new(
        "usd probability - state overlap oracle",
        usd_probability(mu, eta)? - usd_oracle(mu, eta, p.cutoff)?,
        1e-9,
    ));

    Ok(VerifyReport {
        config: cfg.clone(),
        table,
        checks,
    })
}

/// `1 − |⟨φ0|φ1⟩|` for Eve's stored pairs `|a⟩|a⟩` and `|−a⟩|−a⟩`.
fn usd_oracle(mu: f64, eta: f64, cutoff: usize) -> Result<f64, Error> {
    let a = ((1.0 - eta) * mu).sqrt();
    let pair = |x: f64| -> Result<_, Error> {
        let c = coherent_state(Complex64::new(x, 0.0), cutoff)?;
        tensor(&[c.clone(), c])
    };
    let overlap = to_c64(inner_product(&pair(a)?, &pair(-a)?)?).norm();
    Ok(1.0 - overlap)
}
