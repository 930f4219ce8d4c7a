//! Monte Carlo rounds of the phase-matching protocol, with an honest
//! measuring node or a beam-splitting eavesdropper.
//!
//! Rounds are grouped into fixed-size shards. Shard `s` draws from
//! `ChaCha8Rng::seed_from_u64(seed)` on stream `s`, so results depend only on
//! `(params, seed)` and never on the thread count.

use std::fmt;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{domain, Error, Result};

/// Rounds per RNG shard.
pub const SHARD_ROUNDS: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams {
    pub mu_a: f64,
    pub mu_b: f64,
    /// Per-arm transmittance; also the transmission of Eve's splitter.
    pub eta: f64,
    /// Phase-slice count; must be even.
    pub d: usize,
    /// Per-detector, per-round dark-count probability.
    pub dark_count: f64,
    /// Probability that the measuring node swaps the L/R label.
    pub misalignment: f64,
    pub f: f64,
    pub rounds: u64,
    pub seed: u64,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        ProtocolParams {
            mu_a: 0.05,
            mu_b: 0.05,
            eta: 0.1,
            d: 16,
            dark_count: 0.0,
            misalignment: 0.0,
            f: 1.15,
            rounds: 1_000_000,
            seed: 0,
        }
    }
}

impl ProtocolParams {
    pub fn validate(&self) -> Result<()> {
        for (name, mu) in [("mu_a", self.mu_a), ("mu_b", self.mu_b)] {
            if !(mu.is_finite() && mu >= 0.0) {
                return Err(domain(format!("{name} must be finite and >= 0, got {mu}")));
            }
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(domain(format!("eta must lie in (0, 1], got {}", self.eta)));
        }
        if self.d < 2 {
            return Err(domain(format!("d must be at least 2, got {}", self.d)));
        }
        if self.d % 2 == 1 {
            return Err(Error::OddD(self.d));
        }
        if !(0.0..=1.0).contains(&self.dark_count) {
            return Err(domain(format!(
                "dark_count must lie in [0, 1], got {}",
                self.dark_count
            )));
        }
        if !(0.0..=0.5).contains(&self.misalignment) {
            return Err(domain(format!(
                "misalignment must lie in [0, 0.5], got {}",
                self.misalignment
            )));
        }
        if !(self.f.is_finite() && self.f >= 1.0) {
            return Err(domain(format!("f must be >= 1, got {}", self.f)));
        }
        if self.rounds == 0 {
            return Err(domain("rounds must be at least 1"));
        }
        Ok(())
    }

    /// Eve's optimal USD success probability on a sifted round,
    /// `1 − e^{−2(1−η)(μ_a+μ_b)}`.
    pub fn usd_probability(&self) -> f64 {
        -(-2.0 * (1.0 - self.eta) * (self.mu_a + self.mu_b)).exp_m1()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Click {
    None,
    L,
    R,
    Both,
}

impl fmt::Display for Click {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Click::None => "none",
            Click::L => "L",
            Click::R => "R",
            Click::Both => "both",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EveUsd {
    Bit0,
    Bit1,
    Inconclusive,
    /// No attack, or the round was not sifted.
    Absent,
}

impl fmt::Display for EveUsd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EveUsd::Bit0 => "bit0",
            EveUsd::Bit1 => "bit1",
            EveUsd::Inconclusive => "inconclusive",
            EveUsd::Absent => "absent",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Adversary {
    None,
    Beamsplit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClickProbabilities {
    pub p_l_only: f64,
    pub p_r_only: f64,
    pub p_both: f64,
    pub p_none: f64,
}

/// Outcome probabilities of the two threshold detectors after 50:50
/// recombination of `√(ημ_a)e^{iθ_a}` and `√(ημ_b)e^{iθ_b}`.
pub fn charlie_click_probabilities(
    theta_a: f64,
    theta_b: f64,
    mu_a: f64,
    mu_b: f64,
    eta: f64,
    dark_count: f64,
) -> Result<ClickProbabilities> {
    if !(theta_a.is_finite() && theta_b.is_finite()) {
        return Err(domain("phases must be finite"));
    }
    if !(mu_a.is_finite() && mu_a >= 0.0 && mu_b.is_finite() && mu_b >= 0.0) {
        return Err(domain(format!(
            "intensities must be finite and >= 0, got {mu_a}, {mu_b}"
        )));
    }
    if !(0.0..=1.0).contains(&eta) {
        return Err(domain(format!("eta must lie in [0, 1], got {eta}")));
    }
    if !(0.0..=1.0).contains(&dark_count) {
        return Err(domain(format!(
            "dark_count must lie in [0, 1], got {dark_count}"
        )));
    }
    Ok(clicks_from_cos(
        (theta_a - theta_b).cos(),
        mu_a,
        mu_b,
        eta,
        dark_count,
    ))
}

fn clicks_from_cos(
    cos_delta: f64,
    mu_a: f64,
    mu_b: f64,
    eta: f64,
    dark: f64,
) -> ClickProbabilities {
    let cross = 2.0 * (mu_a * mu_b).sqrt() * cos_delta;
    let mu_l = (0.5 * eta * (mu_a + mu_b + cross)).max(0.0);
    let mu_r = (0.5 * eta * (mu_a + mu_b - cross)).max(0.0);
    let quiet_l = (1.0 - dark) * (-mu_l).exp();
    let quiet_r = (1.0 - dark) * (-mu_r).exp();
    let click_l = dark - (1.0 - dark) * (-mu_l).exp_m1();
    let click_r = dark - (1.0 - dark) * (-mu_r).exp_m1();
    let p_l_only = click_l * quiet_r;
    let p_r_only = quiet_l * click_r;
    let p_both = click_l * click_r;
    ClickProbabilities {
        p_l_only,
        p_r_only,
        p_both,
        p_none: 1.0 - p_l_only - p_r_only - p_both,
    }
}

/// `cos(2π·p/n)` with exact values on the quarter turns.
fn cos_turns(p: usize, n: usize) -> f64 {
    let p = p % n;
    if p == 0 {
        1.0
    } else if 2 * p == n {
        -1.0
    } else if 4 * p == n || 4 * p == 3 * n {
        0.0
    } else {
        (std::f64::consts::TAU * p as f64 / n as f64).cos()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundRecord {
    pub round: u64,
    pub kappa_a: u8,
    pub kappa_b: u8,
    pub ja: u32,
    pub jb: u32,
    pub clicks: Click,
    pub sifted: bool,
    pub flip_applied: bool,
    pub key_a: Option<u8>,
    pub key_b: Option<u8>,
    pub eve_usd: EveUsd,
}

impl RoundRecord {
    fn unsifted(round: u64, kappa_a: u8, kappa_b: u8, ja: u32, jb: u32, clicks: Click) -> Self {
        RoundRecord {
            round,
            kappa_a,
            kappa_b,
            ja,
            jb,
            clicks,
            sifted: false,
            flip_applied: false,
            key_a: None,
            key_b: None,
            eve_usd: EveUsd::Absent,
        }
    }
}

/// Keep single-click rounds whose phase slices agree or differ by half a
/// turn; Bob flips on an `R` click and again on a half-turn difference.
pub fn sift(record: &RoundRecord, d: usize) -> Result<RoundRecord> {
    if d % 2 == 1 {
        return Err(Error::OddD(d));
    }
    let mut out = RoundRecord {
        sifted: false,
        flip_applied: false,
        key_a: None,
        key_b: None,
        ..*record
    };
    let diff = (record.ja as usize + d - record.jb as usize % d) % d;
    let single = matches!(record.clicks, Click::L | Click::R);
    if !single || (diff != 0 && diff != d / 2) {
        return Ok(out);
    }
    let flip = (record.clicks == Click::R) ^ (diff == d / 2);
    out.sifted = true;
    out.flip_applied = flip;
    out.key_a = Some(record.kappa_a);
    out.key_b = Some(record.kappa_b ^ flip as u8);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimStats {
    pub adversary: Adversary,
    pub rounds: u64,
    /// Rounds with at least one click.
    pub detected: u64,
    pub sifted: u64,
    pub bit_errors: u64,
    /// Sifted rounds on which Eve's discrimination succeeded.
    pub usd_successes: u64,
    pub gain_hat: f64,
    pub gain_se: f64,
    pub sift_fraction: f64,
    pub qber_hat: f64,
    pub qber_se: f64,
    pub usd_success_fraction: f64,
    pub usd_success_se: f64,
    pub ep_lower_hat: f64,
}

fn binomial(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 0.0);
    }
    let p = k as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

impl SimStats {
    fn from_counts(adversary: Adversary, c: Counts) -> Self {
        let (gain_hat, gain_se) = binomial(c.detected, c.rounds);
        let (qber_hat, qber_se) = binomial(c.bit_errors, c.sifted);
        let (usd, usd_se) = binomial(c.usd_successes, c.sifted);
        SimStats {
            adversary,
            rounds: c.rounds,
            detected: c.detected,
            sifted: c.sifted,
            bit_errors: c.bit_errors,
            usd_successes: c.usd_successes,
            gain_hat,
            gain_se,
            sift_fraction: c.sifted as f64 / c.rounds as f64,
            qber_hat,
            qber_se,
            usd_success_fraction: usd,
            usd_success_se: usd_se,
            ep_lower_hat: usd / 2.0,
        }
    }

    /// Flat `key=value` block, one entry per line.
    pub fn write_kv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let adversary = match self.adversary {
            Adversary::None => "none",
            Adversary::Beamsplit => "beamsplit",
        };
        writeln!(w, "adversary={adversary}")?;
        writeln!(w, "rounds={}", self.rounds)?;
        writeln!(w, "detected={}", self.detected)?;
        writeln!(w, "sifted={}", self.sifted)?;
        writeln!(w, "bit_errors={}", self.bit_errors)?;
        writeln!(w, "usd_successes={}", self.usd_successes)?;
        writeln!(w, "gain_hat={:?}", self.gain_hat)?;
        writeln!(w, "gain_se={:?}", self.gain_se)?;
        writeln!(w, "sift_fraction={:?}", self.sift_fraction)?;
        writeln!(w, "qber_hat={:?}", self.qber_hat)?;
        writeln!(w, "qber_se={:?}", self.qber_se)?;
        writeln!(w, "usd_success_fraction={:?}", self.usd_success_fraction)?;
        writeln!(w, "usd_success_se={:?}", self.usd_success_se)?;
        writeln!(w, "ep_lower_hat={:?}", self.ep_lower_hat)
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Counts {
    rounds: u64,
    detected: u64,
    sifted: u64,
    bit_errors: u64,
    usd_successes: u64,
}

impl Counts {
    fn merge(self, o: Counts) -> Counts {
        Counts {
            rounds: self.rounds + o.rounds,
            detected: self.detected + o.detected,
            sifted: self.sifted + o.sifted,
            bit_errors: self.bit_errors + o.bit_errors,
            usd_successes: self.usd_successes + o.usd_successes,
        }
    }
}

/// Run `params.rounds` protocol rounds. With `keep_log`, every round is
/// also returned in round order.
pub fn run_rounds(
    params: &ProtocolParams,
    adversary: Adversary,
    keep_log: bool,
) -> Result<(SimStats, Option<Vec<RoundRecord>>)> {
    params.validate()?;
    let shards = params.rounds.div_ceil(SHARD_ROUNDS);
    let results: Vec<Result<(Counts, Vec<RoundRecord>)>> = (0..shards)
        .into_par_iter()
        .map(|s| {
            let start = s * SHARD_ROUNDS;
            let end = (start + SHARD_ROUNDS).min(params.rounds);
            run_shard(params, adversary, s, start..end, keep_log)
        })
        .collect();
    let mut counts = Counts::default();
    let mut log = keep_log.then(|| Vec::with_capacity(params.rounds as usize));
    for r in results {
        let (c, records) = r?;
        counts = counts.merge(c);
        if let Some(log) = log.as_mut() {
            log.extend(records);
        }
    }
    Ok((SimStats::from_counts(adversary, counts), log))
}

fn run_shard(
    params: &ProtocolParams,
    adversary: Adversary,
    shard: u64,
    rounds: std::ops::Range<u64>,
    keep_log: bool,
) -> Result<(Counts, Vec<RoundRecord>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(shard);
    let d = params.d;
    let p_usd = params.usd_probability();
    let mut counts = Counts::default();
    let mut log = Vec::new();
    for round in rounds {
        let kappa_a: u8 = rng.random_range(0..2);
        let kappa_b: u8 = rng.random_range(0..2);
        let ja = rng.random_range(0..d);
        let jb = rng.random_range(0..d);
        let u_click: f64 = rng.random();
        let u_swap: f64 = rng.random();
        // drawn on every round so honest and attacked runs share click draws
        let u_usd: f64 = rng.random();

        // phase difference in units of 1/(2d) of a turn
        let delta = (d * (kappa_a as usize + 2 - kappa_b as usize) + 2 * (ja + d - jb)) % (2 * d);
        let p = clicks_from_cos(
            cos_turns(delta, 2 * d),
            params.mu_a,
            params.mu_b,
            params.eta,
            params.dark_count,
        );
        let mut clicks = if u_click < p.p_l_only {
            Click::L
        } else if u_click < p.p_l_only + p.p_r_only {
            Click::R
        } else if u_click < p.p_l_only + p.p_r_only + p.p_both {
            Click::Both
        } else {
            Click::None
        };
        if u_swap < params.misalignment {
            clicks = match clicks {
                Click::L => Click::R,
                Click::R => Click::L,
                c => c,
            };
        }

        let mut rec = sift(
            &RoundRecord::unsifted(round, kappa_a, kappa_b, ja as u32, jb as u32, clicks),
            d,
        )?;
        counts.rounds += 1;
        if clicks != Click::None {
            counts.detected += 1;
        }
        if rec.sifted {
            counts.sifted += 1;
            if rec.key_a != rec.key_b {
                counts.bit_errors += 1;
            }
            if adversary == Adversary::Beamsplit {
                rec.eve_usd = if u_usd < p_usd {
                    counts.usd_successes += 1;
                    if rec.key_a == Some(1) {
                        EveUsd::Bit1
                    } else {
                        EveUsd::Bit0
                    }
                } else {
                    EveUsd::Inconclusive
                };
            }
        }
        if keep_log {
            log.push(rec);
        }
    }
    Ok((counts, log))
}

/// `½ × usd_success_fraction` from an attacked run.
pub fn estimate_attack_phase_error(stats: &SimStats) -> Result<f64> {
    if stats.adversary != Adversary::Beamsplit {
        return Err(Error::NotAttackRun);
    }
    Ok(stats.usd_success_fraction / 2.0)
}

pub fn write_round_log<W: Write>(records: &[RoundRecord], mut w: W) -> io::Result<()> {
    writeln!(
        w,
        "round,kappa_a,kappa_b,ja,jb,click,sifted,key_a,key_b,eve_usd"
    )?;
    let bit = |b: Option<u8>| b.map(|v| v.to_string()).unwrap_or_default();
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            r.round,
            r.kappa_a,
            r.kappa_b,
            r.ja,
            r.jb,
            r.clicks,
            r.sifted as u8,
            bit(r.key_a),
            bit(r.key_b),
            r.eve_usd
        )?;
    }
    Ok(())
}
