//! Output files and CSV formatting.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use pmqkd_core::rates::SweepRow;
use pmqkd_core::SimStats;

/// Round `x` to `digits` significant digits, then print the shortest string
/// that parses back to the rounded value.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let p = digits.clamp(1, 17) - 1;
    let rounded: f64 = format!("{x:.p$e}").parse().expect("float round trip");
    format!("{rounded:?}")
}

/// Files written by one command. Dropping the set without calling
/// [`OutputSet::keep`] deletes them, so a failed run leaves no partial output.
pub struct OutputSet {
    dir: PathBuf,
    written: Vec<PathBuf>,
    keep: bool,
}

impl OutputSet {
    pub fn new(dir: &Path) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(OutputSet {
            dir: dir.to_path_buf(),
            written: Vec::new(),
            keep: false,
        })
    }

    pub fn create(&mut self, name: &str) -> io::Result<BufWriter<File>> {
        let path = self.dir.join(name);
        let file = File::create(&path)?;
        self.written.push(path);
        Ok(BufWriter::new(file))
    }

    /// Write a whole file at once.
    pub fn write(&mut self, name: &str, body: &[u8]) -> io::Result<()> {
        let mut w = self.create(name)?;
        w.write_all(body)?;
        w.flush()
    }

    pub fn paths(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn keep(mut self) -> Vec<PathBuf> {
        self.keep = true;
        std::mem::take(&mut self.written)
    }
}

impl Drop for OutputSet {
    fn drop(&mut self) {
        if !self.keep {
            for p in &self.written {
                let _ = fs::remove_file(p);
            }
        }
    }
}

pub const SWEEP_HEADER: &str =
    "mu,eta_db,eta,gain,ep_upper,ep_lower,p_usd,gap_ratio,rate_lower,rate_upper";

/// Sweep rows as CSV. With `clamp_rates`, negative key rates print as 0.
pub fn write_sweep_csv<W: Write>(
    rows: &[SweepRow],
    digits: usize,
    clamp_rates: bool,
    mut w: W,
) -> io::Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    let rate = |r: f64| if clamp_rates { r.max(0.0) } else { r };
    for r in rows {
        let cells = [
            r.point.mu,
            r.point.eta_db,
            r.point.eta,
            r.q_gain,
            r.ep_upper,
            r.ep_lower,
            r.p_usd,
            r.gap_ratio,
            rate(r.rate_lower),
            rate(r.rate_upper),
        ];
        let line: Vec<String> = cells.iter().map(|&x| fmt_sig(x, digits)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()
}

pub const ATTACK_HEADER: &str = "mu,eta_db,eta,rounds,gain_hat,gain_se,gain_expected,\
qber_hat,usd_success_fraction,usd_success_se,usd_expected,ep_lower_hat,ep_lower,ep_upper";

/// One attack-sweep row: the simulated statistics next to the analytic values.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackRow {
    pub row: SweepRow,
    pub stats: SimStats,
    /// Analytic USD success probability for the simulated intensities.
    pub usd_expected: f64,
}

pub fn write_attack_csv<W: Write>(rows: &[AttackRow], digits: usize, mut w: W) -> io::Result<()> {
    writeln!(w, "{ATTACK_HEADER}")?;
    for a in rows {
        let s = &a.stats;
        let f = |x: f64| fmt_sig(x, digits);
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            f(a.row.point.mu),
            f(a.row.point.eta_db),
            f(a.row.point.eta),
            s.rounds,
            f(s.gain_hat),
            f(s.gain_se),
            f(a.row.q_gain),
            f(s.qber_hat),
            f(s.usd_success_fraction),
            f(s.usd_success_se),
            f(a.usd_expected),
            f(s.ep_lower_hat),
            f(a.row.ep_lower),
            f(a.row.ep_upper),
        )?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(fmt_sig(0.090_225_053_333_537_19, 12), "0.0902250533335");
        assert_eq!(fmt_sig(1.0, 12), "1.0");
        assert_eq!(fmt_sig(0.0, 12), "0.0");
        assert_eq!(fmt_sig(-5.624981e-4, 3), "-0.000562");
        assert_eq!(fmt_sig(1.23456e-9, 2), "1.2e-9");
        assert_eq!(fmt_sig(f64::NAN, 12), "NaN");
    }

    #[test]
    fn round_trip_within_precision() {
        for &x in &[0.1, 1.0 / 3.0, 9.995001666250083e-4, 123456.789, 2e-300] {
            let y: f64 = fmt_sig(x, 12).parse().unwrap();
            assert!(((y - x) / x).abs() <= 5e-12, "{x} -> {y}");
        }
    }

    #[test]
    fn output_set_cleans_up_unless_kept() {
        let dir = tempfile::tempdir().unwrap();
        {
            let mut set = OutputSet::new(dir.path()).unwrap();
            set.write("a.txt", b"x").unwrap();
            assert!(dir.path().join("a.txt").exists());
        }
        assert!(!dir.path().join("a.txt").exists());
        let mut set = OutputSet::new(dir.path()).unwrap();
        set.write("b.txt", b"x").unwrap();
        set.keep();
        assert!(dir.path().join("b.txt").exists());
    }
}
