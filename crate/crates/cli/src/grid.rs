//! Parameter grids: a single value, a comma list, or `start:stop:step`.

/// Largest number of points a range may expand to.
pub const MAX_POINTS: usize = 1_000_000;

/// Parse a grid specification. Ranges include `stop` when it lies on the
/// step lattice (to within a relative 1e-9 of the step).
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, String> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Err("empty grid".into());
    }
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let [start, stop, step] = parts[..] else {
            return Err(format!("range `{spec}` must have the form start:stop:step"));
        };
        let (start, stop, step) = (number(start)?, number(stop)?, number(step)?);
        if step <= 0.0 {
            return Err(format!("range step must be positive, got {step}"));
        }
        if stop < start {
            return Err(format!("range stop {stop} is below start {start}"));
        }
        let span = (stop - start) / step;
        let n = (span + 1e-9).floor();
        if n + 1.0 > MAX_POINTS as f64 {
            return Err(format!("range `{spec}` has more than {MAX_POINTS} points"));
        }
        let n = n as usize;
        let mut out: Vec<f64> = (0..=n).map(|i| start + i as f64 * step).collect();
        // land exactly on stop when the lattice reaches it
        if (span - n as f64).abs() <= 1e-9 {
            out[n] = stop;
        }
        return Ok(out);
    }
    spec.split(',').map(number).collect()
}

fn number(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}
