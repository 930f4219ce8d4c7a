//! Double-double complex scalars and exactly reduced phase factors.
//!
//! Amplitudes carry roughly 32 significant digits. Branches of the
//! phase-randomised circuit can have probabilities near 1e-30 while sitting
//! next to components of order one, and plain `f64` rounding noise would swamp
//! them.

use super::dd::{self as consts, Dd};
use num_complex::{Complex, Complex64};

/// A single state-vector amplitude.
pub type Amplitude = Complex<Dd>;

#[inline]
pub fn dd(x: f64) -> Dd {
    Dd::from_f64(x)
}

#[inline]
pub fn amp(re: f64, im: f64) -> Amplitude {
    Complex::new(dd(re), dd(im))
}

#[inline]
pub fn amp_zero() -> Amplitude {
    amp(0.0, 0.0)
}

#[inline]
pub fn amp_one() -> Amplitude {
    amp(1.0, 0.0)
}

#[inline]
pub fn to_c64(a: Amplitude) -> Complex64 {
    Complex64::new(a.re.into(), a.im.into())
}

#[inline]
pub fn from_c64(z: Complex64) -> Amplitude {
    amp(z.re, z.im)
}

#[inline]
pub fn norm_sqr(a: &Amplitude) -> Dd {
    a.re * a.re + a.im * a.im
}

#[inline]
pub fn scale(a: Amplitude, s: Dd) -> Amplitude {
    Complex::new(a.re * s, a.im * s)
}

/// A rotation angle, either an exact rational fraction of a full turn or an
/// arbitrary real number of radians.
///
/// Rational angles produce phase factors with exact quadrant and reflection
/// symmetry, so discrete Fourier sums that should vanish cancel to
/// double-double precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Angle {
    /// `num / den` of a full turn (`2π·num/den` radians).
    Turns {
        num: i64,
        den: u64,
    },
    Radians(f64),
}

impl Angle {
    pub fn radians(theta: f64) -> Self {
        Angle::Radians(theta)
    }

    /// `num / den` of a full turn. `den` must be positive.
    pub fn turns(num: i64, den: u64) -> Self {
        assert!(den > 0, "angle denominator must be positive");
        Angle::Turns { num, den }
    }

    /// The angle `2π/d`.
    pub fn slice(d: usize) -> Self {
        Angle::turns(1, d as u64)
    }

    /// The angle `π`.
    pub fn half_turn() -> Self {
        Angle::turns(1, 2)
    }

    pub fn zero() -> Self {
        Angle::turns(0, 1)
    }

    /// Multiply the angle by an integer.
    pub fn times(self, m: i64) -> Self {
        match self {
            Angle::Turns { num, den } => {
                let n = (num as i128 * m as i128).rem_euclid(den as i128) as i64;
                Angle::Turns { num: n, den }
            }
            Angle::Radians(t) => Angle::Radians(t * m as f64),
        }
    }

    pub fn to_radians(self) -> f64 {
        match self {
            Angle::Turns { num, den } => std::f64::consts::TAU * num as f64 / den as f64,
            Angle::Radians(t) => t,
        }
    }

    /// `e^{iθ}` in double-double precision.
    pub fn phase(self) -> Amplitude {
        match self {
            Angle::Turns { num, den } => cis_turns(num, den),
            Angle::Radians(t) => cis_radians(t),
        }
    }
}

/// `e^{2πi·num/den}`, reduced with integer arithmetic to the first octant.
fn cis_turns(num: i64, den: u64) -> Amplitude {
    let den = den as i128;
    let p = (num as i128).rem_euclid(den);
    // quadrant index and position inside the quadrant, in units of 1/den
    let quadrant = (4 * p) / den;
    let rem = 4 * p - quadrant * den;
    let (c, s) = if 2 * rem <= den {
        let (sin, cos) = sin_cos_small(consts::FRAC_PI_2 * dd(rem as f64) / dd(den as f64));
        (cos, sin)
    } else {
        // reflect about π/4 so the Taylor argument stays small
        let (sin, cos) = sin_cos_small(consts::FRAC_PI_2 * dd((den - rem) as f64) / dd(den as f64));
        (sin, cos)
    };
    rotate_quadrant(Complex::new(c, s), quadrant as u8)
}

fn cis_radians(theta: f64) -> Amplitude {
    let t = dd(theta);
    let turns = (t / consts::TAU).hi().round();
    let r = t - consts::TAU * dd(turns);
    let q = (r / consts::FRAC_PI_2).hi().round();
    let x = r - consts::FRAC_PI_2 * dd(q);
    let (s, c) = sin_cos_small(x);
    rotate_quadrant(Complex::new(c, s), (q as i64).rem_euclid(4) as u8)
}

/// Multiply by `i^quadrant` (exact).
fn rotate_quadrant(z: Amplitude, quadrant: u8) -> Amplitude {
    match quadrant % 4 {
        0 => z,
        1 => Complex::new(-z.im, z.re),
        2 => Complex::new(-z.re, -z.im),
        _ => Complex::new(z.im, -z.re),
    }
}

/// Taylor series for `|x| ≤ π/4`; returns `(sin x, cos x)`.
fn sin_cos_small(x: Dd) -> (Dd, Dd) {
    let x2 = x * x;
    let mut sin = x;
    let mut cos = dd(1.0);
    let mut term_s = x;
    let mut term_c = dd(1.0);
    let mut n = 1.0_f64;
    loop {
        term_c = -term_c * x2 / dd(n * (n + 1.0));
        term_s = -term_s * x2 / dd((n + 1.0) * (n + 2.0));
        cos += term_c;
        sin += term_s;
        n += 2.0;
        if term_c.hi().abs() < 1e-36 && term_s.hi().abs() < 1e-36 {
            break;
        }
    }
    (sin, cos)
}

/// `√x` for a non-negative double-double.
pub fn sqrt(x: Dd) -> Dd {
    if x.hi() <= 0.0 {
        dd(0.0)
    } else {
        x.sqrt()
    }
}
