//! Complex Γ and ψ on the strip the Fourier coefficients live in.
//!
//! Both use upward shifting to |z| ≥ 16 followed by the Stirling series,
//! with the reflection formula for Re z < 1/2.

use core::f64::consts::PI;
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleError {
    pub at: f64,
}

impl core::fmt::Display for PoleError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "gamma/digamma pole at {}", self.at)
    }
}

// B_{2k} / (2k(2k-1)) for k = 1..10
const STIRLING: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
    43867.0 / 244188.0,
    -174611.0 / 125400.0,
];

// B_{2k} / (2k) for the digamma tail
const DIGAMMA_TAIL: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
    -3617.0 / 8160.0,
    43867.0 / 14364.0,
    -174611.0 / 6600.0,
];

const SHIFT_TO: f64 = 16.0;

fn check_pole(z: Complex64) -> Result<(), PoleError> {
    if z.im == 0.0 && z.re <= 0.0 && z.re == libm::floor(z.re) {
        return Err(PoleError { at: z.re });
    }
    Ok(())
}

/// Principal-branch-free log Γ: the imaginary part is only meaningful modulo 2π,
/// which is all `complex_gamma` needs.
fn ln_gamma_right(mut z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    while z.norm() < SHIFT_TO {
        acc -= z.ln();
        z += 1.0;
    }
    let half_ln_2pi = 0.5 * libm::log(2.0 * PI);
    let mut s = (z - 0.5) * z.ln() - z + half_ln_2pi;
    let inv = z.inv();
    let inv2 = inv * inv;
    let mut p = inv;
    for c in STIRLING {
        s += p * c;
        p *= inv2;
    }
    s + acc
}

pub fn complex_gamma(z: Complex64) -> Result<Complex64, PoleError> {
    check_pole(z)?;
    if z.re < 0.5 {
        // Γ(z) = π / (sin(πz) Γ(1-z))
        let s = (z * PI).sin();
        let g = ln_gamma_right(Complex64::new(1.0, 0.0) - z).exp();
        return Ok(Complex64::new(PI, 0.0) / (s * g));
    }
    Ok(ln_gamma_right(z).exp())
}

pub fn digamma(z: Complex64) -> Result<Complex64, PoleError> {
    check_pole(z)?;
    if z.re < 0.5 {
        // ψ(z) = ψ(1-z) - π cot(πz)
        let w = Complex64::new(1.0, 0.0) - z;
        let cot = (z * PI).cos() / (z * PI).sin();
        return Ok(digamma(w)? - cot * PI);
    }
    let mut z = z;
    let mut acc = Complex64::new(0.0, 0.0);
    while z.norm() < SHIFT_TO {
        acc -= z.inv();
        z += 1.0;
    }
    let inv = z.inv();
    let inv2 = inv * inv;
    let mut s = z.ln() - inv * 0.5;
    let mut p = inv2;
    for c in DIGAMMA_TAIL {
        s -= p * c;
        p *= inv2;
    }
    Ok(s + acc)
}

/// Real log-gamma for positive arguments.
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn small_integers_and_half() {
        assert!(rel(complex_gamma(c(5.0, 0.0)).unwrap(), c(24.0, 0.0)) < 1e-14);
        let sp = libm::sqrt(PI);
        assert!(rel(complex_gamma(c(0.5, 0.0)).unwrap(), c(sp, 0.0)) < 1e-14);
        assert!(complex_gamma(c(-2.0, 0.0)).is_err());
        assert!(digamma(c(0.0, 0.0)).is_err());
    }

    // Reference values computed with mpmath at 30 digits.
    #[test]
    fn gamma_matches_high_precision_reference() {
        let cases = [
            (c(2.0, 9.064720283654388), c(3.7496632615912033e-5, 2.5009087727034811e-5)),
            (c(-1.0, -9.064720283654388), c(-3.3172725863049072e-8, -4.9736540897911141e-8)),
            (c(-2.7, 3.1), c(3.2368929928778555e-4, 7.6054804233321258e-5)),
            (c(4.5, 60.0), c(-3.7587988301235987e-34, -6.6134717946032823e-35)),
        ];
        for (z, want) in cases {
            let got = complex_gamma(z).unwrap();
            assert!(rel(got, want) < 1e-12, "Γ({z}) = {got}, want {want}");
        }
    }

    #[test]
    fn digamma_reference() {
        let cases = [
            (c(1.0, 0.0), c(-EULER_GAMMA, 0.0)),
            (c(2.0, 0.0), c(1.0 - EULER_GAMMA, 0.0)),
            (c(2.0, 9.064720283654388), c(2.2174290850858397, 1.4066460535467182)),
            (c(-2.5, 1.0), c(1.1546043967509455, 2.8105638599909456)),
        ];
        for (z, want) in cases {
            let got = digamma(z).unwrap();
            assert!((got - want).norm() < 1e-12 * (1.0 + want.norm()), "ψ({z}) = {got}");
        }
    }

    #[test]
    fn recurrence_gamma_z_plus_one() {
        for &(re, im) in &[(-2.3, 0.7), (0.1, -20.0), (3.3, 45.0)] {
            let z = c(re, im);
            let lhs = complex_gamma(z + 1.0).unwrap();
            let rhs = complex_gamma(z).unwrap() * z;
            assert!(rel(lhs, rhs) < 1e-12);
        }
    }
}
