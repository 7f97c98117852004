// SPDX-License-Identifier: Apache-2.0

//! Fixed-precision number rendering shared by every textual output.

use crate::machine::Amplitude;

/// Significant digits in all printed probabilities and amplitudes.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// Imaginary parts below this are printed as real numbers.
const IMAGINARY_CUTOFF: f64 = 1e-15;

/// `x` with [`SIGNIFICANT_DIGITS`] significant digits; positional notation
/// for exponents in `-5..12`, scientific otherwise.
pub fn sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (_, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if (-5..12).contains(&exp) {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        sci
    }
}

/// Complex amplitude as `re`, `im i` or `re+im i` without spaces.
pub fn complex(a: Amplitude) -> String {
    let im = if a.im.abs() < IMAGINARY_CUTOFF { 0.0 } else { a.im };
    let re = if a.re.abs() < IMAGINARY_CUTOFF && im != 0.0 { 0.0 } else { a.re };
    match (re == 0.0, im == 0.0) {
        (_, true) => sig(re),
        (true, false) => format!("{}i", sig(im)),
        (false, false) if im < 0.0 => format!("{}-{}i", sig(re), sig(-im)),
        (false, false) => format!("{}+{}i", sig(re), sig(im)),
    }
}

/// Shortest text that parses back to exactly `a`, for machine files.
pub fn exact_complex(a: Amplitude) -> String {
    match (a.re == 0.0, a.im == 0.0) {
        (_, true) => format!("{}", a.re),
        (true, false) => format!("{} i", a.im),
        (false, false) if a.im < 0.0 => format!("{} - {} i", a.re, -a.im),
        (false, false) => format!("{} + {} i", a.re, a.im),
    }
}
