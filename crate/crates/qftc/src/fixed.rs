//! Fixed-point codes stored in qubit registers.
//!
//! A complemental code `c0.c1...cp` has value `-c0 + sum c_i 2^-i` and lives
//! in `[-1, 1)`; arithmetic on it is modulo 2. A plain code `.c1...cp` has
//! value `sum c_i 2^-i` in `[0, 1)`. The raw integer of a code is its digit
//! string read as binary, which is also the basis value of the register
//! holding it.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{QftcError, Result};
use crate::state::MAX_REGISTER_WIDTH;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FixedPointFormat {
    pub integer_digits: usize,
    pub fraction_digits: usize,
    pub complemental: bool,
}

impl FixedPointFormat {
    /// `c0.c1...cp`, range `[-1, 1)`.
    #[must_use]
    pub fn complemental(p: usize) -> Self {
        Self {
            integer_digits: 1,
            fraction_digits: p,
            complemental: true,
        }
    }

    /// `.c1...cp`, range `[0, 1)`.
    #[must_use]
    pub fn plain(p: usize) -> Self {
        Self {
            integer_digits: 0,
            fraction_digits: p,
            complemental: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.fraction_digits >= 1
            && self.width() <= MAX_REGISTER_WIDTH
            && self.integer_digits == usize::from(self.complemental);
        if ok {
            Ok(())
        } else {
            Err(QftcError::InvalidArgument(format!("bad fixed-point format {self}")))
        }
    }

    /// Number of qubits holding a code.
    #[must_use]
    pub fn width(&self) -> usize {
        self.integer_digits + self.fraction_digits
    }

    /// Number of distinct codes.
    #[must_use]
    pub fn size(&self) -> u64 {
        1u64 << self.width()
    }

    /// Value of one unit in the last place.
    #[must_use]
    pub fn ulp(&self) -> f64 {
        (-(self.fraction_digits as f64)).exp2()
    }

    /// Value of a raw digit string.
    #[must_use]
    pub fn value_of(&self, raw: u64) -> f64 {
        let v = raw as f64 * self.ulp();
        if self.complemental && raw >> self.fraction_digits & 1 == 1 {
            v - 2.0
        } else {
            v
        }
    }

    /// Raw value read as a signed multiple of the ulp.
    #[must_use]
    pub fn signed(&self, raw: u64) -> i64 {
        if self.complemental && raw >> self.fraction_digits & 1 == 1 {
            raw as i64 - (1i64 << (self.fraction_digits + 1))
        } else {
            raw as i64
        }
    }
}

impl fmt::Display for FixedPointFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.complemental {
            write!(f, "complemental(1.{})", self.fraction_digits)
        } else {
            write!(f, "plain(.{})", self.fraction_digits)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FixedPointCode {
    pub format: FixedPointFormat,
    raw: u64,
}

impl FixedPointCode {
    pub fn from_raw(format: FixedPointFormat, raw: u64) -> Result<Self> {
        format.validate()?;
        if raw >= format.size() {
            return Err(QftcError::InvalidArgument(format!(
                "raw code {raw} does not fit {format}"
            )));
        }
        Ok(Self { format, raw })
    }

    #[must_use]
    pub fn raw(&self) -> u64 {
        self.raw
    }

    #[must_use]
    pub fn value(&self) -> f64 {
        self.format.value_of(self.raw)
    }

    /// Digits most significant first: `c0` (if any), then `c1..cp`.
    #[must_use]
    pub fn digits(&self) -> Vec<bool> {
        let w = self.format.width();
        (0..w).map(|i| self.raw >> (w - 1 - i) & 1 == 1).collect()
    }
}

impl fmt::Display for FixedPointCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = self.digits();
        let (int, frac) = digits.split_at(self.format.integer_digits);
        for d in int {
            f.write_str(if *d { "1" } else { "0" })?;
        }
        f.write_str(".")?;
        for d in frac {
            f.write_str(if *d { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for FixedPointCode {
    type Err = QftcError;

    /// Parse `"1.110"` (complemental) or `".11"` (plain).
    fn from_str(s: &str) -> Result<Self> {
        let bad = || QftcError::InvalidArgument(format!("malformed digit string `{s}`"));
        let (int, frac) = s.split_once('.').ok_or_else(bad)?;
        if int.len() > 1 || !s.chars().all(|c| c == '0' || c == '1' || c == '.') {
            return Err(bad());
        }
        let format = if int.is_empty() {
            FixedPointFormat::plain(frac.len())
        } else {
            FixedPointFormat::complemental(frac.len())
        };
        format.validate()?;
        let raw = s
            .chars()
            .filter(|c| *c != '.')
            .fold(0u64, |acc, c| (acc << 1) | u64::from(c == '1'));
        Self::from_raw(format, raw)
    }
}

/// Nearest code to `x`, ties toward negative infinity.
///
/// Complemental formats accept the open interval `(-1, 1)` after rounding;
/// plain formats accept `[0, 1)`. Out-of-range values are rejected, never
/// wrapped.
pub fn encode_fixed(x: f64, format: FixedPointFormat) -> Result<FixedPointCode> {
    format.validate()?;
    let range_err = || QftcError::Range {
        value: x,
        format: format.to_string(),
    };
    if !x.is_finite() {
        return Err(range_err());
    }
    let scale = (format.fraction_digits as f64).exp2();
    let q = (x * scale - 0.5).ceil();
    let top = scale - 1.0;
    let bottom = if format.complemental { -scale + 1.0 } else { 0.0 };
    if q > top || q < bottom {
        return Err(range_err());
    }
    let q = q as i64;
    let raw = if q < 0 { (q + 2 * scale as i64) as u64 } else { q as u64 };
    FixedPointCode::from_raw(format, raw)
}

#[must_use]
pub fn decode_fixed(code: &FixedPointCode) -> f64 {
    code.value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn documented_examples() {
        let c = encode_fixed(0.75, FixedPointFormat::plain(2)).unwrap();
        assert_eq!(c.to_string(), ".11");
        let c = encode_fixed(-0.25, FixedPointFormat::complemental(3)).unwrap();
        assert_eq!(c.to_string(), "1.110");
        assert_eq!(c.raw() as f64 / 8.0, 1.75);
        assert!(encode_fixed(-1.0, FixedPointFormat::complemental(3)).is_err());
        assert!(encode_fixed(1.0, FixedPointFormat::complemental(3)).is_err());
        assert!(encode_fixed(-0.1, FixedPointFormat::plain(3)).is_err());
    }

    #[test]
    fn ties_round_down() {
        let f = FixedPointFormat::complemental(2);
        assert_eq!(encode_fixed(0.125, f).unwrap().value(), 0.0);
        assert_eq!(encode_fixed(-0.125, f).unwrap().value(), -0.25);
        assert_eq!(encode_fixed(0.13, f).unwrap().value(), 0.25);
    }

    #[test]
    fn parse_and_print() {
        for s in ["1.110", "0.000", ".11", ".0", "1.0101"] {
            assert_eq!(s.parse::<FixedPointCode>().unwrap().to_string(), s);
        }
        assert!("11.0".parse::<FixedPointCode>().is_err());
        assert!("1.2".parse::<FixedPointCode>().is_err());
        assert_eq!("1.000".parse::<FixedPointCode>().unwrap().value(), -1.0);
    }

    proptest! {
        #[test]
        fn round_trip_complemental(p in 1usize..20, raw in any::<u64>()) {
            let f = FixedPointFormat::complemental(p);
            let raw = raw % f.size();
            let code = FixedPointCode::from_raw(f, raw).unwrap();
            // The code for -1 is decodable but not encodable.
            prop_assume!(code.value() != -1.0);
            prop_assert_eq!(encode_fixed(code.value(), f).unwrap(), code);
        }

        #[test]
        fn round_trip_plain(p in 1usize..20, raw in any::<u64>()) {
            let f = FixedPointFormat::plain(p);
            let code = FixedPointCode::from_raw(f, raw % f.size()).unwrap();
            prop_assert_eq!(encode_fixed(code.value(), f).unwrap(), code);
        }

        #[test]
        fn encode_error_within_half_ulp(p in 1usize..30, x in -0.999f64..0.999) {
            let f = FixedPointFormat::complemental(p);
            if let Ok(c) = encode_fixed(x, f) {
                prop_assert!((c.value() - x).abs() <= f.ulp() / 2.0 + 1e-15);
                prop_assert!((-1.0..1.0).contains(&c.value()));
            }
        }
    }
}
