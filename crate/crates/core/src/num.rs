//! Numeric ground rules.
//!
//! Money and quantities are exact integers (smallest currency unit, whole
//! product units). Periods are integer indices starting at 1; indices <= 0
//! appear only in backward-planning intermediate results. The only rational
//! values in the system are cost-per-unit rates and performance ratios; both
//! are kept exact and compared by cross-multiplication, never as floats.

use serde::{Deserialize, Serialize};

pub type Money = i64;
pub type Quantity = i64;
pub type Period = i32;
pub type Tier = u32;

/// An exact non-negative rational rate (e.g. money per product unit).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ratio {
    num: i64,
    den: i64,
}

impl Ratio {
    pub const ZERO: Ratio = Ratio { num: 0, den: 1 };

    /// `den` must be positive and `num` non-negative.
    pub fn new(num: i64, den: i64) -> Result<Self, String> {
        if den <= 0 {
            return Err(format!("ratio denominator must be positive, got {den}"));
        }
        if num < 0 {
            return Err(format!("ratio numerator must be non-negative, got {num}"));
        }
        Ok(Self { num, den })
    }

    pub fn from_int(n: i64) -> Result<Self, String> {
        Self::new(n, 1)
    }

    pub fn num(&self) -> i64 {
        self.num
    }

    pub fn den(&self) -> i64 {
        self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    /// Total cost of `quantity` units at this rate, rounded up to the next
    /// whole money unit when inexact.
    pub fn cost_for(&self, quantity: Quantity) -> Money {
        debug_assert!(quantity >= 0);
        let prod = quantity as i128 * self.num as i128;
        let den = self.den as i128;
        ((prod + den - 1) / den) as Money
    }
}

impl Serialize for Ratio {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.den == 1 {
            s.serialize_i64(self.num)
        } else {
            (self.num, self.den).serialize(s)
        }
    }
}

impl<'de> Deserialize<'de> for Ratio {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(i64),
            Pair(i64, i64),
        }
        let repr = Repr::deserialize(d)?;
        let (num, den) = match repr {
            Repr::Int(n) => (n, 1),
            Repr::Pair(n, d) => (n, d),
        };
        Ratio::new(num, den).map_err(serde::de::Error::custom)
    }
}

/// Compares the exact fractions `a_num/a_den` and `b_num/b_den`
/// (denominators positive) by cross-multiplication.
pub fn cmp_fractions(a_num: i64, a_den: i64, b_num: i64, b_den: i64) -> std::cmp::Ordering {
    debug_assert!(a_den > 0 && b_den > 0);
    let lhs = a_num as i128 * b_den as i128;
    let rhs = b_num as i128 * a_den as i128;
    lhs.cmp(&rhs)
}

/// Renders `num/den` to three significant digits, half-up, with trailing
/// zeros trimmed. Comparison logic never uses this; it is display-only.
pub fn format_ratio_3sig(num: i64, den: i64) -> String {
    assert!(den > 0 && num >= 0);
    if num == 0 {
        return "0".to_string();
    }
    // Find the smallest exponent e with num * 10^e / den >= 100, then round
    // the three-digit mantissa half-up.
    let num = num as i128;
    let den = den as i128;
    let mut e: i32 = 0;
    let mut scaled = num;
    while scaled < 100 * den {
        scaled *= 10;
        e += 1;
    }
    while scaled >= 1000 * den {
        scaled /= 10;
        e -= 1;
    }
    let mut mantissa = (2 * scaled + den) / (2 * den);
    if mantissa == 1000 {
        mantissa = 100;
        e -= 1;
    }
    let digits = mantissa.to_string();
    let mut out = if e <= 0 {
        let mut s = digits;
        s.push_str(&"0".repeat((-e) as usize));
        s
    } else {
        let int_digits = 3 - e;
        if int_digits > 0 {
            let (int_part, frac_part) = digits.split_at(int_digits as usize);
            format!("{int_part}.{frac_part}")
        } else {
            format!("0.{}{}", "0".repeat((-int_digits) as usize), digits)
        }
    };
    if out.contains('.') {
        while out.ends_with('0') {
            out.pop();
        }
        if out.ends_with('.') {
            out.pop();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cost_rounds_up() {
        let r = Ratio::new(45, 500).unwrap();
        assert_eq!(r.cost_for(500), 45);
        assert_eq!(r.cost_for(100), 9);
        assert_eq!(r.cost_for(1), 1);
        assert_eq!(r.cost_for(0), 0);
    }

    #[test]
    fn fraction_comparison_is_exact() {
        use std::cmp::Ordering::*;
        // 8/100 < 5/60 < 10/100 < 12/100
        assert_eq!(cmp_fractions(8, 100, 5, 60), Less);
        assert_eq!(cmp_fractions(5, 60, 10, 100), Less);
        assert_eq!(cmp_fractions(10, 100, 12, 100), Less);
        assert_eq!(cmp_fractions(13, 150, 8, 90), Less);
        assert_eq!(cmp_fractions(3, 9, 1, 3), Equal);
    }

    #[test]
    fn three_significant_digits() {
        assert_eq!(format_ratio_3sig(8, 100), "0.08");
        assert_eq!(format_ratio_3sig(5, 60), "0.0833");
        assert_eq!(format_ratio_3sig(10, 100), "0.1");
        assert_eq!(format_ratio_3sig(12, 100), "0.12");
        assert_eq!(format_ratio_3sig(13, 150), "0.0867");
        assert_eq!(format_ratio_3sig(8, 90), "0.0889");
        assert_eq!(format_ratio_3sig(8, 70), "0.114");
        assert_eq!(format_ratio_3sig(12, 90), "0.133");
        assert_eq!(format_ratio_3sig(6, 40), "0.15");
        assert_eq!(format_ratio_3sig(0, 5), "0");
        assert_eq!(format_ratio_3sig(5, 2), "2.5");
        assert_eq!(format_ratio_3sig(100, 1), "100");
        assert_eq!(format_ratio_3sig(9999, 10), "1000");
    }

    #[test]
    fn ratio_serde_accepts_int_and_pair() {
        let a: Ratio = serde_json::from_str("45").unwrap();
        assert_eq!((a.num(), a.den()), (45, 1));
        let b: Ratio = serde_json::from_str("[45, 500]").unwrap();
        assert_eq!((b.num(), b.den()), (45, 500));
        assert!(serde_json::from_str::<Ratio>("[1, 0]").is_err());
        assert_eq!(serde_json::to_string(&a).unwrap(), "45");
        assert_eq!(serde_json::to_string(&b).unwrap(), "[45,500]");
    }
}
