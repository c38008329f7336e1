//! Small helpers around `BigRational`.

use num::bigint::{BigInt, BigUint};
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};

pub fn rat<A: Into<BigInt>, B: Into<BigInt>>(p: A, q: B) -> BigRational {
    BigRational::new(p.into(), q.into())
}

pub fn int<A: Into<BigInt>>(p: A) -> BigRational {
    BigRational::from_integer(p.into())
}

pub fn pow(base: &BigRational, e: u64) -> BigRational {
    let mut acc = BigRational::one();
    let mut b = base.clone();
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            acc *= &b;
        }
        e >>= 1;
        if e > 0 {
            b = &b * &b;
        }
    }
    acc
}

pub fn biguint_pow(base: u64, e: u64) -> BigUint {
    num::pow(BigUint::from(base), e as usize)
}

/// Renders `r` as `p/q` (or `p` when integral).
pub fn fraction_string(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Decimal rendering used next to exact values in reports.
pub fn decimal_string(r: &BigRational) -> String {
    if r.is_zero() {
        return "0".to_string();
    }
    let x = r.to_f64().unwrap_or(f64::NAN);
    if x.abs() >= 1e-4 && x.abs() < 1e12 {
        format!("{:.10}", x)
    } else if x.is_finite() && x != 0.0 {
        format!("{:.6e}", x)
    } else {
        // value underflows f64: report magnitude via digit counts
        let digits = r.numer().abs().to_string().len() as i64 - r.denom().to_string().len() as i64;
        format!("~1e{}", digits)
    }
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}
