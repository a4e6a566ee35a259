//! Canonical text form for arbitrary-precision rationals.
//!
//! Rationals are written `p/q` in lowest terms with `q > 0`, and as bare `p`
//! when `q = 1`. Parsing accepts any `p/q` with `q != 0` and canonicalizes.

use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    assert!(d != 0, "zero denominator");
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn format_rational(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

fn parse_int(s: &str) -> Option<BigInt> {
    let digits = s.strip_prefix('-').unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    BigInt::from_str(s).ok()
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    let bad = || Error::input(format!("not a rational: {s:?}"));
    match s.split_once('/') {
        None => parse_int(s).map(Rational::from_integer).ok_or_else(bad),
        Some((p, q)) => {
            let p = parse_int(p).ok_or_else(bad)?;
            let q = parse_int(q).ok_or_else(bad)?;
            if q.is_zero() {
                return Err(Error::input(format!("zero denominator in {s:?}")));
            }
            Ok(Rational::new(p, q))
        }
    }
}

pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        if q.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Best rational approximation of `x` with denominator at most `max_den`,
/// taken from the continued-fraction convergents and semiconvergents.
pub fn approximate(x: f64, max_den: u64) -> Option<Rational> {
    if !x.is_finite() || max_den == 0 {
        return None;
    }
    let exact = Rational::from_float(x)?;
    let neg = exact.is_negative();
    let target = exact.abs();
    let max_den = BigInt::from(max_den);

    // h/k convergents, starting from 0/1 and 1/0.
    let (mut h0, mut h1) = (BigInt::zero(), BigInt::one());
    let (mut k0, mut k1) = (BigInt::one(), BigInt::zero());
    let mut rest = target.clone();
    loop {
        let a = rest.floor().to_integer();
        let h2 = &a * &h1 + &h0;
        let k2 = &a * &k1 + &k0;
        if k2 > max_den {
            // Largest admissible semiconvergent, compared against the last convergent.
            let t = (&max_den - &k0) / &k1;
            let semi = Rational::new(&t * &h1 + &h0, &t * &k1 + &k0);
            let conv = Rational::new(h1.clone(), k1.clone());
            let best = if (&semi - &target).abs() < (&conv - &target).abs() {
                semi
            } else {
                conv
            };
            return Some(if neg { -best } else { best });
        }
        h0 = std::mem::replace(&mut h1, h2);
        k0 = std::mem::replace(&mut k1, k2);
        let frac = &rest - Rational::from_integer(a);
        if frac.is_zero() {
            let best = Rational::new(h1, k1);
            return Some(if neg { -best } else { best });
        }
        rest = frac.recip();
    }
}

/// serde adapters so rationals travel as canonical strings.
pub mod serde_rational {
    use super::*;
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(D::Error::custom)
    }

    pub mod vec {
        use super::*;
        use serde::ser::SerializeSeq;

        pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for q in v {
                seq.serialize_element(&format_rational(q))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(
            d: D,
        ) -> std::result::Result<Vec<Rational>, D::Error> {
            let raw = Vec::<String>::deserialize(d)?;
            raw.iter()
                .map(|s| parse_rational(s).map_err(D::Error::custom))
                .collect()
        }
    }

    pub mod option {
        use super::*;

        pub fn serialize<S: Serializer>(
            v: &Option<Rational>,
            s: S,
        ) -> std::result::Result<S::Ok, S::Error> {
            match v {
                Some(q) => s.serialize_some(&format_rational(q)),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(
            d: D,
        ) -> std::result::Result<Option<Rational>, D::Error> {
            Option::<String>::deserialize(d)?
                .map(|s| parse_rational(&s).map_err(D::Error::custom))
                .transpose()
        }
    }

    pub mod vecvec {
        use super::*;
        use serde::ser::SerializeSeq;

        pub fn serialize<S: Serializer>(
            v: &[Vec<Rational>],
            s: S,
        ) -> std::result::Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for row in v {
                let row: Vec<String> = row.iter().map(format_rational).collect();
                seq.serialize_element(&row)?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(
            d: D,
        ) -> std::result::Result<Vec<Vec<Rational>>, D::Error> {
            let raw = Vec::<Vec<String>>::deserialize(d)?;
            raw.iter()
                .map(|row| {
                    row.iter()
                        .map(|s| parse_rational(s).map_err(D::Error::custom))
                        .collect()
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_forms() {
        assert_eq!(format_rational(&ratio(2, 4)), "1/2");
        assert_eq!(format_rational(&ratio(3, -6)), "-1/2");
        assert_eq!(format_rational(&ratio(6, 3)), "2");
        assert_eq!(format_rational(&rat(0)), "0");
        assert_eq!(parse_rational("-4/6").unwrap(), ratio(-2, 3));
        assert_eq!(parse_rational("17").unwrap(), rat(17));
    }

    #[test]
    fn rejects_garbage() {
        for s in ["", "/", "1/", "/2", "1/0", "+1", " 1", "1.5", "a/b", "1/-"] {
            assert!(parse_rational(s).is_err(), "{s}");
        }
    }

    #[test]
    fn approximation_picks_small_denominators() {
        assert_eq!(approximate(0.333333333, 100).unwrap(), ratio(1, 3));
        assert_eq!(approximate(-2.5, 10).unwrap(), ratio(-5, 2));
        assert_eq!(approximate(std::f64::consts::PI, 1000).unwrap(), ratio(355, 113));
        assert_eq!(approximate(3.0, 1).unwrap(), rat(3));
        assert_eq!(approximate(1e-9, 100).unwrap(), rat(0));
    }

    proptest::proptest! {
        #[test]
        fn text_round_trip(p in -10_000i64..10_000, q in 1i64..10_000) {
            let x = ratio(p, q);
            let s = format_rational(&x);
            let y = parse_rational(&s).unwrap();
            proptest::prop_assert_eq!(&x, &y);
            proptest::prop_assert_eq!(format_rational(&y), s);
            // canonical: gcd 1, positive denominator
            proptest::prop_assert!(y.denom() > &BigInt::zero());
            let g = num_integer::Integer::gcd(y.numer(), y.denom());
            proptest::prop_assert!(g.is_one());
        }
    }
}
