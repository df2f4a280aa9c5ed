//! Exact rational scalars and points.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::Error;

/// Exact rational scalar used throughout the combinatorial side.
pub type Rat = BigRational;

/// Rational from an integer.
pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Rational n/d.
pub fn ratio(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Parse "p/q" or "p" into a rational.
pub fn parse_rat(s: &str) -> Result<Rat, Error> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: BigInt = num
        .parse()
        .map_err(|_| Error::Parse(format!("bad rational {s:?}")))?;
    let d: BigInt = den
        .parse()
        .map_err(|_| Error::Parse(format!("bad rational {s:?}")))?;
    if d.is_zero() {
        return Err(Error::Parse(format!("zero denominator in {s:?}")));
    }
    Ok(Rat::new(n, d))
}

/// Format as "p" or "p/q".
pub fn format_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Exact rational point in the plane. Serializes as a two-element array of
/// "p/q" strings so exactness survives the wire.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QPoint {
    pub x: Rat,
    pub y: Rat,
}

impl serde::Serialize for QPoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        (format_rat(&self.x), format_rat(&self.y)).serialize(s)
    }
}

impl<'de> serde::Deserialize<'de> for QPoint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let (x, y) = <(String, String)>::deserialize(d)?;
        Ok(QPoint {
            x: parse_rat(&x).map_err(serde::de::Error::custom)?,
            y: parse_rat(&y).map_err(serde::de::Error::custom)?,
        })
    }
}

impl QPoint {
    pub fn new(x: Rat, y: Rat) -> Self {
        QPoint { x, y }
    }

    pub fn from_ints(x: i64, y: i64) -> Self {
        QPoint::new(rat(x), rat(y))
    }

    /// Midpoint of two points (denominators at most doubled).
    pub fn midpoint(a: &QPoint, b: &QPoint) -> QPoint {
        let two = rat(2);
        QPoint::new((&a.x + &b.x) / &two, (&a.y + &b.y) / &two)
    }

    pub fn sub(&self, other: &QPoint) -> QPoint {
        QPoint::new(&self.x - &other.x, &self.y - &other.y)
    }

    pub fn reflect(&self, ex: i8, ey: i8) -> QPoint {
        let sx = if ex >= 0 { self.x.clone() } else { -self.x.clone() };
        let sy = if ey >= 0 { self.y.clone() } else { -self.y.clone() };
        QPoint::new(sx, sy)
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (rat_to_f64(&self.x), rat_to_f64(&self.y))
    }
}

/// Cross product (b - a) x (c - a); sign gives orientation.
pub fn cross(a: &QPoint, b: &QPoint, c: &QPoint) -> Rat {
    let abx = &b.x - &a.x;
    let aby = &b.y - &a.y;
    let acx = &c.x - &a.x;
    let acy = &c.y - &a.y;
    abx * acy - aby * acx
}

/// Lossy conversion for rendering and numerics.
pub fn rat_to_f64(r: &Rat) -> f64 {
    // Good enough for the magnitudes this crate produces.
    let n = r.numer();
    let d = r.denom();
    let nf = n.to_string().parse::<f64>().unwrap_or(f64::NAN);
    let df = d.to_string().parse::<f64>().unwrap_or(f64::NAN);
    nf / df
}

/// True if c lies on the closed segment [a, b].
pub fn on_segment(a: &QPoint, b: &QPoint, c: &QPoint) -> bool {
    if !cross(a, b, c).is_zero() {
        return false;
    }
    let dot = (&c.x - &a.x) * (&b.x - &a.x) + (&c.y - &a.y) * (&b.y - &a.y);
    if dot.is_negative() {
        return false;
    }
    let len2 = (&b.x - &a.x) * (&b.x - &a.x) + (&b.y - &a.y) * (&b.y - &a.y);
    dot <= len2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format() {
        assert_eq!(parse_rat("3/4").unwrap(), ratio(3, 4));
        assert_eq!(parse_rat("-2").unwrap(), rat(-2));
        assert_eq!(format_rat(&ratio(6, 4)), "3/2");
        assert_eq!(format_rat(&rat(5)), "5");
        assert!(parse_rat("1/0").is_err());
    }

    #[test]
    fn segment_membership() {
        let a = QPoint::from_ints(0, 0);
        let b = QPoint::from_ints(4, 2);
        let m = QPoint::new(rat(2), rat(1));
        assert!(on_segment(&a, &b, &m));
        assert!(!on_segment(&a, &b, &QPoint::from_ints(5, 3)));
        assert!(!on_segment(&a, &b, &QPoint::from_ints(2, 2)));
    }
}
