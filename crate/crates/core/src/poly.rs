//! Sparse rational polynomials, patchwork families, homogenization, and the
//! coordinate transforms (log map, quasi-homothety, moment map).

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::convexity::{check_convexifies, ConvexPartition, HeightFunction, Subdivision};
use crate::error::Error;
use crate::lattice::{lp, newton_polygon, orient, primitive, ConvexPolygon, LatticePoint, SignedTriangulation};
use crate::rat::{parse_rat, rat, Rat};

/// Polynomial with exact rational coefficients over integer exponents
/// (Laurent exponents are admitted). Serializes as (i, j, "p/q") triples.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SparsePolynomial {
    terms: BTreeMap<LatticePoint, Rat>,
}

impl Serialize for SparsePolynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<(i64, i64, String)> = self
            .terms
            .iter()
            .map(|(p, c)| (p.i, p.j, crate::rat::format_rat(c)))
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SparsePolynomial {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows = Vec::<(i64, i64, String)>::deserialize(d)?;
        let mut terms = Vec::new();
        for (i, j, c) in rows {
            terms.push((lp(i, j), parse_rat(&c).map_err(serde::de::Error::custom)?));
        }
        Ok(SparsePolynomial::from_terms(terms))
    }
}

impl SparsePolynomial {
    pub fn zero() -> Self {
        SparsePolynomial::default()
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (LatticePoint, Rat)>) -> Self {
        let mut map = BTreeMap::new();
        for (p, c) in terms {
            if c.is_zero() {
                continue;
            }
            let entry = map.entry(p).or_insert_with(|| rat(0));
            *entry = entry.clone() + c;
            if entry.is_zero() {
                map.remove(&p);
            }
        }
        SparsePolynomial { terms: map }
    }

    pub fn monomial(p: LatticePoint, c: Rat) -> Self {
        SparsePolynomial::from_terms([(p, c)])
    }

    pub fn terms(&self) -> impl Iterator<Item = (&LatticePoint, &Rat)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, p: LatticePoint) -> Rat {
        self.terms.get(&p).cloned().unwrap_or_else(|| rat(0))
    }

    pub fn support(&self) -> Vec<LatticePoint> {
        self.terms.keys().copied().collect()
    }

    pub fn newton_polygon(&self) -> Result<ConvexPolygon, Error> {
        newton_polygon(&self.support())
    }

    /// Total degree (max i + j over the support).
    pub fn degree(&self) -> i64 {
        self.terms.keys().map(|p| p.i + p.j).max().unwrap_or(0)
    }

    pub fn add(&self, other: &SparsePolynomial) -> SparsePolynomial {
        SparsePolynomial::from_terms(
            self.terms
                .iter()
                .chain(other.terms.iter())
                .map(|(p, c)| (*p, c.clone())),
        )
    }

    pub fn scale(&self, k: &Rat) -> SparsePolynomial {
        SparsePolynomial::from_terms(self.terms.iter().map(|(p, c)| (*p, c * k)))
    }

    /// Gamma-truncation: the terms whose exponents lie in the given set.
    pub fn truncation<F: Fn(LatticePoint) -> bool>(&self, inside: F) -> SparsePolynomial {
        SparsePolynomial {
            terms: self
                .terms
                .iter()
                .filter(|(p, _)| inside(**p))
                .map(|(p, c)| (*p, c.clone()))
                .collect(),
        }
    }

    /// Truncation to the closed segment [a, b].
    pub fn truncation_segment(&self, a: LatticePoint, b: LatticePoint) -> SparsePolynomial {
        self.truncation(|p| {
            orient(a, b, p) == 0
                && (p.i - a.i) * (b.i - a.i) + (p.j - a.j) * (b.j - a.j) >= 0
                && (p.i - b.i) * (a.i - b.i) + (p.j - b.j) * (a.j - b.j) >= 0
        })
    }

    /// Truncation to a convex polygon (boundary included).
    pub fn truncation_polygon(&self, poly: &ConvexPolygon) -> SparsePolynomial {
        self.truncation(|p| poly.contains(p))
    }

    /// Exact evaluation at rational coordinates (requires nonnegative
    /// exponents unless the coordinate is nonzero).
    pub fn eval(&self, x: &Rat, y: &Rat) -> Rat {
        let mut acc = rat(0);
        for (p, c) in &self.terms {
            acc += c * &rat_pow(x, p.i) * &rat_pow(y, p.j);
        }
        acc
    }

    /// Multiply by the monomial x^di y^dj (shifts the support).
    pub fn shift(&self, di: i64, dj: i64) -> SparsePolynomial {
        SparsePolynomial {
            terms: self
                .terms
                .iter()
                .map(|(p, c)| (lp(p.i + di, p.j + dj), c.clone()))
                .collect(),
        }
    }

    /// Quasi-homothety pullback with integer weights: multiply each
    /// coefficient by t^(w . omega). Exact for rational t != 0.
    pub fn quasi_homothety(&self, w: (i64, i64), t: &Rat) -> SparsePolynomial {
        SparsePolynomial::from_terms(self.terms.iter().map(|(p, c)| {
            let e = w.0 * p.i + w.1 * p.j;
            (*p, c * rat_pow(t, e))
        }))
    }
}

fn rat_pow(base: &Rat, e: i64) -> Rat {
    if e == 0 {
        return rat(1);
    }
    let mag = base.pow(e.unsigned_abs() as i32 as i32);
    if e > 0 {
        mag
    } else {
        rat(1) / mag
    }
}

/// Homogeneous three-variable polynomial (x0, x1, x2).
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct HomogeneousPolynomial {
    pub terms: BTreeMap<[i64; 3], Rat>,
}

/// Homogenize to degree m: B(x0, x1, x2) = x0^m b(x1/x0, x2/x0).
pub fn homogenize(b: &SparsePolynomial, m: i64) -> Result<HomogeneousPolynomial, Error> {
    let mut terms = BTreeMap::new();
    for (p, c) in b.terms() {
        if p.i < 0 || p.j < 0 {
            return Err(Error::InvalidInput("negative exponent".into()));
        }
        let e0 = m - p.i - p.j;
        if e0 < 0 {
            return Err(Error::DegreeTooLarge);
        }
        terms.insert([e0, p.i, p.j], c.clone());
    }
    Ok(HomogeneousPolynomial { terms })
}

/// Set x0 = 1.
pub fn dehomogenize(b: &HomogeneousPolynomial) -> SparsePolynomial {
    SparsePolynomial::from_terms(
        b.terms
            .iter()
            .map(|(e, c)| (lp(e[1], e[2]), c.clone())),
    )
}

/// One-parameter family sum a_w x^w t^nu(w). Serializes as
/// (i, j, "p/q", height) rows.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct PatchworkFamily {
    pub terms: BTreeMap<LatticePoint, (Rat, i64)>,
}

impl Serialize for PatchworkFamily {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<(i64, i64, String, i64)> = self
            .terms
            .iter()
            .map(|(p, (c, h))| (p.i, p.j, crate::rat::format_rat(c), *h))
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PatchworkFamily {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows = Vec::<(i64, i64, String, i64)>::deserialize(d)?;
        let mut terms = Vec::new();
        for (i, j, c, h) in rows {
            terms.push((lp(i, j), parse_rat(&c).map_err(serde::de::Error::custom)?, h));
        }
        Ok(PatchworkFamily::from_terms(terms))
    }
}

impl PatchworkFamily {
    pub fn from_terms(terms: impl IntoIterator<Item = (LatticePoint, Rat, i64)>) -> Self {
        PatchworkFamily {
            terms: terms
                .into_iter()
                .filter(|(_, c, _)| !c.is_zero())
                .map(|(p, c, h)| (p, (c, h)))
                .collect(),
        }
    }

    /// Exact evaluation of the family at a rational parameter value.
    pub fn at(&self, t: &Rat) -> SparsePolynomial {
        SparsePolynomial::from_terms(
            self.terms
                .iter()
                .map(|(p, (c, h))| (*p, c * rat_pow(t, *h))),
        )
    }

    /// The merged polynomial (t = 1).
    pub fn merged(&self) -> SparsePolynomial {
        SparsePolynomial::from_terms(self.terms.iter().map(|(p, (c, _))| (*p, c.clone())))
    }

    /// Replace nu by nu - (a i + b j + c).
    pub fn sub_affine(&self, a: i64, b: i64, c: i64) -> PatchworkFamily {
        PatchworkFamily {
            terms: self
                .terms
                .iter()
                .map(|(p, (q, h))| (*p, (q.clone(), h - a * p.i - b * p.j - c)))
                .collect(),
        }
    }

    /// Compose with the quasi-homothety (x, y) -> (x t^wx, y t^wy): exponents
    /// move by w . omega.
    pub fn compose_qh(&self, wx: i64, wy: i64) -> PatchworkFamily {
        PatchworkFamily {
            terms: self
                .terms
                .iter()
                .map(|(p, (q, h))| (*p, (q.clone(), h + wx * p.i + wy * p.j)))
                .collect(),
        }
    }

    /// Multiply by t^k.
    pub fn times_t_power(&self, k: i64) -> PatchworkFamily {
        PatchworkFamily {
            terms: self
                .terms
                .iter()
                .map(|(p, (q, h))| (*p, (q.clone(), h + k)))
                .collect(),
        }
    }

    pub fn max_height(&self) -> i64 {
        self.terms.values().map(|(_, h)| h.abs()).max().unwrap_or(0)
    }

    pub fn degree(&self) -> i64 {
        self.terms.keys().map(|p| p.i + p.j).max().unwrap_or(0)
    }
}

/// Patchwork polynomials: merge parts with pairwise disjoint Newton polygon
/// interiors, agreeing on shared faces, into the family sum a_w x^w t^nu(w).
/// nu must be defined on every support point, affine on each part, and
/// strictly folded between full-dimensional neighbors.
pub fn patchwork_family(
    parts: &[SparsePolynomial],
    nu: &HeightFunction,
) -> Result<PatchworkFamily, Error> {
    if parts.is_empty() {
        return Err(Error::EmptyPolynomial);
    }
    let hulls: Vec<ConvexPolygon> = parts
        .iter()
        .map(|p| p.newton_polygon())
        .collect::<Result<_, _>>()?;

    // Truncation agreement on shared faces, exactly: on every lattice point
    // of the intersection of two hulls the coefficients must agree.
    for i in 0..parts.len() {
        for j in i + 1..parts.len() {
            let pts_i = hulls[i].lattice_points();
            for p in pts_i {
                if hulls[j].contains(p) && parts[i].coeff(p) != parts[j].coeff(p) {
                    return Err(Error::IncompatibleParts(format!(
                        "parts {i} and {j} disagree at ({}, {})",
                        p.i, p.j
                    )));
                }
            }
        }
    }

    // Interior disjointness for full-dimensional parts, plus strict folds
    // under nu: delegate to the convexity checker over the induced cells.
    let full: Vec<usize> = (0..parts.len())
        .filter(|&k| hulls[k].vertices().len() >= 3)
        .collect();
    if full.len() >= 2 {
        let cells: Vec<ConvexPolygon> = full.iter().map(|&k| hulls[k].clone()).collect();
        let all_points: Vec<LatticePoint> = cells
            .iter()
            .flat_map(|c| c.vertices().to_vec())
            .collect();
        let domain = newton_polygon(&all_points)?;
        let part = ConvexPartition::new(domain, cells).map_err(|e| match e {
            Error::InvalidInput(msg) => Error::IncompatibleParts(msg),
            other => other,
        })?;
        let sub = Subdivision::Partition(&part);
        let needed = sub.complex_vertices()?;
        for v in needed {
            if nu.get(v).is_none() {
                return Err(Error::NotConvexifying(format!(
                    "height missing at ({}, {})",
                    v.i, v.j
                )));
            }
        }
        if !check_convexifies(&sub, nu)? {
            return Err(Error::NotConvexifying(
                "heights are not strictly convex across a shared fold".into(),
            ));
        }
    }

    // nu must be affine on each part's support (condition 1 at family level).
    for (k, part) in parts.iter().enumerate() {
        let sup = part.support();
        if sup.iter().any(|p| nu.get(*p).is_none()) {
            return Err(Error::NotConvexifying(format!(
                "height missing on part {k}"
            )));
        }
        if !affine_on(&sup, nu) {
            return Err(Error::NotConvexifying(format!(
                "heights are not affine on part {k}"
            )));
        }
    }

    let mut terms: BTreeMap<LatticePoint, (Rat, i64)> = BTreeMap::new();
    for part in parts {
        for (p, c) in part.terms() {
            let h = nu.get(*p).unwrap();
            terms.insert(*p, (c.clone(), h));
        }
    }
    Ok(PatchworkFamily { terms })
}

fn affine_on(points: &[LatticePoint], nu: &HeightFunction) -> bool {
    // Find an affine basis among the points; degenerate supports are always
    // affine-compatible.
    let n = points.len();
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                let det = orient(points[a], points[b], points[c]);
                if det == 0 {
                    continue;
                }
                let (pa, pb, pc) = (points[a], points[b], points[c]);
                let (ha, hb, hc) = (
                    nu.get(pa).unwrap() as i128,
                    nu.get(pb).unwrap() as i128,
                    nu.get(pc).unwrap() as i128,
                );
                // Check every point against the plane through a, b, c.
                return points.iter().all(|&p| {
                    let h = nu.get(p).unwrap() as i128;
                    let d1 = [
                        (pb.i - pa.i) as i128,
                        (pb.j - pa.j) as i128,
                        hb - ha,
                    ];
                    let d2 = [
                        (pc.i - pa.i) as i128,
                        (pc.j - pa.j) as i128,
                        hc - ha,
                    ];
                    let dp = [(p.i - pa.i) as i128, (p.j - pa.j) as i128, h - ha];
                    // Determinant of the 3x3 with rows d1, d2, dp must vanish.
                    let det3 = d1[0] * (d2[1] * dp[2] - d2[2] * dp[1])
                        - d1[1] * (d2[0] * dp[2] - d2[2] * dp[0])
                        + d1[2] * (d2[0] * dp[1] - d2[1] * dp[0]);
                    det3 == 0
                });
            }
        }
    }
    // All points collinear: any heights extend to an affine function on the
    // line if consecutive differences are proportional, which over a line in
    // the plane is automatic for some affine extension.
    collinear_affine(points, nu)
}

fn collinear_affine(points: &[LatticePoint], nu: &HeightFunction) -> bool {
    if points.len() <= 2 {
        return true;
    }
    let a = points[0];
    let step = points
        .iter()
        .find(|p| **p != a)
        .map(|p| primitive((p.i - a.i, p.j - a.j)));
    let Some(step) = step else { return true };
    // Parametrize along the line and require h to be affine in the parameter.
    let param = |p: LatticePoint| -> i128 {
        if step.0 != 0 {
            ((p.i - a.i) / step.0) as i128
        } else {
            ((p.j - a.j) / step.1) as i128
        }
    };
    let h0 = nu.get(points[0]).unwrap() as i128;
    let mut slope: Option<(i128, i128)> = None; // (dh, dt)
    for p in points.iter().skip(1) {
        let t = param(*p);
        let h = nu.get(*p).unwrap() as i128;
        if t == 0 {
            if h != h0 {
                return false;
            }
            continue;
        }
        match slope {
            None => slope = Some((h - h0, t)),
            Some((dh, dt)) => {
                if (h - h0) * dt != dh * t {
                    return false;
                }
            }
        }
    }
    true
}

/// The TC special case: monomials sigma_ij x^i y^j at triangulation
/// vertices with heights nu.
pub fn family_from_triangulation(
    t: &SignedTriangulation,
    nu: &HeightFunction,
) -> Result<PatchworkFamily, Error> {
    let sub = Subdivision::Triangulation(t);
    if !check_convexifies(&sub, nu)? {
        return Err(Error::NotConvexifying(
            "heights do not convexify the triangulation".into(),
        ));
    }
    Ok(PatchworkFamily::from_terms(t.vertices.iter().zip(&t.signs).map(
        |(v, s)| {
            let h = nu.get(*v).expect("checked by check_convexifies");
            (*v, rat(s.to_i64()), h)
        },
    )))
}

// Coordinate transforms ------------------------------------------------------

/// l(x, y) = (ln |x|, ln |y|); errors on the axes.
pub fn log_map(x: f64, y: f64) -> Result<(f64, f64), Error> {
    if x == 0.0 || y == 0.0 {
        return Err(Error::AxisPoint);
    }
    Ok((x.abs().ln(), y.abs().ln()))
}

/// qh_{w,t}(x, y) = (x t^w1, y t^w2) on points.
pub fn quasi_homothety_point(w: (f64, f64), t: f64, p: (f64, f64)) -> (f64, f64) {
    (p.0 * t.powf(w.0), p.1 * t.powf(w.1))
}

/// Moment map over the chosen lattice points, evaluated in log coordinates
/// (u, v) = (ln|x|, ln|y|) with overflow-safe weights.
pub fn moment_map_log(u: f64, v: f64, points: &[LatticePoint]) -> (f64, f64) {
    let exps: Vec<f64> = points
        .iter()
        .map(|p| p.i as f64 * u + p.j as f64 * v)
        .collect();
    let m = exps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut wsum = 0.0;
    let mut sx = 0.0;
    let mut sy = 0.0;
    for (p, e) in points.iter().zip(&exps) {
        let w = (e - m).exp();
        wsum += w;
        sx += w * p.i as f64;
        sy += w * p.j as f64;
    }
    (sx / wsum, sy / wsum)
}

/// Moment map at a real point with nonzero coordinates; the chosen points
/// must include all vertices of the target polygon.
pub fn moment_map(x: f64, y: f64, points: &[LatticePoint]) -> Result<(f64, f64), Error> {
    let (u, v) = log_map(x, y)?;
    Ok(moment_map_log(u, v, points))
}

// Parser ----------------------------------------------------------------------

/// Parse a polynomial expression like "8x^3 - x^2 + 4y^2" or
/// "2x^6y - x^4y^2 - 2x^2y^3 + y^4". Coefficients may be rationals "p/q".
pub fn parse_poly(input: &str) -> Result<SparsePolynomial, Error> {
    let s: String = input.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err(Error::Parse("empty polynomial expression".into()));
    }
    let bytes = s.as_bytes();
    let mut k = 0usize;
    let mut terms: Vec<(LatticePoint, Rat)> = Vec::new();
    while k < bytes.len() {
        let mut sign = rat(1);
        while k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
            if bytes[k] == b'-' {
                sign = -sign;
            }
            k += 1;
        }
        if k >= bytes.len() {
            return Err(Error::Parse("dangling sign".into()));
        }
        // Coefficient.
        let start = k;
        while k < bytes.len() && (bytes[k].is_ascii_digit() || bytes[k] == b'/' || bytes[k] == b'.')
        {
            k += 1;
        }
        let mut coeff = if k > start {
            let txt = &s[start..k];
            if txt.contains('.') {
                return Err(Error::Parse("decimal coefficients not supported".into()));
            }
            parse_rat(txt)?
        } else {
            rat(1)
        };
        coeff *= sign;
        if k < bytes.len() && bytes[k] == b'*' {
            k += 1;
        }
        // Variables.
        let mut ei = 0i64;
        let mut ej = 0i64;
        while k < bytes.len() && (bytes[k] == b'x' || bytes[k] == b'y') {
            let var = bytes[k];
            k += 1;
            let mut e = 1i64;
            if k < bytes.len() && bytes[k] == b'^' {
                k += 1;
                let mut neg = false;
                if k < bytes.len() && bytes[k] == b'-' {
                    neg = true;
                    k += 1;
                }
                let es = k;
                while k < bytes.len() && bytes[k].is_ascii_digit() {
                    k += 1;
                }
                if es == k {
                    return Err(Error::Parse("missing exponent".into()));
                }
                e = s[es..k]
                    .parse::<i64>()
                    .map_err(|_| Error::Parse("bad exponent".into()))?;
                if neg {
                    e = -e;
                }
            }
            if var == b'x' {
                ei += e;
            } else {
                ej += e;
            }
            if k < bytes.len() && bytes[k] == b'*' {
                k += 1;
            }
        }
        terms.push((lp(ei, ej), coeff));
        if k < bytes.len() && bytes[k] != b'+' && bytes[k] != b'-' {
            return Err(Error::Parse(format!(
                "unexpected character {:?} in polynomial",
                s.as_bytes()[k] as char
            )));
        }
    }
    Ok(SparsePolynomial::from_terms(terms))
}

/// Render a polynomial for reports.
pub fn format_poly(p: &SparsePolynomial) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (k, (pt, c)) in p.terms().enumerate() {
        let neg = c.is_negative();
        let mag = c.abs();
        if k == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        let coeff_txt = crate::rat::format_rat(&mag);
        let vars = match (pt.i, pt.j) {
            (0, 0) => String::new(),
            (i, 0) => format_var("x", i),
            (0, j) => format_var("y", j),
            (i, j) => format!("{}{}", format_var("x", i), format_var("y", j)),
        };
        if vars.is_empty() {
            out.push_str(&coeff_txt);
        } else if coeff_txt == "1" {
            out.push_str(&vars);
        } else {
            out.push_str(&coeff_txt);
            out.push_str(&vars);
        }
    }
    out
}

fn format_var(v: &str, e: i64) -> String {
    if e == 1 {
        v.to_string()
    } else {
        format!("{v}^{e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::ratio;

    fn poly(s: &str) -> SparsePolynomial {
        parse_poly(s).unwrap()
    }

    #[test]
    fn parse_examples() {
        let a = poly("8x^3 - x^2 + 4y^2");
        assert_eq!(a.coeff(lp(3, 0)), rat(8));
        assert_eq!(a.coeff(lp(2, 0)), rat(-2) / rat(2));
        assert_eq!(a.coeff(lp(0, 2)), rat(4));
        let b = poly("2x^6y - x^4y^2 - 2x^2y^3 + y^4");
        assert_eq!(b.num_terms(), 4);
        assert_eq!(b.coeff(lp(6, 1)), rat(2));
        assert_eq!(b.coeff(lp(2, 3)), rat(-2));
        let c = poly("1/2x^2 + x + 1");
        assert_eq!(c.coeff(lp(2, 0)), ratio(1, 2));
    }

    #[test]
    fn truncation_algebra() {
        let a = poly("8x^3 - x^2 + 4y^2");
        // Truncation to the bottom side [(2,0),(3,0)].
        let g = a.truncation_segment(lp(2, 0), lp(3, 0));
        assert_eq!(g, poly("8x^3 - x^2"));
        // a^{Delta(a)} = a.
        let hull = a.newton_polygon().unwrap();
        assert_eq!(a.truncation_polygon(&hull), a);
        // Additivity on disjoint supports.
        let b = poly("7xy^5");
        let sum = a.add(&b);
        let seg = |p: &SparsePolynomial| p.truncation_segment(lp(2, 0), lp(3, 0));
        assert_eq!(seg(&sum), seg(&a).add(&seg(&b)));
    }

    #[test]
    fn example_1_5_a_family() {
        let a1 = poly("8x^3 - x^2 + 4y^2");
        let a2 = poly("4y^2 - x^2 + 1");
        let nu = HeightFunction::from_pairs([
            (lp(3, 0), 0),
            (lp(2, 0), 0),
            (lp(0, 2), 0),
            (lp(0, 0), 2),
        ]);
        let fam = patchwork_family(&[a1, a2], &nu).unwrap();
        let expected = PatchworkFamily::from_terms([
            (lp(3, 0), rat(8), 0),
            (lp(2, 0), rat(-1), 0),
            (lp(0, 2), rat(4), 0),
            (lp(0, 0), rat(1), 2),
        ]);
        assert_eq!(fam, expected);
        // Evaluations: t = 1 gives the merged polynomial; t = 1/2 gives t^2 = 1/4.
        assert_eq!(fam.at(&rat(1)), poly("8x^3 - x^2 + 4y^2 + 1"));
        assert_eq!(fam.at(&ratio(1, 2)).coeff(lp(0, 0)), ratio(1, 4));
    }

    #[test]
    fn incompatible_parts_rejected() {
        let a1 = poly("8x^3 - x^2 + 4y^2");
        let a2 = poly("4y^2 + x^2 + 1"); // sign differs on the shared face
        let nu = HeightFunction::from_pairs([
            (lp(3, 0), 0),
            (lp(2, 0), 0),
            (lp(0, 2), 0),
            (lp(0, 0), 2),
        ]);
        assert!(matches!(
            patchwork_family(&[a1, a2], &nu),
            Err(Error::IncompatibleParts(_))
        ));
    }

    #[test]
    fn flat_heights_rejected_for_two_parts() {
        let a1 = poly("8x^3 - x^2 + 4y^2");
        let a2 = poly("4y^2 - x^2 + 1");
        let nu = HeightFunction::from_pairs([
            (lp(3, 0), 0),
            (lp(2, 0), 0),
            (lp(0, 2), 0),
            (lp(0, 0), 0),
        ]);
        assert!(matches!(
            patchwork_family(&[a1, a2], &nu),
            Err(Error::NotConvexifying(_))
        ));
    }

    #[test]
    fn single_part_flat_heights() {
        let a = poly("x + y + 1");
        let nu = HeightFunction::from_pairs([(lp(0, 0), 0), (lp(1, 0), 0), (lp(0, 1), 0)]);
        let fam = patchwork_family(&[a.clone()], &nu).unwrap();
        assert_eq!(fam.at(&ratio(1, 7)), a);
    }

    #[test]
    fn gauge_identity_shape() {
        // b' = t^{-c} (b o qh_{(-a,-b),t}) when nu' = nu - (a i + b j + c).
        let a1 = poly("8x^3 - x^2 + 4y^2");
        let a2 = poly("4y^2 - x^2 + 1");
        let nu = HeightFunction::from_pairs([
            (lp(3, 0), 0),
            (lp(2, 0), 0),
            (lp(0, 2), 0),
            (lp(0, 0), 2),
        ]);
        let fam = patchwork_family(&[a1, a2], &nu).unwrap();
        for (a, b, c) in [(1, 0, 0), (0, 1, 0), (2, -1, 3), (-1, -2, -5)] {
            let lhs = fam.sub_affine(a, b, c);
            let rhs = fam.compose_qh(-a, -b).times_t_power(-c);
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn homogenize_examples() {
        let b = poly("8x^3 - x^2 + 4y^2 + 1");
        let hb = homogenize(&b, 3).unwrap();
        assert_eq!(hb.terms.get(&[0, 3, 0]), Some(&rat(8)));
        assert_eq!(hb.terms.get(&[1, 2, 0]), Some(&rat(-1)));
        assert_eq!(hb.terms.get(&[1, 0, 2]), Some(&rat(4)));
        assert_eq!(hb.terms.get(&[3, 0, 0]), Some(&rat(1)));
        assert_eq!(dehomogenize(&hb), b);

        assert_eq!(
            homogenize(&poly("1"), 2).unwrap().terms.get(&[2, 0, 0]),
            Some(&rat(1))
        );
        let lin = homogenize(&poly("x + y + 1"), 1).unwrap();
        assert_eq!(lin.terms.len(), 3);
        assert!(matches!(homogenize(&poly("x^2"), 1), Err(Error::DegreeTooLarge)));
    }

    #[test]
    fn log_map_and_qh() {
        assert_eq!(log_map(1.0, 1.0).unwrap(), (0.0, 0.0));
        assert!(matches!(log_map(0.0, 1.0), Err(Error::AxisPoint)));
        // qh_{(1,1),t} is the plain homothety.
        let p = quasi_homothety_point((1.0, 1.0), 0.5, (2.0, 4.0));
        assert_eq!(p, (1.0, 2.0));
        // Composition law on a sample point.
        let w = (2.0, -1.0);
        let p1 = quasi_homothety_point(w, 0.3, quasi_homothety_point(w, 0.7, (1.5, 2.5)));
        let p2 = quasi_homothety_point(w, 0.21, (1.5, 2.5));
        assert!((p1.0 - p2.0).abs() < 1e-12 && (p1.1 - p2.1).abs() < 1e-12);
    }

    #[test]
    fn quasi_homothety_on_polynomials() {
        // V(b o qh_{-w,t}) = qh_{w,t} V(b), checked on sample points.
        let b = poly("x^2 + y - 3");
        let w = (1i64, 2i64);
        let t = ratio(1, 2);
        let composed = b.quasi_homothety((-w.0, -w.1), &t);
        // If b(x0, y0) = 0 then composed(qh_{w,t}(x0, y0)) = 0.
        // Take x0 = 1, y0 = 2: b(1,2) = 0.
        let tq = 0.5f64;
        let img = quasi_homothety_point((w.0 as f64, w.1 as f64), tq, (1.0, 2.0));
        let mut val = 0.0;
        for (p, c) in composed.terms() {
            val += crate::rat::rat_to_f64(c) * img.0.powi(p.i as i32) * img.1.powi(p.j as i32);
        }
        assert!(val.abs() < 1e-12);
    }

    #[test]
    fn moment_map_basics() {
        let m = 3;
        let pts = vec![lp(0, 0), lp(m, 0), lp(0, m)];
        // Equal weights at (1,1): barycenter.
        let (bx, by) = moment_map(1.0, 1.0, &pts).unwrap();
        assert!((bx - 1.0).abs() < 1e-12 && (by - 1.0).abs() < 1e-12);
        // (t, t) with t -> 0 converges to the (0,0) vertex.
        let (cx, cy) = moment_map(1e-6, 1e-6, &pts).unwrap();
        assert!(cx.abs() < 1e-3 && cy.abs() < 1e-3);
        assert!(matches!(moment_map(0.0, 1.0, &pts), Err(Error::AxisPoint)));
    }

    #[test]
    fn moment_map_base_point_independence() {
        // The direct formula with different base points omega_0 agrees with
        // the implementation (which cancels the base point algebraically).
        let pts = vec![lp(0, 0), lp(4, 0), lp(0, 4), lp(2, 1)];
        let mut rng = 0x243f6a88u64;
        let mut next = move || {
            rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((rng >> 33) as f64 / (1u64 << 31) as f64) * 4.0 - 2.0
        };
        for _ in 0..100 {
            let (x, y): (f64, f64) = (next().exp(), next().exp());
            let (mx, my) = moment_map(x, y, &pts).unwrap();
            for base in &pts {
                let mut wsum = 0.0;
                let (mut sx, mut sy) = (0.0, 0.0);
                for p in &pts {
                    let w = x.powi((p.i - base.i) as i32) * y.powi((p.j - base.j) as i32);
                    let w = w.abs();
                    wsum += w;
                    sx += w * p.i as f64;
                    sy += w * p.j as f64;
                }
                assert!((sx / wsum - mx).abs() < 1e-9);
                assert!((sy / wsum - my).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn format_roundtrip() {
        let a = poly("8x^3 - x^2 + 4y^2 + 1");
        assert_eq!(parse_poly(&format_poly(&a)).unwrap(), a);
        assert_eq!(format_poly(&poly("0")), "0");
    }
}
