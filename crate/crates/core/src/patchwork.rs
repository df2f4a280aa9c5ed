//! Combinatorial patchworking: quadrant symmetrization under the sign
//! extension rule, midline curves, projective gluing, and isotopy codes.

use serde::{Deserialize, Serialize};

use crate::classify::{classify, ArcRole, BoundaryArc, Classification, CurveComplex};
use crate::error::Error;
use crate::lattice::{lp, validate_triangulation, LatticePoint, Sign, SignedTriangulation};
use crate::rat::QPoint;

pub const QUADRANTS: [(i8, i8); 4] = [(1, 1), (-1, 1), (1, -1), (-1, -1)];

/// The four reflected copies of a signed triangulation with extended signs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SymmetricComplex {
    pub base: SignedTriangulation,
}

impl SymmetricComplex {
    /// Sign at a vertex of the extended triangulation (signed coordinates),
    /// following sigma_{i,j} sigma_{eps i, delta j} eps^i delta^j = 1.
    pub fn extended_sign(&self, p: LatticePoint) -> Option<Sign> {
        let base = self.base.sign_of(lp(p.i.abs(), p.j.abs()))?;
        let flips = if p.i < 0 { p.i.abs() } else { 0 } + if p.j < 0 { p.j.abs() } else { 0 };
        Some(base.times_parity(flips))
    }

    /// All triangles of the extended triangulation with vertex coordinates
    /// and extended signs, tagged by quadrant.
    pub fn quadrant_triangles(
        &self,
    ) -> impl Iterator<Item = ((i8, i8), [LatticePoint; 3], [Sign; 3])> + '_ {
        QUADRANTS.into_iter().flat_map(move |(eps, delta)| {
            self.base.triangles.iter().map(move |tri| {
                let vs = [
                    self.base.vertices[tri[0]].reflect(eps, delta),
                    self.base.vertices[tri[1]].reflect(eps, delta),
                    self.base.vertices[tri[2]].reflect(eps, delta),
                ];
                let ss = [
                    self.extended_sign(vs[0]).unwrap(),
                    self.extended_sign(vs[1]).unwrap(),
                    self.extended_sign(vs[2]).unwrap(),
                ];
                ((eps, delta), vs, ss)
            })
        })
    }
}

/// Reflect a valid triangulation into the four quadrants and extend the
/// signs. The domain must lie in the closed positive quadrant.
pub fn symmetrize(t: &SignedTriangulation) -> Result<SymmetricComplex, Error> {
    let report = validate_triangulation(t);
    if !report.valid {
        return Err(Error::InvalidInput(report.violations.join("; ")));
    }
    if t.vertices.iter().any(|v| v.i < 0 || v.j < 0) {
        return Err(Error::InvalidInput(
            "domain leaves the positive quadrant".into(),
        ));
    }
    Ok(SymmetricComplex { base: t.clone() })
}

/// The piecewise linear T-curve: midline segments with half-integer
/// endpoints.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PLCurve {
    pub segments: Vec<(QPoint, QPoint)>,
}

/// Midlines of all triangles of the extended triangulation whose vertex
/// signs differ: one segment per such triangle, joining the midpoints of the
/// two edges whose endpoints carry opposite signs.
pub fn midline_curve(c: &SymmetricComplex) -> PLCurve {
    let mut segments = Vec::new();
    for (_, vs, ss) in c.quadrant_triangles() {
        if ss[0] == ss[1] && ss[1] == ss[2] {
            continue;
        }
        let odd = if ss[0] == ss[1] {
            2
        } else if ss[0] == ss[2] {
            1
        } else {
            0
        };
        let a = vs[odd];
        let b = vs[(odd + 1) % 3];
        let cth = vs[(odd + 2) % 3];
        let m1 = QPoint::midpoint(&a.to_qpoint(), &b.to_qpoint());
        let m2 = QPoint::midpoint(&a.to_qpoint(), &cth.to_qpoint());
        segments.push((m1, m2));
    }
    PLCurve { segments }
}

/// The quotient of the symmetrized square by the antipodal boundary gluing.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProjectiveComplex {
    /// Degree of the ambient triangle; the carrier is the diamond |i|+|j| <= m.
    pub m: i64,
    pub curve: PLCurve,
    /// Antipodally identified pairs of curve endpoints on the boundary.
    pub boundary_pairs: Vec<(QPoint, QPoint)>,
}

/// Glue the opposite sides of the symmetrized square by x -> -x. Requires
/// the standard degree-m triangle domain; curve endpoints on the boundary
/// must match under the identification (forced by the sign rule, asserted
/// here).
pub fn projective_quotient(c: &SymmetricComplex, l: &PLCurve) -> Result<ProjectiveComplex, Error> {
    let m = c.base.degree();
    let dom = &c.base.domain;
    let expected = [lp(0, 0), lp(m, 0), lp(0, m)];
    if dom.vertices().len() != 3 || !expected.iter().all(|v| dom.vertices().contains(v)) {
        return Err(Error::InvalidInput(
            "projective gluing requires the standard degree-m triangle".into(),
        ));
    }
    let m_rat = crate::rat::rat(m);
    let on_boundary = |p: &QPoint| -> bool {
        let ax = if p.x < crate::rat::rat(0) { -p.x.clone() } else { p.x.clone() };
        let ay = if p.y < crate::rat::rat(0) { -p.y.clone() } else { p.y.clone() };
        ax + ay == m_rat
    };
    let mut boundary_pts: Vec<QPoint> = Vec::new();
    for (a, b) in &l.segments {
        for p in [a, b] {
            if on_boundary(p) {
                boundary_pts.push(p.clone());
            }
        }
    }
    boundary_pts.sort();
    boundary_pts.dedup();
    let mut pairs = Vec::new();
    for p in &boundary_pts {
        let q = QPoint::new(-p.x.clone(), -p.y.clone());
        if !boundary_pts.contains(&q) {
            return Err(Error::SignRuleViolated(format!(
                "boundary endpoint ({}, {}) has no antipodal partner",
                crate::rat::format_rat(&p.x),
                crate::rat::format_rat(&p.y)
            )));
        }
        if *p < q {
            pairs.push((p.clone(), q));
        }
    }
    Ok(ProjectiveComplex { m, curve: l.clone(), boundary_pairs: pairs })
}

/// Boundary arcs of the diamond carrier for degree m.
pub fn diamond_boundary(m: i64) -> Vec<BoundaryArc> {
    let q = |x: i64, y: i64| QPoint::from_ints(x, y);
    vec![
        BoundaryArc { from: q(m, 0), to: q(0, m), role: ArcRole::Antipodal { pair: 0 } },
        BoundaryArc { from: q(0, m), to: q(-m, 0), role: ArcRole::Antipodal { pair: 1 } },
        BoundaryArc { from: q(-m, 0), to: q(0, -m), role: ArcRole::Antipodal { pair: 0 } },
        BoundaryArc { from: q(0, -m), to: q(m, 0), role: ArcRole::Antipodal { pair: 1 } },
    ]
}

/// Classify the glued curve: components by endpoint matching, one-sidedness
/// by double-cover connectivity, ovals arranged into the nesting forest.
pub fn isotopy_code(p: &ProjectiveComplex) -> Result<Classification, Error> {
    let complex = CurveComplex {
        segments: p.curve.segments.clone(),
        boundary: diamond_boundary(p.m),
    };
    classify(&complex)
}

/// Convenience pipeline: symmetrize, draw midlines, glue, classify.
pub fn patchwork_pipeline(t: &SignedTriangulation) -> Result<Classification, Error> {
    let sym = symmetrize(t)?;
    let curve = midline_curve(&sym);
    let proj = projective_quotient(&sym, &curve)?;
    isotopy_code(&proj)
}

/// Sign of the combinatorial patchwork at a point of the symmetrized square
/// (floating point; used to compare numeric sign grids against the
/// combinatorial regions). None on or very near the curve or outside.
pub fn region_sign(c: &SymmetricComplex, x: f64, y: f64) -> Option<Sign> {
    let eps = if x >= 0.0 { 1i8 } else { -1 };
    let delta = if y >= 0.0 { 1i8 } else { -1 };
    let (ax, ay) = (x.abs(), y.abs());
    let orient3 = |a: (f64, f64), b: (f64, f64), p: (f64, f64)| {
        (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0)
    };
    for tri in &c.base.triangles {
        let v0 = c.base.vertices[tri[0]];
        let v1 = c.base.vertices[tri[1]];
        let v2 = c.base.vertices[tri[2]];
        let p0 = (v0.i as f64, v0.j as f64);
        let p1 = (v1.i as f64, v1.j as f64);
        let p2 = (v2.i as f64, v2.j as f64);
        let d0 = orient3(p0, p1, (ax, ay));
        let d1 = orient3(p1, p2, (ax, ay));
        let d2 = orient3(p2, p0, (ax, ay));
        if d0 < 0.0 || d1 < 0.0 || d2 < 0.0 {
            continue;
        }
        let vs = [v0.reflect(eps, delta), v1.reflect(eps, delta), v2.reflect(eps, delta)];
        let ss = [
            c.extended_sign(vs[0])?,
            c.extended_sign(vs[1])?,
            c.extended_sign(vs[2])?,
        ];
        if ss[0] == ss[1] && ss[1] == ss[2] {
            return Some(ss[0]);
        }
        let odd = if ss[0] == ss[1] {
            2
        } else if ss[0] == ss[2] {
            1
        } else {
            0
        };
        let pts = [p0, p1, p2];
        let a = pts[odd];
        let b = pts[(odd + 1) % 3];
        let cc = pts[(odd + 2) % 3];
        let m1 = ((a.0 + b.0) / 2.0, (a.1 + b.1) / 2.0);
        let m2 = ((a.0 + cc.0) / 2.0, (a.1 + cc.1) / 2.0);
        let side_p = orient3(m1, m2, (ax, ay));
        let side_odd = orient3(m1, m2, a);
        if side_p == 0.0 {
            return None;
        }
        return Some(if side_p * side_odd > 0.0 {
            ss[odd]
        } else {
            ss[(odd + 1) % 3]
        });
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{lp, ConvexPolygon};
    use crate::rat::ratio;

    fn tri_deg1(signs: [Sign; 3]) -> SignedTriangulation {
        let domain = ConvexPolygon::from_vertices(vec![lp(0, 0), lp(1, 0), lp(0, 1)]).unwrap();
        SignedTriangulation::new(
            domain,
            vec![lp(0, 0), lp(1, 0), lp(0, 1)],
            vec![[0, 1, 2]],
            signs.to_vec(),
        )
        .unwrap()
    }

    #[test]
    fn sign_extension_rule() {
        use Sign::*;
        let domain = ConvexPolygon::from_vertices(vec![lp(0, 0), lp(2, 0), lp(0, 2)]).unwrap();
        let t = SignedTriangulation::new(
            domain,
            vec![lp(0, 0), lp(2, 0), lp(0, 2), lp(1, 0), lp(1, 1), lp(0, 1)],
            vec![[0, 3, 5], [3, 4, 5], [3, 1, 4], [5, 4, 2]],
            vec![Plus; 6],
        )
        .unwrap();
        let sym = symmetrize(&t).unwrap();
        assert_eq!(sym.extended_sign(lp(-1, 0)), Some(Minus));
        assert_eq!(sym.extended_sign(lp(-2, 0)), Some(Plus));
        assert_eq!(sym.extended_sign(lp(-1, -1)), sym.extended_sign(lp(1, 1)));
        for v in &t.vertices {
            for (e, d) in QUADRANTS {
                let s1 = sym.extended_sign(*v).unwrap().to_i64();
                let s2 = sym.extended_sign(v.reflect(e, d)).unwrap().to_i64();
                let powi = (e as i64).pow(v.i.rem_euclid(2) as u32);
                let powj = (d as i64).pow(v.j.rem_euclid(2) as u32);
                assert_eq!(s1 * s2 * powi * powj, 1);
            }
        }
    }

    #[test]
    fn single_separating_midline() {
        let t = tri_deg1([Sign::Plus, Sign::Plus, Sign::Minus]);
        let sym = symmetrize(&t).unwrap();
        let curve = midline_curve(&sym);
        let expect_a = QPoint::new(ratio(0, 1), ratio(1, 2));
        let expect_b = QPoint::new(ratio(1, 2), ratio(1, 2));
        assert!(curve
            .segments
            .iter()
            .any(|(a, b)| (a == &expect_a && b == &expect_b)
                || (a == &expect_b && b == &expect_a)));
    }

    #[test]
    fn all_plus_quadrant_is_empty() {
        let t = tri_deg1([Sign::Plus, Sign::Plus, Sign::Plus]);
        let sym = symmetrize(&t).unwrap();
        let zero = ratio(0, 1);
        let q_pp: Vec<_> = midline_curve(&sym)
            .segments
            .into_iter()
            .filter(|(a, b)| a.x >= zero && a.y >= zero && b.x >= zero && b.y >= zero)
            .collect();
        assert!(q_pp.is_empty());
    }

    #[test]
    fn degree_one_line_is_one_sided() {
        for signs in [
            [Sign::Plus, Sign::Plus, Sign::Minus],
            [Sign::Plus, Sign::Plus, Sign::Plus],
            [Sign::Minus, Sign::Plus, Sign::Minus],
        ] {
            let t = tri_deg1(signs);
            let cl = patchwork_pipeline(&t).unwrap();
            assert_eq!(cl.components, 1);
            assert_eq!(cl.code.one_sided, 1);
            assert_eq!(cl.code.encoding, "J");
            assert!(cl.manifold);
        }
    }

    #[test]
    fn global_sign_flip_keeps_midlines() {
        let t = tri_deg1([Sign::Plus, Sign::Minus, Sign::Plus]);
        let flipped = SignedTriangulation::new(
            t.domain.clone(),
            t.vertices.clone(),
            t.triangles.clone(),
            t.signs.iter().map(|s| s.flip()).collect(),
        )
        .unwrap();
        let c1 = midline_curve(&symmetrize(&t).unwrap());
        let c2 = midline_curve(&symmetrize(&flipped).unwrap());
        let norm = |c: &PLCurve| {
            let mut v: Vec<_> = c
                .segments
                .iter()
                .map(|(a, b)| if a < b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) })
                .collect();
            v.sort();
            v
        };
        assert_eq!(norm(&c1), norm(&c2));
    }

    #[test]
    fn swap_symmetry_equivariance() {
        let domain = ConvexPolygon::from_vertices(vec![lp(0, 0), lp(2, 0), lp(0, 2)]).unwrap();
        let t = SignedTriangulation::new(
            domain,
            vec![lp(0, 0), lp(2, 0), lp(0, 2), lp(1, 0), lp(1, 1), lp(0, 1)],
            vec![[0, 3, 5], [3, 4, 5], [3, 1, 4], [5, 4, 2]],
            vec![Sign::Minus, Sign::Plus, Sign::Plus, Sign::Plus, Sign::Minus, Sign::Plus],
        )
        .unwrap();
        let curve = midline_curve(&symmetrize(&t).unwrap());
        let norm = |segs: &[(QPoint, QPoint)]| {
            let mut v: Vec<_> = segs
                .iter()
                .map(|(a, b)| if a < b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) })
                .collect();
            v.sort();
            v
        };
        let swapped: Vec<_> = curve
            .segments
            .iter()
            .map(|(a, b)| {
                (
                    QPoint::new(a.y.clone(), a.x.clone()),
                    QPoint::new(b.y.clone(), b.x.clone()),
                )
            })
            .collect();
        assert_eq!(norm(&curve.segments), norm(&swapped));
    }

    #[test]
    fn region_sign_matches_vertex_signs() {
        let t = tri_deg1([Sign::Plus, Sign::Plus, Sign::Minus]);
        let sym = symmetrize(&t).unwrap();
        assert_eq!(region_sign(&sym, 0.05, 0.9), Some(Sign::Minus));
        assert_eq!(region_sign(&sym, 0.9, 0.05), Some(Sign::Plus));
    }
}
