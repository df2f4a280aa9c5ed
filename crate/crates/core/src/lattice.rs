//! Exact lattice geometry: points, convex polygons, signed triangulations,
//! outward normal rays.

use std::collections::{BTreeMap, BTreeSet};

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::rat::{ratio, QPoint, Rat};

/// Lattice point (an exponent vector).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LatticePoint {
    pub i: i64,
    pub j: i64,
}

/// Shorthand constructor.
pub fn lp(i: i64, j: i64) -> LatticePoint {
    LatticePoint { i, j }
}

impl LatticePoint {
    pub fn to_qpoint(&self) -> QPoint {
        QPoint::from_ints(self.i, self.j)
    }

    pub fn reflect(&self, eps: i8, delta: i8) -> LatticePoint {
        lp(self.i * eps as i64, self.j * delta as i64)
    }
}

/// Vertex sign.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn of_i64(v: i64) -> Option<Sign> {
        match v {
            1 => Some(Sign::Plus),
            -1 => Some(Sign::Minus),
            _ => None,
        }
    }

    pub fn to_i64(self) -> i64 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    /// Multiply by (-1)^k.
    pub fn times_parity(self, k: i64) -> Sign {
        if k.rem_euclid(2) == 0 {
            self
        } else {
            self.flip()
        }
    }
}

/// 2 x signed area of the triangle (a, b, c); positive when counterclockwise.
pub fn orient(a: LatticePoint, b: LatticePoint, c: LatticePoint) -> i64 {
    (b.i - a.i) * (c.j - a.j) - (b.j - a.j) * (c.i - a.i)
}

/// Primitive vector obtained by dividing out the gcd of the coordinates.
pub fn primitive(v: (i64, i64)) -> (i64, i64) {
    let g = v.0.abs().gcd(&v.1.abs());
    if g == 0 {
        (0, 0)
    } else {
        (v.0 / g, v.1 / g)
    }
}

/// Convex lattice polygon. Vertices are in strictly convex counterclockwise
/// position; a single point and a segment are admitted as 1- and 2-vertex
/// degenerate polygons (quasi-homogeneous supports need the segment case).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvexPolygon {
    vertices: Vec<LatticePoint>,
}

impl ConvexPolygon {
    /// Build directly from vertices, validating convex ccw position.
    pub fn from_vertices(vertices: Vec<LatticePoint>) -> Result<Self, Error> {
        let hull = newton_polygon(&vertices)?;
        if hull.vertices.len() != vertices.len() {
            return Err(Error::InvalidInput(
                "vertices are not in strictly convex position".into(),
            ));
        }
        Ok(hull)
    }

    pub fn vertices(&self) -> &[LatticePoint] {
        &self.vertices
    }

    pub fn is_point(&self) -> bool {
        self.vertices.len() == 1
    }

    pub fn is_segment(&self) -> bool {
        self.vertices.len() == 2
    }

    /// Sides as vertex pairs, counterclockwise. A segment has one side.
    pub fn sides(&self) -> Vec<(LatticePoint, LatticePoint)> {
        match self.vertices.len() {
            0 | 1 => Vec::new(),
            2 => vec![(self.vertices[0], self.vertices[1])],
            n => (0..n)
                .map(|k| (self.vertices[k], self.vertices[(k + 1) % n]))
                .collect(),
        }
    }

    /// 2 x area.
    pub fn doubled_area(&self) -> i64 {
        let n = self.vertices.len();
        if n < 3 {
            return 0;
        }
        let o = self.vertices[0];
        (1..n - 1)
            .map(|k| orient(o, self.vertices[k], self.vertices[k + 1]))
            .sum()
    }

    /// True if the point lies in the polygon (boundary included).
    pub fn contains(&self, p: LatticePoint) -> bool {
        match self.vertices.len() {
            0 => false,
            1 => self.vertices[0] == p,
            2 => on_lattice_segment(self.vertices[0], self.vertices[1], p),
            n => (0..n).all(|k| {
                orient(self.vertices[k], self.vertices[(k + 1) % n], p) >= 0
            }),
        }
    }

    /// True if the point lies strictly inside.
    pub fn contains_interior(&self, p: LatticePoint) -> bool {
        let n = self.vertices.len();
        n >= 3 && (0..n).all(|k| orient(self.vertices[k], self.vertices[(k + 1) % n], p) > 0)
    }

    /// All lattice points of the polygon (boundary included).
    pub fn lattice_points(&self) -> Vec<LatticePoint> {
        let (mut imin, mut imax, mut jmin, mut jmax) = (i64::MAX, i64::MIN, i64::MAX, i64::MIN);
        for v in &self.vertices {
            imin = imin.min(v.i);
            imax = imax.max(v.i);
            jmin = jmin.min(v.j);
            jmax = jmax.max(v.j);
        }
        let mut out = Vec::new();
        for i in imin..=imax {
            for j in jmin..=jmax {
                if self.contains(lp(i, j)) {
                    out.push(lp(i, j));
                }
            }
        }
        out
    }

    /// Centroid as a rational point.
    pub fn centroid(&self) -> QPoint {
        let n = self.vertices.len() as i64;
        let si: i64 = self.vertices.iter().map(|v| v.i).sum();
        let sj: i64 = self.vertices.iter().map(|v| v.j).sum();
        QPoint::new(ratio(si, n), ratio(sj, n))
    }
}

fn on_lattice_segment(a: LatticePoint, b: LatticePoint, p: LatticePoint) -> bool {
    orient(a, b, p) == 0
        && (p.i - a.i) * (b.i - a.i) + (p.j - a.j) * (b.j - a.j) >= 0
        && (p.i - b.i) * (a.i - b.i) + (p.j - b.j) * (a.j - b.j) >= 0
}

/// Convex hull of a support set: the Newton polygon. Strict hull (no three
/// collinear vertices kept); single points and segments come out as the
/// degenerate 1- and 2-vertex polygons.
pub fn newton_polygon(support: &[LatticePoint]) -> Result<ConvexPolygon, Error> {
    if support.is_empty() {
        return Err(Error::EmptyPolynomial);
    }
    let mut pts: Vec<LatticePoint> = support.to_vec();
    pts.sort();
    pts.dedup();
    if pts.len() == 1 {
        return Ok(ConvexPolygon { vertices: pts });
    }
    // Monotone chain with strict turns.
    let build = |iter: &mut dyn Iterator<Item = LatticePoint>| -> Vec<LatticePoint> {
        let mut chain: Vec<LatticePoint> = Vec::new();
        for p in iter {
            while chain.len() >= 2
                && orient(chain[chain.len() - 2], chain[chain.len() - 1], p) <= 0
            {
                chain.pop();
            }
            chain.push(p);
        }
        chain
    };
    let lower = build(&mut pts.iter().copied());
    let upper = build(&mut pts.iter().rev().copied());
    let mut hull = lower;
    hull.pop();
    hull.extend(upper);
    hull.pop();
    if hull.len() < 2 {
        // All points collinear: take the two extremes.
        let a = *pts.first().unwrap();
        let b = *pts.last().unwrap();
        return Ok(ConvexPolygon { vertices: vec![a, b] });
    }
    Ok(ConvexPolygon { vertices: hull })
}

/// Outward ray attached to a polygon side.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ray {
    /// Primitive integer direction.
    pub direction: (i64, i64),
    /// Anchor point (side midpoint).
    pub anchor: (Rat, Rat),
}

/// One outward normal ray per side; a 2-vertex polygon gets the two opposite
/// coorientations of its single side.
pub fn outward_normal_rays(poly: &ConvexPolygon) -> Result<Vec<((LatticePoint, LatticePoint), Ray)>, Error> {
    if poly.vertices().len() < 2 {
        return Err(Error::NoSides);
    }
    let mut out = Vec::new();
    for (a, b) in poly.sides() {
        let e = (b.i - a.i, b.j - a.j);
        // Clockwise rotation of the edge vector points outward for ccw order.
        let d = primitive((e.1, -e.0));
        let anchor = (ratio(a.i + b.i, 2), ratio(a.j + b.j, 2));
        out.push(((a, b), Ray { direction: d, anchor: anchor.clone() }));
        if poly.is_segment() {
            out.push(((b, a), Ray { direction: (-d.0, -d.1), anchor }));
        }
    }
    Ok(out)
}

/// Signed lattice triangulation of a convex polygon.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedTriangulation {
    pub domain: ConvexPolygon,
    pub vertices: Vec<LatticePoint>,
    /// Vertex index triples, normalized counterclockwise on construction.
    pub triangles: Vec<[usize; 3]>,
    /// Signs parallel to `vertices`.
    pub signs: Vec<Sign>,
}

impl SignedTriangulation {
    pub fn new(
        domain: ConvexPolygon,
        vertices: Vec<LatticePoint>,
        mut triangles: Vec<[usize; 3]>,
        signs: Vec<Sign>,
    ) -> Result<Self, Error> {
        if signs.len() != vertices.len() {
            return Err(Error::InvalidInput(
                "signs must be parallel to vertices".into(),
            ));
        }
        for t in &mut triangles {
            if t.iter().any(|&k| k >= vertices.len()) {
                return Err(Error::InvalidInput("triangle index out of range".into()));
            }
            if orient(vertices[t[0]], vertices[t[1]], vertices[t[2]]) < 0 {
                t.swap(1, 2);
            }
        }
        Ok(SignedTriangulation { domain, vertices, triangles, signs })
    }

    pub fn sign_of(&self, p: LatticePoint) -> Option<Sign> {
        self.vertices.iter().position(|&v| v == p).map(|k| self.signs[k])
    }

    pub fn degree_triangle(m: i64) -> ConvexPolygon {
        ConvexPolygon::from_vertices(vec![lp(0, 0), lp(m, 0), lp(0, m)]).unwrap()
    }

    /// Degree when the domain is the standard triangle, otherwise the maximal
    /// coordinate sum over the domain.
    pub fn degree(&self) -> i64 {
        self.domain
            .vertices()
            .iter()
            .map(|v| v.i + v.j)
            .max()
            .unwrap_or(0)
    }
}

/// Validation report for a signed triangulation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TriangulationReport {
    pub valid: bool,
    pub primitive: bool,
    pub violations: Vec<String>,
}

/// Check the triangulation invariants: nondegenerate ccw triangles, area sum,
/// edge pairing, boundary tiling, vertex usage. Never fails; problems are
/// listed in the report.
pub fn validate_triangulation(t: &SignedTriangulation) -> TriangulationReport {
    let mut violations = Vec::new();
    let mut primitive = true;

    if t.signs.len() != t.vertices.len() {
        violations.push("signs not parallel to vertices".to_string());
    }
    {
        let mut seen = BTreeSet::new();
        for v in &t.vertices {
            if !seen.insert(*v) {
                violations.push(format!("duplicate vertex ({}, {})", v.i, v.j));
            }
        }
    }

    let mut area_sum: i64 = 0;
    let mut used = vec![false; t.vertices.len()];
    let mut edge_count: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for tri in &t.triangles {
        let [a, b, c] = *tri;
        if a >= t.vertices.len() || b >= t.vertices.len() || c >= t.vertices.len() {
            violations.push("triangle index out of range".to_string());
            continue;
        }
        let ar = orient(t.vertices[a], t.vertices[b], t.vertices[c]);
        if ar <= 0 {
            violations.push(format!("degenerate or misoriented triangle {tri:?}"));
        }
        if ar != 1 {
            primitive = false;
        }
        area_sum += ar.max(0);
        for &k in tri {
            used[k] = true;
        }
        for (u, v) in [(a, b), (b, c), (c, a)] {
            let key = (u.min(v), u.max(v));
            *edge_count.entry(key).or_insert(0) += 1;
        }
    }

    let domain_area = t.domain.doubled_area();
    if area_sum != domain_area {
        violations.push(format!(
            "area sum mismatch: triangles cover {area_sum}, domain has {domain_area}"
        ));
    }

    for (k, u) in used.iter().enumerate() {
        if !u {
            let v = t.vertices[k];
            violations.push(format!("unused vertex ({}, {})", v.i, v.j));
        }
    }

    // Edge pairing: interior edges twice, boundary edges once and on the
    // domain boundary; boundary edges must tile each domain side exactly.
    let mut boundary_edges: Vec<(LatticePoint, LatticePoint)> = Vec::new();
    for (&(u, v), &count) in &edge_count {
        let (a, b) = (t.vertices[u], t.vertices[v]);
        match count {
            1 => boundary_edges.push((a, b)),
            2 => {}
            n => violations.push(format!(
                "edge ({},{})-({},{}) shared by {n} triangles",
                a.i, a.j, b.i, b.j
            )),
        }
    }
    let sides = t.domain.sides();
    let mut per_side: Vec<Vec<(LatticePoint, LatticePoint)>> = vec![Vec::new(); sides.len()];
    'edges: for &(a, b) in &boundary_edges {
        for (sk, &(p, q)) in sides.iter().enumerate() {
            if on_lattice_segment(p, q, a) && on_lattice_segment(p, q, b) {
                per_side[sk].push((a, b));
                continue 'edges;
            }
        }
        violations.push(format!(
            "boundary edge ({},{})-({},{}) not on the domain boundary",
            a.i, a.j, b.i, b.j
        ));
    }
    for (sk, edges) in per_side.iter().enumerate() {
        let (p, q) = sides[sk];
        let dir = (q.i - p.i, q.j - p.j);
        // Order edge endpoints along the side and check they chain p -> q.
        let param = |v: LatticePoint| (v.i - p.i) * dir.0 + (v.j - p.j) * dir.1;
        let mut segs: Vec<(i64, i64)> = edges
            .iter()
            .map(|&(a, b)| {
                let (s, e) = (param(a), param(b));
                (s.min(e), s.max(e))
            })
            .collect();
        segs.sort();
        let total = param(q);
        let mut cursor = 0;
        let mut ok = true;
        for (s, e) in segs {
            if s != cursor {
                ok = false;
                break;
            }
            cursor = e;
        }
        if cursor != total {
            ok = false;
        }
        if !ok {
            violations.push(format!(
                "boundary edges do not tile side ({},{})-({},{})",
                p.i, p.j, q.i, q.j
            ));
        }
    }

    TriangulationReport {
        valid: violations.is_empty(),
        primitive: primitive && violations.is_empty(),
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(pts: &[(i64, i64)]) -> ConvexPolygon {
        newton_polygon(&pts.iter().map(|&(i, j)| lp(i, j)).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn hull_of_figure_f1_support() {
        // Newton polygon of 8x^3 - x^2 + 4y^2.
        let h = poly(&[(3, 0), (2, 0), (0, 2)]);
        assert_eq!(h.vertices().len(), 3);
        for v in [lp(3, 0), lp(2, 0), lp(0, 2)] {
            assert!(h.vertices().contains(&v));
        }
    }

    #[test]
    fn hull_degenerate_cases() {
        let point = poly(&[(5, 7)]);
        assert!(point.is_point());
        assert_eq!(point.vertices(), &[lp(5, 7)]);

        let seg = poly(&[(0, 0), (2, 2), (1, 1)]);
        assert!(seg.is_segment());
        assert_eq!(seg.vertices(), &[lp(0, 0), lp(2, 2)]);
    }

    #[test]
    fn hull_drops_interior_and_collinear_points() {
        let h = poly(&[(0, 0), (1, 0), (2, 0), (1, 1)]);
        assert_eq!(h.vertices().len(), 3);
        for v in [lp(0, 0), lp(2, 0), lp(1, 1)] {
            assert!(h.vertices().contains(&v));
        }
    }

    #[test]
    fn hull_is_idempotent() {
        let pts: Vec<LatticePoint> = vec![
            lp(0, 0),
            lp(4, 0),
            lp(0, 4),
            lp(1, 1),
            lp(2, 0),
            lp(2, 2),
        ];
        let h1 = newton_polygon(&pts).unwrap();
        let h2 = newton_polygon(h1.vertices()).unwrap();
        assert_eq!(h1, h2);
    }

    #[test]
    fn empty_support_rejected() {
        assert!(matches!(newton_polygon(&[]), Err(Error::EmptyPolynomial)));
    }

    #[test]
    fn normals_of_axis_triangle() {
        let m = 4;
        let h = poly(&[(0, 0), (m, 0), (0, m)]);
        let rays = outward_normal_rays(&h).unwrap();
        let dirs: BTreeSet<(i64, i64)> = rays.iter().map(|(_, r)| r.direction).collect();
        assert_eq!(
            dirs,
            BTreeSet::from([(0, -1), (1, 1), (-1, 0)])
        );
    }

    #[test]
    fn normals_of_segment_are_opposite() {
        let seg = poly(&[(0, 2), (3, 0)]);
        let rays = outward_normal_rays(&seg).unwrap();
        assert_eq!(rays.len(), 2);
        let d0 = rays[0].1.direction;
        let d1 = rays[1].1.direction;
        assert_eq!((d0.0 + d1.0, d0.1 + d1.1), (0, 0));
        assert!(d0 == (2, 3) || d0 == (-2, -3));
    }

    #[test]
    fn normals_point_outward() {
        let h = poly(&[(0, 0), (5, 0), (5, 3), (2, 6)]);
        let c = h.centroid();
        for ((a, b), ray) in outward_normal_rays(&h).unwrap() {
            let d = ray.direction;
            // Orthogonal to the side.
            assert_eq!(d.0 * (b.i - a.i) + d.1 * (b.j - a.j), 0);
            // Negative against the centroid direction.
            let to_c = c.sub(&a.to_qpoint());
            let dot = crate::rat::rat(d.0) * to_c.x + crate::rat::rat(d.1) * to_c.y;
            assert!(dot < crate::rat::rat(0));
        }
    }

    #[test]
    fn point_polygon_has_no_sides() {
        let point = poly(&[(1, 1)]);
        assert!(matches!(outward_normal_rays(&point), Err(Error::NoSides)));
    }

    #[test]
    fn unit_square_two_triangles_valid() {
        let domain = poly(&[(0, 0), (1, 0), (1, 1), (0, 1)]);
        let vs = vec![lp(0, 0), lp(1, 0), lp(1, 1), lp(0, 1)];
        let t = SignedTriangulation::new(
            domain,
            vs,
            vec![[0, 1, 2], [0, 2, 3]],
            vec![Sign::Plus; 4],
        )
        .unwrap();
        let rep = validate_triangulation(&t);
        assert!(rep.valid, "{:?}", rep.violations);
        assert!(rep.primitive);
    }

    #[test]
    fn overlapping_triangles_flagged() {
        let domain = poly(&[(0, 0), (2, 0), (0, 2)]);
        let vs = vec![lp(0, 0), lp(2, 0), lp(0, 2), lp(1, 1)];
        // Two triangles covering overlapping area plus a filler; area sum is off.
        let t = SignedTriangulation::new(
            domain,
            vs,
            vec![[0, 1, 2], [0, 1, 3]],
            vec![Sign::Plus; 4],
        )
        .unwrap();
        let rep = validate_triangulation(&t);
        assert!(!rep.valid);
        assert!(rep
            .violations
            .iter()
            .any(|v| v.contains("area sum mismatch")));
    }

    #[test]
    fn non_primitive_but_valid() {
        let domain = poly(&[(0, 0), (2, 0), (0, 2)]);
        let vs = vec![lp(0, 0), lp(2, 0), lp(0, 2)];
        let t = SignedTriangulation::new(domain, vs, vec![[0, 1, 2]], vec![Sign::Plus; 3]).unwrap();
        let rep = validate_triangulation(&t);
        assert!(rep.valid, "{:?}", rep.violations);
        assert!(!rep.primitive);
    }
}
