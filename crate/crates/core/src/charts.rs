//! Charts of polynomials and the topology recovery pipelines: trinomial and
//! quasi-homogeneous charts, side adjunction by cut-and-insert, gluing and
//! contraction down to the affine or projective plane.

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};

use crate::classify::{classify, ArcRole, BoundaryArc, Classification, CurveComplex};
use crate::error::Error;
use crate::lattice::{primitive, LatticePoint};
use crate::patchwork::QUADRANTS;
use crate::poly::SparsePolynomial;
use crate::rat::{cross, on_segment, rat, QPoint, Rat};

/// A chart: the modified Newton polygon in the (+,+) frame plus the curve
/// (polylines, possibly single marked points) per reflected quadrant copy in
/// absolute coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chart {
    /// Boundary of the (+,+) polygon, counterclockwise; a quasi-homogeneous
    /// chart carries the degenerate 2-vertex polygon.
    pub polygon: Vec<QPoint>,
    /// Curve per quadrant copy, in the copy's absolute plane position.
    pub curves: [Vec<Vec<QPoint>>; 4],
}

impl Chart {
    fn is_segment(&self) -> bool {
        self.polygon.len() == 2
    }

    /// All curve segments of all copies (skipping single points).
    pub fn segments(&self) -> Vec<(QPoint, QPoint)> {
        let mut out = Vec::new();
        for quad in &self.curves {
            for pl in quad {
                for w in pl.windows(2) {
                    out.push((w[0].clone(), w[1].clone()));
                }
            }
        }
        out
    }

    /// Canonical curve trace for equality tests: sorted normalized segments
    /// plus isolated points.
    pub fn trace(&self) -> Vec<(QPoint, QPoint)> {
        let mut segs: Vec<(QPoint, QPoint)> = Vec::new();
        for quad in &self.curves {
            for pl in quad {
                if pl.len() == 1 {
                    segs.push((pl[0].clone(), pl[0].clone()));
                }
                for w in pl.windows(2) {
                    let (a, b) = (w[0].clone(), w[1].clone());
                    segs.push(if a <= b { (a, b) } else { (b, a) });
                }
            }
        }
        segs.sort();
        segs.dedup();
        segs
    }
}

fn reflect_point(p: &QPoint, eps: i8, delta: i8) -> QPoint {
    p.reflect(eps, delta)
}

fn lattice_q(p: LatticePoint) -> QPoint {
    QPoint::from_ints(p.i, p.j)
}

/// Chart of a non-quasi-homogeneous trinomial: per quadrant, the midline of
/// the reflected triangle separating the vertices of opposite sign, or
/// nothing when all three signs agree.
pub fn trinomial_chart(a: &SparsePolynomial) -> Result<Chart, Error> {
    let terms: Vec<(LatticePoint, Rat)> = a.terms().map(|(p, c)| (*p, c.clone())).collect();
    if terms.len() != 3 {
        return Err(Error::InvalidInput(format!(
            "trinomial chart needs exactly 3 terms, got {}",
            terms.len()
        )));
    }
    let hull = a.newton_polygon()?;
    if hull.vertices().len() != 3 {
        return Err(Error::UseQuasiHomogeneousChart);
    }
    let polygon: Vec<QPoint> = hull.vertices().iter().map(|&v| lattice_q(v)).collect();
    let mut curves: [Vec<Vec<QPoint>>; 4] = Default::default();
    for (q, &(eps, delta)) in QUADRANTS.iter().enumerate() {
        let signs: Vec<i8> = terms
            .iter()
            .map(|(p, c)| {
                let mut s: i8 = if c.is_negative() { -1 } else { 1 };
                if eps < 0 && p.i.rem_euclid(2) == 1 {
                    s = -s;
                }
                if delta < 0 && p.j.rem_euclid(2) == 1 {
                    s = -s;
                }
                s
            })
            .collect();
        if signs[0] == signs[1] && signs[1] == signs[2] {
            continue;
        }
        let odd = if signs[0] == signs[1] {
            2
        } else if signs[0] == signs[2] {
            1
        } else {
            0
        };
        let pv = reflect_point(&lattice_q(terms[odd].0), eps, delta);
        let pa = reflect_point(&lattice_q(terms[(odd + 1) % 3].0), eps, delta);
        let pb = reflect_point(&lattice_q(terms[(odd + 2) % 3].0), eps, delta);
        curves[q].push(vec![QPoint::midpoint(&pv, &pa), QPoint::midpoint(&pv, &pb)]);
    }
    Ok(Chart { polygon, curves })
}

// -- Univariate root counting (exact) ------------------------------------------

/// Dense univariate polynomial over the rationals, low degree first.
#[derive(Clone, Debug, PartialEq, Eq)]
struct UniPoly(Vec<Rat>);

impl UniPoly {
    fn normalize(mut v: Vec<Rat>) -> UniPoly {
        while v.len() > 1 && v.last().map(|c| c.is_zero()).unwrap_or(false) {
            v.pop();
        }
        UniPoly(v)
    }

    fn degree(&self) -> usize {
        self.0.len() - 1
    }

    fn is_zero(&self) -> bool {
        self.0.iter().all(Rat::is_zero)
    }

    fn derivative(&self) -> UniPoly {
        if self.0.len() <= 1 {
            return UniPoly(vec![rat(0)]);
        }
        UniPoly::normalize(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * rat(k as i64))
                .collect(),
        )
    }

    fn rem(&self, div: &UniPoly) -> UniPoly {
        let mut r = self.0.clone();
        let d = div.degree();
        let lead = div.0[d].clone();
        while r.len() > d && r.len() > 1 {
            let k = r.len() - 1;
            let f = &r[k] / &lead;
            if !f.is_zero() {
                for i in 0..=d {
                    let idx = k - d + i;
                    let delta = &f * &div.0[i];
                    r[idx] = &r[idx] - &delta;
                }
            }
            r.pop();
        }
        UniPoly::normalize(r)
    }

    fn sign_at_zero(&self) -> i8 {
        sign_of(&self.0[0])
    }

    fn sign_at_inf(&self, positive: bool) -> i8 {
        let d = self.degree();
        let lead = sign_of(&self.0[d]);
        if positive || d % 2 == 0 {
            lead
        } else {
            -lead
        }
    }
}

fn sign_of(r: &Rat) -> i8 {
    if r.is_zero() {
        0
    } else if r.is_positive() {
        1
    } else {
        -1
    }
}

fn sturm_chain(p: &UniPoly) -> Vec<UniPoly> {
    let mut chain = vec![p.clone(), p.derivative()];
    loop {
        let k = chain.len();
        if chain[k - 1].is_zero() {
            chain.pop();
            break;
        }
        if chain[k - 1].degree() == 0 {
            break;
        }
        let r = chain[k - 2].rem(&chain[k - 1]);
        if r.is_zero() {
            break;
        }
        chain.push(UniPoly::normalize(r.0.iter().map(|c| -c.clone()).collect()));
    }
    chain
}

fn variations(signs: impl Iterator<Item = i8>) -> usize {
    let mut count = 0;
    let mut last = 0i8;
    for s in signs {
        if s == 0 {
            continue;
        }
        if last != 0 && s != last {
            count += 1;
        }
        last = s;
    }
    count
}

/// Distinct real roots of p in (0, inf) and (-inf, 0). The constant term is
/// nonzero by construction (content removed upstream).
fn count_roots_by_sign(p: &UniPoly) -> (usize, usize) {
    let chain = sturm_chain(p);
    let v_zero = variations(chain.iter().map(|q| q.sign_at_zero()));
    let v_pinf = variations(chain.iter().map(|q| q.sign_at_inf(true)));
    let v_ninf = variations(chain.iter().map(|q| q.sign_at_inf(false)));
    (v_zero - v_pinf, v_ninf - v_zero)
}

/// True if p has a real multiple root (gcd with p' has a real zero).
fn has_real_multiple_root(p: &UniPoly) -> bool {
    let mut a = p.clone();
    let mut b = p.derivative();
    loop {
        if b.is_zero() {
            break;
        }
        if b.degree() == 0 {
            if !b.0[0].is_zero() {
                return false;
            }
            break;
        }
        let r = a.rem(&b);
        a = b;
        b = r;
    }
    let g = a;
    if g.degree() == 0 {
        return false;
    }
    let chain = sturm_chain(&g);
    let v_n = variations(chain.iter().map(|q| q.sign_at_inf(false)));
    let v_p = variations(chain.iter().map(|q| q.sign_at_inf(true)));
    v_n > v_p
}

/// Segment-support profile: base point, primitive step, the univariate
/// coefficient list along the segment.
fn segment_profile(a: &SparsePolynomial) -> Result<(LatticePoint, (i64, i64), UniPoly), Error> {
    let support = a.support();
    let hull = a.newton_polygon()?;
    if !hull.is_segment() {
        return Err(Error::InvalidInput("support is not a segment".into()));
    }
    let [p0, p1] = [hull.vertices()[0], hull.vertices()[1]];
    let step = primitive((p1.i - p0.i, p1.j - p0.j));
    let len = if step.0 != 0 {
        (p1.i - p0.i) / step.0
    } else {
        (p1.j - p0.j) / step.1
    };
    let mut coeffs = vec![rat(0); (len + 1) as usize];
    for p in support {
        let k = if step.0 != 0 {
            (p.i - p0.i) / step.0
        } else {
            (p.j - p0.j) / step.1
        };
        coeffs[k as usize] = a.coeff(p);
    }
    Ok((p0, step, UniPoly::normalize(coeffs)))
}

/// Chart of a quasi-homogeneous polynomial: marked points on the segment
/// copies, one per quasiline branch in the quadrant, symmetric under the
/// reflection fixing the curve. Exact real root counts by Sturm chains.
pub fn quasihomogeneous_chart(a: &SparsePolynomial) -> Result<Chart, Error> {
    if a.is_zero() {
        return Err(Error::EmptyPolynomial);
    }
    let (_base, step, uni) = segment_profile(a)?;
    if has_real_multiple_root(&uni) {
        return Err(Error::PeripherallyDegenerate);
    }
    let (pos_roots, neg_roots) = count_roots_by_sign(&uni);
    let hull = a.newton_polygon()?;
    let [s0, s1] = [hull.vertices()[0], hull.vertices()[1]];
    let polygon = vec![lattice_q(s0), lattice_q(s1)];

    let mut curves: [Vec<Vec<QPoint>>; 4] = Default::default();
    for (q, &(eps, delta)) in QUADRANTS.iter().enumerate() {
        // Sign of w = x^step in this quadrant.
        let mut wsign = 1i8;
        if eps < 0 && step.0.rem_euclid(2) == 1 {
            wsign = -wsign;
        }
        if delta < 0 && step.1.rem_euclid(2) == 1 {
            wsign = -wsign;
        }
        let count = if wsign > 0 { pos_roots } else { neg_roots };
        let a_pt = reflect_point(&lattice_q(s0), eps, delta);
        let b_pt = reflect_point(&lattice_q(s1), eps, delta);
        for k in 1..=count {
            let tpar = crate::rat::ratio(k as i64, (count + 1) as i64);
            let x = &a_pt.x + (&b_pt.x - &a_pt.x) * &tpar;
            let y = &a_pt.y + (&b_pt.y - &a_pt.y) * &tpar;
            curves[q].push(vec![QPoint::new(x, y)]);
        }
    }
    Ok(Chart { polygon, curves })
}

// -- Side adjunction -------------------------------------------------------------

fn poly_edges(polygon: &[QPoint]) -> Vec<(QPoint, QPoint)> {
    let n = polygon.len();
    match n {
        0 | 1 => Vec::new(),
        2 => vec![(polygon[0].clone(), polygon[1].clone())],
        _ => (0..n)
            .map(|k| (polygon[k].clone(), polygon[(k + 1) % n].clone()))
            .collect(),
    }
}

fn edge_normal_matches(a: &QPoint, b: &QPoint, dir: (i64, i64)) -> bool {
    let e = b.sub(a);
    let nx = e.y.clone();
    let ny = -e.x.clone();
    let crossv = &nx * rat(dir.1) - &ny * rat(dir.0);
    let dot = &nx * rat(dir.0) + &ny * rat(dir.1);
    crossv.is_zero() && dot.is_positive()
}

/// Adjoin a side with the given outward normal: cut the polygon along the
/// chord between its support points, move the far piece one primitive
/// lattice step, fill the gap with a parallelogram, and join the curve
/// points on the cut with segments parallel to the translation. Applied
/// symmetrically in all four copies.
pub fn adjoin_side(c: &Chart, normal: (i64, i64)) -> Result<Chart, Error> {
    if normal == (0, 0) {
        return Err(Error::InvalidInput("zero normal".into()));
    }
    let normal = primitive(normal);
    if c.is_segment() {
        let e = c.polygon[1].sub(&c.polygon[0]);
        let dot = &e.x * rat(normal.0) + &e.y * rat(normal.1);
        if dot.is_zero() {
            return Ok(c.clone());
        }
    } else {
        for (a, b) in poly_edges(&c.polygon) {
            if edge_normal_matches(&a, &b, normal) {
                return Ok(c.clone());
            }
        }
    }

    let f = |p: &QPoint| &p.x * rat(normal.0) + &p.y * rat(normal.1);
    let vals: Vec<Rat> = c.polygon.iter().map(f).collect();
    let maxv = vals.iter().max().unwrap().clone();
    let minv = vals.iter().min().unwrap().clone();
    let argmax: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] == maxv).collect();
    let argmin: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] == minv).collect();
    let p_idx = argmax[0];
    let q_idx = *argmin
        .iter()
        .min_by_key(|&&k| c.polygon[k].clone())
        .unwrap();
    let p = c.polygon[p_idx].clone();
    let q = c.polygon[q_idx].clone();

    let tau0 = (-normal.1, normal.0);
    let side = |x: &QPoint| cross(&p, &q, x);

    // Decide the translation sign from the far chain's side of the cut.
    let tau: (i64, i64);
    let new_polygon: Vec<QPoint>;
    if c.is_segment() {
        tau = tau0;
        let tq = QPoint::new(rat(tau.0), rat(tau.1));
        let a0 = c.polygon[0].clone();
        let a1 = c.polygon[1].clone();
        let b0 = QPoint::new(&a0.x + &tq.x, &a0.y + &tq.y);
        let b1 = QPoint::new(&a1.x + &tq.x, &a1.y + &tq.y);
        let mut quad = vec![a0, a1, b1, b0];
        if signed_area(&quad) < rat(0) {
            quad.reverse();
        }
        new_polygon = quad;
    } else {
        let n = c.polygon.len();
        let mut chain1 = Vec::new();
        let mut k = p_idx;
        loop {
            chain1.push(c.polygon[k].clone());
            if k == q_idx {
                break;
            }
            k = (k + 1) % n;
        }
        let mut chain2 = Vec::new();
        let mut k = q_idx;
        loop {
            chain2.push(c.polygon[k].clone());
            if k == p_idx {
                break;
            }
            k = (k + 1) % n;
        }
        let s2 = chain2
            .iter()
            .map(side)
            .find(|s| !s.is_zero())
            .unwrap_or_else(|| rat(0));
        let s1 = chain1
            .iter()
            .map(side)
            .find(|s| !s.is_zero())
            .unwrap_or_else(|| rat(0));
        // tau pushes the moved chain away: toward chain2's side, or away
        // from chain1 when the cut runs along an existing boundary edge.
        let target = if !s2.is_zero() { s2.clone() } else { -s1.clone() };
        if target.is_zero() {
            return Err(Error::InvalidInput("degenerate polygon in adjunction".into()));
        }
        let tau_probe = side(&QPoint::new(&p.x + rat(tau0.0), &p.y + rat(tau0.1)));
        tau = if tau_probe.is_positive() == target.is_positive() {
            tau0
        } else {
            (-tau0.0, -tau0.1)
        };
        let shift = |pt: &QPoint| QPoint::new(&pt.x + rat(tau.0), &pt.y + rat(tau.1));
        let mut boundary: Vec<QPoint> = Vec::new();
        boundary.extend(chain1.iter().cloned());
        boundary.extend(chain2.iter().map(&shift));
        let mut cleaned: Vec<QPoint> = Vec::new();
        for pt in boundary {
            if cleaned.last() != Some(&pt) {
                cleaned.push(pt);
            }
        }
        if cleaned.last() == cleaned.first() && cleaned.len() > 1 {
            cleaned.pop();
        }
        if signed_area(&cleaned) < rat(0) {
            cleaned.reverse();
        }
        new_polygon = cleaned;
    }

    let mut curves: [Vec<Vec<QPoint>>; 4] = Default::default();
    for (qi, &(eps, delta)) in QUADRANTS.iter().enumerate() {
        let pr = reflect_point(&p, eps, delta);
        let qr = reflect_point(&q, eps, delta);
        let tau_r = QPoint::new(rat(tau.0 * eps as i64), rat(tau.1 * delta as i64));
        let side_r = |x: &QPoint| cross(&pr, &qr, x);
        // The moved half-plane in the reflected frame.
        let probe = QPoint::new(&p.x + rat(tau.0), &p.y + rat(tau.1));
        let moved_r = side_r(&reflect_point(&probe, eps, delta));
        let shift_pt = |pt: &QPoint| QPoint::new(&pt.x + &tau_r.x, &pt.y + &tau_r.y);
        // Cut-point bookkeeping: local branch counts per point (moved side,
        // unmoved side, marked points).
        #[derive(Default)]
        struct CutPoint {
            moved: usize,
            unmoved: usize,
            degree: usize,
            marked: bool,
        }
        let mut cut_points: BTreeMap<QPoint, CutPoint> = BTreeMap::new();
        let mut staged: Vec<(Vec<QPoint>, bool)> = Vec::new(); // (piece, moves)

        for pl in &c.curves[qi] {
            if pl.len() == 1 {
                if on_segment(&pr, &qr, &pl[0]) {
                    cut_points.entry(pl[0].clone()).or_default().marked = true;
                } else {
                    let keep = side_r(&pl[0]);
                    let move_it = !keep.is_zero() && keep.is_positive() == moved_r.is_positive();
                    staged.push((vec![pl[0].clone()], move_it));
                }
                continue;
            }
            // Split at transversal crossings and at vertices on the cut line.
            let mut pieces: Vec<Vec<QPoint>> = Vec::new();
            let mut cur: Vec<QPoint> = vec![pl[0].clone()];
            for w in pl.windows(2) {
                let (a, b) = (&w[0], &w[1]);
                let (sa, sb) = (side_r(a), side_r(b));
                if !sa.is_zero() && !sb.is_zero() && sa.is_positive() != sb.is_positive() {
                    let denom = &sa - &sb;
                    let tpar = &sa / &denom;
                    let x = &a.x + (&b.x - &a.x) * &tpar;
                    let y = &a.y + (&b.y - &a.y) * &tpar;
                    let r = QPoint::new(x, y);
                    cur.push(r.clone());
                    pieces.push(std::mem::take(&mut cur));
                    cur.push(r);
                }
                cur.push(b.clone());
                if side_r(b).is_zero() && cur.len() >= 2 {
                    // Vertex on the cut line: split here.
                    pieces.push(std::mem::take(&mut cur));
                    cur.push(b.clone());
                }
            }
            if cur.len() >= 2 {
                pieces.push(cur);
            }
            for piece in pieces {
                let s = piece
                    .iter()
                    .map(&side_r)
                    .find(|v| !v.is_zero())
                    .unwrap_or_else(|| rat(0));
                let move_it = !s.is_zero() && s.is_positive() == moved_r.is_positive();
                for endpoint in [piece.first(), piece.last()].into_iter().flatten() {
                    if side_r(endpoint).is_zero() && on_segment(&pr, &qr, endpoint) {
                        let entry = cut_points.entry(endpoint.clone()).or_default();
                        entry.degree += 1;
                        if move_it {
                            entry.moved += 1;
                        } else {
                            entry.unmoved += 1;
                        }
                    }
                }
                staged.push((piece, move_it));
            }
        }
        for (piece, move_it) in staged {
            if move_it {
                curves[qi].push(piece.iter().map(&shift_pt).collect());
            } else {
                curves[qi].push(piece);
            }
        }
        // Joining segments: transversal passages, dangling boundary traces,
        // and marked points. Tangential interior contacts get none.
        for (pt, info) in cut_points {
            let join = (info.moved > 0 && info.unmoved > 0) || info.degree <= 1 || info.marked;
            if join {
                let other = shift_pt(&pt);
                curves[qi].push(vec![pt, other]);
            }
        }
    }

    Ok(Chart { polygon: new_polygon, curves })
}

fn signed_area(poly: &[QPoint]) -> Rat {
    let n = poly.len();
    let mut acc = rat(0);
    for k in 0..n {
        let a = &poly[k];
        let b = &poly[(k + 1) % n];
        acc += &a.x * &b.y - &a.y * &b.x;
    }
    acc
}

// -- Gluing and contraction -------------------------------------------------------

/// Carrier of a glued complex.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Carrier {
    AffinePlane,
    ProjectivePlane,
}

/// Result of the recovery algorithms.
#[derive(Clone, Debug)]
pub struct GluedComplex {
    pub carrier: Carrier,
    /// The four copy polygons after normalization (absolute coordinates).
    pub cells: Vec<Vec<QPoint>>,
    pub segments: Vec<(QPoint, QPoint)>,
    pub components: usize,
    /// Affine only: branches running to infinity.
    pub unbounded_branches: usize,
    /// Projective only.
    pub classification: Option<Classification>,
}

/// Fixed point class of an outward normal strictly inside a vertex cone of
/// the standard triangle fan: 0 = origin, 1 = (0:1:0), 2 = (0:0:1).
fn corner_class(n: (i64, i64)) -> Option<usize> {
    match n {
        (0, -1) | (-1, 0) | (1, 1) => None,
        (a, b) if a < 0 && b < 0 => Some(0),
        (a, b) if a > 0 && a > b => Some(1),
        (a, b) if b > 0 && b > a => Some(2),
        _ => None,
    }
}

/// Translate the chart so the polygon touches both axes; the axis gluings
/// then coincide pointwise.
fn normalize_chart(c: &Chart) -> Chart {
    let minx = c.polygon.iter().map(|p| p.x.clone()).min().unwrap();
    let miny = c.polygon.iter().map(|p| p.y.clone()).min().unwrap();
    if minx.is_zero() && miny.is_zero() {
        return c.clone();
    }
    let polygon: Vec<QPoint> = c
        .polygon
        .iter()
        .map(|p| QPoint::new(&p.x - &minx, &p.y - &miny))
        .collect();
    let mut curves: [Vec<Vec<QPoint>>; 4] = Default::default();
    for (q, &(eps, delta)) in QUADRANTS.iter().enumerate() {
        let dx = if eps > 0 { -minx.clone() } else { minx.clone() };
        let dy = if delta > 0 { -miny.clone() } else { miny.clone() };
        curves[q] = c.curves[q]
            .iter()
            .map(|pl| {
                pl.iter()
                    .map(|p| QPoint::new(&p.x + &dx, &p.y + &dy))
                    .collect()
            })
            .collect();
    }
    Chart { polygon, curves }
}

/// Per-copy boundary edges in absolute coordinates (carrier on the left)
/// with the (+,+)-frame outward normal of the underlying edge.
fn copy_edges(c: &Chart) -> Vec<(usize, usize, QPoint, QPoint, (i64, i64))> {
    let base = poly_edges(&c.polygon);
    let mut out = Vec::new();
    for (q, &(eps, delta)) in QUADRANTS.iter().enumerate() {
        let orient_flip = (eps as i64) * (delta as i64) < 0;
        for (ei, (a, b)) in base.iter().enumerate() {
            let e = b.sub(a);
            let nlat = primitive((rat_floor_int(&e.y), -rat_floor_int(&e.x)));
            let (ra, rb) = (reflect_point(a, eps, delta), reflect_point(b, eps, delta));
            if orient_flip {
                out.push((q, ei, rb, ra, nlat));
            } else {
                out.push((q, ei, ra, rb, nlat));
            }
        }
    }
    out
}

fn rat_floor_int(r: &Rat) -> i64 {
    use num_traits::ToPrimitive;
    // Chart polygon vertices stay integral: constructors use lattice points
    // and adjunctions translate by integer vectors.
    debug_assert!(r.is_integer(), "non-integer polygon coordinate");
    r.to_integer().to_i64().unwrap_or(0)
}

/// Recover the affine topology: adjoin (0,-1) then (-1,0), glue along the
/// axes, contract the negative-cone sides to the origin, drop the rest.
pub fn affine_topology(c: &Chart) -> Result<GluedComplex, Error> {
    let c = adjoin_side(c, (0, -1))?;
    let c = adjoin_side(&c, (-1, 0))?;
    let c = normalize_chart(&c);
    glue_complex(&c, Carrier::AffinePlane)
}

/// Recover the projective topology: adjoin (0,-1), (-1,0), (1,1), glue the
/// far sides antipodally, contract every remaining side to its fixed point
/// class.
pub fn projective_topology(c: &Chart) -> Result<GluedComplex, Error> {
    let c = adjoin_side(c, (0, -1))?;
    let c = adjoin_side(&c, (-1, 0))?;
    let c = adjoin_side(&c, (1, 1))?;
    let c = normalize_chart(&c);
    glue_complex(&c, Carrier::ProjectivePlane)
}

fn glue_complex(c: &Chart, carrier: Carrier) -> Result<GluedComplex, Error> {
    let edges = copy_edges(c);
    let mut edge_set: BTreeMap<(QPoint, QPoint), usize> = BTreeMap::new();
    for (k, (_, _, a, b, _)) in edges.iter().enumerate() {
        edge_set.insert((a.clone(), b.clone()), k);
    }
    let is_seam = |a: &QPoint, b: &QPoint| edge_set.contains_key(&(b.clone(), a.clone()));

    let mut boundary: Vec<BoundaryArc> = Vec::new();
    let mut pair_ids: BTreeMap<(usize, bool), usize> = BTreeMap::new();
    for (q, ei, a, b, n) in &edges {
        if is_seam(a, b) {
            continue;
        }
        let role = if *n == (1, 1) {
            // Orbits {++,--} and {+-,-+} pair antipodally.
            let orbit = *q == 0 || *q == 3;
            let next = pair_ids.len();
            let pid = *pair_ids.entry((*ei, orbit)).or_insert(next);
            match carrier {
                Carrier::ProjectivePlane => ArcRole::Antipodal { pair: pid },
                Carrier::AffinePlane => ArcRole::Removed,
            }
        } else if let Some(class) = corner_class(*n) {
            match carrier {
                Carrier::ProjectivePlane => ArcRole::Contracted {
                    class,
                    linf_mult: 0i64.max(n.0).max(n.1),
                },
                Carrier::AffinePlane => {
                    if class == 0 {
                        ArcRole::Contracted { class, linf_mult: 0 }
                    } else {
                        ArcRole::Removed
                    }
                }
            }
        } else if *n == (0, -1) || *n == (-1, 0) {
            return Err(Error::InvalidInput(
                "axis side failed to glue after normalization".into(),
            ));
        } else {
            ArcRole::Removed
        };
        boundary.push(BoundaryArc { from: a.clone(), to: b.clone(), role });
    }

    let mut segments: Vec<(QPoint, QPoint)> = Vec::new();
    for q in 0..4 {
        for pl in &c.curves[q] {
            if pl.len() == 1 {
                return Err(Error::InvalidInput(
                    "marked point survived the adjunctions".into(),
                ));
            }
            for w in pl.windows(2) {
                segments.push((w[0].clone(), w[1].clone()));
            }
        }
    }
    segments.sort();
    segments.dedup();

    let complex = CurveComplex { segments: segments.clone(), boundary };
    let cl = classify(&complex)?;

    let cells: Vec<Vec<QPoint>> = QUADRANTS
        .iter()
        .map(|&(e, d)| c.polygon.iter().map(|p| reflect_point(p, e, d)).collect())
        .collect();
    Ok(GluedComplex {
        carrier,
        cells,
        segments,
        components: cl.components,
        unbounded_branches: cl.open_ends,
        classification: if carrier == Carrier::ProjectivePlane {
            Some(cl)
        } else {
            None
        },
    })
}

/// Patchwork charts: union of charts with pairwise disjoint polygon
/// interiors agreeing on shared side traces; the union must be convex.
pub fn patchwork_charts(charts: &[Chart]) -> Result<Chart, Error> {
    if charts.is_empty() {
        return Err(Error::IncompatibleCharts("no charts".into()));
    }
    if charts.len() == 1 {
        return Ok(charts[0].clone());
    }
    for i in 0..charts.len() {
        for j in i + 1..charts.len() {
            if polygons_overlap(&charts[i].polygon, &charts[j].polygon) {
                return Err(Error::IncompatibleCharts(format!(
                    "charts {i} and {j} overlap"
                )));
            }
        }
    }
    for i in 0..charts.len() {
        for j in i + 1..charts.len() {
            check_shared_traces(&charts[i], &charts[j], i, j)?;
        }
    }
    let mut all: Vec<QPoint> = Vec::new();
    for ch in charts {
        all.extend(ch.polygon.iter().cloned());
    }
    let hull = rational_hull(&all);
    let total: Rat = charts.iter().map(|ch| signed_area(&ch.polygon)).sum();
    if signed_area(&hull) != total {
        return Err(Error::IncompatibleCharts("union is not convex".into()));
    }
    let mut curves: [Vec<Vec<QPoint>>; 4] = Default::default();
    for ch in charts {
        for q in 0..4 {
            curves[q].extend(ch.curves[q].iter().cloned());
        }
    }
    Ok(Chart { polygon: hull, curves })
}

fn polygons_overlap(a: &[QPoint], b: &[QPoint]) -> bool {
    if a.len() < 3 || b.len() < 3 {
        return false;
    }
    let separated = |p: &[QPoint], q: &[QPoint]| {
        poly_edges(p)
            .iter()
            .any(|(u, v)| q.iter().all(|w| !cross(u, v, w).is_positive()))
    };
    !(separated(a, b) || separated(b, a))
}

fn check_shared_traces(a: &Chart, b: &Chart, i: usize, j: usize) -> Result<(), Error> {
    for (pa, qa) in poly_edges(&a.polygon) {
        for (pb, qb) in poly_edges(&b.polygon) {
            if !cross(&pa, &qa, &pb).is_zero() || !cross(&pa, &qa, &qb).is_zero() {
                continue;
            }
            let Some((o1, o2)) = segments_overlap(&pa, &qa, &pb, &qb) else {
                continue;
            };
            if o1 == o2 {
                continue;
            }
            let trace = |ch: &Chart| -> Vec<QPoint> {
                let mut pts = Vec::new();
                for quad in &ch.curves {
                    for pl in quad {
                        let candidates: Vec<&QPoint> = if pl.len() == 1 {
                            vec![&pl[0]]
                        } else {
                            vec![pl.first().unwrap(), pl.last().unwrap()]
                        };
                        for p in candidates {
                            for &(e, d) in QUADRANTS.iter() {
                                let r1 = reflect_point(&o1, e, d);
                                let r2 = reflect_point(&o2, e, d);
                                if on_segment(&r1, &r2, p) {
                                    pts.push(p.clone());
                                }
                            }
                        }
                    }
                }
                pts.sort();
                pts.dedup();
                pts
            };
            if trace(a) != trace(b) {
                return Err(Error::IncompatibleCharts(format!(
                    "charts {i} and {j} disagree on a shared side"
                )));
            }
        }
    }
    Ok(())
}

fn segments_overlap(
    pa: &QPoint,
    qa: &QPoint,
    pb: &QPoint,
    qb: &QPoint,
) -> Option<(QPoint, QPoint)> {
    let dx = (&qa.x - &pa.x).abs();
    let dy = (&qa.y - &pa.y).abs();
    let key = |p: &QPoint| if dx >= dy { p.x.clone() } else { p.y.clone() };
    let (a1, a2) = (key(pa).min(key(qa)), key(pa).max(key(qa)));
    let (b1, b2) = (key(pb).min(key(qb)), key(pb).max(key(qb)));
    let lo = a1.max(b1);
    let hi = a2.min(b2);
    if lo >= hi {
        return None;
    }
    let pick = |v: &Rat| -> QPoint {
        let t = if dx >= dy {
            (v - &pa.x) / (&qa.x - &pa.x)
        } else {
            (v - &pa.y) / (&qa.y - &pa.y)
        };
        QPoint::new(&pa.x + (&qa.x - &pa.x) * &t, &pa.y + (&qa.y - &pa.y) * &t)
    };
    Some((pick(&lo), pick(&hi)))
}

fn rational_hull(points: &[QPoint]) -> Vec<QPoint> {
    let mut pts = points.to_vec();
    pts.sort();
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let build = |iter: &mut dyn Iterator<Item = QPoint>| -> Vec<QPoint> {
        let mut chain: Vec<QPoint> = Vec::new();
        for p in iter {
            while chain.len() >= 2
                && !cross(&chain[chain.len() - 2], &chain[chain.len() - 1], &p).is_positive()
            {
                chain.pop();
            }
            chain.push(p);
        }
        chain
    };
    let lower = build(&mut pts.iter().cloned());
    let upper = build(&mut pts.iter().rev().cloned());
    let mut hull = lower;
    hull.pop();
    hull.extend(upper);
    hull.pop();
    hull
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_poly;
    use crate::rat::ratio;

    fn poly(s: &str) -> SparsePolynomial {
        parse_poly(s).unwrap()
    }

    #[test]
    fn cubic_trinomial_chart() {
        let ch = trinomial_chart(&poly("8x^3 - x^2 + 4y^2")).unwrap();
        let q_pp = &ch.curves[0];
        assert_eq!(q_pp.len(), 1);
        let pl = &q_pp[0];
        let m1 = QPoint::new(ratio(5, 2), ratio(0, 1));
        let m2 = QPoint::new(ratio(1, 1), ratio(1, 1));
        assert!(
            (pl[0] == m1 && pl[1] == m2) || (pl[0] == m2 && pl[1] == m1),
            "got {pl:?}"
        );
    }

    #[test]
    fn positive_trinomial_has_empty_plus_quadrant() {
        let ch = trinomial_chart(&poly("x + y + 1")).unwrap();
        assert!(ch.curves[0].is_empty());
        assert!(!ch.curves[1].is_empty());
    }

    #[test]
    fn quasihomogeneous_rejected_from_trinomial_chart() {
        assert!(matches!(
            trinomial_chart(&poly("x^2 + x y + y^2")),
            Err(Error::InvalidInput(_)) | Err(Error::UseQuasiHomogeneousChart)
        ));
        assert!(matches!(
            trinomial_chart(&poly("x^4 + x^2y^2 + y^4")),
            Err(Error::UseQuasiHomogeneousChart)
        ));
    }

    #[test]
    fn binomial_counts() {
        let ch = quasihomogeneous_chart(&poly("x^2 - y")).unwrap();
        let counts: Vec<usize> = ch.curves.iter().map(|c| c.len()).collect();
        // Quadrant order ++, -+, +-, --.
        assert_eq!(counts, vec![1, 1, 0, 0]);
    }

    #[test]
    fn example_1_2_a_counts() {
        let ch = quasihomogeneous_chart(&poly("2x^6y - x^4y^2 - 2x^2y^3 + y^4")).unwrap();
        let counts: Vec<usize> = ch.curves.iter().map(|c| c.len()).collect();
        assert_eq!(counts, vec![2, 2, 1, 1]);
    }

    #[test]
    fn positive_quasihomogeneous_is_empty() {
        let ch = quasihomogeneous_chart(&poly("x^2y^2 + 1")).unwrap();
        assert!(ch.curves.iter().all(|c| c.is_empty()));
    }

    #[test]
    fn square_factor_is_degenerate() {
        assert!(matches!(
            quasihomogeneous_chart(&poly("x^2 - 2xy + y^2")),
            Err(Error::PeripherallyDegenerate)
        ));
    }

    #[test]
    fn irrational_quasiline_is_counted() {
        // One quasiline x = 2^(1/3) y, living where x/y > 0.
        let ch = quasihomogeneous_chart(&poly("x^3 - 2y^3")).unwrap();
        let counts: Vec<usize> = ch.curves.iter().map(|c| c.len()).collect();
        assert_eq!(counts, vec![1, 0, 0, 1]);
    }

    #[test]
    fn adjoin_is_idempotent_on_existing_normals() {
        let ch = trinomial_chart(&poly("8x^3 - x^2 + 4y^2")).unwrap();
        let out = adjoin_side(&ch, (2, 3)).unwrap();
        assert_eq!(out, ch);
        let out = adjoin_side(&ch, (0, -1)).unwrap();
        assert_eq!(out, ch);
        assert!(matches!(adjoin_side(&ch, (0, 0)), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn adjoin_fig9_structure() {
        let ch = trinomial_chart(&poly("8x^3 - x^2 + 4y^2")).unwrap();
        let out = adjoin_side(&ch, (-1, 0)).unwrap();
        assert!(poly_edges(&out.polygon)
            .iter()
            .any(|(a, b)| edge_normal_matches(a, b, (-1, 0))));
        // Copies with curve endpoints on the old hypotenuse gain a joining
        // segment parallel to the translation (vertical for this normal).
        let mut vertical_joins = 0;
        for q in 0..4 {
            for pl in &out.curves[q] {
                if pl.len() == 2 && pl[0].x == pl[1].x && pl[0].y != pl[1].y {
                    vertical_joins += 1;
                }
            }
        }
        assert!(vertical_joins >= 2, "got {vertical_joins}");
    }

    #[test]
    fn projective_line_from_chart() {
        let ch = trinomial_chart(&poly("x + y + 1")).unwrap();
        let glued = projective_topology(&ch).unwrap();
        let cl = glued.classification.unwrap();
        assert_eq!(cl.code.encoding, "J");
        assert_eq!(cl.components, 1);
    }

    #[test]
    fn ellipse_from_chart() {
        let ch = trinomial_chart(&poly("x^2 + y^2 - 1")).unwrap();
        let glued = projective_topology(&ch).unwrap();
        let cl = glued.classification.unwrap();
        assert_eq!(cl.code.encoding, "1");
    }

    #[test]
    fn affine_line_two_branches() {
        let ch = trinomial_chart(&poly("x + y + 1")).unwrap();
        let glued = affine_topology(&ch).unwrap();
        assert_eq!(glued.components, 1);
        assert_eq!(glued.unbounded_branches, 2);
    }

    #[test]
    fn patchwork_of_fig12() {
        let c1 = trinomial_chart(&poly("8x^3 - x^2 + 4y^2")).unwrap();
        let c2 = trinomial_chart(&poly("4y^2 - x^2 + 1")).unwrap();
        let glued = patchwork_charts(&[c1.clone(), c2.clone()]).unwrap();
        assert_eq!(glued.polygon.len(), 3);
        let single = patchwork_charts(&[c1.clone()]).unwrap();
        assert_eq!(single, c1);
        assert!(matches!(
            patchwork_charts(&[c1.clone(), c1.clone()]),
            Err(Error::IncompatibleCharts(_))
        ));
    }
}
