//! Shared topology classifier for curves on glued quadrant complexes.
//!
//! The carrier is a planar region (a union of reflected polygon copies)
//! whose outer boundary arcs are either glued antipodally in pairs, collapsed
//! to a point class, or removed (affine complexes). Curve segments live
//! inside the carrier and meet only at shared endpoints. The classifier
//! computes curve components, one-sidedness through the orientation double
//! cover, complement regions, the oval nesting forest, and the canonical
//! encoding string.

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::rat::{on_segment, QPoint, Rat};

/// Role of a carrier boundary arc.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ArcRole {
    /// Identified with the arc carrying the same pair id by x -> -x.
    Antipodal { pair: usize },
    /// Collapsed to the fixed point class `class`; `linf_mult` is the local
    /// intersection multiplicity with the line at infinity of a branch
    /// traced along this side.
    Contracted { class: usize, linf_mult: i64 },
    /// Deleted open boundary (affine complexes only).
    Removed,
}

/// Oriented boundary arc with the carrier interior on its left.
#[derive(Clone, Debug)]
pub struct BoundaryArc {
    pub from: QPoint,
    pub to: QPoint,
    pub role: ArcRole,
}

/// Classifier input.
#[derive(Clone, Debug)]
pub struct CurveComplex {
    pub segments: Vec<(QPoint, QPoint)>,
    pub boundary: Vec<BoundaryArc>,
}

/// Rooted oval nesting node.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OvalNode {
    pub children: Vec<OvalNode>,
}

impl OvalNode {
    fn depth(&self) -> usize {
        1 + self.children.iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    fn size(&self) -> usize {
        1 + self.children.iter().map(|c| c.size()).sum::<usize>()
    }
}

/// The arrangement invariant of the curve: one-sided component count, oval
/// nesting forest, and a canonical encoding string.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsotopyCode {
    pub one_sided: usize,
    pub ovals: Vec<OvalNode>,
    pub encoding: String,
    /// False when the curve has singular contacts (wedges at fixed points);
    /// the nesting forest is omitted in that case.
    pub embedded: bool,
}

impl IsotopyCode {
    pub fn total_components(&self) -> usize {
        self.one_sided + self.ovals.iter().map(|o| o.size()).sum::<usize>()
    }
}

/// Full classification result.
#[derive(Clone, Debug)]
pub struct Classification {
    pub code: IsotopyCode,
    pub components: usize,
    /// Every curve endpoint is shared by exactly two segments after the
    /// identifications (open complexes and wedge points set this false).
    pub manifold: bool,
    /// Dangling curve ends on removed boundary (affine complexes).
    pub open_ends: usize,
}

/// Canonical encoding of a nesting forest with a one-sided marker.
pub fn encode_code(one_sided: usize, forest: &[OvalNode]) -> String {
    if one_sided == 0 && forest.is_empty() {
        return "0".to_string();
    }
    let mut parts = Vec::new();
    if one_sided > 0 {
        parts.push("J".to_string());
    }
    let body = encode_forest(forest);
    if !body.is_empty() {
        parts.push(body);
    }
    parts.join(" ∪ ")
}

fn encode_forest(forest: &[OvalNode]) -> String {
    // Group identical subtrees; order groups by (depth, size, encoding).
    let mut groups: BTreeMap<(usize, usize, String), usize> = BTreeMap::new();
    for node in forest {
        let enc = encode_forest(&node.children);
        groups
            .entry((node.depth(), node.size(), enc))
            .and_modify(|c| *c += 1)
            .or_insert(1);
    }
    groups
        .into_iter()
        .map(|((_, _, enc), count)| {
            if enc.is_empty() {
                format!("{count}")
            } else {
                format!("{count}⟨{enc}⟩")
            }
        })
        .collect::<Vec<_>>()
        .join(" ∪ ")
}

/// Small union-find.
#[derive(Clone, Debug)]
pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    pub fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let r = self.find(self.parent[x]);
            self.parent[x] = r;
        }
        self.parent[x]
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}

// Internal arrangement structures -------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum EdgeKind {
    Curve { segment: usize },
    Boundary { arc: usize },
}

fn angle_class(d: &QPoint) -> u8 {
    // 0 for upper half plane including the positive x-axis, 1 for lower.
    if d.y.is_positive() || (d.y.is_zero() && d.x.is_positive()) {
        0
    } else {
        1
    }
}

fn dir_cmp(a: &QPoint, b: &QPoint) -> std::cmp::Ordering {
    use std::cmp::Ordering;
    let (ca, cb) = (angle_class(a), angle_class(b));
    if ca != cb {
        return ca.cmp(&cb);
    }
    let cr = &a.x * &b.y - &a.y * &b.x;
    if cr.is_positive() {
        Ordering::Less
    } else if cr.is_negative() {
        Ordering::Greater
    } else {
        Ordering::Equal
    }
}

struct Arrangement {
    points: Vec<QPoint>,
    /// Undirected edges (u, v, kind); boundary edges oriented so that u -> v
    /// matches the stored arc direction (carrier on the left).
    edges: Vec<(usize, usize, EdgeKind)>,
    /// Face id per half-edge; half-edge 2e is u->v, 2e+1 is v->u.
    he_face: Vec<usize>,
    num_faces: usize,
    void_face: Vec<bool>,
    rotation: Vec<Vec<usize>>,
    rotation_pos: Vec<usize>,
}

impl Arrangement {
    fn he_src(&self, h: usize) -> usize {
        let (u, v, _) = self.edges[h / 2];
        if h % 2 == 0 {
            u
        } else {
            v
        }
    }

    fn he_dst(&self, h: usize) -> usize {
        let (u, v, _) = self.edges[h / 2];
        if h % 2 == 0 {
            v
        } else {
            u
        }
    }

    fn next_he(&self, h: usize) -> usize {
        let twin = h ^ 1;
        let v = self.he_src(twin);
        let ring = &self.rotation[v];
        let k = self.rotation_pos[twin];
        ring[(k + ring.len() - 1) % ring.len()]
    }

    fn build(complex: &CurveComplex) -> Result<Arrangement, Error> {
        let mut pt_ids: BTreeMap<QPoint, usize> = BTreeMap::new();
        let mut points: Vec<QPoint> = Vec::new();
        let mut intern =
            |p: &QPoint, points: &mut Vec<QPoint>, ids: &mut BTreeMap<QPoint, usize>| {
                if let Some(&k) = ids.get(p) {
                    k
                } else {
                    let k = points.len();
                    points.push(p.clone());
                    ids.insert(p.clone(), k);
                    k
                }
            };

        let mut edges: Vec<(usize, usize, EdgeKind)> = Vec::new();
        for (si, (a, b)) in complex.segments.iter().enumerate() {
            if a == b {
                return Err(Error::InvalidInput("zero-length curve segment".into()));
            }
            let ua = intern(a, &mut points, &mut pt_ids);
            let ub = intern(b, &mut points, &mut pt_ids);
            edges.push((ua, ub, EdgeKind::Curve { segment: si }));
        }
        for (ai, arc) in complex.boundary.iter().enumerate() {
            let mut splits: Vec<QPoint> = complex
                .segments
                .iter()
                .flat_map(|(a, b)| [a.clone(), b.clone()])
                .filter(|p| p != &arc.from && p != &arc.to && on_segment(&arc.from, &arc.to, p))
                .collect();
            splits.sort_by(|p, q| param_cmp(&arc.from, p, q));
            splits.dedup();
            let mut prev = arc.from.clone();
            for s in splits.into_iter().chain([arc.to.clone()]) {
                let up = intern(&prev, &mut points, &mut pt_ids);
                let us = intern(&s, &mut points, &mut pt_ids);
                edges.push((up, us, EdgeKind::Boundary { arc: ai }));
                prev = s;
            }
        }

        // Rotation system.
        let n = points.len();
        let mut rotation: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (e, &(u, v, _)) in edges.iter().enumerate() {
            rotation[u].push(2 * e);
            rotation[v].push(2 * e + 1);
        }
        let dst = |h: usize| -> usize {
            let (u, v, _) = edges[h / 2];
            if h % 2 == 0 {
                v
            } else {
                u
            }
        };
        for (v, ring) in rotation.iter_mut().enumerate() {
            let pv = points[v].clone();
            ring.sort_by(|&h1, &h2| {
                let d1 = points[dst(h1)].sub(&pv);
                let d2 = points[dst(h2)].sub(&pv);
                dir_cmp(&d1, &d2)
            });
        }
        let nh = 2 * edges.len();
        let mut rotation_pos = vec![0usize; nh];
        for ring in &rotation {
            for (k, &h) in ring.iter().enumerate() {
                rotation_pos[h] = k;
            }
        }

        let mut arr = Arrangement {
            points,
            edges,
            he_face: vec![usize::MAX; nh],
            num_faces: 0,
            void_face: Vec::new(),
            rotation,
            rotation_pos,
        };

        // Face tracing: next(h) = clockwise neighbor of twin(h) at dst(h).
        for h0 in 0..nh {
            if arr.he_face[h0] != usize::MAX {
                continue;
            }
            let f = arr.num_faces;
            arr.num_faces += 1;
            let mut h = h0;
            loop {
                arr.he_face[h] = f;
                h = arr.next_he(h);
                if h == h0 {
                    break;
                }
            }
        }

        arr.void_face = vec![false; arr.num_faces];
        for (e, &(_, _, kind)) in arr.edges.iter().enumerate() {
            if matches!(kind, EdgeKind::Boundary { .. }) {
                let f = arr.he_face[2 * e + 1];
                arr.void_face[f] = true;
            }
        }

        arr.absorb_nested_cycles()?;
        Ok(arr)
    }

    /// Group disconnected boundary cycles into faces: every clockwise traced
    /// cycle is an inner border of the face immediately containing it.
    fn absorb_nested_cycles(&mut self) -> Result<(), Error> {
        let nh = 2 * self.edges.len();
        let mut cycles: Vec<Vec<usize>> = vec![Vec::new(); self.num_faces];
        let mut seen = vec![false; nh];
        for h0 in 0..nh {
            if seen[h0] {
                continue;
            }
            let mut cyc = Vec::new();
            let mut h = h0;
            loop {
                seen[h] = true;
                cyc.push(h);
                h = self.next_he(h);
                if h == h0 {
                    break;
                }
            }
            let f = self.he_face[h0];
            if cycles[f].is_empty() {
                cycles[f] = cyc;
            }
        }

        let mut merge = UnionFind::new(self.num_faces);
        let mut host_of: Vec<Option<usize>> = vec![None; self.num_faces];
        for f in 0..self.num_faces {
            if cycles[f].is_empty() {
                continue;
            }
            let area = self.cycle_area(&cycles[f]);
            if !area.is_positive() {
                host_of[f] = self.containing_face(&cycles[f]);
            }
        }
        for f in 0..self.num_faces {
            if let Some(host) = host_of[f] {
                merge.union(f, host);
            }
        }
        for h in 0..nh {
            let f = merge.find(self.he_face[h]);
            self.he_face[h] = f;
        }
        let mut void2 = vec![false; self.num_faces];
        for f in 0..self.num_faces {
            if self.void_face[f] {
                void2[merge.find(f)] = true;
            }
        }
        self.void_face = void2;
        Ok(())
    }

    fn cycle_area(&self, cyc: &[usize]) -> Rat {
        let mut acc = crate::rat::rat(0);
        for &h in cyc {
            let a = &self.points[self.he_src(h)];
            let b = &self.points[self.he_dst(h)];
            acc += &a.x * &b.y - &a.y * &b.x;
        }
        acc
    }

    /// Face immediately containing a clockwise cycle: leftward ray cast from
    /// its leftmost vertex. None when nothing lies to the left (outer face).
    fn containing_face(&self, cyc: &[usize]) -> Option<usize> {
        let cyc_edges: std::collections::BTreeSet<usize> = cyc.iter().map(|&h| h / 2).collect();
        let mut best_v = self.he_src(cyc[0]);
        for &h in cyc {
            let v = self.he_src(h);
            if self.points[v] < self.points[best_v] {
                best_v = v;
            }
        }
        let p = self.points[best_v].clone();
        let mut best: Option<(Rat, usize)> = None;
        for (e, &(u, v, _)) in self.edges.iter().enumerate() {
            if cyc_edges.contains(&e) {
                continue;
            }
            let (a, b) = (&self.points[u], &self.points[v]);
            // Half-open rule on y to dodge vertex degeneracies. The face east
            // of the crossing is the left face of the downward half-edge.
            let (lo, hi, downward) = if a.y < b.y {
                (a, b, 2 * e + 1)
            } else if b.y < a.y {
                (b, a, 2 * e)
            } else {
                continue;
            };
            if !(lo.y <= p.y && p.y < hi.y) {
                continue;
            }
            let t = (&p.y - &lo.y) / (&hi.y - &lo.y);
            let x = &lo.x + (&hi.x - &lo.x) * t;
            if x >= p.x {
                continue;
            }
            let better = match &best {
                None => true,
                Some((bx, _)) => x > *bx,
            };
            if better {
                best = Some((x, downward));
            }
        }
        best.map(|(_, h)| self.he_face[h])
    }
}

fn param_cmp(origin: &QPoint, p: &QPoint, q: &QPoint) -> std::cmp::Ordering {
    let dp = p.sub(origin);
    let dq = q.sub(origin);
    let np = &dp.x * &dp.x + &dp.y * &dp.y;
    let nq = &dq.x * &dq.x + &dq.y * &dq.y;
    np.cmp(&nq)
}

// Classification --------------------------------------------------------------

/// Classify a curve complex.
pub fn classify(complex: &CurveComplex) -> Result<Classification, Error> {
    let nseg = complex.segments.len();
    if nseg == 0 {
        return Ok(Classification {
            code: IsotopyCode {
                one_sided: 0,
                ovals: Vec::new(),
                encoding: "0".to_string(),
                embedded: true,
            },
            components: 0,
            manifold: true,
            open_ends: 0,
        });
    }

    let mut incidence: BTreeMap<QPoint, Vec<usize>> = BTreeMap::new();
    for (si, (a, b)) in complex.segments.iter().enumerate() {
        incidence.entry(a.clone()).or_default().push(si);
        incidence.entry(b.clone()).or_default().push(si);
    }

    #[derive(Clone, Debug, PartialEq, Eq)]
    enum Loc {
        Interior,
        Glue,
        Contracted { arc: usize },
        Removed,
    }
    let locate = |p: &QPoint| -> Loc {
        for (ai, arc) in complex.boundary.iter().enumerate() {
            if on_segment(&arc.from, &arc.to, p) {
                return match arc.role {
                    ArcRole::Antipodal { .. } => Loc::Glue,
                    ArcRole::Contracted { .. } => Loc::Contracted { arc: ai },
                    ArcRole::Removed => Loc::Removed,
                };
            }
        }
        Loc::Interior
    };

    let mut manifold = true;
    let mut open_ends = 0usize;

    let mut comp = UnionFind::new(nseg);
    let mut lift = UnionFind::new(2 * nseg);
    fn union_flip(lift: &mut UnionFind, comp: &mut UnionFind, a: usize, b: usize, flip: bool) {
        comp.union(a, b);
        if flip {
            lift.union(2 * a, 2 * b + 1);
            lift.union(2 * a + 1, 2 * b);
        } else {
            lift.union(2 * a, 2 * b);
            lift.union(2 * a + 1, 2 * b + 1);
        }
    }

    let mut contracted_groups: BTreeMap<usize, Vec<(QPoint, usize, usize)>> = BTreeMap::new();
    let mut glue_points: BTreeMap<QPoint, usize> = BTreeMap::new();

    for (p, segs) in &incidence {
        match locate(p) {
            Loc::Interior => {
                if segs.len() != 2 {
                    manifold = false;
                }
                for w in segs.windows(2) {
                    union_flip(&mut lift, &mut comp, w[0], w[1], false);
                }
            }
            Loc::Glue => {
                if segs.len() != 1 {
                    manifold = false;
                    for w in segs.windows(2) {
                        union_flip(&mut lift, &mut comp, w[0], w[1], false);
                    }
                }
                glue_points.insert(p.clone(), segs[0]);
            }
            Loc::Contracted { arc } => {
                if segs.len() != 1 {
                    manifold = false;
                }
                let class = match complex.boundary[arc].role {
                    ArcRole::Contracted { class, .. } => class,
                    _ => unreachable!(),
                };
                for &s in segs {
                    contracted_groups.entry(class).or_default().push((p.clone(), s, arc));
                }
            }
            Loc::Removed => {
                open_ends += segs.len();
                if segs.len() != 1 {
                    manifold = false;
                }
            }
        }
    }

    // Pair glue endpoints under x -> -x.
    let mut paired: std::collections::BTreeSet<QPoint> = std::collections::BTreeSet::new();
    let mut glue_pairs: Vec<(usize, usize)> = Vec::new();
    for (p, &s) in &glue_points {
        if paired.contains(p) {
            continue;
        }
        let q = QPoint::new(-p.x.clone(), -p.y.clone());
        let Some(&s2) = glue_points.get(&q) else {
            return Err(Error::SignRuleViolated(format!(
                "unmatched boundary endpoint ({}, {})",
                crate::rat::format_rat(&p.x),
                crate::rat::format_rat(&p.y)
            )));
        };
        paired.insert(p.clone());
        paired.insert(q.clone());
        glue_pairs.push((s, s2));
        union_flip(&mut lift, &mut comp, s, s2, true);
    }

    // Contracted classes: union everything at the class point with walk
    // parities; three or more ends make the contact singular.
    let walks = contracted_walks(complex)?;
    let mut singular = false;
    for (class, ends) in &contracted_groups {
        if ends.len() >= 3 {
            singular = true;
        }
        let parity = walks.get(class).cloned().unwrap_or_default();
        for a in 0..ends.len() {
            for b in a + 1..ends.len() {
                let (_, sa, arca) = &ends[a];
                let (_, sb, arcb) = &ends[b];
                let pa = parity.get(arca).copied().unwrap_or(false);
                let pb = parity.get(arcb).copied().unwrap_or(false);
                union_flip(&mut lift, &mut comp, *sa, *sb, pa != pb);
            }
        }
    }

    // Components and one-sidedness via double-cover connectivity.
    let mut comp_ids: BTreeMap<usize, usize> = BTreeMap::new();
    for s in 0..nseg {
        let r = comp.find(s);
        let next = comp_ids.len();
        comp_ids.entry(r).or_insert(next);
    }
    let ncomp = comp_ids.len();
    let mut comp_of_seg = vec![0usize; nseg];
    for s in 0..nseg {
        comp_of_seg[s] = comp_ids[&comp.find(s)];
    }
    let mut one_sided_comp = vec![false; ncomp];
    for s in 0..nseg {
        if lift.find(2 * s) == lift.find(2 * s + 1) {
            one_sided_comp[comp_of_seg[s]] = true;
        }
    }
    let mut one_sided = one_sided_comp.iter().filter(|&&b| b).count();

    if singular {
        // Wedged components: the double cover is not meaningful through a
        // wedge point; use the total z/2 class instead (glue crossings plus
        // half the summed multiplicities of the fixed point ends).
        let mut parity: BTreeMap<usize, i64> = BTreeMap::new();
        for &(sa, _) in &glue_pairs {
            *parity.entry(comp_of_seg[comp.find(sa)]).or_insert(0) += 1;
        }
        for ends in contracted_groups.values() {
            let mut per_comp: BTreeMap<usize, i64> = BTreeMap::new();
            for (_, s, arc) in ends {
                let mult = match complex.boundary[*arc].role {
                    ArcRole::Contracted { linf_mult, .. } => linf_mult,
                    _ => 0,
                };
                *per_comp.entry(comp_of_seg[comp.find(*s)]).or_insert(0) += mult;
            }
            for (c, total) in per_comp {
                *parity.entry(c).or_insert(0) += total / 2;
            }
        }
        one_sided = parity.values().filter(|&&p| p.rem_euclid(2) == 1).count();
    }

    if open_ends > 0 {
        return Ok(Classification {
            code: IsotopyCode {
                one_sided,
                ovals: Vec::new(),
                encoding: format!("open({ncomp})"),
                embedded: false,
            },
            components: ncomp,
            manifold: false,
            open_ends,
        });
    }

    if singular || !manifold {
        return Ok(Classification {
            code: IsotopyCode {
                one_sided,
                ovals: Vec::new(),
                encoding: format!("sing(c={ncomp},j={one_sided})"),
                embedded: false,
            },
            components: ncomp,
            manifold: false,
            open_ends: 0,
        });
    }

    // Regions.
    let arr = Arrangement::build(complex)?;
    let nf = arr.num_faces;
    let mut freg = UnionFind::new(nf);
    let mut flift = UnionFind::new(2 * nf);
    fn funion(freg: &mut UnionFind, flift: &mut UnionFind, a: usize, b: usize, flip: bool) {
        freg.union(a, b);
        if flip {
            flift.union(2 * a, 2 * b + 1);
            flift.union(2 * a + 1, 2 * b);
        } else {
            flift.union(2 * a, 2 * b);
            flift.union(2 * a + 1, 2 * b + 1);
        }
    }

    // Merge faces across glue arcs, interval by interval.
    let mut glue_arc_faces: BTreeMap<usize, Vec<(QPoint, QPoint, usize)>> = BTreeMap::new();
    for (e, &(u, v, kind)) in arr.edges.iter().enumerate() {
        if let EdgeKind::Boundary { arc } = kind {
            if matches!(complex.boundary[arc].role, ArcRole::Antipodal { .. }) {
                glue_arc_faces.entry(arc).or_default().push((
                    arr.points[u].clone(),
                    arr.points[v].clone(),
                    arr.he_face[2 * e],
                ));
            }
        }
    }
    let mut pair_first: BTreeMap<usize, usize> = BTreeMap::new();
    for (ai, arc) in complex.boundary.iter().enumerate() {
        if let ArcRole::Antipodal { pair } = arc.role {
            if let Some(&aj) = pair_first.get(&pair) {
                let list_a = glue_arc_faces.get(&ai).cloned().unwrap_or_default();
                let list_b = glue_arc_faces.get(&aj).cloned().unwrap_or_default();
                if list_a.len() != list_b.len() {
                    return Err(Error::SignRuleViolated(
                        "glued arcs subdivided differently".into(),
                    ));
                }
                for (pa, qa, fa) in &list_a {
                    let tp = QPoint::new(-pa.x.clone(), -pa.y.clone());
                    let tq = QPoint::new(-qa.x.clone(), -qa.y.clone());
                    let mut hit = false;
                    for (pb, qb, fb) in &list_b {
                        if (pb == &tp && qb == &tq) || (pb == &tq && qb == &tp) {
                            funion(&mut freg, &mut flift, *fa, *fb, true);
                            hit = true;
                            break;
                        }
                    }
                    if !hit {
                        return Err(Error::SignRuleViolated(
                            "glued arc intervals do not correspond".into(),
                        ));
                    }
                }
            } else {
                pair_first.insert(pair, ai);
            }
        }
    }

    merge_contracted_sectors(complex, &arr, &walks, &mut freg, &mut flift)?;

    let live: std::collections::BTreeSet<usize> = arr.he_face.iter().copied().collect();
    let mut region_of_root: BTreeMap<usize, usize> = BTreeMap::new();
    let mut regions = 0usize;
    for &f in &live {
        if arr.void_face[f] {
            continue;
        }
        let r = freg.find(f);
        region_of_root.entry(r).or_insert_with(|| {
            let id = regions;
            regions += 1;
            id
        });
    }

    let mut comp_regions: Vec<std::collections::BTreeSet<usize>> =
        vec![std::collections::BTreeSet::new(); ncomp];
    for (e, &(_, _, kind)) in arr.edges.iter().enumerate() {
        if let EdgeKind::Curve { segment } = kind {
            let c = comp_of_seg[segment];
            for h in [2 * e, 2 * e + 1] {
                let f = freg.find(arr.he_face[h]);
                if let Some(&r) = region_of_root.get(&f) {
                    comp_regions[c].insert(r);
                }
            }
        }
    }

    let ovals: Vec<usize> = (0..ncomp).filter(|&c| !one_sided_comp[c]).collect();
    if regions != ovals.len() + 1 {
        return Err(Error::SignRuleViolated(format!(
            "region count {regions} does not match oval count {}",
            ovals.len()
        )));
    }
    for &c in &ovals {
        if comp_regions[c].len() != 2 {
            return Err(Error::SignRuleViolated(format!(
                "oval component touches {} regions",
                comp_regions[c].len()
            )));
        }
    }
    for c in 0..ncomp {
        if one_sided_comp[c] && comp_regions[c].len() != 1 {
            return Err(Error::SignRuleViolated(
                "one-sided component must have one adjacent region".into(),
            ));
        }
    }

    // Root region: with a one-sided component, its unique adjacent region;
    // otherwise the region with connected double-cover preimage.
    if one_sided > 1 {
        return Err(Error::SignRuleViolated(
            "more than one one-sided component in an embedded curve".into(),
        ));
    }
    let root = if one_sided == 1 {
        let j = (0..ncomp).find(|&c| one_sided_comp[c]).unwrap();
        *comp_regions[j].iter().next().unwrap()
    } else {
        let mut lift_sets: BTreeMap<usize, std::collections::BTreeSet<usize>> = BTreeMap::new();
        for &f in &live {
            if arr.void_face[f] {
                continue;
            }
            let r = region_of_root[&freg.find(f)];
            lift_sets.entry(r).or_default().insert(flift.find(2 * f));
            lift_sets.entry(r).or_default().insert(flift.find(2 * f + 1));
        }
        let roots: Vec<usize> = lift_sets
            .iter()
            .filter(|(_, lifts)| lifts.len() == 1)
            .map(|(&r, _)| r)
            .collect();
        if roots.len() != 1 {
            return Err(Error::SignRuleViolated(format!(
                "expected one non-orientable region, found {}",
                roots.len()
            )));
        }
        roots[0]
    };

    let mut adj: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
    for &c in &ovals {
        let rs: Vec<usize> = comp_regions[c].iter().copied().collect();
        adj.entry(rs[0]).or_default().push((c, rs[1]));
        adj.entry(rs[1]).or_default().push((c, rs[0]));
    }
    let mut visited_regions = vec![false; regions];
    let mut forest_children: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut top: Vec<usize> = Vec::new();
    let mut queue = std::collections::VecDeque::new();
    visited_regions[root] = true;
    queue.push_back((root, None::<usize>));
    let mut seen_ovals = 0usize;
    while let Some((r, parent_oval)) = queue.pop_front() {
        for &(oval, other) in adj.get(&r).unwrap_or(&Vec::new()) {
            if visited_regions[other] {
                continue;
            }
            visited_regions[other] = true;
            seen_ovals += 1;
            match parent_oval {
                None => top.push(oval),
                Some(po) => forest_children.entry(po).or_default().push(oval),
            }
            queue.push_back((other, Some(oval)));
        }
    }
    if seen_ovals != ovals.len() {
        return Err(Error::SignRuleViolated(
            "region adjacency graph is not a tree".into(),
        ));
    }

    fn build_node(oval: usize, children: &BTreeMap<usize, Vec<usize>>) -> OvalNode {
        OvalNode {
            children: children
                .get(&oval)
                .map(|cs| cs.iter().map(|&c| build_node(c, children)).collect())
                .unwrap_or_default(),
        }
    }
    let forest: Vec<OvalNode> = top.iter().map(|&o| build_node(o, &forest_children)).collect();

    let encoding = encode_code(one_sided, &forest);
    Ok(Classification {
        code: IsotopyCode { one_sided, ovals: forest, encoding, embedded: true },
        components: ncomp,
        manifold,
        open_ends: 0,
    })
}

/// Walk each contracted class chain, assigning a sheet parity to every arc.
/// Arcs of one class link through shared vertices (no flip) and through
/// antipodal-glued arc endpoints (flip).
fn contracted_walks(
    complex: &CurveComplex,
) -> Result<BTreeMap<usize, BTreeMap<usize, bool>>, Error> {
    let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (ai, arc) in complex.boundary.iter().enumerate() {
        if let ArcRole::Contracted { class, .. } = arc.role {
            classes.entry(class).or_default().push(ai);
        }
    }
    let mut at_point: BTreeMap<QPoint, Vec<usize>> = BTreeMap::new();
    for (ai, arc) in complex.boundary.iter().enumerate() {
        at_point.entry(arc.from.clone()).or_default().push(ai);
        at_point.entry(arc.to.clone()).or_default().push(ai);
    }

    let mut result = BTreeMap::new();
    for (class, arcs) in classes {
        let mut parity: BTreeMap<usize, bool> = BTreeMap::new();
        let mut stack = vec![(arcs[0], false)];
        while let Some((a, pa)) = stack.pop() {
            if let Some(&old) = parity.get(&a) {
                if old != pa {
                    return Err(Error::SignRuleViolated(
                        "inconsistent contracted class walk".into(),
                    ));
                }
                continue;
            }
            parity.insert(a, pa);
            for p in [&complex.boundary[a].from, &complex.boundary[a].to] {
                for &b in at_point.get(p).unwrap_or(&Vec::new()) {
                    if b == a {
                        continue;
                    }
                    match complex.boundary[b].role {
                        ArcRole::Contracted { class: c2, .. } if c2 == class => {
                            stack.push((b, pa));
                        }
                        ArcRole::Antipodal { .. } => {
                            let q = QPoint::new(-p.x.clone(), -p.y.clone());
                            for &c in at_point.get(&q).unwrap_or(&Vec::new()) {
                                if c == a {
                                    continue;
                                }
                                if let ArcRole::Contracted { class: c3, .. } =
                                    complex.boundary[c].role
                                {
                                    if c3 == class {
                                        stack.push((c, !pa));
                                    }
                                }
                            }
                        }
                        _ => {}
                    }
                }
            }
        }
        result.insert(class, parity);
    }
    Ok(result)
}

/// Merge complement sectors around each contracted class: the faces flanking
/// consecutive chain pieces merge unless a curve endpoint separates them.
fn merge_contracted_sectors(
    complex: &CurveComplex,
    arr: &Arrangement,
    walks: &BTreeMap<usize, BTreeMap<usize, bool>>,
    freg: &mut UnionFind,
    flift: &mut UnionFind,
) -> Result<(), Error> {
    let mut arc_subs: BTreeMap<usize, Vec<(QPoint, QPoint, usize)>> = BTreeMap::new();
    for (e, &(u, v, kind)) in arr.edges.iter().enumerate() {
        if let EdgeKind::Boundary { arc } = kind {
            if matches!(complex.boundary[arc].role, ArcRole::Contracted { .. }) {
                arc_subs.entry(arc).or_default().push((
                    arr.points[u].clone(),
                    arr.points[v].clone(),
                    arr.he_face[2 * e],
                ));
            }
        }
    }
    fn funion(freg: &mut UnionFind, flift: &mut UnionFind, a: usize, b: usize, flip: bool) {
        freg.union(a, b);
        if flip {
            flift.union(2 * a, 2 * b + 1);
            flift.union(2 * a + 1, 2 * b);
        } else {
            flift.union(2 * a, 2 * b);
            flift.union(2 * a + 1, 2 * b + 1);
        }
    }

    let mut at_point: BTreeMap<QPoint, Vec<usize>> = BTreeMap::new();
    for (ai, arc) in complex.boundary.iter().enumerate() {
        at_point.entry(arc.from.clone()).or_default().push(ai);
        at_point.entry(arc.to.clone()).or_default().push(ai);
    }
    let face_at = |arc: usize, p: &QPoint| -> Option<usize> {
        let subs = arc_subs.get(&arc)?;
        for (a, b, f) in subs {
            if a == p || b == p {
                return Some(*f);
            }
        }
        None
    };

    for (ai, arc) in complex.boundary.iter().enumerate() {
        let class = match arc.role {
            ArcRole::Contracted { class, .. } => class,
            _ => continue,
        };
        let pa = walks
            .get(&class)
            .and_then(|w| w.get(&ai))
            .copied()
            .unwrap_or(false);
        for p in [&arc.from, &arc.to] {
            for &b in at_point.get(p).unwrap_or(&Vec::new()) {
                if b <= ai {
                    continue;
                }
                if let ArcRole::Contracted { class: c2, .. } = complex.boundary[b].role {
                    if c2 == class {
                        if let (Some(fa), Some(fb)) = (face_at(ai, p), face_at(b, p)) {
                            let pb = walks[&class].get(&b).copied().unwrap_or(false);
                            funion(freg, flift, fa, fb, pa != pb);
                        }
                    }
                }
            }
            let through_glue = at_point
                .get(p)
                .map(|v| {
                    v.iter()
                        .any(|&b| matches!(complex.boundary[b].role, ArcRole::Antipodal { .. }))
                })
                .unwrap_or(false);
            if through_glue {
                let q = QPoint::new(-p.x.clone(), -p.y.clone());
                for &c in at_point.get(&q).unwrap_or(&Vec::new()) {
                    if let ArcRole::Contracted { class: c3, .. } = complex.boundary[c].role {
                        if c3 == class && (c, q.clone()) > (ai, p.clone()) {
                            if let (Some(fa), Some(fc)) = (face_at(ai, p), face_at(c, &q)) {
                                // The walk parity already accounts for the
                                // sheet change across the identification.
                                let pc = walks[&class].get(&c).copied().unwrap_or(false);
                                funion(freg, flift, fa, fc, pa != pc);
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::ratio;

    fn q(x: i64, y: i64) -> QPoint {
        QPoint::from_ints(x, y)
    }

    fn qh(x2: i64, y2: i64) -> QPoint {
        QPoint::new(ratio(x2, 2), ratio(y2, 2))
    }

    fn diamond(m: i64) -> Vec<BoundaryArc> {
        vec![
            BoundaryArc { from: q(m, 0), to: q(0, m), role: ArcRole::Antipodal { pair: 0 } },
            BoundaryArc { from: q(0, m), to: q(-m, 0), role: ArcRole::Antipodal { pair: 1 } },
            BoundaryArc { from: q(-m, 0), to: q(0, -m), role: ArcRole::Antipodal { pair: 0 } },
            BoundaryArc { from: q(0, -m), to: q(m, 0), role: ArcRole::Antipodal { pair: 1 } },
        ]
    }

    #[test]
    fn empty_curve() {
        let c = CurveComplex { segments: vec![], boundary: diamond(2) };
        let cl = classify(&c).unwrap();
        assert_eq!(cl.code.encoding, "0");
        assert_eq!(cl.components, 0);
    }

    #[test]
    fn floating_oval() {
        let m = 2;
        let segs = vec![
            (qh(1, 0), qh(0, 1)),
            (qh(0, 1), qh(-1, 0)),
            (qh(-1, 0), qh(0, -1)),
            (qh(0, -1), qh(1, 0)),
        ];
        let c = CurveComplex { segments: segs, boundary: diamond(m) };
        let cl = classify(&c).unwrap();
        assert_eq!(cl.components, 1);
        assert_eq!(cl.code.one_sided, 0);
        assert_eq!(cl.code.encoding, "1");
        assert!(cl.manifold);
    }

    #[test]
    fn two_nested_ovals() {
        let m = 4;
        let inner = vec![
            (q(1, 0), q(0, 1)),
            (q(0, 1), q(-1, 0)),
            (q(-1, 0), q(0, -1)),
            (q(0, -1), q(1, 0)),
        ];
        let outer = vec![
            (q(2, 0), q(0, 2)),
            (q(0, 2), q(-2, 0)),
            (q(-2, 0), q(0, -2)),
            (q(0, -2), q(2, 0)),
        ];
        let segs = [inner, outer].concat();
        let c = CurveComplex { segments: segs, boundary: diamond(m) };
        let cl = classify(&c).unwrap();
        assert_eq!(cl.components, 2);
        assert_eq!(cl.code.encoding, "1⟨1⟩");
    }

    #[test]
    fn two_separate_ovals() {
        let m = 6;
        let oval_at = |cx: i64, cy: i64| {
            vec![
                (q(cx + 1, cy), q(cx, cy + 1)),
                (q(cx, cy + 1), q(cx - 1, cy)),
                (q(cx - 1, cy), q(cx, cy - 1)),
                (q(cx, cy - 1), q(cx + 1, cy)),
            ]
        };
        let segs = [oval_at(2, 0), oval_at(-2, 0)].concat();
        let c = CurveComplex { segments: segs, boundary: diamond(m) };
        let cl = classify(&c).unwrap();
        assert_eq!(cl.components, 2);
        assert_eq!(cl.code.encoding, "2");
    }

    #[test]
    fn projective_line_is_one_sided() {
        let m = 1;
        let segs = vec![(qh(1, 1), qh(-1, -1))];
        let c = CurveComplex { segments: segs, boundary: diamond(m) };
        let cl = classify(&c).unwrap();
        assert_eq!(cl.components, 1);
        assert_eq!(cl.code.one_sided, 1);
        assert_eq!(cl.code.encoding, "J");
        assert!(cl.manifold);
    }

    #[test]
    fn line_and_disjoint_oval() {
        let m = 4;
        let line = vec![(qh(7, 1), qh(-7, -1))];
        let oval = vec![
            (q(0, 1), q(-1, 2)),
            (q(-1, 2), q(0, 2)),
            (q(0, 2), q(0, 1)),
        ];
        let segs = [line, oval].concat();
        let c = CurveComplex { segments: segs, boundary: diamond(m) };
        let cl = classify(&c).unwrap();
        assert_eq!(cl.components, 2);
        assert_eq!(cl.code.one_sided, 1);
        assert_eq!(cl.code.encoding, "J ∪ 1");
    }

    #[test]
    fn unmatched_boundary_endpoint_is_an_error() {
        let m = 2;
        let segs = vec![(qh(2, 2), q(0, 0))];
        let c = CurveComplex { segments: segs, boundary: diamond(m) };
        assert!(matches!(classify(&c), Err(Error::SignRuleViolated(_))));
    }

    #[test]
    fn encoding_grammar() {
        let leaf = OvalNode { children: vec![] };
        let nest = OvalNode { children: vec![leaf.clone()] };
        assert_eq!(encode_code(0, &[]), "0");
        assert_eq!(encode_code(1, &[]), "J");
        assert_eq!(encode_code(0, &[leaf.clone()]), "1");
        let mut harnack = vec![leaf.clone(); 9];
        harnack.push(nest.clone());
        assert_eq!(encode_code(0, &harnack), "9 ∪ 1⟨1⟩");
        assert_eq!(encode_code(1, &[nest, leaf]), "J ∪ 1 ∪ 1⟨1⟩");
    }
}
