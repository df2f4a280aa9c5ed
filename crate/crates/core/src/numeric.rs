//! Numeric topology extraction: sign grids over log-uniform windows,
//! contour tracing, end matching along the toric strata, and the patchwork
//! verifier that compares numeric isotopy codes against the combinatorial
//! prediction at small parameter values.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::classify::{encode_code, IsotopyCode, OvalNode, UnionFind};
use crate::convexity::HeightFunction;
use crate::error::Error;
use crate::lattice::{primitive, LatticePoint, Sign, SignedTriangulation};
use crate::patchwork::{patchwork_pipeline, region_sign, symmetrize, QUADRANTS};
use crate::poly::{family_from_triangulation, SparsePolynomial};
use crate::rat::{rat_to_f64, Rat};

/// Where a hull side sends curve ends in the projective plane.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stratum {
    /// Interior of the x-axis (outward normal (0,-1)).
    AxisX,
    /// Interior of the y-axis (outward normal (-1,0)).
    AxisY,
    /// Interior of the line at infinity (outward normal (1,1)).
    Infinity,
    /// The affine origin (1:0:0).
    Origin,
    /// (0:1:0), the limit of x -> infinity directions.
    CornerX,
    /// (0:0:1), the limit of y -> infinity directions.
    CornerY,
}

#[derive(Clone, Debug)]
struct SideInfo {
    /// Primitive outward normal.
    d: (i64, i64),
    /// Primitive edge direction (offset functional).
    sigma: (i64, i64),
    stratum: Stratum,
    /// Local intersection multiplicity with the line at infinity.
    linf_mult: i64,
    /// Local branch exponents at a fixed point (positive primitive); None
    /// for side-interior strata.
    k_local: Option<(i64, i64)>,
}

fn classify_side(a: LatticePoint, b: LatticePoint) -> SideInfo {
    let e = (b.i - a.i, b.j - a.j);
    let d = primitive((e.1, -e.0));
    let sigma = primitive(e);
    let (stratum, k_local) = match d {
        (0, -1) => (Stratum::AxisX, None),
        (-1, 0) => (Stratum::AxisY, None),
        (1, 1) => (Stratum::Infinity, None),
        (dx, dy) if dx < 0 && dy < 0 => (Stratum::Origin, Some((-dx, -dy))),
        (dx, dy) if dx > 0 && dx > dy => (Stratum::CornerX, Some((dx, dx - dy))),
        (dx, dy) if dy > 0 && dy > dx => (Stratum::CornerY, Some((dy, dy - dx))),
        other => panic!("unclassifiable side normal {other:?}"),
    };
    let linf_mult = 0i64.max(d.0).max(d.1);
    SideInfo { d, sigma, stratum, linf_mult, k_local }
}

/// Prepared evaluator for sign grids in log coordinates.
struct Evaluator {
    /// (ln |coeff|, i, j, sign of coeff).
    terms: Vec<(f64, i64, i64, i8)>,
}

impl Evaluator {
    fn new(b: &SparsePolynomial) -> Evaluator {
        let terms = b
            .terms()
            .map(|(p, c)| {
                let v = rat_to_f64(c);
                (v.abs().ln(), p.i, p.j, if v >= 0.0 { 1i8 } else { -1 })
            })
            .collect();
        Evaluator { terms }
    }

    /// Sign of b at (eps e^u, delta e^v), via max-exponent rescaling.
    fn sign_at(&self, eps: i8, delta: i8, u: f64, v: f64) -> i8 {
        let mut maxe = f64::NEG_INFINITY;
        for &(lc, i, j, _) in &self.terms {
            let e = lc + i as f64 * u + j as f64 * v;
            if e > maxe {
                maxe = e;
            }
        }
        let mut acc = 0.0f64;
        for &(lc, i, j, s) in &self.terms {
            let e = lc + i as f64 * u + j as f64 * v - maxe;
            let mut sq = s;
            if eps < 0 && i.rem_euclid(2) == 1 {
                sq = -sq;
            }
            if delta < 0 && j.rem_euclid(2) == 1 {
                sq = -sq;
            }
            acc += sq as f64 * e.exp();
        }
        if acc >= 0.0 {
            1
        } else {
            -1
        }
    }
}

/// One quadrant's sign grid.
struct Grid {
    n: usize,
    r: f64,
    signs: Vec<i8>,
}

impl Grid {
    fn coord(&self, k: usize) -> f64 {
        -self.r + 2.0 * self.r * k as f64 / (self.n - 1) as f64
    }

    fn sign(&self, k: usize, l: usize) -> i8 {
        self.signs[l * self.n + k]
    }
}

fn build_grid(ev: &Evaluator, eps: i8, delta: i8, n: usize, r: f64) -> Grid {
    let mut signs = vec![0i8; n * n];
    for l in 0..n {
        let v = -r + 2.0 * r * l as f64 / (n - 1) as f64;
        for k in 0..n {
            let u = -r + 2.0 * r * k as f64 / (n - 1) as f64;
            signs[l * n + k] = ev.sign_at(eps, delta, u, v);
        }
    }
    Grid { n, r, signs }
}

/// Grid-edge crossing id: (quadrant, horizontal?, k, l).
type CrossKey = (usize, bool, usize, usize);

/// March one quadrant grid: connect sign-change crossings inside each cell,
/// resolving ambiguous saddles with the cell-center sign.
fn march(
    quad: usize,
    grid: &Grid,
    ev: &Evaluator,
    eps: i8,
    delta: i8,
    cross_ids: &mut BTreeMap<CrossKey, usize>,
    links: &mut Vec<(usize, usize)>,
) {
    let n = grid.n;
    fn intern(key: CrossKey, ids: &mut BTreeMap<CrossKey, usize>) -> usize {
        let next = ids.len();
        *ids.entry(key).or_insert(next)
    }
    for l in 0..n - 1 {
        for k in 0..n - 1 {
            let s00 = grid.sign(k, l);
            let s10 = grid.sign(k + 1, l);
            let s01 = grid.sign(k, l + 1);
            let s11 = grid.sign(k + 1, l + 1);
            let bottom = s00 != s10;
            let top = s01 != s11;
            let left = s00 != s01;
            let right = s10 != s11;
            let count = bottom as u8 + top as u8 + left as u8 + right as u8;
            if count == 0 {
                continue;
            }
            let b_key = (quad, true, k, l);
            let t_key = (quad, true, k, l + 1);
            let l_key = (quad, false, k, l);
            let r_key = (quad, false, k + 1, l);
            match count {
                2 => {
                    let mut pts = Vec::with_capacity(2);
                    if bottom {
                        pts.push(b_key);
                    }
                    if right {
                        pts.push(r_key);
                    }
                    if top {
                        pts.push(t_key);
                    }
                    if left {
                        pts.push(l_key);
                    }
                    let ia = intern(pts[0], cross_ids);
                    let ib = intern(pts[1], cross_ids);
                    links.push((ia, ib));
                }
                4 => {
                    let step = 2.0 * grid.r / (grid.n - 1) as f64;
                    let uc = grid.coord(k) + step / 2.0;
                    let vc = grid.coord(l) + step / 2.0;
                    let sc = ev.sign_at(eps, delta, uc, vc);
                    let pairs: [(CrossKey, CrossKey); 2] = if sc == s00 {
                        [(b_key, r_key), (t_key, l_key)]
                    } else {
                        [(b_key, l_key), (t_key, r_key)]
                    };
                    for (a, b) in pairs {
                        let ia = intern(a, cross_ids);
                        let ib = intern(b, cross_ids);
                        links.push((ia, ib));
                    }
                }
                _ => unreachable!("impossible marching cell"),
            }
        }
    }
}

/// Numeric picture of one polynomial at one window.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NumericSnapshot {
    pub window: f64,
    pub resolution: usize,
    pub per_quadrant_components: [usize; 4],
    pub affine_components: usize,
    pub unbounded_branches: usize,
    pub projective_code: Option<IsotopyCode>,
    pub projective_components: usize,
    /// Extraction trouble, if any.
    pub note: Option<String>,
}

/// Curve samples (grid crossings) in one quadrant window, log coordinates.
pub fn sample_quadrant_points(
    b: &SparsePolynomial,
    eps: i8,
    delta: i8,
    r: f64,
    n: usize,
) -> Vec<(f64, f64)> {
    let ev = Evaluator::new(b);
    let grid = build_grid(&ev, eps, delta, n, r);
    let step = 2.0 * r / (n - 1) as f64;
    let mut out = Vec::new();
    for l in 0..n {
        for k in 0..n - 1 {
            if grid.sign(k, l) != grid.sign(k + 1, l) {
                out.push((grid.coord(k) + step / 2.0, grid.coord(l)));
            }
            if grid.sign(l, k) != grid.sign(l, k + 1) {
                out.push((grid.coord(l), grid.coord(k) + step / 2.0));
            }
        }
    }
    out
}

#[derive(Clone, Debug)]
struct End {
    piece: usize,
    quad: usize,
    u: f64,
    v: f64,
    dir: (f64, f64),
    side: Option<usize>,
    offset: f64,
    cross: CrossKey,
}

struct SessionOut {
    per_quadrant_components: [usize; 4],
    affine_components: usize,
    unbounded_branches: usize,
    projective_code: Option<IsotopyCode>,
    projective_components: usize,
    note: Option<String>,
}

/// Full numeric extraction at one window.
fn extract(b: &SparsePolynomial, n: usize, r: f64) -> Result<SessionOut, Error> {
    if b.is_zero() {
        return Err(Error::EmptyPolynomial);
    }
    let hull = b.newton_polygon()?;
    let sides: Vec<(LatticePoint, LatticePoint, SideInfo)> = hull
        .sides()
        .iter()
        .map(|&(a, bb)| (a, bb, classify_side(a, bb)))
        .collect();

    let ev = Evaluator::new(b);
    let grids: Vec<Grid> = QUADRANTS
        .iter()
        .map(|&(e, d)| build_grid(&ev, e, d, n, r))
        .collect();

    let mut cross_ids: BTreeMap<CrossKey, usize> = BTreeMap::new();
    let mut links: Vec<(usize, usize)> = Vec::new();
    for (q, &(e, d)) in QUADRANTS.iter().enumerate() {
        march(q, &grids[q], &ev, e, d, &mut cross_ids, &mut links);
    }
    let ncross = cross_ids.len();
    let mut uf = UnionFind::new(ncross);
    let mut deg = vec![0usize; ncross];
    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); ncross];
    for &(a, bb) in &links {
        uf.union(a, bb);
        deg[a] += 1;
        deg[bb] += 1;
        neighbors[a].push(bb);
        neighbors[bb].push(a);
    }
    let key_of: BTreeMap<usize, CrossKey> = cross_ids.iter().map(|(k, &v)| (v, *k)).collect();
    for (id, d) in deg.iter().enumerate() {
        if *d > 2 {
            return Err(Error::InvalidInput(format!(
                "crossing degree {d} at {:?}",
                key_of[&id]
            )));
        }
    }

    let mut piece_ids: BTreeMap<usize, usize> = BTreeMap::new();
    for id in 0..ncross {
        let root = uf.find(id);
        let next = piece_ids.len();
        piece_ids.entry(root).or_insert(next);
    }
    let npieces = piece_ids.len();

    let mut per_quadrant = [0usize; 4];
    {
        let mut seen: BTreeMap<usize, usize> = BTreeMap::new();
        for (key, &id) in &cross_ids {
            let p = piece_ids[&uf.find(id)];
            seen.entry(p).or_insert(key.0);
        }
        for (_, q) in seen {
            per_quadrant[q] += 1;
        }
    }

    let mut ends: Vec<End> = Vec::new();
    for id in 0..ncross {
        if deg[id] != 1 {
            continue;
        }
        let key = key_of[&id];
        let (q, horiz, k, l) = key;
        let (e, d8) = QUADRANTS[q];
        let (u, v) = refine_crossing(&ev, &grids[q], e, d8, horiz, k, l);
        let inner = walk_inner(id, &neighbors, 6);
        let (qq, hh, kk, ll) = key_of[&inner];
        debug_assert_eq!(qq, q);
        let (iu, iv) = cross_position(&grids[q], hh, kk, ll);
        let dir = (u - iu, v - iv);
        ends.push(End {
            piece: piece_ids[&uf.find(id)],
            quad: q,
            u,
            v,
            dir,
            side: None,
            offset: 0.0,
            cross: key,
        });
    }

    for end in &mut ends {
        let side = classify_end_side(&sides, end)?;
        end.side = Some(side);
        let sg = sides[side].2.sigma;
        end.offset = sg.0 as f64 * end.u + sg.1 as f64 * end.v;
    }

    let passages = match_ends(&sides, &ends)?;

    let mut comp = UnionFind::new(npieces.max(1));
    let mut lift = UnionFind::new(2 * npieces.max(1));
    fn union_flip(comp: &mut UnionFind, lift: &mut UnionFind, a: usize, b: usize, flip: bool) {
        comp.union(a, b);
        if flip {
            lift.union(2 * a, 2 * b + 1);
            lift.union(2 * a + 1, 2 * b);
        } else {
            lift.union(2 * a, 2 * b);
            lift.union(2 * a + 1, 2 * b + 1);
        }
    }
    for pas in &passages {
        union_flip(&mut comp, &mut lift, ends[pas.a].piece, ends[pas.b].piece, pas.flip);
    }

    let mut class_ends: BTreeMap<Stratum, Vec<usize>> = BTreeMap::new();
    for (k, end) in ends.iter().enumerate() {
        let st = sides[end.side.unwrap()].2.stratum;
        if matches!(st, Stratum::Origin | Stratum::CornerX | Stratum::CornerY) {
            class_ends.entry(st).or_default().push(k);
        }
    }
    let mut singular = false;
    for list in class_ends.values() {
        if list.len() >= 3 {
            singular = true;
            for w in list.windows(2) {
                union_flip(&mut comp, &mut lift, ends[w[0]].piece, ends[w[1]].piece, false);
            }
        }
    }

    let mut comp_ids: BTreeMap<usize, usize> = BTreeMap::new();
    for p in 0..npieces {
        let root = comp.find(p);
        let next = comp_ids.len();
        comp_ids.entry(root).or_insert(next);
    }
    let ncomp = comp_ids.len();
    let mut one_sided_comp = vec![false; ncomp];
    for p in 0..npieces {
        if lift.find(2 * p) == lift.find(2 * p + 1) {
            one_sided_comp[comp_ids[&comp.find(p)]] = true;
        }
    }
    let mut one_sided = one_sided_comp.iter().filter(|&&x| x).count();
    if singular {
        one_sided = singular_one_sided(&ends, &sides, &passages, &comp_ids, &mut comp);
    }

    // Affine picture.
    let mut aff = UnionFind::new(npieces.max(1));
    let mut unbounded = 0usize;
    let mut origin_pieces: Vec<usize> = Vec::new();
    for pas in &passages {
        let st = sides[ends[pas.a].side.unwrap()].2.stratum;
        match st {
            Stratum::AxisX | Stratum::AxisY => aff.union(ends[pas.a].piece, ends[pas.b].piece),
            Stratum::Origin => {
                origin_pieces.push(ends[pas.a].piece);
                origin_pieces.push(ends[pas.b].piece);
            }
            _ => unbounded += 2,
        }
    }
    for w in origin_pieces.windows(2) {
        aff.union(w[0], w[1]);
    }
    let mut aff_ids: BTreeMap<usize, usize> = BTreeMap::new();
    for p in 0..npieces {
        let root = aff.find(p);
        let next = aff_ids.len();
        aff_ids.entry(root).or_insert(next);
    }

    let mut note = None;
    let code = if npieces == 0 {
        Some(IsotopyCode {
            one_sided: 0,
            ovals: Vec::new(),
            encoding: "0".to_string(),
            embedded: true,
        })
    } else if singular {
        Some(IsotopyCode {
            one_sided,
            ovals: Vec::new(),
            encoding: format!("sing(c={ncomp},j={one_sided})"),
            embedded: false,
        })
    } else {
        match region_nesting(
            &grids,
            &ev,
            &ends,
            &sides,
            &passages,
            &comp_ids,
            &mut comp,
            &one_sided_comp,
            &key_of,
            &cross_ids,
            &mut uf,
            &piece_ids,
        ) {
            Ok(forest) => Some(IsotopyCode {
                one_sided,
                encoding: encode_code(one_sided, &forest),
                ovals: forest,
                embedded: true,
            }),
            Err(e) => {
                note = Some(format!("region extraction failed: {e}"));
                None
            }
        }
    };

    Ok(SessionOut {
        per_quadrant_components: per_quadrant,
        affine_components: aff_ids.len(),
        unbounded_branches: unbounded,
        projective_code: code,
        projective_components: ncomp,
        note,
    })
}

fn cross_position(grid: &Grid, horiz: bool, k: usize, l: usize) -> (f64, f64) {
    let step = 2.0 * grid.r / (grid.n - 1) as f64;
    if horiz {
        (grid.coord(k) + step / 2.0, grid.coord(l))
    } else {
        (grid.coord(k), grid.coord(l) + step / 2.0)
    }
}

/// Refine a crossing position by sign bisection along its grid edge.
fn refine_crossing(
    ev: &Evaluator,
    grid: &Grid,
    eps: i8,
    delta: i8,
    horiz: bool,
    k: usize,
    l: usize,
) -> (f64, f64) {
    let (mut a, mut b) = if horiz {
        (
            (grid.coord(k), grid.coord(l)),
            (grid.coord(k + 1), grid.coord(l)),
        )
    } else {
        (
            (grid.coord(k), grid.coord(l)),
            (grid.coord(k), grid.coord(l + 1)),
        )
    };
    let sa = ev.sign_at(eps, delta, a.0, a.1);
    for _ in 0..30 {
        let m = ((a.0 + b.0) / 2.0, (a.1 + b.1) / 2.0);
        if ev.sign_at(eps, delta, m.0, m.1) == sa {
            a = m;
        } else {
            b = m;
        }
    }
    ((a.0 + b.0) / 2.0, (a.1 + b.1) / 2.0)
}

fn walk_inner(start: usize, neighbors: &[Vec<usize>], steps: usize) -> usize {
    let mut prev = start;
    let mut cur = neighbors[start].first().copied().unwrap_or(start);
    for _ in 0..steps {
        let next = neighbors[cur].iter().copied().find(|&x| x != prev);
        match next {
            Some(nx) => {
                prev = cur;
                cur = nx;
            }
            None => break,
        }
    }
    cur
}

fn classify_end_side(
    sides: &[(LatticePoint, LatticePoint, SideInfo)],
    end: &End,
) -> Result<usize, Error> {
    if sides.is_empty() {
        return Err(Error::InvalidInput("no hull sides for end matching".into()));
    }
    let norm = (end.dir.0 * end.dir.0 + end.dir.1 * end.dir.1).sqrt();
    if norm == 0.0 {
        return Err(Error::InvalidInput("zero exit direction".into()));
    }
    let mut best = 0usize;
    let mut best_cos = f64::NEG_INFINITY;
    for (k, (_, _, info)) in sides.iter().enumerate() {
        let dn = ((info.d.0 * info.d.0 + info.d.1 * info.d.1) as f64).sqrt();
        let cosv = (info.d.0 as f64 * end.dir.0 + info.d.1 as f64 * end.dir.1) / (dn * norm);
        if cosv > best_cos {
            best_cos = cosv;
            best = k;
        }
    }
    if best_cos < 0.5 {
        return Err(Error::InvalidInput(format!(
            "end direction matches no side normal (cos {best_cos:.2})"
        )));
    }
    Ok(best)
}

#[derive(Clone, Debug)]
struct Passage {
    a: usize,
    b: usize,
    flip: bool,
}

fn partner_quadrant(q: usize, d: (i64, i64)) -> usize {
    let (e, dl) = QUADRANTS[q];
    let pe = if d.0.rem_euclid(2) == 1 { -e } else { e };
    let pd = if d.1.rem_euclid(2) == 1 { -dl } else { dl };
    QUADRANTS.iter().position(|&x| x == (pe, pd)).unwrap()
}

/// Pair window ends: per hull side and quadrant pair, sorted by the offset
/// functional. Sheet flip = parity of the multiplicity on the line at
/// infinity.
fn match_ends(
    sides: &[(LatticePoint, LatticePoint, SideInfo)],
    ends: &[End],
) -> Result<Vec<Passage>, Error> {
    let mut passages = Vec::new();
    let mut buckets: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (k, end) in ends.iter().enumerate() {
        buckets.entry((end.side.unwrap(), end.quad)).or_default().push(k);
    }
    let mut done: std::collections::BTreeSet<(usize, usize)> = std::collections::BTreeSet::new();
    let keys: Vec<(usize, usize)> = buckets.keys().copied().collect();
    for (side, quad) in keys {
        if done.contains(&(side, quad)) {
            continue;
        }
        let pq = partner_quadrant(quad, sides[side].2.d);
        done.insert((side, quad));
        done.insert((side, pq));
        let list_a = buckets.get(&(side, quad)).cloned().unwrap_or_default();
        let list_b = buckets.get(&(side, pq)).cloned().unwrap_or_default();
        if list_a.len() != list_b.len() {
            return Err(Error::InvalidInput(format!(
                "end count mismatch on side {side}: {} vs {}",
                list_a.len(),
                list_b.len()
            )));
        }
        let mut aa = list_a;
        let mut bb = list_b;
        aa.sort_by(|&x, &y| ends[x].offset.partial_cmp(&ends[y].offset).unwrap());
        bb.sort_by(|&x, &y| ends[x].offset.partial_cmp(&ends[y].offset).unwrap());
        let flip = sides[side].2.linf_mult.rem_euclid(2) == 1;
        for (x, y) in aa.iter().zip(&bb) {
            passages.push(Passage { a: *x, b: *y, flip });
        }
    }
    Ok(passages)
}

/// Total z/2 class of components from passage multiplicities (used when
/// wedge points make the lift meaningless).
fn singular_one_sided(
    ends: &[End],
    sides: &[(LatticePoint, LatticePoint, SideInfo)],
    passages: &[Passage],
    comp_ids: &BTreeMap<usize, usize>,
    comp: &mut UnionFind,
) -> usize {
    let mut parity: BTreeMap<usize, i64> = BTreeMap::new();
    for pas in passages {
        let side = ends[pas.a].side.unwrap();
        let c = comp_ids[&comp.find(ends[pas.a].piece)];
        *parity.entry(c).or_insert(0) += sides[side].2.linf_mult;
    }
    parity.values().filter(|&&p| p.rem_euclid(2) == 1).count()
}

// -- Regions and nesting over the sign grids ----------------------------------


/// Middle border grid point of the side's tropical territory: the longest
/// run of window-border points whose dominant monomial lies on the side.
fn side_territory_rep(
    grid: &Grid,
    ev: &Evaluator,
    a: LatticePoint,
    b: LatticePoint,
) -> Option<(usize, usize)> {
    let n = grid.n;
    let mut walk: Vec<(usize, usize)> = Vec::with_capacity(4 * n);
    for k in 0..n {
        walk.push((k, 0));
    }
    for l in 1..n {
        walk.push((n - 1, l));
    }
    for k in (0..n - 1).rev() {
        walk.push((k, n - 1));
    }
    for l in (1..n - 1).rev() {
        walk.push((0, l));
    }
    let on_side = |p: LatticePoint| -> bool {
        crate::lattice::orient(a, b, p) == 0
            && (p.i - a.i) * (b.i - a.i) + (p.j - a.j) * (b.j - a.j) >= 0
            && (p.i - b.i) * (a.i - b.i) + (p.j - b.j) * (a.j - b.j) >= 0
    };
    let dominant: Vec<bool> = walk
        .iter()
        .map(|&(k, l)| {
            let (u, v) = (grid.coord(k), grid.coord(l));
            let mut best = f64::NEG_INFINITY;
            let mut arg = crate::lattice::lp(0, 0);
            for &(lc, i, j, _) in &ev.terms {
                let e = lc + i as f64 * u + j as f64 * v;
                if e > best {
                    best = e;
                    arg = crate::lattice::lp(i, j);
                }
            }
            on_side(arg)
        })
        .collect();
    // Longest cyclic run of dominant points; return its middle.
    let m = walk.len();
    if dominant.iter().all(|&x| x) {
        return Some(walk[0]);
    }
    let mut best_run: Option<(usize, usize)> = None; // (start, len)
    let start0 = (0..m).find(|&i| !dominant[i])?;
    let mut i = start0;
    let mut run_start = None;
    for step in 0..=m {
        let idx = (start0 + step) % m;
        if dominant[idx] {
            if run_start.is_none() {
                run_start = Some(idx);
            }
        } else if let Some(rs) = run_start.take() {
            let len = (idx + m - rs) % m;
            if best_run.map(|(_, bl)| len > bl).unwrap_or(true) {
                best_run = Some((rs, len));
            }
        }
        i = idx;
    }
    let _ = i;
    let (rs, len) = best_run?;
    Some(walk[(rs + len / 2) % m])
}

#[allow(clippy::too_many_arguments)]
fn region_nesting(
    grids: &[Grid],
    ev: &Evaluator,
    ends: &[End],
    sides: &[(LatticePoint, LatticePoint, SideInfo)],
    passages: &[Passage],
    comp_ids: &BTreeMap<usize, usize>,
    comp: &mut UnionFind,
    one_sided_comp: &[bool],
    key_of: &BTreeMap<usize, CrossKey>,
    cross_ids: &BTreeMap<CrossKey, usize>,
    cross_uf: &mut UnionFind,
    piece_ids: &BTreeMap<usize, usize>,
) -> Result<Vec<OvalNode>, Error> {
    let _ = key_of;
    let n = grids[0].n;
    let node = |q: usize, k: usize, l: usize| (q * n * n + l * n + k) as u32;
    let total = 4 * n * n;
    let mut reg = UnionFindU32::new(total);
    let mut lift = UnionFindU32::new(2 * total);
    fn runion(reg: &mut UnionFindU32, lift: &mut UnionFindU32, a: u32, b: u32, flip: bool) {
        reg.union(a, b);
        if flip {
            lift.union(2 * a, 2 * b + 1);
            lift.union(2 * a + 1, 2 * b);
        } else {
            lift.union(2 * a, 2 * b);
            lift.union(2 * a + 1, 2 * b + 1);
        }
    }

    for (q, grid) in grids.iter().enumerate() {
        for l in 0..n {
            for k in 0..n {
                if k + 1 < n && grid.sign(k, l) == grid.sign(k + 1, l) {
                    runion(&mut reg, &mut lift, node(q, k, l), node(q, k + 1, l), false);
                }
                if l + 1 < n && grid.sign(k, l) == grid.sign(k, l + 1) {
                    runion(&mut reg, &mut lift, node(q, k, l), node(q, k, l + 1), false);
                }
            }
        }
    }

    let flank_nodes = |end: &End| -> (u32, u32) {
        let (q, horiz, k, l) = end.cross;
        let grid = &grids[q];
        let (p1, p2) = if horiz { ((k, l), (k + 1, l)) } else { ((k, l), (k, l + 1)) };
        let side = end.side.unwrap();
        let sg = sides[side].2.sigma;
        let off = |p: (usize, usize)| sg.0 as f64 * grid.coord(p.0) + sg.1 as f64 * grid.coord(p.1);
        let (lo, hi) = if off(p1) <= off(p2) { (p1, p2) } else { (p2, p1) };
        (node(q, lo.0, lo.1), node(q, hi.0, hi.1))
    };

    for pas in passages {
        let side = ends[pas.a].side.unwrap();
        let info = &sides[side].2;
        let (a_lo, a_hi) = flank_nodes(&ends[pas.a]);
        let (b_lo, b_hi) = flank_nodes(&ends[pas.b]);
        // Flank correspondence through a fixed point: the complement side of
        // a local branch (z, w) = (a s^k1, b s^k2) connects upper-to-upper in
        // the signed transverse coordinate; in magnitude terms this reverses
        // exactly when k1 is even or k2 is odd (but not both).
        let reversed = match info.k_local {
            None => false,
            Some((k1, k2)) => (k1.rem_euclid(2) == 0) != (k2.rem_euclid(2) == 1),
        };
        if reversed {
            runion(&mut reg, &mut lift, a_lo, b_hi, pas.flip);
            runion(&mut reg, &mut lift, a_hi, b_lo, pas.flip);
        } else {
            runion(&mut reg, &mut lift, a_lo, b_lo, pas.flip);
            runion(&mut reg, &mut lift, a_hi, b_hi, pas.flip);
        }
    }

    // Sides with no curve ends still glue their boundary territories, except
    // around a fixed point whose link is cut by branches of other sides.
    let mut has_ends: std::collections::BTreeSet<(usize, usize)> =
        std::collections::BTreeSet::new();
    let mut class_with_ends: std::collections::BTreeSet<Stratum> =
        std::collections::BTreeSet::new();
    for end in ends {
        has_ends.insert((end.side.unwrap(), end.quad));
        let st = sides[end.side.unwrap()].2.stratum;
        if matches!(st, Stratum::Origin | Stratum::CornerX | Stratum::CornerY) {
            class_with_ends.insert(st);
        }
    }
    for (side_idx, (_, _, info)) in sides.iter().enumerate() {
        if matches!(info.stratum, Stratum::Origin | Stratum::CornerX | Stratum::CornerY)
            && class_with_ends.contains(&info.stratum)
        {
            continue;
        }
        for q in 0..4 {
            let pq = partner_quadrant(q, info.d);
            if q >= pq {
                continue;
            }
            if has_ends.contains(&(side_idx, q)) || has_ends.contains(&(side_idx, pq)) {
                continue;
            }
            let (sa, sb) = (&sides[side_idx].0, &sides[side_idx].1);
            let (Some((ak, al)), Some((bk, bl))) = (
                side_territory_rep(&grids[q], ev, *sa, *sb),
                side_territory_rep(&grids[pq], ev, *sa, *sb),
            ) else {
                continue;
            };
            let flip = info.linf_mult.rem_euclid(2) == 1;
            runion(&mut reg, &mut lift, node(q, ak, al), node(pq, bk, bl), flip);
        }
    }

    // Fixed point classes: merge complement sectors around the class point.
    // The link alternates quadrant territories and branch passages; sectors
    // connect across the two adjacent strata (transition merges), while the
    // passage flank merges above jump over the branches themselves.
    //
    // Quadrant indices follow QUADRANTS: 0 = ++, 1 = -+, 2 = +-, 3 = --.
    #[derive(Clone, Copy, PartialEq, Eq)]
    enum Ray {
        Bottom,
        Left,
        Right,
        Top,
    }
    type ClassSpec = (
        Stratum,
        [usize; 4],
        [bool; 4],
        [Stratum; 4],
        (usize, usize),
        (Ray, Stratum),
        (Ray, Stratum),
    );
    let class_specs: [ClassSpec; 3] = [
        (
            Stratum::Origin,
            [0, 1, 3, 2],
            [false, false, false, false],
            [Stratum::AxisY, Stratum::AxisX, Stratum::AxisY, Stratum::AxisX],
            (0, 0),
            (Ray::Bottom, Stratum::AxisX),
            (Ray::Left, Stratum::AxisY),
        ),
        (
            Stratum::CornerX,
            [0, 2, 1, 3],
            [false, false, true, true],
            [Stratum::AxisX, Stratum::Infinity, Stratum::AxisX, Stratum::Infinity],
            (n - 1, 0),
            (Ray::Bottom, Stratum::AxisX),
            (Ray::Right, Stratum::Infinity),
        ),
        (
            Stratum::CornerY,
            [0, 1, 2, 3],
            [false, false, true, true],
            [Stratum::AxisY, Stratum::Infinity, Stratum::AxisY, Stratum::Infinity],
            (0, n - 1),
            (Ray::Left, Stratum::AxisY),
            (Ray::Top, Stratum::Infinity),
        ),
    ];
    for (stratum, order, parities, trans, corner, ray_a, ray_b) in class_specs {
        let mut per_quad: [Option<&End>; 4] = [None, None, None, None];
        for end in ends {
            if sides[end.side.unwrap()].2.stratum != stratum {
                continue;
            }
            if per_quad[end.quad].is_some() {
                return Err(Error::InvalidInput(
                    "two branches of one fixed point class in a quadrant".into(),
                ));
            }
            per_quad[end.quad] = Some(end);
        }
        // Representative grid node of the class sector facing a stratum.
        let rep = |q: usize, facing: Stratum| -> Result<u32, Error> {
            let Some(end) = per_quad[q] else {
                return Ok(node(q, corner.0, corner.1));
            };
            let (_, horiz, k, l) = end.cross;
            let ray = if horiz && l == 0 {
                Ray::Bottom
            } else if horiz && l == n - 1 {
                Ray::Top
            } else if !horiz && k == 0 {
                Ray::Left
            } else if !horiz && k == n - 1 {
                Ray::Right
            } else {
                return Err(Error::InvalidInput("fixed point end off the border".into()));
            };
            let on_ray_stratum = if ray == ray_a.0 {
                ray_a.1
            } else if ray == ray_b.0 {
                ray_b.1
            } else {
                return Err(Error::InvalidInput(
                    "fixed point end on an unexpected border ray".into(),
                ));
            };
            let (p1, p2) = if horiz { ((k, l), (k + 1, l)) } else { ((k, l), (k, l + 1)) };
            let dist = |p: (usize, usize)| {
                let dx = p.0 as i64 - corner.0 as i64;
                let dy = p.1 as i64 - corner.1 as i64;
                dx.abs() + dy.abs()
            };
            let (near, far) = if dist(p1) <= dist(p2) { (p1, p2) } else { (p2, p1) };
            // The far flank faces the ray's own stratum; the near flank wraps
            // around the corner toward the other stratum.
            let pick = if facing == on_ray_stratum { far } else { near };
            Ok(node(q, pick.0, pick.1))
        };
        for w in 0..4 {
            let (qa, qb) = (order[w], order[(w + 1) % 4]);
            let s = trans[w];
            let flip = parities[w] != parities[(w + 1) % 4];
            let ra = rep(qa, s)?;
            let rb = rep(qb, s)?;
            runion(&mut reg, &mut lift, ra, rb, flip);
        }
    }

    // Region ids.
    let mut region_of: BTreeMap<u32, usize> = BTreeMap::new();
    for q in 0..4 {
        for l in 0..n {
            for k in 0..n {
                let root = reg.find(node(q, k, l));
                let next = region_of.len();
                region_of.entry(root).or_insert(next);
            }
        }
    }
    let regions = region_of.len();

    let ncomp = one_sided_comp.len();
    let mut comp_regions: Vec<std::collections::BTreeSet<usize>> =
        vec![std::collections::BTreeSet::new(); ncomp];
    for (key, &cid) in cross_ids {
        let piece = piece_ids[&cross_uf.find(cid)];
        let c = comp_ids[&comp.find(piece)];
        let (q, horiz, k, l) = *key;
        let (p1, p2) = if horiz { ((k, l), (k + 1, l)) } else { ((k, l), (k, l + 1)) };
        for p in [p1, p2] {
            let rid = region_of[&reg.find(node(q, p.0, p.1))];
            comp_regions[c].insert(rid);
        }
    }

    let ovals: Vec<usize> = (0..ncomp).filter(|&c| !one_sided_comp[c]).collect();
    if regions != ovals.len() + 1 {
        return Err(Error::InvalidInput(format!(
            "numeric region count {regions} vs ovals {}",
            ovals.len()
        )));
    }
    for &c in &ovals {
        if comp_regions[c].len() != 2 {
            return Err(Error::InvalidInput(format!(
                "numeric oval touches {} regions",
                comp_regions[c].len()
            )));
        }
    }
    let one_sided = one_sided_comp.iter().filter(|&&x| x).count();
    let root_region = if one_sided == 1 {
        let j = (0..ncomp).find(|&c| one_sided_comp[c]).unwrap();
        if comp_regions[j].len() != 1 {
            return Err(Error::InvalidInput(
                "numeric one-sided component with two adjacent regions".into(),
            ));
        }
        *comp_regions[j].iter().next().unwrap()
    } else {
        let mut lift_sets: BTreeMap<usize, std::collections::BTreeSet<u32>> = BTreeMap::new();
        for q in 0..4 {
            for l in 0..n {
                for k in 0..n {
                    let nd = node(q, k, l);
                    let rid = region_of[&reg.find(nd)];
                    lift_sets.entry(rid).or_default().insert(lift.find(2 * nd));
                    lift_sets.entry(rid).or_default().insert(lift.find(2 * nd + 1));
                }
            }
        }
        let roots: Vec<usize> = lift_sets
            .iter()
            .filter(|(_, s)| s.len() == 1)
            .map(|(&r, _)| r)
            .collect();
        if roots.len() != 1 {
            return Err(Error::InvalidInput(format!(
                "numeric root regions: {}",
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
    let mut visited: std::collections::BTreeSet<usize> = std::collections::BTreeSet::new();
    let mut forest_children: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut top = Vec::new();
    let mut queue = std::collections::VecDeque::new();
    visited.insert(root_region);
    queue.push_back((root_region, None::<usize>));
    let mut seen = 0usize;
    while let Some((r, parent)) = queue.pop_front() {
        for &(oval, other) in adj.get(&r).unwrap_or(&Vec::new()) {
            if visited.contains(&other) {
                continue;
            }
            visited.insert(other);
            seen += 1;
            match parent {
                None => top.push(oval),
                Some(po) => forest_children.entry(po).or_default().push(oval),
            }
            queue.push_back((other, Some(oval)));
        }
    }
    if seen != ovals.len() {
        return Err(Error::InvalidInput(
            "numeric region graph is not a tree".into(),
        ));
    }
    fn build(oval: usize, ch: &BTreeMap<usize, Vec<usize>>) -> OvalNode {
        OvalNode {
            children: ch
                .get(&oval)
                .map(|cs| cs.iter().map(|&c| build(c, ch)).collect())
                .unwrap_or_default(),
        }
    }
    Ok(top.into_iter().map(|o| build(o, &forest_children)).collect())
}

/// u32 union-find for big grids.
struct UnionFindU32 {
    parent: Vec<u32>,
}

impl UnionFindU32 {
    fn new(n: usize) -> Self {
        UnionFindU32 { parent: (0..n as u32).collect() }
    }

    fn find(&mut self, x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        let mut cur = x;
        while self.parent[cur as usize] != root {
            let next = self.parent[cur as usize];
            self.parent[cur as usize] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra as usize] = rb;
        }
    }
}

// -- Public entry points --------------------------------------------------------

/// Default window heuristic: fragment positions scale with the height
/// gradient times ln(1/t).
pub fn default_window(max_height: i64, degree: i64, t: f64) -> f64 {
    let base = 1.2 * (max_height as f64 + degree as f64) * (1.0 / t).ln();
    base.max(6.0)
}

/// Numeric picture of a single polynomial over a given log window.
pub fn numeric_isotopy(
    b: &SparsePolynomial,
    window: f64,
    resolution: usize,
) -> Result<NumericSnapshot, Error> {
    if resolution < 8 {
        return Err(Error::ResolutionTooSmall);
    }
    let out = extract(b, resolution + 1, window)?;
    Ok(NumericSnapshot {
        window,
        resolution,
        per_quadrant_components: out.per_quadrant_components,
        affine_components: out.affine_components,
        unbounded_branches: out.unbounded_branches,
        projective_code: out.projective_code,
        projective_components: out.projective_components,
        note: out.note,
    })
}

/// Verifier report over one t schedule.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NumericReport {
    pub t_used: String,
    pub grid_resolution: usize,
    pub per_quadrant_component_counts: [usize; 4],
    pub affine_component_count: usize,
    pub projective_isotopy_code: Option<IsotopyCode>,
    pub combinatorial_code: IsotopyCode,
    pub stabilized: bool,
    pub mismatch_fraction: f64,
    pub window: f64,
    pub steps: Vec<NumericStep>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NumericStep {
    pub t: String,
    pub window: f64,
    pub code: Option<String>,
    pub note: Option<String>,
}

/// Default t schedule 2^-1 .. 2^-12.
pub fn default_schedule() -> Vec<Rat> {
    (1..=12).map(|k| crate::rat::ratio(1, 1 << k)).collect()
}

/// Moment map of the lifted support: weights |x^w| t^nu(w).
fn weighted_moment(u: f64, v: f64, ln_t: f64, pts: &[(LatticePoint, i64)]) -> (f64, f64) {
    let exps: Vec<f64> = pts
        .iter()
        .map(|(p, h)| p.i as f64 * u + p.j as f64 * v + *h as f64 * ln_t)
        .collect();
    let m = exps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (mut wsum, mut sx, mut sy) = (0.0, 0.0, 0.0);
    for ((p, _), e) in pts.iter().zip(&exps) {
        let w = (e - m).exp();
        wsum += w;
        sx += w * p.i as f64;
        sy += w * p.j as f64;
    }
    (sx / wsum, sy / wsum)
}

/// Run the Patchwork Theorem check over a t schedule: stabilization means
/// two consecutive numeric codes equal to the combinatorial code. Also
/// samples the sign mismatch between the numeric grid and the combinatorial
/// regions through the moment map.
pub fn verify_patchwork(
    t: &SignedTriangulation,
    nu: &HeightFunction,
    schedule: &[Rat],
    resolution: usize,
) -> Result<NumericReport, Error> {
    let family = family_from_triangulation(t, nu)?;
    let comb = patchwork_pipeline(t)?;
    let sym = symmetrize(t)?;
    let m = t.degree();
    // Weighted moment data: lattice points of the family with their heights.
    // Weighting each monomial by t^nu is the moment map of the lifted
    // polytope and makes the region correspondence sharp as t shrinks.
    let weighted: Vec<(LatticePoint, i64)> =
        family.terms.iter().map(|(p, (_, h))| (*p, *h)).collect();

    let mut steps = Vec::new();
    let mut prev_good = false;
    let mut stabilized = false;
    let mut last: Option<(Rat, NumericSnapshot)> = None;

    for tval in schedule {
        let tf = rat_to_f64(tval);
        let window = default_window(family.max_height(), m, tf);
        let b = family.at(tval);
        match numeric_isotopy(&b, window, resolution) {
            Ok(snap) => {
                let code_txt = snap.projective_code.as_ref().map(|c| c.encoding.clone());
                let good = code_txt.as_deref() == Some(comb.code.encoding.as_str());
                steps.push(NumericStep {
                    t: crate::rat::format_rat(tval),
                    window,
                    code: code_txt,
                    note: snap.note.clone(),
                });
                if good && prev_good {
                    stabilized = true;
                }
                prev_good = good;
                last = Some((tval.clone(), snap));
                if stabilized {
                    break;
                }
            }
            Err(e) => {
                steps.push(NumericStep {
                    t: crate::rat::format_rat(tval),
                    window,
                    code: None,
                    note: Some(e.to_string()),
                });
                prev_good = false;
            }
        }
    }

    let (t_used, snap) = match last {
        Some(x) => x,
        None => {
            return Ok(NumericReport {
                t_used: "none".into(),
                grid_resolution: resolution,
                per_quadrant_component_counts: [0; 4],
                affine_component_count: 0,
                projective_isotopy_code: None,
                combinatorial_code: comb.code,
                stabilized: false,
                mismatch_fraction: 1.0,
                window: 0.0,
                steps,
            })
        }
    };

    let tf = rat_to_f64(&t_used);
    let window = default_window(family.max_height(), m, tf);
    let b = family.at(&t_used);
    let ev = Evaluator::new(&b);
    let ln_t = tf.ln();
    let nsample = 48usize;
    let mut total = 0usize;
    let mut mismatch = 0usize;
    for &(e, d) in QUADRANTS.iter() {
        for a in 0..nsample {
            for bb in 0..nsample {
                let u = -window + 2.0 * window * (a as f64 + 0.5) / nsample as f64;
                let v = -window + 2.0 * window * (bb as f64 + 0.5) / nsample as f64;
                let s = ev.sign_at(e, d, u, v);
                let (mx, my) = weighted_moment(u, v, ln_t, &weighted);
                let px = if e > 0 { mx } else { -mx };
                let py = if d > 0 { my } else { -my };
                if let Some(cs) = region_sign(&sym, px, py) {
                    total += 1;
                    let want = match cs {
                        Sign::Plus => 1i8,
                        Sign::Minus => -1,
                    };
                    if want != s {
                        mismatch += 1;
                    }
                }
            }
        }
    }

    Ok(NumericReport {
        t_used: crate::rat::format_rat(&t_used),
        grid_resolution: resolution,
        per_quadrant_component_counts: snap.per_quadrant_components,
        affine_component_count: snap.affine_components,
        projective_isotopy_code: snap.projective_code,
        combinatorial_code: comb.code,
        stabilized,
        mismatch_fraction: if total == 0 { 1.0 } else { mismatch as f64 / total as f64 },
        window,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::ellipse_fixture;
    use crate::poly::parse_poly;
    use crate::rat::ratio;

    #[test]
    fn circle_is_one_oval() {
        let b = parse_poly("x^2 + y^2 - 1").unwrap();
        let snap = numeric_isotopy(&b, 6.0, 128).unwrap();
        assert_eq!(snap.affine_components, 1);
        let code = snap.projective_code.expect("code");
        assert_eq!(code.encoding, "1");
    }

    #[test]
    fn line_is_one_sided() {
        let b = parse_poly("x + y + 1").unwrap();
        let snap = numeric_isotopy(&b, 6.0, 128).unwrap();
        let code = snap.projective_code.expect("code");
        assert_eq!(code.encoding, "J");
        assert_eq!(snap.affine_components, 1);
        assert_eq!(snap.unbounded_branches, 2);
    }

    #[test]
    fn empty_curve_extraction() {
        let b = parse_poly("x^2y^2 + 1").unwrap();
        let snap = numeric_isotopy(&b, 6.0, 64).unwrap();
        assert_eq!(snap.projective_components, 0);
        assert_eq!(snap.projective_code.unwrap().encoding, "0");
    }

    #[test]
    fn resolution_floor() {
        let b = parse_poly("x + y + 1").unwrap();
        assert!(matches!(
            numeric_isotopy(&b, 6.0, 4),
            Err(Error::ResolutionTooSmall)
        ));
    }

    #[test]
    fn ellipse_fixture_verifies() {
        let (t, nu) = ellipse_fixture();
        let schedule: Vec<Rat> = (1..=8).map(|k| ratio(1, 1 << k)).collect();
        let rep = verify_patchwork(&t, &nu, &schedule, 128).unwrap();
        assert!(rep.stabilized, "steps: {:#?}", rep.steps);
        assert_eq!(
            rep.projective_isotopy_code.unwrap().encoding,
            rep.combinatorial_code.encoding
        );
        assert!(rep.mismatch_fraction < 0.05, "mismatch {}", rep.mismatch_fraction);
    }
}
