//! Built-in problems and randomized corpus generators.

use rand::Rng;

use crate::convexity::{regular_subdivision, ConvexPartition, HeightFunction};
use crate::error::Error;
use crate::lattice::{lp, orient, validate_triangulation, ConvexPolygon, LatticePoint, Sign, SignedTriangulation};

/// All lattice points of the degree-m triangle, lexicographic.
pub fn degree_points(m: i64) -> Vec<LatticePoint> {
    let mut out = Vec::new();
    for i in 0..=m {
        for j in 0..=(m - i) {
            out.push(lp(i, j));
        }
    }
    out
}

/// The standard primitive triangulation of the degree-m triangle: every unit
/// cell split along the (1,0)-(0,1) diagonal.
pub fn standard_triangulation(m: i64, signs: Vec<Sign>) -> SignedTriangulation {
    let vertices = degree_points(m);
    let idx = |p: LatticePoint| vertices.iter().position(|&v| v == p).unwrap();
    let mut triangles = Vec::new();
    for i in 0..m {
        for j in 0..m - i {
            triangles.push([idx(lp(i, j)), idx(lp(i + 1, j)), idx(lp(i, j + 1))]);
            if i + j <= m - 2 {
                triangles.push([idx(lp(i + 1, j)), idx(lp(i + 1, j + 1)), idx(lp(i, j + 1))]);
            }
        }
    }
    SignedTriangulation::new(
        SignedTriangulation::degree_triangle(m),
        vertices,
        triangles,
        signs,
    )
    .unwrap()
}

/// Quadratic lift certifying the standard triangulation, gauge-reduced.
pub fn paraboloid_heights(m: i64) -> HeightFunction {
    let grad = (m + 1) / 2;
    HeightFunction::from_pairs(
        degree_points(m)
            .into_iter()
            .map(|p| (p, p.i * p.i + p.i * p.j + p.j * p.j - grad * (p.i + p.j))),
    )
}

/// Harnack sign distribution: minus exactly where both coordinates are odd.
pub fn harnack_signs(m: i64) -> Vec<Sign> {
    degree_points(m)
        .iter()
        .map(|p| {
            if p.i % 2 == 1 && p.j % 2 == 1 {
                Sign::Minus
            } else {
                Sign::Plus
            }
        })
        .collect()
}

/// Degree-6 Harnack fixture on the standard triangulation.
pub fn harnack_fixture() -> (SignedTriangulation, HeightFunction) {
    (standard_triangulation(6, harnack_signs(6)), paraboloid_heights(6))
}

/// Degree-2 fixture whose patchwork is a single oval (an ellipse).
pub fn ellipse_fixture() -> (SignedTriangulation, HeightFunction) {
    let signs = degree_points(2)
        .iter()
        .map(|p| if *p == lp(1, 0) { Sign::Minus } else { Sign::Plus })
        .collect();
    (standard_triangulation(2, signs), paraboloid_heights(2))
}

fn rect(x0: i64, y0: i64, x1: i64, y1: i64) -> ConvexPolygon {
    ConvexPolygon::from_vertices(vec![lp(x0, y0), lp(x1, y0), lp(x1, y1), lp(x0, y1)]).unwrap()
}

/// Pinwheel partition: three congruent rectangles tiling a 2 x 3 box whose
/// fold pattern admits no convexifying function.
pub fn pinwheel_partition() -> ConvexPartition {
    ConvexPartition::new(
        rect(0, 0, 2, 3),
        vec![rect(0, 0, 1, 2), rect(1, 0, 2, 2), rect(0, 2, 2, 3)],
    )
    .unwrap()
}

/// Random sign vector.
pub fn random_signs<R: Rng>(rng: &mut R, n: usize) -> Vec<Sign> {
    (0..n)
        .map(|_| if rng.random_bool(0.5) { Sign::Plus } else { Sign::Minus })
        .collect()
}

/// Random convex-certified primitive triangulation of the degree-m triangle:
/// jittered quadratic heights, retried until the lower hull is primitive.
pub fn random_convex_triangulation<R: Rng>(
    m: i64,
    rng: &mut R,
) -> Result<(SignedTriangulation, HeightFunction), Error> {
    let points = degree_points(m);
    for _ in 0..64 {
        let jitter_range = 1 + (m / 3);
        let nu = HeightFunction::from_pairs(points.iter().map(|&p| {
            let q = p.i * p.i + p.i * p.j + p.j * p.j;
            (p, 2 * q + rng.random_range(0..=jitter_range))
        }));
        let part = regular_subdivision(&points, &nu)?;
        if part.cells.iter().any(|c| c.vertices().len() != 3 || c.doubled_area() != 1) {
            continue;
        }
        let triangles: Vec<[usize; 3]> = part
            .cells
            .iter()
            .map(|c| {
                let vs = c.vertices();
                [
                    points.iter().position(|&p| p == vs[0]).unwrap(),
                    points.iter().position(|&p| p == vs[1]).unwrap(),
                    points.iter().position(|&p| p == vs[2]).unwrap(),
                ]
            })
            .collect();
        let signs = random_signs(rng, points.len());
        let t = SignedTriangulation::new(
            SignedTriangulation::degree_triangle(m),
            points.clone(),
            triangles,
            signs,
        )?;
        debug_assert!(validate_triangulation(&t).primitive);
        return Ok((t, nu));
    }
    Err(Error::InvalidInput(
        "failed to draw a primitive regular triangulation".into(),
    ))
}

/// Random primitive triangulation (not necessarily convex): the standard one
/// stirred by random diagonal flips.
pub fn random_flip_triangulation<R: Rng>(m: i64, rng: &mut R) -> SignedTriangulation {
    let n_points = degree_points(m).len();
    let mut t = standard_triangulation(m, vec![Sign::Plus; n_points]);
    let flips = (m * m * 10) as usize;
    for _ in 0..flips {
        random_flip(&mut t, rng);
    }
    t.signs = random_signs(rng, n_points);
    debug_assert!(validate_triangulation(&t).valid);
    t
}

/// Flip one random interior edge if its quadrilateral is strictly convex.
fn random_flip<R: Rng>(t: &mut SignedTriangulation, rng: &mut R) {
    // Collect interior edges: (triangle_a, triangle_b, shared u, v).
    use std::collections::BTreeMap;
    let mut edge_map: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (ti, tri) in t.triangles.iter().enumerate() {
        for k in 0..3 {
            let (u, v) = (tri[k], tri[(k + 1) % 3]);
            edge_map.entry((u.min(v), u.max(v))).or_default().push(ti);
        }
    }
    let interior: Vec<((usize, usize), Vec<usize>)> = edge_map
        .into_iter()
        .filter(|(_, tris)| tris.len() == 2)
        .collect();
    if interior.is_empty() {
        return;
    }
    let ((u, v), tris) = interior[rng.random_range(0..interior.len())].clone();
    let (ta, tb) = (tris[0], tris[1]);
    let other = |tri: &[usize; 3]| tri.iter().copied().find(|&k| k != u && k != v).unwrap();
    let a = other(&t.triangles[ta]);
    let b = other(&t.triangles[tb]);
    // Flip u-v to a-b when the quad a-u-b-v is strictly convex.
    let (pa, pu, pb, pv) = (t.vertices[a], t.vertices[u], t.vertices[b], t.vertices[v]);
    let convex = orient(pa, pu, pb) != 0
        && orient(pb, pv, pa) != 0
        && orient(pa, pu, pb).signum() == -orient(pa, pv, pb).signum()
        && orient(pu, pa, pv).signum() == -orient(pu, pb, pv).signum();
    if !convex {
        return;
    }
    t.triangles[ta] = [a, u, b];
    t.triangles[tb] = [a, b, v];
    for tri in [ta, tb] {
        let [x, y, z] = t.triangles[tri];
        if orient(t.vertices[x], t.vertices[y], t.vertices[z]) < 0 {
            t.triangles[tri].swap(1, 2);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convexity::{check_convexifies, Subdivision};
    use crate::patchwork::patchwork_pipeline;
    use rand::SeedableRng;

    #[test]
    fn standard_triangulation_is_primitive_and_convex() {
        for m in 1..=6 {
            let n = degree_points(m).len();
            let t = standard_triangulation(m, vec![Sign::Plus; n]);
            let rep = validate_triangulation(&t);
            assert!(rep.valid, "m={m}: {:?}", rep.violations);
            assert!(rep.primitive, "m={m}");
            let nu = paraboloid_heights(m);
            assert_eq!(
                check_convexifies(&Subdivision::Triangulation(&t), &nu).unwrap(),
                true,
                "m={m}"
            );
        }
    }

    #[test]
    fn ellipse_fixture_is_one_oval() {
        let (t, nu) = ellipse_fixture();
        assert!(check_convexifies(&Subdivision::Triangulation(&t), &nu).unwrap());
        let cl = patchwork_pipeline(&t).unwrap();
        assert_eq!(cl.code.encoding, "1", "got {:?}", cl.code);
        assert_eq!(cl.components, 1);
        assert!(cl.manifold);
    }

    #[test]
    fn harnack_fixture_code() {
        let (t, nu) = harnack_fixture();
        assert!(check_convexifies(&Subdivision::Triangulation(&t), &nu).unwrap());
        let cl = patchwork_pipeline(&t).unwrap();
        assert_eq!(cl.components, 11);
        assert_eq!(cl.code.encoding, "9 ∪ 1⟨1⟩", "got {:?}", cl.code);
    }

    #[test]
    fn random_convex_triangulations_verify() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for m in 2..=4 {
            for _ in 0..5 {
                let (t, nu) = random_convex_triangulation(m, &mut rng).unwrap();
                let rep = validate_triangulation(&t);
                assert!(rep.valid && rep.primitive);
                assert!(check_convexifies(&Subdivision::Triangulation(&t), &nu).unwrap());
            }
        }
    }

    #[test]
    fn random_flip_triangulations_are_valid() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for m in 2..=5 {
            let t = random_flip_triangulation(m, &mut rng);
            let rep = validate_triangulation(&t);
            assert!(rep.valid, "m={m}: {:?}", rep.violations);
            assert!(rep.primitive);
        }
    }
}
