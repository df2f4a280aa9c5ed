use patchwork_core::charts::*;
use patchwork_core::numeric::*;
use patchwork_core::poly::*;
use patchwork_core::lattice::lp;
use patchwork_core::rat::rat;
use rand::{Rng, SeedableRng};

fn main() {
    let a = parse_poly("8x^3 - x^2 + 4y^2").unwrap();
    let ch = trinomial_chart(&a).unwrap();
    let glued = projective_topology(&ch).unwrap();
    let chart_code = glued.classification.unwrap().code.encoding;
    let snap = numeric_isotopy(&a, 14.0, 512).unwrap();
    println!("cubic: chart={:?} numeric={:?}", chart_code, snap.projective_code.map(|c| c.encoding));
    let gl_aff = affine_topology(&ch).unwrap();
    println!("cubic affine: chart comps={} unb={} | numeric comps={} unb={}",
        gl_aff.components, gl_aff.unbounded_branches, snap.affine_components, snap.unbounded_branches);

    let b = parse_poly("8x^3y - x^2y + 4y^3").unwrap();
    let chb = trinomial_chart(&b).unwrap();
    let glb = affine_topology(&chb).unwrap();
    let snb = numeric_isotopy(&b, 14.0, 512).unwrap();
    println!("f10: chart affine comps={} unb={} | numeric comps={} unb={}",
        glb.components, glb.unbounded_branches, snb.affine_components, snb.unbounded_branches);
    let glbp = projective_topology(&chb).unwrap();
    println!("f10 projective: chart={:?} numeric={:?}",
        glbp.classification.unwrap().code.encoding, snb.projective_code.map(|c| c.encoding));

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let (mut agree, mut disagree, mut skipped) = (0, 0, 0);
    for run in 0..200 {
        let mut pts = vec![];
        let mut tries = 0;
        loop {
            tries += 1; if tries > 200 { break; }
            pts = (0..3).map(|_| lp(rng.random_range(0..=5), rng.random_range(0..=5))).collect::<Vec<_>>();
            if patchwork_core::lattice::orient(pts[0], pts[1], pts[2]) == 0 { continue; }
            let mini = pts.iter().map(|p| p.i).min().unwrap();
            let minj = pts.iter().map(|p| p.j).min().unwrap();
            pts = pts.iter().map(|p| lp(p.i - mini, p.j - minj)).collect();
            break;
        }
        let coeffs: Vec<i64> = (0..3).map(|_| {
            let c: i64 = rng.random_range(1..=8);
            if rng.random_bool(0.5) { c } else { -c }
        }).collect();
        let a = SparsePolynomial::from_terms(pts.iter().zip(&coeffs).map(|(p, &c)| (*p, rat(c))));
        let ch = match trinomial_chart(&a) { Ok(c) => c, Err(_) => { skipped += 1; continue; } };
        let chart_code = match projective_topology(&ch) {
            Ok(g) => g.classification.unwrap().code.encoding,
            Err(e) => { println!("run {run}: poly={} chart pipeline error {e}", format_poly(&a)); skipped += 1; continue; }
        };
        let snap = match numeric_isotopy(&a, 16.0, 512) {
            Ok(s) => s, Err(e) => { println!("run {run}: numeric error {e}"); skipped += 1; continue; }
        };
        let ncode = snap.projective_code.as_ref().map(|c| c.encoding.clone());
        if ncode.as_deref() == Some(chart_code.as_str()) { agree += 1; }
        else {
            disagree += 1;
            println!("run {run}: poly={} chart={} numeric={:?} note={:?}", format_poly(&a), chart_code, ncode, snap.note);
        }
    }
    println!("trinomials: agree={agree} disagree={disagree} skipped={skipped}");
}
