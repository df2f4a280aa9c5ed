//! Exact rational linear programming, feasibility form.
//!
//! Solves systems of rational equalities and >= inequalities over free
//! variables with a dense phase-1 simplex using Bland's rule. No floating
//! point: every pivot is a `BigRational` operation. Infeasible systems come
//! back with a Farkas certificate that can be re-verified independently.

use num_traits::{One, Signed, Zero};

use crate::rat::{rat, Rat};

/// Constraint relation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rel {
    Ge,
    Eq,
}

/// One constraint row, sparse coefficients over variable indices.
#[derive(Clone, Debug)]
pub struct LpRow {
    pub coeffs: Vec<(usize, Rat)>,
    pub rel: Rel,
    pub rhs: Rat,
}

/// Feasibility problem over free rational variables.
#[derive(Clone, Debug, Default)]
pub struct LpProblem {
    pub num_vars: usize,
    pub rows: Vec<LpRow>,
}

impl LpProblem {
    pub fn new(num_vars: usize) -> Self {
        LpProblem { num_vars, rows: Vec::new() }
    }

    pub fn push(&mut self, coeffs: Vec<(usize, Rat)>, rel: Rel, rhs: Rat) {
        self.rows.push(LpRow { coeffs, rel, rhs });
    }

    fn row_dot(&self, row: &LpRow, x: &[Rat]) -> Rat {
        let mut acc = rat(0);
        for (k, c) in &row.coeffs {
            acc += c * &x[*k];
        }
        acc
    }

    /// Check a candidate solution exactly.
    pub fn satisfied_by(&self, x: &[Rat]) -> bool {
        self.rows.iter().all(|row| {
            let lhs = self.row_dot(row, x);
            match row.rel {
                Rel::Eq => lhs == row.rhs,
                Rel::Ge => lhs >= row.rhs,
            }
        })
    }
}

/// Farkas infeasibility certificate: multipliers y per row, nonnegative on
/// inequality rows, with y^T A = 0 and y^T b > 0.
#[derive(Clone, Debug)]
pub struct FarkasCertificate {
    pub multipliers: Vec<Rat>,
}

impl FarkasCertificate {
    /// Exact re-verification against the original problem.
    pub fn verify(&self, p: &LpProblem) -> bool {
        if self.multipliers.len() != p.rows.len() {
            return false;
        }
        for (y, row) in self.multipliers.iter().zip(&p.rows) {
            if row.rel == Rel::Ge && y.is_negative() {
                return false;
            }
        }
        let mut combo = vec![rat(0); p.num_vars];
        let mut rhs = rat(0);
        for (y, row) in self.multipliers.iter().zip(&p.rows) {
            if y.is_zero() {
                continue;
            }
            for (k, c) in &row.coeffs {
                combo[*k] += y * c;
            }
            rhs += y * &row.rhs;
        }
        combo.iter().all(Rat::is_zero) && rhs.is_positive()
    }
}

/// Outcome of a feasibility solve.
#[derive(Clone, Debug)]
pub enum LpOutcome {
    Feasible(Vec<Rat>),
    Infeasible(FarkasCertificate),
}

/// Phase-1 simplex over the split variables x = u - v.
pub fn solve_feasibility(p: &LpProblem) -> LpOutcome {
    let n = p.num_vars;
    let m = p.rows.len();
    if m == 0 {
        return LpOutcome::Feasible(vec![rat(0); n]);
    }
    // Columns: u (n), v (n), surplus (one per Ge row), artificial (m).
    let num_surplus = p.rows.iter().filter(|r| r.rel == Rel::Ge).count();
    let cols = 2 * n + num_surplus + m;
    let mut tab: Vec<Vec<Rat>> = vec![vec![rat(0); cols + 1]; m];
    // Track the sign flip applied to make the RHS nonnegative.
    let mut flipped = vec![false; m];

    let mut surplus_idx = 0usize;
    for (r, row) in p.rows.iter().enumerate() {
        let flip = row.rhs.is_negative();
        flipped[r] = flip;
        let s = if flip { rat(-1) } else { rat(1) };
        for (k, c) in &row.coeffs {
            let val = &s * c;
            tab[r][*k] = &tab[r][*k] + &val;
            tab[r][n + *k] = &tab[r][n + *k] - &val;
        }
        if row.rel == Rel::Ge {
            let sc = if flip { rat(1) } else { rat(-1) };
            tab[r][2 * n + surplus_idx] = sc;
            surplus_idx += 1;
        }
        tab[r][2 * n + num_surplus + r] = rat(1);
        tab[r][cols] = &s * &row.rhs;
    }

    let mut basis: Vec<usize> = (0..m).map(|r| 2 * n + num_surplus + r).collect();

    // Phase-1 objective: minimize the sum of artificials. Reduced-cost row.
    let mut obj = vec![rat(0); cols + 1];
    for r in 0..m {
        for c in 0..=cols {
            obj[c] = &obj[c] - &tab[r][c];
        }
    }
    for a in 0..m {
        obj[2 * n + num_surplus + a] = rat(0);
    }

    loop {
        // Bland: entering column is the lowest index with negative reduced cost.
        let entering = (0..cols).find(|&c| obj[c].is_negative());
        let Some(e) = entering else { break };
        // Ratio test with Bland tie-break on basis index.
        let mut best: Option<(Rat, usize)> = None;
        for r in 0..m {
            if tab[r][e].is_positive() {
                let ratio = &tab[r][cols] / &tab[r][e];
                match &best {
                    None => best = Some((ratio, r)),
                    Some((br, brow)) => {
                        if ratio < *br || (ratio == *br && basis[r] < basis[*brow]) {
                            best = Some((ratio, r));
                        }
                    }
                }
            }
        }
        let Some((_, pr)) = best else {
            // Unbounded phase-1 objective cannot happen (bounded below by 0).
            unreachable!("phase-1 simplex unbounded");
        };
        // Pivot at (pr, e).
        let piv = tab[pr][e].clone();
        for c in 0..=cols {
            tab[pr][c] = &tab[pr][c] / &piv;
        }
        for r in 0..m {
            if r != pr && !tab[r][e].is_zero() {
                let f = tab[r][e].clone();
                for c in 0..=cols {
                    let delta = &f * &tab[pr][c];
                    tab[r][c] = &tab[r][c] - &delta;
                }
            }
        }
        if !obj[e].is_zero() {
            let f = obj[e].clone();
            for c in 0..=cols {
                let delta = &f * &tab[pr][c];
                obj[c] = &obj[c] - &delta;
            }
        }
        basis[pr] = e;
    }

    // Optimal phase-1 value is -obj[cols] (objective row stores the negation).
    let opt = -obj[cols].clone();
    if opt.is_zero() {
        // Feasible: read off u - v.
        let mut x = vec![rat(0); n];
        for r in 0..m {
            let b = basis[r];
            if b < n {
                x[b] = &x[b] + &tab[r][cols];
            } else if b < 2 * n {
                x[b - n] = &x[b - n] - &tab[r][cols];
            }
        }
        debug_assert!(p.satisfied_by(&x));
        LpOutcome::Feasible(x)
    } else {
        // Dual values from artificial reduced costs: y_r = 1 - cbar(art_r),
        // then undo the row flips.
        let mut y = Vec::with_capacity(m);
        for r in 0..m {
            let cbar = &obj[2 * n + num_surplus + r];
            let mut yr = rat(1) - cbar;
            if flipped[r] {
                yr = -yr;
            }
            y.push(yr);
        }
        let cert = FarkasCertificate { multipliers: y };
        debug_assert!(cert.verify(p));
        LpOutcome::Infeasible(cert)
    }
}

/// Scale a rational solution to integers: multiply by the lcm of denominators.
pub fn clear_denominators(x: &[Rat]) -> Vec<num_bigint::BigInt> {
    use num_bigint::BigInt;
    use num_integer::Integer;
    let mut l = BigInt::one();
    for r in x {
        l = l.lcm(r.denom());
    }
    x.iter()
        .map(|r| r.numer() * (&l / r.denom()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::ratio;

    #[test]
    fn feasible_simple() {
        // x0 - x1 >= 1, x0 + x1 = 3.
        let mut p = LpProblem::new(2);
        p.push(vec![(0, rat(1)), (1, rat(-1))], Rel::Ge, rat(1));
        p.push(vec![(0, rat(1)), (1, rat(1))], Rel::Eq, rat(3));
        match solve_feasibility(&p) {
            LpOutcome::Feasible(x) => assert!(p.satisfied_by(&x)),
            LpOutcome::Infeasible(_) => panic!("should be feasible"),
        }
    }

    #[test]
    fn infeasible_with_certificate() {
        // x >= 1, -x >= 0 is infeasible.
        let mut p = LpProblem::new(1);
        p.push(vec![(0, rat(1))], Rel::Ge, rat(1));
        p.push(vec![(0, rat(-1))], Rel::Ge, rat(0));
        match solve_feasibility(&p) {
            LpOutcome::Feasible(_) => panic!("should be infeasible"),
            LpOutcome::Infeasible(cert) => assert!(cert.verify(&p)),
        }
    }

    #[test]
    fn infeasible_equalities() {
        // x + y = 1, x + y = 2.
        let mut p = LpProblem::new(2);
        p.push(vec![(0, rat(1)), (1, rat(1))], Rel::Eq, rat(1));
        p.push(vec![(0, rat(1)), (1, rat(1))], Rel::Eq, rat(2));
        match solve_feasibility(&p) {
            LpOutcome::Feasible(_) => panic!("should be infeasible"),
            LpOutcome::Infeasible(cert) => assert!(cert.verify(&p)),
        }
    }

    #[test]
    fn rational_data() {
        let mut p = LpProblem::new(2);
        p.push(vec![(0, ratio(1, 3)), (1, ratio(1, 7))], Rel::Eq, ratio(2, 21));
        p.push(vec![(0, rat(1))], Rel::Ge, ratio(-5, 2));
        match solve_feasibility(&p) {
            LpOutcome::Feasible(x) => assert!(p.satisfied_by(&x)),
            LpOutcome::Infeasible(_) => panic!("should be feasible"),
        }
    }

    #[test]
    fn clears_denominators() {
        let x = vec![ratio(1, 2), ratio(2, 3), rat(1)];
        let ints = clear_denominators(&x);
        assert_eq!(ints[0].to_string(), "3");
        assert_eq!(ints[1].to_string(), "4");
        assert_eq!(ints[2].to_string(), "6");
    }
}
