//! Dense two-phase simplex over any [`Scalar`].
//!
//! Instances in this crate are tiny (at most a few hundred variables), so the
//! solver keeps a full tableau and always uses Bland's rule. In exact mode the
//! pivots are rational and the optimum is exact; in float mode every
//! comparison goes through [`SolverOptions`] tolerances. Optimal points are
//! re-substituted into the original constraints before being returned.

use std::cmp::Ordering;

use crate::error::{GptError, Result};
use crate::linalg::{dot, Matrix};
use crate::scalar::{max_of, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct Constraint<S> {
    pub coeffs: Vec<S>,
    pub relation: Relation,
    pub rhs: S,
}

#[derive(Debug, Clone)]
pub struct Bound<S> {
    pub lower: Option<S>,
    pub upper: Option<S>,
}

impl<S> Bound<S> {
    pub fn free() -> Self {
        Self { lower: None, upper: None }
    }
}

#[derive(Debug, Clone)]
pub struct LinearProgram<S> {
    pub num_vars: usize,
    pub objective: Vec<S>,
    pub sense: Sense,
    pub constraints: Vec<Constraint<S>>,
    pub bounds: Vec<Bound<S>>,
}

impl<S: Scalar> LinearProgram<S> {
    /// Program with a zero objective and all variables free.
    pub fn new(num_vars: usize, sense: Sense) -> Self {
        Self {
            num_vars,
            objective: vec![S::zero(); num_vars],
            sense,
            constraints: Vec::new(),
            bounds: (0..num_vars).map(|_| Bound::free()).collect(),
        }
    }

    pub fn set_objective(&mut self, objective: Vec<S>) -> &mut Self {
        self.objective = objective;
        self
    }

    pub fn add_constraint(&mut self, coeffs: Vec<S>, relation: Relation, rhs: S) -> &mut Self {
        self.constraints.push(Constraint { coeffs, relation, rhs });
        self
    }

    /// Adds a constraint given as `(variable, coefficient)` pairs.
    pub fn add_sparse(&mut self, terms: &[(usize, S)], relation: Relation, rhs: S) -> &mut Self {
        let mut coeffs = vec![S::zero(); self.num_vars];
        for (j, c) in terms {
            coeffs[*j] = coeffs[*j].clone() + c.clone();
        }
        self.add_constraint(coeffs, relation, rhs)
    }

    pub fn set_bounds(&mut self, var: usize, lower: Option<S>, upper: Option<S>) -> &mut Self {
        self.bounds[var] = Bound { lower, upper };
        self
    }

    pub fn nonneg(&mut self, var: usize) -> &mut Self {
        self.set_bounds(var, Some(S::zero()), None)
    }

    fn validate(&self) -> Result<()> {
        if self.objective.len() != self.num_vars {
            return Err(GptError::MalformedLp(format!(
                "objective has {} coefficients for {} variables",
                self.objective.len(),
                self.num_vars
            )));
        }
        if self.bounds.len() != self.num_vars {
            return Err(GptError::MalformedLp("bounds length differs from variable count".into()));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != self.num_vars {
                return Err(GptError::MalformedLp(format!(
                    "constraint {i} has {} coefficients for {} variables",
                    c.coeffs.len(),
                    self.num_vars
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpResult<S> {
    pub status: LpStatus,
    pub value: Option<S>,
    pub point: Option<Vec<S>>,
}

impl<S: Scalar> LpResult<S> {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Debug, Clone)]
pub struct Feasibility<S> {
    pub feasible: bool,
    pub witness: Option<Vec<S>>,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Entries below this magnitude are never pivoted on (float mode).
    pub pivot_tol: f64,
    /// Reduced-cost threshold for optimality (float mode).
    pub opt_tol: f64,
    /// Residual allowed when certifying a point (float mode, scaled by row size).
    pub feas_tol: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { pivot_tol: 1e-9, opt_tol: 1e-11, feas_tol: 1e-9, max_iterations: 200_000 }
    }
}

pub fn lp_solve<S: Scalar>(p: &LinearProgram<S>) -> Result<LpResult<S>> {
    lp_solve_with(p, &SolverOptions::default())
}

pub fn lp_feasible<S: Scalar>(p: &LinearProgram<S>) -> Result<Feasibility<S>> {
    let mut q = p.clone();
    q.objective = vec![S::zero(); p.num_vars];
    q.sense = Sense::Minimize;
    let r = lp_solve(&q)?;
    Ok(match r.status {
        LpStatus::Optimal => Feasibility { feasible: true, witness: r.point },
        _ => Feasibility { feasible: false, witness: None },
    })
}

/// How an original variable is expressed through the nonnegative columns.
struct VarMap<S> {
    offset: S,
    terms: Vec<(usize, S)>,
}

struct StandardForm<S> {
    maps: Vec<VarMap<S>>,
    /// Rows over the structural nonnegative columns, `rhs >= 0` after normalization.
    rows: Vec<(Vec<S>, Relation, S)>,
    ncols: usize,
}

fn to_standard_form<S: Scalar>(p: &LinearProgram<S>) -> StandardForm<S> {
    let mut maps = Vec::with_capacity(p.num_vars);
    let mut ncols = 0;
    let mut extra_rows: Vec<(usize, S)> = Vec::new();
    for b in &p.bounds {
        match (&b.lower, &b.upper) {
            (Some(l), up) => {
                let k = ncols;
                ncols += 1;
                if let Some(u) = up {
                    extra_rows.push((k, u.clone() - l.clone()));
                }
                maps.push(VarMap { offset: l.clone(), terms: vec![(k, S::one())] });
            }
            (None, Some(u)) => {
                let k = ncols;
                ncols += 1;
                maps.push(VarMap { offset: u.clone(), terms: vec![(k, -S::one())] });
            }
            (None, None) => {
                let k = ncols;
                ncols += 2;
                maps.push(VarMap { offset: S::zero(), terms: vec![(k, S::one()), (k + 1, -S::one())] });
            }
        }
    }
    let mut rows = Vec::with_capacity(p.constraints.len() + extra_rows.len());
    for c in &p.constraints {
        let mut coeffs = vec![S::zero(); ncols];
        let mut rhs = c.rhs.clone();
        for (j, a) in c.coeffs.iter().enumerate() {
            if a.is_zero_tol(0.0) {
                continue;
            }
            rhs = rhs - a.clone() * maps[j].offset.clone();
            for (k, t) in &maps[j].terms {
                coeffs[*k] = coeffs[*k].clone() + a.clone() * t.clone();
            }
        }
        rows.push((coeffs, c.relation, rhs));
    }
    for (k, ub) in extra_rows {
        let mut coeffs = vec![S::zero(); ncols];
        coeffs[k] = S::one();
        rows.push((coeffs, Relation::Le, ub));
    }
    for row in rows.iter_mut() {
        let negative = row.2.sign_tol(0.0) == Ordering::Less;
        // `a.y >= 0` is the same as `-a.y <= 0`, which needs no artificial.
        let zero_ge = row.1 == Relation::Ge && row.2.sign_tol(0.0) == Ordering::Equal;
        if negative || zero_ge {
            row.0 = row.0.iter().map(|x| -x.clone()).collect();
            row.2 = -row.2.clone();
            row.1 = match row.1 {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
    }
    StandardForm { maps, rows, ncols }
}

struct Tableau<S> {
    /// `m` rows of width `width + 1`, last entry is the rhs.
    t: Vec<Vec<S>>,
    obj: Vec<S>,
    basis: Vec<usize>,
    width: usize,
    allowed: Vec<bool>,
    opts: SolverOptions,
    /// Rows as first built, used to refactorize in float mode.
    orig: Vec<Vec<S>>,
    /// Cost vector of the current phase.
    cost: Vec<S>,
    since_refresh: usize,
}

/// Float-mode pivots between two refactorizations of the tableau.
const REFRESH_INTERVAL: usize = 50;

enum Step {
    Optimal,
    Unbounded,
}

impl<S: Scalar> Tableau<S> {
    fn pivot(&mut self, r: usize, c: usize) {
        let inv = S::one() / self.t[r][c].clone();
        for x in self.t[r].iter_mut() {
            *x = x.clone() * inv.clone();
        }
        let prow = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c].clone();
            if f.is_zero_tol(0.0) {
                continue;
            }
            for (x, p) in row.iter_mut().zip(&prow) {
                if !p.is_zero_tol(0.0) {
                    *x = x.clone() - f.clone() * p.clone();
                }
            }
            row[c] = S::zero();
        }
        let f = self.obj[c].clone();
        if !f.is_zero_tol(0.0) {
            for (x, p) in self.obj.iter_mut().zip(&prow) {
                if !p.is_zero_tol(0.0) {
                    *x = x.clone() - f.clone() * p.clone();
                }
            }
            self.obj[c] = S::zero();
        }
        self.basis[r] = c;
    }

    /// Objective row `c - c_B B^{-1} A` from the current tableau.
    fn reprice(&mut self) {
        let mut obj = vec![S::zero(); self.width + 1];
        obj[..self.width].clone_from_slice(&self.cost);
        for (i, row) in self.t.iter().enumerate() {
            let cb = self.cost[self.basis[i]].clone();
            if cb.is_zero_tol(0.0) {
                continue;
            }
            for (o, x) in obj.iter_mut().zip(row) {
                *o = o.clone() - cb.clone() * x.clone();
            }
        }
        self.obj = obj;
    }

    /// Recomputes `B^{-1} [A | b]` from the original rows to shed accumulated
    /// round-off. Exact tableaux never drift and are left alone.
    fn refresh(&mut self) {
        self.since_refresh = 0;
        if S::is_exact() || self.t.is_empty() {
            return;
        }
        let cols: Vec<Vec<S>> =
            self.basis.iter().map(|&j| self.orig.iter().map(|row| row[j].clone()).collect()).collect();
        let Some(binv) = Matrix::from_columns(&cols).inverse(1e-14) else { return };
        let fresh = binv.mul(&Matrix::from_rows(&self.orig));
        self.t = fresh.to_rows();
        for row in self.t.iter_mut() {
            let v = &mut row[self.width];
            if v.sign_tol(0.0) == Ordering::Less && v.is_zero_tol(self.opts.feas_tol) {
                *v = S::zero();
            }
        }
        self.reprice();
    }

    /// Ratio test on column `c`, ties broken by the lowest basic index.
    fn leaving_row(&self, c: usize) -> Option<usize> {
        let rhs = self.width;
        let mut best: Option<(usize, S)> = None;
        for (i, row) in self.t.iter().enumerate() {
            if row[c].sign_tol(self.opts.pivot_tol) != Ordering::Greater {
                continue;
            }
            // Round-off can leave a basic value slightly negative; treat it as zero.
            let ratio = max_of(row[rhs].clone(), S::zero()) / row[c].clone();
            best = match best {
                None => Some((i, ratio)),
                Some((bi, br)) => {
                    let ord = (ratio.clone() - br.clone()).sign_tol(self.opts.pivot_tol);
                    if ord == Ordering::Less || (ord == Ordering::Equal && self.basis[i] < self.basis[bi]) {
                        Some((i, ratio))
                    } else {
                        Some((bi, br))
                    }
                }
            };
        }
        best.map(|(i, _)| i)
    }

    /// Primal simplex with Bland's entering rule. When `bounded` is set the
    /// objective is known to be bounded below, so a column without an
    /// admissible pivot is skipped instead of reported as unbounded.
    fn run(&mut self, bounded: bool) -> Result<Step> {
        for _ in 0..self.opts.max_iterations {
            let mut pivoted = false;
            for c in 0..self.width {
                if !self.allowed[c] || self.obj[c].sign_tol(self.opts.opt_tol) != Ordering::Less {
                    continue;
                }
                match self.leaving_row(c) {
                    Some(r) => {
                        self.pivot(r, c);
                        self.since_refresh += 1;
                        if self.since_refresh >= REFRESH_INTERVAL {
                            self.refresh();
                        }
                        pivoted = true;
                        break;
                    }
                    None if bounded => continue,
                    None => return Ok(Step::Unbounded),
                }
            }
            if !pivoted {
                return Ok(Step::Optimal);
            }
        }
        Err(GptError::LpNumerics("iteration limit reached".into()))
    }
}

pub fn lp_solve_with<S: Scalar>(p: &LinearProgram<S>, opts: &SolverOptions) -> Result<LpResult<S>> {
    p.validate()?;
    let sf = to_standard_form(p);
    let m = sf.rows.len();
    let n_slack = sf.rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let n_art = sf.rows.iter().filter(|r| r.1 != Relation::Le).count();
    let width = sf.ncols + n_slack + n_art;
    let art_start = sf.ncols + n_slack;

    let mut t = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut slack = sf.ncols;
    let mut art = art_start;
    for (coeffs, rel, rhs) in &sf.rows {
        let mut row = vec![S::zero(); width + 1];
        row[..sf.ncols].clone_from_slice(coeffs);
        row[width] = rhs.clone();
        match rel {
            Relation::Le => {
                row[slack] = S::one();
                basis.push(slack);
                slack += 1;
            }
            Relation::Ge => {
                row[slack] = -S::one();
                slack += 1;
                row[art] = S::one();
                basis.push(art);
                art += 1;
            }
            Relation::Eq => {
                row[art] = S::one();
                basis.push(art);
                art += 1;
            }
        }
        t.push(row);
    }

    // Phase 1: minimize the sum of artificials.
    let mut obj = vec![S::zero(); width + 1];
    for (i, row) in t.iter().enumerate() {
        if basis[i] >= art_start {
            for j in 0..=width {
                if j < art_start || j == width {
                    obj[j] = obj[j].clone() - row[j].clone();
                }
            }
        }
    }
    let mut phase1_cost = vec![S::zero(); width];
    for c in phase1_cost.iter_mut().skip(art_start) {
        *c = S::one();
    }
    let orig = t.clone();
    let mut tab = Tableau {
        t,
        obj,
        basis,
        width,
        allowed: vec![true; width],
        opts: *opts,
        orig,
        cost: phase1_cost,
        since_refresh: 0,
    };
    if n_art > 0 {
        tab.run(true)?;
        tab.refresh();
        let infeas = -tab.obj[width].clone();
        let scale = 1.0 + sf.rows.iter().map(|r| r.2.to_f64().abs()).fold(0.0, f64::max);
        if infeas.sign_tol(opts.feas_tol * scale) == Ordering::Greater {
            return Ok(LpResult { status: LpStatus::Infeasible, value: None, point: None });
        }
        // Drive artificials out of the basis. Rows of a redundant system keep
        // their artificial basic at level zero; it can never re-enter.
        for i in 0..tab.t.len() {
            if tab.basis[i] >= art_start {
                let col = if S::is_exact() {
                    (0..art_start).find(|&j| !tab.t[i][j].is_zero_tol(0.0))
                } else {
                    (0..art_start)
                        .filter(|&j| !tab.t[i][j].is_zero_tol(opts.pivot_tol))
                        .max_by(|&a, &b| tab.t[i][a].to_f64().abs().total_cmp(&tab.t[i][b].to_f64().abs()))
                };
                if let Some(j) = col {
                    tab.pivot(i, j);
                }
            }
        }
        for j in art_start..width {
            tab.allowed[j] = false;
        }
    }

    // Phase 2 objective over the structural columns, always minimized.
    let sign = match p.sense {
        Sense::Minimize => S::one(),
        Sense::Maximize => -S::one(),
    };
    let mut cost = vec![S::zero(); width];
    for (j, c) in p.objective.iter().enumerate() {
        for (k, t) in &sf.maps[j].terms {
            cost[*k] = cost[*k].clone() + sign.clone() * c.clone() * t.clone();
        }
    }
    tab.cost = cost;
    tab.refresh();
    tab.reprice();
    if let Step::Unbounded = tab.run(false)? {
        return Ok(LpResult { status: LpStatus::Unbounded, value: None, point: None });
    }
    tab.refresh();

    let mut y = vec![S::zero(); width];
    for (i, row) in tab.t.iter().enumerate() {
        y[tab.basis[i]] = row[width].clone();
    }
    let x: Vec<S> = sf
        .maps
        .iter()
        .map(|vm| vm.terms.iter().fold(vm.offset.clone(), |acc, (k, t)| acc + t.clone() * y[*k].clone()))
        .collect();
    certify(p, &x, opts)?;
    let value = dot(&p.objective, &x);
    Ok(LpResult { status: LpStatus::Optimal, value: Some(value), point: Some(x) })
}

/// Re-substitutes `x` into every constraint and bound.
fn certify<S: Scalar>(p: &LinearProgram<S>, x: &[S], opts: &SolverOptions) -> Result<()> {
    for (i, c) in p.constraints.iter().enumerate() {
        let lhs = dot(&c.coeffs, x);
        let scale = 1.0
            + c.rhs.to_f64().abs()
            + c.coeffs.iter().zip(x).map(|(a, v)| (a.to_f64() * v.to_f64()).abs()).sum::<f64>();
        let residual = lhs - c.rhs.clone();
        let diff = residual.sign_tol(opts.feas_tol * scale);
        let ok = match c.relation {
            Relation::Le => diff != Ordering::Greater,
            Relation::Ge => diff != Ordering::Less,
            Relation::Eq => diff == Ordering::Equal,
        };
        if !ok {
            return Err(GptError::LpNumerics(format!(
                "constraint {i} violated at the reported optimum (residual {:e})",
                residual.to_f64()
            )));
        }
    }
    for (j, b) in p.bounds.iter().enumerate() {
        let tol = opts.feas_tol * (1.0 + x[j].to_f64().abs());
        if let Some(l) = &b.lower {
            if (x[j].clone() - l.clone()).sign_tol(tol) == Ordering::Less {
                return Err(GptError::LpNumerics(format!("lower bound of variable {j} violated")));
            }
        }
        if let Some(u) = &b.upper {
            if (x[j].clone() - u.clone()).sign_tol(tol) == Ordering::Greater {
                return Err(GptError::LpNumerics(format!("upper bound of variable {j} violated")));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn q(n: i64) -> Rational {
        Rational::from_i64(n)
    }

    #[test]
    fn max_single_variable() {
        let mut p = LinearProgram::<f64>::new(1, Sense::Maximize);
        p.set_objective(vec![1.0]);
        p.add_constraint(vec![1.0], Relation::Le, 1.0);
        p.add_constraint(vec![1.0], Relation::Ge, 0.0);
        let r = lp_solve(&p).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.value.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn contradictory_equalities_are_infeasible() {
        let mut p = LinearProgram::<Rational>::new(1, Sense::Minimize);
        p.add_constraint(vec![q(1)], Relation::Eq, q(1));
        p.add_constraint(vec![q(1)], Relation::Eq, q(2));
        assert_eq!(lp_solve(&p).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn simplex_corner() {
        let mut p = LinearProgram::<Rational>::new(2, Sense::Maximize);
        p.set_objective(vec![q(1), q(1)]);
        p.add_constraint(vec![q(1), q(1)], Relation::Le, q(1));
        p.nonneg(0).nonneg(1);
        let r = lp_solve(&p).unwrap();
        assert_eq!(r.value, Some(q(1)));
    }

    #[test]
    fn unbounded_detected() {
        let mut p = LinearProgram::<f64>::new(1, Sense::Maximize);
        p.set_objective(vec![1.0]);
        p.nonneg(0);
        assert_eq!(lp_solve(&p).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn feasibility_examples() {
        let mut p = LinearProgram::<f64>::new(1, Sense::Minimize);
        p.add_constraint(vec![1.0], Relation::Ge, 0.0);
        p.add_constraint(vec![1.0], Relation::Le, -1.0);
        assert!(!lp_feasible(&p).unwrap().feasible);

        let mut p = LinearProgram::<Rational>::new(1, Sense::Minimize);
        p.add_constraint(vec![q(1)], Relation::Eq, Rational::from_ratio(1, 2));
        p.set_bounds(0, Some(q(0)), Some(q(1)));
        let f = lp_feasible(&p).unwrap();
        assert!(f.feasible);
        assert_eq!(f.witness.unwrap(), vec![Rational::from_ratio(1, 2)]);
    }

    #[test]
    fn malformed_dimensions_rejected() {
        let mut p = LinearProgram::<f64>::new(2, Sense::Minimize);
        p.add_constraint(vec![1.0], Relation::Le, 1.0);
        assert!(matches!(lp_solve(&p), Err(GptError::MalformedLp(_))));
    }

    #[test]
    fn bounded_variables_and_redundant_rows() {
        // x in [-2, 3], y <= 4 (no lower), x + y = 1 twice (redundant); max x - y.
        let mut p = LinearProgram::<Rational>::new(2, Sense::Maximize);
        p.set_objective(vec![q(1), q(-1)]);
        p.set_bounds(0, Some(q(-2)), Some(q(3)));
        p.set_bounds(1, None, Some(q(4)));
        p.add_constraint(vec![q(1), q(1)], Relation::Eq, q(1));
        p.add_constraint(vec![q(2), q(2)], Relation::Eq, q(2));
        let r = lp_solve(&p).unwrap();
        assert_eq!(r.point, Some(vec![q(3), q(-2)]));
        assert_eq!(r.value, Some(q(5)));
    }
}
