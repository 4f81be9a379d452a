//! Joint measurability and incompatibility quantifiers as linear programs.
//!
//! A joint measurement `{m_ab}` is parametrized by free covectors in `R^d`.
//! Validity is positivity on every vertex, which for a polytope is exact
//! membership in the dual cone.

use crate::error::{GptError, Result};
use crate::linalg::{add, scale, sub, sum_vectors, vec_approx_eq, zeros, Vector};
use crate::lp::{lp_feasible, lp_solve, LinearProgram, LpStatus, Relation, Sense};
use crate::model::{polygon_radius, Effect, Measurement, Theory};
use crate::scalar::{max_of, min_of, Scalar};

#[derive(Debug, Clone)]
pub struct JointMeasurement<S: Scalar> {
    pub a_labels: Vec<String>,
    pub b_labels: Vec<String>,
    /// `effects[a][b] = m_ab`.
    pub effects: Vec<Vec<Vector<S>>>,
}

impl<S: Scalar> JointMeasurement<S> {
    pub fn new(a_labels: Vec<String>, b_labels: Vec<String>, effects: Vec<Vec<Vector<S>>>) -> Result<Self> {
        if effects.len() != a_labels.len() || effects.iter().any(|row| row.len() != b_labels.len()) {
            return Err(GptError::InvalidMeasurement("joint effect grid does not match the outcome labels".into()));
        }
        Ok(Self { a_labels, b_labels, effects })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.a_labels.len(), self.b_labels.len())
    }

    /// `m_ab = delta_ab f_a`, a joint of `f` with itself.
    pub fn diagonal(f: &Measurement<S>) -> Self {
        let k = f.len();
        let d = f.effects[0].covector.len();
        let effects = (0..k)
            .map(|a| (0..k).map(|b| if a == b { f.effects[a].covector.clone() } else { zeros(d) }).collect())
            .collect();
        Self { a_labels: f.outcomes.clone(), b_labels: f.outcomes.clone(), effects }
    }

    /// `m_ab = u / (|A| |B|)`.
    pub fn uniform(u: &[S], a_labels: Vec<String>, b_labels: Vec<String>) -> Self {
        let k = S::from_i64((a_labels.len() * b_labels.len()) as i64);
        let e = scale(u, &(S::one() / k));
        let effects = vec![vec![e; b_labels.len()]; a_labels.len()];
        Self { a_labels, b_labels, effects }
    }

    /// `m_ab = p_b f_a`: measure `f`, then draw `b` from `p`.
    pub fn measure_then_sample(f: &Measurement<S>, p: &[S], b_labels: Vec<String>) -> Self {
        let effects = f.effects.iter().map(|e| p.iter().map(|pb| scale(&e.covector, pb)).collect()).collect();
        Self { a_labels: f.outcomes.clone(), b_labels, effects }
    }

    /// `m_ab = q_a g_b`: measure `g`, then draw `a` from `q`.
    pub fn sample_then_measure(q: &[S], g: &Measurement<S>, a_labels: Vec<String>) -> Self {
        let effects = q.iter().map(|qa| g.effects.iter().map(|e| scale(&e.covector, qa)).collect()).collect();
        Self { a_labels, b_labels: g.outcomes.clone(), effects }
    }

    /// `sum_i w_i J_i` over joints of the same shape.
    pub fn mixture(parts: &[(S, &JointMeasurement<S>)]) -> Result<Self> {
        let Some((_, first)) = parts.first() else { return Err(GptError::Empty("joint mixture")) };
        let (na, nb) = first.shape();
        let d = first.effects[0][0].len();
        let mut effects = vec![vec![zeros::<S>(d); nb]; na];
        for (w, j) in parts {
            if j.shape() != (na, nb) {
                return Err(GptError::InvalidMeasurement("mixture of joints with different shapes".into()));
            }
            for a in 0..na {
                for b in 0..nb {
                    effects[a][b] = add(&effects[a][b], &scale(&j.effects[a][b], w));
                }
            }
        }
        Ok(Self { a_labels: first.a_labels.clone(), b_labels: first.b_labels.clone(), effects })
    }

    pub fn all_effects(&self) -> impl Iterator<Item = (usize, usize, &Vector<S>)> {
        self.effects.iter().enumerate().flat_map(|(a, row)| row.iter().enumerate().map(move |(b, e)| (a, b, e)))
    }

    /// Positivity on every vertex and `sum m_ab = u`.
    pub fn validate(&self, t: &Theory<S>) -> Result<()> {
        for (a, b, e) in self.all_effects() {
            if e.len() != t.dim() {
                return Err(GptError::DimensionMismatch { expected: t.dim(), found: e.len() });
            }
            if t.vertices().iter().any(|v| t.pair(e, v).sign_tol(t.tol) == std::cmp::Ordering::Less) {
                return Err(GptError::InvalidMeasurement(format!("joint effect ({a},{b}) is negative on a vertex")));
            }
        }
        let total = sum_vectors(t.dim(), self.all_effects().map(|(_, _, e)| e));
        if !vec_approx_eq(&total, t.unit_effect(), t.tol * 10.0) {
            return Err(GptError::InvalidMeasurement("joint effects do not sum to the unit effect".into()));
        }
        Ok(())
    }

    pub fn to_f64(&self) -> JointMeasurement<f64> {
        JointMeasurement {
            a_labels: self.a_labels.clone(),
            b_labels: self.b_labels.clone(),
            effects: self
                .effects
                .iter()
                .map(|row| row.iter().map(|e| e.iter().map(|x| x.to_f64()).collect()).collect())
                .collect(),
        }
    }
}

/// The two marginal measurements `sum_b m_ab` and `sum_a m_ab`.
pub fn marginals<S: Scalar>(j: &JointMeasurement<S>) -> (Measurement<S>, Measurement<S>) {
    let (na, nb) = j.shape();
    let d = j.effects[0][0].len();
    let fa: Vec<Effect<S>> = (0..na).map(|a| Effect::new(sum_vectors(d, j.effects[a].iter()))).collect();
    let gb: Vec<Effect<S>> = (0..nb).map(|b| Effect::new(sum_vectors(d, (0..na).map(|a| &j.effects[a][b])))).collect();
    (
        Measurement { name: "marginal-A".into(), outcomes: j.a_labels.clone(), effects: fa, metric: None },
        Measurement { name: "marginal-B".into(), outcomes: j.b_labels.clone(), effects: gb, metric: None },
    )
}

/// Variable layout of the joint-measurement LPs: `m_ab` occupies `d`
/// consecutive free variables, extra variables follow.
struct JointLp<'a, S: Scalar> {
    t: &'a Theory<S>,
    na: usize,
    nb: usize,
    d: usize,
    lp: LinearProgram<S>,
}

impl<'a, S: Scalar> JointLp<'a, S> {
    fn new(t: &'a Theory<S>, na: usize, nb: usize, extra: usize, sense: Sense) -> Self {
        let d = t.dim();
        let mut lp = LinearProgram::new(na * nb * d + extra, sense);
        // Positivity of every m_ab on every vertex.
        let lowered: Vec<Vector<S>> = t.vertices().iter().map(|v| t.inner().lower(v)).collect();
        for a in 0..na {
            for b in 0..nb {
                for gv in &lowered {
                    let base = (a * nb + b) * d;
                    let terms: Vec<(usize, S)> = (0..d).map(|k| (base + k, gv[k].clone())).collect();
                    lp.add_sparse(&terms, Relation::Ge, S::zero());
                }
            }
        }
        Self { t, na, nb, d, lp }
    }

    fn extra(&self, i: usize) -> usize {
        self.na * self.nb * self.d + i
    }

    fn var(&self, a: usize, b: usize, k: usize) -> usize {
        (a * self.nb + b) * self.d + k
    }

    /// Coefficients of `sum_b m_ab` (`row = true`) or `sum_a m_ab`, coordinate `k`.
    fn marginal_terms(&self, fixed: usize, row: bool, k: usize) -> Vec<(usize, S)> {
        if row {
            (0..self.nb).map(|b| (self.var(fixed, b, k), S::one())).collect()
        } else {
            (0..self.na).map(|a| (self.var(a, fixed, k), S::one())).collect()
        }
    }

    /// Coefficients of `(sum m)(w)` for the marginal selected as above.
    fn marginal_on_state(&self, fixed: usize, row: bool, w: &[S]) -> Vec<(usize, S)> {
        let gw = self.t.inner().lower(w);
        let mut terms = Vec::new();
        for k in 0..self.d {
            for (v, _) in self.marginal_terms(fixed, row, k) {
                terms.push((v, gw[k].clone()));
            }
        }
        terms
    }

    fn joint_from(&self, x: &[S], a_labels: Vec<String>, b_labels: Vec<String>) -> JointMeasurement<S> {
        let effects = (0..self.na)
            .map(|a| (0..self.nb).map(|b| (0..self.d).map(|k| x[self.var(a, b, k)].clone()).collect()).collect())
            .collect();
        JointMeasurement { a_labels, b_labels, effects }
    }
}

#[derive(Debug, Clone)]
pub struct Compatibility<S: Scalar> {
    pub compatible: bool,
    pub witness: Option<JointMeasurement<S>>,
}

/// Feasibility of a valid joint with marginals exactly `f` and `g`.
pub fn is_jointly_measurable<S: Scalar>(
    t: &Theory<S>,
    f: &Measurement<S>,
    g: &Measurement<S>,
) -> Result<Compatibility<S>> {
    let mut j = JointLp::new(t, f.len(), g.len(), 0, Sense::Minimize);
    for (a, fa) in f.effects.iter().enumerate() {
        for k in 0..j.d {
            let terms = j.marginal_terms(a, true, k);
            j.lp.add_sparse(&terms, Relation::Eq, fa.covector[k].clone());
        }
    }
    for (b, gb) in g.effects.iter().enumerate() {
        for k in 0..j.d {
            let terms = j.marginal_terms(b, false, k);
            j.lp.add_sparse(&terms, Relation::Eq, gb.covector[k].clone());
        }
    }
    let r = lp_feasible(&j.lp)?;
    Ok(Compatibility {
        compatible: r.feasible,
        witness: r.witness.map(|x| j.joint_from(&x, f.outcomes.clone(), g.outcomes.clone())),
    })
}

#[derive(Debug, Clone)]
pub struct MurOptimum<S: Scalar> {
    pub value: S,
    pub t1: S,
    pub t2: S,
    pub joint: JointMeasurement<S>,
}

/// Minimum over joints of `D_inf(M^F, F) + D_inf(M^G, G)`, one LP.
pub fn min_mur_linf<S: Scalar>(t: &Theory<S>, f: &Measurement<S>, g: &Measurement<S>) -> Result<MurOptimum<S>> {
    let mut j = JointLp::new(t, f.len(), g.len(), 2, Sense::Minimize);
    let (t1, t2) = (j.extra(0), j.extra(1));
    j.lp.nonneg(t1).nonneg(t2);
    let mut obj = vec![S::zero(); j.lp.num_vars];
    obj[t1] = S::one();
    obj[t2] = S::one();
    j.lp.set_objective(obj);
    for k in 0..j.d {
        let terms: Vec<(usize, S)> =
            (0..j.na).flat_map(|a| (0..j.nb).map(move |b| (a, b))).map(|(a, b)| (j.var(a, b, k), S::one())).collect();
        j.lp.add_sparse(&terms, Relation::Eq, t.unit_effect()[k].clone());
    }
    for (m, tv, row) in [(f, t1, true), (g, t2, false)] {
        for (x, e) in m.effects.iter().enumerate() {
            for w in t.vertices() {
                let target = t.pair(&e.covector, w);
                let mut terms = j.marginal_on_state(x, row, w);
                terms.push((tv, -S::one()));
                j.lp.add_sparse(&terms, Relation::Le, target.clone());
                let mut terms = j.marginal_on_state(x, row, w);
                terms.push((tv, S::one()));
                j.lp.add_sparse(&terms, Relation::Ge, target);
            }
        }
    }
    let r = lp_solve(&j.lp)?;
    if r.status != LpStatus::Optimal {
        return Err(GptError::LpNumerics(format!("measurement-error LP ended as {:?}", r.status)));
    }
    let x = r.point.expect("optimal point");
    Ok(MurOptimum {
        value: r.value.expect("optimal value"),
        t1: x[t1].clone(),
        t2: x[t2].clone(),
        joint: j.joint_from(&x, f.outcomes.clone(), g.outcomes.clone()),
    })
}

#[derive(Debug, Clone)]
pub struct FuzzOptimum<S: Scalar> {
    pub lambda: S,
    pub joint: JointMeasurement<S>,
}

/// Largest `lambda` in `[0, 1]` for which the fuzzified pair is compatible.
///
/// The marginal conditions `sum_b m_ab = lambda f_a + (1 - lambda) u / 2` are
/// affine in `(m, lambda)`, so this is a single LP.
pub fn max_fuzz_lambda<S: Scalar>(t: &Theory<S>, f: &Measurement<S>, g: &Measurement<S>) -> Result<FuzzOptimum<S>> {
    if f.len() != 2 || g.len() != 2 {
        return Err(GptError::InvalidMeasurement("the fuzzing family is defined for binary measurements".into()));
    }
    let mut j = JointLp::new(t, 2, 2, 1, Sense::Maximize);
    let lam = j.extra(0);
    j.lp.set_bounds(lam, Some(S::zero()), Some(S::one()));
    let mut obj = vec![S::zero(); j.lp.num_vars];
    obj[lam] = S::one();
    j.lp.set_objective(obj);
    let half_u = scale(t.unit_effect(), &S::from_ratio(1, 2));
    for (m, row) in [(f, true), (g, false)] {
        for (x, e) in m.effects.iter().enumerate() {
            let shift = sub(&e.covector, &half_u);
            for k in 0..j.d {
                let mut terms = j.marginal_terms(x, row, k);
                terms.push((lam, -shift[k].clone()));
                j.lp.add_sparse(&terms, Relation::Eq, half_u[k].clone());
            }
        }
    }
    let r = lp_solve(&j.lp)?;
    if r.status != LpStatus::Optimal {
        return Err(GptError::LpNumerics(format!("fuzzing LP ended as {:?}", r.status)));
    }
    let x = r.point.expect("optimal point");
    // Round-off can leave lambda a few ulps outside its bounds.
    let lambda = min_of(max_of(x[lam].clone(), S::zero()), S::one());
    Ok(FuzzOptimum { lambda, joint: j.joint_from(&x, f.outcomes.clone(), g.outcomes.clone()) })
}

/// `max_k (max_i f_i(w_k) + max_j g_j(w_k)) - 1`, an upper bound on the
/// fuzzing threshold of a binary pair.
pub fn degree_bound_rhs<S: Scalar>(t: &Theory<S>, f: &Measurement<S>, g: &Measurement<S>) -> Result<S> {
    if f.len() != 2 || g.len() != 2 {
        return Err(GptError::InvalidMeasurement("the degree bound is defined for binary measurements".into()));
    }
    let mut best: Option<S> = None;
    for w in t.vertices() {
        let mf = f.effects.iter().map(|e| t.pair(&e.covector, w)).fold(S::zero(), max_of);
        let mg = g.effects.iter().map(|e| t.pair(&e.covector, w)).fold(S::zero(), max_of);
        let v = mf + mg - S::one();
        best = Some(match best {
            None => v,
            Some(b) => max_of(b, v),
        });
    }
    Ok(best.expect("theories have vertices"))
}

/// Closed form of the bound for perpendicular pairs in the `n`-gon
/// (`n` a multiple of 4); `None` stands for the disc limit.
pub fn degree_bound_closed_form(n: Option<usize>) -> Result<f64> {
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    match n {
        None => Ok(inv_sqrt2),
        Some(n) if n == 0 || n % 4 != 0 => Err(GptError::InvalidParameter(format!("n = {n} is not a multiple of 4"))),
        Some(n) if n % 8 == 0 => Ok(inv_sqrt2),
        Some(n) => Ok(polygon_radius(n).powi(2) * inv_sqrt2),
    }
}
