//! Gram inner products and polyhedral cones given by generating rays.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{GptError, Result};
use crate::linalg::{dot, independent_subset, max_abs_f64, sub, Matrix, Vector};
use crate::lp::{lp_feasible, LinearProgram, Relation, Sense};
use crate::scalar::{Rational, Scalar, ScalarMode};

/// Symmetric positive-definite bilinear form `<x, y> = x^T G y`.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerProduct<S: Scalar> {
    gram: Matrix<S>,
}

impl<S: Scalar> InnerProduct<S> {
    /// Validates symmetry and positive definiteness (Sylvester's criterion).
    pub fn new(gram: Matrix<S>, tol: f64) -> Result<Self> {
        if !gram.is_square() {
            return Err(GptError::DimensionMismatch { expected: gram.rows(), found: gram.cols() });
        }
        if !gram.is_symmetric(tol) {
            return Err(GptError::InvalidParameter("gram matrix is not symmetric".into()));
        }
        if !gram.is_positive_definite(tol) {
            return Err(GptError::InvalidParameter("gram matrix is not positive definite".into()));
        }
        Ok(Self { gram })
    }

    pub fn identity(dim: usize) -> Self {
        Self { gram: Matrix::identity(dim) }
    }

    pub fn gram(&self) -> &Matrix<S> {
        &self.gram
    }

    pub fn dim(&self) -> usize {
        self.gram.rows()
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        self.gram.approx_eq(&Matrix::identity(self.dim()), tol)
    }

    /// `G x`, the covector paired with `x`.
    pub fn lower(&self, x: &[S]) -> Vector<S> {
        self.gram.apply(x)
    }

    pub fn inner(&self, x: &[S], y: &[S]) -> Result<S> {
        gram_inner(self, x, y)
    }

    pub fn norm_f64(&self, x: &[S]) -> f64 {
        dot(x, &self.gram.apply(x)).to_f64().max(0.0).sqrt()
    }
}

pub fn gram_inner<S: Scalar>(g: &InnerProduct<S>, x: &[S], y: &[S]) -> Result<S> {
    let d = g.dim();
    for v in [x, y] {
        if v.len() != d {
            return Err(GptError::DimensionMismatch { expected: d, found: v.len() });
        }
    }
    Ok(dot(x, &g.gram.apply(y)))
}

/// Conic hull of a finite list of nonzero rays.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeV<S> {
    generators: Vec<Vector<S>>,
}

impl<S: Scalar> ConeV<S> {
    pub fn new(generators: Vec<Vector<S>>, tol: f64) -> Result<Self> {
        let Some(first) = generators.first() else { return Err(GptError::Empty("cone generators")) };
        let d = first.len();
        for g in &generators {
            if g.len() != d {
                return Err(GptError::DimensionMismatch { expected: d, found: g.len() });
            }
            if g.iter().all(|x| x.is_zero_tol(tol)) {
                return Err(GptError::InvalidParameter("zero generator".into()));
            }
        }
        Ok(Self { generators })
    }

    pub fn generators(&self) -> &[Vector<S>] {
        &self.generators
    }

    pub fn dim(&self) -> usize {
        self.generators[0].len()
    }
}

/// Generators of `{y : <y, x>_G >= 0 for all x in c}` by double description.
///
/// The dual is the H-cone `{y : (G g_i) . y >= 0}`. Its rays are built by
/// starting from the simplicial cone of the first independent normals and
/// inserting the remaining constraints in the given order. A primal cone that
/// is not full-dimensional has a dual containing a line; that case is reported
/// as [`GptError::Lineality`].
pub fn dual_cone<S: Scalar>(c: &ConeV<S>, g: &InnerProduct<S>, tol: f64) -> Result<ConeV<S>> {
    let d = g.dim();
    if c.dim() != d {
        return Err(GptError::DimensionMismatch { expected: d, found: c.dim() });
    }
    let normals: Vec<Vector<S>> = c.generators.iter().map(|x| g.lower(x)).collect();
    let rays = extreme_rays(&normals, tol)?;
    ConeV::new(rays, tol)
}

/// Extreme rays of the pointed cone `{y : a . y >= 0 for all a in normals}`.
pub fn extreme_rays<S: Scalar>(normals: &[Vector<S>], tol: f64) -> Result<Vec<Vector<S>>> {
    let Some(first) = normals.first() else { return Err(GptError::Empty("constraint normals")) };
    let d = first.len();
    let basis = independent_subset(normals, tol);
    if basis.len() < d {
        return Err(GptError::Lineality { rank: basis.len(), dim: d });
    }
    let b = Matrix::from_rows(&basis.iter().map(|&i| normals[i].clone()).collect::<Vec<_>>());
    let binv = b.inverse(tol).ok_or_else(|| GptError::LpNumerics("singular initial basis".into()))?;
    let mut rays: Vec<Vector<S>> = (0..d).map(|j| normalize_ray(&binv.column(j))).collect();
    let mut active: Vec<usize> = basis.clone();

    for (k, a) in normals.iter().enumerate() {
        if basis.contains(&k) {
            continue;
        }
        let vals: Vec<S> = rays.iter().map(|r| dot(a, r)).collect();
        let sign: Vec<Ordering> = vals.iter().map(|v| v.sign_tol(tol)).collect();
        if sign.iter().all(|s| *s != Ordering::Less) {
            active.push(k);
            continue;
        }
        let zero_sets: Vec<Vec<usize>> = rays
            .iter()
            .map(|r| active.iter().copied().filter(|&i| dot(&normals[i], r).is_zero_tol(tol)).collect())
            .collect();
        let mut next: Vec<Vector<S>> = Vec::new();
        for (i, r) in rays.iter().enumerate() {
            if sign[i] != Ordering::Less {
                next.push(r.clone());
            }
        }
        for p in (0..rays.len()).filter(|&i| sign[i] == Ordering::Greater) {
            for n in (0..rays.len()).filter(|&i| sign[i] == Ordering::Less) {
                let common: Vec<usize> = zero_sets[p].iter().copied().filter(|i| zero_sets[n].contains(i)).collect();
                if common.len() + 2 < d {
                    continue;
                }
                let rows: Vec<Vector<S>> = common.iter().map(|&i| normals[i].clone()).collect();
                let rank = if rows.is_empty() { 0 } else { Matrix::from_rows(&rows).rank(tol) };
                if rank + 2 != d {
                    continue;
                }
                // a.new = a.rp * a.rn - a.rn * a.rp = 0 with positive weights.
                let wp = -vals[n].clone();
                let wn = vals[p].clone();
                let new: Vector<S> = rays[p]
                    .iter()
                    .zip(&rays[n])
                    .map(|(x, y)| wp.clone() * x.clone() + wn.clone() * y.clone())
                    .collect();
                let new = normalize_ray(&new);
                if !next.iter().any(|r| same_ray(r, &new, tol)) {
                    next.push(new);
                }
            }
        }
        rays = next;
        active.push(k);
    }
    Ok(rays)
}

fn same_ray<S: Scalar>(a: &[S], b: &[S], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x.clone() - y.clone()).is_zero_tol(tol))
}

/// Float rays get largest-magnitude coordinate 1 in absolute value; exact
/// rays become primitive integer vectors.
pub fn normalize_ray<S: Scalar>(r: &[S]) -> Vector<S> {
    match S::MODE {
        ScalarMode::Float => {
            let m = max_abs_f64(r);
            if m == 0.0 {
                return r.to_vec();
            }
            let k = S::from_f64(1.0 / m);
            r.iter().map(|x| x.clone() * k.clone()).collect()
        }
        ScalarMode::Exact => {
            let q: Vec<Rational> =
                r.iter().map(|x| Rational::parse_literal(&x.to_string()).expect("rational")).collect();
            primitive(&q).iter().map(|x| S::parse_literal(&x.to_string()).expect("integer")).collect()
        }
    }
}

fn primitive(r: &[Rational]) -> Vec<Rational> {
    let lcm = r.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = r.iter().map(|x| (x * Rational::from_integer(lcm.clone())).to_integer()).collect();
    let gcd = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if gcd.is_zero() {
        return r.to_vec();
    }
    ints.into_iter().map(|x| Rational::from_integer(x / gcd.abs())).collect()
}

/// LP feasibility of `x = sum theta_i g_i`, `theta >= 0`.
///
/// Conic membership does not depend on the inner product; `g` is only used to
/// check dimensions so the signature matches the rest of the cone API.
pub fn cone_member<S: Scalar>(c: &ConeV<S>, x: &[S], g: &InnerProduct<S>) -> Result<bool> {
    let d = g.dim();
    if x.len() != d || c.dim() != d {
        return Err(GptError::DimensionMismatch { expected: d, found: x.len() });
    }
    conic_combination(c.generators(), x).map(|w| w.is_some())
}

/// Nonnegative weights `theta` with `sum theta_i v_i = x`, if any exist.
pub fn conic_combination<S: Scalar>(vs: &[Vector<S>], x: &[S]) -> Result<Option<Vec<S>>> {
    let m = vs.len();
    let mut lp = LinearProgram::new(m, Sense::Minimize);
    for i in 0..m {
        lp.nonneg(i);
    }
    for (k, xk) in x.iter().enumerate() {
        lp.add_constraint(vs.iter().map(|v| v[k].clone()).collect(), Relation::Eq, xk.clone());
    }
    Ok(lp_feasible(&lp)?.witness)
}

/// Convex weights `theta` with `sum theta_i v_i = x`, `sum theta_i = 1`.
pub fn convex_combination<S: Scalar>(vs: &[Vector<S>], x: &[S]) -> Result<Option<Vec<S>>> {
    let m = vs.len();
    let mut lp = LinearProgram::new(m, Sense::Minimize);
    for i in 0..m {
        lp.nonneg(i);
    }
    for (k, xk) in x.iter().enumerate() {
        lp.add_constraint(vs.iter().map(|v| v[k].clone()).collect(), Relation::Eq, xk.clone());
    }
    lp.add_constraint(vec![S::one(); m], Relation::Eq, S::one());
    Ok(lp_feasible(&lp)?.witness)
}

pub fn cones_equal<S: Scalar>(c1: &ConeV<S>, c2: &ConeV<S>, g: &InnerProduct<S>) -> Result<bool> {
    for (a, b) in [(c1, c2), (c2, c1)] {
        for x in a.generators() {
            if !cone_member(b, x, g)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct AffineHull {
    pub dim: usize,
    pub origin_outside: bool,
}

/// Affine dimension of the hull and whether the origin lies outside it.
///
/// The origin is in `aff(V)` exactly when the linear span of `V` has the same
/// dimension as its affine hull.
pub fn affine_hull_check<S: Scalar>(vertices: &[Vector<S>], tol: f64) -> Result<AffineHull> {
    let Some(v0) = vertices.first() else { return Err(GptError::Empty("vertex list")) };
    let diffs: Vec<Vector<S>> = vertices[1..].iter().map(|v| sub(v, v0)).collect();
    let dim = if diffs.is_empty() { 0 } else { Matrix::from_rows(&diffs).rank(tol) };
    let span = Matrix::from_rows(vertices).rank(tol);
    Ok(AffineHull { dim, origin_outside: span > dim })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> Rational {
        Rational::from_i64(n)
    }

    #[test]
    fn gram_inner_examples() {
        let id = InnerProduct::<f64>::identity(3);
        assert_eq!(gram_inner(&id, &[1.0, 0.0, 1.0], &[1.0, 0.0, 1.0]).unwrap(), 2.0);
        let g = InnerProduct::new(Matrix::diagonal(&[2.0, 1.0]), 1e-9).unwrap();
        assert_eq!(gram_inner(&g, &[1.0, 0.0], &[1.0, 0.0]).unwrap(), 2.0);
        assert!(gram_inner(&id, &[1.0], &[1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn rejects_non_spd_gram() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(InnerProduct::new(m, 1e-9).is_err());
        let m = Matrix::from_rows(&[vec![1.0, 0.5], vec![0.0, 1.0]]);
        assert!(InnerProduct::new(m, 1e-9).is_err());
    }

    #[test]
    fn orthant_is_self_dual_exactly() {
        let gens = vec![vec![q(1), q(0), q(0)], vec![q(0), q(1), q(0)], vec![q(0), q(0), q(1)]];
        let c = ConeV::new(gens.clone(), 0.0).unwrap();
        let d = dual_cone(&c, &InnerProduct::identity(3), 0.0).unwrap();
        assert_eq!(d.generators().len(), 3);
        for g in &gens {
            assert!(d.generators().contains(g));
        }
    }

    #[test]
    fn exact_rays_are_primitive() {
        let r = normalize_ray(&[Rational::from_ratio(2, 3), Rational::from_ratio(-4, 9), q(0)]);
        assert_eq!(r, vec![q(3), q(-2), q(0)]);
    }

    #[test]
    fn lower_dimensional_cone_reports_lineality() {
        let c = ConeV::new(vec![vec![q(1), q(0), q(0)], vec![q(0), q(1), q(0)]], 0.0).unwrap();
        assert!(matches!(dual_cone(&c, &InnerProduct::identity(3), 0.0), Err(GptError::Lineality { rank: 2, dim: 3 })));
    }

    #[test]
    fn membership_basics() {
        let gens = vec![vec![q(1), q(0), q(0)], vec![q(0), q(1), q(0)], vec![q(0), q(0), q(1)]];
        let c = ConeV::new(gens.clone(), 0.0).unwrap();
        let g = InnerProduct::identity(3);
        assert!(cone_member(&c, &gens[1], &g).unwrap());
        assert!(!cone_member(&c, &[q(-1), q(-1), q(-1)], &g).unwrap());
        assert!(cones_equal(&c, &c, &g).unwrap());
    }

    #[test]
    fn affine_hull_examples() {
        let simplex = vec![vec![q(1), q(0), q(0)], vec![q(0), q(1), q(0)], vec![q(0), q(0), q(1)]];
        assert_eq!(affine_hull_check(&simplex, 0.0).unwrap(), AffineHull { dim: 2, origin_outside: true });
        let twice = vec![vec![q(1), q(2)], vec![q(1), q(2)]];
        assert_eq!(affine_hull_check(&twice, 0.0).unwrap(), AffineHull { dim: 0, origin_outside: true });
        let through_origin = vec![vec![q(1), q(0)], vec![q(-1), q(0)]];
        assert_eq!(affine_hull_check(&through_origin, 0.0).unwrap(), AffineHull { dim: 1, origin_outside: false });
    }
}
