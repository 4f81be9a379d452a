//! Linear automorphism groups, the group-averaged inner product, canonical
//! coordinates, self-duality and the rescaling that turns a strictly positive
//! map `J` into a self-dualizing change of coordinates.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{GptError, Result};
use crate::geometry::{cone_member, cones_equal, dual_cone, InnerProduct};
use crate::linalg::{dot, independent_subset, scale, sub, sum_vectors, vec_approx_eq, Matrix, Vector};
use crate::model::{Effect, Measurement, Theory, TheoryKind};
use crate::scalar::{Scalar, DEFAULT_TOL};

/// Finite group of linear maps permuting the vertices.
///
/// `perms[k][i] = j` means `elements[k] * v_i = v_j`.
#[derive(Debug, Clone)]
pub struct SymmetryGroup<S: Scalar> {
    elements: Vec<Matrix<S>>,
    perms: Vec<Vec<usize>>,
}

impl<S: Scalar> SymmetryGroup<S> {
    pub fn elements(&self) -> &[Matrix<S>] {
        &self.elements
    }

    pub fn perms(&self) -> &[Vec<usize>] {
        &self.perms
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    /// The trivial group on `V = R^d`.
    pub fn trivial(d: usize, vertex_count: usize) -> Self {
        Self { elements: vec![Matrix::identity(d)], perms: vec![(0..vertex_count).collect()] }
    }

    /// Checks that the product of any two elements is an element, by looking
    /// up the composed vertex permutation and comparing matrices.
    pub fn is_closed(&self, tol: f64) -> bool {
        let index: HashMap<&[usize], usize> = self.perms.iter().enumerate().map(|(k, p)| (p.as_slice(), k)).collect();
        for (a, pa) in self.perms.iter().enumerate() {
            for (b, pb) in self.perms.iter().enumerate() {
                let composed: Vec<usize> = pb.iter().map(|&i| pa[i]).collect();
                let Some(&c) = index.get(composed.as_slice()) else { return false };
                if !self.elements[a].mul(&self.elements[b]).approx_eq(&self.elements[c], tol) {
                    return false;
                }
            }
        }
        true
    }

    /// The group `X g X^{-1}` acting on `X`-transformed vertices.
    pub fn conjugate(&self, x: &Matrix<S>, x_inv: &Matrix<S>) -> Self {
        Self { elements: self.elements.iter().map(|t| x.mul(t).mul(x_inv)).collect(), perms: self.perms.clone() }
    }
}

fn vertex_index<S: Scalar>(vertices: &[Vector<S>], x: &[S], tol: f64) -> Option<usize> {
    vertices.iter().position(|v| vec_approx_eq(v, x, tol))
}

/// Vertex permutation induced by `t`, if `t` maps the vertex set onto itself.
fn induced_permutation<S: Scalar>(vertices: &[Vector<S>], t: &Matrix<S>, tol: f64) -> Option<Vec<usize>> {
    let mut perm = Vec::with_capacity(vertices.len());
    let mut seen = vec![false; vertices.len()];
    for v in vertices {
        let j = vertex_index(vertices, &t.apply(v), tol)?;
        if seen[j] {
            return None;
        }
        seen[j] = true;
        perm.push(j);
    }
    Some(perm)
}

fn match_tol<S: Scalar>(t: &Theory<S>) -> f64 {
    if S::is_exact() {
        0.0
    } else {
        (t.tol * 100.0).max(1e-9)
    }
}

/// `GL(Omega)`: closed forms for the built-ins, backtracking search otherwise.
pub fn automorphism_group<S: Scalar>(t: &Theory<S>) -> Result<SymmetryGroup<S>> {
    let matrices = match t.kind {
        TheoryKind::Classical { n } => Some(permutation_matrices::<S>(n + 1)),
        TheoryKind::Polygon { n } | TheoryKind::DiscApprox { m: n } | TheoryKind::PsiPolygon { n } => {
            Some(dihedral_matrices::<S>(n))
        }
        TheoryKind::Custom => None,
    };
    let Some(matrices) = matrices else { return automorphism_group_search(t) };
    let tol = match_tol(t);
    let mut perms = Vec::with_capacity(matrices.len());
    for m in &matrices {
        let p = induced_permutation(t.vertices(), m, tol)
            .ok_or_else(|| GptError::InvalidTheory("closed-form symmetry does not fit the vertices".into()))?;
        perms.push(p);
    }
    Ok(SymmetryGroup { elements: matrices, perms })
}

/// All `d x d` permutation matrices, identity first.
pub fn permutation_matrices<S: Scalar>(d: usize) -> Vec<Matrix<S>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..d).collect();
    permute(&mut current, 0, &mut out);
    out.into_iter()
        .map(|p| {
            let mut m = Matrix::zeros(d, d);
            for (i, &j) in p.iter().enumerate() {
                m[(j, i)] = S::one();
            }
            m
        })
        .collect()
}

fn permute(v: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == v.len() {
        out.push(v.clone());
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, out);
        v.swap(k, i);
    }
}

/// Rotations by `2 pi k / n` followed by their compositions with the
/// reflection `y -> -y`, acting on the first two coordinates.
pub fn dihedral_matrices<S: Scalar>(n: usize) -> Vec<Matrix<S>> {
    let mut out = Vec::with_capacity(2 * n);
    for reflect in [false, true] {
        for k in 0..n {
            let a = 2.0 * PI * k as f64 / n as f64;
            let (c, s) = (a.cos(), a.sin());
            let rows = if reflect {
                vec![vec![c, s, 0.0], vec![s, -c, 0.0], vec![0.0, 0.0, 1.0]]
            } else {
                vec![vec![c, -s, 0.0], vec![s, c, 0.0], vec![0.0, 0.0, 1.0]]
            };
            let rows: Vec<Vector<S>> = rows.into_iter().map(|r| r.into_iter().map(S::from_f64).collect()).collect();
            out.push(Matrix::from_rows(&rows));
        }
    }
    out
}

/// Backtracking search over vertex permutations.
///
/// Every automorphism preserves `Q = sum v v^T`, hence the pairwise values
/// `K_ij = v_i^T Q^{-1} v_j`. Only the images of a basis subset of vertices
/// are branched on; each complete assignment fixes a linear map, which is then
/// checked against every vertex.
pub fn automorphism_group_search<S: Scalar>(t: &Theory<S>) -> Result<SymmetryGroup<S>> {
    let vs = t.vertices();
    let d = t.dim();
    let tol = match_tol(t);
    let basis = independent_subset(vs, t.tol);
    if basis.len() < d {
        return Err(GptError::NotSpanning);
    }
    let mut q = Matrix::<S>::zeros(d, d);
    for v in vs {
        for i in 0..d {
            for j in 0..d {
                q[(i, j)] = q[(i, j)].clone() + v[i].clone() * v[j].clone();
            }
        }
    }
    let qinv = q.inverse(t.tol).ok_or(GptError::NotSpanning)?;
    let m = vs.len();
    let k: Vec<Vec<S>> = (0..m).map(|i| (0..m).map(|j| dot(&vs[i], &qinv.apply(&vs[j]))).collect()).collect();
    let kscale = k.iter().flatten().map(|x| x.to_f64().abs()).fold(1.0, f64::max);
    let same = |a: &S, b: &S| (a.clone() - b.clone()).is_zero_tol(tol * kscale);
    let vb = Matrix::from_columns(&basis.iter().map(|&i| vs[i].clone()).collect::<Vec<_>>());
    let vb_inv = vb.inverse(t.tol).ok_or(GptError::NotSpanning)?;

    let mut elements = Vec::new();
    let mut perms = Vec::new();
    let mut image: Vec<usize> = Vec::with_capacity(d);
    let mut stack: Vec<usize> = vec![0];
    // Iterative DFS: stack[level] is the next candidate image for basis[level].
    while let Some(cand) = stack.pop() {
        let level = stack.len();
        if cand >= m {
            image.pop();
            continue;
        }
        stack.push(cand + 1);
        let bl = basis[level];
        let ok = !image.contains(&cand)
            && same(&k[cand][cand], &k[bl][bl])
            && image.iter().zip(&basis).all(|(&img, &b)| same(&k[img][cand], &k[b][bl]));
        if !ok {
            continue;
        }
        if level + 1 == d {
            let mut full = image.clone();
            full.push(cand);
            let target = Matrix::from_columns(&full.iter().map(|&i| vs[i].clone()).collect::<Vec<_>>());
            let tmat = target.mul(&vb_inv);
            if let Some(p) = induced_permutation(vs, &tmat, tol) {
                elements.push(tmat);
                perms.push(p);
            }
        } else {
            image.push(cand);
            stack.push(0);
        }
    }
    // Identity first for readability.
    if let Some(pos) = perms.iter().position(|p| p.iter().enumerate().all(|(i, &j)| i == j)) {
        elements.swap(0, pos);
        perms.swap(0, pos);
    }
    Ok(SymmetryGroup { elements, perms })
}

/// Orbit of vertex 0 covers every vertex.
pub fn is_transitive<S: Scalar>(g: &SymmetryGroup<S>, t: &Theory<S>) -> bool {
    let m = t.vertices().len();
    let mut hit = vec![false; m];
    for p in g.perms() {
        if let Some(&j) = p.first() {
            if j < m {
                hit[j] = true;
            }
        }
    }
    hit.iter().all(|&h| h)
}

/// Vertex average, checked to be fixed by every group element.
pub fn maximally_mixed<S: Scalar>(t: &Theory<S>, g: &SymmetryGroup<S>) -> Result<Vector<S>> {
    if !is_transitive(g, t) {
        return Err(GptError::NotTransitive);
    }
    let n = t.vertices().len() as i64;
    let w = scale(&sum_vectors(t.dim(), t.vertices()), &(S::one() / S::from_i64(n)));
    for el in g.elements() {
        if !vec_approx_eq(&el.apply(&w), &w, match_tol(t)) {
            return Err(GptError::VerificationFailed("maximally mixed state is not invariant".into()));
        }
    }
    Ok(w)
}

/// Scales vertices by `1 / |w_M|_E` and the unit effect by `|w_M|_E`.
pub fn rescale_unit_norm<S: Scalar>(t: &Theory<S>) -> Result<Theory<f64>> {
    let tf = t.to_f64();
    let g = automorphism_group(&tf)?;
    let wm = maximally_mixed(&tf, &g)?;
    let norm = wm.iter().map(|x| x * x).sum::<f64>().sqrt();
    let c = 1.0 / norm;
    let vertices = tf.vertices().iter().map(|v| scale(v, &c)).collect();
    let unit = scale(tf.unit_effect(), &norm);
    let mut out = Theory::new(tf.name.clone(), vertices, unit, tf.inner().clone(), tf.tol)?.with_kind(tf.kind);
    out.canonicalized = tf.canonicalized;
    out.self_dual_certified = tf.self_dual_certified;
    Ok(out)
}

/// `(1/|g|) sum T^T T`; every element is orthogonal for the result.
pub fn averaged_inner_product<S: Scalar>(g: &SymmetryGroup<S>) -> Result<InnerProduct<S>> {
    let Some(first) = g.elements().first() else { return Err(GptError::Empty("symmetry group")) };
    let d = first.rows();
    let mut acc = Matrix::zeros(d, d);
    for t in g.elements() {
        acc = acc.add(&t.transpose().mul(t));
    }
    let gram = acc.scale(&(S::one() / S::from_i64(g.order() as i64)));
    let tol = if S::is_exact() { 0.0 } else { DEFAULT_TOL };
    InnerProduct::new(symmetrize(&gram), tol)
}

fn symmetrize<S: Scalar>(m: &Matrix<S>) -> Matrix<S> {
    if S::is_exact() {
        return m.clone();
    }
    m.add(&m.transpose()).scale(&S::from_ratio(1, 2))
}

/// `P_M = (1/|g|) sum T`.
pub fn projector_pm<S: Scalar>(g: &SymmetryGroup<S>) -> Result<Matrix<S>> {
    let Some(first) = g.elements().first() else { return Err(GptError::Empty("symmetry group")) };
    let d = first.rows();
    let mut acc = Matrix::zeros(d, d);
    for t in g.elements() {
        acc = acc.add(t);
    }
    Ok(acc.scale(&(S::one() / S::from_i64(g.order() as i64))))
}

/// The cone over the vertices equals its internal dual under `g`.
pub fn is_self_dual<S: Scalar>(t: &Theory<S>, g: &InnerProduct<S>) -> Result<bool> {
    let dual = dual_cone(t.cone(), g, t.tol)?;
    cones_equal(t.cone(), &dual, g)
}

#[derive(Debug, Clone)]
pub struct CanonicalForm {
    /// Columns of the change of basis, orthonormal for the averaged product;
    /// the last one is `w_M`.
    pub basis: Vec<Vector<f64>>,
    /// New state coordinates are `transform * old` (after rescaling).
    pub transform: Matrix<f64>,
    /// New effect coordinates are `effect_transform * old`.
    pub effect_transform: Matrix<f64>,
    /// Factor applied to states before `transform`.
    pub rescale: f64,
    pub group: SymmetryGroup<f64>,
    pub theory: Theory<f64>,
}

impl CanonicalForm {
    pub fn map_state(&self, w: &[f64]) -> Vector<f64> {
        self.transform.apply(&scale(w, &self.rescale))
    }

    pub fn map_effect(&self, e: &[f64]) -> Vector<f64> {
        scale(&self.effect_transform.apply(e), &(1.0 / self.rescale))
    }

    pub fn map_measurement(&self, m: &Measurement<f64>) -> Measurement<f64> {
        let mut out = m.clone();
        out.effects = m.effects.iter().map(|e| Effect::new(self.map_effect(&e.covector))).collect();
        out
    }
}

/// Bloch coordinates: `|w_M| = 1`, averaged product = identity and
/// `w_M = (0, ..., 0, 1)`; the first basis vector points from `w_M` to vertex 0.
pub fn canonicalize<S: Scalar>(t: &Theory<S>) -> Result<CanonicalForm> {
    let tf = t.to_f64();
    let d = tf.dim();
    let g = automorphism_group(&tf)?;
    let wm = maximally_mixed(&tf, &g)?;
    let rescale = 1.0 / wm.iter().map(|x| x * x).sum::<f64>().sqrt();
    let wm = scale(&wm, &rescale);
    let gram = averaged_inner_product(&g)?;
    let ip = |x: &[f64], y: &[f64]| dot(x, &gram.gram().apply(y));

    let mut basis: Vec<Vector<f64>> = Vec::with_capacity(d);
    for v in tf.vertices() {
        if basis.len() + 1 == d {
            break;
        }
        let mut x = sub(&scale(v, &rescale), &wm);
        for b in &basis {
            let c = ip(&x, b);
            x = sub(&x, &scale(b, &c));
        }
        let n = ip(&x, &x).max(0.0).sqrt();
        if n > 1e-7 {
            basis.push(scale(&x, &(1.0 / n)));
        }
    }
    if basis.len() + 1 != d {
        return Err(GptError::NotSpanning);
    }
    for b in &basis {
        if ip(b, &wm).abs() > 1e-7 {
            return Err(GptError::VerificationFailed("affine directions are not orthogonal to w_M".into()));
        }
    }
    basis.push(wm.clone());

    let bmat = Matrix::from_columns(&basis);
    let transform = bmat.transpose().mul(gram.gram());
    let tinv = transform.inverse(1e-12).ok_or(GptError::NotSpanning)?;
    let effect_transform = tinv.transpose().mul(tf.inner().gram());

    let vertices: Vec<Vector<f64>> = tf.vertices().iter().map(|v| transform.apply(&scale(v, &rescale))).collect();
    let unit = scale(&effect_transform.apply(tf.unit_effect()), &(1.0 / rescale));
    let mut theory = Theory::new(format!("{}-canonical", tf.name), vertices, unit, InnerProduct::identity(d), tf.tol)?;
    theory.canonicalized = true;
    let group = g.conjugate(&transform, &tinv);
    theory.self_dual_certified = is_self_dual(&theory, theory.inner())?;
    Ok(CanonicalForm { basis, transform, effect_transform, rescale, group, theory })
}

#[derive(Debug, Clone, Serialize)]
pub struct XiReport {
    pub xi: f64,
    pub spread: f64,
}

#[derive(Debug, Clone)]
pub struct XiCanonical {
    pub xi: f64,
    /// `Xi = P_M + sqrt(xi) P_M^perp`.
    pub xi_matrix: Matrix<f64>,
    pub theory: Theory<f64>,
    /// Averaged inner product of the transformed theory.
    pub averaged: InnerProduct<f64>,
}

/// Rescales the complement of `w_M` so that the cone becomes self-dual.
///
/// `j` must be self-adjoint and positive definite for the averaged product and
/// map the cone onto its internal dual. Its group average is `P_M + xi P_M^perp`
/// for a transitive theory; a spread of the complementary eigenvalues above
/// `1e-7` (relative) is reported as [`GptError::XiNotScalar`].
pub fn xi_canonicalize<S: Scalar>(t: &Theory<S>, j: &Matrix<f64>) -> Result<XiCanonical> {
    let tf = t.to_f64();
    let d = tf.dim();
    if j.rows() != d || j.cols() != d {
        return Err(GptError::DimensionMismatch { expected: d, found: j.rows() });
    }
    let g = automorphism_group(&tf)?;
    if !is_transitive(&g, &tf) {
        return Err(GptError::NotTransitive);
    }
    let wm = maximally_mixed(&tf, &g)?;
    let gram = averaged_inner_product(&g)?;
    let gm = gram.gram();
    let tol = 1e-9;

    let gj = gm.mul(j);
    if !gj.is_symmetric(1e-9) || !symmetrize(&gj).is_positive_definite(1e-12) {
        return Err(GptError::InvalidParameter("J is not self-adjoint and positive for the averaged product".into()));
    }
    let dual = dual_cone(tf.cone(), &gram, tol)?;
    for v in tf.vertices() {
        if !cone_member(&dual, &j.apply(v), &gram)? {
            return Err(GptError::InvalidParameter("J does not map the cone into its dual".into()));
        }
    }
    let jinv = j.inverse(1e-12).ok_or_else(|| GptError::InvalidParameter("J is singular".into()))?;
    for y in dual.generators() {
        if !cone_member(tf.cone(), &jinv.apply(y), &gram)? {
            return Err(GptError::InvalidParameter("J does not map the cone onto its dual".into()));
        }
    }

    let mut jav = Matrix::zeros(d, d);
    for el in g.elements() {
        let inv = el.inverse(1e-12).ok_or_else(|| GptError::LpNumerics("singular group element".into()))?;
        jav = jav.add(&inv.mul(j).mul(el));
    }
    jav = jav.scale(&(1.0 / g.order() as f64));
    let jw = jav.apply(&wm);
    let lambda = dot(&jw, &gm.apply(&wm)) / dot(&wm, &gm.apply(&wm));
    jav = jav.scale(&(1.0 / lambda));

    let pm = projector_pm(&g)?;
    let perp = Matrix::identity(d).sub(&pm);
    let k = jav.mul(&perp);
    let xi = k.trace() / (d as f64 - 1.0);
    let spread = complement_spread(gm, &k.sub(&perp.scale(&xi)))? / xi.abs();
    if !(xi > 0.0) || spread > 1e-7 {
        return Err(GptError::XiNotScalar { spread });
    }

    let xi_matrix = pm.add(&perp.scale(&xi.sqrt()));
    let xi_inv = pm.add(&perp.scale(&(1.0 / xi.sqrt())));
    let vertices: Vec<Vector<f64>> = tf.vertices().iter().map(|v| xi_matrix.apply(v)).collect();
    let ginner = tf.inner().gram();
    let ginner_inv = ginner.inverse(1e-12).ok_or(GptError::NotSpanning)?;
    let effect_map = ginner_inv.mul(&xi_inv.transpose()).mul(ginner);
    let unit = effect_map.apply(tf.unit_effect());
    let mut theory = Theory::new(format!("{}-xi", tf.name), vertices, unit, tf.inner().clone(), tf.tol)?;
    let group = g.conjugate(&xi_matrix, &xi_inv);
    let averaged = averaged_inner_product(&group)?;
    if !is_self_dual(&theory, &averaged)? {
        return Err(GptError::VerificationFailed("transformed theory is not self-dual".into()));
    }
    theory.self_dual_certified = theory.inner().gram().approx_eq(averaged.gram(), 1e-9);
    Ok(XiCanonical { xi, xi_matrix, theory, averaged })
}

/// Largest |eigenvalue| of `m`, which must be self-adjoint for the SPD `gram`.
fn complement_spread(gram: &Matrix<f64>, m: &Matrix<f64>) -> Result<f64> {
    let d = gram.rows();
    let to_na = |x: &Matrix<f64>| DMatrix::from_fn(d, d, |i, j| x[(i, j)]);
    let chol = to_na(gram)
        .cholesky()
        .ok_or_else(|| GptError::InvalidParameter("averaged gram is not positive definite".into()))?;
    let l = chol.l();
    let lt_inv = l.transpose().try_inverse().ok_or(GptError::NotSpanning)?;
    let a = l.transpose() * to_na(m) * lt_inv;
    let sym = (&a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    Ok(eig.eigenvalues.iter().map(|x| x.abs()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_classical, make_polygon, polygon_radius};
    use crate::scalar::Rational;

    #[test]
    fn group_orders() {
        assert_eq!(automorphism_group(&make_polygon(5).unwrap()).unwrap().order(), 10);
        assert_eq!(automorphism_group(&make_classical::<Rational>(2).unwrap()).unwrap().order(), 6);
    }

    #[test]
    fn search_matches_closed_form_on_small_builtins() {
        let mut p = make_polygon(6).unwrap();
        p.kind = TheoryKind::Custom;
        let g = automorphism_group(&p).unwrap();
        assert_eq!(g.order(), 12);
        assert!(g.is_closed(1e-7));
        let mut c = make_classical::<Rational>(3).unwrap();
        c.kind = TheoryKind::Custom;
        let g = automorphism_group(&c).unwrap();
        assert_eq!(g.order(), 24);
        assert!(g.is_closed(0.0));
    }

    #[test]
    fn rhombus_is_linearly_a_square() {
        // diag(1/2, 1, 1) maps this rhombus onto a square, so it is transitive.
        let v = vec![vec![2.0, 0.0, 1.0], vec![0.0, 1.0, 1.0], vec![-2.0, 0.0, 1.0], vec![0.0, -1.0, 1.0]];
        let t = Theory::new("rhombus", v, vec![0.0, 0.0, 1.0], InnerProduct::identity(3), 1e-9).unwrap();
        let g = automorphism_group(&t).unwrap();
        assert_eq!(g.order(), 8);
        assert!(is_transitive(&g, &t));
    }

    #[test]
    fn kite_is_not_transitive() {
        let v = vec![vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 1.0], vec![-1.0, 0.0, 1.0], vec![0.0, -2.0, 1.0]];
        let t = Theory::new("kite", v, vec![0.0, 0.0, 1.0], InnerProduct::identity(3), 1e-9).unwrap();
        let g = automorphism_group(&t).unwrap();
        assert_eq!(g.order(), 2);
        assert!(!is_transitive(&g, &t));
        assert!(matches!(maximally_mixed(&t, &g), Err(GptError::NotTransitive)));
    }

    #[test]
    fn classical_maximally_mixed_and_rescale() {
        let t = make_classical::<Rational>(2).unwrap();
        let g = automorphism_group(&t).unwrap();
        let third = Rational::from_ratio(1, 3);
        assert_eq!(maximally_mixed(&t, &g).unwrap(), vec![third.clone(), third.clone(), third]);
        let r = rescale_unit_norm(&t).unwrap();
        assert!((r.vertices()[0][0] - 3f64.sqrt()).abs() < 1e-12);
        let rr = rescale_unit_norm(&r).unwrap();
        assert!(vec_approx_eq(&rr.vertices()[1], &r.vertices()[1], 1e-12));
    }

    #[test]
    fn projector_is_idempotent() {
        let g = automorphism_group(&make_polygon(7).unwrap()).unwrap();
        let p = projector_pm(&g).unwrap();
        assert!(p.mul(&p).approx_eq(&p, 1e-12));
        assert!(p.approx_eq(&Matrix::diagonal(&[0.0, 0.0, 1.0]), 1e-12));
    }

    #[test]
    fn canonical_classical_bit() {
        let c = canonicalize(&make_classical::<Rational>(1).unwrap()).unwrap();
        let vs = c.theory.vertices();
        assert!(vec_approx_eq(&vs[0], &[1.0, 1.0], 1e-12));
        assert!(vec_approx_eq(&vs[1], &[-1.0, 1.0], 1e-12));
        assert!(vec_approx_eq(c.theory.unit_effect(), &[0.0, 1.0], 1e-12));
        assert!(c.theory.self_dual_certified);
    }

    #[test]
    fn self_duality_of_small_polygons() {
        for (n, expected) in [(3, true), (4, false), (5, true), (6, false)] {
            let t = make_polygon(n).unwrap();
            assert_eq!(is_self_dual(&t, t.inner()).unwrap(), expected, "n = {n}");
        }
    }

    fn stretched_pentagon() -> Theory<f64> {
        let s = Matrix::diagonal(&[2.0, 2.0, 1.0]);
        let p = make_polygon(5).unwrap();
        let vs = p.vertices().iter().map(|v| s.apply(v)).collect();
        Theory::new("stretched-pentagon", vs, vec![0.0, 0.0, 1.0], InnerProduct::identity(3), 1e-9).unwrap()
    }

    #[test]
    fn xi_identity_on_self_dual_input() {
        let x = xi_canonicalize(&make_polygon(5).unwrap(), &Matrix::identity(3)).unwrap();
        assert!(x.xi_matrix.approx_eq(&Matrix::identity(3), 1e-12));
        assert!((x.xi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn xi_recovers_stretched_pentagon() {
        let t = stretched_pentagon();
        assert!(!is_self_dual(&t, t.inner()).unwrap());
        let j = Matrix::diagonal(&[0.25, 0.25, 1.0]);
        let x = xi_canonicalize(&t, &j).unwrap();
        assert!((x.xi - 0.25).abs() < 1e-9);
        assert!(is_self_dual(&x.theory, &x.averaged).unwrap());
        let r = polygon_radius(5);
        assert!((x.theory.vertices()[0][0] - r).abs() < 1e-9);
    }

    #[test]
    fn xi_rejects_mismatched_j() {
        assert!(xi_canonicalize(&stretched_pentagon(), &Matrix::identity(3)).is_err());
    }
}
