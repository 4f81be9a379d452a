//! Pure indecomposable effects, ideal measurements and their eigenstates,
//! fuzzification, and the `psi` re-expression of even polygons.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{GptError, Result};
use crate::linalg::{add, is_zero_vec, scale, sub, sum_vectors, vec_approx_eq, Matrix, Vector};
use crate::model::{is_valid_effect, polygon_pure_effects, polygon_radius, Effect, Measurement, Theory, TheoryKind};
use crate::scalar::Scalar;
use crate::symmetry::{automorphism_group, averaged_inner_product, is_self_dual, is_transitive, maximally_mixed};

/// How one outcome of an ideal measurement is built from pure effects.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IdealTerm {
    /// Indices `i` of the pure effects `e_i` in the sum.
    pub indices: Vec<usize>,
    /// `true` when the outcome is `u - sum`.
    pub complement: bool,
}

#[derive(Debug, Clone)]
pub struct IdealMeasurement<S: Scalar> {
    pub measurement: Measurement<S>,
    pub provenance: Vec<IdealTerm>,
}

/// Theories for which pure effects and eigenstates have a representation
/// rule: even polygons in the `psi` representation, and self-dual theories
/// whose pairing is the averaged product and whose unit effect is `w_M`.
pub fn check_conforming<S: Scalar>(t: &Theory<S>) -> Result<()> {
    match t.kind {
        TheoryKind::PsiPolygon { .. } => return Ok(()),
        TheoryKind::Polygon { n } | TheoryKind::DiscApprox { m: n } if n % 2 == 1 => return Ok(()),
        TheoryKind::Polygon { .. } | TheoryKind::DiscApprox { .. } => {
            return Err(GptError::NotConforming("even polygons need the psi representation first".into()))
        }
        _ => {}
    }
    if t.canonicalized && t.self_dual_certified {
        return Ok(());
    }
    let g = automorphism_group(t)?;
    if !is_transitive(&g, t) {
        return Err(GptError::NotTransitive);
    }
    let tol = if S::is_exact() { 0.0 } else { t.tol * 10.0 };
    let avg = averaged_inner_product(&g)?;
    if !avg.gram().approx_eq(t.inner().gram(), tol) {
        return Err(GptError::NotConforming("pairing is not the group-averaged inner product".into()));
    }
    let wm = maximally_mixed(t, &g)?;
    if !vec_approx_eq(&wm, t.unit_effect(), tol) {
        return Err(GptError::NotConforming(
            "unit effect differs from the maximally mixed state (canonicalize first)".into(),
        ));
    }
    if !is_self_dual(t, t.inner())? {
        return Err(GptError::NotConforming("theory is not self-dual and not an even polygon".into()));
    }
    Ok(())
}

/// `psi`-representation pure effects `(cos, sin, 1) / 2` at angles `(2i - 1) pi / n`.
pub fn psi_pure_effects(n: usize) -> Vec<Vector<f64>> {
    (0..n)
        .map(|i| {
            let a = (2.0 * i as f64 - 1.0) * PI / n as f64;
            vec![0.5 * a.cos(), 0.5 * a.sin(), 0.5]
        })
        .collect()
}

/// One pure indecomposable effect per vertex, `e_i = w_i / <w_0, w_0>` in a
/// self-dual theory and the closed form in the `psi` representation.
pub fn indecomposable_pure_effects<S: Scalar>(t: &Theory<S>) -> Result<Vec<Effect<S>>> {
    check_conforming(t)?;
    if let TheoryKind::PsiPolygon { n } = t.kind {
        return Ok(psi_pure_effects(n)
            .into_iter()
            .map(|e| Effect::new(e.into_iter().map(S::from_f64).collect()))
            .collect());
    }
    let v0 = &t.vertices()[0];
    let norm2 = t.pair(v0, v0);
    let k = S::one() / norm2;
    Ok(t.vertices().iter().map(|v| Effect::new(scale(v, &k))).collect())
}

/// Every measurement with at most `max_outcomes` outcomes whose effects are
/// sums of pure effects, or `u` minus such sums.
///
/// Candidate effects come from a subset search that stops extending a sum as
/// soon as it leaves the effect space. Measurements are multisets of distinct
/// candidates summing to `u`, so relabelings are never listed twice.
pub fn enumerate_ideal_measurements<S: Scalar>(t: &Theory<S>, max_outcomes: usize) -> Result<Vec<IdealMeasurement<S>>> {
    let pure: Vec<Vector<S>> = indecomposable_pure_effects(t)?.into_iter().map(|e| e.covector).collect();
    let d = t.dim();
    let u = t.unit_effect().to_vec();
    let mut cands: Vec<(Vector<S>, IdealTerm)> = Vec::new();
    let push = |v: Vector<S>, term: IdealTerm, cands: &mut Vec<(Vector<S>, IdealTerm)>| {
        if is_zero_vec(&v, t.tol) || vec_approx_eq(&v, &u, t.tol) {
            return;
        }
        if cands.iter().any(|(w, _)| vec_approx_eq(w, &v, t.tol)) {
            return;
        }
        cands.push((v, term));
    };
    // DFS over index subsets in increasing order.
    let mut stack: Vec<(Vec<usize>, Vector<S>)> = vec![(Vec::new(), vec![S::zero(); d])];
    while let Some((idx, sum)) = stack.pop() {
        let start = idx.last().map_or(0, |&i| i + 1);
        for i in (start..pure.len()).rev() {
            let s = add(&sum, &pure[i]);
            if !is_valid_effect(t, &s) {
                continue;
            }
            let mut next = idx.clone();
            next.push(i);
            stack.push((next, s));
        }
        if !idx.is_empty() {
            push(sum.clone(), IdealTerm { indices: idx.clone(), complement: false }, &mut cands);
            push(sub(&u, &sum), IdealTerm { indices: idx, complement: true }, &mut cands);
        }
    }
    cands.sort_by(|a, b| {
        (a.1.indices.len(), a.1.complement, &a.1.indices).cmp(&(b.1.indices.len(), b.1.complement, &b.1.indices))
    });

    let mut out = Vec::new();
    let mut chosen: Vec<usize> = Vec::new();
    search_multisets(t, &cands, &u, max_outcomes, 0, &vec![S::zero(); d], &mut chosen, &mut out);
    Ok(out
        .into_iter()
        .map(|sel: Vec<usize>| {
            let effects: Vec<Vector<S>> = sel.iter().map(|&c| cands[c].0.clone()).collect();
            let name = sel.iter().map(|&c| term_label(&cands[c].1)).collect::<Vec<_>>().join("|");
            IdealMeasurement {
                measurement: Measurement::from_effects(name, effects),
                provenance: sel.iter().map(|&c| cands[c].1.clone()).collect(),
            }
        })
        .collect())
}

#[allow(clippy::too_many_arguments)]
fn search_multisets<S: Scalar>(
    t: &Theory<S>,
    cands: &[(Vector<S>, IdealTerm)],
    u: &[S],
    max_outcomes: usize,
    from: usize,
    partial: &[S],
    chosen: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if chosen.len() >= 2 && vec_approx_eq(partial, u, t.tol) {
        out.push(chosen.clone());
        return;
    }
    if chosen.len() == max_outcomes {
        return;
    }
    for c in from..cands.len() {
        let next = add(partial, &cands[c].0);
        // Remaining effects are nonnegative, so the partial sum must stay below u.
        if !is_valid_effect(t, &next) {
            continue;
        }
        chosen.push(c);
        search_multisets(t, cands, u, max_outcomes, c, &next, chosen, out);
        chosen.pop();
    }
}

fn term_label(term: &IdealTerm) -> String {
    let inner = term.indices.iter().map(|i| format!("e{i}")).collect::<Vec<_>>().join("+");
    if term.complement {
        format!("u-({inner})")
    } else {
        inner
    }
}

/// `<u, f>`, the normalization of `f` as a state.
pub fn unit_weight<S: Scalar>(t: &Theory<S>, f: &[S]) -> S {
    t.pair(f, t.unit_effect())
}

/// `f / <u, f>`, checked to be a state.
pub fn eigenstate<S: Scalar>(t: &Theory<S>, f: &Effect<S>) -> Result<Vector<S>> {
    check_conforming(t)?;
    eigenstate_unchecked(t, &f.covector)
}

/// [`eigenstate`] without the conformance check (the membership LP still runs).
pub fn eigenstate_unchecked<S: Scalar>(t: &Theory<S>, f: &[S]) -> Result<Vector<S>> {
    let w = unit_weight(t, f);
    if w.sign_tol(t.tol) != std::cmp::Ordering::Greater {
        return Err(GptError::InvalidEffect("effect has no weight on the unit effect".into()));
    }
    let state = scale(f, &(S::one() / w));
    if !t.contains_state(&state)? {
        return Err(GptError::NotConforming("normalized effect is not a state".into()));
    }
    Ok(state)
}

/// `<f, f / <u, f>>`, equal to 1 for ideal effects.
pub fn ideal_eigenvalue<S: Scalar>(t: &Theory<S>, f: &[S]) -> S {
    let w = unit_weight(t, f);
    t.pair(f, f) / w
}

/// `lambda f_a + (1 - lambda) u / |A|`.
pub fn fuzzify<S: Scalar>(m: &Measurement<S>, lambda: &S) -> Result<Measurement<S>> {
    if lambda.sign_tol(0.0) == std::cmp::Ordering::Less
        || (lambda.clone() - S::one()).sign_tol(0.0) == std::cmp::Ordering::Greater
    {
        return Err(GptError::InvalidParameter(format!("lambda {lambda} is outside [0, 1]")));
    }
    let Some(first) = m.effects.first() else { return Err(GptError::Empty("measurement effects")) };
    let d = first.covector.len();
    let u = sum_vectors(d, m.effects.iter().map(|e| &e.covector));
    let noise = scale(&u, &((S::one() - lambda.clone()) / S::from_i64(m.len() as i64)));
    let mut out = m.clone();
    out.name = format!("{}~{}", m.name, lambda);
    out.effects = m.effects.iter().map(|e| Effect::new(add(&scale(&e.covector, lambda), &noise))).collect();
    Ok(out)
}

fn even_polygon_size<S: Scalar>(t: &Theory<S>) -> Result<usize> {
    match t.kind {
        TheoryKind::Polygon { n } | TheoryKind::DiscApprox { m: n } if n % 2 == 0 => Ok(n),
        TheoryKind::Polygon { .. } | TheoryKind::DiscApprox { .. } => {
            Err(GptError::InvalidParameter("psi representation needs an even polygon".into()))
        }
        _ => Err(GptError::InvalidParameter("psi representation applies to built-in polygons".into())),
    }
}

/// `psi = diag(r_n, r_n, 1)`.
pub fn psi_matrix(n: usize) -> Matrix<f64> {
    let r = polygon_radius(n);
    Matrix::diagonal(&[r, r, 1.0])
}

pub fn psi_inverse_matrix(n: usize) -> Matrix<f64> {
    let r = polygon_radius(n);
    Matrix::diagonal(&[1.0 / r, 1.0 / r, 1.0])
}

/// States map by `psi`, effects by `psi^{-1}`; probabilities are unchanged.
pub fn psi_transform(t: &Theory<f64>) -> Result<Theory<f64>> {
    let n = even_polygon_size(t)?;
    let psi = psi_matrix(n);
    let vertices = t.vertices().iter().map(|v| psi.apply(v)).collect();
    let unit = psi_inverse_matrix(n).apply(t.unit_effect());
    let out = Theory::new(format!("psi-{}", t.name), vertices, unit, t.inner().clone(), t.tol)?;
    Ok(out.with_kind(TheoryKind::PsiPolygon { n }))
}

/// Back from the `psi` representation to the raw polygon.
pub fn psi_inverse_transform(t: &Theory<f64>) -> Result<Theory<f64>> {
    let TheoryKind::PsiPolygon { n } = t.kind else {
        return Err(GptError::InvalidParameter("theory is not in the psi representation".into()));
    };
    let vertices = t.vertices().iter().map(|v| psi_inverse_matrix(n).apply(v)).collect();
    let unit = psi_matrix(n).apply(t.unit_effect());
    let name = t.name.strip_prefix("psi-").unwrap_or(&t.name).to_string();
    Ok(Theory::new(name, vertices, unit, t.inner().clone(), t.tol)?.with_kind(TheoryKind::Polygon { n }))
}

pub fn psi_effect(n: usize, e: &[f64]) -> Vector<f64> {
    psi_inverse_matrix(n).apply(e)
}

pub fn psi_measurement(n: usize, m: &Measurement<f64>) -> Measurement<f64> {
    let mut out = m.clone();
    out.effects = m.effects.iter().map(|e| Effect::new(psi_effect(n, &e.covector))).collect();
    out
}

/// Binary ideal pair whose effects' Bloch vectors are at a right angle:
/// `F = {e(1), e(1 + n/2)}` and `G = {e(1 + n/4), e(1 + n/4 + n/2)}`.
///
/// Works on the raw polygon (raw pure effects) and on its `psi`
/// representation.
pub fn perpendicular_ideal_pair(t: &Theory<f64>) -> Result<(IdealMeasurement<f64>, IdealMeasurement<f64>)> {
    let (n, pure) = match t.kind {
        TheoryKind::PsiPolygon { n } => (n, psi_pure_effects(n)),
        TheoryKind::Polygon { n } | TheoryKind::DiscApprox { m: n } => (n, polygon_pure_effects(n)),
        _ => return Err(GptError::InvalidParameter("perpendicular pairs are defined for polygons".into())),
    };
    if n % 4 != 0 {
        return Err(GptError::InvalidParameter(format!("n = {n} is not a multiple of 4")));
    }
    let pair = |i: usize, name: &str| {
        let j = (i + n / 2) % n;
        IdealMeasurement {
            measurement: Measurement::from_effects(name, vec![pure[i].clone(), pure[j].clone()]),
            provenance: vec![
                IdealTerm { indices: vec![i], complement: false },
                IdealTerm { indices: vec![j], complement: false },
            ],
        }
    };
    Ok((pair(1, "F"), pair(1 + n / 4, "G")))
}

/// Raw even-polygon measurement mapped into the `psi` representation, or the
/// identity for any other theory.
pub fn to_psi_if_even(t: &Theory<f64>, m: &Measurement<f64>) -> Measurement<f64> {
    match t.kind {
        TheoryKind::PsiPolygon { n } => psi_measurement(n, m),
        _ => m.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_classical, make_polygon};
    use crate::scalar::Rational;
    use crate::symmetry::canonicalize;

    #[test]
    fn triangle_pure_effects() {
        let t = make_polygon(3).unwrap();
        let e = indecomposable_pure_effects(&t).unwrap();
        let raw = polygon_pure_effects(3);
        for (a, b) in e.iter().zip(&raw) {
            assert!(vec_approx_eq(&a.covector, b, 1e-12));
        }
        assert!(t.pair(&e[0].covector, &t.vertices()[1]).abs() < 1e-12);
    }

    #[test]
    fn raw_even_polygon_is_not_conforming() {
        assert!(matches!(indecomposable_pure_effects(&make_polygon(4).unwrap()), Err(GptError::NotConforming(_))));
        let c = make_classical::<Rational>(2).unwrap();
        assert!(indecomposable_pure_effects(&c).is_err());
    }

    #[test]
    fn square_has_two_binary_ideal_measurements() {
        let t = psi_transform(&make_polygon(4).unwrap()).unwrap();
        let ms = enumerate_ideal_measurements(&t, 2).unwrap();
        assert_eq!(ms.len(), 2);
    }

    #[test]
    fn pentagon_binary_ideal_measurements() {
        let t = make_polygon(5).unwrap();
        let ms = enumerate_ideal_measurements(&t, 2).unwrap();
        assert_eq!(ms.len(), 5);
        for m in &ms {
            assert!(m.provenance.iter().any(|p| p.complement));
        }
    }

    #[test]
    fn classical_trit_ideal_measurements() {
        let c = canonicalize(&make_classical::<Rational>(2).unwrap()).unwrap();
        let ms = enumerate_ideal_measurements(&c.theory, 3).unwrap();
        assert_eq!(ms.len(), 4);
        assert_eq!(ms.iter().filter(|m| m.measurement.len() == 3).count(), 1);
    }

    #[test]
    fn eigenstates() {
        let t = make_polygon(3).unwrap();
        let e = indecomposable_pure_effects(&t).unwrap();
        assert!(vec_approx_eq(&eigenstate(&t, &e[0]).unwrap(), &t.vertices()[0], 1e-12));
        assert!(vec_approx_eq(&eigenstate(&t, &t.unit()).unwrap(), &[0.0, 0.0, 1.0], 1e-12));
        let s = psi_transform(&make_polygon(4).unwrap()).unwrap();
        let e = indecomposable_pure_effects(&s).unwrap();
        let a = -PI / 4.0;
        assert!(vec_approx_eq(&eigenstate(&s, &e[0]).unwrap(), &[a.cos(), a.sin(), 1.0], 1e-12));
    }

    #[test]
    fn fuzzify_examples() {
        let t = make_polygon(5).unwrap();
        let m = &enumerate_ideal_measurements(&t, 2).unwrap()[0].measurement;
        let same = fuzzify(m, &1.0).unwrap();
        assert!(vec_approx_eq(&same.effects[0].covector, &m.effects[0].covector, 1e-15));
        let flat = fuzzify(m, &0.0).unwrap();
        assert!(vec_approx_eq(&flat.effects[1].covector, &[0.0, 0.0, 0.5], 1e-15));
        let half = fuzzify(m, &0.5).unwrap();
        let expected = add(&scale(&m.effects[0].covector, &0.5), &[0.0, 0.0, 0.25]);
        assert!(vec_approx_eq(&half.effects[0].covector, &expected, 1e-15));
        assert!(fuzzify(m, &1.5).is_err());
    }

    #[test]
    fn psi_representation() {
        let p = make_polygon(4).unwrap();
        let s = psi_transform(&p).unwrap();
        assert!(vec_approx_eq(&s.vertices()[1], &[0.0, 2f64.sqrt(), 1.0], 1e-12));
        let e = psi_pure_effects(4);
        assert!(vec_approx_eq(&add(&e[0], &e[2]), &[0.0, 0.0, 1.0], 1e-15));
        let back = psi_inverse_transform(&s).unwrap();
        for (a, b) in back.vertices().iter().zip(p.vertices()) {
            assert!(vec_approx_eq(a, b, 1e-12));
        }
        assert!(psi_transform(&make_polygon(5).unwrap()).is_err());
    }

    #[test]
    fn perpendicular_pairs() {
        let s = psi_transform(&make_polygon(8).unwrap()).unwrap();
        let (f, g) = perpendicular_ideal_pair(&s).unwrap();
        let (a, b) = (&f.measurement.effects[0].covector, &g.measurement.effects[0].covector);
        assert!((a[0] * b[0] + a[1] * b[1]).abs() < 1e-15);
        assert!(((a[1]).atan2(a[0]) - PI / 8.0).abs() < 1e-12);
        assert!(((b[1]).atan2(b[0]) - 5.0 * PI / 8.0).abs() < 1e-12);
        assert!(perpendicular_ideal_pair(&psi_transform(&make_polygon(6).unwrap()).unwrap()).is_err());
    }
}
