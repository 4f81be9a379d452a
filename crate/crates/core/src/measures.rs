//! Widths and distances between measurements on a finite outcome metric space.
//!
//! Every quantity here is a supremum or infimum of something affine or concave
//! in the state, so it is evaluated exactly on the vertices of the state space.

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{GptError, Result};
use crate::linalg::{Matrix, Vector};
use crate::lp::{lp_solve, LinearProgram, LpStatus, Relation, Sense};
use crate::model::{probabilities, Measurement, Theory};
use crate::scalar::{approx_ge, max_of, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetricSpace<S: Scalar> {
    pub points: Vec<String>,
    pub dist: Matrix<S>,
}

impl<S: Scalar> FiniteMetricSpace<S> {
    /// Checks zero diagonal, positivity, symmetry and every triangle inequality.
    pub fn new(points: Vec<String>, dist: Matrix<S>, tol: f64) -> Result<Self> {
        let k = points.len();
        if dist.rows() != k || dist.cols() != k {
            return Err(GptError::InvalidMetric(format!(
                "{k} points but a {}x{} distance matrix",
                dist.rows(),
                dist.cols()
            )));
        }
        for a in 0..k {
            if !dist[(a, a)].is_zero_tol(tol) {
                return Err(GptError::InvalidMetric(format!("d({a},{a}) is not zero")));
            }
            for b in 0..k {
                if a != b && dist[(a, b)].sign_tol(tol) != Ordering::Greater {
                    return Err(GptError::InvalidMetric(format!("d({a},{b}) is not positive")));
                }
                if !(dist[(a, b)].clone() - dist[(b, a)].clone()).is_zero_tol(tol) {
                    return Err(GptError::InvalidMetric(format!("d({a},{b}) != d({b},{a})")));
                }
                for c in 0..k {
                    let lhs = dist[(a, c)].clone();
                    let rhs = dist[(a, b)].clone() + dist[(b, c)].clone();
                    if (lhs - rhs).sign_tol(tol) == Ordering::Greater {
                        return Err(GptError::InvalidMetric(format!("triangle inequality fails for ({a},{b},{c})")));
                    }
                }
            }
        }
        Ok(Self { points, dist })
    }

    /// `d(i, j) = |i - j|` on the label positions.
    pub fn line(points: Vec<String>) -> Self {
        let k = points.len();
        let mut dist = Matrix::zeros(k, k);
        for a in 0..k {
            for b in 0..k {
                dist[(a, b)] = S::from_i64((a as i64 - b as i64).abs());
            }
        }
        Self { points, dist }
    }

    /// `d(a, b) = 1` for every pair of distinct labels.
    pub fn discrete(points: Vec<String>) -> Self {
        let k = points.len();
        let mut dist = Matrix::zeros(k, k);
        for a in 0..k {
            for b in 0..k {
                if a != b {
                    dist[(a, b)] = S::one();
                }
            }
        }
        Self { points, dist }
    }

    pub fn scaled(&self, c: &S) -> Self {
        Self { points: self.points.clone(), dist: self.dist.scale(c) }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn d(&self, a: usize, b: usize) -> &S {
        &self.dist[(a, b)]
    }

    /// Candidate widths around `a`: `0` and `2 d(x, a)`, ascending, deduplicated.
    pub fn candidates(&self, a: usize) -> Vec<S> {
        let mut c: Vec<S> = vec![S::zero()];
        c.extend((0..self.len()).map(|x| S::from_i64(2) * self.d(x, a).clone()));
        sort_dedup(c)
    }

    /// Labels inside the closed ball of diameter `w` around `a`.
    pub fn ball(&self, a: usize, w: &S) -> Vec<usize> {
        (0..self.len())
            .filter(|&x| (S::from_i64(2) * self.d(x, a).clone() - w.clone()).sign_tol(0.0) != Ordering::Greater)
            .collect()
    }

    pub fn to_f64(&self) -> FiniteMetricSpace<f64> {
        FiniteMetricSpace { points: self.points.clone(), dist: self.dist.to_f64() }
    }
}

fn sort_dedup<S: Scalar>(mut v: Vec<S>) -> Vec<S> {
    v.sort_by(|a, b| (a.clone() - b.clone()).sign_tol(0.0));
    v.dedup_by(|a, b| (a.clone() - b.clone()).is_zero_tol(0.0));
    v
}

#[derive(Debug, Clone)]
pub struct OutcomeDistribution<S: Scalar> {
    pub metric: FiniteMetricSpace<S>,
    pub probs: Vec<S>,
    /// Slack used when comparing masses against thresholds.
    pub tol: f64,
}

impl<S: Scalar> OutcomeDistribution<S> {
    pub fn new(metric: FiniteMetricSpace<S>, probs: Vec<S>, tol: f64) -> Result<Self> {
        if probs.len() != metric.len() {
            return Err(GptError::DimensionMismatch { expected: metric.len(), found: probs.len() });
        }
        if probs.iter().any(|p| p.sign_tol(tol) == Ordering::Less) {
            return Err(GptError::InvalidParameter("negative probability".into()));
        }
        let total = probs.iter().fold(S::zero(), |a, p| a + p.clone());
        if !(total - S::one()).is_zero_tol(tol * probs.len().max(1) as f64) {
            return Err(GptError::InvalidParameter("probabilities do not sum to 1".into()));
        }
        Ok(Self { metric, probs, tol })
    }

    fn mass(&self, set: &[usize]) -> S {
        set.iter().fold(S::zero(), |acc, &x| acc + self.probs[x].clone())
    }
}

fn check_epsilon<S: Scalar>(eps: &S) -> Result<()> {
    if eps.sign_tol(0.0) == Ordering::Less || (eps.clone() - S::one()).sign_tol(0.0) == Ordering::Greater {
        return Err(GptError::InvalidParameter(format!("epsilon {eps} is outside [0, 1]")));
    }
    Ok(())
}

/// Smallest diameter `w` such that some ball of diameter `w` carries mass at
/// least `1 - eps`.
pub fn overall_width<S: Scalar>(p: &OutcomeDistribution<S>, eps: &S) -> Result<S> {
    overall_width_with_slack(p, eps, p.tol)
}

/// [`overall_width`] with an explicit slack on the mass comparison.
pub fn overall_width_with_slack<S: Scalar>(p: &OutcomeDistribution<S>, eps: &S, slack: f64) -> Result<S> {
    check_epsilon(eps)?;
    let need = S::one() - eps.clone();
    let mut all: Vec<S> = Vec::new();
    for a in 0..p.metric.len() {
        all.extend(p.metric.candidates(a));
    }
    for w in sort_dedup(all) {
        if (0..p.metric.len()).any(|a| approx_ge(&p.mass(&p.metric.ball(a, &w)), &need, slack)) {
            return Ok(w);
        }
    }
    Err(GptError::InvalidParameter("distribution carries no mass".into()))
}

pub fn localization_error<S: Scalar>(p: &OutcomeDistribution<S>) -> S {
    let max = p.probs.iter().cloned().fold(S::zero(), max_of);
    S::one() - max
}

/// Outcome distribution of `m` on the state `w`; rejects points outside the state space.
pub fn distribution<S: Scalar>(t: &Theory<S>, m: &Measurement<S>, w: &[S]) -> Result<OutcomeDistribution<S>> {
    if !t.contains_state(w)? {
        return Err(GptError::OutsideStateSpace);
    }
    OutcomeDistribution::new(m.metric_or_default(), probabilities(t, m, w), t.tol)
}

/// Same as [`distribution`] for a state already known to lie in the state space.
pub fn distribution_unchecked<S: Scalar>(t: &Theory<S>, m: &Measurement<S>, w: &[S]) -> OutcomeDistribution<S> {
    OutcomeDistribution { metric: m.metric_or_default(), probs: probabilities(t, m, w), tol: t.tol }
}

fn same_outcomes<S: Scalar>(a: &Measurement<S>, b: &Measurement<S>) -> Result<()> {
    if a.len() != b.len() {
        return Err(GptError::InvalidMeasurement(format!("outcome sets differ in size ({} vs {})", a.len(), b.len())));
    }
    Ok(())
}

/// Vertices on which `f` evaluates to 1; for a polytope these span the
/// eigenstate face of `f`.
pub fn eigen_vertices<S: Scalar>(t: &Theory<S>, f: &[S]) -> Vec<usize> {
    (0..t.vertices().len()).filter(|&k| (t.pair(f, &t.vertices()[k]) - S::one()).is_zero_tol(t.tol)).collect()
}

/// Error-bar width of `approx` relative to the ideal `ideal`.
///
/// For each outcome `a`, the condition on the eigenstates of `f_a` is affine
/// in the state, so only the vertices of its eigenstate face are checked.
pub fn error_bar_width<S: Scalar>(
    t: &Theory<S>,
    approx: &Measurement<S>,
    ideal: &Measurement<S>,
    eps: &S,
) -> Result<S> {
    error_bar_width_with_slack(t, approx, ideal, eps, t.tol)
}

pub fn error_bar_width_with_slack<S: Scalar>(
    t: &Theory<S>,
    approx: &Measurement<S>,
    ideal: &Measurement<S>,
    eps: &S,
    slack: f64,
) -> Result<S> {
    check_epsilon(eps)?;
    same_outcomes(approx, ideal)?;
    let metric = ideal.metric_or_default();
    let need = S::one() - eps.clone();
    let mut width = S::zero();
    for (a, f) in ideal.effects.iter().enumerate() {
        let face = eigen_vertices(t, &f.covector);
        if face.is_empty() {
            return Err(GptError::NotConforming(format!(
                "effect {} has no eigenstate among the vertices",
                ideal.outcomes[a]
            )));
        }
        let probs: Vec<Vec<S>> = face.iter().map(|&k| probabilities(t, approx, &t.vertices()[k])).collect();
        let wa = metric
            .candidates(a)
            .into_iter()
            .find(|w| {
                let ball = metric.ball(a, w);
                probs.iter().all(|p| {
                    let mass = ball.iter().fold(S::zero(), |acc, &x| acc + p[x].clone());
                    approx_ge(&mass, &need, slack)
                })
            })
            .expect("the largest candidate ball holds every outcome");
        width = max_of(width, wa);
    }
    Ok(width)
}

/// Werner distance: largest gap of expectation values over 1-Lipschitz
/// outcome functions and all states.
///
/// The objective is shift invariant in `h`, so `h` is pinned to zero on the
/// first outcome and two LPs are solved per vertex.
pub fn werner_distance<S: Scalar>(t: &Theory<S>, approx: &Measurement<S>, other: &Measurement<S>) -> Result<S> {
    same_outcomes(approx, other)?;
    let metric = other.metric_or_default();
    let k = metric.len();
    let mut best = S::zero();
    for w in t.vertices() {
        let c: Vec<S> = approx
            .effects
            .iter()
            .zip(&other.effects)
            .map(|(a, b)| t.pair(&a.covector, w) - t.pair(&b.covector, w))
            .collect();
        if c.iter().all(|x| x.is_zero_tol(0.0)) {
            continue;
        }
        for sign in [S::one(), -S::one()] {
            // Variables h_1 .. h_{k-1}; h_0 = 0.
            let mut lp = LinearProgram::new(k - 1, Sense::Maximize);
            lp.set_objective(c[1..].iter().map(|x| sign.clone() * x.clone()).collect());
            for a in 0..k {
                for b in (a + 1)..k {
                    let mut terms: Vec<(usize, S)> = vec![(b - 1, -S::one())];
                    if a > 0 {
                        terms.push((a - 1, S::one()));
                    }
                    lp.add_sparse(&terms, Relation::Le, metric.d(a, b).clone());
                    let neg: Vec<(usize, S)> = terms.iter().map(|(j, v)| (*j, -v.clone())).collect();
                    lp.add_sparse(&neg, Relation::Le, metric.d(a, b).clone());
                }
            }
            let r = lp_solve(&lp)?;
            if r.status != LpStatus::Optimal {
                return Err(GptError::LpNumerics("Lipschitz-ball LP did not reach an optimum".into()));
            }
            best = max_of(best, r.value.expect("optimal value"));
        }
    }
    Ok(best)
}

/// `max_{k, a} |approx_a(w_k) - other_a(w_k)|`.
pub fn linf_distance<S: Scalar>(t: &Theory<S>, approx: &Measurement<S>, other: &Measurement<S>) -> Result<S> {
    same_outcomes(approx, other)?;
    let mut best = S::zero();
    for w in t.vertices() {
        for (a, b) in approx.effects.iter().zip(&other.effects) {
            best = max_of(best, (t.pair(&a.covector, w) - t.pair(&b.covector, w)).abs());
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Serialize)]
pub struct MinLeSum<S> {
    pub value: S,
    pub argmin: Vector<S>,
}

/// `LE(w^F) + LE(w^G)` at the state `w`.
pub fn le_sum_at<S: Scalar>(t: &Theory<S>, f: &Measurement<S>, g: &Measurement<S>, w: &[S]) -> S {
    let max_f = probabilities(t, f, w).into_iter().fold(S::zero(), max_of);
    let max_g = probabilities(t, g, w).into_iter().fold(S::zero(), max_of);
    S::from_i64(2) - max_f - max_g
}

/// Minimum of the concave `LE(w^F) + LE(w^G)`, attained at a vertex.
pub fn min_le_sum<S: Scalar>(t: &Theory<S>, f: &Measurement<S>, g: &Measurement<S>) -> MinLeSum<S> {
    let mut best: Option<(S, usize)> = None;
    for (k, w) in t.vertices().iter().enumerate() {
        let v = le_sum_at(t, f, g, w);
        if best.as_ref().map_or(true, |(b, _)| (v.clone() - b.clone()).sign_tol(0.0) == Ordering::Less) {
            best = Some((v, k));
        }
    }
    let (value, k) = best.expect("theories have vertices");
    MinLeSum { value, argmin: t.vertices()[k].clone() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn labels(k: usize) -> Vec<String> {
        (0..k).map(|i| i.to_string()).collect()
    }

    fn dist(p: Vec<f64>) -> OutcomeDistribution<f64> {
        let k = p.len();
        OutcomeDistribution::new(FiniteMetricSpace::line(labels(k)), p, 1e-9).unwrap()
    }

    #[test]
    fn metric_validation() {
        let bad = Matrix::from_rows(&[vec![0.0, 1.0, 5.0], vec![1.0, 0.0, 1.0], vec![5.0, 1.0, 0.0]]);
        assert!(FiniteMetricSpace::new(labels(3), bad, 1e-9).is_err());
        let asym = Matrix::from_rows(&[vec![0.0, 1.0], vec![2.0, 0.0]]);
        assert!(FiniteMetricSpace::new(labels(2), asym, 1e-9).is_err());
        let ok = FiniteMetricSpace::<f64>::line(labels(4));
        assert!(FiniteMetricSpace::new(labels(4), ok.dist.clone(), 1e-9).is_ok());
    }

    #[test]
    fn overall_width_examples() {
        assert_eq!(overall_width(&dist(vec![1.0, 0.0]), &0.3).unwrap(), 0.0);
        assert_eq!(overall_width(&dist(vec![0.5, 0.5]), &0.3).unwrap(), 2.0);
        assert_eq!(overall_width(&dist(vec![0.2, 0.3, 0.5]), &1.0).unwrap(), 0.0);
        assert!(overall_width(&dist(vec![0.5, 0.5]), &1.5).is_err());
    }

    #[test]
    fn localization_error_examples() {
        assert_eq!(localization_error(&dist(vec![0.0, 1.0])), 0.0);
        let third = Rational::from_ratio(1, 3);
        let p = OutcomeDistribution::new(
            FiniteMetricSpace::line(labels(3)),
            vec![third.clone(), third.clone(), third],
            0.0,
        )
        .unwrap();
        assert_eq!(localization_error(&p), Rational::from_ratio(2, 3));
    }

    #[test]
    fn rejects_bad_distributions() {
        let m = FiniteMetricSpace::<f64>::line(labels(2));
        assert!(OutcomeDistribution::new(m.clone(), vec![0.7, 0.7], 1e-9).is_err());
        assert!(OutcomeDistribution::new(m, vec![1.2, -0.2], 1e-9).is_err());
    }
}
