//! Verification of the uncertainty relations on concrete joints, randomized
//! batteries and report files.
//!
//! Every check scans the states `m_ab / <u, m_ab>` built from the joint and
//! reports the first one satisfying the inequalities.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Dirichlet, Distribution};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::compat::{
    degree_bound_closed_form, degree_bound_rhs, marginals, max_fuzz_lambda, min_mur_linf, JointMeasurement,
};
use crate::error::{GptError, Result};
use crate::ideal::{
    check_conforming, enumerate_ideal_measurements, fuzzify, ideal_eigenvalue, perpendicular_ideal_pair, psi_effect,
    psi_inverse_transform, psi_matrix, psi_transform, unit_weight, IdealMeasurement,
};
use crate::linalg::{add, scale, sum_vectors, Vector};
use crate::measures::{
    distribution_unchecked, error_bar_width_with_slack, linf_distance, localization_error, min_le_sum,
    overall_width_with_slack, werner_distance,
};
use crate::model::{
    builtin_theory, polygon_radius, probabilities, validate_measurement, Effect, Measurement, Theory, TheoryKind,
};
use crate::symmetry::canonicalize;

/// Absolute slack granted to the larger side of every inequality.
pub const THEOREM_SLACK: f64 = 1e-9;

/// Joint effects with less weight than this on `u` yield no candidate state.
pub const CANDIDATE_WEIGHT_FLOOR: f64 = 1e-7;

pub const DEFAULT_EPS_GRID: [f64; 4] = [0.1, 0.2, 0.3, 0.45];

#[derive(Debug, Clone, Serialize)]
pub struct Candidate {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
    pub state: Vector<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Inequality {
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl Inequality {
    fn ge(label: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self { label: label.into(), lhs, rhs, holds: lhs >= rhs - THEOREM_SLACK }
    }

    fn le(label: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self { label: label.into(), lhs, rhs, holds: lhs <= rhs + THEOREM_SLACK }
    }

    /// Margin by which the inequality holds (negative when violated).
    pub fn margin(&self) -> f64 {
        if self.label.contains("<=") {
            self.rhs - self.lhs
        } else {
            self.lhs - self.rhs
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanRecord {
    pub a: usize,
    pub b: usize,
    pub state: Vector<f64>,
    pub inequalities: Vec<Inequality>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub check: String,
    pub theory: String,
    pub n: Option<usize>,
    pub inputs: Value,
    pub witness: Option<Vector<f64>>,
    pub witness_pair: Option<(usize, usize)>,
    pub inequalities: Vec<Inequality>,
    /// Whether the candidate singled out by the proof argument is a witness.
    pub proof_candidate_passes: Option<bool>,
    pub side_checks: Vec<Inequality>,
    pub verdict: bool,
    /// Full candidate scan, kept only when the verdict fails.
    pub scan: Vec<ScanRecord>,
}

impl VerificationReport {
    /// Turns a failed verdict into an error carrying the report.
    pub fn into_result(self) -> Result<Self> {
        if self.verdict {
            Ok(self)
        } else {
            Err(GptError::VerificationFailed(serde_json::to_string(&self)?))
        }
    }

    /// The inequality with the smallest margin.
    pub fn tightest(&self) -> Option<&Inequality> {
        self.inequalities.iter().chain(&self.side_checks).min_by(|x, y| x.margin().total_cmp(&y.margin()))
    }
}

fn theory_n(t: &Theory<f64>) -> Option<usize> {
    match t.kind {
        TheoryKind::Classical { n } | TheoryKind::Polygon { n } | TheoryKind::PsiPolygon { n } => Some(n),
        TheoryKind::DiscApprox { m } => Some(m),
        TheoryKind::Custom => None,
    }
}

/// States `m_ab / <u, m_ab>` for every joint effect with weight on `u`.
pub fn witness_candidates(t: &Theory<f64>, j: &JointMeasurement<f64>) -> Result<Vec<Candidate>> {
    check_conforming(t)?;
    let mut out = Vec::new();
    for (a, b, m) in j.all_effects() {
        let weight = unit_weight(t, m);
        if weight <= CANDIDATE_WEIGHT_FLOOR.max(t.tol) {
            continue;
        }
        let state = scale(m, &(1.0 / weight));
        if !t.contains_state(&state)? {
            return Err(GptError::NotConforming(format!("normalized joint effect ({a},{b}) is not a state")));
        }
        out.push(Candidate { a, b, weight, state });
    }
    Ok(out)
}

/// Precomputed pieces shared by all checks on one joint.
pub struct JointContext {
    pub mf: Measurement<f64>,
    pub mg: Measurement<f64>,
    pub candidates: Vec<Candidate>,
}

impl JointContext {
    pub fn new(t: &Theory<f64>, f: &Measurement<f64>, g: &Measurement<f64>, j: &JointMeasurement<f64>) -> Result<Self> {
        check_inputs(t, f, g, j)?;
        let (mut mf, mut mg) = marginals(j);
        mf.metric = f.metric.clone();
        mg.metric = g.metric.clone();
        Ok(Self { mf, mg, candidates: witness_candidates(t, j)? })
    }
}

fn check_ideal(t: &Theory<f64>, m: &Measurement<f64>) -> Result<()> {
    validate_measurement(t, m)?;
    for e in &m.effects {
        let v = ideal_eigenvalue(t, &e.covector);
        if (v - 1.0).abs() > 1e-7 {
            return Err(GptError::InvalidMeasurement(format!("{} is not ideal: <f, f / <u, f>> = {v}", m.name)));
        }
    }
    Ok(())
}

fn check_inputs(t: &Theory<f64>, f: &Measurement<f64>, g: &Measurement<f64>, j: &JointMeasurement<f64>) -> Result<()> {
    check_ideal(t, f)?;
    check_ideal(t, g)?;
    if j.shape() != (f.len(), g.len()) {
        return Err(GptError::InvalidMeasurement("joint outcome grid does not match F x G".into()));
    }
    j.validate(t)
}

fn check_eps_pair(e1: f64, e2: f64, open_at_zero: bool) -> Result<()> {
    let bad = |e: f64| if open_at_zero { !(e > 0.0 && e <= 1.0) } else { !(0.0..=1.0).contains(&e) };
    if bad(e1) || bad(e2) || e1 + e2 > 1.0 + 1e-12 {
        return Err(GptError::InvalidParameter(format!("epsilon pair ({e1}, {e2}) is not admissible")));
    }
    Ok(())
}

fn base_report(check: &str, t: &Theory<f64>, inputs: Value) -> VerificationReport {
    VerificationReport {
        check: check.into(),
        theory: t.name.clone(),
        n: theory_n(t),
        inputs,
        witness: None,
        witness_pair: None,
        inequalities: Vec::new(),
        proof_candidate_passes: None,
        side_checks: Vec::new(),
        verdict: false,
        scan: Vec::new(),
    }
}

/// Fills witness, inequalities and verdict from per-candidate evaluations.
fn conclude(
    mut report: VerificationReport,
    cands: &[Candidate],
    evals: Vec<Vec<Inequality>>,
    proof_index: Option<usize>,
) -> VerificationReport {
    let passing = evals.iter().position(|ineqs| ineqs.iter().all(|i| i.holds));
    report.proof_candidate_passes = proof_index.map(|k| evals[k].iter().all(|i| i.holds));
    match passing {
        Some(k) => {
            report.witness = Some(cands[k].state.clone());
            report.witness_pair = Some((cands[k].a, cands[k].b));
            report.inequalities = evals[k].clone();
            report.verdict =
                report.side_checks.iter().all(|i| i.holds) && report.proof_candidate_passes.unwrap_or(true);
        }
        None => {
            if let Some(k) = proof_index {
                report.inequalities = evals[k].clone();
            }
            report.verdict = false;
        }
    }
    if !report.verdict {
        report.scan = cands
            .iter()
            .zip(evals)
            .map(|(c, inequalities)| ScanRecord { a: c.a, b: c.b, state: c.state.clone(), inequalities })
            .collect();
    }
    report
}

fn pair_inputs(f: &Measurement<f64>, g: &Measurement<f64>) -> Value {
    json!({ "F": f.name, "G": g.name })
}

/// Error-bar widths against overall widths at `eps1 + eps2`.
pub fn verify_thm1(
    t: &Theory<f64>,
    f: &Measurement<f64>,
    g: &Measurement<f64>,
    j: &JointMeasurement<f64>,
    eps1: f64,
    eps2: f64,
) -> Result<VerificationReport> {
    check_eps_pair(eps1, eps2, false)?;
    let ctx = JointContext::new(t, f, g, j)?;
    thm1_with(t, f, g, &ctx, eps1, eps2)
}

pub fn thm1_with(
    t: &Theory<f64>,
    f: &Measurement<f64>,
    g: &Measurement<f64>,
    ctx: &JointContext,
    eps1: f64,
    eps2: f64,
) -> Result<VerificationReport> {
    check_eps_pair(eps1, eps2, false)?;
    let w1 = error_bar_width_with_slack(t, &ctx.mf, f, &eps1, THEOREM_SLACK)?;
    let w2 = error_bar_width_with_slack(t, &ctx.mg, g, &eps2, THEOREM_SLACK)?;
    let eps = eps1 + eps2;
    let mut evals = Vec::with_capacity(ctx.candidates.len());
    for c in &ctx.candidates {
        let wf = overall_width_with_slack(&distribution_unchecked(t, f, &c.state), &eps, 3.0 * THEOREM_SLACK)?;
        let wg = overall_width_with_slack(&distribution_unchecked(t, g, &c.state), &eps, 3.0 * THEOREM_SLACK)?;
        evals.push(vec![
            Inequality::ge("EBW_eps1(MF,F) >= W_eps(wF)", w1, wf),
            Inequality::ge("EBW_eps2(MG,G) >= W_eps(wG)", w2, wg),
        ]);
    }
    // The proof picks the pair maximizing the ball masses around (a', b').
    let (ma, mb) = (f.metric_or_default(), g.metric_or_default());
    let score = |c: &Candidate| {
        let pf = probabilities(t, f, &c.state);
        let pg = probabilities(t, g, &c.state);
        ma.ball(c.a, &w1).iter().map(|&a| pf[a]).sum::<f64>() + mb.ball(c.b, &w2).iter().map(|&b| pg[b]).sum::<f64>()
    };
    let proof = argmax(ctx.candidates.iter().map(score));
    let mut inputs = pair_inputs(f, g);
    inputs["eps1"] = json!(eps1);
    inputs["eps2"] = json!(eps2);
    Ok(conclude(base_report("thm1", t, inputs), &ctx.candidates, evals, proof))
}

fn argmax(values: impl Iterator<Item = f64>) -> Option<usize> {
    values
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (k, v)| match best {
            Some((_, b)) if b >= v => best,
            _ => Some((k, v)),
        })
        .map(|(k, _)| k)
}

/// Werner distances against scaled overall widths.
pub fn verify_cor1(
    t: &Theory<f64>,
    f: &Measurement<f64>,
    g: &Measurement<f64>,
    j: &JointMeasurement<f64>,
    eps1: f64,
    eps2: f64,
) -> Result<VerificationReport> {
    check_eps_pair(eps1, eps2, true)?;
    let ctx = JointContext::new(t, f, g, j)?;
    let dw = werner_pair(t, f, g, &ctx)?;
    cor1_with(t, f, g, &ctx, dw, eps1, eps2)
}

/// `(D_W(MF, F), D_W(MG, G))`.
pub fn werner_pair(
    t: &Theory<f64>,
    f: &Measurement<f64>,
    g: &Measurement<f64>,
    ctx: &JointContext,
) -> Result<(f64, f64)> {
    Ok((werner_distance(t, &ctx.mf, f)?, werner_distance(t, &ctx.mg, g)?))
}

pub fn cor1_with(
    t: &Theory<f64>,
    f: &Measurement<f64>,
    g: &Measurement<f64>,
    ctx: &JointContext,
    dw: (f64, f64),
    eps1: f64,
    eps2: f64,
) -> Result<VerificationReport> {
    check_eps_pair(eps1, eps2, true)?;
    let eps = eps1 + eps2;
    let mut evals = Vec::with_capacity(ctx.candidates.len());
    for c in &ctx.candidates {
        let wf = overall_width_with_slack(&distribution_unchecked(t, f, &c.state), &eps, 3.0 * THEOREM_SLACK)?;
        let wg = overall_width_with_slack(&distribution_unchecked(t, g, &c.state), &eps, 3.0 * THEOREM_SLACK)?;
        evals.push(vec![
            Inequality::ge("D_W(MF,F) >= eps1/2 W_eps(wF)", dw.0, eps1 / 2.0 * wf),
            Inequality::ge("D_W(MG,G) >= eps2/2 W_eps(wG)", dw.1, eps2 / 2.0 * wg),
        ]);
    }
    let mut inputs = pair_inputs(f, g);
    inputs["eps1"] = json!(eps1);
    inputs["eps2"] = json!(eps2);
    Ok(conclude(base_report("cor1", t, inputs), &ctx.candidates, evals, None))
}

/// l-infinity errors against the localization errors.
pub fn verify_thm2(
    t: &Theory<f64>,
    f: &Measurement<f64>,
    g: &Measurement<f64>,
    j: &JointMeasurement<f64>,
) -> Result<VerificationReport> {
    let ctx = JointContext::new(t, f, g, j)?;
    thm2_with(t, f, g, &ctx)
}

pub fn thm2_with(
    t: &Theory<f64>,
    f: &Measurement<f64>,
    g: &Measurement<f64>,
    ctx: &JointContext,
) -> Result<VerificationReport> {
    let lhs = linf_distance(t, &ctx.mf, f)? + linf_distance(t, &ctx.mg, g)?;
    let le = |c: &Candidate| {
        localization_error(&distribution_unchecked(t, f, &c.state))
            + localization_error(&distribution_unchecked(t, g, &c.state))
    };
    let evals: Vec<Vec<Inequality>> = ctx
        .candidates
        .iter()
        .map(|c| vec![Inequality::ge("Dinf(MF,F)+Dinf(MG,G) >= LE(wF)+LE(wG)", lhs, le(c))])
        .collect();
    // The proof picks the pair with the smallest LE sum in its own labels.
    let proof = argmax(ctx.candidates.iter().map(|c| {
        let pf = probabilities(t, f, &c.state);
        let pg = probabilities(t, g, &c.state);
        pf[c.a] + pg[c.b]
    }));
    let mut report = base_report("thm2", t, pair_inputs(f, g));
    report.side_checks.push(Inequality::ge("Dinf sum >= min LE sum", lhs, min_le_sum(t, f, g).value));
    Ok(conclude(report, &ctx.candidates, evals, proof))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum EvenMode {
    Thm1 { eps1: f64, eps2: f64 },
    Cor1 { eps1: f64, eps2: f64 },
    Thm2,
}

/// Raw even-polygon inputs checked in the `psi` representation.
pub fn verify_thm3_even(
    t: &Theory<f64>,
    f: &Measurement<f64>,
    g: &Measurement<f64>,
    j: &JointMeasurement<f64>,
    mode: EvenMode,
) -> Result<VerificationReport> {
    let ctx = EvenContext::new(t, f, g, j)?;
    ctx.verify(mode, None)
}

/// Raw even-polygon inputs and their `psi` images.
pub struct EvenContext {
    pub n: usize,
    pub psi_theory: Theory<f64>,
    pub f: Measurement<f64>,
    pub g: Measurement<f64>,
    pub joint: JointContext,
    pub deviation: f64,
}

impl EvenContext {
    pub fn new(t: &Theory<f64>, f: &Measurement<f64>, g: &Measurement<f64>, j: &JointMeasurement<f64>) -> Result<Self> {
        let n = match t.kind {
            TheoryKind::Polygon { n } | TheoryKind::DiscApprox { m: n } => n,
            _ => return Err(GptError::InvalidParameter("expected a raw polygon theory".into())),
        };
        if n % 2 == 1 {
            return Err(GptError::InvalidParameter(format!("n = {n} is odd")));
        }
        let pt = psi_transform(t)?;
        let map = |m: &Measurement<f64>| {
            let mut out = m.clone();
            out.effects = m.effects.iter().map(|e| Effect::new(psi_effect(n, &e.covector))).collect();
            out
        };
        let (pf, pg) = (map(f), map(g));
        let mut pj = j.clone();
        for row in pj.effects.iter_mut() {
            for e in row.iter_mut() {
                *e = psi_effect(n, e);
            }
        }
        // Probabilities must agree vertex by vertex across the two representations.
        let mut deviation: f64 = 0.0;
        for (rv, pv) in t.vertices().iter().zip(pt.vertices()) {
            for (raw, psi) in [(f, &pf), (g, &pg)] {
                for (x, y) in probabilities(t, raw, rv).iter().zip(probabilities(&pt, psi, pv)) {
                    deviation = deviation.max((x - y).abs());
                }
            }
            for ((_, _, rm), (_, _, pm)) in j.all_effects().zip(pj.all_effects()) {
                deviation = deviation.max((t.pair(rm, rv) - pt.pair(pm, pv)).abs());
            }
        }
        let joint = JointContext::new(&pt, &pf, &pg, &pj)?;
        Ok(Self { n, psi_theory: pt, f: pf, g: pg, joint, deviation })
    }

    pub fn verify(&self, mode: EvenMode, dw: Option<(f64, f64)>) -> Result<VerificationReport> {
        let t = &self.psi_theory;
        let mut report = match mode {
            EvenMode::Thm1 { eps1, eps2 } => thm1_with(t, &self.f, &self.g, &self.joint, eps1, eps2)?,
            EvenMode::Cor1 { eps1, eps2 } => {
                let dw = match dw {
                    Some(dw) => dw,
                    None => werner_pair(t, &self.f, &self.g, &self.joint)?,
                };
                cor1_with(t, &self.f, &self.g, &self.joint, dw, eps1, eps2)?
            }
            EvenMode::Thm2 => thm2_with(t, &self.f, &self.g, &self.joint)?,
        };
        report.check = format!("thm3:{}", report.check);
        report.n = Some(self.n);
        let agreement = Inequality::le("psi probability deviation <= 1e-9", self.deviation, 1e-9);
        report.verdict &= agreement.holds;
        report.side_checks.push(agreement);
        Ok(report)
    }
}

/// `EBW_eps(Ft, F) <= (2 / eps) D_W(Ft, F)` for each `eps`.
pub fn verify_prop_c(
    t: &Theory<f64>,
    ft: &Measurement<f64>,
    f: &Measurement<f64>,
    eps_grid: &[f64],
) -> Result<VerificationReport> {
    check_ideal(t, f)?;
    validate_measurement(t, ft)?;
    let dw = werner_distance(t, ft, f)?;
    let mut report = base_report("propC", t, json!({ "Ft": ft.name, "F": f.name, "eps": eps_grid }));
    for &eps in eps_grid {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(GptError::InvalidParameter(format!("epsilon {eps} is outside (0, 1]")));
        }
        let w = error_bar_width_with_slack(t, ft, f, &eps, THEOREM_SLACK)?;
        report.inequalities.push(Inequality::le(format!("EBW_{eps}(Ft,F) <= 2/eps D_W"), w, 2.0 / eps * dw));
    }
    report.verdict = report.inequalities.iter().all(|i| i.holds);
    Ok(report)
}

fn dirichlet(rng: &mut ChaCha8Rng, k: usize, alpha: f64) -> Vec<f64> {
    if k == 1 {
        return vec![1.0];
    }
    Dirichlet::new(&vec![alpha; k]).expect("positive concentration").sample(rng)
}

/// Random valid joint for `(f, g)`: a Dirichlet mixture of `K(b|a) f_a`,
/// `K(a|b) g_b`, the uniform joint and, when given, a compatible-fuzzing joint.
pub fn random_joint(
    rng: &mut ChaCha8Rng,
    t: &Theory<f64>,
    f: &Measurement<f64>,
    g: &Measurement<f64>,
    fuzz_witness: Option<&JointMeasurement<f64>>,
) -> Result<JointMeasurement<f64>> {
    let (na, nb) = (f.len(), g.len());
    let d = t.dim();
    let kf: Vec<Vec<f64>> = (0..na).map(|_| dirichlet(rng, nb, 1.0)).collect();
    let kg: Vec<Vec<f64>> = (0..nb).map(|_| dirichlet(rng, na, 1.0)).collect();
    let post_f = JointMeasurement::new(
        f.outcomes.clone(),
        g.outcomes.clone(),
        (0..na).map(|a| (0..nb).map(|b| scale(&f.effects[a].covector, &kf[a][b])).collect()).collect(),
    )?;
    let post_g = JointMeasurement::new(
        f.outcomes.clone(),
        g.outcomes.clone(),
        (0..na).map(|a| (0..nb).map(|b| scale(&g.effects[b].covector, &kg[b][a])).collect()).collect(),
    )?;
    let uniform = JointMeasurement::uniform(t.unit_effect(), f.outcomes.clone(), g.outcomes.clone());
    let mut parts: Vec<&JointMeasurement<f64>> = vec![&post_f, &post_g, &uniform];
    if let Some(w) = fuzz_witness {
        parts.push(w);
    }
    let weights = dirichlet(rng, parts.len(), 0.5);
    let mixed: Vec<(f64, &JointMeasurement<f64>)> = weights.into_iter().zip(parts).collect();
    let j = JointMeasurement::mixture(&mixed)?;
    debug_assert_eq!(j.effects[0][0].len(), d);
    j.validate(t)?;
    Ok(j)
}

/// Random approximation of `f`: a stochastic post-processing of `f` mixed
/// with uniform noise.
pub fn random_perturbation(rng: &mut ChaCha8Rng, t: &Theory<f64>, f: &Measurement<f64>) -> Result<Measurement<f64>> {
    let k = f.len();
    let d = t.dim();
    let stay: f64 = rng.gen_range(0.0..1.0);
    let noise: f64 = rng.gen_range(0.0..0.5);
    // Column a' of K is the distribution of the reported outcome given a'.
    let columns: Vec<Vec<f64>> = (0..k)
        .map(|src| {
            let spread = dirichlet(rng, k, 1.0);
            (0..k).map(|a| (1.0 - stay) * spread[a] + if a == src { stay } else { 0.0 }).collect()
        })
        .collect();
    let u = sum_vectors(d, f.effects.iter().map(|e| &e.covector));
    let effects = (0..k)
        .map(|a| {
            let post = sum_vectors(
                d,
                (0..k).map(|src| scale(&f.effects[src].covector, &columns[src][a])).collect::<Vec<_>>().iter(),
            );
            Effect::new(add(&scale(&post, &(1.0 - noise)), &scale(&u, &(noise / k as f64))))
        })
        .collect();
    let mut out = f.clone();
    out.name = format!("{}~perturbed", f.name);
    out.effects = effects;
    validate_measurement(t, &out)?;
    Ok(out)
}

/// A built-in theory with its conforming representation and ideal measurements.
pub struct Prepared {
    pub label: String,
    pub n: Option<usize>,
    /// The theory as built; for even polygons, the raw polygon.
    pub raw: Theory<f64>,
    /// Representation the theorems are checked in.
    pub work: Theory<f64>,
    /// Polygon size when `raw` is an even polygon.
    pub even: Option<usize>,
    /// Ideal measurements in `work` coordinates.
    pub ideals: Vec<IdealMeasurement<f64>>,
}

impl Prepared {
    /// Ideal measurement `k` expressed in `raw` coordinates.
    pub fn raw_measurement(&self, k: usize) -> Measurement<f64> {
        let m = &self.ideals[k].measurement;
        match self.even {
            Some(n) => {
                let psi = psi_matrix(n);
                let mut out = m.clone();
                out.effects = m.effects.iter().map(|e| Effect::new(psi.apply(&e.covector))).collect();
                out
            }
            None => m.clone(),
        }
    }
}

pub fn prepare(spec: &str, max_outcomes: usize) -> Result<Prepared> {
    let t = builtin_theory(spec)?.to_f64();
    let n = theory_n(&t);
    let (raw, work, even) = match t.kind {
        TheoryKind::Polygon { n } | TheoryKind::DiscApprox { m: n } if n % 2 == 0 => {
            let w = psi_transform(&t)?;
            (t, w, Some(n))
        }
        TheoryKind::Polygon { .. } | TheoryKind::DiscApprox { .. } => (t.clone(), t, None),
        TheoryKind::PsiPolygon { n } => (psi_inverse_transform(&t)?, t, Some(n)),
        TheoryKind::Classical { .. } | TheoryKind::Custom => {
            let c = canonicalize(&t)?;
            (t, c.theory, None)
        }
    };
    let ideals = enumerate_ideal_measurements(&work, max_outcomes)?;
    Ok(Prepared { label: spec.to_string(), n, raw, work, even, ideals })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatteryItem {
    pub theory: String,
    #[serde(default)]
    pub checks: Vec<String>,
    #[serde(default = "default_joints")]
    pub joints: usize,
    #[serde(default = "default_eps")]
    pub eps: Vec<f64>,
    #[serde(default = "default_perturbations")]
    pub perturbations: usize,
    #[serde(default = "default_max_outcomes")]
    pub max_outcomes: usize,
}

fn default_joints() -> usize {
    20
}
fn default_eps() -> Vec<f64> {
    DEFAULT_EPS_GRID.to_vec()
}
fn default_perturbations() -> usize {
    20
}
fn default_max_outcomes() -> usize {
    2
}

impl BatteryItem {
    pub fn new(theory: impl Into<String>) -> Self {
        Self {
            theory: theory.into(),
            checks: Vec::new(),
            joints: default_joints(),
            eps: default_eps(),
            perturbations: default_perturbations(),
            max_outcomes: default_max_outcomes(),
        }
    }

    fn effective_checks(&self, p: &Prepared) -> Vec<String> {
        if !self.checks.is_empty() {
            return self.checks.clone();
        }
        let main: &[&str] = if p.even.is_some() { &["thm3"] } else { &["thm1", "cor1", "thm2"] };
        main.iter().chain(&["propC", "bounds"]).map(|s| s.to_string()).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub battery: Vec<BatteryItem>,
    /// Polygon sizes for the plot-data file.
    #[serde(default)]
    pub plot: Vec<usize>,
}

impl ReportConfig {
    /// Polygons with `n` from 3 to 16, every check, and the matching plot rows.
    pub fn default_battery(seed: u64) -> Self {
        let battery = (3..=16)
            .map(|n| BatteryItem { joints: 10, perturbations: 10, ..BatteryItem::new(format!("polygon:{n}")) })
            .collect();
        Self { seed, battery, plot: (3..=16).collect() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CsvRow {
    pub check: String,
    pub theory: String,
    pub n: Option<usize>,
    pub param: String,
    pub lhs: f64,
    pub rhs: f64,
    pub verdict: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PlotRow {
    pub n: usize,
    pub radius: f64,
    pub pair: String,
    pub min_le_sum: f64,
    pub min_mur_linf: f64,
    pub max_fuzz_lambda: f64,
    pub degree_bound_rhs: f64,
    pub degree_bound_closed_form: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: u32,
    pub config: ReportConfig,
    pub rows: Vec<CsvRow>,
    pub plot: Vec<PlotRow>,
    pub failures: Vec<VerificationReport>,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.verdict)
    }

    pub fn summary_csv(&self) -> String {
        let mut s = String::from("check,theory,n,param,lhs,rhs,verdict\n");
        for r in &self.rows {
            let n = r.n.map(|n| n.to_string()).unwrap_or_default();
            let verdict = if r.verdict { "pass" } else { "fail" };
            let _ = writeln!(s, "{},{},{},{},{},{},{}", r.check, r.theory, n, r.param, r.lhs, r.rhs, verdict);
        }
        s
    }

    pub fn plot_csv(&self) -> String {
        let mut s = String::from(
            "n,radius,pair,min_le_sum,min_mur_linf,max_fuzz_lambda,degree_bound_rhs,degree_bound_closed_form\n",
        );
        for p in &self.plot {
            let closed = p.degree_bound_closed_form.map(|x| x.to_string()).unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                p.n, p.radius, p.pair, p.min_le_sum, p.min_mur_linf, p.max_fuzz_lambda, p.degree_bound_rhs, closed
            );
        }
        s
    }

    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(self)? + "\n")?;
        std::fs::write(dir.join("summary.csv"), self.summary_csv())?;
        std::fs::write(dir.join("plot.csv"), self.plot_csv())?;
        Ok(())
    }
}

/// Aggregates many reports of one check into a CSV row (tightest instance).
struct Tally {
    check: String,
    count: usize,
    worst: Option<Inequality>,
    verdict: bool,
}

impl Tally {
    fn new(check: &str) -> Self {
        Self { check: check.into(), count: 0, worst: None, verdict: true }
    }

    fn add(&mut self, r: &VerificationReport, failures: &mut Vec<VerificationReport>) {
        self.count += 1;
        self.verdict &= r.verdict;
        if let Some(t) = r.tightest() {
            if self.worst.as_ref().map_or(true, |w| t.margin() < w.margin()) {
                self.worst = Some(t.clone());
            }
        }
        if !r.verdict {
            failures.push(r.clone());
        }
    }

    fn row(self, p: &Prepared) -> CsvRow {
        let (lhs, rhs) = self.worst.map_or((0.0, 0.0), |w| (w.lhs, w.rhs));
        CsvRow {
            check: self.check,
            theory: p.label.clone(),
            n: p.n,
            param: format!("instances={}", self.count),
            lhs,
            rhs,
            verdict: self.verdict,
        }
    }
}

fn item_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Admissible `(eps1, eps2)` pairs from a grid.
pub fn eps_pairs(grid: &[f64]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for &a in grid {
        for &b in grid {
            if a + b <= 1.0 + 1e-12 {
                out.push((a, b));
            }
        }
    }
    out
}

/// Runs the theorem checks of one battery item on random joints.
pub fn run_item(item: &BatteryItem, seed: u64, failures: &mut Vec<VerificationReport>) -> Result<Vec<CsvRow>> {
    let p = prepare(&item.theory, item.max_outcomes)?;
    if p.ideals.is_empty() {
        return Err(GptError::InvalidParameter(format!("{} has no ideal measurements", item.theory)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let checks = item.effective_checks(&p);
    let has = |c: &str| checks.iter().any(|x| x == c);
    let pairs = eps_pairs(&item.eps);
    let mut tallies: Vec<Tally> = ["thm1", "cor1", "thm2", "thm3", "propC"].iter().map(|c| Tally::new(c)).collect();
    let mut lambda_cache: Vec<Option<Option<JointMeasurement<f64>>>> = vec![None; p.ideals.len() * p.ideals.len()];

    if has("thm1") || has("cor1") || has("thm2") || has("thm3") {
        for _ in 0..item.joints {
            let kf = rng.gen_range(0..p.ideals.len());
            let kg = rng.gen_range(0..p.ideals.len());
            let (f, g) = (&p.ideals[kf].measurement, &p.ideals[kg].measurement);
            let slot = &mut lambda_cache[kf * p.ideals.len() + kg];
            if slot.is_none() {
                *slot =
                    Some(if f.len() == 2 && g.len() == 2 { Some(max_fuzz_lambda(&p.work, f, g)?.joint) } else { None });
            }
            let fuzz = slot.as_ref().and_then(|x| x.as_ref());
            if let Some(n) = p.even.filter(|_| has("thm3")) {
                // Generate in raw coordinates and check through the psi map.
                let (rf, rg) = (p.raw_measurement(kf), p.raw_measurement(kg));
                let raw_fuzz = fuzz.map(|w| {
                    let psi = psi_matrix(n);
                    let mut r = w.clone();
                    r.effects.iter_mut().flatten().for_each(|e| *e = psi.apply(e));
                    r
                });
                let j = random_joint(&mut rng, &p.raw, &rf, &rg, raw_fuzz.as_ref())?;
                let ctx = EvenContext::new(&p.raw, &rf, &rg, &j)?;
                let dw = werner_pair(&ctx.psi_theory, &ctx.f, &ctx.g, &ctx.joint)?;
                for &(e1, e2) in &pairs {
                    tallies[3].add(&ctx.verify(EvenMode::Thm1 { eps1: e1, eps2: e2 }, None)?, failures);
                    tallies[3].add(&ctx.verify(EvenMode::Cor1 { eps1: e1, eps2: e2 }, Some(dw))?, failures);
                }
                tallies[3].add(&ctx.verify(EvenMode::Thm2, None)?, failures);
            }
            if has("thm1") || has("cor1") || has("thm2") {
                let j = random_joint(&mut rng, &p.work, f, g, fuzz)?;
                let ctx = JointContext::new(&p.work, f, g, &j)?;
                if has("thm1") {
                    for &(e1, e2) in &pairs {
                        tallies[0].add(&thm1_with(&p.work, f, g, &ctx, e1, e2)?, failures);
                    }
                }
                if has("cor1") {
                    let dw = werner_pair(&p.work, f, g, &ctx)?;
                    for &(e1, e2) in &pairs {
                        tallies[1].add(&cor1_with(&p.work, f, g, &ctx, dw, e1, e2)?, failures);
                    }
                }
                if has("thm2") {
                    tallies[2].add(&thm2_with(&p.work, f, g, &ctx)?, failures);
                }
            }
        }
    }
    if has("propC") {
        let grid: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
        for _ in 0..item.perturbations {
            let k = rng.gen_range(0..p.ideals.len());
            let f = &p.ideals[k].measurement;
            let ft = random_perturbation(&mut rng, &p.work, f)?;
            tallies[4].add(&verify_prop_c(&p.work, &ft, f, &grid)?, failures);
        }
    }
    let mut rows: Vec<CsvRow> = tallies.into_iter().filter(|t| t.count > 0).map(|t| t.row(&p)).collect();
    if has("bounds") {
        rows.extend(bound_rows(&p)?);
    }
    Ok(rows)
}

/// Binary ideal pair used for the bound rows: the perpendicular pair when it
/// exists, otherwise the binary pair with the largest minimal LE sum.
pub fn reference_pair(p: &Prepared) -> Result<Option<(Measurement<f64>, Measurement<f64>, String)>> {
    if matches!(p.work.kind, TheoryKind::PsiPolygon { n } | TheoryKind::Polygon { n } if n % 4 == 0) {
        let (f, g) = perpendicular_ideal_pair(&p.work)?;
        return Ok(Some((f.measurement, g.measurement, "perpendicular".into())));
    }
    let binary: Vec<&Measurement<f64>> = p.ideals.iter().map(|m| &m.measurement).filter(|m| m.len() == 2).collect();
    let mut best: Option<(f64, usize, usize)> = None;
    for i in 0..binary.len() {
        for k in (i + 1)..binary.len() {
            let v = min_le_sum(&p.work, binary[i], binary[k]).value;
            if best.map_or(true, |(b, _, _)| v > b + 1e-12) {
                best = Some((v, i, k));
            }
        }
    }
    Ok(best.map(|(_, i, k)| (binary[i].clone(), binary[k].clone(), format!("{}/{}", binary[i].name, binary[k].name))))
}

fn plot_row(p: &Prepared) -> Result<Option<PlotRow>> {
    let Some((f, g, pair)) = reference_pair(p)? else { return Ok(None) };
    let t = &p.work;
    let n = p.n.unwrap_or(0);
    let closed = if n % 4 == 0 && matches!(t.kind, TheoryKind::PsiPolygon { .. }) {
        Some(degree_bound_closed_form(Some(n))?)
    } else {
        None
    };
    Ok(Some(PlotRow {
        n,
        radius: polygon_radius(n),
        pair,
        min_le_sum: min_le_sum(t, &f, &g).value,
        min_mur_linf: min_mur_linf(t, &f, &g)?.value,
        max_fuzz_lambda: max_fuzz_lambda(t, &f, &g)?.lambda,
        degree_bound_rhs: degree_bound_rhs(t, &f, &g)?,
        degree_bound_closed_form: closed,
    }))
}

fn bound_rows(p: &Prepared) -> Result<Vec<CsvRow>> {
    let Some(row) = plot_row(p)? else { return Ok(Vec::new()) };
    let mk = |check: &str, ineq: Inequality| CsvRow {
        check: check.into(),
        theory: p.label.clone(),
        n: p.n,
        param: row.pair.clone(),
        lhs: ineq.lhs,
        rhs: ineq.rhs,
        verdict: ineq.holds,
    };
    let mut rows = vec![
        mk("lambda_ge_half", Inequality::ge("lambda >= 1/2", row.max_fuzz_lambda, 0.5)),
        mk("lambda_le_degree_bound", Inequality::le("lambda <= bound", row.max_fuzz_lambda, row.degree_bound_rhs)),
        mk("mur_ge_min_le", Inequality::ge("mur >= min LE", row.min_mur_linf, row.min_le_sum)),
    ];
    if let Some(c) = row.degree_bound_closed_form {
        let diff = (row.degree_bound_rhs - c).abs();
        rows.push(mk(
            "degree_bound_closed_form",
            Inequality { label: "rhs = closed form".into(), lhs: row.degree_bound_rhs, rhs: c, holds: diff <= 1e-9 },
        ));
        rows.push(mk(
            "min_le_sum_closed_form",
            Inequality {
                label: "min LE = 1 - closed form".into(),
                lhs: row.min_le_sum,
                rhs: 1.0 - c,
                holds: (row.min_le_sum - (1.0 - c)).abs() <= 1e-9,
            },
        ));
    }
    Ok(rows)
}

/// Executes the battery in declared order; identical configs give identical reports.
pub fn run_report(config: &ReportConfig) -> Result<Report> {
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (k, item) in config.battery.iter().enumerate() {
        rows.extend(run_item(item, item_seed(config.seed, k), &mut failures)?);
    }
    let mut plot = Vec::new();
    for &n in &config.plot {
        let p = prepare(&format!("polygon:{n}"), 2)?;
        plot.extend(plot_row(&p)?);
    }
    Ok(Report { schema: 1, config: config.clone(), rows, plot, failures })
}

pub fn load_config(path: &Path) -> Result<ReportConfig> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// `D_W(fuzzify(F, lambda), F)`, equal to `(1 - lambda) / 2` for binary ideal `F`.
pub fn fuzzed_werner(t: &Theory<f64>, f: &Measurement<f64>, lambda: f64) -> Result<f64> {
    werner_distance(t, &fuzzify(f, &lambda)?, f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_polygon;

    #[test]
    fn self_joint_candidates_are_eigenstates() {
        let p = prepare("polygon:5", 2).unwrap();
        let f = &p.ideals[0].measurement;
        let j = JointMeasurement::diagonal(f);
        let c = witness_candidates(&p.work, &j).unwrap();
        assert_eq!(c.len(), 2);
        for cand in &c {
            let v = p.work.pair(&f.effects[cand.a].covector, &cand.state);
            assert!((v - 1.0).abs() < 1e-9);
        }
        let r = verify_thm1(&p.work, f, f, &j, 0.2, 0.3).unwrap();
        assert!(r.verdict);
        assert_eq!(r.inequalities[0].lhs, 0.0);
    }

    #[test]
    fn uniform_joint_candidates_are_maximally_mixed() {
        let p = prepare("polygon:7", 2).unwrap();
        let f = &p.ideals[0].measurement;
        let j = JointMeasurement::uniform(p.work.unit_effect(), f.outcomes.clone(), f.outcomes.clone());
        for c in witness_candidates(&p.work, &j).unwrap() {
            assert!((c.state[0]).abs() < 1e-12 && (c.state[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn octagon_fuzzed_witness_passes() {
        let p = prepare("polygon:8", 2).unwrap();
        let (f, g) = perpendicular_ideal_pair(&p.work).unwrap();
        let (f, g) = (f.measurement, g.measurement);
        let lam = max_fuzz_lambda(&p.work, &f, &g).unwrap();
        assert!(lam.lambda > 0.5 && lam.lambda <= 0.5f64.sqrt() + 1e-9);
        let r = verify_thm1(&p.work, &f, &g, &lam.joint, 0.25, 0.25).unwrap();
        assert!(r.verdict, "{r:?}");
        let r = verify_thm2(&p.work, &f, &g, &lam.joint).unwrap();
        assert!(r.verdict);
        assert!(r.inequalities[0].lhs >= 1.0 - 0.5f64.sqrt() - 1e-9);
    }

    #[test]
    fn square_even_route() {
        let raw = make_polygon(4).unwrap();
        let (f, g) = perpendicular_ideal_pair(&raw).unwrap();
        let (f, g) = (f.measurement, g.measurement);
        let (ff, gg) = (fuzzify(&f, &0.5).unwrap(), fuzzify(&g, &0.5).unwrap());
        let c = crate::compat::is_jointly_measurable(&raw, &ff, &gg).unwrap();
        let r = verify_thm3_even(&raw, &f, &g, &c.witness.unwrap(), EvenMode::Thm2).unwrap();
        assert!(r.verdict, "{r:?}");
        assert!(r.side_checks.iter().all(|s| s.holds));
    }

    #[test]
    fn prop_c_fuzzed_closed_form() {
        let p = prepare("polygon:5", 2).unwrap();
        let f = &p.ideals[0].measurement;
        assert!((fuzzed_werner(&p.work, f, 0.6).unwrap() - 0.2).abs() < 1e-9);
        let grid: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
        let r = verify_prop_c(&p.work, &fuzzify(f, &0.6).unwrap(), f, &grid).unwrap();
        assert!(r.verdict);
        assert_eq!(r.inequalities[0].lhs, 2.0);
    }

    #[test]
    fn report_is_deterministic() {
        let mut cfg = ReportConfig { seed: 7, battery: vec![BatteryItem::new("polygon:5")], plot: vec![4, 5] };
        cfg.battery[0].joints = 3;
        cfg.battery[0].perturbations = 3;
        let a = serde_json::to_string(&run_report(&cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&run_report(&cfg).unwrap()).unwrap();
        assert_eq!(a, b);
        let empty = run_report(&ReportConfig { seed: 0, battery: vec![], plot: vec![] }).unwrap();
        assert!(empty.rows.is_empty());
    }
}
