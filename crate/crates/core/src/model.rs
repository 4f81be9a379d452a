//! Theories (state spaces), effects and measurements, plus the built-in
//! classical and regular-polygon theories and their JSON file format.

use std::f64::consts::PI;

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{GptError, Result};
use crate::geometry::{affine_hull_check, convex_combination, ConeV, InnerProduct};
use crate::linalg::{dot, sub, sum_vectors, vec_approx_eq, Matrix, Vector};
use crate::measures::FiniteMetricSpace;
use crate::scalar::{Rational, Scalar, ScalarMode, DEFAULT_TOL};

/// Where a theory came from; built-ins get closed-form symmetry groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TheoryKind {
    Classical {
        n: usize,
    },
    Polygon {
        n: usize,
    },
    DiscApprox {
        m: usize,
    },
    /// Even polygon re-expressed through `psi = diag(r, r, 1)`.
    PsiPolygon {
        n: usize,
    },
    Custom,
}

#[derive(Debug, Clone)]
pub struct Theory<S: Scalar> {
    pub name: String,
    vertices: Vec<Vector<S>>,
    unit_effect: Vector<S>,
    inner: InnerProduct<S>,
    cone: ConeV<S>,
    pub kind: TheoryKind,
    pub canonicalized: bool,
    /// Set once self-duality under `inner` has been checked and holds.
    pub self_dual_certified: bool,
    pub tol: f64,
}

impl<S: Scalar> Theory<S> {
    /// Builds and validates a theory: `<u, w> = 1` on every vertex, the origin
    /// lies outside the affine hull, the vertices span `V`, and no vertex is a
    /// convex combination of the others.
    pub fn new(
        name: impl Into<String>,
        vertices: Vec<Vector<S>>,
        unit_effect: Vector<S>,
        inner: InnerProduct<S>,
        tol: f64,
    ) -> Result<Self> {
        if !(tol >= 0.0) || (S::MODE == ScalarMode::Float && tol == 0.0) {
            return Err(GptError::InvalidParameter("float tolerance must be positive".into()));
        }
        let d = inner.dim();
        if unit_effect.len() != d {
            return Err(GptError::DimensionMismatch { expected: d, found: unit_effect.len() });
        }
        for v in &vertices {
            if v.len() != d {
                return Err(GptError::DimensionMismatch { expected: d, found: v.len() });
            }
        }
        let hull = affine_hull_check(&vertices, tol)?;
        if !hull.origin_outside {
            return Err(GptError::InvalidTheory("origin lies in the affine hull of the vertices".into()));
        }
        if hull.dim + 1 != d {
            return Err(GptError::NotSpanning);
        }
        let cone = ConeV::new(vertices.clone(), tol)?;
        let t = Self {
            name: name.into(),
            vertices,
            unit_effect,
            inner,
            cone,
            kind: TheoryKind::Custom,
            canonicalized: false,
            self_dual_certified: false,
            tol,
        };
        for (i, v) in t.vertices.iter().enumerate() {
            let uv = t.pair(&t.unit_effect, v);
            if !(uv - S::one()).is_zero_tol(tol) {
                return Err(GptError::InvalidTheory(format!("unit effect does not evaluate to 1 on vertex {i}")));
            }
        }
        t.check_extreme()?;
        Ok(t)
    }

    pub fn with_kind(mut self, kind: TheoryKind) -> Self {
        self.kind = kind;
        self
    }

    fn check_extreme(&self) -> Result<()> {
        for i in 0..self.vertices.len() {
            for j in 0..i {
                if vec_approx_eq(&self.vertices[i], &self.vertices[j], self.tol) {
                    return Err(GptError::InvalidTheory(format!("vertices {j} and {i} coincide")));
                }
            }
        }
        if self.vertices.len() <= self.dim() {
            // A spanning set of exactly d affinely independent points is a simplex.
            return Ok(());
        }
        for i in 0..self.vertices.len() {
            let others: Vec<Vector<S>> =
                self.vertices.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| v.clone()).collect();
            if convex_combination(&others, &self.vertices[i])?.is_some() {
                return Err(GptError::InvalidTheory(format!("vertex {i} is not extreme")));
            }
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[Vector<S>] {
        &self.vertices
    }

    pub fn unit_effect(&self) -> &[S] {
        &self.unit_effect
    }

    pub fn inner(&self) -> &InnerProduct<S> {
        &self.inner
    }

    pub fn cone(&self) -> &ConeV<S> {
        &self.cone
    }

    /// Ambient dimension `N + 1`.
    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// `<e, w>` under the theory's pairing, without any membership check.
    pub fn pair(&self, e: &[S], w: &[S]) -> S {
        dot(e, &self.inner.gram().apply(w))
    }

    pub fn unit(&self) -> Effect<S> {
        Effect::new(self.unit_effect.clone())
    }

    /// LP test for `w` being a convex combination of the vertices.
    pub fn contains_state(&self, w: &[S]) -> Result<bool> {
        if w.len() != self.dim() {
            return Err(GptError::DimensionMismatch { expected: self.dim(), found: w.len() });
        }
        if self.vertices.iter().any(|v| vec_approx_eq(v, w, self.tol)) {
            return Ok(true);
        }
        Ok(convex_combination(&self.vertices, w)?.is_some())
    }

    /// Float copy of the theory (same kind and flags).
    pub fn to_f64(&self) -> Theory<f64> {
        let conv = |v: &Vector<S>| v.iter().map(|x| x.to_f64()).collect::<Vec<f64>>();
        let vertices: Vec<Vec<f64>> = self.vertices.iter().map(conv).collect();
        Theory {
            name: self.name.clone(),
            cone: ConeV::new(vertices.clone(), DEFAULT_TOL).expect("nonzero vertices"),
            vertices,
            unit_effect: conv(&self.unit_effect),
            inner: InnerProduct::new(self.inner.gram().to_f64(), DEFAULT_TOL).expect("gram stays SPD"),
            kind: self.kind,
            canonicalized: self.canonicalized,
            self_dual_certified: self.self_dual_certified,
            tol: if S::is_exact() { DEFAULT_TOL } else { self.tol },
        }
    }
}

/// Effect stored as a covector, evaluated through the theory's pairing.
#[derive(Debug, Clone, PartialEq)]
pub struct Effect<S> {
    pub covector: Vector<S>,
}

impl<S: Scalar> Effect<S> {
    pub fn new(covector: Vector<S>) -> Self {
        Self { covector }
    }
}

#[derive(Debug, Clone)]
pub struct Measurement<S: Scalar> {
    pub name: String,
    pub outcomes: Vec<String>,
    pub effects: Vec<Effect<S>>,
    pub metric: Option<FiniteMetricSpace<S>>,
}

impl<S: Scalar> Measurement<S> {
    /// Outcomes are labelled `0, 1, ...`.
    pub fn from_effects(name: impl Into<String>, effects: Vec<Vector<S>>) -> Self {
        let outcomes = (0..effects.len()).map(|i| i.to_string()).collect();
        Self { name: name.into(), outcomes, effects: effects.into_iter().map(Effect::new).collect(), metric: None }
    }

    pub fn with_metric(mut self, metric: FiniteMetricSpace<S>) -> Self {
        self.metric = Some(metric);
        self
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    /// The declared metric, or the line metric `|i - j|` on outcome indices.
    pub fn metric_or_default(&self) -> FiniteMetricSpace<S> {
        self.metric.clone().unwrap_or_else(|| FiniteMetricSpace::line(self.outcomes.clone()))
    }

    pub fn covectors(&self) -> Vec<Vector<S>> {
        self.effects.iter().map(|e| e.covector.clone()).collect()
    }

    pub fn to_f64(&self) -> Measurement<f64> {
        Measurement {
            name: self.name.clone(),
            outcomes: self.outcomes.clone(),
            effects: self
                .effects
                .iter()
                .map(|e| Effect::new(e.covector.iter().map(|x| x.to_f64()).collect()))
                .collect(),
            metric: self.metric.as_ref().map(|m| m.to_f64()),
        }
    }
}

pub fn make_classical<S: Scalar>(n: usize) -> Result<Theory<S>> {
    if n < 1 {
        return Err(GptError::InvalidParameter("classical theory needs N >= 1".into()));
    }
    let d = n + 1;
    let vertices: Vec<Vector<S>> = (0..d).map(|i| Matrix::<S>::identity(d).row(i).to_vec()).collect();
    let tol = if S::is_exact() { 0.0 } else { DEFAULT_TOL };
    Ok(Theory::new(format!("classical-{n}"), vertices, vec![S::one(); d], InnerProduct::identity(d), tol)?
        .with_kind(TheoryKind::Classical { n }))
}

/// Vertex radius `r_n = sqrt(1 / cos(pi / n))`.
pub fn polygon_radius(n: usize) -> f64 {
    (1.0 / (PI / n as f64).cos()).sqrt()
}

pub fn polygon_vertex(n: usize, i: usize) -> Vector<f64> {
    let r = polygon_radius(n);
    let a = 2.0 * PI * i as f64 / n as f64;
    vec![r * a.cos(), r * a.sin(), 1.0]
}

pub fn make_polygon(n: usize) -> Result<Theory<f64>> {
    if n < 3 {
        return Err(GptError::InvalidParameter("polygon needs n >= 3".into()));
    }
    let vertices = (0..n).map(|i| polygon_vertex(n, i)).collect();
    Ok(Theory::new(format!("polygon-{n}"), vertices, vec![0.0, 0.0, 1.0], InnerProduct::identity(3), DEFAULT_TOL)?
        .with_kind(TheoryKind::Polygon { n }))
}

/// Finite-`m` polygon standing in for the disc theory.
pub fn make_disc_approx(m: usize) -> Result<Theory<f64>> {
    if m < 8 {
        return Err(GptError::InvalidParameter("disc approximation needs m >= 8".into()));
    }
    let mut t = make_polygon(m)?;
    t.name = format!("disc-approx-{m}");
    Ok(t.with_kind(TheoryKind::DiscApprox { m }))
}

/// Pure indecomposable effects of the raw polygon, one per vertex.
///
/// Odd `n`: `(r cos, r sin, 1) / (1 + r^2)` at the vertex angles. Even `n`:
/// `(r cos, r sin, 1) / 2` at the edge-normal angles `(2i - 1) pi / n`.
pub fn polygon_pure_effects(n: usize) -> Vec<Vector<f64>> {
    let r = polygon_radius(n);
    let nf = n as f64;
    (0..n)
        .map(|i| {
            if n % 2 == 1 {
                let a = 2.0 * PI * i as f64 / nf;
                let k = 1.0 / (1.0 + r * r);
                vec![k * r * a.cos(), k * r * a.sin(), k]
            } else {
                let a = (2.0 * i as f64 - 1.0) * PI / nf;
                vec![0.5 * r * a.cos(), 0.5 * r * a.sin(), 0.5]
            }
        })
        .collect()
}

/// `<e, w>` for a state `w` of the theory; rejects points outside the state space.
pub fn effect_eval<S: Scalar>(t: &Theory<S>, e: &Effect<S>, w: &[S]) -> Result<S> {
    if e.covector.len() != t.dim() {
        return Err(GptError::DimensionMismatch { expected: t.dim(), found: e.covector.len() });
    }
    if !t.contains_state(w)? {
        return Err(GptError::OutsideStateSpace);
    }
    Ok(t.pair(&e.covector, w))
}

/// `0 <= <e, w_k> <= 1` on every vertex, which suffices by convexity.
pub fn is_valid_effect<S: Scalar>(t: &Theory<S>, e: &[S]) -> bool {
    e.len() == t.dim()
        && t.vertices().iter().all(|v| {
            let p = t.pair(e, v);
            p.sign_tol(t.tol) != std::cmp::Ordering::Less
                && (p - S::one()).sign_tol(t.tol) != std::cmp::Ordering::Greater
        })
}

/// Checks outcome count, effect validity, nonzero effects and `sum = u`.
pub fn validate_measurement<S: Scalar>(t: &Theory<S>, m: &Measurement<S>) -> Result<()> {
    let bad = |s: String| Err(GptError::InvalidMeasurement(s));
    if m.effects.len() < 2 {
        return bad("a measurement needs at least 2 outcomes".into());
    }
    if m.outcomes.len() != m.effects.len() {
        return bad(format!("{} labels for {} effects", m.outcomes.len(), m.effects.len()));
    }
    for (a, e) in m.outcomes.iter().zip(&m.effects) {
        if e.covector.len() != t.dim() {
            return bad(format!("effect {a} has dimension {} (expected {})", e.covector.len(), t.dim()));
        }
        if e.covector.iter().all(|x| x.is_zero_tol(t.tol)) {
            return bad(format!("effect {a} is zero"));
        }
        if !is_valid_effect(t, &e.covector) {
            return bad(format!("effect {a} leaves [0, 1] on some vertex"));
        }
    }
    let total = sum_vectors(t.dim(), m.effects.iter().map(|e| &e.covector));
    if !vec_approx_eq(&total, t.unit_effect(), t.tol) {
        return bad("effects do not sum to the unit effect".into());
    }
    if let Some(metric) = &m.metric {
        if metric.points.len() != m.outcomes.len() {
            return bad("metric has a different number of points than outcomes".into());
        }
    }
    Ok(())
}

pub fn is_valid_measurement<S: Scalar>(t: &Theory<S>, m: &Measurement<S>) -> bool {
    validate_measurement(t, m).is_ok()
}

/// Outcome probabilities `<f_a, w>` without a membership check.
pub fn probabilities<S: Scalar>(t: &Theory<S>, m: &Measurement<S>, w: &[S]) -> Vec<S> {
    m.effects.iter().map(|e| t.pair(&e.covector, w)).collect()
}

/// `u - sum` helper used by several constructions.
pub fn complement<S: Scalar>(t: &Theory<S>, e: &[S]) -> Vector<S> {
    sub(t.unit_effect(), e)
}

// ---------------------------------------------------------------------------
// JSON

/// A theory loaded from a file, in whichever field its entries call for.
#[derive(Debug, Clone)]
pub enum AnyTheory {
    Exact(Theory<Rational>),
    Float(Theory<f64>),
}

impl AnyTheory {
    pub fn name(&self) -> &str {
        match self {
            AnyTheory::Exact(t) => &t.name,
            AnyTheory::Float(t) => &t.name,
        }
    }

    pub fn to_f64(&self) -> Theory<f64> {
        match self {
            AnyTheory::Exact(t) => t.to_f64(),
            AnyTheory::Float(t) => t.clone(),
        }
    }
}

/// Parses a builtin spec such as `polygon:8`, `psi-polygon:8`, `disc:64` or
/// `classical:2`.
pub fn builtin_theory(spec: &str) -> Result<AnyTheory> {
    let (kind, n) =
        spec.split_once(':').ok_or_else(|| GptError::Parse(format!("builtin `{spec}` is not of the form kind:n")))?;
    let n: usize = n.trim().parse().map_err(|_| GptError::Parse(format!("bad size in `{spec}`")))?;
    match kind.trim() {
        "classical" => Ok(AnyTheory::Exact(make_classical(n)?)),
        "polygon" => Ok(AnyTheory::Float(make_polygon(n)?)),
        "disc" => Ok(AnyTheory::Float(make_disc_approx(n)?)),
        "psi-polygon" => Ok(AnyTheory::Float(crate::ideal::psi_transform(&make_polygon(n)?)?)),
        other => Err(GptError::Parse(format!("unknown builtin theory `{other}`"))),
    }
}

fn is_exact_literal(v: &Value) -> bool {
    match v {
        Value::Number(n) => n.is_i64() || n.is_u64(),
        Value::String(s) => Rational::parse_literal(s).is_some() && !s.contains(['e', 'E']),
        Value::Array(a) => a.iter().all(is_exact_literal),
        _ => false,
    }
}

/// Reads a number or a `"p/q"` string; exact mode reads decimals exactly.
pub fn parse_scalar<S: Scalar>(v: &Value) -> Result<S> {
    let text = match v {
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        other => return Err(GptError::Parse(format!("expected a number, found {other}"))),
    };
    S::parse_literal(&text)
        .or_else(|| match (S::MODE, v) {
            (ScalarMode::Exact, Value::Number(n)) => n.as_f64().map(S::from_f64),
            _ => None,
        })
        .ok_or_else(|| GptError::Parse(format!("cannot read `{text}` as a scalar")))
}

pub fn parse_vector<S: Scalar>(v: &Value) -> Result<Vector<S>> {
    v.as_array()
        .ok_or_else(|| GptError::Parse("expected an array of numbers".into()))?
        .iter()
        .map(parse_scalar)
        .collect()
}

pub fn parse_vectors<S: Scalar>(v: &Value) -> Result<Vec<Vector<S>>> {
    v.as_array()
        .ok_or_else(|| GptError::Parse("expected an array of vectors".into()))?
        .iter()
        .map(parse_vector)
        .collect()
}

fn theory_from_value<S: Scalar>(v: &Value) -> Result<Theory<S>> {
    let name = v.get("name").and_then(Value::as_str).unwrap_or("custom").to_string();
    let vertices = parse_vectors::<S>(v.get("vertices").ok_or_else(|| GptError::Parse("missing `vertices`".into()))?)?;
    let unit = parse_vector::<S>(v.get("unit_effect").ok_or_else(|| GptError::Parse("missing `unit_effect`".into()))?)?;
    let dim =
        v.get("dim").and_then(Value::as_u64).ok_or_else(|| GptError::Parse("missing integer `dim`".into()))? as usize;
    if unit.len() != dim {
        return Err(GptError::DimensionMismatch { expected: dim, found: unit.len() });
    }
    let tol = if S::is_exact() { 0.0 } else { v.get("tolerance").and_then(Value::as_f64).unwrap_or(DEFAULT_TOL) };
    let inner = match v.get("inner") {
        Some(g) => InnerProduct::new(Matrix::from_rows(&parse_vectors::<S>(g)?), tol)?,
        None => InnerProduct::identity(dim),
    };
    Theory::new(name, vertices, unit, inner, tol)
}

/// Reads a theory document. `{"builtin": "polygon:8"}` selects a built-in;
/// otherwise the file lists `name`, `dim` (ambient dimension), `vertices` and
/// `unit_effect`, with an optional `inner` gram matrix. All-integer or `"p/q"`
/// entries give an exact theory; any decimal gives a float theory.
pub fn theory_from_json(v: &Value) -> Result<AnyTheory> {
    if let Some(b) = v.get("builtin").and_then(Value::as_str) {
        return builtin_theory(b);
    }
    let exact = ["vertices", "unit_effect", "inner"].iter().filter_map(|k| v.get(*k)).all(is_exact_literal);
    if exact {
        Ok(AnyTheory::Exact(theory_from_value(v)?))
    } else {
        Ok(AnyTheory::Float(theory_from_value(v)?))
    }
}

pub fn scalar_to_json<S: Scalar>(x: &S) -> Value {
    if S::is_exact() {
        let s = x.to_string();
        match s.parse::<i64>() {
            Ok(i) => json!(i),
            Err(_) => json!(s),
        }
    } else {
        json!(x.to_f64())
    }
}

pub fn vector_to_json<S: Scalar>(v: &[S]) -> Value {
    Value::Array(v.iter().map(scalar_to_json).collect())
}

pub fn theory_to_json<S: Scalar>(t: &Theory<S>) -> Value {
    let mut doc = json!({
        "name": t.name,
        "dim": t.dim(),
        "vertices": t.vertices().iter().map(|v| vector_to_json(v)).collect::<Vec<_>>(),
        "unit_effect": vector_to_json(t.unit_effect()),
    });
    if !t.inner().is_identity(0.0) {
        doc["inner"] = Value::Array(t.inner().gram().to_rows().iter().map(|r| vector_to_json(r)).collect());
    }
    doc
}

/// Reads `{name, outcomes, effects, metric?}`; outcomes default to `0..k`.
pub fn measurement_from_json<S: Scalar>(v: &Value) -> Result<Measurement<S>> {
    let name = v.get("name").and_then(Value::as_str).unwrap_or("measurement").to_string();
    let effects = parse_vectors::<S>(v.get("effects").ok_or_else(|| GptError::Parse("missing `effects`".into()))?)?;
    let outcomes = match v.get("outcomes") {
        Some(Value::Array(a)) => a
            .iter()
            .map(|x| match x {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            })
            .collect(),
        Some(_) => return Err(GptError::Parse("`outcomes` must be an array".into())),
        None => (0..effects.len()).map(|i| i.to_string()).collect(),
    };
    let mut m = Measurement { name, outcomes, effects: effects.into_iter().map(Effect::new).collect(), metric: None };
    if let Some(d) = v.get("metric") {
        let rows = parse_vectors::<S>(d)?;
        m.metric = Some(FiniteMetricSpace::new(m.outcomes.clone(), Matrix::from_rows(&rows), DEFAULT_TOL)?);
    }
    Ok(m)
}

pub fn measurement_to_json<S: Scalar>(m: &Measurement<S>) -> Value {
    let mut doc = json!({
        "name": m.name,
        "outcomes": m.outcomes,
        "effects": m.effects.iter().map(|e| vector_to_json(&e.covector)).collect::<Vec<_>>(),
    });
    if let Some(metric) = &m.metric {
        doc["metric"] = Value::Array(metric.dist.to_rows().iter().map(|r| vector_to_json(r)).collect());
    }
    doc
}
