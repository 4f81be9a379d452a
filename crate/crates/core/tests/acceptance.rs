//! Acceptance suite: one pass/fail line per criterion, non-zero exit on any failure.

use std::f64::consts::FRAC_1_SQRT_2;
use std::time::{Duration, Instant};

use gptlab::compat::{degree_bound_closed_form, degree_bound_rhs, max_fuzz_lambda, min_mur_linf};
use gptlab::geometry::{cone_member, ConeV, InnerProduct};
use gptlab::harness::{fuzzed_werner, prepare, run_item, BatteryItem, VerificationReport};
use gptlab::ideal::{enumerate_ideal_measurements, ideal_eigenvalue, perpendicular_ideal_pair, psi_transform};
use gptlab::linalg::{dot, Matrix};
use gptlab::measures::min_le_sum;
use gptlab::model::{make_classical, make_polygon, polygon_radius, Theory, TheoryKind};
use gptlab::scalar::Rational;
use gptlab::symmetry::{
    automorphism_group, automorphism_group_search, averaged_inner_product, canonicalize, is_self_dual, maximally_mixed,
    xi_canonicalize,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn e<E: std::fmt::Display>(x: E) -> String {
    x.to_string()
}

fn within(budget: Duration, start: Instant) -> Result<(), String> {
    let el = start.elapsed();
    ensure(el <= budget, format!("runtime {el:?} exceeds {budget:?}"))
}

fn psi_pair(
    n: usize,
) -> Result<(Theory<f64>, gptlab::model::Measurement<f64>, gptlab::model::Measurement<f64>), String> {
    let t = psi_transform(&make_polygon(n).map_err(e)?).map_err(e)?;
    let (f, g) = perpendicular_ideal_pair(&t).map_err(e)?;
    Ok((t, f.measurement, g.measurement))
}

fn c1_self_duality() -> Outcome {
    let start = Instant::now();
    for (ns, expected) in [([3, 5, 7, 9], true), ([4, 6, 8, 10], false)] {
        for n in ns {
            let t = make_polygon(n).map_err(e)?;
            let avg = averaged_inner_product(&automorphism_group(&t).map_err(e)?).map_err(e)?;
            let got = is_self_dual(&t, &avg).map_err(e)?;
            ensure(got == expected, format!("n = {n}: self-dual = {got}"))?;
        }
    }
    within(Duration::from_secs(1), start)?;
    Ok(format!("odd n self-dual, even n not ({:?})", start.elapsed()))
}

fn c2_averaged_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in 3..=12 {
        let t = make_polygon(n).map_err(e)?;
        let g = averaged_inner_product(&automorphism_group(&t).map_err(e)?).map_err(e)?;
        worst = worst.max(g.gram().max_abs_diff(&Matrix::identity(3)));
    }
    ensure(worst < 1e-12, format!("polygon gram deviation {worst:e}"))?;
    for n in 1..=3 {
        let t = make_classical::<Rational>(n).map_err(e)?;
        let g = averaged_inner_product(&automorphism_group(&t).map_err(e)?).map_err(e)?;
        ensure(*g.gram() == Matrix::identity(n + 1), format!("classical N = {n}: gram is not exactly identity"))?;
    }
    Ok(format!("max polygon deviation {worst:e}, classical exact"))
}

fn c3_degree_bounds() -> Outcome {
    let start = Instant::now();
    let expected = [(4, 1.0), (8, FRAC_1_SQRT_2), (12, 0.7320508075688772), (16, FRAC_1_SQRT_2)];
    let mut out = Vec::new();
    for (n, value) in expected {
        let (t, f, g) = psi_pair(n)?;
        let rhs = degree_bound_rhs(&t, &f, &g).map_err(e)?;
        let closed = degree_bound_closed_form(Some(n)).map_err(e)?;
        ensure((rhs - closed).abs() <= 1e-9, format!("n = {n}: rhs {rhs} vs closed form {closed}"))?;
        ensure((closed - value).abs() <= 1e-7, format!("n = {n}: closed form {closed} vs {value}"))?;
        out.push(format!("{n}:{rhs:.7}"));
    }
    within(Duration::from_secs(1), start)?;
    Ok(out.join(" "))
}

fn c4_pur() -> Outcome {
    let (t, f, g) = psi_pair(8)?;
    let v8 = min_le_sum(&t, &f, &g).value;
    ensure((v8 - (1.0 - FRAC_1_SQRT_2)).abs() <= 1e-9, format!("n = 8: {v8}"))?;
    let (t, f, g) = psi_pair(12)?;
    let v12 = min_le_sum(&t, &f, &g).value;
    let r = polygon_radius(12);
    ensure((v12 - (1.0 - r * r * FRAC_1_SQRT_2)).abs() <= 1e-9, format!("n = 12: {v12}"))?;
    Ok(format!("n=8 {v8:.10}, n=12 {v12:.10}"))
}

fn c5_mur() -> Outcome {
    let (t, f, g) = psi_pair(8)?;
    let m8 = min_mur_linf(&t, &f, &g).map_err(e)?.value;
    ensure(m8 >= 1.0 - FRAC_1_SQRT_2 - 1e-9, format!("n = 8: {m8}"))?;
    let (t, f, g) = psi_pair(4)?;
    let m4 = min_mur_linf(&t, &f, &g).map_err(e)?.value;
    ensure(m4 <= 0.5 + 1e-9, format!("n = 4: {m4}"))?;
    Ok(format!("n=8 {m8:.10}, n=4 {m4:.10}"))
}

fn c6_fuzzing() -> Outcome {
    let (t, f, g) = psi_pair(4)?;
    let sq = max_fuzz_lambda(&t, &f, &g).map_err(e)?.lambda;
    ensure((sq - 0.5).abs() <= 1e-9, format!("square lambda {sq}"))?;
    let mut pairs = 0;
    let mut lowest = f64::INFINITY;
    for n in 4..=16 {
        let p = prepare(&format!("polygon:{n}"), 2).map_err(e)?;
        let binary: Vec<_> = p.ideals.iter().map(|m| &m.measurement).filter(|m| m.len() == 2).collect();
        for i in 0..binary.len() {
            for k in i..binary.len() {
                let l = max_fuzz_lambda(&p.work, binary[i], binary[k]).map_err(e)?.lambda;
                ensure(l >= 0.5 - 1e-9, format!("n = {n}, pair ({i},{k}): lambda {l}"))?;
                lowest = lowest.min(l);
                pairs += 1;
            }
        }
    }
    Ok(format!("square {sq:.10}; {pairs} pairs, min lambda {lowest:.6}"))
}

fn run_checks(theory: &str, checks: &[&str], joints: usize, max_outcomes: usize, seed: u64) -> Result<usize, String> {
    let item = BatteryItem {
        checks: checks.iter().map(|s| s.to_string()).collect(),
        joints,
        perturbations: 0,
        max_outcomes,
        ..BatteryItem::new(theory)
    };
    let mut failures: Vec<VerificationReport> = Vec::new();
    let rows = run_item(&item, seed, &mut failures).map_err(e)?;
    if let Some(f) = failures.first() {
        return Err(format!(
            "{theory}: {} failures, first {}",
            failures.len(),
            serde_json::to_string(f).unwrap_or_default()
        ));
    }
    ensure(rows.iter().all(|r| r.verdict), format!("{theory}: failing row"))?;
    Ok(rows.iter().map(|r| r.param.trim_start_matches("instances=").parse::<usize>().unwrap_or(0)).sum())
}

fn c7_theorems() -> Outcome {
    let start = Instant::now();
    let mut total = 0;
    let main = ["thm1", "cor1", "thm2"];
    for (k, theory) in ["polygon:3", "polygon:5", "polygon:7", "polygon:8", "polygon:12"].iter().enumerate() {
        total += run_checks(theory, &main, 100, 2, 100 + k as u64)?;
    }
    for (k, theory) in ["classical:1", "classical:2"].iter().enumerate() {
        total += run_checks(theory, &main, 100, 3, 200 + k as u64)?;
    }
    for (k, theory) in ["polygon:4", "polygon:6", "polygon:8"].iter().enumerate() {
        total += run_checks(theory, &["thm3"], 100, 2, 300 + k as u64)?;
    }
    within(Duration::from_secs(120), start)?;
    Ok(format!("{total} verifications passed ({:?})", start.elapsed()))
}

fn c8_prop_c() -> Outcome {
    let mut total = 0;
    for (k, (theory, outcomes)) in [("polygon:5", 2), ("polygon:8", 2), ("classical:2", 3)].iter().enumerate() {
        let item = BatteryItem {
            checks: vec!["propC".into()],
            joints: 0,
            perturbations: 50,
            max_outcomes: *outcomes,
            ..BatteryItem::new(*theory)
        };
        let mut failures = Vec::new();
        run_item(&item, 400 + k as u64, &mut failures).map_err(e)?;
        ensure(failures.is_empty(), format!("{theory}: {} violations", failures.len()))?;
        total += 50;
    }
    let mut worst: f64 = 0.0;
    for theory in ["polygon:5", "polygon:8", "classical:1"] {
        let p = prepare(theory, 2).map_err(e)?;
        for m in p.ideals.iter().filter(|m| m.measurement.len() == 2) {
            for lambda in [0.0, 0.3, 0.6, 0.9, 1.0] {
                let dw = fuzzed_werner(&p.work, &m.measurement, lambda).map_err(e)?;
                worst = worst.max((dw - (1.0 - lambda) / 2.0).abs());
            }
        }
    }
    ensure(worst <= 1e-9, format!("closed form deviation {worst:e}"))?;
    Ok(format!("{total} perturbed measurements x 9 eps, closed form deviation {worst:e}"))
}

fn c9_lemmas() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut theories: Vec<Theory<f64>> =
        (1..=3).map(|n| make_classical::<f64>(n)).collect::<Result<_, _>>().map_err(e)?;
    for n in 3..=9 {
        theories.push(make_polygon(n).map_err(e)?);
    }
    for t in &theories {
        let c = canonicalize(t).map_err(e)?;
        let wm = maximally_mixed(&c.theory, &c.group).map_err(e)?;
        let dev = wm.iter().zip(c.theory.unit_effect()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        ensure(dev <= 1e-9, format!("{}: u differs from w_M by {dev:e}", t.name))?;
    }
    let mut effects = 0;
    for n in [3, 5, 7, 9, 4, 6, 8] {
        let raw = make_polygon(n).map_err(e)?;
        let t = if n % 2 == 0 { psi_transform(&raw).map_err(e)? } else { raw };
        for m in enumerate_ideal_measurements(&t, 3).map_err(e)? {
            for f in &m.measurement.effects {
                worst = worst.max((ideal_eigenvalue(&t, &f.covector) - 1.0).abs());
                effects += 1;
            }
        }
    }
    ensure(worst <= 1e-9, format!("eigenvalue deviation {worst:e}"))?;
    Ok(format!("u = w_M for {} theories; {effects} ideal effects, deviation {worst:e}", theories.len()))
}

fn c10_xi() -> Outcome {
    let s = Matrix::diagonal(&[2.0, 2.0, 1.0]);
    let p = make_polygon(5).map_err(e)?;
    let vs = p.vertices().iter().map(|v| s.apply(v)).collect();
    let t = Theory::new("stretched-pentagon", vs, vec![0.0, 0.0, 1.0], InnerProduct::identity(3), 1e-9).map_err(e)?;
    let x = xi_canonicalize(&t, &Matrix::diagonal(&[0.25, 0.25, 1.0])).map_err(e)?;
    ensure(is_self_dual(&x.theory, &x.averaged).map_err(e)?, "stretched pentagon result is not self-dual")?;
    let mut worst: f64 = 0.0;
    let mut inputs: Vec<Theory<f64>> =
        vec![make_polygon(3).map_err(e)?, make_polygon(5).map_err(e)?, make_polygon(7).map_err(e)?];
    inputs.push(canonicalize(&make_classical::<f64>(2).map_err(e)?).map_err(e)?.theory);
    for t in &inputs {
        let d = t.dim();
        let x = xi_canonicalize(t, &Matrix::identity(d)).map_err(e)?;
        worst = worst.max(x.xi_matrix.max_abs_diff(&Matrix::identity(d)));
    }
    ensure(worst <= 1e-12, format!("Xi deviates from identity by {worst:e}"))?;
    Ok(format!("stretched xi = {:.6}; identity deviation {worst:e}", x.xi))
}

/// Facet normals by brute force: every (d-1)-subset of generators whose
/// normal keeps all generators on one side.
fn brute_force_facets(gens: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = gens[0].len();
    let mut facets = Vec::new();
    let mut idx: Vec<usize> = (0..d - 1).collect();
    loop {
        let rows: Vec<Vec<f64>> = idx.iter().map(|&i| gens[i].clone()).collect();
        let m = Matrix::from_rows(&rows);
        if m.rank(1e-9) == d - 1 {
            for mut nvec in m.null_space(1e-9) {
                let vals: Vec<f64> = gens.iter().map(|g| dot(g, &nvec)).collect();
                if vals.iter().all(|&v| v >= -1e-9) || vals.iter().all(|&v| v <= 1e-9) {
                    if vals.iter().any(|&v| v < -1e-9) {
                        nvec.iter_mut().for_each(|x| *x = -*x);
                    }
                    facets.push(nvec);
                }
            }
        }
        // Next combination.
        let mut k = d - 1;
        loop {
            if k == 0 {
                return facets;
            }
            k -= 1;
            if idx[k] < gens.len() - (d - 1 - k) {
                idx[k] += 1;
                for j in k + 1..d - 1 {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn c11_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut queries = 0;
    while queries < 200 {
        let d = rng.gen_range(2..=4);
        let count = rng.gen_range(d..=8);
        let gens: Vec<Vec<f64>> = (0..count)
            .map(|_| {
                let mut v: Vec<f64> = (0..d - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
                v.push(1.0);
                v
            })
            .collect();
        if Matrix::from_rows(&gens).rank(1e-9) < d {
            continue;
        }
        let facets = brute_force_facets(&gens);
        let cone = ConeV::new(gens, 1e-9).map_err(e)?;
        let ip = InnerProduct::identity(d);
        for _ in 0..10 {
            let mut x: Vec<f64> = (0..d - 1).map(|_| rng.gen_range(-1.5..1.5)).collect();
            x.push(rng.gen_range(0.1..1.0));
            let margin = facets
                .iter()
                .map(|f| dot(f, &x) / f.iter().map(|v| v * v).sum::<f64>().sqrt())
                .fold(f64::INFINITY, f64::min);
            if margin.abs() < 1e-6 {
                continue;
            }
            let got = cone_member(&cone, &x, &ip).map_err(e)?;
            ensure(got == (margin > 0.0), format!("membership mismatch at {x:?} (margin {margin:e})"))?;
            queries += 1;
        }
    }
    let mut werner: f64 = 0.0;
    for theory in ["polygon:3", "polygon:7", "polygon:12"] {
        let p = prepare(theory, 2).map_err(e)?;
        let f = &p.ideals[0].measurement;
        for lambda in [0.1, 0.5, 0.75] {
            werner = werner.max((fuzzed_werner(&p.work, f, lambda).map_err(e)? - (1.0 - lambda) / 2.0).abs());
        }
    }
    ensure(werner <= 1e-9, format!("Werner closed form deviation {werner:e}"))?;
    for n in 3..=8 {
        let mut t = make_polygon(n).map_err(e)?;
        let closed = automorphism_group(&t).map_err(e)?.order();
        t.kind = TheoryKind::Custom;
        let searched = automorphism_group_search(&t).map_err(e)?.order();
        ensure(closed == 2 * n && searched == 2 * n, format!("polygon {n}: orders {closed} / {searched}"))?;
    }
    for (n, fact) in [(1, 2), (2, 6), (3, 24)] {
        let mut t = make_classical::<Rational>(n).map_err(e)?;
        let closed = automorphism_group(&t).map_err(e)?.order();
        t.kind = TheoryKind::Custom;
        let searched = automorphism_group_search(&t).map_err(e)?.order();
        ensure(closed == fact && searched == fact, format!("classical {n}: orders {closed} / {searched}"))?;
    }
    Ok(format!("{queries} membership queries agree; Werner deviation {werner:e}; group orders agree"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("self-duality classification", c1_self_duality),
        ("averaged inner product is identity", c2_averaged_identity),
        ("degree-of-incompatibility bounds", c3_degree_bounds),
        ("preparation uncertainty values", c4_pur),
        ("measurement uncertainty LP bounds", c5_mur),
        ("fuzzing threshold", c6_fuzzing),
        ("theorem property suite", c7_theorems),
        ("error-bar vs Werner suite", c8_prop_c),
        ("unit effect and ideal eigenstates", c9_lemmas),
        ("xi canonicalization", c10_xi),
        ("oracle equivalences", c11_oracles),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let el = start.elapsed();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{el:.2?}]", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why} [{el:.2?}]", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
