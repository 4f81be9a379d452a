use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use gptlab::compat::{degree_bound_rhs, is_jointly_measurable, marginals, max_fuzz_lambda, min_mur_linf};
use gptlab::geometry::{cones_equal, dual_cone, ConeV, InnerProduct};
use gptlab::harness::{prepare, random_joint};
use gptlab::ideal::{fuzzify, psi_inverse_transform, psi_measurement, psi_transform};
use gptlab::linalg::{dot, vec_approx_eq, Matrix};
use gptlab::lp::{lp_solve, LinearProgram, LpStatus, Relation, Sense};
use gptlab::measures::{min_le_sum, overall_width, FiniteMetricSpace, OutcomeDistribution};
use gptlab::model::{is_valid_measurement, make_polygon, polygon_pure_effects, probabilities, Measurement};
use gptlab::scalar::{Rational, Scalar};
use gptlab::symmetry::{automorphism_group, averaged_inner_product};

fn lifted_points(d: usize, max: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1.0f64..1.0, d - 1), d..=max).prop_map(|pts| {
        pts.into_iter()
            .map(|mut p| {
                p.push(1.0);
                p
            })
            .collect()
    })
}

fn cone_case() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2usize..=4)
        .prop_flat_map(|d| lifted_points(d, 7))
        .prop_filter("full dimensional", |g| Matrix::from_rows(g).rank(1e-6) == g[0].len())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn double_dual_is_identity(gens in cone_case()) {
        let d = gens[0].len();
        let ip = InnerProduct::identity(d);
        let c = ConeV::new(gens, 1e-9).unwrap();
        let dd = dual_cone(&dual_cone(&c, &ip, 1e-9).unwrap(), &ip, 1e-9).unwrap();
        prop_assert!(cones_equal(&c, &dd, &ip).unwrap());
    }

    #[test]
    fn gram_is_bilinear(
        a in prop::collection::vec(-2.0f64..2.0, 9),
        x in prop::collection::vec(-2.0f64..2.0, 3),
        y in prop::collection::vec(-2.0f64..2.0, 3),
        z in prop::collection::vec(-2.0f64..2.0, 3),
        s in -3.0f64..3.0,
    ) {
        let a = Matrix::from_rows(&[a[0..3].to_vec(), a[3..6].to_vec(), a[6..9].to_vec()]);
        let g = a.transpose().mul(&a).add(&Matrix::identity(3));
        let ip = InnerProduct::new(g, 1e-9).unwrap();
        let sxy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| s * p + q).collect();
        let lhs = ip.inner(&sxy, &z).unwrap();
        let rhs = s * ip.inner(&x, &z).unwrap() + ip.inner(&y, &z).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-9 * (1.0 + lhs.abs()));
        prop_assert!((ip.inner(&x, &z).unwrap() - ip.inner(&z, &x).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn lp_strong_duality_exact(
        a in prop::collection::vec(-4i64..5, 12),
        b in prop::collection::vec(1i64..6, 4),
        c in prop::collection::vec(-3i64..4, 3),
    ) {
        let q = |v: i64| Rational::from_i64(v);
        // Primal: max c.x, A x <= b, 0 <= x <= 5. Dual: min b.y + 5 sum z, A^T y + z >= c.
        let mut primal = LinearProgram::new(3, Sense::Maximize);
        primal.set_objective(c.iter().map(|&v| q(v)).collect());
        for i in 0..4 {
            primal.add_constraint((0..3).map(|j| q(a[3 * i + j])).collect(), Relation::Le, q(b[i]));
        }
        for j in 0..3 {
            primal.set_bounds(j, Some(q(0)), Some(q(5)));
        }
        let mut dual = LinearProgram::new(7, Sense::Minimize);
        let mut obj: Vec<Rational> = b.iter().map(|&v| q(v)).collect();
        obj.extend([q(5), q(5), q(5)]);
        dual.set_objective(obj);
        for j in 0..3 {
            let mut row: Vec<Rational> = (0..4).map(|i| q(a[3 * i + j])).collect();
            row.extend((0..3).map(|k| if k == j { q(1) } else { q(0) }));
            dual.add_constraint(row, Relation::Ge, q(c[j]));
        }
        for v in 0..7 {
            dual.nonneg(v);
        }
        let p = lp_solve(&primal).unwrap();
        let d = lp_solve(&dual).unwrap();
        prop_assert_eq!(p.status, LpStatus::Optimal);
        prop_assert_eq!(d.status, LpStatus::Optimal);
        prop_assert_eq!(p.value.unwrap(), d.value.unwrap());
    }

    #[test]
    fn lp_strong_duality_float(
        a in prop::collection::vec(-4.0f64..4.0, 12),
        b in prop::collection::vec(0.5f64..5.0, 4),
        c in prop::collection::vec(-3.0f64..3.0, 3),
    ) {
        let mut primal = LinearProgram::new(3, Sense::Maximize);
        primal.set_objective(c.clone());
        for i in 0..4 {
            primal.add_constraint(a[3 * i..3 * i + 3].to_vec(), Relation::Le, b[i]);
        }
        for j in 0..3 {
            primal.set_bounds(j, Some(0.0), Some(5.0));
        }
        let mut dual = LinearProgram::new(7, Sense::Minimize);
        let mut obj = b.clone();
        obj.extend([5.0, 5.0, 5.0]);
        dual.set_objective(obj);
        for j in 0..3 {
            let mut row: Vec<f64> = (0..4).map(|i| a[3 * i + j]).collect();
            row.extend((0..3).map(|k| if k == j { 1.0 } else { 0.0 }));
            dual.add_constraint(row, Relation::Ge, c[j]);
        }
        for v in 0..7 {
            dual.nonneg(v);
        }
        let p = lp_solve(&primal).unwrap().value.unwrap();
        let d = lp_solve(&dual).unwrap().value.unwrap();
        prop_assert!((p - d).abs() < 1e-7 * (1.0 + p.abs()));
    }

    #[test]
    fn fuzzify_preserves_validity(n in 3usize..13, i in 0usize..13, lambda in 0.0f64..=1.0) {
        let t = make_polygon(n).unwrap();
        let e = polygon_pure_effects(n);
        let u = t.unit_effect().to_vec();
        let f = e[i % n].clone();
        let m = Measurement::from_effects("F", vec![f.clone(), u.iter().zip(&f).map(|(a, b)| a - b).collect()]);
        prop_assert!(is_valid_measurement(&t, &m));
        prop_assert!(is_valid_measurement(&t, &fuzzify(&m, &lambda).unwrap()));
    }

    #[test]
    fn overall_width_is_monotone(raw in prop::collection::vec(0.0f64..1.0, 2..6), e1 in 0.0f64..1.0, e2 in 0.0f64..1.0) {
        let total: f64 = raw.iter().sum::<f64>() + 1e-3;
        let mut p: Vec<f64> = raw.iter().map(|x| (x + 1e-3 / raw.len() as f64) / total).collect();
        let s: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= s);
        let labels = (0..p.len()).map(|k| k.to_string()).collect();
        let dist = OutcomeDistribution::new(FiniteMetricSpace::line(labels), p, 1e-9).unwrap();
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        prop_assert!(overall_width(&dist, &lo).unwrap() >= overall_width(&dist, &hi).unwrap());
    }

    #[test]
    fn psi_roundtrip_preserves_probabilities(k in 2usize..8, w in prop::collection::vec(0.0f64..1.0, 16)) {
        let n = 2 * k;
        let raw = make_polygon(n).unwrap();
        let psi = psi_transform(&raw).unwrap();
        let back = psi_inverse_transform(&psi).unwrap();
        for (a, b) in raw.vertices().iter().zip(back.vertices()) {
            prop_assert!(vec_approx_eq(a, b, 1e-12));
        }
        let e = polygon_pure_effects(n);
        let u = raw.unit_effect().to_vec();
        let m = Measurement::from_effects("F", vec![e[0].clone(), u.iter().zip(&e[0]).map(|(a, b)| a - b).collect()]);
        let pm = psi_measurement(n, &m);
        let s: f64 = w[..n].iter().sum::<f64>() + 1e-9;
        let mix = |vs: &[Vec<f64>]| -> Vec<f64> {
            (0..3).map(|c| vs.iter().zip(&w[..n]).map(|(v, x)| v[c] * x / s).sum()).collect()
        };
        let (sr, sp) = (mix(raw.vertices()), mix(psi.vertices()));
        let (pr, pp) = (probabilities(&raw, &m, &sr), probabilities(&psi, &pm, &sp));
        prop_assert!(vec_approx_eq(&pr, &pp, 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn group_elements_are_orthogonal(n in 3usize..11) {
        let t = make_polygon(n).unwrap();
        let g = automorphism_group(&t).unwrap();
        let avg = averaged_inner_product(&g).unwrap();
        for el in g.elements() {
            prop_assert!(el.transpose().mul(avg.gram()).mul(el).approx_eq(avg.gram(), 1e-9));
        }
        prop_assert!(g.is_closed(1e-9));
        let norms: Vec<f64> = t.vertices().iter().map(|v| dot(v, &avg.gram().apply(v))).collect();
        prop_assert!(norms.iter().all(|x| (x - norms[0]).abs() < 1e-9));
    }

    #[test]
    fn compat_laws_on_ideal_pairs(n in 3usize..13, i in 0usize..16, k in 0usize..16, seed in 0u64..1000) {
        let p = prepare(&format!("polygon:{n}"), 2).unwrap();
        let m = p.ideals.len();
        let (f, g) = (&p.ideals[i % m].measurement, &p.ideals[k % m].measurement);
        let t = &p.work;
        let self_joint = is_jointly_measurable(t, f, f).unwrap();
        prop_assert!(self_joint.compatible);
        let fuzz = max_fuzz_lambda(t, f, g).unwrap();
        prop_assert!(fuzz.lambda >= 0.5 - 1e-9);
        prop_assert!(fuzz.lambda <= degree_bound_rhs(t, f, g).unwrap() + 1e-9);
        fuzz.joint.validate(t).unwrap();
        let (mf, _) = marginals(&fuzz.joint);
        let target = fuzzify(f, &fuzz.lambda).unwrap();
        for (x, y) in mf.effects.iter().zip(&target.effects) {
            prop_assert!(vec_approx_eq(&x.covector, &y.covector, 1e-7));
        }
        let mur = min_mur_linf(t, f, g).unwrap();
        prop_assert!(mur.value >= min_le_sum(t, f, g).value - 1e-9);
        mur.joint.validate(t).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        random_joint(&mut rng, t, f, g, Some(&fuzz.joint)).unwrap().validate(t).unwrap();
    }
}
