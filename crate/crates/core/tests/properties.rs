use num_complex::Complex64;
use num_rational::Rational64;
use proptest::prelude::*;
use vw3d_core::brst::{self, grassmann::Supernumber, Parity};
use vw3d_core::floer;
use vw3d_core::series::{poly_roots, ComplexPolynomial, ExactComplex, PuiseuxSeries, Var};

fn series_strategy() -> impl Strategy<Value = PuiseuxSeries> {
    prop::collection::vec((0i64..6, 0i64..3, -4i64..5, 1i64..4), 0..5).prop_map(|terms| {
        PuiseuxSeries::from_terms(
            &[Var::T, Var::X],
            terms.into_iter().map(|(a, b, c, d)| {
                (vec![Rational64::new(a, 2), Rational64::from_integer(b)], ExactComplex::from_ratio(c, d))
            }),
        )
    })
}

fn supernumber_strategy(parity: Parity) -> impl Strategy<Value = Supernumber> {
    prop::collection::vec((0u32..6, 0u32..6, 0u32..6, -3i64..4), 1..4).prop_map(move |terms| {
        let mut acc = Supernumber::default();
        for (a, b, c, k) in terms {
            let th = |g| Supernumber::generator(g).unwrap();
            let m = match parity {
                Parity::Odd => th(a).mul(&th(b)).mul(&th(c)),
                Parity::Even => th(a).mul(&th(b)),
            };
            acc = acc.add(&m.scale(&ExactComplex::from_int(k)));
        }
        acc
    })
}

fn parity_strategy() -> impl Strategy<Value = Parity> {
    prop_oneof![Just(Parity::Even), Just(Parity::Odd)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn series_ring_axioms(a in series_strategy(), b in series_strategy(), c in series_strategy()) {
        prop_assert_eq!(a.mul(&b), b.mul(&a));
        prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
        prop_assert_eq!(a.add(&b).mul(&c), a.mul(&c).add(&b.mul(&c)));
        prop_assert!(a.sub(&a).is_zero());
        prop_assert_eq!(a.mul(&PuiseuxSeries::one()), a.clone());
    }

    #[test]
    fn root_sum_and_product(roots in prop::collection::btree_set((-6i32..7, -6i32..7), 2..8)) {
        let roots: Vec<Complex64> = roots.into_iter().map(|(a, b)| Complex64::new(a as f64 / 2.0, b as f64 / 3.0)).collect();
        let mut coeffs = vec![Complex64::new(1.0, 0.0)];
        for r in &roots {
            let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
            for (k, c) in coeffs.iter().enumerate() {
                next[k + 1] += c;
                next[k] -= c * r;
            }
            coeffs = next;
        }
        let n = roots.len();
        let found = poly_roots(&ComplexPolynomial::new(coeffs.clone()), 1e-9).unwrap();
        prop_assert_eq!(found.len(), n);
        let sum: Complex64 = found.iter().map(|r| r.value).sum();
        let prod: Complex64 = found.iter().map(|r| r.value).product();
        let scale = 1.0 + coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        prop_assert!((sum + coeffs[n - 1] / coeffs[n]).norm() < 1e-7 * scale);
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!((prod - sign * coeffs[0] / coeffs[n]).norm() < 1e-7 * scale);
    }

    #[test]
    fn grassmann_associative(a in supernumber_strategy(Parity::Odd), b in supernumber_strategy(Parity::Even), c in supernumber_strategy(Parity::Odd)) {
        prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
    }

    #[test]
    fn grassmann_graded_commutative(
        (pa, a) in parity_strategy().prop_flat_map(|p| (Just(p), supernumber_strategy(p))),
        (pb, b) in parity_strategy().prop_flat_map(|p| (Just(p), supernumber_strategy(p))),
    ) {
        let sign = if pa == Parity::Odd && pb == Parity::Odd { -1 } else { 1 };
        prop_assert_eq!(a.mul(&b), b.mul(&a).scale(&ExactComplex::from_int(sign)));
    }

    #[test]
    fn q_is_linear(table in prop::sample::select(vec!["brst", "covariant", "allq"]), i in 0usize..64, j in 0usize..64, a in -5i64..6, b in 1i64..6) {
        let t = brst::load_table(table).unwrap();
        let (i, j) = (i % t.components.len(), j % t.components.len());
        prop_assume!(t.field_parity(i) == t.field_parity(j));
        let op = brst::table::BasicOp(0);
        let (ca, cb) = (ExactComplex::from_int(a), ExactComplex::from_ratio(1, b));
        let mut combo = brst::table::scale_lin(&t.component_lin(i), &ca);
        combo.extend(brst::table::scale_lin(&t.component_lin(j), &cb));
        let lhs = t.apply(op, &brst::table::simplify(combo)).unwrap();
        let mut rhs = brst::table::scale_lin(&t.apply(op, &t.component_lin(i)).unwrap(), &ca);
        rhs.extend(brst::table::scale_lin(&t.apply(op, &t.component_lin(j)).unwrap(), &cb));
        prop_assert_eq!(lhs, brst::table::simplify(rhs));
    }

    #[test]
    fn q_flips_parity(table in prop::sample::select(vec!["abelian", "brst", "covariant", "allq"]), seed in 0u64..50) {
        let t = brst::load_table(table).unwrap();
        let st = &brst::random_states(&t, seed, 1).unwrap()[0];
        let op = brst::table::BasicOp(0);
        let img = brst::apply_q(&t, st, op, 0).unwrap();
        for (k, v) in img.values.iter().enumerate() {
            prop_assert_eq!(v.parity, t.field_parity(k).flip());
            for m in v.terms.keys() {
                prop_assert_eq!(Parity::of_mask(*m), v.parity);
            }
        }
    }

    #[test]
    fn graded_dimensions_are_nonnegative(g in 0u32..5, h in -3i64..4) {
        let hn = floer::hn_series(g + 2).unwrap();
        prop_assert!(floer::is_graded_dimension(&hn));
        if let Ok(r) = floer::hf_plus(floer::HfManifold::SigmaGxS1 { g, h }, 12) {
            prop_assert!(floer::is_graded_dimension(&r.series));
        }
        prop_assert!(floer::is_graded_dimension(&floer::molien_su2_adjoint(12)));
    }
}
