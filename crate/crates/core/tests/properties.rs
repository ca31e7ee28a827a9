//! Property tests over seeded random data. Each case draws a seed and builds its
//! inputs from `Sampler`, so failures reproduce from the printed seed.

use proptest::prelude::*;

use gengeom::algebra::Rational;
use gengeom::flow::{initial_state, run, DerivativeScheme, Flow, Grid, Perturbation, Record};
use gengeom::forms::MixedForm;
use gengeom::generalized::{bfield_on_form, bfield_on_section, clifford_act, courant_bracket, gv_inner};
use gengeom::sampling::Sampler;
use gengeom::spin55::{clifford_pairing, normal_form, quartic_invariant, rho_hat, RhoPair, DIM};
use gengeom::twisted::{glue_section, CoverData};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn partial_derivatives_commute(seed: u64, i in 0usize..3, j in 0usize..3) {
        let p = Sampler::new(seed).polynomial(3, 3);
        let a = p.differentiate(i).unwrap().differentiate(j).unwrap();
        let b = p.differentiate(j).unwrap().differentiate(i).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn leibniz_rule(seed: u64, i in 0usize..3) {
        let mut s = Sampler::new(seed);
        let p = s.polynomial(3, 2);
        let q = s.polynomial(3, 2);
        let lhs = (&p * &q).differentiate(i).unwrap();
        let rhs = &(&p.differentiate(i).unwrap() * &q) + &(&p * &q.differentiate(i).unwrap());
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn evaluation_is_multiplicative(seed: u64) {
        let mut s = Sampler::new(seed);
        let p = s.polynomial(4, 2);
        let q = s.polynomial(4, 2);
        let pt = s.point(4);
        let prod = (&p * &q).evaluate(&pt).unwrap();
        prop_assert_eq!(prod, p.evaluate(&pt).unwrap() * q.evaluate(&pt).unwrap());
    }

    #[test]
    fn d_squared_vanishes(seed: u64, n in 1usize..=5) {
        let a = Sampler::new(seed).form(n, 3);
        prop_assert!(a.exterior_derivative().exterior_derivative().is_zero());
    }

    #[test]
    fn interior_product_is_an_antiderivation(seed: u64, n in 2usize..=5, k in 0usize..=3) {
        let mut s = Sampler::new(seed);
        let x = s.vector_field(n, 2);
        let a = s.form_of_degree(n, k.min(n), 2);
        let b = s.form(n, 2);
        prop_assert!(a.interior_product(&x).unwrap().interior_product(&x).unwrap().is_zero());
        let lhs = a.wedge(&b).unwrap().interior_product(&x).unwrap();
        let first = a.interior_product(&x).unwrap().wedge(&b).unwrap();
        let second = a.wedge(&b.interior_product(&x).unwrap()).unwrap();
        let rhs = if k.min(n) % 2 == 0 { &first + &second } else { &first - &second };
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn cartan_formula_and_commutation_with_d(seed: u64, n in 1usize..=4) {
        let mut s = Sampler::new(seed);
        let x = s.vector_field(n, 2);
        let a = s.form(n, 2);
        let cartan = &a.interior_product(&x).unwrap().exterior_derivative()
            + &a.exterior_derivative().interior_product(&x).unwrap();
        prop_assert_eq!(a.lie_derivative(&x).unwrap(), cartan);
        let lhs = a.exterior_derivative().lie_derivative(&x).unwrap();
        prop_assert_eq!(lhs, a.lie_derivative(&x).unwrap().exterior_derivative());
    }

    #[test]
    fn clifford_square_is_the_pairing(seed: u64, n in 1usize..=5) {
        let mut s = Sampler::new(seed);
        let u = s.section(n, 1);
        let a = s.form(n, 1);
        let twice = clifford_act(&u, &clifford_act(&u, &a).unwrap()).unwrap();
        prop_assert_eq!(twice, a.scale(&gv_inner(&u, &u).unwrap()));
    }

    #[test]
    fn bfield_lifts_intertwine_clifford_action(seed: u64, n in 2usize..=5) {
        let mut s = Sampler::new(seed);
        let u = s.section(n, 1);
        let a = s.form(n, 1);
        let b = s.form_of_degree(n, 2, 1);
        let minus_b = -&b;
        let lhs = clifford_act(&bfield_on_section(&b, &u).unwrap(), &bfield_on_form(&minus_b, &a).unwrap()).unwrap();
        let rhs = bfield_on_form(&minus_b, &clifford_act(&u, &a).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn mukai_pairing_is_bfield_invariant(seed: u64, n in 2usize..=5) {
        let mut s = Sampler::new(seed);
        let a = s.form(n, 1);
        let c = s.form(n, 1);
        let b = s.form_of_degree(n, 2, 1);
        let lhs = bfield_on_form(&b, &a).unwrap().mukai_pairing(&bfield_on_form(&b, &c).unwrap()).unwrap();
        prop_assert_eq!(lhs, a.mukai_pairing(&c).unwrap());
    }

    #[test]
    fn mukai_pairing_in_five_dimensions(seed: u64) {
        let mut s = Sampler::new(seed);
        let a = s.even_form(5, 1);
        let b = &(&s.form_of_degree(5, 1, 1) + &s.form_of_degree(5, 3, 1)) + &s.form_of_degree(5, 5, 1);
        // a₀b₅ − a₂∧b₃ + a₄∧b₁
        let top = |f: &MixedForm| f.top_coefficient();
        let expected = &(&top(&a.component(0).wedge(&b.component(5)).unwrap())
            - &top(&a.component(2).wedge(&b.component(3)).unwrap()))
            + &top(&a.component(4).wedge(&b.component(1)).unwrap());
        prop_assert_eq!(a.mukai_pairing(&b).unwrap(), expected);
    }
}

fn two_chart_cover(s: &mut Sampler, n: usize) -> CoverData {
    let a = s.form_of_degree(n, 1, 2);
    CoverData::new(
        n,
        vec!["a".into(), "b".into()],
        [(("a".to_string(), "b".to_string()), a)].into_iter().collect(),
        Default::default(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(config(32))]

    #[test]
    fn gluing_preserves_pairing_and_bracket(seed: u64, n in 2usize..=4) {
        let mut s = Sampler::new(seed);
        let cover = two_chart_cover(&mut s, n);
        let u = s.section(n, 1);
        let v = s.section(n, 1);
        let gu = glue_section(&u, &cover, "a", "b").unwrap();
        let gv = glue_section(&v, &cover, "a", "b").unwrap();
        prop_assert_eq!(gv_inner(&gu, &gv).unwrap(), gv_inner(&u, &v).unwrap());
        let glued_bracket = glue_section(&courant_bracket(&u, &v).unwrap(), &cover, "a", "b").unwrap();
        prop_assert_eq!(courant_bracket(&gu, &gv).unwrap(), glued_bracket);
    }

    #[test]
    fn clifford_pairing_is_symmetric(seed: u64) {
        let mut s = Sampler::new(seed);
        let v = s.section(DIM, 1);
        let a = s.even_form(DIM, 1);
        let b = s.even_form(DIM, 1);
        prop_assert_eq!(clifford_pairing(&v, &a, &b).unwrap(), clifford_pairing(&v, &b, &a).unwrap());
    }

    #[test]
    fn companion_form_is_equivariant_under_closed_bfields(seed: u64) {
        let mut s = Sampler::new(seed);
        let rho = RhoPair::new(s.dense_constant_even_form(DIM), s.dense_constant_even_form(DIM)).unwrap();
        prop_assume!(!quartic_invariant(&rho).unwrap().is_zero());
        let b = s.closed_two_form(DIM, 1);
        let moved = rho.map(|r| bfield_on_form(&b, r)).unwrap();
        let before = rho_hat(&rho).unwrap();
        let after = rho_hat(&moved).unwrap();
        prop_assert_eq!(&after.f, &before.f);
        prop_assert_eq!(after.n1, bfield_on_form(&b, &before.n1).unwrap());
        prop_assert_eq!(after.n2, bfield_on_form(&b, &before.n2).unwrap());
    }

    #[test]
    fn quartic_invariant_scales_with_gl2(seed: u64) {
        let mut s = Sampler::new(seed);
        let rho = RhoPair::new(s.even_form(DIM, 1), s.even_form(DIM, 1)).unwrap();
        let a = s.gl2();
        let det: Rational = &a[0][0] * &a[1][1] - &a[0][1] * &a[1][0];
        let scaled = quartic_invariant(&rho).unwrap().scale(&(&det * &det));
        prop_assert_eq!(quartic_invariant(&rho.transform(a)).unwrap(), scaled);
    }
}

proptest! {
    #![proptest_config(config(4))]

    #[test]
    fn flow_preserves_closure(seed: u64) {
        let mut s = Sampler::new(seed);
        let mode = [0, 1, 2, 3, 4].map(|_| s.int(-1, 1) as i32);
        let terms = serde_json::json!({"terms": [
            {"component": 1 + s.int(0, 1), "indices": [s.int(0, 4)], "mode": mode, "cos": 1.0},
            {"component": 1 + s.int(0, 1), "indices": [0, 1, 2], "mode": [1, 0, 0, 0, 1], "sin": 0.5},
        ]});
        let pert: Perturbation = serde_json::from_value(terms).unwrap();
        let flow = Flow::new(Grid::new(4, DerivativeScheme::Spectral).unwrap());
        let init = initial_state(&flow.grid, &normal_form(), 1e-2, &pert).unwrap();
        let c0 = flow.closure_norm(&init);
        let traj = run(&flow, &init, 0.01, 5, &Record::Steps(vec![5])).unwrap();
        let c1 = flow.closure_norm(&traj.frames[0].state);
        prop_assert!(c0 < 1e-12 && c1 < 1e-12, "closure {c0:e} -> {c1:e}");
    }
}
