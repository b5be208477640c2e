use super::*;

fn fock(text: &str) -> FockState {
    text.parse().unwrap()
}

fn signs(text: &str) -> Vec<Outcome> {
    text.chars().map(|c| Outcome::from_sign(c).unwrap()).collect()
}

#[test]
fn single_forward_pair() {
    // one crystal's worth of modes, forward pair only: K=1 over modes 1..2
    let s = exact_emit(1, 1).unwrap();
    assert_eq!(s.len(), 4);
    let h = s.amplitude(&fock("a2H:1 b2H:1"));
    assert_eq!(h, ExactAmplitude::one());
    let v = s.amplitude(&fock("a2V:1 b2V:1"));
    assert_eq!(v, ExactAmplitude::one());
    assert_eq!(s.amplitude(&fock("a1H:1 b1H:1")).exponents(), vec![2]);
}

#[test]
fn double_double_phases() {
    let s = exact_emit(2, 4).unwrap();
    let forward = s.amplitude(&fock("a2H:1 a2V:1 a4H:1 a4V:1 b2H:1 b2V:1 b4H:1 b4V:1"));
    let backward = s.amplitude(&fock("a1H:1 a1V:1 a3H:1 a3V:1 b1H:1 b1V:1 b3H:1 b3V:1"));
    assert_eq!(forward.exponents(), vec![0]);
    assert_eq!(backward.exponents(), vec![8]);
    assert_eq!(forward.coefficient(0), Surd::one());
}

#[test]
fn single_pairs_everywhere_at_three_crystals() {
    let s = exact_emit(3, 6).unwrap();
    let all_h = fock("a1H:1 a2H:1 a3H:1 a4H:1 a5H:1 a6H:1 b1H:1 b2H:1 b3H:1 b4H:1 b5H:1 b6H:1");
    assert_eq!(s.amplitude(&all_h).exponents(), vec![6]);
}

#[test]
fn emission_amplitudes_are_unit_monomials() {
    let s = exact_emit(2, 4).unwrap();
    for (_, a) in s.terms() {
        assert_eq!(a.exponents().len(), 1);
        assert_eq!(a.norm_sqr(), ExactAmplitude::one());
    }
    // C(11, 4) polarization-resolved pair placements
    assert_eq!(s.len(), 330);
}

#[test]
fn emission_budget() {
    assert!(matches!(exact_emit_with_budget(3, 6, 10), Err(Error::BudgetExceeded { .. })));
}

#[test]
fn routing_is_the_circuit() {
    let r = |text: &str| route(text.parse().unwrap(), 2).to_string();
    assert_eq!(r("a2H"), "a2'H");
    assert_eq!(r("a2V"), "a3'V");
    assert_eq!(r("a3V"), "a2'V");
    assert_eq!(r("a4V"), "a1'V");
    assert_eq!(r("a1V"), "a4'V");
    assert_eq!(r("b1V"), "b2'V");
    assert_eq!(r("b2V"), "b1'V");
    assert_eq!(r("b3H"), "b3'H");
}

#[test]
fn plus_projection_of_hv_pair_is_empty() {
    assert!(projection_amplitude(1, 1, Outcome::Plus).is_none());
    let (discarded, c) = projection_amplitude(1, 0, Outcome::Minus).unwrap();
    assert_eq!(discarded, 0);
    assert_eq!(c, Surd::sqrt_ratio(1, 2));
    let (_, c) = projection_amplitude(0, 1, Outcome::Minus).unwrap();
    assert_eq!(c, -&Surd::sqrt_ratio(1, 2));
}

fn output_component(h: &ExactHerald) -> ExactState {
    let only = h.branches.get(&vec![0; 6]).expect("no-discard branch");
    let outputs = [SpatialMode::b(2).primed(), SpatialMode::b(4).primed()];
    only.filter(|s| outputs.iter().all(|&m| s.spatial_occupation(m) == 1))
}

#[test]
fn bell_component_is_phi_plus() {
    let h = exact_pipeline(2, 4, &signs("++++++")).unwrap();
    let bell = output_component(&h);
    assert_eq!(bell.len(), 2);
    let hh = bell.amplitude(&fock("b2'H:1 b4'H:1"));
    let vv = bell.amplitude(&fock("b2'V:1 b4'V:1"));
    // |VV> trails |HH> by exactly e^{4 i dphi}
    assert_eq!(vv, &hh * &ExactAmplitude::monomial(Surd::one(), 4));
}

#[test]
fn flipped_sign_gives_phi_minus() {
    let h = exact_pipeline(2, 4, &signs("+-++++")).unwrap();
    let bell = output_component(&h);
    let hh = bell.amplitude(&fock("b2'H:1 b4'H:1"));
    let vv = bell.amplitude(&fock("b2'V:1 b4'V:1"));
    assert_eq!(vv, &hh * &ExactAmplitude::monomial(Surd::integer(-1), 4));
}

#[test]
fn herald_also_passes_doubly_occupied_outputs() {
    let h = exact_pipeline(2, 4, &signs("++++++")).unwrap();
    let all = &h.branches[&vec![0; 6]];
    let doubled = all.amplitude(&fock("b2'H:1 b2'V:1"));
    let bell = all.amplitude(&fock("b2'H:1 b4'H:1"));
    // same weight as each Bell term, so half the heralded state is off target
    assert_eq!(doubled.norm_sqr(), bell.norm_sqr());
    assert_eq!(all.len(), 4);
}

#[test]
fn noon_fringe_is_exact_cosine() {
    let h = exact_noon(2, &signs("-+++++++")).unwrap();
    let p = &h.herald_probability;
    assert_eq!(p.exponents(), vec![-8, 0, 8]);
    let c0 = p.coefficient(0);
    assert_eq!(p.coefficient(8), &(-&c0) * &Surd::rational(Rational::new(1, 2)));
    assert_eq!(p.coefficient(-8), p.coefficient(8));
    assert!(p.evaluate(0.0).norm() < 1e-18);
}

#[test]
fn noon_at_three_crystals_has_frequency_twelve() {
    let h = exact_noon(3, &signs("-+++++++++++")).unwrap();
    assert_eq!(h.herald_probability.exponents(), vec![-12, 0, 12]);
}

#[test]
fn pattern_length_checked() {
    assert!(matches!(exact_pipeline(2, 4, &signs("+++")), Err(Error::PatternLength { got: 3, expected: 6 })));
    assert!(exact_noon(2, &signs("++++++")).is_err());
}

#[test]
fn render_format() {
    let s = exact_emit(1, 1).unwrap();
    let text = s.render();
    assert!(text.contains("a1H:1 b1H:1\t1 * e^(i 2 dphi)"), "{text}");
    assert!(text.contains("a2V:1 b2V:1\t1 * e^(i 0 dphi)"), "{text}");
}

#[test]
fn halton_points() {
    let p = halton_phases(4);
    let pi = std::f64::consts::PI;
    assert_eq!(p, vec![pi, pi / 2.0, 3.0 * pi / 2.0, pi / 4.0]);
}

#[test]
fn exact_results_do_not_depend_on_term_order() {
    let s = exact_emit(2, 4).unwrap();
    let mut reversed = ExactState::default();
    for (k, a) in s.terms().collect::<Vec<_>>().into_iter().rev() {
        reversed.accumulate(k.clone(), a.clone());
    }
    assert_eq!(reversed, s);
    assert_eq!(exact_propagate(2, &reversed), exact_propagate(2, &s));
}
