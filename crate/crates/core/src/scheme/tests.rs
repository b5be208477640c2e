use std::f64::consts::PI;

use super::*;
use crate::optics::DetectorKind;
use crate::source::{EmissionFamily, SourceConfig};

const TOL: f64 = 1e-10;

fn names(modes: &[SpatialMode]) -> Vec<String> {
    modes.iter().map(|m| m.to_string()).collect()
}

fn pair_names(v: &[PbsElement]) -> Vec<(String, String)> {
    v.iter().map(|p| (p.in_x.to_string(), p.in_y.to_string())).collect()
}

fn pattern(s: &str) -> SignPattern {
    SignPattern::parse(s).unwrap()
}

#[test]
fn two_crystal_layout() {
    let c = build_circuit(2).unwrap();
    assert_eq!(pair_names(&c.pbs_left), [("a2".into(), "a3".into()), ("a4".into(), "a1".into())]);
    assert_eq!(pair_names(&c.pbs_right), [("b2".into(), "b1".into()), ("b4".into(), "b3".into())]);
    assert_eq!(names(&c.detection_modes), ["a1'", "a2'", "a3'", "a4'", "b1'", "b3'"]);
    assert_eq!(names(&c.output_modes), ["b2'", "b4'"]);
}

#[test]
fn larger_layouts() {
    let c = build_circuit(3).unwrap();
    assert_eq!(names(&c.detection_modes), ["a1'", "a2'", "a3'", "a4'", "a5'", "a6'", "b1'", "b3'", "b5'"]);
    assert_eq!(names(&c.output_modes), ["b2'", "b4'", "b6'"]);
    assert_eq!(c.pbs_left.last().unwrap().in_y, SpatialMode::a(1));

    let c = build_circuit(4).unwrap();
    assert_eq!(c.detection_modes.iter().filter(|m| m.side == Side::A).count(), 8);
    assert_eq!(names(&c.output_modes), ["b2'", "b4'", "b6'", "b8'"]);
    assert_eq!((c.pbs_left.len(), c.pbs_right.len()), (4, 4));
}

#[test]
fn detection_and_output_partition_primed_modes() {
    for n in 2..=4 {
        let c = build_circuit(n).unwrap();
        let mut all: Vec<_> = c.detection_modes.iter().chain(&c.output_modes).copied().collect();
        all.sort();
        assert_eq!(all, c.primed_modes());
    }
}

#[test]
fn single_crystal_rejected() {
    assert_eq!(build_circuit(1).unwrap_err(), Error::TooFewCrystals(1));
}

#[test]
fn sign_patterns() {
    let p = pattern("+-++");
    assert_eq!(p.minus_count(), 1);
    assert_eq!(p.to_string(), "+-++");
    assert_eq!(SignPattern::first_minus(3).to_string(), "-++");
    assert!(SignPattern::parse("+h").is_err());
}

#[test]
fn bell_targets() {
    let c = build_circuit(2).unwrap();
    let plus = ghz_target(&c, &pattern("++++++"), 0.0).unwrap();
    let r = 0.5f64.sqrt();
    let hh: FockState = "b2'H:1 b4'H:1".parse().unwrap();
    let vv: FockState = "b2'V:1 b4'V:1".parse().unwrap();
    assert!((plus.amplitude(&hh) - r).norm() < TOL);
    assert!((plus.amplitude(&vv) - r).norm() < TOL);
    assert_eq!(target_label(&c, &pattern("++++++")), "Phi+");

    let minus = ghz_target(&c, &pattern("+-++++"), 0.0).unwrap();
    assert!((minus.amplitude(&vv) + r).norm() < TOL);
    assert_eq!(target_label(&c, &pattern("+-++++")), "Phi-");
    assert!(ghz_target(&c, &pattern("+++"), 0.0).is_err());
}

#[test]
fn ghz3_target() {
    let c = build_circuit(3).unwrap();
    let t = ghz_target(&c, &SignPattern::all_plus(9), 0.0).unwrap();
    assert_eq!(t.len(), 2);
    assert!((t.norm() - 1.0).abs() < TOL);
    let hhh: FockState = "b2'H:1 b4'H:1 b6'H:1".parse().unwrap();
    assert!((t.amplitude(&hhh).norm() - 0.5f64.sqrt()).abs() < TOL);
    assert_eq!(target_label(&c, &SignPattern::all_plus(9)), "GHZ3+");
}

#[test]
fn target_carries_mirror_phase() {
    let c = build_circuit(2).unwrap();
    let t = ghz_target(&c, &pattern("++++++"), 0.2).unwrap();
    let vv: FockState = "b2'V:1 b4'V:1".parse().unwrap();
    assert!((t.amplitude(&vv).arg() - 0.8).abs() < TOL);
}

fn target_ensemble(c: &CircuitLayout, p: &str) -> (StateVector, Ensemble) {
    let t = ghz_target(c, &pattern(p), 0.0).unwrap();
    let e = Ensemble::pure(&t).unwrap();
    (t, e)
}

#[test]
fn fidelity_examples() {
    let c = build_circuit(2).unwrap();
    let (plus, e_plus) = target_ensemble(&c, "++++++");
    let (_, e_minus) = target_ensemble(&c, "+-++++");
    assert!((fidelity(&e_plus, &plus).unwrap() - 1.0).abs() < TOL);
    assert!(fidelity(&e_minus, &plus).unwrap().abs() < TOL);
    let mut mix = e_plus.clone();
    mix.branches.extend(e_minus.branches.iter().cloned());
    let mix = mix.normalized().unwrap();
    assert!((fidelity(&mix, &plus).unwrap() - 0.5).abs() < TOL);
    // a local Z on one output repairs the sign
    assert!((fidelity_up_to_local_phases(&e_minus, &plus).unwrap() - 1.0).abs() < TOL);
    assert!((fidelity_up_to_local_phases(&mix, &plus).unwrap() - 0.5).abs() < TOL);
}

#[test]
fn fidelity_support_checked() {
    let c = build_circuit(2).unwrap();
    let (plus, _) = target_ensemble(&c, "++++++");
    let stray = StateVector::basis(c.registry(), "b1'H:1 b4'H:1".parse().unwrap());
    assert!(matches!(fidelity(&Ensemble::pure(&stray).unwrap(), &plus), Err(Error::SupportMismatch(_))));
}

#[test]
fn herald_decomposes_into_target_and_doubly_occupied_outputs() {
    let c = build_circuit(2).unwrap();
    for p in ["++++++", "+-++++", "-+-+++"] {
        let r = run_herald(&SourceConfig::weak(2, 0.3), DetectorModel::bucket(1.0), &pattern(p)).unwrap();
        let f = r.fidelity.unwrap();
        assert!((f - r.single_occupancy_weight).abs() < TOL, "{p}");
        assert!((r.single_occupancy_fidelity.unwrap() - 1.0).abs() < TOL, "{p}");
        // every other term leaves two photons in one output mode
        for b in &r.conditional_ensemble.branches {
            for (s, _) in b.state.terms() {
                let occ: Vec<u32> = c.output_modes.iter().map(|&m| s.spatial_occupation(m)).collect();
                assert!(occ == [1, 1] || occ == [2, 0] || occ == [0, 2], "{s}");
            }
        }
    }
}

#[test]
fn herald_at_two_crystals_has_half_fidelity() {
    let r = run_herald(&SourceConfig::weak(2, 0.0), DetectorModel::bucket(1.0), &pattern("++++++")).unwrap();
    assert!((r.fidelity.unwrap() - 0.5).abs() < TOL);
    assert_eq!(r.target_label, "Phi+");
    assert_eq!(r.config.pattern, "++++++");
}

#[test]
fn minus_on_backward_a_mode_blocks_herald_at_zero_phase() {
    let r = run_herald(&SourceConfig::weak(2, 0.0), DetectorModel::bucket(1.0), &pattern("-+++++")).unwrap();
    assert_eq!(r.herald_probability, 0.0);
    assert!(r.fidelity.is_none());
    assert!(r.conditional_ensemble.is_empty());
}

#[test]
fn efficiency_scales_probability_only() {
    let source = SourceConfig::weak(2, 0.3);
    let rows = eta_scan(&source, DetectorModel::bucket(1.0), &pattern("++++++"), &[0.2, 0.5, 0.8, 1.0]).unwrap();
    let top = rows.last().unwrap();
    for row in &rows {
        assert!((row.fidelity.unwrap() - top.fidelity.unwrap()).abs() < 1e-9);
        assert!((row.herald_probability / top.herald_probability - row.eta.powi(6)).abs() < 1e-9);
    }
}

#[test]
fn bucket_and_pnr_agree_in_weak_regime() {
    let source = SourceConfig::weak(2, 0.7);
    let b = run_herald(&source, DetectorModel::bucket(1.0), &pattern("++-+++")).unwrap();
    let p = run_herald(&source, DetectorModel::pnr(1.0, 1), &pattern("++-+++")).unwrap();
    assert!((b.herald_probability - p.herald_probability).abs() < 1e-12);
}

#[test]
fn circuit_mismatch_rejected() {
    let c = build_circuit(2).unwrap();
    let source = SourceConfig::weak(3, 0.0);
    assert!(run_herald_on(&c, &source, DetectorModel::bucket(1.0), &pattern("++++++")).is_err());
}

#[test]
fn sweep_rows_are_ordered() {
    let rows = sweep_tau(2, 0.0, &[0.01, 0.1], &[DetectorModel::bucket(1.0), DetectorModel::pnr(1.0, 1)], 1).unwrap();
    let keys: Vec<(f64, DetectorKind)> = rows.iter().map(|r| (r.tau, r.detector.kind)).collect();
    assert_eq!(
        keys,
        [
            (0.01, DetectorKind::Bucket),
            (0.01, DetectorKind::Pnr),
            (0.1, DetectorKind::Bucket),
            (0.1, DetectorKind::Pnr)
        ]
    );
    assert!(rows[2].fidelity.unwrap() <= rows[0].fidelity.unwrap());
    assert!(rows[3].fidelity.unwrap() >= rows[2].fidelity.unwrap());
}

#[test]
fn post_parity_terms() {
    let c = build_circuit(2).unwrap();
    let s = post_parity_state(&c, 0.1).unwrap();
    assert_eq!(s.len(), 6);
    let phase = |text: &str| s.amplitude(&text.parse().unwrap());
    let forward = phase("a1'V:1 a2'H:1 a3'V:1 a4'H:1 b1'V:1 b2'H:1 b3'V:1 b4'H:1");
    let backward = phase("a1'H:1 a2'V:1 a3'H:1 a4'V:1 b1'H:1 b2'V:1 b3'H:1 b4'V:1");
    let single = phase("a1'H:1 a2'V:1 a3'V:1 a4'H:1 b1'H:1 b1'V:1 b4'H:1 b4'V:1");
    assert!((forward - 1.0).norm() < 1e-12);
    assert!((backward - Amplitude::from_polar(1.0, 0.8)).norm() < 1e-12);
    assert!((single - Amplitude::from_polar(1.0, 0.4)).norm() < 1e-12);
}

#[test]
fn noon_needs_odd_minus_count() {
    let c = build_circuit(2).unwrap();
    assert_eq!(noon_measurements(&c, &SignPattern::all_plus(8)).unwrap_err(), Error::EvenMinusCount(0));
    assert!(noon_measurements(&c, &SignPattern::first_minus(6)).is_err());
}

#[test]
fn noon_vanishes_at_zero_phase() {
    let scan = noon_scan(2, &[0.0, PI / 8.0], &SignPattern::first_minus(8)).unwrap();
    assert!(scan.points[0].1.abs() < 1e-15);
    assert!(scan.points[1].1 > 0.0);
}

#[test]
fn noon_single_pair_family_cancels() {
    let c = build_circuit(2).unwrap();
    let measurements = noon_measurements(&c, &SignPattern::first_minus(8)).unwrap();
    for phi in [0.0, 0.37, 1.2] {
        let terms = build_pair_terms(2, phi);
        let singles = emit_order(&terms, 4, c.registry())
            .unwrap()
            .filter(|s| emission_family(s, 2) == Some(EmissionFamily::SinglePairs));
        let out = c.propagate(&singles).unwrap();
        let (p, _) = detect_pattern(&Ensemble::pure(&out).unwrap(), &measurements).unwrap();
        assert!(p.abs() < 1e-12);
    }
}

#[test]
fn three_pairs_into_one_forward_mode_never_coincide() {
    let c = build_circuit(2).unwrap();
    let terms = build_pair_terms(2, 0.0);
    let emitted = emit_order(&terms, 4, c.registry())
        .unwrap()
        .filter(|s| s.spatial_occupation(SpatialMode::a(2)) == 3 && s.spatial_occupation(SpatialMode::a(4)) == 1);
    assert!(!emitted.is_zero());
    let out = c.propagate(&emitted).unwrap();
    for p in ["+-++++++", "-+++++++", "+++-++++"] {
        let measurements = c
            .primed_modes()
            .into_iter()
            .zip(&pattern(p).0)
            .map(|(m, &o)| (ProjectionSpec::new(m, o), DetectorModel::bucket(1.0)))
            .collect::<Vec<_>>();
        let (prob, _) = detect_pattern(&Ensemble::pure(&out).unwrap(), &measurements).unwrap();
        assert_eq!(prob, 0.0);
    }
}

#[test]
fn phase_grid_spacing() {
    let g = phase_grid(4);
    assert_eq!(g.len(), 4);
    assert!((g[1] - PI / 2.0).abs() < 1e-15);
    assert_eq!(g[0], 0.0);
}
