#![allow(dead_code)]

use std::path::PathBuf;

use herald_core::oracle::{exact_emit, exact_propagate, ExactState};
use herald_core::scheme::{build_circuit, post_parity_state};
use herald_core::SpatialMode;

pub fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

/// Exact order-`2n` emission from the three families that fill every primed
/// mode, through both beam-splitter stages, with one photon in every primed
/// `a` mode.
pub fn exact_post_parity(n: usize) -> ExactState {
    let top = (2 * n) as u16;
    let emitted = exact_emit(n, 2 * n as u32).expect("small order");
    let families = emitted.filter(|s| {
        let pairs: Vec<u32> = (1..=top).map(|i| s.spatial_occupation(SpatialMode::a(i))).collect();
        let shaped =
            |odd: u32, even: u32| pairs.iter().enumerate().all(|(i, &k)| k == if i % 2 == 0 { odd } else { even });
        shaped(1, 1) || shaped(0, 2) || shaped(2, 0)
    });
    exact_propagate(n, &families).filter(|s| (1..=top).all(|i| s.spatial_occupation(SpatialMode::a(i).primed()) == 1))
}

/// Largest amplitude difference between the pipeline and the exact
/// post-parity state over the given phases.
pub fn post_parity_gap(n: usize, phis: &[f64]) -> f64 {
    let layout = build_circuit(n).expect("n >= 2");
    let exact = exact_post_parity(n);
    let mut worst = 0.0f64;
    for &phi in phis {
        let numeric = post_parity_state(&layout, phi).expect("pipeline");
        let reference = exact.evaluate(layout.registry(), phi).expect("exact");
        for (k, _) in numeric.terms().chain(reference.terms()) {
            worst = worst.max((numeric.amplitude(k) - reference.amplitude(k)).norm());
        }
    }
    worst
}

pub mod props {
    use std::collections::BTreeMap;

    use herald_core::optics::{
        apply_loss, apply_pbs, measure_mode, DetectorModel, Ensemble, Outcome, PbsElement, ProjectionSpec,
    };
    use herald_core::scheme::{build_circuit, fidelity_up_to_local_phases, ghz_target, run_herald_on, SignPattern};
    use herald_core::source::SourceConfig;
    use herald_core::{Amplitude, FockState, ModeId, ModeRegistry, SpatialMode, StateVector};
    use proptest::prelude::*;
    use proptest::test_runner::TestCaseError;

    pub const TOL: f64 = 1e-12;

    pub fn registry() -> ModeRegistry {
        ModeRegistry::new(4)
    }

    pub fn sub_modes() -> Vec<ModeId> {
        [SpatialMode::a(1), SpatialMode::a(2), SpatialMode::a(1).primed(), SpatialMode::a(2).primed()]
            .into_iter()
            .flat_map(|m| [m.h(), m.v()])
            .collect()
    }

    /// Up to four Fock terms over the input modes `a1`, `a2`, each sub-mode
    /// empty or singly occupied, with random complex amplitudes.
    pub fn small_state() -> impl Strategy<Value = StateVector> {
        let term = (prop::collection::vec(0u32..=1, 4), -1.0f64..1.0, -1.0f64..1.0);
        prop::collection::vec(term, 1..=4).prop_filter_map("zero state", |terms| {
            let modes = &sub_modes()[..4];
            let mut map: BTreeMap<FockState, Amplitude> = BTreeMap::new();
            for (occ, re, im) in terms {
                let fock = FockState::from_entries(modes.iter().zip(&occ).map(|(&m, &k)| (m, k)));
                *map.entry(fock).or_default() += Amplitude::new(re, im);
            }
            let s = StateVector::from_terms(registry(), map).ok()?;
            (s.norm() > 1e-3).then(|| s.normalize().unwrap().0)
        })
    }

    /// Up to two H and two V photons in `a1'`, plus a spectator in `a2'`.
    pub fn measurable_state() -> impl Strategy<Value = StateVector> {
        let term = (0u32..=2, 0u32..=2, 0u32..=1, -1.0f64..1.0, -1.0f64..1.0);
        prop::collection::vec(term, 1..=4).prop_filter_map("zero state", |terms| {
            let m = SpatialMode::a(1).primed();
            let other = SpatialMode::a(2).primed();
            let mut map: BTreeMap<FockState, Amplitude> = BTreeMap::new();
            for (h, v, o, re, im) in terms {
                let fock = FockState::from_entries([(m.h(), h), (m.v(), v), (other.h(), o)]);
                *map.entry(fock).or_default() += Amplitude::new(re, im);
            }
            let s = StateVector::from_terms(registry(), map).ok()?;
            (s.norm() > 1e-3).then(|| s.normalize().unwrap().0)
        })
    }

    pub fn pbs() -> PbsElement {
        PbsElement::new(SpatialMode::a(1), SpatialMode::a(2), SpatialMode::a(1).primed(), SpatialMode::a(2).primed())
            .unwrap()
    }

    pub fn reflection_phase() -> impl Strategy<Value = Amplitude> {
        (0.0f64..std::f64::consts::TAU).prop_map(|t| Amplitude::from_polar(1.0, t))
    }

    /// Reflection phases that act on the heralded families as a local gauge.
    pub fn quarter_turn() -> impl Strategy<Value = Amplitude> {
        prop_oneof![Just(Amplitude::new(0.0, 1.0)), Just(Amplitude::new(-1.0, 0.0)), Just(Amplitude::new(0.0, -1.0)),]
    }

    pub fn outcome() -> impl Strategy<Value = Outcome> {
        prop_oneof![Just(Outcome::H), Just(Outcome::V), Just(Outcome::Plus), Just(Outcome::Minus)]
    }

    pub fn sign_pattern(len: usize) -> impl Strategy<Value = SignPattern> {
        prop::collection::vec(prop::bool::ANY, len).prop_map(|signs| {
            SignPattern(signs.into_iter().map(|b| if b { Outcome::Plus } else { Outcome::Minus }).collect())
        })
    }

    pub type Density = BTreeMap<(FockState, FockState), Amplitude>;

    pub fn density(e: &Ensemble) -> Density {
        let mut rho = Density::new();
        for b in &e.branches {
            for (k, x) in b.state.terms() {
                for (l, y) in b.state.terms() {
                    *rho.entry((k.clone(), l.clone())).or_default() += b.weight * x * y.conj();
                }
            }
        }
        rho
    }

    pub fn max_difference(a: &Density, b: &Density) -> f64 {
        a.keys()
            .chain(b.keys())
            .map(|k| (a.get(k).copied().unwrap_or_default() - b.get(k).copied().unwrap_or_default()).norm())
            .fold(0.0, f64::max)
    }

    fn sector_weights(s: &StateVector) -> BTreeMap<u32, f64> {
        let mut w = BTreeMap::new();
        for (f, a) in s.terms() {
            *w.entry(f.total_photons()).or_default() += a.norm_sqr();
        }
        w
    }

    /// Inner products and the weight of every photon-number sector survive
    /// the beam splitter.
    pub fn pbs_unitary(x: &StateVector, y: &StateVector, phase: Amplitude) -> Result<(), TestCaseError> {
        let p = pbs().with_reflection_phase(phase).unwrap();
        let (ox, oy) = (apply_pbs(x, &p).unwrap(), apply_pbs(y, &p).unwrap());
        prop_assert!((ox.norm() - 1.0).abs() < TOL);
        prop_assert!((ox.inner_product(&oy).unwrap() - x.inner_product(y).unwrap()).norm() < TOL);
        let (before, after) = (sector_weights(x), sector_weights(&ox));
        prop_assert_eq!(before.keys().collect::<Vec<_>>(), after.keys().collect::<Vec<_>>());
        for (n, w) in &before {
            prop_assert!((after[n] - w).abs() < TOL);
        }
        Ok(())
    }

    /// Pnr outcomes `0..=4` exhaust a mode holding at most four photons.
    pub fn measurement_complete(x: &StateVector, out: Outcome, eta: f64) -> Result<(), TestCaseError> {
        let e = Ensemble::pure(x).unwrap();
        let proj = ProjectionSpec::new(SpatialMode::a(1).primed(), out);
        let total: f64 = (0..=4).map(|k| measure_mode(&e, &proj, &DetectorModel::pnr(eta, k)).unwrap().0).sum();
        prop_assert!((total - 1.0).abs() < TOL, "total {}", total);
        Ok(())
    }

    pub fn loss_composes(x: &StateVector, e1: f64, e2: f64) -> Result<(), TestCaseError> {
        let m = SpatialMode::a(1).primed();
        let e = Ensemble::pure(x).unwrap();
        let twice = apply_loss(&apply_loss(&e, m, e1).unwrap(), m, e2).unwrap();
        let once = apply_loss(&e, m, e1 * e2).unwrap();
        prop_assert!(max_difference(&density(&twice), &density(&once)) < TOL);
        Ok(())
    }

    /// Switching the reflection phase leaves the herald probability and the
    /// fidelity after local phase correction unchanged.
    pub fn gauge_invariant(
        phi: f64,
        pattern: &SignPattern,
        phase: Amplitude,
        detector: DetectorModel,
    ) -> Result<(), TestCaseError> {
        let plain = build_circuit(2).unwrap();
        let twisted = plain.with_reflection_phase(phase).unwrap();
        let source = SourceConfig::weak(2, phi);
        let a = run_herald_on(&plain, &source, detector, pattern).unwrap();
        let b = run_herald_on(&twisted, &source, detector, pattern).unwrap();
        prop_assert!((a.herald_probability - b.herald_probability).abs() < TOL * a.herald_probability.max(1e-6));
        if a.herald_probability > 1e-12 {
            let target = ghz_target(&plain, pattern, phi).unwrap();
            let fa = fidelity_up_to_local_phases(&a.conditional_ensemble, &target).unwrap();
            let fb = fidelity_up_to_local_phases(&b.conditional_ensemble, &target).unwrap();
            prop_assert!((fa - fb).abs() < 1e-10, "{} vs {}", fa, fb);
        }
        Ok(())
    }
}
