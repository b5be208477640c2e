//! The heralding circuit and the analyses run on it.
//!
//! For `n` crystals the left-hand beam splitters pair each forward `a` mode
//! with the next backward one (`a2 & a3`, `a4 & a5`, ..., `a2n & a1`) and act
//! as polarization parity checks. The right-hand beam splitters pair the two
//! `b` modes of the same crystal (`b1 & b2`, `b3 & b4`, ...). Detecting one
//! photon in every primed `a` mode and every odd primed `b` mode heralds an
//! `n`-photon GHZ state in the even primed `b` modes.

mod fringe;

pub use fringe::{fit_fringe, phase_sensitivity, shot_noise_sensitivity, FitResult, FringeScan};

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{Amplitude, FockState, StateVector};
use crate::mode::{ModeRegistry, Polarization, Side, SpatialMode};
use crate::optics::{apply_pbs, detect_pattern, DetectorModel, Ensemble, Outcome, PbsElement, ProjectionSpec};
use crate::source::{build_pair_terms, emission_family, emit_order, emit_truncated, SourceConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitLayout {
    pub n_crystals: usize,
    pub pbs_left: Vec<PbsElement>,
    pub pbs_right: Vec<PbsElement>,
    /// Every primed `a` mode followed by the odd primed `b` modes.
    pub detection_modes: Vec<SpatialMode>,
    /// The even primed `b` modes.
    pub output_modes: Vec<SpatialMode>,
}

pub fn build_circuit(n_crystals: usize) -> Result<CircuitLayout> {
    if n_crystals < 2 {
        return Err(Error::TooFewCrystals(n_crystals));
    }
    let top = (2 * n_crystals) as u16;
    let mut pbs_left = Vec::with_capacity(n_crystals);
    let mut pbs_right = Vec::with_capacity(n_crystals);
    for j in 1..=n_crystals as u16 {
        let forward = SpatialMode::a(2 * j);
        let backward = SpatialMode::a(if 2 * j == top { 1 } else { 2 * j + 1 });
        pbs_left.push(PbsElement::new(forward, backward, forward.primed(), backward.primed())?);
        let (even, odd) = (SpatialMode::b(2 * j), SpatialMode::b(2 * j - 1));
        pbs_right.push(PbsElement::new(even, odd, even.primed(), odd.primed())?);
    }
    let mut detection_modes: Vec<SpatialMode> = (1..=top).map(|i| SpatialMode::a(i).primed()).collect();
    detection_modes.extend((1..=top).step_by(2).map(|i| SpatialMode::b(i).primed()));
    let output_modes = (2..=top).step_by(2).map(|i| SpatialMode::b(i).primed()).collect();
    Ok(CircuitLayout { n_crystals, pbs_left, pbs_right, detection_modes, output_modes })
}

impl CircuitLayout {
    pub fn registry(&self) -> ModeRegistry {
        ModeRegistry::for_crystals(self.n_crystals)
    }

    /// All primed modes in canonical order.
    pub fn primed_modes(&self) -> Vec<SpatialMode> {
        let top = (2 * self.n_crystals) as u16;
        [Side::A, Side::B]
            .into_iter()
            .flat_map(|side| (1..=top).map(move |i| SpatialMode::new(side, i, true)))
            .collect()
    }

    /// Same circuit with every reflection carrying `phase`.
    pub fn with_reflection_phase(&self, phase: Amplitude) -> Result<Self> {
        let set = |v: &[PbsElement]| v.iter().map(|p| p.with_reflection_phase(phase)).collect::<Result<Vec<_>>>();
        Ok(Self { pbs_left: set(&self.pbs_left)?, pbs_right: set(&self.pbs_right)?, ..self.clone() })
    }

    /// Runs a state through both beam-splitter stages.
    pub fn propagate(&self, state: &StateVector) -> Result<StateVector> {
        self.pbs_left.iter().chain(&self.pbs_right).try_fold(state.clone(), |s, pbs| apply_pbs(&s, pbs))
    }
}

/// One projection outcome per measured mode, in canonical mode order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignPattern(pub Vec<Outcome>);

impl SignPattern {
    pub fn parse(text: &str) -> Result<Self> {
        text.chars()
            .map(|c| match c {
                '+' | '-' => Outcome::from_sign(c),
                other => Err(Error::InvalidSign(other)),
            })
            .collect::<Result<Vec<_>>>()
            .map(SignPattern)
    }

    pub fn all_plus(len: usize) -> Self {
        SignPattern(vec![Outcome::Plus; len])
    }

    /// `-` on the first mode, `+` elsewhere.
    pub fn first_minus(len: usize) -> Self {
        let mut v = vec![Outcome::Plus; len];
        if let Some(first) = v.first_mut() {
            *first = Outcome::Minus;
        }
        SignPattern(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn minus_count(&self) -> usize {
        self.0.iter().filter(|&&o| o == Outcome::Minus).count()
    }

    fn sign(o: Outcome) -> f64 {
        if o == Outcome::Minus {
            -1.0
        } else {
            1.0
        }
    }

    fn check_len(&self, expected: usize) -> Result<()> {
        if self.len() != expected {
            return Err(Error::PatternLength { got: self.len(), expected });
        }
        Ok(())
    }
}

impl fmt::Display for SignPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|o| write!(f, "{}", o.symbol()))
    }
}

/// Relative sign of the `|V...V>` term heralded by `pattern`: the product
/// of the signs projected onto the even primed `a` modes.
fn herald_relative_sign(layout: &CircuitLayout, pattern: &SignPattern) -> f64 {
    layout
        .detection_modes
        .iter()
        .zip(&pattern.0)
        .filter(|(m, _)| m.side == Side::A && m.index % 2 == 0)
        .map(|(_, &o)| SignPattern::sign(o))
        .product()
}

/// The GHZ state a herald pattern announces on the output modes:
/// `(|H...H> + s e^{2 i n dphi} |V...V>)/sqrt(2)`.
///
/// Forward and backward double emissions end up in `|H...H>` and `|V...V>`
/// with phases `1` and `e^{4 i n dphi}`, and the single-pair family adds
/// `e^{2 i n dphi}` to both, which leaves the relative phase `e^{2 i n dphi}`.
pub fn ghz_target(layout: &CircuitLayout, pattern: &SignPattern, delta_phi: f64) -> Result<StateVector> {
    pattern.check_len(layout.detection_modes.len())?;
    let sign = herald_relative_sign(layout, pattern);
    let product = |pol: Polarization| FockState::from_entries(layout.output_modes.iter().map(|m| (m.with(pol), 1)));
    let r = 0.5f64.sqrt();
    let rel = Amplitude::from_polar(sign, 2.0 * layout.n_crystals as f64 * delta_phi);
    StateVector::from_terms(
        layout.registry(),
        [(product(Polarization::H), Amplitude::new(r, 0.0)), (product(Polarization::V), rel * r)],
    )
}

pub fn target_label(layout: &CircuitLayout, pattern: &SignPattern) -> String {
    let sign = if herald_relative_sign(layout, pattern) > 0.0 { '+' } else { '-' };
    match layout.n_crystals {
        2 => format!("Phi{sign}"),
        n => format!("GHZ{n}{sign}"),
    }
}

/// `sum_i w_i |<target|psi_i>|^2` for a normalized ensemble.
pub fn fidelity(ensemble: &Ensemble, target: &StateVector) -> Result<f64> {
    check_support(ensemble, target)?;
    ensemble.overlap_with(target)
}

/// Fidelity with a two-term target `alpha|A> + beta|B>` maximized over the
/// relative phase of the two terms. For GHZ targets this is the fidelity
/// after the best local phase correction on the output modes.
pub fn fidelity_up_to_local_phases(ensemble: &Ensemble, target: &StateVector) -> Result<f64> {
    check_support(ensemble, target)?;
    let terms: Vec<(&FockState, &Amplitude)> = target.terms().collect();
    let [(a_key, a_amp), (b_key, b_amp)] = terms[..] else {
        return Err(Error::SupportMismatch("local-phase fidelity needs a two-term target".into()));
    };
    let (mut diag, mut cross) = (0.0, Amplitude::default());
    for b in &ensemble.branches {
        let x = b.state.amplitude(a_key) * a_amp.norm();
        let y = b.state.amplitude(b_key) * b_amp.norm();
        diag += b.weight * (x.norm_sqr() + y.norm_sqr());
        cross += b.weight * x.conj() * y;
    }
    Ok(diag + 2.0 * cross.norm())
}

fn check_support(ensemble: &Ensemble, target: &StateVector) -> Result<()> {
    let mut support: Vec<SpatialMode> =
        target.terms().flat_map(|(s, _)| s.entries().iter().map(|(m, _)| m.spatial())).collect();
    support.sort();
    support.dedup();
    for b in &ensemble.branches {
        for (state, _) in b.state.terms() {
            if let Some((m, _)) = state.entries().iter().find(|(m, _)| support.binary_search(&m.spatial()).is_err()) {
                return Err(Error::SupportMismatch(format!("ensemble has photons in {}", m.spatial())));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeraldConfig {
    pub source: SourceConfig,
    pub detector: DetectorModel,
    pub pattern: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeraldResult {
    /// Probability of the herald, conditional on the emission orders included
    /// in the source configuration.
    pub herald_probability: f64,
    /// Normalized conditional state on the output modes; empty when the
    /// herald never fires.
    pub conditional_ensemble: Ensemble,
    /// `None` when the herald probability is zero.
    pub fidelity: Option<f64>,
    /// Share of the conditional state with exactly one photon in every
    /// output mode.
    pub single_occupancy_weight: f64,
    /// Fidelity of that share alone, renormalized; what an extra `n`-fold
    /// coincidence on the output modes would see.
    pub single_occupancy_fidelity: Option<f64>,
    pub target: StateVector,
    pub target_label: String,
    pub config: HeraldConfig,
}

/// The measurement pattern on the detection modes with one detector model.
pub fn herald_measurements(
    layout: &CircuitLayout,
    pattern: &SignPattern,
    detector: DetectorModel,
) -> Result<Vec<(ProjectionSpec, DetectorModel)>> {
    pattern.check_len(layout.detection_modes.len())?;
    Ok(layout.detection_modes.iter().zip(&pattern.0).map(|(&m, &o)| (ProjectionSpec::new(m, o), detector)).collect())
}

pub fn run_herald(source: &SourceConfig, detector: DetectorModel, pattern: &SignPattern) -> Result<HeraldResult> {
    let layout = build_circuit(source.n_crystals)?;
    run_herald_on(&layout, source, detector, pattern)
}

/// Heralding analysis on a given layout (e.g. with non-trivial reflection
/// phases).
pub fn run_herald_on(
    layout: &CircuitLayout,
    source: &SourceConfig,
    detector: DetectorModel,
    pattern: &SignPattern,
) -> Result<HeraldResult> {
    if source.n_crystals != layout.n_crystals {
        return Err(Error::InvalidSource(format!(
            "source has {} crystals, circuit has {}",
            source.n_crystals, layout.n_crystals
        )));
    }
    detector.validate()?;
    let measurements = herald_measurements(layout, pattern, detector)?;
    let target = ghz_target(layout, pattern, source.delta_phi)?;
    let emitted = emit_truncated(source)?;
    let propagated = layout.propagate(&emitted)?;
    let (probability, conditional) = detect_pattern(&Ensemble::pure(&propagated)?, &measurements)?;
    let (conditional_ensemble, fidelity) = if conditional.is_empty() || probability <= 0.0 {
        (Ensemble::default(), None)
    } else {
        let normalized = conditional.normalized()?;
        let f = fidelity(&normalized, &target)?;
        (normalized, Some(f))
    };
    let single = single_occupancy(layout, &conditional_ensemble);
    let single_occupancy_weight = single.total_weight();
    let single_occupancy_fidelity =
        if single.is_empty() { None } else { Some(self::fidelity(&single.normalized()?, &target)?) };
    Ok(HeraldResult {
        herald_probability: probability.max(0.0),
        conditional_ensemble,
        fidelity,
        single_occupancy_weight,
        single_occupancy_fidelity,
        target_label: target_label(layout, pattern),
        target,
        config: HeraldConfig { source: source.clone(), detector, pattern: pattern.to_string() },
    })
}

/// Order-`2n` emission restricted to the three families that can fill every
/// primed mode, sent through both beam-splitter stages and kept where every
/// primed `a` mode holds one photon. Amplitudes are left unnormalized, so
/// each surviving term has modulus one.
pub fn post_parity_state(layout: &CircuitLayout, delta_phi: f64) -> Result<StateVector> {
    let n = layout.n_crystals;
    let terms = build_pair_terms(n, delta_phi);
    let emitted = emit_order(&terms, 2 * n as u32, layout.registry())?;
    let families = emitted.filter(|s| emission_family(s, n).is_some());
    let propagated = layout.propagate(&families)?;
    let a_modes: Vec<SpatialMode> = layout.detection_modes.iter().copied().filter(|m| m.side == Side::A).collect();
    Ok(propagated.filter(|s| a_modes.iter().all(|&m| s.spatial_occupation(m) == 1)))
}

/// The part of `ensemble` with one photon in each output mode.
pub fn single_occupancy(layout: &CircuitLayout, ensemble: &Ensemble) -> Ensemble {
    ensemble.filter_terms(|s| layout.output_modes.iter().all(|&m| s.spatial_occupation(m) == 1))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub tau: f64,
    pub detector: DetectorModel,
    pub fidelity: Option<f64>,
    pub herald_probability: f64,
}

/// Heralding with `2n ..= 2n + extra_orders` pairs over a grid of
/// interaction parameters, all-plus pattern. Rows are ordered by tau, then
/// by detector in the order given.
pub fn sweep_tau(
    n_crystals: usize,
    delta_phi: f64,
    taus: &[f64],
    detectors: &[DetectorModel],
    extra_orders: u32,
) -> Result<Vec<SweepRow>> {
    let layout = build_circuit(n_crystals)?;
    let pattern = SignPattern::all_plus(layout.detection_modes.len());
    let base = 2 * n_crystals as u32;
    let jobs: Vec<(f64, DetectorModel)> = taus.iter().flat_map(|&t| detectors.iter().map(move |&d| (t, d))).collect();
    jobs.par_iter()
        .map(|&(tau, detector)| {
            let source =
                SourceConfig::weak(n_crystals, delta_phi).with_tau(tau).with_orders(base..=base + extra_orders);
            let r = run_herald_on(&layout, &source, detector, &pattern)?;
            Ok(SweepRow { tau, detector, fidelity: r.fidelity, herald_probability: r.herald_probability })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EtaRow {
    pub eta: f64,
    pub fidelity: Option<f64>,
    pub herald_probability: f64,
}

/// Heralding at a list of detector efficiencies, same detector kind.
pub fn eta_scan(
    source: &SourceConfig,
    detector: DetectorModel,
    pattern: &SignPattern,
    etas: &[f64],
) -> Result<Vec<EtaRow>> {
    let layout = build_circuit(source.n_crystals)?;
    etas.par_iter()
        .map(|&eta| {
            let r = run_herald_on(&layout, source, DetectorModel { eta, ..detector }, pattern)?;
            Ok(EtaRow { eta, fidelity: r.fidelity, herald_probability: r.herald_probability })
        })
        .collect()
}

/// Measurement pattern for the interferometer: every primed mode projected
/// with a single-photon, unit-efficiency number-resolving detector.
pub fn noon_measurements(
    layout: &CircuitLayout,
    pattern: &SignPattern,
) -> Result<Vec<(ProjectionSpec, DetectorModel)>> {
    let modes = layout.primed_modes();
    pattern.check_len(modes.len())?;
    if pattern.minus_count().is_multiple_of(2) {
        return Err(Error::EvenMinusCount(pattern.minus_count()));
    }
    Ok(modes
        .into_iter()
        .zip(&pattern.0)
        .map(|(m, &o)| (ProjectionSpec::new(m, o), DetectorModel::pnr(1.0, 1)))
        .collect())
}

/// Full `4n`-fold coincidence probability at each mirror phase.
pub fn noon_scan(n_crystals: usize, phis: &[f64], pattern: &SignPattern) -> Result<FringeScan> {
    let layout = build_circuit(n_crystals)?;
    let measurements = noon_measurements(&layout, pattern)?;
    let points = phis
        .par_iter()
        .map(|&phi| {
            let emitted = emit_truncated(&SourceConfig::weak(n_crystals, phi))?;
            let propagated = layout.propagate(&emitted)?;
            let (p, _) = detect_pattern(&Ensemble::pure(&propagated)?, &measurements)?;
            Ok((phi, p))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FringeScan { points })
}

/// `count` evenly spaced phases over `[0, 2 pi)`.
pub fn phase_grid(count: usize) -> Vec<f64> {
    (0..count).map(|k| 2.0 * std::f64::consts::PI * k as f64 / count as f64).collect()
}

#[cfg(test)]
mod tests;
