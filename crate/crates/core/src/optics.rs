//! Linear optics and photodetection on sparse Fock states.
//!
//! Mixed states are carried as an [`Ensemble`] of unit-norm pure branches.
//! Loss and detection split branches by the environment outcome (photons
//! lost, photons absorbed, photons discarded by the polarizer), so branches
//! never interfere with one another.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_4;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{Amplitude, FockState, StateVector};
use crate::mode::{ModeId, Polarization, SpatialMode};

/// Polarizing beam splitter: H is transmitted, V is reflected.
///
/// `in_x` transmits into `out_xp` and reflects into `out_yp`; `in_y`
/// transmits into `out_yp` and reflects into `out_xp`. Every reflected
/// photon picks up `reflection_phase`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PbsElement {
    pub in_x: SpatialMode,
    pub in_y: SpatialMode,
    pub out_xp: SpatialMode,
    pub out_yp: SpatialMode,
    pub reflection_phase: Amplitude,
}

impl PbsElement {
    pub fn new(in_x: SpatialMode, in_y: SpatialMode, out_xp: SpatialMode, out_yp: SpatialMode) -> Result<Self> {
        let pbs = Self { in_x, in_y, out_xp, out_yp, reflection_phase: Amplitude::new(1.0, 0.0) };
        pbs.validate()?;
        Ok(pbs)
    }

    pub fn with_reflection_phase(self, phase: Amplitude) -> Result<Self> {
        let pbs = Self { reflection_phase: phase, ..self };
        pbs.validate()?;
        Ok(pbs)
    }

    pub fn validate(&self) -> Result<()> {
        let labels = [self.in_x, self.in_y, self.out_xp, self.out_yp];
        for i in 0..4 {
            for j in i + 1..4 {
                if labels[i] == labels[j] {
                    return Err(Error::InvalidPbs(format!("label {} used twice", labels[i])));
                }
            }
        }
        if (self.reflection_phase.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidPbs(format!("reflection phase modulus {}", self.reflection_phase.norm())));
        }
        Ok(())
    }

    fn image(&self, mode: ModeId) -> Vec<(ModeId, Amplitude)> {
        let one = Amplitude::new(1.0, 0.0);
        let r = self.reflection_phase;
        let s = mode.spatial();
        match mode.pol {
            Polarization::H if s == self.in_x => vec![(self.out_xp.h(), one)],
            Polarization::H => vec![(self.out_yp.h(), one)],
            Polarization::V if s == self.in_x => vec![(self.out_yp.v(), r)],
            Polarization::V => vec![(self.out_xp.v(), r)],
        }
    }
}

pub fn apply_pbs(state: &StateVector, pbs: &PbsElement) -> Result<StateVector> {
    pbs.validate()?;
    let inputs = [pbs.in_x.h(), pbs.in_x.v(), pbs.in_y.h(), pbs.in_y.v()];
    let out = state.substitute_modes(&inputs, |m| pbs.image(m))?;
    for input in [pbs.in_x, pbs.in_y] {
        if out.terms().any(|(s, _)| s.spatial_occupation(input) > 0) {
            return Err(Error::ResidualInput(input));
        }
    }
    Ok(out)
}

/// Rotates the polarization of `mode` by `angle`:
/// `a†_H -> cos a†_H + sin a†_V`, `a†_V -> -sin a†_H + cos a†_V`.
pub fn rotate_polarization(state: &StateVector, mode: SpatialMode, angle: f64) -> Result<StateVector> {
    let (sin, cos) = angle.sin_cos();
    let snap = |x: f64| if x.abs() < 1e-15 { 0.0 } else { x };
    let (sin, cos) = (snap(sin), snap(cos));
    let h = mode.h();
    let v = mode.v();
    state.substitute_modes(&[h, v], |m| {
        let (ch, cv) = if m == h { (cos, sin) } else { (-sin, cos) };
        [(h, ch), (v, cv)].into_iter().filter(|&(_, c)| c != 0.0).map(|(t, c)| (t, Amplitude::new(c, 0.0))).collect()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Basis {
    /// Horizontal / vertical.
    Rectilinear,
    /// `|+-> = (|H> +- |V>)/sqrt(2)`.
    Diagonal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Outcome {
    H,
    V,
    Plus,
    Minus,
}

impl Outcome {
    pub fn basis(self) -> Basis {
        match self {
            Outcome::H | Outcome::V => Basis::Rectilinear,
            Outcome::Plus | Outcome::Minus => Basis::Diagonal,
        }
    }

    /// Rotation that maps this outcome's creation operator onto `a†_H`
    /// (up to a sign).
    pub fn alignment_angle(self) -> f64 {
        match self {
            Outcome::H => 0.0,
            Outcome::V => 2.0 * FRAC_PI_4,
            Outcome::Plus => -FRAC_PI_4,
            Outcome::Minus => FRAC_PI_4,
        }
    }

    pub fn from_sign(c: char) -> Result<Self> {
        match c {
            '+' => Ok(Outcome::Plus),
            '-' => Ok(Outcome::Minus),
            'H' => Ok(Outcome::H),
            'V' => Ok(Outcome::V),
            other => Err(Error::InvalidSign(other)),
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Outcome::H => 'H',
            Outcome::V => 'V',
            Outcome::Plus => '+',
            Outcome::Minus => '-',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProjectionSpec {
    pub mode: SpatialMode,
    pub outcome: Outcome,
}

impl ProjectionSpec {
    pub fn new(mode: SpatialMode, outcome: Outcome) -> Self {
        Self { mode, outcome }
    }

    pub fn basis(&self) -> Basis {
        self.outcome.basis()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    /// Clicks on one or more photons.
    Bucket,
    /// Resolves photon number; conditions on an exact count.
    Pnr,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorModel {
    pub kind: DetectorKind,
    #[serde(default = "unit_efficiency")]
    pub eta: f64,
    #[serde(default = "one")]
    pub required_count: u32,
}

fn unit_efficiency() -> f64 {
    1.0
}

fn one() -> u32 {
    1
}

impl DetectorModel {
    pub fn bucket(eta: f64) -> Self {
        Self { kind: DetectorKind::Bucket, eta, required_count: 1 }
    }

    /// Number-resolving detector conditioned on exactly `count` photons.
    /// `count = 0` selects the no-click outcome.
    pub fn pnr(eta: f64, count: u32) -> Self {
        Self { kind: DetectorKind::Pnr, eta, required_count: count }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::InvalidEfficiency(self.eta));
        }
        Ok(())
    }

    fn accepts(&self, detected: u32) -> bool {
        match self.kind {
            DetectorKind::Bucket => detected >= 1,
            DetectorKind::Pnr => detected == self.required_count,
        }
    }

    /// Whether an empty mode can never satisfy this detector.
    fn needs_photon(&self) -> bool {
        match self.kind {
            DetectorKind::Bucket => true,
            DetectorKind::Pnr => self.required_count >= 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub weight: f64,
    pub state: StateVector,
}

/// Probability-weighted list of unit-norm pure states. The weights may sum
/// to less than one after conditioning.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Ensemble {
    pub branches: Vec<Branch>,
}

impl Ensemble {
    /// Single branch holding the normalized `state`, with weight one.
    pub fn pure(state: &StateVector) -> Result<Self> {
        let (state, _) = state.normalize()?;
        Ok(Self { branches: vec![Branch { weight: 1.0, state }] })
    }

    pub fn total_weight(&self) -> f64 {
        self.branches.iter().map(|b| b.weight).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    /// Rescales the weights to sum to one.
    pub fn normalized(&self) -> Result<Self> {
        let total = self.total_weight();
        if total <= 0.0 {
            return Err(Error::ZeroState);
        }
        Ok(Self {
            branches: self
                .branches
                .iter()
                .map(|b| Branch { weight: b.weight / total, state: b.state.clone() })
                .collect(),
        })
    }

    /// Splits an unnormalized vector into a branch of weight `weight * |v|^2`.
    fn push_scaled(&mut self, weight: f64, vector: StateVector) {
        let p = vector.norm_sqr();
        if p > 0.0 && weight > 0.0 {
            if let Ok((state, _)) = vector.normalize() {
                self.branches.push(Branch { weight: weight * p, state });
            }
        }
    }

    /// Keeps the terms accepted by `pred` in every branch. Branch weights
    /// shrink by the discarded probability; emptied branches are dropped.
    pub fn filter_terms<F: Fn(&FockState) -> bool>(&self, pred: F) -> Self {
        let mut out = Self::default();
        for b in &self.branches {
            out.push_scaled(b.weight, b.state.filter(&pred));
        }
        out
    }

    /// Applies a pure-state map to every branch.
    pub fn map_states<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(&StateVector) -> Result<StateVector> + Sync,
    {
        let branches = self
            .branches
            .par_iter()
            .map(|b| Ok(Branch { weight: b.weight, state: f(&b.state)? }))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { branches })
    }

    /// `<target| rho |target>` for the ensemble as given (no renormalization).
    pub fn overlap_with(&self, target: &StateVector) -> Result<f64> {
        let mut acc = 0.0;
        for b in &self.branches {
            acc += b.weight * target.inner_product(&b.state)?.norm_sqr();
        }
        Ok(acc)
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

/// Loss on one sub-mode of a pure state, split by the number of photons lost.
fn lose_from_submode(state: &StateVector, mode: ModeId, eta: f64) -> BTreeMap<u32, StateVector> {
    let mut parts: BTreeMap<u32, BTreeMap<FockState, Amplitude>> = BTreeMap::new();
    for (fock, amp) in state.terms() {
        let m = fock.occupation(mode);
        for lost in 0..=m {
            let kept = m - lost;
            let f =
                binomial(m, lost).sqrt() * eta.powf(f64::from(kept) / 2.0) * (1.0 - eta).powf(f64::from(lost) / 2.0);
            if f == 0.0 {
                continue;
            }
            let key = fock.with_removed(mode, lost);
            *parts.entry(lost).or_default().entry(key).or_default() += amp * f;
        }
    }
    parts
        .into_iter()
        .map(|(lost, terms)| (lost, StateVector::from_map(state.registry(), state.prune_threshold(), terms)))
        .collect()
}

fn loss_on_submode(ensemble: &Ensemble, mode: ModeId, eta: f64) -> Ensemble {
    let mut out = Ensemble::default();
    for b in &ensemble.branches {
        for (_, part) in lose_from_submode(&b.state, mode, eta) {
            out.push_scaled(b.weight, part);
        }
    }
    out
}

/// Sends each photon of `mode` to an unobserved environment with
/// probability `1 - eta`.
pub fn apply_loss(ensemble: &Ensemble, mode: SpatialMode, eta: f64) -> Result<Ensemble> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidEfficiency(eta));
    }
    if eta == 1.0 {
        return Ok(ensemble.clone());
    }
    let after_h = loss_on_submode(ensemble, mode.h(), eta);
    Ok(loss_on_submode(&after_h, mode.v(), eta))
}

/// Projects `proj.mode` through a polarizer onto the requested outcome and
/// detects the transmitted light.
///
/// The orthogonal polarization is discarded. Photons lost to inefficiency,
/// the discarded photons and (for bucket detectors) the click multiplicity
/// all label separate branches. Returns the total surviving weight and the
/// conditioned, unnormalized ensemble on the remaining modes.
pub fn measure_mode(ensemble: &Ensemble, proj: &ProjectionSpec, detector: &DetectorModel) -> Result<(f64, Ensemble)> {
    detector.validate()?;
    let aligned = proj.mode.h();
    let orthogonal = proj.mode.v();
    let angle = proj.outcome.alignment_angle();
    let per_branch = ensemble
        .branches
        .par_iter()
        .map(|b| -> Result<Vec<Branch>> {
            let rotated = rotate_polarization(&b.state, proj.mode, angle)?;
            let mut out = Ensemble::default();
            for (_, part) in lose_from_submode(&rotated, aligned, detector.eta) {
                let mut groups: BTreeMap<(u32, u32), BTreeMap<FockState, Amplitude>> = BTreeMap::new();
                for (fock, amp) in part.terms() {
                    let detected = fock.occupation(aligned);
                    if !detector.accepts(detected) {
                        continue;
                    }
                    let key = (detected, fock.occupation(orthogonal));
                    *groups.entry(key).or_default().entry(fock.without_spatial(proj.mode)).or_default() += amp;
                }
                for (_, terms) in groups {
                    out.push_scaled(b.weight, StateVector::from_map(part.registry(), part.prune_threshold(), terms));
                }
            }
            Ok(out.branches)
        })
        .collect::<Result<Vec<_>>>()?;
    let conditional = Ensemble { branches: per_branch.into_iter().flatten().collect() };
    Ok((conditional.total_weight(), conditional))
}

/// Joint detection on several modes.
pub fn detect_pattern(ensemble: &Ensemble, pattern: &[(ProjectionSpec, DetectorModel)]) -> Result<(f64, Ensemble)> {
    for (i, (p, d)) in pattern.iter().enumerate() {
        d.validate()?;
        if pattern[..i].iter().any(|(q, _)| q.mode == p.mode) {
            return Err(Error::DuplicateMeasurement(p.mode));
        }
    }
    // A mode with no photons never satisfies a detector that needs one, at
    // any efficiency, so such terms can be dropped before any branching.
    let required: Vec<SpatialMode> = pattern.iter().filter(|(_, d)| d.needs_photon()).map(|(p, _)| p.mode).collect();
    let mut current = Ensemble::default();
    for b in &ensemble.branches {
        let kept = b.state.filter(|s| required.iter().all(|&m| s.spatial_occupation(m) > 0));
        if kept.len() == b.state.len() {
            current.branches.push(b.clone());
        } else {
            current.push_scaled(b.weight, kept);
        }
    }
    for (proj, det) in pattern {
        if current.is_empty() {
            break;
        }
        current = measure_mode(&current, proj, det)?.1;
    }
    Ok((current.total_weight(), current))
}
