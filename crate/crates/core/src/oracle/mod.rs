//! Exact re-derivation of small instances, used to check the floating-point
//! pipeline.
//!
//! Nothing here calls into [`crate::source`], [`crate::optics`] or
//! [`crate::scheme`]: the emission is enumerated directly, the beam
//! splitters are applied as a fixed relabeling of sub-modes, and polarizer
//! projections use a closed-form binomial expansion. The mirror phase stays
//! symbolic as integer powers of `e^{i dphi}`.
//!
//! Only unit-efficiency, single-photon number-resolving detection is
//! covered.

mod ring;

pub use ring::{ExactAmplitude, Rational, Surd};

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::fock::{FockState, StateVector};
use crate::mode::{ModeId, ModeRegistry, Polarization, Side, SpatialMode};
use crate::optics::Outcome;

pub const DEFAULT_TERM_BUDGET: u128 = 200_000;

/// Exact superposition with symbolic mirror phase.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExactState {
    terms: BTreeMap<FockState, ExactAmplitude>,
}

impl ExactState {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&FockState, &ExactAmplitude)> {
        self.terms.iter()
    }

    pub fn amplitude(&self, state: &FockState) -> ExactAmplitude {
        self.terms.get(state).cloned().unwrap_or_default()
    }

    fn accumulate(&mut self, key: FockState, amp: ExactAmplitude) {
        match self.terms.entry(key) {
            Entry::Vacant(slot) => {
                if !amp.is_zero() {
                    slot.insert(amp);
                }
            }
            Entry::Occupied(mut slot) => {
                let sum = slot.get() + &amp;
                if sum.is_zero() {
                    slot.remove();
                } else {
                    *slot.get_mut() = sum;
                }
            }
        }
    }

    pub fn filter<F: Fn(&FockState) -> bool>(&self, pred: F) -> Self {
        Self { terms: self.terms.iter().filter(|(k, _)| pred(k)).map(|(k, a)| (k.clone(), a.clone())).collect() }
    }

    /// `sum |amplitude|^2` as a Laurent polynomial in `e^{i dphi}`.
    pub fn norm_sqr(&self) -> ExactAmplitude {
        self.terms.values().fold(ExactAmplitude::zero(), |acc, a| &acc + &a.norm_sqr())
    }

    /// Numeric state at a given mirror phase.
    pub fn evaluate(&self, registry: ModeRegistry, delta_phi: f64) -> Result<StateVector> {
        StateVector::from_terms(registry, self.terms.iter().map(|(k, a)| (k.clone(), a.evaluate(delta_phi))))
            .map(|s| s.with_prune_threshold(0.0))
    }

    /// One line per term: canonical Fock text, a tab, the exact amplitude.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, a) in &self.terms {
            writeln!(out, "{k}\t{a}").expect("write to string");
        }
        out
    }
}

/// Number of weak compositions, `C(total + parts - 1, parts - 1)`.
fn compositions(total: u32, parts: u32) -> u128 {
    let n = u128::from(total + parts - 1);
    let k = u128::from(parts - 1);
    (0..k).fold(1u128, |c, i| c * (n - i) / (i + 1))
}

fn factorial(n: u32) -> u64 {
    (1..=u64::from(n)).product()
}

/// Exact `G^K |vac> / K!` for `n` crystals.
pub fn exact_emit(n_crystals: usize, order: u32) -> Result<ExactState> {
    exact_emit_with_budget(n_crystals, order, DEFAULT_TERM_BUDGET)
}

pub fn exact_emit_with_budget(n_crystals: usize, order: u32, budget: u128) -> Result<ExactState> {
    let slots: Vec<(u16, Polarization)> =
        (1..=(2 * n_crystals) as u16).flat_map(|m| [(m, Polarization::H), (m, Polarization::V)]).collect();
    let needed = compositions(order, slots.len() as u32);
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let mut out = ExactState::default();
    let mut counts = vec![0u32; slots.len()];
    emit_rec(&slots, &mut counts, 0, order, &mut out);
    Ok(out)
}

fn emit_rec(slots: &[(u16, Polarization)], counts: &mut [u32], at: usize, left: u32, out: &mut ExactState) {
    if at + 1 == slots.len() {
        counts[at] = left;
        let mut entries = Vec::new();
        let mut coeff = Surd::one();
        let mut exponent = 0i32;
        for (&(m, pol), &k) in slots.iter().zip(counts.iter()) {
            if k == 0 {
                continue;
            }
            entries.push((SpatialMode::a(m).with(pol), k));
            entries.push((SpatialMode::b(m).with(pol), k));
            // (w a†b†)^k / k! on vacuum: sqrt(k!)^2 / k!, times w^k
            let root = Surd::sqrt(factorial(k));
            coeff = &coeff * &(&(&root * &root) * &Surd::rational(Rational::new(1, i128::from(factorial(k)))));
            if m % 2 == 1 {
                exponent += 2 * k as i32;
            }
        }
        out.accumulate(FockState::from_entries(entries), ExactAmplitude::monomial(coeff, exponent));
        counts[at] = 0;
        return;
    }
    for k in 0..=left {
        counts[at] = k;
        emit_rec(slots, counts, at + 1, left - k, out);
    }
    counts[at] = 0;
}

/// Where each unprimed sub-mode ends up behind the beam splitters.
fn route(mode: ModeId, n_crystals: usize) -> ModeId {
    let top = (2 * n_crystals) as u16;
    let i = mode.index;
    let partner = match (mode.side, mode.pol) {
        (_, Polarization::H) => i,
        (Side::A, Polarization::V) if i.is_multiple_of(2) => i % top + 1,
        (Side::A, Polarization::V) => {
            if i == 1 {
                top
            } else {
                i - 1
            }
        }
        (Side::B, Polarization::V) if i.is_multiple_of(2) => i - 1,
        (Side::B, Polarization::V) => i + 1,
    };
    SpatialMode::new(mode.side, partner, true).with(mode.pol)
}

/// Both beam-splitter stages, unit reflection phase.
pub fn exact_propagate(n_crystals: usize, state: &ExactState) -> ExactState {
    let mut out = ExactState::default();
    for (k, a) in state.terms() {
        let moved = FockState::from_entries(k.entries().iter().map(|&(m, n)| (route(m, n_crystals), n)));
        out.accumulate(moved, a.clone());
    }
    out
}

/// Amplitude for a polarizer-plus-single-photon detection on a mode holding
/// `h` horizontal and `v` vertical photons, and the number of photons the
/// polarizer discards.
fn projection_amplitude(h: u32, v: u32, outcome: Outcome) -> Option<(u32, Surd)> {
    match outcome {
        Outcome::H => (h == 1).then(|| (v, Surd::one())),
        Outcome::V => (v == 1).then(|| (h, Surd::one())),
        Outcome::Plus | Outcome::Minus => {
            let total = h + v;
            if total == 0 {
                return None;
            }
            // a†_H = (a†_+ + a†_-)/sqrt2, a†_V = (a†_+ - a†_-)/sqrt2
            let plus_count = if outcome == Outcome::Plus { 1 } else { total - 1 };
            let mut c: i128 = 0;
            for i in 0..=h {
                let j = match plus_count.checked_sub(i) {
                    Some(j) if j <= v => j,
                    _ => continue,
                };
                let sign = if (v - j).is_multiple_of(2) { 1 } else { -1 };
                c += sign * binom(h, i) * binom(v, j);
            }
            if c == 0 {
                return None;
            }
            let minus_count = total - plus_count;
            let num = factorial(plus_count) * factorial(minus_count);
            let den = factorial(h) * factorial(v) * (1u64 << total);
            Some((total - 1, &Surd::integer(c) * &Surd::sqrt_ratio(num, den)))
        }
    }
}

fn binom(n: u32, k: u32) -> i128 {
    (0..k).fold(1i128, |acc, i| acc * i128::from(n - i) / i128::from(i + 1))
}

/// Projected, unnormalized states keyed by the discarded-photon count on
/// each measured mode.
pub fn exact_project(state: &ExactState, measured: &[(SpatialMode, Outcome)]) -> BTreeMap<Vec<u32>, ExactState> {
    let mut branches: BTreeMap<Vec<u32>, ExactState> = BTreeMap::new();
    'terms: for (k, a) in state.terms() {
        let mut label = Vec::with_capacity(measured.len());
        let mut factor = Surd::one();
        let mut rest = k.clone();
        for &(mode, outcome) in measured {
            let h = k.occupation(mode.h());
            let v = k.occupation(mode.v());
            let Some((discarded, amp)) = projection_amplitude(h, v, outcome) else {
                continue 'terms;
            };
            label.push(discarded);
            factor = &factor * &amp;
            rest = rest.without_spatial(mode);
        }
        branches.entry(label).or_default().accumulate(rest, a.scale(&factor));
    }
    branches.retain(|_, s| !s.is_empty());
    branches
}

/// Detection modes of the heralding circuit, canonical order.
pub fn detection_modes(n_crystals: usize) -> Vec<SpatialMode> {
    let top = (2 * n_crystals) as u16;
    (1..=top)
        .map(|i| SpatialMode::a(i).primed())
        .chain((1..=top).filter(|i| i % 2 == 1).map(|i| SpatialMode::b(i).primed()))
        .collect()
}

/// Every primed mode, canonical order.
pub fn all_primed_modes(n_crystals: usize) -> Vec<SpatialMode> {
    let top = (2 * n_crystals) as u16;
    (1..=top).map(|i| SpatialMode::a(i).primed()).chain((1..=top).map(|i| SpatialMode::b(i).primed())).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactHerald {
    /// Conditional (unnormalized) states on the unmeasured modes, keyed by
    /// the number of photons discarded at each measured mode.
    pub branches: BTreeMap<Vec<u32>, ExactState>,
    /// Squared norm of the emitted order, a positive integer.
    pub emitted_norm_sqr: Rational,
    /// Herald probability within the order, as a polynomial in `e^{i dphi}`.
    pub herald_probability: ExactAmplitude,
}

fn run_exact(n_crystals: usize, order: u32, measured: &[(SpatialMode, Outcome)]) -> Result<ExactHerald> {
    let emitted = exact_emit(n_crystals, order)?;
    let norm = emitted.norm_sqr();
    let emitted_norm_sqr = match norm.exponents()[..] {
        [0] => {
            let c = norm.coefficient(0);
            let mut parts = c.terms();
            match (parts.next(), parts.next()) {
                (Some((1, q)), None) => *q,
                _ => unreachable!("emission amplitudes are unit-modulus monomials"),
            }
        }
        _ => unreachable!("emission norm is phase independent"),
    };
    let propagated = exact_propagate(n_crystals, &emitted);
    let branches = exact_project(&propagated, measured);
    let total = branches.values().fold(ExactAmplitude::zero(), |acc, s| &acc + &s.norm_sqr());
    let herald_probability = total.scale(&Surd::rational(emitted_norm_sqr.recip()));
    Ok(ExactHerald { branches, emitted_norm_sqr, herald_probability })
}

/// Heralding at a single emission order with `pattern` on the detection
/// modes.
pub fn exact_pipeline(n_crystals: usize, order: u32, pattern: &[Outcome]) -> Result<ExactHerald> {
    let modes = detection_modes(n_crystals);
    if pattern.len() != modes.len() {
        return Err(Error::PatternLength { got: pattern.len(), expected: modes.len() });
    }
    let measured: Vec<_> = modes.into_iter().zip(pattern.iter().copied()).collect();
    run_exact(n_crystals, order, &measured)
}

/// Full coincidence on every primed mode at order `2n`.
pub fn exact_noon(n_crystals: usize, pattern: &[Outcome]) -> Result<ExactHerald> {
    let modes = all_primed_modes(n_crystals);
    if pattern.len() != modes.len() {
        return Err(Error::PatternLength { got: pattern.len(), expected: modes.len() });
    }
    let measured: Vec<_> = modes.into_iter().zip(pattern.iter().copied()).collect();
    run_exact(n_crystals, 2 * n_crystals as u32, &measured)
}

/// Numeric heralding figures assembled from exact per-order results.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedOrderHerald {
    pub herald_probability: f64,
    pub fidelity: Option<f64>,
}

/// Combines several emission orders with weights `tau^K` at a numeric mirror
/// phase, and scores the conditional state against `target`.
pub fn mixed_order_herald(
    n_crystals: usize,
    orders: &[u32],
    tau: f64,
    delta_phi: f64,
    pattern: &[Outcome],
    target: &StateVector,
) -> Result<MixedOrderHerald> {
    let lowest = *orders.iter().min().ok_or_else(|| Error::InvalidSource("no orders".into()))?;
    let mut denominator = 0.0;
    let mut combined: BTreeMap<Vec<u32>, BTreeMap<FockState, Complex64>> = BTreeMap::new();
    for &k in orders {
        let w = tau.powi((k - lowest) as i32);
        let exact = exact_pipeline(n_crystals, k, pattern)?;
        denominator += w * w * exact.emitted_norm_sqr.to_f64().expect("finite");
        for (label, state) in &exact.branches {
            let slot = combined.entry(label.clone()).or_default();
            for (fock, amp) in state.terms() {
                *slot.entry(fock.clone()).or_default() += amp.evaluate(delta_phi) * w;
            }
        }
    }
    let mut total = 0.0;
    let mut overlap = 0.0;
    for branch in combined.values() {
        total += branch.values().map(|a| a.norm_sqr()).sum::<f64>();
        let inner: Complex64 = target.terms().map(|(k, t)| t.conj() * branch.get(k).copied().unwrap_or_default()).sum();
        overlap += inner.norm_sqr();
    }
    let herald_probability = total / denominator;
    let fidelity = (total > 0.0).then(|| overlap / total);
    Ok(MixedOrderHerald { herald_probability, fidelity })
}

/// `count` mirror phases from the base-2 van der Corput sequence on
/// `[0, 2 pi)`, starting at the second element.
pub fn halton_phases(count: usize) -> Vec<f64> {
    (1..=count as u32)
        .map(|mut k| {
            let (mut x, mut base) = (0.0, 0.5);
            while k > 0 {
                if k & 1 == 1 {
                    x += base;
                }
                base /= 2.0;
                k >>= 1;
            }
            2.0 * std::f64::consts::PI * x
        })
        .collect()
}

#[cfg(test)]
mod tests;
