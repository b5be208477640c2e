//! Multi-pair emission from the double-passed down-conversion crystals.
//!
//! Crystal `j` emits polarization-entangled pairs forward into modes
//! `a(2j) & b(2j)` and, after the pump is reflected, backward into
//! `a(2j-1) & b(2j-1)`. The pair-creation operator is
//!
//! ```text
//! G = sum_m sum_{p in H,V} w_m a†_{m,p} b†_{m,p}
//! ```
//!
//! with `w_m = 1` on forward (even) indices and `w_m = e^{2 i dphi}` on
//! backward (odd) indices: each backward photon carries the mirror phase
//! `dphi = 2 pi dx / lambda`, so a pair carries twice that. Order `K` of the
//! emission is `G^K |vac> / K!`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{Amplitude, FockState, StateVector};
use crate::mode::{ModeRegistry, Polarization, SpatialMode};

/// Largest number of multinomial terms a single order may expand into.
pub const DEFAULT_EXPANSION_BUDGET: u128 = 2_000_000;

/// One summand `w a†_{m,p} b†_{m,p}` of the pair-creation operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairTerm {
    pub mode_a: SpatialMode,
    pub mode_b: SpatialMode,
    pub polarization: Polarization,
    pub weight: Amplitude,
}

impl PairTerm {
    pub fn index(&self) -> u16 {
        self.mode_a.index
    }

    /// Backward emission happens into odd indices.
    pub fn is_backward(&self) -> bool {
        self.mode_a.index % 2 == 1
    }
}

/// Phase acquired by one backward-emitted pair.
pub fn backward_pair_phase(delta_phi: f64) -> f64 {
    2.0 * delta_phi
}

/// Mirror displacement to single-photon phase: `2 pi dx / lambda`.
pub fn phase_from_mirror(delta_x: f64, lambda: f64) -> Result<f64> {
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(Error::NonPositiveWavelength(lambda));
    }
    Ok(2.0 * std::f64::consts::PI * delta_x / lambda)
}

/// The `4n` pair terms for `n` crystals, ordered by index then polarization.
pub fn build_pair_terms(n_crystals: usize, delta_phi: f64) -> Vec<PairTerm> {
    let backward = Amplitude::from_polar(1.0, backward_pair_phase(delta_phi));
    let mut terms = Vec::with_capacity(4 * n_crystals);
    for index in 1..=(2 * n_crystals) as u16 {
        let weight = if index % 2 == 1 { backward } else { Amplitude::new(1.0, 0.0) };
        for polarization in [Polarization::H, Polarization::V] {
            terms.push(PairTerm { mode_a: SpatialMode::a(index), mode_b: SpatialMode::b(index), polarization, weight });
        }
    }
    terms
}

/// Number of weak compositions of `total` into `parts` parts.
pub fn composition_count(total: u32, parts: usize) -> u128 {
    if parts == 0 {
        return u128::from(total == 0);
    }
    // C(total + parts - 1, parts - 1)
    let n = u128::from(total) + parts as u128 - 1;
    let k = (parts as u128 - 1).min(u128::from(total));
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (n - i) / (i + 1);
    }
    c
}

/// Visits every weak composition of `total` into `parts` non-negative parts.
pub fn for_each_composition<F: FnMut(&[u32])>(total: u32, parts: usize, mut visit: F) {
    fn rec<F: FnMut(&[u32])>(buf: &mut Vec<u32>, left: u32, parts: usize, visit: &mut F) {
        if buf.len() + 1 == parts {
            buf.push(left);
            visit(buf);
            buf.pop();
            return;
        }
        for k in (0..=left).rev() {
            buf.push(k);
            rec(buf, left - k, parts, visit);
            buf.pop();
        }
    }
    if parts == 0 {
        if total == 0 {
            visit(&[]);
        }
        return;
    }
    let mut buf = Vec::with_capacity(parts);
    rec(&mut buf, total, parts, &mut visit);
}

/// `G^K |vac> / K!` expanded multinomially; not normalized.
pub fn emit_order(terms: &[PairTerm], order: u32, registry: ModeRegistry) -> Result<StateVector> {
    emit_order_with_budget(terms, order, registry, DEFAULT_EXPANSION_BUDGET)
}

pub fn emit_order_with_budget(
    terms: &[PairTerm],
    order: u32,
    registry: ModeRegistry,
    budget: u128,
) -> Result<StateVector> {
    let needed = composition_count(order, terms.len());
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let vacuum = StateVector::vacuum(registry);
    let mut out: BTreeMap<FockState, Amplitude> = BTreeMap::new();
    let mut failure = None;
    for_each_composition(order, terms.len(), |ks| {
        if failure.is_some() {
            return;
        }
        // multinomial K!/prod(k!) divided by the K! of the Taylor term
        let mut coeff = Amplitude::new(1.0, 0.0);
        let mut monomial = Vec::with_capacity(2 * ks.len());
        for (term, &k) in terms.iter().zip(ks) {
            if k == 0 {
                continue;
            }
            coeff *= term.weight.powu(k) / factorial(k);
            monomial.push((term.mode_a.with(term.polarization), k));
            monomial.push((term.mode_b.with(term.polarization), k));
        }
        match vacuum.apply_creation_monomial(&monomial, coeff) {
            Ok(v) => {
                for (state, amp) in v.terms() {
                    *out.entry(state.clone()).or_default() += amp;
                }
            }
            Err(e) => failure = Some(e),
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    StateVector::from_terms(registry, out)
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// Source settings as they appear in run configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceConfig {
    pub n_crystals: usize,
    #[serde(rename = "delta_phi_rad", default)]
    pub delta_phi: f64,
    pub tau: f64,
    pub orders: BTreeSet<u32>,
}

impl SourceConfig {
    /// Weak-regime configuration: exactly `2n` pairs.
    pub fn weak(n_crystals: usize, delta_phi: f64) -> Self {
        Self { n_crystals, delta_phi, tau: 0.05, orders: BTreeSet::from([2 * n_crystals as u32]) }
    }

    pub fn with_orders<I: IntoIterator<Item = u32>>(mut self, orders: I) -> Self {
        self.orders = orders.into_iter().collect();
        self
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_crystals == 0 {
            return Err(Error::InvalidSource("n_crystals must be at least 1".into()));
        }
        if self.orders.is_empty() {
            return Err(Error::InvalidSource("orders must not be empty".into()));
        }
        if self.tau < 0.0 || !self.tau.is_finite() {
            return Err(Error::InvalidSource(format!("tau must be a finite non-negative number, got {}", self.tau)));
        }
        if !self.delta_phi.is_finite() {
            return Err(Error::InvalidSource("delta_phi_rad must be finite".into()));
        }
        Ok(())
    }

    pub fn registry(&self) -> ModeRegistry {
        ModeRegistry::for_crystals(self.n_crystals)
    }
}

/// `sum_{K in orders} tau^K G^K |vac> / K!`, normalized.
pub fn emit_truncated(config: &SourceConfig) -> Result<StateVector> {
    config.validate()?;
    let terms = build_pair_terms(config.n_crystals, config.delta_phi);
    let registry = config.registry();
    // Weights are taken relative to the lowest order so that small tau does
    // not push higher orders under the prune threshold before normalizing.
    let lowest = *config.orders.iter().next().expect("validated non-empty");
    let mut total = StateVector::zero(registry);
    for &k in &config.orders {
        let weight = if k == lowest { 1.0 } else { config.tau.powi((k - lowest) as i32) };
        if weight == 0.0 {
            continue;
        }
        let part = emit_order(&terms, k, registry)?;
        total = total.add(&part.scale(Amplitude::new(weight, 0.0)))?;
    }
    if config.tau == 0.0 && lowest > 0 {
        return Err(Error::ZeroState);
    }
    Ok(total.normalize()?.0)
}

/// The three ways `2n` pairs can fill every primed mode behind the circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmissionFamily {
    /// One pair into every mode pair.
    SinglePairs,
    /// Two pairs into every forward mode pair.
    ForwardDoubles,
    /// Two pairs into every backward mode pair.
    BackwardDoubles,
}

/// Classifies an emitted term of `n` crystals by its pair counts, or `None`
/// if it belongs to none of the families.
pub fn emission_family(state: &FockState, n_crystals: usize) -> Option<EmissionFamily> {
    let counts: Vec<u32> = (1..=(2 * n_crystals) as u16).map(|i| state.spatial_occupation(SpatialMode::a(i))).collect();
    let matches = |forward: u32, backward: u32| {
        counts.iter().enumerate().all(|(i, &k)| k == if i % 2 == 1 { forward } else { backward })
    };
    if matches(1, 1) {
        Some(EmissionFamily::SinglePairs)
    } else if matches(2, 0) {
        Some(EmissionFamily::ForwardDoubles)
    } else if matches(0, 2) {
        Some(EmissionFamily::BackwardDoubles)
    } else {
        None
    }
}
