//! Sparse superpositions of multimode Fock states.
//!
//! A [`FockState`] is an occupation-number basis vector stored as a sorted
//! list of occupied sub-modes. A [`StateVector`] maps basis vectors to
//! complex amplitudes. All operations return new values; nothing is mutated
//! in place once built.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mode::{ModeId, ModeRegistry, SpatialMode};

pub type Amplitude = Complex64;

pub const DEFAULT_PRUNE_THRESHOLD: f64 = 1e-14;

/// Occupation-number basis vector. Entries are strictly increasing in mode
/// and every stored occupation is at least one.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FockState {
    entries: Vec<(ModeId, u32)>,
}

impl FockState {
    pub fn vacuum() -> Self {
        Self::default()
    }

    /// Builds the canonical form of an arbitrary entry list. Repeated modes
    /// are summed and zero occupations dropped.
    pub fn from_entries<I: IntoIterator<Item = (ModeId, u32)>>(entries: I) -> Self {
        let mut merged: BTreeMap<ModeId, u32> = BTreeMap::new();
        for (mode, n) in entries {
            *merged.entry(mode).or_default() += n;
        }
        Self { entries: merged.into_iter().filter(|&(_, n)| n > 0).collect() }
    }

    pub fn entries(&self) -> &[(ModeId, u32)] {
        &self.entries
    }

    pub fn occupation(&self, mode: ModeId) -> u32 {
        match self.entries.binary_search_by(|(m, _)| m.cmp(&mode)) {
            Ok(i) => self.entries[i].1,
            Err(_) => 0,
        }
    }

    /// Total photons in both polarizations of `spatial`.
    pub fn spatial_occupation(&self, spatial: SpatialMode) -> u32 {
        self.entries.iter().filter(|(m, _)| m.spatial() == spatial).map(|&(_, n)| n).sum()
    }

    pub fn total_photons(&self) -> u32 {
        self.entries.iter().map(|&(_, n)| n).sum()
    }

    pub fn is_vacuum(&self) -> bool {
        self.entries.is_empty()
    }

    /// Returns the state with `count` more photons in `mode`, together with
    /// the new occupation.
    pub fn with_added(&self, mode: ModeId, count: u32) -> (Self, u32) {
        if count == 0 {
            return (self.clone(), self.occupation(mode));
        }
        let mut entries = self.entries.clone();
        let new = match entries.binary_search_by(|(m, _)| m.cmp(&mode)) {
            Ok(i) => {
                entries[i].1 += count;
                entries[i].1
            }
            Err(i) => {
                entries.insert(i, (mode, count));
                count
            }
        };
        (Self { entries }, new)
    }

    /// Returns the state with `count` photons taken out of `mode`; the caller
    /// guarantees the occupation is at least `count`.
    pub(crate) fn with_removed(&self, mode: ModeId, count: u32) -> Self {
        let mut entries = self.entries.clone();
        if let Ok(i) = entries.binary_search_by(|(m, _)| m.cmp(&mode)) {
            debug_assert!(entries[i].1 >= count);
            entries[i].1 -= count;
            if entries[i].1 == 0 {
                entries.remove(i);
            }
        }
        Self { entries }
    }

    /// Drops every sub-mode of `spatial`.
    pub fn without_spatial(&self, spatial: SpatialMode) -> Self {
        Self { entries: self.entries.iter().copied().filter(|(m, _)| m.spatial() != spatial).collect() }
    }

    /// Splits off the entries whose mode satisfies `pred`.
    pub fn partition<F: Fn(ModeId) -> bool>(&self, pred: F) -> (Self, Self) {
        let (yes, no): (Vec<_>, Vec<_>) = self.entries.iter().partition(|(m, _)| pred(*m));
        (Self { entries: yes }, Self { entries: no })
    }
}

impl fmt::Display for FockState {
    /// Canonical text form, e.g. `a1'H:1 b2'V:2`. The vacuum renders as `vac`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return f.write_str("vac");
        }
        for (i, (mode, n)) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{mode}:{n}")?;
        }
        Ok(())
    }
}

impl FromStr for FockState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "vac" {
            return Ok(Self::vacuum());
        }
        let mut entries = Vec::new();
        for token in s.split_whitespace() {
            let (mode, n) = token.split_once(':').ok_or_else(|| Error::Parse(format!("missing ':' in {token:?}")))?;
            let n: u32 = n.parse().map_err(|_| Error::Parse(format!("bad occupation in {token:?}")))?;
            if n == 0 {
                return Err(Error::Parse(format!("zero occupation in {token:?}")));
            }
            entries.push((mode.parse::<ModeId>()?, n));
        }
        let state = Self::from_entries(entries.iter().copied());
        if state.entries.len() != entries.len() || state.entries != entries {
            return Err(Error::Parse(format!("modes not in canonical order: {s:?}")));
        }
        Ok(state)
    }
}

/// `sqrt((m+1)(m+2)...(m+p))`, the factor picked up by `p` creations on `m`.
pub fn creation_factor(m: u32, p: u32) -> f64 {
    (1..=p).map(|k| f64::from(m + k)).product::<f64>().sqrt()
}

/// Sparse complex superposition of Fock states.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    terms: BTreeMap<FockState, Amplitude>,
    registry: ModeRegistry,
    prune_threshold: f64,
}

impl StateVector {
    pub fn zero(registry: ModeRegistry) -> Self {
        Self { terms: BTreeMap::new(), registry, prune_threshold: DEFAULT_PRUNE_THRESHOLD }
    }

    pub fn vacuum(registry: ModeRegistry) -> Self {
        Self::basis(registry, FockState::vacuum())
    }

    pub fn basis(registry: ModeRegistry, state: FockState) -> Self {
        let mut s = Self::zero(registry);
        s.terms.insert(state, Amplitude::new(1.0, 0.0));
        s
    }

    /// Builds a state from explicit terms, merging repeated basis vectors.
    pub fn from_terms<I>(registry: ModeRegistry, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (FockState, Amplitude)>,
    {
        let mut s = Self::zero(registry);
        for (state, amp) in terms {
            if !amp.re.is_finite() || !amp.im.is_finite() {
                return Err(Error::NonFiniteAmplitude);
            }
            for &(mode, n) in state.entries() {
                registry.check(mode)?;
                if n > registry.occupation_cap {
                    return Err(Error::OccupationOverflow { mode, occupation: n, cap: registry.occupation_cap });
                }
            }
            *s.terms.entry(state).or_default() += amp;
        }
        Ok(s.pruned())
    }

    pub fn with_prune_threshold(mut self, threshold: f64) -> Self {
        self.prune_threshold = threshold.max(0.0);
        self.pruned()
    }

    pub fn registry(&self) -> ModeRegistry {
        self.registry
    }

    pub fn prune_threshold(&self) -> f64 {
        self.prune_threshold
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl ExactSizeIterator<Item = (&FockState, &Amplitude)> + '_ {
        self.terms.iter()
    }

    pub fn amplitude(&self, state: &FockState) -> Amplitude {
        self.terms.get(state).copied().unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    fn pruned(mut self) -> Self {
        let t = self.prune_threshold;
        self.terms.retain(|_, a| a.norm() >= t && a.norm() > 0.0);
        self
    }

    fn same_registry(&self, other: &Self) -> Result<()> {
        if self.registry != other.registry {
            return Err(Error::RegistryMismatch);
        }
        Ok(())
    }

    pub(crate) fn from_map(
        registry: ModeRegistry,
        prune_threshold: f64,
        terms: BTreeMap<FockState, Amplitude>,
    ) -> Self {
        Self { terms, registry, prune_threshold }.pruned()
    }

    /// Applies `coeff * prod (a†_mode)^power` to every term.
    pub fn apply_creation_monomial(&self, monomial: &[(ModeId, u32)], coeff: Amplitude) -> Result<Self> {
        for &(mode, _) in monomial {
            self.registry.check(mode)?;
        }
        let cap = self.registry.occupation_cap;
        let mut out = BTreeMap::new();
        for (state, amp) in &self.terms {
            let mut next = state.clone();
            let mut factor = 1.0;
            for &(mode, power) in monomial {
                let before = next.occupation(mode);
                let (s, after) = next.with_added(mode, power);
                if after > cap {
                    return Err(Error::OccupationOverflow { mode, occupation: after, cap });
                }
                factor *= creation_factor(before, power);
                next = s;
            }
            *out.entry(next).or_insert(Amplitude::default()) += amp * coeff * factor;
        }
        Ok(Self::from_map(self.registry, self.prune_threshold, out))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_registry(other)?;
        let mut out = self.terms.clone();
        for (state, amp) in &other.terms {
            *out.entry(state.clone()).or_default() += amp;
        }
        Ok(Self::from_map(self.registry, self.prune_threshold, out))
    }

    pub fn scale(&self, c: Amplitude) -> Self {
        let out = self.terms.iter().map(|(s, a)| (s.clone(), a * c)).collect();
        Self::from_map(self.registry, self.prune_threshold, out)
    }

    /// `<self|other>`, conjugating `self`.
    pub fn inner_product(&self, other: &Self) -> Result<Amplitude> {
        self.same_registry(other)?;
        let (small, large, flip) = if self.len() <= other.len() { (self, other, false) } else { (other, self, true) };
        let mut acc = Amplitude::default();
        for (state, a) in &small.terms {
            if let Some(b) = large.terms.get(state) {
                acc += if flip { b.conj() * a } else { a.conj() * b };
            }
        }
        Ok(acc)
    }

    /// Returns the unit-norm state and the original norm.
    pub fn normalize(&self) -> Result<(Self, f64)> {
        let norm = self.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroState);
        }
        Ok((self.scale(Amplitude::new(1.0 / norm, 0.0)), norm))
    }

    /// Keeps only the terms whose basis vector satisfies `pred`.
    pub fn filter<F: Fn(&FockState) -> bool>(&self, pred: F) -> Self {
        let out = self.terms.iter().filter(|(s, _)| pred(s)).map(|(s, a)| (s.clone(), *a)).collect();
        Self { terms: out, registry: self.registry, prune_threshold: self.prune_threshold }
    }

    /// Linear-optical substitution of creation operators.
    ///
    /// Every sub-mode in `affected` has its creation operator replaced by
    /// `sum_j c_j a†_j` as given by `image`. Each term is rebuilt from its
    /// unaffected part by applying the substituted operators one photon at a
    /// time, with the `1/sqrt(m!)` normalization of the original occupation.
    pub(crate) fn substitute_modes<F>(&self, affected: &[ModeId], image: F) -> Result<Self>
    where
        F: Fn(ModeId) -> Vec<(ModeId, Amplitude)>,
    {
        for &m in affected {
            self.registry.check(m)?;
        }
        let images: Vec<(ModeId, Vec<(ModeId, Amplitude)>)> = affected.iter().map(|&m| (m, image(m))).collect();
        let cap = self.registry.occupation_cap;
        let mut out: BTreeMap<FockState, Amplitude> = BTreeMap::new();
        for (state, amp) in &self.terms {
            let (moving, fixed) = state.partition(|m| affected.contains(&m));
            if moving.is_vacuum() {
                *out.entry(state.clone()).or_default() += amp;
                continue;
            }
            let mut partial: BTreeMap<FockState, Amplitude> = BTreeMap::new();
            let mut norm = 1.0;
            for &(_, n) in moving.entries() {
                norm *= creation_factor(0, n);
            }
            partial.insert(fixed, amp / norm);
            for &(mode, n) in moving.entries() {
                let targets = &images.iter().find(|(m, _)| *m == mode).expect("affected mode").1;
                for _ in 0..n {
                    let mut next: BTreeMap<FockState, Amplitude> = BTreeMap::new();
                    for (s, a) in &partial {
                        for &(target, c) in targets {
                            let before = s.occupation(target);
                            if before + 1 > cap {
                                return Err(Error::OccupationOverflow { mode: target, occupation: before + 1, cap });
                            }
                            let (s2, _) = s.with_added(target, 1);
                            *next.entry(s2).or_default() += a * c * creation_factor(before, 1);
                        }
                    }
                    partial = next;
                }
            }
            for (s, a) in partial {
                *out.entry(s).or_default() += a;
            }
        }
        Ok(Self::from_map(self.registry, self.prune_threshold, out))
    }
}

impl fmt::Display for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (state, amp) in &self.terms {
            writeln!(f, "{state}\t{:+.15e} {:+.15e}", amp.re, amp.im)?;
        }
        Ok(())
    }
}
