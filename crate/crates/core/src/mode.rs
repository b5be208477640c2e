//! Labels for the polarization-resolved optical modes of the circuit.
//!
//! A spatial mode is a path such as `a3` (before the beam splitters) or
//! `b2'` (after them). Each spatial mode carries two polarization sub-modes,
//! and a [`ModeId`] names exactly one of them. The derived ordering is the
//! canonical one used everywhere: side `a` before `b`, then index, then
//! unprimed before primed, then `H` before `V`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    pub fn flipped(self) -> Self {
        match self {
            Polarization::H => Polarization::V,
            Polarization::V => Polarization::H,
        }
    }
}

/// A path through the setup, without polarization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpatialMode {
    pub side: Side,
    pub index: u16,
    pub primed: bool,
}

impl SpatialMode {
    pub const fn new(side: Side, index: u16, primed: bool) -> Self {
        Self { side, index, primed }
    }

    pub const fn a(index: u16) -> Self {
        Self::new(Side::A, index, false)
    }

    pub const fn b(index: u16) -> Self {
        Self::new(Side::B, index, false)
    }

    /// The same path behind the beam splitters.
    pub const fn primed(self) -> Self {
        Self { primed: true, ..self }
    }

    pub const fn with(self, pol: Polarization) -> ModeId {
        ModeId { side: self.side, index: self.index, primed: self.primed, pol }
    }

    pub const fn h(self) -> ModeId {
        self.with(Polarization::H)
    }

    pub const fn v(self) -> ModeId {
        self.with(Polarization::V)
    }
}

/// One polarization sub-mode. Field order fixes the canonical ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeId {
    pub side: Side,
    pub index: u16,
    pub primed: bool,
    pub pol: Polarization,
}

impl ModeId {
    pub const fn spatial(self) -> SpatialMode {
        SpatialMode { side: self.side, index: self.index, primed: self.primed }
    }

    pub const fn with_pol(self, pol: Polarization) -> ModeId {
        ModeId { pol, ..self }
    }
}

/// Bounds shared by every state of one circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeRegistry {
    pub max_index: u16,
    pub occupation_cap: u32,
}

impl ModeRegistry {
    pub const DEFAULT_OCCUPATION_CAP: u32 = 64;

    pub const fn new(max_index: u16) -> Self {
        Self { max_index, occupation_cap: Self::DEFAULT_OCCUPATION_CAP }
    }

    /// Registry for `n` crystals: indices `1..=2n`.
    pub fn for_crystals(n_crystals: usize) -> Self {
        Self::new((2 * n_crystals) as u16)
    }

    pub fn with_occupation_cap(self, cap: u32) -> Self {
        Self { occupation_cap: cap, ..self }
    }

    pub fn check(&self, mode: ModeId) -> Result<()> {
        if mode.index == 0 || mode.index > self.max_index {
            return Err(Error::ModeOutOfRange { mode, max_index: self.max_index });
        }
        Ok(())
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::A => "a",
            Side::B => "b",
        })
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarization::H => "H",
            Polarization::V => "V",
        })
    }
}

impl fmt::Display for SpatialMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.side, self.index, if self.primed { "'" } else { "" })
    }
}

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.spatial(), self.pol)
    }
}

impl FromStr for SpatialMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad spatial mode {s:?}"));
        let mut chars = s.chars();
        let side = match chars.next() {
            Some('a') => Side::A,
            Some('b') => Side::B,
            _ => return Err(bad()),
        };
        let rest = chars.as_str();
        let (digits, primed) = match rest.strip_suffix('\'') {
            Some(d) => (d, true),
            None => (rest, false),
        };
        let index = digits.parse::<u16>().map_err(|_| bad())?;
        Ok(SpatialMode::new(side, index, primed))
    }
}

impl FromStr for ModeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (spatial, pol) = match s.char_indices().last() {
            Some((i, 'H')) => (&s[..i], Polarization::H),
            Some((i, 'V')) => (&s[..i], Polarization::V),
            _ => return Err(Error::Parse(format!("bad mode {s:?}"))),
        };
        Ok(spatial.parse::<SpatialMode>()?.with(pol))
    }
}
