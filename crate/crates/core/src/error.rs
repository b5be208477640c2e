use crate::mode::{ModeId, SpatialMode};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("mode {mode} is outside the registry (max index {max_index})")]
    ModeOutOfRange { mode: ModeId, max_index: u16 },

    #[error("occupation of {mode} would reach {occupation}, above the cap of {cap}")]
    OccupationOverflow { mode: ModeId, occupation: u32, cap: u32 },

    #[error("states were built against different mode registries")]
    RegistryMismatch,

    #[error("cannot normalize the zero state")]
    ZeroState,

    #[error("amplitude is not finite")]
    NonFiniteAmplitude,

    #[error("expansion needs {needed} terms, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("wavelength must be positive, got {0}")]
    NonPositiveWavelength(f64),

    #[error("invalid source configuration: {0}")]
    InvalidSource(String),

    #[error("invalid beam splitter: {0}")]
    InvalidPbs(String),

    #[error("photons remain on beam splitter input {0} after rewiring")]
    ResidualInput(SpatialMode),

    #[error("detector efficiency {0} outside [0, 1]")]
    InvalidEfficiency(f64),

    #[error("mode {0} is measured twice in one pattern")]
    DuplicateMeasurement(SpatialMode),

    #[error("a circuit needs at least 2 crystals, got {0}")]
    TooFewCrystals(usize),

    #[error("sign pattern has length {got}, expected {expected}")]
    PatternLength { got: usize, expected: usize },

    #[error("NOON pattern needs an odd number of minus projections, got {0}")]
    EvenMinusCount(usize),

    #[error("invalid sign pattern character {0:?}")]
    InvalidSign(char),

    #[error("could not parse Fock state: {0}")]
    Parse(String),

    #[error("fringe fit failed: {0}")]
    DegenerateFringe(String),

    #[error("zero visibility has no phase sensitivity")]
    ZeroVisibility,

    #[error("target and ensemble have different mode support: {0}")]
    SupportMismatch(String),
}
