//! Physical constants shared by every module.

/// Planck constant, J·s (exact SI value).
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Mass of a ⁴He atom, kg.
pub const HELIUM4_MASS: f64 = 6.6465e-27;

/// Nanometre in metres.
pub const NM: f64 = 1e-9;

/// Ångström in metres.
pub const ANGSTROM: f64 = 1e-10;

/// Milliradian in radians.
pub const MRAD: f64 = 1e-3;
