//! Physical constants used across the physical-parameter estimates.

/// Planck constant, J s (exact SI value).
pub const PLANCK_H: f64 = 6.62607015e-34;

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Mass of a rubidium-87 atom, kg.
pub const MASS_RB87: f64 = 1.44316e-25;

/// Bohr radius, m.
pub const BOHR_RADIUS: f64 = 5.291_772_109_03e-11;

/// Lattice recoil energy h^2 / (2 m lambda^2), in joules.
pub fn recoil_energy(wavelength_m: f64, atom_mass_kg: f64) -> f64 {
    PLANCK_H * PLANCK_H / (2.0 * atom_mass_kg * wavelength_m * wavelength_m)
}
