#pragma once

namespace toftomo::constants {

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double hbar = 1.054571817e-34;
inline constexpr double k_boltzmann = 1.380649e-23;
inline constexpr double atomic_mass_unit = 1.66053906660e-27;
inline constexpr double rb87_mass = 86.909180527 * atomic_mass_unit;
// Printed value, deliberately not 9.80665.
inline constexpr double gravity = 9.8;

}  // namespace toftomo::constants
