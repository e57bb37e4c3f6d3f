#pragma once

namespace famc {

// CODATA 2018 exact values. Not user-configurable.
namespace constants {
inline constexpr double boltzmann = 1.380649e-23;          // J/K
inline constexpr double elementary_charge = 1.602176634e-19;  // C
}  // namespace constants

}  // namespace famc
