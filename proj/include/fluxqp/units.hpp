#pragma once

#include <cmath>
#include <numbers>

// Energies are stored as frequencies E/h in GHz throughout. Helpers here
// convert to the SI or micro-eV quantities needed by individual formulas.
namespace fluxqp::units {

inline constexpr double kPlanck = 6.62607015e-34;                      // J s
inline constexpr double kHbar = kPlanck / (2.0 * std::numbers::pi);   // J s
inline constexpr double kBoltzmann = 1.380649e-23;                    // J / K

/// h * (1 GHz) expressed in micro-eV (~4.1357).
inline constexpr double kMicroEvPerGhz = 4.135667696;

/// Angular frequency in rad/s for a frequency given in GHz.
constexpr double angular(double f_ghz) { return 2.0 * std::numbers::pi * f_ghz * 1e9; }

/// Energy h*f in micro-eV for a frequency in GHz.
constexpr double ghz_to_micro_ev(double f_ghz) { return kMicroEvPerGhz * f_ghz; }

/// Power in watts for a level in dBm.
inline double dbm_to_watts(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }

}  // namespace fluxqp::units
