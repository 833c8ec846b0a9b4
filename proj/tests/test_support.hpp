#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "fluxqp/circuit_models.hpp"

namespace testing_support {

struct Energies {
  double e_c;
  double e_j;
  double e_l;
};

// Two measured light-fluxonium devices.
inline constexpr Energies kDeviceA{0.88, 2.65, 0.72};
inline constexpr Energies kDeviceB{0.96, 3.95, 0.74};

inline fluxqp::CircuitSpec circuit(const Energies& e, double phi_ext,
                                   fluxqp::PhaseBasis basis = fluxqp::PhaseBasis::harmonic(120)) {
  return {e.e_c, e.e_j, e.e_l, phi_ext, basis};
}

inline double relative_error(double value, double reference) {
  return std::abs(value - reference) / std::abs(reference);
}

/// Fresh empty directory below the system temp directory.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("fluxqp_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing_support
