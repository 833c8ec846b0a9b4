#include <cmath>

#include "doctest.h"
#include "fluxqp/circuit_models.hpp"
#include "fluxqp/errors.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace fluxqp;
using testing_support::kDeviceA;
using testing_support::kDeviceB;

namespace {

CoupledSystemSpec readout_system(double phi, double f_res, double g, int dim = 60) {
  CoupledSystemSpec s;
  s.qubit = testing_support::circuit(kDeviceA, phi, PhaseBasis::harmonic(dim));
  s.modes = {ResonatorMode{f_res, 6}};
  s.couplings = {ChargeCoupling{g}};
  return s;
}

double bare_f01(double phi) {
  return fluxonium_spectrum(testing_support::circuit(kDeviceA, phi, PhaseBasis::harmonic(60)), 2)
      .transition(0, 1);
}

}  // namespace

TEST_CASE("qubit frequency at the sweet spots") {
  const EigenSolution b = fluxonium_spectrum(testing_support::circuit(kDeviceB, 0.5), 2);
  CHECK(b.transition(0, 1) == doctest::Approx(0.362721688625).epsilon(1e-10));
  const EigenSolution a0 = fluxonium_spectrum(testing_support::circuit(kDeviceA, 0.0), 2);
  const EigenSolution a5 = fluxonium_spectrum(testing_support::circuit(kDeviceA, 0.5), 2);
  CHECK(a0.transition(0, 1) == doctest::Approx(4.082814385308).epsilon(1e-10));
  CHECK(a5.transition(0, 1) == doctest::Approx(0.661233162681).epsilon(1e-10));
  const std::vector<double> oracle_b = oracle::fluxonium_energies(120, kDeviceB.e_c, kDeviceB.e_j, kDeviceB.e_l, 0.5, 2);
  CHECK(std::abs(b.transition(0, 1) - (oracle_b[1] - oracle_b[0])) < 1e-9);
}

TEST_CASE("vanishing josephson energy gives the oscillator frequency") {
  for (double phi : {0.0, 0.2, 0.5, 0.9}) {
    const CircuitSpec spec{0.88, 1e-9, 0.72, phi, PhaseBasis::harmonic(60)};
    CHECK(std::abs(fluxonium_spectrum(spec, 2).transition(0, 1) - std::sqrt(8.0 * 0.88 * 0.72)) < 1e-6);
  }
}

TEST_CASE("qubit frequency decreases towards half flux") {
  double previous = bare_f01(0.0);
  for (int i = 1; i <= 50; ++i) {
    const double f = bare_f01(0.5 * i / 50.0);
    CHECK(f < previous);
    previous = f;
  }
}

TEST_CASE("decoupled resonator keeps its bare frequency") {
  std::vector<double> flux;
  for (int i = 0; i <= 20; ++i) flux.push_back(i / 20.0);
  const FluxSpectrum sp = coupled_spectrum(readout_system(0.0, 6.2, 0.0), 5, flux);
  for (double f : sp.dressed_resonator_freq) CHECK(std::abs(f - 6.2) < 1e-9);
}

TEST_CASE("avoided crossing splitting follows the two-level estimate") {
  const double f_res = 3.0;
  double lo = 0.2, hi = 0.4;  // f01 decreases through f_res on this interval
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (bare_f01(mid) > f_res ? lo : hi) = mid;
  }
  const double phi = 0.5 * (lo + hi);
  const double g = 0.01;
  const DressedSpectrum d = solve_coupled(readout_system(phi, f_res, g), 6);
  const int qubit_like = d.dressed_of(d.bare_index(1));
  const int photon_like = d.dressed_of(d.bare_index(0, 0, 1));
  const double splitting = std::abs(d.energies(qubit_like) - d.energies(photon_like));
  const FluxoniumSolution fs = solve_fluxonium(testing_support::circuit(kDeviceA, phi, PhaseBasis::harmonic(60)), 2);
  const double expected = 2.0 * g * std::abs(matrix_element(fs.ops.n, fs.sol, 0, 1));
  CHECK(testing_support::relative_error(splitting, expected) < 0.05);
}

TEST_CASE("readout branch regression and anticrossing pattern") {
  const double expected[] = {6.200677746904, 6.200643717005, 6.200755246292};
  const double flux[] = {0.0, 0.25, 0.5};
  for (int i = 0; i < 3; ++i) {
    CHECK(solve_coupled(readout_system(flux[i], 6.2, 0.08), 6).mode_frequency(0) ==
          doctest::Approx(expected[i]).epsilon(1e-9));
  }
  // Qubit transitions from the ground state cross the readout twice per half period;
  // the dispersive pull takes both signs around each crossing.
  std::vector<double> grid;
  for (int i = 0; i <= 250; ++i) grid.push_back(0.5 * i / 250.0);
  const FluxSpectrum sp = coupled_spectrum(readout_system(0.0, 6.2, 0.08), 6, grid,
                                           {{0, 1}, {0, 2}, {0, 3}});
  std::vector<double> crossings;
  for (int k = 0; k < 3; ++k) {
    for (int i = 1; i <= 250; ++i) {
      if ((sp.transitions(i - 1, k) > 6.2) != (sp.transitions(i, k) > 6.2)) crossings.push_back(grid[i]);
    }
  }
  REQUIRE(crossings.size() == 2);
  for (double c : crossings) {
    bool above = false, below = false;
    for (int i = 0; i <= 250; ++i) {
      if (std::abs(grid[i] - c) > 0.02) continue;
      above |= sp.dressed_resonator_freq[i] > 6.2;
      below |= sp.dressed_resonator_freq[i] < 6.2;
    }
    CHECK(above);
    CHECK(below);
  }
}

TEST_CASE("coupled spectrum is symmetric about half flux") {
  std::vector<double> flux;
  for (int i = 0; i <= 10; ++i) flux.push_back(i / 10.0);
  const FluxSpectrum sp = coupled_spectrum(readout_system(0.0, 6.2, 0.08), 6, flux);
  for (int i = 0; i <= 10; ++i) {
    for (Eigen::Index k = 0; k < sp.transitions.cols(); ++k)
      CHECK(std::abs(sp.transitions(i, k) - sp.transitions(10 - i, k)) < 1e-8);
    CHECK(std::abs(sp.dressed_resonator_freq[i] - sp.dressed_resonator_freq[10 - i]) < 1e-8);
  }
}

TEST_CASE("explicit coupling matrix reproduces charge coupling") {
  CoupledSystemSpec charge = readout_system(0.3, 6.2, 0.08);
  const FluxoniumSolution fs = solve_fluxonium(charge.qubit, 6);
  CoupledSystemSpec explicit_matrix = charge;
  explicit_matrix.couplings = {MatrixCoupling{0.08 * in_eigenbasis(fs.ops.n, fs.sol)}};
  const DressedSpectrum a = solve_coupled(charge, 6);
  const DressedSpectrum b = solve_coupled(explicit_matrix, 6);
  for (int k = 0; k < 12; ++k) CHECK(std::abs(a.energies(k) - b.energies(k)) < 1e-9);
}

TEST_CASE("photon truncation is converged") {
  CoupledSystemSpec s = readout_system(0.3, 6.2, 0.08);
  const double six = solve_coupled(s, 6).mode_frequency(0);
  s.modes[0].photon_truncation = 10;
  CHECK(std::abs(solve_coupled(s, 6).mode_frequency(0) - six) < 1e-6);
}

TEST_CASE("spurious second mode") {
  CoupledSystemSpec s = readout_system(0.25, 6.2, 0.08);
  s.modes.push_back(ResonatorMode{7.5, 3});
  s.couplings.push_back(ChargeCoupling{0.05});
  const DressedSpectrum d = solve_coupled(s, 6);
  CHECK(std::abs(d.mode_frequency(1) - 7.5) < 0.05);
  CHECK(std::abs(d.mode_frequency(0) - 6.2) < 0.05);
  s.modes.push_back(ResonatorMode{8.0, 3});
  s.couplings.push_back(ChargeCoupling{0.05});
  CHECK_THROWS_AS(s.validate(), ContractViolation);
}

TEST_CASE("coupled system validation") {
  CoupledSystemSpec s = readout_system(0.0, 6.2, 0.08);
  s.modes[0].photon_truncation = 1;
  CHECK_THROWS_AS(s.validate(), TruncationError);
  s = readout_system(0.0, 6.2, 0.08);
  s.couplings.clear();
  CHECK_THROWS_AS(s.validate(), ContractViolation);
  CHECK_THROWS_AS((CircuitSpec{0.0, 1.0, 1.0, 0.0}.validate()), ParameterDomainError);
}

TEST_CASE("wire inductance") {
  const WireInductance thick = wire_inductance({300.0, 1960.0, 2.0});
  CHECK(thick.kinetic_inductance == doctest::Approx(294.0).epsilon(1e-12));
  CHECK(thick.kinetic_fraction == doctest::Approx(300.0 / 302.5).epsilon(1e-12));
  CHECK(std::abs(thick.kinetic_fraction - 0.9917) < 1e-4);
  const WireInductance thin = wire_inductance({100.0, 1960.0, 0.66});
  CHECK(std::abs(thin.kinetic_inductance - 297.0) < 0.05);
  const WireInductance doubled = wire_inductance({300.0, 3920.0, 2.0});
  CHECK(doubled.total_inductance == 2.0 * thick.total_inductance);
  CHECK_THROWS_AS(wire_inductance({300.0, 1.0, 2.0}), ParameterDomainError);
  // E_L of a 295 nH inductor is in the sub-GHz range of the devices.
  CHECK(inductive_energy_ghz(295.0) == doctest::Approx(0.554).epsilon(1e-2));
}
