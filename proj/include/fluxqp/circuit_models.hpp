#pragma once

#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "fluxqp/quantum_core.hpp"

namespace fluxqp {

/// Single fluxonium circuit. Energies in GHz, flux in units of the flux quantum.
struct CircuitSpec {
  double e_c = 0.0;
  double e_j = 0.0;
  double e_l = 0.0;
  double phi_ext = 0.0;
  PhaseBasis truncation = PhaseBasis::harmonic(120);

  /// Throws ParameterDomainError on non-positive E_C/E_L, negative E_J or
  /// non-finite flux.
  void validate() const;
};

/// Bosonic mode coupled to the qubit.
struct ResonatorMode {
  double bare_frequency = 0.0;  // GHz
  int photon_truncation = 6;
};

/// g_ij = g <i|n|j> in the qubit eigenbasis.
struct ChargeCoupling {
  double g = 0.0;  // GHz
};

/// Explicit g_ij in the qubit eigenbasis (square, at least `levels` wide).
struct MatrixCoupling {
  Eigen::MatrixXcd g;
};

using Coupling = std::variant<ChargeCoupling, MatrixCoupling>;

/// Qubit plus one readout mode and at most one further (spurious) mode.
/// Every mode couples directly to the qubit.
struct CoupledSystemSpec {
  CircuitSpec qubit;
  std::vector<ResonatorMode> modes;
  std::vector<Coupling> couplings;  // one per mode

  void validate() const;
};

/// Labeled transition (from, to).
using LevelPair = std::pair<int, int>;

struct FluxSpectrum {
  std::vector<double> flux_points;
  /// Row per flux point, column per entry of `labels`; GHz.
  Eigen::MatrixXd transitions;
  /// Dressed frequency of the first mode; GHz.
  std::vector<double> dressed_resonator_freq;
  /// Dressed frequency of every mode, row per flux point.
  Eigen::MatrixXd dressed_mode_freq;
  std::vector<LevelPair> labels;
};

/// Eigenstates of the coupled Hamiltonian at a single flux point.
///
/// The product basis is ordered qubit-fastest:
/// index = q + levels * (n_0 + P_0 * (n_1 + ...)).
struct DressedSpectrum {
  int qubit_levels = 0;
  std::vector<int> photon_truncation;
  /// Dressed energies relative to the dressed ground state, ascending; GHz.
  Eigen::VectorXd energies;
  /// |<dressed k | bare b>|^2, rows = dressed, cols = bare product states.
  Eigen::MatrixXd weights;
  /// Bare qubit transition energies E_k - E_0 of the retained levels.
  Eigen::VectorXd qubit_energies;

  /// Product-basis index of |q, 0..0> with `photons` in mode `mode`.
  int bare_index(int qubit_level, int mode = -1, int photons = 0) const;
  /// Dressed state with the largest weight on a bare state; ties -> lower index.
  int dressed_of(int bare) const;
  /// Dressed frequency of mode m: state of maximal |0, 1_m> character.
  /// Throws DiagnosticsError when two candidate branches are within 1 MHz
  /// and carry indistinguishable photon character.
  double mode_frequency(int mode) const;
  /// E(|j,0>) - E(|i,0>) using maximal-character labeling.
  double qubit_transition(int i, int j) const;
};

/// Fluxonium eigenpairs (absolute energies, see EigenSolution::transition).
EigenSolution fluxonium_spectrum(const CircuitSpec& spec, int levels);

/// All operators of the circuit together with its lowest `levels` eigenpairs.
struct FluxoniumSolution {
  CircuitOperators ops;
  EigenSolution sol;
};
FluxoniumSolution solve_fluxonium(const CircuitSpec& spec, int levels);

/// Coupled qubit-mode Hamiltonian at the flux stored in spec.qubit.
/// `levels` qubit eigenstates are retained before coupling.
DressedSpectrum solve_coupled(const CoupledSystemSpec& spec, int levels);

/// Transitions reported by coupled_spectrum unless overridden.
std::vector<LevelPair> default_transition_labels(int levels);

/// Flux sweep of the coupled system.
FluxSpectrum coupled_spectrum(const CoupledSystemSpec& spec, int levels,
                              const std::vector<double>& flux_points,
                              const std::vector<LevelPair>& labels = {});

struct WireGeometry {
  double sheet_inductance = 0.0;            // pH per square
  double length = 0.0;                      // um
  double width = 0.0;                       // um
  double geometric_sheet_inductance = 2.5;  // pH per square

  void validate() const;
};

struct WireInductance {
  double total_inductance = 0.0;    // nH
  double kinetic_inductance = 0.0;  // nH
  double kinetic_fraction = 0.0;    // alpha
};

WireInductance wire_inductance(const WireGeometry& geom);

/// Inductive energy E_L / h in GHz of an inductance in nH.
double inductive_energy_ghz(double inductance_nh);

}  // namespace fluxqp
