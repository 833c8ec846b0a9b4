#include "fluxqp/circuit_models.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "fluxqp/errors.hpp"
#include "fluxqp/units.hpp"

namespace fluxqp {

namespace {

constexpr double kBranchResolution = 1e-3;  // GHz

}  // namespace

void CircuitSpec::validate() const {
  if (!(e_c > 0.0) || !(e_l > 0.0) || !std::isfinite(e_c) || !std::isfinite(e_l)) {
    throw ParameterDomainError("E_C and E_L must be positive");
  }
  if (!(e_j >= 0.0) || !std::isfinite(e_j)) {
    throw ParameterDomainError("E_J must be non-negative");
  }
  if (!std::isfinite(phi_ext)) {
    throw ParameterDomainError("external flux must be finite");
  }
}

void CoupledSystemSpec::validate() const {
  qubit.validate();
  if (modes.empty() || modes.size() > 2) {
    throw ContractViolation("coupled system needs one or two modes");
  }
  if (couplings.size() != modes.size()) {
    throw ContractViolation("one coupling rule per mode is required");
  }
  for (const auto& mode : modes) {
    if (mode.photon_truncation < 2) {
      throw TruncationError("photon truncation must be at least 2");
    }
    if (!(mode.bare_frequency > 0.0)) {
      throw ParameterDomainError("mode frequency must be positive");
    }
  }
}

int DressedSpectrum::bare_index(int qubit_level, int mode, int photons) const {
  int index = qubit_level;
  int stride = qubit_levels;
  for (int m = 0; m < static_cast<int>(photon_truncation.size()); ++m) {
    if (m == mode) index += stride * photons;
    stride *= photon_truncation[m];
  }
  return index;
}

int DressedSpectrum::dressed_of(int bare) const {
  Eigen::Index best = 0;
  weights.col(bare).maxCoeff(&best);
  return static_cast<int>(best);
}

double DressedSpectrum::mode_frequency(int mode) const {
  const int bare = bare_index(0, mode, 1);
  const int best = dressed_of(bare);
  const double best_weight = weights(best, bare);
  for (int k = 0; k < weights.rows(); ++k) {
    if (k == best) continue;
    if (std::abs(energies[k] - energies[best]) < kBranchResolution &&
        best_weight - weights(k, bare) < 0.05) {
      throw DiagnosticsError(
          "dressed resonator branch is ambiguous (two candidates within 1 MHz); "
          "raise the qubit level or photon truncation");
    }
  }
  return energies[best];
}

double DressedSpectrum::qubit_transition(int i, int j) const {
  return energies[dressed_of(bare_index(j))] - energies[dressed_of(bare_index(i))];
}

FluxoniumSolution solve_fluxonium(const CircuitSpec& spec, int levels) {
  spec.validate();
  CircuitOperators ops =
      build_operators(spec.truncation, spec.e_c, spec.e_j, spec.e_l, spec.phi_ext);
  EigenSolution sol = diagonalize(ops.hamiltonian, levels);
  return FluxoniumSolution{std::move(ops), std::move(sol)};
}

EigenSolution fluxonium_spectrum(const CircuitSpec& spec, int levels) {
  return solve_fluxonium(spec, levels).sol;
}

DressedSpectrum solve_coupled(const CoupledSystemSpec& spec, int levels) {
  spec.validate();
  const FluxoniumSolution qubit = solve_fluxonium(spec.qubit, levels);
  const Eigen::MatrixXcd n_eig = in_eigenbasis(qubit.ops.n, qubit.sol);

  DressedSpectrum out;
  out.qubit_levels = levels;
  out.qubit_energies = qubit.sol.energies().array() - qubit.sol.energies()[0];
  int dim = levels;
  for (const auto& mode : spec.modes) {
    out.photon_truncation.push_back(mode.photon_truncation);
    dim *= mode.photon_truncation;
  }

  std::vector<Eigen::MatrixXcd> g_blocks;
  for (const auto& rule : spec.couplings) {
    if (const auto* c = std::get_if<ChargeCoupling>(&rule)) {
      g_blocks.emplace_back(c->g * n_eig);
    } else {
      const auto& m = std::get<MatrixCoupling>(rule).g;
      if (m.rows() < levels || m.cols() < levels) {
        throw ContractViolation("explicit coupling matrix smaller than retained qubit levels");
      }
      g_blocks.emplace_back(m.topLeftCorner(levels, levels));
    }
  }

  const int n_modes = static_cast<int>(spec.modes.size());
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
  for (int idx = 0; idx < dim; ++idx) {
    const int q = idx % levels;
    int rest = idx / levels;
    double energy = out.qubit_energies[q];
    int stride = levels;
    for (int m = 0; m < n_modes; ++m) {
      const int photons = rest % out.photon_truncation[m];
      rest /= out.photon_truncation[m];
      energy += photons * spec.modes[m].bare_frequency;
      // (a + a^dagger) raises this mode by one photon.
      if (photons + 1 < out.photon_truncation[m]) {
        const double amp = std::sqrt(static_cast<double>(photons + 1));
        const int base = idx - q + stride;
        for (int q2 = 0; q2 < levels; ++q2) {
          const cplx value = g_blocks[m](q2, q) * amp;
          h(base + q2, idx) += value;
          h(idx, base + q2) += std::conj(value);
        }
      }
      stride *= out.photon_truncation[m];
    }
    h(idx, idx) += energy;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h);
  if (solver.info() != Eigen::Success) {
    throw DiagnosticsError("coupled eigensolver did not converge");
  }
  out.energies = solver.eigenvalues().array() - solver.eigenvalues()[0];
  out.weights = solver.eigenvectors().cwiseAbs2().transpose();
  return out;
}

std::vector<LevelPair> default_transition_labels(int levels) {
  std::vector<LevelPair> labels;
  for (const LevelPair& pair : {LevelPair{0, 1}, LevelPair{0, 2}, LevelPair{0, 3}, LevelPair{1, 2}}) {
    if (pair.second < levels) labels.push_back(pair);
  }
  return labels;
}

FluxSpectrum coupled_spectrum(const CoupledSystemSpec& spec, int levels,
                              const std::vector<double>& flux_points,
                              const std::vector<LevelPair>& labels) {
  if (flux_points.empty()) {
    throw ContractViolation("flux point list is empty");
  }
  FluxSpectrum out;
  out.flux_points = flux_points;
  out.labels = labels.empty() ? default_transition_labels(levels) : labels;
  for (const auto& [i, j] : out.labels) {
    if (i < 0 || j < 0 || i >= levels || j >= levels) {
      throw ContractViolation("transition label outside the retained qubit levels");
    }
  }
  const auto n_flux = static_cast<Eigen::Index>(flux_points.size());
  const auto n_modes = static_cast<Eigen::Index>(spec.modes.size());
  out.transitions.resize(n_flux, static_cast<Eigen::Index>(out.labels.size()));
  out.dressed_mode_freq.resize(n_flux, n_modes);
  out.dressed_resonator_freq.resize(flux_points.size());

  CoupledSystemSpec local = spec;
  for (Eigen::Index p = 0; p < n_flux; ++p) {
    local.qubit.phi_ext = flux_points[p];
    const DressedSpectrum dressed = solve_coupled(local, levels);
    for (std::size_t c = 0; c < out.labels.size(); ++c) {
      out.transitions(p, static_cast<Eigen::Index>(c)) =
          std::abs(dressed.qubit_transition(out.labels[c].first, out.labels[c].second));
    }
    for (Eigen::Index m = 0; m < n_modes; ++m) {
      out.dressed_mode_freq(p, m) = dressed.mode_frequency(static_cast<int>(m));
    }
    out.dressed_resonator_freq[p] = out.dressed_mode_freq(p, 0);
  }
  return out;
}

void WireGeometry::validate() const {
  if (!(sheet_inductance > 0.0) || !(length > 0.0) || !(width > 0.0) ||
      !(geometric_sheet_inductance > 0.0)) {
    throw ParameterDomainError("wire geometry values must be positive");
  }
  if (width > length) {
    throw ParameterDomainError("wire width must not exceed its length");
  }
}

WireInductance wire_inductance(const WireGeometry& geom) {
  geom.validate();
  const double squares = geom.length / geom.width;
  WireInductance out;
  out.kinetic_inductance = geom.sheet_inductance * squares * 1e-3;
  out.total_inductance = (geom.sheet_inductance + geom.geometric_sheet_inductance) * squares * 1e-3;
  out.kinetic_fraction =
      geom.sheet_inductance / (geom.sheet_inductance + geom.geometric_sheet_inductance);
  return out;
}

double inductive_energy_ghz(double inductance_nh) {
  if (!(inductance_nh > 0.0)) {
    throw ParameterDomainError("inductance must be positive");
  }
  constexpr double kElementaryCharge = 1.602176634e-19;
  const double flux_quantum = units::kPlanck / (2.0 * kElementaryCharge);
  const double energy =
      flux_quantum * flux_quantum / (4.0 * std::numbers::pi * std::numbers::pi * inductance_nh * 1e-9);
  return energy / units::kPlanck * 1e-9;
}

}  // namespace fluxqp
