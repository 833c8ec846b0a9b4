#include "fluxqp/loss_channels.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "fluxqp/errors.hpp"
#include "fluxqp/units.hpp"

namespace fluxqp {

namespace {

// E / hbar for E/h = 1 GHz, expressed in 1/us.
constexpr double kGhzToInverseMicroseconds = 2.0 * std::numbers::pi * 1e3;

void require_frequency(double f_ghz) {
  if (!(f_ghz > 0.0) || !std::isfinite(f_ghz)) {
    throw ParameterDomainError("transition frequency must be positive");
  }
}

double squared_element(const OperatorMatrix& op, const EigenSolution& sol, int i, int f) {
  return std::norm(matrix_element(op, sol, i, f));
}

}  // namespace

void QuasiparticleSpec::validate() const {
  if (!(x_qp >= 0.0) || !(x_qp < 1.0)) {
    throw ParameterDomainError("x_qp must lie in [0, 1)");
  }
  if (!(delta > 0.0)) throw ParameterDomainError("gap must be positive");
  if (!(alpha > 0.0) || alpha > 1.0) {
    throw ParameterDomainError("kinetic-inductance fraction must lie in (0, 1]");
  }
}

void PowerLossSpec::validate() const {
  if (!(q0 > 0.0)) throw ParameterDomainError("Q0 must be positive");
  if (!(beta >= 0.0) || !(gamma >= 0.0)) {
    throw ParameterDomainError("beta and gamma must be non-negative");
  }
}

double gap_ratio_factor(double delta_micro_ev, double f_ghz) {
  require_frequency(f_ghz);
  return std::sqrt(2.0 * delta_micro_ev / units::ghz_to_micro_ev(f_ghz));
}

double q_int_quasiparticle(const QuasiparticleSpec& qp, double q0, double f0_ghz) {
  qp.validate();
  if (!(q0 > 0.0)) throw ParameterDomainError("Q0 must be positive");
  const double loss =
      1.0 / q0 + qp.alpha / std::numbers::pi * gap_ratio_factor(qp.delta, f0_ghz) * qp.x_qp;
  return 1.0 / loss;
}

double recombination_factor(double gamma_n) {
  const double released = 1.0 + 0.5 * (std::sqrt(1.0 + 4.0 * gamma_n) - 1.0);
  return 1.0 / (1.0 + gamma_n / released);
}

double q_int_power(const PowerLossSpec& spec, double mean_n) {
  spec.validate();
  if (!(mean_n >= 0.0)) throw ParameterDomainError("photon number must be non-negative");
  return 1.0 / (spec.delta0() + spec.beta * (recombination_factor(spec.gamma * mean_n) - 1.0));
}

std::vector<LossTangentPoint> loss_tangent_scaling(const PowerLossSpec& spec,
                                                   const std::vector<double>& n_values) {
  spec.validate();
  if (!(spec.beta > 0.0)) {
    throw ParameterDomainError("loss-tangent scaling needs beta > 0");
  }
  std::vector<LossTangentPoint> out;
  out.reserve(n_values.size());
  const double floor = spec.delta0() - spec.beta;
  for (double n : n_values) {
    const double loss = 1.0 / q_int_power(spec, n);
    out.push_back({spec.gamma * n, (loss - floor) / spec.beta});
  }
  return out;
}

double q_ind(const QuasiparticleSpec& qp, double f_ghz) {
  qp.validate();
  if (qp.x_qp == 0.0) {
    require_frequency(f_ghz);
    return std::numeric_limits<double>::infinity();
  }
  return 1.0 / (gap_ratio_factor(qp.delta, f_ghz) * qp.x_qp / std::numbers::pi);
}

double gamma_qp_single_junction_me(double sin_half_me_sq, double e_j, const QuasiparticleSpec& qp,
                                   double f01) {
  qp.validate();
  const double spectral =
      qp.x_qp * 8.0 * e_j * kGhzToInverseMicroseconds / std::numbers::pi * gap_ratio_factor(qp.delta, f01);
  return sin_half_me_sq * spectral;
}

double gamma_qp_single_junction(const EigenSolution& sol, const OperatorMatrix& sin_half,
                                double e_j, const QuasiparticleSpec& qp, double f01, int i, int f) {
  return gamma_qp_single_junction_me(squared_element(sin_half, sol, i, f), e_j, qp, f01);
}

double gamma_qp_array_me(double phi_me_sq, double e_l, const QuasiparticleSpec& qp, double f01) {
  qp.validate();
  const double spectral =
      qp.x_qp * 2.0 * e_l * kGhzToInverseMicroseconds / std::numbers::pi * gap_ratio_factor(qp.delta, f01);
  return phi_me_sq * spectral;
}

double gamma_qp_array(const EigenSolution& sol, const OperatorMatrix& phi_op, double e_l,
                      const QuasiparticleSpec& qp, double f01, int i, int f) {
  return gamma_qp_array_me(squared_element(phi_op, sol, i, f), e_l, qp, f01);
}

double gamma_inductive_me(double phi_me_sq, double e_l, double q_ind_value) {
  if (!(q_ind_value > 0.0)) throw ParameterDomainError("Q_ind must be positive");
  return phi_me_sq * 2.0 * e_l * kGhzToInverseMicroseconds / q_ind_value;
}

double gamma_inductive(const EigenSolution& sol, const OperatorMatrix& phi_op, double e_l,
                       double q_ind_value, int i, int f) {
  return gamma_inductive_me(squared_element(phi_op, sol, i, f), e_l, q_ind_value);
}

double gamma_dielectric_me(double phi_me_sq, double e_c, double q_cap, double f01) {
  require_frequency(f01);
  if (!(q_cap > 0.0)) throw ParameterDomainError("Q_cap must be positive");
  if (!(e_c > 0.0)) throw ParameterDomainError("E_C must be positive");
  // hbar omega^2 / E_C = omega (f01 / E_C) when energies are in frequency units.
  return phi_me_sq * kGhzToInverseMicroseconds * f01 * f01 / (4.0 * e_c * q_cap);
}

double gamma_dielectric(const EigenSolution& sol, const OperatorMatrix& phi_op, double e_c,
                        double q_cap, double f01, int i, int f) {
  return gamma_dielectric_me(squared_element(phi_op, sol, i, f), e_c, q_cap, f01);
}

std::vector<std::string> regime_warnings(double f01, const QuasiparticleSpec& qp,
                                         double temperature_k) {
  std::vector<std::string> out;
  const double photon = units::ghz_to_micro_ev(f01);
  if (photon > qp.delta / 5.0) {
    std::ostringstream msg;
    msg << "h f01 = " << photon << " ueV exceeds Delta/5; the h f << Delta limit is marginal";
    out.push_back(msg.str());
  }
  if (temperature_k > 0.0) {
    const double ratio = units::kPlanck * f01 * 1e9 / (2.0 * units::kBoltzmann * temperature_k);
    // coth(x) - 1 = 2 / (exp(2x) - 1)
    const double thermal = 2.0 / std::expm1(2.0 * ratio);
    if (thermal > 0.01) {
      std::ostringstream msg;
      msg << "thermal correction coth(hf/2kT) - 1 = " << thermal << " exceeds 1% at T = "
          << temperature_k << " K";
      out.push_back(msg.str());
    }
  }
  return out;
}

LossBudget t1_budget(const std::vector<LossChannel>& channels, const EigenSolution& sol,
                     const RateOperators& ops, double f01, int from, int to) {
  if (channels.empty()) throw ContractViolation("loss budget needs at least one channel");
  require_frequency(f01);
  LossBudget budget;
  for (const auto& channel : channels) {
    double rate = 0.0;
    if (const auto* c = std::get_if<InductiveQpChannel>(&channel.model)) {
      rate = gamma_qp_array(sol, ops.phi, c->e_l, c->qp, f01, from, to);
      for (auto& w : regime_warnings(f01, c->qp)) budget.warnings.push_back(channel.name + ": " + w);
    } else if (const auto* c = std::get_if<JunctionQpChannel>(&channel.model)) {
      rate = gamma_qp_single_junction(sol, ops.sin_half_phi, c->e_j, c->qp, f01, from, to);
      for (auto& w : regime_warnings(f01, c->qp)) budget.warnings.push_back(channel.name + ": " + w);
    } else {
      const auto& d = std::get<DielectricChannel>(channel.model);
      rate = gamma_dielectric(sol, ops.phi, d.e_c, d.q_cap, f01, from, to);
    }
    budget.channels.push_back({channel.name, rate});
    budget.total_rate += rate;
  }
  budget.total_t1 = budget.total_rate > 0.0 ? 1.0 / budget.total_rate
                                            : std::numeric_limits<double>::infinity();
  return budget;
}

}  // namespace fluxqp
