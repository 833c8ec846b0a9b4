#pragma once

#include <string>
#include <variant>
#include <vector>

#include "fluxqp/quantum_core.hpp"

namespace fluxqp {

/// Gap of the WSi film in micro-eV.
inline constexpr double kWsiGapMicroEv = 600.0;

struct QuasiparticleSpec {
  double x_qp = 0.0;
  double delta = kWsiGapMicroEv;  // micro-eV
  double alpha = 1.0;             // kinetic-inductance fraction

  void validate() const;
};

/// Photon-number dependent loss of a resonator. q0 here is the loss not
/// related to quasiparticles in the power model; it is unrelated to the q0
/// argument of q_int_quasiparticle even though both are conventionally
/// written Q0.
struct PowerLossSpec {
  double q0 = 0.0;
  double beta = 0.0;
  double gamma = 0.0;  // per photon

  /// Loss tangent at zero photons, 1 / q0.
  double delta0() const { return 1.0 / q0; }
  void validate() const;
};

/// 1/Q_int = 1/q0 + (alpha/pi) sqrt(2 Delta / h f0) x_qp. q0 may be +inf.
double q_int_quasiparticle(const QuasiparticleSpec& qp, double q0, double f0_ghz);

/// sqrt(2 Delta / h f) with Delta in micro-eV and f in GHz.
double gap_ratio_factor(double delta_micro_ev, double f_ghz);

/// Relative photon-number dependence F(g n) = 1 / (1 + g n / (1 + (sqrt(1 + 4 g n) - 1) / 2)).
double recombination_factor(double gamma_n);

/// 1/Q_int = 1/q0 + beta (F(gamma n) - 1).
double q_int_power(const PowerLossSpec& spec, double mean_n);

struct LossTangentPoint {
  double gamma_n = 0.0;
  double scaled = 0.0;  // (delta(n) - (delta0 - beta)) / beta
};

/// Collapse coordinates: every spec maps onto the same curve of gamma n.
std::vector<LossTangentPoint> loss_tangent_scaling(const PowerLossSpec& spec,
                                                   const std::vector<double>& n_values);

/// Quasiparticle-limited inductor quality factor; +inf when x_qp = 0.
double q_ind(const QuasiparticleSpec& qp, double f_ghz);

// Relaxation rates in 1/us. Energies and frequencies in GHz. The `_me`
// variants take the squared matrix element directly.

double gamma_qp_single_junction_me(double sin_half_me_sq, double e_j, const QuasiparticleSpec& qp,
                                   double f01);
double gamma_qp_single_junction(const EigenSolution& sol, const OperatorMatrix& sin_half,
                                double e_j, const QuasiparticleSpec& qp, double f01, int i, int f);

double gamma_qp_array_me(double phi_me_sq, double e_l, const QuasiparticleSpec& qp, double f01);
double gamma_qp_array(const EigenSolution& sol, const OperatorMatrix& phi_op, double e_l,
                      const QuasiparticleSpec& qp, double f01, int i, int f);

/// Phenomenological lossy-inductor rate |<i|phi|f>|^2 2 E_L / (hbar Q_ind).
double gamma_inductive_me(double phi_me_sq, double e_l, double q_ind_value);
double gamma_inductive(const EigenSolution& sol, const OperatorMatrix& phi_op, double e_l,
                       double q_ind_value, int i, int f);

/// |<i|phi|f>|^2 hbar omega^2 / (4 E_C Q_cap).
double gamma_dielectric_me(double phi_me_sq, double e_c, double q_cap, double f01);
double gamma_dielectric(const EigenSolution& sol, const OperatorMatrix& phi_op, double e_c,
                        double q_cap, double f01, int i, int f);

/// Regime notes for the zero-temperature, h f << Delta approximations. Empty
/// when none apply. temperature_k <= 0 skips the thermal check.
std::vector<std::string> regime_warnings(double f01, const QuasiparticleSpec& qp,
                                         double temperature_k = 0.0);

/// Quasiparticle tunneling through the inductor treated as a junction array.
struct InductiveQpChannel {
  QuasiparticleSpec qp;
  double e_l = 0.0;
};

/// Quasiparticle tunneling through the small junction.
struct JunctionQpChannel {
  QuasiparticleSpec qp;
  double e_j = 0.0;
};

struct DielectricChannel {
  double q_cap = 0.0;
  double e_c = 0.0;
};

struct LossChannel {
  std::string name;
  std::variant<InductiveQpChannel, JunctionQpChannel, DielectricChannel> model;
};

struct ChannelRate {
  std::string name;
  double rate = 0.0;  // 1/us
};

struct LossBudget {
  std::vector<ChannelRate> channels;
  double total_rate = 0.0;  // 1/us
  double total_t1 = 0.0;    // us
  std::vector<std::string> warnings;
};

/// Operators entering the rates: phi and sin(phi/2).
struct RateOperators {
  const OperatorMatrix& phi;
  const OperatorMatrix& sin_half_phi;
};

/// Sums the channel rates for the transition from level `from` to `to`
/// (defaults to 1 -> 0).
LossBudget t1_budget(const std::vector<LossChannel>& channels, const EigenSolution& sol,
                     const RateOperators& ops, double f01, int from = 1, int to = 0);

}  // namespace fluxqp
