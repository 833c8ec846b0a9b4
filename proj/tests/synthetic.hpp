#pragma once

#include <cmath>
#include <optional>
#include <random>

#include "fluxqp/circuit_models.hpp"
#include "fluxqp/fit_engine.hpp"
#include "fluxqp/resonator_response.hpp"

namespace synthetic {

/// Model trace over f0 +/- half_span_linewidths linewidths with complex
/// Gaussian noise of RMS 10^(-snr/20) relative to the local baseline.
inline fluxqp::SweepTrace trace(const fluxqp::ResonanceParams& p, const fluxqp::Baseline& b,
                                std::optional<double> snr_db, std::mt19937_64& rng, int points = 801,
                                double half_span_linewidths = 12.0,
                                fluxqp::SweepDirection direction = fluxqp::SweepDirection::up) {
  fluxqp::SweepTrace t;
  t.direction = direction;
  const double width = p.f0 / p.q_tot();
  const double sigma = snr_db ? std::pow(10.0, -*snr_db / 20.0) / std::sqrt(2.0) : 0.0;
  std::normal_distribution<double> normal;
  for (int k = 0; k < points; ++k) {
    const double f = p.f0 + half_span_linewidths * width * (2.0 * k / (points - 1.0) - 1.0);
    t.frequencies.push_back(f);
    const fluxqp::cplx noise(normal(rng), normal(rng));
    t.s21.push_back(fluxqp::s21_model(p, b, f, 1.0, direction) + std::abs(b(f)) * sigma * noise);
  }
  return t;
}

inline fluxqp::CoupledSystemSpec readout_device(double e_c, double e_j, double e_l, int dim = 60) {
  fluxqp::CoupledSystemSpec s;
  s.qubit = {e_c, e_j, e_l, 0.0, fluxqp::PhaseBasis::harmonic(dim)};
  s.modes = {fluxqp::ResonatorMode{6.2, 6}};
  s.couplings = {fluxqp::ChargeCoupling{0.08}};
  return s;
}

/// Two-tone observations (f01, f02 and the readout branch) on `points` flux
/// values spread over [0, 0.5].
inline std::vector<fluxqp::SpectrumObservation> two_tone(const fluxqp::CoupledSystemSpec& spec,
                                                         int points) {
  std::vector<fluxqp::SpectrumObservation> obs;
  for (int i = 0; i < points; ++i) {
    fluxqp::CoupledSystemSpec s = spec;
    s.qubit.phi_ext = 0.5 * i / (points - 1.0);
    const fluxqp::DressedSpectrum d = fluxqp::solve_coupled(s, 8);
    using fluxqp::ObservationKind;
    obs.push_back({s.qubit.phi_ext, d.qubit_transition(0, 1), ObservationKind::qubit_transition, 0, 1});
    obs.push_back({s.qubit.phi_ext, d.qubit_transition(0, 2), ObservationKind::qubit_transition, 0, 2});
    obs.push_back({s.qubit.phi_ext, d.mode_frequency(0), ObservationKind::resonator, 0, 0, 0});
  }
  return obs;
}

}  // namespace synthetic
