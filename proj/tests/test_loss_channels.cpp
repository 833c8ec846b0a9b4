#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "fluxqp/circuit_models.hpp"
#include "fluxqp/errors.hpp"
#include "fluxqp/loss_channels.hpp"
#include "oracles.hpp"
#include "measured_sweeps.hpp"
#include "test_support.hpp"

using namespace fluxqp;
using testing_support::kDeviceA;

namespace {

FluxoniumSolution device_a(double phi) {
  return solve_fluxonium(testing_support::circuit(kDeviceA, phi), 2);
}

// Flux in [0, 0.5] at which the qubit frequency equals f01.
double flux_for(double f01) {
  double lo = 0.0, hi = 0.5;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (device_a(mid).sol.transition(0, 1) > f01 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("quasiparticle limited resonator Q") {
  CHECK(q_int_quasiparticle(QuasiparticleSpec{0.0, 600.0, 0.99}, 3.3e4, 5.0) == 3.3e4);
  const double inf = std::numeric_limits<double>::infinity();
  double previous = 0.0;
  for (double f = 4.0; f <= 8.0; f += 0.5) {
    const double thin = q_int_quasiparticle(QuasiparticleSpec{3.9e-5, 600.0, 0.99}, inf, f);
    const double thick = q_int_quasiparticle(QuasiparticleSpec{1.2e-5, 600.0, 0.975}, inf, f);
    CHECK(thin > 5e3);
    CHECK(thin < 5e4);
    CHECK(thin > previous);
    previous = thin;
    const double ratio = thick / thin;
    CHECK(ratio > 2.5);
    CHECK(ratio < 4.0);
    CHECK(1.0 / thin == doctest::Approx(oracle::inverse_q_qp(0.99, 3.9e-5, 600.0, f)).epsilon(1e-9));
  }
}

TEST_CASE("power dependent Q limits") {
  const SweepRow& row = kMeasuredSweeps[0];
  REQUIRE(row.f0 == 4.375);
  const PowerLossSpec spec = sweep_spec(row);
  CHECK(q_int_power(spec, 0.0) == spec.q0);
  CHECK(1.0 / q_int_power(spec, 0.0) == doctest::Approx(1.622e-5).epsilon(1e-12));
  CHECK(q_int_power(spec, 1.0) ==
        doctest::Approx(oracle::q_int_power(spec.q0, spec.beta, spec.gamma, 1.0)).epsilon(1e-13));
  const double saturated = 1.0 / (1.0 / spec.q0 - spec.beta);
  CHECK(q_int_power(spec, 1e15) == doctest::Approx(saturated).epsilon(1e-6));
  CHECK(recombination_factor(0.0) == 1.0);
  CHECK_THROWS_AS(q_int_power(spec, -1.0), ParameterDomainError);
}

TEST_CASE("loss tangent collapse") {
  const PowerLossSpec a = sweep_spec(kMeasuredSweeps[0]);
  const PowerLossSpec b = sweep_spec(kMeasuredSweeps[7]);
  REQUIRE(kMeasuredSweeps[7].f0 == 7.701);
  CHECK(loss_tangent_scaling(a, {0.0})[0].scaled == doctest::Approx(1.0).epsilon(1e-12));
  for (double gn : {0.1, 1.0, 10.0}) {
    const double sa = loss_tangent_scaling(a, {gn / a.gamma})[0].scaled;
    const double sb = loss_tangent_scaling(b, {gn / b.gamma})[0].scaled;
    CHECK(std::abs(sa - sb) < 1e-9);
    CHECK(sa == doctest::Approx(recombination_factor(gn)).epsilon(1e-9));
  }
  const PowerLossSpec c{2e4, 3e-5, 0.5};
  const PowerLossSpec d{7e4, 1e-6, 4.0};
  for (double gn : {0.0, 0.3, 3.0, 300.0}) {
    CHECK(std::abs(loss_tangent_scaling(c, {gn / c.gamma})[0].scaled -
                   loss_tangent_scaling(d, {gn / d.gamma})[0].scaled) < 1e-12);
  }
}

TEST_CASE("power model is monotone and bounded") {
  for (const SweepRow& row : kMeasuredSweeps) {
    const PowerLossSpec spec = sweep_spec(row);
    const double bound = 1.0 / (1.0 / spec.q0 - spec.beta);
    double previous = q_int_power(spec, 0.0);
    for (int i = 0; i <= 120; ++i) {
      const double q = q_int_power(spec, std::pow(10.0, -3.0 + 0.075 * i));
      CHECK(q >= previous);
      CHECK(q <= bound * (1.0 + 1e-12));
      previous = q;
    }
  }
}

TEST_CASE("inductor quality factor") {
  CHECK(std::isinf(q_ind(QuasiparticleSpec{0.0}, 3.0)));
  const QuasiparticleSpec qp{2e-5, 550.0, 1.0};
  CHECK(q_ind(qp, 1.7) / q_ind(qp, 6.8) == doctest::Approx(0.5).epsilon(1e-14));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const QuasiparticleSpec r{1e-6 + 1e-4 * u(rng), 100.0 + 900.0 * u(rng), 1.0};
    const double f = 0.2 + 10.0 * u(rng);
    const double via_resonator = 1.0 / q_int_quasiparticle(r, std::numeric_limits<double>::infinity(), f);
    CHECK(std::abs(via_resonator - 1.0 / q_ind(r, f)) <= 1e-14 * via_resonator);
  }
}

TEST_CASE("single junction quasiparticle rate") {
  const FluxoniumSolution s = device_a(0.25);
  const double f01 = s.sol.transition(0, 1);
  const QuasiparticleSpec qp{3.9e-5};
  CHECK(gamma_qp_single_junction(s.sol, s.ops.sin_half_phi, kDeviceA.e_j, QuasiparticleSpec{0.0}, f01, 1, 0) == 0.0);
  const double rate = gamma_qp_single_junction(s.sol, s.ops.sin_half_phi, kDeviceA.e_j, qp, f01, 1, 0);
  CHECK(gamma_qp_single_junction(s.sol, s.ops.sin_half_phi, 2.0 * kDeviceA.e_j, qp, f01, 1, 0) ==
        doctest::Approx(2.0 * rate).epsilon(1e-15));
  CHECK(rate == doctest::Approx(1.911824376733).epsilon(1e-9));
  const double me = std::norm(matrix_element(s.ops.sin_half_phi, s.sol, 1, 0));
  CHECK(rate == doctest::Approx(oracle::rate_junction_qp(me, kDeviceA.e_j, 3.9e-5, 600.0, f01)).epsilon(1e-9));
  // sin(phi/2) has no 0-1 element at half flux by parity.
  const FluxoniumSolution half = device_a(0.5);
  CHECK(gamma_qp_single_junction(half.sol, half.ops.sin_half_phi, kDeviceA.e_j, qp,
                                 half.sol.transition(0, 1), 1, 0) < 1e-20);
}

TEST_CASE("array quasiparticle rate equals the lossy inductor rate") {
  const FluxoniumSolution s = device_a(0.37);
  const double f01 = s.sol.transition(0, 1);
  CHECK(gamma_qp_array(s.sol, s.ops.phi, kDeviceA.e_l, QuasiparticleSpec{0.0}, f01, 1, 0) == 0.0);
  const QuasiparticleSpec qp{3.9e-5};
  const double array = gamma_qp_array(s.sol, s.ops.phi, kDeviceA.e_l, qp, f01, 1, 0);
  const double inductive = gamma_inductive(s.sol, s.ops.phi, kDeviceA.e_l, q_ind(qp, f01), 1, 0);
  CHECK(std::abs(array - inductive) <= 1e-12 * array);
  const double me = std::norm(matrix_element(s.ops.phi, s.sol, 1, 0));
  CHECK(array == doctest::Approx(oracle::rate_array_qp(me, kDeviceA.e_l, 3.9e-5, 600.0, f01)).epsilon(1e-9));
  CHECK(inductive == doctest::Approx(oracle::rate_inductive(me, kDeviceA.e_l, q_ind(qp, f01))).epsilon(1e-9));
  CHECK(gamma_qp_array_me(me, kDeviceA.e_l, QuasiparticleSpec{7.8e-5}, f01) ==
        doctest::Approx(2.0 * array).epsilon(1e-14));
}

TEST_CASE("inductive lifetimes across the band") {
  const double expected_t1[2][2] = {{1.048087, 4.740046}, {0.104809, 0.474005}};
  const double x_values[2] = {1e-5, 1e-4};
  const double f_values[2] = {1.0, 4.0};
  for (int xi = 0; xi < 2; ++xi) {
    for (int fi = 0; fi < 2; ++fi) {
      const FluxoniumSolution s = device_a(flux_for(f_values[fi]));
      const double t1 = 1.0 / gamma_qp_array(s.sol, s.ops.phi, kDeviceA.e_l,
                                             QuasiparticleSpec{x_values[xi]}, f_values[fi], 1, 0);
      CHECK(t1 == doctest::Approx(expected_t1[xi][fi]).epsilon(1e-5));
    }
    CHECK(expected_t1[xi][1] > expected_t1[xi][0]);
  }
}

TEST_CASE("dielectric rate") {
  CHECK(gamma_dielectric_me(1.0, 0.88, 1e300, 2.0) < 1e-290);
  CHECK(gamma_dielectric_me(0.7, 0.88, 1e4, 4.0) / gamma_dielectric_me(0.7, 0.88, 1e4, 2.0) ==
        doctest::Approx(4.0).epsilon(1e-14));
  CHECK(gamma_dielectric_me(0.7, 0.88, 1e4, 2.0) ==
        doctest::Approx(oracle::rate_dielectric(0.7, 0.88, 1e4, 2.0)).epsilon(1e-12));
  double previous = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 40; ++i) {
    const FluxoniumSolution s = device_a(0.5 - 0.45 * i / 40.0);
    const double f01 = s.sol.transition(0, 1);
    if (f01 < 0.7 || f01 > 4.0) continue;
    const double t1 = 1.0 / gamma_dielectric(s.sol, s.ops.phi, kDeviceA.e_c, 1e4, f01, 1, 0);
    CHECK(t1 < previous);
    previous = t1;
  }
}

TEST_CASE("loss budget") {
  const FluxoniumSolution s = device_a(flux_for(1.5));
  const double f01 = s.sol.transition(0, 1);
  const RateOperators ops{s.ops.phi, s.ops.sin_half_phi};
  const LossChannel inductive{"inductive", InductiveQpChannel{QuasiparticleSpec{3.9e-5}, kDeviceA.e_l}};
  const LossChannel dielectric{"dielectric", DielectricChannel{1e4, kDeviceA.e_c}};

  const LossBudget single = t1_budget({inductive}, s.sol, ops, f01);
  CHECK(single.total_t1 == doctest::Approx(1.0 / single.channels[0].rate).epsilon(1e-15));
  const LossBudget twice = t1_budget({inductive, inductive}, s.sol, ops, f01);
  CHECK(twice.total_t1 == doctest::Approx(0.5 * single.total_t1).epsilon(1e-15));

  const LossBudget both = t1_budget({inductive, dielectric}, s.sol, ops, f01);
  REQUIRE(both.channels.size() == 2);
  CHECK(both.channels[0].rate > both.channels[1].rate);
  CHECK(both.total_rate == doctest::Approx(both.channels[0].rate + both.channels[1].rate));
  CHECK_THROWS_AS(t1_budget({}, s.sol, ops, f01), ContractViolation);
}

TEST_CASE("regime warnings") {
  const QuasiparticleSpec qp{3.9e-5};
  CHECK(regime_warnings(1.0, qp).empty());
  CHECK_FALSE(regime_warnings(40.0, qp).empty());
  CHECK_FALSE(regime_warnings(0.5, qp, 0.2).empty());
  CHECK(regime_warnings(4.0, qp, 0.01).empty());
}

TEST_CASE("parameter domains") {
  CHECK_THROWS_AS(QuasiparticleSpec({-1e-5}).validate(), ParameterDomainError);
  CHECK_THROWS_AS((QuasiparticleSpec{1e-5, 600.0, 1.5}.validate()), ParameterDomainError);
  CHECK_THROWS_AS((PowerLossSpec{0.0, 1e-6, 1.0}.validate()), ParameterDomainError);
  CHECK_THROWS_AS(gamma_dielectric_me(1.0, 0.88, 0.0, 1.0), ParameterDomainError);
}
