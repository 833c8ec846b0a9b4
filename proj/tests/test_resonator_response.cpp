#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "doctest.h"
#include "fluxqp/errors.hpp"
#include "fluxqp/resonator_response.hpp"
#include "oracles.hpp"

using namespace fluxqp;

namespace {

SweepTrace model_trace(const ResonanceParams& p, const Baseline& b, int points, double span_linewidths,
                       SweepDirection direction = SweepDirection::up) {
  SweepTrace t;
  const double width = p.f0 / p.q_tot();
  for (int k = 0; k < points; ++k) {
    t.frequencies.push_back(p.f0 + width * span_linewidths * (k / (points - 1.0) - 0.5));
  }
  t.s21 = s21_model(p, b, t.frequencies, 1.0, direction);
  t.direction = direction;
  return t;
}

double rms_difference(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) sum += std::norm(a[k] - b[k]);
  return std::sqrt(sum / a.size());
}

}  // namespace

TEST_CASE("linear resonator detuning is the applied detuning") {
  for (double y0 : {-3.0, 0.0, 0.4, 12.0}) {
    const std::vector<double> roots = solve_detuning(y0, 0.0);
    REQUIRE(roots.size() == 1);
    CHECK(roots[0] == y0);
  }
}

TEST_CASE("critical nonlinearity has a triple root") {
  CHECK(kCriticalNonlinearity == doctest::Approx(4.0 * std::sqrt(3.0) / 9.0).epsilon(1e-15));
  const double y0 = -std::sqrt(3.0) / 2.0;
  CHECK(std::abs(detuning_discriminant(y0, kCriticalNonlinearity)) < 1e-9);
  const std::vector<double> roots = solve_detuning(y0, kCriticalNonlinearity);
  // Rounding decides whether the coalesced root is reported once or thrice.
  for (double y : roots) CHECK(std::abs(y - y0 / 3.0) < 1e-4);
}

TEST_CASE("detuning roots match the bisection oracle") {
  const std::vector<double> expected = oracle::cubic_roots(2.0, 1.0);
  const std::vector<double> roots = solve_detuning(2.0, 1.0);
  REQUIRE(roots.size() == expected.size());
  for (std::size_t k = 0; k < roots.size(); ++k) CHECK(std::abs(roots[k] - expected[k]) < 1e-10);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> y0_dist(-5.0, 5.0);
  std::uniform_real_distribution<double> a_dist(0.0, 3.0);
  for (int i = 0; i < 2000; ++i) {
    const double y0 = y0_dist(rng);
    const double a = a_dist(rng);
    const std::vector<double> r = solve_detuning(y0, a);
    const std::vector<double> o = oracle::cubic_roots(y0, a);
    REQUIRE(r.size() == o.size());
    for (std::size_t k = 0; k < r.size(); ++k) CHECK(std::abs(r[k] - o[k]) < 1e-9);
  }
}

TEST_CASE("bistable window matches the fold oracle") {
  for (double a : {0.8, 1.0, 1.5}) {
    const auto window = bistable_window(a);
    const auto folds = oracle::fold_points(a);
    REQUIRE(window);
    REQUIRE(folds);
    CHECK(std::abs(window->first - folds->first) < 1e-6);
    CHECK(std::abs(window->second - folds->second) < 1e-6);
  }
  CHECK_FALSE(bistable_window(0.7).has_value());
  CHECK_FALSE(bistable_window(kCriticalNonlinearity).has_value());
}

TEST_CASE("single root below the critical nonlinearity") {
  for (double a : {0.1, 0.5, 0.76}) {
    for (int i = 0; i <= 400; ++i) CHECK(solve_detuning(-4.0 + 0.02 * i, a).size() == 1);
  }
}

TEST_CASE("transparency far from resonance") {
  const ResonanceParams p{5.0, 1e5, 1e5, 0.0, 0.0};
  CHECK(std::abs(s21_model(p, Baseline::unit(5.0), 55.0) - 1.0) < 1e-6);
}

TEST_CASE("linear dip at resonance") {
  const ResonanceParams p{6.0, 3e4, 1e4, 0.0, 0.0};
  const cplx s = s21_model(p, Baseline::unit(6.0), 6.0);
  CHECK(std::abs(s - (1.0 - p.q_tot() / p.q_ext)) < 1e-15);
}

TEST_CASE("asymmetry accessors") {
  const ResonanceParams p = ResonanceParams::with_delta_f(5.0, 2e4, 3e4, 2e-5);
  CHECK(p.x_a == doctest::Approx(4e-6));
  CHECK(p.delta_f() == doctest::Approx(2e-5));
  CHECK_FALSE(p.bifurcated());
  CHECK(ResonanceParams{5.0, 2e4, 3e4, 0.0, 0.8}.bifurcated());
  CHECK_THROWS_AS((ResonanceParams{5.0, -1.0, 3e4}.validate()), ParameterDomainError);
}

TEST_CASE("sweep directions agree outside the bistable window") {
  ResonanceParams p{5.0, 4e4, 4e4, 0.0, 0.3};
  const Baseline b = Baseline::unit(5.0);
  const SweepTrace up = model_trace(p, b, 401, 16.0, SweepDirection::up);
  const SweepTrace down = model_trace(p, b, 401, 16.0, SweepDirection::down);
  for (std::size_t k = 0; k < up.s21.size(); ++k) CHECK(up.s21[k] == down.s21[k]);

  p.a = 1.2;
  const auto folds = oracle::fold_points(p.a);
  REQUIRE(folds);
  const SweepTrace up2 = model_trace(p, b, 401, 16.0, SweepDirection::up);
  const SweepTrace down2 = model_trace(p, b, 401, 16.0, SweepDirection::down);
  int differing = 0;
  for (std::size_t k = 0; k < up2.s21.size(); ++k) {
    const double y0 = p.q_tot() * (up2.frequencies[k] - p.f0) / p.f0;
    const bool inside = y0 > folds->first + 1e-6 && y0 < folds->second - 1e-6;
    const bool outside = y0 < folds->first - 1e-6 || y0 > folds->second + 1e-6;
    if (outside) CHECK(up2.s21[k] == down2.s21[k]);
    if (inside) {
      CHECK(std::abs(up2.s21[k] - down2.s21[k]) > 1e-3);
      ++differing;
    }
  }
  CHECK(differing > 0);
}

TEST_CASE("linear response traces a circle") {
  const ResonanceParams p{7.0, 5e4, 2e4, 3e-6, 0.0};
  const SweepTrace t = model_trace(p, Baseline::unit(7.0), 401, 20.0);
  // Algebraic circle fit x^2 + y^2 + D x + E y + F = 0.
  Eigen::MatrixXd a(401, 3);
  Eigen::VectorXd rhs(401);
  for (int k = 0; k < 401; ++k) {
    const double x = t.s21[k].real(), y = t.s21[k].imag();
    a.row(k) << x, y, 1.0;
    rhs(k) = -(x * x + y * y);
  }
  const Eigen::Vector3d c = a.colPivHouseholderQr().solve(rhs);
  const double cx = -c(0) / 2.0, cy = -c(1) / 2.0;
  const double radius = std::sqrt(cx * cx + cy * cy - c(2));
  double worst = 0.0;
  for (const cplx& s : t.s21) worst = std::max(worst, std::abs(std::abs(s - cplx(cx, cy)) - radius));
  CHECK(worst < 1e-8 * 2.0 * radius);
}

TEST_CASE("photon number") {
  const ResonanceParams p{6.0, 2e4, 2e4};
  CHECK(p.q_tot() == doctest::Approx(1e4));
  CHECK(photon_number(p, 0.0, 6.0) == 0.0);
  const double reference = photon_number(p, 1e-18, 6.0);
  CHECK(reference == doctest::Approx(oracle::photon_number(1e4, 2e4, 1e-18, 6.0)).epsilon(1e-12));
  CHECK(reference == doctest::Approx(6.672085476550e-02).epsilon(1e-10));
  CHECK(photon_number(p, 3e-18, 6.0) == doctest::Approx(3.0 * reference).epsilon(1e-14));
  const ResonanceParams half{6.0, 2e4 / 3.0, 2e4};
  CHECK(half.q_tot() == doctest::Approx(5e3));
  CHECK(reference / photon_number(half, 1e-18, 6.0) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(power_at_resonator(0.0, 60.0) == doctest::Approx(1e-9).epsilon(1e-12));
}

TEST_CASE("attenuation interpolation is exact for quadratic data") {
  const auto quad = [](double f) { return 50.0 + 1.5 * f - 0.2 * f * f; };
  AttenuationTable table({2.0, 4.0, 6.0, 8.0}, {quad(2.0), quad(4.0), quad(6.0), quad(8.0)});
  for (double f : {2.0, 3.3, 5.0, 7.9}) CHECK(table.at(f) == doctest::Approx(quad(f)).epsilon(1e-12));
  CHECK_THROWS_AS(AttenuationTable({1.0, 2.0}, {1.0, 2.0}), ValidationError);
  CHECK_THROWS_AS(AttenuationTable({1.0, 3.0, 2.0}, {1.0, 2.0, 3.0}), ValidationError);
}

TEST_CASE("trace validation names the offending sample") {
  SweepTrace t;
  t.frequencies = {1.0, 2.0, 2.0, 3.0};
  t.s21.assign(4, 1.0);
  try {
    t.validate();
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("sample 2") != std::string::npos);
  }
}

TEST_CASE("normalization") {
  const ResonanceParams p{5.5, 6e4, 3e4, 1e-6, 0.0};
  const SweepTrace clean = model_trace(p, Baseline::unit(5.5), 601, 12.0);

  SUBCASE("trace with unit wings is unchanged") {
    SweepTrace flat = clean;
    const std::size_t wing = flat.s21.size() / 10;
    for (std::size_t k = 0; k < wing; ++k) {
      flat.s21[k] = 1.0;
      flat.s21[flat.s21.size() - 1 - k] = 1.0;
    }
    CHECK(rms_difference(normalize_trace(flat).s21, flat.s21) < 1e-9);
  }
  SUBCASE("idempotent") {
    const SweepTrace once = normalize_trace(clean);
    CHECK(rms_difference(normalize_trace(once).s21, once.s21) < 1e-9);
  }
  SUBCASE("gain and cable delay are removed") {
    SweepTrace raw = clean;
    for (std::size_t k = 0; k < raw.s21.size(); ++k) {
      raw.s21[k] *= 0.031 * std::polar(1.0, 1.3 + 42.0 * raw.frequencies[k]);
    }
    CHECK(rms_difference(normalize_trace(raw).s21, normalize_trace(clean).s21) < 1e-6);
  }
  SUBCASE("pure delay gives a flat phase") {
    SweepTrace delay;
    for (int k = 0; k < 200; ++k) {
      delay.frequencies.push_back(4.0 + 0.001 * k);
      delay.s21.push_back(std::polar(2.0, -7.0 + 310.0 * delay.frequencies.back()));
    }
    double worst = 0.0;
    for (const cplx& s : normalize_trace(delay).s21) worst = std::max(worst, std::abs(std::arg(s)));
    CHECK(worst < 1e-6);
  }
  SUBCASE("short traces are rejected") {
    SweepTrace tiny = clean;
    tiny.frequencies.resize(10);
    tiny.s21.resize(10);
    CHECK_THROWS_AS(normalize_trace(tiny), PreprocessingError);
  }
}
