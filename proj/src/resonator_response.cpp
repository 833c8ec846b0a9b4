#include "fluxqp/resonator_response.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fluxqp/errors.hpp"
#include "fluxqp/units.hpp"

namespace fluxqp {

namespace {

double cubic_value(double y, double y0, double a) {
  return ((4.0 * y - 4.0 * y0) * y + 1.0) * y - y0 - a;
}

double cubic_slope(double y, double y0) { return (12.0 * y - 8.0 * y0) * y + 1.0; }

double polish(double y, double y0, double a) {
  double best = std::abs(cubic_value(y, y0, a));
  for (int iter = 0; iter < 4 && best > 0.0; ++iter) {
    const double slope = cubic_slope(y, y0);
    if (slope == 0.0) break;
    const double next = y - cubic_value(y, y0, a) / slope;
    const double value = std::abs(cubic_value(next, y0, a));
    if (!(value < best)) break;
    y = next;
    best = value;
  }
  return y;
}

// Depressed form t^3 + p t + q with y = t + y0 / 3.
struct Depressed {
  double p;
  double q;
};

Depressed depress(double y0, double a) {
  return {0.25 - y0 * y0 / 3.0,
          -2.0 * y0 * y0 * y0 / 27.0 + y0 / 12.0 - 0.25 * (y0 + a)};
}

double median(std::vector<double> values) {
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

std::vector<double> unwrapped_phase(const std::vector<cplx>& s21) {
  std::vector<double> phase(s21.size());
  phase[0] = std::arg(s21[0]);
  for (std::size_t k = 1; k < s21.size(); ++k) {
    double step = std::arg(s21[k]) - std::arg(s21[k - 1]);
    step -= 2.0 * std::numbers::pi * std::round(step / (2.0 * std::numbers::pi));
    phase[k] = phase[k - 1] + step;
  }
  return phase;
}

}  // namespace

ResonanceParams ResonanceParams::with_delta_f(double f0, double q_int, double q_ext,
                                              double delta_f, double a) {
  return ResonanceParams{f0, q_int, q_ext, delta_f / f0, a};
}

void ResonanceParams::validate() const {
  if (!(f0 > 0.0) || !(q_int > 0.0) || !(q_ext > 0.0)) {
    throw ParameterDomainError("resonance requires f0, Q_int and Q_ext > 0");
  }
  if (!(a >= 0.0) || !std::isfinite(a) || !std::isfinite(x_a)) {
    throw ParameterDomainError("nonlinearity must be finite and non-negative");
  }
}

Baseline Baseline::unit(double reference_frequency) {
  Baseline b;
  b.f_m = reference_frequency;
  return b;
}

cplx Baseline::operator()(double f) const {
  const double x = (f - f_m) / f_m;
  return (g0 + (g1 + g2 * x) * x) * std::polar(1.0, p0 + p1 * x);
}

void Baseline::validate() const {
  if (!(g0 > 0.0)) throw ParameterDomainError("baseline gain g0 must be positive");
  if (!(f_m > 0.0)) throw ParameterDomainError("baseline reference frequency must be positive");
}

AttenuationTable::AttenuationTable(std::vector<double> frequencies_ghz,
                                   std::vector<double> attenuation_db)
    : frequencies_(std::move(frequencies_ghz)), attenuation_(std::move(attenuation_db)) {
  if (frequencies_.size() != attenuation_.size()) {
    throw ValidationError("attenuation table columns differ in length");
  }
  if (frequencies_.size() < 3) {
    throw ValidationError("attenuation table needs at least three frequency points");
  }
  for (std::size_t k = 1; k < frequencies_.size(); ++k) {
    if (!(frequencies_[k] > frequencies_[k - 1])) {
      throw ValidationError("attenuation table frequencies must be strictly increasing (row " +
                            std::to_string(k + 1) + ")");
    }
  }
}

double AttenuationTable::at(double f_ghz) const {
  if (frequencies_.empty()) return 0.0;
  const auto n = frequencies_.size();
  const auto upper = std::lower_bound(frequencies_.begin(), frequencies_.end(), f_ghz);
  std::size_t nearest = static_cast<std::size_t>(upper - frequencies_.begin());
  if (nearest == n || (nearest > 0 && f_ghz - frequencies_[nearest - 1] < frequencies_[nearest] - f_ghz)) {
    nearest = nearest == 0 ? 0 : nearest - 1;
  }
  const std::size_t start = std::clamp<std::size_t>(nearest == 0 ? 0 : nearest - 1, 0, n - 3);
  double value = 0.0;
  for (std::size_t i = start; i < start + 3; ++i) {
    double weight = 1.0;
    for (std::size_t j = start; j < start + 3; ++j) {
      if (j != i) weight *= (f_ghz - frequencies_[j]) / (frequencies_[i] - frequencies_[j]);
    }
    value += weight * attenuation_[i];
  }
  return value;
}

void SweepTrace::validate() const {
  if (frequencies.size() != s21.size()) {
    throw ValidationError("frequency and S21 columns differ in length");
  }
  if (frequencies.size() < 3) {
    throw ValidationError("trace needs at least 3 samples");
  }
  for (std::size_t k = 0; k < frequencies.size(); ++k) {
    if (!std::isfinite(frequencies[k]) || !std::isfinite(s21[k].real()) ||
        !std::isfinite(s21[k].imag())) {
      throw ValidationError("non-finite value in sample " + std::to_string(k));
    }
    if (k > 0 && !(frequencies[k] > frequencies[k - 1])) {
      throw ValidationError("frequency not strictly increasing at sample " + std::to_string(k));
    }
  }
}

std::vector<double> solve_detuning(double y0, double a) {
  if (!(a >= 0.0)) throw ParameterDomainError("nonlinearity must be non-negative");
  if (a == 0.0) return {y0};
  const auto [p, q] = depress(y0, a);
  const double shift = y0 / 3.0;
  const double disc = q * q / 4.0 + p * p * p / 27.0;
  std::vector<double> roots;
  if (disc > 0.0 || p >= 0.0) {
    const double root = std::sqrt(std::max(disc, 0.0));
    const double t = std::cbrt(-0.5 * q + root) + std::cbrt(-0.5 * q - root);
    roots.push_back(polish(t + shift, y0, a));
  } else {
    const double radius = 2.0 * std::sqrt(-p / 3.0);
    const double arg = std::clamp(3.0 * q / (p * radius), -1.0, 1.0);
    const double angle = std::acos(arg) / 3.0;
    for (int k = 0; k < 3; ++k) {
      const double t = radius * std::cos(angle - 2.0 * std::numbers::pi * k / 3.0);
      roots.push_back(polish(t + shift, y0, a));
    }
    std::sort(roots.begin(), roots.end());
  }
  return roots;
}

double detuning_discriminant(double y0, double a) {
  const auto [p, q] = depress(y0, a);
  return -(4.0 * p * p * p + 27.0 * q * q);
}

std::optional<std::pair<double, double>> bistable_window(double a) {
  if (!(a > kCriticalNonlinearity)) return std::nullopt;
  // Fold points satisfy dy0/dy = 0 on y0(y) = y - a / (1 + 4 y^2), i.e.
  // (1 + 4 y^2)^2 + 8 a y = 0, with one root on each side of -1/sqrt(12).
  const auto fold = [a](double y) {
    const double s = 1.0 + 4.0 * y * y;
    return s * s + 8.0 * a * y;
  };
  const auto bisect = [&](double lo, double hi) {
    for (int iter = 0; iter < 200; ++iter) {
      const double mid = 0.5 * (lo + hi);
      if ((fold(mid) > 0.0) == (fold(lo) > 0.0)) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
  };
  const double pivot = -1.0 / std::sqrt(12.0);
  const double y_low = bisect(-(a + 1.0), pivot);
  const double y_high = bisect(pivot, 0.0);
  const auto to_applied = [a](double y) { return y - a / (1.0 + 4.0 * y * y); };
  const double e1 = to_applied(y_low);
  const double e2 = to_applied(y_high);
  return std::make_pair(std::min(e1, e2), std::max(e1, e2));
}

double branch_detuning(double y0, double a, SweepDirection direction) {
  const std::vector<double> roots = solve_detuning(y0, a);
  return direction == SweepDirection::up ? roots.front() : roots.back();
}

cplx s21_model(const ResonanceParams& params, const Baseline& baseline, double f, double drive,
               SweepDirection direction) {
  const double q_tot = params.q_tot();
  const double y0 = q_tot * (f - params.f0) / params.f0;
  const double y = branch_detuning(y0, params.a * drive, direction);
  const cplx i_unit(0.0, 1.0);
  const cplx resonance =
      1.0 - (q_tot / params.q_ext - 2.0 * i_unit * q_tot * params.x_a) / (1.0 + 2.0 * i_unit * y);
  return resonance * baseline(f);
}

std::vector<cplx> s21_model(const ResonanceParams& params, const Baseline& baseline,
                            std::span<const double> frequencies, double drive,
                            SweepDirection direction) {
  std::vector<cplx> out;
  out.reserve(frequencies.size());
  for (double f : frequencies) out.push_back(s21_model(params, baseline, f, drive, direction));
  return out;
}

double photon_number(const ResonanceParams& params, double p_in_watts, double f0_ghz) {
  if (!(p_in_watts >= 0.0)) throw ParameterDomainError("input power must be non-negative");
  if (!(f0_ghz > 0.0)) throw ParameterDomainError("resonance frequency must be positive");
  const double omega = units::angular(f0_ghz);
  const double q_tot = params.q_tot();
  return 2.0 * q_tot * q_tot * p_in_watts / (params.q_ext * units::kHbar * omega * omega);
}

double power_at_resonator(double output_dbm, double attenuation_db) {
  return units::dbm_to_watts(output_dbm - attenuation_db);
}

NormalizationFactors normalization_factors(const SweepTrace& trace) {
  trace.validate();
  const std::size_t n = trace.frequencies.size();
  if (n < 20) {
    throw PreprocessingError("trace too short to identify off-resonant wings (need 20 points)");
  }
  const std::size_t wing = std::max<std::size_t>(2, n / 10);
  std::vector<std::size_t> wing_idx;
  for (std::size_t k = 0; k < wing; ++k) {
    wing_idx.push_back(k);
    wing_idx.push_back(n - 1 - k);
  }
  std::vector<double> magnitudes;
  for (auto k : wing_idx) magnitudes.push_back(std::abs(trace.s21[k]));

  NormalizationFactors out;
  out.gain = median(magnitudes);
  if (!(out.gain > 0.0)) throw PreprocessingError("off-resonant transmission is zero");

  const std::vector<double> phase = unwrapped_phase(trace.s21);
  const double center = 0.5 * (trace.frequencies.front() + trace.frequencies.back());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (auto k : wing_idx) {
    const double x = trace.frequencies[k] - center;
    sx += x;
    sy += phase[k];
    sxx += x * x;
    sxy += x * phase[k];
  }
  const double m = static_cast<double>(wing_idx.size());
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  out.phase_slope = slope;
  out.phase_offset = (sy - slope * sx) / m - slope * center;
  return out;
}

SweepTrace normalize_trace(const SweepTrace& trace) {
  const NormalizationFactors factors = normalization_factors(trace);
  SweepTrace out = trace;
  for (std::size_t k = 0; k < out.s21.size(); ++k) {
    const double phase = factors.phase_offset + factors.phase_slope * out.frequencies[k];
    out.s21[k] = trace.s21[k] / (factors.gain * std::polar(1.0, phase));
  }
  return out;
}

}  // namespace fluxqp
