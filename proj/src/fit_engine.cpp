#include "fluxqp/fit_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include "fluxqp/errors.hpp"

namespace fluxqp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double median_of(std::vector<double> values) {
  if (values.empty()) return 0.0;
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower =
      *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

// ---- S21 helpers -----------------------------------------------------------

struct TraceFeature {
  double noise_rms = 0.0;  // complex RMS of the off-resonant noise
  double depth = 0.0;      // largest smoothed departure from the wing trend
};

// Rayleigh median for unit complex RMS: sqrt(ln 2).
constexpr double kRayleighMedian = 0.8325546111576977;

TraceFeature measure_feature(const std::vector<double>& f, const std::vector<cplx>& s) {
  const std::size_t n = f.size();
  const std::size_t wing = std::max<std::size_t>(2, n / 10);
  std::vector<std::size_t> wing_idx;
  for (std::size_t k = 0; k < wing; ++k) {
    wing_idx.push_back(k);
    wing_idx.push_back(n - 1 - k);
  }

  // Noise from adjacent differences in the wings; a difference of two
  // independent samples has sqrt(2) times the per-sample RMS.
  std::vector<double> diffs;
  for (std::size_t k = 0; k + 1 < wing; ++k) {
    diffs.push_back(std::abs(s[k + 1] - s[k]));
    diffs.push_back(std::abs(s[n - 1 - k] - s[n - 2 - k]));
  }
  TraceFeature out;
  out.noise_rms = median_of(diffs) / kRayleighMedian / std::numbers::sqrt2;

  // Complex quadratic trend through the wings.
  const double center = 0.5 * (f.front() + f.back());
  const double half = 0.5 * (f.back() - f.front());
  Eigen::MatrixXd design(static_cast<Eigen::Index>(wing_idx.size()), 3);
  Eigen::MatrixXd rhs(static_cast<Eigen::Index>(wing_idx.size()), 2);
  for (std::size_t r = 0; r < wing_idx.size(); ++r) {
    const double x = (f[wing_idx[r]] - center) / half;
    const auto row = static_cast<Eigen::Index>(r);
    design(row, 0) = 1.0;
    design(row, 1) = x;
    design(row, 2) = x * x;
    rhs(row, 0) = s[wing_idx[r]].real();
    rhs(row, 1) = s[wing_idx[r]].imag();
  }
  const Eigen::MatrixXd coeff = design.colPivHouseholderQr().solve(rhs);
  std::vector<cplx> dev(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double x = (f[k] - center) / half;
    const double re = coeff(0, 0) + x * (coeff(1, 0) + x * coeff(2, 0));
    const double im = coeff(0, 1) + x * (coeff(1, 1) + x * coeff(2, 1));
    dev[k] = s[k] - cplx(re, im);
  }
  const std::size_t span = 2;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t lo = k >= span ? k - span : 0;
    const std::size_t hi = std::min(n - 1, k + span);
    cplx sum = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) sum += dev[j];
    out.depth = std::max(out.depth, std::abs(sum) / static_cast<double>(hi - lo + 1));
  }
  return out;
}

struct S21Guess {
  double f_peak = 0.0;
  double q_tot = 0.0;
  double q_int = 0.0;
  double q_ext = 0.0;
  double x_a = 0.0;
};

S21Guess guess_resonance(const std::vector<double>& f, const std::vector<cplx>& s) {
  const std::size_t n = f.size();
  S21Guess g;
  // Resonance at the largest |dS21/df|.
  double best_speed = -1.0;
  std::size_t peak = n / 2;
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const double speed = std::abs(s[k + 1] - s[k - 1]) / (f[k + 1] - f[k - 1]);
    if (speed > best_speed) {
      best_speed = speed;
      peak = k;
    }
  }
  g.f_peak = f[peak];

  // Circle diameter from the farthest point from the off-resonant value 1.
  std::vector<double> distance(n);
  for (std::size_t k = 0; k < n; ++k) distance[k] = std::abs(1.0 - s[k]);
  const auto far_it = std::max_element(distance.begin(), distance.end());
  const std::size_t far = static_cast<std::size_t>(far_it - distance.begin());
  const double diameter = std::clamp(*far_it, 1e-6, 0.999);

  // Half-power width of |1 - S21|.
  const double level = diameter / std::numbers::sqrt2;
  std::size_t lo = far;
  while (lo > 0 && distance[lo - 1] >= level) --lo;
  std::size_t hi = far;
  while (hi + 1 < n && distance[hi + 1] >= level) ++hi;
  const auto crossing = [&](std::size_t inside, std::size_t outside) {
    const double d_in = distance[inside];
    const double d_out = distance[outside];
    const double t = d_in == d_out ? 0.5 : (d_in - level) / (d_in - d_out);
    return f[inside] + t * (f[outside] - f[inside]);
  };
  const double f_lo = lo > 0 ? crossing(lo, lo - 1) : f[lo];
  const double f_hi = hi + 1 < n ? crossing(hi, hi + 1) : f[hi];
  const double spacing = (f.back() - f.front()) / static_cast<double>(n - 1);
  const double width = std::max(f_hi - f_lo, spacing);

  g.q_tot = g.f_peak / width;
  // (Q_tot / Q_ext)(1 - 2i Q_ext x_a) = diameter * exp(i theta)
  const double theta = std::arg(1.0 - s[far]);
  const double ratio = diameter * std::cos(theta);
  g.q_ext = g.q_tot / std::clamp(ratio, 1e-6, 0.999);
  g.x_a = -std::tan(std::clamp(theta, -1.4, 1.4)) / (2.0 * g.q_ext);
  g.q_int = 1.0 / std::max(1.0 / g.q_tot - 1.0 / g.q_ext, 1e-10);
  return g;
}

// Parameter layout: f0, q_int, q_ext, x_a, [a], g0, g1, g2, p0, p1.
struct S21Layout {
  bool fit_a = false;
  Eigen::Index base() const { return fit_a ? 5 : 4; }
  Eigen::Index size() const { return base() + 5; }

  ResonanceParams params(const Eigen::VectorXd& p) const {
    return ResonanceParams{p[0], p[1], p[2], p[3], fit_a ? p[4] : 0.0};
  }
  Baseline baseline(const Eigen::VectorXd& p, double f_m) const {
    const Eigen::Index b = base();
    return Baseline{p[b], p[b + 1], p[b + 2], p[b + 3], p[b + 4], f_m};
  }
};

struct SegmentFit {
  FitResult result;
  ResonanceParams params;
  Baseline baseline;
};

SegmentFit fit_segment(const std::vector<double>& f, const std::vector<cplx>& s,
                       SweepDirection direction, const S21Guess& guess, bool fit_a, double f_m,
                       double span_f) {
  const S21Layout layout{fit_a};
  const auto m = static_cast<Eigen::Index>(f.size());
  const double x_span = span_f / f_m;
  FitProblem problem;
  problem.residual = [&, layout](const Eigen::VectorXd& p) {
    const ResonanceParams params = layout.params(p);
    const Baseline baseline = layout.baseline(p, f_m);
    Eigen::VectorXd r(2 * m);
    for (Eigen::Index k = 0; k < m; ++k) {
      const cplx diff = s21_model(params, baseline, f[static_cast<std::size_t>(k)], 1.0, direction) -
                        s[static_cast<std::size_t>(k)];
      r[k] = diff.real();
      r[m + k] = diff.imag();
    }
    return r;
  };
  const Eigen::Index size = layout.size();
  problem.lower = Eigen::VectorXd::Constant(size, -kInf);
  problem.upper = Eigen::VectorXd::Constant(size, kInf);
  problem.scale = Eigen::VectorXd::Ones(size);
  problem.initial_guess = Eigen::VectorXd::Zero(size);

  const std::vector<double> starts = fit_a ? std::vector<double>{0.0, 0.2, 0.4, 0.6}
                                           : std::vector<double>{0.0};
  problem.lower[0] = f.front() - span_f;
  problem.upper[0] = f.back() + span_f;
  problem.scale[0] = guess.f_peak / guess.q_tot;
  problem.lower[1] = 1.0;
  problem.upper[1] = 1e10;
  problem.scale[1] = guess.q_int;
  problem.lower[2] = 1.0;
  problem.upper[2] = 1e10;
  problem.scale[2] = guess.q_ext;
  problem.lower[3] = -1.0;
  problem.upper[3] = 1.0;
  problem.scale[3] = 1.0 / guess.q_tot;
  if (fit_a) {
    problem.lower[4] = 0.0;
    problem.upper[4] = 10.0;
    problem.scale[4] = 0.1;
  }
  const Eigen::Index b = layout.base();
  problem.lower[b] = 1e-6;
  problem.initial_guess[b] = 1.0;
  problem.scale[b + 1] = 1.0 / x_span;
  problem.scale[b + 2] = 1.0 / (x_span * x_span);
  problem.scale[b + 4] = 1.0 / x_span;

  std::optional<SegmentFit> best;
  for (double a0 : starts) {
    problem.initial_guess[0] =
        std::clamp(guess.f_peak / (1.0 - a0 / guess.q_tot), problem.lower[0], problem.upper[0]);
    problem.initial_guess[1] = std::clamp(guess.q_int, 1.0, 1e10);
    problem.initial_guess[2] = std::clamp(guess.q_ext, 1.0, 1e10);
    problem.initial_guess[3] = std::clamp(guess.x_a, -1.0, 1.0);
    if (fit_a) problem.initial_guess[4] = a0;
    FitResult result;
    try {
      result = least_squares(problem);
    } catch (const FitError&) {
      if (starts.size() == 1) throw;
      continue;
    }
    if (!best || result.residual_norm < best->result.residual_norm) {
      best = SegmentFit{result, layout.params(result.parameters),
                        layout.baseline(result.parameters, f_m)};
    }
  }
  if (!best) throw FitError("S21 fit failed from every starting point");
  return *best;
}

}  // namespace

std::optional<std::size_t> find_discontinuity(const std::vector<cplx>& s21, double ratio) {
  const std::size_t n = s21.size();
  if (n < 4) return std::nullopt;
  std::vector<double> d(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) d[k] = std::abs(s21[k + 1] - s21[k]);
  const double global = median_of(d);
  std::optional<std::size_t> found;
  const std::size_t reach = 5;
  for (std::size_t k = 0; k < d.size(); ++k) {
    std::vector<double> neighbours;
    for (std::size_t j = k >= reach ? k - reach : 0; j <= std::min(d.size() - 1, k + reach); ++j) {
      if (j != k) neighbours.push_back(d[j]);
    }
    const double local = median_of(neighbours);
    if (d[k] > ratio * local && d[k] > ratio * global && (!found || d[k] > d[*found])) {
      found = k;
    }
  }
  return found;
}

S21Fit fit_s21(const SweepTrace& trace, const S21FitOptions& options) {
  const NormalizationFactors factors = normalization_factors(trace);
  const SweepTrace norm = normalize_trace(trace);
  const std::size_t n = norm.frequencies.size();

  const TraceFeature feature = measure_feature(norm.frequencies, norm.s21);
  if (!(feature.depth > 3.0 * feature.noise_rms) || feature.depth < 1e-9) {
    throw FitError("no resonance feature detected (dip depth below 3x off-resonant noise)");
  }

  S21Fit out;
  out.first_sample = 0;
  out.last_sample = n;
  if (const auto jump = find_discontinuity(norm.s21, options.jump_ratio)) {
    if (!options.allow_nonlinear) {
      throw FitError("trace shows a discontinuity at sample " + std::to_string(*jump + 1) +
                     " (bifurcated response); enable nonlinear fitting to fit the continuous "
                     "segment or exclude the trace");
    }
    out.bifurcation_detected = true;
    if (norm.direction == SweepDirection::up) {
      out.last_sample = *jump + 1;
    } else {
      out.first_sample = *jump + 1;
    }
  }
  const auto first = static_cast<std::ptrdiff_t>(out.first_sample);
  const auto last = static_cast<std::ptrdiff_t>(out.last_sample);
  const std::vector<double> f(norm.frequencies.begin() + first, norm.frequencies.begin() + last);
  const std::vector<cplx> s(norm.s21.begin() + first, norm.s21.begin() + last);
  const std::size_t n_params = options.allow_nonlinear ? 10 : 9;
  if (f.size() < 2 * n_params) {
    throw FitError("continuous segment too short to fit (" + std::to_string(f.size()) +
                   " samples)");
  }

  const double f_m = 0.5 * (norm.frequencies.front() + norm.frequencies.back());
  const double span_f = norm.frequencies.back() - norm.frequencies.front();
  const S21Guess guess = guess_resonance(f, s);
  SegmentFit fit =
      fit_segment(f, s, norm.direction, guess, options.allow_nonlinear, f_m, span_f);

  out.params = fit.params;
  out.result = std::move(fit.result);
  if (out.bifurcation_detected) {
    out.result.diagnostics.push_back("bifurcation detected; fitted samples [" +
                                     std::to_string(out.first_sample) + ", " +
                                     std::to_string(out.last_sample) + ")");
  }
  // Express the baseline against the raw trace.
  Baseline raw = fit.baseline;
  raw.g0 *= factors.gain;
  raw.g1 *= factors.gain;
  raw.g2 *= factors.gain;
  raw.p0 += factors.phase_offset + factors.phase_slope * f_m;
  raw.p1 += factors.phase_slope * f_m;
  raw.p0 = std::remainder(raw.p0, 2.0 * std::numbers::pi);
  out.baseline = raw;
  return out;
}

// ---- Power sweeps -----------------------------------------------------------

PowerSweepFit fit_power_sweep(const PowerSweepFitInput& input) {
  PowerSweepFit out;
  out.a_limit = input.a_crit_fraction * kCriticalNonlinearity;
  std::vector<PowerSweepPoint> points;
  for (const auto& p : input.points) {
    if (!(p.mean_n >= 0.0)) throw ValidationError("photon number must be non-negative");
    if (!(p.q_int > 0.0)) throw ValidationError("Q_int must be positive");
    if (p.a <= out.a_limit) points.push_back(p);
  }
  std::sort(points.begin(), points.end(), [](const auto& l, const auto& r) {
    return std::tie(l.mean_n, l.q_int, l.a) < std::tie(r.mean_n, r.q_int, r.a);
  });
  std::vector<std::string> notes;
  const auto before = points.size();
  points.erase(std::unique(points.begin(), points.end(),
                           [](const auto& l, const auto& r) {
                             return l.mean_n == r.mean_n && l.q_int == r.q_int;
                           }),
               points.end());
  if (points.size() != before) {
    notes.push_back("removed " + std::to_string(before - points.size()) +
                    " duplicate photon-number points");
  }
  if (points.size() < 4) {
    throw FitError("too few points inside the fit window (a <= " + std::to_string(out.a_limit) +
                   "): " + std::to_string(points.size()) + ", need 4");
  }
  out.points_used = points.size();
  out.n_min_used = points.front().mean_n;
  out.n_max_used = points.back().mean_n;

  const auto m = static_cast<Eigen::Index>(points.size());
  Eigen::VectorXd n_vals(m), loss(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    n_vals[k] = points[static_cast<std::size_t>(k)].mean_n;
    loss[k] = 1.0 / points[static_cast<std::size_t>(k)].q_int;
  }

  // Profile over gamma: delta0 and beta enter linearly.
  double n_low = kInf;
  for (Eigen::Index k = 0; k < m; ++k) {
    if (n_vals[k] > 0.0) n_low = std::min(n_low, n_vals[k]);
  }
  if (!std::isfinite(n_low)) n_low = 1.0;
  const double n_high = std::max(out.n_max_used, n_low);
  const double g_lo = std::log(1e-3 / n_high);
  const double g_hi = std::log(1e3 / n_low);
  double best_cost = kInf;
  Eigen::Vector3d start(1.0 / loss.maxCoeff(), 0.0, 1.0 / n_high);
  const int grid = 241;
  for (int i = 0; i < grid; ++i) {
    const double gamma = std::exp(g_lo + (g_hi - g_lo) * i / (grid - 1));
    Eigen::MatrixXd design(m, 2);
    for (Eigen::Index k = 0; k < m; ++k) {
      design(k, 0) = 1.0 / loss[k];
      design(k, 1) = (recombination_factor(gamma * n_vals[k]) - 1.0) / loss[k];
    }
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(m);
    Eigen::Vector2d c = design.colPivHouseholderQr().solve(ones);
    if (!(c[1] >= 0.0)) {
      c[1] = 0.0;
      c[0] = design.col(0).dot(ones) / design.col(0).squaredNorm();
    }
    if (!(c[0] > 0.0)) continue;
    const double cost = (design * c - ones).squaredNorm();
    if (cost < best_cost) {
      best_cost = cost;
      start = Eigen::Vector3d(1.0 / c[0], c[1], gamma);
    }
  }

  FitProblem problem;
  problem.names = {"q0", "beta", "gamma"};
  problem.residual = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(m);
    for (Eigen::Index k = 0; k < m; ++k) {
      const double model = 1.0 / p[0] + p[1] * (recombination_factor(p[2] * n_vals[k]) - 1.0);
      r[k] = (model - loss[k]) / loss[k];
    }
    return r;
  };
  problem.initial_guess = start;
  problem.lower = Eigen::Vector3d(1e-300, 0.0, 0.0);
  problem.upper = Eigen::Vector3d::Constant(kInf);
  problem.scale = Eigen::Vector3d(start[0], std::max(start[1], 1e-3 / start[0]),
                                  std::max(start[2], 1.0 / n_high));
  out.result = least_squares(problem);
  for (auto& note : notes) out.result.diagnostics.insert(out.result.diagnostics.begin(), note);
  const Eigen::VectorXd& p = out.result.parameters;
  out.spec = PowerLossSpec{p[0], p[1], p[2]};

  const Eigen::VectorXd sigma = out.result.uncertainties();
  if (sigma.size() == 0 || !(p[2] > 0.0) || sigma[2] > 0.5 * p[2]) {
    out.gamma_poorly_constrained = true;
    std::ostringstream msg;
    msg << "gamma poorly constrained";
    if (sigma.size() > 0 && p[2] > 0.0) msg << " (relative uncertainty " << sigma[2] / p[2] << ")";
    msg << "; photon numbers " << out.n_min_used << " to " << out.n_max_used
        << " do not resolve the saturation knee";
    out.result.diagnostics.push_back(msg.str());
  }
  return out;
}

// ---- Two-tone spectra ---------------------------------------------------------

std::optional<double> assign_observation(const DressedSpectrum& dressed,
                                         const SpectrumObservation& obs, double min_weight,
                                         double window) {
  const auto states_of = [&](int bare) {
    std::vector<int> out;
    for (int k = 0; k < dressed.weights.rows(); ++k) {
      if (dressed.weights(k, bare) >= min_weight) out.push_back(k);
    }
    if (out.empty()) out.push_back(dressed.dressed_of(bare));
    return out;
  };
  std::vector<int> sources;
  std::vector<int> targets;
  if (obs.kind == ObservationKind::resonator) {
    if (obs.mode < 0 || obs.mode >= static_cast<int>(dressed.photon_truncation.size())) {
      throw ContractViolation("observation refers to a mode that is not modeled");
    }
    sources = states_of(dressed.bare_index(0));
    targets = states_of(dressed.bare_index(0, obs.mode, 1));
  } else {
    if (obs.from < 0 || obs.to < 0 || obs.from >= dressed.qubit_levels ||
        obs.to >= dressed.qubit_levels) {
      throw TruncationError("observed transition lies outside the retained qubit levels");
    }
    sources = states_of(dressed.bare_index(obs.from));
    targets = states_of(dressed.bare_index(obs.to));
  }
  std::optional<double> best;
  for (int a : sources) {
    for (int b : targets) {
      if (a == b) continue;
      const double freq = std::abs(dressed.energies[b] - dressed.energies[a]);
      if (std::abs(freq - obs.frequency) <= window &&
          (!best || std::abs(freq - obs.frequency) < std::abs(*best - obs.frequency))) {
        best = freq;
      }
    }
  }
  return best;
}

SpectrumFit fit_spectrum(const std::vector<SpectrumObservation>& observations,
                         const CoupledSystemSpec& initial, const SpectrumFitOptions& options) {
  initial.validate();
  const std::size_t n_modes = initial.modes.size();
  std::vector<std::size_t> charge_modes;
  for (std::size_t m = 0; m < n_modes; ++m) {
    if (std::holds_alternative<ChargeCoupling>(initial.couplings[m])) charge_modes.push_back(m);
  }
  const auto n_params = static_cast<Eigen::Index>(3 + n_modes + charge_modes.size());
  if (static_cast<Eigen::Index>(observations.size()) < n_params) {
    throw FitError("spectrum fit needs at least as many observations as free parameters (" +
                   std::to_string(n_params) + ")");
  }
  for (const auto& obs : observations) {
    if (!(obs.sigma > 0.0)) throw ValidationError("observation uncertainty must be positive");
  }

  const auto to_spec = [&](const Eigen::VectorXd& p) {
    CoupledSystemSpec spec = initial;
    spec.qubit.e_c = p[0];
    spec.qubit.e_j = p[1];
    spec.qubit.e_l = p[2];
    for (std::size_t m = 0; m < n_modes; ++m) {
      spec.modes[m].bare_frequency = p[3 + static_cast<Eigen::Index>(m)];
    }
    for (std::size_t c = 0; c < charge_modes.size(); ++c) {
      spec.couplings[charge_modes[c]] =
          ChargeCoupling{p[3 + static_cast<Eigen::Index>(n_modes + c)]};
    }
    return spec;
  };

  std::map<double, std::vector<std::size_t>> by_flux;
  for (std::size_t i = 0; i < observations.size(); ++i) by_flux[observations[i].flux].push_back(i);

  // Model frequencies per observation; NaN marks an unassignable point.
  const auto model = [&](const Eigen::VectorXd& p) {
    const CoupledSystemSpec base = to_spec(p);
    Eigen::VectorXd freq = Eigen::VectorXd::Constant(
        static_cast<Eigen::Index>(observations.size()), std::numeric_limits<double>::quiet_NaN());
    for (const auto& [flux, indices] : by_flux) {
      CoupledSystemSpec spec = base;
      spec.qubit.phi_ext = flux;
      const DressedSpectrum dressed = solve_coupled(spec, options.qubit_levels);
      for (std::size_t i : indices) {
        if (auto value = assign_observation(dressed, observations[i], options.candidate_weight,
                                            options.assignment_window)) {
          freq[static_cast<Eigen::Index>(i)] = *value;
        }
      }
    }
    return freq;
  };

  // Points without a branch at the starting parameters are dropped for the
  // whole fit. A retained point that loses its branch during the iteration is
  // charged the residual it would have at the window edge, so the optimizer
  // cannot lower the cost by pushing points out of the window.
  std::vector<bool> dropped(observations.size(), false);
  FitProblem problem;
  problem.residual = [&](const Eigen::VectorXd& p) {
    const Eigen::VectorXd freq = model(p);
    Eigen::VectorXd r(freq.size());
    for (Eigen::Index i = 0; i < freq.size(); ++i) {
      const auto& obs = observations[static_cast<std::size_t>(i)];
      if (dropped[static_cast<std::size_t>(i)]) {
        r[i] = 0.0;
      } else if (std::isnan(freq[i])) {
        r[i] = options.assignment_window / obs.sigma;
      } else {
        r[i] = (freq[i] - obs.frequency) / obs.sigma;
      }
    }
    return r;
  };
  problem.initial_guess.resize(n_params);
  problem.lower.resize(n_params);
  problem.upper = Eigen::VectorXd::Constant(n_params, kInf);
  problem.scale.resize(n_params);
  problem.names = {"e_c", "e_j", "e_l"};
  problem.initial_guess.head(3) << initial.qubit.e_c, initial.qubit.e_j, initial.qubit.e_l;
  problem.lower.head(3) << 1e-3, 0.0, 1e-3;
  for (Eigen::Index k = 0; k < 3; ++k) {
    problem.scale[k] = std::max(problem.initial_guess[k], 0.1);
  }
  for (std::size_t m = 0; m < n_modes; ++m) {
    const auto k = 3 + static_cast<Eigen::Index>(m);
    problem.initial_guess[k] = initial.modes[m].bare_frequency;
    problem.lower[k] = 1e-3;
    problem.scale[k] = 0.1;
    problem.names.push_back("f_res_" + std::to_string(m));
  }
  for (std::size_t c = 0; c < charge_modes.size(); ++c) {
    const auto k = 3 + static_cast<Eigen::Index>(n_modes + c);
    const double g = std::abs(std::get<ChargeCoupling>(initial.couplings[charge_modes[c]]).g);
    problem.initial_guess[k] = g;
    problem.lower[k] = 0.0;
    problem.scale[k] = std::max(g, 0.01);
    problem.names.push_back("g_" + std::to_string(charge_modes[c]));
  }

  const Eigen::VectorXd start_freq = model(problem.initial_guess);
  std::size_t retained = 0;
  for (Eigen::Index i = 0; i < start_freq.size(); ++i) {
    dropped[static_cast<std::size_t>(i)] = std::isnan(start_freq[i]);
    if (!dropped[static_cast<std::size_t>(i)]) ++retained;
  }
  if (static_cast<Eigen::Index>(retained) < n_params) {
    throw FitError("too few observations can be assigned to model branches at the initial guess (" +
                   std::to_string(retained) + " of " + std::to_string(observations.size()) + ")");
  }

  SpectrumFit out;
  out.result = least_squares(problem, options.solver);
  out.spec = to_spec(out.result.parameters);
  out.model_frequencies = model(out.result.parameters);
  for (Eigen::Index i = 0; i < out.model_frequencies.size(); ++i) {
    if (std::isnan(out.model_frequencies[i])) {
      out.excluded.push_back(static_cast<std::size_t>(i));
      const auto& obs = observations[static_cast<std::size_t>(i)];
      std::ostringstream msg;
      msg << "observation " << i << " at flux " << obs.flux << ", " << obs.frequency
          << " GHz has no model branch within " << options.assignment_window
          << " GHz; excluded";
      out.result.diagnostics.push_back(msg.str());
    }
  }
  return out;
}

// ---- Quasiparticle density ----------------------------------------------------

XqpFit fit_xqp_frequency(const std::vector<XqpPoint>& points, double alpha, double delta) {
  if (points.size() < 3) throw FitError(">=3 points required for the x_qp fit");
  if (!(alpha > 0.0) || alpha > 1.0) {
    throw ParameterDomainError("kinetic-inductance fraction must lie in (0, 1]");
  }
  const auto m = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd design(m, 2);
  Eigen::VectorXd rhs = Eigen::VectorXd::Ones(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const auto& p = points[static_cast<std::size_t>(k)];
    if (!(p.q_int > 0.0)) throw ValidationError("Q_int must be positive");
    const double loss = 1.0 / p.q_int;
    design(k, 0) = 1.0 / loss;
    design(k, 1) = alpha / std::numbers::pi * gap_ratio_factor(delta, p.f0) / loss;
  }
  const Eigen::Vector2d c = design.colPivHouseholderQr().solve(rhs);
  const Eigen::VectorXd residual = design * c - rhs;

  XqpFit out;
  out.x_qp = c[1];
  out.q0 = 1.0 / c[0];
  out.result.parameters = Eigen::Vector2d(out.x_qp, out.q0);
  out.result.residual_norm = residual.norm();
  out.result.converged = true;
  out.result.evaluations = 1;

  const Eigen::Matrix2d normal = design.transpose() * design;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(normal);
  if (eig.eigenvalues().minCoeff() > 1e-14 * eig.eigenvalues().maxCoeff()) {
    const double variance = m > 2 ? residual.squaredNorm() / static_cast<double>(m - 2) : 0.0;
    const Eigen::Matrix2d cov = variance * normal.inverse();
    // (delta0, x_qp) -> (x_qp, q0 = 1 / delta0)
    Eigen::Matrix2d jac;
    jac << 0.0, 1.0, -1.0 / (c[0] * c[0]), 0.0;
    out.result.covariance = jac * cov * jac.transpose();
    out.x_qp_sigma = std::sqrt(out.result.covariance(0, 0));
    out.q0_sigma = std::sqrt(out.result.covariance(1, 1));
  } else {
    out.result.diagnostics.push_back("design matrix singular; uncertainties unavailable");
  }
  if (out.x_qp < 0.0) {
    out.result.diagnostics.push_back("fitted x_qp is negative (unphysical); reported unclamped");
  }
  if (!(c[0] > 0.0)) {
    out.result.diagnostics.push_back("fitted residual loss 1/Q0 is not positive");
  }
  return out;
}

}  // namespace fluxqp
