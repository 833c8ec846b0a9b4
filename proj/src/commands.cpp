#include "fluxqp/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iostream>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <thread>

#include "CLI11.hpp"

#include "fluxqp/errors.hpp"
#include "fluxqp/units.hpp"

namespace fluxqp::io {

namespace {

json num(double value) { return std::isfinite(value) ? json(value) : json(nullptr); }

void log(const RunOptions& options, const std::string& message) {
  if (options.verbose) std::cerr << message << "\n";
}

std::optional<std::uint64_t> effective_seed(const RunConfig& cfg, const RunOptions& options) {
  return options.seed ? options.seed : cfg.seed;
}

Report make_report(const std::string& command, const RunConfig& cfg, const RunOptions& options,
                   const std::vector<fs::path>& inputs) {
  Report report;
  report.provenance.command = command;
  report.provenance.seed = effective_seed(cfg, options);
  report.provenance.config = cfg.echo;
  std::vector<fs::path> all{cfg.source};
  all.insert(all.end(), inputs.begin(), inputs.end());
  for (const auto& path : all) {
    if (path.empty() || !fs::exists(path)) continue;
    report.provenance.inputs.push_back({path.lexically_normal().string(), sha256_file(path)});
  }
  return report;
}

std::string transition_column(const LevelPair& pair) {
  return "f" + std::to_string(pair.first) + std::to_string(pair.second) + "_ghz";
}

// Writes a text table whose first columns may be strings.
void write_mixed_csv(const fs::path& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<std::string>>& rows) {
  std::string text;
  for (std::size_t c = 0; c < header.size(); ++c) text += (c ? "," : "") + header[c];
  text += "\n";
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) text += (c ? "," : "") + row[c];
    text += "\n";
  }
  write_text(path, text);
}

std::mt19937_64 item_rng(std::uint64_t seed, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

json resonance_json(const ResonanceParams& p) {
  return json{{"f0_ghz", p.f0},     {"q_int", p.q_int}, {"q_ext", p.q_ext},
              {"x_a", p.x_a},       {"delta_f_ghz", p.delta_f()}, {"a", p.a}};
}

json baseline_json(const Baseline& b) {
  return json{{"g0", b.g0}, {"g1", b.g1}, {"g2", b.g2}, {"p0", b.p0}, {"p1", b.p1}, {"f_m_ghz", b.f_m}};
}

}  // namespace

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(jobs, 1), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex guard;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(guard);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

// ---- simulate-spectrum ----------------------------------------------------------

int cmd_simulate_spectrum(const RunConfig& cfg, const RunOptions& options) {
  cfg.require(cfg.circuit.has_value(), "circuit");
  cfg.require(cfg.flux.has_value(), "flux");
  const int levels = cfg.circuit->levels;
  const std::vector<LevelPair> labels =
      cfg.transitions.empty() ? default_transition_labels(levels) : cfg.transitions;
  const std::vector<double>& flux = *cfg.flux;
  const std::size_t n_modes = cfg.resonators.size();

  std::vector<std::vector<double>> rows(flux.size());
  const CoupledSystemSpec coupled = n_modes > 0 ? cfg.coupled_system() : CoupledSystemSpec{};
  parallel_for(flux.size(), options.jobs, [&](std::size_t p) {
    std::vector<double> row{flux[p]};
    if (n_modes > 0) {
      const FluxSpectrum s = coupled_spectrum(coupled, levels, {flux[p]}, labels);
      for (Eigen::Index c = 0; c < s.transitions.cols(); ++c) row.push_back(s.transitions(0, c));
      for (Eigen::Index m = 0; m < s.dressed_mode_freq.cols(); ++m) {
        row.push_back(s.dressed_mode_freq(0, m));
      }
    } else {
      CircuitSpec spec = cfg.circuit->spec;
      spec.phi_ext = flux[p];
      const EigenSolution sol = fluxonium_spectrum(spec, levels);
      for (const auto& [i, j] : labels) row.push_back(std::abs(sol.transition(i, j)));
    }
    rows[p] = std::move(row);
  });

  CsvTable table;
  table.columns.push_back("flux");
  for (const auto& pair : labels) table.columns.push_back(transition_column(pair));
  for (std::size_t m = 0; m < n_modes; ++m) {
    table.columns.push_back("resonator" + std::to_string(m) + "_ghz");
  }
  table.rows = rows;
  table.write(options.out / "spectrum.csv");

  Report report = make_report("simulate-spectrum", cfg, options, {});
  report.results = json{{"columns", table.columns}, {"rows", rows}, {"levels", levels},
                        {"coupled", n_modes > 0}, {"plot_data", "spectrum.csv"}};
  write_report(options.out / "report.json", report);
  log(options, "wrote " + std::to_string(rows.size()) + " flux points");
  return exit_ok;
}

// ---- fit-s21 --------------------------------------------------------------------------

int cmd_fit_s21(const RunConfig& cfg, const RunOptions& options) {
  cfg.require(cfg.fit_s21.has_value(), "fit_s21");
  const FitS21Block& block = *cfg.fit_s21;
  const std::size_t count = block.traces.size();

  struct Outcome {
    std::optional<S21Fit> fit;
    std::optional<double> mean_n;
    std::string error;
    int code = exit_ok;
  };
  std::vector<Outcome> outcomes(count);
  parallel_for(count, options.jobs, [&](std::size_t i) {
    Outcome& o = outcomes[i];
    try {
      const SweepTrace trace = load_trace(block.traces[i]);
      S21FitOptions fit_options;
      fit_options.allow_nonlinear = block.allow_nonlinear;
      fit_options.jump_ratio = block.jump_ratio;
      o.fit = fit_s21(trace, fit_options);
      if (trace.drive_power_dbm) {
        const double f0 = o.fit->params.f0;
        const double att = trace.attenuation.empty() ? 0.0 : trace.attenuation.at(f0);
        o.mean_n = photon_number(o.fit->params, power_at_resonator(*trace.drive_power_dbm, att), f0);
      }
    } catch (const std::exception& e) {
      o.error = e.what();
      o.code = exit_code_for(e);
      o.fit.reset();
    }
  });

  std::vector<fs::path> inputs;
  for (const auto& path : block.traces) {
    inputs.push_back(path);
    inputs.push_back(sidecar_path(path));
  }
  Report report = make_report("fit-s21", cfg, options, inputs);
  json fits = json::array();
  json failures = json::array();
  int exit_code = exit_ok;
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < count; ++i) {
    if (outcomes[i].fit) {
      order.push_back(i);
    } else {
      failures.push_back({{"file", block.traces[i].string()}, {"error", outcomes[i].error},
                          {"exit_code", outcomes[i].code}});
      if (exit_code == exit_ok) exit_code = outcomes[i].code;
      std::cerr << "error: " << outcomes[i].error << "\n";
    }
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
    return outcomes[l].fit->params.f0 < outcomes[r].fit->params.f0;
  });
  CsvTable table;
  table.columns = {"input_index", "f0_ghz",   "f0_sigma_ghz", "q_int", "q_int_sigma", "q_ext",
                   "q_ext_sigma", "delta_f_ghz", "a",        "mean_n", "converged"};
  bool any_n = false;
  for (std::size_t i : order) {
    const S21Fit& fit = *outcomes[i].fit;
    const Eigen::VectorXd sigma = fit.result.uncertainties();
    const auto sig = [&](Eigen::Index k, double scale) {
      return sigma.size() > k ? sigma[k] * scale : std::numeric_limits<double>::quiet_NaN();
    };
    const double mean_n = outcomes[i].mean_n.value_or(std::numeric_limits<double>::quiet_NaN());
    any_n = any_n || outcomes[i].mean_n.has_value();
    json row = resonance_json(fit.params);
    row["file"] = block.traces[i].string();
    row["f0_sigma_ghz"] = num(sig(0, 1.0));
    row["q_int_sigma"] = num(sig(1, 1.0));
    row["q_ext_sigma"] = num(sig(2, 1.0));
    row["delta_f_sigma_ghz"] = num(sig(3, fit.params.f0));
    row["a_sigma"] = block.allow_nonlinear ? num(sig(4, 1.0)) : json(nullptr);
    row["mean_n"] = num(mean_n);
    row["baseline"] = baseline_json(fit.baseline);
    row["bifurcation_detected"] = fit.bifurcation_detected;
    row["fitted_samples"] = {fit.first_sample, fit.last_sample};
    row["residual_norm"] = fit.result.residual_norm;
    row["converged"] = fit.result.converged;
    row["iterations"] = fit.result.iterations;
    row["diagnostics"] = fit.result.diagnostics;
    fits.push_back(row);
    table.rows.push_back({static_cast<double>(i), fit.params.f0, sig(0, 1.0), fit.params.q_int,
                          sig(1, 1.0), fit.params.q_ext, sig(2, 1.0), fit.params.delta_f(),
                          fit.params.a, mean_n, fit.result.converged ? 1.0 : 0.0});
  }
  if (any_n) {
    report.diagnostics.push_back(
        "mean photon numbers use room-temperature attenuation and are lower estimates");
  }
  report.results = json{{"fits", fits}, {"failures", failures}, {"plot_data", "fit_s21.csv"}};
  table.write(options.out / "fit_s21.csv");
  write_report(options.out / "report.json", report);
  log(options, std::to_string(order.size()) + " of " + std::to_string(count) + " traces fitted");
  return exit_code;
}

// ---- fit-power-sweep -------------------------------------------------------------

int cmd_fit_power_sweep(const RunConfig& cfg, const RunOptions& options) {
  cfg.require(cfg.fit_power_sweep.has_value(), "fit_power_sweep");
  const PowerSweepBlock& block = *cfg.fit_power_sweep;
  const std::size_t count = block.sweeps.size();

  struct Outcome {
    std::vector<PowerSweepPoint> points;
    std::optional<PowerSweepFit> fit;
    std::string error;
    int code = exit_ok;
  };
  std::vector<Outcome> outcomes(count);
  parallel_for(count, options.jobs, [&](std::size_t i) {
    Outcome& o = outcomes[i];
    try {
      o.points = read_power_sweep_csv(block.sweeps[i].file);
      if (o.points.empty()) {
        throw ValidationError(block.sweeps[i].file.string() + ": power sweep has no points");
      }
      PowerSweepFitInput input{o.points, block.a_crit_fraction};
      o.fit = fit_power_sweep(input);
    } catch (const std::exception& e) {
      o.error = e.what();
      o.code = exit_code_for(e);
    }
  });

  std::vector<fs::path> inputs;
  for (const auto& s : block.sweeps) inputs.push_back(s.file);
  Report report = make_report("fit-power-sweep", cfg, options, inputs);
  json fits = json::array();
  json failures = json::array();
  int exit_code = exit_ok;
  CsvTable table;
  table.columns = {"sweep_index", "f0_ghz",     "beta_1e-6", "gamma_1e-3", "delta0_1e-5",
                   "q0",          "beta_sigma_1e-6", "gamma_sigma_1e-3", "q0_sigma",
                   "a_limit",     "n_min",      "n_max"};
  CsvTable scaling;
  scaling.columns = {"sweep_index", "mean_n", "gamma_n", "scaled_loss_measured",
                     "scaled_loss_model"};
  for (std::size_t i = 0; i < count; ++i) {
    const Outcome& o = outcomes[i];
    const PowerSweepSource& src = block.sweeps[i];
    if (!o.fit) {
      failures.push_back({{"label", src.label}, {"file", src.file.string()}, {"error", o.error},
                          {"exit_code", o.code}});
      if (exit_code == exit_ok) exit_code = o.code;
      std::cerr << "error: " << o.error << "\n";
      continue;
    }
    const PowerSweepFit& fit = *o.fit;
    const Eigen::VectorXd sigma = fit.result.uncertainties();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double f0 = src.f0.value_or(nan);
    fits.push_back({{"label", src.label},
                    {"f0_ghz", num(f0)},
                    {"q0", fit.spec.q0},
                    {"beta", fit.spec.beta},
                    {"gamma", fit.spec.gamma},
                    {"delta0", fit.spec.delta0()},
                    {"q0_sigma", sigma.size() ? num(sigma[0]) : json(nullptr)},
                    {"beta_sigma", sigma.size() ? num(sigma[1]) : json(nullptr)},
                    {"gamma_sigma", sigma.size() ? num(sigma[2]) : json(nullptr)},
                    {"a_crit_window", {{"a_limit", fit.a_limit},
                                       {"a_crit_fraction", block.a_crit_fraction}}},
                    {"points_used", fit.points_used},
                    {"n_min_used", fit.n_min_used},
                    {"n_max_used", fit.n_max_used},
                    {"gamma_poorly_constrained", fit.gamma_poorly_constrained},
                    {"converged", fit.result.converged},
                    {"residual_norm", fit.result.residual_norm},
                    {"diagnostics", fit.result.diagnostics}});
    table.rows.push_back({static_cast<double>(i), f0, fit.spec.beta * 1e6, fit.spec.gamma * 1e3,
                          fit.spec.delta0() * 1e5, fit.spec.q0,
                          sigma.size() ? sigma[1] * 1e6 : nan, sigma.size() ? sigma[2] * 1e3 : nan,
                          sigma.size() ? sigma[0] : nan, fit.a_limit, fit.n_min_used,
                          fit.n_max_used});
    if (fit.spec.beta > 0.0) {
      const double floor = fit.spec.delta0() - fit.spec.beta;
      for (const auto& p : o.points) {
        if (p.a > fit.a_limit) continue;
        const double model = 1.0 / q_int_power(fit.spec, p.mean_n);
        scaling.rows.push_back({static_cast<double>(i), p.mean_n, fit.spec.gamma * p.mean_n,
                                (1.0 / p.q_int - floor) / fit.spec.beta,
                                (model - floor) / fit.spec.beta});
      }
    }
  }
  report.results = json{{"fits", fits},
                        {"failures", failures},
                        {"plot_data", {"power_sweep_table.csv", "loss_tangent_scaling.csv"}}};
  table.write(options.out / "power_sweep_table.csv");
  scaling.write(options.out / "loss_tangent_scaling.csv");
  write_report(options.out / "report.json", report);
  return exit_code;
}

// ---- fit-spectrum -------------------------------------------------------------------

int cmd_fit_spectrum(const RunConfig& cfg, const RunOptions& options) {
  cfg.require(cfg.circuit.has_value(), "circuit");
  cfg.require(!cfg.resonators.empty(), "resonators");
  cfg.require(cfg.fit_spectrum.has_value(), "fit_spectrum");
  const SpectrumFitBlock& block = *cfg.fit_spectrum;
  const std::vector<SpectrumObservation> obs = read_observations_csv(block.observations);
  if (obs.empty()) throw ValidationError(block.observations.string() + ": no observations");

  SpectrumFitOptions fit_options;
  fit_options.qubit_levels = block.qubit_levels;
  fit_options.assignment_window = block.assignment_window;
  fit_options.candidate_weight = block.candidate_weight;
  const SpectrumFit fit = fit_spectrum(obs, cfg.coupled_system(), fit_options);

  Report report = make_report("fit-spectrum", cfg, options, {block.observations});
  const Eigen::VectorXd sigma = fit.result.uncertainties();
  const auto sig = [&](Eigen::Index k) { return sigma.size() > k ? num(sigma[k]) : json(nullptr); };
  json params{{"e_c", fit.spec.qubit.e_c}, {"e_j", fit.spec.qubit.e_j}, {"e_l", fit.spec.qubit.e_l},
              {"e_c_sigma", sig(0)},       {"e_j_sigma", sig(1)},       {"e_l_sigma", sig(2)}};
  json modes = json::array();
  const auto n_modes = static_cast<Eigen::Index>(fit.spec.modes.size());
  for (Eigen::Index m = 0; m < n_modes; ++m) {
    const auto& coupling = std::get<ChargeCoupling>(fit.spec.couplings[static_cast<std::size_t>(m)]);
    modes.push_back({{"frequency_ghz", fit.spec.modes[static_cast<std::size_t>(m)].bare_frequency},
                     {"frequency_sigma_ghz", sig(3 + m)},
                     {"g_ghz", coupling.g},
                     {"g_sigma_ghz", sig(3 + n_modes + m)}});
  }
  std::vector<std::vector<std::string>> rows;
  json residuals = json::array();
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const double model = fit.model_frequencies[static_cast<Eigen::Index>(i)];
    const double resid = model - obs[i].frequency;
    residuals.push_back({{"flux", obs[i].flux}, {"label", observation_label(obs[i])},
                         {"observed_ghz", obs[i].frequency}, {"model_ghz", num(model)},
                         {"residual_ghz", num(resid)}});
    rows.push_back({format_number(obs[i].flux), observation_label(obs[i]),
                    format_number(obs[i].frequency), format_number(model), format_number(resid)});
  }
  report.results = json{{"parameters", params},
                        {"modes", modes},
                        {"residuals", residuals},
                        {"excluded", fit.excluded},
                        {"converged", fit.result.converged},
                        {"iterations", fit.result.iterations},
                        {"residual_norm", fit.result.residual_norm},
                        {"plot_data", "spectrum_fit.csv"}};
  report.diagnostics = fit.result.diagnostics;
  write_mixed_csv(options.out / "spectrum_fit.csv",
                  {"flux", "label", "observed_ghz", "model_ghz", "residual_ghz"}, rows);
  write_report(options.out / "report.json", report);
  return fit.result.converged ? exit_ok : exit_fit;
}

// ---- predict-t1 ------------------------------------------------------------------------

int cmd_predict_t1(const RunConfig& cfg, const RunOptions& options) {
  cfg.require(cfg.circuit.has_value(), "circuit");
  cfg.require(cfg.loss.has_value(), "loss");
  cfg.require(cfg.flux.has_value(), "flux");
  const std::vector<double>& flux = *cfg.flux;
  const LossBlock& loss = *cfg.loss;
  const int levels = std::max(cfg.circuit->levels, 2);

  struct Point {
    double f01 = 0.0;
    LossBudget budget;
  };
  std::vector<Point> points(flux.size());
  parallel_for(flux.size(), options.jobs, [&](std::size_t p) {
    CircuitSpec spec = cfg.circuit->spec;
    spec.phi_ext = flux[p];
    const FluxoniumSolution s = solve_fluxonium(spec, levels);
    const double f01 = s.sol.transition(0, 1);
    points[p] = Point{f01, t1_budget(loss.channels, s.sol, {s.ops.phi, s.ops.sin_half_phi}, f01)};
  });

  CsvTable table;
  table.columns = {"flux", "f01_ghz"};
  for (const auto& c : loss.channels) table.columns.push_back("t1_us_" + c.name);
  table.columns.push_back("t1_us_total");
  std::map<std::string, int> warnings;
  json rows = json::array();
  for (std::size_t p = 0; p < flux.size(); ++p) {
    const Point& pt = points[p];
    std::vector<double> row{flux[p], pt.f01};
    json channels = json::object();
    for (const auto& c : pt.budget.channels) {
      const double t1 = c.rate > 0.0 ? 1.0 / c.rate : std::numeric_limits<double>::infinity();
      row.push_back(t1);
      channels[c.name] = {{"rate_per_us", c.rate}, {"t1_us", num(t1)}};
    }
    row.push_back(pt.budget.total_t1);
    table.rows.push_back(row);
    rows.push_back({{"flux", flux[p]}, {"f01_ghz", pt.f01}, {"channels", channels},
                    {"t1_total_us", num(pt.budget.total_t1)}});
    for (const auto& c : loss.channels) {
      const QuasiparticleSpec* qp = nullptr;
      if (const auto* i = std::get_if<InductiveQpChannel>(&c.model)) qp = &i->qp;
      if (const auto* j = std::get_if<JunctionQpChannel>(&c.model)) qp = &j->qp;
      if (!qp) continue;
      for (const auto& w : regime_warnings(pt.f01, *qp, loss.temperature)) {
        const bool thermal = w.find("thermal") != std::string::npos;
        ++warnings[c.name + (thermal ? ": thermal correction coth(hf/2kT) - 1 above 1%"
                                     : ": h f01 above Delta/5, small-frequency limit marginal")];
      }
    }
  }
  Report report = make_report("predict-t1", cfg, options, {});
  report.results = json{{"points", rows}, {"columns", table.columns}, {"plot_data", "t1.csv"}};
  for (const auto& [text, hits] : warnings) {
    report.diagnostics.push_back(text + " (" + std::to_string(hits) + " of " +
                                 std::to_string(flux.size()) + " flux points)");
  }
  table.write(options.out / "t1.csv");
  write_report(options.out / "report.json", report);
  return exit_ok;
}

// ---- synthesize -----------------------------------------------------------------------

namespace {

struct SynthItem {
  enum Kind { trace, random_trace, power_sweep, spectrum } kind;
  std::size_t index;  // within its list
};

std::vector<cplx> unit_noise(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<cplx> out(n);
  for (auto& v : out) {
    const double re = normal(rng);
    const double im = normal(rng);
    v = cplx(re, im) / std::numbers::sqrt2;
  }
  return out;
}

struct WrittenFile {
  std::string path;
  std::string sha256;
};

std::vector<WrittenFile> write_synthetic_trace(const TraceSpec& spec, const fs::path& out,
                                               std::mt19937_64& rng, std::uint64_t seed,
                                               std::size_t item) {
  spec.params.validate();
  const double q_tot = spec.params.q_tot();
  const double span = spec.span_linewidths * spec.params.f0 / q_tot;
  const auto n = static_cast<std::size_t>(spec.points);
  std::vector<double> freqs(n);
  for (std::size_t k = 0; k < n; ++k) {
    freqs[k] = spec.params.f0 + span * (static_cast<double>(k) / static_cast<double>(n - 1) - 0.5);
  }
  const std::vector<cplx> noise = unit_noise(n, rng);
  const double level = spec.snr_db ? std::pow(10.0, -*spec.snr_db / 20.0) : 0.0;

  std::vector<SweepDirection> directions;
  if (spec.direction != "down") directions.push_back(SweepDirection::up);
  if (spec.direction != "up") directions.push_back(SweepDirection::down);

  json truth = resonance_json(spec.params);
  truth["baseline"] = baseline_json(spec.baseline);
  truth["snr_db"] = spec.snr_db ? json(*spec.snr_db) : json(nullptr);
  truth["seed"] = seed;
  truth["item_index"] = item;
  if (const auto window = bistable_window(spec.params.a)) {
    truth["bistable_window_ghz"] = {spec.params.f0 * (1.0 + window->first / q_tot),
                                    spec.params.f0 * (1.0 + window->second / q_tot)};
  }

  std::vector<WrittenFile> written;
  for (SweepDirection d : directions) {
    SweepTrace trace;
    trace.frequencies = freqs;
    trace.direction = d;
    trace.s21.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      const cplx clean = s21_model(spec.params, spec.baseline, freqs[k], 1.0, d);
      trace.s21[k] = clean + level * std::abs(spec.baseline(freqs[k])) * noise[k];
    }
    std::string name = spec.name;
    if (directions.size() > 1) name += d == SweepDirection::up ? "_up" : "_down";
    const fs::path path = out / (name + ".csv");
    write_trace_csv(path, trace, spec.format);
    TraceMetadata meta;
    meta.drive_power_dbm = spec.drive_power_dbm;
    meta.attenuation = spec.attenuation;
    meta.direction = d;
    meta.ground_truth = truth;
    write_sidecar(path, meta);
    written.push_back({path.string(), sha256_file(path)});
    written.push_back({sidecar_path(path).string(), sha256_file(sidecar_path(path))});
  }
  return written;
}

double draw_log_uniform(std::mt19937_64& rng, std::pair<double, double> range) {
  std::uniform_real_distribution<double> u(std::log(range.first), std::log(range.second));
  return range.first == range.second ? range.first : std::exp(u(rng));
}

double draw_uniform(std::mt19937_64& rng, std::pair<double, double> range) {
  std::uniform_real_distribution<double> u(range.first, range.second);
  return range.first == range.second ? range.first : u(rng);
}

}  // namespace

int cmd_synthesize(const RunConfig& cfg, const RunOptions& options) {
  cfg.require(cfg.synthesize.has_value(), "synthesize");
  const auto seed = effective_seed(cfg, options);
  if (!seed) {
    throw ValidationError(cfg.source.string() + ": synthesize needs a seed (config 'seed' or --seed)");
  }
  const SynthesizeBlock& block = *cfg.synthesize;
  std::vector<SynthItem> items;
  for (std::size_t i = 0; i < block.traces.size(); ++i) items.push_back({SynthItem::trace, i});
  if (block.random_traces) {
    for (int i = 0; i < block.random_traces->count; ++i) {
      items.push_back({SynthItem::random_trace, static_cast<std::size_t>(i)});
    }
  }
  for (std::size_t i = 0; i < block.power_sweeps.size(); ++i) {
    items.push_back({SynthItem::power_sweep, i});
  }
  if (block.spectrum) {
    cfg.require(cfg.circuit.has_value(), "circuit");
    cfg.require(cfg.flux.has_value(), "flux");
    if (block.spectrum->include_resonator) cfg.require(!cfg.resonators.empty(), "resonators");
    items.push_back({SynthItem::spectrum, 0});
  }

  std::vector<std::vector<WrittenFile>> written(items.size());
  parallel_for(items.size(), options.jobs, [&](std::size_t item) {
    std::mt19937_64 rng = item_rng(*seed, item);
    const SynthItem& it = items[item];
    switch (it.kind) {
      case SynthItem::trace:
        written[item] = write_synthetic_trace(block.traces[it.index], options.out, rng, *seed, item);
        break;
      case SynthItem::random_trace: {
        const RandomTraceSpec& r = *block.random_traces;
        TraceSpec spec;
        char name[64];
        std::snprintf(name, sizeof name, "%s_%03zu", r.prefix.c_str(), it.index);
        spec.name = name;
        spec.params.f0 = draw_uniform(rng, r.f0);
        spec.params.q_int = draw_log_uniform(rng, r.q_int);
        spec.params.q_ext = spec.params.q_int * draw_log_uniform(rng, r.q_ext_ratio);
        spec.params.a = draw_uniform(rng, r.a);
        spec.baseline = Baseline::unit(spec.params.f0);
        spec.points = r.points;
        spec.span_linewidths = r.span_linewidths;
        spec.snr_db = r.snr_db;
        written[item] = write_synthetic_trace(spec, options.out, rng, *seed, item);
        break;
      }
      case SynthItem::power_sweep: {
        const PowerSweepSpec& s = block.power_sweeps[it.index];
        std::normal_distribution<double> normal(0.0, 1.0);
        CsvTable table;
        table.columns = {"mean_n", "q_int", "a"};
        for (int k = 0; k < s.points; ++k) {
          const double n = s.n_start * std::pow(s.n_stop / s.n_start, static_cast<double>(k) / (s.points - 1));
          const double factor = 1.0 + s.noise * normal(rng);
          table.rows.push_back({n, q_int_power(s.loss, n) * factor, s.a_per_photon * n});
        }
        const fs::path path = options.out / (s.name + ".csv");
        table.write(path);
        const json truth{{"q0", s.loss.q0}, {"beta", s.loss.beta}, {"gamma", s.loss.gamma},
                         {"delta0", s.loss.delta0()}, {"noise", s.noise}, {"seed", *seed},
                         {"item_index", item}};
        write_text(sidecar_path(path), json{{"format_version", kFormatVersion},
                                            {"ground_truth", truth}}.dump(2) + "\n");
        written[item] = {{path.string(), sha256_file(path)},
                         {sidecar_path(path).string(), sha256_file(sidecar_path(path))}};
        break;
      }
      case SynthItem::spectrum: {
        const SpectrumSynthSpec& s = *block.spectrum;
        const int levels = cfg.circuit->levels;
        const std::vector<LevelPair> labels =
            s.labels.empty() ? default_transition_labels(levels) : s.labels;
        std::normal_distribution<double> normal(0.0, 1.0);
        const double sigma = std::max(s.noise_ghz, 1e-3);
        std::vector<std::vector<std::string>> rows;
        const bool coupled = s.include_resonator;
        for (double flux : *cfg.flux) {
          if (coupled) {
            CoupledSystemSpec spec = cfg.coupled_system();
            spec.qubit.phi_ext = flux;
            const DressedSpectrum d = solve_coupled(spec, levels);
            for (const auto& [i, j] : labels) {
              const double f = std::abs(d.qubit_transition(i, j)) + s.noise_ghz * normal(rng);
              rows.push_back({format_number(flux), format_number(f),
                              "q" + std::to_string(i) + "-" + std::to_string(j), format_number(sigma)});
            }
            for (std::size_t m = 0; m < spec.modes.size(); ++m) {
              const double f = d.mode_frequency(static_cast<int>(m)) + s.noise_ghz * normal(rng);
              rows.push_back({format_number(flux), format_number(f), "r" + std::to_string(m),
                              format_number(sigma)});
            }
          } else {
            CircuitSpec spec = cfg.circuit->spec;
            spec.phi_ext = flux;
            const EigenSolution sol = fluxonium_spectrum(spec, levels);
            for (const auto& [i, j] : labels) {
              const double f = std::abs(sol.transition(i, j)) + s.noise_ghz * normal(rng);
              rows.push_back({format_number(flux), format_number(f),
                              "q" + std::to_string(i) + "-" + std::to_string(j), format_number(sigma)});
            }
          }
        }
        const fs::path path = options.out / (s.name + ".csv");
        write_mixed_csv(path, {"flux", "frequency_ghz", "label", "sigma_ghz"}, rows);
        json truth{{"e_c", cfg.circuit->spec.e_c}, {"e_j", cfg.circuit->spec.e_j},
                   {"e_l", cfg.circuit->spec.e_l}, {"noise_ghz", s.noise_ghz},
                   {"seed", *seed}, {"item_index", item}};
        json modes = json::array();
        if (coupled) {
          for (const auto& r : cfg.resonators) modes.push_back({{"frequency_ghz", r.frequency}, {"g_ghz", r.g}});
        }
        truth["modes"] = modes;
        write_text(sidecar_path(path), json{{"format_version", kFormatVersion},
                                            {"ground_truth", truth}}.dump(2) + "\n");
        written[item] = {{path.string(), sha256_file(path)},
                         {sidecar_path(path).string(), sha256_file(sidecar_path(path))}};
        break;
      }
    }
  });

  Report report = make_report("synthesize", cfg, options, {});
  json files = json::array();
  for (const auto& group : written) {
    for (const auto& f : group) {
      files.push_back({{"path", fs::path(f.path).filename().string()}, {"sha256", f.sha256}});
    }
  }
  report.results = json{{"files", files}, {"items", items.size()}};
  write_report(options.out / "report.json", report);
  log(options, "generated " + std::to_string(items.size()) + " items");
  return exit_ok;
}

// ---- validate ---------------------------------------------------------------------------

int cmd_validate(const RunConfig& cfg, const RunOptions& options) {
  if (cfg.circuit) cfg.circuit->spec.validate();
  if (cfg.fit_s21) {
    for (const auto& path : cfg.fit_s21->traces) load_trace(path).validate();
  }
  if (cfg.fit_power_sweep) {
    for (const auto& s : cfg.fit_power_sweep->sweeps) {
      if (read_power_sweep_csv(s.file).empty()) {
        throw ValidationError(s.file.string() + ": power sweep has no points");
      }
    }
  }
  if (cfg.fit_spectrum) read_observations_csv(cfg.fit_spectrum->observations);
  if (!cfg.resonators.empty()) cfg.coupled_system().validate();
  log(options, "configuration valid");
  std::cout << cfg.source.string() << ": valid\n";
  return exit_ok;
}

// ---- entry point ---------------------------------------------------------------------------

int run_cli(int argc, char** argv) {
  CLI::App app{"Fluxonium and kinetic-inductance resonator analysis toolkit"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);
  app.fallthrough();

  RunOptions options;
  std::string config;
  std::string out = "out";
  std::uint64_t seed = 0;
  app.add_option("--config", config, "YAML run configuration")->required();
  app.add_option("--out", out, "output directory")->capture_default_str();
  auto* seed_opt = app.add_option("--seed", seed, "random seed (overrides the configuration)");
  app.add_option("--jobs", options.jobs, "worker threads")->check(CLI::Range(1, 1024))->capture_default_str();
  app.add_flag("--verbose", options.verbose, "progress messages on stderr");

  using Command = int (*)(const RunConfig&, const RunOptions&);
  const std::vector<std::tuple<std::string, std::string, Command>> commands{
      {"simulate-spectrum", "transition frequencies over a flux scan", cmd_simulate_spectrum},
      {"fit-s21", "fit resonator traces", cmd_fit_s21},
      {"fit-power-sweep", "fit photon-number dependent loss", cmd_fit_power_sweep},
      {"fit-spectrum", "fit circuit parameters to two-tone spectra", cmd_fit_spectrum},
      {"predict-t1", "relaxation times per loss channel", cmd_predict_t1},
      {"synthesize", "generate synthetic traces and spectra", cmd_synthesize},
      {"validate", "check a configuration and its inputs", cmd_validate}};
  for (const auto& [name, help, fn] : commands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_validation;
  }
  options.config = config;
  options.out = out;
  if (seed_opt->count() > 0) options.seed = seed;

  try {
    const RunConfig cfg = load_config(options.config);
    for (const auto& [name, help, fn] : commands) {
      if (app.got_subcommand(name)) {
        log(options, "running " + name);
        return fn(cfg, options);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return exit_validation;
}

}  // namespace fluxqp::io
