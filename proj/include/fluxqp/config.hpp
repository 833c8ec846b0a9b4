#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fluxqp/circuit_models.hpp"
#include "fluxqp/cli_io.hpp"
#include "fluxqp/loss_channels.hpp"
#include "fluxqp/resonator_response.hpp"

namespace fluxqp::io {

struct CircuitBlock {
  CircuitSpec spec;
  int levels = 6;
};

struct ResonatorBlock {
  double frequency = 0.0;  // GHz
  double g = 0.0;          // GHz, charge coupling
  int photons = 6;
};

struct FitS21Block {
  std::vector<fs::path> traces;  // files, directories already expanded
  bool allow_nonlinear = false;
  double jump_ratio = 10.0;
};

struct PowerSweepSource {
  std::string label;
  std::optional<double> f0;
  fs::path file;  // columns mean_n,q_int[,a]
};

struct PowerSweepBlock {
  double a_crit_fraction = 0.01;
  std::vector<PowerSweepSource> sweeps;
};

struct SpectrumFitBlock {
  fs::path observations;  // columns flux,frequency_ghz,label[,sigma_ghz]
  int qubit_levels = 8;
  double assignment_window = 0.5;
  double candidate_weight = 0.2;
};

struct LossBlock {
  double temperature = 0.0;  // K, regime warnings only
  std::vector<LossChannel> channels;
};

struct TraceSpec {
  std::string name;
  ResonanceParams params;
  Baseline baseline;  // f_m defaults to f0
  std::string direction = "up";  // up, down or both
  int points = 801;
  double span_linewidths = 12.0;
  std::optional<double> snr_db;
  TraceFormat format = TraceFormat::real_imag;
  std::optional<double> drive_power_dbm;
  AttenuationTable attenuation;
};

struct RandomTraceSpec {
  int count = 0;
  std::pair<double, double> f0{4.0, 8.0};
  std::pair<double, double> q_int{2e4, 2e5};  // log-uniform
  std::pair<double, double> q_ext_ratio{1.0 / 3.0, 3.0};  // log-uniform, Q_ext / Q_int
  std::pair<double, double> a{0.0, 0.0};
  int points = 801;
  double span_linewidths = 12.0;
  std::optional<double> snr_db;
  std::string prefix = "trace";
};

struct PowerSweepSpec {
  std::string name;
  PowerLossSpec loss;
  double n_start = 0.1;
  double n_stop = 1e6;
  int points = 25;
  double noise = 0.0;         // relative, Gaussian
  double a_per_photon = 0.0;  // nonlinearity attached to each point
};

struct SpectrumSynthSpec {
  std::string name = "spectrum";
  double noise_ghz = 0.0;
  std::vector<LevelPair> labels;
  bool include_resonator = true;
};

struct SynthesizeBlock {
  std::vector<TraceSpec> traces;
  std::optional<RandomTraceSpec> random_traces;
  std::vector<PowerSweepSpec> power_sweeps;
  std::optional<SpectrumSynthSpec> spectrum;
};

/// Parsed configuration. Relative paths are resolved against the directory of
/// the configuration file and checked for existence.
struct RunConfig {
  fs::path source;
  std::optional<std::uint64_t> seed;
  std::optional<CircuitBlock> circuit;
  std::vector<ResonatorBlock> resonators;
  std::optional<std::vector<double>> flux;
  std::vector<LevelPair> transitions;
  std::optional<FitS21Block> fit_s21;
  std::optional<PowerSweepBlock> fit_power_sweep;
  std::optional<SpectrumFitBlock> fit_spectrum;
  std::optional<LossBlock> loss;
  std::optional<SynthesizeBlock> synthesize;
  json echo;

  /// Coupled system assembled from the circuit and resonator blocks.
  CoupledSystemSpec coupled_system() const;
  /// ValidationError naming the missing block.
  void require(bool present, const std::string& block) const;
};

/// Loads and validates a YAML configuration. Errors read
/// "<file>:<line>:<column>: <message>".
RunConfig load_config(const fs::path& path);
RunConfig parse_config(const std::string& text, const fs::path& source);

/// Photon-number file of a power sweep.
std::vector<PowerSweepPoint> read_power_sweep_csv(const fs::path& path);
/// Spectroscopy observations; labels are "q<i>-<j>" or "r<mode>".
std::vector<SpectrumObservation> read_observations_csv(const fs::path& path);
std::string observation_label(const SpectrumObservation& obs);

}  // namespace fluxqp::io
