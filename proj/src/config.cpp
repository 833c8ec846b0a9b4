#include "fluxqp/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <set>

#include <yaml-cpp/yaml.h>

#include "fluxqp/errors.hpp"

namespace fluxqp::io {

namespace {

class Reader {
 public:
  Reader(fs::path source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& message) const {
    const YAML::Mark mark = node.Mark();
    std::string where = source_.string();
    if (mark.line >= 0) {
      where += ":" + std::to_string(mark.line + 1) + ":" + std::to_string(mark.column + 1);
    }
    throw ValidationError(where + ": " + message);
  }

  void require_map(const YAML::Node& node, const std::string& name) const {
    if (!node.IsMap()) fail(node, "'" + name + "' must be a mapping");
  }

  void check_keys(const YAML::Node& node, const std::string& block,
                  const std::set<std::string>& allowed) const {
    require_map(node, block);
    for (const auto& item : node) {
      const std::string key = item.first.as<std::string>();
      if (!allowed.count(key)) fail(item.first, "unknown key '" + key + "' in " + block);
    }
  }

  template <typename T>
  T scalar(const YAML::Node& node, const std::string& key, const char* type) const {
    if (!node.IsScalar()) fail(node, "'" + key + "' must be " + type);
    try {
      return node.as<T>();
    } catch (const YAML::Exception&) {
      fail(node, "'" + key + "' must be " + type);
    }
  }

  double number(const YAML::Node& parent, const std::string& key) const {
    const YAML::Node node = parent[key];
    if (!node) fail(parent, "missing required key '" + key + "'");
    const double value = scalar<double>(node, key, "a number");
    if (!std::isfinite(value)) fail(node, "'" + key + "' must be finite");
    return value;
  }

  double number(const YAML::Node& parent, const std::string& key, double fallback) const {
    return parent[key] ? number(parent, key) : fallback;
  }

  std::optional<double> optional_number(const YAML::Node& parent, const std::string& key) const {
    if (!parent[key]) return std::nullopt;
    return number(parent, key);
  }

  double positive(const YAML::Node& parent, const std::string& key) const {
    const double value = number(parent, key);
    if (!(value > 0.0)) fail(parent[key], "'" + key + "' must be positive");
    return value;
  }

  double positive(const YAML::Node& parent, const std::string& key, double fallback) const {
    return parent[key] ? positive(parent, key) : fallback;
  }

  int integer(const YAML::Node& parent, const std::string& key, int fallback, int minimum) const {
    if (!parent[key]) return fallback;
    const int value = scalar<int>(parent[key], key, "an integer");
    if (value < minimum) {
      fail(parent[key], "'" + key + "' must be at least " + std::to_string(minimum));
    }
    return value;
  }

  bool boolean(const YAML::Node& parent, const std::string& key, bool fallback) const {
    if (!parent[key]) return fallback;
    return scalar<bool>(parent[key], key, "true or false");
  }

  std::string text(const YAML::Node& parent, const std::string& key,
                   const std::string& fallback) const {
    if (!parent[key]) return fallback;
    return scalar<std::string>(parent[key], key, "a string");
  }

  std::string choice(const YAML::Node& parent, const std::string& key, const std::string& fallback,
                     const std::set<std::string>& options) const {
    const std::string value = text(parent, key, fallback);
    if (!options.count(value)) {
      std::string list;
      for (const auto& o : options) list += (list.empty() ? "" : ", ") + o;
      fail(parent[key], "'" + key + "' must be one of: " + list);
    }
    return value;
  }

  std::vector<double> numbers(const YAML::Node& node, const std::string& key) const {
    if (!node.IsSequence()) fail(node, "'" + key + "' must be a list of numbers");
    std::vector<double> out;
    for (const auto& item : node) out.push_back(scalar<double>(item, key, "a number"));
    return out;
  }

  std::pair<double, double> range(const YAML::Node& parent, const std::string& key,
                                  std::pair<double, double> fallback) const {
    if (!parent[key]) return fallback;
    const std::vector<double> values = numbers(parent[key], key);
    if (values.size() != 2 || values[0] > values[1]) {
      fail(parent[key], "'" + key + "' must be [low, high] with low <= high");
    }
    return {values[0], values[1]};
  }

  fs::path existing_path(const YAML::Node& node, const std::string& key) const {
    const fs::path raw = scalar<std::string>(node, key, "a path");
    const fs::path resolved = raw.is_absolute() ? raw : source_.parent_path() / raw;
    if (!fs::exists(resolved)) fail(node, "path does not exist: " + resolved.string());
    return resolved;
  }

  std::vector<LevelPair> level_pairs(const YAML::Node& node, const std::string& key) const {
    if (!node.IsSequence()) fail(node, "'" + key + "' must be a list of [i, j] pairs");
    std::vector<LevelPair> out;
    for (const auto& item : node) {
      if (!item.IsSequence() || item.size() != 2) fail(item, "each transition must be [i, j]");
      const int i = scalar<int>(item[0], key, "an integer");
      const int j = scalar<int>(item[1], key, "an integer");
      if (i < 0 || j < 0 || i == j) fail(item, "transition levels must be distinct and >= 0");
      out.emplace_back(i, j);
    }
    return out;
  }

  AttenuationTable attenuation(const YAML::Node& node) const {
    check_keys(node, "attenuation", {"frequency_ghz", "attenuation_db"});
    if (!node["frequency_ghz"] || !node["attenuation_db"]) {
      fail(node, "attenuation needs frequency_ghz and attenuation_db lists");
    }
    try {
      return AttenuationTable(numbers(node["frequency_ghz"], "frequency_ghz"),
                              numbers(node["attenuation_db"], "attenuation_db"));
    } catch (const ValidationError& e) {
      fail(node, e.what());
    }
  }

 private:
  fs::path source_;
};

json yaml_to_json(const YAML::Node& node) {
  switch (node.Type()) {
    case YAML::NodeType::Map: {
      json out = json::object();
      for (const auto& item : node) out[item.first.as<std::string>()] = yaml_to_json(item.second);
      return out;
    }
    case YAML::NodeType::Sequence: {
      json out = json::array();
      for (const auto& item : node) out.push_back(yaml_to_json(item));
      return out;
    }
    case YAML::NodeType::Scalar: {
      const std::string s = node.Scalar();
      if (node.Tag() != "!") {
        long long integer = 0;
        const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), integer);
        if (ec == std::errc() && end == s.data() + s.size()) return integer;
        try {
          std::size_t used = 0;
          const double value = std::stod(s, &used);
          if (used == s.size()) return value;
        } catch (const std::exception&) {
        }
        if (s == "true") return true;
        if (s == "false") return false;
        if (s == "null" || s == "~") return nullptr;
      }
      return s;
    }
    default:
      return nullptr;
  }
}

CircuitBlock read_circuit(const Reader& r, const YAML::Node& node) {
  r.check_keys(node, "circuit",
               {"e_c", "e_j", "e_l", "phi_ext", "basis", "dimension", "grid_extent", "levels"});
  CircuitBlock block;
  block.spec.e_c = r.positive(node, "e_c");
  block.spec.e_j = r.number(node, "e_j");
  if (block.spec.e_j < 0.0) r.fail(node["e_j"], "'e_j' must be non-negative");
  block.spec.e_l = r.positive(node, "e_l");
  block.spec.phi_ext = r.number(node, "phi_ext", 0.0);
  const std::string basis = r.choice(node, "basis", "harmonic", {"harmonic", "grid"});
  if (basis == "harmonic") {
    block.spec.truncation = PhaseBasis::harmonic(r.integer(node, "dimension", 120, 4));
  } else {
    block.spec.truncation = PhaseBasis::discretized(r.integer(node, "dimension", 801, 17),
                                                    r.positive(node, "grid_extent",
                                                               8.0 * std::numbers::pi));
  }
  block.levels = r.integer(node, "levels", 6, 2);
  if (block.levels > block.spec.truncation.dimension()) {
    r.fail(node["levels"], "'levels' exceeds the basis dimension");
  }
  return block;
}

std::vector<double> read_flux(const Reader& r, const YAML::Node& node) {
  if (node.IsSequence()) {
    std::vector<double> values = r.numbers(node, "flux");
    if (values.empty()) r.fail(node, "flux list is empty");
    return values;
  }
  r.check_keys(node, "flux", {"start", "stop", "points", "values"});
  if (node["values"]) {
    std::vector<double> values = r.numbers(node["values"], "values");
    if (values.empty()) r.fail(node["values"], "flux list is empty");
    return values;
  }
  const double start = r.number(node, "start");
  const double stop = r.number(node, "stop");
  if (!node["points"]) r.fail(node, "missing required key 'points'");
  const int points = r.scalar<int>(node["points"], "points", "an integer");
  if (points < 1) r.fail(node["points"], "flux scan needs at least one point");
  std::vector<double> values(static_cast<std::size_t>(points));
  for (int k = 0; k < points; ++k) {
    values[static_cast<std::size_t>(k)] =
        points == 1 ? start : start + (stop - start) * k / (points - 1);
  }
  return values;
}

QuasiparticleSpec read_qp(const Reader& r, const YAML::Node& node) {
  QuasiparticleSpec qp;
  qp.x_qp = r.number(node, "x_qp");
  qp.delta = r.positive(node, "delta", kWsiGapMicroEv);
  qp.alpha = r.positive(node, "alpha", 1.0);
  try {
    qp.validate();
  } catch (const Error& e) {
    r.fail(node, e.what());
  }
  return qp;
}

LossBlock read_loss(const Reader& r, const YAML::Node& node, const std::optional<CircuitBlock>& circuit) {
  r.check_keys(node, "loss", {"temperature", "channels"});
  LossBlock block;
  block.temperature = r.number(node, "temperature", 0.0);
  const YAML::Node channels = node["channels"];
  if (!channels || !channels.IsSequence() || channels.size() == 0) {
    r.fail(channels ? channels : node, "loss block needs at least one channel");
  }
  if (!circuit) r.fail(node, "loss channels need a circuit block");
  std::set<std::string> names;
  for (const auto& item : channels) {
    r.check_keys(item, "loss channel", {"name", "type", "x_qp", "delta", "alpha", "q_cap"});
    const std::string type =
        r.choice(item, "type", "", {"inductive_qp", "junction_qp", "dielectric"});
    LossChannel channel;
    channel.name = r.text(item, "name", type);
    if (!names.insert(channel.name).second) {
      r.fail(item, "duplicate channel name '" + channel.name + "'");
    }
    if (type == "inductive_qp") {
      channel.model = InductiveQpChannel{read_qp(r, item), circuit->spec.e_l};
    } else if (type == "junction_qp") {
      channel.model = JunctionQpChannel{read_qp(r, item), circuit->spec.e_j};
    } else {
      channel.model = DielectricChannel{r.positive(item, "q_cap"), circuit->spec.e_c};
    }
    block.channels.push_back(std::move(channel));
  }
  return block;
}

Baseline read_baseline(const Reader& r, const YAML::Node& node, double f0) {
  Baseline b = Baseline::unit(f0);
  if (!node) return b;
  r.check_keys(node, "baseline", {"g0", "g1", "g2", "p0", "p1", "f_m"});
  b.g0 = r.positive(node, "g0", 1.0);
  b.g1 = r.number(node, "g1", 0.0);
  b.g2 = r.number(node, "g2", 0.0);
  b.p0 = r.number(node, "p0", 0.0);
  b.p1 = r.number(node, "p1", 0.0);
  b.f_m = r.positive(node, "f_m", f0);
  return b;
}

SynthesizeBlock read_synthesize(const Reader& r, const YAML::Node& node) {
  r.check_keys(node, "synthesize", {"traces", "random_traces", "power_sweeps", "spectrum"});
  SynthesizeBlock block;
  std::set<std::string> names;
  const auto claim = [&](const YAML::Node& at, const std::string& name) {
    if (name.empty() || name.find('/') != std::string::npos) r.fail(at, "invalid item name");
    if (!names.insert(name).second) r.fail(at, "duplicate item name '" + name + "'");
  };
  if (const YAML::Node traces = node["traces"]) {
    if (!traces.IsSequence()) r.fail(traces, "'traces' must be a list");
    for (const auto& item : traces) {
      r.check_keys(item, "trace",
                   {"name", "f0", "q_int", "q_ext", "x_a", "delta_f", "a", "direction", "points",
                    "span_linewidths", "snr_db", "format", "baseline", "drive_power_dbm",
                    "attenuation"});
      TraceSpec spec;
      spec.name = r.text(item, "name", "");
      claim(item, spec.name);
      spec.params.f0 = r.positive(item, "f0");
      spec.params.q_int = r.positive(item, "q_int");
      spec.params.q_ext = r.positive(item, "q_ext");
      if (item["x_a"] && item["delta_f"]) r.fail(item, "give either x_a or delta_f, not both");
      spec.params.x_a = item["delta_f"] ? r.number(item, "delta_f") / spec.params.f0
                                        : r.number(item, "x_a", 0.0);
      spec.params.a = r.number(item, "a", 0.0);
      if (spec.params.a < 0.0) r.fail(item["a"], "'a' must be non-negative");
      spec.direction = r.choice(item, "direction", "up", {"up", "down", "both"});
      spec.points = r.integer(item, "points", 801, 20);
      spec.span_linewidths = r.positive(item, "span_linewidths", 12.0);
      spec.snr_db = r.optional_number(item, "snr_db");
      spec.format = r.choice(item, "format", "real_imag", {"real_imag", "mag_phase"}) == "real_imag"
                        ? TraceFormat::real_imag
                        : TraceFormat::mag_phase;
      spec.baseline = read_baseline(r, item["baseline"], spec.params.f0);
      spec.drive_power_dbm = r.optional_number(item, "drive_power_dbm");
      if (item["attenuation"]) spec.attenuation = r.attenuation(item["attenuation"]);
      block.traces.push_back(std::move(spec));
    }
  }
  if (const YAML::Node random = node["random_traces"]) {
    r.check_keys(random, "random_traces",
                 {"count", "f0", "q_int", "q_ext_ratio", "a", "points", "span_linewidths",
                  "snr_db", "prefix"});
    RandomTraceSpec spec;
    spec.count = r.integer(random, "count", 1, 1);
    spec.f0 = r.range(random, "f0", spec.f0);
    spec.q_int = r.range(random, "q_int", spec.q_int);
    spec.q_ext_ratio = r.range(random, "q_ext_ratio", spec.q_ext_ratio);
    spec.a = r.range(random, "a", spec.a);
    if (!(spec.f0.first > 0.0) || !(spec.q_int.first > 0.0) || !(spec.q_ext_ratio.first > 0.0) ||
        spec.a.first < 0.0) {
      r.fail(random, "random trace ranges must be positive (a non-negative)");
    }
    spec.points = r.integer(random, "points", 801, 20);
    spec.span_linewidths = r.positive(random, "span_linewidths", 12.0);
    spec.snr_db = r.optional_number(random, "snr_db");
    spec.prefix = r.text(random, "prefix", "trace");
    claim(random, spec.prefix);
    block.random_traces = spec;
  }
  if (const YAML::Node sweeps = node["power_sweeps"]) {
    if (!sweeps.IsSequence()) r.fail(sweeps, "'power_sweeps' must be a list");
    for (const auto& item : sweeps) {
      r.check_keys(item, "power sweep",
                   {"name", "q0", "delta0", "beta", "gamma", "n_start", "n_stop", "points",
                    "noise", "a_per_photon"});
      PowerSweepSpec spec;
      spec.name = r.text(item, "name", "");
      claim(item, spec.name);
      if (item["q0"] && item["delta0"]) r.fail(item, "give either q0 or delta0, not both");
      spec.loss.q0 = item["delta0"] ? 1.0 / r.positive(item, "delta0") : r.positive(item, "q0");
      spec.loss.beta = r.number(item, "beta");
      spec.loss.gamma = r.number(item, "gamma");
      if (spec.loss.beta < 0.0 || spec.loss.gamma < 0.0) {
        r.fail(item, "beta and gamma must be non-negative");
      }
      spec.n_start = r.positive(item, "n_start", 0.1);
      spec.n_stop = r.positive(item, "n_stop", 1e6);
      if (!(spec.n_stop > spec.n_start)) r.fail(item, "n_stop must exceed n_start");
      spec.points = r.integer(item, "points", 25, 2);
      spec.noise = r.number(item, "noise", 0.0);
      spec.a_per_photon = r.number(item, "a_per_photon", 0.0);
      if (spec.noise < 0.0 || spec.a_per_photon < 0.0) {
        r.fail(item, "noise and a_per_photon must be non-negative");
      }
      block.power_sweeps.push_back(spec);
    }
  }
  if (const YAML::Node spectrum = node["spectrum"]) {
    r.check_keys(spectrum, "spectrum", {"name", "noise_ghz", "transitions", "include_resonator"});
    SpectrumSynthSpec spec;
    spec.name = r.text(spectrum, "name", "spectrum");
    claim(spectrum, spec.name);
    spec.noise_ghz = r.number(spectrum, "noise_ghz", 0.0);
    if (spec.noise_ghz < 0.0) r.fail(spectrum["noise_ghz"], "'noise_ghz' must be non-negative");
    if (spectrum["transitions"]) spec.labels = r.level_pairs(spectrum["transitions"], "transitions");
    spec.include_resonator = r.boolean(spectrum, "include_resonator", true);
    block.spectrum = spec;
  }
  if (block.traces.empty() && !block.random_traces && block.power_sweeps.empty() &&
      !block.spectrum) {
    r.fail(node, "synthesize block lists nothing to generate");
  }
  return block;
}

std::vector<fs::path> expand_traces(const Reader& r, const YAML::Node& node) {
  std::vector<fs::path> out;
  const auto add = [&](const YAML::Node& item) {
    const fs::path path = r.existing_path(item, "traces");
    if (fs::is_directory(path)) {
      std::vector<fs::path> found;
      for (const auto& entry : fs::directory_iterator(path)) {
        if (entry.is_regular_file() && entry.path().extension() == ".csv") {
          found.push_back(entry.path());
        }
      }
      std::sort(found.begin(), found.end());
      if (found.empty()) r.fail(item, "directory contains no .csv traces: " + path.string());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.push_back(path);
    }
  };
  if (node.IsSequence()) {
    for (const auto& item : node) add(item);
  } else {
    add(node);
  }
  if (out.empty()) r.fail(node, "no trace files given");
  return out;
}

}  // namespace

CoupledSystemSpec RunConfig::coupled_system() const {
  require(circuit.has_value(), "circuit");
  CoupledSystemSpec spec;
  spec.qubit = circuit->spec;
  for (const auto& res : resonators) {
    spec.modes.push_back(ResonatorMode{res.frequency, res.photons});
    spec.couplings.emplace_back(ChargeCoupling{res.g});
  }
  return spec;
}

void RunConfig::require(bool present, const std::string& block) const {
  if (!present) {
    throw ValidationError(source.string() + ": missing required block '" + block + "'");
  }
}

RunConfig parse_config(const std::string& text, const fs::path& source) {
  const Reader r(source);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ValidationError(source.string() + ":" + std::to_string(e.mark.line + 1) + ":" +
                          std::to_string(e.mark.column + 1) + ": " + e.msg);
  }
  if (!root.IsMap()) throw ValidationError(source.string() + ": configuration must be a mapping");
  r.check_keys(root, "configuration",
               {"format_version", "seed", "circuit", "resonators", "flux", "transitions",
                "fit_s21", "fit_power_sweep", "fit_spectrum", "loss", "synthesize"});
  if (!root["format_version"]) r.fail(root, "missing required key 'format_version'");
  if (r.scalar<int>(root["format_version"], "format_version", "an integer") != kFormatVersion) {
    r.fail(root["format_version"], "unsupported format_version (expected " +
                                       std::to_string(kFormatVersion) + ")");
  }

  RunConfig cfg;
  cfg.source = source;
  cfg.echo = yaml_to_json(root);
  if (root["seed"]) cfg.seed = r.scalar<std::uint64_t>(root["seed"], "seed", "a non-negative integer");
  if (root["circuit"]) cfg.circuit = read_circuit(r, root["circuit"]);
  if (const YAML::Node res = root["resonators"]) {
    if (!res.IsSequence()) r.fail(res, "'resonators' must be a list");
    if (res.size() > 2) r.fail(res, "at most two resonator modes are supported");
    for (const auto& item : res) {
      r.check_keys(item, "resonator", {"frequency", "g", "photons"});
      cfg.resonators.push_back(
          ResonatorBlock{r.positive(item, "frequency"), r.number(item, "g", 0.0),
                         r.integer(item, "photons", 6, 2)});
    }
  }
  if (root["flux"]) cfg.flux = read_flux(r, root["flux"]);
  if (root["transitions"]) cfg.transitions = r.level_pairs(root["transitions"], "transitions");
  if (cfg.circuit) {
    for (const auto& [i, j] : cfg.transitions) {
      if (i >= cfg.circuit->levels || j >= cfg.circuit->levels) {
        r.fail(root["transitions"], "transition outside the retained circuit levels");
      }
    }
  }
  if (const YAML::Node node = root["fit_s21"]) {
    r.check_keys(node, "fit_s21", {"traces", "allow_nonlinear", "jump_ratio"});
    if (!node["traces"]) r.fail(node, "missing required key 'traces'");
    FitS21Block block;
    block.traces = expand_traces(r, node["traces"]);
    block.allow_nonlinear = r.boolean(node, "allow_nonlinear", false);
    block.jump_ratio = r.positive(node, "jump_ratio", 10.0);
    cfg.fit_s21 = block;
  }
  if (const YAML::Node node = root["fit_power_sweep"]) {
    r.check_keys(node, "fit_power_sweep", {"a_crit_fraction", "sweeps"});
    PowerSweepBlock block;
    block.a_crit_fraction = r.positive(node, "a_crit_fraction", 0.01);
    const YAML::Node sweeps = node["sweeps"];
    if (!sweeps || !sweeps.IsSequence() || sweeps.size() == 0) {
      r.fail(sweeps ? sweeps : node, "fit_power_sweep needs a non-empty 'sweeps' list");
    }
    for (const auto& item : sweeps) {
      r.check_keys(item, "sweep", {"label", "f0", "file"});
      if (!item["file"]) r.fail(item, "missing required key 'file'");
      block.sweeps.push_back(PowerSweepSource{r.text(item, "label", ""),
                                              r.optional_number(item, "f0"),
                                              r.existing_path(item["file"], "file")});
      if (block.sweeps.back().label.empty()) {
        block.sweeps.back().label = block.sweeps.back().file.stem().string();
      }
    }
    cfg.fit_power_sweep = block;
  }
  if (const YAML::Node node = root["fit_spectrum"]) {
    r.check_keys(node, "fit_spectrum",
                 {"observations", "qubit_levels", "assignment_window", "candidate_weight"});
    if (!node["observations"]) r.fail(node, "missing required key 'observations'");
    SpectrumFitBlock block;
    block.observations = r.existing_path(node["observations"], "observations");
    block.qubit_levels = r.integer(node, "qubit_levels", 8, 2);
    block.assignment_window = r.positive(node, "assignment_window", 0.5);
    block.candidate_weight = r.positive(node, "candidate_weight", 0.2);
    cfg.fit_spectrum = block;
  }
  if (root["loss"]) cfg.loss = read_loss(r, root["loss"], cfg.circuit);
  if (root["synthesize"]) cfg.synthesize = read_synthesize(r, root["synthesize"]);
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("configuration file not found: " + path.string());
  return parse_config(read_text(path), path);
}

std::vector<PowerSweepPoint> read_power_sweep_csv(const fs::path& path) {
  const CsvTable table = CsvTable::read(path);
  const std::size_t n_col = table.column("mean_n");
  const std::size_t q_col = table.column("q_int");
  const auto a_it = std::find(table.columns.begin(), table.columns.end(), "a");
  std::vector<PowerSweepPoint> out;
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    const auto& row = table.rows[k];
    PowerSweepPoint p{row[n_col], row[q_col], 0.0};
    if (a_it != table.columns.end()) {
      p.a = row[static_cast<std::size_t>(a_it - table.columns.begin())];
    }
    if (!(p.mean_n >= 0.0) || !(p.q_int > 0.0)) {
      throw ValidationError(path.string() + ": row " + std::to_string(k + 2) +
                            ": mean_n must be >= 0 and q_int > 0");
    }
    out.push_back(p);
  }
  return out;
}

std::string observation_label(const SpectrumObservation& obs) {
  if (obs.kind == ObservationKind::resonator) return "r" + std::to_string(obs.mode);
  return "q" + std::to_string(obs.from) + "-" + std::to_string(obs.to);
}

std::vector<SpectrumObservation> read_observations_csv(const fs::path& path) {
  const std::string text = read_text(path);
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> header;
  std::vector<SpectrumObservation> out;
  std::size_t row = 0;
  const auto fail = [&](const std::string& message) {
    throw ValidationError(path.string() + ": row " + std::to_string(row) + ": " + message);
  };
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream cells_in(line);
    for (std::string cell; std::getline(cells_in, cell, ',');) cells.push_back(cell);
    if (header.empty()) {
      header = cells;
      const bool ok = (header.size() == 3 || header.size() == 4) && header[0] == "flux" &&
                      header[1] == "frequency_ghz" && header[2] == "label" &&
                      (header.size() == 3 || header[3] == "sigma_ghz");
      if (!ok) fail("header must be flux,frequency_ghz,label[,sigma_ghz]");
      continue;
    }
    if (cells.size() != header.size()) fail("wrong number of columns");
    SpectrumObservation obs;
    try {
      std::size_t used = 0;
      obs.flux = std::stod(cells[0], &used);
      if (used != cells[0].size()) fail("bad flux value");
      obs.frequency = std::stod(cells[1], &used);
      if (used != cells[1].size()) fail("bad frequency value");
      if (header.size() == 4) {
        obs.sigma = std::stod(cells[3], &used);
        if (used != cells[3].size() || !(obs.sigma > 0.0)) fail("sigma must be positive");
      }
    } catch (const std::logic_error&) {
      fail("non-numeric value");
    }
    const std::string& label = cells[2];
    int a = 0, b = 0;
    char dash = 0;
    if (label.size() >= 2 && label[0] == 'r' &&
        std::from_chars(label.data() + 1, label.data() + label.size(), a).ptr ==
            label.data() + label.size()) {
      obs.kind = ObservationKind::resonator;
      obs.mode = a;
    } else if (label.size() >= 4 && label[0] == 'q' &&
               std::sscanf(label.c_str(), "q%d%c%d", &a, &dash, &b) == 3 && dash == '-' &&
               observation_label({0, 0, ObservationKind::qubit_transition, a, b}) == label) {
      obs.kind = ObservationKind::qubit_transition;
      obs.from = a;
      obs.to = b;
    } else {
      fail("label must look like q0-1 or r0, got '" + label + "'");
    }
    out.push_back(obs);
  }
  if (header.empty()) throw ValidationError(path.string() + ": file has no header");
  return out;
}

}  // namespace fluxqp::io
