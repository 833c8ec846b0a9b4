#include "fluxqp/cli_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include <openssl/evp.h>

#include "fluxqp/errors.hpp"

namespace fluxqp::io {

namespace {

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    const auto first = cell.find_first_not_of(" \t\r");
    const auto last = cell.find_last_not_of(" \t\r");
    out.push_back(first == std::string::npos ? "" : cell.substr(first, last - first + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

double parse_number(const std::string& cell, const fs::path& path, std::size_t row) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(cell, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != cell.size()) {
    throw ValidationError(path.string() + ": row " + std::to_string(row) + ": '" + cell +
                          "' is not a number");
  }
  return value;
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

const char* direction_name(SweepDirection d) { return d == SweepDirection::up ? "up" : "down"; }

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const IoError*>(&e)) return exit_io;
  if (dynamic_cast<const FitError*>(&e) || dynamic_cast<const DiagnosticsError*>(&e)) {
    return exit_fit;
  }
  return exit_validation;
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

void write_text(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in = open_input(path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// ---- Traces ------------------------------------------------------------------

SweepTrace read_trace_csv(const fs::path& path) {
  std::ifstream in = open_input(path);
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!blank(line)) break;
  }
  const std::vector<std::string> header = split_row(line);
  TraceFormat format;
  if (header == std::vector<std::string>{"frequency_hz", "s21_real", "s21_imag"}) {
    format = TraceFormat::real_imag;
  } else if (header == std::vector<std::string>{"frequency_hz", "s21_mag_db", "s21_phase_deg"}) {
    format = TraceFormat::mag_phase;
  } else {
    throw ValidationError(path.string() + ": row " + std::to_string(row) +
                          ": header must be frequency_hz,s21_real,s21_imag or "
                          "frequency_hz,s21_mag_db,s21_phase_deg");
  }
  SweepTrace trace;
  while (std::getline(in, line)) {
    ++row;
    if (blank(line)) continue;
    const std::vector<std::string> cells = split_row(line);
    if (cells.size() != 3) {
      throw ValidationError(path.string() + ": row " + std::to_string(row) + ": expected 3 columns, found " +
                            std::to_string(cells.size()));
    }
    const double f_hz = parse_number(cells[0], path, row);
    const double u = parse_number(cells[1], path, row);
    const double v = parse_number(cells[2], path, row);
    if (!std::isfinite(f_hz) || !std::isfinite(u) || !std::isfinite(v)) {
      throw ValidationError(path.string() + ": row " + std::to_string(row) + ": non-finite value");
    }
    const double f = f_hz * 1e-9;
    if (!trace.frequencies.empty() && !(f > trace.frequencies.back())) {
      throw ValidationError(path.string() + ": row " + std::to_string(row) +
                            ": frequency is not strictly increasing");
    }
    trace.frequencies.push_back(f);
    if (format == TraceFormat::real_imag) {
      trace.s21.emplace_back(u, v);
    } else {
      trace.s21.push_back(std::polar(std::pow(10.0, u / 20.0), v * std::numbers::pi / 180.0));
    }
  }
  if (trace.frequencies.size() < 3) {
    throw ValidationError(path.string() + ": trace has fewer than 3 samples");
  }
  return trace;
}

void write_trace_csv(const fs::path& path, const SweepTrace& trace, TraceFormat format) {
  std::string text = format == TraceFormat::real_imag ? "frequency_hz,s21_real,s21_imag\n"
                                                      : "frequency_hz,s21_mag_db,s21_phase_deg\n";
  for (std::size_t k = 0; k < trace.frequencies.size(); ++k) {
    const cplx s = trace.s21[k];
    double u = s.real();
    double v = s.imag();
    if (format == TraceFormat::mag_phase) {
      u = 20.0 * std::log10(std::abs(s));
      v = std::arg(s) * 180.0 / std::numbers::pi;
    }
    text += format_number(trace.frequencies[k] * 1e9) + "," + format_number(u) + "," +
            format_number(v) + "\n";
  }
  write_text(path, text);
}

fs::path sidecar_path(const fs::path& trace_path) {
  return fs::path(trace_path.string() + ".meta.json");
}

std::optional<TraceMetadata> read_sidecar(const fs::path& trace_path) {
  const fs::path path = sidecar_path(trace_path);
  if (!fs::exists(path)) return std::nullopt;
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  try {
    if (j.value("format_version", 0) != kFormatVersion) {
      throw ValidationError(path.string() + ": unsupported format_version");
    }
    TraceMetadata meta;
    if (j.contains("drive_power_dbm") && !j["drive_power_dbm"].is_null()) {
      meta.drive_power_dbm = j["drive_power_dbm"].get<double>();
    }
    if (j.contains("attenuation") && !j["attenuation"].is_null()) {
      meta.attenuation = AttenuationTable(j["attenuation"].at("frequency_ghz").get<std::vector<double>>(),
                                          j["attenuation"].at("attenuation_db").get<std::vector<double>>());
    }
    const std::string direction = j.value("sweep_direction", "up");
    if (direction != "up" && direction != "down") {
      throw ValidationError(path.string() + ": sweep_direction must be 'up' or 'down'");
    }
    meta.direction = direction == "up" ? SweepDirection::up : SweepDirection::down;
    if (j.contains("ground_truth")) meta.ground_truth = j["ground_truth"];
    return meta;
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_sidecar(const fs::path& trace_path, const TraceMetadata& meta) {
  json j;
  j["format_version"] = kFormatVersion;
  if (meta.drive_power_dbm) j["drive_power_dbm"] = *meta.drive_power_dbm;
  if (!meta.attenuation.empty()) {
    j["attenuation"] = {{"frequency_ghz", meta.attenuation.frequencies()},
                        {"attenuation_db", meta.attenuation.attenuation_db()}};
  }
  j["sweep_direction"] = direction_name(meta.direction);
  if (!meta.ground_truth.is_null()) j["ground_truth"] = meta.ground_truth;
  write_text(sidecar_path(trace_path), j.dump(2) + "\n");
}

SweepTrace load_trace(const fs::path& path) {
  SweepTrace trace = read_trace_csv(path);
  if (const auto meta = read_sidecar(path)) {
    trace.drive_power_dbm = meta->drive_power_dbm;
    trace.attenuation = meta->attenuation;
    trace.direction = meta->direction;
  }
  return trace;
}

// ---- Tables ------------------------------------------------------------------

void CsvTable::write(const fs::path& path) const {
  std::string text;
  for (std::size_t c = 0; c < columns.size(); ++c) text += (c ? "," : "") + columns[c];
  text += "\n";
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) text += (c ? "," : "") + format_number(row[c]);
    text += "\n";
  }
  write_text(path, text);
}

CsvTable CsvTable::read(const fs::path& path) {
  std::ifstream in = open_input(path);
  CsvTable table;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (blank(line)) continue;
    if (table.columns.empty()) {
      table.columns = split_row(line);
      continue;
    }
    const std::vector<std::string> cells = split_row(line);
    if (cells.size() != table.columns.size()) {
      throw ValidationError(path.string() + ": row " + std::to_string(row) + ": expected " +
                            std::to_string(table.columns.size()) + " columns, found " +
                            std::to_string(cells.size()));
    }
    std::vector<double> values;
    for (const auto& cell : cells) values.push_back(parse_number(cell, path, row));
    table.rows.push_back(std::move(values));
  }
  if (table.columns.empty()) throw ValidationError(path.string() + ": file has no header");
  return table;
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c] == name) return c;
  }
  throw ValidationError("missing column '" + name + "'");
}

// ---- Hashing and reports -------------------------------------------------------

std::string sha256_file(const fs::path& path) {
  const std::string bytes = read_text(path);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw IoError("hashing failed for " + path.string());
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int k = 0; k < length; ++k) {
    out.push_back(hex[digest[k] >> 4]);
    out.push_back(hex[digest[k] & 15]);
  }
  return out;
}

void to_json(json& j, const InputHash& h) { j = json{{"path", h.path}, {"sha256", h.sha256}}; }

void from_json(const json& j, InputHash& h) {
  j.at("path").get_to(h.path);
  j.at("sha256").get_to(h.sha256);
}

void to_json(json& j, const Provenance& p) {
  j = json{{"tool_version", p.tool_version},
           {"command", p.command},
           {"seed", p.seed ? json(*p.seed) : json(nullptr)},
           {"inputs", p.inputs},
           {"config", p.config}};
}

void from_json(const json& j, Provenance& p) {
  j.at("tool_version").get_to(p.tool_version);
  j.at("command").get_to(p.command);
  p.seed.reset();
  if (!j.at("seed").is_null()) p.seed = j.at("seed").get<std::uint64_t>();
  j.at("inputs").get_to(p.inputs);
  p.config = j.at("config");
}

void to_json(json& j, const Report& r) {
  j = json{{"format_version", r.format_version},
           {"provenance", r.provenance},
           {"results", r.results},
           {"diagnostics", r.diagnostics}};
}

void from_json(const json& j, Report& r) {
  j.at("format_version").get_to(r.format_version);
  j.at("provenance").get_to(r.provenance);
  r.results = j.at("results");
  j.at("diagnostics").get_to(r.diagnostics);
}

std::string serialize(const Report& report) { return json(report).dump(2) + "\n"; }

Report parse_report(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.value("format_version", 0) != kFormatVersion) {
      throw ValidationError("report has unsupported format_version");
    }
    return j.get<Report>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed report: ") + e.what());
  }
}

void write_report(const fs::path& path, const Report& report) {
  write_text(path, serialize(report));
}

Report read_report(const fs::path& path) { return parse_report(read_text(path)); }

}  // namespace fluxqp::io
