#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "fluxqp/fit_engine.hpp"
#include "fluxqp/resonator_response.hpp"

namespace fluxqp::io {

using json = nlohmann::json;
namespace fs = std::filesystem;

inline constexpr int kFormatVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int { exit_ok = 0, exit_validation = 1, exit_fit = 2, exit_io = 3 };

/// Exit code for an exception thrown anywhere in the toolkit.
int exit_code_for(const std::exception& e);

// --- Traces ---------------------------------------------------------------

enum class TraceFormat { real_imag, mag_phase };

/// Reads `frequency_hz,s21_real,s21_imag` or `frequency_hz,s21_mag_db,s21_phase_deg`.
/// Frequencies are converted to GHz. Row numbers in errors count the header
/// as row 1.
SweepTrace read_trace_csv(const fs::path& path);
void write_trace_csv(const fs::path& path, const SweepTrace& trace,
                     TraceFormat format = TraceFormat::real_imag);

/// Contents of `<trace>.meta.json`.
struct TraceMetadata {
  std::optional<double> drive_power_dbm;
  AttenuationTable attenuation;
  SweepDirection direction = SweepDirection::up;
  json ground_truth;  // null when absent
};

fs::path sidecar_path(const fs::path& trace_path);
std::optional<TraceMetadata> read_sidecar(const fs::path& trace_path);
void write_sidecar(const fs::path& trace_path, const TraceMetadata& meta);

/// Trace plus sidecar metadata (if present) applied to it.
SweepTrace load_trace(const fs::path& path);

// --- Tables ---------------------------------------------------------------

/// Numeric CSV with a header row. Values are written with 17 significant
/// digits so that files are byte-stable and round-trip exactly.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void write(const fs::path& path) const;
  static CsvTable read(const fs::path& path);
  /// Column index by name; throws ValidationError when missing.
  std::size_t column(const std::string& name) const;
};

std::string format_number(double value);

// --- Hashing and reports ----------------------------------------------------

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const fs::path& path);

struct InputHash {
  std::string path;
  std::string sha256;
  bool operator==(const InputHash&) const = default;
};

struct Provenance {
  std::string tool_version = kToolVersion;
  std::string command;
  std::optional<std::uint64_t> seed;
  std::vector<InputHash> inputs;
  json config;  // echo of the parsed configuration
  bool operator==(const Provenance&) const = default;
};

struct Report {
  int format_version = kFormatVersion;
  Provenance provenance;
  json results;
  std::vector<std::string> diagnostics;
  bool operator==(const Report&) const = default;
};

void to_json(json& j, const InputHash& h);
void from_json(const json& j, InputHash& h);
void to_json(json& j, const Provenance& p);
void from_json(const json& j, Provenance& p);
void to_json(json& j, const Report& r);
void from_json(const json& j, Report& r);

std::string serialize(const Report& report);
Report parse_report(const std::string& text);
void write_report(const fs::path& path, const Report& report);
Report read_report(const fs::path& path);

/// Writes `text` to `path`, creating parent directories; IoError on failure.
void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

}  // namespace fluxqp::io
