#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace spherekit {

inline constexpr const char* kReportSchema = "spherekit/1";

struct EvidenceRow {
  std::string id;
  nlohmann::json fields;
};

/// A named result. Numeric claims must cite at least one evidence row.
struct Claim {
  std::string name;
  nlohmann::json value;
  std::vector<std::string> evidence;
};

struct Series {
  std::string name;
  std::string x_label;  // header cells name their units, e.g. "radius [d]"
  std::string y_label;
  std::vector<std::pair<double, double>> points;
};

struct Report {
  std::string command;      // echo of the invocation
  std::string property;     // what the command checks
  std::string config_hash;
  std::string verdict = "PASS";  // PASS | FAIL
  std::string outcome;           // the command's own label, e.g. PARABOLIC
  std::vector<Claim> claims;
  std::vector<EvidenceRow> evidence;
  std::vector<Series> series;
  std::vector<std::string> notes;
  double wall_clock_seconds = 0.0;  // kept out of the report body

  bool passed() const { return verdict == "PASS"; }
  /// Adds an evidence row and returns its id ("<prefix><k>").
  std::string add_evidence(const std::string& prefix, nlohmann::json fields);
  void claim(const std::string& name, nlohmann::json value, std::vector<std::string> evidence = {});
  Series& add_series(const std::string& name, const std::string& x_label, const std::string& y_label);

  /// Throws InvalidArgument when a numeric claim lacks evidence or cites an
  /// unknown row.
  void validate() const;

  /// Deterministic body; wall-clock is excluded.
  nlohmann::json to_json() const;
  nlohmann::json timing_json() const;
  static Report from_json(const nlohmann::json& doc);
};

/// Writes <dir>/<stem>.json and <dir>/<stem>.timing.json; returns the first.
std::filesystem::path write_report(const Report& report, const std::filesystem::path& dir, const std::string& stem);
Report read_report(const std::filesystem::path& path);

/// Two-column CSV of a series; the header row holds the axis labels.
/// Numbers use the shortest form that reads back exactly.
std::string emit_plot_data(const Report& report, const std::string& series);

/// Shortest decimal that reads back to the same double.
std::string format_double(double v);

}  // namespace spherekit
