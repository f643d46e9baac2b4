#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "spherekit/space.hpp"

namespace spherekit {

/// Where an experiment's space comes from: a generator or a space document.
struct SpaceSource {
  std::string generator;  // "grid", "random", or empty for a file
  int dim = 2;
  int half_width = 32;
  double weight_exponent = 0.0;
  std::size_t points = 200;
  std::size_t neighbors = 4;
  std::uint64_t seed = 0;
  std::filesystem::path file;

  bool is_file() const { return generator.empty(); }
  /// Builds the space; grids take `half_width` unless overridden.
  Space build(std::optional<int> half_width = std::nullopt) const;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::vector<int> truncation_ladder;
  std::map<std::string, double> tolerances;
  std::filesystem::path output_dir = "spherekit-out";
  std::optional<SpaceSource> space;
  std::vector<std::string> pipeline;

  /// Throws SchemaError on a non-increasing ladder or a non-positive tolerance.
  void validate() const;
  double tolerance(const std::string& name, double fallback) const;
};

/// Subset of TOML: [tables], dotted keys, strings, numbers, booleans, arrays
/// and inline tables. Returns the equivalent JSON document.
nlohmann::json parse_toml(const std::string& text);

ExperimentConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const ExperimentConfig& config);
/// Reads a .toml or .json file (decided by extension; other extensions are
/// tried as JSON first). Relative space files resolve against the config's
/// directory.
ExperimentConfig load_config(const std::filesystem::path& path);

/// 64-bit FNV-1a of the canonical (sorted-key, compact) JSON of the config,
/// as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);
std::string fnv1a_hex(const std::string& bytes);

}  // namespace spherekit
