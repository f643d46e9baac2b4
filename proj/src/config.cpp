#include "spherekit/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "spherekit/error.hpp"
#include "spherekit/space_io.hpp"

namespace spherekit {

using nlohmann::json;

Space SpaceSource::build(std::optional<int> hw) const {
  if (generator == "grid") return generate_grid(dim, hw.value_or(half_width), weight_exponent);
  if (generator == "random") {
    RandomCloudOptions o;
    o.points = points;
    o.neighbors = neighbors;
    return generate_random_cloud(seed, o);
  }
  if (!generator.empty()) throw SchemaError("space.generator", "unknown generator '" + generator + "'");
  return load_space_file(file);
}

void ExperimentConfig::validate() const {
  for (std::size_t k = 1; k < truncation_ladder.size(); ++k)
    if (!(truncation_ladder[k] > truncation_ladder[k - 1]))
      throw SchemaError("truncation_ladder[" + std::to_string(k) + "]", "ladder must be strictly increasing");
  for (int R : truncation_ladder)
    if (R <= 0) throw SchemaError("truncation_ladder", "truncations must be positive");
  for (const auto& [name, v] : tolerances)
    if (!(v > 0.0) || !std::isfinite(v)) throw SchemaError("tolerances." + name, "tolerance must be positive");
}

double ExperimentConfig::tolerance(const std::string& name, double fallback) const {
  auto it = tolerances.find(name);
  return it == tolerances.end() ? fallback : it->second;
}

// ---------------------------------------------------------------------------
// TOML subset

namespace {

class TomlReader {
 public:
  explicit TomlReader(const std::string& text) : s_(text) {}

  json parse() {
    json root = json::object();
    json* table = &root;
    while (true) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        ++pos_;
        if (peek() == '[') fail("arrays of tables are not supported");
        skip_ws();
        auto path = key_path();
        skip_ws();
        expect(']');
        table = &descend(root, path);
        if (!table->is_object()) fail("'" + join(path) + "' is not a table");
      } else {
        auto path = key_path();
        skip_ws();
        expect('=');
        skip_ws();
        json v = value();
        json* dst = &descend(*table, {path.begin(), path.end() - 1});
        if (dst->contains(path.back())) fail("duplicate key '" + join(path) + "'");
        (*dst)[path.back()] = std::move(v);
      }
      end_of_line();
    }
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw SchemaError("toml:" + std::to_string(line()), msg);
  }
  int line() const {
    int l = 1;
    for (std::size_t i = 0; i < pos_ && i < s_.size(); ++i) l += s_[i] == '\n';
    return l;
  }
  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return eof() ? '\0' : s_[pos_]; }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  void skip_ws() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos_;
  }
  void skip_comment() {
    if (peek() == '#')
      while (!eof() && peek() != '\n') ++pos_;
  }
  void skip_blank_lines() {
    while (!eof()) {
      skip_ws();
      skip_comment();
      if (peek() == '\n' || peek() == '\r')
        ++pos_;
      else
        break;
    }
  }
  // Whitespace, comments and newlines, as allowed inside arrays.
  void skip_all() {
    while (!eof()) {
      skip_ws();
      skip_comment();
      if (peek() == '\n' || peek() == '\r')
        ++pos_;
      else
        break;
    }
  }
  void end_of_line() {
    skip_ws();
    skip_comment();
    if (eof()) return;
    if (peek() == '\r') ++pos_;
    if (peek() != '\n') fail("unexpected trailing characters");
    ++pos_;
  }

  static std::string join(const std::vector<std::string>& path) {
    std::string out;
    for (const auto& p : path) out += (out.empty() ? "" : ".") + p;
    return out;
  }

  json& descend(json& from, const std::vector<std::string>& path) {
    json* cur = &from;
    for (const auto& k : path) {
      if (!cur->contains(k)) (*cur)[k] = json::object();
      cur = &(*cur)[k];
      if (!cur->is_object()) fail("'" + k + "' is not a table");
    }
    return *cur;
  }

  std::vector<std::string> key_path() {
    std::vector<std::string> path;
    while (true) {
      skip_ws();
      if (peek() == '"') {
        path.push_back(basic_string());
      } else {
        const std::size_t start = pos_;
        while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-')) ++pos_;
        if (pos_ == start) fail("expected a key");
        path.push_back(s_.substr(start, pos_ - start));
      }
      skip_ws();
      if (peek() != '.') break;
      ++pos_;
    }
    return path;
  }

  std::string basic_string() {
    expect('"');
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      char c = s_[pos_++];
      if (c == '"') break;
      if (c != '\\') {
        out += c;
        continue;
      }
      char e = s_[pos_++];
      switch (e) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        default: fail(std::string("unsupported escape \\") + e);
      }
    }
    return out;
  }

  json value() {
    const char c = peek();
    if (c == '"') return basic_string();
    if (c == '\'') {
      ++pos_;
      const std::size_t start = pos_;
      while (!eof() && peek() != '\'' && peek() != '\n') ++pos_;
      if (peek() != '\'') fail("unterminated literal string");
      return s_.substr(start, pos_++ - start);
    }
    if (c == '[') {
      ++pos_;
      json arr = json::array();
      while (true) {
        skip_all();
        if (peek() == ']') {
          ++pos_;
          break;
        }
        arr.push_back(value());
        skip_all();
        if (peek() == ',') {
          ++pos_;
          continue;
        }
        skip_all();
        expect(']');
        break;
      }
      return arr;
    }
    if (c == '{') {
      ++pos_;
      json obj = json::object();
      skip_ws();
      if (peek() == '}') {
        ++pos_;
        return obj;
      }
      while (true) {
        auto path = key_path();
        skip_ws();
        expect('=');
        skip_ws();
        descend(obj, {path.begin(), path.end() - 1})[path.back()] = value();
        skip_ws();
        if (peek() == ',') {
          ++pos_;
          continue;
        }
        expect('}');
        break;
      }
      return obj;
    }
    const std::size_t start = pos_;
    while (!eof() && !std::isspace(static_cast<unsigned char>(peek())) && peek() != ',' && peek() != ']' &&
           peek() != '}' && peek() != '#')
      ++pos_;
    std::string tok = s_.substr(start, pos_ - start);
    if (tok == "true") return true;
    if (tok == "false") return false;
    std::string digits;
    for (char ch : tok)
      if (ch != '_') digits += ch;
    if (digits.empty()) fail("expected a value");
    const bool integral = digits.find_first_of(".eE") == std::string::npos && digits != "inf" && digits != "nan";
    try {
      std::size_t used = 0;
      if (integral) {
        const long long v = std::stoll(digits, &used);
        if (used == digits.size()) return v;
      } else {
        const double v = std::stod(digits, &used);
        if (used == digits.size()) return v;
      }
    } catch (const std::exception&) {
    }
    fail("cannot parse value '" + tok + "'");
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

SpaceSource source_from_json(const json& j) {
  SpaceSource s;
  if (j.contains("file")) {
    s.file = j.at("file").get<std::string>();
    return s;
  }
  if (!j.contains("generator")) throw SchemaError("space", "needs 'generator' or 'file'");
  s.generator = j.at("generator").get<std::string>();
  s.dim = j.value("dim", s.dim);
  s.half_width = j.value("half_width", s.half_width);
  s.weight_exponent = j.value("weight_exponent", s.weight_exponent);
  s.points = j.value("points", s.points);
  s.neighbors = j.value("neighbors", s.neighbors);
  s.seed = j.value("seed", s.seed);
  if (s.generator != "grid" && s.generator != "random")
    throw SchemaError("space.generator", "unknown generator '" + s.generator + "'");
  return s;
}

json source_to_json(const SpaceSource& s) {
  if (s.is_file()) return {{"file", s.file.generic_string()}};
  if (s.generator == "grid")
    return {{"generator", "grid"}, {"dim", s.dim}, {"half_width", s.half_width}, {"weight_exponent", s.weight_exponent}};
  return {{"generator", s.generator}, {"points", s.points}, {"neighbors", s.neighbors}, {"seed", s.seed}};
}

}  // namespace

json parse_toml(const std::string& text) { return TomlReader(text).parse(); }

ExperimentConfig config_from_json(const json& doc) {
  if (!doc.is_object()) throw SchemaError("config", "must be an object");
  ExperimentConfig c;
  try {
    c.seed = doc.value("seed", c.seed);
    if (doc.contains("truncation_ladder")) c.truncation_ladder = doc.at("truncation_ladder").get<std::vector<int>>();
    if (doc.contains("tolerances"))
      for (const auto& [k, v] : doc.at("tolerances").items()) c.tolerances[k] = v.get<double>();
    if (doc.contains("output_dir")) c.output_dir = doc.at("output_dir").get<std::string>();
    if (doc.contains("space")) c.space = source_from_json(doc.at("space"));
    if (doc.contains("pipeline")) c.pipeline = doc.at("pipeline").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw SchemaError("config", e.what());
  }
  for (const auto& [k, v] : doc.items())
    if (k != "seed" && k != "truncation_ladder" && k != "tolerances" && k != "output_dir" && k != "space" &&
        k != "pipeline")
      throw SchemaError(k, "unknown config key");
  c.validate();
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json j = {{"seed", c.seed},
            {"truncation_ladder", c.truncation_ladder},
            {"tolerances", c.tolerances},
            {"output_dir", c.output_dir.generic_string()},
            {"pipeline", c.pipeline}};
  if (c.space) j["space"] = source_to_json(*c.space);
  return j;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  json doc;
  if (path.extension() == ".toml") {
    doc = parse_toml(ss.str());
  } else {
    try {
      doc = json::parse(ss.str());
    } catch (const json::parse_error&) {
      if (path.extension() == ".json") throw SchemaError(path.string(), "invalid JSON");
      doc = parse_toml(ss.str());
    }
  }
  ExperimentConfig c = config_from_json(doc);
  if (c.space && c.space->is_file() && c.space->file.is_relative())
    c.space->file = path.parent_path() / c.space->file;
  return c;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_hash(const ExperimentConfig& config) { return fnv1a_hex(config_to_json(config).dump()); }

}  // namespace spherekit
