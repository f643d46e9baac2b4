#include "spherekit/report.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "spherekit/error.hpp"

namespace spherekit {

using nlohmann::json;

std::string Report::add_evidence(const std::string& prefix, json fields) {
  std::string id = prefix + std::to_string(evidence.size());
  evidence.push_back({id, std::move(fields)});
  return id;
}

void Report::claim(const std::string& name, json value, std::vector<std::string> ids) {
  claims.push_back({name, std::move(value), std::move(ids)});
}

Series& Report::add_series(const std::string& name, const std::string& x_label, const std::string& y_label) {
  series.push_back({name, x_label, y_label, {}});
  return series.back();
}

namespace {

bool numeric(const json& v) {
  if (v.is_number()) return true;
  if (v.is_array() || v.is_object())
    for (const auto& x : v)
      if (numeric(x)) return true;
  return false;
}

}  // namespace

void Report::validate() const {
  std::set<std::string> ids;
  for (const auto& row : evidence)
    if (!ids.insert(row.id).second) throw InvalidArgument("report: duplicate evidence id '" + row.id + "'");
  for (const auto& c : claims) {
    if (numeric(c.value) && c.evidence.empty())
      throw InvalidArgument("report: numeric claim '" + c.name + "' cites no evidence");
    for (const auto& id : c.evidence)
      if (!ids.count(id)) throw InvalidArgument("report: claim '" + c.name + "' cites unknown row '" + id + "'");
  }
}

json Report::to_json() const {
  json claims_j = json::array();
  for (const auto& c : claims) claims_j.push_back({{"name", c.name}, {"value", c.value}, {"evidence", c.evidence}});
  json ev = json::array();
  for (const auto& r : evidence) {
    json row = r.fields;
    row["id"] = r.id;
    ev.push_back(std::move(row));
  }
  json ser = json::object();
  for (const auto& s : series) {
    json pts = json::array();
    for (const auto& [x, y] : s.points) pts.push_back({x, y});
    ser[s.name] = {{"x", s.x_label}, {"y", s.y_label}, {"points", pts}};
  }
  return {{"schema", kReportSchema}, {"command", command},  {"property", property}, {"config_hash", config_hash},
          {"verdict", verdict},      {"outcome", outcome},  {"claims", claims_j},   {"evidence", ev},
          {"series", ser},           {"notes", notes}};
}

json Report::timing_json() const {
  return {{"schema", kReportSchema}, {"command", command}, {"wall_clock_seconds", wall_clock_seconds}};
}

Report Report::from_json(const json& doc) {
  try {
    if (doc.at("schema").get<std::string>() != kReportSchema) throw SchemaError("schema", "unsupported report schema");
    Report r;
    r.command = doc.at("command").get<std::string>();
    r.property = doc.value("property", "");
    r.config_hash = doc.value("config_hash", "");
    r.verdict = doc.at("verdict").get<std::string>();
    r.outcome = doc.value("outcome", "");
    for (const auto& c : doc.at("claims"))
      r.claims.push_back({c.at("name"), c.at("value"), c.at("evidence").get<std::vector<std::string>>()});
    for (const auto& e : doc.at("evidence")) {
      json fields = e;
      const std::string id = fields.at("id");
      fields.erase("id");
      r.evidence.push_back({id, fields});
    }
    for (const auto& [name, s] : doc.at("series").items()) {
      Series ser{name, s.at("x"), s.at("y"), {}};
      for (const auto& p : s.at("points")) ser.points.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
      r.series.push_back(std::move(ser));
    }
    r.notes = doc.value("notes", std::vector<std::string>{});
    return r;
  } catch (const json::exception& e) {
    throw SchemaError("report", e.what());
  }
}

std::filesystem::path write_report(const Report& report, const std::filesystem::path& dir, const std::string& stem) {
  report.validate();
  std::filesystem::create_directories(dir);
  const auto path = dir / (stem + ".json");
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << report.to_json().dump(2) << '\n';
  }
  std::ofstream t(dir / (stem + ".timing.json"), std::ios::binary);
  if (!t) throw Error("cannot write timing sidecar in '" + dir.string() + "'");
  t << report.timing_json().dump(2) << '\n';
  return path;
}

Report read_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open report '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return Report::from_json(json::parse(ss.str()));
  } catch (const json::parse_error& e) {
    throw SchemaError(path.string(), e.what());
  }
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string emit_plot_data(const Report& report, const std::string& name) {
  for (const auto& s : report.series) {
    if (s.name != name) continue;
    std::string out = s.x_label + "," + s.y_label + "\n";
    for (const auto& [x, y] : s.points) out += format_double(x) + "," + format_double(y) + "\n";
    return out;
  }
  std::string known;
  for (const auto& s : report.series) known += (known.empty() ? "" : ", ") + s.name;
  throw InvalidArgument("emit_plot_data: unknown series '" + name + "' (report has: " + (known.empty() ? "none" : known) +
                        ")");
}

}  // namespace spherekit
