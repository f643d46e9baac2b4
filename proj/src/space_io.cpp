#include "spherekit/space_io.hpp"

#include <fstream>
#include <sstream>

#include "spherekit/error.hpp"

namespace spherekit {

using nlohmann::json;

namespace {

double number_field(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(where + "." + key, "missing field");
  if (!it->is_number()) throw SchemaError(where + "." + key, "expected a number");
  return it->get<double>();
}

std::string string_field(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(where + "." + key, "missing field");
  if (!it->is_string()) throw SchemaError(where + "." + key, "expected a string");
  return it->get<std::string>();
}

}  // namespace

Space load_space(const json& doc) {
  if (!doc.is_object()) throw SchemaError("$", "space document must be an object");
  if (!doc.contains("points") || !doc["points"].is_array()) throw SchemaError("points", "expected an array");
  if (!doc.contains("edges") || !doc["edges"].is_array()) throw SchemaError("edges", "expected an array");
  if (!doc.contains("base")) throw SchemaError("base", "missing base point");
  if (!doc["base"].is_string()) throw SchemaError("base", "expected a string");

  std::vector<Space::PointSpec> points;
  points.reserve(doc["points"].size());
  for (std::size_t i = 0; i < doc["points"].size(); ++i) {
    const auto& p = doc["points"][i];
    const std::string where = "points[" + std::to_string(i) + "]";
    if (!p.is_object()) throw SchemaError(where, "expected an object");
    Space::PointSpec spec;
    spec.id = string_field(p, "id", where);
    spec.mass = number_field(p, "mass", where);
    if (auto c = p.find("coords"); c != p.end()) {
      if (!c->is_array()) throw SchemaError(where + ".coords", "expected an array of numbers");
      for (const auto& v : *c) {
        if (!v.is_number()) throw SchemaError(where + ".coords", "expected an array of numbers");
        spec.coords.push_back(v.get<double>());
      }
    }
    points.push_back(std::move(spec));
  }
  std::vector<Space::EdgeSpec> edges;
  edges.reserve(doc["edges"].size());
  for (std::size_t k = 0; k < doc["edges"].size(); ++k) {
    const auto& e = doc["edges"][k];
    const std::string where = "edges[" + std::to_string(k) + "]";
    if (!e.is_object()) throw SchemaError(where, "expected an object");
    edges.push_back({string_field(e, "u", where), string_field(e, "v", where), number_field(e, "len", where)});
  }
  std::optional<double> truncation;
  if (auto t = doc.find("truncation"); t != doc.end()) {
    if (!t->is_number()) throw SchemaError("truncation", "expected a number");
    truncation = t->get<double>();
  }
  return Space(std::move(points), edges, doc["base"].get<std::string>(), truncation);
}

Space load_space_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError("$", std::string("invalid JSON: ") + e.what());
  }
  return load_space(doc);
}

Space load_space_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return load_space_text(buf.str());
}

json serialize_space(const Space& space) {
  json points = json::array();
  for (Index i = 0; i < space.size(); ++i) {
    json p = {{"id", space.id(i)}};
    if (!space.coords(i).empty()) p["coords"] = space.coords(i);
    p["mass"] = space.mass(i);
    points.push_back(std::move(p));
  }
  json edges = json::array();
  for (const auto& e : space.edges()) edges.push_back({{"u", space.id(e.u)}, {"v", space.id(e.v)}, {"len", e.length}});
  json doc = {{"points", std::move(points)}, {"edges", std::move(edges)}, {"base", space.id(space.base())}};
  if (space.has_declared_truncation()) doc["truncation"] = space.truncation_radius();
  return doc;
}

}  // namespace spherekit
