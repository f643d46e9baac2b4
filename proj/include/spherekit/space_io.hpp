#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "spherekit/space.hpp"

namespace spherekit {

/// Parses a space document:
/// {"points":[{"id","coords"?,"mass"}], "edges":[{"u","v","len"}], "base", "truncation"?}
Space load_space(const nlohmann::json& document);
Space load_space_text(const std::string& text);
Space load_space_file(const std::filesystem::path& path);

/// Inverse of load_space; load_space(serialize_space(s)) reproduces s exactly.
nlohmann::json serialize_space(const Space& space);

}  // namespace spherekit
