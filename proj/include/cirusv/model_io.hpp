#pragma once

#include "cirusv/model.hpp"

#include <json.hpp>

#include <string>

namespace cirusv {

/// Shortest decimal representation that round-trips to the same double
/// (what the CSV and hash layers emit).
std::string format_double(double v);

/// Model JSON schema: object with integer "d", arrays "b", "sigma2",
/// "rho" of length d, and "beta" as d rows of d numbers.
nlohmann::ordered_json model_to_json(const CirModel& model);

/// Parses the schema; throws std::invalid_argument with a field path
/// on schema violations. Does not check admissibility (use validate).
CirModel model_from_json(const nlohmann::json& j);

/// Reads and parses a model file. JSON syntax errors surface as
/// std::invalid_argument carrying the parser's position message.
CirModel read_model_file(const std::string& path);

/// FNV-1a hash of the canonical serialization, for run manifests.
std::string model_hash(const CirModel& model);

}  // namespace cirusv
