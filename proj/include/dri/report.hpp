#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "dri/grid.hpp"

namespace dri {

inline constexpr const char* kArtifactVersion = "0.1.0";

// Shortest round-trip decimal (17 significant digits).
std::string fmt_double(double v);

// Two-column RFC 4180 CSV (CRLF line endings) with an x,value header.
void write_grid_csv(const GridFunction& g, const std::string& path);

nlohmann::json envelope_json(const TailEnvelope& env);

// Sorted-key dump with a trailing newline; byte-identical across runs for
// identical content.
void write_json(const nlohmann::json& j, const std::string& path);

std::string iso8601_now();

}  // namespace dri
