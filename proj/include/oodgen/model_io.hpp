#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "oodgen/mlp.hpp"

namespace oodgen {

/// JSON model document:
///   {"dims": [...], "activations": [...], "weights": [[row-major]], "biases": [[...]]}
/// Round trips are value-exact for finite doubles (shortest round-trip decimal).
nlohmann::json mlp_to_json(const Mlp& net);
Mlp mlp_from_json(const nlohmann::json& doc);

void save_json(const nlohmann::json& doc, const std::filesystem::path& path);
nlohmann::json load_json(const std::filesystem::path& path);

/// Write-temp-then-rename so readers never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace oodgen
