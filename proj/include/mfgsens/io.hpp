#pragma once

#include "mfgsens/grid.hpp"
#include "mfgsens/mfg_solver.hpp"
#include "mfgsens/model.hpp"

#include <filesystem>
#include <string>

#include "json.hpp"

namespace mfgsens {

inline constexpr int kSchemaVersion = 1;

nlohmann::json to_json(const ModelParams& p);
nlohmann::json to_json(const Discretization& d);
nlohmann::json to_json(const SolveOptions& o);
nlohmann::json to_json(const NormTriple& n);

ModelParams params_from_json(const nlohmann::json& j);
Discretization disc_from_json(const nlohmann::json& j);

/// Writes `content` to `path`, throwing std::ios_base::failure on error.
void write_text(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);

void write_field(const std::filesystem::path& path, const Field& f);
Field read_field(const std::filesystem::path& path, const Discretization& disc);

/// Pretty-printed JSON with a trailing newline.
std::string dump(const nlohmann::json& j);

}  // namespace mfgsens
