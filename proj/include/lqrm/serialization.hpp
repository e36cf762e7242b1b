#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "lqrm/system.hpp"

namespace lqrm {

// Matrix JSON format: {"rows": r, "cols": c, "data": [row-major numbers]}.
nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j, const std::string& field_path);

nlohmann::json system_to_json(const MultiplicativeNoiseSystem& sys);
MultiplicativeNoiseSystem system_from_json(const nlohmann::json& j,
                                           const std::string& field_path = "system");

void save_json(const nlohmann::json& j, const std::filesystem::path& path);
nlohmann::json load_json(const std::filesystem::path& path);

}  // namespace lqrm
