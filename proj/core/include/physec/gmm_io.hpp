#pragma once

#include "physec/gmm.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>

namespace physec {

// {"dim": M, "components": [{"weight", "mean": [...], "covariance": [[...]]}],
//  "fit_info": {"iterations", "final_log_likelihood", "converged", "regularization_applied"}}
nlohmann::json to_json(const GmmModel& model);

/// Throws ParseError naming the first missing or malformed key.
GmmModel gmm_from_json(const nlohmann::json& j);

void save_model(const std::filesystem::path& path, const GmmModel& model);
GmmModel load_model(const std::filesystem::path& path);

/// Parses a whole JSON document from disk; IoError / ParseError on failure.
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace physec
