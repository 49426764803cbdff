#pragma once

#include <filesystem>
#include <string>

#include "pbmv/boost.hpp"

namespace pbmv {

// Model file: JSON with "format": 1, the training config, rho, and per-view
// q_weights plus voters serialized as nested nodes
// {"feature": f, "threshold": x, "left": ..., "right": ...} or {"leaf": s}.
std::string model_to_json(const MVMajorityVote& model);
MVMajorityVote model_from_json(const std::string& text);

void save_model(const MVMajorityVote& model, const std::filesystem::path& path);
MVMajorityVote load_model(const std::filesystem::path& path);

}  // namespace pbmv
