#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "btsc/ensemble.hpp"

namespace btsc {

inline constexpr int kModelFormatVersion = 1;

// Base64 of little-endian IEEE-754 doubles; decoding restores the exact bits.
std::string encode_doubles(std::span<const double> values);
std::vector<double> decode_doubles(std::string_view text);

nlohmann::json model_to_json(const EnsembleModel& model);
EnsembleModel model_from_json(const nlohmann::json& doc);

void save_model(const EnsembleModel& model, const std::filesystem::path& path);
EnsembleModel load_model(const std::filesystem::path& path);

}  // namespace btsc
