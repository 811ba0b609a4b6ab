#include "btsc/trial_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "btsc/error.hpp"

namespace btsc {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(FeatureKind kind) {
  return kind == FeatureKind::ERP ? "ERP" : "HGP";
}

FeatureKind parse_feature_kind(std::string_view text) {
  if (text == "ERP" || text == "erp") return FeatureKind::ERP;
  if (text == "HGP" || text == "hgp") return FeatureKind::HGP;
  throw_data("unknown feature kind '" + std::string(text) + "'");
}

std::string_view to_string(CombinationRule rule) {
  return rule == CombinationRule::Likelihood ? "likelihood" : "voting";
}

CombinationRule parse_combination_rule(std::string_view text) {
  if (text == "likelihood") return CombinationRule::Likelihood;
  if (text == "voting") return CombinationRule::Voting;
  throw_data("unknown combination rule '" + std::string(text) + "'");
}

int infer_num_classes(std::span<const int> labels) {
  if (labels.empty()) return 0;
  return *std::max_element(labels.begin(), labels.end()) + 1;
}

void validate(const TrialSet& set) {
  if (set.n_trials == 0 || set.n_channels == 0 || set.n_samples == 0) {
    throw_data("empty dataset");
  }
  if (set.data.size() != set.n_trials * set.n_channels * set.n_samples) {
    throw_data("size mismatch: data holds " + std::to_string(set.data.size()) +
               " elements, dims imply " +
               std::to_string(set.n_trials * set.n_channels * set.n_samples));
  }
  if (!(set.fs > 0.0) || !std::isfinite(set.fs)) throw_data("sampling rate must be positive");
  if (set.t0_index >= set.n_samples) throw_data("t0_index out of range");
  if (set.labels.size() != set.n_trials) throw_data("labels length does not match n_trials");
  if (set.channel_names.size() != set.n_channels) {
    throw_data("channel_names length does not match n_channels");
  }
  if (set.num_classes < 1) throw_data("num_classes must be at least 1");
  std::vector<std::size_t> counts(static_cast<std::size_t>(set.num_classes), 0);
  for (int label : set.labels) {
    if (label < 0 || label >= set.num_classes) {
      throw_data("label out of range: " + std::to_string(label));
    }
    ++counts[static_cast<std::size_t>(label)];
  }
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] < 2) {
      throw_data("insufficient trials per class: class " + std::to_string(c) + " has " +
                 std::to_string(counts[c]));
    }
  }
  for (std::size_t i = 0; i < set.data.size(); ++i) {
    if (!std::isfinite(set.data[i])) {
      const std::size_t per_trial = set.n_channels * set.n_samples;
      throw_data("non-finite sample at trial " + std::to_string(i / per_trial) + ", channel " +
                 std::to_string((i % per_trial) / set.n_samples));
    }
  }
  if (set.content == DataContent::Features) {
    if (set.feature_kinds.size() != set.n_channels) {
      throw_data("feature_kinds length does not match n_channels");
    }
    if (!(set.window_s > 0.0)) throw_data("feature set requires window_s > 0");
  }
}

namespace {

std::uint32_t to_little_endian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
  }
  return v;
}

constexpr const char* kBlobName = "data.f32";

}  // namespace

TrialSet load_dataset(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw_io("manifest not found: " + manifest_path.string());

  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw_io("manifest is not valid JSON: " + std::string(e.what()));
  }

  TrialSet set;
  std::string blob_name;
  try {
    const int version = manifest.at("format_version").get<int>();
    if (version != kDatasetFormatVersion) {
      throw_data("unsupported dataset format_version " + std::to_string(version));
    }
    const auto dtype = manifest.value("dtype", std::string("float32-le"));
    if (dtype != "float32-le") throw_data("unsupported dtype '" + dtype + "'");
    const auto dims = manifest.at("dims").get<std::vector<std::size_t>>();
    if (dims.size() != 3) throw_data("dims must have three entries");
    set.n_trials = dims[0];
    set.n_channels = dims[1];
    set.n_samples = dims[2];
    set.fs = manifest.at("fs").get<double>();
    set.labels = manifest.at("labels").get<std::vector<int>>();
    set.channel_names = manifest.at("channel_names").get<std::vector<std::string>>();
    set.t0_index = manifest.at("t0_index").get<std::size_t>();
    set.num_classes = manifest.contains("num_classes") ? manifest.at("num_classes").get<int>()
                                                      : infer_num_classes(set.labels);
    blob_name = manifest.value("blob", std::string(kBlobName));
    if (manifest.value("content", std::string("raw")) == "features") {
      set.content = DataContent::Features;
      set.window_s = manifest.at("window_s").get<double>();
      for (const auto& kind : manifest.at("feature_kinds")) {
        set.feature_kinds.push_back(parse_feature_kind(kind.get<std::string>()));
      }
    }
  } catch (const json::exception& e) {
    throw_data("malformed manifest: " + std::string(e.what()));
  }

  const fs::path blob_path = manifest_path.parent_path() / blob_name;
  std::ifstream blob(blob_path, std::ios::binary | std::ios::ate);
  if (!blob) throw_io("data blob not readable: " + blob_path.string());
  const auto bytes = static_cast<std::size_t>(blob.tellg());
  if (bytes % sizeof(float) != 0) throw_data("size mismatch: blob is not a whole number of float32");
  const std::size_t expected = set.n_trials * set.n_channels * set.n_samples;
  if (bytes / sizeof(float) != expected) {
    throw_data("size mismatch: blob holds " + std::to_string(bytes / sizeof(float)) +
               " elements, dims imply " + std::to_string(expected));
  }
  blob.seekg(0);
  std::vector<std::uint32_t> raw(expected);
  blob.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(bytes));
  if (!blob) throw_io("failed reading data blob: " + blob_path.string());
  set.data.resize(expected);
  for (std::size_t i = 0; i < expected; ++i) {
    set.data[i] = std::bit_cast<float>(to_little_endian(raw[i]));
  }

  validate(set);
  return set;
}

fs::path save_dataset(const TrialSet& set, const fs::path& dir) {
  validate(set);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw_io("cannot create directory " + dir.string() + ": " + ec.message());

  json manifest;
  manifest["format_version"] = kDatasetFormatVersion;
  manifest["blob"] = kBlobName;
  manifest["dtype"] = "float32-le";
  manifest["dims"] = {set.n_trials, set.n_channels, set.n_samples};
  manifest["fs"] = set.fs;
  manifest["labels"] = set.labels;
  manifest["num_classes"] = set.num_classes;
  manifest["channel_names"] = set.channel_names;
  manifest["t0_index"] = set.t0_index;
  manifest["content"] = set.content == DataContent::Raw ? "raw" : "features";
  if (set.content == DataContent::Features) {
    manifest["window_s"] = set.window_s;
    json kinds = json::array();
    for (auto kind : set.feature_kinds) kinds.push_back(std::string(to_string(kind)));
    manifest["feature_kinds"] = kinds;
  }

  std::vector<std::uint32_t> raw(set.data.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    raw[i] = to_little_endian(std::bit_cast<std::uint32_t>(set.data[i]));
  }
  const fs::path blob_path = dir / kBlobName;
  {
    std::ofstream blob(blob_path, std::ios::binary | std::ios::trunc);
    blob.write(reinterpret_cast<const char*>(raw.data()),
               static_cast<std::streamsize>(raw.size() * sizeof(std::uint32_t)));
    if (!blob) throw_io("failed writing " + blob_path.string());
  }
  const fs::path manifest_path = dir / "manifest.json";
  std::ofstream out(manifest_path, std::ios::trunc);
  out << manifest.dump(2) << '\n';
  if (!out) throw_io("failed writing " + manifest_path.string());
  return manifest_path;
}

}  // namespace btsc
