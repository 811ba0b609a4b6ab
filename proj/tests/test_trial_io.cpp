#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include <nlohmann/json.hpp>

#include "btsc/error.hpp"
#include "btsc/eval.hpp"
#include "btsc/model_io.hpp"
#include "btsc/synth.hpp"
#include "btsc/trial_io.hpp"
#include "oracles.hpp"

using namespace btsc;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("btsc_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TrialSet sample_set() {
  TrialSet s;
  s.n_trials = 4;
  s.n_channels = 2;
  s.n_samples = 100;
  s.fs = 500.0;
  s.labels = {0, 0, 1, 1};
  s.num_classes = 2;
  s.channel_names = {"LA1", "LA2"};
  s.t0_index = 20;
  s.data.resize(800);
  std::mt19937 rng(4);
  std::uniform_real_distribution<float> u(-5.0f, 5.0f);
  for (auto& v : s.data) v = u(rng);
  s.data[7] = -0.0f;
  s.data[8] = 1e-38f;
  return s;
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Usage;
}

std::string message_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream(p, std::ios::binary) << s;
}

}  // namespace

TEST_CASE("dataset round trip is bit-exact") {
  const auto dir = scratch("roundtrip");
  const auto s = sample_set();
  const auto manifest = save_dataset(s, dir);
  CHECK(manifest == dir / "manifest.json");
  const auto back = load_dataset(manifest);
  CHECK(back.n_trials == 4);
  CHECK(back.n_channels == 2);
  CHECK(back.n_samples == 100);
  CHECK(back.fs == s.fs);
  CHECK(back.labels == s.labels);
  CHECK(back.channel_names == s.channel_names);
  CHECK(back.t0_index == s.t0_index);
  REQUIRE(back.data.size() == s.data.size());
  CHECK(std::memcmp(back.data.data(), s.data.data(), s.data.size() * sizeof(float)) == 0);
}

TEST_CASE("feature-content datasets round trip") {
  synth::SynthSpec spec;
  spec.trials_per_class = 5;
  spec.feature_dim = 6;
  spec.seed = 3;
  spec.channels.push_back(synth::make_channel("x", FeatureKind::HGP, 2, 6, 1.0));
  const auto set = synth::generate_dataset(spec);
  CHECK(set.content == DataContent::Features);
  const auto dir = scratch("features");
  const auto back = load_dataset(save_dataset(set, dir));
  CHECK(back.content == DataContent::Features);
  CHECK(back.feature_kinds == set.feature_kinds);
  CHECK(back.window_s == set.window_s);
  const auto bank = bank_from_feature_set(back);
  CHECK(bank.dim() == 6);
  CHECK(bank.blocks[0].kind == FeatureKind::HGP);
}

TEST_CASE("loader diagnostics") {
  const auto dir = scratch("diag");
  const auto manifest = save_dataset(sample_set(), dir);

  CHECK(kind_of([&] { load_dataset(dir / "nope.json"); }) == ErrorKind::Io);
  CHECK(message_of([&] { load_dataset(dir / "nope.json"); }).find("manifest not found") != std::string::npos);

  fs::resize_file(dir / "data.f32", 799 * sizeof(float));
  CHECK(kind_of([&] { load_dataset(manifest); }) == ErrorKind::Data);
  CHECK(message_of([&] { load_dataset(manifest); }).find("size mismatch") != std::string::npos);

  const auto dir2 = scratch("diag2");
  auto s = sample_set();
  s.labels = {0, 0, 0, 1};
  CHECK(message_of([&] { save_dataset(s, dir2); }).find("insufficient trials per class") != std::string::npos);
  // A hand-written manifest with the same labels is rejected on load.
  const auto good = save_dataset(sample_set(), dir2);
  auto doc = nlohmann::json::parse(std::ifstream(good));
  doc["labels"] = {0, 0, 0, 1};
  write_text(good, doc.dump());
  CHECK(message_of([&] { load_dataset(good); }).find("insufficient trials per class") != std::string::npos);
  doc["labels"] = {0, 0, 1, 5};
  doc["num_classes"] = 2;
  write_text(good, doc.dump());
  CHECK(message_of([&] { load_dataset(good); }).find("label out of range") != std::string::npos);

  write_text(good, "{ not json");
  CHECK(kind_of([&] { load_dataset(good); }) == ErrorKind::Io);
}

TEST_CASE("validation rejects empty and non-finite sets") {
  TrialSet empty;
  CHECK(message_of([&] { validate(empty); }).find("empty dataset") != std::string::npos);
  auto s = sample_set();
  s.data[123] = std::numeric_limits<float>::quiet_NaN();
  CHECK(message_of([&] { validate(s); }).find("non-finite sample") != std::string::npos);
  s.data[123] = std::numeric_limits<float>::infinity();
  CHECK(kind_of([&] { validate(s); }) == ErrorKind::Data);
  CHECK(infer_num_classes(std::vector<int>{0, 2, 1}) == 3);
}

TEST_CASE("base64 doubles restore exact bits") {
  for (std::size_t n : {0u, 1u, 2u, 3u, 7u}) {
    std::vector<double> v;
    for (std::size_t i = 0; i < n; ++i) v.push_back(std::ldexp(1.0 + static_cast<double>(i) / 3.0, static_cast<int>(i) * 37 - 100));
    if (n > 2) v[2] = -0.0;
    const auto back = decode_doubles(encode_doubles(v));
    REQUIRE(back.size() == v.size());
    CHECK(std::memcmp(back.data(), v.data(), v.size() * sizeof(double)) == 0);
  }
  CHECK_THROWS_AS(decode_doubles("abc"), Error);
}

TEST_CASE("model round trip and corrupt files") {
  synth::SynthSpec spec;
  spec.trials_per_class = 30;
  spec.feature_dim = 4;
  spec.seed = 12;
  spec.channels.push_back(synth::make_channel("a", FeatureKind::ERP, 2, 4, 1.0));
  spec.channels.push_back(synth::make_channel("b", FeatureKind::HGP, 2, 4, 0.7, {2, 3}));
  const auto bank = synth::generate_features(spec);
  PipelineConfig cfg;
  cfg.seed = 4;
  const auto model = train_pipeline(bank, cfg, cfg.seed).ensemble;

  const auto dir = scratch("model");
  const auto path = dir / "model.json";
  save_model(model, path);
  const auto back = load_model(path);
  REQUIRE(back.members().size() == model.members().size());
  CHECK(back.rule() == model.rule());
  std::mt19937_64 rng(1);
  for (int s = 0; s < 10; ++s) {
    std::vector<Eigen::VectorXd> in;
    for (std::size_t m = 0; m < model.members().size(); ++m) in.push_back(oracle::random_vector(4, rng, 2.0));
    const auto a = model.decide(in);
    const auto b = back.decide(in);
    CHECK(a.label == b.label);
    CHECK(a.scores == b.scores);
  }
  for (std::size_t m = 0; m < model.members().size(); ++m) {
    CHECK(back.members()[m].d_minimal == model.members()[m].d_minimal);
    CHECK(back.members()[m].model.klass(1).cov == model.members()[m].model.klass(1).cov);
  }

  std::ifstream in(path);
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto truncated = dir / "truncated.json";
  write_text(truncated, text.substr(0, text.size() / 2));
  CHECK(message_of([&] { load_model(truncated); }).find("corrupt model file") != std::string::npos);

  auto doc = nlohmann::json::parse(text);
  doc["format_version"] = kModelFormatVersion + 1;
  const auto future = dir / "future.json";
  write_text(future, doc.dump());
  CHECK(message_of([&] { load_model(future); }).find("unsupported version") != std::string::npos);

  CHECK(kind_of([&] { load_model(dir / "missing.json"); }) == ErrorKind::Io);
}
