#include <doctest.h>

#include <cstdlib>
#include <sys/wait.h>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "btsc/cli.hpp"
#include "btsc/synth.hpp"
#include "btsc/trial_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("btsc_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_json(const fs::path& p, const json& doc) { std::ofstream(p) << doc.dump(2); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int run_cli(std::vector<std::string> args, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int code = btsc::cli::run(args, out, err);
  if (err_text) *err_text = err.str();
  return code;
}

json spec_with_seed(std::uint64_t seed) {
  json doc = json::parse(R"({
    "mode": "features", "num_classes": 2, "trials_per_class": 40, "feature_dim": 4,
    "channels": [{"name": "sig", "kind": "ERP", "mean_shift": 4.0}],
    "noise_channels": {"count": 2, "kind": "HGP"}
  })");
  doc["seed"] = seed;
  return doc;
}

}  // namespace

TEST_CASE("synth then fit-eval on separable data") {
  const auto dir = scratch("fit");
  write_json(dir / "spec.json", spec_with_seed(3));
  REQUIRE(run_cli({"synth", "--config", (dir / "spec.json").string(), "--out", (dir / "data").string()}) == 0);
  CHECK(fs::exists(dir / "data" / "manifest.json"));
  CHECK_FALSE(fs::exists(dir / "data" / ".partial"));

  write_json(dir / "run.json", json{{"dataset", "data"}, {"seed", 5}, {"time_curve", true}, {"dump_features", true}});
  REQUIRE(run_cli({"fit-eval", "--config", (dir / "run.json").string(), "--out", (dir / "out1").string()}) == 0);
  for (const char* f : {"report.json", "tables.csv", "trace.csv", "curve.svg", "model.json", "features.csv"}) {
    CHECK(fs::exists(dir / "out1" / f));
  }
  CHECK_FALSE(fs::exists(dir / "out1" / ".partial"));
  const json report = json::parse(slurp(dir / "out1" / "report.json"));
  CHECK(report.at("accuracy_mean").get<double>() >= 0.95);
  CHECK(report.at("folds").size() == 5);
  CHECK(report.at("config").at("f1_average") == "macro");

  REQUIRE(run_cli({"fit-eval", "--config", (dir / "run.json").string(), "--out", (dir / "out2").string()}) == 0);
  CHECK(slurp(dir / "out1" / "report.json") == slurp(dir / "out2" / "report.json"));

  // --seed overrides the config and is echoed.
  REQUIRE(run_cli({"fit-eval", "--config", (dir / "run.json").string(), "--out", (dir / "out3").string(), "--seed", "9"}) == 0);
  CHECK(json::parse(slurp(dir / "out3" / "report.json")).at("config").at("seed") == 9);

  REQUIRE(run_cli({"report", "--config", (dir / "out1" / "report.json").string(), "--out", (dir / "rendered").string()}) == 0);
  CHECK(slurp(dir / "rendered" / "tables.csv") == slurp(dir / "out1" / "tables.csv"));
  CHECK(slurp(dir / "rendered" / "curve.svg") == slurp(dir / "out1" / "curve.svg"));
}

TEST_CASE("synth is reproducible and bad specs fail with I/O codes") {
  const auto dir = scratch("synth");
  write_json(dir / "spec.json", spec_with_seed(11));
  REQUIRE(run_cli({"synth", "--config", (dir / "spec.json").string(), "--out", (dir / "a").string()}) == 0);
  REQUIRE(run_cli({"synth", "--config", (dir / "spec.json").string(), "--out", (dir / "b").string()}) == 0);
  CHECK(slurp(dir / "a" / "data.f32") == slurp(dir / "b" / "data.f32"));
  REQUIRE(run_cli({"synth", "--config", (dir / "spec.json").string(), "--out", (dir / "c").string(), "--seed", "12"}) == 0);
  CHECK(slurp(dir / "a" / "data.f32") != slurp(dir / "c" / "data.f32"));

  std::ofstream(dir / "bad.json") << "{ \"mode\": ";
  CHECK(run_cli({"synth", "--config", (dir / "bad.json").string(), "--out", (dir / "d").string()}) == 2);
}

TEST_CASE("exit codes") {
  const auto dir = scratch("codes");
  std::string err;
  CHECK(run_cli({"bogus"}) == 1);
  CHECK(run_cli({"fit-eval", "--out", (dir / "x").string()}) == 1);

  write_json(dir / "pre.json", json{{"dataset", "missing/manifest.json"}});
  CHECK(run_cli({"preprocess", "--config", (dir / "pre.json").string(), "--out", (dir / "p").string()}, &err) == 2);
  CHECK(err.find("manifest not found") != std::string::npos);

  // Class 1 has only 4 trials: 5 folds cannot be stratified.
  btsc::synth::SynthSpec spec;
  spec.trials_per_class = 4;
  spec.feature_dim = 3;
  spec.channels.push_back(btsc::synth::make_channel("a", btsc::FeatureKind::ERP, 2, 3, 1.0));
  auto set = btsc::synth::generate_dataset(spec);
  for (int i = 0; i < 4; ++i) {
    set.labels.push_back(0);
    ++set.n_trials;
    set.data.insert(set.data.end(), set.data.begin(), set.data.begin() + 3);
  }
  btsc::save_dataset(set, dir / "small");
  write_json(dir / "run.json", json{{"dataset", "small"}, {"k_folds", 5}});
  CHECK(run_cli({"fit-eval", "--config", (dir / "run.json").string(), "--out", (dir / "o").string()}) == 3);
  // The failed run leaves its marker behind.
  CHECK(fs::exists(dir / "o" / ".partial"));

  write_json(dir / "k1.json", json{{"dataset", "small"}, {"k_folds", 1}});
  CHECK(run_cli({"fit-eval", "--config", (dir / "k1.json").string(), "--out", (dir / "o1").string()}) == 1);
  write_json(dir / "rule.json", json{{"dataset", "small"}, {"rule", "borda"}});
  CHECK(run_cli({"fit-eval", "--config", (dir / "rule.json").string(), "--out", (dir / "o2").string()}) == 1);
}

TEST_CASE("preprocess records four steps in order") {
  const auto dir = scratch("pre");
  btsc::synth::SynthSpec spec;
  spec.mode = btsc::synth::Mode::Raw;
  spec.trials_per_class = 3;
  spec.feature_dim = 6;
  spec.raw.fs = 2000.0;
  spec.raw.pre_onset_s = 0.2;
  spec.raw.post_window_s = 0.2;
  for (const char* n : {"c0", "c1", "c2"}) {
    spec.channels.push_back(btsc::synth::make_channel(n, btsc::FeatureKind::ERP, 2, 6, 1.0));
  }
  btsc::save_dataset(btsc::synth::generate_dataset(spec), dir / "raw");
  write_json(dir / "pre.json", json{{"dataset", "raw"}, {"decimate_hz", 1000}, {"line_hz", 60}});
  REQUIRE(run_cli({"preprocess", "--config", (dir / "pre.json").string(), "--out", (dir / "clean").string()}) == 0);
  const json prov = json::parse(slurp(dir / "clean" / "provenance.json"));
  REQUIRE(prov.at("steps").size() == 4);
  CHECK(prov["steps"][0]["step"] == "decimate");
  CHECK(prov["steps"][1]["step"] == "demean");
  CHECK(prov["steps"][2]["step"] == "line_noise");
  CHECK(prov["steps"][3]["step"] == "bipolar_rereference");
  CHECK(prov["warnings"].empty());
  const auto out = btsc::load_dataset(dir / "clean" / "manifest.json");
  CHECK(out.fs == 1000.0);
  CHECK(out.n_channels == 2);
  CHECK(out.channel_names[0] == "c0-c1");

  write_json(dir / "low.json", json{{"dataset", "raw"}, {"decimate_hz", 200}, {"line_hz", 60}});
  REQUIRE(run_cli({"preprocess", "--config", (dir / "low.json").string(), "--out", (dir / "low").string()}) == 0);
  const json low = json::parse(slurp(dir / "low" / "provenance.json"));
  bool warned = false;
  for (const auto& w : low["warnings"]) warned |= w.get<std::string>().find("240 Hz") != std::string::npos;
  CHECK(warned);
}

TEST_CASE("the btsc binary maps failures to exit codes") {
  const auto dir = scratch("binary");
  write_json(dir / "run.json", json{{"dataset", "nowhere"}});
  const std::string cmd = std::string("\"") + BTSC_CLI_PATH + "\" fit-eval --config \"" + (dir / "run.json").string() +
                          "\" --out \"" + (dir / "o").string() + "\" 2>/dev/null";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == 2);
  const std::string help = std::string("\"") + BTSC_CLI_PATH + "\" --help >/dev/null";
  CHECK(std::system(help.c_str()) == 0);
}
