#include "btsc/model_io.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "btsc/error.hpp"

namespace btsc {

using nlohmann::json;

namespace {

[[noreturn]] void corrupt(const std::string& detail) { throw_data("corrupt model file: " + detail); }

std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xFFu) << (8 * (7 - i));
    return r;
  }
  return v;
}

json encode_vector(const Eigen::VectorXd& v) {
  return encode_doubles(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

Eigen::VectorXd decode_vector(const json& node, Eigen::Index expected) {
  const auto values = decode_doubles(node.get<std::string>());
  if (static_cast<Eigen::Index>(values.size()) != expected) corrupt("array length mismatch");
  return Eigen::Map<const Eigen::VectorXd>(values.data(), expected);
}

}  // namespace

std::string encode_doubles(std::span<const double> values) {
  std::string bytes(values.size() * sizeof(std::uint64_t), '\0');
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::uint64_t le = to_little_endian(std::bit_cast<std::uint64_t>(values[i]));
    for (int b = 0; b < 8; ++b) bytes[i * 8 + static_cast<std::size_t>(b)] = static_cast<char>((le >> (8 * b)) & 0xFFu);
  }
  std::string out(4 * ((bytes.size() + 2) / 3) + 1, '\0');
  const int written = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                      reinterpret_cast<const unsigned char*>(bytes.data()),
                                      static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(written));
  return out;
}

std::vector<double> decode_doubles(std::string_view text) {
  if (text.size() % 4 != 0) corrupt("base64 length is not a multiple of 4");
  std::string bytes(3 * (text.size() / 4), '\0');
  const int written = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(bytes.data()),
                                      reinterpret_cast<const unsigned char*>(text.data()),
                                      static_cast<int>(text.size()));
  if (written < 0) corrupt("invalid base64 payload");
  // EVP_DecodeBlock keeps the zero bytes produced by '=' padding.
  std::size_t padding = 0;
  if (!text.empty() && text.back() == '=') ++padding;
  if (text.size() > 1 && text[text.size() - 2] == '=') ++padding;
  const std::size_t length = static_cast<std::size_t>(written) - padding;
  if (length % 8 != 0) corrupt("payload is not a whole number of doubles");
  std::vector<double> values(length / 8);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint64_t le = 0;
    for (int b = 0; b < 8; ++b) {
      le |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i * 8 + static_cast<std::size_t>(b)])) << (8 * b);
    }
    values[i] = std::bit_cast<double>(to_little_endian(le));
  }
  return values;
}

json model_to_json(const EnsembleModel& model) {
  json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["rule"] = std::string(to_string(model.rule()));
  doc["num_classes"] = model.num_classes();
  json members = json::array();
  for (const auto& m : model.members()) {
    json member;
    member["channel"] = m.channel;
    member["kind"] = std::string(to_string(m.kind));
    member["d_minimal"] = m.d_minimal;
    member["input_dim"] = m.input_dim;
    member["cv_curve"] = encode_doubles(m.cv_curve);
    member["shrinkage"] = m.model.shrinkage();
    member["log_prior"] = encode_vector(m.model.log_prior());
    json classes = json::array();
    for (const auto& g : m.model.classes()) {
      json c;
      c["mean"] = encode_vector(g.mean);
      c["cov"] = encode_doubles(std::span<const double>(g.cov.data(), static_cast<std::size_t>(g.cov.size())));
      c["jitter"] = g.jitter;
      classes.push_back(std::move(c));
    }
    member["classes"] = std::move(classes);
    members.push_back(std::move(member));
  }
  doc["members"] = std::move(members);
  json trace = json::array();
  for (const auto& s : model.trace()) {
    trace.push_back({{"candidate", s.candidate},
                     {"channel", s.channel},
                     {"kind", std::string(to_string(s.kind))},
                     {"d_minimal", s.d_minimal},
                     {"cv_accuracy", s.cv_accuracy}});
  }
  doc["trace"] = std::move(trace);
  return doc;
}

EnsembleModel model_from_json(const json& doc) {
  try {
    if (!doc.is_object()) corrupt("top level is not an object");
    const int version = doc.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw_data("unsupported version: model format_version " + std::to_string(version));
    }
    const auto rule = parse_combination_rule(doc.at("rule").get<std::string>());
    const int k = doc.at("num_classes").get<int>();
    std::vector<ChannelClassifier> members;
    for (const auto& member : doc.at("members")) {
      const int d = member.at("d_minimal").get<int>();
      std::vector<ClassGaussian> classes;
      for (const auto& c : member.at("classes")) {
        Eigen::VectorXd mean = decode_vector(c.at("mean"), d);
        const Eigen::VectorXd flat = decode_vector(c.at("cov"), static_cast<Eigen::Index>(d) * d);
        Eigen::MatrixXd cov = Eigen::Map<const Eigen::MatrixXd>(flat.data(), d, d);
        classes.push_back(make_class_gaussian(std::move(mean), std::move(cov), c.at("jitter").get<double>()));
      }
      if (static_cast<int>(classes.size()) != k) corrupt("class count mismatch");
      GaussianClassModel model(std::move(classes), decode_vector(member.at("log_prior"), k),
                               member.at("shrinkage").get<double>());
      members.push_back(ChannelClassifier{member.at("channel").get<std::string>(),
                                          parse_feature_kind(member.at("kind").get<std::string>()), d,
                                          member.at("input_dim").get<int>(),
                                          decode_doubles(member.at("cv_curve").get<std::string>()),
                                          std::move(model)});
    }
    std::vector<SelectionStep> trace;
    for (const auto& s : doc.at("trace")) {
      trace.push_back(SelectionStep{s.at("candidate").get<std::size_t>(), s.at("channel").get<std::string>(),
                                    parse_feature_kind(s.at("kind").get<std::string>()),
                                    s.at("d_minimal").get<int>(), s.at("cv_accuracy").get<double>()});
    }
    return EnsembleModel(std::move(members), rule, std::move(trace));
  } catch (const json::exception& e) {
    corrupt(e.what());
  }
}

void save_model(const EnsembleModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw_io("cannot write model file " + path.string());
  out << model_to_json(model).dump(2) << '\n';
  if (!out) throw_io("failed writing model file " + path.string());
}

EnsembleModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw_io("model file not found: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buffer.str());
  } catch (const json::exception& e) {
    corrupt(e.what());
  }
  return model_from_json(doc);
}

}  // namespace btsc
