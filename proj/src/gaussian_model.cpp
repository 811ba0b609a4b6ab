#include "btsc/gaussian_model.hpp"

#include <cmath>
#include <numbers>

#include "btsc/error.hpp"

namespace btsc {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

bool try_cholesky(const Eigen::MatrixXd& cov, Eigen::MatrixXd& lower) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) return false;
  lower = llt.matrixL();
  for (Eigen::Index i = 0; i < lower.rows(); ++i) {
    if (!(lower(i, i) > 0.0) || !std::isfinite(lower(i, i))) return false;
  }
  return true;
}

double log_det_from_chol(const Eigen::MatrixXd& lower) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < lower.rows(); ++i) sum += std::log(lower(i, i));
  return 2.0 * sum;
}

}  // namespace

ClassGaussian fit_class_gaussian(const Eigen::MatrixXd& samples, double shrinkage) {
  const Eigen::Index n = samples.rows();
  const Eigen::Index d = samples.cols();
  if (n < 2) throw_data("fitting a class covariance needs at least 2 samples");
  if (d < 1) throw_data("fitting a class covariance needs at least one feature");
  if (!(shrinkage >= 0.0 && shrinkage <= 1.0)) throw_data("shrinkage must lie in [0, 1]");
  if (!samples.allFinite()) throw_data("non-finite training sample");

  // Entry-wise sums so that the leading sub-block of a fit over d features
  // is bit-identical to a fit over those features alone.
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (Eigen::Index a = 0; a < d; ++a) {
    double s = 0.0;
    for (Eigen::Index r = 0; r < n; ++r) s += samples(r, a);
    mean(a) = s / static_cast<double>(n);
  }
  Eigen::MatrixXd centered = samples.rowwise() - mean.transpose();
  Eigen::MatrixXd sample_cov(d, d);
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = 0; b <= a; ++b) {
      double s = 0.0;
      for (Eigen::Index r = 0; r < n; ++r) s += centered(r, a) * centered(r, b);
      sample_cov(a, b) = sample_cov(b, a) = s / static_cast<double>(n - 1);
    }
  }

  const double scale = sample_cov.trace() / static_cast<double>(d);
  Eigen::MatrixXd cov = (1.0 - shrinkage) * sample_cov;
  if (shrinkage > 0.0) cov.diagonal().array() += shrinkage * scale;

  ClassGaussian g;
  g.mean = std::move(mean);
  if (try_cholesky(cov, g.chol)) {
    g.cov = std::move(cov);
    g.log_det = log_det_from_chol(g.chol);
    return g;
  }

  double jitter = 1e-8 * (scale > 0.0 ? scale : 1.0);
  for (int step = 0; step <= kMaxJitterDoublings; ++step, jitter *= 2.0) {
    Eigen::MatrixXd repaired = cov;
    repaired.diagonal().array() += jitter;
    if (try_cholesky(repaired, g.chol)) {
      g.cov = std::move(repaired);
      g.jitter = jitter;
      g.log_det = log_det_from_chol(g.chol);
      return g;
    }
  }
  throw_numerical("covariance not positive definite after maximum jitter");
}

ClassGaussian make_class_gaussian(Eigen::VectorXd mean, Eigen::MatrixXd cov, double jitter) {
  if (mean.size() < 1 || cov.rows() != mean.size() || cov.cols() != mean.size()) {
    throw_data("class gaussian dimension mismatch");
  }
  if (!mean.allFinite() || !cov.allFinite()) throw_data("non-finite class parameters");
  ClassGaussian g;
  if (!try_cholesky(cov, g.chol)) throw_numerical("covariance is not positive definite");
  g.mean = std::move(mean);
  g.cov = std::move(cov);
  g.jitter = jitter;
  g.log_det = log_det_from_chol(g.chol);
  return g;
}

GaussianClassModel::GaussianClassModel(std::vector<ClassGaussian> classes, Eigen::VectorXd log_prior,
                                       double shrinkage)
    : classes_(std::move(classes)), log_prior_(std::move(log_prior)), shrinkage_(shrinkage) {
  if (classes_.empty()) throw_data("model needs at least one class");
  if (log_prior_.size() != static_cast<Eigen::Index>(classes_.size())) {
    throw_data("log prior length does not match class count");
  }
  const auto d = classes_.front().mean.size();
  for (const auto& c : classes_) {
    if (c.mean.size() != d || c.chol.rows() != d) throw_data("classes differ in feature length");
  }
  if (std::abs(log_prior_.array().exp().sum() - 1.0) > 1e-9) throw_data("class priors must sum to 1");
}

Eigen::VectorXd class_log_prior(std::span<const int> labels, int num_classes, PriorMode mode) {
  Eigen::VectorXd prior(num_classes);
  if (mode == PriorMode::Uniform) {
    prior.setConstant(-std::log(static_cast<double>(num_classes)));
    return prior;
  }
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(num_classes);
  for (int y : labels) counts(y) += 1.0;
  for (int c = 0; c < num_classes; ++c) {
    prior(c) = std::log(counts(c) / static_cast<double>(labels.size()));
  }
  return prior;
}

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& m, std::span<const std::size_t> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = m.row(static_cast<Eigen::Index>(rows[r]));
  }
  return out;
}

std::vector<int> select_labels(std::span<const int> labels, std::span<const std::size_t> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(labels[r]);
  return out;
}

GaussianClassModel GaussianClassModel::fit(const Eigen::MatrixXd& samples, std::span<const int> labels,
                                           int num_classes, const FitOptions& options) {
  if (static_cast<std::size_t>(samples.rows()) != labels.size()) {
    throw_data("sample rows do not match label count");
  }
  if (num_classes < 1) throw_data("num_classes must be at least 1");
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes) throw_data("label out of range");
    members[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  std::vector<ClassGaussian> classes;
  classes.reserve(members.size());
  for (std::size_t c = 0; c < members.size(); ++c) {
    if (members[c].size() < 2) {
      throw_data("insufficient trials per class: class " + std::to_string(c) + " has " +
                 std::to_string(members[c].size()) + " training samples");
    }
    classes.push_back(fit_class_gaussian(select_rows(samples, members[c]), options.shrinkage));
  }
  return {std::move(classes), class_log_prior(labels, num_classes, options.prior), options.shrinkage};
}

void GaussianClassModel::check_input(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != dim()) {
    throw_data("dimension mismatch: model expects " + std::to_string(dim()) + " features, got " +
               std::to_string(x.size()));
  }
}

double GaussianClassModel::log_density(const Eigen::Ref<const Eigen::VectorXd>& x, int cls) const {
  check_input(x);
  const ClassGaussian& g = klass(cls);
  const Eigen::VectorXd z = g.chol.triangularView<Eigen::Lower>().solve(x - g.mean);
  return -0.5 * (static_cast<double>(dim()) * kLog2Pi + g.log_det + z.squaredNorm());
}

Eigen::VectorXd GaussianClassModel::log_likelihoods(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::VectorXd out(num_classes());
  for (int c = 0; c < num_classes(); ++c) out(c) = log_density(x, c);
  return out;
}

Eigen::VectorXd GaussianClassModel::posterior_log_scores(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return log_likelihoods(x) + log_prior_;
}

int GaussianClassModel::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return argmax_first(posterior_log_scores(x));
}

GaussianClassModel GaussianClassModel::marginalize(int horizon) const {
  if (horizon < 1 || horizon > dim()) {
    throw_data("horizon " + std::to_string(horizon) + " out of range [1, " + std::to_string(dim()) + "]");
  }
  std::vector<ClassGaussian> classes;
  classes.reserve(classes_.size());
  for (const auto& g : classes_) {
    classes.push_back(make_class_gaussian(g.mean.head(horizon), g.cov.topLeftCorner(horizon, horizon),
                                          g.jitter));
  }
  return {std::move(classes), log_prior_, shrinkage_};
}

int argmax_first(const Eigen::Ref<const Eigen::VectorXd>& scores) {
  int best = 0;
  for (Eigen::Index i = 1; i < scores.size(); ++i) {
    if (scores(i) > scores(best)) best = static_cast<int>(i);
  }
  return best;
}

HorizonSelection select_minimal_horizon(const Eigen::MatrixXd& samples, std::span<const int> labels,
                                        int num_classes, std::span<const Fold> folds,
                                        const FitOptions& options) {
  if (folds.empty()) throw_data("horizon selection needs at least one fold");
  const auto d = static_cast<int>(samples.cols());
  HorizonSelection result;
  result.curve.assign(static_cast<std::size_t>(d), 0.0);
  for (const Fold& fold : folds) {
    const auto train_y = select_labels(labels, fold.train);
    const GaussianClassModel full = GaussianClassModel::fit(select_rows(samples, fold.train), train_y,
                                                            num_classes, options);
    for (int j = 1; j <= d; ++j) {
      const GaussianClassModel model = j == d ? full : full.marginalize(j);
      std::size_t correct = 0;
      for (auto t : fold.test) {
        const Eigen::VectorXd x = samples.row(static_cast<Eigen::Index>(t)).head(j).transpose();
        correct += model.predict(x) == labels[t];
      }
      result.curve[static_cast<std::size_t>(j - 1)] +=
          static_cast<double>(correct) / static_cast<double>(fold.test.size());
    }
  }
  for (double& c : result.curve) c /= static_cast<double>(folds.size());
  result.d_minimal = 1;
  for (int j = 2; j <= d; ++j) {
    if (result.curve[static_cast<std::size_t>(j - 1)] > result.curve[static_cast<std::size_t>(result.d_minimal - 1)]) {
      result.d_minimal = j;
    }
  }
  return result;
}

HorizonSelection select_minimal_horizon(const Eigen::MatrixXd& samples, std::span<const int> labels,
                                        int num_classes, int k_folds, std::uint64_t seed,
                                        const FitOptions& options) {
  const auto folds = stratified_kfold(labels, k_folds, seed);
  return select_minimal_horizon(samples, labels, num_classes, folds, options);
}

Eigen::VectorXd ChannelClassifier::log_likelihoods(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() < d_minimal) throw_data("dimension mismatch: input shorter than classifier horizon");
  return model.log_likelihoods(x.head(d_minimal));
}

Eigen::VectorXd ChannelClassifier::posterior_log_scores(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return log_likelihoods(x) + model.log_prior();
}

int ChannelClassifier::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return argmax_first(posterior_log_scores(x));
}

ChannelClassifier fit_channel_classifier(std::string channel, FeatureKind kind,
                                         const Eigen::MatrixXd& samples, std::span<const int> labels,
                                         int num_classes, std::span<const Fold> folds,
                                         const FitOptions& options) {
  HorizonSelection selection = select_minimal_horizon(samples, labels, num_classes, folds, options);
  const GaussianClassModel full = GaussianClassModel::fit(samples, labels, num_classes, options);
  return ChannelClassifier{std::move(channel),
                           kind,
                           selection.d_minimal,
                           static_cast<int>(samples.cols()),
                           std::move(selection.curve),
                           full.marginalize(selection.d_minimal)};
}

}  // namespace btsc
