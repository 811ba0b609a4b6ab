#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "btsc/cv.hpp"
#include "btsc/types.hpp"

namespace btsc {

inline constexpr double kDefaultShrinkage = 0.2;
inline constexpr int kMaxJitterDoublings = 10;

/// Mean and regularized covariance of one class, with the lower Cholesky
/// factor used for every density evaluation.
struct ClassGaussian {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  Eigen::MatrixXd chol;  // lower triangular, cov = chol * chol^T
  double log_det = 0.0;
  double jitter = 0.0;   // diagonal added to reach positive definiteness
};

// Sample mean and shrunk covariance of an n x d sample matrix:
//   cov = (1 - shrinkage) * S + shrinkage * (tr(S) / d) * I
// where S is the unbiased sample covariance. When the Cholesky factorization
// fails, a diagonal jitter starting at 1e-8 * tr(S)/d (1e-8 if S vanishes)
// is added and doubled up to kMaxJitterDoublings times.
ClassGaussian fit_class_gaussian(const Eigen::MatrixXd& samples, double shrinkage);

// Rebuilds the Cholesky factor of a stored covariance.
ClassGaussian make_class_gaussian(Eigen::VectorXd mean, Eigen::MatrixXd cov, double jitter = 0.0);

enum class PriorMode { Empirical, Uniform };

struct FitOptions {
  double shrinkage = kDefaultShrinkage;
  PriorMode prior = PriorMode::Empirical;
};

/// Per-class multivariate normal classifier over a length-d feature vector.
/// Immutable once built.
class GaussianClassModel {
 public:
  GaussianClassModel(std::vector<ClassGaussian> classes, Eigen::VectorXd log_prior, double shrinkage);

  static GaussianClassModel fit(const Eigen::MatrixXd& samples, std::span<const int> labels,
                                int num_classes, const FitOptions& options = {});

  int num_classes() const { return static_cast<int>(classes_.size()); }
  int dim() const { return static_cast<int>(classes_.front().mean.size()); }
  double shrinkage() const { return shrinkage_; }
  const Eigen::VectorXd& log_prior() const { return log_prior_; }
  const ClassGaussian& klass(int c) const { return classes_.at(static_cast<std::size_t>(c)); }
  const std::vector<ClassGaussian>& classes() const { return classes_; }

  // ln p(x | class) via the Cholesky factor.
  double log_density(const Eigen::Ref<const Eigen::VectorXd>& x, int cls) const;
  Eigen::VectorXd log_likelihoods(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  // Unnormalized log posterior: log-likelihood plus log prior.
  Eigen::VectorXd posterior_log_scores(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  int predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  // Distribution of the first `horizon` features.
  GaussianClassModel marginalize(int horizon) const;

 private:
  void check_input(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  std::vector<ClassGaussian> classes_;
  Eigen::VectorXd log_prior_;
  double shrinkage_ = 0.0;
};

// Index of the largest entry; exact ties go to the smallest index.
int argmax_first(const Eigen::Ref<const Eigen::VectorXd>& scores);

// Log class frequencies (or uniform) from training labels.
Eigen::VectorXd class_log_prior(std::span<const int> labels, int num_classes, PriorMode mode);

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& m, std::span<const std::size_t> rows);
std::vector<int> select_labels(std::span<const int> labels, std::span<const std::size_t> rows);

struct HorizonSelection {
  int d_minimal = 1;
  std::vector<double> curve;  // curve[j-1] = mean held-out accuracy using the first j features
};

// Cross-validated accuracy for every horizon j = 1..d. Each fold fits the
// full-length model on its training part and marginalizes it to each j.
HorizonSelection select_minimal_horizon(const Eigen::MatrixXd& samples, std::span<const int> labels,
                                        int num_classes, std::span<const Fold> folds,
                                        const FitOptions& options = {});
HorizonSelection select_minimal_horizon(const Eigen::MatrixXd& samples, std::span<const int> labels,
                                        int num_classes, int k_folds, std::uint64_t seed,
                                        const FitOptions& options = {});

/// A single-channel classifier: the model restricted to its minimal horizon.
struct ChannelClassifier {
  std::string channel;
  FeatureKind kind = FeatureKind::ERP;
  int d_minimal = 1;
  int input_dim = 1;
  std::vector<double> cv_curve;
  GaussianClassModel model;  // dim() == d_minimal

  Eigen::VectorXd log_likelihoods(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd posterior_log_scores(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  int predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

// Selects the horizon on `folds`, then fits on every row and marginalizes.
ChannelClassifier fit_channel_classifier(std::string channel, FeatureKind kind,
                                         const Eigen::MatrixXd& samples, std::span<const int> labels,
                                         int num_classes, std::span<const Fold> folds,
                                         const FitOptions& options = {});

}  // namespace btsc
