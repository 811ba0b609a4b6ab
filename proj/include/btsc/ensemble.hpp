#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "btsc/cv.hpp"
#include "btsc/features.hpp"
#include "btsc/gaussian_model.hpp"
#include "btsc/types.hpp"

namespace btsc {

inline constexpr int kDefaultMaxMembers = 20;

struct CombinedDecision {
  int label = 0;
  Eigen::VectorXd scores;
};

// Conditionally independent members: sum of member log-likelihoods plus the
// log prior, applied once.
CombinedDecision combine_likelihood(std::span<const Eigen::VectorXd> member_log_likelihoods,
                                    const Eigen::VectorXd& log_prior);

// Plurality vote. Ties between the top classes go to the class with the
// larger summed member log posterior, then to the smallest index.
int combine_voting(std::span<const int> predictions, std::span<const Eigen::VectorXd> member_log_scores);

struct SelectionStep {
  std::size_t candidate = 0;  // index into the candidate list given to greedy_select
  std::string channel;
  FeatureKind kind = FeatureKind::ERP;
  int d_minimal = 1;
  double cv_accuracy = 0.0;
};

class EnsembleModel {
 public:
  EnsembleModel(std::vector<ChannelClassifier> members, CombinationRule rule,
                std::vector<SelectionStep> trace = {});

  const std::vector<ChannelClassifier>& members() const { return members_; }
  CombinationRule rule() const { return rule_; }
  const std::vector<SelectionStep>& trace() const { return trace_; }
  int num_classes() const { return members_.front().model.num_classes(); }
  const Eigen::VectorXd& log_prior() const { return members_.front().model.log_prior(); }

  // member_inputs[i] is the feature vector for members()[i].
  CombinedDecision decide(std::span<const Eigen::VectorXd> member_inputs) const;
  int predict(std::span<const Eigen::VectorXd> member_inputs) const;

  // Predicts every trial of a bank, matching members to blocks by (channel, kind).
  std::vector<int> predict(const FeatureBank& bank) const;

 private:
  std::vector<ChannelClassifier> members_;
  CombinationRule rule_;
  std::vector<SelectionStep> trace_;
};

struct GreedyOptions {
  CombinationRule rule = CombinationRule::Likelihood;
  int max_members = kDefaultMaxMembers;
  FitOptions fit;
  int threads = 1;
};

// Held-out log-likelihoods of every candidate on every fold, computed once
// so that any subset can be scored by combination alone.
class CandidateFoldScores {
 public:
  CandidateFoldScores(std::span<const ChannelClassifier> candidates, const FeatureBank& bank,
                      std::span<const Fold> folds, const FitOptions& fit, int threads = 1);

  std::size_t num_candidates() const { return loglik_.size(); }

  // Mean over folds of the held-out accuracy of `subset` combined by `rule`.
  double subset_accuracy(std::span<const std::size_t> subset, CombinationRule rule) const;

 private:
  std::vector<std::vector<Eigen::MatrixXd>> loglik_;  // [candidate][fold] n_test x K
  std::vector<Eigen::VectorXd> log_prior_;           // [fold]
  std::vector<std::vector<int>> test_labels_;        // [fold]
};

// Forward greedy subset search: start from the best single candidate, then
// repeatedly add the candidate whose addition gives the highest CV accuracy,
// as long as it strictly improves on the current subset.
EnsembleModel greedy_select(std::span<const ChannelClassifier> candidates, const FeatureBank& bank,
                            std::span<const Fold> folds, const GreedyOptions& options = {});
EnsembleModel greedy_select(std::span<const ChannelClassifier> candidates, const FeatureBank& bank,
                            int k_folds, std::uint64_t seed, const GreedyOptions& options = {});

// Index of the bank block for (channel, kind); throws if absent.
std::size_t find_block(const FeatureBank& bank, const std::string& channel, FeatureKind kind);

// Columns: round,channel,kind,d_minimal,cv_accuracy
void write_trace_csv(std::span<const SelectionStep> trace, std::ostream& out);

}  // namespace btsc
