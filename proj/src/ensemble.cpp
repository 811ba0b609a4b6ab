#include "btsc/ensemble.hpp"

#include <algorithm>
#include <ostream>
#include <set>

#include "btsc/error.hpp"
#include "btsc/parallel.hpp"

namespace btsc {

namespace {

// Sum in sorted order, so the result does not depend on member order.
double ordered_sum(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  double sum = 0.0;
  for (double t : terms) sum += t;
  return sum;
}

}  // namespace

CombinedDecision combine_likelihood(std::span<const Eigen::VectorXd> member_log_likelihoods,
                                    const Eigen::VectorXd& log_prior) {
  if (member_log_likelihoods.empty()) throw_data("likelihood combination needs at least one member");
  for (const auto& ll : member_log_likelihoods) {
    if (ll.size() != log_prior.size()) throw_data("class count mismatch across ensemble members");
  }
  CombinedDecision out;
  out.scores.resize(log_prior.size());
  std::vector<double> terms(member_log_likelihoods.size());
  for (Eigen::Index c = 0; c < log_prior.size(); ++c) {
    for (std::size_t m = 0; m < terms.size(); ++m) terms[m] = member_log_likelihoods[m](c);
    out.scores(c) = ordered_sum(terms) + log_prior(c);
  }
  out.label = argmax_first(out.scores);
  return out;
}

int combine_voting(std::span<const int> predictions, std::span<const Eigen::VectorXd> member_log_scores) {
  if (predictions.empty()) throw_data("voting needs at least one member");
  if (member_log_scores.size() != predictions.size()) {
    throw_data("voting needs one score vector per prediction");
  }
  const auto k = member_log_scores.front().size();
  std::vector<int> votes(static_cast<std::size_t>(k), 0);
  for (std::size_t m = 0; m < predictions.size(); ++m) {
    if (member_log_scores[m].size() != k) throw_data("class count mismatch across ensemble members");
    if (predictions[m] < 0 || predictions[m] >= k) throw_data("vote for unknown class");
    ++votes[static_cast<std::size_t>(predictions[m])];
  }
  Eigen::VectorXd summed(k);
  std::vector<double> terms(predictions.size());
  for (Eigen::Index c = 0; c < k; ++c) {
    for (std::size_t m = 0; m < terms.size(); ++m) terms[m] = member_log_scores[m](c);
    summed(c) = ordered_sum(terms);
  }
  const int top = *std::max_element(votes.begin(), votes.end());
  int best = -1;
  for (Eigen::Index c = 0; c < k; ++c) {
    if (votes[static_cast<std::size_t>(c)] != top) continue;
    if (best < 0 || summed(c) > summed(best)) best = static_cast<int>(c);
  }
  return best;
}

EnsembleModel::EnsembleModel(std::vector<ChannelClassifier> members, CombinationRule rule,
                             std::vector<SelectionStep> trace)
    : members_(std::move(members)), rule_(rule), trace_(std::move(trace)) {
  if (members_.empty()) throw_data("ensemble needs at least one member");
  std::set<std::pair<std::string, FeatureKind>> seen;
  for (const auto& m : members_) {
    if (!seen.insert({m.channel, m.kind}).second) {
      throw_data("duplicate ensemble member " + m.channel + "/" + std::string(to_string(m.kind)));
    }
    if (m.model.num_classes() != members_.front().model.num_classes()) {
      throw_data("class count mismatch across ensemble members");
    }
  }
  for (std::size_t i = 1; i < trace_.size(); ++i) {
    if (trace_[i].cv_accuracy < trace_[i - 1].cv_accuracy) {
      throw_data("selection trace accuracies must be non-decreasing");
    }
  }
}

CombinedDecision EnsembleModel::decide(std::span<const Eigen::VectorXd> member_inputs) const {
  if (member_inputs.size() != members_.size()) throw_data("one input vector per ensemble member required");
  std::vector<Eigen::VectorXd> loglik;
  loglik.reserve(members_.size());
  for (std::size_t m = 0; m < members_.size(); ++m) {
    loglik.push_back(members_[m].log_likelihoods(member_inputs[m]));
  }
  if (rule_ == CombinationRule::Likelihood) return combine_likelihood(loglik, log_prior());

  std::vector<int> votes;
  std::vector<Eigen::VectorXd> posterior;
  for (std::size_t m = 0; m < members_.size(); ++m) {
    posterior.push_back(loglik[m] + members_[m].model.log_prior());
    votes.push_back(argmax_first(posterior.back()));
  }
  CombinedDecision out;
  out.label = combine_voting(votes, posterior);
  out.scores = Eigen::VectorXd::Zero(num_classes());
  for (int v : votes) out.scores(v) += 1.0;
  return out;
}

int EnsembleModel::predict(std::span<const Eigen::VectorXd> member_inputs) const {
  return decide(member_inputs).label;
}

std::vector<int> EnsembleModel::predict(const FeatureBank& bank) const {
  std::vector<std::size_t> blocks;
  for (const auto& m : members_) blocks.push_back(find_block(bank, m.channel, m.kind));
  std::vector<int> out(bank.n_trials());
  std::vector<Eigen::VectorXd> inputs(members_.size());
  for (std::size_t t = 0; t < bank.n_trials(); ++t) {
    for (std::size_t m = 0; m < members_.size(); ++m) {
      inputs[m] = bank.blocks[blocks[m]].values.row(static_cast<Eigen::Index>(t)).transpose();
    }
    out[t] = predict(inputs);
  }
  return out;
}

std::size_t find_block(const FeatureBank& bank, const std::string& channel, FeatureKind kind) {
  for (std::size_t b = 0; b < bank.blocks.size(); ++b) {
    if (bank.blocks[b].channel == channel && bank.blocks[b].kind == kind) return b;
  }
  throw_data("feature block " + channel + "/" + std::string(to_string(kind)) + " not found");
}

CandidateFoldScores::CandidateFoldScores(std::span<const ChannelClassifier> candidates,
                                         const FeatureBank& bank, std::span<const Fold> folds,
                                         const FitOptions& fit, int threads)
    : loglik_(candidates.size()) {
  if (folds.empty()) throw_data("candidate scoring needs at least one fold");
  for (const Fold& fold : folds) {
    const auto train_y = select_labels(bank.labels, fold.train);
    log_prior_.push_back(class_log_prior(train_y, bank.num_classes, fit.prior));
    test_labels_.push_back(select_labels(bank.labels, fold.test));
  }
  std::vector<std::size_t> block_of(candidates.size());
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    block_of[c] = find_block(bank, candidates[c].channel, candidates[c].kind);
  }
  parallel_for(candidates.size(), threads, [&](std::size_t c) {
    const Eigen::MatrixXd& x = bank.blocks[block_of[c]].values;
    const int horizon = candidates[c].d_minimal;
    auto& per_fold = loglik_[c];
    per_fold.resize(folds.size());
    for (std::size_t f = 0; f < folds.size(); ++f) {
      const auto train_y = select_labels(bank.labels, folds[f].train);
      const auto model = GaussianClassModel::fit(select_rows(x, folds[f].train), train_y,
                                                 bank.num_classes, fit)
                             .marginalize(horizon);
      Eigen::MatrixXd ll(static_cast<Eigen::Index>(folds[f].test.size()), bank.num_classes);
      for (std::size_t r = 0; r < folds[f].test.size(); ++r) {
        const Eigen::VectorXd xr =
            x.row(static_cast<Eigen::Index>(folds[f].test[r])).head(horizon).transpose();
        ll.row(static_cast<Eigen::Index>(r)) = model.log_likelihoods(xr).transpose();
      }
      per_fold[f] = std::move(ll);
    }
  });
}

double CandidateFoldScores::subset_accuracy(std::span<const std::size_t> subset, CombinationRule rule) const {
  if (subset.empty()) throw_data("subset accuracy of an empty subset");
  double total = 0.0;
  std::vector<Eigen::VectorXd> scores(subset.size());
  std::vector<int> votes(subset.size());
  for (std::size_t f = 0; f < log_prior_.size(); ++f) {
    const auto& labels = test_labels_[f];
    std::size_t correct = 0;
    for (std::size_t r = 0; r < labels.size(); ++r) {
      const auto row = static_cast<Eigen::Index>(r);
      for (std::size_t m = 0; m < subset.size(); ++m) {
        scores[m] = loglik_[subset[m]][f].row(row).transpose();
      }
      int label = 0;
      if (rule == CombinationRule::Likelihood) {
        label = combine_likelihood(scores, log_prior_[f]).label;
      } else {
        for (std::size_t m = 0; m < subset.size(); ++m) {
          scores[m] += log_prior_[f];
          votes[m] = argmax_first(scores[m]);
        }
        label = combine_voting(votes, scores);
      }
      correct += label == labels[r];
    }
    total += static_cast<double>(correct) / static_cast<double>(labels.size());
  }
  return total / static_cast<double>(log_prior_.size());
}

EnsembleModel greedy_select(std::span<const ChannelClassifier> candidates, const FeatureBank& bank,
                            std::span<const Fold> folds, const GreedyOptions& options) {
  if (candidates.empty()) throw_data("greedy selection needs at least one candidate");
  if (options.max_members < 1) throw_data("max_members must be at least 1");
  const CandidateFoldScores scores(candidates, bank, folds, options.fit, options.threads);

  std::vector<std::size_t> chosen;
  std::vector<bool> used(candidates.size(), false);
  std::vector<SelectionStep> trace;
  double current = -1.0;

  auto step_for = [&](std::size_t c, double acc) {
    return SelectionStep{c, candidates[c].channel, candidates[c].kind, candidates[c].d_minimal, acc};
  };

  while (static_cast<int>(chosen.size()) < options.max_members) {
    std::vector<double> acc(candidates.size(), -1.0);
    parallel_for(candidates.size(), options.threads, [&](std::size_t c) {
      if (used[c]) return;
      std::vector<std::size_t> trial = chosen;
      trial.push_back(c);
      acc[c] = scores.subset_accuracy(trial, options.rule);
    });
    std::size_t best = candidates.size();
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      if (used[c]) continue;
      if (best == candidates.size() || acc[c] > acc[best]) best = c;
    }
    if (best == candidates.size() || !(acc[best] > current)) break;
    chosen.push_back(best);
    used[best] = true;
    current = acc[best];
    trace.push_back(step_for(best, current));
  }

  std::vector<ChannelClassifier> members;
  for (auto c : chosen) members.push_back(candidates[c]);
  return {std::move(members), options.rule, std::move(trace)};
}

EnsembleModel greedy_select(std::span<const ChannelClassifier> candidates, const FeatureBank& bank,
                            int k_folds, std::uint64_t seed, const GreedyOptions& options) {
  const auto folds = stratified_kfold(bank.labels, k_folds, seed);
  return greedy_select(candidates, bank, folds, options);
}

void write_trace_csv(std::span<const SelectionStep> trace, std::ostream& out) {
  out << "round,channel,kind,d_minimal,cv_accuracy\n";
  const auto old_precision = out.precision(17);
  for (std::size_t r = 0; r < trace.size(); ++r) {
    out << r + 1 << ',' << trace[r].channel << ',' << to_string(trace[r].kind) << ','
        << trace[r].d_minimal << ',' << trace[r].cv_accuracy << '\n';
  }
  out.precision(old_precision);
}

}  // namespace btsc
