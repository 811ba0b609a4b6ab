#pragma once

#include <string>
#include <string_view>

namespace btsc {

enum class FeatureKind { ERP, HGP };

std::string_view to_string(FeatureKind kind);
FeatureKind parse_feature_kind(std::string_view text);

enum class CombinationRule { Likelihood, Voting };

std::string_view to_string(CombinationRule rule);
CombinationRule parse_combination_rule(std::string_view text);

}  // namespace btsc
