#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace longeval {

enum class CriterionKind { kConsistency, kRelevance, kFaithfulness };

inline constexpr std::array<CriterionKind, 3> kAllCriteria = {
    CriterionKind::kConsistency, CriterionKind::kRelevance, CriterionKind::kFaithfulness};

struct Scale {
  int min;
  int max;

  bool contains(double value) const { return value >= min && value <= max; }
};

// Consistency and relevance are rated 1-5, faithfulness 1-7.
Scale scale_of(CriterionKind kind);

std::string_view to_string(CriterionKind kind);

std::optional<CriterionKind> parse_criterion(std::string_view name);

}  // namespace longeval
