#include "longeval/criterion.hpp"

namespace longeval {

Scale scale_of(CriterionKind kind) {
  switch (kind) {
    case CriterionKind::kConsistency:
    case CriterionKind::kRelevance:
      return {1, 5};
    case CriterionKind::kFaithfulness:
      return {1, 7};
  }
  return {1, 5};
}

std::string_view to_string(CriterionKind kind) {
  switch (kind) {
    case CriterionKind::kConsistency:
      return "consistency";
    case CriterionKind::kRelevance:
      return "relevance";
    case CriterionKind::kFaithfulness:
      return "faithfulness";
  }
  return "unknown";
}

std::optional<CriterionKind> parse_criterion(std::string_view name) {
  for (CriterionKind kind : kAllCriteria) {
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

}  // namespace longeval
