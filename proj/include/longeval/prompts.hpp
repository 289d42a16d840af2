#pragma once

#include <string>
#include <string_view>

#include "longeval/criterion.hpp"

namespace longeval {

inline constexpr std::string_view kArticlePlaceholder = "{{article}}";
inline constexpr std::string_view kSummaryPlaceholder = "{{summary}}";
inline constexpr std::string_view kScoreRequestLine = "# Evaluation Form (scores ONLY):";

struct Criterion {
  CriterionKind kind;
  Scale scale;
  std::string_view prompt_template;

  std::string_view name() const { return to_string(kind); }
};

// Built-in rubric prompts for the three criteria.
const Criterion& criterion(CriterionKind kind);

// Throws ConfigError unless each placeholder occurs exactly once and the
// template ends with the score request line.
void validate_template(std::string_view prompt_template);

// Single-pass placeholder substitution; placeholder-like text inside the
// article or summary is left untouched.
std::string render_prompt(std::string_view prompt_template, std::string_view article,
                          std::string_view summary);

}  // namespace longeval
