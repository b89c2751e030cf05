/// @file template.hpp
/// @brief Prompt templates compiled into the binary and a single-pass
/// placeholder renderer.

#pragma once

#include <map>
#include <string>
#include <string_view>

namespace genius::text {

enum class PromptTemplate { KeywordPlanner, RuleCompliance, VisualConsistency, AestheticQuality };

/// Checked-in template text (templates/*.txt), byte for byte.
std::string_view template_text(PromptTemplate which);

/// Replaces every `{name}` whose name is a key of `vars`. Other braces are
/// copied through, and substituted values are never re-scanned.
std::string render_template(std::string_view tpl, const std::map<std::string, std::string>& vars);

}  // namespace genius::text
