/// @file keywords.hpp
/// @brief Keyword distillation contract: the planner prompt sent to the model
/// and the per-image focus map it must answer with.

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace genius::steer {

/// Focus string per context image. focus[k] belongs to "<image k+1>".
/// "all" marks a base canvas, "" marks an irrelevant image.
struct KeywordPlan {
    std::vector<std::string> focus;

    int image_count() const { return static_cast<int>(focus.size()); }
    /// 1-based image number.
    const std::string& focus_for(int image_number) const;
    bool is_base(int image_number) const { return focus_for(image_number) == "all"; }
    bool is_irrelevant(int image_number) const { return focus_for(image_number).empty(); }

    /// "<image N>"
    static std::string key(int image_number);
};

/// Planner prompt with the image count and the instruction filled in.
std::string render_keyword_prompt(std::string_view instruction, int image_count);

/// Parses `{ "<image 1>": "...", ... }`. Surrounding whitespace and Markdown
/// code fences are tolerated. Throws ParseError naming the offending key when
/// the JSON is malformed, a value is not a string, or the key set differs from
/// "<image 1>" .. "<image image_count>".
KeywordPlan parse_keyword_response(std::string_view raw, int image_count);

/// Splits a focus string on commas into trimmed, non-empty keywords.
std::vector<std::string> split_keywords(std::string_view focus);

}  // namespace genius::steer
