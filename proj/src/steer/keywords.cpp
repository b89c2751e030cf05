#include "genius/steer/keywords.hpp"

#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "genius/error.hpp"
#include "genius/text/template.hpp"

namespace genius::steer {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

// Removes a surrounding ``` or ```json fence.
std::string_view strip_fence(std::string_view s) {
    s = trim(s);
    if (s.substr(0, 3) != "```") {
        return s;
    }
    const auto newline = s.find('\n');
    if (newline == std::string_view::npos) {
        return s;
    }
    s.remove_prefix(newline + 1);
    s = trim(s);
    if (s.size() >= 3 && s.substr(s.size() - 3) == "```") {
        s.remove_suffix(3);
    }
    return trim(s);
}

}  // namespace

const std::string& KeywordPlan::focus_for(int image_number) const {
    if (image_number < 1 || image_number > image_count()) {
        throw ContractError("no focus for " + key(image_number));
    }
    return focus[static_cast<std::size_t>(image_number - 1)];
}

std::string KeywordPlan::key(int image_number) {
    return "<image " + std::to_string(image_number) + ">";
}

std::string render_keyword_prompt(std::string_view instruction, int image_count) {
    if (image_count < 0) {
        throw ContractError("image_count must be non-negative");
    }
    return text::render_template(text::template_text(text::PromptTemplate::KeywordPlanner),
                                 {{"image_num", std::to_string(image_count)},
                                  {"content", std::string(instruction)}});
}

KeywordPlan parse_keyword_response(std::string_view raw, int image_count) {
    if (image_count < 0) {
        throw ContractError("image_count must be non-negative");
    }
    const std::string_view body = strip_fence(raw);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("keyword response is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) {
        throw ParseError("keyword response must be a JSON object");
    }

    std::map<std::string, int> expected;
    for (int i = 1; i <= image_count; ++i) {
        expected.emplace(KeywordPlan::key(i), i);
    }
    KeywordPlan plan;
    plan.focus.resize(static_cast<std::size_t>(image_count));
    std::set<int> seen;
    for (const auto& [k, v] : doc.items()) {
        const auto it = expected.find(k);
        if (it == expected.end()) {
            throw ParseError("unexpected key in keyword response: \"" + k + "\"");
        }
        if (!v.is_string()) {
            throw ParseError("focus for \"" + k + "\" must be a string");
        }
        plan.focus[static_cast<std::size_t>(it->second - 1)] = v.get<std::string>();
        seen.insert(it->second);
    }
    for (const auto& [k, idx] : expected) {
        if (!seen.contains(idx)) {
            throw ParseError("missing key in keyword response: \"" + k + "\"");
        }
    }
    return plan;
}

std::vector<std::string> split_keywords(std::string_view focus) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= focus.size()) {
        const auto comma = focus.find(',', pos);
        const auto piece = trim(focus.substr(pos, comma == std::string_view::npos ? focus.size() - pos
                                                                                  : comma - pos));
        if (!piece.empty()) {
            out.emplace_back(piece);
        }
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

}  // namespace genius::steer
