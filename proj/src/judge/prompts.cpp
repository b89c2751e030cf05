#include "genius/judge/prompts.hpp"

#include "genius/error.hpp"
#include "genius/text/template.hpp"

namespace genius::judge {

using text::PromptTemplate;

std::string render_rc_prompt(std::string_view hint, std::string_view output_image_tag) {
    if (hint.empty()) throw ContractError("rule compliance prompt needs a non-empty hint");
    return text::render_template(text::template_text(PromptTemplate::RuleCompliance),
                                 {{"hint", std::string(hint)}, {"output_image_tag", std::string(output_image_tag)}});
}

std::string render_vc_prompt(std::string_view reference_image_tag, std::string_view hint,
                             std::string_view output_image_tag) {
    if (hint.empty()) throw ContractError("visual consistency prompt needs a non-empty hint");
    return text::render_template(text::template_text(PromptTemplate::VisualConsistency),
                                 {{"reference_image", std::string(reference_image_tag)},
                                  {"hint", std::string(hint)},
                                  {"output_image_tag", std::string(output_image_tag)}});
}

std::string render_aq_prompt(std::string_view output_image_tag) {
    return text::render_template(text::template_text(PromptTemplate::AestheticQuality),
                                 {{"output_image_tag", std::string(output_image_tag)}});
}

}  // namespace genius::judge
