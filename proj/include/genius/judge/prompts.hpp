/// @file prompts.hpp
/// @brief Judge prompts rendered from the checked-in templates.

#pragma once

#include <string>
#include <string_view>

namespace genius::judge {

/// ContractError if hint is empty.
std::string render_rc_prompt(std::string_view hint, std::string_view output_image_tag);
std::string render_vc_prompt(std::string_view reference_image_tag, std::string_view hint,
                             std::string_view output_image_tag);
std::string render_aq_prompt(std::string_view output_image_tag);

}  // namespace genius::judge
