#include "genius/text/template.hpp"

namespace genius::text {

std::string render_template(std::string_view tpl, const std::map<std::string, std::string>& vars) {
    std::string out;
    out.reserve(tpl.size());
    std::size_t pos = 0;
    while (pos < tpl.size()) {
        const std::size_t open = tpl.find('{', pos);
        if (open == std::string_view::npos) {
            out.append(tpl.substr(pos));
            break;
        }
        out.append(tpl.substr(pos, open - pos));
        const std::size_t close = tpl.find('}', open + 1);
        if (close != std::string_view::npos) {
            const auto it = vars.find(std::string(tpl.substr(open + 1, close - open - 1)));
            if (it != vars.end()) {
                out.append(it->second);
                pos = close + 1;
                continue;
            }
        }
        out.push_back('{');
        pos = open + 1;
    }
    return out;
}

}  // namespace genius::text
