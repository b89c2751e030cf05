#include "genius/data/request.hpp"

#include <map>

namespace genius::data {

namespace {

bool name_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
           c == '-';
}

std::map<std::string, int> anchor_numbers(const SampleRecord& sample) {
    std::map<std::string, int> numbers;
    int n = 0;
    for (const Segment& s : sample.context) {
        if (!s.is_image()) continue;
        ++n;
        if (!s.anchor.empty()) numbers.emplace(s.anchor, n);
    }
    return numbers;
}

int number_for(const std::map<std::string, int>& numbers, const SampleRecord& sample, const std::string& anchor) {
    auto it = numbers.find(anchor);
    if (it == numbers.end()) {
        throw ValidationError("sample \"" + sample.id + "\": marker {{" + anchor + "}} names no image");
    }
    return it->second;
}

RequestSegment text_piece(std::string text, int source) {
    RequestSegment r;
    r.kind = SegmentKind::Text;
    r.text = std::move(text);
    r.source_index = source;
    return r;
}

RequestSegment image_piece(const Segment& s, int number, int source) {
    RequestSegment r;
    r.kind = SegmentKind::Image;
    r.image_path = s.image_path;
    r.image_number = number;
    r.source_index = source;
    return r;
}

}  // namespace

std::string_view to_string(InputFormatMode m) {
    switch (m) {
        case InputFormatMode::Edit: return "edit";
        case InputFormatMode::Interleaved: return "interleaved";
        case InputFormatMode::FineGrainedInterleaved: return "fine-grained";
    }
    return "?";
}

InputFormatMode parse_input_mode(std::string_view name) {
    for (auto m : {InputFormatMode::Edit, InputFormatMode::Interleaved, InputFormatMode::FineGrainedInterleaved}) {
        if (to_string(m) == name) return m;
    }
    throw ContractError("unknown input mode \"" + std::string(name) + "\" (edit, interleaved, fine-grained)");
}

std::string image_placeholder(int image_number) { return "image " + std::to_string(image_number); }

std::vector<Marker> find_markers(std::string_view text) {
    std::vector<Marker> out;
    std::size_t pos = 0;
    while ((pos = text.find("{{", pos)) != std::string_view::npos) {
        std::size_t end = pos + 2;
        while (end < text.size() && name_char(text[end])) ++end;
        if (end > pos + 2 && text.substr(end, 2) == "}}") {
            out.push_back({pos, end + 2 - pos, std::string(text.substr(pos + 2, end - pos - 2))});
            pos = end + 2;
        } else {
            ++pos;
        }
    }
    return out;
}

std::string rewrite_markers(const SampleRecord& sample, std::string_view text) {
    const auto numbers = anchor_numbers(sample);
    std::string out;
    std::size_t from = 0;
    for (const Marker& m : find_markers(text)) {
        out.append(text.substr(from, m.offset - from));
        out += image_placeholder(number_for(numbers, sample, m.anchor));
        from = m.offset + m.length;
    }
    out.append(text.substr(from));
    return out;
}

AssembledRequest assemble_request(const SampleRecord& sample, InputFormatMode mode) {
    AssembledRequest req;
    req.mode = mode;
    req.instruction = rewrite_markers(sample, sample.instruction);
    const auto numbers = anchor_numbers(sample);

    auto emit_text = [&](std::string text, int source) {
        if (!text.empty()) req.segments.push_back(text_piece(std::move(text), source));
    };

    switch (mode) {
        case InputFormatMode::Edit: {
            std::vector<RequestSegment> images;
            int n = 0;
            for (int i = 0; i < static_cast<int>(sample.context.size()); ++i) {
                const Segment& s = sample.context[static_cast<std::size_t>(i)];
                if (s.is_image()) {
                    images.push_back(image_piece(s, ++n, i));
                } else {
                    emit_text(rewrite_markers(sample, s.text), i);
                }
            }
            req.segments.insert(req.segments.end(), images.begin(), images.end());
            break;
        }
        case InputFormatMode::Interleaved: {
            int n = 0;
            for (int i = 0; i < static_cast<int>(sample.context.size()); ++i) {
                const Segment& s = sample.context[static_cast<std::size_t>(i)];
                if (s.is_image()) {
                    req.segments.push_back(image_piece(s, ++n, i));
                } else {
                    emit_text(rewrite_markers(sample, s.text), i);
                }
            }
            break;
        }
        case InputFormatMode::FineGrainedInterleaved: {
            // Where each image sits in the stored context, by number.
            std::map<int, int> source_of;
            std::map<int, bool> placed;
            int n = 0;
            for (int i = 0; i < static_cast<int>(sample.context.size()); ++i) {
                if (sample.context[static_cast<std::size_t>(i)].is_image()) source_of[++n] = i;
            }
            for (int i = 0; i < static_cast<int>(sample.context.size()); ++i) {
                const Segment& s = sample.context[static_cast<std::size_t>(i)];
                if (s.is_image()) continue;
                std::size_t from = 0;
                for (const Marker& m : find_markers(s.text)) {
                    emit_text(s.text.substr(from, m.offset - from), i);
                    const int number = number_for(numbers, sample, m.anchor);
                    const int src = source_of.at(number);
                    req.segments.push_back(image_piece(sample.context[static_cast<std::size_t>(src)], number, src));
                    placed[number] = true;
                    from = m.offset + m.length;
                }
                emit_text(s.text.substr(from), i);
            }
            for (const auto& [number, src] : source_of) {
                if (!placed[number]) {
                    throw AssemblyError("sample \"" + sample.id + "\": image " + std::to_string(number) +
                                        " has no anchor marker in the context text; fine-grained layout needs one");
                }
            }
            break;
        }
    }
    return req;
}

}  // namespace genius::data
