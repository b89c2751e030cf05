#include "genius/data/sample.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "genius/data/request.hpp"
#include "genius/error.hpp"

namespace genius::data {

namespace {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

constexpr std::string_view kFormat = "genius-manifest";

bool valid_name_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
           c == '-';
}

bool valid_id(std::string_view id) {
    if (id.empty() || id.front() == '.') return false;
    for (char c : id) {
        if (!valid_name_char(c) && c != '.') return false;
    }
    return true;
}

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw ValidationError(where + ": " + what);
}

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        bool known = false;
        for (auto a : allowed) known = known || key == a;
        if (!known) fail(where, "unknown field \"" + key + "\"");
    }
}

const json& required(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) fail(where, std::string("missing field \"") + key + "\"");
    return *it;
}

std::string required_string(const json& obj, const char* key, const std::string& where) {
    const json& v = required(obj, key, where);
    if (!v.is_string()) fail(where, std::string("field \"") + key + "\" must be a string");
    return v.get<std::string>();
}

std::string optional_string(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) return {};
    if (!it->is_string()) fail(where, std::string("field \"") + key + "\" must be a string");
    return it->get<std::string>();
}

Segment segment_from_json(const json& j, const std::string& where) {
    if (!j.is_object()) fail(where, "segment must be an object");
    const std::string type = required_string(j, "type", where);
    if (type == "text") {
        check_keys(j, {"type", "text"}, where);
        return Segment::make_text(required_string(j, "text", where));
    }
    if (type == "image") {
        check_keys(j, {"type", "path", "anchor"}, where);
        return Segment::make_image(required_string(j, "path", where), optional_string(j, "anchor", where));
    }
    fail(where, "unknown segment type \"" + type + "\"");
}

SampleRecord sample_from_json(const json& j, const std::string& where) {
    if (!j.is_object()) fail(where, "sample must be an object");
    check_keys(j, {"id", "dimension", "task", "subtask", "context", "instruction", "rc_hint", "vc_hints"}, where);
    SampleRecord s;
    s.id = required_string(j, "id", where);
    const std::string at = where + " (" + s.id + ")";
    s.dimension = parse_dimension(required_string(j, "dimension", at));
    s.task = parse_task(required_string(j, "task", at));
    s.subtask = optional_string(j, "subtask", at);
    const json& ctx = required(j, "context", at);
    if (!ctx.is_array()) fail(at, "\"context\" must be an array");
    for (std::size_t i = 0; i < ctx.size(); ++i) {
        s.context.push_back(segment_from_json(ctx[i], at + " context[" + std::to_string(i) + "]"));
    }
    s.instruction = required_string(j, "instruction", at);
    s.rc_hint = required_string(j, "rc_hint", at);
    if (auto it = j.find("vc_hints"); it != j.end()) {
        if (!it->is_array()) fail(at, "\"vc_hints\" must be an array");
        for (std::size_t i = 0; i < it->size(); ++i) {
            const json& h = (*it)[i];
            const std::string hw = at + " vc_hints[" + std::to_string(i) + "]";
            if (!h.is_object()) fail(hw, "must be an object");
            check_keys(h, {"reference", "hint"}, hw);
            const json& ref = required(h, "reference", hw);
            if (!ref.is_number_integer()) fail(hw, "\"reference\" must be an integer image number");
            s.vc_hints.push_back({ref.get<int>(), required_string(h, "hint", hw)});
        }
    }
    return s;
}

ojson sample_to_json(const SampleRecord& s) {
    ojson j;
    j["id"] = s.id;
    j["dimension"] = to_string(s.dimension);
    j["task"] = to_string(s.task);
    j["subtask"] = s.subtask;
    ojson ctx = ojson::array();
    for (const Segment& seg : s.context) {
        ojson e;
        if (seg.is_image()) {
            e["type"] = "image";
            e["path"] = seg.image_path;
            if (!seg.anchor.empty()) e["anchor"] = seg.anchor;
        } else {
            e["type"] = "text";
            e["text"] = seg.text;
        }
        ctx.push_back(std::move(e));
    }
    j["context"] = std::move(ctx);
    j["instruction"] = s.instruction;
    j["rc_hint"] = s.rc_hint;
    ojson hints = ojson::array();
    for (const VcHint& h : s.vc_hints) {
        ojson e;
        e["reference"] = h.reference;
        e["hint"] = h.hint;
        hints.push_back(std::move(e));
    }
    j["vc_hints"] = std::move(hints);
    return j;
}

}  // namespace

std::string_view to_string(Dimension d) {
    switch (d) {
        case Dimension::ImplicitPatternInduction: return "ImplicitPatternInduction";
        case Dimension::AdHocConstraintExecution: return "AdHocConstraintExecution";
        case Dimension::ContextualKnowledgeAdaptation: return "ContextualKnowledgeAdaptation";
    }
    return "?";
}

std::string_view to_string(Task t) {
    switch (t) {
        case Task::ImplicitPattern: return "ImplicitPattern";
        case Task::SymbolicConstraint: return "SymbolicConstraint";
        case Task::VisualConstraint: return "VisualConstraint";
        case Task::PriorConflicting: return "PriorConflicting";
        case Task::MultiSemantic: return "MultiSemantic";
    }
    return "?";
}

Dimension parse_dimension(std::string_view name) {
    for (Dimension d : kDimensions) {
        if (to_string(d) == name) return d;
    }
    throw ValidationError("unknown dimension \"" + std::string(name) + "\"");
}

Task parse_task(std::string_view name) {
    for (Task t : kTasks) {
        if (to_string(t) == name) return t;
    }
    throw ValidationError("unknown task \"" + std::string(name) + "\"");
}

Dimension dimension_of(Task t) {
    switch (t) {
        case Task::ImplicitPattern: return Dimension::ImplicitPatternInduction;
        case Task::SymbolicConstraint:
        case Task::VisualConstraint: return Dimension::AdHocConstraintExecution;
        case Task::PriorConflicting:
        case Task::MultiSemantic: return Dimension::ContextualKnowledgeAdaptation;
    }
    return Dimension::ImplicitPatternInduction;
}

Segment Segment::make_text(std::string text) {
    Segment s;
    s.kind = SegmentKind::Text;
    s.text = std::move(text);
    return s;
}

Segment Segment::make_image(std::string path, std::string anchor) {
    Segment s;
    s.kind = SegmentKind::Image;
    s.image_path = std::move(path);
    s.anchor = std::move(anchor);
    return s;
}

int SampleRecord::image_count() const {
    int n = 0;
    for (const Segment& s : context) n += s.is_image() ? 1 : 0;
    return n;
}

const Segment& SampleRecord::image(int number) const {
    int n = 0;
    for (const Segment& s : context) {
        if (s.is_image() && ++n == number) return s;
    }
    throw ContractError("sample " + id + " has no image " + std::to_string(number));
}

void SampleRecord::validate() const {
    const std::string where = "sample \"" + id + "\"";
    if (!valid_id(id)) fail(where, "id must be non-empty and use only letters, digits, '.', '_' or '-'");
    if (dimension_of(task) != dimension) {
        fail(where, "task " + std::string(to_string(task)) + " belongs to " +
                        std::string(to_string(dimension_of(task))) + ", not " + std::string(to_string(dimension)));
    }
    int texts = 0;
    std::set<std::string> anchors;
    for (const Segment& s : context) {
        if (s.is_image()) {
            if (s.image_path.empty()) fail(where, "image segment without a path");
            if (!s.anchor.empty()) {
                if (find_markers("{{" + s.anchor + "}}").size() != 1) fail(where, "bad anchor name \"" + s.anchor + "\"");
                if (!anchors.insert(s.anchor).second) fail(where, "duplicate anchor \"" + s.anchor + "\"");
            }
        } else {
            if (s.text.empty()) fail(where, "empty text segment");
            ++texts;
        }
    }
    if (texts == 0 || image_count() == 0) {
        fail(where, "context needs at least one text segment and one image");
    }
    std::set<std::string> referenced;
    for (const Segment& s : context) {
        if (s.is_image()) continue;
        for (const Marker& m : find_markers(s.text)) {
            if (!anchors.contains(m.anchor)) fail(where, "marker {{" + m.anchor + "}} names no image");
            if (!referenced.insert(m.anchor).second) {
                fail(where, "anchor \"" + m.anchor + "\" is marked more than once in the context");
            }
        }
    }
    for (const Marker& m : find_markers(instruction)) {
        if (!anchors.contains(m.anchor)) fail(where, "instruction marker {{" + m.anchor + "}} names no image");
    }
    if (instruction.empty()) fail(where, "empty instruction");
    if (rc_hint.empty()) fail(where, "empty rc_hint");
    for (const VcHint& h : vc_hints) {
        if (h.reference < 1 || h.reference > image_count()) {
            fail(where, "vc_hint reference " + std::to_string(h.reference) + " is not an image number");
        }
        if (h.hint.empty()) fail(where, "empty vc_hint text");
    }
}

std::array<int, 3> Manifest::counts_by_dimension() const {
    std::array<int, 3> counts{0, 0, 0};
    for (const SampleRecord& s : samples) ++counts[static_cast<std::size_t>(s.dimension)];
    return counts;
}

const SampleRecord& Manifest::find(std::string_view id) const {
    for (const SampleRecord& s : samples) {
        if (s.id == id) return s;
    }
    throw ContractError("no sample with id \"" + std::string(id) + "\"");
}

Manifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir, const LoadOptions& options) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("manifest is not valid JSON: ") + e.what());
    }
    const std::string where = "manifest";
    if (!root.is_object()) fail(where, "top level must be an object");
    check_keys(root, {"format", "version", "samples"}, where);
    if (required_string(root, "format", where) != kFormat) fail(where, "format must be \"genius-manifest\"");
    const json& version = required(root, "version", where);
    if (!version.is_number_integer() || version.get<int>() != kManifestVersion) {
        fail(where, "unsupported version (expected " + std::to_string(kManifestVersion) + ")");
    }
    const json& samples = required(root, "samples", where);
    if (!samples.is_array()) fail(where, "\"samples\" must be an array");

    Manifest m;
    m.base_dir = base_dir;
    std::set<std::string> ids;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        SampleRecord s = sample_from_json(samples[i], "samples[" + std::to_string(i) + "]");
        s.validate();
        if (!ids.insert(s.id).second) fail(where, "duplicate id \"" + s.id + "\"");
        if (options.check_files) {
            for (const Segment& seg : s.context) {
                if (seg.is_image() && !std::filesystem::is_regular_file(m.resolve(seg))) {
                    fail("sample \"" + s.id + "\"", "image not found: " + m.resolve(seg).string());
                }
            }
        }
        m.samples.push_back(std::move(s));
    }
    if (options.strict_benchmark && m.counts_by_dimension() != kBenchmarkCounts) {
        const auto c = m.counts_by_dimension();
        fail(where, "strict benchmark mode expects 86/213/211 samples per dimension, found " + std::to_string(c[0]) +
                        "/" + std::to_string(c[1]) + "/" + std::to_string(c[2]));
    }
    return m;
}

Manifest load_manifest(const std::filesystem::path& path, const LoadOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read manifest " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_manifest(ss.str(), path.parent_path(), options);
}

std::string serialize_manifest(const Manifest& manifest) {
    ojson root;
    root["format"] = kFormat;
    root["version"] = kManifestVersion;
    ojson samples = ojson::array();
    for (const SampleRecord& s : manifest.samples) samples.push_back(sample_to_json(s));
    root["samples"] = std::move(samples);
    return root.dump(2) + "\n";
}

void save_manifest(const Manifest& manifest, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write manifest " + path.string());
    out << serialize_manifest(manifest);
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace genius::data
