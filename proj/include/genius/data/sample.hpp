/// @file sample.hpp
/// @brief Benchmark sample records, task taxonomy and the on-disk manifest.

#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace genius::data {

enum class Dimension {
    ImplicitPatternInduction,
    AdHocConstraintExecution,
    ContextualKnowledgeAdaptation,
};

enum class Task {
    ImplicitPattern,
    SymbolicConstraint,
    VisualConstraint,
    PriorConflicting,
    MultiSemantic,
};

inline constexpr std::array<Dimension, 3> kDimensions{
    Dimension::ImplicitPatternInduction, Dimension::AdHocConstraintExecution,
    Dimension::ContextualKnowledgeAdaptation};
inline constexpr std::array<Task, 5> kTasks{Task::ImplicitPattern, Task::SymbolicConstraint,
                                            Task::VisualConstraint, Task::PriorConflicting,
                                            Task::MultiSemantic};

std::string_view to_string(Dimension d);
std::string_view to_string(Task t);
/// Throws ValidationError on an unknown name.
Dimension parse_dimension(std::string_view name);
Task parse_task(std::string_view name);
/// The dimension a task belongs to.
Dimension dimension_of(Task t);

enum class SegmentKind { Text, Image };

/// One element of the interleaved context. Text may contain `{{name}}`
/// markers pointing at the image whose anchor is `name`.
struct Segment {
    SegmentKind kind = SegmentKind::Text;
    std::string text;        // Text only
    std::string image_path;  // Image only, relative to the manifest directory
    std::string anchor;      // Image only, may be empty

    static Segment make_text(std::string text);
    static Segment make_image(std::string path, std::string anchor = {});
    bool is_image() const { return kind == SegmentKind::Image; }

    bool operator==(const Segment&) const = default;
};

/// Reference is the 1-based number of a context image.
struct VcHint {
    int reference = 1;
    std::string hint;

    bool operator==(const VcHint&) const = default;
};

struct SampleRecord {
    std::string id;
    Dimension dimension = Dimension::ImplicitPatternInduction;
    Task task = Task::ImplicitPattern;
    std::string subtask;  // free-form label
    std::vector<Segment> context;
    std::string instruction;
    std::string rc_hint;
    std::vector<VcHint> vc_hints;

    int image_count() const;
    /// 1-based image number -> its segment.
    const Segment& image(int number) const;

    /// Throws ValidationError describing the first broken invariant.
    void validate() const;

    bool operator==(const SampleRecord&) const = default;
};

struct Manifest {
    std::filesystem::path base_dir;  // image paths resolve against this
    std::vector<SampleRecord> samples;

    std::array<int, 3> counts_by_dimension() const;
    const SampleRecord& find(std::string_view id) const;  // ContractError if absent
    std::filesystem::path resolve(const Segment& image) const { return base_dir / image.image_path; }

    /// Compares samples only; the directory the manifest was read from is not content.
    bool operator==(const Manifest& other) const { return samples == other.samples; }
};

/// Dimension split of the full 510-sample benchmark.
inline constexpr std::array<int, 3> kBenchmarkCounts{86, 213, 211};

struct LoadOptions {
    bool strict_benchmark = false;  // require kBenchmarkCounts
    bool check_files = true;        // every image path must exist
};

inline constexpr int kManifestVersion = 1;

/// Parses manifest JSON. ParseError for malformed JSON, ValidationError for
/// schema or invariant violations.
Manifest parse_manifest(std::string_view json, const std::filesystem::path& base_dir,
                        const LoadOptions& options = {});
/// IoError if the file cannot be read.
Manifest load_manifest(const std::filesystem::path& path, const LoadOptions& options = {});

/// Canonical JSON text (two-space indent, trailing newline).
std::string serialize_manifest(const Manifest& manifest);
void save_manifest(const Manifest& manifest, const std::filesystem::path& path);

}  // namespace genius::data
