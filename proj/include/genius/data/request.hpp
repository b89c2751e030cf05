/// @file request.hpp
/// @brief Turning a sample's context into an ordered model request under one
/// of the three input layouts.

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "genius/data/sample.hpp"
#include "genius/error.hpp"

namespace genius::data {

enum class InputFormatMode {
    Edit,                    // text first, every image appended at the end
    Interleaved,             // stored order; images sit at sentence boundaries
    FineGrainedInterleaved,  // each image inserted at its `{{anchor}}` marker
};

std::string_view to_string(InputFormatMode m);
InputFormatMode parse_input_mode(std::string_view name);

/// Raised when a sample cannot be laid out in the requested mode.
class AssemblyError : public Error {
public:
    using Error::Error;
};

struct RequestSegment {
    SegmentKind kind = SegmentKind::Text;
    std::string text;        // Text
    std::string image_path;  // Image, as stored in the manifest
    int image_number = 0;    // Image, 1-based
    int source_index = 0;    // index into SampleRecord::context

    bool operator==(const RequestSegment&) const = default;
};

struct AssembledRequest {
    InputFormatMode mode = InputFormatMode::Interleaved;
    std::vector<RequestSegment> segments;
    std::string instruction;  // markers rewritten to "image i"
};

/// "image i" for the given 1-based number.
std::string image_placeholder(int image_number);

/// A `{{name}}` occurrence inside a text segment.
struct Marker {
    std::size_t offset = 0;  // of the first brace
    std::size_t length = 0;
    std::string anchor;
};

/// Markers in order of appearance. Names are [A-Za-z0-9_-]+; other brace
/// runs are ordinary text.
std::vector<Marker> find_markers(std::string_view text);

/// Every marker replaced by "image i". ValidationError for an unknown anchor.
std::string rewrite_markers(const SampleRecord& sample, std::string_view text);

/// Text segments never come out empty; an all-marker text piece is dropped.
AssembledRequest assemble_request(const SampleRecord& sample, InputFormatMode mode);

}  // namespace genius::data
