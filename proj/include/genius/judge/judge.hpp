/// @file judge.hpp
/// @brief Judging one generated image (three runs, retries, copy check) and a
/// whole manifest, plus verdict records on disk.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "genius/data/image.hpp"
#include "genius/data/sample.hpp"
#include "genius/error.hpp"
#include "genius/judge/backend.hpp"
#include "genius/judge/score.hpp"

namespace genius::judge {

/// All runs for a sample failed.
class JudgeError : public Error {
public:
    using Error::Error;
};

/// True iff both images have the same size and identical RGB bytes.
bool plagiarism_check(const data::Rgb8Image& reference, const data::Rgb8Image& target);
/// Decodes both files first (IoError / ParseError).
bool plagiarism_check(const std::filesystem::path& reference, const std::filesystem::path& target);

struct JudgeOptions {
    int runs = 3;
    int max_retries = 2;  // per backend call
    int workers = 4;      // samples judged concurrently
    std::string model = "model";
    std::string output_image_tag = "<output_image>";
    std::string reference_image_tag = "<reference_image>";

    void validate() const;
};

/// One run of one sample. When `error` is set the scores are meaningless and
/// the run is excluded from averaging.
struct SampleVerdict {
    std::string sample_id;
    std::string model;
    data::Task task = data::Task::ImplicitPattern;
    int run_index = 1;
    std::optional<std::string> error;
    MetricScore rc{0};
    std::vector<MetricScore> vc;  // one per vc_hint
    MetricScore aq{0};
    std::vector<bool> vc_copied;  // hint k forced to 0 by the copy check

    bool ok() const { return !error.has_value(); }
    data::Dimension dimension() const { return data::dimension_of(task); }
    bool operator==(const SampleVerdict&) const = default;
};

/// Every run, failed ones included, ordered by run index. Never throws for
/// backend or parse failures.
std::vector<SampleVerdict> judge_runs(const data::Manifest& manifest, const data::SampleRecord& sample,
                                      const std::filesystem::path& generated_image, JudgeBackend& backend,
                                      const JudgeOptions& options = {});

/// Like judge_runs but throws JudgeError when no run succeeded.
std::vector<SampleVerdict> judge_sample(const data::Manifest& manifest, const data::SampleRecord& sample,
                                        const std::filesystem::path& generated_image, JudgeBackend& backend,
                                        const JudgeOptions& options = {});

struct JudgeReport {
    std::vector<SampleVerdict> verdicts;     // sorted by (sample id, run)
    std::vector<std::string> missing;        // samples without a generated image
    std::vector<std::string> failed;         // samples where every run failed
    std::vector<std::string> warnings;       // human-readable, deterministic order
};

/// `<generations_dir>/<id>.png`, else `.ppm`.
std::optional<std::filesystem::path> find_generation(const std::filesystem::path& generations_dir,
                                                     const std::string& sample_id);

JudgeReport judge_many(const data::Manifest& manifest, const std::filesystem::path& generations_dir,
                       JudgeBackend& backend, const JudgeOptions& options = {});

/// One JSON object per line.
void write_verdicts(std::ostream& out, const std::vector<SampleVerdict>& verdicts);
/// ParseError on malformed lines or scores outside {0, 1, 2}.
std::vector<SampleVerdict> read_verdicts(std::istream& in);
std::vector<SampleVerdict> read_verdicts(const std::filesystem::path& path);

}  // namespace genius::judge
