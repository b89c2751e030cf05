#include "genius/judge/judge.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "genius/judge/prompts.hpp"

namespace genius::judge {

namespace {

using ojson = nlohmann::ordered_json;

// Sends with bounded retries. Returns the parsed score or the last error text.
struct CallOutcome {
    std::optional<MetricScore> score;
    std::string error;
};

CallOutcome call_with_retries(JudgeBackend& backend, const JudgeRequest& request, int max_retries) {
    CallOutcome out;
    for (int attempt = 0; attempt <= max_retries; ++attempt) {
        try {
            out.score = parse_score(backend.send(request), request.metric);
            return out;
        } catch (const TransportError& e) {
            out.error = e.what();
        } catch (const ParseError& e) {
            out.error = e.what();
        }
    }
    out.error = std::string(metric_key(request.metric)) + " failed after " + std::to_string(max_retries + 1) +
                " attempts: " + out.error;
    return out;
}

}  // namespace

bool plagiarism_check(const data::Rgb8Image& reference, const data::Rgb8Image& target) {
    return reference == target;
}

bool plagiarism_check(const std::filesystem::path& reference, const std::filesystem::path& target) {
    return plagiarism_check(data::load_image(reference), data::load_image(target));
}

void JudgeOptions::validate() const {
    if (runs < 1) throw ContractError("runs must be at least 1");
    if (max_retries < 0) throw ContractError("max_retries must be non-negative");
    if (workers < 1) throw ContractError("workers must be at least 1");
}

std::vector<SampleVerdict> judge_runs(const data::Manifest& manifest, const data::SampleRecord& sample,
                                      const std::filesystem::path& generated_image, JudgeBackend& backend,
                                      const JudgeOptions& options) {
    options.validate();

    // The copy check does not depend on the run, so it is done once.
    std::vector<bool> copied(sample.vc_hints.size(), false);
    if (!sample.vc_hints.empty()) {
        const data::Rgb8Image generated = data::load_image(generated_image);
        for (std::size_t k = 0; k < sample.vc_hints.size(); ++k) {
            const auto ref = manifest.resolve(sample.image(sample.vc_hints[k].reference));
            copied[k] = plagiarism_check(data::load_image(ref), generated);
        }
    }

    const Attachment output{options.output_image_tag, generated_image};
    std::vector<SampleVerdict> verdicts;
    for (int run = 1; run <= options.runs; ++run) {
        SampleVerdict v;
        v.sample_id = sample.id;
        v.model = options.model;
        v.task = sample.task;
        v.run_index = run;
        v.vc_copied = copied;

        auto request = [&](Metric metric, int vc_index, std::string prompt, std::vector<Attachment> attachments) {
            JudgeRequest r;
            r.sample_id = sample.id;
            r.metric = metric;
            r.run = run;
            r.vc_index = vc_index;
            r.prompt = std::move(prompt);
            r.attachments = std::move(attachments);
            return call_with_retries(backend, r, options.max_retries);
        };

        auto rc = request(Metric::RuleCompliance, 0, render_rc_prompt(sample.rc_hint, options.output_image_tag), {output});
        if (!rc.score) {
            v.error = rc.error;
            verdicts.push_back(std::move(v));
            continue;
        }
        v.rc = *rc.score;
        for (std::size_t k = 0; k < sample.vc_hints.size() && v.ok(); ++k) {
            if (copied[k]) {
                v.vc.emplace_back(0);
                continue;
            }
            const auto& hint = sample.vc_hints[k];
            const Attachment reference{options.reference_image_tag, manifest.resolve(sample.image(hint.reference))};
            auto vc = request(Metric::VisualConsistency, static_cast<int>(k) + 1,
                              render_vc_prompt(options.reference_image_tag, hint.hint, options.output_image_tag),
                              {reference, output});
            if (vc.score) {
                v.vc.push_back(*vc.score);
            } else {
                v.error = vc.error;
            }
        }
        if (v.ok()) {
            auto aq = request(Metric::AestheticQuality, 0, render_aq_prompt(options.output_image_tag), {output});
            if (aq.score) {
                v.aq = *aq.score;
            } else {
                v.error = aq.error;
            }
        }
        if (!v.ok()) {
            v.rc = MetricScore(0);
            v.vc.clear();
            v.aq = MetricScore(0);
        }
        verdicts.push_back(std::move(v));
    }
    return verdicts;
}

std::vector<SampleVerdict> judge_sample(const data::Manifest& manifest, const data::SampleRecord& sample,
                                        const std::filesystem::path& generated_image, JudgeBackend& backend,
                                        const JudgeOptions& options) {
    auto verdicts = judge_runs(manifest, sample, generated_image, backend, options);
    if (std::none_of(verdicts.begin(), verdicts.end(), [](const SampleVerdict& v) { return v.ok(); })) {
        throw JudgeError("every run failed for sample \"" + sample.id + "\": " + *verdicts.back().error);
    }
    return verdicts;
}

std::optional<std::filesystem::path> find_generation(const std::filesystem::path& generations_dir,
                                                     const std::string& sample_id) {
    for (const char* ext : {".png", ".ppm"}) {
        const auto p = generations_dir / (sample_id + ext);
        if (std::filesystem::is_regular_file(p)) return p;
    }
    return std::nullopt;
}

JudgeReport judge_many(const data::Manifest& manifest, const std::filesystem::path& generations_dir,
                       JudgeBackend& backend, const JudgeOptions& options) {
    options.validate();
    struct Slot {
        std::vector<SampleVerdict> verdicts;
        std::exception_ptr fatal;
    };
    const std::size_t n = manifest.samples.size();
    std::vector<std::optional<std::filesystem::path>> generated(n);
    for (std::size_t i = 0; i < n; ++i) generated[i] = find_generation(generations_dir, manifest.samples[i].id);

    std::vector<Slot> slots(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            if (!generated[i]) continue;
            try {
                slots[i].verdicts = judge_runs(manifest, manifest.samples[i], *generated[i], backend, options);
            } catch (...) {
                slots[i].fatal = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(options.workers), std::max<std::size_t>(n, 1));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    // First configuration or input error wins, in manifest order.
    for (const Slot& s : slots) {
        if (s.fatal) std::rethrow_exception(s.fatal);
    }

    JudgeReport report;
    for (std::size_t i = 0; i < n; ++i) {
        const std::string& id = manifest.samples[i].id;
        if (!generated[i]) {
            report.missing.push_back(id);
            report.warnings.push_back("sample " + id + ": no generated image, excluded");
            continue;
        }
        bool any_ok = false;
        for (const SampleVerdict& v : slots[i].verdicts) {
            if (v.ok()) {
                any_ok = true;
            } else {
                report.warnings.push_back("sample " + id + " run " + std::to_string(v.run_index) +
                                          " failed and is excluded: " + *v.error);
            }
        }
        if (!any_ok) report.failed.push_back(id);
        report.verdicts.insert(report.verdicts.end(), slots[i].verdicts.begin(), slots[i].verdicts.end());
    }
    std::stable_sort(report.verdicts.begin(), report.verdicts.end(), [](const SampleVerdict& a, const SampleVerdict& b) {
        return std::tie(a.sample_id, a.run_index) < std::tie(b.sample_id, b.run_index);
    });
    return report;
}

void write_verdicts(std::ostream& out, const std::vector<SampleVerdict>& verdicts) {
    for (const SampleVerdict& v : verdicts) {
        ojson j;
        j["sample_id"] = v.sample_id;
        j["model"] = v.model;
        j["task"] = data::to_string(v.task);
        j["dimension"] = data::to_string(v.dimension());
        j["run"] = v.run_index;
        if (v.ok()) {
            j["status"] = "ok";
            j["rc"] = v.rc.value();
            ojson vc = ojson::array();
            for (const MetricScore& s : v.vc) vc.push_back(s.value());
            j["vc"] = std::move(vc);
            j["aq"] = v.aq.value();
            j["vc_copied"] = v.vc_copied;
        } else {
            j["status"] = "failed";
            j["error"] = *v.error;
        }
        out << j.dump() << '\n';
    }
}

std::vector<SampleVerdict> read_verdicts(std::istream& in) {
    std::vector<SampleVerdict> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = "verdict line " + std::to_string(lineno);
        try {
            const auto j = nlohmann::json::parse(line);
            SampleVerdict v;
            v.sample_id = j.at("sample_id").get<std::string>();
            v.model = j.at("model").get<std::string>();
            v.task = data::parse_task(j.at("task").get<std::string>());
            v.run_index = j.at("run").get<int>();
            if (v.run_index < 1) throw ParseError(where + ": run must be >= 1");
            if (j.contains("dimension") && data::parse_dimension(j["dimension"].get<std::string>()) != v.dimension()) {
                throw ParseError(where + ": dimension does not match task");
            }
            const std::string status = j.at("status").get<std::string>();
            if (status == "ok") {
                v.rc = MetricScore(j.at("rc").get<int>());
                for (const auto& s : j.at("vc")) v.vc.emplace_back(s.get<int>());
                v.aq = MetricScore(j.at("aq").get<int>());
                v.vc_copied = j.value("vc_copied", std::vector<bool>(v.vc.size(), false));
                if (v.vc_copied.size() != v.vc.size()) throw ParseError(where + ": vc_copied length differs from vc");
            } else if (status == "failed") {
                v.error = j.value("error", std::string("failed"));
            } else {
                throw ParseError(where + ": unknown status \"" + status + "\"");
            }
            out.push_back(std::move(v));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(where + ": " + e.what());
        } catch (const ContractError& e) {
            throw ParseError(where + ": " + e.what());
        } catch (const ValidationError& e) {
            throw ParseError(where + ": " + e.what());
        }
    }
    return out;
}

std::vector<SampleVerdict> read_verdicts(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read verdicts " + path.string());
    return read_verdicts(in);
}

}  // namespace genius::judge
