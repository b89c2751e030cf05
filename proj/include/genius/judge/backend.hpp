/// @file backend.hpp
/// @brief Where judge prompts go: the backend interface, an offline fixture
/// judge, a call-counting wrapper and a JSON-over-HTTP client.

#pragma once

#include <array>
#include <atomic>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "genius/judge/score.hpp"

namespace genius::judge {

/// An image file sent along with the prompt; name is the tag used in the prompt text.
struct Attachment {
    std::string name;
    std::filesystem::path path;
};

struct JudgeRequest {
    std::string sample_id;
    Metric metric = Metric::RuleCompliance;
    int run = 1;        // 1-based
    int vc_index = 0;   // 1-based hint number for VC requests, 0 otherwise
    std::string prompt;
    std::vector<Attachment> attachments;
};

class JudgeBackend {
public:
    virtual ~JudgeBackend() = default;
    virtual std::string identifier() const = 0;
    /// Raw response text. TransportError on a failed call; implementations must
    /// be safe to call from several threads.
    virtual std::string send(const JudgeRequest& request) = 0;
};

/// Canned responses read from a JSON file:
///
///     {"format": "genius-judge-fixture", "version": 1, "identifier": "...",
///      "default": {"rc": R, "vc": R, "aq": R},
///      "samples": {"<id>": {"rc": R, "vc": R, "vc2": R, "aq": R}}}
///
/// R is a string (every run) or an array of strings (one per run). "vcN"
/// applies to hint N only and wins over "vc". Sample entries win over
/// "default". A request with no matching entry throws ValidationError.
class FixtureBackend : public JudgeBackend {
public:
    static FixtureBackend from_json(std::string_view json);
    static FixtureBackend load(const std::filesystem::path& path);

    std::string identifier() const override { return identifier_; }
    std::string send(const JudgeRequest& request) override;

private:
    using Responses = std::map<std::string, std::vector<std::string>>;  // key -> per-run (size 1 = all runs)
    std::string identifier_ = "fixture";
    Responses defaults_;
    std::map<std::string, Responses> samples_;
};

/// Forwards to another backend and counts calls per metric.
class CountingBackend : public JudgeBackend {
public:
    explicit CountingBackend(JudgeBackend& inner) : inner_(inner) {}

    std::string identifier() const override { return inner_.identifier(); }
    std::string send(const JudgeRequest& request) override;

    int calls(Metric m) const { return counts_[static_cast<std::size_t>(m)].load(); }
    int total_calls() const;

private:
    JudgeBackend& inner_;
    std::array<std::atomic<int>, 3> counts_{};
};

struct HttpConfig {
    std::string endpoint;          // scheme://host[:port]
    std::string path = "/judge";
    std::string token_env;         // name of the variable holding the bearer token; empty = no auth
    int timeout_seconds = 120;
};

/// POSTs {"prompt", "attachments": [{"name", "media_type", "data" (base64)}],
/// "metadata": {"sample_id", "metric", "run", "vc_index"}} and expects a 200
/// reply {"text": "..."}. Anything else is a TransportError.
class HttpBackend : public JudgeBackend {
public:
    /// ValidationError if token_env is named but unset, or the endpoint is malformed.
    explicit HttpBackend(HttpConfig config);

    std::string identifier() const override { return "http:" + config_.endpoint + config_.path; }
    std::string send(const JudgeRequest& request) override;

    /// The JSON body that would be posted for `request`.
    static std::string request_body(const JudgeRequest& request);

private:
    HttpConfig config_;
    std::string token_;
};

}  // namespace genius::judge
