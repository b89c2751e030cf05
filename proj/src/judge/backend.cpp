#include "genius/judge/backend.hpp"

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "genius/error.hpp"

namespace genius::judge {

namespace {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

bool valid_response_key(const std::string& key) {
    if (key == "rc" || key == "vc" || key == "aq") return true;
    if (key.size() < 3 || key.compare(0, 2, "vc") != 0 || key[2] == '0') return false;
    for (std::size_t i = 2; i < key.size(); ++i) {
        if (key[i] < '0' || key[i] > '9') return false;
    }
    return true;
}

std::vector<std::string> response_list(const json& v, const std::string& where) {
    if (v.is_string()) return {v.get<std::string>()};
    if (v.is_array() && !v.empty()) {
        std::vector<std::string> out;
        for (const json& e : v) {
            if (!e.is_string()) throw ValidationError(where + ": responses must be strings");
            out.push_back(e.get<std::string>());
        }
        return out;
    }
    throw ValidationError(where + ": expected a string or a non-empty array of strings");
}

std::map<std::string, std::vector<std::string>> responses_from(const json& obj, const std::string& where) {
    if (!obj.is_object()) throw ValidationError(where + " must be an object");
    std::map<std::string, std::vector<std::string>> out;
    for (const auto& [key, value] : obj.items()) {
        if (!valid_response_key(key)) throw ValidationError(where + ": unknown response key \"" + key + "\"");
        out[key] = response_list(value, where + "." + key);
    }
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string media_type(const std::string& bytes) {
    if (bytes.size() >= 4 && bytes.compare(1, 3, "PNG") == 0) return "image/png";
    if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '6' || bytes[1] == '3')) {
        return "image/x-portable-pixmap";
    }
    return "application/octet-stream";
}

}  // namespace

FixtureBackend FixtureBackend::from_json(std::string_view text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("judge fixture is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ValidationError("judge fixture must be an object");
    for (const auto& [key, value] : root.items()) {
        if (key != "format" && key != "version" && key != "identifier" && key != "default" && key != "samples") {
            throw ValidationError("judge fixture: unknown field \"" + key + "\"");
        }
    }
    if (root.value("format", "") != "genius-judge-fixture" || root.value("version", 0) != 1) {
        throw ValidationError("judge fixture needs \"format\": \"genius-judge-fixture\" and \"version\": 1");
    }
    FixtureBackend b;
    if (root.contains("identifier")) {
        if (!root["identifier"].is_string()) throw ValidationError("judge fixture: identifier must be a string");
        b.identifier_ = root["identifier"].get<std::string>();
    }
    if (root.contains("default")) b.defaults_ = responses_from(root["default"], "default");
    if (root.contains("samples")) {
        if (!root["samples"].is_object()) throw ValidationError("judge fixture: samples must be an object");
        for (const auto& [id, value] : root["samples"].items()) {
            b.samples_[id] = responses_from(value, "samples." + id);
        }
    }
    return b;
}

FixtureBackend FixtureBackend::load(const std::filesystem::path& path) { return from_json(read_file(path)); }

std::string FixtureBackend::send(const JudgeRequest& request) {
    std::vector<std::string> keys;
    if (request.metric == Metric::VisualConsistency) keys.push_back("vc" + std::to_string(request.vc_index));
    keys.emplace_back(metric_key(request.metric));

    const std::vector<std::string>* found = nullptr;
    auto look = [&](const Responses& table) {
        for (const auto& k : keys) {
            if (auto it = table.find(k); it != table.end()) return &it->second;
        }
        return static_cast<const std::vector<std::string>*>(nullptr);
    };
    if (auto it = samples_.find(request.sample_id); it != samples_.end()) found = look(it->second);
    if (found == nullptr) found = look(defaults_);
    if (found == nullptr) {
        throw ValidationError("judge fixture has no " + std::string(metric_key(request.metric)) +
                              " response for sample \"" + request.sample_id + "\"");
    }
    if (found->size() == 1) return found->front();
    if (request.run < 1 || request.run > static_cast<int>(found->size())) {
        throw ValidationError("judge fixture has no run " + std::to_string(request.run) + " " +
                              std::string(metric_key(request.metric)) + " response for sample \"" +
                              request.sample_id + "\"");
    }
    return (*found)[static_cast<std::size_t>(request.run - 1)];
}

std::string CountingBackend::send(const JudgeRequest& request) {
    ++counts_[static_cast<std::size_t>(request.metric)];
    return inner_.send(request);
}

int CountingBackend::total_calls() const {
    int n = 0;
    for (const auto& c : counts_) n += c.load();
    return n;
}

HttpBackend::HttpBackend(HttpConfig config) : config_(std::move(config)) {
    if (config_.endpoint.rfind("http://", 0) != 0 && config_.endpoint.rfind("https://", 0) != 0) {
        throw ValidationError("judge endpoint must start with http:// or https://: \"" + config_.endpoint + "\"");
    }
    if (config_.path.empty() || config_.path.front() != '/') {
        throw ValidationError("judge path must start with '/': \"" + config_.path + "\"");
    }
    if (config_.timeout_seconds <= 0) throw ValidationError("judge timeout must be positive");
    if (!config_.token_env.empty()) {
        const char* token = std::getenv(config_.token_env.c_str());
        if (token == nullptr || *token == '\0') {
            throw ValidationError("environment variable " + config_.token_env + " (judge token) is not set");
        }
        token_ = token;
    }
}

std::string HttpBackend::request_body(const JudgeRequest& request) {
    ojson body;
    body["prompt"] = request.prompt;
    ojson attachments = ojson::array();
    for (const Attachment& a : request.attachments) {
        const std::string bytes = read_file(a.path);
        attachments.push_back({{"name", a.name}, {"media_type", media_type(bytes)},
                               {"data", httplib::detail::base64_encode(bytes)}});
    }
    body["attachments"] = std::move(attachments);
    ojson meta;
    meta["sample_id"] = request.sample_id;
    meta["metric"] = metric_key(request.metric);
    meta["run"] = request.run;
    meta["vc_index"] = request.metric == Metric::VisualConsistency ? ojson(request.vc_index) : ojson(nullptr);
    body["metadata"] = std::move(meta);
    return body.dump();
}

std::string HttpBackend::send(const JudgeRequest& request) {
    httplib::Client client(config_.endpoint);
    if (!client.is_valid()) throw TransportError("cannot create client for " + config_.endpoint);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    client.set_write_timeout(config_.timeout_seconds, 0);
    httplib::Headers headers;
    if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);

    auto res = client.Post(config_.path, headers, request_body(request), "application/json");
    if (!res) throw TransportError("judge request failed: " + httplib::to_string(res.error()));
    if (res->status != 200) throw TransportError("judge returned HTTP " + std::to_string(res->status));
    json reply;
    try {
        reply = json::parse(res->body);
    } catch (const json::parse_error&) {
        throw TransportError("judge reply is not JSON");
    }
    if (!reply.is_object() || !reply.contains("text") || !reply["text"].is_string()) {
        throw TransportError("judge reply lacks a string \"text\" field");
    }
    return reply["text"].get<std::string>();
}

}  // namespace genius::judge
