#pragma once
// LLM function-calling selection: chat-completions request building, tool-call
// parsing, and the transport stack (live HTTP, record, replay, fail). Replay
// keys requests by a content hash so fixtures survive reordering of runs.

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "anomarank/common.hpp"
#include "anomarank/effects.hpp"
#include "anomarank/prng.hpp"
#include "anomarank/selector.hpp"

namespace anomarank {

inline constexpr const char* kSystemPrompt =
    "You are a machine-maintenance expert who knows how every kind of industrial "
    "machine sounds when it is failing. Given a description of a machine's normal "
    "operating sound, choose the single most appropriate anomalous sound effect to "
    "overlay on a recording of that machine. Call exactly one of the provided "
    "functions; do not reply with text. Omit parameters you have no opinion about.";

inline nlohmann::json build_llm_request(const Caption& caption,
                                        const std::vector<EffectSchema>& schemas,
                                        const std::string& model) {
    if (schemas.size() != 10) throw ConfigError("build_llm_request: expected 10 effect schemas");
    nlohmann::json tools = nlohmann::json::array();
    for (const auto& s : schemas) tools.push_back(schema_to_tool_json(s));
    return {{"model", model},
            {"messages",
             {{{"role", "system"}, {"content", kSystemPrompt}},
              {{"role", "user"},
               {"content", "Normal machine sound: \"" + caption.text +
                               "\". Select the most appropriate anomaly effect for this machine "
                               "and call the corresponding function."}}}},
            {"tools", tools},
            {"tool_choice", "required"},
            {"temperature", 0}};
}

// Content hash of a request: FNV-1a 64 over the canonical (sorted-key) dump,
// so fixtures key on what was asked, not on when or in which order.
inline std::string request_content_hash(const nlohmann::json& request) {
    const std::uint64_t h = fnv1a64(request.dump());
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

// Parses a chat-completions response into an EffectSpec. Every malformed
// shape is a hard SelectorError; there is no fallback selection.
inline EffectSpec parse_tool_call_response(const std::string& body, std::uint64_t seed) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
        throw SelectorError(std::string("LLM response is not valid JSON: ") + e.what());
    }
    if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
        throw SelectorError("LLM response has no choices");
    }
    const auto& message = j["choices"][0].value("message", nlohmann::json::object());
    if (!message.contains("tool_calls") || !message["tool_calls"].is_array() ||
        message["tool_calls"].empty()) {
        throw SelectorError("LLM response contains no tool call");
    }
    const auto& call = message["tool_calls"][0];
    const std::string fn_name = call.at("function").at("name").get<std::string>();
    const auto kind = try_effect_kind_from_tool_name(fn_name);
    if (!kind) throw SelectorError("LLM called unregistered function '" + fn_name + "'");

    nlohmann::json args;
    try {
        args = nlohmann::json::parse(call.at("function").at("arguments").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw SelectorError(std::string("tool-call arguments are not valid JSON: ") + e.what());
    }
    if (!args.is_object()) throw SelectorError("tool-call arguments are not a JSON object");

    EffectSpec spec;
    spec.kind = *kind;
    spec.seed = seed;
    for (const auto& [name, value] : args.items()) {
        if (name == "seed") continue;  // seeding is owned by the run, not the model
        if (!value.is_number()) {
            throw SelectorError("tool-call argument '" + name + "' is not numeric");
        }
        if (name == "start_time") {
            spec.start_time = value.get<double>();
            continue;
        }
        spec.params[name] = value.get<double>();
    }
    try {
        spec.params = resolve_params(spec);  // validate and fill defaults
    } catch (const ConfigError& e) {
        throw SelectorError(std::string("LLM proposed invalid parameters: ") + e.what());
    }
    return spec;
}

// ---- transports -------------------------------------------------------------

class Transport {
  public:
    virtual ~Transport() = default;
    // POSTs one chat-completions request body, returns the raw response body.
    virtual std::string post(const std::string& request_body) = 0;
};

// Live HTTP transport. The API key is read from the configured environment
// variable at call time; a client is built per call so posts are reentrant.
class HttpTransport : public Transport {
  public:
    HttpTransport(std::string endpoint, std::string api_key_env)
        : endpoint_(std::move(endpoint)), api_key_env_(std::move(api_key_env)) {}

    std::string post(const std::string& request_body) override {
        const auto scheme_end = endpoint_.find("://");
        if (scheme_end == std::string::npos) {
            throw TransportError("endpoint '" + endpoint_ + "' has no scheme");
        }
        const std::string scheme = endpoint_.substr(0, scheme_end);
        if (scheme != "http") {
            throw TransportError("endpoint scheme '" + scheme +
                                 "' unsupported in this build; use an http endpoint or a replay fixture");
        }
        const auto path_start = endpoint_.find('/', scheme_end + 3);
        const std::string host = endpoint_.substr(scheme_end + 3, path_start - (scheme_end + 3));
        const std::string path = path_start == std::string::npos ? "/" : endpoint_.substr(path_start);

        httplib::Client client(("http://" + host).c_str());
        client.set_read_timeout(120, 0);
        httplib::Headers headers;
        if (const char* key = std::getenv(api_key_env_.c_str())) {
            headers.emplace("Authorization", std::string("Bearer ") + key);
        } else {
            throw TransportError("environment variable " + api_key_env_ + " is not set");
        }
        auto res = client.Post(path.c_str(), headers, request_body, "application/json");
        if (!res) throw TransportError("POST " + endpoint_ + " failed: no response");
        if (res->status != 200) {
            throw TransportError("POST " + endpoint_ + " returned status " +
                                 std::to_string(res->status) + ": " + res->body);
        }
        return res->body;
    }

  private:
    std::string endpoint_;
    std::string api_key_env_;
};

// Replays recorded responses from a fixture; never touches the network.
// The store is immutable after load and safe to share across threads.
class ReplayTransport : public Transport {
  public:
    ReplayTransport() = default;
    ReplayTransport(ReplayTransport&& other) noexcept
        : entries_(std::move(other.entries_)), lookups_(other.lookups_.load()) {}

    static ReplayTransport from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw TransportError("cannot open replay fixture '" + path + "'");
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw TransportError("replay fixture '" + path + "' is not valid JSON: " + e.what());
        }
        return from_json(j);
    }

    static ReplayTransport from_json(const nlohmann::json& j) {
        ReplayTransport t;
        for (const auto& [hash, body] : j.at("entries").items()) {
            t.entries_[hash] = body.get<std::string>();
        }
        return t;
    }

    std::string post(const std::string& request_body) override {
        ++lookups_;
        const std::string hash = request_content_hash(nlohmann::json::parse(request_body));
        const auto it = entries_.find(hash);
        if (it == entries_.end()) {
            throw TransportError("replay fixture has no entry for request hash " + hash +
                                 " (re-record the fixture after changing prompts or schemas)");
        }
        return it->second;
    }

    std::size_t size() const { return entries_.size(); }
    std::size_t lookups() const { return lookups_; }

  private:
    std::map<std::string, std::string> entries_;
    std::atomic<std::size_t> lookups_{0};
};

// Wraps a live transport and captures request-hash -> response pairs.
class RecordingTransport : public Transport {
  public:
    explicit RecordingTransport(std::shared_ptr<Transport> inner) : inner_(std::move(inner)) {}

    std::string post(const std::string& request_body) override {
        const std::string response = inner_->post(request_body);
        const std::string hash = request_content_hash(nlohmann::json::parse(request_body));
        std::lock_guard<std::mutex> lock(mutex_);
        entries_[hash] = response;
        return response;
    }

    nlohmann::json fixture_json() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return {{"entries", entries_}};
    }

    void save(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw DataError("cannot write replay fixture '" + path + "'");
        out << fixture_json().dump(2) << "\n";
    }

  private:
    std::shared_ptr<Transport> inner_;
    mutable std::mutex mutex_;
    std::map<std::string, std::string> entries_;
};

// Asserts that no network activity happens: any post is a hard failure.
class FailTransport : public Transport {
  public:
    std::string post(const std::string&) override {
        ++calls_;
        throw TransportError("network use is disabled in this run");
    }

    std::size_t calls() const { return calls_; }

  private:
    std::atomic<std::size_t> calls_{0};
};

// ---- bundled fixture construction --------------------------------------------

// A minimal chat-completions response whose single tool call names `kind`
// with empty arguments, so every parameter resolves to its schema default.
inline std::string canned_tool_call_response(EffectKind kind) {
    nlohmann::json call;
    call["id"] = std::string("call_fixture_") + to_string(kind);
    call["type"] = "function";
    call["function"] = {{"name", tool_name(kind)}, {"arguments", "{}"}};

    nlohmann::json message;
    message["role"] = "assistant";
    message["content"] = nullptr;
    message["tool_calls"] = nlohmann::json::array({call});

    nlohmann::json choice;
    choice["index"] = 0;
    choice["message"] = message;
    choice["finish_reason"] = "tool_calls";

    nlohmann::json body;
    body["id"] = std::string("chatcmpl-fixture-") + to_string(kind);
    body["object"] = "chat.completion";
    body["model"] = "fixture";
    body["choices"] = nlohmann::json::array({choice});
    return body.dump();
}

// Deterministically builds the replay fixture covering the given
// caption -> kind picks under the given model name.
inline nlohmann::json make_replay_fixture_json(
    const std::vector<std::pair<Caption, EffectKind>>& picks, const std::string& model) {
    nlohmann::json entries = nlohmann::json::object();
    for (const auto& [caption, kind] : picks) {
        const nlohmann::json request = build_llm_request(caption, effect_schemas(), model);
        entries[request_content_hash(request)] = canned_tool_call_response(kind);
    }
    return {{"entries", entries}};
}

// ---- client -----------------------------------------------------------------

// One record of a selection round-trip, kept verbatim for auditing.
struct LlmExchange {
    nlohmann::json request;
    std::string response_body;
    std::optional<EffectSpec> spec;
    std::string error;
};

struct LlmClient {
    std::shared_ptr<Transport> transport;
    std::string model = "gpt-4o";
};

// Full selection round-trip: build request, post, parse, validate. The seed
// comes from the run's master seed, never from the model.
inline EffectSpec select_effect_llm(const Caption& caption, LlmClient& client, std::uint64_t seed,
                                    LlmExchange* exchange = nullptr) {
    if (!client.transport) throw ConfigError("select_effect_llm: client has no transport");
    const nlohmann::json request = build_llm_request(caption, effect_schemas(), client.model);
    if (exchange) exchange->request = request;
    std::string body;
    try {
        body = client.transport->post(request.dump());
    } catch (const Error& e) {
        if (exchange) exchange->error = e.what();
        throw;
    }
    if (exchange) exchange->response_body = body;
    try {
        EffectSpec spec = parse_tool_call_response(body, seed);
        if (exchange) exchange->spec = spec;
        return spec;
    } catch (const Error& e) {
        if (exchange) exchange->error = e.what();
        throw;
    }
}

}  // namespace anomarank
