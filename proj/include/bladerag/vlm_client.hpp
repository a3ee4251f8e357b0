#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

namespace bladerag {

struct VlmConfig {
    std::string endpoint;                  // e.g. https://host/v1
    std::string model = "qwen-vl-max";
    std::string api_key_env = "VLM_API_KEY";
    double timeout_seconds = 120.0;
    int max_retries = 2;                   // transport failures and HTTP 5xx only
    double temperature = 0.0;
    int max_in_flight = 4;
    double backoff_seconds = 1.0;          // doubles per retry

    void validate() const;
};

/// One round trip to the model: what was sent, what came back, how long the
/// transport took (prompt assembly and extraction excluded), and how many
/// attempts it cost.
struct VlmExchange {
    std::string prompt;
    std::string image_locator;
    std::string response_text;
    double latency_seconds = 0.0;
    int http_status = 0;
    int attempts = 0;
};

/// A single delivery attempt of a chat-completions request. Implementations
/// throw TransportError for connection-level failures; HTTP-level outcomes
/// come back as status + body. `exchange_key` identifies the exchange for
/// record/replay stores (the inspection image id).
class ChatTransport {
public:
    struct AttemptResult {
        int status = 0;
        std::string body;
    };

    virtual ~ChatTransport() = default;
    virtual AttemptResult attempt(const nlohmann::json& request,
                                  const std::string& exchange_key) = 0;

    /// Replay transports answer with the latency of the original exchange so
    /// downstream latency statistics stay reproducible.
    virtual std::optional<double> recorded_latency(const std::string& exchange_key) const {
        (void)exchange_key;
        return std::nullopt;
    }
};

/// POSTs to {endpoint}/chat/completions with bearer auth from the
/// environment variable named in the config.
class HttpChatTransport : public ChatTransport {
public:
    explicit HttpChatTransport(const VlmConfig& cfg);
    AttemptResult attempt(const nlohmann::json& request,
                          const std::string& exchange_key) override;

private:
    VlmConfig cfg_;
    std::string base_;
    std::string path_prefix_;
    std::string api_key_;
};

/// Directory of "{key}.response.txt" fixtures plus a "replay.index.json"
/// mapping keys to files and original latencies.
class ReplayStore {
public:
    explicit ReplayStore(std::string dir);

    struct Entry {
        std::string response_text;
        double latency_seconds = 0.0;
    };

    /// Throws MissingFixtureError when no fixture exists for the key.
    Entry lookup(const std::string& key) const;

    /// Record mode: persists an exchange for later replay. Serialized
    /// internally, so parallel recording is safe.
    void store(const std::string& key, const std::string& response_text,
               double latency_seconds);

    bool contains(const std::string& key) const;

private:
    std::string dir_;
    std::mutex write_mutex_;
    std::string index_path() const;
};

/// Serves recorded exchanges without touching the network.
class ReplayTransport : public ChatTransport {
public:
    explicit ReplayTransport(std::shared_ptr<ReplayStore> store);
    AttemptResult attempt(const nlohmann::json& request,
                          const std::string& exchange_key) override;
    std::optional<double> recorded_latency(const std::string& exchange_key) const override;

private:
    std::shared_ptr<ReplayStore> store_;
};

/// Replay key for an image locator: the file name without its extension.
std::string exchange_key_for(const std::string& image_locator);

/// Sends an assembled prompt plus one image to an OpenAI-compatible
/// chat-completions endpoint. Retries transport failures and HTTP 5xx with
/// exponential backoff; HTTP 4xx is a ConfigError and is not retried; an
/// empty completion is a ProtocolError. Concurrent calls are capped by
/// max_in_flight. The prompt is passed through byte for byte.
class VlmClient {
public:
    VlmClient(VlmConfig cfg, std::shared_ptr<ChatTransport> transport,
              std::shared_ptr<ReplayStore> record_store = nullptr);
    ~VlmClient();

    /// `image_locator` is an http(s) URL (passed through) or a local file
    /// (inlined as a base64 data URL).
    VlmExchange analyze(const std::string& prompt, const std::string& image_locator);

    /// The request body analyze() would send; exposed for tests.
    nlohmann::json build_request(const std::string& prompt,
                                 const std::string& image_locator) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace bladerag
