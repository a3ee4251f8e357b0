#include "bladerag/vlm_client.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <semaphore>
#include <thread>

#include <httplib.h>

#include "bladerag/errors.hpp"
#include "bladerag/text_utils.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace bladerag {

namespace {

bool is_url(const std::string& locator) {
    return locator.rfind("http://", 0) == 0 || locator.rfind("https://", 0) == 0;
}

std::string mime_for(const std::string& path) {
    std::string ext = text::ascii_lower(fs::path(path).extension().string());
    if (ext == ".png") return "image/png";
    if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
    if (ext == ".gif") return "image/gif";
    if (ext == ".webp") return "image/webp";
    if (ext == ".bmp") return "image/bmp";
    return "application/octet-stream";
}

void split_endpoint(const std::string& endpoint, std::string& base,
                    std::string& path_prefix) {
    auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos)
        throw ConfigError("VLM endpoint must include a scheme: " + endpoint);
    auto path_start = endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        base = endpoint;
        path_prefix.clear();
    } else {
        base = endpoint.substr(0, path_start);
        path_prefix = endpoint.substr(path_start);
        while (!path_prefix.empty() && path_prefix.back() == '/') path_prefix.pop_back();
    }
}

} // namespace

void VlmConfig::validate() const {
    if (timeout_seconds <= 0) throw ConfigError("VLM timeout must be positive");
    if (max_retries < 0) throw ConfigError("VLM max_retries must be >= 0");
    if (temperature < 0.0 || temperature > 2.0)
        throw ConfigError("VLM temperature must be within [0, 2]");
    if (max_in_flight < 1) throw ConfigError("VLM max_in_flight must be at least 1");
    if (backoff_seconds < 0) throw ConfigError("VLM backoff must be >= 0");
}

HttpChatTransport::HttpChatTransport(const VlmConfig& cfg) : cfg_(cfg) {
    if (cfg_.endpoint.empty())
        throw ConfigError("VLM endpoint is not configured");
    split_endpoint(cfg_.endpoint, base_, path_prefix_);
    if (const char* key = std::getenv(cfg_.api_key_env.c_str())) api_key_ = key;
}

ChatTransport::AttemptResult HttpChatTransport::attempt(const json& request,
                                                        const std::string&) {
    httplib::Client client(base_);
    client.set_connection_timeout(static_cast<time_t>(cfg_.timeout_seconds), 0);
    client.set_read_timeout(static_cast<time_t>(cfg_.timeout_seconds), 0);
    client.set_write_timeout(static_cast<time_t>(cfg_.timeout_seconds), 0);

    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    auto res = client.Post(path_prefix_ + "/chat/completions", headers, request.dump(),
                           "application/json");
    if (!res) throw TransportError("chat request failed: " + httplib::to_string(res.error()));
    return {res->status, res->body};
}

ReplayStore::ReplayStore(std::string dir) : dir_(std::move(dir)) {}

std::string ReplayStore::index_path() const {
    return (fs::path(dir_) / "replay.index.json").string();
}

bool ReplayStore::contains(const std::string& key) const {
    return fs::exists(fs::path(dir_) / (key + ".response.txt"));
}

ReplayStore::Entry ReplayStore::lookup(const std::string& key) const {
    fs::path file = fs::path(dir_) / (key + ".response.txt");
    if (!fs::exists(file))
        throw MissingFixtureError("no replay fixture for exchange \"" + key +
                                  "\" in " + dir_);
    Entry entry;
    entry.response_text = text::read_file(file.string());
    if (fs::exists(index_path())) {
        json index = json::parse(text::read_file(index_path()));
        if (index.contains("entries") && index["entries"].contains(key))
            entry.latency_seconds =
                index["entries"][key].value("latency_seconds", 0.0);
    }
    return entry;
}

void ReplayStore::store(const std::string& key, const std::string& response_text,
                        double latency_seconds) {
    std::lock_guard lock(write_mutex_);
    text::write_file((fs::path(dir_) / (key + ".response.txt")).string(), response_text);
    json index;
    if (fs::exists(index_path())) {
        index = json::parse(text::read_file(index_path()));
    } else {
        index = json{{"version", 1}, {"entries", json::object()}};
    }
    index["entries"][key] = {{"file", key + ".response.txt"},
                             {"latency_seconds", latency_seconds}};
    text::write_file(index_path(), index.dump(2) + "\n");
}

ReplayTransport::ReplayTransport(std::shared_ptr<ReplayStore> store)
    : store_(std::move(store)) {}

ChatTransport::AttemptResult ReplayTransport::attempt(const json&,
                                                      const std::string& key) {
    ReplayStore::Entry entry = store_->lookup(key);
    json body{{"choices",
               json::array({json{{"message", json{{"role", "assistant"},
                                                  {"content", entry.response_text}}}}})}};
    return {200, body.dump()};
}

std::optional<double> ReplayTransport::recorded_latency(const std::string& key) const {
    if (!store_->contains(key)) return std::nullopt;
    return store_->lookup(key).latency_seconds;
}

std::string exchange_key_for(const std::string& image_locator) {
    std::string tail = image_locator;
    auto slash = tail.find_last_of("/\\");
    if (slash != std::string::npos) tail = tail.substr(slash + 1);
    auto query = tail.find_first_of("?#");
    if (query != std::string::npos) tail = tail.substr(0, query);
    auto dot = tail.find_last_of('.');
    if (dot != std::string::npos && dot > 0) tail = tail.substr(0, dot);
    return tail;
}

struct VlmClient::Impl {
    VlmConfig cfg;
    std::shared_ptr<ChatTransport> transport;
    std::shared_ptr<ReplayStore> record_store;
    std::counting_semaphore<> slots;

    Impl(VlmConfig c, std::shared_ptr<ChatTransport> t, std::shared_ptr<ReplayStore> r)
        : cfg(std::move(c)), transport(std::move(t)), record_store(std::move(r)),
          slots(cfg.max_in_flight) {}
};

VlmClient::VlmClient(VlmConfig cfg, std::shared_ptr<ChatTransport> transport,
                     std::shared_ptr<ReplayStore> record_store) {
    cfg.validate();
    if (!transport) throw ConfigError("VlmClient requires a transport");
    impl_ = std::make_unique<Impl>(std::move(cfg), std::move(transport),
                                   std::move(record_store));
}

VlmClient::~VlmClient() = default;

json VlmClient::build_request(const std::string& prompt,
                              const std::string& image_locator) const {
    std::string url;
    if (is_url(image_locator)) {
        url = image_locator;
    } else {
        std::string bytes = text::read_file(image_locator);
        url = "data:" + mime_for(image_locator) + ";base64," +
              text::base64_encode(bytes);
    }
    json content = json::array(
        {json{{"type", "text"}, {"text", prompt}},
         json{{"type", "image_url"}, {"image_url", json{{"url", url}}}}});
    return json{{"model", impl_->cfg.model},
                {"temperature", impl_->cfg.temperature},
                {"messages", json::array({json{{"role", "user"},
                                               {"content", std::move(content)}}})}};
}

VlmExchange VlmClient::analyze(const std::string& prompt,
                               const std::string& image_locator) {
    const std::string key = exchange_key_for(image_locator);
    json request = build_request(prompt, image_locator);

    impl_->slots.acquire();
    struct Release {
        std::counting_semaphore<>& s;
        ~Release() { s.release(); }
    } release{impl_->slots};

    VlmExchange exchange;
    exchange.prompt = prompt;
    exchange.image_locator = image_locator;

    auto started = std::chrono::steady_clock::now();
    ChatTransport::AttemptResult result;
    std::string last_error;
    int attempt = 0;
    for (;;) {
        ++attempt;
        try {
            result = impl_->transport->attempt(request, key);
        } catch (const MissingFixtureError&) {
            throw;
        } catch (const TransportError& e) {
            last_error = e.what();
            result.status = 0;
        }
        if (result.status >= 200 && result.status < 300) break;
        if (result.status >= 400 && result.status < 500)
            throw ConfigError("VLM endpoint rejected the request with HTTP " +
                              std::to_string(result.status));
        if (attempt > impl_->cfg.max_retries) {
            std::string reason = result.status == 0
                                     ? last_error
                                     : "HTTP " + std::to_string(result.status);
            throw TransportError("VLM request failed after " + std::to_string(attempt) +
                                 " attempts: " + reason);
        }
        auto backoff = std::chrono::duration<double>(
            impl_->cfg.backoff_seconds * static_cast<double>(1 << (attempt - 1)));
        std::this_thread::sleep_for(backoff);
    }
    auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                 started);

    json reply;
    try {
        reply = json::parse(result.body);
    } catch (const json::exception& e) {
        throw ProtocolError(std::string("VLM reply is not JSON: ") + e.what());
    }
    std::string content;
    try {
        content = reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception&) {
        throw ProtocolError("VLM reply carries no message content");
    }
    if (content.empty()) throw ProtocolError("VLM returned an empty completion");

    exchange.response_text = std::move(content);
    exchange.http_status = result.status;
    exchange.attempts = attempt;
    auto recorded = impl_->transport->recorded_latency(key);
    exchange.latency_seconds = recorded ? *recorded : elapsed.count();

    if (impl_->record_store)
        impl_->record_store->store(key, exchange.response_text, exchange.latency_seconds);
    return exchange;
}

} // namespace bladerag
