#include "bladerag/embedding.hpp"

#include <cmath>
#include <cstdlib>
#include <semaphore>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "bladerag/errors.hpp"
#include "bladerag/text_utils.hpp"

using nlohmann::json;

namespace bladerag {

namespace {

// FNV-1a over the bytes, seed folded into the basis, finished with a
// splitmix-style avalanche so the top bit is usable as a sign.
std::uint64_t seeded_hash(const char* data, std::size_t len, std::uint64_t seed) {
    std::uint64_t h = 14695981039346656037ULL ^ (seed * 0x9E3779B97F4A7C15ULL);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= static_cast<unsigned char>(data[i]);
        h *= 1099511628211ULL;
    }
    h ^= h >> 30;
    h *= 0xBF58476D1CE4E5B9ULL;
    h ^= h >> 27;
    h *= 0x94D049BB133111EBULL;
    h ^= h >> 31;
    return h;
}

} // namespace

EmbeddingVector normalize(const EmbeddingVector& v) {
    double norm = l2_norm(v);
    if (v.empty() || norm == 0.0 || !std::isfinite(norm))
        throw DimensionMismatchError("cannot normalize a zero or empty vector");
    EmbeddingVector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        out[i] = static_cast<float>(v[i] / norm);
    return out;
}

double l2_norm(const EmbeddingVector& v) {
    double sum = 0.0;
    for (float x : v) sum += static_cast<double>(x) * static_cast<double>(x);
    return std::sqrt(sum);
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.size() != b.size())
        throw DimensionMismatchError("cosine: dimensions differ");
    double dot = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        dot += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    double na = l2_norm(a);
    double nb = l2_norm(b);
    if (na == 0.0 || nb == 0.0)
        throw DimensionMismatchError("cosine: zero vector");
    return dot / (na * nb);
}

void EmbeddingProviderConfig::validate() const {
    if (mode == EmbeddingMode::Remote) {
        if (endpoint.empty())
            throw ConfigError("remote embedding mode requires an endpoint");
        if (text_model.empty() || image_model.empty())
            throw ConfigError("remote embedding mode requires model identifiers");
    }
    if (timeout_seconds <= 0) throw ConfigError("embedding timeout must be positive");
    if (max_in_flight < 1) throw ConfigError("max_in_flight must be at least 1");
}

DeterministicEmbedder::DeterministicEmbedder(std::uint64_t seed) : seed_(seed) {}

EmbeddingVector DeterministicEmbedder::embed_text(const std::string& text) {
    if (text.empty()) throw ConfigError("cannot embed empty text");
    return embed(text, kTextEmbeddingDim);
}

EmbeddingVector DeterministicEmbedder::embed_image(const std::string& bytes) {
    if (bytes.empty()) throw ConfigError("cannot embed an empty byte sequence");
    return embed(bytes, kImageEmbeddingDim);
}

EmbeddingVector DeterministicEmbedder::embed(const std::string& bytes,
                                             std::size_t dim) const {
    EmbeddingVector acc(dim, 0.0f);
    if (bytes.size() >= 3) {
        for (std::size_t i = 0; i + 3 <= bytes.size(); ++i) {
            std::uint64_t h = seeded_hash(bytes.data() + i, 3, seed_);
            float sign = (h >> 63) ? -1.0f : 1.0f;
            acc[h % dim] += sign;
        }
    } else {
        // Inputs shorter than one 3-gram hash as a single unit.
        std::uint64_t h = seeded_hash(bytes.data(), bytes.size(), seed_);
        acc[h % dim] += (h >> 63) ? -1.0f : 1.0f;
    }
    // Contributions can cancel exactly on tiny inputs; keep the function
    // total by falling back to a single deterministic coordinate.
    double norm = l2_norm(acc);
    if (norm == 0.0) {
        std::uint64_t h = seeded_hash(bytes.data(), bytes.size(), seed_ + 1);
        acc[h % dim] = 1.0f;
    }
    return normalize(acc);
}

struct RemoteEmbedder::Impl {
    EmbeddingProviderConfig cfg;
    std::string base;           // scheme://host:port
    std::string path_prefix;    // e.g. /v1
    std::string api_key;
    std::counting_semaphore<> slots;

    explicit Impl(EmbeddingProviderConfig c)
        : cfg(std::move(c)), slots(cfg.max_in_flight) {
        auto scheme_end = cfg.endpoint.find("://");
        if (scheme_end == std::string::npos)
            throw ConfigError("embedding endpoint must include a scheme: " + cfg.endpoint);
        auto path_start = cfg.endpoint.find('/', scheme_end + 3);
        if (path_start == std::string::npos) {
            base = cfg.endpoint;
        } else {
            base = cfg.endpoint.substr(0, path_start);
            path_prefix = cfg.endpoint.substr(path_start);
            while (!path_prefix.empty() && path_prefix.back() == '/')
                path_prefix.pop_back();
        }
        if (const char* key = std::getenv(cfg.api_key_env.c_str())) api_key = key;
    }
};

RemoteEmbedder::RemoteEmbedder(EmbeddingProviderConfig cfg) {
    cfg.validate();
    if (cfg.mode != EmbeddingMode::Remote)
        throw ConfigError("RemoteEmbedder requires remote mode");
    impl_ = std::make_unique<Impl>(std::move(cfg));
}

RemoteEmbedder::~RemoteEmbedder() = default;

EmbeddingVector RemoteEmbedder::embed_text(const std::string& text) {
    if (text.empty()) throw ConfigError("cannot embed empty text");
    return request(impl_->cfg.text_model, text, kTextEmbeddingDim);
}

EmbeddingVector RemoteEmbedder::embed_image(const std::string& bytes) {
    if (bytes.empty()) throw ConfigError("cannot embed an empty byte sequence");
    return request(impl_->cfg.image_model,
                   "data:application/octet-stream;base64," + text::base64_encode(bytes),
                   kImageEmbeddingDim);
}

EmbeddingVector RemoteEmbedder::request(const std::string& model,
                                        const std::string& input,
                                        std::size_t expected_dim) {
    json body{{"model", model}, {"input", json::array({input})}};
    std::string payload = body.dump();

    impl_->slots.acquire();
    struct Release {
        std::counting_semaphore<>& s;
        ~Release() { s.release(); }
    } release{impl_->slots};

    httplib::Headers headers;
    if (!impl_->api_key.empty())
        headers.emplace("Authorization", "Bearer " + impl_->api_key);

    std::string last_error;
    for (int attempt = 0; attempt < 2; ++attempt) { // one retry on transport failure
        httplib::Client client(impl_->base);
        client.set_connection_timeout(static_cast<time_t>(impl_->cfg.timeout_seconds),
                                      0);
        client.set_read_timeout(static_cast<time_t>(impl_->cfg.timeout_seconds), 0);
        auto res = client.Post(impl_->path_prefix + "/embeddings", headers, payload,
                               "application/json");
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 400)
            throw ConfigError("embeddings endpoint returned HTTP " +
                              std::to_string(res->status));
        json reply;
        try {
            reply = json::parse(res->body);
        } catch (const json::exception& e) {
            throw ProtocolError(std::string("embeddings reply is not JSON: ") + e.what());
        }
        if (!reply.contains("data") || !reply["data"].is_array() || reply["data"].empty())
            throw ProtocolError("embeddings reply has no data array");
        EmbeddingVector v;
        try {
            v = reply["data"][0].at("embedding").get<EmbeddingVector>();
        } catch (const json::exception& e) {
            throw ProtocolError(std::string("embeddings reply malformed: ") + e.what());
        }
        if (v.size() != expected_dim)
            throw DimensionMismatchError(
                "embedding dimension mismatch (misconfigured model?): expected " +
                std::to_string(expected_dim) + ", got " + std::to_string(v.size()));
        return normalize(v);
    }
    throw TransportError("embeddings request failed after retry: " + last_error);
}

std::unique_ptr<EmbeddingProvider> make_embedding_provider(
    const EmbeddingProviderConfig& cfg) {
    cfg.validate();
    if (cfg.mode == EmbeddingMode::Remote)
        return std::make_unique<RemoteEmbedder>(cfg);
    return std::make_unique<DeterministicEmbedder>(cfg.seed);
}

} // namespace bladerag
