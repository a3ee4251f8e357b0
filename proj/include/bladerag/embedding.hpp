#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace bladerag {

/// Unit-norm float32 vector. 384 dimensions for text, 512 for images.
using EmbeddingVector = std::vector<float>;

inline constexpr std::size_t kTextEmbeddingDim = 384;
inline constexpr std::size_t kImageEmbeddingDim = 512;

/// Scales `v` to unit L2 norm. Direction is preserved; idempotent within
/// 1e-6. Throws DimensionMismatchError on an empty or zero vector.
EmbeddingVector normalize(const EmbeddingVector& v);

double l2_norm(const EmbeddingVector& v);
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

enum class EmbeddingMode { DeterministicTest, Remote };

struct EmbeddingProviderConfig {
    EmbeddingMode mode = EmbeddingMode::DeterministicTest;
    std::uint64_t seed = 42;          // deterministic mode
    std::string endpoint;             // remote mode, e.g. http://host:port/v1
    std::string text_model;           // e.g. all-MiniLM-L6-v2
    std::string image_model;          // e.g. openai/clip-vit-base-patch32
    std::string api_key_env = "EMBED_API_KEY";
    double timeout_seconds = 30.0;
    int max_in_flight = 4;

    void validate() const; // throws ConfigError when remote fields are missing
};

/// Produces unit-norm embeddings for both modalities. Implementations are
/// stateless after construction and safe for concurrent calls.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    /// 384-d unit vector for non-empty UTF-8 text.
    virtual EmbeddingVector embed_text(const std::string& text) = 0;

    /// 512-d unit vector for a non-empty byte sequence.
    virtual EmbeddingVector embed_image(const std::string& bytes) = 0;
};

/// Hermetic embedder for tests: hashes each byte 3-gram of the input with a
/// seeded 64-bit hash; the hash picks a coordinate (mod dim) and a sign
/// (bit 63); the accumulated +/-1 contributions are normalized. A pure
/// function of (bytes, seed, dim).
class DeterministicEmbedder : public EmbeddingProvider {
public:
    explicit DeterministicEmbedder(std::uint64_t seed = 42);

    EmbeddingVector embed_text(const std::string& text) override;
    EmbeddingVector embed_image(const std::string& bytes) override;

    EmbeddingVector embed(const std::string& bytes, std::size_t dim) const;

private:
    std::uint64_t seed_;
};

/// Talks to a remote embeddings endpoint:
///   POST {endpoint}/embeddings  {"model": ..., "input": [...]}
///   -> {"data": [{"embedding": [...]}]}
/// Bearer auth from the configured environment variable. One retry on a
/// transient transport failure; a response of the wrong dimension raises
/// DimensionMismatchError. Replies are normalized before use.
class RemoteEmbedder : public EmbeddingProvider {
public:
    explicit RemoteEmbedder(EmbeddingProviderConfig cfg);
    ~RemoteEmbedder() override;

    EmbeddingVector embed_text(const std::string& text) override;
    EmbeddingVector embed_image(const std::string& bytes) override;

private:
    EmbeddingVector request(const std::string& model, const std::string& input,
                            std::size_t expected_dim);

    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Factory keyed on config.mode.
std::unique_ptr<EmbeddingProvider> make_embedding_provider(
    const EmbeddingProviderConfig& cfg);

} // namespace bladerag
