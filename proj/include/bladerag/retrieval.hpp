#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bladerag/embedding.hpp"
#include "bladerag/knowledge_base.hpp"
#include "bladerag/vector_index.hpp"

namespace bladerag {

/// The query the retriever runs when the caller provides none. Tuned for
/// damage assessment under poor imaging conditions.
extern const char* const kDefaultQuery;

struct QueryContext {
    std::string text_query = kDefaultQuery;
    std::optional<std::string> image_bytes; // inspection image, if any
    std::size_t top_k = 5;                  // initial depth per modality
    std::size_t top_n = 3;                  // final retained context size

    void validate() const; // throws ConfigError unless top_n <= top_k, both >= 1
};

/// Lowercased query tokens with stopwords removed, first-occurrence order,
/// no duplicates. Tokens split on non-alphanumeric boundaries. May be empty
/// when the query is all stopwords.
std::vector<std::string> extract_keywords(const std::string& text_query);

/// Number of distinct keywords contained in the content (case-insensitive
/// substring containment; an indicator per keyword, not an occurrence count).
std::size_t keyword_score(const std::string& content,
                          const std::vector<std::string>& keywords);

/// 1 / (0.1 + length / 1000): shorter, more focused documents score higher.
double length_factor(std::size_t length_chars);

struct RerankCandidate {
    std::string id;
    std::string content;
    std::size_t length = 0;       // characters
    std::size_t keyword_hits = 0; // filled by rerank
    double score = 0.0;           // keyword_hits * length_factor(length)
    std::size_t retrieval_rank = 0;
};

/// Scores every candidate with keyword_score x length_factor, then keeps the
/// top_n by descending score. Ties fall back to the original retrieval rank,
/// then the id. With an all-zero keyword score this degenerates to the
/// retrieval order, which is the intended fallback.
std::vector<RerankCandidate> rerank(std::vector<RerankCandidate> candidates,
                                    const std::vector<std::string>& keywords,
                                    std::size_t top_n);

struct HybridHits {
    std::vector<SearchHit> text;
    std::vector<SearchHit> image;
};

/// Parallel k-nearest-neighbor lookups over both modality indices. The image
/// side is skipped when the query has no image. Throws IndexError when the
/// text index is empty.
HybridHits hybrid_search(EmbeddingProvider& provider, const FlatIndex& text_index,
                         const FlatIndex& image_index, const QueryContext& query);

struct ScoredDoc {
    std::string id;
    std::string content;
    double score = 0.0;

    bool operator==(const ScoredDoc&) const = default;
};

struct ImageRef {
    std::string id;
    std::string description;
    float distance = 0.0f;
    std::vector<std::string> damage_labels;

    bool operator==(const ImageRef&) const = default;
};

struct RetrievalResult {
    std::vector<ScoredDoc> text_docs;  // descending rerank score, <= top_n
    std::vector<ImageRef> image_refs;  // ascending distance, <= top_n
    std::string query;                 // echo of the text query
    std::size_t top_k = 5;
    std::size_t top_n = 3;

    std::vector<std::string> text_ids() const;
    std::vector<std::string> image_ids() const;

    bool operator==(const RetrievalResult&) const = default;
};

/// Full two-stage retrieval: hybrid search, keyword-aware rerank of the text
/// hits, distance-ordered truncation of the image hits.
RetrievalResult retrieve(const KnowledgeBase& kb, EmbeddingProvider& provider,
                         const FlatIndex& text_index, const FlatIndex& image_index,
                         const QueryContext& query);

} // namespace bladerag
