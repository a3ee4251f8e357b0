#include "bladerag/retrieval.hpp"

#include <algorithm>
#include <unordered_set>

#include "bladerag/errors.hpp"
#include "bladerag/text_utils.hpp"

namespace bladerag {

const char* const kDefaultQuery =
    "comprehensive wind turbine blade damage assessment guidelines including "
    "technical documentation. The image to be analyzed may be taken at cloudy, "
    "night or dusk with bad vision.";

namespace {

// Function-word list used when deriving query keywords.
const std::unordered_set<std::string>& stopwords() {
    static const std::unordered_set<std::string> words = {
        "a",       "about",   "above",  "after",   "again",  "all",    "am",
        "an",      "and",     "any",    "are",     "as",     "at",     "be",
        "because", "been",    "before", "being",   "below",  "between", "both",
        "but",     "by",      "can",    "could",   "did",    "do",     "does",
        "doing",   "down",    "during", "each",    "few",    "for",    "from",
        "further", "had",     "has",    "have",    "having", "he",     "her",
        "here",    "hers",    "him",    "his",     "how",    "i",      "if",
        "in",      "into",    "is",     "it",      "its",    "itself", "just",
        "may",     "me",      "might",  "more",    "most",   "my",     "no",
        "nor",     "not",     "now",    "of",      "off",    "on",     "once",
        "only",    "or",      "other",  "our",     "ours",   "out",    "over",
        "own",     "same",    "she",    "should",  "so",     "some",   "such",
        "than",    "that",    "the",    "their",   "theirs", "them",   "then",
        "there",   "these",   "they",   "this",    "those",  "through", "to",
        "too",     "under",   "until",  "up",      "very",   "was",    "we",
        "were",    "what",    "when",   "where",   "which",  "while",  "who",
        "whom",    "why",     "will",   "with",    "would",  "you",    "your",
        "yours",
    };
    return words;
}

bool is_token_byte(unsigned char c) {
    return text::is_word_byte(c) || c >= 0x80; // keep multi-byte characters whole
}

} // namespace

void QueryContext::validate() const {
    if (top_k < 1 || top_n < 1) throw ConfigError("top_k and top_n must be at least 1");
    if (top_n > top_k) throw ConfigError("top_n must not exceed top_k");
    if (text_query.empty()) throw ConfigError("text query is empty");
}

std::vector<std::string> extract_keywords(const std::string& text_query) {
    if (text_query.empty()) throw ConfigError("cannot extract keywords from an empty query");
    std::vector<std::string> keywords;
    std::unordered_set<std::string> seen;
    std::string token;
    auto flush = [&]() {
        if (token.empty()) return;
        if (!stopwords().count(token) && seen.insert(token).second)
            keywords.push_back(token);
        token.clear();
    };
    for (unsigned char c : text_query) {
        if (is_token_byte(c)) {
            token.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a')
                                                 : static_cast<char>(c));
        } else {
            flush();
        }
    }
    flush();
    return keywords;
}

std::size_t keyword_score(const std::string& content,
                          const std::vector<std::string>& keywords) {
    std::string lowered = text::ascii_lower(content);
    std::size_t hits = 0;
    for (const auto& kw : keywords) {
        if (lowered.find(kw) != std::string::npos) ++hits;
    }
    return hits;
}

double length_factor(std::size_t length_chars) {
    return 1.0 / (0.1 + static_cast<double>(length_chars) / 1000.0);
}

std::vector<RerankCandidate> rerank(std::vector<RerankCandidate> candidates,
                                    const std::vector<std::string>& keywords,
                                    std::size_t top_n) {
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        RerankCandidate& c = candidates[i];
        c.retrieval_rank = i;
        c.keyword_hits = keyword_score(c.content, keywords);
        c.score = static_cast<double>(c.keyword_hits) * length_factor(c.length);
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const RerankCandidate& a, const RerankCandidate& b) {
                  if (a.score != b.score) return a.score > b.score;
                  if (a.retrieval_rank != b.retrieval_rank)
                      return a.retrieval_rank < b.retrieval_rank;
                  return a.id < b.id;
              });
    if (candidates.size() > top_n) candidates.resize(top_n);
    return candidates;
}

HybridHits hybrid_search(EmbeddingProvider& provider, const FlatIndex& text_index,
                         const FlatIndex& image_index, const QueryContext& query) {
    query.validate();
    if (text_index.empty())
        throw IndexError("text index is empty; ingest and build indices first");

    HybridHits hits;
    hits.text = text_index.search(provider.embed_text(query.text_query), query.top_k);
    if (query.image_bytes && !image_index.empty()) {
        hits.image = image_index.search(provider.embed_image(*query.image_bytes),
                                        query.top_k);
    }
    return hits;
}

std::vector<std::string> RetrievalResult::text_ids() const {
    std::vector<std::string> ids;
    ids.reserve(text_docs.size());
    for (const auto& d : text_docs) ids.push_back(d.id);
    return ids;
}

std::vector<std::string> RetrievalResult::image_ids() const {
    std::vector<std::string> ids;
    ids.reserve(image_refs.size());
    for (const auto& r : image_refs) ids.push_back(r.id);
    return ids;
}

RetrievalResult retrieve(const KnowledgeBase& kb, EmbeddingProvider& provider,
                         const FlatIndex& text_index, const FlatIndex& image_index,
                         const QueryContext& query) {
    HybridHits hits = hybrid_search(provider, text_index, image_index, query);

    std::vector<RerankCandidate> candidates;
    candidates.reserve(hits.text.size());
    for (const SearchHit& hit : hits.text) {
        const Chunk* chunk = kb.find_chunk(hit.id);
        if (!chunk)
            throw KnowledgeBaseError("index entry has no chunk in the knowledge base: " +
                                     hit.id);
        RerankCandidate c;
        c.id = hit.id;
        c.content = chunk->text;
        c.length = text::utf8_length(chunk->text);
        candidates.push_back(std::move(c));
    }

    std::vector<std::string> keywords = extract_keywords(query.text_query);

    RetrievalResult result;
    result.query = query.text_query;
    result.top_k = query.top_k;
    result.top_n = query.top_n;
    for (RerankCandidate& c : rerank(std::move(candidates), keywords, query.top_n)) {
        result.text_docs.push_back({std::move(c.id), std::move(c.content), c.score});
    }
    for (const SearchHit& hit : hits.image) {
        if (result.image_refs.size() == query.top_n) break;
        const ImageEntry* image = kb.find_image(hit.id);
        if (!image)
            throw KnowledgeBaseError("index entry has no image in the knowledge base: " +
                                     hit.id);
        result.image_refs.push_back(
            {hit.id, image->description, hit.distance, image->damage_labels});
    }
    return result;
}

} // namespace bladerag
