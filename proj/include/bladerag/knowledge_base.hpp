#pragma once

#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "bladerag/chunking.hpp"

namespace bladerag {

enum class DocKind {
    DamageDescriptions,
    TurbineFeatures,
    MaintenanceLogs,
    ImageMetadataText,
};

std::string to_string(DocKind kind);
DocKind doc_kind_from_string(const std::string& s);

struct DocumentSource {
    std::string id;
    std::string title;
    std::string body;
    DocKind kind = DocKind::DamageDescriptions;

    bool operator==(const DocumentSource&) const = default;
};

/// A reference image plus the textual metadata that makes it retrievable.
struct ImageEntry {
    std::string id;
    std::string description;
    std::string image_locator; // filesystem path or http(s) URL
    std::vector<std::string> damage_labels;
    std::string capture_conditions;

    bool operator==(const ImageEntry&) const = default;
};

/// Dual-modal store of domain knowledge: text documents (chunked on ingest)
/// and reference images whose descriptions are also ingested as documents so
/// both modalities stay linked.
///
/// Concurrency: single writer, many readers. Mutations take the exclusive
/// lock; read accessors take the shared lock.
///
/// On-disk layout (persist/load):
///   docs/{id}.txt        one document per file, first line is the title
///   images/{id}.{ext}    raw image bytes (local images only)
///   images.meta.json     array of image records
///   kb.manifest.json     schema version, chunking config, document registry
class KnowledgeBase {
public:
    explicit KnowledgeBase(ChunkingConfig cfg = {});

    KnowledgeBase(const KnowledgeBase& other);
    KnowledgeBase& operator=(const KnowledgeBase& other);

    /// Chunks and stores a document. Returns the new chunk ids in order.
    /// A per-call chunking override is honored and persisted.
    /// Throws KnowledgeBaseError on duplicate id or empty body.
    std::vector<std::string> add_document(
        const DocumentSource& doc,
        const std::optional<ChunkingConfig>& cfg_override = std::nullopt);

    /// Stores a reference image and ingests its description as an
    /// image-metadata-text document so the text index can reach it.
    /// Local locators must be readable at ingestion time; their bytes are
    /// cached and the stored locator becomes the canonical
    /// "images/{id}{ext}" name. http(s) locators are kept as-is.
    /// Returns the entry id.
    std::string add_reference_image(const ImageEntry& entry);

    const DocumentSource* find_document(const std::string& id) const;
    const Chunk* find_chunk(const std::string& id) const;
    const ImageEntry* find_image(const std::string& id) const;

    /// Raw bytes of a locally stored image; nullopt for URL-backed entries.
    std::optional<std::string> image_bytes(const std::string& id) const;

    std::vector<DocumentSource> documents() const;
    std::vector<Chunk> chunks() const;
    std::vector<ImageEntry> images() const;

    std::size_t document_count() const;
    std::size_t chunk_count() const;
    std::size_t image_count() const;

    const ChunkingConfig& chunking() const { return chunking_; }

    /// Writes the knowledge base to `dir` in the layout above.
    void save(const std::string& dir) const;

    /// Reads a knowledge base back. With a manifest present the recorded
    /// order, kinds and chunking are authoritative; without one the
    /// directory is treated as a raw ingest source (documents in filename
    /// order, kinds inferred from the filename stem).
    static KnowledgeBase load(const std::string& dir,
                              ChunkingConfig default_cfg = {});

    bool operator==(const KnowledgeBase& other) const;

private:
    struct DocRecord {
        DocumentSource doc;
        std::optional<ChunkingConfig> cfg_override;
        std::optional<std::string> derived_from_image;

        bool operator==(const DocRecord&) const = default;
    };

    std::vector<std::string> add_document_locked(
        const DocumentSource& doc,
        const std::optional<ChunkingConfig>& cfg_override,
        std::optional<std::string> derived_from);

    std::string add_image_locked(const ImageEntry& entry,
                                 std::optional<std::string> bytes);

    ChunkingConfig chunking_;
    std::vector<DocRecord> docs_;
    std::vector<Chunk> chunks_;
    std::vector<ImageEntry> images_;
    std::unordered_map<std::string, std::size_t> doc_index_;
    std::unordered_map<std::string, std::size_t> chunk_index_;
    std::unordered_map<std::string, std::size_t> image_index_;
    std::unordered_map<std::string, std::string> image_bytes_;
    mutable std::shared_mutex mutex_;
};

} // namespace bladerag
