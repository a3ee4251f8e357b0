#include "bladerag/knowledge_base.hpp"

#include <algorithm>
#include <filesystem>
#include <mutex>

#include <nlohmann/json.hpp>

#include "bladerag/errors.hpp"
#include "bladerag/text_utils.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace bladerag {

namespace {

constexpr int kSchemaVersion = 1;

bool is_url(const std::string& locator) {
    return locator.rfind("http://", 0) == 0 || locator.rfind("https://", 0) == 0;
}

std::string stored_extension(const std::string& locator) {
    auto ext = fs::path(locator).extension().string();
    return ext.empty() ? ".bin" : ext;
}

json chunking_to_json(const ChunkingConfig& cfg) {
    return json{{"chunk_size", cfg.chunk_size},
                {"chunk_overlap", cfg.chunk_overlap},
                {"separators", cfg.separators}};
}

ChunkingConfig chunking_from_json(const json& j) {
    ChunkingConfig cfg;
    cfg.chunk_size = j.at("chunk_size").get<std::size_t>();
    cfg.chunk_overlap = j.at("chunk_overlap").get<std::size_t>();
    cfg.separators = j.at("separators").get<std::vector<std::string>>();
    return cfg;
}

DocKind infer_kind(const std::string& stem) {
    std::string s = text::ascii_lower(stem);
    if (s.find("maintenance") != std::string::npos || s.find("log") != std::string::npos)
        return DocKind::MaintenanceLogs;
    if (s.find("turbine") != std::string::npos || s.find("feature") != std::string::npos)
        return DocKind::TurbineFeatures;
    return DocKind::DamageDescriptions;
}

} // namespace

std::string to_string(DocKind kind) {
    switch (kind) {
        case DocKind::DamageDescriptions: return "damage-descriptions";
        case DocKind::TurbineFeatures: return "turbine-features";
        case DocKind::MaintenanceLogs: return "maintenance-logs";
        case DocKind::ImageMetadataText: return "image-metadata-text";
    }
    throw KnowledgeBaseError("unknown document kind");
}

DocKind doc_kind_from_string(const std::string& s) {
    if (s == "damage-descriptions") return DocKind::DamageDescriptions;
    if (s == "turbine-features") return DocKind::TurbineFeatures;
    if (s == "maintenance-logs") return DocKind::MaintenanceLogs;
    if (s == "image-metadata-text") return DocKind::ImageMetadataText;
    throw KnowledgeBaseError("unknown document kind: " + s);
}

KnowledgeBase::KnowledgeBase(ChunkingConfig cfg) : chunking_(std::move(cfg)) {
    chunking_.validate();
}

KnowledgeBase::KnowledgeBase(const KnowledgeBase& other) {
    std::shared_lock lock(other.mutex_);
    chunking_ = other.chunking_;
    docs_ = other.docs_;
    chunks_ = other.chunks_;
    images_ = other.images_;
    doc_index_ = other.doc_index_;
    chunk_index_ = other.chunk_index_;
    image_index_ = other.image_index_;
    image_bytes_ = other.image_bytes_;
}

KnowledgeBase& KnowledgeBase::operator=(const KnowledgeBase& other) {
    if (this == &other) return *this;
    KnowledgeBase copy(other);
    std::unique_lock lock(mutex_);
    chunking_ = std::move(copy.chunking_);
    docs_ = std::move(copy.docs_);
    chunks_ = std::move(copy.chunks_);
    images_ = std::move(copy.images_);
    doc_index_ = std::move(copy.doc_index_);
    chunk_index_ = std::move(copy.chunk_index_);
    image_index_ = std::move(copy.image_index_);
    image_bytes_ = std::move(copy.image_bytes_);
    return *this;
}

std::vector<std::string> KnowledgeBase::add_document(
    const DocumentSource& doc, const std::optional<ChunkingConfig>& cfg_override) {
    std::unique_lock lock(mutex_);
    return add_document_locked(doc, cfg_override, std::nullopt);
}

std::vector<std::string> KnowledgeBase::add_document_locked(
    const DocumentSource& doc, const std::optional<ChunkingConfig>& cfg_override,
    std::optional<std::string> derived_from) {
    if (doc.id.empty()) throw KnowledgeBaseError("document id is empty");
    if (doc.body.empty())
        throw KnowledgeBaseError("document body is empty: " + doc.id);
    if (doc_index_.count(doc.id))
        throw KnowledgeBaseError("duplicate document id: " + doc.id);

    const ChunkingConfig& cfg = cfg_override ? *cfg_override : chunking_;
    std::vector<Chunk> chunks = split_document(doc.id, doc.body, cfg);

    doc_index_[doc.id] = docs_.size();
    docs_.push_back({doc, cfg_override, std::move(derived_from)});

    std::vector<std::string> ids;
    ids.reserve(chunks.size());
    for (Chunk& c : chunks) {
        ids.push_back(c.id);
        chunk_index_[c.id] = chunks_.size();
        chunks_.push_back(std::move(c));
    }
    return ids;
}

std::string KnowledgeBase::add_reference_image(const ImageEntry& entry) {
    if (is_url(entry.image_locator)) {
        std::unique_lock lock(mutex_);
        return add_image_locked(entry, std::nullopt);
    }
    std::string bytes;
    try {
        bytes = text::read_file(entry.image_locator);
    } catch (const IoError& e) {
        throw KnowledgeBaseError("unreadable image locator for " + entry.id + ": " +
                                 e.what());
    }
    if (bytes.empty())
        throw KnowledgeBaseError("image file is empty: " + entry.image_locator);

    ImageEntry canonical = entry;
    canonical.image_locator = "images/" + entry.id + stored_extension(entry.image_locator);
    std::unique_lock lock(mutex_);
    return add_image_locked(canonical, std::move(bytes));
}

std::string KnowledgeBase::add_image_locked(const ImageEntry& entry,
                                            std::optional<std::string> bytes) {
    if (entry.id.empty()) throw KnowledgeBaseError("image id is empty");
    if (entry.description.empty())
        throw KnowledgeBaseError("image description is empty: " + entry.id);
    if (image_index_.count(entry.id))
        throw KnowledgeBaseError("duplicate image id: " + entry.id);
    if (doc_index_.count(entry.id))
        throw KnowledgeBaseError("image id collides with a document id: " + entry.id);

    // The description doubles as a text document so the image is reachable
    // through the text index as well.
    DocumentSource derived;
    derived.id = entry.id;
    derived.title = entry.id;
    derived.body = entry.description;
    derived.kind = DocKind::ImageMetadataText;
    add_document_locked(derived, std::nullopt, entry.id);

    image_index_[entry.id] = images_.size();
    images_.push_back(entry);
    if (bytes) image_bytes_[entry.id] = std::move(*bytes);
    return entry.id;
}

const DocumentSource* KnowledgeBase::find_document(const std::string& id) const {
    std::shared_lock lock(mutex_);
    auto it = doc_index_.find(id);
    return it == doc_index_.end() ? nullptr : &docs_[it->second].doc;
}

const Chunk* KnowledgeBase::find_chunk(const std::string& id) const {
    std::shared_lock lock(mutex_);
    auto it = chunk_index_.find(id);
    return it == chunk_index_.end() ? nullptr : &chunks_[it->second];
}

const ImageEntry* KnowledgeBase::find_image(const std::string& id) const {
    std::shared_lock lock(mutex_);
    auto it = image_index_.find(id);
    return it == image_index_.end() ? nullptr : &images_[it->second];
}

std::optional<std::string> KnowledgeBase::image_bytes(const std::string& id) const {
    std::shared_lock lock(mutex_);
    auto it = image_bytes_.find(id);
    if (it == image_bytes_.end()) return std::nullopt;
    return it->second;
}

std::vector<DocumentSource> KnowledgeBase::documents() const {
    std::shared_lock lock(mutex_);
    std::vector<DocumentSource> out;
    out.reserve(docs_.size());
    for (const auto& r : docs_) out.push_back(r.doc);
    return out;
}

std::vector<Chunk> KnowledgeBase::chunks() const {
    std::shared_lock lock(mutex_);
    return chunks_;
}

std::vector<ImageEntry> KnowledgeBase::images() const {
    std::shared_lock lock(mutex_);
    return images_;
}

std::size_t KnowledgeBase::document_count() const {
    std::shared_lock lock(mutex_);
    return docs_.size();
}

std::size_t KnowledgeBase::chunk_count() const {
    std::shared_lock lock(mutex_);
    return chunks_.size();
}

std::size_t KnowledgeBase::image_count() const {
    std::shared_lock lock(mutex_);
    return images_.size();
}

void KnowledgeBase::save(const std::string& dir) const {
    std::shared_lock lock(mutex_);
    std::error_code ec;
    fs::create_directories(fs::path(dir) / "docs", ec);
    if (ec) throw IoError("cannot create knowledge-base directory: " + dir);

    json manifest;
    manifest["schema_version"] = kSchemaVersion;
    manifest["chunking"] = chunking_to_json(chunking_);
    json registry = json::array();
    for (const auto& rec : docs_) {
        json entry{{"id", rec.doc.id}, {"kind", to_string(rec.doc.kind)}};
        if (rec.derived_from_image) entry["derived_from_image"] = *rec.derived_from_image;
        if (rec.cfg_override) entry["chunking"] = chunking_to_json(*rec.cfg_override);
        registry.push_back(std::move(entry));
        if (!rec.derived_from_image) {
            text::write_file((fs::path(dir) / "docs" / (rec.doc.id + ".txt")).string(),
                             rec.doc.title + "\n" + rec.doc.body);
        }
    }
    manifest["documents"] = std::move(registry);
    text::write_file((fs::path(dir) / "kb.manifest.json").string(),
                     manifest.dump(2) + "\n");

    json meta = json::array();
    for (const auto& img : images_) {
        json entry{{"id", img.id},
                   {"description", img.description},
                   {"image_path", img.image_locator}};
        auto bytes = image_bytes_.find(img.id);
        if (bytes != image_bytes_.end()) {
            text::write_file((fs::path(dir) / img.image_locator).string(),
                             bytes->second);
        }
        if (!img.damage_labels.empty()) entry["damage_labels"] = img.damage_labels;
        if (!img.capture_conditions.empty())
            entry["capture_conditions"] = img.capture_conditions;
        meta.push_back(std::move(entry));
    }
    text::write_file((fs::path(dir) / "images.meta.json").string(),
                     meta.dump(2) + "\n");
}

KnowledgeBase KnowledgeBase::load(const std::string& dir, ChunkingConfig default_cfg) {
    if (!fs::is_directory(dir))
        throw KnowledgeBaseError("knowledge-base directory not found: " + dir);

    const fs::path root(dir);
    const fs::path manifest_path = root / "kb.manifest.json";

    struct PreparedImage {
        ImageEntry entry;
        std::optional<std::string> bytes;
    };
    std::vector<PreparedImage> images;
    if (fs::exists(root / "images.meta.json")) {
        json meta;
        try {
            meta = json::parse(text::read_file((root / "images.meta.json").string()));
        } catch (const json::exception& e) {
            throw KnowledgeBaseError(std::string("malformed images.meta.json: ") + e.what());
        }
        if (!meta.is_array())
            throw KnowledgeBaseError("images.meta.json must be an array");
        for (const auto& entry : meta) {
            PreparedImage prepared;
            ImageEntry& img = prepared.entry;
            img.id = entry.at("id").get<std::string>();
            img.description = entry.at("description").get<std::string>();
            std::string path = entry.at("image_path").get<std::string>();
            if (is_url(path)) {
                img.image_locator = path;
            } else {
                fs::path source = fs::path(path).is_absolute() ? fs::path(path)
                                                               : root / path;
                try {
                    prepared.bytes = text::read_file(source.string());
                } catch (const IoError& e) {
                    throw KnowledgeBaseError("unreadable image for " + img.id + ": " +
                                             e.what());
                }
                img.image_locator = "images/" + img.id + stored_extension(path);
            }
            if (entry.contains("damage_labels"))
                img.damage_labels = entry["damage_labels"].get<std::vector<std::string>>();
            if (entry.contains("capture_conditions"))
                img.capture_conditions = entry["capture_conditions"].get<std::string>();
            images.push_back(std::move(prepared));
        }
    }

    auto read_doc = [&](const std::string& id, DocKind kind) {
        std::string raw = text::read_file((root / "docs" / (id + ".txt")).string());
        auto first_newline = raw.find('\n');
        DocumentSource doc;
        doc.id = id;
        doc.kind = kind;
        if (first_newline == std::string::npos) {
            doc.title = raw;
        } else {
            doc.title = raw.substr(0, first_newline);
            doc.body = raw.substr(first_newline + 1);
        }
        return doc;
    };

    if (fs::exists(manifest_path)) {
        json manifest;
        try {
            manifest = json::parse(text::read_file(manifest_path.string()));
        } catch (const json::exception& e) {
            throw KnowledgeBaseError(std::string("malformed kb.manifest.json: ") + e.what());
        }
        int version = manifest.at("schema_version").get<int>();
        if (version != kSchemaVersion)
            throw KnowledgeBaseError("knowledge-base schema version mismatch: expected " +
                                     std::to_string(kSchemaVersion) + ", found " +
                                     std::to_string(version));

        KnowledgeBase kb(chunking_from_json(manifest.at("chunking")));
        std::unordered_map<std::string, std::size_t> image_pos;
        for (std::size_t i = 0; i < images.size(); ++i) image_pos[images[i].entry.id] = i;

        for (const auto& entry : manifest.at("documents")) {
            std::string id = entry.at("id").get<std::string>();
            DocKind kind = doc_kind_from_string(entry.at("kind").get<std::string>());
            std::optional<ChunkingConfig> cfg_override;
            if (entry.contains("chunking"))
                cfg_override = chunking_from_json(entry["chunking"]);
            std::unique_lock lock(kb.mutex_);
            if (entry.contains("derived_from_image")) {
                std::string image_id = entry["derived_from_image"].get<std::string>();
                auto pos = image_pos.find(image_id);
                if (pos == image_pos.end())
                    throw KnowledgeBaseError("manifest references unknown image: " + image_id);
                PreparedImage& prepared = images[pos->second];
                kb.add_image_locked(prepared.entry, std::move(prepared.bytes));
            } else {
                kb.add_document_locked(read_doc(id, kind), cfg_override, std::nullopt);
            }
        }
        return kb;
    }

    // Raw ingest: no manifest yet. Deterministic order, inferred kinds.
    KnowledgeBase kb(std::move(default_cfg));
    std::vector<std::string> stems;
    if (fs::is_directory(root / "docs")) {
        for (const auto& f : fs::directory_iterator(root / "docs")) {
            if (f.path().extension() == ".txt") stems.push_back(f.path().stem().string());
        }
    }
    std::sort(stems.begin(), stems.end());
    for (const auto& stem : stems) {
        std::unique_lock lock(kb.mutex_);
        kb.add_document_locked(read_doc(stem, infer_kind(stem)), std::nullopt,
                               std::nullopt);
    }
    for (auto& prepared : images) {
        std::unique_lock lock(kb.mutex_);
        kb.add_image_locked(prepared.entry, std::move(prepared.bytes));
    }
    return kb;
}

bool KnowledgeBase::operator==(const KnowledgeBase& other) const {
    if (this == &other) return true;
    std::shared_lock lhs(mutex_, std::defer_lock);
    std::shared_lock rhs(other.mutex_, std::defer_lock);
    std::lock(lhs, rhs);
    return chunking_ == other.chunking_ && docs_ == other.docs_ &&
           chunks_ == other.chunks_ && images_ == other.images_ &&
           image_bytes_ == other.image_bytes_;
}

} // namespace bladerag
